//! Coherence-vector representation: Hermitian trace-orthonormal bases and the
//! real matrices `G` driving `dv/dt = G v`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, is_hermitian, CMat, RMat, RVec, C64};
use crate::model::{LindbladModel, PauliString};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    BlochBall,
    GellMann,
}

#[derive(Clone, Debug)]
pub struct HermitianBasis {
    dim: usize,
    kind: BasisKind,
    elements: Vec<CMat>,
    paulis: Vec<PauliString>,
    identity_index: usize,
}

impl HermitianBasis {
    pub fn new(dim: usize, kind: BasisKind) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Basis("Hilbert dimension must be at least 2".into()));
        }
        match kind {
            BasisKind::BlochBall => {
                if !dim.is_power_of_two() {
                    return Err(Error::Basis(format!("Bloch-ball basis needs a power-of-two dimension, got {dim}")));
                }
                let n = dim.trailing_zeros() as usize;
                let paulis: Vec<PauliString> = (0..dim * dim).map(|k| PauliString::from_index(k, n)).collect();
                let elements = paulis.par_iter().map(|p| p.matrix()).collect();
                Ok(HermitianBasis { dim, kind, elements, paulis, identity_index: 0 })
            }
            BasisKind::GellMann => Ok(HermitianBasis {
                dim,
                kind,
                elements: gell_mann(dim),
                paulis: Vec::new(),
                identity_index: 0,
            }),
        }
    }

    /// Bloch-ball basis when the dimension allows it, generalised Gell-Mann otherwise.
    pub fn natural(dim: usize) -> Result<Self> {
        if dim.is_power_of_two() {
            Self::new(dim, BasisKind::BlochBall)
        } else {
            Self::new(dim, BasisKind::GellMann)
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of basis elements, `N^2`.
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn identity_index(&self) -> usize {
        self.identity_index
    }

    pub fn element(&self, j: usize) -> &CMat {
        &self.elements[j]
    }

    pub fn elements(&self) -> &[CMat] {
        &self.elements
    }

    pub fn labels(&self) -> Vec<String> {
        match self.kind {
            BasisKind::BlochBall => self.paulis.iter().map(|p| p.to_string()).collect(),
            BasisKind::GellMann => (0..self.len()).map(|k| format!("F{k}")).collect(),
        }
    }

    /// `tr(M F_j)` for every basis element.
    pub fn coeffs_complex(&self, m: &CMat) -> Vec<C64> {
        match self.kind {
            BasisKind::BlochBall => {
                let s = (self.dim as f64).sqrt().recip();
                self.paulis.iter().map(|p| p.trace_with(m) * s).collect()
            }
            BasisKind::GellMann => self
                .elements
                .iter()
                .map(|f| m.iter().zip(f.iter()).map(|(a, b)| a * b.conj()).sum())
                .collect(),
        }
    }

    /// Real parts of `tr(M F_j)`; exact coordinates when `M` is Hermitian.
    pub fn coeffs(&self, m: &CMat) -> RVec {
        RVec::from_iterator(self.len(), self.coeffs_complex(m).into_iter().map(|z| z.re))
    }

    /// `sum_j v_j F_j`.
    pub fn operator(&self, v: &[f64]) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for (vj, f) in v.iter().zip(&self.elements) {
            if *vj != 0.0 {
                out += f * c(*vj, 0.0);
            }
        }
        out
    }

    pub fn rho_to_v(&self, rho: &CMat) -> Result<RVec> {
        if rho.nrows() != self.dim || rho.ncols() != self.dim {
            return Err(Error::validation("rho", "dimension mismatch"));
        }
        if !is_hermitian(rho, 1e-9) {
            return Err(Error::validation("rho", "density operator is not Hermitian"));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
            return Err(Error::validation("rho", format!("trace {} is not 1", tr.re)));
        }
        Ok(self.coeffs(rho))
    }

    pub fn v_to_rho(&self, v: &RVec) -> CMat {
        self.operator(v.as_slice())
    }

    /// Coordinates of the stationary maximally-mixed state, `e_identity / sqrt(N)`.
    pub fn identity_vector(&self) -> RVec {
        let mut v = RVec::zeros(self.len());
        v[self.identity_index] = (self.dim as f64).sqrt().recip();
        v
    }

    /// `X F_l` for element `l`, using the monomial structure when available.
    fn right_mul(&self, x: &CMat, l: usize) -> CMat {
        match self.kind {
            BasisKind::BlochBall => self.paulis[l].right_mul(x) * c((self.dim as f64).sqrt().recip(), 0.0),
            BasisKind::GellMann => x * &self.elements[l],
        }
    }

    fn left_mul(&self, x: &CMat, l: usize) -> CMat {
        match self.kind {
            BasisKind::BlochBall => self.paulis[l].left_mul(x) * c((self.dim as f64).sqrt().recip(), 0.0),
            BasisKind::GellMann => &self.elements[l] * x,
        }
    }

    /// Real matrix of a linear superoperator: column `l` holds the
    /// coordinates of `f(F_l)`.
    pub fn superoperator<F>(&self, f: F) -> RMat
    where
        F: Fn(usize, &CMat) -> CMat + Sync,
    {
        let b = self.len();
        let cols: Vec<RVec> = (0..b).into_par_iter().map(|l| self.coeffs(&f(l, &self.elements[l]))).collect();
        RMat::from_columns(&cols)
    }

    /// `Xi(X)_{jl} = -i tr([X, F_l] F_j)`. Real and skew-symmetric for Hermitian `X`.
    pub fn h_to_g(&self, x: &CMat) -> RMat {
        self.superoperator(|l, _| (self.right_mul(x, l) - self.left_mul(x, l)) * c(0.0, -1.0))
    }

    pub fn liouvillian_to_g(&self, model: &LindbladModel) -> Result<GModel> {
        if model.dim != self.dim {
            return Err(Error::validation("basis", "basis and model dimensions differ"));
        }
        let h0 = &model.drift;
        let channels: Vec<(f64, &CMat, CMat, CMat)> = model
            .noise
            .iter()
            .filter(|ch| ch.rate > 0.0)
            .map(|ch| {
                let d = &ch.operator;
                (ch.rate, d, d.adjoint(), d.adjoint() * d)
            })
            .collect();
        let g0 = self.superoperator(|l, f| {
            let mut out = (self.right_mul(h0, l) - self.left_mul(h0, l)) * c(0.0, -1.0);
            for (rate, d, dd, dtd) in &channels {
                let jump = (*d * f) * dd;
                let anti = self.right_mul(dtd, l) + self.left_mul(dtd, l);
                out += (jump - anti * c(0.5, 0.0)) * c(*rate, 0.0);
            }
            out
        });
        let gc = model.controls.iter().map(|h| self.h_to_g(h)).collect();
        Ok(GModel { basis: Arc::new(self.clone()), g0, gc })
    }
}

/// Generalised Gell-Mann basis: identity first, then symmetric and
/// antisymmetric off-diagonal pairs, then traceless diagonals.
pub fn gell_mann(n: usize) -> Vec<CMat> {
    let mut out = Vec::with_capacity(n * n);
    out.push(CMat::identity(n, n) * c((n as f64).sqrt().recip(), 0.0));
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..n {
        for k in j + 1..n {
            let mut s = CMat::zeros(n, n);
            s[(j, k)] = c(r, 0.0);
            s[(k, j)] = c(r, 0.0);
            out.push(s);
            let mut a = CMat::zeros(n, n);
            a[(j, k)] = c(0.0, -r);
            a[(k, j)] = c(0.0, r);
            out.push(a);
        }
    }
    for l in 1..n {
        let norm = ((l * (l + 1)) as f64).sqrt().recip();
        let mut d = CMat::zeros(n, n);
        for k in 0..l {
            d[(k, k)] = c(norm, 0.0);
        }
        d[(l, l)] = c(-(l as f64) * norm, 0.0);
        out.push(d);
    }
    out
}

/// Real bilinear model `G(u) = G0 + sum_k u_k G_k`.
#[derive(Clone, Debug)]
pub struct GModel {
    pub basis: Arc<HermitianBasis>,
    pub g0: RMat,
    pub gc: Vec<RMat>,
}

impl GModel {
    pub fn from_model(model: &LindbladModel) -> Result<Self> {
        HermitianBasis::natural(model.dim)?.liouvillian_to_g(model)
    }

    pub fn bdim(&self) -> usize {
        self.g0.nrows()
    }

    pub fn n_controls(&self) -> usize {
        self.gc.len()
    }

    pub fn g(&self, u: &[f64]) -> RMat {
        let mut g = self.g0.clone();
        for (uk, gk) in u.iter().zip(&self.gc) {
            if *uk != 0.0 {
                g += gk * *uk;
            }
        }
        g
    }

    pub fn export(&self, threshold: f64) -> GModelExport {
        let triplets = |m: &RMat| {
            let mut t = Vec::new();
            for j in 0..m.ncols() {
                for i in 0..m.nrows() {
                    let x = m[(i, j)];
                    if x.abs() > threshold {
                        t.push((i, j, x));
                    }
                }
            }
            t
        };
        GModelExport {
            basis: BasisDescriptor {
                kind: self.basis.kind(),
                hilbert_dim: self.basis.dim(),
                identity_index: self.basis.identity_index(),
                labels: self.basis.labels(),
            },
            bdim: self.bdim(),
            g0: triplets(&self.g0),
            gc: self.gc.iter().map(triplets).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BasisDescriptor {
    pub kind: BasisKind,
    pub hilbert_dim: usize,
    pub identity_index: usize,
    pub labels: Vec<String>,
}

/// Sparse `(row, col, value)` export of a [`GModel`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GModelExport {
    pub basis: BasisDescriptor,
    pub bdim: usize,
    pub g0: Vec<(usize, usize, f64)>,
    pub gc: Vec<Vec<(usize, usize, f64)>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, random_hermitian, rng};
    use crate::model::NoiseChannel;

    fn gram_ok(b: &HermitianBasis) {
        let n = b.len();
        for i in 0..n {
            assert!(is_hermitian(b.element(i), 1e-14));
            for j in 0..n {
                let g = (b.element(i).adjoint() * b.element(j)).trace();
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((g - c(e, 0.0)).norm() < 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn bases_are_orthonormal() {
        gram_ok(&HermitianBasis::new(2, BasisKind::BlochBall).unwrap());
        gram_ok(&HermitianBasis::new(4, BasisKind::BlochBall).unwrap());
        let gm = HermitianBasis::new(3, BasisKind::GellMann).unwrap();
        assert_eq!(gm.len(), 9);
        gram_ok(&gm);
        assert!((gm.element(0) - CMat::identity(3, 3) * c(3f64.sqrt().recip(), 0.0)).norm() < 1e-15);
        assert!(HermitianBasis::new(3, BasisKind::BlochBall).is_err());
    }

    #[test]
    fn qubit_ground_state_vector() {
        let b = HermitianBasis::new(2, BasisKind::BlochBall).unwrap();
        let mut rho = CMat::zeros(2, 2);
        rho[(0, 0)] = c(1.0, 0.0);
        let v = b.rho_to_v(&rho).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v - RVec::from_vec(vec![r, 0.0, 0.0, r])).norm() < 1e-15);
        let bad = CMat::identity(2, 2);
        assert!(b.rho_to_v(&bad).is_err());
    }

    #[test]
    fn maximally_mixed_state() {
        let b = HermitianBasis::new(8, BasisKind::BlochBall).unwrap();
        let v = b.rho_to_v(&(CMat::identity(8, 8) * c(0.125, 0.0))).unwrap();
        assert!((v - b.identity_vector()).norm() < 1e-14);
    }

    #[test]
    fn sigma_z_rotates_x_and_y() {
        let b = HermitianBasis::new(2, BasisKind::BlochBall).unwrap();
        let g = b.h_to_g(b.element(3));
        // Only the (x, y) entries are nonzero.
        for i in 0..4 {
            for j in 0..4 {
                let nz = (i, j) == (1, 2) || (i, j) == (2, 1);
                assert_eq!(g[(i, j)].abs() > 1e-12, nz, "({i},{j})");
            }
        }
        assert!((g[(1, 2)] + g[(2, 1)]).abs() < 1e-15);
        assert!(b.h_to_g(&CMat::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn single_qubit_dephasing() {
        let b = HermitianBasis::new(2, BasisKind::BlochBall).unwrap();
        let model = LindbladModel::new(
            CMat::zeros(2, 2),
            vec![],
            vec![NoiseChannel { rate: 0.7, operator: b.element(3).clone() }],
        )
        .unwrap();
        let g = b.liouvillian_to_g(&model).unwrap();
        let expect = RMat::from_diagonal(&RVec::from_vec(vec![0.0, -0.7, -0.7, 0.0]));
        assert!((g.g0 - expect).norm() < 1e-14);
    }

    #[test]
    fn fast_and_dense_paths_agree() {
        let mut r = rng(11);
        let h = random_hermitian(4, &mut r);
        let b = HermitianBasis::new(4, BasisKind::BlochBall).unwrap();
        let fast = b.h_to_g(&h);
        let dense = RMat::from_fn(16, 16, |j, l| {
            ((commutator(&h, b.element(l)) * b.element(j)).trace() * c(0.0, -1.0)).re
        });
        assert!((fast - dense).norm() < 1e-12);
    }

    #[test]
    fn noiseless_drift_matches_h_to_g() {
        let mut r = rng(2);
        let h = random_hermitian(3, &mut r);
        let model = LindbladModel::new(h.clone(), vec![], vec![]).unwrap();
        let b = HermitianBasis::new(3, BasisKind::GellMann).unwrap();
        let g = b.liouvillian_to_g(&model).unwrap();
        assert!((&g.g0 - b.h_to_g(&h)).norm() < 1e-12);
        assert!((&g.g0 + g.g0.transpose()).norm() < 1e-12);
    }

    #[test]
    fn export_triplets() {
        let b = HermitianBasis::new(2, BasisKind::BlochBall).unwrap();
        let model = LindbladModel::new(b.element(3).clone(), vec![b.element(1).clone()], vec![]).unwrap();
        let g = b.liouvillian_to_g(&model).unwrap();
        let e = g.export(1e-14);
        assert_eq!(e.g0.len(), 2);
        assert_eq!(e.gc.len(), 1);
        assert_eq!(e.basis.labels, vec!["I", "X", "Y", "Z"]);
    }
}
