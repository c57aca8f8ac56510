//! Noise interaction algebra, its commutant and the k-sector decomposition.

use serde::{Deserialize, Serialize};

use crate::cvs::{gell_mann, HermitianBasis};
use crate::error::{Error, Result};
use crate::linalg::{
    c, cluster_sorted, complement, eigh, eigh_real, gaussian_vec, intersect, null_space, orthonormalize_columns,
    select_columns, sub_rng, CMat, RMat, C64,
};
use crate::model::LindbladModel;
use crate::tol::Tolerances;

/// Hilbert-Schmidt orthonormal basis of a unital *-algebra of N x N matrices.
#[derive(Clone, Debug)]
pub struct MatrixAlgebra {
    pub dim: usize,
    pub basis: Vec<CMat>,
}

fn hs_inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Complex Gram-Schmidt step; returns the normalised residual if it is not
/// negligible.
fn hs_residual(basis: &[CMat], x: &CMat, tol: f64) -> Option<CMat> {
    let scale = x.norm();
    if scale == 0.0 {
        return None;
    }
    let mut r = x.clone();
    for _ in 0..2 {
        for b in basis {
            let d = hs_inner(b, &r);
            r -= b * d;
        }
    }
    let nr = r.norm();
    (nr > tol * scale).then(|| r / c(nr, 0.0))
}

impl MatrixAlgebra {
    /// Smallest unital *-algebra containing `generators`.
    pub fn generated_by(dim: usize, generators: &[CMat], tol: f64) -> Self {
        let mut gens: Vec<CMat> = Vec::new();
        for g in generators {
            gens.push(g.clone());
            gens.push(g.adjoint());
        }
        let mut basis = vec![CMat::identity(dim, dim) / c((dim as f64).sqrt(), 0.0)];
        let mut idx = 0;
        while idx < basis.len() {
            let current = basis[idx].clone();
            for g in &gens {
                if let Some(r) = hs_residual(&basis, &(g * &current), tol) {
                    basis.push(r);
                }
            }
            idx += 1;
        }
        MatrixAlgebra { dim, basis }
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// Hermitian spanning set: `(B + B†)/2` and `(B - B†)/2i` for each basis element.
    pub fn hermitian_elements(&self) -> Vec<CMat> {
        let mut out = Vec::new();
        for b in &self.basis {
            let re = (b + b.adjoint()) * c(0.5, 0.0);
            let im = (b - b.adjoint()) * c(0.0, -0.5);
            for h in [re, im] {
                if h.norm() > 1e-12 {
                    out.push(h);
                }
            }
        }
        out
    }

    /// Largest residual of the closure properties over basis pairs.
    pub fn closure_residual(&self) -> f64 {
        let proj_res = |x: &CMat| {
            let mut r = x.clone();
            for b in &self.basis {
                let d = hs_inner(b, &r);
                r -= b * d;
            }
            r.norm()
        };
        let mut worst = 0.0f64;
        for a in &self.basis {
            worst = worst.max(proj_res(&a.adjoint()));
            for b in &self.basis {
                worst = worst.max(proj_res(&(a * b)));
            }
        }
        worst
    }
}

/// Algebra generated by the identity and every noise operator (and adjoint)
/// with a positive rate.
pub fn interaction_algebra(model: &LindbladModel) -> MatrixAlgebra {
    let gens: Vec<CMat> = model.noise.iter().filter(|ch| ch.rate > 0.0).map(|ch| ch.operator.clone()).collect();
    MatrixAlgebra::generated_by(model.dim, &gens, 1e-9)
}

/// Coherence-vector basis of the Hermitian operators commuting with every
/// element of `ops`: `∩ ker h_to_g(A)`.
pub fn hermitian_commutant(basis: &HermitianBasis, ops: &[CMat], tol: &Tolerances) -> RMat {
    let b = basis.len();
    let mut k = RMat::identity(b, b);
    for a in ops {
        if k.ncols() == 0 {
            break;
        }
        // Identity-proportional elements constrain nothing.
        let tr = a.trace() / c(a.nrows() as f64, 0.0);
        if (a - CMat::identity(a.nrows(), a.nrows()) * tr).norm() <= 1e-12 * a.norm().max(1.0) {
            continue;
        }
        let g = basis.h_to_g(a);
        let m = &g * &k;
        let scale = g.norm().max(1.0);
        // Cut relative to the operator, not the restricted product.
        let ker = null_space(&m, tol.rank, tol.rank * scale);
        k = &k * ker;
    }
    orthonormalize_columns(&k)
}

/// One k-sector: `m` copies of a `k̄`-dimensional irreducible block.
#[derive(Clone, Debug)]
pub struct Sector {
    pub order: usize,
    pub multiplicity: usize,
    /// N x (m k̄) orthonormal vectors; column `a k̄ + j` is basis vector `j`
    /// of copy `a`.
    pub vectors: CMat,
    /// Coherence-vector core basis (Bdim x k̄²), image of `I_m ⊗ Herm(k̄)`.
    pub core: RMat,
}

impl Sector {
    pub fn dim(&self) -> usize {
        self.order * self.multiplicity
    }

    /// Vectors of copy `a` (N x k̄).
    pub fn copy(&self, a: usize) -> CMat {
        self.vectors.columns(a * self.order, self.order).into_owned()
    }

    /// `sum_a W_a X W_a†` for a k̄ x k̄ operator `X`.
    pub fn ampliate(&self, x: &CMat) -> CMat {
        let n = self.vectors.nrows();
        let mut out = CMat::zeros(n, n);
        for a in 0..self.multiplicity {
            let w = self.copy(a);
            out += &w * x * w.adjoint();
        }
        out
    }

    /// `W_a† X W_a`.
    pub fn compress(&self, x: &CMat, a: usize) -> CMat {
        let w = self.copy(a);
        w.adjoint() * x * w
    }

    /// Orthogonal projector onto the sector's Hilbert subspace.
    pub fn projector(&self) -> CMat {
        &self.vectors * self.vectors.adjoint()
    }
}

#[derive(Clone, Debug)]
pub struct CommutantStructure {
    pub sectors: Vec<Sector>,
    /// Unitary with `Λ X Λ†` block-diagonal for every commutant element.
    pub lambda: CMat,
    /// Coherence-vector basis of the Hermitian commutant (image of Π_NC).
    pub nc: RMat,
    /// Coherence-vector basis of the algebra's centre.
    pub center: RMat,
    pub algebra_dim: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectorSummary {
    pub order: usize,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureReport {
    pub sectors: Vec<SectorSummary>,
    pub nc_dim: usize,
    pub algebra_dim: usize,
    pub sector_ordering: String,
    pub seed: u64,
}

impl CommutantStructure {
    pub fn nc_dim(&self) -> usize {
        self.nc.ncols()
    }

    /// Sector by 1-based index.
    pub fn sector(&self, k: usize) -> Result<&Sector> {
        if k == 0 || k > self.sectors.len() {
            return Err(Error::InvalidParameter(format!(
                "sector {k} does not exist (valid: 1..={})",
                self.sectors.len()
            )));
        }
        Ok(&self.sectors[k - 1])
    }

    pub fn report(&self) -> StructureReport {
        StructureReport {
            sectors: self
                .sectors
                .iter()
                .map(|s| SectorSummary { order: s.order, multiplicity: s.multiplicity })
                .collect(),
            nc_dim: self.nc_dim(),
            algebra_dim: self.algebra_dim,
            sector_ordering: SECTOR_ORDERING.to_string(),
            seed: self.seed,
        }
    }
}

pub const SECTOR_ORDERING: &str = "ascending order, then multiplicity, then first basis index";

/// Block-diagonalises the commutant of `alg`.
pub fn commutant_structure(
    alg: &MatrixAlgebra,
    basis: &HermitianBasis,
    seed: u64,
    tol: &Tolerances,
) -> Result<CommutantStructure> {
    let n = alg.dim;
    if basis.dim() != n {
        return Err(Error::validation("basis", "basis and algebra dimensions differ"));
    }
    let herm = alg.hermitian_elements();
    let nc = hermitian_commutant(basis, &herm, tol);

    let alg_v = {
        let cols: Vec<_> = herm.iter().map(|h| basis.coeffs(h)).collect();
        let m = RMat::from_columns(&cols);
        orthonormalize_columns(&m)
    };
    let center = intersect(&alg_v, &nc, tol.intersect);
    let n_sectors = center.ncols();

    // Hilbert-space split by eigenspaces of a random central element.
    let mut clusters = None;
    let mut last_gap = 0.0;
    for attempt in 0..2u64 {
        let mut r = sub_rng(seed, 100 + attempt);
        let z = &center * gaussian_vec(n_sectors, &mut r);
        let x = basis.operator(z.as_slice());
        let x = &x / c(x.norm().max(1e-300), 0.0);
        let (vals, vecs) = eigh(&x);
        let runs = cluster_sorted(&vals, tol.cluster_gap);
        last_gap = runs.windows(2).map(|w| vals[w[1].start] - vals[w[0].end - 1]).fold(f64::INFINITY, f64::min);
        if runs.len() == n_sectors {
            clusters = Some((runs, vecs));
            break;
        }
    }
    let (runs, vecs) = clusters.ok_or(Error::DegenerateClustering { gap: last_gap })?;

    let nc_ops: Vec<CMat> = (0..nc.ncols()).map(|j| basis.operator(nc.column(j).as_slice())).collect();
    let diag_probe = {
        let d = CMat::from_diagonal(&nalgebra::DVector::from_fn(n, |i, _| c((i + 1) as f64, 0.0)));
        let v = basis.coeffs(&d);
        let p = &nc * nc.tr_mul(&v);
        basis.operator(p.as_slice())
    };

    let mut sectors = Vec::with_capacity(n_sectors);
    for (s, run) in runs.iter().enumerate() {
        let e = select_columns(&vecs, &run.clone().collect::<Vec<_>>());
        sectors.push(build_sector(&e, &nc_ops, &diag_probe, basis, seed, s as u64, tol)?);
    }

    let key = |s: &Sector| {
        let p = s.projector();
        let first = (0..n).find(|&i| p[(i, i)].re > 1e-6).unwrap_or(n);
        (s.order, s.multiplicity, first)
    };
    sectors.sort_by_key(key);

    let all: Vec<CMat> = sectors.iter().map(|s| s.vectors.clone()).collect();
    let w = CMat::from_columns(&all.iter().flat_map(|m| m.column_iter().map(|c| c.into_owned())).collect::<Vec<_>>());
    if w.ncols() != n {
        return Err(Error::Numerical(format!("sector vectors cover {} of {n} dimensions", w.ncols())));
    }
    let lambda = w.adjoint();
    let covered: usize = sectors.iter().map(|s| s.order * s.order).sum();
    if covered != nc.ncols() {
        return Err(Error::Numerical(format!(
            "sector algebras have total dimension {covered} but the commutant has {}",
            nc.ncols()
        )));
    }
    Ok(CommutantStructure { sectors, lambda, nc, center, algebra_dim: alg.len(), seed })
}

fn build_sector(
    e: &CMat,
    nc_ops: &[CMat],
    probe: &CMat,
    basis: &HermitianBasis,
    seed: u64,
    label: u64,
    tol: &Tolerances,
) -> Result<Sector> {
    let d = e.ncols();
    let compress = |x: &CMat| e.adjoint() * x * e;

    // Real dimension of the compressed Hermitian commutant is k̄².
    let rows: Vec<_> = nc_ops.iter().map(|x| crate::linalg::realify(&compress(x))).collect();
    let stacked = RMat::from_columns(&rows);
    let r = crate::linalg::rank(&stacked, tol.rank, 1e-12);
    let order = (r as f64).sqrt().round() as usize;
    if order == 0 || order * order != r || !d.is_multiple_of(order) {
        return Err(Error::Numerical(format!(
            "sector of dimension {d} has commutant rank {r}, which is not a square dividing it"
        )));
    }
    let mult = d / order;

    // Split into k̄ eigenspaces of size m of a generic sector element.
    let mut rng = sub_rng(seed, 1000 + label);
    let mut candidates = vec![compress(probe)];
    for _ in 0..3 {
        let g = gaussian_vec(nc_ops.len(), &mut rng);
        let mut x = CMat::zeros(d, d);
        for (gi, op) in g.iter().zip(nc_ops) {
            x += compress(op) * c(*gi, 0.0);
        }
        candidates.push(x);
    }
    let mut groups = None;
    for y in &candidates {
        let y = y / c(y.norm().max(1e-300), 0.0);
        let (vals, vecs) = eigh(&y);
        let runs = cluster_sorted(&vals, tol.cluster_gap);
        if runs.len() == order && runs.iter().all(|r| r.len() == mult) {
            groups = Some(
                runs.iter()
                    .map(|r| select_columns(&vecs, &r.clone().collect::<Vec<_>>()))
                    .collect::<Vec<CMat>>(),
            );
            break;
        }
    }
    let groups = groups.ok_or(Error::DegenerateClustering { gap: tol.cluster_gap })?;

    // Align the copies so that column a of every group belongs to copy a.
    let mut aligned: Vec<CMat> = Vec::with_capacity(order);
    if mult == 1 {
        aligned = groups;
    } else {
        let g = gaussian_vec(nc_ops.len(), &mut rng);
        let mut rr = CMat::zeros(d, d);
        for (gi, op) in g.iter().zip(nc_ops) {
            rr += compress(op) * c(*gi, 0.0);
        }
        aligned.push(groups[0].clone());
        for gj in &groups[1..] {
            let t = gj.adjoint() * &rr * &groups[0];
            let s = t.norm() / (mult as f64).sqrt();
            if s < 1e-8 {
                return Err(Error::DegenerateClustering { gap: s });
            }
            aligned.push(gj * t / c(s, 0.0));
        }
    }

    let n = e.nrows();
    let mut vectors = CMat::zeros(n, d);
    for a in 0..mult {
        for (j, g) in aligned.iter().enumerate() {
            let col = e * g.column(a);
            vectors.set_column(a * order + j, &col);
        }
    }
    fix_phases(&mut vectors, mult, order);

    let mut sector = Sector { order, multiplicity: mult, vectors, core: RMat::zeros(basis.len(), 0) };
    let scale = c((mult as f64).sqrt().recip(), 0.0);
    let cols: Vec<_> = gell_mann(order).iter().map(|h| basis.coeffs(&(sector.ampliate(h) * scale))).collect();
    sector.core = RMat::from_columns(&cols);
    Ok(sector)
}

/// Makes the largest component of each copy-0 vector real and positive and
/// applies the same phase to the matching vectors of the other copies.
fn fix_phases(v: &mut CMat, mult: usize, order: usize) {
    for j in 0..order {
        let col = v.column(j);
        let mut best = 0;
        for i in 0..col.len() {
            if col[i].norm() > col[best].norm() + 1e-12 {
                best = i;
            }
        }
        let z = col[best];
        let ph = if z.norm() > 0.0 { z.conj() / z.norm() } else { c(1.0, 0.0) };
        for a in 0..mult {
            let mut cc = v.column_mut(a * order + j);
            cc *= ph;
        }
    }
}

/// Split of the drift matrix into a lossless invariant block and a strictly
/// dissipative remainder.
#[derive(Clone, Debug)]
pub struct DriftSplit {
    /// Orthonormal basis of the lossless invariant subspace (Bdim x L).
    pub lossless: RMat,
    /// Orthonormal basis of its complement.
    pub lossy: RMat,
    /// Unitary `Λ_cvs` with `g0 = Λ† (iD ⊕ G_⊥) Λ`.
    pub lambda: CMat,
    pub d: Vec<f64>,
    pub g_perp: RMat,
    /// `max Re λ(G_⊥)`, negative when the split is clean.
    pub perp_abscissa: f64,
    pub residual: f64,
}

/// Computes the largest `g0`-invariant subspace inside `ker(g0 + g0ᵀ)` and
/// checks the remainder is Hurwitz.
pub fn drift_block_split(g0: &RMat, tol: &Tolerances) -> Result<DriftSplit> {
    let b = g0.nrows();
    let s = g0 + g0.transpose();
    let (vals, vecs) = eigh_real(&s);
    let smax = vals.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1e-300);
    let thr = (tol.rank * smax).max(1e-12);
    if vals.last().copied().unwrap_or(0.0) > thr {
        return Err(Error::SplitFailed {
            residual: *vals.last().unwrap(),
            msg: "symmetric part of the drift is not negative semidefinite".into(),
        });
    }
    let keep: Vec<usize> = (0..b).filter(|&i| vals[i].abs() <= thr).collect();
    let mut k = select_columns(&vecs, &keep);
    let scale = g0.norm().max(1.0);
    loop {
        if k.ncols() == 0 {
            break;
        }
        let gk = g0 * &k;
        let out = &gk - &k * k.tr_mul(&gk);
        let ker = null_space(&out, tol.rank, 1e-10 * scale);
        if ker.ncols() == k.ncols() {
            break;
        }
        k = orthonormalize_columns(&(&k * ker));
    }
    let lossless = k;
    let lossy = complement(&lossless);
    let gl = lossless.tr_mul(&(g0 * &lossless));
    let residual = {
        let gk = g0 * &lossless;
        (&gk - &lossless * &gl).norm() + (&gl + gl.transpose()).norm()
    };
    if residual > tol.block * scale {
        return Err(Error::SplitFailed { residual, msg: "lossless subspace is not invariant".into() });
    }
    // iG_L is Hermitian; G_L = U diag(-i λ) U†.
    let (lam, u) = eigh(&crate::linalg::skew_to_hermitian(&gl));
    let d: Vec<f64> = lam.iter().map(|x| -x).collect();
    let g_perp = lossy.tr_mul(&(g0 * &lossy));
    let perp_abscissa = if g_perp.nrows() == 0 {
        f64::NEG_INFINITY
    } else {
        g_perp.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    };
    if perp_abscissa >= -tol.block * scale {
        return Err(Error::SplitFailed { residual: perp_abscissa, msg: "dissipative block is not Hurwitz".into() });
    }
    let lc = crate::linalg::to_complex(&lossless);
    let top = u.adjoint() * lc.transpose();
    let bottom = crate::linalg::to_complex(&lossy).transpose();
    let mut lambda = CMat::zeros(b, b);
    lambda.rows_mut(0, top.nrows()).copy_from(&top);
    lambda.rows_mut(top.nrows(), bottom.nrows()).copy_from(&bottom);
    Ok(DriftSplit { lossless, lossy, lambda, d, g_perp, perp_abscissa, residual })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NcCheck {
    pub nc_dim: usize,
    pub lossless_dim: usize,
    pub residual: f64,
}

/// Residual `‖(I - P_lossless) Π_NC‖`.
pub fn nc_projection_check(structure: &CommutantStructure, split: &DriftSplit) -> NcCheck {
    let k = &structure.nc;
    let l = &split.lossless;
    let residual = (k - l * l.tr_mul(k)).norm();
    NcCheck { nc_dim: k.ncols(), lossless_dim: l.ncols(), residual }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cvs::BasisKind;
    use crate::linalg::commutator;
    use crate::model::{NoiseChannel, PauliString};

    fn pauli(s: &str) -> CMat {
        s.parse::<PauliString>().unwrap().matrix()
    }

    fn structure_for(noise: &[CMat]) -> CommutantStructure {
        let n = noise[0].nrows();
        let model = LindbladModel::new(
            CMat::zeros(n, n),
            vec![],
            noise.iter().map(|d| NoiseChannel { rate: 1.0, operator: d.clone() }).collect(),
        )
        .unwrap();
        let alg = interaction_algebra(&model);
        let basis = HermitianBasis::natural(n).unwrap();
        commutant_structure(&alg, &basis, 7, &Tolerances::default()).unwrap()
    }

    #[test]
    fn qubit_dephasing_algebra() {
        let alg = MatrixAlgebra::generated_by(2, &[pauli("Z")], 1e-9);
        assert_eq!(alg.len(), 2);
        assert!(alg.closure_residual() < 1e-9);
        let s = structure_for(&[pauli("Z")]);
        assert_eq!(s.nc_dim(), 2);
        let orders: Vec<_> = s.sectors.iter().map(|x| (x.order, x.multiplicity)).collect();
        assert_eq!(orders, vec![(1, 1), (1, 1)]);
    }

    #[test]
    fn identity_noise_is_trivial() {
        let alg = MatrixAlgebra::generated_by(2, &[CMat::identity(2, 2)], 1e-9);
        assert_eq!(alg.len(), 1);
        let s = structure_for(&[CMat::identity(2, 2)]);
        assert_eq!(s.nc_dim(), 4);
        assert_eq!(s.sectors.len(), 1);
        assert_eq!(s.sectors[0].order, 2);
    }

    #[test]
    fn two_qubit_collective_dephasing() {
        let d = pauli("ZI") + pauli("IZ");
        let s = structure_for(std::slice::from_ref(&d));
        assert_eq!(s.nc_dim(), 6);
        let orders: Vec<_> = s.sectors.iter().map(|x| x.order).collect();
        assert_eq!(orders, vec![1, 1, 2]);
        // Commutant elements commute with the noise.
        let basis = HermitianBasis::natural(4).unwrap();
        for j in 0..s.nc.ncols() {
            let x = basis.operator(s.nc.column(j).as_slice());
            assert!(commutator(&x, &d).norm() < 1e-9);
        }
        assert!(crate::linalg::unitarity_residual(&s.lambda) < 1e-10);
    }

    #[test]
    fn multiplicity_two_sector() {
        // Noise acting on the first qubit only: commutant is I ⊗ M_2 (order 2, mult 2).
        let s = structure_for(&[pauli("XI"), pauli("ZI")]);
        assert_eq!(s.sectors.len(), 1);
        let sec = &s.sectors[0];
        assert_eq!((sec.order, sec.multiplicity), (2, 2));
        // Ampliated operators commute with the noise.
        let mut r = crate::linalg::rng(4);
        let x = crate::linalg::random_hermitian(2, &mut r);
        let big = sec.ampliate(&x);
        assert!(commutator(&big, &pauli("XI")).norm() < 1e-9);
        assert!(commutator(&big, &pauli("ZI")).norm() < 1e-9);
        // Core projection is orthonormal and inside the commutant.
        let core = &sec.core;
        assert!((core.transpose() * core - RMat::identity(4, 4)).norm() < 1e-9);
        assert!((core - &s.nc * s.nc.tr_mul(core)).norm() < 1e-9);
    }

    #[test]
    fn gell_mann_path() {
        let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)]));
        let model = LindbladModel::new(CMat::zeros(3, 3), vec![], vec![NoiseChannel { rate: 1.0, operator: d }]).unwrap();
        let basis = HermitianBasis::new(3, BasisKind::GellMann).unwrap();
        let s = commutant_structure(&interaction_algebra(&model), &basis, 1, &Tolerances::default()).unwrap();
        assert_eq!(s.nc_dim(), 5);
        assert_eq!(s.sectors.iter().map(|x| x.order).collect::<Vec<_>>(), vec![1, 2]);
    }

    #[test]
    fn split_of_qubit_dephasing() {
        let g0 = RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, -1.0, -1.0, 0.0]));
        let split = drift_block_split(&g0, &Tolerances::default()).unwrap();
        assert_eq!(split.lossless.ncols(), 2);
        assert_eq!(split.g_perp.nrows(), 2);
        assert!(split.d.iter().all(|x| x.abs() < 1e-12));
        assert!(split.perp_abscissa < 0.0);
    }

    #[test]
    fn split_of_skew_drift() {
        let mut r = crate::linalg::rng(9);
        let a = RMat::from_fn(5, 5, |_, _| rand::Rng::random::<f64>(&mut r));
        let g0 = &a - a.transpose();
        let split = drift_block_split(&g0, &Tolerances::default()).unwrap();
        assert_eq!(split.lossless.ncols(), 5);
        assert_eq!(split.g_perp.nrows(), 0);
        // Reconstruct g0 from the unitary split.
        let diag = CMat::from_diagonal(&nalgebra::DVector::from_iterator(5, split.d.iter().map(|x| c(0.0, *x))));
        let back = split.lambda.adjoint() * diag * &split.lambda;
        assert!((back - crate::linalg::to_complex(&g0)).norm() < 1e-9);
    }

    #[test]
    fn split_rejects_expanding_drift() {
        let g0 = RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, 1.0]));
        assert!(matches!(drift_block_split(&g0, &Tolerances::default()), Err(Error::SplitFailed { .. })));
    }
}
