//! P-static control: canonical frames, decoherence-invariant feasible sets
//! (DIFS) and effective Hamiltonians.

use serde::{Deserialize, Serialize};

use crate::codes::{containment_residual, SubsystemCode};
use crate::commutant::CommutantStructure;
use crate::cvs::GModel;
use crate::error::{Error, Result};
use crate::linalg::{complement, gaussian_vec, sub_rng, to_complex, CMat, RMat, RVec};
use crate::tol::Tolerances;

/// A code, a protected coherence-vector subspace `im Π_P` and the control
/// channels in use.
#[derive(Clone, Debug)]
pub struct PStaticScheme {
    pub code: SubsystemCode,
    /// Orthonormal basis of `im Π_P` (Bdim x d_P).
    pub p: RMat,
    /// Indices into `GModel::gc`.
    pub controls: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainResiduals {
    pub code_in_p: f64,
    pub p_in_nc: f64,
}

impl PStaticScheme {
    /// Validates the protective chain `im Π_cs ⊆ im Π_P ⊆ im Π_NC`.
    pub fn new(code: SubsystemCode, p: RMat, controls: Vec<usize>, structure: &CommutantStructure) -> Result<Self> {
        let chain = ChainResiduals {
            code_in_p: containment_residual(&code.core, &p),
            p_in_nc: containment_residual(&p, &structure.nc),
        };
        let worst = chain.code_in_p.max(chain.p_in_nc);
        if worst > 1e-8 {
            return Err(Error::ChainViolated { residual: worst });
        }
        Ok(PStaticScheme { code, p, controls })
    }

    /// The scheme whose protected subspace is the host sector's core.
    pub fn on_host_sector(code: SubsystemCode, structure: &CommutantStructure, n_controls: usize) -> Result<Self> {
        let p = structure.sector(code.sector)?.core.clone();
        Self::new(code, p, (0..n_controls).collect(), structure)
    }

    pub fn model<'a>(&self, g: &'a GModel) -> Result<std::borrow::Cow<'a, GModel>> {
        restrict_controls(g, &self.controls)
    }
}

/// Keeps only the listed control channels, in the given order.
pub fn restrict_controls<'a>(g: &'a GModel, controls: &[usize]) -> Result<std::borrow::Cow<'a, GModel>> {
    if controls.iter().enumerate().all(|(i, &k)| i == k) && controls.len() == g.gc.len() {
        return Ok(std::borrow::Cow::Borrowed(g));
    }
    let mut gc = Vec::with_capacity(controls.len());
    for &k in controls {
        gc.push(
            g.gc.get(k)
                .ok_or_else(|| Error::InvalidParameter(format!("control index {k} out of range")))?
                .clone(),
        );
    }
    Ok(std::borrow::Cow::Owned(GModel { basis: g.basis.clone(), g0: g.g0.clone(), gc }))
}

/// Orthogonal frame `[code | P ⊖ code | P⊥]` of the coherence-vector space.
#[derive(Clone, Debug)]
pub struct CanonicalFrame {
    pub rotation: RMat,
    pub d_cs: usize,
    pub d_p: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Code,
    Extended,
    Unprotected,
}

impl CanonicalFrame {
    pub fn new(code_core: &RMat, p: &RMat) -> Result<Self> {
        let residual = containment_residual(code_core, p);
        if residual > 1e-8 {
            return Err(Error::ChainViolated { residual });
        }
        let cc = p.tr_mul(code_core);
        let ext = p * complement(&cc);
        let outer = complement(p);
        let b = p.nrows();
        let mut rotation = RMat::zeros(b, b);
        let (d_cs, d_p) = (code_core.ncols(), p.ncols());
        rotation.columns_mut(0, d_cs).copy_from(code_core);
        rotation.columns_mut(d_cs, d_p - d_cs).copy_from(&ext);
        rotation.columns_mut(d_p, b - d_p).copy_from(&outer);
        Ok(CanonicalFrame { rotation, d_cs, d_p })
    }

    pub fn bdim(&self) -> usize {
        self.rotation.nrows()
    }

    /// `(d_cs, d_P - d_cs, Bdim - d_P)`.
    pub fn partition(&self) -> (usize, usize, usize) {
        (self.d_cs, self.d_p - self.d_cs, self.bdim() - self.d_p)
    }

    fn range(&self, part: Part) -> (usize, usize) {
        match part {
            Part::Code => (0, self.d_cs),
            Part::Extended => (self.d_cs, self.d_p - self.d_cs),
            Part::Unprotected => (self.d_p, self.bdim() - self.d_p),
        }
    }

    pub fn columns(&self, part: Part) -> RMat {
        let (s, n) = self.range(part);
        self.rotation.columns(s, n).into_owned()
    }

    /// Basis of `im Π_P` in frame order.
    pub fn protected(&self) -> RMat {
        self.rotation.columns(0, self.d_p).into_owned()
    }

    /// Block `(row part, column part)` of `Rᵀ G R`.
    pub fn block(&self, g: &RMat, row: Part, col: Part) -> RMat {
        self.columns(row).tr_mul(&(g * self.columns(col)))
    }

    pub fn rotate(&self, g: &RMat) -> RMat {
        self.rotation.tr_mul(&(g * &self.rotation))
    }
}

/// Block-type diagnostics of a rotated `G`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockTypes {
    /// `‖G_aa + G_aaᵀ‖`.
    pub code_skew: f64,
    /// `‖G_bb + G_bbᵀ‖`.
    pub extended_skew: f64,
    /// Largest eigenvalue of the symmetric part of `G_cc` (≤ 0 for lossy).
    pub unprotected_sym_max: f64,
}

pub fn block_types(frame: &CanonicalFrame, g: &RMat) -> BlockTypes {
    let aa = frame.block(g, Part::Code, Part::Code);
    let bb = frame.block(g, Part::Extended, Part::Extended);
    let cc = frame.block(g, Part::Unprotected, Part::Unprotected);
    let sym_max = if cc.nrows() == 0 {
        f64::NEG_INFINITY
    } else {
        crate::linalg::eigh_real(&(&cc + cc.transpose())).0.last().copied().unwrap()
    };
    BlockTypes {
        code_skew: (&aa + aa.transpose()).norm(),
        extended_skew: (&bb + bb.transpose()).norm(),
        unprotected_sym_max: sym_max,
    }
}

/// Affine set of inputs keeping `im Π_P` invariant: `u = zoff + zN u_eff`.
#[derive(Clone, Debug)]
pub struct Difs {
    /// Stacked `z(j,k) = Π_P⊥ G_k π_j` (Bdim d_P x n_c).
    pub z: RMat,
    pub z0: RVec,
    pub z_n: RMat,
    pub z_off: RVec,
    pub n_eff: usize,
    pub rank_z: usize,
    pub drift_invariant: bool,
    pub singular_values: Vec<f64>,
    pub threshold: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DifsReport {
    pub drift_invariant: bool,
    pub n_eff: usize,
    #[serde(rename = "zN")]
    pub z_n: Vec<Vec<f64>>,
    pub zoff: Vec<f64>,
    #[serde(rename = "rank_Z")]
    pub rank_z: usize,
    pub n_c: usize,
    pub singular_values: Vec<f64>,
    pub threshold: f64,
}

impl Difs {
    pub fn n_c(&self) -> usize {
        self.z.ncols()
    }

    pub fn input(&self, u_eff: &[f64]) -> RVec {
        &self.z_off + &self.z_n * RVec::from_column_slice(u_eff)
    }

    /// `‖Z u + z0‖`.
    pub fn residual(&self, u: &RVec) -> f64 {
        (&self.z * u + &self.z0).norm()
    }

    /// `zoff`, `zoff + zN e_j` for each effective channel, then `extra`
    /// seeded Gaussian points.
    pub fn samples(&self, seed: u64, extra: usize) -> Vec<RVec> {
        let mut out = vec![self.z_off.clone()];
        for j in 0..self.n_eff {
            out.push(&self.z_off + self.z_n.column(j));
        }
        let mut r = sub_rng(seed, 7);
        for _ in 0..extra {
            out.push(&self.z_off + &self.z_n * gaussian_vec(self.n_eff, &mut r));
        }
        out
    }

    pub fn report(&self) -> DifsReport {
        DifsReport {
            drift_invariant: self.drift_invariant,
            n_eff: self.n_eff,
            z_n: (0..self.z_n.nrows()).map(|i| self.z_n.row(i).iter().cloned().collect()).collect(),
            zoff: self.z_off.iter().cloned().collect(),
            rank_z: self.rank_z,
            n_c: self.n_c(),
            singular_values: self.singular_values.clone(),
            threshold: self.threshold,
        }
    }
}

fn leakage_columns(g: &RMat, p: &RMat) -> RVec {
    let gp = g * p;
    let out = &gp - p * p.tr_mul(&gp);
    RVec::from_column_slice(out.as_slice())
}

/// Rank test, offset and null-space parametrisation of the inputs that keep
/// `im Π_P` invariant.
pub fn compute_difs(g: &GModel, p: &RMat, tol: &Tolerances) -> Result<Difs> {
    let nc = g.gc.len();
    let z0 = leakage_columns(&g.g0, p);
    let cols: Vec<RVec> = g.gc.iter().map(|gk| leakage_columns(gk, p)).collect();
    let z = if cols.is_empty() { RMat::zeros(z0.len(), 0) } else { RMat::from_columns(&cols) };
    let scale = g.gc.iter().chain(std::iter::once(&g.g0)).map(|m| (m * p).norm()).fold(1.0, f64::max);
    let abs = tol.rank * scale;

    let (sv, v) = if nc == 0 {
        (Vec::new(), RMat::zeros(0, 0))
    } else {
        let svd = z.clone().svd(false, true);
        let sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
        (sv, svd.v_t.unwrap().transpose())
    };
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let threshold = (tol.rank * smax).max(abs);
    let rank_z = sv.iter().filter(|&&s| s > threshold).count();

    let aug = {
        let mut m = RMat::zeros(z.nrows(), nc + 1);
        m.columns_mut(0, nc).copy_from(&z);
        m.set_column(nc, &z0);
        m
    };
    let aug_sv = aug.singular_values();
    let aug_thr = (tol.rank * aug_sv.max()).max(abs);
    let rank_aug = aug_sv.iter().filter(|&&s| s > aug_thr).count();
    if rank_aug != rank_z {
        return Err(Error::NotInvariant { rank_z, rank_aug });
    }

    let drift_invariant = z0.norm() <= abs;
    let z_off = if drift_invariant || nc == 0 {
        RVec::zeros(nc)
    } else {
        // Minimum-norm least squares through the thin SVD.
        let svd = z.clone().svd(true, true);
        let x = svd
            .solve(&(-&z0), threshold)
            .map_err(|e| Error::Numerical(format!("least-squares solve failed: {e}")))?;
        let res = (&z * &x + &z0).norm();
        if res > 1e-9 * z0.norm().max(1.0) {
            return Err(Error::Numerical(format!("offset residual {res:.3e} too large")));
        }
        x
    };

    let null_cols: Vec<usize> = (0..nc).filter(|&k| sv[k] <= threshold).collect();
    let raw = crate::linalg::select_columns(&v, &null_cols);
    let z_n = canonical_basis(&raw);
    Ok(Difs { z, z0, n_eff: z_n.ncols(), z_n, z_off, rank_z, drift_invariant, singular_values: sv, threshold })
}

/// Basis-independent orthonormal basis of `span(m)`: reduced row echelon
/// form followed by Gram-Schmidt in column order.
pub fn canonical_basis(m: &RMat) -> RMat {
    let k = m.ncols();
    if k == 0 {
        return m.clone();
    }
    // Row-reduce mᵀ (k x n).
    let mut a = m.transpose();
    let (rows, cols) = a.shape();
    let mut r = 0;
    for col in 0..cols {
        if r == rows {
            break;
        }
        let (piv, val) = (r..rows).map(|i| (i, a[(i, col)].abs())).fold((r, 0.0), |b, x| if x.1 > b.1 { x } else { b });
        if val < 1e-9 {
            continue;
        }
        a.swap_rows(r, piv);
        let pv = a[(r, col)];
        let row = a.row(r) / pv;
        a.set_row(r, &row);
        for i in 0..rows {
            if i != r {
                let f = a[(i, col)];
                if f != 0.0 {
                    let sub = a.row(r) * f;
                    let new = a.row(i) - sub;
                    a.set_row(i, &new);
                }
            }
        }
        r += 1;
    }
    let mut gs = crate::linalg::GramSchmidt::new(m.nrows());
    for i in 0..r {
        gs.push(&a.row(i).transpose(), 1e-12);
    }
    let mut out = gs.matrix();
    for x in out.iter_mut() {
        if x.abs() < 1e-15 {
            *x = 0.0;
        }
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InvarianceCheck {
    pub holds: bool,
    /// `‖Π_P⊥ G(u) Π_P‖` per sample.
    pub lower: Vec<f64>,
    /// `‖Π_P G(u) Π_P⊥‖` per sample.
    pub upper: Vec<f64>,
    pub tolerance: f64,
}

/// Evaluates the off-diagonal quadrants of `G(u)` at the split `(P, P⊥)`.
pub fn check_sufficient_invariance(g: &GModel, p: &RMat, samples: &[RVec], tol: &Tolerances) -> InvarianceCheck {
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut scale: f64 = 1.0;
    for u in samples {
        let gu = g.g(u.as_slice());
        let gp = &gu * p;
        scale = scale.max(gp.norm());
        lower.push((&gp - p * p.tr_mul(&gp)).norm());
        let pg = p.tr_mul(&gu);
        upper.push((&pg - (&pg * p) * p.transpose()).norm());
    }
    let tolerance = tol.block * scale;
    let holds = lower.iter().chain(&upper).all(|&r| r <= tolerance);
    InvarianceCheck { holds, lower, upper, tolerance }
}

/// Hermitian generators of the protected dynamics, expressed in a basis of
/// `im Π_P`: `-iĤ = Bᵀ G B`.
#[derive(Clone, Debug)]
pub struct EffectiveHamiltonians {
    pub h0: CMat,
    pub hc: Vec<CMat>,
}

impl EffectiveHamiltonians {
    /// `{-iĤ0, -iĤ1, ...}` as complex matrices.
    pub fn generators(&self) -> Vec<CMat> {
        let mi = crate::linalg::c(0.0, -1.0);
        std::iter::once(&self.h0).chain(&self.hc).map(|h| h * mi).collect()
    }

    /// Physical Hamiltonians `H0 + sum zoff_k H_k` and `sum_k zN_kj H_k`.
    pub fn physical(model: &crate::model::LindbladModel, difs: &Difs, controls: &[usize]) -> Vec<CMat> {
        let mut out = vec![model.drift.clone()];
        for (k, &idx) in controls.iter().enumerate() {
            out[0] += &model.controls[idx] * crate::linalg::c(difs.z_off[k], 0.0);
        }
        for j in 0..difs.n_eff {
            let mut h = CMat::zeros(model.dim, model.dim);
            for (k, &idx) in controls.iter().enumerate() {
                h += &model.controls[idx] * crate::linalg::c(difs.z_n[(k, j)], 0.0);
            }
            out.push(h);
        }
        out
    }
}

pub fn effective_hamiltonians(g: &GModel, p: &RMat, difs: &Difs) -> EffectiveHamiltonians {
    let erase = |m: &RMat| crate::linalg::skew_to_hermitian(&p.tr_mul(&(m * p)));
    let mut g0 = g.g0.clone();
    for (k, gk) in g.gc.iter().enumerate() {
        if difs.z_off[k] != 0.0 {
            g0 += gk * difs.z_off[k];
        }
    }
    let hc = (0..difs.n_eff)
        .map(|j| {
            let mut m = RMat::zeros(g.bdim(), g.bdim());
            for (k, gk) in g.gc.iter().enumerate() {
                let w = difs.z_n[(k, j)];
                if w != 0.0 {
                    m += gk * w;
                }
            }
            erase(&m)
        })
        .collect();
    EffectiveHamiltonians { h0: erase(&g0), hc }
}

/// `max_u ‖(Π_NC - Π_k) G(u) Π_k‖` over the samples.
pub fn k_sector_decoupling_check(g: &GModel, structure: &CommutantStructure, k: usize, samples: &[RVec]) -> Result<f64> {
    let core = &structure.sector(k)?.core;
    let nc = &structure.nc;
    let mut worst: f64 = 0.0;
    for u in samples {
        let gc = g.g(u.as_slice()) * core;
        let r = nc * nc.tr_mul(&gc) - core * core.tr_mul(&gc);
        worst = worst.max(r.norm());
    }
    Ok(worst)
}

/// Complex embedding used by the Lie-algebra routines.
pub fn real_generators(ms: &[RMat]) -> Vec<CMat> {
    ms.iter().map(to_complex).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, orthonormalize_columns};
    use crate::model::{LindbladModel, NoiseChannel, PauliString};

    fn p(s: &str) -> CMat {
        s.parse::<PauliString>().unwrap().matrix()
    }

    fn dephased_qubit() -> GModel {
        let m = LindbladModel::new(p("Z") * c(0.3, 0.0), vec![p("X"), p("Z")], vec![NoiseChannel { rate: 1.0, operator: p("Z") }]).unwrap();
        GModel::from_model(&m).unwrap()
    }

    fn iz_projection() -> RMat {
        let mut m = RMat::zeros(4, 2);
        m[(0, 0)] = 1.0;
        m[(3, 1)] = 1.0;
        m
    }

    #[test]
    fn qubit_dephasing_difs() {
        let g = dephased_qubit();
        let d = compute_difs(&g, &iz_projection(), &Tolerances::default()).unwrap();
        // X leaks z into x/y; Z keeps {i, z} invariant.
        assert!(d.drift_invariant);
        assert_eq!(d.rank_z, 1);
        assert_eq!(d.n_eff, 1);
        assert!((d.z_n[(0, 0)]).abs() < 1e-12);
        assert!((d.z_n[(1, 0)].abs() - 1.0).abs() < 1e-12);
        let s = d.samples(1, 8);
        assert_eq!(s.len(), 10);
        let chk = check_sufficient_invariance(&g, &iz_projection(), &s, &Tolerances::default());
        assert!(chk.holds);
        let bad = check_sufficient_invariance(&g, &iz_projection(), &[RVec::from_vec(vec![1.0, 0.0])], &Tolerances::default());
        assert!(!bad.holds);
    }

    #[test]
    fn frame_partition_for_qubit() {
        let g = dephased_qubit();
        let pz = iz_projection();
        let f = CanonicalFrame::new(&pz, &pz).unwrap();
        assert_eq!(f.partition(), (2, 0, 2));
        let bt = block_types(&f, &g.g0);
        assert!(bt.code_skew < 1e-12);
        assert!(bt.unprotected_sym_max < 0.0);
        let r = f.rotate(&RMat::identity(4, 4));
        assert!((r - RMat::identity(4, 4)).norm() < 1e-12);
    }

    #[test]
    fn noiseless_full_space() {
        let m = LindbladModel::new(p("Z"), vec![p("X"), p("Y")], vec![]).unwrap();
        let g = GModel::from_model(&m).unwrap();
        let pp = RMat::identity(4, 4);
        let d = compute_difs(&g, &pp, &Tolerances::default()).unwrap();
        assert_eq!(d.rank_z, 0);
        assert_eq!(d.n_eff, 2);
        assert!(d.z_off.norm() == 0.0);
        let eff = effective_hamiltonians(&g, &pp, &d);
        assert_eq!(eff.hc.len(), 2);
        // Effective generators span the same space as the original ones.
        let orig: Vec<RMat> = g.gc.clone();
        for h in &eff.hc {
            let e = h.map(|z| z.im);
            let mut gs = crate::linalg::GramSchmidt::new(16);
            for o in &orig {
                gs.push(&RVec::from_column_slice(o.as_slice()), 1e-12);
            }
            assert!(gs.residual(&RVec::from_column_slice((-e).as_slice())).norm() < 1e-9);
        }
        assert!(((eff.h0.map(|z| z.im)) + &g.g0 * -1.0).norm() < 1e-12 || (eff.h0.map(|z| -z.im) - &g.g0).norm() < 1e-12);
    }

    #[test]
    fn non_invariant_projection() {
        // span{i, x}: the drift's Z term rotates x into y and an X control
        // cannot cancel it.
        let model = LindbladModel::new(p("Z"), vec![p("X")], vec![]).unwrap();
        let g = GModel::from_model(&model).unwrap();
        let mut m = RMat::zeros(4, 2);
        m[(0, 0)] = 1.0;
        m[(1, 1)] = 1.0;
        let r = compute_difs(&g, &m, &Tolerances::default());
        assert!(matches!(r, Err(Error::NotInvariant { .. })), "{r:?}");
    }

    #[test]
    fn offset_solves_drift_leakage() {
        // Drift X leaks z; control -X cancels it exactly at u = 1.
        let m = LindbladModel::new(p("X"), vec![p("X"), p("Z")], vec![NoiseChannel { rate: 1.0, operator: p("Z") }]).unwrap();
        let g = GModel::from_model(&m).unwrap();
        let d = compute_difs(&g, &iz_projection(), &Tolerances::default()).unwrap();
        assert!(!d.drift_invariant);
        assert!((d.z_off[0] + 1.0).abs() < 1e-9);
        assert!(d.residual(&d.z_off) < 1e-9);
    }

    #[test]
    fn canonical_basis_is_unique() {
        let a = orthonormalize_columns(&RMat::from_row_slice(3, 2, &[1., 0., 1., 1., 0., 1.]));
        let rot = RMat::from_row_slice(2, 2, &[0.6, 0.8, -0.8, 0.6]);
        let b = &a * rot;
        assert!((canonical_basis(&a) - canonical_basis(&b)).norm() < 1e-12);
    }

    #[test]
    fn chain_violation_is_reported() {
        let code = RMat::from_column_slice(4, 1, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(CanonicalFrame::new(&code, &iz_projection()), Err(Error::ChainViolated { .. })));
    }
}
