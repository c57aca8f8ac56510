//! Subsystem codes hosted in a k-sector and a randomised code search.

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commutant::{CommutantStructure, Sector};
use crate::cvs::{gell_mann, HermitianBasis};
use crate::error::{Error, Result};
use crate::linalg::{c, eigh, gaussian_vec, haar_unitary, select_columns, sub_rng, unitarity_residual, CMat, RMat};

#[derive(Clone, Debug)]
pub struct SubsystemCode {
    /// 1-based host sector index.
    pub sector: usize,
    pub order: usize,
    pub multiplicity_index: usize,
    pub u_star: CMat,
    pub host_order: usize,
    pub host_multiplicity: usize,
    host_vectors: CMat,
    /// Hermitian orthonormal basis of logical operators (n x n).
    pub logical_basis: Vec<CMat>,
    /// `Φ⁻¹(e_a) / sqrt(m)`: Hermitian orthonormal physical code operators.
    pub physical_basis: Vec<CMat>,
    /// Coherence-vector basis of the code's core projection (Bdim x n²).
    pub core: RMat,
}

impl SubsystemCode {
    pub fn dim(&self) -> usize {
        self.order * self.order
    }

    fn host(&self) -> Sector {
        Sector {
            order: self.host_order,
            multiplicity: self.host_multiplicity,
            vectors: self.host_vectors.clone(),
            core: RMat::zeros(0, 0),
        }
    }

    fn slot(&self) -> usize {
        (self.multiplicity_index - 1) * self.order
    }

    /// Logical operator placed in the code slot of the rotated sector block.
    pub fn embed(&self, j: &CMat) -> CMat {
        let kb = self.host_order;
        let mut pad = CMat::zeros(kb, kb);
        pad.view_mut((self.slot(), self.slot()), (self.order, self.order)).copy_from(j);
        self.u_star.adjoint() * pad * &self.u_star
    }

    /// Physical operator `Φ⁻¹(J)`.
    pub fn phi_inverse(&self, j: &CMat) -> CMat {
        self.host().ampliate(&self.embed(j))
    }

    /// Logical operator `Φ(X)`; the inverse of [`phi_inverse`](Self::phi_inverse)
    /// on the physical code algebra.
    pub fn phi(&self, x: &CMat) -> CMat {
        let rotated = &self.u_star * self.host().compress(x, 0) * self.u_star.adjoint();
        rotated.view((self.slot(), self.slot()), (self.order, self.order)).into_owned()
    }

    pub fn descriptor(&self, seed: Option<u64>) -> CodeDescriptor {
        CodeDescriptor {
            sector: self.sector,
            order: self.order,
            multiplicity_index: self.multiplicity_index,
            u_star: dense_rows(&self.u_star),
            seed,
        }
    }
}

pub fn dense_rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

pub fn from_dense_rows(rows: &[Vec<[f64; 2]>]) -> Result<CMat> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::validation("u_star", "expected a non-empty square matrix"));
    }
    Ok(CMat::from_fn(n, n, |i, j| c(rows[i][j][0], rows[i][j][1])))
}

/// Serialisable code parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeDescriptor {
    pub sector: usize,
    pub order: usize,
    #[serde(default = "one")]
    pub multiplicity_index: usize,
    pub u_star: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn one() -> usize {
    1
}

impl CodeDescriptor {
    pub fn derive(&self, structure: &CommutantStructure, basis: &HermitianBasis) -> Result<SubsystemCode> {
        let u = from_dense_rows(&self.u_star)?;
        derive_code(structure, basis, self.sector, self.order, &u, self.multiplicity_index)
    }
}

/// Builds the code with logical operators embedded at rows/columns
/// `[(m_cs - 1) n, m_cs n)` of sector `k` after rotation by `u_star`.
pub fn derive_code(
    structure: &CommutantStructure,
    basis: &HermitianBasis,
    k: usize,
    n_cs: usize,
    u_star: &CMat,
    m_cs: usize,
) -> Result<SubsystemCode> {
    let sector = structure.sector(k)?;
    let kb = sector.order;
    if kb < 2 {
        return Err(Error::InvalidParameter(format!("sector {k} has order {kb} and cannot host a code")));
    }
    if n_cs < 2 || n_cs > kb {
        return Err(Error::InvalidParameter(format!("code order {n_cs} outside [2, {kb}]")));
    }
    if m_cs < 1 || m_cs > kb / n_cs {
        return Err(Error::InvalidParameter(format!("multiplicity index {m_cs} outside [1, {}]", kb / n_cs)));
    }
    if u_star.nrows() != kb || u_star.ncols() != kb {
        return Err(Error::validation("u_star", format!("expected {kb}x{kb}")));
    }
    if unitarity_residual(u_star) > 1e-9 {
        return Err(Error::validation("u_star", "matrix is not unitary"));
    }
    let mut code = SubsystemCode {
        sector: k,
        order: n_cs,
        multiplicity_index: m_cs,
        u_star: u_star.clone(),
        host_order: kb,
        host_multiplicity: sector.multiplicity,
        host_vectors: sector.vectors.clone(),
        logical_basis: gell_mann(n_cs),
        physical_basis: Vec::new(),
        core: RMat::zeros(basis.len(), 0),
    };
    let s = c((sector.multiplicity as f64).sqrt().recip(), 0.0);
    code.physical_basis = code.logical_basis.iter().map(|e| code.phi_inverse(e) * s).collect();
    let cols: Vec<_> = code.physical_basis.iter().map(|x| basis.coeffs(x)).collect();
    code.core = RMat::from_columns(&cols);
    Ok(code)
}

/// Largest sector order, or 0 when no sector can host a code.
pub fn max_code_order(structure: &CommutantStructure) -> usize {
    structure.sectors.iter().map(|s| s.order).filter(|&o| o >= 2).max().unwrap_or(0)
}

/// `‖(I - P_outer) inner‖` for orthonormal bases.
pub fn containment_residual(inner: &RMat, outer: &RMat) -> f64 {
    (inner - outer * outer.tr_mul(inner)).norm()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateKind {
    Eigenvector,
    Permutation,
    Haar,
}

#[derive(Clone, Debug)]
pub struct SearchSpec {
    pub sector: usize,
    pub min_order: usize,
    pub max_order: usize,
    pub budget: usize,
    pub seed: u64,
    /// Hermitian operators whose compressions to the sector seed eigenvector
    /// candidates; typically the effective Hamiltonians of a control scheme.
    pub probes: Vec<CMat>,
}

#[derive(Clone, Debug)]
pub struct SearchHit {
    pub sample: usize,
    pub kind: CandidateKind,
    pub code: SubsystemCode,
}

/// Candidate `u_star` for sample `i`: eigenvector subsets of a random probe
/// combination, coordinate permutations, or Haar-random unitaries.
pub fn candidate(sector: &Sector, spec: &SearchSpec, i: usize) -> (usize, CandidateKind, CMat) {
    let kb = sector.order;
    let lo = spec.min_order.max(2);
    let hi = spec.max_order.min(kb);
    let n_cs = lo + i % (hi - lo + 1);
    let mut r = sub_rng(spec.seed, i as u64);
    let kind = match i % 4 {
        0 | 1 if !spec.probes.is_empty() => CandidateKind::Eigenvector,
        3 => CandidateKind::Haar,
        _ => CandidateKind::Permutation,
    };
    let u = match kind {
        CandidateKind::Haar => haar_unitary(kb, &mut r),
        CandidateKind::Permutation | CandidateKind::Eigenvector => {
            let frame = if kind == CandidateKind::Eigenvector {
                let g = gaussian_vec(spec.probes.len(), &mut r);
                let mut h = CMat::zeros(kb, kb);
                for (gi, p) in g.iter().zip(&spec.probes) {
                    h += sector.compress(p, 0) * c(*gi, 0.0);
                }
                eigh(&h).1
            } else {
                CMat::identity(kb, kb)
            };
            let mut chosen: Vec<usize> = sample(&mut r, kb, n_cs).into_vec();
            chosen.sort_unstable();
            let rest = (0..kb).filter(|j| !chosen.contains(j));
            let order: Vec<usize> = chosen.iter().cloned().chain(rest).collect();
            select_columns(&frame, &order).adjoint()
        }
    };
    (n_cs, kind, u)
}

/// Derives candidate codes for samples `0..budget` and keeps those accepted
/// by `accept`, in sample order.
pub fn search_codes<F>(
    structure: &CommutantStructure,
    basis: &HermitianBasis,
    spec: &SearchSpec,
    accept: F,
) -> Result<Vec<SearchHit>>
where
    F: Fn(&SubsystemCode) -> Result<bool> + Sync,
{
    let sector = structure.sector(spec.sector)?;
    if spec.min_order > spec.max_order || spec.max_order < 2 || sector.order < spec.min_order.max(2) {
        return Err(Error::InvalidParameter(format!(
            "order range [{}, {}] does not fit sector {} of order {}",
            spec.min_order, spec.max_order, spec.sector, sector.order
        )));
    }
    let results: Vec<Result<Option<SearchHit>>> = (0..spec.budget)
        .into_par_iter()
        .map(|i| {
            let (n_cs, kind, u) = candidate(sector, spec, i);
            let code = derive_code(structure, basis, spec.sector, n_cs, &u, 1)?;
            Ok(accept(&code)?.then_some(SearchHit { sample: i, kind, code }))
        })
        .collect();
    let mut hits = Vec::new();
    for r in results {
        if let Some(h) = r? {
            hits.push(h);
        }
    }
    Ok(hits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commutant::{commutant_structure, interaction_algebra};
    use crate::linalg::{random_hermitian, rng};
    use crate::model::{LindbladModel, NoiseChannel, PauliString};
    use crate::tol::Tolerances;

    /// Collective channel `sum` of the given strings.
    fn setup(noise: &[&str]) -> (CommutantStructure, HermitianBasis) {
        let ops: Vec<CMat> = noise.iter().map(|s| s.parse::<PauliString>().unwrap().matrix()).collect();
        let n = ops[0].nrows();
        let d = ops.iter().fold(CMat::zeros(n, n), |a, b| a + b);
        setup_channels(vec![d])
    }

    fn setup_channels(ops: Vec<CMat>) -> (CommutantStructure, HermitianBasis) {
        let n = ops[0].nrows();
        let noise = ops.into_iter().map(|operator| NoiseChannel { rate: 1.0, operator }).collect();
        let model = LindbladModel::new(CMat::zeros(n, n), vec![], noise).unwrap();
        let basis = HermitianBasis::natural(n).unwrap();
        let s = commutant_structure(&interaction_algebra(&model), &basis, 3, &Tolerances::default()).unwrap();
        (s, basis)
    }

    #[test]
    fn full_sector_code_matches_sector_core() {
        let (s, b) = setup(&["ZII", "IZI", "IIZ"]);
        // Sectors: two of order 1 and two of order 3.
        let k = s.sectors.iter().position(|x| x.order == 3).unwrap() + 1;
        let code = derive_code(&s, &b, k, 3, &CMat::identity(3, 3), 1).unwrap();
        let core = &s.sectors[k - 1].core;
        assert!(containment_residual(&code.core, core) < 1e-9);
        assert!(containment_residual(core, &code.core) < 1e-9);
    }

    #[test]
    fn phi_is_a_star_isomorphism() {
        let (s, b) = setup(&["ZII", "IZI", "IIZ"]);
        let k = s.sectors.iter().position(|x| x.order == 3).unwrap() + 1;
        let mut r = rng(8);
        let u = haar_unitary(3, &mut r);
        let code = derive_code(&s, &b, k, 2, &u, 1).unwrap();
        let mut ratio: Option<crate::linalg::C64> = None;
        for _ in 0..5 {
            let x = code.phi_inverse(&crate::linalg::ginibre(2, &mut r));
            let y = code.phi_inverse(&crate::linalg::ginibre(2, &mut r));
            assert!((code.phi(&(&x * &y)) - code.phi(&x) * code.phi(&y)).norm() < 1e-9);
            assert!((code.phi(&x.adjoint()) - code.phi(&x).adjoint()).norm() < 1e-9);
            assert!((code.phi_inverse(&code.phi(&x)) - &x).norm() < 1e-9);
            let q = x.trace() / code.phi(&x).trace();
            if let Some(r0) = ratio {
                assert!((q - r0).norm() < 1e-9);
            }
            ratio = Some(q);
        }
        assert!(code.core.ncols() == 4);
        assert!((code.core.transpose() * &code.core - RMat::identity(4, 4)).norm() < 1e-9);
        let host = &s.sectors[k - 1].core;
        assert!(containment_residual(&code.core, host) < 1e-9);
        assert!(containment_residual(host, &s.nc) < 1e-9);
    }

    #[test]
    fn ampliated_code_has_trace_ratio_m() {
        // Full noise on the first qubit: one order-2 sector with multiplicity 2.
        let p = |s: &str| s.parse::<PauliString>().unwrap().matrix();
        let (s, b) = setup_channels(vec![p("XI"), p("ZI")]);
        assert_eq!((s.sectors[0].order, s.sectors[0].multiplicity), (2, 2));
        let code = derive_code(&s, &b, 1, 2, &CMat::identity(2, 2), 1).unwrap();
        let mut r = rng(2);
        let j = random_hermitian(2, &mut r);
        let x = code.phi_inverse(&j);
        assert!((x.trace() - j.trace() * c(2.0, 0.0)).norm() < 1e-12);
        assert!((code.phi(&x) - &j).norm() < 1e-12);
        assert!((code.core.transpose() * &code.core - RMat::identity(4, 4)).norm() < 1e-9);
    }

    #[test]
    fn rejects_bad_parameters() {
        let (s, b) = setup(&["ZII", "IZI", "IIZ"]);
        let k = s.sectors.iter().position(|x| x.order == 3).unwrap() + 1;
        let id = CMat::identity(3, 3);
        assert!(derive_code(&s, &b, k, 4, &id, 1).is_err());
        assert!(derive_code(&s, &b, k, 2, &id, 2).is_err());
        assert!(derive_code(&s, &b, k, 2, &(id.clone() * c(2.0, 0.0)), 1).is_err());
        assert!(derive_code(&s, &b, 1, 2, &CMat::identity(1, 1), 1).is_err());
        assert!(derive_code(&s, &b, 9, 2, &id, 1).is_err());
    }

    #[test]
    fn max_order() {
        let (s, _) = setup(&["ZII", "IZI", "IIZ"]);
        assert_eq!(max_code_order(&s), 3);
        let (s, _) = setup(&["Z"]);
        assert_eq!(max_code_order(&s), 0);
    }

    #[test]
    fn descriptor_round_trip() {
        let (s, b) = setup(&["ZII", "IZI", "IIZ"]);
        let k = s.sectors.iter().position(|x| x.order == 3).unwrap() + 1;
        let mut r = rng(1);
        let code = derive_code(&s, &b, k, 2, &haar_unitary(3, &mut r), 1).unwrap();
        let json = serde_json::to_string(&code.descriptor(Some(5))).unwrap();
        let back: CodeDescriptor = serde_json::from_str(&json).unwrap();
        let again = back.derive(&s, &b).unwrap();
        assert!((again.core - &code.core).norm() < 1e-12);
    }

    #[test]
    fn search_is_deterministic_and_respects_budget() {
        let (s, b) = setup(&["ZII", "IZI", "IIZ"]);
        let k = s.sectors.iter().position(|x| x.order == 3).unwrap() + 1;
        let probe = "XXX".parse::<PauliString>().unwrap().matrix();
        let spec = SearchSpec { sector: k, min_order: 2, max_order: 3, budget: 12, seed: 4, probes: vec![probe] };
        let all = search_codes(&s, &b, &spec, |_| Ok(true)).unwrap();
        assert_eq!(all.len(), 12);
        let again = search_codes(&s, &b, &spec, |_| Ok(true)).unwrap();
        for (x, y) in all.iter().zip(&again) {
            assert_eq!(x.sample, y.sample);
            assert!((&x.code.u_star - &y.code.u_star).norm() == 0.0);
        }
        let none = search_codes(&s, &b, &SearchSpec { budget: 0, ..spec.clone() }, |_| Ok(true)).unwrap();
        assert!(none.is_empty());
        assert!(search_codes(&s, &b, &SearchSpec { min_order: 4, max_order: 5, ..spec }, |_| Ok(true)).is_err());
    }
}
