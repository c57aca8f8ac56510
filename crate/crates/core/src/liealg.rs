//! Real Lie algebras of matrices, block erasure/extension and the
//! controllability tests.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codes::SubsystemCode;
use crate::cvs::{gell_mann, GModel, HermitianBasis};
use crate::error::{Error, Result};
use crate::linalg::{
    c, commutator, complement, intersect, null_space, realify, to_complex, unrealify, CMat, GramSchmidt, RMat, RVec,
};
use crate::model::LindbladModel;
use crate::pstatic::{compute_difs, effective_hamiltonians, Difs, EffectiveHamiltonians};
use crate::tol::Tolerances;

/// Orthonormal basis (under `Re tr(A†B)`) of a real span of n x n matrices.
#[derive(Clone, Debug)]
pub struct LieBasis {
    pub order: usize,
    gs: GramSchmidt,
}

impl LieBasis {
    pub fn empty(order: usize) -> Self {
        LieBasis { order, gs: GramSchmidt::new(2 * order * order) }
    }

    /// Orthonormal basis of the real span (no closure).
    pub fn span(order: usize, elements: &[CMat], tol: f64) -> Self {
        let mut b = Self::empty(order);
        for e in elements {
            b.push(e, tol);
        }
        b
    }

    pub fn from_vectors(order: usize, m: &RMat) -> Self {
        let mut b = Self::empty(order);
        for j in 0..m.ncols() {
            b.gs.push(&m.column(j).into_owned(), 1e-10);
        }
        b
    }

    pub fn dim(&self) -> usize {
        self.gs.len()
    }

    pub fn push(&mut self, x: &CMat, tol: f64) -> bool {
        self.gs.push(&realify(x), tol)
    }

    pub fn element(&self, k: usize) -> CMat {
        unrealify(self.gs.vectors[k].as_slice(), self.order, self.order)
    }

    pub fn elements(&self) -> Vec<CMat> {
        (0..self.dim()).map(|k| self.element(k)).collect()
    }

    /// Realified basis vectors as columns.
    pub fn matrix(&self) -> RMat {
        self.gs.matrix()
    }

    pub fn contains(&self, x: &CMat, tol: f64) -> bool {
        let v = realify(x);
        self.gs.residual(&v).norm() <= tol * v.norm().max(1e-300)
    }

    pub fn intersect(&self, other: &LieBasis, tol: f64) -> LieBasis {
        Self::from_vectors(self.order, &intersect(&self.matrix(), &other.matrix(), tol))
    }

    /// Same span test via principal angles.
    pub fn same_span(&self, other: &LieBasis, tol: f64) -> bool {
        self.dim() == other.dim() && self.intersect(other, tol).dim() == self.dim()
    }

    /// `Qᵀ A Q` for every element (Q real orthogonal).
    pub fn conjugate(&self, q: &RMat) -> LieBasis {
        let qc = to_complex(q);
        let els: Vec<CMat> = self.elements().iter().map(|a| qc.transpose() * a * &qc).collect();
        LieBasis::span(q.ncols(), &els, 1e-10)
    }

    /// Largest bracket residual outside the span, relative to the bracket norm.
    pub fn closure_residual(&self) -> f64 {
        let els = self.elements();
        let mut worst: f64 = 0.0;
        for i in 0..els.len() {
            for j in 0..i {
                let br = commutator(&els[j], &els[i]);
                let v = realify(&br);
                let n = v.norm();
                if n > 1e-12 {
                    worst = worst.max(self.gs.residual(&v).norm() / n);
                }
            }
        }
        worst
    }
}

/// Smallest real Lie algebra containing `generators`.
pub fn lie_closure(generators: &[CMat], max_dim: usize, tol: f64) -> Result<LieBasis> {
    let order = generators.first().map(|g| g.nrows()).unwrap_or(0);
    let mut basis = LieBasis::empty(order);
    for g in generators {
        if g.norm() > 1e-12 {
            basis.gs.push(&realify(g), tol);
        }
    }
    let mut els = basis.elements();
    let mut i = 0;
    while i < els.len() {
        let brackets: Vec<RVec> = (0..i).into_par_iter().map(|j| realify(&commutator(&els[j], &els[i]))).collect();
        for br in brackets {
            if basis.gs.push(&br, tol) {
                els.push(basis.element(basis.dim() - 1));
                if basis.dim() > max_dim {
                    return Err(Error::DimensionCap { cap: max_dim });
                }
            }
        }
        i += 1;
    }
    Ok(basis)
}

fn off_diagonal(a: &CMat, p: usize) -> CMat {
    let mut o = a.clone();
    o.view_mut((0, 0), (p, p)).fill(c(0.0, 0.0));
    let n = a.nrows();
    o.view_mut((p, p), (n - p, n - p)).fill(c(0.0, 0.0));
    o
}

fn upper_left(a: &CMat, p: usize) -> CMat {
    a.view((0, 0), (p, p)).into_owned()
}

/// Upper-left p x p blocks of the elements that are block-diagonal at `p`.
pub fn p_erasure(set: &[CMat], p: usize, tol: f64) -> Vec<CMat> {
    set.iter()
        .filter(|a| off_diagonal(a, p).norm() <= tol * a.norm().max(1.0))
        .map(|a| upper_left(a, p))
        .collect()
}

/// Subspace of a span whose elements are block-diagonal at `p`.
pub fn diagonal_subspace(space: &LieBasis, p: usize) -> LieBasis {
    let els = space.elements();
    if els.is_empty() {
        return LieBasis::empty(space.order);
    }
    let cols: Vec<RVec> = els.iter().map(|e| realify(&off_diagonal(e, p))).collect();
    let ker = null_space(&RMat::from_columns(&cols), 1e-9, 1e-10);
    let combos: Vec<CMat> = (0..ker.ncols())
        .map(|j| {
            let mut x = CMat::zeros(space.order, space.order);
            for (k, e) in els.iter().enumerate() {
                x += e * c(ker[(k, j)], 0.0);
            }
            x
        })
        .collect();
    LieBasis::span(space.order, &combos, 1e-9)
}

/// `ers_p` of a linear space: erasure of its p-diagonal subspace.
pub fn erase_space(space: &LieBasis, p: usize) -> LieBasis {
    let d = diagonal_subspace(space, p);
    let blocks: Vec<CMat> = d.elements().iter().map(|e| upper_left(e, p)).collect();
    LieBasis::span(p, &blocks, 1e-9)
}

/// `ext_m(S)`: all m x m matrices block-diagonal at `p = order(S)` whose
/// upper-left block lies in `S`. Kept implicit.
#[derive(Clone, Debug)]
pub struct Extension {
    pub inner: LieBasis,
    pub m: usize,
}

pub fn m_extension(s: &LieBasis, m: usize) -> Extension {
    assert!(m >= s.order);
    Extension { inner: s.clone(), m }
}

impl Extension {
    pub fn contains(&self, x: &CMat, tol: f64) -> bool {
        let p = self.inner.order;
        off_diagonal(x, p).norm() <= tol * x.norm().max(1.0) && self.inner.contains(&upper_left(x, p), tol)
    }

    /// `ext_m(S) ∩ T` without materialising the extension.
    pub fn intersect(&self, t: &LieBasis) -> LieBasis {
        let p = self.inner.order;
        let els = t.elements();
        if els.is_empty() {
            return LieBasis::empty(self.m);
        }
        let cols: Vec<RVec> = els
            .iter()
            .map(|e| {
                let off = realify(&off_diagonal(e, p));
                let ul = realify(&upper_left(e, p));
                let out = self.inner.gs.residual(&ul);
                RVec::from_iterator(off.len() + out.len(), off.iter().chain(out.iter()).cloned())
            })
            .collect();
        let ker = null_space(&RMat::from_columns(&cols), 1e-9, 1e-10);
        let combos: Vec<CMat> = (0..ker.ncols())
            .map(|j| {
                let mut x = CMat::zeros(self.m, self.m);
                for (k, e) in els.iter().enumerate() {
                    x += e * c(ker[(k, j)], 0.0);
                }
                x
            })
            .collect();
        LieBasis::span(self.m, &combos, 1e-9)
    }

    /// Explicit basis; only sensible for small `m`.
    pub fn materialize(&self) -> LieBasis {
        let p = self.inner.order;
        let m = self.m;
        let mut els = Vec::new();
        for s in self.inner.elements() {
            let mut x = CMat::zeros(m, m);
            x.view_mut((0, 0), (p, p)).copy_from(&s);
            els.push(x);
        }
        for i in p..m {
            for j in p..m {
                for z in [c(1.0, 0.0), c(0.0, 1.0)] {
                    let mut x = CMat::zeros(m, m);
                    x[(i, j)] = z;
                    els.push(x);
                }
            }
        }
        LieBasis::span(m, &els, 1e-10)
    }
}

/// Logical Hamiltonian map `χ(J) = ers_{d_cs}(h_to_g(Φ⁻¹ J))` in the code's
/// core coordinates.
pub struct ChiMap<'a> {
    code: &'a SubsystemCode,
}

impl<'a> ChiMap<'a> {
    pub fn new(code: &'a SubsystemCode) -> Self {
        ChiMap { code }
    }

    pub fn apply(&self, j: &CMat) -> RMat {
        let x = self.code.phi_inverse(j);
        let e = &self.code.physical_basis;
        let d = e.len();
        let mut out = RMat::zeros(d, d);
        for b in 0..d {
            let cb = commutator(&x, &e[b]);
            for a in 0..d {
                // -i tr(C_b E_a) = -i sum_{rs} C_b[r,s] E_a[s,r]
                let tr: crate::linalg::C64 = cb.iter().zip(e[a].transpose().iter()).map(|(p, q)| p * q).sum();
                out[(a, b)] = (tr * c(0.0, -1.0)).re;
            }
        }
        out
    }

    /// `χ(su(n_cs))` as a subspace of d_cs x d_cs matrices.
    pub fn su_image(&self) -> LieBasis {
        let n = self.code.order;
        let els: Vec<CMat> = gell_mann(n).iter().skip(1).map(|j| to_complex(&self.apply(j))).collect();
        LieBasis::span(n * n, &els, 1e-9)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Standard {
    #[serde(rename = "OC")]
    Oc,
    #[serde(rename = "ESC")]
    Esc,
    #[serde(rename = "L-OC")]
    Loc,
    #[serde(rename = "L-ESC")]
    Lesc,
}

impl std::str::FromStr for Standard {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "oc" => Ok(Standard::Oc),
            "esc" => Ok(Standard::Esc),
            "loc" | "l-oc" => Ok(Standard::Loc),
            "lesc" | "l-esc" => Ok(Standard::Lesc),
            _ => Err(Error::InvalidParameter(format!("unknown controllability standard `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    #[serde(rename = "lie_P", skip_serializing_if = "Option::is_none")]
    pub lie_p: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lie_cs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lie_cs_prime: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lie_cs_star: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lieham: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e11_span: Option<usize>,
    pub target: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControllabilityReport {
    pub standard: Standard,
    pub verdict: bool,
    pub dims: Dims,
    pub branch: String,
}

/// Lie closure of `{-iH0, -iH_k}` for a closed system.
pub fn lieham(model: &LindbladModel, tol: &Tolerances) -> Result<LieBasis> {
    if model.noise.iter().any(|ch| ch.rate > 0.0) {
        return Err(Error::NoisyModel);
    }
    let mi = c(0.0, -1.0);
    let gens: Vec<CMat> = std::iter::once(&model.drift).chain(&model.controls).map(|h| h * mi).collect();
    lie_closure(&gens, model.dim * model.dim, tol.closure)
}

pub fn test_oc(model: &LindbladModel, tol: &Tolerances) -> Result<ControllabilityReport> {
    let l = lieham(model, tol)?;
    let target = model.dim * model.dim - 1;
    Ok(ControllabilityReport {
        standard: Standard::Oc,
        verdict: l.dim() >= target,
        dims: Dims { lieham: Some(l.dim()), target, ..Default::default() },
        branch: "closure-dimension".into(),
    })
}

fn commutator_span(x: &CMat, space: &LieBasis) -> usize {
    let els: Vec<CMat> = space.elements().iter().map(|a| commutator(x, a)).collect();
    LieBasis::span(x.nrows(), &els, 1e-8).dim()
}

fn e11(n: usize) -> CMat {
    let mut e = CMat::zeros(n, n);
    e[(0, 0)] = c(1.0, 0.0);
    e
}

pub fn test_esc(model: &LindbladModel, tol: &Tolerances) -> Result<ControllabilityReport> {
    let l = lieham(model, tol)?;
    let n = model.dim;
    let oc_target = n * n - 1;
    if l.dim() >= oc_target {
        return Ok(ControllabilityReport {
            standard: Standard::Esc,
            verdict: true,
            dims: Dims { lieham: Some(l.dim()), target: oc_target, ..Default::default() },
            branch: "oc".into(),
        });
    }
    // Commutators with iI vanish, so this also covers sp ⊕ span{iI}.
    let span = commutator_span(&(e11(n) * c(0.0, 1.0)), &l);
    let target = 2 * (n - 1);
    Ok(ControllabilityReport {
        standard: Standard::Esc,
        verdict: span == target,
        dims: Dims { lieham: Some(l.dim()), e11_span: Some(span), target, ..Default::default() },
        branch: if span == target { "e11-commutator".into() } else { "none".into() },
    })
}

/// DIFS, effective Hamiltonians and `lie_P` for a protected subspace.
#[derive(Clone, Debug)]
pub struct SchemeAnalysis {
    /// Basis of `im Π_P` used for all P-coordinates.
    pub p: RMat,
    pub difs: Difs,
    pub effective: EffectiveHamiltonians,
    pub lie_p: LieBasis,
}

pub fn analyze_scheme(g: &GModel, p: &RMat, tol: &Tolerances) -> Result<SchemeAnalysis> {
    let difs = compute_difs(g, p, tol)?;
    let effective = effective_hamiltonians(g, p, &difs);
    let d = p.ncols();
    let lie_p = lie_closure(&effective.generators(), d * d, tol.closure)?;
    Ok(SchemeAnalysis { p: p.clone(), difs, effective, lie_p })
}

/// Intermediate spaces of the logical tests.
pub struct LogicalSpaces {
    pub lie_cs: LieBasis,
    pub chi_su: LieBasis,
    pub star: LieBasis,
}

pub fn logical_spaces(analysis: &SchemeAnalysis, code: &SubsystemCode, tol: &Tolerances) -> Result<LogicalSpaces> {
    let cc = analysis.p.tr_mul(&code.core);
    let residual = (&analysis.p * &cc - &code.core).norm();
    if residual > 1e-8 {
        return Err(Error::ChainViolated { residual });
    }
    let d_p = analysis.p.ncols();
    let d_cs = code.core.ncols();
    let mut q = RMat::zeros(d_p, d_p);
    q.columns_mut(0, d_cs).copy_from(&cc);
    q.columns_mut(d_cs, d_p - d_cs).copy_from(&complement(&cc));
    let lie_cs = erase_space(&analysis.lie_p.conjugate(&q), d_cs);
    let chi_su = ChiMap::new(code).su_image();
    let star = lie_cs.intersect(&chi_su, tol.intersect);
    Ok(LogicalSpaces { lie_cs, chi_su, star })
}

pub fn test_loc_with(analysis: &SchemeAnalysis, code: &SubsystemCode, tol: &Tolerances) -> Result<ControllabilityReport> {
    let sp = logical_spaces(analysis, code, tol)?;
    let target = code.dim() - 1;
    Ok(ControllabilityReport {
        standard: Standard::Loc,
        verdict: sp.star.dim() == target,
        dims: Dims {
            lie_p: Some(analysis.lie_p.dim()),
            lie_cs: Some(sp.lie_cs.dim()),
            lie_cs_prime: Some(sp.chi_su.dim()),
            lie_cs_star: Some(sp.star.dim()),
            target,
            ..Default::default()
        },
        branch: "intersection-dimension".into(),
    })
}

pub fn test_lesc_with(analysis: &SchemeAnalysis, code: &SubsystemCode, tol: &Tolerances) -> Result<ControllabilityReport> {
    let sp = logical_spaces(analysis, code, tol)?;
    let mut dims = Dims {
        lie_p: Some(analysis.lie_p.dim()),
        lie_cs: Some(sp.lie_cs.dim()),
        lie_cs_prime: Some(sp.chi_su.dim()),
        lie_cs_star: Some(sp.star.dim()),
        target: code.dim() - 1,
        ..Default::default()
    };
    if sp.star.dim() == code.dim() - 1 {
        return Ok(ControllabilityReport { standard: Standard::Lesc, verdict: true, dims, branch: "l-oc".into() });
    }
    let chi_e11 = to_complex(&ChiMap::new(code).apply(&e11(code.order)));
    let span = commutator_span(&chi_e11, &sp.star);
    let target = 2 * (code.order - 1);
    dims.e11_span = Some(span);
    dims.target = target;
    Ok(ControllabilityReport {
        standard: Standard::Lesc,
        verdict: span == target,
        dims,
        branch: if span == target { "e11-commutator".into() } else { "none".into() },
    })
}

pub fn run_test(standard: Standard, analysis: &SchemeAnalysis, code: &SubsystemCode, tol: &Tolerances) -> Result<ControllabilityReport> {
    match standard {
        Standard::Loc => test_loc_with(analysis, code, tol),
        Standard::Lesc => test_lesc_with(analysis, code, tol),
        _ => Err(Error::InvalidParameter("OC/ESC apply to closed models; use L-OC or L-ESC for codes".into())),
    }
}

/// Convenience wrapper running the full scheme analysis.
pub fn test_loc(scheme: &crate::pstatic::PStaticScheme, g: &GModel, tol: &Tolerances) -> Result<ControllabilityReport> {
    let g = scheme.model(g)?;
    test_loc_with(&analyze_scheme(&g, &scheme.p, tol)?, &scheme.code, tol)
}

pub fn test_lesc(scheme: &crate::pstatic::PStaticScheme, g: &GModel, tol: &Tolerances) -> Result<ControllabilityReport> {
    let g = scheme.model(g)?;
    test_lesc_with(&analyze_scheme(&g, &scheme.p, tol)?, &scheme.code, tol)
}

/// Hilbert-space probes for eigenvector candidates: the physical
/// effective Hamiltonians of the scheme.
pub fn search_probes(model: &LindbladModel, analysis: &SchemeAnalysis, controls: &[usize]) -> Vec<CMat> {
    EffectiveHamiltonians::physical(model, &analysis.difs, controls)
}

/// Basis passed to [`crate::codes::search_codes`]: it needs the same
/// coherence-vector basis as the analysis.
pub fn search_with_standard(
    structure: &crate::commutant::CommutantStructure,
    basis: &HermitianBasis,
    analysis: &SchemeAnalysis,
    spec: &crate::codes::SearchSpec,
    standard: Standard,
    tol: &Tolerances,
) -> Result<Vec<crate::codes::SearchHit>> {
    crate::codes::search_codes(structure, basis, spec, |code| Ok(run_test(standard, analysis, code, tol)?.verdict))
}
