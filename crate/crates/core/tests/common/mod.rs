//! Independent oracles and fixtures shared by the integration suites.
#![allow(dead_code)]

use dfsctl_core::commutant::{commutant_structure, interaction_algebra, CommutantStructure};
use dfsctl_core::linalg::{c, ginibre, random_hermitian, rng, CMat, C64};
use dfsctl_core::{GModel, IonParams, LindbladModel, NoiseChannel, PauliString, Tolerances};
use rand::Rng;

pub fn pauli(s: &str) -> CMat {
    s.parse::<PauliString>().unwrap().matrix()
}

/// Column-major vectorization: `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.
pub fn vec_of(m: &CMat) -> CMat {
    CMat::from_column_slice(m.len(), 1, m.as_slice())
}

pub fn unvec(v: &CMat, n: usize) -> CMat {
    CMat::from_column_slice(n, n, v.as_slice())
}

/// Dense Lindblad superoperator built from Kronecker products.
pub fn liouvillian_oracle(m: &LindbladModel, u: &[f64]) -> CMat {
    let n = m.dim;
    let id = CMat::identity(n, n);
    let mut h = m.drift.clone();
    for (k, hk) in m.controls.iter().enumerate() {
        h += hk * c(u[k], 0.0);
    }
    let mi = c(0.0, -1.0);
    let mut l = (id.kronecker(&h) - h.transpose().kronecker(&id)) * mi;
    for ch in &m.noise {
        let d = &ch.operator;
        let dd = d.adjoint() * d;
        let term = d.map(|z| z.conj()).kronecker(d) - (id.kronecker(&dd) + dd.transpose().kronecker(&id)) * c(0.5, 0.0);
        l += term * c(ch.rate, 0.0);
    }
    l
}

/// Exact density-matrix propagation through a piecewise-constant field,
/// sampled at `times` (sorted, within `[0, horizon]`).
pub fn density_oracle(m: &LindbladModel, grid: &[f64], values: &[Vec<f64>], rho0: &CMat, times: &[f64]) -> Vec<CMat> {
    let n = m.dim;
    let mut out = Vec::new();
    let mut state = vec_of(rho0);
    let mut t = 0.0;
    let mut seg = 0;
    for &target in times {
        while t < target {
            let end = grid.get(seg + 1).copied().unwrap_or(f64::INFINITY).min(target);
            let l = liouvillian_oracle(m, &values[seg]);
            state = (l * c(end - t, 0.0)).exp() * state;
            t = end;
            if grid.get(seg + 1).is_some_and(|&g| t >= g) {
                seg += 1;
            }
        }
        out.push(unvec(&state, n));
    }
    out
}

pub fn random_density(n: usize, seed: u64) -> CMat {
    let a = ginibre(n, &mut rng(seed));
    let r = &a * a.adjoint();
    let t = r.trace();
    r / t
}

/// Random drift, two controls and two general (non-Hermitian) noise channels.
pub fn random_model(n: usize, seed: u64) -> LindbladModel {
    let mut r = rng(seed);
    let drift = random_hermitian(n, &mut r);
    let controls = vec![random_hermitian(n, &mut r), random_hermitian(n, &mut r)];
    let noise = (0..2)
        .map(|_| {
            let op = ginibre(n, &mut r) * c(1.0 / n as f64, 0.0);
            NoiseChannel { rate: r.random_range(0.1..1.0), operator: op }
        })
        .collect();
    LindbladModel::new(drift, controls, noise).unwrap()
}

/// `V (⊕_k M_{n_k} ⊗ I_{m_k}) V†` generated by two random elements.
pub fn random_block_algebra(blocks: &[(usize, usize)], seed: u64) -> (usize, Vec<CMat>) {
    let n: usize = blocks.iter().map(|(o, m)| o * m).sum();
    let mut r = rng(seed);
    let v = dfsctl_core::linalg::haar_unitary(n, &mut r);
    let gens = (0..2)
        .map(|_| {
            let mut x = CMat::zeros(n, n);
            let mut off = 0;
            for &(o, m) in blocks {
                let a = ginibre(o, &mut r);
                let amp = CMat::identity(m, m).kronecker(&a);
                x.view_mut((off, off), (o * m, o * m)).copy_from(&amp);
                off += o * m;
            }
            &v * x * v.adjoint()
        })
        .collect();
    (n, gens)
}

pub struct Ion {
    pub model: LindbladModel,
    pub g: GModel,
    pub structure: CommutantStructure,
}

pub fn ion() -> Ion {
    let model = IonParams::default().model().unwrap();
    let g = GModel::from_model(&model).unwrap();
    let structure = commutant_structure(&interaction_algebra(&model), &g.basis, 1, &Tolerances::default()).unwrap();
    Ion { model, g, structure }
}

/// Displayed ion-scheme input map, controls in the published order.
pub fn published_zn() -> dfsctl_core::linalg::RMat {
    let s = 2f64.sqrt();
    let rows = [
        [s, 0.0, 0.0, 0.0],
        [s, 0.0, 0.0, 0.0],
        [0.0, 4.0, 0.0, 0.0],
        [0.0, 0.0, s, 0.0],
        [0.0, 0.0, s, 0.0],
        [0.0, 0.0, 0.0, s],
        [0.0, 0.0, 0.0, s],
    ];
    dfsctl_core::linalg::RMat::from_fn(7, 4, |i, j| -0.25 * rows[i][j])
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z: &C64| z.norm()).fold(0.0, f64::max)
}
