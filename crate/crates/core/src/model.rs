//! Lindblad models, Pauli strings and the JSON model document.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, is_hermitian, CMat, C64};
use crate::tol::Tolerances;

/// Tensor product of single-qubit Paulis. The first symbol acts on the most
/// significant bit of the computational-basis index.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    /// 0 = I, 1 = X, 2 = Y, 3 = Z.
    symbols: Vec<u8>,
}

const SYMBOLS: [char; 4] = ['I', 'X', 'Y', 'Z'];

impl PauliString {
    pub fn new(symbols: Vec<u8>) -> Self {
        assert!(symbols.iter().all(|&s| s < 4));
        PauliString { symbols }
    }

    /// String with index `idx` in the base-4 ordering I<X<Y<Z, first qubit
    /// most significant.
    pub fn from_index(idx: usize, n: usize) -> Self {
        let mut symbols = vec![0u8; n];
        let mut r = idx;
        for k in (0..n).rev() {
            symbols[k] = (r % 4) as u8;
            r /= 4;
        }
        PauliString { symbols }
    }

    pub fn index(&self) -> usize {
        self.symbols.iter().fold(0, |acc, &s| acc * 4 + s as usize)
    }

    pub fn n_qubits(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn weight(&self) -> usize {
        self.symbols.iter().filter(|&&s| s != 0).count()
    }

    pub fn x_mask(&self) -> usize {
        self.mask(|s| s == 1 || s == 2)
    }

    pub fn z_mask(&self) -> usize {
        self.mask(|s| s == 2 || s == 3)
    }

    fn mask(&self, f: impl Fn(u8) -> bool) -> usize {
        let n = self.symbols.len();
        self.symbols
            .iter()
            .enumerate()
            .fold(0, |acc, (k, &s)| if f(s) { acc | 1 << (n - 1 - k) } else { acc })
    }

    fn n_y(&self) -> usize {
        self.symbols.iter().filter(|&&s| s == 2).count()
    }

    /// `P|b> = phase(b) |b ^ x>`.
    #[inline]
    pub fn phase(&self, b: usize, z: usize, iy: C64) -> C64 {
        if (b & z).count_ones() % 2 == 1 {
            -iy
        } else {
            iy
        }
    }

    fn iy(&self) -> C64 {
        match self.n_y() % 4 {
            0 => c(1.0, 0.0),
            1 => c(0.0, 1.0),
            2 => c(-1.0, 0.0),
            _ => c(0.0, -1.0),
        }
    }

    /// Dense matrix with every factor scaled to unit Frobenius norm, so the
    /// whole string has unit norm.
    pub fn matrix(&self) -> CMat {
        let scale = (self.dim() as f64).sqrt().recip();
        self.raw_matrix() * c(scale, 0.0)
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_qubits()
    }

    /// Dense matrix of the plain Kronecker product of Pauli matrices.
    pub fn raw_matrix(&self) -> CMat {
        let n = 1usize << self.n_qubits();
        let (x, z, iy) = (self.x_mask(), self.z_mask(), self.iy());
        let mut m = CMat::zeros(n, n);
        for b in 0..n {
            m[(b ^ x, b)] = self.phase(b, z, iy);
        }
        m
    }

    /// `tr(M P)` in O(N), with `P` the raw (unnormalised) string.
    pub fn trace_with(&self, m: &CMat) -> C64 {
        let n = m.nrows();
        let (x, z, iy) = (self.x_mask(), self.z_mask(), self.iy());
        let mut acc = C64::new(0.0, 0.0);
        for b in 0..n {
            acc += m[(b, b ^ x)] * self.phase(b, z, iy);
        }
        acc
    }

    /// `M P` in O(N^2), raw string.
    pub fn right_mul(&self, m: &CMat) -> CMat {
        let n = m.nrows();
        let (x, z, iy) = (self.x_mask(), self.z_mask(), self.iy());
        let mut out = CMat::zeros(m.nrows(), n);
        for b in 0..n {
            let ph = self.phase(b, z, iy);
            let src = m.column(b ^ x);
            let mut dst = out.column_mut(b);
            for a in 0..m.nrows() {
                dst[a] = src[a] * ph;
            }
        }
        out
    }

    /// `P M` in O(N^2), raw string.
    pub fn left_mul(&self, m: &CMat) -> CMat {
        let n = m.nrows();
        let (x, z, iy) = (self.x_mask(), self.z_mask(), self.iy());
        let mut out = CMat::zeros(n, m.ncols());
        for b in 0..n {
            let ph = self.phase(b, z, iy);
            for col in 0..m.ncols() {
                out[(b ^ x, col)] = m[(b, col)] * ph;
            }
        }
        out
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.symbols {
            write!(f, "{}", SYMBOLS[s as usize])?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let symbols = s
            .chars()
            .map(|ch| match ch.to_ascii_uppercase() {
                'I' => Ok(0),
                'X' => Ok(1),
                'Y' => Ok(2),
                'Z' => Ok(3),
                _ => Err(Error::validation("string", format!("bad Pauli symbol `{ch}` in `{s}`"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        if symbols.is_empty() {
            return Err(Error::validation("string", "empty Pauli string"));
        }
        Ok(PauliString { symbols })
    }
}

/// Open quantum system `drho/dt = -i[H0 + sum u_k H_k, rho] + sum_j gamma_j D[d_j](rho)`.
#[derive(Clone, Debug)]
pub struct LindbladModel {
    pub dim: usize,
    pub qubits: Option<usize>,
    pub drift: CMat,
    pub controls: Vec<CMat>,
    pub control_labels: Vec<String>,
    pub noise: Vec<NoiseChannel>,
}

#[derive(Clone, Debug)]
pub struct NoiseChannel {
    pub rate: f64,
    pub operator: CMat,
}

impl LindbladModel {
    pub fn new(drift: CMat, controls: Vec<CMat>, noise: Vec<NoiseChannel>) -> Result<Self> {
        let dim = drift.nrows();
        let qubits = if dim.is_power_of_two() { Some(dim.trailing_zeros() as usize) } else { None };
        let labels = (1..=controls.len()).map(|k| format!("H{k}")).collect();
        let m = LindbladModel { dim, qubits, drift, controls, control_labels: labels, noise };
        m.validate(&Tolerances::default())?;
        Ok(m)
    }

    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        let n = self.dim;
        if n < 2 {
            return Err(Error::validation("hilbert_dim", "must be at least 2"));
        }
        if let Some(q) = self.qubits {
            if 1usize.checked_shl(q as u32) != Some(n) {
                return Err(Error::validation("qubits", format!("2^{q} != hilbert_dim {n}")));
            }
        }
        let check = |name: &str, m: &CMat, herm: bool| -> Result<()> {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::validation(name, format!("expected {n}x{n}, got {}x{}", m.nrows(), m.ncols())));
            }
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::validation(name, "non-finite entry"));
            }
            if herm && !is_hermitian(m, tol.herm) {
                return Err(Error::validation(name, "operator is not Hermitian"));
            }
            Ok(())
        };
        check("drift", &self.drift, true)?;
        for (k, h) in self.controls.iter().enumerate() {
            check(&format!("controls[{k}]"), h, true)?;
        }
        for (k, ch) in self.noise.iter().enumerate() {
            if !(ch.rate.is_finite() && ch.rate >= 0.0) {
                return Err(Error::validation(format!("noise[{k}].rate"), "rate must be non-negative"));
            }
            check(&format!("noise[{k}].operator"), &ch.operator, false)?;
        }
        if self.control_labels.len() != self.controls.len() {
            return Err(Error::validation("controls", "label count mismatch"));
        }
        Ok(())
    }

    pub fn n_controls(&self) -> usize {
        self.controls.len()
    }

    /// Hamiltonian `H0 + sum u_k H_k`.
    pub fn hamiltonian(&self, u: &[f64]) -> CMat {
        let mut h = self.drift.clone();
        for (uk, hk) in u.iter().zip(&self.controls) {
            h += hk * C64::new(*uk, 0.0);
        }
        h
    }

    /// Lindblad generator applied to a density operator.
    pub fn apply_lindbladian(&self, u: &[f64], rho: &CMat) -> CMat {
        let h = self.hamiltonian(u);
        let mut out = (&h * rho - rho * &h) * C64::new(0.0, -1.0);
        for ch in &self.noise {
            let d = &ch.operator;
            let dd = d.adjoint() * d;
            let term = d * rho * d.adjoint() - (&dd * rho + rho * &dd) * C64::new(0.5, 0.0);
            out += term * C64::new(ch.rate, 0.0);
        }
        out
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(s)?;
        doc.into_model()
    }

    pub fn to_document(&self) -> ModelDocument {
        ModelDocument {
            hilbert_dim: self.dim,
            qubits: self.qubits,
            drift: OperatorSpec::dense(&self.drift, None),
            controls: self
                .controls
                .iter()
                .zip(&self.control_labels)
                .map(|(h, l)| OperatorSpec::dense(h, Some(l.clone())))
                .collect(),
            noise: self
                .noise
                .iter()
                .map(|ch| NoiseSpec { rate: ch.rate, operator: OperatorSpec::dense(&ch.operator, None) })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub hilbert_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubits: Option<usize>,
    pub drift: OperatorSpec,
    #[serde(default)]
    pub controls: Vec<OperatorSpec>,
    #[serde(default)]
    pub noise: Vec<NoiseSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub rate: f64,
    pub operator: OperatorSpec,
}

/// Operator given either densely (`[[ [re, im], ... ], ...]`, row-major) or as
/// a weighted sum of Pauli strings.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dense: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pauli_sum: Option<Vec<PauliTerm>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PauliTerm {
    pub coeff: Coeff,
    pub string: String,
}

/// Real number or `[re, im]` pair.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coeff {
    Real(f64),
    Complex([f64; 2]),
}

impl Coeff {
    fn value(self) -> C64 {
        match self {
            Coeff::Real(x) => c(x, 0.0),
            Coeff::Complex([re, im]) => c(re, im),
        }
    }
}

impl OperatorSpec {
    pub fn dense(m: &CMat, label: Option<String>) -> Self {
        let rows = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
            .collect();
        OperatorSpec { label, dense: Some(rows), pauli_sum: None }
    }

    pub fn pauli(terms: &[(f64, &str)], label: Option<String>) -> Self {
        OperatorSpec {
            label,
            dense: None,
            pauli_sum: Some(
                terms
                    .iter()
                    .map(|&(c, s)| PauliTerm { coeff: Coeff::Real(c), string: s.to_string() })
                    .collect(),
            ),
        }
    }

    pub fn to_matrix(&self, field: &str, dim: usize) -> Result<CMat> {
        match (&self.dense, &self.pauli_sum) {
            (Some(rows), None) => {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(Error::validation(field, format!("dense operator must be {dim}x{dim}")));
                }
                Ok(CMat::from_fn(dim, dim, |i, j| c(rows[i][j][0], rows[i][j][1])))
            }
            (None, Some(terms)) => {
                if !dim.is_power_of_two() {
                    return Err(Error::validation(field, "pauli_sum requires a qubit register"));
                }
                let n = dim.trailing_zeros() as usize;
                let mut m = CMat::zeros(dim, dim);
                for t in terms {
                    let p: PauliString = t.string.parse().map_err(|e: Error| Error::validation(field, e.to_string()))?;
                    if p.n_qubits() != n {
                        return Err(Error::validation(field, format!("string `{}` has length {} but register has {n} qubits", t.string, p.n_qubits())));
                    }
                    m += p.matrix() * t.coeff.value();
                }
                Ok(m)
            }
            _ => Err(Error::validation(field, "exactly one of `dense` or `pauli_sum` is required")),
        }
    }
}

impl ModelDocument {
    pub fn into_model(self) -> Result<LindbladModel> {
        let n = self.hilbert_dim;
        if n < 2 {
            return Err(Error::validation("hilbert_dim", "must be at least 2"));
        }
        let drift = self.drift.to_matrix("drift", n)?;
        let mut controls = Vec::new();
        let mut labels = Vec::new();
        for (k, spec) in self.controls.iter().enumerate() {
            controls.push(spec.to_matrix(&format!("controls[{k}]"), n)?);
            labels.push(spec.label.clone().unwrap_or_else(|| format!("H{}", k + 1)));
        }
        let mut noise = Vec::new();
        for (k, ns) in self.noise.iter().enumerate() {
            noise.push(NoiseChannel { rate: ns.rate, operator: ns.operator.to_matrix(&format!("noise[{k}].operator"), n)? });
        }
        let qubits = self.qubits.or(if n.is_power_of_two() { Some(n.trailing_zeros() as usize) } else { None });
        let m = LindbladModel { dim: n, qubits, drift, controls, control_labels: labels, noise };
        m.validate(&Tolerances::default())?;
        Ok(m)
    }
}

/// Parameters of the trapped-ion register with collective dephasing on the
/// data ions.
#[derive(Clone, Debug)]
pub struct IonParams {
    pub ions: usize,
    pub nu: f64,
    pub mu: f64,
    pub gamma: f64,
    pub controls: Vec<String>,
}

impl Default for IonParams {
    fn default() -> Self {
        IonParams {
            ions: 5,
            nu: 19.0 / 3.0,
            mu: 8.0 / 5.0,
            gamma: 10.0 * PI / 3.0,
            controls: ["YXIXI", "YXZXZ", "YZZZZ", "ZIIYX", "ZIYIX", "ZZYZX", "ZZZYX"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

impl IonParams {
    /// Drift `pi nu sum_{j>=2} Z_j + (pi mu / 2) sum_{j>=2} Z_1 Z_j`, noise
    /// `sqrt(gamma) sum_{j>=2} Z_j`.
    pub fn document(&self) -> ModelDocument {
        let n = self.ions;
        let single = |j: usize, first: bool| {
            let mut s = vec!['I'; n];
            s[j] = 'Z';
            if first {
                s[0] = 'Z';
            }
            s.into_iter().collect::<String>()
        };
        let mut drift = Vec::new();
        for j in 1..n {
            drift.push((PI * self.nu, single(j, false)));
        }
        for j in 1..n {
            drift.push((PI * self.mu / 2.0, single(j, true)));
        }
        let drift_terms: Vec<(f64, &str)> = drift.iter().map(|(c, s)| (*c, s.as_str())).collect();
        let noise_strings: Vec<String> = (1..n).map(|j| single(j, false)).collect();
        let noise_terms: Vec<(f64, &str)> = noise_strings.iter().map(|s| (1.0, s.as_str())).collect();
        ModelDocument {
            hilbert_dim: 1 << n,
            qubits: Some(n),
            drift: OperatorSpec::pauli(&drift_terms, None),
            controls: self
                .controls
                .iter()
                .map(|s| OperatorSpec::pauli(&[(1.0, s.as_str())], Some(s.clone())))
                .collect(),
            noise: vec![NoiseSpec { rate: self.gamma, operator: OperatorSpec::pauli(&noise_terms, None) }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ions < 2 {
            return Err(Error::InvalidParameter("ion register needs at least 2 qubits".into()));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::InvalidParameter("dephasing rate must be positive".into()));
        }
        if !(self.nu.is_finite() && self.mu.is_finite()) {
            return Err(Error::InvalidParameter("nu and mu must be finite".into()));
        }
        Ok(())
    }

    pub fn model(&self) -> Result<LindbladModel> {
        self.validate()?;
        self.document().into_model()
    }
}

/// Bus-qubit weight of a single-qubit Pauli: I, X -> 1, Y -> 0, Z -> -1.
pub fn q_value(symbol: u8) -> i64 {
    match symbol {
        0 | 1 => 1,
        2 => 0,
        _ => -1,
    }
}

/// Sorted q-values of qubits 2..n.
pub fn q_signature(p: &PauliString) -> Vec<i64> {
    let mut q: Vec<i64> = p.symbols()[1..].iter().map(|&s| q_value(s)).collect();
    q.sort_unstable();
    q
}

/// Strings whose bus symbol satisfies `q(o_1) = sum_{j>=2} q(o_j) (mod 4)` with
/// that residue in {-1, 0}, in lexicographic order I<X<Y<Z.
pub fn enumerate_control_pool(n: usize) -> Vec<PauliString> {
    (0..4usize.pow(n as u32))
        .map(|idx| PauliString::from_index(idx, n))
        .filter(|p| {
            let bus = q_value(p.symbols()[0]).rem_euclid(4);
            let rest = p.symbols()[1..].iter().map(|&s| q_value(s)).sum::<i64>().rem_euclid(4);
            bus == rest && (bus == 3 || bus == 0)
        })
        .collect()
}

/// `4^n / 8 + 2^(n/2 - 1) cos(pi n / 4)`, rounded.
pub fn control_pool_size(n: usize) -> usize {
    let n = n as f64;
    (4f64.powf(n) / 8.0 + 2f64.powf(n / 2.0 - 1.0) * (PI * n / 4.0).cos()).round() as usize
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ResourceCheck {
    pub valid: bool,
    pub reasons: Vec<String>,
}

/// Checks the count bound and that resources acting as Y on the bus have
/// pairwise distinct q-signatures.
pub fn validate_resource_set(set: &[PauliString], max_nc: usize) -> ResourceCheck {
    let mut reasons = Vec::new();
    if set.len() > max_nc {
        reasons.push(format!("{} resources exceed the limit of {max_nc}", set.len()));
    }
    let ybus: Vec<&PauliString> = set.iter().filter(|p| p.symbols()[0] == 2).collect();
    for (a, pa) in ybus.iter().enumerate() {
        for pb in &ybus[a + 1..] {
            if q_signature(pa) == q_signature(pb) {
                reasons.push(format!("{pa} and {pb} share q-signature {:?}", q_signature(pa)));
            }
        }
    }
    ResourceCheck { valid: reasons.is_empty(), reasons }
}
