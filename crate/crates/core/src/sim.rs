//! Coherence-vector and channel-matrix propagation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cvs::GModel;
use crate::error::{Error, Result};
use crate::linalg::{RMat, RVec};
use crate::pstatic::Difs;

/// Largest Bdim for which constant intervals use a dense matrix exponential.
pub const EXPM_MAX_DIM: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    Constant,
    PiecewiseConstant,
    Effective,
}

/// Piecewise-constant control input. `values[i]` holds on `[grid[i], grid[i+1])`,
/// the last value up to `horizon`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ControlField {
    pub kind: FieldKind,
    pub grid: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub horizon: f64,
}

impl ControlField {
    pub fn constant(u: Vec<f64>, horizon: f64) -> Self {
        ControlField { kind: FieldKind::Constant, grid: vec![0.0], values: vec![u], horizon }
    }

    pub fn zero(n_controls: usize, horizon: f64) -> Self {
        Self::constant(vec![0.0; n_controls], horizon)
    }

    pub fn piecewise(grid: Vec<f64>, values: Vec<Vec<f64>>, horizon: f64) -> Result<Self> {
        let f = ControlField { kind: FieldKind::PiecewiseConstant, grid, values, horizon };
        f.validate()?;
        Ok(f)
    }

    /// Realizes `u = zN u_eff + zoff` on each interval, so the field stays in the DIFS.
    pub fn effective(difs: &Difs, grid: Vec<f64>, u_eff: &[Vec<f64>], horizon: f64) -> Result<Self> {
        let mut values = Vec::with_capacity(u_eff.len());
        for ue in u_eff {
            if ue.len() != difs.n_eff {
                return Err(Error::InvalidParameter(format!(
                    "effective input has {} entries, expected {}",
                    ue.len(),
                    difs.n_eff
                )));
            }
            values.push(difs.input(ue).iter().copied().collect());
        }
        let f = ControlField { kind: FieldKind::Effective, grid, values, horizon };
        f.validate()?;
        Ok(f)
    }

    /// Uniform grid with i.i.d. normal effective inputs scaled by `amplitude`.
    pub fn random_effective(difs: &Difs, intervals: usize, amplitude: f64, horizon: f64, seed: u64) -> Result<Self> {
        let mut r = crate::linalg::rng(seed);
        let grid: Vec<f64> = (0..intervals).map(|i| horizon * i as f64 / intervals as f64).collect();
        let ue: Vec<Vec<f64>> = (0..intervals)
            .map(|_| crate::linalg::gaussian_vec(difs.n_eff, &mut r).iter().map(|x| x * amplitude).collect())
            .collect();
        Self::effective(difs, grid, &ue, horizon)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.horizon.is_finite() || self.horizon < 0.0 {
            return Err(Error::validation("horizon", "must be finite and non-negative"));
        }
        if self.grid.is_empty() || self.grid.len() != self.values.len() {
            return Err(Error::validation("grid", "needs one time per value, at least one"));
        }
        if self.grid[0] != 0.0 {
            return Err(Error::validation("grid", "must start at 0"));
        }
        if self.grid.iter().any(|t| !t.is_finite()) || self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation("grid", "times must be strictly increasing"));
        }
        let n = self.values[0].len();
        if self.values.iter().any(|v| v.len() != n || v.iter().any(|x| !x.is_finite())) {
            return Err(Error::validation("values", "inconsistent length or non-finite entry"));
        }
        Ok(())
    }

    pub fn n_controls(&self) -> usize {
        self.values[0].len()
    }

    pub fn at(&self, t: f64) -> &[f64] {
        let i = self.grid.partition_point(|&s| s <= t).saturating_sub(1);
        &self.values[i]
    }

    /// Constant pieces clipped to `[0, horizon]`.
    pub fn intervals(&self) -> Vec<(f64, f64, &[f64])> {
        let mut out = Vec::new();
        for (i, &t0) in self.grid.iter().enumerate() {
            if t0 >= self.horizon {
                break;
            }
            let t1 = self.grid.get(i + 1).copied().unwrap_or(self.horizon).min(self.horizon);
            out.push((t0, t1, self.values[i].as_slice()));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Matrix exponential when Bdim <= 256, adaptive integration otherwise.
    Auto,
    Expm,
    Adaptive,
}

#[derive(Clone, Debug)]
pub struct SimOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Number of uniform output samples after t = 0.
    pub samples: usize,
    pub method: Method,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { rtol: 1e-9, atol: 1e-12, samples: 100, method: Method::Auto }
    }
}

impl SimOptions {
    pub fn from_tolerances(tol: &crate::Tolerances) -> Self {
        SimOptions { rtol: tol.ode_rtol, atol: tol.ode_atol, ..Default::default() }
    }
}

/// Orthonormal bases used for leakage diagnostics.
#[derive(Clone, Debug, Default)]
pub struct Diagnostics {
    pub p: Option<RMat>,
    pub nc: Option<RMat>,
}

fn leakage(basis: &Option<RMat>, v: &RVec) -> f64 {
    match basis {
        Some(b) => {
            let proj = b.tr_mul(v);
            (v - b * proj).norm()
        }
        None => f64::NAN,
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<RVec>,
    pub leak_p: Vec<f64>,
    pub leak_nc: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub samples: usize,
    pub horizon: f64,
    pub initial_norm: f64,
    pub final_norm: f64,
    pub max_leak_p: Option<f64>,
    pub max_leak_nc: Option<f64>,
}

impl Trajectory {
    pub fn summary(&self) -> TrajectorySummary {
        let max = |xs: &[f64]| {
            if xs.iter().any(|x| x.is_nan()) {
                None
            } else {
                Some(xs.iter().cloned().fold(0.0, f64::max))
            }
        };
        TrajectorySummary {
            samples: self.times.len(),
            horizon: self.times.last().copied().unwrap_or(0.0),
            initial_norm: self.states.first().map(|v| v.norm()).unwrap_or(0.0),
            final_norm: self.states.last().map(|v| v.norm()).unwrap_or(0.0),
            max_leak_p: max(&self.leak_p),
            max_leak_nc: max(&self.leak_nc),
        }
    }

    /// CSV with time, the selected coordinates and both leakage columns.
    pub fn to_csv(&self, columns: &[usize]) -> String {
        let mut s = String::from("t");
        for c in columns {
            s.push_str(&format!(",v{c}"));
        }
        s.push_str(",leak_p,leak_nc\n");
        for (i, t) in self.times.iter().enumerate() {
            s.push_str(&format!("{t:.12e}"));
            for &c in columns {
                s.push_str(&format!(",{:.12e}", self.states[i][c]));
            }
            s.push_str(&format!(",{:.6e},{:.6e}\n", self.leak_p[i], self.leak_nc[i]));
        }
        s
    }
}

fn use_expm(opts: &SimOptions, n: usize) -> bool {
    match opts.method {
        Method::Expm => true,
        Method::Adaptive => false,
        Method::Auto => n <= EXPM_MAX_DIM,
    }
}

/// Output times: uniform samples merged with interval breakpoints.
fn output_times(field: &ControlField, samples: usize) -> Vec<f64> {
    let t_end = field.horizon;
    let mut ts: Vec<f64> = (0..=samples.max(1)).map(|i| t_end * i as f64 / samples.max(1) as f64).collect();
    ts.extend(field.intervals().iter().map(|iv| iv.0));
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * t_end.max(1.0));
    ts
}

/// Propagates `y' = G(t) y` through the field, calling `emit` at every output time.
fn drive<F>(g: &GModel, field: &ControlField, y0: RMat, opts: &SimOptions, mut emit: F) -> Result<()>
where
    F: FnMut(f64, &RMat),
{
    field.validate()?;
    if field.n_controls() != g.n_controls() {
        return Err(Error::InvalidParameter(format!(
            "field has {} channels, model has {}",
            field.n_controls(),
            g.n_controls()
        )));
    }
    let ts = output_times(field, opts.samples);
    let expm = use_expm(opts, g.bdim());
    let mut y = y0;
    emit(0.0, &y);
    let mut k = 1;
    for (t0, t1, u) in field.intervals() {
        let gm = g.g(u);
        let mut t = t0;
        let mut h_guess = 0.0;
        let mut cache: Option<(f64, RMat)> = None;
        while k < ts.len() && ts[k] <= t1 + 1e-14 * t1.abs().max(1.0) {
            let dt = ts[k] - t;
            if dt > 0.0 {
                if expm {
                    let reuse = matches!(&cache, Some((h, _)) if (h - dt).abs() <= 1e-15 * dt.max(1.0));
                    if !reuse {
                        cache = Some((dt, (&gm * dt).exp()));
                    }
                    y = &cache.as_ref().unwrap().1 * &y;
                } else {
                    h_guess = dopri5(&gm, &mut y, t, ts[k], h_guess, opts)?;
                }
            }
            t = ts[k];
            emit(t, &y);
            k += 1;
        }
    }
    Ok(())
}

/// Propagates a coherence vector over `[0, field.horizon]`.
pub fn propagate(g: &GModel, field: &ControlField, v0: &RVec, diag: &Diagnostics, opts: &SimOptions) -> Result<Trajectory> {
    if v0.len() != g.bdim() {
        return Err(Error::InvalidParameter(format!("v0 has length {}, expected {}", v0.len(), g.bdim())));
    }
    let mut tr = Trajectory { times: vec![], states: vec![], leak_p: vec![], leak_nc: vec![] };
    drive(g, field, RMat::from_column_slice(v0.len(), 1, v0.as_slice()), opts, |t, y| {
        let v = y.column(0).into_owned();
        tr.times.push(t);
        tr.leak_p.push(leakage(&diag.p, &v));
        tr.leak_nc.push(leakage(&diag.nc, &v));
        tr.states.push(v);
    })?;
    Ok(tr)
}

/// Independent trajectories in parallel, returned in input order.
pub fn propagate_many(
    g: &GModel,
    field: &ControlField,
    v0s: &[RVec],
    diag: &Diagnostics,
    opts: &SimOptions,
) -> Result<Vec<Trajectory>> {
    v0s.par_iter().map(|v| propagate(g, field, v, diag, opts)).collect()
}

/// Channel matrix C(T) with C(0) = I.
pub fn channel_matrix(g: &GModel, field: &ControlField, opts: &SimOptions) -> Result<RMat> {
    let n = g.bdim();
    let mut out = RMat::identity(n, n);
    let opts = SimOptions { samples: 1, ..opts.clone() };
    drive(g, field, RMat::identity(n, n), &opts, |_, y| out = y.clone())?;
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelCheck {
    /// Largest off-diagonal quadrant norm in the [P | P-perp] frame.
    pub off_diagonal: f64,
    /// ‖C_aaᵀ C_aa − I‖ on the working block.
    pub working_unitarity: f64,
}

/// Block structure of a channel matrix relative to the orthonormal columns `p`.
pub fn channel_check(c: &RMat, p: &RMat) -> ChannelCheck {
    let q = crate::linalg::complement(p);
    let caa = p.transpose() * c * p;
    let cab = p.transpose() * c * &q;
    let cba = q.transpose() * c * p;
    let k = caa.ncols();
    ChannelCheck {
        off_diagonal: cab.norm().max(cba.norm()),
        working_unitarity: (caa.transpose() * &caa - RMat::identity(k, k)).norm(),
    }
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Adaptive DOPRI5 for the autonomous linear system `y' = G y` on `[t0, t1]`.
/// Returns a step-size hint for the next call.
fn dopri5(gm: &RMat, y: &mut RMat, t0: f64, t1: f64, h_hint: f64, opts: &SimOptions) -> Result<f64> {
    let span = t1 - t0;
    let mut h = if h_hint > 0.0 {
        h_hint
    } else {
        let gn = gm.norm().max(1e-300);
        (0.01 / gn).min(span)
    };
    let mut t = t0;
    let mut k1 = gm * &*y;
    let mut last = h;
    while t < t1 {
        let final_step = t + h >= t1;
        let hs = if final_step { t1 - t } else { h };
        if hs <= 1e-14 * t.abs().max(1.0) && !final_step {
            return Err(Error::StepUnderflow { t, h: hs });
        }
        let k2 = gm * (&*y + &k1 * (hs * A21));
        let k3 = gm * (&*y + (&k1 * A31 + &k2 * A32) * hs);
        let k4 = gm * (&*y + (&k1 * A41 + &k2 * A42 + &k3 * A43) * hs);
        let k5 = gm * (&*y + (&k1 * A51 + &k2 * A52 + &k3 * A53 + &k4 * A54) * hs);
        let k6 = gm * (&*y + (&k1 * A61 + &k2 * A62 + &k3 * A63 + &k4 * A64 + &k5 * A65) * hs);
        let y_new = &*y + (&k1 * B1 + &k3 * B3 + &k4 * B4 + &k5 * B5 + &k6 * B6) * hs;
        let k7 = gm * &y_new;
        let err = (&k1 * E1 + &k3 * E3 + &k4 * E4 + &k5 * E5 + &k6 * E6 + &k7 * E7) * hs;
        let mut acc = 0.0;
        for i in 0..err.len() {
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            acc += (err[i] / sc).powi(2);
        }
        let en = (acc / err.len() as f64).sqrt();
        if !en.is_finite() {
            return Err(Error::Numerical("non-finite state during integration".into()));
        }
        let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
        if en <= 1.0 {
            t = if final_step { t1 } else { t + hs };
            *y = y_new;
            k1 = k7;
            // A clipped final step says nothing about the natural step size.
            h = if final_step { h.max(hs * fac) } else { hs * fac };
            last = h;
        } else {
            h = hs * fac.min(1.0);
            if h <= 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepUnderflow { t, h });
            }
        }
    }
    Ok(last)
}
