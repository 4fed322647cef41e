//! Second-order evolution of metrics that depend on x⁰ alone.
//!
//! The acceleration is g̈ = F^P_{·;0,0} + F^h_{·;0,0}. The closure fixes the
//! spatial blocks F^h_{·;μ,ν} = −F^P_{·;μ,ν} for (μ,ν) ≠ (0,0), so the section
//! stays independent of x¹..x³, and solves the trace condition for the
//! remaining block. Other admissible closures give other Ricci-flat
//! evolutions; this one is deterministic and gauge-minimal (least norm).

use crate::curvature;
use crate::error::{Error, Result};
use crate::jet_algebra::{pidx, validate_metric, MetricJet, PAIRS};
use crate::multivector_solver::{self as mv, Accel};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::io::Write;

pub const SINGULAR_THRESHOLD: f64 = 1e-10;
pub const INCONSISTENCY_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_TOL_TRACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolState {
    pub t: f64,
    pub g: [f64; 10],
    /// ∂_0 g
    pub v: [f64; 10],
}

impl EvolState {
    /// The 1-jet of the section at this state.
    pub fn jet(&self) -> MetricJet {
        let mut j = MetricJet::constant(self.g);
        j.x[0] = self.t;
        j.order = 1;
        for k in 0..10 {
            j.dg[k][0] = self.v[k];
        }
        j
    }

    /// The 2-jet with the given second time derivative.
    pub fn jet2(&self, acc: &[f64; 10]) -> MetricJet {
        let mut j = self.jet();
        j.order = 2;
        for k in 0..10 {
            j.d2g[k][0] = acc[k];
        }
        j
    }
}

/// diag(−1, t^{2p₁}, t^{2p₂}, t^{2p₃}) and its time derivative.
pub fn kasner(p: [f64; 3], t: f64) -> Result<EvolState> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("Kasner time must be positive, got {t}")));
    }
    let mut s = EvolState { t, g: [0.0; 10], v: [0.0; 10] };
    s.g[0] = -1.0;
    for i in 0..3 {
        let k = pidx(i + 1, i + 1);
        s.g[k] = t.powf(2.0 * p[i]);
        s.v[k] = 2.0 * p[i] * t.powf(2.0 * p[i] - 1.0);
    }
    Ok(s)
}

/// Closed-form ∂_0² g of the Kasner metric.
pub fn kasner_acceleration(p: [f64; 3], t: f64) -> [f64; 10] {
    let mut a = [0.0; 10];
    for i in 0..3 {
        a[pidx(i + 1, i + 1)] = 2.0 * p[i] * (2.0 * p[i] - 1.0) * t.powf(2.0 * p[i] - 2.0);
    }
    a
}

/// Least-squares closure: (F^h, F^P, unresolved part of the trace condition).
/// The mismatch is nonzero only for data violating the constraints, as the
/// intermediate Runge–Kutta stages do at the level of the truncation error.
pub fn closure(state: &EvolState) -> Result<(Accel<f64>, Accel<f64>, f64)> {
    let jet = state.jet();
    let fp = mv::f_particular(&jet.view())?;
    let mut fh = fp;
    for k in 0..10 {
        for m in 0..4 {
            for n in 0..4 {
                fh[k][m][n] = -fp[k][m][n];
            }
        }
        fh[k][0][0] = 0.0;
    }
    let r0 = mv::homogeneous_residual(&fh, &state.g)?;
    let mut a = DMatrix::zeros(10, 10);
    for j in 0..10 {
        let mut e = mv::accel_zero();
        e[j][0][0] = 1.0;
        let col = mv::homogeneous_residual(&e, &state.g)?;
        for i in 0..10 {
            a[(i, j)] = col[i];
        }
    }
    // The lapse and shift columns vanish analytically and carry only rounding
    // noise; dropping them is the least-norm choice for those unknowns and
    // keeps the SVD away from exactly rank-deficient input.
    let amax = a.amax();
    let keep: Vec<usize> = (0..10).filter(|&j| a.column(j).amax() > 1e-12 * amax).collect();
    let b = DVector::from_fn(10, |i, _| -r0[i]);
    let mut u = DVector::zeros(10);
    if !keep.is_empty() {
        let ar = a.select_columns(&keep);
        let svd = ar.try_svd(true, true, f64::EPSILON, 0).ok_or(Error::NoConvergence { iterations: 0, residual: f64::NAN })?;
        let smax = svd.singular_values.max();
        let ur = svd.solve(&b, SINGULAR_THRESHOLD * smax.max(1.0)).map_err(|e| Error::Domain(e.to_string()))?;
        for (i, &j) in keep.iter().enumerate() {
            u[j] = ur[i];
        }
    }
    let miss = (&a * &u - &b).amax() / (1.0 + b.amax());
    for k in 0..10 {
        fh[k][0][0] = u[k];
    }
    Ok((fh, fp, miss))
}

/// The closure's F^h; fails when the trace condition cannot be met.
pub fn closure_fh(state: &EvolState) -> Result<Accel<f64>> {
    let (fh, _, miss) = closure(state)?;
    if miss > INCONSISTENCY_TOLERANCE {
        return Err(Error::Inconsistent(miss));
    }
    Ok(fh)
}

/// g̈ = F^P_{·;0,0} + F^h_{·;0,0} from the least-squares closure.
pub fn acceleration(state: &EvolState) -> Result<[f64; 10]> {
    let (fh, fp, _) = closure(state)?;
    Ok(std::array::from_fn(|k| fp[k][0][0] + fh[k][0][0]))
}

/// Largest |R_{μν}| of the section through `state` with acceleration `acc`.
pub fn ricci_norm(state: &EvolState, acc: &[f64; 10]) -> Result<f64> {
    Ok(curvature::max_abs(&curvature::ricci(&state.jet2(acc))?))
}

#[derive(Debug, Clone, Copy)]
pub struct Sample {
    pub state: EvolState,
    pub ricci_norm: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub h: f64,
}

impl Trajectory {
    pub fn last(&self) -> &EvolState {
        &self.samples.last().expect("a trajectory holds its initial state").state
    }

    pub fn max_ricci(&self) -> f64 {
        self.samples.iter().fold(0.0, |s, p| s.max(p.ricci_norm))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend(PAIRS.iter().map(|(a, b)| format!("g{a}{b}")));
        header.extend(PAIRS.iter().map(|(a, b)| format!("v{a}{b}")));
        header.push("ricci_norm".into());
        out.write_record(&header).map_err(csv_err)?;
        for s in &self.samples {
            let mut row = vec![s.state.t];
            row.extend(s.state.g);
            row.extend(s.state.v);
            row.push(s.ricci_norm);
            out.write_record(row.iter().map(|v| format!("{v:e}"))).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

#[derive(Debug, Clone, Copy)]
pub struct IntegrateOptions {
    pub h: f64,
    pub tol_track: f64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self { h: 1e-3, tol_track: DEFAULT_TOL_TRACK }
    }
}

fn axpy(a: &EvolState, dg: &[f64; 10], dv: &[f64; 10], c: f64) -> EvolState {
    EvolState {
        t: a.t + c,
        g: std::array::from_fn(|k| a.g[k] + c * dg[k]),
        v: std::array::from_fn(|k| a.v[k] + c * dv[k]),
    }
}

fn check(state: &EvolState, step: usize, tol: f64) -> Result<Sample> {
    validate_metric(&state.g).map_err(|_| Error::SignatureLost { step, t: state.t })?;
    let r = ricci_norm(state, &acceleration(state)?)?;
    if !(r < tol) {
        return Err(Error::ConstraintDrift { step, t: state.t, value: r });
    }
    Ok(Sample { state: *state, ricci_norm: r })
}

/// Classic RK4 with a fixed step from `initial.t` to `t_end`. The step is
/// shrunk uniformly so that a whole number of steps lands on `t_end`.
pub fn integrate(initial: &EvolState, t_end: f64, opts: IntegrateOptions) -> Result<Trajectory> {
    if !(opts.h > 0.0) || !opts.h.is_finite() {
        return Err(Error::Input(format!("step must be positive, got {}", opts.h)));
    }
    let span = t_end - initial.t;
    if !(span > 0.0) {
        return Err(Error::Input(format!("end time {t_end} must exceed the start time {}", initial.t)));
    }
    let n = ((span / opts.h) - 1e-9).ceil().max(1.0) as usize;
    let h = span / n as f64;
    let mut samples = Vec::with_capacity(n + 1);
    samples.push(check(initial, 0, opts.tol_track)?);
    let mut s = *initial;
    for step in 1..=n {
        let k1 = acceleration(&s)?;
        let s2 = axpy(&s, &s.v, &k1, h / 2.0);
        let k2 = acceleration(&s2)?;
        let s3 = axpy(&s, &s2.v, &k2, h / 2.0);
        let k3 = acceleration(&s3)?;
        let s4 = axpy(&s, &s3.v, &k3, h);
        let k4 = acceleration(&s4)?;
        let t = initial.t + step as f64 * h;
        s = EvolState {
            t,
            g: std::array::from_fn(|k| s.g[k] + h / 6.0 * (s.v[k] + 2.0 * s2.v[k] + 2.0 * s3.v[k] + s4.v[k])),
            v: std::array::from_fn(|k| s.v[k] + h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k])),
        };
        samples.push(check(&s, step, opts.tol_track)?);
    }
    Ok(Trajectory { samples, h })
}

/// Largest componentwise deviation of a state from the Kasner solution.
pub fn kasner_error(p: [f64; 3], s: &EvolState) -> Result<f64> {
    let exact = kasner(p, s.t)?;
    Ok((0..10).fold(0.0f64, |m, k| m.max((s.g[k] - exact.g[k]).abs()).max((s.v[k] - exact.v[k]).abs())))
}

pub const KASNER_VACUUM: [f64; 3] = [2.0 / 3.0, 2.0 / 3.0, -1.0 / 3.0];
