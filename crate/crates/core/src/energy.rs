//! Radial energy of the log-variable flow and its rate law.
//!
//! For radial `w` all angular integrals vanish and
//!
//! ```text
//! E = |S^{n−1}| [ w₃w₁ − ½(w₂² − 2A₃w₂w₁ − A₂w₁²) + ½A₀w₀² − w₀^{p+1}/(p+1) ]
//! dE/dt = |S^{n−1}| (A₃w₂² − A₁w₁²)
//! ```

use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::params::{CoefficientSet, Model};
use crate::transform::{from_log, to_log, OdeState, RadialJet};

/// Sample step used when auditing a trajectory.
pub const AUDIT_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyValue {
    pub value: f64,
    pub sphere_measure: f64,
}

/// `|S^{n−1}| = 2π^{n/2}/Γ(n/2)`, with `Γ(n/2)` evaluated exactly for integer `n`.
pub fn sphere_measure(n: u32) -> f64 {
    use std::f64::consts::PI;
    assert!(n >= 1, "dimension must be positive");
    // Γ(n/2) from Γ(1) = 1 or Γ(1/2) = √π.
    let (mut g, mut x) = if n % 2 == 0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    while x < 0.5 * n as f64 {
        g *= x;
        x += 1.0;
    }
    2.0 * PI.powf(0.5 * n as f64) / g
}

fn bracket_terms(s: &OdeState, c: &CoefficientSet, p: f64) -> [f64; 6] {
    let (w0, w1, w2, w3) = (s.w0(), s.w1(), s.w2(), s.w3());
    let pot = if w0 > 0.0 { w0.powf(p + 1.0) / (p + 1.0) } else { 0.0 };
    [
        w3 * w1,
        -0.5 * w2 * w2,
        c.a3 * w2 * w1,
        0.5 * c.a2 * w1 * w1,
        0.5 * c.a0 * w0 * w0,
        -pot,
    ]
}

pub fn energy(state: &OdeState, coeffs: &CoefficientSet, p: f64, n: u32) -> Result<EnergyValue> {
    if !state.is_finite() {
        return Err(Error::InvalidParams("state must be finite".into()));
    }
    if state.w0() < 0.0 {
        return Err(Error::NegativeState(state.w0()));
    }
    let sphere = sphere_measure(n);
    let value = sphere * bracket_terms(state, coeffs, p).iter().sum::<f64>();
    if !value.is_finite() {
        return Err(Error::Overflow(format!("energy at w0 = {:e}", state.w0())));
    }
    Ok(EnergyValue { value, sphere_measure: sphere })
}

/// Largest magnitude among the terms of `E`; sets the rounding floor of differences.
fn energy_scale(state: &OdeState, coeffs: &CoefficientSet, p: f64, n: u32) -> f64 {
    sphere_measure(n) * bracket_terms(state, coeffs, p).iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub fn energy_rate(state: &OdeState, coeffs: &CoefficientSet, n: u32) -> f64 {
    sphere_measure(n) * (coeffs.a3 * state.w2() * state.w2() - coeffs.a1 * state.w1() * state.w1())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityAudit {
    pub max_violation: f64,
    pub rate_mismatch: f64,
    /// `E` at the earliest and latest audited time.
    pub e_first: f64,
    pub e_last: f64,
    pub e_min: f64,
    pub e_max: f64,
    pub samples: usize,
}

/// Checks the monotone direction of `E` along `traj` and the rate law.
///
/// The trajectory is resampled on a uniform grid of step [`AUDIT_STEP`].
/// Increments smaller than the rounding floor of `E` are not counted.
pub fn audit_monotonicity(traj: &Trajectory, model: &Model) -> Result<MonotonicityAudit> {
    let samples = traj.resample(AUDIT_STEP);
    if samples.len() < 100 {
        return Err(Error::Insufficient(format!(
            "audit needs at least 100 samples, trajectory gives {}",
            samples.len()
        )));
    }
    let c = &model.coeffs;
    let p = model.p();
    let n = model.params.n;
    let non_increasing = model.regime().energy_non_increasing();
    let mut e = Vec::with_capacity(samples.len());
    let mut scale = Vec::with_capacity(samples.len());
    for (_, s) in &samples {
        e.push(energy(s, c, p, n)?.value);
        scale.push(energy_scale(s, c, p, n));
    }
    let mut max_violation = 0.0_f64;
    for i in 1..e.len() {
        let de = e[i] - e[i - 1];
        let forbidden = if non_increasing { de } else { -de };
        let floor = 16.0 * f64::EPSILON * scale[i].max(scale[i - 1]);
        max_violation = max_violation.max(forbidden - floor);
    }
    let mut rate_mismatch = 0.0_f64;
    for i in 1..e.len() - 1 {
        let h2 = samples[i + 1].0 - samples[i - 1].0;
        let fd = (e[i + 1] - e[i - 1]) / h2;
        let rate = energy_rate(&samples[i].1, c, n);
        rate_mismatch = rate_mismatch.max((fd - rate).abs() / (1.0 + rate.abs()));
    }
    let (e_min, e_max) = e.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    Ok(MonotonicityAudit {
        max_violation: max_violation.max(0.0),
        rate_mismatch,
        e_first: e[0],
        e_last: *e.last().unwrap(),
        e_min,
        e_max,
        samples: e.len(),
    })
}

/// Physical jet of `u^λ(x) = λ^B u(λx)` at radius `r / λ` from the jet of `u` at `r`.
pub fn rescale_jet(jet: &RadialJet, lambda: f64, b: f64) -> RadialJet {
    let mut f = lambda.powf(b);
    let mut u = jet.u;
    for x in &mut u {
        *x *= f;
        f *= lambda;
    }
    RadialJet { r: jet.r / lambda, u }
}

/// Largest gap between `Ẽ(r; u^λ)` and `Ẽ(λr; u)` over samples where both
/// radii lie in the trajectory's range.
///
/// `u^λ` is built from physical jets, so the check exercises the whole
/// change of variables, not only time translation.
pub fn scaling_check(traj: &Trajectory, lambda: f64, model: &Model) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParams(format!("scaling factor must be positive, got {lambda}")));
    }
    let shift = lambda.ln();
    let (lo, hi) = (traj.t_min(), traj.t_max());
    let b = model.b();
    let c = &model.coeffs;
    let (p, n) = (model.p(), model.params.n);
    let mut worst = 0.0_f64;
    let mut used = 0usize;
    for (&t, s) in traj.times.iter().zip(&traj.states) {
        // u^λ is evaluated at r = e^{t}/λ, which must also be a trajectory radius.
        if t - shift < lo || t - shift > hi {
            continue;
        }
        let jet = from_log(t, s, b);
        let (t_scaled, w_scaled) = to_log(&rescale_jet(&jet, lambda, b), b)?;
        debug_assert!((t_scaled - (t - shift)).abs() < 1e-9 * (1.0 + t.abs()));
        let lhs = energy(&w_scaled, c, p, n)?.value;
        let rhs = energy(s, c, p, n)?.value;
        worst = worst.max((lhs - rhs).abs());
        used += 1;
    }
    if used == 0 {
        return Err(Error::Insufficient(format!(
            "trajectory over [{lo:.3}, {hi:.3}] has no overlap under a shift of {shift:.3}"
        )));
    }
    Ok(worst)
}
