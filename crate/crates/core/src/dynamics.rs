//! The radial log-variable equation as an autonomous dynamical system
//!
//! ```text
//! w'''' + A₃ w''' + A₂ w'' + A₁ w' + A₀ w = w^p
//! ```
//!
//! on the state `(w, w', w'', w''')`. The angular terms vanish identically
//! for radial solutions and are not represented.
//!
//! Integration runs in deviation coordinates around an *anchor* fixed point
//! (`0` or `w* = A₀^{1/(p−1)}`). Near `w*` the balance `w^p − A₀w` is
//! evaluated as `A₀ [w*·expm1(p·ln1p(y/w*)) − y]` with `y = w − w*`, which is
//! the same function but vanishes exactly at `y = 0`. Both equilibria are
//! therefore exact in floating point, and arbitrarily small deviations keep
//! their relative precision.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, hermite, Settings, Stop};
use crate::params::{CoefficientSet, Model};
use crate::roots::polynomial_roots;
use crate::transform::OdeState;

pub const DEFAULT_BLOWUP: f64 = 1e6;
pub const DEFAULT_MARGIN: f64 = 1e-3;
pub const DEFAULT_WINDOW: f64 = 5.0;
pub const DEFAULT_SPACING: f64 = 0.01;

/// Nonzero equilibrium `A₀^{1/(p−1)}`, if `A₀ > 0`.
pub fn nonzero_fixed_point(coeffs: &CoefficientSet, p: f64) -> Option<f64> {
    (coeffs.a0 > 0.0).then(|| coeffs.a0.powf(1.0 / (p - 1.0)))
}

/// Fixed point used as the origin of deviation coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Anchor {
    Zero,
    Star(f64),
}

impl Anchor {
    pub fn value(&self) -> f64 {
        match self {
            Anchor::Zero => 0.0,
            Anchor::Star(w) => *w,
        }
    }

    /// Nearest sensible anchor for an absolute state.
    pub fn for_state(state: &OdeState, coeffs: &CoefficientSet, p: f64) -> Anchor {
        match nonzero_fixed_point(coeffs, p) {
            Some(ws) if state.w0() >= 0.5 * ws => Anchor::Star(ws),
            _ => Anchor::Zero,
        }
    }
}

/// `w^p − A₀ w` with `w = anchor + y0`; `None` when `w < 0`.
fn balance(anchor: Anchor, y0: f64, a0: f64, p: f64) -> Option<f64> {
    match anchor {
        Anchor::Zero => {
            if y0 < 0.0 {
                return None;
            }
            Some(y0.powf(p) - a0 * y0)
        }
        Anchor::Star(ws) => {
            let x = y0 / ws;
            if x < -1.0 {
                return None;
            }
            Some(a0 * (ws * (p * x.ln_1p()).exp_m1() - y0))
        }
    }
}

fn field_dev(anchor: Anchor, y: &[f64; 4], c: &CoefficientSet, p: f64) -> Option<[f64; 4]> {
    let nl = balance(anchor, y[0], c.a0, p)?;
    Some([y[1], y[2], y[3], nl - c.a3 * y[3] - c.a2 * y[2] - c.a1 * y[1]])
}

/// `(w₁, w₂, w₃, w₀^p − A₃w₃ − A₂w₂ − A₁w₁ − A₀w₀)`.
///
/// Rejects `w₀ < 0`; only nonnegative solutions are modelled.
pub fn vector_field(state: &OdeState, coeffs: &CoefficientSet, p: f64) -> Result<[f64; 4]> {
    if !(state.w0() >= 0.0) {
        return Err(Error::NegativeState(state.w0()));
    }
    let anchor = Anchor::for_state(state, coeffs, p);
    let mut y = state.0;
    y[0] -= anchor.value();
    field_dev(anchor, &y, coeffs, p).ok_or(Error::NegativeState(state.w0()))
}

/// Time derivative of the vector field along the flow, used for quintic
/// Hermite reconstruction and curvature checks.
fn field_rate(state: &OdeState, f: &[f64; 4], c: &CoefficientSet, p: f64) -> f64 {
    let w0 = state.w0();
    let dnl = if w0 > 0.0 { p * w0.powf(p - 1.0) * state.w1() } else { 0.0 };
    dnl - c.a3 * f[3] - c.a2 * state.w3() - c.a1 * state.w2() - c.a0 * state.w1()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPoints {
    pub values: Vec<f64>,
    /// `A₀ ≤ 0`: only the trivial equilibrium exists.
    pub regime_violation: bool,
}

pub fn fixed_points(coeffs: &CoefficientSet, p: f64) -> FixedPoints {
    match nonzero_fixed_point(coeffs, p) {
        Some(ws) => FixedPoints { values: vec![0.0, ws], regime_violation: false },
        None => FixedPoints { values: vec![0.0], regime_violation: true },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearizationReport {
    pub point: f64,
    /// Monic quartic `[1, A₃, A₂, A₁, A₀ − p·point^{p−1}]`.
    pub char_coeffs: [f64; 5],
    /// Sorted by real part.
    pub roots: Vec<Complex64>,
    /// Roots with positive real part: modes that decay as `t → −∞`.
    pub n_positive_real: usize,
}

impl LinearizationReport {
    /// Eigenvector `(1, μ, μ², μ³)` of the linearized flow for root `μ`.
    pub fn eigenvector(mu: Complex64) -> [Complex64; 4] {
        [Complex64::new(1.0, 0.0), mu, mu * mu, mu * mu * mu]
    }

    /// Real basis of the span of modes with `Re μ > tol`, paired with the
    /// generating root. Complex pairs contribute their real and imaginary parts.
    pub fn decaying_backward_modes(&self, tol: f64) -> Vec<Mode> {
        let mut out = Vec::new();
        for mu in self.roots.iter().filter(|z| z.re > tol) {
            if mu.im.abs() <= 1e-12 * mu.norm().max(1.0) {
                out.push(Mode::Real(mu.re));
            } else if mu.im > 0.0 {
                out.push(Mode::Complex(*mu));
            }
        }
        out
    }
}

/// A real invariant mode of a linearization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Mode {
    Real(f64),
    /// Pair `μ, μ̄` with `Im μ > 0`; carries two real coefficients.
    Complex(Complex64),
}

impl Mode {
    pub fn dim(&self) -> usize {
        match self {
            Mode::Real(_) => 1,
            Mode::Complex(_) => 2,
        }
    }

    /// Linear-theory deviation at time `t` for coefficients `c` (one or two).
    pub fn deviation(&self, c: &[f64], t: f64) -> [f64; 4] {
        match *self {
            Mode::Real(mu) => {
                let e = c[0] * (mu * t).exp();
                [e, e * mu, e * mu * mu, e * mu * mu * mu]
            }
            Mode::Complex(mu) => {
                let amp = Complex64::new(c[0], -c[1]) * (mu * t).exp();
                let v = LinearizationReport::eigenvector(mu);
                [0, 1, 2, 3].map(|k| (amp * v[k]).re)
            }
        }
    }
}

pub fn linearize(point: f64, coeffs: &CoefficientSet, p: f64) -> Result<LinearizationReport> {
    let k = if point == 0.0 { 0.0 } else { p * point.powf(p - 1.0) };
    let char_coeffs = [1.0, coeffs.a3, coeffs.a2, coeffs.a1, coeffs.a0 - k];
    let roots = polynomial_roots(&char_coeffs)?;
    let n_positive_real = roots.iter().filter(|z| z.re > 0.0).count();
    Ok(LinearizationReport { point, char_coeffs, roots, n_positive_real })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Termination {
    ReachedEnd,
    BlowUp,
    NonPositive,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::ReachedEnd => "reached-end",
            Termination::BlowUp => "blow-up",
            Termination::NonPositive => "non-positive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    pub tol: f64,
    pub spacing: f64,
    pub blowup: f64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self { tol: 1e-10, spacing: DEFAULT_SPACING, blowup: DEFAULT_BLOWUP }
    }
}

impl IntegrateOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// A sampled solution `w(t)`. Times are strictly monotone in one direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<OdeState>,
    /// Vector field at every sample.
    pub derivs: Vec<[f64; 4]>,
    pub tol: f64,
    pub termination: Termination,
}

impl Trajectory {
    /// Builds a trajectory from samples of a known function, evaluating the
    /// vector field for derivatives.
    pub fn from_samples(
        times: Vec<f64>,
        states: Vec<OdeState>,
        derivs: Vec<[f64; 4]>,
        termination: Termination,
    ) -> Result<Self> {
        if times.len() != states.len() || times.len() != derivs.len() {
            return Err(Error::Insufficient("sample arrays differ in length".into()));
        }
        if times.len() >= 2 {
            let dir = (times[1] - times[0]).signum();
            if dir == 0.0 || times.windows(2).any(|w| (w[1] - w[0]) * dir <= 0.0) {
                return Err(Error::Insufficient("times must be strictly monotone".into()));
            }
        }
        if states.iter().any(|s| !s.is_finite()) {
            return Err(Error::Insufficient("non-finite state in trajectory".into()));
        }
        Ok(Self { times, states, derivs, tol: 0.0, termination })
    }

    /// Samples an explicit `w(t)` jet, e.g. `w = e^{Bt}` for `u ≡ 1`.
    pub fn from_fn(
        t0: f64,
        t1: f64,
        spacing: f64,
        jet: impl Fn(f64) -> ([f64; 4], [f64; 4]),
    ) -> Result<Self> {
        let steps = ((t1 - t0).abs() / spacing).round() as usize;
        if steps == 0 {
            return Err(Error::Insufficient("empty sampling range".into()));
        }
        let dir = (t1 - t0).signum();
        let mut times = Vec::with_capacity(steps + 1);
        let mut states = Vec::with_capacity(steps + 1);
        let mut derivs = Vec::with_capacity(steps + 1);
        for k in 0..=steps {
            let t = if k == steps { t1 } else { t0 + dir * spacing * k as f64 };
            let (s, d) = jet(t);
            times.push(t);
            states.push(OdeState(s));
            derivs.push(d);
        }
        Self::from_samples(times, states, derivs, Termination::ReachedEnd)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn first_time(&self) -> f64 {
        self.times[0]
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("non-empty trajectory")
    }

    pub fn span(&self) -> f64 {
        (self.last_time() - self.first_time()).abs()
    }

    /// `true` when times decrease (integration towards `r → 0`).
    pub fn is_backward(&self) -> bool {
        self.len() >= 2 && self.times[1] < self.times[0]
    }

    pub fn t_min(&self) -> f64 {
        self.first_time().min(self.last_time())
    }

    pub fn t_max(&self) -> f64 {
        self.first_time().max(self.last_time())
    }

    /// Cubic Hermite interpolation between stored samples.
    pub fn interpolate(&self, t: f64) -> Option<OdeState> {
        if self.is_empty() || t < self.t_min() || t > self.t_max() {
            return None;
        }
        if self.len() == 1 {
            return Some(self.states[0]);
        }
        let backward = self.is_backward();
        // Index of the first sample at or beyond t in storage order.
        let idx = if backward {
            self.times.partition_point(|&x| x > t)
        } else {
            self.times.partition_point(|&x| x < t)
        };
        if idx < self.len() && self.times[idx] == t {
            return Some(self.states[idx]);
        }
        let (i, j) = (idx.saturating_sub(1), idx.min(self.len() - 1));
        let (ta, tb) = (self.times[i], self.times[j]);
        let h = tb - ta;
        if h == 0.0 {
            return Some(self.states[i]);
        }
        let s = (t - ta) / h;
        let (a, b) = (&self.states[i].0, &self.states[j].0);
        let (da, db) = (&self.derivs[i], &self.derivs[j]);
        Some(OdeState([0, 1, 2, 3].map(|k| hermite(a[k], b[k], da[k], db[k], h, s))))
    }

    /// Samples `w(t)` on a uniform grid of step `h` covering `[t_min, t_max]`,
    /// in increasing time.
    pub fn resample(&self, h: f64) -> Vec<(f64, OdeState)> {
        let (lo, hi) = (self.t_min(), self.t_max());
        let count = ((hi - lo) / h).floor() as usize;
        (0..=count)
            .filter_map(|k| {
                let t = lo + h * k as f64;
                self.interpolate(t.min(hi)).map(|s| (t.min(hi), s))
            })
            .collect()
    }

    /// Same samples in the opposite time order.
    pub fn reversed(&self) -> Trajectory {
        let mut out = self.clone();
        out.times.reverse();
        out.states.reverse();
        out.derivs.reverse();
        out
    }

    /// Shifts every time by `s` (autonomy: the shifted samples solve the same equation).
    pub fn shifted(&self, s: f64) -> Trajectory {
        let mut out = self.clone();
        for t in &mut out.times {
            *t += s;
        }
        out
    }

    pub fn max_abs_component(&self) -> [f64; 4] {
        let mut m = [0.0_f64; 4];
        for s in &self.states {
            for k in 0..4 {
                m[k] = m[k].max(s.0[k].abs());
            }
        }
        m
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(1e-13..=1e-4).contains(&tol) {
        return Err(Error::InvalidParams(format!("tolerance {tol:e} outside [1e-13, 1e-4]")));
    }
    Ok(())
}

fn absolute_trajectory(
    anchor: Anchor,
    sol: ode::Solution<4, Termination>,
    coeffs: &CoefficientSet,
    p: f64,
    tol: f64,
) -> Trajectory {
    let termination = match sol.stop {
        Stop::Reached => Termination::ReachedEnd,
        Stop::Event(t) => t,
        Stop::Inadmissible => Termination::NonPositive,
    };
    let mut states = Vec::with_capacity(sol.states.len());
    let mut derivs = Vec::with_capacity(sol.states.len());
    for y in &sol.states {
        let d = field_dev(anchor, y, coeffs, p).unwrap_or([y[1], y[2], y[3], 0.0]);
        let mut w = *y;
        w[0] += anchor.value();
        states.push(OdeState(w));
        derivs.push(d);
    }
    Trajectory { times: sol.times, states, derivs, tol, termination }
}

/// Integrates a deviation `y` from `anchor` between `t0` and `t1`.
pub fn integrate_deviation(
    anchor: Anchor,
    deviation: [f64; 4],
    t0: f64,
    t1: f64,
    model: &Model,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    check_tol(opts.tol)?;
    let coeffs = model.coeffs;
    let p = model.p();
    let base = anchor.value();
    if base + deviation[0] < 0.0 {
        return Err(Error::NegativeState(base + deviation[0]));
    }
    let settings = Settings { rtol: opts.tol, ..Settings::default() };
    let blowup = opts.blowup;
    let sol = ode::integrate(
        |y: &[f64; 4]| field_dev(anchor, y, &coeffs, p),
        deviation,
        t0,
        t1,
        opts.spacing,
        &settings,
        |_, y: &[f64; 4]| (base + y[0] > blowup).then_some(Termination::BlowUp),
    )?;
    Ok(absolute_trajectory(anchor, sol, &coeffs, p, opts.tol))
}

/// Integrates from `initial` at `t0` to `t1` (either direction).
pub fn integrate(
    initial: &OdeState,
    t0: f64,
    t1: f64,
    model: &Model,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    if !initial.is_finite() {
        return Err(Error::InvalidParams("initial state must be finite".into()));
    }
    if initial.w0() < 0.0 {
        return Err(Error::NegativeState(initial.w0()));
    }
    let anchor = Anchor::for_state(initial, &model.coeffs, model.p());
    let mut y = initial.0;
    y[0] -= anchor.value();
    integrate_deviation(anchor, y, t0, t1, model, opts)
}

/// A solution on the backward-decaying manifold of `anchor`, in decreasing
/// time order on `[t_end, 0]`.
///
/// The linear deviation `Σ c_j mode_j` is started where every mode is below
/// `1e−12·reach` and integrated forward (the direction in which errors
/// transverse to the manifold decay) until `max |w − anchor|` reaches
/// `reach`; the time axis is shifted so that this point sits at `t = 0`.
/// Deeper times, where the deviation is far below rounding of the anchor,
/// are filled in from linear theory. By autonomy the result is a solution;
/// rounding feeds the fastest mode on the way up, so `coeffs` fix the
/// starting direction rather than the final point.
pub fn manifold_solution(
    anchor: Anchor,
    modes: &[Mode],
    coeffs: &[f64],
    reach: f64,
    t_end: f64,
    model: &Model,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    let needed: usize = modes.iter().map(Mode::dim).sum();
    if coeffs.len() != needed {
        return Err(Error::InvalidParams(format!(
            "expected {needed} mode coefficients, got {}",
            coeffs.len()
        )));
    }
    if !(t_end < 0.0) || !(reach >= 0.0) {
        return Err(Error::InvalidParams("need t_end < 0 and reach >= 0".into()));
    }
    if reach == 0.0 || coeffs.iter().all(|&c| c == 0.0) {
        return integrate(&OdeState::constant(anchor.value()), 0.0, t_end, model, opts);
    }
    let deviation_at = |tau: f64| {
        let mut dev = [0.0; 4];
        let mut at = 0;
        for m in modes {
            let d = m.deviation(&coeffs[at..at + m.dim()], tau);
            for k in 0..4 {
                dev[k] += d[k];
            }
            at += m.dim();
        }
        dev
    };
    // Mode time at which every mode amplitude is at most 1e-12·reach.
    let mut tau0 = f64::INFINITY;
    let mut at = 0;
    for m in modes {
        let (rate, size) = match m {
            Mode::Real(mu) => (*mu, coeffs[at].abs()),
            Mode::Complex(mu) => {
                let v = LinearizationReport::eigenvector(*mu);
                let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
                (mu.re, scale * coeffs[at].hypot(coeffs[at + 1]))
            }
        };
        let size = size * if let Mode::Real(mu) = m { mu.abs().powi(3).max(1.0) } else { 1.0 };
        if size > 0.0 {
            tau0 = tau0.min((1e-12 * reach / size).ln() / rate);
        }
        at += m.dim();
    }
    let max_len = 1e4;
    let forward = integrate_deviation_until(anchor, deviation_at(tau0), tau0, tau0 + max_len, model, opts, reach)?;
    let shift = -forward.last_time();
    let mut traj = forward.shifted(shift).reversed();
    let keep = traj.times.iter().position(|&t| t < t_end).unwrap_or(traj.len());
    traj.times.truncate(keep);
    traj.states.truncate(keep);
    traj.derivs.truncate(keep);
    let bottom = traj.last_time();
    if bottom > t_end {
        // Linear continuation below the integrated part.
        let coeffs_model = model.coeffs;
        let p = model.p();
        let steps = ((bottom - t_end) / opts.spacing).ceil() as usize;
        for k in 1..=steps {
            let t = (bottom - opts.spacing * k as f64).max(t_end);
            let y = deviation_at(tau0 + (t - bottom));
            let d = field_dev(anchor, &y, &coeffs_model, p).ok_or(Error::NegativeState(anchor.value() + y[0]))?;
            let mut w = y;
            w[0] += anchor.value();
            traj.times.push(t);
            traj.states.push(OdeState(w));
            traj.derivs.push(d);
        }
    }
    traj.termination = Termination::ReachedEnd;
    Ok(traj)
}

// Forward integration stopped once max |deviation| reaches `reach`.
fn integrate_deviation_until(
    anchor: Anchor,
    deviation: [f64; 4],
    t0: f64,
    t1: f64,
    model: &Model,
    opts: &IntegrateOptions,
    reach: f64,
) -> Result<Trajectory> {
    check_tol(opts.tol)?;
    let coeffs = model.coeffs;
    let p = model.p();
    let base = anchor.value();
    let settings = Settings { rtol: opts.tol, ..Settings::default() };
    let blowup = opts.blowup;
    let sol = ode::integrate(
        |y: &[f64; 4]| field_dev(anchor, y, &coeffs, p),
        deviation,
        t0,
        t1,
        opts.spacing,
        &settings,
        |_, y: &[f64; 4]| {
            if base + y[0] > blowup {
                Some(Termination::BlowUp)
            } else if y.iter().any(|x| x.abs() >= reach) {
                Some(Termination::ReachedEnd)
            } else {
                None
            }
        },
    )?;
    Ok(absolute_trajectory(anchor, sol, &coeffs, p, opts.tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LimitTag {
    ConvergesToZero,
    ConvergesToFixedPoint,
    BlowUp,
    Undetermined,
}

impl LimitTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            LimitTag::ConvergesToZero => "zero",
            LimitTag::ConvergesToFixedPoint => "fixed-point",
            LimitTag::BlowUp => "blow-up",
            LimitTag::Undetermined => "undetermined",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitClass {
    pub tag: LimitTag,
    pub terminal_value: f64,
    /// Oscillation `max w₀ − min w₀` over the final window.
    pub window_variation: f64,
}

/// Classifies the `t → −∞` behaviour of a backward trajectory from its final window.
pub fn classify_limit(
    traj: &Trajectory,
    coeffs: &CoefficientSet,
    p: f64,
    margin: f64,
    window: f64,
) -> Result<LimitClass> {
    if traj.len() < 2 {
        return Err(Error::Insufficient("trajectory has fewer than two samples".into()));
    }
    let terminal_value = traj.states.last().unwrap().w0();
    match traj.termination {
        Termination::BlowUp => {
            return Ok(LimitClass { tag: LimitTag::BlowUp, terminal_value, window_variation: f64::NAN })
        }
        Termination::NonPositive => {
            return Ok(LimitClass {
                tag: LimitTag::Undetermined,
                terminal_value,
                window_variation: f64::NAN,
            })
        }
        Termination::ReachedEnd => {}
    }
    if !traj.is_backward() {
        return Err(Error::Insufficient("classification needs a backward (decreasing-time) trajectory".into()));
    }
    if traj.span() < 2.0 * window {
        return Err(Error::Insufficient(format!(
            "trajectory spans {:.3} time units; classification needs {}",
            traj.span(),
            2.0 * window
        )));
    }
    let t_end = traj.last_time();
    let (lo, hi) = traj
        .times
        .iter()
        .zip(&traj.states)
        .filter(|(t, _)| **t <= t_end + window)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, s)| (lo.min(s.w0()), hi.max(s.w0())));
    let window_variation = hi - lo;
    let w_star = nonzero_fixed_point(coeffs, p);
    let tag = if hi < margin {
        LimitTag::ConvergesToZero
    } else if let Some(ws) =
        w_star.filter(|ws| (hi - ws).abs() < margin && (lo - ws).abs() < margin && window_variation < margin)
    {
        let _ = ws;
        LimitTag::ConvergesToFixedPoint
    } else {
        LimitTag::Undetermined
    };
    Ok(LimitClass { tag, terminal_value, window_variation })
}

/// Quintic-free curvature probe: `d⁴w/dt⁴` and its rate at a state.
pub fn higher_derivatives(state: &OdeState, coeffs: &CoefficientSet, p: f64) -> Result<(f64, f64)> {
    let f = vector_field(state, coeffs, p)?;
    Ok((f[3], field_rate(state, &f, coeffs, p)))
}
