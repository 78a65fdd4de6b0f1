//! Dormand–Prince 5(4) with PI step-size control and the method's own
//! continuous extension for output on a uniform sample grid.
//!
//! Integration may run in either time direction. The right-hand side may
//! refuse a stage (for instance when a state leaves its admissible domain);
//! the step is then retried with a smaller size.

use crate::error::{Error, Result};

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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    /// Relative tolerance.
    pub rtol: f64,
    /// Absolute floor added to the error scale.
    pub atol: f64,
    /// Smallest admissible step before the run is declared a failure.
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
    pub safety: f64,
    pub fac_min: f64,
    pub fac_max: f64,
    /// PI stabilisation exponent.
    pub beta: f64,
}

impl Settings {
    pub fn with_tol(rtol: f64) -> Self {
        Self { rtol, ..Self::default() }
    }
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 0.0,
            h_min: 1e-12,
            h_max: 0.25,
            max_steps: 2_000_000,
            safety: 0.9,
            fac_min: 0.2,
            fac_max: 10.0,
            beta: 0.04,
        }
    }
}

/// Why an integration run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop<R> {
    Reached,
    /// The caller's stop predicate fired at the end of an accepted step.
    Event(R),
    /// Stages kept leaving the admissible domain until the step collapsed.
    Inadmissible,
}

#[derive(Debug, Clone)]
pub struct Solution<const N: usize, R> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
    pub stop: Stop<R>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

fn max_norm<const N: usize>(y: &[f64; N]) -> f64 {
    y.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Integrates `y' = f(y)` from `t0` to `t1`, recording states at
/// `t0 + k·spacing` (towards `t1`) plus the final time.
///
/// `f` returns `None` for states outside its domain. `stop` is consulted after
/// every accepted step; when it returns `Some`, the run ends with that step's
/// end state as the final sample.
pub fn integrate<const N: usize, R, F, S>(
    mut f: F,
    y0: [f64; N],
    t0: f64,
    t1: f64,
    spacing: f64,
    settings: &Settings,
    mut stop: S,
) -> Result<Solution<N, R>>
where
    F: FnMut(&[f64; N]) -> Option<[f64; N]>,
    S: FnMut(f64, &[f64; N]) -> Option<R>,
{
    if !(spacing > 0.0) {
        return Err(Error::InvalidParams(format!("sample spacing must be positive, got {spacing}")));
    }
    if !(settings.rtol > 0.0) {
        return Err(Error::InvalidParams(format!("tolerance must be positive, got {}", settings.rtol)));
    }
    let k1 = f(&y0).ok_or_else(|| Error::Integration {
        t: t0,
        reason: "initial state outside the admissible domain".into(),
    })?;

    let mut sol = Solution {
        times: vec![t0],
        states: vec![y0],
        stop: Stop::Reached,
        accepted_steps: 0,
        rejected_steps: 0,
    };
    if t1 == t0 {
        return Ok(sol);
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();
    let mut next_sample = 1usize;
    let sample_time = |k: usize| t0 + dir * spacing * k as f64;

    let scale = |a: &[f64; N], b: &[f64; N]| {
        let s = settings.rtol * max_norm(a).max(max_norm(b)) + settings.atol;
        if s > 0.0 { s } else { f64::MIN_POSITIVE }
    };

    let h_max = settings.h_max.min(span);
    let mut h = initial_step(&mut f, &y0, &k1, settings, h_max);
    let mut t = t0;
    let mut y = y0;
    let mut k1 = k1;
    let mut facold = 1e-4_f64;
    let expo1 = 0.2 - settings.beta * 0.75;
    let mut last_step = false;

    loop {
        if sol.accepted_steps + sol.rejected_steps > settings.max_steps {
            return Err(Error::Integration { t, reason: "step budget exhausted".into() });
        }
        if (t + dir * h - t1) * dir >= 0.0 || (t1 - t).abs() - h < 1e-14 * span {
            h = (t1 - t).abs();
            last_step = true;
        }

        let stages = stages(&mut f, &y, &k1, dir * h);
        let Some((y_new, _k2, k3, k4, k5, k6, k7)) = stages else {
            // A stage left the domain: retry with a much smaller step.
            h *= 0.25;
            last_step = false;
            if h < settings.h_min {
                if sol.times.last() != Some(&t) {
                    sol.times.push(t);
                    sol.states.push(y);
                }
                sol.stop = Stop::Inadmissible;
                return Ok(sol);
            }
            continue;
        };

        let sc = scale(&y, &y_new);
        let mut err = 0.0_f64;
        for i in 0..N {
            let e = dir
                * h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            h *= 0.25;
            last_step = false;
            sol.rejected_steps += 1;
            if h < settings.h_min {
                return Err(Error::Integration { t, reason: "non-finite error estimate".into() });
            }
            continue;
        }

        let fac11 = err.powf(expo1);
        let fac = (fac11 / facold.powf(settings.beta) / settings.safety)
            .clamp(1.0 / settings.fac_max, 1.0 / settings.fac_min);
        let h_new = h / fac;

        if err <= 1.0 {
            facold = err.max(1e-4);
            sol.accepted_steps += 1;
            let t_new = if last_step { t1 } else { t + dir * h };

            // Dense output on the sample grid strictly inside (t, t_new].
            let cont = continuous_extension(&y, &y_new, &k1, &k3, &k4, &k5, &k6, &k7, dir * h);
            while next_sample as f64 * spacing < span - 1e-12 * spacing {
                let ts = sample_time(next_sample);
                if (ts - t_new) * dir > 0.0 {
                    break;
                }
                let theta = (ts - t) / (t_new - t);
                sol.times.push(ts);
                sol.states.push(eval_cont(&cont, theta));
                next_sample += 1;
            }

            let event = stop(t_new, &y_new);
            let at_end = last_step || event.is_some();
            if at_end {
                let dup = sol.times.last().is_some_and(|&tl| (tl - t_new).abs() <= 1e-12 * spacing);
                if dup {
                    *sol.states.last_mut().unwrap() = y_new;
                    *sol.times.last_mut().unwrap() = t_new;
                } else {
                    sol.times.push(t_new);
                    sol.states.push(y_new);
                }
                if let Some(ev) = event {
                    sol.stop = Stop::Event(ev);
                }
                return Ok(sol);
            }

            t = t_new;
            y = y_new;
            k1 = k7;
            h = h_new.min(h_max);
        } else {
            sol.rejected_steps += 1;
            last_step = false;
            h = h / (fac11 / settings.safety).min(1.0 / settings.fac_min);
            if h < settings.h_min {
                return Err(Error::Integration {
                    t,
                    reason: format!("step size underflow (h = {h:e})"),
                });
            }
        }
    }
}

type Stages<const N: usize> = ([f64; N], [f64; N], [f64; N], [f64; N], [f64; N], [f64; N], [f64; N]);

fn stages<const N: usize, F>(f: &mut F, y: &[f64; N], k1: &[f64; N], h: f64) -> Option<Stages<N>>
where
    F: FnMut(&[f64; N]) -> Option<[f64; N]>,
{
    let k2 = f(&axpy(y, h, &[(A21, k1)]))?;
    let k3 = f(&axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = f(&axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = f(&axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
    let k6 = f(&axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
    let y_new = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    if y_new.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let k7 = f(&y_new)?;
    Some((y_new, k2, k3, k4, k5, k6, k7))
}

#[allow(clippy::too_many_arguments)]
fn continuous_extension<const N: usize>(
    y: &[f64; N],
    y_new: &[f64; N],
    k1: &[f64; N],
    k3: &[f64; N],
    k4: &[f64; N],
    k5: &[f64; N],
    k6: &[f64; N],
    k7: &[f64; N],
    h: f64,
) -> [[f64; N]; 5] {
    let mut r = [[0.0; N]; 5];
    for i in 0..N {
        let dy = y_new[i] - y[i];
        let bspl = h * k1[i] - dy;
        r[0][i] = y[i];
        r[1][i] = dy;
        r[2][i] = bspl;
        r[3][i] = dy - h * k7[i] - bspl;
        r[4][i] = h
            * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    r
}

fn eval_cont<const N: usize>(r: &[[f64; N]; 5], theta: f64) -> [f64; N] {
    let t1 = 1.0 - theta;
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = r[0][i] + theta * (r[1][i] + t1 * (r[2][i] + theta * (r[3][i] + t1 * r[4][i])));
    }
    out
}

fn initial_step<const N: usize, F>(
    f: &mut F,
    y0: &[f64; N],
    f0: &[f64; N],
    settings: &Settings,
    h_max: f64,
) -> f64
where
    F: FnMut(&[f64; N]) -> Option<[f64; N]>,
{
    let sc = settings.rtol * max_norm(y0) + settings.atol;
    if !(sc > 0.0) {
        return (1e-3_f64).min(h_max);
    }
    let d0 = max_norm(y0) / sc;
    let d1 = max_norm(f0) / sc;
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(h_max);
    let y1 = axpy(y0, h0, &[(1.0, f0)]);
    let Some(f1) = f(&y1) else {
        return (h0 * 0.1).max(settings.h_min * 10.0);
    };
    let mut diff = [0.0; N];
    for i in 0..N {
        diff[i] = f1[i] - f0[i];
    }
    let d2 = max_norm(&diff) / sc / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(h_max).max(settings.h_min * 10.0)
}

/// Cubic Hermite interpolation on `[0, 1]` with end slopes scaled by the
/// interval length `h`.
pub fn hermite(y0: f64, y1: f64, d0: f64, d1: f64, h: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn never(_: f64, _: &[f64; 2]) -> Option<()> {
        None
    }

    #[test]
    fn harmonic_oscillator_forward_and_backward() {
        let f = |y: &[f64; 2]| Some([y[1], -y[0]]);
        let s = Settings::with_tol(1e-11);
        for &t1 in &[10.0, -10.0] {
            let sol = integrate(f, [1.0, 0.0], 0.0, t1, 0.5, &s, never).unwrap();
            assert_eq!(sol.stop, Stop::Reached);
            assert_eq!(sol.times.len(), 21);
            for (t, y) in sol.times.iter().zip(&sol.states) {
                assert!((y[0] - t.cos()).abs() < 1e-8, "t={t} y={}", y[0]);
                assert!((y[1] + t.sin()).abs() < 1e-8);
            }
            assert_eq!(*sol.times.last().unwrap(), t1);
        }
    }

    #[test]
    fn exponential_growth_relative_accuracy() {
        let f = |y: &[f64; 1]| Some([2.0 * y[0]]);
        let sol = integrate(f, [1e-200], 0.0, 5.0, 0.1, &Settings::with_tol(1e-10), |_, _: &[f64; 1]| None::<()>)
            .unwrap();
        let y = sol.states.last().unwrap()[0];
        assert_relative_eq!(y, 1e-200 * (10.0f64).exp(), max_relative = 1e-8);
    }

    #[test]
    fn zero_state_stays_zero() {
        let f = |y: &[f64; 2]| Some([y[1], -4.0 * y[0]]);
        let sol = integrate(f, [0.0, 0.0], 0.0, -3.0, 0.25, &Settings::default(), never).unwrap();
        assert!(sol.states.iter().all(|y| y == &[0.0, 0.0]));
        assert_eq!(sol.times.len(), 13);
    }

    #[test]
    fn stop_predicate_ends_run() {
        let f = |y: &[f64; 1]| Some([y[0] * y[0]]);
        // y = 1/(1 - t) blows up at t = 1
        let sol = integrate(f, [1.0], 0.0, 2.0, 0.01, &Settings::with_tol(1e-10), |_, y: &[f64; 1]| {
            (y[0] > 1e3).then_some("big")
        })
        .unwrap();
        assert_eq!(sol.stop, Stop::Event("big"));
        let t_end = *sol.times.last().unwrap();
        assert!(t_end < 1.0 && t_end > 0.99);
        assert!(sol.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn inadmissible_domain_terminates() {
        // y' = -1 from y = 1 under the constraint y >= 0
        let f = |y: &[f64; 1]| (y[0] >= 0.0).then_some([-1.0]);
        let sol =
            integrate(f, [1.0], 0.0, 3.0, 0.1, &Settings::with_tol(1e-10), |_, _: &[f64; 1]| None::<()>).unwrap();
        assert_eq!(sol.stop, Stop::Inadmissible);
        let t_end = *sol.times.last().unwrap();
        assert!((t_end - 1.0).abs() < 1e-6, "{t_end}");
        assert!(sol.states.iter().all(|y| y[0] >= 0.0));
    }

    #[test]
    fn rejects_bad_settings() {
        let f = |y: &[f64; 1]| Some([y[0]]);
        assert!(integrate(f, [1.0], 0.0, 1.0, 0.0, &Settings::default(), |_, _: &[f64; 1]| None::<()>).is_err());
        assert!(integrate(f, [1.0], 0.0, 1.0, 0.1, &Settings::with_tol(0.0), |_, _: &[f64; 1]| None::<()>).is_err());
    }

    #[test]
    fn hermite_reproduces_cubics() {
        let p = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x + 3.0 * x * x * x;
        let dp = |x: f64| -2.0 + x + 9.0 * x * x;
        let (a, b) = (0.3, 0.8);
        for k in 0..=10 {
            let s = k as f64 / 10.0;
            let x = a + s * (b - a);
            assert_relative_eq!(hermite(p(a), p(b), dp(a), dp(b), b - a, s), p(x), max_relative = 1e-13);
        }
    }
}
