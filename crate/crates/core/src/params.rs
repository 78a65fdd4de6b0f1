//! Problem parameters, critical exponents and the coefficient algebra of the
//! log-radius equation for `Δ²u = |x|^α u^p`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used to decide that `p` sits on the Hardy–Sobolev exponent.
pub const CRITICAL_TOL: f64 = 1e-12;

/// The triple `(n, α, p)` together with the polyharmonic order `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub n: u32,
    pub alpha: f64,
    pub p: f64,
    pub m: u32,
}

impl ProblemParams {
    /// Biharmonic parameters (`m = 2`), validated.
    pub fn new(n: u32, alpha: f64, p: f64) -> Result<Self> {
        Self::with_order(n, alpha, p, 2)
    }

    pub fn with_order(n: u32, alpha: f64, p: f64, m: u32) -> Result<Self> {
        let params = Self { n, alpha, p, m };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidParams("polyharmonic order m must be >= 1".into()));
        }
        if self.n <= 2 * self.m {
            return Err(Error::InvalidParams(format!(
                "dimension n = {} must exceed 2m = {}",
                self.n,
                2 * self.m
            )));
        }
        if !self.alpha.is_finite() || self.alpha <= -2.0 * self.m as f64 {
            return Err(Error::InvalidParams(format!(
                "alpha = {} must be finite and exceed -2m = {}",
                self.alpha,
                -2.0 * self.m as f64
            )));
        }
        if !self.p.is_finite() || self.p <= 1.0 {
            return Err(Error::InvalidParams(format!("p = {} must be finite and exceed 1", self.p)));
        }
        Ok(())
    }

    fn require_biharmonic(&self) -> Result<()> {
        self.validate()?;
        if self.m != 2 {
            return Err(Error::InvalidParams(format!(
                "only m = 2 is supported here (got m = {})",
                self.m
            )));
        }
        Ok(())
    }

    /// `B = (2m + α)/(p − 1)`, the Emden–Fowler scaling exponent.
    pub fn scaling_exponent(&self) -> f64 {
        (2.0 * self.m as f64 + self.alpha) / (self.p - 1.0)
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }
}

/// Critical exponents attached to `(n, m, α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentSet {
    /// `(n + α)/(n − 2m)`
    pub serrin: f64,
    /// `(n + 2m + 2α)/(n − 2m)`
    pub hardy_sobolev: f64,
    /// `(n + 2m)/(n − 2m)`
    pub sobolev: f64,
    /// `(n + 2m + α)/(n − 2m)`
    pub upper: f64,
}

pub fn critical_exponents(params: &ProblemParams) -> Result<ExponentSet> {
    params.validate()?;
    let n = params.nf();
    let two_m = 2.0 * params.m as f64;
    let a = params.alpha;
    let d = n - two_m;
    Ok(ExponentSet {
        serrin: (n + a) / d,
        hardy_sobolev: (n + two_m + 2.0 * a) / d,
        sobolev: (n + two_m) / d,
        upper: (n + two_m + a) / d,
    })
}

/// Coefficients of the autonomous equation satisfied by `w(t) = e^{Bt} u(e^t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub b: f64,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
}

pub fn coefficients(params: &ProblemParams) -> Result<CoefficientSet> {
    params.require_biharmonic()?;
    Ok(coefficients_from_b(params.nf(), params.scaling_exponent()))
}

/// Coefficient formulas as polynomials in `B` for dimension `n`.
pub fn coefficients_from_b(n: f64, b: f64) -> CoefficientSet {
    let q = n * n - 10.0 * n + 20.0;
    let b2 = b * b;
    let b3 = b2 * b;
    let b4 = b3 * b;
    CoefficientSet {
        b,
        a0: b4 - 2.0 * (n - 4.0) * b3 + q * b2 + 2.0 * (n - 2.0) * (n - 4.0) * b,
        a1: -4.0 * b3 + 6.0 * (n - 4.0) * b2 - 2.0 * q * b - 2.0 * (n - 2.0) * (n - 4.0),
        a2: 6.0 * b2 - 6.0 * (n - 4.0) * b + q,
        a3: -4.0 * b + 2.0 * n - 8.0,
        a4: 2.0 * b2 - 2.0 * (n - 4.0) * b - 2.0 * (n - 4.0),
    }
}

/// `A₀` in factored form `B(B+2)(n−2−B)(n−4−B)`.
pub fn a0_factored(params: &ProblemParams) -> Result<f64> {
    params.require_biharmonic()?;
    let n = params.nf();
    let b = params.scaling_exponent();
    Ok(b * (b + 2.0) * (n - 2.0 - b) * (n - 4.0 - b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// `P_C < p < P_S`
    Subcritical,
    /// `p = P_S`
    Critical,
    /// `p > P_S`
    Supercritical,
    /// `p ≤ P_C`
    OutOfRange,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Subcritical => "subcritical",
            Regime::Critical => "critical",
            Regime::Supercritical => "supercritical",
            Regime::OutOfRange => "out-of-range",
        }
    }

    /// Energy is non-increasing in `t` for these regimes and non-decreasing otherwise.
    pub fn energy_non_increasing(&self) -> bool {
        matches!(self, Regime::Subcritical | Regime::Critical)
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    /// Values with `|x| <= zero_tol` are tagged `Zero`.
    pub fn of(x: f64, zero_tol: f64) -> Sign {
        if x.abs() <= zero_tol {
            Sign::Zero
        } else if x > 0.0 {
            Sign::Positive
        } else {
            Sign::Negative
        }
    }

    pub fn symbol(&self) -> char {
        match self {
            Sign::Negative => '-',
            Sign::Zero => '0',
            Sign::Positive => '+',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub regime: Regime,
    /// Signs of `(A₀, A₁, A₃)`.
    pub signs: [Sign; 3],
    /// Whether `p` lies below the upper exponent `(n+4)/(n−4)` of the singular-limit theory.
    pub below_sobolev: bool,
}

impl RegimeReport {
    /// Sign pattern expected for the regime, if the regime prescribes one.
    pub fn expected_signs(&self) -> Option<[Sign; 3]> {
        match self.regime {
            Regime::Subcritical => Some([Sign::Positive, Sign::Positive, Sign::Negative]),
            Regime::Critical => Some([Sign::Positive, Sign::Zero, Sign::Zero]),
            Regime::Supercritical => Some([Sign::Positive, Sign::Negative, Sign::Positive]),
            Regime::OutOfRange => None,
        }
    }

    pub fn signs_consistent(&self) -> bool {
        self.expected_signs().map_or(true, |s| s == self.signs)
    }
}

pub fn classify_regime(params: &ProblemParams) -> Result<RegimeReport> {
    let c = coefficients(params)?;
    let ex = critical_exponents(params)?;
    let p = params.p;
    let regime = if (p - ex.hardy_sobolev).abs() < CRITICAL_TOL * ex.hardy_sobolev.max(1.0) {
        Regime::Critical
    } else if p <= ex.serrin {
        Regime::OutOfRange
    } else if p < ex.hardy_sobolev {
        Regime::Subcritical
    } else {
        Regime::Supercritical
    };
    let scale = 1.0 + c.a2.abs();
    let zero_tol = 1e-12 * scale;
    Ok(RegimeReport {
        regime,
        signs: [
            Sign::of(c.a0, 0.0),
            Sign::of(c.a1, zero_tol),
            Sign::of(c.a3, zero_tol),
        ],
        below_sobolev: p < ex.sobolev,
    })
}

/// Parameters bundled with their derived quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub params: ProblemParams,
    pub coeffs: CoefficientSet,
    pub exponents: ExponentSet,
    pub report: RegimeReport,
}

impl Model {
    pub fn new(params: ProblemParams) -> Result<Self> {
        Ok(Self {
            coeffs: coefficients(&params)?,
            exponents: critical_exponents(&params)?,
            report: classify_regime(&params)?,
            params,
        })
    }

    pub fn from_triple(n: u32, alpha: f64, p: f64) -> Result<Self> {
        Self::new(ProblemParams::new(n, alpha, p)?)
    }

    pub fn regime(&self) -> Regime {
        self.report.regime
    }

    pub fn p(&self) -> f64 {
        self.params.p
    }

    pub fn n(&self) -> f64 {
        self.params.nf()
    }

    pub fn b(&self) -> f64 {
        self.coeffs.b
    }

    /// Nonzero fixed point `A₀^{1/(p−1)}`, when `A₀ > 0`.
    pub fn w_star(&self) -> Option<f64> {
        (self.coeffs.a0 > 0.0).then(|| self.coeffs.a0.powf(1.0 / (self.params.p - 1.0)))
    }

    /// Checks the hypotheses of the singular-limit dichotomy:
    /// `−4 < α ≤ 0`, `P_C < p < (n+4+α)/(n−4)` and `p` off the Hardy–Sobolev exponent.
    pub fn check_dichotomy_window(&self) -> Result<()> {
        let ex = &self.exponents;
        let p = self.params.p;
        if self.params.alpha > 0.0 {
            return Err(Error::OutOfRange(format!(
                "alpha = {} must be <= 0 for the dichotomy window",
                self.params.alpha
            )));
        }
        if p <= ex.serrin || p >= ex.upper {
            return Err(Error::OutOfRange(format!(
                "p = {p} must lie in ({}, {}) (Serrin exponent, (n+4+alpha)/(n-4))",
                ex.serrin, ex.upper
            )));
        }
        if self.regime() == Regime::Critical {
            return Err(Error::OutOfRange(format!(
                "p = {p} equals the Hardy-Sobolev exponent {}",
                ex.hardy_sobolev
            )));
        }
        Ok(())
    }

    /// Checks `P_C < p < (n+4)/(n−4)`, the range where trajectories are bounded.
    pub fn check_simulation_window(&self) -> Result<()> {
        let ex = &self.exponents;
        let p = self.params.p;
        if p <= ex.serrin || p >= ex.sobolev {
            return Err(Error::OutOfRange(format!(
                "p = {p} must lie in ({}, {}) (Serrin exponent, (n+4)/(n-4))",
                ex.serrin, ex.sobolev
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponents_lane_emden_six() {
        let e = critical_exponents(&ProblemParams::new(6, 0.0, 4.0).unwrap()).unwrap();
        assert_eq!(e.serrin, 3.0);
        assert_eq!(e.hardy_sobolev, 5.0);
        assert_eq!(e.sobolev, 5.0);
        assert_eq!(e.upper, 5.0);
    }

    #[test]
    fn exponents_hardy_weight() {
        let e = critical_exponents(&ProblemParams::new(6, -2.0, 2.5).unwrap()).unwrap();
        assert_eq!(e.serrin, 2.0);
        assert_eq!(e.hardy_sobolev, 3.0);
        let e = critical_exponents(&ProblemParams::new(5, 1.0, 2.5).unwrap()).unwrap();
        assert_eq!(e.serrin, 6.0);
        assert_eq!(e.sobolev, 9.0);
    }

    #[test]
    fn exponents_general_order() {
        let e = critical_exponents(&ProblemParams::with_order(7, 0.0, 2.0, 3).unwrap()).unwrap();
        assert_eq!(e.serrin, 7.0);
        assert_eq!(e.sobolev, 13.0);
        assert!(coefficients(&ProblemParams::with_order(7, 0.0, 2.0, 3).unwrap()).is_err());
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ProblemParams::new(4, 0.0, 2.0).is_err());
        assert!(ProblemParams::new(6, -4.0, 2.0).is_err());
        assert!(ProblemParams::new(6, 0.0, 1.0).is_err());
        assert!(ProblemParams::new(6, 0.0, f64::NAN).is_err());
    }

    #[test]
    fn coefficients_at_six_zero_four() {
        let c = coefficients(&ProblemParams::new(6, 0.0, 4.0).unwrap()).unwrap();
        assert_relative_eq!(c.b, 4.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(c.a3, -4.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(c.a2, -28.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(c.a1, 176.0 / 27.0, max_relative = 1e-14);
        assert_relative_eq!(c.a0, 640.0 / 81.0, max_relative = 1e-14);
        assert_relative_eq!(c.a4, -52.0 / 9.0, max_relative = 1e-14);
    }

    #[test]
    fn coefficients_at_critical_six() {
        let c = coefficients(&ProblemParams::new(6, 0.0, 5.0).unwrap()).unwrap();
        assert_eq!(c.b, 1.0);
        assert_eq!(c.a1, 0.0);
        assert_eq!(c.a3, 0.0);
        assert_eq!(c.a0, 9.0);
        assert_eq!(c.a2, -10.0);
    }

    #[test]
    fn coefficients_vanish_as_p_grows() {
        let c = coefficients(&ProblemParams::new(6, 0.0, 1e12).unwrap()).unwrap();
        assert!(c.b < 1e-11);
        assert!(c.a0.abs() < 1e-10);
    }

    #[test]
    fn factored_a0_examples() {
        let p = ProblemParams::new(6, 0.0, 4.0).unwrap();
        assert_relative_eq!(a0_factored(&p).unwrap(), 640.0 / 81.0, max_relative = 1e-14);
        let p = ProblemParams::new(6, 0.0, 5.0).unwrap();
        assert_eq!(a0_factored(&p).unwrap(), 9.0);
        // p at the Serrin exponent: B = n - 4
        let p = ProblemParams::new(6, 0.0, 3.0).unwrap();
        assert_eq!(a0_factored(&p).unwrap(), 0.0);
    }

    #[test]
    fn regimes_match_sign_lemma() {
        let r = classify_regime(&ProblemParams::new(6, 0.0, 4.0).unwrap()).unwrap();
        assert_eq!(r.regime, Regime::Subcritical);
        assert_eq!(r.signs, [Sign::Positive, Sign::Positive, Sign::Negative]);

        let r = classify_regime(&ProblemParams::new(6, 0.0, 5.0).unwrap()).unwrap();
        assert_eq!(r.regime, Regime::Critical);
        assert_eq!(r.signs[1], Sign::Zero);
        assert_eq!(r.signs[2], Sign::Zero);

        let r = classify_regime(&ProblemParams::new(6, -1.0, 5.0).unwrap()).unwrap();
        assert_eq!(r.regime, Regime::Supercritical);
        assert_eq!(r.signs, [Sign::Positive, Sign::Negative, Sign::Positive]);
        assert!(r.signs_consistent());
    }

    #[test]
    fn out_of_range_still_reports_signs() {
        let r = classify_regime(&ProblemParams::new(5, -1.0, 3.2).unwrap()).unwrap();
        assert_eq!(r.regime, Regime::OutOfRange);
        assert_eq!(r.signs[0], Sign::Negative);
        let m = Model::from_triple(5, -1.0, 3.2).unwrap();
        assert!(m.w_star().is_none());
        assert!(m.check_dichotomy_window().is_err());
    }

    #[test]
    fn windows() {
        let m = Model::from_triple(6, 0.0, 4.0).unwrap();
        assert!(m.check_dichotomy_window().is_ok());
        assert!(m.check_simulation_window().is_ok());
        let m = Model::from_triple(6, 0.0, 9.0).unwrap();
        assert!(m.check_simulation_window().is_err());
        let m = Model::from_triple(6, 0.0, 5.0).unwrap();
        assert!(m.check_dichotomy_window().is_err());
    }
}
