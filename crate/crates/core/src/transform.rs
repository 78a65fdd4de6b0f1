//! Change of variables between radial jets of `u(r)` and jets of
//! `w(t) = e^{Bt} u(e^t)` in the logarithmic radius `t = ln r`.
//!
//! With `D = d/dt = r d/dr` and `U(t) = u(e^t)`:
//!
//! ```text
//! D U   = r u'
//! D² U  = r u' +   r² u''
//! D³ U  = r u' + 3 r² u'' + r³ u'''
//! ```
//!
//! and `D^k w = e^{Bt} (D + B)^k U`. Only jets up to order three are carried;
//! the fourth derivative always comes from the equation itself.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ProblemParams;

/// `(r, u, u', u'', u''')`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialJet {
    pub r: f64,
    pub u: [f64; 4],
}

/// `(w, ∂_t w, ∂_tt w, ∂_ttt w)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OdeState(pub [f64; 4]);

impl OdeState {
    pub const ZERO: OdeState = OdeState([0.0; 4]);

    pub fn new(w0: f64, w1: f64, w2: f64, w3: f64) -> Self {
        Self([w0, w1, w2, w3])
    }

    /// Rest state `(c, 0, 0, 0)`.
    pub fn constant(c: f64) -> Self {
        Self([c, 0.0, 0.0, 0.0])
    }

    pub fn w0(&self) -> f64 {
        self.0[0]
    }
    pub fn w1(&self) -> f64 {
        self.0[1]
    }
    pub fn w2(&self) -> f64 {
        self.0[2]
    }
    pub fn w3(&self) -> f64 {
        self.0[3]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

// (D + s)^k applied to a jet (x0, x1, x2, x3) of D-derivatives.
fn shift_jet(x: [f64; 4], s: f64) -> [f64; 4] {
    let s2 = s * s;
    let s3 = s2 * s;
    [
        x[0],
        x[1] + s * x[0],
        x[2] + 2.0 * s * x[1] + s2 * x[0],
        x[3] + 3.0 * s * x[2] + 3.0 * s2 * x[1] + s3 * x[0],
    ]
}

/// Maps a physical jet to `(t, w-jet)`.
pub fn to_log(jet: &RadialJet, b: f64) -> Result<(f64, OdeState)> {
    let r = jet.r;
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidParams(format!("radius must be positive, got {r}")));
    }
    let [u0, u1, u2, u3] = jet.u;
    let r2 = r * r;
    let d = [
        u0,
        r * u1,
        r * u1 + r2 * u2,
        r * u1 + 3.0 * r2 * u2 + r2 * r * u3,
    ];
    let scale = r.powf(b);
    let w = shift_jet(d, b).map(|x| x * scale);
    Ok((r.ln(), OdeState(w)))
}

/// Inverse of [`to_log`].
pub fn from_log(t: f64, state: &OdeState, b: f64) -> RadialJet {
    let r = t.exp();
    let scale = (-b * t).exp();
    let d = shift_jet(state.0, -b).map(|x| x * scale);
    let r2 = r * r;
    RadialJet {
        r,
        u: [
            d[0],
            d[1] / r,
            (d[2] - d[1]) / r2,
            (d[3] - 3.0 * d[2] + 2.0 * d[1]) / (r2 * r),
        ],
    }
}

/// `r^{B+k} u^{(k)}(r)` for `k = 0..3`, computed without forming `r^{-B}`.
///
/// These are the scale-invariant derivative bounds used for pointwise
/// singularity estimates.
pub fn scaled_derivatives(state: &OdeState, b: f64) -> [f64; 4] {
    let d = shift_jet(state.0, -b);
    [d[0], d[1], d[2] - d[1], d[3] - 3.0 * d[2] + 2.0 * d[1]]
}

/// `−Δu` at `r = e^t` for the radial function encoded by `state`:
/// `r^{−B−2} [ −w₂ − (n−2−2B) w₁ + B(n−2−B) w₀ ]`.
pub fn neg_laplacian_radial(t: f64, state: &OdeState, params: &ProblemParams) -> f64 {
    let n = params.nf();
    let b = params.scaling_exponent();
    let bracket = -state.w2() - (n - 2.0 - 2.0 * b) * state.w1() + b * (n - 2.0 - b) * state.w0();
    (-(b + 2.0) * t).exp() * bracket
}
