//! Radial Green operators of `−Δ` and `Δ²` on the unit ball, and checks of
//! the integral representation, integrability and pointwise bounds on
//! generated solutions.
//!
//! Fields live on a log-uniform grid `r_min = r₀ < … < r_{N−1} = 1`. The
//! radial Poisson problem `−Δv = f`, `v(1) = 0` is solved by
//!
//! ```text
//! v(r) = ∫_r^1 τ^{1−n} ∫_0^τ f(s) s^{n−1} ds dτ
//! ```
//!
//! with both integrals taken in `s = ln r` by a fourth-order cumulative rule.
//! The piece `∫_0^{r_min}` is closed by a power-law tail fitted to the two
//! innermost dyadic shells.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{classify_limit, LimitTag, Trajectory, DEFAULT_MARGIN, DEFAULT_WINDOW};
use crate::error::{Error, Result};
use crate::ode::hermite;
use crate::params::{Model, ProblemParams};
use crate::transform::{neg_laplacian_radial, scaled_derivatives};

pub const DEFAULT_R_MIN: f64 = 9.5367431640625e-7; // 2^-20
pub const DEFAULT_NODES: usize = 2048;
/// Consecutive shell ratios above one that declare divergence.
pub const DIVERGENCE_RUN: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    step: f64,
}

impl RadialGrid {
    pub fn new(r_min: f64, count: usize) -> Result<Self> {
        if !(r_min > 0.0 && r_min < 1.0) {
            return Err(Error::InvalidParams(format!("r_min must lie in (0, 1), got {r_min}")));
        }
        if count < 256 {
            return Err(Error::InvalidParams(format!("grid needs at least 256 nodes, got {count}")));
        }
        let s0 = r_min.ln();
        let step = -s0 / (count - 1) as f64;
        let nodes = (0..count)
            .map(|k| if k == count - 1 { 1.0 } else { (s0 + step * k as f64).exp() })
            .collect();
        Ok(Self { nodes, step })
    }

    /// Validates that `nodes` are log-uniform to `1e−12` and end at `1`.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 256 {
            return Err(Error::InvalidParams(format!("grid needs at least 256 nodes, got {}", nodes.len())));
        }
        if nodes[0] <= 0.0 || (nodes[nodes.len() - 1] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams("grid must run from r_min > 0 to 1".into()));
        }
        let step = -nodes[0].ln() / (nodes.len() - 1) as f64;
        for (k, w) in nodes.windows(2).enumerate() {
            let d = (w[1] / w[0]).ln();
            if (d - step).abs() > 1e-12 * step.max(1.0) * 1e3 {
                return Err(Error::InvalidParams(format!("grid is not log-uniform at node {}", k + 1)));
            }
        }
        Ok(Self { nodes, step })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_min(&self) -> f64 {
        self.nodes[0]
    }

    /// Spacing in `ln r`.
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn log_node(&self, k: usize) -> f64 {
        self.r_min().ln() + self.step * k as f64
    }

    /// Same `r_min`, twice the node count.
    pub fn refined(&self) -> Self {
        Self::new(self.r_min(), 2 * self.len()).expect("refining a valid grid")
    }

    /// Indices of the interior half `N/4 .. 3N/4`.
    pub fn interior(&self) -> std::ops::Range<usize> {
        self.len() / 4..3 * self.len() / 4
    }
}

impl Default for RadialGrid {
    fn default() -> Self {
        Self::new(DEFAULT_R_MIN, DEFAULT_NODES).expect("default grid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialField {
    pub grid: RadialGrid,
    pub values: Vec<f64>,
}

impl RadialField {
    pub fn new(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParams(format!(
                "field has {} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite value at node {k}")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: &RadialGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid.clone(), values)
    }

    /// `u(r) = r^{−B} w(ln r)` at every node; the trajectory must cover `[ln r_min, 0]`.
    pub fn from_trajectory(traj: &Trajectory, b: f64, grid: &RadialGrid) -> Result<Self> {
        let lo = grid.r_min().ln();
        let slack = 1e-9;
        if traj.is_empty() || traj.t_min() > lo + slack || traj.t_max() < -slack {
            return Err(Error::Insufficient(format!(
                "trajectory must cover [{lo:.3}, 0] in log radius",
            )));
        }
        let mut values = Vec::with_capacity(grid.len());
        for k in 0..grid.len() {
            let t = grid.log_node(k).clamp(traj.t_min(), traj.t_max());
            let w = traj.interpolate(t).expect("time inside trajectory range").w0();
            values.push((-b * t).exp() * w);
        }
        Self::new(grid.clone(), values)
    }

    /// First node with a negative value.
    pub fn require_nonnegative(&self) -> Result<()> {
        match self.values.iter().position(|&v| v < 0.0) {
            Some(node) => Err(Error::NonPositiveField { node, radius: self.grid.nodes()[node], value: self.values[node] }),
            None => Ok(()),
        }
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = self.grid.nodes().iter().zip(&self.values).map(|(&r, &v)| f(r, v)).collect();
        Self::new(self.grid.clone(), values)
    }

    /// Two-column `radius,value` text with a `# radial-field` header.
    pub fn to_csv(&self, params: &ProblemParams) -> String {
        let mut out = format!("# radial-field n={} alpha={} p={}\n", params.n, params.alpha, params.p);
        for (r, v) in self.grid.nodes().iter().zip(&self.values) {
            writeln!(out, "{r:e},{v:e}").unwrap();
        }
        out
    }

    /// Parses [`RadialField::to_csv`] output. Blank lines and other `#` lines are ignored.
    pub fn from_csv(text: &str) -> Result<(ProblemParams, Self)> {
        let mut header = None;
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("# radial-field") {
                header = Some(parse_header(rest, lineno + 1)?);
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',');
            let (Some(r), Some(v), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(Error::Parse(format!("line {}: expected two columns", lineno + 1)));
            };
            let num = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            nodes.push(num(r)?);
            values.push(num(v)?);
        }
        let params = header.ok_or_else(|| Error::Parse("missing `# radial-field` header".into()))?;
        let grid = RadialGrid::from_nodes(nodes)?;
        Ok((params, Self::new(grid, values)?))
    }
}

fn parse_header(rest: &str, lineno: usize) -> Result<ProblemParams> {
    let (mut n, mut alpha, mut p) = (None, None, None);
    for item in rest.split_whitespace() {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {lineno}: malformed header item `{item}`")))?;
        let bad = |e: &dyn std::fmt::Display| Error::Parse(format!("line {lineno}: {k}: {e}"));
        match k {
            "n" => n = Some(v.parse::<u32>().map_err(|e| bad(&e))?),
            "alpha" => alpha = Some(v.parse::<f64>().map_err(|e| bad(&e))?),
            "p" => p = Some(v.parse::<f64>().map_err(|e| bad(&e))?),
            _ => return Err(Error::Parse(format!("line {lineno}: unknown header key `{k}`"))),
        }
    }
    match (n, alpha, p) {
        (Some(n), Some(alpha), Some(p)) => ProblemParams::new(n, alpha, p),
        _ => Err(Error::Parse(format!("line {lineno}: header needs n, alpha and p"))),
    }
}

// Weights (×1440) integrating the quintic through six consecutive nodes over
// the interval between local nodes m and m + 1.
const INTERVAL_WEIGHTS: [[f64; 6]; 5] = [
    [475.0, 1427.0, -798.0, 482.0, -173.0, 27.0],
    [-27.0, 637.0, 1022.0, -258.0, 77.0, -11.0],
    [11.0, -93.0, 802.0, 802.0, -93.0, 11.0],
    [-11.0, 77.0, -258.0, 1022.0, 637.0, -27.0],
    [27.0, -173.0, 482.0, -798.0, 1427.0, 475.0],
];

/// `C_k = ∫_{s₀}^{s_k} g ds` on a uniform grid of step `h`, sixth order.
fn cumulative(g: &[f64], h: f64) -> Vec<f64> {
    let n = g.len();
    assert!(n >= 6);
    let mut c = vec![0.0; n];
    // Neumaier-compensated running sum.
    let (mut sum, mut comp) = (0.0_f64, 0.0_f64);
    for k in 0..n - 1 {
        let j0 = k.saturating_sub(2).min(n - 6);
        let w = &INTERVAL_WEIGHTS[k - j0];
        let piece = w.iter().zip(&g[j0..j0 + 6]).map(|(w, g)| w * g).sum::<f64>() * h / 1440.0;
        let t = sum + piece;
        comp += if sum.abs() >= piece.abs() { (sum - t) + piece } else { (piece - t) + sum };
        sum = t;
        c[k + 1] = sum + comp;
    }
    c
}

// Cumulative integral at s₀ + x, from the nodal values and its derivative g.
fn cumulative_at(c: &[f64], g: &[f64], h: f64, x: f64) -> f64 {
    let k = ((x / h).floor() as usize).min(c.len() - 2);
    let s = x / h - k as f64;
    hermite(c[k], c[k + 1], g[k], g[k + 1], h, s)
}

/// `∫_0^{r_min} g ds/s` for an integrand `g(s)` in log variables, from the
/// innermost two dyadic shells assuming a power law `r^κ`, `κ > 0`.
fn origin_tail(c: &[f64], g: &[f64], h: f64, what: &str) -> Result<f64> {
    let l2 = std::f64::consts::LN_2;
    let a = cumulative_at(c, g, h, l2);
    let b = cumulative_at(c, g, h, 2.0 * l2) - a;
    // The outer kernel r^{2−n} magnifies the innermost shell, so the tail is
    // dropped only when the shell vanishes outright.
    if a == 0.0 {
        return Ok(0.0);
    }
    let ratio = b / a;
    if !(ratio > 1.0) {
        return Err(Error::Integrability(format!(
            "{what}: innermost dyadic shell ratio {ratio:.6} does not decay towards the origin"
        )));
    }
    Ok(a / (ratio - 1.0))
}

/// Solves `−Δv = f` in the unit ball with `v(1) = 0` for radial `f`.
pub fn poisson_solve_radial(f: &RadialField, n: u32) -> Result<RadialField> {
    let grid = &f.grid;
    let h = grid.step();
    let nf = n as f64;
    let g: Vec<f64> = grid.nodes().iter().zip(&f.values).map(|(&r, &v)| v * r.powf(nf)).collect();
    let c = cumulative(&g, h);
    let tail = origin_tail(&c, &g, h, "∫ f r^{n−1} dr")?;
    let outer: Vec<f64> =
        grid.nodes().iter().zip(&c).map(|(&r, &ck)| r.powf(2.0 - nf) * (ck + tail)).collect();
    // Accumulate from r = 1 inwards: v spans many decades and a difference
    // against the full integral would cancel.
    let reversed: Vec<f64> = outer.iter().rev().copied().collect();
    let mut v = cumulative(&reversed, h);
    v.reverse();
    RadialField::new(grid.clone(), v)
}

/// Solves `Δ²v = f` with `v(1) = Δv(1) = 0` by two nested Poisson solves.
pub fn bilaplacian_solve_radial(f: &RadialField, n: u32) -> Result<RadialField> {
    let g = poisson_solve_radial(f, n)?;
    poisson_solve_radial(&g, n)
}

/// Radial biharmonic functions `1, r², r^{2−n}, r^{4−n}`.
pub fn biharmonic_basis(r: f64, n: u32) -> [f64; 4] {
    let nf = n as f64;
    [1.0, r * r, r.powf(2.0 - nf), r.powf(4.0 - nf)]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationReport {
    /// `‖r^B (d − Pd)‖ / ‖r^B u‖` over the interior half of the grid, where
    /// `d = u − G₂[r^α u^p]` and `P` projects onto the biharmonic span.
    pub residual: f64,
    pub coefficients: [f64; 4],
    pub nodes: usize,
}

/// Weighted least-squares removal of the biharmonic span from `d`.
fn project_out_biharmonic(d: &RadialField, u: &RadialField, n: u32, b: f64) -> Result<RepresentationReport> {
    let grid = &d.grid;
    let idx = grid.interior();
    let rows = idx.len();
    let mut a = DMatrix::<f64>::zeros(rows, 4);
    let mut rhs = DVector::<f64>::zeros(rows);
    let mut u_norm = 0.0;
    for (i, k) in idx.clone().enumerate() {
        let r = grid.nodes()[k];
        let wt = r.powf(b);
        for (j, phi) in biharmonic_basis(r, n).iter().enumerate() {
            a[(i, j)] = wt * phi;
        }
        rhs[i] = wt * d.values[k];
        u_norm += (wt * u.values[k]).powi(2);
    }
    // Column equilibration before the SVD solve.
    let scales: Vec<f64> = (0..4).map(|j| a.column(j).norm().max(f64::MIN_POSITIVE)).collect();
    for (j, s) in scales.iter().enumerate() {
        a.column_mut(j).unscale_mut(*s);
    }
    let sol = a
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Integration { t: f64::NAN, reason: format!("projection failed: {e}") })?;
    let resid = &rhs - &a * &sol;
    let u_norm = u_norm.sqrt();
    let coefficients = [0, 1, 2, 3].map(|j| sol[j] / scales[j]);
    let residual = if u_norm > 0.0 { resid.norm() / u_norm } else { resid.norm() };
    Ok(RepresentationReport { residual, coefficients, nodes: grid.len() })
}

/// Representation residual of a sampled solution `u` of `Δ²u = r^α u^p`.
pub fn representation_residual(u: &RadialField, model: &Model) -> Result<RepresentationReport> {
    u.require_nonnegative()?;
    let (alpha, p) = (model.params.alpha, model.p());
    let f = u.map(|r, v| r.powf(alpha) * v.powf(p))?;
    let v = bilaplacian_solve_radial(&f, model.params.n)?;
    let d = RadialField::new(u.grid.clone(), u.values.iter().zip(&v.values).map(|(a, b)| a - b).collect())?;
    project_out_biharmonic(&d, u, model.params.n, model.b())
}

pub fn representation_check(traj: &Trajectory, model: &Model, grid: &RadialGrid) -> Result<RepresentationReport> {
    let u = RadialField::from_trajectory(traj, model.b(), grid)?;
    representation_residual(&u, model)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuperharmonicReport {
    /// `−Δu > 0` on `(0, tau)` within the sampled range.
    pub tau: f64,
    pub min_value: f64,
    pub min_radius: f64,
}

/// Positivity of `−Δu` along a singular trajectory, scanning outward from the
/// innermost sample.
pub fn superharmonic_check(traj: &Trajectory, model: &Model) -> Result<SuperharmonicReport> {
    let class = classify_limit(traj, &model.coeffs, model.p(), DEFAULT_MARGIN, DEFAULT_WINDOW)?;
    if class.tag == LimitTag::ConvergesToZero {
        return Err(Error::RemovableClass);
    }
    let mut order: Vec<usize> = (0..traj.len()).collect();
    order.sort_by(|&i, &j| traj.times[i].total_cmp(&traj.times[j]));
    let mut report = SuperharmonicReport { tau: 0.0, min_value: f64::INFINITY, min_radius: f64::NAN };
    for &i in &order {
        let t = traj.times[i];
        let value = neg_laplacian_radial(t, &traj.states[i], &model.params);
        let r = t.exp();
        if !(value > 0.0) {
            report.tau = r;
            return Ok(report);
        }
        if value < report.min_value {
            report.min_value = value;
            report.min_radius = r;
        }
        report.tau = r;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrabilityReport {
    pub l1_converges: bool,
    pub weighted_diverges: bool,
    /// Shell integrals over `r ∈ [2^{−k−1}, 2^{−k}]`, `k = 0, 1, …`.
    pub l1_shells: Vec<f64>,
    pub weighted_shells: Vec<f64>,
    /// Ratios `S_{k+1} / S_k`.
    pub l1_ratios: Vec<f64>,
    pub weighted_ratios: Vec<f64>,
    /// `−log₂` of each ratio: the local power `σ + 1` of a shell integral `∝ r^{σ+1}`.
    pub l1_exponents: Vec<f64>,
    pub weighted_exponents: Vec<f64>,
}

const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

fn shell_integral(traj: &Trajectory, lo: f64, hi: f64, integrand: &impl Fn(f64, f64) -> f64) -> f64 {
    const PANELS: usize = 4;
    let h = (hi - lo) / PANELS as f64;
    let mut sum = 0.0;
    for j in 0..PANELS {
        let mid = lo + h * (j as f64 + 0.5);
        for (x, w) in GL5 {
            let t = mid + 0.5 * h * x;
            let w0 = traj.interpolate(t).map_or(0.0, |s| s.w0()).max(0.0);
            sum += w * 0.5 * h * integrand(t, w0);
        }
    }
    sum
}

fn ratios(shells: &[f64]) -> Vec<f64> {
    shells
        .windows(2)
        .map(|s| if s[0] == 0.0 { if s[1] == 0.0 { 0.0 } else { f64::INFINITY } } else { s[1] / s[0] })
        .collect()
}

fn diverges(ratios: &[f64]) -> bool {
    ratios.len() >= DIVERGENCE_RUN && ratios[ratios.len() - DIVERGENCE_RUN..].iter().all(|&q| q > 1.0)
}

/// Dyadic shell tests for `r^α u^p` in `L¹(B₁)` and for the divergent weighted
/// integral `∫ r^α u^p r^{2−n} dx`.
///
/// A divergent `L¹` test is an error: the representation needs it.
pub fn integrability_report(traj: &Trajectory, model: &Model) -> Result<IntegrabilityReport> {
    let l2 = std::f64::consts::LN_2;
    let shells = ((-traj.t_min()) / l2 + 1e-9).floor() as usize;
    if shells < 16 || traj.t_max() < -1e-9 {
        return Err(Error::Insufficient(format!(
            "shell tests need the trajectory to reach r = 2^-16 from r = 1; it covers [{:.3}, {:.3}]",
            traj.t_min(),
            traj.t_max()
        )));
    }
    let (n, b, p) = (model.n(), model.b(), model.p());
    let l1 = |t: f64, w: f64| ((n - 4.0 - b) * t).exp() * w.powf(p);
    let weighted = |t: f64, w: f64| (-(2.0 + b) * t).exp() * w.powf(p);
    let mut l1_shells = Vec::with_capacity(shells);
    let mut weighted_shells = Vec::with_capacity(shells);
    for k in 0..shells {
        let (lo, hi) = (-((k + 1) as f64) * l2, -(k as f64) * l2);
        l1_shells.push(shell_integral(traj, lo, hi, &l1));
        weighted_shells.push(shell_integral(traj, lo, hi, &weighted));
    }
    let l1_ratios = ratios(&l1_shells);
    let weighted_ratios = ratios(&weighted_shells);
    if diverges(&l1_ratios) {
        return Err(Error::Integrability(format!(
            "r^alpha u^p is not integrable: the last {DIVERGENCE_RUN} dyadic shell ratios exceed 1 (last {:.4})",
            l1_ratios.last().unwrap()
        )));
    }
    let expo = |q: &Vec<f64>| q.iter().map(|x| -x.log2()).collect::<Vec<_>>();
    Ok(IntegrabilityReport {
        l1_converges: true,
        weighted_diverges: diverges(&weighted_ratios),
        l1_exponents: expo(&l1_ratios),
        weighted_exponents: expo(&weighted_ratios),
        l1_shells,
        weighted_shells,
        l1_ratios,
        weighted_ratios,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularityBoundReport {
    /// `sup r^{B+i} |u^{(i)}|` over samples with `r ≤ 1/2`.
    pub sup_values: [f64; 4],
    /// The same sups restricted to the innermost `window` of log radius.
    pub tail_sup: [f64; 4],
    pub r_min: f64,
}

pub fn singularity_bound_check(traj: &Trajectory, model: &Model, window: f64) -> Result<SingularityBoundReport> {
    let cut = -std::f64::consts::LN_2;
    if traj.is_empty() || traj.t_min() > cut {
        return Err(Error::Insufficient("trajectory does not reach r = 1/2".into()));
    }
    let deep = traj.t_min() + window;
    let mut sup_values = [0.0_f64; 4];
    let mut tail_sup = [0.0_f64; 4];
    for (&t, s) in traj.times.iter().zip(&traj.states) {
        if t > cut {
            continue;
        }
        let d = scaled_derivatives(s, model.b());
        for i in 0..4 {
            sup_values[i] = sup_values[i].max(d[i].abs());
            if t <= deep {
                tail_sup[i] = tail_sup[i].max(d[i].abs());
            }
        }
    }
    Ok(SingularityBoundReport { sup_values, tail_sup, r_min: traj.t_min().exp() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate, IntegrateOptions};
    use crate::transform::OdeState;
    use approx::assert_relative_eq;

    fn grid() -> RadialGrid {
        RadialGrid::default()
    }

    #[test]
    fn grid_is_log_uniform() {
        let g = grid();
        assert_eq!(g.len(), 2048);
        assert_eq!(g.nodes()[2047], 1.0);
        assert_relative_eq!(g.r_min(), 2f64.powi(-20), max_relative = 1e-15);
        for w in g.nodes().windows(2) {
            assert!(((w[1] / w[0]).ln() - g.step()).abs() < 1e-12);
        }
        assert!(RadialGrid::new(1e-3, 100).is_err());
        assert!(RadialGrid::new(0.0, 1000).is_err());
        assert_eq!(g.refined().len(), 4096);
    }

    #[test]
    fn cumulative_rule_is_sixth_order() {
        let err = |n: usize| {
            let h = 1.0 / (n - 1) as f64;
            let g: Vec<f64> = (0..n).map(|k| (3.0 * k as f64 * h).exp()).collect();
            let c = cumulative(&g, h);
            ((c[n - 1] - ((3.0f64).exp() - 1.0) / 3.0) as f64).abs()
        };
        let ratio = err(41) / err(81);
        assert!(ratio > 50.0, "{ratio}");
    }

    #[test]
    fn poisson_closed_forms() {
        let g = grid();
        let zero = poisson_solve_radial(&RadialField::from_fn(&g, |_| 0.0).unwrap(), 6).unwrap();
        assert!(zero.values.iter().all(|&v| v == 0.0));
        for (n, tol) in [(3u32, 1e-10), (5, 1e-10), (6, 1e-10), (12, 1e-10)] {
            let v = poisson_solve_radial(&RadialField::from_fn(&g, |_| 1.0).unwrap(), n).unwrap();
            for (r, x) in g.nodes().iter().zip(&v.values) {
                assert!((x - (1.0 - r * r) / (2.0 * n as f64)).abs() < tol, "n={n}");
            }
        }
        let v = poisson_solve_radial(&RadialField::from_fn(&g, |r| r.powi(-2)).unwrap(), 6).unwrap();
        for (r, x) in g.nodes().iter().zip(&v.values) {
            assert!((x + r.ln() / 4.0).abs() < 1e-7);
        }
    }

    #[test]
    fn bilaplacian_constant_source() {
        let g = grid();
        let v = bilaplacian_solve_radial(&RadialField::from_fn(&g, |_| 1.0).unwrap(), 6).unwrap();
        assert!((v.values[0] - 5.0 / 1152.0).abs() < 1e-7);
        // −Δ[(1−r²)/(4n²)] = 1/(2n) and −Δ[(1−r⁴)/(8n(n+2))] = r²/(2n).
        let n = 6.0;
        let exact = |r: f64| (1.0 - r * r) / (4.0 * n * n) - (1.0 - r.powi(4)) / (8.0 * n * (n + 2.0));
        for (r, x) in g.nodes().iter().zip(&v.values).step_by(97) {
            assert!((x - exact(*r)).abs() < 1e-9, "r={r}");
        }
    }

    #[test]
    fn divergent_source_is_rejected() {
        let g = grid();
        let f = RadialField::from_fn(&g, |r| r.powf(-6.5)).unwrap();
        assert!(matches!(poisson_solve_radial(&f, 6), Err(Error::Integrability(_))));
    }

    #[test]
    fn power_law_inverse_modulo_biharmonics() {
        let g = grid();
        let n = 7u32;
        let nf = n as f64;
        for gamma in [0.4, 1.3, 2.6] {
            let c = gamma * (gamma + 2.0) * (gamma - nf + 2.0) * (gamma - nf + 4.0);
            let f = RadialField::from_fn(&g, |r| c * r.powf(-gamma - 4.0)).unwrap();
            let u = RadialField::from_fn(&g, |r| r.powf(-gamma)).unwrap();
            let v = bilaplacian_solve_radial(&f, n).unwrap();
            let d = RadialField::new(g.clone(), u.values.iter().zip(&v.values).map(|(a, b)| a - b).collect()).unwrap();
            let rep = project_out_biharmonic(&d, &u, n, gamma).unwrap();
            assert!(rep.residual < 1e-8, "gamma={gamma}: {}", rep.residual);
        }
    }

    #[test]
    fn exact_singular_solution_representation() {
        let m = Model::from_triple(6, 0.0, 4.0).unwrap();
        let ws = m.w_star().unwrap();
        let tr = integrate(&OdeState::constant(ws), 0.0, -15.0, &m, &IntegrateOptions::default()).unwrap();
        let rep = representation_check(&tr, &m, &grid()).unwrap();
        assert!(rep.residual < 1e-4, "{}", rep.residual);
    }

    #[test]
    fn biharmonic_field_has_zero_residual_after_projection() {
        let m = Model::from_triple(6, 0.0, 4.0).unwrap();
        let g = grid();
        let u = RadialField::from_fn(&g, |r| 1.0 + r * r).unwrap();
        let d = u.clone();
        let rep = project_out_biharmonic(&d, &u, 6, m.b()).unwrap();
        assert!(rep.residual < 1e-12);
        assert_relative_eq!(rep.coefficients[0], 1.0, max_relative = 1e-10);
    }

    #[test]
    fn negative_field_names_the_node() {
        let g = grid();
        let mut values = vec![1.0; g.len()];
        values[17] = -0.5;
        let u = RadialField::new(g.clone(), values).unwrap();
        let m = Model::from_triple(6, 0.0, 4.0).unwrap();
        match representation_residual(&u, &m) {
            Err(Error::NonPositiveField { node, .. }) => assert_eq!(node, 17),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_round_trip() {
        let g = RadialGrid::new(1e-4, 300).unwrap();
        let u = RadialField::from_fn(&g, |r| r.powf(-1.5)).unwrap();
        let params = ProblemParams::new(6, -0.5, 3.5).unwrap();
        let text = u.to_csv(&params);
        assert!(text.starts_with("# radial-field n=6 alpha=-0.5 p=3.5\n"));
        let (back_params, back) = RadialField::from_csv(&text).unwrap();
        assert_eq!(back_params, params);
        for (a, b) in back.values.iter().zip(&u.values) {
            assert_relative_eq!(a, b, max_relative = 1e-15);
        }
        assert!(RadialField::from_csv("0.5,1\n").is_err());
        assert!(RadialField::from_csv("# radial-field n=6 alpha=0 p=4\n0.5,x\n").is_err());
    }

    #[test]
    fn superharmonicity_examples() {
        let m = Model::from_triple(6, 0.0, 4.0).unwrap();
        let ws = m.w_star().unwrap();
        let tr = integrate(&OdeState::constant(ws), 0.0, -12.0, &m, &IntegrateOptions::default()).unwrap();
        let rep = superharmonic_check(&tr, &m).unwrap();
        assert_eq!(rep.tau, 1.0);
        assert_relative_eq!(rep.min_value, m.b() * (4.0 - m.b()) * ws, max_relative = 1e-10);
        assert!((rep.min_value - 7.0817).abs() < 1e-4);
        let b = m.b();
        let one = Trajectory::from_fn(0.0, -12.0, 0.01, |t| {
            let e = (b * t).exp();
            ([e, b * e, b * b * e, b * b * b * e], [b * e, b * b * e, b * b * b * e, b.powi(4) * e])
        })
        .unwrap();
        assert!(matches!(superharmonic_check(&one, &m), Err(Error::RemovableClass)));
    }

    fn power_trajectory(k: f64, t_end: f64) -> Trajectory {
        Trajectory::from_fn(0.0, t_end, 0.01, |t| {
            let e = (k * t).exp();
            ([e, k * e, k * k * e, k.powi(3) * e], [k * e, k * k * e, k.powi(3) * e, k.powi(4) * e])
        })
        .unwrap()
    }

    #[test]
    fn integrability_examples() {
        let m = Model::from_triple(6, 0.0, 4.0).unwrap();
        let ws = m.w_star().unwrap();
        let tr = integrate(&OdeState::constant(ws), 0.0, -16.0, &m, &IntegrateOptions::default()).unwrap();
        let rep = integrability_report(&tr, &m).unwrap();
        assert!(rep.l1_converges && rep.weighted_diverges);
        for e in &rep.l1_exponents {
            assert!((e - 2.0 / 3.0).abs() < 1e-6 * 2.0 / 3.0, "{e}");
        }
        for e in &rep.weighted_exponents {
            assert!((e + 10.0 / 3.0).abs() < 1e-6 * 10.0 / 3.0, "{e}");
        }
        // u ≡ 1
        let rep = integrability_report(&power_trajectory(m.b(), -16.0), &m).unwrap();
        assert!(rep.l1_converges && !rep.weighted_diverges);
        // u = r^{−(n−4)−ε}
        let eps = 0.1;
        let tr = power_trajectory(m.b() - 2.0 - eps, -16.0);
        assert!(matches!(integrability_report(&tr, &m), Err(Error::Integrability(_))));
        let short = power_trajectory(m.b(), -5.0);
        assert!(matches!(integrability_report(&short, &m), Err(Error::Insufficient(_))));
    }

    #[test]
    fn singularity_bound_of_exact_solution() {
        let m = Model::from_triple(6, 0.0, 4.0).unwrap();
        let ws = m.w_star().unwrap();
        let b = m.b();
        let tr = integrate(&OdeState::constant(ws), 0.0, -20.0, &m, &IntegrateOptions::default()).unwrap();
        let rep = singularity_bound_check(&tr, &m, 5.0).unwrap();
        let expect = [ws, b * ws, b * (b + 1.0) * ws, b * (b + 1.0) * (b + 2.0) * ws];
        for i in 0..4 {
            assert_relative_eq!(rep.sup_values[i], expect[i], max_relative = 1e-14);
            assert_relative_eq!(rep.tail_sup[i], expect[i], max_relative = 1e-14);
        }
    }
}
