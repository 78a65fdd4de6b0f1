//! Reproducible experiment runners producing [`ResultTable`]s.
//!
//! Every random draw comes from a ChaCha stream keyed by the configured seed
//! and the row's position, so tables do not depend on thread scheduling.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{
    classify_limit, integrate, linearize, manifold_solution, Anchor, IntegrateOptions, LimitTag, Mode, Trajectory,
    DEFAULT_BLOWUP, DEFAULT_MARGIN, DEFAULT_SPACING, DEFAULT_WINDOW,
};
use crate::energy::{audit_monotonicity, energy, scaling_check};
use crate::error::{Error, Result};
use crate::green::{
    integrability_report, representation_check, representation_residual, singularity_bound_check,
    superharmonic_check, RadialField, RadialGrid, DEFAULT_NODES, DEFAULT_R_MIN,
};
use crate::params::{Model, ProblemParams, Regime};
use crate::transform::OdeState;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Atlas,
    Classification,
    EnergyAudit,
    GreenStudy,
    Simulation,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Atlas => "atlas",
            ExperimentKind::Classification => "classification",
            ExperimentKind::EnergyAudit => "energy-audit",
            ExperimentKind::GreenStudy => "green-study",
            ExperimentKind::Simulation => "simulation",
        }
    }
}

/// How initial data are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    /// Seeded coefficients on the backward-decaying eigenspace of a fixed
    /// point, lifted to a full solution by forward integration.
    Manifold,
    /// Uniform hyperbox of half-width `radius` around `(w*, 0, 0, 0)` at `t = 0`,
    /// integrated backward.
    Box,
}

/// Fixed point(s) used by manifold sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// Alternate rows: even rows near `w*`, odd rows near `0`.
    Both,
    Star,
    Zero,
}

/// A raw `(n, α, p)` point; validation happens per row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint {
    pub n: u32,
    pub alpha: f64,
    pub p: f64,
}

impl ParamPoint {
    pub fn new(n: u32, alpha: f64, p: f64) -> Self {
        Self { n, alpha, p }
    }

    pub fn model(&self) -> Result<Model> {
        Model::from_triple(self.n, self.alpha, self.p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub params: Vec<ParamPoint>,
    pub tol: f64,
    pub samples: usize,
    pub seed: u64,
    pub sampling: Sampling,
    pub branch: Branch,
    /// Half-width of the sampling box or bound on manifold coefficients.
    pub radius: f64,
    pub t_end: f64,
    pub margin: f64,
    pub window: f64,
    pub blowup: f64,
    pub grid_nodes: usize,
    pub r_min: f64,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, params: Vec<ParamPoint>) -> Self {
        Self {
            kind,
            params,
            tol: 1e-10,
            samples: 64,
            seed: 0,
            sampling: Sampling::Manifold,
            branch: Branch::Both,
            radius: 1e-3,
            t_end: -60.0,
            margin: DEFAULT_MARGIN,
            window: DEFAULT_WINDOW,
            blowup: DEFAULT_BLOWUP,
            grid_nodes: DEFAULT_NODES,
            r_min: DEFAULT_R_MIN,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(1e-13..=1e-4).contains(&self.tol) {
            return bad(format!("tol = {:e} must lie in [1e-13, 1e-4]", self.tol));
        }
        if !(self.radius >= 0.0) || !self.radius.is_finite() {
            return bad(format!("radius = {} must be finite and nonnegative", self.radius));
        }
        if !(self.t_end < 0.0) || !self.t_end.is_finite() {
            return bad(format!("t-end = {} must be negative", self.t_end));
        }
        if !(self.margin > 0.0) || !(self.window > 0.0) || !(self.blowup > 0.0) {
            return bad("margin, window and blowup must be positive".into());
        }
        if self.grid_nodes < 256 {
            return bad(format!("grid-nodes = {} must be at least 256", self.grid_nodes));
        }
        if !(self.r_min > 0.0 && self.r_min < 1.0) {
            return bad(format!("r-min = {} must lie in (0, 1)", self.r_min));
        }
        Ok(())
    }

    /// SHA-256 of the JSON serialization, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().fold(String::new(), |mut s, b| {
            write!(s, "{b:02x}").unwrap();
            s
        })
    }

    fn options(&self, tol: f64) -> IntegrateOptions {
        IntegrateOptions { tol, spacing: DEFAULT_SPACING, blowup: self.blowup }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Real(x) => format_real(*x),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            Cell::Real(x) => Some(*x),
            Cell::Int(i) => Some(*i as f64),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Cell::Bool(b) => Some(*b),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}
impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Real)
    }
}
impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}
impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}
impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}
impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}
impl From<u32> for Cell {
    fn from(i: u32) -> Self {
        Cell::Int(i as i64)
    }
}

/// Shortest round-trip representation; exponent form outside `[1e-4, 1e15)`.
pub fn format_real(x: f64) -> String {
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\"").replace('\n', " "))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub kind: ExperimentKind,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub config_hash: String,
}

impl ResultTable {
    fn new(kind: ExperimentKind, columns: &[&str], config: &ExperimentConfig) -> Self {
        Self {
            kind,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            config_hash: config.hash(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Cell `name` of row `i`.
    pub fn get(&self, i: usize, name: &str) -> Option<&Cell> {
        self.column(name).map(|j| &self.rows[i][j])
    }

    fn provenance(&self) -> String {
        format!(
            "# experiment: {}\n# config-hash: {}\n# hhlab-core: {}\n",
            self.kind.as_str(),
            self.config_hash,
            VERSION
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.provenance();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| csv_escape(&c.render())).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Space-padded columns for terminals.
    pub fn to_aligned(&self) -> String {
        let rendered: Vec<Vec<String>> =
            self.rows.iter().map(|r| r.iter().map(Cell::render).collect()).collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|j| rendered.iter().map(|r| r[j].chars().count()).chain([self.columns[j].len()]).max().unwrap())
            .collect();
        let line = |cells: Vec<&str>| {
            let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            padded.join("  ").trim_end().to_string() + "\n"
        };
        let mut out = self.provenance();
        out.push_str(&line(self.columns.iter().map(String::as_str).collect()));
        for r in &rendered {
            out.push_str(&line(r.iter().map(String::as_str).collect()));
        }
        out
    }
}

fn error_text(e: &Error) -> String {
    format!("error: {e}")
}

fn param_cells(pt: &ParamPoint) -> Vec<Cell> {
    vec![pt.n.into(), pt.alpha.into(), pt.p.into()]
}

const ATLAS_COLUMNS: &[&str] = &[
    "n", "alpha", "p", "status", "serrin", "hardy_sobolev", "sobolev", "upper", "b", "a0", "a1", "a2", "a3", "a4",
    "regime", "signs", "signs_consistent", "w_star",
];

/// One row of exponents, coefficients and regime per parameter point.
pub fn run_atlas(config: &ExperimentConfig) -> Result<ResultTable> {
    let mut table = ResultTable::new(ExperimentKind::Atlas, ATLAS_COLUMNS, config);
    for pt in &config.params {
        let mut row = param_cells(pt);
        match pt.model() {
            Ok(m) => {
                let (ex, c, rep) = (m.exponents, m.coeffs, m.report);
                let signs: String = rep.signs.iter().map(|s| s.symbol()).collect();
                row.extend([
                    "ok".into(),
                    ex.serrin.into(),
                    ex.hardy_sobolev.into(),
                    ex.sobolev.into(),
                    ex.upper.into(),
                    c.b.into(),
                    c.a0.into(),
                    c.a1.into(),
                    c.a2.into(),
                    c.a3.into(),
                    c.a4.into(),
                    rep.regime.as_str().into(),
                    signs.into(),
                    rep.signs_consistent().into(),
                    m.w_star().into(),
                ]);
            }
            Err(e) => {
                row.push(error_text(&e).into());
                row.resize(ATLAS_COLUMNS.len(), Cell::Empty);
            }
        }
        table.push(row);
    }
    Ok(table)
}

/// A generated trajectory with the branch it was drawn from.
#[derive(Debug, Clone)]
pub struct Sample {
    pub trajectory: Trajectory,
    pub branch: &'static str,
}

fn rng_for(seed: u64, point: usize, row: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((point as u64) << 32) | row as u64);
    rng
}

fn modes_at(anchor: Anchor, model: &Model) -> Result<Vec<Mode>> {
    let rep = linearize(anchor.value(), &model.coeffs, model.p())?;
    Ok(rep.decaying_backward_modes(1e-9))
}

/// Draws sample `row` of parameter point `point` and integrates it at `tol`.
///
/// The same `(seed, point, row)` always yields the same initial data, so a
/// second call with a different `tol` reproduces the draw.
pub fn generate_sample(
    model: &Model,
    config: &ExperimentConfig,
    point: usize,
    row: usize,
    tol: f64,
) -> Result<Sample> {
    let mut rng = rng_for(config.seed, point, row);
    let r = config.radius;
    let opts = config.options(tol);
    match config.sampling {
        Sampling::Box => {
            let ws = model
                .w_star()
                .ok_or_else(|| Error::OutOfRange("box sampling needs A0 > 0".into()))?;
            let mut s = [ws, 0.0, 0.0, 0.0];
            for x in &mut s {
                *x += rng.gen_range(-r..=r);
            }
            let trajectory = integrate(&OdeState(s), 0.0, config.t_end, model, &opts)?;
            Ok(Sample { trajectory, branch: "box" })
        }
        Sampling::Manifold => {
            let star = match (config.branch, model.w_star()) {
                (Branch::Zero, _) | (_, None) => None,
                (Branch::Star, Some(ws)) => Some(ws),
                (Branch::Both, Some(ws)) => (row % 2 == 0).then_some(ws),
            };
            let anchor = star.map_or(Anchor::Zero, Anchor::Star);
            let modes = modes_at(anchor, model)?;
            let dim: usize = modes.iter().map(Mode::dim).sum();
            let mut coeffs: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            if anchor == Anchor::Zero && !coeffs.is_empty() {
                // The slowest mode dominates as r → 0 and must keep u positive.
                coeffs[0] = coeffs[0].abs();
            }
            let reach = r * rng.gen_range(0.1..=1.0);
            let trajectory = manifold_solution(anchor, &modes, &coeffs, reach, config.t_end, model, &opts)?;
            Ok(Sample { trajectory, branch: if star.is_some() { "star" } else { "zero" } })
        }
    }
}

/// Whether the dichotomy contract applies; `Ok(false)` marks exploratory `α > 0` rows.
fn dichotomy_status(model: &Model) -> Result<bool> {
    match model.check_dichotomy_window() {
        Ok(()) => Ok(true),
        Err(e) if model.params.alpha > 0.0 => {
            let ex = &model.exponents;
            let p = model.p();
            if p > ex.serrin && p < ex.upper && model.regime() != Regime::Critical && model.w_star().is_some() {
                Ok(false)
            } else {
                Err(e)
            }
        }
        Err(e) => Err(e),
    }
}

const CLASSIFY_COLUMNS: &[&str] = &[
    "n", "alpha", "p", "sample", "status", "branch", "tag", "terminal_value", "window_variation", "t_reached",
    "e_min", "e_max", "tag_half_tol", "stable", "count_zero", "count_fixed_point", "count_blow_up",
    "count_undetermined",
];

fn classify_once(model: &Model, config: &ExperimentConfig, point: usize, row: usize, tol: f64) -> Result<(Sample, LimitTag, f64, f64)> {
    let sample = generate_sample(model, config, point, row, tol)?;
    let class = match classify_limit(&sample.trajectory, &model.coeffs, model.p(), config.margin, config.window) {
        Ok(c) => c,
        Err(Error::Insufficient(_)) => crate::dynamics::LimitClass {
            tag: LimitTag::Undetermined,
            terminal_value: sample.trajectory.states.last().map_or(f64::NAN, |s| s.w0()),
            window_variation: f64::NAN,
        },
        Err(e) => return Err(e),
    };
    Ok((sample, class.tag, class.terminal_value, class.window_variation))
}

fn classification_row(model: &Model, config: &ExperimentConfig, pt: &ParamPoint, point: usize, row: usize, status: &str) -> Vec<Cell> {
    let mut cells = param_cells(pt);
    cells.push(row.into());
    let first = classify_once(model, config, point, row, config.tol);
    let (sample, tag, terminal, variation) = match first {
        Ok(x) => x,
        Err(e) => {
            cells.push(error_text(&e).into());
            cells.resize(CLASSIFY_COLUMNS.len(), Cell::Empty);
            return cells;
        }
    };
    let (mut e_min, mut e_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in &sample.trajectory.states {
        if let Ok(e) = energy(s, &model.coeffs, model.p(), model.params.n) {
            e_min = e_min.min(e.value);
            e_max = e_max.max(e.value);
        }
    }
    let half = classify_once(model, config, point, row, 0.5 * config.tol).map(|x| x.1);
    let stable = matches!(half, Ok(t) if t == tag);
    cells.extend([
        status.into(),
        sample.branch.into(),
        tag.as_str().into(),
        terminal.into(),
        if variation.is_nan() { Cell::Empty } else { variation.into() },
        sample.trajectory.last_time().into(),
        e_min.into(),
        e_max.into(),
        half.map_or_else(|e| Cell::Text(error_text(&e)), |t| t.as_str().into()),
        stable.into(),
    ]);
    cells.resize(CLASSIFY_COLUMNS.len(), Cell::Empty);
    cells
}

/// Backward trajectories classified by their limit, with a summary row per point.
pub fn run_classification_sweep(config: &ExperimentConfig) -> Result<ResultTable> {
    config.validate()?;
    let mut table = ResultTable::new(ExperimentKind::Classification, CLASSIFY_COLUMNS, config);
    for (point, pt) in config.params.iter().enumerate() {
        let checked = pt.model().and_then(|m| dichotomy_status(&m).map(|c| (m, c)));
        let (model, contract) = match checked {
            Ok(x) => x,
            Err(e) => {
                let mut row = param_cells(pt);
                row.extend(["summary".into(), error_text(&e).into()]);
                row.resize(CLASSIFY_COLUMNS.len(), Cell::Empty);
                table.push(row);
                continue;
            }
        };
        let status = if contract { "ok" } else { "exploratory" };
        let rows: Vec<Vec<Cell>> = (0..config.samples)
            .into_par_iter()
            .map(|row| classification_row(&model, config, pt, point, row, status))
            .collect();
        let tag_col = table.column("tag").unwrap();
        let mut counts = [0usize; 4];
        for r in &rows {
            match r[tag_col].as_text() {
                Some("zero") => counts[0] += 1,
                Some("fixed-point") => counts[1] += 1,
                Some("blow-up") => counts[2] += 1,
                _ => counts[3] += 1,
            }
        }
        for r in rows {
            table.push(r);
        }
        let mut summary = param_cells(pt);
        summary.extend(["summary".into(), status.into()]);
        summary.resize(CLASSIFY_COLUMNS.len() - 4, Cell::Empty);
        summary.extend(counts.map(Cell::from));
        table.push(summary);
    }
    Ok(table)
}

const ENERGY_COLUMNS: &[&str] = &[
    "n", "alpha", "p", "regime", "sample", "status", "branch", "direction", "max_violation", "rate_mismatch",
    "e_initial", "e_final", "scaling_max",
];

/// Scaling factors used by the audit: `e^{−2}, e^{−1}, e`.
pub const AUDIT_LAMBDAS: [f64; 3] = [-2.0, -1.0, 1.0];

fn energy_row(model: &Model, config: &ExperimentConfig, pt: &ParamPoint, point: usize, row: usize) -> Vec<Cell> {
    let mut cells = param_cells(pt);
    cells.extend([model.regime().as_str().into(), row.into()]);
    let result = generate_sample(model, config, point, row, config.tol).and_then(|s| {
        let audit = audit_monotonicity(&s.trajectory, model)?;
        let mut scaling = 0.0_f64;
        for l in AUDIT_LAMBDAS {
            scaling = scaling.max(scaling_check(&s.trajectory, l.exp(), model)?);
        }
        Ok((s, audit, scaling))
    });
    match result {
        Ok((s, a, scaling)) => {
            // e_initial/e_final follow increasing t.
            let direction = if model.regime().energy_non_increasing() { "non-increasing" } else { "non-decreasing" };
            cells.extend([
                "ok".into(),
                s.branch.into(),
                direction.into(),
                a.max_violation.into(),
                a.rate_mismatch.into(),
                a.e_first.into(),
                a.e_last.into(),
                scaling.into(),
            ]);
        }
        Err(e) => {
            cells.push(error_text(&e).into());
            cells.resize(ENERGY_COLUMNS.len(), Cell::Empty);
        }
    }
    cells
}

/// Monotonicity, rate-law and scaling audits of sampled trajectories.
pub fn run_energy_audit(config: &ExperimentConfig) -> Result<ResultTable> {
    config.validate()?;
    let mut table = ResultTable::new(ExperimentKind::EnergyAudit, ENERGY_COLUMNS, config);
    for (point, pt) in config.params.iter().enumerate() {
        let model = match pt.model() {
            Ok(m) => m,
            Err(e) => {
                let mut row = param_cells(pt);
                row.extend([Cell::Empty, Cell::Empty, error_text(&e).into()]);
                row.resize(ENERGY_COLUMNS.len(), Cell::Empty);
                table.push(row);
                continue;
            }
        };
        let rows: Vec<Vec<Cell>> = (0..config.samples)
            .into_par_iter()
            .map(|row| energy_row(&model, config, pt, point, row))
            .collect();
        for r in rows {
            table.push(r);
        }
    }
    Ok(table)
}

const GREEN_COLUMNS: &[&str] = &[
    "n", "alpha", "p", "source", "status", "tag", "residual_1", "residual_2", "residual_4", "min_ratio", "tau",
    "min_neg_laplacian", "l1_converges", "weighted_diverges", "sup_0", "sup_1", "sup_2", "sup_3", "tail_sup_0",
    "notes",
];

/// Exact singular solution `w ≡ w*` on `[t_end, 0]`.
pub fn exact_singular_trajectory(model: &Model, t_end: f64) -> Result<Trajectory> {
    let ws = model.w_star().ok_or_else(|| Error::OutOfRange("A0 <= 0: no singular profile".into()))?;
    Trajectory::from_fn(0.0, t_end, DEFAULT_SPACING, |_| ([ws, 0.0, 0.0, 0.0], [0.0; 4]))
}

/// `u ≡ 1`, i.e. `w = e^{Bt}`, on `[t_end, 0]`.
pub fn unit_trajectory(model: &Model, t_end: f64) -> Result<Trajectory> {
    let b = model.b();
    Trajectory::from_fn(0.0, t_end, DEFAULT_SPACING, |t| {
        let e = (b * t).exp();
        ([e, b * e, b * b * e, b.powi(3) * e], [b * e, b * b * e, b.powi(3) * e, b.powi(4) * e])
    })
}

fn green_row(model: &Model, config: &ExperimentConfig, pt: &ParamPoint, source: &str, traj: Result<Trajectory>) -> Vec<Cell> {
    let mut cells = param_cells(pt);
    cells.push(source.into());
    let traj = match traj {
        Ok(t) => t,
        Err(e) => {
            cells.push(error_text(&e).into());
            cells.resize(GREEN_COLUMNS.len(), Cell::Empty);
            return cells;
        }
    };
    let mut notes = Vec::new();
    let tag = classify_limit(&traj, &model.coeffs, model.p(), config.margin, config.window)
        .map(|c| c.tag.as_str())
        .unwrap_or("undetermined");
    let grid = RadialGrid::new(config.r_min, config.grid_nodes);
    let mut residuals = [None; 3];
    if let Ok(g) = grid {
        let grids = [g.clone(), g.refined(), g.refined().refined()];
        for (slot, g) in residuals.iter_mut().zip(&grids) {
            match representation_check(&traj, model, g) {
                Ok(r) => *slot = Some(r.residual),
                Err(e) => {
                    notes.push(format!("representation: {e}"));
                    break;
                }
            }
        }
    }
    let min_ratio = match residuals {
        [Some(a), Some(b), Some(c)] => Some((a / b).min(b / c)),
        _ => None,
    };
    let (tau, min_val) = match superharmonic_check(&traj, model) {
        Ok(r) => (Some(r.tau), Some(r.min_value)),
        Err(e) => {
            notes.push(format!("superharmonic: {e}"));
            (None, None)
        }
    };
    let (l1, weighted) = match integrability_report(&traj, model) {
        Ok(r) => (Cell::Bool(r.l1_converges), Cell::Bool(r.weighted_diverges)),
        Err(Error::Integrability(m)) => {
            notes.push(format!("integrability: {m}"));
            (Cell::Bool(false), Cell::Empty)
        }
        Err(e) => {
            notes.push(format!("integrability: {e}"));
            (Cell::Empty, Cell::Empty)
        }
    };
    let (sups, tail0) = match singularity_bound_check(&traj, model, config.window) {
        Ok(r) => (r.sup_values.map(Some), Some(r.tail_sup[0])),
        Err(e) => {
            notes.push(format!("bound: {e}"));
            ([None; 4], None)
        }
    };
    cells.extend([
        "ok".into(),
        tag.into(),
        residuals[0].into(),
        residuals[1].into(),
        residuals[2].into(),
        min_ratio.into(),
        tau.into(),
        min_val.into(),
        l1,
        weighted,
        sups[0].into(),
        sups[1].into(),
        sups[2].into(),
        sups[3].into(),
        tail0.into(),
        notes.join("; ").into(),
    ]);
    cells
}

/// Representation, super-harmonicity, integrability and pointwise-bound
/// checks on the exact singular solution, `u ≡ 1` and sampled trajectories.
///
/// Residuals are reported at `grid_nodes`, twice and four times as many nodes.
pub fn run_green_study(config: &ExperimentConfig) -> Result<ResultTable> {
    config.validate()?;
    let mut table = ResultTable::new(ExperimentKind::GreenStudy, GREEN_COLUMNS, config);
    for (point, pt) in config.params.iter().enumerate() {
        let model = match pt.model() {
            Ok(m) => m,
            Err(e) => {
                let mut row = param_cells(pt);
                row.extend([Cell::Empty, error_text(&e).into()]);
                row.resize(GREEN_COLUMNS.len(), Cell::Empty);
                table.push(row);
                continue;
            }
        };
        let mut jobs: Vec<(String, Box<dyn Fn() -> Result<Trajectory> + Send + Sync>)> = Vec::new();
        let m = model;
        let t_end = config.t_end;
        jobs.push(("exact".into(), Box::new(move || exact_singular_trajectory(&m, t_end))));
        jobs.push(("unit".into(), Box::new(move || unit_trajectory(&m, t_end))));
        for row in 0..config.samples {
            let cfg = config.clone();
            jobs.push((
                format!("sample-{row}"),
                Box::new(move || generate_sample(&m, &cfg, point, row, cfg.tol).map(|s| s.trajectory)),
            ));
        }
        let rows: Vec<Vec<Cell>> =
            jobs.par_iter().map(|(name, job)| green_row(&model, config, pt, name, job())).collect();
        for r in rows {
            table.push(r);
        }
    }
    Ok(table)
}

const SIMULATION_COLUMNS: &[&str] =
    &["n", "alpha", "p", "sample", "status", "branch", "t", "w0", "w1", "w2", "w3", "energy"];

/// Full trajectories of the sampled solutions, one row per stored time.
///
/// Points outside `P_C < p < (n+4)/(n−4)` get a single error row.
pub fn run_simulation(config: &ExperimentConfig) -> Result<ResultTable> {
    config.validate()?;
    let mut table = ResultTable::new(ExperimentKind::Simulation, SIMULATION_COLUMNS, config);
    for (point, pt) in config.params.iter().enumerate() {
        let model = match pt.model().and_then(|m| m.check_simulation_window().map(|_| m)) {
            Ok(m) => m,
            Err(e) => {
                let mut row = param_cells(pt);
                row.extend([Cell::Empty, error_text(&e).into()]);
                row.resize(SIMULATION_COLUMNS.len(), Cell::Empty);
                table.push(row);
                continue;
            }
        };
        let samples: Vec<Result<Sample>> = (0..config.samples)
            .into_par_iter()
            .map(|row| generate_sample(&model, config, point, row, config.tol))
            .collect();
        for (row, sample) in samples.into_iter().enumerate() {
            let sample = match sample {
                Ok(s) => s,
                Err(e) => {
                    let mut cells = param_cells(pt);
                    cells.extend([row.into(), error_text(&e).into()]);
                    cells.resize(SIMULATION_COLUMNS.len(), Cell::Empty);
                    table.push(cells);
                    continue;
                }
            };
            let traj = &sample.trajectory;
            for (t, s) in traj.times.iter().zip(&traj.states) {
                let e = energy(s, &model.coeffs, model.p(), model.params.n).map(|e| e.value).ok();
                let mut cells = param_cells(pt);
                cells.extend([row.into(), "ok".into(), sample.branch.into(), (*t).into()]);
                cells.extend(s.0.map(Cell::from));
                cells.push(e.into());
                table.push(cells);
            }
        }
    }
    Ok(table)
}

/// Representation residual of a radial field read from a field file.
///
/// Fails with [`Error::NonPositiveField`] if any node value is negative.
pub fn run_field_check(params: ProblemParams, field: &RadialField, config: &ExperimentConfig) -> Result<ResultTable> {
    let model = Model::new(params)?;
    field.require_nonnegative()?;
    let report = representation_residual(field, &model)?;
    let mut table = ResultTable::new(ExperimentKind::GreenStudy, FIELD_COLUMNS, config);
    let mut row = param_cells(&params.into());
    row.extend(["field".into(), "ok".into(), field.grid.len().into(), report.residual.into()]);
    table.push(row);
    Ok(table)
}

const FIELD_COLUMNS: &[&str] = &["n", "alpha", "p", "source", "status", "nodes", "residual"];

/// Dispatches on `config.kind`.
pub fn run(config: &ExperimentConfig) -> Result<ResultTable> {
    match config.kind {
        ExperimentKind::Atlas => run_atlas(config),
        ExperimentKind::Classification => run_classification_sweep(config),
        ExperimentKind::EnergyAudit => run_energy_audit(config),
        ExperimentKind::GreenStudy => run_green_study(config),
        ExperimentKind::Simulation => run_simulation(config),
    }
}

/// Cartesian product of parameter lists, in `n`-major order.
pub fn param_grid(ns: &[u32], alphas: &[f64], ps: &[f64]) -> Vec<ParamPoint> {
    let mut out = Vec::with_capacity(ns.len() * alphas.len() * ps.len());
    for &n in ns {
        for &alpha in alphas {
            for &p in ps {
                out.push(ParamPoint::new(n, alpha, p));
            }
        }
    }
    out
}

impl From<ProblemParams> for ParamPoint {
    fn from(p: ProblemParams) -> Self {
        Self::new(p.n, p.alpha, p.p)
    }
}
