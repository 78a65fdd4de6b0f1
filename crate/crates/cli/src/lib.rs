//! Command-line front end for the `hhlab` experiments.
//!
//! Data go to the output stream (or `--out`), diagnostics to the error
//! stream. Exit status 0 on success, 1 on usage errors, 2 on numerical
//! failures.

pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use hhlab_core::experiments::{self, ExperimentKind};
use hhlab_core::{Error, Model, RadialField, ResultTable};

use config::Settings;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Aligned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Exponents, B, A0..A4, regime and w* for each parameter point.
    Coeffs,
    /// Sampled trajectories with their energy.
    Simulate,
    /// Limit classification of sampled backward trajectories.
    Classify,
    /// Energy monotonicity, rate-law and scaling audits.
    EnergyAudit,
    /// Green representation, super-harmonicity, integrability and bound checks,
    /// or the representation residual of a field file (`--field`).
    GreenCheck,
    /// Regime atlas over a parameter grid.
    Atlas,
}

#[derive(Debug, Parser)]
#[command(name = "hhlab", version, about = "Radial fourth-order Hardy-Henon solutions: coefficients, dynamics, energy and Green checks")]
struct Args {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Default, clap::Args)]
struct Flags {
    /// Dimension(s), comma separated.
    #[arg(long, global = true, allow_hyphen_values = true)]
    n: Option<String>,
    /// Weight exponent(s); lists and start:stop:step ranges allowed.
    #[arg(long, global = true, allow_hyphen_values = true)]
    alpha: Option<String>,
    /// Nonlinearity exponent(s); lists and start:stop:step ranges allowed.
    #[arg(long, global = true, allow_hyphen_values = true)]
    p: Option<String>,
    /// Integrator tolerance.
    #[arg(long, global = true, allow_hyphen_values = true)]
    tol: Option<String>,
    /// Base seed for sampling.
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Samples per parameter point.
    #[arg(long, global = true)]
    samples: Option<String>,
    /// manifold or box.
    #[arg(long, global = true)]
    sampling: Option<String>,
    /// both, star or zero.
    #[arg(long, global = true)]
    branch: Option<String>,
    /// Sampling radius around the fixed point.
    #[arg(long, global = true)]
    radius: Option<String>,
    /// Backward horizon in t = ln r.
    #[arg(long = "t-end", global = true, allow_hyphen_values = true)]
    t_end: Option<String>,
    /// Distance from a fixed point that counts as converged.
    #[arg(long, global = true)]
    margin: Option<String>,
    /// Classification window length in t.
    #[arg(long, global = true)]
    window: Option<String>,
    /// Stop integration once w exceeds this value.
    #[arg(long, global = true)]
    blowup: Option<String>,
    /// Radial grid nodes for Green checks.
    #[arg(long = "grid-nodes", global = true)]
    grid_nodes: Option<String>,
    /// Innermost radius of the Green grid.
    #[arg(long = "r-min", global = true)]
    r_min: Option<String>,
    /// Config file of `key = value` lines; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format (default: aligned on a terminal, csv otherwise).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Suppress all diagnostics.
    #[arg(long, global = true)]
    quiet: bool,
    /// Worker threads for row-parallel experiments.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Field file for green-check.
    #[arg(long, global = true)]
    field: Option<PathBuf>,
}

/// A parsed command line.
#[derive(Debug, Clone, PartialEq)]
pub struct CliInvocation {
    pub command: Command,
    /// Flag values keyed by setting name; merged over the config file at execution.
    pub flags: Settings,
    pub config_path: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub quiet: bool,
    pub jobs: Option<usize>,
    pub field: Option<PathBuf>,
}

/// Outcome of parsing: either an invocation, or text to print and an exit status.
#[derive(Debug)]
pub enum Parsed {
    Run(CliInvocation),
    Exit { stdout: String, stderr: String, status: i32 },
}

pub fn parse_invocation<I, T>(argv: I) -> Parsed
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    Parsed::Exit { stdout: text, stderr: String::new(), status: EXIT_OK }
                }
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    Parsed::Exit { stdout: String::new(), stderr: text, status: EXIT_USAGE }
                }
                _ => {
                    let line = text.lines().next().unwrap_or("error: invalid arguments").to_string();
                    Parsed::Exit { stdout: String::new(), stderr: line + "\n", status: EXIT_USAGE }
                }
            };
        }
    };
    let f = args.flags;
    let mut flags = Settings::default();
    let pairs = [
        ("n", &f.n),
        ("alpha", &f.alpha),
        ("p", &f.p),
        ("tol", &f.tol),
        ("seed", &f.seed),
        ("samples", &f.samples),
        ("sampling", &f.sampling),
        ("branch", &f.branch),
        ("radius", &f.radius),
        ("t-end", &f.t_end),
        ("margin", &f.margin),
        ("window", &f.window),
        ("blowup", &f.blowup),
        ("grid-nodes", &f.grid_nodes),
        ("r-min", &f.r_min),
    ];
    for (k, v) in pairs {
        if let Some(v) = v {
            flags.set_flag(k, v);
        }
    }
    Parsed::Run(CliInvocation {
        command: args.command,
        flags,
        config_path: f.config,
        out: f.out,
        format: f.format,
        quiet: f.quiet,
        jobs: f.jobs,
        field: f.field,
    })
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() || matches!(e, Error::Insufficient(_)) {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

fn usage(e: String) -> Failure {
    Failure::Usage(e)
}

fn settings(inv: &CliInvocation) -> Result<Settings, Failure> {
    let mut s = match &inv.config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
            Settings::parse(&text).map_err(usage)?
        }
        None => Settings::default(),
    };
    for key in config::KEYS {
        if let Some(v) = inv.flags.get(key) {
            s.set_flag(key, v);
        }
    }
    Ok(s)
}

fn default_samples(cmd: Command) -> usize {
    match cmd {
        Command::Simulate => 1,
        Command::GreenCheck => 4,
        _ => 64,
    }
}

fn build_table(inv: &CliInvocation) -> Result<ResultTable, Failure> {
    let s = settings(inv)?;
    if inv.command == Command::GreenCheck {
        if let Some(path) = &inv.field {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read field file {}: {e}", path.display())))?;
            let (params, field) = RadialField::from_csv(&text)?;
            let config = s.experiment(ExperimentKind::GreenStudy, vec![params.into()], 0).map_err(usage)?;
            return Ok(experiments::run_field_check(params, &field, &config)?);
        }
    }
    let points = s.param_points().map_err(usage)?;
    let kind = match inv.command {
        Command::Coeffs | Command::Atlas => ExperimentKind::Atlas,
        Command::Simulate => ExperimentKind::Simulation,
        Command::Classify => ExperimentKind::Classification,
        Command::EnergyAudit => ExperimentKind::EnergyAudit,
        Command::GreenCheck => ExperimentKind::GreenStudy,
    };
    if inv.command == Command::Simulate {
        for pt in &points {
            Model::from_triple(pt.n, pt.alpha, pt.p)
                .and_then(|m| m.check_simulation_window())
                .map_err(|e| Failure::Usage(format!("--p: {e}")))?;
        }
    }
    let config = s.experiment(kind, points, default_samples(inv.command)).map_err(usage)?;
    Ok(experiments::run(&config)?)
}

fn run_pooled<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(Failure::Usage("--jobs must be at least 1".into())),
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| Failure::Usage(format!("--jobs: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs `inv`, writing data to `stdout` (or `--out`) and diagnostics to `stderr`.
///
/// `is_tty` selects the default format when `--format` is absent.
pub fn execute(inv: &CliInvocation, stdout: &mut dyn Write, stderr: &mut dyn Write, is_tty: bool) -> i32 {
    let result = run_pooled(inv.jobs, || build_table(inv)).and_then(|r| r);
    let table = match result {
        Ok(t) => t,
        Err(f) => {
            let (msg, status) = match f {
                Failure::Usage(m) => (m, EXIT_USAGE),
                Failure::Numerical(m) => (m, EXIT_NUMERICAL),
            };
            if !inv.quiet {
                let _ = writeln!(stderr, "error: {msg}");
            }
            return status;
        }
    };
    let format = inv.format.unwrap_or(if is_tty && inv.out.is_none() { Format::Aligned } else { Format::Csv });
    let text = match format {
        Format::Csv => table.to_csv(),
        Format::Aligned => table.to_aligned(),
    };
    let written = match &inv.out {
        Some(path) => std::fs::write(path, &text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => return EXIT_OK,
            r => r.map_err(|e| e.to_string()),
        },
    };
    if let Err(e) = written {
        if !inv.quiet {
            let _ = writeln!(stderr, "error: {e}");
        }
        return EXIT_USAGE;
    }
    if let (Some(path), false) = (&inv.out, inv.quiet) {
        let _ = writeln!(stderr, "wrote {} rows to {}", table.rows.len(), path.display());
    }
    EXIT_OK
}

/// Parses and executes `argv`; returns the exit status.
pub fn main_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write, is_tty: bool) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse_invocation(argv) {
        Parsed::Run(inv) => execute(&inv, stdout, stderr, is_tty),
        Parsed::Exit { stdout: out, stderr: err, status } => {
            let _ = stdout.write_all(out.as_bytes());
            let _ = stderr.write_all(err.as_bytes());
            status
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> CliInvocation {
        match parse_invocation(std::iter::once("hhlab").chain(args.iter().copied())) {
            Parsed::Run(inv) => inv,
            Parsed::Exit { stderr, .. } => panic!("unexpected exit: {stderr}"),
        }
    }

    #[test]
    fn parses_negative_values_and_hyphenated_commands() {
        let inv = parse(&["energy-audit", "--n", "7", "--alpha", "-1", "--p", "3", "--t-end", "-30"]);
        assert_eq!(inv.command, Command::EnergyAudit);
        assert_eq!(inv.flags.get("alpha"), Some("-1"));
        assert_eq!(inv.flags.get("t-end"), Some("-30"));
    }

    #[test]
    fn unknown_flag_is_a_one_line_usage_error() {
        match parse_invocation(["hhlab", "coeffs", "--bogus", "1"]) {
            Parsed::Exit { stderr, status, .. } => {
                assert_eq!(status, EXIT_USAGE);
                assert_eq!(stderr.lines().count(), 1);
                assert!(stderr.contains("--bogus"));
            }
            Parsed::Run(_) => panic!("accepted an unknown flag"),
        }
    }

    #[test]
    fn help_exits_zero() {
        match parse_invocation(["hhlab", "--help"]) {
            Parsed::Exit { stdout, status, .. } => {
                assert_eq!(status, EXIT_OK);
                assert!(stdout.contains("green-check"));
            }
            Parsed::Run(_) => panic!("help did not exit"),
        }
    }

    #[test]
    fn format_defaults_follow_the_terminal() {
        let inv = parse(&["coeffs", "--n", "6", "--p", "4"]);
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(execute(&inv, &mut out, &mut err, true), EXIT_OK);
        let aligned = String::from_utf8(out).unwrap();
        let mut out = Vec::new();
        execute(&inv, &mut out, &mut err, false);
        let csv = String::from_utf8(out).unwrap();
        assert!(csv.lines().nth(3).unwrap().starts_with("n,alpha,p,"));
        assert!(aligned.lines().nth(3).unwrap().starts_with("n  "));
    }
}
