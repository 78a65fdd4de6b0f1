//! Radial solutions of the weighted fourth-order Hardy–Hénon equation
//! `Δ²u = |x|^α u^p` in the punctured unit ball.

pub mod dynamics;
pub mod energy;
pub mod error;
pub mod experiments;
pub mod green;
pub mod ode;
pub mod params;
pub mod roots;
pub mod transform;

pub use dynamics::{
    classify_limit, fixed_points, integrate, linearize, manifold_solution, vector_field, Anchor, IntegrateOptions,
    LimitClass, LimitTag, LinearizationReport, Mode, Termination, Trajectory,
};
pub use energy::{audit_monotonicity, energy, energy_rate, scaling_check, sphere_measure, EnergyValue, MonotonicityAudit};
pub use error::{Error, Result};
pub use experiments::{Cell, ExperimentConfig, ExperimentKind, ParamPoint, ResultTable};
pub use green::{
    bilaplacian_solve_radial, integrability_report, poisson_solve_radial, representation_check,
    representation_residual, singularity_bound_check, superharmonic_check, RadialField, RadialGrid,
};
pub use params::{
    classify_regime, coefficients, critical_exponents, CoefficientSet, ExponentSet, Model, ProblemParams, Regime,
    RegimeReport, Sign,
};
pub use transform::{from_log, to_log, OdeState, RadialJet};
