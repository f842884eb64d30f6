//! Multi-resource fair scheduling on heterogeneous servers.
//!
//! The crate models a cluster as servers with capacity vectors and
//! frameworks with per-task demand vectors. [`engine`] grants tasks one at a
//! time by progressive filling under a choice of fairness [`criteria`] and
//! server-selection policies; [`fluid`] solves the continuous relaxations
//! used as reference optima; [`harness`] runs the Monte Carlo experiments
//! and writes result tables.

pub mod corpus;
pub mod criteria;
pub mod engine;
pub mod error;
pub mod fluid;
pub mod harness;
pub mod rng;
pub mod scenario;
pub mod state;
pub mod stats;

pub use criteria::{Criterion, Score, Weights};
pub use engine::{
    apply_event, monte_carlo, resume, run, CellStats, Event, FitMetric, PolicySpec, PolicyStats, RunResult,
    ServerPolicy, TraceStep,
};
pub use error::{Error, Result};
pub use fluid::{solve, FluidSolution, ObjectiveSpec, SolverConfig, Utility};
pub use harness::{emit_tables, reproduce_reference, ExperimentConfig, LabeledPolicy, StatsTable};
pub use rng::RngStream;
pub use scenario::{load_scenario, FrameworkSpec, ResourceVector, Scenario, ServerSpec, ValidationReport};
pub use state::AllocationState;
pub use stats::{stats, Summary};
