//! Fluid (real-valued) allocations.
//!
//! [`solve`] maximizes a separable concave objective over the polytope
//! `sum_n x[n][i] * B[n][i][r] <= 1`, `x >= 0` (disallowed cells fixed at
//! zero) with a primal-dual interior-point method. The verifiers in
//! [`checks`] and the integer oracle in [`brute`] operate on flat row-major
//! allocations `x[n * servers + i]`.

pub mod brute;
pub mod checks;
mod ipm;

use serde::{Deserialize, Serialize};

use crate::criteria::Weights;
use crate::error::{Error, Result};
use crate::scenario::Scenario;

pub use brute::{brute_force_mmf, BruteForceResult, ENUMERATION_LIMIT};
pub use checks::{check_full_booking, check_ummf, prop_gap, sample_feasible, scores, unique_mmf_condition, UmmfReport};

/// Feasibility tolerance on `sum_n x B <= 1`.
pub const FEASIBILITY_TOL: f64 = 1e-8;
/// KKT residual every returned solution satisfies.
pub const KKT_TOL: f64 = 1e-6;
/// Totals below this make a log objective unbounded.
pub const LOG_FLOOR: f64 = 1e-12;

/// Strictly concave increasing `g` with `g(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Utility {
    /// `log(1 + X)`.
    Log1p,
    /// `((1 + X)^(1 - alpha) - 1) / (1 - alpha)`; `alpha = 1` is `Log1p`.
    /// Large `alpha` approaches max-min fairness.
    Alpha(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ObjectiveSpec {
    /// Maximize `sum_n phi_n g(U_n)` with `U_n = (1/phi_n) sum_i u[n][i] x[n][i]`.
    MaxMin { utility: Utility, weights: Weights },
    /// Maximize `sum_n phi_n g_a(x_n)` with `g_a'(X) = X^-a`.
    Proportional { a: f64 },
    /// Maximize `sum_n phi_n log U_n`.
    CriterionLog { weights: Weights },
}

impl ObjectiveSpec {
    pub fn max_min(weights: Weights) -> Self {
        Self::MaxMin {
            utility: Utility::Log1p,
            weights,
        }
    }

    pub fn proportional(a: f64) -> Self {
        Self::Proportional { a }
    }

    pub fn criterion_log(weights: Weights) -> Self {
        Self::CriterionLog { weights }
    }

    pub fn check(&self, scenario: &Scenario) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        match self {
            ObjectiveSpec::Proportional { a } if !positive(*a) => {
                Err(Error::InvalidObjective(format!("a must be positive, got {a}")))
            }
            ObjectiveSpec::MaxMin {
                utility: Utility::Alpha(alpha),
                ..
            } if !positive(*alpha) => Err(Error::InvalidObjective(format!("alpha must be positive, got {alpha}"))),
            ObjectiveSpec::MaxMin { weights, .. } | ObjectiveSpec::CriterionLog { weights } => weights
                .check(scenario)
                .map_err(|e| Error::InvalidObjective(e.to_string())),
            _ => Ok(()),
        }
    }

    /// Objectives that diverge to `-inf` when some `x_n` reaches zero.
    fn is_log_like(&self) -> bool {
        match self {
            ObjectiveSpec::Proportional { a } => *a >= 1.0,
            ObjectiveSpec::CriterionLog { .. } => true,
            ObjectiveSpec::MaxMin { .. } => false,
        }
    }
}

/// Starting point of the interior-point iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StartPoint {
    /// Equal value in every allowed cell, halfway to the boundary.
    Uniform,
    /// Random positive direction, halfway to the boundary.
    Random(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Residual at which iteration stops early.
    pub target_residual: f64,
    pub start: StartPoint,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 300,
            target_residual: 1e-11,
            start: StartPoint::Uniform,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluidSolution {
    pub frameworks: usize,
    pub servers: usize,
    pub resources: usize,
    /// Row-major `x[n * servers + i]`.
    pub x_star: Vec<f64>,
    /// `x_n = sum_i x[n][i]`.
    pub totals: Vec<f64>,
    pub objective_value: f64,
    /// Server-major `lambda[i * resources + r]`.
    pub lambda: Vec<f64>,
    /// Row-major `nu[n * servers + i]`; zero on disallowed cells.
    pub nu: Vec<f64>,
    pub stationarity: f64,
    pub complementarity: f64,
    pub primal_infeasibility: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
}

impl FluidSolution {
    pub fn x(&self, n: usize, i: usize) -> f64 {
        self.x_star[n * self.servers + i]
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.x_star.chunks(self.servers).map(<[f64]>::to_vec).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }
}

/// Solves with the default configuration.
pub fn solve(scenario: &Scenario, objective: &ObjectiveSpec) -> Result<FluidSolution> {
    solve_with(scenario, objective, &SolverConfig::default())
}

pub fn solve_with(scenario: &Scenario, objective: &ObjectiveSpec, config: &SolverConfig) -> Result<FluidSolution> {
    scenario.ensure_valid()?;
    objective.check(scenario)?;
    let solution = ipm::solve(scenario, objective, config)?;
    if objective.is_log_like() {
        if let Some(n) = solution.totals.iter().position(|&x| x < LOG_FLOOR) {
            return Err(Error::InfeasibleForLog { framework: n });
        }
    }
    Ok(solution)
}

/// Whether two sets of totals agree within `tol` (solutions are unique in
/// their totals, not necessarily per cell).
pub fn totals_agree(a: &FluidSolution, b: &FluidSolution, tol: f64) -> bool {
    a.totals.len() == b.totals.len() && a.totals.iter().zip(&b.totals).all(|(x, y)| (x - y).abs() <= tol)
}
