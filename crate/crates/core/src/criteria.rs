//! Fairness scores. Progressive filling grants the next task to whoever has
//! the smallest score.
//!
//! All scores are computed from scratch on every call; instances are small.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::state::AllocationState;

/// Per (framework, server) weights `u[n][i]` of the generic linear criterion
/// `U_n = (1/phi_n) * sum_i u[n][i] * x[n][i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    rows: Vec<Vec<f64>>,
}

impl Weights {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        Self { rows }
    }

    pub fn unit(scenario: &Scenario) -> Self {
        Self::from_fn(scenario, |_, _| 1.0)
    }

    /// Multi-server DRF: dominant share against pooled capacity, the same on
    /// every server.
    pub fn drf(scenario: &Scenario) -> Self {
        let pooled = scenario.pooled_capacity();
        Self::from_fn(scenario, |n, _| {
            scenario
                .demand(n)
                .iter()
                .zip(pooled.iter())
                .map(|(d, c)| d / c)
                .fold(0.0, f64::max)
        })
    }

    /// Weights for which `U_n` equals the global PS-DSF score `K_n`.
    pub fn psdsf_global(scenario: &Scenario) -> Self {
        Self::from_fn(scenario, |n, _| psdsf_coefficient(scenario, n))
    }

    /// Per-server PS-DSF weights `u[n][i] = max_r d[n][r] / c[i][r]`.
    pub fn psdsf_per_server(scenario: &Scenario) -> Self {
        Self::from_fn(scenario, |n, i| max_normalized(scenario, n, i))
    }

    fn from_fn(scenario: &Scenario, f: impl Fn(usize, usize) -> f64) -> Self {
        let rows = (0..scenario.num_frameworks())
            .map(|n| (0..scenario.num_servers()).map(|i| f(n, i)).collect())
            .collect();
        Self { rows }
    }

    pub fn get(&self, n: usize, i: usize) -> f64 {
        self.rows[n][i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Shape must match the scenario and every allowed cell must be positive.
    pub fn check(&self, scenario: &Scenario) -> Result<()> {
        if self.rows.len() != scenario.num_frameworks() || self.rows.iter().any(|r| r.len() != scenario.num_servers()) {
            return Err(Error::InvalidPolicy(
                "weight matrix shape does not match scenario".into(),
            ));
        }
        for n in 0..scenario.num_frameworks() {
            for i in 0..scenario.num_servers() {
                let u = self.rows[n][i];
                if scenario.allowed(n, i) && !(u.is_finite() && u > 0.0) {
                    return Err(Error::InvalidPolicy(format!(
                        "weight u[{n}][{i}] = {u} must be positive"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Criterion {
    /// Linear criterion with explicit weights; `None` means unit weights.
    Generic(Option<Weights>),
    Drf,
    PsdsfGlobal,
    PsdsfServer,
    Rpsdsf,
    Tsf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub value: f64,
    pub framework: usize,
    pub server: Option<usize>,
}

impl Criterion {
    pub fn name(&self) -> &'static str {
        match self {
            Criterion::Generic(_) => "generic",
            Criterion::Drf => "drf",
            Criterion::PsdsfGlobal => "psdsf",
            Criterion::PsdsfServer => "psdsf-server",
            Criterion::Rpsdsf => "rpsdsf",
            Criterion::Tsf => "tsf",
        }
    }

    /// Criteria whose score depends on the server as well as the framework.
    pub fn is_server_specific(&self) -> bool {
        matches!(self, Criterion::PsdsfServer | Criterion::Rpsdsf)
    }

    pub fn check(&self, scenario: &Scenario) -> Result<()> {
        match self {
            Criterion::Generic(Some(w)) => w.check(scenario),
            _ => Ok(()),
        }
    }

    /// Score of framework `n` as a whole.
    ///
    /// Server-specific criteria reduce to their minimum over the servers where
    /// a task of `n` currently fits (`+inf` when there is none).
    pub fn framework_score(&self, scenario: &Scenario, state: &AllocationState, n: usize) -> f64 {
        match self {
            Criterion::Generic(w) => generic_value(scenario, state, w.as_ref(), n),
            Criterion::Drf => score_drf(scenario, state, n).value,
            Criterion::PsdsfGlobal => score_psdsf_global(scenario, state, n).value,
            Criterion::Tsf => score_tsf(scenario, state, n).value,
            Criterion::PsdsfServer | Criterion::Rpsdsf => (0..scenario.num_servers())
                .filter(|&j| state.fits(scenario, n, j))
                .map(|j| self.server_score(scenario, state, n, j))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Score of framework `n` for a task on server `j`. Framework-level
    /// criteria ignore `j`. Disallowed pairs score `+inf`.
    pub fn server_score(&self, scenario: &Scenario, state: &AllocationState, n: usize, j: usize) -> f64 {
        match self {
            Criterion::PsdsfServer => score_psdsf_server(scenario, state, n, j)
                .map(|s| s.value)
                .unwrap_or(f64::INFINITY),
            Criterion::Rpsdsf => score_rpsdsf(scenario, state, n, j)
                .map(|s| s.value)
                .unwrap_or(f64::INFINITY),
            _ => self.framework_score(scenario, state, n),
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "generic" => Criterion::Generic(None),
            "drf" => Criterion::Drf,
            "psdsf" | "ps-dsf" => Criterion::PsdsfGlobal,
            "psdsf-server" => Criterion::PsdsfServer,
            "rpsdsf" | "rps-dsf" => Criterion::Rpsdsf,
            "tsf" => Criterion::Tsf,
            _ => return Err(Error::UnknownPolicy(s.to_string())),
        })
    }
}

fn generic_value(scenario: &Scenario, state: &AllocationState, weights: Option<&Weights>, n: usize) -> f64 {
    let sum: f64 = (0..scenario.num_servers())
        .map(|i| weights.map_or(1.0, |w| w.get(n, i)) * state.get(n, i))
        .sum();
    sum / scenario.priority(n)
}

/// Generic linear score `U_n`.
pub fn score_generic(scenario: &Scenario, state: &AllocationState, weights: &Weights, n: usize) -> Score {
    Score {
        value: generic_value(scenario, state, Some(weights), n),
        framework: n,
        server: None,
    }
}

/// Multi-server DRF score `M_n`: dominant share against pooled capacity.
pub fn score_drf(scenario: &Scenario, state: &AllocationState, n: usize) -> Score {
    let pooled = scenario.pooled_capacity();
    let share = scenario
        .demand(n)
        .iter()
        .zip(pooled.iter())
        .map(|(d, c)| d / c)
        .fold(0.0, f64::max);
    Score {
        value: state.total(n) * share / scenario.priority(n),
        framework: n,
        server: None,
    }
}

fn max_normalized(scenario: &Scenario, n: usize, i: usize) -> f64 {
    scenario.normalized_demand(n, i).iter().copied().fold(0.0, f64::max)
}

fn psdsf_coefficient(scenario: &Scenario, n: usize) -> f64 {
    (0..scenario.num_servers())
        .filter(|&i| scenario.allowed(n, i))
        .map(|i| max_normalized(scenario, n, i))
        .sum()
}

/// Dominant resource of framework `n` on server `j`; ties go to the lowest
/// resource index.
pub fn dominant_index(scenario: &Scenario, n: usize, j: usize) -> Result<usize> {
    if !scenario.allowed(n, j) {
        return Err(Error::NotAllowed {
            framework: n,
            server: j,
        });
    }
    let b = scenario.normalized_demand(n, j);
    let mut best = 0;
    for r in 1..b.len() {
        if b[r] > b[best] {
            best = r;
        }
    }
    Ok(best)
}

/// Per-server PS-DSF score `K_{n,j}`, using the framework's total tasks.
pub fn score_psdsf_server(scenario: &Scenario, state: &AllocationState, n: usize, j: usize) -> Result<Score> {
    let rho = dominant_index(scenario, n, j)?;
    let b = scenario.demand(n)[rho] / scenario.capacity(j)[rho];
    Ok(Score {
        value: b * state.total(n) / scenario.priority(n),
        framework: n,
        server: Some(j),
    })
}

/// Global PS-DSF score `K_n`, the sum of `K_{n,j}` over allowed servers.
pub fn score_psdsf_global(scenario: &Scenario, state: &AllocationState, n: usize) -> Score {
    Score {
        value: state.total(n) * psdsf_coefficient(scenario, n) / scenario.priority(n),
        framework: n,
        server: None,
    }
}

/// Residual PS-DSF score: PS-DSF with current residual capacities in the
/// denominator. Returns `+inf` when a demanded resource of server `j` is
/// exhausted.
pub fn score_rpsdsf(scenario: &Scenario, state: &AllocationState, n: usize, j: usize) -> Result<Score> {
    if !scenario.allowed(n, j) {
        return Err(Error::NotAllowed {
            framework: n,
            server: j,
        });
    }
    let mut worst: f64 = 0.0;
    for (&d, &res) in scenario.demand(n).iter().zip(state.residual(j)) {
        if d > 0.0 {
            if res <= 0.0 {
                worst = f64::INFINITY;
                break;
            }
            worst = worst.max(d / res);
        }
    }
    let value = if worst.is_infinite() {
        f64::INFINITY
    } else {
        state.total(n) * worst / scenario.priority(n)
    };
    Ok(Score {
        value,
        framework: n,
        server: Some(j),
    })
}

/// Fluid number of tasks framework `n` could run if it had every allowed
/// server to itself. Resources it does not demand are ignored.
pub fn task_capacity(scenario: &Scenario, n: usize) -> f64 {
    let demand = scenario.demand(n);
    (0..scenario.num_servers())
        .filter(|&i| scenario.allowed(n, i))
        .map(|i| {
            demand
                .iter()
                .zip(scenario.capacity(i))
                .filter(|(&d, _)| d > 0.0)
                .map(|(d, c)| c / d)
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

/// Task share: allocated tasks over stand-alone task capacity, divided by
/// priority.
pub fn score_tsf(scenario: &Scenario, state: &AllocationState, n: usize) -> Score {
    Score {
        value: state.total(n) / (scenario.priority(n) * task_capacity(scenario, n)),
        framework: n,
        server: None,
    }
}
