//! Integer progressive filling.
//!
//! Each step grants `epsilon` tasks (one by default) to the framework with
//! the smallest fairness score among those that still fit somewhere. How the
//! server is chosen depends on [`ServerPolicy`]:
//!
//! * `RoundRobin` with a framework-level criterion: pick the framework
//!   first, then draw a fresh random server order and take the first server
//!   that fits.
//! * `RoundRobin` with a server-specific criterion: servers are offered in
//!   rounds, each round a new random permutation in which every server is
//!   offered once; the criterion picks the framework for the offered server.
//! * `BestFit`: pick the framework first, then the fitting server whose
//!   residual capacity best matches the demand.
//! * `JointMin`: pick the (framework, server) pair with the smallest
//!   server-specific score.
//!
//! Ties go to the lowest framework index, then the lowest server index.
//! Nothing is ever revoked.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::Criterion;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scenario::{FrameworkSpec, Scenario};
use crate::state::AllocationState;
use crate::stats::mean_std;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitMetric {
    /// L1 distance between the demand and residual shapes, each normalized
    /// by pooled capacity and then by its largest component.
    Shape,
    /// Capacity-normalized squared leftover after placing the task.
    Leftover,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ServerPolicy {
    RoundRobin,
    BestFit(FitMetric),
    JointMin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub criterion: Criterion,
    pub server_policy: ServerPolicy,
    pub epsilon: f64,
    pub seed: u64,
}

impl PolicySpec {
    pub fn new(criterion: Criterion, server_policy: ServerPolicy) -> Self {
        Self {
            criterion,
            server_policy,
            epsilon: 1.0,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Parses a policy label.
    ///
    /// Accepted forms are the scheduler names `DRF`, `TSF`, `RRR-PS-DSF`,
    /// `RRR-rPS-DSF`, `BF-DRF`, `PS-DSF`, `rPS-DSF` (case-insensitive) and
    /// `<criterion>:<server-policy>` with server policy one of `rrr`,
    /// `best-fit`, `best-fit-leftover`, `joint`. A bare criterion name uses
    /// `joint` for server-specific criteria and `rrr` otherwise.
    pub fn parse(label: &str) -> Result<Self> {
        use Criterion::*;
        use ServerPolicy::*;
        let named = match label.to_ascii_lowercase().as_str() {
            "drf" => Some((Drf, RoundRobin)),
            "tsf" => Some((Tsf, RoundRobin)),
            "rrr-ps-dsf" => Some((PsdsfServer, RoundRobin)),
            "rrr-rps-dsf" => Some((Rpsdsf, RoundRobin)),
            "bf-drf" => Some((Drf, BestFit(FitMetric::Shape))),
            "ps-dsf" => Some((PsdsfServer, JointMin)),
            "rps-dsf" => Some((Rpsdsf, JointMin)),
            _ => None,
        };
        if let Some((c, p)) = named {
            return Ok(Self::new(c, p));
        }
        let (crit, server) = match label.split_once(':') {
            Some((c, s)) => (c, Some(s)),
            None => (label, None),
        };
        let criterion: Criterion = crit.parse().map_err(|_| Error::UnknownPolicy(label.to_string()))?;
        let server_policy = match server.map(|s| s.to_ascii_lowercase()) {
            None if criterion.is_server_specific() => JointMin,
            None => RoundRobin,
            Some(s) => match s.as_str() {
                "rrr" => RoundRobin,
                "best-fit" | "bf" => BestFit(FitMetric::Shape),
                "best-fit-leftover" => BestFit(FitMetric::Leftover),
                "joint" | "joint-min" => JointMin,
                _ => return Err(Error::UnknownPolicy(label.to_string())),
            },
        };
        Ok(Self::new(criterion, server_policy))
    }

    /// Canonical `<criterion>:<server-policy>` label.
    pub fn label(&self) -> String {
        let server = match self.server_policy {
            ServerPolicy::RoundRobin => "rrr",
            ServerPolicy::BestFit(FitMetric::Shape) => "best-fit",
            ServerPolicy::BestFit(FitMetric::Leftover) => "best-fit-leftover",
            ServerPolicy::JointMin => "joint",
        };
        format!("{}:{}", self.criterion.name(), server)
    }

    /// Whether the outcome depends on the seed.
    pub fn is_stochastic(&self) -> bool {
        self.server_policy == ServerPolicy::RoundRobin
    }

    pub fn check(&self, scenario: &Scenario) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidPolicy(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.server_policy == ServerPolicy::JointMin && !self.criterion.is_server_specific() {
            return Err(Error::InvalidPolicy(format!(
                "joint selection needs a server-specific criterion, got `{}`",
                self.criterion
            )));
        }
        self.criterion.check(scenario)
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    pub framework: usize,
    pub server: usize,
    /// Score of the selected framework (or pair) when it was selected.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub final_state: AllocationState,
    pub trace: Vec<TraceStep>,
    pub total_efficiency: f64,
}

impl RunResult {
    /// Rebuilds the final state by replaying the trace on an empty cluster.
    pub fn replay(&self, scenario: &Scenario, epsilon: f64) -> Result<AllocationState> {
        let mut state = AllocationState::empty(scenario);
        for t in &self.trace {
            state.apply_increment(scenario, t.framework, t.server, epsilon)?;
        }
        Ok(state)
    }

    /// Trace as CSV: `step,framework_id,server_id,criterion_value`, values
    /// with 9 significant digits.
    pub fn trace_csv(&self, scenario: &Scenario) -> String {
        let mut out = String::from("step,framework_id,server_id,criterion_value\n");
        for t in &self.trace {
            out.push_str(&format!(
                "{},{},{},{}\n",
                t.step,
                scenario.frameworks[t.framework].id,
                scenario.servers[t.server].id,
                sig9(t.score)
            ));
        }
        out
    }
}

fn sig9(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{v:.8e}");
    let parsed: f64 = s.parse().expect("formatted float parses");
    format!("{parsed}")
}

/// Framework with the smallest score among `eligible`; ties go to the lowest
/// index.
pub fn select_framework(
    scenario: &Scenario,
    state: &AllocationState,
    criterion: &Criterion,
    eligible: &[usize],
) -> Option<usize> {
    argmin(
        eligible
            .iter()
            .map(|&n| (n, criterion.framework_score(scenario, state, n))),
    )
}

fn argmin<T: Copy>(items: impl Iterator<Item = (T, f64)>) -> Option<T> {
    let mut best: Option<(T, f64)> = None;
    for (item, v) in items {
        if v.is_nan() || v == f64::INFINITY {
            continue;
        }
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((item, v));
        }
    }
    best.map(|(item, _)| item)
}

/// Server-order state for randomized round robin.
#[derive(Debug, Clone)]
pub struct RoundRobin {
    rng: RngStream,
    order: Vec<usize>,
    next: usize,
}

impl RoundRobin {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: RngStream::new(seed),
            order: Vec::new(),
            next: 0,
        }
    }

    /// Next server offer; a new permutation is drawn once every server of
    /// the current round has been offered.
    pub fn next_offer(&mut self, servers: usize) -> usize {
        if self.next >= self.order.len() {
            self.order = self.rng.permutation(servers);
            self.next = 0;
        }
        let i = self.order[self.next];
        self.next += 1;
        i
    }

    /// Starts a new round and returns its order.
    pub fn fresh_round(&mut self, servers: usize) -> &[usize] {
        self.order = self.rng.permutation(servers);
        self.next = self.order.len();
        &self.order
    }
}

/// Best-fit distance of framework `n` to server `i`.
pub fn fit_distance(scenario: &Scenario, state: &AllocationState, n: usize, i: usize, metric: FitMetric) -> f64 {
    let demand = scenario.demand(n);
    let residual = state.residual(i);
    match metric {
        FitMetric::Leftover => residual
            .iter()
            .zip(demand)
            .zip(scenario.capacity(i))
            .map(|((res, d), c)| ((res - d) / c).powi(2))
            .sum(),
        FitMetric::Shape => {
            let pooled = scenario.pooled_capacity();
            let shape = |v: &[f64]| -> Option<Vec<f64>> {
                let scaled: Vec<f64> = v.iter().zip(pooled.iter()).map(|(x, c)| x.max(0.0) / c).collect();
                let top = scaled.iter().copied().fold(0.0, f64::max);
                (top > 0.0).then(|| scaled.into_iter().map(|x| x / top).collect())
            };
            match (shape(demand), shape(residual)) {
                (Some(a), Some(b)) => a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum(),
                _ => f64::INFINITY,
            }
        }
    }
}

/// Server for the next task of framework `n`, or `None` if it fits nowhere.
///
/// `JointMin` picks the fitting server minimizing `criterion`'s per-server
/// score.
pub fn select_server(
    scenario: &Scenario,
    state: &AllocationState,
    n: usize,
    policy: ServerPolicy,
    criterion: &Criterion,
    rr: &mut RoundRobin,
) -> Option<usize> {
    select_server_eps(scenario, state, n, policy, criterion, rr, 1.0)
}

fn select_server_eps(
    scenario: &Scenario,
    state: &AllocationState,
    n: usize,
    policy: ServerPolicy,
    criterion: &Criterion,
    rr: &mut RoundRobin,
    epsilon: f64,
) -> Option<usize> {
    let fits = |i: usize| state.fits_count(scenario, n, i, epsilon);
    match policy {
        ServerPolicy::RoundRobin => rr
            .fresh_round(scenario.num_servers())
            .iter()
            .copied()
            .find(|&i| fits(i)),
        ServerPolicy::BestFit(metric) => argmin(
            (0..scenario.num_servers())
                .filter(|&i| fits(i))
                .map(|i| (i, fit_distance(scenario, state, n, i, metric))),
        ),
        ServerPolicy::JointMin => argmin(
            (0..scenario.num_servers())
                .filter(|&i| fits(i))
                .map(|i| (i, criterion.server_score(scenario, state, n, i))),
        ),
    }
}

/// Stateful progressive-filling loop.
pub struct Filler<'a> {
    scenario: &'a Scenario,
    policy: &'a PolicySpec,
    state: AllocationState,
    rr: RoundRobin,
    trace: Vec<TraceStep>,
}

impl<'a> Filler<'a> {
    pub fn new(scenario: &'a Scenario, policy: &'a PolicySpec, state: AllocationState) -> Result<Self> {
        scenario.ensure_valid()?;
        policy.check(scenario)?;
        if state.num_frameworks() != scenario.num_frameworks() || state.num_servers() != scenario.num_servers() {
            return Err(Error::OutOfRange("state does not match scenario".into()));
        }
        Ok(Self {
            scenario,
            policy,
            state,
            rr: RoundRobin::new(policy.seed),
            trace: Vec::new(),
        })
    }

    fn fits(&self, n: usize, i: usize) -> bool {
        self.state.fits_count(self.scenario, n, i, self.policy.epsilon)
    }

    fn eligible(&self) -> Vec<usize> {
        (0..self.scenario.num_frameworks())
            .filter(|&n| (0..self.scenario.num_servers()).any(|i| self.fits(n, i)))
            .collect()
    }

    fn choose(&mut self) -> Option<(usize, usize, f64)> {
        let scenario = self.scenario;
        let criterion = &self.policy.criterion;
        let nf = scenario.num_frameworks();
        let ns = scenario.num_servers();
        match self.policy.server_policy {
            ServerPolicy::JointMin => {
                let pairs = (0..nf)
                    .flat_map(|n| (0..ns).map(move |j| (n, j)))
                    .filter(|&(n, j)| self.fits(n, j))
                    .map(|(n, j)| ((n, j), criterion.server_score(scenario, &self.state, n, j)));
                let (n, j) = argmin(pairs)?;
                Some((n, j, criterion.server_score(scenario, &self.state, n, j)))
            }
            ServerPolicy::RoundRobin if criterion.is_server_specific() => {
                let any_fit = (0..nf).any(|n| (0..ns).any(|i| self.fits(n, i)));
                if !any_fit {
                    return None;
                }
                loop {
                    let i = self.rr.next_offer(ns);
                    let candidates = (0..nf)
                        .filter(|&n| self.fits(n, i))
                        .map(|n| (n, criterion.server_score(scenario, &self.state, n, i)));
                    if let Some(n) = argmin(candidates) {
                        return Some((n, i, criterion.server_score(scenario, &self.state, n, i)));
                    }
                }
            }
            policy => {
                let eligible = self.eligible();
                let n = select_framework(scenario, &self.state, criterion, &eligible)?;
                let score = criterion.framework_score(scenario, &self.state, n);
                let i = select_server_eps(
                    scenario,
                    &self.state,
                    n,
                    policy,
                    criterion,
                    &mut self.rr,
                    self.policy.epsilon,
                )?;
                Some((n, i, score))
            }
        }
    }

    /// Places one increment; `None` once nothing fits anywhere.
    pub fn step(&mut self) -> Option<TraceStep> {
        let (n, i, score) = self.choose()?;
        self.state
            .apply_increment(self.scenario, n, i, self.policy.epsilon)
            .expect("selected placement fits");
        let t = TraceStep {
            step: self.trace.len(),
            framework: n,
            server: i,
            score,
        };
        self.trace.push(t);
        Some(t)
    }

    pub fn state(&self) -> &AllocationState {
        &self.state
    }

    pub fn finish(mut self) -> RunResult {
        while self.step().is_some() {}
        let total_efficiency = self.state.efficiency(self.scenario);
        RunResult {
            final_state: self.state,
            trace: self.trace,
            total_efficiency,
        }
    }
}

/// Fills an empty cluster until no task fits anywhere.
pub fn run(scenario: &Scenario, policy: &PolicySpec) -> Result<RunResult> {
    resume(scenario, AllocationState::empty(scenario), policy)
}

/// Continues filling from an existing state.
pub fn resume(scenario: &Scenario, state: AllocationState, policy: &PolicySpec) -> Result<RunResult> {
    Ok(Filler::new(scenario, policy, state)?.finish())
}

/// Framework churn.
#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Arrival(FrameworkSpec),
    /// Departure of the framework with this id.
    Departure(u32),
}

/// Applies a churn event without touching other frameworks' placements.
///
/// Returns the updated scenario and state; a departing framework releases
/// all of its tasks and its row is removed.
pub fn apply_event(scenario: &Scenario, state: &AllocationState, event: Event) -> Result<(Scenario, AllocationState)> {
    let mut scenario = scenario.clone();
    let mut state = state.clone();
    match event {
        Event::Arrival(spec) => {
            if scenario.framework_index(spec.id).is_some() {
                return Err(Error::InvalidEvent(format!("framework id {} already exists", spec.id)));
            }
            scenario.frameworks.push(spec);
            scenario.ensure_valid()?;
            state.push_framework();
        }
        Event::Departure(id) => {
            let n = scenario
                .framework_index(id)
                .ok_or_else(|| Error::InvalidEvent(format!("no framework with id {id}")))?;
            state.release_framework(&scenario, n);
            state.remove_framework(n);
            scenario.frameworks.remove(n);
        }
    }
    Ok((scenario, state))
}

/// Outcome of one Monte Carlo trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    /// Framework-major `x[n][i]`.
    pub allocation: Vec<f64>,
    /// Server-major unused capacity `[i][r]`.
    pub unused: Vec<f64>,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub mean: f64,
    pub sample_std: f64,
    pub count: usize,
}

/// Cross-trial aggregates for one policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyStats {
    pub frameworks: usize,
    pub servers: usize,
    pub resources: usize,
    pub outcomes: Vec<TrialOutcome>,
    pub allocation: Vec<CellStats>,
    pub unused: Vec<CellStats>,
    pub total: CellStats,
}

impl PolicyStats {
    pub fn from_outcomes(scenario: &Scenario, outcomes: Vec<TrialOutcome>) -> Self {
        let column = |f: &dyn Fn(&TrialOutcome) -> f64| {
            let samples: Vec<f64> = outcomes.iter().map(f).collect();
            let (mean, sample_std) = mean_std(&samples);
            CellStats {
                mean,
                sample_std,
                count: samples.len(),
            }
        };
        let cells = outcomes.first().map_or(0, |o| o.allocation.len());
        let unused_cells = outcomes.first().map_or(0, |o| o.unused.len());
        let allocation = (0..cells).map(|k| column(&|o| o.allocation[k])).collect();
        let unused = (0..unused_cells).map(|k| column(&|o| o.unused[k])).collect();
        let total = column(&|o| o.total);
        Self {
            frameworks: scenario.num_frameworks(),
            servers: scenario.num_servers(),
            resources: scenario.num_resources(),
            outcomes,
            allocation,
            unused,
            total,
        }
    }

    pub fn cell(&self, n: usize, i: usize) -> CellStats {
        self.allocation[n * self.servers + i]
    }

    pub fn unused_cell(&self, i: usize, r: usize) -> CellStats {
        self.unused[i * self.resources + r]
    }

    /// Per-trial samples of `x[n][i]`.
    pub fn cell_samples(&self, n: usize, i: usize) -> Vec<f64> {
        self.outcomes
            .iter()
            .map(|o| o.allocation[n * self.servers + i])
            .collect()
    }

    pub fn total_samples(&self) -> Vec<f64> {
        self.outcomes.iter().map(|o| o.total).collect()
    }
}

impl From<&RunResult> for TrialOutcome {
    fn from(r: &RunResult) -> Self {
        Self {
            allocation: r.final_state.matrix().concat(),
            unused: r.final_state.unused(),
            total: r.total_efficiency,
        }
    }
}

/// Runs `trials` independent fills; trial `t` uses seed `base_seed ^ t`.
/// Trials run in parallel and are aggregated in trial order.
pub fn monte_carlo(scenario: &Scenario, policy: &PolicySpec, trials: usize, base_seed: u64) -> Result<PolicyStats> {
    if trials < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: trials });
    }
    run_trials(scenario, policy, trials, base_seed)
}

pub(crate) fn run_trials(
    scenario: &Scenario,
    policy: &PolicySpec,
    trials: usize,
    base_seed: u64,
) -> Result<PolicyStats> {
    scenario.ensure_valid()?;
    policy.check(scenario)?;
    let outcomes = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let p = policy.clone().with_seed(base_seed ^ t);
            run(scenario, &p).map(|r| TrialOutcome::from(&r))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PolicyStats::from_outcomes(scenario, outcomes))
}
