//! Allocation matrix with incrementally maintained residual capacities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// Absolute slack used when comparing residuals against demands.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Task counts `x[n][i]` and per-server residual capacities.
///
/// Counts are integral in task mode and real-valued in fluid mode; both
/// share this type. The state does not own its scenario; every method that
/// needs demands or capacities takes it as an argument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationState {
    frameworks: usize,
    servers: usize,
    resources: usize,
    x: Vec<f64>,
    residual: Vec<f64>,
}

impl AllocationState {
    pub fn empty(scenario: &Scenario) -> Self {
        let residual = scenario
            .servers
            .iter()
            .flat_map(|s| s.capacity.iter().copied())
            .collect();
        Self {
            frameworks: scenario.num_frameworks(),
            servers: scenario.num_servers(),
            resources: scenario.num_resources(),
            x: vec![0.0; scenario.num_frameworks() * scenario.num_servers()],
            residual,
        }
    }

    /// Builds a state from a framework-major matrix, checking capacity and
    /// placement constraints.
    pub fn from_matrix(scenario: &Scenario, rows: &[Vec<f64>]) -> Result<Self> {
        let mut state = Self::empty(scenario);
        if rows.len() != state.frameworks || rows.iter().any(|r| r.len() != state.servers) {
            return Err(Error::OutOfRange(format!(
                "allocation matrix must be {} x {}",
                state.frameworks, state.servers
            )));
        }
        for (n, row) in rows.iter().enumerate() {
            for (i, &count) in row.iter().enumerate() {
                if count > 0.0 {
                    state.apply_increment(scenario, n, i, count)?;
                }
            }
        }
        Ok(state)
    }

    pub fn num_frameworks(&self) -> usize {
        self.frameworks
    }

    pub fn num_servers(&self) -> usize {
        self.servers
    }

    pub fn get(&self, n: usize, i: usize) -> f64 {
        self.x[n * self.servers + i]
    }

    /// Row of framework `n` across all servers.
    pub fn row(&self, n: usize) -> &[f64] {
        &self.x[n * self.servers..(n + 1) * self.servers]
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        (0..self.frameworks).map(|n| self.row(n).to_vec()).collect()
    }

    /// Framework total `x_n = sum_i x[n][i]`.
    pub fn total(&self, n: usize) -> f64 {
        self.row(n).iter().sum()
    }

    pub fn residual(&self, i: usize) -> &[f64] {
        &self.residual[i * self.resources..(i + 1) * self.resources]
    }

    /// Residuals rebuilt from the allocation matrix.
    pub fn recompute_residual(&self, scenario: &Scenario) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.residual.len());
        for i in 0..self.servers {
            for r in 0..self.resources {
                let used: f64 = (0..self.frameworks)
                    .map(|n| self.get(n, i) * scenario.demand(n)[r])
                    .sum();
                out.push(scenario.capacity(i)[r] - used);
            }
        }
        out
    }

    pub fn residual_flat(&self) -> &[f64] {
        &self.residual
    }

    pub fn is_empty(&self) -> bool {
        self.x.iter().all(|&v| v == 0.0)
    }

    /// True iff framework `n` may run on server `i` and one task fits there.
    pub fn fits(&self, scenario: &Scenario, n: usize, i: usize) -> bool {
        self.fits_count(scenario, n, i, 1.0)
    }

    pub fn fits_count(&self, scenario: &Scenario, n: usize, i: usize, count: f64) -> bool {
        scenario.allowed(n, i)
            && self
                .residual(i)
                .iter()
                .zip(scenario.demand(n))
                .all(|(&res, &d)| res + RESIDUAL_TOL >= count * d)
    }

    /// True if framework `n` fits on at least one server.
    pub fn fits_anywhere(&self, scenario: &Scenario, n: usize) -> bool {
        (0..self.servers).any(|i| self.fits(scenario, n, i))
    }

    /// Places `count` tasks of framework `n` on server `i`.
    ///
    /// The state is left untouched on error.
    pub fn apply_increment(&mut self, scenario: &Scenario, n: usize, i: usize, count: f64) -> Result<()> {
        self.check_indices(n, i)?;
        let reject = |reason| Error::RejectedIncrement {
            framework: n,
            server: i,
            count,
            reason,
        };
        if !(count.is_finite() && count > 0.0) {
            return Err(reject("count must be positive"));
        }
        if !scenario.allowed(n, i) {
            return Err(reject("framework is not allowed on this server"));
        }
        if !self.fits_count(scenario, n, i, count) {
            return Err(reject("would overbook a resource"));
        }
        self.x[n * self.servers + i] += count;
        let demand = scenario.demand(n);
        let base = i * self.resources;
        for (res, d) in self.residual[base..base + self.resources].iter_mut().zip(demand) {
            *res -= count * d;
        }
        Ok(())
    }

    /// Removes every task of framework `n`, restoring residual capacity.
    pub fn release_framework(&mut self, scenario: &Scenario, n: usize) {
        let demand = scenario.demand(n).to_vec();
        for i in 0..self.servers {
            let count = std::mem::take(&mut self.x[n * self.servers + i]);
            if count != 0.0 {
                let base = i * self.resources;
                for (r, d) in demand.iter().enumerate() {
                    self.residual[base + r] += count * d;
                }
            }
        }
    }

    /// Appends a framework row with no allocation.
    pub(crate) fn push_framework(&mut self) {
        self.x.extend(std::iter::repeat_n(0.0, self.servers));
        self.frameworks += 1;
    }

    /// Drops the (already released) row of framework `n`.
    pub(crate) fn remove_framework(&mut self, n: usize) {
        self.x.drain(n * self.servers..(n + 1) * self.servers);
        self.frameworks -= 1;
    }

    /// Utilization `sum_n x[n][i] * B[n][i][r]` of each resource on server `i`.
    pub fn utilization(&self, scenario: &Scenario, i: usize) -> Vec<f64> {
        (0..self.resources)
            .map(|r| {
                (0..self.frameworks)
                    .map(|n| self.get(n, i) * scenario.demand(n)[r] / scenario.capacity(i)[r])
                    .sum()
            })
            .collect()
    }

    /// Resources of server `i` whose utilization is at least `1 - tol`.
    pub fn fully_booked(&self, scenario: &Scenario, i: usize, tol: f64) -> Vec<usize> {
        self.utilization(scenario, i)
            .into_iter()
            .enumerate()
            .filter(|&(_, u)| u >= 1.0 - tol)
            .map(|(r, _)| r)
            .collect()
    }

    /// Weighted number of scheduled tasks, `sum_n phi_n x_n`.
    pub fn efficiency(&self, scenario: &Scenario) -> f64 {
        (0..self.frameworks).map(|n| scenario.priority(n) * self.total(n)).sum()
    }

    /// Unused capacity per (server, resource), server-major.
    pub fn unused(&self) -> Vec<f64> {
        self.residual
            .iter()
            .map(|&v| if v.abs() < RESIDUAL_TOL { 0.0 } else { v })
            .collect()
    }

    fn check_indices(&self, n: usize, i: usize) -> Result<()> {
        if n >= self.frameworks || i >= self.servers {
            return Err(Error::OutOfRange(format!("(framework {n}, server {i})")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::illustrative;

    fn psdsf_final() -> (Scenario, AllocationState) {
        let s = illustrative();
        let st = AllocationState::from_matrix(&s, &[vec![19.0, 0.0], vec![2.0, 20.0]]).unwrap();
        (s, st)
    }

    #[test]
    fn empty_state_fits() {
        let s = illustrative();
        assert!(AllocationState::empty(&s).fits(&s, 0, 0));
    }

    #[test]
    fn exhausted_server_does_not_fit() {
        let s = illustrative();
        let st = AllocationState::from_matrix(&s, &[vec![19.0, 0.0], vec![2.0, 0.0]]).unwrap();
        assert_eq!(st.residual(0), &[3.0, 1.0]);
        assert!(!st.fits(&s, 0, 0));
    }

    #[test]
    fn placement_constraint_blocks_fit() {
        let mut s = illustrative();
        s.frameworks[0].allowed[1] = false;
        assert!(!AllocationState::empty(&s).fits(&s, 0, 1));
    }

    #[test]
    fn increment_updates_residual() {
        let s = illustrative();
        let mut st = AllocationState::empty(&s);
        st.apply_increment(&s, 0, 0, 19.0).unwrap();
        assert_eq!(st.residual(0), &[5.0, 11.0]);
        assert_eq!(st.get(0, 0), 19.0);
    }

    #[test]
    fn overbooking_is_rejected_without_mutation() {
        let s = illustrative();
        let mut st = AllocationState::empty(&s);
        let before = st.clone();
        let err = st.apply_increment(&s, 0, 0, 21.0).unwrap_err();
        assert!(matches!(
            err,
            Error::RejectedIncrement {
                reason: "would overbook a resource",
                ..
            }
        ));
        assert_eq!(st, before);
    }

    #[test]
    fn non_positive_and_disallowed_increments_are_rejected() {
        let mut s = illustrative();
        let mut st = AllocationState::empty(&s);
        assert!(st.apply_increment(&s, 0, 0, 0.0).is_err());
        assert!(st.apply_increment(&s, 0, 0, -1.0).is_err());
        s.frameworks[1].allowed[0] = false;
        assert!(st.apply_increment(&s, 1, 0, 1.0).is_err());
        assert!(st.apply_increment(&s, 5, 0, 1.0).is_err());
        assert!(st.is_empty());
    }

    #[test]
    fn fully_booked_resources() {
        let (s, st) = psdsf_final();
        assert_eq!(st.fully_booked(&s, 1, 1e-9), vec![1]);
        let empty = AllocationState::empty(&s);
        assert!(empty.fully_booked(&s, 0, 1e-9).is_empty());
        assert!(empty.fully_booked(&s, 1, 1e-9).is_empty());
    }

    #[test]
    fn efficiency_matches_table_totals() {
        let (s, st) = psdsf_final();
        assert_eq!(st.efficiency(&s), 41.0);
        let r = AllocationState::from_matrix(&s, &[vec![19.0, 2.0], vec![2.0, 19.0]]).unwrap();
        assert_eq!(r.efficiency(&s), 42.0);
        assert_eq!(r.unused(), vec![3.0, 1.0, 1.0, 3.0]);
        assert_eq!(AllocationState::empty(&s).efficiency(&s), 0.0);
    }

    #[test]
    fn release_restores_residuals() {
        let (s, mut st) = psdsf_final();
        st.release_framework(&s, 1);
        assert_eq!(st.residual(0), &[5.0, 11.0]);
        assert_eq!(st.residual(1), &[30.0, 100.0]);
    }
}
