//! Verifiers for fluid and integer allocations.

use serde::Serialize;

use crate::criteria::Weights;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scenario::Scenario;

fn utilization(scenario: &Scenario, x: &[f64], i: usize, r: usize) -> f64 {
    let ns = scenario.num_servers();
    (0..scenario.num_frameworks())
        .map(|n| x[n * ns + i] * scenario.demand(n)[r] / scenario.capacity(i)[r])
        .sum()
}

fn booked(scenario: &Scenario, x: &[f64], i: usize, tol: f64) -> bool {
    (0..scenario.num_resources()).any(|r| utilization(scenario, x, i, r) >= 1.0 - tol)
}

/// Per server: whether some resource has utilization at least `1 - tol`.
pub fn check_full_booking(scenario: &Scenario, x: &[f64], tol: f64) -> Vec<bool> {
    (0..scenario.num_servers())
        .map(|i| booked(scenario, x, i, tol))
        .collect()
}

/// `U_n = (1/phi_n) sum_i u[n][i] x[n][i]` for every framework.
pub fn scores(scenario: &Scenario, x: &[f64], weights: &Weights) -> Vec<f64> {
    let ns = scenario.num_servers();
    (0..scenario.num_frameworks())
        .map(|n| (0..ns).map(|i| weights.get(n, i) * x[n * ns + i]).sum::<f64>() / scenario.priority(n))
        .collect()
}

/// Proportional-fairness gap `sum_n phi_n (x_n - x*_n) / (x*_n)^a`, where
/// `x_n` are the totals of `x`. Nonpositive for every feasible `x` when
/// `x_star_totals` solves the `(phi, a)` proportional program.
pub fn prop_gap(scenario: &Scenario, x: &[f64], x_star_totals: &[f64], a: f64) -> Result<f64> {
    let ns = scenario.num_servers();
    let mut gap = 0.0;
    for (n, &reference) in x_star_totals.iter().enumerate() {
        if reference.is_nan() || reference <= 0.0 {
            return Err(Error::ZeroReference { framework: n });
        }
        let total: f64 = x[n * ns..(n + 1) * ns].iter().sum();
        gap += scenario.priority(n) * (total - reference) / reference.powf(a);
    }
    Ok(gap)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UmmfReport {
    pub holds: bool,
    /// Violating `(l, m, i)`: `U_l > U_m`, both hold tasks on server `i`, and
    /// `i` has a fully booked resource.
    pub violations: Vec<(usize, usize, usize)>,
}

/// U-max-min fairness test.
pub fn check_ummf(scenario: &Scenario, x: &[f64], weights: &Weights, tol: f64) -> UmmfReport {
    let ns = scenario.num_servers();
    let nf = scenario.num_frameworks();
    let u = scores(scenario, x, weights);
    let mut violations = Vec::new();
    for i in 0..ns {
        if !booked(scenario, x, i, tol) {
            continue;
        }
        for l in 0..nf {
            for m in 0..nf {
                if u[l] > u[m] + tol && x[m * ns + i] > tol && x[l * ns + i] > tol {
                    violations.push((l, m, i));
                }
            }
        }
    }
    UmmfReport {
        holds: violations.is_empty(),
        violations,
    }
}

/// Sufficient condition for a unique U-max-min fair allocation: frameworks
/// that share any server have identical demands, allowed sets and weights.
pub fn unique_mmf_condition(scenario: &Scenario, weights: &Weights) -> bool {
    let nf = scenario.num_frameworks();
    let ns = scenario.num_servers();
    let share = |m: usize, l: usize| (0..ns).any(|j| scenario.allowed(m, j) && scenario.allowed(l, j));
    (0..nf).all(|m| {
        (m + 1..nf).all(|l| {
            !share(m, l)
                || (scenario.demand(m) == scenario.demand(l)
                    && scenario.frameworks[m].allowed == scenario.frameworks[l].allowed
                    && weights.rows()[m] == weights.rows()[l])
        })
    })
}

/// Random feasible fluid allocation: a positive direction over the allowed
/// cells, scaled to the polytope boundary, then by a uniform factor.
pub fn sample_feasible(scenario: &Scenario, rng: &mut RngStream) -> Vec<f64> {
    let nf = scenario.num_frameworks();
    let ns = scenario.num_servers();
    let mut x: Vec<f64> = (0..nf * ns)
        .map(|k| {
            if scenario.allowed(k / ns, k % ns) {
                rng.uniform()
            } else {
                0.0
            }
        })
        .collect();
    let peak = (0..ns)
        .flat_map(|i| (0..scenario.num_resources()).map(move |r| (i, r)))
        .map(|(i, r)| utilization(scenario, &x, i, r))
        .fold(0.0, f64::max);
    let scale = if peak > 0.0 { rng.uniform() / peak } else { 0.0 };
    x.iter_mut().for_each(|v| *v *= scale);
    x
}
