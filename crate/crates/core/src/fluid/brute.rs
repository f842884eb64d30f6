//! Exhaustive integer max-min oracle for tiny instances.

use std::cmp::Ordering;

use serde::Serialize;

use super::checks::scores;
use crate::criteria::Weights;
use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// Maximum number of feasible integer allocations visited.
pub const ENUMERATION_LIMIT: usize = 1_000_000;

const SCORE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BruteForceResult {
    /// Row-major task counts.
    pub x: Vec<f64>,
    /// Scores `U_n` sorted ascending.
    pub sorted_scores: Vec<f64>,
    pub visited: usize,
}

/// Lexicographic comparison of ascending score vectors with a small
/// tolerance per coordinate.
pub fn compare_sorted(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let scale = x.abs().max(y.abs()).max(1.0);
        if (x - y).abs() > SCORE_TOL * scale {
            return x.partial_cmp(y).unwrap_or(Ordering::Equal);
        }
    }
    a.len().cmp(&b.len())
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

struct Search<'a> {
    scenario: &'a Scenario,
    weights: &'a Weights,
    cells: Vec<(usize, usize)>,
    residual: Vec<Vec<f64>>,
    x: Vec<f64>,
    visited: usize,
    limit: usize,
    best: Option<(Vec<f64>, f64, Vec<f64>)>,
}

impl Search<'_> {
    fn max_fit(&self, n: usize, i: usize) -> usize {
        self.scenario
            .demand(n)
            .iter()
            .zip(&self.residual[i])
            .filter(|(d, _)| **d > 0.0)
            .map(|(d, res)| ((res + 1e-9) / d).floor().max(0.0) as usize)
            .min()
            .unwrap_or(0)
    }

    fn visit(&mut self) -> Result<()> {
        self.visited += 1;
        if self.visited > self.limit {
            return Err(Error::EnumerationLimit { limit: self.limit });
        }
        let key = sorted(scores(self.scenario, &self.x, self.weights));
        let total: f64 = self.x.iter().sum();
        let better = match &self.best {
            None => true,
            Some((bk, bt, bx)) => match compare_sorted(&key, bk) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal if total != *bt => total > *bt,
                Ordering::Equal => self.x.iter().partial_cmp(bx.iter()) == Some(Ordering::Less),
            },
        };
        if better {
            self.best = Some((key, total, self.x.clone()));
        }
        Ok(())
    }

    fn descend(&mut self, depth: usize) -> Result<()> {
        let Some(&(n, i)) = self.cells.get(depth) else {
            return self.visit();
        };
        let ns = self.scenario.num_servers();
        let top = self.max_fit(n, i);
        for k in 0..=top {
            self.x[n * ns + i] = k as f64;
            for (res, d) in self.residual[i].iter_mut().zip(self.scenario.demand(n)) {
                *res -= k as f64 * d;
            }
            let r = self.descend(depth + 1);
            for (res, d) in self.residual[i].iter_mut().zip(self.scenario.demand(n)) {
                *res += k as f64 * d;
            }
            r?;
        }
        self.x[n * ns + i] = 0.0;
        Ok(())
    }
}

/// Lexicographic max-min integer allocation of the sorted scores `U_n`.
/// Ties go to the larger task total, then the lexicographically smallest
/// row-major `x`.
pub fn brute_force_mmf(scenario: &Scenario, weights: &Weights) -> Result<BruteForceResult> {
    brute_force_mmf_with_limit(scenario, weights, ENUMERATION_LIMIT)
}

pub fn brute_force_mmf_with_limit(scenario: &Scenario, weights: &Weights, limit: usize) -> Result<BruteForceResult> {
    scenario.ensure_valid()?;
    weights.check(scenario)?;
    let nf = scenario.num_frameworks();
    let ns = scenario.num_servers();
    let mut search = Search {
        scenario,
        weights,
        cells: (0..nf)
            .flat_map(|n| (0..ns).map(move |i| (n, i)))
            .filter(|&(n, i)| scenario.allowed(n, i))
            .collect(),
        residual: (0..ns).map(|i| scenario.capacity(i).to_vec()).collect(),
        x: vec![0.0; nf * ns],
        visited: 0,
        limit,
        best: None,
    };
    search.descend(0)?;
    let (sorted_scores, _, x) = search.best.expect("the empty allocation is always feasible");
    Ok(BruteForceResult {
        x,
        sorted_scores,
        visited: search.visited,
    })
}
