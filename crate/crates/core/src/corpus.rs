//! Named instances and a random scenario generator.

use crate::rng::RngStream;
use crate::scenario::{FrameworkSpec, Scenario, ServerSpec};

/// Two frameworks with mirrored demands `(5,1)` and `(1,5)` on two servers
/// with mirrored capacities `(100,30)` and `(30,100)`, equal priorities and
/// no placement constraints.
pub fn illustrative() -> Scenario {
    scaled_illustrative([100.0, 30.0])
}

/// The illustrative instance with server capacities `(hi,lo)` and `(lo,hi)`.
pub fn scaled_illustrative(capacity: [f64; 2]) -> Scenario {
    let [hi, lo] = capacity;
    Scenario {
        resource_names: vec!["r1".into(), "r2".into()],
        servers: vec![
            ServerSpec {
                id: 1,
                capacity: [hi, lo].into(),
            },
            ServerSpec {
                id: 2,
                capacity: [lo, hi].into(),
            },
        ],
        frameworks: vec![
            FrameworkSpec::new(1, [5.0, 1.0], 1.0, 2),
            FrameworkSpec::new(2, [1.0, 5.0], 1.0, 2),
        ],
    }
}

/// Single server `(9,18)` shared by demands `(1,4)` and `(3,1)`.
pub fn classic_single_server() -> Scenario {
    Scenario {
        resource_names: vec!["cpu".into(), "mem".into()],
        servers: vec![ServerSpec {
            id: 1,
            capacity: [9.0, 18.0].into(),
        }],
        frameworks: vec![
            FrameworkSpec::new(1, [1.0, 4.0], 1.0, 1),
            FrameworkSpec::new(2, [3.0, 1.0], 1.0, 1),
        ],
    }
}

#[derive(Debug, Clone)]
pub struct RandomScenarioParams {
    pub frameworks: (usize, usize),
    pub servers: (usize, usize),
    pub resources: (usize, usize),
    pub demand: (f64, f64),
    pub capacity: (f64, f64),
    pub priority: (f64, f64),
    /// Probability that a (framework, server) pair is disallowed.
    pub exclusion: f64,
    /// Round demands and capacities to integers.
    pub integral: bool,
}

impl Default for RandomScenarioParams {
    fn default() -> Self {
        Self {
            frameworks: (2, 4),
            servers: (2, 3),
            resources: (2, 3),
            demand: (1.0, 10.0),
            capacity: (20.0, 100.0),
            priority: (0.5, 2.0),
            exclusion: 0.0,
            integral: false,
        }
    }
}

fn pick(rng: &mut RngStream, (lo, hi): (usize, usize)) -> usize {
    lo + rng.below((hi - lo + 1) as u64) as usize
}

/// Random valid scenario with strictly positive demands, so every normalized
/// demand is positive. Every framework keeps at least one allowed server and
/// every server keeps at least one framework.
pub fn random_scenario(rng: &mut RngStream, params: &RandomScenarioParams) -> Scenario {
    let nf = pick(rng, params.frameworks);
    let ns = pick(rng, params.servers);
    let nr = pick(rng, params.resources);
    let draw = |rng: &mut RngStream, (lo, hi): (f64, f64)| {
        let v = rng.uniform_in(lo, hi);
        if params.integral {
            v.round().max(1.0)
        } else {
            v
        }
    };
    let servers = (0..ns)
        .map(|i| ServerSpec {
            id: i as u32 + 1,
            capacity: (0..nr).map(|_| draw(rng, params.capacity)).collect::<Vec<_>>().into(),
        })
        .collect();
    let mut frameworks: Vec<FrameworkSpec> = (0..nf)
        .map(|n| {
            let demand: Vec<f64> = (0..nr).map(|_| draw(rng, params.demand)).collect();
            let priority = rng.uniform_in(params.priority.0, params.priority.1);
            let mut f = FrameworkSpec::new(n as u32 + 1, demand, priority, ns);
            for a in f.allowed.iter_mut() {
                *a = rng.uniform() >= params.exclusion;
            }
            if !f.allowed.iter().any(|&a| a) {
                let i = rng.below(ns as u64) as usize;
                f.allowed[i] = true;
            }
            f
        })
        .collect();
    for i in 0..ns {
        if !frameworks.iter().any(|f| f.allowed[i]) {
            let n = rng.below(nf as u64) as usize;
            frameworks[n].allowed[i] = true;
        }
    }
    Scenario {
        resource_names: (0..nr).map(|r| format!("r{}", r + 1)).collect(),
        servers,
        frameworks,
    }
}

/// The illustrative instance, the classic single-server instance and
/// `random` scenarios with strictly positive normalized demands on every
/// (framework, server) pair.
pub fn property_corpus(seed: u64, random: usize) -> Vec<Scenario> {
    let mut rng = RngStream::new(seed);
    let params = RandomScenarioParams::default();
    let mut corpus = vec![illustrative(), classic_single_server()];
    corpus.extend((0..random).map(|_| random_scenario(&mut rng, &params)));
    corpus
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_scenarios_are_valid() {
        let params = RandomScenarioParams {
            exclusion: 0.4,
            ..Default::default()
        };
        for seed in 0..200 {
            let s = random_scenario(&mut RngStream::new(seed), &params);
            assert!(s.validate().is_empty(), "seed {seed}: {}", s.validate());
            assert!(s.all_normalized_demands_positive());
            for i in 0..s.num_servers() {
                assert!(s.frameworks_on(i).next().is_some());
            }
        }
    }

    #[test]
    fn property_corpus_has_positive_b_everywhere() {
        let corpus = property_corpus(5, 25);
        assert_eq!(corpus.len(), 27);
        for s in &corpus {
            assert!(s.all_normalized_demands_positive());
            assert!(s.frameworks.iter().all(|f| f.allowed.iter().all(|&a| a)));
        }
    }

    #[test]
    fn named_instances_are_valid() {
        assert!(illustrative().validate().is_empty());
        assert!(classic_single_server().validate().is_empty());
    }
}
