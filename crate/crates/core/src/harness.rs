//! Experiment orchestration and table emission.
//!
//! Tables are flat CSV files (LF line endings, shortest round-trip decimals)
//! so that identical configurations produce byte-identical output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::{run_trials, CellStats, PolicySpec, PolicyStats};
use crate::error::{Error, Result};
use crate::scenario::{load_scenario, Scenario};

/// The illustrative two-server instance as a scenario document.
pub const S0_JSON: &str = include_str!("../data/s0.json");

/// Confidence-interval convention written to every manifest.
pub const CI_CONVENTION: &str = "mean -/+ 2 * sample_std / sqrt(trials)";

/// Policy rows of the reference experiment, in table order.
pub const REFERENCE_POLICIES: [&str; 6] = ["DRF", "TSF", "RRR-PS-DSF", "BF-DRF", "PS-DSF", "rPS-DSF"];

pub const DEFAULT_TRIALS: usize = 200;

pub fn s0() -> Scenario {
    Scenario::from_json(S0_JSON).expect("bundled scenario is valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPolicy {
    pub label: String,
    pub policy: PolicySpec,
}

impl LabeledPolicy {
    /// Parses `label` as a policy and keeps it as the row label.
    pub fn parse(label: &str) -> Result<Self> {
        Ok(Self {
            label: label.to_string(),
            policy: PolicySpec::parse(label)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: PathBuf,
    pub policies: Vec<LabeledPolicy>,
    /// Trials per stochastic policy; deterministic policies run once.
    pub trials: usize,
    pub base_seed: u64,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn check(&self) -> Result<()> {
        for (k, p) in self.policies.iter().enumerate() {
            if self.policies[..k].iter().any(|q| q.label == p.label) {
                return Err(Error::InvalidConfig(format!("duplicate policy label `{}`", p.label)));
            }
        }
        if self.trials < 2 && self.policies.iter().any(|p| p.policy.is_stochastic()) {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: self.trials,
            });
        }
        Ok(())
    }

    pub fn trials_for(&self, policy: &PolicySpec) -> usize {
        if policy.is_stochastic() {
            self.trials
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsRow {
    pub label: String,
    pub trials: usize,
    pub stats: PolicyStats,
}

/// Per-policy cell statistics for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsTable {
    pub framework_ids: Vec<u32>,
    pub server_ids: Vec<u32>,
    pub resource_names: Vec<String>,
    pub rows: Vec<StatsRow>,
}

impl StatsTable {
    pub fn row(&self, label: &str) -> Option<&StatsRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    fn allocation_header(&self) -> String {
        let mut h = String::from("scheduler");
        for n in &self.framework_ids {
            for i in &self.server_ids {
                write!(h, ",x_{n}_{i}").unwrap();
            }
        }
        h.push_str(",total\n");
        h
    }

    fn unused_header(&self) -> String {
        let mut h = String::from("scheduler");
        for i in &self.server_ids {
            for r in &self.resource_names {
                write!(h, ",u_{i}_{r}").unwrap();
            }
        }
        h.push('\n');
        h
    }

    fn render(
        &self,
        header: String,
        cells: impl Fn(&StatsRow) -> Vec<CellStats>,
        pick: fn(&CellStats) -> f64,
    ) -> String {
        let mut out = header;
        for row in &self.rows {
            out.push_str(&row.label);
            for c in cells(row) {
                write!(out, ",{}", pick(&c)).unwrap();
            }
            out.push('\n');
        }
        out
    }

    fn with_total(row: &StatsRow) -> Vec<CellStats> {
        let mut v = row.stats.allocation.clone();
        v.push(row.stats.total);
        v
    }

    pub fn allocations_mean_csv(&self) -> String {
        self.render(self.allocation_header(), Self::with_total, |c| c.mean)
    }

    pub fn allocations_std_csv(&self) -> String {
        self.render(self.allocation_header(), Self::with_total, |c| c.sample_std)
    }

    pub fn unused_mean_csv(&self) -> String {
        self.render(self.unused_header(), |r| r.stats.unused.clone(), |c| c.mean)
    }

    pub fn unused_std_csv(&self) -> String {
        self.render(self.unused_header(), |r| r.stats.unused.clone(), |c| c.sample_std)
    }
}

/// Runs every configured policy on an already loaded scenario.
pub fn run_experiment_on(scenario: &Scenario, config: &ExperimentConfig) -> Result<StatsTable> {
    config.check()?;
    scenario.ensure_valid()?;
    let rows = config
        .policies
        .iter()
        .map(|p| {
            let trials = config.trials_for(&p.policy);
            let stats = run_trials(scenario, &p.policy, trials, config.base_seed)?;
            Ok(StatsRow {
                label: p.label.clone(),
                trials,
                stats,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StatsTable {
        framework_ids: scenario.frameworks.iter().map(|f| f.id).collect(),
        server_ids: scenario.servers.iter().map(|s| s.id).collect(),
        resource_names: scenario.resource_names.clone(),
        rows,
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<StatsTable> {
    let scenario = load_scenario(&config.scenario)?;
    run_experiment_on(&scenario, config)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    scenario: String,
    base_seed: u64,
    rng: &'static str,
    trial_seed: &'static str,
    ci_convention: &'static str,
    std_convention: &'static str,
    policies: Vec<ManifestEntry<'a>>,
    files: [&'static str; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct ManifestEntry<'a> {
    label: &'a str,
    policy: String,
    trials: usize,
}

pub const OUTPUT_FILES: [&str; 4] = [
    "allocations-mean.csv",
    "allocations-std.csv",
    "unused-mean.csv",
    "unused-std.csv",
];

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes the four CSV tables and the run manifest into
/// `config.output_dir`. Returns the written paths.
pub fn emit_tables(config: &ExperimentConfig, table: &StatsTable) -> Result<Vec<PathBuf>> {
    let dir = &config.output_dir;
    fs::create_dir_all(dir)?;
    let contents = [
        table.allocations_mean_csv(),
        table.allocations_std_csv(),
        table.unused_mean_csv(),
        table.unused_std_csv(),
    ];
    let mut written = Vec::new();
    for (name, body) in OUTPUT_FILES.iter().zip(contents) {
        let path = dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        scenario: config.scenario.file_name().map_or_else(
            || config.scenario.display().to_string(),
            |f| f.to_string_lossy().into_owned(),
        ),
        base_seed: config.base_seed,
        rng: crate::rng::ALGORITHM,
        trial_seed: "base_seed XOR trial_index",
        ci_convention: CI_CONVENTION,
        std_convention: "sample standard deviation, n-1 denominator",
        policies: table
            .rows
            .iter()
            .zip(&config.policies)
            .map(|(row, p)| ManifestEntry {
                label: &row.label,
                policy: p.policy.label(),
                trials: row.trials,
            })
            .collect(),
        files: OUTPUT_FILES,
    };
    let path = dir.join(MANIFEST_FILE);
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    fs::write(&path, json)?;
    written.push(path);
    Ok(written)
}

/// Runs the reference experiment on the bundled illustrative instance and
/// writes its tables to `outdir` (the scenario is copied there as
/// `s0.json`).
pub fn reproduce_reference(outdir: &Path, seed: u64, trials: usize) -> Result<StatsTable> {
    fs::create_dir_all(outdir)?;
    let scenario_path = outdir.join("s0.json");
    fs::write(&scenario_path, S0_JSON)?;
    let config = ExperimentConfig {
        scenario: scenario_path,
        policies: REFERENCE_POLICIES
            .iter()
            .map(|l| LabeledPolicy::parse(l))
            .collect::<Result<_>>()?,
        trials,
        base_seed: seed,
        output_dir: outdir.to_path_buf(),
    };
    let table = run_experiment(&config)?;
    emit_tables(&config, &table)?;
    Ok(table)
}
