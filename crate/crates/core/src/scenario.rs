//! Problem instances: servers with capacities, frameworks with per-task
//! demands, priorities and placement constraints.
//!
//! Indices are positional and zero-based throughout the crate. The `id`
//! fields carry the user-facing labels from scenario files and are only used
//! for lookup and reporting.

use std::collections::HashSet;
use std::fmt;
use std::ops::{Deref, DerefMut};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Amount of each resource, indexed by resource position.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResourceVector(pub Vec<f64>);

impl ResourceVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ResourceVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl<const N: usize> From<[f64; N]> for ResourceVector {
    fn from(v: [f64; N]) -> Self {
        Self(v.to_vec())
    }
}

impl Deref for ResourceVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ResourceVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServerSpec {
    pub id: u32,
    pub capacity: ResourceVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameworkSpec {
    pub id: u32,
    /// Per-task demand.
    pub demand: ResourceVector,
    pub priority: f64,
    /// Placement indicator, one entry per server position.
    pub allowed: Vec<bool>,
}

impl FrameworkSpec {
    /// A framework allowed on every one of `num_servers` servers.
    pub fn new(id: u32, demand: impl Into<ResourceVector>, priority: f64, num_servers: usize) -> Self {
        Self {
            id,
            demand: demand.into(),
            priority,
            allowed: vec![true; num_servers],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub resource_names: Vec<String>,
    pub servers: Vec<ServerSpec>,
    pub frameworks: Vec<FrameworkSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationCode {
    NonpositiveCapacity,
    NegativeDemand,
    ZeroDemand,
    NonpositivePriority,
    NoAllowedServer,
    DimensionMismatch,
    DuplicateId,
    UnknownServerId,
    NonFinite,
}

impl ViolationCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ViolationCode::NonpositiveCapacity => "nonpositive capacity",
            ViolationCode::NegativeDemand => "negative demand",
            ViolationCode::ZeroDemand => "zero demand vector",
            ViolationCode::NonpositivePriority => "nonpositive priority",
            ViolationCode::NoAllowedServer => "framework has no allowed server",
            ViolationCode::DimensionMismatch => "dimension mismatch",
            ViolationCode::DuplicateId => "duplicate id",
            ViolationCode::UnknownServerId => "unknown server id",
            ViolationCode::NonFinite => "non-finite value",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    fn push(&mut self, code: ViolationCode, message: String) {
        self.violations.push(Violation { code, message });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  {}: {}", v.code, v.message)?;
        }
        Ok(())
    }
}

impl Scenario {
    pub fn num_frameworks(&self) -> usize {
        self.frameworks.len()
    }

    pub fn num_servers(&self) -> usize {
        self.servers.len()
    }

    pub fn num_resources(&self) -> usize {
        self.resource_names.len()
    }

    pub fn demand(&self, n: usize) -> &[f64] {
        &self.frameworks[n].demand
    }

    pub fn capacity(&self, i: usize) -> &[f64] {
        &self.servers[i].capacity
    }

    pub fn priority(&self, n: usize) -> f64 {
        self.frameworks[n].priority
    }

    pub fn allowed(&self, n: usize, i: usize) -> bool {
        self.frameworks[n].allowed[i]
    }

    /// Frameworks that may run on server `i`.
    pub fn frameworks_on(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_frameworks()).filter(move |&n| self.allowed(n, i))
    }

    pub fn framework_index(&self, id: u32) -> Option<usize> {
        self.frameworks.iter().position(|f| f.id == id)
    }

    pub fn server_index(&self, id: u32) -> Option<usize> {
        self.servers.iter().position(|s| s.id == id)
    }

    /// Per-task demand normalized by server capacity, `d[n][r] / c[i][r]`.
    pub fn normalized_demand(&self, n: usize, i: usize) -> ResourceVector {
        self.demand(n)
            .iter()
            .zip(self.capacity(i))
            .map(|(d, c)| d / c)
            .collect::<Vec<_>>()
            .into()
    }

    /// Capacity of each resource summed over all servers.
    pub fn pooled_capacity(&self) -> ResourceVector {
        let mut pooled = ResourceVector::zeros(self.num_resources());
        for s in &self.servers {
            for (p, c) in pooled.iter_mut().zip(s.capacity.iter()) {
                *p += c;
            }
        }
        pooled
    }

    /// True when every allowed (framework, server) pair has strictly positive
    /// normalized demand on every resource.
    pub fn all_normalized_demands_positive(&self) -> bool {
        (0..self.num_frameworks()).all(|n| {
            (0..self.num_servers())
                .filter(|&i| self.allowed(n, i))
                .all(|i| self.normalized_demand(n, i).iter().all(|&b| b > 0.0))
        })
    }

    /// Checks every structural invariant; violations are returned as data.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let nr = self.num_resources();

        let mut ids = HashSet::new();
        for s in &self.servers {
            if !ids.insert(s.id) {
                report.push(
                    ViolationCode::DuplicateId,
                    format!("server id {} appears more than once", s.id),
                );
            }
            if s.capacity.len() != nr {
                report.push(
                    ViolationCode::DimensionMismatch,
                    format!(
                        "server {} has {} capacities for {} resources",
                        s.id,
                        s.capacity.len(),
                        nr
                    ),
                );
            }
            for (r, &c) in s.capacity.iter().enumerate() {
                if !c.is_finite() {
                    report.push(ViolationCode::NonFinite, format!("server {} capacity[{r}] = {c}", s.id));
                } else if c <= 0.0 {
                    report.push(
                        ViolationCode::NonpositiveCapacity,
                        format!("server {} capacity[{r}] = {c}", s.id),
                    );
                }
            }
        }

        let mut ids = HashSet::new();
        for f in &self.frameworks {
            if !ids.insert(f.id) {
                report.push(
                    ViolationCode::DuplicateId,
                    format!("framework id {} appears more than once", f.id),
                );
            }
            if f.demand.len() != nr {
                report.push(
                    ViolationCode::DimensionMismatch,
                    format!("framework {} has {} demands for {} resources", f.id, f.demand.len(), nr),
                );
            }
            for (r, &d) in f.demand.iter().enumerate() {
                if !d.is_finite() {
                    report.push(
                        ViolationCode::NonFinite,
                        format!("framework {} demand[{r}] = {d}", f.id),
                    );
                } else if d < 0.0 {
                    report.push(
                        ViolationCode::NegativeDemand,
                        format!("framework {} demand[{r}] = {d}", f.id),
                    );
                }
            }
            if f.demand.iter().all(|&d| d <= 0.0) {
                report.push(ViolationCode::ZeroDemand, format!("framework {} demands nothing", f.id));
            }
            if !(f.priority.is_finite() && f.priority > 0.0) {
                report.push(
                    ViolationCode::NonpositivePriority,
                    format!("framework {} priority = {}", f.id, f.priority),
                );
            }
            if f.allowed.len() != self.num_servers() {
                report.push(
                    ViolationCode::DimensionMismatch,
                    format!(
                        "framework {} has {} placement flags for {} servers",
                        f.id,
                        f.allowed.len(),
                        self.num_servers()
                    ),
                );
            } else if !f.allowed.iter().any(|&a| a) {
                report.push(
                    ViolationCode::NoAllowedServer,
                    format!("framework {} has no allowed server", f.id),
                );
            }
        }
        report
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidScenario(report))
        }
    }

    /// Parses a scenario document without validating it.
    ///
    /// Unknown server ids in `allowed_servers` cannot be represented in the
    /// in-memory model, so they are reported as a validation error here.
    pub fn from_json_unchecked(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        file.into_scenario()
    }

    /// Parses and validates a scenario document.
    pub fn from_json(text: &str) -> Result<Self> {
        let scenario = Self::from_json_unchecked(text)?;
        scenario.ensure_valid()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ScenarioFile::from(self)).expect("scenario serializes")
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    Scenario::from_json(&text)
}

/// On-disk layout of a scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub resources: Vec<String>,
    pub servers: Vec<ServerEntry>,
    pub frameworks: Vec<FrameworkEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServerEntry {
    pub id: u32,
    pub capacity: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameworkEntry {
    pub id: u32,
    pub demand: Vec<f64>,
    #[serde(default = "default_priority")]
    pub priority: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed_servers: Option<Vec<u32>>,
}

fn default_priority() -> f64 {
    1.0
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<Scenario> {
        let servers: Vec<ServerSpec> = self
            .servers
            .into_iter()
            .map(|s| ServerSpec {
                id: s.id,
                capacity: s.capacity.into(),
            })
            .collect();

        let mut report = ValidationReport::default();
        let mut frameworks = Vec::with_capacity(self.frameworks.len());
        for f in self.frameworks {
            let allowed = match f.allowed_servers {
                None => vec![true; servers.len()],
                Some(ids) => {
                    let mut allowed = vec![false; servers.len()];
                    for id in ids {
                        match servers.iter().position(|s| s.id == id) {
                            Some(i) => allowed[i] = true,
                            None => report.push(
                                ViolationCode::UnknownServerId,
                                format!("framework {} lists unknown server id {id}", f.id),
                            ),
                        }
                    }
                    allowed
                }
            };
            frameworks.push(FrameworkSpec {
                id: f.id,
                demand: f.demand.into(),
                priority: f.priority,
                allowed,
            });
        }
        if !report.is_empty() {
            return Err(Error::InvalidScenario(report));
        }
        Ok(Scenario {
            resource_names: self.resources,
            servers,
            frameworks,
        })
    }
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        ScenarioFile {
            resources: s.resource_names.clone(),
            servers: s
                .servers
                .iter()
                .map(|srv| ServerEntry {
                    id: srv.id,
                    capacity: srv.capacity.0.clone(),
                })
                .collect(),
            frameworks: s
                .frameworks
                .iter()
                .map(|f| FrameworkEntry {
                    id: f.id,
                    demand: f.demand.0.clone(),
                    priority: f.priority,
                    allowed_servers: if f.allowed.iter().all(|&a| a) {
                        None
                    } else {
                        Some(
                            f.allowed
                                .iter()
                                .zip(&s.servers)
                                .filter(|(&a, _)| a)
                                .map(|(_, srv)| srv.id)
                                .collect(),
                        )
                    },
                })
                .collect(),
        }
    }
}
