//! Scenario files: network, populations, cost model, solver overrides.
//!
//! A scenario is a JSON document:
//!
//! ```json
//! {
//!   "name": "demo",
//!   "vertices": [1, 2, 3, 4],
//!   "edges": [[1, 2], [1, 3], [2, 4, 1.5], [3, 4, 2.0]],
//!   "exits": [4],
//!   "populations": [
//!     {"name": "cars", "entrances": {"1": 100}, "excluded_edges": [[1, 3]]}
//!   ],
//!   "cost": {"type": "weighted", "params": {"mix": [0.5, 0.5]}},
//!   "solver": {"step": 0.01, "rhs_tol": 1e-6},
//!   "output": {"precision": 0}
//! }
//! ```
//!
//! Vertex ids may be numbers or strings; entrance keys are the id as text.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use wardrop_core::costs::{
    EdgeCongestion, EmissionClass, EmissionCost, EmissionParams, LinearSumCost, WeightedCongestionCost, DEFAULT_ALPHA,
    DEFAULT_BETA, DEFAULT_CAPACITY, DEFAULT_FREE_FLOW_SPEED_KMH, TABLE2_A, TABLE2_B, TABLE2_PRICES,
};
use wardrop_core::equilibrium::DEFAULT_GAP_TOL;
use wardrop_core::{CostError, CostModel, NetworkError, NetworkSpec, PopulationSpec, PopulationSystem, SolverConfig};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{source_name}: {message} (at `{path}`, line {line} column {column})")]
    Parse {
        source_name: String,
        path: String,
        message: String,
        line: usize,
        column: usize,
    },
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("unknown preset `{0}` (available: scenario1, scenario2, scenario3)")]
    UnknownPreset(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VertexId {
    Number(u64),
    Name(String),
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexId::Number(n) => write!(f, "{n}"),
            VertexId::Name(s) => f.write_str(s),
        }
    }
}

/// `[tail, head]` or `[tail, head, length_km]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EdgeEntry {
    Measured(VertexId, VertexId, f64),
    Plain(VertexId, VertexId),
}

impl EdgeEntry {
    pub fn endpoints(&self) -> (&VertexId, &VertexId) {
        match self {
            EdgeEntry::Measured(t, h, _) | EdgeEntry::Plain(t, h) => (t, h),
        }
    }

    pub fn length(&self) -> Option<f64> {
        match self {
            EdgeEntry::Measured(_, _, s) => Some(*s),
            EdgeEntry::Plain(..) => None,
        }
    }
}

/// An edge named by its endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRef(pub VertexId, pub VertexId);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationEntry {
    pub name: String,
    /// Vertex id (as text) → inflow rate.
    pub entrances: BTreeMap<String, f64>,
    /// Edges this population may use; all edges if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed_edges: Option<Vec<EdgeRef>>,
    /// Edges this population may not use.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excluded_edges: Option<Vec<EdgeRef>>,
    /// Weight in the shared congestion term of the weighted cost (default 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    /// Multiplier on the emission coefficients (default 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emission_factor: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedParams {
    /// (shared, own) coefficients.
    pub mix: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmissionTable {
    #[default]
    PaperTable2,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmissionSpec {
    #[serde(default)]
    pub table: EmissionTable,
    /// Car coefficients replacing the table's a and b.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<[f64; 5]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<[f64; 5]>,
    /// $/kg for FC, HC, NOx, CO, CO2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prices: Option<[f64; 5]>,
    /// Sets t_k = s_k / speed on every edge (default 50 km/h).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub free_flow_speed_kmh: Option<f64>,
    /// Per-edge t_k in hours, overriding the free-flow speed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub free_flow_time_h: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "params", rename_all = "snake_case")]
pub enum CostSpec {
    LinearSum,
    Weighted(WeightedParams),
    Emission(Box<EmissionSpec>),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhs_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conservation_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positivity_floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_halvings: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lyapunov_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_tol: Option<f64>,
    /// Start from a random interior point drawn with this seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputOptions {
    /// Decimal places of printed flows (default 0, as in the reference tables).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<bool>,
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub vertices: Vec<VertexId>,
    pub edges: Vec<EdgeEntry>,
    pub exits: Vec<VertexId>,
    pub populations: Vec<PopulationEntry>,
    pub cost: CostSpec,
    #[serde(default, skip_serializing_if = "is_default")]
    pub solver: SolverOverrides,
    #[serde(default, skip_serializing_if = "is_default")]
    pub output: OutputOptions,
    /// Edge lengths are stand-ins, not measured values.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub placeholder_lengths: bool,
}

/// The cost in use, plus the emission model again when that is it.
type CostModels = (Arc<dyn CostModel>, Option<Arc<EmissionCost>>);

/// One `[tail, head, length_km]` entry of a lengths file.
pub type LengthEntry = (VertexId, VertexId, f64);

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, source_name: &str) -> Result<T, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        ScenarioError::Parse {
            source_name: source_name.to_string(),
            path,
            line: inner.line(),
            column: inner.column(),
            message: strip_position(&inner.to_string()),
        }
    })
}

/// serde_json appends " at line L column C"; the error reports those separately.
fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(i) => message[..i].to_string(),
        None => message.to_string(),
    }
}

fn read(path: &Path) -> Result<String, ScenarioError> {
    std::fs::read_to_string(path).map_err(|e| ScenarioError::Io(path.display().to_string(), e))
}

impl Scenario {
    pub fn from_json(text: &str, source_name: &str) -> Result<Self, ScenarioError> {
        parse_json(text, source_name)
    }

    pub fn from_file(path: &Path) -> Result<Self, ScenarioError> {
        Self::from_json(&read(path)?, &path.display().to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| "scenario".into())
    }

    /// Sets edge lengths from `[tail, head, km]` entries. Clears the
    /// placeholder mark when the entries cover every edge.
    pub fn apply_lengths(&mut self, lengths: &[LengthEntry]) -> Result<(), ScenarioError> {
        let mut covered = vec![false; self.edges.len()];
        for (t, h, s) in lengths {
            let k = self
                .edges
                .iter()
                .position(|e| e.endpoints() == (t, h))
                .ok_or_else(|| ScenarioError::Invalid(format!("lengths file names unknown edge ({t},{h})")))?;
            if !(s.is_finite() && *s > 0.0) {
                return Err(ScenarioError::Invalid(format!(
                    "length of ({t},{h}) must be positive, got {s}"
                )));
            }
            self.edges[k] = EdgeEntry::Measured(t.clone(), h.clone(), *s);
            covered[k] = true;
        }
        if covered.iter().all(|&c| c) {
            self.placeholder_lengths = false;
        }
        Ok(())
    }

    pub fn read_lengths(path: &Path) -> Result<Vec<LengthEntry>, ScenarioError> {
        parse_json(&read(path)?, &path.display().to_string())
    }

    fn network(&self) -> Result<NetworkSpec, ScenarioError> {
        Ok(NetworkSpec::new(
            self.vertices.iter().map(ToString::to_string),
            self.edges.iter().map(|e| {
                let (t, h) = e.endpoints();
                (t.to_string(), h.to_string(), e.length())
            }),
            self.exits.iter().map(ToString::to_string),
        )?)
    }

    fn population_spec(&self, net: &NetworkSpec, p: &PopulationEntry) -> Result<PopulationSpec, ScenarioError> {
        let mut entrances = Vec::new();
        for (vertex, &rate) in &p.entrances {
            let v = net.vertex_index(vertex).ok_or_else(|| {
                ScenarioError::Invalid(format!("population `{}`: entrance `{vertex}` is not a vertex", p.name))
            })?;
            entrances.push((v, rate));
        }
        let resolve = |list: &[EdgeRef], field: &str| -> Result<Vec<usize>, ScenarioError> {
            list.iter()
                .map(|EdgeRef(t, h)| {
                    net.find_edge(&t.to_string(), &h.to_string()).ok_or_else(|| {
                        ScenarioError::Invalid(format!("population `{}`: {field} names unknown edge ({t},{h})", p.name))
                    })
                })
                .collect()
        };
        let mut spec = PopulationSpec::new(p.name.clone(), entrances);
        match (&p.allowed_edges, &p.excluded_edges) {
            (Some(_), Some(_)) => {
                return Err(ScenarioError::Invalid(format!(
                    "population `{}`: give allowed_edges or excluded_edges, not both",
                    p.name
                )))
            }
            (Some(list), None) => spec = spec.with_allowed_edges(resolve(list, "allowed_edges")?),
            (None, Some(list)) => {
                let excluded = resolve(list, "excluded_edges")?;
                spec = spec.with_allowed_edges((0..net.edge_count()).filter(|k| !excluded.contains(k)).collect());
            }
            (None, None) => {}
        }
        spec.validate(net)?;
        spec.check_exit_separation(net)?;
        Ok(spec)
    }

    fn cost_model(&self, net: &NetworkSpec) -> Result<CostModels, ScenarioError> {
        Ok(match &self.cost {
            CostSpec::LinearSum => (Arc::new(LinearSumCost), None),
            CostSpec::Weighted(w) => (
                Arc::new(WeightedCongestionCost::new(
                    self.populations.iter().map(|p| p.weight.unwrap_or(1.0)).collect(),
                    w.mix,
                )?),
                None,
            ),
            CostSpec::Emission(e) => {
                let lengths = net
                    .edges()
                    .iter()
                    .enumerate()
                    .map(|(k, edge)| edge.length_km.ok_or(CostError::MissingLength { edge: k }))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| {
                        let missing: Vec<String> = (0..net.edge_count())
                            .filter(|&k| net.edge(k).length_km.is_none())
                            .map(|k| net.edge_label(k))
                            .collect();
                        ScenarioError::Invalid(format!(
                            "emission cost needs a length for every edge; missing: {}",
                            missing.join(", ")
                        ))
                    })?;
                let EmissionTable::PaperTable2 = e.table;
                let base = EmissionClass {
                    a: e.a.unwrap_or(TABLE2_A),
                    b: e.b.unwrap_or(TABLE2_B),
                };
                let speed = e.free_flow_speed_kmh.unwrap_or(DEFAULT_FREE_FLOW_SPEED_KMH);
                let times = match &e.free_flow_time_h {
                    Some(t) if t.len() != lengths.len() => {
                        return Err(ScenarioError::Invalid(format!(
                            "free_flow_time_h has {} entries, network has {} edges",
                            t.len(),
                            lengths.len()
                        )))
                    }
                    Some(t) => t.clone(),
                    None => lengths.iter().map(|s| s / speed).collect(),
                };
                let params = EmissionParams {
                    classes: self
                        .populations
                        .iter()
                        .map(|p| base.scaled(p.emission_factor.unwrap_or(1.0)))
                        .collect(),
                    prices: e.prices.unwrap_or(TABLE2_PRICES),
                    edges: times
                        .into_iter()
                        .map(|t| EdgeCongestion {
                            free_flow_time_h: t,
                            alpha: e.alpha.unwrap_or(DEFAULT_ALPHA),
                            beta: e.beta.unwrap_or(DEFAULT_BETA),
                            capacity: e.capacity.unwrap_or(DEFAULT_CAPACITY),
                        })
                        .collect(),
                };
                let model = Arc::new(EmissionCost::new(params, lengths)?);
                (model.clone(), Some(model))
            }
        })
    }

    fn solver_config(&self) -> Result<SolverConfig, ScenarioError> {
        let o = &self.solver;
        let d = SolverConfig::default();
        let config = SolverConfig {
            step: o.step.unwrap_or(d.step),
            max_time: o.max_time.unwrap_or(d.max_time),
            rhs_tol: o.rhs_tol.unwrap_or(d.rhs_tol),
            conservation_tol: o.conservation_tol.unwrap_or(d.conservation_tol),
            positivity_floor: o.positivity_floor.unwrap_or(d.positivity_floor),
            max_halvings: o.max_halvings.unwrap_or(d.max_halvings),
            record_stride: o.record_stride.unwrap_or(d.record_stride),
            lyapunov_tol: o.lyapunov_tol.unwrap_or(d.lyapunov_tol),
        };
        config.validate().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        Ok(config)
    }

    /// Resolves every cross-reference and assembles the solver inputs.
    pub fn build(&self) -> Result<BuiltScenario, ScenarioError> {
        let net = self.network()?;
        if self.populations.is_empty() {
            return Err(NetworkError::NoPopulations.into());
        }
        for p in &self.populations {
            for (field, v) in [("weight", p.weight), ("emission_factor", p.emission_factor)] {
                if let Some(x) = v {
                    if !(x.is_finite() && x > 0.0) {
                        return Err(ScenarioError::Invalid(format!(
                            "population `{}`: {field} must be positive, got {x}",
                            p.name
                        )));
                    }
                }
            }
        }
        let specs = self
            .populations
            .iter()
            .map(|p| self.population_spec(&net, p))
            .collect::<Result<Vec<_>, _>>()?;
        let (cost, emission) = self.cost_model(&net)?;
        let solver = self.solver_config()?;
        let gap_tol = self.solver.gap_tol.unwrap_or(DEFAULT_GAP_TOL);
        if !(gap_tol.is_finite() && gap_tol > 0.0) {
            return Err(ScenarioError::Invalid(format!(
                "gap_tol must be positive, got {gap_tol}"
            )));
        }
        let system = PopulationSystem::new(net, specs)?;
        Ok(BuiltScenario {
            name: self.display_name(),
            system,
            cost,
            emission,
            solver,
            gap_tol,
            seed: self.solver.seed,
            precision: self.output.precision.unwrap_or(0),
            trajectory: self.output.trajectory.unwrap_or(false),
            placeholder_lengths: self.placeholder_lengths,
        })
    }
}

/// A validated scenario, ready to solve.
pub struct BuiltScenario {
    pub name: String,
    pub system: PopulationSystem,
    pub cost: Arc<dyn CostModel>,
    /// The emission model again, when that is the cost in use.
    pub emission: Option<Arc<EmissionCost>>,
    pub solver: SolverConfig,
    pub gap_tol: f64,
    pub seed: Option<u64>,
    pub precision: u32,
    pub trajectory: bool,
    pub placeholder_lengths: bool,
}

impl fmt::Debug for BuiltScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BuiltScenario")
            .field("name", &self.name)
            .field("cost", &self.cost.name())
            .field("populations", &self.system.population_count())
            .finish_non_exhaustive()
    }
}
