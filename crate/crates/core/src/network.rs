//! Directed networks, Kirchhoff systems and per-population subgraph reduction.
//!
//! Vertices and edges are addressed by their position in the input order;
//! matrix rows follow vertex order with exits removed and columns follow edge
//! order, so layouts are reproducible across runs.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::flow::{EdgeLayout, FlowProfile};

/// Singular values below this (relative to the largest) count as zero when
/// checking the row rank of a Kirchhoff matrix.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("duplicate vertex `{0}`")]
    DuplicateVertex(String),
    #[error("edge {index} ({tail} -> {head}) is a self-loop")]
    SelfLoop { index: usize, tail: String, head: String },
    #[error("duplicate edge ({tail}, {head})")]
    DuplicateEdge { tail: String, head: String },
    #[error("edge ({tail}, {head}) has invalid length {length} (must be finite and positive)")]
    InvalidLength { tail: String, head: String, length: f64 },
    #[error("edge ({tail}, {head}) leaves exit vertex `{tail}`")]
    EdgeLeavesExit { tail: String, head: String },
    #[error("exit set is empty")]
    NoExits,
    #[error("entrance `{0}` is also an exit vertex")]
    EntranceIsExit(String),
    #[error("edge ({entrance}, {exit}) joins entrance `{entrance}` directly to exit `{exit}`")]
    EntranceAdjacentToExit { entrance: String, exit: String },
    #[error("inflow at `{vertex}` must be finite and positive, got {rate}")]
    InvalidInflow { vertex: String, rate: f64 },
    #[error("inflow given for exit vertex `{0}`")]
    InflowAtExit(String),
    #[error("population `{0}` has no entrances")]
    NoEntrances(String),
    #[error("population `{population}` lists edge index {edge}, network has {edge_count} edges")]
    UnknownEdge {
        population: String,
        edge: usize,
        edge_count: usize,
    },
    #[error("duplicate population name `{0}`")]
    DuplicatePopulation(String),
    #[error("no populations given")]
    NoPopulations,
    #[error("Kirchhoff matrix has rank {rank} but {rows} rows (disconnected or degenerate network)")]
    RankDeficient { rank: usize, rows: usize },
    #[error("population `{0}` keeps no edges after reduction")]
    EmptyReduction(String),
    #[error("entrance `{entrance}` of population `{population}` has no path to an exit")]
    NoExitPath { population: String, entrance: String },
    #[error("epsilon must be finite and positive, got {0}")]
    InvalidEpsilon(f64),
    #[error("epsilon {epsilon} too large: residual demand at `{vertex}` would be {residual}")]
    EpsilonTooLarge {
        epsilon: f64,
        vertex: String,
        residual: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub length_km: Option<f64>,
}

/// A directed graph with designated exit vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    vertices: Vec<String>,
    edges: Vec<Edge>,
    exit_mask: Vec<bool>,
    index: HashMap<String, usize>,
}

impl NetworkSpec {
    pub fn new<V, E, X>(vertices: V, edges: E, exits: X) -> Result<Self, NetworkError>
    where
        V: IntoIterator,
        V::Item: Into<String>,
        E: IntoIterator<Item = (String, String, Option<f64>)>,
        X: IntoIterator,
        X::Item: Into<String>,
    {
        let vertices: Vec<String> = vertices.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(vertices.len());
        for (i, v) in vertices.iter().enumerate() {
            if index.insert(v.clone(), i).is_some() {
                return Err(NetworkError::DuplicateVertex(v.clone()));
            }
        }
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| NetworkError::UnknownVertex(name.to_string()))
        };

        let mut exit_mask = vec![false; vertices.len()];
        for x in exits {
            exit_mask[lookup(&x.into())?] = true;
        }
        if !exit_mask.iter().any(|&b| b) {
            return Err(NetworkError::NoExits);
        }

        let mut seen = HashSet::new();
        let mut parsed = Vec::new();
        for (i, (tail, head, length_km)) in edges.into_iter().enumerate() {
            let t = lookup(&tail)?;
            let h = lookup(&head)?;
            if t == h {
                return Err(NetworkError::SelfLoop { index: i, tail, head });
            }
            if !seen.insert((t, h)) {
                return Err(NetworkError::DuplicateEdge { tail, head });
            }
            if let Some(len) = length_km {
                if !(len.is_finite() && len > 0.0) {
                    return Err(NetworkError::InvalidLength {
                        tail,
                        head,
                        length: len,
                    });
                }
            }
            if exit_mask[t] {
                return Err(NetworkError::EdgeLeavesExit { tail, head });
            }
            parsed.push(Edge {
                tail: t,
                head: h,
                length_km,
            });
        }

        Ok(Self {
            vertices,
            edges: parsed,
            exit_mask,
            index,
        })
    }

    /// Builds a network from integer vertex labels.
    pub fn from_ids(vertices: &[u32], edges: &[(u32, u32)], exits: &[u32]) -> Result<Self, NetworkError> {
        Self::new(
            vertices.iter().map(|v| v.to_string()),
            edges.iter().map(|(t, h)| (t.to_string(), h.to_string(), None)),
            exits.iter().map(|v| v.to_string()),
        )
    }

    /// Replaces all edge lengths.
    pub fn with_lengths(mut self, lengths: &[f64]) -> Result<Self, NetworkError> {
        assert_eq!(lengths.len(), self.edges.len(), "one length per edge");
        for (e, &len) in self.edges.iter_mut().zip(lengths) {
            if !(len.is_finite() && len > 0.0) {
                return Err(NetworkError::InvalidLength {
                    tail: self.vertices[e.tail].clone(),
                    head: self.vertices[e.head].clone(),
                    length: len,
                });
            }
            e.length_km = Some(len);
        }
        Ok(self)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn vertex_name(&self, v: usize) -> &str {
        &self.vertices[v]
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, k: usize) -> &Edge {
        &self.edges[k]
    }

    pub fn find_edge(&self, tail: &str, head: &str) -> Option<usize> {
        let (t, h) = (self.vertex_index(tail)?, self.vertex_index(head)?);
        self.edges.iter().position(|e| e.tail == t && e.head == h)
    }

    /// `(tail,head)` using vertex names.
    pub fn edge_label(&self, k: usize) -> String {
        let e = &self.edges[k];
        format!("({},{})", self.vertices[e.tail], self.vertices[e.head])
    }

    pub fn is_exit(&self, v: usize) -> bool {
        self.exit_mask[v]
    }

    pub fn exit_mask(&self) -> &[bool] {
        &self.exit_mask
    }

    pub fn exits(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.vertices.len()).filter(|&v| self.exit_mask[v])
    }

    pub fn non_exit_vertices(&self) -> Vec<usize> {
        (0..self.vertices.len()).filter(|&v| !self.exit_mask[v]).collect()
    }

    /// Edge lengths, or `None` if any edge lacks one.
    pub fn lengths(&self) -> Option<Vec<f64>> {
        self.edges.iter().map(|e| e.length_km).collect()
    }
}

/// The incidence system K x = B over non-exit vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct KirchhoffSystem {
    matrix: DMatrix<f64>,
    row_vertices: Vec<usize>,
    inflow: DVector<f64>,
}

impl KirchhoffSystem {
    fn assemble(
        network: &NetworkSpec,
        columns: &[usize],
        rows: Vec<usize>,
        inflows: &[(usize, f64)],
    ) -> Result<Self, NetworkError> {
        let row_of: HashMap<usize, usize> = rows.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut matrix = DMatrix::zeros(rows.len(), columns.len());
        for (c, &k) in columns.iter().enumerate() {
            let e = network.edge(k);
            if let Some(&i) = row_of.get(&e.tail) {
                matrix[(i, c)] = 1.0;
            }
            if let Some(&i) = row_of.get(&e.head) {
                matrix[(i, c)] = -1.0;
            }
        }
        let mut inflow = DVector::zeros(rows.len());
        for &(v, rate) in inflows {
            if network.is_exit(v) {
                return Err(NetworkError::InflowAtExit(network.vertex_name(v).to_string()));
            }
            if !(rate.is_finite() && rate > 0.0) {
                return Err(NetworkError::InvalidInflow {
                    vertex: network.vertex_name(v).to_string(),
                    rate,
                });
            }
            match row_of.get(&v) {
                Some(&i) => inflow[i] += rate,
                None => {
                    return Err(NetworkError::RankDeficient {
                        rank: 0,
                        rows: rows.len(),
                    })
                }
            }
        }
        let rank = row_rank(&matrix);
        if rank < rows.len() {
            return Err(NetworkError::RankDeficient { rank, rows: rows.len() });
        }
        Ok(Self {
            matrix,
            row_vertices: rows,
            inflow,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn row_vertices(&self) -> &[usize] {
        &self.row_vertices
    }

    pub fn inflow(&self) -> &DVector<f64> {
        &self.inflow
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    /// ‖K x − B‖∞.
    pub fn residual(&self, x: &DVector<f64>) -> f64 {
        (&self.matrix * x - &self.inflow).amax()
    }
}

fn row_rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 {
        return 0;
    }
    if m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let max = sv.max();
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * max).count()
}

/// Builds the full-network Kirchhoff system for the given vertex inflows.
///
/// Rows are all non-exit vertices, so an isolated non-exit vertex yields a
/// zero row and a rank-deficiency error.
pub fn build_kirchhoff(network: &NetworkSpec, inflows: &[(usize, f64)]) -> Result<KirchhoffSystem, NetworkError> {
    let columns: Vec<usize> = (0..network.edge_count()).collect();
    KirchhoffSystem::assemble(network, &columns, network.non_exit_vertices(), inflows)
}

/// One population's entrances, inflow rates and usable edges.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSpec {
    pub name: String,
    /// (vertex index, rate) pairs.
    pub entrances: Vec<(usize, f64)>,
    /// Network edge indices this population may use; `None` means all.
    pub allowed_edges: Option<Vec<usize>>,
}

impl PopulationSpec {
    pub fn new(name: impl Into<String>, entrances: Vec<(usize, f64)>) -> Self {
        Self {
            name: name.into(),
            entrances,
            allowed_edges: None,
        }
    }

    pub fn with_allowed_edges(mut self, edges: Vec<usize>) -> Self {
        self.allowed_edges = Some(edges);
        self
    }

    pub fn total_inflow(&self) -> f64 {
        self.entrances.iter().map(|(_, r)| r).sum()
    }

    pub fn validate(&self, network: &NetworkSpec) -> Result<(), NetworkError> {
        if self.entrances.is_empty() {
            return Err(NetworkError::NoEntrances(self.name.clone()));
        }
        for &(v, rate) in &self.entrances {
            let name = network
                .vertices()
                .get(v)
                .ok_or_else(|| NetworkError::UnknownVertex(format!("#{v}")))?;
            if network.is_exit(v) {
                return Err(NetworkError::EntranceIsExit(name.clone()));
            }
            if !(rate.is_finite() && rate > 0.0) {
                return Err(NetworkError::InvalidInflow {
                    vertex: name.clone(),
                    rate,
                });
            }
        }
        if let Some(allowed) = &self.allowed_edges {
            if let Some(&k) = allowed.iter().find(|&&k| k >= network.edge_count()) {
                return Err(NetworkError::UnknownEdge {
                    population: self.name.clone(),
                    edge: k,
                    edge_count: network.edge_count(),
                });
            }
        }
        Ok(())
    }

    /// Rejects an edge joining one of this population's entrances directly
    /// to an exit.
    ///
    /// Scenario input is held to this convention; the solvers themselves
    /// handle such edges, so [`reduce_population`] does not require it.
    pub fn check_exit_separation(&self, network: &NetworkSpec) -> Result<(), NetworkError> {
        for &(v, _) in &self.entrances {
            if let Some(e) = network.edges().iter().find(|e| e.tail == v && network.is_exit(e.head)) {
                return Err(NetworkError::EntranceAdjacentToExit {
                    entrance: network.vertex_name(v).to_string(),
                    exit: network.vertex_name(e.head).to_string(),
                });
            }
        }
        Ok(())
    }
}

/// A population's subgraph with never-usable edges removed, and its
/// Kirchhoff system K_r ϑ = B_R.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedPopulation {
    name: String,
    network_edge_count: usize,
    edge_map: Vec<usize>,
    edges: Vec<(usize, usize)>,
    entrances: Vec<(usize, f64)>,
    exit_mask: Vec<bool>,
    kirchhoff: KirchhoffSystem,
}

impl ReducedPopulation {
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Reduced edge index → network edge index.
    pub fn edge_map(&self) -> &[usize] {
        &self.edge_map
    }

    pub fn n_reduced(&self) -> usize {
        self.edge_map.len()
    }

    pub fn network_edge_count(&self) -> usize {
        self.network_edge_count
    }

    /// Reduced edges as (tail, head) network vertex indices.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn entrances(&self) -> &[(usize, f64)] {
        &self.entrances
    }

    pub fn vertex_count(&self) -> usize {
        self.exit_mask.len()
    }

    pub fn is_exit(&self, v: usize) -> bool {
        self.exit_mask[v]
    }

    pub fn kirchhoff(&self) -> &KirchhoffSystem {
        &self.kirchhoff
    }

    pub fn min_inflow(&self) -> f64 {
        self.entrances.iter().map(|&(_, r)| r).fold(f64::INFINITY, f64::min)
    }

    /// 10⁻² × smallest inflow / network edge count.
    pub fn default_epsilon(&self) -> f64 {
        1e-2 * self.min_inflow() / self.network_edge_count as f64
    }

    /// Lifts a reduced vector onto all network edges (zeros elsewhere).
    pub fn expand(&self, reduced: &DVector<f64>) -> DVector<f64> {
        let mut full = DVector::zeros(self.network_edge_count);
        for (i, &k) in self.edge_map.iter().enumerate() {
            full[k] = reduced[i];
        }
        full
    }

    /// Restricts a network-edge vector to this population's edges.
    pub fn restrict(&self, full: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.edge_map.len(), self.edge_map.iter().map(|&k| full[k]))
    }
}

/// Removes edges outside `allowed_edges` and edges on no entrance→exit path,
/// then builds K_r and B_R on what remains.
pub fn reduce_population(network: &NetworkSpec, spec: &PopulationSpec) -> Result<ReducedPopulation, NetworkError> {
    spec.validate(network)?;
    let m = network.vertex_count();
    let allowed: Vec<usize> = match &spec.allowed_edges {
        Some(list) => {
            let set: HashSet<usize> = list.iter().copied().collect();
            (0..network.edge_count()).filter(|k| set.contains(k)).collect()
        }
        None => (0..network.edge_count()).collect(),
    };

    let mut forward = vec![false; m];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for &(v, _) in &spec.entrances {
        if !forward[v] {
            forward[v] = true;
            queue.push_back(v);
        }
    }
    while let Some(u) = queue.pop_front() {
        for &k in &allowed {
            let e = network.edge(k);
            if e.tail == u && !forward[e.head] {
                forward[e.head] = true;
                queue.push_back(e.head);
            }
        }
    }

    let mut backward: Vec<bool> = (0..m).map(|v| network.is_exit(v)).collect();
    queue.extend((0..m).filter(|&v| backward[v]));
    while let Some(u) = queue.pop_front() {
        for &k in &allowed {
            let e = network.edge(k);
            if e.head == u && !backward[e.tail] {
                backward[e.tail] = true;
                queue.push_back(e.tail);
            }
        }
    }

    for &(v, _) in &spec.entrances {
        if !backward[v] {
            return Err(NetworkError::NoExitPath {
                population: spec.name.clone(),
                entrance: network.vertex_name(v).to_string(),
            });
        }
    }

    let edge_map: Vec<usize> = allowed
        .into_iter()
        .filter(|&k| {
            let e = network.edge(k);
            forward[e.tail] && backward[e.head]
        })
        .collect();
    if edge_map.is_empty() {
        return Err(NetworkError::EmptyReduction(spec.name.clone()));
    }

    let mut touched = vec![false; m];
    for &k in &edge_map {
        let e = network.edge(k);
        touched[e.tail] = true;
        touched[e.head] = true;
    }
    let rows: Vec<usize> = (0..m).filter(|&v| touched[v] && !network.is_exit(v)).collect();
    let kirchhoff = KirchhoffSystem::assemble(network, &edge_map, rows, &spec.entrances)?;

    Ok(ReducedPopulation {
        name: spec.name.clone(),
        network_edge_count: network.edge_count(),
        edges: edge_map
            .iter()
            .map(|&k| (network.edge(k).tail, network.edge(k).head))
            .collect(),
        edge_map,
        entrances: spec.entrances.clone(),
        exit_mask: network.exit_mask().to_vec(),
        kirchhoff,
    })
}

/// Hop-count breadth-first search trees over a reduced subgraph.
struct HopTrees {
    /// Edge used to reach each vertex from the nearest entrance.
    from_entrance: Vec<Option<usize>>,
    reached: Vec<bool>,
    /// Edge leaving each vertex on a shortest route to an exit.
    to_exit: Vec<Option<usize>>,
}

impl HopTrees {
    fn new(reduced: &ReducedPopulation) -> Self {
        let m = reduced.vertex_count();
        let edges = reduced.edges();

        let mut reached = vec![false; m];
        let mut from_entrance = vec![None; m];
        let mut queue = VecDeque::new();
        for &(v, _) in reduced.entrances() {
            if !reached[v] {
                reached[v] = true;
                queue.push_back(v);
            }
        }
        while let Some(u) = queue.pop_front() {
            for (i, &(t, h)) in edges.iter().enumerate() {
                if t == u && !reached[h] {
                    reached[h] = true;
                    from_entrance[h] = Some(i);
                    queue.push_back(h);
                }
            }
        }

        let mut to_exit = vec![None; m];
        let mut done: Vec<bool> = (0..m).map(|v| reduced.is_exit(v)).collect();
        queue.extend((0..m).filter(|&v| done[v]));
        while let Some(u) = queue.pop_front() {
            for (i, &(t, h)) in edges.iter().enumerate() {
                if h == u && !done[t] {
                    done[t] = true;
                    to_exit[t] = Some(i);
                    queue.push_back(t);
                }
            }
        }

        Self {
            from_entrance,
            reached,
            to_exit,
        }
    }

    /// Walks back to the entrance that reaches `v`; returns it and the edges.
    fn path_from_entrance(&self, edges: &[(usize, usize)], mut v: usize) -> (usize, Vec<usize>) {
        let mut path = Vec::new();
        while let Some(i) = self.from_entrance[v] {
            path.push(i);
            v = edges[i].0;
        }
        path.reverse();
        (v, path)
    }

    fn path_to_exit(&self, edges: &[(usize, usize)], mut v: usize) -> Vec<usize> {
        let mut path = Vec::new();
        while let Some(i) = self.to_exit[v] {
            path.push(i);
            v = edges[i].1;
        }
        path
    }
}

/// Produces a strictly positive flow ϑ₀ ≥ ε with K_r ϑ₀ = B_R.
///
/// Every reduced edge receives ε along one entrance→edge→exit route; the
/// remaining demand of each entrance follows its hop-shortest route to an
/// exit.
pub fn interior_point(reduced: &ReducedPopulation, epsilon: f64) -> Result<DVector<f64>, NetworkError> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(NetworkError::InvalidEpsilon(epsilon));
    }
    let edges = reduced.edges();
    let trees = HopTrees::new(reduced);
    let mut x = DVector::zeros(edges.len());
    let mut used: HashMap<usize, f64> = HashMap::new();

    for (i, &(t, h)) in edges.iter().enumerate() {
        if !trees.reached[t] {
            return Err(NetworkError::EmptyReduction(reduced.name().to_string()));
        }
        let (entrance, prefix) = trees.path_from_entrance(edges, t);
        let suffix = trees.path_to_exit(edges, h);
        if !reduced.is_exit(h) && suffix.is_empty() {
            return Err(NetworkError::EmptyReduction(reduced.name().to_string()));
        }
        for k in prefix.into_iter().chain(std::iter::once(i)).chain(suffix) {
            x[k] += epsilon;
        }
        *used.entry(entrance).or_default() += epsilon;
    }

    for &(v, rate) in reduced.entrances() {
        let residual = rate - used.remove(&v).unwrap_or(0.0);
        if residual < 0.0 {
            return Err(NetworkError::EpsilonTooLarge {
                epsilon,
                vertex: format!("#{v}"),
                residual,
            });
        }
        for k in trees.path_to_exit(edges, v) {
            x[k] += residual;
        }
    }
    Ok(x)
}

/// All populations on a shared network.
#[derive(Debug, Clone)]
pub struct PopulationSystem {
    network: NetworkSpec,
    specs: Vec<PopulationSpec>,
    reduced: Vec<ReducedPopulation>,
    layout: Arc<EdgeLayout>,
}

impl PopulationSystem {
    pub fn new(network: NetworkSpec, specs: Vec<PopulationSpec>) -> Result<Self, NetworkError> {
        if specs.is_empty() {
            return Err(NetworkError::NoPopulations);
        }
        let mut names = HashSet::new();
        for s in &specs {
            if !names.insert(s.name.as_str()) {
                return Err(NetworkError::DuplicatePopulation(s.name.clone()));
            }
        }
        let reduced = specs
            .iter()
            .map(|s| reduce_population(&network, s))
            .collect::<Result<Vec<_>, _>>()?;
        let layout = Arc::new(EdgeLayout::new(
            network.edge_count(),
            reduced.iter().map(|r| r.edge_map().to_vec()).collect(),
        ));
        Ok(Self {
            network,
            specs,
            reduced,
            layout,
        })
    }

    pub fn network(&self) -> &NetworkSpec {
        &self.network
    }

    pub fn specs(&self) -> &[PopulationSpec] {
        &self.specs
    }

    pub fn population(&self, r: usize) -> &ReducedPopulation {
        &self.reduced[r]
    }

    pub fn populations(&self) -> &[ReducedPopulation] {
        &self.reduced
    }

    pub fn population_count(&self) -> usize {
        self.reduced.len()
    }

    pub fn layout(&self) -> &Arc<EdgeLayout> {
        &self.layout
    }

    /// Wraps reduced vectors into a profile sharing this system's layout.
    pub fn profile(&self, flows: Vec<DVector<f64>>) -> Result<FlowProfile, crate::flow::FlowError> {
        FlowProfile::new(self.layout.clone(), flows)
    }

    /// Interior starting point for every population at its default ε.
    pub fn interior_profile(&self) -> Result<Vec<DVector<f64>>, NetworkError> {
        self.reduced
            .iter()
            .map(|r| interior_point(r, r.default_epsilon()))
            .collect()
    }

    /// Largest ‖K_r ϑ^r − B_R^r‖∞ over populations.
    pub fn conservation_residual(&self, flows: &[DVector<f64>]) -> f64 {
        self.reduced
            .iter()
            .zip(flows)
            .map(|(r, x)| r.kirchhoff().residual(x))
            .fold(0.0, f64::max)
    }
}
