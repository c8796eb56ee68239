#![allow(dead_code)]

use wardrop_core::costs::{EmissionCost, EmissionParams, LinearSumCost, WeightedCongestionCost};
use wardrop_core::{NetworkSpec, PopulationSpec, PopulationSystem};

pub const TEN_VERTEX_EDGES: [(u32, u32); 15] = [
    (1, 2),
    (2, 3),
    (9, 3),
    (2, 4),
    (3, 4),
    (3, 5),
    (4, 5),
    (4, 6),
    (5, 6),
    (3, 7),
    (4, 7),
    (5, 7),
    (6, 7),
    (7, 8),
    (7, 10),
];

pub const REFERENCE_TOTALS: [f64; 15] = [
    100.0, 38.0, 100.0, 62.0, 24.0, 37.0, 12.0, 22.0, 10.0, 76.0, 54.0, 40.0, 31.0, 100.0, 100.0,
];

pub fn ten_vertex() -> NetworkSpec {
    NetworkSpec::from_ids(&[1, 2, 3, 4, 5, 6, 7, 8, 9, 10], &TEN_VERTEX_EDGES, &[8, 10]).unwrap()
}

pub fn vid(net: &NetworkSpec, id: u32) -> usize {
    net.vertex_index(&id.to_string()).unwrap()
}

pub fn eid(net: &NetworkSpec, tail: u32, head: u32) -> usize {
    net.find_edge(&tail.to_string(), &head.to_string()).unwrap()
}

pub fn two_populations(net: NetworkSpec, first: f64, second: f64) -> PopulationSystem {
    let (a, b) = (vid(&net, 1), vid(&net, 9));
    PopulationSystem::new(
        net,
        vec![
            PopulationSpec::new("1", vec![(a, first)]),
            PopulationSpec::new("2", vec![(b, second)]),
        ],
    )
    .unwrap()
}

pub fn scenario1() -> (PopulationSystem, LinearSumCost) {
    (two_populations(ten_vertex(), 100.0, 100.0), LinearSumCost)
}

pub fn scenario2() -> (PopulationSystem, WeightedCongestionCost) {
    (
        two_populations(ten_vertex(), 100.0, 50.0),
        WeightedCongestionCost::new(vec![1.0, 2.0], (0.5, 0.5)).unwrap(),
    )
}

/// The ten-vertex network plus a truck-only edge (6,10), unit placeholder lengths.
pub fn scenario3() -> (PopulationSystem, EmissionCost) {
    let mut edges = TEN_VERTEX_EDGES.to_vec();
    edges.push((6, 10));
    let net = NetworkSpec::from_ids(&[1, 2, 3, 4, 5, 6, 7, 8, 9, 10], &edges, &[8, 10])
        .unwrap()
        .with_lengths(&[1.0; 16])
        .unwrap();
    let all: Vec<usize> = (0..net.edge_count()).collect();
    let truck_road = eid(&net, 6, 10);
    let car_roads = [eid(&net, 4, 5), eid(&net, 5, 6)];
    let cars = PopulationSpec::new("cars", vec![(vid(&net, 1), 100.0)])
        .with_allowed_edges(all.iter().copied().filter(|&k| k != truck_road).collect());
    let trucks = PopulationSpec::new("trucks", vec![(vid(&net, 9), 50.0)])
        .with_allowed_edges(all.iter().copied().filter(|k| !car_roads.contains(k)).collect());
    let cost = EmissionCost::for_network(EmissionParams::paper_table2(&[1.0; 16], &[1.0, 3.0]), &net).unwrap();
    (PopulationSystem::new(net, vec![cars, trucks]).unwrap(), cost)
}

/// Every simple path from `from` to an exit, as edge-index lists, using only
/// edges with `usable[k]`.
pub fn simple_paths(net: &NetworkSpec, usable: &[bool], from: usize) -> Vec<Vec<usize>> {
    fn walk(
        net: &NetworkSpec,
        usable: &[bool],
        v: usize,
        seen: &mut Vec<bool>,
        path: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if net.is_exit(v) {
            out.push(path.clone());
            return;
        }
        seen[v] = true;
        for (k, e) in net.edges().iter().enumerate() {
            if usable[k] && e.tail == v && !seen[e.head] {
                path.push(k);
                walk(net, usable, e.head, seen, path, out);
                path.pop();
            }
        }
        seen[v] = false;
    }
    let mut out = Vec::new();
    walk(
        net,
        usable,
        from,
        &mut vec![false; net.vertex_count()],
        &mut Vec::new(),
        &mut out,
    );
    out
}

/// Simple paths from `from` to `to` that never pass through an exit.
pub fn simple_paths_to(net: &NetworkSpec, usable: &[bool], from: usize, to: usize) -> Vec<Vec<usize>> {
    fn walk(
        net: &NetworkSpec,
        usable: &[bool],
        v: usize,
        to: usize,
        seen: &mut Vec<bool>,
        path: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if v == to {
            out.push(path.clone());
            return;
        }
        if net.is_exit(v) {
            return;
        }
        seen[v] = true;
        for (k, e) in net.edges().iter().enumerate() {
            if usable[k] && e.tail == v && !seen[e.head] {
                path.push(k);
                walk(net, usable, e.head, to, seen, path, out);
                path.pop();
            }
        }
        seen[v] = false;
    }
    let mut out = Vec::new();
    walk(
        net,
        usable,
        from,
        to,
        &mut vec![false; net.vertex_count()],
        &mut Vec::new(),
        &mut out,
    );
    out
}

pub fn usable_edges(net: &NetworkSpec, spec: &PopulationSpec) -> Vec<bool> {
    match &spec.allowed_edges {
        Some(list) => (0..net.edge_count()).map(|k| list.contains(&k)).collect(),
        None => vec![true; net.edge_count()],
    }
}

/// Simple-path count over all of a population's entrances.
pub fn path_count(net: &NetworkSpec, spec: &PopulationSpec) -> usize {
    let usable = usable_edges(net, spec);
    spec.entrances
        .iter()
        .map(|&(v, _)| simple_paths(net, &usable, v).len())
        .sum()
}

/// Minimum of ⟨c, ϑ⟩ by brute force: each entrance's rate times its cheapest
/// path. Path costs are summed from the exit backwards.
pub fn enumerated_minimum(net: &NetworkSpec, spec: &PopulationSpec, full_costs: &[f64]) -> f64 {
    let usable = usable_edges(net, spec);
    let mut total = 0.0;
    for &(v, rate) in &spec.entrances {
        let best = simple_paths(net, &usable, v)
            .iter()
            .map(|p| p.iter().rev().fold(0.0, |acc, &k| acc + full_costs[k]))
            .fold(f64::INFINITY, f64::min);
        total += rate * best;
    }
    total
}

/// A small random network: vertex 0 and 1 are candidate entrances, the last
/// two vertices are exits, edges never leave an exit.
pub fn random_network(vertices: usize, raw_edges: &[(usize, usize)]) -> Option<NetworkSpec> {
    let ids: Vec<u32> = (1..=vertices as u32).collect();
    let exits = [vertices as u32 - 1, vertices as u32];
    let mut edges: Vec<(u32, u32)> = Vec::new();
    for &(t, h) in raw_edges {
        let (t, h) = (t % vertices, h % vertices);
        let (t, h) = (t as u32 + 1, h as u32 + 1);
        if t == h || exits.contains(&t) || edges.contains(&(t, h)) {
            continue;
        }
        edges.push((t, h));
    }
    NetworkSpec::from_ids(&ids, &edges, &exits).ok()
}
