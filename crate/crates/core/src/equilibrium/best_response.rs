use nalgebra::DVector;

use super::EquilibriumError;
use crate::network::ReducedPopulation;

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub flow: DVector<f64>,
    /// ⟨c, flow⟩, the minimum over the population's flow polytope.
    pub value: f64,
}

/// Minimises ⟨c, ϑ⟩ over {ϑ ≥ 0, K_r ϑ = B_R} by sending each entrance's
/// demand down a cheapest route to any exit.
///
/// Distances to the exit set come from a Bellman–Ford sweep on the reversed
/// graph, so negative edge costs are fine as long as no cycle is negative.
pub fn best_response(costs: &DVector<f64>, reduced: &ReducedPopulation) -> Result<BestResponse, EquilibriumError> {
    let edges = reduced.edges();
    if costs.len() != edges.len() {
        return Err(EquilibriumError::Dimension {
            expected: edges.len(),
            found: costs.len(),
        });
    }
    let m = reduced.vertex_count();
    let mut dist: Vec<f64> = (0..m)
        .map(|v| if reduced.is_exit(v) { 0.0 } else { f64::INFINITY })
        .collect();
    let mut next: Vec<Option<usize>> = vec![None; m];

    let mut settled = false;
    for _ in 0..m {
        let mut changed = false;
        for (i, &(t, h)) in edges.iter().enumerate() {
            let through = dist[h] + costs[i];
            if through < dist[t] {
                dist[t] = through;
                next[t] = Some(i);
                changed = true;
            }
        }
        if !changed {
            settled = true;
            break;
        }
    }
    if !settled {
        let vertex = edges
            .iter()
            .enumerate()
            .find(|&(i, &(t, h))| dist[h] + costs[i] < dist[t])
            .map(|(_, &(t, _))| t)
            .unwrap_or(0);
        return Err(EquilibriumError::NegativeCycle { vertex });
    }

    let mut flow = DVector::zeros(edges.len());
    let mut value = 0.0;
    for &(entrance, rate) in reduced.entrances() {
        value += rate * dist[entrance];
        let mut v = entrance;
        let mut hops = 0;
        while let Some(i) = next[v] {
            flow[i] += rate;
            v = edges[i].1;
            hops += 1;
            if hops > m {
                return Err(EquilibriumError::NegativeCycle { vertex: v });
            }
        }
    }
    Ok(BestResponse { flow, value })
}
