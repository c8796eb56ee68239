use nalgebra::{DMatrix, DVector};

use super::EquilibriumError;
use crate::costs::{CostKind, CostModel};
use crate::linalg::{solve_spd, weighted_gram};
use crate::network::{interior_point, PopulationSystem};

const KKT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct QpResult {
    /// Total flow on every network edge.
    pub totals: DVector<f64>,
    pub iterations: usize,
    /// Largest violation of stationarity or multiplier sign at exit.
    pub kkt_residual: f64,
}

/// Solves min ½ Σ j_k² over {K j = Σ_r B^r, j ≥ 0}, the potential of the
/// linear-sum cost, by projected-gradient steps on the active face.
///
/// The objective's Hessian is the identity, so a unit projected-gradient
/// step lands on the face minimiser; steps are cut short by the first bound
/// they hit, and bounds with negative multipliers are released.
pub fn potential_qp_oracle(system: &PopulationSystem, model: &dyn CostModel) -> Result<QpResult, EquilibriumError> {
    if model.kind() != CostKind::LinearSum {
        return Err(EquilibriumError::NonPotentialCost(model.name().to_string()));
    }
    if let Some(spec) = system.specs().iter().find(|s| s.allowed_edges.is_some()) {
        return Err(EquilibriumError::RestrictedPopulation(spec.name.clone()));
    }
    let network = system.network();
    let mut used = vec![false; network.edge_count()];
    for red in system.populations() {
        for &k in red.edge_map() {
            used[k] = true;
        }
    }
    let columns: Vec<usize> = (0..network.edge_count()).filter(|&k| used[k]).collect();
    let mut touched = vec![false; network.vertex_count()];
    for &k in &columns {
        touched[network.edge(k).tail] = true;
        touched[network.edge(k).head] = true;
    }
    let rows: Vec<usize> = (0..network.vertex_count())
        .filter(|&v| touched[v] && !network.is_exit(v))
        .collect();
    let row_of = |v: usize| rows.iter().position(|&w| w == v);

    let a = DMatrix::from_fn(rows.len(), columns.len(), |i, c| {
        let e = network.edge(columns[c]);
        if e.tail == rows[i] {
            1.0
        } else if e.head == rows[i] {
            -1.0
        } else {
            0.0
        }
    });
    let mut b = DVector::<f64>::zeros(rows.len());
    let mut x = DVector::<f64>::zeros(columns.len());
    for red in system.populations() {
        for &(v, rate) in red.entrances() {
            b[row_of(v).expect("entrance lies on a used edge")] += rate;
        }
        let start =
            red.expand(&interior_point(red, red.default_epsilon()).map_err(|e| EquilibriumError::Hrf(e.into()))?);
        for (c, &k) in columns.iter().enumerate() {
            x[c] += start[k];
        }
    }

    let n = columns.len();
    let scale = b.amax().max(1.0);
    let mut free = vec![true; n];
    let max_iterations = 10 * n + 10;
    for iteration in 1..=max_iterations {
        let mask = DVector::from_fn(n, |c, _| if free[c] { 1.0 } else { 0.0 });
        let (y, _) = solve_spd(weighted_gram(&a, &mask), &b).ok_or(EquilibriumError::QpStalled)?;
        let aty = a.transpose() * &y;
        let target = mask.component_mul(&aty);
        let p = &target - &x;

        if p.amax() <= 1e-12 * scale {
            // at the face minimiser: multipliers of active bounds are −(Aᵀy)_i
            let worst = (0..n)
                .filter(|&c| !free[c])
                .map(|c| (c, -aty[c]))
                .min_by(|l, r| l.1.total_cmp(&r.1));
            match worst {
                Some((c, mu)) if mu < -KKT_TOL * scale => free[c] = true,
                _ => {
                    let kkt = worst.map_or(0.0, |(_, mu)| (-mu).max(0.0)).max(p.amax());
                    let mut totals = DVector::zeros(network.edge_count());
                    for (c, &k) in columns.iter().enumerate() {
                        totals[k] = target[c].max(0.0);
                    }
                    return Ok(QpResult {
                        totals,
                        iterations: iteration,
                        kkt_residual: kkt,
                    });
                }
            }
            continue;
        }

        let mut alpha = 1.0;
        let mut blocking = None;
        for c in 0..n {
            if free[c] && p[c] < 0.0 {
                let ratio = -x[c] / p[c];
                if ratio < alpha {
                    alpha = ratio;
                    blocking = Some(c);
                }
            }
        }
        x.axpy(alpha, &p, 1.0);
        if let Some(c) = blocking {
            x[c] = 0.0;
            free[c] = false;
        }
    }
    Err(EquilibriumError::QpStalled)
}
