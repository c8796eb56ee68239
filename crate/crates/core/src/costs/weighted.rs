use nalgebra::DMatrix;

use super::{CostError, CostKind, CostModel};

/// c^r_k = mix.0 · Σ_s w_s J_{k,s} + mix.1 · J_{k,r}.
///
/// With weights (1, 2) and mix (0.5, 0.5) trucks weigh twice as much as cars
/// in the shared congestion term, and the self term spreads each class.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCongestionCost {
    weights: Vec<f64>,
    mix: (f64, f64),
}

impl WeightedCongestionCost {
    pub fn new(weights: Vec<f64>, mix: (f64, f64)) -> Result<Self, CostError> {
        if weights.is_empty() {
            return Err(CostError::InvalidParameter("weights must not be empty".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(CostError::InvalidParameter(format!(
                "population weight {w} must be positive"
            )));
        }
        if !(mix.0.is_finite() && mix.1.is_finite() && mix.0 >= 0.0 && mix.1 >= 0.0) {
            return Err(CostError::InvalidParameter(format!(
                "mix ({}, {}) must be finite and nonnegative",
                mix.0, mix.1
            )));
        }
        Ok(Self { weights, mix })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mix(&self) -> (f64, f64) {
        self.mix
    }
}

impl CostModel for WeightedCongestionCost {
    fn name(&self) -> &str {
        "weighted"
    }

    fn kind(&self) -> CostKind {
        CostKind::Weighted
    }

    fn parameters(&self) -> Vec<(String, String)> {
        vec![
            ("weights".into(), format!("{:?}", self.weights)),
            ("mix".into(), format!("{:?}", self.mix)),
        ]
    }

    fn edge_costs(&self, flows: &DMatrix<f64>) -> Result<DMatrix<f64>, CostError> {
        if flows.ncols() != self.weights.len() {
            return Err(CostError::PopulationCount {
                model: self.name().into(),
                expected: self.weights.len(),
                found: flows.ncols(),
            });
        }
        let (shared, own) = self.mix;
        Ok(DMatrix::from_fn(flows.nrows(), flows.ncols(), |k, r| {
            let weighted: f64 = flows.row(k).iter().zip(&self.weights).map(|(j, w)| w * j).sum();
            shared * weighted + own * flows[(k, r)]
        }))
    }
}
