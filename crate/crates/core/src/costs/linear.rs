use nalgebra::DMatrix;

use super::{CostError, CostKind, CostModel};

/// c^r_k = Σ_s J_{k,s}: every population pays the total flow on the edge.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LinearSumCost;

impl CostModel for LinearSumCost {
    fn name(&self) -> &str {
        "linear_sum"
    }

    fn kind(&self) -> CostKind {
        CostKind::LinearSum
    }

    fn edge_costs(&self, flows: &DMatrix<f64>) -> Result<DMatrix<f64>, CostError> {
        let totals = flows.column_sum();
        Ok(DMatrix::from_fn(flows.nrows(), flows.ncols(), |k, _| totals[k]))
    }
}
