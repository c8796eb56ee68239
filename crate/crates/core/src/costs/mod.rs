//! Cost models C(J): per-population, per-edge unit costs as a function of
//! the full flow matrix.

mod emission;
mod linear;
mod probe;
mod weighted;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::flow::FlowProfile;

pub use emission::{
    edge_speed, emission_rate, raw_emission_rate, EdgeCongestion, EmissionClass, EmissionCost, EmissionParams,
    Pollutant, DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_CAPACITY, DEFAULT_FREE_FLOW_SPEED_KMH, TABLE2_A, TABLE2_B,
    TABLE2_PRICES,
};
pub use linear::LinearSumCost;
pub use probe::{monotonicity_probe, MonotonicityReport};
pub use weighted::WeightedCongestionCost;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("cost model `{model}` is configured for {expected} populations, profile has {found}")]
    PopulationCount {
        model: String,
        expected: usize,
        found: usize,
    },
    #[error("cost model `{model}` is configured for {expected} edges, profile has {found}")]
    EdgeCount {
        model: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("edge {edge} has no length; the emission model needs one on every edge")]
    MissingLength { edge: usize },
    #[error("edge capacity must be positive")]
    ZeroCapacity,
    #[error("speed {speed} km/h is not positive")]
    NonPositiveSpeed { speed: f64 },
    #[error("cost evaluated to a non-finite value on edge {edge}, population {population}")]
    NonFinite { edge: usize, population: usize },
}

/// Which bundled family a model belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostKind {
    LinearSum,
    Weighted,
    Emission,
    Custom,
}

/// The map J ↦ C(J).
///
/// Implementors supply [`edge_costs`](CostModel::edge_costs) on the full
/// n × P flow matrix; [`evaluate`](CostModel::evaluate) restricts the result
/// to each population's reduced edges.
pub trait CostModel: Send + Sync {
    fn name(&self) -> &str;

    fn kind(&self) -> CostKind {
        CostKind::Custom
    }

    /// Human-readable parameter record.
    fn parameters(&self) -> Vec<(String, String)> {
        Vec::new()
    }

    /// Unit cost c^r_k for every edge k and population r (n × P).
    fn edge_costs(&self, flows: &DMatrix<f64>) -> Result<DMatrix<f64>, CostError>;

    /// Per-population reduced cost vectors, same index space as ϑ^r.
    fn evaluate(&self, profile: &FlowProfile) -> Result<Vec<DVector<f64>>, CostError> {
        let costs = self.edge_costs(&profile.full_matrix())?;
        let layout = profile.layout();
        (0..profile.population_count())
            .map(|r| {
                let map = layout.edge_map(r);
                let mut out = DVector::zeros(map.len());
                for (i, &k) in map.iter().enumerate() {
                    let c = costs[(k, r)];
                    if !c.is_finite() {
                        return Err(CostError::NonFinite { edge: k, population: r });
                    }
                    out[i] = c;
                }
                Ok(out)
            })
            .collect()
    }
}

impl<T: CostModel + ?Sized> CostModel for Box<T> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn kind(&self) -> CostKind {
        (**self).kind()
    }
    fn parameters(&self) -> Vec<(String, String)> {
        (**self).parameters()
    }
    fn edge_costs(&self, flows: &DMatrix<f64>) -> Result<DMatrix<f64>, CostError> {
        (**self).edge_costs(flows)
    }
    fn evaluate(&self, profile: &FlowProfile) -> Result<Vec<DVector<f64>>, CostError> {
        (**self).evaluate(profile)
    }
}

/// Σ_r ⟨c^r(J), ϑ^r⟩.
pub fn total_cost(model: &dyn CostModel, profile: &FlowProfile) -> Result<f64, CostError> {
    let costs = model.evaluate(profile)?;
    Ok(profile.inner(&costs))
}
