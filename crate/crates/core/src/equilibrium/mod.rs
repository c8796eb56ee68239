//! Gap-function certification of candidate equilibria, plus independent
//! oracles used to cross-check the flow solver.

mod best_response;
mod gauss_seidel;
mod qp;

use nalgebra::DVector;
use thiserror::Error;

use crate::costs::{CostError, CostModel};
use crate::flow::FlowProfile;
use crate::hrf::HrfError;
use crate::network::PopulationSystem;

pub use best_response::{best_response, BestResponse};
pub use gauss_seidel::{gauss_seidel_oracle, GaussSeidelConfig, GaussSeidelResult};
pub use qp::{potential_qp_oracle, QpResult};

/// Relative gap accepted by default.
pub const DEFAULT_GAP_TOL: f64 = 1e-4;

/// Gaps below −(this) · (1 + |⟨c, ϑ⟩|) mean the best response was not optimal.
const NEGATIVE_GAP_FLOOR: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum EquilibriumError {
    #[error("negative-cost cycle through vertex {vertex}; shortest paths are unbounded")]
    NegativeCycle { vertex: usize },
    #[error("population {population}: profile violates Kirchhoff's law (residual {residual:e})")]
    Infeasible { population: usize, residual: f64 },
    #[error("population {population}: gap {gap:e} is negative beyond round-off")]
    NegativeGap { population: usize, gap: f64 },
    #[error("cost vector has {found} entries, population has {expected} reduced edges")]
    Dimension { expected: usize, found: usize },
    #[error("Gauss-Seidel did not stabilise within {rounds} rounds (last change {last_change:e})")]
    RoundLimit { rounds: usize, last_change: f64 },
    #[error("potential QP oracle needs the linear-sum cost, got `{0}`")]
    NonPotentialCost(String),
    #[error("potential QP oracle needs every population to use all network edges (`{0}` is restricted)")]
    RestrictedPopulation(String),
    #[error("QP active-set iteration did not terminate")]
    QpStalled,
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Hrf(#[from] HrfError),
}

/// Per-population VI gaps g_r = ⟨c^r, ϑ^r⟩ − min over feasible ϑ of ⟨c^r, ϑ⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct GapCertificate {
    pub gaps: Vec<f64>,
    /// g_r / (1 + |⟨c^r, ϑ^r⟩|).
    pub relative_gaps: Vec<f64>,
    /// ⟨c^r, ϑ^r⟩ at the frozen costs.
    pub costs: Vec<f64>,
    /// Σ_r g_r, the Wardrop-level gap.
    pub total_gap: f64,
    /// Best-response flows used as witnesses.
    pub witnesses: Vec<DVector<f64>>,
    pub tolerance: f64,
    pub passed: bool,
}

impl GapCertificate {
    pub fn max_relative_gap(&self) -> f64 {
        self.relative_gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Freezes C(J) and compares each population's cost with its best response.
pub fn certify(
    profile: &FlowProfile,
    model: &dyn CostModel,
    system: &PopulationSystem,
    tol: f64,
) -> Result<GapCertificate, EquilibriumError> {
    for (r, red) in system.populations().iter().enumerate() {
        let residual = red.kirchhoff().residual(profile.reduced(r));
        let scale = red.kirchhoff().inflow().amax().max(1.0);
        if residual > 1e-6 * scale {
            return Err(EquilibriumError::Infeasible {
                population: r,
                residual,
            });
        }
    }
    let costs = model.evaluate(profile)?;
    let mut cert = GapCertificate {
        gaps: Vec::new(),
        relative_gaps: Vec::new(),
        costs: Vec::new(),
        total_gap: 0.0,
        witnesses: Vec::new(),
        tolerance: tol,
        passed: true,
    };
    for (r, red) in system.populations().iter().enumerate() {
        let value = costs[r].dot(profile.reduced(r));
        let br = best_response(&costs[r], red)?;
        let gap = value - br.value;
        let scale = 1.0 + value.abs();
        if gap < -NEGATIVE_GAP_FLOOR * scale {
            return Err(EquilibriumError::NegativeGap { population: r, gap });
        }
        let relative = gap / scale;
        cert.passed &= relative <= tol;
        cert.gaps.push(gap);
        cert.relative_gaps.push(relative);
        cert.costs.push(value);
        cert.total_gap += gap;
        cert.witnesses.push(br.flow);
    }
    Ok(cert)
}
