use nalgebra::DVector;

use super::{certify, EquilibriumError, DEFAULT_GAP_TOL};
use crate::costs::CostModel;
use crate::flow::FlowProfile;
use crate::hrf::{integrate, Active, SolverConfig};
use crate::network::PopulationSystem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussSeidelConfig {
    pub rounds: usize,
    /// Stop once no flow moved by more than this in a whole round and the
    /// result certifies at `gap_tol`.
    pub inner_tol: f64,
    pub gap_tol: f64,
    /// Used for each single-population sub-solve.
    pub solver: SolverConfig,
}

impl Default for GaussSeidelConfig {
    fn default() -> Self {
        Self {
            rounds: 100,
            inner_tol: 1e-6,
            gap_tol: DEFAULT_GAP_TOL,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GaussSeidelResult {
    pub profile: FlowProfile,
    pub rounds: usize,
    pub last_change: f64,
}

/// Best-response sweeps: each population in turn solves its own VI with the
/// others frozen, using the flow solver restricted to that population.
pub fn gauss_seidel_oracle(
    system: &PopulationSystem,
    model: &dyn CostModel,
    config: &GaussSeidelConfig,
    initial: Option<Vec<DVector<f64>>>,
) -> Result<GaussSeidelResult, EquilibriumError> {
    let mut flows = match initial {
        Some(f) => f,
        None => system.interior_profile().map_err(|e| EquilibriumError::Hrf(e.into()))?,
    };
    let mut last_change = f64::INFINITY;
    for round in 1..=config.rounds {
        let mut change = 0.0f64;
        for r in 0..system.population_count() {
            let report = integrate(system, model, &config.solver, flows.clone(), Active::Only(r))?;
            let mut updated = report.profile.into_reduced();
            let moved = std::mem::take(&mut updated[r]);
            change = change.max((&moved - &flows[r]).amax());
            flows[r] = moved;
        }
        last_change = change;
        if system.population_count() == 1 || change < config.inner_tol {
            let profile = system
                .profile(flows.clone())
                .map_err(|e| EquilibriumError::Hrf(crate::hrf::HrfError::Config(e.to_string())))?;
            // a sub-solve started next to the boundary can stop at once with a
            // tiny RHS; only a certified profile counts as settled
            if system.population_count() == 1 || certify(&profile, model, system, config.gap_tol)?.passed {
                return Ok(GaussSeidelResult {
                    profile,
                    rounds: round,
                    last_change,
                });
            }
        }
    }
    Err(EquilibriumError::RoundLimit {
        rounds: config.rounds,
        last_change,
    })
}
