//! Sampled check of ⟨C(J₁) − C(J₂), J₁ − J₂⟩ ≥ 0.

use super::{CostError, CostModel};
use crate::flow::FlowProfile;
use crate::network::PopulationSystem;
use crate::sampling::{random_feasible_flows, rng_from_seed};

/// Pairs closer than this (max-norm) are ignored for the strict-positivity minimum.
pub const MIN_SEPARATION: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct MonotonicityReport {
    pub samples: usize,
    /// Smallest inner product over all sampled pairs.
    pub min_inner: f64,
    /// The pair attaining `min_inner`.
    pub witness: (FlowProfile, FlowProfile),
    /// Smallest ⟨ΔC, ΔJ⟩ / ‖ΔJ‖² over pairs separated by at least [`MIN_SEPARATION`].
    pub min_normalized: Option<f64>,
    pub separated_pairs: usize,
}

impl MonotonicityReport {
    /// A negative minimum proves the model is not monotone.
    pub fn certifies_non_monotone(&self) -> bool {
        self.min_inner < 0.0
    }
}

pub fn monotonicity_probe(
    model: &dyn CostModel,
    system: &PopulationSystem,
    samples: usize,
    seed: u64,
) -> Result<MonotonicityReport, CostError> {
    let samples = samples.max(1);
    let mut rng = rng_from_seed(seed);
    let mut draw = || -> Result<FlowProfile, CostError> {
        let flows = random_feasible_flows(system, &mut rng).map_err(|e| CostError::InvalidParameter(e.to_string()))?;
        Ok(system.profile(flows).expect("sampled flows match the layout"))
    };

    let mut best: Option<(f64, FlowProfile, FlowProfile)> = None;
    let mut min_normalized: Option<f64> = None;
    let mut separated_pairs = 0;
    for _ in 0..samples {
        let (a, b) = (draw()?, draw()?);
        let (ca, cb) = (model.evaluate(&a)?, model.evaluate(&b)?);
        let mut inner = 0.0;
        let mut norm2 = 0.0;
        let mut sep = 0.0f64;
        for r in 0..system.population_count() {
            let dj = a.reduced(r) - b.reduced(r);
            inner += (&ca[r] - &cb[r]).dot(&dj);
            norm2 += dj.norm_squared();
            sep = sep.max(dj.amax());
        }
        if sep >= MIN_SEPARATION {
            separated_pairs += 1;
            let q = inner / norm2;
            min_normalized = Some(min_normalized.map_or(q, |m: f64| m.min(q)));
        }
        if best.as_ref().is_none_or(|(m, _, _)| inner < *m) {
            best = Some((inner, a, b));
        }
    }
    let (min_inner, a, b) = best.expect("at least one sample");
    Ok(MonotonicityReport {
        samples,
        min_inner,
        witness: (a, b),
        min_normalized,
        separated_pairs,
    })
}
