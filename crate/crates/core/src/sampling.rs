//! Random feasible flows: convex combinations of interior points and
//! best-response path vertices of each population's flow polytope.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::equilibrium::best_response;
use crate::network::{interior_point, NetworkError, PopulationSystem, ReducedPopulation};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A path-flow extreme point: the best response to random positive costs.
pub fn random_vertex_flow<R: Rng + ?Sized>(reduced: &ReducedPopulation, rng: &mut R) -> DVector<f64> {
    let costs = DVector::from_fn(reduced.n_reduced(), |_, _| rng.random_range(0.5..1.5));
    best_response(&costs, reduced)
        .expect("positive costs admit no negative cycle")
        .flow
}

fn dirichlet<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / sum).collect()
}

/// A strictly positive feasible point, at least 0.2 ε on every edge.
pub fn random_interior_point<R: Rng + ?Sized>(
    reduced: &ReducedPopulation,
    rng: &mut R,
) -> Result<DVector<f64>, NetworkError> {
    let interior = interior_point(reduced, reduced.default_epsilon())?;
    let lambda = rng.random_range(0.2..1.0);
    let w = dirichlet(2, rng);
    let mixed = random_vertex_flow(reduced, rng) * w[0] + random_vertex_flow(reduced, rng) * w[1];
    Ok(interior * lambda + mixed * (1.0 - lambda))
}

/// A feasible point that is sometimes on the boundary (a bare vertex) and
/// otherwise a random convex combination of an interior point and vertices.
pub fn random_feasible_flow<R: Rng + ?Sized>(
    reduced: &ReducedPopulation,
    rng: &mut R,
) -> Result<DVector<f64>, NetworkError> {
    if rng.random_range(0..4) == 0 {
        return Ok(random_vertex_flow(reduced, rng));
    }
    let eps = reduced.default_epsilon() * rng.random_range(0.1..1.0);
    let parts = [
        interior_point(reduced, eps)?,
        random_vertex_flow(reduced, rng),
        random_vertex_flow(reduced, rng),
    ];
    let w = dirichlet(parts.len(), rng);
    Ok(parts
        .iter()
        .zip(w)
        .fold(DVector::zeros(reduced.n_reduced()), |acc, (p, wi)| acc + p * wi))
}

pub fn random_interior_flows(system: &PopulationSystem, seed: u64) -> Result<Vec<DVector<f64>>, NetworkError> {
    let mut rng = rng_from_seed(seed);
    system
        .populations()
        .iter()
        .map(|r| random_interior_point(r, &mut rng))
        .collect()
}

pub fn random_feasible_flows<R: Rng + ?Sized>(
    system: &PopulationSystem,
    rng: &mut R,
) -> Result<Vec<DVector<f64>>, NetworkError> {
    system
        .populations()
        .iter()
        .map(|r| random_feasible_flow(r, rng))
        .collect()
}
