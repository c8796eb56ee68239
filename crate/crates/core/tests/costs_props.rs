mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use wardrop_core::costs::{
    edge_speed, monotonicity_probe, raw_emission_rate, EdgeCongestion, EmissionClass, LinearSumCost, Pollutant,
};
use wardrop_core::sampling::{random_feasible_flows, rng_from_seed};
use wardrop_core::{CostError, CostModel, FlowProfile, PopulationSystem};

struct Negated;

impl CostModel for Negated {
    fn name(&self) -> &str {
        "negated"
    }

    fn edge_costs(&self, j: &DMatrix<f64>) -> Result<DMatrix<f64>, CostError> {
        Ok(-j)
    }
}

#[test]
fn linear_sum_is_monotone_on_samples() {
    let (sys, model) = scenario1();
    let report = monotonicity_probe(&model, &sys, 1000, 1).unwrap();
    assert!(report.min_inner >= -1e-10, "{}", report.min_inner);
    assert!(!report.certifies_non_monotone() || report.min_inner > -1e-10);
}

#[test]
fn weighted_and_emission_are_strictly_monotone_on_samples() {
    let (sys, model) = scenario2();
    let report = monotonicity_probe(&model, &sys, 1000, 2).unwrap();
    assert!(report.min_inner >= -1e-10);
    assert!(report.separated_pairs > 900);
    assert!(report.min_normalized.unwrap() > 0.0);

    let (sys, model) = scenario3();
    let report = monotonicity_probe(&model, &sys, 1000, 3).unwrap();
    assert!(report.min_inner >= -1e-10);
    assert!(report.min_normalized.unwrap() > 0.0);
}

#[test]
fn negated_flow_cost_is_caught_with_a_witness() {
    let (sys, _) = scenario1();
    let report = monotonicity_probe(&Negated, &sys, 200, 4).unwrap();
    assert!(report.certifies_non_monotone());
    let (a, b) = &report.witness;
    let (ca, cb) = (Negated.evaluate(a).unwrap(), Negated.evaluate(b).unwrap());
    let inner: f64 = (0..2)
        .map(|r| (&ca[r] - &cb[r]).dot(&(a.reduced(r) - b.reduced(r))))
        .sum();
    assert_eq!(inner, report.min_inner);
}

#[test]
fn linear_sum_ignores_population_labels() {
    let mut rng = rng_from_seed(5);
    for _ in 0..50 {
        let j = DMatrix::from_fn(15, 2, |_, _| rand::Rng::random_range(&mut rng, 0.0..100.0));
        let swapped = DMatrix::from_fn(15, 2, |k, r| j[(k, 1 - r)]);
        let c = LinearSumCost.edge_costs(&j).unwrap();
        assert_eq!(c, LinearSumCost.edge_costs(&swapped).unwrap());
        assert_eq!(c.column(0), c.column(1));
    }
}

/// |C(J + δ d) − C(J)| ≤ L δ along random feasible directions, with L read
/// off a coarser difference.
fn check_lipschitz(sys: &PopulationSystem, model: &dyn CostModel, seed: u64) {
    let mut rng = rng_from_seed(seed);
    for _ in 0..100 {
        let a = random_feasible_flows(sys, &mut rng).unwrap();
        let b = random_feasible_flows(sys, &mut rng).unwrap();
        let at = |t: f64| -> Vec<DVector<f64>> {
            let flows = a.iter().zip(&b).map(|(x, y)| x * (1.0 - t) + y * t).collect();
            model.evaluate(&sys.profile(flows).unwrap()).unwrap()
        };
        let diff =
            |p: &[DVector<f64>], q: &[DVector<f64>]| p.iter().zip(q).map(|(x, y)| (x - y).amax()).fold(0.0, f64::max);
        let base = at(0.5);
        let coarse = diff(&at(0.5 + 1e-3), &base) / 1e-3;
        let fine = diff(&at(0.5 + 1e-6), &base) / 1e-6;
        assert!(coarse.is_finite() && fine.is_finite());
        assert!(
            fine <= 2.0 * coarse + 1e-6,
            "{} fine {fine} coarse {coarse}",
            model.name()
        );
    }
}

#[test]
fn cost_models_are_lipschitz_along_feasible_segments() {
    let (s, m) = scenario1();
    check_lipschitz(&s, &m, 6);
    let (s, m) = scenario2();
    check_lipschitz(&s, &m, 7);
    let (s, m) = scenario3();
    check_lipschitz(&s, &m, 8);
}

#[test]
fn costs_are_finite_on_extreme_feasible_points() {
    let (sys, model) = scenario3();
    let mut rng = rng_from_seed(9);
    for _ in 0..200 {
        let flows = random_feasible_flows(&sys, &mut rng).unwrap();
        let profile: FlowProfile = sys.profile(flows).unwrap();
        for c in model.evaluate(&profile).unwrap() {
            assert!(c.iter().all(|x| x.is_finite() && *x >= 0.0));
        }
    }
}

fn congestion() -> EdgeCongestion {
    EdgeCongestion {
        free_flow_time_h: 0.02,
        alpha: 5.0,
        beta: 3.0,
        capacity: 50.0,
    }
}

proptest! {
    #[test]
    fn speed_is_strictly_decreasing(j in 0.0f64..500.0, dj in 1e-3f64..50.0, s in 0.1f64..20.0) {
        let e = EdgeCongestion { free_flow_time_h: s / 50.0, ..congestion() };
        let v0 = edge_speed(j, s, &e).unwrap();
        let v1 = edge_speed(j + dj, s, &e).unwrap();
        prop_assert!(v1 < v0);
        prop_assert!((edge_speed(0.0, s, &e).unwrap() - 50.0).abs() < 1e-9);
    }

    /// On the unclamped region (rate > 0) every rate falls as speed rises.
    #[test]
    fn emission_rates_fall_with_speed(v in 0.5f64..120.0, dv in 1e-3f64..10.0, truck in any::<bool>()) {
        let class = if truck { EmissionClass::standard_car().scaled(3.0) } else { EmissionClass::standard_car() };
        for p in Pollutant::ALL {
            let (lo, hi) = (raw_emission_rate(v, &class, p).unwrap(), raw_emission_rate(v + dv, &class, p).unwrap());
            if hi > 0.0 {
                prop_assert!(hi < lo);
            }
        }
    }
}
