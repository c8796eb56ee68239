mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use wardrop_core::equilibrium::{certify, DEFAULT_GAP_TOL};
use wardrop_core::hrf::{bregman_divergence, projected_direction, rhs, solve, step, HrfState};
use wardrop_core::network::build_kirchhoff;
use wardrop_core::sampling::random_interior_flows;
use wardrop_core::{CostError, CostModel, HrfError, PopulationSystem, SolverConfig};

struct Ones;

impl CostModel for Ones {
    fn name(&self) -> &str {
        "ones"
    }

    fn edge_costs(&self, j: &DMatrix<f64>) -> Result<DMatrix<f64>, CostError> {
        Ok(DMatrix::from_element(j.nrows(), j.ncols(), 1.0))
    }
}

fn max_drift(system: &PopulationSystem, flows: &[DVector<f64>]) -> f64 {
    system.conservation_residual(flows)
}

fn log_uniform() -> impl Strategy<Value = f64> {
    (-3.0f64..2.0).prop_map(|e| 10f64.powf(e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn projected_direction_conserves_flow(
        theta in prop::collection::vec(log_uniform(), 15),
        c in prop::collection::vec(-100.0f64..100.0, 15),
    ) {
        let net = ten_vertex();
        let k = build_kirchhoff(&net, &[(vid(&net, 1), 100.0), (vid(&net, 9), 100.0)]).unwrap();
        let theta = DVector::from_vec(theta);
        let c = DVector::from_vec(c);
        let d = projected_direction(&theta, &c, &k).unwrap();
        let scale = theta.component_mul(&c).amax().max(f64::MIN_POSITIVE);
        prop_assert!((k.matrix() * d).amax() <= 1e-10 * scale);
    }

    #[test]
    fn small_step_stays_interior_and_conserves(seed in any::<u64>(), h in 1e-6f64..1e-3, which in 0usize..3) {
        let (system, model): (PopulationSystem, Box<dyn CostModel>) = match which {
            0 => { let (s, m) = scenario1(); (s, Box::new(m)) }
            1 => { let (s, m) = scenario2(); (s, Box::new(m)) }
            _ => { let (s, m) = scenario3(); (s, Box::new(m)) }
        };
        let flows = random_interior_flows(&system, seed).unwrap();
        let config = SolverConfig { step: h, ..Default::default() };
        let next = step(&system, &model, &HrfState::new(flows), &config).unwrap();
        prop_assert!(next.flows.iter().all(|f| f.min() > config.positivity_floor));
        prop_assert!(max_drift(&system, &next.flows) <= 1e-10);
    }

    #[test]
    fn bregman_is_positive_off_the_diagonal(
        x in prop::collection::vec(0.0f64..10.0, 6),
        y in prop::collection::vec(0.01f64..10.0, 6),
    ) {
        let (x, y) = (DVector::from_vec(x), DVector::from_vec(y));
        prop_assume!((&x - &y).amax() > 1e-6);
        prop_assert!(bregman_divergence(&x, &y).unwrap() > 0.0);
    }
}

#[test]
fn uniform_cost_rhs_is_conservative_but_not_zero() {
    let (sys, _) = scenario1();
    let state = HrfState::new(sys.interior_profile().unwrap());
    let d = rhs(&sys, &Ones, &state).unwrap();
    assert!(d.iter().any(|x| x.amax() > 1e-3));
    for (r, x) in d.iter().enumerate() {
        assert!((sys.population(r).kirchhoff().matrix() * x).amax() < 1e-10);
    }
}

#[test]
fn huge_steps_halve_or_fail_but_never_go_negative() {
    let (sys, model) = scenario1();
    let state = HrfState::new(sys.interior_profile().unwrap());
    let mut halved = 0;
    for (h, max_halvings) in [(1.0, 30), (10.0, 30), (1e3, 30), (1e3, 2)] {
        let config = SolverConfig {
            step: h,
            max_halvings,
            ..Default::default()
        };
        match step(&sys, &model, &state, &config) {
            Ok(next) => {
                assert!(next.flows.iter().all(|f| f.min() > config.positivity_floor));
                assert!(next.t < h, "h = {h} should have been halved");
                halved += 1;
            }
            Err(HrfError::HalvingExhausted { .. }) => assert_eq!(max_halvings, 2),
            Err(e) => panic!("unexpected error {e}"),
        }
    }
    assert_eq!(halved, 3);
}

/// Integrates [0, span] with `n` equal steps.
fn integrate_fixed(
    sys: &PopulationSystem,
    model: &dyn CostModel,
    start: &HrfState,
    span: f64,
    n: usize,
) -> Vec<DVector<f64>> {
    let config = SolverConfig {
        step: span / n as f64,
        conservation_tol: 1.0,
        ..Default::default()
    };
    let mut s = start.clone();
    for _ in 0..n {
        s = step(sys, model, &s, &config).unwrap();
    }
    s.flows
}

fn distance(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).amax()).fold(0.0, f64::max)
}

/// Third order: covering a fixed interval with half-size steps cuts the
/// error by 2³; a single step's local error scales as h⁴.
#[test]
fn step_order_is_three() {
    let (sys, model) = scenario1();
    let start = HrfState::new(sys.interior_profile().unwrap());
    let h = 5e-4;
    let reference = integrate_fixed(&sys, &model, &start, h, 512);
    let one = distance(&integrate_fixed(&sys, &model, &start, h, 1), &reference);
    let two = distance(&integrate_fixed(&sys, &model, &start, h, 2), &reference);
    let interval_ratio = one / two;
    assert!((7.0..9.0).contains(&interval_ratio), "interval ratio {interval_ratio}");

    let half_reference = integrate_fixed(&sys, &model, &start, h / 2.0, 256);
    let half = distance(&integrate_fixed(&sys, &model, &start, h / 2.0, 1), &half_reference);
    let local_ratio = one / half;
    assert!((14.0..18.0).contains(&local_ratio), "local ratio {local_ratio}");
}

#[test]
fn equilibrium_is_stationary() {
    let (sys, model) = scenario2();
    let config = SolverConfig::default();
    let report = solve(&sys, &model, &config, None).unwrap();
    assert!(report.converged);
    let state = HrfState::new(report.profile.reduced_all().to_vec());
    let d = rhs(&sys, &model, &state).unwrap();
    assert!(d.iter().all(|x| x.amax() <= config.rhs_tol));
    assert!(certify(&report.profile, &model, &sys, DEFAULT_GAP_TOL).unwrap().passed);
}

#[test]
fn trajectories_conserve_flow_and_stay_positive() {
    let config = SolverConfig::default();
    let check = |sys: &PopulationSystem, model: &dyn CostModel| {
        let report = solve(sys, model, &config, None).unwrap();
        assert!(report.converged);
        assert!(report.max_conservation_drift <= 1e-8);
        assert!(report.min_component >= config.positivity_floor);
        for p in &report.trajectory {
            assert!(max_drift(sys, &p.flows) <= 1e-8);
            assert!(p.flows.iter().all(|f| f.min() >= config.positivity_floor));
        }
        report
    };
    let (s, m) = scenario1();
    check(&s, &m);
    let (s, m) = scenario3();
    let report = check(&s, &m);
    assert_eq!(report.lyapunov_violations, 0);
}

#[test]
fn solves_from_different_starts_agree_on_scenario3() {
    let (sys, model) = scenario3();
    let config = SolverConfig::default();
    let a = solve(&sys, &model, &config, Some(random_interior_flows(&sys, 11).unwrap())).unwrap();
    let b = solve(&sys, &model, &config, Some(random_interior_flows(&sys, 12).unwrap())).unwrap();
    assert!(a.converged && b.converged);
    for r in 0..2 {
        assert!((a.profile.full_population(r) - b.profile.full_population(r)).amax() <= 1e-3);
    }
}
