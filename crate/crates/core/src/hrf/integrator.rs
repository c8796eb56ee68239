use std::time::Instant;

use nalgebra::DVector;

use super::{
    check_positive, count_upticks, lyapunov_floor, projected_direction, HrfError, SolveReport, SolverConfig,
    TrajectoryPoint,
};
use crate::costs::CostModel;
use crate::linalg::{solve_spd, weighted_gram};
use crate::network::PopulationSystem;

/// Bogacki–Shampine third-order weights.
const C2: f64 = 0.5;
const C3: f64 = 0.75;
const B1: f64 = 2.0 / 9.0;
const B2: f64 = 1.0 / 3.0;
const B3: f64 = 4.0 / 9.0;

/// Which populations move; the rest are held frozen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Active {
    All,
    Only(usize),
}

impl Active {
    fn includes(self, r: usize) -> bool {
        match self {
            Active::All => true,
            Active::Only(s) => s == r,
        }
    }
}

/// Reduced flows of every population at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct HrfState {
    pub flows: Vec<DVector<f64>>,
    pub t: f64,
    /// ‖ϑ̇‖∞ at this state, if known.
    pub rhs_norm: Option<f64>,
}

impl HrfState {
    pub fn new(flows: Vec<DVector<f64>>) -> Self {
        Self {
            flows,
            t: 0.0,
            rhs_norm: None,
        }
    }
}

fn max_norm(v: &[DVector<f64>]) -> f64 {
    v.iter().map(|x| x.amax()).fold(0.0, f64::max)
}

fn rhs_active(
    system: &PopulationSystem,
    model: &dyn CostModel,
    flows: &[DVector<f64>],
    active: Active,
) -> Result<Vec<DVector<f64>>, HrfError> {
    for f in flows {
        check_positive(f)?;
    }
    let profile = system
        .profile(flows.to_vec())
        .map_err(|e| HrfError::Config(e.to_string()))?;
    let costs = model.evaluate(&profile)?;
    flows
        .iter()
        .zip(costs.iter())
        .enumerate()
        .map(|(r, (theta, c))| {
            if active.includes(r) {
                projected_direction(theta, c, system.population(r).kirchhoff())
            } else {
                Ok(DVector::zeros(theta.len()))
            }
        })
        .collect()
}

/// ϑ̇ for every population; costs are evaluated on the coupled profile.
pub fn rhs(system: &PopulationSystem, model: &dyn CostModel, state: &HrfState) -> Result<Vec<DVector<f64>>, HrfError> {
    rhs_active(system, model, &state.flows, Active::All)
}

fn axpy(base: &[DVector<f64>], terms: &[(f64, &[DVector<f64>])]) -> Vec<DVector<f64>> {
    base.iter()
        .enumerate()
        .map(|(r, b)| {
            let mut out = b.clone();
            for (w, k) in terms {
                out.axpy(*w, &k[r], 1.0);
            }
            out
        })
        .collect()
}

fn above_floor(flows: &[DVector<f64>], floor: f64) -> bool {
    flows.iter().all(|f| f.iter().all(|&x| x > floor))
}

/// Where a component is parked once its decay has reached the floor.
const PARK_FACTOR: f64 = 2.0;

/// Raises stage components that crossed the floor only because the local
/// decay ϑ_k exp(τ k1_k / ϑ_k) itself ends there; a genuine overshoot is
/// left alone so that the caller halves h.
fn park_tails(stage: &mut [DVector<f64>], y: &[DVector<f64>], k1: &[DVector<f64>], tau: f64, floor: f64) {
    for ((s, y), k) in stage.iter_mut().zip(y).zip(k1) {
        for i in 0..s.len() {
            if s[i] <= floor && y[i] * (tau * k[i] / y[i]).exp() <= PARK_FACTOR * floor {
                s[i] = PARK_FACTOR * floor;
            }
        }
    }
}

struct Advance {
    flows: Vec<DVector<f64>>,
    step: f64,
    halvings: usize,
    reprojected: bool,
}

/// One Bogacki–Shampine step from `flows` with slope `k1`, halving h until
/// every stage stays above the positivity floor.
fn advance(
    system: &PopulationSystem,
    model: &dyn CostModel,
    flows: &[DVector<f64>],
    k1: &[DVector<f64>],
    t: f64,
    config: &SolverConfig,
    active: Active,
) -> Result<Advance, HrfError> {
    let mut h = config.step;
    for halvings in 0..=config.max_halvings as usize {
        if let Some(next) = try_step(system, model, flows, k1, h, config, active)? {
            let (next, reprojected) = reproject(system, next, config, active)?;
            return Ok(Advance {
                flows: next,
                step: h,
                halvings,
                reprojected,
            });
        }
        h *= 0.5;
    }
    Err(HrfError::HalvingExhausted { t, step: h * 2.0 })
}

fn try_step(
    system: &PopulationSystem,
    model: &dyn CostModel,
    y: &[DVector<f64>],
    k1: &[DVector<f64>],
    h: f64,
    config: &SolverConfig,
    active: Active,
) -> Result<Option<Vec<DVector<f64>>>, HrfError> {
    let floor = config.positivity_floor;
    let mut y2 = axpy(y, &[(C2 * h, k1)]);
    park_tails(&mut y2, y, k1, C2 * h, floor);
    if !above_floor(&y2, floor) {
        return Ok(None);
    }
    let k2 = rhs_active(system, model, &y2, active)?;
    let mut y3 = axpy(y, &[(C3 * h, &k2)]);
    park_tails(&mut y3, y, k1, C3 * h, floor);
    if !above_floor(&y3, floor) {
        return Ok(None);
    }
    let k3 = rhs_active(system, model, &y3, active)?;
    let mut next = axpy(y, &[(B1 * h, k1), (B2 * h, &k2), (B3 * h, &k3)]);
    park_tails(&mut next, y, k1, h, floor);
    Ok(above_floor(&next, floor).then_some(next))
}

/// Pulls drifted populations back onto K ϑ = B along the metric,
/// ϑ ← ϑ − diag(ϑ) Kᵀ (K diag(ϑ) Kᵀ)⁻¹ (K ϑ − B).
fn reproject(
    system: &PopulationSystem,
    mut flows: Vec<DVector<f64>>,
    config: &SolverConfig,
    active: Active,
) -> Result<(Vec<DVector<f64>>, bool), HrfError> {
    let mut any = false;
    for (r, theta) in flows.iter_mut().enumerate() {
        if !active.includes(r) {
            continue;
        }
        let k = system.population(r).kirchhoff();
        let residual = k.matrix() * &*theta - k.inflow();
        if residual.amax() <= config.conservation_tol {
            continue;
        }
        let (z, _) = solve_spd(weighted_gram(k.matrix(), theta), &residual).ok_or(HrfError::Factorization)?;
        let corrected = &*theta - theta.component_mul(&(k.matrix().transpose() * z));
        if corrected.iter().all(|&x| x > config.positivity_floor) {
            *theta = corrected;
            any = true;
        }
    }
    Ok((flows, any))
}

/// Advances every population by one step of size `config.step` (or a halved
/// one if positivity demands it).
pub fn step(
    system: &PopulationSystem,
    model: &dyn CostModel,
    state: &HrfState,
    config: &SolverConfig,
) -> Result<HrfState, HrfError> {
    let k1 = rhs(system, model, state)?;
    let adv = advance(system, model, &state.flows, &k1, state.t, config, Active::All)?;
    Ok(HrfState {
        flows: adv.flows,
        t: state.t + adv.step,
        rhs_norm: Some(max_norm(&k1)),
    })
}

/// Integrates from `initial` (or the default interior point) until
/// ‖ϑ̇‖∞ ≤ `rhs_tol` or `max_time`.
///
/// Non-convergence is not an error: the report carries `converged = false`
/// and the last state.
pub fn solve(
    system: &PopulationSystem,
    model: &dyn CostModel,
    config: &SolverConfig,
    initial: Option<Vec<DVector<f64>>>,
) -> Result<SolveReport, HrfError> {
    let initial = match initial {
        Some(flows) => flows,
        None => system.interior_profile()?,
    };
    integrate(system, model, config, initial, Active::All)
}

pub(crate) fn integrate(
    system: &PopulationSystem,
    model: &dyn CostModel,
    config: &SolverConfig,
    initial: Vec<DVector<f64>>,
    active: Active,
) -> Result<SolveReport, HrfError> {
    config.validate()?;
    check_initial(system, &initial)?;
    let started = Instant::now();

    let mut flows = initial;
    let mut t = 0.0;
    let mut iterations = 0;
    let mut halvings = 0;
    let mut reprojections = 0;
    let mut max_drift = system.conservation_residual(&flows);
    let mut min_component = min_entry(&flows);

    let mut k1 = rhs_active(system, model, &flows, active)?;
    let mut norm = max_norm(&k1);
    let mut trajectory = vec![TrajectoryPoint {
        t,
        flows: flows.clone(),
        rhs_norm: norm,
    }];

    let converged = loop {
        if norm <= config.rhs_tol {
            break true;
        }
        if t >= config.max_time {
            break false;
        }
        let adv = advance(system, model, &flows, &k1, t, config, active)?;
        flows = adv.flows;
        t += adv.step;
        iterations += 1;
        halvings += adv.halvings;
        reprojections += usize::from(adv.reprojected);
        max_drift = max_drift.max(system.conservation_residual(&flows));
        min_component = min_component.min(min_entry(&flows));

        k1 = rhs_active(system, model, &flows, active)?;
        norm = max_norm(&k1);
        if iterations % config.record_stride == 0 {
            trajectory.push(TrajectoryPoint {
                t,
                flows: flows.clone(),
                rhs_norm: norm,
            });
        }
    };
    if trajectory.last().map(|p| p.t) != Some(t) {
        trajectory.push(TrajectoryPoint {
            t,
            flows: flows.clone(),
            rhs_norm: norm,
        });
    }

    let profile = system.profile(flows).map_err(|e| HrfError::Config(e.to_string()))?;
    let mut report = SolveReport {
        profile,
        converged,
        iterations,
        time: t,
        rhs_norm: norm,
        max_conservation_drift: max_drift,
        min_component,
        lyapunov_violations: 0,
        halvings,
        reprojections,
        wall_clock: started.elapsed(),
        trajectory,
        certificate: None,
    };
    let floor = lyapunov_floor(report.profile.reduced_all());
    report.lyapunov_violations = count_upticks(&report.lyapunov_values(), config.lyapunov_tol, floor);
    Ok(report)
}

fn min_entry(flows: &[DVector<f64>]) -> f64 {
    flows.iter().map(|f| f.min()).fold(f64::INFINITY, f64::min)
}

fn check_initial(system: &PopulationSystem, flows: &[DVector<f64>]) -> Result<(), HrfError> {
    if flows.len() != system.population_count() {
        return Err(HrfError::Dimension {
            expected: system.population_count(),
            found: flows.len(),
        });
    }
    for (r, (f, red)) in flows.iter().zip(system.populations()).enumerate() {
        if f.len() != red.n_reduced() {
            return Err(HrfError::InitialPoint {
                population: r,
                reason: format!("expected {} reduced edges, found {}", red.n_reduced(), f.len()),
            });
        }
        if let Some(i) = f.iter().position(|&x| x.is_nan() || x <= 0.0) {
            return Err(HrfError::InitialPoint {
                population: r,
                reason: format!("component {i} is {} (must be > 0)", f[i]),
            });
        }
        let residual = red.kirchhoff().residual(f);
        let scale = red.kirchhoff().inflow().amax().max(1.0);
        if residual > 1e-9 * scale {
            return Err(HrfError::InitialPoint {
                population: r,
                reason: format!("Kirchhoff residual {residual:e}"),
            });
        }
    }
    Ok(())
}
