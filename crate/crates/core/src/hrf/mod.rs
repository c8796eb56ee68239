//! Hessian-Riemannian flow for the entropic metric h(x) = Σ x log x.
//!
//! Each population evolves by
//!
//! ```text
//! ϑ̇ = −H(ϑ)⁻¹ F(ϑ) c(ϑ) = diag(ϑ) (Kᵀ y − c),   (K diag(ϑ) Kᵀ) y = K diag(ϑ) c
//! ```
//!
//! so K ϑ̇ = 0 and the trajectory stays on {K ϑ = B, ϑ > 0}. All populations
//! advance together; they interact only through the cost.

mod integrator;

use std::time::Duration;

use nalgebra::DVector;
use thiserror::Error;

use crate::costs::CostError;
use crate::equilibrium::GapCertificate;
use crate::flow::FlowProfile;
use crate::linalg::{solve_spd, weighted_gram};
use crate::network::{KirchhoffSystem, NetworkError};

pub(crate) use integrator::{integrate, Active};
pub use integrator::{rhs, solve, step, HrfState};

#[derive(Debug, Error)]
pub enum HrfError {
    #[error("metric needs strictly positive flows; component {index} is {value}")]
    NonPositive { index: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("could not solve with K diag(ϑ) Kᵀ, even by least squares")]
    Factorization,
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("step halving limit reached at t = {t} (last tried h = {step}); the step is too large for this cost")]
    HalvingExhausted { t: f64, step: f64 },
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("initial point for population {population} is infeasible: {reason}")]
    InitialPoint { population: usize, reason: String },
}

/// Integration and stopping parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Step size h.
    pub step: f64,
    /// Stop at this simulated time if not converged.
    pub max_time: f64,
    /// Converged once ‖ϑ̇‖∞ falls to this.
    pub rhs_tol: f64,
    /// Re-project onto K ϑ = B once drift exceeds this.
    pub conservation_tol: f64,
    /// A tentative state with any component at or below this is rejected.
    pub positivity_floor: f64,
    pub max_halvings: u32,
    /// Record every n-th step (first and last state are always recorded).
    pub record_stride: usize,
    /// Allowed relative uptick of the Bregman Lyapunov function between records.
    pub lyapunov_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            step: 1e-2,
            max_time: 1e3,
            rhs_tol: 1e-6,
            conservation_tol: 1e-10,
            positivity_floor: 1e-12,
            max_halvings: 30,
            record_stride: 10,
            lyapunov_tol: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), HrfError> {
        let positive = [
            ("step", self.step),
            ("max_time", self.max_time),
            ("rhs_tol", self.rhs_tol),
            ("conservation_tol", self.conservation_tol),
            ("positivity_floor", self.positivity_floor),
            ("lyapunov_tol", self.lyapunov_tol),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(HrfError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.record_stride == 0 {
            return Err(HrfError::Config("record_stride must be at least 1".into()));
        }
        Ok(())
    }
}

/// One recorded state of the trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub flows: Vec<DVector<f64>>,
    pub rhs_norm: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub profile: FlowProfile,
    pub converged: bool,
    pub iterations: usize,
    /// Simulated time reached.
    pub time: f64,
    pub rhs_norm: f64,
    /// Largest ‖K_r ϑ^r − B_R^r‖∞ seen after any step.
    pub max_conservation_drift: f64,
    /// Smallest flow component seen after any step.
    pub min_component: f64,
    pub lyapunov_violations: usize,
    pub halvings: usize,
    pub reprojections: usize,
    pub wall_clock: Duration,
    pub trajectory: Vec<TrajectoryPoint>,
    /// Filled in by [`crate::equilibrium::certify`] callers.
    pub certificate: Option<GapCertificate>,
}

impl SolveReport {
    /// d_h(ϑ_final, ϑ(t_i)) summed over populations, for each recorded state.
    pub fn lyapunov_values(&self) -> Vec<f64> {
        let last = self.profile.reduced_all();
        self.trajectory
            .iter()
            .map(|p| {
                last.iter()
                    .zip(&p.flows)
                    .map(|(x, y)| bregman_divergence(x, y).unwrap_or(f64::INFINITY))
                    .sum()
            })
            .collect()
    }
}

/// Number of steps where `values` rises by more than `rel_tol` relative
/// plus `abs_floor`.
pub fn count_upticks(values: &[f64], rel_tol: f64, abs_floor: f64) -> usize {
    values
        .windows(2)
        .filter(|w| w[1] > w[0] * (1.0 + rel_tol) + abs_floor)
        .count()
}

/// Round-off level of a Bregman divergence summed over `flows`: a few ulps
/// of the total mass.
pub fn lyapunov_floor(flows: &[DVector<f64>]) -> f64 {
    64.0 * f64::EPSILON * flows.iter().map(|f| f.sum()).sum::<f64>()
}

fn check_positive(theta: &DVector<f64>) -> Result<(), HrfError> {
    match theta.iter().position(|&x| x.is_nan() || x <= 0.0) {
        Some(index) => Err(HrfError::NonPositive {
            index,
            value: theta[index],
        }),
        None => Ok(()),
    }
}

/// H(ϑ)⁻¹ v = diag(ϑ) v for the entropic metric.
pub fn metric_inverse_apply(theta: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>, HrfError> {
    if theta.len() != v.len() {
        return Err(HrfError::Dimension {
            expected: theta.len(),
            found: v.len(),
        });
    }
    check_positive(theta)?;
    Ok(theta.component_mul(v))
}

/// d = −H⁻¹ F c, the flow direction for cost `c` at `theta`.
pub fn projected_direction(
    theta: &DVector<f64>,
    c: &DVector<f64>,
    k: &KirchhoffSystem,
) -> Result<DVector<f64>, HrfError> {
    if c.len() != theta.len() || k.cols() != theta.len() {
        return Err(HrfError::Dimension {
            expected: theta.len(),
            found: if c.len() != theta.len() { c.len() } else { k.cols() },
        });
    }
    let scaled = metric_inverse_apply(theta, c)?;
    let km = k.matrix();
    let (y, _) = solve_spd(weighted_gram(km, theta), &(km * &scaled)).ok_or(HrfError::Factorization)?;
    Ok(theta.component_mul(&(km.transpose() * y)) - scaled)
}

/// Σ_k x_k log(x_k / y_k) − x_k + y_k, with 0 log 0 = 0.
pub fn bregman_divergence(x: &DVector<f64>, y: &DVector<f64>) -> Result<f64, HrfError> {
    if x.len() != y.len() {
        return Err(HrfError::Dimension {
            expected: y.len(),
            found: x.len(),
        });
    }
    check_positive(y)?;
    let mut d = 0.0;
    for (i, (&xi, &yi)) in x.iter().zip(y.iter()).enumerate() {
        if xi < 0.0 {
            return Err(HrfError::NonPositive { index: i, value: xi });
        }
        let log_term = if xi == 0.0 { 0.0 } else { xi * (xi / yi).ln() };
        d += log_term - xi + yi;
    }
    Ok(d)
}
