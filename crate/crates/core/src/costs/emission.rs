//! Speed-dependent emission pricing.
//!
//! Edge speed follows a BPR-style curve in the total edge flow; each vehicle
//! class emits `a / v + b` grams per km of each pollutant, priced per kg.

use nalgebra::DMatrix;

use super::{CostError, CostKind, CostModel};
use crate::flow::FlowProfile;
use crate::network::NetworkSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pollutant {
    /// Fuel consumption.
    Fc,
    Hc,
    Nox,
    Co,
    Co2,
}

impl Pollutant {
    pub const ALL: [Pollutant; 5] = [
        Pollutant::Fc,
        Pollutant::Hc,
        Pollutant::Nox,
        Pollutant::Co,
        Pollutant::Co2,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Pollutant::Fc => "FC",
            Pollutant::Hc => "HC",
            Pollutant::Nox => "NOx",
            Pollutant::Co => "CO",
            Pollutant::Co2 => "CO2",
        }
    }
}

/// Speed coefficients a (g/km · km/h) for a standard car, in [`Pollutant::ALL`] order.
pub const TABLE2_A: [f64; 5] = [1.56e3, 1.08e1, 2.00e0, 8.08e1, 4.78e3];
/// Offsets b (g/km) for a standard car.
pub const TABLE2_B: [f64; 5] = [3.54e1, -7.11e-3, -4.49e-2, 1.16e0, 1.11e2];
/// Prices w ($/kg).
pub const TABLE2_PRICES: [f64; 5] = [1.0321, 12.91, 14.54, 0.37, 0.02];

pub const DEFAULT_FREE_FLOW_SPEED_KMH: f64 = 50.0;
pub const DEFAULT_ALPHA: f64 = 5.0;
pub const DEFAULT_BETA: f64 = 3.0;
pub const DEFAULT_CAPACITY: f64 = 50.0;
const GRAMS_PER_KG: f64 = 1000.0;

/// Emission coefficients of one vehicle class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmissionClass {
    pub a: [f64; 5],
    pub b: [f64; 5],
}

impl EmissionClass {
    pub fn standard_car() -> Self {
        Self {
            a: TABLE2_A,
            b: TABLE2_B,
        }
    }

    /// Every rate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            a: self.a.map(|x| x * factor),
            b: self.b.map(|x| x * factor),
        }
    }
}

/// Congestion parameters of one edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeCongestion {
    /// t_k in hours.
    pub free_flow_time_h: f64,
    pub alpha: f64,
    pub beta: f64,
    /// κ_k in flow units.
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmissionParams {
    /// One class per population.
    pub classes: Vec<EmissionClass>,
    pub prices: [f64; 5],
    /// One entry per network edge.
    pub edges: Vec<EdgeCongestion>,
}

impl EmissionParams {
    /// The standard-car table with per-population multipliers, free-flow
    /// speed 50 km/h (t_k = s_k / 50), α = 5, β = 3, κ = 50 on every edge.
    pub fn paper_table2(lengths: &[f64], multipliers: &[f64]) -> Self {
        let car = EmissionClass::standard_car();
        Self {
            classes: multipliers.iter().map(|&m| car.scaled(m)).collect(),
            prices: TABLE2_PRICES,
            edges: lengths
                .iter()
                .map(|&s| EdgeCongestion {
                    free_flow_time_h: s / DEFAULT_FREE_FLOW_SPEED_KMH,
                    alpha: DEFAULT_ALPHA,
                    beta: DEFAULT_BETA,
                    capacity: DEFAULT_CAPACITY,
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<(), CostError> {
        for (i, c) in self.classes.iter().enumerate() {
            if c.a.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
                return Err(CostError::InvalidParameter(format!(
                    "class {i}: every a coefficient must be positive"
                )));
            }
            if c.b.iter().any(|b| !b.is_finite()) {
                return Err(CostError::InvalidParameter(format!(
                    "class {i}: b coefficients must be finite"
                )));
            }
        }
        if self.prices.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(CostError::InvalidParameter(
                "emission prices must be nonnegative".into(),
            ));
        }
        for (k, e) in self.edges.iter().enumerate() {
            if e.capacity <= 0.0 {
                return Err(CostError::ZeroCapacity);
            }
            let ok = [e.free_flow_time_h, e.alpha, e.beta, e.capacity]
                .iter()
                .all(|x| x.is_finite() && *x > 0.0);
            if !ok {
                return Err(CostError::InvalidParameter(format!(
                    "edge {k}: t, alpha, beta, capacity must be positive"
                )));
            }
        }
        Ok(())
    }
}

/// v_k = (s_k / t_k) · (1 + α (j/κ)^β)⁻¹ in km/h.
pub fn edge_speed(total_flow: f64, length_km: f64, edge: &EdgeCongestion) -> Result<f64, CostError> {
    if edge.capacity <= 0.0 {
        return Err(CostError::ZeroCapacity);
    }
    if total_flow.is_nan() || total_flow < 0.0 {
        return Err(CostError::InvalidParameter(format!(
            "total flow {total_flow} must be nonnegative"
        )));
    }
    let free = length_km / edge.free_flow_time_h;
    Ok(free / (1.0 + edge.alpha * (total_flow / edge.capacity).powf(edge.beta)))
}

/// a/v + b in g/km, without clamping.
pub fn raw_emission_rate(speed: f64, class: &EmissionClass, pollutant: Pollutant) -> Result<f64, CostError> {
    if speed.is_nan() || speed <= 0.0 {
        return Err(CostError::NonPositiveSpeed { speed });
    }
    let i = pollutant.index();
    Ok(class.a[i] / speed + class.b[i])
}

/// Emission rate in g/km, clamped at zero where b < 0 would make it negative.
pub fn emission_rate(speed: f64, class: &EmissionClass, pollutant: Pollutant) -> Result<f64, CostError> {
    raw_emission_rate(speed, class, pollutant).map(|e| e.max(0.0))
}

/// c^r_k = s_k · Σ_j w_j e^r_{k,j}(j_k) / 2 + ϑ^r_k / 2, prices applied per kg.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionCost {
    params: EmissionParams,
    lengths: Vec<f64>,
}

impl EmissionCost {
    pub fn new(params: EmissionParams, lengths: Vec<f64>) -> Result<Self, CostError> {
        params.validate()?;
        if params.edges.len() != lengths.len() {
            return Err(CostError::EdgeCount {
                model: "emission".into(),
                expected: params.edges.len(),
                found: lengths.len(),
            });
        }
        if let Some(k) = lengths.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(CostError::MissingLength { edge: k });
        }
        Ok(Self { params, lengths })
    }

    /// Takes edge lengths from the network; fails if any is missing.
    pub fn for_network(params: EmissionParams, network: &NetworkSpec) -> Result<Self, CostError> {
        let lengths = network
            .edges()
            .iter()
            .enumerate()
            .map(|(k, e)| e.length_km.ok_or(CostError::MissingLength { edge: k }))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(params, lengths)
    }

    pub fn params(&self) -> &EmissionParams {
        &self.params
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    /// Speeds above which a class's rate for a pollutant is clamped to zero
    /// (only pollutants with b < 0 have one).
    pub fn clamp_speeds(&self) -> Vec<(usize, Pollutant, f64)> {
        let mut out = Vec::new();
        for (r, class) in self.params.classes.iter().enumerate() {
            for p in Pollutant::ALL {
                let (a, b) = (class.a[p.index()], class.b[p.index()]);
                if b < 0.0 {
                    out.push((r, p, a / -b));
                }
            }
        }
        out
    }

    /// Σ_r Σ_k ϑ^r_k s_k · (priced rate), the dollar value of what the
    /// profile emits, without the halving and the spreading term of the cost.
    pub fn emission_dollars(&self, profile: &FlowProfile) -> Result<f64, CostError> {
        let j = profile.full_matrix();
        let mut total = 0.0;
        for k in 0..j.nrows() {
            let v = edge_speed(j.row(k).sum(), self.lengths[k], &self.params.edges[k])?;
            for r in 0..j.ncols() {
                if j[(k, r)] > 0.0 {
                    total += j[(k, r)] * self.lengths[k] * self.priced_rate(r, v)?;
                }
            }
        }
        Ok(total)
    }

    /// Priced emissions per vehicle-km, in $/km, for class `r` at `speed`.
    pub fn priced_rate(&self, r: usize, speed: f64) -> Result<f64, CostError> {
        let class = &self.params.classes[r];
        let mut total = 0.0;
        for p in Pollutant::ALL {
            total += self.params.prices[p.index()] * emission_rate(speed, class, p)?;
        }
        Ok(total / GRAMS_PER_KG)
    }
}

impl CostModel for EmissionCost {
    fn name(&self) -> &str {
        "emission"
    }

    fn kind(&self) -> CostKind {
        CostKind::Emission
    }

    fn parameters(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("classes".into(), self.params.classes.len().to_string()),
            ("prices".into(), format!("{:?}", self.params.prices)),
        ];
        for (r, p, v) in self.clamp_speeds() {
            out.push((format!("clamp[{r}].{}", p.label()), format!("{v:.3} km/h")));
        }
        out
    }

    fn edge_costs(&self, flows: &DMatrix<f64>) -> Result<DMatrix<f64>, CostError> {
        if flows.ncols() != self.params.classes.len() {
            return Err(CostError::PopulationCount {
                model: self.name().into(),
                expected: self.params.classes.len(),
                found: flows.ncols(),
            });
        }
        if flows.nrows() != self.lengths.len() {
            return Err(CostError::EdgeCount {
                model: self.name().into(),
                expected: self.lengths.len(),
                found: flows.nrows(),
            });
        }
        let mut out = DMatrix::zeros(flows.nrows(), flows.ncols());
        for k in 0..flows.nrows() {
            let s = self.lengths[k];
            let v = edge_speed(flows.row(k).sum(), s, &self.params.edges[k])?;
            for r in 0..flows.ncols() {
                out[(k, r)] = s * self.priced_rate(r, v)? / 2.0 + flows[(k, r)] / 2.0;
            }
        }
        Ok(out)
    }
}
