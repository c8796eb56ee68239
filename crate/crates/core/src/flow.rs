//! Per-population flow profiles over reduced edge index spaces.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("expected {expected} population flow vectors, found {found}")]
    PopulationCount { expected: usize, found: usize },
    #[error("population {population}: expected {expected} reduced edges, found {found}")]
    Length {
        population: usize,
        expected: usize,
        found: usize,
    },
    #[error("population {population}: flow on reduced edge {index} is {value}, must be finite and nonnegative")]
    InvalidEntry {
        population: usize,
        index: usize,
        value: f64,
    },
}

/// Maps each population's reduced edge indices back onto the network's edges.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeLayout {
    edge_count: usize,
    maps: Vec<Vec<usize>>,
}

impl EdgeLayout {
    pub fn new(edge_count: usize, maps: Vec<Vec<usize>>) -> Self {
        debug_assert!(maps.iter().flatten().all(|&k| k < edge_count));
        Self { edge_count, maps }
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn population_count(&self) -> usize {
        self.maps.len()
    }

    pub fn edge_map(&self, population: usize) -> &[usize] {
        &self.maps[population]
    }

    pub fn reduced_len(&self, population: usize) -> usize {
        self.maps[population].len()
    }
}

/// The flow matrix J, stored as one reduced vector per population.
///
/// Pruned edges carry exactly zero flow in every full view.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowProfile {
    layout: Arc<EdgeLayout>,
    flows: Vec<DVector<f64>>,
}

impl FlowProfile {
    pub fn new(layout: Arc<EdgeLayout>, flows: Vec<DVector<f64>>) -> Result<Self, FlowError> {
        if flows.len() != layout.population_count() {
            return Err(FlowError::PopulationCount {
                expected: layout.population_count(),
                found: flows.len(),
            });
        }
        for (r, v) in flows.iter().enumerate() {
            if v.len() != layout.reduced_len(r) {
                return Err(FlowError::Length {
                    population: r,
                    expected: layout.reduced_len(r),
                    found: v.len(),
                });
            }
            if let Some((index, &value)) = v.iter().enumerate().find(|(_, x)| !x.is_finite() || **x < 0.0) {
                return Err(FlowError::InvalidEntry {
                    population: r,
                    index,
                    value,
                });
            }
        }
        Ok(Self { layout, flows })
    }

    pub fn layout(&self) -> &Arc<EdgeLayout> {
        &self.layout
    }

    pub fn population_count(&self) -> usize {
        self.flows.len()
    }

    pub fn edge_count(&self) -> usize {
        self.layout.edge_count()
    }

    /// Reduced flow vector of one population.
    pub fn reduced(&self, population: usize) -> &DVector<f64> {
        &self.flows[population]
    }

    pub fn reduced_all(&self) -> &[DVector<f64>] {
        &self.flows
    }

    pub fn into_reduced(self) -> Vec<DVector<f64>> {
        self.flows
    }

    /// Flow of one population on every network edge, zero on pruned edges.
    pub fn full_population(&self, population: usize) -> DVector<f64> {
        let mut full = DVector::zeros(self.edge_count());
        for (i, &k) in self.layout.edge_map(population).iter().enumerate() {
            full[k] = self.flows[population][i];
        }
        full
    }

    /// The n × P matrix J.
    pub fn full_matrix(&self) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.edge_count(), self.population_count());
        for (r, v) in self.flows.iter().enumerate() {
            for (i, &k) in self.layout.edge_map(r).iter().enumerate() {
                j[(k, r)] = v[i];
            }
        }
        j
    }

    /// Per-edge totals j_k summed over populations.
    pub fn totals(&self) -> DVector<f64> {
        let mut t = DVector::zeros(self.edge_count());
        for (r, v) in self.flows.iter().enumerate() {
            for (i, &k) in self.layout.edge_map(r).iter().enumerate() {
                t[k] += v[i];
            }
        }
        t
    }

    /// Sum over populations of the inner products of paired reduced vectors.
    pub fn inner(&self, other: &[DVector<f64>]) -> f64 {
        self.flows.iter().zip(other).map(|(a, b)| a.dot(b)).sum()
    }
}
