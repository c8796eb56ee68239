//! Multi-population Wardrop equilibria on directed networks.
//!
//! The crate is organised around four layers:
//!
//! * [`network`] builds Kirchhoff systems and per-population reduced subgraphs,
//! * [`costs`] defines the [`CostModel`](costs::CostModel) contract and the
//!   bundled congestion and emission models,
//! * [`hrf`] integrates the Hessian-Riemannian flow whose limit is the
//!   equilibrium,
//! * [`equilibrium`] certifies candidate profiles with gap functions and
//!   provides independent oracles for cross-checking.

pub mod costs;
pub mod equilibrium;
pub mod flow;
pub mod hrf;
mod linalg;
pub mod network;
pub mod sampling;

pub use costs::{CostError, CostKind, CostModel};
pub use equilibrium::{EquilibriumError, GapCertificate};
pub use flow::{EdgeLayout, FlowError, FlowProfile};
pub use hrf::{HrfError, SolveReport, SolverConfig};
pub use network::{KirchhoffSystem, NetworkError, NetworkSpec, PopulationSpec, PopulationSystem, ReducedPopulation};
