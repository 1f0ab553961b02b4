//! Kuramoto oscillators on connected graphs: incidence algebra, grounded
//! dynamics, order parameters and critical-coupling bounds.

pub mod coupling;
pub mod dynamics;
pub mod error;
pub mod graph;
pub mod observables;
pub mod spectral;

pub use coupling::{
    bound_report, empirical_threshold, solve_fixed_point, BoundReport, FixedPointOptions, FixedPointResult,
    OracleOptions, Probe, ThresholdResult,
};
pub use dynamics::{integrate, Coordinates, FrequencyVector, KuramotoModel, PhaseState, SimulationConfig, SimulationTrace};
pub use error::{Error, NonConvergence, Result};
pub use graph::{OrientedGraph, PhaseDifferences, WeightVector};
pub use spectral::{GroundingProjection, LaplacianSpectrum};
