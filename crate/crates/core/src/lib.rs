//! Activation-aware weight initialization for random feed-forward networks,
//! with the closed-form moment recursions that justify it and a Monte Carlo
//! simulator that checks them.
//!
//! The crate answers one question: given an activation function and a layer
//! width, how should the weight variance be chosen so that signal variance
//! survives depth? It provides:
//!
//! * [`activations`] - the activation registry with local data at 0;
//! * [`propagation`] - layer-moment recursions (linearized, relu-exact,
//!   quadrature oracle) and the initialization solver;
//! * [`quadrature`] - the Gaussian-expectation rule behind the oracle;
//! * [`simulator`] - seeded, reproducible forward-pass Monte Carlo;
//! * [`density`] - the density of tanh-transformed Gaussian pre-activations
//!   and saturation metrics.

pub mod activations;
pub mod density;
pub mod error;
pub mod propagation;
pub mod quadrature;
pub mod simulator;

pub use activations::{ActivationKind, ActivationSpec, DEFAULT_DIFF_STEP};
pub use error::{Error, Result};
pub use propagation::{
    linearized_step, propagate, quadrature_step, recommend_init, relu_decay_closed_form,
    relu_step, Derivation, Engine, InitEngine, InitRecommendation, LayerMoments, NetworkConfig,
    DEFAULT_QUADRATURE_NODES,
};
pub use simulator::{
    normality_diagnostics, run as run_simulation, InputDistribution, NormalityRow, SimConfig,
    SimReport, WeightDistribution,
};
