//! Closed-form moment propagation and the initialization solver.
//!
//! Three engines advance the per-layer moment state `(mu_m, s_m^2)`:
//!
//! * **linearized** - first-order Taylor expansion of the activation at 0,
//!   valid for activations differentiable there;
//! * **relu-exact** - the exact half-Gaussian moments of `max(0, y)` for
//!   Gaussian pre-activations;
//! * **quadrature** - numerical Gaussian expectation of the activation with
//!   no Taylor step, used as the oracle that bounds the linearization error.
//!
//! All engines share the pre-activation law `u_m^2 = N v^2 (s_m^2 + mu_m^2)`,
//! which holds for any input covariance structure, and the pre-activation
//! mean `r_m = 0`.

use crate::activations::ActivationSpec;
use crate::error::{Error, Result};
use crate::quadrature::{self, MIN_NODES};

use std::f64::consts::PI;

const FRAC_1_SQRT_2PI: f64 = 0.3989422804014327;

/// `1 / (2 pi)`: squared-mean transfer factor of the relu-exact step.
/// Often quoted rounded to 0.16.
pub const RELU_MEAN_SQ_FACTOR: f64 = 1.0 / (2.0 * PI);

/// `1/2 - 1/(2 pi)`: variance transfer factor of the relu-exact step.
/// Often quoted rounded to 0.34.
pub const RELU_VARIANCE_FACTOR: f64 = 0.5 - RELU_MEAN_SQ_FACTOR;

/// Pre-activation variance at the relu fixed point where `s^2 = 1`:
/// `u^2 = 1 / (1/2 - 1/(2 pi))`, about 2.934 (often quoted as 3).
pub const RELU_FIXED_POINT_PREACT_VARIANCE: f64 = 1.0 / RELU_VARIANCE_FACTOR;

/// Default node count for the quadrature engine.
pub const DEFAULT_QUADRATURE_NODES: usize = quadrature::DEFAULT_NODES;

/// Moment state attached to one layer.
///
/// `mean`/`variance` describe the inputs `x_m(i)` of layer `m`;
/// `preact_mean`/`preact_variance` describe the pre-activations
/// `y_m(i)` that layer `m` computes *from* those inputs, so every record
/// satisfies `preact_variance = N v^2 (variance + mean^2)` and
/// `preact_mean = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerMoments {
    pub layer_index: usize,
    /// mu_m, mean of the layer inputs.
    pub mean: f64,
    /// s_m^2, variance of the layer inputs.
    pub variance: f64,
    /// r_m, mean of the pre-activations (identically 0).
    pub preact_mean: f64,
    /// u_m^2, variance of the pre-activations.
    pub preact_variance: f64,
}

impl LayerMoments {
    /// First-layer state with the given input moments;
    /// `preact_variance` is filled in from the network configuration.
    pub fn initial(mean: f64, variance: f64, config: &NetworkConfig) -> Result<LayerMoments> {
        if !mean.is_finite() || !variance.is_finite() || variance < 0.0 {
            return Err(Error::Domain(format!(
                "initial moments must be finite with non-negative variance, got mean {mean}, variance {variance}"
            )));
        }
        Ok(LayerMoments {
            layer_index: 1,
            mean,
            variance,
            preact_mean: 0.0,
            preact_variance: config.preactivation_gain() * (variance + mean * mean),
        })
    }

    /// The canonical mean-0, variance-1 input state.
    pub fn standard(config: &NetworkConfig) -> LayerMoments {
        Self::initial(0.0, 1.0, config).expect("standard moments are valid")
    }

    pub fn is_finite(&self) -> bool {
        self.mean.is_finite() && self.variance.is_finite() && self.preact_variance.is_finite()
    }
}

/// Width, depth, weight variance and activation of a random network.
#[derive(Debug, Clone)]
pub struct NetworkConfig {
    pub width: usize,
    pub depth: usize,
    pub weight_variance: f64,
    pub activation: ActivationSpec,
}

impl NetworkConfig {
    pub fn new(
        width: usize,
        depth: usize,
        weight_variance: f64,
        activation: ActivationSpec,
    ) -> Result<NetworkConfig> {
        if width < 1 {
            return Err(Error::Domain("width must be at least 1".into()));
        }
        if depth < 1 {
            return Err(Error::Domain("depth must be at least 1".into()));
        }
        if weight_variance <= 0.0 || !weight_variance.is_finite() {
            return Err(Error::Domain(format!(
                "weight variance must be positive and finite, got {weight_variance}"
            )));
        }
        Ok(NetworkConfig {
            width,
            depth,
            weight_variance,
            activation,
        })
    }

    /// `N v^2`, the factor mapping the input second moment to the
    /// pre-activation variance.
    pub fn preactivation_gain(&self) -> f64 {
        self.width as f64 * self.weight_variance
    }
}

/// Which closed-form step advances the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Linearized,
    ReluExact,
    Quadrature { nodes: usize },
}

impl Engine {
    /// Quadrature engine at the default node count.
    pub fn quadrature() -> Engine {
        Engine::Quadrature {
            nodes: DEFAULT_QUADRATURE_NODES,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Engine::Linearized => "linearized",
            Engine::ReluExact => "relu_exact",
            Engine::Quadrature { .. } => "quadrature",
        }
    }
}

/// Engine used to derive an [`InitRecommendation`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitEngine {
    Linearized,
    ReluExact,
}

impl InitEngine {
    pub fn as_str(&self) -> &'static str {
        match self {
            InitEngine::Linearized => "linearized",
            InitEngine::ReluExact => "relu_exact",
        }
    }
}

/// Quantities the recommendation was computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Derivation {
    /// `v^2 = 1 / (N g'(0)^2 (1 + g(0)^2))`.
    Linearized {
        value_at_zero: f64,
        deriv_at_zero: f64,
        width: usize,
    },
    /// `v^2 = u^2 / (N (1 + u^2 / (2 pi)))` with `u^2` the fixed-point
    /// pre-activation variance.
    ReluFixedPoint {
        preact_variance_target: f64,
        mean_square_estimate: f64,
        width: usize,
    },
}

/// Recommended weight scale for depth-invariant signal variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitRecommendation {
    pub weight_variance: f64,
    pub weight_stddev: f64,
    pub engine: InitEngine,
    pub derivation: Derivation,
}

/// Weight variance that keeps the layer-input variance at 1 across depth.
///
/// Differentiable activations use `v^2 = 1 / (N g'(0)^2 (1 + g(0)^2))`;
/// relu uses the exact fixed point of the relu-exact recursion, which
/// simplifies to `v^2 = 2/N`.
pub fn recommend_init(activation: &ActivationSpec, width: usize) -> Result<InitRecommendation> {
    if width < 1 {
        return Err(Error::Domain("width must be at least 1".into()));
    }
    let n = width as f64;
    if activation.is_relu() {
        let u_sq = RELU_FIXED_POINT_PREACT_VARIANCE;
        let mu_sq = u_sq * RELU_MEAN_SQ_FACTOR;
        let weight_variance = u_sq / (n * (1.0 + mu_sq));
        return Ok(InitRecommendation {
            weight_variance,
            weight_stddev: weight_variance.sqrt(),
            engine: InitEngine::ReluExact,
            derivation: Derivation::ReluFixedPoint {
                preact_variance_target: u_sq,
                mean_square_estimate: mu_sq,
                width,
            },
        });
    }
    let deriv = activation.deriv_at_zero().ok_or_else(|| {
        Error::Domain(format!(
            "activation `{}` has no derivative at 0 and no exact engine",
            activation.name()
        ))
    })?;
    if deriv == 0.0 {
        return Err(Error::DegenerateActivation(activation.name().to_string()));
    }
    let g0 = activation.value_at_zero();
    let weight_variance = 1.0 / (n * deriv * deriv * (1.0 + g0 * g0));
    Ok(InitRecommendation {
        weight_variance,
        weight_stddev: weight_variance.sqrt(),
        engine: InitEngine::Linearized,
        derivation: Derivation::Linearized {
            value_at_zero: g0,
            deriv_at_zero: deriv,
            width,
        },
    })
}

fn advance(state: &LayerMoments, config: &NetworkConfig, mean: f64, variance: f64) -> LayerMoments {
    LayerMoments {
        layer_index: state.layer_index + 1,
        mean,
        variance,
        preact_mean: 0.0,
        preact_variance: config.preactivation_gain() * (variance + mean * mean),
    }
}

/// One first-order Taylor step: `mu' = g(0)`, `s'^2 = g'(0)^2 u^2`.
pub fn linearized_step(state: &LayerMoments, config: &NetworkConfig) -> Result<LayerMoments> {
    let deriv = config.activation.deriv_at_zero().ok_or(Error::WrongEngine {
        engine: "linearized",
        activation: config.activation.name().to_string(),
    })?;
    let mean = config.activation.value_at_zero();
    let variance = deriv * deriv * state.preact_variance;
    Ok(advance(state, config, mean, variance))
}

/// One exact relu step: `mu' = u / sqrt(2 pi)`,
/// `s'^2 = (1/2 - 1/(2 pi)) u^2`. The exact coefficients are used, not the
/// rounded 0.16/0.34.
pub fn relu_step(state: &LayerMoments, config: &NetworkConfig) -> Result<LayerMoments> {
    if !config.activation.is_relu() {
        return Err(Error::WrongEngine {
            engine: "relu_exact",
            activation: config.activation.name().to_string(),
        });
    }
    let u = state.preact_variance.sqrt();
    let mean = u * FRAC_1_SQRT_2PI;
    let variance = state.preact_variance * RELU_VARIANCE_FACTOR;
    Ok(advance(state, config, mean, variance))
}

/// One quadrature step: `mu' = E[g(uZ)]` and `s'^2 = Var(g(uZ))` computed
/// by Gaussian-expectation quadrature with `nodes` points per half-axis.
/// No Taylor approximation.
pub fn quadrature_step(
    state: &LayerMoments,
    config: &NetworkConfig,
    nodes: usize,
) -> Result<LayerMoments> {
    let u = state.preact_variance.sqrt();
    let act = config.activation.clone();
    let (mean, variance) = quadrature::gaussian_moments(|x| act.eval(x), u, nodes)?;
    Ok(advance(state, config, mean, variance))
}

fn step_with(
    engine: Engine,
    state: &LayerMoments,
    config: &NetworkConfig,
) -> Result<LayerMoments> {
    match engine {
        Engine::Linearized => linearized_step(state, config),
        Engine::ReluExact => relu_step(state, config),
        Engine::Quadrature { nodes } => quadrature_step(state, config, nodes),
    }
}

/// Iterate the chosen engine for `config.depth` layers.
///
/// Entry `m` of the result is the state after `m - 1` steps; entry 1 is
/// `initial` itself.
pub fn propagate(
    initial: LayerMoments,
    config: &NetworkConfig,
    engine: Engine,
) -> Result<Vec<LayerMoments>> {
    if initial.layer_index != 1 {
        return Err(Error::Domain(format!(
            "propagation starts at layer 1, got layer {}",
            initial.layer_index
        )));
    }
    match engine {
        Engine::Linearized if config.activation.deriv_at_zero().is_none() => {
            return Err(Error::WrongEngine {
                engine: "linearized",
                activation: config.activation.name().to_string(),
            });
        }
        Engine::ReluExact if !config.activation.is_relu() => {
            return Err(Error::WrongEngine {
                engine: "relu_exact",
                activation: config.activation.name().to_string(),
            });
        }
        Engine::Quadrature { nodes } if nodes < MIN_NODES => {
            return Err(Error::Domain(format!(
                "quadrature needs at least {MIN_NODES} nodes per panel, got {nodes}"
            )));
        }
        _ => {}
    }
    let mut sequence = Vec::with_capacity(config.depth);
    sequence.push(initial);
    while sequence.len() < config.depth {
        let next = step_with(engine, sequence.last().unwrap(), config)?;
        if !next.is_finite() {
            return Err(Error::Overflow {
                layer: next.layer_index,
            });
        }
        sequence.push(next);
    }
    Ok(sequence)
}

/// Closed-form relu moments under Xavier scaling (`N v^2 = 1`) from
/// unit-variance inputs:
///
/// `mu_m^2 = (1/(2 pi)) (1/2)^(m-1)` and
/// `s_m^2 = (1/2 - 1/(2 pi)) (1/2)^(m-1)`.
///
/// `m` counts weight layers applied to the raw input, so the state returned
/// for index `m` equals entry `m + 1` of the [`propagate`] sequence (whose
/// entry 1 is the input itself). The exact decay factor is
/// `1/(2 pi) + 1/2 - 1/(2 pi) = 1/2`; the rounded factor 0.51 appears only
/// in derivations quoting 0.16 and 0.34.
///
/// Returns `(mean_sq, variance)`.
pub fn relu_decay_closed_form(m: usize) -> Result<(f64, f64)> {
    if m < 2 {
        return Err(Error::Domain(format!(
            "closed-form relu decay starts at layer 2, got {m}"
        )));
    }
    let decay = 0.5f64.powi(m as i32 - 1);
    Ok((RELU_MEAN_SQ_FACTOR * decay, RELU_VARIANCE_FACTOR * decay))
}

/// The exact fixed point `(mean, variance)` of the relu-exact recursion
/// under the recommended initialization: unit variance with
/// `mean^2 = u^2 / (2 pi) = 1 / (pi - 1)`.
pub fn relu_fixed_point_moments() -> (f64, f64) {
    (
        (RELU_FIXED_POINT_PREACT_VARIANCE * RELU_MEAN_SQ_FACTOR).sqrt(),
        1.0,
    )
}
