//! Activation registry.
//!
//! Every activation is described by an [`ActivationSpec`]: the elementwise
//! evaluator plus the local data at the origin, `g(0)` and `g'(0)`, that the
//! linearized moment recursion consumes. Relu deliberately carries *no*
//! derivative: it is not differentiable at 0 and callers must route it
//! through the relu-exact engine instead of the linearized one.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Default step for central-difference estimation of g'(0). Balances
/// truncation against rounding error in double precision.
pub const DEFAULT_DIFF_STEP: f64 = 1e-5;

/// The built-in activation families plus the user-supplied escape hatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActivationKind {
    Identity,
    Tanh,
    Sigmoid,
    Relu,
    Custom,
}

impl ActivationKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ActivationKind::Identity => "identity",
            ActivationKind::Tanh => "tanh",
            ActivationKind::Sigmoid => "sigmoid",
            ActivationKind::Relu => "relu",
            ActivationKind::Custom => "custom",
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// An activation function together with its value and derivative at 0.
///
/// Immutable after construction and cheap to clone; safe to share across
/// threads.
#[derive(Clone)]
pub struct ActivationSpec {
    kind: ActivationKind,
    value_at_zero: f64,
    deriv_at_zero: Option<f64>,
    evaluator: Evaluator,
}

impl fmt::Debug for ActivationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ActivationSpec")
            .field("kind", &self.kind)
            .field("value_at_zero", &self.value_at_zero)
            .field("deriv_at_zero", &self.deriv_at_zero)
            .finish()
    }
}

impl ActivationSpec {
    /// Look up a built-in activation by kind, with analytic g(0) and g'(0).
    pub fn builtin(kind: ActivationKind) -> Result<ActivationSpec> {
        let spec = match kind {
            ActivationKind::Identity => ActivationSpec {
                kind,
                value_at_zero: 0.0,
                deriv_at_zero: Some(1.0),
                evaluator: Arc::new(|x| x),
            },
            ActivationKind::Tanh => ActivationSpec {
                kind,
                value_at_zero: 0.0,
                deriv_at_zero: Some(1.0),
                evaluator: Arc::new(f64::tanh),
            },
            ActivationKind::Sigmoid => ActivationSpec {
                kind,
                value_at_zero: 0.5,
                deriv_at_zero: Some(0.25),
                evaluator: Arc::new(|x| 1.0 / (1.0 + (-x).exp())),
            },
            ActivationKind::Relu => ActivationSpec {
                kind,
                value_at_zero: 0.0,
                deriv_at_zero: None,
                evaluator: Arc::new(|x| x.max(0.0)),
            },
            ActivationKind::Custom => {
                return Err(Error::UnknownActivation("custom".to_string()))
            }
        };
        Ok(spec)
    }

    /// Look up a built-in activation by name.
    pub fn from_name(name: &str) -> Result<ActivationSpec> {
        match name {
            "identity" => Self::builtin(ActivationKind::Identity),
            "tanh" => Self::builtin(ActivationKind::Tanh),
            "sigmoid" => Self::builtin(ActivationKind::Sigmoid),
            "relu" => Self::builtin(ActivationKind::Relu),
            other => Err(Error::UnknownActivation(other.to_string())),
        }
    }

    /// Wrap a user-supplied evaluator. g(0) is taken from the evaluator and
    /// g'(0) is estimated by the central difference
    /// `(g(step) - g(-step)) / (2 step)`.
    pub fn custom<F>(evaluator: F, step: f64) -> Result<ActivationSpec>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if step <= 0.0 || !step.is_finite() {
            return Err(Error::Domain(format!(
                "central-difference step must be positive and finite, got {step}"
            )));
        }
        let value_at_zero = evaluator(0.0);
        let hi = evaluator(step);
        let lo = evaluator(-step);
        if !value_at_zero.is_finite() || !hi.is_finite() || !lo.is_finite() {
            return Err(Error::NonFinite {
                context: "custom activation evaluated near 0",
            });
        }
        let deriv = (hi - lo) / (2.0 * step);
        Ok(ActivationSpec {
            kind: ActivationKind::Custom,
            value_at_zero,
            deriv_at_zero: Some(deriv),
            evaluator: Arc::new(evaluator),
        })
    }

    pub fn kind(&self) -> ActivationKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.as_str()
    }

    /// g(0).
    pub fn value_at_zero(&self) -> f64 {
        self.value_at_zero
    }

    /// g'(0), absent when the activation is not differentiable at 0 (relu).
    pub fn deriv_at_zero(&self) -> Option<f64> {
        self.deriv_at_zero
    }

    pub fn is_relu(&self) -> bool {
        self.kind == ActivationKind::Relu
    }

    /// Evaluate g(x).
    pub fn eval(&self, x: f64) -> f64 {
        (self.evaluator)(x)
    }
}
