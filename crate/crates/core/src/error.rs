use thiserror::Error;

/// Errors produced by the propagation engines, the simulator and the
/// density routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown activation `{0}` (expected identity, tanh, sigmoid or relu)")]
    UnknownActivation(String),

    /// An evaluation produced NaN or infinity where a finite value is required.
    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },

    /// The activation has g'(0) = 0, so the recommended weight variance
    /// would be infinite.
    #[error("activation `{0}` has zero derivative at 0; no finite weight variance maintains its signal")]
    DegenerateActivation(String),

    #[error("engine `{engine}` cannot propagate `{activation}` activations")]
    WrongEngine {
        engine: &'static str,
        activation: String,
    },

    /// Propagated moments left the representable range.
    #[error("moments became non-finite at layer {layer}")]
    Overflow { layer: usize },

    #[error("insufficient samples for stable higher moments: need at least {required} per layer, got {actual}")]
    InsufficientData { required: u64, actual: u64 },

    /// An argument fell outside the domain of the operation.
    #[error("{0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
