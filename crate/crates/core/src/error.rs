use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("behavior density is zero for a sampled action at step {step}, state {state}")]
    ZeroBehaviorDensity { step: usize, state: usize },

    #[error("importance ratio {ratio} exceeds the declared bound {bound}")]
    RatioBound { ratio: f64, bound: f64 },

    #[error("coverage violation at step {step}, state {state}: target reaches it but behavior does not")]
    Coverage { step: usize, state: usize },

    #[error("degenerate batch: zero normalizer at step {step}")]
    DegenerateNormalizer { step: usize },

    #[error("cannot project an all-zero vector onto the simplex")]
    DegenerateSimplex,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid estimator spec: {0}")]
    InvalidSpec(String),

    #[error("estimator requires finite actions")]
    ContinuousActions,

    #[error("spectral failure: {0}")]
    Spectral(String),

    #[error("leading eigenvector is not unique ({multiplicity} eigenvalues near 1)")]
    AmbiguousEigenvector { multiplicity: usize },

    #[error("training failed: {0}")]
    Training(String),
}
