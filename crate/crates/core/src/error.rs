use thiserror::Error;

/// Errors surfaced by every stage of the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("refractive index bandwidth {bandwidth} in j exceeds 2N = {limit}; raise the Fourier truncation N")]
    Bandwidth { bandwidth: usize, limit: usize },

    #[error("eigensolver failure on a {size}x{size} matrix (condition estimate {condition:.3e}): {reason}")]
    EigenSolver {
        size: usize,
        condition: f64,
        reason: String,
    },

    #[error(
        "standing wave detected at alpha = {alpha_re:+.6e}{alpha_im:+.6e}i (direction parameter {lambda:.3e}); \
         the wavenumber sits on a propagating cut-off"
    )]
    StandingWave { alpha_re: f64, alpha_im: f64, lambda: f64 },

    #[error("propagating cluster at alpha = {alpha:+.6e} has a non-positive energy form (smallest eigenvalue {min_eig:.3e})")]
    IndefiniteEnergy { alpha: f64, min_eig: f64 },

    #[error("spectral truncation: strip {strip} holds {count} eigenvalues instead of 1; increase N")]
    StripCount { strip: usize, count: usize },

    #[error(
        "mode trace Gram matrix is not positive definite (smallest eigenvalue {min_eig:.3e}); \
         modes {mode_a} and {mode_b} are nearly collinear, M is too large for N"
    )]
    GramIndefinite { min_eig: f64, mode_a: usize, mode_b: usize },

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error(
        "singular finite element system ({0}); the junction likely supports a trapped eigenfunction at this wavenumber"
    )]
    SingularSystem(String),

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error(
        "insufficient absorption decay: far-end amplitude {far_end:.3e} exceeds {limit:.3e}; lengthen the buffer or raise epsilon"
    )]
    InsufficientDecay { far_end: f64, limit: f64 },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wrap this error with the name of the pipeline stage that produced it.
    pub fn at(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
