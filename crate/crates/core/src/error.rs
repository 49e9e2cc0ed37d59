use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid Fock space: {0}")]
    InvalidSpace(String),

    #[error("space dimension {dimension} exceeds the configured bound {bound}")]
    DimensionOverflow { dimension: usize, bound: usize },

    #[error("truncation leakage {mass:.3e} exceeds tolerance {tolerance:.1e}{context}")]
    Leakage {
        mass: f64,
        tolerance: f64,
        context: String,
    },

    #[error("degenerate normalisation ({0:.3e}); the requested superposition vanishes")]
    DegenerateNormalization(f64),

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("mode index {mode} out of range for a {num_modes}-mode space")]
    ModeOutOfRange { mode: usize, num_modes: usize },

    #[error("numeric overflow: {0}")]
    Overflow(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("series diverges: {0}")]
    Divergence(String),

    #[error(
        "unphysical amplification: g^2 tanh(r0) = {product:.4} >= 1; \
         decrease the tap-off reflectivity mu or lower the target squeezing r0"
    )]
    UnphysicalAmplification { product: f64 },

    #[error("every subtraction channel has zero normalisation")]
    EmptyDecomposition,

    #[error("no shots recorded for subtraction patterns {0}")]
    MissingChannels(String),

    #[error("observable is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn leakage(mass: f64, tolerance: f64, context: impl Into<String>) -> Self {
        let context = context.into();
        Error::Leakage {
            mass,
            tolerance,
            context: if context.is_empty() {
                context
            } else {
                format!(" ({context})")
            },
        }
    }

    /// True for errors caused by truncation or floating-point limits rather than by
    /// malformed input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Leakage { .. }
                | Error::Overflow(_)
                | Error::Divergence(_)
                | Error::DegenerateNormalization(_)
                | Error::EmptyDecomposition
                | Error::UnphysicalAmplification { .. }
                | Error::MissingChannels(_)
        )
    }
}
