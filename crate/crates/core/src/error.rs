use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors are split by the exit code they map to in the command-line tool:
/// input problems, physics-domain failures and fit non-convergence.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unstable resonator: geometric length {length_um} µm >= radius of curvature {radius_um} µm")]
    Unstable { length_um: f64, radius_um: f64 },

    #[error("no resonance: {0}")]
    NoResonance(String),

    #[error("off resonance: {wavelength_nm} nm is {offset_nm:.3e} nm from the nearest peak (linewidth {linewidth_nm:.3e} nm)")]
    OffResonance {
        wavelength_nm: f64,
        offset_nm: f64,
        linewidth_nm: f64,
    },

    #[error("branch tracking failed at L = {air_gap_nm} nm: {reason}; refine the L grid (step below {suggested_step_nm} nm)")]
    BranchTracking {
        air_gap_nm: f64,
        reason: String,
        suggested_step_nm: f64,
    },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("physics domain: {0}")]
    Domain(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code: 2 input error, 3 physics-domain failure.
    /// Fit non-convergence (exit 4) is not an error; see
    /// [`crate::fit::FitResult::converged`].
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::Config(_)
            | Error::Json(_)
            | Error::Csv(_)
            | Error::Io(_) => 2,
            Error::Degenerate(_) => 2,
            Error::Unstable { .. }
            | Error::NoResonance(_)
            | Error::OffResonance { .. }
            | Error::BranchTracking { .. }
            | Error::Domain(_) => 3,
        }
    }
}
