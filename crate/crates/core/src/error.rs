use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument outside the admissible range. The message names the constraint.
    #[error("{0}")]
    Domain(String),

    #[error("grid size {0} is below the minimum of 16 nodes")]
    GridSize(usize),

    #[error("series did not converge: {0}")]
    NonConvergence(String),

    /// Linear algebra failure (singular resolvent, Schur iteration stalled, ...).
    #[error("solver failure: {0}")]
    Solver(String),

    /// The perturbation left the small-data regime or produced non-finite values.
    #[error("overflow at tau = {tau:.4}: {reason}")]
    Overflow { tau: f64, reason: String },

    /// The perturbation norm passed the small-data guard; the samples so far are sound.
    #[error("perturbation norm {norm:.3} left the small-data regime at tau = {tau:.4}")]
    LeftSmallData { tau: f64, norm: f64 },

    #[error("step size {dt:e} exceeds the stability limit {limit:e}")]
    StepSize { dt: f64, limit: f64 },

    #[error("no sign change of the unstable coefficient on T in ({lo}, {hi})")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}

impl Error {
    /// Coarse class used for process exit codes: "domain", "solver" or "overflow".
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) | Error::GridSize(_) | Error::StepSize { .. } => "domain",
            Error::Overflow { .. } | Error::LeftSmallData { .. } => "overflow",
            Error::NonConvergence(_)
            | Error::Solver(_)
            | Error::NoSignChange { .. }
            | Error::DegenerateFit(_) => "solver",
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
