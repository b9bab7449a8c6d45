//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while estimating.
///
/// Estimation failures (degenerate quantile spacings, empty kernel
/// neighborhoods, infeasible tuning grids) are ordinary values here, not
/// panics: the screening and tuning layers catch them per column / per grid
/// point and keep going.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// No observation received positive kernel weight at the query point.
    #[error("empty kernel neighborhood at x0 = {x0} (h = {h})")]
    EmptyNeighborhood { x0: f64, h: f64 },

    /// A Pickands quantile spacing was zero or negative.
    #[error("degenerate Pickands ratio at k = {k}: spacings ({upper}, {lower})")]
    DegeneratePickands { k: usize, upper: f64, lower: f64 },

    /// The auxiliary-scale quantile spacing was zero or negative.
    #[error("degenerate auxiliary scale: quantile spacing {spacing}")]
    DegenerateScale { spacing: f64 },

    /// Too many evaluation points of a marginal utility were degenerate.
    #[error("unstable marginal utility: {degenerate} of {evaluated} evaluation points degenerate")]
    UnstableUtility { degenerate: usize, evaluated: usize },

    /// The quantile-regression design matrix is rank deficient (or q >= k).
    #[error("singular design: {0}")]
    SingularDesign(String),

    /// The fitted tail coefficient vector has zero norm.
    #[error("zero direction: tail quantile regression found no covariate signal")]
    ZeroDirection,

    /// Fewer weighted exceedances than the GP likelihood needs.
    #[error("insufficient tail: weighted exceedance count {weighted_count:.2} < {required}")]
    InsufficientTail { weighted_count: f64, required: f64 },

    /// Every restart of a likelihood optimization was infeasible.
    #[error("fit failed: {0}")]
    FitFailed(String),

    /// The exceedance set over the threshold is empty.
    #[error("no exceedances above the threshold at k = {k}")]
    NoExceedances { k: usize },

    /// No bandwidth in the grid produced a feasible leave-one-out fit.
    #[error("no feasible bandwidth in grid of {grid_len}")]
    NoFeasibleBandwidth { grid_len: usize },

    /// Every k in the grid produced a degenerate discrepancy.
    #[error("no feasible k in grid of {grid_len}")]
    NoFeasibleK { grid_len: usize },

    /// No model size in 1..=q_cap could be evaluated.
    #[error("model size selection failed: no feasible size in 1..={q_cap}")]
    SelectionFailed { q_cap: usize },

    /// Malformed or unusable input data (CSV ingestion, config files).
    #[error("data error: {0}")]
    Data(String),

    /// Bad run configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 data, 3 estimation, 4 config.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Data(_) | Error::Io(_) => 2,
            Error::Config(_) | Error::Domain(_) => 4,
            _ => 3,
        }
    }
}
