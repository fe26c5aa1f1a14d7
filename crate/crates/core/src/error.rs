use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// The estimate is flat at one: the floor parameter would sit on its clamp.
    #[error("degenerate autocorrelation: estimate is constant at 1 over the fit range")]
    DegenerateAutocorrelation,

    /// Closed-form rows need interior pilots; the caller should use the dense path.
    #[error("closed form needs at least 3 pilots (got {n_pilots}); use the numeric path")]
    FallbackToNumeric { n_pilots: usize },

    #[error("pilot autocorrelation matrix is numerically singular (a = {a}, b = {b}, delta = {delta}, n_pilots = {n_pilots})")]
    SingularModel {
        a: f64,
        b: f64,
        delta: usize,
        n_pilots: usize,
    },

    #[error("singular factor {factor} in closed-form cost (a = {a}, lambda = {lambda})")]
    SingularFactor {
        factor: &'static str,
        a: f64,
        lambda: f64,
    },

    #[error("infeasible: cost ceiling {max_cost_pct}% does not exceed intercept {eta_pct}%")]
    Infeasible { max_cost_pct: f64, eta_pct: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
