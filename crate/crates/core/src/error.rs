use num_bigint::BigInt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A residual `p + θq` vanished exactly; θ is rational along this direction.
    #[error("rational degeneracy: residual vanishes at p = {p:?}, q = {q:?}")]
    RationalDegeneracy { p: Vec<BigInt>, q: Vec<BigInt> },

    /// The sampled θ only determines best approximations up to a smaller horizon.
    #[error("horizon {horizon} exceeds the certified horizon of the sampled θ")]
    BeyondCertifiedHorizon { horizon: f64 },

    #[error("lattice enumeration needs {cells:.3e} cells, budget is {budget:.3e}")]
    EnumerationBlowup { cells: f64, budget: f64 },

    #[error("direction undefined: a vector of S_Λ has zero expanding component")]
    DirectionUndefined,

    #[error("irrational power: {0}")]
    IrrationalPower(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv failure: {0}")]
    Csv(#[from] csv::Error),

    #[error("json failure: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
