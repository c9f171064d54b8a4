use thiserror::Error;

/// Errors raised by the valuation engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid interval [{from}, {to}]")]
    InvalidInterval { from: f64, to: f64 },

    #[error("invalid cash flow: {0}")]
    InvalidCashFlow(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("spot rate is undefined at t = 0")]
    SpotRateAtZero,

    #[error("forward rate requires s <= t, got s = {s}, t = {t}")]
    ForwardOrder { s: f64, t: f64 },

    #[error("time {t} lies beyond the curve horizon {horizon}")]
    BeyondHorizon { t: f64, horizon: f64 },

    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),

    #[error("non-finite integrand value at t = {0}")]
    NonFinite(f64),

    #[error("quadrature did not reach tolerance {tol} (achieved {achieved})")]
    QuadratureStalled { tol: f64, achieved: f64 },

    #[error("root isolation failed: {0}")]
    RootIsolation(String),

    #[error("numeraire must be a nonnegative, nonzero cash flow")]
    InvalidNumeraire,

    #[error("no yield in (-0.999, 10] reproduces target price {target}")]
    NoYieldRoot { target: f64 },

    #[error("yield computation requires {0}")]
    YieldDomain(String),

    #[error("invalid quote set: {0}")]
    InvalidQuotes(String),

    #[error("quotes admit an arbitrage")]
    ArbitragePresent,

    #[error("implied prices are not unique; {} free direction(s)", .free_directions.len())]
    NotUnique { free_directions: Vec<Vec<f64>> },

    #[error("invalid market: {0}")]
    InvalidMarket(String),

    #[error("measure conversion fit error budget exceeded on [{from}, {to}]")]
    FitBudget { from: f64, to: f64 },

    #[error("linear program failed: {0}")]
    Simplex(String),
}

pub type Result<T> = std::result::Result<T, Error>;
