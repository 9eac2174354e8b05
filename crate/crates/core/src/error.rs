//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Parameter validation failure (non-finite, out of range, ...).
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A steady-state expression was requested at or above the critical
    /// point, where it diverges.
    #[error("{quantity} diverges at or above the critical point (kappa = {kappa}, epsilon = {epsilon})")]
    Divergence {
        quantity: &'static str,
        kappa: f64,
        epsilon: f64,
    },

    /// Above-threshold dynamics requested without a confirmed transient window.
    #[error("above-threshold parameters admit no steady state; pass a transient window covering t_end = {t_end}")]
    AboveThreshold { t_end: f64 },

    /// A Gaussian field state with `a^2 <= b^2` has no normalizable Q-function.
    #[error("moments (mean_photon = {mean_photon}, anomalous = {anomalous}) give a non-normalizable Gaussian state: (1 + n)^2 <= b^2")]
    NonNormalizable { mean_photon: f64, anomalous: f64 },

    /// The exact-series photon oracle is bounded to small photon numbers.
    #[error("photon-number oracle supports n_max <= {max}, requested {requested}")]
    OracleScale { requested: usize, max: usize },

    /// Fock truncation too small: probability reached the top level.
    #[error("Fock truncation leak: top-level occupation {top_occupation:.3e} exceeds {threshold:.3e} at dim = {dim}")]
    TruncationLeak {
        dim: usize,
        top_occupation: f64,
        threshold: f64,
    },

    /// Master-equation integration hit `t_end` before the residual converged.
    #[error("master equation not converged by t = {t_end}: max |drho/dt| = {residual:.3e} (tolerance {tolerance:.3e})")]
    NotConverged {
        t_end: f64,
        residual: f64,
        tolerance: f64,
    },

    /// Negative diffusion coefficient passed to an OU step.
    #[error("negative diffusion coefficient D = {0}")]
    NegativeDiffusion(f64),

    /// The stationarity window is too short for the requested lags.
    #[error("stationarity window of {window_steps} steps is shorter than the requested {lag_steps} lag steps")]
    WindowTooShort {
        window_steps: usize,
        lag_steps: usize,
    },

    /// Correlation has not decayed to the noise level by the last lag.
    #[error("correlation not decayed at max lag {max_lag}: |value| = {value:.3e} vs 2 SE = {two_se:.3e}; extend the lag window")]
    UndecayedCorrelation {
        max_lag: f64,
        value: f64,
        two_se: f64,
    },

    /// Exponential fit of the correlation tail is too poor to extrapolate.
    #[error("exponential fit rejected: R^2 = {r_squared:.4} < 0.99")]
    PoorFit { r_squared: f64 },

    /// The requested correlation kind has no associated spectrum.
    #[error("no spectrum is defined for correlation kind {0}")]
    UnsupportedKind(&'static str),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
