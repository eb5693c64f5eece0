use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the laboratory.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Forward Legendre transform applied to a superluminal velocity.
    #[error("superluminal velocity: |v| = {0} >= 1")]
    Superluminal(f64),

    /// Momentum outside the band mapped into v in [1/2, 7/2] by the scaling chart.
    #[error("momentum P = {p} outside the admissible band [{lo}, {hi}] (v must land in [1/2, 7/2])")]
    ScaledBand { p: f64, lo: f64, hi: f64 },

    /// The adaptive integrator could not continue (step-size underflow or step budget).
    #[error("integration failed at t = {t_last}: {reason}")]
    Integration { t_last: f64, reason: String },

    /// Factor duration violating the small-time twist condition.
    #[error("factor duration L = {len} violates the twist condition L < {bound}")]
    TwistBound { len: f64, bound: f64 },

    /// Boundary-value increment outside the admissible shooting band.
    #[error("increment {dtheta} outside the admissible band ({lo}, {hi})")]
    Band { dtheta: f64, lo: f64, hi: f64 },

    /// No shooting bracket found within the momentum search limit.
    #[error("no shooting bracket for increment {dtheta} within |P0| <= {limit}")]
    Infeasible { dtheta: f64, limit: f64 },

    /// The two independent estimates of a diagnostic quantity disagree.
    #[error("diagnostic failure: {what} estimates disagree by {gap} (limit {limit})")]
    DiagnosticGap { what: String, gap: f64, limit: f64 },

    /// Site sweeps did not reach the requested stationarity residual.
    #[error("minimization did not converge after {sweeps} sweeps (best residual {residual})")]
    NonConvergence { sweeps: usize, residual: f64 },

    /// Rotation number outside the admissible open interval (-T, T).
    #[error("rotation number {omega} outside the admissible range (-{t_period}, {t_period})")]
    RotationRange { omega: f64, t_period: f64 },

    /// Malformed model file; one message per offending line.
    #[error("model file: {}", issues.join("; "))]
    ModelParse { issues: Vec<String> },

    /// Precondition violation on an operation argument.
    #[error("{0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
