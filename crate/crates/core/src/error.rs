use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrbitaError {
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("radius {r} outside the potential domain ({lo}, {hi})")]
    Domain { r: f64, lo: f64, hi: f64 },
    #[error("derivative order {0} not supported (max 4)")]
    Order(usize),
    #[error("effective potential has no minimum for L = {0}")]
    NoMinimum(f64),
    #[error("degenerate center: W''(s0) = {0} is not positive")]
    DegenerateCenter(f64),
    #[error("energy H = {h} outside the admissible window ({lo}, {hi})")]
    Inadmissible { h: f64, lo: f64, hi: f64 },
    #[error("root finding did not converge: {0}")]
    RootNotConverged(String),
    #[error("quadrature did not converge: relative disagreement {0:e}")]
    Quadrature(f64),
    #[error("ratio k/n = {ratio} outside the admissible interval ({lo}, {hi})")]
    InadmissibleRatio { ratio: f64, lo: f64, hi: f64 },
    #[error("Newton iteration diverged: {0}")]
    Divergence(String),
    #[error("collision: |x| = {r} fell below the floor {floor} at t = {t}")]
    Collision { r: f64, floor: f64, t: f64 },
    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),
    #[error("not enough pericenter events ({0}) for a measurement")]
    InsufficientEvents(usize),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
}

pub type Result<T> = std::result::Result<T, OrbitaError>;
