use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("state at the degenerate triple point (r=1, x=0, d=d*) has no well-defined flow")]
    DegeneratePoint,

    #[error("simultaneous threshold crossing of faces {first} and {second} at t = {time}")]
    SimultaneousCrossing {
        first: &'static str,
        second: &'static str,
        time: f64,
    },

    #[error("more than {cap} segments: the trajectory is chattering")]
    Chattering { cap: usize },

    #[error("non-finite value encountered at t = {time}")]
    NonFinite { time: f64 },

    #[error("step size underflow at t = {time} (h = {step})")]
    StepUnderflow { time: f64, step: f64 },

    #[error("not periodic: {0}")]
    NotPeriodic(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
