//! Closed-loop simulation with fixed-step RK4 or Euler, Lyapunov monitoring,
//! L2-gain checks and seeded Monte Carlo batches.

mod batch;
mod check;
mod signal;
mod sim;

pub use batch::{run_batch, BatchSpec, BatchSummary, Envelope, RunSummary};
pub use check::{l2_gain_check, lyapunov_monitor, L2Check, Monitor};
pub use signal::Signal;
pub use sim::{simulate, ClosedLoop, Trace};

use crate::symcore::EvalError;

/// Norm above which a run is flagged as diverged and stopped.
pub const DIVERGENCE: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rk4,
    Euler,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    pub method: Method,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1e-3,
            horizon: 10.0,
            method: Method::Rk4,
        }
    }
}

impl SimConfig {
    pub fn new(dt: f64, horizon: f64) -> SimConfig {
        SimConfig {
            dt,
            horizon,
            method: Method::Rk4,
        }
    }

    pub(crate) fn validate(&self) -> Result<usize, SimError> {
        if !(self.dt > 0.0)
            || !(self.horizon > 0.0)
            || !self.dt.is_finite()
            || !self.horizon.is_finite()
        {
            return Err(SimError::Config(format!(
                "dt = {} and horizon = {} must be positive",
                self.dt, self.horizon
            )));
        }
        Ok((self.horizon / self.dt).round().max(1.0) as usize)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("symbol `{0}` has no value")]
    Unbound(String),
    #[error("right-hand side is not finite at the initial state")]
    NonFinite,
    #[error("no feedback law to close the loop with")]
    NoControl,
    #[error(transparent)]
    Eval(#[from] EvalError),
}
