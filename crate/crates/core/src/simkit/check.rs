use crate::symcore::{Expr, Program, Sym};

use super::{SimError, Trace};

/// Discrete Lyapunov monitor along a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Monitor {
    pub series: Vec<f64>,
    /// Largest `V_{k+1} − V_k`.
    pub max_increase: f64,
    /// Every increment is at most `dt·1e-6·(1 + V_k)`.
    pub pass: bool,
}

impl Monitor {
    pub fn of(series: Vec<f64>, dt: f64) -> Monitor {
        let mut max_increase = f64::NEG_INFINITY;
        let mut pass = series.iter().all(|v| v.is_finite());
        for w in series.windows(2) {
            let d = w[1] - w[0];
            max_increase = max_increase.max(d);
            pass &= d <= dt * 1e-6 * (1.0 + w[0].abs());
        }
        Monitor {
            series,
            max_increase,
            pass,
        }
    }
}

/// Evaluates `v` over the trace states and checks it is nonincreasing.
pub fn lyapunov_monitor(trace: &Trace, v: &Expr) -> Result<Monitor, SimError> {
    let vars: Vec<Sym> = trace.states.iter().map(|s| Sym::from(s.as_str())).collect();
    if let Some(s) = v.free_vars().into_iter().find(|s| !vars.contains(s)) {
        return Err(SimError::Unbound(s.to_string()));
    }
    let p = Program::compile(std::slice::from_ref(v), &vars)?;
    let series = trace.x.iter().map(|x| p.eval(x)[0]).collect();
    Ok(Monitor::of(series, trace.dt))
}

/// Integrated dissipation `∫‖y‖² ≤ γ²∫‖w‖² + V(x0)` at every sample.
#[derive(Debug, Clone, PartialEq)]
pub struct L2Check {
    /// Final `∫‖y‖²`.
    pub lhs: f64,
    /// Final `γ²∫‖w‖² + V(x0)`.
    pub rhs: f64,
    /// Largest `lhs_k − rhs_k` over the trace.
    pub worst_gap: f64,
    /// `lhs_k ≤ rhs_k·(1 + 1e-6)` for every k.
    pub pass: bool,
}

pub fn l2_gain_check(trace: &Trace, gamma: f64, v0: f64) -> L2Check {
    let g2 = gamma * gamma;
    let mut worst_gap = f64::NEG_INFINITY;
    let mut pass = !trace.diverged;
    for (iy, iw) in trace.int_y2.iter().zip(&trace.int_w2) {
        let rhs = g2 * iw + v0;
        worst_gap = worst_gap.max(iy - rhs);
        pass &= iy.is_finite() && *iy <= rhs * (1.0 + 1e-6);
    }
    L2Check {
        lhs: trace.int_y2.last().copied().unwrap_or(0.0),
        rhs: g2 * trace.int_w2.last().copied().unwrap_or(0.0) + v0,
        worst_gap,
        pass,
    }
}
