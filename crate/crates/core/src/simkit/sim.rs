use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};

use crate::backstep::{ChainSystem, ControlLaw};
use crate::symcore::{Expr, Program, Sym};

use super::signal::Sampler;
use super::{Method, Signal, SimConfig, SimError, DIVERGENCE};

/// Compiled closed loop `ẋ = F(x, w)` with feedback `u(x)`, outputs `y(x)`
/// and an optional storage `V(x)`.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    pub states: Vec<Sym>,
    pub w: Vec<Sym>,
    pub inputs: Vec<Sym>,
    pub n_outputs: usize,
    pub storage_expr: Option<Expr>,
    rhs: Program,
    u: Program,
    y: Program,
    storage: Option<Program>,
}

fn compile(exprs: &[Expr], vars: &[Sym]) -> Result<Program, SimError> {
    for e in exprs {
        if let Some(s) = e.free_vars().into_iter().find(|s| !vars.contains(s)) {
            return Err(SimError::Unbound(s.to_string()));
        }
    }
    Ok(Program::compile(exprs, vars)?)
}

impl ClosedLoop {
    /// `rhs` may use states and `w`; `u`, `y` and `storage` only states.
    pub fn new(
        states: Vec<Sym>,
        w: Vec<Sym>,
        rhs: &[Expr],
        u: &[Expr],
        y: &[Expr],
        storage: Option<&Expr>,
    ) -> Result<ClosedLoop, SimError> {
        if rhs.len() != states.len() {
            return Err(SimError::Shape(format!(
                "{} states, {} right-hand sides",
                states.len(),
                rhs.len()
            )));
        }
        let all: Vec<Sym> = states.iter().chain(&w).cloned().collect();
        let inputs = (1..=u.len())
            .map(|i| Sym::from(format!("u{i}").as_str()))
            .collect();
        Ok(ClosedLoop {
            rhs: compile(rhs, &all)?,
            u: compile(u, &states)?,
            y: compile(y, &states)?,
            storage: storage
                .map(|v| compile(std::slice::from_ref(v), &states))
                .transpose()?,
            storage_expr: storage.cloned(),
            n_outputs: y.len(),
            inputs,
            states,
            w,
        })
    }

    /// Closes a chain system with feedback `v`; `params` override the
    /// system's `[parameters]`.
    pub fn from_chain(
        sys: &ChainSystem,
        control: &[Expr],
        storage: Option<&Expr>,
        params: &BTreeMap<String, f64>,
    ) -> Result<ClosedLoop, SimError> {
        if control.len() != sys.m() {
            return Err(SimError::Shape(format!(
                "{} laws for {} inputs",
                control.len(),
                sys.m()
            )));
        }
        let mut values = sys.params.clone();
        values.extend(params.iter().map(|(k, v)| (k.clone(), *v)));
        let pm: HashMap<Sym, Expr> = values
            .iter()
            .map(|(k, v)| (Sym::from(k.as_str()), Expr::float(*v)))
            .collect();
        let vm: HashMap<Sym, Expr> = sys
            .inputs()
            .into_iter()
            .zip(control.iter().cloned())
            .collect();
        let rhs: Vec<Expr> = sys
            .nominal
            .iter()
            .zip(&sys.disturbance)
            .map(|(f, p)| (f + p).subs(&vm).subs(&pm))
            .collect();
        let u: Vec<Expr> = control.iter().map(|e| e.subs(&pm)).collect();
        let y: Vec<Expr> = sys.outputs.iter().map(|e| e.subs(&pm)).collect();
        let v = storage.map(|e| e.subs(&pm));
        let mut cl = ClosedLoop::new(sys.states.clone(), sys.w.clone(), &rhs, &u, &y, v.as_ref())?;
        cl.inputs = sys.inputs();
        Ok(cl)
    }

    pub fn from_law(
        sys: &ChainSystem,
        law: &ControlLaw,
        params: &BTreeMap<String, f64>,
    ) -> Result<ClosedLoop, SimError> {
        ClosedLoop::from_chain(sys, &law.v, Some(&law.w), params)
    }

    /// Uses the `[control]` and `[storage]` sections of an exported controller.
    pub fn from_controller(
        sys: &ChainSystem,
        params: &BTreeMap<String, f64>,
    ) -> Result<ClosedLoop, SimError> {
        let v = sys.control.as_ref().ok_or(SimError::NoControl)?;
        ClosedLoop::from_chain(sys, v, sys.storage.as_ref(), params)
    }

    pub fn n(&self) -> usize {
        self.states.len()
    }

    pub fn storage_at(&self, x: &[f64]) -> Option<f64> {
        self.storage.as_ref().map(|p| p.eval(x)[0])
    }
}

/// Uniform-grid simulation record. Rows stop early when the run diverges.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub states: Vec<String>,
    pub inputs: Vec<String>,
    pub dt: f64,
    pub t: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
    pub v: Option<Vec<f64>>,
    /// Running trapezoidal `∫‖y‖²` and `∫‖w‖²`.
    pub int_y2: Vec<f64>,
    pub int_w2: Vec<f64>,
    pub diverged: bool,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn final_state(&self) -> &[f64] {
        self.x.last().map_or(&[], |x| x.as_slice())
    }

    pub fn final_norm(&self) -> f64 {
        norm(self.final_state())
    }

    /// Header `t,<states>,<inputs>,y1..yp[,V,intY2,intW2]`, 12 significant digits.
    pub fn write_csv(&self, mut out: impl Write) -> io::Result<()> {
        let mut head = vec!["t".to_string()];
        head.extend(self.states.iter().cloned());
        head.extend(self.inputs.iter().cloned());
        head.extend((1..=self.y.first().map_or(0, Vec::len)).map(|i| format!("y{i}")));
        if self.v.is_some() {
            head.extend(["V", "intY2", "intW2"].map(String::from));
        }
        writeln!(out, "{}", head.join(","))?;
        for k in 0..self.len() {
            let mut row = vec![self.t[k]];
            row.extend(&self.x[k]);
            row.extend(&self.u[k]);
            row.extend(&self.y[k]);
            if let Some(v) = &self.v {
                row.extend([v[k], self.int_y2[k], self.int_w2[k]]);
            }
            let cells: Vec<String> = row.iter().map(|&c| sig12(c)).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `%.12g`-style formatting.
fn sig12(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let exp = v.abs().log10().floor() as i32;
    let s = if (-4..12).contains(&exp) {
        let s = format!("{:.*}", (11 - exp).max(0) as usize, v);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{v:.11e}");
        let (m, e) = s.split_once('e').unwrap();
        let m = if m.contains('.') {
            m.trim_end_matches('0').trim_end_matches('.')
        } else {
            m
        };
        format!("{m}e{e}")
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

struct Stepper<'a> {
    cl: &'a ClosedLoop,
    w: Vec<Sampler>,
    buf: Vec<f64>,
    stack: Vec<f64>,
}

impl Stepper<'_> {
    fn f(&mut self, t: f64, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        self.buf[..n].copy_from_slice(x);
        for (k, s) in self.w.iter().enumerate() {
            self.buf[n + k] = s.at(t);
        }
        self.cl.rhs.eval_into(&self.buf, out, &mut self.stack);
    }
}

/// Integrates the closed loop from `x0`. `w` holds one signal per
/// disturbance; an empty slice means all zero.
pub fn simulate(
    cl: &ClosedLoop,
    x0: &[f64],
    w: &[Signal],
    cfg: &SimConfig,
) -> Result<Trace, SimError> {
    let steps = cfg.validate()?;
    let n = cl.n();
    if x0.len() != n {
        return Err(SimError::Shape(format!(
            "x0 has {} entries for {n} states",
            x0.len()
        )));
    }
    if !w.is_empty() && w.len() != cl.w.len() {
        return Err(SimError::Shape(format!(
            "{} signals for {} disturbances",
            w.len(),
            cl.w.len()
        )));
    }
    let samplers: Vec<Sampler> = if w.is_empty() {
        cl.w.iter()
            .map(|_| Signal::Zero.sampler(cfg.horizon))
            .collect()
    } else {
        w.iter().map(|s| s.sampler(cfg.horizon)).collect()
    };
    let mut st = Stepper {
        cl,
        w: samplers,
        buf: vec![0.0; n + cl.w.len()],
        stack: Vec::new(),
    };
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    );
    st.f(0.0, x0, &mut k1);
    if k1.iter().any(|v| !v.is_finite()) {
        return Err(SimError::NonFinite);
    }
    let mut trace = Trace {
        states: cl.states.iter().map(|s| s.to_string()).collect(),
        inputs: cl.inputs.iter().map(|s| s.to_string()).collect(),
        dt: cfg.dt,
        t: Vec::with_capacity(steps + 1),
        x: Vec::with_capacity(steps + 1),
        u: Vec::with_capacity(steps + 1),
        y: Vec::with_capacity(steps + 1),
        w: Vec::with_capacity(steps + 1),
        v: cl.storage.as_ref().map(|_| Vec::with_capacity(steps + 1)),
        int_y2: Vec::with_capacity(steps + 1),
        int_w2: Vec::with_capacity(steps + 1),
        diverged: false,
    };
    let record = |trace: &mut Trace, st: &mut Stepper, t: f64, x: &[f64]| {
        let mut u = vec![0.0; cl.u.n_out()];
        cl.u.eval_into(x, &mut u, &mut st.stack);
        let mut y = vec![0.0; cl.n_outputs];
        cl.y.eval_into(x, &mut y, &mut st.stack);
        let w: Vec<f64> = st.w.iter().map(|s| s.at(t)).collect();
        let (y2, w2) = (
            y.iter().map(|v| v * v).sum::<f64>(),
            w.iter().map(|v| v * v).sum::<f64>(),
        );
        let (iy, iw) = match (trace.y.last(), trace.w.last()) {
            (Some(py), Some(pw)) => {
                let h = cfg.dt / 2.0;
                let py2: f64 = py.iter().map(|v| v * v).sum();
                let pw2: f64 = pw.iter().map(|v| v * v).sum();
                (
                    trace.int_y2.last().unwrap() + h * (py2 + y2),
                    trace.int_w2.last().unwrap() + h * (pw2 + w2),
                )
            }
            _ => (0.0, 0.0),
        };
        if let (Some(v), Some(p)) = (trace.v.as_mut(), cl.storage.as_ref()) {
            v.push(p.eval(x)[0]);
        }
        trace.t.push(t);
        trace.x.push(x.to_vec());
        trace.u.push(u);
        trace.y.push(y);
        trace.w.push(w);
        trace.int_y2.push(iy);
        trace.int_w2.push(iw);
    };
    let mut x = x0.to_vec();
    record(&mut trace, &mut st, 0.0, &x);
    let h = cfg.dt;
    for k in 0..steps {
        let t = k as f64 * h;
        match cfg.method {
            Method::Euler => {
                st.f(t, &x, &mut k1);
                for i in 0..n {
                    x[i] += h * k1[i];
                }
            }
            Method::Rk4 => {
                st.f(t, &x, &mut k1);
                for i in 0..n {
                    tmp[i] = x[i] + 0.5 * h * k1[i];
                }
                st.f(t + 0.5 * h, &tmp, &mut k2);
                for i in 0..n {
                    tmp[i] = x[i] + 0.5 * h * k2[i];
                }
                st.f(t + 0.5 * h, &tmp, &mut k3);
                for i in 0..n {
                    tmp[i] = x[i] + h * k3[i];
                }
                st.f(t + h, &tmp, &mut k4);
                for i in 0..n {
                    x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            trace.diverged = true;
            break;
        }
        record(&mut trace, &mut st, (k + 1) as f64 * h, &x);
        if norm(&x) > DIVERGENCE {
            trace.diverged = true;
            break;
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(1.5), "1.5");
        assert_eq!(sig12(-0.1 - 0.2), "-0.3");
        assert_eq!(sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(sig12(1e-7), "1e-7");
        assert_eq!(sig12(6.5e-5), "6.5e-5");
        assert_eq!(sig12(1.25e-4), "0.000125");
        assert_eq!(sig12(123456789012345.0), "1.23456789012e14");
    }
}
