use std::fmt::Write;

use serde_json::{json, Value};

use crate::symcore::{Expr, SymMatrix};

use super::{StructureOutcome, Variant};

fn list(v: &[Expr]) -> String {
    let parts: Vec<String> = v.iter().map(|e| e.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

fn strings(v: &[Expr]) -> Value {
    Value::from(v.iter().map(|e| e.to_string()).collect::<Vec<_>>())
}

fn matrix(m: &SymMatrix) -> Value {
    Value::from(
        (0..m.nrows())
            .map(|i| strings(&m.row(i)))
            .collect::<Vec<_>>(),
    )
}

/// Deterministic plain-text report.
pub fn render_text(out: &StructureOutcome) -> String {
    let mut s = String::new();
    let variant = match out.variant {
        Variant::InfiniteZero => "infinite zero structure",
        Variant::ZeroOutput => "zero output structure",
    };
    let _ = writeln!(s, "algorithm: {variant}");
    let _ = writeln!(s, "n = {}, m = {}, p = {}", out.n, out.m, out.p);
    for st in &out.steps {
        let _ = writeln!(s, "step {}: rho = {}", st.k, st.rho);
        let _ = writeln!(s, "  R = {:?}, S = {:?}", st.r_rows, st.s_rows);
        let _ = writeln!(s, "  Omega = {}", list(&st.omega));
        let _ = writeln!(s, "  P = {}", st.p);
        if let Some(w) = &st.w {
            let _ = writeln!(s, "  W = {w}");
        }
        let _ = writeln!(s, "  Theta = {}", list(&st.theta));
    }
    let _ = writeln!(s, "k* = {}", out.k_star);
    let _ = writeln!(s, "rho = {:?}", out.rho);
    let _ = writeln!(s, "q = {:?}", out.q);
    let _ = writeln!(s, "m_d = {}, n_d = {}", out.m_d, out.n_d);
    let _ = writeln!(s, "invertibility: {:?}", out.invertibility);
    for w in &out.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}

/// Sidecar with keys `variant`, `n`, `m`, `p`, `rho`, `q`, `k_star`, `m_d`,
/// `n_d`, `invertibility`, `steps[]` (`k`, `rho`, `R`, `S`, `Omega`, `P`,
/// `W`, `Theta`), `a`, `b`, `warnings`.
pub fn to_json(out: &StructureOutcome) -> Value {
    let steps: Vec<Value> = out
        .steps
        .iter()
        .map(|st| {
            json!({
                "k": st.k,
                "rho": st.rho,
                "R": st.r_rows,
                "S": st.s_rows,
                "Omega": strings(&st.omega),
                "P": matrix(&st.p),
                "W": st.w.as_ref().map(matrix),
                "Theta": strings(&st.theta),
            })
        })
        .collect();
    json!({
        "variant": out.variant,
        "n": out.n,
        "m": out.m,
        "p": out.p,
        "rho": out.rho,
        "q": out.q,
        "k_star": out.k_star,
        "m_d": out.m_d,
        "n_d": out.n_d,
        "invertibility": out.invertibility,
        "steps": steps,
        "a": strings(&out.a),
        "b": matrix(&out.b),
        "warnings": out.warnings,
    })
}
