use crate::structalgo::EXPR_BUDGET;
use crate::symcore::{diff, is_zero, Expr, Sym};

use super::BackstepError;

/// One integrator step: `Ẋ = F(X, ξ)`, `ξ̇ = u + G(X, ξ)`, with optional
/// disturbance bounds `R` on `Ẋ` (per component) and on `ξ̇`.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub states: Vec<Sym>,
    pub f: Vec<Expr>,
    pub xi: Sym,
    pub g: Expr,
    /// Empty when undisturbed.
    pub bounds: Vec<Expr>,
    pub xi_bound: Expr,
}

impl Step {
    pub fn new(states: Vec<Sym>, f: Vec<Expr>, xi: Sym, g: Expr) -> Step {
        Step {
            states,
            f,
            xi,
            g,
            bounds: Vec::new(),
            xi_bound: Expr::zero(),
        }
    }

    pub fn with_bounds(mut self, bounds: Vec<Expr>, xi_bound: Expr) -> Step {
        self.bounds = bounds;
        self.xi_bound = xi_bound;
        self
    }
}

/// Output of a single step.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct StepOut {
    pub u: Expr,
    pub w: Expr,
    /// Aggregate disturbance bound `R̄`, zero when undisturbed.
    pub r_bar: Expr,
}

/// Integrator backstepping with gain `c`: `W = V + (ξ−φ)²/2` and
/// `u = −c(ξ−φ) + L_Fφ − V_X·∂F/∂ξ − G`.
pub fn integrator_backstep(
    step: &Step,
    phi: &Expr,
    v: &Expr,
    c: &Expr,
) -> Result<(Expr, Expr), BackstepError> {
    let out = core(step, phi, v, c, None)?;
    Ok((out.u, out.w))
}

/// Integrator step with nonlinear damping `−(ξ−φ)(1+R̄²)/(4γ_s²)`, where
/// `R̄ = R_ξ + Σ |∂φ/∂X_k| R_k`. The damping is omitted when `R̄ ≡ 0`.
pub fn dissipative_backstep(
    step: &Step,
    phi: &Expr,
    v: &Expr,
    c: &Expr,
    gamma_s2: &Expr,
) -> Result<(Expr, Expr), BackstepError> {
    let out = core(step, phi, v, c, Some(gamma_s2))?;
    Ok((out.u, out.w))
}

pub(crate) fn core(
    step: &Step,
    phi: &Expr,
    v: &Expr,
    c: &Expr,
    gamma_s2: Option<&Expr>,
) -> Result<StepOut, BackstepError> {
    if step.f.len() != step.states.len() {
        return Err(BackstepError::Shape(format!(
            "{} states, {} rows of F",
            step.states.len(),
            step.f.len()
        )));
    }
    let xi = &*step.xi;
    let mut lf_phi = Vec::with_capacity(step.states.len());
    let mut coupling = Vec::with_capacity(step.states.len());
    let mut spread = Vec::new();
    for (k, (s, f)) in step.states.iter().zip(&step.f).enumerate() {
        let a = diff(f, xi).simplify();
        if !is_zero(&diff(&a, xi)) {
            return Err(BackstepError::NotAffine(step.xi.clone()));
        }
        let dphi = diff(phi, s).simplify();
        if !dphi.is_zero_literal() {
            lf_phi.push(&dphi * f);
        }
        if !a.is_zero_literal() {
            coupling.push(diff(v, s) * a);
        }
        if let Some(r) = step.bounds.get(k) {
            if !r.is_zero_literal() && !dphi.is_zero_literal() {
                spread.push(dphi.abs() * r);
            }
        }
    }
    let e = Expr::sym(&step.xi) - phi;
    let mut u = Expr::add_all(lf_phi) - Expr::add_all(coupling) - c * &e - &step.g;
    let mut r_bar = Expr::zero();
    if let Some(g2) = gamma_s2 {
        r_bar = (step.xi_bound.clone() + Expr::add_all(spread)).simplify();
        if !is_zero(&r_bar) {
            let damping = (Expr::one() + r_bar.pow(2)) / (Expr::int(4) * g2);
            u = u - &e * damping;
        }
    }
    let u = u.simplify();
    if u.size() > EXPR_BUDGET {
        return Err(BackstepError::ExprBudget(step.xi.clone()));
    }
    let w = (v + e.pow(2) / Expr::int(2)).simplify();
    Ok(StepOut { u, w, r_bar })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::{parse, sym_eq};

    fn e(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn bare_integrator() {
        let step = Step::new(vec![], vec![], Sym::from("xi"), Expr::zero());
        let (u, w) =
            integrator_backstep(&step, &Expr::zero(), &Expr::zero(), &Expr::int(3)).unwrap();
        assert!(sym_eq(&u, &e("-3*xi")));
        assert!(sym_eq(&w, &e("xi^2/2")));
    }

    #[test]
    fn scalar_step() {
        // ẋ = x + ξ, φ = -2x, V = x²/2
        let step = Step::new(
            vec![Sym::from("x")],
            vec![e("x + xi")],
            Sym::from("xi"),
            Expr::zero(),
        );
        let (u, _) = integrator_backstep(&step, &e("-2*x"), &e("x^2/2"), &Expr::one()).unwrap();
        assert!(sym_eq(&u, &e("-2*(x + xi) - x - (xi + 2*x)")));
    }

    #[test]
    fn rejects_nonaffine() {
        let step = Step::new(
            vec![Sym::from("x")],
            vec![e("xi^2")],
            Sym::from("xi"),
            Expr::zero(),
        );
        assert!(matches!(
            integrator_backstep(&step, &Expr::zero(), &e("x^2/2"), &Expr::one()),
            Err(BackstepError::NotAffine(_))
        ));
    }

    #[test]
    fn zero_bounds_drop_damping() {
        let step = Step::new(
            vec![Sym::from("x")],
            vec![e("x + xi")],
            Sym::from("xi"),
            Expr::zero(),
        )
        .with_bounds(vec![Expr::zero()], Expr::zero());
        let plain = integrator_backstep(&step, &e("-2*x"), &e("x^2/2"), &Expr::one()).unwrap();
        let damped =
            dissipative_backstep(&step, &e("-2*x"), &e("x^2/2"), &Expr::one(), &e("gamma^2"))
                .unwrap();
        assert_eq!(plain, damped);
    }
}
