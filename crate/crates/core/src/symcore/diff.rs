use super::expr::{Expr, Func, Node};

/// Exact partial derivative. `abs` differentiates to `sign`, whose own
/// derivative is taken as 0 everywhere (including the kink at 0).
pub fn diff(e: &Expr, var: &str) -> Expr {
    if !e.contains_var(var) {
        return Expr::zero();
    }
    match e.node() {
        Node::Num(_) => Expr::zero(),
        Node::Var(v) => {
            if &**v == var {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Add(ts) => Expr::add_all(ts.iter().map(|t| diff(t, var))),
        Node::Mul(fs) => {
            let mut terms = Vec::with_capacity(fs.len());
            for (i, f) in fs.iter().enumerate() {
                let d = diff(f, var);
                if d.is_zero_literal() {
                    continue;
                }
                let mut prod = Vec::with_capacity(fs.len());
                prod.push(d);
                prod.extend(
                    fs.iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, g)| g.clone()),
                );
                terms.push(Expr::mul_all(prod));
            }
            Expr::add_all(terms)
        }
        Node::Pow(b, k) => Expr::mul_all([Expr::int(*k as i128), b.pow(k - 1), diff(b, var)]),
        Node::Func(f, u) => {
            let du = diff(u, var);
            let outer = match f {
                Func::Sin => u.cos(),
                Func::Cos => -u.sin(),
                Func::Exp => e.clone(),
                Func::Sqrt => Expr::rational(1, 2) * e.recip(),
                Func::Abs => u.sign(),
                Func::Sign => Expr::zero(),
            };
            outer * du
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::parse;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn basic_rules() {
        assert_eq!(diff(&p("x1*x2"), "x1"), p("x2"));
        assert_eq!(diff(&p("x4 - x1*x4"), "x1"), p("-x4"));
        assert_eq!(diff(&p("sin(x1^2)"), "x1"), p("2*x1*cos(x1^2)"));
        assert_eq!(diff(&p("sqrt(x1)"), "x1"), p("1/2/sqrt(x1)"));
        assert_eq!(diff(&p("abs(x1)"), "x1"), p("sign(x1)"));
        assert_eq!(diff(&p("1/(1 - x1)"), "x1"), p("1/(1 - x1)^2"));
    }
}
