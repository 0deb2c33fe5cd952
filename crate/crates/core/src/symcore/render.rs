use std::fmt::{self, Write};

use super::expr::{Expr, Node};
use super::num::Num;

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        render_into(self, &mut s);
        f.write_str(&s)
    }
}

/// Renders in the parser's grammar; `parse(render(e)) == e`.
pub fn render(e: &Expr) -> String {
    e.to_string()
}

fn render_into(e: &Expr, out: &mut String) {
    match e.node() {
        Node::Num(n) => render_num(*n, out),
        Node::Var(v) => out.push_str(v),
        Node::Add(ts) => {
            for (i, t) in ts.iter().enumerate() {
                let (c, _) = t.split_coeff();
                if i == 0 {
                    render_into(t, out);
                } else if c.is_negative() {
                    out.push_str(" - ");
                    render_into(&-t, out);
                } else {
                    out.push_str(" + ");
                    render_into(t, out);
                }
            }
        }
        Node::Mul(fs) => render_product(fs, out),
        Node::Pow(..) => render_product(std::slice::from_ref(e), out),
        Node::Func(func, a) => {
            out.push_str(func.name());
            out.push('(');
            render_into(a, out);
            out.push(')');
        }
    }
}

fn render_num(n: Num, out: &mut String) {
    let _ = write!(out, "{n}");
}

fn render_factor(base: &Expr, k: i64, out: &mut String) {
    let paren = matches!(base.node(), Node::Add(_));
    if paren {
        out.push('(');
    }
    render_into(base, out);
    if paren {
        out.push(')');
    }
    if k != 1 {
        let _ = write!(out, "^{k}");
    }
}

fn render_product(fs: &[Expr], out: &mut String) {
    let mut coef = None;
    let mut numer = Vec::new();
    let mut denom = Vec::new();
    for f in fs {
        match f.node() {
            Node::Num(n) => coef = Some(*n),
            Node::Pow(b, k) if *k < 0 => denom.push((b.clone(), -k)),
            Node::Pow(b, k) => numer.push((b.clone(), *k)),
            _ => numer.push((f.clone(), 1)),
        }
    }
    match coef {
        Some(c) if numer.is_empty() => render_num(c, out),
        Some(c) if c == Num::int(-1) => out.push('-'),
        Some(c) => {
            render_num(c, out);
            out.push('*');
        }
        None if numer.is_empty() => out.push('1'),
        None => {}
    }
    for (i, (b, k)) in numer.iter().enumerate() {
        if i > 0 {
            out.push('*');
        }
        render_factor(b, *k, out);
    }
    for (b, k) in &denom {
        out.push('/');
        render_factor(b, *k, out);
    }
}

#[cfg(test)]
mod tests {
    use crate::symcore::parse;

    #[test]
    fn shapes() {
        for s in [
            "x4 - x1*x4",
            "3/4*x1^2 + x2",
            "-x1*sin(x2)/(1 - x1)^2",
            "1/x1",
            "0.5*x1",
            "-3/4",
            "x1/x2/x3",
        ] {
            let e = parse(s).unwrap();
            let r = e.to_string();
            assert_eq!(parse(&r).unwrap(), e, "{s} -> {r}");
        }
        assert_eq!(parse("x4 - x1*x4").unwrap().to_string(), "x4 - x1*x4");
        assert_eq!(parse("2/x1").unwrap().to_string(), "2/x1");
    }
}
