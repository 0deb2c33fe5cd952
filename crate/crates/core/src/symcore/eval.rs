use super::expr::{powi, EvalError, Expr, Func, Node, Sym};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Const(f64),
    Load(u32),
    Add(u32),
    Mul(u32),
    PowI(i64),
    Func(Func),
    Store(u32),
}

/// Stack bytecode for a list of expressions over fixed variable slots.
#[derive(Debug, Clone)]
pub struct Program {
    ops: Vec<Op>,
    n_vars: usize,
    n_out: usize,
    max_stack: usize,
}

impl Program {
    pub fn compile(exprs: &[Expr], vars: &[Sym]) -> Result<Program, EvalError> {
        let mut ops = Vec::new();
        let mut depth = 0usize;
        let mut max_stack = 0usize;
        for (i, e) in exprs.iter().enumerate() {
            emit(e, vars, &mut ops, &mut depth, &mut max_stack)?;
            ops.push(Op::Store(i as u32));
            depth -= 1;
        }
        Ok(Program {
            ops,
            n_vars: vars.len(),
            n_out: exprs.len(),
            max_stack,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    /// Evaluates into `out`; `stack` is scratch reused across calls.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64], stack: &mut Vec<f64>) {
        debug_assert!(x.len() >= self.n_vars && out.len() >= self.n_out);
        stack.clear();
        stack.reserve(self.max_stack);
        for op in &self.ops {
            match *op {
                Op::Const(c) => stack.push(c),
                Op::Load(i) => stack.push(x[i as usize]),
                Op::Add(n) => {
                    let at = stack.len() - n as usize;
                    let s: f64 = stack[at..].iter().sum();
                    stack.truncate(at);
                    stack.push(s);
                }
                Op::Mul(n) => {
                    let at = stack.len() - n as usize;
                    let p: f64 = stack[at..].iter().product();
                    stack.truncate(at);
                    stack.push(p);
                }
                Op::PowI(k) => {
                    let top = stack.last_mut().unwrap();
                    *top = powi(*top, k);
                }
                Op::Func(f) => {
                    let top = stack.last_mut().unwrap();
                    *top = f.apply(*top);
                }
                Op::Store(i) => out[i as usize] = stack.pop().unwrap(),
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_out];
        let mut stack = Vec::with_capacity(self.max_stack);
        self.eval_into(x, &mut out, &mut stack);
        out
    }
}

fn emit(
    e: &Expr,
    vars: &[Sym],
    ops: &mut Vec<Op>,
    depth: &mut usize,
    max_stack: &mut usize,
) -> Result<(), EvalError> {
    let mut push = |ops: &mut Vec<Op>, op: Op, depth: &mut usize| {
        ops.push(op);
        *depth += 1;
        *max_stack = (*max_stack).max(*depth);
    };
    match e.node() {
        Node::Num(n) => push(ops, Op::Const(n.to_f64()), depth),
        Node::Var(v) => {
            let i = vars
                .iter()
                .position(|w| w == v)
                .ok_or_else(|| EvalError::UnboundVariable(v.to_string()))?;
            push(ops, Op::Load(i as u32), depth);
        }
        Node::Add(xs) | Node::Mul(xs) => {
            for x in xs {
                emit(x, vars, ops, depth, max_stack)?;
            }
            let n = xs.len() as u32;
            ops.push(if matches!(e.node(), Node::Add(_)) {
                Op::Add(n)
            } else {
                Op::Mul(n)
            });
            *depth -= xs.len() - 1;
        }
        Node::Pow(b, k) => {
            emit(b, vars, ops, depth, max_stack)?;
            ops.push(Op::PowI(*k));
        }
        Node::Func(f, a) => {
            emit(a, vars, ops, depth, max_stack)?;
            ops.push(Op::Func(*f));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::parse;

    #[test]
    fn matches_tree_eval() {
        let vars: Vec<Sym> = ["x1", "x2"].iter().map(|s| Sym::from(*s)).collect();
        let es = [
            parse("x1*x2 + sin(x1)/x2").unwrap(),
            parse("sqrt(x2)^3 - 2").unwrap(),
        ];
        let prog = Program::compile(&es, &vars).unwrap();
        let x = [0.3, 1.7];
        let got = prog.eval(&x);
        for (g, e) in got.iter().zip(&es) {
            assert!((g - e.eval(&vars, &x).unwrap()).abs() < 1e-14);
        }
        assert!(Program::compile(&[parse("x3").unwrap()], &vars).is_err());
    }
}
