//! Numeric structure of linear triples `(A, B, C)`: infinite zeros, vector
//! relative degree and the linear normal form.

mod algo;
mod decompose;

use std::fmt::Write;

use nalgebra::DMatrix;

use crate::symcore::{Expr, Sym, SymMatrix};
use crate::sysmodel::{AffineSystem, Domain};

pub use algo::{linear_infinite_zeros, linear_structure, vector_relative_degree, LinearStructure};
pub use decompose::{decompose, LinearDecomposition};

/// Relative singular-value threshold for constant matrices.
pub const LIN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("vector relative degree needs m = p, got m = {m}, p = {p}")]
    NotSquare { m: usize, p: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearTriple {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

fn rows(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(r, c, v)
}

impl LinearTriple {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self, LinError> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(LinError::Shape(format!("A is {}×{}", n, a.ncols())));
        }
        if b.nrows() != n {
            return Err(LinError::Shape(format!(
                "B has {} rows, expected {n}",
                b.nrows()
            )));
        }
        if c.ncols() != n {
            return Err(LinError::Shape(format!(
                "C has {} columns, expected {n}",
                c.ncols()
            )));
        }
        Ok(LinearTriple { a, b, c })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    /// `ỹ = T_o y`.
    pub fn with_output_transform(&self, t_o: &DMatrix<f64>) -> LinearTriple {
        LinearTriple {
            a: self.a.clone(),
            b: self.b.clone(),
            c: t_o * &self.c,
        }
    }

    /// `f = Ax`, `g = B`, `h = Cx` over states `x1..xn` on the unit box.
    pub fn to_affine(&self) -> AffineSystem {
        let n = self.n();
        let states: Vec<Sym> = (1..=n)
            .map(|i| Sym::from(format!("x{i}").as_str()))
            .collect();
        let xs: Vec<Expr> = states.iter().map(Expr::sym).collect();
        let lin = |m: &DMatrix<f64>| -> Vec<Expr> {
            (0..m.nrows())
                .map(|i| {
                    (0..n)
                        .map(|j| Expr::num(exact(m[(i, j)])) * &xs[j])
                        .fold(Expr::zero(), |a, t| a + t)
                })
                .collect()
        };
        let g = SymMatrix::from_fn(n, self.m(), |i, j| Expr::num(exact(self.b[(i, j)])));
        AffineSystem::new(states, lin(&self.a), g, lin(&self.c), Domain::unit(n))
            .expect("linear triple is valid")
    }

    pub fn parse(text: &str) -> Result<Self, LinError> {
        let mut blocks: Vec<(String, Vec<Vec<f64>>)> = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                blocks.push((name.trim().to_string(), Vec::new()));
                continue;
            }
            let Some(cur) = blocks.last_mut() else {
                return Err(LinError::Parse {
                    line: k + 1,
                    msg: "row before any [A]/[B]/[C] header".into(),
                });
            };
            let row = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| LinError::Parse {
                    line: k + 1,
                    msg: e.to_string(),
                })?;
            cur.1.push(row);
        }
        let get = |name: &str| -> Result<DMatrix<f64>, LinError> {
            let (_, rs) =
                blocks
                    .iter()
                    .find(|(n, _)| n == name)
                    .ok_or_else(|| LinError::Parse {
                        line: 1,
                        msg: format!("missing [{name}]"),
                    })?;
            let c = rs.first().map_or(0, |r| r.len());
            if rs.iter().any(|r| r.len() != c) {
                return Err(LinError::Shape(format!("ragged rows in [{name}]")));
            }
            Ok(DMatrix::from_fn(rs.len(), c, |i, j| rs[i][j]))
        };
        let (a, b, c) = (get("A")?, get("B")?, get("C")?);
        // an n×0 input block has no rows to write down
        let b = if b.nrows() == 0 {
            DMatrix::zeros(a.nrows(), 0)
        } else {
            b
        };
        LinearTriple::new(a, b, c)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, LinError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| LinError::Io(format!("{}: {e}", path.as_ref().display())))?;
        LinearTriple::parse(&text)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (name, m) in [("A", &self.a), ("B", &self.b), ("C", &self.c)] {
            let _ = writeln!(s, "[{name}]");
            for i in 0..m.nrows() {
                let r: Vec<String> = m.row(i).iter().map(|v| format!("{v}")).collect();
                let _ = writeln!(s, "{}", r.join(" "));
            }
        }
        s
    }

    pub fn counter3(alpha: f64) -> LinearTriple {
        LinearTriple {
            a: rows(
                5,
                5,
                &[
                    0., 1., 0., 0., 0., //
                    0., 0., 0., 0., 0., //
                    0., 0., 0., 1., 0., //
                    0., 0., 0., 0., 1., //
                    0., 0., 0., 0., 0.,
                ],
            ),
            b: rows(5, 2, &[0., 0., 1., 0., alpha, 0., 0., 0., 0., 1.]),
            c: rows(2, 5, &[1., 0., 0., 0., 0., 0., 0., 1., 0., 0.]),
        }
    }

    pub fn exam_sch() -> LinearTriple {
        LinearTriple {
            a: rows(
                5,
                5,
                &[
                    1., 1., -2., 0., 0., //
                    0., 5., -4., 1., 2., //
                    0., 1., 0., 0., 1., //
                    -2., 0., -1., 0., 0., //
                    0., 0., 0., -1., 0.,
                ],
            ),
            b: rows(5, 2, &[0., 0., 1., 1., 0., 0., -1., 1., 0., 0.]),
            c: rows(2, 5, &[0., 1., -2., 0., 0., 0., 1., -2., 0., 1.]),
        }
    }

    pub fn exam1(alpha: f64) -> LinearTriple {
        LinearTriple {
            a: rows(
                4,
                4,
                &[
                    0., 0., 0., 0., alpha, 0., 1., 0., 0., 0., 0., 1., 0., 0., 0., 0.,
                ],
            ),
            b: rows(4, 2, &[1., 0., 0., 0., 0., 0., 0., 1.]),
            c: rows(2, 4, &[1., 0., 0., 0., 0., 1., 0., 0.]),
        }
    }

    pub fn exam2(alpha: f64) -> LinearTriple {
        LinearTriple {
            a: rows(
                4,
                4,
                &[
                    0., 0., 0., 0., 0., 0., 1., 0., 0., 0., 0., 1., 0., 0., 0., 0.,
                ],
            ),
            b: rows(4, 2, &[1., 0., alpha, 0., 0., 0., 0., 1.]),
            c: rows(2, 4, &[1., 0., 0., 0., 0., 1., 0., 0.]),
        }
    }
}

/// Small integers and halves stay exact in the symbolic encoding.
fn exact(v: f64) -> crate::symcore::Num {
    let twice = v * 2.0;
    if twice.fract() == 0.0 && twice.abs() < 1e12 {
        crate::symcore::Num::ratio(twice as i128, 2)
    } else {
        crate::symcore::Num::Float(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let t = LinearTriple::exam_sch();
        assert_eq!(LinearTriple::parse(&t.render()).unwrap(), t);
    }

    #[test]
    fn shape_errors() {
        let e = LinearTriple::new(
            DMatrix::zeros(2, 2),
            DMatrix::zeros(3, 1),
            DMatrix::zeros(1, 2),
        )
        .unwrap_err();
        assert!(matches!(e, LinError::Shape(_)));
        assert!(LinearTriple::parse("1 2\n").is_err());
    }
}
