use std::fmt;

use nalgebra::DMatrix;

use super::eval::Program;
use super::expr::{EvalError, Expr, Sym};
use super::zero::is_zero;

/// Dense row-major matrix of expressions.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SymMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Expr>,
}

impl SymMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Expr>) -> SymMatrix {
        assert_eq!(
            data.len(),
            rows * cols,
            "SymMatrix data does not match its shape"
        );
        SymMatrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> SymMatrix {
        SymMatrix::new(rows, cols, vec![Expr::zero(); rows * cols])
    }

    pub fn identity(n: usize) -> SymMatrix {
        SymMatrix::from_fn(n, n, |i, j| if i == j { Expr::one() } else { Expr::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Expr) -> SymMatrix {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        SymMatrix { rows, cols, data }
    }

    /// Rows must share a length; `cols` is used when `rows` is empty.
    pub fn from_rows(rows: Vec<Vec<Expr>>, cols: usize) -> SymMatrix {
        let c = rows.first().map_or(cols, Vec::len);
        assert!(rows.iter().all(|r| r.len() == c), "ragged rows");
        let r = rows.len();
        SymMatrix::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn from_f64(m: &DMatrix<f64>) -> SymMatrix {
        SymMatrix::from_fn(m.nrows(), m.ncols(), |i, j| Expr::float(m[(i, j)]))
    }

    pub fn column(v: Vec<Expr>) -> SymMatrix {
        let n = v.len();
        SymMatrix::new(n, 1, v)
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, e: Expr) {
        self.data[i * self.cols + j] = e;
    }

    pub fn row(&self, i: usize) -> Vec<Expr> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn col(&self, j: usize) -> Vec<Expr> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn entries(&self) -> &[Expr] {
        &self.data
    }

    pub fn transpose(&self) -> SymMatrix {
        SymMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn select_rows(&self, idx: &[usize]) -> SymMatrix {
        SymMatrix::from_fn(idx.len(), self.cols, |i, j| self.get(idx[i], j).clone())
    }

    pub fn select_cols(&self, idx: &[usize]) -> SymMatrix {
        SymMatrix::from_fn(self.rows, idx.len(), |i, j| self.get(i, idx[j]).clone())
    }

    pub fn vstack(&self, other: &SymMatrix) -> SymMatrix {
        let cols = if self.rows == 0 {
            other.cols
        } else {
            self.cols
        };
        assert!(
            other.rows == 0 || other.cols == cols,
            "vstack column mismatch"
        );
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        SymMatrix::new(self.rows + other.rows, cols, data)
    }

    pub fn hstack(&self, other: &SymMatrix) -> SymMatrix {
        self.transpose().vstack(&other.transpose()).transpose()
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> SymMatrix {
        SymMatrix::new(self.rows, self.cols, self.data.iter().map(f).collect())
    }

    pub fn mul(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        SymMatrix::from_fn(self.rows, other.cols, |i, j| {
            Expr::add_all((0..self.cols).map(|k| self.get(i, k) * other.get(k, j)))
        })
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        SymMatrix::new(
            self.rows,
            self.cols,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        SymMatrix::new(
            self.rows,
            self.cols,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(is_zero)
    }

    pub fn compile(&self, vars: &[Sym]) -> Result<Program, EvalError> {
        Program::compile(&self.data, vars)
    }

    pub fn eval(&self, vars: &[Sym], x: &[f64]) -> Result<DMatrix<f64>, EvalError> {
        let prog = self.compile(vars)?;
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &prog.eval(x)))
    }

    pub fn subs(&self, map: &std::collections::HashMap<Sym, Expr>) -> SymMatrix {
        self.map(|e| e.subs(map))
    }

    /// Laplace expansion; intended for the small blocks the algorithms invert.
    pub fn det(&self) -> Expr {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let idx: Vec<usize> = (0..self.cols).collect();
        self.minor_det(0, &idx)
    }

    fn minor_det(&self, row: usize, cols: &[usize]) -> Expr {
        match cols.len() {
            0 => Expr::one(),
            1 => self.get(row, cols[0]).clone(),
            2 => {
                self.get(row, cols[0]) * self.get(row + 1, cols[1])
                    - self.get(row, cols[1]) * self.get(row + 1, cols[0])
            }
            _ => {
                let mut terms = Vec::with_capacity(cols.len());
                for (k, &c) in cols.iter().enumerate() {
                    let a = self.get(row, c);
                    if a.is_zero_literal() {
                        continue;
                    }
                    let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
                    let m = a * self.minor_det(row + 1, &rest);
                    terms.push(if k % 2 == 0 { m } else { -m });
                }
                Expr::add_all(terms)
            }
        }
    }

    pub fn adjugate(&self) -> SymMatrix {
        let n = self.rows;
        assert_eq!(n, self.cols);
        if n == 1 {
            return SymMatrix::identity(1);
        }
        SymMatrix::from_fn(n, n, |i, j| {
            // cofactor C_ji
            let rows: Vec<usize> = (0..n).filter(|&r| r != j).collect();
            let cols: Vec<usize> = (0..n).filter(|&c| c != i).collect();
            let sub = self.select_rows(&rows).select_cols(&cols);
            let d = sub.det();
            if (i + j) % 2 == 0 {
                d
            } else {
                -d
            }
        })
    }

    /// Symbolic inverse via the adjugate; `None` if the determinant is zero.
    pub fn inverse(&self) -> Option<SymMatrix> {
        let d = self.det();
        if is_zero(&d) {
            return None;
        }
        let inv = d.recip();
        Some(self.adjugate().map(|e| e * &inv))
    }
}

impl fmt::Display for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
        }
        write!(f, "]")
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymMatrix{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::parse;

    #[test]
    fn inverse_of_triangular() {
        let m = SymMatrix::from_rows(
            vec![
                vec![Expr::one(), parse("x3").unwrap()],
                vec![Expr::zero(), parse("1 - x1").unwrap()],
            ],
            2,
        );
        let inv = m.inverse().unwrap();
        assert!(m.mul(&inv).sub(&SymMatrix::identity(2)).is_zero());
    }
}
