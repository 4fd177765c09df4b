//! Dense matrices over the scalar tower. Elimination pivots exactly on exact
//! entries and by magnitude otherwise; rank and kernel take an explicit zero
//! threshold so rational inputs stay exact.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Scalar>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![Scalar::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Scalar::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Scalar) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Scalar>>) -> Self {
        let r = rows.len();
        let c = rows.first().map(|x| x.len()).unwrap_or(0);
        assert!(rows.iter().all(|x| x.len() == c));
        Mat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a.add(b))
            .collect();
        Mat {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        self.add(&other.scale(&Scalar::from_int(-1)))
    }

    pub fn scale(&self, s: &Scalar) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a.mul(s)).collect(),
        }
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if b.is_zero() {
                        continue;
                    }
                    out[(i, j)] = out[(i, j)].add(&a.mul(b));
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![Scalar::zero(); self.rows];
        for i in 0..self.rows {
            for j in 0..self.cols {
                if !self[(i, j)].is_zero() && !v[j].is_zero() {
                    out[i] = out[i].add(&self[(i, j)].mul(&v[j]));
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|s| s.abs()).fold(0.0, f64::max)
    }

    pub fn is_zero_within(&self, tol: f64) -> bool {
        self.data.iter().all(|s| s.is_zero() || s.abs() <= tol)
    }

    fn pivot_row(&self, col: usize, start: usize, tol: f64) -> Option<usize> {
        let mut best: Option<(usize, f64, bool)> = None;
        for r in start..self.rows {
            let s = &self[(r, col)];
            if s.is_zero() {
                continue;
            }
            let mag = s.abs();
            if s.is_exact() || mag > tol {
                let exact = s.is_exact();
                match &best {
                    None => best = Some((r, mag, exact)),
                    Some((_, m, e)) => {
                        // prefer exact pivots, then larger magnitude
                        if (exact && !e) || (exact == *e && mag > *m) {
                            best = Some((r, mag, exact));
                        }
                    }
                }
            }
        }
        best.map(|(r, _, _)| r)
    }

    /// Row echelon elimination on a copy; returns (echelon matrix, pivot columns).
    fn echelon(&self, tol: f64) -> (Mat, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row >= m.rows {
                break;
            }
            let Some(p) = m.pivot_row(col, row, tol) else {
                continue;
            };
            for j in 0..m.cols {
                let tmp = m[(row, j)].clone();
                m[(row, j)] = m[(p, j)].clone();
                m[(p, j)] = tmp;
            }
            let inv = m[(row, col)].inv();
            for j in col..m.cols {
                m[(row, j)] = m[(row, j)].mul(&inv);
            }
            for r in 0..m.rows {
                if r != row && !m[(r, col)].is_zero() {
                    let f = m[(r, col)].clone();
                    for j in col..m.cols {
                        let t = m[(row, j)].mul(&f);
                        m[(r, j)] = m[(r, j)].sub(&t);
                    }
                    m[(r, col)] = Scalar::zero();
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self, tol: f64) -> usize {
        self.echelon(tol).1.len()
    }

    /// Basis of the right kernel.
    pub fn kernel(&self, tol: f64) -> Vec<Vec<Scalar>> {
        let (e, pivots) = self.echelon(tol);
        let mut free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.sort_unstable();
        let mut basis = Vec::new();
        for &fc in &free {
            let mut v = vec![Scalar::zero(); self.cols];
            v[fc] = Scalar::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = e[(r, fc)].neg();
            }
            basis.push(v);
        }
        basis
    }

    pub fn inverse(&self) -> Result<Mat> {
        assert!(self.is_square());
        let n = self.rows;
        let mut aug = Mat::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, n + i)] = Scalar::one();
        }
        let (e, pivots) = aug.echelon(0.0);
        if pivots.len() < n || pivots.iter().enumerate().any(|(i, &p)| p != i) {
            return Err(Error::DegeneratePairing(
                "matrix is singular (no inverse)".into(),
            ));
        }
        Ok(Mat::from_fn(n, n, |i, j| e[(i, n + j)].clone()))
    }

    pub fn solve(&self, b: &[Scalar]) -> Result<Vec<Scalar>> {
        let inv = self.inverse()?;
        Ok(inv.apply(b))
    }

    /// exp(self) for a nilpotent matrix; fails if not nilpotent within n steps.
    pub fn exp_nilpotent(&self) -> Result<Mat> {
        assert!(self.is_square());
        let n = self.rows;
        let mut out = Mat::identity(n);
        let mut term = Mat::identity(n);
        for k in 1..=n + 1 {
            term = term.matmul(self);
            if term.is_zero_within(0.0) {
                return Ok(out);
            }
            if k > n {
                return Err(Error::Data("matrix is not nilpotent".into()));
            }
            // term = self^k / k! after this rescale
            term = term.scale(&Scalar::from_rat(crate::scalar::rat(1, k as i64)));
            out = out.add(&term);
        }
        Ok(out)
    }

    /// log(self) for a unipotent matrix (self - I nilpotent).
    pub fn log_unipotent(&self) -> Result<Mat> {
        assert!(self.is_square());
        let n = self.rows;
        let nil = self.sub(&Mat::identity(n));
        let mut out = Mat::zeros(n, n);
        let mut pow = Mat::identity(n);
        for k in 1..=n + 1 {
            pow = pow.matmul(&nil);
            if pow.is_zero_within(0.0) {
                return Ok(out);
            }
            if k > n {
                return Err(Error::Data("matrix is not unipotent".into()));
            }
            let sign = if k % 2 == 1 { 1 } else { -1 };
            out = out.add(&pow.scale(&Scalar::from_rat(crate::scalar::rat(sign, k as i64))));
        }
        Ok(out)
    }

    pub fn pow(&self, k: usize) -> Mat {
        assert!(self.is_square());
        let mut out = Mat::identity(self.rows);
        for _ in 0..k {
            out = out.matmul(self);
        }
        out
    }

    pub fn commutes_with(&self, other: &Mat, tol: f64) -> bool {
        self.matmul(other).sub(&other.matmul(self)).is_zero_within(tol)
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = Scalar;
    fn index(&self, (i, j): (usize, usize)) -> &Scalar {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Scalar {
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn inverse_rational() {
        let m = Mat::from_rows(vec![
            vec![Scalar::from_int(2), Scalar::from_int(1)],
            vec![Scalar::from_int(1), Scalar::from_int(1)],
        ]);
        let inv = m.inverse().unwrap();
        let prod = m.matmul(&inv);
        assert_eq!(prod, Mat::identity(2));
        assert_eq!(inv[(0, 0)].as_rational().unwrap(), rat(1, 1));
        assert_eq!(inv[(0, 1)].as_rational().unwrap(), rat(-1, 1));
    }

    #[test]
    fn kernel_and_rank() {
        let m = Mat::from_rows(vec![
            vec![Scalar::from_int(1), Scalar::from_int(2), Scalar::from_int(3)],
            vec![Scalar::from_int(2), Scalar::from_int(4), Scalar::from_int(6)],
        ]);
        assert_eq!(m.rank(0.0), 1);
        let k = m.kernel(0.0);
        assert_eq!(k.len(), 2);
        for v in k {
            let out = m.apply(&v);
            assert!(out.iter().all(|s| s.is_zero()));
        }
    }

    #[test]
    fn exp_log_unipotent() {
        let mut n = Mat::zeros(3, 3);
        n[(1, 0)] = Scalar::from_int(2);
        n[(2, 1)] = Scalar::from_int(-1);
        let e = n.exp_nilpotent().unwrap();
        let l = e.log_unipotent().unwrap();
        assert_eq!(l, n);
    }
}
