//! Dense matrices and LU factorization with partial pivoting.

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |v| v.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn mul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows).map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Relative pivot threshold below which a matrix is reported singular.
pub const SINGULAR_PIVOT: f64 = 1e-14;

/// Packed LU factors `PA = LU`.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        if a.rows != a.cols {
            return Err(Error::InvalidInput(format!("LU needs a square matrix, got {}x{}", a.rows, a.cols)));
        }
        if a.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let n = a.rows;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let tiny = SINGULAR_PIVOT * a.norm_inf();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
            if pmax <= tiny || pmax == 0.0 {
                return Err(Error::Singular { pivot: k });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let piv = lu[k * n + k];
            for i in k + 1..n {
                let l = lu[i * n + k] / piv;
                lu[i * n + k] = l;
                if l != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= l * lu[k * n + j];
                    }
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        x
    }

    pub fn determinant(&self) -> f64 {
        let n = self.n;
        let mut det: f64 = (0..n).map(|i| self.lu[i * n + i]).product();
        // parity of the permutation
        let mut seen = vec![false; n];
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut j = start;
            while !seen[j] {
                seen[j] = true;
                j = self.perm[j];
                len += 1;
            }
            if len % 2 == 0 {
                det = -det;
            }
        }
        det
    }
}

pub fn lu_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    Ok(Lu::factor(a)?.solve(b))
}

/// Solves `[A B; C D] [x; y] = [f; g]` by block elimination on the LU of `A`.
pub fn bordered_solve(
    a: &DenseMatrix,
    b: &DenseMatrix,
    c: &DenseMatrix,
    d: &DenseMatrix,
    f: &[f64],
    g: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let lu = Lu::factor(a)?;
    let n = a.rows();
    let k = d.rows();
    let af = lu.solve(f);
    let ab: Vec<Vec<f64>> = (0..b.cols()).map(|j| lu.solve(&(0..n).map(|i| b[(i, j)]).collect::<Vec<_>>())).collect();
    let schur = DenseMatrix::from_fn(k, k, |i, j| d[(i, j)] - (0..n).map(|l| c[(i, l)] * ab[j][l]).sum::<f64>());
    let rhs: Vec<f64> = (0..k).map(|i| g[i] - (0..n).map(|l| c[(i, l)] * af[l]).sum::<f64>()).collect();
    let y = lu_solve(&schur, &rhs).map_err(|e| match e {
        Error::Singular { pivot } => Error::Singular { pivot: n + pivot },
        other => other,
    })?;
    let x: Vec<f64> = (0..n).map(|i| af[i] - (0..k).map(|j| ab[j][i] * y[j]).sum::<f64>()).collect();
    Ok((x, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_solve() {
        let b = vec![1.0, -2.0, 3.5];
        assert_eq!(lu_solve(&DenseMatrix::identity(3), &b).unwrap(), b);
    }

    #[test]
    fn hilbert_four() {
        let a = DenseMatrix::from_fn(4, 4, |i, j| 1.0 / (i + j + 1) as f64);
        let b = a.mul_vec(&[1.0; 4]);
        let x = lu_solve(&a, &b).unwrap();
        assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-8));
    }

    #[test]
    fn repeated_row_is_singular() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0], vec![0.0, 1.0, 5.0]]);
        assert!(matches!(lu_solve(&a, &[1.0, 1.0, 1.0]), Err(Error::Singular { .. })));
    }

    #[test]
    fn residual_bound() {
        let a = DenseMatrix::from_fn(30, 30, |i, j| ((i * 7 + j * 13) % 11) as f64 - 5.0 + if i == j { 20.0 } else { 0.0 });
        let b: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let x = lu_solve(&a, &b).unwrap();
        let r = a.mul_vec(&x);
        let xn = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let bn = b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let rn = r.iter().zip(&b).fold(0.0_f64, |m, (u, v)| m.max((u - v).abs()));
        assert!(rn <= 1e-10 * (a.norm_inf() * xn + bn));
    }

    #[test]
    fn determinant_with_pivoting() {
        let a = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 3.0]]);
        assert!((Lu::factor(&a).unwrap().determinant() + 2.0).abs() < 1e-15);
    }

    #[test]
    fn bordered_matches_full() {
        let full = DenseMatrix::from_fn(5, 5, |i, j| if i == j { 4.0 } else { 1.0 / (1 + i + 2 * j) as f64 });
        let rhs = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let x_full = lu_solve(&full, &rhs).unwrap();
        let a = DenseMatrix::from_fn(3, 3, |i, j| full[(i, j)]);
        let b = DenseMatrix::from_fn(3, 2, |i, j| full[(i, 3 + j)]);
        let c = DenseMatrix::from_fn(2, 3, |i, j| full[(3 + i, j)]);
        let d = DenseMatrix::from_fn(2, 2, |i, j| full[(3 + i, 3 + j)]);
        let (x, y) = bordered_solve(&a, &b, &c, &d, &rhs[..3], &rhs[3..]).unwrap();
        for (u, v) in x.iter().chain(&y).zip(&x_full) {
            assert!((u - v).abs() < 1e-13);
        }
    }
}
