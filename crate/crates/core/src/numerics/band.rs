//! Sparse elimination for bordered, almost-banded systems.
//!
//! Every row stores a contiguous window of nonzeros over the first `n_core`
//! columns and a dense tail over the remaining `n_tail` columns. Collocation
//! matrices fit this shape: each interval touches a short window of state
//! unknowns plus a few free parameters. Rows spanning the whole state (integral
//! constraints, periodicity, arclength) are allowed and simply stay wide.
//!
//! Elimination runs column by column over the core. Candidate pivots are the
//! rows whose window starts at the current column; among those within a factor
//! of the largest magnitude, the one with the narrowest window wins, which
//! keeps wide rows from spreading fill. The remaining `n_tail` rows form a
//! small dense system solved by LU.

use super::dense::{DenseMatrix, Lu, SINGULAR_PIVOT};
use crate::error::{Error, Result};

const PIVOT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct SparseRow {
    start: usize,
    vals: Vec<f64>,
    off: usize,
    tail: Vec<f64>,
    rhs: f64,
}

impl SparseRow {
    fn end(&self) -> usize {
        self.start + self.vals.len() - self.off
    }

    fn at(&self, col: usize) -> f64 {
        if col < self.start || col >= self.end() {
            0.0
        } else {
            self.vals[self.off + col - self.start]
        }
    }
}

/// Row-wise builder and solver for `A x = b` with `A` square.
#[derive(Debug, Clone)]
pub struct BorderedSparse {
    n_core: usize,
    n_tail: usize,
    rows: Vec<SparseRow>,
}

impl BorderedSparse {
    pub fn new(n_core: usize, n_tail: usize) -> Self {
        Self { n_core, n_tail, rows: Vec::new() }
    }

    pub fn n_core(&self) -> usize {
        self.n_core
    }

    pub fn n_tail(&self) -> usize {
        self.n_tail
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Adds a row whose core window starts at `start`; `vals` may be empty.
    pub fn push_row(&mut self, start: usize, vals: Vec<f64>, tail: Vec<f64>, rhs: f64) {
        assert!(start + vals.len() <= self.n_core, "row window exceeds core width");
        assert_eq!(tail.len(), self.n_tail, "tail length mismatch");
        // trim explicit zeros at both ends so the window is tight
        let first = vals.iter().position(|v| *v != 0.0);
        let (start, vals) = match first {
            None => (self.n_core, Vec::new()),
            Some(f) => {
                let last = vals.iter().rposition(|v| *v != 0.0).unwrap();
                (start + f, vals[f..=last].to_vec())
            }
        };
        self.rows.push(SparseRow { start, vals, off: 0, tail, rhs });
    }

    /// Adds a row given as a dense core vector.
    pub fn push_dense_row(&mut self, core: &[f64], tail: Vec<f64>, rhs: f64) {
        assert_eq!(core.len(), self.n_core);
        self.push_row(0, core.to_vec(), tail, rhs);
    }

    /// Product `A x` for a full unknown vector `x` (core then tail).
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| {
                let core: f64 = r.vals[r.off..].iter().enumerate().map(|(k, v)| v * x[r.start + k]).sum();
                core + r.tail.iter().zip(&x[self.n_core..]).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }

    pub fn rhs(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.rhs).collect()
    }

    /// Dense copy (for tests and small systems).
    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.n_core + self.n_tail;
        let mut m = DenseMatrix::zeros(self.rows.len(), n);
        for (i, r) in self.rows.iter().enumerate() {
            for c in r.start..r.end() {
                m[(i, c)] = r.at(c);
            }
            for (t, v) in r.tail.iter().enumerate() {
                m[(i, self.n_core + t)] = *v;
            }
        }
        m
    }

    /// Solves the system, consuming the stored rows.
    pub fn solve(self) -> Result<Vec<f64>> {
        let n = self.n_core + self.n_tail;
        if self.rows.len() != n {
            return Err(Error::IllPosed { conditions: self.rows.len(), unknowns: n });
        }
        let scale = self
            .rows
            .iter()
            .map(|r| r.vals.iter().chain(&r.tail).fold(0.0_f64, |m, v| m.max(v.abs())))
            .fold(0.0_f64, f64::max);
        if !scale.is_finite() {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let tiny = SINGULAR_PIVOT * scale;

        let n_core = self.n_core;
        let mut buckets: Vec<Vec<SparseRow>> = (0..=n_core).map(|_| Vec::new()).collect();
        for r in self.rows {
            let s = r.start.min(n_core);
            buckets[s].push(r);
        }
        let mut pivots: Vec<SparseRow> = Vec::with_capacity(n_core);

        for j in 0..n_core {
            let mut cand = std::mem::take(&mut buckets[j]);
            let amax = cand.iter().fold(0.0_f64, |m, r| m.max(r.at(j).abs()));
            if amax <= tiny || amax == 0.0 {
                return Err(Error::Singular { pivot: j });
            }
            let mut best = usize::MAX;
            for (k, r) in cand.iter().enumerate() {
                if r.at(j).abs() >= PIVOT_THRESHOLD * amax && (best == usize::MAX || r.end() < cand[best].end()) {
                    best = k;
                }
            }
            let piv = cand.swap_remove(best);
            let pj = piv.at(j);
            let pend = piv.end();
            for mut r in cand {
                let a = r.at(j);
                if a != 0.0 {
                    let l = a / pj;
                    let rend = r.end();
                    if pend > rend {
                        r.vals.resize(r.vals.len() + (pend - rend), 0.0);
                    }
                    let base_r = r.off + (j - r.start);
                    let base_p = piv.off;
                    for c in 1..(pend - j) {
                        r.vals[base_r + c] -= l * piv.vals[base_p + c];
                    }
                    for (t, v) in r.tail.iter_mut().zip(&piv.tail) {
                        *t -= l * v;
                    }
                    r.rhs -= l * piv.rhs;
                }
                // drop column j and any leading zeros
                let mut start = j + 1;
                let mut off = r.off + (j + 1 - r.start);
                let end = r.end();
                while start < end && r.vals[off] == 0.0 {
                    start += 1;
                    off += 1;
                }
                if start >= end {
                    r.vals.clear();
                    r.off = 0;
                    r.start = n_core;
                    buckets[n_core].push(r);
                } else {
                    r.start = start;
                    r.off = off;
                    // compact occasionally so popped fronts do not accumulate
                    if r.off > 64 && r.off * 2 > r.vals.len() {
                        r.vals.drain(..r.off);
                        r.off = 0;
                    }
                    buckets[start].push(r);
                }
            }
            pivots.push(piv);
        }

        let rest = std::mem::take(&mut buckets[n_core]);
        let k = self.n_tail;
        if rest.len() != k {
            return Err(Error::Singular { pivot: n_core });
        }
        let mut tail_x = Vec::new();
        if k > 0 {
            let m = DenseMatrix::from_fn(k, k, |i, j| rest[i].tail[j]);
            let rhs: Vec<f64> = rest.iter().map(|r| r.rhs).collect();
            let lu = Lu::factor(&m).map_err(|e| match e {
                Error::Singular { pivot } => Error::Singular { pivot: n_core + pivot },
                other => other,
            })?;
            let mscale = m.max_abs();
            if mscale <= tiny {
                return Err(Error::Singular { pivot: n_core });
            }
            tail_x = lu.solve(&rhs);
        }

        let mut x = vec![0.0; n];
        x[n_core..].copy_from_slice(&tail_x);
        for (j, p) in pivots.iter().enumerate().rev() {
            let mut s = p.rhs - p.tail.iter().zip(&tail_x).map(|(a, b)| a * b).sum::<f64>();
            let base = p.off;
            for c in 1..(p.end() - j) {
                s -= p.vals[base + c] * x[j + c];
            }
            x[j] = s / p.vals[base];
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    }

    fn random_system(n_core: usize, n_tail: usize, width: usize, wide_rows: usize, seed: u64) -> BorderedSparse {
        let mut s = seed;
        let mut sys = BorderedSparse::new(n_core, n_tail);
        let n = n_core + n_tail;
        for i in 0..n - wide_rows {
            let start = (i * n_core / (n - wide_rows)).min(n_core.saturating_sub(width));
            let vals: Vec<f64> = (0..width.min(n_core - start)).map(|k| lcg(&mut s) + if k == 0 { 2.0 } else { 0.0 }).collect();
            let tail = (0..n_tail).map(|_| lcg(&mut s)).collect();
            sys.push_row(start, vals, tail, lcg(&mut s));
        }
        for _ in 0..wide_rows {
            let core: Vec<f64> = (0..n_core).map(|_| lcg(&mut s)).collect();
            let tail = (0..n_tail).map(|_| lcg(&mut s) + 1.0).collect();
            sys.push_dense_row(&core, tail, lcg(&mut s));
        }
        sys
    }

    #[test]
    fn matches_dense_lu() {
        for (nc, nt, w, wide, seed) in [(40, 0, 5, 0, 1), (60, 3, 7, 1, 2), (25, 2, 4, 2, 3), (90, 1, 10, 1, 4), (300, 5, 13, 4, 5), (120, 2, 9, 3, 6)] {
            let sys = random_system(nc, nt, w, wide, seed);
            let dense = sys.to_dense();
            let rhs = sys.rhs();
                        let x = sys.solve().unwrap();
            let res = |x: &[f64]| dense.mul_vec(x).iter().zip(&rhs).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            let xn = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            assert!(res(&x) <= 1e-12 * (dense.norm_inf() * xn + 1.0), "residual {:e}", res(&x));
        }
    }

    #[test]
    fn periodic_coupling() {
        // x_{i+1} - x_i = 1 for i < n-1, plus x_0 - x_{n-1} + t = 0 and sum x = 0
        let n = 50;
        let mut sys = BorderedSparse::new(n, 1);
        for i in 0..n - 1 {
            sys.push_row(i, vec![-1.0, 1.0], vec![0.0], 1.0);
        }
        let mut wrap = vec![0.0; n];
        wrap[0] = 1.0;
        wrap[n - 1] = -1.0;
        sys.push_dense_row(&wrap, vec![1.0], 0.0);
        sys.push_dense_row(&vec![1.0; n], vec![0.0], 0.0);
        let x = sys.solve().unwrap();
        assert!((x[n] - (n as f64 - 1.0)).abs() < 1e-10);
        assert!((x[1] - x[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singular_detected() {
        let mut sys = BorderedSparse::new(3, 0);
        sys.push_row(0, vec![1.0, 2.0, 3.0], vec![], 1.0);
        sys.push_row(0, vec![2.0, 4.0, 6.0], vec![], 2.0);
        sys.push_row(1, vec![1.0, 1.0], vec![], 0.0);
        assert!(matches!(sys.solve(), Err(Error::Singular { .. })));
    }

    #[test]
    fn wrong_row_count() {
        let mut sys = BorderedSparse::new(2, 0);
        sys.push_row(0, vec![1.0], vec![], 1.0);
        assert!(matches!(sys.solve(), Err(Error::IllPosed { .. })));
    }
}
