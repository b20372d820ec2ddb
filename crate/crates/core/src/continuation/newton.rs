//! Damped Newton iteration on systems with optional linear side conditions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::dense::{lu_solve, DenseMatrix};

/// A row `a . x = value` appended to a system of equations.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow {
    pub coeffs: Vec<f64>,
    pub value: f64,
}

impl LinearRow {
    pub fn residual(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - self.value
    }
}

/// A scalar equation appended to a system, linearized at every iterate.
pub trait SideCondition {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
}

impl SideCondition for LinearRow {
    fn value(&self, x: &[f64]) -> f64 {
        self.residual(x)
    }

    fn gradient(&self, _x: &[f64]) -> Vec<f64> {
        self.coeffs.clone()
    }
}

/// `F(x) = 0` with `n_equations <= n_unknowns`; missing equations are
/// supplied as linear rows by the caller.
pub trait NonlinearSystem: Sync {
    fn n_unknowns(&self) -> usize;
    fn n_equations(&self) -> usize;
    fn residual(&self, x: &[f64]) -> Result<Vec<f64>>;
    /// Solves `[J(x); rows] dx = [rhs; extra_rhs]`.
    fn solve_linearized(&self, x: &[f64], rhs: &[f64], rows: &[LinearRow], extra_rhs: &[f64]) -> Result<Vec<f64>>;
    /// Weights of the squared norm used for arclength.
    fn weights(&self) -> Vec<f64> {
        vec![1.0; self.n_unknowns()]
    }
    /// Called once per accepted continuation point.
    fn accept(&mut self, _x: &[f64]) {}
    /// Compact record of a solution kept for every branch point.
    fn summary(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
    fn summary_names(&self) -> Vec<String> {
        (0..self.n_unknowns()).map(|k| format!("x{k}")).collect()
    }
}

/// A small system given by a closure, with a central-difference Jacobian.
pub struct FnSystem<F> {
    pub n_unknowns: usize,
    pub n_equations: usize,
    pub f: F,
}

impl<F> FnSystem<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    pub fn new(n_unknowns: usize, n_equations: usize, f: F) -> Self {
        Self { n_unknowns, n_equations, f }
    }

    fn jacobian(&self, x: &[f64]) -> DenseMatrix {
        let mut j = DenseMatrix::zeros(self.n_equations, self.n_unknowns);
        let mut xp = x.to_vec();
        for c in 0..self.n_unknowns {
            let h = 1e-7 * (1.0 + x[c].abs());
            xp[c] = x[c] + h;
            let fp = (self.f)(&xp);
            xp[c] = x[c] - h;
            let fm = (self.f)(&xp);
            xp[c] = x[c];
            for r in 0..self.n_equations {
                j[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        j
    }
}

impl<F> NonlinearSystem for FnSystem<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn n_unknowns(&self) -> usize {
        self.n_unknowns
    }

    fn n_equations(&self) -> usize {
        self.n_equations
    }

    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok((self.f)(x))
    }

    fn solve_linearized(&self, x: &[f64], rhs: &[f64], rows: &[LinearRow], extra_rhs: &[f64]) -> Result<Vec<f64>> {
        let j = self.jacobian(x);
        let n = self.n_unknowns;
        let mut a = DenseMatrix::zeros(self.n_equations + rows.len(), n);
        for r in 0..self.n_equations {
            a.row_mut(r).copy_from_slice(j.row(r));
        }
        for (k, row) in rows.iter().enumerate() {
            a.row_mut(self.n_equations + k).copy_from_slice(&row.coeffs);
        }
        if a.rows() != n {
            return Err(Error::IllPosed { conditions: a.rows(), unknowns: n });
        }
        let b: Vec<f64> = rhs.iter().chain(extra_rhs).copied().collect();
        lu_solve(&a, &b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub min_damping: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 15, min_damping: 1.0 / 64.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonReport {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Residual infinity norms, starting with the initial guess.
    pub history: Vec<f64>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| if x.is_nan() { f64::INFINITY } else { m.max(x.abs()) })
}

fn full_residual<S: NonlinearSystem + ?Sized>(sys: &S, x: &[f64], side: &[&dyn SideCondition]) -> Result<Vec<f64>> {
    let mut r = sys.residual(x)?;
    r.extend(side.iter().map(|c| c.value(x)));
    Ok(r)
}

/// Newton's method on `F(x) = 0` augmented with `rows`. Stops when the
/// residual infinity norm is at most `opts.tol`.
pub fn newton_solve<S: NonlinearSystem + ?Sized>(
    sys: &S,
    guess: &[f64],
    rows: &[LinearRow],
    opts: &NewtonOptions,
) -> Result<NewtonReport> {
    let side: Vec<&dyn SideCondition> = rows.iter().map(|r| r as &dyn SideCondition).collect();
    newton_with(sys, guess, &side, opts)
}

/// Newton's method with general side conditions.
pub fn newton_with<S: NonlinearSystem + ?Sized>(
    sys: &S,
    guess: &[f64],
    side: &[&dyn SideCondition],
    opts: &NewtonOptions,
) -> Result<NewtonReport> {
    let n_eq = sys.n_equations();
    let mut x = guess.to_vec();
    let mut r = full_residual(sys, &x, side)?;
    let mut norm = inf_norm(&r);
    let mut history = vec![norm];
    for it in 0..opts.max_iter {
        if norm <= opts.tol {
            return Ok(NewtonReport { x, iterations: it, history });
        }
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let rows: Vec<LinearRow> = side.iter().map(|c| LinearRow { coeffs: c.gradient(&x), value: 0.0 }).collect();
        let dx = match sys.solve_linearized(&x, &neg[..n_eq], &rows, &neg[n_eq..]) {
            Ok(dx) => dx,
            Err(Error::Singular { .. }) => return Err(Error::SingularJacobian),
            Err(e) => return Err(e),
        };
        if dx.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularJacobian);
        }
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + lambda * b).collect();
            let tr = full_residual(sys, &trial, side);
            let tn = tr.as_ref().map(|v| inf_norm(v)).unwrap_or(f64::INFINITY);
            if tn < norm || lambda <= opts.min_damping {
                if let Ok(tr) = tr {
                    x = trial;
                    r = tr;
                    norm = tn;
                }
                break;
            }
            lambda *= 0.5;
        }
        history.push(norm);
    }
    if norm <= opts.tol {
        return Ok(NewtonReport { x, iterations: opts.max_iter, history });
    }
    Err(Error::NoConvergence { history })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_square_root() {
        let sys = FnSystem::new(1, 1, |x: &[f64]| vec![x[0] * x[0] - 4.0]);
        let rep = newton_solve(&sys, &[3.0], &[], &NewtonOptions::default()).unwrap();
        assert!((rep.x[0] - 2.0).abs() < 1e-12);
        assert!(rep.iterations <= 6);
    }

    #[test]
    fn rank_deficient_is_singular() {
        let sys = FnSystem::new(2, 2, |x: &[f64]| vec![x[0] + x[1] - 1.0, 2.0 * x[0] + 2.0 * x[1] - 3.0]);
        assert_eq!(newton_solve(&sys, &[0.0, 0.0], &[], &NewtonOptions::default()), Err(Error::SingularJacobian));
    }

    #[test]
    fn linear_row_closes_system() {
        let sys = FnSystem::new(2, 1, |x: &[f64]| vec![x[0] * x[0] + x[1] * x[1] - 1.0]);
        let row = LinearRow { coeffs: vec![0.0, 1.0], value: 0.6 };
        let rep = newton_solve(&sys, &[1.0, 0.5], &[row], &NewtonOptions::default()).unwrap();
        assert!((rep.x[0] - 0.8).abs() < 1e-12 && (rep.x[1] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn reports_history_on_failure() {
        let sys = FnSystem::new(1, 1, |x: &[f64]| vec![x[0] * x[0] + 1.0]);
        let opts = NewtonOptions { max_iter: 5, ..Default::default() };
        match newton_solve(&sys, &[0.3], &[], &opts) {
            Err(Error::NoConvergence { history }) => assert_eq!(history.len(), 6),
            other => panic!("{other:?}"),
        }
    }
}
