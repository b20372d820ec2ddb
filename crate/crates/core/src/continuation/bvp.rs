//! Declarative multi-segment boundary value problems and orbit data.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{self, ChartId, Params, SystemParam};
use crate::numerics::ode::hermite;

/// Autonomous or normalized-time dynamics `u' = f(tau, u, p)`; the segment
/// multiplies it by its time-scale parameter.
pub trait Dynamics: Send + Sync {
    fn dim(&self) -> usize;
    fn rhs(&self, tau: f64, u: &[f64], p: &[f64], out: &mut [f64]);
    /// Row-major `dim x dim` Jacobian in `u`.
    fn jac(&self, tau: f64, u: &[f64], p: &[f64], out: &mut [f64]);
    /// Derivative with respect to `p[k]`; returns false (leaving `out`
    /// untouched) when `f` does not depend on it.
    fn dparam(&self, tau: f64, u: &[f64], p: &[f64], k: usize, out: &mut [f64]) -> bool;
}

/// One of the charted fields, reading its system parameters from the BVP
/// parameter vector at the given indices.
#[derive(Debug, Clone, Copy)]
pub struct ChartField {
    pub chart: ChartId,
    /// Indices of alpha, beta, gamma.
    pub index: [usize; 3],
}

impl ChartField {
    pub fn new(chart: ChartId, index: [usize; 3]) -> Self {
        Self { chart, index }
    }

    fn params(&self, p: &[f64]) -> Params {
        Params::with_gamma(p[self.index[0]], p[self.index[1]], p[self.index[2]])
    }
}

fn vec3(u: &[f64]) -> [f64; 3] {
    [u[0], u[1], u[2]]
}

impl Dynamics for ChartField {
    fn dim(&self) -> usize {
        3
    }

    fn rhs(&self, _tau: f64, u: &[f64], p: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&fields::rhs(self.chart, &vec3(u), &self.params(p)));
    }

    fn jac(&self, _tau: f64, u: &[f64], p: &[f64], out: &mut [f64]) {
        let pt = fields::ChartPoint::new(self.chart, vec3(u));
        let j = fields::jacobian(self.chart, &pt, &self.params(p)).expect("chart tag matches");
        for r in 0..3 {
            out[3 * r..3 * r + 3].copy_from_slice(&j[r]);
        }
    }

    fn dparam(&self, _tau: f64, u: &[f64], _p: &[f64], k: usize, out: &mut [f64]) -> bool {
        let Some(which) = self.index.iter().position(|&i| i == k) else {
            return false;
        };
        out.copy_from_slice(&fields::param_derivative(self.chart, &vec3(u), SystemParam::ALL[which]));
        true
    }
}

/// Endpoint values handed to boundary conditions: `starts[s]` is `u_s(0)`
/// and `ends[s]` is `u_s(1)`.
pub struct Ends<'a> {
    pub starts: Vec<&'a [f64]>,
    pub ends: Vec<&'a [f64]>,
}

/// A block of scalar boundary conditions. Their Jacobian is taken by central
/// differences.
pub trait BoundaryConditions: Send + Sync {
    fn count(&self) -> usize;
    fn residual(&self, ends: &Ends<'_>, p: &[f64], out: &mut [f64]) -> Result<()>;
}

/// `int_0^1 g(tau, u_s(tau)) dtau = 0` on one segment. `g` must not depend on
/// free parameters.
pub trait IntegralConstraint: Send + Sync {
    fn segment(&self) -> usize;
    /// Value of `g` and its gradient in `u`.
    fn integrand(&self, tau: f64, u: &[f64], p: &[f64], grad: &mut [f64]) -> f64;
}

#[derive(Clone)]
pub struct Segment {
    pub name: String,
    pub dynamics: Arc<dyn Dynamics>,
    /// Index of the time-scale parameter in the parameter vector.
    pub time_scale: usize,
    pub chart: Option<ChartId>,
}

#[derive(Clone)]
pub struct BvpSpec {
    pub param_names: Vec<String>,
    pub segments: Vec<Segment>,
    pub boundary: Vec<Arc<dyn BoundaryConditions>>,
    pub integrals: Vec<Arc<dyn IntegralConstraint>>,
    /// Parameter indices that are unknowns.
    pub free: Vec<usize>,
}

impl BvpSpec {
    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.param_names.iter().position(|n| n == name)
    }

    pub fn n_conditions(&self) -> usize {
        self.boundary.iter().map(|b| b.count()).sum::<usize>() + self.integrals.len()
    }

    /// Free scalars the conditions must balance: one per segment component
    /// plus the free parameters.
    pub fn n_free_scalars(&self) -> usize {
        self.segments.iter().map(|s| s.dynamics.dim()).sum::<usize>() + self.free.len()
    }

    /// Checks the condition count. A continuation problem keeps one degree
    /// of freedom; a square problem keeps none.
    pub fn check(&self, continuation: bool) -> Result<()> {
        let want = self.n_free_scalars() - usize::from(continuation);
        let have = self.n_conditions();
        for &k in &self.free {
            if k >= self.param_names.len() {
                return Err(Error::InvalidInput(format!("free parameter index {k} out of range")));
            }
        }
        let mut sorted = self.free.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.free.len() {
            return Err(Error::InvalidInput("duplicate free parameter".into()));
        }
        for s in &self.segments {
            if s.time_scale >= self.param_names.len() {
                return Err(Error::InvalidInput(format!("segment {} has no time-scale parameter", s.name)));
            }
        }
        if have != want {
            return Err(Error::IllPosed { conditions: have, unknowns: want });
        }
        Ok(())
    }

    pub fn with_free(&self, free: Vec<usize>) -> Self {
        Self { free, ..self.clone() }
    }
}

/// A sampled solution path over normalized time `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitSegment {
    pub chart: ChartId,
    pub time_scale: f64,
    /// Ascending normalized times, from 0 to 1.
    pub tau: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Derivatives `du/dtau`, when known; enables Hermite interpolation.
    pub derivs: Option<Vec<Vec<f64>>>,
}

impl OrbitSegment {
    pub fn dim(&self) -> usize {
        self.states[0].len()
    }

    pub fn start(&self) -> &[f64] {
        &self.states[0]
    }

    pub fn end(&self) -> &[f64] {
        self.states.last().unwrap()
    }

    pub fn eval(&self, tau: f64) -> Vec<f64> {
        let n = self.tau.len();
        if n == 1 {
            return self.states[0].clone();
        }
        let k = self.tau.partition_point(|&t| t <= tau).clamp(1, n - 1);
        let (t0, t1) = (self.tau[k - 1], self.tau[k]);
        let (a, b) = (&self.states[k - 1], &self.states[k]);
        match &self.derivs {
            Some(d) if a.len() == 3 => {
                let pick = |v: &Vec<f64>| [v[0], v[1], v[2]];
                hermite(t0, &pick(a), &pick(&d[k - 1]), t1, &pick(b), &pick(&d[k]), tau).to_vec()
            }
            _ => {
                let s = if t1 > t0 { (tau - t0) / (t1 - t0) } else { 0.0 };
                a.iter().zip(b).map(|(x, y)| x + s * (y - x)).collect()
            }
        }
    }
}

/// Piecewise polynomial collocation data of one segment: values at `ncol`
/// equally spaced points per mesh interval plus the final point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshSolution {
    pub mesh: Vec<f64>,
    pub ncol: usize,
    pub dim: usize,
    pub values: Vec<f64>,
    pub time_scale: f64,
    pub chart: Option<ChartId>,
}

pub(crate) fn uniform_mesh(ntst: usize) -> Vec<f64> {
    (0..=ntst).map(|i| i as f64 / ntst as f64).collect()
}

/// Lagrange basis on equally spaced nodes `l / m`.
pub(crate) fn equispaced_basis(m: usize, s: f64) -> (Vec<f64>, Vec<f64>) {
    let nodes: Vec<f64> = (0..=m).map(|l| l as f64 / m as f64).collect();
    crate::numerics::quadrature::lagrange(&nodes, s)
}

impl MeshSolution {
    pub fn ntst(&self) -> usize {
        self.mesh.len() - 1
    }

    pub fn n_nodes(&self) -> usize {
        self.ntst() * self.ncol + 1
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn node_time(&self, k: usize) -> f64 {
        let m = self.ncol;
        let (i, l) = (k / m, k % m);
        if i == self.ntst() {
            return 1.0;
        }
        self.mesh[i] + (self.mesh[i + 1] - self.mesh[i]) * l as f64 / m as f64
    }

    pub fn start(&self) -> &[f64] {
        self.node(0)
    }

    pub fn end(&self) -> &[f64] {
        self.node(self.n_nodes() - 1)
    }

    fn locate(&self, tau: f64) -> (usize, f64) {
        let n = self.ntst();
        let i = (self.mesh.partition_point(|&t| t <= tau)).clamp(1, n) - 1;
        let h = self.mesh[i + 1] - self.mesh[i];
        (i, (tau - self.mesh[i]) / h)
    }

    /// Value of the collocation polynomial at `tau`.
    pub fn eval(&self, tau: f64) -> Vec<f64> {
        let (i, s) = self.locate(tau);
        let (l, _) = equispaced_basis(self.ncol, s);
        let base = i * self.ncol;
        let mut out = vec![0.0; self.dim];
        for (k, lk) in l.iter().enumerate() {
            for (o, v) in out.iter_mut().zip(self.node(base + k)) {
                *o += lk * v;
            }
        }
        out
    }

    /// `du/dtau` of the collocation polynomial.
    pub fn derivative(&self, tau: f64) -> Vec<f64> {
        let (i, s) = self.locate(tau);
        let h = self.mesh[i + 1] - self.mesh[i];
        let (_, d) = equispaced_basis(self.ncol, s);
        let base = i * self.ncol;
        let mut out = vec![0.0; self.dim];
        for (k, dk) in d.iter().enumerate() {
            for (o, v) in out.iter_mut().zip(self.node(base + k)) {
                *o += dk * v / h;
            }
        }
        out
    }

    /// Node samples with their derivatives as an orbit segment.
    pub fn to_orbit(&self) -> OrbitSegment {
        let n = self.n_nodes();
        let tau: Vec<f64> = (0..n).map(|k| self.node_time(k)).collect();
        // one-sided derivative at mesh points, from the interval to the right
        let derivs = tau.iter().map(|&t| self.derivative(t.min(1.0 - 1e-14))).collect();
        OrbitSegment {
            chart: self.chart.unwrap_or(ChartId::Original),
            time_scale: self.time_scale,
            tau,
            states: (0..n).map(|k| self.node(k).to_vec()).collect(),
            derivs: Some(derivs),
        }
    }
}
