//! Orthogonal collocation at Gauss points on piecewise polynomials.
//!
//! Each segment stores its values at `ncol` equally spaced points per mesh
//! interval plus the final point, so continuity between intervals is built
//! into the unknowns. On interval `i` with width `h_i` and at every Gauss
//! point `c_j` the residual is
//!
//! ```text
//! sum_l L'_l(c_j) u_{i,l} - h_i T f(tau_ij, u(c_j), p)
//! ```
//!
//! which is the local-variable form of `u' = T f`, kept `O(1)` in size
//! regardless of `h_i`. Unknowns are all segment values followed by the
//! free parameters.

use rayon::prelude::*;

use super::bvp::{equispaced_basis, uniform_mesh, BvpSpec, Ends, MeshSolution, OrbitSegment};
use super::newton::{LinearRow, NonlinearSystem};
use crate::error::{Error, Result};
use crate::numerics::band::BorderedSparse;
use crate::numerics::quadrature::gauss_nodes;

/// Relative interpolation error of the initial data that is still accepted.
pub const MESH_TOLERANCE: f64 = 1e-2;

#[derive(Debug, Clone)]
struct Basis {
    gauss: Vec<f64>,
    weights: Vec<f64>,
    /// `val[j][l] = L_l(c_j)`
    val: Vec<Vec<f64>>,
    der: Vec<Vec<f64>>,
}

impl Basis {
    fn new(m: usize) -> Result<Self> {
        let (gauss, weights) = gauss_nodes(m)?;
        let (val, der) = gauss.iter().map(|&c| equispaced_basis(m, c)).unzip();
        Ok(Self { gauss, weights, val, der })
    }
}

struct Row {
    start: usize,
    vals: Vec<f64>,
    tail: Vec<f64>,
}

/// A discretized boundary value problem.
#[derive(Clone)]
pub struct Collocation {
    spec: BvpSpec,
    ncol: usize,
    meshes: Vec<Vec<f64>>,
    params: Vec<f64>,
    offsets: Vec<usize>,
    n_core: usize,
    basis: Basis,
    /// Arclength weight of each parameter when it is free.
    param_weights: Vec<f64>,
}

impl Collocation {
    /// Builds the discretization for the given meshes. `params` holds values
    /// for every parameter; free ones are overwritten by the unknowns.
    pub fn new(spec: BvpSpec, meshes: Vec<Vec<f64>>, ncol: usize, params: Vec<f64>) -> Result<Self> {
        if !(1..=7).contains(&ncol) {
            return Err(Error::InvalidInput(format!("ncol must be in 1..=7, got {ncol}")));
        }
        if meshes.len() != spec.segments.len() || params.len() != spec.param_names.len() {
            return Err(Error::InvalidInput("mesh or parameter count does not match the specification".into()));
        }
        for m in &meshes {
            let ok = m.len() >= 2
                && m[0] == 0.0
                && *m.last().unwrap() == 1.0
                && m.windows(2).all(|w| w[1] > w[0]);
            if !ok {
                return Err(Error::InvalidInput("mesh must increase strictly from 0 to 1".into()));
            }
        }
        let mut offsets = Vec::with_capacity(meshes.len());
        let mut n_core = 0;
        for (seg, m) in spec.segments.iter().zip(&meshes) {
            offsets.push(n_core);
            n_core += ((m.len() - 1) * ncol + 1) * seg.dynamics.dim();
        }
        let param_weights = vec![1.0; params.len()];
        Ok(Self { spec, ncol, meshes, params, offsets, n_core, basis: Basis::new(ncol)?, param_weights })
    }

    /// Interpolates initial orbit data onto uniform meshes with `ntst[s]`
    /// intervals and returns the problem with its starting unknowns.
    pub fn discretize(
        spec: BvpSpec,
        initial: &[OrbitSegment],
        ntst: &[usize],
        ncol: usize,
        params: Vec<f64>,
    ) -> Result<(Self, Vec<f64>)> {
        if initial.len() != spec.segments.len() || ntst.len() != initial.len() {
            return Err(Error::InvalidInput("one initial segment and mesh size per segment required".into()));
        }
        let meshes = ntst.iter().map(|&n| uniform_mesh(n.max(1))).collect();
        let coll = Self::new(spec, meshes, ncol, params)?;
        let mut x = vec![0.0; coll.n_unknowns()];
        for (s, seg) in initial.iter().enumerate() {
            let d = coll.dim(s);
            if seg.dim() != d {
                return Err(Error::InvalidInput(format!("segment {s} has dimension {} instead of {d}", seg.dim())));
            }
            let off = coll.offsets[s];
            for k in 0..coll.n_nodes(s) {
                let v = seg.eval(coll.node_time(s, k));
                x[off + k * d..off + (k + 1) * d].copy_from_slice(&v);
            }
            let sol = coll.segment(&x, s);
            let scale = seg.states.iter().flatten().fold(1.0_f64, |m, v| m.max(v.abs()));
            let err = seg
                .tau
                .iter()
                .zip(&seg.states)
                .map(|(&t, u)| sol.eval(t).iter().zip(u).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
                .fold(0.0_f64, f64::max);
            if err / scale > MESH_TOLERANCE {
                return Err(Error::MeshTooCoarse(err / scale));
            }
        }
        let p = coll.params.clone();
        for (t, &k) in coll.spec.free.iter().enumerate() {
            x[coll.n_core + t] = p[k];
        }
        Ok((coll, x))
    }

    pub fn spec(&self) -> &BvpSpec {
        &self.spec
    }

    pub fn ncol(&self) -> usize {
        self.ncol
    }

    pub fn mesh(&self, s: usize) -> &[f64] {
        &self.meshes[s]
    }

    pub fn dim(&self, s: usize) -> usize {
        self.spec.segments[s].dynamics.dim()
    }

    pub fn n_nodes(&self, s: usize) -> usize {
        (self.meshes[s].len() - 1) * self.ncol + 1
    }

    pub fn n_core(&self) -> usize {
        self.n_core
    }

    /// Column of component `c` of node `k` of segment `s`.
    pub fn column(&self, s: usize, k: usize, c: usize) -> usize {
        self.offsets[s] + k * self.dim(s) + c
    }

    /// Column of a free parameter, if it is free.
    pub fn param_column(&self, k: usize) -> Option<usize> {
        self.spec.free.iter().position(|&f| f == k).map(|t| self.n_core + t)
    }

    fn node_time(&self, s: usize, k: usize) -> f64 {
        let mesh = &self.meshes[s];
        let (i, l) = (k / self.ncol, k % self.ncol);
        if i + 1 >= mesh.len() {
            return 1.0;
        }
        mesh[i] + (mesh[i + 1] - mesh[i]) * l as f64 / self.ncol as f64
    }

    /// Full parameter vector at the unknowns `x`.
    pub fn params_at(&self, x: &[f64]) -> Vec<f64> {
        let mut p = self.params.clone();
        for (t, &k) in self.spec.free.iter().enumerate() {
            p[k] = x[self.n_core + t];
        }
        p
    }

    /// Fixes parameter values (free ones are taken from the unknowns).
    pub fn set_params(&mut self, p: Vec<f64>) {
        self.params = p;
    }

    pub fn set_param_weight(&mut self, k: usize, w: f64) {
        self.param_weights[k] = w;
    }

    /// Replaces the integral constraints, e.g. to move a phase reference.
    pub fn set_integrals(&mut self, integrals: Vec<std::sync::Arc<dyn super::bvp::IntegralConstraint>>) {
        self.spec.integrals = integrals;
    }

    pub fn segment(&self, x: &[f64], s: usize) -> MeshSolution {
        let d = self.dim(s);
        let off = self.offsets[s];
        let p = self.params_at(x);
        MeshSolution {
            mesh: self.meshes[s].clone(),
            ncol: self.ncol,
            dim: d,
            values: x[off..off + self.n_nodes(s) * d].to_vec(),
            time_scale: p[self.spec.segments[s].time_scale],
            chart: self.spec.segments[s].chart,
        }
    }

    /// Same discretization with another set of free parameters; returns the
    /// problem and the unknowns carried over from `x`.
    pub fn with_free(&self, free: Vec<usize>, x: &[f64]) -> (Self, Vec<f64>) {
        let p = self.params_at(x);
        let mut next = self.clone();
        next.spec = self.spec.with_free(free);
        next.params = p.clone();
        let mut y = x[..self.n_core].to_vec();
        y.extend(next.spec.free.iter().map(|&k| p[k]));
        (next, y)
    }

    /// Unknowns from segment data and a parameter vector.
    pub fn pack(&self, segs: &[MeshSolution], p: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = segs.iter().flat_map(|s| s.values.iter().copied()).collect();
        x.extend(self.spec.free.iter().map(|&k| p[k]));
        x
    }

    fn ends<'a>(&self, x: &'a [f64]) -> Ends<'a> {
        let mut starts = Vec::new();
        let mut ends = Vec::new();
        for s in 0..self.spec.segments.len() {
            let d = self.dim(s);
            let off = self.offsets[s];
            let last = off + (self.n_nodes(s) - 1) * d;
            starts.push(&x[off..off + d]);
            ends.push(&x[last..last + d]);
        }
        Ends { starts, ends }
    }

    /// Collocation residuals (and optionally Jacobian rows) of one interval.
    fn interval(&self, s: usize, i: usize, x: &[f64], p: &[f64], jac: bool) -> (Vec<f64>, Vec<Row>) {
        let seg = &self.spec.segments[s];
        let dynm = &seg.dynamics;
        let d = dynm.dim();
        let m = self.ncol;
        let mesh = &self.meshes[s];
        let h = mesh[i + 1] - mesh[i];
        let t_scale = p[seg.time_scale];
        let start = self.offsets[s] + i * m * d;
        let u = &x[start..start + (m + 1) * d];
        let n_free = self.spec.free.len();

        let mut res = Vec::with_capacity(m * d);
        let mut rows = Vec::new();
        let mut uc = vec![0.0; d];
        let mut du = vec![0.0; d];
        let mut f = vec![0.0; d];
        let mut jm = vec![0.0; d * d];
        let mut dp = vec![0.0; d];
        for j in 0..m {
            let (lv, ld) = (&self.basis.val[j], &self.basis.der[j]);
            uc.iter_mut().for_each(|v| *v = 0.0);
            du.iter_mut().for_each(|v| *v = 0.0);
            for l in 0..=m {
                for c in 0..d {
                    uc[c] += lv[l] * u[l * d + c];
                    du[c] += ld[l] * u[l * d + c];
                }
            }
            let tau = mesh[i] + self.basis.gauss[j] * h;
            dynm.rhs(tau, &uc, p, &mut f);
            for c in 0..d {
                res.push(du[c] - h * t_scale * f[c]);
            }
            if !jac {
                continue;
            }
            dynm.jac(tau, &uc, p, &mut jm);
            let mut tails = vec![vec![0.0; n_free]; d];
            for (t, &k) in self.spec.free.iter().enumerate() {
                if k == seg.time_scale {
                    for c in 0..d {
                        tails[c][t] -= h * f[c];
                    }
                }
                if dynm.dparam(tau, &uc, p, k, &mut dp) {
                    for c in 0..d {
                        tails[c][t] -= h * t_scale * dp[c];
                    }
                }
            }
            for (a, tail) in tails.into_iter().enumerate() {
                let mut vals = vec![0.0; (m + 1) * d];
                for l in 0..=m {
                    vals[l * d + a] += ld[l];
                    for b in 0..d {
                        vals[l * d + b] -= h * t_scale * jm[a * d + b] * lv[l];
                    }
                }
                rows.push(Row { start, vals, tail });
            }
        }
        (res, rows)
    }

    fn collocation(&self, x: &[f64], p: &[f64], jac: bool) -> (Vec<f64>, Vec<Row>) {
        let mut res = Vec::new();
        let mut rows = Vec::new();
        for s in 0..self.spec.segments.len() {
            let n = self.meshes[s].len() - 1;
            let parts: Vec<(Vec<f64>, Vec<Row>)> = (0..n).into_par_iter().map(|i| self.interval(s, i, x, p, jac)).collect();
            for (r, j) in parts {
                res.extend(r);
                rows.extend(j);
            }
        }
        (res, rows)
    }

    fn boundary_residual(&self, x: &[f64], p: &[f64]) -> Result<Vec<f64>> {
        let ends = self.ends(x);
        let mut out = Vec::new();
        for bc in &self.spec.boundary {
            let mut r = vec![0.0; bc.count()];
            bc.residual(&ends, p, &mut r)?;
            out.extend(r);
        }
        Ok(out)
    }

    /// Boundary rows by central differences in the endpoint values and free
    /// parameters.
    fn boundary_rows(&self, x: &[f64]) -> Result<Vec<Row>> {
        let n_free = self.spec.free.len();
        // columns that boundary conditions can see
        let mut cols = Vec::new();
        for s in 0..self.spec.segments.len() {
            let d = self.dim(s);
            for c in 0..d {
                cols.push(self.column(s, 0, c));
            }
            for c in 0..d {
                cols.push(self.column(s, self.n_nodes(s) - 1, c));
            }
        }
        cols.extend((0..n_free).map(|t| self.n_core + t));

        let mut rows = Vec::new();
        let mut xp = x.to_vec();
        for bc in &self.spec.boundary {
            let nb = bc.count();
            let mut deriv = vec![vec![0.0; cols.len()]; nb];
            for (ci, &col) in cols.iter().enumerate() {
                let h = 6e-6 * (1.0 + x[col].abs());
                let mut fp = vec![0.0; nb];
                let mut fm = vec![0.0; nb];
                xp[col] = x[col] + h;
                bc.residual(&self.ends(&xp), &self.params_at(&xp), &mut fp)?;
                xp[col] = x[col] - h;
                bc.residual(&self.ends(&xp), &self.params_at(&xp), &mut fm)?;
                xp[col] = x[col];
                for r in 0..nb {
                    deriv[r][ci] = (fp[r] - fm[r]) / (2.0 * h);
                }
            }
            for dr in deriv {
                let core: Vec<(usize, f64)> =
                    cols.iter().zip(&dr).filter(|(c, v)| **c < self.n_core && **v != 0.0).map(|(c, v)| (*c, *v)).collect();
                let tail: Vec<f64> = dr[dr.len() - n_free..].to_vec();
                let (start, vals) = if core.is_empty() {
                    (0, Vec::new())
                } else {
                    let lo = core.iter().map(|c| c.0).min().unwrap();
                    let hi = core.iter().map(|c| c.0).max().unwrap();
                    let mut vals = vec![0.0; hi - lo + 1];
                    for (c, v) in core {
                        vals[c - lo] += v;
                    }
                    (lo, vals)
                };
                rows.push(Row { start, vals, tail });
            }
        }
        Ok(rows)
    }

    fn integral_residual(&self, x: &[f64], p: &[f64], jac: bool) -> (Vec<f64>, Vec<Row>) {
        let mut res = Vec::new();
        let mut rows = Vec::new();
        let n_free = self.spec.free.len();
        for ic in &self.spec.integrals {
            let s = ic.segment();
            let d = self.dim(s);
            let m = self.ncol;
            let mesh = &self.meshes[s];
            let off = self.offsets[s];
            let mut total = 0.0;
            let mut vals = if jac { vec![0.0; self.n_nodes(s) * d] } else { Vec::new() };
            let mut grad = vec![0.0; d];
            let mut uc = vec![0.0; d];
            for i in 0..mesh.len() - 1 {
                let h = mesh[i + 1] - mesh[i];
                let base = off + i * m * d;
                for j in 0..m {
                    let lv = &self.basis.val[j];
                    uc.iter_mut().for_each(|v| *v = 0.0);
                    for l in 0..=m {
                        for c in 0..d {
                            uc[c] += lv[l] * x[base + l * d + c];
                        }
                    }
                    let w = h * self.basis.weights[j];
                    let tau = mesh[i] + self.basis.gauss[j] * h;
                    total += w * ic.integrand(tau, &uc, p, &mut grad);
                    if jac {
                        for l in 0..=m {
                            for c in 0..d {
                                vals[(i * m + l) * d + c] += w * lv[l] * grad[c];
                            }
                        }
                    }
                }
            }
            res.push(total);
            if jac {
                rows.push(Row { start: off, vals, tail: vec![0.0; n_free] });
            }
        }
        (res, rows)
    }

    /// Largest collocation residual on each mesh interval of each segment.
    pub fn interval_residuals(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let p = self.params_at(x);
        (0..self.spec.segments.len())
            .map(|s| {
                (0..self.meshes[s].len() - 1)
                    .into_par_iter()
                    .map(|i| self.interval(s, i, x, &p, false).0.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
                    .collect()
            })
            .collect()
    }
}

impl NonlinearSystem for Collocation {
    fn n_unknowns(&self) -> usize {
        self.n_core + self.spec.free.len()
    }

    fn n_equations(&self) -> usize {
        self.n_core - self.spec.segments.iter().map(|s| s.dynamics.dim()).sum::<usize>() + self.spec.n_conditions()
    }

    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        let p = self.params_at(x);
        let (mut r, _) = self.collocation(x, &p, false);
        r.extend(self.boundary_residual(x, &p)?);
        r.extend(self.integral_residual(x, &p, false).0);
        Ok(r)
    }

    fn solve_linearized(&self, x: &[f64], rhs: &[f64], rows: &[LinearRow], extra_rhs: &[f64]) -> Result<Vec<f64>> {
        let p = self.params_at(x);
        let n_free = self.spec.free.len();
        let mut sys = BorderedSparse::new(self.n_core, n_free);
        let (_, coll) = self.collocation(x, &p, true);
        let bcs = self.boundary_rows(x)?;
        let (_, ints) = self.integral_residual(x, &p, true);
        let all = coll.into_iter().chain(bcs).chain(ints);
        let mut k = 0;
        for row in all {
            sys.push_row(row.start, row.vals, row.tail, rhs[k]);
            k += 1;
        }
        debug_assert_eq!(k, rhs.len());
        for (row, b) in rows.iter().zip(extra_rhs) {
            sys.push_row(0, row.coeffs[..self.n_core].to_vec(), row.coeffs[self.n_core..].to_vec(), *b);
        }
        sys.solve()
    }

    fn weights(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.n_unknowns());
        for s in 0..self.spec.segments.len() {
            let d = self.dim(s);
            let mesh = &self.meshes[s];
            for k in 0..self.n_nodes(s) {
                let i = (k / self.ncol).min(mesh.len() - 2);
                let wk = (mesh[i + 1] - mesh[i]) / self.ncol as f64;
                w.extend(std::iter::repeat(wk).take(d));
            }
        }
        w.extend(self.spec.free.iter().map(|&k| self.param_weights[k]));
        w
    }

    /// All parameters followed by the start and end point of every segment.
    fn summary(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.params_at(x);
        let ends = self.ends(x);
        for (a, b) in ends.starts.iter().zip(&ends.ends) {
            out.extend_from_slice(a);
            out.extend_from_slice(b);
        }
        out
    }

    fn summary_names(&self) -> Vec<String> {
        let mut names = self.spec.param_names.clone();
        for (s, seg) in self.spec.segments.iter().enumerate() {
            let coords: Vec<String> = match seg.chart {
                Some(c) => c.coordinate_names().iter().map(|n| n.to_string()).collect(),
                None => (0..self.dim(s)).map(|c| format!("u{c}")).collect(),
            };
            for end in ["start", "end"] {
                names.extend(coords.iter().map(|c| format!("{}_{end}_{c}", seg.name)));
            }
        }
        names
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuation::bvp::{Dynamics, IntegralConstraint, Segment};
    use crate::continuation::newton::{newton_solve, NewtonOptions};
    use std::sync::Arc;

    /// `u' = lambda u`, with `lambda = p[1]`.
    struct Linear;

    impl Dynamics for Linear {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, _t: f64, u: &[f64], p: &[f64], out: &mut [f64]) {
            out[0] = p[1] * u[0];
        }
        fn jac(&self, _t: f64, _u: &[f64], p: &[f64], out: &mut [f64]) {
            out[0] = p[1];
        }
        fn dparam(&self, _t: f64, u: &[f64], _p: &[f64], k: usize, out: &mut [f64]) -> bool {
            if k == 1 {
                out[0] = u[0];
                true
            } else {
                false
            }
        }
    }

    struct StartAt(f64);

    impl crate::continuation::bvp::BoundaryConditions for StartAt {
        fn count(&self) -> usize {
            1
        }
        fn residual(&self, e: &Ends<'_>, _p: &[f64], out: &mut [f64]) -> Result<()> {
            out[0] = e.starts[0][0] - self.0;
            Ok(())
        }
    }

    fn linear_spec() -> BvpSpec {
        BvpSpec {
            param_names: vec!["T".into(), "lambda".into()],
            segments: vec![Segment { name: "u".into(), dynamics: Arc::new(Linear), time_scale: 0, chart: None }],
            boundary: vec![Arc::new(StartAt(1.0))],
            integrals: vec![],
            free: vec![],
        }
    }

    fn constant_guess(v: f64) -> OrbitSegment {
        OrbitSegment {
            chart: crate::fields::ChartId::Original,
            time_scale: 1.0,
            tau: vec![0.0, 1.0],
            states: vec![vec![v], vec![v]],
            derivs: None,
        }
    }

    fn solve_linear(ntst: usize, ncol: usize) -> f64 {
        let (c, x0) = Collocation::discretize(linear_spec(), &[constant_guess(1.0)], &[ntst], ncol, vec![1.0, 1.0]).unwrap();
        let sol = newton_solve(&c, &x0, &[], &NewtonOptions::default()).unwrap();
        *c.segment(&sol.x, 0).end().first().unwrap()
    }

    #[test]
    fn constant_data_stays_constant() {
        let (c, x0) = Collocation::discretize(linear_spec(), &[constant_guess(2.5)], &[7], 3, vec![1.0, 0.0]).unwrap();
        assert!(x0.iter().all(|v| *v == 2.5));
        let r = c.residual(&x0).unwrap();
        assert!(r[..r.len() - 1].iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn exponential_to_high_accuracy() {
        let e = std::f64::consts::E;
        assert!((solve_linear(20, 4) - e).abs() < 1e-10);
    }

    #[test]
    fn superconvergence_at_mesh_points() {
        let e = std::f64::consts::E;
        for ncol in 2..=4 {
            let n0 = 2;
            let e1 = (solve_linear(n0, ncol) - e).abs();
            let e2 = (solve_linear(2 * n0, ncol) - e).abs();
            assert!(e1 / e2 >= 2f64.powi(2 * ncol as i32) * 0.9, "ncol {ncol}: {e1:e} -> {e2:e}");
        }
    }

    #[test]
    fn linear_problem_converges_fast() {
        let (c, mut x0) = Collocation::discretize(linear_spec(), &[constant_guess(1.0)], &[20], 4, vec![1.0, 1.0]).unwrap();
        for (k, v) in x0.iter_mut().enumerate() {
            *v += 0.1 * (k as f64).sin();
        }
        let sol = newton_solve(&c, &x0, &[], &NewtonOptions::default()).unwrap();
        assert!(sol.iterations <= 3);
    }

    #[test]
    fn jacobian_matches_differences() {
        struct Mean;
        impl IntegralConstraint for Mean {
            fn segment(&self) -> usize {
                0
            }
            fn integrand(&self, _t: f64, u: &[f64], _p: &[f64], g: &mut [f64]) -> f64 {
                g[0] = 2.0 * u[0];
                u[0] * u[0] - 1.5
            }
        }
        let mut spec = linear_spec();
        spec.integrals.push(Arc::new(Mean));
        spec.free = vec![0, 1];
        spec.check(true).unwrap();
        let (c, mut x) = Collocation::discretize(spec, &[constant_guess(1.2)], &[3], 3, vec![0.7, 0.4]).unwrap();
        for (k, v) in x.iter_mut().enumerate() {
            *v += 0.05 * (1.0 + k as f64).cos();
        }
        // solve J dx = r with one extra row, then compare J dx against differences
        let n = c.n_unknowns();
        let row = LinearRow { coeffs: (0..n).map(|k| 1.0 + 0.1 * k as f64).collect(), value: 0.0 };
        let rhs: Vec<f64> = (0..c.n_equations()).map(|k| (k as f64 * 0.37).sin()).collect();
        let dx = c.solve_linearized(&x, &rhs, &[row.clone()], &[0.3]).unwrap();
        let eps = 1e-6;
        let xp: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + eps * b).collect();
        let xm: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a - eps * b).collect();
        let (rp, rm) = (c.residual(&xp).unwrap(), c.residual(&xm).unwrap());
        for k in 0..rhs.len() {
            assert!(((rp[k] - rm[k]) / (2.0 * eps) - rhs[k]).abs() < 1e-6, "row {k}");
        }
        assert!((row.coeffs.iter().zip(&dx).map(|(a, b)| a * b).sum::<f64>() - 0.3).abs() < 1e-10);
    }

    #[test]
    fn coarse_initial_data_is_rejected() {
        let tau: Vec<f64> = (0..=400).map(|k| k as f64 / 400.0).collect();
        let wiggly = OrbitSegment {
            chart: crate::fields::ChartId::Original,
            time_scale: 1.0,
            states: tau.iter().map(|t| vec![(60.0 * t).sin()]).collect(),
            tau,
            derivs: None,
        };
        let res = Collocation::discretize(linear_spec(), &[wiggly], &[3], 2, vec![1.0, 1.0]);
        assert!(matches!(res, Err(Error::MeshTooCoarse(_))));
    }
}
