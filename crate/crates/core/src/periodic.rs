//! Saddle periodic orbits: correction, continuation and Floquet data.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::continuation::bvp::equispaced_basis;
use crate::continuation::{
    continue_branch, newton_solve, BoundaryConditions, BvpSpec, ChartField, Collocation, ContinuationBranch,
    ContinuationOptions, Direction, Dynamics, Ends, IntegralConstraint, LinearRow, MeshSolution, Monitor,
    NonlinearSystem, OrbitSegment, Segment, DEFAULT_NCOL, DEFAULT_NTST,
};
use crate::error::{Error, Result};
use crate::fields::{original_jacobian, original_rhs, ChartId, Mat3, Params, SystemParam, Vec3};
use crate::numerics::dense::{DenseMatrix, Lu};
use crate::numerics::eig::{dot, eigenvector, norm, normalize_sign};
use crate::numerics::ode::{integrate, Event, IvpOptions, IvpStatus};
use crate::numerics::quadrature::gauss_nodes;

const P_T: usize = 3;
const PERIODIC_PARAMS: [&str; 4] = ["alpha", "beta", "gamma", "T"];

fn v3(u: &[f64]) -> Vec3 {
    [u[0], u[1], u[2]]
}

fn param_index(p: SystemParam) -> usize {
    match p {
        SystemParam::Alpha => 0,
        SystemParam::Beta => 1,
        SystemParam::Gamma => 2,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub params: Params,
    pub period: f64,
    /// One period on normalized time, with `u(0)` in the section `x = 0`.
    pub orbit: MeshSolution,
}

impl PeriodicOrbit {
    pub fn base_point(&self) -> Vec3 {
        v3(self.orbit.start())
    }

    /// Largest distance of any node from the base point.
    pub fn amplitude(&self) -> f64 {
        let b = self.base_point();
        (0..self.orbit.n_nodes())
            .map(|k| norm(&std::array::from_fn(|i| self.orbit.node(k)[i] - b[i])))
            .fold(0.0, f64::max)
    }

    /// Samples `(t, u)` over one period in physical time.
    pub fn samples(&self) -> Vec<(f64, Vec3)> {
        (0..self.orbit.n_nodes()).map(|k| (self.orbit.node_time(k) * self.period, v3(self.orbit.node(k)))).collect()
    }

    /// Integrates the field over one period from the base point and returns
    /// the return distance.
    pub fn closure_defect(&self) -> Result<f64> {
        let p = self.params;
        let opts = IvpOptions { tol: 1e-12, max_steps: 1_000_000, h_max: None };
        let b = self.base_point();
        let res = integrate(move |_, u| original_rhs(u, &p), b, (0.0, self.period), &[], &opts)?;
        let e = res.last().1;
        Ok(norm(&std::array::from_fn(|i| e[i] - b[i])))
    }
}

/// `u(1) - u(0)`.
struct Periodicity;

impl BoundaryConditions for Periodicity {
    fn count(&self) -> usize {
        3
    }

    fn residual(&self, ends: &Ends<'_>, _p: &[f64], out: &mut [f64]) -> Result<()> {
        for i in 0..3 {
            out[i] = ends.ends[0][i] - ends.starts[0][i];
        }
        Ok(())
    }
}

/// `int <u, u_ref'> = 0`.
struct Phase {
    reference: MeshSolution,
}

impl IntegralConstraint for Phase {
    fn segment(&self) -> usize {
        0
    }

    fn integrand(&self, tau: f64, u: &[f64], _p: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.reference.derivative(tau);
        grad.copy_from_slice(&d);
        u.iter().zip(&d).map(|(a, b)| a * b).sum()
    }
}

fn periodic_spec(reference: MeshSolution, free: Vec<usize>) -> BvpSpec {
    BvpSpec {
        param_names: PERIODIC_PARAMS.iter().map(|s| s.to_string()).collect(),
        segments: vec![Segment {
            name: "u".into(),
            dynamics: Arc::new(ChartField::new(ChartId::Original, [0, 1, 2])),
            time_scale: P_T,
            chart: Some(ChartId::Original),
        }],
        boundary: vec![Arc::new(Periodicity)],
        integrals: vec![Arc::new(Phase { reference })],
        free,
    }
}

fn param_vector(params: &Params, period: f64) -> Vec<f64> {
    vec![params.alpha, params.beta, params.gamma, period]
}

/// Orbit samples `(t, u)` on normalized time.
pub fn loop_segment(samples: &[(f64, Vec3)]) -> Result<OrbitSegment> {
    if samples.len() < 4 {
        return Err(Error::InvalidInput("a loop needs at least four samples".into()));
    }
    let (t0, t1) = (samples[0].0, samples[samples.len() - 1].0);
    if !(t1 > t0) || samples.windows(2).any(|w| w[1].0 < w[0].0) {
        return Err(Error::InvalidInput("loop times must increase".into()));
    }
    Ok(OrbitSegment {
        chart: ChartId::Original,
        time_scale: t1 - t0,
        tau: samples.iter().map(|(t, _)| (t - t0) / (t1 - t0)).collect(),
        states: samples.iter().map(|(_, u)| u.to_vec()).collect(),
        derivs: None,
    })
}

fn solve_periodic(guess: &OrbitSegment, period: f64, params: &Params, ntst: usize, ncol: usize) -> Result<PeriodicOrbit> {
    // the reference is the guess itself on the collocation mesh
    let (c0, x0) = Collocation::discretize(
        periodic_spec(dummy_reference(), vec![]),
        std::slice::from_ref(guess),
        &[ntst],
        ncol,
        param_vector(params, period),
    )?;
    let reference = c0.segment(&x0, 0);
    let (coll, x) = Collocation::discretize(
        periodic_spec(reference, vec![P_T]),
        std::slice::from_ref(guess),
        &[ntst],
        ncol,
        param_vector(params, period),
    )?;
    let rep = newton_solve(&coll, &x, &[], &Default::default())?;
    let p = coll.params_at(&rep.x);
    if !(p[P_T] > 0.0) {
        return Err(Error::InvalidInput(format!("corrected period is not positive ({})", p[P_T])));
    }
    Ok(PeriodicOrbit { params: *params, period: p[P_T], orbit: coll.segment(&rep.x, 0) })
}

fn dummy_reference() -> MeshSolution {
    MeshSolution { mesh: vec![0.0, 1.0], ncol: 1, dim: 3, values: vec![0.0; 6], time_scale: 1.0, chart: None }
}

/// Phase in `[0, 1)` of the first crossing of `x = 0` with `x' < 0`.
fn section_phase(orbit: &MeshSolution) -> Option<f64> {
    let n = orbit.n_nodes();
    for k in 0..n - 1 {
        let (a, b) = (orbit.node(k)[0], orbit.node(k + 1)[0]);
        if a > 0.0 && b <= 0.0 {
            let (mut lo, mut hi) = (orbit.node_time(k), orbit.node_time(k + 1));
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if orbit.eval(mid)[0] > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Some(0.5 * (lo + hi));
        }
    }
    None
}

/// Corrects a closed-loop guess to a periodic orbit with integral phase
/// condition and free period. The result starts on the section `x = 0`.
pub fn correct_periodic(
    loop_guess: &[(f64, Vec3)],
    period_guess: Option<f64>,
    params: &Params,
    ntst: usize,
    ncol: usize,
) -> Result<PeriodicOrbit> {
    let guess = loop_segment(loop_guess)?;
    let period = period_guess.unwrap_or(guess.time_scale);
    if !(period > 0.0) {
        return Err(Error::InvalidInput(format!("period guess must be positive, got {period}")));
    }
    let first = solve_periodic(&guess, period, params, ntst, ncol)?;
    if first.amplitude() < 1e-6 {
        return Err(Error::InvalidInput("loop collapsed onto an equilibrium".into()));
    }
    let Some(shift) = section_phase(&first.orbit) else {
        return Ok(first);
    };
    // rotate so that phase zero lies on the section and correct again
    let m = 8 * first.orbit.n_nodes();
    let rotated: Vec<(f64, Vec3)> = (0..=m)
        .map(|k| {
            let s = k as f64 / m as f64;
            let tau = (shift + s).rem_euclid(1.0);
            (s * first.period, v3(&first.orbit.eval(tau)))
        })
        .collect();
    let mut seg = loop_segment(&rotated)?;
    seg.derivs = Some(
        seg.tau.iter().map(|&s| first.orbit.derivative((shift + s).rem_euclid(1.0).min(1.0 - 1e-14))).collect(),
    );
    solve_periodic(&seg, first.period, params, ntst, ncol)
}

/// Default-mesh version of [`correct_periodic`].
pub fn correct_periodic_default(loop_guess: &[(f64, Vec3)], params: &Params) -> Result<PeriodicOrbit> {
    correct_periodic(loop_guess, None, params, DEFAULT_NTST, DEFAULT_NCOL)
}

/// Finds a fixed point of the `returns`-fold return map to `x = 0` near
/// `(0, y, z)` by Newton's method and samples the resulting loop. This gives
/// loop guesses for saddle periodic orbits.
pub fn seed_loop(params: &Params, y: f64, z: f64, returns: usize, samples: usize) -> Result<(Vec<(f64, Vec3)>, f64)> {
    let p = *params;
    let dir: i8 = if original_rhs(&[0.0, y, z], &p)[0] > 0.0 { 1 } else { -1 };
    let opts = IvpOptions { tol: 1e-12, max_steps: 1_000_000, h_max: None };
    let flow = |y: f64, z: f64| -> Result<(f64, f64, f64)> {
        let ev = [Event::new(|_, u: &Vec3| u[0]).direction(dir).terminal_after(returns)];
        let res = integrate(move |_, u| original_rhs(u, &p), [0.0, y, z], (0.0, 200.0), &ev, &opts)?;
        if res.status != IvpStatus::Terminated(0) {
            return Err(Error::NotEnoughCrossings { found: res.events.len(), needed: returns });
        }
        let (t, u) = res.last();
        Ok((u[1], u[2], t))
    };
    let (mut y, mut z) = (y, z);
    let mut period = 0.0;
    let mut converged = false;
    for _ in 0..40 {
        let (py, pz, t) = flow(y, z)?;
        period = t;
        let (ry, rz) = (py - y, pz - z);
        if ry.abs().max(rz.abs()) < 1e-11 * (1.0 + y.abs() + z.abs()) {
            converged = true;
            break;
        }
        let h = 1e-7;
        let (ay, az, _) = flow(y + h, z)?;
        let (by, bz, _) = flow(y, z + h)?;
        let j = [[(ay - py) / h - 1.0, (by - py) / h], [(az - pz) / h, (bz - pz) / h - 1.0]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(Error::SingularJacobian);
        }
        y -= (j[1][1] * ry - j[0][1] * rz) / det;
        z -= (-j[1][0] * ry + j[0][0] * rz) / det;
    }
    if !converged {
        return Err(Error::NoConvergence { history: vec![] });
    }
    let res = integrate(move |_, u| original_rhs(u, &p), [0.0, y, z], (0.0, period), &[], &opts)?;
    let out = (0..=samples)
        .map(|k| {
            let t = period * k as f64 / samples as f64;
            (t, res.interpolate(t))
        })
        .collect();
    Ok((out, period))
}

/// Periodic orbit problem whose phase reference follows the branch.
pub struct PeriodicContinuation {
    coll: Collocation,
}

impl PeriodicContinuation {
    pub fn new(orbit: &PeriodicOrbit, free: SystemParam) -> Result<(Self, Vec<f64>)> {
        let spec = periodic_spec(orbit.orbit.clone(), vec![P_T, param_index(free)]);
        let p = param_vector(&orbit.params, orbit.period);
        let mut coll = Collocation::new(spec, vec![orbit.orbit.mesh.clone()], orbit.orbit.ncol, p.clone())?;
        coll.set_param_weight(P_T, 1.0 / orbit.period.powi(2).max(1.0));
        let x = coll.pack(std::slice::from_ref(&orbit.orbit), &p);
        Ok((Self { coll }, x))
    }

    pub fn orbit_at(&self, x: &[f64]) -> PeriodicOrbit {
        let p = self.coll.params_at(x);
        PeriodicOrbit {
            params: Params::with_gamma(p[0], p[1], p[2]),
            period: p[P_T],
            orbit: self.coll.segment(x, 0),
        }
    }

    pub fn collocation(&self) -> &Collocation {
        &self.coll
    }
}

impl NonlinearSystem for PeriodicContinuation {
    fn n_unknowns(&self) -> usize {
        self.coll.n_unknowns()
    }

    fn n_equations(&self) -> usize {
        self.coll.n_equations()
    }

    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.coll.residual(x)
    }

    fn solve_linearized(&self, x: &[f64], rhs: &[f64], rows: &[LinearRow], extra_rhs: &[f64]) -> Result<Vec<f64>> {
        self.coll.solve_linearized(x, rhs, rows, extra_rhs)
    }

    fn weights(&self) -> Vec<f64> {
        self.coll.weights()
    }

    fn accept(&mut self, x: &[f64]) {
        let reference = self.coll.segment(x, 0);
        self.coll.set_integrals(vec![Arc::new(Phase { reference })]);
    }

    fn summary(&self, x: &[f64]) -> Vec<f64> {
        self.coll.summary(x)
    }

    fn summary_names(&self) -> Vec<String> {
        self.coll.summary_names()
    }
}

/// Continues a periodic orbit in one system parameter with free period,
/// stopping when the parameter leaves `range`.
pub fn continue_periodic(
    orbit: &PeriodicOrbit,
    free: SystemParam,
    sign: f64,
    range: (f64, f64),
    opts: &ContinuationOptions,
) -> Result<ContinuationBranch> {
    let (mut sys, x) = PeriodicContinuation::new(orbit, free)?;
    let k = param_index(free);
    let col = sys.coll.param_column(k).expect("parameter is free");
    let t_col = sys.coll.param_column(P_T).expect("period is free");
    let monitors = [Monitor::unknown("T", t_col)];
    let stop = move |b: &ContinuationBranch| {
        let v = b.last().data[k];
        v < range.0 || v > range.1
    };
    continue_branch(&mut sys, &x, Direction::Unknown { index: col, sign }, opts, &monitors, &stop)
}

/// Variational equation `v' = J(u(tau)) v` along a periodic orbit.
struct Variational {
    orbit: MeshSolution,
    params: Params,
}

impl Variational {
    fn jac_at(&self, tau: f64) -> Mat3 {
        original_jacobian(&v3(&self.orbit.eval(tau)), &self.params)
    }
}

impl Dynamics for Variational {
    fn dim(&self) -> usize {
        3
    }

    fn rhs(&self, tau: f64, v: &[f64], _p: &[f64], out: &mut [f64]) {
        let j = self.jac_at(tau);
        for r in 0..3 {
            out[r] = dot(&j[r], &v3(v));
        }
    }

    fn jac(&self, tau: f64, _v: &[f64], _p: &[f64], out: &mut [f64]) {
        let j = self.jac_at(tau);
        for r in 0..3 {
            out[3 * r..3 * r + 3].copy_from_slice(&j[r]);
        }
    }

    fn dparam(&self, _tau: f64, _v: &[f64], _p: &[f64], _k: usize, _out: &mut [f64]) -> bool {
        false
    }
}

/// `v(1) - mu v(0)` and `|v(0)|^2 - 1`.
struct FloquetBoundary;

impl BoundaryConditions for FloquetBoundary {
    fn count(&self) -> usize {
        4
    }

    fn residual(&self, ends: &Ends<'_>, p: &[f64], out: &mut [f64]) -> Result<()> {
        let (v0, v1) = (ends.starts[0], ends.ends[0]);
        for i in 0..3 {
            out[i] = v1[i] - p[1] * v0[i];
        }
        out[3] = v0.iter().map(|v| v * v).sum::<f64>() - 1.0;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloquetData {
    /// All three multipliers, by decreasing modulus.
    pub multipliers: [Complex64; 3],
    /// Index of the multiplier closest to 1.
    pub trivial: usize,
    pub stable_multiplier: f64,
    /// Unit stable Floquet vector at the base point.
    pub stable_vector: Vec3,
    /// `max |v(1) - mu v(0)|` of the refined eigenfunction.
    pub bundle_residual: f64,
    /// Relative deviation of the product of multipliers from
    /// `exp(T int trace J)`.
    pub liouville_defect: f64,
    pub eigenfunction: MeshSolution,
}

/// Per-interval propagators of the collocation discretization of the
/// variational equation: `nodes[i][l]` maps `v` at the start of interval
/// `i` to node `l + 1` of that interval.
fn interval_propagators(orbit: &PeriodicOrbit) -> Result<Vec<Vec<Mat3>>> {
    let sol = &orbit.orbit;
    let m = sol.ncol;
    let (gauss, _) = gauss_nodes(m)?;
    let basis: Vec<(Vec<f64>, Vec<f64>)> = gauss.iter().map(|&c| equispaced_basis(m, c)).collect();
    let t = orbit.period;
    let mut out = Vec::with_capacity(sol.ntst());
    for i in 0..sol.ntst() {
        let h = sol.mesh[i + 1] - sol.mesh[i];
        let mut a = DenseMatrix::zeros(3 * m, 3 * m);
        let mut b = DenseMatrix::zeros(3 * m, 3);
        for (j, (lv, ld)) in basis.iter().enumerate() {
            let jm = original_jacobian(&v3(&sol.eval(sol.mesh[i] + gauss[j] * h)), &orbit.params);
            for r in 0..3 {
                for l in 0..=m {
                    for c in 0..3 {
                        let mut v = -h * t * jm[r][c] * lv[l];
                        if r == c {
                            v += ld[l];
                        }
                        if l == 0 {
                            b[(3 * j + r, c)] += v;
                        } else {
                            a[(3 * j + r, 3 * (l - 1) + c)] += v;
                        }
                    }
                }
            }
        }
        let lu = Lu::factor(&a)?;
        let mut cols = Vec::with_capacity(3);
        for c in 0..3 {
            let rhs: Vec<f64> = (0..3 * m).map(|r| -b[(r, c)]).collect();
            cols.push(lu.solve(&rhs));
        }
        let nodes = (0..m)
            .map(|l| std::array::from_fn(|r| std::array::from_fn(|c| cols[c][3 * l + r])))
            .collect();
        out.push(nodes);
    }
    Ok(out)
}

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..3).map(|k| a[i][k] * b[k][j]).sum()))
}

fn mat_vec(a: &Mat3, v: &Vec3) -> Vec3 {
    std::array::from_fn(|i| dot(&a[i], v))
}

/// Monodromy matrix of the discretized variational equation.
pub fn monodromy(orbit: &PeriodicOrbit) -> Result<Mat3> {
    let props = interval_propagators(orbit)?;
    let mut m: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for p in &props {
        m = mat_mul(p.last().expect("ncol >= 1"), &m);
    }
    Ok(m)
}

/// Roots of `l^3 + c2 l^2 + c1 l + c0`, polished by Newton's method.
pub fn cubic_roots(c2: f64, c1: f64, c0: f64) -> [Complex64; 3] {
    let p = |l: Complex64| ((l + c2) * l + c1) * l + c0;
    let dp = |l: Complex64| (3.0 * l + 2.0 * c2) * l + c1;
    let shift = -c2 / 3.0;
    let q = c1 - c2 * c2 / 3.0;
    let r = 2.0 * c2.powi(3) / 27.0 - c2 * c1 / 3.0 + c0;
    let disc = Complex64::new(r * r / 4.0 + q.powi(3) / 27.0, 0.0).sqrt();
    let mut u = (Complex64::new(-r / 2.0, 0.0) + disc).cbrt();
    if u.norm() < 1e-300 {
        u = (Complex64::new(-r / 2.0, 0.0) - disc).cbrt();
    }
    let omega = Complex64::new(-0.5, 3f64.sqrt() / 2.0);
    let mut roots = [Complex64::new(0.0, 0.0); 3];
    for (k, root) in roots.iter_mut().enumerate() {
        let uk = u * omega.powi(k as i32);
        let t = if uk.norm() == 0.0 { uk } else { uk - q / (3.0 * uk) };
        let mut l = t + shift;
        for _ in 0..8 {
            let d = dp(l);
            if d.norm() == 0.0 {
                break;
            }
            let step = p(l) / d;
            l -= step;
            if step.norm() <= 1e-16 * l.norm() {
                break;
            }
        }
        *root = l;
    }
    // conjugate pairs come out with rounding asymmetry; real roots get a
    // clean zero imaginary part
    for root in roots.iter_mut() {
        if root.im.abs() <= 1e-12 * root.norm().max(1e-300) {
            root.im = 0.0;
        }
    }
    roots
}

/// Floquet multipliers of a periodic orbit and its refined stable Floquet
/// bundle.
pub fn floquet(orbit: &PeriodicOrbit) -> Result<FloquetData> {
    let props = interval_propagators(orbit)?;
    let mut mono: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for p in &props {
        mono = mat_mul(p.last().expect("ncol >= 1"), &mono);
    }
    let [c2, c1, c0] = crate::numerics::eig::characteristic_polynomial(&mono);
    let mut mult = cubic_roots(c2, c1, c0);
    mult.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    let trivial = (0..3).min_by(|&a, &b| (mult[a] - 1.0).norm().total_cmp(&(mult[b] - 1.0).norm())).unwrap();
    let stable_idx = (0..3).filter(|&k| k != trivial).min_by(|&a, &b| mult[a].norm().total_cmp(&mult[b].norm())).unwrap();
    let mu = mult[stable_idx];
    if mu.im != 0.0 || mu.re.abs() >= 1.0 {
        return Err(Error::NoRealStableMultiplier);
    }
    let v0 = normalize_sign(eigenvector(&mono, mu.re, &[]));

    // node values of the eigenfunction from the interval propagators
    let sol = &orbit.orbit;
    let mut values = Vec::with_capacity(sol.values.len());
    let mut v = v0;
    values.extend_from_slice(&v);
    for p in &props {
        let start = v;
        for node in p {
            v = mat_vec(node, &start);
            values.extend_from_slice(&v);
        }
    }

    let spec = BvpSpec {
        param_names: vec!["T".into(), "mu".into()],
        segments: vec![Segment {
            name: "v".into(),
            dynamics: Arc::new(Variational { orbit: sol.clone(), params: orbit.params }),
            time_scale: 0,
            chart: None,
        }],
        boundary: vec![Arc::new(FloquetBoundary)],
        integrals: vec![],
        free: vec![1],
    };
    let guess = MeshSolution { values, time_scale: orbit.period, chart: None, ..sol.clone() };
    let p = vec![orbit.period, mu.re];
    let coll = Collocation::new(spec, vec![sol.mesh.clone()], sol.ncol, p.clone())?;
    let x = coll.pack(&[guess], &p);
    let rep = newton_solve(&coll, &x, &[], &Default::default())?;
    let mu_s = coll.params_at(&rep.x)[1];
    let eig = coll.segment(&rep.x, 0);
    let (e0, e1) = (v3(eig.start()), v3(eig.end()));
    let bundle_residual = (0..3).map(|i| (e1[i] - mu_s * e0[i]).abs()).fold(0.0, f64::max);
    let mut stable_multiplier = mu_s;
    if (mu_s - mu.re).abs() > 1e-6 * mu.re.abs().max(1e-12) {
        // keep the monodromy value when the refinement wandered off
        stable_multiplier = mu.re;
    }
    mult[stable_idx] = Complex64::new(stable_multiplier, 0.0);

    let (gauss, weights) = gauss_nodes(8)?;
    let mut trace_int = 0.0;
    for i in 0..sol.ntst() {
        let h = sol.mesh[i + 1] - sol.mesh[i];
        for (g, w) in gauss.iter().zip(&weights) {
            let j = original_jacobian(&v3(&sol.eval(sol.mesh[i] + g * h)), &orbit.params);
            trace_int += w * h * (j[0][0] + j[1][1] + j[2][2]);
        }
    }
    let expected = (orbit.period * trace_int).exp();
    let product = mult.iter().fold(Complex64::new(1.0, 0.0), |a, b| a * b);
    let liouville_defect = (product - expected).norm() / expected;

    Ok(FloquetData {
        multipliers: mult,
        trivial,
        stable_multiplier,
        stable_vector: e0,
        bundle_residual,
        liouville_defect,
        eigenfunction: eig,
    })
}
