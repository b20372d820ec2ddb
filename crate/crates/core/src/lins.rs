//! Lin's method for connections from a finite saddle (or saddle periodic
//! orbit) to the degenerate equilibrium at infinity.
//!
//! Two segments meet in the section `x = 0`:
//!
//! * `u_B` in the blown-up chart, from the critical cylinder at angle
//!   `theta_B` and height `delta_B` forward over time `T_B`;
//! * `u` in the original chart, from the section forward over time `T0` to
//!   `delta_0` along the stable direction of the finite object.
//!
//! The glued end of `u_B` and the start of `u` differ by `eta` times a fixed
//! unit vector `psi` in the section; `eta = 0` is a connecting orbit.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::charts::glue;
use crate::continuation::{
    continue_branch, newton_solve, BoundaryConditions, BvpSpec, ChartField, Collocation, ContinuationBranch,
    ContinuationOptions, Direction, Ends, EventKind, MeshSolution, Monitor, NonlinearSystem, OrbitSegment, Segment,
    DEFAULT_NCOL, DEFAULT_NTST,
};
use crate::eigenstructure::{saddle_at_origin, stable_direction};
use crate::error::{Error, Result};
use crate::fields::{blownup_rhs, original_rhs, ChartId, Params, SystemParam, Vec3};
use crate::infinity::{cylinder_point, DEFAULT_DELTA_B, R_STAR};
use crate::numerics::eig::normalize_sign;
use crate::numerics::ode::{integrate, Event, IvpOptions, IvpStatus};

pub const P_ALPHA: usize = 0;
pub const P_BETA: usize = 1;
pub const P_GAMMA: usize = 2;
pub const P_T0: usize = 3;
pub const P_TB: usize = 4;
pub const P_THETA: usize = 5;
pub const P_ETA: usize = 6;
pub const P_DELTA0: usize = 7;

pub const LIN_PARAMS: [&str; 8] = ["alpha", "beta", "gamma", "T0", "TB", "theta_B", "eta", "delta_0"];

/// Segment order in the boundary value problem.
pub const SEG_INFINITY: usize = 0;
pub const SEG_FINITE: usize = 1;

/// Default distance of `u(1)` from the saddle; the sign picks the branch of
/// the stable manifold that enters `y > 0`.
pub const DEFAULT_DELTA_0: f64 = -1e-4;
pub const DEFAULT_CROSSING_INDEX: usize = 3;

/// Largest endpoint distance from the section accepted for seeded segments.
pub const SECTION_TOLERANCE: f64 = 1e-9;

/// Mesh intervals of `u_B` per `pi` of integration time.
pub const INFINITY_INTERVALS_PER_PI: f64 = 16.0;

/// Integration accuracy used for seeding.
const SEED_TOL: f64 = 1e-11;

fn param_index(p: SystemParam) -> usize {
    match p {
        SystemParam::Alpha => P_ALPHA,
        SystemParam::Beta => P_BETA,
        SystemParam::Gamma => P_GAMMA,
    }
}

/// The section `Sigma = {x = 0}` with normal `(1, 0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinSection;

impl LinSection {
    pub const NORMAL: Vec3 = [1.0, 0.0, 0.0];

    pub fn value(u: &[f64]) -> f64 {
        u[0]
    }

    pub fn contains(u: &[f64]) -> bool {
        Self::value(u).abs() <= SECTION_TOLERANCE
    }
}

/// Where `u(1)` lands: on the stable eigendirection of the origin or on the
/// stable Floquet direction of a periodic orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FiniteTarget {
    /// Stable eigenvector, kept aligned with `reference` as parameters move.
    Saddle { reference: Vec3 },
    /// `base + delta_0 * direction` with both fixed.
    Periodic { base: Vec3, direction: Vec3 },
}

impl FiniteTarget {
    pub fn saddle(params: &Params) -> Result<Self> {
        let s = saddle_at_origin(params)?;
        Ok(Self::Saddle { reference: normalize_sign(s.e_s) })
    }

    pub fn point(&self, delta_0: f64, params: &Params) -> Result<Vec3> {
        Ok(match self {
            Self::Saddle { reference } => {
                let e = stable_direction(params, reference)?;
                [delta_0 * e[0], delta_0 * e[1], delta_0 * e[2]]
            }
            Self::Periodic { base, direction } => std::array::from_fn(|i| base[i] + delta_0 * direction[i]),
        })
    }
}

fn v3(u: &[f64]) -> Vec3 {
    [u[0], u[1], u[2]]
}

/// Integrates the original field backward from `end` until the
/// `crossing_index`-th crossing of the section and returns the forward
/// trajectory on normalized time.
pub fn seed_segment_to(params: &Params, end: Vec3, crossing_index: usize, max_time: f64) -> Result<OrbitSegment> {
    if crossing_index == 0 {
        return Err(Error::InvalidInput("crossing index starts at 1".into()));
    }
    let p = *params;
    let events = [Event::new(|_, u: &Vec3| u[0]).terminal_after(crossing_index)];
    let opts = IvpOptions { tol: SEED_TOL, max_steps: 5_000_000, h_max: Some(0.05) };
    let res = integrate(move |_, u| original_rhs(u, &p), end, (0.0, -max_time), &events, &opts)?;
    if res.status != IvpStatus::Terminated(0) {
        return Err(Error::NotEnoughCrossings { found: res.events.len(), needed: crossing_index });
    }
    let (t_end, _) = res.last();
    let t0 = -t_end;
    let mut tau = Vec::with_capacity(res.samples.len());
    let mut states = Vec::with_capacity(res.samples.len());
    let mut derivs = Vec::with_capacity(res.samples.len());
    for ((t, u), f) in res.samples.iter().zip(&res.derivatives).rev() {
        tau.push((1.0 + t / t0).clamp(0.0, 1.0));
        states.push(u.to_vec());
        derivs.push(f.iter().map(|v| t0 * v).collect());
    }
    tau[0] = 0.0;
    Ok(OrbitSegment { chart: ChartId::Original, time_scale: t0, tau, states, derivs: Some(derivs) })
}

/// Seeds `u` backward from `delta_0` along the stable eigenvector of the
/// origin.
pub fn seed_finite_segment(params: &Params, delta_0: f64, crossing_index: usize) -> Result<OrbitSegment> {
    let end = FiniteTarget::saddle(params)?.point(delta_0, params)?;
    seed_segment_to(params, end, crossing_index, 1e3)
}

/// A crossing of the section by the forward orbit of a cylinder point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfinityCrossing {
    pub index: usize,
    pub time: f64,
    pub state: Vec3,
}

fn integrate_from_cylinder(
    params: &Params,
    theta_b: f64,
    delta_b: f64,
    crossings: Option<usize>,
    max_time: f64,
) -> Result<crate::numerics::ode::IvpResult<3>> {
    let p = *params;
    let start = cylinder_point(R_STAR, theta_b, delta_b, params.alpha);
    let mut section = Event::new(|_, u: &Vec3| u[0]);
    if let Some(k) = crossings {
        section = section.terminal_after(k);
    }
    // leaving the neighbourhood of infinity ends the search
    let away = Event::new(|_, u: &Vec3| u[2] - 2.0).direction(1).terminal();
    let opts = IvpOptions { tol: SEED_TOL, max_steps: 20_000_000, h_max: Some(0.05) };
    integrate(move |_, u| blownup_rhs(u, &p), start, (0.0, max_time), &[section, away], &opts)
}

/// All crossings of the section by `u_B` up to `max_time`.
pub fn infinity_crossings(params: &Params, theta_b: f64, delta_b: f64, max_time: f64) -> Result<Vec<InfinityCrossing>> {
    let res = integrate_from_cylinder(params, theta_b, delta_b, None, max_time)?;
    Ok(res
        .events_of(0)
        .enumerate()
        .map(|(k, e)| InfinityCrossing { index: k + 1, time: e.t, state: e.state })
        .collect())
}

/// Crossing of `u_B` whose glued image is closest to `target`.
pub fn nearest_crossing(
    params: &Params,
    theta_b: f64,
    delta_b: f64,
    target: &[f64],
    max_time: f64,
) -> Result<InfinityCrossing> {
    let all = infinity_crossings(params, theta_b, delta_b, max_time)?;
    all.into_iter()
        .filter(|c| c.state[2] > 0.0)
        .map(|c| {
            let g = glue(&c.state).0;
            let d = (0..3).map(|i| (g[i] - target[i]).powi(2)).sum::<f64>();
            (d, c)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, c)| c)
        .ok_or(Error::NotEnoughCrossings { found: 0, needed: 1 })
}

/// Seeds `u_B` forward from the cylinder point at `theta_b` up to its
/// `crossing_index`-th crossing of the section.
pub fn seed_infinity_segment(params: &Params, theta_b: f64, delta_b: f64, crossing_index: usize) -> Result<OrbitSegment> {
    if crossing_index == 0 {
        return Err(Error::InvalidInput("crossing index starts at 1".into()));
    }
    let res = integrate_from_cylinder(params, theta_b, delta_b, Some(crossing_index), 1e5)?;
    if res.status != IvpStatus::Terminated(0) {
        return Err(Error::NotEnoughCrossings { found: res.events_of(0).count(), needed: crossing_index });
    }
    let (tb, _) = res.last();
    let n = res.samples.len();
    let mut tau = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(n);
    let mut derivs = Vec::with_capacity(n);
    for ((t, u), f) in res.samples.iter().zip(&res.derivatives) {
        tau.push((t / tb).clamp(0.0, 1.0));
        states.push(u.to_vec());
        derivs.push(f.iter().map(|v| tb * v).collect());
    }
    tau[n - 1] = 1.0;
    Ok(OrbitSegment { chart: ChartId::BlownUp, time_scale: tb, tau, states, derivs: Some(derivs) })
}

/// `u_B(0) = cylinder(theta_B)`, `glue(u_B(1)) - u(0) = eta psi`,
/// `u(0) in Sigma`, `u(1) = target(delta_0)`.
#[derive(Debug, Clone)]
struct LinBoundary {
    psi: Vec3,
    delta_b: f64,
    target: FiniteTarget,
}

impl BoundaryConditions for LinBoundary {
    fn count(&self) -> usize {
        10
    }

    fn residual(&self, ends: &Ends<'_>, p: &[f64], out: &mut [f64]) -> Result<()> {
        let ub0 = ends.starts[SEG_INFINITY];
        let ub1 = ends.ends[SEG_INFINITY];
        let u0 = ends.starts[SEG_FINITE];
        let u1 = ends.ends[SEG_FINITE];
        let cyl = cylinder_point(R_STAR, p[P_THETA], self.delta_b, p[P_ALPHA]);
        for i in 0..3 {
            out[i] = ub0[i] - cyl[i];
        }
        if ub1[2] <= 0.0 {
            return Err(Error::AtInfinity(ub1[2]));
        }
        let g = glue(&v3(ub1)).0;
        for i in 0..3 {
            out[3 + i] = g[i] - u0[i] - p[P_ETA] * self.psi[i];
        }
        out[6] = LinSection::value(u0);
        let params = Params::with_gamma(p[P_ALPHA], p[P_BETA], p[P_GAMMA]);
        let tgt = self.target.point(p[P_DELTA0], &params)?;
        for i in 0..3 {
            out[7 + i] = u1[i] - tgt[i];
        }
        Ok(())
    }
}

/// Seeding and discretization choices for a Lin problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinSetup {
    pub params: Params,
    pub target: FiniteTarget,
    pub delta_0: f64,
    pub delta_b: f64,
    pub theta_b: f64,
    pub crossing_index: usize,
    pub crossing_index_b: usize,
    pub ntst: usize,
    /// Mesh intervals of `u_B`; `None` scales with `T_B`.
    pub ntst_b: Option<usize>,
    pub ncol: usize,
}

impl LinSetup {
    pub fn new(params: Params) -> Result<Self> {
        Ok(Self {
            params,
            target: FiniteTarget::saddle(&params)?,
            delta_0: DEFAULT_DELTA_0,
            delta_b: DEFAULT_DELTA_B,
            theta_b: 0.0,
            crossing_index: DEFAULT_CROSSING_INDEX,
            crossing_index_b: 0,
            ntst: DEFAULT_NTST,
            ntst_b: None,
            ncol: DEFAULT_NCOL,
        })
    }
}

/// Mesh size of `u_B` for integration time `t_b`.
pub fn infinity_mesh_size(t_b: f64, ntst: usize) -> usize {
    ntst.max((INFINITY_INTERVALS_PER_PI * t_b / std::f64::consts::PI).ceil() as usize)
}

/// The two-segment Lin problem with its current solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinProblem {
    pub params: Params,
    pub seg_infinity: MeshSolution,
    pub seg_finite: MeshSolution,
    pub psi: Vec3,
    pub eta: f64,
    pub theta_b: f64,
    pub t0: f64,
    pub t_b: f64,
    pub delta_0: f64,
    pub delta_b: f64,
    pub crossing_index: usize,
    pub crossing_index_b: usize,
    pub target: FiniteTarget,
}

/// Builds the Lin problem from seeded segments: `psi` points from `u(0)` to
/// the glued end of `u_B` (the y-axis when they coincide) and `eta` starts
/// at their distance.
pub fn make_lin_problem(seg_u: &OrbitSegment, seg_ub: &OrbitSegment, setup: &LinSetup) -> Result<LinProblem> {
    if seg_u.chart != ChartId::Original || seg_ub.chart != ChartId::BlownUp {
        return Err(Error::ChartMismatch { expected: ChartId::BlownUp, found: seg_ub.chart });
    }
    for s in [seg_u.start(), seg_ub.end()] {
        if !LinSection::contains(s) {
            return Err(Error::EndpointNotInSection(LinSection::value(s).abs()));
        }
    }
    if seg_ub.end()[2] <= 0.0 {
        return Err(Error::AtInfinity(seg_ub.end()[2]));
    }
    let g = glue(&v3(seg_ub.end())).0;
    let gap: Vec3 = std::array::from_fn(|i| g[i] - seg_u.start()[i]);
    let eta = gap.iter().map(|v| v * v).sum::<f64>().sqrt();
    let psi = if eta > 1e-12 { gap.map(|v| v / eta) } else { [0.0, 1.0, 0.0] };

    let ntst_b = setup.ntst_b.unwrap_or_else(|| infinity_mesh_size(seg_ub.time_scale, setup.ntst));
    let mut pv = vec![0.0; LIN_PARAMS.len()];
    pv[P_ALPHA] = setup.params.alpha;
    pv[P_BETA] = setup.params.beta;
    pv[P_GAMMA] = setup.params.gamma;
    pv[P_T0] = seg_u.time_scale;
    pv[P_TB] = seg_ub.time_scale;
    pv[P_THETA] = setup.theta_b;
    pv[P_ETA] = eta;
    pv[P_DELTA0] = setup.delta_0;
    let spec = lin_spec(psi, setup.delta_b, setup.target.clone(), vec![]);
    let (coll, x) = Collocation::discretize(spec, &[seg_ub.clone(), seg_u.clone()], &[ntst_b, setup.ntst], setup.ncol, pv)?;
    Ok(LinProblem {
        params: setup.params,
        seg_infinity: coll.segment(&x, SEG_INFINITY),
        seg_finite: coll.segment(&x, SEG_FINITE),
        psi,
        eta,
        theta_b: setup.theta_b,
        t0: seg_u.time_scale,
        t_b: seg_ub.time_scale,
        delta_0: setup.delta_0,
        delta_b: setup.delta_b,
        crossing_index: setup.crossing_index,
        crossing_index_b: setup.crossing_index_b,
        target: setup.target.clone(),
    })
}

/// Seeds both segments and builds the Lin problem. A zero
/// `crossing_index_b` pairs `u(0)` with the nearest crossing of `u_B`.
pub fn seed_lin_problem(setup: &LinSetup) -> Result<LinProblem> {
    let end = setup.target.point(setup.delta_0, &setup.params)?;
    let seg_u = seed_segment_to(&setup.params, end, setup.crossing_index, 1e3)?;
    let mut setup = setup.clone();
    if setup.crossing_index_b == 0 {
        let c = nearest_crossing(&setup.params, setup.theta_b, setup.delta_b, seg_u.start(), 1e4)?;
        setup.crossing_index_b = c.index;
    }
    let seg_ub = seed_infinity_segment(&setup.params, setup.theta_b, setup.delta_b, setup.crossing_index_b)?;
    make_lin_problem(&seg_u, &seg_ub, &setup)
}

fn lin_spec(psi: Vec3, delta_b: f64, target: FiniteTarget, free: Vec<usize>) -> BvpSpec {
    let idx = [P_ALPHA, P_BETA, P_GAMMA];
    BvpSpec {
        param_names: LIN_PARAMS.iter().map(|s| s.to_string()).collect(),
        segments: vec![
            Segment {
                name: "u_B".into(),
                dynamics: Arc::new(ChartField::new(ChartId::BlownUp, idx)),
                time_scale: P_TB,
                chart: Some(ChartId::BlownUp),
            },
            Segment {
                name: "u".into(),
                dynamics: Arc::new(ChartField::new(ChartId::Original, idx)),
                time_scale: P_T0,
                chart: Some(ChartId::Original),
            },
        ],
        boundary: vec![Arc::new(LinBoundary { psi, delta_b, target })],
        integrals: vec![],
        free,
    }
}

impl LinProblem {
    pub fn param_vector(&self) -> Vec<f64> {
        let mut p = vec![0.0; LIN_PARAMS.len()];
        p[P_ALPHA] = self.params.alpha;
        p[P_BETA] = self.params.beta;
        p[P_GAMMA] = self.params.gamma;
        p[P_T0] = self.t0;
        p[P_TB] = self.t_b;
        p[P_THETA] = self.theta_b;
        p[P_ETA] = self.eta;
        p[P_DELTA0] = self.delta_0;
        p
    }

    /// The discretized problem with the given free parameters, and its
    /// unknowns at the current solution.
    pub fn system(&self, free: Vec<usize>) -> Result<(Collocation, Vec<f64>)> {
        let spec = lin_spec(self.psi, self.delta_b, self.target.clone(), free);
        let meshes = vec![self.seg_infinity.mesh.clone(), self.seg_finite.mesh.clone()];
        let p = self.param_vector();
        let mut coll = Collocation::new(spec, meshes, self.seg_finite.ncol, p.clone())?;
        // time scales are large; weigh them relative to their size
        coll.set_param_weight(P_T0, 1.0 / self.t0.powi(2).max(1.0));
        coll.set_param_weight(P_TB, 1.0 / self.t_b.powi(2).max(1.0));
        let x = coll.pack(&[self.seg_infinity.clone(), self.seg_finite.clone()], &p);
        Ok((coll, x))
    }

    /// The problem at another solution of a system built by [`Self::system`].
    pub fn at(&self, coll: &Collocation, x: &[f64]) -> Self {
        let p = coll.params_at(x);
        Self {
            params: Params::with_gamma(p[P_ALPHA], p[P_BETA], p[P_GAMMA]),
            seg_infinity: coll.segment(x, SEG_INFINITY),
            seg_finite: coll.segment(x, SEG_FINITE),
            eta: p[P_ETA],
            theta_b: p[P_THETA],
            t0: p[P_T0],
            t_b: p[P_TB],
            delta_0: p[P_DELTA0],
            ..self.clone()
        }
    }

    /// Glued end of `u_B` in original coordinates.
    pub fn glued_end(&self) -> Vec3 {
        glue(&v3(self.seg_infinity.end())).0
    }

    /// `|glue(u_B(1)) - u(0) - eta psi|`.
    pub fn lin_residual(&self) -> f64 {
        let g = self.glued_end();
        let u0 = self.seg_finite.start();
        (0..3).map(|i| (g[i] - u0[i] - self.eta * self.psi[i]).powi(2)).sum::<f64>().sqrt()
    }

    /// Largest residual of all boundary conditions.
    pub fn boundary_residual(&self) -> Result<f64> {
        let bc = LinBoundary { psi: self.psi, delta_b: self.delta_b, target: self.target.clone() };
        let ends = Ends {
            starts: vec![self.seg_infinity.start(), self.seg_finite.start()],
            ends: vec![self.seg_infinity.end(), self.seg_finite.end()],
        };
        let mut out = vec![0.0; 10];
        bc.residual(&ends, &self.param_vector(), &mut out)?;
        Ok(out.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
    }

    /// Solves the square problem with `eta` fixed and `theta_B`, `T0`, `T_B`
    /// and `param` free.
    pub fn solve_fixed_eta(&self, param: SystemParam, opts: &ContinuationOptions) -> Result<Self> {
        let (coll, x) = self.system(vec![P_THETA, P_T0, P_TB, param_index(param)])?;
        let rep = newton_solve(&coll, &x, &[], &opts.newton)?;
        Ok(self.at(&coll, &rep.x))
    }

    /// The connecting orbit in original coordinates: the glued image of
    /// `u_B` (from its first node with `w_B` above `min_w`) followed by `u`,
    /// each sample tagged with its segment and time along the orbit.
    pub fn concatenated_orbit(&self, min_w: f64) -> Vec<(usize, f64, Vec3)> {
        let mut out = Vec::new();
        let sb = &self.seg_infinity;
        for k in 0..sb.n_nodes() {
            let u = v3(sb.node(k));
            if u[2] > min_w {
                out.push((SEG_INFINITY, sb.node_time(k) * self.t_b, glue(&u).0));
            }
        }
        let sf = &self.seg_finite;
        for k in 0..sf.n_nodes() {
            out.push((SEG_FINITE, sf.node_time(k) * self.t0, v3(sf.node(k))));
        }
        out
    }

    /// Integrates the original field from `u(0)` over `T0` and returns the
    /// distance to `u(1)`.
    pub fn finite_segment_defect(&self) -> Result<f64> {
        let p = self.params;
        let opts = IvpOptions { tol: 1e-12, max_steps: 5_000_000, h_max: None };
        let res = integrate(move |_, u| original_rhs(u, &p), v3(self.seg_finite.start()), (0.0, self.t0), &[], &opts)?;
        let end = res.last().1;
        let u1 = self.seg_finite.end();
        Ok((0..3).map(|i| (end[i] - u1[i]).powi(2)).sum::<f64>().sqrt())
    }
}

/// Options of the gap-closing continuation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapOptions {
    pub free: SystemParam,
    /// The continuation stops when the free parameter leaves this range.
    pub range: (f64, f64),
    pub continuation: ContinuationOptions,
}

impl Default for GapOptions {
    fn default() -> Self {
        Self {
            free: SystemParam::Beta,
            range: (0.0, 10.0),
            continuation: ContinuationOptions { h0: 0.02, h_max: 0.5, max_points: 300, ..Default::default() },
        }
    }
}

/// Result of closing the Lin gap.
#[derive(Debug, Clone)]
pub struct GapClosure {
    pub params: Params,
    pub connecting: LinProblem,
    pub branch: ContinuationBranch,
}

/// Continues the Lin problem in `opts.free` with `eta` free, moving so that
/// `|eta|` decreases, until `eta` changes sign or the range is left.
pub fn gap_branch(problem: &LinProblem, opts: &GapOptions) -> Result<(ContinuationBranch, Collocation)> {
    let k = param_index(opts.free);
    let (mut coll, x) = problem.system(vec![P_THETA, P_T0, P_TB, P_ETA, k])?;
    let eta_col = coll.param_column(P_ETA).expect("eta is free");
    let monitors = [Monitor::unknown("eta", eta_col)];
    let (lo, hi) = opts.range;
    let stop = move |b: &ContinuationBranch| {
        let v = b.last().data[k];
        b.events_of(EventKind::Zero).next().is_some() || v < lo || v > hi
    };
    let sign = if problem.eta > 0.0 { -1.0 } else { 1.0 };
    let branch = continue_branch(&mut coll, &x, Direction::Unknown { index: eta_col, sign }, &opts.continuation, &monitors, &stop)?;
    Ok((branch, coll))
}

/// Closes the Lin gap: continues in the free system parameter until
/// `eta = 0`, then solves the square problem with `eta = 0` fixed.
pub fn close_gap(problem: &LinProblem, opts: &GapOptions) -> Result<GapClosure> {
    let (branch, coll) = gap_branch(problem, opts)?;
    let Some(ev) = branch.events_of(EventKind::Zero).next() else {
        return Err(Error::NoZeroInRange);
    };
    let mut at_zero = problem.at(&coll, &ev.x);
    at_zero.eta = 0.0;
    let connecting = at_zero.solve_fixed_eta(opts.free, &opts.continuation)?;
    Ok(GapClosure { params: connecting.params, connecting, branch })
}

/// Options of the two-parameter continuation of a connecting orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HetOptions {
    pub alpha_range: (f64, f64),
    pub beta_range: (f64, f64),
    /// Initial direction of `alpha`.
    pub alpha_sign: f64,
    pub continuation: ContinuationOptions,
}

impl Default for HetOptions {
    fn default() -> Self {
        Self {
            alpha_range: (4.5, 6.5),
            beta_range: (0.0, 5.0),
            alpha_sign: 1.0,
            continuation: ContinuationOptions { h0: 0.02, h_max: 0.1, max_points: 400, ..Default::default() },
        }
    }
}

/// Continues a connecting orbit (`eta = 0`) in `(alpha, beta)`, with folds
/// in `alpha` reported as events.
pub fn continue_het(connecting: &LinProblem, opts: &HetOptions) -> Result<ContinuationBranch> {
    if connecting.eta.abs() > 1e-8 {
        return Err(Error::InvalidInput(format!("not a connecting orbit: eta = {:e}", connecting.eta)));
    }
    let mut start = connecting.clone();
    start.eta = 0.0;
    let (mut coll, x) = start.system(vec![P_THETA, P_T0, P_TB, P_ALPHA, P_BETA])?;
    let a_col = coll.param_column(P_ALPHA).expect("alpha is free");
    let b_col = coll.param_column(P_BETA).expect("beta is free");
    let mut copts = opts.continuation;
    copts.fold_unknown = Some(a_col);
    let monitors = [Monitor::unknown("alpha", a_col), Monitor::unknown("beta", b_col)];
    let (a_lo, a_hi) = opts.alpha_range;
    let (b_lo, b_hi) = opts.beta_range;
    let stop = move |b: &ContinuationBranch| {
        let d = &b.last().data;
        d[P_ALPHA] < a_lo || d[P_ALPHA] > a_hi || d[P_BETA] < b_lo || d[P_BETA] > b_hi
    };
    continue_branch(&mut coll, &x, Direction::Unknown { index: a_col, sign: opts.alpha_sign }, &copts, &monitors, &stop)
}

/// Summary columns of a Lin branch for a named quantity.
pub fn branch_series(branch: &ContinuationBranch, name: &str) -> Option<Vec<f64>> {
    branch.series(name)
}

/// Options for connecting a saddle periodic orbit to infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicConnectOptions {
    pub delta_0: f64,
    pub crossing_index: usize,
    pub theta_b: f64,
    pub delta_b: f64,
    /// Range of `delta_0` explored while closing the gap.
    pub delta_range: (f64, f64),
    pub continuation: ContinuationOptions,
}

impl Default for PeriodicConnectOptions {
    fn default() -> Self {
        Self {
            delta_0: 0.01,
            crossing_index: 5,
            theta_b: 1.45,
            delta_b: DEFAULT_DELTA_B,
            delta_range: (-0.2, 0.2),
            continuation: ContinuationOptions { h0: 0.005, h_max: 0.2, max_points: 300, ..Default::default() },
        }
    }
}

/// Finds an orbit from the critical cylinder to the stable Floquet direction
/// `direction` of a periodic orbit through `base`: seeds a Lin problem,
/// continues in `delta_0` until `eta = 0` and solves for the connection with
/// `delta_0` free.
pub fn connect_periodic(
    params: &Params,
    base: Vec3,
    direction: Vec3,
    opts: &PeriodicConnectOptions,
) -> Result<(LinProblem, ContinuationBranch)> {
    let setup = LinSetup {
        params: *params,
        target: FiniteTarget::Periodic { base, direction },
        delta_0: opts.delta_0,
        delta_b: opts.delta_b,
        theta_b: opts.theta_b,
        crossing_index: opts.crossing_index,
        crossing_index_b: 0,
        ntst: DEFAULT_NTST,
        ntst_b: None,
        ncol: DEFAULT_NCOL,
    };
    let problem = seed_lin_problem(&setup)?;

    let (mut coll, x) = problem.system(vec![P_THETA, P_T0, P_TB, P_ETA, P_DELTA0])?;
    let eta_col = coll.param_column(P_ETA).expect("eta is free");
    let monitors = [Monitor::unknown("eta", eta_col)];
    let (lo, hi) = opts.delta_range;
    let stop = move |b: &ContinuationBranch| {
        let d = b.last().data[P_DELTA0];
        b.events_of(EventKind::Zero).next().is_some() || d < lo || d > hi
    };
    let sign = if problem.eta > 0.0 { -1.0 } else { 1.0 };
    let branch = continue_branch(&mut coll, &x, Direction::Unknown { index: eta_col, sign }, &opts.continuation, &monitors, &stop)?;
    let Some(ev) = branch.events_of(EventKind::Zero).next() else {
        return Err(Error::NoZeroInRange);
    };
    let mut at_zero = problem.at(&coll, &ev.x);
    at_zero.eta = 0.0;
    let (sq, y) = at_zero.system(vec![P_THETA, P_T0, P_TB, P_DELTA0])?;
    let rep = newton_solve(&sq, &y, &[], &opts.continuation.newton)?;
    Ok((at_zero.at(&sq, &rep.x), branch))
}

/// Residual of the discretized problem at its stored solution.
pub fn collocation_residual(problem: &LinProblem) -> Result<f64> {
    let (coll, x) = problem.system(vec![])?;
    let r = coll.residual(&x)?;
    Ok(r.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_points() {
        let p = Params::new(5.3, 2.0);
        let t = FiniteTarget::saddle(&p).unwrap();
        let a = t.point(1e-4, &p).unwrap();
        assert!(((a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt() - 1e-4).abs() < 1e-16);
        let per = FiniteTarget::Periodic { base: [0.0, 1.0, 2.0], direction: [1.0, 0.0, 0.0] };
        assert_eq!(per.point(0.5, &p).unwrap(), [0.5, 1.0, 2.0]);
    }

    #[test]
    fn psi_and_eta_from_gap() {
        // u(0) = (0, 1, 1) and a u_B end whose glued image is (0, 1.3, 1.4)
        let w = (1.0f64 / 1.3).powf(0.25);
        let seg_ub = OrbitSegment {
            chart: ChartId::BlownUp,
            time_scale: 1.0,
            tau: vec![0.0, 1.0],
            states: vec![vec![0.0, 1.4, w], vec![0.0, 1.4, w]],
            derivs: None,
        };
        let seg_u = OrbitSegment {
            chart: ChartId::Original,
            time_scale: 1.0,
            tau: vec![0.0, 1.0],
            states: vec![vec![0.0, 1.0, 1.0], vec![0.0, 1.0, 1.0]],
            derivs: None,
        };
        let mut setup = LinSetup::new(Params::new(5.3, 2.0)).unwrap();
        setup.ntst = 4;
        setup.ntst_b = Some(4);
        let lp = make_lin_problem(&seg_u, &seg_ub, &setup).unwrap();
        assert!((lp.eta - 0.5).abs() < 1e-12);
        assert!((lp.psi[1] - 0.6).abs() < 1e-12 && (lp.psi[2] - 0.8).abs() < 1e-12 && lp.psi[0] == 0.0);
        assert!(lp.lin_residual() < 1e-12);

        let mut off = seg_u.clone();
        off.states[0][0] = 1e-3;
        assert!(matches!(make_lin_problem(&off, &seg_ub, &setup), Err(Error::EndpointNotInSection(_))));
    }

    #[test]
    fn coincident_ends_use_the_y_axis() {
        let w = 1.0f64;
        let seg_ub = OrbitSegment {
            chart: ChartId::BlownUp,
            time_scale: 1.0,
            tau: vec![0.0, 1.0],
            states: vec![vec![0.0, 2.0, w], vec![0.0, 2.0, w]],
            derivs: None,
        };
        let seg_u = OrbitSegment {
            chart: ChartId::Original,
            time_scale: 1.0,
            tau: vec![0.0, 1.0],
            states: vec![vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0]],
            derivs: None,
        };
        let mut setup = LinSetup::new(Params::new(5.3, 2.0)).unwrap();
        setup.ntst = 4;
        setup.ntst_b = Some(4);
        let lp = make_lin_problem(&seg_u, &seg_ub, &setup).unwrap();
        assert_eq!(lp.eta, 0.0);
        assert_eq!(lp.psi, [0.0, 1.0, 0.0]);
    }

    #[test]
    fn finite_seed_hits_section() {
        let p = Params::new(5.3, 2.0);
        let seg = seed_finite_segment(&p, DEFAULT_DELTA_0, 3).unwrap();
        assert!(seg.start()[0].abs() < 1e-12);
        let e = seg.end();
        assert!(((e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt() - 1e-4).abs() < 1e-15);
        assert_eq!(seg.tau[0], 0.0);
        assert_eq!(*seg.tau.last().unwrap(), 1.0);
        assert!(seg.tau.windows(2).all(|w| w[1] >= w[0]));
    }
}
