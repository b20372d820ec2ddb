//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits nonzero if any fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use linfinity::charts::{blowdown, blownup_to_original, from_compactified, original_to_blownup, to_compactified, to_compactified_derivative};
use linfinity::continuation::{
    newton_solve, BoundaryConditions, BvpSpec, Collocation, Dynamics, Ends, EventKind, NewtonOptions, OrbitSegment, Segment,
};
use linfinity::eigenstructure::{case_c_condition, saddle_at_origin};
use linfinity::fields::{blownup_ellipse_level, blownup_rhs, compactified_rhs, original_jacobian, original_rhs, Vec3};
use linfinity::infinity::{critical_cylinder, flux_numeric, separatrix_bisect, separatrix_probe, ProbeOutcome, R_STAR};
use linfinity::lins::{close_gap, connect_periodic, continue_het, seed_lin_problem, GapOptions, HetOptions, LinSetup};
use linfinity::numerics::eig::eig3;
use linfinity::numerics::ode::{integrate, IvpOptions};
use linfinity::output::read_loop_csv;
use linfinity::periodic::{correct_periodic_default, floquet};
use linfinity::{ChartPoint, Params, Result};

const C_IN: (f64, f64) = (5.3573, 2.19173);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d) / norm(b).max(1e-300)
}

fn mat_vec(m: &[[f64; 3]; 3], v: &Vec3) -> Vec3 {
    std::array::from_fn(|i| (0..3).map(|j| m[i][j] * v[j]).sum())
}

fn critical_radius() -> Result<Outcome> {
    let p = Params::new(5.3, 2.0);
    let cyl = critical_cylinder(&p, 0.1)?;
    let root_gap = (cyl.radius - 2.0 / 3.0 * 3f64.sqrt()).abs();
    let flux = flux_numeric(R_STAR, 0.1, &p).abs();
    outcome(
        root_gap <= 1e-10 && flux <= 1e-10,
        format!("bisection root {:.16}, |root - r*| = {root_gap:.1e}, |flux(r*, 0.1)| = {flux:.1e}", cyl.radius),
    )
}

fn flip_point_eigenvalues() -> Result<Outcome> {
    let p = Params::with_gamma(C_IN.0, C_IN.1, 0.5);
    let e = eig3(&original_jacobian(&[0.0; 3], &p))?;
    let want = [-3.7444, 0.2108, 2.5335];
    let worst = e.values.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let margin = case_c_condition(&saddle_at_origin(&p)?);
    outcome(
        worst <= 1e-3 && margin > 0.0,
        format!("eigenvalues {:.5?}, max deviation {worst:.1e}, case-C margin {margin:.4}", e.values),
    )
}

fn separatrix() -> Result<Outcome> {
    let p = Params::new(5.3, 2.0);
    let inner = separatrix_probe(&p, 1.0, 0.05)?;
    let outer = separatrix_probe(&p, 1.3, 0.05)?;
    let x_b = separatrix_bisect(&p, 0.02, 1.0, 1.3, 1e-4)?;
    let rel = (x_b - R_STAR).abs() / R_STAR;
    outcome(
        inner == ProbeOutcome::Converges && outer == ProbeOutcome::Diverges && rel <= 0.05,
        format!("x0=1.0 {inner:?}, x0=1.3 {outer:?}, critical x_B(0.02) = {x_b:.5} ({:.3}% from r*)", 100.0 * rel),
    )
}

fn gap_closing() -> Result<(Outcome, linfinity::lins::LinProblem)> {
    let setup = LinSetup::new(Params::new(5.3, 1.8))?;
    let closed = close_gap(&seed_lin_problem(&setup)?, &GapOptions::default())?;
    let beta = closed.params.beta;
    let gap = closed.connecting.lin_residual();
    let o = Outcome {
        pass: (beta - 2.08874).abs() <= 5e-3 && gap <= 1e-8,
        detail: format!("eta = 0 at beta = {beta:.8} (alpha {}), remaining gap {gap:.1e}", closed.params.alpha),
    };
    Ok((o, closed.connecting))
}

fn dist_to_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let s = if len2 > 0.0 { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    ((a.0 + s * dx - p.0).powi(2) + (a.1 + s * dy - p.1).powi(2)).sqrt()
}

fn het_branch(connecting: &linfinity::lins::LinProblem) -> Result<Outcome> {
    let mut min_dist = f64::INFINITY;
    let mut folds = Vec::new();
    let mut points = 0;
    for sign in [1.0, -1.0] {
        let opts = HetOptions { alpha_sign: sign, ..Default::default() };
        let b = continue_het(connecting, &opts)?;
        let a = b.series("alpha").expect("alpha column");
        let be = b.series("beta").expect("beta column");
        points += a.len();
        for k in 1..a.len() {
            min_dist = min_dist.min(dist_to_segment(C_IN, (a[k - 1], be[k - 1]), (a[k], be[k])));
        }
        let ai = b.data_names.iter().position(|n| n == "alpha").unwrap();
        folds.extend(b.events_of(EventKind::Fold).map(|e| e.data[ai]).filter(|a| (4.5..=6.5).contains(a)));
    }
    folds.sort_by(f64::total_cmp);
    outcome(
        min_dist <= 0.05 && folds.len() == 1,
        format!("{points} points, closest approach to C_in {min_dist:.4}, {} alpha-folds in [4.5, 6.5] at {folds:.4?}", folds.len()),
    )
}

fn periodic_connection() -> Result<Outcome> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/gamma_o_loop.csv");
    let samples = read_loop_csv(std::fs::File::open(path).expect("fixture present"))?;
    let p = Params::new(6.2, 1.6);
    let orbit = correct_periodic_default(&samples, &p)?;
    let f = floquet(&orbit)?;
    let trivial = (f.multipliers[f.trivial] - 1.0).norm();
    let others: Vec<_> = (0..3).filter(|&k| k != f.trivial).map(|k| f.multipliers[k]).collect();
    let real_positive = others.iter().all(|m| m.im.abs() <= 1e-9 * m.norm() && m.re > 0.0);
    let split = others.iter().filter(|m| m.norm() < 1.0).count() == 1 && others.iter().filter(|m| m.norm() > 1.0).count() == 1;
    let mut dir = f.stable_vector;
    if dir[0] < 0.0 {
        dir = dir.map(|v| -v);
    }
    let (lp, _) = connect_periodic(&p, orbit.base_point(), dir, &Default::default())?;
    let gap = lp.lin_residual();
    let same = lp.params == p;
    outcome(
        trivial <= 1e-6 && real_positive && split && lp.eta.abs() <= 1e-9 && gap <= 1e-9 && same,
        format!(
            "T = {:.6}, multipliers {:.6e} {:.10} {:.6e}, |mu_triv - 1| = {trivial:.1e}, eta = {:.1e}, gap {gap:.1e}, params unchanged {same}",
            orbit.period, f.multipliers[0].re, f.multipliers[1].re, f.multipliers[2].re, lp.eta
        ),
    )
}

struct Exponential;

impl Dynamics for Exponential {
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
        out[0] = u[0];
        k == 1
    }
}

struct UnitStart;

impl BoundaryConditions for UnitStart {
    fn count(&self) -> usize {
        1
    }
    fn residual(&self, e: &Ends<'_>, _p: &[f64], out: &mut [f64]) -> Result<()> {
        out[0] = e.starts[0][0] - 1.0;
        Ok(())
    }
}

/// Error of `u(1)` for `u' = 2u, u(0) = 1` against `e^2`.
fn exponential_error(ntst: usize, ncol: usize) -> Result<f64> {
    let spec = BvpSpec {
        param_names: vec!["T".into(), "lambda".into()],
        segments: vec![Segment { name: "u".into(), dynamics: Arc::new(Exponential), time_scale: 0, chart: None }],
        boundary: vec![Arc::new(UnitStart)],
        integrals: vec![],
        free: vec![],
    };
    let guess = OrbitSegment {
        chart: linfinity::ChartId::Original,
        time_scale: 1.0,
        tau: vec![0.0, 1.0],
        states: vec![vec![1.0], vec![1.0]],
        derivs: None,
    };
    let (c, x0) = Collocation::discretize(spec, &[guess], &[ntst], ncol, vec![1.0, 2.0])?;
    let sol = newton_solve(&c, &x0, &[], &NewtonOptions::default())?;
    Ok((c.segment(&sol.x, 0).end()[0] - 2f64.exp()).abs())
}

fn structural() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let p = Params::new(5.3, 2.0);
    let (mut trip, mut conj_c, mut conj_b) = (0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..1000 {
        let u: Vec3 = [rng.gen_range(-10.0..10.0), rng.gen_range(0.05..200.0), rng.gen_range(-10.0..10.0)];
        let b = original_to_blownup(&ChartPoint::original(u))?;
        trip = trip.max(rel_err(&blownup_to_original(&b)?.coords, &u));
        let c = to_compactified(&ChartPoint::original(u))?;
        trip = trip.max(rel_err(&to_compactified(&from_compactified(&c)?)?.coords, &c.coords));

        let push = mat_vec(&to_compactified_derivative(&u)?, &original_rhs(&u, &p));
        let w2 = c.coords[2] * c.coords[2];
        conj_c = conj_c.max(rel_err(&push.map(|v| w2 * v), &compactified_rhs(&c.coords, &p)));

        let ub: Vec3 = [rng.gen_range(-3.0..3.0), rng.gen_range(-12.0..2.0), rng.gen_range(0.01..1.0)];
        let cb = blowdown(&ChartPoint::blown_up(ub))?.coords;
        let g = compactified_rhs(&cb, &p);
        let w = ub[2];
        let pushed = [(g[0] - ub[0] * g[2]) / w, (g[1] - ub[1] * g[2]) / w, g[2]];
        conj_b = conj_b.max(rel_err(&pushed, &blownup_rhs(&ub, &p)));
    }

    let start: Vec3 = [0.4, -p.alpha + 1.5, 0.0];
    let level = blownup_ellipse_level(&start, p.alpha);
    let run = integrate(move |_, u| blownup_rhs(u, &p), start, (0.0, 100.0), &[], &IvpOptions::with_tol(1e-12))?;
    let drift = run.samples.iter().map(|(_, u)| (blownup_ellipse_level(u, p.alpha) - level).abs() / level).fold(0.0, f64::max);

    let ncol = 4;
    let (e1, e2) = (exponential_error(4, ncol)?, exponential_error(8, ncol)?);
    let order = (e1 / e2).log2();

    let loop_path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/gamma_o_loop.csv");
    let samples = read_loop_csv(std::fs::File::open(loop_path).expect("fixture present"))?;
    let liouville = floquet(&correct_periodic_default(&samples, &Params::new(6.2, 1.6))?)?.liouville_defect;

    outcome(
        trip <= 1e-12 && conj_c <= 1e-8 && conj_b <= 1e-8 && drift <= 1e-8 && order >= 2.0 * ncol as f64 && liouville <= 1e-6,
        format!(
            "round trip {trip:.1e}, conjugacy {conj_c:.1e} / {conj_b:.1e}, ellipse drift {drift:.1e}, order {order:.2} (NCOL {ncol}), Liouville {liouville:.1e}"
        ),
    )
}

fn report(n: usize, name: &str, t: Instant, r: Result<Outcome>) -> bool {
    let secs = t.elapsed().as_secs_f64();
    match r {
        Ok(o) => {
            println!("criterion {n} {}: {name}: {} [{secs:.1} s]", if o.pass { "PASS" } else { "FAIL" }, o.detail);
            o.pass
        }
        Err(e) => {
            println!("criterion {n} FAIL: {name}: error {e} [{secs:.1} s]");
            false
        }
    }
}

fn main() -> ExitCode {
    let mut ok = true;
    let t = Instant::now();
    ok &= report(1, "critical radius", t, critical_radius());
    let t = Instant::now();
    ok &= report(2, "flip-point eigenvalues", t, flip_point_eigenvalues());
    let t = Instant::now();
    ok &= report(3, "separatrix probes", t, separatrix());
    let t = Instant::now();
    let connecting = match gap_closing() {
        Ok((o, c)) => {
            ok &= report(4, "gap closing", t, Ok(o));
            Some(c)
        }
        Err(e) => {
            ok &= report(4, "gap closing", t, Err(e));
            None
        }
    };
    let t = Instant::now();
    ok &= match connecting {
        Some(c) => report(5, "het branch", t, het_branch(&c)),
        None => report(5, "het branch", t, outcome(false, "no connecting orbit to start from".into())),
    };
    let t = Instant::now();
    ok &= report(6, "periodic connection", t, periodic_connection());
    let t = Instant::now();
    ok &= report(7, "structural invariants", t, structural());
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
