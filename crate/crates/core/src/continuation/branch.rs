//! Arclength continuation with a secant predictor and a chord-length
//! corrector.

use serde::{Deserialize, Serialize};

use super::newton::{newton_solve, newton_with, LinearRow, NewtonOptions, NonlinearSystem, SideCondition};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationOptions {
    pub h0: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_points: usize,
    pub newton: NewtonOptions,
    /// Unknown whose tangent component is watched for folds.
    pub fold_unknown: Option<usize>,
    /// Successful steps in a row before the step grows.
    pub grow_after: usize,
    pub grow_factor: f64,
    /// Accuracy of located monitor zeros.
    pub zero_tol: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            h0: 0.01,
            h_min: 1e-8,
            h_max: 0.1,
            max_points: 500,
            newton: NewtonOptions::default(),
            fold_unknown: None,
            grow_after: 4,
            grow_factor: 1.3,
            zero_tol: 1e-9,
        }
    }
}

/// Initial direction of travel.
#[derive(Debug, Clone, PartialEq)]
pub enum Direction {
    /// Move so that this unknown increases (`sign > 0`) or decreases.
    Unknown { index: usize, sign: f64 },
    /// Move along (the projection of) this vector.
    Vector(Vec<f64>),
}

pub struct Monitor<'a> {
    pub name: String,
    pub func: Box<dyn Fn(&[f64]) -> f64 + Sync + 'a>,
}

impl<'a> Monitor<'a> {
    pub fn new(name: impl Into<String>, func: impl Fn(&[f64]) -> f64 + Sync + 'a) -> Self {
        Self { name: name.into(), func: Box::new(func) }
    }

    /// Monitors one unknown.
    pub fn unknown(name: impl Into<String>, index: usize) -> Self {
        Self::new(name, move |x| x[index])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EventKind {
    Zero,
    Fold,
    User,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchEvent {
    pub kind: EventKind,
    /// Monitor index for zeros.
    pub monitor: Option<usize>,
    /// The event lies between points `after` and `after + 1`.
    pub after: usize,
    pub arclength: f64,
    /// Full solution at the event.
    #[serde(skip)]
    pub x: Vec<f64>,
    pub data: Vec<f64>,
    pub monitors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    /// Summary of the solution (see [`NonlinearSystem::summary`]).
    pub data: Vec<f64>,
    pub arclength: f64,
    pub monitors: Vec<f64>,
    /// Step length that produced this point.
    pub step: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EndReason {
    Stopped,
    MaxPoints,
    StepUnderflow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationBranch {
    pub data_names: Vec<String>,
    pub monitor_names: Vec<String>,
    pub points: Vec<BranchPoint>,
    pub events: Vec<BranchEvent>,
    pub end: EndReason,
    /// Full solution at the last point.
    #[serde(skip)]
    pub final_x: Vec<f64>,
}

impl ContinuationBranch {
    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &BranchEvent> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn last(&self) -> &BranchPoint {
        self.points.last().expect("branch has its starting point")
    }

    /// Column of a named summary entry.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.data_names.iter().position(|n| n == name)
    }

    /// Values of a named summary entry along the branch.
    pub fn series(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.column(name)?;
        Some(self.points.iter().map(|p| p.data[c]).collect())
    }
}

fn wdot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, a), b)| w * a * b).sum()
}

fn normalize(w: &[f64], v: &mut [f64]) {
    let n = wdot(w, v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

/// Solves `J t = 0` with `<c, t> = 1` and normalizes `t`.
fn tangent<S: NonlinearSystem + ?Sized>(sys: &S, x: &[f64], c: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    let zero = vec![0.0; sys.n_equations()];
    let row = LinearRow { coeffs: c.to_vec(), value: 0.0 };
    let mut t = sys.solve_linearized(x, &zero, &[row], &[1.0]).map_err(|e| match e {
        Error::Singular { .. } => Error::SingularJacobian,
        e => e,
    })?;
    normalize(w, &mut t);
    Ok(t)
}

fn monitor_values(monitors: &[Monitor<'_>], x: &[f64]) -> Vec<f64> {
    monitors.iter().map(|m| (m.func)(x)).collect()
}

/// `(|x - center|_w^2 - sigma^2) / (2 sigma)`: the next point lies at
/// weighted chord distance `sigma`. Chords make the step sequence the same
/// in both directions of travel.
struct Chord<'a> {
    center: &'a [f64],
    w: &'a [f64],
    sigma: f64,
}

impl SideCondition for Chord<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        let d2: f64 = x.iter().zip(self.center).zip(self.w).map(|((a, c), w)| w * (a - c) * (a - c)).sum();
        (d2 - self.sigma * self.sigma) / (2.0 * self.sigma)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.center).zip(self.w).map(|((a, c), w)| w * (a - c) / self.sigma).collect()
    }
}

/// Point at chord distance `sigma` from `x0`, starting from `guess`.
fn corrector<S: NonlinearSystem + ?Sized>(
    sys: &S,
    x0: &[f64],
    sigma: f64,
    w: &[f64],
    guess: &[f64],
    opts: &NewtonOptions,
) -> Result<(Vec<f64>, usize)> {
    let chord = Chord { center: x0, w, sigma };
    let rep = newton_with(sys, guess, &[&chord], opts)?;
    Ok((rep.x, rep.iterations))
}

/// Follows the solution curve of an underdetermined system (one more unknown
/// than equations) from `start`.
pub fn continue_branch<S: NonlinearSystem + ?Sized>(
    sys: &mut S,
    start: &[f64],
    direction: Direction,
    opts: &ContinuationOptions,
    monitors: &[Monitor<'_>],
    stop: &dyn Fn(&ContinuationBranch) -> bool,
) -> Result<ContinuationBranch> {
    let n = sys.n_unknowns();
    if sys.n_equations() + 1 != n || start.len() != n {
        return Err(Error::IllPosed { conditions: sys.n_equations() + 1, unknowns: n });
    }
    let w = sys.weights();
    let (hint, sign) = match &direction {
        Direction::Unknown { index, sign } => {
            let mut e = vec![0.0; n];
            e[*index] = 1.0;
            (e, sign.signum())
        }
        Direction::Vector(v) => (v.clone(), 1.0),
    };
    // correct the starting point with the hint direction pinned
    let pin = LinearRow { coeffs: hint.clone(), value: hint.iter().zip(start).map(|(a, b)| a * b).sum() };
    let first = newton_solve(&*sys, start, &[pin], &opts.newton)?;
    let mut x = first.x;
    sys.accept(&x);
    let mut t = tangent(&*sys, &x, &hint, &w)?;
    if sign < 0.0 {
        t.iter_mut().for_each(|v| *v = -*v);
    }
    let mut fold_tangent = t.clone();

    let mut branch = ContinuationBranch {
        data_names: sys.summary_names(),
        monitor_names: monitors.iter().map(|m| m.name.clone()).collect(),
        points: vec![BranchPoint {
            monitors: monitor_values(monitors, &x),
            data: sys.summary(&x),
            arclength: 0.0,
            step: 0.0,
            iterations: first.iterations,
        }],
        events: Vec::new(),
        end: EndReason::MaxPoints,
        final_x: x.clone(),
    };
    if stop(&branch) {
        branch.end = EndReason::Stopped;
        return Ok(branch);
    }

    let mut h = opts.h0;
    let mut streak = 0;
    while branch.points.len() < opts.max_points {
        let guess: Vec<f64> = x.iter().zip(&t).map(|(a, b)| a + h * b).collect();
        let (xn, iters) = match corrector(&*sys, &x, h, &w, &guess, &opts.newton) {
            Ok(r) => r,
            Err(Error::NoConvergence { .. }) | Err(Error::SingularJacobian) | Err(Error::ComplexEigenvalues) => {
                h *= 0.5;
                streak = 0;
                if h < opts.h_min {
                    branch.end = EndReason::StepUnderflow;
                    branch.final_x = x;
                    return Ok(branch);
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut secant: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        normalize(&w, &mut secant);
        let tn = match opts.fold_unknown {
            Some(_) => {
                let c: Vec<f64> = secant.iter().zip(&w).map(|(a, b)| a * b).collect();
                match tangent(&*sys, &xn, &c, &w) {
                    Ok(tn) => Some(tn),
                    Err(Error::SingularJacobian) => {
                        h *= 0.5;
                        streak = 0;
                        if h < opts.h_min {
                            branch.end = EndReason::StepUnderflow;
                            branch.final_x = x;
                            return Ok(branch);
                        }
                        continue;
                    }
                    Err(e) => return Err(e),
                }
            }
            None => None,
        };
        let prev = branch.points.last().unwrap().clone();
        let mon = monitor_values(monitors, &xn);
        let k = branch.points.len() - 1;
        let s_new = prev.arclength + h;

        for (mi, (g0, g1)) in prev.monitors.iter().zip(&mon).enumerate() {
            if *g0 != 0.0 && g0.signum() != g1.signum() {
                if let Some((xe, se)) = locate_zero(&*sys, &x, &t, &w, h, *g0, *g1, &monitors[mi], opts)? {
                    branch.events.push(BranchEvent {
                        kind: EventKind::Zero,
                        monitor: Some(mi),
                        after: k,
                        arclength: prev.arclength + se,
                        monitors: monitor_values(monitors, &xe),
                        data: sys.summary(&xe),
                        x: xe,
                    });
                }
            }
        }

        if let (Some(fi), Some(tn)) = (opts.fold_unknown, tn) {
            if fold_tangent[fi] != 0.0 && tn[fi].signum() != fold_tangent[fi].signum() {
                branch.events.push(BranchEvent {
                    kind: EventKind::Fold,
                    monitor: None,
                    after: k,
                    arclength: prev.arclength + h * fold_tangent[fi].abs() / (fold_tangent[fi].abs() + tn[fi].abs()),
                    data: sys.summary(&fold_estimate(&x, &xn, fold_tangent[fi], tn[fi])),
                    x: fold_estimate(&x, &xn, fold_tangent[fi], tn[fi]),
                    monitors: mon.clone(),
                });
            }
            fold_tangent = tn;
        }

        x = xn;
        t = secant;
        sys.accept(&x);
        branch.points.push(BranchPoint { data: sys.summary(&x), arclength: s_new, monitors: mon, step: h, iterations: iters });
        branch.final_x.clone_from(&x);
        if stop(&branch) {
            branch.end = EndReason::Stopped;
            return Ok(branch);
        }
        streak += 1;
        if streak >= opts.grow_after {
            h = (h * opts.grow_factor).min(opts.h_max);
            streak = 0;
        }
    }
    Ok(branch)
}

/// Linear estimate of the fold point between two points from the tangent
/// components on either side.
fn fold_estimate(x0: &[f64], x1: &[f64], t0: f64, t1: f64) -> Vec<f64> {
    let s = t0.abs() / (t0.abs() + t1.abs());
    x0.iter().zip(x1).map(|(a, b)| a + s * (b - a)).collect()
}

/// Illinois iteration on the arclength between two bracketing points.
#[allow(clippy::too_many_arguments)]
fn locate_zero<S: NonlinearSystem + ?Sized>(
    sys: &S,
    x0: &[f64],
    dir: &[f64],
    w: &[f64],
    h: f64,
    g0: f64,
    g1: f64,
    monitor: &Monitor<'_>,
    opts: &ContinuationOptions,
) -> Result<Option<(Vec<f64>, f64)>> {
    let (mut a, mut ga) = (0.0, g0);
    let (mut b, mut gb) = (h, g1);
    let mut side = 0i8;
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    for _ in 0..60 {
        let s = b - gb * (b - a) / (gb - ga);
        let s = if s.is_finite() && s > a.min(b) && s < a.max(b) { s } else { 0.5 * (a + b) };
        let guess: Vec<f64> = x0.iter().zip(dir).map(|(x, d)| x + s * d).collect();
        let (xs, _) = match corrector(sys, x0, s, w, &guess, &opts.newton) {
            Ok(r) => r,
            Err(Error::NoConvergence { .. }) | Err(Error::SingularJacobian) => return Ok(None),
            Err(e) => return Err(e),
        };
        let gs = (monitor.func)(&xs);
        if best.as_ref().map_or(true, |bst| gs.abs() < bst.2.abs()) {
            best = Some((xs.clone(), s, gs));
        }
        if gs.abs() <= opts.zero_tol {
            return Ok(Some((xs, s)));
        }
        if gs.signum() == gb.signum() {
            b = s;
            gb = gs;
            if side == 1 {
                ga *= 0.5;
            }
            side = 1;
        } else {
            a = s;
            ga = gs;
            if side == -1 {
                gb *= 0.5;
            }
            side = -1;
        }
        if (b - a).abs() < 1e-15 * h.abs().max(1.0) {
            break;
        }
    }
    Ok(best.filter(|b| b.2.abs() <= opts.zero_tol).map(|b| (b.0, b.1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuation::newton::FnSystem;

    fn circle() -> FnSystem<impl Fn(&[f64]) -> Vec<f64> + Sync> {
        FnSystem::new(2, 1, |x: &[f64]| vec![x[0] * x[0] + x[1] * x[1] - 1.0])
    }

    #[test]
    fn circle_has_two_folds() {
        let mut sys = circle();
        let opts = ContinuationOptions { h0: 0.05, h_max: 0.2, max_points: 2000, fold_unknown: Some(0), ..Default::default() };
        let full = 2.0 * std::f64::consts::PI;
        let br = continue_branch(
            &mut sys,
            &[1.0, 0.0],
            Direction::Unknown { index: 1, sign: 1.0 },
            &opts,
            &[],
            &|b: &ContinuationBranch| b.last().arclength > full + 0.3,
        )
        .unwrap();
        let folds: Vec<f64> = br.events_of(EventKind::Fold).map(|e| e.x[0]).collect();
        assert_eq!(folds.len(), 2, "{folds:?}");
        assert!((folds[0] + 1.0).abs() < 0.02 && (folds[1] - 1.0).abs() < 0.02);
        assert!(br.points.iter().skip(5).any(|p| (p.data[0] - 1.0).abs() < 0.05 && p.data[1].abs() < 0.3));
        for p in &br.points {
            assert!((p.data[0].hypot(p.data[1]) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_of_monitor_is_located() {
        let mut sys = circle();
        let opts = ContinuationOptions { h0: 0.07, ..Default::default() };
        let mons = [Monitor::new("x - 0.3", |x: &[f64]| x[0] - 0.3)];
        let br = continue_branch(
            &mut sys,
            &[1.0, 0.0],
            Direction::Unknown { index: 1, sign: 1.0 },
            &opts,
            &mons,
            &|b: &ContinuationBranch| b.events.iter().any(|e| e.kind == EventKind::Zero),
        )
        .unwrap();
        let z = br.events_of(EventKind::Zero).next().unwrap();
        assert!((z.x[0] - 0.3).abs() <= 1e-9);
        assert!((z.x[1] - 0.91f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn reversal_retraces() {
        let opts = ContinuationOptions { h0: 0.05, grow_after: 1000, ..Default::default() };
        let stop = |b: &ContinuationBranch| b.points.len() >= 12;
        let mut sys = circle();
        let fwd = continue_branch(&mut sys, &[1.0, 0.0], Direction::Unknown { index: 1, sign: 1.0 }, &opts, &[], &stop).unwrap();
        let k = 11;
        let back = continue_branch(
            &mut sys,
            &fwd.points[k].data,
            Direction::Unknown { index: 1, sign: -1.0 },
            &opts,
            &[],
            &|b: &ContinuationBranch| b.points.len() > k,
        )
        .unwrap();
        for j in 0..=k {
            let (a, b) = (&fwd.points[k - j].data, &back.points[j].data);
            assert!((a[0] - b[0]).abs() < 1e-6 && (a[1] - b[1]).abs() < 1e-6, "point {j}");
        }
    }
}
