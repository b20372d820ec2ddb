//! Adaptive Dormand-Prince 5(4) integration with event location.

use crate::error::{Error, Result};

/// A scalar event function on `(t, state)`.
pub struct Event<'a, const N: usize> {
    pub func: Box<dyn Fn(f64, &[f64; N]) -> f64 + 'a>,
    /// `0` records every sign change; `+1` only upward and `-1` only downward
    /// crossings, both measured along the direction of integration.
    pub direction: i8,
    /// Stop integrating at the `k`-th recorded occurrence.
    pub terminal_after: Option<usize>,
}

impl<'a, const N: usize> Event<'a, N> {
    pub fn new(func: impl Fn(f64, &[f64; N]) -> f64 + 'a) -> Self {
        Self { func: Box::new(func), direction: 0, terminal_after: None }
    }

    pub fn direction(mut self, d: i8) -> Self {
        self.direction = d;
        self
    }

    pub fn terminal(mut self) -> Self {
        self.terminal_after = Some(1);
        self
    }

    pub fn terminal_after(mut self, k: usize) -> Self {
        self.terminal_after = Some(k);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IvpOptions {
    /// Local error tolerance, used both relative and absolute.
    pub tol: f64,
    pub max_steps: usize,
    pub h_max: Option<f64>,
}

impl Default for IvpOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_steps: 2_000_000, h_max: None }
    }
}

impl IvpOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord<const N: usize> {
    pub t: f64,
    pub state: [f64; N],
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IvpStatus {
    Completed,
    /// Stopped by the terminal event with this index.
    Terminated(usize),
}

#[derive(Debug, Clone)]
pub struct IvpResult<const N: usize> {
    pub samples: Vec<(f64, [f64; N])>,
    /// Field values at the samples, for Hermite interpolation.
    pub derivatives: Vec<[f64; N]>,
    pub events: Vec<EventRecord<N>>,
    pub status: IvpStatus,
}

impl<const N: usize> IvpResult<N> {
    pub fn last(&self) -> (f64, [f64; N]) {
        *self.samples.last().unwrap()
    }

    pub fn events_of(&self, index: usize) -> impl Iterator<Item = &EventRecord<N>> {
        self.events.iter().filter(move |e| e.index == index)
    }

    /// Cubic Hermite interpolation at time `t` inside the sampled range.
    pub fn interpolate(&self, t: f64) -> [f64; N] {
        let ts: Vec<f64> = self.samples.iter().map(|s| s.0).collect();
        let forward = ts.last().unwrap() >= &ts[0];
        let k = if forward {
            ts.partition_point(|&s| s <= t)
        } else {
            ts.partition_point(|&s| s >= t)
        }
        .clamp(1, ts.len() - 1);
        let (t0, y0) = self.samples[k - 1];
        let (t1, y1) = self.samples[k];
        hermite(t0, &y0, &self.derivatives[k - 1], t1, &y1, &self.derivatives[k], t)
    }
}

pub(crate) fn hermite<const N: usize>(
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    t1: f64,
    y1: &[f64; N],
    f1: &[f64; N],
    t: f64,
) -> [f64; N] {
    let h = t1 - t0;
    if h == 0.0 {
        return *y0;
    }
    let s = (t - t0) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    std::array::from_fn(|i| h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i])
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// One Dormand-Prince step; returns the 5th-order solution, the error
/// estimate and the field at the new point.
fn dp_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], f0: &[f64; N], h: f64) -> ([f64; N], [f64; N], [f64; N])
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut k = [[0.0; N]; 7];
    k[0] = *f0;
    for s in 1..7 {
        let ys: [f64; N] = std::array::from_fn(|i| y[i] + h * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>());
        k[s] = f(t + C[s] * h, &ys);
    }
    let y5: [f64; N] = std::array::from_fn(|i| y[i] + h * (0..7).map(|j| B5[j] * k[j][i]).sum::<f64>());
    let err: [f64; N] = std::array::from_fn(|i| h * (0..7).map(|j| (B5[j] - B4[j]) * k[j][i]).sum::<f64>());
    (y5, err, k[6])
}

fn crossed(g0: f64, g1: f64, direction: i8) -> bool {
    let up = g0 < 0.0 && g1 >= 0.0;
    let down = g0 > 0.0 && g1 <= 0.0;
    match direction {
        1 => up,
        -1 => down,
        _ => up || down,
    }
}

/// Integrates `y' = f(t, y)` over `t_span` (which may run backward).
pub fn integrate<const N: usize, F>(
    f: F,
    y0: [f64; N],
    t_span: (f64, f64),
    events: &[Event<'_, N>],
    opts: &IvpOptions,
) -> Result<IvpResult<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let (t_start, t_end) = t_span;
    let span = t_end - t_start;
    let dir = if span >= 0.0 { 1.0 } else { -1.0 };
    let tol = opts.tol;
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let h_min = 1e-14 * span.abs().max(f64::MIN_POSITIVE);
    let h_max = opts.h_max.unwrap_or(span.abs()).max(h_min);

    let mut t = t_start;
    let mut y = y0;
    let mut fy = f(t, &y);
    let mut samples = vec![(t, y)];
    let mut derivatives = vec![fy];
    let mut records = Vec::new();
    let mut counts = vec![0usize; events.len()];
    let mut gvals: Vec<f64> = events.iter().map(|e| (e.func)(t, &y)).collect();

    if span == 0.0 {
        return Ok(IvpResult { samples, derivatives, events: records, status: IvpStatus::Completed });
    }

    let ynorm = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let fnorm = fy.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut h = if fnorm > 0.0 { 0.01 * (ynorm.max(tol) / fnorm) } else { 1e-3 };
    h = h.clamp(h_min * 10.0, h_max).min(span.abs()) * dir;

    let mut steps = 0usize;
    loop {
        if steps >= opts.max_steps {
            return Err(Error::MaxSteps(opts.max_steps));
        }
        steps += 1;
        let remaining = t_end - t;
        if h.abs() > remaining.abs() {
            h = remaining;
        }
        let (ynew, err, fnew) = dp_step(&f, t, &y, &fy, h);
        let mut enorm = 0.0_f64;
        for i in 0..N {
            let sc = tol * (1.0 + y[i].abs().max(ynew[i].abs()));
            enorm = enorm.max(err[i].abs() / sc);
        }
        if !enorm.is_finite() || ynew.iter().any(|v| !v.is_finite()) {
            h *= 0.25;
            if h.abs() < h_min {
                return Err(Error::StepUnderflow { t });
            }
            continue;
        }
        if enorm > 1.0 {
            h *= (0.9 * enorm.powf(-0.2)).max(0.2);
            if h.abs() < h_min {
                return Err(Error::StepUnderflow { t });
            }
            continue;
        }

        let tnew = t + h;
        // events inside (t, tnew]
        let mut found: Vec<(f64, [f64; N], usize)> = Vec::new();
        let gnew: Vec<f64> = events.iter().map(|e| (e.func)(tnew, &ynew)).collect();
        for (k, ev) in events.iter().enumerate() {
            if crossed(gvals[k], gnew[k], ev.direction) {
                let (te, ye) = locate(&f, &ev.func, t, &y, &fy, tnew, &ynew, &fnew, gvals[k], gnew[k]);
                found.push((te, ye, k));
            }
        }
        found.sort_by(|a, b| ((a.0 - t) * dir).partial_cmp(&((b.0 - t) * dir)).unwrap());
        let mut stop = None;
        for (te, ye, k) in found {
            counts[k] += 1;
            records.push(EventRecord { t: te, state: ye, index: k });
            if let Some(limit) = events[k].terminal_after {
                if counts[k] >= limit {
                    stop = Some((te, ye, k));
                    break;
                }
            }
        }
        if let Some((te, ye, k)) = stop {
            if te != t {
                let fe = f(te, &ye);
                samples.push((te, ye));
                derivatives.push(fe);
            }
            return Ok(IvpResult { samples, derivatives, events: records, status: IvpStatus::Terminated(k) });
        }

        t = tnew;
        y = ynew;
        fy = fnew;
        gvals = gnew;
        samples.push((t, y));
        derivatives.push(fy);
        if (t_end - t) * dir <= 0.0 {
            return Ok(IvpResult { samples, derivatives, events: records, status: IvpStatus::Completed });
        }
        let factor = if enorm == 0.0 { 5.0 } else { (0.9 * enorm.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * factor).abs().min(h_max) * dir;
        if h.abs() < h_min {
            return Err(Error::StepUnderflow { t });
        }
    }
}

/// Finds the event time between two accepted points: a guess from the Hermite
/// interpolant, then Illinois iterations on exact sub-steps from `t0`.
#[allow(clippy::too_many_arguments)]
fn locate<const N: usize, F>(
    f: &F,
    g: &dyn Fn(f64, &[f64; N]) -> f64,
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    t1: f64,
    y1: &[f64; N],
    f1: &[f64; N],
    g0: f64,
    g1: f64,
) -> (f64, [f64; N])
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let exact = |t: f64| -> [f64; N] {
        if t == t0 {
            *y0
        } else if t == t1 {
            *y1
        } else {
            dp_step(f, t0, y0, f0, t - t0).0
        }
    };
    // bracket in terms of s in [0, 1]
    let (mut a, mut ga, mut b, mut gb) = (0.0_f64, g0, 1.0_f64, g1);
    // a few Hermite-based regula falsi steps narrow the bracket cheaply
    for _ in 0..8 {
        let s = if gb != ga { a - ga * (b - a) / (gb - ga) } else { 0.5 * (a + b) };
        let s = s.clamp(a + 1e-3 * (b - a), b - 1e-3 * (b - a));
        let ts = t0 + s * (t1 - t0);
        let gs = g(ts, &hermite(t0, y0, f0, t1, y1, f1, ts));
        if gs == 0.0 {
            a = s;
            b = s;
            break;
        }
        if (gs < 0.0) == (ga < 0.0) {
            a = s;
            ga = gs;
        } else {
            b = s;
            gb = gs;
        }
    }
    // re-evaluate the bracket ends exactly
    let (mut a, mut b) = ((a - 1e-6).max(0.0), (b + 1e-6).min(1.0));
    let mut ga = g(t0 + a * (t1 - t0), &exact(t0 + a * (t1 - t0)));
    let mut gb = g(t0 + b * (t1 - t0), &exact(t0 + b * (t1 - t0)));
    if (ga < 0.0) == (gb < 0.0) && ga != 0.0 && gb != 0.0 {
        a = 0.0;
        b = 1.0;
        ga = g0;
        gb = g1;
    }
    let mut side = 0i8;
    let mut best = if ga.abs() < gb.abs() { (a, ga) } else { (b, gb) };
    for _ in 0..100 {
        if best.1.abs() <= 1e-13 || (b - a).abs() <= 4.0 * f64::EPSILON {
            break;
        }
        let mut s = if gb != ga { (a * gb - b * ga) / (gb - ga) } else { 0.5 * (a + b) };
        if !(s > a.min(b) && s < a.max(b)) {
            s = 0.5 * (a + b);
        }
        let ts = t0 + s * (t1 - t0);
        let gs = g(ts, &exact(ts));
        if gs.abs() < best.1.abs() {
            best = (s, gs);
        }
        if gs == 0.0 {
            break;
        }
        if (gs < 0.0) == (ga < 0.0) {
            a = s;
            ga = gs;
            if side == -1 {
                gb *= 0.5;
            }
            side = -1;
        } else {
            b = s;
            gb = gs;
            if side == 1 {
                ga *= 0.5;
            }
            side = 1;
        }
    }
    let te = t0 + best.0 * (t1 - t0);
    (te, exact(te))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_decay() {
        for tol in [1e-6, 1e-9, 1e-12] {
            let r = integrate(|_, y: &[f64; 1]| [-y[0]], [1.0], (0.0, 1.0), &[], &IvpOptions::with_tol(tol)).unwrap();
            let (t, y) = r.last();
            assert_eq!(t, 1.0);
            assert!((y[0] - (-1.0f64).exp()).abs() <= 10.0 * tol, "tol {tol}: {}", y[0]);
        }
    }

    #[test]
    fn backward_time() {
        let r = integrate(|_, y: &[f64; 1]| [-y[0]], [1.0], (0.0, -2.0), &[], &IvpOptions::with_tol(1e-10)).unwrap();
        assert!((r.last().1[0] - 2.0f64.exp()).abs() < 1e-8);
        assert!(r.samples.windows(2).all(|w| w[1].0 < w[0].0));
    }

    #[test]
    fn harmonic_events() {
        // x'' = -x from (1, 0): zeros of x at pi/2 + k pi
        let ev = [Event::new(|_, y: &[f64; 2]| y[0])];
        let r = integrate(|_, y: &[f64; 2]| [y[1], -y[0]], [1.0, 0.0], (0.0, 10.0), &ev, &IvpOptions::with_tol(1e-11))
            .unwrap();
        let times: Vec<f64> = r.events.iter().map(|e| e.t).collect();
        assert_eq!(times.len(), 3);
        for (k, t) in times.iter().enumerate() {
            assert!((t - (std::f64::consts::FRAC_PI_2 + k as f64 * std::f64::consts::PI)).abs() < 1e-9);
        }
        assert!(r.events.iter().all(|e| e.state[0].abs() <= 1e-10));
    }

    #[test]
    fn directional_terminal_event() {
        let ev = [Event::new(|_, y: &[f64; 2]| y[0]).direction(1).terminal()];
        let r = integrate(|_, y: &[f64; 2]| [y[1], -y[0]], [1.0, 0.0], (0.0, 20.0), &ev, &IvpOptions::with_tol(1e-11))
            .unwrap();
        assert_eq!(r.status, IvpStatus::Terminated(0));
        assert!((r.last().0 - 1.5 * std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn finite_time_blowup_underflows() {
        // y' = y^2 from 1 blows up at t = 1
        let r = integrate(|_, y: &[f64; 1]| [y[0] * y[0]], [1.0], (0.0, 2.0), &[], &IvpOptions::with_tol(1e-10));
        assert!(matches!(r, Err(Error::StepUnderflow { .. }) | Err(Error::MaxSteps(_))));
    }

    #[test]
    fn hermite_interpolation() {
        let r = integrate(|_, y: &[f64; 1]| [y[0]], [1.0], (0.0, 1.0), &[], &IvpOptions::with_tol(1e-12)).unwrap();
        for k in 0..20 {
            let t = k as f64 / 19.0;
            assert!((r.interpolate(t)[0] - t.exp()).abs() < 1e-5);
        }
    }
}
