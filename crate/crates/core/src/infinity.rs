//! Structure at infinity: ellipse foliation of the blown-up plane, the
//! averaged radial flux, the critical cylinder and separatrix probes.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fields::{blownup_rhs, Params, Vec3};
use crate::numerics::ode::{integrate, Event, IvpOptions, IvpStatus};
use crate::numerics::quadrature::gauss_nodes;

/// Critical radius `2 sqrt(3) / 3`, the positive zero of the averaged flux.
pub const R_STAR: f64 = 1.154_700_538_379_251_5;

/// Default height of the cylinder section above the plane at infinity.
pub const DEFAULT_DELTA_B: f64 = 0.1;

/// Probe thresholds: capture ball around the base equilibrium and escape height.
pub const PROBE_BALL: f64 = 1e-2;
pub const PROBE_ESCAPE: f64 = 0.2;
/// Capture region used in addition to the ball: inside half the critical
/// radius and below this height the averaged backward flux points inward.
pub const PROBE_CAPTURE_W: f64 = 0.1;
pub const PROBE_MAX_TIME: f64 = 2e5;

/// `(1/8) pi r (4 - 3 r^2)`, the angle-averaged radial flux per `w_B^2`.
pub fn flux_through_cylinder(r: f64, _params: &Params) -> f64 {
    PI * r * (4.0 - 3.0 * r * r) / 8.0
}

/// Blown-up point at ellipsoidal polar coordinates about `(0, -alpha)`.
pub fn cylinder_point(r: f64, theta: f64, w: f64, alpha: f64) -> Vec3 {
    let (s, c) = theta.sin_cos();
    [r * c, 2.0 * r * s - alpha, w]
}

/// Radial rate `r_B'` of the blown-up field at `(r, theta, w)`, where
/// `x_B = r cos(theta)` and `z_B = 2 r sin(theta) - alpha`.
pub fn radial_rate(r: f64, theta: f64, w: f64, params: &Params) -> f64 {
    let u = cylinder_point(r, theta, w, params.alpha);
    let f = blownup_rhs(&u, params);
    let zr = u[1] + params.alpha;
    (u[0] * f[0] + 0.25 * zr * f[1]) / r
}

/// Integral of `r_B'` over a full turn, by composite Gauss quadrature.
pub fn flux_numeric(r: f64, w_b: f64, params: &Params) -> f64 {
    const PANELS: usize = 16;
    if r == 0.0 {
        // the circle degenerates to the axis, where the flux vanishes
        return 0.0;
    }
    let (nodes, weights) = gauss_nodes(8).expect("fixed order");
    let h = 2.0 * PI / PANELS as f64;
    let mut sum = 0.0;
    for k in 0..PANELS {
        for (s, wt) in nodes.iter().zip(&weights) {
            sum += wt * h * radial_rate(r, h * (k as f64 + s), w_b, params);
        }
    }
    sum
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalCylinder {
    pub radius: f64,
    pub alpha: f64,
    pub delta_b: f64,
}

impl CriticalCylinder {
    /// Axis point `(0, -alpha, 0)` in the blown-up chart.
    pub fn axis_point(&self) -> Vec3 {
        [0.0, -self.alpha, 0.0]
    }

    /// Boundary point at angle `theta_b` and height `delta_b`.
    pub fn point(&self, theta_b: f64) -> Vec3 {
        cylinder_point(self.radius, theta_b, self.delta_b, self.alpha)
    }

    /// Derivative of [`Self::point`] with respect to the angle.
    pub fn point_derivative(&self, theta_b: f64) -> Vec3 {
        let (s, c) = theta_b.sin_cos();
        [-self.radius * s, 2.0 * self.radius * c, 0.0]
    }
}

/// Locates the zero of the averaged flux by bisection and builds the cylinder.
pub fn critical_cylinder(params: &Params, delta_b: f64) -> Result<CriticalCylinder> {
    if !(delta_b > 0.0 && delta_b <= 0.3) {
        return Err(Error::InvalidInput(format!("delta_B must lie in (0, 0.3], got {delta_b}")));
    }
    let (mut lo, mut hi) = (0.5, 2.0);
    let f = |r: f64| flux_through_cylinder(r, params);
    if f(lo) * f(hi) > 0.0 {
        return Err(Error::RootNotBracketed { lo, hi });
    }
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if f(mid) == 0.0 {
            lo = mid;
            hi = mid;
        } else if f(lo) * f(mid) < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let radius = 0.5 * (lo + hi);
    debug_assert!((radius - R_STAR).abs() < 1e-10);
    Ok(CriticalCylinder { radius, alpha: params.alpha, delta_b })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeOutcome {
    Converges,
    Diverges,
    Undecided,
}

/// Integrates the blown-up field backward from `(x0, -alpha, delta)` and
/// reports whether the trajectory is captured by the base equilibrium
/// `(0, -alpha, 0)` or leaves through `w_B = 0.2`.
pub fn separatrix_probe(params: &Params, x0: f64, delta: f64) -> Result<ProbeOutcome> {
    if !(delta > 0.0) {
        return Err(Error::InvalidInput(format!("probe height must be positive, got {delta}")));
    }
    let a = params.alpha;
    let p = *params;
    let events = [
        Event::new(|_, u: &Vec3| u[2] - PROBE_ESCAPE).terminal(),
        Event::new(move |_, u: &Vec3| (u[0] * u[0] + (u[1] + a).powi(2) + u[2] * u[2]).sqrt() - PROBE_BALL).terminal(),
        Event::new(move |_, u: &Vec3| {
            let r = (u[0] * u[0] + 0.25 * (u[1] + a).powi(2)).sqrt();
            (r - 0.5 * R_STAR).max(u[2] - PROBE_CAPTURE_W)
        })
        .direction(-1)
        .terminal(),
    ];
    let opts = IvpOptions { tol: 1e-9, max_steps: 20_000_000, h_max: Some(0.5) };
    let res = integrate(move |_, u| blownup_rhs(u, &p), [x0, -a, delta], (0.0, -PROBE_MAX_TIME), &events, &opts)?;
    Ok(match res.status {
        IvpStatus::Terminated(0) => ProbeOutcome::Diverges,
        IvpStatus::Terminated(_) => ProbeOutcome::Converges,
        IvpStatus::Completed => ProbeOutcome::Undecided,
    })
}

/// Bisects the probe outcome in `x0` on `[lo, hi]`, where `lo` converges and
/// `hi` diverges, down to width `tol`.
pub fn separatrix_bisect(params: &Params, delta: f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    if separatrix_probe(params, lo, delta)? != ProbeOutcome::Converges
        || separatrix_probe(params, hi, delta)? != ProbeOutcome::Diverges
    {
        return Err(Error::RootNotBracketed { lo, hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match separatrix_probe(params, mid, delta)? {
            ProbeOutcome::Converges => lo = mid,
            ProbeOutcome::Diverges => hi = mid,
            ProbeOutcome::Undecided => return Ok(mid),
        }
    }
    Ok(0.5 * (lo + hi))
}
