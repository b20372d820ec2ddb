//! The quadratic vector field, its quasi-homogeneous leading part and its
//! representations in the charts near infinity, with analytic Jacobians.
//!
//! Coordinates per chart:
//!
//! * `Original`: `(x, y, z)`
//! * `Compactified`: `(xc, zc, wc)` with `x = xc/wc^3`, `y = 1/wc^4`, `z = zc/wc`
//! * `BlownUp`: `(xb, zb, wb)` with `xc = xb*wb`, `zc = zb*wb`, `wc = wb`
//!
//! The compactified field is the desingularized one (time rescaled by
//! `wc^2`); the blow-up introduces no further rescaling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

/// System parameters `(alpha, beta, gamma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default = "Params::default_gamma")]
    pub gamma: f64,
}

impl Params {
    pub const DEFAULT_GAMMA: f64 = 0.5;

    pub fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta, gamma: Self::DEFAULT_GAMMA }
    }

    pub fn with_gamma(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }

    fn default_gamma() -> f64 {
        Self::DEFAULT_GAMMA
    }

    pub fn get(&self, which: SystemParam) -> f64 {
        match which {
            SystemParam::Alpha => self.alpha,
            SystemParam::Beta => self.beta,
            SystemParam::Gamma => self.gamma,
        }
    }

    pub fn set(&mut self, which: SystemParam, value: f64) {
        match which {
            SystemParam::Alpha => self.alpha = value,
            SystemParam::Beta => self.beta = value,
            SystemParam::Gamma => self.gamma = value,
        }
    }
}

/// Names the three system parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemParam {
    Alpha,
    Beta,
    Gamma,
}

impl SystemParam {
    pub const ALL: [SystemParam; 3] = [SystemParam::Alpha, SystemParam::Beta, SystemParam::Gamma];

    pub fn name(self) -> &'static str {
        match self {
            SystemParam::Alpha => "alpha",
            SystemParam::Beta => "beta",
            SystemParam::Gamma => "gamma",
        }
    }
}

impl std::str::FromStr for SystemParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha" => Ok(SystemParam::Alpha),
            "beta" => Ok(SystemParam::Beta),
            "gamma" => Ok(SystemParam::Gamma),
            other => Err(Error::InvalidInput(format!("unknown parameter '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChartId {
    Original,
    Compactified,
    BlownUp,
}

impl ChartId {
    pub fn tag(self) -> &'static str {
        match self {
            ChartId::Original => "original",
            ChartId::Compactified => "compactified",
            ChartId::BlownUp => "blownup",
        }
    }

    /// Column names of the three coordinates in this chart.
    pub fn coordinate_names(self) -> [&'static str; 3] {
        match self {
            ChartId::Original => ["x", "y", "z"],
            ChartId::Compactified => ["xc", "zc", "wc"],
            ChartId::BlownUp => ["xb", "zb", "wb"],
        }
    }
}

/// A point tagged with the chart its coordinates refer to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub chart: ChartId,
    pub coords: Vec3,
}

impl ChartPoint {
    pub fn new(chart: ChartId, coords: Vec3) -> Self {
        Self { chart, coords }
    }

    pub fn original(coords: Vec3) -> Self {
        Self::new(ChartId::Original, coords)
    }

    pub fn compactified(coords: Vec3) -> Self {
        Self::new(ChartId::Compactified, coords)
    }

    pub fn blown_up(coords: Vec3) -> Self {
        Self::new(ChartId::BlownUp, coords)
    }

    pub(crate) fn expect(&self, chart: ChartId) -> Result<&Vec3> {
        if self.chart == chart {
            Ok(&self.coords)
        } else {
            Err(Error::ChartMismatch { expected: chart, found: self.chart })
        }
    }
}

/// Quasi-homogeneity weights of `(x, y, z)` for the leading part.
pub const QUASI_HOMOGENEOUS_TYPE: [u32; 3] = [3, 4, 1];
/// Order of the quasi-homogeneous leading part.
pub const QUASI_HOMOGENEOUS_ORDER: u32 = 3;

// Raw right-hand sides. These skip chart checks and are what the
// integrators and collocation code call in their inner loops.

pub fn original_rhs(u: &Vec3, p: &Params) -> Vec3 {
    let [x, y, z] = *u;
    [p.alpha * y + p.gamma * z + y * z, p.beta * x - y + x * x, -4.0 * x]
}

pub fn original_jacobian(u: &Vec3, p: &Params) -> Mat3 {
    let [x, y, z] = *u;
    [[0.0, p.alpha + z, p.gamma + y], [p.beta + 2.0 * x, -1.0, 0.0], [-4.0, 0.0, 0.0]]
}

pub fn compactified_rhs(u: &Vec3, p: &Params) -> Vec3 {
    let [x, z, w] = *u;
    let w2 = w * w;
    let q = w2 - p.beta * w2 * w * x - x * x;
    [
        z + p.alpha * w + 0.75 * x * q + p.gamma * z * w2 * w2,
        -4.0 * x + 0.25 * z * q,
        0.25 * w * q,
    ]
}

pub fn compactified_jacobian(u: &Vec3, p: &Params) -> Mat3 {
    let [x, z, w] = *u;
    let w2 = w * w;
    let q = w2 - p.beta * w2 * w * x - x * x;
    let qx = -p.beta * w2 * w - 2.0 * x;
    let qw = 2.0 * w - 3.0 * p.beta * w2 * x;
    [
        [
            0.75 * (q + x * qx),
            1.0 + p.gamma * w2 * w2,
            p.alpha + 0.75 * x * qw + 4.0 * p.gamma * z * w2 * w,
        ],
        [-4.0 + 0.25 * z * qx, 0.25 * q, 0.25 * z * qw],
        [0.25 * w * qx, 0.0, 0.25 * (q + w * qw)],
    ]
}

pub fn blownup_rhs(u: &Vec3, p: &Params) -> Vec3 {
    let [x, z, w] = *u;
    let w2 = w * w;
    let q = 1.0 - p.beta * x * w2 - x * x;
    [
        p.alpha + z + p.gamma * w2 * w2 * z + 0.5 * x * w2 * q,
        -4.0 * x,
        0.25 * w2 * w * q,
    ]
}

pub fn blownup_jacobian(u: &Vec3, p: &Params) -> Mat3 {
    let [x, z, w] = *u;
    let w2 = w * w;
    let q = 1.0 - p.beta * x * w2 - x * x;
    let qx = -p.beta * w2 - 2.0 * x;
    let qw = -2.0 * p.beta * x * w;
    [
        [
            0.5 * w2 * (q + x * qx),
            1.0 + p.gamma * w2 * w2,
            4.0 * p.gamma * w2 * w * z + 0.5 * x * (2.0 * w * q + w2 * qw),
        ],
        [-4.0, 0.0, 0.0],
        [0.25 * w2 * w * qx, 0.0, 0.25 * (3.0 * w2 * q + w2 * w * qw)],
    ]
}

/// Derivative of the field in `chart` with respect to one system parameter.
pub fn param_derivative(chart: ChartId, u: &Vec3, which: SystemParam) -> Vec3 {
    match chart {
        ChartId::Original => {
            let [x, y, z] = *u;
            match which {
                SystemParam::Alpha => [y, 0.0, 0.0],
                SystemParam::Beta => [0.0, x, 0.0],
                SystemParam::Gamma => [z, 0.0, 0.0],
            }
        }
        ChartId::Compactified => {
            let [x, z, w] = *u;
            let w3 = w * w * w;
            match which {
                SystemParam::Alpha => [w, 0.0, 0.0],
                SystemParam::Beta => {
                    let qb = -w3 * x;
                    [0.75 * x * qb, 0.25 * z * qb, 0.25 * w * qb]
                }
                SystemParam::Gamma => [z * w3 * w, 0.0, 0.0],
            }
        }
        ChartId::BlownUp => {
            let [x, z, w] = *u;
            let w2 = w * w;
            match which {
                SystemParam::Alpha => [1.0, 0.0, 0.0],
                SystemParam::Beta => {
                    let qb = -x * w2;
                    [0.5 * x * w2 * qb, 0.0, 0.25 * w2 * w * qb]
                }
                SystemParam::Gamma => [w2 * w2 * z, 0.0, 0.0],
            }
        }
    }
}

/// Raw right-hand side in the given chart.
pub fn rhs(chart: ChartId, u: &Vec3, p: &Params) -> Vec3 {
    match chart {
        ChartId::Original => original_rhs(u, p),
        ChartId::Compactified => compactified_rhs(u, p),
        ChartId::BlownUp => blownup_rhs(u, p),
    }
}

fn raw_jacobian(chart: ChartId, u: &Vec3, p: &Params) -> Mat3 {
    match chart {
        ChartId::Original => original_jacobian(u, p),
        ChartId::Compactified => compactified_jacobian(u, p),
        ChartId::BlownUp => blownup_jacobian(u, p),
    }
}

pub fn eval_original(p: &ChartPoint, params: &Params) -> Result<Vec3> {
    Ok(original_rhs(p.expect(ChartId::Original)?, params))
}

/// The quasi-homogeneous leading part `(yz, x^2, -4x)`.
pub fn eval_quasihom(u: &Vec3) -> Vec3 {
    let [x, y, z] = *u;
    [y * z, x * x, -4.0 * x]
}

pub fn eval_compactified(p: &ChartPoint, params: &Params) -> Result<Vec3> {
    Ok(compactified_rhs(p.expect(ChartId::Compactified)?, params))
}

/// The invariant plane `wc = 0` of the compactified chart.
pub fn eval_infinity_plane(u: &[f64; 2]) -> [f64; 2] {
    let [x, z] = *u;
    [z - 0.75 * x * x * x, -4.0 * x - 0.25 * x * x * z]
}

/// Rates `(r', theta')` of the infinity-plane field in ellipsoidal polar
/// coordinates `x = r cos(theta)`, `z = 2 r sin(theta)`.
pub fn infinity_plane_polar(r: f64, theta: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    let r_dot = -0.25 * r.powi(3) * c * c * (2.0 + (2.0 * theta).cos());
    let theta_dot = -2.0 + 0.5 * r * r * c.powi(3) * s;
    (r_dot, theta_dot)
}

pub fn eval_blownup(p: &ChartPoint, params: &Params) -> Result<Vec3> {
    Ok(blownup_rhs(p.expect(ChartId::BlownUp)?, params))
}

/// Analytic Jacobian of the field in `chart` at `p`.
pub fn jacobian(chart: ChartId, p: &ChartPoint, params: &Params) -> Result<Mat3> {
    Ok(raw_jacobian(chart, p.expect(chart)?, params))
}

/// `E = 4 xb^2 + (zb + alpha)^2`, conserved by the blown-up field on `wb = 0`.
pub fn blownup_ellipse_level(u: &Vec3, alpha: f64) -> f64 {
    4.0 * u[0] * u[0] + (u[1] + alpha).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_jacobian(chart: ChartId, u: &Vec3, p: &Params) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for j in 0..3 {
            let h = 1e-6 * u[j].abs().max(1.0);
            let mut up = *u;
            let mut um = *u;
            up[j] += h;
            um[j] -= h;
            let fp = rhs(chart, &up, p);
            let fm = rhs(chart, &um, p);
            for i in 0..3 {
                out[i][j] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        out
    }

    #[test]
    fn original_field_values() {
        let p = Params::new(5.3, 2.0);
        assert_eq!(original_rhs(&[0.0; 3], &p), [0.0; 3]);
        let f = original_rhs(&[1.0, 1.0, 1.0], &p);
        assert!((f[0] - 6.8).abs() < 1e-14 && (f[1] - 2.0).abs() < 1e-14 && (f[2] + 4.0).abs() < 1e-14);
    }

    #[test]
    fn translated_fixed_point_of_untranslated_system() {
        // x1' = a + x2 x3, x2' = -x2 + x1^2, x3' = b - 4 x1 with alpha = -16a/b^2,
        // beta = b/2, gamma = b^2/16 and (x, y, z) = (x1 - b/4, x2 - b^2/16, x3 + 16a/b^2).
        let (a, b) = (-1.20338_f64, 1.89616_f64);
        let p = Params::with_gamma(-16.0 * a / (b * b), b / 2.0, b * b / 16.0);
        let fixed = [b / 4.0, b * b / 16.0, -16.0 * a / (b * b)];
        let untranslated = |x: [f64; 3]| [a + x[1] * x[2], -x[1] + x[0] * x[0], b - 4.0 * x[0]];
        assert!(untranslated(fixed).iter().all(|v| v.abs() < 1e-12));
        let probe = [fixed[0] + 0.3, fixed[1] - 0.2, fixed[2] + 0.7];
        let shifted = [probe[0] - b / 4.0, probe[1] - b * b / 16.0, probe[2] + 16.0 * a / (b * b)];
        let lhs = untranslated(probe);
        let rhs = original_rhs(&shifted, &p);
        for i in 0..3 {
            assert!((lhs[i] - rhs[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn quasihom_values() {
        assert_eq!(eval_quasihom(&[0.0; 3]), [0.0; 3]);
        assert_eq!(eval_quasihom(&[1.0, 2.0, 3.0]), [6.0, 1.0, -4.0]);
    }

    #[test]
    fn chart_mismatch_is_reported() {
        let p = Params::new(5.3, 2.0);
        let pt = ChartPoint::blown_up([0.0, 0.0, 0.1]);
        assert!(matches!(
            eval_original(&pt, &p),
            Err(Error::ChartMismatch { expected: ChartId::Original, found: ChartId::BlownUp })
        ));
        assert!(jacobian(ChartId::Compactified, &pt, &p).is_err());
    }

    #[test]
    fn origin_jacobian_structure() {
        let p = Params::new(5.3573, 2.19173);
        let j = jacobian(ChartId::Original, &ChartPoint::original([0.0; 3]), &p).unwrap();
        assert_eq!(j, [[0.0, 5.3573, 0.5], [2.19173, -1.0, 0.0], [-4.0, 0.0, 0.0]]);
        assert_eq!(j[0][0] + j[1][1] + j[2][2], -1.0);
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let p = Params::with_gamma(5.1, 1.9, 0.7);
        let pts = [[0.3, -1.2, 0.8], [1.1, 0.4, 0.25], [-0.7, 2.5, 0.05], [2.0, -4.0, 1.3]];
        for chart in [ChartId::Original, ChartId::Compactified, ChartId::BlownUp] {
            for u in &pts {
                let a = raw_jacobian(chart, u, &p);
                let b = fd_jacobian(chart, u, &p);
                for i in 0..3 {
                    for j in 0..3 {
                        let scale = b[i][j].abs().max(1.0);
                        assert!((a[i][j] - b[i][j]).abs() <= 1e-6 * scale, "{chart:?} {i}{j}");
                    }
                }
            }
        }
    }

    #[test]
    fn param_derivatives_match_finite_differences() {
        let p = Params::with_gamma(5.1, 1.9, 0.7);
        let u = [0.6, -1.1, 0.4];
        for chart in [ChartId::Original, ChartId::Compactified, ChartId::BlownUp] {
            for which in SystemParam::ALL {
                let h = 1e-6;
                let mut pp = p;
                let mut pm = p;
                pp.set(which, p.get(which) + h);
                pm.set(which, p.get(which) - h);
                let (fp, fm) = (rhs(chart, &u, &pp), rhs(chart, &u, &pm));
                let d = param_derivative(chart, &u, which);
                for i in 0..3 {
                    assert!((d[i] - (fp[i] - fm[i]) / (2.0 * h)).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn infinity_plane_matches_compactified_slice() {
        let p = Params::new(5.3, 2.0);
        for &(x, z) in &[(0.4, -1.0), (1.5, 2.0), (-0.3, 0.7)] {
            let full = compactified_rhs(&[x, z, 0.0], &p);
            let plane = eval_infinity_plane(&[x, z]);
            assert_eq!(full[2], 0.0);
            assert!((full[0] - plane[0]).abs() < 1e-14);
            assert!((full[1] - plane[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn blownup_base_equilibrium() {
        let p = Params::new(5.3, 2.0);
        let f = blownup_rhs(&[0.0, -5.3, 0.0], &p);
        assert!(f.iter().all(|v| v.abs() < 1e-15));
    }
}
