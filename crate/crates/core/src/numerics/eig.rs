//! Real eigen-decomposition of 3x3 matrices via the characteristic cubic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Mat3, Vec3};

/// Sorted real eigenvalues with unit eigenvectors stored as columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenTriple {
    pub values: [f64; 3],
    /// `vectors[k]` is the eigenvector for `values[k]`.
    pub vectors: [Vec3; 3],
}

pub(crate) fn mat_vec(a: &Mat3, v: &Vec3) -> Vec3 {
    [
        a[0][0] * v[0] + a[0][1] * v[1] + a[0][2] * v[2],
        a[1][0] * v[0] + a[1][1] * v[1] + a[1][2] * v[2],
        a[2][0] * v[0] + a[2][1] * v[1] + a[2][2] * v[2],
    ]
}

pub(crate) fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn scale(a: &Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn mat_norm(a: &Mat3) -> f64 {
    a.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Coefficients `(c2, c1, c0)` of `det(lambda I - A) = lambda^3 + c2 lambda^2 + c1 lambda + c0`.
pub fn characteristic_polynomial(a: &Mat3) -> [f64; 3] {
    let tr = a[0][0] + a[1][1] + a[2][2];
    let minors = a[0][0] * a[1][1] - a[0][1] * a[1][0] + a[0][0] * a[2][2] - a[0][2] * a[2][0] + a[1][1] * a[2][2]
        - a[1][2] * a[2][1];
    [-tr, minors, -det3(a)]
}

pub fn det3(a: &Mat3) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Real roots of the characteristic cubic, ascending.
fn cubic_roots(a: &Mat3) -> Result<[f64; 3]> {
    let [c2, c1, c0] = characteristic_polynomial(a);
    let shift = -c2 / 3.0;
    let p = c1 - c2 * c2 / 3.0;
    let q = 2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 + c0;
    let disc = 4.0 * p * p * p + 27.0 * q * q;
    let size = 4.0 * (p * p * p).abs() + 27.0 * q * q;
    if disc > 1e-10 * size && disc > 0.0 {
        return Err(Error::ComplexEigenvalues);
    }
    let mut roots = if p.abs() <= f64::EPSILON * (c2 * c2 + c1.abs()) {
        [shift; 3]
    } else if p > 0.0 {
        // only reachable when disc is numerically zero: triple-ish root
        [shift - (q / 2.0).cbrt() * 2.0, shift + (q / 2.0).cbrt(), shift + (q / 2.0).cbrt()]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        let tau = 2.0 * std::f64::consts::PI / 3.0;
        [shift + m * phi.cos(), shift + m * (phi - tau).cos(), shift + m * (phi - 2.0 * tau).cos()]
    };
    // Newton polish on the cubic itself
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let f = ((*r + c2) * *r + c1) * *r + c0;
            let df = (3.0 * *r + 2.0 * c2) * *r + c1;
            if df.abs() < 1e-8 * (1.0 + c1.abs() + c2 * c2) {
                break;
            }
            let step = f / df;
            *r -= step;
            if step.abs() <= 1e-16 * r.abs() {
                break;
            }
        }
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(roots)
}

fn solve3(m: &Mat3, b: &Vec3) -> Option<Vec3> {
    let d = det3(m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut out = [0.0; 3];
    for k in 0..3 {
        let mut mk = *m;
        for i in 0..3 {
            mk[i][k] = b[i];
        }
        out[k] = det3(&mk) / d;
    }
    Some(out)
}

/// Eigenvector for `lambda`, orthogonal to the vectors in `avoid` when the
/// eigenspace is degenerate.
pub(crate) fn eigenvector(a: &Mat3, lambda: f64, avoid: &[Vec3]) -> Vec3 {
    let scale_a = mat_norm(a).max(f64::MIN_POSITIVE);
    let mut shifted = *a;
    for i in 0..3 {
        shifted[i][i] -= lambda;
    }
    // initial guess: largest cross product of rows of (A - lambda I)
    let rows = [shifted[0], shifted[1], shifted[2]];
    let mut v = [0.0; 3];
    let mut best = 0.0;
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let c = cross(&rows[i], &rows[j]);
        let n = norm(&c);
        if n > best {
            best = n;
            v = c;
        }
    }
    let degenerate = best <= 1e-10 * scale_a * scale_a;
    if degenerate {
        // pick the basis vector least aligned with the vectors already used
        v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
            .into_iter()
            .map(|e| {
                let mut w = e;
                for u in avoid {
                    let c = dot(&w, u);
                    w = [w[0] - c * u[0], w[1] - c * u[1], w[2] - c * u[2]];
                }
                w
            })
            .max_by(|x, y| norm(x).partial_cmp(&norm(y)).unwrap())
            .unwrap();
    }
    v = scale(&v, 1.0 / norm(&v));
    // inverse iteration with a tiny shift
    let eps = 1e-10 * scale_a.max(lambda.abs());
    let mut m = shifted;
    for i in 0..3 {
        m[i][i] -= eps;
    }
    for _ in 0..3 {
        match solve3(&m, &v) {
            Some(w) if norm(&w).is_finite() && norm(&w) > 0.0 => {
                let mut w = w;
                if degenerate {
                    for u in avoid {
                        let c = dot(&w, u);
                        w = [w[0] - c * u[0], w[1] - c * u[1], w[2] - c * u[2]];
                    }
                }
                v = scale(&w, 1.0 / norm(&w));
            }
            _ => break,
        }
    }
    v
}

/// Flips `v` so that its largest-magnitude component is positive.
pub fn normalize_sign(v: Vec3) -> Vec3 {
    let k = (0..3).max_by(|&i, &j| v[i].abs().partial_cmp(&v[j].abs()).unwrap()).unwrap();
    if v[k] < 0.0 {
        scale(&v, -1.0)
    } else {
        v
    }
}

/// Real eigenvalues (ascending) and unit eigenvectors of a 3x3 matrix.
pub fn eig3(a: &Mat3) -> Result<EigenTriple> {
    if a.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let values = cubic_roots(a)?;
    let mut vectors = [[0.0; 3]; 3];
    let tol = 1e-9 * mat_norm(a).max(1.0);
    for k in 0..3 {
        let same: Vec<Vec3> = (0..k).filter(|&j| (values[j] - values[k]).abs() <= tol).map(|j| vectors[j]).collect();
        vectors[k] = normalize_sign(eigenvector(a, values[k], &same));
    }
    Ok(EigenTriple { values, vectors })
}

/// Largest `|A v - lambda v|` over the three pairs.
pub fn eigen_residual(a: &Mat3, e: &EigenTriple) -> f64 {
    (0..3)
        .map(|k| {
            let av = mat_vec(a, &e.vectors[k]);
            norm(&[av[0] - e.values[k] * e.vectors[k][0], av[1] - e.values[k] * e.vectors[k][1], av[2] - e.values[k] * e.vectors[k][2]])
        })
        .fold(0.0, f64::max)
}
