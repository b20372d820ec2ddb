//! Linear data of the saddle at the origin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{original_jacobian, Params, Vec3};
use crate::numerics::eig::{dot, eig3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddleData {
    pub params: Params,
    pub lambda_s: f64,
    pub lambda_u: f64,
    pub lambda_uu: f64,
    pub e_s: Vec3,
    pub e_u: Vec3,
    pub e_uu: Vec3,
}

impl SaddleData {
    pub fn values(&self) -> [f64; 3] {
        [self.lambda_s, self.lambda_u, self.lambda_uu]
    }

    pub fn vectors(&self) -> [Vec3; 3] {
        [self.e_s, self.e_u, self.e_uu]
    }
}

/// Eigenvalues and eigenvectors of the origin, which must be a saddle with
/// one stable and two unstable directions.
pub fn saddle_at_origin(params: &Params) -> Result<SaddleData> {
    let e = eig3(&original_jacobian(&[0.0; 3], params))?;
    let [ls, lu, luu] = e.values;
    if !(ls < 0.0 && 0.0 < lu && lu < luu) {
        return Err(Error::NotSaddle(e.values));
    }
    Ok(SaddleData {
        params: *params,
        lambda_s: ls,
        lambda_u: lu,
        lambda_uu: luu,
        e_s: e.vectors[0],
        e_u: e.vectors[1],
        e_uu: e.vectors[2],
    })
}

/// `-lambda_s - lambda_uu`; positive when the orbit-flip case C inequality
/// `lambda_uu < -lambda_s` holds.
pub fn case_c_condition(s: &SaddleData) -> f64 {
    -s.lambda_s - s.lambda_uu
}

fn align(v: Vec3, reference: &Vec3) -> Vec3 {
    if dot(&v, reference) < 0.0 {
        [-v[0], -v[1], -v[2]]
    } else {
        v
    }
}

/// Saddle data at `params_new` with every eigenvector oriented to agree with
/// its predecessor in `prev`.
pub fn track_eigvec(prev: &SaddleData, params_new: &Params) -> Result<SaddleData> {
    let mut next = saddle_at_origin(params_new)?;
    // the sorted order must match: each new vector should be closer to its own
    // predecessor than to any other
    let new = next.vectors();
    let old = prev.vectors();
    for k in 0..3 {
        let own = dot(&new[k], &old[k]).abs();
        for j in 0..3 {
            if j != k && dot(&new[k], &old[j]).abs() > own {
                return Err(Error::EigenvalueCollision);
            }
        }
    }
    next.e_s = align(next.e_s, &prev.e_s);
    next.e_u = align(next.e_u, &prev.e_u);
    next.e_uu = align(next.e_uu, &prev.e_uu);
    Ok(next)
}

/// Stable eigenvector at `params`, oriented along `reference`.
pub(crate) fn stable_direction(params: &Params, reference: &Vec3) -> Result<Vec3> {
    let e = eig3(&original_jacobian(&[0.0; 3], params))?;
    Ok(align(e.vectors[0], reference))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::eig::{mat_vec, norm};

    fn c_in() -> Params {
        Params::new(5.3573, 2.19173)
    }

    #[test]
    fn flip_point_spectrum() {
        let s = saddle_at_origin(&c_in()).unwrap();
        let want = [-3.7444, 0.2108, 2.5335];
        for (got, w) in s.values().iter().zip(want) {
            assert!((got - w).abs() < 1e-3, "{got} vs {w}");
        }
        assert!((case_c_condition(&s) - (3.7444 - 2.5335)).abs() < 2e-3);
        let j = original_jacobian(&[0.0; 3], &c_in());
        for (l, v) in s.values().iter().zip(s.vectors()) {
            let jv = mat_vec(&j, &v);
            let r = norm(&[jv[0] - l * v[0], jv[1] - l * v[1], jv[2] - l * v[2]]);
            assert!(r < 1e-10);
        }
    }

    #[test]
    fn beta_zero_has_minus_one() {
        // with beta = 0 the y row decouples at the origin, so -1 is an eigenvalue
        let p = Params::new(3.1, 0.0);
        let e = eig3(&original_jacobian(&[0.0; 3], &p));
        match e {
            Ok(e) => assert!(e.values.iter().any(|l| (l + 1.0).abs() < 1e-10)),
            Err(Error::ComplexEigenvalues) => {
                let c = crate::numerics::eig::characteristic_polynomial(&original_jacobian(&[0.0; 3], &p));
                assert!((-1.0 + c[0] - c[1] + c[2]).abs() < 1e-12);
            }
            Err(other) => panic!("{other}"),
        }
    }

    #[test]
    fn case_c_margin_sign() {
        let mut s = saddle_at_origin(&c_in()).unwrap();
        s.lambda_s = -1.0;
        s.lambda_uu = 2.0;
        assert_eq!(case_c_condition(&s), -1.0);
    }

    #[test]
    fn margin_is_continuous_in_beta() {
        let n = 200;
        let margins: Vec<f64> = (0..=n)
            .map(|k| {
                let b = 1.9 + 0.6 * k as f64 / n as f64;
                case_c_condition(&saddle_at_origin(&Params::new(5.3573, b)).unwrap())
            })
            .collect();
        let jumps: Vec<f64> = margins.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let typical = jumps.iter().sum::<f64>() / jumps.len() as f64;
        assert!(jumps.iter().all(|j| *j < 10.0 * typical + 1e-12));
    }

    #[test]
    fn tracking_keeps_orientation() {
        let s0 = saddle_at_origin(&c_in()).unwrap();
        assert_eq!(track_eigvec(&s0, &c_in()).unwrap(), s0);
        let mut prev = s0;
        for k in 1..=50 {
            let next = track_eigvec(&prev, &Params::new(5.3573, 2.19173 + 0.002 * k as f64)).unwrap();
            assert!(dot(&next.e_s, &prev.e_s) > 0.99);
            prev = next;
        }
        let mut flipped = s0;
        flipped.e_s = [-s0.e_s[0], -s0.e_s[1], -s0.e_s[2]];
        let t = track_eigvec(&flipped, &Params::new(5.3573, 2.192)).unwrap();
        assert!(dot(&t.e_s, &s0.e_s) < -0.99);
    }

    #[test]
    fn rejects_non_saddle() {
        // alpha = gamma = 0 leaves a zero eigenvalue
        let p = Params::with_gamma(0.0, 1.0, 0.0);
        assert!(matches!(saddle_at_origin(&p), Err(Error::NotSaddle(_)) | Err(Error::ComplexEigenvalues)));
    }
}
