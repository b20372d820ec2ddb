//! Coordinate maps between the original, compactified and blown-up charts.

use crate::error::{Error, Result};
use crate::fields::{ChartId, ChartPoint, Mat3, Vec3};

/// A defined pair of charts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChartMap {
    pub from: ChartId,
    pub to: ChartId,
}

impl ChartMap {
    pub fn new(from: ChartId, to: ChartId) -> Result<Self> {
        if from == to {
            return Err(Error::InvalidInput(format!("no map from {from:?} to itself")));
        }
        Ok(Self { from, to })
    }

    pub fn apply(&self, p: &ChartPoint) -> Result<ChartPoint> {
        p.expect(self.from)?;
        use ChartId::*;
        match (self.from, self.to) {
            (Original, Compactified) => to_compactified(p),
            (Compactified, Original) => from_compactified(p),
            (Compactified, BlownUp) => blowup(p),
            (BlownUp, Compactified) => blowdown(p),
            (Original, BlownUp) => original_to_blownup(p),
            (BlownUp, Original) => blownup_to_original(p),
            _ => unreachable!(),
        }
    }
}

pub fn to_compactified(p: &ChartPoint) -> Result<ChartPoint> {
    let [x, y, z] = *p.expect(ChartId::Original)?;
    if !(y > 0.0) {
        return Err(Error::NonPositiveY(y));
    }
    let w = y.powf(-0.25);
    Ok(ChartPoint::compactified([x * w * w * w, z * w, w]))
}

pub fn from_compactified(p: &ChartPoint) -> Result<ChartPoint> {
    let [x, z, w] = *p.expect(ChartId::Compactified)?;
    if !(w > 0.0) {
        return Err(Error::AtInfinity(w));
    }
    let w2 = w * w;
    Ok(ChartPoint::original([x / (w2 * w), 1.0 / (w2 * w2), z / w]))
}

pub fn blowup(p: &ChartPoint) -> Result<ChartPoint> {
    let [x, z, w] = *p.expect(ChartId::Compactified)?;
    if !(w > 0.0) {
        return Err(Error::AtInfinity(w));
    }
    Ok(ChartPoint::blown_up([x / w, z / w, w]))
}

pub fn blowdown(p: &ChartPoint) -> Result<ChartPoint> {
    let [x, z, w] = *p.expect(ChartId::BlownUp)?;
    Ok(ChartPoint::compactified([x * w, z * w, w]))
}

pub fn original_to_blownup(p: &ChartPoint) -> Result<ChartPoint> {
    blowup(&to_compactified(p)?)
}

/// The glue map `(xb, zb, wb) -> (xb/wb^2, 1/wb^4, zb)`.
pub fn blownup_to_original(p: &ChartPoint) -> Result<ChartPoint> {
    let [x, z, w] = *p.expect(ChartId::BlownUp)?;
    if !(w > 0.0) {
        return Err(Error::AtInfinity(w));
    }
    let w2 = w * w;
    Ok(ChartPoint::original([x / w2, 1.0 / (w2 * w2), z]))
}

/// Raw glue map and its Jacobian, for boundary conditions.
pub fn glue(u: &Vec3) -> (Vec3, Mat3) {
    let [x, z, w] = *u;
    let w2 = w * w;
    let image = [x / w2, 1.0 / (w2 * w2), z];
    let jac = [
        [1.0 / w2, 0.0, -2.0 * x / (w2 * w)],
        [0.0, 0.0, -4.0 / (w2 * w2 * w)],
        [0.0, 1.0, 0.0],
    ];
    (image, jac)
}

/// Bounded projection `p / (1 + |p|)` into the open unit ball, used for plots.
pub fn project_sphere(p: &ChartPoint) -> Result<Vec3> {
    let u = p.expect(ChartId::Original)?;
    let n = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    Ok([u[0] / (1.0 + n), u[1] / (1.0 + n), u[2] / (1.0 + n)])
}

/// Derivative of the compactification map at an original point.
pub fn to_compactified_derivative(u: &Vec3) -> Result<Mat3> {
    let [x, y, z] = *u;
    if !(y > 0.0) {
        return Err(Error::NonPositiveY(y));
    }
    let w = y.powf(-0.25);
    let dw = -0.25 * w / y;
    let w3 = w * w * w;
    Ok([[w3, 3.0 * x * w * w * dw, 0.0], [0.0, z * dw, w], [0.0, dw, 0.0]])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Vec3, b: &Vec3, tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * y.abs().max(1.0))
    }

    #[test]
    fn compactification_examples() {
        let c = to_compactified(&ChartPoint::original([0.0, 1.0, 0.0])).unwrap();
        assert_eq!(c.coords, [0.0, 0.0, 1.0]);
        let c = to_compactified(&ChartPoint::original([1.0, 16.0, 2.0])).unwrap();
        assert!(close(&c.coords, &[0.125, 1.0, 0.5], 1e-15));
        let o = from_compactified(&ChartPoint::compactified([0.125, 1.0, 0.5])).unwrap();
        assert!(close(&o.coords, &[1.0, 16.0, 2.0], 1e-15));
        assert_eq!(from_compactified(&ChartPoint::compactified([0.0, 0.0, 1.0])).unwrap().coords, [0.0, 1.0, 0.0]);
    }

    #[test]
    fn undefined_points_are_errors() {
        assert_eq!(to_compactified(&ChartPoint::original([1.0, 0.0, 1.0])), Err(Error::NonPositiveY(0.0)));
        assert_eq!(to_compactified(&ChartPoint::original([1.0, -2.0, 1.0])), Err(Error::NonPositiveY(-2.0)));
        assert!(matches!(from_compactified(&ChartPoint::compactified([1.0, 1.0, 0.0])), Err(Error::AtInfinity(_))));
        assert!(matches!(blowup(&ChartPoint::compactified([1.0, 1.0, 0.0])), Err(Error::AtInfinity(_))));
        assert!(matches!(blownup_to_original(&ChartPoint::blown_up([1.0, 1.0, -0.1])), Err(Error::AtInfinity(_))));
        assert!(matches!(to_compactified(&ChartPoint::blown_up([1.0, 1.0, 1.0])), Err(Error::ChartMismatch { .. })));
    }

    #[test]
    fn blowup_examples() {
        let b = blowup(&ChartPoint::compactified([0.1, 0.2, 0.5])).unwrap();
        assert!(close(&b.coords, &[0.2, 0.4, 0.5], 1e-15));
        let o = blownup_to_original(&ChartPoint::blown_up([1.0, 2.0, 1.0])).unwrap();
        assert_eq!(o.coords, [1.0, 1.0, 2.0]);
        let s = blownup_to_original(&ChartPoint::blown_up([0.0, -3.0, 0.7])).unwrap();
        assert_eq!(s.coords[0], 0.0);
    }

    #[test]
    fn glue_agrees_with_composition() {
        for u in [[0.3, -1.0, 0.6], [-2.0, 4.0, 0.05], [0.0, 0.0, 1.3]] {
            let direct = blownup_to_original(&ChartPoint::blown_up(u)).unwrap();
            let composed = from_compactified(&blowdown(&ChartPoint::blown_up(u)).unwrap()).unwrap();
            assert!(close(&direct.coords, &composed.coords, 1e-13));
            assert!(close(&glue(&u).0, &direct.coords, 0.0));
        }
    }

    #[test]
    fn glue_jacobian_matches_finite_differences() {
        let u = [0.4, -6.0, 0.6];
        let (_, jac) = glue(&u);
        for j in 0..3 {
            let h = 1e-7;
            let mut up = u;
            let mut um = u;
            up[j] += h;
            um[j] -= h;
            let (gp, gm) = (glue(&up).0, glue(&um).0);
            for i in 0..3 {
                let fd = (gp[i] - gm[i]) / (2.0 * h);
                assert!((fd - jac[i][j]).abs() < 1e-5 * fd.abs().max(1.0));
            }
        }
    }

    #[test]
    fn chart_map_dispatch() {
        let m = ChartMap::new(ChartId::Original, ChartId::BlownUp).unwrap();
        let p = ChartPoint::original([0.5, 3.0, -1.0]);
        let b = m.apply(&p).unwrap();
        let back = ChartMap::new(ChartId::BlownUp, ChartId::Original).unwrap().apply(&b).unwrap();
        assert!(close(&back.coords, &p.coords, 1e-14));
        assert!(ChartMap::new(ChartId::BlownUp, ChartId::BlownUp).is_err());
    }

    #[test]
    fn sphere_projection() {
        assert_eq!(project_sphere(&ChartPoint::original([0.0; 3])).unwrap(), [0.0; 3]);
        assert_eq!(project_sphere(&ChartPoint::original([3.0, 0.0, 0.0])).unwrap(), [0.75, 0.0, 0.0]);
        let q = project_sphere(&ChartPoint::original([1e12, -1e12, 5.0])).unwrap();
        assert!(q.iter().map(|v| v * v).sum::<f64>() < 1.0);
    }

    #[test]
    fn w_decreases_with_y() {
        let mut last = f64::INFINITY;
        for k in 1..200 {
            let y = 1e-3 * 1.2_f64.powi(k);
            let w = to_compactified(&ChartPoint::original([0.0, y, 0.0])).unwrap().coords[2];
            assert!(w < last);
            last = w;
        }
    }
}
