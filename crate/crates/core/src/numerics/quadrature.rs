//! Gauss-Legendre nodes and Lagrange bases on [0, 1].

use crate::error::{Error, Result};

/// Gauss-Legendre nodes (ascending) and weights on [0, 1].
pub fn gauss_nodes(m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if m == 0 {
        return Err(Error::InvalidInput("need at least one Gauss node".into()));
    }
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        // Newton on P_m from the Chebyshev-like initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(m, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] -> [0, 1]
        nodes[i] = 0.5 * (1.0 - x);
        nodes[m - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[m - 1 - i] = 0.5 * w;
    }
    Ok((nodes, weights))
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Lagrange basis on the given nodes: values and derivatives at `s`.
pub fn lagrange(nodes: &[f64], s: f64) -> (Vec<f64>, Vec<f64>) {
    let n = nodes.len();
    let mut val = vec![0.0; n];
    let mut der = vec![0.0; n];
    for j in 0..n {
        let mut denom = 1.0;
        for k in 0..n {
            if k != j {
                denom *= nodes[j] - nodes[k];
            }
        }
        let mut prod = 1.0;
        for k in 0..n {
            if k != j {
                prod *= s - nodes[k];
            }
        }
        val[j] = prod / denom;
        let mut d = 0.0;
        for l in 0..n {
            if l == j {
                continue;
            }
            let mut p = 1.0;
            for k in 0..n {
                if k != j && k != l {
                    p *= s - nodes[k];
                }
            }
            d += p;
        }
        der[j] = d / denom;
    }
    (val, der)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_rule() {
        let (x, w) = gauss_nodes(2).unwrap();
        let r = 3f64.sqrt() / 6.0;
        assert!((x[0] - (0.5 - r)).abs() < 1e-15 && (x[1] - (0.5 + r)).abs() < 1e-15);
        assert!((w[0] - 0.5).abs() < 1e-15 && (w[1] - 0.5).abs() < 1e-15);
        let cubic: f64 = x.iter().zip(&w).map(|(t, w)| w * t.powi(3)).sum();
        assert!((cubic - 0.25).abs() < 1e-15);
    }

    #[test]
    fn exactness_up_to_degree_2m_minus_1() {
        for m in 2..=7 {
            let (x, w) = gauss_nodes(m).unwrap();
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            for deg in 0..2 * m {
                let q: f64 = x.iter().zip(&w).map(|(t, w)| w * t.powi(deg as i32)).sum();
                assert!((q - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "m={m} deg={deg}");
            }
        }
    }

    #[test]
    fn lagrange_partition_of_unity() {
        let nodes = [0.0, 0.25, 0.5, 0.75, 1.0];
        let (v, d) = lagrange(&nodes, 0.3);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(d.iter().sum::<f64>().abs() < 1e-12);
        let (v, _) = lagrange(&nodes, 0.5);
        assert!((v[2] - 1.0).abs() < 1e-15);
    }
}
