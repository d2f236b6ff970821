//! Gauss–Legendre quadrature on `[0, 1]` with one refinement check.

use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const NODES: usize = 64;
const REFINEMENT_TOLERANCE: f64 = 1e-8;

/// Nodes and weights on `[-1, 1]`, by Newton iteration on `P_n` (`n >= 1`).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // P_n(x) and P_n'(x) by the three-term recurrence
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn table() -> &'static (Vec<f64>, Vec<f64>) {
    static TABLE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    TABLE.get_or_init(|| gauss_legendre(NODES))
}

fn rule(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
    let (nodes, weights) = table();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    nodes
        .iter()
        .zip(weights)
        .map(|(&x, &w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// `∫_0^1 f`, as the 64-node rule on the two halves, with the difference
/// against the single 64-node rule as error estimate.
pub fn integrate_unit(mut f: impl FnMut(f64) -> f64) -> Result<(f64, f64)> {
    let coarse = rule(&mut f, 0.0, 1.0);
    let fine = rule(&mut f, 0.0, 0.5) + rule(&mut f, 0.5, 1.0);
    let disagreement = (fine - coarse).abs();
    if !(disagreement <= REFINEMENT_TOLERANCE) {
        return Err(Error::Precision { disagreement });
    }
    Ok((fine, disagreement))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn matches_reference_nodes() {
        // numpy.polynomial.legendre.leggauss(64)
        let (x, w) = gauss_legendre(64);
        assert_relative_eq!(x[63], 0.9993050417357722, max_relative = 1e-15);
        assert_relative_eq!(w[63], 0.0017832807216942152, max_relative = 1e-11);
        assert_relative_eq!(x[32], 0.02435029266342443, max_relative = 1e-13);
        assert_relative_eq!(w[32], 0.04869095700913975, max_relative = 1e-13);
        assert_relative_eq!(w.iter().sum::<f64>(), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn exact_for_high_degree_polynomials() {
        let (v, _) = integrate_unit(|u| u.powi(127) * 128.0).unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-13);
        let (v, err) = integrate_unit(|u| (3.0 * u).exp()).unwrap();
        assert_relative_eq!(v, ((3.0f64).exp() - 1.0) / 3.0, max_relative = 1e-14);
        assert!(err < 1e-12);
    }

    #[test]
    fn flags_rough_integrands() {
        assert!(matches!(
            integrate_unit(|u| (u - 0.3).abs().sqrt()),
            Err(Error::Precision { .. })
        ));
    }
}
