//! Joint Laplace–Stieltjes transform of `(E_v(X_1), ..., E_v(X_k))`,
//! `X_l = x_1 + ... + x_l`, and moments read off it numerically.

use std::collections::HashMap;

use serde::Serialize;

use crate::busy_period::count_lst_unchecked;
use crate::distributions::{check_stable, InitialWorkload, ServiceDistribution};
use crate::error::{invalid, Result};

use super::quadrature::integrate_unit;

const FIRST_ORDER_STEP: f64 = 1e-5;
const SECOND_ORDER_STEP: f64 = 2e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LstValue {
    pub lst_value: f64,
    /// Sum over the `k` integrals of `Ñ(s_l(·))` of the refinement disagreement.
    pub quadrature_error: f64,
}

/// `Ñ(·)` memoised on the argument rounded to `1e-14`.
struct CountTransform<'a> {
    lambda: f64,
    dist: &'a ServiceDistribution,
    cache: HashMap<u64, f64>,
}

impl CountTransform<'_> {
    fn at(&mut self, alpha: f64) -> f64 {
        let key = (alpha * 1e14).round().to_bits();
        let (lambda, dist) = (self.lambda, self.dist);
        *self
            .cache
            .entry(key)
            .or_insert_with(|| count_lst_unchecked(lambda, dist, alpha))
    }
}

fn check_inputs(xs: &[f64], alphas: &[f64]) -> Result<()> {
    if xs.is_empty() || xs.len() != alphas.len() {
        return invalid(format!(
            "need equally many (non-zero) x and alpha values, got {} and {}",
            xs.len(),
            alphas.len()
        ));
    }
    for (name, vals) in [("x", xs), ("alpha", alphas)] {
        if let Some(bad) = vals.iter().find(|a| !(**a >= 0.0 && a.is_finite())) {
            return invalid(format!(
                "{name} values must be finite and non-negative, got {bad}"
            ));
        }
    }
    Ok(())
}

/// `E exp{-Σ_l α_l E_v(X_l)}`.
///
/// With `w = Σ_l α_l X_l` and `s_l(u) = α_l x_l u + Σ_{j>l} α_j (x_l u + x_{l+1} + ... + x_j)`
/// the transform is `ṽ(λ[1 - Ñ(w)]) Π_l exp{λ x_l [∫_0^1 Ñ(s_l(u)) du - 1]}`:
/// segment `l` holds a Poisson(`λ x_l`) number of iid marks `(N, U)`, each
/// contributing `N s_l(U)` to the exponent. For fixed `v` the prefactor is
/// `exp{λ v [Ñ(w) - 1]}`, and `v = 0` gives 1.
pub fn finite_dim_lst(
    lambda: f64,
    dist: &ServiceDistribution,
    init: &InitialWorkload,
    xs: &[f64],
    alphas: &[f64],
) -> Result<LstValue> {
    check_stable(lambda, dist)?;
    check_inputs(xs, alphas)?;
    let k = xs.len();
    let mut count = CountTransform {
        lambda,
        dist,
        cache: HashMap::new(),
    };

    let mut end = 0.0;
    let w: f64 = xs
        .iter()
        .zip(alphas)
        .map(|(&x, &a)| {
            end += x;
            a * end
        })
        .sum();
    let mut value = init.lst(lambda * (1.0 - count.at(w)));
    let mut error = 0.0;

    for l in 0..k {
        if xs[l] == 0.0 {
            continue;
        }
        // s_l(u) = slope · u + offset
        let slope = xs[l] * alphas[l..].iter().sum::<f64>();
        let mut offset = 0.0;
        let mut tail = 0.0;
        for j in l + 1..k {
            tail += xs[j];
            offset += alphas[j] * tail;
        }
        let (mean_count, err) = integrate_unit(|u| count.at(slope * u + offset))?;
        value *= (lambda * xs[l] * (mean_count - 1.0)).exp();
        error += err;
    }
    Ok(LstValue {
        lst_value: value,
        quadrature_error: error,
    })
}

// one-sided second-order first-derivative weights at 0, 1, 2 steps
const STENCIL: [f64; 3] = [-1.5, 2.0, -0.5];

/// `E E_v(X_l)` for every `l`, as `-∂/∂α_l` of the transform at zero.
pub fn lst_means(
    lambda: f64,
    dist: &ServiceDistribution,
    init: &InitialWorkload,
    xs: &[f64],
) -> Result<Vec<f64>> {
    let h = FIRST_ORDER_STEP;
    let mut out = Vec::with_capacity(xs.len());
    for l in 0..xs.len() {
        let mut d = 0.0;
        for (i, c) in STENCIL.iter().enumerate() {
            let mut alphas = vec![0.0; xs.len()];
            alphas[l] = i as f64 * h;
            d += c * finite_dim_lst(lambda, dist, init, xs, &alphas)?.lst_value;
        }
        out.push(-d / h);
    }
    Ok(out)
}

/// `E E_v(x)` from the one-dimensional transform.
pub fn lst_mean(
    lambda: f64,
    dist: &ServiceDistribution,
    init: &InitialWorkload,
    x: f64,
) -> Result<f64> {
    Ok(lst_means(lambda, dist, init, &[x])?[0])
}

/// `E[E_v(X_i) E_v(X_j)]` for all `i, j`, as mixed second derivatives of the
/// transform at zero (tensor product of the one-sided stencil).
pub fn lst_cross_moments(
    lambda: f64,
    dist: &ServiceDistribution,
    init: &InitialWorkload,
    xs: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let h = SECOND_ORDER_STEP;
    let k = xs.len();
    let mut out = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let mut d = 0.0;
            for (a, ca) in STENCIL.iter().enumerate() {
                for (b, cb) in STENCIL.iter().enumerate() {
                    let mut alphas = vec![0.0; k];
                    alphas[i] += a as f64 * h;
                    alphas[j] += b as f64 * h;
                    d += ca * cb * finite_dim_lst(lambda, dist, init, xs, &alphas)?.lst_value;
                }
            }
            out[i][j] = d / (h * h);
            out[j][i] = out[i][j];
        }
    }
    Ok(out)
}
