//! Moments `η_n = E[N^n]` of the number of customers served in a busy period.

use crate::distributions::ServiceDistribution;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::bell::{bell_table, binomials};

fn one_minus_rho<T: Scalar>(lambda: &T, dist: &ServiceDistribution<T>) -> Result<T> {
    let rho = dist.load(lambda);
    if !(rho < T::one()) || !(*lambda > T::zero()) {
        return Err(Error::Unstable {
            rho: rho.approx_f64(),
        });
    }
    Ok(T::one() - rho)
}

/// `η_1, ..., η_{n_max}` from the Bell-polynomial recursion obtained by
/// differentiating `Ñ(α) = e^{-α} b(λ(1 - Ñ(α)))` at zero.
///
/// Exact when `T` is exact, e.g. [`crate::Rational`].
pub fn count_moments<T: Scalar>(
    lambda: &T,
    dist: &ServiceDistribution<T>,
    n_max: usize,
) -> Result<Vec<T>> {
    let gap = one_minus_rho(lambda, dist)?;
    // λ^m μ_m
    let scaled_mu: Vec<T> = (0..=n_max)
        .map(|m| lambda.powi_exact(m) * dist.moment(m))
        .collect();
    let binom = binomials::<T>(n_max);
    let mut eta: Vec<T> = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        // B̌ arguments: -η_1, η_2, -η_3, ...
        let xs: Vec<T> = eta
            .iter()
            .enumerate()
            .map(|(i, e)| T::sign(i + 1) * e.clone())
            .collect();
        let table = bell_table(n, &xs);
        let inner = |k: usize| {
            (1..=k).fold(T::zero(), |acc, m| {
                acc + scaled_mu[m].clone() * table[k][m].clone()
            })
        };
        let mut brace = T::sign(n);
        for k in 1..n {
            brace = brace + binom[n][k].clone() * T::sign(n - k) * inner(k);
        }
        for m in 2..=n {
            brace = brace + scaled_mu[m].clone() * table[n][m].clone();
        }
        eta.push(T::sign(n) * brace / gap.clone());
    }
    Ok(eta)
}

/// `η_n` alone.
pub fn count_moment<T: Scalar>(lambda: &T, dist: &ServiceDistribution<T>, n: usize) -> Result<T> {
    if n == 0 {
        return Err(Error::Domain("moment order must be >= 1".into()));
    }
    Ok(count_moments(lambda, dist, n)?.pop().expect("n >= 1"))
}

/// Closed forms for `η_1, η_2, η_3`.
pub fn count_moments_closed_form<T: Scalar>(
    lambda: &T,
    dist: &ServiceDistribution<T>,
) -> Result<[T; 3]> {
    let gap = one_minus_rho(lambda, dist)?;
    let rho = T::one() - gap.clone();
    let lm2 = lambda.powi_exact(2) * dist.moment(2);
    let lm3 = lambda.powi_exact(3) * dist.moment(3);
    let c = |k: u64| T::count(k);
    let eta1 = T::one() / gap.clone();
    let eta2 = eta1.clone()
        * (T::one() + c(2) * rho.clone() / gap.clone() + lm2.clone() / gap.powi_exact(2));
    let eta3 = eta1.clone()
        * (T::one()
            + c(3) * rho.clone() / gap.clone()
            + c(3) * (rho * eta2.clone() + lm2.clone() / gap.powi_exact(2))
            + c(3) * lm2 * eta2.clone() / gap.clone()
            + lm3 / gap.powi_exact(3));
    Ok([eta1, eta2, eta3])
}

/// First order `n <= 3` at which the recursion and the closed forms disagree
/// by more than `rel_tol` (relative), if any.
pub fn first_inconsistent_order(
    lambda: f64,
    dist: &ServiceDistribution,
    rel_tol: f64,
) -> Result<Option<usize>> {
    let rec = count_moments(&lambda, dist, 3)?;
    let closed = count_moments_closed_form(&lambda, dist)?;
    Ok(rec
        .iter()
        .zip(closed.iter())
        .position(|(r, c)| (r - c).abs() > rel_tol * c.abs())
        .map(|i| i + 1))
}
