//! Generating function `N̂(z)` and transform `Ñ(α)` of the busy-period count.

use crate::distributions::ServiceDistribution;
use crate::error::{domain, Error, Result};
use crate::scalar::Real;

const MAX_BISECTIONS: usize = 400;

/// The unique `y ∈ (0, 1)` with `y = z b(λ (1 - y))`, i.e. `N̂(z)`.
///
/// Bisection on `g(y) = y - z b(λ(1 - y))`, which has `g(0) < 0 < g(z)` and a
/// single root. The bracket shrinks to `1e-13 · z` (a few ulps for `f32`), so
/// the result is accurate to `1e-13` absolutely and relatively.
pub fn pgf_fixed_point<T: Real>(lambda: T, dist: &ServiceDistribution<T>, z: T) -> Result<T> {
    if !(z > T::zero() && z < T::one()) {
        return domain(format!("fixed point needs z in (0, 1), got {z:?}"));
    }
    let rho = dist.load(&lambda);
    if !(rho < T::one()) {
        return Err(Error::Unstable {
            rho: rho.approx_f64(),
        });
    }
    Ok(solve(lambda, dist, z))
}

pub(crate) fn solve<T: Real>(lambda: T, dist: &ServiceDistribution<T>, z: T) -> T {
    let tol = T::lit(1e-13).max(T::epsilon() * T::lit(4.0)) * z;
    let g = |y: T| y - z * dist.lst(lambda * (T::one() - y));
    let (mut lo, mut hi) = (T::zero(), z);
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= tol {
            break;
        }
        let mid = (lo + hi) / T::lit(2.0);
        if g(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / T::lit(2.0)
}

/// `Ñ(α) = Σ e^{-αs} N(s)` for `α > 0`.
pub fn count_lst<T: Real>(lambda: T, dist: &ServiceDistribution<T>, alpha: T) -> Result<T> {
    if !(alpha > T::zero()) {
        return domain(format!("count transform needs alpha > 0, got {alpha:?}"));
    }
    pgf_fixed_point(lambda, dist, (-alpha).exp())
}

/// `Ñ(α)` extended by its limit `Ñ(0) = 1`; no validation.
pub(crate) fn count_lst_unchecked<T: Real>(
    lambda: T,
    dist: &ServiceDistribution<T>,
    alpha: T,
) -> T {
    if alpha <= T::zero() {
        T::one()
    } else {
        solve(lambda, dist, (-alpha).exp())
    }
}
