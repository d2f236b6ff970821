//! The busy-period count law `N(·)`.

use crate::distributions::ServiceDistribution;
use crate::error::{Error, Result};
use crate::scalar::Real;

use super::moments::count_moments;

const NEGATIVE_GUARD: f64 = 1e-9;

/// Truncation and moment settings for [`BusyPeriodLaw::with_options`].
#[derive(Clone, Debug, PartialEq)]
pub struct PmfOptions {
    /// Largest `s` for which `N(s)` is computed.
    pub s_max: usize,
    /// Stop early once the unaccounted mass drops below this.
    pub tail_tolerance: f64,
    /// Number of moments `η_1..η_n` to keep.
    pub moment_order: usize,
}

impl Default for PmfOptions {
    fn default() -> Self {
        Self {
            s_max: 200,
            tail_tolerance: 1e-9,
            moment_order: 3,
        }
    }
}

/// Truncated pmf `N(1..)` plus moments `η_1..` for one `(λ, B)`.
#[derive(Clone, Debug)]
pub struct BusyPeriodLaw<T = f64> {
    lambda: T,
    dist: ServiceDistribution<T>,
    s_max: usize,
    pmf: Vec<T>,
    tail_mass: T,
    moments: Vec<T>,
}

/// `N(1..=s_max)` with default tolerances.
pub fn count_pmf<T: Real>(
    lambda: T,
    dist: &ServiceDistribution<T>,
    s_max: usize,
) -> Result<BusyPeriodLaw<T>> {
    BusyPeriodLaw::new(lambda, dist.clone(), s_max)
}

impl<T: Real> BusyPeriodLaw<T> {
    pub fn new(lambda: T, dist: ServiceDistribution<T>, s_max: usize) -> Result<Self> {
        Self::with_options(
            lambda,
            dist,
            &PmfOptions {
                s_max,
                ..PmfOptions::default()
            },
        )
    }

    /// Runs the pmf recursion
    /// `N(s) = (1/(s-1)!) Σ_{m=1}^{s-1} (-λ)^m b^{(m)}(λ) B_{s-1,m}[N(1), 2!N(2), ...]`.
    ///
    /// Using `B_{n,m}[j! a_j] / n! = [z^n] (Σ a_j z^j)^m / m!`, the sum is carried
    /// as `Σ_m k_m [z^{s-1}] N̂(z)^m` with `k_m = (-λ)^m b^{(m)}(λ) / m!`, which
    /// keeps every term a probability and never forms a factorial.
    pub fn with_options(
        lambda: T,
        dist: ServiceDistribution<T>,
        opts: &PmfOptions,
    ) -> Result<Self> {
        if opts.s_max == 0 {
            return Err(Error::Domain("s_max must be >= 1".into()));
        }
        let rho = dist.load(&lambda);
        if !(lambda > T::zero()) || !(rho < T::one()) {
            return Err(Error::Unstable {
                rho: rho.approx_f64(),
            });
        }
        let s_max = opts.s_max;
        let tail_tol = T::lit(opts.tail_tolerance);
        let guard = T::lit(NEGATIVE_GUARD);
        let weights = dist.arrival_weights(lambda, s_max);

        // pmf[j] = N(j + 1); powers[m - 1][n] = [z^n] N̂(z)^m
        let mut pmf: Vec<T> = vec![weights[0]];
        let mut powers: Vec<Vec<T>> = Vec::new();
        let mut total = weights[0];
        for s in 2..=s_max {
            if T::one() - total < tail_tol {
                break;
            }
            let n = s - 1;
            // extend column n of every power m = 1..=n
            for m in 1..=n {
                if powers.len() < m {
                    powers.push(vec![T::zero(); s_max]);
                }
                let value = if m == 1 {
                    pmf[n - 1]
                } else {
                    let prev = &powers[m - 2];
                    (1..=n + 1 - m).fold(T::zero(), |acc, j| acc + pmf[j - 1] * prev[n - j])
                };
                powers[m - 1][n] = value;
            }
            let mut p = (1..=n).fold(T::zero(), |acc, m| acc + weights[m] * powers[m - 1][n]);
            if p.is_nan() || p < -guard {
                return Err(Error::NumericalInstability {
                    s,
                    value: p.approx_f64(),
                });
            }
            if p < T::zero() {
                p = T::zero();
            }
            pmf.push(p);
            total = total + p;
        }
        let tail_mass = (T::one() - total).max(T::zero());
        let moments = count_moments(&lambda, &dist, opts.moment_order)?;
        Ok(Self {
            lambda,
            dist,
            s_max,
            pmf,
            tail_mass,
            moments,
        })
    }

    /// `N(s)`, zero outside the computed range.
    pub fn prob(&self, s: usize) -> T {
        if s == 0 {
            T::zero()
        } else {
            self.pmf.get(s - 1).copied().unwrap_or_else(T::zero)
        }
    }

    /// `Σ_{s ≤ len} s^k N(s)`
    pub fn truncated_moment(&self, k: i32) -> T {
        self.pmf.iter().enumerate().fold(T::zero(), |acc, (i, &p)| {
            acc + T::count(i as u64 + 1).powi(k) * p
        })
    }

    /// `Σ_{s ≤ len} e^{-αs} N(s)`
    pub fn truncated_lst(&self, alpha: T) -> T {
        self.pmf.iter().enumerate().fold(T::zero(), |acc, (i, &p)| {
            acc + (-alpha * T::count(i as u64 + 1)).exp() * p
        })
    }

    /// `η_n`, `n >= 1`.
    pub fn eta(&self, n: usize) -> Option<T> {
        n.checked_sub(1).and_then(|i| self.moments.get(i)).copied()
    }
}

impl<T> BusyPeriodLaw<T> {
    /// `N(1), N(2), ...` as computed (may stop before `s_max` once the tail is negligible).
    pub fn pmf(&self) -> &[T] {
        &self.pmf
    }

    pub fn tail_mass(&self) -> &T {
        &self.tail_mass
    }

    /// `η_1, η_2, ...`
    pub fn moments(&self) -> &[T] {
        &self.moments
    }

    /// Requested truncation point; `N(s)` for `len < s <= s_max` is below the tail tolerance.
    pub fn s_max(&self) -> usize {
        self.s_max
    }

    pub fn lambda(&self) -> &T {
        &self.lambda
    }

    pub fn dist(&self) -> &ServiceDistribution<T> {
        &self.dist
    }
}
