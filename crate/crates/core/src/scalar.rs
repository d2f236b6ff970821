//! Numeric abstractions shared by the closed-form machinery.
//!
//! Everything that only needs field arithmetic (Bell polynomials, the moment
//! recursion, the second-order externality formulas, hitting-time recursions)
//! is written against [`Scalar`], so it runs unchanged on `f32`, `f64` and on
//! exact rationals. Anything involving transforms or roots needs [`Real`].

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// Field-like scalar: `f32`, `f64`, [`BigRational`], ...
pub trait Scalar:
    Num + Clone + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
    /// Exact embedding of a small non-negative integer.
    fn count(n: u64) -> Self {
        Self::from_u64(n).expect("integer literal must be representable")
    }

    fn negated(self) -> Self {
        Self::zero() - self
    }

    /// `(-1)^k`
    fn sign(k: usize) -> Self {
        if k % 2 == 0 {
            Self::one()
        } else {
            Self::zero() - Self::one()
        }
    }

    fn powi_exact(&self, k: usize) -> Self {
        let mut acc = Self::one();
        for _ in 0..k {
            acc = acc * self.clone();
        }
        acc
    }

    fn approx_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Tolerance test that also works without `abs` (rationals).
    fn close_to(&self, other: &Self, tol: &Self) -> bool {
        let d = self.clone() - other.clone();
        d <= tol.clone() && d.negated() <= tol.clone()
    }
}

impl<T> Scalar for T where
    T: Num + Clone + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
}

/// Floating-point scalar (`f32` or `f64`).
pub trait Real: Scalar + Float {
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite literal")
    }
}

impl<T: Scalar + Float> Real for T {}

/// Exact rational arithmetic used for cross-checking the recursions.
pub type Rational = BigRational;

/// `n / d` as an exact rational.
pub fn ratio(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}
