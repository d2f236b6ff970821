//! Mean, variance and auto-covariance of `E_v(·)`.

use serde::Serialize;

use crate::busy_period::count_moments_closed_form;
use crate::distributions::{InitialWorkload, ServiceDistribution};
use crate::error::{domain, invalid, Result};
use crate::scalar::{Real, Scalar};

/// The quantities the second-order formulas depend on: `λ`, `η_1`, `η_2` and
/// the first two moments of `v`.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondOrderModel<T = f64> {
    pub lambda: T,
    pub eta1: T,
    pub eta2: T,
    pub v_mean: T,
    pub v_variance: T,
}

impl<T: Scalar> SecondOrderModel<T> {
    pub fn new(lambda: T, dist: &ServiceDistribution<T>, v_mean: T, v_variance: T) -> Result<Self> {
        if v_mean < T::zero() || v_variance < T::zero() {
            return invalid(format!(
                "v needs non-negative mean and variance, got {v_mean:?}, {v_variance:?}"
            ));
        }
        let [eta1, eta2, _] = count_moments_closed_form(&lambda, dist)?;
        Ok(Self {
            lambda,
            eta1,
            eta2,
            v_mean,
            v_variance,
        })
    }

    pub fn fixed(lambda: T, dist: &ServiceDistribution<T>, v: T) -> Result<Self> {
        Self::new(lambda, dist, v, T::zero())
    }

    /// `v` distributed as the stationary workload of the same queue.
    pub fn stationary(lambda: T, dist: &ServiceDistribution<T>) -> Result<Self> {
        let [eta1, _, _] = count_moments_closed_form(&lambda, dist)?;
        // 1/(1-ρ) = η_1
        let c = |k: u64| T::count(k);
        let mean = lambda.clone() * dist.moment(2) * eta1.clone() / c(2);
        let variance = mean.clone() * mean.clone() + lambda.clone() * dist.moment(3) * eta1 / c(3);
        Self::new(lambda, dist, mean, variance)
    }

    /// `E[E_v(x)] = λ x (E v + x/2) η_1`
    pub fn mean(&self, x: &T) -> T {
        let half = x.clone() / T::count(2);
        self.lambda.clone() * x.clone() * (self.v_mean.clone() + half) * self.eta1.clone()
    }

    /// `Var E_v(x) = λ x² (E v + x/3) η_2 + (λ x η_1)² Var v`
    pub fn variance(&self, x: &T) -> T {
        self.autocovariance(x, &T::zero())
    }

    /// `Cov(E_v(x_1), E_v(x_1 + x_2))`.
    pub fn autocovariance(&self, x1: &T, x2: &T) -> T {
        let c = |k: u64| T::count(k);
        let v = self.v_mean.clone();
        let (a, b) = (x1.clone(), x2.clone());
        let poly = c(2) * a.powi_exact(3)
            + c(6) * v.clone() * a.powi_exact(2)
            + c(3) * a.powi_exact(2) * b.clone()
            + c(6) * v * a.clone() * b.clone();
        let within = self.lambda.clone() * self.eta2.clone() * poly / c(6);
        let across = self.lambda.powi_exact(2)
            * self.eta1.powi_exact(2)
            * a.clone()
            * (a + b)
            * self.v_variance.clone();
        within + across
    }
}

impl<T: Real> SecondOrderModel<T> {
    /// `Corr(E_v(x_1), E_v(x_1 + x_2))`; undefined at `x_1 = 0`.
    pub fn autocorrelation(&self, x1: T, x2: T) -> Result<T> {
        if !(x1 > T::zero()) {
            return domain(format!("autocorrelation needs x1 > 0, got {x1:?}"));
        }
        let cov = self.autocovariance(&x1, &x2);
        Ok(cov / (self.variance(&x1) * self.variance(&(x1 + x2))).sqrt())
    }
}

/// The fixed-`v` correlation written without `λ` or `B(·)`.
pub fn fixed_v_autocorrelation<T: Real>(v: T, x1: T, x2: T) -> Result<T> {
    if !(x1 > T::zero()) {
        return domain(format!("autocorrelation needs x1 > 0, got {x1:?}"));
    }
    let l = T::lit;
    let num =
        l(2.0) * x1.powi(3) + l(6.0) * v * x1 * x1 + l(3.0) * x1 * x1 * x2 + l(6.0) * v * x1 * x2;
    let den = l(6.0) * x1 * (x1 + x2) * ((v + x1 / l(3.0)) * (v + (x1 + x2) / l(3.0))).sqrt();
    Ok(num / den)
}

/// Stationary-`v` mean in the form `(λx / (2(1-ρ))) (λμ_2/(1-ρ) + x)`.
pub fn stationary_mean_closed_form<T: Scalar>(
    lambda: &T,
    dist: &ServiceDistribution<T>,
    x: &T,
) -> T {
    let gap = T::one() - dist.load(lambda);
    let two = T::count(2);
    lambda.clone() * x.clone() / (two * gap.clone())
        * (lambda.clone() * dist.moment(2) / gap + x.clone())
}

fn model(
    lambda: f64,
    dist: &ServiceDistribution,
    init: &InitialWorkload,
) -> Result<SecondOrderModel> {
    let (mean, variance) = (init.mean(), init.variance());
    if !mean.is_finite() || !variance.is_finite() {
        return domain("initial workload needs a finite mean and variance");
    }
    SecondOrderModel::new(lambda, dist, mean, variance)
}

fn check_x(x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        invalid(format!("x must be finite and non-negative, got {x}"))
    }
}

pub fn mean_externality(
    lambda: f64,
    dist: &ServiceDistribution,
    init: &InitialWorkload,
    x: f64,
) -> Result<f64> {
    check_x(x)?;
    Ok(model(lambda, dist, init)?.mean(&x))
}

pub fn variance_externality(
    lambda: f64,
    dist: &ServiceDistribution,
    init: &InitialWorkload,
    x: f64,
) -> Result<f64> {
    check_x(x)?;
    Ok(model(lambda, dist, init)?.variance(&x))
}

pub fn autocovariance(
    lambda: f64,
    dist: &ServiceDistribution,
    init: &InitialWorkload,
    x1: f64,
    x2: f64,
) -> Result<f64> {
    check_x(x1)?;
    check_x(x2)?;
    Ok(model(lambda, dist, init)?.autocovariance(&x1, &x2))
}

pub fn autocorrelation(
    lambda: f64,
    dist: &ServiceDistribution,
    init: &InitialWorkload,
    x1: f64,
    x2: f64,
) -> Result<f64> {
    check_x(x2)?;
    model(lambda, dist, init)?.autocorrelation(x1, x2)
}

/// Second-order summary of `(E_v(x_1), E_v(x_1 + x_2))`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentReport {
    pub lambda: f64,
    pub dist: ServiceDistribution,
    pub v_mean: f64,
    pub v_variance: f64,
    pub x1: f64,
    pub x2: f64,
    pub mean: f64,
    pub variance: f64,
    pub covariance: f64,
    /// `None` when `x_1 = 0`.
    pub correlation: Option<f64>,
}

impl MomentReport {
    pub fn compute(
        lambda: f64,
        dist: &ServiceDistribution,
        init: &InitialWorkload,
        x1: f64,
        x2: f64,
    ) -> Result<Self> {
        check_x(x1)?;
        check_x(x2)?;
        let m = model(lambda, dist, init)?;
        Ok(Self {
            lambda,
            dist: dist.clone(),
            v_mean: m.v_mean,
            v_variance: m.v_variance,
            x1,
            x2,
            mean: m.mean(&x1),
            variance: m.variance(&x1),
            covariance: m.autocovariance(&x1, &x2),
            correlation: m.autocorrelation(x1, x2).ok(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{ratio, Rational};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn exp1() -> ServiceDistribution {
        ServiceDistribution::exponential(1.0).unwrap()
    }

    #[test]
    fn documented_mean() {
        let init = InitialWorkload::fixed(1.0).unwrap();
        assert_relative_eq!(
            mean_externality(0.5, &exp1(), &init, 2.0).unwrap(),
            4.0,
            max_relative = 1e-15
        );
        assert_eq!(mean_externality(0.5, &exp1(), &init, 0.0).unwrap(), 0.0);
        assert_eq!(variance_externality(0.5, &exp1(), &init, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn correlation_example() {
        // (2 + 3) / (6·2·√(1/3 · 2/3)) = 5 / (4√2)
        let r = fixed_v_autocorrelation(0.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(r, 5.0 / (4.0 * 2f64.sqrt()), max_relative = 1e-15);
        let m = SecondOrderModel::fixed(0.3, &exp1(), 0.0).unwrap();
        assert_relative_eq!(
            m.autocorrelation(1.0, 1.0).unwrap(),
            r,
            max_relative = 1e-14
        );
        assert!(m.autocorrelation(0.0, 1.0).is_err());
    }

    #[test]
    fn self_covariance_and_limits() {
        let m = SecondOrderModel::new(0.4, &exp1(), 1.2, 0.7).unwrap();
        assert_eq!(m.autocovariance(&1.5, &0.0), m.variance(&1.5));
        assert_eq!(m.autocovariance(&0.0, &2.0), 0.0);
        assert_relative_eq!(
            m.autocorrelation(1.5, 0.0).unwrap(),
            1.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn stationary_mean_form_is_exact() {
        let dist = ServiceDistribution::erlang(3, ratio(5, 2)).unwrap();
        let lambda = ratio(1, 2);
        let m = SecondOrderModel::stationary(lambda.clone(), &dist).unwrap();
        for x in [ratio(0, 1), ratio(1, 3), ratio(2, 1), ratio(7, 2)] {
            assert_eq!(m.mean(&x), stationary_mean_closed_form(&lambda, &dist, &x));
        }
        let init =
            InitialWorkload::stationary(0.5, ServiceDistribution::erlang(3, 2.5).unwrap()).unwrap();
        let m64 = SecondOrderModel::stationary(0.5, &ServiceDistribution::erlang(3, 2.5).unwrap())
            .unwrap();
        assert_relative_eq!(m64.v_mean, init.mean(), max_relative = 1e-14);
        assert_relative_eq!(m64.v_variance, init.variance(), max_relative = 1e-14);
    }

    #[test]
    fn covariance_algebra_in_rationals() {
        // Var(E(x1+x2)) = Var(E(x1)) + 2 Cov(E(x1), Δ) + Var(Δ), with
        // Var Δ = λ x2² (v + x1 + x2/3) η_2 for fixed v
        let dist = ServiceDistribution::hyper_exponential(
            vec![ratio(1, 3), ratio(2, 3)],
            vec![ratio(1, 1), ratio(4, 1)],
        )
        .unwrap();
        let lambda = ratio(3, 5);
        let v = ratio(5, 4);
        let m = SecondOrderModel::fixed(lambda.clone(), &dist, v.clone()).unwrap();
        let (x1, x2) = (ratio(2, 3), ratio(3, 7));
        let var_delta = lambda
            * x2.clone()
            * x2.clone()
            * (v + x1.clone() + x2.clone() / ratio(3, 1))
            * m.eta2.clone();
        let cov_delta = m.autocovariance(&x1, &x2) - m.variance(&x1);
        let lhs: Rational = m.variance(&(x1.clone() + x2));
        assert_eq!(lhs, m.variance(&x1) + ratio(2, 1) * cov_delta + var_delta);
    }

    proptest! {
        #[test]
        fn correlation_invariant_in_lambda_and_law(
            v in 0.0f64..3.0, x1 in 0.01f64..4.0, x2 in 0.0f64..4.0, rho in 0.05f64..0.95, which in 0usize..4,
        ) {
            let dist = [
                ServiceDistribution::exponential(2.0).unwrap(),
                ServiceDistribution::deterministic(0.7).unwrap(),
                ServiceDistribution::erlang(4, 3.0).unwrap(),
                ServiceDistribution::hyper_exponential(vec![0.3, 0.7], vec![0.5, 6.0]).unwrap(),
            ][which].clone();
            let m = SecondOrderModel::fixed(rho / dist.mean(), &dist, v).unwrap();
            let r = m.autocorrelation(x1, x2).unwrap();
            prop_assert!((r - fixed_v_autocorrelation(v, x1, x2).unwrap()).abs() < 1e-12);
            prop_assert!(r > 0.0 && r <= 1.0 + 1e-12);
            let c = m.autocovariance(&x1, &x2);
            prop_assert!(c * c <= m.variance(&x1) * m.variance(&(x1 + x2)) * (1.0 + 1e-12));
        }

        #[test]
        fn random_v_is_total_covariance(a in 0.0f64..3.0, b in 0.0f64..3.0, p in 0.0f64..1.0, x1 in 0.0f64..3.0, x2 in 0.0f64..3.0) {
            // two-point v: mix the fixed-v formulas by hand
            let dist = ServiceDistribution::erlang(2, 3.0).unwrap();
            let fa = SecondOrderModel::fixed(0.9, &dist, a).unwrap();
            let fb = SecondOrderModel::fixed(0.9, &dist, b).unwrap();
            let y = x1 + x2;
            let within = p * fa.autocovariance(&x1, &x2) + (1.0 - p) * fb.autocovariance(&x1, &x2);
            let m1 = p * fa.mean(&x1) + (1.0 - p) * fb.mean(&x1);
            let m2 = p * fa.mean(&y) + (1.0 - p) * fb.mean(&y);
            let across = p * fa.mean(&x1) * fa.mean(&y) + (1.0 - p) * fb.mean(&x1) * fb.mean(&y) - m1 * m2;
            let mean_v = p * a + (1.0 - p) * b;
            let var_v = p * (1.0 - p) * (a - b).powi(2);
            let random = SecondOrderModel::new(0.9, &dist, mean_v, var_v).unwrap();
            let expected = within + across;
            prop_assert!((random.autocovariance(&x1, &x2) - expected).abs() <= 1e-10 * expected.abs().max(1.0));
            let zero = SecondOrderModel::new(0.9, &dist, a, 0.0).unwrap();
            prop_assert_eq!(zero.autocovariance(&x1, &x2), fa.autocovariance(&x1, &x2));
        }
    }
}
