//! Service-time and initial-workload laws.
//!
//! Each law exposes exactly the functionals the externality formulas need:
//! raw moments, the Laplace–Stieltjes transform `b(s)` and its derivatives,
//! and samplers. Moments are available for any [`Scalar`] (so the recursions
//! can be checked in exact arithmetic); transforms need a [`Real`]; samplers
//! are `f64` only.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::RngStream;
use crate::scalar::{Real, Scalar};

/// Parametric job-size law `B(·)`.
#[derive(Clone, Debug, PartialEq)]
pub enum ServiceDistribution<T = f64> {
    Exponential { rate: T },
    Deterministic { size: T },
    Erlang { shape: u32, rate: T },
    HyperExponential { weights: Vec<T>, rates: Vec<T> },
}

fn positive<T: Scalar>(x: &T, what: &str) -> Result<()> {
    if *x > T::zero() {
        Ok(())
    } else {
        invalid(format!("{what} must be positive, got {x:?}"))
    }
}

impl<T: Scalar> ServiceDistribution<T> {
    pub fn exponential(rate: T) -> Result<Self> {
        positive(&rate, "exponential rate")?;
        Ok(Self::Exponential { rate })
    }

    pub fn deterministic(size: T) -> Result<Self> {
        positive(&size, "deterministic size")?;
        Ok(Self::Deterministic { size })
    }

    pub fn erlang(shape: u32, rate: T) -> Result<Self> {
        if shape == 0 {
            return invalid("erlang shape must be >= 1");
        }
        positive(&rate, "erlang rate")?;
        Ok(Self::Erlang { shape, rate })
    }

    pub fn hyper_exponential(weights: Vec<T>, rates: Vec<T>) -> Result<Self> {
        if weights.is_empty() || weights.len() != rates.len() {
            return invalid("hyperexp needs equally many (non-zero) weights and rates");
        }
        for r in &rates {
            positive(r, "hyperexp rate")?;
        }
        let mut total = T::zero();
        for w in &weights {
            if *w < T::zero() || *w > T::one() {
                return invalid(format!("hyperexp weight {w:?} is not a probability"));
            }
            total = total + w.clone();
        }
        let tol = T::from_f64(1e-12).unwrap_or_else(T::zero);
        if !total.close_to(&T::one(), &tol) {
            return invalid(format!("hyperexp weights sum to {total:?}, expected 1"));
        }
        Ok(Self::HyperExponential { weights, rates })
    }

    /// Raw moment `μ_k = E[B^k]` in closed form (`μ_0 = 1`).
    pub fn moment(&self, k: usize) -> T {
        let factorial = |k: usize| (1..=k as u64).fold(T::one(), |acc, j| acc * T::count(j));
        match self {
            Self::Exponential { rate } => factorial(k) / rate.powi_exact(k),
            Self::Deterministic { size } => size.powi_exact(k),
            Self::Erlang { shape, rate } => {
                let rising =
                    (0..k as u64).fold(T::one(), |acc, j| acc * T::count(*shape as u64 + j));
                rising / rate.powi_exact(k)
            }
            Self::HyperExponential { weights, rates } => {
                weights.iter().zip(rates).fold(T::zero(), |acc, (w, r)| {
                    acc + w.clone() * factorial(k) / r.powi_exact(k)
                })
            }
        }
    }

    pub fn mean(&self) -> T {
        self.moment(1)
    }

    /// Traffic intensity `ρ = λ μ_1`.
    pub fn load(&self, lambda: &T) -> T {
        lambda.clone() * self.mean()
    }

    /// Short identifier used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Exponential { .. } => "exponential",
            Self::Deterministic { .. } => "deterministic",
            Self::Erlang { .. } => "erlang",
            Self::HyperExponential { .. } => "hyperexp",
        }
    }
}

impl<T: Real> ServiceDistribution<T> {
    /// `b(s) = E[e^{-sB}]`.
    pub fn lst(&self, s: T) -> T {
        match self {
            Self::Exponential { rate } => *rate / (*rate + s),
            Self::Deterministic { size } => (-s * *size).exp(),
            Self::Erlang { shape, rate } => (*rate / (*rate + s)).powi(*shape as i32),
            Self::HyperExponential { weights, rates } => weights
                .iter()
                .zip(rates)
                .fold(T::zero(), |acc, (&w, &r)| acc + w * r / (r + s)),
        }
    }

    /// `1 - b(s)` without cancellation for small `s`.
    pub fn lst_complement(&self, s: T) -> T {
        match self {
            Self::Exponential { rate } => s / (*rate + s),
            Self::Deterministic { size } => -(-s * *size).exp_m1(),
            Self::Erlang { shape, rate } => {
                -(-T::count(*shape as u64) * (s / *rate).ln_1p()).exp_m1()
            }
            Self::HyperExponential { weights, rates } => weights
                .iter()
                .zip(rates)
                .fold(T::zero(), |acc, (&w, &r)| acc + w * s / (r + s)),
        }
    }

    /// `b^{(m)}(s) = E[(-B)^m e^{-sB}]`; `m = 0` is [`Self::lst`].
    pub fn lst_derivative(&self, m: usize, s: T) -> T {
        if m == 0 {
            return self.lst(s);
        }
        let sign = T::sign(m);
        let exp_deriv = |rate: T| {
            let fact = (1..=m as u64).fold(T::one(), |acc, j| acc * T::count(j));
            fact * rate / (rate + s).powi(m as i32 + 1)
        };
        match self {
            Self::Exponential { rate } => sign * exp_deriv(*rate),
            Self::Deterministic { size } => sign * size.powi(m as i32) * (-s * *size).exp(),
            Self::Erlang { shape, rate } => {
                let rising =
                    (0..m as u64).fold(T::one(), |acc, j| acc * T::count(*shape as u64 + j));
                sign * rising * rate.powi(*shape as i32)
                    / (*rate + s).powi((*shape as usize + m) as i32)
            }
            Self::HyperExponential { weights, rates } => {
                sign * weights
                    .iter()
                    .zip(rates)
                    .fold(T::zero(), |acc, (&w, &r)| acc + w * exp_deriv(r))
            }
        }
    }

    /// `k_m = (-t)^m b^{(m)}(t) / m!` for `m = 0..=m_max`: the probability that
    /// exactly `m` Poisson(`t`) arrivals occur during one service time.
    ///
    /// Built by ratio recurrences, so no factorial is ever formed.
    pub fn arrival_weights(&self, t: T, m_max: usize) -> Vec<T> {
        let geometric = |rate: T| {
            let q = t / (rate + t);
            let mut w = rate / (rate + t);
            let mut out = Vec::with_capacity(m_max + 1);
            for _ in 0..=m_max {
                out.push(w);
                w = w * q;
            }
            out
        };
        match self {
            Self::Exponential { rate } => geometric(*rate),
            Self::Deterministic { size } => {
                let a = t * *size;
                let mut w = (-a).exp();
                let mut out = Vec::with_capacity(m_max + 1);
                for m in 0..=m_max {
                    out.push(w);
                    w = w * a / T::count(m as u64 + 1);
                }
                out
            }
            Self::Erlang { shape, rate } => {
                let q = t / (*rate + t);
                let mut w = (*rate / (*rate + t)).powi(*shape as i32);
                let mut out = Vec::with_capacity(m_max + 1);
                for m in 0..=m_max as u64 {
                    out.push(w);
                    w = w * q * T::count(*shape as u64 + m) / T::count(m + 1);
                }
                out
            }
            Self::HyperExponential { weights, rates } => {
                let mut out = vec![T::zero(); m_max + 1];
                for (&p, &r) in weights.iter().zip(rates) {
                    for (o, g) in out.iter_mut().zip(geometric(r)) {
                        *o = *o + p * g;
                    }
                }
                out
            }
        }
    }
}

impl ServiceDistribution<f64> {
    /// One draw from `B(·)`.
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match self {
            Self::Exponential { rate } => exp_draw(*rate, rng),
            Self::Deterministic { size } => *size,
            Self::Erlang { shape, rate } => gamma_draw(*shape as f64, *rate, rng),
            Self::HyperExponential { weights, rates } => {
                let i = pick(weights.iter().copied(), rng);
                exp_draw(rates[i], rng)
            }
        }
    }

    /// One draw from the equilibrium (integrated-tail) law with density
    /// `(1 - B(t)) / μ_1`.
    pub fn sample_equilibrium(&self, rng: &mut RngStream) -> f64 {
        match self {
            Self::Exponential { rate } => exp_draw(*rate, rng),
            Self::Deterministic { size } => size * rng.random::<f64>(),
            // mixture of Erlang(j, rate), j = 1..=shape, equal weights
            Self::Erlang { shape, rate } => {
                let j = rng.random_range(1..=*shape);
                gamma_draw(j as f64, *rate, rng)
            }
            // mixture of the same exponentials with weights ∝ w_i / r_i
            Self::HyperExponential { weights, rates } => {
                let i = pick(weights.iter().zip(rates).map(|(w, r)| w / r), rng);
                exp_draw(rates[i], rng)
            }
        }
    }
}

fn exp_draw(rate: f64, rng: &mut RngStream) -> f64 {
    Exp::new(rate).expect("validated rate").sample(rng)
}

fn gamma_draw(shape: f64, rate: f64, rng: &mut RngStream) -> f64 {
    Gamma::new(shape, 1.0 / rate)
        .expect("validated shape")
        .sample(rng)
}

/// Index drawn proportionally to (unnormalised) weights.
fn pick(weights: impl Iterator<Item = f64> + Clone, rng: &mut RngStream) -> usize {
    let total: f64 = weights.clone().sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            last = i;
            if u < w {
                return i;
            }
            u -= w;
        }
    }
    last
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum DistributionSpec {
    Exponential { rate: f64 },
    Deterministic { d: f64 },
    Erlang { shape: u32, rate: f64 },
    Hyperexp { weights: Vec<f64>, rates: Vec<f64> },
}

impl TryFrom<DistributionSpec> for ServiceDistribution<f64> {
    type Error = Error;

    fn try_from(spec: DistributionSpec) -> Result<Self> {
        match spec {
            DistributionSpec::Exponential { rate } => Self::exponential(rate),
            DistributionSpec::Deterministic { d } => Self::deterministic(d),
            DistributionSpec::Erlang { shape, rate } => Self::erlang(shape, rate),
            DistributionSpec::Hyperexp { weights, rates } => {
                Self::hyper_exponential(weights, rates)
            }
        }
    }
}

impl From<&ServiceDistribution<f64>> for DistributionSpec {
    fn from(d: &ServiceDistribution<f64>) -> Self {
        match d.clone() {
            ServiceDistribution::Exponential { rate } => Self::Exponential { rate },
            ServiceDistribution::Deterministic { size } => Self::Deterministic { d: size },
            ServiceDistribution::Erlang { shape, rate } => Self::Erlang { shape, rate },
            ServiceDistribution::HyperExponential { weights, rates } => {
                Self::Hyperexp { weights, rates }
            }
        }
    }
}

impl Serialize for ServiceDistribution<f64> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DistributionSpec::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ServiceDistribution<f64> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = DistributionSpec::deserialize(d)?;
        ServiceDistribution::try_from(spec).map_err(serde::de::Error::custom)
    }
}

/// A user-supplied random initial workload `v`.
pub trait WorkloadLaw: fmt::Debug + Send + Sync {
    fn sample(&self, rng: &mut RngStream) -> f64;
    /// `ṽ(t) = E[e^{-tv}]`
    fn lst(&self, t: f64) -> f64;
    fn mean(&self) -> f64;
    fn variance(&self) -> f64;
}

impl WorkloadLaw for ServiceDistribution<f64> {
    fn sample(&self, rng: &mut RngStream) -> f64 {
        ServiceDistribution::sample(self, rng)
    }

    fn lst(&self, t: f64) -> f64 {
        ServiceDistribution::lst(self, t)
    }

    fn mean(&self) -> f64 {
        self.moment(1)
    }

    fn variance(&self) -> f64 {
        let m = self.moment(1);
        self.moment(2) - m * m
    }
}

/// Workload found by the tagged customer at time zero.
#[derive(Clone, Debug)]
pub enum InitialWorkload {
    Fixed(f64),
    Random(Arc<dyn WorkloadLaw>),
    /// Stationary workload of the M/G/1 queue with the given parameters.
    Stationary {
        lambda: f64,
        dist: ServiceDistribution,
    },
}

impl InitialWorkload {
    pub fn fixed(v: f64) -> Result<Self> {
        if !(v >= 0.0 && v.is_finite()) {
            return invalid(format!(
                "initial workload must be a finite non-negative number, got {v}"
            ));
        }
        Ok(Self::Fixed(v))
    }

    pub fn random(law: impl WorkloadLaw + 'static) -> Self {
        Self::Random(Arc::new(law))
    }

    pub fn stationary(lambda: f64, dist: ServiceDistribution) -> Result<Self> {
        check_stable(lambda, &dist)?;
        Ok(Self::Stationary { lambda, dist })
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Fixed(v) => *v,
            Self::Random(law) => law.mean(),
            Self::Stationary { lambda, dist } => {
                let rho = dist.load(lambda);
                lambda * dist.moment(2) / (2.0 * (1.0 - rho))
            }
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Self::Fixed(_) => 0.0,
            Self::Random(law) => law.variance(),
            Self::Stationary { lambda, dist } => {
                // E W^2 = 2 (E W)^2 + λ μ_3 / (3 (1 - ρ))
                let rho = dist.load(lambda);
                let m = self.mean();
                m * m + lambda * dist.moment(3) / (3.0 * (1.0 - rho))
            }
        }
    }

    /// `ṽ(t)`; `t = 0` returns the limit value 1.
    pub fn lst(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 1.0;
        }
        match self {
            Self::Fixed(v) => (-t * v).exp(),
            Self::Random(law) => law.lst(t),
            Self::Stationary { lambda, dist } => {
                let rho = dist.load(lambda);
                (1.0 - rho) / (1.0 - lambda * dist.lst_complement(t) / t)
            }
        }
    }

    /// One draw of `v`. The stationary law is drawn exactly from its
    /// Pollaczek–Khinchine representation: a Geometric(1 - ρ) number of
    /// equilibrium-distributed terms.
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match self {
            Self::Fixed(v) => *v,
            Self::Random(law) => law.sample(rng),
            Self::Stationary { lambda, dist } => {
                let rho = dist.load(lambda);
                let k = Geometric::new(1.0 - rho).expect("stable model").sample(rng);
                (0..k).map(|_| dist.sample_equilibrium(rng)).sum()
            }
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, Self::Fixed(_))
    }
}

pub(crate) fn check_stable(lambda: f64, dist: &ServiceDistribution) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return invalid(format!("arrival rate must be positive, got {lambda}"));
    }
    let rho = dist.load(&lambda);
    if rho >= 1.0 || rho.is_nan() {
        return Err(Error::Unstable { rho });
    }
    Ok(rho)
}

/// `(λ, B(·), v)` with `ρ = λ μ_1 ∈ (0, 1)`.
#[derive(Clone, Debug)]
pub struct ModelParams {
    pub lambda: f64,
    pub dist: ServiceDistribution,
    pub init: InitialWorkload,
}

impl ModelParams {
    pub fn new(lambda: f64, dist: ServiceDistribution, init: InitialWorkload) -> Result<Self> {
        check_stable(lambda, &dist)?;
        Ok(Self { lambda, dist, init })
    }

    pub fn with_fixed_v(lambda: f64, dist: ServiceDistribution, v: f64) -> Result<Self> {
        Self::new(lambda, dist, InitialWorkload::fixed(v)?)
    }

    pub fn rho(&self) -> f64 {
        self.dist.load(&self.lambda)
    }

    /// The fixed `v`, for operations that are only defined conditionally on it.
    pub fn fixed_v(&self) -> Result<f64> {
        match self.init {
            InitialWorkload::Fixed(v) => Ok(v),
            _ => invalid("operation requires a fixed initial workload"),
        }
    }
}
