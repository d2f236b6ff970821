//! Level-crossing times of the derivative process `Ė_0(·)`.
//!
//! With `v = 0`, `x(y) = I_1 + ... + I_υ(y)` where `υ(y)` is the number of
//! busy-period counts needed for `N_1 + ... + N_t >= ⌈y⌉`. `υ(y)` is the
//! absorption time of a chain on `{0, ..., ⌈y⌉}` that jumps from `k` to
//! `k + s` with probability `N(s)`, so both of its first two moments follow
//! from backward recursions, and Wald's identity gives those of `x(y)`.

use serde::Serialize;

use crate::busy_period::BusyPeriodLaw;
use crate::distributions::{check_stable, ServiceDistribution};
use crate::error::{domain, Error, Result};
use crate::rng::RngStream;
use crate::scalar::Scalar;
use crate::sim::{first_passage, simulate_path_on, ArrivalStream, Passage, StopRule};

/// `(E υ, E υ²)` for absorption at level `c = ⌈y⌉ >= 1`, given `pmf[s - 1] = N(s)`
/// for `s = 1..c` (missing entries count as zero).
pub fn absorption_moments<T: Scalar>(pmf: &[T], c: usize) -> (T, T) {
    let p = |s: usize| pmf.get(s - 1).cloned().unwrap_or_else(T::zero);
    // psi[k] = E[steps to absorption from k], m2[k] = E[steps²]
    let mut psi = vec![T::zero(); c];
    let mut m2 = vec![T::zero(); c];
    for k in (0..c).rev() {
        let mut first = T::one();
        let mut second = T::one();
        for i in k + 1..c {
            let q = p(i - k);
            first = first + q.clone() * psi[i].clone();
            second = second + q.clone() * (T::count(2) * psi[i].clone() + m2[i].clone());
        }
        psi[k] = first;
        m2[k] = second;
    }
    (psi[0].clone(), m2[0].clone())
}

/// Number of chain states below absorption for level `y`.
fn level(y: f64) -> Result<usize> {
    if !(y > 0.0 && y.is_finite()) {
        return domain(format!(
            "crossing level must be positive and finite, got {y}"
        ));
    }
    Ok(y.ceil() as usize)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CrossingReport {
    pub y: f64,
    /// `ψ_0(y) = E υ(y)`
    pub psi0: f64,
    pub mean_crossing: f64,
    pub var_upsilon: f64,
    pub var_crossing: f64,
}

impl CrossingReport {
    pub fn compute(law: &BusyPeriodLaw, y: f64) -> Result<Self> {
        let c = level(y)?;
        if law.s_max() + 1 < c {
            return domain(format!(
                "pmf computed up to s = {} but level {y} needs s up to {}",
                law.s_max(),
                c - 1
            ));
        }
        let lambda = *law.lambda();
        let (psi0, m2) = absorption_moments(law.pmf(), c);
        let var_upsilon = (m2 - psi0 * psi0).max(0.0);
        Ok(Self {
            y,
            psi0,
            mean_crossing: psi0 / lambda,
            var_upsilon,
            var_crossing: (psi0 + var_upsilon) / (lambda * lambda),
        })
    }
}

/// `E x(y) = ψ_0(y) / λ`.
pub fn crossing_mean(law: &BusyPeriodLaw, y: f64) -> Result<f64> {
    Ok(CrossingReport::compute(law, y)?.mean_crossing)
}

/// `Var x(y) = (ψ_0(y) + Var υ(y)) / λ²`.
pub fn crossing_variance(law: &BusyPeriodLaw, y: f64) -> Result<f64> {
    Ok(CrossingReport::compute(law, y)?.var_crossing)
}

/// One simulated `(x(y), υ(y))` of `Ė_0`, from the queue itself.
pub fn simulate_crossing(
    lambda: f64,
    dist: &ServiceDistribution,
    y: f64,
    rng: &mut RngStream,
    max_events: u64,
) -> Result<Passage> {
    check_stable(lambda, dist)?;
    let c = level(y)?;
    let mut arrivals = ArrivalStream::new(lambda, dist.clone(), rng.fork());
    let path = simulate_path_on(0.0, &mut arrivals, StopRule::Level(c as u64), max_events);
    first_passage(&path, y).ok_or(Error::Truncated { max_events })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::busy_period::{count_pmf, BusyPeriodLaw};
    use crate::scalar::{ratio, Rational};
    use crate::stats::Summary;
    use approx::assert_relative_eq;

    fn mm1(lambda: f64, mu: f64) -> BusyPeriodLaw {
        count_pmf(lambda, &ServiceDistribution::exponential(mu).unwrap(), 200).unwrap()
    }

    /// Every path of the chain from 0: each step moves up by at least one,
    /// so there are finitely many and the expectation is a finite sum.
    fn enumerate(pmf: &[f64], c: usize) -> (f64, f64) {
        fn walk(pmf: &[f64], c: usize, state: usize, steps: f64, prob: f64, acc: &mut (f64, f64)) {
            let mut stay = 0.0;
            for s in 1..c - state {
                let q = pmf.get(s - 1).copied().unwrap_or(0.0);
                stay += q;
                walk(pmf, c, state + s, steps + 1.0, prob * q, acc);
            }
            let absorb = prob * (1.0 - stay);
            acc.0 += absorb * (steps + 1.0);
            acc.1 += absorb * (steps + 1.0).powi(2);
        }
        let mut acc = (0.0, 0.0);
        walk(pmf, c, 0, 0.0, 1.0, &mut acc);
        acc
    }

    #[test]
    fn levels_up_to_one() {
        let law = mm1(1.5, 2.0);
        for y in [0.1, 0.5, 1.0] {
            let r = CrossingReport::compute(&law, y).unwrap();
            assert_eq!(r.psi0, 1.0);
            assert_eq!(r.mean_crossing, 1.0 / 1.5);
            assert_eq!(r.var_upsilon, 0.0);
            assert_eq!(r.var_crossing, 1.0 / (1.5 * 1.5));
        }
        assert!(CrossingReport::compute(&law, 0.0).is_err());
    }

    #[test]
    fn mm1_level_two() {
        let r = CrossingReport::compute(&mm1(1.0, 2.0), 2.0).unwrap();
        assert_relative_eq!(r.psi0, 5.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(r.mean_crossing, 5.0 / 3.0, max_relative = 1e-14);
        // υ - 1 ~ Bernoulli(2/3)
        assert_relative_eq!(r.var_upsilon, 2.0 / 9.0, max_relative = 1e-12);
        let pmf = [ratio(2, 3), ratio(4, 27)];
        let (psi0, m2): (Rational, Rational) = absorption_moments(&pmf, 2);
        assert_eq!(psi0, ratio(5, 3));
        assert_eq!(m2 - psi0.clone() * psi0, ratio(2, 9));
    }

    #[test]
    fn recursion_equals_enumeration() {
        for law in [
            mm1(1.0, 2.0),
            count_pmf(0.6, &ServiceDistribution::deterministic(1.0).unwrap(), 50).unwrap(),
            count_pmf(
                0.5,
                &ServiceDistribution::hyper_exponential(vec![0.5, 0.5], vec![0.6, 6.0]).unwrap(),
                50,
            )
            .unwrap(),
        ] {
            for c in 1..=6 {
                let (psi0, m2) = absorption_moments(law.pmf(), c);
                let (e1, e2) = enumerate(law.pmf(), c);
                assert!((psi0 - e1).abs() < 1e-10, "c = {c}");
                assert!((m2 - e2).abs() < 1e-10, "c = {c}");
            }
        }
    }

    #[test]
    fn monotone_in_level() {
        let law = mm1(1.6, 2.0);
        let mut last = 0.0;
        for j in 1..60 {
            let r = CrossingReport::compute(&law, j as f64 * 0.5).unwrap();
            assert!(r.psi0 >= last);
            assert!(r.var_crossing >= r.psi0 / (1.6 * 1.6));
            last = r.psi0;
        }
        assert_eq!(
            CrossingReport::compute(&law, 4.2).unwrap().psi0,
            CrossingReport::compute(&law, 5.0).unwrap().psi0
        );
    }

    #[test]
    fn short_pmf_is_rejected() {
        let law = count_pmf(0.9, &ServiceDistribution::exponential(1.0).unwrap(), 5).unwrap();
        assert!(CrossingReport::compute(&law, 6.0).is_ok());
        assert!(CrossingReport::compute(&law, 7.5).is_err());
    }

    #[test]
    fn simulated_mean_agrees() {
        let dist = ServiceDistribution::exponential(2.0).unwrap();
        let law = count_pmf(1.0, &dist, 200).unwrap();
        let report = CrossingReport::compute(&law, 5.0).unwrap();
        let mut rng = RngStream::new(21);
        let draws: Vec<Passage> = (0..40_000)
            .map(|_| simulate_crossing(1.0, &dist, 5.0, &mut rng, 1_000_000).unwrap())
            .collect();
        let x: Vec<f64> = draws.iter().map(|p| p.at).collect();
        let u: Vec<f64> = draws.iter().map(|p| p.cycles as f64).collect();
        assert!(Summary::of(&x).covers(report.mean_crossing, 3.0));
        assert!(Summary::of(&u).covers(report.psi0, 3.0));
    }
}
