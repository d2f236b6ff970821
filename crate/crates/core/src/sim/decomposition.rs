use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Poisson};

use crate::busy_period::BusyPeriodLaw;
use crate::error::{domain, invalid, Result};
use crate::rng::RngStream;

const MAX_TAIL: f64 = 1e-6;

/// Samples externalities from their compound-Poisson representation instead
/// of simulating the queue: Poisson numbers of iid `N` draws, optionally
/// thinned by iid uniforms.
#[derive(Clone, Debug)]
pub struct DecompositionSampler {
    lambda: f64,
    counts: WeightedAliasIndex<f64>,
}

impl DecompositionSampler {
    /// Alias table over the truncated pmf; the residual tail mass is spread
    /// proportionally.
    pub fn new(law: &BusyPeriodLaw) -> Result<Self> {
        if *law.tail_mass() >= MAX_TAIL {
            return domain(format!(
                "pmf tail mass {:e} too large for sampling; raise s_max",
                law.tail_mass()
            ));
        }
        let counts = WeightedAliasIndex::new(law.pmf().to_vec())
            .map_err(|e| crate::error::Error::Domain(format!("pmf not usable as weights: {e}")))?;
        Ok(Self {
            lambda: *law.lambda(),
            counts,
        })
    }

    /// One draw of `N`.
    pub fn busy_count(&self, rng: &mut RngStream) -> u64 {
        self.counts.sample(rng) as u64 + 1
    }

    fn poisson(&self, t: f64, rng: &mut RngStream) -> u64 {
        let mean = self.lambda * t;
        if mean <= 0.0 {
            0
        } else {
            Poisson::new(mean)
                .expect("finite positive mean")
                .sample(rng) as u64
        }
    }

    /// `Σ_{i <= ξ} N_i` with `ξ ~ Poisson(λ t)`.
    pub fn compound(&self, t: f64, rng: &mut RngStream) -> f64 {
        (0..self.poisson(t, rng))
            .map(|_| self.busy_count(rng) as f64)
            .sum()
    }

    /// `(Σ N_i, Σ N_i U_i)` with `ξ ~ Poisson(λ t)` terms.
    pub fn compound_with_uniform(&self, t: f64, rng: &mut RngStream) -> (f64, f64) {
        let mut plain = 0.0;
        let mut thinned = 0.0;
        for _ in 0..self.poisson(t, rng) {
            let n = self.busy_count(rng) as f64;
            plain += n;
            thinned += n * rng.random::<f64>();
        }
        (plain, thinned)
    }

    /// One joint draw of `(E_v(X_1), ..., E_v(X_k))`, `X_l = x_1 + ... + x_l`.
    pub fn sample_vector(&self, v: f64, xs: &[f64], rng: &mut RngStream) -> Vec<f64> {
        let a1 = self.compound(v, rng);
        let groups: Vec<(f64, f64)> = xs
            .iter()
            .map(|&x| self.compound_with_uniform(x, rng))
            .collect();
        let mut out = Vec::with_capacity(xs.len());
        let mut ends = Vec::with_capacity(xs.len());
        let mut end = 0.0;
        for &x in xs {
            end += x;
            ends.push(end);
        }
        for l in 0..xs.len() {
            let big_x = ends[l];
            let mut e = a1 * big_x;
            for j in 0..=l {
                let (a, b) = groups[j];
                e += xs[j] * b + a * (big_x - ends[j]);
            }
            out.push(e);
        }
        out
    }

    /// One draw of `Δ_v(x_1 + x_2, x_1) = E_v(x_1 + x_2) - E_v(x_1)`.
    pub fn sample_increment(&self, v: f64, x1: f64, x2: f64, rng: &mut RngStream) -> f64 {
        if x2 == 0.0 {
            return 0.0;
        }
        let a = self.compound(v, rng);
        let b = self.compound(x1, rng);
        let (_, c) = self.compound_with_uniform(x2, rng);
        x2 * (a + b + c)
    }
}

fn check_grid(v: f64, xs: &[f64]) -> Result<()> {
    if !(v >= 0.0 && v.is_finite()) {
        return invalid(format!("v must be finite and non-negative, got {v}"));
    }
    if let Some(x) = xs.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
        return invalid(format!(
            "grid increments must be finite and non-negative, got {x}"
        ));
    }
    Ok(())
}

/// Convenience wrapper around [`DecompositionSampler::sample_vector`].
pub fn sample_decomposition(
    v: f64,
    xs: &[f64],
    law: &BusyPeriodLaw,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    check_grid(v, xs)?;
    Ok(DecompositionSampler::new(law)?.sample_vector(v, xs, rng))
}

/// Convenience wrapper around [`DecompositionSampler::sample_increment`].
pub fn sample_increment(
    v: f64,
    x1: f64,
    x2: f64,
    law: &BusyPeriodLaw,
    rng: &mut RngStream,
) -> Result<f64> {
    check_grid(v, &[x1, x2])?;
    Ok(DecompositionSampler::new(law)?.sample_increment(v, x1, x2, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::busy_period::PmfOptions;
    use crate::distributions::ServiceDistribution;

    fn law(lambda: f64, rate: f64) -> BusyPeriodLaw {
        let dist = ServiceDistribution::exponential(rate).unwrap();
        BusyPeriodLaw::with_options(
            lambda,
            dist,
            &PmfOptions {
                s_max: 2000,
                ..Default::default()
            },
        )
        .unwrap()
    }

    fn mean_se(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (var / n).sqrt())
    }

    #[test]
    fn degenerate_inputs() {
        let law = law(0.5, 1.0);
        let mut rng = RngStream::new(1);
        assert_eq!(
            sample_decomposition(0.0, &[0.0], &law, &mut rng).unwrap(),
            vec![0.0]
        );
        assert_eq!(
            sample_increment(1.0, 1.0, 0.0, &law, &mut rng).unwrap(),
            0.0
        );
        assert!(sample_decomposition(-1.0, &[1.0], &law, &mut rng).is_err());
    }

    #[test]
    fn rejects_heavy_tail() {
        let dist = ServiceDistribution::exponential(1.0).unwrap();
        let short = BusyPeriodLaw::new(0.95, dist, 20).unwrap();
        assert!(DecompositionSampler::new(&short).is_err());
    }

    #[test]
    fn first_coordinate_mean() {
        let (lambda, v, x) = (0.5, 1.0, 2.0);
        let law = law(lambda, 1.0);
        let s = DecompositionSampler::new(&law).unwrap();
        let mut rng = RngStream::new(4);
        let draws: Vec<f64> = (0..100_000)
            .map(|_| s.sample_vector(v, &[x, 1.0], &mut rng)[0])
            .collect();
        let (m, se) = mean_se(&draws);
        let exact = lambda * x * (v + x / 2.0) * 2.0;
        assert!((m - exact).abs() < 3.0 * se, "{m} vs {exact} (se {se})");
    }

    #[test]
    fn increment_variance() {
        let (lambda, v, x1, x2) = (0.5, 0.5, 1.0, 1.5);
        let law = law(lambda, 1.0);
        let eta2 = law.eta(2).unwrap();
        let s = DecompositionSampler::new(&law).unwrap();
        let mut rng = RngStream::new(9);
        let draws: Vec<f64> = (0..100_000)
            .map(|_| s.sample_increment(v, x1, x2, &mut rng))
            .collect();
        let (m, _) = mean_se(&draws);
        let sq: Vec<f64> = draws.iter().map(|d| (d - m).powi(2)).collect();
        let (var, se) = mean_se(&sq);
        let exact = lambda * x2 * x2 * (v + x1 + x2 / 3.0) * eta2;
        assert!((var - exact).abs() < 3.0 * se, "{var} vs {exact} (se {se})");
    }

    #[test]
    fn vector_is_nondecreasing() {
        let law = law(0.5, 1.0);
        let s = DecompositionSampler::new(&law).unwrap();
        for seed in 0..200 {
            let e = s.sample_vector(0.7, &[1.0, 0.5], &mut RngStream::new(seed));
            assert!(e[1] >= e[0]);
        }
    }
}
