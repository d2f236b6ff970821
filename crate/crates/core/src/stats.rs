//! Small statistics toolkit for the Monte-Carlo checks: summaries with
//! standard errors and Kolmogorov–Smirnov tests.

use serde::{Deserialize, Serialize};

/// `Φ(x)`
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Kolmogorov survival function `Q(t) = P(sup|B| > t)` for a Brownian bridge.
pub fn kolmogorov_survival(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if t < 1.18 {
        // Jacobi-transformed series, fast for small t
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * t * t);
        let s: f64 = (1..=8)
            .map(|k| (-((2 * k - 1) as f64).powi(2) * c).exp())
            .sum();
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / t * s
    } else {
        let s: f64 = (1..=100)
            .map(|k| {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * (k * k) as f64 * t * t).exp()
            })
            .sum();
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// Asymptotic p-value for statistic `d` at effective sample size `n`, with
/// Stephens' small-sample correction.
fn ks_p_value(d: f64, n: f64) -> f64 {
    let r = n.sqrt();
    kolmogorov_survival((r + 0.12 + 0.11 / r) * d).clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample KS test of `sample` against the continuous CDF `cdf`.
pub fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let statistic = xs.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    });
    KsResult {
        statistic,
        p_value: ks_p_value(statistic, n),
    }
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < n && j < m {
        let t = xs[i].min(ys[j]);
        while i < n && xs[i] <= t {
            i += 1;
        }
        while j < m && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    KsResult {
        statistic: d,
        p_value: ks_p_value(d, ne),
    }
}

/// Sample mean, unbiased variance and the standard error of the mean.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let variance = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            n,
            mean,
            variance,
            std_error: (variance / n as f64).sqrt(),
        }
    }

    /// Is `target` within `k` standard errors of the mean?
    pub fn covers(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error
    }
}

/// Sample covariance of paired draws with a delta-method standard error
/// (the SE of the mean of centred products). With `xs == ys` this is the
/// sample variance and its SE.
pub fn covariance_with_se(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len().min(ys.len());
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let products: Vec<f64> = xs[..n]
        .iter()
        .zip(&ys[..n])
        .map(|(x, y)| (x - mx) * (y - my))
        .collect();
    let s = Summary::of(&products);
    (s.mean * n as f64 / (n - 1) as f64, s.std_error)
}

/// Total-variation distance `½ Σ |p_s - q_s|` between a pmf on `1..` and the
/// empirical law of integer draws. Mass of either side outside the common
/// support counts fully.
pub fn tv_distance(pmf: &[f64], draws: &[u64]) -> f64 {
    let top = draws.iter().copied().max().unwrap_or(0) as usize;
    let len = top.max(pmf.len());
    let mut freq = vec![0.0; len + 1];
    for &d in draws {
        freq[d as usize] += 1.0;
    }
    let n = draws.len() as f64;
    let mut dist = freq[0] / n;
    let mut covered = 0.0;
    for s in 1..=len {
        let p = pmf.get(s - 1).copied().unwrap_or(0.0);
        covered += p;
        dist += (p - freq[s] / n).abs();
    }
    dist += (1.0 - covered).max(0.0);
    0.5 * dist
}
