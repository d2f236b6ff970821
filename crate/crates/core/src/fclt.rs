//! Finite-sample checks of the Gaussian limits: the normalised
//! externalities process against the integrated Wiener process, and
//! compensated compound Poisson processes against Brownian motion.
//!
//! Limits cannot be observed from finitely many models, so the condition
//! flags below are trends over the supplied prefix and are only indicative.

use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::analytics::mean_externality;
use crate::busy_period::{count_moments_closed_form, BusyPeriodLaw, PmfOptions};
use crate::distributions::{InitialWorkload, ModelParams, ServiceDistribution};
use crate::error::{domain, invalid, Error, Result};
use crate::rng::{replicate, RngStream};
use crate::sim::{externality_from_path, simulate_path, DecompositionSampler};
use crate::stats::{covariance_with_se, ks_one_sample, normal_cdf, KsResult, Summary};

/// Tolerated share of truncated paths before an experiment is abandoned.
const MAX_TRUNCATED_SHARE: f64 = 1e-3;
/// Log-log slope beyond which a sequence counts as growing or vanishing.
const TREND_SLOPE: f64 = 0.05;
/// A late slope below this fraction of the early one counts as saturating.
const SATURATION: f64 = 0.75;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingEntry {
    pub lambda: f64,
    pub dist: ServiceDistribution,
}

/// Models `(λ_n, B_n, v)`, `n = 1, 2, ...`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingSequence {
    pub entries: Vec<ScalingEntry>,
    pub v: f64,
}

impl ScalingSequence {
    pub fn new(entries: Vec<ScalingEntry>, v: f64) -> Result<Self> {
        if !(v >= 0.0 && v.is_finite()) {
            return invalid(format!("v must be finite and non-negative, got {v}"));
        }
        if let Some(e) = entries
            .iter()
            .find(|e| !(e.lambda > 0.0 && e.lambda.is_finite()))
        {
            return invalid(format!("arrival rates must be positive, got {}", e.lambda));
        }
        Ok(Self { entries, v })
    }

    fn entry(&self, n_index: usize) -> Result<&ScalingEntry> {
        self.entries.get(n_index).ok_or_else(|| {
            Error::Domain(format!(
                "no entry {n_index} in a sequence of {}",
                self.entries.len()
            ))
        })
    }
}

/// Per-model quantities entering the limit conditions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionRow {
    pub n: usize,
    pub lambda: f64,
    pub rho: f64,
    /// `None` when `ρ_n >= 1`.
    pub eta2: Option<f64>,
    pub eta3: Option<f64>,
    /// `η_3 / √(λ η_2³)`
    pub ratio_iii: Option<f64>,
    pub lambda2_mu2: f64,
    pub lambda3_mu3: f64,
    /// `λ (1 - ρ)`
    pub lambda_gap: f64,
}

/// Trend flags over the finite prefix. Indicative, not conclusive.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionFlags {
    /// `λ_n → ∞`
    pub arrival_rate_grows: bool,
    /// `ρ_n < 1` over the second half of the prefix
    pub eventually_stable: bool,
    /// `η_3 / √(λ η_2³) → 0`
    pub ratio_vanishes: bool,
    /// `limsup ρ_n < 1`
    pub load_bounded_away_from_one: bool,
    /// `limsup λ³ μ_3 < ∞`
    pub third_moment_bounded: bool,
    /// `liminf λ² μ_2 > 0`
    pub second_moment_bounded_below: bool,
    /// `λ (1 - ρ) → ∞`
    pub gap_grows: bool,
    pub first_set: bool,
    pub second_set: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    pub rows: Vec<ConditionRow>,
    pub flags: ConditionFlags,
    pub note: &'static str,
}

/// Least-squares slope of `log q` against `log t`; `None` if some `q <= 0`.
fn log_log_slope(ts: &[f64], values: &[f64]) -> Option<f64> {
    if values.iter().any(|&q| !(q > 0.0 && q.is_finite())) {
        return None;
    }
    let k = ts.len() as f64;
    let mx = ts.iter().map(|t| t.ln()).sum::<f64>() / k;
    let my = values.iter().map(|q| q.ln()).sum::<f64>() / k;
    let sxy: f64 = ts
        .iter()
        .zip(values)
        .map(|(t, q)| (t.ln() - mx) * (q.ln() - my))
        .sum();
    let sxx: f64 = ts.iter().map(|t| (t.ln() - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Log-log slopes over the first and the second half of the prefix (the
/// halves share the middle point).
#[derive(Clone, Copy, Debug)]
struct Trend {
    early: f64,
    late: f64,
}

impl Trend {
    fn of(ts: &[f64], values: &[f64]) -> Option<Self> {
        let h = values.len() / 2;
        Some(Self {
            early: log_log_slope(&ts[..=h], &values[..=h])?,
            late: log_log_slope(&ts[h..], &values[h..])?,
        })
    }

    fn grows(&self) -> bool {
        self.late > TREND_SLOPE
    }

    fn vanishes(&self) -> bool {
        self.late < -TREND_SLOPE
    }

    /// Flat, falling, or growing at a clearly decreasing rate.
    fn bounded_above(&self) -> bool {
        self.late <= TREND_SLOPE || self.late < SATURATION * self.early
    }

    fn bounded_below(&self) -> bool {
        self.late >= -TREND_SLOPE || self.late > SATURATION * self.early
    }
}

/// Evaluates the limit conditions on each model of the sequence.
pub fn condition_check(seq: &ScalingSequence) -> Result<ConditionReport> {
    if seq.entries.len() < 3 {
        return domain(format!("need at least 3 models, got {}", seq.entries.len()));
    }
    let mut rows = Vec::with_capacity(seq.entries.len());
    for (i, e) in seq.entries.iter().enumerate() {
        let rho = e.dist.load(&e.lambda);
        let etas = count_moments_closed_form(&e.lambda, &e.dist).ok();
        let eta2 = etas.map(|m| m[1]);
        let eta3 = etas.map(|m| m[2]);
        rows.push(ConditionRow {
            n: i + 1,
            lambda: e.lambda,
            rho,
            eta2,
            eta3,
            ratio_iii: etas.map(|m| m[2] / (e.lambda * m[1].powi(3)).sqrt()),
            lambda2_mu2: e.lambda.powi(2) * e.dist.moment(2),
            lambda3_mu3: e.lambda.powi(3) * e.dist.moment(3),
            lambda_gap: e.lambda * (1.0 - rho),
        });
    }
    // regress on log λ_n when the rates increase, else on log n
    let lambdas: Vec<f64> = rows.iter().map(|r| r.lambda).collect();
    let increasing = lambdas.windows(2).all(|w| w[1] > w[0]);
    let ts: Vec<f64> = if increasing {
        lambdas
    } else {
        (1..=rows.len()).map(|n| n as f64).collect()
    };
    let trend = |f: &dyn Fn(&ConditionRow) -> Option<f64>| -> Option<Trend> {
        let values: Option<Vec<f64>> = rows.iter().map(f).collect();
        Trend::of(&ts, &values?)
    };
    let check = |f: &dyn Fn(&ConditionRow) -> Option<f64>, test: fn(&Trend) -> bool| {
        trend(f).is_some_and(|t| test(&t))
    };

    let arrival_rate_grows = increasing && rows[rows.len() - 1].lambda > rows[0].lambda;
    let eventually_stable = rows[rows.len() / 2..].iter().all(|r| r.rho < 1.0);
    let ratio_vanishes = check(&|r| r.ratio_iii, Trend::vanishes);
    let load_bounded_away_from_one =
        eventually_stable && check(&|r| Some(1.0 - r.rho), Trend::bounded_below);
    let third_moment_bounded = check(&|r| Some(r.lambda3_mu3), Trend::bounded_above);
    let second_moment_bounded_below = check(&|r| Some(r.lambda2_mu2), Trend::bounded_below);
    let gap_grows = check(&|r| Some(r.lambda_gap), Trend::grows);
    let flags = ConditionFlags {
        arrival_rate_grows,
        eventually_stable,
        ratio_vanishes,
        load_bounded_away_from_one,
        third_moment_bounded,
        second_moment_bounded_below,
        gap_grows,
        first_set: arrival_rate_grows && load_bounded_away_from_one && third_moment_bounded,
        second_set: arrival_rate_grows
            && eventually_stable
            && second_moment_bounded_below
            && third_moment_bounded
            && gap_grows,
    };
    Ok(ConditionReport {
        rows,
        flags,
        note: "trend flags over a finite prefix: indicative, not conclusive",
    })
}

/// `Cov(H_v(x_1), H_v(x_2)) = ∫_0^{x_1} ∫_0^{x_2} (v + s ∧ t) ds dt`.
pub fn limit_covariance(v: f64, x1: f64, x2: f64) -> f64 {
    let (a, b) = if x1 <= x2 { (x1, x2) } else { (x2, x1) };
    v * a * b + a * a * b / 2.0 - a.powi(3) / 6.0
}

/// Empirical law of one coordinate against its Gaussian limit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarginalCheck {
    pub x: f64,
    pub summary: Summary,
    pub limit_variance: f64,
    /// `None` for a degenerate limit.
    pub ks: Option<KsResult>,
}

/// Empirical covariance of two coordinates against the limit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairCheck {
    pub x1: f64,
    pub x2: f64,
    pub covariance: f64,
    pub covariance_se: f64,
    pub limit_covariance: f64,
    /// KS of the standardised rotations `(a ± b)/√2`, which are iid N(0, 1)
    /// exactly when the pair is jointly Gaussian, independent and standardised.
    pub rotation_ks: Option<[KsResult; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub reps: usize,
    pub truncated: usize,
    pub marginals: Vec<MarginalCheck>,
    pub pairs: Vec<PairCheck>,
    pub diagnostics: Vec<(String, f64)>,
}

impl ExperimentReport {
    pub fn diagnostic(&self, name: &str) -> Option<f64> {
        self.diagnostics.iter().find(|d| d.0 == name).map(|d| d.1)
    }
}

fn marginal(x: f64, draws: &[f64], limit_variance: f64) -> MarginalCheck {
    let sd = limit_variance.sqrt();
    MarginalCheck {
        x,
        summary: Summary::of(draws),
        limit_variance,
        ks: (limit_variance > 0.0).then(|| ks_one_sample(draws, |z| normal_cdf(z / sd))),
    }
}

/// Simulates `Ê_v(x) = (E_v(x) - E E_v(x)) / √(λ η_2)` of model `n_index` on
/// `x_grid` and compares with `H_v`. Aborts if more than 0.1% of the paths
/// hit the event cap.
pub fn scaled_externality_experiment(
    seq: &ScalingSequence,
    n_index: usize,
    x_grid: &[f64],
    reps: usize,
    rng: &RngStream,
    max_events: u64,
) -> Result<ExperimentReport> {
    if x_grid.is_empty() || reps < 2 {
        return invalid("need a non-empty x grid and at least 2 replications");
    }
    if let Some(x) = x_grid.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
        return invalid(format!(
            "grid values must be finite and non-negative, got {x}"
        ));
    }
    let entry = seq.entry(n_index)?;
    let params = ModelParams::with_fixed_v(entry.lambda, entry.dist.clone(), seq.v)?;
    let [_, eta2, eta3] = count_moments_closed_form(&entry.lambda, &entry.dist)?;
    let scale = (entry.lambda * eta2).sqrt();
    let init = InitialWorkload::fixed(seq.v)?;
    let centres: Vec<f64> = x_grid
        .iter()
        .map(|&x| mean_externality(entry.lambda, &entry.dist, &init, x))
        .collect::<Result<_>>()?;
    let x_max = x_grid.iter().copied().fold(0.0, f64::max);

    let rows: Vec<Option<Vec<f64>>> = replicate(rng, reps, |_, r| {
        let path = simulate_path(&params, x_max, r, max_events).ok()?;
        if path.truncated {
            return None;
        }
        x_grid
            .iter()
            .zip(&centres)
            .map(|(&x, c)| {
                externality_from_path(&path, x)
                    .ok()
                    .map(|e| (e - c) / scale)
            })
            .collect()
    });
    let truncated = rows.iter().filter(|r| r.is_none()).count();
    if truncated as f64 > MAX_TRUNCATED_SHARE * reps as f64 {
        return Err(Error::Truncated { max_events });
    }
    let rows: Vec<Vec<f64>> = rows.into_iter().flatten().collect();
    let column = |j: usize| -> Vec<f64> { rows.iter().map(|r| r[j]).collect() };

    let v = seq.v;
    let marginals = x_grid
        .iter()
        .enumerate()
        .map(|(j, &x)| marginal(x, &column(j), limit_covariance(v, x, x)))
        .collect();
    let mut pairs = Vec::new();
    for i in 0..x_grid.len() {
        for j in i + 1..x_grid.len() {
            let (c, se) = covariance_with_se(&column(i), &column(j));
            pairs.push(PairCheck {
                x1: x_grid[i],
                x2: x_grid[j],
                covariance: c,
                covariance_se: se,
                limit_covariance: limit_covariance(v, x_grid[i], x_grid[j]),
                rotation_ks: None,
            });
        }
    }
    Ok(ExperimentReport {
        reps,
        truncated,
        marginals,
        pairs,
        diagnostics: vec![
            ("lambda".into(), entry.lambda),
            ("rho".into(), params.rho()),
            (
                "ratio_iii".into(),
                eta3 / (entry.lambda * eta2.powi(3)).sqrt(),
            ),
        ],
    })
}

/// Jump law of a compound Poisson process.
pub trait JumpLaw: Sync {
    fn sample(&self, rng: &mut RngStream) -> f64;
    fn mean(&self) -> f64;
    /// `σ = E X²`
    fn second_moment(&self) -> f64;
    /// `ν = E |X|³`
    fn third_abs_moment(&self) -> f64;
}

impl JumpLaw for ServiceDistribution {
    fn sample(&self, rng: &mut RngStream) -> f64 {
        ServiceDistribution::sample(self, rng)
    }

    fn mean(&self) -> f64 {
        self.moment(1)
    }

    fn second_moment(&self) -> f64 {
        self.moment(2)
    }

    fn third_abs_moment(&self) -> f64 {
        self.moment(3)
    }
}

/// Jumps distributed as the busy-period count `N(·)` of an M/G/1 queue.
#[derive(Clone, Debug)]
pub struct BusyCountJumps {
    sampler: DecompositionSampler,
    moments: [f64; 3],
}

impl BusyCountJumps {
    pub fn new(lambda: f64, dist: &ServiceDistribution, s_max: usize) -> Result<Self> {
        let law = BusyPeriodLaw::with_options(
            lambda,
            dist.clone(),
            &PmfOptions {
                s_max,
                ..Default::default()
            },
        )?;
        Ok(Self {
            sampler: DecompositionSampler::new(&law)?,
            moments: count_moments_closed_form(&lambda, dist)?,
        })
    }
}

impl JumpLaw for BusyCountJumps {
    fn sample(&self, rng: &mut RngStream) -> f64 {
        self.sampler.busy_count(rng) as f64
    }

    fn mean(&self) -> f64 {
        self.moments[0]
    }

    fn second_moment(&self) -> f64 {
        self.moments[1]
    }

    fn third_abs_moment(&self) -> f64 {
        self.moments[2]
    }
}

/// Compensated compound Poisson sum over an interval of length `t`.
fn compensated(lambda: f64, jumps: &dyn JumpLaw, t: f64, rng: &mut RngStream) -> f64 {
    let count = if lambda * t > 0.0 {
        Poisson::new(lambda * t)
            .expect("finite positive mean")
            .sample(rng) as u64
    } else {
        0
    };
    (0..count).map(|_| jumps.sample(rng)).sum::<f64>() - lambda * t * jumps.mean()
}

/// Simulates `J(·)/√(λσ)` on `[0, horizon]` as two independent halves and
/// compares the endpoint with `N(0, horizon)` and the halves with
/// independent `N(0, horizon/2)` variables.
pub fn cpp_gaussian_experiment(
    lambda: f64,
    jumps: &dyn JumpLaw,
    horizon: f64,
    reps: usize,
    rng: &RngStream,
) -> Result<ExperimentReport> {
    let sigma = jumps.second_moment();
    if !(sigma > 0.0 && sigma.is_finite()) {
        return invalid(format!("jump second moment must be in (0, ∞), got {sigma}"));
    }
    if !(lambda > 0.0 && horizon > 0.0) || reps < 2 {
        return invalid("need positive rate and horizon and at least 2 replications");
    }
    let scale = (lambda * sigma).sqrt();
    let half = horizon / 2.0;
    let draws: Vec<(f64, f64)> = replicate(rng, reps, |_, r| {
        let a = compensated(lambda, jumps, half, r) / scale;
        let b = compensated(lambda, jumps, half, r) / scale;
        (a, b)
    });
    let ends: Vec<f64> = draws.iter().map(|(a, b)| a + b).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = draws.iter().copied().unzip();
    let (c, se) = covariance_with_se(&xs, &ys);
    let sd = half.sqrt();
    let rotate = |sign: f64| -> Vec<f64> {
        draws
            .iter()
            .map(|(a, b)| (a / sd + sign * b / sd) / std::f64::consts::SQRT_2)
            .collect()
    };
    let rotation_ks = [
        ks_one_sample(&rotate(1.0), normal_cdf),
        ks_one_sample(&rotate(-1.0), normal_cdf),
    ];
    Ok(ExperimentReport {
        reps,
        truncated: 0,
        marginals: vec![marginal(horizon, &ends, horizon)],
        pairs: vec![PairCheck {
            x1: half,
            x2: horizon,
            covariance: c,
            covariance_se: se,
            limit_covariance: 0.0,
            rotation_ks: Some(rotation_ks),
        }],
        diagnostics: vec![
            ("lambda".into(), lambda),
            (
                "condition_ii".into(),
                jumps.third_abs_moment() / (lambda * sigma.powi(3)).sqrt(),
            ),
        ],
    })
}

/// Number of places where a sequence of KS statistics goes up.
pub fn ks_inversions(statistics: &[f64]) -> usize {
    statistics.windows(2).filter(|w| w[1] > w[0]).count()
}
