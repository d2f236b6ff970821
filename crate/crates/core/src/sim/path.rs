use rand_distr::{Distribution, Exp};

use crate::distributions::{ModelParams, ServiceDistribution};
use crate::error::{domain, Result};
use crate::rng::RngStream;

/// Lazily generated, cached arrival epochs `T_i` and job sizes of a Poisson
/// stream. Several computations can replay the same realisation.
#[derive(Debug)]
pub struct ArrivalStream {
    interarrival: Exp<f64>,
    dist: ServiceDistribution,
    rng: RngStream,
    events: Vec<(f64, f64)>,
}

impl ArrivalStream {
    pub fn new(lambda: f64, dist: ServiceDistribution, rng: RngStream) -> Self {
        Self {
            interarrival: Exp::new(lambda).expect("positive arrival rate"),
            dist,
            rng,
            events: Vec::new(),
        }
    }

    /// `(T_i, B_i)` for `i = 0, 1, ...`
    pub fn get(&mut self, i: usize) -> (f64, f64) {
        while self.events.len() <= i {
            let last = self.events.last().map_or(0.0, |e| e.0);
            let t = last + self.interarrival.sample(&mut self.rng);
            let b = self.dist.sample(&mut self.rng);
            self.events.push((t, b));
        }
        self.events[i]
    }

    /// Number of arrivals generated so far.
    pub fn generated(&self) -> usize {
        self.events.len()
    }
}

/// When to stop recording busy cycles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StopRule {
    /// Until the accumulated idle time exceeds the level.
    Horizon(f64),
    /// Until `M + Σ N_k` reaches the level.
    Level(u64),
}

/// One realisation of the cycle structure of `Y_1` started at `v`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathRealization {
    pub v: f64,
    pub jump_times: Vec<f64>,
    pub jump_sizes: Vec<f64>,
    /// Arrivals during the initial busy period `(0, τ_0]`.
    pub initial_count: u64,
    /// `I_1, I_2, ...`
    pub idle_gaps: Vec<f64>,
    /// `N_1, N_2, ...`, one per idle gap.
    pub busy_counts: Vec<u64>,
    /// Largest `x` at which the externality can be evaluated.
    pub horizon: f64,
    /// Time at which `Y_2`, started at `v + horizon`, first hits zero.
    pub coupling_time: f64,
    pub truncated: bool,
}

impl PathRealization {
    /// `S_k = I_1 + ... + I_k`.
    pub fn idle_sums(&self) -> Vec<f64> {
        self.idle_gaps
            .iter()
            .scan(0.0, |s, &i| {
                *s += i;
                Some(*s)
            })
            .collect()
    }

    fn check(&self, x: f64) -> Result<()> {
        if self.truncated {
            return domain("path was truncated before coupling");
        }
        if !(x >= 0.0 && x <= self.horizon) {
            return domain(format!(
                "x = {x} outside the simulated range [0, {}]",
                self.horizon
            ));
        }
        Ok(())
    }
}

/// Serves until the workload `w` present at time `t` is exhausted; returns the
/// number of arrivals absorbed, or `None` on hitting the cap.
fn drain(
    arrivals: &mut ArrivalStream,
    t: &mut f64,
    w: &mut f64,
    i: &mut usize,
    path: &mut PathRealization,
    max_events: u64,
) -> Option<u64> {
    let mut n = 0;
    loop {
        if *i as u64 >= max_events {
            return None;
        }
        let (ta, b) = arrivals.get(*i);
        if ta - *t < *w {
            *w += b - (ta - *t);
            *t = ta;
            *i += 1;
            n += 1;
            path.jump_times.push(ta);
            path.jump_sizes.push(b);
        } else {
            *t += *w;
            *w = 0.0;
            return Some(n);
        }
    }
}

/// Runs `Y_1` from `v` on `arrivals`: first the initial busy period, then
/// alternating idle gaps and busy periods until `rule` is met.
pub fn simulate_path_on(
    v: f64,
    arrivals: &mut ArrivalStream,
    rule: StopRule,
    max_events: u64,
) -> PathRealization {
    let mut path = PathRealization {
        v,
        jump_times: Vec::new(),
        jump_sizes: Vec::new(),
        initial_count: 0,
        idle_gaps: Vec::new(),
        busy_counts: Vec::new(),
        horizon: 0.0,
        coupling_time: 0.0,
        truncated: false,
    };
    let mut i = 0usize;
    let mut t = 0.0;
    let mut w = v;
    let mut served = 0u64;
    let mut idle_total = 0.0;
    let mut gap_start = 0.0;

    match drain(arrivals, &mut t, &mut w, &mut i, &mut path, max_events) {
        Some(m) => path.initial_count = m,
        None => {
            path.truncated = true;
            return path;
        }
    }
    served += path.initial_count;
    loop {
        let done = match rule {
            StopRule::Horizon(x) => idle_total > x,
            StopRule::Level(l) => served >= l,
        };
        if done {
            break;
        }
        if i as u64 >= max_events {
            path.truncated = true;
            return path;
        }
        let (ta, b) = arrivals.get(i);
        gap_start = t;
        path.idle_gaps.push(ta - t);
        idle_total += ta - t;
        path.jump_times.push(ta);
        path.jump_sizes.push(b);
        t = ta;
        w = b;
        i += 1;
        match drain(arrivals, &mut t, &mut w, &mut i, &mut path, max_events) {
            Some(n) => {
                path.busy_counts.push(n + 1);
                served += n + 1;
            }
            None => {
                path.truncated = true;
                return path;
            }
        }
    }
    path.horizon = match rule {
        StopRule::Horizon(x) => x,
        StopRule::Level(_) => idle_total,
    };
    let before_last = idle_total - path.idle_gaps.last().copied().unwrap_or(0.0);
    path.coupling_time = if path.idle_gaps.is_empty() {
        t
    } else {
        gap_start + (path.horizon - before_last)
    };
    path
}

/// Draws `v` from `params.init`, then simulates on a fresh arrival stream
/// forked from `rng` until the idle time exceeds `x_max`.
pub fn simulate_path(
    params: &ModelParams,
    x_max: f64,
    rng: &mut RngStream,
    max_events: u64,
) -> Result<PathRealization> {
    if !(x_max >= 0.0 && x_max.is_finite()) {
        return domain(format!(
            "x_max must be finite and non-negative, got {x_max}"
        ));
    }
    let v = params.init.sample(rng);
    let mut arrivals = ArrivalStream::new(params.lambda, params.dist.clone(), rng.fork());
    Ok(simulate_path_on(
        v,
        &mut arrivals,
        StopRule::Horizon(x_max),
        max_events,
    ))
}

/// `E_v(x) = x M + Σ_k N_k (x - S_k)^+`.
pub fn externality_from_path(path: &PathRealization, x: f64) -> Result<f64> {
    path.check(x)?;
    let mut s = 0.0;
    let mut total = x * path.initial_count as f64;
    for (&gap, &n) in path.idle_gaps.iter().zip(&path.busy_counts) {
        s += gap;
        if s >= x {
            break;
        }
        total += n as f64 * (x - s);
    }
    Ok(total)
}

/// `Ė_v(x) = M + Σ_{S_k <= x} N_k`, right-continuous.
pub fn derivative_process(path: &PathRealization, x: f64) -> Result<u64> {
    path.check(x)?;
    let mut s = 0.0;
    let mut total = path.initial_count;
    for (&gap, &n) in path.idle_gaps.iter().zip(&path.busy_counts) {
        s += gap;
        if s > x {
            break;
        }
        total += n;
    }
    Ok(total)
}

/// First passage of the derivative process over a level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Passage {
    /// `x(y)`: the marginal-service level at which `Ė_v` first reaches `y`.
    pub at: f64,
    /// `υ(y)`: busy cycles needed (0 if `M` alone reaches the level).
    pub cycles: usize,
}

/// `x(y) = inf{x : Ė_v(x) >= y}` within the recorded cycles.
pub fn first_passage(path: &PathRealization, y: f64) -> Option<Passage> {
    if path.truncated {
        return None;
    }
    let level = y.ceil().max(0.0) as u64;
    let mut total = path.initial_count;
    if total >= level {
        return Some(Passage { at: 0.0, cycles: 0 });
    }
    let mut s = 0.0;
    for (k, (&gap, &n)) in path.idle_gaps.iter().zip(&path.busy_counts).enumerate() {
        s += gap;
        total += n;
        if total >= level {
            return Some(Passage {
                at: s,
                cycles: k + 1,
            });
        }
    }
    None
}
