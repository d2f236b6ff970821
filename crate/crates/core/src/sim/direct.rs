use rand_distr::{Distribution, Exp};

use crate::distributions::{check_stable, ServiceDistribution};
use crate::error::{Error, Result};
use crate::rng::RngStream;

use super::path::ArrivalStream;

/// Brute-force externality: runs the reflected workloads `Y_1` (from `v`) and
/// `Y_2` (from `v + x`) on the same arrivals and sums `Y_2(T_i-) - Y_1(T_i-)`
/// over all arrivals before `Y_2` first empties.
pub fn direct_externality(
    v: f64,
    x: f64,
    arrivals: &mut ArrivalStream,
    max_events: u64,
) -> Result<f64> {
    if x == 0.0 {
        return Ok(0.0);
    }
    let (mut y1, mut y2) = (v, v + x);
    let mut t = 0.0;
    let mut total = 0.0;
    for i in 0.. {
        if i as u64 >= max_events {
            return Err(Error::Truncated { max_events });
        }
        let (ta, b) = arrivals.get(i);
        let dt = ta - t;
        if y2 <= dt {
            break;
        }
        y1 = (y1 - dt).max(0.0);
        y2 -= dt;
        total += y2 - y1;
        y1 += b;
        y2 += b;
        t = ta;
    }
    Ok(total)
}

/// Number of customers served in one busy period, by direct simulation.
pub fn sample_busy_period(
    lambda: f64,
    dist: &ServiceDistribution,
    rng: &mut RngStream,
    max_events: u64,
) -> Result<u64> {
    check_stable(lambda, dist)?;
    let gap = Exp::new(lambda).expect("positive rate");
    let mut w = dist.sample(rng);
    let mut n = 1u64;
    loop {
        let a = gap.sample(rng);
        if a >= w {
            return Ok(n);
        }
        if n >= max_events {
            return Err(Error::Truncated { max_events });
        }
        w += dist.sample(rng) - a;
        n += 1;
    }
}
