use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{stream, uniform_index, RealizationResult};
use crate::error::{Error, Result};

/// Linear-interpolation percentile: rank `p * (n - 1)` on the sorted samples.
pub fn percentile(samples: &[f64], p: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySeries("percentile of no samples".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Invalid(format!("percentile rank {p} outside [0, 1]")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(percentile_sorted(&sorted, p))
}

/// [`percentile`] on samples already sorted ascending. `sorted` must not be
/// empty.
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let rank = p * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let w = rank - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * w
    }
}

/// Largest drop from a running high: `max_t 1 - y(t) / max_{s<=t} y(s)`.
/// Zero for an empty or never-falling trajectory.
pub fn max_drawdown(trajectory: &[f64]) -> f64 {
    let mut tracker = DrawdownTracker::default();
    for &y in trajectory {
        tracker.push(y);
    }
    tracker.max_drawdown
}

/// Running minimum, peak and maximal drawdown of a yield trajectory.
#[derive(Debug, Clone, Copy)]
pub(crate) struct DrawdownTracker {
    pub peak: f64,
    pub min: f64,
    pub last: f64,
    pub max_drawdown: f64,
}

impl Default for DrawdownTracker {
    fn default() -> Self {
        DrawdownTracker {
            peak: f64::NEG_INFINITY,
            min: f64::INFINITY,
            last: f64::NAN,
            max_drawdown: 0.0,
        }
    }
}

impl DrawdownTracker {
    pub fn push(&mut self, y: f64) {
        self.peak = self.peak.max(y);
        self.min = self.min.min(y);
        self.last = y;
        if self.peak > 0.0 {
            self.max_drawdown = self.max_drawdown.max(1.0 - y / self.peak);
        }
    }
}

/// Confidence interval of the `p` percentile: `resamples` draws of
/// `samples.len()` values with replacement, reporting the 32nd and 68th
/// percentiles of the recomputed metric.
pub fn bootstrap_ci(samples: &[f64], p: f64, resamples: usize, rng: &mut ChaCha8Rng) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::EmptySeries("bootstrap of no samples".into()));
    }
    if resamples == 0 {
        return Err(Error::Invalid("bootstrap needs at least one resample".into()));
    }
    let n = samples.len();
    let mut draw = vec![0.0; n];
    let mut metric = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        for x in draw.iter_mut() {
            *x = samples[uniform_index(rng, n)];
        }
        draw.sort_by(f64::total_cmp);
        metric.push(percentile_sorted(&draw, p));
    }
    metric.sort_by(f64::total_cmp);
    Ok((percentile_sorted(&metric, CI_LOW), percentile_sorted(&metric, CI_HIGH)))
}

pub const CI_LOW: f64 = 0.32;
pub const CI_HIGH: f64 = 0.68;

/// A percentile point estimate with its bootstrap interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub ci: (f64, f64),
}

impl Estimate {
    fn of(samples: &[f64], p: f64, resamples: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        Ok(Estimate {
            value: percentile(samples, p)?,
            ci: bootstrap_ci(samples, p, resamples, rng)?,
        })
    }

    fn map(self, f: impl Fn(f64) -> f64) -> Self {
        Estimate {
            value: f(self.value),
            ci: (f(self.ci.0), f(self.ci.1)),
        }
    }
}

/// Compound annual growth rate of a yield multiple. A non-positive yield
/// maps to -1 (everything lost).
pub fn cagr(final_yield: f64, years: f64) -> f64 {
    if final_yield > 0.0 {
        final_yield.powf(1.0 / years) - 1.0
    } else {
        -1.0
    }
}

/// Risk and reward of a set of realizations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsSummary {
    /// Median final yield.
    pub reward: Estimate,
    /// 5th percentile of final yield.
    pub risk_rational: Estimate,
    /// 5th percentile of the minimal yield along the way.
    pub risk_min_yield: Estimate,
    /// Median maximal drawdown.
    pub risk_drawdown: Estimate,
    /// Annual growth implied by the reward and its interval.
    pub cagr_reward: Estimate,
    pub realizations: usize,
    pub insolvent: usize,
}

impl MetricsSummary {
    pub fn insolvent_fraction(&self) -> f64 {
        self.insolvent as f64 / self.realizations as f64
    }
}

/// Summarizes realizations over `years`. Each metric's bootstrap draws from
/// its own stream of `seed`, so results do not depend on evaluation order.
pub fn summarize(results: &[RealizationResult], years: f64, resamples: usize, seed: u64) -> Result<MetricsSummary> {
    let finals: Vec<f64> = results.iter().map(|r| r.final_yield).collect();
    let mins: Vec<f64> = results.iter().map(|r| r.min_yield).collect();
    let drawdowns: Vec<f64> = results.iter().map(|r| r.max_drawdown).collect();
    let rng = |k: u64| stream(seed, u64::MAX - k);
    let reward = Estimate::of(&finals, 0.5, resamples, &mut rng(0))?;
    Ok(MetricsSummary {
        reward,
        risk_rational: Estimate::of(&finals, 0.05, resamples, &mut rng(1))?,
        risk_min_yield: Estimate::of(&mins, 0.05, resamples, &mut rng(2))?,
        risk_drawdown: Estimate::of(&drawdowns, 0.5, resamples, &mut rng(3))?,
        cagr_reward: reward.map(|y| cagr(y, years)),
        realizations: results.len(),
        insolvent: results.iter().filter(|r| r.insolvent).count(),
    })
}
