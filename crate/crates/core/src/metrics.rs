//! Population metrics per step and Monte Carlo aggregates across runs.

use crate::error::{Error, Result};
use crate::population::AgentState;
use crate::scalar::{hundred, Scalar};

/// Affective distance of one agent: in-party minus out-party affect.
pub fn affective_distance<T: Scalar>(agent: &AgentState<T>) -> T {
    agent.ipa - agent.opa
}

/// Mean affective distance over the population.
pub fn group_ap<T: Scalar>(agents: &[AgentState<T>]) -> Result<T> {
    if agents.is_empty() {
        return Err(Error::Empty("affective polarization of an empty population".into()));
    }
    let sum = agents.iter().fold(T::zero(), |acc, a| acc + affective_distance(a));
    Ok(sum / T::from_usize_lossy(agents.len()))
}

/// Population means at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snapshot<T> {
    pub ap: T,
    pub ipa_mean: T,
    pub opa_mean: T,
}

impl<T: Scalar> Snapshot<T> {
    pub fn of(agents: &[AgentState<T>]) -> Result<Self> {
        let ap = group_ap(agents)?;
        let n = T::from_usize_lossy(agents.len());
        let (ipa, opa) = agents
            .iter()
            .fold((T::zero(), T::zero()), |(i, o), a| (i + a.ipa, o + a.opa));
        Ok(Snapshot {
            ap,
            ipa_mean: ipa / n,
            opa_mean: opa / n,
        })
    }
}

/// Per-step population means of one run, indexed by `t` in `0..=t_f`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunTimeSeries<T> {
    pub ap: Vec<T>,
    pub ipa_mean: Vec<T>,
    pub opa_mean: Vec<T>,
}

impl<T: Scalar> RunTimeSeries<T> {
    pub fn with_capacity(cap: usize) -> Self {
        RunTimeSeries {
            ap: Vec::with_capacity(cap),
            ipa_mean: Vec::with_capacity(cap),
            opa_mean: Vec::with_capacity(cap),
        }
    }

    pub fn push(&mut self, s: Snapshot<T>) {
        self.ap.push(s.ap);
        self.ipa_mean.push(s.ipa_mean);
        self.opa_mean.push(s.opa_mean);
    }

    pub fn len(&self) -> usize {
        self.ap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ap.is_empty()
    }

    pub fn at(&self, t: usize) -> Snapshot<T> {
        Snapshot {
            ap: self.ap[t],
            ipa_mean: self.ipa_mean[t],
            opa_mean: self.opa_mean[t],
        }
    }
}

/// Mean and sample standard deviation of one quantity at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSd<T> {
    pub mean: T,
    pub sd: T,
}

/// Pointwise cross-run statistics for one sweep cell.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateSeries<T> {
    pub ap: Vec<MeanSd<T>>,
    pub ipa: Vec<MeanSd<T>>,
    pub opa: Vec<MeanSd<T>>,
}

impl<T> AggregateSeries<T> {
    pub fn len(&self) -> usize {
        self.ap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ap.is_empty()
    }
}

/// Mean and sample standard deviation (denominator `M - 1`, zero for a
/// single value).
pub fn mean_sd<T: Scalar>(values: &[T]) -> MeanSd<T> {
    let m = values.len();
    assert!(m > 0, "mean_sd of no values");
    let mean = values.iter().fold(T::zero(), |a, &x| a + x) / T::from_usize_lossy(m);
    let sd = if m < 2 {
        T::zero()
    } else {
        let ss = values.iter().fold(T::zero(), |a, &x| a + (x - mean) * (x - mean));
        (ss / T::from_usize_lossy(m - 1)).sqrt()
    };
    MeanSd { mean, sd }
}

/// Pointwise mean and sample sd of `ap`, `ipa_mean` and `opa_mean`.
///
/// Values at each step are summed in a fixed order (sorted), so the result
/// does not depend on the order of `runs`.
pub fn aggregate_runs<T: Scalar>(runs: &[RunTimeSeries<T>]) -> Result<AggregateSeries<T>> {
    let first = runs
        .first()
        .ok_or_else(|| Error::Empty("aggregate over zero runs".into()))?;
    let len = first.len();
    for r in runs {
        for got in [r.ap.len(), r.ipa_mean.len(), r.opa_mean.len()] {
            if got != len {
                return Err(Error::LengthMismatch { expected: len, got });
            }
        }
    }
    let mut column = Vec::with_capacity(runs.len());
    let mut stat = |pick: fn(&RunTimeSeries<T>) -> &Vec<T>, t: usize| {
        column.clear();
        column.extend(runs.iter().map(|r| pick(r)[t]));
        column.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        mean_sd(&column)
    };
    let mut out = AggregateSeries {
        ap: Vec::with_capacity(len),
        ipa: Vec::with_capacity(len),
        opa: Vec::with_capacity(len),
    };
    for t in 0..len {
        out.ap.push(stat(|r| &r.ap, t));
        out.ipa.push(stat(|r| &r.ipa_mean, t));
        out.opa.push(stat(|r| &r.opa_mean, t));
    }
    Ok(out)
}

/// Default share of the thermometer ceiling that counts as "maximum affect".
pub const TIME_TO_MAX_FRACTION: f64 = 0.9;

/// First step at which `ap(t) >= fraction * ap_max`, or `None` when the
/// series never gets there.
pub fn time_to_max<T: Scalar>(ap: &[T], ap_max: T, fraction: T) -> Option<usize> {
    let threshold = fraction * ap_max;
    ap.iter().position(|&x| x >= threshold)
}

/// Time to 90% of the 100-point ceiling.
pub fn time_to_90<T: Scalar>(ap: &[T]) -> Option<usize> {
    time_to_max(ap, hundred(), T::from_f64_lossy(TIME_TO_MAX_FRACTION))
}

/// Mean time-to-max over the runs that reached the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeToMaxSummary {
    /// `None` when no run reached the threshold.
    pub stats: Option<MeanSd<f64>>,
    pub n_reached: usize,
    pub runs: usize,
}

pub fn mean_time_to_max(hits: &[Option<usize>]) -> TimeToMaxSummary {
    let reached: Vec<f64> = hits.iter().flatten().map(|&t| t as f64).collect();
    TimeToMaxSummary {
        stats: (!reached.is_empty()).then(|| mean_sd(&reached)),
        n_reached: reached.len(),
        runs: hits.len(),
    }
}
