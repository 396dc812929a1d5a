//! Running maxima, scaling-exponent fits and passage-time summaries.

use crate::error::{Error, Result};

/// Streaming mean/variance accumulator (Welford), mergeable across workers.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    /// Combines two accumulators (Chan et al. pairwise update).
    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let nf = n as f64;
        self.mean += d * other.n as f64 / nf;
        self.m2 += other.m2 + d * d * (self.n as f64) * (other.n as f64) / nf;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn std_err(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        for v in iter {
            m.push(v);
        }
        m
    }
}

/// Running maximum of a sequence sampled at indices `n = 1, 2, 4, 8, …`.
///
/// `M_i = max_{0 ≤ m ≤ 2^i} x_m`, where `x_0` is the first value pushed.
#[derive(Debug, Clone, Default)]
pub struct DyadicMaxTracker {
    index: u64,
    max: f64,
    next: u64,
    points: Vec<(u64, f64)>,
}

impl DyadicMaxTracker {
    pub fn new() -> Self {
        Self {
            index: 0,
            max: f64::NEG_INFINITY,
            next: 1,
            points: Vec::new(),
        }
    }

    /// Pushes `x_m` for the next index `m`.
    pub fn push(&mut self, x: f64) {
        if x > self.max {
            self.max = x;
        }
        if self.index == self.next {
            self.points.push((self.index, self.max));
            self.next *= 2;
        }
        self.index += 1;
    }

    pub fn points(&self) -> &[(u64, f64)] {
        &self.points
    }

    pub fn into_points(self) -> Vec<(u64, f64)> {
        self.points
    }

    pub fn current_max(&self) -> f64 {
        self.max
    }
}

/// Exact running maxima at dyadic indices of a recorded sequence.
pub fn dyadic_max<I: IntoIterator<Item = f64>>(values: I) -> Result<Vec<(u64, f64)>> {
    let mut t = DyadicMaxTracker::new();
    let mut any = false;
    for v in values {
        t.push(v);
        any = true;
    }
    if !any {
        return Err(Error::Range {
            what: "trajectory",
            detail: "empty sequence".into(),
        });
    }
    Ok(t.into_points())
}

/// Running maximum of the horizontal coordinate of a piecewise-linear,
/// unit-speed path, sampled at times `t = 1, 2, 4, …`.
///
/// Along a segment the coordinate is linear, so `sup_{s ≤ t} X_s` is the
/// larger of the maximum over completed collision points and the
/// interpolated position at `t`.
#[derive(Debug, Clone)]
pub struct ContinuousMaxTracker {
    max: f64,
    next_t: f64,
    points: Vec<(f64, f64)>,
}

impl ContinuousMaxTracker {
    pub fn new(x0: f64) -> Self {
        Self {
            max: x0,
            next_t: 1.0,
            points: Vec::new(),
        }
    }

    /// Adds the segment from `(nu0, x0)` to `(nu1, x1)`.
    pub fn push_segment(&mut self, nu0: f64, x0: f64, nu1: f64, x1: f64) {
        let len = nu1 - nu0;
        while self.next_t <= nu1 {
            let t = self.next_t;
            let frac = if len > 0.0 { (t - nu0) / len } else { 1.0 };
            let xt = x0 + (x1 - x0) * frac;
            self.points.push((t, self.max.max(xt)));
            self.next_t *= 2.0;
        }
        if x1 > self.max {
            self.max = x1;
        }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn into_points(self) -> Vec<(f64, f64)> {
        self.points
    }
}

/// Least-squares slope of `log M` against `log n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub n_points: usize,
    pub window: (f64, f64),
}

/// Number of leading dyadic points treated as burn-in by default.
pub const DEFAULT_BURN_IN: u32 = 10;

/// Fits `log M_i = intercept + slope · log n_i` over points with
/// `window.0 ≤ n_i ≤ window.1`.
pub fn fit_exponent(points: &[(f64, f64)], window: (f64, f64)) -> Result<ExponentFit> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::Range {
            what: "fit window",
            detail: format!("[{lo}, {hi}] is empty"),
        });
    }
    let sel: Vec<(f64, f64)> = points
        .iter()
        .filter(|(n, _)| *n >= lo && *n <= hi)
        .map(|&(n, m)| (n.ln(), m.ln()))
        .collect();
    if sel.len() < 5 {
        return Err(Error::Range {
            what: "fit window",
            detail: format!("{} points in [{lo}, {hi}], need at least 5", sel.len()),
        });
    }
    if sel.iter().any(|(_, y)| !y.is_finite()) {
        return Err(Error::Range {
            what: "fit data",
            detail: "maxima must be positive".into(),
        });
    }
    let k = sel.len() as f64;
    let mx = sel.iter().map(|p| p.0).sum::<f64>() / k;
    let my = sel.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = sel.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = sel.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = sel
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let stderr = (ssr / (k - 2.0) / sxx).sqrt();
    Ok(ExponentFit {
        slope,
        intercept,
        stderr,
        n_points: sel.len(),
        window,
    })
}

/// Window `[2^lo, 2^hi]` as real bounds.
pub fn dyadic_window(lo: u32, hi: u32) -> (f64, f64) {
    (2f64.powi(lo as i32), 2f64.powi(hi as i32))
}

/// Default window for a dyadic series: drops the first [`DEFAULT_BURN_IN`] points.
pub fn default_window(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let lo = points.get(DEFAULT_BURN_IN as usize)?.0;
    let hi = points.last()?.0;
    (hi > lo).then_some((lo, hi))
}

/// Converts integer-indexed dyadic points to `f64` pairs for fitting.
pub fn as_real(points: &[(u64, f64)]) -> Vec<(f64, f64)> {
    points.iter().map(|&(n, m)| (n as f64, m)).collect()
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// First index with `value ≥ level`, for each level.
pub fn first_passage_times<I: IntoIterator<Item = f64>>(
    values: I,
    levels: &[f64],
) -> Vec<Option<u64>> {
    let mut out = vec![None; levels.len()];
    let mut remaining = levels.len();
    for (n, v) in values.into_iter().enumerate() {
        for (slot, &l) in out.iter_mut().zip(levels) {
            if slot.is_none() && v >= l {
                *slot = Some(n as u64);
                remaining -= 1;
            }
        }
        if remaining == 0 {
            break;
        }
    }
    out
}

/// Summary of one level's passage (or return) times across replicas.
#[derive(Debug, Clone, PartialEq)]
pub struct PassageSummary {
    pub level: f64,
    pub replicas: usize,
    pub reached: usize,
    /// Mean over replicas that reached the level.
    pub mean: f64,
    pub median: f64,
    pub std_err: f64,
    pub censored_fraction: f64,
    /// Set whenever any replica was censored: the mean is then a lower bound.
    pub censored: bool,
}

impl PassageSummary {
    /// Fraction of replicas that reached the level within the horizon.
    pub fn reach_fraction(&self) -> f64 {
        self.reached as f64 / self.replicas as f64
    }
}

/// Fraction of replicas that must reach a level before its mean is trusted.
pub const MIN_REACH_FRACTION: f64 = 0.8;

/// Per-level summaries; `times[r][j]` is replica `r`'s time for level `j`,
/// `None` when censored by the horizon.
pub fn passage_time_stats(levels: &[f64], times: &[Vec<Option<f64>>]) -> Vec<PassageSummary> {
    levels
        .iter()
        .enumerate()
        .map(|(j, &level)| {
            let mut hit: Vec<f64> = times
                .iter()
                .filter_map(|r| r.get(j).copied().flatten())
                .collect();
            let replicas = times.len();
            let reached = hit.len();
            let m: Moments = hit.iter().copied().collect();
            let med = if hit.is_empty() {
                f64::NAN
            } else {
                median(&mut hit)
            };
            let censored_fraction = if replicas == 0 {
                0.0
            } else {
                (replicas - reached) as f64 / replicas as f64
            };
            PassageSummary {
                level,
                replicas,
                reached,
                mean: if reached == 0 { f64::NAN } else { m.mean() },
                median: med,
                std_err: m.std_err(),
                censored_fraction,
                censored: reached < replicas,
            }
        })
        .collect()
}
