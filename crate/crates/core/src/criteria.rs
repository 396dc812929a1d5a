//! Almost-sure envelope curves built from `(f, a, v)` and pointwise checks of
//! Lamperti-type drift conditions on `μ₁`, `μ₂`.
//!
//! Every "for all x large enough" hypothesis is only ever checked on a finite
//! window of levels; a passing check means window-verified, nothing more.

use std::f64::consts::E;
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lamperti::MomentProfile;
use crate::rng::{self, StreamRng};
use crate::stats::Moments;

/// Nondecreasing test function `f` on `[0, ∞)`.
#[derive(Debug, Clone, PartialEq)]
pub enum FDescriptor {
    /// `y²`
    Square,
    /// `y^{1+κ} / log(1+y)`
    PowerLogDiv(f64),
    /// `y^{1+κ} · log(1+y)`
    PowerLogMul(f64),
    Constant(f64),
    Table(MonotoneTable),
}

/// Piecewise-linear nondecreasing function through the given knots,
/// constant outside them.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneTable {
    knots: Vec<(f64, f64)>,
}

impl MonotoneTable {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::Parameter(
                "monotone table needs at least one knot".into(),
            ));
        }
        let ok = knots.iter().all(|(x, y)| x.is_finite() && y.is_finite())
            && knots
                .windows(2)
                .all(|w| w[1].0 > w[0].0 && w[1].1 >= w[0].1);
        if !ok {
            return Err(Error::Parameter(
                "table knots must have increasing x and nondecreasing values".into(),
            ));
        }
        Ok(Self { knots })
    }

    pub fn eval(&self, y: f64) -> f64 {
        let k = &self.knots;
        let i = k.partition_point(|p| p.0 <= y);
        if i == 0 {
            return k[0].1;
        }
        if i == k.len() {
            return k[k.len() - 1].1;
        }
        let (x0, y0) = k[i - 1];
        let (x1, y1) = k[i];
        y0 + (y1 - y0) * (y - x0) / (x1 - x0)
    }
}

impl FDescriptor {
    pub fn eval(&self, y: f64) -> f64 {
        match self {
            Self::Square => y * y,
            Self::PowerLogDiv(k) => {
                if y <= 0.0 {
                    0.0
                } else {
                    y.powf(1.0 + k) / y.ln_1p()
                }
            }
            Self::PowerLogMul(k) => {
                if y <= 0.0 {
                    0.0
                } else {
                    y.powf(1.0 + k) * y.ln_1p()
                }
            }
            Self::Constant(c) => *c,
            Self::Table(t) => t.eval(y),
        }
    }

    /// Parses `square`, `powlogdiv:3`, `powlogmul:3` or `const:5`.
    pub fn parse(spec: &str) -> Result<Self> {
        let lower = spec.trim().to_ascii_lowercase();
        if lower == "square" {
            return Ok(Self::Square);
        }
        let (kind, arg) = lower
            .split_once(':')
            .ok_or_else(|| Error::Parameter(format!("unknown f descriptor '{spec}'")))?;
        let v: f64 = arg
            .trim()
            .parse()
            .map_err(|_| Error::Parameter(format!("bad number '{arg}' in '{spec}'")))?;
        match kind {
            "powlogdiv" => Ok(Self::PowerLogDiv(v)),
            "powlogmul" => Ok(Self::PowerLogMul(v)),
            "const" => Ok(Self::Constant(v)),
            other => Err(Error::Parameter(format!("unknown f descriptor '{other}'"))),
        }
    }
}

impl fmt::Display for FDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Square => write!(f, "square"),
            Self::PowerLogDiv(k) => write!(f, "powlogdiv:{k}"),
            Self::PowerLogMul(k) => write!(f, "powlogmul:{k}"),
            Self::Constant(c) => write!(f, "const:{c}"),
            Self::Table(t) => write!(f, "table[{}]", t.knots.len()),
        }
    }
}

/// `log` clamped below at 1, so that `log`-powers stay monotone near the origin.
fn clamped_log(y: f64) -> f64 {
    y.max(E).ln()
}

/// Simple growth functions used for `a` and `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Growth {
    /// `x · (log x)^p`
    XLogPow(f64),
    /// `(log x)^p`
    LogPow(f64),
    /// `x^p`
    Power(f64),
    Const(f64),
}

impl Growth {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Growth::XLogPow(p) => x * clamped_log(x).powf(p),
            Growth::LogPow(p) => clamped_log(x).powf(p),
            Growth::Power(p) => x.powf(p),
            Growth::Const(c) => c,
        }
    }
}

/// `(f, a, v, ε, b)` for the upper and lower envelope curves.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleTriple {
    pub f: FDescriptor,
    pub a: Growth,
    pub v: Growth,
    pub eps: f64,
    /// Jump bound.
    pub b: f64,
}

impl ScaleTriple {
    /// Defaults `a(x) = x (log x)^{1.5}`, `v(x) = (log x)^{1.5}`, `ε = 1`, `b = 1`.
    pub fn new(f: FDescriptor) -> Self {
        Self {
            f,
            a: Growth::XLogPow(1.5),
            v: Growth::LogPow(1.5),
            eps: 1.0,
            b: 1.0,
        }
    }
}

/// Bisection stops when the bracket is this wide or cannot be split further.
const BISECT_WIDTH: f64 = 1e-9;

/// Smallest `y ≥ 0` with `pred(y)` for a predicate monotone in `y`, or `∞`.
/// Returns the bracket `(lo, hi)` with `pred(hi)` and, unless `lo == 0`,
/// `!pred(lo)`.
fn monotone_threshold(pred: impl Fn(f64) -> bool) -> (f64, f64) {
    if pred(0.0) {
        return (0.0, 0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while !pred(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return (f64::INFINITY, f64::INFINITY);
        }
    }
    for _ in 0..2000 {
        if hi - lo <= BISECT_WIDTH {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

/// Generalised inverse `sup{y ≥ 0 : f(y) < x}`: `0` when no `y` qualifies and
/// `∞` when `f` stays below `x`.
pub fn f_inverse(f: &FDescriptor, x: f64) -> f64 {
    if let FDescriptor::Square = f {
        return if x > 0.0 { x.sqrt() } else { 0.0 };
    }
    let (lo, hi) = monotone_threshold(|y| f.eval(y) >= x);
    if hi == 0.0 {
        0.0
    } else {
        lo
    }
}

/// `r_v(x) = inf{y ≥ 0 : ε⁻¹ v(y) f(y + b) ≥ x}`.
pub fn r_v(triple: &ScaleTriple, x: f64) -> f64 {
    let (_, hi) =
        monotone_threshold(|y| triple.v.eval(y) * triple.f.eval(y + triple.b) / triple.eps >= x);
    hi
}

/// Upper envelope `f⁻¹(a(2n))` for the running maximum at time `n`.
pub fn upper_bound_curve(triple: &ScaleTriple, n: u64) -> f64 {
    f_inverse(&triple.f, triple.a.eval(2.0 * n as f64))
}

/// Lower envelope `r_v(n) − b` for the running maximum at time `n`.
pub fn lower_bound_curve(triple: &ScaleTriple, n: u64) -> f64 {
    r_v(triple, n as f64) - triple.b
}

/// `μ₁`, `μ₂` at one level, with standard errors (zero for exact values).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentPoint {
    pub x: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub se1: f64,
    pub se2: f64,
}

/// Exact moments on `n` log-spaced levels in `[lo, hi]`.
pub fn analytic_points(
    moments: impl Fn(f64) -> (f64, f64),
    lo: f64,
    hi: f64,
    n: usize,
) -> Vec<MomentPoint> {
    let n = n.max(2);
    (0..n)
        .map(|i| {
            let x = lo * (hi / lo).powf(i as f64 / (n - 1) as f64);
            let (mu1, mu2) = moments(x);
            MomentPoint {
                x,
                mu1,
                mu2,
                se1: 0.0,
                se2: 0.0,
            }
        })
        .collect()
}

pub fn profile_points(profile: &MomentProfile) -> Vec<MomentPoint> {
    profile
        .rows
        .iter()
        .map(|r| MomentPoint {
            x: r.level,
            mu1: r.mu1_hat,
            mu2: r.mu2_hat,
            se1: r.mu1_se,
            se2: r.mu2_se,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    NotApplicable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::NotApplicable => "not-applicable",
        })
    }
}

/// Names of the individual checks, in report order.
pub mod names {
    /// `μ₂ ≥ v > 0`
    pub const VARIANCE_FLOOR: &str = "variance_floor";
    /// `2x|μ₁| ≤ μ₂`
    pub const NULL_RECURRENCE: &str = "null_recurrence";
    /// `2x|μ₁| ≤ (1 + 1/log x) μ₂`
    pub const REFINED_NULL_RECURRENCE: &str = "refined_null_recurrence";
    /// `2xμ₁ − μ₂ > δ`
    pub const TRANSIENCE: &str = "transience";
    /// `2xμ₁ + μ₂ < −δ`
    pub const POSITIVE_RECURRENCE: &str = "positive_recurrence";
    /// `2xμ₁ ≤ C`
    pub const UPPER_GROWTH: &str = "upper_growth";
    /// `2xμ₁ + μ₂ ≥ δ`
    pub const LOWER_GROWTH: &str = "lower_growth";
    /// `2xμ₁ − μ₂ > δ` without the variance floor (lower floor on `η_n`)
    pub const LOWER_FLOOR: &str = "lower_floor";
    /// `−2κμ₂ ≤ 2xμ₁ ≤ −κμ₂`, `κ > 1`
    pub const UPPER_MAXIMA: &str = "upper_maxima";
    /// `2xμ₁ + κμ₂ ≥ 0`, `κ ≥ 1`
    pub const LOWER_MAXIMA: &str = "lower_maxima";
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub range: (f64, f64),
    /// Worst slack over the window (`≥ threshold` means the inequality held).
    pub margin: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionParams {
    pub h: f64,
    pub delta: f64,
    /// Bound `C` in `2xμ₁ ≤ C`.
    pub c_upper: f64,
    pub kappa_upper: Option<f64>,
    pub kappa_lower: Option<f64>,
    /// Required floor `v` for `μ₂` (strict inequality when zero).
    pub v_floor: f64,
    /// Standard-error multiplier for estimated moments.
    pub z: f64,
}

impl Default for ConditionParams {
    fn default() -> Self {
        Self {
            h: 1.0,
            delta: 1e-6,
            c_upper: 10.0,
            kappa_upper: None,
            kappa_lower: None,
            v_floor: 0.0,
            z: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftConditions {
    pub params: ConditionParams,
    pub checks: Vec<ConditionCheck>,
}

impl DriftConditions {
    pub fn get(&self, name: &str) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn verdict(&self, name: &str) -> Verdict {
        self.get(name).map_or(Verdict::NotApplicable, |c| c.verdict)
    }

    /// Regime implied by the recurrence/transience checks, if any holds.
    pub fn regime(&self) -> Option<crate::lamperti::Regime> {
        use crate::lamperti::Regime;
        if self.verdict(names::TRANSIENCE) == Verdict::Holds {
            Some(Regime::Transient)
        } else if self.verdict(names::POSITIVE_RECURRENCE) == Verdict::Holds {
            Some(Regime::PositiveRecurrent)
        } else if self.verdict(names::NULL_RECURRENCE) == Verdict::Holds
            || self.verdict(names::REFINED_NULL_RECURRENCE) == Verdict::Holds
        {
            Some(Regime::NullRecurrent)
        } else {
            None
        }
    }
}

/// One inequality `slack ≥ threshold` (or `>` when `strict`), with the
/// standard error of `slack` and a magnitude for the rounding allowance.
struct Slack {
    value: f64,
    se: f64,
    scale: f64,
}

fn evaluate(
    name: &'static str,
    pts: &[MomentPoint],
    z: f64,
    threshold: f64,
    strict: bool,
    slack: impl Fn(&MomentPoint) -> Slack,
) -> ConditionCheck {
    let range = (pts[0].x, pts[pts.len() - 1].x);
    let mut margin = f64::INFINITY;
    let mut ok = true;
    for p in pts {
        let s = slack(p);
        margin = margin.min(s.value);
        let v = s.value + z * s.se;
        let pass = if strict {
            v > threshold
        } else {
            v >= threshold - 1e-12 * s.scale
        };
        ok &= pass;
    }
    ConditionCheck {
        name,
        range,
        margin,
        verdict: if ok { Verdict::Holds } else { Verdict::Fails },
    }
}

fn not_applicable(name: &'static str, pts: &[MomentPoint]) -> ConditionCheck {
    ConditionCheck {
        name,
        range: (pts[0].x, pts[pts.len() - 1].x),
        margin: f64::NAN,
        verdict: Verdict::NotApplicable,
    }
}

/// Evaluates every drift condition pointwise on the levels above `H`.
pub fn lamperti_conditions(
    points: &[MomentPoint],
    params: ConditionParams,
) -> Result<DriftConditions> {
    let pts: Vec<MomentPoint> = points.iter().copied().filter(|p| p.x > params.h).collect();
    if pts.len() < 2 {
        return Err(Error::Range {
            what: "moment grid",
            detail: format!(
                "need at least two levels above H = {}, got {}",
                params.h,
                pts.len()
            ),
        });
    }
    let z = params.z;
    let d = params.delta;
    let two_x = |p: &MomentPoint| (2.0 * p.x * p.mu1, 2.0 * p.x * p.se1);
    let comb = |a: f64, b: f64| (a * a + b * b).sqrt();

    let floor = evaluate(
        names::VARIANCE_FLOOR,
        &pts,
        z,
        params.v_floor,
        params.v_floor == 0.0,
        |p| Slack {
            value: p.mu2,
            se: p.se2,
            scale: p.mu2.abs(),
        },
    );
    let floor_ok = floor.verdict == Verdict::Holds;
    let mut checks = vec![floor];

    let gated = |check: ConditionCheck| {
        if floor_ok {
            check
        } else {
            not_applicable(check.name, &pts)
        }
    };

    checks.push(gated(evaluate(
        names::NULL_RECURRENCE,
        &pts,
        z,
        0.0,
        false,
        |p| {
            let (m, s) = two_x(p);
            Slack {
                value: p.mu2 - m.abs(),
                se: comb(s, p.se2),
                scale: m.abs() + p.mu2,
            }
        },
    )));
    checks.push(gated(evaluate(
        names::REFINED_NULL_RECURRENCE,
        &pts,
        z,
        0.0,
        false,
        |p| {
            let (m, s) = two_x(p);
            let w = 1.0 + 1.0 / p.x.ln();
            Slack {
                value: w * p.mu2 - m.abs(),
                se: comb(s, w * p.se2),
                scale: m.abs() + w * p.mu2,
            }
        },
    )));
    let transient = |p: &MomentPoint| {
        let (m, s) = two_x(p);
        Slack {
            value: m - p.mu2,
            se: comb(s, p.se2),
            scale: m.abs() + p.mu2,
        }
    };
    checks.push(gated(evaluate(
        names::TRANSIENCE,
        &pts,
        z,
        d,
        true,
        transient,
    )));
    checks.push(gated(evaluate(
        names::POSITIVE_RECURRENCE,
        &pts,
        z,
        d,
        true,
        |p| {
            let (m, s) = two_x(p);
            Slack {
                value: -(m + p.mu2),
                se: comb(s, p.se2),
                scale: m.abs() + p.mu2,
            }
        },
    )));
    checks.push(evaluate(names::UPPER_GROWTH, &pts, z, 0.0, false, |p| {
        let (m, s) = two_x(p);
        Slack {
            value: params.c_upper - m,
            se: s,
            scale: m.abs() + params.c_upper.abs(),
        }
    }));
    checks.push(evaluate(names::LOWER_GROWTH, &pts, z, d, false, |p| {
        let (m, s) = two_x(p);
        Slack {
            value: m + p.mu2,
            se: comb(s, p.se2),
            scale: m.abs() + p.mu2,
        }
    }));
    checks.push(evaluate(names::LOWER_FLOOR, &pts, z, d, true, transient));
    checks.push(match params.kappa_upper {
        Some(k) if k > 1.0 => gated(evaluate(names::UPPER_MAXIMA, &pts, z, 0.0, false, |p| {
            let (m, s) = two_x(p);
            let lower = m + 2.0 * k * p.mu2;
            let upper = -k * p.mu2 - m;
            let (value, se) = if lower < upper {
                (lower, comb(s, 2.0 * k * p.se2))
            } else {
                (upper, comb(s, k * p.se2))
            };
            Slack {
                value,
                se,
                scale: m.abs() + 2.0 * k * p.mu2,
            }
        })),
        _ => not_applicable(names::UPPER_MAXIMA, &pts),
    });
    checks.push(match params.kappa_lower {
        Some(k) if k >= 1.0 => gated(evaluate(names::LOWER_MAXIMA, &pts, z, 0.0, false, |p| {
            let (m, s) = two_x(p);
            Slack {
                value: m + k * p.mu2,
                se: comb(s, k * p.se2),
                scale: m.abs() + k * p.mu2,
            }
        })),
        _ => not_applicable(names::LOWER_MAXIMA, &pts),
    });
    Ok(DriftConditions { params, checks })
}

/// Direction of the Lyapunov drift bound being checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftBound {
    /// `E[f(η′) − f(η) | η = x] ≤ C`
    Upper,
    /// `E[f(η′) − f(η) | η = x] ≥ ε > 0`
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovRow {
    pub x: f64,
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovReport {
    pub bound: DriftBound,
    pub rows: Vec<LyapunovRow>,
    /// `C` or `ε`, calibrated at the lowest level.
    pub constant: f64,
    pub holds: bool,
}

/// Monte Carlo drift of `f` along one step of a chain, per level. The bound
/// constant is calibrated at the first level (mean ± 3 standard errors) and
/// the remaining levels must agree with it within 3 standard errors.
pub fn lyapunov_drift_check<S>(
    step: S,
    f: &FDescriptor,
    levels: &[f64],
    n_samples: u64,
    seed: u64,
    bound: DriftBound,
) -> Result<LyapunovReport>
where
    S: Fn(f64, &mut StreamRng) -> f64 + Sync,
{
    if levels.is_empty() || n_samples < 2 {
        return Err(Error::Parameter(
            "need at least one level and two samples".into(),
        ));
    }
    const BLOCK: u64 = 1 << 16;
    let rows: Vec<LyapunovRow> = levels
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let fx = f.eval(x);
            let blocks = n_samples.div_ceil(BLOCK);
            let parts: Vec<Moments> = (0..blocks)
                .into_par_iter()
                .map(|b| {
                    let mut r = rng::stream(seed, rng::substream_id(i as u64, b));
                    let count = BLOCK.min(n_samples - b * BLOCK);
                    (0..count).map(|_| f.eval(step(x, &mut r)) - fx).collect()
                })
                .collect();
            let mut m = Moments::default();
            for p in &parts {
                m.merge(p);
            }
            LyapunovRow {
                x,
                mean: m.mean(),
                se: m.std_err(),
            }
        })
        .collect();
    let first = rows[0];
    let (constant, holds) = match bound {
        DriftBound::Upper => {
            let c = first.mean + 3.0 * first.se;
            (c, rows.iter().all(|r| r.mean - 3.0 * r.se <= c))
        }
        DriftBound::Lower => {
            let e = first.mean - 3.0 * first.se;
            (e, e > 0.0 && rows.iter().all(|r| r.mean + 3.0 * r.se >= e))
        }
    };
    Ok(LyapunovReport {
        bound,
        rows,
        constant,
        holds,
    })
}
