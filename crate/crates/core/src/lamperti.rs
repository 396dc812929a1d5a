//! The rescaled process `ζ = h(ξ^{(1)})`, closed-form jump moments, regime
//! constants and the recurrence/transience classifier.

use std::fmt;

use rayon::prelude::*;

use crate::billiard::{collision_step, CollisionState};
use crate::error::{Error, Result};
use crate::geometry::{Family, Tube};
use crate::reflection::ReflectionLaw;
use crate::rng;
use crate::stats::Moments;

/// Tolerance for treating `γ` as equal to a threshold.
pub const CRITICAL_TOL: f64 = 1e-12;

/// Samples per parallel block when estimating moments.
const BLOCK: u64 = 1 << 16;

/// `h(x) = x / g(x)`.
pub fn scale_map(tube: &Tube, x: f64) -> Result<f64> {
    Ok(x / tube.half_width(x)?)
}

/// Solves `h(x) = y` for `x ≥ A` (or `x ≥ 1` on the power family).
pub fn inverse_scale_map(tube: &Tube, y: f64) -> Result<f64> {
    if let Family::Power { gamma } = tube.family() {
        if *gamma < 1.0 {
            let x = y.powf(1.0 / (1.0 - gamma));
            return if x >= 1.0 {
                Ok(x)
            } else {
                Err(Error::Domain { x })
            };
        }
    }
    let h = |x: f64| x / tube.g(x);
    let a = tube.a();
    if !(y >= h(a)) {
        return Err(Error::Range {
            what: "scale level",
            detail: format!("y = {y} is below h(A) = {}", h(a)),
        });
    }
    let (mut lo, mut hi) = (a, 2.0 * a);
    while h(hi) < y {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Range {
                what: "scale level",
                detail: format!("h does not reach y = {y}"),
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if h(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Leading-order `(E[Δ], E[Δ²])` for a single jump from `x`. The dropped
/// terms are `O(g³/x²)` and `O(g³/x)`; both vanish in a flat strip.
pub fn predicted_xi_moments(tube: &Tube, law: &ReflectionLaw, x: f64) -> Result<(f64, f64)> {
    let ev = tube.boundary_eval(x)?;
    let t = law.tan2_moment();
    Ok((2.0 * ev.dg * ev.g * (1.0 + 2.0 * t), 4.0 * ev.g * ev.g * t))
}

/// Leading-order `(E[Δζ], E[Δζ²])` at level `y` of the rescaled process.
pub fn predicted_zeta_moments(gamma: f64, tan2: f64, y: f64) -> (f64, f64) {
    let m1 = 2.0 * gamma * (1.0 - gamma) * (1.0 + tan2) / y;
    let m2 = 4.0 * (1.0 - gamma).powi(2) * tan2;
    (m1, m2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeConstants {
    pub gamma_c: f64,
    /// Maxima exponent of a positive-recurrent narrowing tube, when defined.
    pub rho: Option<f64>,
}

/// `γ_c = t/(1+2t)` and `ρ(γ) = t/((1−2γ)t − γ)` (the latter only for `γ < −t`).
pub fn regime_constants(gamma: f64, tan2: f64) -> RegimeConstants {
    let gamma_c = tan2 / (1.0 + 2.0 * tan2);
    let rho = (gamma < -tan2).then(|| tan2 / ((1.0 - 2.0 * gamma) * tan2 - gamma));
    RegimeConstants { gamma_c, rho }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Transient,
    NullRecurrent,
    PositiveRecurrent,
    CriticalNull,
}

impl Regime {
    /// Null recurrence at or away from criticality collapses to one class.
    pub fn coarse(self) -> Regime {
        match self {
            Regime::CriticalNull => Regime::NullRecurrent,
            r => r,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Transient => "transient",
            Regime::NullRecurrent => "null-recurrent",
            Regime::PositiveRecurrent => "positive-recurrent",
            Regime::CriticalNull => "critical-null-recurrent",
        })
    }
}

/// Which comparison decided the regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// Growing tube, `γ` compared with `γ_c`.
    GrowingThreshold,
    /// Narrowing tube, `γ` compared with `−E[tan²α]`.
    NarrowingThreshold,
    /// `γ` sits on a threshold and the law is non-degenerate.
    Critical,
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::GrowingThreshold => "gamma vs gamma_c",
            Basis::NarrowingThreshold => "gamma vs -E[tan^2]",
            Basis::Critical => "critical threshold",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassificationReport {
    pub gamma: f64,
    pub tan2: f64,
    pub gamma_c: f64,
    pub rho: Option<f64>,
    pub regime: Regime,
    pub basis: Basis,
    /// `γ` was within [`CRITICAL_TOL`] of a threshold.
    pub near_critical: bool,
}

pub fn classify_regime(gamma: f64, law: &ReflectionLaw) -> Result<ClassificationReport> {
    if !(gamma < 1.0) {
        return Err(Error::Parameter(format!(
            "classification needs gamma < 1, got {gamma}"
        )));
    }
    let tan2 = law.tan2_moment();
    let RegimeConstants { gamma_c, rho } = regime_constants(gamma, tan2);
    let (threshold, below, above, basis) = if gamma >= 0.0 {
        (
            gamma_c,
            Regime::NullRecurrent,
            Regime::Transient,
            Basis::GrowingThreshold,
        )
    } else {
        (
            -tan2,
            Regime::PositiveRecurrent,
            Regime::NullRecurrent,
            Basis::NarrowingThreshold,
        )
    };
    let near_critical = (gamma - threshold).abs() <= CRITICAL_TOL;
    let (regime, basis) = if near_critical {
        if law.is_degenerate() {
            return Err(Error::Range {
                what: "classification",
                detail: format!("gamma = {gamma} is critical for a degenerate law (unclassified)"),
            });
        }
        (Regime::CriticalNull, Basis::Critical)
    } else if gamma < threshold {
        (below, basis)
    } else {
        (above, basis)
    };
    Ok(ClassificationReport {
        gamma,
        tan2,
        gamma_c,
        rho,
        regime,
        basis,
        near_critical,
    })
}

/// Which coordinate the moments are taken on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// Horizontal coordinate `ξ^{(1)}`; levels are `x` values.
    Xi,
    /// Rescaled coordinate `ζ = h(ξ^{(1)})`; levels are `y` values.
    Zeta,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentRow {
    pub level: f64,
    pub n: u64,
    pub mu1_hat: f64,
    pub mu1_se: f64,
    pub mu2_hat: f64,
    pub mu2_se: f64,
    pub mu1_pred: f64,
    pub mu2_pred: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentProfile {
    pub scale: Scale,
    pub rows: Vec<MomentRow>,
}

/// Monte Carlo estimate of the first two jump moments at each grid level,
/// drawing independent single jumps from the upper boundary point.
pub fn empirical_moments(
    tube: &Tube,
    law: &ReflectionLaw,
    grid: &[f64],
    n_samples: u64,
    seed: u64,
    scale: Scale,
) -> Result<MomentProfile> {
    if n_samples < 1000 {
        return Err(Error::Parameter(format!(
            "n_samples must be >= 1000, got {n_samples}"
        )));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Parameter("grid must be strictly increasing".into()));
    }
    let gamma = tube.gamma();
    let tan2 = law.tan2_moment();
    let rows = grid
        .iter()
        .enumerate()
        .map(|(i, &level)| {
            let x = match scale {
                Scale::Xi => level,
                Scale::Zeta => inverse_scale_map(tube, level)?,
            };
            if !(x > tube.a()) {
                return Err(Error::Parameter(format!(
                    "grid level {level} maps to x = {x}, not above A = {}",
                    tube.a()
                )));
            }
            let h0 = match scale {
                Scale::Xi => x,
                Scale::Zeta => level,
            };
            let (d1, d2) = sample_level(tube, law, x, h0, n_samples, seed, i as u64, scale)?;
            let (mu1_pred, mu2_pred) = match scale {
                Scale::Xi => predicted_xi_moments(tube, law, x)?,
                Scale::Zeta => predicted_zeta_moments(gamma, tan2, level),
            };
            Ok(MomentRow {
                level,
                n: d1.count(),
                mu1_hat: d1.mean(),
                mu1_se: d1.std_err(),
                mu2_hat: d2.mean(),
                mu2_se: d2.std_err(),
                mu1_pred,
                mu2_pred,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MomentProfile { scale, rows })
}

#[allow(clippy::too_many_arguments)]
fn sample_level(
    tube: &Tube,
    law: &ReflectionLaw,
    x: f64,
    h0: f64,
    n_samples: u64,
    seed: u64,
    level_index: u64,
    scale: Scale,
) -> Result<(Moments, Moments)> {
    let blocks = n_samples.div_ceil(BLOCK);
    let parts = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut r = rng::stream(seed, rng::substream_id(level_index, b));
            let count = BLOCK.min(n_samples - b * BLOCK);
            let state = CollisionState::start(x);
            let (mut d1, mut d2) = (Moments::default(), Moments::default());
            for _ in 0..count {
                let step = collision_step(tube, law, &state, &mut r)?;
                let x1 = step.next.point.x;
                let d = match scale {
                    Scale::Xi => x1 - x,
                    Scale::Zeta => scale_map(tube, x1)? - h0,
                };
                d1.push(d);
                d2.push(d * d);
            }
            Ok((d1, d2))
        })
        .collect::<Result<Vec<_>>>()?;
    // Merge in block order so the result does not depend on scheduling.
    let mut out = (Moments::default(), Moments::default());
    for (a, b) in &parts {
        out.0.merge(a);
        out.1.merge(b);
    }
    Ok(out)
}
