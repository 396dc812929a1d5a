//! Reflection laws for the angle between the outgoing ray and the inward normal.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

/// Symmetric law of the reflection angle `α`, bounded strictly inside `(-π/2, π/2)`.
///
/// Only laws whose `E[tan² α]` has a closed form are provided.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReflectionLaw {
    /// Uniform on `(-α₀, α₀)`.
    Uniform { alpha0: f64 },
    /// `±a` with probability 1/2 each.
    TwoPoint { a: f64 },
    /// Always along the normal.
    Degenerate,
}

impl ReflectionLaw {
    pub fn uniform(alpha0: f64) -> Result<Self> {
        check_angle(alpha0)?;
        Ok(Self::Uniform { alpha0 })
    }

    pub fn two_point(a: f64) -> Result<Self> {
        check_angle(a)?;
        Ok(Self::TwoPoint { a })
    }

    /// Parses `uniform:0.7854`, `twopoint:0.5236` or `degenerate`.
    pub fn parse(spec: &str) -> Result<Self> {
        let lower = spec.trim().to_ascii_lowercase();
        if lower == "degenerate" {
            return Ok(Self::Degenerate);
        }
        let (kind, arg) = lower.split_once(':').ok_or_else(|| {
            Error::InvalidLaw(format!(
                "expected uniform:<a0>, twopoint:<a> or degenerate, got '{spec}'"
            ))
        })?;
        let v: f64 = arg
            .trim()
            .parse()
            .map_err(|_| Error::InvalidLaw(format!("bad angle '{arg}' in '{spec}'")))?;
        match kind.trim() {
            "uniform" => Self::uniform(v),
            "twopoint" => Self::two_point(v),
            other => Err(Error::InvalidLaw(format!("unknown law '{other}'"))),
        }
    }

    /// Almost-sure bound on `|α|`.
    pub fn bound(&self) -> f64 {
        match *self {
            Self::Uniform { alpha0 } => alpha0,
            Self::TwoPoint { a } => a,
            Self::Degenerate => 0.0,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, Self::Degenerate)
    }

    /// Maps a uniform variate `u ∈ [0, 1)` to an angle. Replacing `u` by `1 - u`
    /// flips the sign of the result, which is what makes the law symmetric.
    pub fn alpha_from_uniform(&self, u: f64) -> f64 {
        match *self {
            Self::Uniform { alpha0 } => alpha0 * (2.0 * u - 1.0),
            Self::TwoPoint { a } => {
                if u < 0.5 {
                    -a
                } else {
                    a
                }
            }
            Self::Degenerate => 0.0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Degenerate => 0.0,
            _ => self.alpha_from_uniform(rng.gen::<f64>()),
        }
    }

    /// Closed-form `E[tan² α]`.
    pub fn tan2_moment(&self) -> f64 {
        match *self {
            Self::Uniform { alpha0 } => alpha0.tan() / alpha0 - 1.0,
            Self::TwoPoint { a } => {
                let t = a.tan();
                t * t
            }
            Self::Degenerate => 0.0,
        }
    }
}

fn check_angle(a: f64) -> Result<()> {
    if a > 0.0 && a < FRAC_PI_2 {
        Ok(())
    } else {
        Err(Error::InvalidLaw(format!(
            "angle bound must lie in (0, π/2), got {a}"
        )))
    }
}

impl fmt::Display for ReflectionLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uniform { alpha0 } => write!(f, "uniform:{alpha0}"),
            Self::TwoPoint { a } => write!(f, "twopoint:{a}"),
            Self::Degenerate => write!(f, "degenerate"),
        }
    }
}
