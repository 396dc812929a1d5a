//! Tube geometry: the region `{(x, y) : x > A, |y| < g(x)}`, its boundary
//! curves `y = ±g(x)`, inward normals, and exact first intersections of
//! reflected rays with the boundary.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A point or vector in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Vec2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// `self + s * dir`.
    pub fn along(self, dir: Vec2, s: f64) -> Vec2 {
        Vec2::new(self.x + s * dir.x, self.y + s * dir.y)
    }
}

/// User-supplied boundary: a callable returning `(g, g', g'')` at `x`.
#[derive(Clone)]
pub struct CustomBoundary {
    pub name: String,
    /// Growth exponent of `g` (`g(x) = x^{γ + o(1)}`), used by the scale map
    /// predictions.
    pub gamma: f64,
    pub increasing: bool,
    eval: Arc<dyn Fn(f64) -> (f64, f64, f64) + Send + Sync>,
}

impl CustomBoundary {
    pub fn new<F>(name: impl Into<String>, gamma: f64, increasing: bool, eval: F) -> Self
    where
        F: Fn(f64) -> (f64, f64, f64) + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            gamma,
            increasing,
            eval: Arc::new(eval),
        }
    }
}

impl fmt::Debug for CustomBoundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomBoundary")
            .field("name", &self.name)
            .field("gamma", &self.gamma)
            .field("increasing", &self.increasing)
            .finish_non_exhaustive()
    }
}

/// Boundary family `g`.
#[derive(Debug, Clone)]
pub enum Family {
    /// `g(x) = x^γ`.
    Power {
        gamma: f64,
    },
    /// `g(x) = (log x)^K`.
    LogPower {
        k: f64,
    },
    /// `g(x) = c`, the flat strip.
    Constant {
        c: f64,
    },
    Custom(CustomBoundary),
}

/// The tube `D(g; A)`.
#[derive(Debug, Clone)]
pub struct Tube {
    family: Family,
    a: f64,
}

/// `(g, g', g'', θ)` at a point, with `θ = arctan g'(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEval {
    pub g: f64,
    pub dg: f64,
    pub d2g: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Upper,
    Lower,
}

impl Side {
    /// +1 for the upper curve, -1 for the lower one.
    pub fn sign(self) -> f64 {
        match self {
            Side::Upper => 1.0,
            Side::Lower => -1.0,
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Upper => Side::Lower,
            Side::Lower => Side::Upper,
        }
    }
}

/// A point on one of the two boundary curves; its height is `±g(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub x: f64,
    pub side: Side,
}

impl BoundaryPoint {
    pub fn new(x: f64, side: Side) -> Self {
        Self { x, side }
    }

    pub fn position(&self, tube: &Tube) -> Vec2 {
        Vec2::new(self.x, self.side.sign() * tube.g(self.x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec2,
    pub direction: Vec2,
}

impl Ray {
    /// Builds a ray; `direction` must already be a unit vector.
    pub fn new(origin: Vec2, direction: Vec2) -> Result<Self> {
        let n = direction.norm();
        if !((n - 1.0).abs() <= 1e-12) {
            return Err(Error::Parameter(format!(
                "ray direction must be a unit vector (norm {n})"
            )));
        }
        Ok(Self { origin, direction })
    }
}

/// What a ray hit first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Hit {
    Curve(BoundaryPoint),
    /// The vertical wall `x = A`, at height `y`.
    Wall {
        y: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intersection {
    pub hit: Hit,
    /// Distance travelled along the ray.
    pub s: f64,
    /// Exact ray position at `s`.
    pub point: Vec2,
}

impl Intersection {
    pub fn is_wall(&self) -> bool {
        matches!(self.hit, Hit::Wall { .. })
    }
}

impl Tube {
    pub fn new(family: Family, a: f64) -> Result<Self> {
        if !(a >= 1.0) || !a.is_finite() {
            return Err(Error::InvalidTube(format!(
                "cutoff A must be >= 1, got {a}"
            )));
        }
        match &family {
            Family::Power { gamma } => {
                // The wedge gamma = 1 is accepted so that cone geometry can be
                // evaluated; simulations there may legitimately escape.
                if !gamma.is_finite() || *gamma > 1.0 {
                    return Err(Error::InvalidTube(format!(
                        "power exponent must be < 1, got {gamma}"
                    )));
                }
            }
            Family::LogPower { k } => {
                if !(*k > 0.0) || !k.is_finite() {
                    return Err(Error::InvalidTube(format!(
                        "log-power K must be > 0, got {k}"
                    )));
                }
            }
            Family::Constant { c } => {
                if !(*c > 0.0) || !c.is_finite() {
                    return Err(Error::InvalidTube(format!(
                        "strip half-width must be > 0, got {c}"
                    )));
                }
            }
            Family::Custom(cb) => {
                if !(cb.gamma < 1.0) {
                    return Err(Error::InvalidTube(format!(
                        "custom boundary exponent must be < 1, got {}",
                        cb.gamma
                    )));
                }
            }
        }
        Ok(Self { family, a })
    }

    pub fn power(gamma: f64, a: f64) -> Result<Self> {
        Self::new(Family::Power { gamma }, a)
    }

    pub fn constant(c: f64, a: f64) -> Result<Self> {
        Self::new(Family::Constant { c }, a)
    }

    /// Parses `power:0.5`, `logpow:2` or `const:1` (case-insensitive).
    pub fn parse(spec: &str, a: f64) -> Result<Self> {
        let lower = spec.trim().to_ascii_lowercase();
        let (kind, arg) = lower.split_once(':').ok_or_else(|| {
            Error::InvalidTube(format!("expected <family>:<value>, got '{spec}'"))
        })?;
        let value: f64 = arg
            .trim()
            .parse()
            .map_err(|_| Error::InvalidTube(format!("bad numeric value '{arg}' in '{spec}'")))?;
        let family = match kind.trim() {
            "power" | "pow" => Family::Power { gamma: value },
            "logpow" | "logpower" => Family::LogPower { k: value },
            "const" | "constant" => Family::Constant { c: value },
            other => {
                return Err(Error::InvalidTube(format!(
                    "unknown family '{other}' (expected power, logpow or const)"
                )))
            }
        };
        Self::new(family, a)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// Growth exponent γ in `g(x) = x^{γ + o(1)}`.
    pub fn gamma(&self) -> f64 {
        match &self.family {
            Family::Power { gamma } => *gamma,
            Family::LogPower { .. } | Family::Constant { .. } => 0.0,
            Family::Custom(cb) => cb.gamma,
        }
    }

    /// True when `g` is nondecreasing (growing tube).
    pub fn is_increasing(&self) -> bool {
        match &self.family {
            Family::Power { gamma } => *gamma >= 0.0,
            Family::LogPower { .. } | Family::Constant { .. } => true,
            Family::Custom(cb) => cb.increasing,
        }
    }

    /// `(g, g', g'')` without the domain check.
    #[inline]
    pub(crate) fn triple(&self, x: f64) -> (f64, f64, f64) {
        match &self.family {
            Family::Power { gamma } => {
                let g = x.powf(*gamma);
                let dg = gamma * g / x;
                let d2g = (gamma - 1.0) * dg / x;
                (g, dg, d2g)
            }
            Family::LogPower { k } => {
                let l = x.ln();
                let g = l.powf(*k);
                let dg = if l == 0.0 {
                    if *k == 1.0 {
                        1.0 / x
                    } else if *k > 1.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    k * g / (l * x)
                };
                let d2g = if l == 0.0 {
                    f64::NAN
                } else {
                    k * l.powf(k - 2.0) * ((k - 1.0) - l) / (x * x)
                };
                (g, dg, d2g)
            }
            Family::Constant { c } => (*c, 0.0, 0.0),
            Family::Custom(cb) => (cb.eval)(x),
        }
    }

    #[inline]
    pub(crate) fn g(&self, x: f64) -> f64 {
        match &self.family {
            Family::Power { gamma } => x.powf(*gamma),
            Family::Constant { c } => *c,
            _ => self.triple(x).0,
        }
    }

    #[inline]
    pub(crate) fn g_dg(&self, x: f64) -> (f64, f64) {
        match &self.family {
            Family::Power { gamma } => {
                let g = x.powf(*gamma);
                (g, gamma * g / x)
            }
            Family::Constant { c } => (*c, 0.0),
            _ => {
                let (g, dg, _) = self.triple(x);
                (g, dg)
            }
        }
    }

    /// `(g, g', g'', arctan g')` at `x ≥ 1`.
    pub fn boundary_eval(&self, x: f64) -> Result<BoundaryEval> {
        if !(x >= 1.0) {
            return Err(Error::Domain { x });
        }
        let (g, dg, d2g) = self.triple(x);
        Ok(BoundaryEval {
            g,
            dg,
            d2g,
            theta: dg.atan(),
        })
    }

    /// Half-width `g(x)` at `x ≥ 1`.
    pub fn half_width(&self, x: f64) -> Result<f64> {
        if !(x >= 1.0) {
            return Err(Error::Domain { x });
        }
        Ok(self.g(x))
    }
}

impl fmt::Display for Tube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::Power { gamma } => write!(f, "power:{gamma}"),
            Family::LogPower { k } => write!(f, "logpow:{k}"),
            Family::Constant { c } => write!(f, "const:{c}"),
            Family::Custom(cb) => write!(f, "custom:{}", cb.name),
        }
    }
}

/// Outgoing unit direction after reflecting at angle `alpha` to the inward
/// normal of a boundary point whose tangent makes angle `theta` with the
/// x-axis. Positive `alpha` turns toward `+x`.
///
/// Upper side: direction angle `-π/2 + θ + α`; lower side: `π/2 - θ - α`.
pub fn reflect_direction(side: Side, theta: f64, alpha: f64) -> Vec2 {
    let phi = theta + alpha;
    let (s, c) = phi.sin_cos();
    match side {
        Side::Upper => Vec2::new(s, -c),
        Side::Lower => Vec2::new(s, c),
    }
}

const MARCH_STEP_FRACTION: f64 = 0.1;
const MARCH_STEP_FLOOR: f64 = 1e-6;
const ORIGIN_EXCLUSION: f64 = 1e-9;
const MARCH_CAP: f64 = 1e6;
const RESIDUAL_TOL: f64 = 1e-12;
const MAX_REFINE_ITERS: usize = 200;

/// Departure-root exclusion radius for a ray leaving a point with half-width `g0`.
pub fn origin_exclusion(g0: f64) -> f64 {
    ORIGIN_EXCLUSION * (1.0 + g0)
}

/// First point where `ray` meets `y = g(x)`, `y = -g(x)` or the wall `x = A`.
///
/// The ray is marched with step `max(0.1 g(x), 1e-6)`; a sign change of either
/// curve residual brackets a crossing, which is then refined by bisection and
/// safeguarded Newton until `|y ∓ g(x)| ≤ 1e-12 (1 + |y|)`. Wall crossings are
/// exact. The root at the origin itself is skipped by starting the march at
/// `s_min = 1e-9 (1 + g(x_0))`.
pub fn first_intersection(tube: &Tube, ray: &Ray) -> Result<Intersection> {
    let o = ray.origin;
    let d = ray.direction;
    let a = tube.a;
    let g0 = tube.g(o.x.max(a));
    let s_min = origin_exclusion(g0);
    let s_max = MARCH_CAP * (1.0 + g0);

    let f_top = |s: f64| {
        let x = o.x + s * d.x;
        let (g, dg) = tube.g_dg(x);
        (o.y + s * d.y - g, d.y - dg * d.x)
    };
    let f_bot = |s: f64| {
        let x = o.x + s * d.x;
        let (g, dg) = tube.g_dg(x);
        (o.y + s * d.y + g, d.y + dg * d.x)
    };

    let s_wall = if d.x < 0.0 {
        (a - o.x) / d.x
    } else {
        f64::INFINITY
    };
    if s_wall <= s_min {
        return Err(Error::NotInward { residual: o.x - a });
    }

    let mut s = s_min;
    let (mut ft, _) = f_top(s);
    let (mut fb, _) = f_bot(s);
    if !(ft < 0.0 && fb > 0.0) {
        let residual = if ft >= 0.0 { ft } else { fb };
        return Err(Error::NotInward { residual });
    }

    loop {
        if s >= s_max {
            return Err(Error::EscapeSuspected {
                x_origin: o.x,
                s_max,
            });
        }
        let x_cur = o.x + s * d.x;
        let h = (MARCH_STEP_FRACTION * tube.g(x_cur)).max(MARCH_STEP_FLOOR);
        let mut s_next = s + h;
        let wall_in_step = s_next >= s_wall;
        if wall_in_step {
            s_next = s_wall;
        }
        let (ft_n, _) = f_top(s_next);
        let (fb_n, _) = f_bot(s_next);

        let top = if ft_n >= 0.0 {
            Some(refine_root(&f_top, s, ft, s_next, ft_n, |s| o.y + s * d.y)?)
        } else {
            None
        };
        let bot = if fb_n <= 0.0 {
            Some(refine_root(&f_bot, s, fb, s_next, fb_n, |s| o.y + s * d.y)?)
        } else {
            None
        };
        let chosen = match (top, bot) {
            (Some(st), Some(sb)) => Some(if st <= sb {
                (st, Side::Upper)
            } else {
                (sb, Side::Lower)
            }),
            (Some(st), None) => Some((st, Side::Upper)),
            (None, Some(sb)) => Some((sb, Side::Lower)),
            (None, None) => None,
        };
        if let Some((s_hit, side)) = chosen {
            let point = o.along(d, s_hit);
            return Ok(Intersection {
                hit: Hit::Curve(BoundaryPoint::new(point.x, side)),
                s: s_hit,
                point,
            });
        }
        if wall_in_step {
            let y = o.y + s_wall * d.y;
            return Ok(Intersection {
                hit: Hit::Wall { y },
                s: s_wall,
                point: Vec2::new(a, y),
            });
        }
        s = s_next;
        ft = ft_n;
        fb = fb_n;
    }
}

/// Root of `f` on a sign-change bracket `[lo, hi]`, to `|f| ≤ 1e-12 (1 + |y(s)|)`.
fn refine_root<F, Y>(f: &F, lo: f64, f_lo: f64, hi: f64, f_hi: f64, y_at: Y) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
    Y: Fn(f64) -> f64,
{
    let tol = |s: f64| RESIDUAL_TOL * (1.0 + y_at(s).abs());
    if f_hi == 0.0 {
        return Ok(hi);
    }
    // Orient so that f(neg) < 0 < f(pos).
    let (mut neg, mut pos) = if f_lo < 0.0 { (lo, hi) } else { (hi, lo) };
    debug_assert!(f_lo.signum() != f_hi.signum());

    let mut s = 0.5 * (lo + hi);
    let mut best = (f64::INFINITY, s);
    for _ in 0..MAX_REFINE_ITERS {
        let (fs, dfs) = f(s);
        if fs.abs() < best.0 {
            best = (fs.abs(), s);
        }
        if fs.abs() <= tol(s) {
            return Ok(s);
        }
        if fs < 0.0 {
            neg = s;
        } else {
            pos = s;
        }
        let (a, b) = if neg < pos { (neg, pos) } else { (pos, neg) };
        let newton = s - fs / dfs;
        s = if dfs != 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        if b - a <= f64::EPSILON * b.abs().max(1.0) {
            // Bracket exhausted at floating-point resolution.
            let (fa, _) = f(a);
            let (fb, _) = f(b);
            let cand = if fa.abs() <= fb.abs() { a } else { b };
            let r = fa.abs().min(fb.abs());
            if r <= tol(cand) {
                return Ok(cand);
            }
            return Err(Error::NonConvergence {
                iterations: MAX_REFINE_ITERS,
                residual: r,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_REFINE_ITERS,
        residual: best.0,
    })
}

/// Which of the three jump configurations applies for a reflection from the
/// upper curve (the lower curve is symmetric).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpCase {
    /// Outgoing ray tilted forward past the normal: `Δ > 0` by the angle's own push.
    Forward,
    /// Growing tube, `-θ < α < 0`: the normal's forward tilt still wins.
    ForwardAgainstAngle,
    /// Narrowing tube, `0 ≤ α ≤ |θ|`: the normal's backward tilt still wins.
    BackwardAgainstAngle,
    /// Outgoing ray tilted backward.
    Backward,
}

/// Classifies the jump configuration by the sign of `α` against `θ`.
pub fn jump_case(theta: f64, alpha: f64) -> JumpCase {
    if theta >= 0.0 {
        if alpha > 0.0 {
            JumpCase::Forward
        } else if alpha > -theta {
            JumpCase::ForwardAgainstAngle
        } else {
            JumpCase::Backward
        }
    } else if alpha > -theta {
        JumpCase::Forward
    } else if alpha >= 0.0 {
        JumpCase::BackwardAgainstAngle
    } else {
        JumpCase::Backward
    }
}

/// Horizontal jump `Δ(x, α)` from a boundary point at `x`, obtained from the
/// implicit chord equation `Δ = (g(x) + g(x + Δ)) tan(α + θ)` by safeguarded
/// Newton. All three jump configurations are instances of this equation
/// (for backward jumps both sides are negative).
///
/// Independent of the marching intersector; used to cross-check it.
pub fn delta_implicit_oracle(tube: &Tube, x: f64, alpha: f64) -> Result<f64> {
    let ev = tube.boundary_eval(x)?;
    if !(ev.theta.abs() + alpha.abs() < FRAC_PI_2) {
        return Err(Error::Parameter(format!(
            "|θ| + |α| must be < π/2 (θ = {}, α = {alpha})",
            ev.theta
        )));
    }
    let t = (alpha + ev.theta).tan();
    if t == 0.0 {
        return Ok(0.0);
    }
    let g0 = ev.g;
    let resid = |delta: f64| -> (f64, f64) {
        let (g1, dg1) = tube.g_dg(x + delta);
        (delta - (g0 + g1) * t, 1.0 - dg1 * t)
    };
    let tol = RESIDUAL_TOL * (1.0 + g0);

    // Bracket: G(0) = -2 g t has the opposite sign to t.
    let guess = 2.0 * g0 * t;
    let (mut lo, mut hi);
    if t > 0.0 {
        lo = 0.0;
        hi = guess.max(f64::MIN_POSITIVE);
        let mut expand = 0;
        while resid(hi).0 <= 0.0 {
            lo = hi;
            hi *= 2.0;
            expand += 1;
            if expand > 200 || !hi.is_finite() {
                return Err(Error::NonConvergence {
                    iterations: expand,
                    residual: resid(hi).0,
                });
            }
        }
    } else {
        hi = 0.0;
        let floor = 1.0 - x;
        lo = guess.max(floor);
        let mut expand = 0;
        while resid(lo).0 >= 0.0 {
            if lo <= floor {
                return Err(Error::Range {
                    what: "backward jump",
                    detail: format!("chord from x = {x} leaves the boundary domain"),
                });
            }
            hi = lo;
            lo = (2.0 * lo).max(floor);
            expand += 1;
            if expand > 200 {
                return Err(Error::NonConvergence {
                    iterations: expand,
                    residual: resid(lo).0,
                });
            }
        }
    }

    // G is increasing through the root on the bracket: G(lo) < 0 < G(hi).
    let mut d = guess.clamp(lo, hi);
    for it in 0..100 {
        let (r, dr) = resid(d);
        if r.abs() <= tol {
            return Ok(d);
        }
        if r < 0.0 {
            lo = d;
        } else {
            hi = d;
        }
        let step = d - r / dr;
        d = if dr > 0.0 && step > lo && step < hi {
            step
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()).max(1.0) {
            let r = resid(d).0;
            if r.abs() <= tol {
                return Ok(d);
            }
            return Err(Error::NonConvergence {
                iterations: it + 1,
                residual: r,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: 100,
        residual: resid(d).0,
    })
}

/// Horizontal jump produced by the marching intersector from `(x, Upper)`.
pub fn delta_marching(tube: &Tube, x: f64, alpha: f64) -> Result<f64> {
    let ev = tube.boundary_eval(x)?;
    let origin = BoundaryPoint::new(x, Side::Upper).position(tube);
    let ray = Ray::new(origin, reflect_direction(Side::Upper, ev.theta, alpha))?;
    let hit = first_intersection(tube, &ray)?;
    Ok(hit.point.x - x)
}
