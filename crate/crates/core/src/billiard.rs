//! The collision chain `ξ` and the continuous-time billiard `X`.
//!
//! A particle leaves each boundary point along a ray at a random angle to the
//! inward normal and travels at unit speed until it meets the boundary again.
//! Hitting the vertical wall `x = A` relocates it to `(2A, g(2A))`; the time
//! charged for that move is the distance to the wall plus the straight-line
//! distance from the wall hit to `(2A, g(2A))`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{
    first_intersection, reflect_direction, BoundaryPoint, Hit, Ray, Side, Tube, Vec2,
};
use crate::reflection::ReflectionLaw;
use crate::rng;
use crate::stats::{ContinuousMaxTracker, DyadicMaxTracker};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionState {
    pub point: BoundaryPoint,
    pub index: u64,
    /// Cumulative path length `ν_n`.
    pub nu: f64,
}

impl CollisionState {
    pub fn start(x: f64) -> Self {
        Self {
            point: BoundaryPoint::new(x, Side::Upper),
            index: 0,
            nu: 0.0,
        }
    }
}

/// One transition of the collision chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub from: CollisionState,
    pub next: CollisionState,
    pub alpha: f64,
    /// Path length charged for the step (`ν_{n+1} - ν_n`).
    pub travelled: f64,
    /// Height of the wall hit when the step went through `x = A`.
    pub wall_y: Option<f64>,
}

impl StepOutcome {
    pub fn teleported(&self) -> bool {
        self.wall_y.is_some()
    }
}

/// Advances the collision chain by one reflection.
pub fn collision_step<R: Rng + ?Sized>(
    tube: &Tube,
    law: &ReflectionLaw,
    state: &CollisionState,
    rng: &mut R,
) -> Result<StepOutcome> {
    let a = tube.a();
    if !(state.point.x > a) {
        return Err(Error::Parameter(format!(
            "collision state x = {} must exceed A = {a}",
            state.point.x
        )));
    }
    let alpha = law.sample(rng);
    let ev = tube.boundary_eval(state.point.x)?;
    let origin = state.point.position(tube);
    let ray = Ray {
        origin,
        direction: reflect_direction(state.point.side, ev.theta, alpha),
    };
    let hit = first_intersection(tube, &ray)?;
    let (point, travelled, wall_y) = match hit.hit {
        Hit::Curve(bp) if bp.x > a => (bp, hit.s, None),
        Hit::Curve(_) | Hit::Wall { .. } => {
            let target = BoundaryPoint::new(2.0 * a, Side::Upper);
            let extra = hit.point.dist(target.position(tube));
            (target, hit.s + extra, Some(hit.point.y))
        }
    };
    Ok(StepOutcome {
        from: *state,
        next: CollisionState {
            point,
            index: state.index + 1,
            nu: state.nu + travelled,
        },
        alpha,
        travelled,
        wall_y,
    })
}

/// The collision chain as an (infinite) iterator of steps.
pub struct CollisionChain<'a, R> {
    tube: &'a Tube,
    law: ReflectionLaw,
    state: CollisionState,
    rng: R,
    failed: bool,
}

impl<'a, R: Rng> CollisionChain<'a, R> {
    pub fn new(tube: &'a Tube, law: ReflectionLaw, start: CollisionState, rng: R) -> Self {
        Self {
            tube,
            law,
            state: start,
            rng,
            failed: false,
        }
    }

    pub fn state(&self) -> &CollisionState {
        &self.state
    }
}

impl<R: Rng> Iterator for CollisionChain<'_, R> {
    type Item = Result<StepOutcome>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        match collision_step(self.tube, &self.law, &self.state, &mut self.rng) {
            Ok(step) => {
                self.state = step.next;
                Some(Ok(step))
            }
            Err(e) => {
                self.failed = true;
                Some(Err(e))
            }
        }
    }
}

/// When a run stops before its step budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Run the full step budget.
    Steps,
    /// Stop at the first collision with `x ≤ level` (usually `2A`).
    ReturnBelow(f64),
    /// Stop at the first collision with `x ≥ level`.
    LevelReached(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Horizon,
    Returned { n: u64 },
    LevelReached { n: u64 },
}

impl StopRule {
    fn check(&self, x: f64, n: u64) -> Option<StopReason> {
        match *self {
            StopRule::Steps => None,
            StopRule::ReturnBelow(l) => (x <= l).then_some(StopReason::Returned { n }),
            StopRule::LevelReached(l) => (x >= l).then_some(StopReason::LevelReached { n }),
        }
    }
}

/// One recorded collision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub x: f64,
    pub side: Side,
    pub nu: f64,
    /// Wall height if the step into this record went through `x = A`.
    pub wall_y: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub tube: Tube,
    pub law: ReflectionLaw,
    pub seed: u64,
    pub records: Vec<Record>,
    pub stop: StopReason,
}

/// A run that failed part-way, with everything recorded up to the failure.
#[derive(Debug, Clone)]
pub struct PartialRun<T> {
    pub error: Error,
    pub partial: T,
}

impl<T> std::fmt::Display for PartialRun<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.error)
    }
}

fn check_start(tube: &Tube, x_start: f64) -> Result<()> {
    if !(x_start > 2.0 * tube.a()) {
        return Err(Error::Parameter(format!(
            "x_start = {x_start} must exceed 2A = {}",
            2.0 * tube.a()
        )));
    }
    Ok(())
}

/// Default starting abscissa `4A`.
pub fn default_x_start(tube: &Tube) -> f64 {
    4.0 * tube.a()
}

/// Runs the chain from `(x_start, Upper)` recording every collision.
pub fn simulate_collisions(
    tube: &Tube,
    law: &ReflectionLaw,
    x_start: f64,
    n_max: u64,
    stop: StopRule,
    seed: u64,
) -> std::result::Result<Trajectory, PartialRun<Trajectory>> {
    simulate_collisions_with(tube, law, x_start, n_max, stop, seed, rng::stream(seed, 0))
}

/// As [`simulate_collisions`] with an explicit random stream.
pub fn simulate_collisions_with<R: Rng>(
    tube: &Tube,
    law: &ReflectionLaw,
    x_start: f64,
    n_max: u64,
    stop: StopRule,
    seed: u64,
    rng: R,
) -> std::result::Result<Trajectory, PartialRun<Trajectory>> {
    let start = CollisionState::start(x_start);
    let mut traj = Trajectory {
        tube: tube.clone(),
        law: *law,
        seed,
        records: vec![Record {
            x: x_start,
            side: Side::Upper,
            nu: 0.0,
            wall_y: None,
        }],
        stop: StopReason::Horizon,
    };
    if let Err(error) = check_start(tube, x_start) {
        return Err(PartialRun {
            error,
            partial: traj,
        });
    }
    let chain = CollisionChain::new(tube, *law, start, rng);
    for step in chain.take(n_max as usize) {
        let step = match step {
            Ok(s) => s,
            Err(error) => {
                return Err(PartialRun {
                    error,
                    partial: traj,
                })
            }
        };
        let n = step.next;
        traj.records.push(Record {
            x: n.point.x,
            side: n.point.side,
            nu: n.nu,
            wall_y: step.wall_y,
        });
        if let Some(reason) = stop.check(n.point.x, n.index) {
            traj.stop = reason;
            break;
        }
    }
    Ok(traj)
}

/// Summary of a streaming run: dyadic maxima and stopping data only.
#[derive(Debug, Clone)]
pub struct StreamSummary {
    pub steps: u64,
    pub final_state: CollisionState,
    pub stop: StopReason,
    /// `(n, max_{m ≤ n} ξ_m^{(1)})` for `n = 1, 2, 4, …`.
    pub discrete_max: Vec<(u64, f64)>,
    /// `(t, sup_{s ≤ t} X_s^{(1)})` for `t = 1, 2, 4, …`.
    pub continuous_max: Vec<(f64, f64)>,
    pub returns: ReturnTimes,
    pub teleports: u64,
}

/// Runs the chain without storing the path.
///
/// `observer` sees every step; `return_level` (usually `2A`) sets the level
/// used for the recorded return times.
#[allow(clippy::too_many_arguments)]
pub fn run_streaming<R, F>(
    tube: &Tube,
    law: &ReflectionLaw,
    x_start: f64,
    n_max: u64,
    stop: StopRule,
    return_level: f64,
    rng: R,
    mut observer: F,
) -> std::result::Result<StreamSummary, PartialRun<StreamSummary>>
where
    R: Rng,
    F: FnMut(&StepOutcome),
{
    let start = CollisionState::start(x_start);
    let mut dmax = DyadicMaxTracker::new();
    dmax.push(x_start);
    let mut cmax = ContinuousMaxTracker::new(x_start);
    let mut returns = ReturnTimes::default();
    let mut teleports = 0;
    let mut state = start;
    let mut reason = StopReason::Horizon;
    let mut failure = None;

    if let Err(e) = check_start(tube, x_start) {
        failure = Some(e);
    } else {
        let wall_target = BoundaryPoint::new(2.0 * tube.a(), Side::Upper).position(tube);
        for step in CollisionChain::new(tube, *law, start, rng).take(n_max as usize) {
            let step = match step {
                Ok(s) => s,
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            };
            observer(&step);
            let from = step.from.point.position(tube);
            let to = step.next.point.position(tube);
            match step.wall_y {
                None => {
                    cmax.push_segment(step.from.nu, from.x, step.next.nu, to.x);
                    if returns.tau.is_none() {
                        returns.tau = crossing_time(from, to, step.from.nu, return_level);
                    }
                }
                Some(y) => {
                    teleports += 1;
                    let wall = Vec2::new(tube.a(), y);
                    let nu_wall = step.from.nu + from.dist(wall);
                    cmax.push_segment(step.from.nu, from.x, nu_wall, wall.x);
                    cmax.push_segment(nu_wall, wall.x, step.next.nu, wall_target.x);
                    if returns.tau.is_none() {
                        returns.tau = crossing_time(from, wall, step.from.nu, return_level);
                    }
                }
            }
            dmax.push(step.next.point.x);
            if returns.sigma.is_none() && step.next.point.x <= return_level {
                returns.sigma = Some(step.next.index);
            }
            state = step.next;
            if let Some(r) = stop.check(state.point.x, state.index) {
                reason = r;
                break;
            }
        }
    }
    let summary = StreamSummary {
        steps: state.index,
        final_state: state,
        stop: reason,
        discrete_max: dmax.into_points(),
        continuous_max: cmax.into_points(),
        returns,
        teleports,
    };
    match failure {
        None => Ok(summary),
        Some(error) => Err(PartialRun {
            error,
            partial: summary,
        }),
    }
}

/// Time at which the straight segment `p0 → p1` (starting at time `nu0`)
/// first reaches `x ≤ level`, if it does.
fn crossing_time(p0: Vec2, p1: Vec2, nu0: f64, level: f64) -> Option<f64> {
    if p0.x <= level {
        return Some(nu0);
    }
    if p1.x > level {
        return None;
    }
    let frac = (p0.x - level) / (p0.x - p1.x);
    Some(nu0 + frac * p0.dist(p1))
}

/// Return times to `{x ≤ level}`: `σ` on the collision clock, `τ` on the
/// path-length clock. `None` means the horizon ended first.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ReturnTimes {
    pub sigma: Option<u64>,
    pub tau: Option<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.x)
    }

    pub fn point(&self, k: usize) -> Vec2 {
        let r = &self.records[k];
        BoundaryPoint::new(r.x, r.side).position(&self.tube)
    }

    /// Final recorded time.
    pub fn horizon(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.nu)
    }

    /// The straight legs making up the path from collision `k` to `k + 1`.
    fn legs(&self, k: usize) -> ([Vec2; 3], usize) {
        let p0 = self.point(k);
        let p1 = self.point(k + 1);
        match self.records[k + 1].wall_y {
            None => ([p0, p1, p1], 1),
            Some(y) => ([p0, Vec2::new(self.tube.a(), y), p1], 2),
        }
    }

    /// Position `X_t` of the continuous-time process.
    pub fn position_at_time(&self, t: f64) -> Result<Vec2> {
        let last = self.horizon();
        if !(t >= 0.0 && t <= last) {
            return Err(Error::Range {
                what: "time",
                detail: format!("t = {t} outside [0, {last}]"),
            });
        }
        // n(t) = max{n : ν_n ≤ t}
        let k = self.records.partition_point(|r| r.nu <= t) - 1;
        if self.records[k].nu == t || k + 1 == self.records.len() {
            return Ok(self.point(k));
        }
        let (pts, nlegs) = self.legs(k);
        let mut remaining = t - self.records[k].nu;
        for i in 0..nlegs {
            let len = pts[i].dist(pts[i + 1]);
            if remaining <= len || i + 1 == nlegs {
                let u = if len > 0.0 {
                    (remaining / len).min(1.0)
                } else {
                    0.0
                };
                return Ok(Vec2::new(
                    pts[i].x + u * (pts[i + 1].x - pts[i].x),
                    pts[i].y + u * (pts[i + 1].y - pts[i].y),
                ));
            }
            remaining -= len;
        }
        unreachable!("at least one leg per segment")
    }

    /// `σ` and `τ` for the return level `2A`.
    pub fn return_times(&self) -> ReturnTimes {
        return_times(self, self.tube.a())
    }

    /// Lengths `‖ξ_{n+1} - ξ_n‖` of the recorded steps (path length for wall steps).
    pub fn increments(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.windows(2).map(|w| w[1].nu - w[0].nu)
    }
}

/// Return times to `{x ≤ 2a}`. A segment can dip below `2a` before its
/// endpoint, so `τ` is located by intersecting each leg with `x = 2a`.
pub fn return_times(traj: &Trajectory, a: f64) -> ReturnTimes {
    let level = 2.0 * a;
    let mut out = ReturnTimes::default();
    for k in 0..traj.records.len().saturating_sub(1) {
        let (pts, nlegs) = traj.legs(k);
        let mut nu = traj.records[k].nu;
        for i in 0..nlegs {
            if let Some(t) = crossing_time(pts[i], pts[i + 1], nu, level) {
                if k > 0 || i > 0 || pts[0].x > level {
                    out.tau = Some(t);
                }
                break;
            }
            nu += pts[i].dist(pts[i + 1]);
        }
        if out.tau.is_some() {
            break;
        }
    }
    out.sigma = traj
        .records
        .iter()
        .position(|r| r.x <= level)
        .map(|n| n as u64);
    out
}
