//! Synthetic one-dimensional chains used to exercise the drift criteria away
//! from billiards, and the interval embedding `Z_k` of a positive trajectory.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;
use crate::stats::{first_passage_times, DyadicMaxTracker};

/// Probability bounds applied to the birth-death down-step probability.
pub const P_MIN: f64 = 0.001;
pub const P_MAX: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChainKind {
    /// Nearest-neighbour walk stepping down with probability
    /// `p_x = 1/2 + (κ/4) x^{−α}` (clipped to `[P_MIN, P_MAX]`).
    BirthDeath { kappa: f64, alpha: f64 },
    /// Simple symmetric walk on `{0, 1, 2, …}`; `0` always steps to `1`.
    ReflectedSimple,
    /// Euclidean norm of a simple random walk on `Z^d`.
    SrwNorm { d: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSpec {
    pub kind: ChainKind,
    /// Floor `H`: a birth-death step that would land below `H` goes to `2H`.
    pub h: f64,
}

impl ChainSpec {
    pub fn birth_death(kappa: f64, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !kappa.is_finite() || !alpha.is_finite() {
            return Err(Error::Parameter(format!(
                "birth-death chain needs finite kappa and alpha > 0, got kappa = {kappa}, alpha = {alpha}"
            )));
        }
        Ok(Self {
            kind: ChainKind::BirthDeath { kappa, alpha },
            h: 1.0,
        })
    }

    pub fn reflected() -> Self {
        Self {
            kind: ChainKind::ReflectedSimple,
            h: 1.0,
        }
    }

    pub fn srw_norm(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::Parameter(format!(
                "SRW dimension must be >= 2, got {d}"
            )));
        }
        Ok(Self {
            kind: ChainKind::SrwNorm { d },
            h: 1.0,
        })
    }

    /// Parses `bd:kappa=3,alpha=1[,h=1]`, `srwnorm:d=3` or `reflected`.
    pub fn parse(spec: &str) -> Result<Self> {
        let lower = spec.trim().to_ascii_lowercase();
        let (kind, args) = lower.split_once(':').unwrap_or((lower.as_str(), ""));
        let mut kv = BTreeMap::new();
        for part in args.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Parameter(format!("expected key=value in '{part}'")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Parameter(format!("bad number '{v}' in '{spec}'")))?;
            kv.insert(k.trim().to_string(), v);
        }
        let take = |k: &str| {
            kv.get(k)
                .copied()
                .ok_or_else(|| Error::Parameter(format!("'{spec}' is missing {k}=")))
        };
        let mut out = match kind.trim() {
            "bd" => Self::birth_death(take("kappa")?, take("alpha")?)?,
            "reflected" => Self::reflected(),
            "srwnorm" => {
                let d = take("d")?;
                if d.fract() != 0.0 || d < 0.0 {
                    return Err(Error::Parameter(format!(
                        "dimension must be an integer, got {d}"
                    )));
                }
                Self::srw_norm(d as usize)?
            }
            other => return Err(Error::Parameter(format!("unknown chain '{other}'"))),
        };
        if let Some(&h) = kv.get("h") {
            if !(h > 0.0) {
                return Err(Error::Parameter(format!("floor h must be > 0, got {h}")));
            }
            out.h = h;
        }
        Ok(out)
    }

    /// Down-step probability at `x` for the birth-death chain.
    pub fn down_probability(&self, x: f64) -> f64 {
        match self.kind {
            ChainKind::BirthDeath { kappa, alpha } => {
                (0.5 + 0.25 * kappa * x.powf(-alpha)).clamp(P_MIN, P_MAX)
            }
            ChainKind::ReflectedSimple | ChainKind::SrwNorm { .. } => 0.5,
        }
    }

    /// Levels below which the birth-death probability is clipped (`0` if never).
    pub fn clip_threshold(&self) -> f64 {
        match self.kind {
            ChainKind::BirthDeath { kappa, alpha } if kappa != 0.0 => {
                (kappa.abs() / (4.0 * (0.5 - P_MIN))).powf(1.0 / alpha)
            }
            _ => 0.0,
        }
    }
}

impl fmt::Display for ChainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ChainKind::BirthDeath { kappa, alpha } => {
                write!(f, "bd:kappa={kappa},alpha={alpha},h={}", self.h)
            }
            ChainKind::ReflectedSimple => write!(f, "reflected"),
            ChainKind::SrwNorm { d } => write!(f, "srwnorm:d={d}"),
        }
    }
}

#[derive(Debug, Clone)]
enum State {
    Scalar(f64),
    Lattice { pos: Vec<i64>, sq: i64 },
}

/// A running chain.
#[derive(Debug, Clone)]
pub struct Chain<R> {
    spec: ChainSpec,
    state: State,
    rng: R,
}

impl<R: Rng> Chain<R> {
    /// Starts at `x_start ≥ 1`; the SRW starts at `(round(x_start), 0, …, 0)`.
    pub fn new(spec: ChainSpec, x_start: f64, rng: R) -> Result<Self> {
        if !(x_start >= 1.0) || !x_start.is_finite() {
            return Err(Error::Parameter(format!(
                "x_start must be >= 1, got {x_start}"
            )));
        }
        let state = match spec.kind {
            ChainKind::SrwNorm { d } => {
                let mut pos = vec![0; d];
                pos[0] = x_start.round() as i64;
                let sq = pos[0] * pos[0];
                State::Lattice { pos, sq }
            }
            _ => State::Scalar(x_start),
        };
        Ok(Self { spec, state, rng })
    }

    pub fn value(&self) -> f64 {
        match &self.state {
            State::Scalar(x) => *x,
            State::Lattice { sq, .. } => (*sq as f64).sqrt(),
        }
    }

    pub fn step(&mut self) -> f64 {
        match &mut self.state {
            State::Scalar(x) => {
                *x = scalar_step(&self.spec, *x, &mut self.rng);
                *x
            }
            State::Lattice { pos, sq } => {
                let d = pos.len();
                let i = self.rng.gen_range(0..d);
                let s = if self.rng.gen::<bool>() { 1 } else { -1 };
                *sq += 2 * s * pos[i] + 1;
                pos[i] += s;
                (*sq as f64).sqrt()
            }
        }
    }
}

fn scalar_step<R: Rng + ?Sized>(spec: &ChainSpec, x: f64, rng: &mut R) -> f64 {
    match spec.kind {
        ChainKind::ReflectedSimple => {
            if x <= 0.0 {
                1.0
            } else if rng.gen::<bool>() {
                x + 1.0
            } else {
                x - 1.0
            }
        }
        ChainKind::BirthDeath { .. } => {
            if rng.gen::<f64>() < spec.down_probability(x) {
                let y = x - 1.0;
                if y < spec.h {
                    2.0 * spec.h
                } else {
                    y
                }
            } else {
                x + 1.0
            }
        }
        ChainKind::SrwNorm { .. } => unreachable!("lattice state"),
    }
}

/// One step of the chain from level `x`. For the SRW norm the walk is placed
/// on the first axis at distance `round(x)`.
pub fn step_from<R: Rng + ?Sized>(spec: &ChainSpec, x: f64, rng: &mut R) -> f64 {
    match spec.kind {
        ChainKind::SrwNorm { d } => {
            let r = x.round();
            let i = rng.gen_range(0..d);
            let s = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            if i == 0 {
                (r + s).abs()
            } else {
                (r * r + 1.0).sqrt()
            }
        }
        _ => scalar_step(spec, x, rng),
    }
}

/// What [`simulate_chain`] keeps besides the dyadic maxima.
#[derive(Debug, Clone, PartialEq)]
pub enum RecordMode {
    DyadicMax,
    Full,
    /// First-passage indices to each level.
    PassageTimes(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainRun {
    pub spec: ChainSpec,
    pub steps: u64,
    pub final_value: f64,
    pub dyadic_max: Vec<(u64, f64)>,
    /// `η_0, …, η_n` when recorded in full.
    pub values: Option<Vec<f64>>,
    pub passage: Vec<Option<u64>>,
}

pub fn simulate_chain(
    spec: &ChainSpec,
    x_start: f64,
    n_max: u64,
    seed: u64,
    mode: RecordMode,
) -> Result<ChainRun> {
    simulate_chain_with(spec, x_start, n_max, rng::stream(seed, 0), mode, |_, _| {})
}

/// As [`simulate_chain`] with an explicit random stream and a per-step
/// observer receiving `(n, η_n)` for `n ≥ 1`.
pub fn simulate_chain_with<R: Rng>(
    spec: &ChainSpec,
    x_start: f64,
    n_max: u64,
    rng: R,
    mode: RecordMode,
    mut observer: impl FnMut(u64, f64),
) -> Result<ChainRun> {
    let mut chain = Chain::new(*spec, x_start, rng)?;
    let x0 = chain.value();
    let mut dmax = DyadicMaxTracker::new();
    dmax.push(x0);
    let mut values = matches!(mode, RecordMode::Full).then(|| vec![x0]);
    let levels = match &mode {
        RecordMode::PassageTimes(l) => l.clone(),
        _ => Vec::new(),
    };
    let mut passage = first_passage_times([x0], &levels);
    let mut open = passage.iter().filter(|p| p.is_none()).count();
    let mut steps = 0;
    for n in 1..=n_max {
        let x = chain.step();
        steps = n;
        dmax.push(x);
        observer(n, x);
        if let Some(v) = values.as_mut() {
            v.push(x);
        }
        if open > 0 {
            for (slot, &l) in passage.iter_mut().zip(&levels) {
                if slot.is_none() && x >= l {
                    *slot = Some(n);
                    open -= 1;
                }
            }
            if open == 0 && matches!(mode, RecordMode::PassageTimes(_)) {
                break;
            }
        }
    }
    Ok(ChainRun {
        spec: *spec,
        steps,
        final_value: chain.value(),
        dyadic_max: dmax.into_points(),
        values,
        passage,
    })
}

/// Upward-transition counts out of interval `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PHat {
    pub r: i64,
    pub up: u64,
    pub total: u64,
}

impl PHat {
    pub fn p(&self) -> f64 {
        self.up as f64 / self.total as f64
    }

    pub fn std_err(&self) -> f64 {
        let p = self.p();
        (p * (1.0 - p) / self.total as f64).sqrt()
    }
}

/// Result of embedding a trajectory into the intervals
/// `I_r = [(1+β)^r − B, (1+β)^r + B]`, `r ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    /// Trajectory indices `ℓ_k` at which a new interval is entered.
    pub entries: Vec<usize>,
    /// Interval index `Z_k` entered at `ℓ_k`.
    pub z: Vec<i64>,
    pub p_hat: Vec<PHat>,
    /// Transitions to a non-adjacent interval (a jump larger than `B`).
    pub skips: usize,
}

impl Embedding {
    /// Drops transitions out of the highest interval reached: an upward exit
    /// from it is censored by the end of the trajectory, so only downward
    /// exits can be observed there.
    pub fn trim_top(&self) -> Embedding {
        let top = self.z.iter().copied().max();
        Embedding {
            p_hat: self
                .p_hat
                .iter()
                .copied()
                .filter(|p| Some(p.r) != top)
                .collect(),
            ..self.clone()
        }
    }

    /// Pools all transitions: `(up, total)`.
    pub fn pooled(&self) -> (u64, u64) {
        self.p_hat
            .iter()
            .fold((0, 0), |(u, t), p| (u + p.up, t + p.total))
    }
}

/// Merges `p̂_r` counts from several embeddings.
pub fn merge_p_hat<'a>(embeddings: impl IntoIterator<Item = &'a Embedding>) -> Vec<PHat> {
    let mut acc: BTreeMap<i64, (u64, u64)> = BTreeMap::new();
    for e in embeddings {
        for p in &e.p_hat {
            let slot = acc.entry(p.r).or_default();
            slot.0 += p.up;
            slot.1 += p.total;
        }
    }
    acc.into_iter()
        .map(|(r, (up, total))| PHat { r, up, total })
        .collect()
}

pub fn interval_embed(traj: &[f64], beta: f64, b: f64) -> Result<Embedding> {
    if !(beta > 0.0) || !(b > 0.0) {
        return Err(Error::Parameter(format!(
            "beta and B must be positive, got {beta}, {b}"
        )));
    }
    // Gaps grow with r, so disjointness at r = 1 suffices.
    if !(beta * (1.0 + beta) > 2.0 * b) {
        return Err(Error::Parameter(format!(
            "intervals overlap: beta (1 + beta) = {} must exceed 2B = {}",
            beta * (1.0 + beta),
            2.0 * b
        )));
    }
    let q = 1.0 + beta;
    let lq = q.ln();
    let which = |v: f64| -> Option<i64> {
        if !(v > 0.0) {
            return None;
        }
        let r0 = (v.ln() / lq).round() as i64;
        (r0 - 1..=r0 + 1).find(|&r| r >= 1 && (v - q.powi(r as i32)).abs() <= b)
    };
    let mut entries = Vec::new();
    let mut z: Vec<i64> = Vec::new();
    for (i, &v) in traj.iter().enumerate() {
        if let Some(r) = which(v) {
            if z.last() != Some(&r) {
                entries.push(i);
                z.push(r);
            }
        }
    }
    let mut counts: BTreeMap<i64, (u64, u64)> = BTreeMap::new();
    let mut skips = 0;
    for w in z.windows(2) {
        let slot = counts.entry(w[0]).or_default();
        slot.1 += 1;
        if w[1] > w[0] {
            slot.0 += 1;
        }
        if (w[1] - w[0]).abs() > 1 {
            skips += 1;
        }
    }
    let p_hat = counts
        .into_iter()
        .map(|(r, (up, total))| PHat { r, up, total })
        .collect();
    Ok(Embedding {
        entries,
        z,
        p_hat,
        skips,
    })
}
