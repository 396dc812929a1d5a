//! Subcommand bodies. Each resolves its settings (flag, then config file,
//! then default), fans replicas out over the worker pool, and writes CSVs
//! in replica order.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use knudsen::billiard::{run_streaming, simulate_collisions_with, StopRule, StreamSummary};
use knudsen::chains::{simulate_chain_with, ChainKind, ChainSpec, RecordMode};
use knudsen::criteria::{lamperti_conditions, profile_points, ConditionParams, MomentPoint};
use knudsen::geometry::Tube;
use knudsen::lamperti::{
    classify_regime, empirical_moments, predicted_zeta_moments, regime_constants, Scale,
};
use knudsen::output::{self, FitRow, Header};
use knudsen::reflection::ReflectionLaw;
use knudsen::rng;
use knudsen::stats::{
    as_real, dyadic_window, fit_exponent, passage_time_stats, MIN_REACH_FRACTION,
};
use rayon::prelude::*;

use crate::config::{output_dir, ConfigFile, Levels, Window};
use crate::{
    BilliardArgs, ChainArgs, ClassifyArgs, Command, Common, CriteriaArgs, ExponentArgs, ModeArg,
    MomentsArgs, PassageArgs, RecordArg, RunError, ScaleArg, SimulateArgs, SourceArg,
};

const DEFAULT_SEED: u64 = 1;
const DEFAULT_A: f64 = 1.0;

pub fn run(command: Command) -> Result<(), RunError> {
    match command {
        Command::Simulate(a) => with_pool(&a.common, || simulate(&a)),
        Command::Moments(a) => with_pool(&a.common, || moments(&a)),
        Command::Classify(a) => classify(&a),
        Command::Exponent(a) => exponent(&a),
        Command::Chain(a) => with_pool(&a.common, || chain(&a)),
        Command::Criteria(a) => with_pool(&a.common, || criteria(&a)),
        Command::Passage(a) => with_pool(&a.common, || passage(&a)),
    }
}

fn load_config(common: &Common) -> Result<ConfigFile, RunError> {
    Ok(match &common.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    })
}

fn with_pool(
    common: &Common,
    body: impl FnOnce() -> Result<(), RunError> + Send,
) -> Result<(), RunError> {
    let cfg = load_config(common)?;
    let threads = cfg.pick(common.threads, "threads")?.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| RunError::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(body)
}

/// Settings shared by the billiard subcommands.
struct Billiard {
    tube: Tube,
    law: ReflectionLaw,
    x_start: f64,
}

impl Billiard {
    fn resolve(cfg: &ConfigFile, b: &BilliardArgs) -> Result<Self, RunError> {
        let a = cfg.pick_or(b.a, "A", DEFAULT_A)?;
        let tube = Tube::parse(&cfg.require(b.tube.clone(), "tube")?, a)?;
        let law = ReflectionLaw::parse(&cfg.require(b.law.clone(), "law")?)?;
        let x_start = cfg.pick_or(b.x_start, "x_start", 4.0 * a)?;
        if !(x_start > 2.0 * a) {
            return Err(RunError::Config(format!(
                "x_start must exceed 2A = {}, got {x_start}",
                2.0 * a
            )));
        }
        Ok(Self { tube, law, x_start })
    }

    fn header(&self, kind: &str, command: &str) -> Header {
        Header::new(kind)
            .with("command", command)
            .with("tube", &self.tube)
            .with("law", self.law)
            .with("A", self.tube.a())
            .with("x_start", self.x_start)
    }
}

struct Settings {
    cfg: ConfigFile,
    out: PathBuf,
    seed: u64,
}

impl Settings {
    fn resolve(common: &Common) -> Result<Self, RunError> {
        let cfg = load_config(common)?;
        let out = output_dir(&cfg, common.out.clone())?;
        let seed = cfg.pick_or(common.seed, "seed", DEFAULT_SEED)?;
        // Read here so a config entry is not reported as unknown.
        let _ = cfg.pick(common.threads, "threads")?;
        Ok(Self { cfg, out, seed })
    }

    /// Rejects stray config keys and prepares the output directory.
    fn finish(&self) -> Result<(), RunError> {
        self.cfg.check_unused()?;
        fs::create_dir_all(&self.out).map_err(|e| {
            RunError::Config(format!(
                "cannot create output directory {}: {e}",
                self.out.display()
            ))
        })
    }

    fn write(
        &self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> Result<(), RunError> {
        let path = self.out.join(name);
        let unwritable =
            |e: std::io::Error| RunError::Config(format!("cannot write {}: {e}", path.display()));
        let mut w = BufWriter::new(File::create(&path).map_err(unwritable)?);
        body(&mut w).and_then(|_| w.flush()).map_err(unwritable)
    }
}

fn replicas(cfg: &ConfigFile, flag: Option<u64>) -> Result<u64, RunError> {
    let r = cfg.pick_or(flag, "replicas", 1)?;
    if r == 0 {
        return Err(RunError::Config("replicas must be at least 1".into()));
    }
    Ok(r)
}

fn steps(cfg: &ConfigFile, flag: Option<u64>, default: u64) -> Result<u64, RunError> {
    let n = cfg.pick_or(flag, "steps", default)?;
    if n == 0 {
        return Err(RunError::Config("steps must be at least 1".into()));
    }
    Ok(n)
}

fn suffix(r: u64, replicas: u64) -> String {
    if replicas == 1 {
        String::new()
    } else {
        format!("_r{r:04}")
    }
}

fn simulate(args: &SimulateArgs) -> Result<(), RunError> {
    let s = Settings::resolve(&args.common)?;
    let b = Billiard::resolve(&s.cfg, &args.billiard)?;
    let n_max = steps(&s.cfg, args.steps, 1 << 16)?;
    let reps = replicas(&s.cfg, args.replicas)?;
    let want_path = s.cfg.switch(args.trajectory, "trajectory")?;
    s.finish()?;

    let runs: Vec<_> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let stream = rng::stream(s.seed, r);
            let summary = run_streaming(
                &b.tube,
                &b.law,
                b.x_start,
                n_max,
                StopRule::Steps,
                2.0 * b.tube.a(),
                stream,
                |_| {},
            );
            let path = want_path.then(|| {
                simulate_collisions_with(
                    &b.tube,
                    &b.law,
                    b.x_start,
                    n_max,
                    StopRule::Steps,
                    s.seed,
                    rng::stream(s.seed, r),
                )
            });
            (summary, path)
        })
        .collect();

    let mut failure = None;
    for (r, (summary, path)) in runs.into_iter().enumerate() {
        let r = r as u64;
        let (summary, status): (StreamSummary, String) = match summary {
            Ok(v) => (v, "complete".into()),
            Err(p) => {
                failure.get_or_insert_with(|| format!("replica {r}: {}", p.error));
                (p.partial, format!("partial ({})", p.error))
            }
        };
        let header = |kind: &str, mode: &str| {
            b.header(kind, "simulate")
                .with("steps", n_max)
                .with("seed", s.seed)
                .with("replica", r)
                .with("mode", mode)
                .with("status", &status)
        };
        let sfx = suffix(r, reps);
        s.write(&format!("maxima_discrete{sfx}.csv"), |w| {
            output::write_maxima(
                w,
                &header("maxima", "discrete"),
                &as_real(&summary.discrete_max),
            )
        })?;
        s.write(&format!("maxima_continuous{sfx}.csv"), |w| {
            output::write_maxima(w, &header("maxima", "continuous"), &summary.continuous_max)
        })?;
        if let Some(path) = path {
            let traj = match path {
                Ok(t) => t,
                Err(p) => p.partial,
            };
            s.write(&format!("trajectory{sfx}.csv"), |w| {
                output::write_trajectory(w, &header("trajectory", "discrete"), &traj)
            })?;
        }
    }
    match failure {
        Some(msg) => Err(RunError::Numeric(msg)),
        None => Ok(()),
    }
}

fn moments(args: &MomentsArgs) -> Result<(), RunError> {
    let s = Settings::resolve(&args.common)?;
    let b = Billiard::resolve(&s.cfg, &args.billiard)?;
    let scale = s.cfg.pick_or(args.scale, "scale", ScaleArg::Zeta)?;
    let default_levels = match scale {
        ScaleArg::Xi => "100:1e6:9",
        ScaleArg::Zeta => "10:1e4:7",
    };
    let levels: Levels = s.cfg.pick_or(
        args.levels.clone(),
        "levels",
        default_levels.parse().expect("valid default"),
    )?;
    let samples = s.cfg.pick_or(args.samples, "samples", 100_000)?;
    s.finish()?;

    let (scale, name) = match scale {
        ScaleArg::Xi => (Scale::Xi, "xi"),
        ScaleArg::Zeta => (Scale::Zeta, "zeta"),
    };
    let profile = empirical_moments(&b.tube, &b.law, &levels.0, samples, s.seed, scale)?;
    let header = b
        .header("moments", "moments")
        .with("scale", name)
        .with("samples", samples)
        .with("seed", s.seed)
        .with("tan2", b.law.tan2_moment());
    s.write("moments.csv", |w| {
        output::write_moments(w, &header, &profile)
    })
}

fn classify(args: &ClassifyArgs) -> Result<(), RunError> {
    let s = Settings::resolve(&args.common)?;
    let tube = Tube::parse(&s.cfg.require(args.tube.clone(), "tube")?, DEFAULT_A)?;
    let law = ReflectionLaw::parse(&s.cfg.require(args.law.clone(), "law")?)?;
    s.finish()?;

    let rep = classify_regime(tube.gamma(), &law)?;
    let rho = rep
        .rho
        .map_or_else(|| "none".to_string(), |r| r.to_string());
    let text = format!(
        "tube: {tube}\nlaw: {law}\ngamma: {}\ntan2: {}\ngamma_c: {}\nrho: {rho}\nregime: {}\nbasis: {}\nnear_critical: {}\n",
        rep.gamma, rep.tan2, rep.gamma_c, rep.regime, rep.basis, rep.near_critical
    );
    print!("{text}");
    let header = Header::new("classification")
        .with("command", "classify")
        .with("tube", &tube)
        .with("law", law);
    s.write("classify.csv", |w| {
        header.write(w)?;
        writeln!(w, "gamma,tan2,gamma_c,rho,regime,basis,near_critical")?;
        writeln!(
            w,
            "{},{},{},{rho},{},{},{}",
            rep.gamma, rep.tan2, rep.gamma_c, rep.regime, rep.basis, rep.near_critical
        )
    })?;
    s.write("classify.txt", |w| w.write_all(text.as_bytes()))
}

/// `# key: value` metadata and data rows of a maxima CSV.
struct MaximaFile {
    meta: Vec<(String, String)>,
    points: Vec<(f64, f64)>,
}

impl MaximaFile {
    fn get(&self, key: &str) -> Option<&str> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

fn read_maxima(path: &Path) -> Result<MaximaFile, RunError> {
    let bad = |msg: String| RunError::Config(format!("{}: {msg}", path.display()));
    let file = File::open(path).map_err(|e| bad(format!("cannot open: {e}")))?;
    let mut meta = Vec::new();
    let mut points = Vec::new();
    let mut seen_columns = false;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| bad(format!("read error: {e}")))?;
        let line = line.trim();
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once(':') {
                meta.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        if !seen_columns {
            if line != "n,max_x" {
                return Err(bad(format!(
                    "expected column header 'n,max_x', got '{line}'"
                )));
            }
            seen_columns = true;
            continue;
        }
        let parsed = line
            .split_once(',')
            .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)));
        points.push(parsed.ok_or_else(|| bad(format!("line {}: malformed row '{line}'", i + 1)))?);
    }
    Ok(MaximaFile { meta, points })
}

/// Predicted exponent for a maxima file, from its metadata.
fn target_exponent(file: &MaximaFile, mode: ModeArg) -> (f64, String) {
    if let Some(chain) = file.get("chain") {
        let Ok(spec) = ChainSpec::parse(chain) else {
            return (f64::NAN, "unavailable".into());
        };
        return match spec.kind {
            ChainKind::ReflectedSimple | ChainKind::SrwNorm { .. } => (0.5, "diffusive 1/2".into()),
            ChainKind::BirthDeath { kappa, alpha } if alpha == 1.0 && kappa > -1.0 => {
                (1.0 / (1.0 + kappa), "1/(1+kappa)".into())
            }
            ChainKind::BirthDeath { kappa, alpha } if alpha < 1.0 && kappa < 0.0 => {
                (1.0 / (1.0 + alpha), "1/(1+alpha)".into())
            }
            _ => (f64::NAN, "unavailable".into()),
        };
    }
    let parsed = file.get("tube").zip(file.get("law")).and_then(|(t, l)| {
        Some((
            Tube::parse(t, DEFAULT_A).ok()?,
            ReflectionLaw::parse(l).ok()?,
        ))
    });
    let Some((tube, law)) = parsed else {
        return (f64::NAN, "unavailable".into());
    };
    let gamma = tube.gamma();
    match mode {
        ModeArg::Discrete if (0.0..1.0).contains(&gamma) => {
            (1.0 / (2.0 * (1.0 - gamma)), "1/(2(1-gamma))".into())
        }
        ModeArg::Discrete if gamma < 0.0 => match regime_constants(gamma, law.tan2_moment()).rho {
            Some(r) => (r, "rho".into()),
            None => (f64::NAN, "unavailable".into()),
        },
        ModeArg::Continuous if (0.0..1.0).contains(&gamma) => {
            (1.0 / (2.0 - gamma), "1/(2-gamma)".into())
        }
        _ => (f64::NAN, "unavailable".into()),
    }
}

fn exponent(args: &ExponentArgs) -> Result<(), RunError> {
    let s = Settings::resolve(&args.common)?;
    let input: PathBuf = s.cfg.require(args.input.clone(), "input")?;
    let mode = s.cfg.pick_or(args.mode, "mode", ModeArg::Discrete)?;
    let Window(lo, hi) = s.cfg.require(args.window, "window")?;
    let target = s.cfg.pick(args.target, "target")?;
    s.finish()?;

    let file = read_maxima(&input)?;
    let mode_name = match mode {
        ModeArg::Discrete => "discrete",
        ModeArg::Continuous => "continuous",
    };
    if let Some(m) = file.get("mode") {
        if m != mode_name {
            return Err(RunError::Config(format!(
                "{} holds {m} maxima but --mode {mode_name} was requested",
                input.display()
            )));
        }
    }
    let fit = fit_exponent(&file.points, dyadic_window(lo, hi))?;
    let (target_exponent, target_source) = match target {
        Some(t) => (t, "user".to_string()),
        None => target_exponent(&file, mode),
    };
    println!(
        "slope: {} (stderr {}, {} points, window 2^{lo}..2^{hi}); target {target_exponent} [{target_source}]",
        fit.slope, fit.stderr, fit.n_points
    );
    let mut header = Header::new("fits")
        .with("command", "exponent")
        .with("input", input.display())
        .with("mode", mode_name)
        .with("window", format!("{lo}:{hi}"));
    for key in ["tube", "law", "chain", "seed", "replica"] {
        if let Some(v) = file.get(key) {
            header.push(&format!("source_{key}"), v);
        }
    }
    let rows = [FitRow {
        fit,
        target_exponent,
        target_source,
    }];
    s.write("fits.csv", |w| output::write_fits(w, &header, &rows))
}

fn chain(args: &ChainArgs) -> Result<(), RunError> {
    let s = Settings::resolve(&args.common)?;
    let spec = ChainSpec::parse(&s.cfg.require(args.chain.clone(), "chain")?)?;
    let x_start = s.cfg.pick_or(args.x_start, "x_start", 1.0)?;
    let n_max = steps(&s.cfg, args.steps, 1 << 16)?;
    let reps = replicas(&s.cfg, args.replicas)?;
    let record = s.cfg.pick_or(args.record, "record", RecordArg::Dyadic)?;
    s.finish()?;

    let mode = match record {
        RecordArg::Dyadic => RecordMode::DyadicMax,
        RecordArg::Full => RecordMode::Full,
    };
    let runs = (0..reps)
        .into_par_iter()
        .map(|r| {
            simulate_chain_with(
                &spec,
                x_start,
                n_max,
                rng::stream(s.seed, r),
                mode.clone(),
                |_, _| {},
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    for (r, run) in runs.iter().enumerate() {
        let r = r as u64;
        let header = |kind: &str| {
            Header::new(kind)
                .with("command", "chain")
                .with("chain", spec)
                .with("x_start", x_start)
                .with("steps", n_max)
                .with("seed", s.seed)
                .with("replica", r)
                .with("mode", "discrete")
        };
        let sfx = suffix(r, reps);
        s.write(&format!("chain_maxima{sfx}.csv"), |w| {
            output::write_maxima(w, &header("maxima"), &as_real(&run.dyadic_max))
        })?;
        if let Some(values) = &run.values {
            s.write(&format!("chain_path{sfx}.csv"), |w| {
                header("chain_path").write(w)?;
                writeln!(w, "n,x")?;
                for (n, x) in values.iter().enumerate() {
                    writeln!(w, "{n},{x}")?;
                }
                Ok(())
            })?;
        }
    }
    Ok(())
}

fn criteria(args: &CriteriaArgs) -> Result<(), RunError> {
    let s = Settings::resolve(&args.common)?;
    let b = Billiard::resolve(&s.cfg, &args.billiard)?;
    let source = s.cfg.pick_or(args.source, "source", SourceArg::Analytic)?;
    let levels: Levels = s.cfg.pick_or(
        args.levels.clone(),
        "levels",
        "10:1e4:16".parse().expect("valid default"),
    )?;
    let samples = s.cfg.pick_or(args.samples, "samples", 100_000)?;
    let d = ConditionParams::default();
    let params = ConditionParams {
        h: s.cfg.pick_or(args.h, "h", d.h)?,
        delta: s.cfg.pick_or(args.delta, "delta", d.delta)?,
        c_upper: s.cfg.pick_or(args.c_upper, "c_upper", d.c_upper)?,
        kappa_upper: s.cfg.pick(args.kappa_upper, "kappa_upper")?,
        kappa_lower: s.cfg.pick(args.kappa_lower, "kappa_lower")?,
        v_floor: s.cfg.pick_or(args.v_floor, "v_floor", d.v_floor)?,
        z: s.cfg.pick_or(args.z, "z", d.z)?,
    };
    s.finish()?;

    let gamma = b.tube.gamma();
    let tan2 = b.law.tan2_moment();
    let (points, source_name) = match source {
        SourceArg::Analytic => {
            let pts = levels
                .0
                .iter()
                .map(|&y| {
                    let (mu1, mu2) = predicted_zeta_moments(gamma, tan2, y);
                    MomentPoint {
                        x: y,
                        mu1,
                        mu2,
                        se1: 0.0,
                        se2: 0.0,
                    }
                })
                .collect();
            (pts, "analytic")
        }
        SourceArg::Empirical => {
            let profile =
                empirical_moments(&b.tube, &b.law, &levels.0, samples, s.seed, Scale::Zeta)?;
            (profile_points(&profile), "empirical")
        }
    };
    let conditions = lamperti_conditions(&points, params)?;
    let text = output::conditions_text(&conditions);
    print!("{text}");
    let mut header = b
        .header("conditions", "criteria")
        .with("source", source_name)
        .with("scale", "zeta");
    if matches!(source, SourceArg::Empirical) {
        header.push("samples", samples).push("seed", s.seed);
    }
    s.write("conditions.csv", |w| {
        output::write_conditions(w, &header, &conditions)
    })?;
    s.write("conditions.txt", |w| {
        header.write(w)?;
        w.write_all(text.as_bytes())
    })
}

fn passage(args: &PassageArgs) -> Result<(), RunError> {
    let s = Settings::resolve(&args.common)?;
    let chain_spec = s.cfg.pick(args.chain.clone(), "chain")?;
    let levels: Levels = s.cfg.require(args.levels.clone(), "levels")?;
    let reps = replicas(&s.cfg, args.replicas)?;
    let n_max = steps(&s.cfg, args.steps, 1 << 20)?;
    let top = *levels.0.last().expect("levels are non-empty");

    let (times, mut header): (Vec<Vec<Option<f64>>>, Header) = match chain_spec {
        Some(text) => {
            let spec = ChainSpec::parse(&text)?;
            let x_start = s.cfg.pick_or(args.billiard.x_start, "x_start", 1.0)?;
            let mode = s.cfg.pick::<ModeArg>(args.mode, "mode")?;
            if mode == Some(ModeArg::Continuous) {
                return Err(RunError::Config(
                    "--mode continuous applies only to the billiard".into(),
                ));
            }
            if args.billiard.tube.is_some()
                || args.billiard.law.is_some()
                || args.billiard.a.is_some()
            {
                return Err(RunError::Config(
                    "--chain cannot be combined with --tube, --law or --A".into(),
                ));
            }
            s.finish()?;
            let runs = (0..reps)
                .into_par_iter()
                .map(|r| {
                    let mode = RecordMode::PassageTimes(levels.0.clone());
                    simulate_chain_with(
                        &spec,
                        x_start,
                        n_max,
                        rng::stream(s.seed, r),
                        mode,
                        |_, _| {},
                    )
                })
                .collect::<Result<Vec<_>, _>>()?;
            let times = runs
                .iter()
                .map(|run| run.passage.iter().map(|p| p.map(|n| n as f64)).collect())
                .collect();
            let header = Header::new("passage")
                .with("command", "passage")
                .with("chain", spec)
                .with("x_start", x_start)
                .with("mode", "discrete");
            (times, header)
        }
        None => {
            let b = Billiard::resolve(&s.cfg, &args.billiard)?;
            let mode = s.cfg.pick_or(args.mode, "mode", ModeArg::Discrete)?;
            s.finish()?;
            let runs: Vec<Result<Vec<Option<f64>>, String>> = (0..reps)
                .into_par_iter()
                .map(|r| {
                    let mut slots: Vec<Option<f64>> = levels
                        .0
                        .iter()
                        .map(|&l| (b.x_start >= l).then_some(0.0))
                        .collect();
                    let run = run_streaming(
                        &b.tube,
                        &b.law,
                        b.x_start,
                        n_max,
                        StopRule::LevelReached(top),
                        2.0 * b.tube.a(),
                        rng::stream(s.seed, r),
                        |st| {
                            let clock = match mode {
                                ModeArg::Discrete => st.next.index as f64,
                                ModeArg::Continuous => st.next.nu,
                            };
                            for (slot, &l) in slots.iter_mut().zip(&levels.0) {
                                if slot.is_none() && st.next.point.x >= l {
                                    *slot = Some(clock);
                                }
                            }
                        },
                    );
                    run.map(|_| slots)
                        .map_err(|p| format!("replica {r}: {}", p.error))
                })
                .collect();
            let times = runs
                .into_iter()
                .collect::<Result<Vec<_>, _>>()
                .map_err(RunError::Numeric)?;
            let mode_name = match mode {
                ModeArg::Discrete => "discrete",
                ModeArg::Continuous => "continuous",
            };
            (
                times,
                b.header("passage", "passage").with("mode", mode_name),
            )
        }
    };
    header
        .push("steps", n_max)
        .push("replicas", reps)
        .push("seed", s.seed);
    let rows = passage_time_stats(&levels.0, &times);
    for row in rows
        .iter()
        .filter(|r| r.reach_fraction() < MIN_REACH_FRACTION)
    {
        eprintln!(
            "knudsen: warning: level {} reached by only {}/{} replicas; its mean is a censored lower bound",
            row.level, row.reached, row.replicas
        );
    }
    s.write("passage.csv", |w| output::write_passage(w, &header, &rows))
}
