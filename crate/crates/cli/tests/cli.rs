use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn knudsen(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_knudsen"))
        .args(args)
        .current_dir(dir)
        .env_remove("KNUDSEN_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SIM: [&str; 9] = [
    "simulate",
    "--tube",
    "power:0.5",
    "--law",
    "uniform:0.7854",
    "--A",
    "10",
    "--seed",
    "42",
];

#[test]
fn classify_reports_transient_with_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let o = knudsen(
        &[
            "classify",
            "--tube",
            "power:0.5",
            "--law",
            "uniform:0.7854",
            "--out",
            ".",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("regime: transient"), "{text}");
    let gc: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("gamma_c: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((gc - 0.176685).abs() < 1e-5, "{gc}");
    let csv = fs::read_to_string(dir.path().join("classify.csv")).unwrap();
    assert!(csv.starts_with("# artifact: classification\n"));
    assert!(csv.contains("gamma,tan2,gamma_c,rho,regime,basis,near_critical\n"));
}

#[test]
fn simulate_is_byte_identical_across_reruns() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let mut args = SIM.to_vec();
        args.extend(["--steps", "1048576", "--out", out]);
        let o = knudsen(&args, dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["maxima_discrete.csv", "maxima_continuous.csv"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
        assert!(String::from_utf8(a).unwrap().contains("# seed: 42\n"));
    }
}

#[test]
fn replica_outputs_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    for (out, threads) in [("one", "1"), ("three", "3")] {
        let mut args = SIM.to_vec();
        args.extend([
            "--steps",
            "4096",
            "--replicas",
            "4",
            "--trajectory",
            "--threads",
            threads,
            "--out",
            out,
        ]);
        let o = knudsen(&args, dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let mut names: Vec<_> = fs::read_dir(dir.path().join("one"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 12);
    for n in &names {
        let a = fs::read(dir.path().join("one").join(n)).unwrap();
        let b = fs::read(dir.path().join("three").join(n)).unwrap();
        assert_eq!(a, b, "{n:?} differs");
    }
    // Distinct replicas draw distinct streams.
    let r0 = fs::read(dir.path().join("one/trajectory_r0000.csv")).unwrap();
    let r1 = fs::read(dir.path().join("one/trajectory_r0001.csv")).unwrap();
    assert_ne!(r0, r1);
}

#[test]
fn exponent_annotates_the_target() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = SIM.to_vec();
    args.extend(["--steps", "65536", "--out", "."]);
    assert!(knudsen(&args, dir.path()).status.success());
    let o = knudsen(
        &[
            "exponent",
            "--input",
            "maxima_discrete.csv",
            "--mode",
            "discrete",
            "--window",
            "6:16",
            "--out",
            "fit",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("fit/fits.csv")).unwrap();
    let row = csv.lines().last().unwrap();
    let cols: Vec<&str> = row.split(',').collect();
    assert_eq!(cols[0], "64");
    assert_eq!(cols[1], "65536");
    assert_eq!(cols[4], "1");
    assert_eq!(cols[5], "1/(2(1-gamma))");

    let o = knudsen(
        &[
            "exponent",
            "--input",
            "maxima_continuous.csv",
            "--mode",
            "continuous",
            "--window",
            "6:16",
            "--out",
            "fit",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("fit/fits.csv")).unwrap();
    assert!(csv
        .lines()
        .last()
        .unwrap()
        .ends_with(",0.6666666666666666,1/(2-gamma)"));

    let o = knudsen(
        &[
            "exponent",
            "--input",
            "maxima_discrete.csv",
            "--mode",
            "continuous",
            "--window",
            "6:16",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.cfg"),
        "# chain experiment\nchain = bd:kappa=3,alpha=1\nsteps = 1000\nseed = 5\nrecord = full\n",
    )
    .unwrap();
    let o = knudsen(
        &["chain", "--config", "run.cfg", "--seed", "6", "--out", "."],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let path = fs::read_to_string(dir.path().join("chain_path.csv")).unwrap();
    assert!(path.contains("# seed: 6\n"));
    assert!(path.contains("# chain: bd:kappa=3,alpha=1"));
    assert_eq!(path.lines().filter(|l| !l.starts_with('#')).count(), 1002);

    fs::write(dir.path().join("typo.cfg"), "chian = reflected\n").unwrap();
    let o = knudsen(
        &["chain", "--config", "typo.cfg", "--chain", "reflected"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("chian"));
}

#[test]
fn environment_sets_the_default_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_knudsen"))
        .args([
            "passage",
            "--chain",
            "reflected",
            "--levels",
            "5,10",
            "--replicas",
            "50",
        ])
        .current_dir(dir.path())
        .env("KNUDSEN_OUT_DIR", "from_env")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("from_env/passage.csv")).unwrap();
    assert!(csv.contains("level,replicas,reached,mean,median,std_err,censored_fraction,censored\n"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 3);
}

#[test]
fn moments_and_criteria_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let base = [
        "--tube",
        "power:0.5",
        "--law",
        "uniform:0.7854",
        "--A",
        "10",
        "--out",
        ".",
    ];
    let mut m = vec![
        "moments",
        "--scale",
        "zeta",
        "--levels",
        "100,1000",
        "--samples",
        "5000",
    ];
    m.extend(base);
    assert!(knudsen(&m, dir.path()).status.success());
    let csv = fs::read_to_string(dir.path().join("moments.csv")).unwrap();
    assert!(csv.contains("level,n,mu1_hat,mu1_se,mu2_hat,mu2_se,mu1_pred,mu2_pred\n"));
    assert!(csv.contains("# scale: zeta\n"));

    let mut c = vec!["criteria"];
    c.extend(base);
    let o = knudsen(&c, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("transience: holds"));
    let csv = fs::read_to_string(dir.path().join("conditions.csv")).unwrap();
    assert!(csv.contains("condition,range_lo,range_hi,margin,verdict\n"));
}

#[test]
fn bad_input_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 5] = [
        &["simulate", "--tube", "bogus:1", "--law", "uniform:0.7"],
        &["simulate", "--tube", "power:0.5", "--law", "uniform:2"],
        &[
            "simulate",
            "--tube",
            "power:0.5",
            "--law",
            "uniform:0.7",
            "--frobnicate",
        ],
        &["simulate", "--law", "uniform:0.7"],
        &["chain", "--chain", "reflected", "--replicas", "0"],
    ];
    for args in cases {
        let o = knudsen(args, dir.path());
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty());
    }
    fs::write(dir.path().join("blocker"), "").unwrap();
    let o = knudsen(
        &["chain", "--chain", "reflected", "--out", "blocker"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let o = knudsen(&["--help"], dir.path());
    assert!(o.status.success());
    for sub in [
        "simulate", "moments", "classify", "exponent", "chain", "criteria", "passage",
    ] {
        assert!(stdout(&o).contains(sub), "{sub}");
    }
}
