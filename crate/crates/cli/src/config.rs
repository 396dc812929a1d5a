//! Flat `key = value` experiment files. Command-line flags win over file
//! entries; keys left unused by the chosen subcommand are rejected.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "KNUDSEN_OUT_DIR";

#[derive(Debug)]
pub struct ConfigError(pub String);

impl Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<knudsen::Error> for ConfigError {
    fn from(e: knudsen::Error) -> Self {
        ConfigError(e.to_string())
    }
}

fn normalize(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

#[derive(Debug, Default)]
pub struct ConfigFile {
    path: Option<PathBuf>,
    entries: BTreeMap<String, (usize, String)>,
    used: RefCell<BTreeSet<String>>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config file {}: {e}", path.display())))?;
        let mut cfg =
            Self::parse(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))?;
        cfg.path = Some(path.to_path_buf());
        Ok(cfg)
    }

    /// Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                ConfigError(format!(
                    "line {}: expected key = value, got '{line}'",
                    i + 1
                ))
            })?;
            let key = normalize(k);
            if key.is_empty() {
                return Err(ConfigError(format!("line {}: empty key", i + 1)));
            }
            if entries
                .insert(key.clone(), (i + 1, v.trim().to_string()))
                .is_some()
            {
                return Err(ConfigError(format!(
                    "line {}: duplicate key '{key}'",
                    i + 1
                )));
            }
        }
        Ok(Self {
            path: None,
            entries,
            used: RefCell::default(),
        })
    }

    fn raw(&self, key: &str) -> Option<&(usize, String)> {
        let key = normalize(key);
        let hit = self.entries.get(&key);
        if hit.is_some() {
            self.used.borrow_mut().insert(key);
        }
        hit
    }

    /// `flag` if given, else the file entry for `key`, parsed.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, ConfigError>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            // Still mark the key so a file entry overridden by a flag is not "unknown".
            let _ = self.raw(key);
            return Ok(flag);
        }
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|e| {
                ConfigError(format!(
                    "config line {line}: bad value '{v}' for {key}: {e}"
                ))
            }),
        }
    }

    pub fn pick_or<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, ConfigError>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }

    pub fn require<T>(&self, flag: Option<T>, key: &str) -> Result<T, ConfigError>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.pick(flag, key)?.ok_or_else(|| {
            ConfigError(format!(
                "missing required setting '{key}' (pass --{} or set it in the config file)",
                key.replace('_', "-")
            ))
        })
    }

    /// Boolean switches: a flag that is set wins, else the file entry.
    pub fn switch(&self, flag: bool, key: &str) -> Result<bool, ConfigError> {
        Ok(flag || self.pick::<bool>(None, key)?.unwrap_or(false))
    }

    /// Errors on file keys the subcommand never asked for.
    pub fn check_unused(&self) -> Result<(), ConfigError> {
        let used = self.used.borrow();
        let unknown: Vec<String> = self
            .entries
            .iter()
            .filter(|(k, _)| !used.contains(*k))
            .map(|(k, (line, _))| format!("'{k}' (line {line})"))
            .collect();
        if unknown.is_empty() {
            return Ok(());
        }
        let file = self
            .path
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "config".into());
        Err(ConfigError(format!(
            "{file}: unknown key(s) for this subcommand: {}",
            unknown.join(", ")
        )))
    }
}

/// `lo:hi` as a pair of integers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window(pub u32, pub u32);

impl FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| format!("expected lo:hi, got '{s}'"))?;
        let lo: u32 = a
            .trim()
            .parse()
            .map_err(|_| format!("bad lower bound '{a}'"))?;
        let hi: u32 = b
            .trim()
            .parse()
            .map_err(|_| format!("bad upper bound '{b}'"))?;
        if lo >= hi || hi > 62 {
            return Err(format!("need lo < hi <= 62, got {lo}:{hi}"));
        }
        Ok(Window(lo, hi))
    }
}

/// A list `1,2,5` or a log-spaced grid `lo:hi:n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Levels(pub Vec<f64>);

impl FromStr for Levels {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let levels = match parts.as_slice() {
            [lo, hi, n] => {
                let lo: f64 = lo
                    .trim()
                    .parse()
                    .map_err(|_| format!("bad grid start '{lo}'"))?;
                let hi: f64 = hi
                    .trim()
                    .parse()
                    .map_err(|_| format!("bad grid end '{hi}'"))?;
                let n: usize = n
                    .trim()
                    .parse()
                    .map_err(|_| format!("bad grid size '{n}'"))?;
                if !(lo > 0.0 && hi > lo && n >= 2) {
                    return Err(format!(
                        "grid lo:hi:n needs 0 < lo < hi and n >= 2, got '{s}'"
                    ));
                }
                (0..n)
                    .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
                    .collect()
            }
            [list] => list
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| format!("bad level '{v}'"))
                })
                .collect::<Result<Vec<_>, _>>()?,
            _ => {
                return Err(format!(
                    "expected a list a,b,c or a grid lo:hi:n, got '{s}'"
                ))
            }
        };
        if levels.is_empty() || levels.iter().any(|l| !l.is_finite()) {
            return Err(format!("no usable levels in '{s}'"));
        }
        if levels.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(format!("levels must be strictly increasing: '{s}'"));
        }
        Ok(Levels(levels))
    }
}

/// Output directory: flag, then file entry, then the environment, then `.`.
pub fn output_dir(cfg: &ConfigFile, flag: Option<PathBuf>) -> Result<PathBuf, ConfigError> {
    if let Some(p) = cfg.pick(flag, "out")? {
        return Ok(p);
    }
    Ok(std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(".")))
}
