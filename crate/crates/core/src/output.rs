//! CSV writers. Every file starts with `# key: value` comment lines recording
//! the configuration, the seed and the artifact version.

use std::io::{self, Write};

use crate::billiard::Trajectory;
use crate::criteria::DriftConditions;
use crate::geometry::Side;
use crate::lamperti::MomentProfile;
use crate::stats::{ExponentFit, PassageSummary};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Header {
    entries: Vec<(String, String)>,
}

impl Header {
    /// Starts a header for an artifact of the given kind.
    pub fn new(kind: &str) -> Self {
        let mut h = Self::default();
        h.push("artifact", kind);
        h.push("version", ARTIFACT_VERSION);
        h
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.push(key, value);
        self
    }

    pub fn write(&self, w: &mut impl Write) -> io::Result<()> {
        for (k, v) in &self.entries {
            writeln!(w, "# {k}: {}", v.replace('\n', " "))?;
        }
        Ok(())
    }
}

fn side_label(s: Side) -> &'static str {
    match s {
        Side::Upper => "upper",
        Side::Lower => "lower",
    }
}

/// Columns `k,x,side,nu`.
pub fn write_trajectory(w: &mut impl Write, header: &Header, traj: &Trajectory) -> io::Result<()> {
    header.write(w)?;
    writeln!(w, "k,x,side,nu")?;
    for (k, r) in traj.records.iter().enumerate() {
        writeln!(w, "{k},{},{},{}", r.x, side_label(r.side), r.nu)?;
    }
    Ok(())
}

/// Columns `n,max_x`; `n` is a collision index or a time.
pub fn write_maxima(w: &mut impl Write, header: &Header, points: &[(f64, f64)]) -> io::Result<()> {
    header.write(w)?;
    writeln!(w, "n,max_x")?;
    for (n, m) in points {
        writeln!(w, "{n},{m}")?;
    }
    Ok(())
}

pub fn write_moments(
    w: &mut impl Write,
    header: &Header,
    profile: &MomentProfile,
) -> io::Result<()> {
    header.write(w)?;
    writeln!(w, "level,n,mu1_hat,mu1_se,mu2_hat,mu2_se,mu1_pred,mu2_pred")?;
    for r in &profile.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.level, r.n, r.mu1_hat, r.mu1_se, r.mu2_hat, r.mu2_se, r.mu1_pred, r.mu2_pred
        )?;
    }
    Ok(())
}

pub fn write_conditions(
    w: &mut impl Write,
    header: &Header,
    c: &DriftConditions,
) -> io::Result<()> {
    header.write(w)?;
    writeln!(w, "condition,range_lo,range_hi,margin,verdict")?;
    for ch in &c.checks {
        writeln!(
            w,
            "{},{},{},{},{}",
            ch.name, ch.range.0, ch.range.1, ch.margin, ch.verdict
        )?;
    }
    Ok(())
}

/// Plain `key: value` report of the drift conditions.
pub fn conditions_text(c: &DriftConditions) -> String {
    let mut s = String::new();
    s.push_str(&format!("H: {}\ndelta: {}\n", c.params.h, c.params.delta));
    for ch in &c.checks {
        s.push_str(&format!(
            "{}: {} (margin {}, window [{}, {}])\n",
            ch.name, ch.verdict, ch.margin, ch.range.0, ch.range.1
        ));
    }
    s
}

/// One fitted exponent with the value it is compared to.
#[derive(Debug, Clone, PartialEq)]
pub struct FitRow {
    pub fit: ExponentFit,
    pub target_exponent: f64,
    pub target_source: String,
}

pub fn write_fits(w: &mut impl Write, header: &Header, rows: &[FitRow]) -> io::Result<()> {
    header.write(w)?;
    writeln!(
        w,
        "window_lo,window_hi,slope,stderr,target_exponent,target_source"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.fit.window.0,
            r.fit.window.1,
            r.fit.slope,
            r.fit.stderr,
            r.target_exponent,
            r.target_source
        )?;
    }
    Ok(())
}

pub fn write_passage(
    w: &mut impl Write,
    header: &Header,
    rows: &[PassageSummary],
) -> io::Result<()> {
    header.write(w)?;
    writeln!(
        w,
        "level,replicas,reached,mean,median,std_err,censored_fraction,censored"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.level,
            r.replicas,
            r.reached,
            r.mean,
            r.median,
            r.std_err,
            r.censored_fraction,
            r.censored
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::billiard::{simulate_collisions, StopRule};
    use crate::geometry::Tube;
    use crate::reflection::ReflectionLaw;

    #[test]
    fn header_lines_are_comments() {
        let h = Header::new("maxima")
            .with("seed", 7)
            .with("note", "two\nlines");
        let mut buf = Vec::new();
        write_maxima(&mut buf, &h, &[(1.0, 2.0)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# artifact: maxima");
        assert!(lines[1].starts_with("# version: "));
        assert_eq!(lines[2], "# seed: 7");
        assert_eq!(lines[3], "# note: two lines");
        assert_eq!(lines[4], "n,max_x");
        assert_eq!(lines[5], "1,2");
    }

    #[test]
    fn trajectory_csv_roundtrips_values() {
        let tube = Tube::power(0.5, 10.0).unwrap();
        let law = ReflectionLaw::uniform(0.7).unwrap();
        let t = simulate_collisions(&tube, &law, 40.0, 50, StopRule::Steps, 1).unwrap();
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &Header::new("trajectory"), &t).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text
            .lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .collect();
        assert_eq!(rows.len(), t.len());
        for (row, rec) in rows.iter().zip(&t.records) {
            let cols: Vec<&str> = row.split(',').collect();
            assert_eq!(cols[1].parse::<f64>().unwrap(), rec.x);
            assert_eq!(cols[3].parse::<f64>().unwrap(), rec.nu);
        }
    }
}
