use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::error::{Error, Result};
use crate::noise;

use super::census::CensusRow;
use super::convergence::ConvergenceTable;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    Census,
    Convergence,
    MeshStudy,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Census => "census",
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::MeshStudy => "mesh-study",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ReportBody {
    Census(Vec<CensusRow>),
    Convergence(Vec<ConvergenceTable>),
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub seed: u64,
    /// Configuration echo as ordered `key: value` pairs.
    pub metadata: Vec<(String, String)>,
    pub body: ReportBody,
    /// Reported in the summary only, so the CSV stays reproducible.
    pub wall_clock: Duration,
}

/// Shortest round-trip representation (`0.5`, `1.0`, `3e-17`).
pub fn fmt_float(x: f64) -> String {
    format!("{x:?}")
}

impl ExperimentReport {
    pub fn new(
        kind: ExperimentKind,
        seed: u64,
        config: Vec<(String, String)>,
        body: ReportBody,
        wall_clock: Duration,
    ) -> Self {
        let mut metadata = vec![
            ("spde-lab".to_string(), crate::VERSION.to_string()),
            ("experiment".to_string(), kind.name().to_string()),
            ("seed".to_string(), seed.to_string()),
            ("sample_indices".to_string(), "0..samples".to_string()),
            ("rng".to_string(), noise::RNG_METHOD.to_string()),
        ];
        metadata.extend(config);
        Self {
            kind,
            seed,
            metadata,
            body,
            wall_clock,
        }
    }

    pub fn census_rows(&self) -> Option<&[CensusRow]> {
        match &self.body {
            ReportBody::Census(rows) => Some(rows),
            ReportBody::Convergence(_) => None,
        }
    }

    pub fn tables(&self) -> Option<&[ConvergenceTable]> {
        match &self.body {
            ReportBody::Convergence(tables) => Some(tables),
            ReportBody::Census(_) => None,
        }
    }

    /// Metadata comment lines, the table, then (for convergence reports)
    /// `# slope:` lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (key, value) in &self.metadata {
            let _ = writeln!(out, "# {key}: {value}");
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut trailer = String::new();
        match &self.body {
            ReportBody::Census(rows) => {
                let _ = w.write_record([
                    "integrator",
                    "g",
                    "lambda",
                    "d",
                    "N",
                    "tau",
                    "samples",
                    "positive",
                    "diverged",
                ]);
                for r in rows {
                    let _ = w.write_record([
                        r.integrator.name().to_string(),
                        r.nonlinearity.kind.to_string(),
                        fmt_float(r.nonlinearity.lambda),
                        r.dim.to_string(),
                        r.subdivisions.to_string(),
                        fmt_float(r.tau),
                        r.samples.to_string(),
                        r.positive.to_string(),
                        r.diverged.to_string(),
                    ]);
                }
            }
            ReportBody::Convergence(tables) => {
                let _ = w.write_record([
                    "integrator",
                    "g",
                    "lambda",
                    "d",
                    "N",
                    "level",
                    "tau",
                    "rms_sup_error",
                ]);
                for t in tables {
                    for row in &t.rows {
                        for (i, &level) in t.levels.iter().enumerate() {
                            let _ = w.write_record([
                                row.integrator.name().to_string(),
                                t.nonlinearity.kind.to_string(),
                                fmt_float(t.nonlinearity.lambda),
                                t.dim.to_string(),
                                t.subdivisions.to_string(),
                                level.to_string(),
                                fmt_float(t.taus[i]),
                                fmt_float(row.errors[i]),
                            ]);
                        }
                        if tables.len() == 1 {
                            let _ = writeln!(
                                trailer,
                                "# slope:{}={}",
                                row.integrator.name(),
                                fmt_float(row.slope)
                            );
                        } else {
                            let _ = writeln!(
                                trailer,
                                "# slope:{}[g={},lambda={},N={}]={}",
                                row.integrator.name(),
                                t.nonlinearity.kind,
                                fmt_float(t.nonlinearity.lambda),
                                t.subdivisions,
                                fmt_float(row.slope)
                            );
                        }
                    }
                }
            }
        }
        let bytes = w.into_inner().unwrap_or_default();
        out.push_str(&String::from_utf8_lossy(&bytes));
        out.push_str(&trailer);
        out
    }

    /// Human-readable tables plus wall-clock time.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} (seed {})", self.kind.name(), self.seed);
        match &self.body {
            ReportBody::Census(rows) => census_summary(&mut out, rows),
            ReportBody::Convergence(tables) => {
                for t in tables {
                    convergence_summary(&mut out, t);
                }
            }
        }
        let _ = writeln!(out, "wall clock: {:.3} s", self.wall_clock.as_secs_f64());
        out
    }
}

fn census_summary(out: &mut String, rows: &[CensusRow]) {
    let mut integrators = Vec::new();
    let mut gs = Vec::new();
    for r in rows {
        if !integrators.contains(&r.integrator) {
            integrators.push(r.integrator);
        }
        if !gs.contains(&r.nonlinearity) {
            gs.push(r.nonlinearity);
        }
    }
    if let Some(first) = rows.first() {
        let _ = writeln!(
            out,
            "positive paths, d = {}, N = {}, tau = {}",
            first.dim,
            first.subdivisions,
            fmt_float(first.tau)
        );
    }
    let _ = write!(out, "{:<20}", "g");
    for i in &integrators {
        let _ = write!(out, "{:>10}", i.name());
    }
    out.push('\n');
    for g in &gs {
        let _ = write!(out, "{:<20}", g.to_string());
        for i in &integrators {
            let cell = rows
                .iter()
                .find(|r| r.integrator == *i && r.nonlinearity == *g)
                .map(|r| format!("{}/{}", r.positive, r.samples))
                .unwrap_or_default();
            let _ = write!(out, "{cell:>10}");
        }
        out.push('\n');
    }
}

fn convergence_summary(out: &mut String, t: &ConvergenceTable) {
    let _ = writeln!(
        out,
        "rms sup error, g = {}, d = {}, N = {}",
        t.nonlinearity, t.dim, t.subdivisions
    );
    let _ = write!(out, "{:>6}{:>14}", "level", "tau");
    for row in &t.rows {
        let _ = write!(out, "{:>14}", row.integrator.name());
    }
    out.push('\n');
    for (i, level) in t.levels.iter().enumerate() {
        let _ = write!(out, "{:>6}{:>14.6e}", level, t.taus[i]);
        for row in &t.rows {
            let _ = write!(out, "{:>14.6e}", row.errors[i]);
        }
        out.push('\n');
    }
    let _ = write!(out, "{:>20}", "slope");
    for row in &t.rows {
        let _ = write!(out, "{:>14.4}", row.slope);
    }
    out.push('\n');
    let excluded: usize = t.rows.iter().flat_map(|r| r.diverged.iter()).sum();
    if excluded > 0 || t.reference_diverged > 0 {
        let _ = writeln!(
            out,
            "excluded: {excluded} diverged coarse paths, {} diverged references",
            t.reference_diverged
        );
    }
}

/// Sibling path `<stem>.summary.txt` next to the CSV.
pub(crate) fn summary_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into());
    csv_path.with_file_name(format!("{stem}.summary.txt"))
}

/// Writes the CSV to `path` and the summary next to it.
pub fn write_report(report: &ExperimentReport, path: &Path) -> Result<PathBuf> {
    fs::write(path, report.to_csv()).map_err(|e| Error::io(path, e))?;
    let summary = summary_path(path);
    fs::write(&summary, report.summary()).map_err(|e| Error::io(&summary, e))?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::NonlinearitySpec;
    use crate::integrators::IntegratorKind;
    use crate::nonlinearity::NonlinearityKind;

    fn census() -> ExperimentReport {
        let row = CensusRow {
            integrator: IntegratorKind::Lt,
            nonlinearity: NonlinearitySpec::new(NonlinearityKind::Rational, 2.5),
            dim: 1,
            subdivisions: 256,
            tau: 0.03125,
            samples: 100,
            positive: 100,
            diverged: 0,
        };
        ExperimentReport::new(
            ExperimentKind::Census,
            7,
            vec![("N".into(), "256".into())],
            ReportBody::Census(vec![row]),
            Duration::from_millis(5),
        )
    }

    #[test]
    fn census_csv_layout() {
        let csv = census().to_csv();
        let lines: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(
            lines,
            [
                "integrator,g,lambda,d,N,tau,samples,positive,diverged",
                "LT,rational,2.5,1,256,0.03125,100,100,0",
            ]
        );
        assert!(csv.contains("# seed: 7"));
        assert!(!csv.contains("wall"));
    }

    #[test]
    fn summary_mentions_counts_and_time() {
        let s = census().summary();
        assert!(s.contains("100/100"));
        assert!(s.contains("wall clock"));
    }

    #[test]
    fn summary_sits_next_to_csv() {
        assert_eq!(
            summary_path(Path::new("out/census.csv")),
            PathBuf::from("out/census.summary.txt")
        );
    }

    #[test]
    fn unwritable_path_is_reported() {
        let err = write_report(&census(), Path::new("/nonexistent-dir/x.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"), "{err}");
    }
}
