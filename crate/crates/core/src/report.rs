//! Output files of a run: one CSV per simulation, a summary table and the
//! resolved configuration.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::RunConfig;
use crate::numerics::norm;
use crate::simulation::{self, summarize, Prepared, RunRecord, RunSummary, SimError, Theorem1Ratio};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0} already exists (pass --overwrite to replace it)")]
    Exists(PathBuf),
    #[error("the configuration has no [sweep] section")]
    NoSweep,
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("malformed run CSV: {0}")]
    Csv(String),
}

impl ReportError {
    /// Process exit status: 2 for file-system problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            ReportError::Io { .. } | ReportError::Exists(_) => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ReportError + '_ {
    move |source| ReportError::Io { path: path.to_path_buf(), source }
}

/// Column counts of a run CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvLayout {
    pub ne: usize,
    pub nu: usize,
    pub ntheta: usize,
    pub eta_dim: usize,
}

impl CsvLayout {
    pub fn of(rec: &RunRecord) -> Self {
        Self { ne: rec.ne, nu: rec.nu, ntheta: rec.ntheta, eta_dim: rec.eta_dim }
    }

    pub fn columns(&self) -> Vec<String> {
        let mut cols = vec!["t".to_string()];
        cols.extend((1..=self.ne).map(|i| format!("e_{i}")));
        cols.push("norm_e".into());
        cols.extend((1..=self.nu).map(|i| format!("u_{i}")));
        cols.extend((1..=self.ntheta).map(|i| format!("theta_{i}")));
        cols.extend((1..=self.ne).map(|i| format!("eps_star_{i}")));
        cols.extend((1..=self.eta_dim).map(|i| format!("eta_{i}")));
        cols.extend(["diag_eq8_residual", "diag_minEig_OmegaL", "diag_sigma_norm"].map(String::from));
        cols
    }
}

pub fn csv_header(rec: &RunRecord) -> String {
    CsvLayout::of(rec).columns().join(",")
}

/// Writes the record as CSV, every value with 17 significant digits.
pub fn write_csv<W: Write>(rec: &RunRecord, out: &mut W) -> io::Result<()> {
    writeln!(out, "{}", csv_header(rec))?;
    let dg = &rec.diagnostics;
    let mut line = String::new();
    for k in 0..rec.len() {
        line.clear();
        let _ = write!(line, "{:.16e}", rec.times[k]);
        let norm_e = norm(&rec.e[k]);
        let values = rec.e[k]
            .iter()
            .chain(std::iter::once(&norm_e))
            .chain(&rec.u[k])
            .chain(&rec.theta[k])
            .chain(&rec.eps_star[k])
            .chain(&rec.eta[k])
            .chain([&dg.eq8_residual[k], &dg.min_eig_omega_l[k], &dg.sigma_norm[k]]);
        for v in values {
            let _ = write!(line, ",{v:.16e}");
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |x| format!("{x:.16e}"))
}

/// Column names of the summary table.
pub const SUMMARY_COLUMNS: &[&str] = &[
    "run",
    "value",
    "diverged",
    "diverged_at",
    "tail_sup_e",
    "tail_sup_eps_star",
    "theorem1_ratio",
    "peak_e",
    "max_eq8_residual",
    "min_sigma1_eig",
    "sigma_excursions",
    "dt",
    "theta_tail_mean",
];

/// One row of the summary table; `value` is the sweep multiplier.
pub fn summary_row(k: usize, value: f64, s: &RunSummary) -> String {
    let ratio = match s.ratio {
        Some(Theorem1Ratio::Ratio(r)) => format!("{r:.16e}"),
        Some(Theorem1Ratio::Asymptotic { .. }) => "asymptotic".to_string(),
        None => "nan".to_string(),
    };
    let theta = s.theta_tail_mean.as_ref().map_or_else(
        || "nan".to_string(),
        |v| v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(";"),
    );
    [
        k.to_string(),
        format!("{value:.16e}"),
        s.diverged_at.is_some().to_string(),
        fmt_opt(s.diverged_at),
        fmt_opt(s.tail_e),
        fmt_opt(s.tail_eps),
        ratio,
        format!("{:.16e}", s.peak_e),
        format!("{:.16e}", s.max_eq8_residual),
        format!("{:.16e}", s.min_sigma1_eig),
        s.sigma_excursions.to_string(),
        format!("{:.16e}", s.dt),
        theta,
    ]
    .join("\t")
}

/// Outcome of [`run_command`].
#[derive(Debug)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub summaries: Vec<RunSummary>,
    pub records: Vec<RunRecord>,
}

impl RunOutcome {
    pub fn any_diverged(&self) -> bool {
        self.summaries.iter().any(|s| s.diverged_at.is_some())
    }
}

/// A sweep value with the run it produced.
type SweepOutput = (f64, Result<RunRecord, SimError>);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// A single run of the base configuration.
    Single,
    /// One run per `[sweep]` value.
    Sweep,
}

fn prepare_dir(dir: &Path, overwrite: bool) -> Result<(), ReportError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let entries = fs::read_dir(dir).map_err(io_err(dir))?;
    for entry in entries {
        let entry = entry.map_err(io_err(dir))?;
        let name = entry.file_name();
        let name = name.to_string_lossy();
        let ours = name == "summary.txt"
            || name == "resolved.cfg"
            || (name.starts_with("run_") && name.ends_with(".csv"));
        if !ours {
            continue;
        }
        if !overwrite {
            return Err(ReportError::Exists(entry.path()));
        }
        fs::remove_file(entry.path()).map_err(io_err(&entry.path()))?;
    }
    Ok(())
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<fs::File>) -> io::Result<()>) -> Result<(), ReportError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
}

/// Runs the configuration and writes `run_<k>.csv` (k from 1),
/// `summary.txt` and `resolved.cfg` into `cfg.run.output`.
///
/// Existing output files are refused unless `overwrite` is set, and are
/// cleared before anything runs. A diverged run is reported in the summary
/// and does not make this fail.
pub fn run_command(cfg: &RunConfig, mode: Mode, overwrite: bool) -> Result<RunOutcome, ReportError> {
    let dir = &cfg.run.output;
    prepare_dir(dir, overwrite)?;
    let scenario = cfg.scenario.build().map_err(SimError::from)?;
    let opts = cfg.run.sim_options();
    let (label, runs): (&str, Vec<SweepOutput>) = match mode {
        Mode::Single => {
            let prep = Prepared::new(scenario.clone(), &cfg.design)?;
            let init = prep.initial(&cfg.initial)?;
            ("none", vec![(1.0, simulation::simulate(&prep, &init, &opts))])
        }
        Mode::Sweep => {
            let sw = cfg.sweep.as_ref().ok_or(ReportError::NoSweep)?;
            let out =
                simulation::sweep(scenario.clone(), &cfg.design, sw.parameter, &sw.values, &cfg.floors, &cfg.initial, &opts)?;
            (sw.parameter.name(), out.into_iter().map(|r| (r.value, r.record)).collect())
        }
    };
    let values: Vec<f64> = runs.iter().map(|(v, _)| *v).collect();
    let records: Vec<RunRecord> = runs.into_iter().map(|(_, r)| r).collect::<Result<_, _>>()?;

    let mut files = Vec::new();
    for (k, rec) in records.iter().enumerate() {
        let path = dir.join(format!("run_{}.csv", k + 1));
        write_file(&path, |w| write_csv(rec, w))?;
        files.push(path);
    }

    let summaries: Vec<RunSummary> = records.iter().map(|r| summarize(r, cfg.run.tail_fraction)).collect();
    let mut text = String::new();
    let _ = writeln!(text, "scenario\t{}", scenario.name());
    let _ = writeln!(text, "sweep_parameter\t{label}");
    let _ = writeln!(text, "tail_fraction\t{:.16e}", cfg.run.tail_fraction);
    let _ = writeln!(text, "tfinal\t{:.16e}", cfg.run.tfinal);
    let _ = writeln!(text, "any_diverged\t{}", summaries.iter().any(|s| s.diverged_at.is_some()));
    let _ = writeln!(text);
    let _ = writeln!(text, "{}", SUMMARY_COLUMNS.join("\t"));
    for (k, (value, s)) in values.iter().zip(&summaries).enumerate() {
        let _ = writeln!(text, "{}", summary_row(k + 1, *value, s));
    }
    let path = dir.join("summary.txt");
    write_file(&path, |w| w.write_all(text.as_bytes()))?;
    files.push(path);

    let path = dir.join("resolved.cfg");
    write_file(&path, |w| w.write_all(cfg.emit().as_bytes()))?;
    files.push(path);

    Ok(RunOutcome { files, summaries, records })
}

/// A run CSV read back into memory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTable {
    pub layout: CsvLayout,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl RunTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

/// Parses a CSV written by [`write_csv`]. The header must have exactly the
/// layout `write_csv` produces for some dimensions, and every row must be
/// complete and numeric.
pub fn read_csv(text: &str) -> Result<RunTable, ReportError> {
    let bad = |m: String| ReportError::Csv(m);
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let columns: Vec<String> =
        reader.headers().map_err(|e| bad(e.to_string()))?.iter().map(str::to_string).collect();
    let count = |prefix: &str| columns.iter().filter(|c| c.strip_prefix(prefix).is_some_and(|n| n.parse::<usize>().is_ok())).count();
    let layout = CsvLayout { ne: count("e_"), nu: count("u_"), ntheta: count("theta_"), eta_dim: count("eta_") };
    if layout.columns() != columns {
        return Err(bad("header does not match the run layout".into()));
    }
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let row: Vec<f64> = record
            .iter()
            .map(|v| v.parse::<f64>().map_err(|_| bad(format!("row {}: '{v}' is not a number", k + 1))))
            .collect::<Result<_, _>>()?;
        if row.len() != columns.len() {
            return Err(bad(format!("row {} has {} fields, expected {}", k + 1, row.len(), columns.len())));
        }
        rows.push(row);
    }
    Ok(RunTable { layout, columns, rows })
}
