//! Run configuration files.
//!
//! The format is line oriented:
//!
//! ```text
//! # comment
//! scenario = vtol            # shorthand for [scenario] name = vtol
//!
//! [gains]
//! g = 2.5
//! kappa = 10
//!
//! [stabilizer]
//! c = 1, 3, 3                # chains separated by ';'
//!
//! [sweep]
//! parameter = g
//! values = 1, 2, 4
//! ```
//!
//! Every key is optional except the scenario name; missing keys take the
//! scenario's defaults, and [`RunConfig::emit`] writes all of them out.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;

use thiserror::Error;

use crate::numerics::{binomial_descending, Polynomial};
use crate::regulator::ScheduleFloors;
use crate::scenarios::{build_design, DesignParams, LinearParams, ScenarioSpec, VtolParams};
use crate::simulation::{default_tfinal, InitialSpec, SimOptions, SweepParam};

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "line {n}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self { line: Some(line), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweepParam,
    /// Multipliers of the base setting, strictly increasing.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub tfinal: f64,
    /// `None` picks the step from the fastest rate of each design.
    pub dt: Option<f64>,
    pub record_interval: f64,
    pub tail_fraction: f64,
    pub output: PathBuf,
}

impl RunSettings {
    pub fn sim_options(&self) -> SimOptions {
        SimOptions { tfinal: self.tfinal, dt: self.dt, record_interval: self.record_interval }
    }
}

/// A fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioSpec,
    pub design: DesignParams,
    pub floors: ScheduleFloors,
    pub run: RunSettings,
    pub initial: InitialSpec,
    pub sweep: Option<SweepSpec>,
}

pub const DEFAULT_RECORD_INTERVAL: f64 = 0.01;
pub const DEFAULT_TAIL_FRACTION: f64 = 0.2;
pub const DEFAULT_OUTPUT: &str = "out";
/// Deepest internal model accepted; binomial coefficients and the jets of
/// `Υ` are computed to this order.
pub const MAX_DEPTH: usize = 12;

const SECTIONS: &[&str] =
    &["scenario", "gains", "schedule", "internal_model", "stabilizer", "identifier", "run", "initial", "sweep"];

struct Entry {
    line: usize,
    value: String,
}

/// Raw `section → key → value` table with line numbers.
struct Table {
    sections: HashMap<String, usize>,
    entries: HashMap<(String, String), Entry>,
}

impl Table {
    fn lex(text: &str) -> Result<Self, ConfigError> {
        let mut sections = HashMap::new();
        let mut entries: HashMap<(String, String), Entry> = HashMap::new();
        let mut current: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(rest) = body.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::at(line, "section header is missing ']'"))?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(ConfigError::at(line, format!("unknown section [{name}]")));
                }
                if sections.insert(name.to_string(), line).is_some() {
                    return Err(ConfigError::at(line, format!("section [{name}] appears twice")));
                }
                current = Some(name.to_string());
                continue;
            }
            let (key, value) =
                body.split_once('=').ok_or_else(|| ConfigError::at(line, format!("expected 'key = value', got '{body}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(ConfigError::at(line, "empty key"));
            }
            let section = match &current {
                Some(s) => s.clone(),
                None if key == "scenario" => {
                    let k = ("scenario".to_string(), "name".to_string());
                    if entries.insert(k, Entry { line, value: value.to_string() }).is_some() {
                        return Err(ConfigError::at(line, "scenario named twice"));
                    }
                    continue;
                }
                None => return Err(ConfigError::at(line, format!("key '{key}' outside any section"))),
            };
            let k = (section.clone(), key.to_string());
            if entries.contains_key(&k) {
                return Err(ConfigError::at(line, format!("duplicate key '{key}' in [{section}]")));
            }
            entries.insert(k, Entry { line, value: value.to_string() });
        }
        Ok(Self { sections, entries })
    }

    fn take(&mut self, section: &str, key: &str) -> Option<Entry> {
        self.entries.remove(&(section.to_string(), key.to_string()))
    }

    fn first_line_of(&self, sections: &[&str]) -> Option<usize> {
        sections.iter().filter_map(|s| self.sections.get(*s).copied()).min()
    }
}

fn number(e: &Entry, key: &str) -> Result<f64, ConfigError> {
    let v: f64 = e.value.parse().map_err(|_| ConfigError::at(e.line, format!("{key}: '{}' is not a number", e.value)))?;
    if !v.is_finite() {
        return Err(ConfigError::at(e.line, format!("{key} must be finite, got {}", e.value)));
    }
    Ok(v)
}

fn positive(e: &Entry, key: &str) -> Result<f64, ConfigError> {
    let v = number(e, key)?;
    if !(v > 0.0) {
        return Err(ConfigError::at(e.line, format!("{key} must be > 0, got {v}")));
    }
    Ok(v)
}

fn list(e: &Entry, key: &str) -> Result<Vec<f64>, ConfigError> {
    if e.value == "none" {
        return Ok(Vec::new());
    }
    e.value
        .split(',')
        .map(|s| {
            let s = s.trim();
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(ConfigError::at(e.line, format!("{key}: '{s}' is not a finite number"))),
            }
        })
        .collect()
}

fn boolean(e: &Entry, key: &str) -> Result<bool, ConfigError> {
    match e.value.as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(ConfigError::at(e.line, format!("{key}: expected true or false, got '{other}'"))),
    }
}

fn count(e: &Entry, key: &str) -> Result<usize, ConfigError> {
    match e.value.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(ConfigError::at(e.line, format!("{key} must be a positive integer, got '{}'", e.value))),
    }
}

fn hurwitz_check(line: usize, key: &str, poly: Result<Polynomial, crate::numerics::NumericsError>) -> Result<(), ConfigError> {
    match poly {
        Ok(p) if p.is_hurwitz() => Ok(()),
        Ok(_) => Err(ConfigError::at(line, format!("{key} coefficients are not Hurwitz"))),
        Err(err) => Err(ConfigError::at(line, format!("{key}: {err}"))),
    }
}

fn scenario_spec(t: &mut Table) -> Result<ScenarioSpec, ConfigError> {
    let name = t.take("scenario", "name").ok_or(ConfigError { line: None, message: "scenario name is required".into() })?;
    let mut set = |key: &str, slot: &mut f64| -> Result<(), ConfigError> {
        if let Some(e) = t.take("scenario", key) {
            *slot = number(&e, key)?;
        }
        Ok(())
    };
    let spec = match name.value.as_str() {
        "vtol" => {
            let mut p = VtolParams::default();
            set("varrho", &mut p.varrho)?;
            set("b", &mut p.b)?;
            set("mass", &mut p.mass)?;
            set("amplitude", &mut p.amplitude)?;
            set("omega0", &mut p.omega0)?;
            set("phase", &mut p.phase)?;
            set("lscalar", &mut p.lscalar)?;
            set("v0", &mut p.v0)?;
            set("v_decay", &mut p.v_decay)?;
            ScenarioSpec::Vtol(p)
        }
        "linear" => {
            let mut p = LinearParams::default();
            set("omega0", &mut p.omega0)?;
            set("amplitude", &mut p.amplitude)?;
            set("phase", &mut p.phase)?;
            ScenarioSpec::Linear(p)
        }
        other => return Err(ConfigError::at(name.line, format!("unknown scenario '{other}' (expected vtol or linear)"))),
    };
    Ok(spec)
}

fn design_params(t: &mut Table, base: DesignParams) -> Result<DesignParams, ConfigError> {
    let mut p = base;
    for key in ["rho", "g", "kappa", "ell"] {
        if let Some(e) = t.take("gains", key) {
            let v = number(&e, key)?;
            if !(v > 1.0) {
                return Err(ConfigError::at(e.line, format!("{key} must be > 1, got {v}")));
            }
            match key {
                "rho" => p.gains.rho = v,
                "g" => p.gains.g = v,
                "kappa" => p.gains.kappa = v,
                _ => p.gains.ell = v,
            }
        }
    }

    let d_entry = t.take("internal_model", "d");
    if let Some(e) = &d_entry {
        p.d = count(e, "d")?;
        if p.d > MAX_DEPTH {
            return Err(ConfigError::at(e.line, format!("d must be at most {MAX_DEPTH}, got {}", p.d)));
        }
        p.h = binomial_descending(p.d);
    }
    if let Some(e) = t.take("internal_model", "h") {
        let h = list(&e, "h")?;
        if h.len() != p.d {
            return Err(ConfigError::at(e.line, format!("h has {} entries, expected d = {}", h.len(), p.d)));
        }
        hurwitz_check(e.line, "h", Polynomial::from_descending(&h))?;
        p.h = h;
    }
    if let Some(e) = t.take("internal_model", "sigma_saturation") {
        p.sigma_saturation = boolean(&e, "sigma_saturation")?;
    }

    if let Some(e) = t.take("stabilizer", "c") {
        let chains: Vec<Vec<f64>> = e
            .value
            .split(';')
            .map(|chunk| list(&Entry { line: e.line, value: chunk.trim().to_string() }, "c"))
            .collect::<Result<_, _>>()?;
        if chains.len() != p.c.len() {
            return Err(ConfigError::at(e.line, format!("c has {} chains, expected {}", chains.len(), p.c.len())));
        }
        for (k, (new, old)) in chains.iter().zip(&p.c).enumerate() {
            if new.len() != old.len() {
                return Err(ConfigError::at(
                    e.line,
                    format!("c chain {} has {} entries, expected {}", k + 1, new.len(), old.len()),
                ));
            }
            hurwitz_check(e.line, "c", Polynomial::monic(new.clone()))?;
        }
        p.c = chains;
    }

    if let Some(e) = t.take("identifier", "lambda") {
        let v = number(&e, "lambda")?;
        if v < 0.0 {
            return Err(ConfigError::at(e.line, format!("lambda must be >= 0, got {v}")));
        }
        p.lambda = v;
    }
    if let Some(e) = t.take("identifier", "gamma_scale") {
        p.gamma_scale = positive(&e, "gamma_scale")?;
    }
    if let Some(e) = t.take("identifier", "m1") {
        p.m1 = positive(&e, "m1")?;
    }
    if let Some(e) = t.take("identifier", "m2") {
        p.m2 = positive(&e, "m2")?;
    }
    Ok(p)
}

fn floors(t: &mut Table) -> Result<ScheduleFloors, ConfigError> {
    let mut f = ScheduleFloors::default();
    if let Some(e) = t.take("schedule", "kappa_per_g") {
        f.kappa_per_g = number(&e, "kappa_per_g")?;
    }
    if let Some(e) = t.take("schedule", "ell_per_kappa") {
        f.ell_per_kappa = number(&e, "ell_per_kappa")?;
    }
    for (key, v) in [("kappa_per_g", f.kappa_per_g), ("ell_per_kappa", f.ell_per_kappa)] {
        if v < 0.0 {
            let line = t.sections.get("schedule").copied();
            return Err(ConfigError { line, message: format!("{key} must be >= 0, got {v}") });
        }
    }
    Ok(f)
}

fn initial_spec(t: &mut Table) -> Result<InitialSpec, ConfigError> {
    let mut s = InitialSpec::default();
    if let Some(e) = t.take("initial", "chi_offset") {
        s.chi_offset = list(&e, "chi_offset")?;
    }
    if let Some(e) = t.take("initial", "zeta_offset") {
        s.zeta_offset = list(&e, "zeta_offset")?;
    }
    if let Some(e) = t.take("initial", "eta_exact") {
        s.eta_exact = boolean(&e, "eta_exact")?;
    }
    if let Some(e) = t.take("initial", "theta0") {
        let v = list(&e, "theta0")?;
        s.theta0 = (!v.is_empty()).then_some(v);
    }
    Ok(s)
}

fn sweep_spec(t: &mut Table) -> Result<Option<SweepSpec>, ConfigError> {
    let Some(&header) = t.sections.get("sweep") else {
        return Ok(None);
    };
    let param = t.take("sweep", "parameter").ok_or_else(|| ConfigError::at(header, "[sweep] needs 'parameter'"))?;
    let parameter = SweepParam::parse(&param.value).ok_or_else(|| {
        ConfigError::at(
            param.line,
            format!("unknown sweep parameter '{}' (expected g, kappa, ell, rho, lambda or gamma_scale)", param.value),
        )
    })?;
    let vals = t.take("sweep", "values").ok_or_else(|| ConfigError::at(header, "[sweep] needs 'values'"))?;
    let values = list(&vals, "values")?;
    if values.is_empty() {
        return Err(ConfigError::at(vals.line, "values must not be empty"));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0)) {
        return Err(ConfigError::at(vals.line, format!("sweep values must be > 0, got {v}")));
    }
    if values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(ConfigError::at(vals.line, "sweep values must be strictly increasing"));
    }
    Ok(Some(SweepSpec { parameter, values }))
}

/// Parses and validates a configuration, resolving every default.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut t = Table::lex(text)?;
    let scenario = scenario_spec(&mut t)?;
    let scn = scenario
        .build()
        .map_err(|e| ConfigError { line: t.sections.get("scenario").copied(), message: e.to_string() })?;
    let design = design_params(&mut t, scn.default_design())?;
    let floors = floors(&mut t)?;
    let initial = initial_spec(&mut t)?;
    let sweep = sweep_spec(&mut t)?;

    let mut run = RunSettings {
        tfinal: default_tfinal(scn.as_ref(), &design),
        dt: None,
        record_interval: DEFAULT_RECORD_INTERVAL,
        tail_fraction: DEFAULT_TAIL_FRACTION,
        output: PathBuf::from(DEFAULT_OUTPUT),
    };
    if let Some(e) = t.take("run", "tfinal") {
        run.tfinal = positive(&e, "tfinal")?;
    }
    if let Some(e) = t.take("run", "dt") {
        run.dt = if e.value == "auto" { None } else { Some(positive(&e, "dt")?) };
    }
    if let Some(e) = t.take("run", "record_interval") {
        run.record_interval = positive(&e, "record_interval")?;
    }
    if let Some(e) = t.take("run", "tail_fraction") {
        let v = number(&e, "tail_fraction")?;
        if !(v > 0.0 && v <= 1.0) {
            return Err(ConfigError::at(e.line, format!("tail_fraction must lie in (0, 1], got {v}")));
        }
        run.tail_fraction = v;
    }
    if let Some(e) = t.take("run", "output") {
        if e.value.is_empty() {
            return Err(ConfigError::at(e.line, "output must not be empty"));
        }
        run.output = PathBuf::from(e.value);
    }

    if let Some(((section, key), e)) = t.entries.iter().min_by_key(|(_, e)| e.line) {
        return Err(ConfigError::at(e.line, format!("unknown key '{key}' in [{section}]")));
    }

    let cfg = RunConfig { scenario, design, floors, run, initial, sweep };
    cfg.check_assembly(t.first_line_of(&["gains", "internal_model", "stabilizer", "identifier", "initial"]))?;
    Ok(cfg)
}

impl RunConfig {
    /// Builds the base design and initial state once, to surface
    /// cross-key inconsistencies (for example a `theta0` of the wrong length).
    fn check_assembly(&self, line: Option<usize>) -> Result<(), ConfigError> {
        let err = |message: String| ConfigError { line, message };
        let scn = self.scenario.build().map_err(|e| err(e.to_string()))?;
        let design = build_design(scn.clone(), &self.design).map_err(|e| err(e.to_string()))?;
        let oracle = crate::scenarios::steady_state(scn.clone(), &self.design).map_err(|e| err(e.to_string()))?;
        crate::simulation::initial_state(scn.as_ref(), &design, &oracle, &self.initial).map_err(|e| err(e.to_string()))?;
        Ok(())
    }

    /// Writes every setting in the canonical layout. `parse_config` of the
    /// result gives back an equal configuration.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        let list = |v: &[f64]| {
            if v.is_empty() {
                "none".to_string()
            } else {
                v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
            }
        };
        let w = &mut s;
        let _ = writeln!(w, "[scenario]");
        let _ = writeln!(w, "name = {}", self.scenario.name());
        match &self.scenario {
            ScenarioSpec::Vtol(p) => {
                for (k, v) in [
                    ("varrho", p.varrho),
                    ("b", p.b),
                    ("mass", p.mass),
                    ("amplitude", p.amplitude),
                    ("omega0", p.omega0),
                    ("phase", p.phase),
                    ("lscalar", p.lscalar),
                    ("v0", p.v0),
                    ("v_decay", p.v_decay),
                ] {
                    let _ = writeln!(w, "{k} = {v:?}");
                }
            }
            ScenarioSpec::Linear(p) => {
                for (k, v) in [("omega0", p.omega0), ("amplitude", p.amplitude), ("phase", p.phase)] {
                    let _ = writeln!(w, "{k} = {v:?}");
                }
            }
        }
        let g = &self.design.gains;
        let _ = writeln!(w, "\n[gains]\nrho = {:?}\ng = {:?}\nkappa = {:?}\nell = {:?}", g.rho, g.g, g.kappa, g.ell);
        let _ = writeln!(
            w,
            "\n[schedule]\nkappa_per_g = {:?}\nell_per_kappa = {:?}",
            self.floors.kappa_per_g, self.floors.ell_per_kappa
        );
        let _ = writeln!(
            w,
            "\n[internal_model]\nd = {}\nh = {}\nsigma_saturation = {}",
            self.design.d,
            list(&self.design.h),
            self.design.sigma_saturation
        );
        let chains: Vec<String> = self.design.c.iter().map(|c| list(c)).collect();
        let _ = writeln!(w, "\n[stabilizer]\nc = {}", chains.join("; "));
        let _ = writeln!(
            w,
            "\n[identifier]\nlambda = {:?}\ngamma_scale = {:?}\nm1 = {:?}\nm2 = {:?}",
            self.design.lambda, self.design.gamma_scale, self.design.m1, self.design.m2
        );
        let dt = self.run.dt.map_or_else(|| "auto".to_string(), |v| format!("{v:?}"));
        let _ = writeln!(
            w,
            "\n[run]\ntfinal = {:?}\ndt = {dt}\nrecord_interval = {:?}\ntail_fraction = {:?}\noutput = {}",
            self.run.tfinal,
            self.run.record_interval,
            self.run.tail_fraction,
            self.run.output.display()
        );
        let _ = writeln!(
            w,
            "\n[initial]\nchi_offset = {}\nzeta_offset = {}\neta_exact = {}\ntheta0 = {}",
            list(&self.initial.chi_offset),
            list(&self.initial.zeta_offset),
            self.initial.eta_exact,
            list(self.initial.theta0.as_deref().unwrap_or(&[]))
        );
        if let Some(sw) = &self.sweep {
            let _ = writeln!(w, "\n[sweep]\nparameter = {}\nvalues = {}", sw.parameter.name(), list(&sw.values));
        }
        s
    }
}
