//! Closed-loop integration, run records and tail metrics.

pub mod replay;

use std::cell::RefCell;
use std::sync::Arc;

use thiserror::Error;

use crate::numerics::{min_symmetric_eigenvalue, norm, rk4_step, DenseMatrix};
use crate::plant::{plant_rhs, PlantError, PlantState};
use crate::regulator::{
    regulator_rhs, tuning_schedule, GainSet, Multipliers, RegulatorDesign, RegulatorError, RegulatorState,
    ScheduleFloors,
};
use crate::scenarios::{build_design, steady_state, DesignParams, Scenario, ScenarioError, SteadyStateOracle};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation request: {0}")]
    Invalid(String),
    #[error("step size {dt:e} is below the 1e-7 floor")]
    StepTooSmall { dt: f64 },
    #[error("run diverged at t = {t}")]
    Diverged { t: f64 },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Regulator(#[from] RegulatorError),
    #[error(transparent)]
    Plant(#[from] PlantError),
}

/// Smallest step the integrator accepts.
pub const DT_FLOOR: f64 = 1e-7;
/// State norm beyond which a run is declared diverged.
pub const DIVERGENCE_NORM: f64 = 1e12;
/// Tail `ε*` below which regulation counts as asymptotic.
pub const ASYMPTOTIC_THRESHOLD: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopState {
    pub plant: PlantState,
    pub regulator: RegulatorState,
    pub t: f64,
}

impl ClosedLoopState {
    pub fn pack(&self) -> Vec<f64> {
        let mut v = Vec::new();
        self.plant.pack_into(&mut v);
        self.regulator.pack_into(&mut v);
        v
    }
}

/// How to initialize a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InitialSpec {
    /// Added to `χ*(0)`; empty means no offset.
    pub chi_offset: Vec<f64>,
    pub zeta_offset: Vec<f64>,
    /// Start `η` and the observer on the ideal steady state.
    pub eta_exact: bool,
    /// Start the identifier at `ς1 = I`, `ς2 = (I + Γ) θ0` (so `γ(ς) = θ0`);
    /// otherwise `ς = 0`.
    pub theta0: Option<Vec<f64>>,
}

/// Builds the initial closed-loop state described by `spec`.
pub fn initial_state(
    scenario: &dyn Scenario,
    design: &RegulatorDesign,
    oracle: &SteadyStateOracle,
    spec: &InitialSpec,
) -> Result<ClosedLoopState, SimError> {
    let mut plant = scenario.x_star(0.0);
    for (dst, name, off) in [(&mut plant.chi, "chi", &spec.chi_offset), (&mut plant.zeta, "zeta", &spec.zeta_offset)] {
        if off.is_empty() {
            continue;
        }
        if off.len() != dst.len() {
            return Err(SimError::Invalid(format!("{name} offset has length {}, expected {}", off.len(), dst.len())));
        }
        for (x, o) in dst.iter_mut().zip(off) {
            *x += o;
        }
    }
    let mut reg = design.zero_state();
    if spec.eta_exact {
        reg.eta = oracle.eta_star(0.0);
        let ne = design.ne();
        reg.id.xi1 = reg.eta[(design.d() - 1) * ne..].to_vec();
        reg.id.xi2 = oracle.etad_dot_star(0.0);
    }
    if let Some(theta0) = &spec.theta0 {
        let p = design.p();
        if theta0.len() != design.ntheta() {
            return Err(SimError::Invalid(format!(
                "theta0 has length {}, expected {}",
                theta0.len(),
                design.ntheta()
            )));
        }
        let gamma = design.identifier.gamma();
        for (j, st) in reg.id.ls.iter_mut().enumerate() {
            st.s1 = DenseMatrix::identity(p);
            let th = &theta0[j * p..(j + 1) * p];
            st.s2 = DenseMatrix::identity(p).add(gamma).mul_vec(th);
        }
    }
    Ok(ClosedLoopState { plant, regulator: reg, t: 0.0 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    pub tfinal: f64,
    pub dt: Option<f64>,
    pub record_interval: f64,
}

/// `max(g^d h_d, ℓ sup|Ω𝓛|, m2 ρ², κ^{n_max} max|c|)`.
pub fn fastest_rate(scenario: &dyn Scenario, design: &RegulatorDesign) -> f64 {
    let im = &design.internal_model;
    let st = &design.stabilizer;
    let id = &design.identifier;
    let cmax = st.c().iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let nmax = design.structure.max_chain_length() as i32;
    [
        im.error_gain(),
        st.ell() * scenario.omega_l_bound(),
        id.m2() * id.rho() * id.rho(),
        st.kappa().powi(nmax) * cmax,
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// `min(1e-3, 0.1 / Λ)`.
pub fn default_dt(scenario: &dyn Scenario, design: &RegulatorDesign) -> f64 {
    (0.1 / fastest_rate(scenario, design)).min(1e-3)
}

/// `max(20 / λ, 20 periods)`.
pub fn default_tfinal(scenario: &dyn Scenario, params: &DesignParams) -> f64 {
    let periods = 20.0 * scenario.period();
    if params.lambda > 0.0 {
        periods.max(20.0 / params.lambda)
    } else {
        periods
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    /// `|h_d g^d e − (η̇_d − ψ(η, θ))|`.
    pub eq8_residual: Vec<f64>,
    /// Smallest eigenvalue of `𝓛ᵀΩᵀ + Ω𝓛`.
    pub min_eig_omega_l: Vec<f64>,
    /// Norm of the least-squares state `ς`.
    pub sigma_norm: Vec<f64>,
    /// Smallest eigenvalue of `ς1` over channels.
    pub sigma1_min_eig: Vec<f64>,
    /// Largest `|ς1 − ς1ᵀ|` entry over channels.
    pub sigma1_symmetry: Vec<f64>,
    /// `|ξ1 − η_d|`.
    pub observer_error: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub scenario: String,
    pub ne: usize,
    pub nu: usize,
    pub ntheta: usize,
    pub eta_dim: usize,
    /// `h_d g^d`.
    pub error_gain: f64,
    pub dt: f64,
    pub times: Vec<f64>,
    pub e: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
    pub eps_star: Vec<Vec<f64>>,
    pub eta: Vec<Vec<f64>>,
    pub diagnostics: Diagnostics,
    /// Bound on `|ς|` the identifier is expected to stay within.
    pub sigma_bound: f64,
    /// Time of divergence, when the run was cut short.
    pub diverged_at: Option<f64>,
    pub final_state: Vec<f64>,
}

impl RunRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }

    /// Recorded steps at which `|ς|` exceeded [`RunRecord::sigma_bound`].
    pub fn sigma_excursions(&self) -> usize {
        self.diagnostics.sigma_norm.iter().filter(|s| **s > self.sigma_bound).count()
    }
}

/// Everything fixed for one run.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub scenario: Arc<dyn Scenario>,
    pub params: DesignParams,
    pub design: RegulatorDesign,
    pub oracle: SteadyStateOracle,
}

impl Prepared {
    pub fn new(scenario: Arc<dyn Scenario>, params: &DesignParams) -> Result<Self, SimError> {
        let design = build_design(scenario.clone(), params)?;
        let oracle = steady_state(scenario.clone(), params)?;
        Ok(Self { scenario, params: params.clone(), design, oracle })
    }

    pub fn initial(&self, spec: &InitialSpec) -> Result<ClosedLoopState, SimError> {
        initial_state(self.scenario.as_ref(), &self.design, &self.oracle, spec)
    }

    /// Expected size of `ς`: twice its ideal value's bound over a period.
    fn sigma_bound(&self) -> f64 {
        let model = self.oracle.model();
        let ne = self.design.ne();
        let period = self.scenario.period();
        let (mut s_sup, mut y_sup) = (0.0f64, 0.0f64);
        for k in 0..200 {
            let t = period * k as f64 / 200.0;
            let eta = self.oracle.eta_star(t);
            let y = self.oracle.etad_dot_star(t);
            for j in 0..ne {
                s_sup = s_sup.max(norm(&model.sigma(j, &eta)));
                y_sup = y_sup.max(y[j].abs());
            }
        }
        2.0 * (ne as f64).sqrt() * (s_sup * s_sup + s_sup * y_sup) + 1.0
    }
}

struct Layout {
    nw: usize,
    plant_len: usize,
    ls_offsets: Vec<usize>,
    p: usize,
}

impl Layout {
    fn new(prep: &Prepared) -> Self {
        let plant = prep.scenario.plant();
        let s = plant.structure();
        let nw = plant.nw();
        let plant_len = nw + s.n0() + s.n_chi() + s.ne();
        let (d, ne, p) = (prep.design.d(), prep.design.ne(), prep.design.p());
        let ls_offsets = (0..ne).map(|j| plant_len + d * ne + j * (p * p + p)).collect();
        Self { nw, plant_len, ls_offsets, p }
    }

    fn symmetrize(&self, x: &mut [f64]) {
        let p = self.p;
        for &off in &self.ls_offsets {
            for i in 0..p {
                for k in i + 1..p {
                    let m = 0.5 * (x[off + i * p + k] + x[off + k * p + i]);
                    x[off + i * p + k] = m;
                    x[off + k * p + i] = m;
                }
            }
        }
    }
}

struct Evaluated {
    plant: PlantState,
    reg: RegulatorState,
    deriv: Vec<f64>,
    eval: crate::regulator::RegulatorEval,
}

fn evaluate(prep: &Prepared, layout: &Layout, x: &[f64]) -> Result<Evaluated, SimError> {
    let plant_model = prep.scenario.plant();
    let s = plant_model.structure();
    let (plant, used) = PlantState::unpack(layout.nw, s, x);
    let (reg, _) = RegulatorState::unpack(&prep.design, &x[used..]);
    let nu = prep.scenario.feedforward_signal(&plant.w);
    let eval = regulator_rhs(&prep.design, &reg, &plant.chi, &plant.zeta, nu.as_deref())?;
    let pd = plant_rhs(plant_model.as_ref(), &plant, &eval.u)?;
    let mut deriv = Vec::with_capacity(x.len());
    pd.pack_into(&mut deriv);
    eval.derivative.pack_into(&mut deriv);
    Ok(Evaluated { plant, reg, deriv, eval })
}

fn record_step(prep: &Prepared, layout: &Layout, rec: &mut RunRecord, t: f64, x: &[f64]) -> Result<(), SimError> {
    let ev = evaluate(prep, layout, x)?;
    let design = &prep.design;
    let s = &design.structure;
    let e = s.error(&ev.plant.chi);
    let ne = design.ne();
    let d = design.d();

    let omega = prep.scenario.plant().omega(&ev.plant);
    let ol = omega.matmul(design.stabilizer.lmat());
    let sym = ol.add(&ol.transpose());

    let mut s1_min = f64::INFINITY;
    let mut s1_sym = 0.0f64;
    for st in &ev.reg.id.ls {
        let mut m = st.s1.clone();
        s1_sym = s1_sym.max(m.symmetry_defect());
        m.symmetrize();
        s1_min = s1_min.min(min_symmetric_eigenvalue(&m));
    }
    let eta_d = &ev.reg.eta[(d - 1) * ne..];
    let obs: Vec<f64> = ev.reg.id.xi1.iter().zip(eta_d).map(|(a, b)| a - b).collect();

    rec.times.push(t);
    rec.eps_star.push(prep.oracle.epsilon_star(t, &ev.eval.theta));
    rec.e.push(e);
    rec.u.push(ev.eval.u.clone());
    rec.theta.push(ev.eval.theta.clone());
    rec.eta.push(ev.reg.eta.clone());
    let dg = &mut rec.diagnostics;
    dg.eq8_residual.push(ev.eval.eq8_residual);
    dg.min_eig_omega_l.push(min_symmetric_eigenvalue(&sym));
    dg.sigma_norm.push(ev.reg.id.sigma_norm());
    dg.sigma1_min_eig.push(s1_min);
    dg.sigma1_symmetry.push(s1_sym);
    dg.observer_error.push(norm(&obs));
    Ok(())
}

/// Integrates the closed loop from `initial` to `opts.tfinal` with RK4.
///
/// The step is the requested one or [`default_dt`], shrunk so that the run
/// ends exactly at `tfinal`. A non-finite state, or one whose norm exceeds
/// [`DIVERGENCE_NORM`], ends the run early with `diverged_at` set.
pub fn simulate(prep: &Prepared, initial: &ClosedLoopState, opts: &SimOptions) -> Result<RunRecord, SimError> {
    if !(opts.tfinal > 0.0) || !opts.tfinal.is_finite() {
        return Err(SimError::Invalid(format!("tfinal must be > 0, got {}", opts.tfinal)));
    }
    if !(opts.record_interval > 0.0) {
        return Err(SimError::Invalid(format!("record interval must be > 0, got {}", opts.record_interval)));
    }
    let plant_model = prep.scenario.plant();
    initial.plant.check_dims(plant_model.nw(), plant_model.structure())?;
    let x0 = initial.pack();
    if x0.len() != Layout::new(prep).plant_len + prep.design.state_len() {
        return Err(SimError::Invalid("initial regulator state does not match the design".into()));
    }

    let target = opts.dt.unwrap_or_else(|| default_dt(prep.scenario.as_ref(), &prep.design));
    if !(target >= DT_FLOOR) {
        return Err(SimError::StepTooSmall { dt: target });
    }
    let steps = (opts.tfinal / target).ceil().max(1.0) as u64;
    let dt = opts.tfinal / steps as f64;
    let every = ((opts.record_interval / dt).round() as u64).max(1);

    let layout = Layout::new(prep);
    let s = plant_model.structure();
    let mut rec = RunRecord {
        scenario: prep.scenario.name().to_string(),
        ne: s.ne(),
        nu: s.nu(),
        ntheta: prep.design.ntheta(),
        eta_dim: prep.design.d() * s.ne(),
        error_gain: prep.design.internal_model.error_gain(),
        dt,
        times: Vec::new(),
        e: Vec::new(),
        u: Vec::new(),
        theta: Vec::new(),
        eps_star: Vec::new(),
        eta: Vec::new(),
        diagnostics: Diagnostics::default(),
        sigma_bound: prep.sigma_bound(),
        diverged_at: None,
        final_state: Vec::new(),
    };

    let t0 = initial.t;
    let mut x = x0;
    record_step(prep, &layout, &mut rec, t0, &x)?;
    let failure: RefCell<Option<SimError>> = RefCell::new(None);
    for k in 1..=steps {
        let t = t0 + (k - 1) as f64 * dt;
        let step = rk4_step(
            |_t, y| match evaluate(prep, &layout, y) {
                Ok(ev) => ev.deriv,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    vec![f64::NAN; y.len()]
                }
            },
            &x,
            t,
            dt,
        );
        let tk = t0 + k as f64 * dt;
        match step {
            Ok(next) if norm(&next) <= DIVERGENCE_NORM => x = next,
            _ => {
                rec.diverged_at = Some(tk);
                break;
            }
        }
        layout.symmetrize(&mut x);
        if k % every == 0 || k == steps {
            record_step(prep, &layout, &mut rec, tk, &x)?;
        }
    }
    rec.final_state = x;
    Ok(rec)
}

/// Recorded series that tail metrics can be taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Series {
    Error,
    Input,
    Theta,
    EpsStar,
    Eta,
}

impl Series {
    fn rows(self, rec: &RunRecord) -> &[Vec<f64>] {
        match self {
            Series::Error => &rec.e,
            Series::Input => &rec.u,
            Series::Theta => &rec.theta,
            Series::EpsStar => &rec.eps_star,
            Series::Eta => &rec.eta,
        }
    }
}

fn tail_start(times: &[f64], fraction: f64) -> usize {
    let (first, last) = (times[0], times[times.len() - 1]);
    let from = last - fraction * (last - first);
    times.iter().position(|t| *t >= from - 1e-12 * last.abs().max(1.0)).unwrap_or(times.len() - 1)
}

fn check_tail(rec: &RunRecord, fraction: f64) -> Result<(), SimError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(SimError::Invalid(format!("tail fraction must lie in (0, 1], got {fraction}")));
    }
    if let Some(t) = rec.diverged_at {
        return Err(SimError::Diverged { t });
    }
    if rec.is_empty() {
        return Err(SimError::Invalid("empty record".into()));
    }
    Ok(())
}

/// Sup of the Euclidean norm of `series` over the final `fraction` of the run.
pub fn tail_sup(rec: &RunRecord, series: Series, fraction: f64) -> Result<f64, SimError> {
    check_tail(rec, fraction)?;
    Ok(tail_sup_of(&rec.times, series.rows(rec), fraction))
}

/// [`tail_sup`] on bare arrays.
pub fn tail_sup_of(times: &[f64], rows: &[Vec<f64>], fraction: f64) -> f64 {
    let start = tail_start(times, fraction);
    rows[start..].iter().map(|r| norm(r)).fold(0.0, f64::max)
}

/// Componentwise mean of `series` over the final `fraction` of the run.
pub fn tail_mean(rec: &RunRecord, series: Series, fraction: f64) -> Result<Vec<f64>, SimError> {
    check_tail(rec, fraction)?;
    let rows = series.rows(rec);
    let start = tail_start(&rec.times, fraction);
    let n = (rows.len() - start) as f64;
    let width = rows[start].len();
    Ok((0..width).map(|i| rows[start..].iter().map(|r| r[i]).sum::<f64>() / n).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Theorem1Ratio {
    Ratio(f64),
    /// Tail `ε*` below [`ASYMPTOTIC_THRESHOLD`]: the model is exact.
    Asymptotic { tail_eps: f64 },
}

/// `tail_sup|e| / tail_sup|ε*|`.
pub fn theorem1_ratio(rec: &RunRecord, fraction: f64) -> Result<Theorem1Ratio, SimError> {
    let eps = tail_sup(rec, Series::EpsStar, fraction)?;
    if eps < ASYMPTOTIC_THRESHOLD {
        return Ok(Theorem1Ratio::Asymptotic { tail_eps: eps });
    }
    Ok(Theorem1Ratio::Ratio(tail_sup(rec, Series::Error, fraction)? / eps))
}

/// Headline numbers of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub diverged_at: Option<f64>,
    pub tail_e: Option<f64>,
    pub tail_eps: Option<f64>,
    pub theta_tail_mean: Option<Vec<f64>>,
    pub ratio: Option<Theorem1Ratio>,
    pub peak_e: f64,
    pub max_eq8_residual: f64,
    pub min_sigma1_eig: f64,
    pub max_sigma1_asymmetry: f64,
    pub sigma_excursions: usize,
    pub steps_recorded: usize,
    pub dt: f64,
}

pub fn summarize(rec: &RunRecord, fraction: f64) -> RunSummary {
    let fold_max = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(*x));
    let ok = !rec.diverged() && !rec.is_empty();
    RunSummary {
        diverged_at: rec.diverged_at,
        tail_e: ok.then(|| tail_sup(rec, Series::Error, fraction).ok()).flatten(),
        tail_eps: ok.then(|| tail_sup(rec, Series::EpsStar, fraction).ok()).flatten(),
        theta_tail_mean: ok.then(|| tail_mean(rec, Series::Theta, fraction).ok()).flatten(),
        ratio: ok.then(|| theorem1_ratio(rec, fraction).ok()).flatten(),
        peak_e: rec.e.iter().map(|r| norm(r)).fold(0.0, f64::max),
        max_eq8_residual: fold_max(&rec.diagnostics.eq8_residual),
        min_sigma1_eig: rec.diagnostics.sigma1_min_eig.iter().copied().fold(f64::INFINITY, f64::min),
        max_sigma1_asymmetry: fold_max(&rec.diagnostics.sigma1_symmetry),
        sigma_excursions: rec.sigma_excursions(),
        steps_recorded: rec.len(),
        dt: rec.dt,
    }
}

/// Parameter varied by a sweep. Gains go through the tuning schedule, so a
/// larger `g` can lift `κ` and `ℓ`; `λ` and `Γ` are scaled directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    G,
    Kappa,
    Ell,
    Rho,
    Lambda,
    GammaScale,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::G => "g",
            SweepParam::Kappa => "kappa",
            SweepParam::Ell => "ell",
            SweepParam::Rho => "rho",
            SweepParam::Lambda => "lambda",
            SweepParam::GammaScale => "gamma_scale",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "g" => SweepParam::G,
            "kappa" => SweepParam::Kappa,
            "ell" => SweepParam::Ell,
            "rho" => SweepParam::Rho,
            "lambda" => SweepParam::Lambda,
            "gamma_scale" => SweepParam::GammaScale,
            _ => return None,
        })
    }
}

/// Design parameters for one sweep value, `value` being a multiplier of the
/// base setting.
pub fn sweep_params(
    base: &DesignParams,
    param: SweepParam,
    value: f64,
    floors: &ScheduleFloors,
) -> Result<DesignParams, SimError> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(SimError::Invalid(format!("sweep values must be > 0, got {value}")));
    }
    let mut p = base.clone();
    let mut m = Multipliers::default();
    match param {
        SweepParam::G => m.g = value,
        SweepParam::Kappa => m.kappa = value,
        SweepParam::Ell => m.ell = value,
        SweepParam::Rho => m.rho = value,
        SweepParam::Lambda => p.lambda = base.lambda * value,
        SweepParam::GammaScale => p.gamma_scale = base.gamma_scale * value,
    }
    let seed = GainSet { tag: None, ..base.gains.clone() };
    p.gains = tuning_schedule(&seed, &m, floors)?;
    Ok(p)
}

/// One entry of a sweep.
#[derive(Debug, Clone)]
pub struct SweepRun {
    pub value: f64,
    pub params: DesignParams,
    pub record: Result<RunRecord, SimError>,
}

/// Runs one simulation per value, in parallel; output order follows `values`.
pub fn sweep(
    scenario: Arc<dyn Scenario>,
    base: &DesignParams,
    param: SweepParam,
    values: &[f64],
    floors: &ScheduleFloors,
    initial: &InitialSpec,
    opts: &SimOptions,
) -> Result<Vec<SweepRun>, SimError> {
    if values.is_empty() {
        return Err(SimError::Invalid("sweep needs at least one value".into()));
    }
    if values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(SimError::Invalid("sweep values must be strictly increasing".into()));
    }
    let params: Vec<DesignParams> =
        values.iter().map(|v| sweep_params(base, param, *v, floors)).collect::<Result<_, _>>()?;
    let run_one = |p: &DesignParams| -> Result<RunRecord, SimError> {
        let prep = Prepared::new(scenario.clone(), p)?;
        let init = prep.initial(initial)?;
        simulate(&prep, &init, opts)
    };
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(values.len());
    let mut results: Vec<Option<Result<RunRecord, SimError>>> = vec![None; values.len()];
    std::thread::scope(|scope| {
        let chunks: Vec<Vec<usize>> =
            (0..workers).map(|w| (w..values.len()).step_by(workers).collect()).collect();
        let handles: Vec<_> = chunks
            .into_iter()
            .map(|idx| {
                let params = &params;
                let run_one = &run_one;
                scope.spawn(move || idx.into_iter().map(|i| (i, run_one(&params[i]))).collect::<Vec<_>>())
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("sweep worker panicked") {
                results[i] = Some(r);
            }
        }
    });
    Ok(values
        .iter()
        .zip(params)
        .zip(results)
        .map(|((v, p), r)| SweepRun { value: *v, params: p, record: r.expect("every index is run") })
        .collect())
}
