//! Concrete regulation problems and their ideal steady states.
//!
//! A [`Scenario`] supplies the plant, the exosystem trajectory in closed form,
//! the stabilizer structure and the Taylor jet of `Υ(t)`. Everything else
//! (the regulator design, `η*`, `ε*`) is assembled generically here.

pub mod jet;
pub mod linear;
pub mod vtol;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::identifier::{IdentifierError, LsIdentifierConfig};
use crate::internal_model::{InternalModelConfig, LinearModel, ModelError, PredictionModel, Saturation};
use crate::numerics::{binomial_descending, DenseMatrix};
use crate::plant::{PlantModel, PlantState};
use crate::regulator::{GainSet, RegulatorDesign, RegulatorError, StabilizerConfig};

pub use jet::Jet;
pub use linear::{linear_benchmark, LinearBenchmark, LinearParams};
pub use vtol::{
    vtol_control_law, vtol_from_transformed, vtol_plant, vtol_raw_rhs, vtol_steady_state, vtol_to_transformed,
    VtolParams, VtolScenario,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("invalid scenario parameters: {0}")]
    Invalid(String),
    #[error("attitude |p3| = {p3} is outside (-pi/2, pi/2)")]
    SingularAttitude { p3: f64 },
    #[error(transparent)]
    Regulator(#[from] RegulatorError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Identifier(#[from] IdentifierError),
}

/// Fraction of the `σ` saturation level over which the map is the identity.
pub const SIGMA_LINEAR_FRACTION: f64 = 0.6;

/// Design choices that are not high gains.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignParams {
    pub gains: GainSet,
    /// Internal-model depth.
    pub d: usize,
    /// `h_1, …, h_d` of `sᵈ + h_1 sᵈ⁻¹ + … + h_d`.
    pub h: Vec<f64>,
    /// Stabilizer coefficients per chain, constant term first.
    pub c: Vec<Vec<f64>>,
    pub lambda: f64,
    /// `Γ = gamma_scale · I`.
    pub gamma_scale: f64,
    pub m1: f64,
    pub m2: f64,
    /// Whether the regressor is saturated at all.
    pub sigma_saturation: bool,
}

impl DesignParams {
    /// Binomial `h` and `c`, `λ = 0.3`, `Γ = 1e-4 I`, `m1 = m2 = 1`.
    pub fn with_defaults(gains: GainSet, d: usize, chain_lengths: &[usize]) -> Self {
        Self {
            gains,
            d,
            h: binomial_descending(d),
            c: chain_lengths.iter().map(|&n| binomial_descending(n).into_iter().rev().collect()).collect(),
            lambda: 0.3,
            gamma_scale: 1e-4,
            m1: 1.0,
            m2: 1.0,
            sigma_saturation: true,
        }
    }
}

/// A closed-loop regulation problem.
pub trait Scenario: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    fn plant(&self) -> Arc<dyn PlantModel>;
    /// `w(t)` along the exosystem trajectory the scenario is run on.
    fn exosystem_at(&self, t: f64) -> Vec<f64>;
    /// Disturbance period (the slowest one, if several).
    fn period(&self) -> f64;
    /// Highest disturbance frequency.
    fn max_frequency(&self) -> f64;
    fn default_design(&self) -> DesignParams;
    /// Input mixing matrix `𝓛`.
    fn lmat(&self) -> DenseMatrix;
    /// Feedforward gain `K_w`, if the stabilizer uses one.
    fn feedforward_gain(&self, _p: &DesignParams) -> Option<DenseMatrix> {
        None
    }
    /// Feedforward signal `ν(w)`.
    fn feedforward_signal(&self, _w: &[f64]) -> Option<Vec<f64>> {
        None
    }
    /// Per-channel jet of `Υ(t)` of the given order.
    fn upsilon(&self, p: &DesignParams, t: f64, order: usize) -> Vec<Jet>;
    fn u_star(&self, t: f64) -> Vec<f64>;
    fn x_star(&self, t: f64) -> PlantState;
    /// Half-width of the region the regressor must reproduce exactly.
    fn sigma_region(&self, p: &DesignParams) -> f64;
    /// Bound on `|Ω 𝓛|` near the steady state, for step-size selection.
    fn omega_l_bound(&self) -> f64;
}

/// Ideal steady-state signals of one design.
#[derive(Clone)]
pub struct SteadyStateOracle {
    scenario: Arc<dyn Scenario>,
    params: DesignParams,
    model: LinearModel,
}

impl fmt::Debug for SteadyStateOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SteadyStateOracle").field("scenario", &self.scenario.name()).field("d", &self.params.d).finish()
    }
}

impl SteadyStateOracle {
    pub fn new(scenario: Arc<dyn Scenario>, params: DesignParams, model: LinearModel) -> Self {
        Self { scenario, params, model }
    }

    pub fn model(&self) -> &LinearModel {
        &self.model
    }

    fn lie_chain(&self, t: f64) -> Vec<Vec<f64>> {
        self.scenario.upsilon(&self.params, t, self.params.d).iter().map(Jet::derivatives).collect()
    }

    /// `η*(t)`, laid out `i·ne + j` like the internal-model state.
    pub fn eta_star(&self, t: f64) -> Vec<f64> {
        let chain = self.lie_chain(t);
        let ne = chain.len();
        let mut out = vec![0.0; self.params.d * ne];
        for (j, derivs) in chain.iter().enumerate() {
            for i in 0..self.params.d {
                out[i * ne + j] = derivs[i];
            }
        }
        out
    }

    pub fn etad_dot_star(&self, t: f64) -> Vec<f64> {
        self.lie_chain(t).iter().map(|derivs| derivs[self.params.d]).collect()
    }

    pub fn u_star(&self, t: f64) -> Vec<f64> {
        self.scenario.u_star(t)
    }

    pub fn x_star(&self, t: f64) -> PlantState {
        self.scenario.x_star(t)
    }

    /// `ε*(t, θ) = η̇*_d(t) − ψ(η*(t), θ)`.
    pub fn epsilon_star(&self, t: f64, theta: &[f64]) -> Vec<f64> {
        let eta = self.eta_star(t);
        let psi = self.model.value(&eta, theta);
        self.etad_dot_star(t).iter().zip(psi).map(|(a, b)| a - b).collect()
    }

    /// Largest `|η̇*_d|` component over one period, on a 2000-point grid.
    pub fn etad_dot_sup(&self) -> f64 {
        let period = self.scenario.period();
        (0..2000)
            .map(|k| self.etad_dot_star(period * k as f64 / 2000.0).iter().fold(0.0f64, |m, v| m.max(v.abs())))
            .fold(0.0, f64::max)
    }
}

/// Prediction model of a design: the oscillator model set of depth `d`.
pub fn design_model(scenario: &dyn Scenario, p: &DesignParams) -> Result<LinearModel, ScenarioError> {
    let ne = scenario.plant().structure().ne();
    let sat = if p.sigma_saturation {
        let region = scenario.sigma_region(p);
        if region > 0.0 {
            Saturation::with_linear_core(2.0 * region, SIGMA_LINEAR_FRACTION)?
        } else {
            Saturation::none()
        }
    } else {
        Saturation::none()
    };
    Ok(LinearModel::chain(p.d, ne, sat))
}

pub fn steady_state(scenario: Arc<dyn Scenario>, p: &DesignParams) -> Result<SteadyStateOracle, ScenarioError> {
    let model = design_model(scenario.as_ref(), p)?;
    Ok(SteadyStateOracle::new(scenario, p.clone(), model))
}

/// Saturation of `ψ̇`: level `2 · max(1, ω_max) · sup|η̇*_d|`, identity over
/// the same fraction as the regressor's.
pub fn psidot_saturation(scenario: &dyn Scenario, oracle: &SteadyStateOracle) -> Result<Saturation, ScenarioError> {
    let sup = oracle.etad_dot_sup();
    if sup > 0.0 {
        let level = 2.0 * scenario.max_frequency().max(1.0) * sup;
        Ok(Saturation::with_linear_core(level, SIGMA_LINEAR_FRACTION)?)
    } else {
        Ok(Saturation::none())
    }
}

/// Assembles the regulator for a scenario and design choice.
pub fn build_design(scenario: Arc<dyn Scenario>, p: &DesignParams) -> Result<RegulatorDesign, ScenarioError> {
    p.gains.validate()?;
    let plant = scenario.plant();
    let structure = plant.structure().clone();
    let oracle = steady_state(scenario.clone(), p)?;
    let model = oracle.model().clone();
    let im = InternalModelConfig::new(p.d, structure.ne(), p.gains.g, p.h.clone())?;
    if !(p.gamma_scale > 0.0) {
        return Err(ScenarioError::Invalid(format!("gamma_scale must be > 0, got {}", p.gamma_scale)));
    }
    let pdim = model.channel_dim();
    let id = LsIdentifierConfig::new(
        pdim,
        p.lambda,
        DenseMatrix::identity(pdim).scale(p.gamma_scale),
        p.m1,
        p.m2,
        p.gains.rho,
        psidot_saturation(scenario.as_ref(), &oracle)?,
    )?;
    let stab = StabilizerConfig::new(
        &structure,
        p.gains.kappa,
        p.gains.ell,
        p.c.clone(),
        scenario.lmat(),
        scenario.feedforward_gain(p),
    )?;
    Ok(RegulatorDesign::new(structure, im, model, id, stab)?)
}

/// Scenario selection as written in a configuration file.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioSpec {
    Vtol(VtolParams),
    Linear(LinearParams),
}

impl ScenarioSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioSpec::Vtol(_) => "vtol",
            ScenarioSpec::Linear(_) => "linear",
        }
    }

    pub fn build(&self) -> Result<Arc<dyn Scenario>, ScenarioError> {
        Ok(match self {
            ScenarioSpec::Vtol(p) => Arc::new(VtolScenario::new(p.clone())?),
            ScenarioSpec::Linear(p) => Arc::new(linear_benchmark(p.omega0, p.amplitude)?.with_phase(p.phase)),
        })
    }
}
