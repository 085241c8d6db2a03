//! Double integrator with a harmonic input disturbance.
//!
//! `χ̇ = ζ`, `ζ̇ = d(w) + u`, `e = χ`. With `θ` frozen the closed loop is
//! linear time-invariant, and the oscillator model of depth 2 contains the
//! true steady-state generator, so exact regulation is attainable.

use std::sync::Arc;

use super::{DesignParams, Jet, Scenario, ScenarioError};
use crate::numerics::DenseMatrix;
use crate::plant::{ChainStructure, PlantModel, PlantState};
use crate::regulator::GainSet;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams {
    pub omega0: f64,
    pub amplitude: f64,
    pub phase: f64,
}

impl Default for LinearParams {
    fn default() -> Self {
        Self { omega0: 1.0, amplitude: 1.0, phase: 0.0 }
    }
}

#[derive(Debug, Clone)]
struct LinearPlant {
    structure: ChainStructure,
    omega0: f64,
}

impl PlantModel for LinearPlant {
    fn structure(&self) -> &ChainStructure {
        &self.structure
    }
    fn nw(&self) -> usize {
        2
    }
    fn exosystem(&self, w: &[f64]) -> Vec<f64> {
        vec![self.omega0 * w[1], -self.omega0 * w[0]]
    }
    fn f0(&self, _x: &PlantState) -> Vec<f64> {
        Vec::new()
    }
    fn b(&self, _x: &PlantState) -> DenseMatrix {
        DenseMatrix::zeros(0, 1)
    }
    fn q(&self, x: &PlantState) -> Vec<f64> {
        vec![x.w[0]]
    }
    fn omega(&self, _x: &PlantState) -> DenseMatrix {
        DenseMatrix::identity(1)
    }
}

#[derive(Debug, Clone)]
pub struct LinearBenchmark {
    params: LinearParams,
    plant: Arc<LinearPlant>,
}

/// The benchmark with disturbance `A sin(ω0 t)`.
pub fn linear_benchmark(omega0: f64, amplitude: f64) -> Result<LinearBenchmark, ScenarioError> {
    if !(omega0 > 0.0) || !omega0.is_finite() {
        return Err(ScenarioError::Invalid(format!("omega0 must be > 0, got {omega0}")));
    }
    if !amplitude.is_finite() {
        return Err(ScenarioError::Invalid("amplitude must be finite".into()));
    }
    let structure = ChainStructure::new(0, 1, vec![1]).expect("fixed structure is valid");
    Ok(LinearBenchmark {
        params: LinearParams { omega0, amplitude, phase: 0.0 },
        plant: Arc::new(LinearPlant { structure, omega0 }),
    })
}

impl LinearBenchmark {
    pub fn with_phase(mut self, phase: f64) -> Self {
        self.params.phase = phase;
        self
    }

    pub fn params(&self) -> &LinearParams {
        &self.params
    }

    /// The parameter that makes `ψ` reproduce `η̇*_2` exactly.
    pub fn theta_true(&self) -> Vec<f64> {
        vec![-self.params.omega0 * self.params.omega0, 0.0]
    }

    fn disturbance(&self, t: f64, order: usize) -> Jet {
        let LinearParams { omega0, amplitude, phase } = self.params;
        Jet::sinusoid(amplitude, omega0, phase, t, order)
    }
}

impl Scenario for LinearBenchmark {
    fn name(&self) -> &'static str {
        "linear"
    }

    fn plant(&self) -> Arc<dyn PlantModel> {
        self.plant.clone()
    }

    fn exosystem_at(&self, t: f64) -> Vec<f64> {
        let LinearParams { omega0, amplitude, phase } = self.params;
        let arg = omega0 * t + phase;
        vec![amplitude * arg.sin(), amplitude * arg.cos()]
    }

    fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.params.omega0
    }

    fn max_frequency(&self) -> f64 {
        self.params.omega0
    }

    fn default_design(&self) -> DesignParams {
        let gains = GainSet::new(5.0, 2.0, 10.0, 10.0).expect("default gains are valid");
        let mut p = DesignParams::with_defaults(gains, 2, &[1]);
        p.sigma_saturation = false;
        p
    }

    fn lmat(&self) -> DenseMatrix {
        DenseMatrix::identity(1)
    }

    /// `Υ = d / (c1 κ ℓ)`, from `u* = −d` and the stabilizer at `χ = ζ = 0`.
    fn upsilon(&self, p: &DesignParams, t: f64, order: usize) -> Vec<Jet> {
        let scale = 1.0 / (p.c[0][0] * p.gains.kappa * p.gains.ell);
        vec![self.disturbance(t, order).scale(scale)]
    }

    fn u_star(&self, t: f64) -> Vec<f64> {
        vec![-self.exosystem_at(t)[0]]
    }

    fn x_star(&self, t: f64) -> PlantState {
        PlantState { w: self.exosystem_at(t), x0: vec![], chi: vec![0.0], zeta: vec![0.0] }
    }

    fn sigma_region(&self, p: &DesignParams) -> f64 {
        self.params.amplitude.abs() * self.params.omega0.max(1.0) / (p.c[0][0] * p.gains.kappa * p.gains.ell)
    }

    fn omega_l_bound(&self) -> f64 {
        1.0
    }
}
