//! Lateral and angular VTOL dynamics under a harmonic lateral wind.
//!
//! Raw model, with `d = w1 / M` and an optional vanishing input `v`:
//!
//! ```text
//! ṗ1 = p2        ṗ2 = d − ϱ tan p3 + v
//! ṗ3 = p4        ṗ4 = B u
//! ```
//!
//! In `χ = (p1, p2, d − ϱ tan p3)`, `ζ = L_s d − ϱ p4 / cos² p3` this is a
//! single chain of length three with
//!
//! ```text
//! Ω = −ϱB (1 + (d − χ3)² / ϱ²)
//! q = L_s² d − 2 (L_s d − ζ)² (d − χ3) / (ϱ² + (d − χ3)²)
//! ```

use std::sync::Arc;

use super::{steady_state, DesignParams, Jet, Scenario, ScenarioError, SteadyStateOracle};
use crate::numerics::DenseMatrix;
use crate::plant::{ChainStructure, PlantModel, PlantState};
use crate::regulator::GainSet;

#[derive(Debug, Clone, PartialEq)]
pub struct VtolParams {
    /// Gravitational acceleration `ϱ`.
    pub varrho: f64,
    /// `B = 2 L_wing / J`.
    pub b: f64,
    pub mass: f64,
    /// Wind force amplitude; `d = (A/M) sin(ω0 t + φ)`.
    pub amplitude: f64,
    pub omega0: f64,
    pub phase: f64,
    /// Scalar `𝓛`, negative.
    pub lscalar: f64,
    /// Initial value of the vertical coupling `v(t) = v0 e^{−a t}`.
    pub v0: f64,
    pub v_decay: f64,
}

impl Default for VtolParams {
    fn default() -> Self {
        Self {
            varrho: 9.81,
            b: 1.0,
            mass: 1.0,
            amplitude: 1.0,
            omega0: 1.0,
            phase: 0.0,
            lscalar: -1.0,
            v0: 0.0,
            v_decay: 1.0,
        }
    }
}

impl VtolParams {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let positive = [("varrho", self.varrho), ("b", self.b), ("mass", self.mass), ("omega0", self.omega0)];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ScenarioError::Invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.lscalar < 0.0) || !self.lscalar.is_finite() {
            return Err(ScenarioError::Invalid(format!("lscalar must be < 0, got {}", self.lscalar)));
        }
        if !self.amplitude.is_finite() || !self.phase.is_finite() || !self.v0.is_finite() {
            return Err(ScenarioError::Invalid("wind and vertical-input parameters must be finite".into()));
        }
        if self.v0 != 0.0 && !(self.v_decay > 0.0) {
            return Err(ScenarioError::Invalid(format!("v_decay must be > 0, got {}", self.v_decay)));
        }
        Ok(())
    }

    fn has_vertical_input(&self) -> bool {
        self.v0 != 0.0
    }

    fn nw(&self) -> usize {
        if self.has_vertical_input() {
            3
        } else {
            2
        }
    }

    /// `(d, L_s d)` at `w`.
    pub fn wind(&self, w: &[f64]) -> (f64, f64) {
        (w[0] / self.mass, self.omega0 * w[1] / self.mass)
    }

    fn vertical(&self, w: &[f64]) -> f64 {
        if self.has_vertical_input() {
            w[2]
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone)]
struct VtolPlant {
    params: VtolParams,
    structure: ChainStructure,
}

impl PlantModel for VtolPlant {
    fn structure(&self) -> &ChainStructure {
        &self.structure
    }

    fn nw(&self) -> usize {
        self.params.nw()
    }

    fn exosystem(&self, w: &[f64]) -> Vec<f64> {
        let om = self.params.omega0;
        let mut s = vec![om * w[1], -om * w[0]];
        if self.params.has_vertical_input() {
            s.push(-self.params.v_decay * w[2]);
        }
        s
    }

    fn f0(&self, _x: &PlantState) -> Vec<f64> {
        Vec::new()
    }

    fn b(&self, _x: &PlantState) -> DenseMatrix {
        DenseMatrix::zeros(0, 1)
    }

    fn q(&self, x: &PlantState) -> Vec<f64> {
        let p = &self.params;
        let (d, lsd) = p.wind(&x.w);
        let lsd2 = -p.omega0 * p.omega0 * d;
        let s = d - x.chi[2];
        let r = lsd - x.zeta[0];
        vec![lsd2 - 2.0 * r * r * s / (p.varrho * p.varrho + s * s)]
    }

    fn omega(&self, x: &PlantState) -> DenseMatrix {
        let p = &self.params;
        let (d, _) = p.wind(&x.w);
        let s = (d - x.chi[2]) / p.varrho;
        DenseMatrix::from_rows(&[&[-p.varrho * p.b * (1.0 + s * s)]])
    }

    fn chain_perturbation(&self, w: &[f64]) -> Option<Vec<f64>> {
        self.params.has_vertical_input().then(|| vec![0.0, self.params.vertical(w), 0.0])
    }
}

pub fn vtol_plant(params: VtolParams) -> Result<Arc<dyn PlantModel>, ScenarioError> {
    params.validate()?;
    Ok(Arc::new(VtolPlant { params, structure: vtol_structure() }))
}

fn vtol_structure() -> ChainStructure {
    ChainStructure::new(0, 1, vec![3]).expect("fixed structure is valid")
}

fn check_attitude(p3: f64) -> Result<(), ScenarioError> {
    if p3.abs() < std::f64::consts::FRAC_PI_2 {
        Ok(())
    } else {
        Err(ScenarioError::SingularAttitude { p3 })
    }
}

/// Raw `(p1, p2, p3, p4)` dynamics.
pub fn vtol_raw_rhs(params: &VtolParams, p: &[f64; 4], w: &[f64], u: f64) -> Result<[f64; 4], ScenarioError> {
    check_attitude(p[2])?;
    let (d, _) = params.wind(w);
    Ok([p[1], d - params.varrho * p[2].tan() + params.vertical(w), p[3], params.b * u])
}

/// `p ↦ (χ, ζ)`.
pub fn vtol_to_transformed(params: &VtolParams, p: &[f64; 4], w: &[f64]) -> Result<([f64; 3], f64), ScenarioError> {
    check_attitude(p[2])?;
    let (d, lsd) = params.wind(w);
    let c = p[2].cos();
    Ok(([p[0], p[1], d - params.varrho * p[2].tan()], lsd - params.varrho * p[3] / (c * c)))
}

/// `(χ, ζ) ↦ p`.
pub fn vtol_from_transformed(params: &VtolParams, chi: &[f64], zeta: f64, w: &[f64]) -> [f64; 4] {
    let (d, lsd) = params.wind(w);
    let p3 = ((d - chi[2]) / params.varrho).atan();
    let c = p3.cos();
    [chi[0], chi[1], p3, (lsd - zeta) * c * c / params.varrho]
}

/// The stabilizer written on measured variables:
/// `u = −𝓛 (c1 ℓ κ³ (p1 + η1) + c2 ℓ κ² p2 − c3 ℓ κ ϱ tan p3 − ℓ ϱ p4 / cos² p3)`.
pub fn vtol_control_law(
    params: &VtolParams,
    p: &[f64; 4],
    eta1: f64,
    kappa: f64,
    ell: f64,
    c: &[f64],
) -> Result<f64, ScenarioError> {
    check_attitude(p[2])?;
    if c.len() != 3 {
        return Err(ScenarioError::Invalid(format!("expected 3 stabilizer coefficients, got {}", c.len())));
    }
    let rho = params.varrho;
    let cos2 = p[2].cos().powi(2);
    let v = c[0] * ell * kappa.powi(3) * (p[0] + eta1) + c[1] * ell * kappa * kappa * p[1]
        - c[2] * ell * kappa * rho * p[2].tan()
        - ell * rho * p[3] / cos2;
    Ok(-params.lscalar * v)
}

#[derive(Debug, Clone)]
pub struct VtolScenario {
    params: VtolParams,
    plant: Arc<VtolPlant>,
}

impl VtolScenario {
    pub fn new(params: VtolParams) -> Result<Self, ScenarioError> {
        params.validate()?;
        let plant = Arc::new(VtolPlant { params: params.clone(), structure: vtol_structure() });
        Ok(Self { params, plant })
    }

    pub fn params(&self) -> &VtolParams {
        &self.params
    }

    /// Jets of `d`, `L_s d`, `L_s² d` along the trajectory.
    fn wind_jets(&self, t: f64, order: usize) -> (Jet, Jet, Jet) {
        let p = &self.params;
        let dj = Jet::sinusoid(p.amplitude / p.mass, p.omega0, p.phase, t, order + 2);
        let d1 = dj.differentiate();
        let d2 = d1.differentiate();
        (dj.truncate(order), d1.truncate(order), d2)
    }

    /// `u*` as a jet: `(ϱ/B) [L_s²d (ϱ² + d²) − 2 d (L_s d)²] / (ϱ² + d²)²`.
    fn u_star_jet(&self, t: f64, order: usize) -> Jet {
        let p = &self.params;
        let (d, ld, l2d) = self.wind_jets(t, order);
        let r2 = p.varrho * p.varrho;
        let den = (&d * &d).add_scalar(r2);
        let num = &(&l2d * &den) - &(&d * &(&ld * &ld)).scale(2.0);
        num.div(&(&den * &den)).scale(p.varrho / p.b)
    }
}

impl Scenario for VtolScenario {
    fn name(&self) -> &'static str {
        "vtol"
    }

    fn plant(&self) -> Arc<dyn PlantModel> {
        self.plant.clone()
    }

    fn exosystem_at(&self, t: f64) -> Vec<f64> {
        let p = &self.params;
        let arg = p.omega0 * t + p.phase;
        let mut w = vec![p.amplitude * arg.sin(), p.amplitude * arg.cos()];
        if p.has_vertical_input() {
            w.push(p.v0 * (-p.v_decay * t).exp());
        }
        w
    }

    fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.params.omega0
    }

    fn max_frequency(&self) -> f64 {
        self.params.omega0
    }

    fn default_design(&self) -> DesignParams {
        let gains = GainSet::new(5.0, 1.25, 6.0, 20.0).expect("default gains are valid");
        DesignParams::with_defaults(gains, 2, &[3])
    }

    fn lmat(&self) -> DenseMatrix {
        DenseMatrix::from_rows(&[&[self.params.lscalar]])
    }

    /// `K_w = ℓ (c3 κ, 1)`.
    fn feedforward_gain(&self, p: &DesignParams) -> Option<DenseMatrix> {
        let (kappa, ell) = (p.gains.kappa, p.gains.ell);
        Some(DenseMatrix::from_rows(&[&[ell * p.c[0][2] * kappa, ell]]))
    }

    /// `ν = (d, L_s d)`.
    fn feedforward_signal(&self, w: &[f64]) -> Option<Vec<f64>> {
        let (d, lsd) = self.params.wind(w);
        Some(vec![d, lsd])
    }

    /// `Υ = c3 d / (c1 κ²) + L_s d / (c1 κ³) − u* / (c1 ℓ 𝓛 κ³)`, the value of
    /// `η1` for which the stabilizer outputs `u*` at `χ = 0`, `ζ = 0`.
    fn upsilon(&self, p: &DesignParams, t: f64, order: usize) -> Vec<Jet> {
        let c = &p.c[0];
        let (kappa, ell) = (p.gains.kappa, p.gains.ell);
        let (d, ld, _) = self.wind_jets(t, order);
        let k3 = c[0] * kappa.powi(3);
        let ups = &(&d.scale(c[2] / (c[0] * kappa * kappa)) + &ld.scale(1.0 / k3))
            - &self.u_star_jet(t, order).scale(1.0 / (ell * self.params.lscalar * k3));
        vec![ups]
    }

    fn u_star(&self, t: f64) -> Vec<f64> {
        vec![self.u_star_jet(t, 0).value()]
    }

    fn x_star(&self, t: f64) -> PlantState {
        PlantState { w: self.exosystem_at(t), x0: vec![], chi: vec![0.0; 3], zeta: vec![0.0] }
    }

    fn sigma_region(&self, p: &DesignParams) -> f64 {
        let c = &p.c[0];
        let wind = self.params.amplitude.abs() / self.params.mass * self.params.omega0.max(1.0);
        wind * c[2] / (c[0] * p.gains.kappa * p.gains.kappa)
    }

    fn omega_l_bound(&self) -> f64 {
        let p = &self.params;
        let s = p.amplitude / p.mass / p.varrho;
        p.varrho * p.b * (1.0 + s * s) * p.lscalar.abs()
    }
}

/// Ideal steady state of the VTOL loop for one design.
pub fn vtol_steady_state(params: VtolParams, design: &DesignParams) -> Result<SteadyStateOracle, ScenarioError> {
    steady_state(Arc::new(VtolScenario::new(params)?), design)
}
