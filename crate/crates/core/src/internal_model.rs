//! Internal-model unit `η̇ = Φ(η, θ) + G e` and the prediction models `ψ`
//! it embeds.
//!
//! `η = (η_1, …, η_d)` with each `η_i ∈ R^ne`, stored contiguously so that
//! entry `j` of block `i` lives at index `i·ne + j`.

use std::sync::Arc;

use thiserror::Error;

use crate::numerics::{norm, DenseMatrix, Polynomial};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    Shape(String),
    #[error("s^d + h_1 s^(d-1) + ... + h_d is not Hurwitz for h = {0:?}")]
    NotHurwitz(Vec<f64>),
    #[error("invalid parameter: {0}")]
    Invalid(String),
}

/// Component-wise smooth saturation at `level`.
///
/// The map is the identity on `|s| ≤ a` with `a = linear_fraction · level`
/// and bends into `a + (level − a)·tanh((|s| − a)/(level − a))` beyond it.
/// With `linear_fraction = 0` this is `level·tanh(s/level)`. The map is
/// 1-Lipschitz and has a continuous, locally Lipschitz derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Saturation {
    level: f64,
    linear_fraction: f64,
}

impl Saturation {
    pub fn none() -> Self {
        Self { level: f64::INFINITY, linear_fraction: 0.0 }
    }

    pub fn tanh(level: f64) -> Result<Self, ModelError> {
        Self::with_linear_core(level, 0.0)
    }

    pub fn with_linear_core(level: f64, linear_fraction: f64) -> Result<Self, ModelError> {
        if !(level > 0.0) {
            return Err(ModelError::Invalid(format!("saturation level must be > 0, got {level}")));
        }
        if !(0.0..1.0).contains(&linear_fraction) {
            return Err(ModelError::Invalid(format!(
                "linear fraction must lie in [0, 1), got {linear_fraction}"
            )));
        }
        Ok(Self { level, linear_fraction })
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn linear_fraction(&self) -> f64 {
        self.linear_fraction
    }

    pub fn is_active(&self) -> bool {
        self.level.is_finite()
    }

    pub fn apply(&self, s: f64) -> f64 {
        if !self.is_active() {
            return s;
        }
        let knee = self.linear_fraction * self.level;
        let a = s.abs();
        if a <= knee {
            return s;
        }
        let span = self.level - knee;
        s.signum() * (knee + span * ((a - knee) / span).tanh())
    }

    pub fn derivative(&self, s: f64) -> f64 {
        if !self.is_active() {
            return 1.0;
        }
        let knee = self.linear_fraction * self.level;
        let a = s.abs();
        if a <= knee {
            return 1.0;
        }
        let c = ((a - knee) / (self.level - knee)).cosh();
        1.0 / (c * c)
    }
}

/// Per-channel regressor `σ^j : R^{d·ne} → R^p` of a linear-in-parameter
/// model.
pub trait Regressor: Send + Sync {
    /// Regressor length `p`, shared by all channels.
    fn dim(&self) -> usize;
    fn eval(&self, channel: usize, eta: &[f64]) -> Vec<f64>;
    /// `p × (d·ne)` Jacobian.
    fn jacobian(&self, channel: usize, eta: &[f64]) -> DenseMatrix;
    /// Global Lipschitz constant of every channel's map.
    fn lipschitz(&self) -> f64;
}

/// `σ^j(η) = (η_{1,j}, …, η_{d,j})`: each channel regresses on its own chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainRegressor {
    d: usize,
    ne: usize,
}

impl ChainRegressor {
    pub fn new(d: usize, ne: usize) -> Self {
        Self { d, ne }
    }
}

impl Regressor for ChainRegressor {
    fn dim(&self) -> usize {
        self.d
    }

    fn eval(&self, channel: usize, eta: &[f64]) -> Vec<f64> {
        (0..self.d).map(|i| eta[i * self.ne + channel]).collect()
    }

    fn jacobian(&self, channel: usize, _eta: &[f64]) -> DenseMatrix {
        let mut j = DenseMatrix::zeros(self.d, self.d * self.ne);
        for i in 0..self.d {
            j[(i, i * self.ne + channel)] = 1.0;
        }
        j
    }

    fn lipschitz(&self) -> f64 {
        1.0
    }
}

type RegressorFn = dyn Fn(usize, &[f64]) -> Vec<f64> + Send + Sync;
type RegressorJacFn = dyn Fn(usize, &[f64]) -> DenseMatrix + Send + Sync;

/// Regressor built from user closures.
pub struct FnRegressor {
    dim: usize,
    lipschitz: f64,
    eval: Box<RegressorFn>,
    jacobian: Box<RegressorJacFn>,
}

impl FnRegressor {
    pub fn new<E, J>(dim: usize, lipschitz: f64, eval: E, jacobian: J) -> Self
    where
        E: Fn(usize, &[f64]) -> Vec<f64> + Send + Sync + 'static,
        J: Fn(usize, &[f64]) -> DenseMatrix + Send + Sync + 'static,
    {
        Self { dim, lipschitz, eval: Box::new(eval), jacobian: Box::new(jacobian) }
    }
}

impl Regressor for FnRegressor {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, channel: usize, eta: &[f64]) -> Vec<f64> {
        (self.eval)(channel, eta)
    }
    fn jacobian(&self, channel: usize, eta: &[f64]) -> DenseMatrix {
        (self.jacobian)(channel, eta)
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

/// A prediction model `ψ(η, θ)` with its Jacobians.
pub trait PredictionModel: Send + Sync {
    fn ne(&self) -> usize;
    fn eta_dim(&self) -> usize;
    fn ntheta(&self) -> usize;
    fn value(&self, eta: &[f64], theta: &[f64]) -> Vec<f64>;
    /// `ne × (d·ne)`.
    fn jacobian_eta(&self, eta: &[f64], theta: &[f64]) -> DenseMatrix;
    /// `ne × nθ`.
    fn jacobian_theta(&self, eta: &[f64], theta: &[f64]) -> DenseMatrix;
}

/// `ψ_j(η, θ) = θ_jᵀ sat(σ^j(η))`, one parameter block per error channel.
#[derive(Clone)]
pub struct LinearModel {
    regressor: Arc<dyn Regressor>,
    d: usize,
    ne: usize,
    saturation: Saturation,
}

impl std::fmt::Debug for LinearModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinearModel")
            .field("d", &self.d)
            .field("ne", &self.ne)
            .field("p", &self.regressor.dim())
            .field("saturation", &self.saturation)
            .finish()
    }
}

impl LinearModel {
    pub fn new(regressor: Arc<dyn Regressor>, d: usize, ne: usize, saturation: Saturation) -> Self {
        Self { regressor, d, ne, saturation }
    }

    /// The oscillator model set: chain regressor, `ψ_j = θ_jᵀ (η_{1,j}, …, η_{d,j})`.
    pub fn chain(d: usize, ne: usize, saturation: Saturation) -> Self {
        Self::new(Arc::new(ChainRegressor::new(d, ne)), d, ne, saturation)
    }

    pub fn channel_dim(&self) -> usize {
        self.regressor.dim()
    }

    pub fn saturation(&self) -> Saturation {
        self.saturation
    }

    pub fn regressor(&self) -> &Arc<dyn Regressor> {
        &self.regressor
    }

    /// Saturated regressor of one channel.
    pub fn sigma(&self, channel: usize, eta: &[f64]) -> Vec<f64> {
        self.regressor.eval(channel, eta).into_iter().map(|s| self.saturation.apply(s)).collect()
    }

    /// Jacobian of the saturated regressor of one channel.
    pub fn sigma_jacobian(&self, channel: usize, eta: &[f64]) -> DenseMatrix {
        let raw = self.regressor.eval(channel, eta);
        let mut jac = self.regressor.jacobian(channel, eta);
        for (i, s) in raw.iter().enumerate() {
            let ds = self.saturation.derivative(*s);
            for k in 0..jac.cols() {
                jac[(i, k)] *= ds;
            }
        }
        jac
    }

    fn theta_block<'a>(&self, theta: &'a [f64], channel: usize) -> &'a [f64] {
        let p = self.channel_dim();
        &theta[channel * p..(channel + 1) * p]
    }

    /// Lipschitz constant in `η` for fixed `θ`: `max_j |θ_j| · L_σ`, since the
    /// saturation is 1-Lipschitz. Independent of every high gain.
    pub fn lipschitz_bound(&self, theta: &[f64]) -> f64 {
        (0..self.ne).map(|j| norm(self.theta_block(theta, j))).fold(0.0, f64::max)
            * self.regressor.lipschitz()
    }
}

impl PredictionModel for LinearModel {
    fn ne(&self) -> usize {
        self.ne
    }

    fn eta_dim(&self) -> usize {
        self.d * self.ne
    }

    fn ntheta(&self) -> usize {
        self.ne * self.channel_dim()
    }

    fn value(&self, eta: &[f64], theta: &[f64]) -> Vec<f64> {
        (0..self.ne)
            .map(|j| {
                let s = self.sigma(j, eta);
                self.theta_block(theta, j).iter().zip(&s).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    fn jacobian_eta(&self, eta: &[f64], theta: &[f64]) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.ne, self.eta_dim());
        for j in 0..self.ne {
            let th = self.theta_block(theta, j);
            let js = self.sigma_jacobian(j, eta);
            for k in 0..self.eta_dim() {
                out[(j, k)] = (0..th.len()).map(|i| th[i] * js[(i, k)]).sum();
            }
        }
        out
    }

    fn jacobian_theta(&self, eta: &[f64], _theta: &[f64]) -> DenseMatrix {
        let p = self.channel_dim();
        let mut out = DenseMatrix::zeros(self.ne, self.ntheta());
        for j in 0..self.ne {
            for (i, s) in self.sigma(j, eta).into_iter().enumerate() {
                out[(j, j * p + i)] = s;
            }
        }
        out
    }
}

/// Depth, high gain and Hurwitz coefficients of the internal model.
#[derive(Debug, Clone, PartialEq)]
pub struct InternalModelConfig {
    d: usize,
    ne: usize,
    g: f64,
    h: Vec<f64>,
}

impl InternalModelConfig {
    pub fn new(d: usize, ne: usize, g: f64, h: Vec<f64>) -> Result<Self, ModelError> {
        if d == 0 || ne == 0 {
            return Err(ModelError::Invalid("d and ne must be positive".into()));
        }
        if h.len() != d {
            return Err(ModelError::Shape(format!("{} coefficients h for d = {d}", h.len())));
        }
        if !(g > 0.0) || !g.is_finite() {
            return Err(ModelError::Invalid(format!("g must be > 0, got {g}")));
        }
        let poly = Polynomial::from_descending(&h).map_err(|e| ModelError::Invalid(e.to_string()))?;
        if !poly.is_hurwitz() {
            return Err(ModelError::NotHurwitz(h));
        }
        Ok(Self { d, ne, g, h })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn ne(&self) -> usize {
        self.ne
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    /// `g^i h_i` for `i = 1..=d`.
    pub fn injection_gains(&self) -> Vec<f64> {
        self.h.iter().enumerate().map(|(i, hi)| self.g.powi(i as i32 + 1) * hi).collect()
    }

    /// `h_d g^d`, the inverse of the prediction-to-error gain.
    pub fn error_gain(&self) -> f64 {
        self.h[self.d - 1] * self.g.powi(self.d as i32)
    }
}

/// Derivative of `η` together with the `ψ(η, θ)` value it used.
pub(crate) fn internal_model_rhs_with_psi(
    cfg: &InternalModelConfig,
    model: &dyn PredictionModel,
    eta: &[f64],
    theta: &[f64],
    e: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
    let (d, ne) = (cfg.d, cfg.ne);
    if eta.len() != d * ne {
        return Err(ModelError::Shape(format!("eta has length {}, expected {}", eta.len(), d * ne)));
    }
    if e.len() != ne {
        return Err(ModelError::Shape(format!("e has length {}, expected {ne}", e.len())));
    }
    if model.ne() != ne || model.eta_dim() != d * ne {
        return Err(ModelError::Shape("prediction model dimensions disagree with the config".into()));
    }
    if theta.len() != model.ntheta() {
        return Err(ModelError::Shape(format!(
            "theta has length {}, expected {}",
            theta.len(),
            model.ntheta()
        )));
    }
    let psi = model.value(eta, theta);
    let gains = cfg.injection_gains();
    let mut out = vec![0.0; d * ne];
    for i in 0..d {
        for j in 0..ne {
            let drift = if i + 1 < d { eta[(i + 1) * ne + j] } else { psi[j] };
            out[i * ne + j] = drift + gains[i] * e[j];
        }
    }
    Ok((out, psi))
}

/// `η̇_i = η_{i+1} + g^i h_i e` for `i < d` and `η̇_d = ψ(η, θ) + g^d h_d e`.
pub fn internal_model_rhs(
    cfg: &InternalModelConfig,
    model: &dyn PredictionModel,
    eta: &[f64],
    theta: &[f64],
    e: &[f64],
) -> Result<Vec<f64>, ModelError> {
    internal_model_rhs_with_psi(cfg, model, eta, theta, e).map(|(d, _)| d)
}

/// The instantaneous prediction residual `η̇_d − ψ(η, θ) = h_d g^d e`.
pub fn prediction_error_from_error(cfg: &InternalModelConfig, e: &[f64]) -> Vec<f64> {
    let k = cfg.error_gain();
    e.iter().map(|v| k * v).collect()
}
