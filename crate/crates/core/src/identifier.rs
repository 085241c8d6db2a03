//! Continuous-time least-squares identifier with forgetting and a
//! high-gain derivative observer.
//!
//! Per error channel the identifier integrates
//!
//! ```text
//! ς̇1 = −λ ς1 + λ σ(η) σ(η)ᵀ
//! ς̇2 = −λ ς2 + λ σ(η) ξ2
//! θ  = (ς1 + Γ)⁻¹ ς2
//! ```
//!
//! while `(ξ1, ξ2)` tracks `(η_d, η̇_d)`. The oracles at the bottom of this
//! module evaluate the weighted least-squares cost and its ideal steady
//! state directly by quadrature, independently of the flow.

use thiserror::Error;

use crate::internal_model::{LinearModel, PredictionModel, Saturation};
use crate::numerics::{dot, min_symmetric_eigenvalue, solve_spd, trapezoid_integral, DenseMatrix, NumericsError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IdentifierError {
    #[error("invalid identifier configuration: {0}")]
    Config(String),
    #[error("identifier state is corrupted: {0}")]
    CorruptedState(String),
    #[error("dimension mismatch: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsIdentifierConfig {
    p: usize,
    lambda: f64,
    gamma: DenseMatrix,
    gamma_min_eig: f64,
    m1: f64,
    m2: f64,
    rho: f64,
    psidot_saturation: Saturation,
}

impl LsIdentifierConfig {
    /// `p` is the per-channel parameter count. `λ = 0` freezes the
    /// least-squares flow.
    pub fn new(
        p: usize,
        lambda: f64,
        gamma: DenseMatrix,
        m1: f64,
        m2: f64,
        rho: f64,
        psidot_saturation: Saturation,
    ) -> Result<Self, IdentifierError> {
        if p == 0 {
            return Err(IdentifierError::Config("parameter dimension must be positive".into()));
        }
        if (gamma.rows(), gamma.cols()) != (p, p) {
            return Err(IdentifierError::Config(format!(
                "Gamma is {}x{}, expected {p}x{p}",
                gamma.rows(),
                gamma.cols()
            )));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(IdentifierError::Config(format!("lambda must be >= 0, got {lambda}")));
        }
        for (name, v) in [("m1", m1), ("m2", m2), ("rho", rho)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(IdentifierError::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        gamma
            .cholesky()
            .map_err(|e| IdentifierError::Config(format!("Gamma must be symmetric positive definite: {e}")))?;
        let gamma_min_eig = min_symmetric_eigenvalue(&gamma);
        Ok(Self { p, lambda, gamma, gamma_min_eig, m1, m2, rho, psidot_saturation })
    }

    pub fn p(&self) -> usize {
        self.p
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn gamma(&self) -> &DenseMatrix {
        &self.gamma
    }
    /// Smallest eigenvalue of Γ; `(ς1 + Γ)⁻¹` has singular values at most its inverse.
    pub fn gamma_min_eig(&self) -> f64 {
        self.gamma_min_eig
    }
    pub fn m1(&self) -> f64 {
        self.m1
    }
    pub fn m2(&self) -> f64 {
        self.m2
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn psidot_saturation(&self) -> Saturation {
        self.psidot_saturation
    }

    pub fn saturate_psidot(&self, v: &[f64]) -> Vec<f64> {
        v.iter().map(|x| self.psidot_saturation.apply(*x)).collect()
    }
}

/// Least-squares state `(ς1, ς2)` of one error channel.
#[derive(Debug, Clone, PartialEq)]
pub struct LsState {
    pub s1: DenseMatrix,
    pub s2: Vec<f64>,
}

impl LsState {
    pub fn zeros(p: usize) -> Self {
        Self { s1: DenseMatrix::zeros(p, p), s2: vec![0.0; p] }
    }

    /// `|ς1|_F + |ς2|`.
    pub fn norm(&self) -> f64 {
        self.s1.frobenius_norm() + dot(&self.s2, &self.s2).sqrt()
    }

    pub fn sub(&self, other: &LsState) -> LsState {
        LsState {
            s1: self.s1.sub(&other.s1),
            s2: self.s2.iter().zip(&other.s2).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Identifier state: one least-squares block per channel plus the observer.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentifierState {
    pub ls: Vec<LsState>,
    pub xi1: Vec<f64>,
    pub xi2: Vec<f64>,
}

impl IdentifierState {
    pub fn zeros(ne: usize, p: usize) -> Self {
        Self { ls: vec![LsState::zeros(p); ne], xi1: vec![0.0; ne], xi2: vec![0.0; ne] }
    }

    pub fn sigma_norm(&self) -> f64 {
        self.ls.iter().map(LsState::norm).sum()
    }
}

/// Right-hand side of the least-squares flow for one channel.
pub fn ls_flow(cfg: &LsIdentifierConfig, s1: &DenseMatrix, s2: &[f64], sigma: &[f64], xi2: f64) -> (DenseMatrix, Vec<f64>) {
    let p = sigma.len();
    let lambda = cfg.lambda;
    let mut d1 = DenseMatrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            d1[(i, j)] = -lambda * s1[(i, j)] + lambda * sigma[i] * sigma[j];
        }
    }
    let d2 = (0..p).map(|i| -lambda * s2[i] + lambda * sigma[i] * xi2).collect();
    (d1, d2)
}

fn regularized(cfg: &LsIdentifierConfig, s1: &DenseMatrix) -> Result<DenseMatrix, IdentifierError> {
    if (s1.rows(), s1.cols()) != (cfg.p, cfg.p) {
        return Err(IdentifierError::Shape(format!("sigma1 is {}x{}, expected {p}x{p}", s1.rows(), s1.cols(), p = cfg.p)));
    }
    Ok(s1.add(&cfg.gamma))
}

fn solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>, IdentifierError> {
    solve_spd(a, b).map_err(|e| match e {
        NumericsError::NotPositiveDefinite { .. } => {
            IdentifierError::CorruptedState(format!("sigma1 + Gamma is not positive definite ({e})"))
        }
        other => IdentifierError::CorruptedState(other.to_string()),
    })
}

/// `θ = (ς1 + Γ)⁻¹ ς2`.
pub fn ls_output(cfg: &LsIdentifierConfig, s1: &DenseMatrix, s2: &[f64]) -> Result<Vec<f64>, IdentifierError> {
    let a = regularized(cfg, s1)?;
    solve(&a, s2)
}

/// Exact derivative of `θ = (ς1 + Γ)⁻¹ ς2` along the flow:
/// `λ (ς1 + Γ)⁻¹ (σ ξ2 − σ σᵀ θ − ς2 + ς1 θ)`.
pub fn theta_dot(
    cfg: &LsIdentifierConfig,
    s1: &DenseMatrix,
    s2: &[f64],
    sigma: &[f64],
    xi2: f64,
    theta: &[f64],
) -> Result<Vec<f64>, IdentifierError> {
    if cfg.lambda == 0.0 {
        return Ok(vec![0.0; theta.len()]);
    }
    let a = regularized(cfg, s1)?;
    let st = dot(sigma, theta);
    let s1t = s1.mul_vec(theta);
    let rhs: Vec<f64> = (0..theta.len())
        .map(|i| cfg.lambda * (sigma[i] * xi2 - sigma[i] * st - s2[i] + s1t[i]))
        .collect();
    solve(&a, &rhs)
}

/// Derivative observer: `ξ̇1 = ξ2 − m1 ρ (ξ1 − η_d)`, `ξ̇2 = ψ̇ − m2 ρ² (ξ1 − η_d)`.
pub fn observer_rhs(
    cfg: &LsIdentifierConfig,
    xi1: &[f64],
    xi2: &[f64],
    eta_d: &[f64],
    psidot: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let (k1, k2) = (cfg.m1 * cfg.rho, cfg.m2 * cfg.rho * cfg.rho);
    let n = xi1.len();
    let d1 = (0..n).map(|i| xi2[i] - k1 * (xi1[i] - eta_d[i])).collect();
    let d2 = (0..n).map(|i| psidot[i] - k2 * (xi1[i] - eta_d[i])).collect();
    (d1, d2)
}

/// `Φ(η, θ) = (η_2, …, η_d, ψ(η, θ))`.
pub fn drift(model: &dyn PredictionModel, eta: &[f64], theta: &[f64]) -> Vec<f64> {
    let ne = model.ne();
    let mut phi = eta[ne..].to_vec();
    phi.extend(model.value(eta, theta));
    phi
}

/// `Dψ(η, θ) · col(Φ(η, θ), θ̇)` before saturation.
pub fn psidot_unsaturated(model: &dyn PredictionModel, eta: &[f64], theta: &[f64], theta_dot: &[f64]) -> Vec<f64> {
    let phi = drift(model, eta, theta);
    let a = model.jacobian_eta(eta, theta).mul_vec(&phi);
    let b = model.jacobian_theta(eta, theta).mul_vec(theta_dot);
    a.iter().zip(&b).map(|(x, y)| x + y).collect()
}

/// Stacked `θ̇` over all channels.
pub fn theta_dot_all(
    cfg: &LsIdentifierConfig,
    model: &LinearModel,
    ls: &[LsState],
    xi2: &[f64],
    eta: &[f64],
    theta: &[f64],
) -> Result<Vec<f64>, IdentifierError> {
    let p = cfg.p;
    let mut out = Vec::with_capacity(theta.len());
    for (j, st) in ls.iter().enumerate() {
        let sigma = model.sigma(j, eta);
        out.extend(theta_dot(cfg, &st.s1, &st.s2, &sigma, xi2[j], &theta[j * p..(j + 1) * p])?);
    }
    Ok(out)
}

/// Saturated model derivative fed to the observer.
pub fn psidot_saturated(
    model: &LinearModel,
    cfg: &LsIdentifierConfig,
    xi2: &[f64],
    eta: &[f64],
    ls: &[LsState],
    theta: &[f64],
) -> Result<Vec<f64>, IdentifierError> {
    if ls.len() != model.ne() || xi2.len() != model.ne() {
        return Err(IdentifierError::Shape("one least-squares block and one xi2 entry per channel".into()));
    }
    let td = theta_dot_all(cfg, model, ls, xi2, eta, theta)?;
    Ok(cfg.saturate_psidot(&psidot_unsaturated(model, eta, theta, &td)))
}

/// Uniformly sampled ideal signals `(η̇*_d, η*)` starting at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledHistory {
    pub dt: f64,
    pub etad_dot: Vec<Vec<f64>>,
    pub eta: Vec<Vec<f64>>,
}

impl SampledHistory {
    pub fn from_fn<F>(t_end: f64, dt: f64, mut signal: F) -> Self
    where
        F: FnMut(f64) -> (Vec<f64>, Vec<f64>),
    {
        let n = (t_end / dt).round() as usize;
        let mut etad_dot = Vec::with_capacity(n + 1);
        let mut eta = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let (a, b) = signal(k as f64 * dt);
            etad_dot.push(a);
            eta.push(b);
        }
        Self { dt, etad_dot, eta }
    }

    /// Number of samples covering `[0, t]`.
    fn samples_until(&self, t: f64) -> usize {
        let n = (t / self.dt).round() as usize + 1;
        n.min(self.eta.len())
    }
}

/// Weighted least-squares cost
/// `λ ∫₀ᵗ e^{−λ(t−s)} |η̇*_d(s) − ψ(η*(s), θ)|² ds + Σ_j θ_jᵀ Γ θ_j`
/// by trapezoid quadrature.
pub fn cost_functional_oracle(
    history: &SampledHistory,
    model: &dyn PredictionModel,
    theta: &[f64],
    lambda: f64,
    gamma: &DenseMatrix,
    t: f64,
) -> f64 {
    let p = gamma.rows();
    let reg: f64 = theta.chunks(p).map(|th| dot(th, &gamma.mul_vec(th))).sum();
    let n = history.samples_until(t);
    if n < 2 {
        return reg;
    }
    let t_last = (n - 1) as f64 * history.dt;
    let integrand: Vec<f64> = (0..n)
        .map(|k| {
            let s = k as f64 * history.dt;
            let psi = model.value(&history.eta[k], theta);
            let err2: f64 = history.etad_dot[k].iter().zip(&psi).map(|(a, b)| (a - b) * (a - b)).sum();
            lambda * (-lambda * (t_last - s)).exp() * err2
        })
        .collect();
    trapezoid_integral(&integrand, history.dt) + reg
}

/// Ideal least-squares state
/// `ς1*(t) = λ ∫₀ᵗ e^{−λ(t−s)} σ(η*)σ(η*)ᵀ ds`, `ς2*(t) = λ ∫₀ᵗ e^{−λ(t−s)} σ(η*) η̇*_d ds`
/// per channel, by trapezoid quadrature.
pub fn ideal_sigma_star_oracle(history: &SampledHistory, model: &LinearModel, lambda: f64, t: f64) -> Vec<LsState> {
    let p = model.channel_dim();
    let n = history.samples_until(t);
    (0..model.ne())
        .map(|j| {
            let mut out = LsState::zeros(p);
            if n < 2 {
                return out;
            }
            let t_last = (n - 1) as f64 * history.dt;
            let weights: Vec<f64> =
                (0..n).map(|k| lambda * (-lambda * (t_last - k as f64 * history.dt)).exp()).collect();
            let sigmas: Vec<Vec<f64>> = (0..n).map(|k| model.sigma(j, &history.eta[k])).collect();
            for a in 0..p {
                for b in a..p {
                    let f: Vec<f64> = (0..n).map(|k| weights[k] * sigmas[k][a] * sigmas[k][b]).collect();
                    let v = trapezoid_integral(&f, history.dt);
                    out.s1[(a, b)] = v;
                    out.s1[(b, a)] = v;
                }
                let f: Vec<f64> = (0..n).map(|k| weights[k] * sigmas[k][a] * history.etad_dot[k][j]).collect();
                out.s2[a] = trapezoid_integral(&f, history.dt);
            }
            out
        })
        .collect()
}
