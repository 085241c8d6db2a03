//! Stabilizer, gain schedule and the assembled regulator
//!
//! ```text
//! η̇  = Φ(η, γ(ς)) + G e
//! ς̇  = φ(ς, ξ2, η)
//! ξ̇1 = ξ2 − m1 ρ (ξ1 − η_d)
//! ξ̇2 = ψ̇(ξ2, η, ς) − m2 ρ² (ξ1 − η_d)
//! u  = 𝓛 (ℓ K(κ) χ − ℓ ζ + ℓ K(κ) Cᵀ η_1 + K_w ν)
//! ```

use thiserror::Error;

use crate::identifier::{
    drift, ls_flow, ls_output, observer_rhs, psidot_unsaturated, theta_dot, IdentifierError, IdentifierState,
    LsIdentifierConfig, LsState,
};
use crate::internal_model::{internal_model_rhs_with_psi, InternalModelConfig, LinearModel, ModelError, PredictionModel};
use crate::numerics::{norm, DenseMatrix, Polynomial};
use crate::plant::ChainStructure;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegulatorError {
    #[error("invalid regulator configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Identifier(#[from] IdentifierError),
    #[error("dimension mismatch: {0}")]
    Shape(String),
}

/// Row `K^i(κ) = −(c_1 κⁿ, c_2 κⁿ⁻¹, …, c_n κ)` of one chain.
pub fn gain_row(c: &[f64], kappa: f64) -> Vec<f64> {
    let n = c.len();
    c.iter().enumerate().map(|(j, cj)| -cj * kappa.powi((n - j) as i32)).collect()
}

/// Block-diagonal `K(κ)`, `ne × nχ`.
pub fn gain_matrix(structure: &ChainStructure, c: &[Vec<f64>], kappa: f64) -> DenseMatrix {
    let blocks: Vec<DenseMatrix> = c.iter().map(|ci| DenseMatrix::row(&gain_row(ci, kappa))).collect();
    let k = DenseMatrix::block_diag(&blocks);
    debug_assert_eq!((k.rows(), k.cols()), (structure.ne(), structure.n_chi()));
    k
}

/// Which way a gain set was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningTag {
    /// Seed `(ρ, g, κ, ℓ)`.
    pub seed: [f64; 4],
    pub multipliers: [f64; 4],
    pub kappa_floored: bool,
    pub ell_floored: bool,
}

/// The four high gains, chosen in the order `ρ → g(ρ) → κ(g) → ℓ(g, κ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSet {
    pub rho: f64,
    pub g: f64,
    pub kappa: f64,
    pub ell: f64,
    pub tag: Option<TuningTag>,
}

impl GainSet {
    pub fn new(rho: f64, g: f64, kappa: f64, ell: f64) -> Result<Self, RegulatorError> {
        let gs = Self { rho, g, kappa, ell, tag: None };
        gs.validate()?;
        Ok(gs)
    }

    pub fn validate(&self) -> Result<(), RegulatorError> {
        for (name, v) in [("rho", self.rho), ("g", self.g), ("kappa", self.kappa), ("ell", self.ell)] {
            if !(v > 1.0) || !v.is_finite() {
                return Err(RegulatorError::Config(format!("{name} must be > 1, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Multipliers {
    pub rho: f64,
    pub g: f64,
    pub kappa: f64,
    pub ell: f64,
}

impl Default for Multipliers {
    fn default() -> Self {
        Self { rho: 1.0, g: 1.0, kappa: 1.0, ell: 1.0 }
    }
}

/// Lower bounds re-derived after scaling: `κ ≥ kappa_per_g · g` and
/// `ℓ ≥ ell_per_kappa · κ`. The default `κ ≥ 4g` keeps the stabilizer
/// clear of the internal model; the linearized VTOL loop with binomial
/// coefficients loses stability near `g ≈ 0.28 κ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleFloors {
    pub kappa_per_g: f64,
    pub ell_per_kappa: f64,
}

impl Default for ScheduleFloors {
    fn default() -> Self {
        Self { kappa_per_g: 4.0, ell_per_kappa: 1.0 }
    }
}

/// Scales a seed gain set in dependency order, raising `κ` and `ℓ` to their
/// floors when the upstream gains grow past them.
pub fn tuning_schedule(seed: &GainSet, m: &Multipliers, floors: &ScheduleFloors) -> Result<GainSet, RegulatorError> {
    for v in [seed.rho, seed.g, seed.kappa, seed.ell] {
        if !(v >= 1.0) {
            return Err(RegulatorError::Config(format!("schedule seeds must be >= 1, got {v}")));
        }
    }
    for v in [m.rho, m.g, m.kappa, m.ell] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(RegulatorError::Config(format!("multipliers must be > 0, got {v}")));
        }
    }
    let rho = seed.rho * m.rho;
    let g = seed.g * m.g;
    let kappa_scaled = seed.kappa * m.kappa;
    let kappa_floor = floors.kappa_per_g * g;
    let kappa = kappa_scaled.max(kappa_floor);
    let ell_scaled = seed.ell * m.ell;
    let ell_floor = floors.ell_per_kappa * kappa;
    let ell = ell_scaled.max(ell_floor);
    let gs = GainSet {
        rho,
        g,
        kappa,
        ell,
        tag: Some(TuningTag {
            seed: [seed.rho, seed.g, seed.kappa, seed.ell],
            multipliers: [m.rho, m.g, m.kappa, m.ell],
            kappa_floored: kappa_floor > kappa_scaled,
            ell_floored: ell_floor > ell_scaled,
        }),
    };
    gs.validate()?;
    Ok(gs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilizerConfig {
    kappa: f64,
    ell: f64,
    c: Vec<Vec<f64>>,
    lmat: DenseMatrix,
    kw: Option<DenseMatrix>,
}

impl StabilizerConfig {
    /// `c[i]` holds `(c^i_1, …, c^i_n)` of chain `i`; each
    /// `sⁿ + c^i_n sⁿ⁻¹ + … + c^i_1` must be Hurwitz. `lmat` is `nu × ne`
    /// and full column rank; `kw`, when present, is `ne × nν`.
    pub fn new(
        structure: &ChainStructure,
        kappa: f64,
        ell: f64,
        c: Vec<Vec<f64>>,
        lmat: DenseMatrix,
        kw: Option<DenseMatrix>,
    ) -> Result<Self, RegulatorError> {
        if !(kappa > 0.0) || !(ell > 0.0) {
            return Err(RegulatorError::Config(format!("kappa and ell must be > 0, got {kappa}, {ell}")));
        }
        if c.len() != structure.ne() {
            return Err(RegulatorError::Shape(format!("{} coefficient lists for {} chains", c.len(), structure.ne())));
        }
        for (i, (ci, &n)) in c.iter().zip(structure.chain_lengths()).enumerate() {
            if ci.len() != n {
                return Err(RegulatorError::Shape(format!("chain {i} has length {n} but {} coefficients", ci.len())));
            }
            let poly = Polynomial::monic(ci.clone()).map_err(|e| RegulatorError::Config(e.to_string()))?;
            if !poly.is_hurwitz() {
                return Err(RegulatorError::Config(format!("chain {i} coefficients {ci:?} are not Hurwitz")));
            }
        }
        if (lmat.rows(), lmat.cols()) != (structure.nu(), structure.ne()) {
            return Err(RegulatorError::Shape(format!(
                "L is {}x{}, expected {}x{}",
                lmat.rows(),
                lmat.cols(),
                structure.nu(),
                structure.ne()
            )));
        }
        if lmat.transpose().matmul(&lmat).cholesky().is_err() {
            return Err(RegulatorError::Config("L must have full column rank".into()));
        }
        if let Some(kw) = &kw {
            if kw.rows() != structure.ne() {
                return Err(RegulatorError::Shape(format!("Kw has {} rows, expected {}", kw.rows(), structure.ne())));
            }
        }
        Ok(Self { kappa, ell, c, lmat, kw })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn ell(&self) -> f64 {
        self.ell
    }
    pub fn c(&self) -> &[Vec<f64>] {
        &self.c
    }
    pub fn lmat(&self) -> &DenseMatrix {
        &self.lmat
    }
    pub fn kw(&self) -> Option<&DenseMatrix> {
        self.kw.as_ref()
    }
}

/// `u = 𝓛 (ℓ K(κ) χ − ℓ ζ + ℓ K(κ) Cᵀ η_1 + K_w ν)`; the feedforward term is
/// dropped when either `K_w` or `ν` is absent.
pub fn control_law(
    cfg: &StabilizerConfig,
    structure: &ChainStructure,
    chi: &[f64],
    zeta: &[f64],
    eta1: &[f64],
    nu: Option<&[f64]>,
) -> Vec<f64> {
    let ne = structure.ne();
    let mut v = vec![0.0; ne];
    for i in 0..ne {
        let row = gain_row(&cfg.c[i], cfg.kappa);
        let off = structure.chain_offset(i);
        let kchi: f64 = row.iter().enumerate().map(|(k, r)| r * chi[off + k]).sum();
        v[i] = cfg.ell * kchi - cfg.ell * zeta[i] + cfg.ell * row[0] * eta1[i];
    }
    if let (Some(kw), Some(nu)) = (&cfg.kw, nu) {
        for (vi, f) in v.iter_mut().zip(kw.mul_vec(nu)) {
            *vi += f;
        }
    }
    cfg.lmat.mul_vec(&v)
}

/// Everything the regulator needs, fixed for one run.
#[derive(Debug, Clone)]
pub struct RegulatorDesign {
    pub structure: ChainStructure,
    pub internal_model: InternalModelConfig,
    pub model: LinearModel,
    pub identifier: LsIdentifierConfig,
    pub stabilizer: StabilizerConfig,
}

impl RegulatorDesign {
    pub fn new(
        structure: ChainStructure,
        internal_model: InternalModelConfig,
        model: LinearModel,
        identifier: LsIdentifierConfig,
        stabilizer: StabilizerConfig,
    ) -> Result<Self, RegulatorError> {
        let ne = structure.ne();
        if internal_model.ne() != ne || model.ne() != ne {
            return Err(RegulatorError::Shape("internal model and plant disagree on ne".into()));
        }
        if model.eta_dim() != internal_model.d() * ne {
            return Err(RegulatorError::Shape("prediction model and internal model disagree on d".into()));
        }
        if identifier.p() != model.channel_dim() {
            return Err(RegulatorError::Shape(format!(
                "identifier has {} parameters per channel, model has {}",
                identifier.p(),
                model.channel_dim()
            )));
        }
        Ok(Self { structure, internal_model, model, identifier, stabilizer })
    }

    pub fn ne(&self) -> usize {
        self.structure.ne()
    }

    pub fn d(&self) -> usize {
        self.internal_model.d()
    }

    pub fn p(&self) -> usize {
        self.identifier.p()
    }

    pub fn ntheta(&self) -> usize {
        self.model.ntheta()
    }

    pub fn state_len(&self) -> usize {
        let (ne, p) = (self.ne(), self.p());
        self.d() * ne + ne * (p * p + p) + 2 * ne
    }

    pub fn zero_state(&self) -> RegulatorState {
        RegulatorState { eta: vec![0.0; self.d() * self.ne()], id: IdentifierState::zeros(self.ne(), self.p()) }
    }

    /// Stacked `θ = γ(ς)` over channels.
    pub fn theta(&self, state: &RegulatorState) -> Result<Vec<f64>, RegulatorError> {
        let mut theta = Vec::with_capacity(self.ntheta());
        for st in &state.id.ls {
            theta.extend(ls_output(&self.identifier, &st.s1, &st.s2)?);
        }
        Ok(theta)
    }
}

/// Regulator state `(η, ς, ξ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegulatorState {
    pub eta: Vec<f64>,
    pub id: IdentifierState,
}

impl RegulatorState {
    pub fn pack_into(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.eta);
        for st in &self.id.ls {
            out.extend_from_slice(st.s1.as_slice());
            out.extend_from_slice(&st.s2);
        }
        out.extend_from_slice(&self.id.xi1);
        out.extend_from_slice(&self.id.xi2);
    }

    pub fn unpack(design: &RegulatorDesign, data: &[f64]) -> (Self, usize) {
        let (d, ne, p) = (design.d(), design.ne(), design.p());
        let mut at = 0;
        let mut take = |n: usize| {
            let v = data[at..at + n].to_vec();
            at += n;
            v
        };
        let eta = take(d * ne);
        let mut ls = Vec::with_capacity(ne);
        for _ in 0..ne {
            let s1 = DenseMatrix::from_row_major(p, p, take(p * p)).expect("p*p entries taken");
            let s2 = take(p);
            ls.push(LsState { s1, s2 });
        }
        let xi1 = take(ne);
        let xi2 = take(ne);
        (Self { eta, id: IdentifierState { ls, xi1, xi2 } }, at)
    }

    pub fn symmetrize(&mut self) {
        for st in &mut self.id.ls {
            st.s1.symmetrize();
        }
    }
}

/// One evaluation of the regulator.
#[derive(Debug, Clone, PartialEq)]
pub struct RegulatorEval {
    pub derivative: RegulatorState,
    pub u: Vec<f64>,
    pub theta: Vec<f64>,
    pub psi: Vec<f64>,
    pub eta_d_dot: Vec<f64>,
    /// `|h_d g^d e − (η̇_d − ψ(η, θ))|`, zero up to roundoff by construction.
    pub eq8_residual: f64,
}

/// Regulator dynamics and control driven by the plant's `(χ, ζ)`.
pub fn regulator_rhs(
    design: &RegulatorDesign,
    state: &RegulatorState,
    chi: &[f64],
    zeta: &[f64],
    nu: Option<&[f64]>,
) -> Result<RegulatorEval, RegulatorError> {
    let s = &design.structure;
    let (d, ne, p) = (design.d(), design.ne(), design.p());
    if chi.len() != s.n_chi() || zeta.len() != ne {
        return Err(RegulatorError::Shape("chi/zeta do not match the chain structure".into()));
    }
    if state.eta.len() != d * ne || state.id.ls.len() != ne {
        return Err(RegulatorError::Shape("regulator state does not match the design".into()));
    }
    let e = s.error(chi);
    let eta = &state.eta;
    let eta_d = &eta[(d - 1) * ne..];
    let theta = design.theta(state)?;

    let (eta_dot, psi) = internal_model_rhs_with_psi(&design.internal_model, &design.model, eta, &theta, &e)?;
    let eta_d_dot = eta_dot[(d - 1) * ne..].to_vec();
    let k = design.internal_model.error_gain();
    let eq8: Vec<f64> = (0..ne).map(|j| k * e[j] - (eta_d_dot[j] - psi[j])).collect();

    let id = &state.id;
    let mut ls_dot = Vec::with_capacity(ne);
    let mut th_dot = Vec::with_capacity(theta.len());
    for j in 0..ne {
        let sigma = design.model.sigma(j, eta);
        let st = &id.ls[j];
        let (d1, d2) = ls_flow(&design.identifier, &st.s1, &st.s2, &sigma, id.xi2[j]);
        th_dot.extend(theta_dot(&design.identifier, &st.s1, &st.s2, &sigma, id.xi2[j], &theta[j * p..(j + 1) * p])?);
        ls_dot.push(LsState { s1: d1, s2: d2 });
    }
    let psidot = design.identifier.saturate_psidot(&psidot_unsaturated(&design.model, eta, &theta, &th_dot));
    let (xi1_dot, xi2_dot) = observer_rhs(&design.identifier, &id.xi1, &id.xi2, eta_d, &psidot);

    let u = control_law(&design.stabilizer, s, chi, zeta, &eta[..ne], nu);

    Ok(RegulatorEval {
        derivative: RegulatorState {
            eta: eta_dot,
            id: IdentifierState { ls: ls_dot, xi1: xi1_dot, xi2: xi2_dot },
        },
        u,
        theta,
        psi,
        eta_d_dot,
        eq8_residual: norm(&eq8),
    })
}

/// `Φ(η, γ(ς))` for the current state; handy for diagnostics.
pub fn regulator_drift(design: &RegulatorDesign, state: &RegulatorState) -> Result<Vec<f64>, RegulatorError> {
    let theta = design.theta(state)?;
    Ok(drift(&design.model, &state.eta, &theta))
}
