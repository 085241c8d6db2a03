//! Plants in multivariable normal form.
//!
//! The state splits as `x = (x0, χ, ζ)` where `χ` stacks `ne` chains of
//! integrators driven at the bottom by `ζ`, and the regulation error is the
//! first entry of each chain:
//!
//! ```text
//! ẋ0 = f0(w, x) + b(w, x) u
//! χ̇  = F χ + H ζ
//! ζ̇  = q(w, x) + Ω(w, x) u
//! e  = C χ
//! ```
//!
//! with the exogenous signal `w` generated by `ẇ = s(w)`.

use thiserror::Error;

use crate::numerics::{solve_spd, DenseMatrix, NumericsError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlantError {
    #[error("invalid chain structure: {0}")]
    Structure(String),
    #[error("dimension mismatch: {0}")]
    Shape(String),
    #[error("model evaluation produced a non-finite value in {coordinate}")]
    ModelEvaluation { coordinate: String },
    #[error("Ω Ωᵀ is singular; the high-frequency matrix is not full row rank")]
    SingularGram,
}

/// Dimensions of a normal-form plant.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainStructure {
    n0: usize,
    nu: usize,
    chain_lengths: Vec<usize>,
}

impl ChainStructure {
    pub fn new(n0: usize, nu: usize, chain_lengths: Vec<usize>) -> Result<Self, PlantError> {
        if chain_lengths.is_empty() {
            return Err(PlantError::Structure("at least one error chain is required".into()));
        }
        if let Some(i) = chain_lengths.iter().position(|&n| n == 0) {
            return Err(PlantError::Structure(format!("chain {i} has zero length")));
        }
        if nu < chain_lengths.len() {
            return Err(PlantError::Structure(format!(
                "nu = {nu} is smaller than ne = {}",
                chain_lengths.len()
            )));
        }
        Ok(Self { n0, nu, chain_lengths })
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn ne(&self) -> usize {
        self.chain_lengths.len()
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn chain_lengths(&self) -> &[usize] {
        &self.chain_lengths
    }

    pub fn n_chi(&self) -> usize {
        self.chain_lengths.iter().sum()
    }

    pub fn max_chain_length(&self) -> usize {
        self.chain_lengths.iter().copied().max().unwrap_or(0)
    }

    /// Offset of the first entry of chain `i` inside `χ`.
    pub fn chain_offset(&self, i: usize) -> usize {
        self.chain_lengths[..i].iter().sum()
    }

    /// Regulation error `e = Cχ`.
    pub fn error(&self, chi: &[f64]) -> Vec<f64> {
        (0..self.ne()).map(|i| chi[self.chain_offset(i)]).collect()
    }
}

/// The block matrices `(C, F, H)` of the integrator chains.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainMatrices {
    pub c: DenseMatrix,
    pub f: DenseMatrix,
    pub h: DenseMatrix,
}

pub fn chain_matrices(structure: &ChainStructure) -> ChainMatrices {
    let mut cs = Vec::new();
    let mut fs = Vec::new();
    let mut hs = Vec::new();
    for &n in structure.chain_lengths() {
        let mut c = DenseMatrix::zeros(1, n);
        c[(0, 0)] = 1.0;
        let mut f = DenseMatrix::zeros(n, n);
        for i in 0..n - 1 {
            f[(i, i + 1)] = 1.0;
        }
        let mut h = DenseMatrix::zeros(n, 1);
        h[(n - 1, 0)] = 1.0;
        cs.push(c);
        fs.push(f);
        hs.push(h);
    }
    ChainMatrices {
        c: DenseMatrix::block_diag(&cs),
        f: DenseMatrix::block_diag(&fs),
        h: DenseMatrix::block_diag(&hs),
    }
}

/// Exogenous plus plant state, `(w, x0, χ, ζ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    pub w: Vec<f64>,
    pub x0: Vec<f64>,
    pub chi: Vec<f64>,
    pub zeta: Vec<f64>,
}

impl PlantState {
    pub fn zeros(nw: usize, structure: &ChainStructure) -> Self {
        Self {
            w: vec![0.0; nw],
            x0: vec![0.0; structure.n0()],
            chi: vec![0.0; structure.n_chi()],
            zeta: vec![0.0; structure.ne()],
        }
    }

    pub fn len(&self) -> usize {
        self.w.len() + self.x0.len() + self.chi.len() + self.zeta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pack_into(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.w);
        out.extend_from_slice(&self.x0);
        out.extend_from_slice(&self.chi);
        out.extend_from_slice(&self.zeta);
    }

    /// Reads a state laid out as by [`PlantState::pack_into`]; returns the
    /// number of entries consumed.
    pub fn unpack(nw: usize, structure: &ChainStructure, data: &[f64]) -> (Self, usize) {
        let mut at = 0;
        let mut take = |n: usize| {
            let v = data[at..at + n].to_vec();
            at += n;
            v
        };
        let w = take(nw);
        let x0 = take(structure.n0());
        let chi = take(structure.n_chi());
        let zeta = take(structure.ne());
        (Self { w, x0, chi, zeta }, at)
    }

    pub fn check_dims(&self, nw: usize, structure: &ChainStructure) -> Result<(), PlantError> {
        let expect = [
            ("w", self.w.len(), nw),
            ("x0", self.x0.len(), structure.n0()),
            ("chi", self.chi.len(), structure.n_chi()),
            ("zeta", self.zeta.len(), structure.ne()),
        ];
        for (name, got, want) in expect {
            if got != want {
                return Err(PlantError::Shape(format!("{name} has length {got}, expected {want}")));
            }
        }
        Ok(())
    }
}

/// A normal-form plant together with its exosystem.
///
/// Maps receive the full [`PlantState`], which carries `w`.
pub trait PlantModel: Send + Sync {
    fn structure(&self) -> &ChainStructure;
    fn nw(&self) -> usize;
    /// Exosystem field `s(w)`.
    fn exosystem(&self, w: &[f64]) -> Vec<f64>;
    fn f0(&self, x: &PlantState) -> Vec<f64>;
    fn b(&self, x: &PlantState) -> DenseMatrix;
    fn q(&self, x: &PlantState) -> Vec<f64>;
    fn omega(&self, x: &PlantState) -> DenseMatrix;
    /// Optional vanishing input added to `χ̇`; absent for plants that are
    /// exactly in normal form.
    fn chain_perturbation(&self, _w: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

fn check_finite(name: &str, v: &[f64]) -> Result<(), PlantError> {
    match v.iter().position(|x| !x.is_finite()) {
        None => Ok(()),
        Some(i) => Err(PlantError::ModelEvaluation { coordinate: format!("{name}[{i}]") }),
    }
}

/// Time derivative of the plant and exosystem state under input `u`.
pub fn plant_rhs(model: &dyn PlantModel, state: &PlantState, u: &[f64]) -> Result<PlantState, PlantError> {
    let s = model.structure();
    state.check_dims(model.nw(), s)?;
    if u.len() != s.nu() {
        return Err(PlantError::Shape(format!("u has length {}, expected {}", u.len(), s.nu())));
    }
    let w_dot = model.exosystem(&state.w);
    check_finite("s(w)", &w_dot)?;

    let mut x0_dot = model.f0(state);
    check_finite("f0", &x0_dot)?;
    if s.n0() > 0 {
        let b = model.b(state);
        check_finite("b", b.as_slice())?;
        for (xd, bu) in x0_dot.iter_mut().zip(b.mul_vec(u)) {
            *xd += bu;
        }
    }

    let mut chi_dot = vec![0.0; s.n_chi()];
    for i in 0..s.ne() {
        let off = s.chain_offset(i);
        let n = s.chain_lengths()[i];
        for k in 0..n - 1 {
            chi_dot[off + k] = state.chi[off + k + 1];
        }
        chi_dot[off + n - 1] = state.zeta[i];
    }
    if let Some(p) = model.chain_perturbation(&state.w) {
        check_finite("chain perturbation", &p)?;
        for (c, v) in chi_dot.iter_mut().zip(p) {
            *c += v;
        }
    }

    let q = model.q(state);
    check_finite("q", &q)?;
    let omega = model.omega(state);
    check_finite("Omega", omega.as_slice())?;
    let zeta_dot: Vec<f64> = q.iter().zip(omega.mul_vec(u)).map(|(a, b)| a + b).collect();

    Ok(PlantState { w: w_dot, x0: x0_dot, chi: chi_dot, zeta: zeta_dot })
}

/// Minimum-norm input `u* = −Ωᵀ (Ω Ωᵀ)⁻¹ q` annihilating `q + Ω u` at `x_star`.
pub fn friend(model: &dyn PlantModel, x_star: &PlantState) -> Result<Vec<f64>, PlantError> {
    let q = model.q(x_star);
    let omega = model.omega(x_star);
    check_finite("q", &q)?;
    check_finite("Omega", omega.as_slice())?;
    friend_from(&q, &omega)
}

/// [`friend`] on already-evaluated `q` and `Ω`.
pub fn friend_from(q: &[f64], omega: &DenseMatrix) -> Result<Vec<f64>, PlantError> {
    if omega.rows() != q.len() {
        return Err(PlantError::Shape(format!("Omega has {} rows, q has {}", omega.rows(), q.len())));
    }
    let gram = omega.matmul(&omega.transpose());
    let y = solve_spd(&gram, q).map_err(|e| match e {
        NumericsError::NotPositiveDefinite { .. } => PlantError::SingularGram,
        other => PlantError::Shape(other.to_string()),
    })?;
    Ok(omega.transpose().mul_vec(&y).into_iter().map(|v| -v).collect())
}
