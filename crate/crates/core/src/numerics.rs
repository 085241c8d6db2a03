//! Numerical substrate: small dense matrices, Cholesky solves, fixed-step
//! RK4, Routh–Hurwitz stability and trapezoid quadrature.
//!
//! Everything here is pure and allocation-light. Dimensions in this crate
//! rarely exceed twenty, so no attempt is made at blocking or sparsity.

use std::fmt;
use std::ops::{Index, IndexMut};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("integration blow-up at t = {t}")]
    IntegrationBlowup { t: f64 },
    #[error("matrix is not positive definite (pivot {pivot} = {value})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(&'static str),
}

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self[(i, j)])?;
            }
        }
        write!(f, "]")
    }
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting wrong counts and
    /// non-finite values.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumericsError> {
        if data.len() != rows * cols {
            return Err(NumericsError::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite("matrix"));
        }
        Ok(Self { rows, cols, data })
    }

    /// Convenience constructor for literals; panics on ragged input.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn column(values: &[f64]) -> Self {
        Self { rows: values.len(), cols: 1, data: values.to_vec() }
    }

    pub fn row(values: &[f64]) -> Self {
        Self { rows: 1, cols: values.len(), data: values.to_vec() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "mul_vec: {}x{} times {}", self.rows, self.cols, x.len());
        (0..self.rows)
            .map(|i| {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                row.iter().zip(x).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "add shape mismatch");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "sub shape mismatch");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: f64) -> DenseMatrix {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest |a_ij - a_ji|.
    pub fn symmetry_defect(&self) -> f64 {
        assert!(self.is_square());
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Replaces the matrix by (A + Aᵀ)/2.
    pub fn symmetrize(&mut self) {
        assert!(self.is_square());
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let avg = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = avg;
                self[(j, i)] = avg;
            }
        }
    }

    /// Places `block` with its top-left corner at (r0, c0).
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &DenseMatrix) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    pub fn block_diag(blocks: &[DenseMatrix]) -> DenseMatrix {
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let (mut r, mut c) = (0, 0);
        for b in blocks {
            out.set_block(r, c, b);
            r += b.rows;
            c += b.cols;
        }
        out
    }

    /// Lower-triangular Cholesky factor L with A = L Lᵀ.
    pub fn cholesky(&self) -> Result<DenseMatrix, NumericsError> {
        if !self.is_square() {
            return Err(NumericsError::Shape(format!("cholesky of {}x{}", self.rows, self.cols)));
        }
        let n = self.rows;
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let tol = scale * 1e-10;
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (self[(i, j)], self[(j, i)]);
                if (a - b).abs() > tol.max(1e-10 * a.abs().max(b.abs())) {
                    return Err(NumericsError::Shape("cholesky of a non-symmetric matrix".into()));
                }
            }
        }
        let mut l = Self::zeros(n, n);
        for j in 0..n {
            let mut diag = self[(j, j)];
            for k in 0..j {
                diag -= l[(j, k)] * l[(j, k)];
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return Err(NumericsError::NotPositiveDefinite { pivot: j, value: diag });
            }
            let ljj = diag.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(l)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Solves A x = b for symmetric positive-definite A by Cholesky.
pub fn solve_spd(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
    if b.len() != a.rows() {
        return Err(NumericsError::Shape(format!("rhs of length {} for {}x{}", b.len(), a.rows(), a.cols())));
    }
    let l = a.cholesky()?;
    let n = b.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    Ok(x)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues(a: &DenseMatrix) -> Vec<f64> {
    assert!(a.is_square());
    let n = a.rows();
    let mut m = a.clone();
    m.symmetrize();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum();
        if off.sqrt() <= 1e-15 * m.frobenius_norm().max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    eig.sort_by(|a, b| a.total_cmp(b));
    eig
}

pub fn min_symmetric_eigenvalue(a: &DenseMatrix) -> f64 {
    symmetric_eigenvalues(a).first().copied().unwrap_or(f64::NAN)
}

/// Monic polynomial sⁿ + a_{n-1} sⁿ⁻¹ + … + a_0, stored as (a_0, …, a_{n-1}).
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    lower: Vec<f64>,
}

impl Polynomial {
    /// `lower` holds the non-leading coefficients from the constant term up.
    pub fn monic(lower: Vec<f64>) -> Result<Self, NumericsError> {
        if lower.is_empty() {
            return Err(NumericsError::InvalidPolynomial("degree must be at least 1"));
        }
        if lower.iter().any(|c| !c.is_finite()) {
            return Err(NumericsError::InvalidPolynomial("non-finite coefficient"));
        }
        Ok(Self { lower })
    }

    /// sᵈ + k_1 sᵈ⁻¹ + … + k_d from (k_1, …, k_d).
    pub fn from_descending(k: &[f64]) -> Result<Self, NumericsError> {
        Self::monic(k.iter().rev().copied().collect())
    }

    pub fn degree(&self) -> usize {
        self.lower.len()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.lower
    }

    /// Routh–Hurwitz test. A zero pivot is reported as not Hurwitz.
    pub fn is_hurwitz(&self) -> bool {
        let n = self.degree();
        // Coefficients from the leading term down: 1, a_{n-1}, …, a_0.
        let mut desc = Vec::with_capacity(n + 1);
        desc.push(1.0);
        desc.extend(self.lower.iter().rev());
        let width = n / 2 + 1;
        let mut prev: Vec<f64> = (0..width).map(|k| desc.get(2 * k).copied().unwrap_or(0.0)).collect();
        let mut cur: Vec<f64> = (0..width).map(|k| desc.get(2 * k + 1).copied().unwrap_or(0.0)).collect();
        if !(prev[0] > 0.0) {
            return false;
        }
        for _ in 0..n {
            if !(cur[0] > 0.0) {
                return false;
            }
            let next: Vec<f64> = (0..width)
                .map(|k| {
                    let a = prev.get(k + 1).copied().unwrap_or(0.0);
                    let b = cur.get(k + 1).copied().unwrap_or(0.0);
                    (cur[0] * a - prev[0] * b) / cur[0]
                })
                .collect();
            prev = cur;
            cur = next;
        }
        true
    }
}

/// Coefficients (k_1, …, k_n) of (s + 1)ⁿ = sⁿ + k_1 sⁿ⁻¹ + … + k_n.
pub fn binomial_descending(n: usize) -> Vec<f64> {
    let mut row = vec![1.0f64];
    for _ in 0..n {
        let mut next = vec![1.0; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    row[1..].to_vec()
}

/// One classical fourth-order Runge–Kutta step.
pub fn rk4_step<F>(mut rhs: F, state: &[f64], t: f64, dt: f64) -> Result<Vec<f64>, NumericsError>
where
    F: FnMut(f64, &[f64]) -> Vec<f64>,
{
    let check = |k: &[f64], at: f64| {
        if k.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(NumericsError::IntegrationBlowup { t: at })
        }
    };
    let n = state.len();
    let half = 0.5 * dt;
    let k1 = rhs(t, state);
    check(&k1, t)?;
    let tmp: Vec<f64> = (0..n).map(|i| state[i] + half * k1[i]).collect();
    let k2 = rhs(t + half, &tmp);
    check(&k2, t + half)?;
    let tmp: Vec<f64> = (0..n).map(|i| state[i] + half * k2[i]).collect();
    let k3 = rhs(t + half, &tmp);
    check(&k3, t + half)?;
    let tmp: Vec<f64> = (0..n).map(|i| state[i] + dt * k3[i]).collect();
    let k4 = rhs(t + dt, &tmp);
    check(&k4, t + dt)?;
    let out: Vec<f64> =
        (0..n).map(|i| state[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect();
    check(&out, t + dt)?;
    Ok(out)
}

/// Composite trapezoid rule over uniformly spaced samples.
pub fn trapezoid_integral(samples: &[f64], dt: f64) -> f64 {
    assert!(samples.len() >= 2, "trapezoid rule needs at least two samples");
    assert!(dt > 0.0, "trapezoid rule needs a positive step");
    let inner: f64 = samples[1..samples.len() - 1].iter().sum();
    dt * (0.5 * (samples[0] + samples[samples.len() - 1]) + inner)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
