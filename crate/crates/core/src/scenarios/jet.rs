//! Truncated Taylor series in time.
//!
//! Steady-state signals are smooth functions of `t`, and the internal model
//! needs their first `d` derivatives. Propagating truncated Taylor
//! coefficients through `+`, `×` and `÷` gives those derivatives exactly (to
//! roundoff) without symbolic work or finite differences.

use std::ops::{Add, Mul, Neg, Sub};

/// Coefficients `a_k = f⁽ᵏ⁾(t₀) / k!` for `k = 0..=order`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    coeffs: Vec<f64>,
}

impl Jet {
    pub fn constant(value: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = value;
        Self { coeffs }
    }

    /// From the derivative values `f(t₀), f'(t₀), …`.
    pub fn from_derivatives(derivs: &[f64]) -> Self {
        assert!(!derivs.is_empty(), "a jet needs at least the value");
        let mut fact = 1.0;
        let coeffs = derivs
            .iter()
            .enumerate()
            .map(|(k, v)| {
                if k > 0 {
                    fact *= k as f64;
                }
                v / fact
            })
            .collect();
        Self { coeffs }
    }

    /// Jet of `A sin(ω t + φ)` at `t`.
    pub fn sinusoid(amplitude: f64, omega: f64, phase: f64, t: f64, order: usize) -> Self {
        let arg = omega * t + phase;
        let derivs: Vec<f64> = (0..=order)
            .map(|k| amplitude * omega.powi(k as i32) * (arg + k as f64 * std::f64::consts::FRAC_PI_2).sin())
            .collect();
        Self::from_derivatives(&derivs)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// `f⁽ᵏ⁾(t₀)`.
    pub fn derivative(&self, k: usize) -> f64 {
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        self.coeffs[k] * fact
    }

    /// All derivatives `f, f', …, f⁽ᵒʳᵈᵉʳ⁾` at `t₀`.
    pub fn derivatives(&self) -> Vec<f64> {
        (0..=self.order()).map(|k| self.derivative(k)).collect()
    }

    /// Jet of `f'`, one order shorter.
    pub fn differentiate(&self) -> Self {
        assert!(self.order() >= 1, "cannot differentiate an order-0 jet");
        let coeffs = (1..self.coeffs.len()).map(|k| k as f64 * self.coeffs[k]).collect();
        Self { coeffs }
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self { coeffs: self.coeffs[..=order.min(self.order())].to_vec() }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn add_scalar(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    /// `self / rhs` via the recursion `q_k = (a_k − Σ_{j<k} q_j b_{k−j}) / b_0`.
    pub fn div(&self, rhs: &Jet) -> Jet {
        let n = self.order().min(rhs.order());
        let b0 = rhs.coeffs[0];
        let mut q = vec![0.0; n + 1];
        for k in 0..=n {
            let mut acc = self.coeffs[k];
            for j in 0..k {
                acc -= q[j] * rhs.coeffs[k - j];
            }
            q[k] = acc / b0;
        }
        Jet { coeffs: q }
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        let n = self.order().min(rhs.order());
        Jet { coeffs: (0..=n).map(|k| self.coeffs[k] + rhs.coeffs[k]).collect() }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        let n = self.order().min(rhs.order());
        Jet { coeffs: (0..=n).map(|k| self.coeffs[k] - rhs.coeffs[k]).collect() }
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let n = self.order().min(rhs.order());
        let coeffs = (0..=n).map(|k| (0..=k).map(|j| self.coeffs[j] * rhs.coeffs[k - j]).sum()).collect();
        Jet { coeffs }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}
