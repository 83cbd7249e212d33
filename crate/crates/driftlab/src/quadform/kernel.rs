use num_complex::Complex64;

use super::exact::{triangle_exp, PiecewisePoly};
use super::QuadformError;
use crate::obstruction::CouplingTable;
use crate::spectral::eigenvalue;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// One separable exponential `weight · e^{i(α t + β τ)}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpTerm {
    pub weight: Complex64,
    pub alpha: f64,
    pub beta: f64,
}

/// A finite sum of separable exponentials in `(t, τ)`.
///
/// `max_order` bounds the total derivative order `a + b` that the
/// untruncated kernel supports; `None` means unbounded.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpKernel {
    terms: Vec<ExpTerm>,
    max_order: Option<usize>,
}

fn ipow(x: f64, k: usize) -> Complex64 {
    // (iλ)^k
    let mag = x.powi(k as i32);
    match k % 4 {
        0 => Complex64::new(mag, 0.0),
        1 => Complex64::new(0.0, mag),
        2 => Complex64::new(-mag, 0.0),
        _ => Complex64::new(0.0, -mag),
    }
}

impl ExpKernel {
    pub fn new(terms: Vec<ExpTerm>) -> Self {
        ExpKernel { terms, max_order: None }
    }

    pub fn zero() -> Self {
        Self::new(Vec::new())
    }

    pub fn with_max_order(mut self, order: Option<usize>) -> Self {
        self.max_order = order;
        self
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    pub fn max_order(&self) -> Option<usize> {
        self.max_order
    }

    fn check(&self, a: usize, b: usize) -> Result<(), QuadformError> {
        match self.max_order {
            Some(m) if a + b > m => Err(QuadformError::Regularity { order: a + b, max: m }),
            _ => Ok(()),
        }
    }

    /// `∂₁^a ∂₂^b` applied term by term.
    pub fn derivative(&self, a: usize, b: usize) -> Result<Self, QuadformError> {
        self.check(a, b)?;
        let terms = self
            .terms
            .iter()
            .map(|t| ExpTerm {
                weight: t.weight * ipow(t.alpha, a) * ipow(t.beta, b),
                ..*t
            })
            .collect();
        Ok(ExpKernel {
            terms,
            max_order: self.max_order.map(|m| m - a - b),
        })
    }

    pub fn eval(&self, t: f64, tau: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|x| x.weight * Complex64::cis(x.alpha * t + x.beta * tau))
            .sum()
    }

    pub fn eval_derivative(&self, t: f64, tau: f64, a: usize, b: usize) -> Result<Complex64, QuadformError> {
        Ok(self.derivative(a, b)?.eval(t, tau))
    }

    /// `d/dt H(t,t)`.
    pub fn diagonal_slope(&self, t: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|x| x.weight * I * (x.alpha + x.beta) * Complex64::cis((x.alpha + x.beta) * t))
            .sum()
    }

    /// `∫₀ᵀ f(t) g(t) H(t,t) dt`.
    pub fn diagonal_integral(&self, fg: &PiecewisePoly) -> Complex64 {
        self.terms.iter().map(|x| x.weight * fg.integral_exp(x.alpha + x.beta)).sum()
    }

    /// `∫₀ᵀ g(τ) H(t,τ) dτ` at a fixed `t`.
    pub fn section_integral(&self, t: f64, g: &PiecewisePoly) -> Complex64 {
        self.terms
            .iter()
            .map(|x| x.weight * Complex64::cis(x.alpha * t) * g.integral_exp(x.beta))
            .sum()
    }

    /// `∫₀ᵀ f(t) ∫₀ᵗ g(τ) H(t,τ) dτ dt`.
    pub fn triangle(&self, f: &PiecewisePoly, g: &PiecewisePoly) -> Complex64 {
        self.terms
            .iter()
            .map(|x| x.weight * triangle_exp(f, g, x.alpha, x.beta))
            .sum()
    }
}

/// `h(t,τ) = -Σ_j c_j e^{i[λ_K(t-T) + λ_j(τ-t) + λ₁(T-τ)]}` for an arbitrary
/// spectrum `lambda` (ascending, `lambda[0] = λ₁`) and products
/// `c[j-1] = ⟨Bφ₁,φ_j⟩⟨Bφ_K,φ_j⟩`.
pub fn quadratic_kernel(lambda: &[f64], c: &[f64], k: usize, horizon: f64) -> ExpKernel {
    let (l1, lk) = (lambda[0], lambda[k - 1]);
    let phase = Complex64::cis((l1 - lk) * horizon);
    let terms = c
        .iter()
        .zip(lambda)
        .filter(|(&c, _)| c != 0.0)
        .map(|(&c, &lj)| ExpTerm {
            weight: -c * phase,
            alpha: lk - lj,
            beta: lj - l1,
        })
        .collect();
    ExpKernel::new(terms)
}

/// The quadratic kernel `h` of a coupling table at final time `T`:
/// `h(t,τ) = -Σ_j c_j e^{i[λ_K(t-T) + λ_j(τ-t) + λ₁(T-τ)]}`, truncated at the
/// table cutoff.
#[derive(Clone, Debug)]
pub struct KernelH {
    table: CouplingTable,
    horizon: f64,
    kernel: ExpKernel,
}

impl KernelH {
    pub fn new(table: CouplingTable, horizon: f64) -> Result<Self, QuadformError> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(QuadformError::InvalidHorizon(horizon));
        }
        let lambda: Vec<f64> = (1..=table.cutoff.max(table.k)).map(eigenvalue).collect();
        let kernel = quadratic_kernel(&lambda, &table.c, table.k, horizon);
        // ∂₁^a∂₂^b h has weights of size j^{2(a+b)} |c_j|, summable iff γ > 2(a+b)+1
        let gamma = table.decay.gamma;
        let max_order = if gamma.is_infinite() {
            None
        } else {
            Some(((gamma - 1.0) / 2.0 - 1e-9).ceil().max(1.0) as usize - 1)
        };
        Ok(KernelH {
            table,
            horizon,
            kernel: kernel.with_max_order(max_order),
        })
    }

    pub fn table(&self) -> &CouplingTable {
        &self.table
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn k(&self) -> usize {
        self.table.k
    }

    pub fn kernel(&self) -> &ExpKernel {
        &self.kernel
    }

    /// `∂₁^a ∂₂^b h(t, τ)`.
    pub fn eval(&self, t: f64, tau: f64, a: usize, b: usize) -> Result<Complex64, QuadformError> {
        let hz = self.horizon;
        if !(0.0..=hz).contains(&t) || !(0.0..=hz).contains(&tau) {
            return Err(QuadformError::OutOfRange { t, tau, horizon: hz });
        }
        self.kernel.eval_derivative(t, tau, a, b)
    }

    /// The real sine kernel `k_n = Im ∂₁ⁿ∂₂ⁿ h`.
    pub fn k_n(&self, n: usize) -> Result<ExpKernel, QuadformError> {
        self.kernel.derivative(n, n)
    }
}
