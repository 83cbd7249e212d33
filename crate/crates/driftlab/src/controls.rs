//! Sampled controls on uniform grids, iterated primitives and the norms
//! appearing in the smallness assumptions.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral::BumpProfile;
use crate::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("a control needs at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("final time must be positive and finite")]
    InvalidHorizon,
    #[error("sample {0} is not finite")]
    NonFinite(usize),
    #[error("H^{order} norm needs at least {needed} samples, got {got}")]
    Resolution { order: usize, needed: usize, got: usize },
    #[error("invalid control family: {0}")]
    InvalidFamily(String),
}

/// Which norm [`ControlSignal::norm`] computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Norm {
    L2,
    Linf,
    /// Root-sum of the `L²` norms of finite-difference derivatives `0..=k`.
    Hk(usize),
}

/// Real samples `u(t_i)`, `t_i = i·dt`, `i = 0..N`, `N·dt = T`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlSignal<T> {
    horizon: T,
    values: Vec<T>,
}

impl<T: Real> ControlSignal<T> {
    pub fn new(horizon: T, values: Vec<T>) -> Result<Self, ControlError> {
        if !(horizon > T::zero() && horizon.is_finite()) {
            return Err(ControlError::InvalidHorizon);
        }
        if values.len() < 3 {
            return Err(ControlError::TooFewSamples(values.len()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ControlError::NonFinite(i));
        }
        Ok(ControlSignal { horizon, values })
    }

    /// Samples `f` on `steps + 1` uniform points of `[0, T]`.
    pub fn from_fn<F: FnMut(T) -> T>(horizon: T, steps: usize, mut f: F) -> Result<Self, ControlError> {
        let dt = horizon / T::from_usize_lossy(steps.max(1));
        let values = (0..=steps).map(|i| f(dt * T::from_usize_lossy(i))).collect();
        Self::new(horizon, values)
    }

    pub fn zeros(horizon: T, steps: usize) -> Result<Self, ControlError> {
        Self::from_fn(horizon, steps, |_| T::zero())
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn dt(&self) -> T {
        self.horizon / T::from_usize_lossy(self.steps())
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn time(&self, i: usize) -> T {
        self.dt() * T::from_usize_lossy(i)
    }

    pub fn times(&self) -> Vec<T> {
        (0..self.values.len()).map(|i| self.time(i)).collect()
    }

    pub fn last(&self) -> T {
        *self.values.last().expect("non-empty")
    }

    pub fn scaled(&self, s: T) -> Self {
        ControlSignal {
            horizon: self.horizon,
            values: self.values.iter().map(|&v| v * s).collect(),
        }
    }

    /// `u_n` with `u_0 = u`, by `n` cumulative trapezoid passes; `u_n(0) = 0`.
    pub fn iterated_primitive(&self, n: usize) -> Self {
        let dt = self.dt();
        let mut v = self.values.clone();
        for _ in 0..n {
            v = cumulative_trapezoid(&v, dt);
        }
        ControlSignal {
            horizon: self.horizon,
            values: v,
        }
    }

    /// `u_1, …, u_n` in order.
    pub fn primitives(&self, n: usize) -> Vec<Self> {
        let mut out = Vec::with_capacity(n);
        let mut cur = self.clone();
        for _ in 0..n {
            cur = cur.iterated_primitive(1);
            out.push(cur.clone());
        }
        out
    }

    pub fn norm(&self, which: Norm) -> Result<T, ControlError> {
        match which {
            Norm::L2 => Ok(self.l2_sq().sqrt()),
            Norm::Linf => Ok(self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))),
            Norm::Hk(k) => {
                let needed = k + 2;
                if self.values.len() < needed {
                    return Err(ControlError::Resolution {
                        order: k,
                        needed,
                        got: self.values.len(),
                    });
                }
                let dt = self.dt();
                let mut d = self.values.clone();
                let mut acc = trapezoid(&d.iter().map(|&v| v * v).collect::<Vec<_>>(), dt);
                for _ in 0..k {
                    d = gradient(&d, dt);
                    acc = acc + trapezoid(&d.iter().map(|&v| v * v).collect::<Vec<_>>(), dt);
                }
                Ok(acc.sqrt())
            }
        }
    }

    /// `∫₀ᵀ u²` by the trapezoid rule.
    pub fn l2_sq(&self) -> T {
        let sq: Vec<T> = self.values.iter().map(|&v| v * v).collect();
        trapezoid(&sq, self.dt())
    }

    /// `∫₀ᵀ u w` for a weight sampled on the same grid.
    pub fn integrate_against(&self, w: &[T]) -> T {
        let prod: Vec<T> = self.values.iter().zip(w).map(|(&a, &b)| a * b).collect();
        trapezoid(&prod, self.dt())
    }
}

/// Composite trapezoid rule on a uniform grid.
pub fn trapezoid<T: Real>(v: &[T], dt: T) -> T {
    if v.len() < 2 {
        return T::zero();
    }
    let half = T::lit(0.5);
    let inner = v[1..v.len() - 1].iter().fold(T::zero(), |a, &x| a + x);
    dt * (inner + half * (v[0] + v[v.len() - 1]))
}

/// Running trapezoid integral, starting from exactly zero.
pub fn cumulative_trapezoid<T: Real>(v: &[T], dt: T) -> Vec<T> {
    let half = T::lit(0.5) * dt;
    let mut out = Vec::with_capacity(v.len());
    let mut acc = T::zero();
    out.push(acc);
    for w in v.windows(2) {
        acc = acc + half * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Second-order finite-difference derivative (one-sided at the ends).
fn gradient<T: Real>(v: &[T], dt: T) -> Vec<T> {
    let n = v.len();
    let two = T::lit(2.0);
    let mut out = vec![T::zero(); n];
    if n < 3 {
        if n == 2 {
            let d = (v[1] - v[0]) / dt;
            return vec![d, d];
        }
        return out;
    }
    out[0] = (T::lit(-3.0) * v[0] + T::lit(4.0) * v[1] - v[2]) / (two * dt);
    out[n - 1] = (T::lit(3.0) * v[n - 1] - T::lit(4.0) * v[n - 2] + v[n - 3]) / (two * dt);
    for i in 1..n - 1 {
        out[i] = (v[i + 1] - v[i - 1]) / (two * dt);
    }
    out
}

/// Analytic control shapes accepted by the command line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ControlFamily {
    /// `amplitude · cos(omega t)`.
    Cos { omega: f64, #[serde(default = "one")] amplitude: f64 },
    /// `amplitude · sin(omega t)`.
    Sin { omega: f64, #[serde(default = "one")] amplitude: f64 },
    /// `amplitude · dⁿ/dtⁿ [cos(omega t) g(t/T)]` with `g` the canonical bump,
    /// rescaled so that `‖v₁‖_∞ = 1` before the amplitude is applied. Its first
    /// `order` primitives vanish at `T`.
    BumpModulated {
        omega: f64,
        order: usize,
        #[serde(default = "one")]
        amplitude: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl ControlFamily {
    pub fn sample(&self, horizon: f64, steps: usize) -> Result<ControlSignal<f64>, ControlError> {
        match *self {
            ControlFamily::Cos { omega, amplitude } => {
                ControlSignal::from_fn(horizon, steps, |t| amplitude * (omega * t).cos())
            }
            ControlFamily::Sin { omega, amplitude } => {
                ControlSignal::from_fn(horizon, steps, |t| amplitude * (omega * t).sin())
            }
            ControlFamily::BumpModulated {
                omega,
                order,
                amplitude,
            } => {
                let v = windowed_derivative(horizon, steps, omega, order)?;
                let scale = if order == 0 {
                    let v1 = v.iterated_primitive(1).norm(Norm::Linf)?;
                    if v1 > 0.0 { 1.0 / v1 } else { 1.0 }
                } else {
                    let w1 = windowed_derivative(horizon, steps, omega, order - 1)?;
                    let m = w1.norm(Norm::Linf)?;
                    if m > 0.0 { 1.0 / m } else { 1.0 }
                };
                Ok(v.scaled(scale * amplitude))
            }
        }
    }
}

/// Samples of `dⁿ/dtⁿ [cos(ωt) g(t/T)]` by the Leibniz rule with exact bump
/// derivatives.
pub fn windowed_derivative(
    horizon: f64,
    steps: usize,
    omega: f64,
    n: usize,
) -> Result<ControlSignal<f64>, ControlError> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(ControlError::InvalidHorizon);
    }
    let prof = BumpProfile::<f64>::new(n);
    let binom = binomials(n);
    ControlSignal::from_fn(horizon, steps, |t| {
        let s = t / horizon;
        let mut acc = 0.0;
        for k in 0..=n {
            let carrier_order = n - k;
            let shift = carrier_order as f64 * std::f64::consts::FRAC_PI_2;
            let carrier = omega.powi(carrier_order as i32) * (omega * t + shift).cos();
            acc += binom[k] * carrier * prof.eval(s, k) / horizon.powi(k as i32);
        }
        acc
    })
}

fn binomials(n: usize) -> Vec<f64> {
    let mut row = vec![1.0];
    for _ in 0..n {
        let mut next = vec![1.0; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    row
}

/// Random trigonometric polynomial with `harmonics` harmonics of the base
/// frequency `2π/T`, standard normal coefficients, normalised to unit `L²`.
pub fn band_limited<R: Rng + ?Sized>(
    horizon: f64,
    steps: usize,
    harmonics: usize,
    rng: &mut R,
) -> Result<ControlSignal<f64>, ControlError> {
    let coeffs: Vec<(f64, f64)> = (0..=harmonics)
        .map(|_| {
            let a: f64 = StandardNormal.sample(rng);
            let b: f64 = StandardNormal.sample(rng);
            (a, b)
        })
        .collect();
    let base = 2.0 * std::f64::consts::PI / horizon;
    let u = ControlSignal::from_fn(horizon, steps, |t| {
        coeffs
            .iter()
            .enumerate()
            .map(|(k, &(a, b))| {
                let w = base * k as f64;
                a * (w * t).cos() + if k == 0 { 0.0 } else { b * (w * t).sin() }
            })
            .sum()
    })?;
    let n = u.norm(Norm::L2)?;
    Ok(if n > 0.0 { u.scaled(1.0 / n) } else { u })
}
