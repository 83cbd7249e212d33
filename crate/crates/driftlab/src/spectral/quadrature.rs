use serde::{Deserialize, Serialize};

use super::SpectralError;
use crate::Real;

/// Relative agreement required between successive refinements.
pub const ADAPTIVE_REL_TOL: f64 = 1e-13;

const MAX_REFINEMENTS: usize = 14;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// Nodes by Newton iteration on `P_n` from the Chebyshev-like initial
    /// guesses; the iteration runs in `f64` and is then converted.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "at least one node");
        let mut nodes = vec![0.0f64; n];
        let mut weights = vec![0.0f64; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre {
            nodes: nodes.into_iter().map(T::lit).collect(),
            weights: weights.into_iter().map(T::lit).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Composite rule with `panels` equal panels on `[a, b]`.
    pub fn composite<F: FnMut(T) -> T>(&self, mut f: F, a: T, b: T, panels: usize) -> T {
        let half = T::lit(0.5);
        let h = (b - a) / T::from_usize_lossy(panels);
        let mut acc = T::zero();
        for p in 0..panels {
            let lo = a + h * T::from_usize_lossy(p);
            let mid = lo + h * half;
            let mut s = T::zero();
            for (&x, &w) in self.nodes.iter().zip(&self.weights) {
                s = s + w * f(mid + h * half * x);
            }
            acc = acc + s * h * half;
        }
        acc
    }

    /// Composite rule for an integrand returning `(value, rounding scale)`;
    /// yields `(∫value, ∫scale)`.
    fn composite_with_scale<F: FnMut(T) -> (T, T)>(&self, f: &mut F, a: T, b: T, panels: usize) -> (T, T) {
        let half = T::lit(0.5);
        let h = (b - a) / T::from_usize_lossy(panels);
        let mut acc = T::zero();
        let mut mag = T::zero();
        for p in 0..panels {
            let mid = a + h * (T::from_usize_lossy(p) + half);
            for (&x, &w) in self.nodes.iter().zip(&self.weights) {
                let (v, m) = f(mid + h * half * x);
                acc = acc + w * v;
                mag = mag + w * m.abs();
            }
        }
        (acc * h * half, mag * h * half)
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre rule: `panels` equal panels of
/// `nodes_per_panel` nodes each, exact for polynomials of degree
/// `2·nodes_per_panel - 1` on every panel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub panels: usize,
    pub nodes_per_panel: usize,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        QuadratureRule {
            panels: 64,
            nodes_per_panel: 16,
        }
    }
}

impl QuadratureRule {
    pub fn new(panels: usize, nodes_per_panel: usize) -> Self {
        QuadratureRule {
            panels: panels.max(1),
            nodes_per_panel: nodes_per_panel.max(1),
        }
    }

    /// Panels needed for four panels per period of `cos(ωx)` over a length.
    pub fn required_panels(length: f64, omega: f64) -> usize {
        let periods = length * omega.abs() / (2.0 * std::f64::consts::PI);
        ((4.0 * periods).ceil() as usize).max(1)
    }

    /// Smallest rule (16 nodes per panel, at least 8 panels) resolving `ω`
    /// over an interval of the given length.
    pub fn for_frequency(length: f64, omega: f64) -> Self {
        QuadratureRule::new(Self::required_panels(length, omega).max(8), 16)
    }

    pub fn check_resolves(&self, length: f64, omega: f64) -> Result<(), SpectralError> {
        let required = Self::required_panels(length, omega);
        if self.panels < required {
            return Err(SpectralError::Resolution {
                panels: self.panels,
                required,
            });
        }
        Ok(())
    }

    pub fn integrate<T: Real, F: FnMut(T) -> T>(&self, f: F, a: T, b: T) -> T {
        GaussLegendre::new(self.nodes_per_panel).composite(f, a, b, self.panels)
    }
}

/// Doubles the panel count of a 16-node composite rule, starting from four
/// panels per period of `omega`, until two successive results agree to
/// [`ADAPTIVE_REL_TOL`] (or to a few ulps of `∫|f|` when the integral is
/// itself at rounding level).
pub fn integrate_adaptive<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    omega: f64,
) -> Result<T, SpectralError> {
    integrate_adaptive_scaled(
        |x| {
            let v = f(x);
            (v, v)
        },
        a,
        b,
        omega,
    )
}

/// As [`integrate_adaptive`] for integrands that report, next to their
/// value, the magnitude of the terms they were summed from; the rounding
/// floor is then measured against that magnitude instead of `|f|`.
pub fn integrate_adaptive_scaled<T: Real, F: FnMut(T) -> (T, T)>(
    mut f: F,
    a: T,
    b: T,
    omega: f64,
) -> Result<T, SpectralError> {
    let gl = GaussLegendre::<T>::new(16);
    let len = (b - a).to_f64().unwrap_or(1.0).abs();
    let mut panels = QuadratureRule::required_panels(len, omega).max(4);
    let (mut prev, _) = gl.composite_with_scale(&mut f, a, b, panels);
    let tol = T::lit(ADAPTIVE_REL_TOL);
    let floor = T::lit(64.0) * T::epsilon();
    for _ in 0..MAX_REFINEMENTS {
        panels *= 2;
        let (cur, mag) = gl.composite_with_scale(&mut f, a, b, panels);
        let diff = (cur - prev).abs();
        if diff <= tol * cur.abs() || diff <= floor * mag {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(SpectralError::NoConvergence(MAX_REFINEMENTS))
}
