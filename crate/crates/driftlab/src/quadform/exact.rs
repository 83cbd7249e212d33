//! Exact integration of piecewise polynomials against complex exponentials.
//!
//! Every control handled here is the continuous piecewise-linear interpolant
//! of its samples, and its primitives are the exact primitives of that
//! interpolant. Integrals against `e^{iωt}` are then evaluated in closed form
//! panel by panel, so no frequency has to be resolved by the time grid.

use num_complex::Complex64;

use crate::controls::ControlSignal;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `E_k(θ) = ∫₀¹ x^k e^{iθx} dx` for `k = 0..=kmax`.
///
/// Upward recurrence `E_k = (e^{iθ} - k E_{k-1}) / (iθ)` while `k ≤ |θ|`,
/// downward `E_{k-1} = (e^{iθ} - iθ E_k) / k` beyond; each direction is
/// stable where it is used.
pub fn exp_moments(theta: f64, kmax: usize) -> Vec<Complex64> {
    let e = Complex64::cis(theta);
    let it = I * theta;
    let mut out = vec![Complex64::new(0.0, 0.0); kmax + 1];
    let split = theta.abs().floor() as usize;
    let up_to = if theta.abs() >= 1.0 { split.min(kmax + 1) } else { 0 };
    if up_to > 0 {
        out[0] = (e - 1.0) / it;
        for k in 1..up_to {
            out[k] = (e - out[k - 1] * k as f64) / it;
        }
    }
    if up_to <= kmax {
        let top = kmax.max(split) + 40;
        let mut ek = e / (top as f64 + 1.0);
        for k in (up_to + 1..=top).rev() {
            let prev = (e - it * ek) / k as f64;
            if k - 1 <= kmax {
                out[k - 1] = prev;
            }
            ek = prev;
        }
    }
    out
}

/// `W_{m,k} = ∫₀¹ x^m e^{iθa x} ∫₀^x y^k e^{iθb y} dy dx` for
/// `m ≤ mmax`, `k ≤ kmax`, row-major in `m`.
pub fn triangle_moments(theta_a: f64, theta_b: f64, mmax: usize, kmax: usize) -> Vec<Complex64> {
    let mut w = vec![Complex64::new(0.0, 0.0); (mmax + 1) * (kmax + 1)];
    if theta_b.abs() <= (kmax + 1) as f64 {
        // inner integral as a power series in θb
        let mut terms = Vec::new();
        let mut coef = Complex64::new(1.0, 0.0);
        for q in 0..200usize {
            if q > 0 {
                coef = coef * (I * theta_b) / q as f64;
            }
            if coef.norm() < 1e-18 && q as f64 > theta_b.abs() {
                break;
            }
            terms.push(coef);
        }
        let e = exp_moments(theta_a, mmax + kmax + terms.len() + 1);
        for m in 0..=mmax {
            for k in 0..=kmax {
                let mut acc = Complex64::new(0.0, 0.0);
                for (q, c) in terms.iter().enumerate() {
                    acc += c * e[m + k + q + 1] / (k + q + 1) as f64;
                }
                w[m * (kmax + 1) + k] = acc;
            }
        }
    } else {
        // ∫₀^x y^k e^{iθb y} dy = e^{iθb x} P_k(x) + d_k
        let inv = 1.0 / (I * theta_b);
        let mut polys: Vec<Vec<Complex64>> = Vec::with_capacity(kmax + 1);
        let mut consts = Vec::with_capacity(kmax + 1);
        polys.push(vec![inv]);
        consts.push(-inv);
        for k in 1..=kmax {
            let mut p = vec![Complex64::new(0.0, 0.0); k + 1];
            p[k] = inv;
            for (r, v) in polys[k - 1].iter().enumerate() {
                p[r] -= v * (k as f64) * inv;
            }
            polys.push(p);
            consts.push(-consts[k - 1] * (k as f64) * inv);
        }
        let e_sum = exp_moments(theta_a + theta_b, mmax + kmax);
        let e_a = exp_moments(theta_a, mmax);
        for m in 0..=mmax {
            for k in 0..=kmax {
                let mut acc = consts[k] * e_a[m];
                for (r, v) in polys[k].iter().enumerate() {
                    acc += v * e_sum[m + r];
                }
                w[m * (kmax + 1) + k] = acc;
            }
        }
    }
    w
}

/// Phases `e^{iω t_i}`, `t_i = i·dt`, recomputed exactly every 64 steps.
pub(crate) fn phases(omega: f64, dt: f64, n: usize) -> Vec<Complex64> {
    let step = Complex64::cis(omega * dt);
    let mut out = Vec::with_capacity(n);
    let mut cur = Complex64::new(1.0, 0.0);
    for i in 0..n {
        if i % 64 == 0 {
            cur = Complex64::cis(omega * (i as f64 * dt));
        }
        out.push(cur);
        cur *= step;
    }
    out
}

/// Piecewise polynomial on a uniform grid of `[0, T]`: on panel `i`,
/// `p(t_i + x·dt) = Σ_k coeffs[i][k] x^k`, `x ∈ [0,1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewisePoly {
    dt: f64,
    degree: usize,
    coeffs: Vec<f64>,
}

impl PiecewisePoly {
    /// The piecewise-linear interpolant of the samples.
    pub fn linear(u: &ControlSignal<f64>) -> Self {
        let v = u.values();
        let coeffs = v.windows(2).flat_map(|w| [w[0], w[1] - w[0]]).collect();
        PiecewisePoly {
            dt: u.dt(),
            degree: 1,
            coeffs,
        }
    }

    pub fn zeros(dt: f64, panels: usize) -> Self {
        PiecewisePoly {
            dt,
            degree: 0,
            coeffs: vec![0.0; panels],
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn panels(&self) -> usize {
        self.coeffs.len() / (self.degree + 1)
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.panels() as f64
    }

    pub fn panel(&self, i: usize) -> &[f64] {
        let s = self.degree + 1;
        &self.coeffs[i * s..(i + 1) * s]
    }

    /// Exact primitive vanishing at `t = 0`.
    pub fn primitive(&self) -> Self {
        let d = self.degree + 1;
        let mut coeffs = Vec::with_capacity(self.panels() * (d + 1));
        let mut acc = 0.0;
        for i in 0..self.panels() {
            let p = self.panel(i);
            coeffs.push(acc);
            let mut inc = 0.0;
            for (k, &a) in p.iter().enumerate() {
                let c = self.dt * a / (k + 1) as f64;
                coeffs.push(c);
                inc += c;
            }
            acc += inc;
        }
        PiecewisePoly {
            dt: self.dt,
            degree: d,
            coeffs,
        }
    }

    /// `[p, P, PP, …]`: the polynomial and its first `n` primitives.
    pub fn primitives(&self, n: usize) -> Vec<Self> {
        let mut out = vec![self.clone()];
        for _ in 0..n {
            let next = out.last().expect("nonempty").primitive();
            out.push(next);
        }
        out
    }

    pub fn product(&self, other: &Self) -> Self {
        assert_eq!(self.panels(), other.panels());
        let d = self.degree + other.degree;
        let mut coeffs = vec![0.0; self.panels() * (d + 1)];
        for i in 0..self.panels() {
            let (a, b) = (self.panel(i), other.panel(i));
            let out = &mut coeffs[i * (d + 1)..(i + 1) * (d + 1)];
            for (r, &x) in a.iter().enumerate() {
                for (s, &y) in b.iter().enumerate() {
                    out[r + s] += x * y;
                }
            }
        }
        PiecewisePoly {
            dt: self.dt,
            degree: d,
            coeffs,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.panels();
        let pos = (t / self.dt).clamp(0.0, n as f64);
        let i = (pos.floor() as usize).min(n - 1);
        let x = pos - i as f64;
        self.panel(i).iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Value at `t = T`.
    pub fn end_value(&self) -> f64 {
        self.panel(self.panels() - 1).iter().sum()
    }

    /// Values at the grid nodes `t_0..t_N`.
    pub fn node_values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = (0..self.panels()).map(|i| self.panel(i)[0]).collect();
        v.push(self.end_value());
        v
    }

    pub fn integral(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.panels() {
            acc += self
                .panel(i)
                .iter()
                .enumerate()
                .map(|(k, &a)| a / (k + 1) as f64)
                .sum::<f64>();
        }
        acc * self.dt
    }

    /// `∫₀ᵀ p(t) e^{iωt} dt`.
    pub fn integral_exp(&self, omega: f64) -> Complex64 {
        let e = exp_moments(omega * self.dt, self.degree);
        let ph = phases(omega, self.dt, self.panels());
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, z) in ph.iter().enumerate() {
            let s: Complex64 = self.panel(i).iter().zip(&e).map(|(&a, &m)| m * a).sum();
            acc += z * s;
        }
        acc * self.dt
    }

    /// `∫₀ᵀ p(t) cos(ω(t - T)) dt`.
    pub fn integral_cos_shifted(&self, omega: f64) -> f64 {
        (self.integral_exp(omega) * Complex64::cis(-omega * self.horizon())).re
    }
}

/// `∫₀ᵀ f(t) e^{iαt} ∫₀ᵗ g(τ) e^{iβτ} dτ dt`, exact for piecewise polynomials.
pub fn triangle_exp(f: &PiecewisePoly, g: &PiecewisePoly, alpha: f64, beta: f64) -> Complex64 {
    TrianglePlan::new(f.dt, f.degree, g.degree, alpha, beta).apply(f, g)
}

/// Panel tables for one exponential pair, reusable across many controls on
/// the same grid.
#[derive(Clone, Debug)]
pub struct TrianglePlan {
    dt: f64,
    df: usize,
    dg: usize,
    alpha: f64,
    beta: f64,
    ea: Vec<Complex64>,
    eb: Vec<Complex64>,
    w: Vec<Complex64>,
}

impl TrianglePlan {
    pub fn new(dt: f64, df: usize, dg: usize, alpha: f64, beta: f64) -> Self {
        TrianglePlan {
            dt,
            df,
            dg,
            alpha,
            beta,
            ea: exp_moments(alpha * dt, df),
            eb: exp_moments(beta * dt, dg),
            w: triangle_moments(alpha * dt, beta * dt, df, dg),
        }
    }

    pub fn apply(&self, f: &PiecewisePoly, g: &PiecewisePoly) -> Complex64 {
        assert!(f.degree <= self.df && g.degree <= self.dg);
        assert_eq!(f.panels(), g.panels());
        let n = f.panels();
        let pa = phases(self.alpha, self.dt, n);
        let pb = phases(self.beta, self.dt, n);
        let mut inner = Complex64::new(0.0, 0.0);
        let mut outer = Complex64::new(0.0, 0.0);
        let mut diag = Complex64::new(0.0, 0.0);
        let ks = self.dg + 1;
        for i in 0..n {
            let (fp, gp) = (f.panel(i), g.panel(i));
            let fa: Complex64 = fp.iter().zip(&self.ea).map(|(&a, &m)| m * a).sum();
            let gb: Complex64 = gp.iter().zip(&self.eb).map(|(&a, &m)| m * a).sum();
            let mut t = Complex64::new(0.0, 0.0);
            for (m, &a) in fp.iter().enumerate() {
                for (k, &b) in gp.iter().enumerate() {
                    t += self.w[m * ks + k] * (a * b);
                }
            }
            outer += pa[i] * fa * inner;
            diag += pa[i] * pb[i] * t;
            inner += pb[i] * gb * self.dt;
        }
        outer * self.dt + diag * (self.dt * self.dt)
    }
}
