//! Construction of compactly supported dipoles with prescribed obstruction
//! data `(⟨μφ₁,φ_K⟩, A¹_K, …, A^n_K) = (0, …, 0, ±1)`.
//!
//! The dipole is a sum of bumps with disjoint supports. On such sums every
//! `A^p_K` is a local quadratic form, so it splits into per-bump
//! contributions; `⟨μφ₁,φ_K⟩` is linear. That split is the inner model used
//! to fit amplitudes to a requested coefficient vector `a`. The outer loop
//! is the damped fixed point `a ← a - θ(F(μ_a) - x)` on the exact series
//! values of the assembled dipole.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::obstruction::{check_hypotheses, series_terms, CouplingTable, HypothesisReport, ObstructionError};
use crate::spectral::{cosine_moments, Bump, BumpProfile, DipoleMoment, GaussLegendre, Mode, SpectralError};

/// Mode cutoff of every coefficient evaluation in a design run.
pub const DESIGN_CUTOFF: usize = 4000;
pub const MAX_ITER: usize = 200;
pub const RHO0: f64 = 1e-2;
const RHO_HALVINGS: usize = 8;
const THETA0: f64 = 0.5;
const THETA_MIN: f64 = 1e-4;

// Layout along a side, in units of δ measured outward from x̄.
const SLOTS: (f64, f64) = (0.05, 0.7);
const PROBE: (f64, f64) = (0.75, 0.95);
const FILL: f64 = 0.4;
const NARROWING: f64 = 0.7;

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("invalid design geometry: {0}")]
    Geometry(String),
    #[error("fixed point did not converge after {iterations} iterations (scaled residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("no admissible step size down to rho = {rho:e}")]
    StepSize { rho: f64 },
    #[error(transparent)]
    Obstruction(#[from] ObstructionError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl FromStr for Sign {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "+" | "plus" | "+1" | "1" => Ok(Sign::Plus),
            "-" | "minus" | "-1" => Ok(Sign::Minus),
            _ => Err(format!("sign must be + or -, got {s:?}")),
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

fn phi1_phik(k: usize, x: f64) -> f64 {
    Mode::new(1).expect("mode 1").phi(x) * Mode::new(k).expect("mode k").phi(x)
}

fn constant_sign(k: usize, lo: f64, hi: f64) -> Option<f64> {
    const GRID: usize = 2000;
    let mut sign = 0.0;
    for i in 1..GRID {
        let v = phi1_phik(k, lo + (hi - lo) * i as f64 / GRID as f64);
        if v == 0.0 {
            return None;
        }
        if sign == 0.0 {
            sign = v.signum();
        } else if v.signum() != sign {
            return None;
        }
    }
    Some(sign)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSpec {
    pub k: usize,
    pub n: usize,
    pub sign: Sign,
    pub tol_zero: f64,
    pub tol_target: f64,
    pub x_bar: f64,
    pub delta: f64,
    /// `I_0, …, I_n` on the side where `sign(φ₁φ_K) = sign`.
    pub intervals: Vec<(f64, f64)>,
    /// Slots on the other side. `A¹_K = ⟨(μ')²φ₁φ_K⟩` is sign-definite on a
    /// side, so `A¹_K = 0` with `n ≥ 2` needs mass on both.
    pub counter_intervals: Vec<(f64, f64)>,
    pub cutoff: usize,
    pub max_iter: usize,
    pub rho0: f64,
}

impl DesignSpec {
    /// Default geometry: `x̄ = 1/K`, `δ` the largest half-width for which
    /// `φ₁φ_K` keeps its sign on both sides of `x̄`.
    pub fn new(k: usize, n: usize, sign: Sign) -> Result<Self, DesignError> {
        if k < 2 {
            return Err(DesignError::Geometry(format!("K must be at least 2, got {k}")));
        }
        if n == 0 {
            return Err(DesignError::Geometry("n must be at least 1".into()));
        }
        let x_bar = 1.0 / k as f64;
        let delta = sign_delta(k, x_bar);
        let dir = side_direction(k, x_bar, delta, sign)?;
        let intervals = side_slots(x_bar, dir, delta, n + 1);
        let counter_intervals = if n >= 2 { side_slots(x_bar, -dir, delta, n) } else { Vec::new() };
        let spec = DesignSpec {
            k,
            n,
            sign,
            tol_zero: 1e-8,
            tol_target: 1e-6,
            x_bar,
            delta,
            intervals,
            counter_intervals,
            cutoff: DESIGN_CUTOFF,
            max_iter: MAX_ITER,
            rho0: RHO0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_order(&self, n: usize) -> Result<Self, DesignError> {
        let mut s = Self::new(self.k, n, self.sign)?;
        s.cutoff = self.cutoff;
        s.tol_zero = self.tol_zero;
        s.tol_target = self.tol_target;
        s.max_iter = self.max_iter;
        s.rho0 = self.rho0;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), DesignError> {
        let geo = |m: String| Err(DesignError::Geometry(m));
        if (self.k as f64 * std::f64::consts::PI * self.x_bar).sin().abs() > 1e-12 {
            return geo(format!("x_bar = {} is not a node of φ_{}", self.x_bar, self.k));
        }
        if !(self.delta > 0.0) || self.x_bar - self.delta < 0.0 || self.x_bar + self.delta > 1.0 {
            return geo(format!("delta = {} does not fit around x_bar", self.delta));
        }
        if !(self.tol_zero > 0.0 && self.tol_target > 0.0 && self.rho0 > 0.0) {
            return geo("tolerances and rho must be positive".into());
        }
        if self.intervals.len() != self.n + 1 {
            return geo(format!("expected {} intervals, got {}", self.n + 1, self.intervals.len()));
        }
        let mut all: Vec<(f64, f64)> = self.intervals.iter().chain(&self.counter_intervals).copied().collect();
        let s = self.sign.value();
        for (i, &(lo, hi)) in all.iter().enumerate() {
            if !(lo > 0.0 && hi < 1.0 && lo < hi) {
                return geo(format!("interval ({lo}, {hi}) not inside (0,1)"));
            }
            if lo < self.x_bar - self.delta || hi > self.x_bar + self.delta {
                return geo(format!("interval ({lo}, {hi}) leaves (x_bar - delta, x_bar + delta)"));
            }
            let want = if i < self.intervals.len() { s } else { -s };
            if constant_sign(self.k, lo, hi) != Some(want) {
                return geo(format!("φ₁φ_K changes sign or has the wrong sign on ({lo}, {hi})"));
            }
        }
        all.sort_by(|a, b| a.0.total_cmp(&b.0));
        if all.windows(2).any(|w| w[0].1 >= w[1].0) {
            return geo("intervals overlap".into());
        }
        Ok(())
    }

    fn direction(&self) -> f64 {
        let (lo, hi) = self.intervals[0];
        (0.5 * (lo + hi) - self.x_bar).signum()
    }

    /// Region reserved for the scaled probe on the side of sign `s`.
    pub fn probe_region(&self, s: Sign) -> (f64, f64) {
        let dir = if s == self.sign { self.direction() } else { -self.direction() };
        span(self.x_bar, dir, self.delta, PROBE.0, PROBE.1)
    }
}

fn span(x_bar: f64, dir: f64, delta: f64, t0: f64, t1: f64) -> (f64, f64) {
    let (a, b) = (x_bar + dir * t0 * delta, x_bar + dir * t1 * delta);
    (a.min(b), a.max(b))
}

fn side_slots(x_bar: f64, dir: f64, delta: f64, count: usize) -> Vec<(f64, f64)> {
    let w = (SLOTS.1 - SLOTS.0) / count as f64;
    // small gaps keep the closures disjoint
    (0..count)
        .map(|j| {
            let t0 = SLOTS.0 + j as f64 * w;
            span(x_bar, dir, delta, t0 + 0.02 * w, t0 + 0.98 * w)
        })
        .collect()
}

/// Bisection for the largest `δ ≤ min(x̄, 1-x̄)` keeping `φ₁φ_K` of one sign
/// on each of `(x̄-δ, x̄)` and `(x̄, x̄+δ)`.
fn sign_delta(k: usize, x_bar: f64) -> f64 {
    let ok = |d: f64| constant_sign(k, x_bar - d, x_bar).is_some() && constant_sign(k, x_bar, x_bar + d).is_some();
    let max = x_bar.min(1.0 - x_bar);
    if ok(max) {
        return max;
    }
    let (mut lo, mut hi) = (0.0, max);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn side_direction(k: usize, x_bar: f64, delta: f64, sign: Sign) -> Result<f64, DesignError> {
    for dir in [1.0, -1.0] {
        let (lo, hi) = span(x_bar, dir, delta, 0.0, 1.0);
        if constant_sign(k, lo, hi) == Some(sign.value()) {
            return Ok(dir);
        }
    }
    Err(DesignError::Geometry(format!("no side of x_bar where φ₁φ_{k} has sign {sign}")))
}

fn slot_bump(interval: (f64, f64), level: usize, amplitude: f64) -> Bump<f64> {
    let (lo, hi) = interval;
    Bump::new(0.5 * (lo + hi), FILL * (hi - lo) * NARROWING.powi(level as i32), amplitude)
}

fn h1_of(mu: &DipoleMoment<f64>, k: usize) -> f64 {
    let m = cosine_moments(mu, k + 1);
    m[k - 1] - m[k + 1]
}

/// `μ₀`: one bump on `I_0` normalised to `⟨μ₀φ₁, φ_K⟩ = 1`.
pub fn mu0(spec: &DesignSpec) -> Result<DipoleMoment<f64>, DesignError> {
    let unit = DipoleMoment::bumps(vec![slot_bump(spec.intervals[0], 0, 1.0)])?;
    let h = h1_of(&unit, spec.k);
    if h.abs() < 1e-300 {
        return Err(DesignError::Geometry("μ₀ is orthogonal to the target pair".into()));
    }
    Ok(unit.scaled(1.0 / h))
}

/// `μ_i`: supported on `I_i` (on both sides for `i ≥ 2`), with
/// `⟨μφ₁,φ_K⟩ = 0`, `A^p_K = 0` for `p < i` and `A^i_K = ±1`.
pub fn base_mu(spec: &DesignSpec, level: usize) -> Result<DipoleMoment<f64>, DesignError> {
    if level == 0 || level > spec.n {
        return Err(DesignError::Geometry(format!("level {level} outside 1..={}", spec.n)));
    }
    if level >= 2 {
        return Ok(design_mu(&spec.with_order(level)?)?.mu);
    }
    // two bumps on the halves of I_1 cancelling ⟨μφ₁,φ_K⟩
    let (lo, hi) = spec.intervals[1];
    let mid = 0.5 * (lo + hi);
    let gap = 0.02 * (hi - lo);
    let a = slot_bump((lo, mid - gap), 0, 1.0);
    let b = slot_bump((mid + gap, hi), 0, 1.0);
    let ha = h1_of(&DipoleMoment::bumps(vec![a])?, spec.k);
    let hb = h1_of(&DipoleMoment::bumps(vec![b])?, spec.k);
    let mu = DipoleMoment::bumps(vec![a, Bump { amplitude: -ha / hb, ..b }])?;
    let table = CouplingTable::build(&mu, spec.k, spec.cutoff, 1)?;
    let a1 = resolved(&table, 1)?;
    Ok(mu.scaled(1.0 / a1.abs().sqrt()))
}

/// `∫₀¹ (g^{(d)})²` for the canonical profile.
fn profile_energy(d: usize) -> f64 {
    let g = BumpProfile::<f64>::new(d);
    GaussLegendre::new(20).composite(|y| g.eval(y, d).powi(2), 0.0, 1.0, 200)
}

/// The probe `μ̃_a = |a|^{2n-1} g((x - x_a)/|a|) / (‖g^{(2n-1)}‖ √|φ₁φ_K(x_a)|)`
/// centred in the probe region on the side where `φ₁φ_K` has the sign of
/// `a`, so that `A^n_K(μ̃_a) = a + O(|a|³)`.
pub fn scaled_probe(spec: &DesignSpec, a: f64) -> Result<DipoleMoment<f64>, DesignError> {
    if a == 0.0 || !a.is_finite() {
        return Err(DesignError::Geometry(format!("probe scale must be finite and nonzero, got {a}")));
    }
    let side = if a > 0.0 { Sign::Plus } else { Sign::Minus };
    let (lo, hi) = spec.probe_region(side);
    let x_a = 0.5 * (lo + hi);
    let w = a.abs();
    if x_a - 0.5 * w <= lo || x_a + 0.5 * w >= hi {
        return Err(DesignError::Geometry(format!(
            "probe of width {w} does not fit in ({lo}, {hi})"
        )));
    }
    let d = 2 * spec.n - 1;
    let amp = w.powi(d as i32) / (profile_energy(d).sqrt() * phi1_phik(spec.k, x_a).abs().sqrt());
    Ok(DipoleMoment::bumps(vec![Bump::new(x_a, 0.5 * w, amp)])?)
}

fn resolved(table: &CouplingTable, p: usize) -> Result<f64, DesignError> {
    let s = series_terms(table, p)?;
    if !s.is_resolved() {
        return Err(DesignError::Geometry(format!(
            "bump too narrow for the cutoff: A^{p} tail {:e} against {:e}",
            s.tail, s.value
        )));
    }
    Ok(s.value)
}

/// Per-bump data for unit amplitudes.
struct Dictionary {
    bumps: Vec<Bump<f64>>,
    moments: Vec<Vec<f64>>,
    h: Vec<f64>,
    /// `a_coef[p-1][i] = A^p_K` of bump `i`.
    a_coef: Vec<Vec<f64>>,
}

impl Dictionary {
    fn new(spec: &DesignSpec) -> Result<Self, DesignError> {
        let bumps: Vec<Bump<f64>> = spec
            .intervals
            .iter()
            .chain(&spec.counter_intervals)
            .enumerate()
            .map(|(i, &iv)| {
                let level = if i < spec.intervals.len() { i } else { i - spec.intervals.len() };
                slot_bump(iv, level, 1.0)
            })
            .collect();
        let mut moments = Vec::new();
        let mut h = Vec::new();
        let mut a_coef = vec![Vec::new(); spec.n];
        for b in &bumps {
            let m = cosine_moments(&DipoleMoment::bumps(vec![*b])?, spec.cutoff + spec.k);
            let t = CouplingTable::from_moments(&m, spec.k, spec.cutoff, spec.n)?;
            h.push(t.h1_residual());
            for (p, col) in a_coef.iter_mut().enumerate() {
                col.push(resolved(&t, p + 1)?);
            }
            moments.push(m);
        }
        Ok(Dictionary {
            bumps,
            moments,
            h,
            a_coef,
        })
    }

    fn len(&self) -> usize {
        self.bumps.len()
    }

    /// Exact coefficient vector of `Σ c_i β_i` from the combined moments.
    fn evaluate(&self, spec: &DesignSpec, c: &[f64]) -> Result<Vec<f64>, DesignError> {
        let mut m = vec![0.0; self.moments[0].len()];
        for (ci, mi) in c.iter().zip(&self.moments) {
            for (x, y) in m.iter_mut().zip(mi) {
                *x += ci * y;
            }
        }
        let t = CouplingTable::from_moments(&m, spec.k, spec.cutoff, spec.n)?;
        let mut out = vec![t.h1_residual()];
        for p in 1..=spec.n {
            out.push(series_terms(&t, p)?.value);
        }
        Ok(out)
    }

    /// The split model: `(Σ c_i h_i, Σ c_i² A^p_i)`.
    fn model(&self, c: &[f64]) -> Vec<f64> {
        let mut out = vec![c.iter().zip(&self.h).map(|(c, h)| c * h).sum()];
        out.extend(self.a_coef.iter().map(|col| c.iter().zip(col).map(|(c, a)| c * c * a).sum::<f64>()));
        out
    }

    /// Amplitudes with `model(c) = target`, by Gauss-Newton with minimum
    /// norm steps on a rescaled system, started from `warm`.
    fn fit(&self, target: &[f64], warm: &[f64]) -> Vec<f64> {
        let m = self.len();
        let rows = target.len();
        // c_i = d_i y_i puts every bump's leading coefficient at unit size
        let lead = &self.a_coef[rows - 2];
        let d: Vec<f64> = lead.iter().map(|a| 1.0 / a.abs().sqrt()).collect();
        let mut scale = vec![self.h.iter().zip(&d).fold(0.0_f64, |s, (h, d)| s.max((h * d).abs()))];
        scale.extend(
            self.a_coef
                .iter()
                .map(|col| col.iter().zip(&d).fold(0.0_f64, |s, (a, d)| s.max((a * d * d).abs()))),
        );
        let resid = |y: &[f64]| -> DVector<f64> {
            let c: Vec<f64> = y.iter().zip(&d).map(|(y, d)| y * d).collect();
            let f = self.model(&c);
            DVector::from_iterator(rows, (0..rows).map(|r| (f[r] - target[r]) / scale[r]))
        };
        let mut y: Vec<f64> = warm.iter().zip(&d).map(|(c, d)| c / d).collect();
        let mut r = resid(&y);
        for _ in 0..200 {
            let rn = r.norm();
            if rn < 1e-16 {
                break;
            }
            let jac = DMatrix::from_fn(rows, m, |row, i| {
                if row == 0 {
                    self.h[i] * d[i] / scale[0]
                } else {
                    2.0 * self.a_coef[row - 1][i] * d[i] * d[i] * y[i] / scale[row]
                }
            });
            let step = match jac.svd(true, true).solve(&r, 1e-14) {
                Ok(s) => s,
                Err(_) => break,
            };
            let mut lambda = 1.0;
            let mut improved = false;
            for _ in 0..40 {
                let trial: Vec<f64> = y.iter().zip(step.iter()).map(|(y, s)| y - lambda * s).collect();
                let rt = resid(&trial);
                if rt.norm() < rn {
                    y = trial;
                    r = rt;
                    improved = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !improved {
                break;
            }
        }
        y.iter().zip(&d).map(|(y, d)| y * d).collect()
    }

    fn initial(&self, spec: &DesignSpec, rho: f64) -> Vec<f64> {
        let lead = &self.a_coef[spec.n - 1];
        let main = spec.intervals.len();
        (0..self.len())
            .map(|i| {
                let alt = if i % 2 == 0 { 1.0 } else { -1.0 };
                let weight = if i < main { 1.0 } else { 0.3 };
                alt * weight * (0.25 * rho / main as f64 / lead[i].abs()).sqrt()
            })
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DesignResult {
    pub spec: DesignSpec,
    #[serde(skip)]
    pub mu: DipoleMoment<f64>,
    pub bumps: Vec<Bump<f64>>,
    /// `⟨μφ₁, φ_K⟩` of the returned dipole.
    pub h1_residual: f64,
    /// `A^p_K`, `p = 1..=n`, of the returned dipole.
    pub a: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub rho: f64,
    /// Scaled residual per fixed-point iteration; below one means converged.
    pub residual_history: Vec<f64>,
    pub hypotheses: HypothesisReport,
}

impl DesignResult {
    pub fn support(&self) -> (f64, f64) {
        self.mu
            .support()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(lo, hi)| (a.min(lo), b.max(hi)))
    }
}

/// Residual in units of the tolerances after the final rescale, with a
/// safety factor of two.
fn scaled_residual(spec: &DesignSpec, f: &[f64], x: &[f64], rescale: f64) -> f64 {
    let n = spec.n;
    let mut e = (f[0] - x[0]).abs() * rescale / spec.tol_zero;
    for p in 1..n {
        e = e.max((f[p] - x[p]).abs() * rescale * rescale / spec.tol_zero);
    }
    e = e.max((f[n] - x[n]).abs() * rescale * rescale / spec.tol_target);
    2.0 * e
}

enum Attempt {
    Done { c: Vec<f64>, iterations: usize, history: Vec<f64> },
    Stalled,
}

fn fixed_point(spec: &DesignSpec, dict: &Dictionary, rho: f64) -> Result<Attempt, DesignError> {
    let n = spec.n;
    let mut x = vec![0.0; n + 1];
    x[n] = spec.sign.value() * rho / 4.0;
    let rescale = 1.0 / (rho / 4.0).sqrt();
    let mut a = x.clone();
    let mut c = dict.fit(&a, &dict.initial(spec, rho));
    let mut f = dict.evaluate(spec, &c)?;
    let mut err = scaled_residual(spec, &f, &x, rescale);
    let mut history = vec![err];
    let mut theta = THETA0;
    let mut iterations = 0;
    while err >= 1.0 {
        if iterations >= spec.max_iter {
            return Err(DesignError::NoConvergence {
                iterations,
                residual: err,
            });
        }
        iterations += 1;
        let a_new: Vec<f64> = a.iter().zip(f.iter().zip(&x)).map(|(a, (f, x))| a - theta * (f - x)).collect();
        let c_new = dict.fit(&a_new, &c);
        let f_new = dict.evaluate(spec, &c_new)?;
        let err_new = scaled_residual(spec, &f_new, &x, rescale);
        history.push(err_new);
        if err_new > err {
            theta *= 0.5;
            if theta < THETA_MIN {
                return Ok(Attempt::Stalled);
            }
            continue;
        }
        (a, c, f, err) = (a_new, c_new, f_new, err_new);
    }
    Ok(Attempt::Done { c, iterations, history })
}

/// Runs the damped fixed point, halving `ρ` when the iteration stalls, and
/// verifies the result with [`check_hypotheses`] on the assembled dipole.
pub fn design_mu(spec: &DesignSpec) -> Result<DesignResult, DesignError> {
    spec.validate()?;
    let dict = Dictionary::new(spec)?;
    let mut rho = spec.rho0;
    for _ in 0..RHO_HALVINGS {
        if let Attempt::Done { c, iterations, history } = fixed_point(spec, &dict, rho)? {
            let rescale = 1.0 / (rho / 4.0).sqrt();
            let bumps: Vec<Bump<f64>> = dict
                .bumps
                .iter()
                .zip(&c)
                .filter(|(_, &c)| c != 0.0)
                .map(|(b, &c)| Bump {
                    amplitude: c * rescale,
                    ..*b
                })
                .collect();
            let mu = DipoleMoment::bumps(bumps.clone())?;
            let hypotheses = check_hypotheses(&mu, spec.k, spec.n, spec.cutoff)?;
            let a: Vec<f64> = (1..=spec.n).map(|p| hypotheses.a(p)).collect();
            let h1 = hypotheses.h1_residual;
            let converged = hypotheses.passes()
                && h1.abs() < spec.tol_zero
                && a[..spec.n - 1].iter().all(|v| v.abs() < spec.tol_zero)
                && (a[spec.n - 1] - spec.sign.value()).abs() < spec.tol_target;
            return Ok(DesignResult {
                spec: spec.clone(),
                mu,
                bumps,
                h1_residual: h1,
                a,
                iterations,
                converged,
                rho,
                residual_history: history,
                hypotheses,
            });
        }
        rho *= 0.5;
    }
    Err(DesignError::StepSize { rho })
}
