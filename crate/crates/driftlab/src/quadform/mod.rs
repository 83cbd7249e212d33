//! Quadratic kernels, the quadratic form `Q_n`, and the integration-by-parts
//! expansion of the second-order term with its boundary bookkeeping.
//!
//! Controls are read as piecewise-linear interpolants of their samples and
//! all integrals against the kernels are exact for that interpolant (see
//! [`exact`]). Identities between the pieces therefore hold to rounding.

mod exact;
mod kernel;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::controls::{band_limited, ControlError, ControlSignal};
use crate::obstruction::{coercivity_constants, series_a, ObstructionError};
use crate::spectral::eigenvalue;

pub use exact::{exp_moments, triangle_exp, triangle_moments, PiecewisePoly, TrianglePlan};
pub use kernel::{quadratic_kernel, ExpKernel, ExpTerm, KernelH};

/// Condition number above which a Vandermonde solve is flagged.
pub const VANDERMONDE_COND_WARN: f64 = 1e12;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum QuadformError {
    #[error("derivative order {order} exceeds the kernel regularity {max}")]
    Regularity { order: usize, max: usize },
    #[error("invalid horizon {0}")]
    InvalidHorizon(f64),
    #[error("point ({t}, {tau}) outside [0, {horizon}]²")]
    OutOfRange { t: f64, tau: f64, horizon: f64 },
    #[error("control grid too coarse: {panels} panels")]
    Resolution { panels: usize },
    #[error("control horizon {control} does not match kernel horizon {kernel}")]
    HorizonMismatch { control: f64, kernel: f64 },
    #[error("expected {expected} modes, got {got}")]
    ModeCount { expected: usize, got: usize },
    #[error("Vandermonde matrix singular (repeated frequencies)")]
    Singular,
    #[error(transparent)]
    Obstruction(#[from] ObstructionError),
    #[error(transparent)]
    Control(#[from] ControlError),
}

/// One step `m → m+1` of the induction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IbpStep {
    pub m: usize,
    /// `u_{m+1}(T)`.
    pub end_value: f64,
    /// `-u_{m+1}(T) ∫ u_{m+1}(τ) ∂₁^m∂₂^{m+1}H(T,τ) dτ`, evaluated directly.
    pub linear: Complex64,
    /// `u_{m+1}(T)²/2 · ∂₁^m∂₂^mH(T,T)`.
    pub square: Complex64,
}

/// All pieces of the expansion
/// `∬_{τ<t} u(t)u(τ)H = Σ_p D_p + ∬ u_n u_n ∂₁ⁿ∂₂ⁿH + Q̃_n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IbpExpansion {
    pub n: usize,
    pub lhs: Complex64,
    /// `D_p = ∫ u_p² (½ d/dt ∂₁^{p-1}∂₂^{p-1}H(t,t) - ∂₁^p∂₂^{p-1}H(t,t)) dt`, `p = 1..n`.
    pub diagonal_terms: Vec<Complex64>,
    pub remainder_double_integral: Complex64,
    /// `Q̃_n` evaluated from `u_p(T)` and `γ`.
    pub boundary_quadratic: Complex64,
    /// `γ_p = ∫ u_n(τ) ∂₁^p∂₂ⁿH(T,τ) dτ`, `p = 0..n-1`.
    pub gamma: Vec<Complex64>,
    /// `u_p(T)`, `p = 1..n`.
    pub end_values: Vec<f64>,
    pub steps: Vec<IbpStep>,
}

impl IbpExpansion {
    pub fn rhs(&self) -> Complex64 {
        self.diagonal_terms.iter().sum::<Complex64>() + self.remainder_double_integral + self.boundary_quadratic
    }

    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs()).norm()
    }

    /// The boundary total from the step-by-step terms, before the γ relation
    /// is applied.
    pub fn boundary_from_steps(&self) -> Complex64 {
        self.steps.iter().map(|s| s.linear + s.square).sum()
    }
}

fn check_grid(u: &ControlSignal<f64>) -> Result<PiecewisePoly, QuadformError> {
    if u.steps() < 2 {
        return Err(QuadformError::Resolution { panels: u.steps() });
    }
    Ok(PiecewisePoly::linear(u))
}

/// Runs the integration by parts `n` times on `∬_{τ<t} u(t)u(τ)H(t,τ)`.
pub fn ibp_expand(h: &ExpKernel, u: &ControlSignal<f64>, n: usize) -> Result<IbpExpansion, QuadformError> {
    if n >= 1 {
        h.derivative(n, n)?;
    }
    let p0 = check_grid(u)?;
    let t_end = p0.horizon();
    let up = p0.primitives(n);
    let d = |a: usize, b: usize| h.derivative(a, b).expect("order checked");
    let lhs = h.triangle(&up[0], &up[0]);

    let mut diagonal_terms = Vec::with_capacity(n);
    let mut steps = Vec::with_capacity(n);
    for m in 0..n {
        let hmm = d(m, m);
        let next = &up[m + 1];
        let sq = next.product(next);
        // ½ d/dt H_{m,m}(t,t) - H_{m+1,m}(t,t) per exponential
        let drift = ExpKernel::new(
            hmm.terms()
                .iter()
                .map(|x| ExpTerm {
                    weight: x.weight * Complex64::new(0.0, 0.5 * (x.alpha + x.beta) - x.alpha),
                    ..*x
                })
                .collect(),
        );
        diagonal_terms.push(drift.diagonal_integral(&sq));
        let end = next.end_value();
        steps.push(IbpStep {
            m,
            end_value: end,
            linear: -end * d(m, m + 1).section_integral(t_end, next),
            square: 0.5 * end * end * hmm.eval(t_end, t_end),
        });
    }
    let remainder_double_integral = if n == 0 {
        lhs
    } else {
        d(n, n).triangle(&up[n], &up[n])
    };
    let end_values: Vec<f64> = up.iter().skip(1).map(|p| p.end_value()).collect();
    let gamma: Vec<Complex64> = (0..n).map(|i| d(i, n).section_integral(t_end, &up[n])).collect();

    // γ^r_i = Σ_{s=r}^{n-1} (-1)^{s-r} u_{s+1}(T) H_{i,s}(T,T) + (-1)^{n-r} γ^n_i
    let gamma_at = |r: usize, i: usize| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for s in r..n {
            let sign = if (s - r) % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * end_values[s] * d(i, s).eval(t_end, t_end);
        }
        let sign = if (n - r) % 2 == 0 { 1.0 } else { -1.0 };
        acc + sign * gamma[i]
    };
    let mut boundary_quadratic = Complex64::new(0.0, 0.0);
    for m in 0..n {
        let e = end_values[m];
        boundary_quadratic += 0.5 * e * e * d(m, m).eval(t_end, t_end) - e * gamma_at(m + 1, m);
    }
    Ok(IbpExpansion {
        n,
        lhs,
        diagonal_terms,
        remainder_double_integral,
        boundary_quadratic,
        gamma,
        end_values,
        steps,
    })
}

fn check_horizon(kernel: &KernelH, s: &ControlSignal<f64>) -> Result<(), QuadformError> {
    let (a, b) = (s.horizon(), kernel.horizon());
    if (a - b).abs() > 1e-12 * b {
        return Err(QuadformError::HorizonMismatch { control: a, kernel: b });
    }
    Ok(())
}

/// `Q_n(s) = -A^n_K ∫ s² cos[(λ_K-λ₁)(t-T)] dt + ∬_{τ<t} s(t)s(τ)k_n(t,τ)`.
pub fn eval_qn(kernel: &KernelH, n: usize, s: &ControlSignal<f64>) -> Result<f64, QuadformError> {
    check_horizon(kernel, s)?;
    let a = series_a(kernel.table(), n)?;
    qn_with(kernel, a, n, s)
}

fn qn_with(kernel: &KernelH, a: f64, n: usize, s: &ControlSignal<f64>) -> Result<f64, QuadformError> {
    qn_poly(kernel, a, n, &check_grid(s)?)
}

/// `Q_n` of an arbitrary piecewise polynomial on the kernel horizon, with
/// `A^n_K` supplied by the caller.
pub fn qn_poly(kernel: &KernelH, a: f64, n: usize, p: &PiecewisePoly) -> Result<f64, QuadformError> {
    let omega = eigenvalue(kernel.k()) - eigenvalue(1);
    let diag = -a * p.product(&p).integral_cos_shifted(omega);
    let kn = kernel.k_n(n)?;
    Ok(diag + kn.triangle(p, p).im)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoercivityCheck {
    /// `-sign(A^n_K) Q_n(s)`.
    pub lhs: f64,
    /// `|A^n_K|/4 · ‖s‖²`.
    pub rhs: f64,
    pub pass: bool,
    /// `T < T*`; outside the regime the check is informative only.
    pub in_regime: bool,
}

impl CoercivityCheck {
    pub fn margin(&self) -> f64 {
        self.lhs - self.rhs
    }
}

pub fn coercivity_check(kernel: &KernelH, n: usize, s: &ControlSignal<f64>) -> Result<CoercivityCheck, QuadformError> {
    check_horizon(kernel, s)?;
    let c = coercivity_constants(kernel.table(), n)?;
    let q = qn_with(kernel, c.a_n, n, s)?;
    let p = PiecewisePoly::linear(s);
    let lhs = -c.a_n.signum() * q;
    let rhs = 0.25 * c.a_n.abs() * p.product(&p).integral();
    Ok(CoercivityCheck {
        lhs,
        rhs,
        pass: lhs >= rhs,
        in_regime: kernel.horizon() < c.t_star,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub trial: usize,
    /// `band-limited` or `resonant`.
    pub kind: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoercivitySweep {
    pub t_star: f64,
    pub horizon: f64,
    pub a_n: f64,
    pub rows: Vec<SweepRow>,
}

impl CoercivitySweep {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    /// Row with the smallest relative margin `(lhs - rhs)/rhs`.
    pub fn worst(&self) -> Option<&SweepRow> {
        let rel = |r: &SweepRow| if r.rhs > 0.0 { r.margin / r.rhs } else { f64::INFINITY };
        self.rows.iter().min_by(|a, b| rel(a).total_cmp(&rel(b)))
    }
}

/// Sweep settings; `harmonics` bounds the band of the random controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepConfig {
    pub trials: usize,
    pub t_frac: f64,
    pub seed: u64,
    pub steps: usize,
    pub harmonics: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            trials: 200,
            t_frac: 0.5,
            seed: 7,
            steps: 256,
            harmonics: 6,
        }
    }
}

/// Random band-limited controls on `(0, t_frac·T*)` plus the resonant
/// cosine `cos[(λ_K-λ₁)(t-T)]`.
pub fn coercivity_sweep(
    table: &crate::obstruction::CouplingTable,
    n: usize,
    cfg: SweepConfig,
) -> Result<CoercivitySweep, QuadformError> {
    let c = coercivity_constants(table, n)?;
    let horizon = cfg.t_frac * c.t_star;
    let kernel = KernelH::new(table.clone(), horizon)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let omega = eigenvalue(table.k) - eigenvalue(1);
    let mut rows = Vec::with_capacity(cfg.trials + 1);
    let mut push = |trial, kind, s: &ControlSignal<f64>| -> Result<(), QuadformError> {
        let q = qn_with(&kernel, c.a_n, n, s)?;
        let p = PiecewisePoly::linear(s);
        let lhs = -c.a_n.signum() * q;
        let rhs = 0.25 * c.a_n.abs() * p.product(&p).integral();
        rows.push(SweepRow {
            trial,
            kind,
            lhs,
            rhs,
            margin: lhs - rhs,
            pass: lhs >= rhs,
        });
        Ok(())
    };
    for trial in 0..cfg.trials {
        let s = band_limited(horizon, cfg.steps, cfg.harmonics, &mut rng)?;
        push(trial, "band-limited", &s)?;
    }
    let res = ControlSignal::from_fn(horizon, cfg.steps, |t| (omega * (t - horizon)).cos())?;
    push(cfg.trials, "resonant", &res)?;
    Ok(CoercivitySweep {
        t_star: c.t_star,
        horizon,
        a_n: c.a_n,
        rows,
    })
}

/// `∫₀ᵀ u(t) e^{iω(t-T)} dt` for the interpolant of `u`.
pub fn oscillatory_integral(u: &ControlSignal<f64>, omega: f64) -> Complex64 {
    let p = PiecewisePoly::linear(u);
    p.integral_exp(omega) * Complex64::cis(-omega * p.horizon())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VandermondeRecovery {
    /// Estimates of `u_p(T)`, `p = 1..n`; real parts of the complex solution.
    pub values: Vec<f64>,
    pub solution: Vec<Complex64>,
    pub residual: f64,
    pub condition: f64,
    pub ill_conditioned: bool,
}

/// Solves `Σ_p (-i[λ_j-λ₁])^{p-1} U_p = z_j` for the given modes.
pub fn vandermonde_recover(modes: &[usize], integrals: &[Complex64]) -> Result<VandermondeRecovery, QuadformError> {
    let n = modes.len();
    if integrals.len() != n {
        return Err(QuadformError::ModeCount {
            expected: n,
            got: integrals.len(),
        });
    }
    let l1 = eigenvalue(1);
    let omegas: Vec<f64> = modes.iter().map(|&j| eigenvalue(j) - l1).collect();
    for i in 0..n {
        for j in 0..i {
            if omegas[i] == omegas[j] {
                return Err(QuadformError::Singular);
            }
        }
    }
    let v = DMatrix::from_fn(n, n, |j, p| Complex64::new(0.0, -omegas[j]).powu(p as u32));
    let z = DVector::from_column_slice(integrals);
    let sol = v.clone().lu().solve(&z).ok_or(QuadformError::Singular)?;
    let sv = v.clone().singular_values();
    let condition = sv.max() / sv.min();
    let residual = (&v * &sol - &z).norm();
    Ok(VandermondeRecovery {
        values: sol.iter().map(|c| c.re).collect(),
        solution: sol.iter().copied().collect(),
        residual,
        condition,
        ill_conditioned: !(condition <= VANDERMONDE_COND_WARN),
    })
}
