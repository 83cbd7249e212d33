//! Galerkin simulation of `i ψ_t = -ψ_xx - u(t) μ(x) ψ` in the first `J`
//! sine modes, the expansion terms around the ground state, and the drift
//! experiments.
//!
//! Time stepping is a split step: exact free phases `e^{-iΛ dt/2}` around a
//! unitary coupling kick `e^{i dt u M}` with `u` taken at the step midpoint.
//! The control is the piecewise-linear interpolant of its samples, as in
//! [`crate::quadform`].

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::controls::{ControlError, ControlSignal};
use crate::linalg::SymEigen;
use crate::obstruction::{check_hypotheses, series_a, CouplingTable, ObstructionError, MIN_CUTOFF};
use crate::quadform::{qn_poly, KernelH, PiecewisePoly, QuadformError};
use crate::spectral::{cosine_moments, eigenvalue, DipoleMoment};

/// Default mode cutoff of the simulator.
pub const DEFAULT_MODES: usize = 60;
/// Allowed `|‖c(T)‖ - 1|` over a run.
pub const NORM_TOL: f64 = 1e-8;
/// Allowed relative disagreement between the two second-order routes.
pub const ROUTE_TOL: f64 = 1e-7;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SimError {
    #[error("at least one mode is required")]
    NoModes,
    #[error("state has {got} modes, model has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("initial state not normalised: ‖c‖ = {0}")]
    NotNormalised(f64),
    #[error("norm drift {0:e} exceeds tolerance")]
    Unstable(f64),
    #[error("second-order routes disagree: kernel {kernel}, hierarchy {hierarchy}")]
    Inconsistent { kernel: Complex64, hierarchy: Complex64 },
    #[error("hypotheses fail for K = {k}, n = {n}")]
    Hypotheses { k: usize, n: usize },
    #[error("mode {0} outside the model")]
    InvalidMode(usize),
    #[error("control has zero quadratic drift, cannot normalise")]
    ZeroDrift,
    #[error(transparent)]
    Obstruction(#[from] ObstructionError),
    #[error(transparent)]
    Quadform(#[from] QuadformError),
    #[error(transparent)]
    Control(#[from] ControlError),
}

/// Coefficients `c_j`, `j = 1..J`, of `ψ(t) = Σ c_j φ_j`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WaveFunction {
    pub coeffs: Vec<Complex64>,
    pub t: f64,
}

impl WaveFunction {
    /// `φ_k` at `t = 0`.
    pub fn mode(j: usize, k: usize) -> Result<Self, SimError> {
        if k == 0 || k > j {
            return Err(SimError::InvalidMode(k));
        }
        let mut coeffs = vec![ZERO; j];
        coeffs[k - 1] = Complex64::new(1.0, 0.0);
        Ok(WaveFunction { coeffs, t: 0.0 })
    }

    pub fn ground(j: usize) -> Self {
        Self::mode(j, 1).expect("j ≥ 1")
    }

    /// The free ground state `φ₁ e^{-iλ₁t}`.
    pub fn free_ground(j: usize, t: f64) -> Self {
        let mut w = Self::ground(j);
        w.coeffs[0] = Complex64::cis(-eigenvalue(1) * t);
        w.t = t;
        w
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `c_k`.
    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs[k - 1]
    }

    /// `⟨ψ, φ_K e^{-iλ₁t}⟩`.
    pub fn lost_direction(&self, k: usize) -> Complex64 {
        self.coeff(k) * Complex64::cis(eigenvalue(1) * self.t)
    }

    pub fn sub(&self, other: &Self) -> Self {
        WaveFunction {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
            t: self.t,
        }
    }

    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        WaveFunction {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b * s).collect(),
            t: self.t,
        }
    }
}

/// `Λ = diag((jπ)²)` and `M[a][b] = ⟨μφ_b, φ_a⟩` on the first `J` modes.
#[derive(Clone, Debug)]
pub struct GalerkinModel {
    mu: DipoleMoment<f64>,
    lambda: Vec<f64>,
    m: DMatrix<f64>,
    eig: SymEigen,
}

impl GalerkinModel {
    pub fn new(mu: &DipoleMoment<f64>, j: usize) -> Result<Self, SimError> {
        if j == 0 {
            return Err(SimError::NoModes);
        }
        let mom = cosine_moments(mu, 2 * j);
        let m = DMatrix::from_fn(j, j, |a, b| mom[a.abs_diff(b)] - mom[a + b + 2]);
        let eig = SymEigen::new(&m);
        Ok(GalerkinModel {
            mu: mu.clone(),
            lambda: (1..=j).map(eigenvalue).collect(),
            m,
            eig,
        })
    }

    pub fn modes(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn coupling(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn mu(&self) -> &DipoleMoment<f64> {
        &self.mu
    }

    /// Coupling table restricted to the model's modes, so that kernel
    /// quantities describe exactly the truncated dynamics.
    pub fn coupling_table(&self, k: usize, n: usize) -> Result<CouplingTable, SimError> {
        if k == 0 || k > self.modes() {
            return Err(SimError::InvalidMode(k));
        }
        let full = CouplingTable::build(&self.mu, k, self.modes().max(MIN_CUTOFF), n)?;
        Ok(full.truncated(self.modes()))
    }

    fn free_half(&self, c: &mut [Complex64], dt: f64) {
        for (x, l) in c.iter_mut().zip(&self.lambda) {
            *x *= Complex64::cis(-0.5 * dt * l);
        }
    }
}

/// Midpoint control values of each sub-step, with the step length.
pub(crate) fn midpoints(u: &ControlSignal<f64>, substeps: usize) -> (Vec<f64>, f64) {
    let s = substeps.max(1);
    let v = u.values();
    let dt = u.dt() / s as f64;
    let mut out = Vec::with_capacity(u.steps() * s);
    for w in v.windows(2) {
        for k in 0..s {
            let x = (k as f64 + 0.5) / s as f64;
            out.push(w[0] + (w[1] - w[0]) * x);
        }
    }
    (out, dt)
}

/// States at the control nodes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub states: Vec<WaveFunction>,
    /// Largest `|‖c‖ - 1|` seen.
    pub norm_drift: f64,
}

impl Trajectory {
    pub fn last(&self) -> &WaveFunction {
        self.states.last().expect("nonempty")
    }
}

fn check_state(model: &GalerkinModel, psi0: &WaveFunction) -> Result<(), SimError> {
    if psi0.dim() != model.modes() {
        return Err(SimError::DimensionMismatch {
            expected: model.modes(),
            got: psi0.dim(),
        });
    }
    let n = psi0.norm();
    if (n - 1.0).abs() > 1e-12 {
        return Err(SimError::NotNormalised(n));
    }
    Ok(())
}

/// Integrates `i ċ = Λc - u(t)Mc`, recording the state at every control node.
pub fn solve_schrodinger(
    model: &GalerkinModel,
    u: &ControlSignal<f64>,
    psi0: &WaveFunction,
    substeps: usize,
) -> Result<Trajectory, SimError> {
    check_state(model, psi0)?;
    let (mids, dt) = midpoints(u, substeps);
    let s = substeps.max(1);
    let mut c = psi0.coeffs.clone();
    let mut work = Vec::new();
    let mut states = Vec::with_capacity(u.steps() + 1);
    states.push(psi0.clone());
    let mut drift: f64 = 0.0;
    for (i, &um) in mids.iter().enumerate() {
        model.free_half(&mut c, dt);
        if um != 0.0 {
            model.eig.apply_exp_i(dt * um, &mut c, &mut work);
        }
        model.free_half(&mut c, dt);
        if (i + 1) % s == 0 {
            let w = WaveFunction {
                coeffs: c.clone(),
                t: psi0.t + (i + 1) as f64 * dt,
            };
            drift = drift.max((w.norm() - 1.0).abs());
            states.push(w);
        }
    }
    if drift > NORM_TOL {
        return Err(SimError::Unstable(drift));
    }
    Ok(Trajectory {
        states,
        norm_drift: drift,
    })
}

/// Final state only.
pub fn propagate(
    model: &GalerkinModel,
    u: &ControlSignal<f64>,
    psi0: &WaveFunction,
    substeps: usize,
) -> Result<WaveFunction, SimError> {
    check_state(model, psi0)?;
    let (mids, dt) = midpoints(u, substeps);
    let mut c = psi0.coeffs.clone();
    let mut work = Vec::new();
    for &um in &mids {
        model.free_half(&mut c, dt);
        if um != 0.0 {
            model.eig.apply_exp_i(dt * um, &mut c, &mut work);
        }
        model.free_half(&mut c, dt);
    }
    let w = WaveFunction {
        coeffs: c,
        t: psi0.t + u.horizon(),
    };
    let drift = (w.norm() - 1.0).abs();
    if drift > NORM_TOL {
        return Err(SimError::Unstable(drift));
    }
    Ok(w)
}

/// `Ψ(T) = i Σ_j ⟨μφ₁, φ_j⟩ (∫₀ᵀ u e^{i(λ_j-λ₁)τ} dτ) φ_j e^{-iλ_jT}`.
pub fn first_order(model: &GalerkinModel, u: &ControlSignal<f64>) -> WaveFunction {
    let p = PiecewisePoly::linear(u);
    let t = u.horizon();
    let l1 = eigenvalue(1);
    let coeffs = (0..model.modes())
        .map(|a| {
            let b = model.m[(a, 0)];
            if b == 0.0 {
                return ZERO;
            }
            let la = model.lambda[a];
            Complex64::new(0.0, b) * p.integral_exp(la - l1) * Complex64::cis(-la * t)
        })
        .collect();
    WaveFunction { coeffs, t }
}

/// `(ψ₁, Ψ, ξ)` at `T` from the split-step scheme applied to the
/// block-triangular hierarchy; these are exactly the ε⁰, ε¹, ε² terms of
/// [`propagate`] run on `εu`.
pub fn hierarchy(model: &GalerkinModel, u: &ControlSignal<f64>, substeps: usize) -> [WaveFunction; 3] {
    let (mids, dt) = midpoints(u, substeps);
    let x0 = WaveFunction::ground(model.modes()).coeffs;
    let t = u.horizon();
    split_hierarchy(&model.lambda, &model.m, x0, &mids, dt).map(|coeffs| WaveFunction { coeffs, t })
}

/// The split step on `i d/dt (x₀,x₁,x₂) = (Λx₀, Λx₁ - uMx₀, Λx₂ - uMx₁)`,
/// where the kick `exp(i s M ⊗ N)` is exact because the level shift `N` is
/// nilpotent.
pub(crate) fn split_hierarchy(
    lambda: &[f64],
    m: &DMatrix<f64>,
    x0: Vec<Complex64>,
    mids: &[f64],
    dt: f64,
) -> [Vec<Complex64>; 3] {
    let j = lambda.len();
    let half: Vec<Complex64> = lambda.iter().map(|l| Complex64::cis(-0.5 * dt * l)).collect();
    let mul = |x: &[Complex64], out: &mut [Complex64]| {
        for a in 0..j {
            let mut acc = ZERO;
            for b in 0..j {
                acc += x[b] * m[(a, b)];
            }
            out[a] = acc;
        }
    };
    let mut x0 = x0;
    let mut x1 = vec![ZERO; j];
    let mut x2 = vec![ZERO; j];
    let (mut m0, mut m1, mut mm0) = (vec![ZERO; j], vec![ZERO; j], vec![ZERO; j]);
    for &um in mids {
        for x in [&mut x0, &mut x1, &mut x2] {
            x.iter_mut().zip(&half).for_each(|(v, h)| *v *= h);
        }
        let s = Complex64::new(0.0, dt * um);
        mul(&x0, &mut m0);
        mul(&x1, &mut m1);
        mul(&m0, &mut mm0);
        for a in 0..j {
            x2[a] += s * m1[a] + 0.5 * s * s * mm0[a];
            x1[a] += s * m0[a];
        }
        for x in [&mut x0, &mut x1, &mut x2] {
            x.iter_mut().zip(&half).for_each(|(v, h)| *v *= h);
        }
    }
    [x0, x1, x2]
}

/// Richardson extrapolation of [`hierarchy`] from `substeps` and
/// `2·substeps`; the split-step error expands in even powers of `dt`.
pub fn hierarchy_extrapolated(model: &GalerkinModel, u: &ControlSignal<f64>, substeps: usize) -> [WaveFunction; 3] {
    let coarse = hierarchy(model, u, substeps);
    let fine = hierarchy(model, u, 2 * substeps);
    let mut out = fine.clone();
    for (o, (f, c)) in out.iter_mut().zip(fine.iter().zip(&coarse)) {
        for (x, (a, b)) in o.coeffs.iter_mut().zip(f.coeffs.iter().zip(&c.coeffs)) {
            *x = (a * 4.0 - b) / 3.0;
        }
    }
    out
}

/// `⟨ξ(T), φ_K e^{-iλ₁T}⟩` by both routes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SecondOrder {
    /// `∬_{τ<t} u(t)u(τ)h(t,τ)`.
    pub kernel: Complex64,
    /// Projection of the extrapolated hierarchy solution.
    pub hierarchy: Complex64,
}

impl SecondOrder {
    pub fn relative_gap(&self) -> f64 {
        let scale = self.kernel.norm().max(self.hierarchy.norm());
        if scale == 0.0 {
            0.0
        } else {
            (self.kernel - self.hierarchy).norm() / scale
        }
    }
}

pub fn second_order_k(
    model: &GalerkinModel,
    u: &ControlSignal<f64>,
    k: usize,
    substeps: usize,
) -> Result<SecondOrder, SimError> {
    let table = model.coupling_table(k, 1)?;
    let h = KernelH::new(table, u.horizon())?;
    let p = PiecewisePoly::linear(u);
    let kernel = h.kernel().triangle(&p, &p);
    let [_, _, xi] = hierarchy_extrapolated(model, u, substeps);
    let out = SecondOrder {
        kernel,
        hierarchy: xi.lost_direction(k),
    };
    if out.relative_gap() > ROUTE_TOL {
        return Err(SimError::Inconsistent {
            kernel: out.kernel,
            hierarchy: out.hierarchy,
        });
    }
    Ok(out)
}

/// `ψ̃ = e^{-i u₁ μ} ψ` in the Galerkin basis.
pub fn auxiliary_transform(model: &GalerkinModel, psi: &WaveFunction, u1_t: f64) -> WaveFunction {
    let mut c = psi.coeffs.clone();
    if u1_t == 0.0 {
        return psi.clone();
    }
    let mut work = Vec::new();
    model.eig.apply_exp_i(-u1_t, &mut c, &mut work);
    WaveFunction { coeffs: c, t: psi.t }
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).map(|(a, b)| (a.ln(), b.ln())).collect();
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 / n, b + p.1 / n));
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (px, py) in &pts {
        sxx += (px - mx) * (px - mx);
        sxy += (px - mx) * (py - my);
    }
    sxy / sxx
}

/// The default ε ladder: 8 geometric points from 1e-3 to 3e-2.
pub fn default_eps_ladder() -> Vec<f64> {
    let (a, b) = (1e-3f64, 3e-2f64);
    (0..8).map(|i| a * (b / a).powf(i as f64 / 7.0)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpansionRow {
    pub eps: f64,
    /// `‖ψ - ψ₁‖`, `‖ψ - ψ₁ - εΨ‖`, `‖ψ - ψ₁ - εΨ - ε²ξ‖` at `T`.
    pub residuals: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpansionFit {
    pub rows: Vec<ExpansionRow>,
    pub slopes: [f64; 3],
    /// Some remainder fell to the rounding floor inside the ladder.
    pub floor_warning: bool,
}

/// Residual floor under which a remainder is treated as rounding noise.
const RESIDUAL_FLOOR: f64 = 1e-13;

/// Remainders of the expansion of `ψ(T)` for `u = εv`, measured in the
/// Galerkin norm over all modes, with their log-log slopes.
pub fn expansion_order_fit(
    model: &GalerkinModel,
    v: &ControlSignal<f64>,
    eps_list: &[f64],
    substeps: usize,
) -> Result<ExpansionFit, SimError> {
    let j = model.modes();
    let [psi1, big_psi, xi] = hierarchy(model, v, substeps);
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let psi = propagate(model, &v.scaled(eps), &WaveFunction::ground(j), substeps)?;
        let r1 = psi.sub(&psi1);
        let r2 = r1.axpy(-eps, &big_psi);
        let r3 = r2.axpy(-eps * eps, &xi);
        rows.push(ExpansionRow {
            eps,
            residuals: [r1.norm(), r2.norm(), r3.norm()],
        });
    }
    let mut slopes = [f64::NAN; 3];
    let mut floor_warning = false;
    for (i, s) in slopes.iter_mut().enumerate() {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.eps > 0.0 && r.residuals[i] > RESIDUAL_FLOOR)
            .map(|r| (r.eps, r.residuals[i]))
            .collect();
        if pts.len() < rows.iter().filter(|r| r.eps > 0.0).count() {
            floor_warning = true;
        }
        if pts.len() >= 2 {
            let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            *s = log_slope(&x, &y);
        }
    }
    Ok(ExpansionFit {
        rows,
        slopes,
        floor_warning,
    })
}

/// Settings of a drift experiment.
#[derive(Clone, Debug)]
pub struct DriftSetup {
    pub k: usize,
    pub n: usize,
    /// Cutoff of the coupling table used for `A^n_K` and `Q_n`.
    pub cutoff: usize,
    pub substeps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftRow {
    pub eps: f64,
    /// `Im⟨ψ(T), φ_K e^{-iλ₁T}⟩`.
    pub r: f64,
    /// `Q_n(u_n)`.
    pub qn: f64,
    /// `-A^n_K ‖u_n‖²`.
    pub leading: f64,
    pub un_l2sq: f64,
    /// `‖(ψ - ψ₁)(T)‖²`.
    pub psi_dev_sq: f64,
    /// `-sign(A^n_K) r > 0`.
    pub verdict: bool,
}

impl DriftRow {
    pub fn ratio(&self) -> f64 {
        self.r / self.qn
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftReport {
    pub k: usize,
    pub n: usize,
    pub horizon: f64,
    pub a_n: f64,
    pub t_star: Option<f64>,
    pub rows: Vec<DriftRow>,
}

/// Runs `u = εv` for each ε and records the drift on the lost direction
/// against the quadratic prediction. Refuses to run when the hypotheses for
/// `(K, n)` fail.
pub fn drift_experiment(
    model: &GalerkinModel,
    setup: &DriftSetup,
    v: &ControlSignal<f64>,
    eps_list: &[f64],
) -> Result<DriftReport, SimError> {
    let (k, n) = (setup.k, setup.n);
    let hyp = check_hypotheses(model.mu(), k, n, setup.cutoff)?;
    if !hyp.passes() {
        return Err(SimError::Hypotheses { k, n });
    }
    let table = CouplingTable::build(model.mu(), k, setup.cutoff, n)?;
    let a_n = series_a(&table, n)?;
    let t_star = crate::obstruction::coercivity_constants(&table, n).ok().map(|c| c.t_star);
    let horizon = v.horizon();
    let kernel = KernelH::new(table, horizon)?;
    let vn = PiecewisePoly::linear(v).primitives(n).pop().expect("n+1 entries");
    let q_unit = qn_poly(&kernel, a_n, n, &vn)?;
    let vn_sq = vn.product(&vn).integral();
    let j = model.modes();
    let free = WaveFunction::free_ground(j, horizon);
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        // ε = 0 is free evolution, where r vanishes exactly
        let psi = if eps == 0.0 {
            free.clone()
        } else {
            propagate(model, &v.scaled(eps), &WaveFunction::ground(j), setup.substeps)?
        };
        let r = if eps == 0.0 { 0.0 } else { psi.lost_direction(k).im };
        let e2 = eps * eps;
        rows.push(DriftRow {
            eps,
            r,
            qn: e2 * q_unit,
            leading: -a_n * e2 * vn_sq,
            un_l2sq: e2 * vn_sq,
            psi_dev_sq: psi.sub(&free).norm().powi(2),
            verdict: -a_n.signum() * r > 0.0,
        });
    }
    Ok(DriftReport {
        k,
        n,
        horizon,
        a_n,
        t_star,
        rows,
    })
}

/// `Q_n(v_n)` of the unscaled control, with `A^n_K` and the kernel taken
/// from a coupling table at `cutoff`.
pub fn unit_drift(
    mu: &DipoleMoment<f64>,
    k: usize,
    n: usize,
    cutoff: usize,
    v: &ControlSignal<f64>,
) -> Result<f64, SimError> {
    let table = CouplingTable::build(mu, k, cutoff, n)?;
    let a_n = series_a(&table, n)?;
    let kernel = KernelH::new(table, v.horizon())?;
    let vn = PiecewisePoly::linear(v).primitives(n).pop().expect("n+1 entries");
    Ok(qn_poly(&kernel, a_n, n, &vn)?)
}

/// Rescales `v` so that the predicted drift `ε² |Q_n(v_n)|` equals `target`.
///
/// Narrow dipoles have tiny `T*`, and a unit control on such a horizon
/// predicts a drift far below rounding; this puts it at a chosen level.
pub fn normalise_drift(
    mu: &DipoleMoment<f64>,
    (k, n, cutoff): (usize, usize, usize),
    v: &ControlSignal<f64>,
    eps: f64,
    target: f64,
) -> Result<ControlSignal<f64>, SimError> {
    let q = unit_drift(mu, k, n, cutoff, v)?;
    if q == 0.0 || !q.is_finite() {
        return Err(SimError::ZeroDrift);
    }
    Ok(v.scaled((target / (eps * eps * q.abs())).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controls::{band_limited, ControlFamily};
    use crate::quadform::ibp_expand;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn linear_model(j: usize) -> GalerkinModel {
        GalerkinModel::new(&DipoleMoment::centered_linear(), j).unwrap()
    }

    fn random_u(seed: u64, horizon: f64, amp: f64) -> ControlSignal<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        band_limited(horizon, 400, 4, &mut rng).unwrap().scaled(amp)
    }

    #[test]
    fn model_is_symmetric_with_known_entry() {
        let m = linear_model(20);
        assert_eq!(m.coupling(), &m.coupling().transpose());
        let b12 = -16.0 / (9.0 * std::f64::consts::PI.powi(2));
        assert!((m.coupling()[(1, 0)] - b12).abs() < 1e-13);
    }

    #[test]
    fn free_evolution_is_exact() {
        let m = linear_model(30);
        let u = ControlSignal::zeros(0.05, 100).unwrap();
        let psi0 = WaveFunction::mode(30, 3).unwrap();
        let tr = solve_schrodinger(&m, &u, &psi0, 1).unwrap();
        for w in &tr.states {
            let expect = Complex64::cis(-eigenvalue(3) * w.t);
            assert!((w.coeff(3) - expect).norm() < 1e-12);
            assert!(w.coeffs.iter().enumerate().all(|(i, c)| i == 2 || c.norm() == 0.0));
        }
    }

    #[test]
    fn norm_is_conserved() {
        let m = linear_model(40);
        let u = random_u(1, 0.05, 200.0);
        let tr = solve_schrodinger(&m, &u, &WaveFunction::ground(40), 2).unwrap();
        assert!(tr.norm_drift < 1e-10);
    }

    #[test]
    fn second_order_in_dt() {
        let m = linear_model(20);
        let u = ControlSignal::from_fn(0.05, 50, |t: f64| 40.0 * (90.0 * t).sin()).unwrap();
        let psi0 = WaveFunction::ground(20);
        let reference = propagate(&m, &u, &psi0, 64).unwrap();
        let errs: Vec<f64> = [2usize, 4, 8]
            .iter()
            .map(|&s| propagate(&m, &u, &psi0, s).unwrap().sub(&reference).norm())
            .collect();
        let slope = -log_slope(&[2.0, 4.0, 8.0], &errs);
        assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn first_order_zero_and_lost_direction() {
        let m = linear_model(30);
        let z = ControlSignal::zeros(0.05, 50).unwrap();
        assert!(first_order(&m, &z).norm() == 0.0);
        let u = random_u(2, 0.05, 1.0);
        let psi = first_order(&m, &u);
        assert!(psi.coeff(1).norm() < 1e-12);
        assert!(psi.coeff(2).norm() > 1e-4);
    }

    #[test]
    fn first_order_matches_hierarchy() {
        let m = linear_model(30);
        let u = random_u(3, 0.02, 1.0);
        let explicit = first_order(&m, &u);
        let [_, psi, _] = hierarchy_extrapolated(&m, &u, 8);
        let gap = explicit.sub(&psi).norm();
        assert!(gap < 1e-9, "gap {gap}");
    }

    #[test]
    fn second_order_routes_agree() {
        let m = linear_model(30);
        for seed in 0..3 {
            let u = random_u(10 + seed, 0.02, 1.0);
            let r = second_order_k(&m, &u, 1, 8).unwrap();
            assert!(r.relative_gap() < 1e-7, "gap {}", r.relative_gap());
        }
        let z = ControlSignal::zeros(0.02, 10).unwrap();
        assert_eq!(second_order_k(&m, &z, 1, 1).unwrap().kernel, ZERO);
    }

    #[test]
    fn second_order_matches_ibp_route() {
        let m = linear_model(30);
        let table = m.coupling_table(1, 1).unwrap();
        let horizon = 0.01;
        let u = random_u(21, horizon, 1.0);
        let r = second_order_k(&m, &u, 1, 8).unwrap();
        let h = KernelH::new(table.clone(), horizon).unwrap();
        let e = ibp_expand(h.kernel(), &u, 1).unwrap();
        let a = crate::obstruction::series_terms(&table, 1).unwrap().value;
        let u1 = PiecewisePoly::linear(&u).primitive();
        let q = qn_poly(&h, a, 1, &u1).unwrap();
        let via = q + e.boundary_quadratic.im;
        assert!((r.kernel.im - via).abs() < 1e-7 * r.kernel.norm(), "{} vs {via}", r.kernel.im);
    }

    #[test]
    fn auxiliary_transform_is_unitary_and_invertible() {
        let m = linear_model(25);
        let u = random_u(4, 0.02, 100.0);
        let psi = propagate(&m, &u, &WaveFunction::ground(25), 1).unwrap();
        assert_eq!(auxiliary_transform(&m, &psi, 0.0), psi);
        let t = auxiliary_transform(&m, &psi, 0.37);
        assert!((t.norm() - psi.norm()).abs() < 1e-13);
        let back = auxiliary_transform(&m, &t, -0.37);
        assert!(back.sub(&psi).norm() < 1e-12);
    }

    #[test]
    fn gauge_relation_along_trajectory() {
        // the transformed state evolves under the u₁-dependent generator; a
        // split step on that generator from the same data must agree
        let m = linear_model(20);
        let u = ControlSignal::from_fn(0.01, 200, |t: f64| 30.0 * (400.0 * t).cos()).unwrap();
        let tr = solve_schrodinger(&m, &u, &WaveFunction::ground(20), 4).unwrap();
        let u1 = u.iterated_primitive(1);
        // auxiliary dynamics: i ψ̃' = e^{-iu₁M} Λ e^{iu₁M} ψ̃, stepped with the
        // midpoint exponential of the conjugated generator
        let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(m.lambda().to_vec()));
        let lam_c = lam.map(|x| Complex64::new(x, 0.0));
        let mut x = WaveFunction::ground(20).coeffs;
        let sub = 8;
        let dt = u.dt() / sub as f64;
        let p1 = PiecewisePoly::linear(&u).primitive();
        for i in 0..u.steps() * sub {
            let tm = (i as f64 + 0.5) * dt;
            let conj = m.eig.exp_i(-p1.eval(tm));
            let gen = &conj * &lam_c * conj.adjoint();
            let step = crate::linalg::hermitian_exp_i(&gen, -dt);
            x = (step * nalgebra::DVector::from_vec(x)).iter().copied().collect();
        }
        let direct = auxiliary_transform(&m, tr.last(), u1.last());
        let gap = WaveFunction { coeffs: x, t: 0.01 }.sub(&direct).norm();
        assert!(gap < 1e-4, "gap {gap}");
    }

    #[test]
    fn expansion_slopes_for_linear_dipole() {
        let m = linear_model(DEFAULT_MODES);
        let v = ControlFamily::BumpModulated {
            omega: 40.0,
            order: 1,
            amplitude: 1.0,
        }
        .sample(0.05, 1000)
        .unwrap();
        let fit = expansion_order_fit(&m, &v, &default_eps_ladder(), 1).unwrap();
        for (i, s) in fit.slopes.iter().enumerate() {
            assert!((s - (i + 1) as f64).abs() < 0.2, "slopes {:?}", fit.slopes);
        }
        let zero = expansion_order_fit(&m, &v, &[0.0], 1).unwrap();
        assert!(zero.rows[0].residuals.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn drift_ratio_linear_dipole() {
        let m = linear_model(DEFAULT_MODES);
        let table = CouplingTable::build(&DipoleMoment::centered_linear(), 1, 2000, 1).unwrap();
        let t_star = crate::obstruction::coercivity_constants(&table, 1).unwrap().t_star;
        let v = ControlFamily::BumpModulated {
            omega: 0.0,
            order: 1,
            amplitude: 1.0,
        }
        .sample(0.5 * t_star, 800)
        .unwrap();
        let setup = DriftSetup {
            k: 1,
            n: 1,
            cutoff: 2000,
            substeps: 1,
        };
        let mut eps = vec![0.0];
        eps.extend(default_eps_ladder());
        let rep = drift_experiment(&m, &setup, &v, &eps).unwrap();
        assert_eq!(rep.rows[0].r, 0.0);
        let small = &rep.rows[1];
        assert!((small.ratio() - 1.0).abs() < 0.1, "ratio {}", small.ratio());
        assert!(rep.rows[1..].iter().all(|r| r.verdict));
    }

    #[test]
    fn normalised_drift_hits_target() {
        let mu = DipoleMoment::centered_linear();
        let v = ControlFamily::BumpModulated {
            omega: 0.0,
            order: 1,
            amplitude: 1.0,
        }
        .sample(0.003, 400)
        .unwrap();
        let w = normalise_drift(&mu, (1, 1, 2000), &v, 1e-3, 1e-12).unwrap();
        let q = unit_drift(&mu, 1, 1, 2000, &w).unwrap();
        assert!((1e-6 * q.abs() / 1e-12 - 1.0).abs() < 1e-12);
        let z = ControlSignal::zeros(0.003, 10).unwrap();
        assert_eq!(normalise_drift(&mu, (1, 1, 2000), &z, 1e-3, 1e-12), Err(SimError::ZeroDrift));
    }
}
