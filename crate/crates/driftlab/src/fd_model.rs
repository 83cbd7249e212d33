//! The finite-dimensional system `i X' = (H0 - u(t) H1) X` with real
//! symmetric `H0`, `H1`, and its quadratic drift along a lost direction.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controls::ControlSignal;
use crate::linalg::{hermitian_exp_i, SymEigen};
use crate::pde_sim::{midpoints, split_hierarchy};
use crate::quadform::{quadratic_kernel, PiecewisePoly};

/// Tail size targeted by [`ad_series`].
pub const AD_SERIES_TOL: f64 = 1e-14;
const SYMMETRY_TOL: f64 = 1e-13;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum FdError {
    #[error("matrices must be square of equal size, got {0}×{1} and {2}×{3}")]
    Shape(usize, usize, usize, usize),
    #[error("matrix {0} is not symmetric")]
    NotSymmetric(&'static str),
    #[error("mode {k} outside 1..={p}")]
    InvalidMode { k: usize, p: usize },
    #[error("series truncated at k = {k_max}: tail bound {bound:e}")]
    Truncation { k_max: usize, bound: f64 },
    #[error("state has dimension {got}, model has {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("norm drift {0:e}")]
    Unstable(f64),
    #[error("second-order routes disagree: {explicit} vs {ode}")]
    Inconsistent { explicit: Complex64, ode: Complex64 },
}

/// Serialised form of a model: the two matrices as rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub h0: Vec<Vec<f64>>,
    pub h1: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct FiniteModel {
    h0: DMatrix<f64>,
    h1: DMatrix<f64>,
    /// Eigen-decomposition of `H0`; `φ_k` is column `k-1`.
    basis: SymEigen,
    /// `⟨H1 φ_b, φ_a⟩`.
    h1_eig: DMatrix<f64>,
}

impl FiniteModel {
    pub fn new(h0: DMatrix<f64>, h1: DMatrix<f64>) -> Result<Self, FdError> {
        let (r0, c0, r1, c1) = (h0.nrows(), h0.ncols(), h1.nrows(), h1.ncols());
        if r0 != c0 || r1 != c1 || r0 != r1 || r0 == 0 {
            return Err(FdError::Shape(r0, c0, r1, c1));
        }
        let sym = |m: &DMatrix<f64>| (m - m.transpose()).amax() <= SYMMETRY_TOL * m.amax().max(1.0);
        if !sym(&h0) {
            return Err(FdError::NotSymmetric("H0"));
        }
        if !sym(&h1) {
            return Err(FdError::NotSymmetric("H1"));
        }
        let basis = SymEigen::new(&h0);
        let h1_eig = basis.vectors.transpose() * &h1 * &basis.vectors;
        Ok(FiniteModel { h0, h1, basis, h1_eig })
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self, FdError> {
        let to = |rows: &[Vec<f64>]| {
            let n = rows.len();
            let m = rows.first().map_or(0, |r| r.len());
            if rows.iter().any(|r| r.len() != m) {
                return Err(FdError::Shape(n, m, n, m));
            }
            Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
        };
        Self::new(to(&spec.h0)?, to(&spec.h1)?)
    }

    pub fn spec(&self) -> ModelSpec {
        let rows = |m: &DMatrix<f64>| (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
        ModelSpec {
            h0: rows(&self.h0),
            h1: rows(&self.h1),
        }
    }

    /// The shipped 3×3 example: `H0 = diag(0, 1, 4)` with the `H1` returned
    /// by [`search_demo_h1`].
    pub fn demo() -> Self {
        let h0 = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0, 4.0]));
        Self::new(h0, search_demo_h1()).expect("demo matrices are symmetric")
    }

    pub fn dim(&self) -> usize {
        self.h0.nrows()
    }

    pub fn h0(&self) -> &DMatrix<f64> {
        &self.h0
    }

    pub fn h1(&self) -> &DMatrix<f64> {
        &self.h1
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.basis.values
    }

    /// `φ₁` as a complex state.
    pub fn ground(&self) -> DVector<Complex64> {
        self.phi(1).map(|v| Complex64::new(v, 0.0))
    }

    pub fn phi(&self, k: usize) -> DVector<f64> {
        self.basis.vectors.column(k - 1).into_owned()
    }

    fn check_mode(&self, k: usize) -> Result<(), FdError> {
        if k == 0 || k > self.dim() {
            return Err(FdError::InvalidMode { k, p: self.dim() });
        }
        Ok(())
    }

    /// `⟨H1 φ₁, φ_K⟩`.
    pub fn h1_coupling(&self, k: usize) -> f64 {
        self.h1_eig[(k - 1, 0)]
    }

    /// `c_j = ⟨H1φ₁,φ_j⟩⟨H1φ_K,φ_j⟩`.
    pub fn products(&self, k: usize) -> Vec<f64> {
        (0..self.dim()).map(|j| self.h1_eig[(j, 0)] * self.h1_eig[(j, k - 1)]).collect()
    }
}

fn commutator(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * b - b * a
}

/// `a¹_K = ⟨[H1, [H0, H1]] φ₁, φ_K⟩`.
pub fn a1k(model: &FiniteModel, k: usize) -> Result<f64, FdError> {
    model.check_mode(k)?;
    let c = commutator(&model.h1, &commutator(&model.h0, &model.h1));
    Ok(model.phi(k).dot(&(c * model.phi(1))))
}

/// Smallest `k` with `‖H0‖ (2|u₁| ‖H1‖)^k / k! < tol`.
pub fn required_terms(model: &FiniteModel, u1: f64, tol: f64) -> usize {
    let (n0, n1) = (model.h0.norm(), model.h1.norm());
    let x = 2.0 * u1.abs() * n1;
    let mut bound = n0;
    let mut k = 0;
    while bound >= tol && k < 10_000 {
        k += 1;
        bound *= x / k as f64;
    }
    k
}

/// `Σ_{k ≤ k_max} ((-iu₁)^k / k!) ad_{H1}^k(H0) = e^{-iH1u₁} H0 e^{iH1u₁}`.
pub fn ad_series(model: &FiniteModel, u1: f64, k_max: usize) -> Result<DMatrix<Complex64>, FdError> {
    let (n0, n1) = (model.h0.norm(), model.h1.norm());
    let x = 2.0 * u1.abs() * n1;
    let bound = n0 * (1..=k_max + 1).fold(1.0, |b, k| b * x / k as f64);
    if bound >= AD_SERIES_TOL && u1 != 0.0 {
        return Err(FdError::Truncation { k_max, bound });
    }
    let cplx = |m: &DMatrix<f64>| m.map(|v| Complex64::new(v, 0.0));
    let mut ad = model.h0.clone();
    let mut coef = Complex64::new(1.0, 0.0);
    let mut sum = cplx(&ad);
    for k in 1..=k_max {
        ad = commutator(&model.h1, &ad);
        coef *= Complex64::new(0.0, -u1) / k as f64;
        sum += cplx(&ad) * coef;
    }
    Ok(sum)
}

/// States at the control nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct FdTrajectory {
    pub states: Vec<DVector<Complex64>>,
    pub norm_drift: f64,
}

fn check_state(model: &FiniteModel, x0: &DVector<Complex64>) -> Result<(), FdError> {
    if x0.len() != model.dim() {
        return Err(FdError::Dimension {
            expected: model.dim(),
            got: x0.len(),
        });
    }
    Ok(())
}

/// Exponential midpoint steps `X ← e^{-i dt (H0 - u H1)} X`.
pub fn solve_fd(
    model: &FiniteModel,
    u: &ControlSignal<f64>,
    x0: &DVector<Complex64>,
    substeps: usize,
) -> Result<FdTrajectory, FdError> {
    check_state(model, x0)?;
    let (mids, dt) = midpoints(u, substeps);
    let s = substeps.max(1);
    let n0 = x0.norm();
    let mut x = x0.clone();
    let mut states = vec![x.clone()];
    let mut drift: f64 = 0.0;
    for (i, &um) in mids.iter().enumerate() {
        let step = SymEigen::new(&(&model.h0 - &model.h1 * um)).exp_i(-dt);
        x = step * x;
        if (i + 1) % s == 0 {
            drift = drift.max((x.norm() - n0).abs());
            states.push(x.clone());
        }
    }
    if drift > 1e-10 {
        return Err(FdError::Unstable(drift));
    }
    Ok(FdTrajectory {
        states,
        norm_drift: drift,
    })
}

/// The auxiliary state `X̃ = e^{-iH1u₁}X`, integrated directly from its own
/// equation `X̃' = -i (e^{-iH1u₁} H0 e^{iH1u₁}) X̃` by exponential midpoint
/// steps.
pub fn solve_aux(
    model: &FiniteModel,
    u: &ControlSignal<f64>,
    x0: &DVector<Complex64>,
    substeps: usize,
) -> Result<DVector<Complex64>, FdError> {
    check_state(model, x0)?;
    let s = substeps.max(1);
    let p1 = PiecewisePoly::linear(u).primitive();
    let dt = u.dt() / s as f64;
    let h1 = SymEigen::new(&model.h1);
    let h0 = model.h0.map(|v| Complex64::new(v, 0.0));
    let mut x = x0.clone();
    for i in 0..u.steps() * s {
        let u1 = p1.eval((i as f64 + 0.5) * dt);
        let conj = h1.exp_i(-u1);
        let gen = &conj * &h0 * conj.adjoint();
        x = hermitian_exp_i(&gen, -dt) * x;
    }
    Ok(x)
}

/// `e^{-iH1 s}`.
pub fn gauge(model: &FiniteModel, s: f64) -> DMatrix<Complex64> {
    SymEigen::new(&model.h1).exp_i(-s)
}

/// First and second-order terms at `T` around `X₁ = φ₁ e^{-iλ₁t}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FdOrders {
    /// `⟨X_L(T), φ_j⟩`, `j = 1..p`.
    pub x_l: Vec<Complex64>,
    /// `⟨X_Q(T), φ_K e^{-iλ₁T}⟩` from the explicit double sum.
    pub x_q: Complex64,
    /// The same from the split-step hierarchy, Richardson-extrapolated.
    pub x_q_ode: Complex64,
}

/// Relative agreement required between the two second-order routes.
pub const FD_ROUTE_TOL: f64 = 1e-7;

pub fn fd_first_second(
    model: &FiniteModel,
    u: &ControlSignal<f64>,
    k: usize,
    substeps: usize,
) -> Result<FdOrders, FdError> {
    model.check_mode(k)?;
    let lam = model.eigenvalues();
    let t = u.horizon();
    let p = PiecewisePoly::linear(u);
    let x_l = (0..model.dim())
        .map(|j| {
            let b = model.h1_eig[(j, 0)];
            if b == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            Complex64::new(0.0, b) * p.integral_exp(lam[j] - lam[0]) * Complex64::cis(-lam[j] * t)
        })
        .collect();
    let kernel = quadratic_kernel(lam, &model.products(k), k, t);
    let x_q = kernel.triangle(&p, &p);
    let run = |s: usize| {
        let (mids, dt) = midpoints(u, s);
        let mut x0 = vec![Complex64::new(0.0, 0.0); model.dim()];
        x0[0] = Complex64::new(1.0, 0.0);
        let [_, _, xq] = split_hierarchy(lam, &model.h1_eig, x0, &mids, dt);
        xq[k - 1] * Complex64::cis(lam[0] * t)
    };
    let (coarse, fine) = (run(substeps), run(2 * substeps));
    let x_q_ode = (fine * 4.0 - coarse) / 3.0;
    let scale = x_q.norm().max(x_q_ode.norm());
    if scale > 0.0 && (x_q - x_q_ode).norm() > FD_ROUTE_TOL * scale {
        return Err(FdError::Inconsistent { explicit: x_q, ode: x_q_ode });
    }
    Ok(FdOrders { x_l, x_q, x_q_ode })
}

/// `T* = min(|a¹_K|/(8C¹_K), π/(3(λ_K-λ₁)))`, the resonance cap omitted for `K = 1`.
pub fn fd_t_star(model: &FiniteModel, k: usize) -> Result<f64, FdError> {
    let a = a1k(model, k)?;
    let lam = model.eigenvalues();
    let c: f64 = model
        .products(k)
        .iter()
        .zip(lam)
        .map(|(c, &lj)| ((lj - lam[0]) * (lam[k - 1] - lj) * c).abs())
        .sum();
    let ratio = if c > 0.0 { a.abs() / (8.0 * c) } else { f64::INFINITY };
    let gap = lam[k - 1] - lam[0];
    let res = if k == 1 || gap <= 0.0 {
        f64::INFINITY
    } else {
        std::f64::consts::PI / (3.0 * gap)
    };
    Ok(ratio.min(res))
}

/// `Q(u₁) = -(a¹_K/2) ∫u₁² cos[(λ_K-λ₁)(t-T)] dt
///   + Σ_j ⟨[H0,H1]φ₁,φ_j⟩⟨[H0,H1]φ_j,φ_K⟩ ∬_{τ<t} u₁(t)u₁(τ) sin(...)`.
pub fn fd_q(model: &FiniteModel, k: usize, u1: &PiecewisePoly) -> Result<f64, FdError> {
    let a = a1k(model, k)?;
    let lam = model.eigenvalues();
    let t = u1.horizon();
    let diag = -0.5 * a * u1.product(u1).integral_cos_shifted(lam[k - 1] - lam[0]);
    // ∂₁∂₂h carries the factor -(λ_K-λ_j)(λ_j-λ₁) per mode, so its imaginary
    // part is the sine sum with the commutator weights
    let kernel = quadratic_kernel(lam, &model.products(k), k, t)
        .derivative(1, 1)
        .expect("finite sum");
    Ok(diag + kernel.triangle(u1, u1).im)
}

/// Brute-force search, over symmetric `H1` with entries in `{-1, 0, 1}`
/// ordered by number of nonzero entries then lexicographically, for the
/// first `H1` with `⟨H1e₁,e₂⟩ = 0` and `a¹₂ ≠ 0` when `H0 = diag(0,1,4)`.
pub fn search_demo_h1() -> DMatrix<f64> {
    let h0 = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0, 4.0]));
    let slots = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
    let mut candidates: Vec<[i8; 6]> = Vec::new();
    for code in 0..3usize.pow(6) {
        let mut e = [0i8; 6];
        let mut c = code;
        for v in e.iter_mut() {
            *v = [0, 1, -1][c % 3];
            c /= 3;
        }
        candidates.push(e);
    }
    candidates.sort_by_key(|e| (e.iter().filter(|&&v| v != 0).count(), *e));
    for e in candidates {
        let mut h1 = DMatrix::<f64>::zeros(3, 3);
        for (&(i, j), &v) in slots.iter().zip(&e) {
            h1[(i, j)] = v as f64;
            h1[(j, i)] = v as f64;
        }
        if h1[(1, 0)] != 0.0 {
            continue;
        }
        let c = commutator(&h1, &commutator(&h0, &h1));
        if c[(1, 0)] != 0.0 {
            return h1;
        }
    }
    unreachable!("the search space contains admissible matrices")
}
