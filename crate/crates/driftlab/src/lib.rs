//! Quadratic obstructions to small-time controllability of the bilinear
//! Schrödinger equation `i ψ_t = -ψ_xx - u(t) μ(x) ψ` on `(0,1)` with
//! Dirichlet boundary conditions.
//!
//! The crate is organised bottom-up:
//!
//! * [`spectral`]: sine basis, dipole moments with exact derivatives, quadrature.
//! * [`controls`]: sampled controls, iterated primitives, norms.
//! * [`obstruction`]: coupling tables, the coefficients `A^p_K` by series and
//!   by brackets, coercivity constants, hypothesis checks.
//! * [`quadform`]: quadratic kernels, the integration-by-parts expansion,
//!   coercivity of `Q_n`, Vandermonde recovery of boundary moments.
//! * [`pde_sim`]: Galerkin simulator and drift experiments.
//! * [`fd_model`]: the finite-dimensional counterpart `i X' = (H0 - u H1) X`.
//! * [`designer`]: construction of dipoles with prescribed coefficients.
//!
//! Low-level numerics (`spectral`, `controls`) are generic over [`Real`];
//! everything built on complex dynamics works in `f64`.

pub mod controls;
pub mod designer;
pub mod fd_model;
pub mod linalg;
pub mod obstruction;
pub mod pde_sim;
pub mod quadform;
pub mod spectral;

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point scalar accepted by the generic parts of the crate.
pub trait Real: Float + FloatConst + FromPrimitive + Debug + Send + Sync + 'static {
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub use num_complex::Complex64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Dipole = spectral::DipoleMoment<f64>;
pub type Bump = spectral::Bump<f64>;
pub type TrigTerm = spectral::TrigTerm<f64>;
pub type Quadrature = spectral::QuadratureRule;
pub type Control = controls::ControlSignal<f64>;

pub use designer::{design_mu, DesignResult, DesignSpec, Sign};
pub use fd_model::FiniteModel;
pub use obstruction::{AlphaTable, CouplingTable, ObstructionReport};
pub use pde_sim::{GalerkinModel, WaveFunction};
pub use spectral::Mode;
