//! Dirichlet sine basis on `(0,1)`, dipole moments and the quadratures used
//! to pair them.

mod basis;
mod bump;
mod dipole;
mod moments;
mod quadrature;

pub use basis::{eigenvalue, Mode};
pub use bump::{BumpProfile, BumpTransform, IBP_SWITCH_XI};
pub use dipole::{Bump, DipoleMoment, DipoleSpec, Representation, TrigTerm, DEFAULT_MAX_ORDER};
pub use moments::{
    coupling, coupling_adaptive, coupling_exact, cosine_moment, cosine_moments, overlap_integral,
    overlap_integral_scaled,
};
pub use quadrature::{integrate_adaptive, integrate_adaptive_scaled, GaussLegendre, QuadratureRule, ADAPTIVE_REL_TOL};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("mode index must be >= 1, got {0}")]
    InvalidMode(usize),
    #[error("derivative order {requested} exceeds the supported maximum {max}")]
    UnsupportedOrder { requested: usize, max: usize },
    #[error("point {0} lies outside [0, 1]")]
    OutOfDomain(f64),
    #[error("quadrature under-resolved: {panels} panels, {required} required")]
    Resolution { panels: usize, required: usize },
    #[error("adaptive quadrature did not settle after {0} refinements")]
    NoConvergence(usize),
    #[error("invalid dipole: {0}")]
    InvalidDipole(String),
}
