use serde::{Deserialize, Serialize};

use super::SpectralError;
use crate::Real;

/// Index `j >= 1` of the Dirichlet eigenpair `((jπ)², √2 sin(jπx))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Mode(usize);

impl Mode {
    pub fn new(j: usize) -> Result<Self, SpectralError> {
        if j == 0 {
            return Err(SpectralError::InvalidMode(j));
        }
        Ok(Mode(j))
    }

    pub fn index(self) -> usize {
        self.0
    }

    /// Wavenumber `jπ`.
    pub fn wavenumber<T: Real>(self) -> T {
        T::from_usize_lossy(self.0) * T::PI()
    }

    pub fn eigenvalue<T: Real>(self) -> T {
        let k = self.wavenumber::<T>();
        k * k
    }

    pub fn phi<T: Real>(self, x: T) -> T {
        self.phi_deriv(x, 0)
    }

    /// `φ_j^{(k)}(x) = √2 (jπ)^k sin(jπx + kπ/2)`, with the phase shift
    /// resolved exactly by `k mod 4`.
    pub fn phi_deriv<T: Real>(self, x: T, k: usize) -> T {
        let w = self.wavenumber::<T>();
        let (s, c) = (w * x).sin_cos();
        let scale = T::SQRT_2() * w.powi(k as i32);
        match k % 4 {
            0 => scale * s,
            1 => scale * c,
            2 => -scale * s,
            _ => -scale * c,
        }
    }
}

impl TryFrom<usize> for Mode {
    type Error = SpectralError;
    fn try_from(j: usize) -> Result<Self, Self::Error> {
        Mode::new(j)
    }
}

impl From<Mode> for usize {
    fn from(m: Mode) -> usize {
        m.0
    }
}

/// `λ_j = (jπ)²` in `f64`, for the dense loops of the spectral tables.
pub fn eigenvalue(j: usize) -> f64 {
    let k = j as f64 * std::f64::consts::PI;
    k * k
}
