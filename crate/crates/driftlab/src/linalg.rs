//! Symmetric eigen-decomposition and the unitary exponentials built from it.
//! Small matrices use cyclic Jacobi; large Galerkin matrices go to
//! nalgebra's tridiagonal QR.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

const MAX_SWEEPS: usize = 100;

/// Largest dimension handled by Jacobi.
pub const JACOBI_MAX_DIM: usize = 64;

/// `A = V diag(values) Vᵀ` for a real symmetric `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, sorted by increasing eigenvalue.
    pub vectors: DMatrix<f64>,
}

impl SymEigen {
    /// Symmetrises the input, then dispatches on size.
    pub fn new(a: &DMatrix<f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols(), "square matrix expected");
        let m = (a + a.transpose()) * 0.5;
        if m.nrows() <= JACOBI_MAX_DIM {
            Self::jacobi(m)
        } else {
            Self::qr(m)
        }
    }

    fn qr(m: DMatrix<f64>) -> Self {
        let e = nalgebra::SymmetricEigen::new(m);
        let n = e.eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| e.eigenvalues[i].total_cmp(&e.eigenvalues[j]));
        SymEigen {
            values: order.iter().map(|&i| e.eigenvalues[i]).collect(),
            vectors: DMatrix::from_fn(n, n, |r, c| e.eigenvectors[(r, order[c])]),
        }
    }

    /// Cyclic Jacobi rotations until the off-diagonal mass is at rounding
    /// level.
    pub fn jacobi(mut m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut v = DMatrix::<f64>::identity(n, n);
        let scale = m.norm();
        for _ in 0..MAX_SWEEPS {
            let mut off = 0.0;
            for p in 0..n {
                for q in p + 1..n {
                    off += m[(p, q)] * m[(p, q)];
                }
            }
            if off.sqrt() <= 1e-17 * scale || off == 0.0 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = m[(p, q)];
                    if apq.abs() <= 1e-300 {
                        continue;
                    }
                    let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                        m[(k, p)] = c * mkp - s * mkq;
                        m[(k, q)] = s * mkp + c * mkq;
                    }
                    for k in 0..n {
                        let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                        m[(p, k)] = c * mpk - s * mqk;
                        m[(q, k)] = s * mpk + c * mqk;
                    }
                    for k in 0..n {
                        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
        let values = order.iter().map(|&i| m[(i, i)]).collect();
        let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
        SymEigen { values, vectors }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `e^{isA}` as a dense unitary matrix.
    pub fn exp_i(&self, s: f64) -> DMatrix<Complex64> {
        let n = self.dim();
        let v = self.vectors.map(|x| Complex64::new(x, 0.0));
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            n,
            self.values.iter().map(|&l| Complex64::cis(s * l)),
        ));
        &v * d * v.transpose()
    }

    /// `x ← e^{isA} x` without forming the matrix, applied as
    /// `x + V (e^{isΛ} - 1) Vᵀ x` so that the rounding defect of `V` enters
    /// proportionally to `s`.
    pub fn apply_exp_i(&self, s: f64, x: &mut [Complex64], work: &mut Vec<Complex64>) {
        let n = self.dim();
        work.clear();
        work.resize(n, Complex64::new(0.0, 0.0));
        let v = &self.vectors;
        for (k, w) in work.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (r, xr) in x.iter().enumerate() {
                acc += xr * v[(r, k)];
            }
            let half = 0.5 * s * self.values[k];
            // e^{iθ} - 1 = 2i sin(θ/2) e^{iθ/2}
            *w = acc * Complex64::new(0.0, 2.0 * half.sin()) * Complex64::cis(half);
        }
        for (r, xr) in x.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, w) in work.iter().enumerate() {
                acc += w * v[(r, k)];
            }
            *xr += acc;
        }
    }
}

/// `e^{isH}` for a Hermitian `H`, through the real symmetric embedding
/// `[[Re H, -Im H], [Im H, Re H]]`.
pub fn hermitian_exp_i(h: &DMatrix<Complex64>, s: f64) -> DMatrix<Complex64> {
    let n = h.nrows();
    let big = DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let (rb, cb) = (r / n, c / n);
        let z = h[(r % n, c % n)];
        match (rb, cb) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            _ => z.im,
        }
    });
    hermitian_exp_direct(h, s, &SymEigen::new(&big))
}

fn hermitian_exp_direct(h: &DMatrix<Complex64>, s: f64, eig: &SymEigen) -> DMatrix<Complex64> {
    // each eigenpair of H appears twice in the embedding, as (u, v) and
    // (-v, u); summing over all 2n real eigenvectors and halving gives
    // Σ e^{isλ} w w* with w = u + iv
    let n = h.nrows();
    let mut out = DMatrix::<Complex64>::zeros(n, n);
    for k in 0..2 * n {
        let w: Vec<Complex64> = (0..n)
            .map(|r| Complex64::new(eig.vectors[(r, k)], eig.vectors[(r + n, k)]))
            .collect();
        let ph = Complex64::cis(s * eig.values[k]) * 0.5;
        for r in 0..n {
            for c in 0..n {
                out[(r, c)] += ph * w[r] * w[c].conj();
            }
        }
    }
    out
}

/// `max |UᴴU - I|`.
pub fn unitarity_defect(u: &DMatrix<Complex64>) -> f64 {
    let n = u.nrows();
    let g = u.adjoint() * u - DMatrix::<Complex64>::identity(n, n);
    g.iter().fold(0.0, |m, z| m.max(z.norm()))
}
