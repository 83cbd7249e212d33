use serde::Serialize;

use super::ObstructionError;
use crate::spectral::{cosine_moments, eigenvalue, DipoleMoment};

/// Smallest admissible mode cutoff.
pub const MIN_CUTOFF: usize = 50;
/// Default mode cutoff of the series.
pub const DEFAULT_CUTOFF: usize = 2000;
/// `|c_j|` above this fraction of `max |c|` counts as numerically nonzero.
pub const NONZERO_REL: f64 = 1e-12;
/// Entries below this fraction of `max |c|` are treated as unresolved by the
/// decay fit.
const FIT_FLOOR_REL: f64 = 1e-30;
const FIT_BLOCKS: usize = 12;

/// Power-law fit `|c_j| ≈ C j^{-γ}` of the upper envelope on `[J/2, J]`.
/// `gamma = ∞` means the window holds too few resolved entries for a fit:
/// the sequence has decayed below rounding.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub gamma: f64,
    pub prefactor: f64,
    pub points: usize,
    pub window: (usize, usize),
}

impl DecayFit {
    /// Whether `Σ j^{4n} |c_j|` converges according to the fit.
    pub fn converges(&self, n: usize) -> bool {
        self.gamma > (4 * n + 1) as f64
    }

    pub fn is_superalgebraic(&self) -> bool {
        self.gamma.is_infinite()
    }
}

/// Spectral data of `μ` relative to the ground state and a target mode `K`:
/// `b1[j] = ⟨μφ₁, φ_j⟩`, `bK[j] = ⟨μφ_K, φ_j⟩`, `c[j] = b1[j]·bK[j]`,
/// stored with index `j - 1`.
#[derive(Clone, Debug, Serialize)]
pub struct CouplingTable {
    pub k: usize,
    pub cutoff: usize,
    pub order: usize,
    pub b1: Vec<f64>,
    #[serde(rename = "bK")]
    pub bk: Vec<f64>,
    pub c: Vec<f64>,
    pub decay: DecayFit,
    /// Estimate of `Σ_{j>J} j^{4n} |c_j|`.
    pub tail_bound: f64,
}

impl CouplingTable {
    /// Builds the table without rejecting slowly decaying sequences; the
    /// verdict is left in `decay`.
    pub fn build(mu: &DipoleMoment<f64>, k: usize, cutoff: usize, n: usize) -> Result<Self, ObstructionError> {
        if k == 0 {
            return Err(ObstructionError::InvalidMode(k));
        }
        if cutoff < MIN_CUTOFF {
            return Err(ObstructionError::CutoffTooSmall { cutoff, min: MIN_CUTOFF });
        }
        Self::from_moments(&cosine_moments(mu, cutoff + k.max(1)), k, cutoff, n)
    }

    /// Builds the table from precomputed cosine moments `C(0..=cutoff+K)`;
    /// moments are linear in `μ`, so callers can combine cached vectors.
    pub fn from_moments(mom: &[f64], k: usize, cutoff: usize, n: usize) -> Result<Self, ObstructionError> {
        if k == 0 {
            return Err(ObstructionError::InvalidMode(k));
        }
        if cutoff < MIN_CUTOFF {
            return Err(ObstructionError::CutoffTooSmall { cutoff, min: MIN_CUTOFF });
        }
        assert!(mom.len() > cutoff + k, "moment vector too short");
        let b = |a: usize, j: usize| mom[a.abs_diff(j)] - mom[a + j];
        let b1: Vec<f64> = (1..=cutoff).map(|j| b(1, j)).collect();
        let bk: Vec<f64> = (1..=cutoff).map(|j| b(k, j)).collect();
        let c: Vec<f64> = b1.iter().zip(&bk).map(|(x, y)| x * y).collect();
        let decay = fit_decay(&c);
        let tail_bound = weighted_tail(&c, &decay, |j| (j as f64).powi(4 * n as i32), 4.0 * n as f64);
        Ok(CouplingTable {
            k,
            cutoff,
            order: n,
            b1,
            bk,
            c,
            decay,
            tail_bound,
        })
    }

    pub fn lambda(j: usize) -> f64 {
        eigenvalue(j)
    }

    /// `c_j` for `j >= 1`.
    pub fn cj(&self, j: usize) -> f64 {
        self.c[j - 1]
    }

    /// `⟨μφ₁, φ_K⟩`.
    pub fn h1_residual(&self) -> f64 {
        self.b1[self.k - 1]
    }

    pub fn max_abs_c(&self) -> f64 {
        self.c.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Number of `j` with `|c_j| > 1e-12 · max |c|`.
    pub fn nonzero_count(&self) -> usize {
        let m = self.max_abs_c();
        if m == 0.0 {
            return 0;
        }
        self.c.iter().filter(|v| v.abs() > NONZERO_REL * m).count()
    }

    /// Indices `j` with numerically nonzero `c_j`, in increasing order.
    pub fn nonzero_modes(&self) -> Vec<usize> {
        let m = self.max_abs_c();
        (1..=self.cutoff)
            .filter(|&j| m > 0.0 && self.c[j - 1].abs() > NONZERO_REL * m)
            .collect()
    }

    /// A copy truncated to the first `j` modes (the decay fit is kept).
    pub fn truncated(&self, j: usize) -> Self {
        let j = j.min(self.cutoff);
        CouplingTable {
            k: self.k,
            cutoff: j,
            order: self.order,
            b1: self.b1[..j].to_vec(),
            bk: self.bk[..j].to_vec(),
            c: self.c[..j].to_vec(),
            decay: self.decay,
            tail_bound: self.tail_bound,
        }
    }
}

/// Strict constructor: rejects tables whose decay fit violates the
/// summability of `j^{4n} |c_j|`.
pub fn build_coupling_table(
    mu: &DipoleMoment<f64>,
    k: usize,
    cutoff: usize,
    n: usize,
) -> Result<CouplingTable, ObstructionError> {
    let t = CouplingTable::build(mu, k, cutoff, n)?;
    if !t.decay.converges(n) {
        return Err(ObstructionError::Divergent {
            gamma: t.decay.gamma,
            needed: (4 * n + 1) as f64,
        });
    }
    Ok(t)
}

/// Fit of the block-maximum envelope of `|c_j|` on `[J/2, J]`.
pub fn fit_decay(c: &[f64]) -> DecayFit {
    let n = c.len();
    let lo = n / 2 + 1;
    let window = (lo, n);
    let max = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return DecayFit {
            gamma: f64::INFINITY,
            prefactor: 0.0,
            points: 0,
            window,
        };
    }
    let floor = FIT_FLOOR_REL * max;
    let span = n + 1 - lo;
    let block = (span / FIT_BLOCKS).max(1);
    let mut pts = Vec::new();
    let mut start = lo;
    while start <= n {
        let end = (start + block - 1).min(n);
        let (mut best_j, mut best) = (0usize, 0.0f64);
        for j in start..=end {
            let v = c[j - 1].abs();
            if v > best {
                best = v;
                best_j = j;
            }
        }
        if best > floor {
            pts.push(((best_j as f64).ln(), best.ln()));
        }
        start = end + 1;
    }
    if pts.len() < FIT_BLOCKS / 2 {
        return DecayFit {
            gamma: f64::INFINITY,
            prefactor: 0.0,
            points: pts.len(),
            window,
        };
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, y) in &pts {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let gamma = -slope;
    // shift the intercept so the fitted envelope dominates every point
    let shift = pts
        .iter()
        .map(|&(x, y)| y - (my + slope * (x - mx)))
        .fold(0.0f64, f64::max);
    let prefactor = (my - slope * mx + shift).exp();
    DecayFit {
        gamma,
        prefactor,
        points: pts.len(),
        window,
    }
}

/// Estimate of `Σ_{j>J} w(j) |c_j|` where `w(j) ≲ j^{s}`: the power-law
/// integral `C J^{s+1-γ} / (γ-s-1)` when the fit allows it, the sum over the
/// last half-window when the decay is below rounding, `∞` otherwise.
pub(crate) fn weighted_tail<W: Fn(usize) -> f64>(c: &[f64], fit: &DecayFit, w: W, s: f64) -> f64 {
    let n = c.len();
    if fit.is_superalgebraic() {
        return (fit.window.0..=n).map(|j| w(j) * c[j - 1].abs()).sum();
    }
    if fit.gamma <= s + 1.0 {
        return f64::INFINITY;
    }
    let jn = n as f64;
    let scale = w(n) / jn.powf(s);
    fit.prefactor * scale * jn.powf(s + 1.0 - fit.gamma) / (fit.gamma - s - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_dipole_table() {
        let t = CouplingTable::build(&DipoleMoment::zero(), 1, 100, 1).unwrap();
        assert!(t.c.iter().all(|&v| v == 0.0));
        assert_eq!(t.tail_bound, 0.0);
        assert_eq!(t.nonzero_count(), 0);
    }

    #[test]
    fn linear_dipole_entries() {
        let t = CouplingTable::build(&DipoleMoment::centered_linear(), 1, 2000, 1).unwrap();
        assert_eq!(t.cj(1), 0.0);
        let b12 = 16.0 / (9.0 * PI * PI);
        assert!((t.cj(2) - b12 * b12).abs() < 1e-10);
        // b1 vanishes on odd modes, |c_j| ~ j^{-6}
        assert!((t.decay.gamma - 6.0).abs() < 0.05, "gamma {}", t.decay.gamma);
        assert!(t.decay.converges(1));
        assert!(!t.decay.converges(2));
    }

    #[test]
    fn small_cutoff_rejected() {
        assert!(matches!(
            CouplingTable::build(&DipoleMoment::centered_linear(), 1, 10, 1),
            Err(ObstructionError::CutoffTooSmall { .. })
        ));
    }

    #[test]
    fn strict_builder_flags_divergence() {
        let r = build_coupling_table(&DipoleMoment::centered_linear(), 1, 200, 2);
        assert!(matches!(r, Err(ObstructionError::Divergent { .. })));
    }

    #[test]
    fn fit_recovers_planted_power_law() {
        let c: Vec<f64> = (1..=400).map(|j| 3.0 * (j as f64).powf(-7.5)).collect();
        let f = fit_decay(&c);
        assert!((f.gamma - 7.5).abs() < 1e-9);
        assert!(f.prefactor >= 3.0 * (1.0 - 1e-9));
    }
}
