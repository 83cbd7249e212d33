//! Coupling sequences, the coefficients `A^p_K` and the constants of the
//! coercivity estimate.

mod alpha;
mod brackets;
mod table;

pub use alpha::{alpha_coeffs, AlphaTable};
pub use brackets::{
    ad_matrix_element, ad_matrix_element_with_scale, apply_ad_power, bracket_a, commutator_terms, dominant_a, pairing_a, AdPower,
    BracketTerm, SmoothFn,
};
pub use table::{build_coupling_table, fit_decay, CouplingTable, DecayFit, DEFAULT_CUTOFF, MIN_CUTOFF, NONZERO_REL};

use serde::Serialize;
use thiserror::Error;

use crate::spectral::{eigenvalue, DipoleMoment, SpectralError};
use table::weighted_tail;

/// Truncated series whose tail exceeds this fraction of the scale are rejected.
pub const SERIES_REL_TOL: f64 = 1e-6;
/// Threshold below which `⟨μφ₁, φ_K⟩` and the lower coefficients count as zero.
pub const ZERO_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObstructionError {
    #[error("mode index must be >= 1, got {0}")]
    InvalidMode(usize),
    #[error("coefficient order must be >= 1, got {0}")]
    InvalidOrder(usize),
    #[error("mode cutoff {cutoff} is below the minimum {min}")]
    CutoffTooSmall { cutoff: usize, min: usize },
    #[error("coupling sequence decays like j^-{gamma:.3}, summability needs more than {needed}")]
    Divergent { gamma: f64, needed: f64 },
    #[error("series tail {tail:.3e} too large against partial sum {partial:.3e}; raise the cutoff")]
    InsufficientCutoff { tail: f64, partial: f64 },
    #[error("bracket formula of order {p} needs a compactly supported dipole")]
    NotCompact { p: usize },
    #[error("coercivity time undefined: A^n_K vanishes")]
    UndefinedTStar,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// A truncated series together with its error budget.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    /// Estimated size of the neglected modes.
    pub tail: f64,
    /// `Σ |terms|` over the kept modes, the scale of cancellation.
    pub abs_sum: f64,
}

impl SeriesValue {
    /// Whether the tail is negligible against both the value and the
    /// cancellation scale.
    pub fn is_resolved(&self) -> bool {
        self.tail <= SERIES_REL_TOL * self.value.abs().max(self.abs_sum)
    }
}

fn series_weight(lk: f64, lj: f64, p: usize) -> f64 {
    let l1 = eigenvalue(1);
    let q = (p - 1) as i32;
    let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
    sign * (lj - 0.5 * (l1 + lk)) * (lk - lj).powi(q) * (lj - l1).powi(q)
}

/// The truncated series for `A^p_K` with its tail estimate, without
/// judging it.
pub fn series_terms(table: &CouplingTable, p: usize) -> Result<SeriesValue, ObstructionError> {
    if p == 0 {
        return Err(ObstructionError::InvalidOrder(p));
    }
    let lk = eigenvalue(table.k);
    let w = |j: usize| series_weight(lk, eigenvalue(j), p);
    let (mut value, mut abs_sum) = (0.0, 0.0);
    for (i, &c) in table.c.iter().enumerate() {
        let t = w(i + 1) * c;
        value += t;
        abs_sum += t.abs();
    }
    let tail = weighted_tail(&table.c, &table.decay, |j| w(j).abs(), (4 * p - 2) as f64);
    Ok(SeriesValue { value, tail, abs_sum })
}

/// `A^p_K` from the spectral series; fails when the cutoff cannot resolve it.
pub fn series_a(table: &CouplingTable, p: usize) -> Result<f64, ObstructionError> {
    let s = series_terms(table, p)?;
    if !s.is_resolved() {
        return Err(ObstructionError::InsufficientCutoff {
            tail: s.tail,
            partial: s.value,
        });
    }
    Ok(s.value)
}

/// Constants of the coercivity bound at order `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Coercivity {
    pub a_n: f64,
    /// `Σ_{j ≤ J} |(λ_K-λ_j)^n (λ_j-λ₁)^n c_j|`.
    pub c_partial: f64,
    pub c_tail: f64,
    /// `c_partial + c_tail`, the value used for `T*`.
    pub c_n_k: f64,
    pub t_star: f64,
}

/// `C^n_K` and `T*`. The tail estimate is added to `C`, which can only
/// shorten `T*`.
pub fn coercivity_constants(table: &CouplingTable, n: usize) -> Result<Coercivity, ObstructionError> {
    let a_n = series_a(table, n)?;
    if a_n == 0.0 {
        return Err(ObstructionError::UndefinedTStar);
    }
    let (l1, lk) = (eigenvalue(1), eigenvalue(table.k));
    let w = |j: usize| {
        let lj = eigenvalue(j);
        ((lk - lj) * (lj - l1)).powi(n as i32).abs()
    };
    let c_partial: f64 = table.c.iter().enumerate().map(|(i, c)| w(i + 1) * c.abs()).sum();
    let c_tail = weighted_tail(&table.c, &table.decay, w, (4 * n) as f64);
    let c_n_k = c_partial + c_tail;
    let resonance = if table.k == 1 {
        f64::INFINITY
    } else {
        std::f64::consts::PI / (3.0 * (lk - l1))
    };
    let ratio = if c_n_k > 0.0 { a_n.abs() / (4.0 * c_n_k) } else { f64::INFINITY };
    Ok(Coercivity {
        a_n,
        c_partial,
        c_tail,
        c_n_k,
        t_star: ratio.min(resonance),
    })
}

/// Numerical verdict on the hypotheses for the pair `(K, n)`.
#[derive(Clone, Debug, Serialize)]
pub struct HypothesisReport {
    pub k: usize,
    pub n: usize,
    pub cutoff: usize,
    pub h1_residual: f64,
    pub h1_pass: bool,
    /// `A^p_K` for `p = 1..=n` with their tail estimates.
    pub coefficients: Vec<SeriesValue>,
    pub lower_vanish: bool,
    pub leading_nonzero: bool,
    pub series_resolved: bool,
    pub nonzero_couplings: usize,
    pub enough_couplings: bool,
    pub decay: DecayFit,
    pub summable: bool,
}

impl HypothesisReport {
    pub fn passes(&self) -> bool {
        self.h1_pass
            && self.lower_vanish
            && self.leading_nonzero
            && self.series_resolved
            && self.enough_couplings
            && self.summable
    }

    pub fn a(&self, p: usize) -> f64 {
        self.coefficients[p - 1].value
    }
}

/// Diagnostic check of `⟨μφ₁, φ_K⟩ = 0`, `A^p_K = 0` for `p < n`,
/// `A^n_K ≠ 0`, the number of nonzero `c_j` and the summability fit.
pub fn check_hypotheses(
    mu: &DipoleMoment<f64>,
    k: usize,
    n: usize,
    cutoff: usize,
) -> Result<HypothesisReport, ObstructionError> {
    if n == 0 {
        return Err(ObstructionError::InvalidOrder(n));
    }
    let table = CouplingTable::build(mu, k, cutoff, n)?;
    let coefficients = (1..=n)
        .map(|p| series_terms(&table, p))
        .collect::<Result<Vec<_>, _>>()?;
    let h1_residual = table.h1_residual();
    let a_n = coefficients[n - 1].value;
    let nonzero = table.nonzero_count();
    Ok(HypothesisReport {
        k,
        n,
        cutoff,
        h1_residual,
        h1_pass: h1_residual.abs() < ZERO_TOL,
        lower_vanish: coefficients[..n - 1].iter().all(|s| s.value.abs() < ZERO_TOL),
        leading_nonzero: a_n.abs() >= ZERO_TOL,
        series_resolved: coefficients.iter().all(SeriesValue::is_resolved),
        nonzero_couplings: nonzero,
        enough_couplings: nonzero >= n,
        decay: table.decay,
        summable: table.decay.converges(n) && nonzero > 0,
        coefficients,
    })
}

/// Everything known about a dipole at order `n` and target `K`.
#[derive(Clone, Debug, Serialize)]
pub struct ObstructionReport {
    pub k: usize,
    pub n: usize,
    pub cutoff: usize,
    /// Series route, `p = 1..=n`.
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    #[serde(rename = "A_tail")]
    pub a_tail: Vec<f64>,
    /// Bracket route where it applies.
    #[serde(rename = "A_bracket")]
    pub a_bracket: Option<Vec<f64>>,
    #[serde(rename = "A_dominant")]
    pub a_dominant: Option<Vec<f64>>,
    #[serde(rename = "C_n_K")]
    pub c_n_k: Option<f64>,
    #[serde(rename = "T_star")]
    pub t_star: Option<f64>,
    #[serde(rename = "H1_residual")]
    pub h1_residual: f64,
    pub decay: DecayFit,
    /// `r(ε) / Q_n(u_n) - 1` per drift run, filled by experiments.
    pub drift_residuals: Vec<f64>,
    /// Fitted slopes of the expansion remainders, filled by experiments.
    pub slopes: Option<[f64; 3]>,
}

impl ObstructionReport {
    /// Computes every route that applies to `μ`. The series route must be
    /// resolved at the given cutoff.
    pub fn compute(mu: &DipoleMoment<f64>, k: usize, n: usize, cutoff: usize) -> Result<Self, ObstructionError> {
        if n == 0 {
            return Err(ObstructionError::InvalidOrder(n));
        }
        let table = CouplingTable::build(mu, k, cutoff, n)?;
        let mut a = Vec::with_capacity(n);
        let mut a_tail = Vec::with_capacity(n);
        for p in 1..=n {
            let s = series_terms(&table, p)?;
            if !s.is_resolved() {
                return Err(ObstructionError::InsufficientCutoff {
                    tail: s.tail,
                    partial: s.value,
                });
            }
            a.push(s.value);
            a_tail.push(s.tail);
        }
        let routes = |f: fn(&DipoleMoment<f64>, usize, usize) -> Result<f64, ObstructionError>| {
            (1..=n).map(|p| f(mu, k, p)).collect::<Result<Vec<_>, _>>().ok()
        };
        let a_bracket = routes(bracket_a);
        let a_dominant = routes(dominant_a);
        let coerc = coercivity_constants(&table, n).ok();
        Ok(ObstructionReport {
            k,
            n,
            cutoff,
            a,
            a_tail,
            a_bracket,
            a_dominant,
            c_n_k: coerc.map(|c| c.c_n_k),
            t_star: coerc.map(|c| c.t_star),
            h1_residual: table.h1_residual(),
            decay: table.decay,
            drift_residuals: Vec::new(),
            slopes: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Bump;
    use std::f64::consts::PI;

    #[test]
    fn linear_dipole_anchor() {
        let t = CouplingTable::build(&DipoleMoment::centered_linear(), 1, 2000, 1).unwrap();
        let s = series_terms(&t, 1).unwrap();
        assert!((s.value - 1.0).abs() < 1e-6, "{s:?}");
        assert!(s.is_resolved());
        assert!(t.h1_residual().abs() < 1e-10);
    }

    #[test]
    fn linear_dipole_second_order_is_unresolved() {
        let t = CouplingTable::build(&DipoleMoment::centered_linear(), 1, 2000, 2).unwrap();
        assert!(matches!(series_a(&t, 2), Err(ObstructionError::InsufficientCutoff { .. })));
    }

    #[test]
    fn zero_dipole_everything_vanishes() {
        let t = CouplingTable::build(&DipoleMoment::zero(), 1, 100, 1).unwrap();
        assert_eq!(series_a(&t, 1).unwrap(), 0.0);
        assert_eq!(series_a(&t, 3).unwrap(), 0.0);
        assert!(matches!(coercivity_constants(&t, 1), Err(ObstructionError::UndefinedTStar)));
        let r = check_hypotheses(&DipoleMoment::zero(), 1, 1, 100).unwrap();
        assert!(!r.leading_nonzero && !r.enough_couplings && !r.passes());
    }

    #[test]
    fn linear_dipole_coercivity_against_direct_sum() {
        let t = CouplingTable::build(&DipoleMoment::centered_linear(), 1, 2000, 1).unwrap();
        let c = coercivity_constants(&t, 1).unwrap();
        let direct: f64 = (1..=2000)
            .map(|j| {
                let l = (j as f64 * PI).powi(2);
                ((l - PI * PI).powi(2) * t.cj(j)).abs()
            })
            .sum();
        assert!((c.c_partial - direct).abs() < 1e-12 * direct);
        assert!(c.c_tail > 0.0 && c.c_tail < 1e-2 * direct);
        assert!((c.t_star - c.a_n.abs() / (4.0 * c.c_n_k)).abs() < 1e-15);
    }

    #[test]
    fn hypotheses_for_linear_dipole() {
        let r = check_hypotheses(&DipoleMoment::centered_linear(), 1, 1, 2000).unwrap();
        assert!(r.h1_pass && r.leading_nonzero && r.enough_couplings && r.summable);
        assert!((r.a(1) - 1.0).abs() < 1e-6);
        assert!(r.passes());
    }

    #[test]
    fn series_and_bracket_routes_agree_on_bumps() {
        let mu = DipoleMoment::bumps(vec![Bump::new(0.3, 0.15, 1.0), Bump::new(0.68, 0.2, -0.7)]).unwrap();
        let t = CouplingTable::build(&mu, 2, 3000, 3).unwrap();
        for p in 1..=3 {
            let s = series_a(&t, p).unwrap();
            let b = bracket_a(&mu, 2, p).unwrap();
            assert!((s - b).abs() <= 1e-6 * s.abs().max(1.0), "p={p}: {s} vs {b}");
        }
    }

    #[test]
    fn first_order_is_mu_prime_squared_for_every_representation() {
        use crate::spectral::TrigTerm;
        let mus = [
            DipoleMoment::polynomial(vec![0.1, -0.4, 0.9]).unwrap(),
            DipoleMoment::trig(vec![TrigTerm { freq: 3.0, cos: 0.7, sin: 0.2 }]).unwrap(),
        ];
        for mu in &mus {
            for k in [1, 2, 3] {
                let t = CouplingTable::build(mu, k, 2000, 1).unwrap();
                let s = series_a(&t, 1).unwrap();
                let b = bracket_a(mu, k, 1).unwrap();
                assert!((s - b).abs() < 1e-6 * s.abs().max(1.0), "k={k}: {s} vs {b}");
            }
        }
    }

    #[test]
    fn k2_t_star_is_capped_by_resonance() {
        let mu = DipoleMoment::bumps(vec![Bump::new(0.5, 0.1, 1.0)]).unwrap();
        let t = CouplingTable::build(&mu, 2, 2000, 1).unwrap();
        let c = coercivity_constants(&t, 1).unwrap();
        let cap = 1.0 / (9.0 * PI);
        assert!(c.t_star <= cap * (1.0 + 1e-15));
        assert!((c.t_star - (c.a_n.abs() / (4.0 * c.c_n_k)).min(cap)).abs() < 1e-15);
    }
}
