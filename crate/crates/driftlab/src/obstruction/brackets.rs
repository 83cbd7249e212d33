use super::alpha::AlphaTable;
use super::ObstructionError;
use crate::spectral::{overlap_integral, overlap_integral_scaled, DipoleMoment, Mode, QuadratureRule, SpectralError};

/// A function on `[0,1]` with exact derivatives.
pub trait SmoothFn {
    fn eval(&self, x: f64, k: usize) -> f64;
    fn max_order(&self) -> usize;
}

impl SmoothFn for Mode {
    fn eval(&self, x: f64, k: usize) -> f64 {
        self.phi_deriv(x, k)
    }

    fn max_order(&self) -> usize {
        usize::MAX
    }
}

impl SmoothFn for DipoleMoment<f64> {
    fn eval(&self, x: f64, k: usize) -> f64 {
        self.eval_unchecked(x, k)
    }

    fn max_order(&self) -> usize {
        DipoleMoment::max_order(self)
    }
}

/// `x ↦ ad_A^p(μ) f (x) = Σ_k α_k^p μ^{(2p-k)}(x) f^{(k)}(x)`.
pub struct AdPower<'a, F: ?Sized> {
    mu: &'a DipoleMoment<f64>,
    f: &'a F,
    alpha: AlphaTable,
}

impl<F: SmoothFn + ?Sized> AdPower<'_, F> {
    pub fn order(&self) -> usize {
        self.alpha.p
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_scaled(x).0
    }

    /// Value together with the sum of absolute values of its terms.
    pub fn eval_scaled(&self, x: f64) -> (f64, f64) {
        let p = self.alpha.p;
        (0..=p).fold((0.0, 0.0), |(v, m), k| {
            let t = self.alpha.get(k) as f64 * self.mu.eval_unchecked(x, 2 * p - k) * self.f.eval(x, k);
            (v + t, m + t.abs())
        })
    }
}

/// Checks the derivative budgets and returns the operator applied to `f`.
pub fn apply_ad_power<'a, F: SmoothFn + ?Sized>(
    mu: &'a DipoleMoment<f64>,
    p: usize,
    f: &'a F,
) -> Result<AdPower<'a, F>, ObstructionError> {
    if mu.max_order() < 2 * p {
        return Err(overflow(2 * p, mu.max_order()));
    }
    if f.max_order() < p {
        return Err(overflow(p, f.max_order()));
    }
    Ok(AdPower {
        mu,
        f,
        alpha: AlphaTable::new(p),
    })
}

fn overflow(requested: usize, max: usize) -> ObstructionError {
    ObstructionError::Spectral(SpectralError::UnsupportedOrder { requested, max })
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// A monomial `coef · μ^{(a)} μ^{(b)} f^{(r)}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BracketTerm {
    pub coef: f64,
    pub a: usize,
    pub b: usize,
    pub r: usize,
}

/// Expansion of `[ad^{p-1}(μ), ad^p(μ)] f` into monomials, by Leibniz on
/// both orderings of the product and subtraction; like terms are merged.
pub fn commutator_terms(p: usize) -> Vec<BracketTerm> {
    assert!(p >= 1);
    let lo = AlphaTable::new(p - 1);
    let hi = AlphaTable::new(p);
    let mut terms: Vec<BracketTerm> = Vec::new();
    let mut push = |coef: f64, a: usize, b: usize, r: usize| {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        if let Some(t) = terms.iter_mut().find(|t| t.a == a && t.b == b && t.r == r) {
            t.coef += coef;
        } else {
            terms.push(BracketTerm { coef, a, b, r });
        }
    };
    // ad^{p-1}(μ) ∘ ad^p(μ)
    for k in 0..p {
        for n in 0..=p {
            for m in 0..=k {
                let c = binomial(k, m) * lo.get(k) as f64 * hi.get(n) as f64;
                push(c, 2 * p - 2 - k, 2 * p - n + k - m, n + m);
            }
        }
    }
    // - ad^p(μ) ∘ ad^{p-1}(μ)
    for k in 0..=p {
        for n in 0..p {
            for m in 0..=k {
                let c = binomial(k, m) * hi.get(k) as f64 * lo.get(n) as f64;
                push(-c, 2 * p - k, 2 * p - 2 - n + k - m, n + m);
            }
        }
    }
    terms.retain(|t| t.coef != 0.0);
    terms
}

fn omega_for(mu: &DipoleMoment<f64>, k: usize) -> f64 {
    (1 + k) as f64 * std::f64::consts::PI + 2.0 * mu.bandwidth()
}

/// `A^p_K = ((-1)^{p-1}/2) ⟨[ad^{p-1}(μ), ad^p(μ)] φ₁, φ_K⟩` by quadrature of
/// the expanded commutator.
pub fn bracket_a(mu: &DipoleMoment<f64>, k: usize, p: usize) -> Result<f64, ObstructionError> {
    if p == 0 {
        return Err(ObstructionError::InvalidOrder(p));
    }
    let mk = Mode::new(k).map_err(ObstructionError::Spectral)?;
    if p >= 2 && !mu.is_compactly_supported() {
        return Err(ObstructionError::NotCompact { p });
    }
    if mu.is_zero() {
        return Ok(0.0);
    }
    let need = 3 * p - 1;
    if mu.max_order() < need {
        return Err(overflow(need, mu.max_order()));
    }
    let terms = commutator_terms(p);
    let one = Mode::new(1).expect("mode 1");
    let mut dmu = vec![0.0; need + 1];
    let integrand = |x: f64| {
        for (r, slot) in dmu.iter_mut().enumerate() {
            *slot = mu.eval_unchecked(x, r);
        }
        let fk = mk.phi(x);
        let (v, m) = terms.iter().fold((0.0, 0.0), |(v, m), t| {
            let y = t.coef * dmu[t.a] * dmu[t.b] * one.phi_deriv(x, t.r);
            (v + y, m + y.abs())
        });
        (v * fk, m * fk.abs())
    };
    let w = overlap_integral_scaled(mu, integrand, omega_for(mu, k))?;
    let sign = if (p - 1) % 2 == 0 { 1.0 } else { -1.0 };
    Ok(0.5 * sign * w)
}

/// The same coefficient from the symmetric operator pairing
/// `½(⟨ad^p(μ)φ₁, ad^{p-1}(μ)φ_K⟩ + ⟨ad^{p-1}(μ)φ₁, ad^p(μ)φ_K⟩)`, an
/// independent quadrature of the same quantity for compactly supported `μ`.
pub fn pairing_a(mu: &DipoleMoment<f64>, k: usize, p: usize) -> Result<f64, ObstructionError> {
    if p == 0 {
        return Err(ObstructionError::InvalidOrder(p));
    }
    if p >= 2 && !mu.is_compactly_supported() {
        return Err(ObstructionError::NotCompact { p });
    }
    let one = Mode::new(1).expect("mode 1");
    let mk = Mode::new(k).map_err(ObstructionError::Spectral)?;
    let hi1 = apply_ad_power(mu, p, &one)?;
    let lo1 = apply_ad_power(mu, p - 1, &one)?;
    let hik = apply_ad_power(mu, p, &mk)?;
    let lok = apply_ad_power(mu, p - 1, &mk)?;
    // ad^q(μ)* = (-1)^q ad^q(μ) on compactly supported μ, so the sign of the
    // commutator cancels against the prefactor
    let v = overlap_integral_scaled(
        mu,
        |x| {
            let (a, sa) = hi1.eval_scaled(x);
            let (b, sb) = lok.eval_scaled(x);
            let (c, sc) = lo1.eval_scaled(x);
            let (d, sd) = hik.eval_scaled(x);
            (a * b + c * d, sa * sb + sc * sd)
        },
        omega_for(mu, k),
    )?;
    Ok(0.5 * v)
}

/// Leading term `⟨(μ^{(2p-1)})² φ₁, φ_K⟩`.
pub fn dominant_a(mu: &DipoleMoment<f64>, k: usize, p: usize) -> Result<f64, ObstructionError> {
    if p == 0 {
        return Err(ObstructionError::InvalidOrder(p));
    }
    let mk = Mode::new(k).map_err(ObstructionError::Spectral)?;
    let d = 2 * p - 1;
    if mu.max_order() < d {
        return Err(overflow(d, mu.max_order()));
    }
    if mu.is_zero() {
        return Ok(0.0);
    }
    let one = Mode::new(1).expect("mode 1");
    Ok(overlap_integral(
        mu,
        |x| {
            let v = mu.eval_unchecked(x, d);
            v * v * one.phi(x) * mk.phi(x)
        },
        omega_for(mu, k),
    )?)
}

/// `⟨ad^q(μ) φ_a, φ_b⟩` by quadrature over the support of `μ`.
pub fn ad_matrix_element(mu: &DipoleMoment<f64>, q: usize, a: Mode, b: Mode) -> Result<f64, ObstructionError> {
    Ok(ad_matrix_element_with_scale(mu, q, a, b)?.0)
}

/// The matrix element together with `∫ Σ|terms| |φ_b|`, the magnitude its
/// rounding error is proportional to.
pub fn ad_matrix_element_with_scale(
    mu: &DipoleMoment<f64>,
    q: usize,
    a: Mode,
    b: Mode,
) -> Result<(f64, f64), ObstructionError> {
    let op = apply_ad_power(mu, q, &a)?;
    let omega = (a.index() + b.index()) as f64 * std::f64::consts::PI + 2.0 * mu.bandwidth();
    let value = overlap_integral_scaled(
        mu,
        |x| {
            let (v, m) = op.eval_scaled(x);
            let f = b.phi::<f64>(x);
            (v * f, m * f.abs())
        },
        omega,
    )?;
    // |·| has kinks, so a fixed rule stands in for the adaptive one here
    let scale = mu
        .support()
        .into_iter()
        .map(|(lo, hi)| {
            let rule = QuadratureRule::for_frequency(hi - lo, 4.0 * omega);
            rule.integrate(|x| op.eval_scaled(x).1 * b.phi::<f64>(x).abs(), lo, hi)
        })
        .sum();
    Ok((value, scale))
}
