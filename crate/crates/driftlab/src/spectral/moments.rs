use super::bump::BumpTransform;
use super::dipole::{DipoleMoment, Representation};
use super::quadrature::{integrate_adaptive, integrate_adaptive_scaled, QuadratureRule};
use super::{Mode, SpectralError};
use crate::Real;

/// `∫₀¹ sin(αx) dx` written as `2 sin²(α/2)/α` to avoid cancellation.
fn int_sin<T: Real>(alpha: T) -> T {
    if alpha == T::zero() {
        return T::zero();
    }
    let s = (alpha * T::lit(0.5)).sin();
    T::lit(2.0) * s * s / alpha
}

/// `∫₀¹ cos(αx) dx`.
fn int_cos<T: Real>(alpha: T) -> T {
    if alpha.abs() < T::lit(1e-6) {
        let a2 = alpha * alpha;
        return T::one() - a2 / T::lit(6.0) + a2 * a2 / T::lit(120.0);
    }
    alpha.sin() / alpha
}

/// `∫₀¹ p(x) cos(ωx) dx` for `ω = mπ`, from the terminating integration
/// by parts `∫ p e^{iωx} = Σ_k (-1)^k p^{(k)} e^{iωx} / (iω)^{k+1}`.
fn poly_cos_moment<T: Real>(mu: &DipoleMoment<T>, coeffs: &[T], m: usize) -> T {
    if m == 0 {
        return coeffs
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (i, &c)| acc + c / T::from_usize_lossy(i + 1));
    }
    let w = T::from_usize_lossy(m) * T::PI();
    let sign_m = if m % 2 == 0 { T::one() } else { -T::one() };
    let deg = coeffs.len().saturating_sub(1);
    let mut acc = T::zero();
    let mut k = 1;
    while k <= deg {
        let jump = sign_m * mu.eval_unchecked(T::one(), k) - mu.eval_unchecked(T::zero(), k);
        let sgn = if (k / 2) % 2 == 0 { T::one() } else { -T::one() };
        acc = acc + sgn * jump / w.powi(k as i32 + 1);
        k += 2;
    }
    acc
}

fn trig_cos_moment<T: Real>(terms: &[super::TrigTerm<T>], m: usize) -> T {
    let w = T::from_usize_lossy(m) * T::PI();
    let half = T::lit(0.5);
    terms.iter().fold(T::zero(), |acc, t| {
        let c = half * (int_cos(t.freq - w) + int_cos(t.freq + w));
        let s = half * (int_sin(t.freq + w) + int_sin(t.freq - w));
        acc + t.cos * c + t.sin * s
    })
}

/// `C(m) = ∫₀¹ μ(x) cos(mπx) dx` through the closed form of the
/// representation (bumps go through [`BumpTransform`]).
pub fn cosine_moment<T: Real>(mu: &DipoleMoment<T>, m: usize) -> T {
    match mu.representation() {
        Representation::Polynomial(c) => poly_cos_moment(mu, c, m),
        Representation::Trig(t) => trig_cos_moment(t, m),
        Representation::Bumps(_) => cosine_moments(mu, m)[m],
    }
}

/// `C(0), …, C(m_max)` in one pass.
pub fn cosine_moments<T: Real>(mu: &DipoleMoment<T>, m_max: usize) -> Vec<T> {
    match mu.representation() {
        Representation::Polynomial(c) => (0..=m_max).map(|m| poly_cos_moment(mu, c, m)).collect(),
        Representation::Trig(t) => (0..=m_max).map(|m| trig_cos_moment(t, m)).collect(),
        Representation::Bumps(bumps) => {
            let mut tr = BumpTransform::<T>::new();
            let mut out = vec![T::zero(); m_max + 1];
            for b in bumps {
                let len = b.half_width + b.half_width;
                let scale = b.amplitude * len;
                for (m, slot) in out.iter_mut().enumerate() {
                    let mf = T::from_usize_lossy(m);
                    let g = tr.eval(mf * T::PI() * len);
                    *slot = *slot + scale * (mf * T::PI() * b.center).cos() * g;
                }
            }
            out
        }
    }
}

/// `⟨μφ_a, φ_b⟩` by the closed-form route: `C(|a-b|) - C(a+b)`.
pub fn coupling_exact<T: Real>(mu: &DipoleMoment<T>, a: Mode, b: Mode) -> T {
    let (i, j) = (a.index(), b.index());
    if mu.is_compactly_supported() {
        let c = cosine_moments(mu, i + j);
        return c[i.abs_diff(j)] - c[i + j];
    }
    cosine_moment(mu, i.abs_diff(j)) - cosine_moment(mu, i + j)
}

/// `⟨μφ_a, φ_b⟩ = ∫₀¹ μ φ_a φ_b` with the given composite rule applied on
/// every support interval of `μ`.
pub fn coupling<T: Real>(
    mu: &DipoleMoment<T>,
    a: Mode,
    b: Mode,
    q: &QuadratureRule,
) -> Result<T, SpectralError> {
    let omega = (a.index() + b.index()) as f64 * std::f64::consts::PI
        + mu.bandwidth().to_f64().unwrap_or(0.0);
    let mut acc = T::zero();
    for (lo, hi) in mu.support() {
        q.check_resolves((hi - lo).to_f64().unwrap_or(1.0), omega)?;
        acc = acc + q.integrate(|x| mu.eval_unchecked(x, 0) * a.phi(x) * b.phi(x), lo, hi);
    }
    Ok(acc)
}

/// `⟨μφ_a, φ_b⟩` with adaptive refinement to [`super::ADAPTIVE_REL_TOL`].
pub fn coupling_adaptive<T: Real>(mu: &DipoleMoment<T>, a: Mode, b: Mode) -> Result<T, SpectralError> {
    let omega = (a.index() + b.index()) as f64 * std::f64::consts::PI
        + mu.bandwidth().to_f64().unwrap_or(0.0);
    let mut acc = T::zero();
    for (lo, hi) in mu.support() {
        acc = acc + integrate_adaptive(|x| mu.eval_unchecked(x, 0) * a.phi(x) * b.phi(x), lo, hi, omega)?;
    }
    Ok(acc)
}

/// `∫ f(x) φ_a(x) φ_b(x) dx` over the support of `μ` by adaptive quadrature,
/// for integrands built from derivatives of `μ`.
pub fn overlap_integral<T: Real, F: FnMut(T) -> T>(
    mu: &DipoleMoment<T>,
    mut f: F,
    omega: f64,
) -> Result<T, SpectralError> {
    let mut acc = T::zero();
    for (lo, hi) in mu.support() {
        acc = acc + integrate_adaptive(&mut f, lo, hi, omega)?;
    }
    Ok(acc)
}

/// [`overlap_integral`] for integrands returning `(value, Σ|terms|)`.
pub fn overlap_integral_scaled<T: Real, F: FnMut(T) -> (T, T)>(
    mu: &DipoleMoment<T>,
    mut f: F,
    omega: f64,
) -> Result<T, SpectralError> {
    let mut acc = T::zero();
    for (lo, hi) in mu.support() {
        acc = acc + integrate_adaptive_scaled(&mut f, lo, hi, omega)?;
    }
    Ok(acc)
}
