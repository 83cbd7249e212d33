use super::quadrature::GaussLegendre;
use crate::Real;

/// Above this argument the canonical transform is computed from the sixth
/// derivative (three double integrations by parts), which lowers the
/// absolute noise floor from `eps` to `eps / ξ^6`.
pub const IBP_SWITCH_XI: f64 = 12.0;

const IBP_HALF_ORDER: usize = 3;
const MIN_HALF_PANELS: usize = 64;

/// Canonical bump `g(y) = e^4 exp(-1/(y(1-y)))` on `(0,1)`, normalised so the
/// peak at `y = 1/2` equals one.
///
/// Derivatives use `g^{(k)} = P_k / q^{2k} · g` with `q = y(1-y)`. In the
/// centred variable `t = 2y - 1` the prefactors obey
/// `P_{k+1} = 2 P_k'(t) q² - t (1 - 2k q) P_k`, `P_0 = 1`, and are stored as
/// Chebyshev series in `t`: their monomial coefficients grow so fast that
/// Horner evaluation loses most digits beyond `k ≈ 6`.
#[derive(Clone, Debug)]
pub struct BumpProfile<T> {
    polys: Vec<Vec<T>>,
}

impl<T: Real> BumpProfile<T> {
    pub fn new(max_order: usize) -> Self {
        let mut polys: Vec<Vec<T>> = vec![vec![T::one()]];
        let two = T::lit(2.0);
        for k in 0..max_order {
            let p = &polys[k];
            let dq2 = cheb_mul_q(&cheb_mul_q(&cheb_deriv(p)));
            // t (1 - 2kq) P
            let qp = cheb_mul_q(p);
            let kk = T::from_usize_lossy(2 * k);
            let inner: Vec<T> = (0..p.len().max(qp.len()))
                .map(|i| {
                    p.get(i).copied().unwrap_or_else(T::zero) - kk * qp.get(i).copied().unwrap_or_else(T::zero)
                })
                .collect();
            let tp = cheb_mul_t(&inner);
            let n = dq2.len().max(tp.len());
            let mut next: Vec<T> = (0..n)
                .map(|i| {
                    two * dq2.get(i).copied().unwrap_or_else(T::zero) - tp.get(i).copied().unwrap_or_else(T::zero)
                })
                .collect();
            while next.len() > 1 && next.last().is_some_and(|v| v.is_zero()) {
                next.pop();
            }
            polys.push(next);
        }
        BumpProfile { polys }
    }

    pub fn max_order(&self) -> usize {
        self.polys.len() - 1
    }

    /// `g^{(k)}(y)`; zero outside `(0,1)`. Panics if `k` exceeds the table.
    pub fn eval(&self, y: T, k: usize) -> T {
        if y <= T::zero() || y >= T::one() {
            return T::zero();
        }
        let q = y * (T::one() - y);
        let expo = T::lit(4.0) - q.recip() - T::from_usize_lossy(2 * k) * q.ln();
        if expo < T::lit(-700.0) {
            return T::zero();
        }
        clenshaw(&self.polys[k], y + y - T::one()) * expo.exp()
    }

    /// Chebyshev coefficients of `P_k` in `t = 2y - 1`.
    pub fn prefactor(&self, k: usize) -> &[T] {
        &self.polys[k]
    }
}

/// `t · Σ c_n T_n(t)`.
fn cheb_mul_t<T: Real>(c: &[T]) -> Vec<T> {
    let half = T::lit(0.5);
    let mut out = vec![T::zero(); c.len() + 1];
    for (n, &v) in c.iter().enumerate() {
        if n == 0 {
            out[1] = out[1] + v;
        } else {
            out[n + 1] = out[n + 1] + half * v;
            out[n - 1] = out[n - 1] + half * v;
        }
    }
    out
}

/// `q · Σ c_n T_n(t)` with `q = (1 - t²)/4`.
fn cheb_mul_q<T: Real>(c: &[T]) -> Vec<T> {
    let tt = cheb_mul_t(&cheb_mul_t(c));
    let quarter = T::lit(0.25);
    (0..tt.len())
        .map(|i| quarter * (c.get(i).copied().unwrap_or_else(T::zero) - tt[i]))
        .collect()
}

fn cheb_deriv<T: Real>(c: &[T]) -> Vec<T> {
    let n = c.len();
    if n <= 1 {
        return vec![T::zero()];
    }
    let mut d = vec![T::zero(); n + 1];
    for i in (1..n).rev() {
        d[i - 1] = d[i + 1] + T::from_usize_lossy(2 * i) * c[i];
    }
    d[0] = d[0] * T::lit(0.5);
    d.truncate(n - 1);
    d
}

pub(crate) fn clenshaw<T: Real>(c: &[T], t: T) -> T {
    let (mut b1, mut b2) = (T::zero(), T::zero());
    for &v in c.iter().skip(1).rev() {
        let b0 = v + (t + t) * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    c[0] + t * b1 - b2
}

pub(crate) fn horner<T: Real>(c: &[T], x: T) -> T {
    c.iter().rev().fold(T::zero(), |acc, &v| acc * x + v)
}

struct Level<T> {
    panels: usize,
    shift: Vec<T>,
    w_g0: Vec<T>,
    w_g6: Vec<T>,
}

/// Cosine transform `G(ξ) = ∫₀¹ g(y) cos(ξ(y - 1/2)) dy` of the canonical
/// bump, the only transcendental ingredient of bump cosine moments:
/// a bump of amplitude `a`, centre `c`, half-width `h` has
/// `∫₀¹ μ cos(mπx) dx = 2ah cos(mπc) G(2mπh)`.
pub struct BumpTransform<T> {
    profile: BumpProfile<T>,
    gl: GaussLegendre<T>,
    levels: Vec<Level<T>>,
}

impl<T: Real> Default for BumpTransform<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> BumpTransform<T> {
    pub fn new() -> Self {
        BumpTransform {
            profile: BumpProfile::new(2 * IBP_HALF_ORDER),
            gl: GaussLegendre::new(16),
            levels: Vec::new(),
        }
    }

    fn required_panels(xi: T) -> usize {
        // four panels per period on the half interval [0, 1/2]
        let periods = (xi.abs() * T::lit(0.5) / (T::lit(2.0) * T::PI()))
            .to_f64()
            .unwrap_or(0.0);
        ((4.0 * periods).ceil() as usize).max(MIN_HALF_PANELS)
    }

    fn level_for(&mut self, xi: T) -> &Level<T> {
        let need = Self::required_panels(xi);
        let mut idx = 0;
        let mut panels = MIN_HALF_PANELS;
        while panels < need {
            panels *= 2;
            idx += 1;
        }
        while self.levels.len() <= idx {
            let p = MIN_HALF_PANELS << self.levels.len();
            let lvl = self.build_level(p);
            self.levels.push(lvl);
        }
        &self.levels[idx]
    }

    fn build_level(&self, panels: usize) -> Level<T> {
        let half = T::lit(0.5);
        let width = half / T::from_usize_lossy(panels);
        let n = panels * self.gl.len();
        let mut shift = Vec::with_capacity(n);
        let mut w_g0 = Vec::with_capacity(n);
        let mut w_g6 = Vec::with_capacity(n);
        for p in 0..panels {
            let a = width * T::from_usize_lossy(p);
            for (&x, &w) in self.gl.nodes().iter().zip(self.gl.weights()) {
                let y = a + width * half * (x + T::one());
                let ww = w * width * half;
                shift.push(y - half);
                w_g0.push(ww * self.profile.eval(y, 0));
                w_g6.push(ww * self.profile.eval(y, 2 * IBP_HALF_ORDER));
            }
        }
        Level {
            panels,
            shift,
            w_g0,
            w_g6,
        }
    }

    /// `G(ξ)`; even in `ξ`.
    pub fn eval(&mut self, xi: T) -> T {
        let xi = xi.abs();
        let direct = xi <= T::lit(IBP_SWITCH_XI);
        let lvl = self.level_for(xi);
        let weights = if direct { &lvl.w_g0 } else { &lvl.w_g6 };
        let mut acc = T::zero();
        for (&s, &w) in lvl.shift.iter().zip(weights) {
            acc = acc + w * (xi * s).cos();
        }
        // symmetric about 1/2: integrate over [0, 1/2] and double
        let full = acc + acc;
        if direct {
            full
        } else {
            let x2 = xi * xi;
            -full / (x2 * x2 * x2)
        }
    }

    pub fn panels_for(&self, xi: T) -> usize {
        let need = Self::required_panels(xi);
        let mut panels = MIN_HALF_PANELS;
        while panels < need {
            panels *= 2;
        }
        panels
    }

    pub fn cached_levels(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.panels).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_is_one_and_edges_vanish() {
        let p = BumpProfile::<f64>::new(8);
        assert!((p.eval(0.5, 0) - 1.0).abs() < 1e-15);
        for k in 0..=8 {
            assert_eq!(p.eval(0.0, k), 0.0);
            assert_eq!(p.eval(1.0, k), 0.0);
            assert_eq!(p.eval(1.3, k), 0.0);
        }
    }

    #[test]
    fn first_prefactors_by_hand() {
        // g' = (1 - 2y)/q² g, so P_1 = 1 - 2y = -t
        let p = BumpProfile::<f64>::new(2);
        assert_eq!(p.prefactor(1), &[0.0, -1.0]);
        // P_2 = -2q² + (1-2y)(1-2q)(1-2y)
        let y = 0.3;
        let q = y * (1.0 - y);
        let qp = 1.0 - 2.0 * y;
        let expect = -2.0 * q * q + qp * qp * (1.0 - 2.0 * q);
        assert!((clenshaw(p.prefactor(2), 2.0 * y - 1.0) - expect).abs() < 1e-14);
    }

    #[test]
    fn high_order_derivatives_integrate_to_zero() {
        // ∫ g^{(k)} = 0 for k ≥ 1; the residual measures evaluation noise
        let p = BumpProfile::<f64>::new(12);
        let gl = GaussLegendre::<f64>::new(16);
        for k in [4, 8, 12] {
            let v = gl.composite(|y| p.eval(y, k), 0.0, 1.0, 512);
            let scale = gl.composite(|y| p.eval(y, k).abs(), 0.0, 1.0, 512);
            assert!(v.abs() < 1e-12 * scale, "k={k}: {v} vs {scale}");
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = BumpProfile::<f64>::new(6);
        let h = 1e-5;
        for &y in &[0.2, 0.45, 0.7] {
            for k in 0..6 {
                let fd = (p.eval(y + h, k) - p.eval(y - h, k)) / (2.0 * h);
                let ex = p.eval(y, k + 1);
                assert!(
                    (fd - ex).abs() <= 1e-6 * ex.abs().max(1.0),
                    "k={k} y={y} fd={fd} exact={ex}"
                );
            }
        }
    }

    #[test]
    fn transform_routes_agree_near_switch() {
        let mut t = BumpTransform::<f64>::new();
        let prof = BumpProfile::<f64>::new(0);
        let gl = GaussLegendre::<f64>::new(16);
        // brute force over 4096 panels
        let brute = |xi: f64| {
            let n = 4096;
            let w = 1.0 / n as f64;
            let mut s = 0.0;
            for p in 0..n {
                let a = p as f64 * w;
                for (&x, &wt) in gl.nodes().iter().zip(gl.weights()) {
                    let y = a + 0.5 * w * (x + 1.0);
                    s += 0.5 * w * wt * prof.eval(y, 0) * (xi * (y - 0.5)).cos();
                }
            }
            s
        };
        for &xi in &[0.0, 3.0, 11.9, 12.1, 30.0, 100.0] {
            let b = brute(xi);
            let g = t.eval(xi);
            // the brute-force direct sum carries ~1e-17 absolute rounding
            assert!((g - b).abs() < 1e-13 * b.abs() + 2e-16, "xi={xi} brute={b} fast={g}");
        }
    }
}
