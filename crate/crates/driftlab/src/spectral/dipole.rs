use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::bump::{horner, BumpProfile};
use super::SpectralError;
use crate::Real;

/// Derivative order available unless a dipole is built with another bound.
pub const DEFAULT_MAX_ORDER: usize = 16;

/// `a cos(ωx) + b sin(ωx)` with angular frequency `ω`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: num_traits::Zero + Deserialize<'de>"))]
pub struct TrigTerm<T> {
    pub freq: T,
    #[serde(default = "T::zero")]
    pub cos: T,
    #[serde(default = "T::zero")]
    pub sin: T,
}

/// Scaled canonical bump supported on `[center - half_width, center + half_width]`.
/// The sign of the bump is carried by `amplitude`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump<T> {
    pub center: T,
    pub half_width: T,
    pub amplitude: T,
}

impl<T: Real> Bump<T> {
    pub fn new(center: T, half_width: T, amplitude: T) -> Self {
        Bump {
            center,
            half_width,
            amplitude,
        }
    }

    pub fn support(&self) -> (T, T) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    pub fn contains(&self, x: T) -> bool {
        let (a, b) = self.support();
        x > a && x < b
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Representation<T> {
    Polynomial(Vec<T>),
    Trig(Vec<TrigTerm<T>>),
    Bumps(Vec<Bump<T>>),
}

/// Real dipole moment on `[0,1]` with exact derivatives up to `max_order`.
#[derive(Clone, Debug)]
pub struct DipoleMoment<T> {
    repr: Representation<T>,
    max_order: usize,
    profile: Option<Arc<BumpProfile<T>>>,
}

impl<T: Real> PartialEq for DipoleMoment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.repr == other.repr && self.max_order == other.max_order
    }
}

impl<T: Real> DipoleMoment<T> {
    /// `μ(x) = Σ c_i x^i`.
    pub fn polynomial(coeffs: Vec<T>) -> Result<Self, SpectralError> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(SpectralError::InvalidDipole("non-finite coefficient".into()));
        }
        Ok(DipoleMoment {
            repr: Representation::Polynomial(coeffs),
            max_order: DEFAULT_MAX_ORDER,
            profile: None,
        })
    }

    /// `μ ≡ 0`.
    pub fn zero() -> Self {
        Self::polynomial(Vec::new()).expect("empty polynomial")
    }

    /// `μ(x) = x - 1/2`.
    pub fn centered_linear() -> Self {
        Self::polynomial(vec![T::lit(-0.5), T::one()]).expect("finite")
    }

    pub fn trig(terms: Vec<TrigTerm<T>>) -> Result<Self, SpectralError> {
        if terms
            .iter()
            .any(|t| !(t.freq.is_finite() && t.cos.is_finite() && t.sin.is_finite()))
        {
            return Err(SpectralError::InvalidDipole("non-finite trig term".into()));
        }
        Ok(DipoleMoment {
            repr: Representation::Trig(terms),
            max_order: DEFAULT_MAX_ORDER,
            profile: None,
        })
    }

    /// Sum of bumps with pairwise disjoint closed supports inside `(0,1)`.
    pub fn bumps(mut bumps: Vec<Bump<T>>) -> Result<Self, SpectralError> {
        for b in &bumps {
            let (lo, hi) = b.support();
            if !(b.half_width > T::zero() && b.amplitude.is_finite() && lo.is_finite() && hi.is_finite()) {
                return Err(SpectralError::InvalidDipole(format!(
                    "bump at {:?} has non-positive width or non-finite data",
                    b.center
                )));
            }
            if lo <= T::zero() || hi >= T::one() {
                return Err(SpectralError::InvalidDipole(format!(
                    "bump support [{:?}, {:?}] not inside (0,1)",
                    lo, hi
                )));
            }
        }
        bumps.sort_by(|a, b| a.center.partial_cmp(&b.center).expect("finite centres"));
        for w in bumps.windows(2) {
            if w[0].support().1 >= w[1].support().0 {
                return Err(SpectralError::InvalidDipole(format!(
                    "bump supports around {:?} and {:?} overlap",
                    w[0].center, w[1].center
                )));
            }
        }
        Ok(DipoleMoment {
            repr: Representation::Bumps(bumps),
            max_order: DEFAULT_MAX_ORDER,
            profile: Some(Arc::new(BumpProfile::new(DEFAULT_MAX_ORDER))),
        })
    }

    /// Changes the derivative bound `D`.
    pub fn with_max_order(mut self, d: usize) -> Self {
        self.max_order = d;
        if let Representation::Bumps(_) = self.repr {
            let have = self.profile.as_ref().map_or(0, |p| p.max_order());
            if have < d {
                self.profile = Some(Arc::new(BumpProfile::new(d)));
            }
        }
        self
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn representation(&self) -> &Representation<T> {
        &self.repr
    }

    pub fn bump_list(&self) -> &[Bump<T>] {
        match &self.repr {
            Representation::Bumps(b) => b,
            _ => &[],
        }
    }

    pub fn is_compactly_supported(&self) -> bool {
        matches!(self.repr, Representation::Bumps(_))
    }

    /// True when the representation is identically zero.
    pub fn is_zero(&self) -> bool {
        match &self.repr {
            Representation::Polynomial(c) => c.iter().all(|v| v.is_zero()),
            Representation::Trig(t) => t.iter().all(|v| v.cos.is_zero() && v.sin.is_zero()),
            Representation::Bumps(b) => b.iter().all(|v| v.amplitude.is_zero()),
        }
    }

    /// Intervals outside of which `μ` vanishes with all derivatives.
    pub fn support(&self) -> Vec<(T, T)> {
        match &self.repr {
            Representation::Bumps(b) => b.iter().map(|b| b.support()).collect(),
            _ => vec![(T::zero(), T::one())],
        }
    }

    /// Highest angular frequency carried by the representation itself;
    /// bumps report `π / half_width` as an effective bandwidth.
    pub fn bandwidth(&self) -> T {
        match &self.repr {
            Representation::Polynomial(_) => T::zero(),
            Representation::Trig(t) => t.iter().fold(T::zero(), |m, v| m.max(v.freq.abs())),
            Representation::Bumps(b) => b
                .iter()
                .fold(T::zero(), |m, v| m.max(T::PI() / v.half_width)),
        }
    }

    /// Multiplies every amplitude by `s`.
    pub fn scaled(&self, s: T) -> Self {
        let repr = match &self.repr {
            Representation::Polynomial(c) => Representation::Polynomial(c.iter().map(|&v| v * s).collect()),
            Representation::Trig(t) => Representation::Trig(
                t.iter()
                    .map(|v| TrigTerm {
                        freq: v.freq,
                        cos: v.cos * s,
                        sin: v.sin * s,
                    })
                    .collect(),
            ),
            Representation::Bumps(b) => Representation::Bumps(
                b.iter()
                    .map(|v| Bump::new(v.center, v.half_width, v.amplitude * s))
                    .collect(),
            ),
        };
        DipoleMoment {
            repr,
            max_order: self.max_order,
            profile: self.profile.clone(),
        }
    }

    /// `μ^{(k)}(x)`.
    pub fn eval(&self, x: T, k: usize) -> Result<T, SpectralError> {
        if k > self.max_order {
            return Err(SpectralError::UnsupportedOrder {
                requested: k,
                max: self.max_order,
            });
        }
        if !(x >= T::zero() && x <= T::one()) {
            return Err(SpectralError::OutOfDomain(x.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(self.eval_unchecked(x, k))
    }

    /// As [`eval`](Self::eval) without the domain and order checks; used in
    /// quadrature loops whose nodes are known to lie in `[0,1]`.
    pub fn eval_unchecked(&self, x: T, k: usize) -> T {
        match &self.repr {
            Representation::Polynomial(c) => {
                if k >= c.len() {
                    return T::zero();
                }
                let d: Vec<T> = (k..c.len())
                    .map(|i| c[i] * falling(i, k))
                    .collect();
                horner(&d, x)
            }
            Representation::Trig(terms) => {
                let mut acc = T::zero();
                for t in terms {
                    let (s, c) = (t.freq * x).sin_cos();
                    let f = t.freq.powi(k as i32);
                    // d^k cos = ω^k cos(·+kπ/2), d^k sin = ω^k sin(·+kπ/2)
                    let (dc, ds) = match k % 4 {
                        0 => (c, s),
                        1 => (-s, c),
                        2 => (-c, -s),
                        _ => (s, -c),
                    };
                    acc = acc + f * (t.cos * dc + t.sin * ds);
                }
                acc
            }
            Representation::Bumps(bumps) => {
                let profile = self.profile.as_ref().expect("bump profile");
                for b in bumps {
                    if b.contains(x) {
                        let len = b.half_width + b.half_width;
                        let y = (x - (b.center - b.half_width)) / len;
                        return b.amplitude * profile.eval(y, k) / len.powi(k as i32);
                    }
                }
                T::zero()
            }
        }
    }
}

fn falling<T: Real>(i: usize, k: usize) -> T {
    let mut f = T::one();
    for r in 0..k {
        f = f * T::from_usize_lossy(i - r);
    }
    f
}

/// JSON form of a dipole: `{"kind": "polynomial", "coeffs": [...]}`,
/// `{"kind": "trig", "terms": [{"freq", "cos", "sin"}]}` or
/// `{"kind": "bumps", "bumps": [{"center", "half_width", "amplitude"}]}`,
/// each with an optional `max_order`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    rename_all = "lowercase",
    deny_unknown_fields,
    bound(deserialize = "T: num_traits::Zero + Deserialize<'de>")
)]
pub enum DipoleSpec<T> {
    Polynomial {
        coeffs: Vec<T>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_order: Option<usize>,
    },
    Trig {
        terms: Vec<TrigTerm<T>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_order: Option<usize>,
    },
    Bumps {
        bumps: Vec<Bump<T>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_order: Option<usize>,
    },
}

impl<T: Real> TryFrom<DipoleSpec<T>> for DipoleMoment<T> {
    type Error = SpectralError;

    fn try_from(spec: DipoleSpec<T>) -> Result<Self, Self::Error> {
        let (mu, d) = match spec {
            DipoleSpec::Polynomial { coeffs, max_order } => (Self::polynomial(coeffs)?, max_order),
            DipoleSpec::Trig { terms, max_order } => (Self::trig(terms)?, max_order),
            DipoleSpec::Bumps { bumps, max_order } => (Self::bumps(bumps)?, max_order),
        };
        Ok(match d {
            Some(d) => mu.with_max_order(d),
            None => mu,
        })
    }
}

impl<T: Real> From<&DipoleMoment<T>> for DipoleSpec<T> {
    fn from(mu: &DipoleMoment<T>) -> Self {
        let max_order = (mu.max_order != DEFAULT_MAX_ORDER).then_some(mu.max_order);
        match &mu.repr {
            Representation::Polynomial(c) => DipoleSpec::Polynomial {
                coeffs: c.clone(),
                max_order,
            },
            Representation::Trig(t) => DipoleSpec::Trig {
                terms: t.clone(),
                max_order,
            },
            Representation::Bumps(b) => DipoleSpec::Bumps {
                bumps: b.clone(),
                max_order,
            },
        }
    }
}

impl<T: Real + Serialize> Serialize for DipoleMoment<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        DipoleSpec::from(self).serialize(s)
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for DipoleMoment<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let spec = DipoleSpec::<T>::deserialize(d)?;
        DipoleMoment::try_from(spec).map_err(serde::de::Error::custom)
    }
}
