//! Phase-screen statistics: the power-law structure function, the Fried
//! parameter and the dimensionless turbulence strength `t = w0 / r0`.

use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Structure-function constant of the Kolmogorov phase structure function.
pub const GAMMA: f64 = 6.88;

/// Structure-function exponent in [1, 2].
///
/// A rational value such as `5/3` is kept exactly alongside its float image so
/// that the contour route can recognise it without comparing floats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent<T> {
    value: T,
    exact: Option<Rational64>,
}

/// The three exponents with dedicated closed forms or fast paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExponentKind {
    Linear,
    Kolmogorov,
    Quadratic,
    Other,
}

impl<T: Real> Exponent<T> {
    pub fn linear() -> Self {
        Self::rational(1, 1).expect("1 is in range")
    }

    pub fn kolmogorov() -> Self {
        Self::rational(5, 3).expect("5/3 is in range")
    }

    pub fn quadratic() -> Self {
        Self::rational(2, 1).expect("2 is in range")
    }

    pub fn rational(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::invalid("alpha", "zero denominator"));
        }
        let r = Rational64::new(num, den);
        let value = T::from_int(*r.numer()) / T::from_int(*r.denom());
        Self::check(value)?;
        Ok(Self {
            value,
            exact: Some(r),
        })
    }

    /// A decimal exponent. Integral values are promoted to exact rationals.
    pub fn real(value: T) -> Result<Self> {
        Self::check(value)?;
        let exact = if value == value.round() {
            value.to_i64().map(Rational64::from_integer)
        } else {
            None
        };
        Ok(Self { value, exact })
    }

    fn check(value: T) -> Result<()> {
        if !(value >= T::one() && value <= T::lit(2.0)) {
            return Err(Error::invalid("alpha", format!("{value} outside [1, 2]")));
        }
        Ok(())
    }

    pub fn value(&self) -> T {
        self.value
    }

    pub fn exact(&self) -> Option<Rational64> {
        self.exact
    }

    pub fn kind(&self) -> ExponentKind {
        let near = |x: f64| (self.value.to_f64_lossy() - x).abs() <= 1e-12;
        match self.exact {
            Some(r) if r == Rational64::from_integer(1) => ExponentKind::Linear,
            Some(r) if r == Rational64::new(5, 3) => ExponentKind::Kolmogorov,
            Some(r) if r == Rational64::from_integer(2) => ExponentKind::Quadratic,
            Some(_) => ExponentKind::Other,
            None if near(1.0) => ExponentKind::Linear,
            None if near(5.0 / 3.0) => ExponentKind::Kolmogorov,
            None if near(2.0) => ExponentKind::Quadratic,
            None => ExponentKind::Other,
        }
    }
}

impl<T: Real> fmt::Display for Exponent<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exact {
            Some(r) if *r.denom() == 1 => write!(f, "{}", r.numer()),
            Some(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            None => write!(f, "{}", self.value),
        }
    }
}

impl<T: Real> serde::Serialize for Exponent<T> {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl FromStr for Exponent<f64> {
    type Err = Error;

    /// Accepts `"5/3"`, `"2"` or a decimal such as `"1.5"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: i64 = n
                .trim()
                .parse()
                .map_err(|_| Error::invalid("alpha", format!("bad numerator in {s:?}")))?;
            let d: i64 = d
                .trim()
                .parse()
                .map_err(|_| Error::invalid("alpha", format!("bad denominator in {s:?}")))?;
            Self::rational(n, d)
        } else {
            let v: f64 = s
                .parse()
                .map_err(|_| Error::invalid("alpha", format!("cannot parse {s:?}")))?;
            Self::real(v)
        }
    }
}

/// Atmospheric inputs from which the Fried parameter is derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atmosphere<T> {
    /// Refractive-index structure constant C_n^2 (length^(-2/3)).
    pub cn2: T,
    /// Optical wavenumber (1/length).
    pub k: T,
    /// Path length.
    pub path_length: T,
}

/// Turbulence model for one phase screen seen by a beam of width `w0`.
///
/// `r0 = inf` represents the turbulence-free limit `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurbulenceParams<T> {
    pub alpha: Exponent<T>,
    pub gamma: T,
    pub w0: T,
    pub r0: T,
    pub atmosphere: Option<Atmosphere<T>>,
}

impl<T: Real> TurbulenceParams<T> {
    pub fn new(alpha: Exponent<T>, w0: T, r0: T) -> Result<Self> {
        if !(w0 > T::zero() && w0.is_finite()) {
            return Err(Error::invalid(
                "w0",
                format!("{w0} must be positive and finite"),
            ));
        }
        if !(r0 > T::zero()) {
            return Err(Error::invalid("r0", format!("{r0} must be positive")));
        }
        Ok(Self {
            alpha,
            gamma: T::lit(GAMMA),
            w0,
            r0,
            atmosphere: None,
        })
    }

    /// Unit beam width and `r0 = 1 / t`.
    pub fn from_strength(alpha: Exponent<T>, t: T) -> Result<Self> {
        if !(t >= T::zero() && t.is_finite()) {
            return Err(Error::invalid(
                "t",
                format!("{t} must be finite and non-negative"),
            ));
        }
        Self::new(alpha, T::one(), t.recip())
    }

    pub fn from_atmosphere(alpha: Exponent<T>, w0: T, atmosphere: Atmosphere<T>) -> Result<Self> {
        let r0 = fried_parameter(atmosphere.cn2, atmosphere.k, atmosphere.path_length)?;
        let mut p = Self::new(alpha, w0, r0)?;
        p.atmosphere = Some(atmosphere);
        Ok(p)
    }

    pub fn with_gamma(mut self, gamma: T) -> Result<Self> {
        if !(gamma > T::zero() && gamma.is_finite()) {
            return Err(Error::invalid("gamma", format!("{gamma} must be positive")));
        }
        self.gamma = gamma;
        Ok(self)
    }

    /// Turbulence strength `w0 / r0`.
    pub fn t(&self) -> T {
        self.w0 / self.r0
    }

    pub fn alpha_value(&self) -> T {
        self.alpha.value()
    }
}

/// Phase structure function `gamma (x / r0)^alpha` in rad^2.
pub fn structure_function<T: Real>(x: T, params: &TurbulenceParams<T>) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    params.gamma * (x / params.r0).powf(params.alpha.value())
}

/// Fried parameter `(0.423 C_n^2 k^2 L)^(-3/5)`.
pub fn fried_parameter<T: Real>(cn2: T, k: T, path_length: T) -> Result<T> {
    for (name, v) in [("cn2", cn2), ("k", k), ("path_length", path_length)] {
        if !(v > T::zero() && v.is_finite()) {
            return Err(Error::domain(
                "fried_parameter",
                format!("{name} = {v} must be positive"),
            ));
        }
    }
    Ok((T::lit(0.423) * cn2 * k * k * path_length).powf(T::lit(-0.6)))
}
