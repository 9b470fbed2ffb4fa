//! Universal crosstalk as a function of `x = xi / r0` alone, the concurrence
//! it implies, and the leading-order laws for weak turbulence.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::map_asymptotic::{amplitudes_asymptotic, series_coefficients_x};
use crate::scalar::Real;
use crate::turbulence::{Exponent, ExponentKind, TurbulenceParams, GAMMA};

/// Representative azimuthal index at which the Kolmogorov curve is evaluated.
pub const L0_STAR: i64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct UniversalPoint<T> {
    pub x: T,
    pub b_tilde: T,
    pub concurrence: T,
    pub alpha: Exponent<T>,
}

fn canonical<T: Real>(alpha: &Exponent<T>) -> Result<ExponentKind> {
    match alpha.kind() {
        ExponentKind::Other => Err(Error::invalid(
            "alpha",
            format!("universal curves exist for alpha in {{1, 5/3, 2}}, got {alpha}"),
        )),
        k => Ok(k),
    }
}

fn check_x<T: Real>(x: T) -> Result<()> {
    if !(x >= T::zero()) || x.is_nan() {
        return Err(Error::domain(
            "universal",
            format!("x = {x} must be non-negative"),
        ));
    }
    Ok(())
}

/// Universal `b_tilde(x)`.
///
/// * `alpha = 1`: `(gamma x/2)^2 / (pi^2 + (gamma x/2)^2)`
/// * `alpha = 2`: `exp(-pi^2 / (2 gamma x^2))`, continued by 0 at `x = 0`
/// * `alpha = 5/3`: the rotated-contour ratio `b/a` at `l0 = L0_STAR` and
///   `t = 2 sqrt(2 l0) x / pi`, which depends on `x` only.
pub fn btilde_universal<T: Real>(x: T, alpha: &Exponent<T>) -> Result<T> {
    btilde_universal_at(x, alpha, L0_STAR)
}

/// [`btilde_universal`] with an explicit representative `l0` for the contour route.
pub fn btilde_universal_at<T: Real>(x: T, alpha: &Exponent<T>, l0_star: i64) -> Result<T> {
    let kind = canonical(alpha)?;
    check_x(x)?;
    if x == T::zero() {
        return Ok(T::zero());
    }
    let gamma = T::lit(GAMMA);
    let pi = T::PI();
    match kind {
        ExponentKind::Linear => {
            let u = gamma * x / T::lit(2.0);
            let u2 = u * u;
            Ok(if u2.is_infinite() {
                T::one()
            } else {
                u2 / (pi * pi + u2)
            })
        }
        ExponentKind::Quadratic => Ok((-pi * pi / (T::lit(2.0) * gamma * x * x)).exp()),
        _ => {
            if l0_star < 1 {
                return Err(Error::invalid("l0_star", "must be positive"));
            }
            let t = T::lit(2.0) * T::SQRT_2() * T::from_int(l0_star).sqrt() * x / pi;
            let params = TurbulenceParams::from_strength(*alpha, t)?;
            Ok(amplitudes_asymptotic(l0_star, &params, None)?.b_tilde)
        }
    }
}

pub fn universal_point<T: Real>(x: T, alpha: &Exponent<T>) -> Result<UniversalPoint<T>> {
    let b_tilde = btilde_universal(x, alpha)?;
    Ok(UniversalPoint {
        x,
        b_tilde,
        concurrence: concurrence(b_tilde),
        alpha: *alpha,
    })
}

/// Constant of the leading-order law: the coefficient of `x^2` for
/// `alpha = 1`, of `x^(8/3)` for `alpha = 5/3`, and the denominator `2 gamma`
/// of `exp(-pi^2 / (2 gamma x^2))` for `alpha = 2`.
pub fn leading_coefficient<T: Real>(alpha: &Exponent<T>) -> Result<T> {
    let gamma = T::lit(GAMMA);
    Ok(match canonical(alpha)? {
        ExponentKind::Linear => (gamma / T::lit(2.0)).powi(2) / (T::PI() * T::PI()),
        ExponentKind::Quadratic => T::lit(2.0) * gamma,
        _ => {
            let params = TurbulenceParams::from_strength(*alpha, T::one())?;
            series_coefficients_x(&params, 1)?[0].1
        }
    })
}

/// Leading-order `b_tilde` for `x << 1`.
pub fn btilde_leading<T: Real>(x: T, alpha: &Exponent<T>) -> Result<T> {
    check_x(x)?;
    let c = leading_coefficient(alpha)?;
    Ok(match alpha.kind() {
        ExponentKind::Linear => c * x * x,
        ExponentKind::Quadratic if x == T::zero() => T::zero(),
        ExponentKind::Quadratic => (-T::PI() * T::PI() / (c * x * x)).exp(),
        _ => c * x.powf(T::lit(8.0) / T::lit(3.0)),
    })
}

/// Concurrence `max(0, (1 - 2 b) / (1 + b)^2)` of the output two-photon state.
pub fn concurrence<T: Real>(b_tilde: T) -> T {
    ((T::one() - T::lit(2.0) * b_tilde) / (T::one() + b_tilde).powi(2)).max(T::zero())
}

/// The `b_tilde <= 1/2` branch that produces concurrence `c`.
pub fn btilde_from_concurrence<T: Real>(c: T) -> Result<T> {
    if !(c >= T::zero() && c <= T::one()) {
        return Err(Error::domain(
            "btilde_from_concurrence",
            format!("C = {c} outside [0, 1]"),
        ));
    }
    Ok((T::one() - c) / (c + T::one() + (T::lit(3.0) * c + T::one()).sqrt()))
}

/// Empirical fit `exp(-4.16 x^3.24)` to numerically obtained Kolmogorov concurrence.
pub fn leonhard_fit<T: Real>(x: T) -> T {
    (-T::lit(4.16) * x.powf(T::lit(3.24))).exp()
}

/// Smallest `x` at which the concurrence reaches zero (`b_tilde = 1/2`).
pub fn death_point<T: Real>(alpha: &Exponent<T>) -> Result<T> {
    let gamma = T::lit(GAMMA);
    let pi = T::PI();
    match canonical(alpha)? {
        ExponentKind::Linear => Ok(T::lit(2.0) * pi / gamma),
        ExponentKind::Quadratic => Ok(pi / (T::lit(2.0) * gamma * T::LN_2()).sqrt()),
        _ => {
            let half = T::lit(0.5);
            let (mut lo, mut hi) = (T::lit(0.01), T::one());
            while btilde_universal(hi, alpha)? < half {
                hi = hi * T::lit(2.0);
            }
            for _ in 0..200 {
                let mid = (lo + hi) / T::lit(2.0);
                if !(mid > lo && mid < hi) {
                    break;
                }
                if btilde_universal(mid, alpha)? < half {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok((lo + hi) / T::lit(2.0))
        }
    }
}
