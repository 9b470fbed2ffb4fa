//! Laguerre-Gauss modes with radial index zero and the phase correlation
//! length of an OAM beam.

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::specfun::{ln_factorial, ln_gamma};

/// An LG_{0,l0} mode of width `w0`, with the relative phase `phi` of the
/// two-photon input state it belongs to.
///
/// `phi` is carried for completeness; the concurrence of the output state
/// does not depend on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OamMode<T> {
    pub l0: i64,
    pub p: u32,
    pub w0: T,
    pub phi: T,
}

impl<T: Real> OamMode<T> {
    pub fn new(l0: i64, w0: T) -> Result<Self> {
        if !(w0 > T::zero() && w0.is_finite()) {
            return Err(Error::invalid(
                "w0",
                format!("{w0} must be positive and finite"),
            ));
        }
        Ok(Self {
            l0,
            p: 0,
            w0,
            phi: T::zero(),
        })
    }

    pub fn with_phase(mut self, phi: T) -> Self {
        self.phi = phi;
        self
    }

    /// Radius of maximal intensity, `w0 sqrt(|l0| / 2)`.
    pub fn peak_radius(&self) -> T {
        self.w0 * (T::from_int(self.l0.abs()) / T::lit(2.0)).sqrt()
    }
}

/// Natural log of the radial profile; `-inf` at `r = 0` for `l0 != 0`.
pub fn ln_radial_profile<T: Real>(mode: &OamMode<T>, r: T) -> T {
    let l = mode.l0.unsigned_abs();
    let w0 = mode.w0;
    let base = T::lit(2.0).ln() - w0.ln() - T::lit(0.5) * ln_factorial::<T>(l) - (r / w0).powi(2);
    if l == 0 {
        return base;
    }
    if r == T::zero() {
        return T::neg_infinity();
    }
    base + T::from_int(l as i64) * (T::SQRT_2() * r / w0).ln()
}

/// Radial profile `R_{0,l}(r) = (2/w0) (l!)^(-1/2) (sqrt(2) r / w0)^|l| exp(-r^2/w0^2)`,
/// normalized so that the integral of `R^2 r dr` over [0, inf) is one.
///
/// Evaluated in log space; returns 0 where the result underflows.
pub fn radial_profile<T: Real>(mode: &OamMode<T>, r: T) -> Result<T> {
    if !(r >= T::zero()) {
        return Err(Error::domain(
            "radial_profile",
            format!("r = {r} must be non-negative"),
        ));
    }
    Ok(ln_radial_profile(mode, r).exp())
}

/// Phase correlation length `sin(pi/2|l0|) (w0/sqrt 2) Gamma(|l0|+3/2)/Gamma(|l0|+1)`.
pub fn xi<T: Real>(l0: i64, w0: T) -> Result<T> {
    if l0 == 0 {
        return Err(Error::domain(
            "xi",
            "l0 = 0 carries no orbital angular momentum",
        ));
    }
    let l = T::from_int(l0.abs());
    let ratio = (ln_gamma(l + T::lit(1.5))? - ln_gamma(l + T::one())?).exp();
    Ok((T::FRAC_PI_2() / l).sin() * w0 * T::FRAC_1_SQRT_2() * ratio)
}

/// Large-`l0` form `(pi / 2 sqrt 2) w0 / sqrt(l0)`.
pub fn xi_asymptotic<T: Real>(l0: i64, w0: T) -> Result<T> {
    if l0 < 1 {
        return Err(Error::domain(
            "xi_asymptotic",
            format!("l0 = {l0} must be positive"),
        ));
    }
    Ok(T::PI() / (T::lit(2.0) * T::SQRT_2()) * w0 / T::from_int(l0).sqrt())
}
