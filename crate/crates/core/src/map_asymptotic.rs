//! Closed-form and asymptotic routes to `a`, `b` and `b_tilde`.
//!
//! For `l0 >> 1` the radial integral localizes at the saddle and the map
//! elements reduce to
//!
//! ```text
//! a ~ (1/pi) int_0^inf exp(-A y^alpha) dy = (1/pi) A^(-1/alpha) Gamma(1 + 1/alpha)
//! b ~ (1/pi) Re int_0^inf exp(-A y^alpha - 2 i l0 y) dy
//! ```
//!
//! with `A = 2^(-alpha-1) gamma (2 l0)^(alpha/2) t^alpha`. The `b` integral is
//! evaluated on the ray `y = x e^(i beta)`, where it becomes
//! `e^(i beta) int exp(-q x^alpha - s x) dx` with `q = A e^(i alpha beta)` and
//! `s = 2 i l0 e^(i beta)`; for `beta` in `(-pi/(2 alpha), 0)` the integrand
//! decays exponentially. Expanding `exp(-q x^alpha)` term by term gives the
//! divergent Watson series.

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::map_numeric::{AmplitudePair, Method};
use crate::quadrature::{integrate_adaptive, AdaptiveConfig};
use crate::scalar::Real;
use crate::specfun::{gauss_2f1, ln_binomial, ln_factorial, ln_gamma};
use crate::turbulence::{ExponentKind, TurbulenceParams};

/// Parameters of the rotated-contour integral for one `(l0, t, alpha)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticContext<T> {
    /// The constant `A`.
    pub scale: T,
    pub beta: T,
    pub q: Complex<T>,
    pub s: Complex<T>,
    pub n_terms: usize,
}

/// Default rotation: `-pi/5` for `alpha = 5/3`, else the wedge point `-pi/(2 + 2 alpha)`.
pub fn default_beta<T: Real>(params: &TurbulenceParams<T>) -> T {
    match params.alpha.kind() {
        ExponentKind::Kolmogorov => -T::PI() / T::lit(5.0),
        _ => -T::PI() / (T::lit(2.0) + T::lit(2.0) * params.alpha.value()),
    }
}

/// `A = 2^(-alpha-1) gamma (2 l0)^(alpha/2) t^alpha`.
pub fn scale_a<T: Real>(l0: i64, params: &TurbulenceParams<T>) -> T {
    let alpha = params.alpha.value();
    let two = T::lit(2.0);
    two.powf(-alpha - T::one())
        * params.gamma
        * (two * T::from_int(l0)).powf(alpha / two)
        * params.t().powf(alpha)
}

impl<T: Real> AsymptoticContext<T> {
    pub fn new(l0: i64, params: &TurbulenceParams<T>) -> Result<Self> {
        Self::with_beta(l0, params, default_beta(params))
    }

    pub fn with_beta(l0: i64, params: &TurbulenceParams<T>, beta: T) -> Result<Self> {
        if l0 < 1 {
            return Err(Error::invalid("l0", format!("{l0} must be positive")));
        }
        let alpha = params.alpha.value();
        let scale = scale_a(l0, params);
        let q = Complex::from_polar(scale, alpha * beta);
        let s = Complex::new(T::zero(), T::lit(2.0) * T::from_int(l0))
            * Complex::from_polar(T::one(), beta);
        if !(q.re > T::zero() || scale == T::zero()) || !(s.re > T::zero()) {
            return Err(Error::invalid(
                "beta",
                format!(
                    "{beta} outside the convergence wedge (-pi/(2 alpha), 0) for alpha = {alpha}"
                ),
            ));
        }
        Ok(Self {
            scale,
            beta,
            q,
            s,
            n_terms: 3,
        })
    }
}

fn check_l0_t<T: Real>(op: &'static str, l0: i64, params: &TurbulenceParams<T>) -> Result<()> {
    if l0 < 1 {
        return Err(Error::invalid("l0", format!("{l0} must be positive")));
    }
    if !(params.t() > T::zero()) {
        return Err(Error::domain(op, "asymptotic forms need t > 0"));
    }
    Ok(())
}

/// Steepest-descent survival amplitude `(1/pi) A^(-1/alpha) Gamma(1 + 1/alpha)`.
///
/// Exceeds one when `l0` or `t` is too small for the asymptotics to hold.
pub fn a_asym<T: Real>(l0: i64, params: &TurbulenceParams<T>) -> Result<T> {
    check_l0_t("a_asym", l0, params)?;
    let inv = params.alpha.value().recip();
    let ln = ln_gamma(T::one() + inv)? - inv * scale_a(l0, params).ln();
    Ok(ln.exp() * T::FRAC_1_PI())
}

/// Asymptotic crosstalk amplitude.
///
/// Closed forms for `alpha = 1` (a Lorentzian) and `alpha = 2` (a Gaussian);
/// any other exponent goes through the rotated contour of `ctx`.
pub fn b_asym<T: Real>(
    l0: i64,
    params: &TurbulenceParams<T>,
    ctx: &AsymptoticContext<T>,
) -> Result<T> {
    check_l0_t("b_asym", l0, params)?;
    let l = T::from_int(l0);
    let gamma = params.gamma;
    let t = params.t();
    let pi = T::PI();
    match params.alpha.kind() {
        ExponentKind::Linear => {
            let num = gamma / (T::lit(4.0) * pi) * (T::lit(2.0) * l).sqrt() * t;
            Ok(num / (T::lit(4.0) * l * l + gamma * gamma * t * t * l / T::lit(8.0)))
        }
        ExponentKind::Quadratic => {
            Ok((-T::lit(4.0) * l / (gamma * t * t)).exp() / (t * (pi * gamma * l).sqrt()))
        }
        _ => b_contour(params.alpha.value(), ctx),
    }
}

/// `(1/pi) Re[e^(i beta) int_0^inf exp(-q x^alpha - s x) dx]` by adaptive
/// quadrature along the rotated ray.
///
/// The `exp(-s x)` part integrates to `1/s`, whose contribution
/// `Re[e^(i beta)/s]` vanishes, so only `e^(-s x) (e^(-q x^alpha) - 1)` is
/// integrated. This keeps the integrand the size of the result rather than
/// of `1/(2 l0)`.
pub fn b_contour<T: Real>(alpha: T, ctx: &AsymptoticContext<T>) -> Result<T> {
    let (q, s, beta) = (ctx.q, ctx.s, ctx.beta);
    if !(q.re > T::zero()) || !(s.re > T::zero()) {
        return Err(Error::invalid(
            "beta",
            "contour outside the convergence wedge",
        ));
    }
    let budget = T::lit(60.0);
    let decay = |x: T| q.re * x.powf(alpha) + s.re * x;
    let mut hi = T::one();
    while decay(hi) < budget {
        hi = hi * T::lit(2.0);
    }
    let mut lo = T::zero();
    for _ in 0..200 {
        let mid = (lo + hi) / T::lit(2.0);
        if !(mid > lo && mid < hi) {
            break;
        }
        if decay(mid) < budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x_end = hi;

    let scale = s.norm().recip().min(q.norm().powf(-alpha.recip()));
    let x_min = scale * T::lit(1e-6);
    let mut breaks = vec![x_end];
    let mut x = x_end;
    while x > x_min {
        x = x / T::lit(2.0);
        breaks.push(x);
    }
    breaks.push(T::zero());
    breaks.reverse();

    let rot = Complex::from_polar(T::one(), beta);
    let integrand = |x: T| {
        if x == T::zero() {
            return [T::zero()];
        }
        let z = -q * x.powf(alpha);
        let half = z.im / T::lit(2.0);
        let em1 = Complex::new(
            z.re.exp_m1() * z.im.cos() - T::lit(2.0) * half.sin() * half.sin(),
            z.re.exp() * z.im.sin(),
        );
        [(rot * (-s * x).exp() * em1).re]
    };
    let cfg = AdaptiveConfig {
        rel_tol: T::lit(1e-12),
        abs_tol: T::zero(),
        max_subdivisions: 10_000,
    };
    let r = integrate_adaptive("rotated contour", integrand, &breaks, &cfg)?;
    let tail = -(rot * (-s * x_end).exp() / s).re;
    Ok((r.value[0] + tail) * T::FRAC_1_PI())
}

/// `a`, `b` and `b_tilde` from the steepest-descent forms; `t = 0` gives the
/// identity. Flags `outside_validity` when `a > 1`.
pub fn amplitudes_asymptotic<T: Real>(
    l0: i64,
    params: &TurbulenceParams<T>,
    ctx: Option<&AsymptoticContext<T>>,
) -> Result<AmplitudePair<T>> {
    if l0 < 1 {
        return Err(Error::invalid("l0", format!("{l0} must be positive")));
    }
    if params.t() == T::zero() {
        return Ok(AmplitudePair::identity(Method::Asymptotic));
    }
    let owned;
    let ctx = match ctx {
        Some(c) => c,
        None => {
            owned = AsymptoticContext::new(l0, params)?;
            &owned
        }
    };
    let a = a_asym(l0, params)?;
    let b = b_asym(l0, params, ctx)?;
    let mut pair = AmplitudePair::from_parts(a, b, T::zero(), T::zero(), Method::Asymptotic);
    pair.outside_validity = a > T::one();
    Ok(pair)
}

/// Truncated Watson series for `b_tilde`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesResult<T> {
    pub b_tilde: T,
    /// Individual contributions, `terms[k]` for order `k + 1`.
    pub terms: Vec<T>,
    /// First order whose term envelope exceeds its predecessor, if any.
    pub divergence_onset: Option<usize>,
    /// The onset lies within the retained orders.
    pub diverging: bool,
}

/// Envelope `|c^n Gamma(1 + n alpha) / n!|` in log form, `c = A / (2 l0)^alpha`.
fn ln_envelope<T: Real>(n: usize, ln_c: T, alpha: T) -> Result<T> {
    let nf = T::from_int(n as i64);
    Ok(nf * ln_c + ln_gamma(T::one() + nf * alpha)? - ln_factorial::<T>(n as u64))
}

/// Order-`n` contribution to `b_tilde` at `(l0, t)`:
/// `(-1)^(n+1) c^n Gamma(1 + n alpha) sin(n pi alpha/2) / (n! 2 l0 A^(-1/alpha) Gamma(1 + 1/alpha))`.
fn series_term<T: Real>(n: usize, l0: i64, params: &TurbulenceParams<T>) -> Result<T> {
    let alpha = params.alpha.value();
    let a = scale_a(l0, params);
    let two_l = T::lit(2.0) * T::from_int(l0);
    let ln_c = a.ln() - alpha * two_l.ln();
    let nf = T::from_int(n as i64);
    let ln_mag = ln_envelope(n, ln_c, alpha)? - two_l.ln() + a.ln() / alpha
        - ln_gamma(T::one() + alpha.recip())?;
    let sign = if n % 2 == 1 { T::one() } else { -T::one() };
    Ok(sign * (nf * T::PI() * alpha / T::lit(2.0)).sin() * ln_mag.exp())
}

/// First order `n >= 2` at which the term envelope grows, scanning up to `max_n`.
pub fn divergence_onset<T: Real>(
    l0: i64,
    params: &TurbulenceParams<T>,
    max_n: usize,
) -> Result<Option<usize>> {
    check_l0_t("divergence_onset", l0, params)?;
    let alpha = params.alpha.value();
    let ln_c = scale_a(l0, params).ln() - alpha * (T::lit(2.0) * T::from_int(l0)).ln();
    let mut prev = ln_envelope(1, ln_c, alpha)?;
    for n in 2..=max_n {
        let cur = ln_envelope(n, ln_c, alpha)?;
        if cur > prev {
            return Ok(Some(n));
        }
        prev = cur;
    }
    Ok(None)
}

/// Watson-series `b_tilde` truncated after `n_terms` orders.
pub fn b_series<T: Real>(
    l0: i64,
    params: &TurbulenceParams<T>,
    n_terms: usize,
) -> Result<SeriesResult<T>> {
    check_l0_t("b_series", l0, params)?;
    if n_terms < 1 {
        return Err(Error::invalid("n_terms", "must be at least 1"));
    }
    let terms = (1..=n_terms)
        .map(|n| series_term(n, l0, params))
        .collect::<Result<Vec<_>>>()?;
    let onset = divergence_onset(l0, params, n_terms.max(2) + 1)?;
    Ok(SeriesResult {
        b_tilde: terms.iter().copied().sum(),
        terms,
        diverging: onset.is_some_and(|n| n <= n_terms),
        divergence_onset: onset,
    })
}

/// Series coefficients `kappa_n` with `b_tilde ~ sum kappa_n (t^2/l0)^((n alpha + 1)/2)`,
/// returned as `(power, coefficient)` pairs.
pub fn series_coefficients<T: Real>(
    params: &TurbulenceParams<T>,
    n_terms: usize,
) -> Result<Vec<(T, T)>> {
    // At l0 = 1, t = 1 every power of t^2/l0 equals one.
    let unit = TurbulenceParams {
        w0: T::one(),
        r0: T::one(),
        ..*params
    };
    let alpha = params.alpha.value();
    (1..=n_terms)
        .map(|n| {
            let p = (T::from_int(n as i64) * alpha + T::one()) / T::lit(2.0);
            Ok((p, series_term(n, 1, &unit)?))
        })
        .collect()
}

/// The same coefficients re-expressed in powers of `x = xi / r0`, using the
/// large-`l0` relation `t^2 / l0 = 8 x^2 / pi^2`.
pub fn series_coefficients_x<T: Real>(
    params: &TurbulenceParams<T>,
    n_terms: usize,
) -> Result<Vec<(T, T)>> {
    let k = T::lit(8.0) / (T::PI() * T::PI());
    Ok(series_coefficients(params, n_terms)?
        .into_iter()
        .map(|(p, c)| (T::lit(2.0) * p, c * k.powf(p)))
        .collect())
}

/// Upper edge of the envelope on which the quadratic closed form is validated.
pub const EXACT_QUADRATIC_MAX_L0: i64 = 50;
pub const EXACT_QUADRATIC_MAX_T: f64 = 2.0;

/// Exact `alpha = 2` amplitudes in terms of Gauss hypergeometric functions.
///
/// With `tau = gamma t^2` and `z = (tau / (2 + tau))^2`:
///
/// ```text
/// a = 2^(l0+1) (2+tau)^(-l0-1) F((l0+1)/2, (l0+2)/2; 1; z)
/// b = 2^(l0+1) (2+tau)^(-3l0-1) (tau/2)^(2l0) C(3l0, l0) F((3l0+1)/2, (3l0+2)/2; 2l0+1; z)
/// ```
///
/// All prefactors are combined in log space. `outside_validity` marks inputs
/// beyond `l0 <= 50, t <= 2`, where the result is still exact but has not
/// been cross-validated against quadrature.
pub fn exact_quadratic<T: Real>(l0: i64, params: &TurbulenceParams<T>) -> Result<AmplitudePair<T>> {
    if params.alpha.kind() != ExponentKind::Quadratic {
        return Err(Error::invalid(
            "alpha",
            format!("exact form needs alpha = 2, got {}", params.alpha),
        ));
    }
    if l0 < 1 {
        return Err(Error::invalid("l0", format!("{l0} must be positive")));
    }
    let t = params.t();
    if t == T::zero() {
        return Ok(AmplitudePair::identity(Method::ExactQuadratic));
    }
    let two = T::lit(2.0);
    let l = T::from_int(l0);
    let tau = params.gamma * t * t;
    let z = (tau / (two + tau)).powi(2);
    let ln2 = two.ln();
    let ln_2tau = (two + tau).ln();

    let fa = gauss_2f1((l + T::one()) / two, (l + two) / two, T::one(), z)?;
    let ln_a = (l + T::one()) * ln2 - (l + T::one()) * ln_2tau + fa.log_magnitude;

    let fb = gauss_2f1(
        (T::lit(3.0) * l + T::one()) / two,
        (T::lit(3.0) * l + two) / two,
        two * l + T::one(),
        z,
    )?;
    let ln_b = (l + T::one()) * ln2 - (T::lit(3.0) * l + T::one()) * ln_2tau
        + two * l * (tau / two).ln()
        + ln_binomial::<T>(3 * l0 as u64, l0 as u64)
        + fb.log_magnitude;

    let a = T::from_int(fa.sign as i64) * ln_a.exp();
    let b = T::from_int(fb.sign as i64) * ln_b.exp();
    let mut pair = AmplitudePair::from_parts(a, b, T::zero(), T::zero(), Method::ExactQuadratic);
    // Ratio in log space keeps b_tilde accurate when b underflows.
    pair.b_tilde = (ln_b - ln_a).exp();
    pair.outside_validity = l0 > EXACT_QUADRATIC_MAX_L0 || t > T::lit(EXACT_QUADRATIC_MAX_T);
    Ok(pair)
}
