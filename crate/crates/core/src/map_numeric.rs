//! Numerically exact single-screen map elements.
//!
//! For an input LG_{0,l0} mode the diagonal element reduces to
//!
//! ```text
//! Lambda(l1) = (1/pi) int_0^pi cos(n v) G(v) dv,   n = l1 - l0,
//! G(v)       = E[exp(-d(v) rho^alpha)],  d(v) = 2^(alpha-1) gamma t^alpha sin^alpha(v/2),
//! ```
//!
//! where the expectation is over the radial density proportional to
//! `rho^(2 l0 + 1) exp(-2 rho^2)`. The sine part vanishes identically by the
//! reflection symmetry `v -> 2 pi - v`, which is why only `[0, pi]` is
//! integrated. `G` is computed with one fixed composite Gauss-Legendre rule
//! in `rho` (so it is a smooth function of `v`), and the outer integral is
//! adaptive GK21 on a grid that resolves the `cos(n v)` oscillation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, integrate_adaptive, AdaptiveConfig, Integral};
use crate::scalar::Real;
use crate::specfun::ln_factorial;
use crate::turbulence::TurbulenceParams;

/// Tolerances and resolution of the quadrature route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Radial window half-width in standard deviations of the saddle.
    pub rho_window: f64,
    /// Angular panels per oscillation period of `cos(n v)`.
    pub theta_points_per_period: usize,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-16,
            rho_window: 10.0,
            theta_points_per_period: 12,
            max_subdivisions: 20_000,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::invalid("rel_tol", "must be positive"));
        }
        if !(self.abs_tol >= 0.0) {
            return Err(Error::invalid("abs_tol", "must be non-negative"));
        }
        if !(self.rho_window >= 3.0) {
            return Err(Error::invalid("rho_window", "must be at least 3"));
        }
        if self.theta_points_per_period < 8 {
            return Err(Error::invalid(
                "theta_points_per_period",
                "must be at least 8",
            ));
        }
        Ok(())
    }
}

/// Which route produced an [`AmplitudePair`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Quadrature,
    Asymptotic,
    Series,
    ExactQuadratic,
    #[serde(rename = "montecarlo")]
    MonteCarlo,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Quadrature => "quadrature",
            Method::Asymptotic => "asymptotic",
            Method::Series => "series",
            Method::ExactQuadratic => "exact_quadratic",
            Method::MonteCarlo => "montecarlo",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "quadrature" => Method::Quadrature,
            "asymptotic" => Method::Asymptotic,
            "series" => Method::Series,
            "exact_quadratic" => Method::ExactQuadratic,
            "montecarlo" => Method::MonteCarlo,
            _ => return Err(Error::invalid("method", format!("unknown method {s:?}"))),
        })
    }
}

/// Survival amplitude `a`, crosstalk amplitude `b` and `b_tilde = b / a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplitudePair<T> {
    pub a: T,
    pub b: T,
    pub b_tilde: T,
    pub method: Method,
    /// Estimated absolute error on `b` (standard error for Monte Carlo).
    pub err: T,
    pub a_err: T,
    pub b_tilde_err: T,
    /// `b` is indistinguishable from numerical noise; treat `b` and
    /// `b_tilde` as upper bounds.
    pub noise_floor: bool,
    /// An asymptotic result outside its range of validity (e.g. `a > 1`).
    pub outside_validity: bool,
}

impl<T: Real> AmplitudePair<T> {
    /// Builds a pair from `a`, `b` and their errors; `b_tilde` error by
    /// first-order propagation.
    pub fn from_parts(a: T, b: T, a_err: T, b_err: T, method: Method) -> Self {
        let b_tilde = b / a;
        let b_tilde_err = ((b_err / a).powi(2) + (b * a_err / (a * a)).powi(2)).sqrt();
        Self {
            a,
            b,
            b_tilde,
            method,
            err: b_err,
            a_err,
            b_tilde_err,
            noise_floor: false,
            outside_validity: false,
        }
    }

    /// The turbulence-free values `a = 1`, `b = 0`.
    pub fn identity(method: Method) -> Self {
        Self::from_parts(T::one(), T::zero(), T::zero(), T::zero(), method)
    }
}

/// One map element with its quadrature error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MapElement<T> {
    pub value: T,
    pub err: T,
    pub noise_floor: bool,
}

// Gauss-Legendre points per radial panel.
const RADIAL_GL: usize = 16;
const RADIAL_PANEL: f64 = 0.5;
const MAX_RADIAL_REFINEMENTS: usize = 6;

/// Radial expectation `G(d) = E[exp(-d rho^alpha)]` on a fixed rule.
#[derive(Debug, Clone)]
pub struct RadialRule<T> {
    powers: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> RadialRule<T> {
    /// Rule for the density `rho^(2 l0 + 1) exp(-2 rho^2)` restricted to where
    /// its log lies within `window^2 / 2` of the maximum.
    pub fn new(l0: u64, alpha: T, window: T, panel: T) -> Result<Self> {
        let c = T::from_int(2 * l0 as i64 + 1);
        let two = T::lit(2.0);
        let f = |r: T| c * r.ln() - two * r * r;
        let rm = (c / T::lit(4.0)).sqrt();
        let drop = f(rm) - window * window / two;
        let lo = bisect(|r| f(r) - drop, T::zero(), rm);
        let hi = bisect(|r| drop - f(r), rm, rm + window + T::one());

        let mut breaks = Vec::new();
        let m = ((hi - lo) / panel).ceil().to_i64().unwrap_or(1).max(1);
        let h = (hi - lo) / T::from_int(m);
        // Geometric grading toward the origin where rho^alpha is not smooth.
        if lo < h {
            let floor = T::lit(1e-18).powf((c + T::one()).recip()) * rm * T::lit(1e-3);
            let mut g = h / T::lit(4.0);
            let mut grades = Vec::new();
            while g > floor && grades.len() < 40 {
                grades.push(lo + g);
                g = g / T::lit(4.0);
            }
            breaks.push(lo);
            breaks.extend(grades.into_iter().rev());
        } else {
            breaks.push(lo);
        }
        for k in 1..=m {
            breaks.push(lo + h * T::from_int(k));
        }

        let (gx, gw) = gauss_legendre::<T>(RADIAL_GL);
        let mut ln_w = Vec::with_capacity(breaks.len() * RADIAL_GL);
        let mut rho = Vec::with_capacity(breaks.len() * RADIAL_GL);
        for pair in breaks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let half = (b - a) / two;
            let mid = (a + b) / two;
            for (x, w) in gx.iter().zip(&gw) {
                let r = mid + half * *x;
                ln_w.push((half * *w).ln() + f(r));
                rho.push(r);
            }
        }
        let max = ln_w.iter().copied().fold(T::neg_infinity(), T::max);
        let total: T = ln_w.iter().map(|&l| (l - max).exp()).sum();
        let ln_z = max + total.ln();
        let exact = ln_factorial::<T>(l0) - T::from_int(l0 as i64 + 2) * two.ln();
        let mass_defect = (ln_z - exact).exp() - T::one();
        // ln_z and exact are both O(l0 ln l0), so their rounding sets the floor
        let floor = T::lit(100.0) * T::epsilon() * (T::one() + exact.abs());
        if mass_defect.abs() > T::lit(1e-12).max(floor) {
            return Err(Error::Resolution(format!(
                "radial rule for l0 = {l0} captures mass {} of the exact weight",
                T::one() + mass_defect
            )));
        }
        let mut powers = Vec::with_capacity(rho.len());
        let mut weights = Vec::with_capacity(rho.len());
        for (r, l) in rho.into_iter().zip(ln_w) {
            let w = (l - ln_z).exp();
            if w > T::zero() {
                powers.push(r.powf(alpha));
                weights.push(w);
            }
        }
        Ok(Self { powers, weights })
    }

    /// `E[exp(-d rho^alpha)]`, equal to one at `d = 0` up to rounding.
    #[inline]
    pub fn expectation(&self, d: T) -> T {
        let mut s = T::zero();
        for (p, w) in self.powers.iter().zip(&self.weights) {
            s = s + *w * (-d * *p).exp();
        }
        s
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

fn bisect<T: Real>(g: impl Fn(T) -> T, mut lo: T, mut hi: T) -> T {
    // g(lo) < 0 <= g(hi); lo may be zero where g is -inf.
    for _ in 0..200 {
        let mid = (lo + hi) / T::lit(2.0);
        if !(mid > lo && mid < hi) {
            break;
        }
        if g(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Builds the radial rule, halving the panel width until it agrees with the
/// next finer rule to `rel_tol / 10` (or roundoff) over the whole range of `d` reached.
fn converged_radial_rule<T: Real>(
    l0: u64,
    alpha: T,
    d_max: T,
    cfg: &QuadratureConfig,
) -> Result<RadialRule<T>> {
    let window = T::lit(cfg.rho_window);
    let mut panel = T::lit(RADIAL_PANEL);
    let mut rule = RadialRule::new(l0, alpha, window, panel)?;
    let target = T::lit(0.1 * cfg.rel_tol).max(T::lit(100.0) * T::epsilon());
    let abs = T::lit(cfg.abs_tol);
    for _ in 0..MAX_RADIAL_REFINEMENTS {
        let finer = RadialRule::new(l0, alpha, window, panel / T::lit(2.0))?;
        let mut ok = true;
        let mut d = d_max;
        while d > T::lit(1e-6) {
            let (g1, g2) = (rule.expectation(d), finer.expectation(d));
            if (g1 - g2).abs() > abs.max(target * g2.abs()) {
                ok = false;
                break;
            }
            d = d / T::lit(2.0);
        }
        if ok {
            return Ok(rule);
        }
        rule = finer;
        panel = panel / T::lit(2.0);
    }
    Err(Error::Resolution(format!(
        "radial rule for l0 = {l0} did not settle after {MAX_RADIAL_REFINEMENTS} refinements"
    )))
}

/// Coefficient of `sin^alpha(v/2)` in `d(v)`.
fn d_coefficient<T: Real>(params: &TurbulenceParams<T>) -> T {
    let alpha = params.alpha.value();
    T::lit(2.0).powf(alpha - T::one()) * params.gamma * params.t().powf(alpha)
}

fn angular_breakpoints<T: Real>(
    freq: u64,
    d_coef: T,
    rho_m: T,
    alpha: T,
    cfg: &QuadratureConfig,
) -> Vec<T> {
    let pi = T::PI();
    let per_period = cfg.theta_points_per_period as u64;
    let m = (per_period * freq.max(1)).div_ceil(2).max(4);
    let w = pi / T::from_int(m as i64);

    // Angular scale on which G decays: d(v) rho_m^alpha ~ 1.
    let reach = d_coef * rho_m.powf(alpha);
    let v_c = if reach > T::one() {
        T::lit(2.0) * reach.powf(-alpha.recip()).min(T::one()).asin()
    } else {
        w
    };
    let floor = v_c.min(w) * T::lit(1e-3);

    let mut b = vec![T::zero()];
    let mut grades = Vec::new();
    let mut g = w / T::lit(4.0);
    while g > floor {
        grades.push(g);
        g = g / T::lit(4.0);
    }
    b.extend(grades.into_iter().rev());
    for k in 1..=m {
        b.push(w * T::from_int(k as i64));
    }
    *b.last_mut().unwrap() = pi;
    b
}

fn adaptive_config<T: Real>(cfg: &QuadratureConfig) -> AdaptiveConfig<T> {
    AdaptiveConfig {
        rel_tol: T::lit(cfg.rel_tol),
        abs_tol: T::lit(cfg.abs_tol),
        max_subdivisions: cfg.max_subdivisions,
    }
}

/// Integrates `(1/pi) cos(n_i v) G(v)` over [0, pi] for each `n_i` together.
fn angular_integrals<T: Real, const N: usize>(
    l0: u64,
    ns: [i64; N],
    params: &TurbulenceParams<T>,
    cfg: &QuadratureConfig,
) -> Result<Integral<T, N>> {
    cfg.validate()?;
    let alpha = params.alpha.value();
    let d_coef = d_coefficient(params);
    let rule = converged_radial_rule(l0, alpha, d_coef, cfg)?;
    let rho_m = (T::from_int(2 * l0 as i64 + 1) / T::lit(4.0)).sqrt();
    let freq = ns.iter().map(|n| n.unsigned_abs()).max().unwrap_or(0);
    let breaks = angular_breakpoints(freq, d_coef, rho_m, alpha, cfg);
    let nsf: [T; N] = ns.map(|n| T::from_int(n));
    let half = T::lit(0.5);
    let inv_pi = T::FRAC_1_PI();

    let integrand = |v: T| {
        let g = rule.expectation(d_coef * (half * v).sin().powf(alpha)) * inv_pi;
        let mut out = [T::zero(); N];
        for i in 0..N {
            out[i] = if ns[i] == 0 {
                g
            } else {
                (nsf[i] * v).cos() * g
            };
        }
        out
    };
    let acfg = adaptive_config(cfg);
    integrate_adaptive("map element quadrature", integrand, &breaks, &acfg)
}

fn element<T: Real>(r: &Integral<T, 1>, abs_tol: T) -> MapElement<T> {
    MapElement {
        value: r.value[0],
        err: r.err[0],
        noise_floor: r.at_noise_floor(0, abs_tol),
    }
}

/// Diagonal map element `Lambda_{l1 l1}^{l0 l0}` for an input LG_{0,l0} mode.
pub fn lambda_diag<T: Real>(
    l1: i64,
    l0: i64,
    params: &TurbulenceParams<T>,
    cfg: &QuadratureConfig,
) -> Result<MapElement<T>> {
    if l0 < 1 {
        return Err(Error::invalid("l0", format!("{l0} must be positive")));
    }
    if params.t() == T::zero() {
        let value = if l1 == l0 { T::one() } else { T::zero() };
        return Ok(MapElement {
            value,
            err: T::zero(),
            noise_floor: false,
        });
    }
    let r = angular_integrals(l0 as u64, [l1 - l0], params, cfg)?;
    Ok(element(&r, T::lit(cfg.abs_tol)))
}

/// `a = Lambda(l0)`, `b = Lambda(-l0)` from one shared quadrature.
pub fn amplitudes_numeric<T: Real>(
    l0: i64,
    params: &TurbulenceParams<T>,
    cfg: &QuadratureConfig,
) -> Result<AmplitudePair<T>> {
    if l0 < 1 {
        return Err(Error::invalid("l0", format!("{l0} must be positive")));
    }
    if params.t() == T::zero() {
        return Ok(AmplitudePair::identity(Method::Quadrature));
    }
    let r = angular_integrals(l0 as u64, [0, -2 * l0], params, cfg)?;
    let noise = r.at_noise_floor(1, T::lit(cfg.abs_tol));
    let b = if noise {
        r.value[1].max(T::zero())
    } else {
        r.value[1]
    };
    let mut pair = AmplitudePair::from_parts(r.value[0], b, r.err[0], r.err[1], Method::Quadrature);
    pair.noise_floor = noise;
    Ok(pair)
}
