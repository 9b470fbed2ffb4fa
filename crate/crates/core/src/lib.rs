//! Crosstalk between orbital-angular-momentum modes behind a single
//! Kolmogorov-type phase screen, and the entanglement decay it causes.
//!
//! The survival amplitude `a` and crosstalk amplitude `b` of an `LG_{0,l0}`
//! mode are available through several independent routes:
//!
//! * [`map_numeric`]: adaptive quadrature of the reduced double integral,
//! * [`map_asymptotic`]: large-`l0` asymptotics, the asymptotic series and
//!   the exact hypergeometric forms for quadratic structure functions,
//! * [`montecarlo`]: ensembles of random phase screens.
//!
//! [`universal`] maps `b_tilde = b / a` to the `l0`-independent curves in
//! `x = xi / r0` and to the concurrence of a two-photon state.
//!
//! ```
//! use oamlab::{amplitudes_numeric, Alpha, QuadratureConfig, Turbulence};
//!
//! let p = Turbulence::from_strength(Alpha::kolmogorov(), 0.1)?;
//! let r = amplitudes_numeric(150, &p, &QuadratureConfig::default())?;
//! assert!((0.7e-6..1.4e-6).contains(&r.b_tilde));
//! # Ok::<(), oamlab::Error>(())
//! ```

pub mod error;
pub mod lg_modes;
pub mod map_asymptotic;
pub mod map_numeric;
pub mod montecarlo;
pub mod quadrature;
pub mod scalar;
pub mod specfun;
pub mod turbulence;
pub mod universal;

pub use error::{Error, Result};
pub use map_asymptotic::{amplitudes_asymptotic, b_series, exact_quadratic};
pub use map_numeric::{amplitudes_numeric, AmplitudePair, Method, QuadratureConfig};
pub use scalar::Real;
pub use turbulence::{Exponent, ExponentKind, TurbulenceParams, GAMMA};
pub use universal::{btilde_universal, concurrence, leonhard_fit};

pub type Amplitudes = AmplitudePair<f64>;
pub type Turbulence = TurbulenceParams<f64>;
pub type Alpha = Exponent<f64>;
