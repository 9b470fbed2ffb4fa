use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::map_numeric::{AmplitudePair, Method};
use crate::turbulence::TurbulenceParams;

use super::overlap::{check_resolution, overlap_on_grid, PolarGrid, DEFAULT_N_THETA};
use super::pairwise_sum;
use super::screen::{mean_and_std_err, PhaseScreen, ScreenGenerator, ScreenGeometry};

pub const MIN_SAMPLES: usize = 100;
pub const DEFAULT_GRID_N: usize = 512;

/// Ensemble settings for the Monte Carlo estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloConfig {
    pub n_samples: usize,
    pub seed: u64,
    pub grid_n: usize,
    /// Side length of the screen; `None` picks [`ScreenGeometry::for_mode`].
    pub extent: Option<f64>,
    pub n_theta: usize,
    /// Angle of the first azimuthal sample; rotates every screen relative to
    /// the beam.
    pub rotation: f64,
    /// Fail with `InsufficientSamples` if the standard error of `a` or `b`
    /// exceeds this.
    pub max_std_err: Option<f64>,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            n_samples: 2000,
            seed: 0,
            grid_n: DEFAULT_GRID_N,
            extent: None,
            n_theta: DEFAULT_N_THETA,
            rotation: 0.0,
            max_std_err: None,
        }
    }
}

impl MonteCarloConfig {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        Self {
            n_samples,
            seed,
            ..Self::default()
        }
    }

    pub fn geometry(&self, l0: i64, params: &TurbulenceParams<f64>) -> Result<ScreenGeometry> {
        match self.extent {
            Some(e) => ScreenGeometry::new(self.grid_n, e),
            None => ScreenGeometry::for_mode(l0, params, self.grid_n),
        }
    }
}

/// Ensemble mean of a complex overlap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverlapEstimate {
    pub mean: Complex64,
    /// Sample standard deviation of the complex samples over `sqrt(n)`.
    pub std_err: f64,
    pub n_samples: usize,
}

// Runs `f` on every screen of the ensemble and returns the per-screen
// results in ensemble order.
fn per_screen<R: Send>(
    gen: &ScreenGenerator,
    seed: u64,
    count: usize,
    f: impl Fn(&PhaseScreen) -> R + Sync,
) -> Vec<R> {
    let pairs = count.div_ceil(2) as u64;
    let mut out: Vec<R> = (0..pairs)
        .into_par_iter()
        .flat_map_iter(|p| {
            let screens = gen.pair(seed, p);
            screens.iter().map(&f).collect::<Vec<_>>()
        })
        .collect();
    out.truncate(count);
    out
}

/// Monte Carlo estimate of `a` and `b` with default settings.
pub fn estimate_amplitudes(
    l0: i64,
    params: &TurbulenceParams<f64>,
    n_samples: usize,
    seed: u64,
) -> Result<AmplitudePair<f64>> {
    estimate_amplitudes_with(l0, params, &MonteCarloConfig::new(n_samples, seed))
}

/// Monte Carlo estimate of `a` and `b` from independent phase screens.
///
/// On each screen the populations of `l0` and `-l0`, traced over the radial
/// quantum number, are `sum_j W_j |c_k(r_j)|^2` with `c_k(r)` the `k`-th
/// azimuthal Fourier coefficient of `exp(i phi)` on the ring of radius `r`
/// (`k = 0` and `k = -2 l0`) and `W_j` the radial weights of `R_{l0}^2 r`.
pub fn estimate_amplitudes_with(
    l0: i64,
    params: &TurbulenceParams<f64>,
    cfg: &MonteCarloConfig,
) -> Result<AmplitudePair<f64>> {
    if cfg.n_samples < MIN_SAMPLES {
        return Err(Error::invalid(
            "n_samples",
            format!("{} < {MIN_SAMPLES}", cfg.n_samples),
        ));
    }
    if l0 == 0 {
        return Err(Error::invalid("l0", "crosstalk needs l0 != 0"));
    }
    let geometry = cfg.geometry(l0, params)?;
    let gen = ScreenGenerator::new(params, geometry)?;
    let grid = PolarGrid::new(l0, l0, params.w0, cfg.n_theta, cfg.rotation)?;
    check_resolution(geometry, &grid, l0, -l0, params.w0)?;
    if !params.r0.is_finite() {
        // every screen is identically zero
        return Ok(AmplitudePair::identity(Method::MonteCarlo));
    }
    let flip = grid.harmonic(-2 * l0);
    let samples = per_screen(&gen, cfg.seed, cfg.n_samples, |s| {
        let mut ring = Vec::with_capacity(grid.n_theta);
        let mut a = Vec::with_capacity(grid.radii.len());
        let mut b = Vec::with_capacity(grid.radii.len());
        let nt = grid.n_theta as f64;
        for (j, w) in grid.weights.iter().enumerate() {
            grid.ring_phasors(s, j, &mut ring);
            let c0: Complex64 = ring.iter().sum::<Complex64>() / nt;
            let c2: Complex64 = ring
                .iter()
                .zip(&flip)
                .map(|(z, h)| z * h)
                .sum::<Complex64>()
                / nt;
            a.push(w * c0.norm_sqr());
            b.push(w * c2.norm_sqr());
        }
        (pairwise_sum(&a), pairwise_sum(&b))
    });
    let a_s: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let b_s: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let (a, a_err) = mean_and_std_err(&a_s);
    let (b, b_err) = mean_and_std_err(&b_s);
    if let Some(budget) = cfg.max_std_err {
        if a_err > budget || b_err > budget {
            return Err(Error::InsufficientSamples(format!(
                "standard errors a: {a_err:e}, b: {b_err:e} exceed {budget:e} with {} samples",
                cfg.n_samples
            )));
        }
    }
    let mut pair = AmplitudePair::from_parts(a, b, a_err, b_err, Method::MonteCarlo);
    // Delta method with the a-b covariance: var(b/a) = var(b - q a) / a^2.
    let q = b / a;
    let resid: Vec<f64> = a_s.iter().zip(&b_s).map(|(x, y)| y - q * x).collect();
    pair.b_tilde_err = mean_and_std_err(&resid).1 / a;
    Ok(pair)
}

/// Ensemble mean of `<LG_{0,l_out}| exp(i phi) |LG_{0,l_in}>`.
pub fn ensemble_overlap(
    l_in: i64,
    l_out: i64,
    params: &TurbulenceParams<f64>,
    cfg: &MonteCarloConfig,
) -> Result<OverlapEstimate> {
    if cfg.n_samples < 2 {
        return Err(Error::invalid("n_samples", "need at least two samples"));
    }
    let geometry = cfg.geometry(l_in.abs().max(l_out.abs()), params)?;
    let gen = ScreenGenerator::new(params, geometry)?;
    let grid = PolarGrid::new(l_in, l_out, params.w0, cfg.n_theta, cfg.rotation)?;
    check_resolution(geometry, &grid, l_in, l_out, params.w0)?;
    let harmonic = grid.harmonic(l_out - l_in);
    let z = per_screen(&gen, cfg.seed, cfg.n_samples, |s| {
        overlap_on_grid(s, &grid, &harmonic)
    });
    let (re, re_err) = mean_and_std_err(&z.iter().map(|z| z.re).collect::<Vec<_>>());
    let (im, im_err) = mean_and_std_err(&z.iter().map(|z| z.im).collect::<Vec<_>>());
    Ok(OverlapEstimate {
        mean: Complex64::new(re, im),
        std_err: re_err.hypot(im_err),
        n_samples: cfg.n_samples,
    })
}
