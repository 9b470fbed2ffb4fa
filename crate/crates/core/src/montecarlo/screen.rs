use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::specfun::ln_gamma;
use crate::turbulence::{ExponentKind, TurbulenceParams};

use super::pairwise_sum;

// Subharmonic levels added below the lowest FFT frequency. The missing
// low-frequency power decays only like kappa^(2 - alpha), so a handful of
// levels is not enough for alpha = 5/3.
const SUBHARMONIC_LEVELS: i32 = 12;
// Cells with both indices within this range of the origin get weights
// integrated over the cell instead of the centre value.
const NEAR_ORIGIN: i64 = 8;
const CELL_SUBSAMPLES: usize = 16;

/// Square sampling grid centred on the beam axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScreenGeometry {
    /// Grid points per side, a power of two.
    pub n: usize,
    /// Physical side length.
    pub extent: f64,
}

impl ScreenGeometry {
    pub fn new(n: usize, extent: f64) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::invalid(
                "n",
                format!("{n} must be a power of two >= 16"),
            ));
        }
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(Error::invalid(
                "extent",
                format!("{extent} must be positive and finite"),
            ));
        }
        Ok(Self { n, extent })
    }

    /// Default grid for an `LG_{0,l0}` beam: `n` points over
    /// `16 max(w0 sqrt(l0/2 + 1), r0)`.
    pub fn for_mode(l0: i64, params: &TurbulenceParams<f64>, n: usize) -> Result<Self> {
        let beam = params.w0 * (l0.unsigned_abs() as f64 / 2.0 + 1.0).sqrt();
        let r0 = if params.r0.is_finite() {
            params.r0
        } else {
            0.0
        };
        Self::new(n, 16.0 * beam.max(r0))
    }

    pub fn dx(&self) -> f64 {
        self.extent / self.n as f64
    }

    /// Largest radius at which bilinear interpolation stays inside the grid.
    pub fn max_radius(&self) -> f64 {
        (self.n as f64 / 2.0 - 1.0) * self.dx()
    }
}

/// One realization of the random phase on a square grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScreen {
    /// Row-major phase samples in radians; `values[j * n + i]` sits at
    /// `x = (i - n/2) dx`, `y = (j - n/2) dx`.
    pub values: Vec<f64>,
    pub extent: f64,
    pub n: usize,
    pub params: TurbulenceParams<f64>,
    pub seed: u64,
    /// Position of this screen in the ensemble drawn from `seed`.
    pub index: u64,
}

impl PhaseScreen {
    /// A screen with constant phase `c` (zero turbulence when `c = 0`).
    pub fn constant(geometry: ScreenGeometry, params: TurbulenceParams<f64>, c: f64) -> Self {
        Self {
            values: vec![c; geometry.n * geometry.n],
            extent: geometry.extent,
            n: geometry.n,
            params,
            seed: 0,
            index: 0,
        }
    }

    pub fn geometry(&self) -> ScreenGeometry {
        ScreenGeometry {
            n: self.n,
            extent: self.extent,
        }
    }

    pub fn dx(&self) -> f64 {
        self.extent / self.n as f64
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.n + i]
    }

    /// Bilinear interpolation at `(x, y)` relative to the grid centre.
    ///
    /// The caller keeps `(x, y)` within [`ScreenGeometry::max_radius`].
    pub fn interpolate(&self, x: f64, y: f64) -> f64 {
        let h = self.n as f64 / 2.0;
        let fx = x / self.dx() + h;
        let fy = y / self.dx() + h;
        let i = (fx.floor() as usize).min(self.n - 2);
        let j = (fy.floor() as usize).min(self.n - 2);
        let u = fx - i as f64;
        let v = fy - j as f64;
        let row = j * self.n + i;
        let p00 = self.values[row];
        let p10 = self.values[row + 1];
        let p01 = self.values[row + self.n];
        let p11 = self.values[row + self.n + 1];
        (1.0 - v) * ((1.0 - u) * p00 + u * p10) + v * ((1.0 - u) * p01 + u * p11)
    }

    /// Writes the grid as CSV rows after a one-line JSON header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header = serde_json::json!({
            "n": self.n,
            "extent": self.extent,
            "seed": self.seed,
            "index": self.index,
            "alpha": self.params.alpha,
            "gamma": self.params.gamma,
            "w0": self.params.w0,
            "r0": if self.params.r0.is_finite() { Some(self.params.r0) } else { None },
        });
        writeln!(out, "{header}")?;
        for row in self.values.chunks(self.n) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// `C_alpha` in the phase spectrum `C_alpha gamma r0^-alpha kappa^-(alpha+2)`
/// that reproduces `D(x) = gamma (x/r0)^alpha`, per unit `gamma`.
pub fn spectral_constant(alpha: f64) -> f64 {
    // integral of u^(-alpha-1) (1 - J0(u)) over (0, inf)
    let lg = |x: f64| ln_gamma(x).expect("positive argument");
    let i_alpha =
        (lg(1.0 - alpha / 2.0) - lg(1.0 + alpha / 2.0)).exp() / (alpha * 2f64.powf(alpha));
    1.0 / (4.0 * std::f64::consts::PI * i_alpha)
}

enum Synthesis {
    /// `phi = a x + b y` with per-component variance `gamma / r0^2`.
    Tilt {
        sigma: f64,
    },
    Spectral {
        fft: Arc<dyn Fft<f64>>,
        /// Standard deviation of each FFT coefficient, zero at the origin.
        amplitude: Vec<f64>,
        /// `(kx, ky, std dev)` for the subharmonic frequencies, 8 per level.
        subharmonics: Vec<(f64, f64, f64)>,
    },
    Zero,
}

/// Draws reproducible screens for fixed parameters and geometry.
///
/// Screens come in pairs: the spectral method yields two independent
/// fields (real and imaginary part) per transform.
pub struct ScreenGenerator {
    params: TurbulenceParams<f64>,
    geometry: ScreenGeometry,
    synthesis: Synthesis,
}

impl ScreenGenerator {
    pub fn new(params: &TurbulenceParams<f64>, geometry: ScreenGeometry) -> Result<Self> {
        let geometry = ScreenGeometry::new(geometry.n, geometry.extent)?;
        let alpha = params.alpha_value();
        if !(1.0..=2.0).contains(&alpha) {
            return Err(Error::invalid("alpha", format!("{alpha} outside [1, 2]")));
        }
        if alpha >= 2.0 && params.alpha.kind() != ExponentKind::Quadratic {
            return Err(Error::invalid(
                "alpha",
                "spectral synthesis needs alpha < 2",
            ));
        }
        let synthesis = if !params.r0.is_finite() {
            Synthesis::Zero
        } else {
            // D is validated on [0.05, 0.5] r0; that range must fit in half the grid.
            if 0.5 * params.r0 > geometry.extent / 2.0 {
                return Err(Error::Resolution(format!(
                    "extent {} too small for r0 = {}: need at least r0",
                    geometry.extent, params.r0
                )));
            }
            if params.alpha.kind() == ExponentKind::Quadratic {
                Synthesis::Tilt {
                    sigma: (params.gamma).sqrt() / params.r0,
                }
            } else {
                Self::spectral(params, geometry)
            }
        };
        Ok(Self {
            params: *params,
            geometry,
            synthesis,
        })
    }

    fn spectral(params: &TurbulenceParams<f64>, geometry: ScreenGeometry) -> Synthesis {
        let alpha = params.alpha_value();
        let n = geometry.n;
        let scale = spectral_constant(alpha) * params.gamma * params.r0.powf(-alpha);
        let psd = |k: f64| scale * k.powf(-(alpha + 2.0));
        let dk = 2.0 * std::f64::consts::PI / geometry.extent;
        // Variance of the cell centred on (kx, ky) with side h. The steep
        // spectrum is integrated with weight kappa^2 over the cell, which
        // keeps the small-separation limit of D exact.
        let cell = |kx: f64, ky: f64, h: f64| {
            let m = CELL_SUBSAMPLES;
            let mut acc = 0.0;
            for v in 0..m {
                for u in 0..m {
                    let qx = kx + h * ((u as f64 + 0.5) / m as f64 - 0.5);
                    let qy = ky + h * ((v as f64 + 0.5) / m as f64 - 0.5);
                    let q2 = qx * qx + qy * qy;
                    acc += psd(q2.sqrt()) * q2;
                }
            }
            acc / (m * m) as f64 * h * h / (kx * kx + ky * ky)
        };
        let freq = |i: usize| {
            let i = i as i64;
            if i < n as i64 / 2 {
                i
            } else {
                i - n as i64
            }
        };
        let mut amplitude = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                let (fi, fj) = (freq(i), freq(j));
                if fi == 0 && fj == 0 {
                    continue;
                }
                let (kx, ky) = (dk * fi as f64, dk * fj as f64);
                let var = if fi.abs() <= NEAR_ORIGIN && fj.abs() <= NEAR_ORIGIN {
                    cell(kx, ky, dk)
                } else {
                    psd(kx.hypot(ky)) * dk * dk
                };
                amplitude[j * n + i] = var.sqrt();
            }
        }
        let mut subharmonics = Vec::new();
        for p in 1..=SUBHARMONIC_LEVELS {
            let dkp = dk / 3f64.powi(p);
            for a in -1i32..=1 {
                for b in -1i32..=1 {
                    if a == 0 && b == 0 {
                        continue;
                    }
                    let (kx, ky) = (a as f64 * dkp, b as f64 * dkp);
                    subharmonics.push((kx, ky, cell(kx, ky, dkp).sqrt()));
                }
            }
        }
        let fft = FftPlanner::new().plan_fft_inverse(n);
        Synthesis::Spectral {
            fft,
            amplitude,
            subharmonics,
        }
    }

    pub fn geometry(&self) -> ScreenGeometry {
        self.geometry
    }

    pub fn params(&self) -> &TurbulenceParams<f64> {
        &self.params
    }

    fn rng(seed: u64, pair: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(pair);
        rng
    }

    /// Screens `2 pair` and `2 pair + 1` of the ensemble drawn from `seed`.
    pub fn pair(&self, seed: u64, pair: u64) -> [PhaseScreen; 2] {
        let n = self.geometry.n;
        let make = |values: Vec<f64>, k: u64| PhaseScreen {
            values,
            extent: self.geometry.extent,
            n,
            params: self.params,
            seed,
            index: 2 * pair + k,
        };
        match &self.synthesis {
            Synthesis::Zero => [make(vec![0.0; n * n], 0), make(vec![0.0; n * n], 1)],
            Synthesis::Tilt { sigma } => {
                let mut rng = Self::rng(seed, pair);
                let mut g = || -> f64 { rng.sample(StandardNormal) };
                let tilts = [(g() * sigma, g() * sigma), (g() * sigma, g() * sigma)];
                let dx = self.geometry.dx();
                let h = n as f64 / 2.0;
                let mut out = tilts.map(|(a, b)| {
                    let mut v = vec![0.0; n * n];
                    for j in 0..n {
                        let y = (j as f64 - h) * dx;
                        for i in 0..n {
                            v[j * n + i] = a * (i as f64 - h) * dx + b * y;
                        }
                    }
                    v
                });
                let second = std::mem::take(&mut out[1]);
                let first = std::mem::take(&mut out[0]);
                [make(first, 0), make(second, 1)]
            }
            Synthesis::Spectral {
                fft,
                amplitude,
                subharmonics,
            } => {
                let mut rng = Self::rng(seed, pair);
                let mut field: Vec<Complex64> = amplitude
                    .iter()
                    .map(|&a| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        Complex64::new(re, im) * a
                    })
                    .collect();
                fft2_inplace(fft.as_ref(), &mut field, n);
                let coeffs: Vec<(f64, f64, Complex64)> = subharmonics
                    .iter()
                    .map(|&(kx, ky, a)| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        (kx, ky, Complex64::new(re, im) * a)
                    })
                    .collect();
                add_subharmonics(&mut field, n, self.geometry.dx(), &coeffs);
                let re = field.iter().map(|z| z.re).collect();
                let im = field.iter().map(|z| z.im).collect();
                [make(re, 0), make(im, 1)]
            }
        }
    }

    /// Screen `index` of the ensemble drawn from `seed`.
    pub fn screen(&self, seed: u64, index: u64) -> PhaseScreen {
        let [a, b] = self.pair(seed, index / 2);
        if index.is_multiple_of(2) {
            a
        } else {
            b
        }
    }

    /// The first `count` screens of the ensemble drawn from `seed`.
    pub fn ensemble(&self, seed: u64, count: usize) -> Vec<PhaseScreen> {
        use rayon::prelude::*;
        let pairs = count.div_ceil(2) as u64;
        let mut out: Vec<PhaseScreen> = (0..pairs)
            .into_par_iter()
            .flat_map_iter(|p| self.pair(seed, p))
            .collect();
        out.truncate(count);
        out
    }
}

// Unnormalized inverse 2-D transform of a row-major n x n array.
fn fft2_inplace(fft: &dyn Fft<f64>, data: &mut [Complex64], n: usize) {
    fft.process(data);
    transpose(data, n);
    fft.process(data);
    transpose(data, n);
}

fn transpose(data: &mut [Complex64], n: usize) {
    for j in 0..n {
        for i in (j + 1)..n {
            data.swap(j * n + i, i * n + j);
        }
    }
}

// Adds the subharmonic terms level by level. Within a level the
// frequencies form a 3 x 3 lattice, so the sum factors into three row
// vectors modulated along y.
fn add_subharmonics(field: &mut [Complex64], n: usize, dx: f64, coeffs: &[(f64, f64, Complex64)]) {
    let h = n as f64 / 2.0;
    let coord: Vec<f64> = (0..n).map(|i| (i as f64 - h) * dx).collect();
    for level in coeffs.chunks(8) {
        let step = level.iter().map(|c| c.0.abs()).fold(0.0, f64::max);
        let mut rows = [
            vec![Complex64::new(0.0, 0.0); n],
            vec![Complex64::new(0.0, 0.0); n],
            vec![Complex64::new(0.0, 0.0); n],
        ];
        for &(kx, ky, c) in level {
            let b = (ky / step).round() as i64 + 1;
            for (r, &x) in rows[b as usize].iter_mut().zip(&coord) {
                *r += c * Complex64::from_polar(1.0, kx * x);
            }
        }
        for (j, &y) in coord.iter().enumerate() {
            let ey = [
                Complex64::from_polar(1.0, -step * y),
                Complex64::new(1.0, 0.0),
                Complex64::from_polar(1.0, step * y),
            ];
            for (i, z) in field[j * n..(j + 1) * n].iter_mut().enumerate() {
                *z += ey[0] * rows[0][i] + ey[1] * rows[1][i] + ey[2] * rows[2][i];
            }
        }
    }
}

/// Convenience wrapper: screen 0 of the ensemble drawn from `seed`.
pub fn generate_screen(
    params: &TurbulenceParams<f64>,
    geometry: ScreenGeometry,
    seed: u64,
) -> Result<PhaseScreen> {
    Ok(ScreenGenerator::new(params, geometry)?.screen(seed, 0))
}

/// Ensemble estimate at one separation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeparationEstimate {
    /// Separation actually used (rounded to whole grid steps).
    pub separation: f64,
    pub value: f64,
    pub std_err: f64,
}

fn check_ensemble(screens: &[PhaseScreen], separations: &[f64]) -> Result<ScreenGeometry> {
    let first = screens
        .first()
        .ok_or_else(|| Error::invalid("screens", "empty ensemble"))?;
    let g = first.geometry();
    if screens.iter().any(|s| s.geometry() != g) {
        return Err(Error::invalid(
            "screens",
            "mixed geometries in one ensemble",
        ));
    }
    for &x in separations {
        if !(x >= 0.0 && x <= g.extent / 2.0) {
            return Err(Error::domain(
                "measure_structure_function",
                format!("separation {x} outside [0, extent/2 = {}]", g.extent / 2.0),
            ));
        }
    }
    Ok(g)
}

// Spatial average of f(phi(r + s) - phi(r)) over x- and y-shifts of `k` cells.
fn spatial_mean(s: &PhaseScreen, k: usize, f: impl Fn(f64) -> f64) -> f64 {
    let n = s.n;
    let mut rows = Vec::with_capacity(2 * n);
    for j in 0..n {
        let row = &s.values[j * n..(j + 1) * n];
        rows.push(pairwise_sum(
            &row[k..]
                .iter()
                .zip(row)
                .map(|(a, b)| f(a - b))
                .collect::<Vec<_>>(),
        ));
    }
    for j in 0..n - k {
        let lo = &s.values[j * n..(j + 1) * n];
        let hi = &s.values[(j + k) * n..(j + k + 1) * n];
        rows.push(pairwise_sum(
            &hi.iter().zip(lo).map(|(a, b)| f(a - b)).collect::<Vec<_>>(),
        ));
    }
    pairwise_sum(&rows) / (2 * n * (n - k)) as f64
}

fn ensemble_stat(
    screens: &[PhaseScreen],
    separations: &[f64],
    f: impl Fn(f64) -> f64 + Sync,
) -> Result<Vec<SeparationEstimate>> {
    use rayon::prelude::*;
    let g = check_ensemble(screens, separations)?;
    let dx = g.dx();
    Ok(separations
        .iter()
        .map(|&x| {
            let k = (x / dx).round() as usize;
            let samples: Vec<f64> = screens.par_iter().map(|s| spatial_mean(s, k, &f)).collect();
            let (value, std_err) = mean_and_std_err(&samples);
            SeparationEstimate {
                separation: k as f64 * dx,
                value,
                std_err,
            }
        })
        .collect())
}

/// Sample mean and its standard error (zero error for a single sample).
pub fn mean_and_std_err(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = pairwise_sum(samples) / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let ss = pairwise_sum(
        &samples
            .iter()
            .map(|v| (v - mean).powi(2))
            .collect::<Vec<_>>(),
    );
    (mean, (ss / (n - 1.0) / n).sqrt())
}

/// Empirical structure function `<(phi(r) - phi(r'))^2>` at each separation,
/// averaged over the grid and the ensemble.
pub fn measure_structure_function(
    screens: &[PhaseScreen],
    separations: &[f64],
) -> Result<Vec<SeparationEstimate>> {
    ensemble_stat(screens, separations, |d| d * d)
}

/// Empirical phase coherence `<cos(phi(r) - phi(r'))>`; the sine part
/// vanishes by symmetry.
pub fn measure_phase_coherence(
    screens: &[PhaseScreen],
    separations: &[f64],
) -> Result<Vec<SeparationEstimate>> {
    ensemble_stat(screens, separations, f64::cos)
}
