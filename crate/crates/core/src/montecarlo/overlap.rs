use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::lg_modes::{radial_profile, OamMode};
use crate::quadrature::gauss_legendre;

use super::screen::{PhaseScreen, ScreenGeometry};

const RADIAL_GL: usize = 8;
// Panel width in units of w0.
const RADIAL_PANEL: f64 = 0.5;
// Half-width of the radial window around the peak, in units of w0. The
// log of R^2 r is concave with curvature <= -4, so the density is below
// exp(-50) of its peak outside the window.
const RADIAL_HALF_WINDOW: f64 = 5.0;
pub const DEFAULT_N_THETA: usize = 1024;

/// Polar sampling of the overlap integral: composite Gauss-Legendre in `r`
/// with the two radial profiles folded into the weights, uniform in `theta`.
#[derive(Debug, Clone)]
pub struct PolarGrid {
    pub radii: Vec<f64>,
    /// `gl_weight * R_in(r) R_out(r) r`.
    pub weights: Vec<f64>,
    pub n_theta: usize,
    /// Angle of the first azimuthal sample.
    pub rotation: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl PolarGrid {
    pub fn new(l_in: i64, l_out: i64, w0: f64, n_theta: usize, rotation: f64) -> Result<Self> {
        if n_theta < 8 {
            return Err(Error::invalid("n_theta", format!("{n_theta} < 8")));
        }
        let peak = |l: i64| (l.unsigned_abs() as f64 / 2.0).sqrt();
        let lo = (peak(l_in).min(peak(l_out)) - RADIAL_HALF_WINDOW).max(0.0);
        let hi = peak(l_in).max(peak(l_out)) + RADIAL_HALF_WINDOW;
        let panels = ((hi - lo) / RADIAL_PANEL).ceil() as usize;
        let h = (hi - lo) / panels as f64;
        let (x, w) = gauss_legendre::<f64>(RADIAL_GL);
        let m_in = OamMode::new(l_in, w0)?;
        let m_out = OamMode::new(l_out, w0)?;
        let mut radii = Vec::with_capacity(panels * RADIAL_GL);
        let mut weights = Vec::with_capacity(panels * RADIAL_GL);
        for p in 0..panels {
            let a = lo + p as f64 * h;
            for (xi, wi) in x.iter().zip(&w) {
                let r = w0 * (a + 0.5 * h * (xi + 1.0));
                radii.push(r);
                weights.push(
                    0.5 * h * w0 * wi * r * radial_profile(&m_in, r)? * radial_profile(&m_out, r)?,
                );
            }
        }
        let theta = |m: usize| rotation + 2.0 * PI * m as f64 / n_theta as f64;
        Ok(Self {
            radii,
            weights,
            n_theta,
            rotation,
            cos: (0..n_theta).map(|m| theta(m).cos()).collect(),
            sin: (0..n_theta).map(|m| theta(m).sin()).collect(),
        })
    }

    pub fn theta(&self, m: usize) -> f64 {
        self.rotation + 2.0 * PI * m as f64 / self.n_theta as f64
    }

    pub fn r_max(&self) -> f64 {
        self.radii.last().copied().unwrap_or(0.0)
    }

    /// `exp(i phi)` at the azimuthal samples of ring `j`.
    pub fn ring_phasors(&self, screen: &PhaseScreen, j: usize, out: &mut Vec<Complex64>) {
        let r = self.radii[j];
        out.clear();
        out.extend(
            self.cos
                .iter()
                .zip(&self.sin)
                .map(|(c, s)| Complex64::from_polar(1.0, screen.interpolate(r * c, r * s))),
        );
    }

    /// `e^{-i k theta_m}` for the azimuthal samples.
    pub fn harmonic(&self, k: i64) -> Vec<Complex64> {
        (0..self.n_theta)
            .map(|m| Complex64::from_polar(1.0, -(k as f64) * self.theta(m)))
            .collect()
    }
}

/// Checks that `geometry` resolves the modes `l_in`, `l_out` of width `w0`:
/// at least 16 samples across `w0`, 8 samples per azimuthal period at the
/// peak radius, and the whole radial window inside the grid.
pub fn check_resolution(
    geometry: ScreenGeometry,
    grid: &PolarGrid,
    l_in: i64,
    l_out: i64,
    w0: f64,
) -> Result<()> {
    let dx = geometry.dx();
    if dx > w0 / 16.0 {
        return Err(Error::Resolution(format!(
            "grid step {dx} exceeds w0/16 = {}",
            w0 / 16.0
        )));
    }
    let l = l_in.unsigned_abs().max(l_out.unsigned_abs());
    if l > 0 {
        let r = w0 * (l as f64 / 2.0).sqrt();
        let period = 2.0 * PI * r / l as f64;
        if period < 8.0 * dx {
            return Err(Error::Resolution(format!(
                "azimuthal period {period} at l = {l} spans fewer than 8 grid steps of {dx}"
            )));
        }
    }
    let k = l_out.abs_diff(l_in);
    if (grid.n_theta as u64) < 8 * k.max(1) {
        return Err(Error::Resolution(format!(
            "{} azimuthal samples cannot resolve harmonic {k}",
            grid.n_theta
        )));
    }
    if grid.r_max() > geometry.max_radius() {
        return Err(Error::Resolution(format!(
            "radial window reaches {} but the grid covers only {}",
            grid.r_max(),
            geometry.max_radius()
        )));
    }
    Ok(())
}

/// Overlap `<LG_{0,l_out}| exp(i phi) |LG_{0,l_in}>` on one screen.
pub fn project_overlap(screen: &PhaseScreen, l_in: i64, l_out: i64, w0: f64) -> Result<Complex64> {
    let grid = PolarGrid::new(l_in, l_out, w0, super::screen_n_theta(l_in, l_out), 0.0)?;
    check_resolution(screen.geometry(), &grid, l_in, l_out, w0)?;
    Ok(overlap_on_grid(screen, &grid, &grid.harmonic(l_out - l_in)))
}

pub(crate) fn overlap_on_grid(
    screen: &PhaseScreen,
    grid: &PolarGrid,
    harmonic: &[Complex64],
) -> Complex64 {
    let mut ring = Vec::with_capacity(grid.n_theta);
    let mut total = Complex64::new(0.0, 0.0);
    for j in 0..grid.radii.len() {
        grid.ring_phasors(screen, j, &mut ring);
        let c: Complex64 = ring.iter().zip(harmonic).map(|(z, h)| z * h).sum();
        total += grid.weights[j] * c / grid.n_theta as f64;
    }
    total
}

/// Population of every output index `l_in + k`, `|k| <= n_theta/2`, traced
/// over the radial quantum number. The entries sum to one up to the radial
/// discretization error, whatever the screen.
pub fn azimuthal_populations(
    screen: &PhaseScreen,
    l_in: i64,
    w0: f64,
    n_theta: usize,
) -> Result<Vec<(i64, f64)>> {
    let grid = PolarGrid::new(l_in, l_in, w0, n_theta, 0.0)?;
    check_resolution(screen.geometry(), &grid, l_in, l_in, w0)?;
    let fft = FftPlanner::new().plan_fft_forward(n_theta);
    let mut pop = vec![0.0; n_theta];
    let mut ring = Vec::with_capacity(n_theta);
    let norm = (n_theta * n_theta) as f64;
    for j in 0..grid.radii.len() {
        grid.ring_phasors(screen, j, &mut ring);
        fft.process(&mut ring);
        for (p, z) in pop.iter_mut().zip(&ring) {
            *p += grid.weights[j] * z.norm_sqr() / norm;
        }
    }
    let half = n_theta as i64 / 2;
    Ok(pop
        .into_iter()
        .enumerate()
        .map(|(m, p)| {
            let k = if (m as i64) < half {
                m as i64
            } else {
                m as i64 - n_theta as i64
            };
            (l_in + k, p)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::turbulence::{Exponent, TurbulenceParams};

    fn flat(c: f64) -> PhaseScreen {
        let p = TurbulenceParams::from_strength(Exponent::kolmogorov(), 0.0).unwrap();
        PhaseScreen::constant(ScreenGeometry::new(512, 32.0).unwrap(), p, c)
    }

    #[test]
    fn orthonormal_without_turbulence() {
        let s = flat(0.0);
        for l in [0, 1, 3, 8] {
            let z = project_overlap(&s, l, l, 1.0).unwrap();
            assert!((z.re - 1.0).abs() < 1e-3 && z.im.abs() < 1e-12, "{l}: {z}");
            for other in [-l, l + 1, l + 2] {
                if other != l {
                    assert!(project_overlap(&s, l, other, 1.0).unwrap().norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn constant_phase_factors_out() {
        let s = flat(0.7);
        let z = project_overlap(&s, 2, 2, 1.0).unwrap();
        assert!((z - Complex64::from_polar(1.0, 0.7)).norm() < 1e-3);
        assert!(project_overlap(&s, 2, -2, 1.0).unwrap().norm() < 1e-12);
    }

    #[test]
    fn rejects_coarse_grid() {
        let p = TurbulenceParams::from_strength(Exponent::kolmogorov(), 0.0).unwrap();
        let coarse = PhaseScreen::constant(ScreenGeometry::new(64, 32.0).unwrap(), p, 0.0);
        assert!(matches!(
            project_overlap(&coarse, 1, 1, 1.0),
            Err(Error::Resolution(_))
        ));
        let small = PhaseScreen::constant(ScreenGeometry::new(512, 8.0).unwrap(), p, 0.0);
        assert!(matches!(
            project_overlap(&small, 1, 1, 1.0),
            Err(Error::Resolution(_))
        ));
    }
}
