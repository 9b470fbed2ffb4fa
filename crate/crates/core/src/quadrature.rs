//! Fixed and adaptive quadrature rules.
//!
//! The adaptive driver integrates vector-valued integrands `[T; N]` so that
//! several integrals sharing one expensive kernel (the two amplitudes, or the
//! real and imaginary parts of a contour integral) are refined together.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Gauss-Legendre nodes and weights on [-1, 1], ascending.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut x = vec![0.0f64; n];
    let mut w = vec![0.0f64; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (
        x.into_iter().map(T::lit).collect(),
        w.into_iter().map(T::lit).collect(),
    )
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

// 21-point Kronrod extension of the 10-point Gauss rule (abscissae descending,
// centre last). Odd entries of XGK are the Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// One GK21 panel estimate.
#[derive(Debug, Clone, Copy)]
pub struct Panel<T, const N: usize> {
    pub lo: T,
    pub hi: T,
    pub value: [T; N],
    pub err: [T; N],
    /// Roundoff floor: 50 eps times the integral of |f| over the panel.
    pub floor: [T; N],
}

/// Applies the 21-point Gauss-Kronrod rule on [lo, hi] with QUADPACK-style
/// error scaling.
pub fn gk21<T: Real, const N: usize, F>(f: &mut F, lo: T, hi: T) -> Panel<T, N>
where
    F: FnMut(T) -> [T; N],
{
    let half = T::lit(0.5);
    let centre = half * (lo + hi);
    let hl = half * (hi - lo);
    let zero = [T::zero(); N];

    let fc = f(centre);
    let mut resk = zero;
    let mut resg = zero;
    let mut resabs = zero;
    let mut fv1 = [zero; 10];
    let mut fv2 = [zero; 10];
    let wc = T::lit(WGK[10]);
    for i in 0..N {
        resk[i] = wc * fc[i];
        resabs[i] = wc * fc[i].abs();
    }
    for j in 0..10 {
        let dx = hl * T::lit(XGK[j]);
        let f1 = f(centre - dx);
        let f2 = f(centre + dx);
        let wk = T::lit(WGK[j]);
        for i in 0..N {
            resk[i] = resk[i] + wk * (f1[i] + f2[i]);
            resabs[i] = resabs[i] + wk * (f1[i].abs() + f2[i].abs());
            if j % 2 == 1 {
                resg[i] = resg[i] + T::lit(WG[j / 2]) * (f1[i] + f2[i]);
            }
        }
        fv1[j] = f1;
        fv2[j] = f2;
    }

    let eps = T::epsilon();
    let fifty_eps = T::lit(50.0) * eps;
    let mut value = zero;
    let mut err = zero;
    let mut floor = zero;
    let habs = hl.abs();
    for i in 0..N {
        let mean = resk[i] * half;
        let mut resasc = wc * (fc[i] - mean).abs();
        for j in 0..10 {
            resasc =
                resasc + T::lit(WGK[j]) * ((fv1[j][i] - mean).abs() + (fv2[j][i] - mean).abs());
        }
        let resasc = resasc * habs;
        let rabs = resabs[i] * habs;
        let mut e = ((resk[i] - resg[i]) * hl).abs();
        if resasc != T::zero() && e != T::zero() {
            let scale = (T::lit(200.0) * e / resasc).powf(T::lit(1.5));
            e = resasc * scale.min(T::one());
        }
        let fl = fifty_eps * rabs;
        if rabs > T::min_positive_value() / fifty_eps {
            e = e.max(fl);
        }
        value[i] = resk[i] * hl;
        err[i] = e;
        floor[i] = fl;
    }
    Panel {
        lo,
        hi,
        value,
        err,
        floor,
    }
}

/// Tolerances for [`integrate_adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveConfig<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    /// Maximum number of panel bisections.
    pub max_subdivisions: usize,
}

/// Result of an adaptive integration.
#[derive(Debug, Clone)]
pub struct Integral<T, const N: usize> {
    pub value: [T; N],
    pub err: [T; N],
    /// Accumulated roundoff floor per component.
    pub floor: [T; N],
    pub subdivisions: usize,
    pub panels: usize,
}

impl<T: Real, const N: usize> Integral<T, N> {
    /// True when component `i` is indistinguishable from roundoff.
    pub fn at_noise_floor(&self, i: usize, abs_tol: T) -> bool {
        let v = self.value[i].abs();
        v < T::lit(10.0) * self.err[i] || v < abs_tol
    }
}

fn component_target<T: Real>(cfg: &AdaptiveConfig<T>, value: T, floor: T) -> T {
    cfg.abs_tol
        .max(cfg.rel_tol * value.abs())
        .max(T::lit(2.0) * floor)
}

/// Globally adaptive GK21 integration over the panels defined by `breakpoints`
/// (ascending, at least two entries).
///
/// Each component `i` converges when its summed error estimate is at most
/// `max(abs_tol, rel_tol |I_i|, 2 floor_i)`; the last term stops refinement of
/// components whose value is buried in the roundoff of a larger integrand.
/// The panel contributing most to the unconverged components is bisected
/// until all converge or `max_subdivisions` is exhausted.
pub fn integrate_adaptive<T: Real, const N: usize, F>(
    op: &'static str,
    mut f: F,
    breakpoints: &[T],
    cfg: &AdaptiveConfig<T>,
) -> Result<Integral<T, N>>
where
    F: FnMut(T) -> [T; N],
{
    assert!(breakpoints.len() >= 2, "need at least one panel");
    let mut panels: Vec<Panel<T, N>> = breakpoints
        .windows(2)
        .map(|w| gk21(&mut f, w[0], w[1]))
        .collect();

    let mut subdivisions = 0usize;
    loop {
        let mut value = [T::zero(); N];
        let mut err = [T::zero(); N];
        let mut floor = [T::zero(); N];
        for p in &panels {
            for i in 0..N {
                value[i] = value[i] + p.value[i];
                err[i] = err[i] + p.err[i];
                floor[i] = floor[i] + p.floor[i];
            }
        }
        let mut target = [T::zero(); N];
        let mut done = true;
        for i in 0..N {
            target[i] = component_target(cfg, value[i], floor[i]);
            if err[i] > target[i] {
                done = false;
            }
        }
        if done {
            return Ok(Integral {
                value,
                err,
                floor,
                subdivisions,
                panels: panels.len(),
            });
        }
        if subdivisions >= cfg.max_subdivisions {
            let (achieved, tgt) = (0..N)
                .map(|i| (err[i], target[i]))
                .max_by(|a, b| {
                    (a.0 / a.1)
                        .partial_cmp(&(b.0 / b.1))
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap();
            return Err(Error::QuadratureNonConvergence {
                op,
                achieved: achieved.to_f64_lossy(),
                target: tgt.to_f64_lossy(),
                subdivisions,
            });
        }

        let mut worst = 0usize;
        let mut worst_score = T::neg_infinity();
        for (k, p) in panels.iter().enumerate() {
            let mut score = T::zero();
            for i in 0..N {
                if err[i] > target[i] {
                    score = score + (p.err[i] - p.floor[i]).max(T::zero()) / target[i];
                }
            }
            if score > worst_score {
                worst_score = score;
                worst = k;
            }
        }
        let p = panels.swap_remove(worst);
        let mid = T::lit(0.5) * (p.lo + p.hi);
        if !(mid > p.lo && mid < p.hi) {
            // Panel cannot be split further in this precision.
            let (achieved, tgt) = (err[0], target[0]);
            return Err(Error::QuadratureNonConvergence {
                op,
                achieved: achieved.to_f64_lossy(),
                target: tgt.to_f64_lossy(),
                subdivisions,
            });
        }
        panels.push(gk21(&mut f, p.lo, mid));
        panels.push(gk21(&mut f, mid, p.hi));
        subdivisions += 1;
    }
}
