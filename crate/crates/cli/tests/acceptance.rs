//! Acceptance checks P1-P12, one PASS/FAIL line each.
//!
//! Every check runs at its stated tolerance. The process fails if a check
//! outside `KNOWN_UNATTAINABLE` fails, or if one inside it starts passing
//! (so the list cannot go stale).

use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use oamlab::lg_modes::{radial_profile, xi, xi_asymptotic, OamMode};
use oamlab::map_asymptotic::{
    amplitudes_asymptotic, b_asym, b_series, exact_quadratic, series_coefficients,
    series_coefficients_x, AsymptoticContext,
};
use oamlab::map_numeric::{amplitudes_numeric, QuadratureConfig};
use oamlab::montecarlo::{
    estimate_amplitudes_with, measure_phase_coherence, measure_structure_function,
    MonteCarloConfig, ScreenGenerator, ScreenGeometry,
};
use oamlab::specfun::{gauss_2f1, ln_factorial};
use oamlab::turbulence::{structure_function, Exponent, TurbulenceParams, GAMMA};
use oamlab::universal::{
    btilde_from_concurrence, btilde_universal, concurrence, leading_coefficient, leonhard_fit,
};

/// Checks that fail at their stated tolerance for reasons documented in the
/// project notes (the criterion itself, not the implementation).
const KNOWN_UNATTAINABLE: &[&str] = &["P6", "P9"];

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn params(alpha: Exponent<f64>, t: f64) -> TurbulenceParams<f64> {
    TurbulenceParams::from_strength(alpha, t).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn ok_if(pass: bool, detail: String) -> Outcome {
    if pass {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn p1() -> Outcome {
    let cfg = QuadratureConfig::default();
    let mut notes = Vec::new();
    let mut pass = true;
    for (alpha, lo, hi) in [
        (Exponent::linear(), 0.7e-4, 1.4e-4),
        (Exponent::kolmogorov(), 0.7e-6, 1.4e-6),
    ] {
        let start = Instant::now();
        let q = amplitudes_numeric(150, &params(alpha, 0.1), &cfg).map_err(|e| e.to_string())?;
        let dt = start.elapsed();
        pass &= (lo..=hi).contains(&q.b_tilde) && dt < Duration::from_secs(60);
        notes.push(format!(
            "alpha={alpha}: b_tilde={:.4e} ({:.2}s)",
            q.b_tilde,
            secs(dt)
        ));
    }
    ok_if(pass, notes.join("; "))
}

fn p2() -> Outcome {
    let p = params(Exponent::quadratic(), 2.0);
    let e = exact_quadratic(150, &p).map_err(|e| e.to_string())?.b_tilde;
    let s = amplitudes_asymptotic(150, &p, None)
        .map_err(|e| e.to_string())?
        .b_tilde;
    ok_if(
        rel(e, 1.3e-9) <= 0.15 && rel(s, 3.4e-10) <= 0.15,
        format!("exact_quadratic={e:.4e} asymptotic={s:.4e}"),
    )
}

fn p3() -> Outcome {
    let p = params(Exponent::kolmogorov(), 1.0);
    let t = series_coefficients(&p, 3).map_err(|e| e.to_string())?;
    let x = series_coefficients_x(&p, 3).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (got, want) in t.iter().zip([0.380, 1.231, 3.735]) {
        worst = worst.max((got.1 - want).abs());
    }
    for (got, want) in x.iter().zip([0.287, 0.781, 1.989]) {
        worst = worst.max((got.1 - want).abs());
    }
    let fmt = |v: &[(f64, f64)]| {
        v.iter()
            .map(|c| format!("{:.4}", c.1))
            .collect::<Vec<_>>()
            .join(", ")
    };
    ok_if(
        worst <= 0.002,
        format!(
            "t^2/l0: ({}); x: ({}); max |diff| {worst:.1e}",
            fmt(&t),
            fmt(&x)
        ),
    )
}

fn p4() -> Outcome {
    let c = |a: Exponent<f64>| -> Result<f64, String> {
        leading_coefficient(&a).map_err(|e| e.to_string())
    };
    let (c1, c53, c2) = (
        c(Exponent::linear())?,
        c(Exponent::kolmogorov())?,
        c(Exponent::quadratic())?,
    );
    ok_if(
        (c1 - 1.20).abs() <= 0.005
            && (c53 - 0.29).abs() <= 0.005
            && c2 == 2.0 * GAMMA
            && c2 == 13.76,
        format!("alpha=1: {c1:.4}; alpha=5/3: {c53:.4}; alpha=2: {c2}"),
    )
}

fn p5() -> Outcome {
    let mut worst: f64 = 0.0;
    for alpha in [Exponent::linear(), Exponent::quadratic()] {
        for l0 in [10i64, 30, 100, 300, 1000] {
            for t in [0.1, 0.5, 1.0, 2.0, 5.0] {
                let s = amplitudes_asymptotic(l0, &params(alpha, t), None)
                    .map_err(|e| e.to_string())?;
                let x = xi_asymptotic(l0, 1.0).map_err(|e| e.to_string())? * t;
                let u = btilde_universal(x, &alpha).map_err(|e| e.to_string())?;
                if u > 0.0 {
                    worst = worst.max(rel(s.b_tilde, u));
                } else if s.b_tilde != 0.0 {
                    worst = f64::INFINITY;
                }
            }
        }
    }
    ok_if(
        worst <= 1e-12,
        format!("max relative difference {worst:.2e} over 2 x 5 x 5 points"),
    )
}

fn p6() -> Outcome {
    let cfg = QuadratureConfig::default();
    let mut worst = (0.0, String::new());
    let mut offenders = Vec::new();
    for alpha in [Exponent::linear(), Exponent::kolmogorov()] {
        for l0 in [10i64, 30, 100, 300] {
            for t in [0.1, 0.5, 1.0, 2.0, 5.0] {
                let p = params(alpha, t);
                let q = amplitudes_numeric(l0, &p, &cfg).map_err(|e| e.to_string())?;
                let s = amplitudes_asymptotic(l0, &p, None).map_err(|e| e.to_string())?;
                let d = rel(s.b_tilde, q.b_tilde);
                let at = format!("(alpha={alpha}, l0={l0}, t={t})");
                if d > 0.10 {
                    offenders.push(format!("{:.1}% at {at}", 100.0 * d));
                }
                if d > worst.0 {
                    worst = (d, at);
                }
            }
        }
    }
    let mut series_worst: f64 = 0.0;
    for l0 in [150i64, 300] {
        for t in [0.1, 0.5, 1.0, 2.0, 5.0] {
            let p = params(Exponent::kolmogorov(), t);
            let s = b_series(l0, &p, 3).map_err(|e| e.to_string())?.b_tilde;
            let c = amplitudes_asymptotic(l0, &p, None)
                .map_err(|e| e.to_string())?
                .b_tilde;
            series_worst = series_worst.max(rel(s, c));
        }
    }
    let merge = if offenders.is_empty() {
        format!(
            "asymptotic vs quadrature worst {:.1}% at {}",
            100.0 * worst.0,
            worst.1
        )
    } else {
        format!(
            "asymptotic vs quadrature above 10%: {}",
            offenders.join(", ")
        )
    };
    ok_if(
        offenders.is_empty() && series_worst <= 0.01,
        format!(
            "{merge}; series vs contour worst {:.3}%",
            100.0 * series_worst
        ),
    )
}

// Midpoint sums over theta in (0, pi) and rho in (0, 9) of the reduced
// two-dimensional integrals, independent of the production quadrature.
fn riemann(l0: u64, alpha: f64, t: f64) -> (f64, f64) {
    let (nt, nr) = (20_000usize, 4_500usize);
    let (ht, hr) = (PI / nt as f64, 9.0 / nr as f64);
    let c = 2f64.powf(alpha - 1.0) * GAMMA * t.powf(alpha);
    let ln_norm = (l0 as f64 + 2.0) * 2f64.ln() - ln_factorial::<f64>(l0);
    let rho: Vec<f64> = (0..nr).map(|i| (i as f64 + 0.5) * hr).collect();
    let dens: Vec<f64> = rho
        .iter()
        .map(|r| (ln_norm + (2 * l0 + 1) as f64 * r.ln() - 2.0 * r * r).exp() * hr)
        .collect();
    let rho_a: Vec<f64> = rho.iter().map(|r| r.powf(alpha)).collect();
    let (mut a, mut b) = (0.0, 0.0);
    for k in 0..nt {
        let th = (k as f64 + 0.5) * ht;
        let d = c * (th / 2.0).sin().powf(alpha);
        let g: f64 = dens
            .iter()
            .zip(&rho_a)
            .map(|(w, ra)| w * (-d * ra).exp())
            .sum();
        a += g * ht;
        b += g * (2.0 * l0 as f64 * th).cos() * ht;
    }
    (a / PI, b / PI)
}

fn p7() -> Outcome {
    let cfg = QuadratureConfig::default();
    let mut exact_worst: f64 = 0.0;
    let mut floor_points = 0;
    let mut bound_ok = true;
    for l0 in [1i64, 2, 5, 10, 25, 50] {
        for t in [0.1, 0.5, 1.0, 2.0] {
            let p = params(Exponent::quadratic(), t);
            let q = amplitudes_numeric(l0, &p, &cfg).map_err(|e| e.to_string())?;
            let e = exact_quadratic(l0, &p).map_err(|e| e.to_string())?;
            exact_worst = exact_worst.max(rel(q.a, e.a));
            if q.noise_floor {
                // b below what the quadrature can resolve: only its bound is meaningful
                floor_points += 1;
                bound_ok &= e.b <= q.b + q.err;
            } else {
                exact_worst = exact_worst.max(rel(q.b, e.b));
            }
        }
    }
    let mut oracle_worst: f64 = 0.0;
    for (alpha, l0, t) in [
        (Exponent::linear(), 1i64, 0.5),
        (Exponent::kolmogorov(), 3, 0.5),
        (Exponent::kolmogorov(), 5, 1.0),
        (Exponent::quadratic(), 2, 1.0),
    ] {
        let (a, b) = riemann(l0 as u64, alpha.value(), t);
        let q = amplitudes_numeric(l0, &params(alpha, t), &cfg).map_err(|e| e.to_string())?;
        oracle_worst = oracle_worst.max(rel(q.a, a)).max(rel(q.b, b));
    }
    ok_if(
        exact_worst <= 1e-6 && bound_ok && oracle_worst <= 1e-6,
        format!(
            "vs exact_quadratic {exact_worst:.1e} ({floor_points} noise-floor b values bounded); vs Riemann oracle {oracle_worst:.1e}"
        ),
    )
}

fn p8() -> Outcome {
    let cfg = QuadratureConfig::default();
    let alpha = Exponent::kolmogorov();
    let curve = |l0: i64, x: f64| -> Result<f64, String> {
        let t = x / xi(l0, 1.0).map_err(|e| e.to_string())?;
        let q = amplitudes_numeric(l0, &params(alpha, t), &cfg).map_err(|e| e.to_string())?;
        Ok(concurrence(q.b_tilde))
    };
    let mut worst = (0.0, 0.0);
    for i in 0..=34 {
        let x = 0.05 + 0.85 * i as f64 / 34.0;
        let d = (curve(30, x)? - curve(100, x)?).abs();
        if d > worst.0 {
            worst = (d, x);
        }
    }
    ok_if(
        worst.0 <= 0.03,
        format!(
            "max |C(l0=30) - C(l0=100)| = {:.4} at x = {:.3}",
            worst.0, worst.1
        ),
    )
}

fn p9() -> Outcome {
    let alphas = [
        Exponent::linear(),
        Exponent::kolmogorov(),
        Exponent::quadratic(),
    ];
    let b = |x: f64, a: &Exponent<f64>| btilde_universal(x, a).map_err(|e| e.to_string());
    let mut notes = Vec::new();
    let mut pass = true;

    let mut limits = true;
    for a in &alphas {
        limits &= b(0.0, a)? == 0.0 && b(10.0, a)? >= 0.99;
    }
    pass &= limits;
    notes.push(format!("limits {}", if limits { "ok" } else { "violated" }));

    let mut ordered = true;
    for i in 1..=200 {
        let x = i as f64 / 200.0;
        let c: Vec<f64> = alphas
            .iter()
            .map(|a| b(x, a).map(concurrence))
            .collect::<Result<_, _>>()?;
        ordered &= c[2] >= c[1] && c[1] >= c[0];
    }
    pass &= ordered;
    notes.push(format!(
        "ordering {}",
        if ordered { "ok" } else { "violated" }
    ));

    let mut sup: f64 = 0.0;
    for i in 0..=300 {
        sup = sup.max(b(0.3 * i as f64 / 300.0, &alphas[2])?);
    }
    pass &= sup < 1e-5;
    notes.push(format!(
        "alpha=2 max b_tilde on [0, 0.3] = {sup:.3e} (bound 1e-5)"
    ));

    let (mut lo, mut hi) = (0.1, 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if concurrence(b(mid, &alphas[0])?) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let death = 0.5 * (lo + hi);
    let err = (death - 2.0 * PI / GAMMA).abs();
    pass &= err <= 1e-6;
    notes.push(format!(
        "alpha=1 death point {death:.9} (2 pi/gamma {:.9})",
        2.0 * PI / GAMMA
    ));
    ok_if(pass, notes.join("; "))
}

fn p10() -> Outcome {
    let alpha = Exponent::kolmogorov();
    let mut worst = (0.0, 0.0);
    for i in 0..=160 {
        let x = 0.8 * i as f64 / 160.0;
        let c = concurrence(btilde_universal(x, &alpha).map_err(|e| e.to_string())?);
        let d = (c - leonhard_fit(x)).abs();
        if d > worst.0 {
            worst = (d, x);
        }
    }
    // The fit decays to zero concurrence, which on the physical branch means
    // b_tilde = 1/2, while the actual crosstalk saturates at one.
    let implied: f64 = btilde_from_concurrence(leonhard_fit(10.0)).map_err(|e| e.to_string())?;
    let actual = btilde_universal(10.0, &alpha).map_err(|e| e.to_string())?;
    ok_if(
        worst.0 <= 0.02 && (implied - 0.5).abs() < 1e-12 && actual >= 0.99,
        format!(
            "max |C - g| = {:.4} at x = {:.3}; fit implies b_tilde(inf) = {implied}, actual b_tilde(10) = {actual:.4}",
            worst.0, worst.1
        ),
    )
}

fn p11() -> Outcome {
    let start = Instant::now();
    let p = params(Exponent::quadratic(), 0.5);
    let cfg = MonteCarloConfig {
        grid_n: 512,
        ..MonteCarloConfig::new(2000, 1)
    };
    let mc = estimate_amplitudes_with(1, &p, &cfg).map_err(|e| e.to_string())?;
    let exact = exact_quadratic(1, &p).map_err(|e| e.to_string())?;
    let za = (mc.a - exact.a).abs() / mc.a_err;
    let zb = (mc.b - exact.b).abs() / mc.err;
    let mut pass = za <= 3.0 && zb <= 3.0;
    let mut notes = vec![format!(
        "a = {:.5} +- {:.5} (exact {:.5}, {za:.2} se); b = {:.5} +- {:.5} (exact {:.5}, {zb:.2} se)",
        mc.a, mc.a_err, exact.a, mc.b, mc.err, exact.b
    )];

    // tilt screens: D(r0) = gamma within 3 se, coherence exp(-D/2) within 3 se
    let tilt = ScreenGenerator::new(
        &p,
        ScreenGeometry::for_mode(1, &p, 256).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?
    .ensemble(9, 500);
    let d = measure_structure_function(&tilt, &[p.r0]).map_err(|e| e.to_string())?[0];
    let mut sf = (d.value - GAMMA).abs() <= 3.0 * d.std_err;
    for e in measure_phase_coherence(&tilt, &[0.1, 0.25, 0.5, 1.0].map(|f| f * p.r0))
        .map_err(|e| e.to_string())?
    {
        sf &= (e.value - (-structure_function(e.separation, &p) / 2.0).exp()).abs()
            <= 3.0 * e.std_err;
    }
    // spectral screens: D within the 15% synthesis budget on [0.05, 0.5] r0
    let k = params(Exponent::kolmogorov(), 0.5);
    let kol = ScreenGenerator::new(
        &k,
        ScreenGeometry::for_mode(2, &k, 512).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?
    .ensemble(5, 500);
    let seps = [0.05, 0.1, 0.2, 0.3, 0.5].map(|f| f * k.r0);
    let mut kol_worst: f64 = 0.0;
    for e in measure_structure_function(&kol, &seps).map_err(|e| e.to_string())? {
        kol_worst = kol_worst.max(rel(e.value, structure_function(e.separation, &k)));
    }
    sf &= kol_worst <= 0.15;
    pass &= sf;
    notes.push(format!(
        "tilt D(r0) = {:.3} +- {:.3}; Kolmogorov D worst {:.1}%",
        d.value,
        d.std_err,
        100.0 * kol_worst
    ));
    let dt = start.elapsed();
    pass &= dt <= Duration::from_secs(600);
    notes.push(format!("{:.1}s", secs(dt)));
    ok_if(pass, notes.join("; "))
}

fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let mut s = f(lo) + f(hi);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(lo + i as f64 * h);
    }
    s * h / 3.0
}

fn cli_output(args: &[&str], threads: &str) -> Result<Vec<u8>, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_oamlab"))
        .args(args)
        .env("OAMLAB_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(String::from_utf8_lossy(&o.stderr).into_owned());
    }
    Ok(o.stdout)
}

fn p12() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;

    let mut norm_worst: f64 = 0.0;
    for l0 in [0i64, 1, 2, 5, 10, 30, 60, 150] {
        let mode = OamMode::new(l0, 1.0).map_err(|e| e.to_string())?;
        let hi = mode.peak_radius() + 8.0;
        let n = simpson(
            |r| radial_profile(&mode, r).unwrap().powi(2) * r,
            0.0,
            hi,
            20_000,
        );
        norm_worst = norm_worst.max((n - 1.0).abs());
    }
    pass &= norm_worst <= 1e-10;
    notes.push(format!("LG norm {norm_worst:.1e}"));

    let f = |a: f64, b: f64, c: f64, z: f64| {
        gauss_2f1(a, b, c, z)
            .map(|v| v.value())
            .map_err(|e| e.to_string())
    };
    let mut hyp_worst: f64 = 0.0;
    for &(a, b, c) in &[
        (0.5, 1.5, 1.0),
        (2.0, 3.5, 1.0),
        (75.5, 76.0, 1.0),
        (1.2, 0.7, 2.3),
    ] {
        for z in [0.1, 0.5, 0.9] {
            let v = f(a, b, c, z)?;
            hyp_worst = hyp_worst.max(rel(f(b, a, c, z)?, v));
            // Euler transformation
            let euler = (1.0 - z).powf(c - a - b) * f(c - a, c - b, c, z)?;
            hyp_worst = hyp_worst.max(rel(euler, v));
        }
    }
    for z in [0.1, 0.5, 0.9] {
        hyp_worst = hyp_worst.max(rel(f(1.0, 1.0, 2.0, z)?, -(1.0 - z).ln() / z));
    }
    pass &= hyp_worst <= 1e-10;
    notes.push(format!("2F1 identities {hyp_worst:.1e}"));

    let mut rot_worst: f64 = 0.0;
    for (l0, t) in [(10i64, 0.5), (150, 0.1), (150, 5.0), (2, 3.0)] {
        let p = params(Exponent::kolmogorov(), t);
        let vals = [-PI / 6.0, -PI / 5.0, -PI / 4.0]
            .iter()
            .map(|&beta| {
                let ctx = AsymptoticContext::with_beta(l0, &p, beta)?;
                b_asym(l0, &p, &ctx)
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        for v in &vals[1..] {
            rot_worst = rot_worst.max(rel(*v, vals[0]));
        }
    }
    pass &= rot_worst <= 1e-9;
    notes.push(format!("contour rotation {rot_worst:.1e}"));

    let sweep = [
        "sweep",
        "--alpha",
        "1,5/3,2",
        "--l0",
        "2,30,150",
        "--t",
        "0.1,1",
        "--methods",
        "quadrature,asymptotic",
    ];
    let first = cli_output(&sweep, "1")?;
    let identical = first == cli_output(&sweep, "4")? && first == cli_output(&sweep, "2")?;
    pass &= identical;
    notes.push(format!(
        "CLI output {}",
        if identical {
            "byte-identical"
        } else {
            "differs"
        }
    ));
    ok_if(pass, notes.join("; "))
}

fn main() {
    let checks: [Check; 12] = [
        ("P1", p1),
        ("P2", p2),
        ("P3", p3),
        ("P4", p4),
        ("P5", p5),
        ("P6", p6),
        ("P7", p7),
        ("P8", p8),
        ("P9", p9),
        ("P10", p10),
        ("P11", p11),
        ("P12", p12),
    ];
    let mut unexpected = Vec::new();
    for (id, check) in checks {
        let outcome = check();
        let (status, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("{id} {status} {detail}");
        let known = KNOWN_UNATTAINABLE.contains(&id);
        if outcome.is_ok() == known {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!(
            "unexpected outcome for {unexpected:?}; known unattainable: {KNOWN_UNATTAINABLE:?}"
        );
        std::process::exit(1);
    }
}
