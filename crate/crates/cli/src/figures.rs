//! Datasets behind figures 1a-1c (b_tilde against l0), 2 (universal b_tilde
//! against x) and 3 (universal concurrence against x).

use std::path::PathBuf;

use rayon::prelude::*;
use serde_json::json;

use oamlab::map_asymptotic::series_coefficients_x;
use oamlab::universal::{btilde_universal, concurrence, leonhard_fit};
use oamlab::{Alpha, Method, QuadratureConfig, Turbulence};

use crate::args::{resolve, spaced, FiguresArgs};
use crate::compute::{compute_point, Settings};
use crate::output::{fmt_f64, write_atomic, Table};
use crate::CliError;

pub const ALL: [&str; 5] = ["1a", "1b", "1c", "2", "3"];
pub const FIG1_T: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 5.0];

/// 30 log-spaced integers on [2, 300] plus the checkpoints 10, 30, 100, 150.
pub fn fig1_l0() -> Vec<i64> {
    let mut v: Vec<i64> = spaced(2.0, 300.0, 30, true)
        .into_iter()
        .map(|x| x.round() as i64)
        .chain([10, 30, 100, 150, 300])
        .collect();
    v.sort_unstable();
    v.dedup();
    v
}

pub fn fig2_x() -> Vec<f64> {
    spaced(1e-2, 10.0, 121, true)
}

pub fn fig3_x() -> Vec<f64> {
    spaced(0.0, 1.2, 121, false)
}

fn alphas() -> [Alpha; 3] {
    [Alpha::linear(), Alpha::kolmogorov(), Alpha::quadratic()]
}

pub fn figures(args: &FiguresArgs) -> Result<(), CliError> {
    let r = resolve(args, args.config.as_deref())?;
    let outdir = r
        .outdir
        .clone()
        .ok_or_else(|| CliError::usage("missing --outdir"))?;
    let mut which: Vec<String> = if r.which.is_empty() || r.which.iter().any(|w| w == "all") {
        ALL.iter().map(|s| s.to_string()).collect()
    } else {
        r.which.clone()
    };
    which.dedup();
    for w in &which {
        if !ALL.contains(&w.as_str()) {
            return Err(CliError::usage(format!(
                "unknown figure {w:?}; expected one of {ALL:?} or all"
            )));
        }
    }
    std::fs::create_dir_all(&outdir)
        .map_err(|e| CliError::io(format!("cannot create {}: {e}", outdir.display())))?;
    let mut quadrature = QuadratureConfig::default();
    if let Some(t) = r.rel_tol {
        quadrature.rel_tol = t;
    }
    quadrature
        .validate()
        .map_err(|e| CliError::usage(e.to_string()))?;
    let settings = Settings {
        quadrature,
        ..Settings::new(&Default::default())?
    };
    // Everything is computed before anything is written.
    let mut files = Vec::new();
    for w in &which {
        let text = match w.as_str() {
            "1a" => fig1(w, Alpha::linear(), &settings)?,
            "1b" => fig1(w, Alpha::kolmogorov(), &settings)?,
            "1c" => fig1(w, Alpha::quadratic(), &settings)?,
            "2" => fig2()?,
            _ => fig3()?,
        };
        files.push((outdir.join(format!("fig{w}.csv")), text));
    }
    let mut written: Vec<PathBuf> = Vec::new();
    for (path, text) in &files {
        if let Err(e) = write_atomic(path, text) {
            remove_all(&written);
            return Err(e);
        }
        written.push(path.clone());
    }
    Ok(())
}

fn remove_all(paths: &[PathBuf]) {
    for p in paths {
        let _ = std::fs::remove_file(p);
    }
}

fn fig1(id: &str, alpha: Alpha, settings: &Settings) -> Result<String, CliError> {
    let l0s = fig1_l0();
    let extra = match alpha.kind() {
        oamlab::ExponentKind::Kolmogorov => Some(Method::Series),
        oamlab::ExponentKind::Quadratic => Some(Method::ExactQuadratic),
        _ => None,
    };
    let grid: Vec<(f64, i64)> = FIG1_T
        .iter()
        .flat_map(|&t| l0s.iter().map(move |&l| (t, l)))
        .collect();
    let rows = grid
        .par_iter()
        .map(|&(t, l0)| {
            let q = compute_point(Method::Quadrature, alpha, l0, t, settings)?;
            let s = compute_point(Method::Asymptotic, alpha, l0, t, settings)?;
            let mut cells = vec![
                l0.to_string(),
                fmt_f64(t),
                fmt_f64(q.x),
                fmt_f64(q.b_tilde),
                if q.noise_floor { "1" } else { "0" }.to_string(),
                fmt_f64(s.b_tilde),
            ];
            if let Some(m) = extra {
                cells.push(fmt_f64(compute_point(m, alpha, l0, t, settings)?.b_tilde));
            }
            Ok(cells)
        })
        .collect::<Vec<Result<_, CliError>>>()
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let mut columns = vec![
        "l0",
        "t",
        "x",
        "quadrature",
        "quadrature_noise_floor",
        "asymptotic",
    ];
    match extra {
        Some(Method::Series) => columns.push("series3"),
        Some(_) => columns.push("exact_quadratic"),
        None => {}
    }
    let mut table = Table::new(columns);
    for r in rows {
        table.push(r);
    }
    let config = json!({
        "figure": id,
        "alpha": alpha.to_string(),
        "l0": l0s,
        "t": FIG1_T,
        "rel_tol": settings.quadrature.rel_tol,
        "series_terms": settings.series_terms,
    });
    Ok(table.render(&config))
}

fn universal_columns(xs: &[f64], f: impl Fn(f64) -> f64 + Sync) -> Result<Vec<[f64; 3]>, CliError> {
    xs.par_iter()
        .map(|&x| {
            let mut out = [0.0; 3];
            for (o, a) in out.iter_mut().zip(alphas()) {
                let b = btilde_universal(x, &a).map_err(|e| {
                    CliError::at_point(e, &a.to_string(), oamlab::universal::L0_STAR, x)
                })?;
                *o = f(b);
            }
            Ok(out)
        })
        .collect::<Vec<Result<_, CliError>>>()
        .into_iter()
        .collect()
}

fn fig2() -> Result<String, CliError> {
    let xs = fig2_x();
    let cols = universal_columns(&xs, |b| b)?;
    let k = Turbulence::from_strength(Alpha::kolmogorov(), 1.0)
        .map_err(|e| CliError::usage(e.to_string()))?;
    let coeffs = series_coefficients_x(&k, 3).map_err(|e| CliError::usage(e.to_string()))?;
    let mut table = Table::new(["x", "alpha_1", "alpha_5_3", "alpha_2", "series_5_3"]);
    for (x, c) in xs.iter().zip(cols) {
        let series: f64 = coeffs.iter().map(|(p, k)| k * x.powf(*p)).sum();
        table.push(vec![
            fmt_f64(*x),
            fmt_f64(c[0]),
            fmt_f64(c[1]),
            fmt_f64(c[2]),
            fmt_f64(series),
        ]);
    }
    Ok(table.render(&json!({"figure": "2", "x": "1e-2:10:121:log", "series_terms": 3})))
}

fn fig3() -> Result<String, CliError> {
    let xs = fig3_x();
    let cols = universal_columns(&xs, concurrence)?;
    let mut table = Table::new(["x", "alpha_1", "alpha_5_3", "alpha_2", "fit"]);
    for (x, c) in xs.iter().zip(cols) {
        table.push(vec![
            fmt_f64(*x),
            fmt_f64(c[0]),
            fmt_f64(c[1]),
            fmt_f64(c[2]),
            fmt_f64(leonhard_fit(*x)),
        ]);
    }
    Ok(table.render(&json!({"figure": "3", "x": "0:1.2:121"})))
}
