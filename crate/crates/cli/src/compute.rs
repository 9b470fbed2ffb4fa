use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use oamlab::lg_modes::xi;
use oamlab::map_asymptotic::a_asym;
use oamlab::montecarlo::{
    estimate_amplitudes_with, generate_screen, MonteCarloConfig, DEFAULT_GRID_N,
};
use oamlab::universal::btilde_universal;
use oamlab::{
    amplitudes_asymptotic, amplitudes_numeric, b_series, concurrence as concurrence_of,
    exact_quadratic, Alpha, Amplitudes, ExponentKind, Method, QuadratureConfig, Turbulence, GAMMA,
};

use crate::args::{
    non_empty, parse_range, required, resolve, AmplitudesArgs, ConcurrenceArgs, Format,
    MonteCarloArgs, Numerics, SweepArgs, UniversalArgs,
};
use crate::output::{emit, fmt_f64, json_document, write_atomic, Table};
use crate::CliError;

pub const DEFAULT_SERIES_TERMS: usize = 3;
pub const DEFAULT_SAMPLES: usize = 2000;

/// Numerical settings after defaults are applied.
#[derive(Debug, Clone)]
pub struct Settings {
    pub gamma: f64,
    pub quadrature: QuadratureConfig,
    pub series_terms: usize,
    pub montecarlo: MonteCarloConfig,
}

impl Settings {
    pub fn new(n: &Numerics) -> Result<Self, CliError> {
        let mut quadrature = QuadratureConfig::default();
        if let Some(r) = n.rel_tol {
            quadrature.rel_tol = r;
        }
        if let Some(m) = n.max_subdivisions {
            quadrature.max_subdivisions = m;
        }
        quadrature
            .validate()
            .map_err(|e| CliError::usage(e.to_string()))?;
        let montecarlo = MonteCarloConfig {
            n_samples: n.samples.unwrap_or(DEFAULT_SAMPLES),
            seed: n.seed.unwrap_or(0),
            grid_n: n.grid.unwrap_or(DEFAULT_GRID_N),
            ..MonteCarloConfig::default()
        };
        Ok(Self {
            gamma: n.gamma.unwrap_or(GAMMA),
            quadrature,
            series_terms: n.series_terms.unwrap_or(DEFAULT_SERIES_TERMS),
            montecarlo,
        })
    }

    /// Fills unset knobs with their defaults so the echoed config is complete.
    pub fn fill(&self, n: &mut Numerics) {
        n.gamma = Some(self.gamma);
        n.rel_tol = Some(self.quadrature.rel_tol);
        n.max_subdivisions = Some(self.quadrature.max_subdivisions);
        n.series_terms = Some(self.series_terms);
        n.samples = Some(self.montecarlo.n_samples);
        n.seed = Some(self.montecarlo.seed);
        n.grid = Some(self.montecarlo.grid_n);
    }
}

pub fn parse_alpha(s: &str) -> Result<Alpha, CliError> {
    s.parse::<Alpha>()
        .map_err(|e| CliError::usage(format!("--alpha {s:?}: {e}")))
}

pub fn parse_method(s: &str) -> Result<Method, CliError> {
    s.parse::<Method>()
        .map_err(|e| CliError::usage(format!("--method {s:?}: {e}")))
}

fn params(alpha: Alpha, t: f64, gamma: f64) -> Result<Turbulence, CliError> {
    Turbulence::from_strength(alpha, t)
        .and_then(|p| p.with_gamma(gamma))
        .map_err(|e| CliError::usage(e.to_string()))
}

/// One amplitude result with the point it belongs to.
#[derive(Debug, Clone, Serialize)]
pub struct AmpRow {
    pub alpha: String,
    pub l0: i64,
    pub t: f64,
    /// `xi(l0) / r0` for a unit beam width.
    pub x: f64,
    pub method: &'static str,
    pub a: f64,
    pub b: f64,
    pub b_tilde: f64,
    pub err: f64,
    pub a_err: f64,
    pub b_tilde_err: f64,
    pub noise_floor: bool,
    pub outside_validity: bool,
}

pub const AMP_COLUMNS: [&str; 13] = [
    "alpha",
    "l0",
    "t",
    "x",
    "method",
    "a",
    "b",
    "b_tilde",
    "err",
    "a_err",
    "b_tilde_err",
    "noise_floor",
    "outside_validity",
];

impl AmpRow {
    pub fn cells(&self) -> Vec<String> {
        let flag = |b: bool| if b { "1" } else { "0" }.to_string();
        vec![
            self.alpha.clone(),
            self.l0.to_string(),
            fmt_f64(self.t),
            fmt_f64(self.x),
            self.method.to_string(),
            fmt_f64(self.a),
            fmt_f64(self.b),
            fmt_f64(self.b_tilde),
            fmt_f64(self.err),
            fmt_f64(self.a_err),
            fmt_f64(self.b_tilde_err),
            flag(self.noise_floor),
            flag(self.outside_validity),
        ]
    }
}

/// Runs one method at one point; errors carry the `(alpha, l0, t)` triple.
pub fn compute_point(
    method: Method,
    alpha: Alpha,
    l0: i64,
    t: f64,
    settings: &Settings,
) -> Result<AmpRow, CliError> {
    let label = alpha.to_string();
    if l0 < 1 {
        return Err(CliError::usage(format!(
            "l0 = {l0} must be a positive integer"
        )));
    }
    let p = params(alpha, t, settings.gamma)?;
    let at = |e| CliError::at_point(e, &label, l0, t);
    let r: Amplitudes = match method {
        Method::Quadrature => amplitudes_numeric(l0, &p, &settings.quadrature).map_err(at)?,
        Method::Asymptotic => amplitudes_asymptotic(l0, &p, None).map_err(at)?,
        Method::Series => series_pair(l0, &p, settings.series_terms).map_err(at)?,
        Method::ExactQuadratic => exact_quadratic(l0, &p).map_err(at)?,
        Method::MonteCarlo => estimate_amplitudes_with(l0, &p, &settings.montecarlo).map_err(at)?,
    };
    Ok(AmpRow {
        alpha: label.clone(),
        l0,
        t,
        x: xi(l0, 1.0).map_err(at)? * t,
        method: method.as_str(),
        a: r.a,
        b: r.b,
        b_tilde: r.b_tilde,
        err: r.err,
        a_err: r.a_err,
        b_tilde_err: r.b_tilde_err,
        noise_floor: r.noise_floor,
        outside_validity: r.outside_validity,
    })
}

/// Steepest-descent `a` with the truncated Watson series for `b_tilde`; the
/// error of `b_tilde` is the magnitude of the last retained term.
pub fn series_pair(l0: i64, p: &Turbulence, terms: usize) -> oamlab::Result<Amplitudes> {
    if p.alpha.kind() == ExponentKind::Quadratic {
        return Err(oamlab::Error::InvalidParameter {
            name: "method",
            detail: "the Watson series vanishes term by term for alpha = 2".into(),
        });
    }
    if p.t() == 0.0 {
        return Ok(Amplitudes::identity(Method::Series));
    }
    let a = a_asym(l0, p)?;
    let s = b_series(l0, p, terms)?;
    let mut r = Amplitudes::from_parts(a, a * s.b_tilde, 0.0, 0.0, Method::Series);
    r.b_tilde = s.b_tilde;
    r.b_tilde_err = s.terms.last().map_or(0.0, |v| v.abs());
    r.err = a * r.b_tilde_err;
    r.outside_validity = s.diverging || a > 1.0;
    Ok(r)
}

/// The resolved arguments echoed into the output. Destination paths are
/// dropped so the same computation always produces the same bytes.
fn config_value<T: Serialize>(v: &T) -> Value {
    let mut v = serde_json::to_value(v).unwrap_or(Value::Null);
    if let Value::Object(m) = &mut v {
        for k in ["output", "dump_screen"] {
            m.remove(k);
        }
    }
    v
}

pub fn amplitudes(args: &AmplitudesArgs) -> Result<(), CliError> {
    let mut r = resolve(args, args.common.config.as_deref())?;
    let alpha_s = required(&r.alpha, "alpha")?;
    let l0 = required(&r.l0, "l0")?;
    let t = required(&r.t, "t")?;
    let method = parse_method(r.method.as_deref().unwrap_or("quadrature"))?;
    let settings = Settings::new(&r.numerics)?;
    settings.fill(&mut r.numerics);
    r.method = Some(method.as_str().into());
    let row = compute_point(method, parse_alpha(&alpha_s)?, l0, t, &settings)?;
    write_rows(
        &config_value(&r),
        &[row],
        true,
        &r.common.output,
        r.common.format,
        Format::Json,
    )
}

/// JSON holds a single point as a flat object and a sweep as `rows`,
/// whatever the number of grid points.
fn write_rows(
    config: &Value,
    rows: &[AmpRow],
    single: bool,
    output: &Option<std::path::PathBuf>,
    format: Option<Format>,
    default: Format,
) -> Result<(), CliError> {
    let text = match format.unwrap_or(default) {
        Format::Json if single => json_document(config, &rows[0])?,
        Format::Json => json_document(config, &serde_json::json!({ "rows": rows }))?,
        Format::Csv => {
            let mut table = Table::new(AMP_COLUMNS);
            for r in rows {
                table.push(r.cells());
            }
            table.render(config)
        }
    };
    emit(output.as_deref(), &text)
}

pub fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let mut r = resolve(args, args.common.config.as_deref())?;
    non_empty(&r.alpha, "alpha")?;
    non_empty(&r.l0, "l0")?;
    non_empty(&r.t, "t")?;
    if r.methods.is_empty() {
        r.methods = vec!["quadrature".into()];
    }
    let settings = Settings::new(&r.numerics)?;
    settings.fill(&mut r.numerics);
    let alphas = r
        .alpha
        .iter()
        .map(|a| parse_alpha(a))
        .collect::<Result<Vec<_>, _>>()?;
    let methods = r
        .methods
        .iter()
        .map(|m| parse_method(m))
        .collect::<Result<Vec<_>, _>>()?;
    let mut grid = Vec::new();
    for &a in &alphas {
        for &l0 in &r.l0 {
            for &t in &r.t {
                for &m in &methods {
                    grid.push((m, a, l0, t));
                }
            }
        }
    }
    // Collected in grid order, so the first error reported is the first
    // failing grid point whatever the scheduling.
    let rows = grid
        .par_iter()
        .map(|&(m, a, l0, t)| compute_point(m, a, l0, t, &settings))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    write_rows(
        &config_value(&r),
        &rows,
        false,
        &r.common.output,
        r.common.format,
        Format::Csv,
    )
}

#[derive(Debug, Clone, Serialize)]
struct UniversalRow {
    alpha: String,
    x: f64,
    b_tilde: f64,
    concurrence: f64,
}

pub fn universal(args: &UniversalArgs) -> Result<(), CliError> {
    let mut r = resolve(args, args.common.config.as_deref())?;
    if r.alpha.is_empty() {
        r.alpha = vec!["1".into(), "5/3".into(), "2".into()];
    }
    let mut xs = r.x.clone();
    if let Some(spec) = &r.x_range {
        xs.extend(parse_range(spec)?);
    }
    if xs.is_empty() {
        return Err(CliError::usage("give --x or --x-range"));
    }
    let alphas = r
        .alpha
        .iter()
        .map(|a| parse_alpha(a))
        .collect::<Result<Vec<_>, _>>()?;
    let grid: Vec<(Alpha, f64)> = alphas
        .iter()
        .flat_map(|&a| xs.iter().map(move |&x| (a, x)))
        .collect();
    let rows = grid
        .par_iter()
        .map(|&(a, x)| {
            let b = btilde_universal(x, &a).map_err(|e| {
                CliError::at_point(e, &a.to_string(), oamlab::universal::L0_STAR, x)
            })?;
            Ok(UniversalRow {
                alpha: a.to_string(),
                x,
                b_tilde: b,
                concurrence: concurrence_of(b),
            })
        })
        .collect::<Vec<Result<_, CliError>>>()
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let config = config_value(&r);
    let text = match r.common.format.unwrap_or(Format::Csv) {
        Format::Json => json_document(&config, &serde_json::json!({ "rows": rows }))?,
        Format::Csv => {
            let mut table = Table::new(["alpha", "x", "b_tilde", "concurrence"]);
            for row in &rows {
                table.push(vec![
                    row.alpha.clone(),
                    fmt_f64(row.x),
                    fmt_f64(row.b_tilde),
                    fmt_f64(row.concurrence),
                ]);
            }
            table.render(&config)
        }
    };
    emit(r.common.output.as_deref(), &text)
}

#[derive(Debug, Clone, Serialize)]
struct ConcurrenceResult {
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    x: Option<f64>,
    b_tilde: f64,
    concurrence: f64,
}

pub fn concurrence(args: &ConcurrenceArgs) -> Result<(), CliError> {
    let r = resolve(args, args.common.config.as_deref())?;
    let result = match (r.b_tilde, &r.alpha, r.x) {
        (Some(b), None, None) => {
            if !(0.0..=1.0).contains(&b) {
                return Err(CliError::usage(format!("--b-tilde {b} outside [0, 1]")));
            }
            ConcurrenceResult {
                alpha: None,
                x: None,
                b_tilde: b,
                concurrence: concurrence_of(b),
            }
        }
        (None, Some(a), Some(x)) => {
            let alpha = parse_alpha(a)?;
            let b = btilde_universal(x, &alpha).map_err(|e| CliError::usage(e.to_string()))?;
            ConcurrenceResult {
                alpha: Some(alpha.to_string()),
                x: Some(x),
                b_tilde: b,
                concurrence: concurrence_of(b),
            }
        }
        _ => {
            return Err(CliError::usage(
                "give either --b-tilde or both --alpha and --x",
            ))
        }
    };
    let config = config_value(&r);
    let text = match r.common.format.unwrap_or(Format::Json) {
        Format::Json => json_document(&config, &result)?,
        Format::Csv => {
            let mut table = Table::new(["b_tilde", "concurrence"]);
            table.push(vec![fmt_f64(result.b_tilde), fmt_f64(result.concurrence)]);
            table.render(&config)
        }
    };
    emit(r.common.output.as_deref(), &text)
}

pub fn montecarlo(args: &MonteCarloArgs) -> Result<(), CliError> {
    let mut r = resolve(args, args.common.config.as_deref())?;
    let alpha_s = required(&r.alpha, "alpha")?;
    let alpha = parse_alpha(&alpha_s)?;
    let l0 = required(&r.l0, "l0")?;
    let t = required(&r.t, "t")?;
    let mut settings = Settings::new(&r.numerics)?;
    settings.montecarlo.extent = r.extent;
    settings.montecarlo.max_std_err = r.max_std_err;
    settings.fill(&mut r.numerics);
    let row = compute_point(Method::MonteCarlo, alpha, l0, t, &settings)?;
    if let Some(path) = &r.dump_screen {
        let p = params(alpha, t, settings.gamma)?;
        let at = |e| CliError::at_point(e, &alpha_s, l0, t);
        let geometry = settings.montecarlo.geometry(l0, &p).map_err(at)?;
        let screen = generate_screen(&p, geometry, settings.montecarlo.seed).map_err(at)?;
        let mut buf = Vec::new();
        screen.write_csv(&mut buf).map_err(at)?;
        write_atomic(path, &String::from_utf8_lossy(&buf))?;
    }
    write_rows(
        &config_value(&r),
        &[row],
        true,
        &r.common.output,
        r.common.format,
        Format::Json,
    )
}
