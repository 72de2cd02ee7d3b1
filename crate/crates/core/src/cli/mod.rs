//! Command-line surface of the `qstokes` binary.
//!
//! Every subcommand writes one JSON document (or a CSV table with
//! `--format csv` where supported) to stdout or `--output`. Exit codes:
//! `0` when every numeric check passes, `2` when one fails, `1` on usage,
//! schema or argument errors.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use num_rational::Rational64;
use serde_json::json;

use crate::error::{Error, Result};
use crate::module_rep::{moduli_dimension, resonance_set, BlockModule, Direction, EIG_TOLERANCE};
use crate::newton::{index, irregularity, NewtonPolygon, QDiffOperator, Setting};
use crate::normal_form::{free_coefficient_count, gevrey_cutoff_form, GevreyOrder, DEFAULT_ORDER};
use crate::series::{qpow, CMatrix, Complex, Laurent, DEFAULT_WINDOW};
use crate::stokes::{sample_grid, stokes_cocycle, triviality_verdict};
use crate::summation::algebraic_sum;

mod schema;
pub mod verify;

pub use schema::{
    emit, emit_json, emit_module, entry_of, laurent_of, pair_key, parse_description, parse_module,
    parse_module_str, parse_pair, terms_of, BlockJson, ComplexJson, CsvTable, EntryJson, Format,
    ModuleDescription, Report, TermJson,
};

/// Serde adapter writing a [`Complex`] as `{re, im}`.
pub mod complex_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::ComplexJson;
    use crate::series::Complex;

    pub fn serialize<S: Serializer>(c: &Complex, s: S) -> Result<S::Ok, S::Error> {
        ComplexJson::from(*c).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex, D::Error> {
        Ok(ComplexJson::deserialize(d)?.into())
    }
}

/// Environment variable selecting the scalar precision.
pub const PRECISION_ENV: &str = "QSTOKES_PRECISION";

/// Default tolerance of the `normalize`, `sum` and `stokes` residual checks.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

#[derive(Parser, Debug)]
#[command(
    name = "qstokes",
    version,
    about = "Normal forms, summation and Stokes cocycles of q-difference modules"
)]
struct Cli {
    /// Override q (as `re,im`).
    #[arg(long, global = true, value_parser = parse_complex_arg, allow_hyphen_values = true)]
    q: Option<Complex>,
    /// Truncation order of formal series.
    #[arg(long, global = true)]
    order: Option<i64>,
    /// Half-width of two-sided Laurent windows.
    #[arg(long, global = true)]
    window: Option<i64>,
    /// Pass/fail tolerance for residual checks.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Scalar precision; only `double` is available.
    #[arg(long, global = true)]
    precision: Option<String>,
    /// Write the result to this file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Newton polygon, irregularity and cell indices of a module.
    Newton { file: PathBuf },
    /// Dimension of the space of analytic classes, by level.
    Dim { file: PathBuf },
    /// Birkhoff–Guenther normal form, or a Gevrey cutoff form.
    Normalize {
        file: PathBuf,
        /// Gevrey order: `0` (full normal form), `inf` (formal) or `p/q`.
        #[arg(long, default_value = "0")]
        gevrey: String,
    },
    /// Algebraic sum in a direction, evaluated on a grid.
    Sum {
        file: PathBuf,
        /// Direction c (poles on the spiral of -c), as `re,im`.
        #[arg(long, value_parser = parse_complex_arg, allow_hyphen_values = true)]
        direction: Complex,
        /// Number of grid points.
        #[arg(long, default_value_t = 12)]
        points: usize,
        /// Inner radius of the grid.
        #[arg(long, default_value_t = 0.1)]
        r_min: f64,
        /// Outer radius of the grid.
        #[arg(long, default_value_t = 10.0)]
        r_max: f64,
        /// Start of the q-ray for the CSV table, as `re,im`.
        #[arg(long, value_parser = parse_complex_arg, allow_hyphen_values = true)]
        z0: Option<Complex>,
        /// 1-based scalar entry `i,j` tabulated along the ray (default: top-right).
        #[arg(long)]
        entry: Option<String>,
        /// Number of steps `m` along `z0 q^{-m}`.
        #[arg(long, default_value_t = 16)]
        steps: i64,
    },
    /// Stokes cocycle between two directions.
    Stokes {
        file: PathBuf,
        #[arg(long, value_parser = parse_complex_arg, allow_hyphen_values = true)]
        c: Complex,
        #[arg(long, value_parser = parse_complex_arg, allow_hyphen_values = true)]
        d: Complex,
        #[arg(long, default_value_t = 8)]
        points: usize,
        #[arg(long, default_value_t = 0.1)]
        r_min: f64,
        #[arg(long, default_value_t = 10.0)]
        r_max: f64,
        /// Start of the q-ray for the flatness fit, as `re,im`.
        #[arg(long, value_parser = parse_complex_arg, allow_hyphen_values = true)]
        z0: Option<Complex>,
        /// Number of steps `m` along `z0 q^{-m}`.
        #[arg(long, default_value_t = 14)]
        steps: i64,
    },
    /// Run named identity checks from the built-in fixture corpus.
    Verify {
        /// Fixture name (see `--list`).
        name: Option<String>,
        /// Run every fixture.
        #[arg(long)]
        all: bool,
        /// List fixture names.
        #[arg(long)]
        list: bool,
    },
}

/// Parse `re,im` (or a bare real number).
pub fn parse_complex_arg(s: &str) -> std::result::Result<Complex, String> {
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    match s.split_once(',') {
        Some((re, im)) => Ok(Complex::new(parse(re)?, parse(im)?)),
        None => Ok(Complex::new(parse(s)?, 0.0)),
    }
}

/// Global numeric settings shared by the subcommands.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Settings {
    pub q: Option<Complex>,
    pub order: Option<i64>,
    pub window: Option<i64>,
    pub tolerance: Option<f64>,
}

/// Result of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Validate the requested precision (flag first, then the environment).
pub fn resolve_precision(flag: Option<&str>) -> Result<()> {
    let env = std::env::var(PRECISION_ENV).ok();
    let requested = flag
        .map(str::to_string)
        .or(env)
        .unwrap_or_else(|| "double".into());
    if requested.trim().eq_ignore_ascii_case("double") {
        Ok(())
    } else {
        Err(Error::UnsupportedPrecision(requested))
    }
}

/// Run the command line `args` (including the program name).
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    let fail = |e: Error| Outcome {
        code: 1,
        stdout: String::new(),
        stderr: format!("error: {e}\n"),
    };
    if let Err(e) = resolve_precision(cli.precision.as_deref()) {
        return fail(e);
    }
    let settings = Settings {
        q: cli.q,
        order: cli.order,
        window: cli.window,
        tolerance: cli.tolerance,
    };
    let (report, summary) = match dispatch(&cli.command, &settings) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let bytes = match emit(&report, cli.format) {
        Ok(b) => b,
        Err(e) => return fail(e),
    };
    let code = if report.pass { 0 } else { 2 };
    let text = String::from_utf8(bytes).expect("utf-8 output");
    match &cli.output {
        Some(path) => match std::fs::write(path, &text) {
            Ok(()) => Outcome {
                code,
                stdout: String::new(),
                stderr: summary,
            },
            Err(e) => fail(Error::InvalidArgument(format!(
                "cannot write {}: {e}",
                path.display()
            ))),
        },
        None => Outcome {
            code,
            stdout: text,
            stderr: summary,
        },
    }
}

fn dispatch(command: &Command, s: &Settings) -> Result<(Report, String)> {
    let report = match command {
        Command::Newton { file } => newton_report(&load(file, s)?)?,
        Command::Dim { file } => dim_report(&load(file, s)?),
        Command::Normalize { file, gevrey } => {
            normalize_report(&load(file, s)?, parse_gevrey(gevrey)?, s)?
        }
        Command::Sum {
            file,
            direction,
            points,
            r_min,
            r_max,
            z0,
            entry,
            steps,
        } => {
            let m = load(file, s)?;
            let grid = Grid {
                points: *points,
                r_min: *r_min,
                r_max: *r_max,
            };
            let ray = Ray {
                z0: *z0,
                steps: *steps,
            };
            sum_report(&m, *direction, grid, ray, entry.as_deref(), s)?
        }
        Command::Stokes {
            file,
            c,
            d,
            points,
            r_min,
            r_max,
            z0,
            steps,
        } => {
            let m = load(file, s)?;
            let grid = Grid {
                points: *points,
                r_min: *r_min,
                r_max: *r_max,
            };
            stokes_report(
                &m,
                *c,
                *d,
                grid,
                Ray {
                    z0: *z0,
                    steps: *steps,
                },
                s,
            )?
        }
        Command::Verify { list: true, .. } => {
            let names: Vec<&str> = verify::FIXTURES.iter().map(|f| f.0).collect();
            Report {
                json: json!({ "fixtures": names }),
                table: None,
                pass: true,
            }
        }
        Command::Verify { name, all, .. } => {
            let names: Vec<String> = match (name, all) {
                (_, true) => verify::FIXTURES.iter().map(|f| f.0.to_string()).collect(),
                (Some(n), false) => vec![n.clone()],
                (None, false) => {
                    return Err(Error::InvalidArgument(
                        "name a fixture or pass --all".into(),
                    ))
                }
            };
            let results = verify::run_fixtures(&names, s)?;
            let summary: String = results
                .iter()
                .map(|r| {
                    format!(
                        "{} {} (max residual {:e})\n",
                        r.status, r.fixture, r.max_residual
                    )
                })
                .collect();
            let pass = results.iter().all(|r| r.status == "PASS");
            let json = json!({ "pass": pass, "results": results });
            return Ok((
                Report {
                    json,
                    table: None,
                    pass,
                },
                summary,
            ));
        }
    };
    Ok((report, String::new()))
}

/// Load a module file, applying a `--q` override.
fn load(file: &std::path::Path, s: &Settings) -> Result<BlockModule> {
    let m = parse_module(file)?;
    match s.q {
        Some(q) => BlockModule::new(q, m.blocks, m.u),
        None => Ok(m),
    }
}

fn parse_gevrey(s: &str) -> Result<GevreyOrder> {
    let t = s.trim();
    let bad = || {
        Error::InvalidArgument(format!(
            "Gevrey order `{s}` is not `0`, `inf` or a positive rational p/q"
        ))
    };
    match t {
        "0" => Ok(GevreyOrder::Analytic),
        "inf" | "infinity" | "∞" => Ok(GevreyOrder::Formal),
        _ => {
            let r = match t.split_once('/') {
                Some((p, q)) => {
                    let (p, q): (i64, i64) = (
                        p.trim().parse().map_err(|_| bad())?,
                        q.trim().parse().map_err(|_| bad())?,
                    );
                    if q == 0 {
                        return Err(bad());
                    }
                    Rational64::new(p, q)
                }
                None => Rational64::from_integer(t.parse().map_err(|_| bad())?),
            };
            if r <= Rational64::from_integer(0) {
                return Err(bad());
            }
            Ok(GevreyOrder::Order(r))
        }
    }
}

fn gevrey_label(g: GevreyOrder) -> String {
    match g {
        GevreyOrder::Analytic => "0".into(),
        GevreyOrder::Formal => "inf".into(),
        GevreyOrder::Order(r) => r.to_string(),
    }
}

fn cjson(c: Complex) -> serde_json::Value {
    json!({ "re": c.re, "im": c.im })
}

fn matrix_json(m: &CMatrix) -> serde_json::Value {
    let rows: Vec<Vec<serde_json::Value>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| cjson(m[(i, j)])).collect())
        .collect();
    json!(rows)
}

/// Per-pair data `(i, j, δ, rᵢrⱼ)` for `i < j`.
fn pairs(m: &BlockModule) -> Vec<(usize, usize, i64, i64)> {
    let mut out = Vec::new();
    for i in 0..m.len() {
        for j in i + 1..m.len() {
            let r = (m.blocks[i].rank() * m.blocks[j].rank()) as i64;
            out.push((i, j, m.blocks[j].mu - m.blocks[i].mu, r));
        }
    }
    out
}

/// `newton`: the polygon of the module, the polygon of its endomorphisms
/// (whose irregularity is the moduli dimension) and, per block pair, the
/// index of the cell map `F ↦ z^δ σF - F` in both settings.
pub fn newton_report(m: &BlockModule) -> Result<Report> {
    let polygon = NewtonPolygon::from_pairs(
        m.blocks
            .iter()
            .map(|b| (Rational64::from_integer(b.mu), b.rank())),
    );
    let end = NewtonPolygon::from_pairs(m.blocks.iter().flat_map(|bi| {
        m.blocks.iter().map(move |bj| {
            (
                Rational64::from_integer(bj.mu - bi.mu),
                bi.rank() * bj.rank(),
            )
        })
    }));
    let one = Complex::new(1.0, 0.0);
    let mut indices = Vec::new();
    for (i, j, delta, r) in pairs(m) {
        let cell =
            QDiffOperator::new(vec![Laurent::constant(-one), Laurent::monomial(one, delta)])?;
        indices.push(json!({
            "pair": pair_key(i, j),
            "level": delta,
            "formal": r * index(&cell, Setting::Formal)?,
            "convergent": r * index(&cell, Setting::Convergent)?,
        }));
    }
    let json = json!({
        "polygon": polygon,
        "end_polygon": end,
        "irregularity": irregularity(&end).to_integer(),
        "moduli_dimension": moduli_dimension(&m.blocks),
        "indices": indices,
    });
    Ok(Report {
        json,
        table: None,
        pass: true,
    })
}

/// `dim`: the moduli dimension `Σ rᵢrⱼ(μⱼ - μᵢ)` and its split by level.
pub fn dim_report(m: &BlockModule) -> Report {
    let mut levels: BTreeMap<String, i64> = BTreeMap::new();
    let mut per_pair = Vec::new();
    for (i, j, delta, r) in pairs(m) {
        *levels.entry(delta.to_string()).or_default() += r * delta;
        per_pair.push(json!({ "pair": pair_key(i, j), "level": delta, "dimension": r * delta }));
    }
    let json = json!({ "moduli_dimension": moduli_dimension(&m.blocks), "levels": levels, "pairs": per_pair });
    Report {
        json,
        table: None,
        pass: true,
    }
}

/// `normalize`: the normal (or cutoff) form, its gauge transform and the
/// residual of `F[A_V] = A_U`.
pub fn normalize_report(m: &BlockModule, gevrey: GevreyOrder, s: &Settings) -> Result<Report> {
    let order = s.order.unwrap_or(DEFAULT_ORDER);
    let tol = s.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    let nf = gevrey_cutoff_form(m, gevrey, order)?;
    let free = free_coefficient_count(&nf.normal)?;
    let gauge: BTreeMap<String, serde_json::Value> = nf
        .gauge
        .f
        .iter()
        .map(|(&(i, j), f)| {
            let lo = f.lo();
            let hi = f.hi();
            let exact = f.is_exact();
            // Truncated series are written out on their known window.
            let entry = entry_of(&f.map(|e| Laurent::polynomial(e.lo(), e.coeffs().to_vec())));
            (
                pair_key(i, j),
                json!({ "exact": exact, "lo": lo, "hi": hi, "entry": entry }),
            )
        })
        .collect();
    let json = json!({
        "gevrey": gevrey_label(gevrey),
        "order": order,
        "normal": ModuleDescription::from_module(&nf.normal, None),
        "gauge": gauge,
        "gauge_residual": nf.residual,
        "free_coefficients": free,
        "tolerance": tol,
    });
    Ok(Report {
        json,
        table: None,
        pass: nf.residual <= tol,
    })
}

/// Sampling annulus for `sum` and `stokes`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub points: usize,
    pub r_min: f64,
    pub r_max: f64,
}

/// A q-ray `z₀ q^{-m}`, `m = 0..=steps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub z0: Option<Complex>,
    pub steps: i64,
}

/// Minimal `d_q` distance of sample points to pole spirals.
const GRID_CLEARANCE: f64 = 0.05;

fn default_z0(q: Complex, avoid: &[Complex]) -> Result<Complex> {
    sample_grid(q, avoid, 1, 0.9, 1.1, 0.2)
        .first()
        .copied()
        .ok_or_else(|| Error::InvalidArgument("no admissible starting point; pass --z0".into()))
}

fn parse_entry(entry: Option<&str>, rank: usize) -> Result<(usize, usize)> {
    match entry {
        None => Ok((0, rank - 1)),
        Some(e) => {
            let (i, j) = parse_pair(e)
                .ok_or_else(|| Error::InvalidArgument(format!("entry `{e}` is not `i,j`")))?;
            if i >= rank || j >= rank {
                return Err(Error::InvalidArgument(format!(
                    "entry `{e}` outside a rank-{rank} matrix"
                )));
            }
            Ok((i, j))
        }
    }
}

/// `sum`: the algebraic sum `F_c` on a grid, the substitution residual and
/// the pole report; with a CSV request, `ln|entry(z₀q^{-m})|` along a ray.
pub fn sum_report(
    m: &BlockModule,
    c: Complex,
    grid: Grid,
    ray: Ray,
    entry: Option<&str>,
    s: &Settings,
) -> Result<Report> {
    let window = s.window.unwrap_or(DEFAULT_WINDOW);
    let tol = s.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    let sum = algebraic_sum(m, c, window)?;
    let pole = Direction::new(-c, m.q)?.c;
    let samples = sample_grid(
        m.q,
        &[-c],
        grid.points,
        grid.r_min,
        grid.r_max,
        GRID_CLEARANCE,
    );
    let mut rows = Vec::new();
    let mut worst = 0.0_f64;
    for &z in &samples {
        let value = sum.eval(z)?;
        let residual = sum.residual(m, z)?;
        worst = worst.max(residual);
        rows.push(json!({ "z": cjson(z), "value": matrix_json(&value), "residual": residual }));
    }
    let orders: BTreeMap<String, i64> = pairs(m)
        .into_iter()
        .map(|(i, j, d, _)| (pair_key(i, j), d))
        .collect();
    let forbidden: Vec<serde_json::Value> = resonance_set(&m.blocks, m.q, EIG_TOLERANCE)?
        .points
        .iter()
        .map(|p| cjson(p.c))
        .collect();
    let (ei, ej) = parse_entry(entry, m.rank())?;
    let z0 = match ray.z0 {
        Some(z) => z,
        None => default_z0(m.q, &[-c])?,
    };
    let mut table = Vec::new();
    for k in 0..=ray.steps {
        // Points past the represented annulus end the ray.
        match sum.eval(z0 * qpow(m.q, -k)) {
            Ok(v) => table.push(vec![k as f64, v[(ei, ej)].norm().ln()]),
            Err(_) => break,
        }
    }
    let json = json!({
        "direction": cjson(c),
        "window": window,
        "samples": rows,
        "max_residual": worst,
        "tolerance": tol,
        "poles": { "spiral": cjson(pole), "orders": orders },
        "forbidden": forbidden,
    });
    let table = CsvTable {
        header: vec!["m".into(), format!("log_abs_entry_{}_{}", ei + 1, ej + 1)],
        rows: table,
    };
    Ok(Report {
        json,
        table: Some(table),
        pass: worst <= tol,
    })
}

/// `stokes`: the cocycle `F_{c,d}` on a grid, its automorphism residual,
/// per-block flatness fits along a ray and the triviality verdict.
pub fn stokes_report(
    m: &BlockModule,
    c: Complex,
    d: Complex,
    grid: Grid,
    ray: Ray,
    s: &Settings,
) -> Result<Report> {
    let window = s.window.unwrap_or(DEFAULT_WINDOW);
    let tol = s.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    let cocycle = stokes_cocycle(m, c, d, window)?;
    let samples = sample_grid(
        m.q,
        &[-c, -d],
        grid.points,
        grid.r_min,
        grid.r_max,
        GRID_CLEARANCE,
    );
    let mut rows = Vec::new();
    let mut worst = 0.0_f64;
    for &z in &samples {
        let value = cocycle.eval(z)?;
        let residual = cocycle.automorphism_residual(z)?;
        worst = worst.max(residual);
        rows.push(json!({ "z": cjson(z), "value": matrix_json(&value), "residual": residual }));
    }
    let z0 = match ray.z0 {
        Some(z) => z,
        None => default_z0(m.q, &[-c, -d])?,
    };
    let mut flatness = BTreeMap::new();
    for (i, j, _, _) in pairs(m) {
        // A block that vanishes identically has nothing to fit.
        let fit = cocycle.flatness(i, j, z0, 0..=ray.steps).ok().map(|f| {
            json!({ "leading": f.leading, "expected": f.expected, "deviation": f.deviation(), "points": f.points })
        });
        flatness.insert(pair_key(i, j), fit.unwrap_or(serde_json::Value::Null));
    }
    let verdict = triviality_verdict(m, &[c, d], &samples, tol, window)?;
    let json = json!({
        "c": cjson(c),
        "d": cjson(d),
        "window": window,
        "samples": rows,
        "max_automorphism_residual": worst,
        "tolerance": tol,
        "z0": cjson(z0),
        "flatness": flatness,
        "verdict": verdict,
    });
    Ok(Report {
        json,
        table: None,
        pass: worst <= tol,
    })
}
