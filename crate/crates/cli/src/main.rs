//! Command-line front end: classification reports, unfolding sweeps,
//! trajectory export, two-fold return maps, and the family catalog.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::Vector3;
use serde_json::json;

use psvf_core::bifurcate::{sweep_to_csv, unfold_sweep, UnfoldingRecord};
use psvf_core::catalog;
use psvf_core::classify::{
    check_e_at, check_p_at, classify_psvf, classify_two_fold, TwoFoldKind, Verdict,
};
use psvf_core::flow::integrate;
use psvf_core::poly::Poly;
use psvf_core::sliding::{sliding_field, SearchBox};
use psvf_core::twofold::return_linearization;
use psvf_core::{PiecewiseSystem, PsvfError, ToleranceConfig};

#[derive(Parser)]
#[command(name = "psvf", version, about = "Numerical laboratory for 3D piecewise-smooth vector fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the singularity at a point of the switching surface.
    Classify {
        #[command(flatten)]
        source: SourceArgs,
        /// Query point, comma separated.
        #[arg(long, value_name = "X,Y,Z", default_value = "0,0,0", allow_hyphen_values = true)]
        point: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Sweep lambda across a grid and report the unfolding functional.
    Unfold {
        /// Catalog family to sweep.
        #[arg(long, value_name = "NAME")]
        family: String,
        /// Family parameter override `name=value`; repeatable.
        #[arg(long = "param", value_name = "K=V")]
        param: Vec<String>,
        /// Lambda grid `start:end:count`.
        #[arg(long, value_name = "A:B:N", allow_hyphen_values = true)]
        grid: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Integrate the Filippov dynamics and export the trajectory.
    Flow {
        #[command(flatten)]
        source: SourceArgs,
        /// Initial point, comma separated.
        #[arg(long, value_name = "X,Y,Z", default_value = "0,0,0", allow_hyphen_values = true)]
        point: String,
        /// Integration horizon.
        #[arg(long, value_name = "T")]
        tmax: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Report the return map and crossing conditions at a two-fold.
    Twofold {
        #[command(flatten)]
        source: SourceArgs,
        /// Two-fold location, comma separated.
        #[arg(long, value_name = "X,Y,Z", default_value = "0,0,0", allow_hyphen_values = true)]
        point: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Print the rescaled sliding vector field.
    Sliding {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// List the built-in family catalog.
    Catalog {
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Args)]
struct SourceArgs {
    /// Catalog family name.
    #[arg(long, value_name = "NAME", conflicts_with = "system")]
    family: Option<String>,
    /// Path to a piecewise-system JSON file.
    #[arg(long, value_name = "PATH")]
    system: Option<PathBuf>,
    /// Family parameter override `name=value`; repeatable.
    #[arg(long = "param", value_name = "K=V")]
    param: Vec<String>,
}

#[derive(Args)]
struct CommonArgs {
    /// Output path; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Output format; each subcommand has a natural default.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Zero-certificate threshold override.
    #[arg(long = "zero-eps", value_name = "EPS")]
    zero_eps: Option<f64>,
    /// Surface-event residual override.
    #[arg(long = "event-tol", value_name = "EPS")]
    event_tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Text => "text",
        };
        write!(f, "{s}")
    }
}

/// Exit-code contract: 0 verdict produced, 1 numeric diagnostic, 2 input error.
enum CliError {
    Input(String),
    Numeric(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Numeric(m) => write!(f, "{m}"),
        }
    }
}

impl From<PsvfError> for CliError {
    fn from(e: PsvfError) -> Self {
        match e {
            PsvfError::UnknownFamily(_)
            | PsvfError::UnknownParameter { .. }
            | PsvfError::SurfaceNotGraphForm
            | PsvfError::NotOnSwitchingSurface { .. }
            | PsvfError::NotTwoFold
            | PsvfError::NotTangent
            | PsvfError::Precondition(_) => CliError::Input(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

fn json_err(e: serde_json::Error) -> CliError {
    CliError::Numeric(format!("serialization failed: {e}"))
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(command: Command) -> Result<ExitCode, CliError> {
    match command {
        Command::Classify { source, point, common } => cmd_classify(&source, &point, &common),
        Command::Unfold { family, param, grid, common } => {
            cmd_unfold(&family, &param, &grid, &common)
        }
        Command::Flow { source, point, tmax, common } => {
            cmd_flow(&source, &point, tmax, &common)
        }
        Command::Twofold { source, point, common } => cmd_twofold(&source, &point, &common),
        Command::Sliding { source, common } => cmd_sliding(&source, &common),
        Command::Catalog { common } => cmd_catalog(&common),
    }
}

fn cmd_classify(
    source: &SourceArgs,
    point: &str,
    common: &CommonArgs,
) -> Result<ExitCode, CliError> {
    pick_format(common, Format::Json, &[Format::Json], "classify")?;
    let sys = load_system(source)?;
    let p = parse_point(point)?;
    let class = classify_psvf(&sys, &p, &tolerances(common), &SearchBox::symmetric(1.0));
    let mut report = serde_json::to_value(&class).map_err(json_err)?;
    report["system"] = json!(sys.name);
    report["degenerate"] = json!(class.verdict == Verdict::Degenerate);
    emit(common, &pretty(&report)?)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_unfold(
    family: &str,
    params: &[String],
    grid: &str,
    common: &CommonArgs,
) -> Result<ExitCode, CliError> {
    let format = pick_format(common, Format::Csv, &[Format::Csv, Format::Json], "unfold")?;
    let lambdas = parse_grid(grid)?;
    let overrides = parse_params(params)?;
    let desc = catalog::descriptor(family)?;
    let Some(kind) = desc.eta else {
        return Err(CliError::Input(format!(
            "family `{family}` has no unfolding functional; see `psvf catalog`"
        )));
    };
    // Validate the overrides once so the per-lambda closure cannot fail.
    let mut probe = overrides.clone();
    probe.insert("lambda".into(), 0.0);
    catalog::instantiate(family, &probe)?;
    let make = |l: f64| {
        let mut o = overrides.clone();
        o.insert("lambda".into(), l);
        catalog::instantiate(family, &o).expect("parameters validated above")
    };
    let records =
        unfold_sweep(make, kind, &lambdas, &tolerances(common), &SearchBox::symmetric(1.0));
    let text = match format {
        Format::Csv => sweep_to_csv(&records),
        _ => pretty(&serde_json::to_value(&records).map_err(json_err)?)?,
    };
    emit(common, &text)?;
    slope_summary(&records);
    Ok(ExitCode::SUCCESS)
}

/// Least-squares d eta / d lambda over the converged rows, printed to stderr.
fn slope_summary(records: &[UnfoldingRecord]) {
    let rows: Vec<&UnfoldingRecord> = records.iter().filter(|r| r.converged).collect();
    let n = rows.len();
    let distinct = {
        let mut l: Vec<f64> = rows.iter().map(|r| r.lambda).collect();
        l.dedup();
        l.len()
    };
    if distinct < 2 {
        eprintln!("no slope fit: fewer than 2 converged grid points");
        return;
    }
    let mean = |f: &dyn Fn(&UnfoldingRecord) -> f64| {
        rows.iter().map(|r| f(r)).sum::<f64>() / n as f64
    };
    let (lm, em) = (mean(&|r| r.lambda), mean(&|r| r.eta));
    let cov: f64 = rows.iter().map(|r| (r.lambda - lm) * (r.eta - em)).sum();
    let var: f64 = rows.iter().map(|r| (r.lambda - lm).powi(2)).sum();
    eprintln!(
        "fitted deta/dlambda = {:.17e} over {} converged rows",
        cov / var,
        n
    );
}

fn cmd_flow(
    source: &SourceArgs,
    point: &str,
    tmax: f64,
    common: &CommonArgs,
) -> Result<ExitCode, CliError> {
    let format = pick_format(common, Format::Csv, &[Format::Csv, Format::Json], "flow")?;
    if !(tmax > 0.0) {
        return Err(CliError::Input(format!("tmax must be positive, got {tmax}")));
    }
    let sys = load_system(source)?;
    let p = parse_point(point)?;
    let tr = integrate(&sys, &p, tmax, &tolerances(common));
    let text = match format {
        Format::Csv => tr.to_csv(),
        _ => pretty(&serde_json::to_value(&tr).map_err(json_err)?)?,
    };
    emit(common, &text)?;
    eprintln!("segments: {}, total time: {:.17e}", tr.segments.len(), tr.total_time);
    for (i, seg) in tr.segments.iter().enumerate() {
        eprintln!(
            "  segment {i}: {} over t in [{:.6}, {:.6}], exit {:?}",
            seg.governing,
            seg.first().0,
            seg.last().0,
            seg.exit_event
        );
    }
    if let Some(d) = &tr.diagnostic {
        eprintln!("diagnostic: {d}");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_twofold(
    source: &SourceArgs,
    point: &str,
    common: &CommonArgs,
) -> Result<ExitCode, CliError> {
    pick_format(common, Format::Json, &[Format::Json], "twofold")?;
    let sys = load_system(source)?;
    let p = parse_point(point)?;
    let tol = tolerances(common);
    let class = classify_two_fold(&sys, &p, &tol)?;
    let mut report = json!({
        "system": sys.name,
        "point": [p.x, p.y, p.z],
        "class": serde_json::to_value(&class).map_err(json_err)?,
    });
    match class.kind {
        TwoFoldKind::Elliptic => {
            let data = return_linearization(&sys.translate(&p), &tol)?;
            report["return_map"] = serde_json::to_value(&data).map_err(json_err)?;
            report["condition_e"] =
                serde_json::to_value(check_e_at(&sys, &p, &tol)?).map_err(json_err)?;
        }
        TwoFoldKind::Parabolic => {
            report["condition_p"] =
                serde_json::to_value(check_p_at(&sys, &p, &tol)?).map_err(json_err)?;
        }
        TwoFoldKind::Hyperbolic => {}
    }
    emit(common, &pretty(&report)?)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_sliding(source: &SourceArgs, common: &CommonArgs) -> Result<ExitCode, CliError> {
    let format = pick_format(common, Format::Text, &[Format::Text, Format::Json], "sliding")?;
    let sys = load_system(source)?;
    let sf = sliding_field(&sys)?;
    let text = match format {
        Format::Json => pretty(&json!({
            "system": sys.name,
            "components": sf.components(),
            "spatial": sf.spatial(),
        }))?,
        _ => {
            let mut s = format!("system: {}\n", sys.name);
            for (i, c) in sf.components().iter().enumerate() {
                let _ = writeln!(s, "X^s_{} = {}", i + 1, poly_text(c));
            }
            s
        }
    };
    emit(common, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_catalog(common: &CommonArgs) -> Result<ExitCode, CliError> {
    let format = pick_format(common, Format::Json, &[Format::Json, Format::Text], "catalog")?;
    let descriptors: Vec<&catalog::FamilyDescriptor> = catalog::family_names()
        .iter()
        .map(|n| catalog::descriptor(n).expect("catalog names are valid"))
        .collect();
    let text = match format {
        Format::Text => {
            let mut s = String::new();
            for d in &descriptors {
                let params: Vec<String> =
                    d.params.iter().map(|p| format!("{}={}", p.name, p.default)).collect();
                let _ = writeln!(s, "{}: {}", d.name, d.summary);
                let _ = writeln!(s, "    params: {}", params.join(", "));
                let _ = writeln!(
                    s,
                    "    expected at lambda in {{-0.05, 0, 0.05}}: {}, {}, {}",
                    d.expected[0], d.expected[1], d.expected[2]
                );
            }
            s
        }
        _ => {
            let entries: Vec<serde_json::Value> = descriptors
                .iter()
                .map(|d| {
                    json!({
                        "name": d.name,
                        "summary": d.summary,
                        "params": d.params.iter()
                            .map(|p| json!({"name": p.name, "default": p.default}))
                            .collect::<Vec<_>>(),
                        "eta": d.eta,
                        "expected": [
                            d.expected[0].to_string(),
                            d.expected[1].to_string(),
                            d.expected[2].to_string(),
                        ],
                    })
                })
                .collect();
            pretty(&serde_json::Value::Array(entries))?
        }
    };
    emit(common, &text)?;
    Ok(ExitCode::SUCCESS)
}

/// Builds the system from exactly one of --family or --system.
fn load_system(source: &SourceArgs) -> Result<PiecewiseSystem, CliError> {
    match (&source.family, &source.system) {
        (Some(name), None) => {
            let overrides = parse_params(&source.param)?;
            Ok(catalog::instantiate(name, &overrides)?)
        }
        (None, Some(path)) => {
            if !source.param.is_empty() {
                return Err(CliError::Input(
                    "--param applies only to catalog families".into(),
                ));
            }
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Input(format!("cannot read {}: {e}", path.display()))
            })?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Input(format!("invalid system JSON: {e}")))
        }
        _ => Err(CliError::Input(
            "exactly one of --family or --system is required".into(),
        )),
    }
}

fn tolerances(common: &CommonArgs) -> ToleranceConfig {
    let mut tol = ToleranceConfig::default();
    if let Some(e) = common.zero_eps {
        tol.zero_eps = e;
    }
    if let Some(e) = common.event_tol {
        tol.event_tol = e;
    }
    tol
}

fn pick_format(
    common: &CommonArgs,
    default: Format,
    allowed: &[Format],
    what: &str,
) -> Result<Format, CliError> {
    let format = common.format.unwrap_or(default);
    if !allowed.contains(&format) {
        let names: Vec<String> = allowed.iter().map(Format::to_string).collect();
        return Err(CliError::Input(format!(
            "{what} supports only {} output, got {format}",
            names.join("|")
        )));
    }
    Ok(format)
}

fn emit(common: &CommonArgs, content: &str) -> Result<(), CliError> {
    match &common.out {
        Some(path) => fs::write(path, content).map_err(|e| {
            CliError::Numeric(format!("cannot write {}: {e}", path.display()))
        }),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn pretty(value: &serde_json::Value) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(json_err)?;
    s.push('\n');
    Ok(s)
}

fn parse_point(s: &str) -> Result<Vector3<f64>, CliError> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Input(format!("invalid point `{s}`: {e}")))?;
    if parts.len() != 3 {
        return Err(CliError::Input(format!(
            "point must have 3 comma-separated components, got `{s}`"
        )));
    }
    Ok(Vector3::new(parts[0], parts[1], parts[2]))
}

/// Parses `start:end:count` into an evenly spaced grid; count 1 yields start.
fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = |why: &str| CliError::Input(format!("invalid grid `{s}`: {why}"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad("expected start:end:count"));
    }
    let a: f64 = parts[0].parse().map_err(|_| bad("start is not a number"))?;
    let b: f64 = parts[1].parse().map_err(|_| bad("end is not a number"))?;
    let n: usize = parts[2].parse().map_err(|_| bad("count is not an integer"))?;
    if n == 0 {
        return Err(bad("count must be at least 1"));
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
}

fn parse_params(items: &[String]) -> Result<BTreeMap<String, f64>, CliError> {
    let mut out = BTreeMap::new();
    for item in items {
        let (k, v) = item.split_once('=').ok_or_else(|| {
            CliError::Input(format!("invalid parameter `{item}`: expected name=value"))
        })?;
        let value: f64 = v.trim().parse().map_err(|_| {
            CliError::Input(format!("invalid parameter value in `{item}`"))
        })?;
        out.insert(k.trim().to_string(), value);
    }
    Ok(out)
}

/// Plain-text polynomial with terms in canonical exponent order.
fn poly_text(p: &Poly) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    for t in p.terms() {
        let mono = {
            let mut m = String::new();
            for (i, &e) in t.exp.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if !m.is_empty() {
                    m.push(' ');
                }
                let _ = write!(m, "x{}", i + 1);
                if e > 1 {
                    let _ = write!(m, "^{e}");
                }
            }
            m
        };
        let mag = t.c.abs();
        let piece = if mono.is_empty() {
            format!("{mag}")
        } else if mag == 1.0 {
            mono
        } else {
            format!("{mag} {mono}")
        };
        if out.is_empty() {
            if t.c < 0.0 {
                out.push('-');
            }
        } else {
            out.push_str(if t.c < 0.0 { " - " } else { " + " });
        }
        out.push_str(&piece);
    }
    out
}
