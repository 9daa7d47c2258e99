//! Command-line surface for the spectral-cantor library.
//!
//! Every run is fully determined by its arguments (seeds included) and
//! machine-readable output echoes the parsed configuration plus the
//! library version. Exit codes: 0 success, 1 a verified inequality was
//! violated, 2 invalid usage or input.

use std::fs;
use std::io::Write as _;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use spectral_cantor::{
    acceptance, box_dimension, brute_force_oracle, connes_distance, delta_gamma, embed_euclidean,
    embed_l1, euclidean_dim, gh_correspondence_distance, gh_upper_bound, verify_flip_metric,
    CantorPoint, DiracSpec, EmbeddedCloud, GammaParam, Multiplicities, SolverOptions, State,
    TruncatedTriple,
};
use spectral_cantor::connes::PointBrackets;
use spectral_cantor::summability::{trace_power, trace_resolvent};

const EXIT_VIOLATION: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "spectral-cantor",
    version = spectral_cantor::VERSION,
    about = "Dirac truncations of the Cantor algebra: state-space distances, fractal embeddings, trace summability and the transposition triple",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum EmbedTarget {
    L1,
    Euclidean,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum CountMode {
    Intervals,
    Grid,
}

#[derive(Args, Serialize)]
struct OutputOpts {
    /// Output format
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Write output to a file instead of stdout
    #[arg(long)]
    out: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Pairwise δ_γ distances, optionally with certified Connes brackets
    Metric(MetricArgs),
    /// Connes distance between two states of the truncated triple
    ConnesDist(ConnesArgs),
    /// Export an embedded Cantor cloud
    Embed(EmbedArgs),
    /// Box-counting dimension of a Cantor truncation
    Dimension(DimensionArgs),
    /// Gromov–Hausdorff upper bound between two Cantor metrics
    GhBound(GhArgs),
    /// Partial trace sums of the Dirac spectrum
    Trace(TraceArgs),
    /// Norm-metric recovery through the transposition triple on M_n
    MatrixTriple(MatrixArgs),
    /// Run the verification suite and print a pass/fail table
    VerifyAll(VerifyArgs),
}

#[derive(Args, Serialize)]
struct MetricArgs {
    /// Scale parameter in (0, 1)
    #[arg(long)]
    gamma: f64,
    /// Comma-separated bit strings ("010,110"); defaults to all points of --level
    #[arg(long, value_delimiter = ',')]
    points: Vec<String>,
    /// Truncation level (defaults to the largest point support)
    #[arg(long)]
    level: Option<usize>,
    /// Also compute certified Connes brackets and bound-violation flags
    #[arg(long)]
    connes: bool,
    /// Comparison tolerance for violation flags
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[command(flatten)]
    output: OutputOpts,
}

#[derive(Args, Serialize)]
struct ConnesArgs {
    #[arg(long)]
    gamma: f64,
    /// Truncation level of the triple
    #[arg(long)]
    level: usize,
    /// First point state (bit string)
    #[arg(long)]
    x: Option<String>,
    /// Second point state (bit string)
    #[arg(long)]
    y: Option<String>,
    /// Solve for this many random state pairs instead of point states
    #[arg(long, default_value_t = 0)]
    random: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative stall tolerance of the ascent
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[command(flatten)]
    output: OutputOpts,
}

#[derive(Args, Serialize)]
struct EmbedArgs {
    #[arg(long)]
    gamma: f64,
    /// Truncation level L of the cloud
    #[arg(long, default_value_t = 10)]
    trunc: usize,
    #[arg(long, value_enum, default_value = "l1")]
    target: EmbedTarget,
    /// Embed only these points (bit strings); defaults to the full truncation
    #[arg(long, value_delimiter = ',')]
    points: Vec<String>,
    #[command(flatten)]
    output: OutputOpts,
}

#[derive(Args, Serialize)]
struct DimensionArgs {
    #[arg(long)]
    gamma: f64,
    #[arg(long, default_value_t = 14)]
    trunc: usize,
    #[arg(long, value_enum, default_value = "intervals")]
    mode: CountMode,
    /// Explicit scales (comma-separated); a geometric ladder by default
    #[arg(long, value_delimiter = ',')]
    scales: Vec<f64>,
    #[command(flatten)]
    output: OutputOpts,
}

#[derive(Args, Serialize)]
struct GhArgs {
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    mu: f64,
    #[arg(long, default_value_t = 12)]
    trunc: usize,
    #[command(flatten)]
    output: OutputOpts,
}

#[derive(Args, Serialize)]
struct TraceArgs {
    #[arg(long)]
    gamma: f64,
    /// Exponent for tr(D^{-s})
    #[arg(long)]
    s: Option<f64>,
    /// Exponent for tr((I + D²)^{-p/2})
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, default_value_t = 100)]
    horizon: usize,
    #[command(flatten)]
    output: OutputOpts,
}

#[derive(Args, Serialize)]
struct MatrixArgs {
    /// Matrix size n of M_n
    #[arg(long, default_value_t = 6)]
    n: usize,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputOpts,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum VerifyFormat {
    Table,
    Json,
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    /// Reduced sizes (same tolerances)
    #[arg(long)]
    quick: bool,
    #[arg(long, value_enum, default_value = "table")]
    format: VerifyFormat,
    /// Write output to a file instead of stdout
    #[arg(long)]
    out: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Metric(args) => cmd_metric(args),
        Command::ConnesDist(args) => cmd_connes(args),
        Command::Embed(args) => cmd_embed(args),
        Command::Dimension(args) => cmd_dimension(args),
        Command::GhBound(args) => cmd_gh(args),
        Command::Trace(args) => cmd_trace(args),
        Command::MatrixTriple(args) => cmd_matrix(args),
        Command::VerifyAll(args) => cmd_verify(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

type CmdResult = Result<u8, Box<dyn std::error::Error>>;

fn emit(out: &Option<String>, text: &str) -> Result<(), std::io::Error> {
    match out {
        Some(path) => fs::write(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

fn envelope(command: &str, config: serde_json::Value, payload: serde_json::Value) -> String {
    let mut doc = serde_json::Map::new();
    doc.insert("command".into(), json!(command));
    doc.insert("version".into(), json!(spectral_cantor::VERSION));
    doc.insert("config".into(), config);
    if let serde_json::Value::Object(map) = payload {
        for (k, v) in map {
            doc.insert(k, v);
        }
    }
    serde_json::to_string_pretty(&serde_json::Value::Object(doc)).expect("serializable")
}

/// 17 significant digits, enough for exact f64 round-trips.
fn csv_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_points(specs: &[String], level: Option<usize>) -> Result<Vec<CantorPoint>, Box<dyn std::error::Error>> {
    if !specs.is_empty() {
        return Ok(specs.iter().map(|s| CantorPoint::parse(s)).collect::<Result<_, _>>()?);
    }
    let level = level.ok_or("need --points or --level")?;
    if level > 14 {
        return Err(format!("full enumeration at level {level} is too large; pass --points").into());
    }
    Ok(CantorPoint::enumerate_level(level).collect())
}

fn cmd_metric(args: MetricArgs) -> CmdResult {
    let gamma = GammaParam::new(args.gamma)?;
    let points = parse_points(&args.points, args.level)?;
    if points.is_empty() {
        return Err("no points given".into());
    }
    let max_support = points.iter().map(|p| p.support()).max().unwrap_or(0);
    let level = args.level.unwrap_or_else(|| max_support.max(1));
    let labels: Vec<String> = points.iter().map(|p| p.to_bit_string(level.max(max_support))).collect();

    let n = points.len();
    let mut delta = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..n {
            delta[i][j] = delta_gamma(&points[i], &points[j], gamma);
        }
    }

    let mut brackets = Vec::new();
    let mut violations: Vec<String> = Vec::new();
    if args.connes {
        let triple = TruncatedTriple::build(level, DiracSpec::Geometric(gamma))?;
        let table = PointBrackets::new(&triple)?;
        let g = gamma.value();
        for i in 0..n {
            for j in (i + 1)..n {
                let b = table.bracket(&points[i], &points[j]);
                if let Some(m) = b.m {
                    let d = delta[i][j];
                    // the explicit-metric sandwich around the first disagreement
                    let (low_d, high_d) = (g.powi(m as i32 - 1) * (1.0 - g), g.powi(m as i32 - 1));
                    if d < low_d - args.tol || d > high_d + args.tol {
                        violations.push(format!(
                            "delta({}, {}) = {d} escapes [{low_d}, {high_d}]",
                            labels[i], labels[j]
                        ));
                    }
                    // both brackets contain the Connes distance, so they intersect
                    if m <= level {
                        let comparison_high = 2.0 / (1.0 - g).powi(3) * d;
                        let comparison_low = 2.0 * d;
                        if b.lower > comparison_high + args.tol || b.upper < comparison_low - args.tol {
                            violations.push(format!(
                                "brackets for ({}, {}) do not intersect the δ comparison",
                                labels[i], labels[j]
                            ));
                        }
                    }
                }
                brackets.push(json!({
                    "i": i, "j": j, "m": b.m, "lower": b.lower, "upper": b.upper,
                }));
            }
        }
    }

    let config = serde_json::to_value(&args)?;
    match args.output.format {
        Format::Json => {
            let payload = json!({
                "points": labels,
                "delta_matrix": delta,
                "brackets": brackets,
                "violations": violations,
            });
            emit(&args.output.out, &envelope("metric", config, payload))?;
        }
        Format::Csv => {
            let mut csv = String::new();
            csv.push_str(&format!("point,{}\n", labels.join(",")));
            for (i, row) in delta.iter().enumerate() {
                let cells: Vec<String> = row.iter().map(|&x| csv_float(x)).collect();
                csv.push_str(&format!("{},{}\n", labels[i], cells.join(",")));
            }
            emit(&args.output.out, &csv)?;
            for v in &violations {
                eprintln!("violation: {v}");
            }
        }
    }
    Ok(if violations.is_empty() { 0 } else { EXIT_VIOLATION })
}

fn cmd_connes(args: ConnesArgs) -> CmdResult {
    let gamma = GammaParam::new(args.gamma)?;
    let triple = TruncatedTriple::build(args.level, DiracSpec::Geometric(gamma))?;
    let opts = SolverOptions { stall_tolerance: args.tol, seed: args.seed, ..SolverOptions::default() };
    let mut runs = Vec::new();
    let mut pairs: Vec<(String, State, State)> = Vec::new();

    if let (Some(x), Some(y)) = (&args.x, &args.y) {
        let px = CantorPoint::parse(x)?;
        let py = CantorPoint::parse(y)?;
        pairs.push((
            format!("{x} vs {y}"),
            State::point(args.level, &px),
            State::point(args.level, &py),
        ));
    }
    if args.random > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        for k in 0..args.random {
            pairs.push((
                format!("random-{k}"),
                State::random(args.level, &mut rng),
                State::random(args.level, &mut rng),
            ));
        }
    }
    if pairs.is_empty() {
        return Err("need --x/--y or --random".into());
    }
    for (label, phi, psi) in &pairs {
        let r = connes_distance(&triple, phi, psi, &opts)?;
        let mut entry = json!({
            "pair": label,
            "value": r.value,
            "upper_bound": r.upper_bound,
            "iterations": r.iterations,
            "converged": r.converged,
        });
        // the oracle is cheap enough to include at tiny levels
        if args.level <= 2 {
            entry["oracle"] = json!(brute_force_oracle(&triple, phi, psi, 400)?);
        }
        runs.push(entry);
    }
    let config = serde_json::to_value(&args)?;
    emit(&args.output.out, &envelope("connes-dist", config, json!({ "runs": runs })))?;
    Ok(0)
}

fn cmd_embed(args: EmbedArgs) -> CmdResult {
    let gamma = GammaParam::new(args.gamma)?;
    let level = args.trunc;
    let points: Vec<CantorPoint> = if args.points.is_empty() {
        if level > 14 {
            return Err(format!("full truncation at L = {level} is too large; pass --points").into());
        }
        CantorPoint::enumerate_level(level).collect()
    } else {
        args.points.iter().map(|s| CantorPoint::parse(s)).collect::<Result<_, _>>()?
    };
    let rows: Vec<(String, Vec<f64>)> = points
        .iter()
        .map(|p| {
            let coords = match args.target {
                EmbedTarget::L1 => embed_l1(p, gamma, level),
                EmbedTarget::Euclidean => embed_euclidean(p, gamma, level),
            };
            (p.to_bit_string(level), coords)
        })
        .collect();

    let config = serde_json::to_value(&args)?;
    match args.output.format {
        Format::Json => {
            let payload = json!({
                "dimension": rows.first().map(|(_, c)| c.len()).unwrap_or(0),
                "points": rows.iter().map(|(label, coords)| json!({
                    "pattern": label, "coords": coords,
                })).collect::<Vec<_>>(),
                "provenance": { "gamma": gamma.value(), "level": level },
            });
            emit(&args.output.out, &envelope("embed", config, payload))?;
        }
        Format::Csv => {
            let width = rows.first().map(|(_, c)| c.len()).unwrap_or(0);
            let mut csv = String::new();
            let coord_names: Vec<String> = (1..=width).map(|i| format!("coord_{i}")).collect();
            csv.push_str(&format!("pattern,{},gamma,level\n", coord_names.join(",")));
            for (label, coords) in &rows {
                let cells: Vec<String> = coords.iter().map(|&x| csv_float(x)).collect();
                csv.push_str(&format!(
                    "{label},{},{},{level}\n",
                    cells.join(","),
                    csv_float(gamma.value())
                ));
            }
            emit(&args.output.out, &csv)?;
        }
    }
    Ok(0)
}

fn cmd_dimension(args: DimensionArgs) -> CmdResult {
    let gamma = GammaParam::new(args.gamma)?;
    let level = args.trunc;
    let (cloud, scales) = match args.mode {
        CountMode::Intervals => {
            let cloud = EmbeddedCloud::cantor_l1(gamma, level)?;
            let scales = if args.scales.is_empty() {
                (2..=level.saturating_sub(2)).map(|n| gamma.pow(n)).collect()
            } else {
                args.scales.clone()
            };
            (cloud, scales)
        }
        CountMode::Grid => {
            let cloud = EmbeddedCloud::cantor_euclidean(gamma, level)?;
            let scales = if args.scales.is_empty() {
                let e = euclidean_dim(gamma) as i32;
                let mu = gamma.value().powi(e);
                let depth = (level as i32 / e).max(2);
                (1..depth).map(|p| mu.powi(p)).collect()
            } else {
                args.scales.clone()
            };
            (cloud, scales)
        }
    };
    let estimate = box_dimension(&cloud, &scales)?;
    let config = serde_json::to_value(&args)?;
    match args.output.format {
        Format::Json => {
            let payload = json!({
                "estimate": estimate,
                "critical_exponent": spectral_cantor::critical_exponent(gamma),
            });
            emit(&args.output.out, &envelope("dimension", config, payload))?;
        }
        Format::Csv => {
            let mut csv = String::from("log_inv_scale,log_count\n");
            for (x, y) in &estimate.table {
                csv.push_str(&format!("{},{}\n", csv_float(*x), csv_float(*y)));
            }
            emit(&args.output.out, &csv)?;
        }
    }
    Ok(0)
}

fn cmd_gh(args: GhArgs) -> CmdResult {
    let gamma = GammaParam::new(args.gamma)?;
    let mu = GammaParam::new(args.mu)?;
    let analytic = gh_upper_bound(gamma, mu);
    let observed = gh_correspondence_distance(gamma, mu, args.trunc)?;
    let tail = 2.0 * gamma.value().max(mu.value()).powi(args.trunc as i32);
    let satisfied = observed <= analytic + tail + 1e-12;
    let config = serde_json::to_value(&args)?;
    let payload = json!({
        "analytic_bound": analytic,
        "correspondence_distance": observed,
        "truncation_tail": tail,
        "satisfied": satisfied,
    });
    emit(&args.output.out, &envelope("gh-bound", config, payload))?;
    Ok(if satisfied { 0 } else { EXIT_VIOLATION })
}

fn cmd_trace(args: TraceArgs) -> CmdResult {
    let gamma = GammaParam::new(args.gamma)?;
    let spec = DiracSpec::Geometric(gamma);
    let mult = Multiplicities::CantorDyadic;
    let (kind, exponent, report) = match (args.s, args.p) {
        (Some(s), None) => ("power", s, trace_power(&spec, &mult, s, args.horizon)?),
        (None, Some(p)) => ("resolvent", p, trace_resolvent(&spec, &mult, p, args.horizon)?),
        _ => return Err("pass exactly one of --s or --p".into()),
    };
    let config = serde_json::to_value(&args)?;
    let payload = json!({
        "spec": spec,
        "kind": kind,
        "exponent": exponent,
        "horizon": report.horizon,
        "partial_sum": report.partial_sum,
        "term_ratio": report.term_ratio,
        "verdict": report.verdict,
        "threshold": spectral_cantor::summability_threshold(gamma),
    });
    emit(&args.output.out, &envelope("trace", config, payload))?;
    Ok(0)
}

fn cmd_matrix(args: MatrixArgs) -> CmdResult {
    let report = verify_flip_metric(args.n, args.trials, args.seed)?;
    let config = serde_json::to_value(&args)?;
    let pass = report.pass;
    emit(&args.output.out, &envelope("matrix-triple", config, serde_json::to_value(&report)?))?;
    Ok(if pass { 0 } else { EXIT_VIOLATION })
}

fn cmd_verify(args: VerifyArgs) -> CmdResult {
    let outcomes = acceptance::run_all(args.quick);
    let all_pass = outcomes.iter().all(|o| o.pass);
    match args.format {
        VerifyFormat::Json => {
            let config = serde_json::to_value(&args)?;
            let payload = json!({ "criteria": outcomes, "all_pass": all_pass });
            emit(&args.out, &envelope("verify-all", config, payload))?;
        }
        VerifyFormat::Table => {
            let mut table = String::new();
            for o in &outcomes {
                table.push_str(&format!(
                    "[{}] {:>2} {:<22} {:>8.2}s  {}\n",
                    if o.pass { "PASS" } else { "FAIL" },
                    o.id,
                    o.name,
                    o.seconds,
                    o.details
                ));
            }
            table.push_str(&format!(
                "{}/{} criteria passed\n",
                outcomes.iter().filter(|o| o.pass).count(),
                outcomes.len()
            ));
            emit(&args.out, &table)?;
        }
    }
    Ok(if all_pass { 0 } else { EXIT_VIOLATION })
}
