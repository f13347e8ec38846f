//! `fpot` command line: evaluate potentials, classify generators,
//! reconstruct generators from `h`, and run the verification suites.
//!
//! Exit codes: 0 success, 1 suite failure, 2 input error, 3 numeric error,
//! 4 inconclusive classification, 5 singular h.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fpot::criteria::{classify_potential, compute_h, PotentialType};
use fpot::generator::{generate_f, roundtrip_h, HSpec};
use fpot::means::{eval_potential, GeneratorFunction, WeightedDistribution};
use fpot::verify::{consistency_suite, reproduce_table};
use fpot::{Error, Interval, Tolerance};

#[derive(Parser)]
#[command(
    name = "fpot",
    version,
    about = "Weighted quasi-arithmetic means: evaluation, convexity classification, generator reconstruction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the potential of a weighted distribution under a generator f
    Eval(EvalArgs),
    /// Classify the potential generated by f (types a/b/c/d, linear, neither)
    Classify(ClassifyArgs),
    /// Reconstruct f from a prescribed h and emit a sampled (x, f, f', f'') table
    Generate(GenerateArgs),
    /// Run every documented invariant against one generator
    Verify(VerifyArgs),
    /// Reproduce the built-in 13-row classification catalog
    Table(TableArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Pretty,
}

#[derive(Args)]
struct CommonArgs {
    /// Interval as "lo,hi". Quote a leading minus: -i " -10,10", or use --lo/--hi.
    #[arg(short = 'i', long, allow_hyphen_values = true)]
    interval: Option<String>,
    /// Lower interval bound (alternative to --interval)
    #[arg(long, allow_negative_numbers = true)]
    lo: Option<f64>,
    /// Upper interval bound (alternative to --interval)
    #[arg(long, allow_negative_numbers = true)]
    hi: Option<f64>,
    /// Grid resolution for sweeps and sampled tables
    #[arg(long, default_value_t = 64)]
    grid: usize,
    /// Absolute and relative numeric tolerance target
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Seed for randomized searches
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Trial budget for randomized searches
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    /// Write the report to a file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Pretty)]
    format: Format,
    /// Suppress the timestamp so identical configs produce byte-identical output
    #[arg(long)]
    deterministic: bool,
}

impl CommonArgs {
    fn tolerance(&self) -> Result<Tolerance, Error> {
        Tolerance::new(self.tol, self.tol, (self.tol * 10.0).max(1e-7))
    }

    fn interval(&self) -> Result<Option<Interval>, Error> {
        if let (Some(lo), Some(hi)) = (self.lo, self.hi) {
            return Interval::new(lo, hi).map(Some);
        }
        let Some(text) = &self.interval else {
            return Ok(None);
        };
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(Error::InvalidInput(format!(
                "interval must be \"lo,hi\", got `{text}`"
            )));
        }
        let lo: f64 = parts[0]
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad interval bound `{}`", parts[0])))?;
        let hi: f64 = parts[1]
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad interval bound `{}`", parts[1])))?;
        Interval::new(lo, hi).map(Some)
    }

    fn required_interval(&self) -> Result<Interval, Error> {
        self.interval()?
            .ok_or_else(|| Error::InvalidInput("an interval is required (-i \"lo,hi\")".into()))
    }

    fn timestamp(&self) -> Option<u64> {
        if self.deterministic {
            None
        } else {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .ok()
                .map(|d| d.as_secs())
        }
    }

    fn emit(&self, text: &str) -> Result<(), Error> {
        match &self.out {
            Some(path) => std::fs::write(path, text)
                .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display()))),
            None => {
                println!("{text}");
                Ok(())
            }
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    /// Generator expression in x, e.g. "ln(x)"
    #[arg(short = 'f', long = "function")]
    function: String,
    /// Inline atoms "x:p,x:p,..."
    #[arg(long, allow_hyphen_values = true)]
    atoms: Option<String>,
    /// Distribution file: JSON array of {"x": ..., "p": ...}
    #[arg(long)]
    dist: Option<PathBuf>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Generator expression in x
    #[arg(short = 'f', long = "function")]
    function: String,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct GenerateArgs {
    /// Prescribed h expression in x, e.g. "-x" or "tanh(x)"
    #[arg(long = "h", allow_hyphen_values = true)]
    h: String,
    /// Anchor point; defaults to the domain midpoint
    #[arg(long, allow_negative_numbers = true)]
    x0: Option<f64>,
    /// Scale A (f'(x0) = A, A != 0)
    #[arg(long = "A", default_value_t = 1.0, allow_negative_numbers = true)]
    scale: f64,
    /// Offset B (f(x0) = B)
    #[arg(long = "B", default_value_t = 0.0, allow_negative_numbers = true)]
    offset: f64,
    /// Round-trip acceptance threshold on the recovered h (relative)
    #[arg(long, default_value_t = 1e-5)]
    roundtrip_tol: f64,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Generator expression in x
    #[arg(short = 'f', long = "function")]
    function: String,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct TableArgs {
    #[command(flatten)]
    common: CommonArgs,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Parse { .. }
        | Error::UnknownIdentifier { .. }
        | Error::InvalidInput(_)
        | Error::OutsideDomain { .. } => 2,
        Error::SingularH { .. } => 5,
        Error::EvalFailure { .. }
        | Error::Accuracy { .. }
        | Error::OutOfRange { .. }
        | Error::MonotonicityViolation { .. }
        | Error::DerivativeDegenerate { .. }
        | Error::NotApplicable(_) => 3,
    }
}

fn parse_atoms(text: &str) -> Result<WeightedDistribution, Error> {
    let pairs: Result<Vec<(f64, f64)>, Error> = text
        .split(',')
        .map(|chunk| {
            let (x, p) = chunk.trim().split_once(':').ok_or_else(|| {
                Error::InvalidInput(format!("atom `{chunk}` is not of the form x:p"))
            })?;
            let x: f64 = x
                .trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad atom value `{x}`")))?;
            let p: f64 = p
                .trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad atom probability `{p}`")))?;
            Ok((x, p))
        })
        .collect();
    WeightedDistribution::from_pairs(&pairs?)
}

fn json_wrapper(
    common: &CommonArgs,
    command: &str,
    payload: serde_json::Value,
) -> serde_json::Value {
    let mut doc = serde_json::json!({
        "tool": "fpot",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
    });
    if let Some(ts) = common.timestamp() {
        doc["timestamp"] = serde_json::json!(ts);
    }
    doc["report"] = payload;
    doc
}

fn cmd_eval(args: &EvalArgs) -> Result<u8, Error> {
    let dist = match (&args.atoms, &args.dist) {
        (Some(text), None) => parse_atoms(text)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
            WeightedDistribution::from_json(&text)?
        }
        _ => {
            return Err(Error::InvalidInput(
                "provide exactly one of --atoms or --dist".into(),
            ))
        }
    };
    let tol = args.common.tolerance()?;
    // Without an explicit interval the generator only needs to cover the
    // atoms; pad their range slightly.
    let domain = match args.common.interval()? {
        Some(i) => i,
        None => {
            let spread = (dist.max_x() - dist.min_x()).max(1e-3);
            Interval::new(dist.min_x() - 0.01 * spread, dist.max_x() + 0.01 * spread)?
        }
    };
    let f = GeneratorFunction::from_expr_source(&args.function, domain)?;
    let lambda = eval_potential(&f, &dist, &tol)?;

    match args.common.format {
        Format::Pretty => args.common.emit(&format!(
            "{lambda}\n# f = {}, atoms = {}, abs_tol = {:e}, rel_tol = {:e}",
            f.label(),
            dist.to_json(),
            tol.abs_tol,
            tol.rel_tol
        ))?,
        Format::Csv => args.common.emit(&format!("lambda\n{lambda}"))?,
        Format::Json => {
            let doc = json_wrapper(
                &args.common,
                "eval",
                serde_json::json!({
                    "function": f.label(),
                    "distribution": dist,
                    "lambda": lambda,
                    "tolerances": tol,
                }),
            );
            args.common
                .emit(&serde_json::to_string_pretty(&doc).expect("report serializes"))?;
        }
    }
    Ok(0)
}

fn cmd_classify(args: &ClassifyArgs) -> Result<u8, Error> {
    let tol = args.common.tolerance()?;
    let domain = args.common.required_interval()?;
    let f = GeneratorFunction::from_expr_source(&args.function, domain)?;
    let report = classify_potential(&f, args.common.grid, &tol)?;
    let inconclusive = report.potential_type == PotentialType::Inconclusive;

    match args.common.format {
        Format::Pretty => {
            let mut text = format!(
                "f = {}  on {}\ntype: {:?}   potential: {:?}   h sign: {:?}   h curvature: {:?}\n",
                report.f_label,
                report.domain,
                report.potential_type,
                report.potential_verdict,
                report.h_sign,
                report.h_curvature.tag,
            );
            text.push_str(&report.to_json());
            args.common.emit(&text)?;
        }
        Format::Csv => {
            let mut text = format!(
                "# type={:?} potential={:?}\nx,h\n",
                report.potential_type, report.potential_verdict
            );
            for &x in &report.grid {
                let h = compute_h(&f, x, &tol)?;
                text.push_str(&format!("{x},{h}\n"));
            }
            args.common.emit(text.trim_end())?;
        }
        Format::Json => {
            let doc = json_wrapper(
                &args.common,
                "classify",
                serde_json::to_value(&report).expect("report serializes"),
            );
            args.common
                .emit(&serde_json::to_string_pretty(&doc).expect("report serializes"))?;
        }
    }
    Ok(if inconclusive { 4 } else { 0 })
}

fn cmd_generate(args: &GenerateArgs) -> Result<u8, Error> {
    let tol = args.common.tolerance()?;
    let domain = args.common.required_interval()?;
    let h = HSpec::from_source(&args.h, domain)?;
    let x0 = args.x0.unwrap_or_else(|| h.default_x0());
    let f = generate_f(&h, x0, args.scale, args.offset, &tol)?;
    let residual = roundtrip_h(&h, x0, args.scale, args.offset, args.common.grid)?;
    let rows = f.sample_table(args.common.grid)?;

    match args.common.format {
        Format::Json => {
            let doc = json_wrapper(
                &args.common,
                "generate",
                serde_json::json!({
                    "h": args.h,
                    "x0": x0,
                    "A": args.scale,
                    "B": args.offset,
                    "roundtrip_max_rel_error": residual,
                    "samples": rows,
                }),
            );
            args.common
                .emit(&serde_json::to_string_pretty(&doc).expect("report serializes"))?;
        }
        _ => {
            // CSV is the natural shape here; pretty falls through to it.
            let mut text = String::from("x,f,f1,f2\n");
            for r in &rows {
                text.push_str(&format!("{},{},{},{}\n", r[0], r[1], r[2], r[3]));
            }
            text.push_str(&format!("# roundtrip_h max_rel_error = {residual:e}\n"));
            args.common.emit(text.trim_end())?;
        }
    }
    Ok(if residual <= args.roundtrip_tol { 0 } else { 1 })
}

fn cmd_verify(args: &VerifyArgs) -> Result<u8, Error> {
    let domain = args.common.required_interval()?;
    let f = GeneratorFunction::from_expr_source(&args.function, domain)?;
    let report = consistency_suite(&f, args.common.trials, args.common.seed)?;

    match args.common.format {
        Format::Pretty => {
            let mut text = format!(
                "f = {}  type {:?}  seed {}  trials {}\n",
                report.suite, report.potential_type, report.seed, report.trials
            );
            for p in &report.properties {
                let status = if p.skipped {
                    "skip"
                } else if p.pass {
                    "pass"
                } else {
                    "FAIL"
                };
                text.push_str(&format!(
                    "  {status}  {:32} worst residual {:.3e}\n",
                    p.name, p.worst_residual
                ));
            }
            text.push_str(if report.all_pass {
                "all pass"
            } else {
                "FAILURES"
            });
            args.common.emit(&text)?;
        }
        Format::Csv => {
            let mut text = String::from("property,pass,skipped,worst_residual\n");
            for p in &report.properties {
                text.push_str(&format!(
                    "{},{},{},{}\n",
                    p.name, p.pass, p.skipped, p.worst_residual
                ));
            }
            args.common.emit(text.trim_end())?;
        }
        Format::Json => {
            let doc = json_wrapper(
                &args.common,
                "verify",
                serde_json::to_value(&report).expect("report serializes"),
            );
            args.common
                .emit(&serde_json::to_string_pretty(&doc).expect("report serializes"))?;
        }
    }
    Ok(if report.all_pass { 0 } else { 1 })
}

fn cmd_table(args: &TableArgs) -> Result<u8, Error> {
    let tol = args.common.tolerance()?;
    let outcomes = reproduce_table(args.common.grid, &tol);
    let passed = outcomes.iter().filter(|o| o.pass).count();
    let all_pass = passed == outcomes.len();

    match args.common.format {
        Format::Pretty => {
            let mut text = String::new();
            for o in &outcomes {
                let got = o
                    .potential_type
                    .map(|t| format!("{t:?}"))
                    .unwrap_or_else(|| "error".into());
                text.push_str(&format!(
                    "{}  {:14} {:10} expected {:?}, got {got}{}\n",
                    if o.pass { "pass" } else { "FAIL" },
                    o.row.label,
                    o.row.f_source,
                    o.row.expected_type,
                    o.failure
                        .as_deref()
                        .map(|f| format!("  ({f})"))
                        .unwrap_or_default(),
                ));
            }
            text.push_str(&format!("{passed}/{} rows pass", outcomes.len()));
            args.common.emit(&text)?;
        }
        Format::Csv => {
            let mut text = String::from("label,f,expected_type,got_type,pass,max_h_rel_err\n");
            for o in &outcomes {
                text.push_str(&format!(
                    "{},{},{:?},{:?},{},{}\n",
                    o.row.label,
                    o.row.f_source,
                    o.row.expected_type,
                    o.potential_type,
                    o.pass,
                    o.max_h_rel_err.unwrap_or(f64::NAN)
                ));
            }
            args.common.emit(text.trim_end())?;
        }
        Format::Json => {
            let doc = json_wrapper(
                &args.common,
                "table",
                serde_json::to_value(&outcomes).expect("report serializes"),
            );
            args.common
                .emit(&serde_json::to_string_pretty(&doc).expect("report serializes"))?;
        }
    }
    Ok(if all_pass { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Eval(args) => cmd_eval(args),
        Command::Classify(args) => cmd_classify(args),
        Command::Generate(args) => cmd_generate(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Table(args) => cmd_table(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
