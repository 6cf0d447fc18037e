use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aluthge_core::catalog::{self, Params, Role, Tolerances};
use aluthge_core::harness::{self, ExperimentConfig, ExperimentSummary};
use aluthge_core::polar::{FunctionPair, GaugeFunction};
use aluthge_core::radii::{self, RadiusEstimate, RadiusMethod};
use aluthge_core::report::Variant;
use aluthge_core::transforms::aluthge_general;
use aluthge_core::ComplexMatrix;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Numerical radii, generalized Aluthge transforms and inequality checks.
#[derive(Parser)]
#[command(name = "aluthge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Sweep,
    Ellipse,
    Sampling,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the numerical radius of a matrix.
    Radius {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "sweep")]
        method: Method,
        #[arg(long, default_value_t = 720)]
        grid: usize,
        #[arg(long, default_value_t = 1e-12)]
        refine_tol: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Apply the transform f(|A|) U g(|A|) for a function pair.
    Transform {
        #[arg(long)]
        input: PathBuf,
        /// `power:T`, `rational` or `exp`.
        #[arg(long)]
        pair: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate one catalog entry.
    Check {
        #[arg(long)]
        id: String,
        #[arg(long, default_value = "corrected")]
        variant: String,
        #[arg(long)]
        a: Option<PathBuf>,
        #[arg(long)]
        b: Option<PathBuf>,
        #[arg(long)]
        c: Option<PathBuf>,
        #[arg(long)]
        d: Option<PathBuf>,
        #[arg(long)]
        x: Option<PathBuf>,
        #[arg(long)]
        y: Option<PathBuf>,
        #[arg(long)]
        s: Option<PathBuf>,
        #[arg(long = "t-mat")]
        t_mat: Option<PathBuf>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        pair: Option<String>,
        #[arg(long)]
        gauge: Option<String>,
    },
    /// Run a seeded experiment over random ensembles.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's base seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-id slack quantiles.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Summarize the tightest entries of a saved summary.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 10)]
        top_slack: usize,
    },
}

/// Bad inputs exit 3; verification failures exit 1.
enum Failure {
    Invalid(String),
    Failed,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Invalid(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn read_matrix(path: &Path) -> std::result::Result<ComplexMatrix, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn emit(value: &impl Serialize, out: Option<&Path>) -> Outcome {
    write_json(serde_json::to_string_pretty(value)?, out)
}

fn write_json(text: String, out: Option<&Path>) -> Outcome {
    match out {
        Some(p) => fs::write(p, text + "\n").map_err(|e| Failure::Invalid(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}")?;
            Ok(())
        }
    }
}

fn radius(input: &Path, method: Method, grid: usize, refine_tol: f64, samples: usize, seed: u64) -> Outcome {
    let a = read_matrix(input)?;
    let est: RadiusEstimate = match method {
        Method::Sweep => radii::numerical_radius_sweep(&a, grid, refine_tol)?,
        Method::Ellipse => radii::numerical_radius_ellipse2x2(&a)?,
        Method::Sampling => radii::numerical_radius_sampling(&a, samples, seed)?,
    };
    emit(
        &RadiusOutput { value: est.value, theta_star: est.theta_star, lower_bound: est.lower_bound, method: est.method },
        None,
    )
}

#[derive(Serialize)]
struct RadiusOutput {
    value: f64,
    theta_star: f64,
    lower_bound: f64,
    method: RadiusMethod,
}

#[derive(Serialize)]
struct TightRow<'a> {
    id: &'a str,
    min_slack: Option<f64>,
    median_slack: Option<f64>,
    max_slack: Option<f64>,
    pass_count: usize,
    fail_count: usize,
    skip_count: usize,
    argmin_slack_digest: Option<&'a str>,
}

#[derive(Serialize)]
struct ReportOutput<'a> {
    trials: usize,
    failures: usize,
    tightest: Vec<TightRow<'a>>,
}

fn transform(input: &Path, pair: &str, out: Option<&Path>) -> Outcome {
    let a = read_matrix(input)?;
    let pair: FunctionPair = pair.parse()?;
    let result = aluthge_general(&a, &pair)?;
    write_json(serde_json::to_string(&result.transformed)?, out)
}

struct CheckArgs {
    id: String,
    variant: String,
    files: Vec<(&'static str, Option<PathBuf>)>,
    t: Option<f64>,
    r: Option<f64>,
    pair: Option<String>,
    gauge: Option<String>,
}

fn check(args: CheckArgs) -> Outcome {
    let schema = catalog::schema(&args.id)?;
    let variant: Variant = args.variant.parse()?;
    let mut inputs = Vec::new();
    let mut used = Vec::new();
    for role in schema.roles {
        let flag = role.flag();
        let path = args
            .files
            .iter()
            .find(|(f, _)| *f == flag)
            .and_then(|(_, p)| p.as_ref())
            .ok_or_else(|| Failure::Invalid(format!("{}: missing --{flag}", args.id)))?;
        inputs.push(read_matrix(path)?);
        used.push(flag);
    }
    if let Some((flag, _)) = args.files.iter().find(|(f, p)| p.is_some() && !used.contains(f)) {
        return Err(Failure::Invalid(format!("{}: takes no --{flag}", args.id)));
    }
    let params = Params {
        t: args.t,
        r: args.r,
        pair: args.pair.as_deref().map(str::parse::<FunctionPair>).transpose()?,
        gauge: args.gauge.as_deref().map(str::parse::<GaugeFunction>).transpose()?,
        exponents: None,
    };
    let refs: Vec<&ComplexMatrix> = inputs.iter().collect();
    let report = catalog::check(&args.id, &refs, &params, variant, &Tolerances::default())?;
    emit(&report, None)?;
    if !report.passed && report.variant == Variant::Corrected {
        eprintln!("{}: lhs {} exceeds rhs {} beyond tolerance {}", report.id, report.lhs, report.rhs, report.tolerance);
        return Err(Failure::Failed);
    }
    Ok(())
}

fn verify(config: &Path, seed: Option<u64>, out: Option<&Path>, csv: Option<&Path>) -> Outcome {
    let text = fs::read_to_string(config).map_err(|e| Failure::Invalid(format!("{}: {e}", config.display())))?;
    let mut config: ExperimentConfig = serde_json::from_str(&text)?;
    if let Some(seed) = seed {
        config.base_seed = seed;
    }
    let summary = harness::run(&config)?;
    eprintln!(
        "{} trials, {} ids, {} failures ({} corrected) in {:.1}s",
        summary.trials,
        summary.per_id.len(),
        summary.failures.len(),
        summary.corrected_failures(),
        summary.wall_time
    );
    emit(&summary, out)?;
    if let Some(path) = csv {
        let file = fs::File::create(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
        summary.write_csv(file)?;
    }
    if summary.corrected_failures() > 0 {
        return Err(Failure::Failed);
    }
    Ok(())
}

fn report(input: &Path, top: usize) -> Outcome {
    let text = fs::read_to_string(input).map_err(|e| Failure::Invalid(format!("{}: {e}", input.display())))?;
    let summary: ExperimentSummary = serde_json::from_str(&text)?;
    let mut rows: Vec<_> = summary.per_id.iter().filter(|(_, agg)| agg.min_slack.is_some()).collect();
    rows.sort_by(|(i, a), (j, b)| {
        let key = |x: Option<f64>| x.unwrap_or(f64::INFINITY);
        key(a.min_slack).total_cmp(&key(b.min_slack)).then(i.cmp(j))
    });
    let rows: Vec<_> = rows
        .into_iter()
        .take(top)
        .map(|(id, agg)| TightRow {
            id,
            min_slack: agg.min_slack,
            median_slack: agg.median_slack,
            max_slack: agg.max_slack,
            pass_count: agg.pass_count,
            fail_count: agg.fail_count,
            skip_count: agg.skip_count,
            argmin_slack_digest: agg.argmin_slack_digest.as_deref(),
        })
        .collect();
    emit(&ReportOutput { trials: summary.trials, failures: summary.failures.len(), tightest: rows }, None)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Radius { input, method, grid, refine_tol, samples, seed } => {
            radius(&input, method, grid, refine_tol, samples, seed)
        }
        Command::Transform { input, pair, out } => transform(&input, &pair, out.as_deref()),
        Command::Check { id, variant, a, b, c, d, x, y, s, t_mat, t, r, pair, gauge } => check(CheckArgs {
            id,
            variant,
            files: vec![
                (Role::A.flag(), a),
                (Role::B.flag(), b),
                (Role::C.flag(), c),
                (Role::D.flag(), d),
                (Role::X.flag(), x),
                (Role::Y.flag(), y),
                (Role::S.flag(), s),
                (Role::T.flag(), t_mat),
            ],
            t,
            r,
            pair,
            gauge,
        }),
        Command::Verify { config, seed, out, csv } => verify(&config, seed, out.as_deref(), csv.as_deref()),
        Command::Report { input, top_slack } => report(&input, top_slack),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Failed) => ExitCode::from(1),
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
