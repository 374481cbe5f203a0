//! `hdpoly`: runs approximation experiments and writes CSV or JSON results.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hdpoly::harness::{curve, run_experiment, sample_counts, Metric};
use hdpoly::multi_index::{hyperbolic_cross_anchored_in, largest_hyperbolic_order, tensor_set, total_degree_set};
use hdpoly::oracles::{best_n_term_additive, best_n_term_product, kappa_max_lower, univariate_coeffs};
use hdpoly::test_functions::Structure;
use hdpoly::{
    AlsSampling, BasisFamily, Error, ExperimentConfig, ExperimentOutput, IndexSet, LambdaPolicy, Method, MultiIndex,
    OutputFormat, Scaling, Target,
};
use hdpoly::harness::ErrorNorm;

const EXIT_CONFIG: u8 = 2;
const EXIT_ALL_FAILED: u8 = 3;

#[derive(Parser)]
#[command(name = "hdpoly", version, about = "Sparse polynomial approximation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Adaptive weighted least squares.
    Als(AlsArgs),
    /// Square-root LASSO over a hyperbolic cross.
    Cs(CsArgs),
    /// Christoffel sup kappa for standard index sets.
    KappaScan(KappaArgs),
    /// Best n-term errors of product or additive targets.
    BestNTerm(BestArgs),
    /// Geometric-mean error and condition curves for several methods.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Legendre,
    Cheb1,
    Cheb2,
}

impl From<FamilyArg> for BasisFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Legendre => BasisFamily::Legendre,
            FamilyArg::Cheb1 => BasisFamily::Chebyshev1,
            FamilyArg::Cheb2 => BasisFamily::Chebyshev2,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SamplingArg {
    Mc,
    Optimal,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScalingArg {
    Loglinear,
    Linear15,
    Linear2,
}

impl From<ScalingArg> for Scaling {
    fn from(s: ScalingArg) -> Self {
        match s {
            ScalingArg::Loglinear => Scaling::Loglinear,
            ScalingArg::Linear15 => Scaling::Linear15,
            ScalingArg::Linear2 => Scaling::Linear2,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    L2,
    Linf,
}

impl From<NormArg> for ErrorNorm {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::L2 => ErrorNorm::L2,
            NormArg::Linf => ErrorNorm::Linf,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

#[derive(Args, Clone)]
struct Common {
    /// Target id: f1, f2, f3:i, f3:isq, f3:<delta>, borehole, circuit,
    /// piston, robot, wing, additive-sine, low-dim, linear:<p>, pde.
    #[arg(long = "fn", default_value = "f1")]
    function: String,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, value_enum, default_value = "legendre")]
    family: FamilyArg,
    #[arg(long, value_enum, default_value = "mc")]
    sampling: SamplingArg,
    #[arg(long, value_enum, default_value = "loglinear")]
    scaling: ScalingArg,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long = "grid-size", default_value_t = 20_000)]
    grid_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "l2")]
    norm: NormArg,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Measure errors on a separate grid drawn with this seed.
    #[arg(long = "error-grid-seed")]
    error_grid_seed: Option<u64>,
    /// Worker threads; all available cores when omitted.
    #[arg(long)]
    threads: Option<usize>,
    /// Directory for cached target values.
    #[arg(long = "cache-dir")]
    cache_dir: Option<PathBuf>,
    /// Record wall-clock time per row.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct AlsArgs {
    #[command(flatten)]
    common: Common,
    /// Stop before a step would need more samples; 1000 unless
    /// `--max-steps` is given.
    #[arg(long = "max-m")]
    max_m: Option<usize>,
    #[arg(long = "max-steps")]
    max_steps: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Open at most one new coordinate per step.
    #[arg(long)]
    anchored: bool,
}

#[derive(Args)]
struct CsArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated sample counts.
    #[arg(long, value_delimiter = ',', default_value = "100,200,400")]
    m: Vec<usize>,
    /// Cardinality cap of the hyperbolic cross.
    #[arg(long, default_value_t = 10_000)]
    budget: usize,
    /// `table` or `theorem:<epsilon>`.
    #[arg(long, default_value = "table")]
    lambda: String,
}

#[derive(Args)]
struct KappaArgs {
    #[arg(long, value_enum, default_value = "legendre")]
    family: FamilyArg,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Largest set size or order scanned.
    #[arg(long = "max-n", default_value_t = 20)]
    max_n: usize,
    /// Also maximize over all lower sets up to this size (exhaustive).
    #[arg(long)]
    exhaustive: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BestArgs {
    #[arg(long = "fn", default_value = "f1")]
    function: String,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, value_enum, default_value = "legendre")]
    family: FamilyArg,
    /// Comma-separated term counts.
    #[arg(long, value_delimiter = ',', default_value = "1,10,100")]
    n: Vec<usize>,
    /// Highest univariate degree kept per coordinate.
    #[arg(long = "max-degree", default_value_t = 60)]
    max_degree: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    /// Methods to run: als-mc, als-optimal, cs-mc, cs-optimal.
    #[arg(long, value_delimiter = ',', default_value = "als-mc,als-optimal")]
    methods: Vec<String>,
    #[arg(long = "max-m", default_value_t = 1000)]
    max_m: usize,
    /// Sample counts for CS methods.
    #[arg(long, value_delimiter = ',', default_value = "100,200,400")]
    m: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    budget: usize,
}

enum Failure {
    Core(Error),
    AllTrials,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(e.into())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn base_config(c: &Common, method: Method) -> ExperimentConfig {
    let sampling = match c.sampling {
        SamplingArg::Mc => AlsSampling::MonteCarlo,
        SamplingArg::Optimal => AlsSampling::NearOptimal,
    };
    let mut e = ExperimentConfig::als(&c.function, c.dim, sampling, 0);
    e.method = method;
    e.family = c.family.into();
    e.scaling = c.scaling.into();
    e.trials = c.trials;
    e.grid_size = c.grid_size;
    e.seed = c.seed;
    e.error_norm = c.norm.into();
    e.error_grid_seed = c.error_grid_seed;
    e.threads = c.threads;
    e.cache_dir = c.cache_dir.clone();
    e.output = c.out.clone();
    e.timing = c.timing;
    e
}

fn cs_method(s: SamplingArg) -> Method {
    match s {
        SamplingArg::Mc => Method::Cs,
        SamplingArg::Optimal => Method::CsChristoffel,
    }
}

fn sink(out: &Option<PathBuf>) -> std::io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

/// Writes the output and reports failures on standard error.
fn finish(output: &ExperimentOutput, format: OutputFormat) -> Outcome {
    let mut w = sink(&output.config.output)?;
    output.write(&mut w, format)?;
    w.flush()?;
    for f in &output.failures {
        eprintln!("trial {} failed at step {}: {}", f.trial, f.step, f.message);
    }
    if output.all_trials_failed() {
        return Err(Failure::AllTrials);
    }
    Ok(())
}

fn run_als(a: AlsArgs) -> Outcome {
    let mut c = base_config(&a.common, Method::Als);
    c.max_m = a.max_m.or(if a.max_steps.is_none() { Some(1000) } else { None });
    c.max_steps = a.max_steps;
    c.beta = a.beta;
    c.anchored_growth = a.anchored;
    let out = run_experiment(&c)?;
    finish(&out, a.common.format.into())
}

fn run_cs(a: CsArgs) -> Outcome {
    let mut c = base_config(&a.common, cs_method(a.common.sampling));
    c.max_m = None;
    c.m_schedule = a.m;
    c.cs_budget = a.budget;
    c.lambda_policy = a.lambda.parse::<LambdaPolicy>()?;
    let out = run_experiment(&c)?;
    finish(&out, a.common.format.into())
}

fn run_kappa(a: KappaArgs) -> Outcome {
    let family: BasisFamily = a.family.into();
    if a.dim == 0 || a.max_n == 0 {
        return Err(Error::InvalidConfig("dim and max-n must be at least 1".into()).into());
    }
    let mut w = sink(&a.out)?;
    writeln!(w, "set,order,n,kappa,kappa_over_n")?;
    let emit = |w: &mut Box<dyn Write>, name: &str, order: usize, s: &IndexSet| -> std::io::Result<()> {
        let k = family.kappa(s);
        writeln!(w, "{name},{order},{},{k},{}", s.len(), k / s.len() as f64)
    };
    for n in 1..=a.max_n {
        let line: IndexSet = (0..n).map(|k| MultiIndex::axis(1, k)).collect::<hdpoly::Result<_>>()?;
        emit(&mut w, "line", n, &line)?;
    }
    for level in 0..a.max_n {
        let td = total_degree_set(level, a.dim)?;
        if td.len() > a.max_n.pow(2) {
            break;
        }
        emit(&mut w, "total-degree", level, &td)?;
        emit(&mut w, "tensor", level, &tensor_set(level, a.dim)?)?;
    }
    let top = largest_hyperbolic_order((a.max_n * a.max_n) as u64, a.dim);
    for order in 1..=top.max(1) {
        emit(&mut w, "hyperbolic-cross", order, &hyperbolic_cross_anchored_in(order, a.dim)?)?;
    }
    if let Some(limit) = a.exhaustive {
        for n in 1..=limit {
            let (k, s) = kappa_max_lower(family, a.dim, n)?;
            writeln!(w, "max-lower,{n},{},{k},{}", s.len(), k / s.len() as f64)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn run_best(a: BestArgs) -> Outcome {
    let family: BasisFamily = a.family.into();
    let target = Target::parse(&a.function, a.dim)?;
    let structure = target.structure();
    if structure == Structure::General {
        return Err(Error::InvalidConfig(format!("{} is neither a product nor a sum of univariate factors", target.id())).into());
    }
    let per_dim: Vec<Vec<f64>> = (1..=a.dim)
        .map(|i| {
            let exp = univariate_coeffs(|t| target.factor(i, t).expect("separable target"), family, a.max_degree);
            if !exp.converged {
                eprintln!("warning: expansion of factor {i} not converged (tail {:.1e})", exp.tail_estimate);
            }
            exp.coeffs
        })
        .collect();
    let total: f64 = match structure {
        Structure::Product => per_dim.iter().map(|d| d.iter().map(|v| v * v).sum::<f64>()).product(),
        _ => {
            let c0: f64 = per_dim.iter().map(|d| d[0]).sum();
            c0 * c0 + per_dim.iter().map(|d| d[1..].iter().map(|v| v * v).sum::<f64>()).sum::<f64>()
        }
    };
    let mut w = sink(&a.out)?;
    writeln!(w, "n,error,relative_error,max_dim,max_total_degree")?;
    for &n in &a.n {
        let best = match structure {
            Structure::Product => best_n_term_product(&per_dim, n)?,
            _ => best_n_term_additive(&per_dim, n)?,
        };
        let max_deg = best.set.iter().map(|nu| nu.total_degree()).max().unwrap_or(0);
        writeln!(
            w,
            "{n},{},{},{},{max_deg}",
            best.error,
            best.error / total.sqrt(),
            best.set.max_dim()
        )?;
    }
    w.flush()?;
    Ok(())
}

fn run_compare(a: CompareArgs) -> Outcome {
    let mut outputs = Vec::new();
    for name in &a.methods {
        let (method, sampling) = match name.as_str() {
            "als-mc" => (Method::Als, SamplingArg::Mc),
            "als-optimal" => (Method::Als, SamplingArg::Optimal),
            "cs-mc" => (Method::Cs, SamplingArg::Mc),
            "cs-optimal" => (Method::CsChristoffel, SamplingArg::Optimal),
            _ => return Err(Error::InvalidConfig(format!("unknown method `{name}`")).into()),
        };
        let mut common = a.common.clone();
        common.sampling = sampling;
        let mut c = base_config(&common, method);
        if method == Method::Als {
            c.max_m = Some(a.max_m);
        } else {
            c.max_m = None;
            c.m_schedule = a.m.clone();
            c.cs_budget = a.budget;
        }
        let out = run_experiment(&c)?;
        for f in &out.failures {
            eprintln!("{name}: trial {} failed at step {}: {}", f.trial, f.step, f.message);
        }
        outputs.push((name.clone(), out));
    }
    let mut at: Vec<usize> = outputs.iter().flat_map(|(_, o)| sample_counts(&o.rows)).collect();
    at.sort_unstable();
    at.dedup();
    let metric = Metric::error(a.common.norm.into());
    let mut w = sink(&a.common.out)?;
    match OutputFormat::from(a.common.format) {
        OutputFormat::Csv => {
            writeln!(w, "method,m,trials,error_mean,error_lower,error_upper,cond_mean")?;
            for (name, out) in &outputs {
                let err = curve(&out.rows, metric, &at);
                let cond = curve(&out.rows, Metric::Cond, &at);
                for (e, c) in err.iter().zip(&cond) {
                    writeln!(
                        w,
                        "{name},{},{},{},{},{},{}",
                        e.m, e.trials, e.stats.mean, e.stats.lower, e.stats.upper, c.stats.mean
                    )?;
                }
            }
        }
        OutputFormat::Json => {
            let v: Vec<serde_json::Value> = outputs
                .iter()
                .map(|(name, out)| {
                    serde_json::json!({
                        "method": name,
                        "config": out.config,
                        "error": curve(&out.rows, metric, &at),
                        "cond": curve(&out.rows, Metric::Cond, &at),
                    })
                })
                .collect();
            serde_json::to_writer_pretty(&mut w, &v).map_err(Error::from)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    if outputs.iter().all(|(_, o)| o.all_trials_failed()) {
        return Err(Failure::AllTrials);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Als(a) => run_als(a),
        Command::Cs(a) => run_cs(a),
        Command::KappaScan(a) => run_kappa(a),
        Command::BestNTerm(a) => run_best(a),
        Command::Compare(a) => run_compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::AllTrials) => {
            eprintln!("error: every trial failed");
            ExitCode::from(EXIT_ALL_FAILED)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { EXIT_CONFIG } else { 1 })
        }
    }
}
