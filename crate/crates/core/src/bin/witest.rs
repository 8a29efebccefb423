use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use wit_core::generators::{make_grid, random_distribution, random_graph_metric, random_points};
use wit_core::harness::{bench_scaling, calibrate_constants, derive_seed, run_trials, ExperimentConfig};
use wit_core::l1::{TesterKind, Verdict};
use wit_core::metric::{
    read_distribution_csv, read_points, read_space_csv, wasserstein_exact, write_distribution_csv, write_space_csv,
    Distribution, FiniteMetricSpace, PointMetric,
};
use wit_core::nets::NetHierarchy;
use wit_core::sampling::{ReplaySampler, SampleOracle, WeightedSampler};
use wit_core::tree::TreeEmbedding;
use wit_core::wit::{WitConfig, WitTester};
use wit_core::WitError;

#[derive(Parser)]
#[command(name = "witest", version, about = "Wasserstein identity testing over finite metric spaces")]
struct Cli {
    /// Master seed for all randomness.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// TOML experiment config (used by `test`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SpaceArgs {
    /// Distance matrix CSV.
    #[arg(long, conflicts_with = "points")]
    space: Option<PathBuf>,
    /// Coordinates CSV, one point per row.
    #[arg(long)]
    points: Option<PathBuf>,
    #[arg(long, default_value = "linf")]
    metric: PointMetric,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpaceKind {
    Grid,
    Random,
    Graph,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a space (distance matrix CSV) and optionally a distribution.
    GenSpace {
        #[arg(long, value_enum, default_value = "grid")]
        kind: SpaceKind,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 0.25)]
        h: f64,
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = 4.0)]
        spread: f64,
        #[arg(long, default_value = "linf")]
        metric: PointMetric,
        /// Also write a random distribution on the space here.
        #[arg(long)]
        dist_out: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        density: f64,
    },
    /// Build and validate the net hierarchy; writes JSON.
    NetBuild {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long)]
        epsilon: f64,
    },
    /// Build the tree embedding; writes an indented text dump.
    Embed {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long)]
        epsilon: f64,
    },
    /// Exact W1 between two distributions; prints the cost, writes the plan.
    Wasserstein {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        q: PathBuf,
    },
    /// Run the identity tester.
    Test {
        #[arg(long, default_value = "worst")]
        mode: TesterKind,
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long)]
        p: Option<PathBuf>,
        /// Distribution to sample from.
        #[arg(long, conflicts_with = "samples")]
        q: Option<PathBuf>,
        /// Pre-drawn samples, one point index per line.
        #[arg(long)]
        samples: Option<PathBuf>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        budget_constant: Option<f64>,
        /// Persist calibration thresholds here.
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Budget formulas on hypercube grids and their log-log slopes (CSV).
    BenchScaling {
        #[arg(long, value_delimiter = ',', default_value = "2,4,6")]
        dims: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0.125,0.0625,0.03125,0.015625,0.0078125")]
        eps: Vec<f64>,
    },
    /// Sweep the budget constant on the held-out grid family (JSON).
    Calibrate {
        #[arg(long, value_delimiter = ',', default_value = "0.03125,0.0625,0.125,0.25,0.5,1")]
        candidates: Vec<f64>,
        #[arg(long, default_value_t = 200)]
        trials: u64,
    },
}

enum Failure {
    Usage(String),
    Internal(String),
}

impl From<WitError> for Failure {
    fn from(e: WitError) -> Self {
        match e {
            WitError::InvalidParameter(_)
            | WitError::Parse(_)
            | WitError::EpsilonOutOfRange { .. }
            | WitError::SizeMismatch { .. }
            | WitError::InvalidDistribution(_)
            | WitError::NotCertifiedFar { .. }
            | WitError::SamplerExhausted { .. }
            | WitError::InsufficientSamples { .. } => Failure::Usage(e.to_string()),
            WitError::Io(ref io) if io.kind() == io::ErrorKind::NotFound => Failure::Usage(e.to_string()),
            other => Failure::Internal(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        WitError::from(e).into()
    }
}

fn output(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn load_space(args: &SpaceArgs) -> Result<Arc<FiniteMetricSpace>, Failure> {
    match (&args.space, &args.points) {
        (Some(p), _) => Ok(Arc::new(read_space_csv(p)?)),
        (None, Some(p)) => Ok(Arc::new(read_points(p, args.metric)?)),
        (None, None) => Err(Failure::Usage("one of --space or --points is required".into())),
    }
}

fn read_samples(path: &Path) -> Result<Vec<usize>, Failure> {
    std::fs::read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.parse::<usize>().map_err(|e| Failure::Usage(format!("sample '{l}': {e}"))))
        .collect()
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    match cli.command {
        Command::GenSpace { kind, dim, h, n, spread, metric, dist_out, density } => {
            let space = match kind {
                SpaceKind::Grid => make_grid(dim, h, metric)?.space().clone(),
                SpaceKind::Random => Arc::new(random_points(n, dim, metric, cli.seed)?),
                SpaceKind::Graph => Arc::new(random_graph_metric(n, spread, cli.seed)?),
            };
            let mut out = output(&cli.out)?;
            write_space_csv(&space, &mut out)?;
            out.flush()?;
            if let Some(path) = dist_out {
                let d = random_distribution(space, density, derive_seed(cli.seed, 1))?;
                write_distribution_csv(&d, BufWriter::new(File::create(path)?))?;
            }
        }
        Command::NetBuild { space, epsilon } => {
            let s = load_space(&space)?;
            let h = NetHierarchy::build(s, epsilon)?;
            if let Err((level, check)) = h.validate() {
                return Err(Failure::Internal(format!("level {level} failed validation: {check:?}")));
            }
            let mut out = output(&cli.out)?;
            serde_json::to_writer_pretty(&mut out, &h.to_document()).map_err(WitError::from)?;
            writeln!(out)?;
            out.flush()?;
        }
        Command::Embed { space, epsilon } => {
            let h = NetHierarchy::build(load_space(&space)?, epsilon)?;
            let mut out = output(&cli.out)?;
            TreeEmbedding::new(&h).write_text(&mut out)?;
            out.flush()?;
        }
        Command::Wasserstein { space, p, q } => {
            let s = load_space(&space)?;
            let p = read_distribution_csv(p, s.clone())?;
            let q = read_distribution_csv(q, s)?;
            let plan = wasserstein_exact(&p, &q)?;
            println!("{}", plan.cost);
            if let Some(path) = &cli.out {
                let mut w = csv::Writer::from_path(path).map_err(WitError::from)?;
                w.write_record(["from", "to", "mass"]).map_err(WitError::from)?;
                for &(a, b, m) in &plan.entries {
                    w.write_record([a.to_string(), b.to_string(), m.to_string()]).map_err(WitError::from)?;
                }
                w.flush()?;
            }
        }
        Command::Test { mode, space, p, q, samples, epsilon, budget_constant, cache } => {
            if let Some(path) = &cli.config {
                let mut cfg = ExperimentConfig::from_file(path)?;
                cfg.seed = if cli.seed != 0 { cli.seed } else { cfg.seed };
                if let Some(e) = epsilon {
                    cfg.epsilon = e;
                }
                let summary = run_trials(&cfg)?;
                let out_path = cli.out.clone().or(cfg.output.clone());
                let mut out = output(&out_path)?;
                summary.write_json(&mut out)?;
                writeln!(out)?;
                out.flush()?;
                eprintln!(
                    "{} trials: accept rate {:.3} [{:.3}, {:.3}]",
                    summary.trials, summary.accept_rate, summary.accept_ci.0, summary.accept_ci.1
                );
                return Ok(if summary.trials == 1 && summary.rejects == 1 { ExitCode::from(1) } else { ExitCode::SUCCESS });
            }
            let epsilon = epsilon.ok_or_else(|| Failure::Usage("--epsilon is required without --config".into()))?;
            let s = load_space(&space)?;
            let p = match p {
                Some(path) => read_distribution_csv(path, s.clone())?,
                None => Distribution::uniform(s.clone()),
            };
            let mut cfg = WitConfig::new(epsilon)?;
            if let Some(c) = budget_constant {
                cfg.budget_constant = c;
            }
            cfg.validate()?;
            let h = NetHierarchy::build(s.clone(), epsilon)?;
            let tree = TreeEmbedding::new(&h);
            let cache = match &cache {
                Some(path) => Arc::new(wit_core::l1::CalibrationCache::with_file(path)?),
                None => wit_core::l1::shared_cache(),
            };
            let tester = WitTester::with_cache(mode, &h, &tree, &p, &cfg, cache.clone())?;
            let mut sampler: Box<dyn SampleOracle> = match (q, samples) {
                (Some(path), None) => {
                    let q = read_distribution_csv(path, s)?;
                    Box::new(WeightedSampler::new(q.mass(), derive_seed(cli.seed, 0))?)
                }
                (None, Some(path)) => Box::new(ReplaySampler::new(read_samples(&path)?)),
                _ => return Err(Failure::Usage("one of --q or --samples is required".into())),
            };
            let mut report = tester.run(sampler.as_mut())?;
            report.seed = Some(cli.seed);
            cache.save()?;
            let mut out = output(&cli.out)?;
            serde_json::to_writer_pretty(&mut out, &report).map_err(WitError::from)?;
            writeln!(out)?;
            out.flush()?;
            eprintln!("verdict: {}", report.verdict);
            return Ok(if report.verdict == Verdict::Accept { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
        Command::BenchScaling { dims, eps } => {
            let r = bench_scaling(&dims, &eps)?;
            let mut out = output(&cli.out)?;
            r.write_csv(&mut out)?;
            out.flush()?;
            for f in &r.fits {
                eprintln!("d={} slope {:.3} target {}", f.dim, f.slope_worst, f.target);
            }
        }
        Command::Calibrate { candidates, trials } => {
            let r = calibrate_constants(&candidates, trials, cli.seed)?;
            let mut out = output(&cli.out)?;
            serde_json::to_writer_pretty(&mut out, &r).map_err(WitError::from)?;
            writeln!(out)?;
            out.flush()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(3)
        }
    }
}
