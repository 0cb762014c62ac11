//! `ldpcount`: exact counts, private estimates and attack curves as CSV.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::ExperimentConfig;

const DEFAULT_SEED: u64 = 1;

#[derive(Parser, Debug)]
#[command(name = "ldpcount", version, about = "Subgraph counting under edge local differential privacy")]
struct Cli {
    /// Base seed, 1 when neither this nor `seed =` is given; every CSV
    /// row echoes it.
    #[arg(long, global = true, env = "LDPCOUNT_SEED")]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact count of a subgraph pattern in an edge list.
    CountExact {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = KindArg::Triangle)]
        kind: KindArg,
    },
    /// Trial batches per estimator, mechanism and budget.
    Estimate(RunArgs),
    /// The four ablation stages of each two-round estimator.
    StageSweep(RunArgs),
    /// Triangles, quadrangles and 2-stars from one shared run.
    Joint {
        #[command(flatten)]
        run: RunArgs,
        /// Budget of the quadrangle upload.
        #[arg(long)]
        eps3: Option<String>,
        /// Triangle estimator riding on the shared download.
        #[arg(long, value_enum, default_value_t = JointStyle::Modified)]
        triangle: JointStyle,
    },
    /// Inference attack trade-offs, confusion matrices and variances.
    Attack(AttackArgs),
    /// Per-user download volume of each estimator.
    Cost(RunArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum KindArg {
    Triangle,
    Quadrangle,
    #[value(name = "2star")]
    TwoStar,
    All,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum JointStyle {
    Modified,
    PairSum,
}

/// Flags shared by the experiment commands. Each one overrides the
/// matching key of `--config`.
#[derive(Args, Debug, Default)]
struct RunArgs {
    /// Edge list; same as `dataset =` in the config file.
    dataset: Option<PathBuf>,
    /// Flat `key = value` file applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    dump_config: bool,
    /// Comma-separated estimators or `all`.
    #[arg(long)]
    estimators: Option<String>,
    /// `rr`, `laplace` or `both`.
    #[arg(long)]
    mechanism: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<String>,
    /// Fractions for projection, first and second round.
    #[arg(long)]
    split: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    trials: Option<String>,
    /// 1, 2, 3 or 4.
    #[arg(long)]
    stage: Option<String>,
    /// `lo:hi:points`.
    #[arg(long)]
    eps_grid: Option<String>,
    /// Sweep the default 12-point budget grid.
    #[arg(long)]
    figure: bool,
    /// Directory for one CSV per estimator; stdout otherwise.
    #[arg(long)]
    output: Option<PathBuf>,
    /// `naive`, `blocked` or `blocked:<size>`.
    #[arg(long)]
    matmul: Option<String>,
    /// Fill the `seconds` column.
    #[arg(long)]
    timing: bool,
    /// Allow dense matrices for graphs above the size guard.
    #[arg(long)]
    large: bool,
    /// Clip negative estimates to zero.
    #[arg(long)]
    nonneg: bool,
}

#[derive(Args, Debug)]
struct AttackArgs {
    /// Budgets: a comma list or `lo:hi:points`.
    #[arg(long, default_value = "0.1:2:20")]
    eps: String,
    /// Edge priors for the confusion matrices.
    #[arg(long, default_value = "0.001,0.01,0.1")]
    p: String,
    /// Points per trade-off curve.
    #[arg(long, default_value_t = 101)]
    resolution: usize,
    /// Monte-Carlo draws per confusion row; 0 skips the check columns.
    #[arg(long, default_value_t = 0)]
    draws: usize,
    #[arg(long, value_enum, default_value_t = Series::All)]
    series: Series,
    /// Directory for `tradeoff.csv`, `confusion.csv` and `variance.csv`.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Series {
    Tradeoff,
    Confusion,
    Variance,
    All,
}

impl RunArgs {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut push = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k, v));
            }
        };
        push("dataset", self.dataset.as_ref().map(|p| p.display().to_string()));
        push("estimators", self.estimators.clone());
        push("mechanism", self.mechanism.clone());
        push("epsilon", self.epsilon.clone());
        push("split", self.split.clone());
        push("alpha", self.alpha.clone());
        push("beta", self.beta.clone());
        push("trials", self.trials.clone());
        push("stage", self.stage.clone());
        push("eps_grid", self.eps_grid.clone());
        push("output", self.output.as_ref().map(|p| p.display().to_string()));
        push("matmul", self.matmul.clone());
        for (k, on) in [
            ("figure", self.figure),
            ("timing", self.timing),
            ("large", self.large),
            ("nonneg", self.nonneg),
        ] {
            if on {
                push(k, Some("true".into()));
            }
        }
        out
    }

    /// Defaults, then the config file, then the flags; every problem is
    /// reported together.
    fn resolve(&self, seed: Option<u64>, extra: &[(&'static str, String)]) -> Result<ExperimentConfig, Failure> {
        let mut cfg = ExperimentConfig::new(DEFAULT_SEED);
        let mut errors = Vec::new();
        if let Some(path) = &self.config {
            match std::fs::read_to_string(path) {
                Ok(text) => errors.extend(
                    cfg.apply_text(&text)
                        .into_iter()
                        .map(|e| format!("{}: {e}", path.display())),
                ),
                Err(e) => errors.push(format!("{}: {e}", path.display())),
            }
        }
        if let Some(seed) = seed {
            cfg.seed = seed;
        }
        for (k, v) in self.overrides().iter().chain(extra) {
            if let Err(e) = cfg.set(k, v) {
                errors.push(format!("flag {e}"));
            }
        }
        errors.extend(cfg.validate(!self.dump_config));
        if errors.is_empty() {
            Ok(cfg)
        } else {
            Err(Failure::Usage(errors))
        }
    }
}

/// Exit 2 for usage, configuration and missing input; 1 for anything that
/// goes wrong while running.
#[derive(Debug)]
pub enum Failure {
    Usage(Vec<String>),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<ldpcount::Error> for Failure {
    fn from(e: ldpcount::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let seed = cli.seed;
    match cli.command {
        Command::CountExact { path, kind } => {
            let kinds = match kind {
                KindArg::Triangle => vec![ldpcount::SubgraphKind::Triangle],
                KindArg::Quadrangle => vec![ldpcount::SubgraphKind::Quadrangle],
                KindArg::TwoStar => vec![ldpcount::SubgraphKind::TwoStar],
                KindArg::All => ldpcount::SubgraphKind::ALL.to_vec(),
            };
            commands::count_exact(&path, &kinds)
        }
        Command::Estimate(args) => with_config(&args, seed, &[], commands::estimate),
        Command::StageSweep(args) => {
            let extra = if args.estimators.is_none() {
                vec![("estimators", "tritr,trimtr,quatr".to_string())]
            } else {
                Vec::new()
            };
            with_config(&args, seed, &extra, commands::stage_sweep)
        }
        Command::Joint { run, eps3, triangle } => {
            let extra: Vec<_> = eps3.into_iter().map(|v| ("eps3", v)).collect();
            let style = match triangle {
                JointStyle::Modified => ldpcount::estimators::JointTriangle::Modified,
                JointStyle::PairSum => ldpcount::estimators::JointTriangle::PairSum,
            };
            with_config(&run, seed, &extra, |cfg| commands::joint(cfg, style))
        }
        Command::Attack(args) => {
            let plan = commands::AttackPlan::parse(
                seed.unwrap_or(DEFAULT_SEED),
                &args.eps,
                &args.p,
                args.resolution,
                args.draws,
                args.output,
                match args.series {
                    Series::Tradeoff => commands::AttackSeries::Tradeoff,
                    Series::Confusion => commands::AttackSeries::Confusion,
                    Series::Variance => commands::AttackSeries::Variance,
                    Series::All => commands::AttackSeries::All,
                },
            )
            .map_err(Failure::Usage)?;
            commands::attack(&plan)
        }
        Command::Cost(args) => with_config(&args, seed, &[], commands::cost),
    }
}

fn with_config(
    args: &RunArgs,
    seed: Option<u64>,
    extra: &[(&'static str, String)],
    body: impl FnOnce(&ExperimentConfig) -> Result<(), Failure>,
) -> Result<(), Failure> {
    let cfg = args.resolve(seed, extra)?;
    if args.dump_config {
        print!("{}", cfg.to_text());
        return Ok(());
    }
    body(&cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(errors)) => {
            for e in errors {
                eprintln!("error: {e}");
            }
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
