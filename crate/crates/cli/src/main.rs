use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fts_core::activation::{
    ActivationKind, ActivationSpec, DEFAULT_BETA, DEFAULT_ELU_ALPHA, DEFAULT_FRELU_B,
    DEFAULT_LRELU_ALPHA, DEFAULT_T,
};
use fts_core::experiment::{
    self, emit_report, emit_summary, load_results, parse_arch_list, run_training,
    run_training_cached, seed_list, t_grid, ArchId, ExperimentConfig, SweepConfig, DEFAULT_SEEDS,
    PAPER_SEEDS, REPORT_MD,
};
use fts_core::gradcheck::{activation_suite, network_suite};
use fts_core::mnist::{load_mnist, resolve_data_dir, verify_dir};
use fts_core::{Dataset, Error, TrainConfig};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_FAILED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "fts-lab",
    version,
    about = "Train and compare dense MNIST networks across hidden activations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one (architecture, activation) cell over several seeds.
    Train(TrainArgs),
    /// Run every comparator and a grid of FTS thresholds over the given architectures.
    Sweep(SweepArgs),
    /// Compare every analytic derivative against central differences.
    Gradcheck,
    /// Rebuild summary.csv and report.md from results.csv and curves.csv.
    Report {
        #[arg(long = "in", value_name = "DIR")]
        input: PathBuf,
    },
    /// Dataset utilities.
    Data {
        #[command(subcommand)]
        command: DataCommand,
    },
}

#[derive(Subcommand)]
enum DataCommand {
    /// Parse both MNIST splits and check their sizes and labels.
    Verify {
        #[arg(long, value_name = "DIR")]
        data_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Protocol {
    /// Epochs per run.
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    epochs: usize,
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    lr: f64,
    #[arg(long, default_value_t = TrainConfig::default().batch_size)]
    batch_size: usize,
    /// Dropout rate after each hidden activation.
    #[arg(long, default_value_t = TrainConfig::default().dropout_rate)]
    dropout: f64,
    #[arg(long, default_value_t = 0)]
    base_seed: u64,
    /// Only record the final test accuracy (no per-epoch curves).
    #[arg(long)]
    final_eval_only: bool,
    /// Train on the first N training images only.
    #[arg(long, value_name = "N")]
    train_limit: Option<usize>,
    #[arg(long, value_name = "DIR")]
    data_dir: Option<PathBuf>,
    /// Reuse finished cells stored here, and store new ones.
    #[arg(long, value_name = "DIR")]
    cache_dir: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

impl Protocol {
    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.lr,
            batch_size: self.batch_size,
            epochs: self.epochs,
            dropout_rate: self.dropout,
            seed: self.base_seed,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    arch: ArchId,
    #[arg(long)]
    activation: ActivationKind,
    /// FTS threshold.
    #[arg(long, allow_hyphen_values = true, default_value_t = DEFAULT_T)]
    t: f64,
    /// Leaky ReLU slope or ELU scale.
    #[arg(long)]
    alpha: Option<f64>,
    /// Swish slope.
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    /// FReLU bias.
    #[arg(long, allow_hyphen_values = true, default_value_t = DEFAULT_FRELU_B)]
    b: f64,
    /// Number of seeds.
    #[arg(long, default_value_t = DEFAULT_SEEDS)]
    seeds: usize,
    #[command(flatten)]
    protocol: Protocol,
}

impl TrainArgs {
    fn activation(&self) -> ActivationSpec {
        match self.activation {
            ActivationKind::Fts => ActivationSpec::fts(self.t),
            ActivationKind::LRelu => {
                ActivationSpec::lrelu(self.alpha.unwrap_or(DEFAULT_LRELU_ALPHA))
            }
            ActivationKind::Elu => ActivationSpec::elu(self.alpha.unwrap_or(DEFAULT_ELU_ALPHA)),
            ActivationKind::Swish => ActivationSpec::swish(self.beta),
            ActivationKind::FRelu => ActivationSpec::frelu(self.b),
            kind => ActivationSpec::new(kind),
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    /// `all` or a comma-separated list such as `dfnn-5,dfnn-8`.
    #[arg(long, default_value = "all")]
    archs: String,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    t_from: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = -0.40)]
    t_to: f64,
    #[arg(long, default_value_t = 0.05)]
    t_step: f64,
    /// Five seeds per cell instead of three.
    #[arg(long)]
    paper_scale: bool,
    /// Number of seeds (overrides --paper-scale).
    #[arg(long)]
    seeds: Option<usize>,
    #[command(flatten)]
    protocol: Protocol,
}

enum Failure {
    Usage(String),
    Data(Error),
    Check(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(msg) => Failure::Usage(msg),
            e if e.is_data_error() => Failure::Data(e),
            e => Failure::Runtime(e),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Data(e)) => {
            eprintln!("data error: {e}");
            ExitCode::from(EXIT_DATA)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(EXIT_FAILED)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Train(args) => train(&args),
        Command::Sweep(args) => sweep(&args),
        Command::Gradcheck => gradcheck(),
        Command::Report { input } => report(&input),
        Command::Data {
            command: DataCommand::Verify { data_dir },
        } => verify(data_dir.as_deref()),
    }
}

fn load_data(protocol: &Protocol) -> Result<(Dataset, Dataset), Failure> {
    let dir = resolve_data_dir(protocol.data_dir.as_deref())?;
    let (train, test) = load_mnist(&dir).map_err(Failure::Data)?;
    let train = match protocol.train_limit {
        Some(0) => return Err(Failure::Usage("--train-limit must be at least 1".into())),
        Some(n) => train.take(n),
        None => train,
    };
    Ok((train, test))
}

fn train(args: &TrainArgs) -> Result<(), Failure> {
    let p = &args.protocol;
    let mut config = ExperimentConfig::new(
        args.arch,
        args.activation(),
        p.train_config(),
        seed_list(p.base_seed, args.seeds),
    );
    config.eval_every_epoch = !p.final_eval_only;
    config.validate()?;
    let (train, test) = load_data(p)?;
    let results = match &p.cache_dir {
        Some(dir) => run_training_cached(&config, &train, &test, dir)?,
        None => run_training(&config, &train, &test)?,
    };
    emit_report(&results, &p.out)?;
    for r in &results {
        println!(
            "{} {} seed {}: test accuracy {:.4} ({})",
            r.activation,
            r.arch,
            r.seed,
            r.final_test_accuracy,
            r.status.as_str()
        );
    }
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<(), Failure> {
    let p = &args.protocol;
    let archs = parse_arch_list(&args.archs)?;
    let t_values = t_grid(args.t_from, args.t_to, args.t_step)?;
    let n_seeds = args.seeds.unwrap_or(if args.paper_scale {
        PAPER_SEEDS
    } else {
        DEFAULT_SEEDS
    });
    let base = SweepConfig {
        train: p.train_config(),
        seeds: seed_list(p.base_seed, n_seeds),
        eval_every_epoch: !p.final_eval_only,
    };
    experiment::sweep_cells(&archs, &t_values, &base)?;
    let (train, test) = load_data(p)?;
    let cache = p.cache_dir.clone().unwrap_or_else(|| p.out.join("cells"));
    let (_, results) = experiment::t_sweep(&archs, &t_values, &base, &train, &test, Some(&cache))?;
    emit_report(&results, &p.out)?;
    print_report(&p.out)
}

fn gradcheck() -> Result<(), Failure> {
    let mut failed = 0;
    for report in activation_suite()?.into_iter().chain(network_suite(0)?) {
        println!("{report}");
        if !report.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        return Err(Failure::Check(format!("{failed} gradient check(s) failed")));
    }
    Ok(())
}

fn report(dir: &Path) -> Result<(), Failure> {
    let results = load_results(dir)?;
    emit_summary(&results, dir)?;
    print_report(dir)
}

fn print_report(dir: &Path) -> Result<(), Failure> {
    let path = dir.join(REPORT_MD);
    let md = std::fs::read_to_string(&path)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    print!("{md}");
    Ok(())
}

fn verify(data_dir: Option<&Path>) -> Result<(), Failure> {
    let dir = resolve_data_dir(data_dir)?;
    let summaries = verify_dir(&dir).map_err(Failure::Data)?;
    let mut ok = true;
    for s in &summaries {
        let good = s.matches_official();
        ok &= good;
        println!(
            "{:?}: {} images of 28x28, class counts {:?} {}",
            s.split,
            s.count,
            s.histogram,
            if good { "ok" } else { "UNEXPECTED" }
        );
    }
    if !ok {
        return Err(Failure::Data(Error::InvalidArgument(
            "split sizes differ from MNIST".into(),
        )));
    }
    Ok(())
}
