use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use inno_ssl::harness::{
    self, default_data_dir, Arm, DatasetSpec, ExperimentConfig, Method, ResultRow, StopRule, STANDARD_ARMS,
};
use inno_ssl::{Error, Result, StopParameter, VarianceDivisor};

#[derive(Parser)]
#[command(
    name = "inno-bench",
    about = "Label-imbalance sweeps for graph-based semi-supervised learning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Accuracy across the dataset's labeled-count imbalance schedule.
    SweepImbalance(Common),
    /// Accuracy across neighbor counts at fixed labeled counts.
    SweepK {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,5,10,20,40")]
        k_values: Vec<usize>,
    },
    /// Accuracy across INNO stop parameters at fixed labeled counts.
    SweepS {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "9.5,8,6,4,2,1,0")]
        s_values: Vec<f64>,
    },
    /// Imbalance sweep on a synthetic two-moons instance.
    DemoTwoMoons {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        n_per_class: usize,
        #[arg(long, default_value_t = 0.03)]
        noise: f64,
        #[arg(long, default_value_t = 7)]
        moons_seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetArg {
    Iris,
    Ionosphere,
    Mnist5,
    Mnist10,
    TwoMoons,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum MethodArg {
    All,
    Gfhf,
    Lgc,
    #[value(name = "gfhf+cmn")]
    GfhfCmn,
}

#[derive(Clone, Copy, ValueEnum)]
enum DivisorArg {
    #[value(name = "c-1")]
    ClassesMinusOne,
    #[value(name = "c")]
    Classes,
}

#[derive(Args)]
struct Common {
    #[arg(long, value_enum, default_value = "iris")]
    dataset: DatasetArg,
    /// Directory containing the dataset files.
    #[arg(long)]
    data_path: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "all")]
    method: MethodArg,
    /// Put INNO in front of a single `--method`.
    #[arg(long, conflicts_with = "no_inno")]
    inno: bool,
    #[arg(long)]
    no_inno: bool,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 0.99)]
    alpha: f64,
    /// INNO stop parameter, or `match-ratio` for the dataset class ratio.
    #[arg(long, default_value = "0")]
    stop_s: String,
    #[arg(long, default_value_t = 50)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "c-1")]
    var_divisor: DivisorArg,
    /// Fixed labeled counts per class, comma separated.
    #[arg(long, value_delimiter = ',')]
    counts: Option<Vec<usize>>,
    /// Report zero runtimes so repeated runs are byte-identical.
    #[arg(long)]
    no_timing: bool,
    /// Write the kNN graph as `i j w` lines.
    #[arg(long)]
    export_graph: Option<PathBuf>,
}

impl Common {
    fn config(&self, dataset: DatasetSpec) -> Result<ExperimentConfig> {
        let mut config = ExperimentConfig::new(dataset);
        if let Some(dir) = &self.data_path {
            config.data_dir = dir.clone();
        } else {
            config.data_dir = default_data_dir();
        }
        config.arms = match self.method {
            MethodArg::All => {
                if self.inno || self.no_inno {
                    return Err(Error::Config("--inno/--no-inno need a single --method".into()));
                }
                STANDARD_ARMS.to_vec()
            }
            m => {
                let method = match m {
                    MethodArg::Gfhf => Method::Gfhf,
                    MethodArg::Lgc => Method::Lgc,
                    _ => Method::GfhfCmn,
                };
                vec![Arm {
                    method,
                    inno: self.inno,
                }]
            }
        };
        if let Some(k) = self.k {
            config.k = k;
        }
        if let Some(sigma) = self.sigma {
            config.sigma = sigma;
        }
        config.alpha = self.alpha;
        config.stop = if self.stop_s == "match-ratio" {
            StopRule::MatchClassRatio
        } else {
            let s: f64 = self.stop_s.parse().map_err(|_| {
                Error::Config(format!(
                    "--stop-s: expected a number or match-ratio, got {}",
                    self.stop_s
                ))
            })?;
            StopRule::Fixed(StopParameter::new(s)?)
        };
        config.runs = self.runs;
        config.base_seed = self.seed;
        config.divisor = match self.var_divisor {
            DivisorArg::ClassesMinusOne => VarianceDivisor::ClassesMinusOne,
            DivisorArg::Classes => VarianceDivisor::Classes,
        };
        config.counts = self.counts.clone();
        config.record_timing = !self.no_timing;
        config.validate()?;
        Ok(config)
    }

    fn dataset(&self) -> DatasetSpec {
        match self.dataset {
            DatasetArg::Iris => DatasetSpec::Iris,
            DatasetArg::Ionosphere => DatasetSpec::Ionosphere,
            DatasetArg::Mnist5 => DatasetSpec::Mnist5,
            DatasetArg::Mnist10 => DatasetSpec::Mnist10,
            DatasetArg::TwoMoons => DatasetSpec::TWO_MOONS_DEFAULT,
        }
    }

    fn export_graph(&self, config: &ExperimentConfig) -> Result<()> {
        if let Some(path) = &self.export_graph {
            let dataset = config.dataset.load(&config.data_dir, config.base_seed)?;
            let graph = inno_ssl::build_knn_graph(dataset.features(), dataset.dim(), config.k, config.sigma)?;
            graph.write_coo(path)?;
        }
        Ok(())
    }

    fn emit(&self, rows: &[ResultRow]) -> Result<()> {
        match &self.out {
            Some(path) => harness::emit_csv(rows, path),
            None => {
                let stdout = std::io::stdout();
                let mut lock = stdout.lock();
                harness::write_csv(rows, &mut lock)
                    .and_then(|_| lock.flush())
                    .map_err(|e| Error::io("<stdout>", e))
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SweepImbalance(common) => {
            let config = common.config(common.dataset())?;
            common.export_graph(&config)?;
            common.emit(&harness::sweep_imbalance(&config)?)
        }
        Command::SweepK { common, k_values } => {
            let config = common.config(common.dataset())?;
            common.export_graph(&config)?;
            common.emit(&harness::sweep_k(&config, &k_values)?)
        }
        Command::SweepS { common, s_values } => {
            let config = common.config(common.dataset())?;
            common.export_graph(&config)?;
            common.emit(&harness::sweep_s(&config, &s_values)?)
        }
        Command::DemoTwoMoons {
            common,
            n_per_class,
            noise,
            moons_seed,
        } => {
            let config = common.config(DatasetSpec::TwoMoons {
                n_per_class,
                noise,
                seed: moons_seed,
            })?;
            common.export_graph(&config)?;
            common.emit(&harness::sweep_imbalance(&config)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
