use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pfsprior::harness::{self, ExperimentConfig};
use pfsprior::simdata::{self, CoefficientScheme, DatasetMeta};
use pfsprior::{Error, PriorFamily};

const PRIOR_HELP: &str = "Prior descriptors have the form name[:key=value,...]:
  php:alpha=A            Path-Holm, alpha in (0,1)
  shp:phi=F,theta=T      Subset-Holm, phi, theta > 0
  md:omega=W             matryoshka doll, omega > 0
  bb:a=A,b=B             Beta-Binomial(a, b)
  sbb:a=A,lambda=L       Beta-Binomial(a, lambda*p)
  pow:s=S                pi(k|p) ~ (1+k)^-s, s >= 1 (s=1 harmonic)
  cmg:mu=M,var=V         pi(k|p) ~ E[Y^2k]/k!, Y ~ Normal(M, V)
Omitted keys take defaults (php 0.5; shp 1,1; md 1; bb 1,1; sbb 1,1; pow 1; cmg 0.5,0.25).
Repeat --prior to pass several.";

#[derive(Parser)]
#[command(name = "pfsprior", version, about = "Model-space priors, Bayes factors and model-space MCMC", after_help = PRIOR_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Log size prior and children-set ratio for k = 0..p, as CSV.
    PriorTable {
        #[arg(long = "prior", value_name = "DESCRIPTOR")]
        priors: Vec<String>,
        #[arg(short, long, default_value_t = 20)]
        p: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Generate a synthetic dataset (CSV plus JSON sidecar).
    Generate {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        p: usize,
        #[arg(long = "p-true", default_value_t = 5)]
        p_true: usize,
        #[arg(long, default_value_t = 4.0)]
        snr: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value = "equal")]
        coefficients: Scheme,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// One chain per prior on one dataset; JSON report.
    Run {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Use a dataset written by `generate` instead of simulating one.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Replicated sweep: one CSV row per (replication, prior).
    Replicate {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Where to write per-chain wall times (defaults next to --output).
        #[arg(long)]
        timing: Option<PathBuf>,
    },
    /// Per-prior quartiles of replicate metrics, as JSON.
    Summarize {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Scheme {
    Equal,
    RandomSign,
}

impl From<Scheme> for CoefficientScheme {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::Equal => CoefficientScheme::Equal,
            Scheme::RandomSign => CoefficientScheme::RandomSign,
        }
    }
}

/// Flags override values loaded from `--config`, which override defaults.
#[derive(Args)]
struct ExperimentArgs {
    /// JSON file with any subset of the experiment fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long = "p-true")]
    p_true: Option<usize>,
    #[arg(long)]
    snr: Option<f64>,
    #[arg(long = "prior", value_name = "DESCRIPTOR")]
    priors: Vec<String>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long = "burn-in")]
    burn_in: Option<usize>,
    /// Flip, swap and same-size replacement weights, e.g. 1,1,1.
    #[arg(long = "kernel-weights", value_delimiter = ',', num_args = 3)]
    kernel_weights: Option<Vec<f64>>,
    #[arg(long = "base-seed")]
    base_seed: Option<u64>,
    #[arg(long, value_enum)]
    coefficients: Option<Scheme>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

impl ExperimentArgs {
    fn resolve(self) -> Result<ExperimentConfig, Error> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::from_json_file(path)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field { c.$field = v; }
            )*};
        }
        set!(n, p, p_true, snr, replications, draws, base_seed, jobs);
        if self.burn_in.is_some() {
            c.burn_in = self.burn_in;
        }
        if let Some(w) = self.kernel_weights {
            c.kernel_weights = [w[0], w[1], w[2]];
        }
        if let Some(s) = self.coefficients {
            c.coefficients = s.into();
        }
        if !self.priors.is_empty() {
            c.priors = self.priors;
        }
        if self.output.is_some() {
            c.output = self.output;
        }
        Ok(c)
    }
}

fn emit(text: &str, output: Option<&Path>) -> Result<(), Error> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| Error::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::PriorTable { priors, p, output } => {
            let families: Vec<PriorFamily> = if priors.is_empty() {
                harness::default_priors()
            } else {
                harness::parse_priors(&priors)?
            };
            emit(&harness::prior_table_csv(&families, p)?, output.as_deref())
        }
        Command::Generate {
            n,
            p,
            p_true,
            snr,
            seed,
            coefficients,
            output,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data = simdata::generate_dataset(n, p, p_true, snr, coefficients.into(), &mut rng)?;
            let mut meta = DatasetMeta::of(&data);
            meta.snr = Some(snr);
            meta.seed = Some(seed);
            simdata::write_dataset(&data, &meta, &output)
        }
        Command::Run { exp, data, seed } => {
            let config = exp.resolve()?;
            config.prior_families()?;
            let seed = seed.unwrap_or(config.base_seed);
            let dataset = match &data {
                Some(path) => simdata::read_dataset(path)?.0,
                None => config.dataset(seed)?,
            };
            let reports = harness::run_experiment(&config, &dataset, seed)?;
            let mut text = serde_json::to_string_pretty(&reports).expect("report serializes");
            text.push('\n');
            emit(&text, config.output.as_deref())
        }
        Command::Replicate { exp, timing } => {
            let config = exp.resolve()?;
            config.prior_families()?;
            let (rows, timings) = harness::replicate(&config)?;
            emit(&harness::replicate_csv(&rows), config.output.as_deref())?;
            let timing_path = timing.or_else(|| {
                config
                    .output
                    .as_ref()
                    .map(|o| o.with_extension("timing.csv"))
            });
            match timing_path {
                Some(path) => emit(&harness::timing_csv(&timings), Some(&path)),
                None => {
                    let total: f64 = timings.iter().map(|t| t.wall_time_s).sum();
                    eprintln!("{} chains, {total:.2} s total chain time", timings.len());
                    Ok(())
                }
            }
        }
        Command::Summarize { inputs, output } => {
            let summaries = harness::summarize_files(&inputs)?;
            emit(&harness::summary_json(&summaries), output.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Descriptor(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
