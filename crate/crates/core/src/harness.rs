//! Experiment commands: prior tables, single runs, replicated sweeps and
//! their summaries. The binary is a thin argument parser over these.

use std::collections::HashMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::marginal::Dataset;
use crate::prior::PriorFamily;
use crate::sampler::{run_chain, summarize, ChainConfig};
use crate::simdata::{generate_dataset, CoefficientScheme};

/// Prior set shown in the size-prior and children-ratio comparison.
pub const DEFAULT_PRIORS: [&str; 9] = [
    "php:alpha=0.5",
    "shp:phi=1,theta=1",
    "md:omega=1",
    "bb:a=1,b=1",
    "bb:a=1,b=2",
    "sbb:a=1,lambda=1",
    "pow:s=1",
    "pow:s=2",
    "cmg:mu=0.5,var=0.25",
];

pub fn parse_priors<S: AsRef<str>>(descriptors: &[S]) -> Result<Vec<PriorFamily>> {
    descriptors.iter().map(|d| d.as_ref().parse()).collect()
}

pub fn default_priors() -> Vec<PriorFamily> {
    parse_priors(&DEFAULT_PRIORS).expect("built-in descriptors parse")
}

fn csv_string(rows: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    rows(&mut w).expect("in-memory CSV write");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8")
}

/// One row of the prior table.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorTableRow {
    pub prior: String,
    pub k: usize,
    pub log_pi: f64,
    /// `None` at `k = p`.
    pub ratio: Option<f64>,
}

pub fn prior_table(priors: &[PriorFamily], p: usize) -> Result<Vec<PriorTableRow>> {
    let mut rows = Vec::new();
    for prior in priors {
        let table = prior.log_size_table(p)?;
        let name = prior.to_string();
        for (k, &log_pi) in table.iter().enumerate() {
            let ratio = if k < p { Some(prior.children_ratio(k, p)?) } else { None };
            rows.push(PriorTableRow {
                prior: name.clone(),
                k,
                log_pi,
                ratio,
            });
        }
    }
    Ok(rows)
}

/// CSV with columns `prior,k,log_pi,ratio`; the ratio is blank at `k = p`.
pub fn prior_table_csv(priors: &[PriorFamily], p: usize) -> Result<String> {
    let rows = prior_table(priors, p)?;
    Ok(csv_string(|w| {
        w.write_record(["prior", "k", "log_pi", "ratio"])?;
        for r in &rows {
            let ratio = r.ratio.map(|v| v.to_string()).unwrap_or_default();
            w.write_record([r.prior.clone(), r.k.to_string(), r.log_pi.to_string(), ratio])?;
        }
        Ok(())
    }))
}

/// Settings for `run` and `replicate`. Every field has a default so that a
/// JSON config may set any subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub p: usize,
    pub p_true: usize,
    pub snr: f64,
    pub priors: Vec<String>,
    pub replications: usize,
    pub draws: usize,
    /// Defaults to 10% of `draws`.
    pub burn_in: Option<usize>,
    pub kernel_weights: [f64; 3],
    pub base_seed: u64,
    pub coefficients: CoefficientScheme,
    /// Worker threads; `0` means one per available core.
    pub jobs: usize,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 200,
            p: 100,
            p_true: 5,
            snr: 4.0,
            priors: DEFAULT_PRIORS.iter().map(|s| s.to_string()).collect(),
            replications: 10,
            draws: 200_000,
            burn_in: None,
            kernel_weights: [1.0 / 3.0; 3],
            base_seed: 1,
            coefficients: CoefficientScheme::Equal,
            jobs: 0,
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_reader(BufReader::new(file)).map_err(|source| Error::Json {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn prior_families(&self) -> Result<Vec<PriorFamily>> {
        if self.priors.is_empty() {
            return domain("at least one prior is required");
        }
        parse_priors(&self.priors)
    }

    /// Seed of replication `r`.
    pub fn seed(&self, replication: usize) -> u64 {
        self.base_seed.wrapping_add(replication as u64)
    }

    pub fn chain_config(&self, seed: u64, prior: &PriorFamily) -> ChainConfig {
        let mut c = ChainConfig::new(self.draws, seed);
        if let Some(b) = self.burn_in {
            c.burn_in = b;
        }
        c.kernel_weights = self.kernel_weights;
        c.stream = chain_stream(prior);
        c
    }

    pub fn dataset(&self, seed: u64) -> Result<Dataset> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        generate_dataset(self.n, self.p, self.p_true, self.snr, self.coefficients, &mut rng)
    }
}

/// ChaCha stream for a prior's chain. Stream 0 is reserved for data
/// generation; other streams come from an FNV-1a hash of the canonical
/// descriptor so that rows do not depend on the order of the prior list.
pub fn chain_stream(prior: &PriorFamily) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in prior.to_string().bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h.max(1)
}

/// One `replicate` output row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRow {
    pub replication: usize,
    pub prior: String,
    pub seed: u64,
    pub true_model_probability: f64,
    pub models_for_95: usize,
    pub true_inclusion_recall: f64,
}

pub const REPLICATE_HEADER: [&str; 6] = [
    "replication",
    "prior",
    "seed",
    "true_model_probability",
    "models_for_95",
    "true_inclusion_recall",
];

/// Wall time of one chain; kept apart from [`ReplicateRow`] so the main CSV
/// stays byte-identical across reruns.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainTiming {
    pub replication: usize,
    pub prior: String,
    pub wall_time_s: f64,
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Domain(format!("cannot start worker pool: {e}")))
}

/// Runs every (replication, prior) chain on a worker pool. Rows come back
/// in replication-major, prior-list order regardless of completion order.
pub fn replicate(config: &ExperimentConfig) -> Result<(Vec<ReplicateRow>, Vec<ChainTiming>)> {
    let priors = config.prior_families()?;
    if config.replications == 0 {
        return domain("replications must be >= 1");
    }
    pool(config.jobs)?.install(|| {
        let datasets: Vec<Dataset> = (0..config.replications)
            .into_par_iter()
            .map(|r| config.dataset(config.seed(r)))
            .collect::<Result<_>>()?;
        let tasks: Vec<(usize, usize)> = (0..config.replications)
            .flat_map(|r| (0..priors.len()).map(move |j| (r, j)))
            .collect();
        let results: Vec<(ReplicateRow, ChainTiming)> = tasks
            .into_par_iter()
            .map(|(r, j)| {
                let seed = config.seed(r);
                let prior = &priors[j];
                let data = &datasets[r];
                let start = Instant::now();
                let summary = run_chain(&config.chain_config(seed, prior), prior, data)?;
                let metrics = summarize(&summary, data.true_model());
                let name = prior.to_string();
                Ok((
                    ReplicateRow {
                        replication: r,
                        prior: name.clone(),
                        seed,
                        true_model_probability: metrics.true_model_probability,
                        models_for_95: metrics.models_for_95,
                        true_inclusion_recall: metrics.true_inclusion_recall,
                    },
                    ChainTiming {
                        replication: r,
                        prior: name,
                        wall_time_s: start.elapsed().as_secs_f64(),
                    },
                ))
            })
            .collect::<Result<_>>()?;
        Ok(results.into_iter().unzip())
    })
}

pub fn replicate_csv(rows: &[ReplicateRow]) -> String {
    csv_string(|w| {
        w.write_record(REPLICATE_HEADER)?;
        for r in rows {
            w.serialize(r)?;
        }
        Ok(())
    })
}

pub fn timing_csv(timings: &[ChainTiming]) -> String {
    csv_string(|w| {
        w.write_record(["replication", "prior", "wall_time_s"])?;
        for t in timings {
            w.write_record([t.replication.to_string(), t.prior.clone(), t.wall_time_s.to_string()])?;
        }
        Ok(())
    })
}

/// Parses `replicate` CSV text. `source` names the input in errors.
pub fn parse_replicate_csv(text: &str, source: &str) -> Result<Vec<ReplicateRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::Csv {
        path: source.to_string(),
        source: e,
    })?;
    if header.iter().ne(REPLICATE_HEADER) {
        return Err(Error::Parse {
            row: 1,
            msg: format!("{source}: expected header {}", REPLICATE_HEADER.join(",")),
        });
    }
    reader
        .deserialize()
        .enumerate()
        .map(|(pos, rec)| {
            rec.map_err(|e| Error::Parse {
                row: pos + 2,
                msg: format!("{source}: {e}"),
            })
        })
        .collect()
}

/// Lower quartile, median, upper quartile (linear interpolation between
/// order statistics).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Self {
            q1: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q3: quantile(&v, 0.75),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSummary {
    pub prior: String,
    pub replications: usize,
    pub true_model_probability: Quartiles,
    pub models_for_95: Quartiles,
}

/// Per-prior quartiles of both metrics, priors in order of first appearance.
pub fn summarize_rows(rows: &[ReplicateRow]) -> Vec<PriorSummary> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: HashMap<&str, Vec<&ReplicateRow>> = HashMap::new();
    for row in rows {
        groups
            .entry(row.prior.as_str())
            .or_insert_with(|| {
                order.push(row.prior.as_str());
                Vec::new()
            })
            .push(row);
    }
    order
        .into_iter()
        .map(|prior| {
            let group = &groups[prior];
            let tmp: Vec<f64> = group.iter().map(|r| r.true_model_probability).collect();
            let m95: Vec<f64> = group.iter().map(|r| r.models_for_95 as f64).collect();
            PriorSummary {
                prior: prior.to_string(),
                replications: group.len(),
                true_model_probability: Quartiles::of(&tmp),
                models_for_95: Quartiles::of(&m95),
            }
        })
        .collect()
}

/// Reads and merges `replicate` CSV files, then summarizes.
pub fn summarize_files(paths: &[PathBuf]) -> Result<Vec<PriorSummary>> {
    let mut rows = Vec::new();
    for path in paths {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        rows.extend(parse_replicate_csv(&text, &path.display().to_string())?);
    }
    if rows.is_empty() {
        return domain("no replicate rows to summarize");
    }
    Ok(summarize_rows(&rows))
}

pub fn summary_json(summaries: &[PriorSummary]) -> String {
    let mut s = serde_json::to_string_pretty(&serde_json::json!({ "priors": summaries }))
        .expect("summary serializes");
    s.push('\n');
    s
}

/// One prior's result in a single `run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub prior: String,
    pub seed: u64,
    pub true_model: Vec<usize>,
    pub true_model_probability: f64,
    pub models_for_95: usize,
    pub true_inclusion_recall: f64,
    pub acceptance_rate: f64,
    pub distinct_models: usize,
    pub inclusion_probabilities: Vec<f64>,
    pub top_models: Vec<TopModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopModel {
    pub model: Vec<usize>,
    pub probability: f64,
}

/// Runs one chain per prior on `data`, in parallel.
pub fn run_experiment(config: &ExperimentConfig, data: &Dataset, seed: u64) -> Result<Vec<RunReport>> {
    let priors = config.prior_families()?;
    pool(config.jobs)?.install(|| {
        priors
            .par_iter()
            .map(|prior| {
                let summary = run_chain(&config.chain_config(seed, prior), prior, data)?;
                let metrics = summarize(&summary, data.true_model());
                let mut ranked: Vec<_> = summary.counts().iter().collect();
                ranked.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
                let top_models = ranked
                    .iter()
                    .take(10)
                    .map(|(m, &c)| TopModel {
                        model: m.indices().to_vec(),
                        probability: c as f64 / summary.total() as f64,
                    })
                    .collect();
                Ok(RunReport {
                    prior: prior.to_string(),
                    seed,
                    true_model: data.true_model().indices().to_vec(),
                    true_model_probability: metrics.true_model_probability,
                    models_for_95: metrics.models_for_95,
                    true_inclusion_recall: metrics.true_inclusion_recall,
                    acceptance_rate: summary.accepted() as f64 / summary.total() as f64,
                    distinct_models: summary.counts().len(),
                    inclusion_probabilities: metrics.inclusion_probabilities,
                    top_models,
                })
            })
            .collect()
    })
}
