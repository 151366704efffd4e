//! Metropolis-Hastings over the model space.
//!
//! Three symmetric proposal kernels are mixed i.i.d. per step: flipping one
//! inclusion indicator, swapping an included index for an excluded one, and
//! redrawing a uniformly random model of the current size. The target is the
//! model posterior `P(A|y) ∝ BF(A) P(A|p)` with Zellner-Siow Bayes factors.

use std::collections::{BTreeMap, HashMap};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::marginal::{fit_stats, log_bf_zellner_siow, Dataset};
use crate::model::Model;
use crate::numeric::{ln_choose, normalize_log};
use crate::prior::PriorFamily;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    /// Toggle the indicator of one uniformly chosen index.
    Flip,
    /// Exchange one included and one excluded index.
    Swap,
    /// Draw a fresh uniform model of the same size.
    ReplaceSameSize,
}

pub const KERNELS: [Kernel; 3] = [Kernel::Flip, Kernel::Swap, Kernel::ReplaceSameSize];

/// A proposed move and its log proposal ratio `ln q(A|A') − ln q(A'|A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub candidate: Model,
    pub log_q_ratio: f64,
}

/// Draws a candidate from `current` with the given kernel. All three
/// kernels are symmetric, so `log_q_ratio` is always zero; at `k ∈ {0, p}`
/// the swap kernel returns `current` unchanged.
pub fn propose<R: Rng + ?Sized>(kernel: Kernel, current: &Model, rng: &mut R) -> Proposal {
    let p = current.p();
    let k = current.size();
    let candidate = match kernel {
        Kernel::Flip => current.toggled(rng.random_range(1..=p)),
        Kernel::Swap => {
            if k == 0 || k == p {
                current.clone()
            } else {
                let out = current.indices()[rng.random_range(0..k)];
                // The r-th excluded index, counting in increasing order.
                let mut r = rng.random_range(0..p - k);
                let mut into = 0;
                for j in 1..=p {
                    if !current.contains(j) {
                        if r == 0 {
                            into = j;
                            break;
                        }
                        r -= 1;
                    }
                }
                current.swapped(out, into)
            }
        }
        Kernel::ReplaceSameSize => {
            let mut chosen: Vec<usize> = index::sample(rng, p, k).into_iter().map(|j| j + 1).collect();
            chosen.sort_unstable();
            Model::from_sorted_unchecked(chosen, p)
        }
    };
    Proposal {
        candidate,
        log_q_ratio: 0.0,
    }
}

/// What the chain targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    #[default]
    Posterior,
    /// Bayes factors forced to one; the chain samples the model prior.
    PriorOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    /// Total iterations, burn-in included.
    pub draws: usize,
    pub burn_in: usize,
    /// Mixture weights for flip, swap and same-size replacement.
    pub kernel_weights: [f64; 3],
    pub seed: u64,
    /// ChaCha stream index; lets callers derive independent chains from one seed.
    pub stream: u64,
    pub initial_model: Option<Model>,
    pub target: Target,
    pub cache: bool,
}

impl ChainConfig {
    /// Defaults: 10% burn-in, equal kernel weights, start at the empty model.
    pub fn new(draws: usize, seed: u64) -> Self {
        Self {
            draws,
            burn_in: draws / 10,
            kernel_weights: [1.0 / 3.0; 3],
            seed,
            stream: 0,
            initial_model: None,
            target: Target::Posterior,
            cache: true,
        }
    }

    fn normalized_weights(&self) -> Result<[f64; 3]> {
        let w = self.kernel_weights;
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return domain(format!("kernel weights must be finite and >= 0, got {w:?}"));
        }
        let total: f64 = w.iter().sum();
        if total <= 0.0 {
            return domain("kernel weights must not all be zero");
        }
        Ok([w[0] / total, w[1] / total, w[2] / total])
    }

    fn validate(&self) -> Result<()> {
        if self.draws <= self.burn_in {
            return domain(format!(
                "draws ({}) must exceed burn-in ({})",
                self.draws, self.burn_in
            ));
        }
        self.normalized_weights().map(|_| ())
    }
}

/// Per-model quantities entering the acceptance ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Evaluation {
    /// `+inf` marks a saturated fit.
    log_bf: f64,
    log_prior: f64,
}

/// A single Metropolis-Hastings chain bound to one prior and one dataset.
pub struct Chain<'a> {
    data: &'a Dataset,
    log_size: Vec<f64>,
    log_choose: Vec<f64>,
    target: Target,
    cache: Option<HashMap<Model, f64>>,
    current: Model,
    current_eval: Evaluation,
    fits: u64,
}

/// Result of one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub kernel: Kernel,
    pub accepted: bool,
}

impl<'a> Chain<'a> {
    pub fn new(
        prior: &PriorFamily,
        data: &'a Dataset,
        initial: Model,
        target: Target,
        cache: bool,
    ) -> Result<Self> {
        let p = data.p();
        if initial.p() != p {
            return domain("initial model dimension does not match the dataset");
        }
        let log_size = prior.log_size_table(p)?;
        let log_choose = (0..=p).map(|k| ln_choose(p, k)).collect();
        let mut chain = Self {
            data,
            log_size,
            log_choose,
            target,
            cache: cache.then(HashMap::new),
            current_eval: Evaluation {
                log_bf: 0.0,
                log_prior: 0.0,
            },
            current: initial.clone(),
            fits: 0,
        };
        chain.current_eval = chain.evaluate(&initial)?;
        Ok(chain)
    }

    pub fn current(&self) -> &Model {
        &self.current
    }

    /// Number of least-squares fits performed (cache misses).
    pub fn fits(&self) -> u64 {
        self.fits
    }

    fn log_bf(&mut self, model: &Model) -> Result<f64> {
        if self.target == Target::PriorOnly {
            return Ok(0.0);
        }
        if let Some(hit) = self.cache.as_ref().and_then(|c| c.get(model)) {
            return Ok(*hit);
        }
        self.fits += 1;
        let value = model_log_bf(self.data, model)?;
        if let Some(c) = self.cache.as_mut() {
            c.insert(model.clone(), value);
        }
        Ok(value)
    }

    fn evaluate(&mut self, model: &Model) -> Result<Evaluation> {
        let k = model.size();
        Ok(Evaluation {
            log_bf: self.log_bf(model)?,
            log_prior: self.log_size[k] - self.log_choose[k],
        })
    }

    /// Log acceptance ratio, following the saturated-fit convention: two
    /// saturated models compare by prior only, a move into saturation is
    /// always accepted and a move out of it always rejected.
    fn log_accept(current: Evaluation, candidate: Evaluation, log_q_ratio: f64) -> f64 {
        if candidate.log_prior == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        if current.log_prior == f64::NEG_INFINITY {
            return 0.0;
        }
        let prior = candidate.log_prior - current.log_prior + log_q_ratio;
        match (current.log_bf.is_infinite(), candidate.log_bf.is_infinite()) {
            (false, false) => candidate.log_bf - current.log_bf + prior,
            (true, true) => prior,
            (false, true) => 0.0,
            (true, false) => f64::NEG_INFINITY,
        }
    }

    /// One Metropolis-Hastings update with an explicit kernel.
    pub fn step_with<R: Rng + ?Sized>(&mut self, kernel: Kernel, rng: &mut R) -> Result<StepOutcome> {
        let Proposal {
            candidate,
            log_q_ratio,
        } = propose(kernel, &self.current, rng);
        if candidate == self.current {
            return Ok(StepOutcome {
                kernel,
                accepted: true,
            });
        }
        let cand_eval = self.evaluate(&candidate)?;
        let log_a = Self::log_accept(self.current_eval, cand_eval, log_q_ratio);
        let accepted = log_a >= 0.0 || rng.random::<f64>().ln() < log_a;
        if accepted {
            self.current = candidate;
            self.current_eval = cand_eval;
        }
        Ok(StepOutcome { kernel, accepted })
    }

    /// One update with the kernel drawn from normalized `weights`.
    pub fn step<R: Rng + ?Sized>(&mut self, weights: &[f64; 3], rng: &mut R) -> Result<StepOutcome> {
        let u: f64 = rng.random();
        let kernel = if u < weights[0] {
            Kernel::Flip
        } else if u < weights[0] + weights[1] {
            Kernel::Swap
        } else {
            Kernel::ReplaceSameSize
        };
        self.step_with(kernel, rng)
    }
}

/// Log Bayes factor of `model` against the null, with saturated fits
/// (`R² = 1`, or rank reaching `n − 1`) mapped to `+inf`.
pub fn model_log_bf(data: &Dataset, model: &Model) -> Result<f64> {
    let fit = fit_stats(data, model)?;
    if fit.r_squared >= 1.0 || fit.effective_rank + 1 >= data.n() {
        return Ok(f64::INFINITY);
    }
    log_bf_zellner_siow(data.n(), fit.effective_rank, fit.r_squared)
}

/// Visit counts over models from the post-burn-in part of a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    counts: BTreeMap<Model, u64>,
    total: u64,
    p: usize,
    accepted: u64,
    fits: u64,
}

impl PosteriorSummary {
    /// Builds a summary from raw counts. `counts` must be nonempty and
    /// every model must live in dimension `p`.
    pub fn from_counts(counts: BTreeMap<Model, u64>, p: usize) -> Result<Self> {
        if counts.is_empty() {
            return domain("empty frequency table");
        }
        if counts.keys().any(|m| m.p() != p) {
            return domain("frequency table mixes model dimensions");
        }
        let total = counts.values().sum();
        Ok(Self {
            counts,
            total,
            p,
            accepted: 0,
            fits: 0,
        })
    }

    pub fn counts(&self) -> &BTreeMap<Model, u64> {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Accepted moves over the recorded draws (stays also count as accepted).
    pub fn accepted(&self) -> u64 {
        self.accepted
    }

    pub fn fits(&self) -> u64 {
        self.fits
    }

    pub fn probability(&self, model: &Model) -> f64 {
        self.counts.get(model).copied().unwrap_or(0) as f64 / self.total as f64
    }

    pub fn inclusion_probabilities(&self) -> Vec<f64> {
        let mut hits = vec![0u64; self.p];
        for (model, &c) in &self.counts {
            for j in model.columns() {
                hits[j] += c;
            }
        }
        hits.into_iter().map(|h| h as f64 / self.total as f64).collect()
    }

    /// Smallest number of most-visited models whose frequencies reach 95%.
    /// Ties in count are broken by canonical model order.
    pub fn models_for_95(&self) -> usize {
        let mut counts: Vec<(&Model, u64)> = self.counts.iter().map(|(m, &c)| (m, c)).collect();
        counts.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let mut cumulative = 0u64;
        for (pos, (_, c)) in counts.iter().enumerate() {
            cumulative += c;
            if cumulative as u128 * 100 >= self.total as u128 * 95 {
                return pos + 1;
            }
        }
        counts.len()
    }

    /// The most-visited model (canonical order breaks ties).
    pub fn mode(&self) -> &Model {
        self.counts
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
            .map(|(m, _)| m)
            .expect("summary is nonempty")
    }
}

/// Derived posterior metrics against a known true model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub true_model_probability: f64,
    pub models_for_95: usize,
    pub inclusion_probabilities: Vec<f64>,
    /// Fraction of true predictors with inclusion probability at least 0.5.
    pub true_inclusion_recall: f64,
}

pub fn summarize(summary: &PosteriorSummary, true_model: &Model) -> Metrics {
    let inclusion = summary.inclusion_probabilities();
    let recall = if true_model.is_empty() {
        1.0
    } else {
        true_model.columns().filter(|&j| inclusion[j] >= 0.5).count() as f64
            / true_model.size() as f64
    };
    Metrics {
        true_model_probability: summary.probability(true_model),
        models_for_95: summary.models_for_95(),
        inclusion_probabilities: inclusion,
        true_inclusion_recall: recall,
    }
}

/// Runs one chain; deterministic in `(config, prior, data)`.
pub fn run_chain(config: &ChainConfig, prior: &PriorFamily, data: &Dataset) -> Result<PosteriorSummary> {
    config.validate()?;
    let weights = config.normalized_weights()?;
    let initial = config
        .initial_model
        .clone()
        .unwrap_or_else(|| Model::empty(data.p()));
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(config.stream);
    let mut chain = Chain::new(prior, data, initial, config.target, config.cache)?;
    let mut counts: HashMap<Model, u64> = HashMap::new();
    let mut accepted = 0;
    for t in 0..config.draws {
        let outcome = chain.step(&weights, &mut rng)?;
        if t >= config.burn_in {
            accepted += outcome.accepted as u64;
            match counts.get_mut(chain.current()) {
                Some(c) => *c += 1,
                None => {
                    counts.insert(chain.current().clone(), 1);
                }
            }
        }
    }
    let mut summary = PosteriorSummary::from_counts(counts.into_iter().collect(), data.p())?;
    summary.accepted = accepted;
    summary.fits = chain.fits();
    Ok(summary)
}

/// Largest `p` for which [`exact_posterior`] will enumerate `2^p` models.
pub const EXACT_MAX_P: usize = 20;

/// Exact model posterior by enumerating every subset; test oracle for the
/// sampler. Returns models in mask order with their probabilities.
pub fn exact_posterior(prior: &PriorFamily, data: &Dataset, target: Target) -> Result<Vec<(Model, f64)>> {
    let p = data.p();
    if p > EXACT_MAX_P {
        return domain(format!("exact enumeration refused for p = {p} > {EXACT_MAX_P}"));
    }
    let log_size = prior.log_size_table(p)?;
    let mut models = Vec::with_capacity(1 << p);
    let mut logs = Vec::with_capacity(1 << p);
    for mask in 0..(1u64 << p) {
        let model = Model::from_mask(mask, p);
        let k = model.size();
        let log_bf = match target {
            Target::Posterior => model_log_bf(data, &model)?,
            Target::PriorOnly => 0.0,
        };
        if log_bf.is_infinite() {
            return domain("exact posterior undefined when some model fits exactly");
        }
        logs.push(log_bf + log_size[k] - ln_choose(p, k));
        models.push(model);
    }
    normalize_log(&mut logs);
    Ok(models.into_iter().zip(logs.into_iter().map(f64::exp)).collect())
}

/// Total variation distance between chain frequencies and a reference
/// distribution over models.
pub fn total_variation(summary: &PosteriorSummary, reference: &[(Model, f64)]) -> f64 {
    let mut seen = 0.0;
    let mut diff = 0.0;
    for (model, prob) in reference {
        let freq = summary.probability(model);
        seen += freq;
        diff += (freq - prob).abs();
    }
    // Mass on models missing from the reference.
    diff += (1.0 - seen).max(0.0);
    diff / 2.0
}
