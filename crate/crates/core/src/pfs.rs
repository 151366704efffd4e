//! Probabilistic forward stepwise (pFS) calculus.
//!
//! A pFS prior assigns probability to ordered inclusion paths. We only use
//! the exchangeable restriction: every `k`-path stops with the same
//! probability `Q_k(∅|p)`, and otherwise continues to each of the `p − k`
//! unused indices with equal probability.

use itertools::Itertools;
use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::model::{Model, Path};
use crate::numeric::{ln_choose, LogSumExp};
use crate::prior::PriorFamily;

/// Largest model the permutation-sum oracle will expand (`9! = 362880` paths).
pub const BRUTEFORCE_MAX_SIZE: usize = 9;

/// Per-length stopping probabilities `Q_k(∅|p)` for `k = 0..=p`.
///
/// Both `ln Q_k` and `ln(1 − Q_k)` are kept so that schedules derived from
/// sharply decaying size priors do not lose their tails to cancellation.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingSchedule {
    q_stop: Vec<f64>,
    log_stop: Vec<f64>,
    log_continue: Vec<f64>,
}

impl StoppingSchedule {
    /// Builds a schedule from explicit stopping probabilities. The vector
    /// must have length `p + 1 ≥ 2`, entries in `[0, 1]`, and end in `1`.
    pub fn from_stop_probs(q_stop: Vec<f64>) -> Result<Self> {
        if q_stop.len() < 2 {
            return domain("stopping schedule needs p >= 1");
        }
        if let Some(q) = q_stop.iter().find(|q| !(0.0..=1.0).contains(*q)) {
            return domain(format!("stopping probability {q} outside [0, 1]"));
        }
        if *q_stop.last().unwrap() != 1.0 {
            return domain("a p-path must stop: Q_p(∅|p) must equal 1");
        }
        let log_stop = q_stop.iter().map(|q| q.ln()).collect();
        let log_continue = q_stop.iter().map(|q| (-q).ln_1p()).collect();
        Ok(Self {
            q_stop,
            log_stop,
            log_continue,
        })
    }

    fn from_logs(log_stop: Vec<f64>, log_continue: Vec<f64>) -> Self {
        let q_stop = log_stop.iter().map(|l| l.exp()).collect();
        Self {
            q_stop,
            log_stop,
            log_continue,
        }
    }

    pub fn p(&self) -> usize {
        self.q_stop.len() - 1
    }

    /// `Q_k(∅|p)` for `k = 0..=p`.
    pub fn q_stop(&self) -> &[f64] {
        &self.q_stop
    }

    /// Size prior induced by the schedule:
    /// `π(k|p) = Π_{ℓ<k} (1 − Q_ℓ) · Q_k`, in log space.
    pub fn induced_log_size_prior(&self) -> Vec<f64> {
        let mut reach = 0.0;
        let mut out = Vec::with_capacity(self.q_stop.len());
        for (stop, cont) in self.log_stop.iter().zip(&self.log_continue) {
            out.push(reach + stop);
            reach += cont;
        }
        out
    }

    /// Log-probability of a single continuation from a `len`-path to one
    /// specific unused index: `ln(1 − Q_len) − ln(p − len)`.
    fn log_step(&self, len: usize) -> f64 {
        self.log_continue[len] - ((self.p() - len) as f64).ln()
    }
}

/// Derives the stopping schedule of a prior family.
///
/// PHP and SHP use their defining `Q_k`; every other family is inverted
/// from its size prior via `Q_k = π(k|p) / Σ_{ℓ≥k} π(ℓ|p)`.
pub fn stopping_schedule(family: &PriorFamily, p: usize) -> Result<StoppingSchedule> {
    if p < 1 {
        return domain("p must be >= 1");
    }
    family.validated()?;
    let (mut log_stop, mut log_continue): (Vec<f64>, Vec<f64>) = match *family {
        PriorFamily::Php { alpha } => (0..=p).map(|_| ((-alpha).ln_1p(), alpha.ln())).unzip(),
        PriorFamily::Shp { phi, theta } => (0..=p)
            .map(|k| {
                let denom = (k as f64 + phi + theta).ln();
                ((k as f64 + phi).ln() - denom, theta.ln() - denom)
            })
            .unzip(),
        _ => return invert_size_prior(&family.log_size_table(p)?),
    };
    log_stop[p] = 0.0;
    log_continue[p] = f64::NEG_INFINITY;
    Ok(StoppingSchedule::from_logs(log_stop, log_continue))
}

/// Inverts a log size prior into stopping probabilities using log tail sums.
///
/// A zero-mass size followed by positive mass is representable (`Q_k = 0`);
/// only malformed input (NaN or `+inf` entries, or total mass away from one)
/// is rejected.
pub fn invert_size_prior(log_pi: &[f64]) -> Result<StoppingSchedule> {
    if log_pi.len() < 2 {
        return domain("size prior needs p >= 1");
    }
    if let Some(v) = log_pi.iter().find(|v| v.is_nan() || **v == f64::INFINITY) {
        return Err(Error::Inversion(format!("size prior contains {v}")));
    }
    let p = log_pi.len() - 1;
    // tails[k] = ln Σ_{ℓ≥k} π(ℓ)
    let mut tails = vec![f64::NEG_INFINITY; p + 2];
    let mut acc = LogSumExp::default();
    for k in (0..=p).rev() {
        acc.push(log_pi[k]);
        tails[k] = acc.value();
    }
    if tails[0].abs() > 1e-9 {
        return Err(Error::Inversion(format!(
            "size prior has total mass {} instead of 1",
            tails[0].exp()
        )));
    }
    let (log_stop, log_continue) = (0..=p)
        .map(|k| {
            if k == p || tails[k] == f64::NEG_INFINITY {
                (0.0, f64::NEG_INFINITY)
            } else {
                (log_pi[k] - tails[k], tails[k + 1] - tails[k])
            }
        })
        .unzip();
    Ok(StoppingSchedule::from_logs(log_stop, log_continue))
}

/// `ln P(i|p)` for an ordered path.
pub fn path_log_prob(schedule: &StoppingSchedule, path: &Path) -> Result<f64> {
    if path.p() != schedule.p() {
        return domain(format!(
            "path dimension {} does not match schedule dimension {}",
            path.p(),
            schedule.p()
        ));
    }
    let k = path.len();
    Ok((0..k).map(|l| schedule.log_step(l)).sum::<f64>() + schedule.log_stop[k])
}

/// Closed-form model probability:
/// `ln[ C(p,k)^{−1} Π_{ℓ<k} (1 − Q_ℓ) Q_k ]`.
pub fn model_log_prob_closed(schedule: &StoppingSchedule, k: usize, p: usize) -> Result<f64> {
    if p != schedule.p() {
        return domain(format!("p = {p} does not match schedule dimension {}", schedule.p()));
    }
    if k > p {
        return domain(format!("model size {k} exceeds p = {p}"));
    }
    let reach: f64 = schedule.log_continue[..k].iter().sum();
    Ok(reach + schedule.log_stop[k] - ln_choose(p, k))
}

/// Model probability as the sum over all `k!` orderings of its indices.
/// Test oracle for [`model_log_prob_closed`]; refuses models larger than
/// [`BRUTEFORCE_MAX_SIZE`].
pub fn model_log_prob_bruteforce(schedule: &StoppingSchedule, model: &Model) -> Result<f64> {
    if model.size() > BRUTEFORCE_MAX_SIZE {
        return Err(Error::Guard(format!(
            "permutation sum refused for |A| = {} > {BRUTEFORCE_MAX_SIZE}",
            model.size()
        )));
    }
    let mut acc = LogSumExp::default();
    for order in model.indices().iter().copied().permutations(model.size()) {
        let path = Path::new(order, model.p())?;
        acc.push(path_log_prob(schedule, &path)?);
    }
    Ok(acc.value())
}

/// Draws a model by running the forward stepwise process: at length `k`
/// stop with probability `Q_k`, otherwise append a uniformly chosen unused
/// index.
pub fn sample_model<R: Rng + ?Sized>(schedule: &StoppingSchedule, rng: &mut R) -> Model {
    let p = schedule.p();
    let mut pool: Vec<usize> = (1..=p).collect();
    let mut k = 0;
    while k < p && rng.random::<f64>() >= schedule.q_stop[k] {
        let pick = rng.random_range(k..p);
        pool.swap(k, pick);
        k += 1;
    }
    let mut chosen = pool[..k].to_vec();
    chosen.sort_unstable();
    Model::from_sorted_unchecked(chosen, p)
}
