//! Model-space priors for Bayesian variable selection.
//!
//! - [`prior`]: size and model priors for the PHP, SHP, matryoshka doll,
//!   Beta-Binomial, scaled Beta-Binomial, power-series and CMG families.
//! - [`pfs`]: the probabilistic forward stepwise calculus (stopping
//!   schedules, path and model probabilities, generative sampling).
//! - [`marginal`]: Zellner-Siow Bayes factors with rank-deficient designs.
//! - [`sampler`]: Metropolis-Hastings over the model space.
//! - [`simdata`]: synthetic regression data at a given signal-to-noise ratio.
//! - [`harness`]: the experiment commands behind the `pfsprior` binary.

pub mod error;
pub mod harness;
pub mod marginal;
pub mod model;
pub mod numeric;
pub mod pfs;
pub mod prior;
pub mod sampler;
pub mod simdata;

pub use error::{Error, Result};
pub use marginal::{Dataset, FitStats};
pub use model::{Model, Path};
pub use pfs::StoppingSchedule;
pub use prior::PriorFamily;
pub use sampler::{ChainConfig, Kernel, PosteriorSummary, Target};
