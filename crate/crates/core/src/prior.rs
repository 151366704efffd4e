//! Prior mass functions on model size and on individual models.
//!
//! Every family is exchangeable, so a prior on the model space is fully
//! determined by its size prior `π(k|p)`; a model of size `k` receives
//! `π(k|p) / C(p, k)`. All quantities are computed in log space.

use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};
use crate::model::Model;
use crate::numeric::{ln_beta, ln_choose, ln_gamma, normalize_log};

/// A model-space prior family together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorFamily {
    /// Path-Holm: truncated geometric on size, `Q_k(∅|p) = 1 − α`.
    Php { alpha: f64 },
    /// Subset-Holm: `Q_k(∅|p) = (k+φ)/(k+φ+θ)`.
    Shp { phi: f64, theta: f64 },
    /// Matryoshka doll with constant ω: truncated Poisson(1/ω) on size.
    Md { omega: f64 },
    BetaBinomial { a: f64, b: f64 },
    /// Beta-Binomial(a, λp); `b` is resolved against `p` at evaluation time.
    ScaledBetaBinomial { a: f64, lambda: f64 },
    /// `π(k|p) ∝ (1+k)^(−s)`. `s = 1` is the harmonic prior.
    PowerSeries { s: f64 },
    /// `π(k|p) ∝ E[Y^{2k}] / k!` with `Y ~ Normal(mu, var)`.
    Cmg { mu: f64, var: f64 },
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        domain(format!("{name} must be finite, got {v}"))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    finite(name, v)?;
    if v > 0.0 {
        Ok(())
    } else {
        domain(format!("{name} must be > 0, got {v}"))
    }
}

impl PriorFamily {
    pub fn php(alpha: f64) -> Result<Self> {
        Self::Php { alpha }.validated()
    }

    pub fn shp(phi: f64, theta: f64) -> Result<Self> {
        Self::Shp { phi, theta }.validated()
    }

    pub fn md(omega: f64) -> Result<Self> {
        Self::Md { omega }.validated()
    }

    pub fn beta_binomial(a: f64, b: f64) -> Result<Self> {
        Self::BetaBinomial { a, b }.validated()
    }

    pub fn scaled_beta_binomial(a: f64, lambda: f64) -> Result<Self> {
        Self::ScaledBetaBinomial { a, lambda }.validated()
    }

    pub fn power_series(s: f64) -> Result<Self> {
        Self::PowerSeries { s }.validated()
    }

    pub fn cmg(mu: f64, var: f64) -> Result<Self> {
        Self::Cmg { mu, var }.validated()
    }

    /// Checks the parameter domain, returning the family unchanged when valid.
    pub fn validated(self) -> Result<Self> {
        match self {
            Self::Php { alpha } => {
                finite("alpha", alpha)?;
                if !(alpha > 0.0 && alpha < 1.0) {
                    return domain(format!("alpha must lie in (0, 1), got {alpha}"));
                }
            }
            Self::Shp { phi, theta } => {
                positive("phi", phi)?;
                positive("theta", theta)?;
            }
            Self::Md { omega } => positive("omega", omega)?,
            Self::BetaBinomial { a, b } => {
                positive("a", a)?;
                positive("b", b)?;
            }
            Self::ScaledBetaBinomial { a, lambda } => {
                positive("a", a)?;
                positive("lambda", lambda)?;
            }
            Self::PowerSeries { s } => {
                finite("s", s)?;
                if s < 1.0 {
                    return domain(format!("s must be >= 1, got {s}"));
                }
            }
            Self::Cmg { mu, var } => {
                finite("mu", mu)?;
                finite("var", var)?;
                if var < 0.0 {
                    return domain(format!("var must be >= 0, got {var}"));
                }
            }
        }
        Ok(self)
    }

    /// Short family tag used in descriptors.
    pub fn tag(&self) -> &'static str {
        match self {
            Self::Php { .. } => "php",
            Self::Shp { .. } => "shp",
            Self::Md { .. } => "md",
            Self::BetaBinomial { .. } => "bb",
            Self::ScaledBetaBinomial { .. } => "sbb",
            Self::PowerSeries { .. } => "pow",
            Self::Cmg { .. } => "cmg",
        }
    }

    /// `ln π(k|p)` for every `k = 0..=p`.
    pub fn log_size_table(&self, p: usize) -> Result<Vec<f64>> {
        if p < 1 {
            return domain("p must be >= 1");
        }
        self.validated()?;
        let sizes = 0..=p;
        let table = match *self {
            Self::Php { alpha } => sizes
                .map(|k| {
                    if k < p {
                        (1.0 - alpha).ln() + k as f64 * alpha.ln()
                    } else {
                        p as f64 * alpha.ln()
                    }
                })
                .collect(),
            Self::Shp { phi, theta } => {
                let head = ln_gamma(phi + theta);
                sizes
                    .map(|k| {
                        let kf = k as f64;
                        let reach = head + kf * theta.ln() - ln_gamma(kf + phi + theta);
                        if k < p {
                            ((kf + phi) / (kf + phi + theta)).ln() + reach
                        } else {
                            reach
                        }
                    })
                    .collect()
            }
            Self::Md { omega } => {
                let rate = -omega.ln();
                normalized(sizes.map(|k| k as f64 * rate - ln_gamma(k as f64 + 1.0)))
            }
            Self::BetaBinomial { a, b } => beta_binomial_table(a, b, p),
            Self::ScaledBetaBinomial { a, lambda } => beta_binomial_table(a, lambda * p as f64, p),
            Self::PowerSeries { s } => normalized(sizes.map(|k| -s * (k as f64 + 1.0).ln())),
            Self::Cmg { mu, var } => {
                let moments = log_normal_even_moments(mu, var, p);
                normalized(
                    moments
                        .into_iter()
                        .enumerate()
                        .map(|(k, m)| m - ln_gamma(k as f64 + 1.0)),
                )
            }
        };
        Ok(table)
    }

    /// `ln π(k|p)`.
    pub fn log_size_prior(&self, k: usize, p: usize) -> Result<f64> {
        if p < 1 {
            return domain("p must be >= 1");
        }
        if k > p {
            return domain(format!("model size {k} exceeds p = {p}"));
        }
        Ok(self.log_size_table(p)?[k])
    }

    /// `ln P(A|p) = ln π(|A| | p) − ln C(p, |A|)`.
    pub fn log_model_prior(&self, model: &Model) -> Result<f64> {
        let (k, p) = (model.size(), model.p());
        Ok(self.log_size_prior(k, p)? - ln_choose(p, k))
    }

    /// Prior mass of the children set of a size-`k` model relative to the
    /// model itself: `(k+1) π(k+1|p) / π(k|p)`.
    pub fn children_ratio(&self, k: usize, p: usize) -> Result<f64> {
        if k >= p {
            return domain(format!("children ratio needs k < p, got k = {k}, p = {p}"));
        }
        let table = self.log_size_table(p)?;
        ratio_from_table(&table, k)
    }
}

pub(crate) fn ratio_from_table(table: &[f64], k: usize) -> Result<f64> {
    if table[k] == f64::NEG_INFINITY {
        return domain(format!("children ratio undefined: π({k}|p) = 0"));
    }
    Ok(((k as f64 + 1.0).ln() + table[k + 1] - table[k]).exp())
}

fn normalized(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    normalize_log(&mut v);
    v
}

fn beta_binomial_table(a: f64, b: f64, p: usize) -> Vec<f64> {
    let base = ln_beta(a, b);
    normalized((0..=p).map(|k| {
        ln_choose(p, k) + ln_beta(k as f64 + a, (p - k) as f64 + b) - base
    }))
}

/// `E[Y^{2k}]` for `Y ~ Normal(mu, var)`, via the raw-moment recurrence
/// `m_j = mu m_{j−1} + (j−1) var m_{j−2}`.
///
/// Overflows to `inf` for very large `k`; the priors use the rescaled
/// log-space variant internally.
pub fn normal_even_moment(mu: f64, var: f64, k: usize) -> Result<f64> {
    finite("mu", mu)?;
    finite("var", var)?;
    if var < 0.0 {
        return domain(format!("var must be >= 0, got {var}"));
    }
    let (mut prev, mut cur) = (1.0, mu);
    if k == 0 {
        return Ok(1.0);
    }
    for j in 2..=2 * k {
        let next = mu * cur + (j - 1) as f64 * var * prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `ln E[Y^{2k}]` for `k = 0..=kmax`. Runs the same recurrence with a
/// floating scale so that moments far beyond `f64` range stay representable.
fn log_normal_even_moments(mu: f64, var: f64, kmax: usize) -> Vec<f64> {
    const RESCALE: f64 = 1e150;
    let mut out = Vec::with_capacity(kmax + 1);
    out.push(0.0);
    let (mut prev, mut cur, mut log_scale) = (1.0f64, mu, 0.0f64);
    for j in 2..=2 * kmax {
        let next = mu * cur + (j - 1) as f64 * var * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            prev /= RESCALE;
            cur /= RESCALE;
            log_scale += RESCALE.ln();
        }
        if j % 2 == 0 {
            // Even moments are nonnegative; zero only when mu = var = 0.
            out.push(if cur > 0.0 { cur.ln() + log_scale } else { f64::NEG_INFINITY });
        }
    }
    out
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

impl fmt::Display for PriorFamily {
    /// Canonical text descriptor, e.g. `shp:phi=1,theta=1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params: Vec<(&str, f64)> = match *self {
            Self::Php { alpha } => vec![("alpha", alpha)],
            Self::Shp { phi, theta } => vec![("phi", phi), ("theta", theta)],
            Self::Md { omega } => vec![("omega", omega)],
            Self::BetaBinomial { a, b } => vec![("a", a), ("b", b)],
            Self::ScaledBetaBinomial { a, lambda } => vec![("a", a), ("lambda", lambda)],
            Self::PowerSeries { s } => vec![("s", s)],
            Self::Cmg { mu, var } => vec![("mu", mu), ("var", var)],
        };
        write!(f, "{}:", self.tag())?;
        for (pos, (key, value)) in params.iter().enumerate() {
            if pos > 0 {
                f.write_str(",")?;
            }
            write!(f, "{key}={}", fmt_num(*value))?;
        }
        Ok(())
    }
}

impl FromStr for PriorFamily {
    type Err = Error;

    /// Parses `name[:key=value,...]`. Omitted keys take the defaults
    /// `php:alpha=0.5`, `shp:phi=1,theta=1`, `md:omega=1`, `bb:a=1,b=1`,
    /// `sbb:a=1,lambda=1`, `pow:s=1`, `cmg:mu=0.5,var=0.25`.
    fn from_str(text: &str) -> Result<Self> {
        let bad = |msg: String| Err(Error::Descriptor(msg));
        let text = text.trim();
        let (name, rest) = match text.split_once(':') {
            Some((n, r)) => (n.trim(), Some(r)),
            None => (text, None),
        };
        let mut family = match name.to_ascii_lowercase().as_str() {
            "php" => Self::Php { alpha: 0.5 },
            "shp" => Self::Shp { phi: 1.0, theta: 1.0 },
            "md" => Self::Md { omega: 1.0 },
            "bb" => Self::BetaBinomial { a: 1.0, b: 1.0 },
            "sbb" => Self::ScaledBetaBinomial { a: 1.0, lambda: 1.0 },
            "pow" => Self::PowerSeries { s: 1.0 },
            "cmg" => Self::Cmg { mu: 0.5, var: 0.25 },
            _ => return bad(format!("unknown prior family '{name}' in '{text}'")),
        };
        for token in rest.into_iter().flat_map(|r| r.split(',')) {
            let token = token.trim();
            if token.is_empty() {
                continue;
            }
            let Some((key, value)) = token.split_once('=') else {
                return bad(format!("expected key=value, got '{token}'"));
            };
            let Ok(value) = value.trim().parse::<f64>() else {
                return bad(format!("non-numeric value in '{token}'"));
            };
            let slot = match (&mut family, key.trim()) {
                (Self::Php { alpha }, "alpha") => alpha,
                (Self::Shp { phi, .. }, "phi") => phi,
                (Self::Shp { theta, .. }, "theta") => theta,
                (Self::Md { omega }, "omega") => omega,
                (Self::BetaBinomial { a, .. }, "a") => a,
                (Self::BetaBinomial { b, .. }, "b") => b,
                (Self::ScaledBetaBinomial { a, .. }, "a") => a,
                (Self::ScaledBetaBinomial { lambda, .. }, "lambda") => lambda,
                (Self::PowerSeries { s }, "s") => s,
                (Self::Cmg { mu, .. }, "mu") => mu,
                (Self::Cmg { var, .. }, "var") => var,
                _ => return bad(format!("unknown parameter '{token}' for family '{name}'")),
            };
            *slot = value;
        }
        family
            .validated()
            .map_err(|e| Error::Descriptor(format!("'{text}': {e}")))
    }
}
