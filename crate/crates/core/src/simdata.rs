//! Synthetic regression data with a prescribed population signal-to-noise
//! ratio, plus the on-disk CSV + JSON sidecar layout.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::marginal::Dataset;
use crate::model::Model;

/// Population `R² = snr / (1 + snr)`.
pub fn snr_to_r2(snr: f64) -> Result<f64> {
    if !(snr.is_finite() && snr >= 0.0) {
        return domain(format!("signal-to-noise ratio must be finite and >= 0, got {snr}"));
    }
    Ok(snr / (1.0 + snr))
}

/// How the true coefficients are laid out. Both give every true
/// coefficient magnitude `sqrt(snr / p_T)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefficientScheme {
    #[default]
    Equal,
    RandomSign,
}

/// Draws `X` with iid standard normal entries, picks the true model as a
/// uniformly random `p_T`-subset, and sets `y = Xβ + ε` with unit noise
/// variance and zero intercept.
pub fn generate_dataset<R: Rng + ?Sized>(
    n: usize,
    p: usize,
    p_true: usize,
    snr: f64,
    scheme: CoefficientScheme,
    rng: &mut R,
) -> Result<Dataset> {
    if n < 3 {
        return domain(format!("need n >= 3, got {n}"));
    }
    if p_true < 1 || p_true > p {
        return domain(format!("need 1 <= p_T <= p, got p_T = {p_true}, p = {p}"));
    }
    snr_to_r2(snr)?;
    let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut truth: Vec<usize> = index::sample(rng, p, p_true).into_iter().map(|j| j + 1).collect();
    truth.sort_unstable();
    let magnitude = (snr / p_true as f64).sqrt();
    let mut beta = vec![0.0; p];
    for &i in &truth {
        let sign = match scheme {
            CoefficientScheme::Equal => 1.0,
            CoefficientScheme::RandomSign => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        };
        beta[i - 1] = sign * magnitude;
    }
    let beta_vec = DVector::from_column_slice(&beta);
    let noise = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let y = &x * &beta_vec + noise;
    let true_model = Model::new(truth, p)?;
    Dataset::new(y, x, true_model, beta, 1.0)
}

/// Truth metadata stored next to a dataset CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub n: usize,
    pub p: usize,
    pub true_model: Vec<usize>,
    pub true_beta: Vec<f64>,
    pub noise_var: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl DatasetMeta {
    pub fn of(data: &Dataset) -> Self {
        Self {
            n: data.n(),
            p: data.p(),
            true_model: data.true_model().indices().to_vec(),
            true_beta: data.true_beta().to_vec(),
            noise_var: data.noise_var(),
            snr: None,
            seed: None,
        }
    }
}

/// Sidecar path for a dataset CSV: `data.csv` becomes `data.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `y,x1,...,xp` rows and the JSON sidecar.
pub fn write_dataset(data: &Dataset, meta: &DatasetMeta, csv_path: &Path) -> Result<()> {
    let file = File::create(csv_path).map_err(io_err(csv_path))?;
    let mut out = csv::Writer::from_writer(BufWriter::new(file));
    let mut header = vec!["y".to_string()];
    header.extend((1..=data.p()).map(|j| format!("x{j}")));
    out.write_record(&header).map_err(csv_err(csv_path))?;
    for i in 0..data.n() {
        let mut row = Vec::with_capacity(data.p() + 1);
        row.push(data.y()[i].to_string());
        row.extend(data.x().row(i).iter().map(|v| v.to_string()));
        out.write_record(&row).map_err(csv_err(csv_path))?;
    }
    out.flush().map_err(io_err(csv_path))?;

    let side = sidecar_path(csv_path);
    let file = File::create(&side).map_err(io_err(&side))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, meta).map_err(|source| Error::Json {
        path: side.display().to_string(),
        source,
    })?;
    w.write_all(b"\n").map_err(io_err(&side))?;
    Ok(())
}

/// Reads a dataset written by [`write_dataset`].
pub fn read_dataset(csv_path: &Path) -> Result<(Dataset, DatasetMeta)> {
    let side = sidecar_path(csv_path);
    let file = File::open(&side).map_err(io_err(&side))?;
    let meta: DatasetMeta =
        serde_json::from_reader(BufReader::new(file)).map_err(|source| Error::Json {
            path: side.display().to_string(),
            source,
        })?;
    let mut reader = csv::Reader::from_path(csv_path).map_err(csv_err(csv_path))?;
    let width = reader.headers().map_err(csv_err(csv_path))?.len();
    if width != meta.p + 1 {
        return Err(Error::Parse {
            row: 1,
            msg: format!("expected {} columns, header has {width}", meta.p + 1),
        });
    }
    let mut y = Vec::with_capacity(meta.n);
    let mut x = Vec::with_capacity(meta.n * meta.p);
    for (pos, record) in reader.records().enumerate() {
        let row = pos + 2;
        let record = record.map_err(csv_err(csv_path))?;
        let values: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse).collect();
        let values = values.map_err(|e| Error::Parse {
            row,
            msg: format!("{e}"),
        })?;
        if values.len() != width {
            return Err(Error::Parse {
                row,
                msg: format!("expected {width} fields, got {}", values.len()),
            });
        }
        y.push(values[0]);
        x.extend_from_slice(&values[1..]);
    }
    let n = y.len();
    if n != meta.n {
        return Err(Error::Parse {
            row: n + 1,
            msg: format!("sidecar declares n = {} but CSV has {n} rows", meta.n),
        });
    }
    let x = DMatrix::from_row_slice(n, meta.p, &x);
    let model = Model::new(meta.true_model.clone(), meta.p)?;
    let data = Dataset::new(DVector::from_vec(y), x, model, meta.true_beta.clone(), meta.noise_var)?;
    Ok((data, meta))
}
