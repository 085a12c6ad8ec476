//! Model file serialization.
//!
//! A model file is a JSON document:
//!
//! ```json
//! {
//!   "hyper": {"K": 4, "M": 3, "d": 2, "T": 365,
//!             "mode": "discretized", "resolution": 0.1},
//!   "Q": [[...], ...],
//!   "p": [[...], ...],
//!   "lambda": [[...], ...],
//!   "beta": [[...], ...],
//!   "meta": {"station": "BREMEN", "fit_loglik": -12345.6, "seed": 42}
//! }
//! ```
//!
//! Floats are written in shortest round-trip form, which preserves the full
//! double value bit-exactly.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EmissionMode, HyperParams, ModelParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub station: String,
    pub fit_loglik: Option<f64>,
    pub seed: Option<u64>,
}

impl Default for ModelMeta {
    fn default() -> Self {
        ModelMeta { station: String::new(), fit_loglik: None, seed: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct HyperFile {
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "M")]
    m: usize,
    d: usize,
    #[serde(rename = "T")]
    t: usize,
    mode: String,
    resolution: f64,
}

/// On-disk representation of a fitted model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    hyper: HyperFile,
    #[serde(rename = "Q")]
    q: Vec<Vec<f64>>,
    p: Vec<Vec<f64>>,
    lambda: Vec<Vec<f64>>,
    beta: Vec<Vec<f64>>,
    pub meta: ModelMeta,
}

impl ModelFile {
    pub fn from_params(params: &ModelParams, meta: ModelMeta) -> Self {
        let (mode, resolution) = match params.hyper.mode {
            EmissionMode::Continuous => ("continuous".to_string(), 0.1),
            EmissionMode::Discretized { resolution } => ("discretized".to_string(), resolution),
        };
        ModelFile {
            hyper: HyperFile {
                k: params.hyper.k,
                m: params.hyper.m,
                d: params.hyper.d,
                t: params.hyper.t,
                mode,
                resolution,
            },
            q: rows(&params.q),
            p: rows(&params.p),
            lambda: rows(&params.lambda),
            beta: rows(&params.beta),
            meta,
        }
    }

    pub fn into_params(self) -> Result<(ModelParams, ModelMeta)> {
        let mode = match self.hyper.mode.as_str() {
            "continuous" => EmissionMode::Continuous,
            "discretized" => EmissionMode::Discretized { resolution: self.hyper.resolution },
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown emission mode {other:?} (expected \"continuous\" or \"discretized\")"
                )))
            }
        };
        let hyper = HyperParams::new(self.hyper.k, self.hyper.m, self.hyper.d, self.hyper.t, mode)?;
        let params = ModelParams::new(
            hyper,
            matrix("Q", self.q)?,
            matrix("p", self.p)?,
            matrix("lambda", self.lambda)?,
            matrix("beta", self.beta)?,
        )?;
        Ok((params, self.meta))
    }
}

fn rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn matrix(name: &str, rows: Vec<Vec<f64>>) -> Result<Array2<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidInput(format!("{name} rows have inconsistent lengths")));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((nrows, ncols), flat)
        .map_err(|e| Error::InvalidInput(format!("{name}: {e}")))
}

pub fn write_model(path: &Path, params: &ModelParams, meta: ModelMeta) -> Result<()> {
    let file = ModelFile::from_params(params, meta);
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut out, &file)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<(ModelParams, ModelMeta)> {
    let mut text = String::new();
    std::fs::File::open(path)?.read_to_string(&mut text)?;
    let file: ModelFile = serde_json::from_str(&text)?;
    file.into_params()
}
