//! JSON shapes for fitted mixtures and run metadata.
//!
//! Numbers are serialized in scientific notation with 17 significant digits,
//! enough for every double to survive a write/read round trip bit-exactly.

use serde::{Deserialize, Serialize};

use crate::em::{EmConfig, FitReport, InitLabel};
use crate::error::{Error, Result};
use crate::least_squares::Link;
use crate::model::MixtureParams;

struct PreciseFormatter;

impl serde_json::ser::Formatter for PreciseFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.8e}")
    }
}

/// Serializes any value as JSON with full-precision floats.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, PreciseFormatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serializer emits UTF-8"))
}

/// Mixture parameters in wire form: utilities row-major with declared
/// dimensions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureJson {
    pub n: usize,
    pub k: usize,
    /// `n * k` utilities, row-major: entry `i * k + c` is item `i` in
    /// component `c`.
    pub thetas: Vec<f64>,
    pub beta: Vec<f64>,
}

pub fn mixture_to_json(mix: &MixtureParams) -> MixtureJson {
    let (n, k) = (mix.n(), mix.k());
    let mut thetas = Vec::with_capacity(n * k);
    for i in 0..n {
        for c in 0..k {
            thetas.push(mix.thetas()[(i, c)]);
        }
    }
    MixtureJson {
        n,
        k,
        thetas,
        beta: mix.beta().to_vec(),
    }
}

pub fn mixture_from_json(json: &MixtureJson) -> Result<MixtureParams> {
    if json.thetas.len() != json.n * json.k {
        return Err(Error::DimensionMismatch {
            expected: json.n * json.k,
            found: json.thetas.len(),
        });
    }
    if json.beta.len() != json.k {
        return Err(Error::DimensionMismatch {
            expected: json.k,
            found: json.beta.len(),
        });
    }
    let thetas = nalgebra::DMatrix::from_fn(json.n, json.k, |i, c| json.thetas[i * json.k + c]);
    MixtureParams::new(thetas, json.beta.clone())
}

/// Echo of the knobs a fit ran with; `threshold` is the resolved numeric
/// value even when it was requested as automatic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitConfigEcho {
    pub k: usize,
    pub init: InitLabel,
    pub link: Link,
    pub em_tol: f64,
    pub max_em_iter: usize,
    pub lsr_tol: f64,
    pub lsr_max_iter: usize,
    pub seed: u64,
    pub fix_beta: bool,
    pub threshold: f64,
}

impl FitConfigEcho {
    pub fn new(k: usize, config: &EmConfig, init: InitLabel, threshold: f64) -> Self {
        FitConfigEcho {
            k,
            init,
            link: config.link,
            em_tol: config.em_tol,
            max_em_iter: config.max_em_iter,
            lsr_tol: config.lsr_tol,
            lsr_max_iter: config.lsr_max_iter,
            seed: config.seed,
            fix_beta: config.fix_beta,
            threshold,
        }
    }
}

/// Everything the `fit` command writes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitOutput {
    pub mixture: MixtureJson,
    pub loglik_trace: Vec<f64>,
    pub n_iter: usize,
    pub converged: bool,
    pub init: InitLabel,
    pub seed: u64,
    pub wall_time: f64,
    pub config: FitConfigEcho,
}

impl FitOutput {
    pub fn new(report: &FitReport, config: FitConfigEcho) -> Self {
        FitOutput {
            mixture: mixture_to_json(&report.mix),
            loglik_trace: report.loglik_trace.clone(),
            n_iter: report.n_iter,
            converged: report.converged,
            init: report.init,
            seed: report.seed,
            wall_time: report.wall_time,
            config,
        }
    }
}

/// Ground truth written next to a sampled dataset: the generating mixture
/// and each ranking's latent component.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthOutput {
    pub mixture: MixtureJson,
    pub labels: Vec<usize>,
    pub seed: u64,
}
