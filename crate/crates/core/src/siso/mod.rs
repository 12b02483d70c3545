//! Soft-input soft-output decoding of polar-like codes.
//!
//! Three decoders share one interface: list-based soft output (SO-SCL), the
//! max-log list approximation with saturation (Pyndiah), and exact
//! enumeration of the codebook for small codes. All take the sum of channel
//! and a-priori LLRs as input and return APP and extrinsic LLRs.

mod exhaustive;
mod scl;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llr::{log_add_exp, log_ratio, saturate, softplus, LLR_MAX};
use crate::polar::PolarLikeCode;

pub use exhaustive::{ExhaustiveDecoder, MAX_EXHAUSTIVE_DIMENSION};
pub use scl::{PathRef, SclDecoder};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SisoError {
    #[error("codebook with dimension {dimension} exceeds the enumeration limit {limit}")]
    CodebookTooLarge { dimension: usize, limit: usize },
    #[error("list size must be at least 1")]
    ListSize,
    #[error("weighting factor {0} outside (0, 1]")]
    Alpha(f64),
    #[error("saturation value {0} must be positive")]
    Beta(f64),
    #[error("empty parameter schedule")]
    EmptySchedule,
}

/// Check-node kernel used inside SC decoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    #[default]
    Exact,
    MinSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SisoKind {
    #[default]
    SoScl,
    Pyndiah,
    Exhaustive,
}

/// Component decoder settings.
///
/// `alpha` and `beta` are per-iteration schedules; iteration `t` uses entry
/// `min(t, len − 1)`, so a single value is a constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SisoConfig {
    pub kind: SisoKind,
    pub list_size: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub kernel: Kernel,
}

impl Default for SisoConfig {
    fn default() -> Self {
        SisoConfig {
            kind: SisoKind::SoScl,
            list_size: 4,
            alpha: vec![0.6],
            beta: vec![LLR_MAX / 4.0],
            kernel: Kernel::Exact,
        }
    }
}

impl SisoConfig {
    pub fn validate(&self) -> Result<(), SisoError> {
        if self.list_size == 0 {
            return Err(SisoError::ListSize);
        }
        if self.alpha.is_empty() || self.beta.is_empty() {
            return Err(SisoError::EmptySchedule);
        }
        if let Some(&a) = self.alpha.iter().find(|&&a| !(a > 0.0 && a <= 1.0)) {
            return Err(SisoError::Alpha(a));
        }
        if let Some(&b) = self.beta.iter().find(|&&b| !(b > 0.0)) {
            return Err(SisoError::Beta(b));
        }
        Ok(())
    }

    pub fn alpha_at(&self, iteration: usize) -> f64 {
        self.alpha[iteration.min(self.alpha.len() - 1)]
    }

    pub fn beta_at(&self, iteration: usize) -> f64 {
        self.beta[iteration.min(self.beta.len() - 1)]
    }
}

/// APP and extrinsic LLRs of one decoded word.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SoftOutput {
    pub app: Vec<f64>,
    pub ext: Vec<f64>,
}

impl SoftOutput {
    pub fn zeros(len: usize) -> Self {
        SoftOutput {
            app: vec![0.0; len],
            ext: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.app.len()
    }

    pub fn is_empty(&self) -> bool {
        self.app.is_empty()
    }

    pub fn hard_decision(&self) -> Vec<u8> {
        self.app.iter().map(|&l| crate::llr::hard_decision(l)).collect()
    }
}

/// Soft output from a list and a total-mass estimate.
///
/// `app_i = ln (Σ_{c∈list, c_i=0} Q(c) + r·P(c_i=0|y_i)) / (Σ_{c_i=1} Q(c) + r·P(c_i=1|y_i))`
/// where `r = exp(log_residual)` is the mass not covered by the list.
pub fn list_app<'a>(
    paths: impl Iterator<Item = PathRef<'a>> + Clone,
    log_residual: f64,
    llr_in: &[f64],
    app: &mut [f64],
) {
    let shift = paths
        .clone()
        .map(|p| p.metric)
        .fold(f64::INFINITY, f64::min);
    let residual = log_residual + shift;
    for (i, a) in app.iter_mut().enumerate() {
        let (mut l0, mut l1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in paths.clone() {
            let w = shift - p.metric;
            if p.codeword[i] == 0 {
                l0 = log_add_exp(l0, w);
            } else {
                l1 = log_add_exp(l1, w);
            }
        }
        if residual > f64::NEG_INFINITY {
            let l = saturate(llr_in[i]);
            l0 = log_add_exp(l0, residual - softplus(-l));
            l1 = log_add_exp(l1, residual - softplus(l));
        }
        *a = log_ratio(l0, l1);
    }
}

/// Max-log list soft output, `±beta` where one hypothesis is missing from the list.
pub fn pyndiah_app<'a>(
    paths: impl Iterator<Item = PathRef<'a>> + Clone,
    beta: f64,
    app: &mut [f64],
) {
    for (i, a) in app.iter_mut().enumerate() {
        let (mut m0, mut m1) = (f64::INFINITY, f64::INFINITY);
        for p in paths.clone() {
            if p.codeword[i] == 0 {
                m0 = m0.min(p.metric);
            } else {
                m1 = m1.min(p.metric);
            }
        }
        *a = match (m0.is_finite(), m1.is_finite()) {
            (true, true) => saturate(m1 - m0),
            (true, false) => beta,
            (false, true) => -beta,
            (false, false) => 0.0,
        };
    }
}

#[derive(Debug, Clone)]
enum Engine {
    List(SclDecoder),
    Exhaustive(ExhaustiveDecoder),
}

/// Reusable SISO decoder for one component code.
#[derive(Debug, Clone)]
pub struct SisoDecoder {
    config: SisoConfig,
    engine: Engine,
    input: Vec<f64>,
}

impl SisoDecoder {
    pub fn new(code: &PolarLikeCode, config: &SisoConfig) -> Result<Self, SisoError> {
        config.validate()?;
        let engine = match config.kind {
            SisoKind::SoScl | SisoKind::Pyndiah => {
                Engine::List(SclDecoder::new(code, config.list_size, config.kernel))
            }
            SisoKind::Exhaustive => Engine::Exhaustive(ExhaustiveDecoder::new(code)?),
        };
        Ok(SisoDecoder {
            config: config.clone(),
            engine,
            input: vec![0.0; code.len()],
        })
    }

    pub fn config(&self) -> &SisoConfig {
        &self.config
    }

    /// Decodes `channel + a_priori`.
    ///
    /// `ext = alpha · (app − a_priori − channel)`, with `alpha` taken from the
    /// schedule at `iteration`. An input beyond `±LLR_MAX` is replaced by its
    /// saturated value in that difference.
    pub fn decode_into(
        &mut self,
        channel: &[f64],
        a_priori: Option<&[f64]>,
        iteration: usize,
        out: &mut SoftOutput,
    ) {
        let len = self.input.len();
        assert_eq!(channel.len(), len);
        out.app.resize(len, 0.0);
        out.ext.resize(len, 0.0);
        match a_priori {
            Some(p) => {
                for ((x, &c), &a) in self.input.iter_mut().zip(channel).zip(p) {
                    *x = c + a;
                }
            }
            None => self.input.copy_from_slice(channel),
        }
        match &mut self.engine {
            Engine::List(scl) => {
                scl.decode(&self.input);
                match self.config.kind {
                    SisoKind::Pyndiah => {
                        pyndiah_app(scl.paths(), self.config.beta_at(iteration), &mut out.app)
                    }
                    _ => list_app(scl.paths(), scl.log_pruned_mass(), &self.input, &mut out.app),
                }
            }
            Engine::Exhaustive(ex) => ex.app_into(&self.input, &mut out.app),
        }
        let alpha = self.config.alpha_at(iteration);
        for i in 0..len {
            let total = self.input[i];
            let own = if total.abs() <= LLR_MAX {
                out.app[i] - a_priori.map_or(0.0, |p| p[i]) - channel[i]
            } else {
                out.app[i] - saturate(total)
            };
            out.ext[i] = alpha * own;
        }
    }

    pub fn decode(&mut self, llr_in: &[f64]) -> SoftOutput {
        let mut out = SoftOutput::zeros(llr_in.len());
        self.decode_into(llr_in, None, 0, &mut out);
        out
    }
}

/// Greedy SC decoding; returns the transform input `u^N`.
pub fn sc_decode(code: &PolarLikeCode, llr_in: &[f64]) -> Vec<u8> {
    let mut dec = SclDecoder::new(code, 1, Kernel::Exact);
    dec.decode(llr_in);
    dec.best().input.to_vec()
}

/// SCL decoding; returns `(u^N, metric)` pairs by ascending metric.
pub fn scl_decode(code: &PolarLikeCode, llr_in: &[f64], list_size: usize) -> Vec<(Vec<u8>, f64)> {
    let mut dec = SclDecoder::new(code, list_size, Kernel::Exact);
    dec.decode(llr_in);
    dec.paths().map(|p| (p.input.to_vec(), p.metric)).collect()
}

pub fn so_scl(
    code: &PolarLikeCode,
    llr_in: &[f64],
    list_size: usize,
    alpha: f64,
) -> Result<SoftOutput, SisoError> {
    let cfg = SisoConfig {
        kind: SisoKind::SoScl,
        list_size,
        alpha: vec![alpha],
        ..SisoConfig::default()
    };
    Ok(SisoDecoder::new(code, &cfg)?.decode(llr_in))
}

pub fn pyndiah_siso(
    code: &PolarLikeCode,
    llr_in: &[f64],
    list_size: usize,
    alpha: f64,
    beta: f64,
) -> Result<SoftOutput, SisoError> {
    let cfg = SisoConfig {
        kind: SisoKind::Pyndiah,
        list_size,
        alpha: vec![alpha],
        beta: vec![beta],
        ..SisoConfig::default()
    };
    Ok(SisoDecoder::new(code, &cfg)?.decode(llr_in))
}

pub fn exhaustive_siso(code: &PolarLikeCode, llr_in: &[f64]) -> Result<SoftOutput, SisoError> {
    let cfg = SisoConfig {
        kind: SisoKind::Exhaustive,
        alpha: vec![1.0],
        ..SisoConfig::default()
    };
    Ok(SisoDecoder::new(code, &cfg)?.decode(llr_in))
}
