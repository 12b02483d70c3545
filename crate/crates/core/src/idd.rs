//! Iterative detection and decoding over a MIMO channel.
//!
//! Each of the `D` passes detects every channel use, hands the deinterleaved
//! detector extrinsics to `N_I = R/D` fresh BP iterations, and feeds
//! `ρ·app` of the decoder back as interleaved detector priors.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gldpc::{BpDecoder, BpOutput, GldpcCode};
use crate::mimo::{channel_apply, detect, rayleigh_channel, ChannelUse, DetectorKind, MimoError, MimoFrame};
use crate::modem::{Constellation, Interleaver};
use crate::siso::{SisoConfig, SisoError, SoftOutput};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IddError {
    #[error("detector passes must be at least 1")]
    Passes,
    #[error("total BP iterations {iterations} not divisible by detector passes {passes}")]
    NotDivisible { iterations: usize, passes: usize },
    #[error("feedback factor {0} outside (0, 1]")]
    Rho(f64),
    #[error("frame carries {actual} bits, code length is {expected}")]
    FrameLength { expected: usize, actual: usize },
    #[error(transparent)]
    Siso(#[from] SisoError),
    #[error(transparent)]
    Mimo(#[from] MimoError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IddConfig {
    /// Detector passes `D`.
    pub passes: usize,
    /// Total BP iterations `R` over all passes.
    pub iterations: usize,
    pub rho: f64,
    pub detector: DetectorKind,
    pub siso: SisoConfig,
}

impl Default for IddConfig {
    fn default() -> Self {
        IddConfig {
            passes: 1,
            iterations: 6,
            rho: 0.6,
            detector: DetectorKind::MmsePic,
            siso: SisoConfig::default(),
        }
    }
}

impl IddConfig {
    pub fn validate(&self) -> Result<(), IddError> {
        if self.passes == 0 {
            return Err(IddError::Passes);
        }
        if self.iterations == 0 || !self.iterations.is_multiple_of(self.passes) {
            return Err(IddError::NotDivisible {
                iterations: self.iterations,
                passes: self.passes,
            });
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(IddError::Rho(self.rho));
        }
        self.siso.validate()?;
        Ok(())
    }

    /// BP iterations per detector pass.
    pub fn iterations_per_pass(&self) -> usize {
        self.iterations / self.passes
    }
}

/// Signals seen during one detector pass, all in their own bit order.
#[derive(Debug, Clone, PartialEq)]
pub struct PassTrace {
    /// Detector priors, interleaved order.
    pub priors: Vec<f64>,
    /// Detector extrinsics, interleaved order.
    pub detector_ext: Vec<f64>,
    /// BP input, code order.
    pub decoder_input: Vec<f64>,
    /// BP APP, code order.
    pub decoder_app: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IddOutput {
    pub hard: Vec<u8>,
    pub soft: SoftOutput,
    pub converged: bool,
    pub passes: usize,
    pub bp_iterations: usize,
    /// Channel uses whose detector output was erased.
    pub erasures: usize,
}

/// Maps interleaved codeword bits onto `T = N/(N_t·M_c)` Rayleigh channel uses.
pub fn transmit(
    codeword: &[u8],
    iv: &Interleaver,
    constellation: &Constellation,
    nt: usize,
    nr: usize,
    n0: f64,
    rng: &mut impl Rng,
) -> Result<MimoFrame, IddError> {
    let g = nt * constellation.bits_per_symbol();
    if codeword.len() != iv.len() || !codeword.len().is_multiple_of(g) {
        return Err(IddError::FrameLength {
            expected: iv.len(),
            actual: codeword.len(),
        });
    }
    let mut bits = vec![0u8; codeword.len()];
    iv.interleave_into(codeword, &mut bits);
    let uses = bits
        .chunks_exact(g)
        .map(|chunk| {
            let x = DVector::<Complex64>::from_vec(
                constellation.map_bits(chunk).expect("chunk holds whole symbols"),
            );
            let h = rayleigh_channel(rng, nr, nt);
            let y = channel_apply(&x, &h, rng, n0);
            ChannelUse { h, x, y }
        })
        .collect();
    Ok(MimoFrame { uses, n0 })
}

/// Reusable receiver state for one code, constellation and configuration.
#[derive(Debug, Clone)]
pub struct IddReceiver<'c> {
    code: &'c GldpcCode,
    config: IddConfig,
    constellation: Constellation,
    bp: BpDecoder<'c>,
    priors: Vec<f64>,
    det_ext: Vec<f64>,
    dec_in: Vec<f64>,
    feedback: Vec<f64>,
    bp_out: BpOutput,
    trace: Option<Vec<PassTrace>>,
}

impl<'c> IddReceiver<'c> {
    pub fn new(
        code: &'c GldpcCode,
        constellation: Constellation,
        config: &IddConfig,
    ) -> Result<Self, IddError> {
        config.validate()?;
        let n = code.len();
        Ok(IddReceiver {
            code,
            bp: BpDecoder::new(code, &config.siso, config.iterations_per_pass())?,
            config: config.clone(),
            constellation,
            priors: vec![0.0; n],
            det_ext: vec![0.0; n],
            dec_in: vec![0.0; n],
            feedback: vec![0.0; n],
            bp_out: BpOutput::default(),
            trace: None,
        })
    }

    pub fn config(&self) -> &IddConfig {
        &self.config
    }

    /// Records a [`PassTrace`] for every pass of subsequent frames.
    pub fn enable_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    /// Traces of the last received frame (empty unless tracing is enabled).
    pub fn trace(&self) -> &[PassTrace] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn receive(&mut self, frame: &MimoFrame, iv: &Interleaver) -> Result<IddOutput, IddError> {
        let n = self.code.len();
        let g = frame.uses.first().map_or(0, |u| u.x.len()) * self.constellation.bits_per_symbol();
        if iv.len() != n || g * frame.uses.len() != n {
            return Err(IddError::FrameLength {
                expected: n,
                actual: g * frame.uses.len(),
            });
        }
        if let Some(t) = self.trace.as_mut() {
            t.clear();
        }
        self.priors.fill(0.0);
        let mut out = IddOutput::default();
        for pass in 0..self.config.passes {
            for (t, u) in frame.uses.iter().enumerate() {
                let range = t * g..(t + 1) * g;
                let det = detect(
                    self.config.detector,
                    &u.y,
                    &u.h,
                    frame.n0,
                    &self.priors[range.clone()],
                    &self.constellation,
                )?;
                out.erasures += usize::from(det.erased);
                self.det_ext[range].copy_from_slice(&det.ext);
            }
            iv.deinterleave_into(&self.det_ext, &mut self.dec_in);
            self.bp.decode_into(&self.dec_in, &mut self.bp_out);
            out.passes = pass + 1;
            out.bp_iterations += self.bp_out.iterations;
            if let Some(t) = self.trace.as_mut() {
                t.push(PassTrace {
                    priors: self.priors.clone(),
                    detector_ext: self.det_ext.clone(),
                    decoder_input: self.dec_in.clone(),
                    decoder_app: self.bp_out.soft.app.clone(),
                });
            }
            if self.bp_out.converged {
                break;
            }
            for (f, &a) in self.feedback.iter_mut().zip(&self.bp_out.soft.app) {
                *f = self.config.rho * a;
            }
            iv.interleave_into(&self.feedback, &mut self.priors);
        }
        out.hard.clone_from(&self.bp_out.hard);
        out.soft.clone_from(&self.bp_out.soft);
        out.converged = self.bp_out.converged;
        Ok(out)
    }
}

/// One-shot receiver for a single frame.
pub fn idd_receive(
    frame: &MimoFrame,
    code: &GldpcCode,
    iv: &Interleaver,
    constellation: Constellation,
    config: &IddConfig,
) -> Result<IddOutput, IddError> {
    IddReceiver::new(code, constellation, config)?.receive(frame, iv)
}
