//! Monte Carlo BER/BLER simulation over AWGN and Rayleigh MIMO channels.
//!
//! Frame `f` of SNR point `p` draws every random quantity from ChaCha8 seeded
//! with the run seed on stream `(p << 48) | f`, so tallies do not depend on
//! how frames are spread over workers. Frames run in batches; the batch
//! results are folded in frame order and cut at the exact frame where the
//! stopping rule fires.

mod output;
mod par;
mod stats;
pub mod validate;

use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gldpc::{default_code, BpDecoder, BpOutput, GldpcCode, GldpcError};
use crate::idd::{transmit, IddConfig, IddError, IddReceiver};
use crate::modem::{bpsk_awgn_llr, Constellation, Interleaver, Modulation};
use crate::siso::SisoError;

pub use output::{metadata, metadata_path, write_csv, write_metadata, CSV_HEADER};
pub use par::{map_indexed, Execution};
pub use stats::{ebn0_to_esn0, noise_variance, wilson_interval, Z_95};

/// Identifier of the per-frame generator, recorded in result metadata.
pub const RNG_ID: &str = "ChaCha8Rng (rand_chacha 0.9) seed_from_u64(seed), stream (point << 48) | frame";

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Code(#[from] GldpcError),
    #[error(transparent)]
    Idd(#[from] IddError),
    #[error(transparent)]
    Siso(#[from] SisoError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    #[default]
    Awgn,
    Mimo,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Awgn => "awgn",
            Scenario::Mimo => "mimo",
        }
    }
}

/// Simulation settings. The AWGN scenario uses BPSK and only
/// `idd.iterations` (as `R`) and `idd.siso` from the receiver settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub scenario: Scenario,
    /// Code definition file; the built-in (1024, 643) construction when absent.
    pub code: Option<PathBuf>,
    pub ebn0_db: Vec<f64>,
    pub min_frames: u64,
    pub max_frames: u64,
    pub target_frame_errors: u64,
    pub nt: usize,
    pub nr: usize,
    pub modulation: Modulation,
    pub idd: IddConfig,
    pub seed: u64,
    /// Interleaver permutation seed; defaults to `seed`.
    pub interleaver_seed: Option<u64>,
    /// Frames dispatched per parallel batch.
    pub batch_frames: usize,
    pub output: Option<PathBuf>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            scenario: Scenario::Awgn,
            code: None,
            ebn0_db: vec![3.0],
            min_frames: 100,
            max_frames: 100_000,
            target_frame_errors: 100,
            nt: 4,
            nr: 4,
            modulation: Modulation::Qam16,
            idd: IddConfig {
                iterations: 20,
                ..IddConfig::default()
            },
            seed: 1,
            interleaver_seed: None,
            batch_frames: 256,
            output: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Config(m.to_string()));
        if self.ebn0_db.is_empty() {
            return bad("SNR list is empty");
        }
        if self.ebn0_db.iter().any(|x| !x.is_finite()) {
            return bad("SNR values must be finite");
        }
        if self.max_frames == 0 || self.min_frames > self.max_frames {
            return bad("need 0 < max_frames and min_frames <= max_frames");
        }
        if self.batch_frames == 0 {
            return bad("batch_frames must be positive");
        }
        if self.scenario == Scenario::Mimo && (self.nt == 0 || self.nr == 0) {
            return bad("antenna counts must be positive");
        }
        self.idd.validate()?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self, SimError> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }
}

/// Outcome of one simulated frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FrameOutcome {
    pub bit_errors: u64,
    pub frame_error: bool,
    pub bp_iterations: u64,
    pub detector_passes: u64,
}

/// Tallies of one SNR point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointResult {
    pub scenario: Scenario,
    pub ebn0_db: f64,
    pub esn0_db: f64,
    pub frames: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    pub bp_iterations: u64,
    pub detector_passes: u64,
    pub message_bits: usize,
    pub seed: u64,
    pub wall_time_s: f64,
}

impl PointResult {
    pub fn ber(&self) -> f64 {
        if self.frames == 0 {
            0.0
        } else {
            self.bit_errors as f64 / (self.frames as f64 * self.message_bits as f64)
        }
    }

    pub fn bler(&self) -> f64 {
        if self.frames == 0 {
            0.0
        } else {
            self.frame_errors as f64 / self.frames as f64
        }
    }

    pub fn bler_interval(&self) -> (f64, f64) {
        wilson_interval(self.frame_errors, self.frames, Z_95)
    }

    pub fn mean_bp_iterations(&self) -> f64 {
        ratio(self.bp_iterations, self.frames)
    }

    pub fn mean_detector_passes(&self) -> f64 {
        ratio(self.detector_passes, self.frames)
    }

    fn add(&mut self, f: &FrameOutcome) {
        self.frames += 1;
        self.bit_errors += f.bit_errors;
        self.frame_errors += u64::from(f.frame_error);
        self.bp_iterations += f.bp_iterations;
        self.detector_passes += f.detector_passes;
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub points: Vec<PointResult>,
}

/// Generator for frame `frame` of SNR point `point`.
pub fn frame_rng(seed: u64, point: usize, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((point as u64) << 48) | frame);
    rng
}

/// Uniform message bits, one `u64` draw per 64 bits, least significant bit first.
pub fn random_message(rng: &mut impl Rng, k: usize) -> Vec<u8> {
    let mut msg = Vec::with_capacity(k);
    while msg.len() < k {
        let w: u64 = rng.random();
        let take = (k - msg.len()).min(64);
        msg.extend((0..take).map(|b| ((w >> b) & 1) as u8));
    }
    msg
}

fn outcome(code: &GldpcCode, msg: &[u8], hard: &[u8], bp: u64, passes: u64) -> FrameOutcome {
    let bit_errors = code
        .systematic_positions()
        .iter()
        .zip(msg)
        .filter(|(&p, &m)| hard[p] != m)
        .count() as u64;
    FrameOutcome {
        bit_errors,
        frame_error: bit_errors > 0,
        bp_iterations: bp,
        detector_passes: passes,
    }
}

/// Stop once `max_frames` ran, or `target` frame errors were seen after at least `min_frames`.
pub fn should_stop(frames: u64, frame_errors: u64, cfg: &SimConfig) -> bool {
    frames >= cfg.max_frames || (frame_errors >= cfg.target_frame_errors && frames >= cfg.min_frames)
}

/// Progress callback: invoked from the coordinating thread after every batch.
pub type Progress<'a> = dyn Fn(&PointResult) + Sync + 'a;

pub struct Simulator<'a> {
    config: SimConfig,
    code: GldpcCode,
    interleaver: Interleaver,
    constellation: Constellation,
    execution: Execution,
    progress: Option<Box<Progress<'a>>>,
}

impl<'a> Simulator<'a> {
    /// Loads the code named by the configuration (or builds the default one).
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        let code = match &config.code {
            Some(path) => GldpcCode::load(path)?,
            None => default_code(),
        };
        Self::with_code(config, code)
    }

    pub fn with_code(config: SimConfig, code: GldpcCode) -> Result<Self, SimError> {
        config.validate()?;
        let constellation = Constellation::new(match config.scenario {
            Scenario::Awgn => Modulation::Bpsk,
            Scenario::Mimo => config.modulation,
        });
        if config.scenario == Scenario::Mimo
            && !code.len().is_multiple_of(config.nt * constellation.bits_per_symbol())
        {
            return Err(SimError::Config(format!(
                "code length {} is not a multiple of N_t·M_c = {}",
                code.len(),
                config.nt * constellation.bits_per_symbol()
            )));
        }
        let interleaver = Interleaver::random(code.len(), config.interleaver_seed.unwrap_or(config.seed));
        // fail early on bad decoder settings
        BpDecoder::new(&code, &config.idd.siso, config.idd.iterations)?;
        Ok(Simulator {
            config,
            code,
            interleaver,
            constellation,
            execution: Execution::default(),
            progress: None,
        })
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn with_progress(mut self, progress: impl Fn(&PointResult) + Sync + 'a) -> Self {
        self.progress = Some(Box::new(progress));
        self
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn code(&self) -> &GldpcCode {
        &self.code
    }

    pub fn interleaver(&self) -> &Interleaver {
        &self.interleaver
    }

    /// Es/N0 in dB at the given Eb/N0 for this scenario.
    pub fn esn0_db(&self, ebn0_db: f64) -> f64 {
        let (nt, nr) = match self.config.scenario {
            Scenario::Awgn => (1, 1),
            Scenario::Mimo => (self.config.nt, self.config.nr),
        };
        ebn0_to_esn0(
            ebn0_db,
            self.code.len(),
            self.code.dimension(),
            nt,
            nr,
            self.constellation.bits_per_symbol(),
        )
    }

    pub fn run(&self) -> Result<SimResult, SimError> {
        let points = self
            .config
            .ebn0_db
            .iter()
            .enumerate()
            .map(|(p, &ebn0)| self.run_point(p, ebn0))
            .collect::<Result<_, _>>()?;
        Ok(SimResult { points })
    }

    pub fn run_point(&self, point: usize, ebn0_db: f64) -> Result<PointResult, SimError> {
        let start = Instant::now();
        let esn0_db = self.esn0_db(ebn0_db);
        let mut result = PointResult {
            scenario: self.config.scenario,
            ebn0_db,
            esn0_db,
            frames: 0,
            bit_errors: 0,
            frame_errors: 0,
            bp_iterations: 0,
            detector_passes: 0,
            message_bits: self.code.dimension(),
            seed: self.config.seed,
            wall_time_s: 0.0,
        };
        let mut next = 0u64;
        'batches: while !should_stop(result.frames, result.frame_errors, &self.config) {
            let size = (self.config.batch_frames as u64).min(self.config.max_frames - next);
            let range = next as usize..(next + size) as usize;
            let outcomes = self.run_frames(point, esn0_db, range);
            next += size;
            for o in &outcomes {
                result.add(o);
                if should_stop(result.frames, result.frame_errors, &self.config) {
                    break 'batches;
                }
            }
            if let Some(cb) = &self.progress {
                cb(&result);
            }
        }
        result.wall_time_s = start.elapsed().as_secs_f64();
        if let Some(cb) = &self.progress {
            cb(&result);
        }
        Ok(result)
    }

    fn run_frames(&self, point: usize, esn0_db: f64, range: std::ops::Range<usize>) -> Vec<FrameOutcome> {
        match self.config.scenario {
            Scenario::Awgn => {
                let sigma2 = noise_variance(esn0_db, 1.0) / 2.0;
                map_indexed(
                    self.execution,
                    range,
                    || AwgnWorker::new(&self.code, &self.config),
                    |w, f| w.frame(self.config.seed, point, f as u64, sigma2),
                )
            }
            Scenario::Mimo => {
                let n0 = noise_variance(esn0_db, self.config.nt as f64);
                map_indexed(
                    self.execution,
                    range,
                    || {
                        IddReceiver::new(&self.code, self.constellation.clone(), &self.config.idd)
                            .expect("configuration validated")
                    },
                    |rx, f| self.mimo_frame(rx, point, f as u64, n0),
                )
            }
        }
    }

    /// Runs frame `frame` of point `point` on its own generator.
    pub fn mimo_frame(&self, rx: &mut IddReceiver<'_>, point: usize, frame: u64, n0: f64) -> FrameOutcome {
        let mut rng = frame_rng(self.config.seed, point, frame);
        let msg = random_message(&mut rng, self.code.dimension());
        let c = self.code.encode(&msg).expect("message has length K");
        let tx = transmit(
            &c,
            &self.interleaver,
            &self.constellation,
            self.config.nt,
            self.config.nr,
            n0,
            &mut rng,
        )
        .expect("frame dimensions validated");
        let out = rx.receive(&tx, &self.interleaver).expect("frame dimensions validated");
        outcome(&self.code, &msg, &out.hard, out.bp_iterations as u64, out.passes as u64)
    }
}

struct AwgnWorker<'c> {
    code: &'c GldpcCode,
    bp: BpDecoder<'c>,
    llr: Vec<f64>,
    out: BpOutput,
}

impl<'c> AwgnWorker<'c> {
    fn new(code: &'c GldpcCode, cfg: &SimConfig) -> Self {
        AwgnWorker {
            code,
            bp: BpDecoder::new(code, &cfg.idd.siso, cfg.idd.iterations).expect("configuration validated"),
            llr: vec![0.0; code.len()],
            out: BpOutput::default(),
        }
    }

    fn frame(&mut self, seed: u64, point: usize, frame: u64, sigma2: f64) -> FrameOutcome {
        let mut rng = frame_rng(seed, point, frame);
        let msg = random_message(&mut rng, self.code.dimension());
        let c = self.code.encode(&msg).expect("message has length K");
        let sigma = sigma2.sqrt();
        for (l, &b) in self.llr.iter_mut().zip(&c) {
            let n: f64 = StandardNormal.sample(&mut rng);
            let y = 1.0 - 2.0 * f64::from(b) + sigma * n;
            *l = bpsk_awgn_llr(y, sigma2).expect("positive noise variance");
        }
        self.bp.decode_into(&self.llr, &mut self.out);
        outcome(self.code, &msg, &self.out.hard, self.out.iterations as u64, 0)
    }
}

pub fn run_awgn(config: &SimConfig) -> Result<SimResult, SimError> {
    let cfg = SimConfig {
        scenario: Scenario::Awgn,
        ..config.clone()
    };
    Simulator::new(cfg)?.run()
}

pub fn run_mimo(config: &SimConfig) -> Result<SimResult, SimError> {
    let cfg = SimConfig {
        scenario: Scenario::Mimo,
        ..config.clone()
    };
    Simulator::new(cfg)?.run()
}
