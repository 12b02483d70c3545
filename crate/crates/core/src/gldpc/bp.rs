//! Flooding belief propagation with component-code SISO check nodes.

use crate::llr::hard_decision;
use crate::siso::{SisoConfig, SisoDecoder, SisoError, SoftOutput};

use super::GldpcCode;

/// Result of one BP run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BpOutput {
    /// `app` per variable node; `ext = app − llr_in`.
    pub soft: SoftOutput,
    pub hard: Vec<u8>,
    pub converged: bool,
    pub iterations: usize,
}

/// Variable-to-check messages for every edge (`k·degree + j`) given the
/// current check-to-variable messages: `L_in[v]` plus the messages on all
/// other edges of `v`.
pub fn variable_messages(code: &GldpcCode, llr_in: &[f64], c2v: &[f64]) -> Vec<f64> {
    let mut v2c = vec![0.0; c2v.len()];
    for (v, &l) in llr_in.iter().enumerate() {
        let edges = code.edges_of(v);
        for &e in edges {
            v2c[e] = l + edges.iter().filter(|&&o| o != e).map(|&o| c2v[o]).sum::<f64>();
        }
    }
    v2c
}

/// Per-frame BP state for one code. Reuse it across frames to avoid allocation.
#[derive(Debug, Clone)]
pub struct BpDecoder<'c> {
    code: &'c GldpcCode,
    siso: SisoDecoder,
    max_iterations: usize,
    stop_early: bool,
    c2v: Vec<f64>,
    c2v_next: Vec<f64>,
    local_in: Vec<f64>,
    local_out: SoftOutput,
    check_words: Vec<u64>,
}

impl<'c> BpDecoder<'c> {
    pub fn new(
        code: &'c GldpcCode,
        siso: &SisoConfig,
        max_iterations: usize,
    ) -> Result<Self, SisoError> {
        let degree = code.degree();
        let edges = code.check_count() * degree;
        Ok(BpDecoder {
            code,
            siso: SisoDecoder::new(code.component(), siso)?,
            max_iterations: max_iterations.max(1),
            stop_early: true,
            c2v: vec![0.0; edges],
            c2v_next: vec![0.0; edges],
            local_in: vec![0.0; degree],
            local_out: SoftOutput::zeros(degree),
            check_words: vec![0; degree.div_ceil(64)],
        })
    }

    /// Disables the codeword check between iterations so exactly `R` iterations run.
    pub fn with_stop_early(mut self, stop_early: bool) -> Self {
        self.stop_early = stop_early;
        self
    }

    pub fn code(&self) -> &'c GldpcCode {
        self.code
    }

    pub fn max_iterations(&self) -> usize {
        self.max_iterations
    }

    pub fn set_max_iterations(&mut self, r: usize) {
        self.max_iterations = r.max(1);
    }

    /// Check-to-variable messages after the last iteration, indexed by edge.
    pub fn check_messages(&self) -> &[f64] {
        &self.c2v
    }

    pub fn decode(&mut self, llr_in: &[f64]) -> BpOutput {
        let mut out = BpOutput::default();
        self.decode_into(llr_in, &mut out);
        out
    }

    /// Runs up to `R` iterations from zero check messages.
    pub fn decode_into(&mut self, llr_in: &[f64], out: &mut BpOutput) {
        let code = self.code;
        let len = code.len();
        let degree = code.degree();
        assert_eq!(llr_in.len(), len, "LLR length must equal block length");
        self.c2v.fill(0.0);
        out.soft.app.resize(len, 0.0);
        out.soft.ext.resize(len, 0.0);
        out.hard.resize(len, 0);
        out.converged = false;
        out.iterations = 0;

        for t in 0..self.max_iterations {
            for k in 0..code.check_count() {
                let row = code.adjacency().row(k);
                let perm = code.permutation(k);
                for (j, &v) in row.iter().enumerate() {
                    let e = k * degree + j;
                    let mut m = llr_in[v];
                    for &o in code.edges_of(v) {
                        if o != e {
                            m += self.c2v[o];
                        }
                    }
                    self.local_in[perm[j]] = m;
                }
                self.siso
                    .decode_into(&self.local_in, None, t, &mut self.local_out);
                for (j, &p) in perm.iter().enumerate() {
                    self.c2v_next[k * degree + j] = self.local_out.ext[p];
                }
            }
            std::mem::swap(&mut self.c2v, &mut self.c2v_next);

            for v in 0..len {
                let a = llr_in[v] + code.edges_of(v).iter().map(|&e| self.c2v[e]).sum::<f64>();
                out.soft.app[v] = a;
                out.hard[v] = hard_decision(a);
            }
            out.iterations = t + 1;
            if self.stop_early && self.all_checks_pass(&out.hard) {
                out.converged = true;
                break;
            }
        }
        if !self.stop_early {
            out.converged = self.all_checks_pass(&out.hard);
        }
        for ((x, &a), &l) in out.soft.ext.iter_mut().zip(&out.soft.app).zip(llr_in) {
            *x = a - l;
        }
    }

    fn all_checks_pass(&mut self, hard: &[u8]) -> bool {
        (0..self.code.check_count())
            .all(|k| self.code.check_satisfied(k, hard, &mut self.check_words))
    }
}

/// One-shot BP decoding with `R` iterations.
pub fn bp_decode(
    code: &GldpcCode,
    llr_in: &[f64],
    max_iterations: usize,
    siso: &SisoConfig,
) -> Result<BpOutput, SisoError> {
    Ok(BpDecoder::new(code, siso, max_iterations)?.decode(llr_in))
}
