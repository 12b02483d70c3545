//! Exact bitwise APP by summing over the whole codebook.

use crate::llr::{bit_cost, log_ratio, saturate};
use crate::polar::PolarLikeCode;

use super::SisoError;

/// Largest dimension the exhaustive decoder accepts.
pub const MAX_EXHAUSTIVE_DIMENSION: usize = 20;

#[derive(Debug, Clone)]
pub struct ExhaustiveDecoder {
    len: usize,
    codebook: Vec<u8>,
    log_mass: Vec<f64>,
    input: Vec<f64>,
}

impl ExhaustiveDecoder {
    pub fn new(code: &PolarLikeCode) -> Result<Self, SisoError> {
        if code.dimension() > MAX_EXHAUSTIVE_DIMENSION {
            return Err(SisoError::CodebookTooLarge {
                dimension: code.dimension(),
                limit: MAX_EXHAUSTIVE_DIMENSION,
            });
        }
        let codebook: Vec<u8> = code.codebook().into_iter().flatten().collect();
        Ok(ExhaustiveDecoder {
            len: code.len(),
            log_mass: vec![0.0; 1 << code.dimension()],
            codebook,
            input: vec![0.0; code.len()],
        })
    }

    /// Writes the exact APP LLRs for `llr_in` into `app`.
    pub fn app_into(&mut self, llr_in: &[f64], app: &mut [f64]) {
        let len = self.len;
        assert_eq!(llr_in.len(), len);
        for (x, &l) in self.input.iter_mut().zip(llr_in) {
            *x = saturate(l);
        }
        let mut peak = f64::NEG_INFINITY;
        for (w, c) in self.log_mass.iter_mut().zip(self.codebook.chunks_exact(len)) {
            *w = -c
                .iter()
                .zip(&self.input)
                .map(|(&b, &l)| bit_cost(l, b))
                .sum::<f64>();
            peak = peak.max(*w);
        }
        for (i, a) in app.iter_mut().enumerate() {
            let (mut s0, mut s1) = (0.0, 0.0);
            for (w, c) in self.log_mass.iter().zip(self.codebook.chunks_exact(len)) {
                let p = (w - peak).exp();
                if c[i] == 0 {
                    s0 += p;
                } else {
                    s1 += p;
                }
            }
            let l0 = if s0 > 0.0 { s0.ln() } else { f64::NEG_INFINITY };
            let l1 = if s1 > 0.0 { s1.ln() } else { f64::NEG_INFINITY };
            *a = log_ratio(l0, l1);
        }
    }
}
