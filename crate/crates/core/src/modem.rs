//! Gray-labelled square constellations, interleaving and BPSK channel LLRs.
//!
//! Every constellation is a product of one or two independent PAM axes. The
//! first bits of a label select the in-phase level and the remaining bits the
//! quadrature level, most significant bit first.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::llr::llr_to_prob;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModemError {
    #[error("expected length {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("bit count {0} is not a multiple of the bits per symbol")]
    PartialSymbol(usize),
    #[error("permutation is not a bijection")]
    NotPermutation,
    #[error("noise variance must be positive, got {0}")]
    Variance(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    Bpsk,
    Qpsk,
    #[default]
    Qam16,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Bpsk => 1,
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
        }
    }
}

/// One real axis: `levels[label]` is the amplitude for that `bits`-bit label.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub bits: usize,
    pub levels: Vec<f64>,
}

impl Axis {
    /// Mean and variance of the axis amplitude under independent bit priors (LLRs, MSB first).
    pub fn moments(&self, priors: &[f64]) -> (f64, f64) {
        let (mut mean, mut second) = (0.0, 0.0);
        for (label, &a) in self.levels.iter().enumerate() {
            let p: f64 = (0..self.bits)
                .map(|j| llr_to_prob(priors[j], self.bit(label, j)))
                .product();
            mean += p * a;
            second += p * a * a;
        }
        (mean, (second - mean * mean).max(0.0))
    }

    /// Max-log LLRs `(d₁ − d₀)/ν` where `d_b` is the squared distance from
    /// `x` to the nearest level whose bit `j` equals `b`.
    pub fn max_log_llrs(&self, x: f64, nu: f64, out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate().take(self.bits) {
            let (mut d0, mut d1) = (f64::INFINITY, f64::INFINITY);
            for (label, &a) in self.levels.iter().enumerate() {
                let d = (x - a) * (x - a);
                if self.bit(label, j) == 0 {
                    d0 = d0.min(d);
                } else {
                    d1 = d1.min(d);
                }
            }
            *o = (d1 - d0) / nu;
        }
    }

    #[inline]
    fn bit(&self, label: usize, j: usize) -> u8 {
        ((label >> (self.bits - 1 - j)) & 1) as u8
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    modulation: Modulation,
    axes: Vec<Axis>,
    points: Vec<Complex64>,
}

impl Constellation {
    pub fn new(modulation: Modulation) -> Self {
        let axes = match modulation {
            Modulation::Bpsk => vec![Axis {
                bits: 1,
                levels: vec![1.0, -1.0],
            }],
            Modulation::Qpsk => {
                let a = std::f64::consts::FRAC_1_SQRT_2;
                let axis = Axis {
                    bits: 1,
                    levels: vec![a, -a],
                };
                vec![axis.clone(), axis]
            }
            Modulation::Qam16 => {
                let s = 10f64.sqrt().recip();
                // labels 00, 01, 10, 11
                let axis = Axis {
                    bits: 2,
                    levels: vec![-3.0 * s, -s, 3.0 * s, s],
                };
                vec![axis.clone(), axis]
            }
        };
        let m = modulation.bits_per_symbol();
        let points = (0..1usize << m)
            .map(|label| match axes.as_slice() {
                [i] => Complex64::new(i.levels[label], 0.0),
                [i, q] => Complex64::new(i.levels[label >> q.bits], q.levels[label & ((1 << q.bits) - 1)]),
                _ => unreachable!(),
            })
            .collect();
        Constellation {
            modulation,
            axes,
            points,
        }
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.modulation.bits_per_symbol()
    }

    /// Points indexed by label (first bit is the most significant).
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// In-phase axis, then quadrature axis when present.
    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn label_of(&self, bits: &[u8]) -> usize {
        bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b & 1))
    }

    pub fn map_bits(&self, bits: &[u8]) -> Result<Vec<Complex64>, ModemError> {
        let m = self.bits_per_symbol();
        if !bits.len().is_multiple_of(m) {
            return Err(ModemError::PartialSymbol(bits.len()));
        }
        Ok(bits
            .chunks_exact(m)
            .map(|c| self.points[self.label_of(c)])
            .collect())
    }

    /// Mean and variance `E|x − x̂|²` of a symbol under bit priors (LLRs, label order).
    pub fn soft_symbol(&self, priors: &[f64]) -> (Complex64, f64) {
        let (mut mean, mut var) = (Complex64::new(0.0, 0.0), 0.0);
        let mut offset = 0;
        for (a, axis) in self.axes.iter().enumerate() {
            let (m, v) = axis.moments(&priors[offset..offset + axis.bits]);
            if a == 0 {
                mean.re = m;
            } else {
                mean.im = m;
            }
            var += v;
            offset += axis.bits;
        }
        (mean, var)
    }

    /// Per-bit max-log LLRs of an estimate `x` with noise-plus-interference variance `nu`.
    pub fn max_log_llrs(&self, x: Complex64, nu: f64, out: &mut [f64]) {
        let mut offset = 0;
        for (a, axis) in self.axes.iter().enumerate() {
            let v = if a == 0 { x.re } else { x.im };
            axis.max_log_llrs(v, nu, &mut out[offset..offset + axis.bits]);
            offset += axis.bits;
        }
    }
}

/// Bit permutation `out[k] = in[π[k]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<usize>,
}

impl Interleaver {
    pub fn identity(len: usize) -> Self {
        Interleaver {
            perm: (0..len).collect(),
        }
    }

    /// Fisher-Yates permutation drawn from `seed`.
    pub fn random(len: usize, seed: u64) -> Self {
        let mut perm: Vec<usize> = (0..len).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Interleaver { perm }
    }

    pub fn from_perm(perm: Vec<usize>) -> Result<Self, ModemError> {
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return Err(ModemError::NotPermutation);
            }
        }
        Ok(Interleaver { perm })
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn interleave_into<T: Copy>(&self, input: &[T], out: &mut [T]) {
        assert_eq!(input.len(), self.len());
        assert_eq!(out.len(), self.len());
        for (o, &p) in out.iter_mut().zip(&self.perm) {
            *o = input[p];
        }
    }

    pub fn deinterleave_into<T: Copy>(&self, input: &[T], out: &mut [T]) {
        assert_eq!(input.len(), self.len());
        assert_eq!(out.len(), self.len());
        for (&x, &p) in input.iter().zip(&self.perm) {
            out[p] = x;
        }
    }

    pub fn interleave<T: Copy>(&self, input: &[T]) -> Result<Vec<T>, ModemError> {
        self.check_len(input.len())?;
        Ok(self.perm.iter().map(|&p| input[p]).collect())
    }

    pub fn deinterleave<T: Copy + Default>(&self, input: &[T]) -> Result<Vec<T>, ModemError> {
        self.check_len(input.len())?;
        let mut out = vec![T::default(); input.len()];
        self.deinterleave_into(input, &mut out);
        Ok(out)
    }

    fn check_len(&self, actual: usize) -> Result<(), ModemError> {
        if actual == self.len() {
            Ok(())
        } else {
            Err(ModemError::LengthMismatch {
                expected: self.len(),
                actual,
            })
        }
    }
}

/// Channel LLR `2y/σ²` of unit-energy BPSK in real Gaussian noise of variance `σ²`.
pub fn bpsk_awgn_llr(y: f64, sigma2: f64) -> Result<f64, ModemError> {
    if sigma2 > 0.0 {
        Ok(2.0 * y / sigma2)
    } else {
        Err(ModemError::Variance(sigma2))
    }
}
