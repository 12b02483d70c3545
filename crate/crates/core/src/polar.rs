//! Polar-like codes: a polar transform preceded by an upper-triangular
//! pre-transform expressed as dynamic frozen constraints.
//!
//! Indices are 0-based throughout the crate and in the JSON code files.
//! Position `i` here is position `i + 1` in the usual 1-based polar notation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf2::{hadamard_kernel, BitMatrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("block length exponent {0} is too large")]
    LengthTooLarge(u32),
    #[error("information index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("information set has duplicate index {0}")]
    DuplicateIndex(usize),
    #[error("constraint on {frozen} refers to {source_index}, which is not an earlier information bit")]
    BadConstraint { frozen: usize, source_index: usize },
    #[error("constraint given for information position {0}")]
    ConstraintOnInfo(usize),
    #[error("invalid Reed-Muller parameters r={r}, m={m}")]
    InvalidRm { r: u32, m: u32 },
    #[error("message length {actual} does not match dimension {expected}")]
    MessageLength { expected: usize, actual: usize },
}

/// A binary polar-like code of length `2^n`.
///
/// Frozen position `i` takes the XOR of the input bits listed in
/// `constraints[i]`, all of which are earlier information positions. Static
/// frozen positions have an empty list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolarLikeCode {
    n: u32,
    info_set: Vec<usize>,
    frozen: Vec<bool>,
    constraints: Vec<Vec<usize>>,
}

impl PolarLikeCode {
    pub fn new(
        n: u32,
        info_set: &[usize],
        dyn_constraints: &BTreeMap<usize, Vec<usize>>,
    ) -> Result<Self, CodeError> {
        if n > 20 {
            return Err(CodeError::LengthTooLarge(n));
        }
        let len = 1usize << n;
        let mut frozen = vec![true; len];
        for &i in info_set {
            if i >= len {
                return Err(CodeError::IndexOutOfRange { index: i, len });
            }
            if !frozen[i] {
                return Err(CodeError::DuplicateIndex(i));
            }
            frozen[i] = false;
        }
        let mut constraints = vec![Vec::new(); len];
        for (&i, sources) in dyn_constraints {
            if i >= len {
                return Err(CodeError::IndexOutOfRange { index: i, len });
            }
            if !frozen[i] {
                if sources.is_empty() {
                    continue;
                }
                return Err(CodeError::ConstraintOnInfo(i));
            }
            let mut s = sources.clone();
            s.sort_unstable();
            s.dedup();
            if let Some(&bad) = s.iter().find(|&&j| j >= i || frozen[j]) {
                return Err(CodeError::BadConstraint {
                    frozen: i,
                    source_index: bad,
                });
            }
            constraints[i] = s;
        }
        let mut info_set = info_set.to_vec();
        info_set.sort_unstable();
        Ok(PolarLikeCode {
            n,
            info_set,
            frozen,
            constraints,
        })
    }

    /// Code with all frozen bits fixed to zero.
    pub fn static_frozen(n: u32, info_set: &[usize]) -> Result<Self, CodeError> {
        Self::new(n, info_set, &BTreeMap::new())
    }

    /// Code with the convolutional-style constraints of [`pac_constraints`].
    pub fn with_pac_constraints(n: u32, info_set: &[usize]) -> Result<Self, CodeError> {
        let len = 1usize << n.min(20);
        Self::new(n, info_set, &pac_constraints(info_set, len))
    }

    /// Reed-Muller code RM(r, m) as a static-frozen polar-like code.
    pub fn reed_muller(r: u32, m: u32) -> Result<Self, CodeError> {
        if r > m || m > 20 {
            return Err(CodeError::InvalidRm { r, m });
        }
        Self::static_frozen(m, &rm_info_set(r, m))
    }

    #[inline]
    pub fn log_len(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn len(&self) -> usize {
        1 << self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn dimension(&self) -> usize {
        self.info_set.len()
    }

    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    pub fn frozen_set(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.frozen[i]).collect()
    }

    #[inline]
    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen[i]
    }

    /// Information positions that frozen position `i` depends on.
    #[inline]
    pub fn constraint(&self, i: usize) -> &[usize] {
        &self.constraints[i]
    }

    pub fn is_static(&self) -> bool {
        self.constraints.iter().all(Vec::is_empty)
    }

    pub fn dyn_constraints(&self) -> BTreeMap<usize, Vec<usize>> {
        self.constraints
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_empty())
            .map(|(i, c)| (i, c.clone()))
            .collect()
    }

    /// Fills frozen positions of `u` in place from its information positions.
    pub fn apply_constraints(&self, u: &mut [u8]) {
        for i in 0..self.len() {
            if self.frozen[i] {
                u[i] = self.constraints[i].iter().fold(0, |acc, &j| acc ^ u[j]);
            }
        }
    }

    /// Transform input `u^N` built from a message: info bits placed, frozen bits resolved.
    pub fn input_vector(&self, message: &[u8]) -> Result<Vec<u8>, CodeError> {
        if message.len() != self.dimension() {
            return Err(CodeError::MessageLength {
                expected: self.dimension(),
                actual: message.len(),
            });
        }
        let mut u = vec![0u8; self.len()];
        for (&i, &b) in self.info_set.iter().zip(message) {
            u[i] = b & 1;
        }
        self.apply_constraints(&mut u);
        Ok(u)
    }

    pub fn encode(&self, message: &[u8]) -> Result<Vec<u8>, CodeError> {
        let mut u = self.input_vector(message)?;
        polar_transform(&mut u);
        Ok(u)
    }

    /// `T = I + R` with `R[j][i] = 1` for each `j` in the constraint of frozen `i`.
    pub fn pre_transform(&self) -> BitMatrix {
        let mut t = BitMatrix::identity(self.len());
        for (i, c) in self.constraints.iter().enumerate() {
            for &j in c {
                t.set(j, i, true);
            }
        }
        t
    }

    /// Generator matrix: row `k` is the codeword of the `k`-th unit message.
    pub fn generator_matrix(&self) -> BitMatrix {
        let k = self.dimension();
        let mut g = BitMatrix::zeros(k, self.len());
        let mut msg = vec![0u8; k];
        for r in 0..k {
            msg[r] = 1;
            let c = self.encode(&msg).expect("unit message has length K");
            for (col, &b) in c.iter().enumerate() {
                if b == 1 {
                    g.set(r, col, true);
                }
            }
            msg[r] = 0;
        }
        g
    }

    /// `(N−K) × N` parity-check matrix spanning the dual code.
    pub fn parity_check_matrix(&self) -> BitMatrix {
        self.generator_matrix().null_space()
    }

    /// All `2^K` codewords in message order. Intended for small codes.
    pub fn codebook(&self) -> Vec<Vec<u8>> {
        let k = self.dimension();
        assert!(k <= 24, "codebook enumeration limited to K <= 24");
        (0u64..1 << k)
            .map(|m| {
                let msg: Vec<u8> = (0..k).map(|b| ((m >> b) & 1) as u8).collect();
                self.encode(&msg).expect("message length matches")
            })
            .collect()
    }

    pub fn to_file(&self) -> PolarCodeFile {
        PolarCodeFile {
            n: self.n,
            info_set: self.info_set.clone(),
            dyn_constraints: self
                .dyn_constraints()
                .into_iter()
                .map(|(i, c)| (i.to_string(), c))
                .collect(),
        }
    }
}

/// JSON form `{ "n": .., "info_set": [..], "dyn_constraints": { "i": [j, ..] } }`, 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolarCodeFile {
    pub n: u32,
    pub info_set: Vec<usize>,
    #[serde(default)]
    pub dyn_constraints: BTreeMap<String, Vec<usize>>,
}

#[derive(Debug, Error)]
pub enum CodeFileError {
    #[error("constraint key {0:?} is not an index")]
    BadKey(String),
    #[error(transparent)]
    Code(#[from] CodeError),
}

impl TryFrom<PolarCodeFile> for PolarLikeCode {
    type Error = CodeFileError;

    fn try_from(f: PolarCodeFile) -> Result<Self, Self::Error> {
        let mut dc = BTreeMap::new();
        for (k, v) in f.dyn_constraints {
            let i: usize = k.trim().parse().map_err(|_| CodeFileError::BadKey(k.clone()))?;
            dc.insert(i, v);
        }
        Ok(PolarLikeCode::new(f.n, &f.info_set, &dc)?)
    }
}

impl Serialize for PolarLikeCode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_file().serialize(s)
    }
}

impl<'de> Deserialize<'de> for PolarLikeCode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let f = PolarCodeFile::deserialize(d)?;
        PolarLikeCode::try_from(f).map_err(serde::de::Error::custom)
    }
}

/// In-place `u ← u · F^{⊗n}` via the butterfly network.
pub fn polar_transform(u: &mut [u8]) {
    let len = u.len();
    debug_assert!(len.is_power_of_two());
    let mut half = 1;
    while half < len {
        for block in (0..len).step_by(2 * half) {
            for k in block..block + half {
                u[k] ^= u[k + half];
            }
        }
        half *= 2;
    }
}

/// `F^{⊗n}` as an explicit matrix.
pub fn polar_matrix(n: u32) -> BitMatrix {
    BitMatrix::kronecker_power(&hadamard_kernel(), n)
}

/// Information set of RM(r, m): indices whose binary weight is at least `m − r`.
pub fn rm_info_set(r: u32, m: u32) -> Vec<usize> {
    (0..1usize << m)
        .filter(|i| i.count_ones() >= m - r)
        .collect()
}

/// Dynamic frozen constraints `{i−2, i−3, i−5, i−6} ∩ A` for every frozen `i`.
pub fn pac_constraints(info_set: &[usize], len: usize) -> BTreeMap<usize, Vec<usize>> {
    let mut is_info = vec![false; len];
    for &i in info_set {
        if i < len {
            is_info[i] = true;
        }
    }
    let mut out = BTreeMap::new();
    for i in (0..len).filter(|&i| !is_info[i]) {
        let mut c: Vec<usize> = [2usize, 3, 5, 6]
            .iter()
            .filter_map(|&d| i.checked_sub(d))
            .filter(|&j| is_info[j])
            .collect();
        c.sort_unstable();
        if !c.is_empty() {
            out.insert(i, c);
        }
    }
    out
}
