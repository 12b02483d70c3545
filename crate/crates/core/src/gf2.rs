//! Dense matrix and vector algebra over GF(2).
//!
//! Rows are stored as packed `u64` words. Bit vectors at the API boundary are
//! plain `u8` slices holding `0` or `1`, which is what the encoders and
//! decoders in this crate pass around.

use std::fmt;

use thiserror::Error;

/// Errors from GF(2) matrix operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Gf2Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("ragged input: row {row} has {len} columns, expected {expected}")]
    RaggedRows {
        row: usize,
        len: usize,
        expected: usize,
    },
}

const WORD: usize = 64;

fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

/// Packs a 0/1 slice into little-endian `u64` words.
pub fn pack_bits(bits: &[u8]) -> Vec<u64> {
    let mut words = vec![0u64; words_for(bits.len())];
    for (i, &b) in bits.iter().enumerate() {
        if b & 1 == 1 {
            words[i / WORD] |= 1 << (i % WORD);
        }
    }
    words
}

/// Parity of the bitwise AND of two packed vectors.
#[inline]
pub fn dot_parity(a: &[u64], b: &[u64]) -> bool {
    a.iter()
        .zip(b)
        .fold(0u32, |acc, (x, y)| acc ^ (x & y).count_ones())
        & 1
        == 1
}

/// A dense `rows × cols` matrix over GF(2).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

/// Result of Gauss-Jordan elimination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowEchelon {
    /// Reduced row-echelon form with zero rows removed.
    pub reduced: BitMatrix,
    pub rank: usize,
    /// Pivot column of each row of `reduced`, ascending.
    pub pivot_cols: Vec<usize>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        BitMatrix {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                if f(r, c) {
                    m.set(r, c, true);
                }
            }
        }
        m
    }

    /// Builds a matrix from 0/1 rows. All rows must have the same length.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self, Gf2Error> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = Self::zeros(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Gf2Error::RaggedRows {
                    row: r,
                    len: row.len(),
                    expected: cols,
                });
            }
            m.row_words_mut(r).copy_from_slice(&pack_bits(row));
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        debug_assert!(r < self.rows && c < self.cols);
        (self.data[r * self.stride + c / WORD] >> (c % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        debug_assert!(r < self.rows && c < self.cols);
        let w = &mut self.data[r * self.stride + c / WORD];
        let mask = 1u64 << (c % WORD);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.stride..(r + 1) * self.stride]
    }

    #[inline]
    fn row_words_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.data[r * self.stride..(r + 1) * self.stride]
    }

    pub fn row_bits(&self, r: usize) -> Vec<u8> {
        (0..self.cols).map(|c| self.get(r, c) as u8).collect()
    }

    pub fn row_weight(&self, r: usize) -> usize {
        self.row_words(r).iter().map(|w| w.count_ones() as usize).sum()
    }

    /// `row[dst] ^= row[src]`.
    pub fn xor_row_into(&mut self, dst: usize, src: usize) {
        if dst == src {
            self.row_words_mut(dst).fill(0);
            return;
        }
        let (s, d) = (src * self.stride, dst * self.stride);
        for k in 0..self.stride {
            let w = self.data[s + k];
            self.data[d + k] ^= w;
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for k in 0..self.stride {
            self.data.swap(a * self.stride + k, b * self.stride + k);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    pub fn transpose(&self) -> BitMatrix {
        BitMatrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &BitMatrix) -> Result<BitMatrix, Gf2Error> {
        if self.cols != other.cols {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.cols,
                actual: other.cols,
            });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(BitMatrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            stride: self.stride,
            data,
        })
    }

    pub fn kronecker(&self, other: &BitMatrix) -> BitMatrix {
        BitMatrix::from_fn(
            self.rows * other.rows,
            self.cols * other.cols,
            |r, c| {
                self.get(r / other.rows, c / other.cols) && other.get(r % other.rows, c % other.cols)
            },
        )
    }

    /// `base^{⊗n}`; the zeroth power is the 1×1 identity.
    pub fn kronecker_power(base: &BitMatrix, n: u32) -> BitMatrix {
        (0..n).fold(BitMatrix::identity(1), |acc, _| acc.kronecker(base))
    }

    /// Row-vector product `v · M`.
    pub fn vec_mul(&self, v: &[u8]) -> Result<Vec<u8>, Gf2Error> {
        if v.len() != self.rows {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.rows,
                actual: v.len(),
            });
        }
        let mut acc = vec![0u64; self.stride];
        for (r, &b) in v.iter().enumerate() {
            if b & 1 == 1 {
                for (a, w) in acc.iter_mut().zip(self.row_words(r)) {
                    *a ^= w;
                }
            }
        }
        Ok((0..self.cols)
            .map(|c| ((acc[c / WORD] >> (c % WORD)) & 1) as u8)
            .collect())
    }

    /// Column-vector product `M · vᵀ` (the syndrome when `M` is a parity-check matrix).
    pub fn mul_vec(&self, v: &[u8]) -> Result<Vec<u8>, Gf2Error> {
        if v.len() != self.cols {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.cols,
                actual: v.len(),
            });
        }
        let packed = pack_bits(v);
        Ok((0..self.rows)
            .map(|r| dot_parity(self.row_words(r), &packed) as u8)
            .collect())
    }

    /// Gauss-Jordan elimination to reduced row-echelon form.
    ///
    /// The pivot for each column is the lowest-index remaining row with a one
    /// there, so the output is a deterministic function of the input.
    pub fn row_reduce(&self) -> RowEchelon {
        let mut m = self.clone();
        let mut rank = 0;
        let mut pivot_cols = Vec::new();
        for col in 0..self.cols {
            if rank == m.rows {
                break;
            }
            let Some(p) = (rank..m.rows).find(|&r| m.get(r, col)) else {
                continue;
            };
            m.swap_rows(rank, p);
            for r in 0..m.rows {
                if r != rank && m.get(r, col) {
                    m.xor_row_into(r, rank);
                }
            }
            pivot_cols.push(col);
            rank += 1;
        }
        m.rows = rank;
        m.data.truncate(rank * m.stride);
        RowEchelon {
            reduced: m,
            rank,
            pivot_cols,
        }
    }

    pub fn rank(&self) -> usize {
        self.row_reduce().rank
    }

    /// Basis of `{x : M·xᵀ = 0}`, one vector per non-pivot column in ascending order.
    pub fn null_space(&self) -> BitMatrix {
        let RowEchelon {
            reduced,
            pivot_cols,
            ..
        } = self.row_reduce();
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivot_cols {
            is_pivot[p] = true;
        }
        let free: Vec<usize> = (0..self.cols).filter(|&c| !is_pivot[c]).collect();
        let mut basis = BitMatrix::zeros(free.len(), self.cols);
        for (k, &f) in free.iter().enumerate() {
            basis.set(k, f, true);
            for (r, &p) in pivot_cols.iter().enumerate() {
                if reduced.get(r, f) {
                    basis.set(k, p, true);
                }
            }
        }
        basis
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let s: String = (0..self.cols)
                .map(|c| if self.get(r, c) { '1' } else { '0' })
                .collect();
            writeln!(f, "  {s}")?;
        }
        write!(f, "]")
    }
}

/// The 2×2 kernel `[[1,0],[1,1]]`.
pub fn hadamard_kernel() -> BitMatrix {
    BitMatrix::from_rows(&[[1u8, 0], [1, 1]]).expect("square literal")
}
