//! Generalized LDPC codes whose check nodes are polar-like component codes.
//!
//! The parity-check matrix is assembled by replacing the `j`-th one in row
//! `k` of the adjacency matrix with column `perm_k[j]` of the component
//! parity-check matrix, then row-reduced to obtain a systematic encoder.

mod bp;

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::gf2::{dot_parity, pack_bits, BitMatrix};
use crate::polar::{CodeFileError, PolarCodeFile, PolarLikeCode};

pub use bp::{bp_decode, variable_messages, BpDecoder, BpOutput};

/// Seed whose permutation gives the (1024, 643) code for `ñ = 32` and RM(3,5).
pub const DEFAULT_PERM_SEED: u64 = 1;
/// Extra seeds tried when a construction misses its target dimension.
pub const SEED_RETRIES: u64 = 16;

#[derive(Debug, Error)]
pub enum GldpcError {
    #[error("block size must be at least 2, got {0}")]
    BlockSize(usize),
    #[error("component length {component} does not match check degree {degree}")]
    ComponentLength { component: usize, degree: usize },
    #[error("permutation for check {0} is not a bijection of the component positions")]
    BadPermutation(usize),
    #[error("variable node {vn} out of range in check {check}")]
    BadEdge { check: usize, vn: usize },
    #[error("code has no information bits (rank {rank} of {len})")]
    NoInformation { rank: usize, len: usize },
    #[error("no permutation seed in {first}..{last} gave dimension {target}")]
    DimensionNotReached { first: u64, last: u64, target: usize },
    #[error("message length {actual} does not match dimension {expected}")]
    MessageLength { expected: usize, actual: usize },
    #[error(transparent)]
    Component(#[from] CodeFileError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Check-to-variable adjacency: `rows[k]` lists the variable nodes of check `k` in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    vn_count: usize,
    rows: Vec<Vec<usize>>,
}

impl AdjacencyMatrix {
    pub fn new(vn_count: usize, mut rows: Vec<Vec<usize>>) -> Result<Self, GldpcError> {
        for (k, row) in rows.iter_mut().enumerate() {
            row.sort_unstable();
            row.dedup();
            if let Some(&vn) = row.iter().find(|&&v| v >= vn_count) {
                return Err(GldpcError::BadEdge { check: k, vn });
            }
        }
        Ok(AdjacencyMatrix { vn_count, rows })
    }

    /// Two block rows of `ñ × ñ` blocks: `[γ⁰ … γ⁰]` over `[γ⁰ γ¹ … γ^{ñ−1}]`,
    /// with `γ` the identity rotated right by one position.
    pub fn gamma0(n_tilde: usize) -> Result<Self, GldpcError> {
        if n_tilde < 2 {
            return Err(GldpcError::BlockSize(n_tilde));
        }
        let mut rows = Vec::with_capacity(2 * n_tilde);
        for r in 0..n_tilde {
            rows.push((0..n_tilde).map(|b| b * n_tilde + r).collect());
        }
        for r in 0..n_tilde {
            rows.push((0..n_tilde).map(|b| b * n_tilde + (r + b) % n_tilde).collect());
        }
        Self::new(n_tilde * n_tilde, rows)
    }

    pub fn check_count(&self) -> usize {
        self.rows.len()
    }

    pub fn vn_count(&self) -> usize {
        self.vn_count
    }

    pub fn row(&self, k: usize) -> &[usize] {
        &self.rows[k]
    }

    pub fn column_weights(&self) -> Vec<usize> {
        let mut w = vec![0; self.vn_count];
        for row in &self.rows {
            for &v in row {
                w[v] += 1;
            }
        }
        w
    }

    pub fn to_bit_matrix(&self) -> BitMatrix {
        let mut m = BitMatrix::zeros(self.rows.len(), self.vn_count);
        for (k, row) in self.rows.iter().enumerate() {
            for &v in row {
                m.set(k, v, true);
            }
        }
        m
    }
}

/// A GLDPC code with one polar-like component code shared by every check.
#[derive(Debug, Clone)]
pub struct GldpcCode {
    adjacency: AdjacencyMatrix,
    component: PolarLikeCode,
    component_h: Vec<Vec<u64>>,
    perms: Vec<Vec<usize>>,
    n_tilde: Option<usize>,
    perm_seed: Option<u64>,
    parity: BitMatrix,
    rank: usize,
    pivot_cols: Vec<usize>,
    info_cols: Vec<usize>,
    encoder_rows: Vec<Vec<u64>>,
    // CSR edge list per variable node; edge e = k·degree + j
    vn_edge_start: Vec<usize>,
    vn_edges: Vec<usize>,
}

impl GldpcCode {
    /// Assembles a code from an adjacency matrix, the component code and one
    /// slot-to-component-position permutation per check.
    pub fn from_parts(
        adjacency: AdjacencyMatrix,
        component: PolarLikeCode,
        perms: Vec<Vec<usize>>,
    ) -> Result<Self, GldpcError> {
        let degree = component.len();
        for (k, row) in adjacency.rows.iter().enumerate() {
            if row.len() != degree {
                return Err(GldpcError::ComponentLength {
                    component: degree,
                    degree: row.len(),
                });
            }
            let p = perms.get(k).ok_or(GldpcError::BadPermutation(k))?;
            let mut seen = vec![false; degree];
            for &x in p {
                if x >= degree || std::mem::replace(&mut seen[x], true) {
                    return Err(GldpcError::BadPermutation(k));
                }
            }
            if p.len() != degree {
                return Err(GldpcError::BadPermutation(k));
            }
        }
        let len = adjacency.vn_count;
        let comp_h = component.parity_check_matrix();
        let mut h = BitMatrix::zeros(adjacency.check_count() * comp_h.rows(), len);
        for (k, row) in adjacency.rows.iter().enumerate() {
            for r in 0..comp_h.rows() {
                for (j, &v) in row.iter().enumerate() {
                    if comp_h.get(r, perms[k][j]) {
                        h.set(k * comp_h.rows() + r, v, true);
                    }
                }
            }
        }
        let echelon = h.row_reduce();
        let rank = echelon.rank;
        if rank >= len {
            return Err(GldpcError::NoInformation { rank, len });
        }
        let mut is_pivot = vec![false; len];
        for &p in &echelon.pivot_cols {
            is_pivot[p] = true;
        }
        let info_cols: Vec<usize> = (0..len).filter(|&c| !is_pivot[c]).collect();
        let encoder_rows = echelon
            .pivot_cols
            .iter()
            .enumerate()
            .map(|(r, &p)| {
                let mut bits = echelon.reduced.row_bits(r);
                bits[p] = 0;
                pack_bits(&bits)
            })
            .collect();

        let mut per_vn: Vec<Vec<usize>> = vec![Vec::new(); len];
        for (k, row) in adjacency.rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                per_vn[v].push(k * degree + j);
            }
        }
        let mut vn_edge_start = Vec::with_capacity(len + 1);
        let mut vn_edges = Vec::new();
        for edges in per_vn {
            vn_edge_start.push(vn_edges.len());
            vn_edges.extend(edges);
        }
        vn_edge_start.push(vn_edges.len());

        Ok(GldpcCode {
            component_h: (0..comp_h.rows())
                .map(|r| comp_h.row_words(r).to_vec())
                .collect(),
            adjacency,
            component,
            perms,
            n_tilde: None,
            perm_seed: None,
            parity: echelon.reduced,
            rank,
            pivot_cols: echelon.pivot_cols,
            info_cols,
            encoder_rows,
            vn_edge_start,
            vn_edges,
        })
    }

    /// Γ₀ construction: identity permutations on the first `ñ` checks and one
    /// shared permutation `perm` on the last `ñ`.
    pub fn from_gamma0(
        n_tilde: usize,
        component: PolarLikeCode,
        perm: &[usize],
    ) -> Result<Self, GldpcError> {
        let adjacency = AdjacencyMatrix::gamma0(n_tilde)?;
        if component.len() != n_tilde {
            return Err(GldpcError::ComponentLength {
                component: component.len(),
                degree: n_tilde,
            });
        }
        let identity: Vec<usize> = (0..n_tilde).collect();
        let perms = (0..2 * n_tilde)
            .map(|k| if k < n_tilde { identity.clone() } else { perm.to_vec() })
            .collect();
        let mut code = Self::from_parts(adjacency, component, perms)?;
        code.n_tilde = Some(n_tilde);
        Ok(code)
    }

    pub fn len(&self) -> usize {
        self.adjacency.vn_count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Message length `K = N − rank(H)`.
    pub fn dimension(&self) -> usize {
        self.len() - self.rank
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn adjacency(&self) -> &AdjacencyMatrix {
        &self.adjacency
    }

    pub fn component(&self) -> &PolarLikeCode {
        &self.component
    }

    pub fn check_count(&self) -> usize {
        self.adjacency.check_count()
    }

    pub fn degree(&self) -> usize {
        self.component.len()
    }

    /// Component position of slot `j` of check `k`.
    pub fn permutation(&self, k: usize) -> &[usize] {
        &self.perms[k]
    }

    pub fn perm_seed(&self) -> Option<u64> {
        self.perm_seed
    }

    /// Row-reduced parity-check matrix (`rank × N`).
    pub fn parity_check_matrix(&self) -> &BitMatrix {
        &self.parity
    }

    /// Codeword positions that carry the message, ascending.
    pub fn systematic_positions(&self) -> &[usize] {
        &self.info_cols
    }

    pub fn pivot_positions(&self) -> &[usize] {
        &self.pivot_cols
    }

    /// Edges (`k·degree + j`) incident to variable node `v`.
    #[inline]
    pub fn edges_of(&self, v: usize) -> &[usize] {
        &self.vn_edges[self.vn_edge_start[v]..self.vn_edge_start[v + 1]]
    }

    pub fn encode(&self, message: &[u8]) -> Result<Vec<u8>, GldpcError> {
        let mut c = vec![0u8; self.len()];
        self.encode_into(message, &mut c)?;
        Ok(c)
    }

    /// Systematic encoding: message bits at [`Self::systematic_positions`],
    /// parity bits solved from the reduced parity-check rows.
    pub fn encode_into(&self, message: &[u8], codeword: &mut [u8]) -> Result<(), GldpcError> {
        if message.len() != self.dimension() {
            return Err(GldpcError::MessageLength {
                expected: self.dimension(),
                actual: message.len(),
            });
        }
        codeword.fill(0);
        for (&col, &b) in self.info_cols.iter().zip(message) {
            codeword[col] = b & 1;
        }
        let packed = pack_bits(codeword);
        for (row, &p) in self.encoder_rows.iter().zip(&self.pivot_cols) {
            codeword[p] = dot_parity(row, &packed) as u8;
        }
        Ok(())
    }

    pub fn extract_message(&self, codeword: &[u8]) -> Vec<u8> {
        self.info_cols.iter().map(|&c| codeword[c]).collect()
    }

    /// Codeword for the `j`-th unit message.
    pub fn generator_row(&self, j: usize) -> Vec<u8> {
        let mut m = vec![0u8; self.dimension()];
        m[j] = 1;
        self.encode(&m).expect("unit message has length K")
    }

    /// True when every component code accepts its (permuted) slice of `word`.
    pub fn satisfies_checks(&self, word: &[u8]) -> bool {
        let mut local = vec![0u64; self.degree().div_ceil(64)];
        (0..self.check_count()).all(|k| self.check_satisfied(k, word, &mut local))
    }

    #[inline]
    pub(crate) fn check_satisfied(&self, k: usize, word: &[u8], local: &mut [u64]) -> bool {
        local.fill(0);
        let perm = &self.perms[k];
        for (j, &v) in self.adjacency.rows[k].iter().enumerate() {
            if word[v] & 1 == 1 {
                let p = perm[j];
                local[p / 64] |= 1 << (p % 64);
            }
        }
        self.component_h.iter().all(|row| !dot_parity(row, local))
    }

    pub fn to_file(&self) -> GldpcCodeFile {
        let n_tilde = self.n_tilde.unwrap_or(self.degree());
        GldpcCodeFile {
            n_tilde,
            component: self.component.to_file(),
            perm_seed: self.perm_seed,
            perm: self.perms.last().cloned().unwrap_or_default(),
        }
    }

    /// SHA-256 of the canonical JSON code definition, hex encoded.
    pub fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(&self.to_file()).expect("code file serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn save(&self, path: &Path) -> Result<(), GldpcError> {
        let s = serde_json::to_string_pretty(&self.to_file())?;
        std::fs::write(path, s + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, GldpcError> {
        let file: GldpcCodeFile = serde_json::from_slice(&std::fs::read(path)?)?;
        Self::try_from(file)
    }
}

/// On-disk code definition. Indices are 0-based; `perm[j]` is the component
/// position carried by slot `j` of each check in the second block row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GldpcCodeFile {
    pub n_tilde: usize,
    pub component: PolarCodeFile,
    #[serde(default)]
    pub perm_seed: Option<u64>,
    pub perm: Vec<usize>,
}

impl TryFrom<GldpcCodeFile> for GldpcCode {
    type Error = GldpcError;

    fn try_from(f: GldpcCodeFile) -> Result<Self, GldpcError> {
        let component = PolarLikeCode::try_from(f.component)?;
        let mut code = GldpcCode::from_gamma0(f.n_tilde, component, &f.perm)?;
        code.perm_seed = f.perm_seed;
        Ok(code)
    }
}

/// Fisher-Yates permutation of `0..len` drawn from `seed`.
pub fn seeded_permutation(len: usize, seed: u64) -> Vec<usize> {
    let mut p: Vec<usize> = (0..len).collect();
    p.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    p
}

/// Builds the Γ₀ GLDPC-PC code with a permutation drawn from `perm_seed`.
///
/// With `target_dimension` set, seeds `perm_seed, perm_seed + 1, …` are tried
/// (up to [`SEED_RETRIES`]) until the assembled code has that dimension.
pub fn build_gldpc_pc(
    n_tilde: usize,
    component: &PolarLikeCode,
    perm_seed: u64,
    target_dimension: Option<usize>,
) -> Result<GldpcCode, GldpcError> {
    let attempts = if target_dimension.is_some() { SEED_RETRIES } else { 1 };
    for seed in perm_seed..perm_seed + attempts {
        let perm = seeded_permutation(n_tilde, seed);
        let mut code = GldpcCode::from_gamma0(n_tilde, component.clone(), &perm)?;
        code.perm_seed = Some(seed);
        match target_dimension {
            Some(k) if code.dimension() != k => continue,
            _ => return Ok(code),
        }
    }
    Err(GldpcError::DimensionNotReached {
        first: perm_seed,
        last: perm_seed + attempts - 1,
        target: target_dimension.unwrap_or(0),
    })
}

/// The (1024, 643) code: `ñ = 32`, RM(3,5) components.
pub fn default_code() -> GldpcCode {
    let rm = PolarLikeCode::reed_muller(3, 5).expect("valid RM parameters");
    build_gldpc_pc(32, &rm, DEFAULT_PERM_SEED, Some(643)).expect("default construction reaches K = 643")
}
