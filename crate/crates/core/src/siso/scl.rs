//! LLR-domain successive-cancellation list decoding.
//!
//! Each path keeps one LLR array and one left-partial-sum array per tree
//! level in a fixed slot, so forking a path is a slice copy and decoding a
//! frame does not allocate. Besides the surviving list the decoder keeps the
//! log of the probability mass discarded by list pruning, each pruned prefix
//! weighted by `2^-f` where `f` is the number of frozen positions still ahead
//! of it. That weighting approximates the share of its subtree that lies in
//! the set of valid decoding paths. The estimate is exact whenever nothing is
//! pruned.

use std::f64::consts::LN_2;

use crate::llr::{bit_cost, boxplus, boxplus_min_sum, log_add_exp, saturate};
use crate::polar::PolarLikeCode;

use super::Kernel;

/// A completed decoding path.
#[derive(Debug, Clone, Copy)]
pub struct PathRef<'a> {
    /// Transform input `u^N`.
    pub input: &'a [u8],
    /// Codeword `u^N · F^{⊗n}`.
    pub codeword: &'a [u8],
    /// `−ln Q(u^N | y^N)`.
    pub metric: f64,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    metric: f64,
    slot: usize,
    bit: u8,
}

#[derive(Debug, Clone)]
pub struct SclDecoder {
    code: PolarLikeCode,
    list_size: usize,
    kernel: Kernel,
    frozen_after: Vec<u32>,
    llr: Vec<f64>,
    left: Vec<u8>,
    input: Vec<u8>,
    codeword: Vec<u8>,
    metric: Vec<f64>,
    leaf: Vec<f64>,
    active: Vec<usize>,
    next_active: Vec<usize>,
    free: Vec<usize>,
    candidates: Vec<Candidate>,
    keep: Vec<[bool; 2]>,
    root: Vec<f64>,
    bits_a: Vec<u8>,
    bits_b: Vec<u8>,
    log_pruned: f64,
    order: Vec<usize>,
}

impl SclDecoder {
    /// `list_size` must be at least one.
    pub fn new(code: &PolarLikeCode, list_size: usize, kernel: Kernel) -> Self {
        assert!(list_size >= 1, "list size must be at least 1");
        let len = code.len();
        let tree = len - 1;
        let mut frozen_after = vec![0u32; len];
        let mut acc = 0;
        for i in (0..len).rev() {
            frozen_after[i] = acc;
            if code.is_frozen(i) {
                acc += 1;
            }
        }
        // paths never outnumber the valid input vectors
        let slots = list_size.min(1usize << code.dimension().min(30));
        SclDecoder {
            code: code.clone(),
            list_size,
            kernel,
            frozen_after,
            llr: vec![0.0; slots * tree],
            left: vec![0; slots * tree],
            input: vec![0; slots * len],
            codeword: vec![0; slots * len],
            metric: vec![0.0; slots],
            leaf: vec![0.0; slots],
            active: Vec::with_capacity(slots),
            next_active: Vec::with_capacity(slots),
            free: Vec::with_capacity(slots),
            candidates: Vec::with_capacity(2 * slots),
            keep: vec![[false; 2]; slots],
            root: vec![0.0; len],
            bits_a: vec![0; len],
            bits_b: vec![0; len],
            log_pruned: f64::NEG_INFINITY,
            order: Vec::with_capacity(slots),
        }
    }

    pub fn code(&self) -> &PolarLikeCode {
        &self.code
    }

    pub fn list_size(&self) -> usize {
        self.list_size
    }

    fn slots(&self) -> usize {
        self.metric.len()
    }

    /// Decodes one frame. Inputs are saturated to `±LLR_MAX`.
    pub fn decode(&mut self, llr_in: &[f64]) {
        let len = self.code.len();
        assert_eq!(llr_in.len(), len, "LLR length must equal block length");
        for (r, &l) in self.root.iter_mut().zip(llr_in) {
            *r = saturate(l);
        }
        self.active.clear();
        self.active.push(0);
        self.free.clear();
        self.free.extend((1..self.slots()).rev());
        self.metric[0] = 0.0;
        self.log_pruned = f64::NEG_INFINITY;

        for i in 0..len {
            for a in 0..self.active.len() {
                let slot = self.active[a];
                self.leaf[slot] = self.descend(slot, i);
            }
            if self.code.is_frozen(i) {
                for a in 0..self.active.len() {
                    let slot = self.active[a];
                    let base = slot * len;
                    let v = self
                        .code
                        .constraint(i)
                        .iter()
                        .fold(0u8, |acc, &j| acc ^ self.input[base + j]);
                    self.metric[slot] += bit_cost(self.leaf[slot], v);
                    self.input[base + i] = v;
                    self.propagate(slot, i, v);
                }
            } else {
                self.branch(i);
            }
        }

        self.order.clear();
        self.order.extend_from_slice(&self.active);
        let metric = &self.metric;
        self.order
            .sort_by(|&a, &b| metric[a].total_cmp(&metric[b]));
    }

    fn branch(&mut self, i: usize) {
        let len = self.code.len();
        self.candidates.clear();
        for &slot in &self.active {
            let pm = self.metric[slot];
            let leaf = self.leaf[slot];
            for bit in 0..2u8 {
                self.candidates.push(Candidate {
                    metric: pm + bit_cost(leaf, bit),
                    slot,
                    bit,
                });
            }
        }
        if self.candidates.len() > self.list_size {
            // stable: equal metrics keep (path order, bit) order
            self.candidates
                .sort_by(|a, b| a.metric.total_cmp(&b.metric));
            let penalty = f64::from(self.frozen_after[i]) * LN_2;
            for c in &self.candidates[self.list_size..] {
                self.log_pruned = log_add_exp(self.log_pruned, -c.metric - penalty);
            }
            self.candidates.truncate(self.list_size);
        }
        for &slot in &self.active {
            self.keep[slot] = [false; 2];
        }
        for c in &self.candidates {
            self.keep[c.slot][c.bit as usize] = true;
        }
        for &slot in &self.active {
            if self.keep[slot] == [false, false] {
                self.free.push(slot);
            }
        }
        self.next_active.clear();
        for a in 0..self.active.len() {
            let slot = self.active[a];
            let [k0, k1] = self.keep[slot];
            let leaf = self.leaf[slot];
            let pm = self.metric[slot];
            match (k0, k1) {
                (false, false) => {}
                (true, false) | (false, true) => {
                    let bit = u8::from(k1);
                    self.metric[slot] = pm + bit_cost(leaf, bit);
                    self.input[slot * len + i] = bit;
                    self.propagate(slot, i, bit);
                    self.next_active.push(slot);
                }
                (true, true) => {
                    let twin = self.free.pop().expect("survivors never exceed slots");
                    self.copy_slot(slot, twin);
                    self.metric[slot] = pm + bit_cost(leaf, 0);
                    self.metric[twin] = pm + bit_cost(leaf, 1);
                    self.input[slot * len + i] = 0;
                    self.input[twin * len + i] = 1;
                    self.propagate(slot, i, 0);
                    self.propagate(twin, i, 1);
                    self.next_active.push(slot);
                    self.next_active.push(twin);
                }
            }
        }
        std::mem::swap(&mut self.active, &mut self.next_active);
    }

    fn copy_slot(&mut self, from: usize, to: usize) {
        let len = self.code.len();
        let tree = len - 1;
        self.llr
            .copy_within(from * tree..(from + 1) * tree, to * tree);
        self.left
            .copy_within(from * tree..(from + 1) * tree, to * tree);
        self.input
            .copy_within(from * len..(from + 1) * len, to * len);
    }

    /// Computes the decision LLR of leaf `i` for a path, refreshing only the
    /// levels that changed since leaf `i − 1`.
    fn descend(&mut self, slot: usize, i: usize) -> f64 {
        let n = self.code.log_len();
        if n == 0 {
            return self.root[0];
        }
        let tree = self.code.len() - 1;
        let seg = &mut self.llr[slot * tree..(slot + 1) * tree];
        let left = &self.left[slot * tree..(slot + 1) * tree];
        let start = if i == 0 { n } else { i.trailing_zeros() + 1 };
        for lam in (1..=start).rev() {
            let h = 1usize << (lam - 1);
            let (lo, hi) = seg.split_at_mut(2 * h - 1);
            let dst = &mut lo[h - 1..2 * h - 1];
            let src: &[f64] = if lam == n { &self.root } else { &hi[..2 * h] };
            if (i >> (lam - 1)) & 1 == 1 {
                let bits = &left[h - 1..2 * h - 1];
                for k in 0..h {
                    let a = src[k];
                    dst[k] = src[k + h] + if bits[k] == 0 { a } else { -a };
                }
            } else {
                match self.kernel {
                    Kernel::Exact => {
                        for k in 0..h {
                            dst[k] = boxplus(src[k], src[k + h]);
                        }
                    }
                    Kernel::MinSum => {
                        for k in 0..h {
                            dst[k] = boxplus_min_sum(src[k], src[k + h]);
                        }
                    }
                }
            }
        }
        seg[0]
    }

    /// Folds decided bit `v` at leaf `i` into the partial sums.
    fn propagate(&mut self, slot: usize, i: usize, v: u8) {
        let n = self.code.log_len();
        let len = self.code.len();
        let tree = len - 1;
        let left = &mut self.left[slot * tree..(slot + 1) * tree];
        let (mut cur, mut nxt) = (&mut self.bits_a, &mut self.bits_b);
        cur[0] = v;
        for lam in 0..n {
            let h = 1usize << lam;
            let off = h - 1;
            if (i >> lam) & 1 == 0 {
                left[off..off + h].copy_from_slice(&cur[..h]);
                return;
            }
            for k in 0..h {
                nxt[k] = left[off + k] ^ cur[k];
                nxt[k + h] = cur[k];
            }
            std::mem::swap(&mut cur, &mut nxt);
        }
        self.codeword[slot * len..(slot + 1) * len].copy_from_slice(&cur[..len]);
    }

    /// Surviving paths of the last decoded frame, ascending metric.
    pub fn paths(&self) -> impl ExactSizeIterator<Item = PathRef<'_>> + Clone + '_ {
        let len = self.code.len();
        self.order.iter().map(move |&slot| PathRef {
            input: &self.input[slot * len..(slot + 1) * len],
            codeword: &self.codeword[slot * len..(slot + 1) * len],
            metric: self.metric[slot],
        })
    }

    pub fn best(&self) -> PathRef<'_> {
        self.paths().next().expect("at least one path survives")
    }

    /// `ln` of the pruned-mass estimate (−∞ when nothing was pruned).
    pub fn log_pruned_mass(&self) -> f64 {
        self.log_pruned
    }

    /// `ln Q*`: surviving mass plus the pruned-mass estimate.
    pub fn log_total_mass(&self) -> f64 {
        self.paths()
            .fold(self.log_pruned, |acc, p| log_add_exp(acc, -p.metric))
    }
}
