//! Rayleigh-fading MIMO channel and soft-input soft-output detectors.
//!
//! Within one channel use the `G = N_t·M_c` bits are ordered antenna by
//! antenna, each antenna's bits in constellation label order.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llr::log_ratio;
use crate::modem::Constellation;

/// Largest `G` the MAP detector enumerates.
pub const MAX_MAP_BITS: usize = 20;
/// Lower bound applied to the post-filter noise-plus-interference variance.
pub const MIN_NPI_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MimoError {
    #[error("{bits} bits per channel use exceed the enumeration limit {limit}")]
    AlphabetTooLarge { bits: usize, limit: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    Map,
    #[default]
    MmsePic,
}

/// One channel use: `y = H·x + n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelUse {
    pub h: DMatrix<Complex64>,
    pub x: DVector<Complex64>,
    pub y: DVector<Complex64>,
}

/// All channel uses of one codeword and the noise variance `N₀` per complex entry.
#[derive(Debug, Clone, PartialEq)]
pub struct MimoFrame {
    pub uses: Vec<ChannelUse>,
    pub n0: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DetectorOutput {
    pub ext: Vec<f64>,
    pub app: Vec<f64>,
    /// Set when the filter system could not be factorized; all LLRs are zero.
    pub erased: bool,
}

fn complex_normal(rng: &mut impl Rng, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

/// `N_r × N_t` matrix of i.i.d. `CN(0, 1)` entries.
pub fn rayleigh_channel(rng: &mut impl Rng, nr: usize, nt: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(nr, nt, |_, _| complex_normal(rng, 1.0))
}

/// `H·x` plus i.i.d. `CN(0, N₀)` noise.
pub fn channel_apply(
    x: &DVector<Complex64>,
    h: &DMatrix<Complex64>,
    rng: &mut impl Rng,
    n0: f64,
) -> DVector<Complex64> {
    let mut y = h * x;
    if n0 > 0.0 {
        for v in y.iter_mut() {
            *v += complex_normal(rng, n0);
        }
    }
    y
}

/// Exact bitwise APP by enumerating all `2^G` transmit vectors.
///
/// Each hypothesis `d` is weighted by `exp(−‖y − H·map(d)‖²/N₀ + Σ_{j: d_j = 0} L_j)`;
/// `ext = app − a_priori`.
pub fn map_detect(
    y: &DVector<Complex64>,
    h: &DMatrix<Complex64>,
    n0: f64,
    priors: &[f64],
    constellation: &Constellation,
) -> Result<DetectorOutput, MimoError> {
    let (nr, nt) = h.shape();
    let m = constellation.bits_per_symbol();
    let g = nt * m;
    if g > MAX_MAP_BITS {
        return Err(MimoError::AlphabetTooLarge {
            bits: g,
            limit: MAX_MAP_BITS,
        });
    }
    if y.len() != nr || priors.len() != g {
        return Err(MimoError::Dimension("map_detect inputs"));
    }
    let q = 1usize << m;
    // contribution of antenna t sending label s, and its prior weight
    let columns: Vec<Vec<DVector<Complex64>>> = (0..nt)
        .map(|t| {
            constellation
                .points()
                .iter()
                .map(|&p| h.column(t) * p)
                .collect()
        })
        .collect();
    let prior_w: Vec<Vec<f64>> = (0..nt)
        .map(|t| {
            (0..q)
                .map(|s| {
                    (0..m)
                        .filter(|&j| (s >> (m - 1 - j)) & 1 == 0)
                        .map(|j| priors[t * m + j])
                        .sum()
                })
                .collect()
        })
        .collect();

    let mut metrics = vec![0.0; 1 << g];
    let mut partial: Vec<DVector<Complex64>> = (0..=nt).map(|_| y.clone()).collect();
    let mut prior_sum = vec![0.0; nt + 1];
    let mut labels = vec![0usize; nt];
    // odometer over antenna labels with cached residuals y − Σ h_t x_t
    let mut depth = 0;
    loop {
        if depth == nt {
            let idx = labels.iter().fold(0, |acc, &s| (acc << m) | s);
            metrics[idx] = -partial[nt].norm_squared() / n0 + prior_sum[nt];
            depth -= 1;
            loop {
                labels[depth] += 1;
                if labels[depth] < q {
                    break;
                }
                labels[depth] = 0;
                if depth == 0 {
                    return Ok(finish_map(&metrics, g, priors));
                }
                depth -= 1;
            }
        }
        let s = labels[depth];
        let (before, after) = partial.split_at_mut(depth + 1);
        after[0].copy_from(&before[depth]);
        after[0] -= &columns[depth][s];
        prior_sum[depth + 1] = prior_sum[depth] + prior_w[depth][s];
        depth += 1;
    }
}

fn finish_map(metrics: &[f64], g: usize, priors: &[f64]) -> DetectorOutput {
    let peak = metrics.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s0 = vec![0.0; g];
    let mut s1 = vec![0.0; g];
    for (idx, &w) in metrics.iter().enumerate() {
        let p = (w - peak).exp();
        for i in 0..g {
            if (idx >> (g - 1 - i)) & 1 == 0 {
                s0[i] += p;
            } else {
                s1[i] += p;
            }
        }
    }
    let app: Vec<f64> = s0
        .iter()
        .zip(&s1)
        .map(|(&a, &b)| {
            let la = if a > 0.0 { a.ln() } else { f64::NEG_INFINITY };
            let lb = if b > 0.0 { b.ln() } else { f64::NEG_INFINITY };
            log_ratio(la, lb)
        })
        .collect();
    let ext = app.iter().zip(priors).map(|(a, p)| a - p).collect();
    DetectorOutput {
        ext,
        app,
        erased: false,
    }
}

/// Soft MMSE parallel interference cancellation.
///
/// Soft symbols `x̂_i`, `E_i` come from the priors. The filter for symbol `i`
/// is `w_i = (H Λ Hᴴ + N₀ I)⁻¹ h_i`, which equals the corresponding row of
/// `(Hᴴ H Λ + N₀ I)⁻¹ Hᴴ`. With `μ_i = w_iᴴ h_i`, the estimate is
/// `x̃_i = w_iᴴ ŷ_i / μ_i` and its noise-plus-interference variance
/// `ν_i = 1/μ_i − E_i`. Extrinsic LLRs use the max-log rule on `x̃_i`;
/// `app = ext + a_priori`.
pub fn mmse_pic_detect(
    y: &DVector<Complex64>,
    h: &DMatrix<Complex64>,
    n0: f64,
    priors: &[f64],
    constellation: &Constellation,
) -> Result<DetectorOutput, MimoError> {
    let (nr, nt) = h.shape();
    let m = constellation.bits_per_symbol();
    if y.len() != nr || priors.len() != nt * m {
        return Err(MimoError::Dimension("mmse_pic_detect inputs"));
    }
    let mut mean = DVector::<Complex64>::zeros(nt);
    let mut var = vec![0.0; nt];
    for t in 0..nt {
        let (x, e) = constellation.soft_symbol(&priors[t * m..(t + 1) * m]);
        mean[t] = x;
        var[t] = e;
    }
    let mut b = DMatrix::<Complex64>::zeros(nr, nr);
    for t in 0..nt {
        let col = h.column(t);
        b.ger(Complex64::new(var[t], 0.0), &col, &col.map(|c| c.conj()), Complex64::new(1.0, 0.0));
    }
    for r in 0..nr {
        b[(r, r)] += n0;
    }
    let erased = |g: usize| DetectorOutput {
        ext: vec![0.0; g],
        app: vec![0.0; g],
        erased: true,
    };
    let Some(chol) = Cholesky::new(b) else {
        return Ok(erased(nt * m));
    };
    let w = chol.solve(h);
    let residual = y - h * &mean;
    let mut ext = vec![0.0; nt * m];
    for t in 0..nt {
        let wt = w.column(t);
        let mu = wt.dotc(&h.column(t)).re;
        if !(mu.is_finite() && mu > 0.0) {
            return Ok(erased(nt * m));
        }
        let est = (wt.dotc(&residual) / mu) + mean[t];
        let nu = (1.0 / mu - var[t]).max(MIN_NPI_VARIANCE);
        constellation.max_log_llrs(est, nu, &mut ext[t * m..(t + 1) * m]);
    }
    let app = ext.iter().zip(priors).map(|(e, p)| e + p).collect();
    Ok(DetectorOutput {
        ext,
        app,
        erased: false,
    })
}

/// Runs the selected detector on one channel use.
pub fn detect(
    kind: DetectorKind,
    y: &DVector<Complex64>,
    h: &DMatrix<Complex64>,
    n0: f64,
    priors: &[f64],
    constellation: &Constellation,
) -> Result<DetectorOutput, MimoError> {
    match kind {
        DetectorKind::Map => map_detect(y, h, n0, priors, constellation),
        DetectorKind::MmsePic => mmse_pic_detect(y, h, n0, priors, constellation),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llr::log_add_exp;
    use crate::modem::Modulation;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_symbols(rng: &mut impl Rng, nt: usize, con: &Constellation) -> (Vec<u8>, DVector<Complex64>) {
        let bits: Vec<u8> = (0..nt * con.bits_per_symbol()).map(|_| rng.random_range(0..2u8)).collect();
        let x = DVector::from_vec(con.map_bits(&bits).unwrap());
        (bits, x)
    }

    /// Independent soft-output LMMSE: `(HᴴH + N₀I)⁻¹Hᴴ` by explicit inversion.
    fn lmmse_oracle(y: &DVector<Complex64>, h: &DMatrix<Complex64>, n0: f64, con: &Constellation) -> Vec<f64> {
        let nt = h.ncols();
        let hh = h.adjoint();
        let a = &hh * h + DMatrix::<Complex64>::identity(nt, nt) * c(n0, 0.0);
        let wh = a.try_inverse().unwrap() * &hh;
        let m = con.bits_per_symbol();
        let mut out = vec![0.0; nt * m];
        for i in 0..nt {
            let row = wh.row(i);
            let mu = (row * h.column(i))[(0, 0)].re;
            let est = (row * y)[(0, 0)] / mu;
            let nu = 1.0 / mu - 1.0;
            for j in 0..m {
                let (mut d0, mut d1) = (f64::INFINITY, f64::INFINITY);
                for (label, p) in con.points().iter().enumerate() {
                    let d = (est - p).norm_sqr();
                    if (label >> (m - 1 - j)) & 1 == 0 {
                        d0 = d0.min(d);
                    } else {
                        d1 = d1.min(d);
                    }
                }
                out[i * m + j] = (d1 - d0) / nu;
            }
        }
        out
    }

    #[test]
    fn channel_variance_oracles() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let draws = 100_000;
        let (mut s, mut re2, mut im2, mut cross) = (0.0, 0.0, 0.0, c(0.0, 0.0));
        let mut prev = rayleigh_channel(&mut rng, 1, 1)[(0, 0)];
        for _ in 0..draws {
            let v = rayleigh_channel(&mut rng, 1, 1)[(0, 0)];
            s += v.norm_sqr();
            re2 += v.re * v.re;
            im2 += v.im * v.im;
            cross += v * prev.conj();
            prev = v;
        }
        let n = draws as f64;
        assert!((s / n - 1.0).abs() < 0.02);
        assert!((re2 / n - 0.5).abs() < 0.01);
        assert!((im2 / n - 0.5).abs() < 0.01);
        assert!((cross / n).norm() < 0.01);

        let h = DMatrix::<Complex64>::identity(2, 2);
        let x = DVector::from_vec(vec![c(0.0, 0.0), c(0.0, 0.0)]);
        let n0 = 0.37;
        let mut acc = 0.0;
        let mut mean = c(0.0, 0.0);
        for _ in 0..draws / 2 {
            let y = channel_apply(&x, &h, &mut rng, n0);
            acc += y.norm_squared();
            mean += y[0];
        }
        assert!((acc / n / n0 - 1.0).abs() < 0.02);
        assert!((mean / (n / 2.0)).norm() < 0.01);
    }

    #[test]
    fn noiseless_channel_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let h = rayleigh_channel(&mut rng, 3, 2);
        let x = DVector::from_vec(vec![c(1.0, 0.5), c(-0.2, 0.3)]);
        assert_eq!(channel_apply(&x, &h, &mut rng, 0.0), &h * &x);
    }

    #[test]
    fn map_bpsk_scalar_closed_form() {
        let con = Constellation::new(Modulation::Bpsk);
        let h = DMatrix::from_element(1, 1, c(1.0, 0.0));
        for &(yr, n0) in &[(0.3, 0.5), (-1.2, 2.0), (0.05, 0.1)] {
            let y = DVector::from_element(1, c(yr, 0.4));
            let out = map_detect(&y, &h, n0, &[0.0], &con).unwrap();
            let sigma2 = n0 / 2.0;
            assert!((out.app[0] - 2.0 * yr / sigma2).abs() < 1e-9);
        }
    }

    #[test]
    fn map_symmetric_input_gives_zero() {
        let con = Constellation::new(Modulation::Qam16);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let h = rayleigh_channel(&mut rng, 2, 2);
        let y = DVector::zeros(2);
        // only the sign bits are symmetric under x -> -x for 16-QAM
        let out = map_detect(&y, &h, 0.5, &[0.0; 8], &con).unwrap();
        for i in [0, 2, 4, 6] {
            assert!(out.app[i].abs() < 1e-9, "{}", out.app[i]);
        }
        let qpsk = Constellation::new(Modulation::Qpsk);
        let out = map_detect(&y, &h, 0.5, &[0.0; 4], &qpsk).unwrap();
        for a in &out.app {
            assert!(a.abs() < 1e-9, "{a}");
        }
    }

    #[test]
    fn map_extrinsic_identity_and_guard() {
        let con = Constellation::new(Modulation::Qpsk);
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..50 {
            let h = rayleigh_channel(&mut rng, 2, 2);
            let (_, x) = random_symbols(&mut rng, 2, &con);
            let y = channel_apply(&x, &h, &mut rng, 0.4);
            let priors: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
            let out = map_detect(&y, &h, 0.4, &priors, &con).unwrap();
            for i in 0..4 {
                assert_eq!(out.ext[i], out.app[i] - priors[i]);
            }
        }
        let h = DMatrix::<Complex64>::identity(6, 6);
        let y = DVector::zeros(6);
        assert!(matches!(
            map_detect(&y, &h, 1.0, &[0.0; 24], &Constellation::new(Modulation::Qam16)),
            Err(MimoError::AlphabetTooLarge { bits: 24, limit: 20 })
        ));
    }

    #[test]
    fn map_with_forcing_priors_is_single_stream_demapper() {
        let con = Constellation::new(Modulation::Qpsk);
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let n0 = 0.6;
        for _ in 0..20 {
            let h = rayleigh_channel(&mut rng, 2, 2);
            let (bits, x) = random_symbols(&mut rng, 2, &con);
            let y = channel_apply(&x, &h, &mut rng, n0);
            let mut priors = vec![0.0; 4];
            for j in 2..4 {
                priors[j] = if bits[j] == 0 { 1e4 } else { -1e4 };
            }
            let out = map_detect(&y, &h, n0, &priors, &con).unwrap();
            // conditioned oracle: antenna 1 known, enumerate antenna 0 only
            let resid = &y - h.column(1) * x[1];
            for j in 0..2 {
                let (mut l0, mut l1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
                for (label, &p) in con.points().iter().enumerate() {
                    let w = -(&resid - h.column(0) * p).norm_squared() / n0;
                    if (label >> (1 - j)) & 1 == 0 {
                        l0 = log_add_exp(l0, w);
                    } else {
                        l1 = log_add_exp(l1, w);
                    }
                }
                assert!((out.app[j] - (l0 - l1)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn mmse_pic_qpsk_scalar_closed_form() {
        let con = Constellation::new(Modulation::Qpsk);
        let h = DMatrix::from_element(1, 1, c(1.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        for _ in 0..1000 {
            let y = DVector::from_element(1, c(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)));
            let n0 = rng.random_range(0.01..5.0);
            let out = mmse_pic_detect(&y, &h, n0, &[0.0, 0.0], &con).unwrap();
            let expected = 2.0 * 2f64.sqrt() * y[0].re / n0;
            assert!((out.ext[0] - expected).abs() <= 1e-9 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn mmse_pic_zero_priors_match_lmmse_oracle() {
        let con = Constellation::new(Modulation::Qam16);
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        for _ in 0..200 {
            let h = rayleigh_channel(&mut rng, 4, 4);
            let (_, x) = random_symbols(&mut rng, 4, &con);
            let n0 = rng.random_range(0.05..2.0);
            let y = channel_apply(&x, &h, &mut rng, n0);
            let out = mmse_pic_detect(&y, &h, n0, &[0.0; 16], &con).unwrap();
            let oracle = lmmse_oracle(&y, &h, n0, &con);
            for (a, b) in out.ext.iter().zip(&oracle) {
                assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn mmse_pic_full_cancellation() {
        let con = Constellation::new(Modulation::Qam16);
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        let h = rayleigh_channel(&mut rng, 4, 3);
        let (bits, x) = random_symbols(&mut rng, 3, &con);
        let n0 = 0.2;
        let y = channel_apply(&x, &h, &mut rng, n0);
        // antennas 1 and 2 known exactly, antenna 0 unknown
        let mut priors = vec![0.0; 12];
        for j in 4..12 {
            priors[j] = if bits[j] == 0 { 200.0 } else { -200.0 };
        }
        let out = mmse_pic_detect(&y, &h, n0, &priors, &con).unwrap();
        let resid = &y - h.column(1) * x[1] - h.column(2) * x[2];
        // with zero residual interference the filter is the matched filter
        let h0 = h.column(0);
        let g = h0.norm_squared();
        let est = h0.dotc(&resid) / g;
        let nu = n0 / g;
        let mut expected = [0.0; 4];
        con.max_log_llrs(est, nu, &mut expected);
        for j in 0..4 {
            assert!((out.ext[j] - expected[j]).abs() < 1e-6 * expected[j].abs().max(1.0));
        }
    }

    #[test]
    fn mmse_pic_monotone_in_noise() {
        let con = Constellation::new(Modulation::Qam16);
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let h = rayleigh_channel(&mut rng, 4, 4);
        let (_, x) = random_symbols(&mut rng, 4, &con);
        let y = &h * &x;
        let mags: Vec<Vec<f64>> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|&n0| {
                mmse_pic_detect(&y, &h, n0, &[0.0; 16], &con)
                    .unwrap()
                    .ext
                    .iter()
                    .map(|l| l.abs())
                    .collect()
            })
            .collect();
        for i in 0..16 {
            assert!(mags[0][i] < mags[1][i] && mags[1][i] < mags[2][i]);
        }
    }

    #[test]
    fn mmse_pic_erases_on_singular_system() {
        let con = Constellation::new(Modulation::Qpsk);
        let h = DMatrix::from_element(2, 1, c(0.0, 0.0));
        let y = DVector::zeros(2);
        let out = mmse_pic_detect(&y, &h, 0.0, &[0.0, 0.0], &con).unwrap();
        assert!(out.erased);
        assert!(out.ext.iter().all(|&l| l == 0.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn mmse_pic_is_permutation_equivariant(seed in any::<u64>(), n0 in 0.05f64..2.0) {
            let con = Constellation::new(Modulation::Qam16);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = rayleigh_channel(&mut rng, 4, 3);
            let (_, x) = random_symbols(&mut rng, 3, &con);
            let y = channel_apply(&x, &h, &mut rng, n0);
            let perm = [2usize, 0, 1];
            let hp = DMatrix::from_fn(4, 3, |r, k| h[(r, perm[k])]);
            let a = mmse_pic_detect(&y, &h, n0, &[0.0; 12], &con).unwrap();
            let b = mmse_pic_detect(&y, &hp, n0, &[0.0; 12], &con).unwrap();
            for k in 0..3 {
                for j in 0..4 {
                    let (u, v) = (b.ext[k * 4 + j], a.ext[perm[k] * 4 + j]);
                    prop_assert!((u - v).abs() <= 1e-9 * v.abs().max(1.0));
                }
            }
        }

        #[test]
        fn mmse_pic_outputs_finite(seed in any::<u64>()) {
            let con = Constellation::new(Modulation::Qam16);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = rayleigh_channel(&mut rng, 4, 4);
            let (_, x) = random_symbols(&mut rng, 4, &con);
            let y = channel_apply(&x, &h, &mut rng, 0.1);
            let priors: Vec<f64> = (0..16).map(|_| rng.random_range(-60.0..60.0)).collect();
            let out = mmse_pic_detect(&y, &h, 0.1, &priors, &con).unwrap();
            prop_assert!(out.ext.iter().all(|l| l.is_finite()));
        }
    }
}
