//! Built-in oracle checks run by `sim validate`.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::gldpc::default_code;
use crate::mimo::{channel_apply, map_detect, mmse_pic_detect, rayleigh_channel};
use crate::modem::{Constellation, Interleaver, Modulation};
use crate::polar::PolarLikeCode;
use crate::siso::{exhaustive_siso, scl_decode, SisoConfig, SisoDecoder, SisoKind};

use super::ebn0_to_esn0;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn report(name: &'static str, passed: bool, detail: String) -> OracleReport {
    OracleReport { name, passed, detail }
}

fn bpsk_llrs(code: &PolarLikeCode, esn0_db: f64, rng: &mut impl Rng) -> (Vec<u8>, Vec<f64>) {
    let msg: Vec<u8> = (0..code.dimension()).map(|_| rng.random_range(0..2u8)).collect();
    let c = code.encode(&msg).expect("message length K");
    let sigma2 = 0.5 / 10f64.powf(esn0_db / 10.0);
    let llr = c
        .iter()
        .map(|&b| {
            let n: f64 = StandardNormal.sample(rng);
            2.0 * (1.0 - 2.0 * f64::from(b) + sigma2.sqrt() * n) / sigma2
        })
        .collect();
    (c, llr)
}

fn construction() -> OracleReport {
    let t = Instant::now();
    let code = default_code();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let ok_words = (0..100).all(|_| {
        let msg: Vec<u8> = (0..code.dimension()).map(|_| rng.random_range(0..2u8)).collect();
        let c = code.encode(&msg).expect("message length K");
        code.extract_message(&c) == msg && code.satisfies_checks(&c)
    });
    let passed = code.len() == 1024 && code.dimension() == 643 && ok_words;
    report(
        "gldpc construction (1024, 643)",
        passed,
        format!("N={} K={} in {:.2?}", code.len(), code.dimension(), t.elapsed()),
    )
}

fn so_scl_exact() -> OracleReport {
    let code = PolarLikeCode::with_pac_constraints(4, &[6, 7, 9, 10, 11, 13, 14, 15]).expect("valid code");
    let cfg = SisoConfig {
        kind: SisoKind::SoScl,
        list_size: 256,
        alpha: vec![1.0],
        ..SisoConfig::default()
    };
    let mut dec = SisoDecoder::new(&code, &cfg).expect("valid config");
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (_, llr) = bpsk_llrs(&code, 0.0, &mut rng);
        let a = dec.decode(&llr);
        let b = exhaustive_siso(&code, &llr).expect("small code");
        for (x, y) in a.app.iter().zip(&b.app) {
            worst = worst.max((x - y).abs());
        }
    }
    report("so-scl full list equals exhaustive", worst <= 1e-6, format!("max |diff| = {worst:.3e}"))
}

fn scl_ml() -> OracleReport {
    let code = PolarLikeCode::reed_muller(1, 3).expect("valid code");
    let book = code.codebook();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut agree = 0;
    let frames = 10_000;
    for _ in 0..frames {
        let (_, llr) = bpsk_llrs(&code, 1.0, &mut rng);
        let ml = book
            .iter()
            .max_by(|a, b| {
                let s = |c: &Vec<u8>| -> f64 {
                    c.iter().zip(&llr).map(|(&x, &l)| if x == 0 { l } else { -l }).sum()
                };
                s(a).total_cmp(&s(b))
            })
            .expect("nonempty codebook");
        let top = &scl_decode(&code, &llr, 16)[0].0;
        let mut cw = top.clone();
        crate::polar::polar_transform(&mut cw);
        agree += usize::from(&cw == ml);
    }
    report("scl (8,4) L=16 is ML", agree == frames, format!("{agree}/{frames} agree"))
}

fn siso_extrinsic() -> OracleReport {
    let code = PolarLikeCode::reed_muller(2, 4).expect("valid code");
    let cfg = SisoConfig {
        kind: SisoKind::Exhaustive,
        alpha: vec![1.0],
        ..SisoConfig::default()
    };
    let mut dec = SisoDecoder::new(&code, &cfg).expect("valid config");
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut out = crate::siso::SoftOutput::zeros(16);
    let mut ok = true;
    for _ in 0..200 {
        let ch: Vec<f64> = (0..16).map(|_| rng.random_range(-8.0..8.0)).collect();
        let pr: Vec<f64> = (0..16).map(|_| rng.random_range(-8.0..8.0)).collect();
        dec.decode_into(&ch, Some(&pr), 0, &mut out);
        ok &= (0..16).all(|i| out.ext[i] == out.app[i] - pr[i] - ch[i]);
    }
    report("siso extrinsic identity", ok, "200 frames".into())
}

fn detector_closed_form() -> OracleReport {
    let con = Constellation::new(Modulation::Qpsk);
    let h = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let y = DVector::from_element(1, Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)));
        let n0 = rng.random_range(0.01..5.0);
        let out = mmse_pic_detect(&y, &h, n0, &[0.0, 0.0], &con).expect("dimensions");
        let want = 2.0 * 2f64.sqrt() * y[0].re / n0;
        worst = worst.max((out.ext[0] - want).abs() / want.abs().max(1.0));
    }
    report("mmse-pic scalar qpsk closed form", worst <= 1e-9, format!("max rel err {worst:.3e}"))
}

fn detector_lmmse() -> OracleReport {
    let con = Constellation::new(Modulation::Qam16);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let h = rayleigh_channel(&mut rng, 4, 4);
        let bits: Vec<u8> = (0..16).map(|_| rng.random_range(0..2u8)).collect();
        let x = DVector::from_vec(con.map_bits(&bits).expect("whole symbols"));
        let n0 = rng.random_range(0.05..2.0);
        let y = channel_apply(&x, &h, &mut rng, n0);
        let out = mmse_pic_detect(&y, &h, n0, &[0.0; 16], &con).expect("dimensions");
        let hh = h.adjoint();
        let a = &hh * &h + DMatrix::<Complex64>::identity(4, 4) * Complex64::new(n0, 0.0);
        let Some(inv) = a.try_inverse() else {
            continue;
        };
        let wh = inv * &hh;
        for i in 0..4 {
            let mu = (wh.row(i) * h.column(i))[(0, 0)].re;
            let est = (wh.row(i) * &y)[(0, 0)] / mu;
            let mut want = [0.0; 4];
            con.max_log_llrs(est, 1.0 / mu - 1.0, &mut want);
            for j in 0..4 {
                worst = worst.max((out.ext[i * 4 + j] - want[j]).abs() / want[j].abs().max(1.0));
            }
        }
    }
    report("mmse-pic zero priors equals lmmse", worst <= 1e-9, format!("max rel err {worst:.3e}"))
}

fn map_scalar() -> OracleReport {
    let con = Constellation::new(Modulation::Bpsk);
    let h = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let y = DVector::from_element(1, Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)));
        let n0 = rng.random_range(0.2..4.0);
        let out = map_detect(&y, &h, n0, &[0.0], &con).expect("small alphabet");
        worst = worst.max((out.app[0] - 2.0 * y[0].re / (n0 / 2.0)).abs());
    }
    report("map scalar bpsk closed form", worst <= 1e-9, format!("max abs err {worst:.3e}"))
}

fn modem_checks() -> OracleReport {
    let con = Constellation::new(Modulation::Qam16);
    let e: f64 = con.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / 16.0;
    let d = 2.0 / 10f64.sqrt();
    let gray = (0..16).all(|i| {
        (0..16).all(|j| ((con.points()[i] - con.points()[j]).norm() - d).abs() > 1e-9 || (i ^ j).count_ones() == 1)
    });
    let iv = Interleaver::random(1024, 8);
    let v: Vec<u32> = (0..1024).collect();
    let round = iv.deinterleave(&iv.interleave(&v).expect("length")).expect("length") == v;
    let off = ebn0_to_esn0(0.0, 1024, 643, 4, 4, 4);
    let passed = (e - 1.0).abs() < 1e-12 && gray && round && (off - 3.9998).abs() < 1e-3;
    report(
        "modem energy, gray labels, interleaver, Eb/N0 offset",
        passed,
        format!("energy {e:.15}, offset {off:.4} dB"),
    )
}

/// Runs every oracle; `sim validate` exits nonzero when any fails.
pub fn run_oracles() -> Vec<OracleReport> {
    vec![
        construction(),
        so_scl_exact(),
        scl_ml(),
        siso_extrinsic(),
        detector_closed_form(),
        detector_lmmse(),
        map_scalar(),
        modem_checks(),
    ]
}
