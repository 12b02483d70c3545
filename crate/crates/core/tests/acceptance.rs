//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero when any fails.

use std::process::ExitCode;
use std::time::Instant;

use gldpc_pc::gldpc::{build_gldpc_pc, default_code, GldpcCode, DEFAULT_PERM_SEED};
use gldpc_pc::idd::IddConfig;
use gldpc_pc::mimo::{channel_apply, mmse_pic_detect, rayleigh_channel};
use gldpc_pc::modem::{Constellation, Modulation};
use gldpc_pc::polar::PolarLikeCode;
use gldpc_pc::siso::{scl_decode, SisoConfig, SisoDecoder, SisoKind, SoftOutput};
use gldpc_pc::sim::{write_csv, Execution, PointResult, Scenario, SimConfig, Simulator};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Verdict = (bool, String);

// ---- independent helpers ----

fn butterfly(u: &mut [u8]) {
    let n = u.len();
    let mut half = 1;
    while half < n {
        for blk in (0..n).step_by(2 * half) {
            for i in blk..blk + half {
                u[i] ^= u[i + half];
            }
        }
        half *= 2;
    }
}

/// All codewords of a polar-like code from its info set and PAC rule `{i-2,i-3,i-5,i-6}`.
fn enumerate_codewords(n: usize, info: &[usize], pac: bool) -> Vec<Vec<u8>> {
    let is_info: Vec<bool> = (0..n).map(|i| info.contains(&i)).collect();
    (0u32..1 << info.len())
        .map(|m| {
            let mut u = vec![0u8; n];
            for (b, &i) in info.iter().enumerate() {
                u[i] = ((m >> b) & 1) as u8;
            }
            if pac {
                for i in (0..n).filter(|&i| !is_info[i]) {
                    u[i] = [2, 3, 5, 6]
                        .iter()
                        .filter(|&&d| i >= d && is_info[i - d])
                        .fold(0, |a, &d| a ^ u[i - d]);
                }
            }
            butterfly(&mut u);
            u
        })
        .collect()
}

fn correlation(c: &[u8], llr: &[f64]) -> f64 {
    c.iter().zip(llr).map(|(&b, &l)| if b == 0 { l / 2.0 } else { -l / 2.0 }).sum()
}

fn logsumexp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn brute_app(book: &[Vec<u8>], llr: &[f64]) -> Vec<f64> {
    let scores: Vec<f64> = book.iter().map(|c| correlation(c, llr)).collect();
    (0..llr.len())
        .map(|i| {
            let (z, o): (Vec<_>, Vec<_>) = book.iter().zip(&scores).partition(|(c, _)| c[i] == 0);
            let z: Vec<f64> = z.into_iter().map(|(_, &s)| s).collect();
            let o: Vec<f64> = o.into_iter().map(|(_, &s)| s).collect();
            (logsumexp(&z) - logsumexp(&o)).clamp(-40.0, 40.0)
        })
        .collect()
}

fn bpsk_llrs(c: &[u8], esn0_db: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let s2 = 0.5 / 10f64.powf(esn0_db / 10.0);
    c.iter()
        .map(|&b| {
            let n: f64 = StandardNormal.sample(rng);
            2.0 * (if b == 0 { 1.0 } else { -1.0 } + s2.sqrt() * n) / s2
        })
        .collect()
}

fn gf2_rank(mut rows: Vec<Vec<u64>>) -> usize {
    let cols = rows.first().map_or(0, |r| r.len() * 64);
    let mut rank = 0;
    for c in 0..cols {
        let (w, b) = (c / 64, 1u64 << (c % 64));
        let Some(p) = (rank..rows.len()).find(|&r| rows[r][w] & b != 0) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && row[w] & b != 0 {
                row.iter_mut().zip(&pivot).for_each(|(x, y)| *x ^= y);
            }
        }
        rank += 1;
    }
    rank
}

// ---- criteria ----

fn construction() -> Verdict {
    let t = Instant::now();
    let rm = PolarLikeCode::reed_muller(3, 5).unwrap();
    let code = build_gldpc_pc(32, &rm, DEFAULT_PERM_SEED, None).unwrap();
    let secs = t.elapsed().as_secs_f64();
    // rebuild H from the quasi-cyclic adjacency definition
    let nt = 32;
    let frozen: Vec<usize> = (0..32usize).filter(|i| i.count_ones() < 2).collect();
    let mut rows = Vec::new();
    let mut perms_ok = true;
    for k in 0..2 * nt {
        let perm = code.permutation(k);
        if k < nt {
            perms_ok &= perm.iter().enumerate().all(|(j, &p)| j == p);
        }
        for &f in &frozen {
            let mut row = vec![0u64; 1024 / 64];
            for b in 0..nt {
                let col = if k < nt { b * nt + k } else { b * nt + (k - nt + b) % nt };
                // column f of F^{⊗5} has ones where f ⊆ a
                if perm[b] & f == f {
                    row[col / 64] ^= 1 << (col % 64);
                }
            }
            rows.push(row);
        }
    }
    let rank = gf2_rank(rows);
    let ok = code.len() == 1024 && code.dimension() == 643 && rank == 381 && perms_ok && secs < 10.0;
    (ok, format!("(N, K) = ({}, {}), rank {rank}, {secs:.2} s", code.len(), code.dimension()))
}

fn so_scl_exactness() -> Verdict {
    let t = Instant::now();
    let info = [6, 7, 9, 10, 11, 13, 14, 15];
    let code = PolarLikeCode::with_pac_constraints(4, &info).unwrap();
    let book = enumerate_codewords(16, &info, true);
    let cfg = SisoConfig {
        kind: SisoKind::SoScl,
        list_size: 256,
        alpha: vec![1.0],
        ..SisoConfig::default()
    };
    let mut dec = SisoDecoder::new(&code, &cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let c = &book[rng.random_range(0..book.len())];
        let llr = bpsk_llrs(c, 0.0, &mut rng);
        let got = dec.decode(&llr).app;
        for (a, b) in got.iter().zip(brute_app(&book, &llr)) {
            worst = worst.max((a - b).abs());
        }
    }
    let secs = t.elapsed().as_secs_f64();
    (
        worst <= 1e-6 && !code.is_static() && secs < 30.0,
        format!("max |app - exhaustive| = {worst:.2e}, {secs:.2} s"),
    )
}

fn scl_ml() -> Verdict {
    let t = Instant::now();
    let info: Vec<usize> = (0..8usize).filter(|i| i.count_ones() >= 2).collect();
    let code = PolarLikeCode::reed_muller(1, 3).unwrap();
    let book = enumerate_codewords(8, &info, false);
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let frames = 10_000;
    let mut agree = 0;
    for _ in 0..frames {
        let c = &book[rng.random_range(0..book.len())];
        let llr = bpsk_llrs(c, 0.0, &mut rng);
        let ml = book
            .iter()
            .max_by(|a, b| correlation(a, &llr).total_cmp(&correlation(b, &llr)))
            .unwrap();
        let mut top = scl_decode(&code, &llr, 16).swap_remove(0).0;
        butterfly(&mut top);
        agree += usize::from(&top == ml);
    }
    let secs = t.elapsed().as_secs_f64();
    (
        agree == frames && code.info_set() == info && secs < 60.0,
        format!("{agree}/{frames} agree, {secs:.2} s"),
    )
}

fn qam16_point(label: usize) -> Complex64 {
    let lv = [-3.0, -1.0, 3.0, 1.0];
    Complex64::new(lv[label >> 2], lv[label & 3]) / 10f64.sqrt()
}

fn detector() -> Verdict {
    let qpsk = Constellation::new(Modulation::Qpsk);
    let one = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut worst_cf = 0.0f64;
    for _ in 0..1000 {
        let y = Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let n0 = rng.random_range(0.01..5.0);
        let out = mmse_pic_detect(&DVector::from_element(1, y), &one, n0, &[0.0; 2], &qpsk).unwrap();
        let want = 2.0 * 2f64.sqrt() * y.re / n0;
        worst_cf = worst_cf.max((out.ext[0] - want).abs() / want.abs().max(1.0));
    }
    let qam = Constellation::new(Modulation::Qam16);
    let mut worst_lmmse = 0.0f64;
    for _ in 0..200 {
        let h = rayleigh_channel(&mut rng, 4, 4);
        let x = DVector::from_fn(4, |_, _| qam16_point(rng.random_range(0..16)));
        let n0 = rng.random_range(0.05..2.0);
        let y = channel_apply(&x, &h, &mut rng, n0);
        let out = mmse_pic_detect(&y, &h, n0, &[0.0; 16], &qam).unwrap();
        let hh = h.adjoint();
        let w = (&hh * &h + DMatrix::identity(4, 4) * Complex64::new(n0, 0.0)).try_inverse().unwrap() * &hh;
        for i in 0..4 {
            let mu = (w.row(i) * h.column(i))[(0, 0)].re;
            let est = (w.row(i) * &y)[(0, 0)] / mu;
            let nu = 1.0 / mu - 1.0;
            for j in 0..4 {
                let (mut d0, mut d1) = (f64::INFINITY, f64::INFINITY);
                for l in 0..16 {
                    let d = (est - qam16_point(l)).norm_sqr();
                    if (l >> (3 - j)) & 1 == 0 {
                        d0 = d0.min(d);
                    } else {
                        d1 = d1.min(d);
                    }
                }
                let want = (d1 - d0) / nu;
                worst_lmmse = worst_lmmse.max((out.ext[4 * i + j] - want).abs() / want.abs().max(1.0));
            }
        }
    }
    (
        worst_cf <= 1e-9 && worst_lmmse <= 1e-9,
        format!("closed form {worst_cf:.1e}, LMMSE 4x4 {worst_lmmse:.1e} (relative)"),
    )
}

fn extrinsic_identity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut frames = 0;
    let mut exact = true;
    for code in [
        PolarLikeCode::reed_muller(2, 4).unwrap(),
        PolarLikeCode::with_pac_constraints(4, &[6, 7, 9, 10, 11, 13, 14, 15]).unwrap(),
        PolarLikeCode::reed_muller(1, 5).unwrap(),
    ] {
        let n = code.len();
        let cfg = SisoConfig {
            kind: SisoKind::Exhaustive,
            alpha: vec![1.0],
            ..SisoConfig::default()
        };
        let mut dec = SisoDecoder::new(&code, &cfg).unwrap();
        let mut out = SoftOutput::zeros(n);
        for _ in 0..300 {
            let ch: Vec<f64> = (0..n).map(|_| rng.random_range(-15.0..15.0)).collect();
            let pr: Vec<f64> = (0..n).map(|_| rng.random_range(-15.0..15.0)).collect();
            dec.decode_into(&ch, Some(&pr), 0, &mut out);
            exact &= (0..n).all(|i| out.ext[i] == out.app[i] - pr[i] - ch[i]);
            frames += 1;
        }
    }
    (exact, format!("{frames} frames, bitwise equal"))
}

fn awgn_config(ebn0: Vec<f64>, max_frames: u64) -> SimConfig {
    SimConfig {
        scenario: Scenario::Awgn,
        ebn0_db: ebn0,
        min_frames: 1,
        max_frames,
        target_frame_errors: 100,
        idd: IddConfig {
            iterations: 20,
            siso: SisoConfig {
                kind: SisoKind::SoScl,
                list_size: 4,
                alpha: vec![0.6],
                ..SisoConfig::default()
            },
            ..IddConfig::default()
        },
        seed: 2024,
        ..SimConfig::default()
    }
}

fn fmt_point(p: &PointResult) -> String {
    let (lo, hi) = p.bler_interval();
    format!("{} dB: {}/{} = {:.2e} [{:.1e}, {:.1e}]", p.ebn0_db, p.frame_errors, p.frames, p.bler(), lo, hi)
}

fn awgn_waterfall(code: &GldpcCode) -> Verdict {
    let t = Instant::now();
    let sweep = Simulator::with_code(awgn_config(vec![1.5, 1.75, 2.0], 20_000), code.clone())
        .unwrap()
        .run()
        .unwrap();
    let p = &sweep.points;
    let decreasing = p.windows(2).all(|w| w[1].bler() < w[0].bler());
    let enough = p.iter().all(|q| q.frame_errors >= 100);
    let mut cfg = awgn_config(vec![3.0], 4000);
    cfg.target_frame_errors = u64::MAX;
    cfg.min_frames = 4000;
    let low = Simulator::with_code(cfg, code.clone()).unwrap().run().unwrap().points.remove(0);
    let reached = low.bler_interval().1 <= 1e-3;
    let detail = p.iter().chain([&low]).map(fmt_point).collect::<Vec<_>>().join("; ");
    (
        decreasing && enough && reached,
        format!("{detail}; {:.0} s", t.elapsed().as_secs_f64()),
    )
}

const MIMO_EBN0: f64 = 13.2;
const MIMO_FRAMES: u64 = 12_000;

fn mimo_gain(code: &GldpcCode) -> Verdict {
    let t = Instant::now();
    let arms: Vec<PointResult> = (1..=3)
        .map(|d| {
            let cfg = SimConfig {
                scenario: Scenario::Mimo,
                ebn0_db: vec![MIMO_EBN0],
                min_frames: MIMO_FRAMES,
                max_frames: MIMO_FRAMES,
                nt: 4,
                nr: 4,
                modulation: Modulation::Qam16,
                idd: IddConfig {
                    passes: d,
                    iterations: 6,
                    rho: 0.6,
                    ..IddConfig::default()
                },
                // same seed in every arm: identical messages, channels and noise
                seed: 77,
                ..SimConfig::default()
            };
            Simulator::with_code(cfg, code.clone()).unwrap().run().unwrap().points.remove(0)
        })
        .collect();
    let ci: Vec<(f64, f64)> = arms.iter().map(PointResult::bler_interval).collect();
    let d1 = arms[0].bler();
    let ok = (1e-2..=1e-1).contains(&d1) && ci[1].1 < ci[0].0 && ci[2].1 < ci[1].0;
    let detail = arms
        .iter()
        .enumerate()
        .map(|(i, p)| format!("D={} {}", i + 1, fmt_point(p)))
        .collect::<Vec<_>>()
        .join("; ");
    (ok, format!("{detail}; {:.0} s", t.elapsed().as_secs_f64()))
}

fn determinism(code: &GldpcCode) -> Verdict {
    let mimo = SimConfig {
        scenario: Scenario::Mimo,
        ebn0_db: vec![12.5, 13.5],
        min_frames: 10,
        max_frames: 120,
        target_frame_errors: 15,
        batch_frames: 32,
        idd: IddConfig {
            passes: 2,
            iterations: 6,
            ..IddConfig::default()
        },
        seed: 5,
        ..SimConfig::default()
    };
    let mut awgn = awgn_config(vec![1.75, 2.0], 150);
    awgn.target_frame_errors = 20;
    awgn.batch_frames = 16;
    let mut same = true;
    let mut runs = 0;
    for cfg in [awgn, mimo] {
        let csv = |exec: Execution, threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                let res = Simulator::with_code(cfg.clone(), code.clone())
                    .unwrap()
                    .with_execution(exec)
                    .run()
                    .unwrap();
                let mut buf = Vec::new();
                write_csv(&mut buf, &res).unwrap();
                buf
            })
        };
        let reference = csv(Execution::Sequential, 1);
        for (exec, threads) in [(Execution::Sequential, 1), (Execution::Parallel, 1), (Execution::Parallel, 2), (Execution::Parallel, 5)] {
            same &= csv(exec, threads) == reference;
            runs += 1;
        }
    }
    (same, format!("{runs} runs over 1, 2 and 5 workers byte-identical"))
}

fn main() -> ExitCode {
    let code = default_code();
    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict>)> = vec![
        ("construction anchor", Box::new(construction)),
        ("so-scl exactness", Box::new(so_scl_exactness)),
        ("scl ml property", Box::new(scl_ml)),
        ("detector closed form and lmmse", Box::new(detector)),
        ("siso extrinsic identity", Box::new(extrinsic_identity)),
        ("awgn waterfall", Box::new(|| awgn_waterfall(&code))),
        ("mimo idd gain", Box::new(|| mimo_gain(&code))),
        ("determinism", Box::new(|| determinism(&code))),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in &criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let (ok, detail) = check();
        failed += usize::from(!ok);
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
