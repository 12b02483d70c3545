use std::fs::File;
use std::io::{self, BufWriter, IsTerminal, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use gldpc_pc::gldpc::build_gldpc_pc;
use gldpc_pc::polar::{rm_info_set, PolarLikeCode};
use gldpc_pc::sim::{self, validate, SimConfig, Simulator};

#[derive(Parser)]
#[command(name = "sim", version, about = "GLDPC-PC Monte Carlo simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a BER/BLER simulation described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Eb/N0 sweep in dB: `start:step:stop` (inclusive) or a comma list.
        #[arg(long)]
        snr: Option<String>,
        /// Frame cap per SNR point.
        #[arg(long)]
        frames: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Results CSV; stdout when neither this nor the config names a file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; all cores by default.
        #[arg(long)]
        threads: Option<usize>,
        /// Suppress progress output.
        #[arg(long, short)]
        quiet: bool,
    },
    /// Build a GLDPC-PC code and write its definition file.
    BuildCode {
        #[arg(long)]
        n_tilde: usize,
        /// `rm:r,m` for a Reed-Muller component, `rm-pac:r,m` for its PAC-constrained variant.
        #[arg(long)]
        component: String,
        #[arg(long, default_value_t = 1)]
        perm_seed: u64,
        /// Required dimension; later seeds are tried until it is met.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the built-in oracle checks.
    Validate,
}

fn parse_snr(s: &str) -> Result<Vec<f64>> {
    let num = |t: &str| t.trim().parse::<f64>().with_context(|| format!("bad SNR value {t:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    let list = match parts.as_slice() {
        [a, step, b] => {
            let (a, step, b) = (num(a)?, num(step)?, num(b)?);
            if !(step > 0.0) || b < a {
                bail!("SNR range needs step > 0 and start <= stop");
            }
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            (0..count).map(|i| a + i as f64 * step).collect()
        }
        [one] => one.split(',').map(num).collect::<Result<_>>()?,
        _ => bail!("SNR must be start:step:stop or a comma list"),
    };
    Ok(list)
}

fn parse_component(s: &str) -> Result<PolarLikeCode> {
    let (kind, args) = s.split_once(':').context("component must look like rm:3,5")?;
    let (r, m) = args.split_once(',').context("component needs two parameters r,m")?;
    let (r, m): (u32, u32) = (r.trim().parse()?, m.trim().parse()?);
    if r > m || m > 16 {
        bail!("need r <= m <= 16");
    }
    Ok(match kind {
        "rm" => PolarLikeCode::reed_muller(r, m)?,
        "rm-pac" => PolarLikeCode::with_pac_constraints(m, &rm_info_set(r, m))?,
        _ => bail!("unknown component kind {kind:?}"),
    })
}

fn run(
    config: PathBuf,
    snr: Option<String>,
    frames: Option<u64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    threads: Option<usize>,
    quiet: bool,
) -> Result<()> {
    let mut cfg = SimConfig::load(&config).with_context(|| format!("reading {}", config.display()))?;
    if let Some(s) = snr {
        cfg.ebn0_db = parse_snr(&s)?;
    }
    if let Some(n) = frames {
        cfg.max_frames = n;
        cfg.min_frames = cfg.min_frames.min(n);
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.output = Some(o);
    }
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    let show = !quiet && io::stderr().is_terminal();
    let mut simulator = Simulator::new(cfg.clone())?;
    if show {
        simulator = simulator.with_progress(|p| {
            eprint!(
                "\rEb/N0 {:5.2} dB  frames {:8}  frame errors {:6}  BLER {:.3e}   ",
                p.ebn0_db,
                p.frames,
                p.frame_errors,
                p.bler()
            );
        });
    }
    let result = simulator.run()?;
    if show {
        eprintln!();
    }
    match &cfg.output {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            sim::write_csv(BufWriter::new(file), &result)?;
            sim::write_metadata(&sim::metadata_path(path), &simulator, &result)?;
        }
        None => sim::write_csv(io::stdout().lock(), &result)?,
    }
    Ok(())
}

fn build_code(n_tilde: usize, component: &str, perm_seed: u64, k: Option<usize>, out: PathBuf) -> Result<()> {
    let comp = parse_component(component)?;
    let code = build_gldpc_pc(n_tilde, &comp, perm_seed, k)?;
    code.save(&out).with_context(|| format!("writing {}", out.display()))?;
    println!(
        "N = {}  K = {}  rank(H) = {}  perm seed = {}  sha256 = {}",
        code.len(),
        code.dimension(),
        code.rank(),
        code.perm_seed().map_or("-".into(), |s| s.to_string()),
        code.fingerprint()
    );
    Ok(())
}

fn run_validate() -> bool {
    let mut ok = true;
    let mut stdout = io::stdout().lock();
    for r in validate::run_oracles() {
        ok &= r.passed;
        let _ = writeln!(stdout, "{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    ok
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            config,
            snr,
            frames,
            seed,
            out,
            threads,
            quiet,
        } => run(config, snr, frames, seed, out, threads, quiet),
        Command::BuildCode {
            n_tilde,
            component,
            perm_seed,
            k,
            out,
        } => build_code(n_tilde, &component, perm_seed, k, out),
        Command::Validate => {
            if run_validate() {
                Ok(())
            } else {
                return ExitCode::FAILURE;
            }
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_ranges() {
        assert_eq!(parse_snr("2.0:0.5:4.0").unwrap(), vec![2.0, 2.5, 3.0, 3.5, 4.0]);
        assert_eq!(parse_snr("1:0.1:1.3").unwrap().len(), 4);
        assert_eq!(parse_snr("3.5").unwrap(), vec![3.5]);
        assert_eq!(parse_snr("1, 2,4").unwrap(), vec![1.0, 2.0, 4.0]);
        assert!(parse_snr("4:1:2").is_err());
        assert!(parse_snr("1:0:2").is_err());
        assert!(parse_snr("1:x:2").is_err());
        assert!(parse_snr("1:2").is_err());
    }

    #[test]
    fn components() {
        let rm = parse_component("rm:3,5").unwrap();
        assert_eq!((rm.len(), rm.dimension()), (32, 26));
        assert!(rm.is_static());
        let pac = parse_component("rm-pac:2,4").unwrap();
        assert_eq!((pac.len(), pac.dimension()), (16, 11));
        assert!(!pac.is_static());
        assert!(parse_component("bch:3,5").is_err());
        assert!(parse_component("rm:5,3").is_err());
        assert!(parse_component("rm3,5").is_err());
    }
}
