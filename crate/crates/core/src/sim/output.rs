use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::{SimConfig, SimError, SimResult, Simulator, RNG_ID};

pub const CSV_HEADER: [&str; 13] = [
    "scenario",
    "ebn0_db",
    "esn0_db",
    "frames",
    "bit_errors",
    "frame_errors",
    "ber",
    "bler",
    "bler_ci_lo",
    "bler_ci_hi",
    "mean_bp_iters",
    "mean_det_passes",
    "seed",
];

/// Writes one row per SNR point. Rows depend only on the configuration and seed.
pub fn write_csv<W: Write>(out: W, result: &SimResult) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for p in &result.points {
        let (lo, hi) = p.bler_interval();
        w.write_record([
            p.scenario.as_str().to_string(),
            p.ebn0_db.to_string(),
            p.esn0_db.to_string(),
            p.frames.to_string(),
            p.bit_errors.to_string(),
            p.frame_errors.to_string(),
            p.ber().to_string(),
            p.bler().to_string(),
            lo.to_string(),
            hi.to_string(),
            p.mean_bp_iterations().to_string(),
            p.mean_detector_passes().to_string(),
            p.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `results.csv` → `results.meta.json`.
pub fn metadata_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

/// Configuration echo, code fingerprint, generator identifier and timings.
pub fn metadata(sim: &Simulator<'_>, result: &SimResult) -> serde_json::Value {
    let cfg: &SimConfig = sim.config();
    json!({
        "config": cfg,
        "code": {
            "n": sim.code().len(),
            "k": sim.code().dimension(),
            "sha256": sim.code().fingerprint(),
            "definition": sim.code().to_file(),
        },
        "interleaver_seed": cfg.interleaver_seed.unwrap_or(cfg.seed),
        "rng": RNG_ID,
        "version": env!("CARGO_PKG_VERSION"),
        "points": result.points,
    })
}

pub fn write_metadata(path: &Path, sim: &Simulator<'_>, result: &SimResult) -> Result<(), SimError> {
    let text = serde_json::to_string_pretty(&metadata(sim, result))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}
