//! Interval estimates and SNR bookkeeping.

/// Two-sided 95% standard normal quantile.
pub const Z_95: f64 = 1.959963984540054;

/// Wilson score interval for `successes` out of `trials`; `(0, 1)` when `trials = 0`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).clamp(0.0, p), (center + half).clamp(p, 1.0))
}

/// `Es/N0 = Eb/N0 − 10·log10(N·N_r / (K·N_t·M_c))`, all in dB.
pub fn ebn0_to_esn0(ebn0_db: f64, n: usize, k: usize, nt: usize, nr: usize, mc: usize) -> f64 {
    ebn0_db - 10.0 * ((n * nr) as f64 / (k * nt * mc) as f64).log10()
}

/// Noise variance per complex entry for transmit energy `es` at the given `Es/N0`.
pub fn noise_variance(esn0_db: f64, es: f64) -> f64 {
    es / 10f64.powf(esn0_db / 10.0)
}
