//! Scalar LLR arithmetic shared by the decoders and detectors.
//!
//! LLRs are natural-log ratios `log P(b=0)/P(b=1)`; positive favors zero.

/// Saturation magnitude applied to decoder inputs and SISO outputs (nats).
pub const LLR_MAX: f64 = 40.0;

#[inline]
pub fn saturate(x: f64) -> f64 {
    x.clamp(-LLR_MAX, LLR_MAX)
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `-ln P(b = bit)` for a bit with LLR `llr`.
#[inline]
pub fn bit_cost(llr: f64, bit: u8) -> f64 {
    if bit == 0 {
        softplus(-llr)
    } else {
        softplus(llr)
    }
}

/// `ln(e^a + e^b)`, tolerant of `-inf` operands.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Difference of two log-masses as an LLR, mapping an empty class to ±`LLR_MAX`.
#[inline]
pub fn log_ratio(log_zero: f64, log_one: f64) -> f64 {
    match (log_zero.is_finite(), log_one.is_finite()) {
        (true, true) => saturate(log_zero - log_one),
        (true, false) => LLR_MAX,
        (false, true) => -LLR_MAX,
        (false, false) => 0.0,
    }
}

/// Probability that the bit equals `d` given its LLR.
#[inline]
pub fn llr_to_prob(llr: f64, d: u8) -> f64 {
    let s = if d == 0 { -llr } else { llr };
    1.0 / (1.0 + s.exp())
}

#[inline]
pub fn hard_decision(llr: f64) -> u8 {
    (llr < 0.0) as u8
}

/// Check-node combine `2·atanh(tanh(a/2)·tanh(b/2))`.
#[inline]
pub fn boxplus(a: f64, b: f64) -> f64 {
    let sign = if (a < 0.0) != (b < 0.0) { -1.0 } else { 1.0 };
    sign * a.abs().min(b.abs()) + (-(a + b).abs()).exp().ln_1p() - (-(a - b).abs()).exp().ln_1p()
}

/// Min-sum approximation of [`boxplus`].
#[inline]
pub fn boxplus_min_sum(a: f64, b: f64) -> f64 {
    let sign = if (a < 0.0) != (b < 0.0) { -1.0 } else { 1.0 };
    sign * a.abs().min(b.abs())
}
