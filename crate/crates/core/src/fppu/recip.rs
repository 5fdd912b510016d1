//! Reciprocal approximation for the divider.
//!
//! The seed is the cubic `4k1k2 − 4(k1² + k2)x + 8k1x² − 4x³`, evaluated in
//! Horner-like form with two fixed-point multiplies and a final shift by two:
//!
//! ```text
//! b = k1 − x;  c = x·b;  d = k2 − c;  e = d·b;  y = 4e
//! ```
//!
//! One or more Newton-Raphson rounds `y ← y(2 − xy)` then refine it. All values
//! are unsigned fixed point with `frac_width` fractional bits; products are
//! truncated back to that width.

use crate::error::{Error, Result};
use crate::posit::PositConfig;

/// Constants minimising the integrated squared relative error of the seed on [1/2, 1].
pub const K1_OPT: f64 = 1.4567844114901045;
pub const K2_OPT: f64 = 1.0009290026616422;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReciprocalParams {
    pub k1: f64,
    pub k2: f64,
    pub nr_rounds: u32,
    /// Fractional bits of the internal fixed-point format (at most 64).
    pub frac_width: u32,
}

impl ReciprocalParams {
    /// Optimised constants, one NR round, 2·N fractional bits.
    pub fn for_config(cfg: PositConfig) -> Self {
        ReciprocalParams { k1: K1_OPT, k2: K2_OPT, nr_rounds: 1, frac_width: 2 * cfg.n_bits() }
    }

    pub fn with_nr_rounds(self, nr_rounds: u32) -> Self {
        ReciprocalParams { nr_rounds, ..self }
    }

    pub fn k1_fixed(&self) -> u128 {
        to_fixed(self.k1, self.frac_width)
    }

    pub fn k2_fixed(&self) -> u128 {
        to_fixed(self.k2, self.frac_width)
    }
}

/// Nearest fixed-point encoding of a non-negative `v`.
pub fn to_fixed(v: f64, frac_width: u32) -> u128 {
    debug_assert!(v >= 0.0 && frac_width <= 64);
    let scaled = v * crate::exact::pow2(i64::from(frac_width));
    (scaled + 0.5) as u128
}

pub fn from_fixed(v: u128, frac_width: u32) -> f64 {
    v as f64 * crate::exact::pow2(-i64::from(frac_width))
}

/// `(a·b) >> shift` without overflowing for operands up to 2^127.
pub(crate) fn mul_shr(a: u128, b: u128, shift: u32) -> u128 {
    const LO: u128 = u64::MAX as u128;
    let (a1, a0) = (a >> 64, a & LO);
    let (b1, b0) = (b >> 64, b & LO);
    let p00 = a0 * b0;
    let p01 = a0 * b1;
    let p10 = a1 * b0;
    let p11 = a1 * b1;
    let (mid, mid_carry) = p01.overflowing_add(p10);
    let (lo, c1) = p00.overflowing_add(mid << 64);
    let hi = p11 + (mid >> 64) + (u128::from(mid_carry) << 64) + u128::from(c1);
    match shift {
        0 => {
            debug_assert_eq!(hi, 0);
            lo
        }
        1..=127 => (lo >> shift) | (hi << (128 - shift)),
        _ => hi >> (shift - 128),
    }
}

/// Seed reciprocal of `x ∈ [1/2, 1]` (fixed point), rejecting other inputs.
pub fn recip_approx(x: u128, params: &ReciprocalParams) -> Result<u128> {
    let w = params.frac_width;
    let one = 1u128 << w;
    if x < one >> 1 || x > one {
        return Err(Error::ReciprocalDomain);
    }
    let b = params.k1_fixed() - x;
    let c = mul_shr(x, b, w);
    let d = params.k2_fixed() - c;
    let e = mul_shr(d, b, w);
    Ok(e << 2)
}

/// One Newton-Raphson step `y(2 − xy)`.
pub fn nr_refine(x: u128, y: u128, frac_width: u32) -> u128 {
    let t = mul_shr(x, y, frac_width);
    let two = 2u128 << frac_width;
    // x·y stays well below 2 for any usable estimate
    mul_shr(y, two.saturating_sub(t), frac_width)
}

/// Seed followed by `params.nr_rounds` refinements.
pub fn reciprocal(x: u128, params: &ReciprocalParams) -> Result<u128> {
    let mut y = recip_approx(x, params)?;
    for _ in 0..params.nr_rounds {
        y = nr_refine(x, y, params.frac_width);
    }
    Ok(y)
}
