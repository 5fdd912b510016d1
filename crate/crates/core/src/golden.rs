//! Correctly rounded reference arithmetic.
//!
//! Results are computed exactly (dyadic values, or an unevaluated quotient for
//! division) and rounded once. Rounding follows the posit definition directly:
//! find the two posits bracketing the exact value by binary search over patterns,
//! then compare against the midpoint, which is the value of the (N+1)-bit posit
//! lying between their extended encodings. Ties go to the even pattern and
//! nothing nonzero rounds to zero or NaR.
//!
//! None of this goes through [`crate::posit::encode_round`]; the datapath model
//! is judged against it.

use core::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};
use crate::exact::{ExactQuotient, ExactValue};
use crate::posit::{PositBits, PositConfig};

/// Quiet NaN produced for NaR.
pub const F32_QNAN: u32 = 0x7FC0_0000;

/// Value of the positive pattern `word` in an `n`-bit posit with `es` exponent
/// bits. `n` may be one wider than [`PositConfig::MAX_BITS`] for midpoints.
fn pattern_value(word: u64, n: u32, es: u32) -> ExactValue {
    debug_assert!(word != 0 && word < 1 << (n - 1));
    let width = n - 1;
    let mut pos = width; // bits still unread, MSB first
    let bit = |i: u32| (word >> i) & 1;
    let run = bit(width - 1);
    let mut l = 0;
    while pos > 0 && bit(pos - 1) == run {
        l += 1;
        pos -= 1;
    }
    pos = pos.saturating_sub(1); // stop bit
    let k: i64 = if run == 1 { l as i64 - 1 } else { -(l as i64) };
    let mut e = 0u64;
    for _ in 0..es {
        e <<= 1;
        if pos > 0 {
            pos -= 1;
            e |= bit(pos);
        }
    }
    let frac_len = pos;
    let frac = word & ((1u64 << frac_len) - 1);
    let te = (k << es) + e as i64;
    ExactValue::new(BigInt::from((1u64 << frac_len) | frac), te - frac_len as i64)
}

/// Anything that can be compared against a positive dyadic value.
trait RoundTarget {
    fn is_negative(&self) -> bool;
    fn cmp_abs(&self, v: &ExactValue) -> Ordering;
}

impl RoundTarget for ExactValue {
    fn is_negative(&self) -> bool {
        ExactValue::is_negative(self)
    }
    fn cmp_abs(&self, v: &ExactValue) -> Ordering {
        self.abs().compare(v).expect("finite")
    }
}

impl RoundTarget for ExactQuotient {
    fn is_negative(&self) -> bool {
        ExactQuotient::is_negative(self)
    }
    fn cmp_abs(&self, v: &ExactValue) -> Ordering {
        ExactQuotient::cmp_abs(self, v)
    }
}

fn round_nonzero<T: RoundTarget>(t: &T, cfg: PositConfig) -> PositBits {
    let n = cfg.n_bits();
    let es = cfg.es_bits();
    let value = |w: u32| pattern_value(u64::from(w), n, es);
    let maxpos = cfg.maxpos_word();

    let magnitude = if t.cmp_abs(&value(maxpos)) != Ordering::Less {
        maxpos
    } else if t.cmp_abs(&value(1)) != Ordering::Greater {
        1
    } else {
        // value(lo) < |t| < value(hi)
        let (mut lo, mut hi) = (1u32, maxpos);
        let mut exact = None;
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            match t.cmp_abs(&value(mid)) {
                Ordering::Less => hi = mid,
                Ordering::Greater => lo = mid,
                Ordering::Equal => {
                    exact = Some(mid);
                    break;
                }
            }
        }
        exact.unwrap_or_else(|| {
            let midpoint = pattern_value((u64::from(lo) << 1) | 1, n + 1, es);
            match t.cmp_abs(&midpoint) {
                Ordering::Less => lo,
                Ordering::Greater => hi,
                Ordering::Equal => {
                    if lo & 1 == 0 {
                        lo
                    } else {
                        hi
                    }
                }
            }
        })
    };
    let word = if t.is_negative() { magnitude.wrapping_neg() & cfg.mask() } else { magnitude };
    cfg.truncating(word)
}

/// Round an exact value to the nearest posit, ties to the even pattern.
pub fn round_exact(v: &ExactValue, cfg: PositConfig) -> PositBits {
    if v.is_nar() {
        cfg.nar()
    } else if v.is_zero() {
        cfg.zero()
    } else {
        round_nonzero(v, cfg)
    }
}

/// Round `num / den` to the nearest posit.
pub fn round_quotient(num: &ExactValue, den: &ExactValue, cfg: PositConfig) -> PositBits {
    if num.is_nar() || den.is_nar() || den.is_zero() {
        cfg.nar()
    } else if num.is_zero() {
        cfg.zero()
    } else {
        round_nonzero(&ExactQuotient { num: num.clone(), den: den.clone() }, cfg)
    }
}

fn same_config(a: PositBits, b: PositBits) -> Result<PositConfig> {
    if a.config() != b.config() {
        return Err(Error::ConfigMismatch);
    }
    Ok(a.config())
}

pub fn g_add(a: PositBits, b: PositBits) -> Result<PositBits> {
    let cfg = same_config(a, b)?;
    Ok(round_exact(&(&a.real_value() + &b.real_value()), cfg))
}

pub fn g_sub(a: PositBits, b: PositBits) -> Result<PositBits> {
    g_add(a, b.negate())
}

pub fn g_mul(a: PositBits, b: PositBits) -> Result<PositBits> {
    let cfg = same_config(a, b)?;
    Ok(round_exact(&(&a.real_value() * &b.real_value()), cfg))
}

pub fn g_div(a: PositBits, b: PositBits) -> Result<PositBits> {
    let cfg = same_config(a, b)?;
    Ok(round_quotient(&a.real_value(), &b.real_value(), cfg))
}

/// a×b + c with one rounding at the end.
pub fn g_fma(a: PositBits, b: PositBits, c: PositBits) -> Result<PositBits> {
    let cfg = same_config(a, b)?;
    same_config(a, c)?;
    let exact = &(&a.real_value() * &b.real_value()) + &c.real_value();
    Ok(round_exact(&exact, cfg))
}

/// Exact value of a binary32 word; `None` for NaN and infinities.
pub fn f32_exact(bits: u32) -> Option<ExactValue> {
    let negative = bits >> 31 == 1;
    let biased = ((bits >> 23) & 0xFF) as i64;
    let mantissa = i64::from(bits & 0x7F_FFFF);
    if biased == 0xFF {
        return None;
    }
    // subnormals keep their exact value
    let (sig, exp) = if biased == 0 { (mantissa, -149) } else { (mantissa | 1 << 23, biased - 150) };
    let v = ExactValue::from_i64(sig, exp);
    Some(if negative { -v } else { v })
}

/// binary32 → posit: nearest posit (ties to even), NaN/±Inf → NaR, saturating.
pub fn float_to_posit(bits: u32, cfg: PositConfig) -> PositBits {
    match f32_exact(bits) {
        None => cfg.nar(),
        Some(v) => round_exact(&v, cfg),
    }
}

/// posit → binary32: nearest binary32 (ties to even), NaR → quiet NaN, Zero → +0.
pub fn posit_to_float(p: PositBits) -> u32 {
    if p.is_nar() {
        F32_QNAN
    } else {
        exact_to_f32(&p.real_value())
    }
}

/// Round `m`·2^-`shift` to an integer, ties to even.
fn shift_round_even(m: &BigUint, shift: u64) -> BigUint {
    if shift == 0 {
        return m.clone();
    }
    let q = m >> shift as usize;
    let rem = m - (&q << shift as usize);
    let half = BigUint::one() << (shift - 1) as usize;
    match rem.cmp(&half) {
        Ordering::Less => q,
        Ordering::Greater => q + 1u32,
        Ordering::Equal => {
            if q.bit(0) {
                q + 1u32
            } else {
                q
            }
        }
    }
}

/// Round an exact value to binary32 with IEEE round-to-nearest-even semantics.
pub fn exact_to_f32(v: &ExactValue) -> u32 {
    if v.is_nar() {
        return F32_QNAN;
    }
    if v.is_zero() {
        return 0;
    }
    let sign = if v.is_negative() { 1u32 << 31 } else { 0 };
    let m = v.numerator().magnitude();
    let e = v.exponent2();
    let top = v.floor_log2().expect("finite");
    let inf = sign | 0x7F80_0000;
    if top > 127 {
        return inf;
    }
    // quantum of the target binade: 2^(top-23) for normals, 2^-149 below
    let quantum = (top - 23).max(-149);
    let q = if e >= quantum { m << (e - quantum) as usize } else { shift_round_even(m, (quantum - e) as u64) };
    let q = q.to_u64().expect("at most 25 bits");
    if quantum == -149 && q < 1 << 23 {
        return sign | q as u32;
    }
    // normalise a carry out of the significand
    let (q, quantum) = if q >> 24 != 0 { (q >> 1, quantum + 1) } else { (q, quantum) };
    let biased = quantum + 23 + 127;
    if biased >= 0xFF {
        return inf;
    }
    sign | ((biased as u32) << 23) | (q as u32 & 0x7F_FFFF)
}

/// Brute-force nearest posit: scan every positive pattern for the bracketing
/// pair, then apply the (N+1)-bit midpoint rule. Used as an oracle in tests.
pub fn nearest_by_scan(v: &ExactValue, cfg: PositConfig) -> PositBits {
    if v.is_nar() {
        cfg.nar()
    } else if v.is_zero() {
        cfg.zero()
    } else {
        scan_nonzero(v, cfg)
    }
}

/// Scan oracle for `num / den`.
pub fn nearest_quotient_by_scan(num: &ExactValue, den: &ExactValue, cfg: PositConfig) -> PositBits {
    if num.is_nar() || den.is_nar() || den.is_zero() {
        cfg.nar()
    } else if num.is_zero() {
        cfg.zero()
    } else {
        scan_nonzero(&ExactQuotient { num: num.clone(), den: den.clone() }, cfg)
    }
}

fn scan_nonzero<T: RoundTarget>(t: &T, cfg: PositConfig) -> PositBits {
    let mut below = None;
    let mut above = None;
    for m in 1..=cfg.maxpos_word() {
        match t.cmp_abs(&cfg.truncating(m).real_value()) {
            Ordering::Equal => {
                below = Some(m);
                above = Some(m);
                break;
            }
            Ordering::Greater => below = Some(m),
            Ordering::Less => {
                above = Some(m);
                break;
            }
        }
    }
    let magnitude = match (below, above) {
        (Some(l), Some(h)) if l == h => l,
        (None, Some(h)) => h,
        (Some(l), None) => l,
        (Some(l), Some(h)) => {
            let midpoint = pattern_value((u64::from(l) << 1) | 1, cfg.n_bits() + 1, cfg.es_bits());
            match t.cmp_abs(&midpoint) {
                Ordering::Less => l,
                Ordering::Greater => h,
                Ordering::Equal => {
                    if l & 1 == 0 {
                        l
                    } else {
                        h
                    }
                }
            }
        }
        (None, None) => unreachable!("maxpos is always scanned"),
    };
    let word = if t.is_negative() { magnitude.wrapping_neg() & cfg.mask() } else { magnitude };
    cfg.truncating(word)
}

/// True when the pattern is one ULP away (adjacent signed-integer pattern).
pub fn adjacent(a: PositBits, b: PositBits) -> bool {
    (a.as_signed() - b.as_signed()).abs() == 1
}
