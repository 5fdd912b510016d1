//! Posit bit-level representation.
//!
//! A posit⟨N,ES⟩ is an N-bit two's-complement word with a sign bit, a
//! run-length encoded regime, up to ES exponent bits and a fraction. This module
//! decodes patterns into fields, evaluates them exactly, converts them into the
//! floating-point intermediate record ([`Fir`]) used by the datapath, and encodes
//! a `Fir` back into a posit with round-to-nearest-even.

use core::cmp::Ordering;
use core::fmt;

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::exact::ExactValue;

/// Total width and maximum exponent width of a posit format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PositConfig {
    n_bits: u32,
    es_bits: u32,
}

impl PositConfig {
    pub const MIN_BITS: u32 = 3;
    pub const MAX_BITS: u32 = 32;
    pub const MAX_ES: u32 = 4;

    pub const fn new(n_bits: u32, es_bits: u32) -> Result<Self> {
        if n_bits < Self::MIN_BITS || n_bits > Self::MAX_BITS || es_bits > Self::MAX_ES || n_bits < es_bits + 2 {
            return Err(Error::InvalidConfig { n_bits, es_bits });
        }
        Ok(PositConfig { n_bits, es_bits })
    }

    pub const fn n_bits(self) -> u32 {
        self.n_bits
    }

    pub const fn es_bits(self) -> u32 {
        self.es_bits
    }

    /// log2(useed) = 2^ES.
    pub const fn useed_log2(self) -> u32 {
        1 << self.es_bits
    }

    /// useed = 2^(2^ES); at most 2^16, so always an exact integer.
    pub const fn useed(self) -> u64 {
        1u64 << self.useed_log2()
    }

    pub const fn mask(self) -> u32 {
        if self.n_bits == 32 {
            u32::MAX
        } else {
            (1u32 << self.n_bits) - 1
        }
    }

    pub const fn nar_word(self) -> u32 {
        1u32 << (self.n_bits - 1)
    }

    pub const fn maxpos_word(self) -> u32 {
        self.nar_word() - 1
    }

    pub const fn one_word(self) -> u32 {
        1u32 << (self.n_bits - 2)
    }

    /// Largest regime value, reached by an all-ones regime.
    pub const fn max_k(self) -> i32 {
        self.n_bits as i32 - 2
    }

    /// Smallest regime value of a nonzero pattern (N−2 zeros then the stop bit).
    pub const fn min_k(self) -> i32 {
        -(self.n_bits as i32 - 2)
    }

    /// Fraction width carried by a [`Fir`] in this format: 2·(N−1)+3 bits, enough
    /// for an exact two-operand product plus guard, round and sticky positions.
    pub const fn fir_width(self) -> u32 {
        2 * (self.n_bits - 1) + 3
    }

    pub fn bits(self, word: u32) -> Result<PositBits> {
        PositBits::new(word, self)
    }

    /// Build a pattern from the low N bits of `word`.
    pub fn truncating(self, word: u32) -> PositBits {
        PositBits { word: word & self.mask(), config: self }
    }

    pub fn zero(self) -> PositBits {
        PositBits { word: 0, config: self }
    }

    pub fn nar(self) -> PositBits {
        PositBits { word: self.nar_word(), config: self }
    }

    pub fn one(self) -> PositBits {
        PositBits { word: self.one_word(), config: self }
    }

    pub fn maxpos(self) -> PositBits {
        PositBits { word: self.maxpos_word(), config: self }
    }

    pub fn minpos(self) -> PositBits {
        PositBits { word: 1, config: self }
    }

    /// Every N-bit pattern, in unsigned order.
    pub fn all_patterns(self) -> impl Iterator<Item = PositBits> {
        (0..=u64::from(self.mask())).map(move |w| PositBits { word: w as u32, config: self })
    }
}

impl fmt::Display for PositConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "posit<{},{}>", self.n_bits, self.es_bits)
    }
}

/// Raw posit pattern held in the low `n_bits` of `word`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PositBits {
    word: u32,
    config: PositConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PositClass {
    Zero,
    NaR,
    Normal,
}

impl PositBits {
    pub fn new(word: u32, config: PositConfig) -> Result<Self> {
        if word & !config.mask() != 0 {
            return Err(Error::PatternTooWide { word, n_bits: config.n_bits });
        }
        Ok(PositBits { word, config })
    }

    pub fn word(self) -> u32 {
        self.word
    }

    pub fn config(self) -> PositConfig {
        self.config
    }

    pub fn class(self) -> PositClass {
        if self.word == 0 {
            PositClass::Zero
        } else if self.word == self.config.nar_word() {
            PositClass::NaR
        } else {
            PositClass::Normal
        }
    }

    pub fn is_zero(self) -> bool {
        self.word == 0
    }

    pub fn is_nar(self) -> bool {
        self.word == self.config.nar_word()
    }

    /// The pattern as a sign-extended N-bit integer.
    pub fn as_signed(self) -> i32 {
        let shift = 32 - self.config.n_bits;
        ((self.word << shift) as i32) >> shift
    }

    pub fn decode(self) -> DecodedPosit {
        decode(self)
    }

    pub fn real_value(self) -> ExactValue {
        real_value(self)
    }

    /// Exact value as binary64 (every posit up to 32 bits is exactly representable).
    pub fn to_f64(self) -> f64 {
        let d = self.decode();
        match d.class {
            PositClass::Zero => 0.0,
            PositClass::NaR => f64::NAN,
            PositClass::Normal => {
                let te = d.total_exponent(self.config) as i64;
                let sig = (1u64 << d.frac_len) | u64::from(d.frac);
                let v = sig as f64 * crate::exact::pow2(te - i64::from(d.frac_len));
                if d.sign {
                    -v
                } else {
                    v
                }
            }
        }
    }

    pub fn negate(self) -> PositBits {
        negate(self)
    }
}

impl fmt::Display for PositBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = self.config.n_bits.div_ceil(4) as usize;
        write!(f, "0x{:0digits$X}", self.word)
    }
}

/// Fields of a decoded posit. For negative posits the fields describe the
/// magnitude (the two's complement of the pattern); `sign` is kept separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecodedPosit {
    pub class: PositClass,
    pub sign: bool,
    pub regime_k: i32,
    pub regime_len: u32,
    /// Exponent value, already padded with zeros where the regime cut it short.
    pub exponent: u32,
    pub frac: u32,
    pub frac_len: u32,
}

impl DecodedPosit {
    const SPECIAL: DecodedPosit = DecodedPosit {
        class: PositClass::Zero,
        sign: false,
        regime_k: 0,
        regime_len: 0,
        exponent: 0,
        frac: 0,
        frac_len: 0,
    };

    /// te = 2^ES·k + e.
    pub fn total_exponent(&self, cfg: PositConfig) -> i32 {
        (self.regime_k << cfg.es_bits) + self.exponent as i32
    }
}

/// Fields read straight off an unsigned N-bit body, no complementing.
struct RawFields {
    k: i32,
    l: u32,
    e: u32,
    f: u32,
    f_len: u32,
}

/// `body` holds the N−1 bits following the sign bit.
fn split_fields(body: u32, cfg: PositConfig) -> RawFields {
    let width = cfg.n_bits - 1;
    let aligned = body << (32 - width);
    let run_bit = aligned >> 31;
    let l = if run_bit == 1 { aligned.leading_ones() } else { aligned.leading_zeros() }.min(width);
    let k = if run_bit == 1 { l as i32 - 1 } else { -(l as i32) };
    let rest_len = width.saturating_sub(l + 1);
    let es_avail = cfg.es_bits.min(rest_len);
    let f_len = rest_len - es_avail;
    let rest = body & low_mask(rest_len);
    let e = (rest >> f_len) << (cfg.es_bits - es_avail);
    RawFields { k, l, e, f: rest & low_mask(f_len), f_len }
}

fn low_mask(bits: u32) -> u32 {
    if bits >= 32 {
        u32::MAX
    } else {
        (1u32 << bits) - 1
    }
}

pub fn decode(bits: PositBits) -> DecodedPosit {
    let cfg = bits.config;
    match bits.class() {
        PositClass::Zero => DecodedPosit::SPECIAL,
        PositClass::NaR => DecodedPosit { class: PositClass::NaR, ..DecodedPosit::SPECIAL },
        PositClass::Normal => {
            let sign = bits.word & cfg.nar_word() != 0;
            let magnitude = if sign { bits.word.wrapping_neg() & cfg.mask() } else { bits.word };
            let raw = split_fields(magnitude & (cfg.mask() >> 1), cfg);
            DecodedPosit {
                class: PositClass::Normal,
                sign,
                regime_k: raw.k,
                regime_len: raw.l,
                exponent: raw.e,
                frac: raw.f,
                frac_len: raw.f_len,
            }
        }
    }
}

/// (−1)^s × useed^k × 2^e × (1 + f/2^F), exactly.
pub fn real_value(bits: PositBits) -> ExactValue {
    let d = decode(bits);
    match d.class {
        PositClass::Zero => ExactValue::zero(),
        PositClass::NaR => ExactValue::nar(),
        PositClass::Normal => {
            let sig = (1i64 << d.frac_len) + i64::from(d.frac);
            let sig = if d.sign { -sig } else { sig };
            let te = i64::from(d.total_exponent(bits.config));
            ExactValue::from_i64(sig, te - i64::from(d.frac_len))
        }
    }
}

/// The alternative closed form (1 − 3s + f/2^F) × 2^((1−2s)(2^ES·k + e + s)),
/// evaluated on fields read from the raw pattern without complementing it.
pub fn real_value_alt(bits: PositBits) -> Result<ExactValue> {
    if bits.class() != PositClass::Normal {
        return Err(Error::NotNormal);
    }
    let cfg = bits.config;
    let s = i64::from(bits.word >> (cfg.n_bits - 1));
    let raw = split_fields(bits.word & (cfg.mask() >> 1), cfg);
    let num = (1 - 3 * s) * (1i64 << raw.f_len) + i64::from(raw.f);
    let scale = (1 - 2 * s) * ((i64::from(raw.k) << cfg.es_bits) + i64::from(raw.e) + s);
    Ok(ExactValue::new(BigInt::from(num), scale - i64::from(raw.f_len)))
}

pub fn negate(bits: PositBits) -> PositBits {
    PositBits { word: bits.word.wrapping_neg() & bits.config.mask(), config: bits.config }
}

/// Orders patterns as N-bit signed integers; NaR sorts below every real.
pub fn compare(a: PositBits, b: PositBits) -> Result<Ordering> {
    if a.config != b.config {
        return Err(Error::ConfigMismatch);
    }
    Ok(a.as_signed().cmp(&b.as_signed()))
}

/// Floating-point intermediate record: (−1)^sign × 2^te × (1.frac).
///
/// `frac` holds `frac_width` bits below the implicit leading one. `sticky`
/// records that nonzero bits were already discarded below `frac`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fir {
    pub sign: bool,
    pub te: i32,
    pub frac: u128,
    pub frac_width: u32,
    pub sticky: bool,
}

impl Fir {
    /// Significand 1.frac as an integer with `frac_width` fractional bits.
    pub fn significand(&self) -> u128 {
        (1u128 << self.frac_width) | self.frac
    }
}

pub fn to_fir(d: &DecodedPosit, cfg: PositConfig) -> Result<Fir> {
    if d.class != PositClass::Normal {
        return Err(Error::NotNormal);
    }
    let width = cfg.fir_width();
    Ok(Fir {
        sign: d.sign,
        te: d.total_exponent(cfg),
        frac: u128::from(d.frac) << (width - d.frac_len),
        frac_width: width,
        sticky: false,
    })
}

/// Round a normalized `Fir` into a posit.
///
/// te is split into regime k' = ⌊te / 2^ES⌋ and exponent e = te − 2^ES·k'.
/// Regimes beyond the representable range saturate to maxpos/minpos. The
/// bit string regime|exponent|fraction is cut to N−1 bits and rounded to
/// nearest even with guard (kept LSB), round (first dropped bit) and sticky
/// (OR of the rest plus `f.sticky`).
pub fn encode_round(f: &Fir, cfg: PositConfig) -> PositBits {
    encode_round_traced(f, cfg).0
}

/// Rounding bits seen by [`encode_round`] when the bit string was cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundingBits {
    pub guard: bool,
    pub round: bool,
    pub sticky: bool,
    pub incremented: bool,
}

/// Why the magnitude came out the way it did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rounding {
    /// The string fit in N−1 bits.
    Exact,
    Rounded(RoundingBits),
    SaturatedMax,
    SaturatedMin,
}

/// [`encode_round`] plus the rounding decision, for debugging output.
pub fn encode_round_traced(f: &Fir, cfg: PositConfig) -> (PositBits, Rounding) {
    let (magnitude, how) = encode_magnitude(f, cfg);
    let word = if f.sign { magnitude.wrapping_neg() & cfg.mask() } else { magnitude };
    (PositBits { word, config: cfg }, how)
}

fn encode_magnitude(f: &Fir, cfg: PositConfig) -> (u32, Rounding) {
    debug_assert!(f.frac >> f.frac_width == 0, "fraction not normalized");
    let es = cfg.es_bits;
    let k = f.te >> es;
    if k >= cfg.max_k() {
        // at max_k the all-ones regime fills the word and its stop bit rounds down
        return (cfg.maxpos_word(), Rounding::SaturatedMax);
    }
    if k < cfg.min_k() {
        return (1, Rounding::SaturatedMin);
    }
    let e = (f.te - (k << es)) as u128;
    let (regime, regime_len) =
        if k >= 0 { (((1u128 << (k + 1)) - 1) << 1, k as u32 + 2) } else { (1u128, (-k) as u32 + 1) };

    // Drop fraction bits that cannot survive up front so the string fits in u128.
    let keep = cfg.n_bits - 1;
    let mut frac = f.frac;
    let mut frac_width = f.frac_width;
    let mut sticky = f.sticky;
    if frac_width > keep + 2 {
        let cut = frac_width - (keep + 2);
        sticky |= frac & ((1u128 << cut) - 1) != 0;
        frac >>= cut;
        frac_width -= cut;
    }

    let total = regime_len + es + frac_width;
    let string = (regime << (es + frac_width)) | (e << frac_width) | frac;
    if total <= keep {
        debug_assert!(!sticky);
        return ((string << (keep - total)) as u32, Rounding::Exact);
    }
    let dropped = total - keep;
    let kept = (string >> dropped) as u32;
    let round = (string >> (dropped - 1)) & 1 == 1;
    sticky |= string & ((1u128 << (dropped - 1)) - 1) != 0;
    let guard = kept & 1 == 1;
    let incremented = round && (guard || sticky);
    (kept + u32::from(incremented), Rounding::Rounded(RoundingBits { guard, round, sticky, incremented }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: u32, es: u32) -> PositConfig {
        PositConfig::new(n, es).unwrap()
    }

    #[test]
    fn config_bounds() {
        assert!(PositConfig::new(2, 0).is_err());
        assert!(PositConfig::new(33, 0).is_err());
        assert!(PositConfig::new(8, 5).is_err());
        assert!(PositConfig::new(4, 3).is_err());
        assert_eq!(cfg(16, 2).useed(), 16);
        assert_eq!(cfg(32, 4).useed(), 65536);
        assert!(PositBits::new(0x100, cfg(8, 0)).is_err());
    }

    #[test]
    fn decode_worked_example_16_2() {
        let d = cfg(16, 2).bits(0x4200).unwrap().decode();
        assert_eq!(d.class, PositClass::Normal);
        assert!(!d.sign);
        assert_eq!((d.regime_k, d.regime_len, d.exponent, d.frac, d.frac_len), (0, 1, 0, 512, 11));
        assert_eq!(cfg(16, 2).bits(0x4200).unwrap().real_value(), ExactValue::from_i64(5, -2));
    }

    #[test]
    fn decode_specials_and_extremes() {
        let c = cfg(8, 0);
        assert_eq!(c.truncating(0x00).decode().class, PositClass::Zero);
        assert_eq!(c.truncating(0x80).decode().class, PositClass::NaR);
        let max = c.truncating(0x7F).decode();
        assert_eq!((max.regime_k, max.frac_len, max.sign), (6, 0, false));
        assert_eq!(c.truncating(0x7F).real_value(), ExactValue::from_i64(1, 6));
        assert_eq!(c.truncating(0x40).real_value(), ExactValue::from_i64(1, 0));
        assert_eq!(c.truncating(0x01).decode().regime_k, -6);
    }

    #[test]
    fn truncated_exponent_is_zero_padded() {
        // <8,3>: 0 111110 1 -> k=4, one exponent bit "1" -> e = 0b100
        let d = cfg(8, 3).truncating(0b0111_1101).decode();
        assert_eq!((d.regime_k, d.exponent, d.frac_len), (4, 4, 0));
    }

    #[test]
    fn alt_formula_examples() {
        let c = cfg(16, 2);
        assert_eq!(real_value_alt(c.truncating(0x4200)).unwrap(), ExactValue::from_i64(5, -2));
        assert_eq!(real_value_alt(cfg(8, 0).truncating(0x40)).unwrap(), ExactValue::from_i64(1, 0));
        assert_eq!(real_value_alt(cfg(8, 0).truncating(0)), Err(Error::NotNormal));
        assert_eq!(real_value_alt(cfg(8, 0).truncating(0x80)), Err(Error::NotNormal));
    }

    #[test]
    fn fir_examples() {
        let c = cfg(16, 2);
        let f = to_fir(&c.truncating(0x4200).decode(), c).unwrap();
        assert_eq!((f.sign, f.te), (false, 0));
        // 0.25 in a fir_width-bit fixed-point fraction
        assert_eq!(f.frac, 1u128 << (c.fir_width() - 2));
        assert_eq!(encode_round(&f, c).word(), 0x4200);

        let c8 = cfg(8, 0);
        let f = to_fir(&c8.truncating(0x7F).decode(), c8).unwrap();
        assert_eq!((f.te, f.frac), (6, 0));
        let f = to_fir(&c8.truncating(0x60).decode(), c8).unwrap();
        assert_eq!((f.te, f.frac), (1, 0));
        assert_eq!(to_fir(&c8.truncating(0).decode(), c8), Err(Error::NotNormal));
    }

    #[test]
    fn encode_saturates_and_is_exact_on_one() {
        let c = cfg(8, 0);
        let w = c.fir_width();
        let fir = |te, sign| Fir { sign, te, frac: 0, frac_width: w, sticky: false };
        assert_eq!(encode_round(&fir(10, false), c).word(), 0x7F);
        assert_eq!(encode_round(&fir(-10, false), c).word(), 0x01);
        assert_eq!(encode_round(&fir(-10, true), c).word(), 0xFF);
        assert_eq!(encode_round(&fir(0, false), c).word(), 0x40);
    }

    #[test]
    fn sticky_breaks_ties() {
        let c = cfg(8, 0);
        let w = c.fir_width();
        // 1 + 2^-6 lies halfway between 1 and 1 + 2^-5: tie -> even (0x40)
        let tie = Fir { sign: false, te: 0, frac: 1u128 << (w - 6), frac_width: w, sticky: false };
        assert_eq!(encode_round(&tie, c).word(), 0x40);
        assert_eq!(encode_round(&Fir { sticky: true, ..tie }, c).word(), 0x41);
    }

    #[test]
    fn negate_and_compare() {
        let c = cfg(8, 0);
        assert_eq!(negate(c.truncating(0x40)).word(), 0xC0);
        assert_eq!(c.truncating(0xC0).real_value(), ExactValue::from_i64(-1, 0));
        assert_eq!(negate(c.zero()), c.zero());
        assert_eq!(negate(c.nar()), c.nar());
        assert_eq!(compare(c.truncating(0x40), c.truncating(0x60)), Ok(Ordering::Less));
        assert_eq!(compare(c.nar(), c.truncating(0x81)), Ok(Ordering::Less));
        assert_eq!(compare(c.one(), cfg(8, 1).one()), Err(Error::ConfigMismatch));
    }

    #[test]
    fn to_f64_matches_exact() {
        let c = cfg(16, 2);
        for p in c.all_patterns().step_by(7) {
            if !p.is_nar() {
                assert_eq!(p.to_f64(), p.real_value().to_f64(), "{p}");
            }
        }
    }
}
