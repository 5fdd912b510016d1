//! Software model of the Full Posit Processing Unit.
//!
//! The datapath is split the way the hardware is: decode and input conditioning,
//! computation on [`Fir`] records, then normalization and encoding. The same
//! stage functions drive both the combinational [`Fppu::exec`] and the clocked
//! [`pipeline::Pipeline`].

pub mod pipeline;
pub mod recip;
pub mod simd;

use core::fmt;

use crate::error::{Error, Result};
use crate::golden::F32_QNAN;
use crate::posit::{encode_round, to_fir, Fir, PositBits, PositClass, PositConfig};

pub use recip::{nr_refine, recip_approx, ReciprocalParams, K1_OPT, K2_OPT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum FppuOp {
    Padd = 0,
    Psub = 1,
    Pmul = 2,
    Pdiv = 3,
    Pfmadd = 4,
    FcvtP2F = 5,
    FcvtF2P = 6,
}

impl FppuOp {
    pub const ALL: [FppuOp; 7] =
        [FppuOp::Padd, FppuOp::Psub, FppuOp::Pmul, FppuOp::Pdiv, FppuOp::Pfmadd, FppuOp::FcvtP2F, FppuOp::FcvtF2P];

    pub fn from_code(code: u8) -> Result<Self> {
        Self::ALL.get(usize::from(code)).copied().ok_or(Error::UnknownOp(code))
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            FppuOp::Padd => "PADD",
            FppuOp::Psub => "PSUB",
            FppuOp::Pmul => "PMUL",
            FppuOp::Pdiv => "PDIV",
            FppuOp::Pfmadd => "PFMADD",
            FppuOp::FcvtP2F => "FCVT.P2F",
            FppuOp::FcvtF2P => "FCVT.F2P",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|op| op.mnemonic().eq_ignore_ascii_case(s))
    }

    /// Number of source operands.
    pub fn arity(self) -> usize {
        match self {
            FppuOp::Pfmadd => 3,
            FppuOp::FcvtP2F | FppuOp::FcvtF2P => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for FppuOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

/// Output of the decode / input-conditioning stage.
#[derive(Debug, Clone, PartialEq)]
pub enum Conditioned {
    /// Special operands resolved the result already.
    Done(u32),
    Add(Fir, Fir),
    Mul(Fir, Fir),
    Div(Fir, Fir),
    /// `None` addend: c was zero, so only the product is rounded.
    Fma(Fir, Fir, Option<Fir>),
    ToFloat(Fir),
    FromFloat(Fir),
}

/// Output of the first half of the compute stage. Only division spends real
/// work here (the reciprocal seed and refinement); everything else finishes.
#[derive(Debug, Clone, PartialEq)]
pub enum Partial {
    Ready(Computed),
    Div { dividend: Fir, divisor: Fir, reciprocal: u128 },
}

/// Output of the compute stage, ready to normalize and encode.
#[derive(Debug, Clone, PartialEq)]
pub enum Computed {
    Done(u32),
    Posit(Fir),
    Float(Fir),
}

/// Guard positions kept below the FIR fraction while adding.
const ADD_GUARD: u32 = 3;

/// A configured FPPU instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fppu {
    cfg: PositConfig,
    recip: ReciprocalParams,
}

impl Fppu {
    pub fn new(cfg: PositConfig) -> Self {
        Fppu { cfg, recip: ReciprocalParams::for_config(cfg) }
    }

    pub fn with_reciprocal(cfg: PositConfig, recip: ReciprocalParams) -> Self {
        Fppu { cfg, recip }
    }

    pub fn config(&self) -> PositConfig {
        self.cfg
    }

    pub fn reciprocal_params(&self) -> &ReciprocalParams {
        &self.recip
    }

    /// Combinational evaluation of one operation. Operand words carry the posit
    /// in their low N bits (a binary32 word for `FcvtF2P`); higher bits are ignored.
    pub fn exec(&self, op: FppuOp, a: u32, b: u32, c: Option<u32>) -> Result<u32> {
        Ok(self.finish(self.compute(op, a, b, c)?))
    }

    /// Everything up to, but not including, the final rounding.
    pub fn compute(&self, op: FppuOp, a: u32, b: u32, c: Option<u32>) -> Result<Computed> {
        let conditioned = self.condition(op, a, b, c)?;
        Ok(self.compute_back(self.compute_front(conditioned)))
    }

    fn fir(&self, p: PositBits) -> Fir {
        to_fir(&p.decode(), self.cfg).expect("specials are handled before FIR conversion")
    }

    /// Stage 1: decode operands and resolve Zero/NaR cases.
    pub fn condition(&self, op: FppuOp, a: u32, b: u32, c: Option<u32>) -> Result<Conditioned> {
        let cfg = self.cfg;
        let pa = cfg.truncating(a);
        let pb = cfg.truncating(b);
        let nar = Conditioned::Done(cfg.nar_word());
        let zero = Conditioned::Done(0);
        Ok(match op {
            FppuOp::Padd | FppuOp::Psub => {
                let pb = if op == FppuOp::Psub { pb.negate() } else { pb };
                if pa.is_nar() || pb.is_nar() {
                    nar
                } else if pa.is_zero() {
                    Conditioned::Done(pb.word())
                } else if pb.is_zero() {
                    Conditioned::Done(pa.word())
                } else {
                    Conditioned::Add(self.fir(pa), self.fir(pb))
                }
            }
            FppuOp::Pmul => {
                if pa.is_nar() || pb.is_nar() {
                    nar
                } else if pa.is_zero() || pb.is_zero() {
                    zero
                } else {
                    Conditioned::Mul(self.fir(pa), self.fir(pb))
                }
            }
            FppuOp::Pdiv => {
                if pa.is_nar() || pb.is_nar() || pb.is_zero() {
                    nar
                } else if pa.is_zero() {
                    zero
                } else {
                    Conditioned::Div(self.fir(pa), self.fir(pb))
                }
            }
            FppuOp::Pfmadd => {
                let pc = cfg.truncating(c.ok_or(Error::MissingOperand)?);
                if pa.is_nar() || pb.is_nar() || pc.is_nar() {
                    nar
                } else if pa.is_zero() || pb.is_zero() {
                    Conditioned::Done(pc.word())
                } else {
                    let addend = (!pc.is_zero()).then(|| self.fir(pc));
                    Conditioned::Fma(self.fir(pa), self.fir(pb), addend)
                }
            }
            FppuOp::FcvtP2F => match pa.class() {
                PositClass::NaR => Conditioned::Done(F32_QNAN),
                PositClass::Zero => zero,
                PositClass::Normal => Conditioned::ToFloat(self.fir(pa)),
            },
            FppuOp::FcvtF2P => match float_to_fir(a, cfg.fir_width()) {
                FloatInput::NonFinite => nar,
                FloatInput::Zero => zero,
                FloatInput::Finite(f) => Conditioned::FromFloat(f),
            },
        })
    }

    /// Stage 2a.
    pub fn compute_front(&self, c: Conditioned) -> Partial {
        let ready = |x| Partial::Ready(x);
        match c {
            Conditioned::Done(w) => ready(Computed::Done(w)),
            Conditioned::Add(x, y) => ready(add_fir(&x, &y).map_or(Computed::Done(0), Computed::Posit)),
            Conditioned::Mul(x, y) => ready(Computed::Posit(mul_fir(&x, &y, self.cfg))),
            Conditioned::Fma(x, y, z) => {
                let product = mul_fir(&x, &y, self.cfg);
                ready(match z {
                    None => Computed::Posit(product),
                    Some(z) => add_fir(&product, &z).map_or(Computed::Done(0), Computed::Posit),
                })
            }
            Conditioned::ToFloat(f) => ready(Computed::Float(f)),
            Conditioned::FromFloat(f) => ready(Computed::Posit(f)),
            Conditioned::Div(dividend, divisor) => {
                let x = divisor_fixed(&divisor, self.recip.frac_width);
                let reciprocal = recip::reciprocal(x, &self.recip).expect("x is in [1/2, 1)");
                Partial::Div { dividend, divisor, reciprocal }
            }
        }
    }

    /// Stage 2b.
    pub fn compute_back(&self, p: Partial) -> Computed {
        match p {
            Partial::Ready(c) => c,
            Partial::Div { dividend, divisor, reciprocal } => {
                Computed::Posit(div_multiply(&dividend, &divisor, reciprocal, &self.recip, self.cfg))
            }
        }
    }

    /// Stage 3: normalize, round and encode.
    pub fn finish(&self, c: Computed) -> u32 {
        match c {
            Computed::Done(w) => w,
            Computed::Posit(f) => encode_round(&f, self.cfg).word(),
            Computed::Float(f) => fir_to_f32(&f),
        }
    }
}

/// Combinational FPPU with default division parameters.
pub fn fppu_exec(op: FppuOp, a: u32, b: u32, c: Option<u32>, cfg: PositConfig) -> Result<u32> {
    Fppu::new(cfg).exec(op, a, b, c)
}

/// Shift right, folding every dropped bit into a sticky flag.
fn shr_sticky(v: u128, shift: u32) -> (u128, bool) {
    if shift == 0 {
        (v, false)
    } else if shift >= 128 {
        (0, v != 0)
    } else {
        (v >> shift, v & ((1u128 << shift) - 1) != 0)
    }
}

/// Exact-then-normalize addition of two FIRs sharing one fraction width.
/// Returns `None` for an exact zero result.
fn add_fir(x: &Fir, y: &Fir) -> Option<Fir> {
    debug_assert_eq!(x.frac_width, y.frac_width);
    let w = x.frac_width;
    let (big, small) = if (x.te, x.significand()) >= (y.te, y.significand()) { (x, y) } else { (y, x) };
    let a = big.significand() << ADD_GUARD;
    let d = (big.te - small.te) as u32;
    // Shifted-out bits are jammed into the LSB (round-to-odd), which keeps the
    // later round-to-nearest-even exact as long as it happens ≥ 2 bits higher.
    let (b, lost) = shr_sticky(small.significand() << ADD_GUARD, d);
    let b = b | u128::from(lost);
    let sum = if big.sign == small.sign { a + b } else { a - b };
    if sum == 0 {
        return None;
    }
    let top = 127 - sum.leading_zeros();
    let target = w + ADD_GUARD;
    let (norm, extra) = if top > target { shr_sticky(sum, top - target) } else { (sum << (target - top), false) };
    let te = big.te + top as i32 - target as i32;
    let low = norm & ((1u128 << ADD_GUARD) - 1);
    Some(Fir {
        sign: big.sign,
        te,
        frac: (norm >> ADD_GUARD) & ((1u128 << w) - 1),
        frac_width: w,
        sticky: low != 0 || extra || x.sticky || y.sticky,
    })
}

/// Exact product. The fraction width 2(N−1)+3 holds the full 2(N−1)+1-bit
/// product fraction, so no bits are lost here.
fn mul_fir(x: &Fir, y: &Fir, cfg: PositConfig) -> Fir {
    let w = x.frac_width;
    let narrow = cfg.n_bits() - 1;
    // operand fractions have at most N−3 bits, so narrowing to N−1 is exact
    let sx = x.significand() >> (w - narrow);
    let sy = y.significand() >> (w - narrow);
    let p = sx * sy; // 2·narrow fractional bits, value in [1, 4)
    let p_frac = 2 * narrow;
    let (p_frac, te) = if p >> (p_frac + 1) != 0 { (p_frac + 1, x.te + y.te + 1) } else { (p_frac, x.te + y.te) };
    debug_assert!(p_frac <= w);
    Fir {
        sign: x.sign != y.sign,
        te,
        frac: (p & ((1u128 << p_frac) - 1)) << (w - p_frac),
        frac_width: w,
        sticky: x.sticky || y.sticky,
    }
}

/// Divisor significand 1.f ∈ [1, 2) halved into [1/2, 1) as fixed point.
fn divisor_fixed(divisor: &Fir, frac_width: u32) -> u128 {
    let sig = divisor.significand(); // divisor.frac_width fractional bits
    let from = divisor.frac_width + 1;
    if frac_width >= from {
        sig << (frac_width - from)
    } else {
        sig >> (from - frac_width)
    }
}

/// Dividend significand times the (truncated) reciprocal, normalized into a FIR.
/// Quotient bits below the FIR width are folded into the sticky bit.
fn div_multiply(dividend: &Fir, divisor: &Fir, reciprocal: u128, params: &ReciprocalParams, cfg: PositConfig) -> Fir {
    let w = dividend.frac_width;
    let narrow = cfg.n_bits() - 1;
    let sa = dividend.significand() >> (w - narrow);
    // q ≈ 2·(1.fa / 1.fb) with narrow + frac_width fractional bits
    let q = sa * reciprocal;
    let q_frac = narrow + params.frac_width;
    let top = 127 - q.leading_zeros();
    let te = dividend.te - divisor.te - 1 + top as i32 - q_frac as i32;
    let below_top = q & ((1u128 << top) - 1);
    let (frac, sticky) = if top >= w { shr_sticky(below_top, top - w) } else { (below_top << (w - top), false) };
    Fir { sign: dividend.sign != divisor.sign, te, frac, frac_width: w, sticky }
}

enum FloatInput {
    NonFinite,
    Zero,
    Finite(Fir),
}

fn float_to_fir(bits: u32, width: u32) -> FloatInput {
    let sign = bits >> 31 == 1;
    let biased = ((bits >> 23) & 0xFF) as i32;
    let mantissa = bits & 0x7F_FFFF;
    if biased == 0xFF {
        return FloatInput::NonFinite;
    }
    if biased == 0 && mantissa == 0 {
        return FloatInput::Zero;
    }
    let (te, frac, frac_bits) = if biased == 0 {
        let top = 31 - mantissa.leading_zeros();
        (top as i32 - 149, mantissa & ((1 << top) - 1), top)
    } else {
        (biased - 127, mantissa, 23)
    };
    let frac = u128::from(frac);
    let (frac, sticky) =
        if frac_bits <= width { (frac << (width - frac_bits), false) } else { shr_sticky(frac, frac_bits - width) };
    FloatInput::Finite(Fir { sign, te, frac, frac_width: width, sticky })
}

/// Round a FIR to binary32 (nearest even, overflow to infinity, gradual underflow).
fn fir_to_f32(f: &Fir) -> u32 {
    let sign = u32::from(f.sign) << 31;
    let inf = sign | 0x7F80_0000;
    if f.te > 127 {
        return inf;
    }
    // keep 23 fraction bits for normals, fewer for subnormals
    let keep = if f.te >= -126 { 23 } else { 23 - (-126 - f.te) };
    let sig = f.significand();
    let q = if keep < 0 {
        // below half of the smallest subnormal unless exactly at or above it
        let drop = (f.frac_width as i32 - keep) as u32;
        round_even(sig, drop, f.sticky)
    } else if keep as u32 >= f.frac_width {
        sig << (keep as u32 - f.frac_width)
    } else {
        round_even(sig, f.frac_width - keep as u32, f.sticky)
    };
    if f.te >= -126 {
        // q has 24 bits, or 25 after a carry
        let (q, te) = if q >> 24 != 0 { (q >> 1, f.te + 1) } else { (q, f.te) };
        if te > 127 {
            return inf;
        }
        sign | (((te + 127) as u32) << 23) | (q as u32 & 0x7F_FFFF)
    } else {
        // subnormal; a carry into bit 23 lands on the smallest normal encoding
        sign | q as u32
    }
}

fn round_even(v: u128, drop: u32, sticky_in: bool) -> u128 {
    if drop == 0 {
        return v;
    }
    if drop > 128 {
        return 0;
    }
    let kept = if drop == 128 { 0 } else { v >> drop };
    let round = (v >> (drop - 1)) & 1 == 1;
    let sticky = sticky_in || v & ((1u128 << (drop - 1)) - 1) != 0;
    if round && (sticky || kept & 1 == 1) {
        kept + 1
    } else {
        kept
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::golden;

    fn cfg(n: u32, es: u32) -> PositConfig {
        PositConfig::new(n, es).unwrap()
    }

    #[test]
    fn op_codes_round_trip() {
        for op in FppuOp::ALL {
            assert_eq!(FppuOp::from_code(op.code()), Ok(op));
            assert_eq!(FppuOp::from_mnemonic(op.mnemonic()), Some(op));
        }
        assert_eq!(FppuOp::from_code(7), Err(Error::UnknownOp(7)));
    }

    #[test]
    fn worked_examples() {
        let c = cfg(8, 0);
        assert_eq!(fppu_exec(FppuOp::Padd, 0x40, 0x40, None, c), Ok(0x60));
        assert_eq!(fppu_exec(FppuOp::Pdiv, 0x60, 0x40, None, c), Ok(0x60));
        let want = golden::g_fma(c.truncating(0x50), c.truncating(0x60), c.truncating(0x40)).unwrap();
        assert_eq!(fppu_exec(FppuOp::Pfmadd, 0x50, 0x60, Some(0x40), c), Ok(want.word()));
        assert_eq!(fppu_exec(FppuOp::Pfmadd, 0x50, 0x60, None, c), Err(Error::MissingOperand));
    }

    #[test]
    fn specials() {
        let c = cfg(8, 0);
        assert_eq!(fppu_exec(FppuOp::Pdiv, 0x40, 0x00, None, c), Ok(0x80));
        assert_eq!(fppu_exec(FppuOp::Pdiv, 0x00, 0x40, None, c), Ok(0x00));
        assert_eq!(fppu_exec(FppuOp::Pmul, 0x80, 0x00, None, c), Ok(0x80));
        assert_eq!(fppu_exec(FppuOp::Psub, 0x40, 0x40, None, c), Ok(0x00));
        assert_eq!(fppu_exec(FppuOp::Psub, 0x00, 0x40, None, c), Ok(0xC0));
        assert_eq!(fppu_exec(FppuOp::FcvtP2F, 0x80, 0, None, c), Ok(F32_QNAN));
        assert_eq!(fppu_exec(FppuOp::FcvtF2P, f32::NAN.to_bits(), 0, None, c), Ok(0x80));
        assert_eq!(fppu_exec(FppuOp::FcvtF2P, 0x8000_0000, 0, None, c), Ok(0));
    }

    #[test]
    fn conversions_match_worked_example() {
        let c = cfg(16, 2);
        assert_eq!(fppu_exec(FppuOp::FcvtP2F, 0x4200, 0, None, c), Ok(0x3FA0_0000));
        assert_eq!(fppu_exec(FppuOp::FcvtF2P, 0x3FA0_0000, 0, None, c), Ok(0x4200));
    }

    #[test]
    fn high_operand_bits_are_ignored() {
        let c = cfg(8, 0);
        assert_eq!(fppu_exec(FppuOp::Padd, 0xABCD_0040, 0x40, None, c), Ok(0x60));
    }

    #[test]
    fn float_rounding_helper() {
        assert_eq!(round_even(0b1011, 1, false), 0b110);
        assert_eq!(round_even(0b1001, 1, false), 0b100);
        assert_eq!(round_even(0b1001, 1, true), 0b101);
        assert_eq!(round_even(u128::MAX, 200, true), 0);
    }

    #[test]
    fn f32_conversions_agree_with_golden_on_all_16_bit_patterns() {
        for es in [0, 2] {
            let c = cfg(16, es);
            for p in c.all_patterns() {
                let want = golden::posit_to_float(p);
                assert_eq!(fppu_exec(FppuOp::FcvtP2F, p.word(), 0, None, c), Ok(want), "{p}");
            }
        }
    }

    #[test]
    fn f32_to_posit_agrees_with_golden_on_samples() {
        use rand_core::{RngCore, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for (n, es) in [(8, 0), (16, 2), (32, 2), (32, 4)] {
            let c = cfg(n, es);
            for _ in 0..20_000 {
                let bits = rng.next_u32();
                let want = golden::float_to_posit(bits, c).word();
                assert_eq!(fppu_exec(FppuOp::FcvtF2P, bits, 0, None, c), Ok(want), "{bits:#x} {c}");
            }
        }
    }

    #[test]
    fn posit32_to_f32_handles_overflow_and_underflow() {
        let c = cfg(32, 4);
        for w in [0x7FFF_FFFFu32, 0x0000_0001, 0x8000_0001, 0x7000_0000, 0x0800_0123, 0x0100_0000] {
            let want = golden::posit_to_float(c.truncating(w));
            assert_eq!(fppu_exec(FppuOp::FcvtP2F, w, 0, None, c), Ok(want), "{w:#x}");
        }
    }
}
