//! Single-operation evaluation with decoded fields and the rounding decision.

use std::fmt::Write;

use anyhow::{anyhow, bail};
use fppu_core::fppu::Computed;
use fppu_core::posit::{encode_round_traced, Rounding};
use fppu_core::{golden, Fppu, FppuOp, PositBits, PositClass, PositConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalOp {
    Decode,
    Op(FppuOp),
}

impl EvalOp {
    pub fn parse(s: &str) -> Option<Self> {
        let op = match s.to_ascii_lowercase().as_str() {
            "decode" => return Some(EvalOp::Decode),
            "add" => FppuOp::Padd,
            "sub" => FppuOp::Psub,
            "mul" => FppuOp::Pmul,
            "div" => FppuOp::Pdiv,
            "fma" => FppuOp::Pfmadd,
            "p2f" => FppuOp::FcvtP2F,
            "f2p" => FppuOp::FcvtF2P,
            _ => return None,
        };
        Some(EvalOp::Op(op))
    }

    pub fn arity(self) -> usize {
        match self {
            EvalOp::Decode => 1,
            EvalOp::Op(op) => op.arity(),
        }
    }
}

/// `0x…` is a raw pattern (a binary32 word when `float` is set); anything else is
/// a decimal real, rounded to binary32 and then, unless `float`, to the posit.
pub fn parse_operand(s: &str, cfg: PositConfig, float: bool) -> anyhow::Result<u32> {
    if let Some(h) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        let w = u32::from_str_radix(h, 16).map_err(|e| anyhow!("bad hex operand {s:?}: {e}"))?;
        if !float {
            cfg.bits(w).map_err(|e| anyhow!("{e}"))?;
        }
        return Ok(w);
    }
    let v: f32 = s.parse().map_err(|_| anyhow!("operand {s:?} is neither 0x-hex nor a decimal number"))?;
    Ok(if float { v.to_bits() } else { golden::float_to_posit(v.to_bits(), cfg).word() })
}

fn describe(p: PositBits) -> String {
    let cfg = p.config();
    let width = cfg.n_bits() as usize;
    let mut s = format!("{p} ({:0width$b})", p.word());
    match p.class() {
        PositClass::Zero => s.push_str(" zero"),
        PositClass::NaR => s.push_str(" NaR"),
        PositClass::Normal => {
            let d = p.decode();
            let _ = write!(
                s,
                " sign={} k={} regime_len={} exp={} frac={:#x}/{} bits te={} value={}",
                u8::from(d.sign),
                d.regime_k,
                d.regime_len,
                d.exponent,
                d.frac,
                d.frac_len,
                d.total_exponent(cfg),
                p.real_value()
            );
        }
    }
    s
}

fn describe_float(bits: u32) -> String {
    format!("0x{bits:08X} ({})", f32::from_bits(bits))
}

pub fn evaluate(fppu: &Fppu, op: EvalOp, operands: &[String]) -> anyhow::Result<String> {
    let cfg = fppu.config();
    if operands.len() != op.arity() {
        bail!("expected {} operand(s), got {}", op.arity(), operands.len());
    }
    let float_input = op == EvalOp::Op(FppuOp::FcvtF2P);
    let words = operands.iter().map(|s| parse_operand(s, cfg, float_input)).collect::<anyhow::Result<Vec<u32>>>()?;
    let mut out = String::new();
    for (name, &w) in ["a", "b", "c"].iter().zip(&words) {
        let text = if float_input { describe_float(w) } else { describe(cfg.truncating(w)) };
        writeln!(out, "{name}: {text}")?;
    }
    let EvalOp::Op(op) = op else { return Ok(out) };

    let at = |i: usize| words.get(i).copied().unwrap_or(0);
    let p = |i| cfg.truncating(at(i));
    let golden_word = match op {
        FppuOp::Padd => golden::g_add(p(0), p(1))?.word(),
        FppuOp::Psub => golden::g_sub(p(0), p(1))?.word(),
        FppuOp::Pmul => golden::g_mul(p(0), p(1))?.word(),
        FppuOp::Pdiv => golden::g_div(p(0), p(1))?.word(),
        FppuOp::Pfmadd => golden::g_fma(p(0), p(1), p(2))?.word(),
        FppuOp::FcvtP2F => golden::posit_to_float(p(0)),
        FppuOp::FcvtF2P => golden::float_to_posit(at(0), cfg).word(),
    };
    let c = (op == FppuOp::Pfmadd).then(|| at(2));
    let computed = fppu.compute(op, at(0), at(1), c)?;
    let fppu_word = fppu.finish(computed.clone());
    let show = |w: u32| if op == FppuOp::FcvtP2F { describe_float(w) } else { describe(cfg.truncating(w)) };
    writeln!(out, "golden: {}", show(golden_word))?;
    writeln!(out, "fppu:   {}", show(fppu_word))?;
    match computed {
        Computed::Done(_) => writeln!(out, "rounding: none (special operand)")?,
        Computed::Float(f) | Computed::Posit(f) => {
            writeln!(
                out,
                "fir: sign={} te={} frac={:#x}/{} bits sticky={}",
                u8::from(f.sign),
                f.te,
                f.frac,
                f.frac_width,
                u8::from(f.sticky)
            )?;
            if op != FppuOp::FcvtP2F {
                let (_, how) = encode_round_traced(&f, cfg);
                match how {
                    Rounding::Exact => writeln!(out, "rounding: exact")?,
                    Rounding::SaturatedMax => writeln!(out, "rounding: saturated to maxpos")?,
                    Rounding::SaturatedMin => writeln!(out, "rounding: saturated to minpos")?,
                    Rounding::Rounded(b) => writeln!(
                        out,
                        "rounding: G={} R={} S={} -> {}",
                        u8::from(b.guard),
                        u8::from(b.round),
                        u8::from(b.sticky),
                        if b.incremented { "round up" } else { "truncate" }
                    )?,
                }
            }
        }
    }
    writeln!(out, "agree: {}", golden_word == fppu_word)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn decode_shows_fields() {
        let f = Fppu::new(PositConfig::new(16, 2).unwrap());
        let out = evaluate(&f, EvalOp::Decode, &strings(&["0x4200"])).unwrap();
        assert!(out.contains("k=0 regime_len=1 exp=0 frac=0x200/11 bits te=0 value=1.25"), "{out}");
    }

    #[test]
    fn decimal_operands_round_to_posit() {
        let cfg = PositConfig::new(16, 2).unwrap();
        assert_eq!(parse_operand("1.25", cfg, false).unwrap(), 0x4200);
        assert_eq!(parse_operand("1.25", cfg, true).unwrap(), 0x3FA0_0000);
        assert!(parse_operand("0x1FFFF", cfg, false).is_err());
        assert!(parse_operand("one", cfg, false).is_err());
    }

    #[test]
    fn ops() {
        let f = Fppu::new(PositConfig::new(8, 0).unwrap());
        let out = evaluate(&f, EvalOp::parse("add").unwrap(), &strings(&["0x40", "0x40"])).unwrap();
        assert!(out.contains("fppu:   0x60"), "{out}");
        let out = evaluate(&f, EvalOp::parse("div").unwrap(), &strings(&["0x40", "0x00"])).unwrap();
        assert!(out.contains("fppu:   0x80") && out.contains("NaR"), "{out}");
        assert!(evaluate(&f, EvalOp::parse("fma").unwrap(), &strings(&["0x40"])).is_err());
    }
}
