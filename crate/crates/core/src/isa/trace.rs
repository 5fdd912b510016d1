//! Instruction traces: one executed posit instruction per line,
//!
//! ```text
//! <cycle> <pc> <insn> <mnemonic> rd=<v> rs1=<v> rs2=<v> [rs3=<v>]
//! ```
//!
//! with `cycle` in decimal and every other number as `0x` plus exactly eight hex
//! digits. Blank lines and lines starting with `#` are skipped.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use super::{disassemble, Instruction, Mnemonic};
use crate::error::Result;
use crate::fppu::{Fppu, FppuOp};
use crate::golden;
use crate::posit::PositConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRecord {
    pub cycle: u64,
    pub pc: u32,
    pub insn: u32,
    pub mnemonic: Mnemonic,
    pub rd: u32,
    pub rs1: u32,
    pub rs2: u32,
    pub rs3: Option<u32>,
}

impl TraceRecord {
    /// Record for `instr` executed on `fppu` with the given source values.
    pub fn from_execution(
        cycle: u64,
        pc: u32,
        instr: &Instruction,
        fppu: &Fppu,
        rs1: u32,
        rs2: u32,
        rs3: Option<u32>,
    ) -> Result<Self> {
        let insn = instr.assemble()?;
        let rd = fppu.exec(instr.mnemonic, rs1, rs2, rs3)?;
        Ok(TraceRecord { cycle, pc, insn, mnemonic: instr.mnemonic, rd, rs1, rs2, rs3 })
    }
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} 0x{:08X} 0x{:08X} {} rd=0x{:08X} rs1=0x{:08X} rs2=0x{:08X}",
            self.cycle, self.pc, self.insn, self.mnemonic, self.rd, self.rs1, self.rs2
        )?;
        if let Some(v) = self.rs3 {
            write!(f, " rs3=0x{v:08X}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceErrorKind {
    MissingField(&'static str),
    BadCycle,
    BadHex,
    UnknownMnemonic,
    ExpectedLabel(&'static str),
    UnexpectedField,
    /// The instruction word is not a posit instruction at all.
    NotPosit,
    /// The instruction word decodes to a different mnemonic, or the rs3 field
    /// does not fit it.
    InsnMismatch,
}

/// A syntax error at a 1-based line and column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceError {
    pub line: usize,
    pub column: usize,
    pub kind: TraceErrorKind,
}

impl fmt::Display for TraceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: ", self.line, self.column)?;
        match self.kind {
            TraceErrorKind::MissingField(name) => write!(f, "missing {name}"),
            TraceErrorKind::BadCycle => f.write_str("cycle must be a decimal integer"),
            TraceErrorKind::BadHex => f.write_str("expected 0x followed by 8 hex digits"),
            TraceErrorKind::UnknownMnemonic => f.write_str("unknown mnemonic"),
            TraceErrorKind::ExpectedLabel(label) => write!(f, "expected {label}=0x........"),
            TraceErrorKind::UnexpectedField => f.write_str("unexpected trailing field"),
            TraceErrorKind::NotPosit => f.write_str("instruction word is not a posit instruction"),
            TraceErrorKind::InsnMismatch => f.write_str("instruction word disagrees with mnemonic"),
        }
    }
}

impl core::error::Error for TraceError {}

/// Whitespace-separated tokens with their 1-based columns.
fn tokens(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut rest = line;
    let mut offset = 0;
    core::iter::from_fn(move || {
        let start = rest.find(|c: char| !c.is_ascii_whitespace())?;
        let tail = &rest[start..];
        let len = tail.find(|c: char| c.is_ascii_whitespace()).unwrap_or(tail.len());
        let col = offset + start + 1;
        let tok = &tail[..len];
        offset += start + len;
        rest = &tail[len..];
        Some((col, tok))
    })
}

fn hex8(s: &str) -> Option<u32> {
    let digits = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X"))?;
    if digits.len() != 8 || !digits.bytes().all(|b| b.is_ascii_hexdigit()) {
        return None;
    }
    u32::from_str_radix(digits, 16).ok()
}

/// Parse one non-comment line. `line_no` is used for error positions.
pub fn parse_trace_line(line: &str, line_no: usize) -> core::result::Result<TraceRecord, TraceError> {
    let err = |column, kind| TraceError { line: line_no, column, kind };
    let end = line.len() + 1;
    let mut toks = tokens(line);
    let mut next = |name| toks.next().ok_or(err(end, TraceErrorKind::MissingField(name)));

    let (col, tok) = next("cycle")?;
    if !tok.bytes().all(|b| b.is_ascii_digit()) {
        return Err(err(col, TraceErrorKind::BadCycle));
    }
    let cycle = tok.parse().map_err(|_| err(col, TraceErrorKind::BadCycle))?;
    let (col, tok) = next("pc")?;
    let pc = hex8(tok).ok_or(err(col, TraceErrorKind::BadHex))?;
    let (insn_col, tok) = next("instruction word")?;
    let insn = hex8(tok).ok_or(err(insn_col, TraceErrorKind::BadHex))?;
    let (mn_col, tok) = next("mnemonic")?;
    let mnemonic = FppuOp::from_mnemonic(tok).ok_or(err(mn_col, TraceErrorKind::UnknownMnemonic))?;

    let mut labelled = |label: &'static str| -> core::result::Result<Option<u32>, TraceError> {
        let Some((col, tok)) = next(label).ok() else { return Ok(None) };
        let value = tok
            .strip_prefix(label)
            .and_then(|t| t.strip_prefix('='))
            .ok_or(err(col, TraceErrorKind::ExpectedLabel(label)))?;
        hex8(value).map(Some).ok_or(err(col + label.len() + 1, TraceErrorKind::BadHex))
    };
    let missing = |name| err(end, TraceErrorKind::MissingField(name));
    let rd = labelled("rd")?.ok_or(missing("rd"))?;
    let rs1 = labelled("rs1")?.ok_or(missing("rs1"))?;
    let rs2 = labelled("rs2")?.ok_or(missing("rs2"))?;
    let rs3 = labelled("rs3").map_err(|e| match e.kind {
        TraceErrorKind::ExpectedLabel(_) => TraceError { kind: TraceErrorKind::UnexpectedField, ..e },
        _ => e,
    })?;
    if let Some((col, _)) = toks.next() {
        return Err(err(col, TraceErrorKind::UnexpectedField));
    }

    let decoded = disassemble(insn).ok_or(err(insn_col, TraceErrorKind::NotPosit))?;
    if decoded.mnemonic != mnemonic {
        return Err(err(mn_col, TraceErrorKind::InsnMismatch));
    }
    if decoded.rs3.is_some() != rs3.is_some() {
        return Err(err(insn_col, TraceErrorKind::InsnMismatch));
    }
    Ok(TraceRecord { cycle, pc, insn, mnemonic, rd, rs1, rs2, rs3 })
}

/// Parse a whole trace, stopping at the first malformed line.
pub fn parse_trace(text: &str) -> core::result::Result<Vec<TraceRecord>, TraceError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| {
            let t = l.trim_start();
            !t.is_empty() && !t.starts_with('#')
        })
        .map(|(i, l)| parse_trace_line(l, i + 1))
        .collect()
}

/// Per-mnemonic validation counters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OpStats {
    pub count: usize,
    pub golden_matches: usize,
    pub golden_mismatches: usize,
    /// Agreement with the FPPU model (tracked for PDIV only).
    pub fppu_matches: usize,
    pub fppu_mismatches: usize,
    /// Σ |r_p − r_f| / |r_f| against binary32 recomputation.
    pub error_sum: f64,
    pub error_samples: usize,
    /// Records left out of the error mean (r_f zero or not finite, or a NaR result).
    pub excluded: usize,
}

impl OpStats {
    /// Normalized mean error ē, if any record contributed.
    pub fn mean_error(&self) -> Option<f64> {
        (self.error_samples > 0).then(|| self.error_sum / self.error_samples as f64)
    }

    pub fn mismatch_rate(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.golden_mismatches as f64 / self.count as f64
        }
    }

    fn merge(&mut self, o: &OpStats) {
        self.count += o.count;
        self.golden_matches += o.golden_matches;
        self.golden_mismatches += o.golden_mismatches;
        self.fppu_matches += o.fppu_matches;
        self.fppu_mismatches += o.fppu_mismatches;
        self.error_sum += o.error_sum;
        self.error_samples += o.error_samples;
        self.excluded += o.excluded;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mismatch {
    /// Position of the record in the validated sequence.
    pub index: usize,
    pub cycle: u64,
    pub pc: u32,
    pub mnemonic: Mnemonic,
    pub traced: u32,
    pub golden: u32,
    /// FPPU model result, for PDIV.
    pub fppu: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub records: usize,
    pub ops: BTreeMap<Mnemonic, OpStats>,
    pub mismatches: Vec<Mismatch>,
}

impl ValidationReport {
    pub fn total_mismatches(&self) -> usize {
        self.ops.values().map(|s| s.golden_mismatches).sum()
    }

    /// Append a report covering the records that follow this one.
    pub fn merge(&mut self, other: ValidationReport) {
        self.records += other.records;
        for (op, s) in &other.ops {
            self.ops.entry(*op).or_default().merge(s);
        }
        self.mismatches.extend(other.mismatches);
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "records: {}", self.records)?;
        writeln!(
            f,
            "{:<9} {:>9} {:>9} {:>9} {:>8} {:>12} {:>8}",
            "op", "count", "match", "mismatch", "wrong%", "mean_err", "excluded"
        )?;
        for (op, s) in &self.ops {
            let e = s.mean_error().map_or(alloc::string::String::from("-"), |e| alloc::format!("{e:.6}"));
            writeln!(
                f,
                "{:<9} {:>9} {:>9} {:>9} {:>8.3} {:>12} {:>8}",
                op.mnemonic(),
                s.count,
                s.golden_matches,
                s.golden_mismatches,
                100.0 * s.mismatch_rate(),
                e,
                s.excluded
            )?;
            if *op == FppuOp::Pdiv {
                writeln!(f, "{:<9} fppu model agrees on {} of {}", "", s.fppu_matches, s.count)?;
            }
        }
        for m in &self.mismatches {
            write!(
                f,
                "mismatch #{} cycle {} pc 0x{:08X} {}: traced 0x{:08X} golden 0x{:08X}",
                m.index, m.cycle, m.pc, m.mnemonic, m.traced, m.golden
            )?;
            if let Some(p) = m.fppu {
                write!(f, " fppu 0x{p:08X}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn golden_result(r: &TraceRecord, cfg: PositConfig) -> u32 {
    let p = |w: u32| cfg.truncating(w);
    let (a, b) = (p(r.rs1), p(r.rs2));
    let res = match r.mnemonic {
        FppuOp::Padd => golden::g_add(a, b),
        FppuOp::Psub => golden::g_sub(a, b),
        FppuOp::Pmul => golden::g_mul(a, b),
        FppuOp::Pdiv => golden::g_div(a, b),
        FppuOp::Pfmadd => golden::g_fma(a, b, p(r.rs3.unwrap_or(0))),
        FppuOp::FcvtP2F => return golden::posit_to_float(a),
        FppuOp::FcvtF2P => Ok(golden::float_to_posit(r.rs1, cfg)),
    };
    res.expect("operands share one configuration").word()
}

/// The same operation evaluated in binary32 on the operands rounded to binary32.
fn binary32_result(r: &TraceRecord, cfg: PositConfig) -> Option<f32> {
    let f = |w: u32| f32::from_bits(golden::posit_to_float(cfg.truncating(w)));
    let (a, b) = (f(r.rs1), f(r.rs2));
    Some(match r.mnemonic {
        FppuOp::Padd => a + b,
        FppuOp::Psub => a - b,
        FppuOp::Pmul => a * b,
        FppuOp::Pdiv => a / b,
        FppuOp::Pfmadd => {
            let c = f(r.rs3.unwrap_or(0));
            let x = |v: f32| golden::f32_exact(v.to_bits());
            let exact = &(&x(a)? * &x(b)?) + &x(c)?;
            f32::from_bits(golden::exact_to_f32(&exact))
        }
        FppuOp::FcvtP2F | FppuOp::FcvtF2P => return None,
    })
}

/// Validate `records` whose first element sits at `first_index` of the whole trace.
pub fn validate_records(records: &[TraceRecord], fppu: &Fppu, first_index: usize) -> ValidationReport {
    let cfg = fppu.config();
    let mut report = ValidationReport { records: records.len(), ..Default::default() };
    for (i, r) in records.iter().enumerate() {
        let stats = report.ops.entry(r.mnemonic).or_default();
        stats.count += 1;
        let golden = golden_result(r, cfg);
        let fppu_result =
            (r.mnemonic == FppuOp::Pdiv).then(|| fppu.exec(FppuOp::Pdiv, r.rs1, r.rs2, None).expect("two-operand op"));
        if let Some(p) = fppu_result {
            if p == r.rd {
                stats.fppu_matches += 1;
            } else {
                stats.fppu_mismatches += 1;
            }
        }
        if golden == r.rd {
            stats.golden_matches += 1;
        } else {
            stats.golden_mismatches += 1;
            report.mismatches.push(Mismatch {
                index: first_index + i,
                cycle: r.cycle,
                pc: r.pc,
                mnemonic: r.mnemonic,
                traced: r.rd,
                golden,
                fppu: fppu_result,
            });
        }
        if let Some(rf) = binary32_result(r, cfg) {
            let traced = cfg.truncating(r.rd);
            if rf == 0.0 || !rf.is_finite() || traced.is_nar() {
                stats.excluded += 1;
            } else {
                let rf = f64::from(rf);
                stats.error_sum += ((traced.to_f64() - rf) / rf).abs();
                stats.error_samples += 1;
            }
        }
    }
    report
}

/// Check every record against the golden model (and PDIV against the FPPU model).
pub fn validate_trace(records: &[TraceRecord], cfg: PositConfig) -> ValidationReport {
    validate_records(records, &Fppu::new(cfg), 0)
}
