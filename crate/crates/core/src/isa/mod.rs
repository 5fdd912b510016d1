//! Encodings of the posit instructions on the RISC-V custom opcode space, and the
//! instruction-trace checker built on them.
//!
//! All instructions are R-type:
//!
//! ```text
//! 31      25 24  20 19  15 14  12 11   7 6      0
//! | funct7  |  rs2 |  rs1 |funct3|  rd  | opcode |
//! ```
//!
//! | mnemonic | opcode  | funct3 | funct7        |
//! |----------|---------|--------|---------------|
//! | PADD     | 0001011 | 000    | 1100000       |
//! | PSUB     | 0001011 | 001    | 1101010       |
//! | PMUL     | 0001011 | 010    | 1100000       |
//! | PDIV     | 0001011 | 100    | 1100000       |
//! | PFMADD   | 0101011 | 000    | rs3 ‖ 00      |
//! | FCVT.P2F | 0001011 | 011    | 1100000, rs2=0 |
//! | FCVT.F2P | 0001011 | 101    | 1100000, rs2=0 |
//!
//! The two conversion rows are this crate's own assignment.

pub mod trace;

use core::fmt;

use crate::error::{Error, Result};
use crate::fppu::FppuOp;

pub use trace::{
    parse_trace, parse_trace_line, validate_trace, Mismatch, OpStats, TraceError, TraceErrorKind, TraceRecord,
    ValidationReport,
};

/// Instruction mnemonics are the FPPU operations one to one.
pub type Mnemonic = FppuOp;

pub const OPCODE_POSIT: u32 = 0b000_1011;
pub const OPCODE_FMA: u32 = 0b010_1011;
const FUNCT7_POSIT: u32 = 0b110_0000;
const FUNCT7_PSUB: u32 = 0b110_1010;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Instruction {
    pub mnemonic: Mnemonic,
    pub rd: u8,
    pub rs1: u8,
    /// Always 0 for the conversions.
    pub rs2: u8,
    /// Present exactly for PFMADD.
    pub rs3: Option<u8>,
}

fn reg(r: u8) -> Result<u32> {
    if r < 32 {
        Ok(u32::from(r))
    } else {
        Err(Error::RegisterOutOfRange(r))
    }
}

fn funct3_funct7(m: Mnemonic) -> (u32, u32) {
    match m {
        FppuOp::Padd => (0b000, FUNCT7_POSIT),
        FppuOp::Psub => (0b001, FUNCT7_PSUB),
        FppuOp::Pmul => (0b010, FUNCT7_POSIT),
        FppuOp::Pdiv => (0b100, FUNCT7_POSIT),
        FppuOp::FcvtP2F => (0b011, FUNCT7_POSIT),
        FppuOp::FcvtF2P => (0b101, FUNCT7_POSIT),
        FppuOp::Pfmadd => (0b000, 0),
    }
}

fn is_conversion(m: Mnemonic) -> bool {
    matches!(m, FppuOp::FcvtP2F | FppuOp::FcvtF2P)
}

impl Instruction {
    pub fn new(mnemonic: Mnemonic, rd: u8, rs1: u8, rs2: u8) -> Self {
        Instruction { mnemonic, rd, rs1, rs2, rs3: None }
    }

    pub fn fma(rd: u8, rs1: u8, rs2: u8, rs3: u8) -> Self {
        Instruction { mnemonic: FppuOp::Pfmadd, rd, rs1, rs2, rs3: Some(rs3) }
    }

    pub fn convert(mnemonic: Mnemonic, rd: u8, rs1: u8) -> Self {
        Instruction { mnemonic, rd, rs1, rs2: 0, rs3: None }
    }

    pub fn assemble(&self) -> Result<u32> {
        assemble(self)
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} x{}, x{}", self.mnemonic, self.rd, self.rs1)?;
        if !is_conversion(self.mnemonic) {
            write!(f, ", x{}", self.rs2)?;
        }
        if let Some(rs3) = self.rs3 {
            write!(f, ", x{rs3}")?;
        }
        Ok(())
    }
}

pub fn assemble(i: &Instruction) -> Result<u32> {
    let (rd, rs1, rs2) = (reg(i.rd)?, reg(i.rs1)?, reg(i.rs2)?);
    let fused = i.mnemonic == FppuOp::Pfmadd;
    if fused != i.rs3.is_some() {
        return Err(Error::Rs3Mismatch);
    }
    if is_conversion(i.mnemonic) && rs2 != 0 {
        return Err(Error::Unsupported("conversions take a single source register"));
    }
    let (funct3, funct7, opcode) = match i.rs3 {
        Some(rs3) => (0, reg(rs3)? << 2, OPCODE_FMA),
        None => {
            let (f3, f7) = funct3_funct7(i.mnemonic);
            (f3, f7, OPCODE_POSIT)
        }
    };
    Ok(funct7 << 25 | rs2 << 20 | rs1 << 15 | funct3 << 12 | rd << 7 | opcode)
}

/// Decode a word; `None` for anything that is not one of the posit encodings.
pub fn disassemble(word: u32) -> Option<Instruction> {
    let opcode = word & 0x7F;
    let rd = ((word >> 7) & 0x1F) as u8;
    let funct3 = (word >> 12) & 0x7;
    let rs1 = ((word >> 15) & 0x1F) as u8;
    let rs2 = ((word >> 20) & 0x1F) as u8;
    let funct7 = word >> 25;
    match opcode {
        OPCODE_FMA if funct3 == 0 && funct7 & 0b11 == 0 => Some(Instruction::fma(rd, rs1, rs2, (funct7 >> 2) as u8)),
        OPCODE_POSIT => {
            let mnemonic = FppuOp::ALL
                .into_iter()
                .filter(|&m| m != FppuOp::Pfmadd)
                .find(|&m| funct3_funct7(m) == (funct3, funct7))?;
            if is_conversion(mnemonic) && rs2 != 0 {
                return None;
            }
            Some(Instruction::new(mnemonic, rd, rs1, rs2))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn padd_example() {
        let i = Instruction::new(FppuOp::Padd, 3, 1, 2);
        assert_eq!(assemble(&i), Ok(0xC020_818B));
        assert_eq!(disassemble(0xC020_818B), Some(i));
    }

    #[test]
    fn psub_fields() {
        let w = assemble(&Instruction::new(FppuOp::Psub, 3, 1, 2)).unwrap();
        assert_eq!(w >> 25, 0b110_1010);
        assert_eq!((w >> 12) & 7, 0b001);
        assert_eq!(w & 0x7F, OPCODE_POSIT);
    }

    #[test]
    fn fma_keeps_rs3_in_funct7() {
        let i = Instruction::fma(5, 6, 7, 31);
        let w = assemble(&i).unwrap();
        assert_eq!(w & 0x7F, OPCODE_FMA);
        assert_eq!(w >> 25, 31 << 2);
        assert_eq!(disassemble(w), Some(i));
        // low funct7 bits must be zero
        assert_eq!(disassemble(w | 1 << 25), None);
    }

    #[test]
    fn rejects_bad_operands() {
        assert_eq!(assemble(&Instruction::new(FppuOp::Padd, 32, 0, 0)), Err(Error::RegisterOutOfRange(32)));
        let mut i = Instruction::new(FppuOp::Pmul, 1, 2, 3);
        i.rs3 = Some(4);
        assert_eq!(assemble(&i), Err(Error::Rs3Mismatch));
        let i = Instruction { mnemonic: FppuOp::Pfmadd, rd: 1, rs1: 2, rs2: 3, rs3: None };
        assert_eq!(assemble(&i), Err(Error::Rs3Mismatch));
        assert!(assemble(&Instruction::new(FppuOp::FcvtP2F, 1, 2, 3)).is_err());
    }

    #[test]
    fn standard_words_are_not_posit() {
        // add x3, x1, x2
        assert_eq!(disassemble(0x0020_81B3), None);
        // PADD fields with an unknown funct7
        assert_eq!(disassemble(0x0020_818B), None);
        // conversion with nonzero rs2
        let w = assemble(&Instruction::convert(FppuOp::FcvtF2P, 1, 2)).unwrap();
        assert_eq!(disassemble(w | 1 << 20), None);
    }

    #[test]
    fn display() {
        assert_eq!(alloc::format!("{}", Instruction::new(FppuOp::Padd, 3, 1, 2)), "PADD x3, x1, x2");
        assert_eq!(alloc::format!("{}", Instruction::fma(1, 2, 3, 4)), "PFMADD x1, x2, x3, x4");
        assert_eq!(alloc::format!("{}", Instruction::convert(FppuOp::FcvtP2F, 1, 2)), "FCVT.P2F x1, x2");
    }
}
