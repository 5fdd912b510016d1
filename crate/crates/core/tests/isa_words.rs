use fppu_core::isa::{assemble, disassemble, parse_trace, Instruction, TraceRecord, OPCODE_FMA, OPCODE_POSIT};
use fppu_core::FppuOp;
use proptest::prelude::*;

proptest! {
    #[test]
    fn foreign_opcodes_are_not_decoded(w in any::<u32>()) {
        let opcode = w & 0x7F;
        prop_assume!(opcode != OPCODE_POSIT && opcode != OPCODE_FMA);
        prop_assert_eq!(disassemble(w), None);
    }

    #[test]
    fn decoded_words_reassemble_to_themselves(w in any::<u32>()) {
        if let Some(i) = disassemble(w) {
            prop_assert_eq!(assemble(&i).unwrap(), w);
        }
    }

    #[test]
    fn trace_lines_round_trip(
        cycle in any::<u64>(), pc in any::<u32>(), rd in any::<u32>(), a in any::<u32>(), b in any::<u32>(),
        c in any::<u32>(), op in 0u8..7,
    ) {
        let op = FppuOp::from_code(op).unwrap();
        let insn = match op {
            FppuOp::Pfmadd => Instruction::fma(1, 2, 3, 4),
            FppuOp::FcvtP2F | FppuOp::FcvtF2P => Instruction::convert(op, 1, 2),
            _ => Instruction::new(op, 1, 2, 3),
        };
        let rec = TraceRecord {
            cycle,
            pc,
            insn: assemble(&insn).unwrap(),
            mnemonic: op,
            rd,
            rs1: a,
            rs2: b,
            rs3: (op == FppuOp::Pfmadd).then_some(c),
        };
        let parsed = parse_trace(&rec.to_string()).unwrap();
        prop_assert_eq!(parsed, vec![rec]);
    }
}

#[test]
fn high_funct7_bits_reject_pfmadd() {
    let w = assemble(&Instruction::fma(5, 6, 7, 8)).unwrap();
    assert_eq!(disassemble(w | 1 << 25), None);
}
