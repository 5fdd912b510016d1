//! Trace files on disk, synthetic trace generation and sharded validation.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use fppu_core::isa::{parse_trace, trace::validate_records, Instruction, TraceRecord, ValidationReport};
use fppu_core::{Fppu, FppuOp};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rayon::prelude::*;

const SHARD: usize = 4096;
const FIRST_PC: u32 = 0x8000_0000;

pub fn read_trace(path: &Path) -> anyhow::Result<Vec<TraceRecord>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_trace(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_trace(path: &Path, records: &[TraceRecord]) -> anyhow::Result<()> {
    fs::write(path, render_trace(records)).with_context(|| format!("writing {}", path.display()))
}

pub fn render_trace(records: &[TraceRecord]) -> String {
    let mut out = String::from("# cycle pc insn mnemonic rd rs1 rs2 [rs3]\n");
    for r in records {
        out.push_str(&r.to_string());
        out.push('\n');
    }
    out
}

/// Validate in shards across the rayon pool; the merged report equals a
/// sequential run.
pub fn validate_sharded(records: &[TraceRecord], fppu: &Fppu) -> ValidationReport {
    let parts: Vec<ValidationReport> =
        records.par_chunks(SHARD).enumerate().map(|(i, chunk)| validate_records(chunk, fppu, i * SHARD)).collect();
    parts.into_iter().fold(ValidationReport::default(), |mut acc, p| {
        acc.merge(p);
        acc
    })
}

/// What a synthetic trace should contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TracePlan {
    pub count: usize,
    pub seed: u64,
    /// Include every 8-bit operand pair once as a PDIV.
    pub all_div_pairs: bool,
}

/// Build a trace by running random posit instructions through `fppu`. Records
/// are shuffled; cycles advance with random stalls of up to three cycles.
pub fn generate_trace(fppu: &Fppu, plan: TracePlan) -> anyhow::Result<Vec<TraceRecord>> {
    let cfg = fppu.config();
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mask = cfg.mask();
    let mut work: Vec<(FppuOp, u32, u32, Option<u32>)> = Vec::with_capacity(plan.count);
    if plan.all_div_pairs {
        if cfg.n_bits() != 8 {
            bail!("every PDIV pair only fits in a trace for 8-bit posits");
        }
        if plan.count < 1 << 16 {
            bail!("a trace with every PDIV pair needs at least 65536 records");
        }
        for a in 0..256u32 {
            for b in 0..256u32 {
                work.push((FppuOp::Pdiv, a, b, None));
            }
        }
    }
    const OTHERS: [FppuOp; 7] =
        [FppuOp::Padd, FppuOp::Psub, FppuOp::Pmul, FppuOp::Pfmadd, FppuOp::Pdiv, FppuOp::FcvtP2F, FppuOp::FcvtF2P];
    while work.len() < plan.count {
        let pool = if plan.all_div_pairs { &OTHERS[..4] } else { &OTHERS[..] };
        let op = *pool.choose(&mut rng).expect("non-empty");
        let a = if op == FppuOp::FcvtF2P { rng.gen::<u32>() } else { rng.gen::<u32>() & mask };
        let b = if op.arity() >= 2 { rng.gen::<u32>() & mask } else { 0 };
        let c = (op == FppuOp::Pfmadd).then(|| rng.gen::<u32>() & mask);
        work.push((op, a, b, c));
    }
    work.shuffle(&mut rng);

    let mut cycle = 0u64;
    let mut pc = FIRST_PC;
    let mut out = Vec::with_capacity(work.len());
    for (op, a, b, c) in work {
        let mut reg = || rng.gen_range(1..32u8);
        let instr = match op {
            FppuOp::Pfmadd => Instruction::fma(reg(), reg(), reg(), reg()),
            FppuOp::FcvtP2F | FppuOp::FcvtF2P => Instruction::convert(op, reg(), reg()),
            _ => Instruction::new(op, reg(), reg(), reg()),
        };
        cycle += 1 + rng.gen_range(0..4u64);
        out.push(TraceRecord::from_execution(cycle, pc, &instr, fppu, a, b, c)?);
        pc = pc.wrapping_add(4);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use fppu_core::PositConfig;

    #[test]
    fn sharded_equals_sequential() {
        let f = Fppu::new(PositConfig::new(16, 1).unwrap());
        let recs = generate_trace(&f, TracePlan { count: 10_000, seed: 3, all_div_pairs: false }).unwrap();
        let sharded = validate_sharded(&recs, &f);
        let sequential = validate_records(&recs, &f, 0);
        assert_eq!(sharded.mismatches, sequential.mismatches);
        for (op, s) in &sequential.ops {
            let t = &sharded.ops[op];
            assert_eq!(
                (t.count, t.golden_mismatches, t.fppu_matches, t.error_samples),
                (s.count, s.golden_mismatches, s.fppu_matches, s.error_samples)
            );
            // only the summation order of the error terms differs
            if let (Some(a), Some(b)) = (t.mean_error(), s.mean_error()) {
                assert!((a - b).abs() <= 1e-12 * b.abs());
            }
        }
        assert_eq!(validate_sharded(&recs, &f), sharded);
    }

    #[test]
    fn rendered_trace_parses_back() {
        let f = Fppu::new(PositConfig::new(8, 1).unwrap());
        let recs = generate_trace(&f, TracePlan { count: 500, seed: 4, all_div_pairs: false }).unwrap();
        assert_eq!(parse_trace(&render_trace(&recs)).unwrap(), recs);
    }

    #[test]
    fn all_pairs_needs_room() {
        let f = Fppu::new(PositConfig::new(8, 1).unwrap());
        assert!(generate_trace(&f, TracePlan { count: 1000, seed: 4, all_div_pairs: true }).is_err());
        let f = Fppu::new(PositConfig::new(16, 1).unwrap());
        assert!(generate_trace(&f, TracePlan { count: 100_000, seed: 4, all_div_pairs: true }).is_err());
    }
}
