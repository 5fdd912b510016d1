//! FPPU-versus-golden comparison sweeps.
//!
//! Work is cut into fixed chunks whose operands depend only on the chunk index
//! (sampled chunks draw from their own ChaCha stream), so results do not depend
//! on the number of worker threads. Chunk results are merged in index order.

use std::fmt;

use fppu_core::fppu::ReciprocalParams;
use fppu_core::{golden, Fppu, FppuOp, PositConfig};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

pub const DEFAULT_SEED: u64 = 1;
pub const FMA_RANDOM_TRIPLES: u64 = 1_000_000;
const CHUNK: u64 = 1 << 14;
const KEPT_EXAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CheckOp {
    Add,
    Sub,
    Mul,
    Div,
    Fma,
    P2f,
    F2p,
}

impl CheckOp {
    pub const ALL: [CheckOp; 7] =
        [CheckOp::Add, CheckOp::Sub, CheckOp::Mul, CheckOp::Div, CheckOp::Fma, CheckOp::P2f, CheckOp::F2p];

    pub fn name(self) -> &'static str {
        match self {
            CheckOp::Add => "add",
            CheckOp::Sub => "sub",
            CheckOp::Mul => "mul",
            CheckOp::Div => "div",
            CheckOp::Fma => "fma",
            CheckOp::P2f => "p2f",
            CheckOp::F2p => "f2p",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|op| op.name().eq_ignore_ascii_case(s.trim()))
    }

    pub fn fppu_op(self) -> FppuOp {
        match self {
            CheckOp::Add => FppuOp::Padd,
            CheckOp::Sub => FppuOp::Psub,
            CheckOp::Mul => FppuOp::Pmul,
            CheckOp::Div => FppuOp::Pdiv,
            CheckOp::Fma => FppuOp::Pfmadd,
            CheckOp::P2f => FppuOp::FcvtP2F,
            CheckOp::F2p => FppuOp::FcvtF2P,
        }
    }

    /// Division is the only operation allowed to differ from the golden model.
    pub fn is_exact(self) -> bool {
        self != CheckOp::Div
    }

    fn single_operand(self) -> bool {
        matches!(self, CheckOp::P2f | CheckOp::F2p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Every pattern pair (N = 8), or every single operand (conversions, N ≤ 16).
    /// The seed drives the extra random triples of the FMA sweep.
    Exhaustive {
        seed: u64,
    },
    Sample {
        count: u64,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SweepError {
    Infeasible { op: CheckOp, n_bits: u32 },
}

impl fmt::Display for SweepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepError::Infeasible { op, n_bits } => write!(
                f,
                "exhaustive {} is not available for {n_bits}-bit posits (pairs need N = 8, single-operand sweeps N <= 16)",
                op.name()
            ),
        }
    }
}

impl std::error::Error for SweepError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Example {
    pub operands: [u32; 3],
    pub fppu: u32,
    pub golden: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Tally {
    pub total: u64,
    pub mismatches: u64,
    /// Mismatches further than one pattern step from the golden result.
    pub non_adjacent: u64,
    pub examples: Vec<Example>,
}

impl Tally {
    pub fn matches(&self) -> u64 {
        self.total - self.mismatches
    }

    pub fn wrong_percent(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * self.mismatches as f64 / self.total as f64
        }
    }

    fn merge(mut self, o: Tally) -> Tally {
        self.total += o.total;
        self.mismatches += o.mismatches;
        self.non_adjacent += o.non_adjacent;
        let room = KEPT_EXAMPLES.saturating_sub(self.examples.len());
        self.examples.extend(o.examples.into_iter().take(room));
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpCheck {
    pub op: CheckOp,
    pub tally: Tally,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub config: PositConfig,
    pub mode: Mode,
    pub ops: Vec<OpCheck>,
}

impl CheckReport {
    /// Mismatches in operations that must be correctly rounded.
    pub fn exact_failures(&self) -> u64 {
        self.ops.iter().filter(|c| c.op.is_exact()).map(|c| c.tally.mismatches).sum()
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mode {
            Mode::Exhaustive { seed } => writeln!(f, "{} exhaustive (seed {seed})", self.config)?,
            Mode::Sample { count, seed } => writeln!(f, "{} sampled: {count} per op, seed {seed}", self.config)?,
        }
        writeln!(
            f,
            "{:<5} {:>12} {:>12} {:>10} {:>9} {:>12}",
            "op", "total", "match", "mismatch", "wrong%", "non-adjacent"
        )?;
        for c in &self.ops {
            let t = &c.tally;
            writeln!(
                f,
                "{:<5} {:>12} {:>12} {:>10} {:>9.3} {:>12}",
                c.op.name(),
                t.total,
                t.matches(),
                t.mismatches,
                t.wrong_percent(),
                t.non_adjacent
            )?;
            for e in &t.examples {
                writeln!(
                    f,
                    "      {:#x} {:#x} {:#x} -> fppu {:#x}, golden {:#x}",
                    e.operands[0], e.operands[1], e.operands[2], e.fppu, e.golden
                )?;
            }
        }
        Ok(())
    }
}

fn golden_result(op: CheckOp, cfg: PositConfig, ops: [u32; 3]) -> u32 {
    let p = |w: u32| cfg.truncating(w);
    let r = match op {
        CheckOp::Add => golden::g_add(p(ops[0]), p(ops[1])),
        CheckOp::Sub => golden::g_sub(p(ops[0]), p(ops[1])),
        CheckOp::Mul => golden::g_mul(p(ops[0]), p(ops[1])),
        CheckOp::Div => golden::g_div(p(ops[0]), p(ops[1])),
        CheckOp::Fma => golden::g_fma(p(ops[0]), p(ops[1]), p(ops[2])),
        CheckOp::P2f => return golden::posit_to_float(p(ops[0])),
        CheckOp::F2p => Ok(golden::float_to_posit(ops[0], cfg)),
    };
    r.expect("one configuration").word()
}

/// Compare one operand triple.
fn check_one(fppu: &Fppu, op: CheckOp, ops: [u32; 3], tally: &mut Tally) {
    let cfg = fppu.config();
    let c = (op == CheckOp::Fma).then_some(ops[2]);
    let got = fppu.exec(op.fppu_op(), ops[0], ops[1], c).expect("operands supplied");
    let want = golden_result(op, cfg, ops);
    tally.total += 1;
    if got != want {
        tally.mismatches += 1;
        let close = match op {
            CheckOp::P2f => false,
            _ => golden::adjacent(cfg.truncating(got), cfg.truncating(want)),
        };
        if !close {
            tally.non_adjacent += 1;
        }
        if tally.examples.len() < KEPT_EXAMPLES {
            tally.examples.push(Example { operands: ops, fppu: got, golden: want });
        }
    }
}

fn run_chunks(chunks: u64, work: impl Fn(u64) -> Tally + Sync + Send) -> Tally {
    let parts: Vec<Tally> = (0..chunks).into_par_iter().map(work).collect();
    parts.into_iter().fold(Tally::default(), Tally::merge)
}

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Every operand pair (or single operand) with c = 0 for FMA.
fn exhaustive(fppu: &Fppu, op: CheckOp) -> Tally {
    let n = fppu.config().n_bits();
    if op == CheckOp::F2p {
        // the upper 16 bits of binary32: every sign, exponent and 7-bit mantissa prefix
        return run_chunks(1 << 16 >> 8, |chunk| {
            let mut t = Tally::default();
            for hi in chunk << 8..(chunk + 1) << 8 {
                check_one(fppu, op, [(hi as u32) << 16, 0, 0], &mut t);
            }
            t
        });
    }
    let patterns = 1u64 << n;
    if op.single_operand() {
        let chunks = patterns.div_ceil(CHUNK);
        return run_chunks(chunks, |chunk| {
            let mut t = Tally::default();
            for w in chunk * CHUNK..((chunk + 1) * CHUNK).min(patterns) {
                check_one(fppu, op, [w as u32, 0, 0], &mut t);
            }
            t
        });
    }
    run_chunks(patterns, |a| {
        let mut t = Tally::default();
        for b in 0..patterns {
            check_one(fppu, op, [a as u32, b as u32, 0], &mut t);
        }
        t
    })
}

fn sampled(fppu: &Fppu, op: CheckOp, count: u64, seed: u64) -> Tally {
    let mask = fppu.config().mask();
    let chunks = count.div_ceil(CHUNK);
    run_chunks(chunks, |chunk| {
        let mut rng = chunk_rng(seed, chunk);
        let mut t = Tally::default();
        let len = CHUNK.min(count - chunk * CHUNK);
        for _ in 0..len {
            let a = rng.next_u32();
            let a = if op == CheckOp::F2p { a } else { a & mask };
            let ops = [a, rng.next_u32() & mask, rng.next_u32() & mask];
            check_one(fppu, op, ops, &mut t);
        }
        t
    })
}

pub fn feasible(op: CheckOp, n_bits: u32) -> bool {
    if op.single_operand() {
        n_bits <= 16
    } else {
        n_bits == 8
    }
}

/// Compare FPPU results with the golden model for each requested operation.
pub fn check(fppu: &Fppu, ops: &[CheckOp], mode: Mode) -> Result<CheckReport, SweepError> {
    let cfg = fppu.config();
    if let Mode::Exhaustive { .. } = mode {
        if let Some(&op) = ops.iter().find(|&&op| !feasible(op, cfg.n_bits())) {
            return Err(SweepError::Infeasible { op, n_bits: cfg.n_bits() });
        }
    }
    let ops = ops
        .iter()
        .map(|&op| {
            let tally = match mode {
                Mode::Exhaustive { seed } if op == CheckOp::Fma => {
                    exhaustive(fppu, op).merge(sampled(fppu, op, FMA_RANDOM_TRIPLES, seed))
                }
                Mode::Exhaustive { .. } => exhaustive(fppu, op),
                Mode::Sample { count, seed } => sampled(fppu, op, count, seed),
            };
            OpCheck { op, tally }
        })
        .collect();
    Ok(CheckReport { config: cfg, mode, ops })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivRow {
    pub n_bits: u32,
    pub es_bits: u32,
    pub nr_rounds: u32,
    /// `None` when exhaustive.
    pub samples: Option<u64>,
    pub tally: Tally,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivTable {
    pub seed: u64,
    pub rows: Vec<DivRow>,
}

/// PDIV wrong-rates for each (N, ES, NR) combination: exhaustive for 8-bit
/// posits, `samples` seeded random pairs otherwise.
pub fn div_table(configs: &[PositConfig], nr_rounds: &[u32], samples: u64, seed: u64) -> DivTable {
    let mut rows = Vec::new();
    for &cfg in configs {
        for &nr in nr_rounds {
            let fppu = Fppu::with_reciprocal(cfg, ReciprocalParams::for_config(cfg).with_nr_rounds(nr));
            let (tally, samples) = if cfg.n_bits() == 8 {
                (exhaustive(&fppu, CheckOp::Div), None)
            } else {
                (sampled(&fppu, CheckOp::Div, samples, seed), Some(samples))
            };
            rows.push(DivRow { n_bits: cfg.n_bits(), es_bits: cfg.es_bits(), nr_rounds: nr, samples, tally });
        }
    }
    DivTable { seed, rows }
}

impl fmt::Display for DivTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed {}", self.seed)?;
        writeln!(f, "{:>3} {:>3} {:>3} {:>12} {:>10} {:>8}", "N", "ES", "NR", "pairs", "wrong", "wrong%")?;
        for r in &self.rows {
            let pairs = r.samples.map_or(format!("all {}", r.tally.total), |s| s.to_string());
            writeln!(
                f,
                "{:>3} {:>3} {:>3} {:>12} {:>10} {:>8.2}",
                r.n_bits,
                r.es_bits,
                r.nr_rounds,
                pairs,
                r.tally.mismatches,
                r.tally.wrong_percent()
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fppu(n: u32, es: u32) -> Fppu {
        Fppu::new(PositConfig::new(n, es).unwrap())
    }

    #[test]
    fn infeasible_requests_are_rejected() {
        let e = check(&fppu(16, 1), &[CheckOp::Add], Mode::Exhaustive { seed: 1 }).unwrap_err();
        assert_eq!(e, SweepError::Infeasible { op: CheckOp::Add, n_bits: 16 });
        assert!(check(&fppu(32, 2), &[CheckOp::P2f], Mode::Exhaustive { seed: 1 }).is_err());
        assert!(check(&fppu(16, 1), &[CheckOp::P2f], Mode::Exhaustive { seed: 1 }).is_ok());
    }

    #[test]
    fn sampling_ignores_thread_count() {
        let f = fppu(16, 2);
        let mode = Mode::Sample { count: 50_000, seed: 9 };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| check(&f, &[CheckOp::Div], mode).unwrap());
        let b = many.install(|| check(&f, &[CheckOp::Div], mode).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.ops[0].tally.total, 50_000);
    }

    #[test]
    fn op_names_parse() {
        for op in CheckOp::ALL {
            assert_eq!(CheckOp::parse(op.name()), Some(op));
        }
        assert_eq!(CheckOp::parse("pow"), None);
    }
}
