//! Machine-readable (JSON) forms of the reports, plus the kernel error table.
//!
//! Every document carries a `"kind"` field naming its schema.

use std::fmt;

use fppu_core::isa::ValidationReport;
use fppu_core::kernels::{run_kernel, ErrorMode, ErrorReport, KernelKind, KernelSpec, OpKind};
use fppu_core::{Fppu, PositConfig};
use serde_json::{json, Value};

use crate::optk::OptkReport;
use crate::sweep::{CheckReport, DivTable, Mode, Tally};

fn hex(w: u32) -> String {
    format!("0x{w:08X}")
}

fn tally_json(t: &Tally) -> Value {
    json!({
        "total": t.total,
        "matches": t.matches(),
        "mismatches": t.mismatches,
        "wrong_percent": t.wrong_percent(),
        "non_adjacent": t.non_adjacent,
        "examples": t.examples.iter().map(|e| json!({
            "operands": e.operands.iter().map(|&w| hex(w)).collect::<Vec<_>>(),
            "fppu": hex(e.fppu),
            "golden": hex(e.golden),
        })).collect::<Vec<_>>(),
    })
}

pub fn check_json(r: &CheckReport) -> Value {
    let (mode, samples, seed) = match r.mode {
        Mode::Exhaustive { seed } => ("exhaustive", None, seed),
        Mode::Sample { count, seed } => ("sample", Some(count), seed),
    };
    json!({
        "kind": "check",
        "n_bits": r.config.n_bits(),
        "es_bits": r.config.es_bits(),
        "mode": mode,
        "samples": samples,
        "seed": seed,
        "exact_failures": r.exact_failures(),
        "ops": r.ops.iter().map(|c| {
            let mut v = tally_json(&c.tally);
            v["op"] = json!(c.op.name());
            v["exact"] = json!(c.op.is_exact());
            v
        }).collect::<Vec<_>>(),
    })
}

pub fn div_table_json(t: &DivTable) -> Value {
    json!({
        "kind": "divtable",
        "seed": t.seed,
        "rows": t.rows.iter().map(|r| json!({
            "n_bits": r.n_bits,
            "es_bits": r.es_bits,
            "nr_rounds": r.nr_rounds,
            "exhaustive": r.samples.is_none(),
            "pairs": r.tally.total,
            "wrong": r.tally.mismatches,
            "wrong_percent": r.tally.wrong_percent(),
            "non_adjacent": r.tally.non_adjacent,
        })).collect::<Vec<_>>(),
    })
}

pub fn optk_json(r: &OptkReport) -> Value {
    json!({
        "kind": "optk",
        "k1": r.k1,
        "k2": r.k2,
        "squared_error": r.squared_error,
        "start_squared_error": r.start_squared_error,
        "iterations": r.iterations,
        "baseline": r.baseline.map(|b| json!({
            "k1": b.k1,
            "k2": b.k2,
            "squared_error": b.squared_error,
            "improvement_percent": b.improvement_percent,
        })),
    })
}

pub fn validation_json(r: &ValidationReport, cfg: PositConfig) -> Value {
    json!({
        "kind": "trace-validation",
        "n_bits": cfg.n_bits(),
        "es_bits": cfg.es_bits(),
        "records": r.records,
        "mismatch_total": r.total_mismatches(),
        "ops": r.ops.iter().map(|(op, s)| json!({
            "mnemonic": op.mnemonic(),
            "count": s.count,
            "golden_matches": s.golden_matches,
            "golden_mismatches": s.golden_mismatches,
            "fppu_matches": s.fppu_matches,
            "fppu_mismatches": s.fppu_mismatches,
            "mean_error": s.mean_error(),
            "error_samples": s.error_samples,
            "excluded": s.excluded,
        })).collect::<Vec<_>>(),
        "mismatches": r.mismatches.iter().map(|m| json!({
            "index": m.index,
            "cycle": m.cycle,
            "pc": hex(m.pc),
            "mnemonic": m.mnemonic.mnemonic(),
            "traced": hex(m.traced),
            "golden": hex(m.golden),
            "fppu": m.fppu.map(hex),
        })).collect::<Vec<_>>(),
    })
}

/// One column of the kernel table.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelColumn {
    pub kind: KernelKind,
    pub config: PositConfig,
    pub report: ErrorReport,
}

/// ē for each kernel × configuration, rows mul/add/div.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    pub size: usize,
    pub seed: u64,
    pub mode: ErrorMode,
    pub columns: Vec<KernelColumn>,
}

pub fn kernel_table(
    kinds: &[KernelKind],
    configs: &[PositConfig],
    base: KernelSpec,
    mode: ErrorMode,
) -> fppu_core::Result<KernelTable> {
    let mut columns = Vec::new();
    for &kind in kinds {
        for &config in configs {
            let spec = KernelSpec { kind, ..base };
            let run = run_kernel(&spec, &Fppu::new(config), mode)?;
            columns.push(KernelColumn { kind, config, report: run.report });
        }
    }
    Ok(KernelTable { size: base.size, seed: base.seed, mode, columns })
}

impl fmt::Display for KernelTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "size {} seed {} error mode {:?}", self.size, self.seed, self.mode)?;
        write!(f, "{:<6}", "")?;
        for c in &self.columns {
            write!(f, " {:>22}", format!("{} {}", c.kind, c.config))?;
        }
        writeln!(f)?;
        for op in OpKind::ALL {
            write!(f, "{:<6}", format!("p.{}", op.name()))?;
            for c in &self.columns {
                let cell = c.report.get(op).map_or("-".to_string(), |e| format!("{:.6}", e.mean));
                write!(f, " {cell:>22}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

pub fn kernel_table_json(t: &KernelTable) -> Value {
    let mode = match t.mode {
        ErrorMode::Parallel => "parallel",
        ErrorMode::PerOp => "per-op",
    };
    json!({
        "kind": "kernels",
        "size": t.size,
        "seed": t.seed,
        "error_mode": mode,
        "columns": t.columns.iter().map(|c| {
            let mut ops = serde_json::Map::new();
            for op in OpKind::ALL {
                if let Some(e) = c.report.get(op) {
                    ops.insert(op.name().into(), json!({
                        "mean_error": e.mean,
                        "samples": e.samples,
                        "excluded": e.excluded,
                    }));
                }
            }
            json!({
                "kernel": c.kind.name(),
                "n_bits": c.config.n_bits(),
                "es_bits": c.config.es_bits(),
                "ops": ops,
            })
        }).collect::<Vec<_>>(),
    })
}
