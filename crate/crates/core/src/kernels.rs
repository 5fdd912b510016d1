//! Small linear-algebra kernels run through the FPPU model and in binary32,
//! with the normalized mean error ē = mean |r_p − r_f| / |r_f| per operation kind.
//!
//! Kernels are strictly sequential and row-major; accumulators start from the
//! first product, so GEMM does `size` multiplies and `size − 1` adds per output.

use alloc::vec::Vec;
use core::fmt;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::fppu::{Fppu, FppuOp};
use crate::golden;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    Gemm,
    Conv3x3,
    AvgPool4x4,
}

impl KernelKind {
    pub const ALL: [KernelKind; 3] = [KernelKind::Conv3x3, KernelKind::Gemm, KernelKind::AvgPool4x4];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Gemm => "gemm",
            KernelKind::Conv3x3 => "conv3x3",
            KernelKind::AvgPool4x4 => "avgpool4x4",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum InputDistribution {
    /// Uniform on [0, 1).
    #[default]
    UniformUnit,
    /// Uniform on (−1, 1).
    UniformSym,
}

/// How r_f is obtained for each posit result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ErrorMode {
    /// The matching operation of an independent binary32 run of the kernel.
    #[default]
    Parallel,
    /// The same operation on the posit operands widened to binary32, as a trace
    /// checker would do it.
    PerOp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct KernelSpec {
    pub kind: KernelKind,
    /// Edge of the square input matrix or image.
    pub size: usize,
    pub seed: u64,
    pub distribution: InputDistribution,
}

impl KernelSpec {
    pub const DEFAULT_SIZE: usize = 32;
    pub const DEFAULT_SEED: u64 = 0x5EED;

    pub fn new(kind: KernelKind) -> Self {
        KernelSpec {
            kind,
            size: Self::DEFAULT_SIZE,
            seed: Self::DEFAULT_SEED,
            distribution: InputDistribution::UniformUnit,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let min = match self.kind {
            KernelKind::Gemm => 1,
            KernelKind::Conv3x3 => 3,
            KernelKind::AvgPool4x4 => 4,
        };
        if self.size < min {
            return Err(Error::InvalidKernel("size too small for this kernel"));
        }
        if self.size > 4096 {
            return Err(Error::InvalidKernel("size above 4096"));
        }
        Ok(())
    }

    pub fn input_len(&self) -> usize {
        let n = self.size * self.size;
        match self.kind {
            KernelKind::Gemm => 2 * n,
            KernelKind::Conv3x3 => n + 9,
            KernelKind::AvgPool4x4 => n,
        }
    }

    /// Input values in generation order: A then B (GEMM), image then filter (conv), image (pool).
    pub fn inputs(&self) -> Vec<f32> {
        let count = self.input_len();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut unit = move || (rng.next_u32() >> 8) as f32 * (1.0 / (1u32 << 24) as f32);
        (0..count)
            .map(|_| match self.distribution {
                InputDistribution::UniformUnit => unit(),
                InputDistribution::UniformSym => loop {
                    let v = 2.0 * unit() - 1.0;
                    if v != -1.0 {
                        break v;
                    }
                },
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpKind {
    Mul,
    Add,
    Div,
}

impl OpKind {
    pub const ALL: [OpKind; 3] = [OpKind::Mul, OpKind::Add, OpKind::Div];

    pub fn name(self) -> &'static str {
        match self {
            OpKind::Mul => "mul",
            OpKind::Add => "add",
            OpKind::Div => "div",
        }
    }
}

/// One arithmetic backend for the kernels. Every call is logged in order.
pub trait Engine {
    type Value: Copy;
    fn load(&mut self, v: f32) -> Self::Value;
    fn op(&mut self, kind: OpKind, a: Self::Value, b: Self::Value) -> Self::Value;
    fn constant(&mut self, v: f32) -> Self::Value {
        self.load(v)
    }
}

/// A logged operation: kind, operands and result as binary64.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoggedOp {
    pub kind: OpKind,
    pub a: f64,
    pub b: f64,
    pub result: f64,
}

/// Posit engine driving [`Fppu::exec`].
#[derive(Debug, Clone)]
pub struct PositEngine {
    fppu: Fppu,
    pub log: Vec<LoggedOp>,
    /// binary32 recomputation of each logged op from its posit operands.
    pub recomputed: Vec<f32>,
}

impl PositEngine {
    pub fn new(fppu: Fppu) -> Self {
        PositEngine { fppu, log: Vec::new(), recomputed: Vec::new() }
    }

    fn widen(&self, w: u32) -> f32 {
        f32::from_bits(golden::posit_to_float(self.fppu.config().truncating(w)))
    }
}

impl Engine for PositEngine {
    type Value = u32;

    fn load(&mut self, v: f32) -> u32 {
        self.fppu.exec(FppuOp::FcvtF2P, v.to_bits(), 0, None).expect("conversion")
    }

    fn op(&mut self, kind: OpKind, a: u32, b: u32) -> u32 {
        let op = match kind {
            OpKind::Mul => FppuOp::Pmul,
            OpKind::Add => FppuOp::Padd,
            OpKind::Div => FppuOp::Pdiv,
        };
        let r = self.fppu.exec(op, a, b, None).expect("two-operand op");
        let cfg = self.fppu.config();
        let value = |w| cfg.truncating(w).to_f64();
        self.log.push(LoggedOp { kind, a: value(a), b: value(b), result: value(r) });
        let (fa, fb) = (self.widen(a), self.widen(b));
        self.recomputed.push(f32_op(kind, fa, fb));
        r
    }
}

fn f32_op(kind: OpKind, a: f32, b: f32) -> f32 {
    match kind {
        OpKind::Mul => a * b,
        OpKind::Add => a + b,
        OpKind::Div => a / b,
    }
}

#[derive(Debug, Clone, Default)]
pub struct F32Engine {
    pub log: Vec<LoggedOp>,
}

impl Engine for F32Engine {
    type Value = f32;

    fn load(&mut self, v: f32) -> f32 {
        v
    }

    fn op(&mut self, kind: OpKind, a: f32, b: f32) -> f32 {
        let r = f32_op(kind, a, b);
        self.log.push(LoggedOp { kind, a: a.into(), b: b.into(), result: r.into() });
        r
    }
}

/// Execute the kernel on `engine`, returning the outputs row-major.
pub fn execute<E: Engine>(spec: &KernelSpec, inputs: &[f32], engine: &mut E) -> Vec<E::Value> {
    let n = spec.size;
    let vals: Vec<E::Value> = inputs.iter().map(|&v| engine.load(v)).collect();
    match spec.kind {
        KernelKind::Gemm => {
            let (a, b) = vals.split_at(n * n);
            let mut out = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    let mut acc = engine.op(OpKind::Mul, a[i * n], b[j]);
                    for k in 1..n {
                        let p = engine.op(OpKind::Mul, a[i * n + k], b[k * n + j]);
                        acc = engine.op(OpKind::Add, acc, p);
                    }
                    out.push(acc);
                }
            }
            out
        }
        KernelKind::Conv3x3 => {
            let (img, filter) = vals.split_at(n * n);
            let m = n - 2;
            let mut out = Vec::with_capacity(m * m);
            for i in 0..m {
                for j in 0..m {
                    let mut acc = engine.op(OpKind::Mul, img[i * n + j], filter[0]);
                    for (t, &w) in filter.iter().enumerate().skip(1) {
                        let (di, dj) = (t / 3, t % 3);
                        let p = engine.op(OpKind::Mul, img[(i + di) * n + j + dj], w);
                        acc = engine.op(OpKind::Add, acc, p);
                    }
                    out.push(acc);
                }
            }
            out
        }
        KernelKind::AvgPool4x4 => {
            let m = n / 4;
            let sixteen = engine.constant(16.0);
            let mut out = Vec::with_capacity(m * m);
            for i in 0..m {
                for j in 0..m {
                    let at = |di: usize, dj: usize| vals[(4 * i + di) * n + 4 * j + dj];
                    let mut acc = at(0, 0);
                    for t in 1..16 {
                        acc = engine.op(OpKind::Add, acc, at(t / 4, t % 4));
                    }
                    out.push(engine.op(OpKind::Div, acc, sixteen));
                }
            }
            out
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OpError {
    /// ē; zero when no pair was usable.
    pub mean: f64,
    pub samples: usize,
    /// Pairs skipped because r_f was zero or not finite.
    pub excluded: usize,
}

/// ē per operation kind; kinds the kernel never executes are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorReport {
    pub mul: Option<OpError>,
    pub add: Option<OpError>,
    pub div: Option<OpError>,
}

impl ErrorReport {
    pub fn get(&self, kind: OpKind) -> Option<&OpError> {
        match kind {
            OpKind::Mul => self.mul.as_ref(),
            OpKind::Add => self.add.as_ref(),
            OpKind::Div => self.div.as_ref(),
        }
    }

    fn slot(&mut self, kind: OpKind) -> &mut Option<OpError> {
        match kind {
            OpKind::Mul => &mut self.mul,
            OpKind::Add => &mut self.add,
            OpKind::Div => &mut self.div,
        }
    }

    /// Build from (kind, r_p, r_f) triples, summing in order.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (OpKind, f64, f64)>) -> Self {
        let mut report = ErrorReport::default();
        let mut sums = [0.0f64; 3];
        for (kind, rp, rf) in pairs {
            let e = report.slot(kind).get_or_insert_with(OpError::default);
            if rf == 0.0 || !rf.is_finite() {
                e.excluded += 1;
            } else {
                e.samples += 1;
                sums[kind as usize] += ((rp - rf) / rf).abs();
            }
        }
        for kind in OpKind::ALL {
            if let Some(e) = report.slot(kind) {
                if e.samples > 0 {
                    e.mean = sums[kind as usize] / e.samples as f64;
                }
            }
        }
        report
    }
}

/// Output of [`run_kernel`].
#[derive(Debug, Clone, PartialEq)]
pub struct KernelRun {
    pub posit: Vec<u32>,
    pub binary32: Vec<f32>,
    pub report: ErrorReport,
}

pub fn run_kernel(spec: &KernelSpec, fppu: &Fppu, mode: ErrorMode) -> Result<KernelRun> {
    spec.validate()?;
    run_kernel_on(spec, &spec.inputs(), fppu, mode)
}

/// [`run_kernel`] on caller-supplied inputs, laid out as [`KernelSpec::inputs`] does.
pub fn run_kernel_on(spec: &KernelSpec, inputs: &[f32], fppu: &Fppu, mode: ErrorMode) -> Result<KernelRun> {
    spec.validate()?;
    if inputs.len() != spec.input_len() {
        return Err(Error::InvalidKernel("input length does not match the kernel size"));
    }
    let mut p = PositEngine::new(*fppu);
    let posit = execute(spec, inputs, &mut p);
    let mut f = F32Engine::default();
    let binary32 = execute(spec, inputs, &mut f);
    debug_assert_eq!(p.log.len(), f.log.len());
    let report = match mode {
        ErrorMode::PerOp => {
            ErrorReport::from_pairs(p.log.iter().zip(&p.recomputed).map(|(l, &rf)| (l.kind, l.result, f64::from(rf))))
        }
        ErrorMode::Parallel => {
            ErrorReport::from_pairs(p.log.iter().zip(&f.log).map(|(l, r)| (l.kind, l.result, r.result)))
        }
    };
    Ok(KernelRun { posit, binary32, report })
}
