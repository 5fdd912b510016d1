//! Clocked model of the FPPU pipeline.
//!
//! A result issued on clock `t` with `valid_in` set appears with `valid_out`
//! on clock `t + latency`. One operation can be issued per clock.

use alloc::vec::Vec;

use super::{Computed, Conditioned, Fppu, FppuOp, Partial};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Issue {
    pub op: FppuOp,
    pub a: u32,
    pub b: u32,
    pub c: Option<u32>,
}

impl Issue {
    pub fn new(op: FppuOp, a: u32, b: u32) -> Self {
        Issue { op, a, b, c: None }
    }

    pub fn fma(a: u32, b: u32, c: u32) -> Self {
        Issue { op: FppuOp::Pfmadd, a, b, c: Some(c) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClockOut {
    pub valid_out: bool,
    pub result: u32,
}

#[derive(Debug, Clone, PartialEq)]
enum Stage {
    Conditioned(Conditioned),
    Partial(Partial),
    Computed(Computed),
    Done(u32),
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    fppu: Fppu,
    regs: Vec<Option<Stage>>,
}

impl Pipeline {
    pub const DEFAULT_LATENCY: usize = 3;

    /// Latency 3 (decode | compute | encode) or 4 (compute split in two).
    pub fn new(fppu: Fppu, latency: usize) -> Result<Self> {
        if !(3..=4).contains(&latency) {
            return Err(Error::InvalidLatency(latency));
        }
        Ok(Pipeline { fppu, regs: alloc::vec![None; latency] })
    }

    pub fn latency(&self) -> usize {
        self.regs.len()
    }

    pub fn fppu(&self) -> &Fppu {
        &self.fppu
    }

    /// Number of operations currently in flight.
    pub fn in_flight(&self) -> usize {
        self.regs.iter().filter(|r| r.is_some()).count()
    }

    /// Advance one clock edge. `issue` is sampled only when `valid_in` is set.
    /// Operand errors (such as a missing FMA addend) reject the issue and leave
    /// the pipeline unchanged.
    pub fn clock(&mut self, valid_in: bool, issue: Option<Issue>) -> Result<ClockOut> {
        let entering = match (valid_in, issue) {
            (false, _) => None,
            (true, None) => return Err(Error::MissingOperand),
            (true, Some(i)) => Some(Stage::Conditioned(self.fppu.condition(i.op, i.a, i.b, i.c)?)),
        };
        let last = self.regs.len() - 1;
        let out = match self.regs[last].take() {
            Some(Stage::Done(w)) => ClockOut { valid_out: true, result: w },
            Some(other) => unreachable!("last register holds {other:?}"),
            None => ClockOut::default(),
        };
        let four = self.regs.len() == 4;
        for i in (1..=last).rev() {
            self.regs[i] = self.regs[i - 1].take().map(|s| self.advance(s, four));
        }
        self.regs[0] = entering;
        Ok(out)
    }

    /// Run until the pipeline is empty, collecting the remaining results.
    pub fn drain(&mut self) -> Vec<u32> {
        let mut out = Vec::new();
        while self.in_flight() > 0 {
            let o = self.clock(false, None).expect("idle clock");
            if o.valid_out {
                out.push(o.result);
            }
        }
        out
    }

    fn advance(&self, s: Stage, four: bool) -> Stage {
        match s {
            Stage::Conditioned(c) => {
                let p = self.fppu.compute_front(c);
                if four {
                    Stage::Partial(p)
                } else {
                    Stage::Computed(self.fppu.compute_back(p))
                }
            }
            Stage::Partial(p) => Stage::Computed(self.fppu.compute_back(p)),
            Stage::Computed(c) => Stage::Done(self.fppu.finish(c)),
            Stage::Done(_) => unreachable!("finished result was not retired"),
        }
    }
}
