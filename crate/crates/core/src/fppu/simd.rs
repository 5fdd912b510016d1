//! Packed evaluation of 32/N independent lanes in one 32-bit word.

use super::{Fppu, FppuOp};
use crate::error::{Error, Result};

/// Lanes per 32-bit word, for N ∈ {8, 16}.
pub fn lanes(fppu: &Fppu) -> Result<u32> {
    match fppu.config().n_bits() {
        8 => Ok(4),
        16 => Ok(2),
        _ => Err(Error::Unsupported("SIMD packing needs N = 8 or N = 16")),
    }
}

fn map_lanes(fppu: &Fppu, mut f: impl FnMut(u32) -> Result<u32>) -> Result<u32> {
    let n = fppu.config().n_bits();
    let mask = fppu.config().mask();
    let mut out = 0;
    for lane in 0..lanes(fppu)? {
        out |= (f(lane * n)? & mask) << (lane * n);
    }
    Ok(out)
}

/// Apply a two-operand posit operation lane by lane; lane i uses bits [iN, (i+1)N).
pub fn simd_exec(fppu: &Fppu, op: FppuOp, a: u32, b: u32) -> Result<u32> {
    match op {
        FppuOp::Padd | FppuOp::Psub | FppuOp::Pmul | FppuOp::Pdiv => {}
        FppuOp::Pfmadd => return Err(Error::Unsupported("use simd_fma for fused multiply-add")),
        FppuOp::FcvtP2F | FppuOp::FcvtF2P => return Err(Error::Unsupported("conversions are not lane-packed")),
    }
    map_lanes(fppu, |shift| fppu.exec(op, a >> shift, b >> shift, None))
}

/// Lane-wise `a·b + c`.
pub fn simd_fma(fppu: &Fppu, a: u32, b: u32, c: u32) -> Result<u32> {
    map_lanes(fppu, |shift| fppu.exec(FppuOp::Pfmadd, a >> shift, b >> shift, Some(c >> shift)))
}
