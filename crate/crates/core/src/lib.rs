//! Posit⟨N,ES⟩ arithmetic and a software model of a pipelined Full Posit
//! Processing Unit (FPPU).
//!
//! * [`posit`]: bit layout, decoding, exact evaluation, FIR conversion and
//!   round-to-nearest-even encoding.
//! * [`golden`]: exact, correctly rounded reference arithmetic.
//! * [`fppu`]: the staged datapath, polynomial + Newton-Raphson division,
//!   the valid_in/valid_out pipeline and SIMD lane packing.
//! * [`isa`]: RISC-V custom-opcode encodings and the instruction trace checker.
//! * [`kernels`]: GEMM / 3×3 convolution / 4×4 average pooling error benchmarks.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]

extern crate alloc;

pub mod error;
pub mod exact;
pub mod fppu;
pub mod golden;
pub mod isa;
pub mod kernels;
pub mod posit;

pub use error::{Error, Result};
pub use exact::{ExactValue, ValueClass};
pub use fppu::{fppu_exec, Fppu, FppuOp};
pub use posit::{DecodedPosit, Fir, PositBits, PositClass, PositConfig, Rounding};
