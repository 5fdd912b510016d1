use core::fmt;

/// Errors raised by the arithmetic, datapath and encoding layers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// `n_bits`/`es_bits` outside the supported range.
    InvalidConfig { n_bits: u32, es_bits: u32 },
    /// Pattern has bits set above position `n_bits - 1`.
    PatternTooWide { word: u32, n_bits: u32 },
    /// Operands were built for different posit configurations.
    ConfigMismatch,
    /// Operation is only defined for Normal posits.
    NotNormal,
    /// Fixed-point reciprocal input outside `[0.5, 1]`.
    ReciprocalDomain,
    /// Numeric op code does not name an FPPU operation.
    UnknownOp(u8),
    /// Operation needs a third operand that was not supplied.
    MissingOperand,
    /// Operation is not available on this path (e.g. conversions in SIMD mode).
    Unsupported(&'static str),
    /// Pipeline latency knob outside the modelled range.
    InvalidLatency(usize),
    /// Register index outside `0..32`.
    RegisterOutOfRange(u8),
    /// `rs3` given to a non-fused instruction, or missing on PFMADD.
    Rs3Mismatch,
    /// Kernel parameters rejected before execution.
    InvalidKernel(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidConfig { n_bits, es_bits } => {
                write!(f, "unsupported posit configuration <{n_bits},{es_bits}>")
            }
            Error::PatternTooWide { word, n_bits } => {
                write!(f, "pattern {word:#x} does not fit in {n_bits} bits")
            }
            Error::ConfigMismatch => f.write_str("operands use different posit configurations"),
            Error::NotNormal => f.write_str("operation requires a Normal posit (not Zero or NaR)"),
            Error::ReciprocalDomain => f.write_str("reciprocal input outside [0.5, 1]"),
            Error::UnknownOp(code) => write!(f, "unknown FPPU op code {code}"),
            Error::MissingOperand => f.write_str("missing third operand"),
            Error::Unsupported(what) => write!(f, "unsupported: {what}"),
            Error::InvalidLatency(l) => write!(f, "pipeline latency {l} not supported (3 or 4)"),
            Error::RegisterOutOfRange(r) => write!(f, "register index {r} out of range"),
            Error::Rs3Mismatch => f.write_str("rs3 must be present exactly for PFMADD"),
            Error::InvalidKernel(why) => write!(f, "invalid kernel: {why}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
