//! Verification sweeps, report formats, trace files and the `fppu` command-line tool.

pub mod eval;
pub mod optk;
pub mod report;
pub mod sweep;
pub mod tracefile;
