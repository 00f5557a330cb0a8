//! CLI and built-in examples for the kernel-certification library:
//! reflected walks with canonical certificates, the dyadic transfer
//! operator and its eigenfunction residual check, seeded chains, the
//! kernel-spec file format, and machine-readable reports.

pub mod builtins;
pub mod cli;
pub mod conze;
pub mod format;
pub mod report;

pub use cli::cli_run;
