//! Command-line front end for the block simulator: run circuit files,
//! cross-check them against the tensor-product reference, and benchmark
//! GHZ scaling. The command implementations live here so integration tests
//! can drive them directly.

pub mod commands;
pub mod report;

pub use commands::{
    bench_ghz, simulate_circuit, simulate_file, sweep_circuit, verify_circuit, verify_file,
    verify_random, CliError, SimulateOptions, EXIT_FAILURE, EXIT_OK, EXIT_RESOURCE,
    VERIFY_TOLERANCE,
};
pub use report::{
    bench_rows_to_csv, BenchRow, OutputFormat, OutputMode, ResultRecord, RunReport, VerifyReport,
    VerifyRow,
};
