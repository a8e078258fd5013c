//! Implementations behind the CLI subcommands, reusable from tests.

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use blocksim_core::circuit::{ghz, random_circuit, Circuit, CircuitError, GateMix};
use blocksim_core::format::{parse_circuit, ParseError};
use blocksim_core::kernel::{run_circuit, KernelError, OpCounter};
use blocksim_core::state::{Backend, State, StateError};
use blocksim_core::system::SystemError;
use blocksim_oracle::{oracle_run_with_cap, OracleError};

use crate::report::{
    BenchRow, OutputFormat, OutputMode, RunReport, VerifyReport, VerifyRow,
};

/// Kernels must match the oracle to this tolerance for `verify` to pass.
pub const VERIFY_TOLERANCE: f64 = 1e-10;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_RESOURCE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Circuit(CircuitError),
    #[error("{0}")]
    Kernel(KernelError),
    #[error("{0}")]
    Oracle(OracleError),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl From<CircuitError> for CliError {
    fn from(e: CircuitError) -> Self {
        CliError::Circuit(e)
    }
}

impl From<KernelError> for CliError {
    fn from(e: KernelError) -> Self {
        CliError::Kernel(e)
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        CliError::Oracle(e)
    }
}

impl CliError {
    /// 1 for parse/validation problems, 2 for resource limits (allocation
    /// caps, index-space overflow, oracle capacity).
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(ParseError::Resource { .. }) => EXIT_RESOURCE,
            CliError::Parse(_) | CliError::Io { .. } => EXIT_FAILURE,
            CliError::Circuit(e) => match e {
                CircuitError::System(SystemError::IndexOverflow) => EXIT_RESOURCE,
                _ => EXIT_FAILURE,
            },
            CliError::Kernel(e) => match e {
                KernelError::State(StateError::AllocationTooLarge { .. }) => EXIT_RESOURCE,
                KernelError::State(StateError::System(SystemError::IndexOverflow)) => {
                    EXIT_RESOURCE
                }
                _ => EXIT_FAILURE,
            },
            CliError::Oracle(e) => match e {
                OracleError::SystemTooLarge { .. } => EXIT_RESOURCE,
                OracleError::State(StateError::AllocationTooLarge { .. }) => EXIT_RESOURCE,
                _ => EXIT_FAILURE,
            },
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimulateOptions {
    pub backend: Backend,
    pub threshold: f64,
    pub output: OutputMode,
    pub format: OutputFormat,
}

/// Parses a circuit file and runs it, timing the kernel loop only.
pub fn simulate_file(path: &Path, opts: SimulateOptions) -> Result<RunReport, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut circuit = parse_circuit(&text)?;
    if circuit.name() == "circuit" {
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            circuit.set_name(stem);
        }
    }
    simulate_circuit(&circuit, opts)
}

pub fn simulate_circuit(circuit: &Circuit, opts: SimulateOptions) -> Result<RunReport, CliError> {
    let mut counter = OpCounter::new();
    let started = Instant::now();
    let state = run_circuit(circuit, opts.backend, opts.threshold, &mut counter)?;
    let wall_time_ns = started.elapsed().as_nanos() as u64;
    Ok(RunReport::from_state(
        circuit.name(),
        &state,
        opts.backend,
        &counter,
        wall_time_ns,
        opts.output,
    ))
}

/// Circuit `k` of the seeded verification sweep: up to 4 qudits with
/// dimensions from 2 to 5 and depth up to 20, all gate kinds mixed
/// uniformly. Deterministic in `(seed, k)`.
pub fn sweep_circuit(seed: u64, k: u64) -> Result<Circuit, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let n = rng.gen_range(1..=4);
    let dims: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=5)).collect();
    let depth = rng.gen_range(1..=20);
    let mut circuit = random_circuit(rng.gen(), &dims, depth, GateMix::default())?;
    circuit.set_name(format!("sweep_{seed}_{k}"));
    Ok(circuit)
}

/// Runs both kernel backends and the oracle on one circuit and compares.
pub fn verify_circuit(circuit: &Circuit, cap: u64) -> Result<VerifyRow, CliError> {
    let reference = State::Dense(oracle_run_with_cap(
        circuit,
        circuit.initial_state(),
        cap,
    )?);
    let mut counter = OpCounter::new();
    let threshold = blocksim_core::state::DEFAULT_SPARSE_THRESHOLD;
    let dense = run_circuit(circuit, Backend::Dense, threshold, &mut counter)?;
    let sparse = run_circuit(circuit, Backend::Sparse, threshold, &mut counter)?;
    let dense_diff = dense.max_abs_diff(&reference).expect("same system");
    let sparse_diff = sparse.max_abs_diff(&reference).expect("same system");
    Ok(VerifyRow {
        name: circuit.name().to_string(),
        dims: circuit.system().dims().to_vec(),
        dense_diff,
        sparse_diff,
        pass: dense_diff < VERIFY_TOLERANCE && sparse_diff < VERIFY_TOLERANCE,
    })
}

pub fn verify_file(path: &Path, cap: u64) -> Result<VerifyReport, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut circuit = parse_circuit(&text)?;
    if circuit.name() == "circuit" {
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            circuit.set_name(stem);
        }
    }
    Ok(VerifyReport {
        tolerance: VERIFY_TOLERANCE,
        rows: vec![verify_circuit(&circuit, cap)?],
    })
}

pub fn verify_random(seed: u64, count: u64, cap: u64) -> Result<VerifyReport, CliError> {
    let mut rows = Vec::with_capacity(count as usize);
    for k in 0..count {
        let circuit = sweep_circuit(seed, k)?;
        rows.push(verify_circuit(&circuit, cap)?);
    }
    Ok(VerifyReport {
        tolerance: VERIFY_TOLERANCE,
        rows,
    })
}

/// GHZ scaling rows for `n` in `n_min..=n_max`: median wall time over
/// `repeat` runs, write counter and nonzero count from a final run. A size
/// that overflows the 64-bit index space becomes an error row instead of
/// aborting the sweep.
pub fn bench_ghz(
    d: usize,
    n_min: usize,
    n_max: usize,
    repeat: usize,
    backend: Backend,
) -> Result<Vec<BenchRow>, CliError> {
    let threshold = blocksim_core::state::DEFAULT_SPARSE_THRESHOLD;
    let mut rows = Vec::new();
    for n in n_min..=n_max {
        let circuit = match ghz(d, n) {
            Ok(c) => c,
            Err(CircuitError::System(SystemError::IndexOverflow)) => {
                rows.push(BenchRow {
                    d,
                    n,
                    total_dim: None,
                    median_wall_time_ns: None,
                    amp_writes: None,
                    nonzero_count: None,
                    status: "IndexOverflow".into(),
                });
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let mut times = Vec::with_capacity(repeat.max(1));
        let mut last: Option<(OpCounter, State)> = None;
        for _ in 0..repeat.max(1) {
            let mut counter = OpCounter::new();
            let started = Instant::now();
            let state = run_circuit(&circuit, backend, threshold, &mut counter)?;
            times.push(started.elapsed().as_nanos() as u64);
            last = Some((counter, state));
        }
        times.sort_unstable();
        let (counter, state) = last.expect("at least one run");
        rows.push(BenchRow {
            d,
            n,
            total_dim: Some(circuit.system().total_dim()),
            median_wall_time_ns: Some(times[times.len() / 2]),
            amp_writes: Some(counter.amp_writes),
            nonzero_count: Some(state.nonzero_count()),
            status: "ok".into(),
        });
    }
    Ok(rows)
}
