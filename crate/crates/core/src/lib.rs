//! Block-wise statevector simulation for mixed-dimensional qudit circuits.
//!
//! A register mixes qudits of any dimensions (qubits, qutrits, ququads, ...)
//! and gates are applied to the statevector directly, without ever building
//! an operator larger than the gate itself: diagonal gates scale blocks,
//! permutation gates relocate them, and general unitaries combine scaled
//! matrix columns within each equivalence class of basis states. Both a
//! dense array backend and a sparse associative backend implement the same
//! kernel contract.
//!
//! ```
//! use blocksim_core::circuit::ghz;
//! use blocksim_core::kernel::{run_circuit, OpCounter};
//! use blocksim_core::state::{Backend, DEFAULT_SPARSE_THRESHOLD};
//!
//! let circuit = ghz(3, 4).unwrap();
//! let mut counter = OpCounter::new();
//! let state = run_circuit(&circuit, Backend::Sparse, DEFAULT_SPARSE_THRESHOLD, &mut counter)
//!     .unwrap();
//! assert_eq!(state.nonzero_count(), 3);
//! ```

pub mod circuit;
pub mod format;
pub mod gates;
pub mod kernel;
pub mod state;
pub mod system;

pub use circuit::{Circuit, GateOp};
pub use gates::{Gate, GateKind};
pub use kernel::{apply_op, run_circuit, OpCounter};
pub use state::{Backend, DenseState, SparseState, State};
pub use system::QuditSystem;
