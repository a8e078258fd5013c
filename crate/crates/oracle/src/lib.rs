//! Brute-force reference simulator for validating the block kernels.
//!
//! This crate does on purpose what the production engine is designed to
//! avoid: it materializes the full `D x D` operator of every gate op via
//! identity-padded tensor products and evolves the state by plain
//! matrix-vector multiplication. Controlled ops use the closed form
//! `M = I_D + B_{n-1} (x) ... (x) B_0` with `B_t = |v><v|` at controls,
//! `U - I` at the target and `I` elsewhere, so no block or class logic is
//! shared with the kernels under test. Capacity is capped (default 4096)
//! because the whole point is small, exhaustive cross-checking.

use num_complex::Complex64;
use thiserror::Error;

use blocksim_core::circuit::{Circuit, GateOp};
use blocksim_core::state::{DenseState, StateError};
use blocksim_core::system::QuditSystem;

/// Largest total dimension the oracle will materialize by default.
pub const DEFAULT_ORACLE_CAP: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("total dimension {total_dim} exceeds the oracle cap of {cap}")]
    SystemTooLarge { total_dim: u64, cap: u64 },
    #[error(transparent)]
    State(#[from] StateError),
}

/// The full `D x D` matrix of one gate op, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FullOperator {
    sys: QuditSystem,
    matrix: Vec<Complex64>,
}

impl FullOperator {
    pub fn system(&self) -> &QuditSystem {
        &self.sys
    }

    pub fn dim(&self) -> usize {
        self.sys.total_dim() as usize
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[row * self.dim() + col]
    }

    pub fn matrix(&self) -> &[Complex64] {
        &self.matrix
    }

    /// `M * state`, as a fresh dense state.
    pub fn apply(&self, state: &DenseState) -> Result<DenseState, OracleError> {
        let amps = matvec(&self.matrix, state.amplitudes());
        Ok(DenseState::from_amplitudes(self.sys.clone(), amps)?)
    }

    /// `self * other`, composing operators as matrices.
    pub fn compose(&self, other: &FullOperator) -> FullOperator {
        let d = self.dim();
        let mut matrix = vec![Complex64::new(0.0, 0.0); d * d];
        for r in 0..d {
            for k in 0..d {
                let a = self.matrix[r * d + k];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for c in 0..d {
                    matrix[r * d + c] += a * other.matrix[k * d + c];
                }
            }
        }
        FullOperator {
            sys: self.sys.clone(),
            matrix,
        }
    }
}

/// Builds the exact `D x D` matrix of a gate op with the default cap.
pub fn full_operator(sys: &QuditSystem, op: &GateOp) -> Result<FullOperator, OracleError> {
    full_operator_with_cap(sys, op, DEFAULT_ORACLE_CAP)
}

pub fn full_operator_with_cap(
    sys: &QuditSystem,
    op: &GateOp,
    cap: u64,
) -> Result<FullOperator, OracleError> {
    let total_dim = sys.total_dim();
    if total_dim > cap {
        return Err(OracleError::SystemTooLarge { total_dim, cap });
    }
    let n = sys.num_qudits();
    let gate_matrix = op.gate.to_matrix();
    let d_target = op.gate.dim();

    // Tensor factors, most significant qudit first so that qudit 0 is the
    // fastest-varying index of the product.
    let factor = |t: usize| -> Vec<Complex64> {
        let d = sys.dims()[t];
        if t == op.target {
            if op.controls.is_empty() {
                gate_matrix.clone()
            } else {
                subtract_identity(&gate_matrix, d_target)
            }
        } else if let Some(&(_, v)) = op.controls.iter().find(|&&(q, _)| q == t) {
            projector(d, v)
        } else {
            identity(d)
        }
    };

    let mut acc = factor(n - 1);
    let mut acc_dim = sys.dims()[n - 1];
    for t in (0..n - 1).rev() {
        let d = sys.dims()[t];
        acc = kron(&acc, acc_dim, &factor(t), d);
        acc_dim *= d;
    }

    let matrix = if op.controls.is_empty() {
        acc
    } else {
        let mut m = identity(total_dim as usize);
        for (slot, v) in m.iter_mut().zip(acc) {
            *slot += v;
        }
        m
    };
    Ok(FullOperator {
        sys: sys.clone(),
        matrix,
    })
}

/// Runs a circuit from the given basis state by sequential full-matrix
/// multiplications, with the default cap.
pub fn oracle_run(circuit: &Circuit, initial: u64) -> Result<DenseState, OracleError> {
    oracle_run_with_cap(circuit, initial, DEFAULT_ORACLE_CAP)
}

pub fn oracle_run_with_cap(
    circuit: &Circuit,
    initial: u64,
    cap: u64,
) -> Result<DenseState, OracleError> {
    let sys = circuit.system();
    let total_dim = sys.total_dim();
    if total_dim > cap {
        return Err(OracleError::SystemTooLarge { total_dim, cap });
    }
    let mut state = DenseState::basis_with_cap(sys.clone(), initial, cap)?;
    for op in circuit.ops() {
        let operator = full_operator_with_cap(sys, op, cap)?;
        state = operator.apply(&state)?;
    }
    Ok(state)
}

fn identity(d: usize) -> Vec<Complex64> {
    let mut m = vec![Complex64::new(0.0, 0.0); d * d];
    for r in 0..d {
        m[r * d + r] = Complex64::new(1.0, 0.0);
    }
    m
}

/// `|v><v|` on a d-level qudit.
fn projector(d: usize, v: usize) -> Vec<Complex64> {
    let mut m = vec![Complex64::new(0.0, 0.0); d * d];
    m[v * d + v] = Complex64::new(1.0, 0.0);
    m
}

fn subtract_identity(matrix: &[Complex64], d: usize) -> Vec<Complex64> {
    let mut m = matrix.to_vec();
    for r in 0..d {
        m[r * d + r] -= Complex64::new(1.0, 0.0);
    }
    m
}

/// Row-major Kronecker product; `b` indexes faster than `a`.
fn kron(a: &[Complex64], a_dim: usize, b: &[Complex64], b_dim: usize) -> Vec<Complex64> {
    let dim = a_dim * b_dim;
    let mut out = vec![Complex64::new(0.0, 0.0); dim * dim];
    for ia in 0..a_dim {
        for ja in 0..a_dim {
            let av = a[ia * a_dim + ja];
            if av.norm_sqr() == 0.0 {
                continue;
            }
            for ib in 0..b_dim {
                for jb in 0..b_dim {
                    out[(ia * b_dim + ib) * dim + (ja * b_dim + jb)] = av * b[ib * b_dim + jb];
                }
            }
        }
    }
    out
}

fn matvec(matrix: &[Complex64], x: &[Complex64]) -> Vec<Complex64> {
    let d = x.len();
    let mut y = vec![Complex64::new(0.0, 0.0); d];
    for (r, slot) in y.iter_mut().enumerate() {
        let row = &matrix[r * d..(r + 1) * d];
        *slot = row.iter().zip(x).map(|(m, v)| m * v).sum();
    }
    y
}
