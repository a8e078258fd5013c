//! The block-simulation engine.
//!
//! Gates are applied to a statevector in place by block arithmetic; nothing
//! larger than a `d x d` gate matrix is ever materialized. For a target
//! qudit with block size `b` and dimension `d`, the `D` basis states split
//! into groups of `d` consecutive blocks of `b` states each, and every
//! equivalence class (one state per block inside a group) is mixed
//! independently:
//!
//! * phase gates scale each block by one diagonal entry,
//! * permutation gates relocate whole blocks within their group,
//! * general gates replace each class vector by a combination of scaled
//!   gate columns,
//! * controlled gates do the same after filtering classes on their control
//!   digits, brute force over indices.
//!
//! All kernels keep only O(d) scratch per class, reusing one buffer across
//! classes.

use std::collections::HashMap;

use num_complex::Complex64;
use thiserror::Error;

use crate::circuit::{Circuit, GateOp};
use crate::gates::{check_unitary, Gate, GateKind, UNITARY_TOL};
use crate::state::{Backend, DenseState, SparseState, State, StateError};
use crate::system::{QuditSystem, SystemError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("qudit index {qudit} out of range for a register of {count} qudits")]
    QuditOutOfRange { qudit: usize, count: usize },
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("matrix shape mismatch: expected {expected} entries, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("matrix is not unitary: max |U^dag U - I| = {deviation:.3e}")]
    NotUnitary { deviation: f64 },
    #[error("permutation map is not a bijection on 0..{dim}")]
    NotBijection { dim: usize },
    #[error("control qudit {qudit} collides with the target")]
    ControlTargetOverlap { qudit: usize },
    #[error("control qudit {qudit} listed more than once")]
    DuplicateControl { qudit: usize },
    #[error("control value {value} out of range for qudit {qudit} of dimension {dim}")]
    ValueOutOfRange {
        qudit: usize,
        value: usize,
        dim: usize,
    },
    #[error(transparent)]
    State(#[from] StateError),
}

impl From<SystemError> for KernelError {
    fn from(e: SystemError) -> Self {
        match e {
            SystemError::QuditOutOfRange { qudit, count } => {
                KernelError::QuditOutOfRange { qudit, count }
            }
            other => KernelError::State(StateError::System(other)),
        }
    }
}

/// Instrumentation for the amplitude traffic of kernel operations.
///
/// `amp_reads` counts amplitude values fetched from the state container;
/// `amp_writes` counts mutation operations applied to it (stores, in-place
/// scalings, and removals of sparse entries — the clear pass of a sparse
/// class rewrite counts one write per class slot). Index arithmetic, such
/// as the brute-force control filter scanning keys, is never counted.
/// `peak_scratch` records the largest per-class scratch buffer any kernel
/// allocated; it stays bounded by the largest qudit dimension.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounter {
    pub amp_reads: u64,
    pub amp_writes: u64,
    pub peak_scratch: usize,
}

impl OpCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reset(&mut self) {
        *self = Self::default();
    }

    fn note_scratch(&mut self, len: usize) {
        self.peak_scratch = self.peak_scratch.max(len);
    }
}

/// Address of one equivalence class for a target qudit: the `rep`-th block
/// group combined with the `offset`-th state inside each block. Member `j`
/// (the basis state whose target digit is `j`) sits at
/// `rep * (d * b) + j * b + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassAddress {
    pub rep: u64,
    pub offset: u64,
    block: u64,
    group: u64,
}

impl ClassAddress {
    pub fn new(sys: &QuditSystem, target: usize, rep: u64, offset: u64) -> Result<Self, KernelError> {
        sys.check_qudit(target)?;
        let block = sys.block_sizes()[target];
        let d = sys.dims()[target] as u64;
        Ok(Self {
            rep,
            offset,
            block,
            group: block * d,
        })
    }

    /// Basis index of the class member whose target digit is `j`.
    pub fn member(&self, j: usize) -> u64 {
        self.rep * self.group + j as u64 * self.block + self.offset
    }
}

/// Multiplies every amplitude by the diagonal entry selected by its target
/// digit. Dense states scale whole blocks; sparse states scale each stored
/// entry in place. No amplitude moves and no entry appears or disappears.
pub fn apply_phase(
    state: &mut State,
    target: usize,
    diag: &[Complex64],
    counter: &mut OpCounter,
) -> Result<(), KernelError> {
    let sys = state.system();
    sys.check_qudit(target)?;
    let d = sys.dims()[target];
    if diag.len() != d {
        return Err(KernelError::LengthMismatch {
            expected: d,
            got: diag.len(),
        });
    }
    match state {
        State::Dense(s) => phase_dense(s, target, diag, counter),
        State::Sparse(s) => phase_sparse(s, target, diag, counter),
    }
    Ok(())
}

fn phase_dense(s: &mut DenseState, target: usize, diag: &[Complex64], counter: &mut OpCounter) {
    let b = s.system().block_sizes()[target] as usize;
    let d = diag.len();
    let group = b * d;
    let total = s.amplitudes().len();
    let amps = s.amplitudes_mut();
    let mut base = 0;
    while base < total {
        for (k, &scale) in diag.iter().enumerate() {
            let start = base + k * b;
            for a in &mut amps[start..start + b] {
                *a *= scale;
            }
        }
        base += group;
    }
    counter.amp_reads += total as u64;
    counter.amp_writes += total as u64;
}

fn phase_sparse(s: &mut SparseState, target: usize, diag: &[Complex64], counter: &mut OpCounter) {
    let b = s.system().block_sizes()[target];
    let d = diag.len() as u64;
    let n = s.len() as u64;
    for (&key, amp) in s.entries_map_mut().iter_mut() {
        let digit = ((key / b) % d) as usize;
        *amp *= diag[digit];
    }
    counter.amp_reads += n;
    counter.amp_writes += n;
}

/// Moves the amplitude at every index `i` to the index whose target digit is
/// `map[digit]`. Dense states rotate blocks within each group (realized one
/// class at a time with O(d) scratch); sparse states rewrite every stored
/// key. Pure relocation: no arithmetic, norm unchanged exactly.
pub fn apply_permutation(
    state: &mut State,
    target: usize,
    map: &[usize],
    counter: &mut OpCounter,
) -> Result<(), KernelError> {
    let sys = state.system();
    sys.check_qudit(target)?;
    let d = sys.dims()[target];
    check_bijection(map, d)?;
    match state {
        State::Dense(s) => permutation_dense(s, target, map, counter),
        State::Sparse(s) => permutation_sparse(s, target, map, counter),
    }
    Ok(())
}

fn check_bijection(map: &[usize], d: usize) -> Result<(), KernelError> {
    if map.len() != d {
        return Err(KernelError::NotBijection { dim: d });
    }
    let mut seen = vec![false; d];
    for &to in map {
        if to >= d || seen[to] {
            return Err(KernelError::NotBijection { dim: d });
        }
        seen[to] = true;
    }
    Ok(())
}

fn permutation_dense(s: &mut DenseState, target: usize, map: &[usize], counter: &mut OpCounter) {
    let b = s.system().block_sizes()[target] as usize;
    let d = map.len();
    let group = b * d;
    let total = s.amplitudes().len();
    let amps = s.amplitudes_mut();
    let mut scratch = vec![Complex64::new(0.0, 0.0); d];
    counter.note_scratch(d);
    let mut base = 0;
    while base < total {
        for offset in 0..b {
            let class = base + offset;
            for (j, &to) in map.iter().enumerate() {
                scratch[to] = amps[class + j * b];
            }
            for (k, &v) in scratch.iter().enumerate() {
                amps[class + k * b] = v;
            }
        }
        base += group;
    }
    counter.amp_reads += total as u64;
    counter.amp_writes += total as u64;
}

fn permutation_sparse(s: &mut SparseState, target: usize, map: &[usize], counter: &mut OpCounter) {
    let b = s.system().block_sizes()[target];
    let d = map.len() as u64;
    let n = s.len() as u64;
    let old = std::mem::take(s.entries_map_mut());
    let mut moved = HashMap::with_capacity(old.len());
    for (key, amp) in old {
        let digit = ((key / b) % d) as usize;
        let to = map[digit];
        let new_key = if to >= digit {
            key + (to - digit) as u64 * b
        } else {
            key - (digit - to) as u64 * b
        };
        moved.insert(new_key, amp);
    }
    s.replace_entries(moved);
    counter.amp_reads += n;
    counter.amp_writes += n;
}

/// Replaces every class vector `x` by `y = sum_j x_j * U[:, j]`: the columns
/// selected by the nonzero members, scaled and summed. Dense states visit
/// all `D / d` classes; sparse states group stored entries by class, clear
/// each touched class, and store back only results at or above the prune
/// threshold. The matrix must be unitary and is taken column-major.
pub fn apply_general(
    state: &mut State,
    target: usize,
    col_major: &[Complex64],
    counter: &mut OpCounter,
) -> Result<(), KernelError> {
    let sys = state.system();
    sys.check_qudit(target)?;
    let d = sys.dims()[target];
    if col_major.len() != d * d {
        return Err(KernelError::ShapeMismatch {
            expected: d * d,
            got: col_major.len(),
        });
    }
    // Unitarity of U and of its transpose coincide, so the column-major
    // buffer can be checked directly.
    let deviation = check_unitary(col_major, d).expect("length checked above");
    if deviation > UNITARY_TOL {
        return Err(KernelError::NotUnitary { deviation });
    }
    match state {
        State::Dense(s) => general_dense(s, target, col_major, counter),
        State::Sparse(s) => general_sparse(s, target, col_major, counter),
    }
    Ok(())
}

fn general_dense(
    s: &mut DenseState,
    target: usize,
    col_major: &[Complex64],
    counter: &mut OpCounter,
) {
    let b = s.system().block_sizes()[target] as usize;
    let d = s.system().dims()[target];
    let group = b * d;
    let total = s.amplitudes().len();
    let amps = s.amplitudes_mut();
    let mut x = vec![Complex64::new(0.0, 0.0); d];
    let mut y = vec![Complex64::new(0.0, 0.0); d];
    counter.note_scratch(d);
    let mut base = 0;
    while base < total {
        for offset in 0..b {
            let class = base + offset;
            for (j, slot) in x.iter_mut().enumerate() {
                *slot = amps[class + j * b];
            }
            y.fill(Complex64::new(0.0, 0.0));
            for (j, &xj) in x.iter().enumerate() {
                if xj.norm_sqr() > 0.0 {
                    let col = &col_major[j * d..(j + 1) * d];
                    for (k, &ukj) in col.iter().enumerate() {
                        y[k] += xj * ukj;
                    }
                }
            }
            for (k, &v) in y.iter().enumerate() {
                amps[class + k * b] = v;
            }
        }
        base += group;
    }
    counter.amp_reads += total as u64;
    counter.amp_writes += total as u64;
}

fn general_sparse(
    s: &mut SparseState,
    target: usize,
    col_major: &[Complex64],
    counter: &mut OpCounter,
) {
    let b = s.system().block_sizes()[target];
    let d = s.system().dims()[target];
    let threshold = s.threshold();

    // Group stored entries by the index of their class's j = 0 member.
    let mut classes: HashMap<u64, Vec<(usize, Complex64)>> = HashMap::new();
    for (key, amp) in s.entries() {
        let digit = ((key / b) % d as u64) as usize;
        classes
            .entry(key - digit as u64 * b)
            .or_default()
            .push((digit, amp));
        counter.amp_reads += 1;
    }

    let mut y = vec![Complex64::new(0.0, 0.0); d];
    counter.note_scratch(d);
    let entries = s.entries_map_mut();
    for (class_key, mut members) in classes {
        // Accumulate columns in digit order so results do not depend on the
        // map's iteration order.
        members.sort_unstable_by_key(|&(j, _)| j);
        y.fill(Complex64::new(0.0, 0.0));
        for &(j, xj) in &members {
            let col = &col_major[j * d..(j + 1) * d];
            for (k, &ukj) in col.iter().enumerate() {
                y[k] += xj * ukj;
            }
        }
        // Clear the class, then store back everything that survives the
        // threshold; members that fell below it stay removed.
        for k in 0..d {
            entries.remove(&(class_key + k as u64 * b));
            counter.amp_writes += 1;
        }
        for (k, &v) in y.iter().enumerate() {
            if v.norm() >= threshold {
                entries.insert(class_key + k as u64 * b, v);
                counter.amp_writes += 1;
            }
        }
    }
}

/// Applies `gate` only to classes whose members satisfy every control
/// condition `(i / b_k) % d_k = v_k`. Filtering is brute force: dense
/// states test the control digits of each class representative, sparse
/// states test every stored key and group the survivors into a partial
/// statevector of classes. Controls never overlap the target, so a class
/// either matches entirely or not at all; non-matching amplitudes are
/// untouched. An empty control list degenerates to the uncontrolled kernel.
pub fn apply_controlled(
    state: &mut State,
    controls: &[(usize, usize)],
    target: usize,
    gate: &Gate,
    counter: &mut OpCounter,
) -> Result<(), KernelError> {
    let sys = state.system();
    sys.check_qudit(target)?;
    let d = sys.dims()[target];
    if gate.dim() != d {
        return Err(KernelError::LengthMismatch {
            expected: d,
            got: gate.dim(),
        });
    }
    let mut seen = Vec::with_capacity(controls.len());
    for &(qudit, value) in controls {
        sys.check_qudit(qudit)?;
        if qudit == target {
            return Err(KernelError::ControlTargetOverlap { qudit });
        }
        if seen.contains(&qudit) {
            return Err(KernelError::DuplicateControl { qudit });
        }
        seen.push(qudit);
        let dim = sys.dims()[qudit];
        if value >= dim {
            return Err(KernelError::ValueOutOfRange { qudit, value, dim });
        }
    }
    if controls.is_empty() {
        return apply_gate_uncontrolled(state, target, gate, counter);
    }

    // (block size, dimension, value) per control, for digit tests on raw
    // indices.
    let tests: Vec<(u64, u64, u64)> = controls
        .iter()
        .map(|&(q, v)| (sys.block_sizes()[q], sys.dims()[q] as u64, v as u64))
        .collect();

    match state {
        State::Dense(s) => controlled_dense(s, &tests, target, gate, counter),
        State::Sparse(s) => controlled_sparse(s, &tests, target, gate, counter),
    }
    Ok(())
}

fn apply_gate_uncontrolled(
    state: &mut State,
    target: usize,
    gate: &Gate,
    counter: &mut OpCounter,
) -> Result<(), KernelError> {
    match gate.kind() {
        GateKind::Phase { diag } => apply_phase(state, target, diag, counter),
        GateKind::Permutation { map } => apply_permutation(state, target, map, counter),
        GateKind::General { col_major } => apply_general(state, target, col_major, counter),
    }
}

fn controls_match(index: u64, tests: &[(u64, u64, u64)]) -> bool {
    tests.iter().all(|&(b, d, v)| (index / b) % d == v)
}

fn controlled_dense(
    s: &mut DenseState,
    tests: &[(u64, u64, u64)],
    target: usize,
    gate: &Gate,
    counter: &mut OpCounter,
) {
    let sys = s.system().clone();
    let b = sys.block_sizes()[target] as usize;
    let d = sys.dims()[target];
    let group = b * d;
    let total = s.amplitudes().len();
    let amps = s.amplitudes_mut();
    let mut x = vec![Complex64::new(0.0, 0.0); d];
    let mut y = vec![Complex64::new(0.0, 0.0); d];
    counter.note_scratch(d);

    let mut base = 0;
    while base < total {
        for offset in 0..b {
            let class = base + offset;
            // Control digits are constant across a class; testing the j = 0
            // representative decides for all members.
            if !controls_match(class as u64, tests) {
                continue;
            }
            match gate.kind() {
                GateKind::Phase { diag } => {
                    for (j, &scale) in diag.iter().enumerate() {
                        amps[class + j * b] *= scale;
                    }
                }
                GateKind::Permutation { map } => {
                    for (j, &to) in map.iter().enumerate() {
                        y[to] = amps[class + j * b];
                    }
                    for (k, &v) in y.iter().enumerate() {
                        amps[class + k * b] = v;
                    }
                }
                GateKind::General { col_major } => {
                    for (j, slot) in x.iter_mut().enumerate() {
                        *slot = amps[class + j * b];
                    }
                    y.fill(Complex64::new(0.0, 0.0));
                    for (j, &xj) in x.iter().enumerate() {
                        if xj.norm_sqr() > 0.0 {
                            let col = &col_major[j * d..(j + 1) * d];
                            for (k, &ukj) in col.iter().enumerate() {
                                y[k] += xj * ukj;
                            }
                        }
                    }
                    for (k, &v) in y.iter().enumerate() {
                        amps[class + k * b] = v;
                    }
                }
            }
            counter.amp_reads += d as u64;
            counter.amp_writes += d as u64;
        }
        base += group;
    }
}

fn controlled_sparse(
    s: &mut SparseState,
    tests: &[(u64, u64, u64)],
    target: usize,
    gate: &Gate,
    counter: &mut OpCounter,
) {
    let b = s.system().block_sizes()[target];
    let d = s.system().dims()[target];
    let threshold = s.threshold();

    // Partial statevector: the stored entries that satisfy every control
    // condition, grouped into classes.
    let mut survivors: HashMap<u64, Vec<(usize, Complex64)>> = HashMap::new();
    for (key, amp) in s.entries() {
        if !controls_match(key, tests) {
            continue;
        }
        let digit = ((key / b) % d as u64) as usize;
        survivors
            .entry(key - digit as u64 * b)
            .or_default()
            .push((digit, amp));
        counter.amp_reads += 1;
    }

    let mut y = vec![Complex64::new(0.0, 0.0); d];
    let mut occupied = vec![false; d];
    counter.note_scratch(d);
    let entries = s.entries_map_mut();
    for (class_key, mut members) in survivors {
        members.sort_unstable_by_key(|&(j, _)| j);
        y.fill(Complex64::new(0.0, 0.0));
        occupied.fill(false);
        match gate.kind() {
            GateKind::Phase { diag } => {
                for &(j, xj) in &members {
                    y[j] = xj * diag[j];
                    occupied[j] = true;
                }
            }
            GateKind::Permutation { map } => {
                for &(j, xj) in &members {
                    y[map[j]] = xj;
                    occupied[map[j]] = true;
                }
            }
            GateKind::General { col_major } => {
                for &(j, xj) in &members {
                    let col = &col_major[j * d..(j + 1) * d];
                    for (k, &ukj) in col.iter().enumerate() {
                        y[k] += xj * ukj;
                    }
                }
                // Superpositions prune at the threshold; relocations and
                // rescalings above keep their exact support.
                for (k, flag) in occupied.iter_mut().enumerate() {
                    *flag = y[k].norm() >= threshold;
                }
            }
        }
        // One store-or-remove per class slot.
        for k in 0..d {
            let idx = class_key + k as u64 * b;
            if occupied[k] {
                entries.insert(idx, y[k]);
            } else {
                entries.remove(&idx);
            }
            counter.amp_writes += 1;
        }
    }
}

/// Dispatches a [`GateOp`] to the kernel selected by its gate kind and
/// control list, after checking the op against the state's register.
pub fn apply_op(state: &mut State, op: &GateOp, counter: &mut OpCounter) -> Result<(), KernelError> {
    let sys = state.system();
    sys.check_qudit(op.target)?;
    let d = sys.dims()[op.target];
    if op.gate.dim() != d {
        return Err(KernelError::LengthMismatch {
            expected: d,
            got: op.gate.dim(),
        });
    }
    if op.controls.is_empty() {
        apply_gate_uncontrolled(state, op.target, &op.gate, counter)
    } else {
        apply_controlled(state, &op.controls, op.target, &op.gate, counter)
    }
}

/// Runs a circuit from its initial basis state on the chosen backend.
/// `threshold` is the sparse prune threshold; dense runs ignore it.
pub fn run_circuit(
    circuit: &Circuit,
    backend: Backend,
    threshold: f64,
    counter: &mut OpCounter,
) -> Result<State, KernelError> {
    let mut state = match backend {
        Backend::Dense => State::Dense(DenseState::basis(
            circuit.system().clone(),
            circuit.initial_state(),
        )?),
        Backend::Sparse => State::Sparse(SparseState::basis_with_threshold(
            circuit.system().clone(),
            circuit.initial_state(),
            threshold,
        )?),
    };
    for op in circuit.ops() {
        apply_op(&mut state, op, counter)?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{example_2x3, ghz};
    use crate::state::DEFAULT_SPARSE_THRESHOLD;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn both_backends(sys: &QuditSystem, i: u64) -> Vec<State> {
        vec![
            State::basis(sys.clone(), i, Backend::Dense).unwrap(),
            State::basis(sys.clone(), i, Backend::Sparse).unwrap(),
        ]
    }

    #[test]
    fn z_flips_the_superposition_sign() {
        let sys = QuditSystem::new(&[2]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for mut state in [
            State::Dense(
                DenseState::from_amplitudes(sys.clone(), vec![c(h, 0.0), c(h, 0.0)]).unwrap(),
            ),
            State::Sparse(
                SparseState::from_entries(
                    sys.clone(),
                    [(0u64, c(h, 0.0)), (1u64, c(h, 0.0))],
                    DEFAULT_SPARSE_THRESHOLD,
                )
                .unwrap(),
            ),
        ] {
            let mut counter = OpCounter::new();
            apply_phase(&mut state, 0, &[c(1.0, 0.0), c(-1.0, 0.0)], &mut counter).unwrap();
            assert!((state.amplitude(0) - c(h, 0.0)).norm() < 1e-15);
            assert!((state.amplitude(1) - c(-h, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn clock_on_uniform_qutrit() {
        let sys = QuditSystem::new(&[3]).unwrap();
        let v = 1.0 / 3.0f64.sqrt();
        let mut state = State::Dense(
            DenseState::from_amplitudes(sys, vec![c(v, 0.0); 3]).unwrap(),
        );
        let GateKind::Phase { diag } = Gate::clock_z(3, 1).unwrap().kind().clone() else {
            panic!()
        };
        let mut counter = OpCounter::new();
        apply_phase(&mut state, 0, &diag, &mut counter).unwrap();
        let omega = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        assert!((state.amplitude(1) - omega * v).norm() < 1e-15);
        assert!((state.amplitude(2) - omega * omega * v).norm() < 1e-15);
    }

    #[test]
    fn identity_phase_leaves_state_unchanged() {
        let sys = QuditSystem::new(&[2, 3]).unwrap();
        for mut state in both_backends(&sys, 3) {
            let mut counter = OpCounter::new();
            apply_phase(&mut state, 1, &[c(1.0, 0.0); 3], &mut counter).unwrap();
            assert_eq!(state.amplitude(3), c(1.0, 0.0));
            assert_eq!(state.nonzero_count(), 1);
        }
    }

    #[test]
    fn shift_moves_basis_states() {
        let sys = QuditSystem::new(&[2, 2]).unwrap();
        for mut state in both_backends(&sys, 0) {
            let mut counter = OpCounter::new();
            apply_permutation(&mut state, 0, &[1, 0], &mut counter).unwrap();
            assert_eq!(state.amplitude(1), c(1.0, 0.0));
            assert_eq!(state.amplitude(0), c(0.0, 0.0));
        }

        // Wraparound on the qutrit: digit 2 + 1 = 0.
        let sys = QuditSystem::new(&[2, 3]).unwrap();
        for mut state in both_backends(&sys, 4) {
            let mut counter = OpCounter::new();
            let GateKind::Permutation { map } = Gate::shift_x(3, 1).unwrap().kind().clone()
            else {
                panic!()
            };
            apply_permutation(&mut state, 1, &map, &mut counter).unwrap();
            assert_eq!(state.amplitude(0), c(1.0, 0.0));
            assert_eq!(state.nonzero_count(), 1);
        }
    }

    #[test]
    fn permutation_then_inverse_is_bit_exact() {
        let sys = QuditSystem::new(&[3, 2]).unwrap();
        let amps: Vec<Complex64> = (0..6).map(|i| c(0.1 * i as f64 + 0.05, -0.02 * i as f64)).collect();
        let dense = DenseState::from_amplitudes(sys.clone(), amps.clone()).unwrap();
        let mut state = State::Dense(dense.clone());
        let mut counter = OpCounter::new();
        let map = vec![2usize, 0, 1];
        let inverse = vec![1usize, 2, 0];
        apply_permutation(&mut state, 0, &map, &mut counter).unwrap();
        apply_permutation(&mut state, 0, &inverse, &mut counter).unwrap();
        let State::Dense(after) = state else { panic!() };
        assert_eq!(after.amplitudes(), dense.amplitudes());
    }

    #[test]
    fn fourier_fans_out_the_target_class() {
        // H on q1 of |00> with dims [2, 3] populates one member of each of
        // the three q1 blocks: indices 0, 2, 4.
        let sys = QuditSystem::new(&[2, 3]).unwrap();
        let GateKind::General { col_major } = Gate::fourier_h(3).unwrap().kind().clone() else {
            panic!()
        };
        let v = 1.0 / 3.0f64.sqrt();
        for mut state in both_backends(&sys, 0) {
            let mut counter = OpCounter::new();
            apply_general(&mut state, 1, &col_major, &mut counter).unwrap();
            for idx in [0u64, 2, 4] {
                assert!((state.amplitude(idx) - c(v, 0.0)).norm() < 1e-15);
            }
            for idx in [1u64, 3, 5] {
                assert_eq!(state.amplitude(idx), c(0.0, 0.0));
            }
        }
    }

    #[test]
    fn hadamard_on_excited_qubit() {
        let sys = QuditSystem::new(&[2]).unwrap();
        let GateKind::General { col_major } = Gate::fourier_h(2).unwrap().kind().clone() else {
            panic!()
        };
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for mut state in both_backends(&sys, 1) {
            let mut counter = OpCounter::new();
            apply_general(&mut state, 0, &col_major, &mut counter).unwrap();
            assert!((state.amplitude(0) - c(h, 0.0)).norm() < 1e-15);
            assert!((state.amplitude(1) - c(-h, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn hadamard_twice_is_identity() {
        let sys = QuditSystem::new(&[2, 2]).unwrap();
        let GateKind::General { col_major } = Gate::fourier_h(2).unwrap().kind().clone() else {
            panic!()
        };
        let amps = vec![c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(-0.5, 0.0)];
        let start = DenseState::from_amplitudes(sys, amps).unwrap();
        let mut state = State::Dense(start.clone());
        let mut counter = OpCounter::new();
        apply_general(&mut state, 1, &col_major, &mut counter).unwrap();
        apply_general(&mut state, 1, &col_major, &mut counter).unwrap();
        assert!(state.max_abs_diff(&State::Dense(start)).unwrap() < 1e-12);
    }

    #[test]
    fn controlled_shift_on_matching_group() {
        // The walkthrough's second gate: dims [2, 3], X_{+1} on q0 when
        // q1 = 2, applied to (e0 + e2 + e4)/sqrt(3): only e4 moves, to e5.
        let sys = QuditSystem::new(&[2, 3]).unwrap();
        let v = 1.0 / 3.0f64.sqrt();
        let entries = [(0u64, c(v, 0.0)), (2u64, c(v, 0.0)), (4u64, c(v, 0.0))];
        let gate = Gate::shift_x(2, 1).unwrap();
        for mut state in [
            State::Dense(
                DenseState::from_amplitudes(
                    sys.clone(),
                    vec![c(v, 0.0), c(0.0, 0.0), c(v, 0.0), c(0.0, 0.0), c(v, 0.0), c(0.0, 0.0)],
                )
                .unwrap(),
            ),
            State::Sparse(
                SparseState::from_entries(sys.clone(), entries, DEFAULT_SPARSE_THRESHOLD)
                    .unwrap(),
            ),
        ] {
            let mut counter = OpCounter::new();
            apply_controlled(&mut state, &[(1, 2)], 0, &gate, &mut counter).unwrap();
            let got = state.sorted_amplitudes();
            assert_eq!(
                got.iter().map(|&(i, _)| i).collect::<Vec<_>>(),
                vec![0, 2, 5]
            );
            for (_, a) in got {
                assert!((a - c(v, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn toffoli_truth_table() {
        let sys = QuditSystem::new(&[2, 2, 2]).unwrap();
        let gate = Gate::shift_x(2, 1).unwrap();
        for mut state in both_backends(&sys, 6) {
            let mut counter = OpCounter::new();
            apply_controlled(&mut state, &[(2, 1), (1, 1)], 0, &gate, &mut counter).unwrap();
            assert_eq!(state.amplitude(7), c(1.0, 0.0));
            assert_eq!(state.nonzero_count(), 1);
        }
        // Controls unmet: e2 is untouched.
        for mut state in both_backends(&sys, 2) {
            let mut counter = OpCounter::new();
            apply_controlled(&mut state, &[(2, 1), (1, 1)], 0, &gate, &mut counter).unwrap();
            assert_eq!(state.amplitude(2), c(1.0, 0.0));
            assert_eq!(state.nonzero_count(), 1);
        }
    }

    #[test]
    fn unmet_controls_leave_sparse_state_bit_exact() {
        let sys = QuditSystem::new(&[2, 3]).unwrap();
        let entries = [(0u64, c(0.6, 0.0)), (1u64, c(0.0, 0.8))];
        let start =
            SparseState::from_entries(sys.clone(), entries, DEFAULT_SPARSE_THRESHOLD).unwrap();
        let mut state = State::Sparse(start.clone());
        let mut counter = OpCounter::new();
        // Support lives entirely in q1 = 0; the control requires q1 = 2.
        apply_controlled(
            &mut state,
            &[(1, 2)],
            0,
            &Gate::fourier_h(2).unwrap(),
            &mut counter,
        )
        .unwrap();
        let State::Sparse(after) = state else { panic!() };
        assert_eq!(after.sorted_entries(), start.sorted_entries());
        assert_eq!(counter.amp_writes, 0);
    }

    #[test]
    fn dispatch_routes_by_kind_and_controls() {
        let sys = QuditSystem::new(&[2, 3]).unwrap();
        let mut state = State::basis(sys.clone(), 0, Backend::Dense).unwrap();
        let mut counter = OpCounter::new();

        // Uncontrolled phase touches every amplitude exactly twice (read +
        // write).
        let op = GateOp::new(Gate::clock_z(2, 1).unwrap(), 0);
        apply_op(&mut state, &op, &mut counter).unwrap();
        assert_eq!(counter.amp_reads, 6);
        assert_eq!(counter.amp_writes, 6);

        // A controlled op only touches matching classes: one class of the
        // six states matches q1 = 2.
        counter.reset();
        let op = GateOp::controlled(Gate::shift_x(2, 1).unwrap(), 0, vec![(1, 2)]);
        apply_op(&mut state, &op, &mut counter).unwrap();
        assert_eq!(counter.amp_reads, 2);
        assert_eq!(counter.amp_writes, 2);
    }

    #[test]
    fn walkthrough_circuit_via_dispatch() {
        let circuit = example_2x3();
        for backend in [Backend::Dense, Backend::Sparse] {
            let mut counter = OpCounter::new();
            let state =
                run_circuit(&circuit, backend, DEFAULT_SPARSE_THRESHOLD, &mut counter).unwrap();
            let v = 1.0 / 3.0f64.sqrt();
            let got = state.sorted_amplitudes();
            assert_eq!(
                got.iter().map(|&(i, _)| i).collect::<Vec<_>>(),
                vec![0, 2, 5]
            );
            for (_, a) in got {
                assert!((a - c(v, 0.0)).norm() < 1e-14);
            }
            assert_abs_diff_eq!(state.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn ghz_sparse_write_count_matches_closed_form() {
        for (d, n) in [(2usize, 2usize), (2, 3), (2, 6), (3, 2), (3, 4), (4, 3), (5, 3)] {
            let circuit = ghz(d, n).unwrap();
            let mut counter = OpCounter::new();
            let state = run_circuit(
                &circuit,
                Backend::Sparse,
                DEFAULT_SPARSE_THRESHOLD,
                &mut counter,
            )
            .unwrap();
            let expected = (d * (1 + (n - 1) * (d - 1)) + d) as u64;
            assert_eq!(
                counter.amp_writes, expected,
                "ghz({d},{n}) writes {} expected {expected}",
                counter.amp_writes
            );
            assert_eq!(state.nonzero_count(), d);
        }
    }

    #[test]
    fn ghz_two_qutrits_probabilities() {
        let circuit = ghz(3, 2).unwrap();
        for backend in [Backend::Dense, Backend::Sparse] {
            let mut counter = OpCounter::new();
            let state =
                run_circuit(&circuit, backend, DEFAULT_SPARSE_THRESHOLD, &mut counter).unwrap();
            let probs = state.probabilities();
            assert_eq!(
                probs.iter().map(|&(i, _)| i).collect::<Vec<_>>(),
                vec![0, 4, 8]
            );
            for (_, p) in probs {
                assert!((p - 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn controls_pinned_in_support_reduce_to_the_uncontrolled_gate() {
        // When every nonzero basis state already satisfies the controls,
        // the controlled op acts exactly like the bare gate.
        let sys = QuditSystem::new(&[2, 3]).unwrap();
        let amps = [(4u64, c(0.6, 0.0)), (5u64, c(0.0, 0.8))];
        let gate = Gate::fourier_h(2).unwrap();
        let GateKind::General { col_major } = gate.kind().clone() else {
            panic!()
        };
        for backend in [Backend::Dense, Backend::Sparse] {
            let make = || {
                let sparse =
                    SparseState::from_entries(sys.clone(), amps, DEFAULT_SPARSE_THRESHOLD)
                        .unwrap();
                match backend {
                    Backend::Sparse => State::Sparse(sparse),
                    Backend::Dense => {
                        State::Dense(State::Sparse(sparse).to_dense().unwrap())
                    }
                }
            };
            let mut counter = OpCounter::new();
            let mut controlled = make();
            apply_controlled(&mut controlled, &[(1, 2)], 0, &gate, &mut counter).unwrap();
            let mut uncontrolled = make();
            apply_general(&mut uncontrolled, 0, &col_major, &mut counter).unwrap();
            assert!(controlled.max_abs_diff(&uncontrolled).unwrap() < 1e-15);
        }
    }

    #[test]
    fn ghz_bell_states() {
        let circuit = ghz(2, 2).unwrap();
        let mut counter = OpCounter::new();
        let state = run_circuit(
            &circuit,
            Backend::Sparse,
            DEFAULT_SPARSE_THRESHOLD,
            &mut counter,
        )
        .unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let got = state.sorted_amplitudes();
        assert_eq!(got.iter().map(|&(i, _)| i).collect::<Vec<_>>(), vec![0, 3]);
        for (_, a) in got {
            assert!((a - c(h, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn scratch_stays_within_the_target_dimension() {
        let circuit = ghz(5, 4).unwrap();
        for backend in [Backend::Dense, Backend::Sparse] {
            let mut counter = OpCounter::new();
            run_circuit(&circuit, backend, DEFAULT_SPARSE_THRESHOLD, &mut counter).unwrap();
            assert!(counter.peak_scratch <= 5);
        }
    }

    #[test]
    fn class_address_members() {
        let sys = QuditSystem::new(&[2, 3, 2]).unwrap();
        // Class of target q1, group 1, offset 1: members 7, 9, 11.
        let class = ClassAddress::new(&sys, 1, 1, 1).unwrap();
        assert_eq!(class.member(0), 7);
        assert_eq!(class.member(1), 9);
        assert_eq!(class.member(2), 11);
        // Members differ only in the target digit.
        for j in 0..3 {
            assert_eq!(sys.digit(class.member(j), 1).unwrap(), j);
            assert_eq!(sys.digit(class.member(j), 0).unwrap(), 1);
            assert_eq!(sys.digit(class.member(j), 2).unwrap(), 1);
        }
    }

    #[test]
    fn kernel_error_paths() {
        let sys = QuditSystem::new(&[2, 3]).unwrap();
        let mut state = State::basis(sys, 0, Backend::Dense).unwrap();
        let mut counter = OpCounter::new();

        assert!(matches!(
            apply_phase(&mut state, 5, &[c(1.0, 0.0)], &mut counter),
            Err(KernelError::QuditOutOfRange { qudit: 5, count: 2 })
        ));
        assert!(matches!(
            apply_phase(&mut state, 1, &[c(1.0, 0.0); 2], &mut counter),
            Err(KernelError::LengthMismatch {
                expected: 3,
                got: 2
            })
        ));
        assert!(matches!(
            apply_permutation(&mut state, 0, &[0, 0], &mut counter),
            Err(KernelError::NotBijection { dim: 2 })
        ));
        let stretched = [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)];
        assert!(matches!(
            apply_general(&mut state, 0, &stretched, &mut counter),
            Err(KernelError::NotUnitary { .. })
        ));
        let gate = Gate::shift_x(2, 1).unwrap();
        assert!(matches!(
            apply_controlled(&mut state, &[(0, 1)], 0, &gate, &mut counter),
            Err(KernelError::ControlTargetOverlap { qudit: 0 })
        ));
        assert!(matches!(
            apply_controlled(&mut state, &[(1, 1), (1, 2)], 0, &gate, &mut counter),
            Err(KernelError::DuplicateControl { qudit: 1 })
        ));
        assert!(matches!(
            apply_controlled(&mut state, &[(1, 3)], 0, &gate, &mut counter),
            Err(KernelError::ValueOutOfRange {
                qudit: 1,
                value: 3,
                dim: 3
            })
        ));
    }
}
