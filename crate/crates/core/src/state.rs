//! Dense and sparse amplitude containers over the basis-index space.
//!
//! Both backends expose the same access contract to the kernels: amplitudes
//! are addressed by basis index, and everything not stored in a sparse state
//! is an exact zero. The sparse backend keeps an associative map of nonzero
//! amplitudes and drops entries whose magnitude falls below its prune
//! threshold after superposition-creating operations.

use std::collections::HashMap;

use num_complex::Complex64;
use thiserror::Error;

use crate::system::{QuditSystem, SystemError};

/// Largest dense statevector allocated by default: `2^28` amplitudes (4 GiB).
pub const DEFAULT_DENSE_CAP: u64 = 1 << 28;

/// Default magnitude below which sparse entries are pruned.
pub const DEFAULT_SPARSE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("basis index {index} out of range for total dimension {dim}")]
    IndexOutOfRange { index: u64, dim: u64 },
    #[error("dense allocation of {requested} amplitudes exceeds the cap of {cap}")]
    AllocationTooLarge { requested: u64, cap: u64 },
    #[error("states belong to different qudit systems")]
    SystemMismatch,
    #[error("amplitude at index {index} is not finite")]
    NonFiniteAmplitude { index: u64 },
    #[error(transparent)]
    System(#[from] SystemError),
}

/// Which amplitude container a simulation runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Dense,
    Sparse,
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Backend::Dense => write!(f, "dense"),
            Backend::Sparse => write!(f, "sparse"),
        }
    }
}

/// Contiguous array of all `D` amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    sys: QuditSystem,
    amps: Vec<Complex64>,
}

impl DenseState {
    /// Basis state `|i>` with the default allocation cap.
    pub fn basis(sys: QuditSystem, i: u64) -> Result<Self, StateError> {
        Self::basis_with_cap(sys, i, DEFAULT_DENSE_CAP)
    }

    /// Basis state `|i>`, failing fast when `D` exceeds `cap`.
    pub fn basis_with_cap(sys: QuditSystem, i: u64, cap: u64) -> Result<Self, StateError> {
        let d = sys.total_dim();
        if d > cap {
            return Err(StateError::AllocationTooLarge {
                requested: d,
                cap,
            });
        }
        sys.check_index(i)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); d as usize];
        amps[i as usize] = Complex64::new(1.0, 0.0);
        Ok(Self { sys, amps })
    }

    /// Wraps an explicit amplitude vector. The length must be exactly `D`
    /// and every amplitude must be finite.
    pub fn from_amplitudes(sys: QuditSystem, amps: Vec<Complex64>) -> Result<Self, StateError> {
        if amps.len() as u64 != sys.total_dim() {
            return Err(StateError::IndexOutOfRange {
                index: amps.len() as u64,
                dim: sys.total_dim(),
            });
        }
        for (i, a) in amps.iter().enumerate() {
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(StateError::NonFiniteAmplitude { index: i as u64 });
            }
        }
        Ok(Self { sys, amps })
    }

    pub fn system(&self) -> &QuditSystem {
        &self.sys
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn amplitude(&self, i: u64) -> Complex64 {
        self.amps[i as usize]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn nonzero_count(&self) -> usize {
        self.amps.iter().filter(|a| a.norm_sqr() > 0.0).count()
    }
}

/// Associative map of nonzero amplitudes keyed by basis index.
#[derive(Debug, Clone)]
pub struct SparseState {
    sys: QuditSystem,
    entries: HashMap<u64, Complex64>,
    threshold: f64,
}

impl SparseState {
    /// Basis state `|i>` with the default prune threshold.
    pub fn basis(sys: QuditSystem, i: u64) -> Result<Self, StateError> {
        Self::basis_with_threshold(sys, i, DEFAULT_SPARSE_THRESHOLD)
    }

    pub fn basis_with_threshold(
        sys: QuditSystem,
        i: u64,
        threshold: f64,
    ) -> Result<Self, StateError> {
        sys.check_index(i)?;
        let mut entries = HashMap::new();
        entries.insert(i, Complex64::new(1.0, 0.0));
        Ok(Self {
            sys,
            entries,
            threshold,
        })
    }

    /// Builds a sparse state from explicit entries; below-threshold entries
    /// are dropped, out-of-range keys and non-finite values are rejected.
    pub fn from_entries(
        sys: QuditSystem,
        entries: impl IntoIterator<Item = (u64, Complex64)>,
        threshold: f64,
    ) -> Result<Self, StateError> {
        let mut map = HashMap::new();
        for (i, a) in entries {
            sys.check_index(i)?;
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(StateError::NonFiniteAmplitude { index: i });
            }
            if a.norm() >= threshold {
                map.insert(i, a);
            }
        }
        Ok(Self {
            sys,
            entries: map,
            threshold,
        })
    }

    pub fn system(&self) -> &QuditSystem {
        &self.sys
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Number of stored (nonzero) entries.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn amplitude(&self, i: u64) -> Complex64 {
        self.entries
            .get(&i)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Iterates stored entries in map order (unspecified).
    pub fn entries(&self) -> impl Iterator<Item = (u64, Complex64)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }

    /// Stored entries sorted by basis index.
    pub fn sorted_entries(&self) -> Vec<(u64, Complex64)> {
        let mut v: Vec<_> = self.entries().collect();
        v.sort_unstable_by_key(|&(k, _)| k);
        v
    }

    pub(crate) fn entries_map(&self) -> &HashMap<u64, Complex64> {
        &self.entries
    }

    pub(crate) fn entries_map_mut(&mut self) -> &mut HashMap<u64, Complex64> {
        &mut self.entries
    }

    pub(crate) fn replace_entries(&mut self, entries: HashMap<u64, Complex64>) {
        self.entries = entries;
    }

    pub fn norm(&self) -> f64 {
        self.entries
            .values()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// A statevector on either backend.
#[derive(Debug, Clone)]
pub enum State {
    Dense(DenseState),
    Sparse(SparseState),
}

impl State {
    /// State with amplitude 1 at basis index `i` and 0 elsewhere.
    pub fn basis(sys: QuditSystem, i: u64, backend: Backend) -> Result<Self, StateError> {
        match backend {
            Backend::Dense => Ok(State::Dense(DenseState::basis(sys, i)?)),
            Backend::Sparse => Ok(State::Sparse(SparseState::basis(sys, i)?)),
        }
    }

    pub fn backend(&self) -> Backend {
        match self {
            State::Dense(_) => Backend::Dense,
            State::Sparse(_) => Backend::Sparse,
        }
    }

    pub fn system(&self) -> &QuditSystem {
        match self {
            State::Dense(s) => s.system(),
            State::Sparse(s) => s.system(),
        }
    }

    pub fn amplitude(&self, i: u64) -> Complex64 {
        match self {
            State::Dense(s) => s.amplitude(i),
            State::Sparse(s) => s.amplitude(i),
        }
    }

    /// `sqrt(sum |a_i|^2)`.
    pub fn norm(&self) -> f64 {
        match self {
            State::Dense(s) => s.norm(),
            State::Sparse(s) => s.norm(),
        }
    }

    /// Number of strictly nonzero amplitudes.
    pub fn nonzero_count(&self) -> usize {
        match self {
            State::Dense(s) => s.nonzero_count(),
            State::Sparse(s) => s.len(),
        }
    }

    /// Nonzero `(index, |a_i|^2)` pairs sorted by basis index.
    pub fn probabilities(&self) -> Vec<(u64, f64)> {
        match self {
            State::Dense(s) => s
                .amplitudes()
                .iter()
                .enumerate()
                .filter(|(_, a)| a.norm_sqr() > 0.0)
                .map(|(i, a)| (i as u64, a.norm_sqr()))
                .collect(),
            State::Sparse(s) => s
                .sorted_entries()
                .into_iter()
                .map(|(i, a)| (i, a.norm_sqr()))
                .collect(),
        }
    }

    /// Nonzero `(index, amplitude)` pairs sorted by basis index.
    pub fn sorted_amplitudes(&self) -> Vec<(u64, Complex64)> {
        match self {
            State::Dense(s) => s
                .amplitudes()
                .iter()
                .enumerate()
                .filter(|(_, a)| a.norm_sqr() > 0.0)
                .map(|(i, &a)| (i as u64, a))
                .collect(),
            State::Sparse(s) => s.sorted_entries(),
        }
    }

    /// Materializes the state as a dense vector (subject to the default cap).
    pub fn to_dense(&self) -> Result<DenseState, StateError> {
        self.to_dense_with_cap(DEFAULT_DENSE_CAP)
    }

    pub fn to_dense_with_cap(&self, cap: u64) -> Result<DenseState, StateError> {
        match self {
            State::Dense(s) => Ok(s.clone()),
            State::Sparse(s) => {
                let d = s.system().total_dim();
                if d > cap {
                    return Err(StateError::AllocationTooLarge {
                        requested: d,
                        cap,
                    });
                }
                let mut amps = vec![Complex64::new(0.0, 0.0); d as usize];
                for (i, a) in s.entries() {
                    amps[i as usize] = a;
                }
                Ok(DenseState {
                    sys: s.system().clone(),
                    amps,
                })
            }
        }
    }

    /// Converts to the sparse representation, dropping entries below `threshold`.
    pub fn to_sparse(&self, threshold: f64) -> SparseState {
        match self {
            State::Sparse(s) => {
                let entries = s
                    .entries()
                    .filter(|(_, a)| a.norm() >= threshold)
                    .collect::<HashMap<_, _>>();
                SparseState {
                    sys: s.system().clone(),
                    entries,
                    threshold,
                }
            }
            State::Dense(s) => {
                let entries = s
                    .amplitudes()
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| a.norm() >= threshold)
                    .map(|(i, &a)| (i as u64, a))
                    .collect::<HashMap<_, _>>();
                SparseState {
                    sys: s.system().clone(),
                    entries,
                    threshold,
                }
            }
        }
    }

    /// Largest pointwise amplitude difference between two states of the same
    /// system, treating missing sparse entries as zero.
    pub fn max_abs_diff(&self, other: &State) -> Result<f64, StateError> {
        if self.system() != other.system() {
            return Err(StateError::SystemMismatch);
        }
        let diff = match (self, other) {
            (State::Dense(a), State::Dense(b)) => a
                .amplitudes()
                .iter()
                .zip(b.amplitudes())
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max),
            (State::Sparse(a), State::Sparse(b)) => {
                let mut m = 0.0f64;
                for (i, x) in a.entries() {
                    m = m.max((x - b.amplitude(i)).norm());
                }
                for (i, y) in b.entries() {
                    if a.entries_map().get(&i).is_none() {
                        m = m.max(y.norm());
                    }
                }
                m
            }
            (State::Dense(d), State::Sparse(s)) | (State::Sparse(s), State::Dense(d)) => d
                .amplitudes()
                .iter()
                .enumerate()
                .map(|(i, x)| (x - s.amplitude(i as u64)).norm())
                .fold(0.0, f64::max),
        };
        Ok(diff)
    }
}
