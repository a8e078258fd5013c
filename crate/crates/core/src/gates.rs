//! Single-qudit gates and their structural classification.
//!
//! Every gate is a `d x d` unitary sorted into one of three kernel
//! categories: `Phase` (diagonal), `Permutation` (0/1 monomial), or
//! `General` (anything else). The category decides which kernel applies it:
//! phase gates scale amplitudes in place, permutation gates relocate them,
//! and general gates combine scaled matrix columns within each equivalence
//! class. Monomial matrices with non-unit phases deliberately classify as
//! `General` so the permutation kernel stays a pure index relocation.

use num_complex::Complex64;
use thiserror::Error;

/// Structural tolerance: below this magnitude an entry counts as exactly 0
/// (or exactly 1) when deciding the gate category.
pub const CLASSIFY_TOL: f64 = 1e-14;

/// Numeric tolerance on `max |U^dag U - I|` for a matrix to count as unitary.
pub const UNITARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GateError {
    #[error("gate dimension {dim} is too small; gates act on qudits of dimension >= 2")]
    DimTooSmall { dim: usize },
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("matrix shape mismatch: expected {expected} entries for a square matrix, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("matrix is not unitary: max |U^dag U - I| = {deviation:.3e}")]
    NotUnitary { deviation: f64 },
    #[error("permutation map is not a bijection on 0..{dim}")]
    NotBijection { dim: usize },
}

/// The kernel category of a gate, together with the data its kernel needs.
#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    /// Diagonal unitary; `diag[j]` multiplies every amplitude whose target
    /// digit is `j`.
    Phase { diag: Vec<Complex64> },
    /// Basis-state relocation; digit `j` becomes `map[j]`.
    Permutation { map: Vec<usize> },
    /// Full matrix, stored column-major: `col_major[j * d + k] = U(k, j)`.
    General { col_major: Vec<Complex64> },
}

/// A single-qudit unitary bound to a dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    dim: usize,
    kind: GateKind,
}

/// `exp(2 pi i * num / den)` with exact values at quarter turns, so that
/// gates like Z and X land on exact +-1 entries.
pub(crate) fn root_of_unity(num: i64, den: usize) -> Complex64 {
    let den_i = den as i64;
    let m = num.rem_euclid(den_i);
    if (4 * m) % den_i == 0 {
        match (4 * m / den_i) % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    } else {
        Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * m as f64 / den as f64)
    }
}

impl Gate {
    /// Generalized NOT: maps digit `j` to `(j + a) mod d`. Any integer shift
    /// is accepted and reduced modulo `d`.
    pub fn shift_x(d: usize, a: i64) -> Result<Self, GateError> {
        check_dim(d)?;
        let shift = a.rem_euclid(d as i64) as usize;
        let map = (0..d).map(|j| (j + shift) % d).collect();
        Ok(Self {
            dim: d,
            kind: GateKind::Permutation { map },
        })
    }

    /// Generalized Z (clock) gate raised to `power`: diagonal entries
    /// `exp(2 pi i * j * power / d)`.
    pub fn clock_z(d: usize, power: i64) -> Result<Self, GateError> {
        check_dim(d)?;
        let power = power.rem_euclid(d as i64);
        let diag = (0..d)
            .map(|j| root_of_unity(j as i64 * power, d))
            .collect();
        Ok(Self {
            dim: d,
            kind: GateKind::Phase { diag },
        })
    }

    /// Diagonal gate with entries `exp(i * angles[j])`.
    pub fn phase_gate(d: usize, angles: &[f64]) -> Result<Self, GateError> {
        check_dim(d)?;
        if angles.len() != d {
            return Err(GateError::LengthMismatch {
                expected: d,
                got: angles.len(),
            });
        }
        let diag = angles.iter().map(|&t| Complex64::from_polar(1.0, t)).collect();
        Ok(Self {
            dim: d,
            kind: GateKind::Phase { diag },
        })
    }

    /// Generalized Hadamard: the discrete Fourier matrix
    /// `U(k, j) = exp(2 pi i * j * k / d) / sqrt(d)`.
    pub fn fourier_h(d: usize) -> Result<Self, GateError> {
        check_dim(d)?;
        let scale = 1.0 / (d as f64).sqrt();
        let mut col_major = Vec::with_capacity(d * d);
        for j in 0..d {
            for k in 0..d {
                col_major.push(root_of_unity((j * k) as i64, d) * scale);
            }
        }
        Ok(Self {
            dim: d,
            kind: GateKind::General { col_major },
        })
    }

    /// Permutation gate from an explicit digit map; validates bijectivity.
    pub fn permutation(d: usize, map: Vec<usize>) -> Result<Self, GateError> {
        check_dim(d)?;
        if map.len() != d {
            return Err(GateError::LengthMismatch {
                expected: d,
                got: map.len(),
            });
        }
        let mut seen = vec![false; d];
        for &to in &map {
            if to >= d || seen[to] {
                return Err(GateError::NotBijection { dim: d });
            }
            seen[to] = true;
        }
        Ok(Self {
            dim: d,
            kind: GateKind::Permutation { map },
        })
    }

    /// Classifies an arbitrary row-major `d x d` matrix into its kernel
    /// category, enforcing unitarity.
    pub fn arbitrary(d: usize, row_major: &[Complex64]) -> Result<Self, GateError> {
        check_dim(d)?;
        let deviation = check_unitary(row_major, d)?;
        if deviation > UNITARY_TOL {
            return Err(GateError::NotUnitary { deviation });
        }

        let entry = |r: usize, c: usize| row_major[r * d + c];

        let off_diag_zero = (0..d)
            .all(|r| (0..d).all(|c| r == c || entry(r, c).norm() < CLASSIFY_TOL));
        if off_diag_zero {
            let diag = (0..d).map(|j| entry(j, j)).collect();
            return Ok(Self {
                dim: d,
                kind: GateKind::Phase { diag },
            });
        }

        if let Some(map) = monomial_zero_one_map(row_major, d) {
            return Ok(Self {
                dim: d,
                kind: GateKind::Permutation { map },
            });
        }

        let mut col_major = Vec::with_capacity(d * d);
        for c in 0..d {
            for r in 0..d {
                col_major.push(entry(r, c));
            }
        }
        Ok(Self {
            dim: d,
            kind: GateKind::General { col_major },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &GateKind {
        &self.kind
    }

    /// Materializes the full row-major matrix, whatever the category.
    pub fn to_matrix(&self) -> Vec<Complex64> {
        let d = self.dim;
        let mut m = vec![Complex64::new(0.0, 0.0); d * d];
        match &self.kind {
            GateKind::Phase { diag } => {
                for (j, &v) in diag.iter().enumerate() {
                    m[j * d + j] = v;
                }
            }
            GateKind::Permutation { map } => {
                for (j, &to) in map.iter().enumerate() {
                    m[to * d + j] = Complex64::new(1.0, 0.0);
                }
            }
            GateKind::General { col_major } => {
                for c in 0..d {
                    for r in 0..d {
                        m[r * d + c] = col_major[c * d + r];
                    }
                }
            }
        }
        m
    }
}

/// Extracts the digit map of a 0/1 monomial matrix, or `None` if any entry
/// is neither ~0 nor ~1 or the 1-pattern is not a bijection.
fn monomial_zero_one_map(row_major: &[Complex64], d: usize) -> Option<Vec<usize>> {
    let mut map = vec![usize::MAX; d];
    let mut row_used = vec![false; d];
    for c in 0..d {
        let mut one_row = None;
        for r in 0..d {
            let e = row_major[r * d + c];
            if (e - Complex64::new(1.0, 0.0)).norm() < CLASSIFY_TOL {
                if one_row.is_some() {
                    return None;
                }
                one_row = Some(r);
            } else if e.norm() >= CLASSIFY_TOL {
                return None;
            }
        }
        let r = one_row?;
        if row_used[r] {
            return None;
        }
        row_used[r] = true;
        map[c] = r;
    }
    Some(map)
}

/// Returns `max |U^dag U - I|` over all entries of a row-major square matrix.
pub fn check_unitary(row_major: &[Complex64], d: usize) -> Result<f64, GateError> {
    if row_major.len() != d * d {
        return Err(GateError::ShapeMismatch {
            expected: d * d,
            got: row_major.len(),
        });
    }
    let mut max_dev = 0.0f64;
    for r in 0..d {
        for c in 0..d {
            // (U^dag U)(r, c) = sum_k conj(U(k, r)) * U(k, c)
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..d {
                acc += row_major[k * d + r].conj() * row_major[k * d + c];
            }
            let target = if r == c {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            max_dev = max_dev.max((acc - target).norm());
        }
    }
    Ok(max_dev)
}

fn check_dim(d: usize) -> Result<(), GateError> {
    if d < 2 {
        return Err(GateError::DimTooSmall { dim: d });
    }
    Ok(())
}
