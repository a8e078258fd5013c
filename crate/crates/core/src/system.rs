//! Mixed-radix bookkeeping for a register of qudits.
//!
//! A register of `n` qudits with dimensions `d_0..d_{n-1}` spans a basis-index
//! space of size `D = d_0 * d_1 * ... * d_{n-1}`. Qudit 0 is the least
//! significant: basis index `i` encodes the digit of qudit `k` as
//! `(i / b_k) % d_k`, where `b_k` is the block size `d_0 * ... * d_{k-1}`.
//! Block sizes are precomputed once so that kernels can locate blocks and
//! equivalence classes with plain integer arithmetic.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SystemError {
    #[error("qudit register must contain at least one qudit")]
    EmptySystem,
    #[error("qudit {index} has dimension {dim}; every dimension must be at least 2")]
    DimTooSmall { index: usize, dim: usize },
    #[error("total dimension exceeds the unsigned 64-bit basis-index space")]
    IndexOverflow,
    #[error("qudit index {qudit} out of range for a register of {count} qudits")]
    QuditOutOfRange { qudit: usize, count: usize },
    #[error("basis index {index} out of range for total dimension {dim}")]
    IndexOutOfRange { index: u64, dim: u64 },
    #[error("digit {value} for qudit {qudit} out of range (dimension {dim})")]
    DigitOutOfRange { qudit: usize, value: usize, dim: usize },
}

/// An ordered register of qudits with precomputed mixed-radix weights.
///
/// Immutable after construction; freely shareable across threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuditSystem {
    dims: Vec<usize>,
    block_sizes: Vec<u64>,
    total_dim: u64,
}

impl QuditSystem {
    /// Builds a register from the qudit dimensions, least significant first.
    ///
    /// Fails when the register is empty, a dimension is below 2, or the
    /// product of dimensions does not fit in a `u64`.
    pub fn new(dims: &[usize]) -> Result<Self, SystemError> {
        if dims.is_empty() {
            return Err(SystemError::EmptySystem);
        }
        let mut block_sizes = Vec::with_capacity(dims.len());
        let mut acc: u64 = 1;
        for (index, &dim) in dims.iter().enumerate() {
            if dim < 2 {
                return Err(SystemError::DimTooSmall { index, dim });
            }
            block_sizes.push(acc);
            acc = acc
                .checked_mul(dim as u64)
                .ok_or(SystemError::IndexOverflow)?;
        }
        Ok(Self {
            dims: dims.to_vec(),
            block_sizes,
            total_dim: acc,
        })
    }

    /// Number of qudits in the register.
    pub fn num_qudits(&self) -> usize {
        self.dims.len()
    }

    /// Qudit dimensions, least significant first.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Total dimension `D` of the basis-index space.
    pub fn total_dim(&self) -> u64 {
        self.total_dim
    }

    /// All block sizes `b_0..b_{n-1}`.
    pub fn block_sizes(&self) -> &[u64] {
        &self.block_sizes
    }

    /// Block size `b_k`: the product of the dimensions of all qudits less
    /// significant than `k`. `b_0` is always 1.
    pub fn block_size(&self, k: usize) -> Result<u64, SystemError> {
        self.check_qudit(k)?;
        Ok(self.block_sizes[k])
    }

    /// Repetition count `r_k`: the product of the dimensions of all qudits
    /// more significant than `k`, so that `r_k * d_k * b_k = D`.
    pub fn repetitions(&self, k: usize) -> Result<u64, SystemError> {
        self.check_qudit(k)?;
        Ok(self.total_dim / (self.block_sizes[k] * self.dims[k] as u64))
    }

    /// The value of qudit `k` in basis state `i`: `(i / b_k) % d_k`.
    pub fn digit(&self, i: u64, k: usize) -> Result<usize, SystemError> {
        self.check_qudit(k)?;
        self.check_index(i)?;
        Ok(self.digit_unchecked(i, k))
    }

    #[inline]
    pub(crate) fn digit_unchecked(&self, i: u64, k: usize) -> usize {
        ((i / self.block_sizes[k]) % self.dims[k] as u64) as usize
    }

    /// Packs one digit per qudit (least significant first) into a basis index.
    pub fn encode(&self, digits: &[usize]) -> Result<u64, SystemError> {
        if digits.len() != self.dims.len() {
            return Err(SystemError::QuditOutOfRange {
                qudit: digits.len(),
                count: self.dims.len(),
            });
        }
        let mut index = 0u64;
        for (k, &value) in digits.iter().enumerate() {
            if value >= self.dims[k] {
                return Err(SystemError::DigitOutOfRange {
                    qudit: k,
                    value,
                    dim: self.dims[k],
                });
            }
            index += value as u64 * self.block_sizes[k];
        }
        Ok(index)
    }

    /// Unpacks a basis index into one digit per qudit, least significant first.
    pub fn decode(&self, i: u64) -> Result<Vec<usize>, SystemError> {
        self.check_index(i)?;
        Ok((0..self.dims.len())
            .map(|k| self.digit_unchecked(i, k))
            .collect())
    }

    /// Renders the digits of a basis state most significant first, the way
    /// ket labels are usually written. Digits are separated by `.` when any
    /// dimension exceeds 10, otherwise concatenated.
    pub fn digit_string(&self, i: u64) -> Result<String, SystemError> {
        let digits = self.decode(i)?;
        let sep = if self.dims.iter().any(|&d| d > 10) {
            "."
        } else {
            ""
        };
        Ok(digits
            .iter()
            .rev()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(sep))
    }

    pub(crate) fn check_qudit(&self, k: usize) -> Result<(), SystemError> {
        if k >= self.dims.len() {
            return Err(SystemError::QuditOutOfRange {
                qudit: k,
                count: self.dims.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_index(&self, i: u64) -> Result<(), SystemError> {
        if i >= self.total_dim {
            return Err(SystemError::IndexOutOfRange {
                index: i,
                dim: self.total_dim,
            });
        }
        Ok(())
    }
}
