//! Circuit intermediate representation and generators.
//!
//! A [`Circuit`] is a qudit register plus an ordered list of [`GateOp`]s,
//! each a single-qudit gate bound to a target and an optional list of
//! `(control qudit, control value)` pairs. Generators build GHZ ladders for
//! any uniform dimension, seeded random circuits for differential testing,
//! and the two-qudit walkthrough circuit used across the docs and tests.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::gates::{Gate, GateError};
use crate::system::{QuditSystem, SystemError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircuitError {
    #[error("qudit index {qudit} out of range for a register of {count} qudits")]
    QuditOutOfRange { qudit: usize, count: usize },
    #[error("gate of dimension {gate_dim} cannot act on qudit {target} of dimension {qudit_dim}")]
    GateDimMismatch {
        target: usize,
        gate_dim: usize,
        qudit_dim: usize,
    },
    #[error("control qudit {qudit} collides with the target")]
    ControlTargetOverlap { qudit: usize },
    #[error("control qudit {qudit} listed more than once")]
    DuplicateControl { qudit: usize },
    #[error("control value {value} out of range for qudit {qudit} of dimension {dim}")]
    ControlValueOutOfRange {
        qudit: usize,
        value: usize,
        dim: usize,
    },
    #[error("initial state index {index} out of range for total dimension {dim}")]
    InitialStateOutOfRange { index: u64, dim: u64 },
    #[error("gate kind weights must be non-negative and not all zero")]
    InvalidWeights,
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Gate(#[from] GateError),
}

/// A gate bound to a target qudit plus zero or more control conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct GateOp {
    pub gate: Gate,
    pub target: usize,
    /// `(control qudit, control value)` pairs; the op fires only on basis
    /// states whose control digits all match.
    pub controls: Vec<(usize, usize)>,
}

impl GateOp {
    pub fn new(gate: Gate, target: usize) -> Self {
        Self {
            gate,
            target,
            controls: Vec::new(),
        }
    }

    pub fn controlled(gate: Gate, target: usize, controls: Vec<(usize, usize)>) -> Self {
        Self {
            gate,
            target,
            controls,
        }
    }

    /// Checks the op against a register: target and controls in range and
    /// distinct, gate dimension matching the target qudit, control values
    /// below their qudit dimensions.
    pub fn validate(&self, sys: &QuditSystem) -> Result<(), CircuitError> {
        let n = sys.num_qudits();
        if self.target >= n {
            return Err(CircuitError::QuditOutOfRange {
                qudit: self.target,
                count: n,
            });
        }
        let qudit_dim = sys.dims()[self.target];
        if self.gate.dim() != qudit_dim {
            return Err(CircuitError::GateDimMismatch {
                target: self.target,
                gate_dim: self.gate.dim(),
                qudit_dim,
            });
        }
        let mut seen = Vec::with_capacity(self.controls.len());
        for &(qudit, value) in &self.controls {
            if qudit >= n {
                return Err(CircuitError::QuditOutOfRange { qudit, count: n });
            }
            if qudit == self.target {
                return Err(CircuitError::ControlTargetOverlap { qudit });
            }
            if seen.contains(&qudit) {
                return Err(CircuitError::DuplicateControl { qudit });
            }
            seen.push(qudit);
            let dim = sys.dims()[qudit];
            if value >= dim {
                return Err(CircuitError::ControlValueOutOfRange { qudit, value, dim });
            }
        }
        Ok(())
    }
}

/// An ordered list of gate ops over a fixed register.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    name: String,
    sys: QuditSystem,
    ops: Vec<GateOp>,
    initial_state: u64,
}

impl Circuit {
    /// Builds a circuit after validating every op against the register.
    pub fn new(
        name: impl Into<String>,
        sys: QuditSystem,
        ops: Vec<GateOp>,
    ) -> Result<Self, CircuitError> {
        Self::with_initial_state(name, sys, ops, 0)
    }

    pub fn with_initial_state(
        name: impl Into<String>,
        sys: QuditSystem,
        ops: Vec<GateOp>,
        initial_state: u64,
    ) -> Result<Self, CircuitError> {
        if initial_state >= sys.total_dim() {
            return Err(CircuitError::InitialStateOutOfRange {
                index: initial_state,
                dim: sys.total_dim(),
            });
        }
        for op in &ops {
            op.validate(&sys)?;
        }
        Ok(Self {
            name: name.into(),
            sys,
            ops,
            initial_state,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn system(&self) -> &QuditSystem {
        &self.sys
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    /// Basis index the circuit starts from (0 unless overridden).
    pub fn initial_state(&self) -> u64 {
        self.initial_state
    }

    pub fn depth(&self) -> usize {
        self.ops.len()
    }
}

/// GHZ ladder on `n` qudits of uniform dimension `d`: a Fourier gate on
/// qudit 0 followed, for each neighboring pair `(k-1, k)`, by the fan of
/// value-controlled shifts `X_{+v}` on `q_k` conditioned on `q_{k-1} = v`
/// for `v = 1..d-1`. Starting from `|0...0>` this leaves the register in
/// `(1/sqrt(d)) * sum_v |v v ... v>`, keeping at most `d` nonzero
/// amplitudes at every step.
pub fn ghz(d: usize, n: usize) -> Result<Circuit, CircuitError> {
    let sys = QuditSystem::new(&vec![d; n])?;
    let mut ops = Vec::with_capacity(1 + n.saturating_sub(1) * (d - 1));
    ops.push(GateOp::new(Gate::fourier_h(d)?, 0));
    for k in 1..n {
        for v in 1..d {
            ops.push(GateOp::controlled(
                Gate::shift_x(d, v as i64)?,
                k,
                vec![(k - 1, v)],
            ));
        }
    }
    Circuit::new(format!("ghz_d{d}_n{n}"), sys, ops)
}

/// The two-register walkthrough circuit: dimensions `[2, 3]`, a Fourier
/// gate on `q1`, then `X_{+1}` on `q0` controlled on `q1` being at its
/// highest state. From `|00>` it produces amplitudes `1/sqrt(3)` at basis
/// indices 0, 2 and 5.
pub fn example_2x3() -> Circuit {
    let sys = QuditSystem::new(&[2, 3]).expect("static dims");
    let ops = vec![
        GateOp::new(Gate::fourier_h(3).expect("static gate"), 1),
        GateOp::controlled(Gate::shift_x(2, 1).expect("static gate"), 0, vec![(1, 2)]),
    ];
    Circuit::new("example-2x3", sys, ops).expect("static circuit")
}

/// Relative weights for the gate kinds drawn by [`random_circuit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateMix {
    pub phase: f64,
    pub permutation: f64,
    pub general: f64,
    pub controlled: f64,
}

impl Default for GateMix {
    fn default() -> Self {
        Self {
            phase: 1.0,
            permutation: 1.0,
            general: 1.0,
            controlled: 1.0,
        }
    }
}

impl GateMix {
    fn validate(&self) -> Result<(), CircuitError> {
        let weights = [self.phase, self.permutation, self.general, self.controlled];
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0)
            || weights.iter().sum::<f64>() <= 0.0
        {
            return Err(CircuitError::InvalidWeights);
        }
        Ok(())
    }
}

/// Seeded random circuit over the given register: `depth` ops drawn from
/// the weighted gate kinds. Controlled ops pick one or two distinct control
/// qudits (never the target) with random control values. Deterministic for
/// a fixed seed.
pub fn random_circuit(
    seed: u64,
    dims: &[usize],
    depth: usize,
    mix: GateMix,
) -> Result<Circuit, CircuitError> {
    mix.validate()?;
    let sys = QuditSystem::new(dims)?;
    let n = sys.num_qudits();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ops = Vec::with_capacity(depth);

    for _ in 0..depth {
        let kind = pick_kind(&mut rng, &mix, n);
        let target = rng.gen_range(0..n);
        let d = dims[target];
        let gate = random_gate(&mut rng, d, kind)?;
        let controls = if kind == KindChoice::Controlled {
            let max_controls = (n - 1).min(2);
            let count = rng.gen_range(1..=max_controls);
            let mut candidates: Vec<usize> = (0..n).filter(|&q| q != target).collect();
            candidates.shuffle(&mut rng);
            candidates
                .into_iter()
                .take(count)
                .map(|q| (q, rng.gen_range(0..dims[q])))
                .collect()
        } else {
            Vec::new()
        };
        ops.push(GateOp::controlled(gate, target, controls));
    }

    Circuit::new(format!("random_seed{seed}"), sys, ops)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum KindChoice {
    Phase,
    Permutation,
    General,
    Controlled,
}

fn pick_kind(rng: &mut ChaCha8Rng, mix: &GateMix, n: usize) -> KindChoice {
    // A single-qudit register has nowhere to put a control; fold that
    // weight into the general case.
    let controlled = if n >= 2 { mix.controlled } else { 0.0 };
    let general = if n >= 2 {
        mix.general
    } else {
        mix.general + mix.controlled
    };
    let weights = [mix.phase, mix.permutation, general, controlled];
    let total: f64 = weights.iter().sum();
    let mut roll = rng.gen_range(0.0..total);
    for (i, w) in weights.iter().enumerate() {
        if roll < *w {
            return match i {
                0 => KindChoice::Phase,
                1 => KindChoice::Permutation,
                2 => KindChoice::General,
                _ => KindChoice::Controlled,
            };
        }
        roll -= w;
    }
    KindChoice::General
}

fn random_gate(rng: &mut ChaCha8Rng, d: usize, kind: KindChoice) -> Result<Gate, GateError> {
    match kind {
        KindChoice::Phase => {
            let angles: Vec<f64> = (0..d)
                .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
                .collect();
            Gate::phase_gate(d, &angles)
        }
        KindChoice::Permutation => {
            let mut map: Vec<usize> = (0..d).collect();
            map.shuffle(rng);
            Gate::permutation(d, map)
        }
        KindChoice::General => {
            let m = random_unitary(rng, d);
            Gate::arbitrary(d, &m)
        }
        // The controlled kind decorates a gate of any category; draw one of
        // the three base kinds for it.
        KindChoice::Controlled => {
            let base = match rng.gen_range(0..3) {
                0 => KindChoice::Phase,
                1 => KindChoice::Permutation,
                _ => KindChoice::General,
            };
            random_gate(rng, d, base)
        }
    }
}

/// Haar-ish random unitary: a complex Gaussian matrix with Gram-Schmidt
/// orthonormalized columns. Row-major.
pub fn random_unitary(rng: &mut ChaCha8Rng, d: usize) -> Vec<Complex64> {
    let mut cols: Vec<Vec<Complex64>> = (0..d)
        .map(|_| {
            (0..d)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(re, im)
                })
                .collect()
        })
        .collect();

    for c in 0..d {
        let (done, rest) = cols.split_at_mut(c);
        let col = &mut rest[0];
        // Re-orthogonalize twice for numerical headroom at small d.
        for _ in 0..2 {
            for prev in done.iter() {
                let proj: Complex64 =
                    prev.iter().zip(col.iter()).map(|(p, x)| p.conj() * x).sum();
                for (x, p) in col.iter_mut().zip(prev) {
                    *x -= proj * p;
                }
            }
        }
        let norm = col.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        for v in col.iter_mut() {
            *v /= norm;
        }
    }

    let mut row_major = vec![Complex64::new(0.0, 0.0); d * d];
    for c in 0..d {
        for r in 0..d {
            row_major[r * d + c] = cols[c][r];
        }
    }
    row_major
}
