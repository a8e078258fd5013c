//! Differential tests: the block kernels against the tensor-product
//! reference, per gate kind and on seeded random circuits.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use blocksim_core::circuit::{random_circuit, random_unitary, Circuit, GateMix, GateOp};
use blocksim_core::gates::Gate;
use blocksim_core::kernel::{apply_op, run_circuit, OpCounter};
use blocksim_core::state::{Backend, DenseState, State, DEFAULT_SPARSE_THRESHOLD};
use blocksim_core::system::QuditSystem;
use blocksim_oracle::{full_operator, oracle_run};

fn random_dims(rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = rng.gen_range(1..=4);
    (0..n).map(|_| rng.gen_range(2..=5)).collect()
}

fn random_state(rng: &mut ChaCha8Rng, sys: &QuditSystem) -> DenseState {
    let d = sys.total_dim() as usize;
    let mut amps: Vec<Complex64> = (0..d)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    DenseState::from_amplitudes(sys.clone(), amps).unwrap()
}

fn assert_matches_oracle(circuit: &Circuit, seed_label: u64) {
    let reference = State::Dense(oracle_run(circuit, circuit.initial_state()).unwrap());
    for backend in [Backend::Dense, Backend::Sparse] {
        let mut counter = OpCounter::new();
        let state =
            run_circuit(circuit, backend, DEFAULT_SPARSE_THRESHOLD, &mut counter).unwrap();
        let diff = state.max_abs_diff(&reference).unwrap();
        assert!(
            diff < 1e-10,
            "seed {seed_label} {backend}: diff {diff:.3e} on {:?}",
            circuit.system().dims()
        );
    }
}

#[test]
fn random_circuit_sweep_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xB10C);
    for k in 0..60 {
        let dims = random_dims(&mut rng);
        let depth = rng.gen_range(1..=12);
        let circuit = random_circuit(1000 + k, &dims, depth, GateMix::default()).unwrap();
        assert_matches_oracle(&circuit, 1000 + k);
    }
}

#[test]
fn single_ops_match_oracle_on_random_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0DDC);
    let sys = QuditSystem::new(&[3, 2, 4]).unwrap();

    let gates = |rng: &mut ChaCha8Rng, d: usize| -> Vec<Gate> {
        vec![
            Gate::clock_z(d, 1).unwrap(),
            Gate::phase_gate(
                d,
                &(0..d).map(|_| rng.gen_range(-3.0..3.0)).collect::<Vec<_>>(),
            )
            .unwrap(),
            Gate::shift_x(d, rng.gen_range(0..d as i64)).unwrap(),
            Gate::fourier_h(d).unwrap(),
            Gate::arbitrary(d, &random_unitary(rng, d)).unwrap(),
        ]
    };

    for target in 0..3 {
        let d = sys.dims()[target];
        for gate in gates(&mut rng, d) {
            for controls in [
                vec![],
                vec![((target + 1) % 3, 1)],
                vec![((target + 1) % 3, 1), ((target + 2) % 3, 0)],
            ] {
                let op = GateOp::controlled(gate.clone(), target, controls);
                let full = full_operator(&sys, &op).unwrap();
                for _ in 0..5 {
                    let start = random_state(&mut rng, &sys);
                    let reference = State::Dense(full.apply(&start).unwrap());

                    let mut dense = State::Dense(start.clone());
                    let mut counter = OpCounter::new();
                    apply_op(&mut dense, &op, &mut counter).unwrap();
                    assert!(dense.max_abs_diff(&reference).unwrap() < 1e-10, "{op:?}");

                    let mut sparse = State::Sparse(
                        State::Dense(start.clone()).to_sparse(DEFAULT_SPARSE_THRESHOLD),
                    );
                    apply_op(&mut sparse, &op, &mut counter).unwrap();
                    assert!(sparse.max_abs_diff(&reference).unwrap() < 1e-10, "{op:?}");
                }
            }
        }
    }
}

#[test]
fn circuits_with_nonzero_initial_state_match() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1217);
    for k in 0..10 {
        let dims = random_dims(&mut rng);
        let base = random_circuit(7000 + k, &dims, 6, GateMix::default()).unwrap();
        let initial = rng.gen_range(0..base.system().total_dim());
        let circuit = Circuit::with_initial_state(
            base.name().to_string(),
            base.system().clone(),
            base.ops().to_vec(),
            initial,
        )
        .unwrap();
        assert_matches_oracle(&circuit, 7000 + k);
    }
}
