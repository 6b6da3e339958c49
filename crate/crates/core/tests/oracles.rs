//! Fixed reference values computed independently of the implementation.

use approx::assert_abs_diff_eq;
use vqse_core::ansatz::parameter_count;
use vqse_core::experiments::{w_preparation_circuit, w_state, NoiseSpec, NoisyCircuit};
use vqse_core::hamiltonians::{lowest_levels, sorted_levels};
use vqse_core::metrics::{bound_from_cost, bound_from_purity, eigen_errors, runs_per_success};
use vqse_core::qmath::{apply_channel, fidelity_pure, KrausChannel};
use vqse_core::vqse::{covered_lambda, plan_shots};
use vqse_core::{
    AdaptiveHamiltonian, Bitstring, BlockKind, DensityMatrix, DiagonalHamiltonian, GlobalPart, LocalWeights,
};

fn bits(s: &str) -> Bitstring {
    Bitstring::from_bits(&s.bytes().map(|b| b - b'0').collect::<Vec<_>>()).unwrap()
}

#[test]
fn shot_plan_matches_hoeffding() {
    // ceil(ln(100) / (2 · 0.1² · 0.1²)) = ceil(23025.85)
    assert_eq!(plan_shots(0.1, 0.01, 0.1).unwrap().n_runs, 23026);
    // sqrt(ln(100) / (2 · 0.01 · 1e4))
    assert_abs_diff_eq!(covered_lambda(10_000, 0.1, 0.01), 0.151_742_713_5, epsilon = 1e-9);
}

#[test]
fn two_qubit_local_levels() {
    let h = LocalWeights::new(vec![0.3, 0.35], 2).unwrap();
    assert_eq!(
        h.energies().iter().map(|e| (e * 100.0).round()).collect::<Vec<_>>(),
        [35.0, 105.0, 95.0, 165.0]
    );
    let levels = lowest_levels(&h, 3).unwrap();
    let want = [(0.35, "00"), (0.95, "10"), (1.05, "01")];
    for ((e, z), (we, wz)) in levels.iter().zip(want) {
        assert_abs_diff_eq!(*e, we, epsilon = 1e-12);
        assert_eq!(*z, bits(wz));
    }
}

#[test]
fn adaptive_is_a_convex_mix() {
    let local = LocalWeights::new(vec![0.1, 0.1], 1).unwrap();
    let global = GlobalPart::new(2, vec![(bits("00"), 0.9)]).unwrap();
    assert_abs_diff_eq!(local.energy(bits("00")).unwrap(), 0.8, epsilon = 1e-12);
    assert_abs_diff_eq!(global.energy(bits("00")).unwrap(), 0.1, epsilon = 1e-12);
    assert_eq!(global.energy(bits("11")).unwrap(), 1.0);
    let mix = AdaptiveHamiltonian::new(local, global.clone(), 0.5).unwrap();
    assert_abs_diff_eq!(mix.energy(bits("00")).unwrap(), 0.45, epsilon = 1e-12);
    let end = AdaptiveHamiltonian::new(mix.local().clone(), global.clone(), 1.0).unwrap();
    assert_eq!(sorted_levels(&end), sorted_levels(&global));
}

#[test]
fn error_and_bound_arithmetic() {
    let e = eigen_errors(&[0.5, 0.5], &[0.5, 0.4], 2).unwrap();
    assert_abs_diff_eq!(e.eps_lambda, 0.01, epsilon = 1e-15);
    assert_abs_diff_eq!(e.eps_rel, 0.04, epsilon = 1e-15);
    // Maximally mixed pair with m̂ = 2: 0.25 - (0.125 + 0.25/2).
    assert_abs_diff_eq!(
        bound_from_purity(0.25, &[0.25, 0.25], 2, 2).unwrap(),
        0.0,
        epsilon = 1e-15
    );
    // Pure state at E_1 of a two-level global H saturates the cost bound.
    assert_abs_diff_eq!(
        bound_from_cost(0.3, &[0.3, 1.0], 1.0).unwrap().value,
        0.0,
        epsilon = 1e-15
    );
    assert_eq!(
        runs_per_success(&[0.1, 0.2, 1e-3, 1e-4, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5], 1e-2),
        5.0
    );
}

#[test]
fn amplitude_damping_on_excited_state() {
    let gamma = 0.3;
    let rho = DensityMatrix::basis_state(1, 1);
    let out = apply_channel(&rho, &KrausChannel::amplitude_damping(gamma).unwrap(), &[0]).unwrap();
    assert_abs_diff_eq!(out.diagonal()[0], gamma, epsilon = 1e-15);
    assert_abs_diff_eq!(out.diagonal()[1], 1.0 - gamma, epsilon = 1e-15);
}

#[test]
fn brickwork_parameter_counts() {
    for n in 2..=8 {
        for layers in 1..=4 {
            assert_eq!(
                parameter_count(n, layers, BlockKind::RyCz),
                4 * layers * (n / 2 + (n - 1) / 2)
            );
        }
    }
}

#[test]
fn noiseless_w_preparation_is_exact() {
    let circuit = NoisyCircuit::new(NoiseSpec::depolarizing(0.0, 0.0)).unwrap();
    let rho = circuit
        .run(&DensityMatrix::basis_state(3, 0), &w_preparation_circuit())
        .unwrap();
    assert_abs_diff_eq!(fidelity_pure(&rho, &w_state()).unwrap(), 1.0, epsilon = 1e-12);
    let cnots = w_preparation_circuit().iter().filter(|g| g.arity() == 2).count();
    assert_eq!(cnots, 3);
}
