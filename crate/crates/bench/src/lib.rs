//! Shared fixtures for the benchmarks.

use vqse_core::experiments::random_low_rank_state;
use vqse_core::hamiltonians::default_local_weights;
use vqse_core::{seeding, BlockKind, DensityMatrix, LayeredAnsatz, LocalWeights};

/// A rank-16 state, a random ansatz and default local weights on `n` qubits.
pub struct Fixture {
    pub rho: DensityMatrix,
    pub ansatz: LayeredAnsatz,
    pub local: LocalWeights,
}

pub fn fixture(n: usize, layers: usize, block: BlockKind) -> Fixture {
    let rho = random_low_rank_state(n, 4, 1).expect("state");
    let ansatz = LayeredAnsatz::random(n, layers, block, &mut seeding::stream(2, 0)).expect("ansatz");
    let local = default_local_weights(n, (n + 1).min(6)).expect("weights");
    Fixture { rho, ansatz, local }
}
