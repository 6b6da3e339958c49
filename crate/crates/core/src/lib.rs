//! Variational quantum state eigensolver: learns the largest eigenvalues of a
//! density matrix, and a circuit preparing their eigenvectors, by minimising
//! the energy of a diagonal Hamiltonian on `V(θ) ρ V†(θ)`.

pub mod ansatz;
pub mod error;
pub mod experiments;
pub mod hamiltonians;
pub mod metrics;
pub mod qmath;
pub mod seeding;
pub mod vqse;

pub use ansatz::{BlockKind, LayeredAnsatz};
pub use error::{Error, Result};
pub use hamiltonians::{AdaptiveHamiltonian, DiagonalHamiltonian, GlobalPart, Hamiltonian, LocalWeights};
pub use metrics::ErrorReport;
pub use qmath::{Bitstring, DensityMatrix, PureState};
pub use vqse::{CostVariant, EigenEstimate, LoopConfig, OptimizerConfig, OptimizerKind, ShotPlan, StepwiseSchedule};
