//! NV level schemes, Lindblad generators, steady states and time evolution.

mod evolve;
mod joint;
mod model;
pub(crate) mod operators;
mod steady;
mod superop;

pub use evolve::{evolve, uniform_grid};
pub use joint::{
    joint_lindblad, nuclear_spin_matrices, JointSystem, JOINT_LIOUVILLE_CAP, JOINT_MAX_SITES,
};
pub use model::{LevelScheme, NvLevel, NvModel, NvRates, PumpConfig};
pub use operators::{
    build_dissipators, build_nv_hamiltonian, spin_operators, transition, CMat, Channel,
    HfiCoupling, KnightField,
};
pub use steady::{
    smallest_singular_values, steady_state, steady_state_with, DensityOperator, SteadyOptions,
};
pub use superop::{
    left, lindbladian, right, superoperator_matrix, unvectorize, vectorize, LiouvilleOperator,
};

use crate::error::Result;

/// Generator L_NV of the bare NV centre.
pub fn nv_generator(model: &NvModel) -> LiouvilleOperator {
    superoperator_matrix(
        &build_nv_hamiltonian(model),
        &build_dissipators(model),
        None,
        model_labels(model),
    )
}

/// Steady state of the bare NV centre.
pub fn nv_steady_state(model: &NvModel) -> Result<DensityOperator> {
    steady_state(&nv_generator(model))
}

fn model_labels(model: &NvModel) -> Vec<String> {
    model
        .levels
        .basis()
        .iter()
        .map(|l| l.label().to_string())
        .collect()
}
