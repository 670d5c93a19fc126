//! Physical constants, hyperfine tensors, detunings and lattice sampling.

mod constants;
mod lattice;
mod mismatch;
mod site;
mod tensor;

pub use constants::{angular, per_s_to_per_us, per_us_to_per_s, MagneticField, PhysConstants};
pub use lattice::{
    export_lattice_json, import_lattice_json, redipolarize, sample_lattice, shell_positions,
    LatticeParams, LatticeRecord, LATTICE_CONSTANT,
};
pub use mismatch::{delta_n, detuning, energy_mismatch, mismatch_from_detuning, resonance_field};
pub use site::{check_transition, xi, Direction, NucleusSite, Species};
pub use tensor::{c_theta, dipolar_tensor, polar_angles, HfiTensor};
