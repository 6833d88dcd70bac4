//! Analytic solutions used as oracles for the numerics.

mod clebsch;
mod halflife;
mod hp;
mod rotor;
mod thermal;
mod triangular;

pub use clebsch::{clebsch_gordan, Clebsch};
pub use halflife::{ep_halflife, halflife_with_ratio};
pub use hp::{bogoliubov, hp_leading_apply, hp_states, HPStates};
pub use rotor::{jx_over_j, jz_over_j, o3_eigenvalue, o3_expectation, o3_propagate};
pub use thermal::{thermal_ss, tl_magnetization_per_spin, ThermalSS};
pub use triangular::{
    kernel_dimension, triangular_eigenvalue, triangular_eigenvector, triangular_solution, TriangularSolution,
};
