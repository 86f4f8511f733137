#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod families;
pub mod integrability;
pub mod model;
pub mod ode;
pub mod propagator;
pub mod semiclassical;

pub use error::{Error, Result};
pub use model::{
    adiabatic_energies, eigen_gap, eigen_gap_along, hermitian_eigen, spectrum, AsPencil, CMatrix,
    DiabaticModel, Pencil, Picture, StateVector, TransitionMatrix, C64,
};
