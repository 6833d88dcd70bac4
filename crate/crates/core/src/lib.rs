pub mod closed_forms;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod liouvillian;
pub mod model;
pub mod spectra;
pub mod verify;

pub use error::{Error, Result};
pub use model::ModelParams;

pub type C64 = num_complex::Complex64;
