pub mod basis;
pub mod error;
pub mod gamma;
pub mod kernels;
pub mod semigroups;
pub mod spaces;
pub mod verify;

pub use error::{Error, Result};
pub use nalgebra;
