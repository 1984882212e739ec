pub mod distortion;
pub mod error;
pub mod maps;
pub mod orbit;
pub mod probe;
pub mod sphere;
pub mod vecgeom;
pub mod verify;
pub mod zorich;

pub use error::{Error, Result};
