pub mod model;
pub mod recovery;
pub mod spectral;
pub mod verify;
