pub mod bounds;
pub mod curve;
pub mod eval;
pub mod gen;
pub mod train;
pub mod unbiasedness;
pub mod verify_coeffs;
