pub mod consistency;
pub mod convergence;
pub mod decay;
pub mod duhamel;
pub mod fields;
pub mod resolvent;
pub mod simulate;
