//! Product-state approximations for signed transverse-field Ising Hamiltonians.

pub mod constants;
pub mod exact;
pub mod instance;
pub mod relax;
pub mod cli;
pub mod rounding;
