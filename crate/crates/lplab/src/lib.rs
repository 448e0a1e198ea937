//! Simulation and verification lab for limit theorems of partial sums of
//! functionals of heavy-tailed linear processes.

pub mod error;
pub mod innovations;
pub mod kernel;
pub mod labcli;
pub mod linproc;
pub mod quad;
pub mod regvar;
pub mod rng;
pub mod scaling;
pub mod stable;

pub use error::{LabError, Result};
