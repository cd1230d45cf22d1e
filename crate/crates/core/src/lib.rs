//! Quantum annealing of transverse-field Ising models by path-integral and
//! Green's-function Monte Carlo, together with an exact laboratory that
//! checks the ergodicity ingredients of both chains on enumerable systems.

pub mod error;
pub mod gfmc;
pub mod ising;
pub mod lab;
pub mod pimc;
pub mod sa;
pub mod schedules;
pub mod trace;

pub use error::{QaeError, Result};
