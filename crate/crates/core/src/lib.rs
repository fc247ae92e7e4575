//! Zeros of theta-function representations of finite quantum systems.
//!
//! A state of a system with positions and momenta in Z(d) is represented by
//! an analytic function on a torus with exactly d zeros per cell. This crate
//! evaluates that representation, finds its zeros, tracks them under unitary
//! time evolution and classifies the closed paths they trace for periodic
//! Hamiltonians and for real powers of displacement operators.

pub mod analytic_rep;
pub mod assignment;
pub mod error;
pub mod evolution;
pub mod io;
pub mod paths;
pub mod phase_space;
pub mod theta;
pub mod zeros;

pub use analytic_rep::{AnalyticFunction, Cell, QuantumState, ZeroSet};
pub use error::{Error, Result};
pub use evolution::{Hamiltonian, PathBundle, TrackerConfig};
pub use paths::PathClassification;
pub use phase_space::DisplacementOp;
pub use num_complex::Complex64;
