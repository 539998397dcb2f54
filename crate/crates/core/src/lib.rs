//! Multiscale solver for the time-dependent radiative transfer equation on
//! the unit square, built from tailored finite point space (TFPS) basis
//! functions, low-rank interface compression and a recursive skeletonization
//! factorization of the interface system.

pub mod angular;
pub mod cli;
pub mod config;
pub mod discretization;
pub mod error;
pub mod experiments;
pub mod expr;
pub mod interface_projection;
pub mod linalg;
pub mod materials;
pub mod mesh;
pub mod oracle;
pub mod rsm;
pub mod solver;
pub mod tfps_basis;

pub use error::{Result, RteError};
