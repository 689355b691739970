//! Moment-constrained approximation of the Lieb functional for two fermions
//! on a bounded interval.
//!
//! The crate discretizes the antisymmetric two-particle space with P1 finite
//! elements, replaces the density constraint by finitely many moment
//! constraints against P1 hat functions, and solves the resulting convex
//! problem by column generation: a dual SDP yields a potential, the ground
//! states of the corresponding Hamiltonian enlarge the pool, and a primal SDP
//! followed by spectral sparsification updates the mixed state.

pub mod cli;
pub mod driver;
pub mod eigen;
pub mod error;
pub mod fem1d;
pub mod linalg;
pub mod moments;
pub mod pair_space;
pub mod quadrature;
pub mod sdp;
pub mod selftest;
pub mod sparsify;

pub use error::{Error, Result};
