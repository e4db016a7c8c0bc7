//! Lyapunov operators and irreversible representations for Schrödinger
//! evolution on a discretized energy half-line.
//!
//! The energy line `[-L, L)` is sampled on `n_sigma` bin-centred points and
//! paired with the dual time lattice of step `dtau = pi / L`. Hardy space
//! `H^2_+` is the set of functions whose time profile lives on `tau > 0`;
//! on the lattice every projection, shift and polar identity below holds to
//! rounding error.

pub mod error;
pub mod evolution;
pub mod grid;
pub mod hardy;
pub mod lambda;
pub mod linop;
pub mod lyapunov;
pub mod ordering;
pub mod selftest;
pub mod states;

pub use error::{Error, Result};
pub use grid::{embed, inner, make_grid, project_halfline, restrict, GridSpec, LatticeTime, Side, Space, StateVector, TimePolicy};
pub use linop::LinOp;
