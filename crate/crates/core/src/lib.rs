//! Multisymplectic Einstein-Hilbert engine on jets of Lorentzian metrics.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evolution_1d;
pub mod cli_harness;
pub mod curvature;
pub mod eh_lagrangian;
pub mod first_order_equiv;
pub mod jet_algebra;
pub mod legendre_hamiltonian;
pub mod matter_em;
pub mod metric_dsl;
pub mod multivector_solver;
pub mod noether;

pub use error::{Error, Result};
