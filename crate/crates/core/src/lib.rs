//! Numerical verification toolkit for linear nonlocal parabolic equations
//! `d_t u + L u = 0` with symmetric, uniformly elliptic kernels of order `2s`.

// Range checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod exterior;
pub mod geometry;
pub mod kernels;
pub mod nonlocal_op;
pub mod oracles;
pub mod par;
pub mod quadrature;
pub mod solver;
pub mod tails;

pub use error::{Error, Result};
pub use exterior::{ExteriorData, FarTerm};
pub use geometry::{Grid, SpaceTimeField};
pub use kernels::{KernelFamily, KernelSpec, Modulation};
pub use nonlocal_op::{assemble, AssembledOperator};
pub use par::Execution;
pub use solver::{solve, weak_residual, Scheme, SolveSpec, TestFunction, WeakForm};
