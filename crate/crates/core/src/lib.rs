//! Finite-difference simulator for two-dimensional Kelvin–Voigt
//! thermoviscoelasticity with temperature-dependent heat capacity.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod grid;
pub mod convergence;
pub mod integrator;
pub mod material;
pub mod runner;
pub mod scenario;
pub mod sweep;
pub mod tensor;
