//! Simulation and analysis of the transition wave equation, a nonlinear
//! Schrödinger equation whose classicality-enforcing term is weighted by a
//! degree of quantumness `eps` in `[0, 1]`.
//!
//! For `eps > 0` its densities coincide with those of the linear
//! Schrödinger equation with Planck's constant replaced by
//! `hbar * sqrt(eps)`; for `eps = 0` the density stays frozen. The crate
//! provides the finite-difference solver, the closed-form two-packet
//! interference oracle, Madelung (polar) diagnostics and the comparison
//! tooling used to check one against the other.
//!
//! Every numerical type is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`, which is what the tolerances in the
//! test suites assume.

// NaN must fail these checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod analytic;
pub mod error;
pub mod fringe;
pub mod madelung;
pub mod scalar;
pub mod solver;
pub mod stencil;
pub mod wavefield;

pub use error::{Error, Result};
pub use fringe::Visibility;
pub use scalar::Real;
pub use wavefield::{density, make_grid, norm, Provenance};

pub use num_complex::Complex;

pub type Grid1D = wavefield::Grid1D<f64>;
pub type ComplexField = wavefield::ComplexField<f64>;
pub type RealField = wavefield::RealField<f64>;
pub type PolarField = wavefield::PolarField<f64>;
pub type SimParams = wavefield::SimParams<f64>;
pub type DensityProfile = wavefield::DensityProfile<f64>;
pub type HydroFields = madelung::HydroFields<f64>;
pub type TwoGaussianConfig = analytic::TwoGaussianConfig<f64>;
pub type AnalyticState = analytic::AnalyticState<f64>;
pub type SolverConfig = solver::SolverConfig<f64>;
pub type RunResult = solver::RunResult<f64>;
pub type Experiment = analysis::Experiment<f64>;
pub type ComparisonReport = analysis::ComparisonReport<f64>;

pub type Grid1D32 = wavefield::Grid1D<f32>;
pub type ComplexField32 = wavefield::ComplexField<f32>;
pub type SimParams32 = wavefield::SimParams<f32>;
