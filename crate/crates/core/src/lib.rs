//! Mixed finite element solver for incompressible miscible displacement in
//! porous media with piecewise-constant porosity and permeability.
//!
//! Pressure/velocity and concentration/dispersive-flux pairs are discretized
//! with discontinuous scalars and Raviart–Thomas fluxes. Each time step solves
//! two linear saddle-point systems with coefficients lagged by one level, so
//! no nonlinear iteration is needed.
//!
//! Module map:
//! - [`mesh`]: disk/interface mesh generation, text I/O, validation
//! - [`quadrature`]: triangle and edge rules
//! - [`spaces`]: scalar and flux spaces, interpolation and projections
//! - [`coefficients`]: porosity, permeability, viscosity, dispersion tensor
//! - [`assembly`]: sparse saddle-point systems
//! - [`solver`]: sparse direct solve with residual and rank checks
//! - [`scheme`]: the decoupled time stepper
//! - [`verification`]: manufactured solution, error norms, convergence sweeps
//! - [`config`], [`vtk`], [`cli`]: run configuration, output and entry points

pub mod assembly;
pub mod cli;
pub mod coefficients;
pub mod config;
pub mod error;
pub mod geometry;
pub mod mesh;
pub mod quadrature;
pub mod scheme;
pub mod solver;
pub mod sparse;
pub mod spaces;
pub mod verification;
pub mod vtk;

pub use error::{Error, Result};
