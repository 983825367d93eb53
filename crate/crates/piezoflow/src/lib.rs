//! piezoflow — pseudo-spectral solver and verification harness for unsteady
//! incompressible flows whose viscosity depends on pressure and shear rate.
//!
//! The crate is organized around the pipeline
//!
//! 1. [`constitutive`]: viscosity laws S(p,D) = nu(p,|D|^2) D and numerical
//!    certification of their ellipticity / pressure-sensitivity constants
//!    (C1, C2, gamma0);
//! 2. [`spectral`]: periodic-box field algebra — FFT-diagonal operators,
//!    Helmholtz projection, mollification, Orlicz/Luxemburg norms;
//! 3. [`pressure`]: the Picard fixed point for the nonlinear pressure
//!    equation -Lap p = div div(v (x) v - S(p, D(v))), with contraction
//!    monitoring against gamma0;
//! 4. [`stepper`]: IMEX time integration of the delta-regularized momentum
//!    equation with biharmonic damping, energy ledger, and delta sweeps;
//! 5. [`analysis`]: stand-alone inequality/exponent verification harness;
//! 6. [`cli`]: the `piezoflow` binary gluing everything to declarative
//!    config files.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod constitutive;
pub mod error;
pub mod manifest;
pub mod plot;
pub mod pressure;
pub mod snapshot;
pub mod spectral;
pub mod stepper;
pub mod tensor;

pub use error::{Error, Result};
