//! Periodic pseudo-spectral toolbox: grid and mode bookkeeping, FFT plumbing,
//! field containers, diagonal operators, norms, and synthetic flows.

pub mod fft;
pub mod field;
pub mod grid;
pub mod norms;
pub mod ops;
pub mod synth;

pub use field::{
    ScalarField, SpectralScalar, SpectralTensor, SpectralVector, TensorField, VectorField,
};
pub use grid::Grid;
