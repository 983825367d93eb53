//! Field containers: physical nodal values and their spectral counterparts.
//!
//! Vector fields hold `d` components, tensor fields `d*d` in row-major (i,j)
//! order; every component is a flat x-fastest array on the shared grid.

use super::fft;
use super::grid::Grid;
use rustfft::num_complex::Complex;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    comps: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    grid: Grid,
    comps: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralScalar {
    grid: Grid,
    data: Vec<Complex<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVector {
    grid: Grid,
    comps: Vec<Vec<Complex<f64>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTensor {
    grid: Grid,
    comps: Vec<Vec<Complex<f64>>>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        ScalarField { grid, data: vec![0.0; grid.points()] }
    }

    pub fn from_data(grid: Grid, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), grid.points());
        ScalarField { grid, data }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let data = (0..grid.points()).map(|i| f(grid.node_pos(i))).collect();
        ScalarField { grid, data }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn to_spectral(&self) -> SpectralScalar {
        SpectralScalar { grid: self.grid, data: fft::forward(&self.grid, &self.data) }
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.data.iter().map(|v| v.abs()).collect()
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        VectorField { grid, comps: vec![vec![0.0; grid.points()]; grid.dim()] }
    }

    pub fn from_comps(grid: Grid, comps: Vec<Vec<f64>>) -> Self {
        assert_eq!(comps.len(), grid.dim());
        for c in &comps {
            assert_eq!(c.len(), grid.points());
        }
        VectorField { grid, comps }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3], usize) -> f64) -> Self {
        let comps = (0..grid.dim())
            .map(|a| (0..grid.points()).map(|i| f(grid.node_pos(i), a)).collect())
            .collect();
        VectorField { grid, comps }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn comp(&self, a: usize) -> &[f64] {
        &self.comps[a]
    }

    pub fn comp_mut(&mut self, a: usize) -> &mut [f64] {
        &mut self.comps[a]
    }

    pub fn to_spectral(&self) -> SpectralVector {
        SpectralVector {
            grid: self.grid,
            comps: self.comps.iter().map(|c| fft::forward(&self.grid, c)).collect(),
        }
    }

    /// Euclidean magnitude |v| at each node.
    pub fn magnitudes(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.points()];
        for c in &self.comps {
            for (o, x) in out.iter_mut().zip(c) {
                *o += x * x;
            }
        }
        out.iter_mut().for_each(|o| *o = o.sqrt());
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.magnitudes().into_iter().fold(0.0, f64::max)
    }
}

impl TensorField {
    pub fn zeros(grid: Grid) -> Self {
        TensorField { grid, comps: vec![vec![0.0; grid.points()]; grid.dim() * grid.dim()] }
    }

    pub fn from_comps(grid: Grid, comps: Vec<Vec<f64>>) -> Self {
        assert_eq!(comps.len(), grid.dim() * grid.dim());
        for c in &comps {
            assert_eq!(c.len(), grid.points());
        }
        TensorField { grid, comps }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Component (i, j).
    pub fn comp(&self, i: usize, j: usize) -> &[f64] {
        &self.comps[i * self.grid.dim() + j]
    }

    pub fn comp_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let d = self.grid.dim();
        &mut self.comps[i * d + j]
    }

    pub fn to_spectral(&self) -> SpectralTensor {
        SpectralTensor {
            grid: self.grid,
            comps: self.comps.iter().map(|c| fft::forward(&self.grid, c)).collect(),
        }
    }

    /// Frobenius magnitude at each node.
    pub fn magnitudes(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.points()];
        for c in &self.comps {
            for (o, x) in out.iter_mut().zip(c) {
                *o += x * x;
            }
        }
        out.iter_mut().for_each(|o| *o = o.sqrt());
        out
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let d = self.grid.dim();
        for i in 0..d {
            for j in (i + 1)..d {
                let (a, b) = (self.comp(i, j), self.comp(j, i));
                let bad = a.iter().zip(b).any(|(x, y)| (x - y).abs() > tol);
                if bad {
                    return false;
                }
            }
        }
        true
    }
}

impl SpectralScalar {
    pub fn zeros(grid: Grid) -> Self {
        SpectralScalar { grid, data: vec![Complex::default(); grid.points()] }
    }

    pub fn from_data(grid: Grid, data: Vec<Complex<f64>>) -> Self {
        assert_eq!(data.len(), grid.points());
        SpectralScalar { grid, data }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn data(&self) -> &[Complex<f64>] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex<f64>] {
        &mut self.data
    }

    pub fn to_physical(&self) -> ScalarField {
        ScalarField { grid: self.grid, data: fft::inverse(&self.grid, &self.data) }
    }
}

impl SpectralVector {
    pub fn zeros(grid: Grid) -> Self {
        SpectralVector { grid, comps: vec![vec![Complex::default(); grid.points()]; grid.dim()] }
    }

    pub fn from_comps(grid: Grid, comps: Vec<Vec<Complex<f64>>>) -> Self {
        assert_eq!(comps.len(), grid.dim());
        for c in &comps {
            assert_eq!(c.len(), grid.points());
        }
        SpectralVector { grid, comps }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn comp(&self, a: usize) -> &[Complex<f64>] {
        &self.comps[a]
    }

    pub fn comp_mut(&mut self, a: usize) -> &mut [Complex<f64>] {
        &mut self.comps[a]
    }

    pub fn to_physical(&self) -> VectorField {
        VectorField {
            grid: self.grid,
            comps: self.comps.iter().map(|c| fft::inverse(&self.grid, c)).collect(),
        }
    }

    /// a*x + y, componentwise over all modes.
    pub fn axpy(&mut self, a: f64, other: &SpectralVector) {
        assert_eq!(self.grid, other.grid);
        for (mine, theirs) in self.comps.iter_mut().zip(&other.comps) {
            for (m, t) in mine.iter_mut().zip(theirs) {
                *m += a * t;
            }
        }
    }
}

impl SpectralTensor {
    pub fn zeros(grid: Grid) -> Self {
        SpectralTensor {
            grid,
            comps: vec![vec![Complex::default(); grid.points()]; grid.dim() * grid.dim()],
        }
    }

    pub fn from_comps(grid: Grid, comps: Vec<Vec<Complex<f64>>>) -> Self {
        assert_eq!(comps.len(), grid.dim() * grid.dim());
        SpectralTensor { grid, comps }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn comp(&self, i: usize, j: usize) -> &[Complex<f64>] {
        &self.comps[i * self.grid.dim() + j]
    }

    pub fn comp_mut(&mut self, i: usize, j: usize) -> &mut [Complex<f64>] {
        let d = self.grid.dim();
        &mut self.comps[i * d + j]
    }

    pub fn to_physical(&self) -> TensorField {
        TensorField {
            grid: self.grid,
            comps: self.comps.iter().map(|c| fft::inverse(&self.grid, c)).collect(),
        }
    }
}
