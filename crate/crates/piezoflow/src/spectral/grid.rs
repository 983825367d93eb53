//! Uniform periodic grid with x-fastest flat storage.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Periodic box discretization: `n` nodes per axis, edge length `box_len`,
/// dimension 2 or 3. Flat index = ix + n*(iy + n*iz), x fastest (iz = 0 in 2-D).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    box_len: f64,
    dim: usize,
}

impl Grid {
    pub fn new(n: usize, box_len: f64, dim: usize) -> Result<Self> {
        if !n.is_power_of_two() || n < 4 {
            return Err(Error::ConfigGeneral(format!(
                "grid n must be a power of two >= 4, got {n}"
            )));
        }
        if !(box_len.is_finite() && box_len > 0.0) {
            return Err(Error::ConfigGeneral(format!("grid L must be positive, got {box_len}")));
        }
        if dim != 2 && dim != 3 {
            return Err(Error::ConfigGeneral(format!("grid d must be 2 or 3, got {dim}")));
        }
        Ok(Grid { n, box_len, dim })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_len(&self) -> f64 {
        self.box_len
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Total node count n^d.
    pub fn points(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn cell_volume(&self) -> f64 {
        (self.box_len / self.n as f64).powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.box_len.powi(self.dim as i32)
    }

    /// Signed integer mode for axis index i, FFT ordering (Nyquist mapped to -n/2).
    pub fn mode_of(&self, i: usize) -> i64 {
        debug_assert!(i < self.n);
        if i <= self.n / 2 - 1 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// 2 pi / L — spacing of the wavenumber lattice.
    pub fn k_base(&self) -> f64 {
        2.0 * PI / self.box_len
    }

    /// Largest integer mode kept by the 2/3 rule: |m| < n/3 strictly.
    /// Quadratic products of kept modes then alias only onto discarded modes,
    /// so truncation is an exact Galerkin projection.
    pub fn max_kept_mode(&self) -> i64 {
        ((self.n as f64) / 3.0).ceil() as i64 - 1
    }

    pub fn decompose(&self, flat: usize) -> [usize; 3] {
        let ix = flat % self.n;
        let rest = flat / self.n;
        let iy = rest % self.n;
        let iz = rest / self.n;
        [ix, iy, iz]
    }

    pub fn flat(&self, ix: usize, iy: usize, iz: usize) -> usize {
        ix + self.n * (iy + self.n * iz)
    }

    /// Wavenumber vector at a flat spectral index (third component 0 in 2-D).
    pub fn k_at(&self, flat: usize) -> [f64; 3] {
        let [ix, iy, iz] = self.decompose(flat);
        let kb = self.k_base();
        [
            kb * self.mode_of(ix) as f64,
            kb * self.mode_of(iy) as f64,
            if self.dim == 3 { kb * self.mode_of(iz) as f64 } else { 0.0 },
        ]
    }

    pub fn k2_at(&self, flat: usize) -> f64 {
        let k = self.k_at(flat);
        k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
    }

    /// Wavenumber for derivative multipliers: like `k_at`, but the Nyquist
    /// index (mode -n/2, which has no conjugate partner on a real grid)
    /// contributes zero, keeping ik-derivatives of real fields real.
    pub fn k_deriv_at(&self, flat: usize) -> [f64; 3] {
        let [ix, iy, iz] = self.decompose(flat);
        let kb = self.k_base();
        let half = (self.n / 2) as i64;
        let m = |i: usize| {
            let m = self.mode_of(i);
            if m == -half {
                0.0
            } else {
                m as f64
            }
        };
        [
            kb * m(ix),
            kb * m(iy),
            if self.dim == 3 { kb * m(iz) } else { 0.0 },
        ]
    }

    /// Squared derivative wavenumber (Nyquist-free |k|²).
    pub fn k2_deriv_at(&self, flat: usize) -> f64 {
        let k = self.k_deriv_at(flat);
        k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
    }

    /// True iff the mode at this flat index survives the 2/3-rule truncation.
    pub fn keep(&self, flat: usize) -> bool {
        let [ix, iy, iz] = self.decompose(flat);
        let m = self.max_kept_mode();
        self.mode_of(ix).abs() <= m
            && self.mode_of(iy).abs() <= m
            && (self.dim == 2 || self.mode_of(iz).abs() <= m)
    }

    /// Physical coordinates of a node.
    pub fn node_pos(&self, flat: usize) -> [f64; 3] {
        let [ix, iy, iz] = self.decompose(flat);
        let h = self.box_len / self.n as f64;
        [
            h * ix as f64,
            h * iy as f64,
            if self.dim == 3 { h * iz as f64 } else { 0.0 },
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructor_validates() {
        assert!(Grid::new(32, 2.0 * PI, 3).is_ok());
        assert!(Grid::new(5, 1.0, 3).is_err());
        assert!(Grid::new(2, 1.0, 3).is_err());
        assert!(Grid::new(16, 0.0, 3).is_err());
        assert!(Grid::new(16, 1.0, 4).is_err());
    }

    #[test]
    fn mode_layout_matches_fft_ordering() {
        let g = Grid::new(8, 1.0, 2).unwrap();
        let modes: Vec<i64> = (0..8).map(|i| g.mode_of(i)).collect();
        assert_eq!(modes, vec![0, 1, 2, 3, -4, -3, -2, -1]);
    }

    #[test]
    fn dealias_cutoff_keeps_products_clean() {
        // kept modes m, m' satisfy |m + m'| <= 2*max < n - max, so aliases
        // of kept-mode products land outside the kept set
        for n in [8usize, 16, 32, 64, 128] {
            let g = Grid::new(n, 1.0, 2).unwrap();
            let m = g.max_kept_mode();
            assert!(3 * m < n as i64, "n={n}: 3*{m} >= {n}");
            assert!(m >= 1);
        }
    }

    #[test]
    fn flat_roundtrip() {
        let g = Grid::new(16, 1.0, 3).unwrap();
        for flat in [0usize, 1, 15, 16, 255, 256, 4095] {
            let [ix, iy, iz] = g.decompose(flat);
            assert_eq!(g.flat(ix, iy, iz), flat);
        }
    }
}
