//! d-dimensional complex FFT plumbing over flat x-fastest arrays.
//!
//! rustfft supplies the 1-D kernels; this module sweeps them along each axis
//! (gather/scatter for the strided axes). Convention: forward = unnormalized
//! DFT, inverse carries the 1/N. All transforms are sequential and therefore
//! bit-deterministic.

use super::grid::Grid;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    map.entry((n, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

/// In-place 1-D transforms along every axis of the (2- or 3-D) cube.
pub fn transform_axes(grid: &Grid, data: &mut [Complex<f64>], inverse: bool) {
    let n = grid.n();
    debug_assert_eq!(data.len(), grid.points());
    let fft = plan(n, inverse);
    let mut scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];

    // axis 0: contiguous lines
    for line in data.chunks_exact_mut(n) {
        fft.process_with_scratch(line, &mut scratch);
    }

    let mut gathered = vec![Complex::default(); n];
    // axis 1: stride n, one line per (ix, iz)
    let planes = if grid.dim() == 3 { n } else { 1 };
    for iz in 0..planes {
        for ix in 0..n {
            let base = ix + n * n * iz;
            for (j, g) in gathered.iter_mut().enumerate() {
                *g = data[base + j * n];
            }
            fft.process_with_scratch(&mut gathered, &mut scratch);
            for (j, g) in gathered.iter().enumerate() {
                data[base + j * n] = *g;
            }
        }
    }

    // axis 2: stride n^2, one line per (ix, iy)
    if grid.dim() == 3 {
        let n2 = n * n;
        for iy in 0..n {
            for ix in 0..n {
                let base = ix + n * iy;
                for (j, g) in gathered.iter_mut().enumerate() {
                    *g = data[base + j * n2];
                }
                fft.process_with_scratch(&mut gathered, &mut scratch);
                for (j, g) in gathered.iter().enumerate() {
                    data[base + j * n2] = *g;
                }
            }
        }
    }
}

/// Real nodal values -> spectral coefficients (unnormalized).
pub fn forward(grid: &Grid, values: &[f64]) -> Vec<Complex<f64>> {
    debug_assert_eq!(values.len(), grid.points());
    let mut data: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    transform_axes(grid, &mut data, false);
    data
}

/// Spectral coefficients -> real nodal values (applies the 1/N).
pub fn inverse(grid: &Grid, coeffs: &[Complex<f64>]) -> Vec<f64> {
    debug_assert_eq!(coeffs.len(), grid.points());
    let mut data = coeffs.to_vec();
    transform_axes(grid, &mut data, true);
    let scale = 1.0 / grid.points() as f64;
    data.iter().map(|c| c.re * scale).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn roundtrip_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (n, d) in [(8usize, 2usize), (16, 2), (8, 3), (16, 3)] {
            let grid = Grid::new(n, 2.0 * PI, d).unwrap();
            let values: Vec<f64> = (0..grid.points()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let back = inverse(&grid, &forward(&grid, &values));
            let err: f64 = values
                .iter()
                .zip(&back)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-12, "roundtrip error {err} at n={n}, d={d}");
        }
    }

    #[test]
    fn single_mode_lands_on_the_right_coefficient() {
        let grid = Grid::new(16, 2.0 * PI, 2).unwrap();
        // f = cos(3x) -> coefficients N/2 at m=(3,0) and m=(-3,0)
        let values: Vec<f64> = (0..grid.points())
            .map(|i| {
                let [x, _, _] = grid.node_pos(i);
                (3.0 * x).cos()
            })
            .collect();
        let coeffs = forward(&grid, &values);
        let expect = grid.points() as f64 / 2.0;
        for (flat, c) in coeffs.iter().enumerate() {
            let [ix, iy, _] = grid.decompose(flat);
            let (mx, my) = (grid.mode_of(ix), grid.mode_of(iy));
            let want = if my == 0 && (mx == 3 || mx == -3) { expect } else { 0.0 };
            assert!(
                (c.re - want).abs() < 1e-9 && c.im.abs() < 1e-9,
                "mode ({mx},{my}): {c}"
            );
        }
    }
}
