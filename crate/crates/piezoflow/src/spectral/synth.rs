//! Synthetic velocity fields: closed-form test flows and reproducible random
//! ensembles.
//!
//! Random fields are built mode-by-mode over a fixed index set |m|∞ ≤ mmax in
//! a canonical iteration order, with continuum amplitudes and a power-law
//! envelope. The same seed therefore produces the *same function* on every
//! grid that resolves the band — refining n changes nothing but the sampling,
//! which is what resolution studies need.

use super::field::{ScalarField, SpectralScalar, SpectralVector, VectorField};
use super::grid::Grid;
use super::norms;
use crate::tensor::gaussian;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;

/// Taylor–Green vortex: the classic single-band solenoidal cell pattern.
///
/// 2-D: v = a(sin κx cos κy, −cos κx sin κy); in 3-D the same pattern is
/// modulated by cos κz in the first two components.
pub fn taylor_green(grid: Grid, amplitude: f64) -> VectorField {
    let kappa = grid.k_base();
    if grid.dim() == 2 {
        VectorField::from_fn(grid, |x, a| match a {
            0 => amplitude * (kappa * x[0]).sin() * (kappa * x[1]).cos(),
            _ => -amplitude * (kappa * x[0]).cos() * (kappa * x[1]).sin(),
        })
    } else {
        VectorField::from_fn(grid, |x, a| match a {
            0 => amplitude * (kappa * x[0]).sin() * (kappa * x[1]).cos() * (kappa * x[2]).cos(),
            1 => -amplitude * (kappa * x[0]).cos() * (kappa * x[1]).sin() * (kappa * x[2]).cos(),
            _ => 0.0,
        })
    }
}

/// Unidirectional shear v = (a sin(m κ x₂), 0, 0).
pub fn single_shear_mode(grid: Grid, amplitude: f64, mode: i64) -> VectorField {
    let k = grid.k_base() * mode as f64;
    VectorField::from_fn(grid, |x, a| if a == 0 { amplitude * (k * x[1]).sin() } else { 0.0 })
}

/// Grid index holding mode m on one axis.
fn index_of_mode(n: usize, m: i64) -> usize {
    if m >= 0 {
        m as usize
    } else {
        (n as i64 + m) as usize
    }
}

/// The first nonzero component decides which of (m, −m) carries the draw.
fn canonical_half(m: [i64; 3]) -> bool {
    for c in m {
        if c != 0 {
            return c > 0;
        }
    }
    false
}

fn mode_set(grid: &Grid, mmax: i64) -> Vec<[i64; 3]> {
    let mz_range = if grid.dim() == 3 { -mmax..=mmax } else { 0..=0 };
    let mut out = Vec::new();
    for mx in -mmax..=mmax {
        for my in -mmax..=mmax {
            for mz in mz_range.clone() {
                let m = [mx, my, mz];
                if m != [0, 0, 0] && canonical_half(m) {
                    out.push(m);
                }
            }
        }
    }
    out
}

fn fill_random_modes(
    grid: Grid,
    seed: u64,
    mmax: i64,
    solenoidal: bool,
) -> Vec<Vec<Complex<f64>>> {
    assert!(mmax >= 1 && (mmax as usize) < grid.n() / 2, "mode band exceeds the grid");
    let d = grid.dim();
    let n = grid.n();
    let scale = grid.points() as f64; // continuum amplitude -> unnormalized coefficient
    let mut comps = vec![vec![Complex::default(); grid.points()]; d.max(1)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for m in mode_set(&grid, mmax) {
        let m2 = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as f64;
        let envelope = (1.0 + m2).powf(-1.5);
        let mut c = [Complex::default(); 3];
        for item in c.iter_mut().take(d) {
            *item = Complex::new(gaussian(&mut rng), gaussian(&mut rng))
                * (envelope * std::f64::consts::FRAC_1_SQRT_2);
        }
        if solenoidal {
            let mf = [m[0] as f64, m[1] as f64, m[2] as f64];
            let mut mdotc = Complex::default();
            for a in 0..d {
                mdotc += mf[a] * c[a];
            }
            for a in 0..d {
                c[a] -= mf[a] * mdotc / m2;
            }
        }
        let pos = grid.flat(
            index_of_mode(n, m[0]),
            index_of_mode(n, m[1]),
            if d == 3 { index_of_mode(n, m[2]) } else { 0 },
        );
        let neg = grid.flat(
            index_of_mode(n, -m[0]),
            index_of_mode(n, -m[1]),
            if d == 3 { index_of_mode(n, -m[2]) } else { 0 },
        );
        for a in 0..d {
            comps[a][pos] = scale * c[a];
            comps[a][neg] = scale * c[a].conj();
        }
    }
    comps
}

/// Mean-free solenoidal random field with ‖v‖₂ = amplitude, supported on
/// |m|∞ ≤ mmax. Same (seed, mmax) ⇒ same continuum field at every resolution.
pub fn random_solenoidal(grid: Grid, seed: u64, amplitude: f64, mmax: i64) -> VectorField {
    let comps = fill_random_modes(grid, seed, mmax, true);
    let mut vs = SpectralVector::from_comps(grid, comps);
    let norm = norms::l2_spec_vec(&vs);
    if norm > 0.0 {
        let s = amplitude / norm;
        for a in 0..grid.dim() {
            vs.comp_mut(a).iter_mut().for_each(|z| *z *= s);
        }
    }
    vs.to_physical()
}

/// Mean-free random scalar with ‖f‖₂ = amplitude on the same canonical band.
pub fn random_scalar(grid: Grid, seed: u64, amplitude: f64, mmax: i64) -> ScalarField {
    let comps = fill_random_modes(grid, seed, mmax, false);
    let mut fs = SpectralScalar::from_data(grid, comps.into_iter().next().unwrap());
    let norm = norms::l2_spec_scalar(&fs);
    if norm > 0.0 {
        let s = amplitude / norm;
        fs.data_mut().iter_mut().for_each(|z| *z *= s);
    }
    fs.to_physical()
}

/// Localized vortex ring, built as curl of a smooth toroidal vector
/// potential A = (−y', x', 0)·exp(−(ρ²−R²)²/w⁴ − z'²/w²) centered in the
/// box, then normalized to ‖v‖₂ = amplitude. Being a curl, it is solenoidal
/// to rounding; the Gaussian tails are far below rounding at the box faces.
pub fn gaussian_vortex_ring(grid: Grid, amplitude: f64) -> VectorField {
    assert_eq!(grid.dim(), 3, "a vortex ring needs three dimensions");
    let l = grid.box_len();
    let (cx, cy, cz) = (0.5 * l, 0.5 * l, 0.5 * l);
    let radius = l / 6.0;
    let width = l / 12.0;
    let a = VectorField::from_fn(grid, |x, comp| {
        let (xp, yp, zp) = (x[0] - cx, x[1] - cy, x[2] - cz);
        let rho2 = xp * xp + yp * yp;
        let arg = -((rho2 - radius * radius) / (width * width)).powi(2)
            - (zp * zp) / (width * width);
        let g = arg.exp();
        match comp {
            0 => -yp * g,
            1 => xp * g,
            _ => 0.0,
        }
    });
    let aspec = a.to_spectral();
    let mut curl = SpectralVector::zeros(grid);
    for flat in 0..grid.points() {
        let k = grid.k_deriv_at(flat);
        let av = [aspec.comp(0)[flat], aspec.comp(1)[flat], aspec.comp(2)[flat]];
        let ik = |kc: f64, z: Complex<f64>| Complex::new(-kc * z.im, kc * z.re);
        curl.comp_mut(0)[flat] = ik(k[1], av[2]) - ik(k[2], av[1]);
        curl.comp_mut(1)[flat] = ik(k[2], av[0]) - ik(k[0], av[2]);
        curl.comp_mut(2)[flat] = ik(k[0], av[1]) - ik(k[1], av[0]);
    }
    let norm = norms::l2_spec_vec(&curl);
    if norm > 0.0 {
        let s = amplitude / norm;
        for a in 0..3 {
            curl.comp_mut(a).iter_mut().for_each(|z| *z *= s);
        }
    }
    curl.to_physical()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::norms::{h1_seminorm2_spec, l2_nodal};
    use crate::spectral::ops;
    use std::f64::consts::PI;

    fn div_residual(v: &VectorField) -> f64 {
        let vs = v.to_spectral();
        let div = norms::l2_spec_scalar(&ops::div_spec(&vs));
        let grad = h1_seminorm2_spec(&vs).sqrt();
        div / grad.max(1e-300)
    }

    #[test]
    fn taylor_green_is_solenoidal_with_known_energy() {
        for d in [2, 3] {
            let grid = Grid::new(32, 2.0 * PI, d).unwrap();
            let amp = 1.3;
            let v = taylor_green(grid, amp);
            assert!(div_residual(&v) < 1e-13);
            let e2: f64 = (0..d)
                .map(|a| l2_nodal(&grid, v.comp(a)).powi(2))
                .sum();
            // each product of squared trig factors averages to 2^{-factors}
            let want = if d == 2 {
                amp * amp * grid.volume() / 2.0
            } else {
                amp * amp * grid.volume() / 4.0
            };
            assert!((e2 - want).abs() < 1e-10 * want, "d={d}: {e2} vs {want}");
        }
    }

    #[test]
    fn shear_mode_is_solenoidal() {
        let grid = Grid::new(16, 2.0 * PI, 3).unwrap();
        let v = single_shear_mode(grid, 2.0, 3);
        assert!(div_residual(&v) < 1e-13);
    }

    #[test]
    fn random_solenoidal_is_divergence_free_and_normalized() {
        for d in [2, 3] {
            let grid = Grid::new(32, 2.0 * PI, d).unwrap();
            let v = random_solenoidal(grid, 11, 2.5, 6);
            assert!(div_residual(&v) < 1e-12);
            let norm: f64 = (0..d)
                .map(|a| l2_nodal(&grid, v.comp(a)).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!((norm - 2.5).abs() < 1e-10);
        }
    }

    #[test]
    fn random_fields_are_deterministic_and_seed_sensitive() {
        let grid = Grid::new(16, 2.0 * PI, 3).unwrap();
        let a = random_solenoidal(grid, 5, 1.0, 4);
        let b = random_solenoidal(grid, 5, 1.0, 4);
        let c = random_solenoidal(grid, 6, 1.0, 4);
        for comp in 0..3 {
            assert_eq!(a.comp(comp), b.comp(comp));
        }
        let differs = (0..3).any(|comp| a.comp(comp) != c.comp(comp));
        assert!(differs);
    }

    #[test]
    fn random_field_is_resolution_independent_on_shared_nodes() {
        let coarse = Grid::new(32, 2.0 * PI, 3).unwrap();
        let fine = Grid::new(64, 2.0 * PI, 3).unwrap();
        let vc = random_solenoidal(coarse, 42, 1.0, 8);
        let vf = random_solenoidal(fine, 42, 1.0, 8);
        for a in 0..3 {
            for iz in 0..32 {
                for iy in 0..32 {
                    for ix in 0..32 {
                        let lc = coarse.flat(ix, iy, iz);
                        let lf = fine.flat(2 * ix, 2 * iy, 2 * iz);
                        let (x, y) = (vc.comp(a)[lc], vf.comp(a)[lf]);
                        assert!((x - y).abs() < 1e-11 * (1.0 + x.abs()), "{x} vs {y}");
                    }
                }
            }
        }
    }

    #[test]
    fn scalar_field_is_mean_free() {
        let grid = Grid::new(16, 2.0 * PI, 2).unwrap();
        let f = random_scalar(grid, 3, 1.0, 5);
        assert!(f.mean().abs() < 1e-12);
        assert!((l2_nodal(&grid, f.data()) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn vortex_ring_is_solenoidal_localized_and_deterministic() {
        let grid = Grid::new(32, 2.0 * PI, 3).unwrap();
        let v = gaussian_vortex_ring(grid, 1.0);
        assert!(div_residual(&v) < 1e-12);

        let peak = v.max_abs();
        let corner = grid.flat(0, 0, 0);
        let corner_speed: f64 = (0..3)
            .map(|a| v.comp(a)[corner].powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(corner_speed < 1e-6 * peak, "ring leaks to the boundary");

        let w = gaussian_vortex_ring(grid, 1.0);
        for a in 0..3 {
            assert_eq!(v.comp(a), w.comp(a));
        }
    }
}
