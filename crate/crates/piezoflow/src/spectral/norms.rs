//! Discrete norms: plain Lᵖ by nodal quadrature, Parseval-weighted spectral
//! L², Luxemburg norms for the Orlicz pair
//!
//!   φ(s) = s²(1+s²)^{(r−2)/2},   ψ(s) = min(s⁶, s^{3r/(3−r)}),
//!
//! threshold-split norms, and the weighted second-gradient functional
//! I_r(v) = ∫(1+|D(v)|²)^{(r−2)/2} |D(∇v)|² dx.
//!
//! All integrals are nodal sums times the cell volume, which is spectrally
//! accurate for band-limited integrands.

use super::fft;
use super::field::{SpectralScalar, SpectralVector, VectorField};
use super::grid::Grid;
use super::ops;
use rustfft::num_complex::Complex;

/// ‖f‖₂ from nodal samples.
pub fn l2_nodal(grid: &Grid, values: &[f64]) -> f64 {
    (grid.cell_volume() * values.iter().map(|x| x * x).sum::<f64>()).sqrt()
}

/// ‖f‖_q from nodal magnitude samples, q ≥ 1.
pub fn lq_nodal(grid: &Grid, magnitudes: &[f64], q: f64) -> f64 {
    assert!(q >= 1.0);
    (grid.cell_volume() * magnitudes.iter().map(|m| m.abs().powf(q)).sum::<f64>()).powf(1.0 / q)
}

/// L² inner product (f, g) by nodal quadrature.
pub fn inner_nodal(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    grid.cell_volume() * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

/// ‖f‖₂ of a spectral coefficient slice (discrete Parseval weight).
pub fn l2_spec_slice(grid: &Grid, coeffs: &[Complex<f64>]) -> f64 {
    let w = grid.cell_volume() / grid.points() as f64;
    (w * coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
}

pub fn l2_spec_scalar(f: &SpectralScalar) -> f64 {
    l2_spec_slice(&f.grid(), f.data())
}

pub fn l2_spec_vec(v: &SpectralVector) -> f64 {
    let grid = v.grid();
    (0..grid.dim())
        .map(|a| l2_spec_slice(&grid, v.comp(a)).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// ‖∇v‖₂² straight from the coefficients: Σ |k|² |v̂|².
pub fn h1_seminorm2_spec(v: &SpectralVector) -> f64 {
    let grid = v.grid();
    let w = grid.cell_volume() / grid.points() as f64;
    let mut sum = 0.0;
    for a in 0..grid.dim() {
        for (flat, z) in v.comp(a).iter().enumerate() {
            sum += grid.k2_deriv_at(flat) * z.norm_sqr();
        }
    }
    w * sum
}

/// Young functions for the Luxemburg construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Orlicz {
    /// φ(s) = s²(1+s²)^{(r−2)/2}
    PhiR(f64),
    /// ψ(s) = min(s⁶, s^{3r/(3−r)})
    PsiR(f64),
    /// s^q — the Luxemburg norm then coincides with the plain L^q norm
    Power(f64),
}

impl Orlicz {
    pub fn eval(&self, s: f64) -> f64 {
        let s = s.abs();
        match *self {
            Orlicz::PhiR(r) => s * s * (1.0 + s * s).powf(0.5 * (r - 2.0)),
            Orlicz::PsiR(r) => {
                let p = 3.0 * r / (3.0 - r);
                s.powi(6).min(s.powf(p))
            }
            Orlicz::Power(q) => s.powf(q),
        }
    }
}

/// Luxemburg norm inf{λ > 0 : cellvol·Σ φ(|f|/λ) ≤ 1} by monotone bisection.
pub fn luxemburg_norm(grid: &Grid, magnitudes: &[f64], kind: Orlicz) -> f64 {
    luxemburg_norm_with_tol(grid, magnitudes, kind, 1e-10)
}

pub fn luxemburg_norm_with_tol(
    grid: &Grid,
    magnitudes: &[f64],
    kind: Orlicz,
    rel_tol: f64,
) -> f64 {
    let w = grid.cell_volume();
    let modular =
        |lam: f64| -> f64 { w * magnitudes.iter().map(|&m| kind.eval(m / lam)).sum::<f64>() };
    let max = magnitudes.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if max == 0.0 {
        return 0.0;
    }
    let mut hi = max;
    let mut grow = 0;
    while modular(hi) > 1.0 {
        hi *= 2.0;
        grow += 1;
        assert!(grow < 4000, "luxemburg bracket failed to grow");
    }
    let mut lo = hi;
    let mut shrink = 0;
    while modular(lo) <= 1.0 && lo > 0.0 {
        lo *= 0.5;
        shrink += 1;
        if shrink >= 4000 {
            lo = 0.0;
            break;
        }
    }
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if modular(mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Which side of the |f| = 1 threshold a split norm integrates over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitSide {
    /// nodes with |f| ≤ 1
    Small,
    /// nodes with |f| > 1
    Large,
}

/// L^s norm restricted to the nodes on one side of |f| = 1.
pub fn split_norm(grid: &Grid, magnitudes: &[f64], s: f64, side: SplitSide) -> f64 {
    assert!(s >= 1.0);
    let sum: f64 = magnitudes
        .iter()
        .filter(|&&m| match side {
            SplitSide::Small => m.abs() <= 1.0,
            SplitSide::Large => m.abs() > 1.0,
        })
        .map(|m| m.abs().powf(s))
        .sum();
    (grid.cell_volume() * sum).powf(1.0 / s)
}

/// ∫ φ(|f|) dx with φ the r-weighted Young function.
pub fn phi_integral(grid: &Grid, magnitudes: &[f64], r: f64) -> f64 {
    let phi = Orlicz::PhiR(r);
    grid.cell_volume() * magnitudes.iter().map(|&m| phi.eval(m)).sum::<f64>()
}

/// I_r(v) = ∫ (1+|D(v)|²)^{(r−2)/2} |D(∇v)|² dx by nodal quadrature.
///
/// D(∇v) symmetrizes each column of the Hessian: its (i,j,k) entry is
/// (∂_i∂_k v_j + ∂_j∂_k v_i)/2, assembled from d(d+1)/2 inverse transforms
/// per velocity component.
pub fn i_r_functional(v: &VectorField, r: f64) -> f64 {
    let grid = v.grid();
    let d = grid.dim();
    let n_pts = grid.points();
    let vs = v.to_spectral();
    let dmag = ops::sym_grad_spec(&vs).to_physical().magnitudes();

    let mut pair_idx = [[0usize; 3]; 3];
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for b in 0..d {
        for c in b..d {
            pair_idx[b][c] = pairs.len();
            pair_idx[c][b] = pairs.len();
            pairs.push((b, c));
        }
    }

    // hess[a][pair] holds nodal ∂_b∂_c v_a
    let mut hess: Vec<Vec<Vec<f64>>> = Vec::with_capacity(d);
    for a in 0..d {
        let mut per_comp = Vec::with_capacity(pairs.len());
        for &(b, c) in &pairs {
            let coeffs: Vec<Complex<f64>> = vs
                .comp(a)
                .iter()
                .enumerate()
                .map(|(flat, z)| {
                    let k = grid.k_deriv_at(flat);
                    -k[b] * k[c] * z
                })
                .collect();
            per_comp.push(fft::inverse(&grid, &coeffs));
        }
        hess.push(per_comp);
    }

    let mut acc = 0.0;
    for flat in 0..n_pts {
        let h = |a: usize, b: usize, c: usize| hess[a][pair_idx[b][c]][flat];
        let mut s2 = 0.0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let m = 0.5 * (h(j, i, k) + h(i, j, k));
                    s2 += m * m;
                }
            }
        }
        let w = dmag[flat];
        acc += (1.0 + w * w).powf(0.5 * (r - 2.0)) * s2;
    }
    grid.cell_volume() * acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::field::ScalarField;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_field(grid: Grid, seed: u64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kb = grid.k_base();
        let modes: Vec<(f64, f64, [f64; 3])> = (0..10)
            .map(|_| {
                let m = |r: &mut ChaCha8Rng| r.gen_range(-4..=4) as f64;
                let mut k = [m(&mut rng), m(&mut rng), m(&mut rng)];
                if grid.dim() == 2 {
                    k[2] = 0.0;
                }
                (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI), k)
            })
            .collect();
        ScalarField::from_fn(grid, |x| {
            modes
                .iter()
                .map(|(a, ph, m)| {
                    a * (kb * (m[0] * x[0] + m[1] * x[1] + m[2] * x[2]) + ph).cos()
                })
                .sum()
        })
    }

    #[test]
    fn plancherel_matches_nodal_l2() {
        for (n, d) in [(16, 2), (16, 3)] {
            let grid = Grid::new(n, 2.0 * PI, d).unwrap();
            for seed in 0..5 {
                let f = random_field(grid, seed);
                let a = l2_nodal(&grid, f.data());
                let b = l2_spec_scalar(&f.to_spectral());
                assert!((a - b).abs() <= 1e-12 * a.max(1e-300), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn luxemburg_of_zero_field_is_zero() {
        let grid = Grid::new(8, 1.0, 2).unwrap();
        let mags = vec![0.0; grid.points()];
        assert_eq!(luxemburg_norm(&grid, &mags, Orlicz::PhiR(1.9)), 0.0);
    }

    #[test]
    fn luxemburg_power_two_of_constant_field() {
        let box_len = 2.5;
        let grid = Grid::new(8, box_len, 3).unwrap();
        let c = 1.7;
        let mags = vec![c; grid.points()];
        let want = c * grid.volume().sqrt();
        let got = luxemburg_norm(&grid, &mags, Orlicz::Power(2.0));
        assert!((got - want).abs() < 1e-9 * want);
    }

    #[test]
    fn luxemburg_power_q_matches_direct_lq() {
        let grid = Grid::new(16, 2.0 * PI, 2).unwrap();
        for (seed, q) in [(1u64, 2.0), (2, 3.0), (3, 4.5)] {
            let f = random_field(grid, seed);
            let mags = f.magnitudes();
            let direct = lq_nodal(&grid, &mags, q);
            let lux = luxemburg_norm_with_tol(&grid, &mags, Orlicz::Power(q), 1e-13);
            assert!(
                (lux - direct).abs() <= 1e-8 * direct,
                "q={q}: {lux} vs {direct}"
            );
        }
    }

    #[test]
    fn young_function_branch_values() {
        let r = 1.9;
        let phi = Orlicz::PhiR(r);
        assert!((phi.eval(1.0) - 2.0_f64.powf(0.5 * (r - 2.0))).abs() < 1e-15);
        let psi = Orlicz::PsiR(r);
        assert!((psi.eval(1.0) - 1.0).abs() < 1e-15);
        // below the knee the sextic is smaller, above it the 3r/(3−r) power
        let p = 3.0 * r / (3.0 - r);
        assert!((psi.eval(0.5) - 0.5_f64.powi(6)).abs() < 1e-15);
        assert!((psi.eval(2.0) - 2.0_f64.powf(p)).abs() < 1e-12);
    }

    #[test]
    fn split_norm_of_small_field_has_empty_large_part() {
        let grid = Grid::new(8, 1.0, 2).unwrap();
        let mags = vec![0.3; grid.points()];
        assert_eq!(split_norm(&grid, &mags, 2.0, SplitSide::Large), 0.0);
        assert!(split_norm(&grid, &mags, 2.0, SplitSide::Small) > 0.0);
    }

    #[test]
    fn split_norm_bump_matches_dense_quadrature() {
        let box_len = 2.0 * PI;
        let grid = Grid::new(128, box_len, 2).unwrap();
        let profile = |x: f64| 2.0 * (-4.0 * (0.5 * x).sin().powi(2)).exp();
        let f = ScalarField::from_fn(grid, |x| profile(x[0]));
        let s = 3.0;
        let got = split_norm(&grid, &f.magnitudes(), s, SplitSide::Large);

        let m = 1 << 20;
        let h = box_len / m as f64;
        let mut acc = 0.0;
        for j in 0..m {
            let val = profile(h * j as f64);
            if val > 1.0 {
                acc += val.powf(s);
            }
        }
        let want = (box_len * h * acc).powf(1.0 / s); // extra L from the y-extent
        assert!(
            (got - want).abs() < 2e-2 * want,
            "split norm {got} vs dense {want}"
        );
    }

    #[test]
    fn second_gradient_functional_vanishes_at_rest() {
        let grid = Grid::new(8, 2.0 * PI, 3).unwrap();
        let v = VectorField::zeros(grid);
        assert_eq!(i_r_functional(&v, 1.9), 0.0);
    }

    #[test]
    fn second_gradient_functional_at_r_two_is_plancherel_energy() {
        let grid = Grid::new(16, 2.0 * PI, 3).unwrap();
        let comps = (0..3)
            .map(|a| random_field(grid, 90 + a as u64).into_data())
            .collect();
        let mut vs = VectorField::from_comps(grid, comps).to_spectral();
        ops::leray_project_spec(&mut vs);
        let v = vs.to_physical();

        // spectral oracle: Σ_{ijk} ‖(k_k(k_i v̂_j + k_j v̂_i)/2‖² with Parseval weight
        let w = grid.cell_volume() / grid.points() as f64;
        let mut oracle = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for kderiv in 0..3 {
                    let mut sum = 0.0;
                    for flat in 0..grid.points() {
                        let k = grid.k_deriv_at(flat);
                        let m = 0.5
                            * k[kderiv]
                            * (k[i] * vs.comp(j)[flat] + k[j] * vs.comp(i)[flat]);
                        sum += m.norm_sqr();
                    }
                    oracle += w * sum;
                }
            }
        }
        let got = i_r_functional(&v, 2.0);
        assert!((got - oracle).abs() <= 1e-10 * oracle, "{got} vs {oracle}");
    }

    #[test]
    fn second_gradient_functional_single_shear_mode_oracle() {
        let box_len = 2.0 * PI;
        let grid = Grid::new(32, box_len, 3).unwrap();
        let amp = 0.9;
        let r = 1.9;
        let v = VectorField::from_fn(grid, |x, a| if a == 0 { amp * x[1].sin() } else { 0.0 });
        let got = i_r_functional(&v, r);

        // dense 1-D quadrature of L²·∫(1 + a²cos²y/2)^{(r−2)/2}·(a²sin²y/2) dy
        let m = 1 << 16;
        let h = box_len / m as f64;
        let mut acc = 0.0;
        for j in 0..m {
            let y = h * j as f64;
            let d2 = 0.5 * (amp * y.cos()).powi(2);
            let hess2 = 0.5 * (amp * y.sin()).powi(2);
            acc += (1.0 + d2).powf(0.5 * (r - 2.0)) * hess2;
        }
        let want = box_len * box_len * h * acc;
        assert!((got - want).abs() <= 1e-8 * want, "{got} vs {want}");
    }

    proptest! {
        #[test]
        fn luxemburg_norm_is_absolutely_homogeneous(
            seed in 0u64..1000,
            c in -50.0f64..50.0,
        ) {
            let grid = Grid::new(8, 2.0 * PI, 2).unwrap();
            let f = random_field(grid, seed);
            let mags = f.magnitudes();
            let scaled: Vec<f64> = mags.iter().map(|m| (c * m).abs()).collect();
            for kind in [Orlicz::PhiR(1.9), Orlicz::PsiR(1.9), Orlicz::Power(3.0)] {
                let base = luxemburg_norm(&grid, &mags, kind);
                let got = luxemburg_norm(&grid, &scaled, kind);
                let want = c.abs() * base;
                prop_assert!((got - want).abs() <= 1e-9 * want.max(1e-12));
            }
        }

        #[test]
        fn split_norms_partition_the_lq_norm(seed in 0u64..1000, s in 1.0f64..5.0) {
            let grid = Grid::new(8, 1.0, 2).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mags: Vec<f64> =
                (0..grid.points()).map(|_| rng.gen_range(0.0..3.0)).collect();
            let small = split_norm(&grid, &mags, s, SplitSide::Small).powf(s);
            let large = split_norm(&grid, &mags, s, SplitSide::Large).powf(s);
            let total = lq_nodal(&grid, &mags, s).powf(s);
            prop_assert!((small + large - total).abs() <= 1e-12 * total.max(1e-300));
        }
    }
}
