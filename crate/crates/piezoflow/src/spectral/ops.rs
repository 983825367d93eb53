//! Differential operators as diagonal spectral multipliers.
//!
//! Every first derivative is the multiplier ik with the Nyquist component
//! dropped (`Grid::k_deriv_at`), and the Laplacian is −|k|² built from the
//! same vector, so composition identities like div∘grad = Δ and
//! Δ⁻¹∘Δ = (identity minus kernel modes) hold to rounding — not just on
//! dealiased fields. `inverse_laplacian` annihilates the kernel modes
//! (the mean and pure-Nyquist lines), which realizes the zero-mean
//! convention for the periodic Poisson problem.

use super::field::{
    ScalarField, SpectralScalar, SpectralTensor, SpectralVector, TensorField, VectorField,
};
use super::grid::Grid;
use rustfft::num_complex::Complex;

#[inline]
fn ik(k: f64, z: Complex<f64>) -> Complex<f64> {
    Complex::new(-k * z.im, k * z.re)
}

/// ∇f in spectral space: (ik_a f̂)_a.
pub fn grad_spec(f: &SpectralScalar) -> SpectralVector {
    let grid = f.grid();
    let mut out = SpectralVector::zeros(grid);
    for a in 0..grid.dim() {
        let comp = out.comp_mut(a);
        for (flat, &z) in f.data().iter().enumerate() {
            comp[flat] = ik(grid.k_deriv_at(flat)[a], z);
        }
    }
    out
}

/// div v in spectral space: Σ_a ik_a v̂_a.
pub fn div_spec(v: &SpectralVector) -> SpectralScalar {
    let grid = v.grid();
    let mut out = SpectralScalar::zeros(grid);
    for a in 0..grid.dim() {
        let comp = v.comp(a);
        for (flat, o) in out.data_mut().iter_mut().enumerate() {
            *o += ik(grid.k_deriv_at(flat)[a], comp[flat]);
        }
    }
    out
}

/// D(v) = (∇v + ∇vᵀ)/2 in spectral space.
pub fn sym_grad_spec(v: &SpectralVector) -> SpectralTensor {
    let grid = v.grid();
    let d = grid.dim();
    let mut out = SpectralTensor::zeros(grid);
    for i in 0..d {
        for j in 0..d {
            let (vi, vj) = (v.comp(i), v.comp(j));
            let comp = out.comp_mut(i, j);
            for flat in 0..grid.points() {
                let k = grid.k_deriv_at(flat);
                comp[flat] = 0.5 * (ik(k[j], vi[flat]) + ik(k[i], vj[flat]));
            }
        }
    }
    out
}

/// Full gradient ∇v with (i,j) entry ∂_j v_i, in spectral space.
pub fn grad_vector_spec(v: &SpectralVector) -> SpectralTensor {
    let grid = v.grid();
    let d = grid.dim();
    let mut out = SpectralTensor::zeros(grid);
    for i in 0..d {
        for j in 0..d {
            let vi = v.comp(i);
            let comp = out.comp_mut(i, j);
            for flat in 0..grid.points() {
                comp[flat] = ik(grid.k_deriv_at(flat)[j], vi[flat]);
            }
        }
    }
    out
}

/// (div S)_i = Σ_j ∂_j S_ij in spectral space.
pub fn div_tensor_spec(s: &SpectralTensor) -> SpectralVector {
    let grid = s.grid();
    let d = grid.dim();
    let mut out = SpectralVector::zeros(grid);
    for i in 0..d {
        let comp = out.comp_mut(i);
        for j in 0..d {
            let sij = s.comp(i, j);
            for (flat, o) in comp.iter_mut().enumerate() {
                *o += ik(grid.k_deriv_at(flat)[j], sij[flat]);
            }
        }
    }
    out
}

/// div div S = Σ_ij ∂_i ∂_j S_ij in spectral space.
pub fn div_div_spec(s: &SpectralTensor) -> SpectralScalar {
    let grid = s.grid();
    let d = grid.dim();
    let mut out = SpectralScalar::zeros(grid);
    for i in 0..d {
        for j in 0..d {
            let sij = s.comp(i, j);
            for (flat, o) in out.data_mut().iter_mut().enumerate() {
                let k = grid.k_deriv_at(flat);
                *o -= k[i] * k[j] * sij[flat];
            }
        }
    }
    out
}

/// Δf in spectral space: −|k|² f̂.
pub fn laplacian_spec(f: &SpectralScalar) -> SpectralScalar {
    let grid = f.grid();
    let mut out = f.clone();
    for (flat, z) in out.data_mut().iter_mut().enumerate() {
        *z *= -grid.k2_deriv_at(flat);
    }
    out
}

/// Solves Δu = f − mean(f) with zero-mean u; kernel modes are annihilated.
pub fn inverse_laplacian_spec(f: &SpectralScalar) -> SpectralScalar {
    let grid = f.grid();
    let mut out = f.clone();
    for (flat, z) in out.data_mut().iter_mut().enumerate() {
        let k2 = grid.k2_deriv_at(flat);
        *z = if k2 > 0.0 { -*z / k2 } else { Complex::default() };
    }
    out
}

/// In-place Leray projection v̂ ← (I − kk/|k|²) v̂; kernel modes pass through.
pub fn leray_project_spec(v: &mut SpectralVector) {
    let grid = v.grid();
    let d = grid.dim();
    for flat in 0..grid.points() {
        let k = grid.k_deriv_at(flat);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            continue;
        }
        let mut kdotv = Complex::default();
        for a in 0..d {
            kdotv += k[a] * v.comp(a)[flat];
        }
        let scale = kdotv / k2;
        for a in 0..d {
            v.comp_mut(a)[flat] -= k[a] * scale;
        }
    }
}

/// Helmholtz split in spectral space: v = v_div + ∇g with Δg = div v.
pub fn helmholtz_spec(v: &SpectralVector) -> (SpectralVector, SpectralScalar) {
    let g = inverse_laplacian_spec(&div_spec(v));
    let mut v_div = v.clone();
    let gradg = grad_spec(&g);
    for a in 0..v.grid().dim() {
        let (vc, gc) = (v_div.comp_mut(a), gradg.comp(a));
        for (x, y) in vc.iter_mut().zip(gc) {
            *x -= y;
        }
    }
    (v_div, g)
}

/// In-place Gaussian low-pass exp(−δ|k|²) (true wavenumbers, zero mode kept).
pub fn mollify_spec(v: &mut SpectralVector, delta: f64) {
    let grid = v.grid();
    for a in 0..grid.dim() {
        let comp = v.comp_mut(a);
        for (flat, z) in comp.iter_mut().enumerate() {
            *z *= (-delta * grid.k2_at(flat)).exp();
        }
    }
}

/// Zeroes every mode outside the 2/3-rule band, in place.
pub fn dealias_slice(grid: &Grid, data: &mut [Complex<f64>]) {
    for (flat, z) in data.iter_mut().enumerate() {
        if !grid.keep(flat) {
            *z = Complex::default();
        }
    }
}

pub fn dealias_vector_spec(v: &mut SpectralVector) {
    let grid = v.grid();
    for a in 0..grid.dim() {
        dealias_slice(&grid, v.comp_mut(a));
    }
}

pub fn dealias_tensor_spec(s: &mut SpectralTensor) {
    let grid = s.grid();
    let d = grid.dim();
    for i in 0..d {
        for j in 0..d {
            dealias_slice(&grid, s.comp_mut(i, j));
        }
    }
}

/// Restricts a field to a coarser grid (same box, same dimension) by exact
/// spectral truncation: every mode the coarse grid can represent is copied
/// with its continuum amplitude, the rest are dropped. For fields already
/// band-limited to the coarse band this is plain resampling.
pub fn spectral_restrict(src: &VectorField, dst: Grid) -> VectorField {
    let sgrid = src.grid();
    assert_eq!(sgrid.dim(), dst.dim(), "restriction cannot change the dimension");
    assert!(
        (sgrid.box_len() - dst.box_len()).abs() <= 1e-14 * dst.box_len(),
        "restriction cannot change the box"
    );
    assert!(dst.n() <= sgrid.n(), "destination grid must be the coarser one");
    let scale = dst.points() as f64 / sgrid.points() as f64;
    let src_spec = src.to_spectral();
    let mut out = SpectralVector::zeros(dst);
    let sn = sgrid.n() as i64;
    for a in 0..dst.dim() {
        let (oa, sa) = (out.comp_mut(a), src_spec.comp(a));
        for flat in 0..dst.points() {
            let idx = dst.decompose(flat);
            let mut sflat = 0usize;
            let mut stride = 1usize;
            for &i in idx.iter().take(dst.dim()) {
                let m = dst.mode_of(i);
                let si = if m >= 0 { m } else { sn + m } as usize;
                sflat += si * stride;
                stride *= sgrid.n();
            }
            oa[flat] = sa[sflat] * scale;
        }
    }
    out.to_physical()
}

/// ‖∇²v‖₂² = Σ_a Σ_k |k|⁴ |v̂_a|² with the discrete Parseval weight.
pub fn hessian_norm2_vec_spec(v: &SpectralVector) -> f64 {
    let grid = v.grid();
    let w = grid.cell_volume() / grid.points() as f64;
    let mut sum = 0.0;
    for a in 0..grid.dim() {
        for (flat, z) in v.comp(a).iter().enumerate() {
            let k2 = grid.k2_deriv_at(flat);
            sum += k2 * k2 * z.norm_sqr();
        }
    }
    w * sum
}

/// ‖∇²u‖₂² for a scalar, via the same |k|⁴ weight.
pub fn hessian_norm2_scalar_spec(f: &SpectralScalar) -> f64 {
    let grid = f.grid();
    let w = grid.cell_volume() / grid.points() as f64;
    let sum: f64 = f
        .data()
        .iter()
        .enumerate()
        .map(|(flat, z)| {
            let k2 = grid.k2_deriv_at(flat);
            k2 * k2 * z.norm_sqr()
        })
        .sum();
    w * sum
}

// ---- physical-space wrappers -------------------------------------------

pub fn grad(f: &ScalarField) -> VectorField {
    grad_spec(&f.to_spectral()).to_physical()
}

pub fn div(v: &VectorField) -> ScalarField {
    div_spec(&v.to_spectral()).to_physical()
}

pub fn sym_grad(v: &VectorField) -> TensorField {
    sym_grad_spec(&v.to_spectral()).to_physical()
}

pub fn grad_vector(v: &VectorField) -> TensorField {
    grad_vector_spec(&v.to_spectral()).to_physical()
}

pub fn div_tensor(s: &TensorField) -> VectorField {
    div_tensor_spec(&s.to_spectral()).to_physical()
}

pub fn div_div(s: &TensorField) -> ScalarField {
    div_div_spec(&s.to_spectral()).to_physical()
}

pub fn laplacian(f: &ScalarField) -> ScalarField {
    laplacian_spec(&f.to_spectral()).to_physical()
}

pub fn inverse_laplacian(f: &ScalarField) -> ScalarField {
    inverse_laplacian_spec(&f.to_spectral()).to_physical()
}

pub fn helmholtz_project(v: &VectorField) -> (VectorField, ScalarField) {
    let (vd, g) = helmholtz_spec(&v.to_spectral());
    (vd.to_physical(), g.to_physical())
}

pub fn mollify(v: &VectorField, delta: f64) -> VectorField {
    assert!(delta > 0.0, "mollification width must be positive");
    let mut s = v.to_spectral();
    mollify_spec(&mut s, delta);
    s.to_physical()
}
