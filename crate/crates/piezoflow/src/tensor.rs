//! Small dense 3x3 tensor helpers used by the constitutive layer.
//!
//! Strain-rate tensors here are plain `[[f64; 3]; 3]` arrays; everything is
//! Frobenius-based, so 2-D tensors embed as 3x3 with a zero third row/column.

pub type Mat3 = [[f64; 3]; 3];

pub const ZERO: Mat3 = [[0.0; 3]; 3];

/// Full double contraction A : B = sum_ij A_ij B_ij.
pub fn frob_dot(a: &Mat3, b: &Mat3) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += a[i][j] * b[i][j];
        }
    }
    s
}

pub fn frob_norm2(a: &Mat3) -> f64 {
    frob_dot(a, a)
}

pub fn frob_norm(a: &Mat3) -> f64 {
    frob_norm2(a).sqrt()
}

pub fn scale(a: &Mat3, s: f64) -> Mat3 {
    let mut out = ZERO;
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][j] * s;
        }
    }
    out
}

pub fn add(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = ZERO;
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][j] + b[i][j];
        }
    }
    out
}

pub fn sub(a: &Mat3, b: &Mat3) -> Mat3 {
    add(a, &scale(b, -1.0))
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = ZERO;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn transpose(a: &Mat3) -> Mat3 {
    let mut out = ZERO;
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i];
        }
    }
    out
}

/// Q A Q^T, the push-forward of a tensor under a rotation Q.
pub fn rotate(q: &Mat3, a: &Mat3) -> Mat3 {
    mat_mul(&mat_mul(q, a), &transpose(q))
}

pub fn is_symmetric(a: &Mat3, tol: f64) -> bool {
    let scale = frob_norm(a).max(1.0);
    (0..3).all(|i| (0..3).all(|j| (a[i][j] - a[j][i]).abs() <= tol * scale))
}

pub fn all_finite(a: &Mat3) -> bool {
    a.iter().all(|row| row.iter().all(|x| x.is_finite()))
}

/// Standard normal deviate via Box-Muller; keeps the RNG stream deterministic.
pub fn gaussian<R: rand::Rng>(rng: &mut R) -> f64 {
    loop {
        let u1: f64 = rng.gen();
        let u2: f64 = rng.gen();
        if u1 > f64::MIN_POSITIVE {
            return (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        }
    }
}

/// Random symmetric direction with unit Frobenius norm.
pub fn random_unit_sym<R: rand::Rng>(rng: &mut R) -> Mat3 {
    loop {
        let mut a = ZERO;
        for i in 0..3 {
            for j in i..3 {
                let g = gaussian(rng);
                a[i][j] = g;
                a[j][i] = g;
            }
        }
        let n = frob_norm(&a);
        if n > 1e-8 {
            return scale(&a, 1.0 / n);
        }
    }
}

/// Random symmetric unit direction Frobenius-orthogonal to `d`.
pub fn random_unit_sym_orthogonal<R: rand::Rng>(rng: &mut R, d: &Mat3) -> Mat3 {
    loop {
        let b = random_unit_sym(rng);
        let proj = frob_dot(&b, d);
        let orth = sub(&b, &scale(d, proj));
        let n = frob_norm(&orth);
        if n > 1e-6 {
            return scale(&orth, 1.0 / n);
        }
    }
}

/// Random rotation matrix from a uniformly sampled unit quaternion.
pub fn random_rotation<R: rand::Rng>(rng: &mut R) -> Mat3 {
    let (mut q, mut n2) = ([0.0f64; 4], 0.0);
    while n2 < 1e-12 {
        for q_i in q.iter_mut() {
            *q_i = gaussian(rng);
        }
        n2 = q.iter().map(|x| x * x).sum();
    }
    let n = n2.sqrt();
    let (w, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}
