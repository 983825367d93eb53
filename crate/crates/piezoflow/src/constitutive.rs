//! Constitutive laws for pressure- and shear-rate-dependent viscosity.
//!
//! Every law has the form
//!
//! ```text
//! S(p, D) = nu(p, |D|^2) D,        T = -p I + S(p, D),
//! ```
//!
//! with `D` the symmetric velocity gradient. The structural conditions the
//! solver relies on are ellipticity/growth of the strain derivative,
//!
//! ```text
//! C1 (1+|D|^2)^((r-2)/2) |B|^2  <=  dS/dD . (B (x) B)  <=  C2 (1+|D|^2)^((r-2)/2) |B|^2,
//! ```
//!
//! and boundedness of the pressure derivative,
//!
//! ```text
//! |dS/dp|  <=  gamma0 (1+|D|^2)^((r-2)/4),
//! ```
//!
//! which `certify_assumptions` checks by dense deterministic sampling. The
//! certified constants feed the pressure solver (contraction at rate gamma0)
//! and the energy ledger (dissipation lower bound with C1).

use crate::error::{Error, Result};
use crate::tensor::{self, Mat3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Ratios this close to a bound (relative) are attributed to rounding.
pub const CERT_ROUNDING_SLACK: f64 = 1e-9;

/// A viscosity law nu(p, |D|^2) plus its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSpec {
    /// nu == 2 nu_star, so S = 2 nu_star D and div S = nu_star * laplacian(v)
    /// on solenoidal fields.
    NewtonianConstant { nu_star: f64 },
    /// nu = alpha p (eps^2 + |D|^2)^(-1/2) — a regularization of the granular
    /// law alpha p / |D|. Degenerate at p = 0 and linear in p, so it cannot be
    /// certified; shipped for demonstration only.
    SchaefferRegularized { alpha: f64, eps: f64 },
    /// Carreau shear-thinning times a saturated exponential pressure factor:
    /// nu = (eta_inf + (eta0 - eta_inf)/(1 + beta |D|^(2-r))) exp(alpha min(p, p_cap)).
    CarreauExponential {
        eta_inf: f64,
        eta0: f64,
        beta: f64,
        r: f64,
        alpha: f64,
        p_cap: f64,
    },
    /// The certifiable workhorse: nu = (1 + gamma(p) + |D|^2)^((r-2)/2) with
    /// gamma(p) = gamma_amp (1 + tanh p)/2. For gamma_amp = 0 this is the pure
    /// power law with C1 -> r-1, C2 = 1; gamma0 scales with gamma_amp.
    AdmissiblePowerLaw { r: f64, gamma_amp: f64 },
}

impl ModelSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ModelSpec::NewtonianConstant { .. } => "newtonian_constant",
            ModelSpec::SchaefferRegularized { .. } => "schaeffer_regularized",
            ModelSpec::CarreauExponential { .. } => "carreau_exponential",
            ModelSpec::AdmissiblePowerLaw { .. } => "admissible_power_law",
        }
    }

    /// Growth exponent r used in the certification weights. Newtonian behaves
    /// as r = 2; the regularized granular law has bounded stress, i.e. r = 1
    /// type growth (outside the certifiable range, as intended).
    pub fn exponent(&self) -> f64 {
        match *self {
            ModelSpec::NewtonianConstant { .. } => 2.0,
            ModelSpec::SchaefferRegularized { .. } => 1.0,
            ModelSpec::CarreauExponential { r, .. } => r,
            ModelSpec::AdmissiblePowerLaw { r, .. } => r,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        let finite = |x: f64| x.is_finite();
        match *self {
            ModelSpec::NewtonianConstant { nu_star } => {
                if !finite(nu_star) || nu_star <= 0.0 {
                    return bad(format!("newtonian_constant requires nu_star > 0, got {nu_star}"));
                }
            }
            ModelSpec::SchaefferRegularized { alpha, eps } => {
                if !finite(alpha) || alpha <= 0.0 {
                    return bad(format!("schaeffer_regularized requires alpha > 0, got {alpha}"));
                }
                if !finite(eps) || eps <= 0.0 {
                    return bad(format!("schaeffer_regularized requires eps > 0, got {eps}"));
                }
            }
            ModelSpec::CarreauExponential {
                eta_inf,
                eta0,
                beta,
                r,
                alpha,
                p_cap,
            } => {
                if !finite(eta_inf) || eta_inf < 0.0 {
                    return bad(format!("carreau_exponential requires eta_inf >= 0, got {eta_inf}"));
                }
                if !finite(eta0) || eta0 <= eta_inf {
                    return bad(format!("carreau_exponential requires eta0 > eta_inf, got {eta0}"));
                }
                if !finite(beta) || beta <= 0.0 {
                    return bad(format!("carreau_exponential requires beta > 0, got {beta}"));
                }
                if !finite(r) || r <= 1.0 || r > 2.0 {
                    return bad(format!("carreau_exponential requires r in (1, 2], got {r}"));
                }
                if !finite(alpha) || alpha < 0.0 {
                    return bad(format!("carreau_exponential requires alpha >= 0, got {alpha}"));
                }
                if !finite(p_cap) || p_cap <= 0.0 {
                    return bad(format!("carreau_exponential requires p_cap > 0, got {p_cap}"));
                }
            }
            ModelSpec::AdmissiblePowerLaw { r, gamma_amp } => {
                if !finite(r) || r <= 1.0 || r >= 2.0 {
                    return bad(format!("admissible_power_law requires r in (1, 2), got {r}"));
                }
                if !finite(gamma_amp) || gamma_amp < 0.0 {
                    return bad(format!("admissible_power_law requires gamma_amp >= 0, got {gamma_amp}"));
                }
            }
        }
        Ok(())
    }

    /// The viscosity nu(p, omega) with omega = |D|^2.
    pub fn nu(&self, p: f64, omega: f64) -> f64 {
        match *self {
            ModelSpec::NewtonianConstant { nu_star } => 2.0 * nu_star,
            ModelSpec::SchaefferRegularized { alpha, eps } => {
                alpha * p / (eps * eps + omega).sqrt()
            }
            ModelSpec::CarreauExponential {
                eta_inf,
                eta0,
                beta,
                r,
                alpha,
                p_cap,
            } => {
                let shear = eta_inf + (eta0 - eta_inf) / (1.0 + beta * omega.powf((2.0 - r) / 2.0));
                shear * (alpha * p.min(p_cap)).exp()
            }
            ModelSpec::AdmissiblePowerLaw { r, gamma_amp } => {
                (1.0 + gamma_tanh(gamma_amp, p) + omega).powf((r - 2.0) / 2.0)
            }
        }
    }

    /// d nu / d omega. For the Carreau law the bare derivative diverges as
    /// omega -> 0 (r < 2) while its contribution to the quadratic form,
    /// 2 nu_omega (D:B)^2 <= 2 nu_omega omega |B|^2, vanishes; we return the
    /// usable limit 0 there.
    pub fn nu_domega(&self, p: f64, omega: f64) -> f64 {
        match *self {
            ModelSpec::NewtonianConstant { .. } => 0.0,
            ModelSpec::SchaefferRegularized { alpha, eps } => {
                -0.5 * alpha * p * (eps * eps + omega).powf(-1.5)
            }
            ModelSpec::CarreauExponential {
                eta_inf,
                eta0,
                beta,
                r,
                alpha,
                p_cap,
            } => {
                if omega <= 0.0 {
                    return 0.0;
                }
                let e = (2.0 - r) / 2.0;
                let s = omega.powf(e);
                let denom = 1.0 + beta * s;
                let dshear = -(eta0 - eta_inf) * beta * e * s / (omega * denom * denom);
                dshear * (alpha * p.min(p_cap)).exp()
            }
            ModelSpec::AdmissiblePowerLaw { r, gamma_amp } => {
                0.5 * (r - 2.0) * (1.0 + gamma_tanh(gamma_amp, p) + omega).powf((r - 4.0) / 2.0)
            }
        }
    }

    /// d nu / d p.
    pub fn nu_dp(&self, p: f64, omega: f64) -> f64 {
        match *self {
            ModelSpec::NewtonianConstant { .. } => 0.0,
            ModelSpec::SchaefferRegularized { alpha, eps } => {
                alpha / (eps * eps + omega).sqrt()
            }
            ModelSpec::CarreauExponential { alpha, p_cap, .. } => {
                if p < p_cap {
                    alpha * self.nu(p, omega)
                } else {
                    0.0
                }
            }
            ModelSpec::AdmissiblePowerLaw { r, gamma_amp } => {
                0.5 * (r - 2.0)
                    * gamma_tanh_prime(gamma_amp, p)
                    * (1.0 + gamma_tanh(gamma_amp, p) + omega).powf((r - 4.0) / 2.0)
            }
        }
    }
}

/// gamma(p) = gamma_amp (1 + tanh p)/2 — bounded, smooth, non-negative.
fn gamma_tanh(gamma_amp: f64, p: f64) -> f64 {
    0.5 * gamma_amp * (1.0 + p.tanh())
}

fn gamma_tanh_prime(gamma_amp: f64, p: f64) -> f64 {
    let t = p.tanh();
    0.5 * gamma_amp * (1.0 - t * t)
}

fn check_sym_input(name: &'static str, a: &Mat3) -> Result<()> {
    if !tensor::all_finite(a) {
        return Err(Error::NonFinite(name));
    }
    debug_assert!(tensor::is_symmetric(a, 1e-12), "{name} must be symmetric");
    Ok(())
}

/// The extra stress S(p, D) = nu(p, |D|^2) D.
pub fn stress(model: &ModelSpec, p: f64, d: &Mat3) -> Result<Mat3> {
    if !p.is_finite() {
        return Err(Error::NonFinite("stress: p"));
    }
    check_sym_input("stress: D", d)?;
    let omega = tensor::frob_norm2(d);
    Ok(tensor::scale(d, model.nu(p, omega)))
}

/// Quadratic form of the strain derivative, (dS/dD)(p,D) . (B (x) B).
///
/// For S = nu(p, |D|^2) D this is nu |B|^2 + 2 nu_omega (D:B)^2, exact for
/// symmetric directions B.
pub fn stress_jacobian_d(model: &ModelSpec, p: f64, d: &Mat3, b: &Mat3) -> Result<f64> {
    if !p.is_finite() {
        return Err(Error::NonFinite("stress_jacobian_d: p"));
    }
    check_sym_input("stress_jacobian_d: D", d)?;
    check_sym_input("stress_jacobian_d: B", b)?;
    let omega = tensor::frob_norm2(d);
    let db = tensor::frob_dot(d, b);
    Ok(model.nu(p, omega) * tensor::frob_norm2(b) + 2.0 * model.nu_domega(p, omega) * db * db)
}

/// dS/dp(p, D) = nu_p(p, |D|^2) D.
pub fn stress_jacobian_p(model: &ModelSpec, p: f64, d: &Mat3) -> Result<Mat3> {
    if !p.is_finite() {
        return Err(Error::NonFinite("stress_jacobian_p: p"));
    }
    check_sym_input("stress_jacobian_p: D", d)?;
    let omega = tensor::frob_norm2(d);
    Ok(tensor::scale(d, model.nu_dp(p, omega)))
}

/// Central finite-difference version of `stress_jacobian_d`, for validating
/// the analytic form only: (S(D+hB) - S(D-hB)) : B / (2h).
pub fn stress_jacobian_d_fd(model: &ModelSpec, p: f64, d: &Mat3, b: &Mat3, h: f64) -> Result<f64> {
    let dp = tensor::add(d, &tensor::scale(b, h));
    let dm = tensor::add(d, &tensor::scale(b, -h));
    let sp = stress(model, p, &dp)?;
    let sm = stress(model, p, &dm)?;
    Ok(tensor::frob_dot(&tensor::sub(&sp, &sm), b) / (2.0 * h))
}

/// Central finite-difference version of `stress_jacobian_p` (validation only).
pub fn stress_jacobian_p_fd(model: &ModelSpec, p: f64, d: &Mat3, h: f64) -> Result<Mat3> {
    let sp = stress(model, p + h, d)?;
    let sm = stress(model, p - h, d)?;
    Ok(tensor::scale(&tensor::sub(&sp, &sm), 0.5 / h))
}

/// Deterministic sampling plan for certification.
///
/// Pressures are laid out on a log grid covering [p_min, p_max], symmetric
/// about 0 when the range straddles it; strain magnitudes on a log grid plus
/// the exact 0; directions are seeded random symmetric pairs (D_hat, B_hat)
/// augmented with aligned and orthogonal pairs, which are the extremal
/// directions for laws of the power-law family.
#[derive(Debug, Clone, Copy)]
pub struct SampleSpec {
    pub p_min: f64,
    pub p_max: f64,
    /// log-grid points per pressure sign
    pub p_count: usize,
    pub d_min: f64,
    pub d_max: f64,
    pub d_count: usize,
    /// random (D_hat, B_hat) pairs shared across magnitudes
    pub direction_pairs: usize,
    pub seed: u64,
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec {
            p_min: -1e2,
            p_max: 1e2,
            p_count: 12,
            d_min: 1e-3,
            d_max: 1e3,
            d_count: 24,
            direction_pairs: 64,
            seed: 7,
        }
    }
}

fn logspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && count >= 1);
    if count == 1 {
        return vec![hi];
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (llo + (lhi - llo) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

impl SampleSpec {
    pub fn with_pressure_range(mut self, lo: f64, hi: f64) -> Self {
        self.p_min = lo;
        self.p_max = hi;
        self
    }

    pub fn pressures(&self) -> Vec<f64> {
        assert!(self.p_min <= self.p_max);
        let mut vals = Vec::new();
        let hi_mag = self.p_min.abs().max(self.p_max.abs());
        if hi_mag == 0.0 {
            return vec![0.0];
        }
        // four decades below the largest magnitude, like the default [-100,100] grid
        let lo_mag = hi_mag * 1e-4;
        if self.p_min < 0.0 {
            let mags = logspace(lo_mag.min(self.p_min.abs()), self.p_min.abs(), self.p_count);
            vals.extend(mags.iter().rev().map(|m| -m));
        }
        if self.p_min <= 0.0 && self.p_max >= 0.0 {
            vals.push(0.0);
        }
        if self.p_max > 0.0 {
            let lo = if self.p_min > 0.0 { self.p_min } else { lo_mag.min(self.p_max) };
            vals.extend(logspace(lo, self.p_max, self.p_count));
        }
        vals
    }

    pub fn strain_magnitudes(&self) -> Vec<f64> {
        let mut vals = vec![0.0];
        vals.extend(logspace(self.d_min, self.d_max, self.d_count));
        vals
    }

    /// (D_hat, B_hat) unit pairs: seeded random pairs plus, for a handful of
    /// strain directions, the aligned pair (B = D_hat) and an orthogonal one.
    pub fn direction_set(&self) -> Vec<(Mat3, Mat3)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut dirs = Vec::with_capacity(self.direction_pairs + 16);
        for _ in 0..self.direction_pairs {
            let d = tensor::random_unit_sym(&mut rng);
            let b = tensor::random_unit_sym(&mut rng);
            dirs.push((d, b));
        }
        for _ in 0..8 {
            let d = tensor::random_unit_sym(&mut rng);
            let b_orth = tensor::random_unit_sym_orthogonal(&mut rng, &d);
            dirs.push((d, d));
            dirs.push((d, b_orth));
        }
        dirs
    }
}

/// One sampling cell where the ellipticity lower bound failed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub p: f64,
    pub d_mag: f64,
    /// worst ratio (dS/dD . B(x)B) / (|B|^2 (1+|D|^2)^((r-2)/2)) in the cell
    pub ratio: f64,
}

/// Sampled estimates of (C1, C2, gamma0) plus the admissibility verdict.
#[derive(Debug, Clone)]
pub struct AssumptionCertificate {
    pub model: ModelSpec,
    pub r: f64,
    pub c1_est: f64,
    pub c2_est: f64,
    pub gamma0_est: f64,
    /// gamma0_est < c1/(c1+c2): the regime where the fixed-point energy
    /// machinery applies
    pub admissible: bool,
    pub sample_count: usize,
    pub seed: u64,
    pub violations: Vec<Violation>,
}

impl AssumptionCertificate {
    pub fn admissibility_threshold(&self) -> f64 {
        self.c1_est / (self.c1_est + self.c2_est)
    }
}

/// Estimate the structural constants by dense sampling.
///
/// C1_est / C2_est are the min/max over samples of the ellipticity ratio,
/// gamma0_est the max of |dS/dp| / (1+|D|^2)^((r-2)/4). Cells whose ratio is
/// not strictly positive (beyond rounding slack) are collected as violations
/// and make the model NotCertifiable.
pub fn certify_assumptions(model: &ModelSpec, sampler: &SampleSpec) -> Result<AssumptionCertificate> {
    model.validate()?;
    let r = model.exponent();
    let pressures = sampler.pressures();
    let d_mags = sampler.strain_magnitudes();
    let dirs = sampler.direction_set();

    let mut c1 = f64::INFINITY;
    let mut c2 = f64::NEG_INFINITY;
    let mut gamma0 = 0.0f64;
    let mut samples = 0usize;
    // (p, d_mag, min ratio over directions) per cell, for the violation report
    let mut cell_minima = Vec::with_capacity(pressures.len() * d_mags.len());

    for &d_mag in &d_mags {
        let omega = d_mag * d_mag;
        let w1 = (1.0 + omega).powf((r - 2.0) / 2.0);
        let w2 = (1.0 + omega).powf((r - 2.0) / 4.0);
        for &p in &pressures {
            let mut cell_min = f64::INFINITY;
            for (dh, bh) in &dirs {
                let d = tensor::scale(dh, d_mag);
                let db = tensor::frob_dot(&d, bh);
                // |B_hat|^2 = 1 by construction
                let jac = model.nu(p, omega) + 2.0 * model.nu_domega(p, omega) * db * db;
                let ratio = jac / w1;
                cell_min = cell_min.min(ratio);
                c1 = c1.min(ratio);
                c2 = c2.max(ratio);
                samples += 1;
            }
            let dsp = model.nu_dp(p, omega).abs() * d_mag;
            gamma0 = gamma0.max(dsp / w2);
            cell_minima.push((p, d_mag, cell_min));
        }
    }

    let slack = CERT_ROUNDING_SLACK * c2.abs().max(1.0);
    let violations: Vec<Violation> = cell_minima
        .into_iter()
        .filter(|&(_, _, ratio)| ratio <= slack)
        .map(|(p, d_mag, ratio)| Violation { p, d_mag, ratio })
        .collect();

    let certifiable = violations.is_empty();
    let cert = AssumptionCertificate {
        model: *model,
        r,
        c1_est: c1,
        c2_est: c2,
        gamma0_est: gamma0,
        admissible: certifiable && gamma0 < c1 / (c1 + c2),
        sample_count: samples,
        seed: sampler.seed,
        violations,
    };
    if certifiable {
        Ok(cert)
    } else {
        Err(Error::NotCertifiable {
            violations: cert.violations.len(),
            certificate: Box::new(cert),
        })
    }
}

/// A model together with the certificate the solvers require.
#[derive(Debug, Clone)]
pub struct CertifiedModel {
    pub spec: ModelSpec,
    pub certificate: AssumptionCertificate,
}

impl CertifiedModel {
    pub fn certify(spec: ModelSpec, sampler: &SampleSpec) -> Result<Self> {
        let certificate = certify_assumptions(&spec, sampler)?;
        Ok(CertifiedModel { spec, certificate })
    }

    pub fn certify_default(spec: ModelSpec) -> Result<Self> {
        Self::certify(spec, &SampleSpec::default())
    }

    pub fn r(&self) -> f64 {
        self.certificate.r
    }
}

/// Pointwise check of the growth bounds with the certified constants:
/// S : D >= C1 |D|^2 (1+|D|^2)^((r-2)/2) and |S| <= C2 |D| (1+|D|^2)^((r-2)/2).
pub fn growth_bounds_check(model: &CertifiedModel, p: f64, d: &Mat3) -> Result<(bool, bool)> {
    let s = stress(&model.spec, p, d)?;
    let cert = &model.certificate;
    let omega = tensor::frob_norm2(d);
    let w = (1.0 + omega).powf((cert.r - 2.0) / 2.0);
    let sd = tensor::frob_dot(&s, d);
    let lower_rhs = cert.c1_est * omega * w;
    let upper_rhs = cert.c2_est * omega.sqrt() * w;
    let lower_ok = sd >= lower_rhs - CERT_ROUNDING_SLACK * lower_rhs.abs().max(1.0);
    let upper_ok = tensor::frob_norm(&s) <= upper_rhs + CERT_ROUNDING_SLACK * upper_rhs.abs().max(1.0);
    Ok((lower_ok, upper_ok))
}
