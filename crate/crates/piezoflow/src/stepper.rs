//! IMEX time integration of the biharmonically regularized momentum system
//!
//!   v_t + div(v⊗v) + ∇p = div S(p, D(v)) − δΔ²v + f,   div v = 0,
//!
//! on the spectral truncation. Convection and stress are explicit (skew
//! form, dealiased), the stiff δΔ² term is an exact diagonal implicit solve,
//! and the Leray projector absorbs ∇p — the pressure enters only through the
//! viscosity ν(p, |D|²), which is why every step runs one Picard solve.
//!
//! Per step the scheme is
//!
//!   v̂ⁿ⁺¹ = P[v̂ⁿ + dt·Ĝⁿ] / (1 + dt·δ|k|⁴),   Ĝ = P Π[N(vⁿ,pⁿ) + f(tⁿ)],
//!
//! and the energy ledger charges stress work (S,D) at the explicit endpoint
//! and biharmonic work δ‖∇²v‖² at the implicit one; with that accounting the
//! per-step defect obeys defect ≤ ½dt²‖Ĝ‖₂² exactly (complete the square in
//! ‖vⁿ⁺¹−vⁿ‖), which the ledger records as its bound.

use crate::constitutive::CertifiedModel;
use crate::error::{Error, Result};
use crate::pressure::{solve_pressure, PressureOpts};
use crate::spectral::norms::{self, phi_integral};
use crate::spectral::{fft, ops, synth, Grid, ScalarField, SpectralVector, VectorField};
use rustfft::num_complex::Complex;
use std::sync::Arc;

/// Time-dependent body force, used by manufactured-solution studies.
pub type Forcing = Arc<dyn Fn(f64, Grid) -> VectorField + Send + Sync>;

#[derive(Clone)]
pub struct SimConfig {
    pub grid: Grid,
    pub model: CertifiedModel,
    /// biharmonic regularization strength δ ≥ 0
    pub delta: f64,
    pub dt: f64,
    pub t_final: f64,
    pub forcing: Option<Forcing>,
    pub pressure_tol: f64,
    pub pressure_max_iter: usize,
    /// store a trajectory snapshot every k steps (0 = only initial and final)
    pub snapshot_every: usize,
    /// evaluate the second-gradient audit every k steps (0 = never)
    pub audit_every: usize,
    pub cfl_limit: f64,
    /// relaxes the theorem-regime gate on r; every artifact carrying results
    /// from such a run is labeled exploratory
    pub exploratory: bool,
}

impl std::fmt::Debug for SimConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SimConfig")
            .field("grid", &self.grid)
            .field("model", &self.model.spec)
            .field("delta", &self.delta)
            .field("dt", &self.dt)
            .field("t_final", &self.t_final)
            .field("forcing", &self.forcing.as_ref().map(|_| "<fn>"))
            .field("pressure_tol", &self.pressure_tol)
            .field("pressure_max_iter", &self.pressure_max_iter)
            .field("snapshot_every", &self.snapshot_every)
            .field("audit_every", &self.audit_every)
            .field("cfl_limit", &self.cfl_limit)
            .field("exploratory", &self.exploratory)
            .finish()
    }
}

impl SimConfig {
    pub fn new(grid: Grid, model: CertifiedModel, delta: f64, dt: f64, t_final: f64) -> Self {
        SimConfig {
            grid,
            model,
            delta,
            dt,
            t_final,
            forcing: None,
            pressure_tol: 1e-10,
            pressure_max_iter: 256,
            snapshot_every: 0,
            audit_every: 0,
            cfl_limit: 0.4,
            exploratory: false,
        }
    }

    /// True when the run sits in the regime the energy machinery covers:
    /// r ∈ (9/5, 2) and γ₀ < C₁/(C₁+C₂).
    pub fn theorem_mode(&self) -> bool {
        let r = self.model.r();
        !self.exploratory && r > 1.8 && r < 2.0 && self.model.certificate.admissible
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::ConfigGeneral(format!("time step {} must be positive", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::ConfigGeneral(format!(
                "final time {} must be nonnegative",
                self.t_final
            )));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::ConfigGeneral(format!(
                "biharmonic strength {} must be nonnegative",
                self.delta
            )));
        }
        if !(self.cfl_limit > 0.0) {
            return Err(Error::ConfigGeneral("CFL limit must be positive".into()));
        }
        if !self.exploratory {
            let r = self.model.r();
            if !(r > 1.8 && r < 2.0) {
                return Err(Error::ConfigGeneral(format!(
                    "growth exponent r = {r} outside (9/5, 2); rerun as exploratory to proceed"
                )));
            }
            if !self.model.certificate.admissible {
                return Err(Error::ConfigGeneral(format!(
                    "model is certified but not admissible (gamma0 = {} >= C1/(C1+C2) = {}); \
                     rerun as exploratory to proceed",
                    self.model.certificate.gamma0_est,
                    self.model.certificate.admissibility_threshold(),
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub step_index: usize,
    pub v: VectorField,
    pub p: ScalarField,
}

impl SimState {
    pub fn rest(grid: Grid) -> Self {
        SimState {
            t: 0.0,
            step_index: 0,
            v: VectorField::zeros(grid),
            p: ScalarField::zeros(grid),
        }
    }

    pub fn from_velocity(v: VectorField) -> Self {
        let grid = v.grid();
        SimState { t: 0.0, step_index: 0, v, p: ScalarField::zeros(grid) }
    }

    pub fn kinetic_energy(&self) -> f64 {
        let grid = self.v.grid();
        0.5 * (0..grid.dim())
            .map(|a| norms::l2_nodal(&grid, self.v.comp(a)).powi(2))
            .sum::<f64>()
    }
}

/// Named initial conditions.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Rest,
    TaylorGreen { amplitude: f64 },
    RandomSolenoidal { seed: u64, amplitude: f64, mmax: i64 },
    VortexRing { amplitude: f64 },
}

/// Builds the regularized initial field: Galerkin truncation, Leray
/// projection, then the Gaussian mollifier of width δ. Every stage is
/// non-expansive, so the result never exceeds the raw field in L².
pub fn initial_data(grid: Grid, kind: &InitialData, delta: f64) -> Result<VectorField> {
    let raw = match kind {
        InitialData::Rest => VectorField::zeros(grid),
        InitialData::TaylorGreen { amplitude } => synth::taylor_green(grid, *amplitude),
        InitialData::RandomSolenoidal { seed, amplitude, mmax } => {
            synth::random_solenoidal(grid, *seed, *amplitude, *mmax)
        }
        InitialData::VortexRing { amplitude } => {
            if grid.dim() != 3 {
                return Err(Error::ConfigGeneral(
                    "vortex-ring initial data needs a 3-D grid".into(),
                ));
            }
            synth::gaussian_vortex_ring(grid, *amplitude)
        }
    };
    let mut vs = raw.to_spectral();
    ops::dealias_vector_spec(&mut vs);
    ops::leray_project_spec(&mut vs);
    if delta > 0.0 {
        ops::mollify_spec(&mut vs, delta);
    }
    Ok(vs.to_physical())
}

/// One ledger row; the run prepends a step-0 row carrying E(0).
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerRow {
    pub step: usize,
    /// time after the step
    pub t: f64,
    /// kinetic energy ½‖v‖₂² after the step
    pub energy: f64,
    /// instantaneous stress work (S,D) at the explicit endpoint
    pub stress_work: f64,
    /// instantaneous ∫φ(|D(v)|) at the explicit endpoint
    pub phi_dissipation: f64,
    /// instantaneous δ‖∇²v‖₂² at the implicit endpoint
    pub biharmonic: f64,
    pub cum_stress_work: f64,
    pub cum_phi: f64,
    pub cum_biharmonic: f64,
    /// E⁺ − E + dt(stress work + biharmonic − forcing work)
    pub step_defect: f64,
    /// the a-priori bound ½dt²‖Ĝ‖₂² on the defect
    pub eps_step: f64,
    pub forcing_work: f64,
    /// ‖vⁿ⁺¹ − vⁿ‖₂/dt, the discrete time-derivative magnitude
    pub increment_rate: f64,
    /// ‖div v‖₂ / ‖∇v‖₂ after the step
    pub div_residual: f64,
    pub cfl: f64,
    pub pressure_iterations: usize,
    pub pressure_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLedger {
    /// E(0) of this run's (already mollified) initial state
    pub e0: f64,
    /// coercivity constant from the certificate, weighting the φ-dissipation
    pub c1: f64,
    pub rows: Vec<LedgerRow>,
}

impl EnergyLedger {
    /// E(t) + C₁·∫φ + δ∫‖∇²v‖² − E(0) at one row: the inequality form of the
    /// energy audit (≤ accumulated O(dt²) defects for a faithful scheme).
    pub fn inequality_defect(&self, row: &LedgerRow) -> f64 {
        row.energy + self.c1 * row.cum_phi + row.cum_biharmonic - self.e0
    }

    pub fn max_inequality_defect(&self) -> f64 {
        self.rows
            .iter()
            .map(|row| self.inequality_defect(row))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// sup over rows of E + C₁·∫φ, the δ-uniform bound of the sweep.
    pub fn sup_energy_plus_dissipation(&self) -> f64 {
        self.rows
            .iter()
            .map(|row| row.energy + self.c1 * row.cum_phi)
            .fold(0.0, f64::max)
    }
}

/// Instantaneous second-gradient diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondGradientRecord {
    pub t: f64,
    pub i_r: f64,
    pub grad_norm2: f64,
    pub lambda: f64,
    /// I_r(v) / (1 + ‖∇v‖₂²)^λ
    pub weighted: f64,
}

/// Evaluates I_r, ‖∇v‖₂², and the λ-weighted compactness quantity on a state.
pub fn second_gradient_audit(state: &SimState, cfg: &SimConfig) -> SecondGradientRecord {
    let r = cfg.model.r();
    let lambda = 2.0 * (3.0 - r) / (3.0 * r - 5.0);
    let i_r = norms::i_r_functional(&state.v, r);
    let grad_norm2 = norms::h1_seminorm2_spec(&state.v.to_spectral());
    SecondGradientRecord {
        t: state.t,
        i_r,
        grad_norm2,
        lambda,
        weighted: i_r / (1.0 + grad_norm2).powf(lambda),
    }
}

struct ExplicitRhs {
    g: SpectralVector,
    stress_work: f64,
    phi_dissipation: f64,
}

/// Skew-symmetric convective term −½[div(v⊗v) + (v·∇)v], dealiased.
pub fn convective_rhs_spec(v: &VectorField) -> SpectralVector {
    let grid = v.grid();
    let d = grid.dim();
    let n_pts = grid.points();
    let vs = v.to_spectral();
    let mut out = SpectralVector::zeros(grid);

    // divergence form: Σ_j ∂_j (v_i v_j), from upper-triangle products
    for i in 0..d {
        for j in i..d {
            let prod: Vec<f64> =
                v.comp(i).iter().zip(v.comp(j)).map(|(a, b)| a * b).collect();
            let mut pc = fft::forward(&grid, &prod);
            ops::dealias_slice(&grid, &mut pc);
            for flat in 0..n_pts {
                let k = grid.k_deriv_at(flat);
                let z = pc[flat];
                let ik = |kc: f64| Complex::new(-kc * z.im, kc * z.re);
                out.comp_mut(i)[flat] -= 0.5 * ik(k[j]);
                if i != j {
                    out.comp_mut(j)[flat] -= 0.5 * ik(k[i]);
                }
            }
        }
    }

    // advective form: Σ_j v_j ∂_j v_i
    let gradv = ops::grad_vector_spec(&vs).to_physical();
    for i in 0..d {
        let mut adv = vec![0.0; n_pts];
        for j in 0..d {
            for (a, (vj, dvi)) in adv.iter_mut().zip(v.comp(j).iter().zip(gradv.comp(i, j))) {
                *a += vj * dvi;
            }
        }
        let mut ac = fft::forward(&grid, &adv);
        ops::dealias_slice(&grid, &mut ac);
        for (o, z) in out.comp_mut(i).iter_mut().zip(&ac) {
            *o -= 0.5 * z;
        }
    }
    out
}

/// Assembles Ĝ = P Π[−½(div(v⊗v) + v·∇v) + div S(p, D(v))] plus the two
/// instantaneous dissipation rates read off the same stress evaluation.
fn explicit_rhs(v: &VectorField, p: &ScalarField, model: &CertifiedModel) -> Result<ExplicitRhs> {
    let grid = v.grid();
    let d = grid.dim();
    let n_pts = grid.points();
    let r = model.r();

    let mut g = convective_rhs_spec(v);

    let d_tensor = ops::sym_grad_spec(&v.to_spectral()).to_physical();
    let mut omega = vec![0.0; n_pts];
    for i in 0..d {
        for j in 0..d {
            for (o, x) in omega.iter_mut().zip(d_tensor.comp(i, j)) {
                *o += x * x;
            }
        }
    }
    let mut nu = Vec::with_capacity(n_pts);
    for (pv, om) in p.data().iter().zip(&omega) {
        let val = model.spec.nu(*pv, *om);
        if !val.is_finite() {
            return Err(Error::NonFinite("viscosity during time step"));
        }
        nu.push(val);
    }

    let cellvol = grid.cell_volume();
    let stress_work = cellvol
        * nu.iter().zip(&omega).map(|(nu, om)| nu * om).sum::<f64>();
    let dmags: Vec<f64> = omega.iter().map(|om| om.sqrt()).collect();
    let phi_dissipation = phi_integral(&grid, &dmags, r);

    // div S from the upper triangle of S = ν·D
    for i in 0..d {
        for j in i..d {
            let s_nodal: Vec<f64> = d_tensor
                .comp(i, j)
                .iter()
                .zip(&nu)
                .map(|(dv, nu)| nu * dv)
                .collect();
            let mut sc = fft::forward(&grid, &s_nodal);
            ops::dealias_slice(&grid, &mut sc);
            for flat in 0..n_pts {
                let k = grid.k_deriv_at(flat);
                let z = sc[flat];
                let ik = |kc: f64| Complex::new(-kc * z.im, kc * z.re);
                g.comp_mut(i)[flat] += ik(k[j]);
                if i != j {
                    g.comp_mut(j)[flat] += ik(k[i]);
                }
            }
        }
    }

    ops::leray_project_spec(&mut g);
    Ok(ExplicitRhs { g, stress_work, phi_dissipation })
}

fn add_forcing(g: &mut SpectralVector, cfg: &SimConfig, t: f64, v: &VectorField) -> f64 {
    let grid = g.grid();
    let Some(forcing) = &cfg.forcing else { return 0.0 };
    let f = forcing(t, grid);
    let mut fs = f.to_spectral();
    ops::dealias_vector_spec(&mut fs);
    ops::leray_project_spec(&mut fs);
    let vs = v.to_spectral();
    let w = grid.cell_volume() / grid.points() as f64;
    let mut work = 0.0;
    for a in 0..grid.dim() {
        for (fz, vz) in fs.comp(a).iter().zip(vs.comp(a)) {
            work += w * (fz * vz.conj()).re;
        }
        for (gz, fz) in g.comp_mut(a).iter_mut().zip(fs.comp(a)) {
            *gz += fz;
        }
    }
    work
}

/// Advances one time step and reports the ledger row it generated.
pub fn step(state: &SimState, cfg: &SimConfig) -> Result<(SimState, LedgerRow)> {
    let grid = cfg.grid;
    let dt = cfg.dt;

    let vmax = state.v.max_abs();
    let cfl = vmax * dt * grid.n() as f64 / grid.box_len();
    if cfl > cfg.cfl_limit {
        return Err(Error::CflViolation { cfl, limit: cfg.cfl_limit });
    }

    // pressure at the current velocity, warm-started from the previous one
    let popts = PressureOpts {
        tol: cfg.pressure_tol,
        max_iter: cfg.pressure_max_iter,
        damping: None,
        initial_guess: Some(state.p.clone()),
    };
    let (p, preport) = solve_pressure(&state.v, &cfg.model, &popts)?;

    let ExplicitRhs { mut g, stress_work, phi_dissipation } =
        explicit_rhs(&state.v, &p, &cfg.model)?;
    let forcing_work = add_forcing(&mut g, cfg, state.t, &state.v);

    let g_norm2: f64 = norms::l2_spec_vec(&g).powi(2);

    // implicit diagonal biharmonic solve
    let vs = state.v.to_spectral();
    let mut v_next = SpectralVector::zeros(grid);
    for a in 0..grid.dim() {
        let (vn, va, ga) = (v_next.comp_mut(a), vs.comp(a), g.comp(a));
        for flat in 0..grid.points() {
            let k2 = grid.k2_deriv_at(flat);
            vn[flat] = (va[flat] + dt * ga[flat]) / (1.0 + dt * cfg.delta * k2 * k2);
        }
    }
    ops::leray_project_spec(&mut v_next); // restores div v = 0 exactly

    let e_old = 0.5 * norms::l2_spec_vec(&vs).powi(2);
    let e_new = 0.5 * norms::l2_spec_vec(&v_next).powi(2);
    let biharmonic = cfg.delta * ops::hessian_norm2_vec_spec(&v_next);
    let step_defect = e_new - e_old + dt * (stress_work + biharmonic - forcing_work);
    let eps_step = 0.5 * dt * dt * g_norm2;

    let mut incr2 = 0.0;
    {
        let w = grid.cell_volume() / grid.points() as f64;
        for a in 0..grid.dim() {
            for (x, y) in v_next.comp(a).iter().zip(vs.comp(a)) {
                incr2 += w * (x - y).norm_sqr();
            }
        }
    }

    let div_norm = norms::l2_spec_scalar(&ops::div_spec(&v_next));
    let grad_norm = norms::h1_seminorm2_spec(&v_next).sqrt();
    let div_residual = if grad_norm > 0.0 { div_norm / grad_norm } else { 0.0 };
    debug_assert!(
        div_residual <= 1e-10,
        "divergence residual {div_residual} exceeded the solenoidal budget"
    );

    let next = SimState {
        t: state.t + dt,
        step_index: state.step_index + 1,
        v: v_next.to_physical(),
        p,
    };
    let row = LedgerRow {
        step: next.step_index,
        t: next.t,
        energy: e_new,
        stress_work,
        phi_dissipation,
        biharmonic,
        cum_stress_work: 0.0,
        cum_phi: 0.0,
        cum_biharmonic: 0.0,
        step_defect,
        eps_step,
        forcing_work,
        increment_rate: incr2.sqrt() / dt,
        div_residual,
        cfl,
        pressure_iterations: preport.iterations,
        pressure_residual: preport.fixed_point_residual,
    };
    Ok((next, row))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub v: VectorField,
    pub p: ScalarField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub final_state: SimState,
    pub ledger: EnergyLedger,
    pub snapshots: Vec<Snapshot>,
    pub audit_series: Vec<SecondGradientRecord>,
    /// running ∫ weighted dt over the audit cadence
    pub audit_integral: f64,
    pub theorem_mode: bool,
}

/// Integrates from the given initial condition to t_final, populating the
/// ledger every step and sampling snapshots/audits on their cadences.
pub fn run(cfg: &SimConfig, v0: &InitialData) -> Result<RunResult> {
    cfg.validate()?;
    let grid = cfg.grid;
    let v_init = initial_data(grid, v0, cfg.delta)?;
    run_from(cfg, SimState::from_velocity(v_init))
}

/// Same as `run`, but starting from an existing (solenoidal) state.
pub fn run_from(cfg: &SimConfig, initial: SimState) -> Result<RunResult> {
    cfg.validate()?;
    let r = cfg.model.r();
    let mut state = initial;
    let e0 = state.kinetic_energy();
    let mut ledger = EnergyLedger {
        e0,
        c1: cfg.model.certificate.c1_est,
        rows: vec![LedgerRow {
            step: 0,
            t: state.t,
            energy: e0,
            stress_work: 0.0,
            phi_dissipation: 0.0,
            biharmonic: 0.0,
            cum_stress_work: 0.0,
            cum_phi: 0.0,
            cum_biharmonic: 0.0,
            step_defect: 0.0,
            eps_step: 0.0,
            forcing_work: 0.0,
            increment_rate: 0.0,
            div_residual: 0.0,
            cfl: 0.0,
            pressure_iterations: 0,
            pressure_residual: 0.0,
        }],
    };
    let mut snapshots = vec![Snapshot {
        step: 0,
        t: state.t,
        v: state.v.clone(),
        p: state.p.clone(),
    }];
    let audit_enabled = cfg.audit_every > 0 && r > 1.8 && r <= 2.0;
    let mut audit_series = Vec::new();
    let mut audit_integral = 0.0;
    let mut last_audit_t = state.t;
    if audit_enabled {
        audit_series.push(second_gradient_audit(&state, cfg));
    }

    let n_steps = (cfg.t_final / cfg.dt).round() as usize;
    let (mut cum_sw, mut cum_phi, mut cum_bi) = (0.0, 0.0, 0.0);
    for _ in 0..n_steps {
        let (next, mut row) = step(&state, cfg)?;
        cum_sw += cfg.dt * row.stress_work;
        cum_phi += cfg.dt * row.phi_dissipation;
        cum_bi += cfg.dt * row.biharmonic;
        row.cum_stress_work = cum_sw;
        row.cum_phi = cum_phi;
        row.cum_biharmonic = cum_bi;
        ledger.rows.push(row);
        state = next;

        if cfg.snapshot_every > 0 && state.step_index % cfg.snapshot_every == 0 {
            snapshots.push(Snapshot {
                step: state.step_index,
                t: state.t,
                v: state.v.clone(),
                p: state.p.clone(),
            });
        }
        if audit_enabled && state.step_index % cfg.audit_every == 0 {
            let rec = second_gradient_audit(&state, cfg);
            audit_integral += (state.t - last_audit_t) * rec.weighted;
            last_audit_t = state.t;
            audit_series.push(rec);
        }
    }

    if snapshots.last().map(|s| s.step) != Some(state.step_index) {
        snapshots.push(Snapshot {
            step: state.step_index,
            t: state.t,
            v: state.v.clone(),
            p: state.p.clone(),
        });
    }
    let theorem_mode = cfg.theorem_mode();
    Ok(RunResult {
        final_state: state,
        ledger,
        snapshots,
        audit_series,
        audit_integral,
        theorem_mode,
    })
}

/// One row of a δ sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSweepRow {
    pub delta: f64,
    pub e0: f64,
    pub final_energy: f64,
    /// sup_t [E(t) + C₁·∫φ] for this δ
    pub sup_energy_dissipation: f64,
    /// ‖v_δ(T) − v_δ′(T)‖₂ against the next smaller δ (None on the last row)
    pub cauchy_diff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSweepTable {
    pub rows: Vec<DeltaSweepRow>,
    /// ½‖Π P v₀‖₂² before mollification: the δ-uniform reference energy
    pub e0_raw: f64,
    pub c1: f64,
}

/// Runs the configuration once per δ (each with its own δ-mollified initial
/// data) and tabulates final-state Cauchy differences and energy bounds.
pub fn delta_sweep(cfg: &SimConfig, v0: &InitialData, deltas: &[f64]) -> Result<DeltaSweepTable> {
    if deltas.is_empty() {
        return Err(Error::ConfigGeneral("delta sweep needs at least one delta".into()));
    }
    for pair in deltas.windows(2) {
        if pair[1] > pair[0] {
            return Err(Error::ConfigGeneral(
                "delta sweep values must be non-increasing".into(),
            ));
        }
    }
    if deltas.iter().any(|&d| d <= 0.0) {
        return Err(Error::ConfigGeneral("delta sweep values must be positive".into()));
    }

    let e0_raw = {
        let v = initial_data(cfg.grid, v0, 0.0)?;
        0.5 * (0..cfg.grid.dim())
            .map(|a| norms::l2_nodal(&cfg.grid, v.comp(a)).powi(2))
            .sum::<f64>()
    };

    let mut finals = Vec::new();
    let mut rows = Vec::new();
    for &delta in deltas {
        let cfg_d = SimConfig { delta, ..cfg.clone() };
        let result = run(&cfg_d, v0)?;
        rows.push(DeltaSweepRow {
            delta,
            e0: result.ledger.e0,
            final_energy: result.final_state.kinetic_energy(),
            sup_energy_dissipation: result.ledger.sup_energy_plus_dissipation(),
            cauchy_diff: None,
        });
        finals.push(result.final_state.v);
    }
    for i in 0..finals.len().saturating_sub(1) {
        let grid = cfg.grid;
        let diff2: f64 = (0..grid.dim())
            .map(|a| {
                let d: Vec<f64> = finals[i]
                    .comp(a)
                    .iter()
                    .zip(finals[i + 1].comp(a))
                    .map(|(x, y)| x - y)
                    .collect();
                norms::l2_nodal(&grid, &d).powi(2)
            })
            .sum();
        rows[i].cauchy_diff = Some(diff2.sqrt());
    }
    Ok(DeltaSweepTable { rows, e0_raw, c1: cfg.model.certificate.c1_est })
}

/// Band-limited solenoidal profile for manufactured-solution studies.
pub fn manufactured_profile(grid: Grid) -> VectorField {
    synth::random_solenoidal(grid, 424243, 1.0, 4)
}

/// ṽ(t) = (1 + ½ sin 2πt)·u(x) on the manufactured profile u.
pub fn manufactured_target(grid: Grid, t: f64) -> VectorField {
    let amp = 1.0 + 0.5 * (2.0 * std::f64::consts::PI * t).sin();
    let u = manufactured_profile(grid);
    let comps = (0..grid.dim())
        .map(|a| u.comp(a).iter().map(|x| amp * x).collect())
        .collect();
    VectorField::from_comps(grid, comps)
}

/// Like `manufactured_forcing`, but evaluates the force on a finer reference
/// grid and spectrally restricts it to the run grid. The coarse run then
/// misses the force harmonics beyond its band, so refining n exposes genuine
/// spatial error that decays spectrally down to the temporal floor.
pub fn manufactured_forcing_ref(cfg: &SimConfig, ref_grid: Grid) -> Forcing {
    let inner_cfg = SimConfig { grid: ref_grid, ..cfg.clone() };
    let inner = manufactured_forcing(&inner_cfg);
    Arc::new(move |t: f64, grid: Grid| {
        let fine = inner(t, ref_grid);
        ops::spectral_restrict(&fine, grid)
    })
}

/// Builds f(t) = ṽ_t − P N(ṽ) + δΔ²ṽ with the same discrete operators the
/// stepper applies, so the only error left is the time discretization.
pub fn manufactured_forcing(cfg: &SimConfig) -> Forcing {
    let model = cfg.model.clone();
    let delta = cfg.delta;
    let pressure_tol = cfg.pressure_tol;
    let pressure_max_iter = cfg.pressure_max_iter;
    Arc::new(move |t: f64, grid: Grid| {
        let target = manufactured_target(grid, t);
        let dadt = std::f64::consts::PI * (2.0 * std::f64::consts::PI * t).cos();
        let u = manufactured_profile(grid);

        let popts = PressureOpts {
            tol: pressure_tol,
            max_iter: pressure_max_iter,
            ..Default::default()
        };
        let (p, _) = solve_pressure(&target, &model, &popts)
            .expect("pressure solve on the manufactured target");
        let rhs = explicit_rhs(&target, &p, &model)
            .expect("manufactured right side stays finite");

        let mut f_spec = rhs.g;
        // f = ṽ_t − PN(ṽ) + δΔ²ṽ, assembled per mode
        let us = u.to_spectral();
        let ts = target.to_spectral();
        for a in 0..grid.dim() {
            let (fa, ua, ta) = (f_spec.comp_mut(a), us.comp(a), ts.comp(a));
            for flat in 0..grid.points() {
                let k2 = grid.k2_deriv_at(flat);
                fa[flat] = dadt * ua[flat] - fa[flat] + delta * k2 * k2 * ta[flat];
            }
        }
        f_spec.to_physical()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::ModelSpec;
    use std::f64::consts::PI;

    fn power_law(r: f64, gamma_amp: f64) -> CertifiedModel {
        CertifiedModel::certify_default(ModelSpec::AdmissiblePowerLaw { r, gamma_amp }).unwrap()
    }

    fn newtonian(nu_star: f64) -> CertifiedModel {
        CertifiedModel::certify_default(ModelSpec::NewtonianConstant { nu_star }).unwrap()
    }

    fn l2_vec(v: &VectorField) -> f64 {
        let grid = v.grid();
        (0..grid.dim())
            .map(|a| norms::l2_nodal(&grid, v.comp(a)).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn diff_norm(a: &VectorField, b: &VectorField) -> f64 {
        let grid = a.grid();
        (0..grid.dim())
            .map(|c| {
                let d: Vec<f64> =
                    a.comp(c).iter().zip(b.comp(c)).map(|(x, y)| x - y).collect();
                norms::l2_nodal(&grid, &d).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn rest_state_is_a_fixed_point() {
        let grid = Grid::new(16, 2.0 * PI, 3).unwrap();
        let cfg = SimConfig::new(grid, power_law(1.9, 0.2), 1e-3, 1e-2, 0.1);
        let result = run(&cfg, &InitialData::Rest).unwrap();
        assert_eq!(l2_vec(&result.final_state.v), 0.0);
        for row in &result.ledger.rows {
            assert_eq!(row.energy, 0.0);
            assert_eq!(row.stress_work, 0.0);
        }
    }

    #[test]
    fn skew_convection_produces_no_energy() {
        let grid = Grid::new(16, 2.0 * PI, 3).unwrap();
        let v = initial_data(
            grid,
            &InitialData::RandomSolenoidal { seed: 4, amplitude: 1.5, mmax: 4 },
            0.0,
        )
        .unwrap();
        let conv = convective_rhs_spec(&v);
        let vs = v.to_spectral();
        let w = grid.cell_volume() / grid.points() as f64;
        let mut inner = 0.0;
        let mut conv_norm2 = 0.0;
        for a in 0..3 {
            for (c, z) in conv.comp(a).iter().zip(vs.comp(a)) {
                inner += w * (c * z.conj()).re;
                conv_norm2 += w * c.norm_sqr();
            }
        }
        let scale = conv_norm2.sqrt() * l2_vec(&v);
        assert!(inner.abs() <= 1e-12 * scale, "conv injects energy: {inner}");
    }

    #[test]
    fn pure_advection_step_gains_exactly_the_square_term() {
        // with S = 0, δ = 0 the explicit step gives E⁺ − E = ½dt²‖PN‖² exactly
        let grid = Grid::new(16, 2.0 * PI, 3).unwrap();
        let v = initial_data(
            grid,
            &InitialData::RandomSolenoidal { seed: 6, amplitude: 1.0, mmax: 4 },
            0.0,
        )
        .unwrap();
        let mut g = convective_rhs_spec(&v);
        ops::leray_project_spec(&mut g);
        let dt = 1e-3;
        let mut vnext = v.to_spectral();
        vnext.axpy(dt, &g);
        let e_old = 0.5 * norms::l2_spec_vec(&v.to_spectral()).powi(2);
        let e_new = 0.5 * norms::l2_spec_vec(&vnext).powi(2);
        let expect = 0.5 * dt * dt * norms::l2_spec_vec(&g).powi(2);
        assert!(
            ((e_new - e_old) - expect).abs() <= 1e-13 * e_old.max(1.0),
            "energy gain {} vs square term {}",
            e_new - e_old,
            expect
        );
    }

    #[test]
    fn taylor_green_decays_at_the_newtonian_rate() {
        let grid = Grid::new(32, 2.0 * PI, 2).unwrap();
        let nu_star = 0.25;
        let mut cfg = SimConfig::new(grid, newtonian(nu_star), 0.0, 1e-3, 0.2);
        cfg.exploratory = true; // r = 2 sits outside the theorem window
        let result = run(&cfg, &InitialData::TaylorGreen { amplitude: 1.0 }).unwrap();
        let t = result.final_state.t;
        let decay = (-2.0 * nu_star * t).exp();
        let exact = {
            let tg = initial_data(grid, &InitialData::TaylorGreen { amplitude: 1.0 }, 0.0)
                .unwrap();
            let comps = (0..2)
                .map(|a| tg.comp(a).iter().map(|x| decay * x).collect())
                .collect();
            VectorField::from_comps(grid, comps)
        };
        let err = diff_norm(&result.final_state.v, &exact) / l2_vec(&exact);
        assert!(err < 1e-4, "decay error {err}");
    }

    #[test]
    fn manufactured_solution_converges_at_first_order() {
        let grid = Grid::new(16, 2.0 * PI, 2).unwrap();
        let model = power_law(1.9, 0.2);
        let t_final = 0.2;
        let mut errors = Vec::new();
        for dt in [2e-3, 1e-3] {
            let mut cfg = SimConfig::new(grid, model.clone(), 1e-3, dt, t_final);
            cfg.forcing = Some(manufactured_forcing(&cfg));
            let v0 = manufactured_target(grid, 0.0);
            let result = run_from(&cfg, SimState::from_velocity(v0)).unwrap();
            let target = manufactured_target(grid, result.final_state.t);
            errors.push(diff_norm(&result.final_state.v, &target) / l2_vec(&target));
        }
        let (coarse, fine) = (errors[0], errors[1]);
        assert!(coarse < 0.05, "coarse error unexpectedly large: {coarse}");
        let order = (coarse / fine).log2();
        assert!(order > 0.75, "convergence order {order} below first order");
    }

    #[test]
    fn cfl_violations_are_rejected() {
        let grid = Grid::new(16, 2.0 * PI, 2).unwrap();
        let cfg = SimConfig::new(grid, power_law(1.9, 0.2), 0.0, 0.5, 1.0);
        let v0 = InitialData::TaylorGreen { amplitude: 1.0 };
        match run(&cfg, &v0) {
            Err(Error::CflViolation { cfl, limit }) => {
                assert!(cfl > limit);
            }
            other => panic!("expected a CFL violation, got {other:?}"),
        }
    }

    #[test]
    fn runs_are_bit_deterministic() {
        let grid = Grid::new(16, 2.0 * PI, 3).unwrap();
        let cfg = SimConfig::new(grid, power_law(1.9, 0.2), 1e-3, 2e-3, 0.02);
        let v0 = InitialData::RandomSolenoidal { seed: 12, amplitude: 1.0, mmax: 4 };
        let a = run(&cfg, &v0).unwrap();
        let b = run(&cfg, &v0).unwrap();
        assert_eq!(a.ledger, b.ledger);
        for c in 0..3 {
            assert_eq!(a.final_state.v.comp(c), b.final_state.v.comp(c));
        }
    }

    #[test]
    fn energy_ledger_defects_obey_their_bound() {
        let grid = Grid::new(16, 2.0 * PI, 3).unwrap();
        let cfg = SimConfig::new(grid, power_law(1.9, 0.2), 1e-3, 2e-3, 0.1);
        let v0 = InitialData::RandomSolenoidal { seed: 17, amplitude: 1.0, mmax: 4 };
        let result = run(&cfg, &v0).unwrap();
        let mut prev_energy = f64::INFINITY;
        for row in &result.ledger.rows {
            assert!(
                row.step_defect <= row.eps_step + 1e-13 * (1.0 + row.energy),
                "step {} defect {} above bound {}",
                row.step,
                row.step_defect,
                row.eps_step
            );
            assert!(row.energy <= prev_energy * (1.0 + 1e-13) || row.step == 0);
            prev_energy = row.energy;
            assert!(row.div_residual <= 1e-10);
        }
        // coercivity: measured stress work dominates C₁·∫φ
        let last = result.ledger.rows.last().unwrap();
        assert!(
            result.ledger.c1 * last.cum_phi <= last.cum_stress_work * (1.0 + 1e-9),
            "phi dissipation exceeds stress work"
        );
    }

    #[test]
    fn initial_data_contracts_and_reproduces() {
        let grid = Grid::new(16, 2.0 * PI, 3).unwrap();
        let tg_raw = synth::taylor_green(grid, 1.0);
        let tg0 = initial_data(grid, &InitialData::TaylorGreen { amplitude: 1.0 }, 0.0)
            .unwrap();
        assert!(diff_norm(&tg_raw, &tg0) < 1e-12 * l2_vec(&tg_raw));

        let tgd = initial_data(grid, &InitialData::TaylorGreen { amplitude: 1.0 }, 0.2)
            .unwrap();
        assert!(l2_vec(&tgd) < l2_vec(&tg0));

        let spec = InitialData::RandomSolenoidal { seed: 3, amplitude: 1.0, mmax: 4 };
        let a = initial_data(grid, &spec, 0.1).unwrap();
        let b = initial_data(grid, &spec, 0.1).unwrap();
        for c in 0..3 {
            assert_eq!(a.comp(c), b.comp(c));
        }

        let grid2 = Grid::new(16, 2.0 * PI, 2).unwrap();
        assert!(initial_data(grid2, &InitialData::VortexRing { amplitude: 1.0 }, 0.1).is_err());
    }

    #[test]
    fn theorem_mode_gate_is_enforced() {
        let grid = Grid::new(8, 2.0 * PI, 2).unwrap();
        let mut cfg = SimConfig::new(grid, power_law(1.7, 0.1), 1e-3, 1e-3, 0.0);
        assert!(cfg.validate().is_err(), "r = 1.7 must not pass as theorem mode");
        cfg.exploratory = true;
        assert!(cfg.validate().is_ok());
        assert!(!cfg.theorem_mode());

        let cfg_ok = SimConfig::new(grid, power_law(1.9, 0.2), 1e-3, 1e-3, 0.0);
        assert!(cfg_ok.validate().is_ok());
        assert!(cfg_ok.theorem_mode());
    }

    #[test]
    fn delta_sweep_differences_shrink() {
        let grid = Grid::new(16, 2.0 * PI, 2).unwrap();
        let cfg = SimConfig::new(grid, power_law(1.9, 0.2), 0.0, 2e-3, 0.1);
        let v0 = InitialData::TaylorGreen { amplitude: 1.0 };

        let same = delta_sweep(&cfg, &v0, &[1e-3, 1e-3]).unwrap();
        assert_eq!(same.rows[0].cauchy_diff, Some(0.0));

        let table = delta_sweep(&cfg, &v0, &[4e-3, 2e-3, 1e-3]).unwrap();
        let d01 = table.rows[0].cauchy_diff.unwrap();
        let d12 = table.rows[1].cauchy_diff.unwrap();
        assert!(d01 > 0.0 && d12 > 0.0);
        assert!(d12 < d01, "Cauchy differences did not shrink: {d01} then {d12}");
        // the δ-uniform bound: every run stays below the raw initial energy
        for row in &table.rows {
            assert!(row.sup_energy_dissipation <= table.e0_raw * (1.0 + 1e-6));
        }
    }

    #[test]
    fn newtonian_sweep_scales_linearly_in_delta() {
        let grid = Grid::new(16, 2.0 * PI, 2).unwrap();
        let mut cfg = SimConfig::new(grid, newtonian(0.1), 0.0, 2e-3, 0.1);
        cfg.exploratory = true;
        let v0 = InitialData::TaylorGreen { amplitude: 1.0 };
        let table = delta_sweep(&cfg, &v0, &[4e-3, 2e-3, 1e-3]).unwrap();
        let d01 = table.rows[0].cauchy_diff.unwrap();
        let d12 = table.rows[1].cauchy_diff.unwrap();
        // gaps in δ halve, so first-order behavior halves the differences
        let ratio = d01 / d12;
        assert!((1.4..=2.8).contains(&ratio), "delta scaling ratio {ratio}");
    }

    #[test]
    fn second_gradient_audit_tracks_the_decay() {
        let grid = Grid::new(16, 2.0 * PI, 3).unwrap();
        let mut cfg = SimConfig::new(grid, power_law(1.9, 0.2), 1e-3, 2e-3, 0.2);
        cfg.audit_every = 5;
        let zero = second_gradient_audit(&SimState::rest(grid), &cfg);
        assert_eq!(zero.i_r, 0.0);
        assert_eq!(zero.weighted, 0.0);
        assert!((zero.lambda - 22.0 / 7.0).abs() < 1e-12);

        let v0 = InitialData::RandomSolenoidal { seed: 9, amplitude: 1.0, mmax: 4 };
        let result = run(&cfg, &v0).unwrap();
        // cadence 5 over 100 steps: initial record plus 20 sampled ones
        assert_eq!(result.audit_series.len(), 21);
        assert!(result.audit_integral.is_finite() && result.audit_integral > 0.0);
        for rec in &result.audit_series {
            assert!(rec.i_r.is_finite() && rec.i_r >= 0.0);
            assert!(rec.weighted.is_finite());
        }
        // I_r itself decays with the flow even though the λ-weighted ratio
        // may transiently grow while ‖∇v‖² is still above unit size
        let first = result.audit_series.first().unwrap().i_r;
        let last = result.audit_series.last().unwrap().i_r;
        assert!(last < first, "I_r should decay with the flow: {first} -> {last}");
    }
}
