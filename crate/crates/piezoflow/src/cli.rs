//! Command-line entry point: six subcommands over declarative configs.
//!
//! ```text
//! piezoflow certify              --config model.cfg    --out DIR
//! piezoflow solve-pressure       --config model.cfg    --field v.bin --out DIR
//! piezoflow simulate             --config run.cfg      --out DIR
//! piezoflow sweep-delta          --config run.cfg      --out DIR
//! piezoflow verify-inequalities  --config verify.cfg   --out DIR
//! piezoflow report               --run DIR             --out DIR
//! ```
//!
//! Exit codes: 0 success, 2 config error (including CFL-impossible dt),
//! 3 certification failure, 4 pressure non-convergence, 5 audit/identity
//! failure, 6 I/O or snapshot format error, 1 internal. Every run writes a
//! `manifest.txt` naming its outputs; rerunning an identical config gives
//! byte-identical numerical files.

use crate::analysis::{self, EnsembleSpec};
use crate::config::{self, ConfigDoc};
use crate::constitutive::{AssumptionCertificate, CertifiedModel};
use crate::error::{Error, Result};
use crate::manifest::RunManifest;
use crate::plot::Plot;
use crate::pressure::{solve_pressure, PressureOpts};
use crate::spectral::{norms, ops, synth, Grid};
use crate::snapshot;
use crate::stepper::{self, EnergyLedger, LedgerRow};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

const USAGE: &str = "\
usage: piezoflow <subcommand> [flags]

subcommands:
  certify              --config FILE --out DIR    certify a constitutive model
  solve-pressure       --config FILE --field BIN --out DIR
                                                  Picard pressure solve on a snapshot
  simulate             --config FILE --out DIR    time integration with energy ledger
  sweep-delta          --config FILE --out DIR    regularization sweep with Cauchy table
  verify-inequalities  --config FILE --out DIR    exponent/inequality verification
  report               --run DIR --out DIR        render plots from a run directory
  help                                            print this text
";

/// Parses argv (without the program name) and runs the workflow.
pub fn dispatch(args: &[String]) -> i32 {
    match dispatch_inner(args) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. }
        | Error::ConfigGeneral(_)
        | Error::InvalidModel(_)
        | Error::GridMismatch(_)
        | Error::CflViolation { .. } => 2,
        Error::NotCertifiable { .. } | Error::NotCertified(_) => 3,
        Error::NoConvergence { .. } => 4,
        Error::AuditFailure(_) => 5,
        Error::Snapshot(_) | Error::Io(_) => 6,
        Error::NonFinite(_) => 1,
    }
}

#[derive(Debug, Default)]
struct Flags {
    config: Option<PathBuf>,
    field: Option<PathBuf>,
    run: Option<PathBuf>,
    out: Option<PathBuf>,
}

fn parse_flags(args: &[String]) -> Result<Flags> {
    let mut flags = Flags::default();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let slot = match arg.as_str() {
            "--config" => &mut flags.config,
            "--field" => &mut flags.field,
            "--run" => &mut flags.run,
            "--out" => &mut flags.out,
            other => {
                return Err(Error::ConfigGeneral(format!("unknown flag '{other}'\n{USAGE}")))
            }
        };
        let value = it
            .next()
            .ok_or_else(|| Error::ConfigGeneral(format!("flag '{arg}' needs a value")))?;
        if slot.is_some() {
            return Err(Error::ConfigGeneral(format!("flag '{arg}' given twice")));
        }
        *slot = Some(PathBuf::from(value));
    }
    Ok(flags)
}

fn required(path: &Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    path.clone()
        .ok_or_else(|| Error::ConfigGeneral(format!("missing required flag '{flag}'\n{USAGE}")))
}

fn out_dir(flags: &Flags) -> Result<PathBuf> {
    let dir = required(&flags.out, "--out")?;
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn note_thread_override() {
    if let Ok(raw) = std::env::var("PIEZOFLOW_THREADS") {
        match raw.parse::<usize>() {
            Ok(1) => {}
            Ok(n) => eprintln!(
                "note: PIEZOFLOW_THREADS={n} requested, but this build runs every \
                 workflow single-threaded for bit-reproducibility; continuing on one thread"
            ),
            Err(_) => eprintln!("note: ignoring unparseable PIEZOFLOW_THREADS='{raw}'"),
        }
    }
}

fn dispatch_inner(args: &[String]) -> Result<()> {
    let Some(sub) = args.first() else {
        return Err(Error::ConfigGeneral(format!("missing subcommand\n{USAGE}")));
    };
    note_thread_override();
    let flags = parse_flags(&args[1..])?;
    match sub.as_str() {
        "certify" => cmd_certify(&flags),
        "solve-pressure" => cmd_solve_pressure(&flags),
        "simulate" => cmd_simulate(&flags),
        "sweep-delta" => cmd_sweep_delta(&flags),
        "verify-inequalities" => cmd_verify_inequalities(&flags),
        "report" => cmd_report(&flags),
        "help" | "--help" | "-h" => {
            println!("{USAGE}");
            Ok(())
        }
        other => Err(Error::ConfigGeneral(format!("unknown subcommand '{other}'\n{USAGE}"))),
    }
}

fn certificate_text(cert: &AssumptionCertificate) -> String {
    let mut text = String::new();
    let _ = writeln!(text, "model = {}", cert.model.kind_name());
    let _ = writeln!(text, "r = {:.17e}", cert.r);
    let _ = writeln!(text, "c1_est = {:.17e}", cert.c1_est);
    let _ = writeln!(text, "c2_est = {:.17e}", cert.c2_est);
    let _ = writeln!(text, "gamma0_est = {:.17e}", cert.gamma0_est);
    let _ = writeln!(text, "admissibility_threshold = {:.17e}", cert.admissibility_threshold());
    let _ = writeln!(text, "admissible = {}", cert.admissible);
    let _ = writeln!(text, "sample_count = {}", cert.sample_count);
    let _ = writeln!(text, "seed = {}", cert.seed);
    let _ = writeln!(text, "violations = {}", cert.violations.len());
    text
}

fn write_violations_csv(path: &Path, cert: &AssumptionCertificate) -> Result<()> {
    let mut csv = String::from("pressure,shear_magnitude,ellipticity_ratio\n");
    for v in &cert.violations {
        let _ = writeln!(csv, "{:.17e},{:.17e},{:.17e}", v.p, v.d_mag, v.ratio);
    }
    fs::write(path, csv)?;
    Ok(())
}

fn cmd_certify(flags: &Flags) -> Result<()> {
    let dir = out_dir(flags)?;
    let doc = ConfigDoc::load(&required(&flags.config, "--config")?)?;
    let spec = config::model_from(&doc)?;
    let sampler = config::sample_spec_from(&doc)?;
    doc.reject_unknown()?;

    let mut manifest = RunManifest::new(&doc.raw, sampler.seed, false);
    let cert_path = dir.join("certificate.txt");
    match CertifiedModel::certify(spec, &sampler) {
        Ok(certified) => {
            fs::write(&cert_path, certificate_text(&certified.certificate))?;
            manifest.add_output("certificate", &cert_path);
            manifest.theorem_mode = certified.certificate.admissible;
            manifest.write(&dir)?;
            println!(
                "certified {}: c1 = {:.6}, c2 = {:.6}, gamma0 = {:.6}, admissible = {}",
                certified.spec.kind_name(),
                certified.certificate.c1_est,
                certified.certificate.c2_est,
                certified.certificate.gamma0_est,
                certified.certificate.admissible
            );
            Ok(())
        }
        Err(Error::NotCertifiable { violations, certificate }) => {
            // write the negative certificate and the violating samples, then
            // report failure through the exit code
            fs::write(&cert_path, certificate_text(&certificate))?;
            manifest.add_output("certificate", &cert_path);
            let vpath = dir.join("violations.csv");
            write_violations_csv(&vpath, &certificate)?;
            manifest.add_output("violations", &vpath);
            manifest.write(&dir)?;
            Err(Error::NotCertifiable { violations, certificate })
        }
        Err(other) => Err(other),
    }
}

fn pressure_opts_from(doc: &ConfigDoc) -> Result<PressureOpts> {
    let mut opts = PressureOpts::default();
    if let Some(s) = doc.section("pressure") {
        opts.tol = s.get_or("tol", opts.tol)?;
        opts.max_iter = s.get_or("max_iter", opts.max_iter)?;
        opts.damping = s.opt("damping")?;
    }
    Ok(opts)
}

fn cmd_solve_pressure(flags: &Flags) -> Result<()> {
    let dir = out_dir(flags)?;
    let doc = ConfigDoc::load(&required(&flags.config, "--config")?)?;
    let spec = config::model_from(&doc)?;
    let sampler = config::sample_spec_from(&doc)?;
    let opts = pressure_opts_from(&doc)?;
    doc.reject_unknown()?;
    let v = snapshot::read_vector(&required(&flags.field, "--field")?)?;

    let model = CertifiedModel::certify(spec, &sampler)?;
    let (p, report) = solve_pressure(&v, &model, &opts)?;

    let mut manifest = RunManifest::new(&doc.raw, sampler.seed, model.certificate.admissible);
    let p_path = dir.join("pressure.bin");
    snapshot::write_scalar(&p_path, &p, &[("kind", "pressure".into())])?;
    manifest.add_output("pressure", &p_path);

    let mut rep = String::new();
    let _ = writeln!(rep, "iterations = {}", report.iterations);
    let _ = writeln!(rep, "converged = {}", report.converged);
    let _ = writeln!(rep, "fixed_point_residual = {:.17e}", report.fixed_point_residual);
    let _ = writeln!(rep, "rhs_scale = {:.17e}", report.rhs_scale);
    let _ = writeln!(rep, "gamma0_bound = {:.17e}", report.gamma0_bound);
    let rep_path = dir.join("report.txt");
    fs::write(&rep_path, rep)?;
    manifest.add_output("report", &rep_path);

    let mut csv = String::from("iteration,successive_diff,contraction_ratio\n");
    for (i, diff) in report.residuals.iter().enumerate() {
        let ratio = if i == 0 {
            String::new()
        } else {
            format!("{:.17e}", report.contraction_ratios.get(i - 1).copied().unwrap_or(f64::NAN))
        };
        let _ = writeln!(csv, "{},{:.17e},{}", i + 1, diff, ratio);
    }
    let csv_path = dir.join("residuals.csv");
    fs::write(&csv_path, csv)?;
    manifest.add_output("residuals", &csv_path);
    manifest.write(&dir)?;
    println!(
        "pressure solve converged in {} iterations, residual {:.3e}",
        report.iterations, report.fixed_point_residual
    );
    Ok(())
}

const LEDGER_HEADER: &str = "step,t,energy,stress_work,phi_dissipation,biharmonic,\
cum_stress_work,cum_phi,cum_biharmonic,step_defect,eps_step,forcing_work,\
increment_rate,div_residual,cfl,pressure_iterations,pressure_residual";

fn write_ledger_csv(path: &Path, ledger: &EnergyLedger) -> Result<()> {
    let mut csv = String::from(LEDGER_HEADER);
    csv.push('\n');
    for r in &ledger.rows {
        let _ = writeln!(
            csv,
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{},{:.17e}",
            r.step,
            r.t,
            r.energy,
            r.stress_work,
            r.phi_dissipation,
            r.biharmonic,
            r.cum_stress_work,
            r.cum_phi,
            r.cum_biharmonic,
            r.step_defect,
            r.eps_step,
            r.forcing_work,
            r.increment_rate,
            r.div_residual,
            r.cfl,
            r.pressure_iterations,
            r.pressure_residual
        );
    }
    fs::write(path, csv)?;
    Ok(())
}

fn read_ledger_csv(path: &Path) -> Result<Vec<LedgerRow>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == LEDGER_HEADER => {}
        _ => {
            return Err(Error::Snapshot(format!(
                "{}: not a ledger CSV (header mismatch)",
                path.display()
            )))
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 17 {
            return Err(Error::Snapshot(format!(
                "{}: line {} has {} columns, expected 17",
                path.display(),
                idx + 2,
                cols.len()
            )));
        }
        let f = |i: usize| -> Result<f64> {
            cols[i].parse().map_err(|_| {
                Error::Snapshot(format!("{}: bad float on line {}", path.display(), idx + 2))
            })
        };
        let u = |i: usize| -> Result<usize> {
            cols[i].parse().map_err(|_| {
                Error::Snapshot(format!("{}: bad integer on line {}", path.display(), idx + 2))
            })
        };
        rows.push(LedgerRow {
            step: u(0)?,
            t: f(1)?,
            energy: f(2)?,
            stress_work: f(3)?,
            phi_dissipation: f(4)?,
            biharmonic: f(5)?,
            cum_stress_work: f(6)?,
            cum_phi: f(7)?,
            cum_biharmonic: f(8)?,
            step_defect: f(9)?,
            eps_step: f(10)?,
            forcing_work: f(11)?,
            increment_rate: f(12)?,
            div_residual: f(13)?,
            cfl: f(14)?,
            pressure_iterations: u(15)?,
            pressure_residual: f(16)?,
        });
    }
    Ok(rows)
}

fn summary_text(result: &stepper::RunResult, model: &CertifiedModel) -> String {
    let ledger = &result.ledger;
    let mut text = String::new();
    let _ = writeln!(
        text,
        "mode = {}",
        if result.theorem_mode { "theorem" } else { "exploratory" }
    );
    let _ = writeln!(text, "model = {}", model.spec.kind_name());
    let _ = writeln!(text, "r = {:.17e}", model.r());
    let _ = writeln!(text, "c1_est = {:.17e}", model.certificate.c1_est);
    let _ = writeln!(text, "c2_est = {:.17e}", model.certificate.c2_est);
    let _ = writeln!(text, "gamma0_est = {:.17e}", model.certificate.gamma0_est);
    let _ = writeln!(text, "admissible = {}", model.certificate.admissible);
    let _ = writeln!(text, "t_final = {:.17e}", result.final_state.t);
    let _ = writeln!(text, "steps = {}", result.final_state.step_index);
    let _ = writeln!(text, "initial_energy = {:.17e}", ledger.e0);
    let _ = writeln!(text, "final_energy = {:.17e}", result.final_state.kinetic_energy());
    let _ = writeln!(text, "max_inequality_defect = {:.17e}", ledger.max_inequality_defect());
    let max_div = ledger.rows.iter().map(|r| r.div_residual).fold(0.0, f64::max);
    let _ = writeln!(text, "max_div_residual = {:.17e}", max_div);
    let max_defect_ratio = ledger
        .rows
        .iter()
        .skip(1)
        .map(|r| if r.eps_step > 0.0 { r.step_defect / r.eps_step } else { 0.0 })
        .fold(f64::NEG_INFINITY, f64::max);
    let _ = writeln!(text, "max_step_defect_over_bound = {:.17e}", max_defect_ratio);
    let _ = writeln!(text, "audit_records = {}", result.audit_series.len());
    if !result.audit_series.is_empty() {
        let _ = writeln!(text, "audit_time_integral = {:.17e}", result.audit_integral);
        let _ = writeln!(
            text,
            "audit_integral_bounded = {}",
            result.audit_integral.is_finite()
        );
    }
    text
}

fn cmd_simulate(flags: &Flags) -> Result<()> {
    let dir = out_dir(flags)?;
    let doc = ConfigDoc::load(&required(&flags.config, "--config")?)?;
    let grid = config::grid_from(&doc)?;
    let spec = config::model_from(&doc)?;
    let sampler = config::sample_spec_from(&doc)?;
    let init = config::initial_from(&doc)?;
    let model = CertifiedModel::certify(spec, &sampler)?;
    let cfg = config::sim_config_from(&doc, grid, model.clone())?;
    doc.reject_unknown()?;
    cfg.validate()?;

    let result = stepper::run(&cfg, &init)?;

    let mut manifest = RunManifest::new(&doc.raw, config::seed_of(&doc), result.theorem_mode);
    let ledger_path = dir.join("ledger.csv");
    write_ledger_csv(&ledger_path, &result.ledger)?;
    manifest.add_output("ledger", &ledger_path);

    for snap in &result.snapshots {
        let meta = [
            ("kind", "velocity".to_string()),
            ("t", format!("{:.17e}", snap.t)),
            ("step", snap.step.to_string()),
        ];
        let v_path = dir.join(format!("velocity_{:06}.bin", snap.step));
        snapshot::write_vector(&v_path, &snap.v, &meta)?;
        manifest.add_output("snapshot", &v_path);
        let p_path = dir.join(format!("pressure_{:06}.bin", snap.step));
        snapshot::write_scalar(&p_path, &snap.p, &[("kind", "pressure".to_string())])?;
        manifest.add_output("snapshot", &p_path);
    }

    if !result.audit_series.is_empty() {
        let mut csv = String::from("t,i_r,grad_norm2,lambda,weighted\n");
        for rec in &result.audit_series {
            let _ = writeln!(
                csv,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                rec.t, rec.i_r, rec.grad_norm2, rec.lambda, rec.weighted
            );
        }
        let audit_path = dir.join("audit.csv");
        fs::write(&audit_path, csv)?;
        manifest.add_output("audit", &audit_path);
    }

    let summary_path = dir.join("summary.txt");
    fs::write(&summary_path, summary_text(&result, &model))?;
    manifest.add_output("summary", &summary_path);
    manifest.write(&dir)?;
    println!(
        "simulated to t = {:.6} in {} steps ({} mode), final energy {:.6e}",
        result.final_state.t,
        result.final_state.step_index,
        if result.theorem_mode { "theorem" } else { "exploratory" },
        result.final_state.kinetic_energy()
    );
    Ok(())
}

fn cmd_sweep_delta(flags: &Flags) -> Result<()> {
    let dir = out_dir(flags)?;
    let doc = ConfigDoc::load(&required(&flags.config, "--config")?)?;
    let grid = config::grid_from(&doc)?;
    let spec = config::model_from(&doc)?;
    let sampler = config::sample_spec_from(&doc)?;
    let init = config::initial_from(&doc)?;
    let deltas = config::sweep_deltas_from(&doc)?;
    let model = CertifiedModel::certify(spec, &sampler)?;
    let cfg = config::sim_config_from(&doc, grid, model)?;
    doc.reject_unknown()?;
    cfg.validate()?;

    let table = stepper::delta_sweep(&cfg, &init, &deltas)?;

    let mut manifest = RunManifest::new(&doc.raw, config::seed_of(&doc), cfg.theorem_mode());
    let mut csv = String::from("delta,e0,final_energy,sup_energy_dissipation,cauchy_diff\n");
    for row in &table.rows {
        let diff = row.cauchy_diff.map(|d| format!("{d:.17e}")).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{:.17e},{:.17e},{:.17e},{:.17e},{}",
            row.delta, row.e0, row.final_energy, row.sup_energy_dissipation, diff
        );
    }
    let csv_path = dir.join("sweep.csv");
    fs::write(&csv_path, csv)?;
    manifest.add_output("sweep", &csv_path);

    let diffs: Vec<f64> = table.rows.iter().filter_map(|r| r.cauchy_diff).collect();
    let monotone = diffs.windows(2).all(|w| w[1] <= w[0]);
    let max_sup = table
        .rows
        .iter()
        .map(|r| r.sup_energy_dissipation)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut summary = String::new();
    let _ = writeln!(summary, "mode = {}", if cfg.theorem_mode() { "theorem" } else { "exploratory" });
    let _ = writeln!(summary, "runs = {}", table.rows.len());
    let _ = writeln!(summary, "e0_raw = {:.17e}", table.e0_raw);
    let _ = writeln!(summary, "c1 = {:.17e}", table.c1);
    let _ = writeln!(summary, "max_sup_energy_dissipation = {:.17e}", max_sup);
    let _ = writeln!(summary, "cauchy_monotone = {monotone}");
    let summary_path = dir.join("summary.txt");
    fs::write(&summary_path, summary)?;
    manifest.add_output("summary", &summary_path);
    manifest.write(&dir)?;
    println!(
        "swept {} deltas: {} Cauchy differences, monotone = {monotone}",
        table.rows.len(),
        diffs.len()
    );
    Ok(())
}

fn verify_section(doc: &ConfigDoc) -> Result<(f64, usize, EnsembleSpec)> {
    let s = doc.require("verify")?;
    let r: f64 = s.get("r")?;
    let count: usize = s.get_or("count", 100)?;
    let mut ens = EnsembleSpec::default();
    ens.count = count;
    ens.n = s.get_or("n", ens.n)?;
    ens.dim = s.get_or("dim", ens.dim)?;
    ens.seed = s.get_or("seed", ens.seed)?;
    ens.mmax = s.get_or("mmax", ens.mmax)?;
    ens.amplitude = s.get_or("amplitude", ens.amplitude)?;
    ens.box_len = s.get_or("box_len", ens.box_len)?;
    Ok((r, count, ens))
}

fn cmd_verify_inequalities(flags: &Flags) -> Result<()> {
    let dir = out_dir(flags)?;
    let doc = ConfigDoc::load(&required(&flags.config, "--config")?)?;
    let (r, count, ens) = verify_section(&doc)?;
    doc.reject_unknown()?;

    let mut manifest = RunManifest::new(&doc.raw, ens.seed, false);
    let mut csv = String::from("inequality,field,left,right,constant,ratio,pass\n");
    let mut hard_failures: Vec<String> = Vec::new();

    // exponent identities across the admissible window
    let mut max_a_err = 0.0f64;
    let mut max_b_err = 0.0f64;
    for i in 0..1000 {
        let rr = 1.8 + 0.2 * (i as f64 + 0.5) / 1000.0;
        let set = analysis::exponents(rr)?;
        max_a_err = max_a_err.max((set.a_exp - set.r).abs() / set.r);
        max_b_err = max_b_err.max((set.b_exp - 2.0 * set.lambda).abs() / (2.0 * set.lambda));
    }
    let exp_pass = max_a_err <= 1e-12 && max_b_err <= 1e-12;
    let _ = writeln!(
        csv,
        "exponent-identities,sweep-1000,{max_a_err:.17e},{max_b_err:.17e},1e-12,0,{exp_pass}"
    );
    if !exp_pass {
        hard_failures.push("exponent identities".into());
    }

    // per-field interpolation + partition identities on |D(v)|
    let grid = Grid::new(ens.n, ens.box_len, ens.dim)?;
    for member in 0..count {
        let v = synth::random_solenoidal(grid, ens.seed + member as u64, ens.amplitude, ens.mmax);
        let dmags = ops::sym_grad(&v).magnitudes();
        let desc = format!("field-{member}");
        let (row_a, row_b) = analysis::interpolation_check(&grid, &dmags, r, &desc)?;
        for row in [&row_a, &row_b] {
            let _ = writeln!(
                csv,
                "{},{desc},{:.17e},{:.17e},{:.17e},{:.17e},{}",
                row.id,
                row.left,
                row.right,
                row.constant,
                row.ratio(),
                row.pass
            );
            if !row.pass {
                hard_failures.push(format!("{} on {desc}", row.id));
            }
        }
        // partition of the q-th power across the small/large split
        let q = 3.0;
        let total = norms::lq_nodal(&grid, &dmags, q).powf(q);
        let small = norms::split_norm(&grid, &dmags, q, norms::SplitSide::Small).powf(q);
        let large = norms::split_norm(&grid, &dmags, q, norms::SplitSide::Large).powf(q);
        let err = (total - small - large).abs();
        let pass = err <= 1e-9 * total.max(1.0);
        let _ = writeln!(
            csv,
            "partition-q3,{desc},{:.17e},{:.17e},1e-9,{:.17e},{pass}",
            small + large,
            total,
            err
        );
        if !pass {
            hard_failures.push(format!("partition identity on {desc}"));
        }
    }

    // Korn / embedding / integrability ensemble ratios (soft: finite, recorded)
    let table = analysis::korn_embedding_report(&ens, r)?;
    let _ = writeln!(
        csv,
        "korn-ratio,ensemble-max,{:.17e},1,inf,{:.17e},{}",
        table.max_korn,
        table.max_korn,
        table.max_korn.is_finite()
    );
    let _ = writeln!(
        csv,
        "embedding-ratio,ensemble-max,{:.17e},1,inf,{:.17e},{}",
        table.max_embedding,
        table.max_embedding,
        table.max_embedding.is_finite()
    );
    let _ = writeln!(
        csv,
        "integrability-ratio,ensemble-max,{:.17e},1,inf,{:.17e},{}",
        table.max_int,
        table.max_int,
        table.max_int.is_finite()
    );
    if !(table.max_korn.is_finite() && table.max_embedding.is_finite() && table.max_int.is_finite())
    {
        hard_failures.push("ensemble ratio not finite".into());
    }

    let csv_path = dir.join("inequalities.csv");
    fs::write(&csv_path, csv)?;
    manifest.add_output("inequalities", &csv_path);

    let mut summary = String::new();
    let _ = writeln!(summary, "r = {r:.17e}");
    let _ = writeln!(summary, "fields = {count}");
    let _ = writeln!(summary, "max_exponent_identity_error = {max_a_err:.17e}");
    let _ = writeln!(summary, "max_korn_ratio = {:.17e}", table.max_korn);
    let _ = writeln!(summary, "max_embedding_ratio = {:.17e}", table.max_embedding);
    let _ = writeln!(summary, "max_integrability_ratio = {:.17e}", table.max_int);
    let _ = writeln!(summary, "hard_failures = {}", hard_failures.len());
    let summary_path = dir.join("summary.txt");
    fs::write(&summary_path, summary)?;
    manifest.add_output("summary", &summary_path);
    manifest.write(&dir)?;

    if hard_failures.is_empty() {
        println!("verified: exponent identities, interpolation, partition on {count} fields");
        Ok(())
    } else {
        Err(Error::AuditFailure(format!(
            "{} hard identity failure(s): {}",
            hard_failures.len(),
            hard_failures.join("; ")
        )))
    }
}

fn cmd_report(flags: &Flags) -> Result<()> {
    let dir = out_dir(flags)?;
    let run_dir = required(&flags.run, "--run")?;
    let ledger_path = run_dir.join("ledger.csv");
    let sweep_path = run_dir.join("sweep.csv");
    if !ledger_path.exists() && !sweep_path.exists() {
        return Err(Error::ConfigGeneral(format!(
            "{} contains neither ledger.csv nor sweep.csv",
            run_dir.display()
        )));
    }
    let mut manifest = RunManifest::new("report", 0, false);

    if ledger_path.exists() {
        let rows = read_ledger_csv(&ledger_path)?;
        let energy: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, r.energy)).collect();
        let path = dir.join("energy.svg");
        Plot::new("kinetic energy", "t", "E(t)").add_series("E", &energy).write(&path)?;
        manifest.add_output("plot", &path);

        let stress: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, r.cum_stress_work)).collect();
        let phi: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, r.cum_phi)).collect();
        let biham: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, r.cum_biharmonic)).collect();
        let path = dir.join("dissipation.svg");
        Plot::new("cumulative dissipation", "t", "integral")
            .add_series("stress work", &stress)
            .add_series("phi dissipation", &phi)
            .add_series("biharmonic", &biham)
            .write(&path)?;
        manifest.add_output("plot", &path);

        let defect: Vec<(f64, f64)> =
            rows.iter().skip(1).map(|r| (r.t, r.step_defect.abs())).collect();
        let bound: Vec<(f64, f64)> = rows.iter().skip(1).map(|r| (r.t, r.eps_step)).collect();
        let path = dir.join("defect.svg");
        Plot::new("per-step energy defect", "t", "defect")
            .log_y()
            .add_series("|defect|", &defect)
            .add_series("bound", &bound)
            .write(&path)?;
        manifest.add_output("plot", &path);
    }

    if sweep_path.exists() {
        let text = fs::read_to_string(&sweep_path)?;
        let mut pts = Vec::new();
        for line in text.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() == 5 && !cols[4].is_empty() {
                if let (Ok(delta), Ok(diff)) = (cols[0].parse::<f64>(), cols[4].parse::<f64>()) {
                    pts.push((delta.log10(), diff));
                }
            }
        }
        if !pts.is_empty() {
            let path = dir.join("sweep.svg");
            Plot::new("regularization Cauchy differences", "log10 delta", "||v_i(T) - v_i+1(T)||")
                .log_y()
                .add_series("difference", &pts)
                .write(&path)?;
            manifest.add_output("plot", &path);
        }
    }

    manifest.write(&dir)?;
    println!("report written to {}", dir.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(args: &[&str]) -> Vec<String> {
        args.iter().map(|a| a.to_string()).collect()
    }

    #[test]
    fn usage_errors_exit_with_config_code() {
        assert_eq!(dispatch(&s(&[])), 2);
        assert_eq!(dispatch(&s(&["frobnicate"])), 2);
        assert_eq!(dispatch(&s(&["simulate", "--bogus", "x"])), 2);
        assert_eq!(dispatch(&s(&["simulate"])), 2); // missing --out
        assert_eq!(dispatch(&s(&["help"])), 0);
    }

    #[test]
    fn exit_codes_partition_the_error_enum() {
        assert_eq!(exit_code(&Error::ConfigGeneral("x".into())), 2);
        assert_eq!(exit_code(&Error::Config { line: 1, msg: "x".into() }), 2);
        assert_eq!(exit_code(&Error::CflViolation { cfl: 1.0, limit: 0.4 }), 2);
        assert_eq!(exit_code(&Error::NotCertified("x".into())), 3);
        assert_eq!(
            exit_code(&Error::NoConvergence { iterations: 3, residual: 1.0, tol: 0.1 }),
            4
        );
        assert_eq!(exit_code(&Error::AuditFailure("x".into())), 5);
        assert_eq!(exit_code(&Error::Snapshot("x".into())), 6);
        assert_eq!(exit_code(&Error::NonFinite("x")), 1);
    }

    #[test]
    fn flag_parser_rejects_duplicates_and_dangling_values() {
        assert!(parse_flags(&s(&["--config", "a", "--config", "b"])).is_err());
        assert!(parse_flags(&s(&["--out"])).is_err());
        let flags = parse_flags(&s(&["--config", "a.cfg", "--out", "d"])).unwrap();
        assert_eq!(flags.config.unwrap(), PathBuf::from("a.cfg"));
        assert_eq!(flags.out.unwrap(), PathBuf::from("d"));
    }

    #[test]
    fn ledger_csv_roundtrips() {
        let dir = std::env::temp_dir().join(format!("ledger-test-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let row = LedgerRow {
            step: 3,
            t: 0.003,
            energy: 1.25,
            stress_work: 0.5,
            phi_dissipation: 0.25,
            biharmonic: 0.1,
            cum_stress_work: 1.5,
            cum_phi: 0.75,
            cum_biharmonic: 0.3,
            step_defect: -1e-9,
            eps_step: 2e-9,
            forcing_work: 0.0,
            increment_rate: 4.0,
            div_residual: 1e-13,
            cfl: 0.02,
            pressure_iterations: 4,
            pressure_residual: 1e-11,
        };
        let ledger = EnergyLedger { e0: 1.3, c1: 0.9, rows: vec![row.clone()] };
        let path = dir.join("ledger.csv");
        write_ledger_csv(&path, &ledger).unwrap();
        let rows = read_ledger_csv(&path).unwrap();
        assert_eq!(rows, vec![row]);
    }
}
