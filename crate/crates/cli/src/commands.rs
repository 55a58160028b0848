use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;

use magflow::action::{
    circle_energy, circle_orbit, closed_form_free_action, free_time_action, lagrangian_action, mane_value,
    sign_with_band, ZERO_BAND,
};
use magflow::export::{format_f64 as fmt, phase_state_columns, revolution_state_columns, write_trajectory};
use magflow::flow::{EllipsoidFlow, SurfaceDiagnostics, SurfaceFlow};
use magflow::integrator::{integrate, IntegratorConfig, PhasePoint, Trajectory};
use magflow::invariants::{
    contact_pairing_drift, ellipsoid_sweep, hessian_lemma_residual, torus_equivariance_check, DriftReport,
};
use magflow::revolution::{RevolutionDiagnostics, RevolutionSystem};
use magflow::sampling::{random_tangent_state, SeedableRng, SplitMix64};
use magflow::sphere::{solve_sphere, sphere_coefficients};
use magflow::surface::TOL_CONSTRAINT;
use magflow::{EllipsoidSpec, LevelSet, PhaseState};

use crate::config::{Initial, RunConfig, System};
use crate::exit::{config_error, from_run, invariant_error, io_error, CliError};

/// Drift tolerance for conserved quantities.
pub const DRIFT_TOL: f64 = 1e-7;
/// Pointwise tolerance for the algebraic `C` identity and equivariance.
pub const IDENTITY_TOL: f64 = 1e-12;
pub const CONTACT_PAIRING_TOL: f64 = 1e-8;
pub const DEFAULT_SWEEP: usize = 10;
pub const EQUIVARIANCE_SAMPLES: usize = 100;

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| io_error(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn select_diagnostics<S>(traj: &mut Trajectory<S>, wanted: Option<&[String]>) -> Result<(), CliError> {
    let Some(wanted) = wanted else {
        return Ok(());
    };
    let idx = wanted
        .iter()
        .map(|w| {
            traj.diagnostic_names.iter().position(|n| n == w).ok_or_else(|| {
                config_error(format!(
                    "diagnostics: unknown column {w:?} (available: {})",
                    traj.diagnostic_names.join(", ")
                ))
            })
        })
        .collect::<Result<Vec<usize>, CliError>>()?;
    traj.diagnostic_names = idx.iter().map(|&i| traj.diagnostic_names[i].clone()).collect();
    for row in &mut traj.diagnostics {
        *row = idx.iter().map(|&i| row[i]).collect();
    }
    Ok(())
}

fn emit<S: PhasePoint>(
    traj: &mut Trajectory<S>,
    columns: &[String],
    cfg: &RunConfig,
    output: Option<PathBuf>,
) -> Result<(), CliError> {
    select_diagnostics(traj, cfg.diagnostics.as_deref())?;
    let path = output.or_else(|| cfg.output.as_ref().map(|o| o.path.clone()));
    let out = open_output(path.as_deref())?;
    write_trajectory(out, traj, columns).map_err(io_error)
}

fn require_initial(cfg: &RunConfig, system: &System) -> Result<Initial, CliError> {
    cfg.initial(system)?
        .ok_or_else(|| config_error("initial: required (give \"q\" and \"v\")"))
}

pub fn simulate(path: &Path, output: Option<PathBuf>) -> Result<(), CliError> {
    let cfg = crate::config::load(path)?;
    let system = cfg.system()?;
    let icfg = cfg.integrator(&system)?;
    let initial = require_initial(&cfg, &system)?;
    match (&system, initial) {
        (System::Ellipsoid(spec), Initial::Phase(st)) => {
            let diag = SurfaceDiagnostics::new(spec);
            let mut traj =
                integrate(&EllipsoidFlow::new(spec.clone()), &st, &icfg, &diag).map_err(|e| from_run("simulate", e))?;
            emit(&mut traj, &phase_state_columns(spec.n()), &cfg, output)
        }
        (System::Custom(s), Initial::Phase(st)) => {
            let diag = SurfaceDiagnostics::new(s.as_ref());
            let mut traj =
                integrate(&SurfaceFlow::new(s.clone()), &st, &icfg, &diag).map_err(|e| from_run("simulate", e))?;
            emit(&mut traj, &phase_state_columns(s.dim()), &cfg, output)
        }
        (System::Revolution(s), Initial::Rev(st)) => {
            let diag = RevolutionDiagnostics::new(s);
            let mut traj =
                integrate(&RevolutionSystem::new(s.clone()), &st, &icfg, &diag).map_err(|e| from_run("simulate", e))?;
            emit(&mut traj, &revolution_state_columns(), &cfg, output)
        }
        _ => unreachable!("initial state shape follows the system"),
    }
}

/// One line of the verify table.
#[derive(Debug, Clone)]
pub struct VerifyRow {
    pub quantity: String,
    pub initial: f64,
    pub max_drift: f64,
    pub t_at_max: f64,
    pub tol: f64,
}

impl VerifyRow {
    fn from_report(r: DriftReport, tol: f64) -> Self {
        Self {
            quantity: r.quantity,
            initial: r.initial,
            max_drift: r.max_drift,
            t_at_max: r.t_at_max,
            tol,
        }
    }

    fn scalar(quantity: &str, value: f64, tol: f64) -> Self {
        Self {
            quantity: quantity.into(),
            initial: value,
            max_drift: value,
            t_at_max: 0.0,
            tol,
        }
    }

    pub fn pass(&self) -> bool {
        self.max_drift <= self.tol
    }
}

/// Keeps, for every quantity, the row with the largest drift (first-seen order).
fn worst_rows(runs: Vec<Vec<VerifyRow>>) -> Vec<VerifyRow> {
    let mut out: Vec<VerifyRow> = Vec::new();
    for row in runs.into_iter().flatten() {
        match out.iter_mut().find(|r| r.quantity == row.quantity) {
            Some(r) if row.max_drift > r.max_drift || row.max_drift.is_nan() => *r = row,
            Some(_) => {}
            None => out.push(row),
        }
    }
    out
}

fn sweep_states(cfg: &RunConfig, s: &dyn LevelSet, initial: Option<Initial>) -> Vec<PhaseState> {
    let mut states = Vec::new();
    if let Some(Initial::Phase(st)) = initial {
        states.push(st);
    }
    let (count, speed) = match &cfg.sweep {
        Some(sw) => (sw.count, sw.speed),
        None if states.is_empty() => (DEFAULT_SWEEP, 1.0),
        None => (0, 1.0),
    };
    let mut rng = SplitMix64::seed_from_u64(cfg.seed);
    states.extend((0..count).map(|_| random_tangent_state(s, &mut rng, speed)));
    states
}

fn ellipsoid_rows(spec: &EllipsoidSpec, st: &PhaseState, icfg: &IntegratorConfig) -> magflow::Result<Vec<VerifyRow>> {
    let traj = integrate(&EllipsoidFlow::new(spec.clone()), st, icfg, &())?;
    let sweep = ellipsoid_sweep(spec, &traj)?;
    let mut rows: Vec<VerifyRow> = sweep
        .drifts
        .into_iter()
        .map(|r| VerifyRow::from_report(r, DRIFT_TOL))
        .collect();
    rows.push(VerifyRow::scalar(
        "c_bound_violation",
        (-sweep.min_c_bound_margin).max(0.0),
        IDENTITY_TOL,
    ));
    rows.push(VerifyRow::scalar(
        "c_identity_residual",
        sweep.max_c_identity_residual,
        IDENTITY_TOL,
    ));
    rows.push(VerifyRow::scalar("f_residual", sweep.max_f_residual, TOL_CONSTRAINT));
    if traj.len() >= 3 {
        rows.push(VerifyRow::scalar(
            "hessian_lemma_residual",
            hessian_lemma_residual(spec, &traj)?,
            DRIFT_TOL,
        ));
    }
    if spec.is_sphere() {
        rows.push(VerifyRow::from_report(
            contact_pairing_drift(&traj),
            CONTACT_PAIRING_TOL,
        ));
    }
    Ok(rows)
}

fn custom_rows(
    s: &magflow::surface::LevelSetSurface,
    st: &PhaseState,
    icfg: &IntegratorConfig,
) -> magflow::Result<Vec<VerifyRow>> {
    let diag = SurfaceDiagnostics::new(s.as_ref());
    let traj = integrate(&SurfaceFlow::new(s.clone()), st, icfg, &diag)?;
    let energy = traj.column("energy").expect("diagnostic column");
    let resid = traj.column("f_residual").expect("diagnostic column");
    Ok(vec![
        VerifyRow::from_report(DriftReport::from_series("energy", &traj.times, &energy), DRIFT_TOL),
        VerifyRow::from_report(
            DriftReport::from_magnitudes("f_residual", &traj.times, &resid),
            TOL_CONSTRAINT,
        ),
    ])
}

fn equivariance_row(spec: &EllipsoidSpec, seed: u64) -> magflow::Result<VerifyRow> {
    let mut rng = SplitMix64::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut worst: f64 = 0.0;
    for _ in 0..EQUIVARIANCE_SAMPLES {
        let speed = rng.gen_range(0.1..2.0);
        let st = random_tangent_state(spec, &mut rng, speed);
        let phi = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let j = rng.gen_range(1..=spec.n());
        let k = rng.gen_range(1..=spec.n());
        worst = worst.max(torus_equivariance_check(spec, &st, j, k, phi)?);
    }
    Ok(VerifyRow::scalar("torus_equivariance", worst, IDENTITY_TOL))
}

pub fn verify_rows(cfg: &RunConfig) -> Result<Vec<VerifyRow>, CliError> {
    let system = cfg.system()?;
    let icfg = cfg.integrator(&system)?;
    let initial = cfg.initial(&system)?;
    let run_err = |e| from_run("verify", e);
    match &system {
        System::Ellipsoid(spec) => {
            let states = sweep_states(cfg, spec, initial);
            let runs = states
                .par_iter()
                .map(|st| ellipsoid_rows(spec, st, &icfg))
                .collect::<magflow::Result<Vec<_>>>()
                .map_err(run_err)?;
            let mut rows = worst_rows(runs);
            rows.push(equivariance_row(spec, cfg.seed).map_err(run_err)?);
            Ok(rows)
        }
        System::Custom(s) => {
            let states = sweep_states(cfg, s.as_ref(), initial);
            let runs = states
                .par_iter()
                .map(|st| custom_rows(s, st, &icfg))
                .collect::<magflow::Result<Vec<_>>>()
                .map_err(run_err)?;
            Ok(worst_rows(runs))
        }
        System::Revolution(s) => {
            let Some(Initial::Rev(st)) = initial else {
                return Err(config_error("initial: required for revolution systems"));
            };
            let diag = RevolutionDiagnostics::new(s);
            let traj = integrate(&RevolutionSystem::new(s.clone()), &st, &icfg, &diag).map_err(run_err)?;
            Ok(["energy", "F"]
                .iter()
                .map(|name| {
                    let values = traj.column(name).expect("diagnostic column");
                    VerifyRow::from_report(DriftReport::from_series(*name, &traj.times, &values), DRIFT_TOL)
                })
                .collect())
        }
    }
}

pub fn verify(path: &Path) -> Result<(), CliError> {
    let cfg = crate::config::load(path)?;
    let rows = verify_rows(&cfg)?;
    let mut out = io::stdout().lock();
    let write = |out: &mut dyn Write| -> io::Result<()> {
        writeln!(out, "quantity,initial,max_drift,t_at_max,pass")?;
        for r in &rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.quantity,
                fmt(r.initial),
                fmt(r.max_drift),
                fmt(r.t_at_max),
                r.pass()
            )?;
        }
        out.flush()
    };
    write(&mut out).map_err(io_error)?;
    let failed: Vec<&str> = rows.iter().filter(|r| !r.pass()).map(|r| r.quantity.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(invariant_error(format!("invariant violation: {}", failed.join(", "))))
    }
}

pub struct OrbitsArgs {
    pub a: Vec<f64>,
    pub axis: Option<usize>,
    pub omegas: Vec<f64>,
    pub samples: usize,
    pub output: Option<PathBuf>,
}

pub fn orbits(args: OrbitsArgs) -> Result<(), CliError> {
    let spec = EllipsoidSpec::new(args.a.clone()).map_err(|e| config_error(format!("a: {e}")))?;
    let axis = args.axis.unwrap_or(spec.n());
    if axis == 0 || axis > spec.n() {
        return Err(config_error(format!("axis: must be in 1..={}", spec.n())));
    }
    if let Some(w) = args.omegas.iter().find(|w| **w == 0.0 || !w.is_finite()) {
        return Err(config_error(format!("omega: must be finite and nonzero, got {w}")));
    }
    if args.samples < 16 {
        return Err(config_error("samples: must be at least 16"));
    }
    let a_j = spec.a()[axis - 1];
    let mane = mane_value(&spec);
    let rows = args
        .omegas
        .par_iter()
        .map(|&omega| -> magflow::Result<(f64, f64, f64, f64, f64)> {
            let traj = circle_orbit(&spec, axis, omega, args.samples)?;
            let kappa = circle_energy(a_j, omega);
            Ok((
                omega,
                kappa,
                lagrangian_action(&traj)?,
                free_time_action(&traj, kappa)?,
                closed_form_free_action(a_j, omega),
            ))
        })
        .collect::<magflow::Result<Vec<_>>>()
        .map_err(|e| from_run("orbits", e))?;

    let mut out = open_output(args.output.as_deref())?;
    let mut failures = Vec::new();
    let mut body = String::from("axis,a_j,omega,kappa,S_L,S_free,closed_form,abs_err,sign\n");
    for (omega, kappa, s_l, s_free, closed) in rows {
        let abs_err = (s_free - closed).abs();
        let sign = sign_with_band(s_free);
        let cells = [a_j, omega, kappa, s_l, s_free, closed, abs_err].map(fmt).join(",");
        body.push_str(&format!("{axis},{cells},{sign}\n"));
        if abs_err > ZERO_BAND * closed.abs().max(1.0) {
            failures.push(format!("omega={omega}: quadrature error {abs_err:e}"));
        }
        if axis == spec.n() && kappa <= mane && sign > 0 {
            failures.push(format!("omega={omega}: positive action below the Mane value"));
        }
    }
    out.write_all(body.as_bytes())
        .and_then(|_| out.flush())
        .map_err(io_error)?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(invariant_error(failures.join("; ")))
    }
}

pub fn oracle(path: &Path) -> Result<(), CliError> {
    let cfg = crate::config::load(path)?;
    let system = cfg.system()?;
    let spec = match &system {
        System::Ellipsoid(spec) if spec.is_sphere() => spec.clone(),
        _ => return Err(config_error("system: oracle needs a sphere system")),
    };
    let r = spec.a()[0].sqrt();
    let icfg = cfg.integrator(&system)?;
    let st0 = match cfg.initial(&system)? {
        Some(Initial::Phase(st)) => st,
        _ => random_tangent_state(&spec, &mut SplitMix64::seed_from_u64(cfg.seed), 1.0),
    };
    let sup_error = |c: &IntegratorConfig| -> Result<f64, CliError> {
        let traj = integrate(&EllipsoidFlow::new(spec.clone()), &st0, c, &()).map_err(|e| from_run("oracle", e))?;
        let mut worst: f64 = 0.0;
        for (t, st) in traj.times.iter().zip(&traj.states) {
            let exact = solve_sphere(r, &st0, *t).map_err(|e| from_run("oracle", e))?;
            worst = worst.max(((&st.q - &exact.q).norm_sqr() + (&st.v - &exact.v).norm_sqr()).sqrt());
        }
        Ok(worst)
    };
    let coeffs = sphere_coefficients(r, &st0);
    let e1 = sup_error(&icfg)?;
    let half = IntegratorConfig {
        step: icfg.step / 2.0,
        sample_every: icfg.sample_every * 2,
        ..icfg.clone()
    };
    let e2 = sup_error(&half)?;
    let mut out = io::stdout().lock();
    let report = format!(
        "quantity,value\nradius,{}\nlambda,{}\ndegenerate,{}\nstep,{}\nt_end,{}\nsup_error,{}\nsup_error_half_step,{}\nratio,{}\n",
        fmt(r),
        fmt(coeffs.lambda),
        coeffs.degenerate,
        fmt(icfg.step),
        fmt(icfg.t_end),
        fmt(e1),
        fmt(e2),
        fmt(e1 / e2)
    );
    out.write_all(report.as_bytes())
        .and_then(|_| out.flush())
        .map_err(io_error)
}
