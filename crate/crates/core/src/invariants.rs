//! Conserved quantities, drift reports and the dynamical identities checked
//! along trajectories.
//!
//! On `E(A)` the diagonal torus `diag(e^{iφ_1}, …, e^{iφ_n})` acts by exact
//! magnetomorphisms with generators `(X_j)_z = i z_j e_j`. Each generator
//! yields the integral of motion
//!
//! ```text
//! F_j(q, v) = ⟨v, X_j⟩ − α_q(X_j) = ⟨v_j, i q_j⟩_ℝ − ½|q_j|²
//! ```
//!
//! and since `C = Σ_j ⟨v_j, i q_j⟩/a_j`, on the surface `C = ½ + Σ_j F_j/a_j`.
//! Poisson commutation of the `F_j` is checked through invariance of each
//! `F_j` under the circle actions generated by the others.

use num_complex::Complex64;

use crate::complex::{dot, jmul_slice};
use crate::error::{MagflowError, Result};
use crate::integrator::Trajectory;
use crate::surface::{c_gamma, c_gamma_slice, geodesic_accel, EllipsoidSpec, LevelSet, PhaseState};

/// Largest deviation of a sampled quantity from its value at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport {
    pub quantity: String,
    pub initial: f64,
    pub max_drift: f64,
    pub t_at_max: f64,
}

impl DriftReport {
    pub fn from_series(quantity: impl Into<String>, times: &[f64], values: &[f64]) -> Self {
        let initial = values.first().copied().unwrap_or(0.0);
        let (mut max_drift, mut t_at_max) = (0.0, times.first().copied().unwrap_or(0.0));
        for (&t, &x) in times.iter().zip(values) {
            let d = (x - initial).abs();
            if d > max_drift || d.is_nan() {
                max_drift = d;
                t_at_max = t;
            }
        }
        Self {
            quantity: quantity.into(),
            initial,
            max_drift,
            t_at_max,
        }
    }

    /// Like [`from_series`](Self::from_series) but measures `|Q(t)|` itself,
    /// for quantities whose target value is zero.
    pub fn from_magnitudes(quantity: impl Into<String>, times: &[f64], values: &[f64]) -> Self {
        let mut report = Self::from_series(quantity, times, values);
        report.max_drift = 0.0;
        for (&t, &x) in times.iter().zip(values) {
            if x.abs() > report.max_drift || x.is_nan() {
                report.max_drift = x.abs();
                report.t_at_max = t;
            }
        }
        report
    }
}

/// `E = ½|v|²`.
pub fn energy(st: &PhaseState) -> f64 {
    0.5 * st.v.norm_sqr()
}

/// `F_j` with a 0-based coordinate index.
pub(crate) fn coordinate_moment(st: &PhaseState, j: usize) -> f64 {
    let (q, v) = (st.q.get(j), st.v.get(j));
    // ⟨v_j, i q_j⟩_ℝ = Re(conj(v_j) · i q_j)
    (v.conj() * Complex64::i() * q).re - 0.5 * q.norm_sqr()
}

/// Torus moment map `F_j` for the generator rotating coordinate `j` (1-based).
pub fn moment_map_f(spec: &EllipsoidSpec, st: &PhaseState, j: usize) -> Result<f64> {
    if st.dim() != spec.n() {
        return Err(MagflowError::DimensionMismatch {
            expected: spec.n(),
            found: st.dim(),
        });
    }
    if j == 0 || j > spec.n() {
        return Err(MagflowError::IndexOutOfRange {
            index: j,
            len: spec.n(),
        });
    }
    Ok(coordinate_moment(st, j - 1))
}

/// `C − (½ + Σ_j F_j / a_j)`; equals `½(f(q) − 1)` up to roundoff.
pub fn c_identity_residual(spec: &EllipsoidSpec, st: &PhaseState) -> Result<f64> {
    let c = c_gamma(spec, st)?;
    let sum: f64 = spec
        .a()
        .iter()
        .enumerate()
        .map(|(j, a)| coordinate_moment(st, j) / a)
        .sum();
    Ok(c - (0.5 + sum))
}

/// `⟨X_q, v⟩_ℝ` with `X_q = ½ i q`, the contact vector field of the round sphere.
pub fn contact_pairing(st: &PhaseState) -> f64 {
    0.5 * dot(&jmul_slice(st.q.as_real()), st.v.as_real())
}

/// Max over interior samples of `|d/dt⟨γ̇, i∇f⟩ + Hess f[γ̇, iγ̇]|`, with the
/// derivative taken by central differences on the sample grid.
pub fn hessian_lemma_residual(s: &dyn LevelSet, traj: &Trajectory<PhaseState>) -> Result<f64> {
    if traj.len() < 3 {
        return Err(MagflowError::TooFewSamples {
            needed: 3,
            found: traj.len(),
        });
    }
    let dt = traj.times[1] - traj.times[0];
    let pairing: Vec<f64> = traj
        .states
        .iter()
        .map(|st| 2.0 * c_gamma_slice(s, st.q.as_real(), st.v.as_real()))
        .collect();
    let mut worst: f64 = 0.0;
    for k in 1..traj.len() - 1 {
        let st = &traj.states[k];
        let (q, v) = (st.q.as_real(), st.v.as_real());
        let deriv = (pairing[k + 1] - pairing[k - 1]) / (2.0 * dt);
        let hess = dot(&s.hess_apply(q, &jmul_slice(v)), v);
        worst = worst.max((deriv + hess).abs());
    }
    Ok(worst)
}

/// Max over interior samples of `|(q_{k+1} − 2q_k + q_{k−1})/Δ² − rhs(q_k, v_k)|`.
pub fn ode_residual(s: &dyn LevelSet, traj: &Trajectory<PhaseState>) -> Result<f64> {
    if traj.len() < 3 {
        return Err(MagflowError::TooFewSamples {
            needed: 3,
            found: traj.len(),
        });
    }
    let dt = traj.times[1] - traj.times[0];
    let mut worst: f64 = 0.0;
    for k in 1..traj.len() - 1 {
        let (prev, cur, next) = (&traj.states[k - 1], &traj.states[k], &traj.states[k + 1]);
        let acc = geodesic_accel(s, cur.q.as_real(), cur.v.as_real())?;
        let res: f64 = (0..acc.len())
            .map(|i| {
                let fd = (next.q[i] - 2.0 * cur.q[i] + prev.q[i]) / (dt * dt);
                (fd - acc[i]).powi(2)
            })
            .sum::<f64>()
            .sqrt();
        worst = worst.max(res);
    }
    Ok(worst)
}

/// Which conclusion of the interpolation property to check on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InterpolationMode {
    /// Initial velocity in the contact distribution `ker α`.
    Horizontal,
    /// Initial velocity equal to `r·X_q = r·½ i q`.
    FlowLine(f64),
}

const INTERP_START_TOL: f64 = 1e-12;

/// Horizontal mode reports `max |α_γ(γ̇)|`; flow-line mode reports
/// `max |γ̇ − r·½ iγ|`. Both are zero along exact solutions.
pub fn interpolation_checks(traj: &Trajectory<PhaseState>, mode: InterpolationMode) -> Result<DriftReport> {
    let first = traj
        .states
        .first()
        .ok_or(MagflowError::TooFewSamples { needed: 1, found: 0 })?;
    if (first.q.norm() - 1.0).abs() > 1e-9 {
        return Err(MagflowError::Precondition(
            "trajectory does not start on the unit sphere".into(),
        ));
    }
    let deviation = |st: &PhaseState| -> f64 {
        match mode {
            InterpolationMode::Horizontal => contact_pairing(st),
            InterpolationMode::FlowLine(r) => (&st.v - &st.q.jmul().scale(0.5 * r)).norm(),
        }
    };
    let d0 = deviation(first);
    if d0.abs() > INTERP_START_TOL {
        return Err(MagflowError::Precondition(format!(
            "initial data not in the declared mode {mode:?} (deviation {d0:e})"
        )));
    }
    let values: Vec<f64> = traj.states.iter().map(deviation).collect();
    let name = match mode {
        InterpolationMode::Horizontal => "alpha_v".to_string(),
        InterpolationMode::FlowLine(r) => format!("flow_line_deviation_r{r}"),
    };
    Ok(DriftReport::from_magnitudes(name, &traj.times, &values))
}

/// Multiplies coordinate `k` (0-based) of `q` and `v` by `e^{iφ}`.
pub fn rotate_coordinate(st: &PhaseState, k: usize, phi: f64) -> PhaseState {
    let rot = Complex64::from_polar(1.0, phi);
    let mut q = st.q.clone();
    let mut v = st.v.clone();
    q.set(k, rot * st.q.get(k));
    v.set(k, rot * st.v.get(k));
    PhaseState { q, v }
}

/// `|F_j(rotate_k(φ)·st) − F_j(st)|` with 1-based `j`, `k`.
pub fn torus_equivariance_check(spec: &EllipsoidSpec, st: &PhaseState, j: usize, k: usize, phi: f64) -> Result<f64> {
    let before = moment_map_f(spec, st, j)?;
    if k == 0 || k > spec.n() {
        return Err(MagflowError::IndexOutOfRange {
            index: k,
            len: spec.n(),
        });
    }
    let after = moment_map_f(spec, &rotate_coordinate(st, k - 1, phi), j)?;
    Ok((after - before).abs())
}

/// Every stock invariant sampled along an ellipsoid trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidSweep {
    pub drifts: Vec<DriftReport>,
    /// Smallest Cauchy–Schwarz margin seen; negative means the bound failed.
    pub min_c_bound_margin: f64,
    pub max_c_identity_residual: f64,
    pub max_f_residual: f64,
}

pub fn ellipsoid_sweep(spec: &EllipsoidSpec, traj: &Trajectory<PhaseState>) -> Result<EllipsoidSweep> {
    let mut series: Vec<(String, Vec<f64>)> = vec![("energy".into(), Vec::new()), ("C".into(), Vec::new())];
    series.extend((1..=spec.n()).map(|j| (format!("F_{j}"), Vec::new())));
    let mut min_margin = f64::INFINITY;
    let mut max_ident: f64 = 0.0;
    let mut max_f: f64 = 0.0;
    for st in &traj.states {
        series[0].1.push(energy(st));
        series[1].1.push(c_gamma(spec, st)?);
        for j in 0..spec.n() {
            series[2 + j].1.push(coordinate_moment(st, j));
        }
        min_margin = min_margin.min(crate::surface::c_bound_holds(spec, st)?.margin);
        max_ident = max_ident.max(c_identity_residual(spec, st)?.abs());
        max_f = max_f.max(crate::surface::constraint_residual(spec, &st.q));
    }
    Ok(EllipsoidSweep {
        drifts: series
            .into_iter()
            .map(|(name, values)| DriftReport::from_series(name, &traj.times, &values))
            .collect(),
        min_c_bound_margin: min_margin,
        max_c_identity_residual: max_ident,
        max_f_residual: max_f,
    })
}

/// `contact_pairing` as a standalone drift series.
pub fn contact_pairing_drift(traj: &Trajectory<PhaseState>) -> DriftReport {
    let values: Vec<f64> = traj.states.iter().map(contact_pairing).collect();
    DriftReport::from_series("contact_pairing", &traj.times, &values)
}
