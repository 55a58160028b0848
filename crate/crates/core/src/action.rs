//! Lagrangian and free-time actions, the Mañé value of `E(A)`, and the
//! circle orbits `√a_j e^{iωt} e_j` that witness negative action.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::complex::ComplexVector;
use crate::error::{MagflowError, Result};
use crate::flow::SurfaceDiagnostics;
use crate::integrator::Trajectory;
use crate::surface::{EllipsoidSpec, PhaseState};

/// Band around zero inside which an action counts as zero.
pub const ZERO_BAND: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionReport {
    pub energy: f64,
    pub period: f64,
    pub s_l: f64,
    pub s_free: f64,
    pub samples: usize,
}

/// `L(q, v) = ½|v|² − α_q(v)`.
pub fn lagrangian(st: &PhaseState) -> f64 {
    0.5 * st.v.norm_sqr() - st.q.alpha(&st.v).expect("state dimensions agree")
}

fn check_grid(traj: &Trajectory<PhaseState>) -> Result<f64> {
    if traj.len() < 3 {
        return Err(MagflowError::TooFewSamples {
            needed: 3,
            found: traj.len(),
        });
    }
    let dt = traj.times[1] - traj.times[0];
    if !(dt > 0.0) {
        return Err(MagflowError::InvalidInput("time grid must be increasing".into()));
    }
    let uniform = traj.times.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt);
    if !uniform {
        return Err(MagflowError::InvalidInput("time grid must be uniform".into()));
    }
    Ok(dt)
}

/// Composite Simpson on a uniform grid; for an even number of samples the
/// last interval is added with the trapezoid rule.
pub fn simpson(values: &[f64], dt: f64) -> f64 {
    let intervals = values.len() - 1;
    let paired = intervals - intervals % 2;
    let mut sum = 0.0;
    for k in (0..paired).step_by(2) {
        sum += values[k] + 4.0 * values[k + 1] + values[k + 2];
    }
    let mut total = sum * dt / 3.0;
    if paired < intervals {
        total += 0.5 * dt * (values[intervals - 1] + values[intervals]);
    }
    total
}

/// `S_L(γ) = ∫ L(γ, γ̇) dt` over the span of the trajectory.
pub fn lagrangian_action(traj: &Trajectory<PhaseState>) -> Result<f64> {
    let dt = check_grid(traj)?;
    let values: Vec<f64> = traj.states.iter().map(lagrangian).collect();
    Ok(simpson(&values, dt))
}

/// `S_{L+κ}(γ) = S_L(γ) + κT`.
pub fn free_time_action(traj: &Trajectory<PhaseState>, kappa: f64) -> Result<f64> {
    let s_l = lagrangian_action(traj)?;
    Ok(s_l + kappa * (traj.times[traj.len() - 1] - traj.times[0]))
}

pub fn action_report(traj: &Trajectory<PhaseState>, kappa: f64) -> Result<ActionReport> {
    let s_l = lagrangian_action(traj)?;
    let period = traj.times[traj.len() - 1] - traj.times[0];
    Ok(ActionReport {
        energy: kappa,
        period,
        s_l,
        s_free: s_l + kappa * period,
        samples: traj.len(),
    })
}

/// Mañé critical value `a_n / 8` of the standard magnetic system on `E(A)`.
pub fn mane_value(spec: &EllipsoidSpec) -> f64 {
    spec.a_max() / 8.0
}

/// `π a (2ω² − ω)/|ω|`, i.e. `π a (2ω − 1)` for `ω > 0`.
pub fn closed_form_free_action(a: f64, omega: f64) -> f64 {
    PI * a * (2.0 * omega * omega - omega) / omega.abs()
}

/// `π a (ω² − ω)/|ω|`.
pub fn closed_form_lagrangian_action(a: f64, omega: f64) -> f64 {
    PI * a * (omega * omega - omega) / omega.abs()
}

/// Energy `½ω²a_j` of the axis-`j` circle orbit.
pub fn circle_energy(a: f64, omega: f64) -> f64 {
    0.5 * omega * omega * a
}

/// One period of `γ(t) = √a_j e^{iωt} e_j` (axis `j` is 1-based), sampled at
/// `samples + 1` uniform points.
pub fn circle_orbit(spec: &EllipsoidSpec, j: usize, omega: f64, samples: usize) -> Result<Trajectory<PhaseState>> {
    if j == 0 || j > spec.n() {
        return Err(MagflowError::IndexOutOfRange {
            index: j,
            len: spec.n(),
        });
    }
    if omega == 0.0 || !omega.is_finite() {
        return Err(MagflowError::InvalidInput("omega must be finite and nonzero".into()));
    }
    if samples < 16 {
        return Err(MagflowError::TooFewSamples {
            needed: 16,
            found: samples,
        });
    }
    let period = 2.0 * PI / omega.abs();
    let dt = period / samples as f64;
    let radius = spec.a()[j - 1].sqrt();
    let states = (0..=samples)
        .map(|k| {
            let z = Complex64::from_polar(radius, omega * k as f64 * dt);
            let mut q = ComplexVector::zeros(spec.n());
            let mut v = ComplexVector::zeros(spec.n());
            q.set(j - 1, z);
            v.set(j - 1, Complex64::i() * omega * z);
            PhaseState { q, v }
        })
        .collect();
    Ok(Trajectory::from_samples(dt, states, &SurfaceDiagnostics::new(spec)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactTypeReport {
    pub kappa: f64,
    pub omega: f64,
    pub s_free: f64,
    pub closed_form: f64,
    /// `-1`, `0` or `1`, with `0` meaning `|S_free| ≤ ZERO_BAND`.
    pub sign: i8,
    /// `Some(true)` when `κ ≤ a_n/8` and the witness has non-positive
    /// action; `None` above the Mañé value, where nothing is claimed.
    pub claim: Option<bool>,
}

pub const CONTACT_SAMPLES: usize = 4096;

pub fn sign_with_band(x: f64) -> i8 {
    if x.abs() <= ZERO_BAND {
        0
    } else if x < 0.0 {
        -1
    } else {
        1
    }
}

/// Builds the axis-`n` circle orbit of energy `κ` and reports its free-time
/// action.
pub fn contact_type_report(spec: &EllipsoidSpec, kappa: f64) -> Result<ContactTypeReport> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(MagflowError::InvalidInput("kappa must be positive".into()));
    }
    let a_n = spec.a_max();
    let omega = (2.0 * kappa / a_n).sqrt();
    let traj = circle_orbit(spec, spec.n(), omega, CONTACT_SAMPLES)?;
    let s_free = free_time_action(&traj, kappa)?;
    let sign = sign_with_band(s_free);
    let claim = (kappa <= mane_value(spec)).then_some(sign <= 0);
    Ok(ContactTypeReport {
        kappa,
        omega,
        s_free,
        closed_form: closed_form_free_action(a_n, omega),
        sign,
        claim,
    })
}
