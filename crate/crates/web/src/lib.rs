//! wasm-bindgen entry points for the static demo in `www/`.
//!
//! Every export returns a flat `Float64Array` of fixed-stride rows; the
//! stride is documented on each function. The `*_rows` functions hold the
//! logic and are plain Rust so they can be tested natively.

use wasm_bindgen::prelude::*;

use magflow::action::{circle_energy, circle_orbit, closed_form_free_action, free_time_action, mane_value};
use magflow::flow::EllipsoidFlow;
use magflow::integrator::{integrate, IntegratorConfig, Method};
use magflow::invariants::energy;
use magflow::revolution::{clairaut_F, revolution_energy, RevState, RevolutionSurface, RevolutionSystem};
use magflow::sampling::{random_tangent_state, SeedableRng, SplitMix64};
use magflow::surface::c_gamma;
use magflow::EllipsoidSpec;

/// Upper bound on integration steps per call, to keep the page responsive.
pub const MAX_STEPS: f64 = 2e6;

fn checked_steps(step: f64, t_end: f64) -> Result<(), String> {
    if !(step > 0.0 && t_end >= 0.0) || t_end / step > MAX_STEPS {
        return Err(format!("need step > 0, t_end >= 0 and at most {MAX_STEPS} steps"));
    }
    Ok(())
}

/// Rows `[t, q_0 .. q_{2n-1}, energy, C]` for a seeded random unit-speed
/// start on the ellipsoid with semi-axes squared `a`.
pub fn ellipsoid_orbit_rows(a: &[f64], seed: u64, step: f64, t_end: f64, samples: usize) -> Result<Vec<f64>, String> {
    checked_steps(step, t_end)?;
    let spec = EllipsoidSpec::new(a.to_vec()).map_err(|e| e.to_string())?;
    let st0 = random_tangent_state(&spec, &mut SplitMix64::seed_from_u64(seed), 1.0);
    let n_steps = (t_end / step).round() as usize;
    let every = (n_steps / samples.max(1)).max(1);
    let t_end = (n_steps - n_steps % every) as f64 * step;
    let cfg = IntegratorConfig::new(Method::Rk4Projected, step, t_end, every);
    let traj = integrate(&EllipsoidFlow::new(spec.clone()), &st0, &cfg, &()).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(traj.len() * (3 + 2 * spec.n()));
    for (t, st) in traj.times.iter().zip(&traj.states) {
        out.push(*t);
        out.extend_from_slice(st.q.as_real());
        out.push(energy(st));
        out.push(c_gamma(&spec, st).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

/// Rows `[ω, S_free (quadrature), S_free (closed form)]` for circles on the
/// last axis, with `κ` set to the circle's energy; `ω` runs over
/// `count` evenly spaced values in `[lo, hi]`, skipping zero.
pub fn action_curve_rows(a: &[f64], lo: f64, hi: f64, count: usize) -> Result<Vec<f64>, String> {
    let spec = EllipsoidSpec::new(a.to_vec()).map_err(|e| e.to_string())?;
    let a_n = spec.a_max();
    let mut out = Vec::with_capacity(3 * count);
    for k in 0..count {
        let omega = if count == 1 {
            lo
        } else {
            lo + (hi - lo) * k as f64 / (count - 1) as f64
        };
        if omega == 0.0 {
            continue;
        }
        let traj = circle_orbit(&spec, spec.n(), omega, 1024).map_err(|e| e.to_string())?;
        let s = free_time_action(&traj, circle_energy(a_n, omega)).map_err(|e| e.to_string())?;
        out.extend_from_slice(&[omega, s, closed_form_free_action(a_n, omega)]);
    }
    Ok(out)
}

/// Rows `[t, r, θ, E, F]` on the torus `f = 2 + cos r`, with magnetic
/// potential `a = sin r` or none.
pub fn torus_orbit_rows(init: [f64; 4], with_potential: bool, step: f64, t_end: f64) -> Result<Vec<f64>, String> {
    checked_steps(step, t_end)?;
    let torus = if with_potential {
        RevolutionSurface::torus()
    } else {
        RevolutionSurface::torus_without_potential()
    };
    let st0 = RevState::new(init[0], init[1], init[2], init[3]);
    let n_steps = (t_end / step).round() as usize;
    let every = (n_steps / 2000).max(1);
    let t_end = (n_steps - n_steps % every) as f64 * step;
    let cfg = IntegratorConfig::new(Method::Rk4, step, t_end, every);
    let traj = integrate(&RevolutionSystem::new(torus.clone()), &st0, &cfg, &()).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(5 * traj.len());
    for (t, st) in traj.times.iter().zip(&traj.states) {
        out.extend_from_slice(&[
            *t,
            st.r(),
            st.theta(),
            revolution_energy(&torus, st),
            clairaut_F(&torus, st),
        ]);
    }
    Ok(out)
}

fn js(r: Result<Vec<f64>, String>) -> Result<Vec<f64>, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

/// Stride `2n + 3`: `[t, q…, energy, C]`.
#[wasm_bindgen]
pub fn ellipsoid_orbit(a: Vec<f64>, seed: u32, step: f64, t_end: f64, samples: u32) -> Result<Vec<f64>, JsValue> {
    js(ellipsoid_orbit_rows(&a, seed as u64, step, t_end, samples as usize))
}

/// Stride 3: `[ω, S_free, closed form]`.
#[wasm_bindgen]
pub fn action_curve(a: Vec<f64>, lo: f64, hi: f64, count: u32) -> Result<Vec<f64>, JsValue> {
    js(action_curve_rows(&a, lo, hi, count as usize))
}

#[wasm_bindgen]
pub fn mane(a: Vec<f64>) -> Result<f64, JsValue> {
    EllipsoidSpec::new(a)
        .map(|s| mane_value(&s))
        .map_err(|e| JsValue::from_str(&e.to_string()))
}

/// Stride 5: `[t, r, θ, E, F]`.
#[wasm_bindgen]
pub fn torus_orbit(
    r: f64,
    theta: f64,
    r_dot: f64,
    theta_dot: f64,
    with_potential: bool,
    step: f64,
    t_end: f64,
) -> Result<Vec<f64>, JsValue> {
    js(torus_orbit_rows(
        [r, theta, r_dot, theta_dot],
        with_potential,
        step,
        t_end,
    ))
}
