//! Seeded random initial conditions for sweeps.
//!
//! Sweeps use [`SplitMix64`] seeded from the run configuration, so the same
//! seed gives the same states on every platform.

use rand::Rng;
pub use rand::SeedableRng;
pub use rand_xoshiro::SplitMix64;

use crate::complex::{dot, ComplexVector};
use crate::surface::{project_slice, LevelSet, PhaseState};

/// Point on the ray through `dir` where `f = c`, found by bisection.
/// Assumes `f` increases along rays from the origin (star-shaped level sets).
fn radial_hit(s: &dyn LevelSet, dir: &[f64]) -> Vec<f64> {
    let c = s.level();
    let at = |t: f64| -> f64 { s.value(&dir.iter().map(|x| t * x).collect::<Vec<_>>()) - c };
    let (mut lo, mut hi) = (0.0, 1.0);
    while at(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if at(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let t = 0.5 * (lo + hi);
    dir.iter().map(|x| t * x).collect()
}

/// A random on-surface state with tangent velocity of the given speed.
pub fn random_tangent_state<R: Rng + ?Sized>(s: &dyn LevelSet, rng: &mut R, speed: f64) -> PhaseState {
    let n2 = 2 * s.dim();
    loop {
        let dir: Vec<f64> = (0..n2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if dot(&dir, &dir) < 1e-6 {
            continue;
        }
        let q = radial_hit(s, &dir);
        let g = s.grad(&q);
        let g2 = dot(&g, &g);
        let raw: Vec<f64> = (0..n2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut v = project_slice(&g, g2, &raw);
        let norm = dot(&v, &v).sqrt();
        if norm < 1e-6 {
            continue;
        }
        v.iter_mut().for_each(|x| *x *= speed / norm);
        return PhaseState::new(
            ComplexVector::from_real(q).expect("even length"),
            ComplexVector::from_real(v).expect("even length"),
        )
        .expect("matching dimensions");
    }
}
