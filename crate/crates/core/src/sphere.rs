//! Closed-form magnetic geodesics on the round sphere `|z| = r` in ℂⁿ.
//!
//! With `C` conserved the equation becomes linear with constant coefficients,
//!
//! ```text
//! γ̈ = iγ̇ + λγ,   λ = C − κ²/r²,
//! ```
//!
//! so each coordinate is a combination of `e^{μt}` with `μ² − iμ − λ = 0`.
//! Since `|C| ≤ κ/r` we always have `λ ≤ ¼`; at `λ = ¼` the roots merge at
//! `μ = i/2` (this is the case of the Reeb flow line `e^{it/2}z`).

use num_complex::Complex64;

use crate::complex::ComplexVector;
use crate::error::{MagflowError, Result};
use crate::surface::PhaseState;

/// Threshold on `|4λ − 1|` below which the double-root branch is used.
pub const EPS_DEG: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereLinearCoefficients {
    pub lambda: f64,
    pub mu_plus: Complex64,
    pub mu_minus: Complex64,
    pub degenerate: bool,
}

impl SphereLinearCoefficients {
    pub fn new(lambda: f64) -> Self {
        Self::with_threshold(lambda, EPS_DEG)
    }

    /// `eps_deg = 0` forces the two-root formula whenever the roots differ.
    pub fn with_threshold(lambda: f64, eps_deg: f64) -> Self {
        let disc = Complex64::new(4.0 * lambda - 1.0, 0.0).sqrt();
        let i = Complex64::i();
        let degenerate = (4.0 * lambda - 1.0).abs() < eps_deg || disc == Complex64::new(0.0, 0.0);
        let (mu_plus, mu_minus) = if degenerate {
            (0.5 * i, 0.5 * i)
        } else {
            ((i + disc) * 0.5, (i - disc) * 0.5)
        };
        Self {
            lambda,
            mu_plus,
            mu_minus,
            degenerate,
        }
    }

    /// Solution `(z(t), ż(t))` of `z̈ = iż + λz` for one complex coordinate.
    pub fn evaluate(&self, z0: Complex64, w0: Complex64, t: f64) -> (Complex64, Complex64) {
        if self.degenerate {
            let mu = self.mu_plus;
            let c1 = z0;
            let c2 = w0 - mu * z0;
            let e = (mu * t).exp();
            let z = (c1 + c2 * t) * e;
            let w = (c2 + mu * (c1 + c2 * t)) * e;
            (z, w)
        } else {
            let (mp, mm) = (self.mu_plus, self.mu_minus);
            let cp = (w0 - mm * z0) / (mp - mm);
            let cm = z0 - cp;
            let (ep, em) = ((mp * t).exp(), (mm * t).exp());
            (cp * ep + cm * em, mp * cp * ep + mm * cm * em)
        }
    }

    pub fn evaluate_state(&self, st: &PhaseState, t: f64) -> PhaseState {
        let n = st.dim();
        let mut q = ComplexVector::zeros(n);
        let mut v = ComplexVector::zeros(n);
        for k in 0..n {
            let (z, w) = self.evaluate(st.q.get(k), st.v.get(k), t);
            q.set(k, z);
            v.set(k, w);
        }
        PhaseState { q, v }
    }
}

/// `C = ½⟨v, i∇f⟩` for `f = |z|²/r²`, i.e. `⟨v, iq⟩_ℝ / r²`.
pub fn sphere_c(r: f64, st: &PhaseState) -> f64 {
    st.v.real_inner(&st.q.jmul()).expect("state dimensions agree") / (r * r)
}

fn check_on_sphere(r: f64, st: &PhaseState) -> Result<()> {
    if !(r.is_finite() && r > 0.0) {
        return Err(MagflowError::Precondition("radius must be positive".into()));
    }
    let off = (st.q.norm() - r).abs();
    if off > 1e-9 * r {
        return Err(MagflowError::Precondition(format!(
            "initial point is off the sphere of radius {r} by {off:e}"
        )));
    }
    let normal = st.q.real_inner(&st.v)?.abs();
    if normal > 1e-9 * r * st.speed().max(1.0) {
        return Err(MagflowError::Precondition(format!(
            "initial velocity is not tangent: |<q, v>| = {normal:e}"
        )));
    }
    Ok(())
}

/// Coefficients of the linear equation for initial data `st0`.
pub fn sphere_coefficients(r: f64, st0: &PhaseState) -> SphereLinearCoefficients {
    let lambda = sphere_c(r, st0) - st0.v.norm_sqr() / (r * r);
    SphereLinearCoefficients::new(lambda)
}

/// Exact state at time `t` of the magnetic geodesic with initial data `st0`.
pub fn solve_sphere(r: f64, st0: &PhaseState, t: f64) -> Result<PhaseState> {
    check_on_sphere(r, st0)?;
    Ok(sphere_coefficients(r, st0).evaluate_state(st0, t))
}

/// Contact angle `ψ ∈ [0, π]` with `cos ψ = r·C` for unit-speed states.
pub fn psi_angle(r: f64, st: &PhaseState) -> Result<f64> {
    if (st.speed() - 1.0).abs() > 1e-9 {
        return Err(MagflowError::Precondition(format!(
            "psi_angle needs a unit-speed state, got speed {}",
            st.speed()
        )));
    }
    Ok((r * sphere_c(r, st)).clamp(-1.0, 1.0).acos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_tangent_state, SeedableRng, SplitMix64};
    use crate::surface::{ellipsoid_rhs, EllipsoidSpec};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn e(n: usize, k: usize) -> ComplexVector {
        ComplexVector::basis(n, k)
    }

    fn reeb() -> PhaseState {
        PhaseState::new(e(2, 0), ComplexVector::imag_basis(2, 0).scale(0.5)).unwrap()
    }

    #[test]
    fn roots_solve_characteristic_equation() {
        for lambda in [-3.0, -0.5, 0.0, 0.1, 0.2499, 0.25] {
            let c = SphereLinearCoefficients::new(lambda);
            for mu in [c.mu_plus, c.mu_minus] {
                let res = mu * mu - Complex64::i() * mu - lambda;
                assert!(res.norm() <= 1e-13, "lambda {lambda}: {res}");
            }
            assert_eq!(c.degenerate, lambda == 0.25);
        }
    }

    #[test]
    fn reeb_flow_line_hits_degenerate_branch() {
        let coeffs = sphere_coefficients(1.0, &reeb());
        assert!(coeffs.degenerate);
        for t in [0.0, 0.3, 5.0, 40.0] {
            let st = solve_sphere(1.0, &reeb(), t).unwrap();
            let phase = Complex64::from_polar(1.0, 0.5 * t);
            assert!((st.q.get(0) - phase).norm() < 1e-14);
            assert!((st.v.get(0) - 0.5 * Complex64::i() * phase).norm() < 1e-14);
            assert_eq!(st.q.get(1), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn identity_at_time_zero() {
        let mut rng = SplitMix64::seed_from_u64(1);
        let sphere = EllipsoidSpec::sphere(3, 2.0).unwrap();
        for _ in 0..10 {
            let st = random_tangent_state(&sphere, &mut rng, 1.3);
            let out = solve_sphere(2.0, &st, 0.0).unwrap();
            assert!((&out.q - &st.q).norm() < 1e-14);
            assert!((&out.v - &st.v).norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_initial_data() {
        let off = PhaseState::new(e(2, 0).scale(1.5), e(2, 1)).unwrap();
        assert!(matches!(
            solve_sphere(1.0, &off, 1.0),
            Err(MagflowError::Precondition(_))
        ));
        let normal = PhaseState::new(e(2, 0), e(2, 0)).unwrap();
        assert!(solve_sphere(1.0, &normal, 1.0).is_err());
        assert!(solve_sphere(-1.0, &reeb(), 1.0).is_err());
    }

    #[test]
    fn conserves_constraint_speed_and_c() {
        let mut rng = SplitMix64::seed_from_u64(2);
        for r in [0.5, 1.0, 3.0] {
            let sphere = EllipsoidSpec::sphere(3, r).unwrap();
            for _ in 0..10 {
                let st0 = random_tangent_state(&sphere, &mut rng, 0.8);
                let c0 = sphere_c(r, &st0);
                for t in [1.0, 17.0, 100.0] {
                    let st = solve_sphere(r, &st0, t).unwrap();
                    assert!((st.q.norm() - r).abs() <= 1e-10);
                    assert!((st.speed() - 0.8).abs() <= 1e-10);
                    assert!((sphere_c(r, &st) - c0).abs() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn satisfies_the_ode_by_finite_differences() {
        let mut rng = SplitMix64::seed_from_u64(3);
        let sphere = EllipsoidSpec::sphere(2, 1.0).unwrap();
        let st0 = random_tangent_state(&sphere, &mut rng, 1.1);
        let residual = |h: f64| {
            let t = 2.0;
            let (a, b, c) = (
                solve_sphere(1.0, &st0, t - h).unwrap(),
                solve_sphere(1.0, &st0, t).unwrap(),
                solve_sphere(1.0, &st0, t + h).unwrap(),
            );
            let fd = (&(&c.q - &b.q.scale(2.0)) + &a.q).scale(1.0 / (h * h));
            (&fd - &ellipsoid_rhs(&sphere, &b).unwrap()).norm()
        };
        let (r1, r2) = (residual(1e-2), residual(5e-3));
        assert!(r1 < 1e-4);
        assert!((3.5..4.5).contains(&(r1 / r2)), "ratio {}", r1 / r2);
    }

    #[test]
    fn degenerate_branch_is_continuous() {
        let z0 = Complex64::new(0.6, -0.3);
        let w0 = Complex64::new(0.2, 0.9);
        for lambda in [0.25 - 1e-9, 0.25 + 1e-9] {
            let two_root = SphereLinearCoefficients::with_threshold(lambda, 0.0);
            assert!(!two_root.degenerate);
            let merged = SphereLinearCoefficients::new(lambda);
            assert!(merged.degenerate);
            let (za, wa) = two_root.evaluate(z0, w0, 10.0);
            let (zb, wb) = merged.evaluate(z0, w0, 10.0);
            assert!((za - zb).norm() <= 1e-6);
            assert!((wa - wb).norm() <= 1e-6);
        }
    }

    #[test]
    fn psi_examples() {
        let horizontal = PhaseState::new(e(2, 0), e(2, 1)).unwrap();
        assert!((psi_angle(1.0, &horizontal).unwrap() - FRAC_PI_2).abs() < 1e-15);
        let reeb_dir = PhaseState::new(e(2, 0), ComplexVector::imag_basis(2, 0)).unwrap();
        assert_eq!(psi_angle(1.0, &reeb_dir).unwrap(), 0.0);
        let anti = PhaseState::new(e(2, 0), ComplexVector::imag_basis(2, 0).scale(-1.0)).unwrap();
        assert!((psi_angle(1.0, &anti).unwrap() - PI).abs() < 1e-15);
        assert!(psi_angle(1.0, &reeb()).is_err());
    }

    #[test]
    fn psi_constant_along_closed_form() {
        let mut rng = SplitMix64::seed_from_u64(4);
        for r in [1.0, 2.0] {
            let sphere = EllipsoidSpec::sphere(3, r).unwrap();
            for _ in 0..10 {
                let st0 = random_tangent_state(&sphere, &mut rng, 1.0);
                let psi0 = psi_angle(r, &st0).unwrap();
                for t in [0.5, 9.0, 60.0] {
                    let st = solve_sphere(r, &st0, t).unwrap();
                    assert!((psi_angle(r, &st).unwrap() - psi0).abs() <= 1e-10);
                }
            }
        }
    }
}
