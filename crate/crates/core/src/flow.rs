//! Magnetic geodesic flows packaged as [`SecondOrderSystem`]s, plus the
//! standard per-sample diagnostics.

use crate::complex::dot;
use crate::error::Result;
use crate::integrator::{Diagnostics, SecondOrderSystem};
use crate::invariants::{coordinate_moment, energy};
use crate::surface::{
    c_gamma_slice, ellipsoid_accel, geodesic_accel, EllipsoidSpec, LevelSet, LevelSetSurface, PhaseState,
};

/// Flow on a general level set via the hypersurface equation.
#[derive(Clone)]
pub struct SurfaceFlow {
    surface: LevelSetSurface,
}

impl SurfaceFlow {
    pub fn new(surface: LevelSetSurface) -> Self {
        Self { surface }
    }

    pub fn surface(&self) -> &dyn LevelSet {
        self.surface.as_ref()
    }
}

impl SecondOrderSystem for SurfaceFlow {
    fn state_dim(&self) -> usize {
        2 * self.surface.dim()
    }

    fn acceleration(&self, q: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        geodesic_accel(self.surface.as_ref(), q, v)
    }

    fn constraint(&self) -> Option<&dyn LevelSet> {
        Some(self.surface.as_ref())
    }
}

/// Flow on `E(A)` via the ellipsoid form of the equation, with `C`
/// recomputed from the instantaneous state.
#[derive(Debug, Clone)]
pub struct EllipsoidFlow {
    spec: EllipsoidSpec,
}

impl EllipsoidFlow {
    pub fn new(spec: EllipsoidSpec) -> Self {
        Self { spec }
    }

    pub fn spec(&self) -> &EllipsoidSpec {
        &self.spec
    }
}

impl SecondOrderSystem for EllipsoidFlow {
    fn state_dim(&self) -> usize {
        2 * self.spec.n()
    }

    fn acceleration(&self, q: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        ellipsoid_accel(&self.spec, q, v)
    }

    fn constraint(&self) -> Option<&dyn LevelSet> {
        Some(&self.spec)
    }
}

/// `energy, C, F_1..F_n, f_residual, alpha_v` for states in ℂⁿ.
pub struct SurfaceDiagnostics<'a> {
    surface: &'a dyn LevelSet,
}

impl<'a> SurfaceDiagnostics<'a> {
    pub fn new(surface: &'a dyn LevelSet) -> Self {
        Self { surface }
    }
}

/// Column names of [`SurfaceDiagnostics`] for complex dimension `n`.
pub fn surface_diagnostic_names(n: usize) -> Vec<String> {
    let mut names = vec!["energy".to_string(), "C".to_string()];
    names.extend((1..=n).map(|j| format!("F_{j}")));
    names.push("f_residual".into());
    names.push("alpha_v".into());
    names
}

impl Diagnostics<PhaseState> for SurfaceDiagnostics<'_> {
    fn names(&self) -> Vec<String> {
        surface_diagnostic_names(self.surface.dim())
    }

    fn evaluate(&self, st: &PhaseState) -> Vec<f64> {
        let (q, v) = (st.q.as_real(), st.v.as_real());
        let mut row = vec![energy(st), c_gamma_slice(self.surface, q, v)];
        row.extend((0..st.dim()).map(|j| coordinate_moment(st, j)));
        row.push(self.surface.value(q) - self.surface.level());
        row.push(0.5 * (q_dot_iv(q, v)));
        row
    }
}

/// `⟨iq, v⟩_ℝ = Im⟨q, v⟩`.
fn q_dot_iv(q: &[f64], v: &[f64]) -> f64 {
    let iq = crate::complex::jmul_slice(q);
    dot(&iq, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::ComplexVector;
    use crate::integrator::{integrate, IntegratorConfig, Method};
    use crate::surface::ellipsoid_surface;

    #[test]
    fn diagnostics_row_layout() {
        let spec = EllipsoidSpec::new(vec![1.0, 4.0]).unwrap();
        let d = SurfaceDiagnostics::new(&spec);
        assert_eq!(d.names(), vec!["energy", "C", "F_1", "F_2", "f_residual", "alpha_v"]);
        let st = PhaseState::new(
            ComplexVector::basis(2, 1).scale(2.0),
            ComplexVector::imag_basis(2, 1).scale(0.5),
        )
        .unwrap();
        let row = d.evaluate(&st);
        assert!((row[0] - 0.125).abs() < 1e-16);
        assert!((row[1] - 0.25).abs() < 1e-16);
        assert_eq!(row[2], 0.0);
        // F_2 = <v, i q_2> - |q_2|²/2 = 1 - 2
        assert!((row[3] + 1.0).abs() < 1e-15);
        assert!(row[4].abs() < 1e-15);
        // alpha = ½ Im<q, v> = ½ · 2 · 0.5
        assert!((row[5] - 0.5).abs() < 1e-16);
    }

    #[test]
    fn both_flows_agree_on_ellipsoid() {
        let spec = EllipsoidSpec::new(vec![1.0, 2.0, 4.0]).unwrap();
        let st =
            PhaseState::from_real(vec![0.0, 0.0, 0.0, 0.0, 2.0, 0.0], vec![0.3, -0.2, 0.1, 0.5, 0.0, 0.4]).unwrap();
        let cfg = IntegratorConfig::new(Method::Rk4Projected, 1e-3, 2.0, 100);
        let a = integrate(&EllipsoidFlow::new(spec.clone()), &st, &cfg, &()).unwrap();
        let b = integrate(&SurfaceFlow::new(ellipsoid_surface(&spec)), &st, &cfg, &()).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            assert!((&x.q - &y.q).norm() < 1e-12);
        }
    }
}
