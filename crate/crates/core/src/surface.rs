//! Level-set hypersurfaces `Σ = f⁻¹(c)` in ℝ²ⁿ = ℂⁿ with the magnetic field
//! `ω_can`, whose Lorentz force is multiplication by `i`.
//!
//! Everything here works on the interleaved real layout of
//! [`ComplexVector`]. A magnetic geodesic on `Σ` satisfies
//!
//! ```text
//! γ̈ = iγ̇ + (⟨γ̇, i∇f⟩ − Hess f[γ̇, γ̇]) / |∇f|² · ∇f
//! ```
//!
//! and on the ellipsoid `E(A) = {Σ |z_j|²/a_j = 1}` this simplifies to a form
//! that only needs the contact constant `C = ½⟨γ̇, i∇f(γ)⟩`.

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use crate::complex::{dot, jmul_slice, ComplexVector};
use crate::error::{MagflowError, Result};

/// Gradient norms at or below this are treated as a non-regular point.
pub const EPS_REG: f64 = 1e-10;
/// Default tolerance on `|f(q) − c|` for a state to count as on-surface.
pub const TOL_CONSTRAINT: f64 = 1e-9;
/// Default relative tolerance on `⟨v, ∇f⟩` for a state to count as tangent.
pub const TOL_TANGENT: f64 = 1e-9;

/// A smooth function on ℝ²ⁿ together with a regular value `c`.
///
/// Implementors supply the gradient and Hessian-vector product explicitly.
pub trait LevelSet: Send + Sync {
    /// Complex dimension n of the ambient ℂⁿ.
    fn dim(&self) -> usize;
    fn level(&self) -> f64;
    fn value(&self, x: &[f64]) -> f64;
    fn grad(&self, x: &[f64]) -> Vec<f64>;
    /// `Hess_x(f) · v`.
    fn hess_apply(&self, x: &[f64], v: &[f64]) -> Vec<f64>;
}

/// Shared handle to a level set, as stored in systems and configs.
pub type LevelSetSurface = Arc<dyn LevelSet>;

/// Diagonal complex ellipsoid `E(A)`, `A = diag(a_1, …, a_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidSpec {
    a: Vec<f64>,
}

impl EllipsoidSpec {
    pub fn new(a: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(MagflowError::InvalidSpec("a must be nonempty".into()));
        }
        let positive = a.iter().all(|&x| x.is_finite() && x > 0.0);
        let monotone = a.windows(2).all(|w| w[0] <= w[1]);
        if !positive || !monotone {
            return Err(MagflowError::InvalidSpec("a must be positive nondecreasing".into()));
        }
        Ok(Self { a })
    }

    /// The round sphere of radius `r` in ℂⁿ, encoded as `a_j = r²`.
    pub fn sphere(n: usize, r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(MagflowError::InvalidSpec("radius must be positive".into()));
        }
        Self::new(vec![r * r; n])
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn a_max(&self) -> f64 {
        self.a[self.a.len() - 1]
    }

    /// Distinct eigenvalues with their multiplicities `(λ_j, ℓ_j)`.
    pub fn multiplicities(&self) -> Vec<(f64, usize)> {
        self.block_ranges()
            .into_iter()
            .map(|r| (self.a[r.start], r.len()))
            .collect()
    }

    /// Coordinate index ranges of the multiplicity blocks.
    pub fn block_ranges(&self) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for k in 1..=self.a.len() {
            if k == self.a.len() || self.a[k] != self.a[start] {
                out.push(start..k);
                start = k;
            }
        }
        out
    }

    /// True when all `a_j` coincide.
    pub fn is_sphere(&self) -> bool {
        self.block_ranges().len() == 1
    }

    /// `Σ |q_j|² / a_j²`, the squared norm of `A⁻¹q`.
    pub fn weighted_sqr(&self, q: &[f64]) -> f64 {
        self.a
            .iter()
            .zip(q.chunks_exact(2))
            .map(|(a, z)| (z[0] * z[0] + z[1] * z[1]) / (a * a))
            .sum()
    }
}

impl LevelSet for EllipsoidSpec {
    fn dim(&self) -> usize {
        self.a.len()
    }

    fn level(&self) -> f64 {
        1.0
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.a
            .iter()
            .zip(x.chunks_exact(2))
            .map(|(a, z)| (z[0] * z[0] + z[1] * z[1]) / a)
            .sum()
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(i, xi)| 2.0 * xi / self.a[i / 2]).collect()
    }

    fn hess_apply(&self, _x: &[f64], v: &[f64]) -> Vec<f64> {
        v.iter().enumerate().map(|(i, vi)| 2.0 * vi / self.a[i / 2]).collect()
    }
}

/// `f(z) = Σ_j c_j |z_j|^{2 p_j}` with integer powers `p_j ≥ 1`.
///
/// Ellipsoids are the case `p_j = 1`; [`PowerSumSurface::quartic`] is the
/// stock non-ellipsoidal example `|z₁|² + |z₂|⁴ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSumSurface {
    coeffs: Vec<f64>,
    powers: Vec<u32>,
    level: f64,
}

impl PowerSumSurface {
    pub fn new(coeffs: Vec<f64>, powers: Vec<u32>, level: f64) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() != powers.len() {
            return Err(MagflowError::InvalidSpec(
                "coeffs and powers must be nonempty and of equal length".into(),
            ));
        }
        if coeffs.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(MagflowError::InvalidSpec("coeffs must be positive".into()));
        }
        if powers.contains(&0) {
            return Err(MagflowError::InvalidSpec("powers must be >= 1".into()));
        }
        if !(level.is_finite() && level > 0.0) {
            return Err(MagflowError::InvalidSpec("level must be positive".into()));
        }
        Ok(Self { coeffs, powers, level })
    }

    /// `|z₁|² + |z₂|⁴` at level 1.
    pub fn quartic() -> Self {
        Self {
            coeffs: vec![1.0, 1.0],
            powers: vec![1, 2],
            level: 1.0,
        }
    }
}

impl LevelSet for PowerSumSurface {
    fn dim(&self) -> usize {
        self.coeffs.len()
    }

    fn level(&self) -> f64 {
        self.level
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .zip(&self.powers)
            .zip(x.chunks_exact(2))
            .map(|((c, &p), z)| c * (z[0] * z[0] + z[1] * z[1]).powi(p as i32))
            .sum()
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for (j, z) in x.chunks_exact(2).enumerate() {
            let p = self.powers[j] as i32;
            let r2 = z[0] * z[0] + z[1] * z[1];
            let s = 2.0 * p as f64 * self.coeffs[j] * r2.powi(p - 1);
            out[2 * j] = s * z[0];
            out[2 * j + 1] = s * z[1];
        }
        out
    }

    fn hess_apply(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for (j, (z, w)) in x.chunks_exact(2).zip(v.chunks_exact(2)).enumerate() {
            let p = self.powers[j] as i32;
            let c = self.coeffs[j];
            let r2 = z[0] * z[0] + z[1] * z[1];
            let s = 2.0 * p as f64 * c * r2.powi(p - 1);
            // d/dz (r2^{p-1} z) = r2^{p-1} I + 2(p-1) r2^{p-2} z zᵀ
            let t = if p >= 2 {
                4.0 * (p * (p - 1)) as f64 * c * r2.powi(p - 2) * (z[0] * w[0] + z[1] * w[1])
            } else {
                0.0
            };
            out[2 * j] = s * w[0] + t * z[0];
            out[2 * j + 1] = s * w[1] + t * z[1];
        }
        out
    }
}

type ScalarFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type VectorFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type HessFn = dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync;

/// A user-defined level set given by closures for `f`, `∇f` and `Hess f · v`.
pub struct CustomSurface {
    dim: usize,
    level: f64,
    f: Box<ScalarFn>,
    grad: Box<VectorFn>,
    hess: Box<HessFn>,
}

impl CustomSurface {
    pub fn new(
        dim: usize,
        level: f64,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        hess_apply: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            level,
            f: Box::new(f),
            grad: Box::new(grad),
            hess: Box::new(hess_apply),
        }
    }

    /// Only `f` is known; derivatives come from central differences with
    /// step `1e-5 · (1 + |x|)`. Meant for prototyping, not for accuracy runs.
    pub fn finite_difference(dim: usize, level: f64, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        let f = Arc::new(f);
        let fg = Arc::clone(&f);
        let grad = move |x: &[f64]| fd_grad(&*fg, x);
        let fh = Arc::clone(&f);
        let hess = move |x: &[f64], v: &[f64]| {
            let delta = fd_step(x);
            let xp: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + delta * b).collect();
            let xm: Vec<f64> = x.iter().zip(v).map(|(a, b)| a - delta * b).collect();
            let gp = fd_grad(&*fh, &xp);
            let gm = fd_grad(&*fh, &xm);
            gp.iter().zip(&gm).map(|(p, m)| (p - m) / (2.0 * delta)).collect()
        };
        Self::new(dim, level, move |x: &[f64]| f(x), grad, hess)
    }
}

fn fd_step(x: &[f64]) -> f64 {
    1e-5 * (1.0 + dot(x, x).sqrt())
}

fn fd_grad(f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let delta = fd_step(x);
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|k| {
            probe[k] = x[k] + delta;
            let fp = f(&probe);
            probe[k] = x[k] - delta;
            let fm = f(&probe);
            probe[k] = x[k];
            (fp - fm) / (2.0 * delta)
        })
        .collect()
}

impl fmt::Debug for CustomSurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomSurface")
            .field("dim", &self.dim)
            .field("level", &self.level)
            .finish_non_exhaustive()
    }
}

impl LevelSet for CustomSurface {
    fn dim(&self) -> usize {
        self.dim
    }

    fn level(&self) -> f64 {
        self.level
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        (self.grad)(x)
    }

    fn hess_apply(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        (self.hess)(x, v)
    }
}

pub fn ellipsoid_surface(spec: &EllipsoidSpec) -> LevelSetSurface {
    Arc::new(spec.clone())
}

/// Position and velocity in ℂⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub q: ComplexVector,
    pub v: ComplexVector,
}

impl PhaseState {
    pub fn new(q: ComplexVector, v: ComplexVector) -> Result<Self> {
        if q.dim() != v.dim() {
            return Err(MagflowError::DimensionMismatch {
                expected: q.dim(),
                found: v.dim(),
            });
        }
        Ok(Self { q, v })
    }

    pub fn from_real(q: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        Self::new(ComplexVector::from_real(q)?, ComplexVector::from_real(v)?)
    }

    pub fn dim(&self) -> usize {
        self.q.dim()
    }

    /// `κ = |γ̇|`.
    pub fn speed(&self) -> f64 {
        self.v.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.q.is_finite() && self.v.is_finite()
    }
}

fn check_surface_dim(s: &dyn LevelSet, n: usize) -> Result<()> {
    if s.dim() != n {
        return Err(MagflowError::DimensionMismatch {
            expected: s.dim(),
            found: n,
        });
    }
    Ok(())
}

/// Gradient at `x`, failing when `|∇f(x)| ≤ EPS_REG`.
pub(crate) fn regular_grad(s: &dyn LevelSet, x: &[f64]) -> Result<(Vec<f64>, f64)> {
    let g = s.grad(x);
    let g2 = dot(&g, &g);
    if !(g2.sqrt() > EPS_REG) {
        return Err(MagflowError::Regularity {
            norm: g2.sqrt(),
            threshold: EPS_REG,
        });
    }
    Ok((g, g2))
}

pub(crate) fn project_slice(g: &[f64], g2: f64, v: &[f64]) -> Vec<f64> {
    let k = dot(v, g) / g2;
    v.iter().zip(g).map(|(vi, gi)| vi - k * gi).collect()
}

/// Orthogonal projection of `v` onto `T_xΣ = ∇f(x)^⊥`.
pub fn tangent_project(s: &dyn LevelSet, x: &ComplexVector, v: &ComplexVector) -> Result<ComplexVector> {
    check_surface_dim(s, x.dim())?;
    check_surface_dim(s, v.dim())?;
    let (g, g2) = regular_grad(s, x.as_real())?;
    ComplexVector::from_real(project_slice(&g, g2, v.as_real()))
}

/// The induced Lorentz force `Ỹ_x(v)`, i.e. the tangential part of `iv`.
pub fn lorentz_on_surface(s: &dyn LevelSet, x: &ComplexVector, v: &ComplexVector) -> Result<ComplexVector> {
    tangent_project(s, x, &v.jmul())
}

pub(crate) fn geodesic_accel(s: &dyn LevelSet, q: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let (g, g2) = regular_grad(s, q)?;
    let iv = jmul_slice(v);
    let ig = jmul_slice(&g);
    let hv = s.hess_apply(q, v);
    let k = (dot(v, &ig) - dot(&hv, v)) / g2;
    Ok(iv.iter().zip(&g).map(|(a, gi)| a + k * gi).collect())
}

/// Acceleration of the magnetic geodesic through `st` on a general level set.
pub fn geodesic_rhs(s: &dyn LevelSet, st: &PhaseState) -> Result<ComplexVector> {
    check_surface_dim(s, st.dim())?;
    ComplexVector::from_real(geodesic_accel(s, st.q.as_real(), st.v.as_real())?)
}

pub(crate) fn ellipsoid_accel(spec: &EllipsoidSpec, q: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let a = spec.a();
    let denom = spec.weighted_sqr(q);
    if !(denom > EPS_REG) {
        return Err(MagflowError::Regularity {
            norm: denom,
            threshold: EPS_REG,
        });
    }
    let mut c = 0.0;
    let mut kin = 0.0;
    for ((aj, z), w) in a.iter().zip(q.chunks_exact(2)).zip(v.chunks_exact(2)) {
        // ⟨w, i z⟩_ℝ / a_j
        c += (w[1] * z[0] - w[0] * z[1]) / aj;
        kin += (w[0] * w[0] + w[1] * w[1]) / aj;
    }
    let k = (c - kin) / denom;
    let mut out = jmul_slice(v);
    for (i, o) in out.iter_mut().enumerate() {
        *o += k * q[i] / a[i / 2];
    }
    Ok(out)
}

/// Ellipsoid right-hand side written in terms of `C` and `A⁻¹γ`.
pub fn ellipsoid_rhs(spec: &EllipsoidSpec, st: &PhaseState) -> Result<ComplexVector> {
    check_surface_dim(spec, st.dim())?;
    ComplexVector::from_real(ellipsoid_accel(spec, st.q.as_real(), st.v.as_real())?)
}

pub(crate) fn c_gamma_slice(s: &dyn LevelSet, q: &[f64], v: &[f64]) -> f64 {
    let ig = jmul_slice(&s.grad(q));
    0.5 * dot(v, &ig)
}

/// `C_γ = ½⟨γ̇, i∇f(γ)⟩_ℝ`.
pub fn c_gamma(s: &dyn LevelSet, st: &PhaseState) -> Result<f64> {
    check_surface_dim(s, st.dim())?;
    Ok(c_gamma_slice(s, st.q.as_real(), st.v.as_real()))
}

/// Outcome of the Cauchy–Schwarz bound `|C| ≤ κ·|A⁻¹q|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CBound {
    pub holds: bool,
    /// `κ·|A⁻¹q| − |C|`; negative when violated.
    pub margin: f64,
}

pub fn c_bound_holds(spec: &EllipsoidSpec, st: &PhaseState) -> Result<CBound> {
    let c = c_gamma(spec, st)?;
    let bound = st.speed() * spec.weighted_sqr(st.q.as_real()).sqrt();
    let margin = bound - c.abs();
    Ok(CBound {
        holds: margin >= -1e-12,
        margin,
    })
}

/// `|f(q) − c|`.
pub fn constraint_residual(s: &dyn LevelSet, q: &ComplexVector) -> f64 {
    (s.value(q.as_real()) - s.level()).abs()
}

/// Checks the on-surface and tangency invariants of a phase state.
pub fn check_state(s: &dyn LevelSet, st: &PhaseState, tol_constraint: f64, tol_tangent: f64) -> Result<()> {
    check_surface_dim(s, st.dim())?;
    let res = constraint_residual(s, &st.q);
    if res > tol_constraint {
        return Err(MagflowError::Precondition(format!(
            "state is off the surface: |f(q) - c| = {res:e}"
        )));
    }
    let (g, g2) = regular_grad(s, st.q.as_real())?;
    let normal = dot(st.v.as_real(), &g).abs();
    if normal > tol_tangent * st.speed().max(1.0) * g2.sqrt() {
        return Err(MagflowError::Precondition(format!(
            "velocity is not tangent: |<v, grad f>| = {normal:e}"
        )));
    }
    Ok(())
}
