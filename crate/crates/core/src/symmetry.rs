//! Magnetomorphisms of ellipsoids and totally magnetic submanifolds.
//!
//! The linear magnetomorphisms of `E(A)` are the unitaries that commute with
//! `A`, i.e. `U(ℓ_1) × ⋯ × U(ℓ_k)` acting block-diagonally on the
//! eigenspaces of `A`. Coordinate-block subspaces `V_1 ⊕ ⋯ ⊕ V_k` cut out
//! totally magnetic submanifolds `E(A) ∩ (V_1 ⊕ ⋯ ⊕ V_k)`.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::complex::{dot, ComplexVector};
use crate::error::{MagflowError, Result};
use crate::flow::EllipsoidFlow;
use crate::integrator::{integrate, Diagnostics, IntegratorConfig, Trajectory};
use crate::surface::{regular_grad, tangent_project, EllipsoidSpec, LevelSet, PhaseState};

/// Tolerance for the algebraic group and subspace predicates.
pub const ALGEBRAIC_TOL: f64 = 1e-12;
/// Tolerance for the pointwise totally-magnetic criterion.
pub const CRITERION_TOL: f64 = 1e-10;

fn check_square(spec: &EllipsoidSpec, m: &DMatrix<Complex64>) -> Result<()> {
    if m.nrows() != spec.n() || m.ncols() != spec.n() {
        return Err(MagflowError::DimensionMismatch {
            expected: spec.n(),
            found: if m.nrows() != spec.n() { m.nrows() } else { m.ncols() },
        });
    }
    Ok(())
}

fn block_of(ranges: &[Range<usize>], i: usize) -> usize {
    ranges
        .iter()
        .position(|r| r.contains(&i))
        .expect("index inside some block")
}

/// True iff `m` is unitary and block-diagonal for the multiplicity blocks of `spec`.
pub fn validate_magnetomorphism(spec: &EllipsoidSpec, m: &DMatrix<Complex64>) -> Result<bool> {
    check_square(spec, m)?;
    let n = spec.n();
    let gram = m.adjoint() * m;
    let unitary_err = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| {
            let target = if i == j { 1.0 } else { 0.0 };
            (gram[(i, j)] - target).norm()
        })
        .fold(0.0, f64::max);
    if !(unitary_err <= ALGEBRAIC_TOL) {
        return Ok(false);
    }
    let ranges = spec.block_ranges();
    for i in 0..n {
        for j in 0..n {
            if block_of(&ranges, i) != block_of(&ranges, j) && !(m[(i, j)].norm() <= ALGEBRAIC_TOL) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// A validated element of `U(ℓ_1) × ⋯ × U(ℓ_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockUnitary {
    matrix: DMatrix<Complex64>,
    block_sizes: Vec<usize>,
}

impl BlockUnitary {
    pub fn new(spec: &EllipsoidSpec, matrix: DMatrix<Complex64>) -> Result<Self> {
        if !validate_magnetomorphism(spec, &matrix)? {
            return Err(MagflowError::InvalidInput(
                "matrix is not a block-diagonal unitary for this ellipsoid".into(),
            ));
        }
        Ok(Self {
            matrix,
            block_sizes: spec.multiplicities().iter().map(|m| m.1).collect(),
        })
    }

    pub fn identity(spec: &EllipsoidSpec) -> Self {
        Self::new(spec, DMatrix::identity(spec.n(), spec.n())).expect("identity is unitary")
    }

    /// `diag(e^{iφ_1}, …, e^{iφ_n})`.
    pub fn diagonal_phases(spec: &EllipsoidSpec, phases: &[f64]) -> Result<Self> {
        if phases.len() != spec.n() {
            return Err(MagflowError::DimensionMismatch {
                expected: spec.n(),
                found: phases.len(),
            });
        }
        let diag = DVector::from_iterator(phases.len(), phases.iter().map(|&p| Complex64::from_polar(1.0, p)));
        Self::new(spec, DMatrix::from_diagonal(&diag))
    }

    /// A random element, one QR-generated unitary per block.
    pub fn random<R: Rng + ?Sized>(spec: &EllipsoidSpec, rng: &mut R) -> Self {
        let n = spec.n();
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for r in spec.block_ranges() {
            let u = random_unitary(r.len(), rng);
            for (a, i) in r.clone().enumerate() {
                for (b, j) in r.clone().enumerate() {
                    m[(i, j)] = u[(a, b)];
                }
            }
        }
        Self::new(spec, m).expect("QR factor is unitary")
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn apply(&self, z: &ComplexVector) -> ComplexVector {
        let x = DVector::from_vec(z.to_complex());
        let y = &self.matrix * x;
        ComplexVector::from_complex(y.as_slice())
    }
}

/// Haar-ish random unitary of size `k` from the QR factorization of a
/// random complex matrix (phases of `R` folded back into `Q`).
pub fn random_unitary<R: Rng + ?Sized>(k: usize, rng: &mut R) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(k, k, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..k {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for i in 0..k {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// `(Uq, Uv)`.
pub fn push_state(u: &BlockUnitary, st: &PhaseState) -> PhaseState {
    PhaseState {
        q: u.apply(&st.q),
        v: u.apply(&st.v),
    }
}

/// Pushes every sample of a trajectory and re-evaluates diagnostics.
pub fn push_trajectory(
    u: &BlockUnitary,
    traj: &Trajectory<PhaseState>,
    diag: &dyn Diagnostics<PhaseState>,
) -> Trajectory<PhaseState> {
    traj.map_states(|st| push_state(u, st), diag)
}

/// Complex-orthonormal basis of a block-compatible subspace `V_1 ⊕ ⋯ ⊕ V_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    n: usize,
    vectors: Vec<ComplexVector>,
}

impl SubspaceBasis {
    /// Validates orthonormality and that every vector is supported in a
    /// single multiplicity block of `spec`.
    pub fn new(spec: &EllipsoidSpec, vectors: Vec<ComplexVector>) -> Result<Self> {
        let n = spec.n();
        for v in &vectors {
            if v.dim() != n {
                return Err(MagflowError::DimensionMismatch {
                    expected: n,
                    found: v.dim(),
                });
            }
        }
        for (i, a) in vectors.iter().enumerate() {
            for (j, b) in vectors.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                let g = a.herm_inner(b)?;
                if (g - target).norm() > ALGEBRAIC_TOL {
                    return Err(MagflowError::InvalidInput(format!(
                        "basis is not orthonormal: <b{i}, b{j}> = {g}"
                    )));
                }
            }
        }
        let ranges = spec.block_ranges();
        for (i, v) in vectors.iter().enumerate() {
            let blocks: Vec<usize> = (0..n)
                .filter(|&k| v.get(k).norm() > ALGEBRAIC_TOL)
                .map(|k| block_of(&ranges, k))
                .collect();
            if blocks.windows(2).any(|w| w[0] != w[1]) {
                return Err(MagflowError::InvalidInput(format!(
                    "basis vector {i} mixes multiplicity blocks"
                )));
            }
        }
        Ok(Self { n, vectors })
    }

    /// `span_ℂ{e_j : j ∈ coords}` with 1-based coordinates.
    pub fn coordinate(spec: &EllipsoidSpec, coords: &[usize]) -> Result<Self> {
        let mut sorted = coords.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut vectors = Vec::new();
        for &j in &sorted {
            if j == 0 || j > spec.n() {
                return Err(MagflowError::IndexOutOfRange {
                    index: j,
                    len: spec.n(),
                });
            }
            vectors.push(ComplexVector::basis(spec.n(), j - 1));
        }
        Self::new(spec, vectors)
    }

    /// Orthonormalizes block by block, so the result is block-compatible
    /// whenever each input vector lives in one block.
    pub fn orthonormalize(spec: &EllipsoidSpec, raw: &[ComplexVector]) -> Result<Self> {
        let mut vectors = Vec::new();
        for r in spec.block_ranges() {
            let in_block: Vec<ComplexVector> = raw.iter().map(|v| restrict(v, &r)).collect();
            vectors.extend(complex_gram_schmidt(&in_block, 1e-10));
        }
        Self::new(spec, vectors)
    }

    pub fn vectors(&self) -> &[ComplexVector] {
        &self.vectors
    }

    /// Complex dimension of the span.
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// Norm of the component of `x` orthogonal to the span.
    pub fn distance(&self, x: &ComplexVector) -> f64 {
        let mut r = x.clone();
        for u in &self.vectors {
            let c = u.herm_inner(x).expect("dimensions checked");
            r = &r - &u.scale_complex(c);
        }
        r.norm()
    }

    /// Intersection of two block-compatible subspaces, computed per block.
    pub fn intersect(&self, other: &Self, spec: &EllipsoidSpec) -> Result<Self> {
        let mut vectors = Vec::new();
        for r in spec.block_ranges() {
            let a: Vec<ComplexVector> = self
                .vectors
                .iter()
                .map(|v| restrict(v, &r))
                .filter(|v| v.norm() > 0.5)
                .collect();
            let b: Vec<ComplexVector> = other
                .vectors
                .iter()
                .map(|v| restrict(v, &r))
                .filter(|v| v.norm() > 0.5)
                .collect();
            vectors.extend(intersect_spans(&a, &b, self.n));
        }
        Self::new(spec, vectors)
    }
}

fn restrict(v: &ComplexVector, r: &Range<usize>) -> ComplexVector {
    let mut out = ComplexVector::zeros(v.dim());
    for k in r.clone() {
        out.set(k, v.get(k));
    }
    out
}

fn complex_gram_schmidt(raw: &[ComplexVector], tol: f64) -> Vec<ComplexVector> {
    let mut out: Vec<ComplexVector> = Vec::new();
    for v in raw {
        let scale = v.norm();
        if scale == 0.0 {
            continue;
        }
        let mut x = v.clone();
        for _ in 0..2 {
            for u in &out {
                let c = u.herm_inner(&x).expect("same dimension");
                x = &x - &u.scale_complex(c);
            }
        }
        let norm = x.norm();
        if norm > tol * scale {
            out.push(x.scale(1.0 / norm));
        }
    }
    out
}

/// Complex-orthonormal basis of `span_ℂ(a) ∩ span_ℂ(b)` for orthonormal inputs.
fn intersect_spans(a: &[ComplexVector], b: &[ComplexVector], n: usize) -> Vec<ComplexVector> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    // Real orthonormal basis {u, iu} of span_ℂ(a), as columns.
    let cols: Vec<ComplexVector> = a.iter().flat_map(|u| [u.clone(), u.jmul()]).collect();
    let residual_cols: Vec<Vec<f64>> = cols
        .iter()
        .map(|x| {
            let mut r = x.clone();
            for u in b {
                let c = u.herm_inner(x).expect("same dimension");
                r = &r - &u.scale_complex(c);
            }
            r.into_real()
        })
        .collect();
    let m = DMatrix::from_fn(2 * n, cols.len(), |i, j| residual_cols[j][i]);
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let mut null = Vec::new();
    for (k, sigma) in svd.singular_values.iter().enumerate() {
        if *sigma <= 1e-10 {
            let coeffs = v_t.row(k);
            let mut x = ComplexVector::zeros(n);
            for (j, c) in coeffs.iter().enumerate() {
                x += &cols[j].scale(*c);
            }
            null.push(x);
        }
    }
    complex_gram_schmidt(&null, 1e-8)
}

/// Integrates the ellipsoid flow from `st0` (which must lie in the span) and
/// returns `max_t dist(q(t), V) + dist(v(t), V)`.
pub fn subspace_invariance_test(
    spec: &EllipsoidSpec,
    basis: &SubspaceBasis,
    st0: &PhaseState,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let (dq, dv) = (basis.distance(&st0.q), basis.distance(&st0.v));
    if dq > ALGEBRAIC_TOL * st0.q.norm().max(1.0) || dv > ALGEBRAIC_TOL * st0.v.norm().max(1.0) {
        return Err(MagflowError::Precondition(format!(
            "initial data not in the subspace (distances {dq:e}, {dv:e})"
        )));
    }
    let traj = integrate(&EllipsoidFlow::new(spec.clone()), st0, cfg, &())?;
    Ok(traj
        .states
        .iter()
        .map(|st| basis.distance(&st.q) + basis.distance(&st.v))
        .fold(0.0, f64::max))
}

/// `q ∈ N_J = {z ∈ E(A) : z_j = 0 ∀ j ∈ J}` with 1-based `J`.
pub fn fixed_point_membership(spec: &EllipsoidSpec, fixed: &[usize], q: &ComplexVector) -> bool {
    if q.dim() != spec.n() {
        return false;
    }
    let on_surface = (spec.value(q.as_real()) - 1.0).abs() <= crate::surface::TOL_CONSTRAINT;
    on_surface
        && fixed
            .iter()
            .all(|&j| j >= 1 && j <= spec.n() && q.get(j - 1).norm() <= ALGEBRAIC_TOL)
}

/// Real orthonormal basis of the real span of `vectors`; errors on dependence.
fn real_orthonormal(vectors: &[ComplexVector]) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for (i, v) in vectors.iter().enumerate() {
        let scale = v.norm();
        let mut x = v.as_real().to_vec();
        for _ in 0..2 {
            for u in &out {
                let c = dot(u, &x);
                x.iter_mut().zip(u).for_each(|(xi, ui)| *xi -= c * ui);
            }
        }
        let norm = dot(&x, &x).sqrt();
        if !(norm > 1e-10 * scale) {
            return Err(MagflowError::InvalidInput(format!(
                "degenerate basis: vector {i} is linearly dependent on the previous ones"
            )));
        }
        x.iter_mut().for_each(|xi| *xi /= norm);
        out.push(x);
    }
    Ok(out)
}

fn real_distance(basis: &[Vec<f64>], x: &[f64]) -> f64 {
    let mut r = x.to_vec();
    for u in basis {
        let c = dot(u, &r);
        r.iter_mut().zip(u).for_each(|(ri, ui)| *ri -= c * ui);
    }
    dot(&r, &r).sqrt()
}

fn check_tangent_basis(s: &dyn LevelSet, x: &ComplexVector, basis: &[ComplexVector]) -> Result<Vec<Vec<f64>>> {
    if basis.is_empty() {
        return Err(MagflowError::InvalidInput("degenerate basis: empty".into()));
    }
    let (g, g2) = regular_grad(s, x.as_real())?;
    for (i, v) in basis.iter().enumerate() {
        if v.dim() != s.dim() {
            return Err(MagflowError::DimensionMismatch {
                expected: s.dim(),
                found: v.dim(),
            });
        }
        let normal = dot(v.as_real(), &g).abs();
        if normal > CRITERION_TOL * v.norm() * g2.sqrt() {
            return Err(MagflowError::Precondition(format!(
                "basis vector {i} is not tangent to the surface"
            )));
        }
    }
    real_orthonormal(basis)
}

/// True iff the tangential part of `iv` stays in `span(basis)` for every
/// basis vector `v`.
pub fn totally_magnetic_criterion(s: &dyn LevelSet, x: &ComplexVector, basis: &[ComplexVector]) -> Result<bool> {
    let ortho = check_tangent_basis(s, x, basis)?;
    for v in basis {
        let w = tangent_project(s, x, &v.jmul())?;
        if real_distance(&ortho, w.as_real()) > CRITERION_TOL * v.norm() {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Odd,
    Even,
}

/// Classifies a totally magnetic tangent space: odd iff `i∇f(x)` is tangent
/// to it. Inconsistent inputs are reported as precondition errors.
pub fn parity_classify(s: &dyn LevelSet, x: &ComplexVector, basis: &[ComplexVector]) -> Result<Parity> {
    if !totally_magnetic_criterion(s, x, basis)? {
        return Err(MagflowError::Precondition(
            "span fails the totally magnetic criterion".into(),
        ));
    }
    let ortho = real_orthonormal(basis)?;
    let (g, g2) = regular_grad(s, x.as_real())?;
    let ig: Vec<f64> = crate::complex::jmul_slice(&g).iter().map(|c| c / g2.sqrt()).collect();
    let reeb_tangent = real_distance(&ortho, &ig) <= CRITERION_TOL;
    let count = basis.len();
    if reeb_tangent {
        if count.is_multiple_of(2) {
            return Err(MagflowError::Precondition(format!(
                "i grad f lies in a span of even dimension {count}"
            )));
        }
        Ok(Parity::Odd)
    } else {
        if count % 2 == 1 {
            return Err(MagflowError::Precondition(format!(
                "i grad f is not in a span of odd dimension {count}"
            )));
        }
        for v in basis {
            if real_distance(&ortho, v.jmul().as_real()) > CRITERION_TOL * v.norm() {
                return Err(MagflowError::Precondition(
                    "even-dimensional span is not complex".into(),
                ));
            }
        }
        Ok(Parity::Even)
    }
}

fn sqrt_a_apply(spec: &EllipsoidSpec, z: &ComplexVector) -> ComplexVector {
    let entries: Vec<Complex64> = (0..spec.n()).map(|j| z.get(j) * spec.a()[j].sqrt()).collect();
    ComplexVector::from_complex(&entries)
}

fn a_apply(spec: &EllipsoidSpec, z: &ComplexVector) -> ComplexVector {
    let entries: Vec<Complex64> = (0..spec.n()).map(|j| z.get(j) * spec.a()[j]).collect();
    ComplexVector::from_complex(&entries)
}

/// Residuals of `F_A^* g = g_A` and `F_A^* α = α_A` for `F_A(z) = √A z`.
pub fn sphere_ellipsoid_pullback_check(
    spec: &EllipsoidSpec,
    z: &ComplexVector,
    v: &ComplexVector,
    w: &ComplexVector,
) -> Result<(f64, f64)> {
    for x in [z, v, w] {
        if x.dim() != spec.n() {
            return Err(MagflowError::DimensionMismatch {
                expected: spec.n(),
                found: x.dim(),
            });
        }
    }
    if (z.norm() - 1.0).abs() > 1e-9 {
        return Err(MagflowError::Precondition("z must lie on the unit sphere".into()));
    }
    for t in [v, w] {
        if z.real_inner(t)?.abs() > 1e-9 * t.norm().max(1.0) {
            return Err(MagflowError::Precondition(
                "v, w must be tangent to the unit sphere at z".into(),
            ));
        }
    }
    let (sv, sw, sz) = (sqrt_a_apply(spec, v), sqrt_a_apply(spec, w), sqrt_a_apply(spec, z));
    let metric = (sv.real_inner(&sw)? - a_apply(spec, v).herm_inner(w)?.re).abs();
    let potential = (sz.alpha(&sv)? - 0.5 * a_apply(spec, z).herm_inner(v)?.im).abs();
    Ok((metric, potential))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::SurfaceDiagnostics;
    use crate::integrator::Method;
    use crate::invariants::{energy, moment_map_f};
    use crate::sampling::{random_tangent_state, SeedableRng, SplitMix64};
    use crate::surface::c_gamma;

    fn spec124() -> EllipsoidSpec {
        EllipsoidSpec::new(vec![1.0, 2.0, 4.0]).unwrap()
    }

    fn e(n: usize, k: usize) -> ComplexVector {
        ComplexVector::basis(n, k)
    }

    fn ie(n: usize, k: usize) -> ComplexVector {
        ComplexVector::imag_basis(n, k)
    }

    #[test]
    fn diagonal_phases_are_magnetomorphisms() {
        let mut rng = SplitMix64::seed_from_u64(1);
        for spec in [
            spec124(),
            EllipsoidSpec::sphere(3, 1.0).unwrap(),
            EllipsoidSpec::new(vec![1.0, 1.0, 3.0]).unwrap(),
        ] {
            for _ in 0..20 {
                let phases: Vec<f64> = (0..3).map(|_| rng.gen_range(-7.0..7.0)).collect();
                assert!(BlockUnitary::diagonal_phases(&spec, &phases).is_ok());
            }
        }
    }

    #[test]
    fn any_unitary_on_sphere() {
        let mut rng = SplitMix64::seed_from_u64(2);
        let sphere = EllipsoidSpec::sphere(4, 1.0).unwrap();
        for _ in 0..20 {
            assert!(validate_magnetomorphism(&sphere, &random_unitary(4, &mut rng)).unwrap());
        }
    }

    #[test]
    fn swap_rejected_on_distinct_axes() {
        let spec = EllipsoidSpec::new(vec![1.0, 4.0]).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let swap = DMatrix::from_row_slice(2, 2, &[zero, one, one, zero]);
        assert!(!validate_magnetomorphism(&spec, &swap).unwrap());
        // Independent check: the swap moves √a₂e₂ off the ellipsoid.
        let moved = ComplexVector::basis(2, 0).scale(2.0);
        assert!((spec.value(moved.as_real()) - 1.0).abs() > 1.0);
        // ...but it is fine on the sphere.
        assert!(validate_magnetomorphism(&EllipsoidSpec::sphere(2, 1.0).unwrap(), &swap).unwrap());
    }

    #[test]
    fn non_unitary_and_wrong_size() {
        let spec = spec124();
        let m = DMatrix::from_diagonal_element(3, 3, Complex64::new(1.1, 0.0));
        assert!(!validate_magnetomorphism(&spec, &m).unwrap());
        let m = DMatrix::<Complex64>::identity(2, 2);
        assert!(validate_magnetomorphism(&spec, &m).is_err());
    }

    #[test]
    fn push_state_preserves_invariants() {
        let mut rng = SplitMix64::seed_from_u64(3);
        let spec = EllipsoidSpec::new(vec![1.0, 1.0, 2.0, 5.0, 5.0]).unwrap();
        let id = BlockUnitary::identity(&spec);
        let st = random_tangent_state(&spec, &mut rng, 1.0);
        assert_eq!(push_state(&id, &st), st);
        for _ in 0..20 {
            let speed = rng.gen_range(0.2..2.0);
            let st = random_tangent_state(&spec, &mut rng, speed);
            let u = BlockUnitary::random(&spec, &mut rng);
            let p = push_state(&u, &st);
            assert!((spec.value(p.q.as_real()) - 1.0).abs() < 1e-13);
            assert!((energy(&p) - energy(&st)).abs() < 1e-13);
            assert!((c_gamma(&spec, &p).unwrap() - c_gamma(&spec, &st).unwrap()).abs() < 1e-13);

            let phases: Vec<f64> = (0..5).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let d = BlockUnitary::diagonal_phases(&spec, &phases).unwrap();
            let p = push_state(&d, &st);
            for j in 1..=5 {
                assert!((p.q.get(j - 1).norm() - st.q.get(j - 1).norm()).abs() < 1e-15);
                assert!((p.v.get(j - 1).norm() - st.v.get(j - 1).norm()).abs() < 1e-15);
                let df = moment_map_f(&spec, &p, j).unwrap() - moment_map_f(&spec, &st, j).unwrap();
                assert!(df.abs() < 1e-13);
            }
        }
    }

    #[test]
    fn pushed_trajectory_keeps_residual() {
        let mut rng = SplitMix64::seed_from_u64(4);
        let spec = EllipsoidSpec::new(vec![1.0, 1.0, 4.0]).unwrap();
        let st = random_tangent_state(&spec, &mut rng, 1.0);
        let cfg = IntegratorConfig::new(Method::Rk4Projected, 1e-3, 2.0, 10);
        let diag = SurfaceDiagnostics::new(&spec);
        let traj = integrate(&EllipsoidFlow::new(spec.clone()), &st, &cfg, &diag).unwrap();
        let u = BlockUnitary::random(&spec, &mut rng);
        let pushed = push_trajectory(&u, &traj, &diag);
        let r0 = crate::invariants::ode_residual(&spec, &traj).unwrap();
        let r1 = crate::invariants::ode_residual(&spec, &pushed).unwrap();
        assert!(r1 <= 2.0 * r0, "{r1} vs {r0}");
    }

    #[test]
    fn subspace_basis_validation() {
        let spec = spec124();
        assert!(SubspaceBasis::coordinate(&spec, &[1, 3]).is_ok());
        assert!(SubspaceBasis::coordinate(&spec, &[4]).is_err());
        let mixed = (&e(3, 0) + &e(3, 1)).scale(1.0 / 2f64.sqrt());
        assert!(SubspaceBasis::new(&spec, vec![mixed.clone()]).is_err());
        // Mixing is allowed within a multiplicity block.
        let sphere = EllipsoidSpec::sphere(3, 1.0).unwrap();
        assert!(SubspaceBasis::new(&sphere, vec![mixed]).is_ok());
        assert!(SubspaceBasis::new(&spec, vec![e(3, 0).scale(2.0)]).is_err());
    }

    #[test]
    fn intersections() {
        let sphere = EllipsoidSpec::sphere(3, 1.0).unwrap();
        let a = SubspaceBasis::coordinate(&sphere, &[1, 2]).unwrap();
        let b = SubspaceBasis::coordinate(&sphere, &[2, 3]).unwrap();
        let c = a.intersect(&b, &sphere).unwrap();
        assert_eq!(c.dim(), 1);
        assert!(c.distance(&e(3, 1)) < 1e-12);
        assert!(c.distance(&ie(3, 1)) < 1e-12);
        assert!((c.distance(&e(3, 0)) - 1.0).abs() < 1e-12);

        // Non-coordinate planes on the sphere: span(e1+e2, e3) ∩ span(e1, e2).
        let s = 1.0 / 2f64.sqrt();
        let p = SubspaceBasis::new(&sphere, vec![(&e(3, 0) + &e(3, 1)).scale(s), e(3, 2)]).unwrap();
        let i = p.intersect(&a, &sphere).unwrap();
        assert_eq!(i.dim(), 1);
        assert!(i.distance(&(&e(3, 0) + &e(3, 1))) < 1e-10);

        let spec = spec124();
        let a = SubspaceBasis::coordinate(&spec, &[1, 2]).unwrap();
        let b = SubspaceBasis::coordinate(&spec, &[3]).unwrap();
        assert_eq!(a.intersect(&b, &spec).unwrap().dim(), 0);
    }

    #[test]
    fn axis_orbit_stays_on_axis() {
        let spec = EllipsoidSpec::new(vec![1.0, 4.0]).unwrap();
        let basis = SubspaceBasis::coordinate(&spec, &[2]).unwrap();
        let st = PhaseState::new(e(2, 1).scale(2.0), ie(2, 1).scale(0.5)).unwrap();
        let cfg = IntegratorConfig::new(Method::Rk4Projected, 1e-3, 10.0, 100);
        assert!(subspace_invariance_test(&spec, &basis, &st, &cfg).unwrap() <= 1e-10);
        let full = SubspaceBasis::coordinate(&spec, &[1, 2]).unwrap();
        let st = PhaseState::new(e(2, 0), ie(2, 1).scale(0.7)).unwrap();
        assert!(subspace_invariance_test(&spec, &full, &st, &cfg).unwrap() <= 1e-14);
        let st = PhaseState::new(e(2, 0), e(2, 1)).unwrap();
        assert!(matches!(
            subspace_invariance_test(&spec, &basis, &st, &cfg),
            Err(MagflowError::Precondition(_))
        ));
    }

    #[test]
    fn fixed_point_examples() {
        let spec = EllipsoidSpec::new(vec![1.0, 4.0]).unwrap();
        let on_axis = e(2, 1).scale(2.0);
        assert!(fixed_point_membership(&spec, &[], &on_axis));
        assert!(!fixed_point_membership(&spec, &[], &e(2, 1)));
        assert!(fixed_point_membership(&spec, &[1], &on_axis));
        assert!(!fixed_point_membership(&spec, &[2], &on_axis));
    }

    #[test]
    fn criterion_examples() {
        let spec = EllipsoidSpec::new(vec![1.0, 4.0]).unwrap();
        let x = e(2, 1).scale(2.0);
        assert!(totally_magnetic_criterion(&spec, &x, &[ie(2, 1)]).unwrap());
        // Full tangent space of Σ at x.
        let full = [e(2, 0), ie(2, 0), ie(2, 1)];
        assert!(totally_magnetic_criterion(&spec, &x, &full).unwrap());
        // A real (non-complex) plane tangent to S⁵ at e1.
        let sphere = EllipsoidSpec::sphere(3, 1.0).unwrap();
        let plane = [e(3, 1), e(3, 2)];
        assert!(!totally_magnetic_criterion(&sphere, &e(3, 0), &plane).unwrap());
    }

    #[test]
    fn criterion_errors() {
        let sphere = EllipsoidSpec::sphere(2, 1.0).unwrap();
        let x = e(2, 0);
        assert!(totally_magnetic_criterion(&sphere, &x, &[e(2, 0)]).is_err());
        assert!(totally_magnetic_criterion(&sphere, &x, &[e(2, 1), e(2, 1).scale(2.0)]).is_err());
        assert!(totally_magnetic_criterion(&sphere, &x, &[]).is_err());
    }

    #[test]
    fn criterion_is_basis_independent() {
        let sphere = EllipsoidSpec::sphere(3, 1.0).unwrap();
        let x = e(3, 0);
        let b1 = [ie(3, 0), e(3, 1), ie(3, 1)];
        let b2 = [
            &ie(3, 0) + &e(3, 1),
            (&e(3, 1) - &ie(3, 1)).scale(3.0),
            &ie(3, 1) + &ie(3, 0).scale(0.2),
        ];
        assert!(totally_magnetic_criterion(&sphere, &x, &b1).unwrap());
        assert!(totally_magnetic_criterion(&sphere, &x, &b2).unwrap());
    }

    #[test]
    fn parity_examples() {
        let spec = EllipsoidSpec::new(vec![1.0, 4.0]).unwrap();
        assert_eq!(
            parity_classify(&spec, &e(2, 1).scale(2.0), &[ie(2, 1)]).unwrap(),
            Parity::Odd
        );
        let sphere = EllipsoidSpec::sphere(3, 1.0).unwrap();
        let small_sphere = [ie(3, 0), e(3, 1), ie(3, 1)];
        assert_eq!(parity_classify(&sphere, &e(3, 0), &small_sphere).unwrap(), Parity::Odd);
        let complex_line = [e(3, 1), ie(3, 1)];
        assert_eq!(parity_classify(&sphere, &e(3, 0), &complex_line).unwrap(), Parity::Even);
        // Even count containing i∇f fails the consistency gate.
        let bad = [ie(3, 0), e(3, 1)];
        assert!(matches!(
            parity_classify(&sphere, &e(3, 0), &bad),
            Err(MagflowError::Precondition(_))
        ));
    }

    #[test]
    fn pullback_examples() {
        let mut rng = SplitMix64::seed_from_u64(5);
        let sphere = EllipsoidSpec::sphere(2, 1.0).unwrap();
        let st = random_tangent_state(&sphere, &mut rng, 1.0);
        let w = tangent_project(
            &sphere,
            &st.q,
            &ComplexVector::from_real(vec![0.3, 0.1, -0.5, 0.2]).unwrap(),
        )
        .unwrap();
        let (r1, r2) = sphere_ellipsoid_pullback_check(&sphere, &st.q, &st.v, &w).unwrap();
        assert!(r1 <= 1e-15 && r2 <= 1e-15);

        let spec = EllipsoidSpec::new(vec![1.0, 4.0]).unwrap();
        let (z, v) = (e(2, 0), e(2, 1));
        let g = sqrt_a_apply(&spec, &v).real_inner(&sqrt_a_apply(&spec, &v)).unwrap();
        assert_eq!(g, 4.0);
        assert_eq!(a_apply(&spec, &v).herm_inner(&v).unwrap().re, 4.0);
        let (r1, r2) = sphere_ellipsoid_pullback_check(&spec, &z, &v, &v).unwrap();
        assert!(r1 <= 1e-15 && r2 <= 1e-15);
        assert!(sphere_ellipsoid_pullback_check(&spec, &e(2, 0).scale(2.0), &v, &v).is_err());
    }
}
