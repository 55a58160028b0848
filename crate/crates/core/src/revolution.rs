//! Magnetic flow on a surface of revolution `g = dr² + f(r)² dθ²` with
//! potential `α = a(r) dθ`, in the coordinates `(r, θ)`.
//!
//! Euler–Lagrange for `L = ½(ṙ² + f²θ̇²) − a(r)θ̇` gives
//!
//! ```text
//! r̈ = f f′ θ̇² − a′ θ̇,    θ̈ = (a′ − 2 f f′ θ̇) ṙ / f²,
//! ```
//!
//! with the two integrals `E = ½(ṙ² + f²θ̇²)` and `F = f²θ̇ − a`.

use std::fmt;
use std::sync::Arc;

use crate::error::{MagflowError, Result};
use crate::integrator::{Diagnostics, PhasePoint, SecondOrderSystem};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub const DEFAULT_F_MIN: f64 = 1e-6;

/// Profile `f`, potential `a`, their derivatives, and the open interval of
/// admissible `r`.
#[derive(Clone)]
pub struct RevolutionSurface {
    f: ScalarFn,
    df: ScalarFn,
    a: ScalarFn,
    da: ScalarFn,
    domain: (f64, f64),
    f_min: f64,
}

impl fmt::Debug for RevolutionSurface {
    fn fmt(&self, fmt: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt.debug_struct("RevolutionSurface")
            .field("domain", &self.domain)
            .field("f_min", &self.f_min)
            .finish_non_exhaustive()
    }
}

impl RevolutionSurface {
    pub fn new(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
        a: impl Fn(f64) -> f64 + Send + Sync + 'static,
        da: impl Fn(f64) -> f64 + Send + Sync + 'static,
        domain: (f64, f64),
    ) -> Result<Self> {
        if !(domain.0 < domain.1) {
            return Err(MagflowError::InvalidInput("empty r domain".into()));
        }
        Ok(Self {
            f: Arc::new(f),
            df: Arc::new(df),
            a: Arc::new(a),
            da: Arc::new(da),
            domain,
            f_min: DEFAULT_F_MIN,
        })
    }

    pub fn with_f_min(mut self, f_min: f64) -> Self {
        self.f_min = f_min;
        self
    }

    /// `f = 2 + cos r`, `a = sin r` on all of ℝ.
    pub fn torus() -> Self {
        Self::new(
            |r| 2.0 + r.cos(),
            |r| -r.sin(),
            f64::sin,
            f64::cos,
            (f64::NEG_INFINITY, f64::INFINITY),
        )
        .expect("valid domain")
    }

    /// The torus profile with `a ≡ 0` (Riemannian geodesics).
    pub fn torus_without_potential() -> Self {
        Self::new(
            |r| 2.0 + r.cos(),
            |r| -r.sin(),
            |_| 0.0,
            |_| 0.0,
            (f64::NEG_INFINITY, f64::INFINITY),
        )
        .expect("valid domain")
    }

    /// Piecewise cubic Hermite interpolation of tabulated `(r, f, f′, a, a′)`.
    /// The domain is the open interval spanned by the nodes.
    pub fn tabulated(r: Vec<f64>, f: Vec<f64>, df: Vec<f64>, a: Vec<f64>, da: Vec<f64>) -> Result<Self> {
        let n = r.len();
        if n < 2 {
            return Err(MagflowError::InvalidInput(
                "tabulated profile needs at least two nodes".into(),
            ));
        }
        for (name, col) in [("f", &f), ("f'", &df), ("a", &a), ("a'", &da)] {
            if col.len() != n {
                return Err(MagflowError::InvalidInput(format!(
                    "tabulated column {name} has {} entries, expected {n}",
                    col.len()
                )));
            }
        }
        if r.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(MagflowError::InvalidInput(
                "tabulated r must be strictly increasing".into(),
            ));
        }
        if f.iter().any(|&x| !(x > 0.0)) {
            return Err(MagflowError::InvalidInput("tabulated f must be positive".into()));
        }
        let fh = Arc::new(Hermite::new(r.clone(), f, df));
        let ah = Arc::new(Hermite::new(r.clone(), a, da));
        let (f1, f2, a1, a2) = (fh.clone(), fh, ah.clone(), ah);
        Self::new(
            move |x| f1.value(x),
            move |x| f2.derivative(x),
            move |x| a1.value(x),
            move |x| a2.derivative(x),
            (r[0], r[n - 1]),
        )
    }

    pub fn f(&self, r: f64) -> f64 {
        (self.f)(r)
    }

    pub fn df(&self, r: f64) -> f64 {
        (self.df)(r)
    }

    pub fn a(&self, r: f64) -> f64 {
        (self.a)(r)
    }

    pub fn da(&self, r: f64) -> f64 {
        (self.da)(r)
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    /// Errors unless `r` is inside the domain with `f(r) ≥ f_min`.
    pub fn check(&self, r: f64) -> Result<()> {
        let (lo, hi) = self.domain;
        if !(r > lo && r < hi) || !(self.f(r) >= self.f_min) {
            return Err(MagflowError::Domain { r, lo, hi });
        }
        Ok(())
    }

    /// Max of `|f′ − Df|` and `|a′ − Da|` at `points` with central differences of width `delta`.
    pub fn derivative_mismatch(&self, points: &[f64], delta: f64) -> f64 {
        points
            .iter()
            .map(|&r| {
                let fd_f = (self.f(r + delta) - self.f(r - delta)) / (2.0 * delta);
                let fd_a = (self.a(r + delta) - self.a(r - delta)) / (2.0 * delta);
                (fd_f - self.df(r)).abs().max((fd_a - self.da(r)).abs())
            })
            .fold(0.0, f64::max)
    }
}

struct Hermite {
    x: Vec<f64>,
    y: Vec<f64>,
    dy: Vec<f64>,
}

impl Hermite {
    fn new(x: Vec<f64>, y: Vec<f64>, dy: Vec<f64>) -> Self {
        Self { x, y, dy }
    }

    fn locate(&self, t: f64) -> (usize, f64, f64) {
        let n = self.x.len();
        let k = match self.x.partition_point(|&xi| xi <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.x[k + 1] - self.x[k];
        (k, (t - self.x[k]) / h, h)
    }

    fn value(&self, t: f64) -> f64 {
        let (k, s, h) = self.locate(t);
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[k] + h10 * h * self.dy[k] + h01 * self.y[k + 1] + h11 * h * self.dy[k + 1]
    }

    fn derivative(&self, t: f64) -> f64 {
        let (k, s, h) = self.locate(t);
        let s2 = s * s;
        let d00 = 6.0 * s2 - 6.0 * s;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = -6.0 * s2 + 6.0 * s;
        let d11 = 3.0 * s2 - 2.0 * s;
        (d00 * self.y[k] + d01 * self.y[k + 1]) / h + d10 * self.dy[k] + d11 * self.dy[k + 1]
    }
}

/// `(r, θ)` with velocities `(ṙ, θ̇)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RevState {
    pub q: [f64; 2],
    pub v: [f64; 2],
}

impl RevState {
    pub fn new(r: f64, theta: f64, r_dot: f64, theta_dot: f64) -> Self {
        Self {
            q: [r, theta],
            v: [r_dot, theta_dot],
        }
    }

    pub fn r(&self) -> f64 {
        self.q[0]
    }

    pub fn theta(&self) -> f64 {
        self.q[1]
    }

    pub fn r_dot(&self) -> f64 {
        self.v[0]
    }

    pub fn theta_dot(&self) -> f64 {
        self.v[1]
    }
}

impl PhasePoint for RevState {
    fn position(&self) -> &[f64] {
        &self.q
    }

    fn velocity(&self) -> &[f64] {
        &self.v
    }

    fn from_parts(q: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        match (q.as_slice(), v.as_slice()) {
            (&[r, th], &[rd, thd]) => Ok(Self::new(r, th, rd, thd)),
            _ => Err(MagflowError::DimensionMismatch {
                expected: 2,
                found: q.len(),
            }),
        }
    }
}

/// `(r̈, θ̈)`.
pub fn revolution_rhs(s: &RevolutionSurface, st: &RevState) -> Result<(f64, f64)> {
    let r = st.r();
    s.check(r)?;
    let (f, df, da) = (s.f(r), s.df(r), s.da(r));
    let (rd, thd) = (st.r_dot(), st.theta_dot());
    let r_dd = f * df * thd * thd - da * thd;
    let th_dd = (da - 2.0 * f * df * thd) * rd / (f * f);
    Ok((r_dd, th_dd))
}

/// `F = f(r)² θ̇ − a(r)`.
#[allow(non_snake_case)]
pub fn clairaut_F(s: &RevolutionSurface, st: &RevState) -> f64 {
    let f = s.f(st.r());
    f * f * st.theta_dot() - s.a(st.r())
}

/// `E = ½(ṙ² + f(r)² θ̇²)`.
pub fn revolution_energy(s: &RevolutionSurface, st: &RevState) -> f64 {
    let f = s.f(st.r());
    0.5 * (st.r_dot().powi(2) + f * f * st.theta_dot().powi(2))
}

/// Unconstrained second-order system for the integrator.
#[derive(Debug, Clone)]
pub struct RevolutionSystem {
    surface: RevolutionSurface,
}

impl RevolutionSystem {
    pub fn new(surface: RevolutionSurface) -> Self {
        Self { surface }
    }

    pub fn surface(&self) -> &RevolutionSurface {
        &self.surface
    }
}

impl SecondOrderSystem for RevolutionSystem {
    fn state_dim(&self) -> usize {
        2
    }

    fn acceleration(&self, q: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let (a, b) = revolution_rhs(&self.surface, &RevState::new(q[0], q[1], v[0], v[1]))?;
        Ok(vec![a, b])
    }
}

/// `energy, F`.
pub struct RevolutionDiagnostics<'a> {
    surface: &'a RevolutionSurface,
}

impl<'a> RevolutionDiagnostics<'a> {
    pub fn new(surface: &'a RevolutionSurface) -> Self {
        Self { surface }
    }
}

impl Diagnostics<RevState> for RevolutionDiagnostics<'_> {
    fn names(&self) -> Vec<String> {
        vec!["energy".into(), "F".into()]
    }

    fn evaluate(&self, st: &RevState) -> Vec<f64> {
        vec![revolution_energy(self.surface, st), clairaut_F(self.surface, st)]
    }
}
