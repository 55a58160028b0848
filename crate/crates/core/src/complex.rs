//! Complex/real linear-algebra conventions shared by every other module.
//!
//! A [`ComplexVector`] in ℂⁿ is stored as 2n reals with interleaved
//! `(re, im)` pairs, so entry `k` lives at real indices `2k` and `2k + 1`.
//! This ordering is also the column order of every exported CSV file.
//!
//! The Hermitian product is conjugate-linear in the **first** slot:
//!
//! ```text
//! ⟨z, w⟩ = Σ_k conj(z_k) · w_k
//! ```
//!
//! With this choice `Re⟨iz, w⟩ = Im⟨z, w⟩`, which is the identity the magnetic
//! potential `α_z(w) = ½ Im⟨z, w⟩` relies on.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{MagflowError, Result};

/// A vector in ℂⁿ backed by 2n interleaved reals.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector {
    data: Vec<f64>,
}

impl ComplexVector {
    /// The zero vector of complex dimension `n`.
    pub fn zeros(n: usize) -> Self {
        Self { data: vec![0.0; 2 * n] }
    }

    /// The `k`-th standard basis vector (0-based) of ℂⁿ.
    pub fn basis(n: usize, k: usize) -> Self {
        let mut out = Self::zeros(n);
        out.data[2 * k] = 1.0;
        out
    }

    /// `i·e_k`.
    pub fn imag_basis(n: usize, k: usize) -> Self {
        let mut out = Self::zeros(n);
        out.data[2 * k + 1] = 1.0;
        out
    }

    pub fn from_complex(entries: &[Complex64]) -> Self {
        let mut data = Vec::with_capacity(2 * entries.len());
        for z in entries {
            data.push(z.re);
            data.push(z.im);
        }
        Self { data }
    }

    /// Wraps an interleaved real buffer. The length must be even and nonzero.
    pub fn from_real(data: Vec<f64>) -> Result<Self> {
        if data.is_empty() || !data.len().is_multiple_of(2) {
            return Err(MagflowError::InvalidInput(format!(
                "interleaved buffer must have positive even length, got {}",
                data.len()
            )));
        }
        Ok(Self { data })
    }

    /// Complex dimension n.
    pub fn dim(&self) -> usize {
        self.data.len() / 2
    }

    pub fn as_real(&self) -> &[f64] {
        &self.data
    }

    pub fn as_real_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_real(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, k: usize) -> Complex64 {
        Complex64::new(self.data[2 * k], self.data[2 * k + 1])
    }

    pub fn set(&mut self, k: usize, z: Complex64) {
        self.data[2 * k] = z.re;
        self.data[2 * k + 1] = z.im;
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        (0..self.dim()).map(|k| self.get(k)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            data: self.data.iter().map(|x| s * x).collect(),
        }
    }

    /// Multiplies every entry by the complex scalar `s`.
    pub fn scale_complex(&self, s: Complex64) -> Self {
        let entries: Vec<Complex64> = self.to_complex().into_iter().map(|z| s * z).collect();
        Self::from_complex(&entries)
    }

    /// Multiplication by the imaginary unit: `(re, im) ↦ (−im, re)` per entry.
    pub fn jmul(&self) -> Self {
        let mut data = vec![0.0; self.data.len()];
        for (out, pair) in data.chunks_exact_mut(2).zip(self.data.chunks_exact(2)) {
            out[0] = -pair[1];
            out[1] = pair[0];
        }
        Self { data }
    }

    /// `Σ_k conj(self_k) · other_k`.
    pub fn herm_inner(&self, other: &Self) -> Result<Complex64> {
        check_dims(self, other)?;
        let mut acc = Complex64::new(0.0, 0.0);
        for (z, w) in self.data.chunks_exact(2).zip(other.data.chunks_exact(2)) {
            acc.re += z[0] * w[0] + z[1] * w[1];
            acc.im += z[0] * w[1] - z[1] * w[0];
        }
        Ok(acc)
    }

    /// Euclidean inner product on ℝ²ⁿ, equal to `Re⟨self, other⟩`.
    pub fn real_inner(&self, other: &Self) -> Result<f64> {
        check_dims(self, other)?;
        Ok(dot(&self.data, &other.data))
    }

    /// The magnetic potential `α_z(v) = ½ Im⟨z, v⟩` with `self = z`.
    pub fn alpha(&self, v: &Self) -> Result<f64> {
        Ok(0.5 * self.herm_inner(v)?.im)
    }
}

fn check_dims(a: &ComplexVector, b: &ComplexVector) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(MagflowError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// Free-function form of [`ComplexVector::herm_inner`].
pub fn herm_inner(z: &ComplexVector, w: &ComplexVector) -> Result<Complex64> {
    z.herm_inner(w)
}

pub fn real_inner(v: &ComplexVector, w: &ComplexVector) -> Result<f64> {
    v.real_inner(w)
}

pub fn jmul(v: &ComplexVector) -> ComplexVector {
    v.jmul()
}

pub fn alpha(z: &ComplexVector, v: &ComplexVector) -> Result<f64> {
    z.alpha(v)
}

/// Dot product of two real slices of equal length.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Multiplication by i on an interleaved real slice.
pub(crate) fn jmul_slice(v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for (o, pair) in out.chunks_exact_mut(2).zip(v.chunks_exact(2)) {
        o[0] = -pair[1];
        o[1] = pair[0];
    }
    out
}

impl Index<usize> for ComplexVector {
    type Output = f64;

    /// Indexes the interleaved real view.
    fn index(&self, idx: usize) -> &f64 {
        &self.data[idx]
    }
}

impl Add for &ComplexVector {
    type Output = ComplexVector;

    fn add(self, rhs: &ComplexVector) -> ComplexVector {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in add");
        ComplexVector {
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexVector {
    type Output = ComplexVector;

    fn sub(self, rhs: &ComplexVector) -> ComplexVector {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in sub");
        ComplexVector {
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl AddAssign<&ComplexVector> for ComplexVector {
    fn add_assign(&mut self, rhs: &ComplexVector) {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in add_assign");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl Mul<&ComplexVector> for f64 {
    type Output = ComplexVector;

    fn mul(self, rhs: &ComplexVector) -> ComplexVector {
        rhs.scale(self)
    }
}

impl Neg for &ComplexVector {
    type Output = ComplexVector;

    fn neg(self) -> ComplexVector {
        self.scale(-1.0)
    }
}
