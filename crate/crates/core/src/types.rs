//! Value types shared across the crate.
//!
//! Every type validates its invariants on construction and is immutable
//! afterwards, so values can be shared freely between threads.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerance;

fn check_unit(name: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::OutOfUnitInterval { name, value })
    }
}

/// Hilbert-space dimension, at least 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Dimension(usize);

impl Dimension {
    pub fn new(d: usize) -> Result<Self> {
        if d >= 2 {
            Ok(Self(d))
        } else {
            Err(Error::InvalidDimension(d))
        }
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }

    #[inline]
    pub(crate) fn as_f64(self) -> f64 {
        self.0 as f64
    }
}

impl TryFrom<usize> for Dimension {
    type Error = Error;
    fn try_from(d: usize) -> Result<Self> {
        Self::new(d)
    }
}

impl From<Dimension> for usize {
    fn from(d: Dimension) -> usize {
        d.0
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Efficiency `eta` and visibility `p` of a noisified measurement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    eta: f64,
    p: f64,
}

impl NoiseParams {
    pub fn new(eta: f64, p: f64) -> Result<Self> {
        Ok(Self {
            eta: check_unit("eta", eta)?,
            p: check_unit("p", p)?,
        })
    }

    #[inline]
    pub fn eta(&self) -> f64 {
        self.eta
    }

    #[inline]
    pub fn p(&self) -> f64 {
        self.p
    }
}

/// Threshold `t` of the response-function family and boundary parameter.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Threshold(f64);

impl Threshold {
    pub const ZERO: Threshold = Threshold(0.0);
    pub const ONE: Threshold = Threshold(1.0);

    pub fn new(t: f64) -> Result<Self> {
        check_unit("t", t).map(Self)
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Threshold {
    type Error = Error;
    fn try_from(t: f64) -> Result<Self> {
        Self::new(t)
    }
}

impl From<Threshold> for f64 {
    fn from(t: Threshold) -> f64 {
        t.0
    }
}

/// A measurement outcome: one of the `d` clicks or the no-click symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Click(usize),
    NoClick,
}

impl Outcome {
    /// Position of this outcome in a `d + 1` slot table, no-click last.
    #[inline]
    pub fn slot(self, d: usize) -> usize {
        match self {
            Outcome::Click(k) => k,
            Outcome::NoClick => d,
        }
    }

    pub fn from_slot(slot: usize, d: usize) -> Result<Self> {
        match slot.cmp(&d) {
            std::cmp::Ordering::Less => Ok(Outcome::Click(slot)),
            std::cmp::Ordering::Equal => Ok(Outcome::NoClick),
            std::cmp::Ordering::Greater => Err(Error::InvalidArgument(format!(
                "outcome slot {slot} out of range for d = {d}"
            ))),
        }
    }

    pub fn label(self) -> String {
        match self {
            Outcome::Click(k) => k.to_string(),
            Outcome::NoClick => "ø".to_string(),
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Unit vector in `C^d`; the outcome label of the covariant parent measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexUnitVector {
    amplitudes: Vec<Complex64>,
}

impl ComplexUnitVector {
    /// Wraps amplitudes that are already normalized.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::InvalidDimension(amplitudes.len()));
        }
        let norm_sq: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > tolerance::NORMALIZATION {
            return Err(Error::NotNormalized(norm_sq));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::InvalidDimension(amplitudes.len()));
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NotNormalized(norm * norm));
        }
        let inv = norm.recip();
        for z in &mut amplitudes {
            *z *= inv;
        }
        Ok(Self { amplitudes })
    }

    /// Computational basis vector `|k>`.
    pub fn basis(d: Dimension, k: usize) -> Result<Self> {
        if k >= d.get() {
            return Err(Error::InvalidArgument(format!(
                "basis index {k} >= d = {d}"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); d.get()];
        amplitudes[k] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    #[inline]
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// The squared moduli `|z_k|^2`, a point of the probability simplex.
    pub fn moduli_squared(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn to_dvector(&self) -> DVector<Complex64> {
        DVector::from_column_slice(&self.amplitudes)
    }
}

/// Square complex matrix: POVM elements, density operators and basis unitaries.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix(DMatrix<Complex64>);

impl OperatorMatrix {
    pub fn from_matrix(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        Ok(Self(m))
    }

    pub fn from_fn(d: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self(DMatrix::from_fn(d, d, f))
    }

    /// Row-major real entries.
    pub fn from_real_rows(d: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                found: entries.len(),
            });
        }
        Ok(Self::from_fn(d, |i, j| {
            Complex64::new(entries[i * d + j], 0.0)
        }))
    }

    pub fn identity(d: usize) -> Self {
        Self(DMatrix::identity(d, d))
    }

    pub fn zeros(d: usize) -> Self {
        Self(DMatrix::zeros(d, d))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let d = values.len();
        Self::from_fn(d, |i, j| {
            if i == j {
                Complex64::new(values[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Rank-one projector `|v><v|`.
    pub fn projector(v: &ComplexUnitVector) -> Self {
        let a = v.amplitudes();
        Self::from_fn(a.len(), |i, j| a[i] * a[j].conj())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    #[inline]
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self(self.0.map(|z| z * factor))
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()).map(|z| z * 0.5))
    }

    pub fn is_hermitian(&self) -> bool {
        self.max_abs_diff(&self.adjoint()) <= tolerance::HERMITIAN
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let mut values: Vec<f64> = SymmetricEigen::new(self.hermitian_part().0)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        values.sort_by(f64::total_cmp);
        values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.hermitian_eigenvalues()[0]
    }

    /// Positive semidefinite up to [`tolerance::PSD`], judged on the Hermitian part.
    pub fn is_psd(&self) -> bool {
        self.is_hermitian() && self.min_eigenvalue() >= -tolerance::PSD
    }

    /// Max deviation of `U U^dagger` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let product = Self(&self.0 * self.0.adjoint());
        product.max_abs_diff(&Self::identity(self.dim()))
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_defect() <= tolerance::IDENTITY
    }

    /// `<v| A |v>`.
    pub fn expectation(&self, v: &ComplexUnitVector) -> Complex64 {
        let a = v.amplitudes();
        let d = a.len();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..d {
            let mut row = Complex64::new(0.0, 0.0);
            for j in 0..d {
                row += self.0[(i, j)] * a[j];
            }
            acc += a[i].conj() * row;
        }
        acc
    }

    /// Applies the matrix to a vector.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let d = self.dim();
        (0..d)
            .map(|i| (0..d).map(|j| self.0[(i, j)] * v[j]).sum())
            .collect()
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix(&self.0 - &rhs.0)
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix(&self.0 * &rhs.0)
    }
}

/// One point `(t, eta, p)` on the boundary curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundarySample {
    pub t: Threshold,
    pub eta: f64,
    pub p: f64,
}

impl BoundarySample {
    pub fn params(&self) -> Result<NoiseParams> {
        NoiseParams::new(self.eta, self.p)
    }
}

/// Checks the POVM axioms: every element PSD and the elements summing to the identity.
///
/// Returns `Ok(false)` for a well-formed but invalid set and an error when the
/// elements do not share one dimension.
pub fn validate_povm(elements: &[OperatorMatrix]) -> Result<bool> {
    let Some(first) = elements.first() else {
        return Ok(false);
    };
    let d = first.dim();
    if let Some(bad) = elements.iter().find(|e| e.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: bad.dim(),
        });
    }
    if !elements.iter().all(OperatorMatrix::is_psd) {
        return Ok(false);
    }
    let total = elements
        .iter()
        .fold(OperatorMatrix::zeros(d), |acc, e| &acc + e);
    Ok(total.max_abs_diff(&OperatorMatrix::identity(d)) <= tolerance::IDENTITY)
}
