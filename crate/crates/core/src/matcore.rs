//! Dense complex-matrix kernel.
//!
//! [`CMatrix`] wraps a `nalgebra` dense matrix and is the carrier for every
//! operator in the crate. The free functions here ([`op_norm`],
//! [`eig_hermitian`], [`is_psd`], [`kron`]) are the numerical primitives the
//! algebra and channel modules are built on. Spectral decompositions go
//! through `faer`.
//!
//! Serialization follows the shared wire format: a complex scalar is a
//! two-element array `[re, im]` and a matrix is a row-major nested array of
//! such scalars.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Absolute/relative tolerance pair. A quantity passes when its magnitude is
/// at most `abs + rel * scale` for the scale relevant to the check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Result<Self> {
        let tol = Tolerance { abs, rel };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.abs.is_finite()
            && self.rel.is_finite()
            && self.abs >= 0.0
            && self.rel >= 0.0
            && (self.abs > 0.0 || self.rel > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidTolerance {
                abs: self.abs,
                rel: self.rel,
            })
        }
    }

    #[inline]
    pub fn threshold(&self, scale: f64) -> f64 {
        self.abs + self.rel * scale
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-9,
            rel: 1e-9,
        }
    }
}

/// Dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix(DMatrix<C64>);

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix(DMatrix::zeros(rows, cols))
    }

    pub fn identity(d: usize) -> Self {
        CMatrix(DMatrix::identity(d, d))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        CMatrix(DMatrix::from_fn(rows, cols, f))
    }

    /// Builds from row-major complex rows; rejects ragged, empty or non-finite input.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        if r == 0 {
            return Err(Error::InvalidMatrix("matrix has no rows".into()));
        }
        let c = rows[0].len();
        if c == 0 {
            return Err(Error::InvalidMatrix("matrix has no columns".into()));
        }
        if let Some(bad) = rows.iter().position(|row| row.len() != c) {
            return Err(Error::InvalidMatrix(format!(
                "row {bad} has {} entries, expected {c}",
                rows[bad].len()
            )));
        }
        let m = CMatrix(DMatrix::from_fn(r, c, |i, j| rows[i][j]));
        m.validate()?;
        Ok(m)
    }

    /// Real-valued convenience constructor, row-major.
    pub fn from_real(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let n = values.len();
        CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(values[i], 0.0)
            } else {
                ZERO
            }
        })
    }

    /// The matrix unit `|j><k|` in `M_d`.
    pub fn unit(d: usize, j: usize, k: usize) -> Self {
        let mut m = CMatrix::zeros(d, d);
        m.0[(j, k)] = ONE;
        m
    }

    pub fn from_dmatrix(m: DMatrix<C64>) -> Self {
        CMatrix(m)
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<C64> {
        self.0
    }

    /// Column-major vectorization; `vec(A)^† vec(B)` is the Hilbert-Schmidt product.
    pub fn to_vector(&self) -> DVector<C64> {
        DVector::from_column_slice(self.0.as_slice())
    }

    pub fn from_vector(rows: usize, cols: usize, v: &[C64]) -> Self {
        CMatrix(DMatrix::from_column_slice(rows, cols, v))
    }

    pub fn as_slice(&self) -> &[C64] {
        self.0.as_slice()
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.0[(i, j)] = v;
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows() == 0 || self.cols() == 0 {
            return Err(Error::InvalidMatrix("empty matrix".into()));
        }
        if !self.is_finite() {
            return Err(Error::InvalidMatrix("non-finite entry".into()));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        CMatrix(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        CMatrix(self.0.transpose())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn scale(&self, s: C64) -> Self {
        CMatrix(&self.0 * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: C64, other: &CMatrix) {
        self.0.zip_apply(&other.0, |a, b| *a += s * b);
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `tr(self^† other)`
    pub fn hs_inner(&self, other: &CMatrix) -> C64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn commutator(&self, other: &CMatrix) -> CMatrix {
        self * other - other * self
    }

    pub fn hermitian_part(&self) -> CMatrix {
        CMatrix((&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0))
    }

    /// Largest entry of `|H - H^†|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.rows();
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// Frobenius distance.
    pub fn dist(&self, other: &CMatrix) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Row-major nested copy of the entries.
    pub fn to_rows(&self) -> Vec<Vec<C64>> {
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.0[(i, j)]).collect())
            .collect()
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CMatrix{}x{}[", self.rows(), self.cols())?;
        for i in 0..self.rows() {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols() {
                let z = self.0[(i, j)];
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:.4}{:+.4}i", z.re, z.im)?;
            }
        }
        write!(f, "]")
    }
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident, $op:tt) => {
        impl $tr<&CMatrix> for &CMatrix {
            type Output = CMatrix;
            fn $m(self, rhs: &CMatrix) -> CMatrix {
                CMatrix(&self.0 $op &rhs.0)
            }
        }
        impl $tr<CMatrix> for CMatrix {
            type Output = CMatrix;
            fn $m(self, rhs: CMatrix) -> CMatrix {
                CMatrix(self.0 $op rhs.0)
            }
        }
        impl $tr<&CMatrix> for CMatrix {
            type Output = CMatrix;
            fn $m(self, rhs: &CMatrix) -> CMatrix {
                CMatrix(self.0 $op &rhs.0)
            }
        }
        impl $tr<CMatrix> for &CMatrix {
            type Output = CMatrix;
            fn $m(self, rhs: CMatrix) -> CMatrix {
                CMatrix(&self.0 $op rhs.0)
            }
        }
    };
}

forward_binop!(Add, add, +);
forward_binop!(Sub, sub, -);
forward_binop!(Mul, mul, *);

impl AddAssign<&CMatrix> for CMatrix {
    fn add_assign(&mut self, rhs: &CMatrix) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&CMatrix> for CMatrix {
    fn sub_assign(&mut self, rhs: &CMatrix) {
        self.0 -= &rhs.0;
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        CMatrix(-&self.0)
    }
}

impl Neg for CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        CMatrix(-self.0)
    }
}

impl Serialize for CMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.rows())
            .map(|i| {
                (0..self.cols())
                    .map(|j| {
                        let z = self.0[(i, j)];
                        [z.re, z.im]
                    })
                    .collect()
            })
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        let rows: Vec<Vec<C64>> = rows
            .into_iter()
            .map(|r| r.into_iter().map(|[re, im]| C64::new(re, im)).collect())
            .collect();
        CMatrix::from_rows(&rows).map_err(D::Error::custom)
    }
}

/// Largest singular value.
pub fn op_norm(a: &CMatrix) -> Result<f64> {
    a.validate()?;
    Ok(op_norm_unchecked(a))
}

pub(crate) fn op_norm_unchecked(a: &CMatrix) -> f64 {
    if a.0.iter().all(|z| *z == ZERO) {
        return 0.0;
    }
    match to_faer(&a.0).singular_values() {
        Ok(sv) => sv.into_iter().fold(0.0, f64::max),
        Err(_) => a.0.singular_values().iter().copied().fold(0.0, f64::max),
    }
}

fn to_faer(m: &DMatrix<C64>) -> faer::Mat<C64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Eigenpairs `(value, vector)` of a Hermitian matrix, unordered.
fn raw_eigenpairs(sym: &DMatrix<C64>) -> Vec<(f64, Vec<C64>)> {
    let n = sym.nrows();
    if let Ok(eig) = to_faer(sym).self_adjoint_eigen(faer::Side::Lower) {
        let (s, u) = (eig.S(), eig.U());
        return (0..n)
            .map(|i| (s[i].re, (0..n).map(|r| u[(r, i)]).collect()))
            .collect();
    }
    let eig = nalgebra::linalg::SymmetricEigen::new(sym.clone());
    (0..n)
        .map(|i| {
            (
                eig.eigenvalues[i],
                eig.eigenvectors.column(i).iter().copied().collect(),
            )
        })
        .collect()
}

/// Result of [`eig_hermitian`]: eigenvalues in descending order and the
/// matching orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, i: usize) -> DVector<C64> {
        self.vectors.0.column(i).into_owned()
    }

    pub fn reconstruct(&self) -> CMatrix {
        let n = self.values.len();
        let v = &self.vectors.0;
        let d = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(self.values[i], 0.0)
            } else {
                ZERO
            }
        });
        CMatrix(v * d * v.adjoint())
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }
}

fn check_hermitian(h: &CMatrix, tol: &Tolerance) -> Result<()> {
    h.validate()?;
    if !h.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "expected a square matrix, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    let deviation = h.hermitian_deviation();
    if deviation > tol.threshold(h.max_abs()) {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix.
///
/// The input is symmetrized before decomposition. Eigenvalues come out in
/// descending order; within a numerically degenerate run the eigenvectors are
/// ordered lexicographically after fixing each vector's phase (largest
/// component real and positive), so repeated calls give identical output.
pub fn eig_hermitian(h: &CMatrix, tol: &Tolerance) -> Result<HermitianEigen> {
    check_hermitian(h, tol)?;
    Ok(eig_hermitian_unchecked(h))
}

pub(crate) fn eig_hermitian_unchecked(h: &CMatrix) -> HermitianEigen {
    let n = h.rows();
    let sym = h.hermitian_part();
    let mut cols = raw_eigenpairs(&sym.0);
    for (_, v) in &mut cols {
        fix_phase(v);
    }
    cols.sort_by(|a, b| b.0.total_cmp(&a.0));

    let scale = cols.iter().map(|c| c.0.abs()).fold(1.0, f64::max);
    let tie = 1e-12 * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (cols[end - 1].0 - cols[end].0).abs() <= tie {
            end += 1;
        }
        if end - start > 1 {
            cols[start..end].sort_by(|a, b| lex_cmp(&a.1, &b.1));
        }
        start = end;
    }

    let values = cols.iter().map(|c| c.0).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| cols[j].1[i]);
    HermitianEigen { values, vectors }
}

fn fix_phase(v: &mut [C64]) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-9))
        .unwrap_or(0);
    let phase = v[pivot].conj() / v[pivot].norm();
    for z in v.iter_mut() {
        *z *= phase;
    }
}

fn lex_cmp(a: &[C64], b: &[C64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(h: &CMatrix, tol: &Tolerance) -> Result<f64> {
    Ok(eig_hermitian(h, tol)?.min())
}

/// Positive semidefiniteness: the smallest eigenvalue is at least
/// `-(abs + rel * ||H||)`.
pub fn is_psd(h: &CMatrix, tol: &Tolerance) -> Result<bool> {
    let eig = eig_hermitian(h, tol)?;
    Ok(psd_from_eigen(&eig, tol))
}

pub(crate) fn psd_from_eigen(eig: &HermitianEigen, tol: &Tolerance) -> bool {
    let norm = eig.max().abs().max(eig.min().abs());
    eig.min() >= -tol.threshold(norm)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    CMatrix(a.0.kronecker(&b.0))
}

/// Kronecker product of a list of factors, leftmost most significant.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a CMatrix>) -> CMatrix {
    let mut it = factors.into_iter();
    let first = it.next().cloned().unwrap_or_else(|| CMatrix::identity(1));
    it.fold(first, |acc, f| kron(&acc, f))
}

/// Pauli matrices, used throughout tests and presets.
pub mod pauli {
    use super::*;

    pub fn x() -> CMatrix {
        CMatrix::from_real(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
    }

    pub fn y() -> CMatrix {
        CMatrix::from_rows(&[vec![ZERO, -I], vec![I, ZERO]]).unwrap()
    }

    pub fn z() -> CMatrix {
        CMatrix::diag_real(&[1.0, -1.0])
    }
}
