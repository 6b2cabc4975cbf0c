//! Finite-dimensional *-algebras of matrices.
//!
//! A [`StarAlgebra`] is a unital, adjoint-closed, multiplication-closed
//! subspace of `M_d`, stored as a Hilbert-Schmidt orthonormal basis. Every
//! algebra here contains the ambient identity; generated algebras get `I`
//! adjoined.
//!
//! Finite-dimensional factors are always type I, and no finite-dimensional
//! algebra is properly infinite. Where an infinite-dimensional argument needs
//! "n mutually orthogonal equivalent projections", [`matrix_units`] takes `n`
//! explicitly and fails with [`Error::NotEnoughProjections`] when the algebra
//! cannot supply them.

mod independence;
mod structure;

use nalgebra::{DMatrix, DVector};

use crate::channels::LinMap;
use crate::error::{Error, Result};
use crate::matcore::{eig_hermitian_unchecked, kron, CMatrix, Tolerance, C64, ONE};

pub use independence::{
    max_commutator, norm_multiplicativity_check, product_rank, schlieder_independent, split_via,
    zero_divisor_witness,
};
pub(crate) use structure::decompose;
pub use structure::{block_structure, matrix_units, BlockStructure, MatrixUnits};

/// Relative drop threshold for span orthonormalization.
const SPAN_DROP: f64 = 1e-10;

/// A unital *-subalgebra of `M_d` with a Hilbert-Schmidt orthonormal basis.
#[derive(Clone)]
pub struct StarAlgebra {
    ambient_dim: usize,
    basis: Vec<CMatrix>,
    /// `d^2 x dim` matrix whose columns are the vectorized basis elements.
    frame: DMatrix<C64>,
}

impl std::fmt::Debug for StarAlgebra {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StarAlgebra")
            .field("ambient_dim", &self.ambient_dim)
            .field("dim", &self.basis.len())
            .finish()
    }
}

/// Incremental Gram-Schmidt over vectorized matrices.
struct SpanBuilder {
    d: usize,
    vecs: Vec<DVector<C64>>,
}

impl SpanBuilder {
    fn new(d: usize) -> Self {
        SpanBuilder {
            d,
            vecs: Vec::new(),
        }
    }

    /// Adds `m` if it is not already in the span; returns whether it was added.
    fn push(&mut self, m: &CMatrix) -> bool {
        let v = m.to_vector();
        let norm = v.norm();
        if norm == 0.0 {
            return false;
        }
        let mut r = v;
        // Two passes of classical Gram-Schmidt keep the basis orthonormal to
        // working precision.
        for _ in 0..2 {
            for q in &self.vecs {
                let c = q.dotc(&r);
                r.axpy(-c, q, ONE);
            }
        }
        let rn = r.norm();
        if rn <= SPAN_DROP * norm {
            return false;
        }
        r.unscale_mut(rn);
        self.vecs.push(r);
        true
    }

    fn len(&self) -> usize {
        self.vecs.len()
    }

    fn matrix(&self, i: usize) -> CMatrix {
        CMatrix::from_vector(self.d, self.d, self.vecs[i].as_slice())
    }

    fn finish(self) -> StarAlgebra {
        let d = self.d;
        let basis: Vec<CMatrix> = self
            .vecs
            .iter()
            .map(|v| CMatrix::from_vector(d, d, v.as_slice()))
            .collect();
        StarAlgebra::from_parts(d, basis)
    }
}

fn check_square(m: &CMatrix, d: usize) -> Result<()> {
    m.validate()?;
    if m.rows() != d || m.cols() != d {
        return Err(Error::ShapeMismatch(format!(
            "expected {d}x{d}, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

impl StarAlgebra {
    fn from_parts(ambient_dim: usize, basis: Vec<CMatrix>) -> Self {
        let n2 = ambient_dim * ambient_dim;
        let mut frame = DMatrix::zeros(n2, basis.len());
        for (k, b) in basis.iter().enumerate() {
            frame.column_mut(k).copy_from_slice(b.as_slice());
        }
        StarAlgebra {
            ambient_dim,
            basis,
            frame,
        }
    }

    /// Wraps a basis the caller already knows to be HS-orthonormal and to span
    /// a unital *-algebra. Orthonormality is checked; closure is not.
    pub fn from_orthonormal_basis(ambient_dim: usize, basis: Vec<CMatrix>) -> Result<Self> {
        if ambient_dim == 0 || basis.is_empty() {
            return Err(Error::InvalidMatrix("empty algebra".into()));
        }
        for b in &basis {
            check_square(b, ambient_dim)?;
        }
        let alg = Self::from_parts(ambient_dim, basis);
        let gram = alg.frame.adjoint() * &alg.frame;
        let dev = (gram - DMatrix::<C64>::identity(alg.dim(), alg.dim()))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if dev > 1e-10 {
            return Err(Error::InvalidMatrix(format!(
                "basis is not HS-orthonormal (deviation {dev:.3e})"
            )));
        }
        Ok(alg)
    }

    /// `C I` inside `M_d`.
    pub fn scalars(d: usize) -> Self {
        let b = CMatrix::identity(d).scale_real(1.0 / (d as f64).sqrt());
        Self::from_parts(d, vec![b])
    }

    /// All of `M_d`, with the standard matrix units as basis.
    pub fn full(d: usize) -> Self {
        let mut basis = Vec::with_capacity(d * d);
        for j in 0..d {
            for k in 0..d {
                basis.push(CMatrix::unit(d, j, k));
            }
        }
        Self::from_parts(d, basis)
    }

    /// The diagonal (maximal abelian) subalgebra of `M_d`.
    pub fn diagonal(d: usize) -> Self {
        Self::from_parts(d, (0..d).map(|j| CMatrix::unit(d, j, j)).collect())
    }

    /// Operators acting on the listed tensor factors of `(C^k)^{⊗ num_sites}`
    /// and as the identity elsewhere. Site 0 is the most significant factor.
    pub fn tensor_factor(num_sites: usize, site_dim: usize, sites: &[usize]) -> Result<Self> {
        if site_dim == 0 {
            return Err(Error::InvalidMatrix(
                "site dimension must be positive".into(),
            ));
        }
        let mut sites = sites.to_vec();
        sites.sort_unstable();
        sites.dedup();
        if let Some(&s) = sites.iter().find(|&&s| s >= num_sites) {
            return Err(Error::RegionOutOfBounds { site: s, num_sites });
        }
        let d = site_dim
            .checked_pow(num_sites as u32)
            .ok_or_else(|| Error::InvalidMatrix("ambient dimension overflows".into()))?;
        let k = site_dim;
        let inside = |s: usize| sites.binary_search(&s).is_ok();
        let rest = num_sites - sites.len();
        let norm = 1.0 / ((k as f64).powi(rest as i32)).sqrt();
        let count = k.pow(2 * sites.len() as u32);
        let id = CMatrix::identity(k);
        let mut basis = Vec::with_capacity(count);
        for mut idx in 0..count {
            // Decode (a_s, b_s) pairs, last listed site fastest.
            let mut pairs = vec![(0usize, 0usize); sites.len()];
            for p in pairs.iter_mut().rev() {
                let b = idx % k;
                idx /= k;
                let a = idx % k;
                idx /= k;
                *p = (a, b);
            }
            let mut pos = 0;
            let mut m = CMatrix::identity(1);
            for s in 0..num_sites {
                let f = if inside(s) {
                    let (a, b) = pairs[pos];
                    pos += 1;
                    CMatrix::unit(k, a, b)
                } else {
                    id.clone()
                };
                m = kron(&m, &f);
            }
            basis.push(m.scale_real(norm));
        }
        Ok(Self::from_parts(d, basis))
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    /// Hilbert-Schmidt coefficients of `a` against the basis.
    pub fn coefficients(&self, a: &CMatrix) -> DVector<C64> {
        let v = DVector::from_column_slice(a.as_slice());
        self.frame.adjoint() * v
    }

    /// Hilbert-Schmidt orthogonal projection onto the algebra.
    pub fn project(&self, a: &CMatrix) -> CMatrix {
        let c = self.coefficients(a);
        let v = &self.frame * c;
        CMatrix::from_vector(self.ambient_dim, self.ambient_dim, v.as_slice())
    }

    /// Frobenius distance from `a` to the algebra.
    pub fn residual(&self, a: &CMatrix) -> f64 {
        a.dist(&self.project(a))
    }

    pub fn contains(&self, a: &CMatrix, tol: &Tolerance) -> bool {
        a.rows() == self.ambient_dim
            && a.cols() == self.ambient_dim
            && self.residual(a) <= tol.threshold(a.frobenius_norm())
    }

    /// Largest span residual of `other`'s (unit-norm) basis against `self`.
    pub fn inclusion_residual(&self, other: &StarAlgebra) -> f64 {
        if other.ambient_dim != self.ambient_dim {
            return f64::INFINITY;
        }
        let proj = self.frame.adjoint() * &other.frame;
        let kept = &self.frame * proj;
        (&other.frame - kept)
            .column_iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    /// `other ⊆ self` within `tol`.
    pub fn includes(&self, other: &StarAlgebra, tol: &Tolerance) -> bool {
        self.inclusion_residual(other) <= tol.threshold(1.0)
    }

    /// Equal spans within `tol`.
    pub fn same_span(&self, other: &StarAlgebra, tol: &Tolerance) -> bool {
        self.dim() == other.dim() && self.includes(other, tol) && other.includes(self, tol)
    }

    /// Closure residuals `(adjoint, product, unit)`: how far `b^†`, `b_i b_j`
    /// and `I` are from the span. Quadratic in the dimension; meant for tests
    /// and diagnostics.
    pub fn closure_residuals(&self) -> (f64, f64, f64) {
        let adj = self
            .basis
            .iter()
            .map(|b| self.residual(&b.adjoint()))
            .fold(0.0, f64::max);
        let mut prod = 0.0f64;
        for a in &self.basis {
            for b in &self.basis {
                prod = prod.max(self.residual(&(a * b)));
            }
        }
        let unit =
            self.residual(&CMatrix::identity(self.ambient_dim)) / (self.ambient_dim as f64).sqrt();
        (adj, prod, unit)
    }
}

/// The smallest unital *-algebra containing the generators.
///
/// Starts from `span{I, g, g^†}` and closes under left multiplication by the
/// generators and their adjoints until the dimension is stable. The span of
/// all words in the generators is exactly the generated algebra, and a span
/// containing `I` and closed under left multiplication by each letter contains
/// every word.
pub fn generate(generators: &[CMatrix], d: usize, tol: &Tolerance) -> Result<StarAlgebra> {
    tol.validate()?;
    if d == 0 {
        return Err(Error::InvalidMatrix(
            "ambient dimension must be positive".into(),
        ));
    }
    for g in generators {
        check_square(g, d)?;
    }
    let mut span = SpanBuilder::new(d);
    span.push(&CMatrix::identity(d));

    // Multipliers: generators and adjoints, skipping ones already spanned.
    let mut letters = SpanBuilder::new(d);
    let mut multipliers = Vec::new();
    for g in generators {
        for m in [g.clone(), g.adjoint()] {
            if letters.push(&m) {
                multipliers.push(m.clone());
            }
            span.push(&m);
        }
    }

    let mut next = 0;
    while next < span.len() {
        let x = span.matrix(next);
        next += 1;
        for g in &multipliers {
            span.push(&(g * &x));
        }
        if span.len() > d * d {
            return Err(Error::Internal(format!(
                "generated algebra dimension {} exceeds d^2 = {}",
                span.len(),
                d * d
            )));
        }
    }
    Ok(span.finish())
}

/// Algebra generated by the union of two algebras.
pub fn join(a: &StarAlgebra, b: &StarAlgebra, tol: &Tolerance) -> Result<StarAlgebra> {
    if a.ambient_dim != b.ambient_dim {
        return Err(Error::ShapeMismatch(
            "algebras live in different ambient spaces".into(),
        ));
    }
    let gens: Vec<CMatrix> = a.basis.iter().chain(b.basis.iter()).cloned().collect();
    generate(&gens, a.ambient_dim, tol)
}

/// `{X : X b = b X for every basis element b}`.
///
/// Solved as the null space of the Gram matrix `G = Σ_b L_b^† L_b` of the
/// commutator superoperators `L_b X = bX - Xb`. With column-major
/// vectorization `L_b = I⊗b - b^T⊗I`, so
/// `G = I⊗S₁ + S₂⊗I - (M + M^†)` where `S₁ = Σ b^†b`, `S₂ = conj(Σ b b^†)` and
/// `M = Σ conj(b)⊗b`; this avoids ever forming the stacked system.
pub fn commutant(alg: &StarAlgebra) -> StarAlgebra {
    let d = alg.ambient_dim;
    if alg.dim() == d * d {
        return StarAlgebra::scalars(d);
    }
    let mut s1 = CMatrix::zeros(d, d);
    let mut s2 = CMatrix::zeros(d, d);
    let mut m = DMatrix::<C64>::zeros(d * d, d * d);
    for b in &alg.basis {
        s1 += &(b.adjoint() * b);
        s2 += &(b * b.adjoint());
        let bc = b.as_dmatrix().map(|z| z.conj());
        m += bc.kronecker(b.as_dmatrix());
    }
    let s2 = CMatrix::from_dmatrix(s2.as_dmatrix().map(|z| z.conj()));
    let id = DMatrix::<C64>::identity(d, d);
    let g = id.kronecker(s1.as_dmatrix()) + s2.as_dmatrix().kronecker(&id) - &m - m.adjoint();
    let eig = eig_hermitian_unchecked(&CMatrix::from_dmatrix(g));
    let cut = 1e-8 * eig.max().abs().max(1.0);
    let basis: Vec<CMatrix> = (0..d * d)
        .rev()
        .filter(|&i| eig.values[i] <= cut)
        .map(|i| {
            let v = eig.vector(i);
            CMatrix::from_vector(d, d, v.as_slice())
        })
        .collect();
    canonical(d, basis)
}

/// Re-express an orthonormal basis deterministically: orthonormalize the HS
/// projections of the standard matrix units, in order. The span is unchanged.
fn canonical(d: usize, basis: Vec<CMatrix>) -> StarAlgebra {
    let raw = StarAlgebra::from_parts(d, basis);
    let mut span = SpanBuilder::new(d);
    // Identity first so that scalar algebras come out as I/sqrt(d).
    span.push(&raw.project(&CMatrix::identity(d)));
    for j in 0..d {
        for k in 0..d {
            if span.len() == raw.dim() {
                break;
            }
            span.push(&raw.project(&CMatrix::unit(d, j, k)));
        }
    }
    // Fall back to the raw vectors if the unit projections were degenerate.
    for b in raw.basis() {
        if span.len() == raw.dim() {
            break;
        }
        span.push(b);
    }
    span.finish()
}

/// `a ∩ b`, from the eigenvalue-2 eigenspace of `P_a + P_b`.
pub fn intersect(a: &StarAlgebra, b: &StarAlgebra) -> Result<StarAlgebra> {
    if a.ambient_dim != b.ambient_dim {
        return Err(Error::ShapeMismatch(
            "algebras live in different ambient spaces".into(),
        ));
    }
    let d = a.ambient_dim;
    if a.dim() == d * d || b.dim() == 1 {
        return Ok(b.clone());
    }
    if b.dim() == d * d || a.dim() == 1 {
        return Ok(a.clone());
    }
    let p = &a.frame * a.frame.adjoint() + &b.frame * b.frame.adjoint();
    let eig = eig_hermitian_unchecked(&CMatrix::from_dmatrix(p));
    let basis: Vec<CMatrix> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &l)| l >= 2.0 - 1e-8)
        .map(|(i, _)| CMatrix::from_vector(d, d, eig.vector(i).as_slice()))
        .collect();
    if basis.is_empty() {
        return Err(Error::Internal("intersection lost the identity".into()));
    }
    Ok(canonical(d, basis))
}

pub fn center(alg: &StarAlgebra) -> StarAlgebra {
    // Both contain I, so the intersection is never empty.
    intersect(alg, &commutant(alg)).expect("center contains the identity")
}

pub fn is_factor(alg: &StarAlgebra) -> bool {
    center(alg).dim() == 1
}

/// The Hilbert-Schmidt orthogonal projection of `ambient` onto `sub`.
///
/// This is the trace-preserving conditional expectation: unital, idempotent,
/// completely positive and `sub`-bimodular.
pub fn conditional_expectation(sub: &StarAlgebra, ambient: &StarAlgebra) -> Result<LinMap> {
    let residual = ambient.inclusion_residual(sub);
    if residual > 1e-8 {
        return Err(Error::NotSubalgebra { residual });
    }
    let images = ambient.basis.iter().map(|b| sub.project(b)).collect();
    LinMap::new(ambient.clone(), ambient.ambient_dim, images)
}
