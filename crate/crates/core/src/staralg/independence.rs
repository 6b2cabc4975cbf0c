//! Independence of commuting algebras: Schlieder (no zero divisors across the
//! pair), norm multiplicativity, and the split property.

use nalgebra::DMatrix;

use super::{decompose, is_factor, StarAlgebra};
use crate::error::{Error, Result};
use crate::matcore::{op_norm_unchecked, CMatrix, Tolerance, C64};
use crate::random;

/// Largest operator norm of `[b1, b2]` over basis pairs.
pub fn max_commutator(a1: &StarAlgebra, a2: &StarAlgebra) -> f64 {
    let mut worst = 0.0f64;
    for b1 in a1.basis() {
        for b2 in a2.basis() {
            let c = b1.commutator(b2);
            if c.max_abs() > 0.0 {
                worst = worst.max(op_norm_unchecked(&c));
            }
        }
    }
    worst
}

fn require_commuting(a1: &StarAlgebra, a2: &StarAlgebra, tol: &Tolerance) -> Result<()> {
    if a1.ambient_dim() != a2.ambient_dim() {
        return Err(Error::ShapeMismatch(
            "algebras live in different ambient spaces".into(),
        ));
    }
    let max_commutator = max_commutator(a1, a2);
    if max_commutator > tol.threshold(1.0) {
        return Err(Error::CommutationFailure { max_commutator });
    }
    Ok(())
}

/// `(rank, dim(a1)·dim(a2))` for the products `b_i c_j` of basis elements.
pub fn product_rank(a1: &StarAlgebra, a2: &StarAlgebra) -> (usize, usize) {
    let expected = a1.dim() * a2.dim();
    let len = a1.ambient_dim() * a1.ambient_dim();
    let mut m = DMatrix::<C64>::zeros(len, expected);
    let mut col = 0;
    for b in a1.basis() {
        for c in a2.basis() {
            m.column_mut(col).copy_from_slice((b * c).as_slice());
            col += 1;
        }
    }
    // Thin SVD needs rows >= cols to be cheap; the Gram form works either way.
    let gram = CMatrix::from_dmatrix(m.adjoint() * &m);
    let eig = crate::matcore::eig_hermitian_unchecked(&gram);
    let max = eig.max().max(0.0);
    let rank = eig
        .values
        .iter()
        .filter(|&&l| l > 1e-18_f64.max(1e-12 * max))
        .count();
    (rank, expected)
}

/// Schlieder independence of commuting algebras, decided by the rank of the
/// product map `a₁ ⊗ a₂ → a₁a₂`. The product map is a *-homomorphism on the
/// algebraic tensor product; its kernel is an ideal, hence generated by a
/// product of minimal central projections, so injectivity is equivalent to
/// the absence of zero divisors.
pub fn schlieder_independent(a1: &StarAlgebra, a2: &StarAlgebra, tol: &Tolerance) -> Result<bool> {
    require_commuting(a1, a2, tol)?;
    let expected = a1.dim() * a2.dim();
    if expected > a1.ambient_dim() * a1.ambient_dim() {
        return Ok(false);
    }
    let (rank, expected) = product_rank(a1, a2);
    Ok(rank == expected)
}

/// A pair of nonzero projections `(P₁, P₂)`, `Pᵢ ∈ aᵢ`, with `P₁P₂ = 0`, or
/// `None` when the algebras are Schlieder independent.
///
/// If `A₁A₂ = 0` then the supports satisfy `s(A₁)s(A₂) = 0`, and shrinking to
/// minimal projections and moving them by partial isometries (which commute
/// with the other algebra) lands on a pair of minimal central projections;
/// searching those pairs is therefore complete.
pub fn zero_divisor_witness(
    a1: &StarAlgebra,
    a2: &StarAlgebra,
    tol: &Tolerance,
) -> Result<Option<(CMatrix, CMatrix)>> {
    require_commuting(a1, a2, tol)?;
    let z1 = decompose(a1)?;
    let z2 = decompose(a2)?;
    for p in &z1 {
        for q in &z2 {
            let prod = &p.projection * &q.projection;
            if op_norm_unchecked(&prod) <= tol.threshold(1.0) {
                return Ok(Some((p.projection.clone(), q.projection.clone())));
            }
        }
    }
    Ok(None)
}

/// Maximum over `samples` random pairs of
/// `| ||A₁A₂|| - ||A₁|| ||A₂|| | / (||A₁|| ||A₂||)`. Deterministic in `seed`.
pub fn norm_multiplicativity_check(
    a1: &StarAlgebra,
    a2: &StarAlgebra,
    samples: usize,
    seed: u64,
    tol: &Tolerance,
) -> Result<f64> {
    require_commuting(a1, a2, tol)?;
    let mut rng = random::rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let x = random::element(a1, &mut rng);
        let y = random::element(a2, &mut rng);
        let nx = op_norm_unchecked(&x);
        let ny = op_norm_unchecked(&y);
        if nx == 0.0 || ny == 0.0 {
            continue;
        }
        let nxy = op_norm_unchecked(&(&x * &y));
        worst = worst.max((nxy - nx * ny).abs() / (nx * ny));
    }
    Ok(worst)
}

/// `a1 ⊆ m ⊆ a2'` with `m` a factor. Finite-dimensional factors are type I,
/// so this is the split property witnessed by `m`.
pub fn split_via(a1: &StarAlgebra, a2: &StarAlgebra, m: &StarAlgebra, tol: &Tolerance) -> bool {
    if a1.ambient_dim() != m.ambient_dim() || a2.ambient_dim() != m.ambient_dim() {
        return false;
    }
    m.includes(a1, tol) && max_commutator(m, a2) <= tol.threshold(1.0) && is_factor(m)
}
