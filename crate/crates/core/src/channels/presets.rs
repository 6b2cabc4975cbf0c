//! Standard maps used by tests, examples and the CLI.

use super::{KrausSet, LinMap};
use crate::error::{Error, Result};
use crate::matcore::{kron, CMatrix, Tolerance};
use crate::staralg::{MatrixUnits, StarAlgebra};

/// `A ↦ A^T` on `M_d`. Positive but not completely positive for `d ≥ 2`.
pub fn transpose(d: usize) -> LinMap {
    LinMap::from_fn(StarAlgebra::full(d), d, |b| b.transpose()).expect("shapes agree")
}

/// `A ↦ (tr A / d) I` on `M_d`.
pub fn depolarizing(d: usize) -> LinMap {
    LinMap::from_fn(StarAlgebra::full(d), d, |b| {
        CMatrix::identity(d).scale(b.trace() / d as f64)
    })
    .expect("shapes agree")
}

pub fn identity(d: usize) -> LinMap {
    LinMap::identity(StarAlgebra::full(d))
}

/// `A ↦ Σ K^† A K` on the full matrix algebra.
pub fn kraus_map(kraus: &KrausSet) -> Result<LinMap> {
    let n = kraus.in_dim();
    LinMap::from_fn(StarAlgebra::full(n), kraus.out_dim(), |b| kraus.apply(b))
}

/// `A ↦ U^† A U`, the single-Kraus map with `K = U`.
pub fn unitary_conjugation(u: &CMatrix, tol: &Tolerance) -> Result<LinMap> {
    let d = u.rows();
    if !u.is_square() {
        return Err(Error::ShapeMismatch("unitary must be square".into()));
    }
    let residual = (u.adjoint() * u).dist(&CMatrix::identity(d));
    if residual > tol.threshold(1.0) {
        return Err(Error::PreconditionFailure(format!(
            "not unitary within tol (|U^†U - I| = {residual:.3e})"
        )));
    }
    LinMap::from_fn(StarAlgebra::full(d), d, |b| u.adjoint() * b * u)
}

/// `transpose ⊗ id` on `M_a ⊗ M_b`.
pub fn partial_transpose(a: usize, b: usize) -> LinMap {
    let d = a * b;
    LinMap::from_fn(StarAlgebra::full(d), d, |x| {
        CMatrix::from_fn(d, d, |r, c| {
            let (i, k) = (r / b, r % b);
            let (j, l) = (c / b, c % b);
            x.get(j * b + k, i * b + l)
        })
    })
    .expect("shapes agree")
}

/// Carries a map `t` on `M_p` over to the factor spanned by `units`
/// (`E_jk ↔ e_jk`), producing a map of `domain` into itself.
pub fn transport(
    t: &LinMap,
    units: &MatrixUnits,
    domain: &StarAlgebra,
    tol: &Tolerance,
) -> Result<LinMap> {
    let p = units.n;
    if t.domain().ambient_dim() != p || t.domain().dim() != p * p || t.codomain_dim() != p {
        return Err(Error::UnitsMismatch(format!(
            "map acts on M_{} but the units have size {p}",
            t.domain().ambient_dim()
        )));
    }
    if !units.spans(domain) {
        return Err(Error::UnitsMismatch(
            "units do not span the target algebra".into(),
        ));
    }
    let images = domain
        .basis()
        .iter()
        .map(|b| {
            let coords = units.coordinates(b);
            t.apply(&coords, tol).map(|img| units.embed(&img))
        })
        .collect::<Result<Vec<_>>>()?;
    LinMap::new(domain.clone(), domain.ambient_dim(), images)
}

/// The maximally entangled projector on `C^d ⊗ C^d`.
pub fn max_entangled_projector(d: usize) -> CMatrix {
    let mut omega = CMatrix::zeros(d * d, 1);
    for j in 0..d {
        omega.set(j * d + j, 0, crate::matcore::ONE);
    }
    (&omega * omega.adjoint()).scale_real(1.0 / d as f64)
}

/// `u ⊗ I_m`.
pub fn local_unitary(u: &CMatrix, m: usize) -> CMatrix {
    kron(u, &CMatrix::identity(m))
}
