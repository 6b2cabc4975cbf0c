use serde::Serialize;

use super::{cp_check, KrausSet, LinMap};
use crate::error::{Error, Result};
use crate::matcore::{CMatrix, Tolerance};
use crate::staralg::{is_factor, join, matrix_units, max_commutator, StarAlgebra};

/// `(T ∘ E) ⊗ Id` across the split `M_d ≅ m ⊗ m'`, without checking that `T`
/// is CP or unital. Applied to a positive non-CP map this produces the
/// canonical extension candidate, which then fails to be positive.
///
/// With `f_ab` matrix units of `m`, every `X` decomposes uniquely as
/// `X = Σ f_ab Y_ab` with `Y_ab = Σ_c f_ca X f_bc ∈ m'`, and the extension is
/// `X ↦ Σ T(E(f_ab)) Y_ab`.
pub fn extension_candidate(
    t: &LinMap,
    n2: &StarAlgebra,
    m: &StarAlgebra,
    tol: &Tolerance,
) -> Result<LinMap> {
    let n1 = t.domain();
    let d = n1.ambient_dim();
    if n2.ambient_dim() != d || m.ambient_dim() != d || t.codomain_dim() != d {
        return Err(Error::ShapeMismatch(
            "algebras and map must share one ambient space".into(),
        ));
    }
    if !is_factor(m) {
        return Err(Error::NotFactor {
            center_dim: crate::staralg::center(m).dim(),
        });
    }
    if !m.includes(n1, tol) {
        return Err(Error::PreconditionFailure(format!(
            "N1 ⊄ m (residual {:.3e})",
            m.inclusion_residual(n1)
        )));
    }
    let comm = max_commutator(m, n2);
    if comm > tol.threshold(1.0) {
        return Err(Error::PreconditionFailure(format!(
            "m ⊄ N2' (max commutator {comm:.3e})"
        )));
    }
    for img in t.images() {
        let r = n1.residual(img);
        if r > tol.threshold(img.frobenius_norm()) {
            return Err(Error::PreconditionFailure(format!(
                "T(N1) ⊄ N1 (residual {r:.3e})"
            )));
        }
    }

    let p = (m.dim() as f64).sqrt().round() as usize;
    let f = matrix_units(m, p)?;
    let mut t_ab = Vec::with_capacity(p * p);
    for a in 0..p {
        for b in 0..p {
            t_ab.push(t.apply(&n1.project(f.unit(a, b)), tol)?);
        }
    }
    let extend = |x: &CMatrix| {
        let mut out = CMatrix::zeros(d, d);
        for a in 0..p {
            for b in 0..p {
                let mut y = CMatrix::zeros(d, d);
                for c in 0..p {
                    y += &(f.unit(c, a) * x * f.unit(b, c));
                }
                out += &(&t_ab[a * p + b] * &y);
            }
        }
        out
    };
    let domain = join(n1, n2, tol)?;
    LinMap::from_fn(domain, d, extend)
}

/// Extension of a unital CP map `T` on `N1` to `N1 ∨ N2` that acts as the
/// identity on `N2`, built through the interpolating factor `m`
/// (`N1 ⊆ m ⊆ N2'`).
pub fn extend_local(
    t: &LinMap,
    n2: &StarAlgebra,
    m: &StarAlgebra,
    tol: &Tolerance,
) -> Result<LinMap> {
    let d = t.domain().ambient_dim();
    if t.codomain_dim() != d {
        return Err(Error::ShapeMismatch(
            "map must land in the ambient algebra".into(),
        ));
    }
    let residual = t.unital_residual(tol)?;
    if residual > tol.threshold(1.0) {
        return Err(Error::NotUnital { residual });
    }
    let cp = cp_check(t, tol)?;
    if !cp.completely_positive {
        return Err(Error::NotCompletelyPositive {
            min_eigenvalue: cp.min_eigenvalue,
        });
    }
    extension_candidate(t, n2, m, tol)
}

fn identity_on(tp: &LinMap, n2: &StarAlgebra, tol: &Tolerance) -> Result<f64> {
    let mut worst = 0.0f64;
    for b in n2.basis() {
        worst = worst.max(tp.apply(b, tol)?.dist(b));
    }
    Ok(worst)
}

/// `max ||T'(a b) - T'(a) b||` over basis pairs `a ∈ N1`, `b ∈ N2`, for a map
/// that fixes `N2`. Positivity forces this to vanish.
pub fn werner_factorization_check(
    tp: &LinMap,
    n1: &StarAlgebra,
    n2: &StarAlgebra,
    tol: &Tolerance,
) -> Result<f64> {
    let residual = identity_on(tp, n2, tol)?;
    if residual > tol.threshold(1.0) {
        return Err(Error::IdentityOnN2Violated { residual });
    }
    let mut worst = 0.0f64;
    for a in n1.basis() {
        let ta = tp.apply(a, tol)?;
        for b in n2.basis() {
            let lhs = tp.apply(&(a * b), tol)?;
            worst = worst.max(lhs.dist(&(&ta * b)));
        }
    }
    Ok(worst)
}

/// Every Kraus operator lies in `n1`.
pub fn is_absolutely_local(kraus: &KrausSet, n1: &StarAlgebra, tol: &Tolerance) -> bool {
    kraus.in_dim == n1.ambient_dim()
        && kraus.out_dim == n1.ambient_dim()
        && kraus
            .operators
            .iter()
            .all(|k| n1.residual(k) <= tol.threshold(k.frobenius_norm()))
}

/// The individual conditions behind [`relatively_local_check`].
#[derive(Debug, Clone, Serialize)]
pub struct RelativeLocality {
    pub completely_positive: bool,
    pub unital_residual: f64,
    /// `max dist(T(b), N1)` over the basis of `N1`.
    pub n1_residual: f64,
    /// `max ||T(b) - b||` over the basis of `N2`.
    pub n2_residual: f64,
    pub relatively_local: bool,
}

/// Whether `T` is a relatively local operation in `n1` with respect to `n2`:
/// CP, unital, `T(N1) ⊆ N1` and `T = Id` on `N2`.
pub fn relatively_local_check(
    t: &LinMap,
    n1: &StarAlgebra,
    n2: &StarAlgebra,
    tol: &Tolerance,
) -> Result<RelativeLocality> {
    let d = t.domain().ambient_dim();
    if n1.ambient_dim() != d || n2.ambient_dim() != d || t.codomain_dim() != d {
        return Err(Error::ShapeMismatch(
            "algebras and map must share one ambient space".into(),
        ));
    }
    let cp = cp_check(t, tol)?;
    let unital_residual = t.unital_residual(tol)?;
    let mut n1_residual = 0.0f64;
    for b in n1.basis() {
        n1_residual = n1_residual.max(n1.residual(&t.apply(b, tol)?));
    }
    let n2_residual = identity_on(t, n2, tol)?;
    let bound = tol.threshold(1.0);
    let relatively_local = cp.completely_positive
        && unital_residual <= bound
        && n1_residual <= bound
        && n2_residual <= bound;
    Ok(RelativeLocality {
        completely_positive: cp.completely_positive,
        unital_residual,
        n1_residual,
        n2_residual,
        relatively_local,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::presets;
    use crate::matcore::{kron, ONE};
    use crate::random;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn tf(sites: &[usize]) -> StarAlgebra {
        StarAlgebra::tensor_factor(2, 2, sites).unwrap()
    }

    fn swap() -> CMatrix {
        let mut s = CMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                s.set(i * 2 + j, j * 2 + i, ONE);
            }
        }
        s
    }

    fn local_conjugation(seed: u64) -> (LinMap, CMatrix) {
        let mut r = random::rng(seed);
        let u = random::unitary(2, &mut r);
        let big = kron(&u, &CMatrix::identity(2));
        let t = LinMap::from_fn(tf(&[0]), 4, |a| big.adjoint() * a * &big).unwrap();
        (t, big)
    }

    #[test]
    fn extension_of_local_conjugation_is_product_conjugation() {
        let (t, big) = local_conjugation(31);
        let tp = extend_local(&t, &tf(&[1]), &tf(&[0]), &tol()).unwrap();
        assert_eq!(tp.domain().dim(), 16);
        // Oracle: conjugation by u ⊗ I on every product of basis elements.
        for a in tf(&[0]).basis() {
            for b in tf(&[1]).basis() {
                let x = a * b;
                let want = big.adjoint() * &x * &big;
                assert!(tp.apply(&x, &tol()).unwrap().dist(&want) < 1e-10);
            }
        }
        for b in tf(&[1]).basis() {
            assert!(tp.apply(b, &tol()).unwrap().dist(b) < 1e-10);
        }
    }

    #[test]
    fn extension_of_identity_is_identity() {
        let t = LinMap::identity(tf(&[0]));
        let tp = extend_local(&t, &tf(&[1]), &tf(&[0]), &tol()).unwrap();
        for b in tp.domain().basis() {
            assert!(tp.apply(b, &tol()).unwrap().dist(b) < 1e-12);
        }
    }

    #[test]
    fn extension_is_relatively_local_and_factorizes() {
        let (t, _) = local_conjugation(32);
        let (n1, n2) = (tf(&[0]), tf(&[1]));
        let tp = extend_local(&t, &n2, &n1, &tol()).unwrap();
        let rl = relatively_local_check(&tp, &n1, &n2, &tol()).unwrap();
        assert!(rl.relatively_local, "{rl:?}");
        assert!(werner_factorization_check(&tp, &n1, &n2, &tol()).unwrap() < 1e-9);
    }

    #[test]
    fn extend_local_rejects_non_unital() {
        let t = LinMap::from_fn(tf(&[0]), 4, |a| a.scale_real(0.5)).unwrap();
        assert!(matches!(
            extend_local(&t, &tf(&[1]), &tf(&[0]), &tol()),
            Err(Error::NotUnital { .. })
        ));
    }

    #[test]
    fn extend_local_rejects_bad_inclusions() {
        let t = LinMap::identity(tf(&[0]));
        match extend_local(&t, &tf(&[1]), &tf(&[1]), &tol()) {
            Err(Error::PreconditionFailure(msg)) => assert!(msg.contains("N1 ⊄ m"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
        match extend_local(&t, &tf(&[0]), &tf(&[0]), &tol()) {
            Err(Error::PreconditionFailure(msg)) => assert!(msg.contains("N2'"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn extension_candidate_of_transpose_is_partial_transpose() {
        let n1 = tf(&[0]);
        let units = matrix_units(&n1, 2).unwrap();
        let t = presets::transport(&presets::transpose(2), &units, &n1, &tol()).unwrap();
        assert!(extend_local(&t, &tf(&[1]), &n1, &tol()).is_err());
        let tp = extension_candidate(&t, &tf(&[1]), &n1, &tol()).unwrap();
        let phi = presets::max_entangled_projector(2);
        let img = tp.apply(&phi, &tol()).unwrap();
        let pt = presets::partial_transpose(2, 2)
            .apply(&phi, &tol())
            .unwrap();
        // Matrix units of M_2 ⊗ I may differ from the standard ones by a local
        // unitary, so compare spectra.
        let a = crate::matcore::eig_hermitian_unchecked(&img).values;
        let b = crate::matcore::eig_hermitian_unchecked(&pt).values;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((a[3] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn werner_identity_map_has_zero_residual() {
        let t = presets::identity(4);
        assert_eq!(
            werner_factorization_check(&t, &tf(&[0]), &tf(&[1]), &tol()).unwrap(),
            0.0
        );
    }

    #[test]
    fn werner_rejects_swap() {
        let s = swap();
        let t = presets::unitary_conjugation(&s, &tol()).unwrap();
        match werner_factorization_check(&t, &tf(&[0]), &tf(&[1]), &tol()) {
            Err(Error::IdentityOnN2Violated { residual }) => assert!(residual > 0.5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn absolute_locality_examples() {
        let n1 = tf(&[0]);
        let mut r = random::rng(33);
        let k = kron(&random::unitary(2, &mut r), &CMatrix::identity(2));
        assert!(is_absolutely_local(
            &KrausSet::new(vec![k]).unwrap(),
            &n1,
            &tol()
        ));
        assert!(!is_absolutely_local(
            &KrausSet::new(vec![swap()]).unwrap(),
            &n1,
            &tol()
        ));
        assert!(is_absolutely_local(
            &KrausSet::new(vec![CMatrix::identity(4)]).unwrap(),
            &n1,
            &tol()
        ));
        // HS distance of SWAP from M_2 ⊗ I: SWAP = (I⊗I + X⊗X + Y⊗Y + Z⊗Z)/2,
        // and only the first term survives projection.
        let r = n1.residual(&swap());
        assert!((r - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn relative_locality_examples() {
        let (n1, n2) = (tf(&[0]), tf(&[1]));
        let s = presets::unitary_conjugation(&swap(), &tol()).unwrap();
        assert!(
            !relatively_local_check(&s, &n1, &n2, &tol())
                .unwrap()
                .relatively_local
        );
        let id = presets::identity(4);
        assert!(
            relatively_local_check(&id, &n1, &n2, &tol())
                .unwrap()
                .relatively_local
        );
    }
}
