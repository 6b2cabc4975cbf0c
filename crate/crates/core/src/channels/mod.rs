//! Linear maps on algebras: complete positivity, Choi matrices, Kraus and
//! Stinespring forms, extension of local operations and the locality checks
//! built on top of them.
//!
//! Kraus operators follow the Heisenberg-picture convention
//! `T(A) = Σ_j K_j^† A K_j`.

mod certify;
mod kraus;
mod linmap;
mod locality;
pub mod presets;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::{
    eig_hermitian_unchecked, op_norm_unchecked, psd_from_eigen, CMatrix, Tolerance,
};
use crate::random;
use crate::staralg::{conditional_expectation, is_factor, matrix_units, MatrixUnits, StarAlgebra};

pub use certify::{theorem1_certify, CertifyOptions, CpCertificate, Verdict};
pub use kraus::{
    kraus_commutator_defect, kraus_from_choi, kraus_on_subfactor, stinespring, KrausSet,
    StinespringTriple,
};
pub use linmap::LinMap;
pub use locality::{
    extend_local, extension_candidate, is_absolutely_local, relatively_local_check,
    werner_factorization_check, RelativeLocality,
};

/// `[T(E_jk)]` as an `(n · out_dim)`-square block matrix.
#[derive(Debug, Clone)]
pub struct ChoiMatrix {
    pub n: usize,
    pub out_dim: usize,
    pub matrix: CMatrix,
}

impl ChoiMatrix {
    pub fn eigenvalues(&self) -> Vec<f64> {
        eig_hermitian_unchecked(&self.matrix).values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        eig_hermitian_unchecked(&self.matrix).min()
    }
}

/// Choi matrix `Σ e_jk ⊗ T(E_jk)` over matrix units spanning the domain.
pub fn choi(t: &LinMap, units: &MatrixUnits) -> Result<ChoiMatrix> {
    let n = units.n;
    if !units.spans(t.domain()) {
        return Err(Error::UnitsMismatch(format!(
            "{n}x{n} units do not span a {}-dimensional domain",
            t.domain().dim()
        )));
    }
    let m = t.codomain_dim();
    let tol = Tolerance::default();
    let mut c = CMatrix::zeros(n * m, n * m);
    for j in 0..n {
        for k in 0..n {
            let img = t.apply(units.unit(j, k), &tol)?;
            for a in 0..m {
                for b in 0..m {
                    c.set(j * m + a, k * m + b, img.get(a, b));
                }
            }
        }
    }
    Ok(ChoiMatrix {
        n,
        out_dim: m,
        matrix: c,
    })
}

/// Choi's criterion: `T` is CP iff its Choi matrix is PSD.
pub fn is_completely_positive(t: &LinMap, units: &MatrixUnits, tol: &Tolerance) -> Result<bool> {
    let c = choi(t, units)?;
    crate::matcore::is_psd(&c.matrix, tol)
}

/// Outcome of [`cp_check`].
#[derive(Debug, Clone, Serialize)]
pub struct CpReport {
    pub completely_positive: bool,
    pub min_eigenvalue: f64,
    pub choi_dim: usize,
}

/// Choi matrix of a map on an arbitrary domain: over the domain's own matrix
/// units when it is a factor, otherwise of `T ∘ E` on the full matrix algebra
/// (`E` the conditional expectation onto the domain). A map is CP on the
/// domain iff `T ∘ E` is CP, since `E` is a CP idempotent onto it.
pub fn general_choi(t: &LinMap) -> Result<ChoiMatrix> {
    let dom = t.domain();
    if is_factor(dom) {
        let p = (dom.dim() as f64).sqrt().round() as usize;
        let units = matrix_units(dom, p)?;
        return choi(t, &units);
    }
    Ok(projected_choi(t))
}

/// Choi matrix of `T ∘ E` over the standard units of the full matrix algebra.
pub(crate) fn projected_choi(t: &LinMap) -> ChoiMatrix {
    let d = t.domain().ambient_dim();
    let m = t.codomain_dim();
    let mut c = CMatrix::zeros(d * m, d * m);
    for j in 0..d {
        for k in 0..d {
            let img = t.apply_projected(&CMatrix::unit(d, j, k));
            for a in 0..m {
                for b in 0..m {
                    c.set(j * m + a, k * m + b, img.get(a, b));
                }
            }
        }
    }
    ChoiMatrix {
        n: d,
        out_dim: m,
        matrix: c,
    }
}

pub fn cp_check(t: &LinMap, tol: &Tolerance) -> Result<CpReport> {
    let c = general_choi(t)?;
    let dev = c.matrix.hermitian_deviation();
    if dev > tol.threshold(c.matrix.max_abs()) {
        // A non-Hermitian Choi matrix means T is not even Hermiticity preserving.
        return Ok(CpReport {
            completely_positive: false,
            min_eigenvalue: f64::NAN,
            choi_dim: c.matrix.rows(),
        });
    }
    let eig = eig_hermitian_unchecked(&c.matrix);
    Ok(CpReport {
        completely_positive: psd_from_eigen(&eig, tol),
        min_eigenvalue: eig.min(),
        choi_dim: c.matrix.rows(),
    })
}

/// Outcome of [`is_positive_sampled`]. `min_eigenvalue` is the smallest
/// eigenvalue of `T(A)` over the probes, each probe normalized to `||A|| = 1`.
#[derive(Debug, Clone, Serialize)]
pub struct PositivityReport {
    pub positive: bool,
    pub min_eigenvalue: f64,
    pub probes: usize,
    /// The probe attaining `min_eigenvalue` when it is negative.
    pub witness: Option<CMatrix>,
}

/// Domains up to this dimension get a local refinement after sampling.
const REFINE_MAX_DIM: usize = 64;

/// Stochastic positivity test.
///
/// Probes `A = I` and `trials` random `A = B^†B` with `B` in the domain, then
/// refines the worst probe by alternating minimization: with `v` the lowest
/// eigenvector of `T(A)`, the next `B` minimizes `<v, T(B^†B) v>` over unit
/// HS-norm `B`, which is the lowest eigenvector of a small Hermitian form.
/// Only a found witness is conclusive.
pub fn is_positive_sampled(
    t: &LinMap,
    trials: usize,
    seed: u64,
    tol: &Tolerance,
) -> Result<PositivityReport> {
    let dom = t.domain();
    let d = dom.ambient_dim();
    let mut rng = random::rng(seed);

    let score = |a: &CMatrix| -> Result<(f64, f64, CMatrix)> {
        let norm = op_norm_unchecked(a);
        let a = a.scale_real(1.0 / norm);
        let img = t.apply(&a, tol)?.hermitian_part();
        let eig = eig_hermitian_unchecked(&img);
        let scale = eig.max().abs().max(eig.min().abs());
        Ok((eig.min(), scale, a))
    };

    let mut best = score(&CMatrix::identity(d))?;
    let mut probes = 1;
    for _ in 0..trials {
        let b = random::element(dom, &mut rng);
        let a = b.adjoint() * &b;
        if a.max_abs() == 0.0 {
            continue;
        }
        let s = score(&a)?;
        probes += 1;
        if s.0 < best.0 {
            best = s;
        }
    }

    if dom.dim() <= REFINE_MAX_DIM && trials > 0 {
        let basis = dom.basis();
        let nb = basis.len();
        // T(b_i^† b_j), computed once.
        let mut images = Vec::with_capacity(nb * nb);
        for bi in basis {
            for bj in basis {
                images.push(t.apply(&(bi.adjoint() * bj), tol)?);
            }
        }
        let mut current = best.2.clone();
        for _ in 0..30 {
            let img = t.apply(&current, tol)?.hermitian_part();
            let eig = eig_hermitian_unchecked(&img);
            let v = eig.vector(eig.values.len() - 1);
            let form = CMatrix::from_fn(nb, nb, |i, j| {
                let m = images[i * nb + j].as_dmatrix();
                v.dotc(&(m * &v))
            });
            let feig = eig_hermitian_unchecked(&form.hermitian_part());
            let c = feig.vector(nb - 1);
            let mut b = CMatrix::zeros(d, d);
            for (z, bi) in c.iter().zip(basis) {
                b.axpy(*z, bi);
            }
            let a = b.adjoint() * &b;
            if a.max_abs() == 0.0 {
                break;
            }
            let s = score(&a)?;
            probes += 1;
            let improved = s.0 < best.0 - 1e-13;
            current = s.2.clone();
            if s.0 < best.0 {
                best = s;
            }
            if !improved {
                break;
            }
        }
    }

    let (min_eigenvalue, scale, witness) = best;
    let positive = min_eigenvalue >= -tol.threshold(scale);
    Ok(PositivityReport {
        positive,
        min_eigenvalue,
        probes,
        witness: (!positive).then_some(witness),
    })
}

/// Conditional expectation from `M_d` onto `alg`, as a map on the full algebra.
pub fn expectation_onto(alg: &StarAlgebra) -> Result<LinMap> {
    conditional_expectation(alg, &StarAlgebra::full(alg.ambient_dim()))
}
