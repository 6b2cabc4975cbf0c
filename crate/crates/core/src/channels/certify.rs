//! Complete positivity from a positive extension that fixes a commuting,
//! independent algebra.
//!
//! Matrix units `E_jk` inside `N2` give an embedding
//! `α([A_jk]) = Σ A_jk E_jk` of `M_n(N1)` into `N1 ∨ N2`. When `α` is a
//! faithful *-homomorphism, positivity of `T'` on `α([B]^†[B])` together with
//! the factorization `T'(A E) = T(A) E` shows `[T(A_jk)] ≥ 0`.

use rand::Rng;
use serde::Serialize;

use super::{cp_check, is_positive_sampled, werner_factorization_check, LinMap, PositivityReport};
use crate::error::{Error, Result};
use crate::matcore::{eig_hermitian_unchecked, op_norm_unchecked, CMatrix, Tolerance};
use crate::random;
use crate::staralg::{matrix_units, schlieder_independent, MatrixUnits, StarAlgebra};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CertifyOptions {
    /// Random samples of `M_n(N1)` for the embedding and lifted positivity checks.
    pub samples: usize,
    /// Probes handed to [`is_positive_sampled`] for `T'`.
    pub positivity_trials: usize,
    pub seed: u64,
    pub tol: Tolerance,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            samples: 16,
            positivity_trials: 200,
            seed: 0,
            tol: Tolerance::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    /// Every sampled lift is PSD and the Choi test agrees.
    CertifiedCP,
    /// `T'` has a negative value on a positive element.
    ExtensionNotPositive,
    /// `T'` looked positive but the lifted or Choi test failed.
    NotCertified,
}

#[derive(Debug, Clone, Serialize)]
pub struct CpCertificate {
    pub verdict: Verdict,
    pub n: usize,
    /// `max ||α(M^†) - α(M)^†||`.
    pub cp1: f64,
    /// `max ||α(MN) - α(M)α(N)||`.
    pub cp2: f64,
    /// `max(0, ||A^s_jk - A^t_jk|| - ||S^s - S^t||)`, operator norms.
    pub cp3: f64,
    /// Smallest eigenvalue of `[T(A_jk)]` over sampled `[A] = [B]^†[B]`, each
    /// normalized to operator norm one.
    pub lifted_min_eigenvalue: f64,
    /// `max ||T'(Σ A_jk E_jk) - Σ T(A_jk) E_jk||`.
    pub lifted_residual: f64,
    pub werner_residual: f64,
    pub positivity: PositivityReport,
    pub choi_min_eigenvalue: f64,
    pub choi_cp: bool,
}

type Block = Vec<CMatrix>;

fn alpha(m: &Block, e: &MatrixUnits, d: usize) -> CMatrix {
    let n = e.n;
    let mut out = CMatrix::zeros(d, d);
    for j in 0..n {
        for k in 0..n {
            out += &(&m[j * n + k] * e.unit(j, k));
        }
    }
    out
}

fn block_adjoint(m: &Block, n: usize) -> Block {
    (0..n * n)
        .map(|i| m[(i % n) * n + i / n].adjoint())
        .collect()
}

fn block_mul(a: &Block, b: &Block, n: usize, d: usize) -> Block {
    let mut out = vec![CMatrix::zeros(d, d); n * n];
    for j in 0..n {
        for l in 0..n {
            for k in 0..n {
                out[j * n + l] += &(&a[j * n + k] * &b[k * n + l]);
            }
        }
    }
    out
}

fn assemble(m: &Block, n: usize, d: usize) -> CMatrix {
    CMatrix::from_fn(n * d, n * d, |r, c| {
        m[(r / d) * n + c / d].get(r % d, c % d)
    })
}

fn random_block(n1: &StarAlgebra, n: usize, rng: &mut impl Rng) -> Block {
    (0..n * n).map(|_| random::element(n1, rng)).collect()
}

/// Certifies complete positivity of `t` on `N1 = t.domain()` from the
/// positive extension `tp` on `N1 ∨ N2` that fixes `n2`, using `n` matrix
/// units drawn from `n2`.
pub fn theorem1_certify(
    t: &LinMap,
    tp: &LinMap,
    n: usize,
    n2: &StarAlgebra,
    opts: &CertifyOptions,
) -> Result<CpCertificate> {
    let tol = &opts.tol;
    let n1 = t.domain();
    let d = n1.ambient_dim();
    if t.codomain_dim() != d || tp.codomain_dim() != d || n2.ambient_dim() != d {
        return Err(Error::ShapeMismatch(
            "maps and algebras must share one ambient space".into(),
        ));
    }
    if !schlieder_independent(n1, n2, tol)? {
        return Err(Error::IndependenceFailure);
    }
    let e = matrix_units(n2, n)?;

    let agree = tp.distance_on(t, n1, tol)?;
    if agree > tol.threshold(1.0) {
        return Err(Error::PreconditionFailure(format!(
            "T' differs from T on N1 by {agree:.3e}"
        )));
    }
    let mut fixed = 0.0f64;
    for b in n2.basis() {
        fixed = fixed.max(tp.apply(b, tol)?.dist(b));
    }
    if fixed > tol.threshold(1.0) {
        return Err(Error::IdentityOnN2Violated { residual: fixed });
    }

    let positivity = is_positive_sampled(tp, opts.positivity_trials, opts.seed, tol)?;
    let choi = cp_check(t, tol)?;
    let werner_residual = werner_factorization_check(tp, n1, n2, tol)?;

    let mut rng = random::rng(opts.seed ^ 0x00ce_7b1f);
    let (mut cp1, mut cp2, mut cp3) = (0.0f64, 0.0f64, 0.0f64);
    let mut lifted_min = f64::INFINITY;
    let mut lifted_residual = 0.0f64;
    let mut lifted_ok = true;
    for _ in 0..opts.samples {
        let ms = random_block(n1, n, &mut rng);
        let mt = random_block(n1, n, &mut rng);
        let (s, st) = (alpha(&ms, &e, d), alpha(&mt, &e, d));

        cp1 = cp1.max(alpha(&block_adjoint(&ms, n), &e, d).dist(&s.adjoint()));
        cp2 = cp2.max(alpha(&block_mul(&ms, &mt, n, d), &e, d).dist(&(&s * &st)));
        let gap = op_norm_unchecked(&(&s - &st));
        for (a, b) in ms.iter().zip(&mt) {
            cp3 = cp3.max(op_norm_unchecked(&(a - b)) - gap);
        }

        let b = random_block(n1, n, &mut rng);
        let mut a = block_mul(&block_adjoint(&b, n), &b, n, d);
        let norm = op_norm_unchecked(&assemble(&a, n, d));
        if norm == 0.0 {
            continue;
        }
        for x in &mut a {
            *x = x.scale_real(1.0 / norm);
        }
        let ta = a
            .iter()
            .map(|x| t.apply(x, tol))
            .collect::<Result<Vec<_>>>()?;
        let lifted = tp.apply(&alpha(&a, &e, d), tol)?;
        lifted_residual = lifted_residual.max(lifted.dist(&alpha(&ta, &e, d)));
        let eig = eig_hermitian_unchecked(&assemble(&ta, n, d).hermitian_part());
        lifted_min = lifted_min.min(eig.min());
        let scale = eig.max().abs().max(eig.min().abs());
        lifted_ok &= eig.min() >= -tol.threshold(scale);
    }
    if !lifted_min.is_finite() {
        lifted_min = 0.0;
    }

    let verdict = if !positivity.positive {
        Verdict::ExtensionNotPositive
    } else if lifted_ok && choi.completely_positive {
        Verdict::CertifiedCP
    } else {
        Verdict::NotCertified
    };
    Ok(CpCertificate {
        verdict,
        n,
        cp1,
        cp2,
        cp3: cp3.max(0.0),
        lifted_min_eigenvalue: lifted_min,
        lifted_residual,
        werner_residual,
        positivity,
        choi_min_eigenvalue: choi.min_eigenvalue,
        choi_cp: choi.completely_positive,
    })
}
