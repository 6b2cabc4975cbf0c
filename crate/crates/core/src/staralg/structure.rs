//! Wedderburn block structure and matrix units.
//!
//! A finite-dimensional *-algebra is unitarily `⊕ᵢ M_{nᵢ} ⊗ I_{mᵢ}`. The
//! blocks are found from the minimal central projections (spectral projections
//! of a generic Hermitian element of the center). Inside a block, the spectral
//! projections of a generic Hermitian element are minimal projections, and
//! `F_a x F_1` for a generic `x` is a multiple of a partial isometry from
//! `F_1` to `F_a`.
//!
//! "Generic" elements are tried deterministically first (the conditional
//! expectation of `diag(1, 2, ..., d)` or of the all-ones matrix, which give
//! the standard matrix units on the usual tensor-factor algebras) and then
//! drawn from a fixed seed.

use nalgebra::DMatrix;

use super::{center, StarAlgebra};
use crate::error::{Error, Result};
use crate::matcore::{eig_hermitian_unchecked, op_norm_unchecked, CMatrix, C64};
use crate::random;

const STRUCTURE_SEED: u64 = 0x5eed_0b10c;
const ATTEMPTS: u64 = 12;

/// `(n, m)` pairs: the algebra is unitarily `⊕ M_n ⊗ I_m`.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct BlockStructure {
    pub blocks: Vec<(usize, usize)>,
}

impl BlockStructure {
    pub fn algebra_dim(&self) -> usize {
        self.blocks.iter().map(|(n, _)| n * n).sum()
    }

    pub fn commutant_dim(&self) -> usize {
        self.blocks.iter().map(|(_, m)| m * m).sum()
    }

    pub fn support_dim(&self) -> usize {
        self.blocks.iter().map(|(n, m)| n * m).sum()
    }
}

/// One simple summand of the algebra.
#[derive(Debug, Clone)]
pub(crate) struct Block {
    pub n: usize,
    pub m: usize,
    /// Minimal central projection.
    pub projection: CMatrix,
}

/// Spectral projections of a Hermitian matrix, eigenvalues ascending,
/// clustering eigenvalues closer than `1e-7 * max(1, ||h||)`.
pub(crate) fn spectral_projections(h: &CMatrix) -> Vec<(f64, CMatrix)> {
    let eig = eig_hermitian_unchecked(h);
    let d = h.rows();
    let scale = eig.max().abs().max(eig.min().abs()).max(1.0);
    let gap = 1e-7 * scale;
    let v = eig.vectors.as_dmatrix();
    let mut out: Vec<(f64, CMatrix)> = Vec::new();
    let mut i = d;
    while i > 0 {
        let hi = i;
        i -= 1;
        while i > 0 && (eig.values[i - 1] - eig.values[i]).abs() <= gap {
            i -= 1;
        }
        let cols = v.columns(i, hi - i);
        let p = CMatrix::from_dmatrix(cols * cols.adjoint());
        let mean = eig.values[i..hi].iter().sum::<f64>() / (hi - i) as f64;
        out.push((mean, p));
    }
    out
}

fn numerical_rank(columns: &[CMatrix]) -> usize {
    if columns.is_empty() {
        return 0;
    }
    let len = columns[0].as_slice().len();
    let mut m = DMatrix::<C64>::zeros(len, columns.len());
    for (k, c) in columns.iter().enumerate() {
        m.column_mut(k).copy_from_slice(c.as_slice());
    }
    let sv = m.singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > 1e-9 * max).count()
}

fn trace_rank(p: &CMatrix) -> usize {
    p.trace().re.round() as usize
}

fn hermitian_probe(alg: &StarAlgebra, attempt: u64) -> CMatrix {
    if attempt == 0 {
        let d = alg.ambient_dim();
        let ramp: Vec<f64> = (1..=d).map(|x| x as f64).collect();
        alg.project(&CMatrix::diag_real(&ramp)).hermitian_part()
    } else {
        let mut r = random::rng(STRUCTURE_SEED ^ attempt);
        random::hermitian_element(alg, &mut r)
    }
}

fn offdiag_probe(alg: &StarAlgebra, attempt: u64) -> CMatrix {
    if attempt == 0 {
        let d = alg.ambient_dim();
        alg.project(&CMatrix::from_fn(d, d, |_, _| C64::new(1.0, 0.0)))
    } else {
        let mut r = random::rng(STRUCTURE_SEED.rotate_left(17) ^ attempt);
        random::element(alg, &mut r)
    }
}

/// Minimal central projections and block sizes, ordered by the probe spectrum.
pub(crate) fn decompose(alg: &StarAlgebra) -> Result<Vec<Block>> {
    let z = center(alg);
    let want = z.dim();
    let d = alg.ambient_dim();
    for attempt in 0..ATTEMPTS {
        let h = hermitian_probe(&z, attempt);
        let projs = spectral_projections(&h);
        if projs.len() != want {
            continue;
        }
        if projs
            .iter()
            .any(|(_, p)| z.residual(p) > 1e-8 * p.frobenius_norm().max(1.0))
        {
            continue;
        }
        let mut blocks = Vec::with_capacity(want);
        for (_, p) in projs {
            let rank = trace_rank(&p);
            let images: Vec<CMatrix> = alg.basis().iter().map(|b| &p * b).collect();
            let dim = numerical_rank(&images);
            let n = (dim as f64).sqrt().round() as usize;
            if n == 0 || n * n != dim || !rank.is_multiple_of(n) {
                return Err(Error::Internal(format!(
                    "block of rank {rank} has non-square dimension {dim}"
                )));
            }
            blocks.push(Block {
                n,
                m: rank / n,
                projection: p,
            });
        }
        let support: usize = blocks.iter().map(|b| b.n * b.m).sum();
        if support != d {
            return Err(Error::Internal(format!(
                "blocks cover {support} of {d} dimensions"
            )));
        }
        return Ok(blocks);
    }
    Err(Error::Internal(
        "could not separate the center's minimal projections".into(),
    ))
}

pub fn block_structure(alg: &StarAlgebra) -> Result<BlockStructure> {
    let blocks = decompose(alg)?;
    Ok(BlockStructure {
        blocks: blocks.iter().map(|b| (b.n, b.m)).collect(),
    })
}

/// Partial isometries `U_0 = F_0, U_1, ..., U_{n-1}` of one block with
/// `U_a^† U_a = F_0` and `U_a U_a^† = F_a`, the `F_a` minimal.
fn block_isometries(alg: &StarAlgebra, block: &Block) -> Result<Vec<CMatrix>> {
    let p = &block.projection;
    'attempt: for attempt in 0..ATTEMPTS {
        let h = p * hermitian_probe(alg, attempt) * p;
        let mut minimal: Vec<CMatrix> = Vec::new();
        for (_, q) in spectral_projections(&h) {
            let f = &q * p;
            if f.trace().re > 0.5 {
                minimal.push(f);
            }
        }
        if minimal.len() != block.n
            || minimal.iter().any(|f| trace_rank(f) != block.m)
            || minimal
                .iter()
                .any(|f| alg.residual(f) > 1e-8 * f.frobenius_norm())
        {
            continue;
        }
        for sub in 0..ATTEMPTS {
            let x = p * offdiag_probe(alg, sub) * p;
            let xn = op_norm_unchecked(&x);
            if xn == 0.0 {
                continue;
            }
            let mut units = vec![minimal[0].clone()];
            for f in &minimal[1..] {
                let w = f * &x * &minimal[0];
                let wn = op_norm_unchecked(&w);
                if wn < 1e-6 * xn {
                    units.clear();
                    break;
                }
                units.push(w.scale_real(1.0 / wn));
            }
            if units.len() != block.n {
                continue;
            }
            let ok = units.iter().zip(&minimal).all(|(u, f)| {
                (u.adjoint() * u).dist(&minimal[0]) < 1e-8 && (u * u.adjoint()).dist(f) < 1e-8
            });
            if ok {
                return Ok(units);
            }
            continue 'attempt;
        }
    }
    Err(Error::Internal(
        "could not build matrix units for a block".into(),
    ))
}

/// A system of matrix units `E_jk = V_j V_k^†` built from partial isometries
/// `V_j` with common initial projection `E_11`.
#[derive(Debug, Clone)]
pub struct MatrixUnits {
    pub n: usize,
    pub units: Vec<Vec<CMatrix>>,
    pub isometries: Vec<CMatrix>,
}

impl MatrixUnits {
    pub fn unit(&self, j: usize, k: usize) -> &CMatrix {
        &self.units[j][k]
    }

    pub fn ambient_dim(&self) -> usize {
        self.units[0][0].rows()
    }

    /// Standard units `|j><k|` of `M_n`.
    pub fn standard(n: usize) -> Self {
        let units: Vec<Vec<CMatrix>> = (0..n)
            .map(|j| (0..n).map(|k| CMatrix::unit(n, j, k)).collect())
            .collect();
        let isometries = (0..n).map(|j| CMatrix::unit(n, j, 0)).collect();
        MatrixUnits {
            n,
            units,
            isometries,
        }
    }

    /// Worst violation of the matrix-unit relations: `E_jk E_lm = δ_kl E_jm`,
    /// `E_jk^† = E_kj`, `V_j^†V_j = E_11`, `V_jV_j^† = E_jj`, `||E_jk|| = 1`.
    pub fn relation_residual(&self) -> f64 {
        let n = self.n;
        let d = self.ambient_dim();
        let zero = CMatrix::zeros(d, d);
        let mut worst = 0.0f64;
        for j in 0..n {
            for k in 0..n {
                let ejk = &self.units[j][k];
                worst = worst.max(ejk.adjoint().dist(&self.units[k][j]));
                worst = worst.max((op_norm_unchecked(ejk) - 1.0).abs());
                for l in 0..n {
                    for m in 0..n {
                        let prod = ejk * &self.units[l][m];
                        let want = if k == l { &self.units[j][m] } else { &zero };
                        worst = worst.max(prod.dist(want));
                    }
                }
            }
            let v = &self.isometries[j];
            worst = worst.max((v.adjoint() * v).dist(&self.units[0][0]));
            worst = worst.max((v * v.adjoint()).dist(&self.units[j][j]));
        }
        worst
    }

    /// True when the units span `alg` (so `alg ≅ M_n`).
    pub fn spans(&self, alg: &StarAlgebra) -> bool {
        self.n * self.n == alg.dim()
            && self.ambient_dim() == alg.ambient_dim()
            && self
                .units
                .iter()
                .flatten()
                .all(|e| alg.residual(e) <= 1e-8 * e.frobenius_norm().max(1.0))
    }

    /// Coordinates `a_jk` with `A = Σ a_jk E_jk` (exact when `A` lies in the
    /// span of the units).
    pub fn coordinates(&self, a: &CMatrix) -> CMatrix {
        CMatrix::from_fn(self.n, self.n, |j, k| {
            let e = &self.units[j][k];
            e.hs_inner(a) / e.hs_inner(e).re
        })
    }

    /// `Σ a_jk E_jk`.
    pub fn embed(&self, a: &CMatrix) -> CMatrix {
        let d = self.ambient_dim();
        let mut out = CMatrix::zeros(d, d);
        for j in 0..self.n {
            for k in 0..self.n {
                out.axpy(a.get(j, k), &self.units[j][k]);
            }
        }
        out
    }
}

/// `n` mutually orthogonal, mutually equivalent projections `E_1..E_n` in
/// `alg`, with partial isometries `V_j` (`V_j^†V_j = E_1`, `V_jV_j^† = E_j`)
/// and the units `E_jk = V_jV_k^†`.
///
/// Every block `M_{n_i} ⊗ I_{m_i}` with `n_i ≥ n` contributes
/// `⌊n_i / n⌋` minimal projections to each `E_j`. Fails with
/// [`Error::NotEnoughProjections`] when no block is large enough.
pub fn matrix_units(alg: &StarAlgebra, n: usize) -> Result<MatrixUnits> {
    if n == 0 {
        return Err(Error::NotEnoughProjections { n, available: 0 });
    }
    let blocks = decompose(alg)?;
    let available = blocks.iter().map(|b| b.n).max().unwrap_or(0);
    if available < n {
        return Err(Error::NotEnoughProjections { n, available });
    }
    let d = alg.ambient_dim();
    let mut isometries = vec![CMatrix::zeros(d, d); n];
    for block in blocks.iter().filter(|b| b.n >= n) {
        let u = block_isometries(alg, block)?;
        let r = block.n / n;
        for (j, v) in isometries.iter_mut().enumerate() {
            for t in 0..r {
                *v += &(&u[j * r + t] * u[t].adjoint());
            }
        }
    }
    let units: Vec<Vec<CMatrix>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|k| &isometries[j] * isometries[k].adjoint())
                .collect()
        })
        .collect();
    let mu = MatrixUnits {
        n,
        units,
        isometries,
    };
    let res = mu.relation_residual();
    if res > 1e-9 {
        return Err(Error::Internal(format!(
            "matrix unit relations violated ({res:.3e})"
        )));
    }
    Ok(mu)
}
