//! Seeded sampling helpers. Every randomized routine in the crate takes an
//! explicit seed and draws through these functions, so results are
//! reproducible across runs and platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matcore::{CMatrix, C64};
use crate::staralg::StarAlgebra;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Ginibre matrix with unit-variance complex Gaussian entries.
pub fn ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    // Fill row-major so the draw order does not depend on storage layout.
    let entries: Vec<C64> = (0..rows * cols).map(|_| gaussian(rng)).collect();
    CMatrix::from_fn(rows, cols, |i, j| entries[i * cols + j])
}

pub fn hermitian(d: usize, rng: &mut impl Rng) -> CMatrix {
    ginibre(d, d, rng).hermitian_part()
}

/// Haar-random unitary via QR of a Ginibre matrix with the diagonal phases fixed.
pub fn unitary(d: usize, rng: &mut impl Rng) -> CMatrix {
    let g = ginibre(d, d, rng).into_dmatrix();
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let q = CMatrix::from_dmatrix(q);
    let phases = CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            let z = r[(i, i)];
            if z.norm() > 0.0 {
                z / z.norm()
            } else {
                C64::new(1.0, 0.0)
            }
        } else {
            C64::new(0.0, 0.0)
        }
    });
    q * phases
}

/// Random element of an algebra: complex Gaussian combination of its basis.
pub fn element(alg: &StarAlgebra, rng: &mut impl Rng) -> CMatrix {
    let d = alg.ambient_dim();
    let mut out = CMatrix::zeros(d, d);
    for b in alg.basis() {
        out.axpy(gaussian(rng), b);
    }
    out
}

pub fn hermitian_element(alg: &StarAlgebra, rng: &mut impl Rng) -> CMatrix {
    element(alg, rng).hermitian_part()
}
