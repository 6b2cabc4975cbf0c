use serde::Serialize;

use super::{choi, ChoiMatrix, LinMap};
use crate::error::{Error, Result};
use crate::matcore::{eig_hermitian_unchecked, kron, CMatrix, Tolerance, C64};
use crate::staralg::{center, MatrixUnits};

/// Kraus operators `K_j` for `T(A) = Σ K_j^† A K_j`. Each `K_j` is
/// `in_dim x out_dim`: it takes the output space into the input space.
#[derive(Debug, Clone, Serialize)]
pub struct KrausSet {
    pub operators: Vec<CMatrix>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl KrausSet {
    pub fn new(operators: Vec<CMatrix>) -> Result<Self> {
        let first = operators
            .first()
            .ok_or_else(|| Error::InvalidMatrix("empty Kraus set".into()))?;
        let (in_dim, out_dim) = (first.rows(), first.cols());
        for k in &operators {
            k.validate()?;
            if k.rows() != in_dim || k.cols() != out_dim {
                return Err(Error::ShapeMismatch(
                    "Kraus operators differ in shape".into(),
                ));
            }
        }
        Ok(KrausSet {
            operators,
            in_dim,
            out_dim,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn apply(&self, a: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.out_dim, self.out_dim);
        for k in &self.operators {
            out += &(k.adjoint() * a * k);
        }
        out
    }

    /// `Σ K_j^† K_j`, which equals `T(I)`.
    pub fn gram_sum(&self) -> CMatrix {
        self.apply(&CMatrix::identity(self.in_dim))
    }

    pub fn unital_residual(&self) -> f64 {
        self.gram_sum().dist(&CMatrix::identity(self.out_dim))
    }

    pub fn is_unital(&self, tol: &Tolerance) -> bool {
        self.in_dim == self.out_dim && self.unital_residual() <= tol.threshold(1.0)
    }
}

/// Relative eigenvalue cutoff (against the Choi trace) for keeping a Kraus operator.
const KRAUS_CUTOFF: f64 = 1e-10;

/// Kraus operators from the spectral decomposition of a PSD Choi matrix.
///
/// With `C = Σ λ v v^†`, each kept eigenpair gives `w = sqrt(λ) v` and
/// `K[j, a] = conj(w[j·m + a])`; then block `(j,k)` of `Σ w w^†` is
/// `Σ K^† e_jk K`. Operators come out ordered by descending eigenvalue.
pub fn kraus_from_choi(c: &ChoiMatrix, tol: &Tolerance) -> Result<KrausSet> {
    let (n, m) = (c.n, c.out_dim);
    let dev = c.matrix.hermitian_deviation();
    if dev > tol.threshold(c.matrix.max_abs()) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let eig = eig_hermitian_unchecked(&c.matrix);
    let norm = eig.max().abs().max(eig.min().abs());
    if eig.min() < -tol.threshold(norm) {
        return Err(Error::NotCompletelyPositive {
            min_eigenvalue: eig.min(),
        });
    }
    let trace: f64 = eig.values.iter().sum();
    let cutoff = KRAUS_CUTOFF * trace.max(0.0);
    let mut operators = Vec::new();
    for (i, &lambda) in eig.values.iter().enumerate() {
        if lambda <= cutoff || lambda <= 0.0 {
            continue;
        }
        let w = eig.vector(i) * C64::new(lambda.sqrt(), 0.0);
        operators.push(CMatrix::from_fn(n, m, |j, a| w[j * m + a].conj()));
    }
    Ok(KrausSet {
        operators,
        in_dim: n,
        out_dim: m,
    })
}

/// Stinespring dilation `T(A) = W^† π(A) W`.
#[derive(Debug, Clone)]
pub struct StinespringTriple {
    pub dilation_dim: usize,
    /// `π`, a *-homomorphism of the domain into `M_{dilation_dim}`.
    pub rep: LinMap,
    /// `W : C^{out} → C^{dilation_dim}`.
    pub w: CMatrix,
}

impl StinespringTriple {
    pub fn apply(&self, a: &CMatrix, tol: &Tolerance) -> Result<CMatrix> {
        let pa = self.rep.apply(a, tol)?;
        Ok(self.w.adjoint() * pa * &self.w)
    }

    /// `max ||W^†π(b)W - T(b)||` over the domain basis.
    pub fn reconstruction_residual(&self, t: &LinMap, tol: &Tolerance) -> Result<f64> {
        let mut worst = 0.0f64;
        for (b, img) in t.domain().basis().iter().zip(t.images()) {
            worst = worst.max(self.apply(b, tol)?.dist(img));
        }
        Ok(worst)
    }

    /// How far `π` is from a *-homomorphism on basis pairs.
    pub fn representation_residual(&self, tol: &Tolerance) -> Result<f64> {
        let basis = self.rep.domain().basis();
        let mut worst = 0.0f64;
        for (a, pa) in basis.iter().zip(self.rep.images()) {
            worst = worst.max(self.rep.apply(&a.adjoint(), tol)?.dist(&pa.adjoint()));
            for (b, pb) in basis.iter().zip(self.rep.images()) {
                let pab = self.rep.apply(&(a * b), tol)?;
                worst = worst.max(pab.dist(&(pa * pb)));
            }
        }
        Ok(worst)
    }
}

/// Dilation on `C^n ⊗ C^r` (`r` = Choi rank): `π(A) = a ⊗ I_r` with `a` the
/// coordinates of `A` against the units, and `W = Σ_l K_l ⊗ |l>`.
pub fn stinespring(t: &LinMap, units: &MatrixUnits, tol: &Tolerance) -> Result<StinespringTriple> {
    let c = choi(t, units)?;
    let kraus = kraus_from_choi(&c, tol)?;
    let n = units.n;
    let r = kraus.len().max(1);
    let dilation_dim = n * r;

    let id_r = CMatrix::identity(r);
    let rep_images = t
        .domain()
        .basis()
        .iter()
        .map(|b| kron(&units.coordinates(b), &id_r))
        .collect();
    let rep = LinMap::with_shared_domain(t.shared_domain(), dilation_dim, rep_images)?;

    let mut w = CMatrix::zeros(dilation_dim, kraus.out_dim);
    for (l, k) in kraus.operators.iter().enumerate() {
        let mut e = CMatrix::zeros(r, 1);
        e.set(l, 0, crate::matcore::ONE);
        w += &kron(k, &e);
    }
    Ok(StinespringTriple {
        dilation_dim,
        rep,
        w,
    })
}

/// Kraus operators on the ambient space for a CP map defined only on a
/// factor `N ⊊ M_d`.
///
/// The matrix units `f_ab` of `N ≅ M_p` split the ambient space as
/// `C^p ⊗ C^q` through `Φ(e_a ⊗ ξ_l) = f_a0 ξ_l`, with `ξ` an orthonormal
/// basis of the range of `f_00`. The map `a ↦ T(Σ a_ab f_ab)` on `M_p` has
/// Kraus operators `L_j : C^d → C^p` from its Choi matrix over `f`, and each
/// run of `q` of them packs into one ambient operator
/// `K_c = Φ Σ_l L_{cq+l} ⊗ e_l`. Then `K_c^† (a ⊗ I) K_c = Σ_l L^† a L`, so
/// `Σ_c K_c^†(a ⊗ I)K_c = T(a ⊗ I)` with `⌈rank/q⌉` operators.
pub fn kraus_on_subfactor(t: &LinMap, tol: &Tolerance) -> Result<KrausSet> {
    let dom = t.domain();
    let d = dom.ambient_dim();
    if t.codomain_dim() != d {
        return Err(Error::ShapeMismatch(
            "map must land in the ambient algebra".into(),
        ));
    }
    let z = center(dom);
    if z.dim() != 1 {
        return Err(Error::NotFactor {
            center_dim: z.dim(),
        });
    }
    let p = (dom.dim() as f64).sqrt().round() as usize;
    let units = crate::staralg::matrix_units(dom, p)?;

    let ti = t.apply(&CMatrix::identity(d), tol)?;
    let lo = eig_hermitian_unchecked(&ti);
    let ti_norm = lo.max().abs().max(lo.min().abs());
    if ti_norm == 0.0 || lo.min() < -tol.threshold(ti_norm) || lo.max() > 1.0 + tol.threshold(1.0) {
        return Err(Error::PreconditionFailure(format!(
            "need 0 < T(I) <= I, T(I) has spectrum [{:.3e}, {:.3e}]",
            lo.min(),
            lo.max()
        )));
    }

    let local = kraus_from_choi(&choi(t, &units)?, tol)?;

    let q = d / p;
    let range = eig_hermitian_unchecked(units.unit(0, 0));
    let mut phi = CMatrix::zeros(d, d);
    for a in 0..p {
        for l in 0..q {
            let col = units.unit(a, 0).as_dmatrix() * range.vector(l);
            for (r, z) in col.iter().enumerate() {
                phi.set(r, a * q + l, *z);
            }
        }
    }
    let mut operators = Vec::new();
    for chunk in local.operators.chunks(q) {
        let mut stacked = CMatrix::zeros(d, d);
        for (l, op) in chunk.iter().enumerate() {
            for a in 0..p {
                for x in 0..d {
                    stacked.set(a * q + l, x, op.get(a, x));
                }
            }
        }
        operators.push(&phi * &stacked);
    }
    let kraus = KrausSet {
        operators,
        in_dim: d,
        out_dim: d,
    };

    let mut residual = 0.0f64;
    let mut scale = 0.0f64;
    for (b, img) in dom.basis().iter().zip(t.images()) {
        residual = residual.max(kraus.apply(b).dist(img));
        scale = scale.max(img.frobenius_norm());
    }
    if residual > tol.threshold(scale) {
        return Err(Error::ReconstructionFailure { residual });
    }
    Ok(kraus)
}

/// For each `A`, `(||Σ_j [K_j,A]^†[K_j,A]||, max_j ||[K_j, A]||)` in Frobenius
/// norm, maximized over `a`.
pub fn kraus_commutator_defect(kraus: &KrausSet, a: &[CMatrix]) -> (f64, f64) {
    let mut sum_worst = 0.0f64;
    let mut each_worst = 0.0f64;
    for x in a {
        let mut acc = CMatrix::zeros(x.cols(), x.cols());
        for k in &kraus.operators {
            let c = k.commutator(x);
            each_worst = each_worst.max(c.frobenius_norm());
            acc += &(c.adjoint() * &c);
        }
        sum_worst = sum_worst.max(acc.frobenius_norm());
    }
    (sum_worst, each_worst)
}
