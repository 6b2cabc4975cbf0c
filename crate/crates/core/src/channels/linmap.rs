use std::sync::Arc;

use crate::error::{Error, Result};
use crate::matcore::{CMatrix, Tolerance};
use crate::staralg::StarAlgebra;

/// A linear map from a [`StarAlgebra`] into `M_{codomain_dim}`, stored as the
/// images of the domain's orthonormal basis.
#[derive(Debug, Clone)]
pub struct LinMap {
    domain: Arc<StarAlgebra>,
    codomain_dim: usize,
    images: Vec<CMatrix>,
}

impl LinMap {
    pub fn new(domain: StarAlgebra, codomain_dim: usize, images: Vec<CMatrix>) -> Result<Self> {
        Self::with_shared_domain(Arc::new(domain), codomain_dim, images)
    }

    pub fn with_shared_domain(
        domain: Arc<StarAlgebra>,
        codomain_dim: usize,
        images: Vec<CMatrix>,
    ) -> Result<Self> {
        if images.len() != domain.dim() {
            return Err(Error::ShapeMismatch(format!(
                "{} images for a {}-dimensional domain",
                images.len(),
                domain.dim()
            )));
        }
        for m in &images {
            m.validate()?;
            if m.rows() != codomain_dim || m.cols() != codomain_dim {
                return Err(Error::ShapeMismatch(format!(
                    "image is {}x{}, codomain is {codomain_dim}x{codomain_dim}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        Ok(LinMap {
            domain,
            codomain_dim,
            images,
        })
    }

    /// Map defined by a closure evaluated on the domain basis.
    pub fn from_fn(
        domain: StarAlgebra,
        codomain_dim: usize,
        f: impl Fn(&CMatrix) -> CMatrix,
    ) -> Result<Self> {
        let images = domain.basis().iter().map(&f).collect();
        Self::new(domain, codomain_dim, images)
    }

    pub fn identity(domain: StarAlgebra) -> Self {
        let images = domain.basis().to_vec();
        let d = domain.ambient_dim();
        LinMap {
            domain: Arc::new(domain),
            codomain_dim: d,
            images,
        }
    }

    pub fn domain(&self) -> &StarAlgebra {
        &self.domain
    }

    pub fn shared_domain(&self) -> Arc<StarAlgebra> {
        Arc::clone(&self.domain)
    }

    pub fn codomain_dim(&self) -> usize {
        self.codomain_dim
    }

    pub fn images(&self) -> &[CMatrix] {
        &self.images
    }

    /// Linear extension of the basis images. Fails with
    /// [`Error::NotInDomain`] when `a` is not in the domain's span.
    pub fn apply(&self, a: &CMatrix, tol: &Tolerance) -> Result<CMatrix> {
        let d = self.domain.ambient_dim();
        if a.rows() != d || a.cols() != d {
            return Err(Error::ShapeMismatch(format!(
                "input is {}x{}, domain lives in M_{d}",
                a.rows(),
                a.cols()
            )));
        }
        let coeffs = self.domain.coefficients(a);
        let mut back = CMatrix::zeros(d, d);
        for (c, b) in coeffs.iter().zip(self.domain.basis()) {
            back.axpy(*c, b);
        }
        let residual = back.dist(a);
        if residual > tol.threshold(a.frobenius_norm()) {
            return Err(Error::NotInDomain { residual });
        }
        Ok(self.combine(coeffs.as_slice()))
    }

    /// `Σ c_i T(b_i)`.
    pub(crate) fn combine(&self, coeffs: &[crate::matcore::C64]) -> CMatrix {
        let mut out = CMatrix::zeros(self.codomain_dim, self.codomain_dim);
        for (c, img) in coeffs.iter().zip(&self.images) {
            if c.norm_sqr() > 0.0 {
                out.axpy(*c, img);
            }
        }
        out
    }

    /// Apply to the HS projection of `a` onto the domain, i.e. `T ∘ E`.
    pub(crate) fn apply_projected(&self, a: &CMatrix) -> CMatrix {
        let coeffs = self.domain.coefficients(a);
        self.combine(coeffs.as_slice())
    }

    /// Restriction to a subalgebra of the domain.
    pub fn restrict(&self, sub: &StarAlgebra, tol: &Tolerance) -> Result<LinMap> {
        let images = sub
            .basis()
            .iter()
            .map(|b| self.apply(b, tol))
            .collect::<Result<Vec<_>>>()?;
        LinMap::new(sub.clone(), self.codomain_dim, images)
    }

    /// `self ∘ inner`; `inner` must land in this map's domain.
    pub fn compose(&self, inner: &LinMap, tol: &Tolerance) -> Result<LinMap> {
        let images = inner
            .images
            .iter()
            .map(|m| self.apply(m, tol))
            .collect::<Result<Vec<_>>>()?;
        LinMap::with_shared_domain(inner.shared_domain(), self.codomain_dim, images)
    }

    /// `max ||T(b^†) - T(b)^†||` over the basis.
    pub fn hermiticity_residual(&self, tol: &Tolerance) -> Result<f64> {
        let mut worst = 0.0f64;
        for (b, img) in self.domain.basis().iter().zip(&self.images) {
            let tb = self.apply(&b.adjoint(), tol)?;
            worst = worst.max(tb.dist(&img.adjoint()));
        }
        Ok(worst)
    }

    /// `||T(I) - I||` (Frobenius). Requires a square map.
    pub fn unital_residual(&self, tol: &Tolerance) -> Result<f64> {
        let d = self.domain.ambient_dim();
        let ti = self.apply(&CMatrix::identity(d), tol)?;
        if self.codomain_dim != d {
            return Err(Error::ShapeMismatch(
                "unitality needs codomain = ambient".into(),
            ));
        }
        Ok(ti.dist(&CMatrix::identity(d)))
    }

    /// Largest distance between `self` and `other` on the basis of `on`.
    pub fn distance_on(&self, other: &LinMap, on: &StarAlgebra, tol: &Tolerance) -> Result<f64> {
        let mut worst = 0.0f64;
        for b in on.basis() {
            worst = worst.max(self.apply(b, tol)?.dist(&other.apply(b, tol)?));
        }
        Ok(worst)
    }
}
