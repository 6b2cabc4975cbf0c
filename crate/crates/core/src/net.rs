//! A local net on a finite spin chain: each set of sites gets the algebra of
//! operators acting trivially off those sites.
//!
//! Disjoint site sets play the role of space-like separated regions and
//! strict containment the role of one region lying inside another.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::channels::{
    kraus_commutator_defect, kraus_on_subfactor, relatively_local_check, KrausSet, LinMap,
};
use crate::error::{Error, Result};
use crate::matcore::{CMatrix, Tolerance};
use crate::staralg::{is_factor, max_commutator, schlieder_independent, split_via, StarAlgebra};

/// Largest ambient dimension a net may have unless configured otherwise.
pub const DEFAULT_CAP: usize = 4096;

/// A sorted, duplicate-free set of site indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "Vec<usize>", into = "Vec<usize>")]
pub struct Region(Vec<usize>);

impl Region {
    pub fn new(sites: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = sites.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Region(v)
    }

    pub fn empty() -> Self {
        Region(Vec::new())
    }

    pub fn sites(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, site: usize) -> bool {
        self.0.binary_search(&site).is_ok()
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.0.iter().all(|&s| other.contains(s))
    }

    pub fn is_strict_subset(&self, other: &Region) -> bool {
        self.is_subset(other) && self.len() < other.len()
    }

    pub fn overlap(&self, other: &Region) -> Vec<usize> {
        self.0
            .iter()
            .copied()
            .filter(|&s| other.contains(s))
            .collect()
    }

    pub fn union(&self, other: &Region) -> Region {
        Region::new(self.0.iter().chain(&other.0).copied())
    }
}

impl From<Vec<usize>> for Region {
    fn from(v: Vec<usize>) -> Self {
        Region::new(v)
    }
}

impl From<Region> for Vec<usize> {
    fn from(r: Region) -> Self {
        r.0
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// A chain of `num_sites` sites of dimension `site_dim`.
pub struct RegionNet {
    num_sites: usize,
    site_dim: usize,
    cache: Option<Mutex<HashMap<Region, Arc<StarAlgebra>>>>,
}

impl fmt::Debug for RegionNet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RegionNet")
            .field("num_sites", &self.num_sites)
            .field("site_dim", &self.site_dim)
            .field("cached", &self.cache.is_some())
            .finish()
    }
}

impl RegionNet {
    pub fn new(num_sites: usize, site_dim: usize) -> Result<Self> {
        Self::with_cap(num_sites, site_dim, DEFAULT_CAP)
    }

    pub fn with_cap(num_sites: usize, site_dim: usize, cap: usize) -> Result<Self> {
        if num_sites == 0 || site_dim == 0 {
            return Err(Error::InvalidMatrix(
                "a net needs at least one site of positive dimension".into(),
            ));
        }
        let dim = site_dim
            .checked_pow(num_sites as u32)
            .filter(|&d| d <= cap)
            .ok_or(Error::NetTooLarge {
                dim: site_dim.saturating_pow(num_sites as u32),
                cap,
            })?;
        debug_assert!(dim <= cap);
        Ok(RegionNet {
            num_sites,
            site_dim,
            cache: Some(Mutex::new(HashMap::new())),
        })
    }

    /// Turns the region-algebra cache on or off. Results do not depend on it.
    pub fn with_cache(mut self, enabled: bool) -> Self {
        self.cache = enabled.then(|| Mutex::new(HashMap::new()));
        self
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.site_dim.pow(self.num_sites as u32)
    }

    pub fn check(&self, r: &Region) -> Result<()> {
        match r.sites().iter().find(|&&s| s >= self.num_sites) {
            Some(&site) => Err(Error::RegionOutOfBounds {
                site,
                num_sites: self.num_sites,
            }),
            None => Ok(()),
        }
    }

    /// Every region, as site subsets in order of their bitmask.
    pub fn all_regions(&self) -> Vec<Region> {
        (0..1usize << self.num_sites)
            .map(|mask| Region::new((0..self.num_sites).filter(|s| mask >> s & 1 == 1)))
            .collect()
    }
}

/// The algebra `⊗_{s ∈ r} M_k ⊗ I` of region `r`.
pub fn region_algebra(net: &RegionNet, r: &Region) -> Result<Arc<StarAlgebra>> {
    net.check(r)?;
    let build = || StarAlgebra::tensor_factor(net.num_sites, net.site_dim, r.sites()).map(Arc::new);
    let Some(cache) = &net.cache else {
        return build();
    };
    if let Some(hit) = cache.lock().expect("cache lock").get(r) {
        return Ok(Arc::clone(hit));
    }
    let alg = build()?;
    cache
        .lock()
        .expect("cache lock")
        .entry(r.clone())
        .or_insert_with(|| Arc::clone(&alg));
    Ok(alg)
}

fn require_disjoint(r1: &Region, r2: &Region) -> Result<()> {
    let overlap = r1.overlap(r2);
    if overlap.is_empty() {
        Ok(())
    } else {
        Err(Error::DisjointnessFailure { overlap })
    }
}

/// Largest `||[b1, b2]||` over basis pairs of two disjoint regions.
pub fn microcausality_check(net: &RegionNet, r1: &Region, r2: &Region) -> Result<f64> {
    net.check(r1)?;
    net.check(r2)?;
    require_disjoint(r1, r2)?;
    Ok(max_commutator(
        &*region_algebra(net, r1)?,
        &*region_algebra(net, r2)?,
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct FunnelWitness {
    pub region: Region,
    #[serde(skip)]
    pub algebra: Arc<StarAlgebra>,
    /// Span residual of `N(inner)` inside the witness.
    pub inner_residual: f64,
    /// Span residual of the witness inside `N(outer)`.
    pub outer_residual: f64,
    pub is_factor: bool,
}

/// An interpolating factor `N(inner) ⊆ N(m) ⊆ N(outer)`. `m` defaults to
/// `inner`, whose algebra is already a factor on a lattice.
pub fn funnel_witness(
    net: &RegionNet,
    inner: &Region,
    outer: &Region,
    m: Option<&Region>,
) -> Result<FunnelWitness> {
    net.check(inner)?;
    net.check(outer)?;
    if !inner.is_strict_subset(outer) {
        return Err(Error::NotStrictlyNested);
    }
    let region = m.cloned().unwrap_or_else(|| inner.clone());
    net.check(&region)?;
    if !inner.is_subset(&region) || !region.is_subset(outer) {
        return Err(Error::PreconditionFailure(format!(
            "witness region {region} is not between {inner} and {outer}"
        )));
    }
    let algebra = region_algebra(net, &region)?;
    let inner_residual = algebra.inclusion_residual(&*region_algebra(net, inner)?);
    let outer_residual = region_algebra(net, outer)?.inclusion_residual(&algebra);
    let is_factor = is_factor(&algebra);
    Ok(FunnelWitness {
        region,
        algebra,
        inner_residual,
        outer_residual,
        is_factor,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SeparationReport {
    pub schlieder: bool,
    pub split_witness: Region,
    pub split_verified: bool,
}

/// Schlieder independence of two disjoint regions, and the split property
/// witnessed by the first region's own algebra.
pub fn separated_independence(
    net: &RegionNet,
    r1: &Region,
    r2: &Region,
    tol: &Tolerance,
) -> Result<SeparationReport> {
    net.check(r1)?;
    net.check(r2)?;
    require_disjoint(r1, r2)?;
    let a1 = region_algebra(net, r1)?;
    let a2 = region_algebra(net, r2)?;
    Ok(SeparationReport {
        schlieder: schlieder_independent(&a1, &a2, tol)?,
        split_witness: r1.clone(),
        split_verified: split_via(&a1, &a2, &a1, tol),
    })
}

/// The four regions of a Kraus demonstration: `inner_i ⊊ outer_i`, with the
/// outer regions disjoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorollaryRegions {
    pub inner1: Region,
    pub outer1: Region,
    pub inner2: Region,
    pub outer2: Region,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorollaryReport {
    pub interpolating_region: Region,
    pub kraus: KrausSet,
    /// `||Σ K^†K - I||`.
    pub unital_residual: f64,
    /// `max ||Σ K^† b K - T(b)||` over the interpolating algebra's basis.
    pub reconstruction_residual: f64,
    /// `max ||[K_j, b]||` over Kraus operators and the basis of `N(inner2)`.
    pub max_commutator: f64,
    /// `max ||Σ_j [K_j, b]^†[K_j, b]||` over the basis of `N(inner2)`.
    pub commutator_defect: f64,
}

/// Kraus operators for a relatively local operation, all commuting with
/// `N(inner2)`.
///
/// `T` must be relatively local in `N(outer1)` with respect to `N(outer2)`.
/// It is restricted to the factor `N(inner1 ∪ inner2)`, which is then handed
/// to [`kraus_on_subfactor`]. Since `T` is unital and fixes `N(inner2)`,
/// `Σ [K_j, A]^†[K_j, A] = T(A^†A) - A^†T(A) - T(A^†)A + A^†T(I)A = 0` there.
pub fn corollary_demo(
    net: &RegionNet,
    regions: &CorollaryRegions,
    t: &LinMap,
    tol: &Tolerance,
) -> Result<CorollaryReport> {
    let CorollaryRegions {
        inner1,
        outer1,
        inner2,
        outer2,
    } = regions;
    for r in [inner1, outer1, inner2, outer2] {
        net.check(r)?;
    }
    if !inner1.is_strict_subset(outer1) || !inner2.is_strict_subset(outer2) {
        return Err(Error::NotStrictlyNested);
    }
    require_disjoint(outer1, outer2)?;
    if t.domain().ambient_dim() != net.ambient_dim() {
        return Err(Error::ShapeMismatch(
            "map does not act on the net's ambient space".into(),
        ));
    }

    let rl = relatively_local_check(
        t,
        &*region_algebra(net, outer1)?,
        &*region_algebra(net, outer2)?,
        tol,
    )?;
    if !rl.relatively_local {
        return Err(Error::PreconditionFailure(format!(
            "T is not relatively local in {outer1} with respect to {outer2} \
             (cp {}, unital {:.3e}, N1 {:.3e}, N2 {:.3e})",
            rl.completely_positive, rl.unital_residual, rl.n1_residual, rl.n2_residual
        )));
    }

    let interpolating_region = inner1.union(inner2);
    let factor = region_algebra(net, &interpolating_region)?;
    let restricted = t.restrict(&factor, tol)?;
    let kraus = kraus_on_subfactor(&restricted, tol)?;

    let d = net.ambient_dim();
    let unital_residual = kraus.gram_sum().dist(&CMatrix::identity(d));
    let mut reconstruction_residual = 0.0f64;
    for (b, img) in factor.basis().iter().zip(restricted.images()) {
        reconstruction_residual = reconstruction_residual.max(kraus.apply(b).dist(img));
    }
    let (commutator_defect, max_commutator) =
        kraus_commutator_defect(&kraus, region_algebra(net, inner2)?.basis());
    Ok(CorollaryReport {
        interpolating_region,
        kraus,
        unital_residual,
        reconstruction_residual,
        max_commutator,
        commutator_defect,
    })
}
