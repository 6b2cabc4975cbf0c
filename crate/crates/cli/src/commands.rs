//! Building library objects from specs and running scenario commands.

use opalg::channels::{
    extension_candidate, general_choi, presets, relatively_local_check, werner_factorization_check,
    CertifyOptions,
};
use opalg::net::{
    corollary_demo, funnel_witness, microcausality_check, region_algebra, separated_independence,
};
use opalg::staralg::{
    block_structure, max_commutator, norm_multiplicativity_check, product_rank,
    zero_divisor_witness,
};
use opalg::{
    commutant, cp_check, extend_local, generate, is_positive_sampled, kraus_from_choi,
    kraus_on_subfactor, matrix_units, stinespring, theorem1_certify, CMatrix, Error, KrausSet,
    LinMap, MatrixUnits, RegionNet, StarAlgebra, Tolerance, Verdict,
};
use serde_json::{json, Value};

use crate::scenario::{AlgebraSpec, MapKind, MapSpec, NetDemo, Payload, Preset, Scenario};

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub cache: bool,
}

/// A command's outcome: its results object and whether every check passed.
pub struct Outcome {
    pub results: Value,
    pub pass: bool,
}

/// Residual bound for pass/fail checks on reconstructions and identities.
fn limit(tol: &Tolerance) -> f64 {
    10.0 * tol.threshold(1.0)
}

fn j<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

pub fn build_algebra(spec: &AlgebraSpec, tol: &Tolerance) -> opalg::Result<StarAlgebra> {
    match spec {
        AlgebraSpec::Generators {
            ambient_dim,
            generators,
        } => generate(generators, *ambient_dim, tol),
        AlgebraSpec::TensorFactor {
            num_sites,
            site_dim,
            sites,
        } => StarAlgebra::tensor_factor(*num_sites, *site_dim, sites),
        AlgebraSpec::Diagonal(d) => Ok(StarAlgebra::diagonal(*d)),
        AlgebraSpec::Full(d) => Ok(StarAlgebra::full(*d)),
        AlgebraSpec::Scalars(d) => Ok(StarAlgebra::scalars(*d)),
    }
}

pub fn build_map(spec: &MapSpec, tol: &Tolerance) -> opalg::Result<LinMap> {
    let t = match &spec.kind {
        MapKind::Preset { preset, dim } => match preset {
            Preset::Identity => presets::identity(*dim),
            Preset::Transpose => presets::transpose(*dim),
            Preset::Depolarizing => presets::depolarizing(*dim),
        },
        MapKind::PartialTranspose { a, b } => presets::partial_transpose(*a, *b),
        MapKind::Kraus(ops) => presets::kraus_map(&KrausSet::new(ops.clone())?)?,
        MapKind::ConjugateUnitary(u) => presets::unitary_conjugation(u, tol)?,
        MapKind::BasisImages { dim, images } => {
            LinMap::new(StarAlgebra::full(*dim), images[0].rows(), images.clone())?
        }
    };
    match &spec.on {
        None => Ok(t),
        Some(on) => {
            let on = build_algebra(on, tol)?;
            let p = t.domain().ambient_dim();
            if on.dim() != p * p {
                return Err(Error::PreconditionFailure(format!(
                    "map.on has dimension {}, but the map acts on M_{p}",
                    on.dim()
                )));
            }
            let units = matrix_units(&on, p)?;
            presets::transport(&t, &units, &on, tol)
        }
    }
}

/// Matrix units for a factor domain, standard ones when the domain is all of `M_d`.
fn factor_units(domain: &StarAlgebra) -> opalg::Result<MatrixUnits> {
    let d = domain.ambient_dim();
    if domain.dim() == d * d {
        return Ok(MatrixUnits::standard(d));
    }
    let n = (domain.dim() as f64).sqrt().round() as usize;
    if n * n != domain.dim() {
        return Err(Error::PreconditionFailure(format!(
            "domain of dimension {} is not a full matrix algebra",
            domain.dim()
        )));
    }
    matrix_units(domain, n)
}

/// Every library object a scenario needs, built without running the command.
pub enum Prepared {
    Algebra(StarAlgebra),
    Pair(StarAlgebra, StarAlgebra),
    Map(LinMap),
    Local {
        t: LinMap,
        n2: StarAlgebra,
        m: StarAlgebra,
    },
    Net(RegionNet),
}

pub fn prepare(s: &Scenario, opts: Options) -> opalg::Result<Prepared> {
    let tol = &s.tol;
    Ok(match &s.payload {
        Payload::Analyze { algebra } | Payload::Commutant { algebra } => {
            Prepared::Algebra(build_algebra(algebra, tol)?)
        }
        Payload::Independence { a1, a2, .. } => {
            let (a1, a2) = (build_algebra(a1, tol)?, build_algebra(a2, tol)?);
            if a1.ambient_dim() != a2.ambient_dim() {
                return Err(Error::ShapeMismatch(
                    "a1 and a2 live in different ambient spaces".into(),
                ));
            }
            Prepared::Pair(a1, a2)
        }
        Payload::CpCheck { map, .. } | Payload::Kraus { map } | Payload::Stinespring { map } => {
            Prepared::Map(build_map(map, tol)?)
        }
        Payload::Extend { map, n2, m } | Payload::CertifyTheorem1 { map, n2, m, .. } => {
            let t = build_map(map, tol)?;
            let n2 = build_algebra(n2, tol)?;
            let m = match m {
                Some(m) => build_algebra(m, tol)?,
                None => t.domain().clone(),
            };
            if n2.ambient_dim() != t.domain().ambient_dim() || m.ambient_dim() != n2.ambient_dim() {
                return Err(Error::ShapeMismatch(
                    "map, n2 and m must share the ambient space".into(),
                ));
            }
            Prepared::Local { t, n2, m }
        }
        Payload::NetDemo {
            num_sites,
            site_dim,
            ..
        } => Prepared::Net(RegionNet::new(*num_sites, *site_dim)?.with_cache(opts.cache)),
    })
}

pub fn execute(s: &Scenario, prepared: Prepared) -> opalg::Result<Outcome> {
    let tol = &s.tol;
    let lim = limit(tol);
    match (&s.payload, prepared) {
        (Payload::Analyze { .. }, Prepared::Algebra(a)) => {
            let (adjoint, product, unit) = a.closure_residuals();
            let com = commutant(&a);
            let center = opalg::staralg::intersect(&a, &com)?;
            Ok(Outcome {
                results: json!({
                    "ambient_dim": a.ambient_dim(),
                    "dim": a.dim(),
                    "closure_residuals": {"adjoint": adjoint, "product": product, "unit": unit},
                    "block_structure": j(&block_structure(&a)?),
                    "commutant_dim": com.dim(),
                    "center_dim": center.dim(),
                    "is_factor": center.dim() == 1,
                }),
                pass: adjoint.max(product).max(unit) <= lim,
            })
        }
        (Payload::Commutant { .. }, Prepared::Algebra(a)) => {
            let com = commutant(&a);
            let back = commutant(&com);
            let residual = a.inclusion_residual(&back).max(back.inclusion_residual(&a));
            Ok(Outcome {
                results: json!({
                    "dim": a.dim(),
                    "commutant_dim": com.dim(),
                    "bicommutant_dim": back.dim(),
                    "bicommutant_residual": residual,
                    "commutant_basis": j(&com.basis()),
                }),
                pass: back.dim() == a.dim() && residual <= lim,
            })
        }
        (Payload::Independence { samples, .. }, Prepared::Pair(a1, a2)) => {
            let commutator = max_commutator(&a1, &a2);
            let witness = zero_divisor_witness(&a1, &a2, tol)?;
            let independent = witness.is_none();
            let deviation = norm_multiplicativity_check(&a1, &a2, *samples, s.seed, tol)?;
            let (rank, full) = product_rank(&a1, &a2);
            Ok(Outcome {
                results: json!({
                    "max_commutator": commutator,
                    "schlieder_independent": independent,
                    "product_rank": rank,
                    "product_rank_full": full,
                    "norm_deviation": deviation,
                    "witness": witness.map(|(p, q)| json!({"p": j(&p), "q": j(&q)})),
                }),
                pass: independent,
            })
        }
        (
            Payload::CpCheck {
                positivity_trials, ..
            },
            Prepared::Map(t),
        ) => {
            let report = cp_check(&t, tol)?;
            let eigenvalues = general_choi(&t)?.eigenvalues();
            let positivity = is_positive_sampled(&t, *positivity_trials, s.seed, tol)?;
            Ok(Outcome {
                results: json!({
                    "completely_positive": report.completely_positive,
                    "choi_min_eigenvalue": report.min_eigenvalue,
                    "choi_dim": report.choi_dim,
                    "choi_eigenvalues": eigenvalues,
                    "positivity": j(&positivity),
                }),
                pass: report.completely_positive,
            })
        }
        (Payload::Kraus { .. }, Prepared::Map(t)) => {
            let d = t.domain().ambient_dim();
            let kraus = if t.domain().dim() == d * d {
                kraus_from_choi(&general_choi(&t)?, tol)?
            } else {
                kraus_on_subfactor(&t, tol)?
            };
            let ti = t.apply(&CMatrix::identity(d), tol)?;
            let gram_residual = kraus.gram_sum().dist(&ti);
            let reconstruction = t
                .domain()
                .basis()
                .iter()
                .zip(t.images())
                .map(|(b, img)| kraus.apply(b).dist(img))
                .fold(0.0f64, f64::max);
            Ok(Outcome {
                results: json!({
                    "count": kraus.len(),
                    "operators": j(&kraus.operators),
                    "gram_residual": gram_residual,
                    "reconstruction_residual": reconstruction,
                }),
                pass: gram_residual <= lim && reconstruction <= lim,
            })
        }
        (Payload::Stinespring { .. }, Prepared::Map(t)) => {
            let units = factor_units(t.domain())?;
            let st = stinespring(&t, &units, tol)?;
            let reconstruction = st.reconstruction_residual(&t, tol)?;
            let representation = st.representation_residual(tol)?;
            Ok(Outcome {
                results: json!({
                    "dilation_dim": st.dilation_dim,
                    "w": j(&st.w),
                    "reconstruction_residual": reconstruction,
                    "representation_residual": representation,
                }),
                pass: reconstruction <= lim && representation <= lim,
            })
        }
        (Payload::Extend { .. }, Prepared::Local { t, n2, m }) => {
            let tp = extend_local(&t, &n2, &m, tol)?;
            let rl = relatively_local_check(&tp, &m, &n2, tol)?;
            let werner = werner_factorization_check(&tp, &m, &n2, tol)?;
            let agreement = tp.distance_on(&t, t.domain(), tol)?;
            Ok(Outcome {
                results: json!({
                    "extension_domain_dim": tp.domain().dim(),
                    "relative_locality": j(&rl),
                    "werner_residual": werner,
                    "agreement_residual": agreement,
                }),
                pass: rl.relatively_local && werner <= lim && agreement <= lim,
            })
        }
        (
            Payload::CertifyTheorem1 {
                n,
                canonical_candidate,
                samples,
                positivity_trials,
                ..
            },
            Prepared::Local { t, n2, m },
        ) => {
            let tp = if *canonical_candidate {
                extension_candidate(&t, &n2, &m, tol)?
            } else {
                extend_local(&t, &n2, &m, tol)?
            };
            let opts = CertifyOptions {
                samples: *samples,
                positivity_trials: *positivity_trials,
                seed: s.seed,
                tol: *tol,
            };
            let cert = theorem1_certify(&t, &tp, *n, &n2, &opts)?;
            Ok(Outcome {
                pass: cert.verdict == Verdict::CertifiedCP,
                results: j(&cert),
            })
        }
        (Payload::NetDemo { demo, .. }, Prepared::Net(net)) => net_demo(&net, demo, tol, lim),
        _ => Err(Error::Internal(
            "payload and prepared objects disagree".into(),
        )),
    }
}

fn net_demo(net: &RegionNet, demo: &NetDemo, tol: &Tolerance, lim: f64) -> opalg::Result<Outcome> {
    match demo {
        NetDemo::Microcausality { r1, r2 } => {
            let c = microcausality_check(net, r1, r2)?;
            Ok(Outcome {
                results: json!({"max_commutator": c}),
                pass: c <= lim,
            })
        }
        NetDemo::Separation { r1, r2 } => {
            let rep = separated_independence(net, r1, r2, tol)?;
            Ok(Outcome {
                pass: rep.schlieder && rep.split_verified,
                results: j(&rep),
            })
        }
        NetDemo::Funnel { inner, outer, m } => {
            let w = funnel_witness(net, inner, outer, m.as_ref())?;
            let pass = w.is_factor && w.inner_residual <= lim && w.outer_residual <= lim;
            Ok(Outcome {
                results: j(&w),
                pass,
            })
        }
        NetDemo::Corollary { regions, map } => {
            let t = build_map(map, tol)?;
            let (t, extended) = if t.domain().ambient_dim() == net.ambient_dim() {
                (t, false)
            } else {
                let n1 = region_algebra(net, &regions.outer1)?;
                let n2 = region_algebra(net, &regions.outer2)?;
                let p = t.domain().ambient_dim();
                if n1.dim() != p * p {
                    return Err(Error::PreconditionFailure(format!(
                        "map acts on M_{p}, but N(outer1) has dimension {}",
                        n1.dim()
                    )));
                }
                let local = presets::transport(&t, &matrix_units(&n1, p)?, &n1, tol)?;
                (extend_local(&local, &n2, &n1, tol)?, true)
            };
            let rep = corollary_demo(net, regions, &t, tol)?;
            let pass = rep.unital_residual <= lim
                && rep.reconstruction_residual <= lim
                && rep.max_commutator <= lim
                && rep.commutator_defect <= lim;
            let mut results = j(&rep);
            if let Value::Object(m) = &mut results {
                m.insert("extended".into(), Value::Bool(extended));
            }
            Ok(Outcome { results, pass })
        }
    }
}
