//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use opalg::channels::{
    extend_local, extension_candidate, kraus_from_choi, presets, stinespring, theorem1_certify,
    werner_factorization_check, CertifyOptions, Verdict,
};
use opalg::matcore::{eig_hermitian, kron, op_norm};
use opalg::net::{corollary_demo, region_algebra, CorollaryRegions, Region, RegionNet};
use opalg::random;
use opalg::staralg::{
    commutant, generate, matrix_units, max_commutator, norm_multiplicativity_check,
    schlieder_independent, zero_divisor_witness, MatrixUnits, StarAlgebra,
};
use opalg::{
    choi, is_completely_positive, is_positive_sampled, CMatrix, KrausSet, LinMap, Tolerance, C64,
};
use rand::seq::IndexedRandom;
use rand::Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn tol() -> Tolerance {
    Tolerance::default()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, budget_s: u64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < budget_s as f64, || {
        format!("took {:.1}s, budget {budget_s}s", elapsed.as_secs_f64())
    })
}

/// Two random generators of `U (⊕ M_{n_i} ⊗ I_{m_i}) U^†`, and the expected dimension.
fn block_generators(d: usize, rng: &mut impl Rng) -> (Vec<CMatrix>, usize) {
    let mut blocks = Vec::new();
    let mut left = d;
    while left > 0 {
        let size = rng.random_range(1..=left);
        let divisors: Vec<usize> = (1..=size).filter(|n| size % n == 0).collect();
        let n = *divisors.choose(rng).unwrap();
        blocks.push((n, size / n));
        left -= size;
    }
    let u = random::unitary(d, rng);
    let mut gens = Vec::new();
    for _ in 0..2 {
        let mut g = CMatrix::zeros(d, d);
        let mut offset = 0;
        for (i, &(n, m)) in blocks.iter().enumerate() {
            let local =
                kron(&random::ginibre(n, n, rng), &CMatrix::identity(m)).scale_real(1.0 + i as f64);
            for r in 0..n * m {
                for c in 0..n * m {
                    g.set(offset + r, offset + c, local.get(r, c));
                }
            }
            offset += n * m;
        }
        gens.push(u.adjoint() * g * &u);
    }
    (gens, blocks.iter().map(|(n, _)| n * n).sum())
}

fn criterion_bicommutant() -> Check {
    let start = Instant::now();
    let dims = [2usize, 3, 4, 6, 8];
    let mut worst = 0.0f64;
    for i in 0..50 {
        let d = dims[i % dims.len()];
        let mut rng = random::rng(1000 + i as u64);
        let (gens, expected) = block_generators(d, &mut rng);
        let a = generate(&gens, d, &tol()).map_err(|e| e.to_string())?;
        let back = commutant(&commutant(&a));
        let r = a.inclusion_residual(&back).max(back.inclusion_residual(&a));
        ensure(back.dim() == a.dim(), || {
            format!("set {i}: bicommutant dim {} vs {}", back.dim(), a.dim())
        })?;
        // Generic generators reach the whole block algebra, except when two
        // one-dimensional blocks happen to coincide, which has probability zero.
        ensure(a.dim() == expected, || {
            format!("set {i}: generated dim {} vs {expected}", a.dim())
        })?;
        ensure(r < 1e-8, || format!("set {i}: span residual {r:.3e}"))?;
        worst = worst.max(r);
    }
    within(start.elapsed(), 60)?;
    Ok(format!(
        "50 sets, max span residual {worst:.2e}, {:.2}s",
        start.elapsed().as_secs_f64()
    ))
}

/// Kraus operators normalized so that `||Σ K^†K|| = 1`.
fn random_cp(d: usize, count: usize, rng: &mut impl Rng) -> KrausSet {
    let raw = KrausSet::new((0..count).map(|_| random::ginibre(d, d, rng)).collect()).unwrap();
    let s = 1.0 / op_norm(&raw.gram_sum()).unwrap().sqrt();
    KrausSet::new(raw.operators.iter().map(|k| k.scale_real(s)).collect()).unwrap()
}

fn criterion_roundtrip() -> Check {
    let (mut kr, mut st, mut gram) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..100u64 {
        let mut rng = random::rng(2000 + i);
        let d = rng.random_range(1..=4usize);
        let count = rng.random_range(1..=5usize);
        let k = random_cp(d, count, &mut rng);
        let t = presets::kraus_map(&k).map_err(|e| e.to_string())?;
        let units = MatrixUnits::standard(d);
        let back = kraus_from_choi(&choi(&t, &units).map_err(|e| e.to_string())?, &tol())
            .map_err(|e| e.to_string())?;
        let mut r = 0.0f64;
        for j in 0..d {
            for l in 0..d {
                let e = CMatrix::unit(d, j, l);
                r = r.max(back.apply(&e).dist(&k.apply(&e)));
            }
        }
        let s = stinespring(&t, &units, &tol()).map_err(|e| e.to_string())?;
        let sr = s
            .reconstruction_residual(&t, &tol())
            .map_err(|e| e.to_string())?;
        let ti = t
            .apply(&CMatrix::identity(d), &tol())
            .map_err(|e| e.to_string())?;
        let g = back.gram_sum().dist(&ti);
        ensure(r < 1e-8 && sr < 1e-8 && g < 1e-9, || {
            format!(
                "map {i} (d={d}, {count} ops): kraus {r:.3e}, stinespring {sr:.3e}, gram {g:.3e}"
            )
        })?;
        kr = kr.max(r);
        st = st.max(sr);
        gram = gram.max(g);
    }
    Ok(format!(
        "100 maps, kraus {kr:.2e}, stinespring {st:.2e}, gram {gram:.2e}"
    ))
}

/// Partial transpose on the second factor of `M_2 ⊗ M_2`, by index permutation.
fn brute_partial_transpose(rho: &CMatrix) -> CMatrix {
    CMatrix::from_fn(4, 4, |r, c| {
        let (i, j) = (r / 2, r % 2);
        let (k, l) = (c / 2, c % 2);
        rho.get(i * 2 + l, k * 2 + j)
    })
}

fn criterion_transpose() -> Check {
    let t = presets::transpose(2);
    let pos = is_positive_sampled(&t, 1000, 3, &tol()).map_err(|e| e.to_string())?;
    ensure(pos.positive && pos.witness.is_none(), || {
        format!("transpose flagged non-positive: {}", pos.min_eigenvalue)
    })?;
    let cp =
        is_completely_positive(&t, &MatrixUnits::standard(2), &tol()).map_err(|e| e.to_string())?;
    ensure(!cp, || "transpose reported completely positive".into())?;
    let m = choi(&t, &MatrixUnits::standard(2))
        .map_err(|e| e.to_string())?
        .min_eigenvalue();
    ensure((m + 1.0).abs() <= 1e-9, || {
        format!("Choi min eigenvalue {m}")
    })?;

    let phi = presets::max_entangled_projector(2);
    let lib = presets::partial_transpose(2, 2)
        .apply(&phi, &tol())
        .map_err(|e| e.to_string())?;
    let brute = brute_partial_transpose(&phi);
    ensure(lib.dist(&brute) < 1e-12, || {
        format!(
            "library and index partial transposes differ by {:.3e}",
            lib.dist(&brute)
        )
    })?;
    // M^2 = I/4 pins the spectrum to {±1/2}; the singlet then attains -1/2.
    let square = (&brute * &brute).dist(&CMatrix::identity(4).scale_real(0.25));
    ensure(square < 1e-12, || format!("|M^2 - I/4| = {square:.3e}"))?;
    let s = 1.0 / 2f64.sqrt();
    let singlet = CMatrix::from_fn(4, 1, |r, _| C64::new([0.0, s, -s, 0.0][r], 0.0));
    let image = &brute * &singlet;
    let rayleigh = (singlet.adjoint() * &image).get(0, 0).re;
    let eig_residual = image.dist(&singlet.scale_real(rayleigh));
    ensure(
        (rayleigh + 0.5).abs() < 1e-9 && eig_residual < 1e-12,
        || format!("singlet Rayleigh quotient {rayleigh}, eigen residual {eig_residual:.3e}"),
    )?;
    let lib_min = eig_hermitian(&lib, &tol())
        .map_err(|e| e.to_string())?
        .min();
    ensure((lib_min + 0.5).abs() < 1e-9, || {
        format!("partial transpose min eigenvalue {lib_min}")
    })?;
    Ok(format!(
        "positive over 1000 probes, Choi min {m:.12}, partial transpose min {lib_min:.12}"
    ))
}

fn inv_sqrt(s: &CMatrix) -> CMatrix {
    let eig = eig_hermitian(s, &tol()).unwrap();
    let n = s.rows();
    let mut out = CMatrix::zeros(n, n);
    for (i, &l) in eig.values.iter().enumerate() {
        let v = CMatrix::from_fn(n, 1, |r, _| eig.vectors.get(r, i));
        out += &(&v * v.adjoint()).scale_real(1.0 / l.sqrt());
    }
    out
}

/// A random unital CP map on `M_d`: Kraus operators rescaled by `S^{-1/2}`.
fn random_unital(d: usize, count: usize, rng: &mut impl Rng) -> LinMap {
    let raw = KrausSet::new((0..count).map(|_| random::ginibre(d, d, rng)).collect()).unwrap();
    let fix = inv_sqrt(&raw.gram_sum());
    presets::kraus_map(&KrausSet::new(raw.operators.iter().map(|k| k * &fix).collect()).unwrap())
        .unwrap()
}

fn on_first_qubit(t: &LinMap, n1: &StarAlgebra) -> Result<LinMap, String> {
    let units = matrix_units(n1, 2).map_err(|e| e.to_string())?;
    presets::transport(t, &units, n1, &tol()).map_err(|e| e.to_string())
}

fn criterion_theorem() -> Check {
    let start = Instant::now();
    let n1 = StarAlgebra::tensor_factor(2, 2, &[0]).map_err(|e| e.to_string())?;
    let n2 = StarAlgebra::tensor_factor(2, 2, &[1]).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for i in 0..20u64 {
        let mut rng = random::rng(4000 + i);
        let count = 1 + (i as usize % 4);
        let t = on_first_qubit(&random_unital(2, count, &mut rng), &n1)?;
        let tp = extend_local(&t, &n2, &n1, &tol()).map_err(|e| format!("map {i}: {e}"))?;
        let opts = CertifyOptions {
            seed: i,
            ..CertifyOptions::default()
        };
        let c = theorem1_certify(&t, &tp, 2, &n2, &opts).map_err(|e| format!("map {i}: {e}"))?;
        ensure(c.verdict == Verdict::CertifiedCP, || {
            format!("map {i}: verdict {:?}", c.verdict)
        })?;
        let r = c.cp1.max(c.cp2).max(c.cp3);
        ensure(r < 1e-8, || {
            format!(
                "map {i}: cp residuals {:.3e} {:.3e} {:.3e}",
                c.cp1, c.cp2, c.cp3
            )
        })?;
        worst = worst.max(r);
    }
    let t = on_first_qubit(&presets::transpose(2), &n1)?;
    let tp = extension_candidate(&t, &n2, &n1, &tol()).map_err(|e| e.to_string())?;
    let c =
        theorem1_certify(&t, &tp, 2, &n2, &CertifyOptions::default()).map_err(|e| e.to_string())?;
    ensure(c.verdict == Verdict::ExtensionNotPositive, || {
        format!("transpose verdict {:?}", c.verdict)
    })?;
    within(start.elapsed(), 30)?;
    Ok(format!(
        "20 maps CertifiedCP (max cp residual {worst:.2e}), transpose candidate min {:.3}, {:.2}s",
        c.positivity.min_eigenvalue,
        start.elapsed().as_secs_f64()
    ))
}

fn criterion_werner() -> Check {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for (p, q) in [(2usize, 2usize), (2, 3), (3, 2)] {
        let d = p * q;
        let a = generate(
            &(0..p * p)
                .map(|x| kron(&CMatrix::unit(p, x / p, x % p), &CMatrix::identity(q)))
                .collect::<Vec<_>>(),
            d,
            &tol(),
        )
        .map_err(|e| e.to_string())?;
        let b = generate(
            &(0..q * q)
                .map(|x| kron(&CMatrix::identity(p), &CMatrix::unit(q, x / q, x % q)))
                .collect::<Vec<_>>(),
            d,
            &tol(),
        )
        .map_err(|e| e.to_string())?;
        for i in 0..10u64 {
            let mut rng = random::rng(5000 + i + 100 * d as u64);
            let local = random_unital(p, 1 + (i as usize % 3), &mut rng);
            let units = matrix_units(&a, p).map_err(|e| e.to_string())?;
            let t = presets::transport(&local, &units, &a, &tol()).map_err(|e| e.to_string())?;
            let tp = extend_local(&t, &b, &a, &tol()).map_err(|e| e.to_string())?;
            let r = werner_factorization_check(&tp, &a, &b, &tol()).map_err(|e| e.to_string())?;
            ensure(r < 1e-9, || {
                format!("M_{p} ⊗ M_{q} map {i}: residual {r:.3e}")
            })?;
            worst = worst.max(r);
            cases += 1;
        }
    }
    Ok(format!(
        "{cases} extensions, max factorization residual {worst:.2e}"
    ))
}

fn criterion_corollary() -> Check {
    let start = Instant::now();
    let net = RegionNet::new(4, 2).map_err(|e| e.to_string())?;
    let regions = CorollaryRegions {
        inner1: Region::new([0]),
        outer1: Region::new([0, 1]),
        inner2: Region::new([3]),
        outer2: Region::new([2, 3]),
    };
    let n1 = region_algebra(&net, &regions.outer1).map_err(|e| e.to_string())?;
    let n2 = region_algebra(&net, &regions.outer2).map_err(|e| e.to_string())?;
    let units = matrix_units(&n1, 4).map_err(|e| e.to_string())?;
    let mut rng = random::rng(6000);
    let maps = [
        presets::identity(4),
        presets::depolarizing(4),
        random_unital(4, 3, &mut rng),
    ];
    let mut worst = [0.0f64; 4];
    let mut counts = Vec::new();
    for (i, local) in maps.iter().enumerate() {
        let t = presets::transport(local, &units, &n1, &tol()).map_err(|e| e.to_string())?;
        let tp = extend_local(&t, &n2, &n1, &tol()).map_err(|e| e.to_string())?;
        let rep =
            corollary_demo(&net, &regions, &tp, &tol()).map_err(|e| format!("map {i}: {e}"))?;
        let r = [
            rep.unital_residual,
            rep.reconstruction_residual,
            rep.max_commutator,
            rep.commutator_defect,
        ];
        ensure(
            r[0] < 1e-9 && r[1] < 1e-8 && r[2] < 1e-8 && r[3] < 1e-8,
            || format!("map {i}: residuals {r:?}"),
        )?;
        for (w, x) in worst.iter_mut().zip(r) {
            *w = w.max(x);
        }
        counts.push(rep.kraus.len());
    }
    within(start.elapsed(), 120)?;
    Ok(format!(
        "d=16, Kraus counts {counts:?}, unital {:.2e}, reconstruction {:.2e}, commutator {:.2e}, defect {:.2e}, {:.2}s",
        worst[0],
        worst[1],
        worst[2],
        worst[3],
        start.elapsed().as_secs_f64()
    ))
}

/// Look for `X ∈ a2` with `pX = 0` for spectral projections `p` of random
/// Hermitian elements of `a1`, directly from the Gram matrix of `X ↦ pX`.
fn brute_force_zero_divisor(a1: &StarAlgebra, a2: &StarAlgebra) -> bool {
    let mut rng = random::rng(99);
    let d = a1.ambient_dim();
    for _ in 0..20 {
        let h = random::hermitian_element(a1, &mut rng);
        let eig = eig_hermitian(&h, &tol()).unwrap();
        let mut i = 0;
        while i < d {
            // Group numerically equal eigenvalues into one spectral projection.
            let mut p = CMatrix::zeros(d, d);
            let l = eig.values[i];
            while i < d && (eig.values[i] - l).abs() < 1e-8 {
                let v = CMatrix::from_fn(d, 1, |r, _| eig.vectors.get(r, i));
                p += &(&v * v.adjoint());
                i += 1;
            }
            let cols: Vec<CMatrix> = a2.basis().iter().map(|b| &p * b).collect();
            let gram = CMatrix::from_fn(cols.len(), cols.len(), |r, c| cols[r].hs_inner(&cols[c]));
            let ev = eig_hermitian(&gram, &tol()).unwrap();
            if ev.min() < 1e-10 * ev.max().max(1e-300) {
                return true;
            }
        }
    }
    false
}

fn criterion_independence() -> Check {
    let mut pairs: Vec<(String, StarAlgebra, StarAlgebra)> = Vec::new();
    for n in 1..=3usize {
        let net = RegionNet::new(n, 2).map_err(|e| e.to_string())?;
        for a in 0..1usize << n {
            for b in 0..1usize << n {
                let r1 = Region::new((0..n).filter(|s| a >> s & 1 == 1));
                let r2 = Region::new((0..n).filter(|s| b >> s & 1 == 1));
                let a1 = region_algebra(&net, &r1).map_err(|e| e.to_string())?;
                let a2 = region_algebra(&net, &r2).map_err(|e| e.to_string())?;
                if max_commutator(&a1, &a2) < 1e-12 {
                    pairs.push((format!("{n} sites {r1} {r2}"), (*a1).clone(), (*a2).clone()));
                }
            }
        }
    }
    let region_pairs = pairs.len();
    for d in [2usize, 4] {
        pairs.push((
            format!("diagonal {d}"),
            StarAlgebra::diagonal(d),
            StarAlgebra::diagonal(d),
        ));
    }
    let mut dependent = 0;
    let mut worst = 0.0f64;
    for (name, a1, a2) in &pairs {
        let independent = schlieder_independent(a1, a2, &tol()).map_err(|e| e.to_string())?;
        let brute = brute_force_zero_divisor(a1, a2);
        ensure(independent != brute, || {
            format!("{name}: rank test {independent}, brute force zero divisor {brute}")
        })?;
        let dev = norm_multiplicativity_check(a1, a2, 50, 5, &tol()).map_err(|e| e.to_string())?;
        let witness = zero_divisor_witness(a1, a2, &tol()).map_err(|e| e.to_string())?;
        if independent {
            ensure(dev < 1e-10 && witness.is_none(), || {
                format!("{name}: norm deviation {dev:.3e}")
            })?;
            worst = worst.max(dev);
        } else {
            let (p, q) = witness.ok_or_else(|| format!("{name}: no witness"))?;
            let prod = (&p * &q).max_abs();
            ensure(
                prod < 1e-10 && p.frobenius_norm() > 0.5 && q.frobenius_norm() > 0.5,
                || format!("{name}: witness product {prod:.3e}"),
            )?;
            dependent += 1;
        }
    }
    Ok(format!(
        "{region_pairs} commuting region pairs agree (max norm deviation {worst:.2e}), {dependent} dependent controls with witnesses"
    ))
}

fn corpus() -> Vec<PathBuf> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map(|rd| {
            rd.filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect()
        })
        .unwrap_or_default();
    files.sort();
    files
}

fn criterion_cli_determinism() -> Check {
    let files = corpus();
    ensure(!files.is_empty(), || "scenario corpus is empty".into())?;
    let bin = env!("CARGO_BIN_EXE_opalg");
    let run = |f: &PathBuf, extra: &[&str]| {
        Command::new(bin)
            .arg("run")
            .arg(f)
            .args(extra)
            .output()
            .map_err(|e| e.to_string())
    };
    for f in &files {
        let a = run(f, &[])?;
        let b = run(f, &["--format", "json"])?;
        let c = Command::new(bin)
            .args(["run", "--batch"])
            .arg(f)
            .env("OPALG_CACHE_DISABLE", "1")
            .output()
            .map_err(|e| e.to_string())?;
        let name = f.file_name().unwrap().to_string_lossy();
        ensure(a.status.code().is_some_and(|c| c <= 1), || {
            format!("{name}: exit {:?}", a.status.code())
        })?;
        ensure(!a.stdout.is_empty() && a.stdout == b.stdout, || {
            format!("{name}: reports differ between runs")
        })?;
        ensure(a.status.code() == c.status.code(), || {
            format!("{name}: batch exit code differs")
        })?;
    }
    let batch = Command::new(bin)
        .args(["run", "--batch"])
        .args(&files)
        .output()
        .map_err(|e| e.to_string())?;
    let again = Command::new(bin)
        .args(["run", "--batch"])
        .args(&files)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(batch.stdout == again.stdout, || {
        "batch reports differ between runs".into()
    })?;
    Ok(format!(
        "{} scenarios byte-identical across runs",
        files.len()
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("bicommutant suite", criterion_bicommutant),
        ("Choi/Kraus/Stinespring roundtrip", criterion_roundtrip),
        ("positive but not completely positive", criterion_transpose),
        ("complete positivity of local extensions", criterion_theorem),
        ("Werner factorization", criterion_werner),
        (
            "Kraus operators commuting with the fixed algebra",
            criterion_corollary,
        ),
        ("independence equivalence", criterion_independence),
        ("CLI determinism", criterion_cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let result = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
