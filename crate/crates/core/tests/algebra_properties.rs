use opalg::channels::{choi, is_completely_positive};
use opalg::matcore::{is_psd, kron, CMatrix, Tolerance};
use opalg::random;
use opalg::staralg::{
    block_structure, center, commutant, conditional_expectation, generate, matrix_units,
    norm_multiplicativity_check, schlieder_independent, split_via, zero_divisor_witness,
    MatrixUnits, StarAlgebra,
};
use proptest::prelude::*;
use rand::Rng;

fn tol() -> Tolerance {
    Tolerance::default()
}

/// Two random generators of `U (⊕ M_{n_i} ⊗ I_{m_i}) U^†` inside `M_d`.
fn block_generators(blocks: &[(usize, usize)], d: usize, rng: &mut impl Rng) -> Vec<CMatrix> {
    let u = random::unitary(d, rng);
    let mut gens = Vec::new();
    for _ in 0..2 {
        let mut g = CMatrix::zeros(d, d);
        let mut offset = 0;
        for (i, &(n, m)) in blocks.iter().enumerate() {
            let a = random::ginibre(n, n, rng);
            let local = kron(&a, &CMatrix::identity(m)).scale_real(1.0 + i as f64);
            for r in 0..n * m {
                for c in 0..n * m {
                    g.set(offset + r, offset + c, local.get(r, c));
                }
            }
            offset += n * m;
        }
        gens.push(u.adjoint() * g * &u);
    }
    gens
}

const SHAPES: &[(usize, &[(usize, usize)])] = &[
    (2, &[(1, 1), (1, 1)]),
    (3, &[(1, 2), (1, 1)]),
    (4, &[(2, 2)]),
    (4, &[(2, 1), (1, 2)]),
    (6, &[(2, 3)]),
    (6, &[(3, 1), (1, 2), (1, 1)]),
    (8, &[(2, 2), (2, 1), (1, 2)]),
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bicommutant_recovers_algebra(seed in any::<u64>(), shape in 0..SHAPES.len()) {
        let (d, blocks) = SHAPES[shape];
        let mut rng = random::rng(seed);
        let gens = block_generators(blocks, d, &mut rng);
        let alg = generate(&gens, d, &tol()).unwrap();
        let back = commutant(&commutant(&alg));
        prop_assert_eq!(back.dim(), alg.dim());
        prop_assert!(alg.inclusion_residual(&back) < 1e-8);
        prop_assert!(back.inclusion_residual(&alg) < 1e-8);
    }

    #[test]
    fn block_structure_matches_dimensions(seed in any::<u64>(), shape in 0..SHAPES.len()) {
        let (d, blocks) = SHAPES[shape];
        let mut rng = random::rng(seed);
        let alg = generate(&block_generators(blocks, d, &mut rng), d, &tol()).unwrap();
        let bs = block_structure(&alg).unwrap();
        prop_assert_eq!(bs.algebra_dim(), alg.dim());
        if bs.support_dim() == d {
            prop_assert_eq!(bs.commutant_dim(), commutant(&alg).dim());
        }
    }

    #[test]
    fn matrix_units_satisfy_relations(seed in any::<u64>(), shape in 0..SHAPES.len()) {
        let (d, blocks) = SHAPES[shape];
        let mut rng = random::rng(seed);
        let alg = generate(&block_generators(blocks, d, &mut rng), d, &tol()).unwrap();
        let nmax = blocks.iter().map(|b| b.0).max().unwrap();
        for n in 1..=nmax {
            let u = matrix_units(&alg, n).unwrap();
            prop_assert!(u.relation_residual() < 1e-9);
            for j in 0..n {
                for k in 0..n {
                    prop_assert!(alg.residual(u.unit(j, k)) < 1e-8);
                }
            }
        }
    }

    #[test]
    fn generated_algebras_are_closed(seed in any::<u64>(), shape in 0..SHAPES.len()) {
        let (d, blocks) = SHAPES[shape];
        let mut rng = random::rng(seed);
        let alg = generate(&block_generators(blocks, d, &mut rng), d, &tol()).unwrap();
        let (adj, prod, unit) = alg.closure_residuals();
        prop_assert!(adj < 1e-8 && prod < 1e-8 && unit < 1e-8);
        let z = center(&alg);
        prop_assert!(alg.includes(&z, &tol()));
        prop_assert!(commutant(&alg).includes(&z, &tol()));
    }

    #[test]
    fn conditional_expectation_is_cp(seed in any::<u64>(), shape in 0..4usize) {
        let (d, blocks) = SHAPES[shape];
        let mut rng = random::rng(seed);
        let alg = generate(&block_generators(blocks, d, &mut rng), d, &tol()).unwrap();
        let e = conditional_expectation(&alg, &StarAlgebra::full(d)).unwrap();
        let c = choi(&e, &MatrixUnits::standard(d)).unwrap();
        prop_assert!(is_psd(&c.matrix, &tol()).unwrap());
        prop_assert!(is_completely_positive(&e, &MatrixUnits::standard(d), &tol()).unwrap());
    }
}

/// All sites of a chain of up to 3 qubits, plus a few abelian algebras.
fn commuting_pairs() -> Vec<(String, StarAlgebra, StarAlgebra)> {
    let mut out = Vec::new();
    for n in 1..=3usize {
        let masks: Vec<Vec<usize>> = (0..1usize << n)
            .map(|m| (0..n).filter(|s| m >> s & 1 == 1).collect())
            .collect();
        for a in &masks {
            for b in &masks {
                let a1 = StarAlgebra::tensor_factor(n, 2, a).unwrap();
                let a2 = StarAlgebra::tensor_factor(n, 2, b).unwrap();
                if opalg::staralg::max_commutator(&a1, &a2) < 1e-12 {
                    out.push((format!("chain{n} {a:?} {b:?}"), a1, a2));
                }
            }
        }
    }
    for d in [2usize, 3, 4, 6] {
        out.push((
            format!("diag{d}"),
            StarAlgebra::diagonal(d),
            StarAlgebra::diagonal(d),
        ));
    }
    let z = kron(&opalg::matcore::pauli::z(), &CMatrix::identity(2));
    let zz = generate(&[z], 4, &tol()).unwrap();
    out.push(("Z⊗I and its commutant".into(), zz.clone(), commutant(&zz)));
    out.push(("Z⊗I with itself".into(), zz.clone(), zz));
    out
}

/// Brute-force zero-divisor search: for spectral projections `p` of random
/// Hermitian elements of `a1`, look for `X ∈ a2` with `pX = 0` by computing
/// the null space of `X ↦ pX` on `a2` directly.
fn brute_force_zero_divisor(a1: &StarAlgebra, a2: &StarAlgebra, trials: usize) -> bool {
    let mut rng = random::rng(99);
    for _ in 0..trials {
        let h = random::hermitian_element(a1, &mut rng);
        let eig = opalg::matcore::eig_hermitian(&h, &tol()).unwrap();
        let d = a1.ambient_dim();
        for i in 0..d {
            let v = CMatrix::from_fn(d, 1, |r, _| eig.vectors.get(r, i));
            let p = &v * v.adjoint();
            let p = a1.project(&p);
            if p.frobenius_norm() < 1e-6 {
                continue;
            }
            let cols: Vec<CMatrix> = a2.basis().iter().map(|b| &p * b).collect();
            let gram = CMatrix::from_fn(cols.len(), cols.len(), |r, c| cols[r].hs_inner(&cols[c]));
            let ev = opalg::matcore::eig_hermitian(&gram, &tol()).unwrap();
            if ev.min() < 1e-10 * ev.max().max(1e-300) {
                return true;
            }
        }
    }
    false
}

#[test]
fn schlieder_agrees_with_brute_force_and_norms() {
    for (name, a1, a2) in commuting_pairs() {
        let independent = schlieder_independent(&a1, &a2, &tol()).unwrap();
        let witness = zero_divisor_witness(&a1, &a2, &tol()).unwrap();
        let brute = brute_force_zero_divisor(&a1, &a2, 20);
        assert_eq!(independent, witness.is_none(), "{name}");
        assert_eq!(independent, !brute, "{name}");
        let dev = norm_multiplicativity_check(&a1, &a2, 50, 5, &tol()).unwrap();
        if independent {
            assert!(dev < 1e-10, "{name}: {dev}");
        } else {
            let (p, q) = witness.unwrap();
            assert!(
                p.frobenius_norm() > 0.5 && q.frobenius_norm() > 0.5,
                "{name}"
            );
            assert!((&p * &q).max_abs() < 1e-10, "{name}");
            assert!(a1.residual(&p) < 1e-8 && a2.residual(&q) < 1e-8, "{name}");
        }
    }
}

#[test]
fn split_implies_schlieder() {
    for (name, a1, a2) in commuting_pairs() {
        let d = a1.ambient_dim();
        let n = (d as f64).log2().round() as usize;
        if 1usize << n != d {
            continue;
        }
        for mask in 0..1usize << n {
            let sites: Vec<usize> = (0..n).filter(|s| mask >> s & 1 == 1).collect();
            let m = StarAlgebra::tensor_factor(n, 2, &sites).unwrap();
            if split_via(&a1, &a2, &m, &tol()) {
                assert!(
                    schlieder_independent(&a1, &a2, &tol()).unwrap(),
                    "{name} via {sites:?}"
                );
            }
        }
    }
}
