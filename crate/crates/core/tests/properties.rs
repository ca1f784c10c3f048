use std::collections::{BTreeSet, VecDeque};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pcsp::analysis::{is_functional, is_symmetric};
use pcsp::catalog;
use pcsp::classifier::{build_affine_structure, classify, solve_instance, subgroup_basis, unit_embedding, ClassifierBounds, Outcome};
use pcsp::derivation::{derivable_set, DerivationContext, TupleSet};
use pcsp::instances::planted_instance;
use pcsp::relaxations::{integer_feasible, solve_aip, solve_blp, solve_blp_aip, verify_integer_solution};
use pcsp::{find_homomorphism, is_homomorphism, Relation, SearchConfig, Structure};

fn closure(gens: &[Vec<i64>], m: i64, d: usize) -> BTreeSet<Vec<i64>> {
    let zero = vec![0; d];
    let mut seen = BTreeSet::from([zero.clone()]);
    let mut queue = VecDeque::from([zero]);
    while let Some(v) = queue.pop_front() {
        for g in gens {
            let w: Vec<i64> = v.iter().zip(g).map(|(a, b)| (a + b).rem_euclid(m)).collect();
            if seen.insert(w.clone()) {
                queue.push_back(w);
            }
        }
    }
    seen
}

fn all_vectors(m: i64, d: usize) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        out = out.into_iter().flat_map(|v| (0..m).map(move |x| [v.clone(), vec![x]].concat())).collect();
    }
    out
}

fn gens_strategy() -> impl Strategy<Value = (u64, usize, Vec<Vec<i64>>)> {
    (2u64..=6, 1usize..=3).prop_flat_map(|(m, d)| {
        let g = prop::collection::vec(prop::collection::vec(-7i64..=7, d), 0..=3);
        (Just(m), Just(d), g)
    })
}

fn small_template() -> impl Strategy<Value = Structure> {
    prop::sample::select(vec!["one_in_three", "nae", "q_in_r(2,4)", "eqn(3,1)", "eqn(2,0)", "remark_5_2", "remark_5_3"])
        .prop_map(|k| catalog::lookup(k).unwrap())
}

fn random_instance(a: &Structure, vars: usize, scopes: &[Vec<usize>]) -> Structure {
    let rels = a
        .relations()
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let tuples = scopes
                .iter()
                .filter(|s| s[0] % a.relations().len() == i)
                .map(|s| s[1..].iter().cycle().take(r.arity()).map(|x| x % vars).collect::<Vec<_>>());
            Relation::new(r.name(), r.arity(), tuples).unwrap()
        })
        .collect();
    Structure::with_domain_size(vars, rels).unwrap()
}

fn permute_positions(set: &TupleSet, sigma: &[usize]) -> TupleSet {
    set.iter().map(|t| sigma.iter().map(|&i| t[i]).collect()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn subgroup_membership_matches_closure((m, d, gens) in gens_strategy()) {
        let basis = subgroup_basis(&gens, m, d).unwrap();
        let reduced: Vec<Vec<i64>> = gens.iter().map(|g| g.iter().map(|x| x.rem_euclid(m as i64)).collect()).collect();
        let oracle = closure(&reduced, m as i64, d);
        prop_assert_eq!(basis.order(), Some(oracle.len() as u128));
        for v in all_vectors(m as i64, d) {
            prop_assert_eq!(basis.contains(&v), oracle.contains(&v));
        }
        let listed: BTreeSet<Vec<i64>> =
            basis.elements(1 << 16).unwrap().into_iter().map(|v| v.into_iter().map(|x| x as i64).collect()).collect();
        prop_assert_eq!(listed, oracle);
    }

    #[test]
    fn integer_feasibility_matches_brute_force(
        rows in prop::collection::vec(prop::collection::vec(-3i64..=3, 3), 1..=2),
        b in prop::collection::vec(-4i64..=4, 2),
    ) {
        let b = &b[..rows.len()];
        let found = integer_feasible(&rows, b).unwrap();
        // unimodular-ish small systems: any solution has a representative in a small box
        let mut brute = false;
        for x in -12i64..=12 {
            for y in -12i64..=12 {
                for z in -12i64..=12 {
                    if rows.iter().zip(b).all(|(r, &bi)| r[0] * x + r[1] * y + r[2] * z == bi) {
                        brute = true;
                    }
                }
            }
        }
        if let Some(x) = &found {
            prop_assert!(verify_integer_solution(&rows, b, x));
        }
        if brute {
            prop_assert!(found.is_some());
        }
    }

    #[test]
    fn equation_templates_are_functional_and_symmetric(m in 1usize..=9, c in 0usize..9) {
        let c = c % m;
        let s = catalog::lookup(&format!("eqn({m},{c})")).unwrap();
        prop_assert!(is_functional(&s));
        prop_assert!(is_symmetric(&s));
        prop_assert_eq!(s.relations()[0].len(), m * m);
    }

    #[test]
    fn derivation_is_monotone_and_equivariant(
        base in prop::collection::btree_set(prop::collection::vec(0usize..2, 3), 0..5),
        extra in prop::collection::btree_set(prop::collection::vec(0usize..2, 3), 0..3),
        sigma in Just(vec![0usize, 1, 2]).prop_shuffle(),
        key in prop::sample::select(vec!["one_in_three", "nae", "remark_5_2"]),
    ) {
        let a = catalog::lookup(key).unwrap();
        let name = a.relations()[0].name().to_string();
        let ctx = DerivationContext::new(&a, &name, 3).unwrap();
        let small = derivable_set(&ctx, &base).unwrap();
        prop_assert!(base.is_subset(&small));
        let bigger: TupleSet = base.union(&extra).cloned().collect();
        prop_assert!(small.is_subset(&derivable_set(&ctx, &bigger).unwrap()));
        let permuted = derivable_set(&ctx, &permute_positions(&base, &sigma)).unwrap();
        prop_assert_eq!(permuted, permute_positions(&small, &sigma));
    }

    #[test]
    fn combined_relaxation_is_the_strongest(
        a in small_template(),
        vars in 1usize..=4,
        scopes in prop::collection::vec(prop::collection::vec(0usize..8, 5), 0..=4),
    ) {
        let x = random_instance(&a, vars, &scopes);
        let blp = solve_blp(&x, &a).unwrap().accepted;
        let aip = solve_aip(&x, &a).unwrap().accepted;
        let both = solve_blp_aip(&x, &a).unwrap().accepted;
        prop_assert!(!both || (blp && aip));
        let solvable = find_homomorphism(&x, &a, &SearchConfig::default()).unwrap().is_some();
        if solvable {
            prop_assert!(blp && aip && both);
        }
    }

    #[test]
    fn planted_instances_pass_every_relaxation(a in small_template(), seed in any::<u64>(), vars in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = planted_instance(&a, vars, vars + 2, &mut rng).unwrap();
        prop_assert!(is_homomorphism(&p.planted, &p.instance, &a).unwrap());
        prop_assert!(solve_blp(&p.instance, &a).unwrap().accepted);
        prop_assert!(solve_aip(&p.instance, &a).unwrap().accepted);
        prop_assert!(solve_blp_aip(&p.instance, &a).unwrap().accepted);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn tractable_verdicts_are_sound(m in 1u64..=5, c in 0u64..5, seed in any::<u64>()) {
        let c = c % m;
        let a = catalog::one_in_three();
        let b = catalog::lookup(&format!("eqn({m},{c})")).unwrap();
        let bounds = ClassifierBounds::for_template(&a, &b).with_m_max(6);
        let v = classify(&a, &b, &bounds).unwrap();
        if let Outcome::Tractable { m: k, sandwich_hom } = &v.outcome {
            let am = build_affine_structure(&a, *k).unwrap().materialize(1 << 16).unwrap();
            prop_assert!(is_homomorphism(&unit_embedding(&a, *k).unwrap(), &a, &am).unwrap());
            prop_assert!(is_homomorphism(sandwich_hom, &am, &b).unwrap());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = planted_instance(&a, 6, 6, &mut rng).unwrap();
            // the sandwich makes AIP sound for the promise problem
            prop_assert!(solve_aip(&p.instance, &a).unwrap().accepted);
            let h = solve_instance(&p.instance, &a, &b, &v).unwrap();
            prop_assert!(is_homomorphism(&h, &p.instance, &b).unwrap());
        }
    }
}
