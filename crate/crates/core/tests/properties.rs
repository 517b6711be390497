use std::collections::HashSet;

use coalcount::oracle::{
    all_ranked_shapes, enumerate_sets, exact_q_kingman, exact_q_tajima, DEFAULT_ENUM_BUDGET,
};
use coalcount::rng::{substream, Domain};
use coalcount::topology::same_unranked_shape;
use coalcount::{
    backtrack_chain, backtrack_q, build_perfect_phylogeny, deduplicate, is_compatible,
    parse_matrix, prepare, replay_kingman, sample_kingman, sample_tajima, simulate_genealogy,
    simulate_matrix, IncidenceMatrix, KingmanPhylogeny, MatrixFormat, Prepared,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn simulated(n: usize, mu: f64, seed: u64) -> Prepared {
    let m = simulate_matrix(n, mu, &mut substream(seed, Domain::Simulation, 0)).matrix;
    prepare(&m).unwrap()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn backtracking_matches_path_enumeration(n in 3usize..=7, mu in 0.5f64..12.0, seed in any::<u64>()) {
        let p = simulated(n, mu, seed);
        let exact = exact_q_tajima(&p.tajima, DEFAULT_ENUM_BUDGET).unwrap();
        prop_assert!(close(exact.total_probability, 1.0, 1e-12));
        for (chain, lq) in &exact.log_q {
            let bt = backtrack_chain(&p.tajima, chain, 1_000_000).unwrap();
            prop_assert_eq!(bt.orderings, exact.orderings[chain]);
            prop_assert!(close(bt.log_q_total, *lq, 1e-10));
        }
    }

    #[test]
    fn kingman_support_and_probabilities(n in 3usize..=6, mu in 0.5f64..12.0, seed in any::<u64>()) {
        let p = simulated(n, mu, seed);
        let exact = exact_q_kingman(&p.kingman, DEFAULT_ENUM_BUDGET).unwrap();
        let total: f64 = exact.values().map(|l| l.exp()).sum();
        prop_assert!(close(total, 1.0, 1e-12));
        for (g, lq) in &exact {
            prop_assert!(is_compatible(g, &p.kingman));
            let (_, replayed) = replay_kingman(&p.kingman, g).unwrap();
            prop_assert!(close(replayed, *lq, 1e-12));
        }
        for i in 0..50 {
            let d = sample_kingman(&p.kingman, &mut substream(seed, Domain::Kingman, i));
            prop_assert!(exact.contains_key(&d.topology));
        }
    }

    #[test]
    fn tajima_draws_stay_in_support(n in 3usize..=7, mu in 0.5f64..12.0, seed in any::<u64>()) {
        let p = simulated(n, mu, seed);
        let sets = enumerate_sets(&p.kingman, DEFAULT_ENUM_BUDGET).unwrap();
        for i in 0..50 {
            let mut d = sample_tajima(&p.tajima, &mut substream(seed, Domain::Tajima, i));
            prop_assert!(sets.chains.contains(&d.chain));
            backtrack_q(&p.tajima, &mut d, 1_000_000).unwrap();
            let total = d.log_q_total.unwrap();
            prop_assert!(d.log_q_path <= total + 1e-12 && total <= 1e-12);
        }
    }

    #[test]
    fn projection_multiplicities_are_consistent(n in 3usize..=7, mu in 0.5f64..12.0, seed in any::<u64>()) {
        let p = simulated(n, mu, seed);
        let sets = enumerate_sets(&p.kingman, DEFAULT_ENUM_BUDGET).unwrap();
        let c = sets.counts();
        prop_assert!(c.shape <= c.labeled && c.labeled <= c.kingman);
        prop_assert!(c.shape <= c.tajima && c.tajima <= c.kingman);
        let lt: u128 = sets.labeled.values().map(|x| x.exact().unwrap()).sum();
        prop_assert_eq!(lt, u128::from(sets.kingman));
        let ts: u128 = sets.shapes.values().map(|x| x.exact().unwrap()).sum();
        prop_assert_eq!(ts, sets.chains.len() as u128);
    }

    #[test]
    fn shape_equality_is_an_equivalence(n in 2usize..=24, seed in any::<u64>()) {
        let g = simulate_genealogy(n, &mut ChaCha8Rng::seed_from_u64(seed));
        let chain = g.topology.to_tajima_chain();
        let k = chain.events().len() as u32;
        for a in 0..k {
            prop_assert!(same_unranked_shape(&chain, a, a));
            for b in 0..k {
                prop_assert_eq!(same_unranked_shape(&chain, a, b), same_unranked_shape(&chain, b, a));
                for c in 0..k {
                    if same_unranked_shape(&chain, a, b) && same_unranked_shape(&chain, b, c) {
                        prop_assert!(same_unranked_shape(&chain, a, c));
                    }
                }
            }
        }
    }

    #[test]
    fn matrices_round_trip(rows in prop::collection::vec(prop::collection::vec(any::<bool>(), 0..9), 2..9)) {
        let m = rows[0].len();
        let rows: Vec<Vec<bool>> = rows.into_iter().map(|mut r| { r.resize(m, false); r }).collect();
        let mat = IncidenceMatrix::new(rows, None, None).unwrap();
        prop_assert_eq!(&parse_matrix(&mat.to_csv(), MatrixFormat::Csv).unwrap(), &mat);
        prop_assert_eq!(&parse_matrix(&mat.to_plain01(), MatrixFormat::Plain01).unwrap(), &mat);
    }

    #[test]
    fn perfect_phylogeny_reproduces_rows(n in 2usize..=20, mu in 0.0f64..20.0, seed in any::<u64>()) {
        let m = simulate_matrix(n, mu, &mut substream(seed, Domain::Simulation, 0)).matrix;
        let data = deduplicate(&m);
        let pp = build_perfect_phylogeny(&data).unwrap();
        for (h, sites) in pp.path_sites().iter().enumerate() {
            let set: HashSet<&str> = sites.iter().map(String::as_str).collect();
            for (j, label) in data.site_labels().iter().enumerate() {
                prop_assert_eq!(data.haplotypes()[h][j], set.contains(label.as_str()));
            }
        }
    }
}

#[test]
fn every_compatible_tree_is_reached() {
    let kp = KingmanPhylogeny::from_parts(
        vec![None, Some(0), Some(0), Some(0)],
        &[vec![], vec!["a"], vec!["b"], vec!["c", "d", "e", "f"]],
    )
    .unwrap();
    let support = exact_q_kingman(&kp, DEFAULT_ENUM_BUDGET).unwrap();
    let mut seen = HashSet::new();
    for i in 0..60_000 {
        seen.insert(sample_kingman(&kp, &mut substream(5, Domain::Kingman, i)).topology);
        if seen.len() == support.len() {
            break;
        }
    }
    assert_eq!(seen.len(), support.len());
}

#[test]
fn ranked_shape_counts_follow_zigzag() {
    let counts: Vec<usize> = (2..=9).map(|n| all_ranked_shapes(n).len()).collect();
    assert_eq!(counts, [1, 1, 2, 5, 16, 61, 272, 1385]);
}
