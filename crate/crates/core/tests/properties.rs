use crowdcode::analytic::{
    chernoff_bound, grouped_assignment_mass, pe_coding_given_reliabilities, pe_iid_coding, pe_iid_majority,
};
use crowdcode::codebook::{balanced_weight, random_balanced_matrix, AnswerVector, CodeMatrix};
use crowdcode::design::{cyclic_column_replacement, ColumnSpace, DesignObjective, Objective};
use crowdcode::fusion::{decode_hamming, decode_majority, GroupMap};
use crowdcode::seed::stream_rng;
use proptest::prelude::*;

fn matrix() -> impl Strategy<Value = CodeMatrix> {
    (prop::sample::select(vec![2usize, 3, 4, 8]), 1usize..=8).prop_flat_map(|(m, n)| {
        prop::collection::vec(0u64..1 << m, n).prop_map(move |cols| CodeMatrix::from_column_ints(&cols, m).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coding_error_is_a_probability(a in matrix(), mu in 0.0f64..=1.0) {
        let v = pe_iid_coding(&a, mu).unwrap().value;
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v));
    }

    #[test]
    fn constant_reliabilities_match_iid(a in matrix(), mu in 0.0f64..=1.0) {
        let p = vec![mu; a.num_workers()];
        let d = pe_coding_given_reliabilities(&a, &p).unwrap() - pe_iid_coding(&a, mu).unwrap().value;
        prop_assert!(d.abs() < 1e-12);
    }

    #[test]
    fn majority_decreases_above_chance(bits in 1usize..=3, per_bit in 1usize..=5, x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let m = 1usize << bits;
        let floor = 1.0 / m as f64;
        let (lo, hi) = (floor + (1.0 - floor) * x.min(y), floor + (1.0 - floor) * x.max(y));
        let n = bits * per_bit;
        prop_assert!(pe_iid_majority(m, n, hi).unwrap().value <= pe_iid_majority(m, n, lo).unwrap().value + 1e-12);
    }

    #[test]
    fn bound_dominates_when_condition_holds(a in matrix(), p in prop::collection::vec(0.5f64..=1.0, 8)) {
        let p = &p[..a.num_workers()];
        let report = chernoff_bound(&a, p).unwrap();
        if let Some(bound) = report.value.filter(|_| report.condition_holds) {
            prop_assert!(bound + 1e-12 >= pe_coding_given_reliabilities(&a, p).unwrap());
        }
    }

    #[test]
    fn codewords_decode_to_their_class(a in matrix(), seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0);
        for l in 0..a.num_classes() {
            let d = decode_hamming(&a, &AnswerVector::from_bits(&a.row(l)), &mut rng).unwrap();
            prop_assert!(a.row(d.class) == a.row(l));
        }
    }

    #[test]
    fn unanimous_groups_decode_by_majority(bits in 1usize..=3, per_bit in 1usize..=4, class in 0usize..8) {
        let m = 1usize << bits;
        let class = class % m;
        let groups = GroupMap::contiguous(m, bits * per_bit).unwrap();
        let answers: Vec<u8> = (0..bits * per_bit).map(|j| groups.answer_bit(j, class)).collect();
        let d = decode_majority(m, &groups, &AnswerVector::from_bits(&answers), &mut stream_rng(0, 0)).unwrap();
        prop_assert_eq!(d.class, class);
        prop_assert_eq!(d.tie_count, 1);
    }

    #[test]
    fn random_balanced_columns_are_balanced(m in 2usize..=8, n in 1usize..=12, seed in any::<u64>()) {
        let a = random_balanced_matrix(m, n, seed).unwrap();
        for j in 0..n {
            prop_assert_eq!(a.column_weight(j) as usize, balanced_weight(m));
        }
    }

    #[test]
    fn assignment_mass_is_at_most_one(n in 1usize..=5, l in 1usize..=4, kappa in 0.01f64..50.0) {
        let mass = grouped_assignment_mass(n, kappa, l).unwrap();
        prop_assert!(mass > 0.0 && mass <= 1.0 + 1e-12);
    }

    #[test]
    fn column_replacement_never_worsens(seed in any::<u64>(), mu in 0.3f64..1.0) {
        let start = random_balanced_matrix(4, 5, seed).unwrap();
        let objective = DesignObjective::IidCoding { mu };
        let before = objective.evaluate(&start).unwrap();
        let out = cyclic_column_replacement(start, &objective, ColumnSpace::Balanced).unwrap();
        prop_assert!(out.objective <= before);
    }
}
