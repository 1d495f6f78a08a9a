use nalgebra::DMatrix;
use proptest::prelude::*;

use pureid::linalg::{
    hermitian_eig, kron, positive_part_projector, BasisPermutation, DenseOperator, C64,
};
use pureid::minerr::{global_povm, locc_povm, mean_success, pmax_global, Priors};
use pureid::simulate::{BatchStats, HaarSampler};
use pureid::symmetry::{check_dim_relation, toolkit};
use pureid::unambiguous::{beta_feasibility, pmax_unamb_global, pmax_unamb_locc};

fn matrix(n: usize) -> impl Strategy<Value = DenseOperator> {
    proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n * n).prop_map(move |v| {
        DenseOperator::from_matrix(DMatrix::from_iterator(
            n,
            n,
            v.into_iter().map(|(re, im)| C64::new(re, im)),
        ))
    })
}

fn hermitian(n: usize) -> impl Strategy<Value = DenseOperator> {
    matrix(n).prop_map(|m| (&m + &m.adjoint()).scale(0.5))
}

fn permutation(k: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..k).collect::<Vec<_>>()).prop_shuffle()
}

proptest! {
    #[test]
    fn kron_is_associative(a in matrix(2), b in matrix(3), c in matrix(2)) {
        let left = kron(&kron(&a, &b), &c);
        let right = kron(&a, &kron(&b, &c));
        prop_assert!(left.max_abs_diff(&right) < 1e-12);
    }

    #[test]
    fn kron_is_bilinear(a in matrix(2), b in matrix(2), c in matrix(3), s in -2.0..2.0f64) {
        let lhs = kron(&(&a + &b.scale(s)), &c);
        let rhs = &kron(&a, &c) + &kron(&b, &c).scale(s);
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn kron_mixed_product(a in matrix(2), b in matrix(3), c in matrix(2), d in matrix(3)) {
        let lhs = &kron(&a, &b) * &kron(&c, &d);
        let rhs = kron(&(&a * &c), &(&b * &d));
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn permutations_compose(p in permutation(4), q in permutation(4)) {
        let dims = [2usize; 4];
        let pp = BasisPermutation::from_factors(&dims, &p).unwrap();
        let qq = BasisPermutation::from_factors(&dims, &q).unwrap();
        let composed = pp.after(&qq);
        let dense = &pp.to_dense() * &qq.to_dense();
        prop_assert!(composed.to_dense().max_abs_diff(&dense) < 1e-15);
        prop_assert_eq!(pp.after(&pp.inverse()), BasisPermutation::identity(16));
        prop_assert_eq!(composed.sign(), pp.sign() * qq.sign());
    }

    #[test]
    fn permutation_helpers_match_dense(p in permutation(3), x in matrix(8)) {
        let pp = BasisPermutation::from_factors(&[2, 2, 2], &p).unwrap();
        let dense = pp.to_dense();
        prop_assert!(pp.left_mul(&x).max_abs_diff(&(&dense * &x)) < 1e-14);
        prop_assert!(pp.right_mul(&x).max_abs_diff(&(&x * &dense)) < 1e-14);
        prop_assert!(pp.conjugate(&x).max_abs_diff(&(&(&dense * &x) * &dense.adjoint())) < 1e-14);
    }

    #[test]
    fn eig_reconstructs(h in hermitian(6)) {
        let spec = hermitian_eig(&h).unwrap();
        prop_assert!(spec.reconstruct_with(|l| l).max_abs_diff(&h) < 1e-10);
        prop_assert!(spec.orthonormality_defect() < 1e-10);
        prop_assert!(spec.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn positive_part_commutes(h in hermitian(5)) {
        // random spectra stay clear of the ambiguous band with overwhelming probability
        if let Ok(p) = positive_part_projector(&h, 1e-9) {
            prop_assert!(p.commutator(&h).max_abs() < 1e-9);
            prop_assert!(p.is_projector(1e-9));
            prop_assert!((&(&p * &h) * &p).hermiticity_defect() < 1e-9);
        }
    }

    #[test]
    fn label_swap_symmetry(eta in 0.0..=1.0f64, d in 2u64..40) {
        let p = Priors::from_eta1(eta).unwrap();
        prop_assert!((pmax_global(d, p) - pmax_global(d, p.swapped())).abs() < 1e-14);
    }

    #[test]
    fn pmax_monotone_in_d(eta in 0.0..=1.0f64, d in 2u64..200) {
        let p = Priors::from_eta1(eta).unwrap();
        prop_assert!(pmax_global(d + 1, p) >= pmax_global(d, p) - 1e-15);
        prop_assert!(pmax_unamb_global(d + 1) > pmax_unamb_global(d));
        prop_assert!(pmax_global(d, p) >= p.eta1.max(p.eta2) - 1e-15);
    }

    #[test]
    fn separable_gap_is_strict(a in 2u64..40, b in 2u64..40) {
        prop_assert!(pmax_unamb_locc(a, b) < pmax_unamb_global(a * b));
        prop_assert!((pmax_unamb_locc(a, b) - pmax_unamb_locc(b, a)).abs() < 1e-15);
    }

    #[test]
    fn dimension_identity_holds(a in 1u64..60, b in 1u64..60) {
        prop_assert_eq!(check_dim_relation(a, b).residual, 0);
    }

    #[test]
    fn feasibility_bounds_beta_sum(b1 in 0.0..1.0f64, b2 in 0.0..1.0f64) {
        let f = beta_feasibility(b1, b2);
        if f.feasible {
            prop_assert!(b1 + b2 <= 1.0 + 1e-12);
        }
        prop_assert!(f.gamma_plus >= b1 + b2 - 1e-12);
    }

    #[test]
    fn batch_stats_consistent(s in 0u64..1000, e in 0u64..1000, i in 0u64..1000) {
        let st = BatchStats::from_counts(s, e, i);
        prop_assert_eq!(st.n_trials, s + e + i);
        if st.n_trials > 0 {
            prop_assert!((st.p_hat - s as f64 / st.n_trials as f64).abs() < 1e-15);
            prop_assert!((st.std_error - (st.p_hat * (1.0 - st.p_hat) / st.n_trials as f64).sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn priors_validation(eta in -1.0..2.0f64) {
        prop_assert_eq!(Priors::from_eta1(eta).is_ok(), (0.0..=1.0).contains(&eta));
    }

    #[test]
    fn haar_states_are_normalized(seed in any::<u64>(), index in any::<u64>(), d in 1usize..10) {
        let v = HaarSampler::for_trial(seed, index).state(d);
        prop_assert!((v.norm() - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn global_povm_swap_symmetry(eta in 0.05..0.95f64) {
        let p = Priors::from_eta1(eta).unwrap();
        let a = mean_success(&global_povm(3, p).unwrap(), 3, p).unwrap();
        let b = mean_success(&global_povm(3, p.swapped()).unwrap(), 3, p.swapped()).unwrap();
        prop_assert!((a - b).abs() < 1e-10);
        prop_assert!((a - pmax_global(3, p)).abs() < 1e-10);
    }

    #[test]
    fn locc_swap_symmetry(eta in 0.05..0.95f64) {
        let p = Priors::from_eta1(eta).unwrap();
        let t = toolkit(4).unwrap();
        let x = locc_povm(2, 2, p).unwrap();
        let y = locc_povm(2, 2, p.swapped()).unwrap();
        let mapped = t.exchange_references(y.element("2").unwrap());
        prop_assert!(x.element("1").unwrap().max_abs_diff(&mapped) < 1e-9);
        prop_assert!((mean_success(&x, 4, p).unwrap() - pmax_global(4, p)).abs() < 1e-10);
    }
}
