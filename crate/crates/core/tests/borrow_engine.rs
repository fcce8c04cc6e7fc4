use proptest::prelude::*;
use psborrow_core::borrow::a0_grid;
use psborrow_core::{
    a0_log_marginal_binomial, eb_a0_binomial, eb_a0_normal, posterior_binomial, posterior_normal,
    BinomialSummaries, NormalSummaries,
};
use statrs::function::beta::ln_beta;

// Exhaustive grid oracle on an independent log-beta implementation; ties go
// to the largest a0.
fn grid_oracle(yh: f64, nh: f64, y0: f64, n0: f64) -> f64 {
    let mut best = (f64::NEG_INFINITY, -1.0);
    for k in 0..=50 {
        let a = k as f64 / 50.0;
        let ll = ln_beta(a * yh + y0 + 1.0, a * (nh - yh) + n0 - y0 + 1.0)
            - ln_beta(a * yh + 1.0, a * (nh - yh) + 1.0);
        if ll >= best.0 - 1e-12 {
            best = (ll.max(best.0), a);
        }
    }
    best.1
}

#[test]
fn marginal_matches_high_precision_value() {
    // mpmath, 40 digits
    let s = BinomialSummaries::new(50.0, 100, 10.0, 20).unwrap();
    let got = a0_log_marginal_binomial(0.5, &s).unwrap();
    assert!((got - (-14.026_990_096_907_764_815)).abs() < 1e-10);
}

#[test]
fn congruent_proportions_borrow_fully() {
    let s = BinomialSummaries::new(100.0, 200, 100.0, 200).unwrap();
    assert_eq!(grid_oracle(100.0, 200.0, 100.0, 200.0), 1.0);
    assert_eq!(eb_a0_binomial(&s, 0.02).unwrap(), 1.0);
}

#[test]
fn conflicting_proportions_borrow_nothing() {
    let s = BinomialSummaries::new(90.0, 100, 10.0, 100).unwrap();
    assert_eq!(grid_oracle(90.0, 100.0, 10.0, 100.0), 0.0);
    assert_eq!(eb_a0_binomial(&s, 0.02).unwrap(), 0.0);
}

#[test]
fn near_flat_marginal_matches_oracle() {
    let s = BinomialSummaries::new(0.0, 1, 5.0, 10).unwrap();
    let oracle = grid_oracle(0.0, 1.0, 5.0, 10.0);
    assert_eq!(eb_a0_binomial(&s, 0.02).unwrap(), oracle);
}

#[test]
fn congruent_posterior_mean_converges() {
    let p = 0.3;
    let mut last = f64::INFINITY;
    for n0 in [10usize, 100, 1000, 10_000, 100_000] {
        let s = BinomialSummaries::new(p * 50.0, 50, p * n0 as f64, n0).unwrap();
        let err = (posterior_binomial(&s, 0.5).unwrap().mu_hat - p).abs();
        assert!(err <= last);
        last = err;
    }
    assert!(last < 1e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn normal_discount_in_unit_interval(
        y0 in -10.0f64..10.0, yh in -10.0f64..10.0, s0 in 1e-6f64..10.0, sh in 1e-6f64..10.0,
    ) {
        let s = NormalSummaries::new(y0, yh, s0, sh).unwrap();
        let a0 = eb_a0_normal(&s);
        prop_assert!(a0 > 0.0 && a0 <= 1.0);
        prop_assert_eq!(a0 == 1.0, (yh - y0).powi(2) <= sh + s0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn normal_posterior_moves_toward_history(
        y0 in -5.0f64..5.0, yh in -5.0f64..5.0, s0 in 1e-3f64..1.0, sh in 1e-3f64..1.0,
    ) {
        let s = NormalSummaries::new(y0, yh, s0, sh).unwrap();
        let at0 = posterior_normal(&s, 0.0).unwrap();
        prop_assert_eq!(at0.mu_hat, y0);
        prop_assert_eq!(at0.sig_sq_hat, s0);
        let mut prev = at0;
        for k in 1..=20 {
            let cur = posterior_normal(&s, k as f64 / 20.0).unwrap();
            prop_assert!(cur.sig_sq_hat < prev.sig_sq_hat);
            prop_assert!((cur.mu_hat - yh).abs() <= (prev.mu_hat - yh).abs() + 1e-12);
            let (lo, hi) = (y0.min(yh), y0.max(yh));
            prop_assert!(cur.mu_hat >= lo - 1e-12 && cur.mu_hat <= hi + 1e-12);
            prev = cur;
        }
    }

    #[test]
    fn grid_argmax_dominates_every_grid_point(
        nh in 1usize..400, n0 in 1usize..400, fh in 0.0f64..1.0, f0 in 0.0f64..1.0,
    ) {
        let s = BinomialSummaries::new(fh * nh as f64, nh, f0 * n0 as f64, n0).unwrap();
        let a0 = eb_a0_binomial(&s, 0.02).unwrap();
        let best = a0_log_marginal_binomial(a0, &s).unwrap();
        for a in a0_grid(0.02).unwrap() {
            let ll = a0_log_marginal_binomial(a, &s).unwrap();
            prop_assert!(best >= ll);
            if ll == best {
                prop_assert!(a <= a0);
            }
        }
        let post = posterior_binomial(&s, a0).unwrap();
        prop_assert!(post.mu_hat > 0.0 && post.mu_hat < 1.0);
    }

    #[test]
    fn marginal_is_continuous_in_a0(
        nh in 1usize..400, n0 in 1usize..400, fh in 0.0f64..1.0, f0 in 0.0f64..1.0, a in 0.0f64..0.999,
    ) {
        let s = BinomialSummaries::new(fh * nh as f64, nh, f0 * n0 as f64, n0).unwrap();
        let l1 = a0_log_marginal_binomial(a, &s).unwrap();
        let l2 = a0_log_marginal_binomial(a + 1e-7, &s).unwrap();
        prop_assert!((l1 - l2).abs() < 1e-3);
    }
}
