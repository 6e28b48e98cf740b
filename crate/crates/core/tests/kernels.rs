use fracbvp::cli::example;
use fracbvp::fracops::{gamma, rl_derivative, FracOrder};
use fracbvp::kernels::{compute_lambda, BoundaryWeight, KernelError, KernelSet};
use fracbvp::quad::{integrate_halfline, Integrand};
use proptest::prelude::*;

fn ex31_kernels() -> [KernelSet; 2] {
    example("ex31").unwrap().spec.kernel_sets(1e-10).unwrap()
}

fn log_axis(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64)).collect()
}

#[test]
fn inner_integral_matches_nested_quadrature_oracle() {
    // oracle: 30-digit nested quadrature of h(tau) K1(tau, s), frozen
    let table = [
        [(0.5, 0.557_745_247_216_894_7), (1.0, 0.673_038_894_196_277_7), (3.0, 0.747_855_636_254_205_8)],
        [(0.5, 0.438_941_240_426_932_4), (1.0, 0.526_646_681_999_994_4), (3.0, 0.563_733_109_769_487_3)],
    ];
    for (ks, rows) in ex31_kernels().iter().zip(table) {
        for (s, expected) in rows {
            let got = ks.inner_integral(s).unwrap();
            assert!((got - expected).abs() < 1e-9, "alpha={} s={s}: {got}", ks.alpha().value());
        }
    }
}

#[test]
fn kernel_values_match_oracle() {
    let [k1, k2] = ex31_kernels();
    // K2 part at t = 1 and K* at t = 0.5, same oracle
    assert!((k1.k2(1.0, 1.0).unwrap() - 2.043_596_589_891_045_7).abs() < 1e-8);
    assert!((k2.k2(1.0, 3.0).unwrap() - 1.459_590_392_639_368_8).abs() < 1e-8);
    assert!((k1.kstar(0.5, 1.0).unwrap() - 3.716_635_484_087_323_4).abs() < 1e-8);
    assert!((k1.kstar(0.5, 3.0).unwrap() - 4.018_623_702_050_701).abs() < 1e-8);
    assert!((k2.kstar(0.5, 1.0).unwrap() - 2.208_430_689_397_495_4).abs() < 1e-8);
    // t = s sits on the step: K* includes it
    assert!((k2.kstar(0.5, 0.5).unwrap() - 2.007_183_912_675_092_6).abs() < 1e-8);
    // inside the weighted bound at (1, 1)
    let v = k1.k(1.0, 1.0).unwrap();
    assert!(v >= 0.0 && v <= 1.0 / (gamma(2.5).unwrap() - 1.0));
}

#[test]
fn bounds_hold_on_a_50_by_50_grid() {
    let axis = log_axis(50, 1e-3, 1e3);
    for ks in &ex31_kernels() {
        let d = ks.denom();
        let kstar_max = ks.gamma_alpha() / d;
        let slack = 1e-9;
        for &t in &axis {
            let p = t.powf(ks.alpha().value() - 1.0);
            for &s in &axis {
                let k = ks.k(t, s).unwrap();
                let ks_val = ks.kstar(t, s).unwrap();
                assert!(ks.k1(t, s).unwrap() >= 0.0 && ks.k2(t, s).unwrap() >= 0.0);
                assert!(k >= 0.0 && k <= p / d * (1.0 + slack), "K({t}, {s}) = {k}");
                assert!(k / (1.0 + p) <= 1.0 / d * (1.0 + slack));
                assert!((0.0..=kstar_max * (1.0 + slack)).contains(&ks_val), "K*({t}, {s}) = {ks_val}");
            }
        }
    }
}

#[test]
fn kernel_is_continuous_across_the_diagonal() {
    for ks in &ex31_kernels() {
        for t in [0.5, 1.0, 4.0] {
            let jumps: Vec<f64> =
                [1e-3, 1e-4, 1e-5].iter().map(|&e| (ks.k(t, t - e).unwrap() - ks.k(t, t + e).unwrap()).abs()).collect();
            // the jump shrinks at least like eps^(1/2) per decade
            for w in jumps.windows(2) {
                assert!(w[1] <= w[0] / 2.5, "t={t}: {jumps:?}");
            }
            assert!(jumps[2] < 1e-2);
        }
    }
}

#[test]
fn derivative_kernel_is_the_fractional_derivative_of_the_kernel() {
    // oracle: 30-digit quadrature of inner(s) e^(-s), giving
    // int K*(t, s) e^(-s) ds = e^(-t) + Gamma/(Gamma - Lambda) C
    let expected = [
        [2.851_476_822_948_556, 2.612_825_604_407_365, 2.380_281_446_472_535],
        [1.590_856_125_123_445_8, 1.352_204_906_582_254_7, 1.119_660_748_647_425],
    ];
    for (ks, row) in ex31_kernels().iter().zip(expected) {
        let p = ks.alpha().value() - 1.0;
        let c = integrate_halfline(&Integrand::new(|s: f64| ks.inner_integral(s).unwrap() * (-s).exp()), 1e-12)
            .unwrap()
            .value;
        let represented = Integrand::new(|x: f64| {
            let k1 = Integrand::new(|s: f64| ks.k1(x, s).unwrap() * (-s).exp()).with_kinks(vec![x]).unwrap();
            integrate_halfline(&k1, 1e-13).unwrap().value + x.powf(p) / ks.denom() * c
        });
        for (t, want) in [0.5, 1.0, 2.0].into_iter().zip(row) {
            let lhs = rl_derivative(&represented, FracOrder::new(p).unwrap(), t, 1e-5).unwrap().value;
            let kstar = Integrand::new(|s: f64| ks.kstar(t, s).unwrap() * (-s).exp()).with_kinks(vec![t]).unwrap();
            let rhs = integrate_halfline(&kstar, 1e-12).unwrap().value;
            assert!((lhs - rhs).abs() < 1e-4, "t={t}: {lhs} vs {rhs}");
            assert!((rhs - want).abs() < 1e-8, "t={t}: {rhs} vs {want}");
        }
    }
}

#[test]
fn zero_weight_gives_pure_parts() {
    let ks = KernelSet::new(BoundaryWeight::zero(), FracOrder::new(1.5).unwrap(), 1e-10).unwrap();
    for (t, s) in [(0.0, 1.0), (1.0, 0.5), (2.0, 3.0)] {
        assert_eq!(ks.k2(t, s).unwrap(), 0.0);
        assert_eq!(ks.k(t, s).unwrap(), ks.k1(t, s).unwrap());
        assert_eq!(ks.kstar(t, s).unwrap(), if t <= s { 1.0 } else { 0.0 });
    }
    assert_eq!(ks.k(0.0, 2.0).unwrap(), 0.0);
}

#[test]
fn lambda_at_or_above_gamma_is_rejected() {
    let h = BoundaryWeight::new(|t: f64| 2.0 * (-t).exp()).with_decay_hint(1.0);
    let alpha = FracOrder::new(1.5).unwrap();
    // Lambda = 2 Gamma(1.5) > Gamma(1.5)
    let lambda = compute_lambda(&h, alpha, 1e-10).unwrap();
    assert!((lambda - 2.0 * gamma(1.5).unwrap()).abs() < 1e-9);
    assert!(matches!(KernelSet::new(h, alpha, 1e-10), Err(KernelError::LambdaTooLarge { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// `h(t) = c t^sigma e^(-beta t)` scaled so that `Lambda = frac * Gamma(alpha)`.
    #[test]
    fn random_admissible_weights_give_nonnegative_bounded_kernels(
        alpha in 1.2f64..3.0,
        sigma_off in 0.1f64..1.5,
        beta in 0.5f64..3.0,
        frac in 0.0f64..0.9,
        t in 0.0f64..20.0,
        s in 0.0f64..20.0,
    ) {
        let p = alpha - 1.0;
        let sigma = -p - 1.0 + sigma_off;
        let ga = gamma(alpha).unwrap();
        let raw = gamma(sigma + alpha).unwrap() / beta.powf(sigma + alpha);
        let c = frac * ga / raw;
        let h = BoundaryWeight::new(move |x: f64| c * x.powf(sigma) * (-beta * x).exp())
            .with_endpoint_exponent(sigma.min(0.0))
            .with_decay_hint(beta);
        let ks = KernelSet::new(h, FracOrder::new(alpha).unwrap(), 1e-10).unwrap();
        prop_assert!((ks.lambda() - frac * ga).abs() < 1e-8 * (1.0 + ga));
        let (k, kstar) = (ks.k(t, s).unwrap(), ks.kstar(t, s).unwrap());
        prop_assert!(ks.k1(t, s).unwrap() >= 0.0 && ks.k2(t, s).unwrap() >= 0.0);
        prop_assert!(k <= ks.k_bound(t) * (1.0 + 1e-9) + 1e-12);
        prop_assert!(kstar >= 0.0 && kstar <= ks.kstar_bound() * (1.0 + 1e-9));
        let inner = ks.inner_integral(s).unwrap();
        prop_assert!(inner >= 0.0 && inner <= ks.lambda() / ga + 1e-9);
    }
}
