use fracbvp::fracops::{gamma, rl_derivative, rl_integral, FracError, FracOrder};
use fracbvp::quad::Integrand;

fn order(q: f64) -> FracOrder {
    FracOrder::new(q).unwrap()
}

/// `D^q t^p = Gamma(p+1) / Gamma(p-q+1) t^(p-q)`, and `I^q` with `-q`.
fn monomial_rule(p: f64, q: f64, t: f64) -> f64 {
    gamma(p + 1.0).unwrap() / gamma(p - q + 1.0).unwrap() * t.powf(p - q)
}

#[test]
fn derivative_of_monomials_matches_gamma_ratio() {
    let mut checked = 0;
    for p in [0.5, 1.0, 1.5, 2.0, 2.5, 3.0] {
        for q in [0.3, 0.5, 1.0, 1.5, 2.5] {
            if p <= q - 1.0 {
                continue;
            }
            let g = Integrand::new(move |s: f64| s.powf(p));
            for t in [0.5, 1.0, 2.0, 3.7] {
                let expected = monomial_rule(p, q, t);
                let got = rl_derivative(&g, order(q), t, 1e-6).unwrap();
                assert!(
                    (got.value - expected).abs() <= 1e-6 * (1.0 + expected.abs()),
                    "p={p} q={q} t={t}: {} vs {expected}",
                    got.value
                );
                checked += 1;
            }
        }
    }
    assert!(checked > 80);
}

#[test]
fn integral_of_monomials_matches_gamma_ratio() {
    for p in [0.0, 0.5, 1.0, 2.0] {
        for q in [0.25, 0.5, 1.5, 2.5] {
            let g = Integrand::new(move |s: f64| s.powf(p));
            for t in [0.1, 1.0, 4.0] {
                let expected = monomial_rule(p, -q, t);
                let got = rl_integral(&g, order(q), t, 1e-12).unwrap().value;
                assert!((got - expected).abs() <= 1e-10 * (1.0 + expected), "p={p} q={q} t={t}");
            }
        }
    }
}

#[test]
fn semigroup_on_polynomials() {
    let g = Integrand::new(|s: f64| 1.0 + 2.0 * s - 0.5 * s * s);
    let g = &g;
    for (q1, q2) in [(0.5, 0.5), (0.3, 1.2), (1.5, 1.0), (0.7, 2.5)] {
        let inner = Integrand::new(move |x: f64| rl_integral(g, order(q1), x, 1e-13).unwrap().value)
            .with_endpoint_exponent(0.0)
            .unwrap();
        for t in [0.5, 1.0, 2.0] {
            let nested = rl_integral(&inner, order(q2), t, 1e-11).unwrap().value;
            let direct = rl_integral(g, order(q1 + q2), t, 1e-12).unwrap().value;
            assert!((nested - direct).abs() < 1e-6, "q1={q1} q2={q2} t={t}: {nested} vs {direct}");
            // closed form, term by term
            let exact = monomial_rule(0.0, -(q1 + q2), t) + 2.0 * monomial_rule(1.0, -(q1 + q2), t)
                - 0.5 * monomial_rule(2.0, -(q1 + q2), t);
            assert!((direct - exact).abs() < 1e-10);
        }
    }
}

#[test]
fn derivative_inverts_integral() {
    let g = Integrand::new(|s: f64| (-s).exp() * (1.0 + s));
    let g = &g;
    for q in [0.5, 1.5, 2.5] {
        let iq = Integrand::new(move |x: f64| rl_integral(g, order(q), x, 1e-14).unwrap().value);
        for t in [0.5, 1.0, 2.0] {
            let back = rl_derivative(&iq, order(q), t, 1e-5).unwrap().value;
            assert!((back - g.eval(t)).abs() < 1e-5, "q={q} t={t}: {back}");
        }
    }
}

#[test]
fn gamma_table() {
    // oracle: 30-digit values, frozen
    let table = [
        (0.1, 9.513_507_698_668_732),
        (0.5, 1.772_453_850_905_516),
        (1.5, 0.886_226_925_452_758),
        (2.5, 1.329_340_388_179_137),
        (3.3, 2.683_437_381_955_768),
        (7.0, 720.0),
        (10.5, 1_133_278.388_948_785),
    ];
    for (x, g) in table {
        assert!(((gamma(x).unwrap() - g) / g).abs() < 1e-12, "x={x}");
    }
}

#[test]
fn derivative_needs_positive_point() {
    let g = Integrand::new(|s: f64| s);
    assert_eq!(rl_derivative(&g, order(0.5), -1.0, 1e-6).unwrap_err(), FracError::InvalidPoint(-1.0));
    assert!(rl_integral(&g, order(0.5), f64::NAN, 1e-6).is_err());
}
