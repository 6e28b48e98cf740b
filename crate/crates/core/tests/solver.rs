use std::sync::Arc;

use fracbvp::cli::example;
use fracbvp::exprlang::parse;
use fracbvp::fracops::gamma;
use fracbvp::problem::{analyze, BoundarySpec, CheckOptions, ProblemSpec};
use fracbvp::solver::{
    apply_t, contract_iterate, contract_solve, monotone_iterate, monotone_solve, Direction, Grid, Interpolation,
    IterOptions, Operator, PlanOptions, Scheme, SolutionPair, SolverError,
};

// oracle: 30-digit quadrature of inner(s) e^(-s) for the two boundary weights, frozen
const C_EXP: [f64; 2] = [0.556_179_175_338_311_3, 0.428_979_291_005_234_76];

fn grid(n: usize) -> Arc<Grid> {
    Arc::new(Grid::new(n, 5.0).unwrap())
}

/// `I^alpha e^(-s)(t) = e^(-t) t^alpha 1F1(alpha; alpha+1; t) / Gamma(alpha+1)`.
fn frac_integral_of_exp(alpha: f64, t: f64) -> f64 {
    // 1F1(alpha; alpha+1; t) = sum_k alpha/(alpha+k) t^k/k!
    let (mut pow, mut sum, mut k) = (1.0, 1.0, 0.0);
    loop {
        k += 1.0;
        pow *= t / k;
        let term = pow * alpha / (alpha + k);
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
    }
    (-t).exp() * t.powf(alpha) * sum / gamma(alpha + 1.0).unwrap()
}

fn forcing_only() -> ProblemSpec {
    let mut p = example("ex32").unwrap().spec;
    p.f = [parse("exp(-t)").unwrap(), parse("exp(-t)").unwrap()];
    p
}

#[test]
fn one_application_reproduces_the_closed_form_solution() {
    let p = forcing_only();
    let ks = p.kernel_sets(1e-10).unwrap();
    let g = grid(64);
    let y = apply_t(&p, &ks, &SolutionPair::zeros(g.clone(), [2.5, 1.5])).unwrap();
    for (i, k) in ks.iter().enumerate() {
        let alpha = k.alpha().value();
        let pw = alpha - 1.0;
        let a = 1.0 / k.gamma_alpha() + C_EXP[i] / k.denom();
        let limit = k.gamma_alpha() / k.denom() * C_EXP[i];
        for (j, &t) in g.nodes().iter().enumerate().filter(|(_, &t)| t < 60.0) {
            let u = t.powf(pw) * a - frac_integral_of_exp(alpha, t);
            let got = y.rows()[i][j] * (1.0 + t.powf(pw));
            assert!((got - u).abs() <= 1e-9 * (1.0 + u), "u{} at t={t}: {got} vs {u}", i + 1);
            let du = (-t).exp() + limit;
            assert!((y.rows()[i + 2][j] - du).abs() < 1e-9, "du{} at t={t}", i + 1);
        }
    }
}

#[test]
fn grid_nodes_are_graded() {
    let g = Grid::new(64, 5.0).unwrap();
    let t = g.nodes();
    assert_eq!(t.len(), 64);
    assert_eq!(t.iter().filter(|&&x| x < 5.0).count(), 32);
    assert!(t[0] > 0.0 && t[0] < 2e-3);
    assert!(g.t_max() > 1e4);
    assert!(matches!(Grid::new(8, 5.0), Err(SolverError::InvalidGrid { .. })));
    assert!(Grid::new(64, 0.0).is_err());
}

#[test]
fn monotone_chains_meet_from_both_sides() {
    let pf = example("ex31").unwrap();
    let ks = pf.spec.kernel_sets(1e-10).unwrap();
    let big_r = analyze(&pf.spec, &CheckOptions::default()).big_r.unwrap();
    let op = Operator::new(&pf.spec, &ks, grid(64), PlanOptions::default()).unwrap();
    let opts = IterOptions::new(1e-5, 500);
    let lower = monotone_iterate(&op, Direction::Lower, big_r, &opts).unwrap();
    let upper = monotone_iterate(&op, Direction::Upper, big_r, &opts).unwrap();
    assert!(lower.converged && upper.converged);
    assert_eq!(lower.scheme, Scheme::Monotone);
    assert_eq!(upper.start_radius, Some(big_r));
    // the derivative row of the power start dominates: Gamma(2.5) R
    assert!((upper.iterates[0].norm() - gamma(2.5).unwrap() * big_r).abs() < 1e-9 * big_r);
    for w in lower.iterates.windows(2) {
        for (a, b) in w[0].rows().iter().zip(w[1].rows()) {
            assert!(a.iter().zip(b.iter()).all(|(x, y)| x <= y));
        }
    }
    // rate well below one, so the limits agree to a few tol
    assert!(lower.last().distance(upper.last()) < 1e-4);
    assert!(lower.records.iter().all(|r| r.clipped == 0));
}

#[test]
fn upper_start_needs_a_radius() {
    let pf = example("ex31").unwrap();
    let ks = pf.spec.kernel_sets(1e-10).unwrap();
    let op = Operator::new(&pf.spec, &ks, grid(16), PlanOptions::default()).unwrap();
    let e = monotone_iterate(&op, Direction::Upper, 0.0, &IterOptions::new(1e-5, 10)).unwrap_err();
    assert!(matches!(e, SolverError::InvalidOptions(_)));
}

#[test]
fn contraction_converges_and_records_bounds() {
    let pf = example("ex32").unwrap();
    let ks = pf.spec.kernel_sets(1e-10).unwrap();
    let (sol, trace) = contract_solve(&pf.spec, &ks, grid(64), None, 1e-6, 200).unwrap();
    assert!(trace.converged);
    let m = trace.m.unwrap();
    for r in &trace.records {
        assert!(r.a_posteriori.unwrap() <= r.a_priori.unwrap() * (1.0 + 1e-12));
        if let Some(q) = r.ratio {
            assert!(q <= m + 1e-9, "n={} ratio={q}", r.n);
        }
    }
    let last = trace.records.last().unwrap();
    assert!(last.a_posteriori.unwrap() <= 1e-6);
    assert!(trace.warnings.is_empty(), "{:?}", trace.warnings);
    assert_eq!(&sol, trace.last());
}

#[test]
fn contraction_refuses_modulus_at_or_above_one() {
    let pf = example("ex32").unwrap();
    let ks = pf.spec.kernel_sets(1e-10).unwrap();
    let op = Operator::new(&pf.spec, &ks, grid(16), PlanOptions::default()).unwrap();
    for m in [1.0, 1.97, -0.1] {
        assert!(matches!(
            contract_iterate(&op, None, m, &IterOptions::new(1e-4, 10)),
            Err(SolverError::Inapplicable(_))
        ));
    }
    let wrong = SolutionPair::zeros(grid(32), [2.5, 1.5]);
    assert!(matches!(
        contract_iterate(&op, Some(wrong), 0.5, &IterOptions::new(1e-4, 10)),
        Err(SolverError::GridMismatch)
    ));
}

#[test]
fn iteration_budget_exhaustion_is_reported() {
    let pf = example("ex31").unwrap();
    let ks = pf.spec.kernel_sets(1e-10).unwrap();
    let (_, trace) = monotone_solve(&pf.spec, &ks, grid(32), Direction::Lower, 1e-12, 3).unwrap();
    assert!(!trace.converged);
    assert_eq!(trace.iterations(), 3);
    assert_eq!(trace.iterates.len(), 4);
    assert!(trace.warnings.iter().any(|w| w.contains("no convergence")));
}

#[test]
fn smoother_interpolation_lands_on_the_same_solution() {
    let pf = example("ex32").unwrap();
    let ks = pf.spec.kernel_sets(1e-10).unwrap();
    let m = analyze(&pf.spec, &CheckOptions::default()).m.unwrap();
    let g = grid(64);
    let run = |interpolation| {
        let op =
            Operator::new(&pf.spec, &ks, g.clone(), PlanOptions { interpolation, ..PlanOptions::default() }).unwrap();
        contract_iterate(&op, None, m, &IterOptions::new(1e-8, 200)).unwrap()
    };
    let lin = run(Interpolation::Linear);
    let cub = run(Interpolation::MonotoneCubic);
    assert!(lin.last().distance(cub.last()) < 1e-3);
}

#[test]
fn zero_boundary_weight_leaves_a_plain_volterra_problem() {
    let mut p = forcing_only();
    p.h = [BoundarySpec::zero(), BoundarySpec::zero()];
    let ks = p.kernel_sets(1e-10).unwrap();
    let g = grid(64);
    let y = apply_t(&p, &ks, &SolutionPair::zeros(g.clone(), [2.5, 1.5])).unwrap();
    // du(t) = int_t^inf e^(-s) ds
    for (j, &t) in g.nodes().iter().enumerate() {
        assert!((y.rows()[2][j] - (-t).exp()).abs() < 1e-10);
    }
}

#[test]
fn csv_output_round_trips() {
    let pf = example("ex32").unwrap();
    let ks = pf.spec.kernel_sets(1e-10).unwrap();
    let (sol, trace) = contract_solve(&pf.spec, &ks, grid(16), None, 1e-4, 100).unwrap();
    let header = vec![("seed".to_string(), "7".to_string()), ("tol".to_string(), "0.0001".to_string())];
    let mut buf = Vec::new();
    sol.write_csv(&mut buf, &header).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("# seed=7\n# tol=0.0001\nt,u,v,du,dv\n"));
    let body: String = text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
    let mut rd = csv::Reader::from_reader(body.as_bytes());
    let rows: Vec<Vec<f64>> = rd.records().map(|r| r.unwrap().iter().map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 16);
    for (j, row) in rows.iter().enumerate() {
        assert_eq!(row[0], sol.grid().nodes()[j]);
        assert_eq!(row[1], sol.u(j));
        assert_eq!(row[4], sol.rows()[3][j]);
    }
    let mut buf = Vec::new();
    trace.write_csv(&mut buf, &header).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), trace.iterations() + 1);
}

#[test]
fn pure_forcing_settles_after_one_step() {
    let p = forcing_only();
    let ks = p.kernel_sets(1e-10).unwrap();
    let op = Operator::new(&p, &ks, grid(32), PlanOptions::default()).unwrap();
    let trace = contract_iterate(&op, None, 0.5, &IterOptions::new(1e-10, 10)).unwrap();
    assert!(trace.converged);
    assert_eq!(trace.iterations(), 2);
    assert!(trace.records[0].diff > 0.1);
    assert!(trace.records[1].diff < 1e-14);
}
