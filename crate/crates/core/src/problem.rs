//! Problem definition, derived constants and hypothesis checks.
//!
//! The system couples two components `u`, `v` of orders `alpha_1`, `alpha_2`
//! through right-hand sides `f_i(t, u, v, D^(alpha_1-1) u, D^(alpha_2-1) v)`
//! and integral boundary weights `h_i`. Growth data bounds
//! `|f_i| <= a_i0 + sum_k a_ik |u_k|^lambda_ik`; Lipschitz data bounds
//! `|f_i(t, x) - f_i(t, y)| <= sum_k b_ik |x_k - y_k|`. Both are supplied by
//! the user; this module integrates them and sample-checks that they
//! really dominate `f_i`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::exprlang::{Env, Expr, Var};
use crate::fracops::{gamma, FracError, FracOrder};
use crate::kernels::{compute_lambda, BoundaryWeight, KernelError, KernelSet};
use crate::quad::{integrate_halfline, Integrand, QuadError, DEFAULT_CONSTANT_TOL};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ProblemError {
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error("integral for {name} failed: {source}{}", detail.as_deref().map(|d| format!(" ({d})")).unwrap_or_default())]
    Integral { name: String, source: QuadError, detail: Option<String> },
    #[error("{0} data is required for this computation")]
    Missing(&'static str),
    #[error("unsupported regime: {0}")]
    Unsupported(String),
    #[error("constant is inapplicable: {0}")]
    Inapplicable(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Frac(#[from] FracError),
}

/// Boundary weight `h_i` as an expression of `t` plus quadrature hints.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    pub expr: Expr,
    /// `h(t) ~ t^sigma` near the origin; may be `<= -1`.
    pub endpoint_exponent: f64,
    pub decay_hint: Option<f64>,
}

impl BoundarySpec {
    pub fn zero() -> Self {
        Self { expr: Expr::Num(0.0), endpoint_exponent: 0.0, decay_hint: None }
    }

    pub fn weight(&self) -> BoundaryWeight {
        let e = self.expr.clone();
        let mut w = BoundaryWeight::new(move |t| eval_t(&e, t)).with_endpoint_exponent(self.endpoint_exponent);
        if let Some(rate) = self.decay_hint {
            w = w.with_decay_hint(rate);
        }
        w
    }
}

/// Growth coefficients `a_ik(t)` (`k = 0..4`) and exponents `lambda_ik` (`k = 1..4`).
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthData {
    pub a: [[Expr; 5]; 2],
    pub lambda: [[f64; 4]; 2],
}

/// Lipschitz coefficients `b_ik(t)`, `k = 1..4`.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzData {
    pub b: [[Expr; 4]; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub alpha: [FracOrder; 2],
    pub h: [BoundarySpec; 2],
    pub f: [Expr; 2],
    pub growth: Option<GrowthData>,
    pub lipschitz: Option<LipschitzData>,
    /// Claim that each `f_i` is nondecreasing in `u1..u4`.
    pub monotone: bool,
}

/// Evaluates an expression of `t` alone; failures become NaN so quadrature
/// reports them with their location.
fn eval_t(e: &Expr, t: f64) -> f64 {
    e.eval(&Env::new().with(Var::T, t)).unwrap_or(f64::NAN)
}

impl ProblemSpec {
    /// Validates orders, variable usage and exponents.
    pub fn new(
        alpha: [FracOrder; 2],
        h: [BoundarySpec; 2],
        f: [Expr; 2],
        growth: Option<GrowthData>,
        lipschitz: Option<LipschitzData>,
        monotone: bool,
    ) -> Result<Self, ProblemError> {
        for (i, a) in alpha.iter().enumerate() {
            if a.value() <= 1.0 {
                return Err(ProblemError::Invalid(format!(
                    "alpha{} = {} must exceed 1 (u(0) = 0 and the weighted norm need alpha > 1)",
                    i + 1,
                    a.value()
                )));
            }
        }
        let t_only = |name: String, e: &Expr| {
            if e.variables().iter().any(|&v| v != Var::T) {
                Err(ProblemError::Invalid(format!("{name} may only depend on t")))
            } else {
                Ok(())
            }
        };
        for (i, hs) in h.iter().enumerate() {
            t_only(format!("h{}", i + 1), &hs.expr)?;
            if !hs.endpoint_exponent.is_finite() {
                return Err(ProblemError::Invalid(format!("h{}_exponent must be finite", i + 1)));
            }
            let sigma = hs.endpoint_exponent + alpha[i].value() - 1.0;
            if sigma <= -1.0 {
                return Err(ProblemError::Invalid(format!(
                    "h{i1}(t) t^(alpha{i1}-1) behaves like t^{sigma} at 0 and is not integrable",
                    i1 = i + 1
                )));
            }
        }
        if let Some(g) = &growth {
            for i in 0..2 {
                for k in 0..5 {
                    t_only(format!("a{}{}", i + 1, k), &g.a[i][k])?;
                }
                for k in 0..4 {
                    let l = g.lambda[i][k];
                    if !(l >= 0.0) || !l.is_finite() {
                        return Err(ProblemError::Invalid(format!(
                            "lambda{}{} = {l} must be a finite nonnegative number",
                            i + 1,
                            k + 1
                        )));
                    }
                }
            }
        }
        if let Some(l) = &lipschitz {
            for i in 0..2 {
                for k in 0..4 {
                    t_only(format!("b{}{}", i + 1, k + 1), &l.b[i][k])?;
                }
            }
        }
        if growth.is_none() && lipschitz.is_none() {
            return Err(ProblemError::Invalid("at least one of growth or lipschitz data must be given".into()));
        }
        Ok(Self { alpha, h, f, growth, lipschitz, monotone })
    }

    /// `f_i(t, u)` for `i in {0, 1}`.
    #[inline]
    pub fn rhs(&self, i: usize, t: f64, u: [f64; 4]) -> Result<f64, crate::exprlang::EvalError> {
        self.f[i].eval(&Env::full(t, u))
    }

    /// Kernel sets for both components.
    pub fn kernel_sets(&self, tol: f64) -> Result<[KernelSet; 2], ProblemError> {
        Ok([
            KernelSet::new(self.h[0].weight(), self.alpha[0], tol)?,
            KernelSet::new(self.h[1].weight(), self.alpha[1], tol)?,
        ])
    }
}

fn integrate_named(name: String, integrand: &Integrand<'_>, expr: &Expr, tol: f64) -> Result<f64, ProblemError> {
    integrate_halfline(integrand, tol).map(|r| r.value).map_err(|source| {
        let detail = match &source {
            QuadError::NonFinite { at } => {
                expr.eval(&Env::full(*at, [0.0; 4])).err().map(|e| format!("{e} at t = {at}"))
            }
            _ => None,
        };
        ProblemError::Integral { name, source, detail }
    })
}

/// `a*_ik`: `a_i0`, `a_i3`, `a_i4` unweighted; `a_i1`, `a_i2` weighted by
/// `(1 + t^(alpha_k - 1))^lambda_ik`.
pub fn compute_growth_constants(p: &ProblemSpec, tol: f64) -> Result<[[f64; 5]; 2], ProblemError> {
    let g = p.growth.as_ref().ok_or(ProblemError::Missing("growth"))?;
    let jobs: Vec<(usize, usize)> = (0..2).flat_map(|i| (0..5).map(move |k| (i, k))).collect();
    let values: Vec<f64> = jobs
        .par_iter()
        .map(|&(i, k)| {
            let e = &g.a[i][k];
            let weight_exp = match k {
                1 | 2 => Some((p.alpha[k - 1].value() - 1.0, g.lambda[i][k - 1])),
                _ => None,
            };
            let f = Integrand::new(move |t: f64| {
                let w = weight_exp.map_or(1.0, |(q, l)| (1.0 + t.powf(q)).powf(l));
                eval_t(e, t) * w
            });
            integrate_named(format!("a{}{}", i + 1, k), &f, e, tol)
        })
        .collect::<Result<_, _>>()?;
    let mut out = [[0.0; 5]; 2];
    for (&(i, k), v) in jobs.iter().zip(values) {
        out[i][k] = v;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LipschitzConstants {
    pub b_star: [[f64; 4]; 2],
    /// `tau_i = int_0^inf |f_i(t, 0, 0, 0, 0)| dt`.
    pub tau: [f64; 2],
}

/// `b*_ik` (weights `1 + t^(alpha_k - 1)` for `k = 1, 2`) and `tau_i`.
pub fn compute_lipschitz_constants(p: &ProblemSpec, tol: f64) -> Result<LipschitzConstants, ProblemError> {
    let l = p.lipschitz.as_ref().ok_or(ProblemError::Missing("lipschitz"))?;
    let jobs: Vec<(usize, usize)> = (0..2).flat_map(|i| (0..5).map(move |k| (i, k))).collect();
    let values: Vec<f64> = jobs
        .par_iter()
        .map(|&(i, k)| {
            if k == 4 {
                let f = &p.f[i];
                let g = Integrand::new(move |t: f64| f.eval(&Env::full(t, [0.0; 4])).map_or(f64::NAN, f64::abs));
                return integrate_named(format!("tau{}", i + 1), &g, f, tol);
            }
            let e = &l.b[i][k];
            let q = (k < 2).then(|| p.alpha[k].value() - 1.0);
            let g = Integrand::new(move |t: f64| eval_t(e, t) * q.map_or(1.0, |q| 1.0 + t.powf(q)));
            integrate_named(format!("b{}{}", i + 1, k + 1), &g, e, tol)
        })
        .collect::<Result<_, _>>()?;
    let mut out = LipschitzConstants { b_star: [[0.0; 4]; 2], tau: [0.0; 2] };
    for (&(i, k), v) in jobs.iter().zip(values) {
        if k == 4 {
            out.tau[i] = v;
        } else {
            out.b_star[i][k] = v;
        }
    }
    Ok(out)
}

/// `L_i = 1 / (Gamma(alpha_i) - Lambda_i)` and
/// `L = max{L_1, L_2, Gamma(alpha_1) L_1, Gamma(alpha_2) L_2}`.
pub fn l_constants(gamma_alpha: [f64; 2], lambda: [f64; 2]) -> ([f64; 2], f64) {
    let li = [1.0 / (gamma_alpha[0] - lambda[0]), 1.0 / (gamma_alpha[1] - lambda[1])];
    let l = li[0].max(li[1]).max(gamma_alpha[0] * li[0]).max(gamma_alpha[1] * li[1]);
    (li, l)
}

/// `m = L * max{sum_k b*_1k, sum_k b*_2k}`.
pub fn modulus_from(l: f64, b_star: &[[f64; 4]; 2]) -> f64 {
    let s1: f64 = b_star[0].iter().sum();
    let s2: f64 = b_star[1].iter().sum();
    l * s1.max(s2)
}

/// `R = max{5 a*_10, 5 a*_20, (5 L a*_ik)^(1/(1 - lambda_ik))}`.
pub fn radius_r_upper_from(l: f64, a_star: &[[f64; 5]; 2], lambda: &[[f64; 4]; 2]) -> Result<f64, ProblemError> {
    let mut r = (5.0 * a_star[0][0]).max(5.0 * a_star[1][0]);
    for i in 0..2 {
        for k in 0..4 {
            let lam = lambda[i][k];
            if lam >= 1.0 {
                return Err(ProblemError::Unsupported(format!(
                    "lambda{}{} = {lam} >= 1; only 0 <= lambda < 1 is covered",
                    i + 1,
                    k + 1
                )));
            }
            r = r.max((5.0 * l * a_star[i][k + 1]).powf(1.0 / (1.0 - lam)));
        }
    }
    Ok(r)
}

/// `r = L max{tau_1, tau_2} / (1 - m)`.
pub fn radius_r_lower_from(l: f64, tau: [f64; 2], m: f64) -> Result<f64, ProblemError> {
    if m >= 1.0 {
        return Err(ProblemError::Inapplicable(format!("m = {m} is not below 1")));
    }
    Ok(l * tau[0].max(tau[1]) / (1.0 - m))
}

/// `L (a*_i0 + sum_k a*_ik R^lambda_ik)` for each component; both must stay
/// below `R` for the ball of radius `R` to be mapped into itself.
pub fn self_map_bound(l: f64, a_star: &[[f64; 5]; 2], lambda: &[[f64; 4]; 2], r: f64) -> [f64; 2] {
    let one = |i: usize| {
        let s: f64 = (0..4).map(|k| a_star[i][k + 1] * r.powf(lambda[i][k])).sum();
        l * (a_star[i][0] + s)
    };
    [one(0), one(1)]
}

fn lambdas_and_l(p: &ProblemSpec, tol: f64) -> Result<([f64; 2], [f64; 2], f64), ProblemError> {
    let ga = [gamma(p.alpha[0].value())?, gamma(p.alpha[1].value())?];
    let lam = [compute_lambda(&p.h[0].weight(), p.alpha[0], tol)?, compute_lambda(&p.h[1].weight(), p.alpha[1], tol)?];
    let (_, l) = l_constants(ga, lam);
    Ok((ga, lam, l))
}

/// Contraction modulus computed from scratch.
pub fn contraction_modulus(p: &ProblemSpec, tol: f64) -> Result<f64, ProblemError> {
    let (_, _, l) = lambdas_and_l(p, tol)?;
    Ok(modulus_from(l, &compute_lipschitz_constants(p, tol)?.b_star))
}

/// Radius `R` of the invariant ball for the monotone schemes.
#[allow(non_snake_case)]
pub fn radius_R(p: &ProblemSpec, tol: f64) -> Result<f64, ProblemError> {
    let (_, _, l) = lambdas_and_l(p, tol)?;
    let g = p.growth.as_ref().ok_or(ProblemError::Missing("growth"))?;
    radius_r_upper_from(l, &compute_growth_constants(p, tol)?, &g.lambda)
}

/// Radius `r` of the invariant ball for the contraction scheme.
pub fn radius_r(p: &ProblemSpec, tol: f64) -> Result<f64, ProblemError> {
    let (_, _, l) = lambdas_and_l(p, tol)?;
    let c = compute_lipschitz_constants(p, tol)?;
    radius_r_lower_from(l, c.tau, modulus_from(l, &c.b_star))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Hypothesis {
    H1,
    H2,
    H3,
    H4,
    /// `m < 1`.
    Contraction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub hypothesis: Hypothesis,
    pub status: Status,
    pub reasons: Vec<String>,
}

impl Verdict {
    fn new(hypothesis: Hypothesis, reasons: Vec<String>) -> Self {
        let status = if reasons.is_empty() { Status::Pass } else { Status::Fail };
        Self { hypothesis, status, reasons }
    }

    fn skipped(hypothesis: Hypothesis, why: &str) -> Self {
        Self { hypothesis, status: Status::Skipped, reasons: vec![why.to_string()] }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// 64 log-spaced points in `[1e-3, 1e3]`.
fn log_samples() -> Vec<f64> {
    (0..64).map(|j| 10f64.powf(-3.0 + 6.0 * j as f64 / 63.0)).collect()
}

/// `Lambda_i < Gamma(alpha_i)` and `f_i(t, 0, 0, 0, 0)` not identically zero.
pub fn check_h1(p: &ProblemSpec, tol: f64) -> (Verdict, [Option<f64>; 2]) {
    let mut reasons = Vec::new();
    let mut lambda = [None, None];
    for i in 0..2 {
        let ga = match gamma(p.alpha[i].value()) {
            Ok(g) => g,
            Err(e) => {
                reasons.push(format!("Gamma(alpha{}): {e}", i + 1));
                continue;
            }
        };
        match compute_lambda(&p.h[i].weight(), p.alpha[i], tol) {
            Ok(l) => {
                lambda[i] = Some(l);
                if l < -tol {
                    reasons.push(format!("Lambda{} = {l} is negative", i + 1));
                }
                if l >= ga {
                    reasons.push(format!("Lambda{} = {l} is not below Gamma(alpha{}) = {ga}", i + 1, i + 1));
                }
            }
            Err(e) => reasons.push(format!("Lambda{}: {e}", i + 1)),
        }
        let nonzero = log_samples().into_iter().any(|t| p.rhs(i, t, [0.0; 4]).is_ok_and(|v| v != 0.0));
        if !nonzero {
            reasons.push(format!("f{}(t, 0, 0, 0, 0) vanishes at every sample point", i + 1));
        }
    }
    (Verdict::new(Hypothesis::H1, reasons), lambda)
}

/// Point where a sampled check failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub component: usize,
    pub t: f64,
    pub u: [f64; 4],
    pub u_prime: Option<[f64; 4]>,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledChecks {
    pub seed: u64,
    pub samples: usize,
    /// Monotonicity in `u` (only when claimed).
    pub monotone: Option<Witness>,
    pub monotone_checked: bool,
    /// `f_i >= 0` on the cone.
    pub positivity: Option<Witness>,
    /// `|f_i| <= a_i0 + sum a_ik |u_k|^lambda_ik`.
    pub growth: Option<Witness>,
    /// `|f_i(x) - f_i(y)| <= sum b_ik |x_k - y_k|`.
    pub lipschitz: Option<Witness>,
    pub eval_error: Option<Witness>,
}

/// Randomized falsification of monotonicity, positivity and the declared
/// growth and Lipschitz bounds over `t in (0, 10]`, `u in [0, 10]^4`.
///
/// Passing means no counterexample was found, not that the property holds.
pub fn sample_checks(p: &ProblemSpec, samples: usize, seed: u64) -> SampledChecks {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SampledChecks {
        seed,
        samples,
        monotone: None,
        monotone_checked: p.monotone,
        positivity: None,
        growth: None,
        lipschitz: None,
        eval_error: None,
    };
    let close = |a: f64, b: f64| a <= b + 1e-12 * (1.0 + a.abs().max(b.abs()));
    for _ in 0..samples {
        let t: f64 = 10.0 * (1.0 - rng.gen::<f64>());
        let u: [f64; 4] = std::array::from_fn(|_| 10.0 * rng.gen::<f64>());
        // Some coordinates keep the same value so that partial orders are exercised too.
        let up: [f64; 4] =
            std::array::from_fn(|k| if rng.gen_bool(0.25) { u[k] } else { u[k] + 10.0 * rng.gen::<f64>() });
        for i in 0..2 {
            let witness = |description: String, u_prime: Option<[f64; 4]>| Witness {
                component: i + 1,
                t,
                u,
                u_prime,
                description,
            };
            let (fu, fup) = match (p.rhs(i, t, u), p.rhs(i, t, up)) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => {
                    out.eval_error.get_or_insert_with(|| witness(format!("evaluation failed: {e}"), Some(up)));
                    continue;
                }
            };
            if fu < 0.0 {
                out.positivity.get_or_insert_with(|| witness(format!("f{} = {fu} < 0", i + 1), None));
            }
            if p.monotone && !close(fu, fup) {
                out.monotone.get_or_insert_with(|| {
                    witness(format!("f{}(t, u) = {fu} > f{}(t, u') = {fup} with u <= u'", i + 1, i + 1), Some(up))
                });
            }
            if let Some(g) = &p.growth {
                let bound = eval_t(&g.a[i][0], t)
                    + (0..4).map(|k| eval_t(&g.a[i][k + 1], t) * u[k].abs().powf(g.lambda[i][k])).sum::<f64>();
                if !(fu.abs() <= bound * (1.0 + 1e-9) + 1e-12) {
                    out.growth.get_or_insert_with(|| {
                        witness(format!("|f{}| = {} exceeds growth bound {bound}", i + 1, fu.abs()), None)
                    });
                }
            }
            if let Some(l) = &p.lipschitz {
                let bound: f64 = (0..4).map(|k| eval_t(&l.b[i][k], t) * (u[k] - up[k]).abs()).sum();
                let diff = (fu - fup).abs();
                if !(diff <= bound * (1.0 + 1e-9) + 1e-12) {
                    out.lipschitz.get_or_insert_with(|| {
                        witness(format!("|f{} difference| = {diff} exceeds Lipschitz bound {bound}", i + 1), Some(up))
                    });
                }
            }
        }
    }
    out
}

/// Monotonicity check on its own; skipped when the problem makes no claim.
pub fn check_h4(p: &ProblemSpec, samples: usize, seed: u64) -> (Verdict, Option<Witness>) {
    if !p.monotone {
        return (Verdict::skipped(Hypothesis::H4, "monotonicity not claimed"), None);
    }
    let s = sample_checks(p, samples, seed);
    let mut reasons = Vec::new();
    if let Some(w) = &s.monotone {
        reasons.push(format!("counterexample: {} at t = {}, u = {:?}", w.description, w.t, w.u));
    }
    if let Some(w) = &s.eval_error {
        reasons.push(format!("f{}: {} at t = {}, u = {:?}", w.component, w.description, w.t, w.u));
    }
    (Verdict::new(Hypothesis::H4, reasons), s.monotone)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    pub tol: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_CONSTANT_TOL, samples: 10_000, seed: 0x5eed }
    }
}

/// A published value compared against the computed one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceCheck {
    pub name: String,
    pub published: f64,
    pub computed: Option<f64>,
    pub tolerance: f64,
    pub matches: bool,
}

/// Every derived constant plus per-hypothesis verdicts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub alpha: [f64; 2],
    pub gamma_alpha: [f64; 2],
    pub lambda: [Option<f64>; 2],
    pub l_i: Option<[f64; 2]>,
    pub l: Option<f64>,
    pub a_star: Option<[[f64; 5]; 2]>,
    pub b_star: Option<[[f64; 4]; 2]>,
    pub tau: Option<[f64; 2]>,
    pub m: Option<f64>,
    #[serde(rename = "R")]
    pub big_r: Option<f64>,
    /// `L (a*_i0 + sum a*_ik R^lambda_ik)`; at most `R` when the ball is invariant.
    pub self_map_bound: Option<[f64; 2]>,
    pub r: Option<f64>,
    pub samples: SampledChecks,
    pub verdicts: Vec<Verdict>,
    pub references: Vec<ReferenceCheck>,
    pub tol: f64,
}

impl HypothesisReport {
    pub fn verdict(&self, h: Hypothesis) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.hypothesis == h)
    }

    /// Whether every listed hypothesis passed.
    pub fn all_pass(&self, required: &[Hypothesis]) -> bool {
        required.iter().all(|h| self.verdict(*h).is_some_and(Verdict::passed))
    }

    /// Compares published values (by constant name) with the computed ones.
    pub fn compare_references(&mut self, published: &[(String, f64)]) {
        self.references = published
            .iter()
            .map(|(name, value)| {
                let computed = self.lookup(name);
                let tolerance = 1e-4 * value.abs().max(1e-8);
                ReferenceCheck {
                    name: name.clone(),
                    published: *value,
                    computed,
                    tolerance,
                    matches: computed.is_some_and(|c| (c - value).abs() <= tolerance),
                }
            })
            .collect();
    }

    /// Looks up a constant by its problem-file name (`lambda1`, `a14`, `b23`, `tau2`, `L`, `m`, `R`, `r`).
    pub fn lookup(&self, name: &str) -> Option<f64> {
        let idx = |c: u8| (c as char).to_digit(10).map(|d| d as usize);
        let b = name.as_bytes();
        match name {
            "L" => self.l,
            "m" => self.m,
            "R" => self.big_r,
            "r" => self.r,
            _ if name.starts_with("gamma") && b.len() == 6 => {
                idx(b[5]).filter(|i| (1..=2).contains(i)).map(|i| self.gamma_alpha[i - 1])
            }
            _ if name.starts_with("lambda") && b.len() == 7 => {
                idx(b[6]).filter(|i| (1..=2).contains(i)).and_then(|i| self.lambda[i - 1])
            }
            _ if name.starts_with("tau") && b.len() == 4 => {
                idx(b[3]).filter(|i| (1..=2).contains(i)).and_then(|i| self.tau.map(|t| t[i - 1]))
            }
            _ if b.len() == 3 && (b[0] == b'a' || b[0] == b'b') => {
                let i = idx(b[1]).filter(|i| (1..=2).contains(i))?;
                let k = idx(b[2])?;
                if b[0] == b'a' {
                    self.a_star.filter(|_| k <= 4).map(|a| a[i - 1][k])
                } else {
                    self.b_star.filter(|_| (1..=4).contains(&k)).map(|b| b[i - 1][k - 1])
                }
            }
            _ => None,
        }
    }
}

/// Computes all constants and verdicts. Never fails: problems surface as
/// failing verdicts with reasons.
pub fn analyze(p: &ProblemSpec, opts: &CheckOptions) -> HypothesisReport {
    let alpha = [p.alpha[0].value(), p.alpha[1].value()];
    let gamma_alpha = [gamma(alpha[0]).unwrap_or(f64::NAN), gamma(alpha[1]).unwrap_or(f64::NAN)];
    let (h1, lambda) = check_h1(p, opts.tol);
    let (l_i, l) = match lambda {
        [Some(a), Some(b)] => {
            let (li, l) = l_constants(gamma_alpha, [a, b]);
            (Some(li), Some(l))
        }
        _ => (None, None),
    };
    let samples = sample_checks(p, opts.samples, opts.seed);
    let mut verdicts = vec![h1];

    let (mut a_star, mut big_r, mut self_map) = (None, None, None);
    match &p.growth {
        None => verdicts.push(Verdict::skipped(Hypothesis::H2, "no growth data")),
        Some(g) => {
            let mut reasons = Vec::new();
            match compute_growth_constants(p, opts.tol) {
                Ok(a) => {
                    a_star = Some(a);
                    if let Some(l) = l {
                        match radius_r_upper_from(l, &a, &g.lambda) {
                            Ok(r) => {
                                big_r = Some(r);
                                self_map = Some(self_map_bound(l, &a, &g.lambda, r));
                            }
                            Err(e) => reasons.push(e.to_string()),
                        }
                    }
                }
                Err(e) => reasons.push(e.to_string()),
            }
            reasons.extend(coefficient_sign_reasons(g.a.iter().flatten()));
            if let Some(w) = &samples.growth {
                reasons.push(format!("growth bound violated at t = {}, u = {:?}: {}", w.t, w.u, w.description));
            }
            verdicts.push(Verdict::new(Hypothesis::H2, reasons));
        }
    }

    let (mut b_star, mut tau, mut m, mut r) = (None, None, None, None);
    match &p.lipschitz {
        None => {
            verdicts.push(Verdict::skipped(Hypothesis::H3, "no Lipschitz data"));
            verdicts.push(Verdict::skipped(Hypothesis::Contraction, "no Lipschitz data"));
        }
        Some(ld) => {
            let mut reasons = Vec::new();
            let mut contraction = Vec::new();
            match compute_lipschitz_constants(p, opts.tol) {
                Ok(c) => {
                    b_star = Some(c.b_star);
                    tau = Some(c.tau);
                    if let Some(l) = l {
                        let mm = modulus_from(l, &c.b_star);
                        m = Some(mm);
                        match radius_r_lower_from(l, c.tau, mm) {
                            Ok(v) => r = Some(v),
                            Err(e) => contraction.push(e.to_string()),
                        }
                    } else {
                        contraction.push("L unavailable because H1 failed".into());
                    }
                }
                Err(e) => {
                    reasons.push(e.to_string());
                    contraction.push("constants unavailable".into());
                }
            }
            reasons.extend(coefficient_sign_reasons(ld.b.iter().flatten()));
            if let Some(w) = &samples.lipschitz {
                reasons.push(format!("Lipschitz bound violated at t = {}, u = {:?}: {}", w.t, w.u, w.description));
            }
            verdicts.push(Verdict::new(Hypothesis::H3, reasons));
            verdicts.push(Verdict::new(Hypothesis::Contraction, contraction));
        }
    }

    let mut h4 = Vec::new();
    if p.monotone {
        if let Some(w) = &samples.monotone {
            h4.push(format!("counterexample at t = {}, u = {:?}, u' = {:?}: {}", w.t, w.u, w.u_prime, w.description));
        }
        if let Some(w) = &samples.positivity {
            h4.push(format!("f must be nonnegative on the cone: {} at t = {}, u = {:?}", w.description, w.t, w.u));
        }
        if let Some(w) = &samples.eval_error {
            h4.push(format!("f{}: {} at t = {}, u = {:?}", w.component, w.description, w.t, w.u));
        }
        verdicts.push(Verdict::new(Hypothesis::H4, h4));
    } else {
        verdicts.push(Verdict::skipped(Hypothesis::H4, "monotonicity not claimed"));
    }

    HypothesisReport {
        alpha,
        gamma_alpha,
        lambda,
        l_i,
        l,
        a_star,
        b_star,
        tau,
        m,
        big_r,
        self_map_bound: self_map,
        r,
        samples,
        verdicts,
        references: Vec::new(),
        tol: opts.tol,
    }
}

fn coefficient_sign_reasons<'a>(coeffs: impl Iterator<Item = &'a Expr>) -> Vec<String> {
    let mut out = Vec::new();
    for e in coeffs {
        if let Some(t) = log_samples().into_iter().find(|&t| eval_t(e, t) < 0.0) {
            out.push(format!("coefficient `{e}` is negative at t = {t}"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::parse;

    #[test]
    fn l_constants_of_the_reference_orders() {
        let ga = [gamma(2.5).unwrap(), gamma(1.5).unwrap()];
        let (li, l) = l_constants(ga, [1.0, 0.5]);
        assert!((li[0] - 3.036_372_203_023_194).abs() < 1e-12);
        assert!((l - (1.0 + 3.036_372_203_023_194)).abs() < 1e-12);
    }

    #[test]
    fn modulus_is_linear_and_zero_for_zero_data() {
        assert_eq!(modulus_from(4.0, &[[0.0; 4]; 2]), 0.0);
        let b = [[0.1, 0.0, 0.0, 0.0], [0.05, 0.05, 0.05, 0.0]];
        let m = modulus_from(2.0, &b);
        assert!((m - 0.3).abs() < 1e-15);
        let b2 = b.map(|row| row.map(|x| 2.0 * x));
        assert!((modulus_from(2.0, &b2) - 2.0 * m).abs() < 1e-15);
    }

    #[test]
    fn upper_radius_trivial_cases() {
        let mut a = [[0.0; 5]; 2];
        a[0][0] = 1.0;
        let lam = [[0.5; 4]; 2];
        assert_eq!(radius_r_upper_from(4.0, &a, &lam).unwrap(), 5.0);
        a[1][0] = 3.0;
        assert_eq!(radius_r_upper_from(4.0, &a, &lam).unwrap(), 15.0);
        let bad = [[0.5, 1.0, 0.5, 0.5], [0.5; 4]];
        assert!(matches!(radius_r_upper_from(4.0, &a, &bad), Err(ProblemError::Unsupported(_))));
    }

    #[test]
    fn lower_radius_cases() {
        assert_eq!(radius_r_lower_from(4.0, [0.0, 0.0], 0.5).unwrap(), 0.0);
        assert!((radius_r_lower_from(4.0, [0.2, 0.1], 0.0).unwrap() - 0.8).abs() < 1e-15);
        assert!(radius_r_lower_from(4.0, [0.2, 0.1], 1.0).is_err());
    }

    fn simple(f1: &str, monotone: bool) -> ProblemSpec {
        let zero = || parse("0").unwrap();
        ProblemSpec::new(
            [FracOrder::new(2.5).unwrap(), FracOrder::new(1.5).unwrap()],
            [BoundarySpec::zero(), BoundarySpec::zero()],
            [parse(f1).unwrap(), parse("exp(-t)").unwrap()],
            None,
            Some(LipschitzData {
                b: [[parse("exp(-t)").unwrap(), zero(), zero(), zero()], [zero(), zero(), zero(), zero()]],
            }),
            monotone,
        )
        .unwrap()
    }

    #[test]
    fn monotonicity_counterexample_is_found() {
        let p = simple("exp(-t)*(1 - u1/(1+u1))", true);
        let (v, w) = check_h4(&p, 1000, 7);
        assert_eq!(v.status, Status::Fail);
        let w = w.expect("witness");
        assert!(w.u_prime.unwrap()[0] >= w.u[0]);
        let (v, _) = check_h4(&simple("exp(-t)", true), 1000, 7);
        assert_eq!(v.status, Status::Pass);
        let (v, _) = check_h4(&simple("exp(-t)", false), 1000, 7);
        assert_eq!(v.status, Status::Skipped);
    }

    #[test]
    fn sampled_checks_are_seed_deterministic() {
        let p = simple("exp(-t)*abs(u1)", true);
        assert_eq!(sample_checks(&p, 500, 11), sample_checks(&p, 500, 11));
        // b11 = exp(-t) exactly matches the Lipschitz constant of exp(-t)|u1|
        assert!(sample_checks(&p, 500, 11).lipschitz.is_none());
        let loose = simple("2*exp(-t)*abs(u1)", true);
        assert!(sample_checks(&loose, 500, 11).lipschitz.is_some());
    }

    #[test]
    fn orders_at_most_one_are_rejected() {
        let r = ProblemSpec::new(
            [FracOrder::new(0.5).unwrap(), FracOrder::new(1.5).unwrap()],
            [BoundarySpec::zero(), BoundarySpec::zero()],
            [parse("1").unwrap(), parse("1").unwrap()],
            None,
            None,
            false,
        );
        assert!(matches!(r, Err(ProblemError::Invalid(_))));
    }

    #[test]
    fn lookup_by_name() {
        let p = simple("exp(-t)", true);
        let rep = analyze(&p, &CheckOptions { samples: 50, ..Default::default() });
        assert_eq!(rep.lookup("lambda1"), Some(0.0));
        assert!((rep.lookup("b11").unwrap() - (1.0 + gamma(2.5).unwrap())).abs() < 1e-8);
        assert!((rep.lookup("tau2").unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(rep.lookup("a10"), None);
        assert_eq!(rep.lookup("b15"), None);
        assert_eq!(rep.lookup("nonsense"), None);
    }
}
