//! Post-hoc checks of computed solutions and iteration traces.
//!
//! Every audit is a pure function of its inputs, so verdicts can be
//! replayed from serialized traces.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::exprlang::EvalError;
use crate::fracops::{self, FracError, FracOrder};
use crate::kernels::{KernelError, KernelSet};
use crate::quad::{integrate_finite, Integrand, QuadError, DEFAULT_LOOP_TOL};
use crate::solver::{
    interpolate, pchip_slopes, Interpolation, IterationTrace, Operator, Profile, SolutionPair, SolverError,
};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Frac(#[from] FracError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("f{component} failed at t = {t}: {source}")]
    Eval { component: usize, t: f64, source: EvalError },
    #[error("spot-check point t = {0} is outside the grid interior")]
    OutsideGrid(f64),
}

/// `||sp - T(sp)||`, the primary correctness signal.
pub fn fixed_point_residual(op: &Operator<'_>, sp: &SolutionPair) -> Result<f64, VerifyError> {
    Ok(op.apply(sp)?.distance(sp))
}

/// Boundary-condition mismatch per component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryResidual {
    /// `|D^(a_i-1) u_i(inf) - int_0^{t_N} h_i u_i|`, with the limit estimated
    /// as the derivative row at `t_N` minus `int_{t_N}^inf f_i`.
    pub residual: [f64; 2],
    /// `int_{t_N}^inf |f_i|`: how far the row at `t_N` sits from its limit.
    pub tail_mass: [f64; 2],
}

/// Compares the limits of the derivative rows with the boundary functional
/// of the interpolated value rows. Past `t_N` only the step part of `K*`
/// changes, so the limit is the row at `t_N` minus the forcing integral
/// beyond it.
///
/// The value rows are interpolated as `u = t^(alpha-1) g` with `g` monotone
/// cubic: `g` is smooth at the origin where `u` is not, and the weight `h_i`
/// may be singular there.
pub fn boundary_residual(
    op: &Operator<'_>,
    kernels: &[KernelSet; 2],
    sp: &SolutionPair,
    tol: f64,
) -> Result<BoundaryResidual, VerifyError> {
    let t = sp.grid().nodes();
    let t_max = sp.grid().t_max();
    let last = t.len() - 1;
    let mut out = BoundaryResidual { residual: [0.0; 2], tail_mass: [0.0; 2] };
    let (_, stats) = op.apply_with_stats(sp)?;
    for (i, ks) in kernels.iter().enumerate() {
        let p = ks.alpha().value() - 1.0;
        let g: Vec<f64> = (0..t.len()).map(|j| sp.rows()[i][j] * (1.0 + t[j].powf(-p))).collect();
        let slopes = pchip_slopes(t, &g);
        let (g, slopes) = (&g, &slopes);
        let f = ks
            .h()
            .times(p, move |x: f64| x.powf(p) * interpolate(t, g, Some(slopes), x))?
            .with_kinks(t[..last].to_vec())?;
        let integral = integrate_finite(&f, 0.0, t_max, tol)?.value;
        let limit = sp.rows()[2 + i][last] - stats.tail_integral[i];
        out.residual[i] = (limit - integral).abs();
        out.tail_mass[i] = stats.tail_mass[i];
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OdeResidual {
    pub t: f64,
    pub component: usize,
    /// `|D^(a_i) u_i(t) + f_i(t, state(t))|`.
    pub residual: f64,
    /// Weighted gap between the kernel representation and the stored row at `t`.
    pub representation_gap: f64,
    /// Richardson error estimate of the numerical derivative.
    pub derivative_error: f64,
    /// Set when the derivative estimate is not trustworthy to `1e-6`.
    pub noisy: bool,
}

/// Spot-checks the differential equations at interior points.
///
/// With `F_i(s) = f_i(s, state(s))` from the interpolated state, each
/// component is continued off the grid by its kernel representation
/// `u(t) = t^(a-1) A - I^a F(t)`, where `A` collects `int F` and the
/// boundary coupling. `D^a u` is then taken by definition, `d^n/dt^n` of
/// `I^(n-a) u`, with the outer fractional integral applied in closed form
/// through the semigroup law and the `n`-th derivative by Richardson-
/// extrapolated differences. The representation gap compares `u(t)` with
/// the stored row, which is where a non-solution shows up.
pub fn ode_residual_spotcheck(
    op: &Operator<'_>,
    kernels: &[KernelSet; 2],
    sp: &SolutionPair,
    points: &[f64],
) -> Result<Vec<OdeResidual>, VerifyError> {
    let nodes = sp.grid().nodes();
    for &t in points {
        if !(t > nodes[0] && t < sp.grid().t_max()) {
            return Err(VerifyError::OutsideGrid(t));
        }
    }
    let problem = op.problem();
    let profile = Profile::new(sp, Interpolation::MonotoneCubic);
    let mut out = Vec::new();
    for (i, ks) in kernels.iter().enumerate() {
        let alpha = ks.alpha();
        let p = alpha.value() - 1.0;
        let n = alpha.ceil();
        let forcing = |s: f64| -> f64 {
            if s <= 0.0 {
                return problem.rhs(i, 0.0, [0.0; 4]).unwrap_or(f64::NAN);
            }
            problem.rhs(i, s, profile.state(s)).unwrap_or(f64::NAN)
        };
        // The operator's rule has panel breaks at the nodes, where the
        // interpolated state has its kinks, and `inner` cached at its points.
        let (sq, wq) = op.quadrature();
        let (mut total, mut c) = (0.0, 0.0);
        for (&s, &w) in sq.iter().zip(wq) {
            let fs = forcing(s);
            total += w * fs;
            c += w * ks.inner_integral(s)? * fs;
        }
        let a = total / ks.gamma_alpha() + c / ks.denom();

        // I^q F(x) for integer or fractional q.
        let frac_integral = |q: f64, x: f64| -> Result<f64, FracError> {
            let order = FracOrder::new(q)?;
            let g = Integrand::new(forcing).with_kinks(nodes.iter().copied().filter(|&k| k < x).collect())?;
            Ok(fracops::rl_integral(&g, order, x, 1e-13)?.value)
        };
        // I^(n-a) u(x) = A Gamma(a)/Gamma(n) x^(n-1) - I^n F(x)
        let gamma_n = fracops::gamma(n as f64)?;
        let phi = |x: f64| -> Result<f64, FracError> {
            Ok(a * ks.gamma_alpha() / gamma_n * x.powi(n as i32 - 1) - frac_integral(n as f64, x)?)
        };
        for &t in points {
            let est = fracops::nth_derivative(&phi, n, t, 0.5 * t / n as f64)?;
            let state = profile.state(t);
            let f_t = problem.rhs(i, t, state).map_err(|source| VerifyError::Eval { component: i + 1, t, source })?;
            let u_t = t.powf(p) * a - frac_integral(alpha.value(), t)?;
            out.push(OdeResidual {
                t,
                component: i + 1,
                residual: (est.value + f_t).abs(),
                representation_gap: (u_t - state[i]).abs() / (1.0 + t.powf(p)),
                derivative_error: est.error,
                noisy: est.error > 1e-6 * (1.0 + est.value.abs()),
            });
        }
    }
    Ok(out)
}

/// First violated link of an ordering chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderViolation {
    pub iteration: usize,
    pub node: usize,
    pub row: usize,
    pub link: &'static str,
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingAudit {
    pub ok: bool,
    pub comparisons: usize,
    pub violation: Option<OrderViolation>,
}

fn slack(quad_tol: f64, x: f64) -> f64 {
    10.0 * quad_tol * x.abs().max(1.0)
}

/// Checks `w_0 <= w_1 <= ... <= w_K <= u_K' <= ... <= u_1 <= u_0` entrywise
/// in all four rows, plus `w_n <= u_n` for every common index.
pub fn ordering_audit(lower: &IterationTrace, upper: &IterationTrace, quad_tol: f64) -> OrderingAudit {
    let mut comparisons = 0;
    let mut check = |small: &SolutionPair, big: &SolutionPair, iteration: usize, link: &'static str| {
        for (row, (a, b)) in small.rows().iter().zip(big.rows()).enumerate() {
            for (node, (&x, &y)) in a.iter().zip(b).enumerate() {
                comparisons += 1;
                if x - y > slack(quad_tol, y) {
                    return Some(OrderViolation { iteration, node, row, link, amount: x - y });
                }
            }
        }
        None
    };
    let (lw, up) = (&lower.iterates, &upper.iterates);
    let mut violation = None;
    for n in 1..lw.len().max(up.len()) {
        if let Some(v) = lw.get(n).and_then(|cur| check(&lw[n - 1], cur, n, "lower chain nondecreasing")) {
            violation = Some(v);
            break;
        }
        if let Some(v) = up.get(n).and_then(|cur| check(cur, &up[n - 1], n, "upper chain nonincreasing")) {
            violation = Some(v);
            break;
        }
        if let (Some(a), Some(b)) = (lw.get(n), up.get(n)) {
            if let Some(v) = check(a, b, n, "lower below upper") {
                violation = Some(v);
                break;
            }
        }
    }
    if violation.is_none() {
        if let (Some(a), Some(b)) = (lw.last(), up.last()) {
            violation = check(a, b, lw.len().max(up.len()) - 1, "lower limit below upper limit");
        }
    }
    OrderingAudit { ok: violation.is_none(), comparisons, violation }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundViolation {
    pub n: usize,
    /// `None` for the distance to the reference, `Some(j)` for `||x_j - x_n||`.
    pub j: Option<usize>,
    pub distance: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBoundAudit {
    pub ok: bool,
    pub m: f64,
    pub checked: usize,
    /// Largest `distance / (bound + eps)`; at most 1 when `ok`.
    pub worst_ratio: f64,
    pub worst: Option<BoundViolation>,
}

/// Checks `||x_n - reference|| <= m^n / (1 - m) d_1 + eps` for every
/// recorded `n`, and the telescoping bound
/// `||x_j - x_n|| <= m^n (1 - m^(j-n)) / (1 - m) d_1 + eps` for `n < j`.
///
/// `eps = 10 quad_tol max(1, ||reference||)`. A modulus below the true
/// contraction rate makes the bounds too tight, and the audit fails.
pub fn error_bound_audit(trace: &IterationTrace, m: f64, reference: &SolutionPair, quad_tol: f64) -> ErrorBoundAudit {
    let mut audit = ErrorBoundAudit { ok: false, m, checked: 0, worst_ratio: f64::INFINITY, worst: None };
    if !(0.0..1.0).contains(&m) || trace.records.is_empty() {
        return audit;
    }
    let xs = &trace.iterates;
    let d1 = trace.records[0].diff;
    let eps = slack(quad_tol, reference.norm());
    let mut worst_ratio: f64 = 0.0;
    let mut worst = None;
    let mut consider = |n: usize, j: Option<usize>, distance: f64, bound: f64| {
        let ratio = distance / (bound + eps);
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst = Some(BoundViolation { n, j, distance, bound });
        }
    };
    for (n, x) in xs.iter().enumerate() {
        let mn = m.powi(n as i32);
        consider(n, None, x.distance(reference), mn / (1.0 - m) * d1);
        audit.checked += 1;
        for (j, y) in xs.iter().enumerate().skip(n + 1) {
            let bound = mn * (1.0 - m.powi((j - n) as i32)) / (1.0 - m) * d1;
            consider(n, Some(j), y.distance(x), bound);
            audit.checked += 1;
        }
    }
    audit.ok = worst_ratio <= 1.0;
    audit.worst_ratio = worst_ratio;
    audit.worst = worst;
    audit
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionAudit {
    pub ok: bool,
    pub m: f64,
    pub radius: f64,
    pub samples: usize,
    /// Largest `||Tx - Ty|| / (m ||x - y|| + eps)`.
    pub worst_ratio: f64,
    /// Largest `||Tx - Ty|| / ||x - y||` seen.
    pub observed_modulus: f64,
}

/// Samples `samples` pairs `x, y` in the nonnegative part of the ball of
/// radius `radius` and checks `||Tx - Ty|| <= m ||x - y|| + eps` with
/// `eps = 10 quad_tol max(1, radius)`. Profiles are smooth random bumps
/// so that interpolation between nodes stays meaningful.
pub fn contraction_audit(
    op: &Operator<'_>,
    m: f64,
    radius: f64,
    samples: usize,
    seed: u64,
    quad_tol: f64,
) -> Result<ContractionAudit, VerifyError> {
    let grid = op.grid().clone();
    let alpha = op.alpha();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random_pair = |rng: &mut ChaCha8Rng| -> Result<SolutionPair, VerifyError> {
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(4);
        for _ in 0..4 {
            let (level, amp) = (rng.gen_range(0.0..0.5), rng.gen_range(0.0..0.5));
            let (freq, phase) = (rng.gen_range(0.2..3.0), rng.gen_range(0.0..std::f64::consts::TAU));
            rows.push(
                grid.nodes()
                    .iter()
                    .map(|&t| radius * (level + amp * (0.5 + 0.5 * (freq * t.ln_1p() + phase).sin())))
                    .collect(),
            );
        }
        let [u, v, du, dv]: [Vec<f64>; 4] = rows.try_into().expect("four rows");
        Ok(SolutionPair::from_rows(grid.clone(), alpha, u, v, du, dv)?)
    };
    let eps = slack(quad_tol, radius);
    let (mut worst_ratio, mut observed): (f64, f64) = (0.0, 0.0);
    for _ in 0..samples {
        let x = random_pair(&mut rng)?;
        let y = random_pair(&mut rng)?;
        let d = x.distance(&y);
        let dt = op.apply(&x)?.distance(&op.apply(&y)?);
        worst_ratio = worst_ratio.max(dt / (m * d + eps));
        if d > 0.0 {
            observed = observed.max(dt / d);
        }
    }
    Ok(ContractionAudit { ok: worst_ratio <= 1.0, m, radius, samples, worst_ratio, observed_modulus: observed })
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub fixed_point_residual: f64,
    pub bc_residual: [f64; 2],
    pub tail_mass: [f64; 2],
    pub ode_residuals: Vec<OdeResidual>,
    pub ordering: Option<OrderingAudit>,
    pub error_bound: Option<ErrorBoundAudit>,
    pub contraction: Option<ContractionAudit>,
    pub details: Vec<String>,
}

impl VerificationReport {
    pub fn ordering_ok(&self) -> Option<bool> {
        self.ordering.as_ref().map(|a| a.ok)
    }

    pub fn error_bound_ok(&self) -> Option<bool> {
        self.error_bound.as_ref().map(|a| a.ok)
    }

    pub fn contraction_ok(&self) -> Option<bool> {
        self.contraction.as_ref().map(|a| a.ok)
    }
}

/// Default interior spot-check points: five nodes spread over the grid.
pub fn default_spot_points(sp: &SolutionPair) -> Vec<f64> {
    let t = sp.grid().nodes();
    let n = t.len();
    [n / 8, n / 4, n / 2 - 1, n / 2, 5 * n / 8].into_iter().map(|j| t[j.clamp(1, n - 2)]).collect()
}

/// Residuals of one solution; audits are attached by the caller.
pub fn verify_solution(
    op: &Operator<'_>,
    kernels: &[KernelSet; 2],
    sp: &SolutionPair,
) -> Result<VerificationReport, VerifyError> {
    let fixed = fixed_point_residual(op, sp)?;
    let bc = boundary_residual(op, kernels, sp, 1e-10)?;
    let ode = ode_residual_spotcheck(op, kernels, sp, &default_spot_points(sp))?;
    let mut details = Vec::new();
    if ode.iter().any(|r| r.noisy) {
        details.push("some ODE residuals rest on a noisy numerical derivative".to_string());
    }
    Ok(VerificationReport {
        fixed_point_residual: fixed,
        bc_residual: bc.residual,
        tail_mass: bc.tail_mass,
        ode_residuals: ode,
        ordering: None,
        error_bound: None,
        contraction: None,
        details,
    })
}

/// Slack used by the audits unless told otherwise.
pub const AUDIT_QUAD_TOL: f64 = DEFAULT_LOOP_TOL;
