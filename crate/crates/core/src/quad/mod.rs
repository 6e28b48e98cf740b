//! Adaptive quadrature on finite intervals and on the half-line.
//!
//! Integrands carry their own structural hints: interior kinks (points where
//! the integrand is continuous but not smooth), an algebraic exponent at
//! `t = 0`, and optionally an exponential decay rate for the tail. The
//! finite driver splits at every kink, removes the endpoint singularity by
//! the substitution `t = a + w * y^(1/(1+sigma))` on the first panel and then
//! runs a globally adaptive 21-point Gauss-Kronrod bisection. The half-line
//! driver truncates at a point found by doubling and adds the tail panels
//! that were inspected along the way.

mod rules;

use std::collections::BinaryHeap;

use thiserror::Error;

pub use rules::{gauss_legendre, graded_composite_rule, mapped_tail_rule};

/// Length beyond which a segment is pre-split geometrically toward its ends.
pub const LONG_SEGMENT: f64 = 64.0;

/// Default tolerance for constant computation.
pub const DEFAULT_CONSTANT_TOL: f64 = 1e-10;
/// Default tolerance for integrals evaluated inside iteration loops.
pub const DEFAULT_LOOP_TOL: f64 = 1e-8;

const MAX_INTERVALS: usize = 4000;
const MAX_DOUBLINGS: usize = 80;

/// Integrand plus the structural hints the drivers exploit.
pub struct Integrand<'a> {
    eval: Box<dyn Fn(f64) -> f64 + Send + Sync + 'a>,
    kinks: Vec<f64>,
    endpoint_exponent: f64,
    decay_hint: Option<f64>,
}

impl std::fmt::Debug for Integrand<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Integrand")
            .field("kinks", &self.kinks)
            .field("endpoint_exponent", &self.endpoint_exponent)
            .field("decay_hint", &self.decay_hint)
            .finish_non_exhaustive()
    }
}

impl<'a> Integrand<'a> {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'a) -> Self {
        Self { eval: Box::new(f), kinks: Vec::new(), endpoint_exponent: 0.0, decay_hint: None }
    }

    /// Declares interior kinks; they must be finite and strictly increasing.
    pub fn with_kinks(mut self, kinks: Vec<f64>) -> Result<Self, QuadError> {
        if kinks.iter().any(|k| !k.is_finite()) || kinks.windows(2).any(|p| p[0] >= p[1]) {
            return Err(QuadError::InvalidIntegrand("kinks must be finite and strictly increasing".into()));
        }
        self.kinks = kinks;
        Ok(self)
    }

    /// Declares `f(t) ~ t^sigma` as `t -> 0+`; requires `sigma > -1`.
    pub fn with_endpoint_exponent(mut self, sigma: f64) -> Result<Self, QuadError> {
        if !(sigma > -1.0) || !sigma.is_finite() {
            return Err(QuadError::InvalidIntegrand(format!(
                "endpoint exponent {sigma} is not integrable (must exceed -1)"
            )));
        }
        self.endpoint_exponent = sigma;
        Ok(self)
    }

    /// Exponential decay rate `r` with `|f(t)| <~ exp(-r t)` for large `t`.
    pub fn with_decay_hint(mut self, rate: f64) -> Self {
        self.decay_hint = (rate > 0.0 && rate.is_finite()).then_some(rate);
        self
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    pub fn endpoint_exponent(&self) -> f64 {
        self.endpoint_exponent
    }

    pub fn decay_hint(&self) -> Option<f64> {
        self.decay_hint
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    /// Upper end actually integrated (the truncation point on the half-line).
    pub truncation_point: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum QuadError {
    #[error("interval [{a}, {b}] is not valid")]
    InvalidInterval { a: f64, b: f64 },
    #[error("invalid integrand: {0}")]
    InvalidIntegrand(String),
    #[error("integrand is not finite at t = {at}")]
    NonFinite { at: f64 },
    #[error("subdivision limit reached; best value {} with error estimate {}", best.value, best.error_estimate)]
    NoConvergence { best: QuadResult },
    #[error("tail did not settle while doubling the truncation point; best value {} up to T = {}", best.value, best.truncation_point)]
    Divergent { best: QuadResult },
}

impl QuadError {
    /// Best available result for the failure modes that carry one.
    pub fn best(&self) -> Option<QuadResult> {
        match self {
            QuadError::NoConvergence { best } | QuadError::Divergent { best } => Some(*best),
            _ => None,
        }
    }
}

#[derive(Clone, Copy)]
enum PanelMap {
    Identity,
    /// `t = a + w * y^k` on `y in [0, 1]`.
    Power {
        a: f64,
        w: f64,
        k: f64,
    },
}

impl PanelMap {
    #[inline]
    fn apply(&self, f: &Integrand<'_>, y: f64) -> f64 {
        match *self {
            PanelMap::Identity => f.eval(y),
            PanelMap::Power { a, w, k } => {
                if y <= 0.0 {
                    return 0.0;
                }
                let yk1 = y.powf(k - 1.0);
                f.eval(a + w * y * yk1) * w * k * yk1
            }
        }
    }
}

struct Work {
    error: f64,
    abs_value: f64,
    lo: f64,
    hi: f64,
    value: f64,
    map: usize,
}

impl PartialEq for Work {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error).is_eq()
    }
}
impl Eq for Work {}
impl PartialOrd for Work {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Work {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error).then_with(|| other.lo.total_cmp(&self.lo))
    }
}

/// Adaptive integral of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate_finite(f: &Integrand<'_>, a: f64, b: f64, tol: f64) -> Result<QuadResult, QuadError> {
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(QuadError::InvalidInterval { a, b });
    }
    if a == b {
        return Ok(QuadResult { value: 0.0, error_estimate: 0.0, truncation_point: b, evaluations: 0 });
    }
    let tol = tol.max(f64::MIN_POSITIVE);

    let mut breaks = vec![a];
    breaks.extend(f.kinks.iter().copied().filter(|&k| k > a && k < b));
    breaks.push(b);
    let breaks = split_long_segments(&breaks);

    let sigma = f.endpoint_exponent;
    let mut maps = Vec::with_capacity(breaks.len() - 1);
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0usize;
    for (i, p) in breaks.windows(2).enumerate() {
        let (lo, hi, map) = if i == 0 && a == 0.0 && sigma < 0.0 {
            (0.0, 1.0, PanelMap::Power { a: p[0], w: p[1] - p[0], k: 1.0 / (1.0 + sigma) })
        } else {
            (p[0], p[1], PanelMap::Identity)
        };
        maps.push(map);
        let est = panel(f, &map, lo, hi)?;
        evaluations += 21;
        heap.push(Work { error: est.error, abs_value: est.abs_value, lo, hi, value: est.value, map: i });
    }

    let mut settled: Vec<Work> = Vec::new();
    loop {
        let (_, err) = totals(heap.iter().chain(settled.iter()));
        // Below ~100 ulps of the integral of |f| the estimate is round-off, not error.
        let abs_total: f64 = heap.iter().chain(settled.iter()).map(|w| w.abs_value).sum();
        let target = tol.max(100.0 * f64::EPSILON * abs_total);
        if err <= target || heap.is_empty() {
            return Ok(finish(heap, settled, b, evaluations));
        }
        if heap.len() + settled.len() >= MAX_INTERVALS {
            let best = finish(heap, settled, b, evaluations);
            return Err(QuadError::NoConvergence { best });
        }
        let worst = heap.pop().expect("heap checked non-empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if (worst.hi - worst.lo) <= 1e-13 * worst.lo.abs().max(worst.hi.abs()).max(1e-300) {
            settled.push(worst);
            continue;
        }
        let map = maps[worst.map];
        let left = panel(f, &map, worst.lo, mid)?;
        let right = panel(f, &map, mid, worst.hi)?;
        evaluations += 42;
        heap.push(Work {
            error: left.error,
            abs_value: left.abs_value,
            lo: worst.lo,
            hi: mid,
            value: left.value,
            map: worst.map,
        });
        heap.push(Work {
            error: right.error,
            abs_value: right.abs_value,
            lo: mid,
            hi: worst.hi,
            value: right.value,
            map: worst.map,
        });
    }
}

/// Segments longer than [`LONG_SEGMENT`] are cut at distances `1, 2, 4, ...`
/// from both ends, so features of unit width near an endpoint (an
/// exponential boundary layer, say) are sampled by the first panels
/// instead of falling between the nodes of one wide panel.
fn split_long_segments(breaks: &[f64]) -> Vec<f64> {
    let mut out = vec![breaks[0]];
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let half = 0.5 * (hi - lo);
        if hi - lo > LONG_SEGMENT {
            let mut d = 1.0;
            let mut right = Vec::new();
            while d < half {
                out.push(lo + d);
                right.push(hi - d);
                d *= 2.0;
            }
            out.extend(right.into_iter().rev());
        }
        out.push(hi);
    }
    out
}

fn panel(f: &Integrand<'_>, map: &PanelMap, lo: f64, hi: f64) -> Result<rules::PanelEstimate, QuadError> {
    let g = |y: f64| map.apply(f, y);
    let est = rules::gk21(&g, lo, hi);
    if let Some(y) = est.non_finite_at {
        let at = match *map {
            PanelMap::Identity => y,
            PanelMap::Power { a, w, k } => a + w * y.powf(k),
        };
        return Err(QuadError::NonFinite { at });
    }
    Ok(est)
}

fn totals<'w>(items: impl Iterator<Item = &'w Work>) -> (f64, f64) {
    items.fold((0.0, 0.0), |(v, e), w| (v + w.value, e + w.error))
}

/// Sums panels in a fixed positional order so results do not depend on heap layout.
fn finish(heap: BinaryHeap<Work>, settled: Vec<Work>, b: f64, evaluations: usize) -> QuadResult {
    let mut all: Vec<Work> = heap.into_vec();
    all.extend(settled);
    all.sort_by(|x, y| x.map.cmp(&y.map).then(x.lo.total_cmp(&y.lo)));
    let (value, error) = totals(all.iter());
    QuadResult { value, error_estimate: error, truncation_point: b, evaluations }
}

/// Integral of `f` over `[0, inf)`.
pub fn integrate_halfline(f: &Integrand<'_>, tol: f64) -> Result<QuadResult, QuadError> {
    integrate_from(f, 0.0, tol)
}

/// Integral of `f` over `[a, inf)` by truncation and doubling.
///
/// The truncation point starts from the decay hint (or from the last kink)
/// and doubles until two consecutive tail panels together contribute less
/// than `tol / 4`; those two panels are kept and their magnitude is folded
/// into the error estimate as the tail bound.
pub fn integrate_from(f: &Integrand<'_>, a: f64, tol: f64) -> Result<QuadResult, QuadError> {
    if !a.is_finite() || a < 0.0 {
        return Err(QuadError::InvalidInterval { a, b: f64::INFINITY });
    }
    let last_kink = f.kinks.last().copied().unwrap_or(0.0).max(a);
    let mut t_cut = (2.0 * last_kink).max(a + 1.0);
    if let Some(rate) = f.decay_hint {
        let t_decay = (4.0 / (rate * tol)).ln().max(1.0) / rate;
        t_cut = t_cut.max(a + t_decay);
    }

    let head = integrate_finite(f, a, t_cut, 0.5 * tol)?;
    let mut value = head.value;
    let mut error = head.error_estimate;
    let mut evaluations = head.evaluations;
    let panel_tol = tol / 64.0;

    let mut p1 = integrate_finite(f, t_cut, 2.0 * t_cut, panel_tol)?;
    evaluations += p1.evaluations;
    for _ in 0..MAX_DOUBLINGS {
        let p2 = integrate_finite(f, 2.0 * t_cut, 4.0 * t_cut, panel_tol)?;
        evaluations += p2.evaluations;
        let tail = p1.value.abs() + p2.value.abs();
        if tail < 0.25 * tol {
            value += p1.value + p2.value;
            error += p1.error_estimate + p2.error_estimate + tail;
            return Ok(QuadResult { value, error_estimate: error, truncation_point: 4.0 * t_cut, evaluations });
        }
        value += p1.value;
        error += p1.error_estimate;
        t_cut *= 2.0;
        p1 = p2;
        if !t_cut.is_finite() || t_cut > 1e300 {
            break;
        }
    }
    Err(QuadError::Divergent {
        best: QuadResult { value, error_estimate: error + p1.value.abs(), truncation_point: 2.0 * t_cut, evaluations },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_integrand_is_exactly_zero() {
        let f = Integrand::new(|_| 0.0);
        let r = integrate_finite(&f, 0.0, 1.0, 1e-10).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn algebraic_decay_over_long_interval() {
        let f = Integrand::new(|t| 2.0 / ((10.0 + t) * (10.0 + t)));
        let r = integrate_finite(&f, 0.0, 1e6, 1e-10).unwrap();
        let exact = 0.2 - 2.0 / (10.0 + 1e6);
        assert!((r.value - exact).abs() < 1e-10, "{}", r.value);
        assert!((r.value - 0.2).abs() < 3e-6);
    }

    #[test]
    fn boundary_layers_on_long_intervals_are_found() {
        let f = Integrand::new(|t: f64| (-t).exp());
        let r = integrate_finite(&f, 0.0, 1e6, 1e-12).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12, "{}", r.value);
        let g = Integrand::new(|t: f64| (t - 1e5).exp());
        let r = integrate_finite(&g, 0.0, 1e5, 1e-12).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12, "{}", r.value);
    }

    #[test]
    fn endpoint_singularity_by_substitution() {
        let f = Integrand::new(|t: f64| t.powf(-0.5)).with_endpoint_exponent(-0.5).unwrap();
        let r = integrate_finite(&f, 0.0, 1.0, 1e-12).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12, "{}", r.value);
        assert!(r.evaluations <= 63, "substitution should make this one panel");
    }

    #[test]
    fn endpoint_singularity_without_hint_still_converges() {
        let f = Integrand::new(|t: f64| t.powf(-0.5));
        let r = integrate_finite(&f, 0.0, 1.0, 1e-9).unwrap();
        assert!((r.value - 2.0).abs() < 1e-8, "{}", r.value);
    }

    #[test]
    fn halfline_exponential() {
        let f = Integrand::new(|t: f64| (-t).exp());
        let r = integrate_halfline(&f, 1e-12).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        let hinted = Integrand::new(|t: f64| (-t).exp()).with_decay_hint(1.0);
        let r2 = integrate_halfline(&hinted, 1e-12).unwrap();
        assert!((r2.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn halfline_singular_exponential() {
        let f = Integrand::new(|t: f64| t.powf(-0.5) * (-2.0 * t).exp()).with_endpoint_exponent(-0.5).unwrap();
        let r = integrate_halfline(&f, 1e-11).unwrap();
        let exact = (std::f64::consts::PI / 2.0).sqrt();
        assert!((r.value - exact).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn halfline_weighted_boundary_integrand() {
        // h(t) t^{1.5} with h(t) = t^{-1.5} e^{-t}
        let f = Integrand::new(|t: f64| t.powf(-1.5) * (-t).exp() * t.powf(1.5));
        let r = integrate_halfline(&f, 1e-10).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn halfline_algebraic_tail() {
        let f = Integrand::new(|t| 2.0 / ((10.0 + t) * (10.0 + t)));
        let r = integrate_halfline(&f, 1e-10).unwrap();
        assert!((r.value - 0.2).abs() < 1e-9, "{}", r.value);
        assert!(r.truncation_point > 1e9);
    }

    #[test]
    fn non_integrable_tail_is_flagged() {
        let f = Integrand::new(|t| 1.0 / (1.0 + t));
        match integrate_halfline(&f, 1e-8) {
            Err(QuadError::Divergent { best }) => assert!(best.value > 10.0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn declared_kink_is_exact_for_piecewise_polynomial() {
        // |t - 0.3| on [0, 1] -> 0.045 + 0.245
        let f = Integrand::new(|t: f64| (t - 0.3).abs()).with_kinks(vec![0.3]).unwrap();
        let r = integrate_finite(&f, 0.0, 1.0, 1e-14).unwrap();
        assert!((r.value - 0.29).abs() < 1e-12);
        assert_eq!(r.evaluations, 42);
    }

    #[test]
    fn non_finite_values_are_reported() {
        let f = Integrand::new(|t: f64| if t > 0.5 { f64::NAN } else { 1.0 });
        assert!(matches!(integrate_finite(&f, 0.0, 1.0, 1e-8), Err(QuadError::NonFinite { .. })));
    }

    #[test]
    fn invalid_hints_rejected() {
        assert!(Integrand::new(|_| 1.0).with_kinks(vec![0.5, 0.2]).is_err());
        assert!(Integrand::new(|_| 1.0).with_endpoint_exponent(-1.0).is_err());
    }
}
