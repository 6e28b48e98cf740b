//! Green's kernels of the boundary value problem on the half-line.
//!
//! For one component with order `alpha` and boundary weight `h`:
//!
//! ```text
//! K1(t, s) = (t^(a-1) - (t-s)^(a-1)) / Gamma(a)   for s <= t
//!          =  t^(a-1)               / Gamma(a)   for t <= s
//! K2(t, s) = t^(a-1) / (Gamma(a) - Lambda) * inner(s)
//! K*(t, s) = [t <= s] + Gamma(a) / (Gamma(a) - Lambda) * inner(s)
//! inner(s) = int_0^inf h(tau) K1(tau, s) dtau
//! Lambda   = int_0^inf h(t) t^(a-1) dt
//! ```
//!
//! `K = K1 + K2` reproduces `u` from `-D^a u`, and `K*` reproduces
//! `D^(a-1) u` from the same data. `inner` depends only on `s` and is
//! memoized per abscissa.

use std::collections::HashMap;
use std::sync::RwLock;

use rayon::prelude::*;
use thiserror::Error;

use crate::fracops::{gamma, FracError, FracOrder};
use crate::quad::{integrate_finite, integrate_from, integrate_halfline, Integrand, QuadError};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum KernelError {
    #[error("boundary functional Lambda = {lambda} is not below Gamma(alpha) = {gamma_alpha}")]
    LambdaTooLarge { lambda: f64, gamma_alpha: f64 },
    #[error("boundary functional Lambda = {0} is negative; h must be nonnegative")]
    NegativeLambda(f64),
    #[error("order alpha = {0} must exceed 1")]
    OrderTooSmall(f64),
    #[error("kernel arguments must be finite and nonnegative, got t = {t}, s = {s}")]
    InvalidArgument { t: f64, s: f64 },
    #[error(transparent)]
    Frac(#[from] FracError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Boundary weight `h` with its behavior `h(t) ~ t^sigma` at the origin.
///
/// Unlike [`Integrand`], `sigma` may be `<= -1`: `h` itself need not be
/// integrable, only its products with functions vanishing like
/// `t^(alpha-1)`, which is all the kernels ever integrate.
pub struct BoundaryWeight {
    eval: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    exponent: f64,
    decay: Option<f64>,
}

impl std::fmt::Debug for BoundaryWeight {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BoundaryWeight")
            .field("exponent", &self.exponent)
            .field("decay", &self.decay)
            .finish_non_exhaustive()
    }
}

impl BoundaryWeight {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { eval: Box::new(f), exponent: 0.0, decay: None }
    }

    /// The zero weight (no boundary coupling).
    pub fn zero() -> Self {
        Self::new(|_| 0.0)
    }

    pub fn with_endpoint_exponent(mut self, sigma: f64) -> Self {
        self.exponent = sigma;
        self
    }

    pub fn with_decay_hint(mut self, rate: f64) -> Self {
        self.decay = (rate > 0.0 && rate.is_finite()).then_some(rate);
        self
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    pub fn endpoint_exponent(&self) -> f64 {
        self.exponent
    }

    pub fn decay_hint(&self) -> Option<f64> {
        self.decay
    }

    /// `t -> h(t) * g(t)` where `g(t) ~ t^p` at the origin, with the combined
    /// endpoint exponent declared.
    pub fn times<'a>(&'a self, p: f64, g: impl Fn(f64) -> f64 + Send + Sync + 'a) -> Result<Integrand<'a>, QuadError> {
        let sigma = self.exponent + p;
        let mut out = Integrand::new(move |t: f64| if t == 0.0 { 0.0 } else { self.eval(t) * g(t) });
        if sigma < 0.0 {
            out = out.with_endpoint_exponent(sigma)?;
        }
        if let Some(rate) = self.decay {
            out = out.with_decay_hint(rate);
        }
        Ok(out)
    }
}

/// `Lambda = int_0^inf h(t) t^(alpha-1) dt`.
///
/// The value is returned even when it violates `Lambda < Gamma(alpha)`, so
/// callers can report it.
pub fn compute_lambda(h: &BoundaryWeight, alpha: FracOrder, tol: f64) -> Result<f64, KernelError> {
    let p = alpha.value() - 1.0;
    let g = h.times(p, move |t: f64| t.powf(p))?;
    Ok(integrate_halfline(&g, tol)?.value)
}

/// Kernel family for one component, immutable after construction apart
/// from the idempotent `inner` cache.
pub struct KernelSet {
    alpha: FracOrder,
    lambda: f64,
    gamma_alpha: f64,
    denom: f64,
    h: BoundaryWeight,
    tol: f64,
    inner_cache: RwLock<HashMap<u64, f64>>,
}

impl std::fmt::Debug for KernelSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelSet")
            .field("alpha", &self.alpha.value())
            .field("lambda", &self.lambda)
            .field("gamma_alpha", &self.gamma_alpha)
            .field("denom", &self.denom)
            .field("h", &self.h)
            .field("tol", &self.tol)
            .finish()
    }
}

impl KernelSet {
    /// Builds the kernels; fails unless `0 <= Lambda < Gamma(alpha)` and `alpha > 1`.
    ///
    /// `tol` is the absolute tolerance for `Lambda` and every `inner(s)`.
    pub fn new(h: BoundaryWeight, alpha: FracOrder, tol: f64) -> Result<Self, KernelError> {
        if alpha.value() <= 1.0 {
            return Err(KernelError::OrderTooSmall(alpha.value()));
        }
        let gamma_alpha = gamma(alpha.value())?;
        let lambda = compute_lambda(&h, alpha, tol)?;
        if lambda < -tol {
            return Err(KernelError::NegativeLambda(lambda));
        }
        let lambda = lambda.max(0.0);
        if lambda >= gamma_alpha {
            return Err(KernelError::LambdaTooLarge { lambda, gamma_alpha });
        }
        Ok(Self {
            alpha,
            lambda,
            gamma_alpha,
            denom: gamma_alpha - lambda,
            h,
            tol,
            inner_cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn alpha(&self) -> FracOrder {
        self.alpha
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma_alpha(&self) -> f64 {
        self.gamma_alpha
    }

    /// `Gamma(alpha) - Lambda`.
    pub fn denom(&self) -> f64 {
        self.denom
    }

    pub fn h(&self) -> &BoundaryWeight {
        &self.h
    }

    /// `t^(alpha-1)`, zero at the origin.
    pub fn power(&self, t: f64) -> f64 {
        if t == 0.0 {
            0.0
        } else {
            t.powf(self.alpha.value() - 1.0)
        }
    }

    /// Upper bound of `K(t, s)` over `s`: `t^(alpha-1) / (Gamma(alpha) - Lambda)`.
    pub fn k_bound(&self, t: f64) -> f64 {
        self.power(t) / self.denom
    }

    /// Upper bound of `K*(t, s)`: `Gamma(alpha) / (Gamma(alpha) - Lambda)`.
    pub fn kstar_bound(&self) -> f64 {
        self.gamma_alpha / self.denom
    }

    pub fn k1(&self, t: f64, s: f64) -> Result<f64, KernelError> {
        check_args(t, s)?;
        Ok(self.k1_unchecked(t, s))
    }

    fn k1_unchecked(&self, t: f64, s: f64) -> f64 {
        let p = self.alpha.value() - 1.0;
        if t <= s || s == 0.0 {
            if s == 0.0 {
                return 0.0;
            }
            return self.power(t) / self.gamma_alpha;
        }
        // t^p - (t-s)^p = -t^p * expm1(p * ln(1 - s/t)), free of cancellation for s << t.
        let diff = -t.powf(p) * (p * (-s / t).ln_1p()).exp_m1();
        diff.max(0.0) / self.gamma_alpha
    }

    pub fn k2(&self, t: f64, s: f64) -> Result<f64, KernelError> {
        check_args(t, s)?;
        Ok(self.power(t) / self.denom * self.inner_integral(s)?)
    }

    pub fn k(&self, t: f64, s: f64) -> Result<f64, KernelError> {
        Ok(self.k1(t, s)? + self.k2(t, s)?)
    }

    pub fn kstar(&self, t: f64, s: f64) -> Result<f64, KernelError> {
        check_args(t, s)?;
        let step = if t <= s { 1.0 } else { 0.0 };
        Ok(step + self.gamma_alpha / self.denom * self.inner_integral(s)?)
    }

    /// `int_0^inf h(tau) K1(tau, s) dtau`, memoized on the bit pattern of `s`.
    pub fn inner_integral(&self, s: f64) -> Result<f64, KernelError> {
        check_args(0.0, s)?;
        if let Some(v) = self.inner_cache.read().expect("inner cache poisoned").get(&s.to_bits()) {
            return Ok(*v);
        }
        let v = self.compute_inner(s)?;
        self.inner_cache.write().expect("inner cache poisoned").insert(s.to_bits(), v);
        Ok(v)
    }

    /// Fills the cache for many abscissae in parallel.
    pub fn prefill(&self, points: &[f64]) -> Result<(), KernelError> {
        let missing: Vec<f64> = {
            let cache = self.inner_cache.read().expect("inner cache poisoned");
            points.iter().copied().filter(|s| !cache.contains_key(&s.to_bits())).collect()
        };
        let values: Vec<(u64, f64)> = missing
            .par_iter()
            .map(|&s| {
                check_args(0.0, s)?;
                Ok((s.to_bits(), self.compute_inner(s)?))
            })
            .collect::<Result<_, KernelError>>()?;
        self.inner_cache.write().expect("inner cache poisoned").extend(values);
        Ok(())
    }

    fn compute_inner(&self, s: f64) -> Result<f64, KernelError> {
        if s == 0.0 {
            return Ok(0.0);
        }
        let p = self.alpha.value() - 1.0;
        let h = &self.h;
        let ga = self.gamma_alpha;

        // tau in [0, s]: h(tau) tau^p / Gamma(a)
        let head = h.times(p, move |tau: f64| tau.powf(p) / ga)?;
        let near = integrate_finite(&head, 0.0, s, 0.5 * self.tol)?;

        // tau = s + x, x in [0, inf): h(s+x) ((s+x)^p - x^p) / Gamma(a)
        let mut far = Integrand::new(|x: f64| {
            let tau = s + x;
            let diff = if x == 0.0 { tau.powf(p) } else { -tau.powf(p) * (p * (-s / tau).ln_1p()).exp_m1() };
            h.eval(tau) * diff / ga
        });
        if let Some(rate) = h.decay_hint() {
            far = far.with_decay_hint(rate);
        }
        let tail = integrate_from(&far, 0.0, 0.5 * self.tol)?;
        Ok((near.value + tail.value).max(0.0))
    }
}

fn check_args(t: f64, s: f64) -> Result<(), KernelError> {
    if t >= 0.0 && s >= 0.0 && t.is_finite() && s.is_finite() {
        Ok(())
    } else {
        Err(KernelError::InvalidArgument { t, s })
    }
}
