//! Gamma function and numerical Riemann-Liouville fractional calculus.
//!
//! `rl_integral` evaluates `(1/Gamma(q)) * int_0^t (t-s)^(q-1) g(s) ds` by
//! splitting at `t/2`: the left half keeps the integrand's own behavior at
//! `s = 0`, the right half is reflected to `x = t - s` so the kernel
//! singularity becomes a declared endpoint exponent `q - 1`.
//!
//! `rl_derivative` differentiates the `(n-q)`-integral `n` times with central
//! differences and Ridders-style Richardson extrapolation.

use thiserror::Error;

use crate::quad::{integrate_finite, Integrand, QuadError};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FracError {
    #[error("gamma is only defined here for positive arguments, got {0}")]
    Domain(f64),
    #[error("fractional order must be a positive finite number, got {0}")]
    InvalidOrder(f64),
    #[error("evaluation point {0} is outside the supported range")]
    InvalidPoint(f64),
    #[error("quadrature failed: {0}")]
    Quadrature(#[from] QuadError),
    #[error("derivative lost significance: value {value} with error estimate {error} above tolerance {tol}")]
    LossOfSignificance { value: f64, error: f64, tol: f64 },
}

/// Order of a fractional integral or derivative, with `n - 1 < q <= n`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FracOrder {
    q: f64,
    n: u32,
}

impl FracOrder {
    pub fn new(q: f64) -> Result<Self, FracError> {
        if !(q > 0.0) || !q.is_finite() || q > 1e6 {
            return Err(FracError::InvalidOrder(q));
        }
        let n = q.ceil() as u32;
        Ok(Self { q, n })
    }

    pub fn value(&self) -> f64 {
        self.q
    }

    /// Smallest integer `n` with `n >= q`.
    pub fn ceil(&self) -> u32 {
        self.n
    }
}

/// Value together with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[allow(clippy::excessive_precision)]
const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for `x > 0` (Lanczos, g = 7, nine terms; reflection below 1/2).
pub fn gamma(x: f64) -> Result<f64, FracError> {
    if !(x > 0.0) || x.is_nan() {
        return Err(FracError::Domain(x));
    }
    if x > 171.7 {
        return Ok(f64::INFINITY);
    }
    Ok(gamma_positive(x))
}

fn gamma_positive(x: f64) -> f64 {
    use std::f64::consts::PI;
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma_positive(1.0 - x));
    }
    // Integers are common enough (n! in monomial rules) to deserve exact values.
    if x == x.floor() && x <= 23.0 {
        return (1..x as u64).map(|k| k as f64).product();
    }
    let z = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * acc
}

/// Riemann-Liouville integral `I^q g(t)` with absolute tolerance `tol`.
///
/// `g.endpoint_exponent()` describes `g` near `s = 0`; kinks of `g` are honored.
pub fn rl_integral(g: &Integrand<'_>, order: FracOrder, t: f64, tol: f64) -> Result<Estimate, FracError> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(FracError::InvalidPoint(t));
    }
    if t == 0.0 {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let q = order.q;
    let half = 0.5 * t;
    let g_kinks: Vec<f64> = g.kinks().to_vec();

    let left_kinks: Vec<f64> = g_kinks.iter().copied().filter(|&k| k > 0.0 && k < half).collect();
    let left = Integrand::new(|s: f64| (t - s).powf(q - 1.0) * g.eval(s)).with_kinks(left_kinks)?;
    let left = if g.endpoint_exponent() < 0.0 { left.with_endpoint_exponent(g.endpoint_exponent())? } else { left };

    let mut right_kinks: Vec<f64> = g_kinks.iter().map(|&k| t - k).filter(|&x| x > 0.0 && x < half).collect();
    right_kinks.sort_by(f64::total_cmp);
    right_kinks.dedup();
    let right = Integrand::new(|x: f64| x.powf(q - 1.0) * g.eval(t - x)).with_kinks(right_kinks)?;
    let right = if q < 1.0 { right.with_endpoint_exponent(q - 1.0)? } else { right };

    let a = integrate_finite(&left, 0.0, half, 0.5 * tol)?;
    let b = integrate_finite(&right, 0.0, half, 0.5 * tol)?;
    let scale = gamma(q)?;
    Ok(Estimate { value: (a.value + b.value) / scale, error: (a.error_estimate + b.error_estimate) / scale })
}

/// Riemann-Liouville derivative `D^q g(t)`, returned with a refinement error estimate.
///
/// Fails with `LossOfSignificance` when the extrapolation cannot reach
/// `tol * (1 + |value|)`.
pub fn rl_derivative(g: &Integrand<'_>, order: FracOrder, t: f64, tol: f64) -> Result<Estimate, FracError> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(FracError::InvalidPoint(t));
    }
    let n = order.n;
    let beta = n as f64 - order.q;
    let inner_tol = 1e-14;
    let phi = |x: f64| -> Result<f64, FracError> {
        if beta == 0.0 {
            Ok(g.eval(x))
        } else {
            Ok(rl_integral(g, FracOrder { q: beta, n: 1 }, x, inner_tol)?.value)
        }
    };
    let est = nth_derivative(&phi, n, t, 0.5 * t / n.max(1) as f64)?;
    if est.error > tol * (1.0 + est.value.abs()) {
        return Err(FracError::LossOfSignificance { value: est.value, error: est.error, tol });
    }
    Ok(est)
}

/// n-th derivative of `phi` at `t` by central differences and Richardson extrapolation.
///
/// Stencil points are `t + (n/2 - k) h`, so `h0` must keep them inside the domain.
pub fn nth_derivative<F>(phi: &F, n: u32, t: f64, h0: f64) -> Result<Estimate, FracError>
where
    F: Fn(f64) -> Result<f64, FracError>,
{
    if n == 0 {
        return Ok(Estimate { value: phi(t)?, error: 0.0 });
    }
    const SHRINK: f64 = 1.4;
    const SHRINK2: f64 = SHRINK * SHRINK;
    const LEVELS: usize = 10;

    let binom: Vec<f64> = (0..=n)
        .map(|k| {
            let mut c = 1.0;
            for j in 0..k {
                c = c * (n - j) as f64 / (j + 1) as f64;
            }
            c
        })
        .collect();
    let central = |h: f64| -> Result<f64, FracError> {
        let mut acc = 0.0;
        for k in 0..=n {
            let offset = (n as f64 / 2.0 - k as f64) * h;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * binom[k as usize] * phi(t + offset)?;
        }
        Ok(acc / h.powi(n as i32))
    };

    let mut table = vec![vec![0.0; LEVELS]; LEVELS];
    let mut h = h0;
    table[0][0] = central(h)?;
    let mut best = Estimate { value: table[0][0], error: f64::INFINITY };
    for i in 1..LEVELS {
        h /= SHRINK;
        table[0][i] = central(h)?;
        let mut fac = SHRINK2;
        for j in 1..=i {
            table[j][i] = (table[j - 1][i] * fac - table[j - 1][i - 1]) / (fac - 1.0);
            fac *= SHRINK2;
            let err = (table[j][i] - table[j - 1][i]).abs().max((table[j][i] - table[j - 1][i - 1]).abs());
            if err <= best.error {
                best = Estimate { value: table[j][i], error: err };
            }
        }
        if (table[i][i] - table[i - 1][i - 1]).abs() >= 2.0 * best.error {
            break;
        }
    }
    Ok(best)
}
