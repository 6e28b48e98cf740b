//! Off-node reconstruction of a [`SolutionPair`](super::SolutionPair).
//!
//! Interpolation acts on the weighted value rows `u / (1 + t^(alpha-1))`
//! and on the derivative rows. Below the first node the value rows follow
//! `u(t) = u(t_1) (t / t_1)^(alpha-1)`, the leading behavior of every
//! element of the solution space, and derivative rows are held flat. Past
//! the last node all rows are held flat, matching their limits at infinity.

use serde::{Deserialize, Serialize};

use super::SolutionPair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    /// Piecewise linear: order preserving and nonexpansive in the sup norm,
    /// so the discrete operator inherits monotonicity and contraction exactly.
    #[default]
    Linear,
    /// Fritsch-Carlson monotone cubic; smoother, used for residual checks.
    MonotoneCubic,
}

impl std::str::FromStr for Interpolation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(Interpolation::Linear),
            "monotone-cubic" | "pchip" => Ok(Interpolation::MonotoneCubic),
            other => Err(format!("unknown interpolation `{other}` (linear, monotone-cubic)")),
        }
    }
}

/// Fritsch-Carlson slopes: weighted harmonic mean of neighboring secants,
/// zero at local extrema, one-sided three-point formula at the ends.
pub fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        let (a, b) = (delta[k - 1], delta[k]);
        if a * b > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / a + w2 / b);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s.signum() != d0.signum() {
            0.0
        } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

/// Evaluates the interpolant of one row on segment `[x[k], x[k+1]]`.
fn eval_segment(x: &[f64], y: &[f64], slopes: Option<&[f64]>, k: usize, s: f64) -> f64 {
    let h = x[k + 1] - x[k];
    let tau = (s - x[k]) / h;
    match slopes {
        None => y[k] + tau * (y[k + 1] - y[k]),
        Some(d) => {
            let t2 = tau * tau;
            let t3 = t2 * tau;
            let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
            let h10 = t3 - 2.0 * t2 + tau;
            let h01 = -2.0 * t3 + 3.0 * t2;
            let h11 = t3 - t2;
            h00 * y[k] + h10 * h * d[k] + h01 * y[k + 1] + h11 * h * d[k + 1]
        }
    }
}

/// Interpolates nodal data at `s`, holding the end values outside `[x_0, x_last]`.
/// `slopes` from [`pchip_slopes`] gives the monotone cubic, `None` the linear interpolant.
pub fn interpolate(x: &[f64], y: &[f64], slopes: Option<&[f64]>, s: f64) -> f64 {
    let n = x.len();
    if s <= x[0] {
        return y[0];
    }
    if s >= x[n - 1] {
        return y[n - 1];
    }
    let k = x.partition_point(|&v| v <= s) - 1;
    eval_segment(x, y, slopes, k, s)
}

/// Continuous reconstruction of `(u, v, D^(a1-1) u, D^(a2-1) v)`.
pub struct Profile<'a> {
    sp: &'a SolutionPair,
    slopes: Option<[Vec<f64>; 4]>,
}

impl<'a> Profile<'a> {
    pub fn new(sp: &'a SolutionPair, method: Interpolation) -> Self {
        let slopes = match method {
            Interpolation::Linear => None,
            Interpolation::MonotoneCubic => {
                let t = sp.grid().nodes();
                Some(sp.rows().map(|row| pchip_slopes(t, row)))
            }
        };
        Self { sp, slopes }
    }

    /// Row `r` (0: u_w, 1: v_w, 2: du, 3: dv) at `s`, weighting kept.
    pub fn row(&self, r: usize, s: f64) -> f64 {
        let t = self.sp.grid().nodes();
        let y = self.sp.rows()[r];
        let n = t.len();
        if s >= t[n - 1] {
            return y[n - 1];
        }
        if s <= t[0] {
            if r >= 2 {
                return y[0];
            }
            if s <= 0.0 {
                return 0.0;
            }
            let p = self.sp.alpha()[r] - 1.0;
            let u1 = y[0] * (1.0 + t[0].powf(p));
            return u1 * (s / t[0]).powf(p) / (1.0 + s.powf(p));
        }
        let k = t.partition_point(|&x| x <= s) - 1;
        let slopes = self.slopes.as_ref().map(|d| d[r].as_slice());
        eval_segment(t, y, slopes, k, s)
    }

    /// Unweighted state `[u(s), v(s), D^(a1-1) u(s), D^(a2-1) v(s)]`.
    pub fn state(&self, s: f64) -> [f64; 4] {
        let a = self.sp.alpha();
        let unweight = |r: usize| {
            let w = if s > 0.0 { 1.0 + s.powf(a[r] - 1.0) } else { 1.0 };
            self.row(r, s) * w
        };
        [unweight(0), unweight(1), self.row(2, s), self.row(3, s)]
    }
}
