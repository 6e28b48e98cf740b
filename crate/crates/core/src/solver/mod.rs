//! Iterative solvers on a mapped Gauss grid.
//!
//! A [`SolutionPair`] stores four rows on the grid: the weighted values
//! `u / (1 + t^(a1-1))`, `v / (1 + t^(a2-1))` and the derivatives
//! `D^(a1-1) u`, `D^(a2-1) v`. The pair norm is the maximum absolute entry.

mod interp;
mod operator;

use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

pub use interp::{interpolate, pchip_slopes, Interpolation, Profile};
pub use operator::{ApplyStats, Operator, PlanOptions};

use crate::exprlang::EvalError;
use crate::kernels::{KernelError, KernelSet};
use crate::problem::{self, ProblemError, ProblemSpec};
use crate::quad::{gauss_legendre, DEFAULT_CONSTANT_TOL, DEFAULT_LOOP_TOL};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("grid needs at least 16 nodes and a positive finite scale, got n = {n}, theta = {theta}")]
    InvalidGrid { n: usize, theta: f64 },
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error("solution rows do not match the operator grid")]
    GridMismatch,
    #[error("row {row} has {found} entries, expected {expected}")]
    RowLength { row: usize, found: usize, expected: usize },
    #[error("non-finite entry in row {row} at node {node}")]
    NonFinite { row: usize, node: usize },
    #[error("f{component} failed at s = {s}: {source}")]
    Eval { component: usize, s: f64, source: EvalError },
    #[error(
        "ordering violated at iteration {iteration}, node {node}, row {row}: \
         off by {amount:e}, beyond slack {slack:e}"
    )]
    OrderingViolation { iteration: usize, node: usize, row: usize, amount: f64, slack: f64 },
    #[error("scheme not applicable: {0}")]
    Inapplicable(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Nodes `t_j = theta x_j / (1 - x_j)` with `x_j` the Gauss-Legendre nodes on `(0, 1)`.
///
/// Half the nodes sit below `theta`; the largest is of order `theta N^2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    theta: f64,
    nodes: Vec<f64>,
}

impl Grid {
    pub const MIN_NODES: usize = 16;

    pub fn new(n: usize, theta: f64) -> Result<Self, SolverError> {
        if n < Self::MIN_NODES || !(theta > 0.0 && theta.is_finite()) {
            return Err(SolverError::InvalidGrid { n, theta });
        }
        let (x, _) = gauss_legendre(n);
        let nodes = x
            .iter()
            .map(|xi| {
                let y = 0.5 * (xi + 1.0);
                theta * y / (1.0 - y)
            })
            .collect();
        Ok(Self { theta, nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Last node; the tail beyond it is integrated by a mapped rule.
    pub fn t_max(&self) -> f64 {
        *self.nodes.last().expect("grid is nonempty")
    }
}

/// Discrete state of the pair `(u, v)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionPair {
    #[serde(skip)]
    grid: Arc<Grid>,
    #[serde(skip)]
    alpha: [f64; 2],
    u_w: Vec<f64>,
    v_w: Vec<f64>,
    du: Vec<f64>,
    dv: Vec<f64>,
}

pub const ROW_NAMES: [&str; 4] = ["u_w", "v_w", "du", "dv"];

impl SolutionPair {
    pub fn from_rows(
        grid: Arc<Grid>,
        alpha: [f64; 2],
        u_w: Vec<f64>,
        v_w: Vec<f64>,
        du: Vec<f64>,
        dv: Vec<f64>,
    ) -> Result<Self, SolverError> {
        let n = grid.len();
        for (row, r) in [&u_w, &v_w, &du, &dv].into_iter().enumerate() {
            if r.len() != n {
                return Err(SolverError::RowLength { row, found: r.len(), expected: n });
            }
            if let Some(node) = r.iter().position(|x| !x.is_finite()) {
                return Err(SolverError::NonFinite { row, node });
            }
        }
        Ok(Self { grid, alpha, u_w, v_w, du, dv })
    }

    pub fn zeros(grid: Arc<Grid>, alpha: [f64; 2]) -> Self {
        Self::constant(grid, alpha, 0.0)
    }

    /// Every row equal to `c`; the norm is `|c|`.
    pub fn constant(grid: Arc<Grid>, alpha: [f64; 2], c: f64) -> Self {
        let n = grid.len();
        Self { grid, alpha, u_w: vec![c; n], v_w: vec![c; n], du: vec![c; n], dv: vec![c; n] }
    }

    /// The pair `(R t^(a1-1), R t^(a2-1))`, whose derivative rows are
    /// `Gamma(a_i) R`. Starting point of the decreasing chain.
    pub fn power_start(grid: Arc<Grid>, alpha: [f64; 2], gamma_alpha: [f64; 2], r: f64) -> Self {
        let weighted = |p: f64| -> Vec<f64> {
            grid.nodes()
                .iter()
                .map(|&t| {
                    let tp = t.powf(p);
                    r * tp / (1.0 + tp)
                })
                .collect()
        };
        let n = grid.len();
        Self {
            u_w: weighted(alpha[0] - 1.0),
            v_w: weighted(alpha[1] - 1.0),
            du: vec![gamma_alpha[0] * r; n],
            dv: vec![gamma_alpha[1] * r; n],
            grid,
            alpha,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn alpha(&self) -> [f64; 2] {
        self.alpha
    }

    pub fn rows(&self) -> [&[f64]; 4] {
        [&self.u_w, &self.v_w, &self.du, &self.dv]
    }

    fn rows_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [&mut self.u_w, &mut self.v_w, &mut self.du, &mut self.dv]
    }

    /// `u(t_j)`, unweighted.
    pub fn u(&self, j: usize) -> f64 {
        self.u_w[j] * (1.0 + self.grid.nodes()[j].powf(self.alpha[0] - 1.0))
    }

    /// `v(t_j)`, unweighted.
    pub fn v(&self, j: usize) -> f64 {
        self.v_w[j] * (1.0 + self.grid.nodes()[j].powf(self.alpha[1] - 1.0))
    }

    pub fn norm(&self) -> f64 {
        self.rows().iter().flat_map(|r| r.iter()).fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn distance(&self, other: &SolutionPair) -> f64 {
        self.rows()
            .iter()
            .zip(other.rows())
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    /// Writes `t, u, v, du, dv` (unweighted) after `# key=value` header lines.
    pub fn write_csv<W: Write>(&self, mut out: W, header: &[(String, String)]) -> std::io::Result<()> {
        for (k, v) in header {
            writeln!(out, "# {k}={v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "u", "v", "du", "dv"])?;
        for (j, &t) in self.grid.nodes().iter().enumerate() {
            w.write_record([t, self.u(j), self.v(j), self.du[j], self.dv[j]].map(|x| format!("{x:.17e}")))?;
        }
        w.flush()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Nondecreasing chain from the zero pair.
    Lower,
    /// Nonincreasing chain from the power start of radius `R`.
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Monotone,
    Contraction,
}

impl std::str::FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "monotone" => Ok(Scheme::Monotone),
            "contraction" => Ok(Scheme::Contraction),
            other => Err(format!("unknown scheme `{other}` (monotone, contraction)")),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Monotone => "monotone",
            Scheme::Contraction => "contraction",
        })
    }
}

/// Stopping and bookkeeping parameters shared by both schemes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Discretization tolerance; ordering slack is ten times this, relative.
    pub quad_tol: f64,
}

impl IterOptions {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        Self { tol, max_iter, quad_tol: DEFAULT_LOOP_TOL }
    }

    /// Allowed ordering violation at an entry of size `x`.
    pub fn slack(&self, x: f64) -> f64 {
        10.0 * self.quad_tol * x.abs().max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub n: usize,
    pub norm: f64,
    /// `d_n = ||x_n - x_{n-1}||`.
    pub diff: f64,
    /// `d_n / d_{n-1}`.
    pub ratio: Option<f64>,
    /// Entries clipped back into order (monotone scheme).
    pub clipped: usize,
    pub max_clip: f64,
    /// `m^n / (1 - m) d_1` (contraction scheme).
    pub a_priori: Option<f64>,
    /// `m / (1 - m) d_n` (contraction scheme).
    pub a_posteriori: Option<f64>,
    pub tail: f64,
    pub elapsed_s: f64,
}

/// Full history of a run. `iterates[0]` is the starting point and
/// `iterates[n]` the n-th iterate, so audits can be replayed.
#[derive(Debug, Clone, Serialize)]
pub struct IterationTrace {
    pub scheme: Scheme,
    pub direction: Option<Direction>,
    pub options: IterOptions,
    pub m: Option<f64>,
    pub start_radius: Option<f64>,
    pub converged: bool,
    pub records: Vec<IterationRecord>,
    pub iterates: Vec<SolutionPair>,
    pub warnings: Vec<String>,
    pub elapsed_s: f64,
}

impl IterationTrace {
    fn new(scheme: Scheme, direction: Option<Direction>, options: IterOptions) -> Self {
        Self {
            scheme,
            direction,
            options,
            m: None,
            start_radius: None,
            converged: false,
            records: Vec::new(),
            iterates: Vec::new(),
            warnings: Vec::new(),
            elapsed_s: 0.0,
        }
    }

    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn last(&self) -> &SolutionPair {
        self.iterates.last().expect("trace holds the starting point")
    }

    /// `d_n` for `n = 1..`.
    pub fn diffs(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.diff).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W, header: &[(String, String)]) -> std::io::Result<()> {
        for (k, v) in header {
            writeln!(out, "# {k}={v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "n",
            "norm",
            "diff",
            "ratio",
            "clipped",
            "max_clip",
            "a_priori",
            "a_posteriori",
            "tail",
            "elapsed_s",
        ])?;
        let opt = |x: Option<f64>| x.map(|v| format!("{v:.10e}")).unwrap_or_default();
        for r in &self.records {
            w.write_record([
                r.n.to_string(),
                format!("{:.10e}", r.norm),
                format!("{:.10e}", r.diff),
                opt(r.ratio),
                r.clipped.to_string(),
                format!("{:.3e}", r.max_clip),
                opt(r.a_priori),
                opt(r.a_posteriori),
                format!("{:.3e}", r.tail),
                format!("{:.4}", r.elapsed_s),
            ])?;
        }
        w.flush()
    }
}

fn warn(trace: &mut IterationTrace, msg: String) {
    log::warn!("{msg}");
    trace.warnings.push(msg);
}

/// Restores the chain ordering entry by entry: a new iterate may not move
/// against `direction`. Violations within slack are clipped and counted,
/// larger ones are errors. Negative entries are treated the same way.
fn enforce_order(
    next: &mut SolutionPair,
    prev: &SolutionPair,
    direction: Direction,
    iteration: usize,
    opts: &IterOptions,
) -> Result<(usize, f64), SolverError> {
    let mut clipped = 0;
    let mut max_clip: f64 = 0.0;
    let prev_rows = prev.rows().map(|r| r.to_vec());
    for (row, (cur, old)) in next.rows_mut().into_iter().zip(&prev_rows).enumerate() {
        for (node, (x, &y)) in cur.iter_mut().zip(old).enumerate() {
            let slack = opts.slack(y);
            let against = match direction {
                Direction::Lower => y - *x,
                Direction::Upper => *x - y,
            };
            if against > 0.0 {
                if against > slack {
                    return Err(SolverError::OrderingViolation { iteration, node, row, amount: against, slack });
                }
                *x = y;
                clipped += 1;
                max_clip = max_clip.max(against);
            }
            if *x < 0.0 {
                if -*x > opts.slack(0.0) {
                    return Err(SolverError::OrderingViolation {
                        iteration,
                        node,
                        row,
                        amount: -*x,
                        slack: opts.slack(0.0),
                    });
                }
                max_clip = max_clip.max(-*x);
                *x = 0.0;
                clipped += 1;
            }
        }
    }
    Ok((clipped, max_clip))
}

/// Monotone iteration from the zero pair (`Lower`) or from the power start
/// of radius `big_r` (`Upper`). Stops when `d_n <= tol`.
///
/// Hypotheses are not rechecked here; an ordering violation beyond the
/// slack is reported as an error since it means the operator is not
/// monotone on the chain.
pub fn monotone_iterate(
    op: &Operator<'_>,
    direction: Direction,
    big_r: f64,
    opts: &IterOptions,
) -> Result<IterationTrace, SolverError> {
    let start = Instant::now();
    let grid = op.grid().clone();
    let x0 = match direction {
        Direction::Lower => SolutionPair::zeros(grid, op.alpha()),
        Direction::Upper => {
            if !(big_r > 0.0 && big_r.is_finite()) {
                return Err(SolverError::InvalidOptions(format!("upper start needs R > 0, got {big_r}")));
            }
            SolutionPair::power_start(grid, op.alpha(), op.gamma_alpha(), big_r)
        }
    };
    let mut trace = IterationTrace::new(Scheme::Monotone, Some(direction), *opts);
    if direction == Direction::Upper {
        trace.start_radius = Some(big_r);
    }
    trace.iterates.push(x0);
    let mut prev_diff: Option<f64> = None;
    for n in 1..=opts.max_iter {
        let prev = trace.last();
        let (mut next, stats) = op.apply_with_stats(prev)?;
        let (clipped, max_clip) = enforce_order(&mut next, prev, direction, n, opts)?;
        let diff = next.distance(prev);
        trace.records.push(IterationRecord {
            n,
            norm: next.norm(),
            diff,
            ratio: prev_diff.filter(|&d| d > 0.0).map(|d| diff / d),
            clipped,
            max_clip,
            a_priori: None,
            a_posteriori: None,
            tail: op.tail_contribution(&stats),
            elapsed_s: start.elapsed().as_secs_f64(),
        });
        log::debug!("monotone {direction:?} n={n} d={diff:.3e} clipped={clipped}");
        trace.iterates.push(next);
        prev_diff = Some(diff);
        if diff <= opts.tol {
            trace.converged = true;
            break;
        }
    }
    finish(&mut trace, start);
    Ok(trace)
}

/// Picard iteration `x_{n+1} = T x_n` with modulus `m < 1`.
///
/// Stops once the a-posteriori bound `m / (1 - m) d_n` is at most `tol`.
/// Warns when observed ratios stay above `m + 0.05`, which means the
/// discrete operator is not contracting at the claimed rate.
pub fn contract_iterate(
    op: &Operator<'_>,
    initial: Option<SolutionPair>,
    m: f64,
    opts: &IterOptions,
) -> Result<IterationTrace, SolverError> {
    if !(0.0..1.0).contains(&m) {
        return Err(SolverError::Inapplicable(format!("contraction modulus m = {m} is not below 1")));
    }
    let start = Instant::now();
    let x0 = initial.unwrap_or_else(|| SolutionPair::zeros(op.grid().clone(), op.alpha()));
    if x0.grid().nodes() != op.grid().nodes() {
        return Err(SolverError::GridMismatch);
    }
    let mut trace = IterationTrace::new(Scheme::Contraction, None, *opts);
    trace.m = Some(m);
    trace.iterates.push(x0);
    let mut d1 = None;
    let mut prev_diff: Option<f64> = None;
    let mut slow_streak = 0;
    for n in 1..=opts.max_iter {
        let prev = trace.last();
        let (next, stats) = op.apply_with_stats(prev)?;
        let diff = next.distance(prev);
        let d1 = *d1.get_or_insert(diff);
        let ratio = prev_diff.filter(|&d| d > 0.0).map(|d| diff / d);
        let a_posteriori = m / (1.0 - m) * diff;
        trace.records.push(IterationRecord {
            n,
            norm: next.norm(),
            diff,
            ratio,
            clipped: 0,
            max_clip: 0.0,
            a_priori: Some(m.powi(n as i32) / (1.0 - m) * d1),
            a_posteriori: Some(a_posteriori),
            tail: op.tail_contribution(&stats),
            elapsed_s: start.elapsed().as_secs_f64(),
        });
        log::debug!("contraction n={n} d={diff:.3e} ratio={ratio:?}");
        trace.iterates.push(next);
        prev_diff = Some(diff);
        if n >= 5 && ratio.is_some_and(|r| r > m + 0.05) {
            slow_streak += 1;
            if slow_streak == 3 {
                let r = ratio.unwrap_or_default();
                warn(&mut trace, format!("observed ratio {r:.4} exceeds m + 0.05 = {:.4}", m + 0.05));
            }
        } else {
            slow_streak = 0;
        }
        if a_posteriori <= opts.tol {
            trace.converged = true;
            break;
        }
    }
    finish(&mut trace, start);
    Ok(trace)
}

fn finish(trace: &mut IterationTrace, start: Instant) {
    trace.elapsed_s = start.elapsed().as_secs_f64();
    if !trace.converged {
        let d = trace.records.last().map_or(f64::NAN, |r| r.diff);
        warn(trace, format!("no convergence after {} iterations (last d_n = {d:.3e})", trace.options.max_iter));
    }
    // The tail is integrated, not truncated; only the flat extrapolation of
    // the state past t_N is approximate, which matters when the tail carries
    // a visible share of the solution.
    if let Some(r) = trace.records.last() {
        if r.tail > 0.1 * r.norm {
            warn(
                trace,
                format!(
                    "forcing past the last node contributes {:.2e} of a norm {:.2e}; \
                     consider a larger grid or theta",
                    r.tail, r.norm
                ),
            );
        }
    }
}

/// Monotone solve with default discretization; `R` comes from the growth data.
pub fn monotone_solve(
    p: &ProblemSpec,
    kernels: &[KernelSet; 2],
    grid: Arc<Grid>,
    direction: Direction,
    tol: f64,
    max_iter: usize,
) -> Result<(SolutionPair, IterationTrace), SolverError> {
    let big_r = match direction {
        Direction::Upper => problem::radius_R(p, DEFAULT_CONSTANT_TOL)?,
        Direction::Lower => 0.0,
    };
    let op = Operator::new(p, kernels, grid, PlanOptions::default())?;
    let trace = monotone_iterate(&op, direction, big_r, &IterOptions::new(tol, max_iter))?;
    Ok((trace.last().clone(), trace))
}

/// Contraction solve with default discretization; `m` comes from the Lipschitz data.
pub fn contract_solve(
    p: &ProblemSpec,
    kernels: &[KernelSet; 2],
    grid: Arc<Grid>,
    initial: Option<SolutionPair>,
    tol: f64,
    max_iter: usize,
) -> Result<(SolutionPair, IterationTrace), SolverError> {
    let m = problem::contraction_modulus(p, DEFAULT_CONSTANT_TOL)?;
    let op = Operator::new(p, kernels, grid, PlanOptions::default())?;
    let trace = contract_iterate(&op, initial, m, &IterOptions::new(tol, max_iter))?;
    Ok((trace.last().clone(), trace))
}

/// One application of `T` with default discretization.
pub fn apply_t(p: &ProblemSpec, kernels: &[KernelSet; 2], x: &SolutionPair) -> Result<SolutionPair, SolverError> {
    Operator::new(p, kernels, x.grid().clone(), PlanOptions::default())?.apply(x)
}
