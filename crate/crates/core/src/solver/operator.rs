//! Nyström discretization of the fixed-point operator.

use std::sync::Arc;

use rayon::prelude::*;

use super::interp::{Interpolation, Profile};
use super::{Grid, SolutionPair, SolverError};
use crate::kernels::KernelSet;
use crate::problem::ProblemSpec;
use crate::quad::{graded_composite_rule, mapped_tail_rule};

/// Discretization knobs. The defaults resolve the example problems well
/// below the iteration tolerances used on them.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PlanOptions {
    pub points_per_panel: usize,
    pub tail_points: usize,
    pub interpolation: Interpolation,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self { points_per_panel: 8, tail_points: 24, interpolation: Interpolation::Linear }
    }
}

/// Side information from one application.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ApplyStats {
    /// `int_{t_N}^inf |f_i|` per component, as seen by the tail rule.
    pub tail_mass: [f64; 2],
    /// `int_{t_N}^inf f_i`, signed.
    pub tail_integral: [f64; 2],
}

/// The operator `T` restricted to the grid.
///
/// Integrals over `s` use a composite rule with a panel between each pair
/// of consecutive nodes, so every kink of `K(t_j, .)` and of the
/// interpolated state falls on a panel boundary, plus a mapped rule past
/// the last node. Kernel values times weights are stored once.
pub struct Operator<'a> {
    problem: &'a ProblemSpec,
    grid: Arc<Grid>,
    alpha: [f64; 2],
    gamma: [f64; 2],
    kstar_bound: [f64; 2],
    s: Vec<f64>,
    w: Vec<f64>,
    tail_start: usize,
    /// Row-major `N x Q` matrices of `K_i(t_j, s_q) w_q` and `K*_i(t_j, s_q) w_q`.
    value_weights: [Vec<f64>; 2],
    deriv_weights: [Vec<f64>; 2],
    options: PlanOptions,
}

impl<'a> Operator<'a> {
    pub fn new(
        problem: &'a ProblemSpec,
        kernels: &[KernelSet; 2],
        grid: Arc<Grid>,
        options: PlanOptions,
    ) -> Result<Self, SolverError> {
        if options.points_per_panel < 2 || options.tail_points < 2 {
            return Err(SolverError::InvalidOptions("quadrature needs at least two points per panel".into()));
        }
        let t = grid.nodes();
        let mut breaks = Vec::with_capacity(t.len() + 1);
        breaks.push(0.0);
        breaks.extend_from_slice(t);
        let mut s = Vec::new();
        let mut w = Vec::new();
        for (sq, wq, _) in graded_composite_rule(&breaks, options.points_per_panel) {
            s.push(sq);
            w.push(wq);
        }
        let tail_start = s.len();
        for (sq, wq) in mapped_tail_rule(*t.last().expect("grid is nonempty"), options.tail_points) {
            s.push(sq);
            w.push(wq);
        }

        let q = s.len();
        let mut value_weights: [Vec<f64>; 2] = Default::default();
        let mut deriv_weights: [Vec<f64>; 2] = Default::default();
        for (i, ks) in kernels.iter().enumerate() {
            ks.prefill(&s)?;
            let rows: Vec<(Vec<f64>, Vec<f64>)> = t
                .par_iter()
                .map(|&tj| {
                    let mut vrow = Vec::with_capacity(q);
                    let mut drow = Vec::with_capacity(q);
                    for (&sq, &wq) in s.iter().zip(&w) {
                        vrow.push(ks.k(tj, sq)? * wq);
                        drow.push(ks.kstar(tj, sq)? * wq);
                    }
                    Ok((vrow, drow))
                })
                .collect::<Result<_, crate::kernels::KernelError>>()?;
            for (vrow, drow) in rows {
                value_weights[i].extend(vrow);
                deriv_weights[i].extend(drow);
            }
        }

        Ok(Self {
            problem,
            alpha: [kernels[0].alpha().value(), kernels[1].alpha().value()],
            gamma: [kernels[0].gamma_alpha(), kernels[1].gamma_alpha()],
            kstar_bound: [kernels[0].kstar_bound(), kernels[1].kstar_bound()],
            grid,
            s,
            w,
            tail_start,
            value_weights,
            deriv_weights,
            options,
        })
    }

    pub fn problem(&self) -> &ProblemSpec {
        self.problem
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn alpha(&self) -> [f64; 2] {
        self.alpha
    }

    pub fn gamma_alpha(&self) -> [f64; 2] {
        self.gamma
    }

    pub fn options(&self) -> PlanOptions {
        self.options
    }

    /// Quadrature abscissae and weights in `s`, tail points last.
    pub fn quadrature(&self) -> (&[f64], &[f64]) {
        (&self.s, &self.w)
    }

    /// Bound on what the region past the last node contributes to the
    /// derivative rows: `max_i kstar_bound_i * tail_mass_i`.
    pub fn tail_contribution(&self, stats: &ApplyStats) -> f64 {
        (0..2).map(|i| self.kstar_bound[i] * stats.tail_mass[i]).fold(0.0, f64::max)
    }

    /// `f_i(s_q, state(s_q))` at every quadrature point.
    pub fn forcing(&self, x: &SolutionPair) -> Result<[Vec<f64>; 2], SolverError> {
        let profile = Profile::new(x, self.options.interpolation);
        let eval_all = |i: usize| -> Result<Vec<f64>, SolverError> {
            self.s
                .par_iter()
                .map(|&sq| {
                    let state = profile.state(sq);
                    self.problem.rhs(i, sq, state).map_err(|source| SolverError::Eval {
                        component: i + 1,
                        s: sq,
                        source,
                    })
                })
                .collect()
        };
        Ok([eval_all(0)?, eval_all(1)?])
    }

    /// `T(x)` on the grid.
    pub fn apply(&self, x: &SolutionPair) -> Result<SolutionPair, SolverError> {
        self.apply_with_stats(x).map(|(y, _)| y)
    }

    pub fn apply_with_stats(&self, x: &SolutionPair) -> Result<(SolutionPair, ApplyStats), SolverError> {
        if !Arc::ptr_eq(x.grid(), &self.grid) && x.grid().nodes() != self.grid.nodes() {
            return Err(SolverError::GridMismatch);
        }
        let f = self.forcing(x)?;
        let t = self.grid.nodes();
        let q = self.s.len();
        let matvec = |m: &[f64], fi: &[f64]| -> Vec<f64> {
            m.par_chunks(q).map(|row| row.iter().zip(fi).map(|(a, b)| a * b).sum()).collect()
        };
        let mut rows: [Vec<f64>; 4] = Default::default();
        for i in 0..2 {
            let p = self.alpha[i] - 1.0;
            rows[i] = matvec(&self.value_weights[i], &f[i])
                .into_iter()
                .zip(t)
                .map(|(u, &tj)| u / (1.0 + tj.powf(p)))
                .collect();
            rows[i + 2] = matvec(&self.deriv_weights[i], &f[i]);
        }
        let mut stats = ApplyStats::default();
        for (i, fi) in f.iter().enumerate() {
            let tail = fi[self.tail_start..].iter().zip(&self.w[self.tail_start..]);
            stats.tail_mass[i] = tail.clone().map(|(a, w)| a.abs() * w).sum();
            stats.tail_integral[i] = tail.map(|(a, w)| a * w).sum();
        }
        let [u_w, v_w, du, dv] = rows;
        Ok((SolutionPair::from_rows(self.grid.clone(), self.alpha, u_w, v_w, du, dv)?, stats))
    }
}
