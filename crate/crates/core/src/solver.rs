//! Iterative least-squares solve and post-solve equivalence checks.
//!
//! The weighted problem `min ‖W(Rx − b)‖` is solved by CGLS (conjugate
//! gradients on the normal equations) applied to `A = W R D`, where `D`
//! scales every column of `WR` to unit norm. Reductions are chunked in a
//! fixed order so results are bit-identical across thread counts.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{residual, CsrMatrix, ExtendedState, ResidualReport, SparseLSSystem};
use crate::data_map::MaxwellData;
use crate::discrete_ops::{curl_fd, volume_vector_norm, VectorField};
use crate::geometry::Grid;
use crate::media::MediumField;
use crate::{Error, Result, IMAG};

const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Relative tolerance on `‖r‖/‖b‖` or on the normal-equation residual
    /// `‖Aᴴr‖/‖Aᴴb‖`, whichever is met first.
    pub tol: f64,
    pub max_iter: usize,
    /// Fail if the normal-equation residual sets no new minimum within this
    /// many iterations.
    pub stagnation_window: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50_000,
            stagnation_window: 2_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    Stagnated,
}

/// Post-solve checks of the equivalence predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    /// `max |α − mean α|` over all slots.
    pub alpha_variation: f64,
    /// `max |β|` over all slots.
    pub beta_norm: f64,
    /// `curl E − iωμH − K`: maximum and volume `L²` norm.
    pub maxwell_e_max: f64,
    pub maxwell_e_l2: f64,
    /// `curl H + iωεE − J`: maximum and volume `L²` norm.
    pub maxwell_h_max: f64,
    pub maxwell_h_l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub iterations: usize,
    /// `‖W(Rx − b)‖`.
    pub weighted_residual: f64,
    /// `‖W(Rx − b)‖ / ‖Wb‖` (0 for zero data).
    pub relative_residual: f64,
    /// `‖Aᴴr‖ / ‖Aᴴb‖` at exit.
    pub normal_residual: f64,
    /// `‖W(Rx − b)‖` after each iteration, starting with the initial value.
    pub history: Vec<f64>,
    pub groups: ResidualReport,
    pub equivalence: Option<EquivalenceReport>,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

fn norm(a: &[Complex64]) -> f64 {
    let partial: Vec<f64> = a
        .par_chunks(CHUNK)
        .map(|x| x.iter().map(|u| u.norm_sqr()).sum())
        .collect();
    partial.into_iter().sum::<f64>().sqrt()
}

fn axpy(y: &mut [Complex64], a: Complex64, x: &[Complex64]) {
    y.par_iter_mut().zip(x).for_each(|(u, v)| *u += a * v);
}

/// Weighted, column-equilibrated operator and its adjoint.
pub struct ScaledOperator {
    pub a: CsrMatrix,
    pub a_adj: CsrMatrix,
    pub col_scale: Vec<f64>,
}

impl ScaledOperator {
    pub fn new(system: &SparseLSSystem) -> Self {
        let m = &system.matrix;
        let mut col_sq = vec![0.0; m.n_cols];
        for r in 0..m.n_rows {
            let w2 = system.weights[r] * system.weights[r];
            for (c, v) in m.row(r) {
                col_sq[c] += w2 * v.norm_sqr();
            }
        }
        let col_scale: Vec<f64> = col_sq
            .iter()
            .map(|s| if *s > 0.0 { 1.0 / s.sqrt() } else { 1.0 })
            .collect();
        let a = m.scaled(&system.weights, &col_scale);
        let a_adj = a.adjoint();
        Self { a, a_adj, col_scale }
    }
}

/// Minimize `‖W(Rx − b)‖` and report the outcome.
///
/// Reaching `max_iter` or stagnating is reported through
/// [`SolveReport::status`]; the best available iterate is still returned.
pub fn solve(system: &SparseLSSystem, config: &SolverConfig) -> Result<(ExtendedState, SolveReport)> {
    if !(config.tol > 0.0 && config.tol < 1.0) {
        return Err(Error::Invalid(format!("tol must lie in (0, 1), got {}", config.tol)));
    }
    if config.stagnation_window == 0 {
        return Err(Error::Invalid("stagnation window must be positive".into()));
    }
    let op = ScaledOperator::new(system);
    let b: Vec<Complex64> = system
        .rhs
        .iter()
        .zip(&system.weights)
        .map(|(v, w)| v * *w)
        .collect();
    let (x, stats) = cgls(&op.a, &op.a_adj, &b, config);
    let y: Vec<Complex64> = x.iter().zip(&op.col_scale).map(|(v, s)| v * *s).collect();
    let state = ExtendedState::from_vector(&y);
    let groups = residual(system, &state)?;
    let b_norm = norm(&b);
    let report = SolveReport {
        status: stats.status,
        iterations: stats.iterations,
        weighted_residual: groups.weighted,
        relative_residual: if b_norm > 0.0 { groups.weighted / b_norm } else { 0.0 },
        normal_residual: stats.normal_residual,
        history: stats.history,
        groups,
        equivalence: None,
    };
    Ok((state, report))
}

struct CglsStats {
    status: SolveStatus,
    iterations: usize,
    normal_residual: f64,
    history: Vec<f64>,
}

fn cgls(a: &CsrMatrix, a_adj: &CsrMatrix, b: &[Complex64], config: &SolverConfig) -> (Vec<Complex64>, CglsStats) {
    let zero = Complex64::new(0.0, 0.0);
    let mut x = vec![zero; a.n_cols];
    let mut r = b.to_vec();
    let mut s = vec![zero; a.n_cols];
    a_adj.mul_vec(&r, &mut s);
    let b_norm = norm(b);
    let s0 = norm(&s);
    let mut history = vec![b_norm];
    if b_norm == 0.0 || s0 == 0.0 {
        return (
            x,
            CglsStats {
                status: SolveStatus::Converged,
                iterations: 0,
                normal_residual: 0.0,
                history,
            },
        );
    }
    let mut p = s.clone();
    let mut q = vec![zero; a.n_rows];
    let mut gamma = s0 * s0;
    let mut best = s0;
    let mut best_at = 0;
    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0;
    let mut normal = 1.0;
    while iterations < config.max_iter {
        iterations += 1;
        a.mul_vec(&p, &mut q);
        let qq = norm(&q).powi(2);
        if qq == 0.0 {
            status = SolveStatus::Stagnated;
            break;
        }
        let step = Complex64::new(gamma / qq, 0.0);
        axpy(&mut x, step, &p);
        axpy(&mut r, -step, &q);
        a_adj.mul_vec(&r, &mut s);
        let s_norm = norm(&s);
        let r_norm = norm(&r);
        history.push(r_norm);
        normal = s_norm / s0;
        if r_norm <= config.tol * b_norm || normal <= config.tol {
            status = SolveStatus::Converged;
            break;
        }
        if s_norm < best {
            best = s_norm;
            best_at = iterations;
        } else if iterations - best_at >= config.stagnation_window {
            status = SolveStatus::Stagnated;
            break;
        }
        let gamma_new = s_norm * s_norm;
        let beta = gamma_new / gamma;
        gamma = gamma_new;
        p.par_iter_mut().zip(&s).for_each(|(pi, si)| *pi = si + *pi * beta);
    }
    (
        x,
        CglsStats {
            status,
            iterations,
            normal_residual: normal,
            history,
        },
    )
}

/// Check the predictions `α = const`, `β = 0` and the Maxwell equations on a
/// solved state, using the same one-sided stencils as the discretization.
pub fn verify_equivalence(
    grid: &Grid,
    medium: &MediumField,
    md: &MaxwellData,
    state: &ExtendedState,
) -> Result<EquivalenceReport> {
    md.validate(grid)?;
    for (f, what) in [(&state.e, "E"), (&state.h, "H")] {
        f.check(grid, what)?;
    }
    state.alpha.check(grid, "α")?;
    state.beta.check(grid, "β")?;
    let samples = medium.sample(grid);
    let iw = IMAG * md.omega;
    let n = state.alpha.len() as f64;
    let mean = state.alpha.values.iter().sum::<Complex64>() / n;
    let alpha_variation = state.alpha.values.iter().map(|a| (a - mean).norm()).fold(0.0, f64::max);
    let beta_norm = state.beta.values.iter().map(|b| b.norm()).fold(0.0, f64::max);

    let curl_e = curl_fd(grid, &state.e)?;
    let curl_h = curl_fd(grid, &state.h)?;
    let res_e = VectorField {
        values: (0..grid.slot_count())
            .map(|s| curl_e.values[s] - samples.mu[s].apply(&state.h.values[s]) * iw - md.k_src.values[s])
            .collect(),
    };
    let res_h = VectorField {
        values: (0..grid.slot_count())
            .map(|s| curl_h.values[s] + samples.eps[s].apply(&state.e.values[s]) * iw - md.j_src.values[s])
            .collect(),
    };
    let vmax = |f: &VectorField| f.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(EquivalenceReport {
        alpha_variation,
        beta_norm,
        maxwell_e_max: vmax(&res_e),
        maxwell_e_l2: volume_vector_norm(grid, &res_e),
        maxwell_h_max: vmax(&res_h),
        maxwell_h_l2: volume_vector_norm(grid, &res_h),
    })
}

/// `‖(E,H) − (E*,H*)‖ / ‖(E*,H*)‖` in the discrete volume norm.
pub fn relative_field_error(grid: &Grid, state: &ExtendedState, exact: &ExtendedState) -> f64 {
    let diff = |a: &VectorField, b: &VectorField| VectorField {
        values: a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect(),
    };
    let num = volume_vector_norm(grid, &diff(&state.e, &exact.e)).powi(2)
        + volume_vector_norm(grid, &diff(&state.h, &exact.h)).powi(2);
    let den = volume_vector_norm(grid, &exact.e).powi(2) + volume_vector_norm(grid, &exact.h).powi(2);
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}
