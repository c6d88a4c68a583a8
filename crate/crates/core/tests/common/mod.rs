#![allow(dead_code)]

use faer::linalg::solvers::Solve;
use faer::Mat;
use maxwell_elliptic::assembly::{ExtendedState, SparseLSSystem};
use maxwell_elliptic::geometry::{Aabb, DomainSpec, Grid};
use maxwell_elliptic::solver::ScaledOperator;
use num_complex::Complex64;

/// `log₂(e_coarse / e_fine)` for successive halvings of `h`.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Outer cube `[0, 1]³` with the inner box `[1/3, 2/3]³`, resolved by
/// `n = 6` cells.
pub fn tiny_domain() -> DomainSpec {
    DomainSpec::new(Aabb::cube(0.0, 1.0), Aabb::cube(1.0 / 3.0, 2.0 / 3.0), 6)
}

/// Minimum-norm least-squares solution of `W R D x = W b` by a dense
/// Cholesky factorization of `AᴴA + vvᴴ`, where `v` spans the null space
/// made of constant `α`. Returns `y = D x` as a state.
pub fn dense_least_squares(grid: &Grid, system: &SparseLSSystem) -> ExtendedState {
    let op = ScaledOperator::new(system);
    let a = &op.a;
    let n = a.n_cols;
    let mut normal = Mat::<Complex64>::zeros(n, n);
    let mut rhs = Mat::<Complex64>::zeros(n, 1);
    for r in 0..a.n_rows {
        let b = system.rhs[r] * system.weights[r];
        let entries: Vec<(usize, Complex64)> = a.row(r).collect();
        for &(i, vi) in &entries {
            rhs[(i, 0)] += vi.conj() * b;
            for &(j, vj) in &entries {
                normal[(i, j)] += vi.conj() * vj;
            }
        }
    }
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    for s in 0..grid.slot_count() {
        v[8 * s + 6] = Complex64::new(1.0 / op.col_scale[8 * s + 6], 0.0);
    }
    let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for i in 0..n {
        for j in 0..n {
            normal[(i, j)] += v[i] * v[j].conj() / (vn * vn);
        }
    }
    let x = normal
        .llt(faer::Side::Lower)
        .expect("regularized normal matrix is positive definite")
        .solve(&rhs);
    let y: Vec<Complex64> = (0..n).map(|i| x[(i, 0)] * op.col_scale[i]).collect();
    ExtendedState::from_vector(&y)
}

/// Unknown vector with the mean of `α` removed.
pub fn without_alpha_mean(state: &ExtendedState) -> Vec<Complex64> {
    let mut s = state.clone();
    let mean = s.alpha.values.iter().sum::<Complex64>() / s.alpha.len() as f64;
    s.alpha.values.iter_mut().for_each(|a| *a -= mean);
    s.to_vector()
}

pub fn relative_difference(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}
