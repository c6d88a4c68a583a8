mod common;

use common::{observed_orders, relative_difference, tiny_domain};
use maxwell_elliptic::assembly::{assemble, residual, ProblemData, RowFamily, WeightPolicy};
use maxwell_elliptic::data_map::{check_compatibility, maxwell_to_elliptic, MaxwellData};
use maxwell_elliptic::discrete_ops::{
    curl_fd, div_fd, surface_norm, tangential_div, volume_norm, ScalarField, SurfaceField, SurfaceScalar,
    SurfaceVector, VectorField,
};
use maxwell_elliptic::geometry::{build_grid, DomainSpec, Grid, Surface};
use maxwell_elliptic::media::{CoefficientExpr, MaterialTensor, MediumField};
use maxwell_elliptic::oracles::{general_mms, layered_wave, plane_wave, quadratic_mms, ManufacturedCase};
use maxwell_elliptic::solver::{solve, verify_equivalence, SolverConfig};
use maxwell_elliptic::symbol_check::{
    lopatinsky_test, media_sweep, principal_symbol_det, random_medium, random_rotation, Block, SurfaceSelection,
    SweepConfig, SymbolProblem,
};
use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn grid(n: usize) -> Grid {
    build_grid(&DomainSpec::unit(n)).unwrap()
}

fn contrast_medium() -> MediumField {
    MediumField::new(
        CoefficientExpr::constant(1.0),
        CoefficientExpr::constant(2.5),
        CoefficientExpr::constant(1.0),
        CoefficientExpr::constant(1.5),
    )
}

fn vf(a: Complex64, x: &VectorField, b: Complex64, y: &VectorField) -> VectorField {
    VectorField {
        values: x.values.iter().zip(&y.values).map(|(u, v)| u * a + v * b).collect(),
    }
}

fn sv(a: Complex64, x: &SurfaceVector, b: Complex64, y: &SurfaceVector) -> SurfaceVector {
    SurfaceField {
        kind: x.kind,
        patches: x
            .patches
            .iter()
            .zip(&y.patches)
            .map(|(p, q)| p.iter().zip(q).map(|(u, v)| u * a + v * b).collect())
            .collect(),
    }
}

fn combine_maxwell(a: Complex64, x: &MaxwellData, b: Complex64, y: &MaxwellData) -> MaxwellData {
    MaxwellData {
        omega: x.omega,
        e_tau_gamma: sv(a, &x.e_tau_gamma, b, &y.e_tau_gamma),
        h_tau_gamma: sv(a, &x.h_tau_gamma, b, &y.h_tau_gamma),
        e_tau_outer: sv(a, &x.e_tau_outer, b, &y.e_tau_outer),
        k_src: vf(a, &x.k_src, b, &y.k_src),
        j_src: vf(a, &x.j_src, b, &y.j_src),
    }
}

fn max_vector_diff(x: &VectorField, y: &VectorField) -> f64 {
    x.values.iter().zip(&y.values).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max)
}

fn max_vector(x: &VectorField) -> f64 {
    x.values.iter().map(|u| u.norm()).fold(0.0, f64::max)
}

fn surface_diff(grid: &Grid, x: &SurfaceScalar, y: &SurfaceScalar) -> f64 {
    surface_norm(grid, &x.minus(y))
}

fn volume_diff(grid: &Grid, x: &ScalarField, y: &ScalarField) -> f64 {
    let d = ScalarField {
        values: x.values.iter().zip(&y.values).map(|(u, v)| u - v).collect(),
    };
    volume_norm(grid, &d)
}

/// Largest difference between two sets of elliptic data, relative to the
/// size of `b`.
fn data_difference(grid: &Grid, a: &ProblemData, b: &ProblemData) -> f64 {
    let diffs = [
        surface_diff(grid, &a.d_nu_gamma, &b.d_nu_gamma),
        surface_diff(grid, &a.b_nu_gamma, &b.b_nu_gamma),
        surface_diff(grid, &a.b_nu_outer, &b.b_nu_outer),
        surface_diff(grid, &a.alpha_gamma, &b.alpha_gamma),
        surface_diff(grid, &a.beta_gamma, &b.beta_gamma),
        surface_diff(grid, &a.beta_outer, &b.beta_outer),
        volume_diff(grid, &a.k, &b.k),
        volume_diff(grid, &a.j, &b.j),
    ];
    let scale = [
        surface_norm(grid, &b.d_nu_gamma),
        surface_norm(grid, &b.b_nu_gamma),
        surface_norm(grid, &b.b_nu_outer),
        volume_norm(grid, &b.k),
        volume_norm(grid, &b.j),
    ]
    .into_iter()
    .fold(1e-300, f64::max);
    diffs.into_iter().fold(0.0, f64::max) / scale
}

fn symbol_problem(seed: u64, theta: f64, surface: Surface) -> SymbolProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SymbolProblem {
        sigma: [theta.cos(), theta.sin()],
        rotation: random_rotation(&mut rng),
        eps_plus: random_medium(&mut rng),
        eps_minus: random_medium(&mut rng),
        mu_plus: random_medium(&mut rng),
        mu_minus: random_medium(&mut rng),
        surface,
    }
}

fn rotation_z(phi: f64) -> Matrix3<f64> {
    let (s, c) = phi.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn assert_same_values(a: &[f64], b: &[f64], rel: f64) {
    assert_eq!(a.len(), b.len());
    let scale = a.iter().chain(b).fold(0.0f64, |m, v| m.max(v.abs()));
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= rel * scale, "{a:?} vs {b:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symbol_determinant_is_fourth_power_of_norm(
        x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0, log_mag in -3.0f64..3.0,
    ) {
        let dir = Vector3::new(x, y, z);
        prop_assume!(dir.norm() > 1e-3);
        let sigma = dir.normalize() * 10f64.powf(log_mag);
        let expected = sigma.norm_squared().powi(2);
        let det = principal_symbol_det(&sigma);
        prop_assert!((det.norm() - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn every_admissible_sample_has_split_spectrum_and_trivial_kernel(
        seed in any::<u64>(), theta in 0.0f64..std::f64::consts::TAU,
    ) {
        for surface in [Surface::Interface, Surface::Outer] {
            let problem = symbol_problem(seed, theta, surface);
            for block in Block::BOTH {
                let report = lopatinsky_test(&problem, block).unwrap();
                prop_assert!(report.structural_ok());
                prop_assert!(report.trivial_kernel(), "{:?}", report.singular_values);
            }
        }
    }

    #[test]
    fn singular_values_are_invariant_under_scaling_of_sigma(
        seed in any::<u64>(), theta in 0.0f64..std::f64::consts::TAU, log_t in -2.0f64..2.0,
    ) {
        let t = 10f64.powf(log_t);
        for surface in [Surface::Interface, Surface::Outer] {
            let base = symbol_problem(seed, theta, surface);
            let scaled = SymbolProblem { sigma: [base.sigma[0] * t, base.sigma[1] * t], ..base.clone() };
            for block in Block::BOTH {
                let a = lopatinsky_test(&base, block).unwrap();
                let b = lopatinsky_test(&scaled, block).unwrap();
                assert_same_values(&a.singular_values, &b.singular_values, 1e-10);
                prop_assert_eq!(a.trivial_kernel(), b.trivial_kernel());
            }
        }
    }

    #[test]
    fn verdict_is_invariant_under_tangent_plane_rotation(
        seed in any::<u64>(), theta in 0.0f64..std::f64::consts::TAU, phi in 0.0f64..std::f64::consts::TAU,
    ) {
        for surface in [Surface::Interface, Surface::Outer] {
            let base = symbol_problem(seed, theta, surface);
            let r = rotation_z(phi);
            let s = base.sigma;
            let turned = SymbolProblem {
                sigma: [r[(0, 0)] * s[0] + r[(0, 1)] * s[1], r[(1, 0)] * s[0] + r[(1, 1)] * s[1]],
                rotation: r * base.rotation,
                ..base.clone()
            };
            for block in Block::BOTH {
                let a = lopatinsky_test(&base, block).unwrap();
                let b = lopatinsky_test(&turned, block).unwrap();
                assert_same_values(&a.singular_values, &b.singular_values, 1e-10);
                prop_assert_eq!(a.trivial_kernel(), b.trivial_kernel());
            }
        }
    }

    #[test]
    fn lossy_scalar_media_remain_elliptic(
        re_p in 0.01f64..10.0, ratio_p in -100.0f64..100.0,
        re_m in 0.01f64..10.0, ratio_m in -100.0f64..100.0,
        theta in 0.0f64..std::f64::consts::TAU,
    ) {
        let eps_plus = MaterialTensor::scalar(cx(re_p, ratio_p * re_p));
        let eps_minus = MaterialTensor::scalar(cx(re_m, ratio_m * re_m));
        let problem = SymbolProblem {
            eps_plus,
            eps_minus,
            mu_plus: eps_minus,
            mu_minus: eps_plus,
            ..SymbolProblem::isotropic([theta.cos(), theta.sin()], Surface::Interface)
        };
        for block in Block::BOTH {
            prop_assert!(lopatinsky_test(&problem, block).unwrap().trivial_kernel());
        }
    }

    #[test]
    fn layered_coefficients_keep_tangential_continuity(
        eps_p in 0.1f64..10.0, eps_m in 0.1f64..10.0, loss in 0.0f64..5.0, mu in 0.1f64..10.0,
    ) {
        let w = layered_wave(cx(eps_p, 0.0), cx(eps_m, loss), cx(mu, 0.0), 1.0, Vector3::new(0.0, 0.0, -1.0), 0.5)
            .unwrap();
        prop_assert!((1.0 + w.reflection - w.transmission).norm() <= 1e-14);
    }
}

#[test]
fn isotropic_sweep_is_constant_over_directions() {
    let report = media_sweep(&SweepConfig {
        samples: 1,
        seed: 5,
        directions: 64,
        surfaces: SurfaceSelection::Both,
        isotropic: true,
    })
    .unwrap();
    assert!(report.elliptic);
    for block in Block::BOTH {
        for surface in [Surface::Interface, Surface::Outer] {
            let values: Vec<f64> = report
                .rows
                .iter()
                .filter(|r| r.block == block && r.surface == surface)
                .map(|r| r.min_singular_value)
                .collect();
            assert_eq!(values.len(), 64);
            let (lo, hi) = values.iter().fold((f64::MAX, f64::MIN), |(l, h), v| (l.min(*v), h.max(*v)));
            assert!(hi - lo <= 1e-12 * hi, "{block:?} {surface:?}: {lo} .. {hi}");
        }
    }
}

#[test]
fn sweep_does_not_depend_on_thread_count() {
    let config = SweepConfig {
        samples: 8,
        seed: 11,
        directions: 16,
        ..SweepConfig::default()
    };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| media_sweep(&config).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one.to_csv(), run(3).to_csv());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn discrete_operators_are_linear(s1 in 0u64..1000, s2 in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let g = grid(8);
        let f = general_mms(s1, MediumField::vacuum(), 1.0).exact_state(&g).e;
        let h = general_mms(s2, MediumField::vacuum(), 1.0).exact_state(&g).h;
        let (a, b) = (cx(a, 0.5), cx(b, -1.0));
        let mix = vf(a, &f, b, &h);
        let scale = max_vector(&f).max(max_vector(&h));

        let curl = curl_fd(&g, &mix).unwrap();
        let expected = vf(a, &curl_fd(&g, &f).unwrap(), b, &curl_fd(&g, &h).unwrap());
        prop_assert!(max_vector_diff(&curl, &expected) <= 1e-11 * scale);

        let div = div_fd(&g, &mix).unwrap();
        let (df, dh) = (div_fd(&g, &f).unwrap(), div_fd(&g, &h).unwrap());
        for ((d, x), y) in div.values.iter().zip(&df.values).zip(&dh.values) {
            prop_assert!((d - (a * x + b * y)).norm() <= 1e-11 * scale);
        }
    }

    #[test]
    fn data_map_is_linear(s1 in 0u64..1000, s2 in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let g = grid(8);
        let x = general_mms(s1, contrast_medium(), 1.5).maxwell_data(&g);
        let y = general_mms(s2, contrast_medium(), 1.5).maxwell_data(&g);
        let (a, b) = (cx(a, 1.0), cx(b, 0.0));
        let lhs = maxwell_to_elliptic(&g, &combine_maxwell(a, &x, b, &y)).unwrap();
        let rhs = maxwell_to_elliptic(&g, &x)
            .unwrap()
            .combine(a, &maxwell_to_elliptic(&g, &y).unwrap(), b);
        prop_assert!(data_difference(&g, &lhs, &rhs) <= 1e-13);
    }

    #[test]
    fn mapped_data_always_pass_the_compatibility_check(seed in 0u64..1000, omega in 0.2f64..4.0) {
        let g = grid(8);
        let pd = maxwell_to_elliptic(&g, &general_mms(seed, contrast_medium(), omega).maxwell_data(&g)).unwrap();
        let report = check_compatibility(&g, &pd, 1e-12).unwrap();
        prop_assert!(report.pass, "{:?}", report.residuals);
    }

    #[test]
    fn assembly_is_linear_in_the_data(s1 in 0u64..1000, s2 in 0u64..1000, a in -3.0f64..3.0) {
        let g = grid(8);
        let medium = contrast_medium();
        let d1 = general_mms(s1, medium.clone(), 1.5).problem_data(&g);
        let d2 = quadratic_mms(s2, medium.clone(), 1.5).problem_data(&g);
        let a = cx(a, -0.5);
        let one = cx(1.0, 0.0);
        let s1 = assemble(&g, &medium, &d1, WeightPolicy::default()).unwrap();
        let s2 = assemble(&g, &medium, &d2, WeightPolicy::default()).unwrap();
        let s12 = assemble(&g, &medium, &d1.combine(a, &d2, one), WeightPolicy::default()).unwrap();
        prop_assert!(s1.matrix == s2.matrix && s1.matrix == s12.matrix);
        prop_assert_eq!(&s1.tags, &s12.tags);
        let expected: Vec<Complex64> = s1.rhs.iter().zip(&s2.rhs).map(|(u, v)| u * a + v).collect();
        prop_assert!(relative_difference(&s12.rhs, &expected) <= 1e-14);
    }
}

#[test]
fn quadratic_cases_are_reproduced_exactly_by_the_data_map() {
    for n in [8, 16] {
        let g = grid(n);
        for seed in 0..4 {
            let case = quadratic_mms(seed, contrast_medium(), 1.5);
            let mapped = maxwell_to_elliptic(&g, &case.maxwell_data(&g)).unwrap();
            let closed = case.problem_data(&g);
            assert!(data_difference(&g, &mapped, &closed) <= 1e-12, "n = {n}, seed = {seed}");
            assert!(check_compatibility(&g, &closed, 1e-12).unwrap().pass);
        }
    }
}

#[test]
fn smooth_cases_are_reproduced_to_second_order() {
    for seed in [1, 3] {
        let case = general_mms(seed, contrast_medium(), 1.5);
        let errors: Vec<f64> = [8, 16, 32]
            .iter()
            .map(|&n| {
                let g = grid(n);
                let mapped = maxwell_to_elliptic(&g, &case.maxwell_data(&g)).unwrap();
                data_difference(&g, &mapped, &case.problem_data(&g))
            })
            .collect();
        let orders = observed_orders(&errors);
        assert!(orders.iter().all(|p| *p >= 1.8), "seed {seed}: {errors:?} {orders:?}");
    }
}

#[test]
fn homogeneous_specialization_reproduces_the_outer_relation() {
    let g = grid(8);
    let omega = 2.0;
    let wave = plane_wave(
        cx(1.0, 0.0),
        cx(1.0, 0.0),
        omega,
        Vector3::new(1.0, 1.0, 1.0),
        Vector3::new(cx(1.0, 0.0), cx(-1.0, 0.0), cx(0.0, 0.0)),
    )
    .unwrap();
    let mut md = MaxwellData::zeros(&g, omega);
    md.e_tau_outer = wave.maxwell_data(&g).e_tau_outer;
    let pd = maxwell_to_elliptic(&g, &md).unwrap();
    let iw = cx(0.0, omega);
    let expected = tangential_div(&g, &md.e_tau_outer).map(|d| -d / iw);
    assert!(surface_diff(&g, &pd.b_nu_outer, &expected) <= 1e-14 * surface_norm(&g, &expected));
    assert!(surface_norm(&g, &pd.b_nu_outer) > 0.0);
    for s in [&pd.beta_outer, &pd.d_nu_gamma, &pd.b_nu_gamma, &pd.alpha_gamma, &pd.beta_gamma] {
        assert_eq!(surface_norm(&g, s), 0.0);
    }
    assert_eq!(volume_norm(&g, &pd.k) + volume_norm(&g, &pd.j), 0.0);
}

#[test]
fn exact_quadratic_state_has_zero_residual() {
    let g = grid(8);
    let medium = contrast_medium();
    for seed in 0..3 {
        let case = quadratic_mms(seed, medium.clone(), 1.5);
        let data = case.problem_data(&g);
        let system = assemble(&g, &medium, &data, WeightPolicy::default()).unwrap();
        let report = residual(&system, &case.exact_state(&g)).unwrap();
        let scale = system.rhs.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for family in RowFamily::ALL {
            assert!(report.group(family).max <= 1e-12 * scale, "{}", family.name());
        }
    }
}

#[test]
fn exact_plane_wave_residual_is_second_order() {
    let case = plane_wave(
        cx(1.0, 0.0),
        cx(1.0, 0.0),
        2.0,
        Vector3::new(1.0, 1.0, 1.0),
        Vector3::new(cx(1.0, 0.0), cx(-1.0, 0.0), cx(0.0, 0.0)),
    )
    .unwrap();
    let totals: Vec<f64> = [8, 16, 32]
        .iter()
        .map(|&n| {
            let g = grid(n);
            let system = assemble(&g, &case.medium, &case.problem_data(&g), WeightPolicy::default()).unwrap();
            residual(&system, &case.exact_state(&g)).unwrap().total
        })
        .collect();
    let orders = observed_orders(&totals);
    assert!(orders.iter().all(|p| *p >= 1.8), "{totals:?} {orders:?}");
}

#[test]
fn exact_quadratic_state_solves_the_discrete_maxwell_equations() {
    let g = grid(8);
    let case = quadratic_mms(7, contrast_medium(), 1.5);
    let report = verify_equivalence(&g, &case.medium, &case.maxwell_data(&g), &case.exact_state(&g)).unwrap();
    let scale = max_vector(&case.maxwell_data(&g).k_src).max(1.0);
    assert!(report.maxwell_e_max <= 1e-12 * scale);
    assert!(report.maxwell_h_max <= 1e-12 * scale);
    assert_eq!(report.alpha_variation, 0.0);
    assert_eq!(report.beta_norm, 0.0);
}

#[test]
fn div_of_discrete_curl_decays_at_second_order() {
    let case = general_mms(2, MediumField::vacuum(), 1.0);
    let errors: Vec<f64> = [8, 16, 32]
        .iter()
        .map(|&n| {
            let g = grid(n);
            let curl = curl_fd(&g, &case.exact_state(&g).e).unwrap();
            volume_norm(&g, &div_fd(&g, &curl).unwrap())
        })
        .collect();
    let orders = observed_orders(&errors);
    assert!(orders.iter().all(|p| *p >= 1.8), "{errors:?} {orders:?}");
}

#[test]
fn solver_history_is_monotone_and_solution_is_linear() {
    let g = build_grid(&tiny_domain()).unwrap();
    let medium = contrast_medium();
    let config = SolverConfig {
        tol: 1e-12,
        ..SolverConfig::default()
    };
    let d1 = maxwell_to_elliptic(&g, &general_mms(1, medium.clone(), 1.5).maxwell_data(&g)).unwrap();
    let d2 = maxwell_to_elliptic(&g, &general_mms(2, medium.clone(), 1.5).maxwell_data(&g)).unwrap();
    let a = cx(0.5, -2.0);
    let d12 = d1.combine(cx(1.0, 0.0), &d2, a);
    let solve_for = |d: &ProblemData| {
        let system = assemble(&g, &medium, d, WeightPolicy::default()).unwrap();
        let (state, report) = solve(&system, &config).unwrap();
        assert!(report.converged(), "{:?}", report.status);
        for w in report.history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "residual increased: {} -> {}", w[0], w[1]);
        }
        state.to_vector()
    };
    let (x1, x2, x12) = (solve_for(&d1), solve_for(&d2), solve_for(&d12));
    let expected: Vec<Complex64> = x1.iter().zip(&x2).map(|(u, v)| u + v * a).collect();
    let diff = relative_difference(&x12, &expected);
    assert!(diff <= 1e-8, "relative difference {diff:e}");
}

#[test]
fn zero_case_is_zero_everywhere() {
    let g = grid(8);
    let case = ManufacturedCase::zero(contrast_medium(), 1.0);
    let pd = maxwell_to_elliptic(&g, &case.maxwell_data(&g)).unwrap();
    assert!(pd.is_zero());
    assert!(case.problem_data(&g).is_zero());
}
