//! End-to-end acceptance criteria. The criteria run one after another (so
//! the timed ones do not compete for cores), each prints one verdict line,
//! and the process fails if any criterion is not met.

mod common;

use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use common::{dense_least_squares, observed_orders, relative_difference, tiny_domain, without_alpha_mean};
use maxwell_elliptic::assembly::{assemble, ProblemData, WeightPolicy};
use maxwell_elliptic::data_map::{check_compatibility, maxwell_to_elliptic, MaxwellData, Relation};
use maxwell_elliptic::discrete_ops::{
    curl_fd, normal_component, surface_norm, tangential, tangential_div, trace, volume_norm, ScalarField,
    SurfaceScalar, TraceSide, VectorField,
};
use maxwell_elliptic::field::{ScalarExpr, VectorExpr};
use maxwell_elliptic::geometry::{build_grid, DomainSpec, Grid, Surface};
use maxwell_elliptic::media::{CoefficientExpr, MediumField};
use maxwell_elliptic::oracles::{general_mms, layered_wave, plane_wave, unit, ManufacturedCase, PerSide};
use maxwell_elliptic::solver::{relative_field_error, solve, verify_equivalence, SolverConfig};
use maxwell_elliptic::symbol_check::{
    lopatinsky_test, media_sweep, principal_symbol_det, Block, SurfaceSelection, SweepConfig, SymbolProblem,
};
use maxwell_elliptic::{Point, C3};
use nalgebra::Vector3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

static FAILED: AtomicBool = AtomicBool::new(false);

fn report(id: u32, name: &str, pass: bool, detail: String) {
    println!("criterion {id} ({name}): {} | {detail}", if pass { "PASS" } else { "FAIL" });
    if !pass {
        FAILED.store(true, Ordering::SeqCst);
    }
}

fn cx(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

const REFINEMENT: [usize; 3] = [8, 16, 32];

fn criterion_1_symbol_determinant() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let dir = loop {
            let v = Vector3::from_fn(|_, _| rng.random_range(-1.0..=1.0));
            if v.norm() > 1e-3 {
                break v.normalize();
            }
        };
        let mag = 10f64.powf(rng.random_range(-3.0..=3.0));
        let sigma = dir * mag;
        let expected = sigma.norm_squared().powi(2);
        worst = worst.max((principal_symbol_det(&sigma).norm() - expected).abs() / expected);
    }
    let elapsed = start.elapsed();
    report(
        1,
        "symbol determinant",
        worst <= 1e-12 && elapsed < Duration::from_secs(1),
        format!("max relative deviation {worst:.2e}, runtime {elapsed:.2?}"),
    );
}

fn criterion_2_lopatinsky_sweep() {
    let start = Instant::now();
    let sweep = media_sweep(&SweepConfig {
        samples: 100,
        seed: 2,
        directions: 64,
        surfaces: SurfaceSelection::Both,
        isotropic: false,
    })
    .unwrap();
    let mut identity_err: f64 = 0.0;
    let mut projection: f64 = 0.0;
    for (k, eps) in [1.0, 2.5, 7.0].into_iter().enumerate() {
        for d in 0..16 {
            let angle = 2.0 * std::f64::consts::PI * d as f64 / 16.0;
            let s = [0.5, 1.0, 3.0][k];
            let mut p = SymbolProblem::isotropic([s * angle.cos(), s * angle.sin()], Surface::Interface);
            p.eps_plus = maxwell_elliptic::media::MaterialTensor::scalar(eps);
            p.eps_minus = p.eps_plus;
            let rep = lopatinsky_test(&p, Block::Electric).unwrap();
            let par = rep.parametrization.unwrap();
            identity_err = identity_err.max((par.flux_jump_re - 2.0 * s * eps).abs());
            projection = projection.max(par.projection_residual);
        }
    }
    let elapsed = start.elapsed();
    let pass = sweep.elliptic
        && sweep.structural_failures == 0
        && sweep.global_min > 1e-6
        && identity_err <= 1e-12
        && projection <= 1e-10
        && elapsed < Duration::from_secs(30);
    report(
        2,
        "Lopatinsky sweep",
        pass,
        format!(
            "{} tests, structural failures {}, min singular value {:.3e}, identity error {identity_err:.1e}, \
             ansatz residual {projection:.1e}, runtime {elapsed:.2?}",
            sweep.rows.len(),
            sweep.structural_failures,
            sweep.global_min
        ),
    );
}

/// Closed-form test fields for the surface identity.
fn l00_fields() -> Vec<PerSide<VectorExpr>> {
    let s = |w: [f64; 3], ph: f64| ScalarExpr::sin(w, ph);
    let c = |w: [f64; 3], ph: f64| ScalarExpr::cos(w, ph);
    let z = ScalarExpr::zero;
    let e = |w: [f64; 3]| ScalarExpr::exp_i(cx(1.0), w.map(cx));
    vec![
        PerSide::both(VectorExpr::new(s([0.0, 1.0, 0.0], 0.0), z(), z())),
        PerSide::both(VectorExpr::new(c([1.0, 0.0, 2.0], 0.3), s([0.0, 2.0, -1.0], 0.0), e([1.0, 1.0, 0.0]))),
        PerSide::new(
            VectorExpr::new(e([0.0, 2.0, 1.0]), c([2.0, 0.0, 0.0], 0.0), s([1.0, 1.0, 1.0], 0.2)),
            VectorExpr::new(s([3.0, 0.0, 0.0], 0.1), e([1.0, -2.0, 0.0]), c([0.0, 1.0, 2.0], 0.0)),
        ),
        PerSide::both(VectorExpr::new(
            s([1.0, 0.0, 0.0], 0.0) * c([0.0, 1.0, 0.0], 0.0),
            ScalarExpr::monomial(1.0, [1, 2, 1]),
            s([0.0, 0.0, 2.0], 0.0),
        )),
        PerSide::new(
            VectorExpr::new(c([2.0, 2.0, 0.0], 0.0), z(), e([0.0, 0.0, 3.0])),
            VectorExpr::new(z(), ScalarExpr::monomial(2.0, [3, 0, 1]), s([1.0, 2.0, 3.0], 0.0)),
        ),
    ]
}

struct SurfaceIdentity {
    /// `max |n·curl_fd F + div_τ F_τ|` over face-interior nodes.
    defect: f64,
    /// `max |n·curl_fd F − n·curl F|` over the same nodes.
    curl_error: f64,
    /// `max |div_τ F_τ + n·curl F|` over the same nodes.
    div_error: f64,
    scale: f64,
}

fn surface_identity(grid: &Grid, f: &PerSide<VectorExpr>) -> SurfaceIdentity {
    let field = VectorField::sample(grid, &f.plus, &f.minus);
    let curl = curl_fd(grid, &field).unwrap();
    let exact_curl = VectorField::sample(grid, &f.plus.curl(), &f.minus.curl());
    let mut out = SurfaceIdentity {
        defect: 0.0,
        curl_error: 0.0,
        div_error: 0.0,
        scale: 0.0,
    };
    for (kind, side) in [
        (Surface::Interface, TraceSide::Plus),
        (Surface::Interface, TraceSide::Minus),
        (Surface::Outer, TraceSide::Outer),
    ] {
        let n_curl = normal_component(grid, &trace(grid, &curl, kind, side).unwrap());
        let n_curl_exact = normal_component(grid, &trace(grid, &exact_curl, kind, side).unwrap());
        let div_tau = tangential_div(grid, &tangential(grid, &trace(grid, &field, kind, side).unwrap()));
        let layout = grid.surface(kind);
        for (p, patch) in layout.patches.iter().enumerate() {
            for l in (0..patch.len()).filter(|&l| patch.is_face_interior(l)) {
                let (a, b, e) = (n_curl.patches[p][l], div_tau.patches[p][l], n_curl_exact.patches[p][l]);
                out.defect = out.defect.max((a + b).norm());
                out.curl_error = out.curl_error.max((a - e).norm());
                out.div_error = out.div_error.max((b + e).norm());
                out.scale = out.scale.max(e.norm());
            }
        }
    }
    out
}

fn criterion_3_discrete_surface_identity() {
    let mut pass = true;
    let mut details = Vec::new();
    for (i, f) in l00_fields().iter().enumerate() {
        let runs: Vec<SurfaceIdentity> = REFINEMENT
            .iter()
            .map(|&n| surface_identity(&build_grid(&DomainSpec::unit(n)).unwrap(), f))
            .collect();
        let defects: Vec<f64> = runs.iter().map(|r| r.defect).collect();
        let scale = runs.iter().map(|r| r.scale).fold(1.0, f64::max);
        // The identity is either exact to round-off or must converge at order ≥ 1.8.
        let defect_ok = defects.iter().all(|d| *d <= 1e-11 * scale)
            || observed_orders(&defects).iter().all(|o| *o >= 1.8);
        let curl_orders = observed_orders(&runs.iter().map(|r| r.curl_error).collect::<Vec<_>>());
        let div_orders = observed_orders(&runs.iter().map(|r| r.div_error).collect::<Vec<_>>());
        let order_ok = curl_orders.iter().chain(&div_orders).all(|o| *o >= 1.8);
        pass &= defect_ok && order_ok;
        details.push(format!(
            "F{}: defect max {:.1e}, n·curl orders {:.2?}, div_τ orders {:.2?}",
            i + 1,
            defects.iter().fold(0.0f64, |a, b| a.max(*b)),
            curl_orders,
            div_orders
        ));
    }
    report(3, "discrete surface identity", pass, details.join("; "));
}

fn perturb_surface(f: &SurfaceScalar, delta: f64) -> SurfaceScalar {
    f.map(|v| v + delta)
}

fn perturb_volume(f: &ScalarField, delta: f64) -> ScalarField {
    ScalarField {
        values: f.values.iter().map(|v| v + delta).collect(),
    }
}

fn criterion_4_compatibility_round_trip() {
    let grid = build_grid(&DomainSpec::unit(8)).unwrap();
    let medium = MediumField::new(
        CoefficientExpr::constant(1.0),
        CoefficientExpr::constant(Complex64::new(3.0, 0.5)),
        CoefficientExpr::constant(1.0),
        CoefficientExpr::constant(2.0),
    );
    let delta = 1e-3;
    let mut worst_round_trip: f64 = 0.0;
    let mut worst_injected: f64 = 0.0;
    let mut all_flagged = true;
    for seed in 0..20 {
        let case = general_mms(seed, medium.clone(), 1.25);
        let pd = maxwell_to_elliptic(&grid, &case.maxwell_data(&grid)).unwrap();
        let base = check_compatibility(&grid, &pd, 1e-12).unwrap();
        all_flagged &= base.pass;
        worst_round_trip = Relation::ALL.iter().map(|r| base.relative(*r)).fold(worst_round_trip, f64::max);
        let mut injected: Vec<(Relation, ProblemData, f64)> = Vec::new();
        let gamma_norm = surface_norm(&grid, &SurfaceScalar::filled(&grid, Surface::Interface, cx(delta)));
        let outer_norm = surface_norm(&grid, &SurfaceScalar::filled(&grid, Surface::Outer, cx(delta)));
        let volume = volume_norm(&grid, &ScalarField::filled(&grid, cx(delta)));
        let mut push = |r, edit: &dyn Fn(&mut ProblemData), norm| {
            let mut p = pd.clone();
            edit(&mut p);
            injected.push((r, p, norm));
        };
        push(Relation::InterfaceB, &|p| p.b_nu_gamma = perturb_surface(&p.b_nu_gamma, delta), gamma_norm);
        push(Relation::InterfaceD, &|p| p.d_nu_gamma = perturb_surface(&p.d_nu_gamma, delta), gamma_norm);
        push(Relation::OuterB, &|p| p.b_nu_outer = perturb_surface(&p.b_nu_outer, delta), outer_norm);
        push(Relation::VolumeK, &|p| p.k = perturb_volume(&p.k, delta), volume);
        push(Relation::VolumeJ, &|p| p.j = perturb_volume(&p.j, delta), volume);
        push(Relation::AlphaGamma, &|p| p.alpha_gamma = perturb_surface(&p.alpha_gamma, delta), gamma_norm);
        push(Relation::BetaGamma, &|p| p.beta_gamma = perturb_surface(&p.beta_gamma, delta), gamma_norm);
        push(Relation::BetaOuter, &|p| p.beta_outer = perturb_surface(&p.beta_outer, delta), outer_norm);
        for (relation, p, norm) in injected {
            let rep = check_compatibility(&grid, &p, 1e-12).unwrap();
            all_flagged &= rep.failing() == vec![relation];
            worst_injected = worst_injected.max((rep.residual(relation) - norm).abs() / norm);
        }
    }
    report(
        4,
        "compatibility round trip",
        all_flagged && worst_round_trip <= 1e-12 && worst_injected <= 1e-12,
        format!(
            "20 cases: max relative round-trip residual {worst_round_trip:.1e}, \
             max relative deviation of injected residuals {worst_injected:.1e}, all flagged: {all_flagged}"
        ),
    );
}

fn criterion_5_dense_oracle() {
    let start = Instant::now();
    let grid = build_grid(&tiny_domain()).unwrap();
    let medium = MediumField::new(
        CoefficientExpr::constant(1.0),
        CoefficientExpr::constant(2.0),
        CoefficientExpr::constant(1.0),
        CoefficientExpr::constant(Complex64::new(1.5, 0.25)),
    );
    let case = general_mms(11, medium, 1.3);
    let pd = maxwell_to_elliptic(&grid, &case.maxwell_data(&grid)).unwrap();
    let system = assemble(&grid, &case.medium, &pd, WeightPolicy::default()).unwrap();
    let (state, rep) = solve(
        &system,
        &SolverConfig {
            tol: 1e-13,
            ..SolverConfig::default()
        },
    )
    .unwrap();
    let dense = dense_least_squares(&grid, &system);
    let diff = relative_difference(&without_alpha_mean(&state), &without_alpha_mean(&dense));
    let elapsed = start.elapsed();
    report(
        5,
        "dense oracle",
        rep.converged() && diff <= 1e-8 && elapsed < Duration::from_secs(10),
        format!(
            "{} unknowns, {} iterations, relative difference {diff:.2e}, runtime {elapsed:.2?}",
            system.n_cols(),
            rep.iterations
        ),
    );
}

struct ForwardRun {
    error: f64,
    alpha_variation: f64,
    beta_norm: f64,
    converged: bool,
}

fn forward(case: &ManufacturedCase, n: usize, edit: impl Fn(&mut ProblemData), tol: f64) -> ForwardRun {
    let grid = build_grid(&DomainSpec::unit(n)).unwrap();
    let md: MaxwellData = case.maxwell_data(&grid);
    let mut pd = maxwell_to_elliptic(&grid, &md).unwrap();
    edit(&mut pd);
    let system = assemble(&grid, &case.medium, &pd, WeightPolicy::default()).unwrap();
    let (state, rep) = solve(&system, &SolverConfig { tol, ..SolverConfig::default() }).unwrap();
    let eq = verify_equivalence(&grid, &case.medium, &md, &state).unwrap();
    ForwardRun {
        error: relative_field_error(&grid, &state, &case.exact_state(&grid)),
        alpha_variation: eq.alpha_variation,
        beta_norm: eq.beta_norm,
        converged: rep.converged(),
    }
}

fn forward_cases() -> Vec<ManufacturedCase> {
    let wave = plane_wave(
        cx(1.0),
        cx(1.0),
        2.0,
        unit([1.0, 1.0, 1.0]),
        C3::new(cx(1.0), cx(-1.0), cx(0.0)),
    )
    .unwrap();
    let medium = MediumField::new(
        CoefficientExpr::constant(1.0),
        CoefficientExpr::constant(2.5),
        CoefficientExpr::constant(1.0),
        CoefficientExpr::constant(1.5),
    );
    vec![wave, general_mms(3, medium, 1.5)]
}

fn criterion_6_forward_equivalence() {
    let start = Instant::now();
    let mut pass = true;
    let mut details = Vec::new();
    for case in forward_cases() {
        let runs: Vec<ForwardRun> = REFINEMENT.iter().map(|&n| forward(&case, n, |_| {}, 1e-10)).collect();
        let series = |f: fn(&ForwardRun) -> f64| observed_orders(&runs.iter().map(f).collect::<Vec<_>>());
        let (oe, oa, ob) = (series(|r| r.error), series(|r| r.alpha_variation), series(|r| r.beta_norm));
        let ok = runs.iter().all(|r| r.converged) && oe.iter().chain(&oa).chain(&ob).all(|o| *o >= 1.5);
        pass &= ok;
        details.push(format!(
            "{}: error {:.2e} (orders {oe:.2?}), α variation {:.2e} (orders {oa:.2?}), β max {:.2e} (orders {ob:.2?})",
            case.name,
            runs[2].error,
            runs[2].alpha_variation,
            runs[2].beta_norm
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(600);
    details.push(format!("runtime {elapsed:.2?}"));
    report(6, "forward equivalence", pass, details.join("; "));
}

fn criterion_7_incompatible_data() {
    let case = forward_cases().remove(0);
    let inject = |p: &mut ProblemData| p.beta_outer = p.beta_outer.map(|_| cx(1.0));
    let grid = build_grid(&DomainSpec::unit(REFINEMENT[0])).unwrap();
    let mut pd = maxwell_to_elliptic(&grid, &case.maxwell_data(&grid)).unwrap();
    inject(&mut pd);
    let compat = check_compatibility(&grid, &pd, 1e-10).unwrap();
    let flagged = !compat.pass && compat.failing().contains(&Relation::BetaOuter);
    let beta: Vec<f64> = REFINEMENT.iter().map(|&n| forward(&case, n, inject, 1e-8).beta_norm).collect();
    let ratios: Vec<f64> = beta.windows(2).map(|w| w[1] / w[0]).collect();
    report(
        7,
        "incompatible data",
        flagged && ratios.iter().all(|r| *r >= 0.5),
        format!("checker flagged β⁰: {flagged}; β max {beta:.3?}; successive ratios {ratios:.3?}"),
    );
}

fn criterion_8_layered_wave() {
    let grid = build_grid(&DomainSpec::unit(16)).unwrap();
    let z0 = grid.spec.inner.hi[2];
    let lw = layered_wave(cx(1.0), cx(4.0), cx(1.0), 3.0, Point::new(0.0, 0.0, -1.0), z0).unwrap();
    // Independent impedance oracle, Z = √(μ/ε).
    let (mu, eps_plus, eps_minus) = (1.0f64, 1.0f64, 4.0f64);
    let (zp, zm) = ((mu / eps_plus).sqrt(), (mu / eps_minus).sqrt());
    let (r, t) = ((zm - zp) / (zm + zp), 2.0 * zm / (zm + zp));
    let coef_err = (lw.reflection - r).norm().max((lw.transmission - t).norm());
    let identity = (cx(1.0) + lw.reflection - lw.transmission).norm();
    let expected = (lw.reflection - cx(-1.0 / 3.0)).norm().max((lw.transmission - cx(2.0 / 3.0)).norm());
    let pd = lw.case.problem_data(&grid);
    let top = grid
        .interface
        .patches
        .iter()
        .position(|p| p.face.axis == 2 && p.face.sign > 0)
        .unwrap();
    let jump_max = pd.e_tau_gamma.patches[top]
        .iter()
        .chain(&pd.h_tau_gamma.patches[top])
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    // Direct evaluation of the traces on both sides of the flat face.
    let mut direct: f64 = 0.0;
    let patch = &grid.interface.patches[top];
    for l in 0..patch.len() {
        let [i, j, k] = patch.ijk(l);
        let x = grid.coords(grid.node(i, j, k));
        for f in [&lw.case.e, &lw.case.h] {
            let d = f.plus.eval(&x) - f.minus.eval(&x);
            direct = direct.max(d[0].norm().max(d[1].norm()));
        }
    }
    let pass = coef_err <= 1e-12 && identity <= 1e-12 && expected <= 1e-12 && jump_max <= 1e-12 && direct <= 1e-12;
    report(
        8,
        "layered wave",
        pass,
        format!(
            "r = {:.6}, t = {:.6}, |1 + r − t| = {identity:.1e}, oracle deviation {coef_err:.1e}, \
             max tangential jump {:.1e}",
            lw.reflection.re,
            lw.transmission.re,
            jump_max.max(direct)
        ),
    );
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn()); 8] = [
        (1, "symbol determinant", criterion_1_symbol_determinant),
        (2, "Lopatinsky sweep", criterion_2_lopatinsky_sweep),
        (3, "discrete surface identity", criterion_3_discrete_surface_identity),
        (4, "compatibility round trip", criterion_4_compatibility_round_trip),
        (5, "dense oracle", criterion_5_dense_oracle),
        (6, "forward equivalence", criterion_6_forward_equivalence),
        (7, "incompatible data", criterion_7_incompatible_data),
        (8, "layered wave", criterion_8_layered_wave),
    ];
    for (id, name, run) in criteria {
        if std::panic::catch_unwind(run).is_err() {
            report(id, name, false, "panicked".into());
        }
    }
    if FAILED.load(Ordering::SeqCst) {
        println!("acceptance: FAIL");
        ExitCode::FAILURE
    } else {
        println!("acceptance: all criteria PASS");
        ExitCode::SUCCESS
    }
}
