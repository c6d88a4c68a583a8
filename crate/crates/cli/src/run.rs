//! The three batch commands and their reports.

use std::path::{Path, PathBuf};

use maxwell_elliptic::assembly::{assemble, WeightPolicy};
use maxwell_elliptic::data_map::{check_compatibility, maxwell_to_elliptic, CompatibilityReport};
use maxwell_elliptic::geometry::build_grid;
use maxwell_elliptic::solver::{relative_field_error, solve, verify_equivalence, SolveReport, SolverConfig};
use maxwell_elliptic::symbol_check::{media_sweep, TRIVIAL_KERNEL};
use serde::Serialize;

use crate::config::RunConfig;
use crate::{exit, vtk, CliError};

/// Result of a command that ran to completion.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: u8,
    pub summary: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdicts {
    /// Compatibility relations hold at `solver.compat_tol`.
    pub compatible: bool,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridRun {
    pub n_cells: usize,
    pub h: f64,
    pub unknowns: usize,
    pub rows: usize,
    pub compatibility: CompatibilityReport,
    pub solve: SolveReport,
    /// Relative `(E, H)` error against the manufactured solution.
    pub field_error: f64,
    pub verdicts: Verdicts,
    pub vtk: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n_cells: usize,
    pub h: f64,
    pub field_error: f64,
    pub field_order: Option<f64>,
    pub alpha_variation: f64,
    pub alpha_order: Option<f64>,
    pub beta_norm: f64,
    pub beta_order: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveRunReport {
    pub command: String,
    pub config: RunConfig,
    pub case: String,
    pub runs: Vec<GridRun>,
    pub convergence: Vec<ConvergenceRow>,
    /// Every grid compatible and converged.
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SymbolRunReport {
    pub command: String,
    pub config: RunConfig,
    pub tests: usize,
    pub global_min_singular_value: f64,
    pub trivial_kernel_threshold: f64,
    pub structural_failures: usize,
    pub elliptic: bool,
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize to JSON");
    s.push('\n');
    s
}

fn order(coarse: f64, fine: f64, h_coarse: f64, h_fine: f64) -> f64 {
    (coarse / fine).ln() / (h_coarse / h_fine).ln()
}

/// Error-vs-h table with observed orders between successive grids.
pub fn convergence_rows(runs: &[GridRun]) -> Vec<ConvergenceRow> {
    let measures = |r: &GridRun| {
        let eq = r.solve.equivalence.as_ref();
        (
            r.field_error,
            eq.map_or(f64::NAN, |e| e.alpha_variation),
            eq.map_or(f64::NAN, |e| e.beta_norm),
        )
    };
    runs.iter()
        .enumerate()
        .map(|(i, r)| {
            let (e, a, b) = measures(r);
            let prev = i.checked_sub(1).map(|p| (&runs[p], measures(&runs[p])));
            let ord = |select: fn((f64, f64, f64)) -> f64| {
                prev.map(|(p, m)| order(select(m), select((e, a, b)), p.h, r.h))
            };
            ConvergenceRow {
                n_cells: r.n_cells,
                h: r.h,
                field_error: e,
                field_order: ord(|m| m.0),
                alpha_variation: a,
                alpha_order: ord(|m| m.1),
                beta_norm: b,
                beta_order: ord(|m| m.2),
            }
        })
        .collect()
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let opt = |o: Option<f64>| o.map_or(String::new(), |v| format!("{v:.6}"));
    let mut out =
        String::from("n_cells,h,field_error,field_order,alpha_variation,alpha_order,beta_norm,beta_order\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.12e},{:.12e},{},{:.12e},{},{:.12e},{}\n",
            r.n_cells,
            r.h,
            r.field_error,
            opt(r.field_order),
            r.alpha_variation,
            opt(r.alpha_order),
            r.beta_norm,
            opt(r.beta_order)
        ));
    }
    out
}

/// Solve the configured case on every grid of the refinement list.
///
/// Writes the JSON report, VTK fields (when `write_vtk`), and the
/// convergence CSV when more than one grid is solved. Returns the solver
/// failure code if any grid did not converge; the report is written first.
pub fn run_solve(config: &RunConfig, command: &str, write_vtk: bool) -> Result<Outcome, CliError> {
    let case = config.manufactured_case()?;
    let medium = &case.medium;
    let out = &config.output;
    let solver = SolverConfig {
        tol: config.solver.tol,
        max_iter: config.solver.max_iter,
        stagnation_window: config.solver.stagnation_window,
    };
    let weights = WeightPolicy {
        surface_scale: config.solver.surface_scale,
    };
    let mut runs = Vec::new();
    for n in config.geometry.cell_counts() {
        let grid = build_grid(&config.geometry.domain(n))?;
        let md = case.maxwell_data(&grid);
        let mut pd = maxwell_to_elliptic(&grid, &md)?;
        let inject = config.case.inject_beta_outer.value();
        pd.beta_outer = pd.beta_outer.map(|b| b + inject);
        let compatibility = check_compatibility(&grid, &pd, config.solver.compat_tol)?;
        let system = assemble(&grid, medium, &pd, weights)?;
        let (state, mut report) = solve(&system, &solver)?;
        report.equivalence = Some(verify_equivalence(&grid, medium, &md, &state)?);
        let field_error = relative_field_error(&grid, &state, &case.exact_state(&grid));
        let vtk_path = if write_vtk {
            let path = out.dir.join(format!("fields_n{n}.vtk"));
            write(&path, &vtk::render(&grid, &state, &format!("{} n_cells={n}", case.name)))?;
            Some(path)
        } else {
            None
        };
        runs.push(GridRun {
            n_cells: n,
            h: grid.h_min(),
            unknowns: system.n_cols(),
            rows: system.n_rows(),
            verdicts: Verdicts {
                compatible: compatibility.pass,
                converged: report.converged(),
            },
            compatibility,
            solve: report,
            field_error,
            vtk: vtk_path,
        });
    }
    let convergence = if runs.len() > 1 {
        let rows = convergence_rows(&runs);
        write(&out.dir.join(&out.convergence_csv), &convergence_csv(&rows))?;
        rows
    } else {
        Vec::new()
    };
    let converged = runs.iter().all(|r| r.verdicts.converged);
    let pass = converged && runs.iter().all(|r| r.verdicts.compatible);
    let report = SolveRunReport {
        command: command.into(),
        config: config.clone(),
        case: case.name.clone(),
        runs,
        convergence,
        pass,
    };
    write(&out.dir.join(&out.report), &to_json(&report))?;

    let mut summary = String::new();
    for r in &report.runs {
        summary.push_str(&format!(
            "n_cells={} status={:?} iterations={} field_error={:.3e} compatible={}\n",
            r.n_cells, r.solve.status, r.solve.iterations, r.field_error, r.verdicts.compatible
        ));
    }
    summary.push_str(&format!("verdict: {}", if report.pass { "PASS" } else { "FAIL" }));
    Ok(Outcome {
        code: if converged { exit::SUCCESS } else { exit::SOLVER },
        summary,
    })
}

/// Lopatinsky sweep over random media; writes the sweep CSV and report.
pub fn run_symbol_check(config: &RunConfig) -> Result<Outcome, CliError> {
    let sweep = media_sweep(&config.symbol.sweep())?;
    let out = &config.output;
    write(&out.dir.join(&out.sweep_csv), &sweep.to_csv())?;
    let report = SymbolRunReport {
        command: "symbol-check".into(),
        config: config.clone(),
        tests: sweep.rows.len(),
        global_min_singular_value: sweep.global_min,
        trivial_kernel_threshold: TRIVIAL_KERNEL,
        structural_failures: sweep.structural_failures,
        elliptic: sweep.elliptic,
    };
    write(&out.dir.join(&out.report), &to_json(&report))?;
    Ok(Outcome {
        code: if sweep.elliptic { exit::SUCCESS } else { exit::NOT_ELLIPTIC },
        summary: format!(
            "{} tests, min singular value {:.6e}, structural failures {}, verdict: {}",
            report.tests,
            report.global_min_singular_value,
            report.structural_failures,
            if report.elliptic { "elliptic" } else { "NOT elliptic" }
        ),
    })
}
