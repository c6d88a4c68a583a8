//! Run configuration: a TOML file with sections, embedded defaults and
//! `--set section.key=value` overrides.

use std::path::{Path, PathBuf};

use maxwell_elliptic::geometry::{build_grid, Aabb, DomainSpec};
use maxwell_elliptic::media::{CoefficientExpr, MediumField};
use maxwell_elliptic::oracles::{general_mms, layered_wave, plane_wave, ManufacturedCase};
use maxwell_elliptic::symbol_check::{SurfaceSelection, SweepConfig};
use maxwell_elliptic::C3;
use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A real number, or a complex number written as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Real(f64),
    Complex([f64; 2]),
}

impl Number {
    pub fn value(self) -> Complex64 {
        match self {
            Number::Real(re) => Complex64::new(re, 0.0),
            Number::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

impl From<f64> for Number {
    fn from(v: f64) -> Self {
        Number::Real(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub omega: f64,
    pub geometry: GeometryConfig,
    pub medium: MediumConfig,
    pub case: CaseConfig,
    pub solver: SolverSection,
    pub symbol: SymbolSection,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            omega: 1.5,
            geometry: GeometryConfig::default(),
            medium: MediumConfig::default(),
            case: CaseConfig::default(),
            solver: SolverSection::default(),
            symbol: SymbolSection::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub outer_lo: [f64; 3],
    pub outer_hi: [f64; 3],
    pub inner_lo: [f64; 3],
    pub inner_hi: [f64; 3],
    /// Cells per axis for a single solve.
    pub n_cells: usize,
    /// Strictly increasing cell counts; replaces `n_cells` when non-empty.
    pub refinement: Vec<usize>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            outer_lo: [0.0; 3],
            outer_hi: [1.0; 3],
            inner_lo: [0.25; 3],
            inner_hi: [0.75; 3],
            n_cells: 16,
            refinement: Vec::new(),
        }
    }
}

impl GeometryConfig {
    pub fn cell_counts(&self) -> Vec<usize> {
        if self.refinement.is_empty() {
            vec![self.n_cells]
        } else {
            self.refinement.clone()
        }
    }

    pub fn domain(&self, n_cells: usize) -> DomainSpec {
        DomainSpec::new(
            Aabb::new(self.outer_lo, self.outer_hi),
            Aabb::new(self.inner_lo, self.inner_hi),
            n_cells,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediumPreset {
    /// Constant complex scalars per side.
    Constant,
    /// Constant real SPD matrices per side.
    Matrix,
    /// `value + amplitude·sin(wave·x)` per side.
    Smooth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MediumConfig {
    pub preset: MediumPreset,
    pub eps_plus: Number,
    pub eps_minus: Number,
    pub mu_plus: Number,
    pub mu_minus: Number,
    /// Matrices for the `matrix` preset; a missing one is the scalar value times `I`.
    pub eps_plus_matrix: Option<[[f64; 3]; 3]>,
    pub eps_minus_matrix: Option<[[f64; 3]; 3]>,
    pub mu_plus_matrix: Option<[[f64; 3]; 3]>,
    pub mu_minus_matrix: Option<[[f64; 3]; 3]>,
    pub amplitude: f64,
    pub wave: [f64; 3],
}

impl Default for MediumConfig {
    fn default() -> Self {
        Self {
            preset: MediumPreset::Constant,
            eps_plus: 1.0.into(),
            eps_minus: 1.0.into(),
            mu_plus: 1.0.into(),
            mu_minus: 1.0.into(),
            eps_plus_matrix: None,
            eps_minus_matrix: None,
            mu_plus_matrix: None,
            mu_minus_matrix: None,
            amplitude: 0.1,
            wave: [std::f64::consts::TAU, 0.0, 0.0],
        }
    }
}

impl MediumConfig {
    fn coefficient(&self, value: Number, matrix: Option<[[f64; 3]; 3]>, key: &str) -> Result<CoefficientExpr, CliError> {
        match self.preset {
            MediumPreset::Constant => Ok(CoefficientExpr::constant(value.value())),
            MediumPreset::Smooth => Ok(CoefficientExpr::perturbed(value.value(), self.amplitude, self.wave)),
            MediumPreset::Matrix => {
                let m = match matrix {
                    Some(rows) => Matrix3::from_fn(|r, c| rows[r][c]),
                    None => {
                        let v = value.value();
                        if v.im != 0.0 {
                            return Err(CliError::config(
                                "medium",
                                key,
                                "the matrix preset needs real values".to_string(),
                            ));
                        }
                        Matrix3::identity() * v.re
                    }
                };
                Ok(CoefficientExpr::constant_matrix(m))
            }
        }
    }

    pub fn field(&self) -> Result<MediumField, CliError> {
        Ok(MediumField::new(
            self.coefficient(self.eps_plus, self.eps_plus_matrix, "eps_plus")?,
            self.coefficient(self.eps_minus, self.eps_minus_matrix, "eps_minus")?,
            self.coefficient(self.mu_plus, self.mu_plus_matrix, "mu_plus")?,
            self.coefficient(self.mu_minus, self.mu_minus_matrix, "mu_minus")?,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseKind {
    /// Plane wave in the uniform medium given by the `Ω₊` values.
    PlaneWave,
    /// Normal-incidence wave through the top face of the inclusion.
    Layered,
    /// Seeded manufactured solution with interface jumps.
    Mms,
    /// All fields zero.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaseConfig {
    pub name: CaseKind,
    pub seed: u64,
    pub direction: [f64; 3],
    pub polarization: [Number; 3],
    /// Constant added to the outer datum `β⁰`; nonzero values make the data
    /// incompatible.
    pub inject_beta_outer: Number,
}

impl Default for CaseConfig {
    fn default() -> Self {
        Self {
            name: CaseKind::PlaneWave,
            seed: 3,
            direction: [1.0, 1.0, 1.0],
            polarization: [1.0.into(), (-1.0).into(), 0.0.into()],
            inject_beta_outer: 0.0.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub tol: f64,
    pub max_iter: usize,
    pub stagnation_window: usize,
    /// Surface rows are weighted by `surface_scale/√h`.
    pub surface_scale: f64,
    pub compat_tol: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = maxwell_elliptic::solver::SolverConfig::default();
        Self {
            tol: s.tol,
            max_iter: s.max_iter,
            stagnation_window: s.stagnation_window,
            surface_scale: 1.0,
            compat_tol: maxwell_elliptic::data_map::DEFAULT_COMPAT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymbolSection {
    pub samples: usize,
    pub seed: u64,
    pub directions: usize,
    pub surfaces: SurfaceSelection,
    pub isotropic: bool,
}

impl Default for SymbolSection {
    fn default() -> Self {
        let s = SweepConfig::default();
        Self {
            samples: s.samples,
            seed: s.seed,
            directions: s.directions,
            surfaces: s.surfaces,
            isotropic: s.isotropic,
        }
    }
}

impl SymbolSection {
    pub fn sweep(&self) -> SweepConfig {
        SweepConfig {
            samples: self.samples,
            seed: self.seed,
            directions: self.directions,
            surfaces: self.surfaces,
            isotropic: self.isotropic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub vtk: bool,
    pub report: String,
    pub convergence_csv: String,
    pub sweep_csv: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("output"),
            vtk: true,
            report: "report.json".into(),
            convergence_csv: "convergence.csv".into(),
            sweep_csv: "sweep.csv".into(),
        }
    }
}

/// 1-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

/// Line of `key = …` inside `[section]` (or at top level for an empty section).
fn find_key_line(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

/// Parse `value` as a TOML value, falling back to a bare string.
fn parse_override_value(value: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()))
}

fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (path, value) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got `{assignment}`")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Usage(format!("invalid key `{path}` in --set")));
    }
    let mut node = table;
    for k in &keys[..keys.len() - 1] {
        let entry = node
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Usage(format!("`{k}` in --set {path} is not a section")))?;
    }
    node.insert(keys[keys.len() - 1].to_string(), parse_override_value(value.trim()));
    Ok(())
}

impl RunConfig {
    /// Load `path` (or the defaults), apply `--set` overrides and validate.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let (text, origin) = match path {
            Some(p) => (
                std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?,
                p.display().to_string(),
            ),
            None => (String::new(), "<defaults>".to_string()),
        };
        Self::from_text(&text, &origin, overrides)
    }

    pub fn from_text(text: &str, origin: &str, overrides: &[String]) -> Result<Self, CliError> {
        let located = |e: toml::de::Error| {
            let line = e.span().map(|s| line_col(text, s.start));
            CliError::Config {
                origin: origin.to_string(),
                line: line.map(|l| l.0),
                column: line.map(|l| l.1),
                message: e.message().trim().to_string(),
            }
        };
        let mut config: RunConfig = toml::from_str(text).map_err(located)?;
        if !overrides.is_empty() {
            let mut table: toml::Table = toml::from_str(text).map_err(located)?;
            for o in overrides {
                apply_override(&mut table, o)?;
            }
            config = RunConfig::deserialize(toml::Value::Table(table)).map_err(|e| CliError::Config {
                origin: "--set".into(),
                line: None,
                column: None,
                message: e.message().trim().to_string(),
            })?;
        }
        config.validate().map_err(|e| match e {
            CliError::Config {
                origin: _,
                line: None,
                column,
                message,
            } => {
                let (section, key) = match &message.split_once(':') {
                    Some((k, _)) => k.split_once('.').unwrap_or(("", k)),
                    None => ("", ""),
                };
                CliError::Config {
                    origin: origin.to_string(),
                    line: find_key_line(text, section, key),
                    column,
                    message,
                }
            }
            other => other,
        })?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(CliError::config("", "omega", format!("must be positive, got {}", self.omega)));
        }
        let g = &self.geometry;
        if !g.refinement.windows(2).all(|w| w[0] < w[1]) {
            return Err(CliError::config(
                "geometry",
                "refinement",
                format!("must be strictly increasing, got {:?}", g.refinement),
            ));
        }
        for n in g.cell_counts() {
            let key = if g.refinement.is_empty() { "n_cells" } else { "refinement" };
            build_grid(&g.domain(n)).map_err(|e| CliError::config("geometry", key, format!("{n} cells: {e}")))?;
        }
        let s = &self.solver;
        if !(s.tol > 0.0 && s.tol < 1.0) {
            return Err(CliError::config("solver", "tol", format!("must lie in (0, 1), got {}", s.tol)));
        }
        if s.max_iter == 0 {
            return Err(CliError::config("solver", "max_iter", "must be positive".into()));
        }
        if s.stagnation_window == 0 {
            return Err(CliError::config("solver", "stagnation_window", "must be positive".into()));
        }
        if !(s.surface_scale > 0.0 && s.surface_scale.is_finite()) {
            return Err(CliError::config("solver", "surface_scale", "must be positive".into()));
        }
        if !(s.compat_tol > 0.0) {
            return Err(CliError::config("solver", "compat_tol", "must be positive".into()));
        }
        if self.symbol.samples == 0 {
            return Err(CliError::config("symbol", "samples", "must be at least 1".into()));
        }
        if self.symbol.directions == 0 {
            return Err(CliError::config("symbol", "directions", "must be at least 1".into()));
        }
        self.medium.field()?;
        if matches!(self.case.name, CaseKind::PlaneWave | CaseKind::Layered) && self.medium.preset != MediumPreset::Constant {
            return Err(CliError::config(
                "medium",
                "preset",
                format!("case {:?} needs the constant preset", self.case.name),
            ));
        }
        if self.case.name == CaseKind::PlaneWave
            && (self.medium.eps_plus != self.medium.eps_minus || self.medium.mu_plus != self.medium.mu_minus)
        {
            return Err(CliError::config(
                "medium",
                "eps_minus",
                "plane_wave needs the same medium on both sides".into(),
            ));
        }
        Ok(())
    }

    /// The manufactured case and the medium it lives in.
    pub fn manufactured_case(&self) -> Result<ManufacturedCase, CliError> {
        let m = &self.medium;
        let case_error = |e: maxwell_elliptic::Error| CliError::config("case", "name", e.to_string());
        match self.case.name {
            CaseKind::PlaneWave => {
                let p = self.case.polarization.map(Number::value);
                plane_wave(
                    m.eps_plus.value(),
                    m.mu_plus.value(),
                    self.omega,
                    Vector3::from(self.case.direction),
                    C3::new(p[0], p[1], p[2]),
                )
                .map_err(case_error)
            }
            CaseKind::Layered => {
                if m.mu_plus != m.mu_minus {
                    return Err(CliError::config(
                        "medium",
                        "mu_minus",
                        "layered needs the same μ on both sides".into(),
                    ));
                }
                layered_wave(
                    m.eps_plus.value(),
                    m.eps_minus.value(),
                    m.mu_plus.value(),
                    self.omega,
                    Vector3::new(0.0, 0.0, -1.0),
                    self.geometry.inner_hi[2],
                )
                .map(|w| w.case)
                .map_err(case_error)
            }
            CaseKind::Mms => Ok(general_mms(self.case.seed, m.field()?, self.omega)),
            CaseKind::Zero => Ok(ManufacturedCase::zero(m.field()?, self.omega)),
        }
    }
}
