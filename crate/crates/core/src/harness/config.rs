//! TOML configuration for single solves, sweeps and metric grids.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::fem::{
    build_axisymmetric_rod, build_bar_1d, build_hex_cube, build_indentation, build_tube, LoadDirection, Problem,
};
use crate::materials::{Material, MrParams, StressMeasure, VwParams};
use crate::metrics::{ScalarFunction, Transform};
use crate::solver::{ErrorSubset, LoadSchedule, SolverConfig};
use crate::transforms::TransformKind;

fn config_err(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("field `{field}`: {msg}"))
}

/// Parses TOML, reporting syntax and type errors with line and column.
pub fn parse<T: for<'de> Deserialize<'de>>(text: &str, origin: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Config(format!("{origin}: {e}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    Bar1d,
    Axisymmetric,
    HexCube,
    Tube,
    Indentation,
}

impl FamilyName {
    pub fn name(self) -> &'static str {
        match self {
            FamilyName::Bar1d => "bar1d",
            FamilyName::Axisymmetric => "axisymmetric",
            FamilyName::HexCube => "hex_cube",
            FamilyName::Tube => "tube",
            FamilyName::Indentation => "indentation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub family: FamilyName,
    /// Element count of the bar and rod families.
    pub elements: Option<usize>,
    /// Elements per edge of the cube and indentation families.
    pub n_per_edge: Option<usize>,
    pub direction: Option<LoadDirection>,
    /// Radial, circumferential and axial element counts of the tube.
    pub tube_mesh: Option<[usize; 3]>,
    pub patch_fraction: Option<f64>,
}

/// Loaded area of 4 cm² on the 10 cm × 10 cm top face.
pub const DEFAULT_PATCH_FRACTION: f64 = 0.04;

impl ProblemSection {
    fn check_unused(&self) -> Result<()> {
        use FamilyName::*;
        let f = self.family;
        let misplaced = [
            ("problem.elements", self.elements.is_some() && !matches!(f, Bar1d | Axisymmetric)),
            ("problem.n_per_edge", self.n_per_edge.is_some() && !matches!(f, HexCube | Indentation)),
            ("problem.direction", self.direction.is_some() && matches!(f, Tube | Indentation)),
            ("problem.tube_mesh", self.tube_mesh.is_some() && f != Tube),
            ("problem.patch_fraction", self.patch_fraction.is_some() && f != Indentation),
        ];
        match misplaced.iter().find(|(_, bad)| *bad) {
            Some((field, _)) => Err(config_err(field, format!("not used by family {f:?}"))),
            None => Ok(()),
        }
    }

    /// Sign applied to the configured load magnitudes.
    pub fn load_sign(&self) -> f64 {
        match self.family {
            FamilyName::Bar1d | FamilyName::Axisymmetric => self.direction.unwrap_or(LoadDirection::Tension).sign(),
            _ => 1.0,
        }
    }

    pub fn build(&self, material: Material) -> Result<Problem> {
        self.check_unused()?;
        let positive = |field: &str, v: Option<usize>, default: usize| match v {
            Some(0) => Err(config_err(field, "must be at least 1")),
            other => Ok(other.unwrap_or(default)),
        };
        let wrong_model = |expected: &str| config_err("material.model", format!("family {:?} needs {expected}", self.family));
        match self.family {
            FamilyName::Bar1d => build_bar_1d(positive("problem.elements", self.elements, 10)?, material),
            FamilyName::Axisymmetric => build_axisymmetric_rod(positive("problem.elements", self.elements, 10)?, material),
            FamilyName::HexCube => build_hex_cube(
                positive("problem.n_per_edge", self.n_per_edge, 10)?,
                material,
                self.direction.unwrap_or(LoadDirection::Tension),
            ),
            FamilyName::Tube => {
                let Material::VerondaWestmann(p) = material else {
                    return Err(wrong_model("veronda_westmann"));
                };
                let [nr, nc, na] = self.tube_mesh.unwrap_or([4, 40, 25]);
                if nr == 0 || nc < 3 || na == 0 {
                    return Err(config_err("problem.tube_mesh", "needs [nr >= 1, nc >= 3, na >= 1]"));
                }
                build_tube(p, nr, nc, na)
            }
            FamilyName::Indentation => {
                let Material::MooneyRivlin(p) = material else {
                    return Err(wrong_model("mooney_rivlin"));
                };
                let n = self.n_per_edge.unwrap_or(10);
                if n < 3 {
                    return Err(config_err("problem.n_per_edge", "indentation needs at least 3"));
                }
                let frac = self.patch_fraction.unwrap_or(DEFAULT_PATCH_FRACTION);
                if !(frac > 0.0 && frac < 1.0) {
                    return Err(config_err("problem.patch_fraction", "must lie in (0, 1)"));
                }
                build_indentation(p, n, frac)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaterialSection {
    VerondaWestmann { a: f64, b: f64, k: f64 },
    MooneyRivlin { mu: f64, upsilon: f64, k: f64 },
}

impl MaterialSection {
    pub fn material(&self) -> Result<Material> {
        match *self {
            MaterialSection::VerondaWestmann { a, b, k } => VwParams::new(a, b, k).map(Material::VerondaWestmann),
            MaterialSection::MooneyRivlin { mu, upsilon, k } => MrParams::new(mu, upsilon, k).map(Material::MooneyRivlin),
        }
        .map_err(|e| config_err("material", e))
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadsSection {
    pub steps: Vec<f64>,
    #[serde(default = "default_true")]
    pub first_step_standard: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub formulation: Option<TransformKind>,
    pub disp_tol: f64,
    pub max_iter: usize,
    pub beta_sq: f64,
    pub error_subset: ErrorSubset,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self { formulation: None, disp_tol: d.disp_tol, max_iter: d.max_iter, beta_sq: d.beta_sq, error_subset: d.error_subset }
    }
}

impl SolverSection {
    pub fn config(&self, formulation: TransformKind) -> Result<SolverConfig> {
        if !(self.disp_tol > 0.0 && self.disp_tol.is_finite()) {
            return Err(config_err("solver.disp_tol", "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(config_err("solver.max_iter", "must be at least 1"));
        }
        if !(self.beta_sq > 0.0 && self.beta_sq.is_finite()) {
            return Err(config_err("solver.beta_sq", "must be positive"));
        }
        Ok(SolverConfig {
            disp_tol: self.disp_tol,
            max_iter: self.max_iter,
            formulation,
            beta_sq: self.beta_sq,
            error_subset: self.error_subset.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveOutput {
    pub report: String,
    /// Writes the final step's displacement-error series when set.
    pub error_series: Option<String>,
    /// Writes the plain-text mesh listing when set.
    pub mesh: Option<String>,
}

impl Default for SolveOutput {
    fn default() -> Self {
        Self { report: "report.csv".into(), error_series: None, mesh: None }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub problem: ProblemSection,
    pub material: MaterialSection,
    pub loads: LoadsSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: SolveOutput,
}

impl SolveConfig {
    pub fn schedule(&self) -> Result<LoadSchedule> {
        if self.loads.steps.is_empty() {
            return Err(config_err("loads.steps", "needs at least one load"));
        }
        let sign = self.problem.load_sign();
        let schedule = LoadSchedule::new(self.loads.steps.iter().map(|s| sign * s).collect())
            .map_err(|e| config_err("loads.steps", e))?;
        Ok(if self.loads.first_step_standard { schedule } else { schedule.transformed_from_start() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    VerondaWestmann,
    MooneyRivlin,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepMaterial {
    pub model: ModelName,
    /// A for Veronda-Westmann, μ for Mooney-Rivlin.
    #[serde(default = "unit")]
    pub modulus: f64,
    /// B for Veronda-Westmann, υ for Mooney-Rivlin.
    pub nonlinearity: Vec<f64>,
    /// K/A or K/μ.
    #[serde(default = "default_bulk_ratio")]
    pub bulk_ratio: Vec<f64>,
}

fn unit() -> f64 {
    1.0
}

fn default_bulk_ratio() -> Vec<f64> {
    vec![10.0]
}

impl SweepMaterial {
    pub fn material(&self, nonlinearity: f64, bulk_ratio: f64) -> Result<Material> {
        let m = self.modulus;
        match self.model {
            ModelName::VerondaWestmann => VwParams::new(m, nonlinearity, bulk_ratio * m).map(Material::VerondaWestmann),
            ModelName::MooneyRivlin => MrParams::new(m, nonlinearity, bulk_ratio * m).map(Material::MooneyRivlin),
        }
        .map_err(|e| config_err("material", e))
    }
}

/// Explicit values or a log-spaced range.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    LogSpaced {
        from: f64,
        to: f64,
        #[serde(default = "default_per_decade")]
        per_decade: usize,
    },
}

/// Points per decade of the default F2 grids.
pub const DEFAULT_PER_DECADE: usize = 20;

fn default_per_decade() -> usize {
    DEFAULT_PER_DECADE
}

impl Grid {
    pub fn values(&self, field: &str) -> Result<Vec<f64>> {
        let v = match *self {
            Grid::Values(ref v) => v.clone(),
            Grid::LogSpaced { from, to, per_decade } => {
                if !(from > 0.0 && to >= from && to.is_finite()) || per_decade == 0 {
                    return Err(config_err(field, "log grid needs 0 < from <= to and per_decade >= 1"));
                }
                let decades = (to / from).log10();
                let n = (decades * per_decade as f64).round() as usize;
                (0..=n)
                    .map(|i| if i == n { to } else { from * 10f64.powf(i as f64 / per_decade as f64) })
                    .collect()
            }
        };
        if v.is_empty() {
            return Err(config_err(field, "grid is empty"));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepLoads {
    pub f1: Vec<f64>,
    pub f2: Grid,
    /// Loads are multiples of the modulus when true.
    #[serde(default = "default_true")]
    pub normalized: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub formulations: Vec<TransformKind>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepOutput {
    pub file: String,
}

impl Default for SweepOutput {
    fn default() -> Self {
        Self { file: "sweep.csv".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub problem: ProblemSection,
    pub material: SweepMaterial,
    pub loads: SweepLoads,
    pub sweep: SweepSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: SweepOutput,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sweep.formulations.is_empty() {
            return Err(config_err("sweep.formulations", "list is empty"));
        }
        if self.solver.formulation.is_some() {
            return Err(config_err("solver.formulation", "sweeps take formulations from `sweep.formulations`"));
        }
        if self.material.nonlinearity.is_empty() {
            return Err(config_err("material.nonlinearity", "grid is empty"));
        }
        if self.material.bulk_ratio.is_empty() {
            return Err(config_err("material.bulk_ratio", "grid is empty"));
        }
        if self.loads.f1.is_empty() {
            return Err(config_err("loads.f1", "grid is empty"));
        }
        if let Some(bad) = self.loads.f2.values("loads.f2")?.iter().find(|v| !(**v > 0.0)) {
            return Err(config_err("loads.f2", format!("values must be positive, got {bad}")));
        }
        self.solver.config(TransformKind::Identity)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    /// λ^{-n}(λ² − 1/λ) with n selected by the stress measure.
    NeoHookean { measure: MeasureName },
    VwUniaxial { a: f64, b: f64 },
    MrUniaxial { mu: f64, upsilon: f64 },
    Exponential { a: f64, b: f64 },
    ShiftedExponential { a: f64, b: f64 },
    Affine { slope: f64, intercept: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureName {
    Cauchy,
    FirstPiola,
    SecondPiola,
}

impl FunctionSpec {
    pub fn function(&self) -> Result<ScalarFunction> {
        Ok(match *self {
            FunctionSpec::NeoHookean { measure } => ScalarFunction::neo_hookean(match measure {
                MeasureName::Cauchy => StressMeasure::Cauchy,
                MeasureName::FirstPiola => StressMeasure::FirstPiola,
                MeasureName::SecondPiola => StressMeasure::SecondPiola,
            }),
            FunctionSpec::VwUniaxial { a, b } => {
                ScalarFunction::uniaxial(Material::VerondaWestmann(VwParams::new(a, b, 1.0).map_err(|e| config_err("function", e))?))
            }
            FunctionSpec::MrUniaxial { mu, upsilon } => ScalarFunction::uniaxial(Material::MooneyRivlin(
                MrParams::new(mu, upsilon, 1.0).map_err(|e| config_err("function", e))?,
            )),
            FunctionSpec::Exponential { a, b } => ScalarFunction::exponential(a, b),
            FunctionSpec::ShiftedExponential { a, b } => ScalarFunction::shifted_exponential(a, b),
            FunctionSpec::Affine { slope, intercept } => ScalarFunction::affine(slope, intercept),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformChoice {
    pub kind: TransformKind,
    /// β² of arctan(y/β); defaults to 3.
    pub beta_sq: Option<f64>,
}

impl TransformChoice {
    pub fn transform(&self, field: &str) -> Result<Transform> {
        match (self.kind, self.beta_sq) {
            (TransformKind::Identity, None) => Ok(Transform::Identity),
            (TransformKind::Log, None) => Ok(Transform::Log),
            (TransformKind::Arctan, b) => {
                let b = b.unwrap_or(3.0);
                if b > 0.0 && b.is_finite() {
                    Ok(Transform::arctan_with_beta_sq(b))
                } else {
                    Err(config_err(field, "beta_sq must be positive"))
                }
            }
            (_, Some(_)) => Err(config_err(field, "beta_sq only applies to arctan")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

impl Range {
    pub fn values(&self, field: &str) -> Result<Vec<f64>> {
        if self.points < 2 || !(self.from < self.to) || !(self.from.is_finite() && self.to.is_finite()) {
            return Err(config_err(field, "needs from < to and at least 2 points"));
        }
        let n = self.points - 1;
        Ok((0..=n).map(|i| self.from + (self.to - self.from) * i as f64 / n as f64).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub name: String,
    pub function: FunctionSpec,
    pub transform: TransformChoice,
    pub x: Range,
}

fn default_region_lo() -> f64 {
    0.0
}

fn default_cells() -> usize {
    100
}

fn default_samples() -> usize {
    crate::metrics::DEFAULT_SUP_SAMPLES
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub name: String,
    pub function: FunctionSpec,
    pub transform: TransformChoice,
    #[serde(default = "default_region_lo")]
    pub from: f64,
    #[serde(default = "unit")]
    pub to: f64,
    /// Cell-centred points per axis.
    #[serde(default = "default_cells")]
    pub cells: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    #[serde(default)]
    pub curve: Vec<CurveSpec>,
    #[serde(default)]
    pub region: Vec<RegionSpec>,
}

impl MetricsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.curve.is_empty() && self.region.is_empty() {
            return Err(Error::Config("metrics config defines no [[curve]] or [[region]] entries".into()));
        }
        let mut names: Vec<&str> = self.curve.iter().map(|c| c.name.as_str()).chain(self.region.iter().map(|r| r.name.as_str())).collect();
        for n in &names {
            if n.is_empty() || !n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(config_err("name", format!("`{n}` must be non-empty and use [A-Za-z0-9_-]")));
            }
        }
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(config_err("name", format!("`{}` is used twice", w[0])));
        }
        for r in &self.region {
            if r.cells == 0 || r.samples < 2 || !(r.from < r.to) {
                return Err(config_err(&format!("region {}", r.name), "needs from < to, cells >= 1, samples >= 2"));
            }
        }
        Ok(())
    }
}
