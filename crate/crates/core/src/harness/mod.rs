//! Experiment harness: single solves, parameter sweeps and metric grids
//! driven by TOML files, with CSV output.

pub mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use config::{MetricsConfig, SolveConfig, SweepConfig};

use crate::error::{Error, Result};
use crate::metrics::{comparison_region, local_nonlinearity, midpoint_grid, transformed_function};
use crate::output::{matrix_csv, sig9};
use crate::solver::{displacement_error_series, solve, LoadSchedule, SolveReport, Termination};
use crate::transforms::TransformKind;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn origin(path: &Path) -> String {
    path.display().to_string()
}

pub struct SolveOutcome {
    pub report: SolveReport,
    pub files: Vec<PathBuf>,
}

/// Runs the solve described by `config`, writing CSV output into `out`.
pub fn run_single_config(config: &SolveConfig, out: &Path) -> Result<SolveOutcome> {
    let material = config.material.material()?;
    let problem = config.problem.build(material)?;
    let schedule = config.schedule()?;
    let formulation = config.solver.formulation.unwrap_or(TransformKind::Identity);
    let report = solve(&problem, &schedule, &config.solver.config(formulation)?)?;
    let mut files = vec![write(out, &config.output.report, &report.to_csv())?];
    if let Some(name) = &config.output.error_series {
        let mut csv = String::from("iter,disp_error\n");
        if let Ok(series) = displacement_error_series(&report) {
            for (i, e) in series.iter().enumerate() {
                let _ = writeln!(csv, "{},{}", i + 1, sig9(*e));
            }
        }
        files.push(write(out, name, &csv)?);
    }
    if let Some(name) = &config.output.mesh {
        files.push(write(out, name, &problem.mesh_listing())?);
    }
    Ok(SolveOutcome { report, files })
}

pub fn run_single(path: &Path, out: &Path) -> Result<SolveOutcome> {
    let config: SolveConfig = config::parse(&read(path)?, &origin(path))?;
    run_single_config(&config, out)
}

/// One sweep grid point with its outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub formulation: TransformKind,
    pub nonlinearity: f64,
    pub bulk_ratio: f64,
    pub f1: f64,
    pub f2: f64,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
}

pub const SWEEP_HEADER: &str =
    "formulation,family,model,modulus,nonlinearity,bulk_ratio,f1,f2,iterations,converged,termination";

pub struct SweepOutcome {
    pub records: Vec<RunRecord>,
    pub csv: String,
    pub file: PathBuf,
}

/// Iteration count, or `<max_iter>+` when the run did not converge.
pub fn iteration_cell(record: &RunRecord, max_iter: usize) -> String {
    if record.converged {
        record.iterations.to_string()
    } else {
        format!("{max_iter}+")
    }
}

/// Runs every grid point on a pool of `jobs` threads (0 = rayon default).
/// Rows are written in grid order: formulation, nonlinearity, bulk ratio,
/// F1, F2.
pub fn run_sweep_config(config: &SweepConfig, out: &Path, jobs: usize) -> Result<SweepOutcome> {
    config.validate()?;
    let f2_grid = config.loads.f2.values("loads.f2")?;
    let scale = if config.loads.normalized { config.material.modulus } else { 1.0 };
    let sign = config.problem.load_sign();
    let mut points = Vec::new();
    for &formulation in &config.sweep.formulations {
        for &nl in &config.material.nonlinearity {
            for &kr in &config.material.bulk_ratio {
                for &f1 in &config.loads.f1 {
                    for &f2 in &f2_grid {
                        points.push((formulation, nl, kr, f1, f2));
                    }
                }
            }
        }
    }
    // Build each distinct problem once, up front, so configuration errors
    // surface before any solve starts.
    let mut problems = Vec::new();
    for &nl in &config.material.nonlinearity {
        for &kr in &config.material.bulk_ratio {
            problems.push(((nl.to_bits(), kr.to_bits()), config.problem.build(config.material.material(nl, kr)?)?));
        }
    }
    let find = |nl: f64, kr: f64| &problems.iter().find(|(key, _)| *key == (nl.to_bits(), kr.to_bits())).expect("built").1;

    let run = |&(formulation, nl, kr, f1, f2): &(TransformKind, f64, f64, f64, f64)| -> Result<RunRecord> {
        let schedule = LoadSchedule::two_step(sign * f1 * scale, sign * f2 * scale)?;
        let report = solve(find(nl, kr), &schedule, &config.solver.config(formulation)?)?;
        Ok(RunRecord {
            formulation,
            nonlinearity: nl,
            bulk_ratio: kr,
            f1,
            f2,
            iterations: report.iterations(),
            converged: report.converged() && report.steps.len() == 2,
            termination: report.termination(),
        })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} workers: {e}")))?;
    let records: Vec<RunRecord> = pool.install(|| points.par_iter().map(run).collect::<Result<Vec<_>>>())?;

    let model = match config.material.model {
        config::ModelName::VerondaWestmann => "veronda_westmann",
        config::ModelName::MooneyRivlin => "mooney_rivlin",
    };
    let family = config.problem.family.name();
    let mut csv = format!("{SWEEP_HEADER}\n");
    for r in &records {
        let _ = writeln!(
            csv,
            "{},{family},{model},{},{},{},{},{},{},{},{}",
            r.formulation,
            sig9(config.material.modulus),
            sig9(r.nonlinearity),
            sig9(r.bulk_ratio),
            sig9(r.f1),
            sig9(r.f2),
            iteration_cell(r, config.solver.max_iter),
            r.converged,
            r.termination
        );
    }
    let file = write(out, &config.output.file, &csv)?;
    Ok(SweepOutcome { records, csv, file })
}

pub fn run_sweep(path: &Path, out: &Path, jobs: usize) -> Result<SweepOutcome> {
    let config: SweepConfig = config::parse(&read(path)?, &origin(path))?;
    run_sweep_config(&config, out, jobs)
}

fn cell(v: Result<f64>) -> String {
    v.ok().filter(|v| v.is_finite()).map(sig9).unwrap_or_default()
}

pub struct MetricsOutcome {
    pub files: Vec<PathBuf>,
    /// (region name, fraction of cells where the standard measure is smaller)
    pub region_fractions: Vec<(String, f64)>,
}

/// Writes `<name>_curve.csv` per curve (x, g, T∘g and both C̄ columns;
/// undefined values left empty) and `<name>_region.csv` per region
/// (1 where N_standard < N_transform, 0 otherwise, empty if undefined).
pub fn run_metrics_config(config: &MetricsConfig, out: &Path) -> Result<MetricsOutcome> {
    config.validate()?;
    let mut files = Vec::new();
    for c in &config.curve {
        let g = c.function.function()?;
        let tg = transformed_function(&g, c.transform.transform(&format!("curve {}", c.name))?);
        let mut csv = String::from("x,g,transformed,cbar_standard,cbar_transformed\n");
        for x in c.x.values(&format!("curve {}.x", c.name))? {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                sig9(x),
                cell(g.value(x)),
                cell(tg.value(x)),
                cell(local_nonlinearity(&g, x)),
                cell(local_nonlinearity(&tg, x))
            );
        }
        files.push(write(out, &format!("{}_curve.csv", c.name), &csv)?);
    }
    let mut region_fractions = Vec::new();
    let mut summary = String::from("region,cells,true_fraction\n");
    for r in &config.region {
        let g = r.function.function()?;
        let t = r.transform.transform(&format!("region {}", r.name))?;
        let grid = midpoint_grid(r.from, r.to, r.cells);
        let region = comparison_region(&g, t, &grid, &grid, r.samples);
        let csv = matrix_csv("xn\\x", &region.x, &region.xn, |i, j| match region.cells[i][j] {
            Some(true) => "1".into(),
            Some(false) => "0".into(),
            None => String::new(),
        });
        files.push(write(out, &format!("{}_region.csv", r.name), &csv)?);
        let frac = region.true_fraction();
        let _ = writeln!(summary, "{},{},{}", r.name, r.cells, sig9(frac));
        region_fractions.push((r.name.clone(), frac));
    }
    if !config.region.is_empty() {
        files.push(write(out, "regions_summary.csv", &summary)?);
    }
    Ok(MetricsOutcome { files, region_fractions })
}

pub fn run_metrics(path: &Path, out: &Path) -> Result<MetricsOutcome> {
    let config: MetricsConfig = config::parse(&read(path)?, &origin(path))?;
    run_metrics_config(&config, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    const BAR_SOLVE: &str = r#"
[problem]
family = "bar1d"
elements = 10

[material]
model = "veronda_westmann"
a = 1.0
b = 100.0
k = 1.0

[loads]
steps = [1e-4, 10.0]

[solver]
formulation = "log"

[output]
error_series = "errors.csv"
"#;

    #[test]
    fn single_solve_writes_report() {
        let dir = tmp();
        let cfg: SolveConfig = config::parse(BAR_SOLVE, "inline").unwrap();
        let out = run_single_config(&cfg, dir.path()).unwrap();
        assert!(out.report.converged());
        let report = fs::read_to_string(dir.path().join("report.csv")).unwrap();
        assert!(report.lines().last().unwrap().starts_with("summary,converged=true"));
        let errors = fs::read_to_string(dir.path().join("errors.csv")).unwrap();
        assert_eq!(errors.lines().count(), out.report.iterations() + 1);
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = config::parse::<SolveConfig>("[problem]\nfamily = \"bar1d\"\nelements = ten\n", "bad.toml").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bad.toml") && msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = BAR_SOLVE.replace("elements = 10", "elements = 10\nmesh_size = 3");
        let msg = config::parse::<SolveConfig>(&text, "x").unwrap_err().to_string();
        assert!(msg.contains("mesh_size"), "{msg}");
    }

    #[test]
    fn invalid_values_name_the_field() {
        let text = BAR_SOLVE.replace("a = 1.0", "a = -1.0");
        let cfg: SolveConfig = config::parse(&text, "x").unwrap();
        let msg = run_single_config(&cfg, tmp().path()).err().unwrap().to_string();
        assert!(msg.contains("material"), "{msg}");
        let text = BAR_SOLVE.replace("elements = 10", "elements = 10\ntube_mesh = [1, 8, 2]");
        let cfg: SolveConfig = config::parse(&text, "x").unwrap();
        let msg = run_single_config(&cfg, tmp().path()).err().unwrap().to_string();
        assert!(msg.contains("problem.tube_mesh"), "{msg}");
    }

    const SWEEP: &str = r#"
[problem]
family = "bar1d"

[material]
model = "veronda_westmann"
nonlinearity = [10.0, 100.0]
bulk_ratio = [1.0]

[loads]
f1 = [1e-4]
f2 = { from = 1.0, to = 10.0, per_decade = 2 }

[sweep]
formulations = ["identity", "log"]
"#;

    #[test]
    fn sweep_rows_follow_grid_order() {
        let cfg: SweepConfig = config::parse(SWEEP, "inline").unwrap();
        let out = run_sweep_config(&cfg, tmp().path(), 2).unwrap();
        assert_eq!(out.records.len(), 2 * 2 * 3);
        let lines: Vec<&str> = out.csv.lines().collect();
        assert_eq!(lines[0], SWEEP_HEADER);
        assert!(lines[1].starts_with("identity,bar1d,veronda_westmann,1,10,1,0.0001,1,"));
        assert!(lines.iter().any(|l| l.contains(",100+,false,")));
        assert!(lines[7].starts_with("log,"));
    }

    #[test]
    fn sweep_is_independent_of_worker_count() {
        let cfg: SweepConfig = config::parse(SWEEP, "inline").unwrap();
        let a = run_sweep_config(&cfg, tmp().path(), 1).unwrap().csv;
        let b = run_sweep_config(&cfg, tmp().path(), 4).unwrap().csv;
        assert_eq!(a, b);
    }

    #[test]
    fn single_point_sweep_matches_single_solve() {
        let text = SWEEP
            .replace("nonlinearity = [10.0, 100.0]", "nonlinearity = [100.0]")
            .replace("f2 = { from = 1.0, to = 10.0, per_decade = 2 }", "f2 = [10.0]")
            .replace("[\"identity\", \"log\"]", "[\"log\"]");
        let cfg: SweepConfig = config::parse(&text, "inline").unwrap();
        let sweep = run_sweep_config(&cfg, tmp().path(), 1).unwrap();
        let single: SolveConfig = config::parse(BAR_SOLVE, "inline").unwrap();
        let solo = run_single_config(&single, tmp().path()).unwrap();
        assert_eq!(sweep.records[0].iterations, solo.report.iterations());
        assert!(sweep.records[0].converged);
    }

    #[test]
    fn log_grid_spacing() {
        let g = config::Grid::LogSpaced { from: 0.1, to: 100.0, per_decade: 20 };
        let v = g.values("f2").unwrap();
        assert_eq!(v.len(), 61);
        assert_eq!(v[0], 0.1);
        assert_eq!(*v.last().unwrap(), 100.0);
    }

    const METRICS: &str = r#"
[[curve]]
name = "cauchy"
function = { kind = "neo_hookean", measure = "cauchy" }
transform = { kind = "arctan" }
x = { from = 0.05, to = 1.0, points = 20 }

[[curve]]
name = "linear"
function = { kind = "affine", slope = 2.0, intercept = 1.0 }
transform = { kind = "identity" }
x = { from = 0.0, to = 1.0, points = 5 }

[[region]]
name = "compression"
function = { kind = "neo_hookean", measure = "cauchy" }
transform = { kind = "arctan", beta_sq = 3.0 }
cells = 10
samples = 201
"#;

    #[test]
    fn metrics_outputs() {
        let dir = tmp();
        let cfg: MetricsConfig = config::parse(METRICS, "inline").unwrap();
        let out = run_metrics_config(&cfg, dir.path()).unwrap();
        assert_eq!(out.files.len(), 4);
        let linear = fs::read_to_string(dir.path().join("linear_curve.csv")).unwrap();
        for row in linear.lines().skip(1) {
            let cols: Vec<&str> = row.split(',').collect();
            assert_eq!(cols[3], "0");
        }
        let region = fs::read_to_string(dir.path().join("compression_region.csv")).unwrap();
        assert_eq!(region.lines().count(), 11);
        assert!(out.region_fractions[0].1 < 0.25);
    }

    #[test]
    fn duplicate_metric_names_rejected() {
        let text = METRICS.replace("name = \"linear\"", "name = \"cauchy\"");
        let cfg: MetricsConfig = config::parse(&text, "inline").unwrap();
        assert!(run_metrics_config(&cfg, tmp().path()).is_err());
    }
}
