//! Load-stepped Newton iteration with transformed residuals at the traction
//! DOFs.
//!
//! Every iteration assembles K and fⁱⁿᵗ at the current iterate, replaces the
//! right-hand side at traction DOFs by the active transformation's modified
//! residual, and takes a full Newton step. A step converges when
//! ‖ΔU‖/‖U‖ < `disp_tol` (absolute ‖ΔU‖ when ‖U‖ < 1e-14). The first load
//! step uses the standard residual.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{assemble, AssembledSystem, Problem};
use crate::metrics::ScalarFunction;
use crate::output::sig9;
use crate::sparse::SkylineLdl;
use crate::transforms::{modified_residual, nodal_stretch, ResidualPair, TransformKind, TransformSpec};

/// ‖U‖ below which the convergence test switches to the absolute increment.
pub const ABSOLUTE_FALLBACK_NORM: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct LoadSchedule {
    steps: Vec<f64>,
    first_step_standard: bool,
}

impl LoadSchedule {
    pub fn new(steps: Vec<f64>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidProblem("load schedule needs at least one step".into()));
        }
        if let Some(bad) = steps.iter().find(|s| !s.is_finite()) {
            return Err(Error::InvalidProblem(format!("non-finite load magnitude {bad}")));
        }
        Ok(Self { steps, first_step_standard: true })
    }

    /// The usual two-step schedule F1 → F2.
    pub fn two_step(f1: f64, f2: f64) -> Result<Self> {
        Self::new(vec![f1, f2])
    }

    /// Lets the first step use the configured transformation as well.
    pub fn transformed_from_start(mut self) -> Self {
        self.first_step_standard = false;
        self
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn first_step_standard(&self) -> bool {
        self.first_step_standard
    }
}

/// Nodes whose displacements enter the error series.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorSubset {
    #[default]
    TractionNodes,
    AllNodes,
    Nodes(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub disp_tol: f64,
    pub max_iter: usize,
    pub formulation: TransformKind,
    pub beta_sq: f64,
    pub error_subset: ErrorSubset,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            disp_tol: 1e-3,
            max_iter: 100,
            formulation: TransformKind::Identity,
            beta_sq: 3.0,
            error_subset: ErrorSubset::default(),
        }
    }
}

impl SolverConfig {
    pub fn with_formulation(formulation: TransformKind) -> Self {
        Self { formulation, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.disp_tol > 0.0 && self.disp_tol.is_finite()) {
            return Err(Error::InvalidProblem(format!("disp_tol must be positive, got {}", self.disp_tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidProblem("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Converged,
    MaxIterations,
    NonPositiveJacobian,
    NegativeStretch,
    LinearSolveFailure,
    /// Forces or stiffness became non-finite (e.g. exponential overflow).
    Diverged,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIterations => "max_iterations",
            Termination::NonPositiveJacobian => "non_positive_jacobian",
            Termination::NegativeStretch => "negative_stretch",
            Termination::LinearSolveFailure => "linear_solve_failure",
            Termination::Diverged => "diverged",
        }
    }

    fn from_error(err: &Error) -> Self {
        match err {
            Error::NonPositiveJacobian { .. } => Termination::NonPositiveJacobian,
            Error::NegativeStretch { .. } => Termination::NegativeStretch,
            Error::LinearSolveFailure(_) => Termination::LinearSolveFailure,
            _ => Termination::Diverged,
        }
    }
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub load: f64,
    pub formulation: TransformKind,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// ‖ΔU‖/‖U‖ after every iteration.
    pub rel_increments: Vec<f64>,
    /// Error-subset displacements after every iteration.
    pub iterates: Vec<Vec<f64>>,
    /// ‖fᵉˣᵗ − fⁱⁿᵗ‖ / ‖fᵉˣᵗ‖ at the converged iterate.
    pub residual_ratio: Option<f64>,
    pub message: Option<String>,
}

impl StepReport {
    /// ‖U − Uⁱ‖/‖U‖ against the step's last iterate, restricted to the
    /// error subset.
    pub fn error_vs_last(&self) -> Vec<f64> {
        let Some(last) = self.iterates.last() else {
            return Vec::new();
        };
        let scale = norm(last);
        self.iterates
            .iter()
            .map(|u| {
                let d = u.iter().zip(last).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                if scale > 0.0 {
                    d / scale
                } else {
                    d
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub steps: Vec<StepReport>,
    /// Free-DOF displacement at the end of the last attempted step.
    pub u: Vec<f64>,
    /// Free-DOF indices of the error subset.
    pub subset_dofs: Vec<usize>,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.steps.last().is_some_and(|s| s.converged)
    }

    pub fn last_step(&self) -> &StepReport {
        self.steps.last().expect("at least one step")
    }

    pub fn termination(&self) -> Termination {
        self.last_step().termination
    }

    /// Iterations of the final step (the transformed one in a two-step run).
    pub fn iterations(&self) -> usize {
        self.last_step().iterations
    }

    /// CSV with one row per iteration and one summary row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,iter,rel_disp_increment,disp_error_vs_final\n");
        for (s, step) in self.steps.iter().enumerate() {
            for (i, (inc, err)) in step.rel_increments.iter().zip(step.error_vs_last()).enumerate() {
                let _ = writeln!(out, "{},{},{},{}", s + 1, i + 1, sig9(*inc), sig9(err));
            }
        }
        let _ = writeln!(
            out,
            "summary,converged={},iterations={},termination={}",
            self.converged(),
            self.iterations(),
            self.termination()
        );
        out
    }
}

/// Per-iteration error ‖U − Uⁱ‖/‖U‖ of the final step against its converged
/// iterate.
pub fn displacement_error_series(report: &SolveReport) -> Result<Vec<f64>> {
    if !report.converged() {
        return Err(Error::NotConverged);
    }
    Ok(report.last_step().error_vs_last())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn subset_dofs(problem: &Problem, subset: &ErrorSubset) -> Result<Vec<usize>> {
    Ok(match subset {
        ErrorSubset::TractionNodes => problem.node_subset_dofs(problem.traction_nodes()),
        ErrorSubset::AllNodes => (0..problem.n_free()).collect(),
        ErrorSubset::Nodes(nodes) => {
            if let Some(bad) = nodes.iter().find(|&&n| n >= problem.nodes().len()) {
                return Err(Error::InvalidProblem(format!("error subset node {bad} out of range")));
            }
            problem.node_subset_dofs(nodes)
        }
    })
}

/// Refreshes α at every traction DOF from the current internal force and
/// the nodal stretch of its node.
fn recalibrate(problem: &Problem, sys: &AssembledSystem, spec: &mut TransformSpec) {
    let dpn = problem.dofs_per_node();
    for (j, (&(global, _), &free)) in problem.traction().iter().zip(problem.traction_free_dofs()).enumerate() {
        let node = global / dpn;
        let stretches = problem
            .node_elements(node)
            .iter()
            .map(|&e| (problem.elements()[e].as_slice(), sys.gauss_stretches[e].as_slice()));
        match nodal_stretch(node, stretches) {
            Ok(lambda) => spec.recalibrate(j, sys.f_int[free], lambda),
            Err(_) => spec.set_alpha(j, None),
        }
    }
}

/// Right-hand side with transformed entries at the traction DOFs.
fn transformed_rhs(problem: &Problem, sys: &AssembledSystem, spec: &TransformSpec) -> Vec<f64> {
    let mut rhs = sys.residual();
    for (j, &free) in problem.traction_free_dofs().iter().enumerate() {
        let pair = ResidualPair::new(sys.f_int[free], sys.f_ext[free]);
        rhs[free] = modified_residual(pair, spec, j);
    }
    rhs
}

fn finite(sys: &AssembledSystem) -> bool {
    sys.f_int.iter().chain(sys.k.values()).all(|v| v.is_finite())
}

/// One full Newton step from `u` under `spec`; returns the new iterate and
/// ‖ΔU‖.
pub fn newton_step(problem: &Problem, u: &[f64], load: f64, spec: &mut TransformSpec) -> Result<(Vec<f64>, f64)> {
    let sys = assemble(problem, u, load)?;
    step_from(problem, &sys, u, spec)
}

fn step_from(problem: &Problem, sys: &AssembledSystem, u: &[f64], spec: &mut TransformSpec) -> Result<(Vec<f64>, f64)> {
    if !finite(sys) {
        return Err(Error::DomainViolation("non-finite internal force or stiffness".into()));
    }
    if spec.kinds().contains(&TransformKind::Arctan) {
        recalibrate(problem, sys, spec);
    }
    let rhs = transformed_rhs(problem, sys, spec);
    let ldl = SkylineLdl::factor(problem.layout(), &sys.k)?;
    let du = ldl.solve(&rhs)?;
    if du.iter().any(|v| !v.is_finite()) {
        return Err(Error::LinearSolveFailure("non-finite increment".into()));
    }
    let next: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + b).collect();
    Ok((next, norm(&du)))
}

fn spec_for(problem: &Problem, kind: TransformKind, load: f64, beta_sq: f64) -> TransformSpec {
    let mut spec = TransformSpec::uniform(kind, problem.traction().len()).with_beta_sq(beta_sq);
    let f_ext: Vec<f64> = problem.load_pattern().iter().map(|p| p * load).collect();
    spec.set_tol_from_load(&f_ext);
    spec
}

/// Runs the load schedule. Failures are recorded in the report; steps after
/// a failed one are not attempted.
pub fn solve(problem: &Problem, schedule: &LoadSchedule, config: &SolverConfig) -> Result<SolveReport> {
    config.validate()?;
    let subset = subset_dofs(problem, &config.error_subset)?;
    let mut u = vec![0.0; problem.n_free()];
    let mut steps = Vec::with_capacity(schedule.steps().len());
    for (s, &load) in schedule.steps().iter().enumerate() {
        let kind = if s == 0 && schedule.first_step_standard() { TransformKind::Identity } else { config.formulation };
        let mut spec = spec_for(problem, kind, load, config.beta_sq);
        let mut step = StepReport {
            load,
            formulation: kind,
            iterations: 0,
            converged: false,
            termination: Termination::MaxIterations,
            rel_increments: Vec::new(),
            iterates: Vec::new(),
            residual_ratio: None,
            message: None,
        };
        for _ in 0..config.max_iter {
            match newton_step(problem, &u, load, &mut spec) {
                Ok((next, du)) => {
                    u = next;
                    let un = norm(&u);
                    let rel = if un < ABSOLUTE_FALLBACK_NORM { du } else { du / un };
                    step.iterations += 1;
                    step.rel_increments.push(rel);
                    step.iterates.push(subset.iter().map(|&i| u[i]).collect());
                    if rel < config.disp_tol {
                        step.converged = true;
                        step.termination = Termination::Converged;
                        break;
                    }
                }
                Err(err) => {
                    step.termination = Termination::from_error(&err);
                    step.message = Some(err.to_string());
                    break;
                }
            }
        }
        if step.converged {
            // The converged iterate must itself be admissible.
            match assemble(problem, &u, load) {
                Ok(sys) if finite(&sys) => {
                    let fe = norm(&sys.f_ext);
                    let r = norm(&sys.residual());
                    step.residual_ratio = Some(if fe > 0.0 { r / fe } else { r });
                }
                Ok(_) => {
                    step.converged = false;
                    step.termination = Termination::Diverged;
                }
                Err(err) => {
                    step.converged = false;
                    step.termination = Termination::from_error(&err);
                    step.message = Some(err.to_string());
                }
            }
        }
        let ok = step.converged;
        steps.push(step);
        if !ok {
            break;
        }
    }
    Ok(SolveReport { steps, u, subset_dofs: subset })
}

/// Outcome of a scalar Newton solve of g(x) = target.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSolve {
    pub x: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<f64>,
}

/// Newton on the scalar equation g(x) = target with the given residual
/// transformation (`alpha` is the arctan scale). Converges when
/// |target − g(x)| ≤ `rtol`·|target| after an update, so the count is the
/// number of updates taken.
pub fn scalar_newton(
    g: &ScalarFunction,
    target: f64,
    x0: f64,
    kind: TransformKind,
    alpha: Option<f64>,
    rtol: f64,
    max_iter: usize,
) -> ScalarSolve {
    let mut spec = TransformSpec::uniform(kind, 1);
    spec.set_tol_from_load(&[target]);
    spec.set_alpha(0, alpha);
    let mut x = x0;
    let mut history = vec![x];
    let done = |x: f64| g.value(x).is_ok_and(|v| (target - v).abs() <= rtol * target.abs().max(f64::MIN_POSITIVE));
    for it in 1..=max_iter {
        let (Ok(v), Ok(d)) = (g.value(x), g.first(x)) else {
            return ScalarSolve { x, iterations: it - 1, converged: false, history };
        };
        let r = modified_residual(ResidualPair::new(v, target), &spec, 0);
        x += r / d;
        history.push(x);
        if !x.is_finite() {
            return ScalarSolve { x, iterations: it, converged: false, history };
        }
        if done(x) {
            return ScalarSolve { x, iterations: it, converged: true, history };
        }
    }
    ScalarSolve { x, iterations: max_iter, converged: false, history }
}
