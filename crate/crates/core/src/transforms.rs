//! Residual transformations applied before linearization.
//!
//! Instead of Newton on fᵢⁿᵗ(x) = fᵢᵉˣᵗ, selected traction DOFs solve
//! T(fᵢⁿᵗ) = T(fᵢᵉˣᵗ). Linearizing with T'(fᵢᵉˣᵗ)/T'(fᵢⁿᵗ) ≈ 1 keeps the
//! stiffness matrix unchanged and replaces the right-hand side by
//!
//! ```text
//! R̄ᵢ = (T(fᵢᵉˣᵗ) − T(fᵢⁿᵗ)) / T'(fᵢⁿᵗ)
//! ```
//!
//! * log:    R̄ = fⁱⁿᵗ ln(fᵉˣᵗ/fⁱⁿᵗ)
//! * arctan: R̄ = (1 + (α fⁱⁿᵗ)²)/α · (atan(α fᵉˣᵗ) − atan(α fⁱⁿᵗ))
//!
//! Each branch has a trigger condition; when it fails the DOF uses the
//! standard residual fᵉˣᵗ − fⁱⁿᵗ.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower bound on the nodal stretch accepted by α calibration.
pub const CALIBRATION_MIN_STRETCH: f64 = 1e-3;
/// Calibration is refused for stretches above 1 − this margin.
pub const CALIBRATION_MARGIN: f64 = 1e-6;
/// Relative trigger tolerance; TOL = this × max(1, ‖fᵉˣᵗ‖∞).
pub const RELATIVE_TRIGGER_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    Identity,
    Log,
    Arctan,
}

impl TransformKind {
    pub fn name(self) -> &'static str {
        match self {
            TransformKind::Identity => "identity",
            TransformKind::Log => "log",
            TransformKind::Arctan => "arctan",
        }
    }
}

impl std::fmt::Display for TransformKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Internal and external force at one DOF, evaluated at the current iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualPair {
    pub f_int: f64,
    pub f_ext: f64,
}

impl ResidualPair {
    pub fn new(f_int: f64, f_ext: f64) -> Self {
        Self { f_int, f_ext }
    }

    pub fn standard(&self) -> f64 {
        self.f_ext - self.f_int
    }
}

/// Per-traction-DOF transformation state owned by one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformSpec {
    kinds: Vec<TransformKind>,
    alpha: Vec<Option<f64>>,
    tol: f64,
    beta_sq: f64,
}

impl TransformSpec {
    /// Same kind on every one of `n_dofs` traction DOFs.
    pub fn uniform(kind: TransformKind, n_dofs: usize) -> Self {
        Self::mixed(vec![kind; n_dofs])
    }

    pub fn mixed(kinds: Vec<TransformKind>) -> Self {
        let n = kinds.len();
        Self { kinds, alpha: vec![None; n], tol: RELATIVE_TRIGGER_TOL, beta_sq: 3.0 }
    }

    pub fn with_beta_sq(mut self, beta_sq: f64) -> Self {
        self.beta_sq = beta_sq;
        self
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn kind(&self, dof: usize) -> TransformKind {
        self.kinds[dof]
    }

    pub fn kinds(&self) -> &[TransformKind] {
        &self.kinds
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Sets TOL from the external force vector of the current load step.
    pub fn set_tol_from_load(&mut self, f_ext: &[f64]) {
        let max = f_ext.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.tol = RELATIVE_TRIGGER_TOL * max.max(1.0);
    }

    pub fn set_tol(&mut self, tol: f64) {
        self.tol = tol;
    }

    /// β² of the reference transformation atan(σ/β) for stress-level analyses.
    pub fn beta_sq(&self) -> f64 {
        self.beta_sq
    }

    pub fn alpha(&self, dof: usize) -> Option<f64> {
        self.alpha[dof]
    }

    pub fn set_alpha(&mut self, dof: usize, alpha: Option<f64>) {
        self.alpha[dof] = alpha;
    }

    /// Recalibrates α at `dof` from the current internal force and nodal
    /// stretch; a degenerate calibration clears α for this iteration.
    pub fn recalibrate(&mut self, dof: usize, f_int: f64, lambda_node: f64) {
        self.alpha[dof] = calibrate_alpha(f_int, lambda_node).ok();
    }

    pub fn clear_alpha(&mut self) {
        self.alpha.iter_mut().for_each(|a| *a = None);
    }
}

/// |fᵉˣᵗ| > TOL, |fⁱⁿᵗ| > TOL and both of the same sign.
pub fn log_condition(r: ResidualPair, tol: f64) -> bool {
    r.f_ext.abs() > tol && r.f_int.abs() > tol && r.f_ext / r.f_int > 0.0
}

pub fn log_residual(r: ResidualPair) -> Result<f64> {
    if !(r.f_int != 0.0 && r.f_ext / r.f_int > 0.0) {
        return Err(Error::DomainViolation(format!(
            "log residual needs forces of equal sign (f_int = {}, f_ext = {})",
            r.f_int, r.f_ext
        )));
    }
    let ratio = r.f_ext / r.f_int;
    // ln_1p keeps the first-order equivalence with fᵉˣᵗ − fⁱⁿᵗ near equilibrium.
    Ok(r.f_int * (ratio - 1.0).ln_1p())
}

/// α = |tan(π/2 (1 − λ)) / fⁱⁿᵗ| so that atan(α fⁱⁿᵗ) is linear in λ on (0, 1).
pub fn calibrate_alpha(f_int: f64, lambda_node: f64) -> Result<f64> {
    if f_int == 0.0 || !f_int.is_finite() {
        return Err(Error::DegenerateCalibration(format!("internal force {f_int}")));
    }
    if !(lambda_node > CALIBRATION_MIN_STRETCH && lambda_node < 1.0 - CALIBRATION_MARGIN) {
        return Err(Error::DegenerateCalibration(format!(
            "stretch {lambda_node} outside ({CALIBRATION_MIN_STRETCH}, 1 - {CALIBRATION_MARGIN})"
        )));
    }
    let alpha = ((FRAC_PI_2 * (1.0 - lambda_node)).tan() / f_int).abs();
    if alpha.is_finite() && alpha > 0.0 {
        Ok(alpha)
    } else {
        Err(Error::DegenerateCalibration(format!("alpha = {alpha}")))
    }
}

/// |fᵉˣᵗ| > TOL and α calibrated for this DOF.
pub fn arctan_condition(r: ResidualPair, spec: &TransformSpec, dof: usize) -> bool {
    r.f_ext.abs() > spec.tol && spec.alpha[dof].is_some()
}

pub fn arctan_residual(r: ResidualPair, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::DomainViolation(format!("arctan scale must be positive, got {alpha}")));
    }
    let a_int = alpha * r.f_int;
    let a_ext = alpha * r.f_ext;
    // atan(a) − atan(b) = atan((a − b)/(1 + ab)) when ab > −1; this form
    // avoids cancellation for small α.
    let diff = if a_int * a_ext > -1.0 {
        ((a_ext - a_int) / (1.0 + a_ext * a_int)).atan()
    } else {
        a_ext.atan() - a_int.atan()
    };
    Ok((1.0 + a_int * a_int) / alpha * diff)
}

/// Right-hand side entry for `dof` under `spec`, falling back to the
/// standard residual whenever the active branch is not triggered.
pub fn modified_residual(r: ResidualPair, spec: &TransformSpec, dof: usize) -> f64 {
    let transformed = match spec.kinds[dof] {
        TransformKind::Identity => None,
        TransformKind::Log if log_condition(r, spec.tol) => log_residual(r).ok(),
        TransformKind::Arctan if arctan_condition(r, spec, dof) => {
            arctan_residual(r, spec.alpha[dof].unwrap_or(0.0)).ok()
        }
        _ => None,
    };
    match transformed {
        Some(v) if v.is_finite() => v,
        _ => r.standard(),
    }
}

/// Arithmetic mean of the load-axis Gauss-point stretches of every element
/// containing `node`. `element_stretches` yields (connectivity, per-Gauss-point
/// stretches) per element.
pub fn nodal_stretch<'a, I>(node: usize, element_stretches: I) -> Result<f64>
where
    I: IntoIterator<Item = (&'a [usize], &'a [f64])>,
{
    let mut sum = 0.0;
    let mut count = 0usize;
    for (conn, stretches) in element_stretches {
        if conn.contains(&node) {
            sum += stretches.iter().sum::<f64>();
            count += stretches.len();
        }
    }
    if count == 0 {
        return Err(Error::IsolatedNode(node));
    }
    Ok(sum / count as f64)
}
