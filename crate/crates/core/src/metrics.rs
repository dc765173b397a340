//! Nonlinearity measures of scalar equations g(x) = H.
//!
//! For a Newton step from xₙ towards the root x*, the error evolves as
//! eₙ₊₁ = C(xₙ, ζ) eₙ² with C(xₙ, ζ) = |g''(ζ) / (2 g'(xₙ))| for some ζ
//! between xₙ and x*. This module evaluates the local measure C̄(xₙ) = C(xₙ, xₙ),
//! the supremum N(xₙ, x*) over ζ, and the region of (x*, xₙ) pairs where a
//! residual transformation makes N worse.
//!
//! The ½ factor is kept in every measure.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::materials::{neo_hookean_sigma_n, neo_hookean_sigma_n_derivatives, Material, StressMeasure};

type Eval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Default number of ζ samples used to approximate the supremum.
pub const DEFAULT_SUP_SAMPLES: usize = 10_001;

/// A scalar function with optional analytic derivatives. Missing derivatives
/// fall back to central differences with h = 1e-5·(1 + |x|).
#[derive(Clone)]
pub struct ScalarFunction {
    value: Eval,
    first: Option<Eval>,
    second: Option<Eval>,
}

impl std::fmt::Debug for ScalarFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarFunction")
            .field("analytic_first", &self.first.is_some())
            .field("analytic_second", &self.second.is_some())
            .finish()
    }
}

fn fd_step(x: f64) -> f64 {
    1e-5 * (1.0 + x.abs())
}

fn finite(x: f64, v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::DomainViolation(format!("{what} is not finite at x = {x}")))
    }
}

impl ScalarFunction {
    pub fn new(value: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { value: Arc::new(value), first: None, second: None }
    }

    pub fn with_first(mut self, d: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.first = Some(Arc::new(d));
        self
    }

    pub fn with_second(mut self, d: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.second = Some(Arc::new(d));
        self
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        finite(x, (self.value)(x), "g")
    }

    pub fn first(&self, x: f64) -> Result<f64> {
        let v = match &self.first {
            Some(d) => d(x),
            None => {
                let h = fd_step(x);
                ((self.value)(x + h) - (self.value)(x - h)) / (2.0 * h)
            }
        };
        finite(x, v, "g'")
    }

    pub fn second(&self, x: f64) -> Result<f64> {
        let v = match (&self.second, &self.first) {
            (Some(d), _) => d(x),
            (None, Some(d1)) => {
                let h = fd_step(x);
                (d1(x + h) - d1(x - h)) / (2.0 * h)
            }
            (None, None) => {
                let h = fd_step(x);
                ((self.value)(x + h) - 2.0 * (self.value)(x) + (self.value)(x - h)) / (h * h)
            }
        };
        finite(x, v, "g''")
    }

    /// m·x + c
    pub fn affine(m: f64, c: f64) -> Self {
        Self::new(move |x| m * x + c).with_first(move |_| m).with_second(|_| 0.0)
    }

    /// A·e^{Bx}
    pub fn exponential(a: f64, b: f64) -> Self {
        Self::new(move |x| a * (b * x).exp())
            .with_first(move |x| a * b * (b * x).exp())
            .with_second(move |x| a * b * b * (b * x).exp())
    }

    /// A·(e^{Bx} − 1)
    pub fn shifted_exponential(a: f64, b: f64) -> Self {
        Self::new(move |x| a * (b * x).exp_m1())
            .with_first(move |x| a * b * (b * x).exp())
            .with_second(move |x| a * b * b * (b * x).exp())
    }

    /// λ^{-n}(λ² − 1/λ), the unit-modulus neo-Hookean uniaxial stress.
    pub fn neo_hookean(measure: StressMeasure) -> Self {
        Self::new(move |l| neo_hookean_sigma_n(l, measure).unwrap_or(f64::NAN))
            .with_first(move |l| neo_hookean_sigma_n_derivatives(l, measure).map(|d| d.0).unwrap_or(f64::NAN))
            .with_second(move |l| neo_hookean_sigma_n_derivatives(l, measure).map(|d| d.1).unwrap_or(f64::NAN))
    }

    /// Incompressible uniaxial first PK stress P(λ) of a material.
    pub fn uniaxial(material: Material) -> Self {
        Self::new(move |l| material.uniaxial_pk1(l).unwrap_or(f64::NAN))
            .with_first(move |l| material.uniaxial_pk1_slope(l).unwrap_or(f64::NAN))
            .with_second(move |l| material.uniaxial_pk1_curvature(l).unwrap_or(f64::NAN))
    }
}

/// Residual transformation applied to a scalar function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transform {
    Identity,
    Log,
    /// T(y) = arctan(scale·y)
    Arctan { scale: f64 },
}

impl Transform {
    /// arctan(y/β) with β = √β².
    pub fn arctan_with_beta_sq(beta_sq: f64) -> Self {
        Transform::Arctan { scale: 1.0 / beta_sq.sqrt() }
    }

    fn apply(self, y: f64) -> f64 {
        match self {
            Transform::Identity => y,
            Transform::Log => {
                if y > 0.0 {
                    y.ln()
                } else {
                    f64::NAN
                }
            }
            Transform::Arctan { scale } => (scale * y).atan(),
        }
    }

    fn d1(self, y: f64) -> f64 {
        match self {
            Transform::Identity => 1.0,
            Transform::Log => {
                if y > 0.0 {
                    1.0 / y
                } else {
                    f64::NAN
                }
            }
            Transform::Arctan { scale } => scale / (1.0 + (scale * y).powi(2)),
        }
    }

    fn d2(self, y: f64) -> f64 {
        match self {
            Transform::Identity => 0.0,
            Transform::Log => {
                if y > 0.0 {
                    -1.0 / (y * y)
                } else {
                    f64::NAN
                }
            }
            Transform::Arctan { scale } => {
                let q = 1.0 + (scale * y).powi(2);
                -2.0 * scale.powi(3) * y / (q * q)
            }
        }
    }
}

/// T∘g with chain-rule derivatives. Evaluation outside the domain of T
/// (log of a non-positive value) surfaces as `DomainViolation`.
pub fn transformed_function(g: &ScalarFunction, t: Transform) -> ScalarFunction {
    if t == Transform::Identity {
        return g.clone();
    }
    let (gv, g1, g2) = (g.clone(), g.clone(), g.clone());
    ScalarFunction::new(move |x| gv.value(x).map(|y| t.apply(y)).unwrap_or(f64::NAN))
        .with_first(move |x| match (g1.value(x), g1.first(x)) {
            (Ok(y), Ok(dy)) => t.d1(y) * dy,
            _ => f64::NAN,
        })
        .with_second(move |x| match (g2.value(x), g2.first(x), g2.second(x)) {
            (Ok(y), Ok(dy), Ok(ddy)) => t.d2(y) * dy * dy + t.d1(y) * ddy,
            _ => f64::NAN,
        })
}

fn checked_first(g: &ScalarFunction, xn: f64) -> Result<f64> {
    let d = g.first(xn)?;
    let scale = g.value(xn)?.abs().max(1.0);
    if d.abs() < 1e-14 * scale {
        return Err(Error::VanishingDerivative { x: xn, value: d });
    }
    Ok(d)
}

/// C̄(xₙ) = |g''(xₙ) / (2 g'(xₙ))|.
pub fn local_nonlinearity(g: &ScalarFunction, xn: f64) -> Result<f64> {
    let d1 = checked_first(g, xn)?;
    Ok((g.second(xn)? / (2.0 * d1)).abs())
}

/// N(xₙ, x*) = sup over ζ between xₙ and x* of |g''(ζ) / (2 g'(xₙ))|,
/// approximated on `samples` uniformly spaced points including both ends.
pub fn sup_nonlinearity(g: &ScalarFunction, xn: f64, x_star: f64, samples: usize) -> Result<f64> {
    Ok(nonlinearity_report(g, xn, x_star, samples)?.supremum)
}

/// Local and supremum measures together with the ζ grid used.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearityReport {
    pub local: f64,
    pub supremum: f64,
    pub zeta: Vec<f64>,
}

pub fn nonlinearity_report(g: &ScalarFunction, xn: f64, x_star: f64, samples: usize) -> Result<NonlinearityReport> {
    if xn == x_star {
        return Err(Error::DomainViolation("x_n and x_star coincide".into()));
    }
    if samples < 2 {
        return Err(Error::DomainViolation("at least two samples are required".into()));
    }
    let d1 = checked_first(g, xn)?;
    let denom = (2.0 * d1).abs();
    let local = (g.second(xn)? / denom).abs();
    let step = (x_star - xn) / (samples - 1) as f64;
    let zeta: Vec<f64> = (0..samples)
        .map(|k| if k + 1 == samples { x_star } else { xn + k as f64 * step })
        .collect();
    let mut supremum = 0.0f64;
    for &z in &zeta {
        supremum = supremum.max(g.second(z)?.abs() / denom);
    }
    Ok(NonlinearityReport { local, supremum, zeta })
}

/// Boolean matrix over (xₙ, x*) marking where the untransformed equation has
/// the smaller supremum measure. Rows follow `xn_grid`, columns `x_grid`.
/// Cells where either measure is undefined (coincident points, domain errors,
/// vanishing derivatives) are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRegion {
    pub x: Vec<f64>,
    pub xn: Vec<f64>,
    pub cells: Vec<Vec<Option<bool>>>,
}

impl ComparisonRegion {
    /// Fraction of all cells marked true.
    pub fn true_fraction(&self) -> f64 {
        let total = self.x.len() * self.xn.len();
        let hits = self.cells.iter().flatten().filter(|c| **c == Some(true)).count();
        hits as f64 / total as f64
    }
}

pub fn comparison_region(
    g: &ScalarFunction,
    t: Transform,
    x_grid: &[f64],
    xn_grid: &[f64],
    samples: usize,
) -> ComparisonRegion {
    let tg = transformed_function(g, t);
    let cells = xn_grid
        .par_iter()
        .map(|&xn| {
            x_grid
                .iter()
                .map(|&x| {
                    let standard = sup_nonlinearity(g, xn, x, samples).ok()?;
                    let transformed = sup_nonlinearity(&tg, xn, x, samples).ok()?;
                    Some(standard < transformed)
                })
                .collect()
        })
        .collect();
    ComparisonRegion { x: x_grid.to_vec(), xn: xn_grid.to_vec(), cells }
}

/// Cell-centred uniform grid of `n` points on (lo, hi).
pub fn midpoint_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64).collect()
}
