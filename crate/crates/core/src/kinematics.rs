//! Fixed-size 3×3 tensor algebra and deformation measures.
//!
//! All element kinematics (1D, axisymmetric and hexahedral) are expressed
//! through a full 3×3 deformation gradient so the constitutive code has a
//! single entry point.

use nalgebra::{Matrix3, SMatrix, Vector3};

use crate::error::{Error, Result};

/// Second-order tensor in a fixed Cartesian basis.
pub type Tensor2 = Matrix3<f64>;

/// Fourth-order tensor stored as a 9×9 matrix with row index `3*i + J`
/// and column index `3*k + L`, i.e. `A[(3i+J, 3k+L)] = ∂P_iJ/∂F_kL`.
pub type Tensor4 = SMatrix<f64, 9, 9>;

/// First three isotropic invariants of C = FᵀF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Invariants {
    pub i1: f64,
    pub i2: f64,
    /// Volume ratio J = det F.
    pub j: f64,
}

/// F = I + ∇u.
pub fn deformation_gradient(grad_u: &Tensor2) -> Tensor2 {
    Tensor2::identity() + grad_u
}

/// Determinant by cofactor expansion along the first row.
pub fn det3(m: &Tensor2) -> f64 {
    m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
        - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
        + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
}

/// Cofactor matrix, cof(M) = det(M) M^{-T}.
pub fn cofactor3(m: &Tensor2) -> Tensor2 {
    Tensor2::new(
        m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)],
        m[(1, 2)] * m[(2, 0)] - m[(1, 0)] * m[(2, 2)],
        m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)],
        m[(0, 2)] * m[(2, 1)] - m[(0, 1)] * m[(2, 2)],
        m[(0, 0)] * m[(2, 2)] - m[(0, 2)] * m[(2, 0)],
        m[(0, 1)] * m[(2, 0)] - m[(0, 0)] * m[(2, 1)],
        m[(0, 1)] * m[(1, 2)] - m[(0, 2)] * m[(1, 1)],
        m[(0, 2)] * m[(1, 0)] - m[(0, 0)] * m[(1, 2)],
        m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
    )
}

/// Inverse from the cofactor matrix. Returns `None` for a singular tensor.
pub fn inverse3(m: &Tensor2) -> Option<Tensor2> {
    let det = det3(m);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some(cofactor3(m).transpose() / det)
}

/// Right Cauchy-Green tensor C = FᵀF.
pub fn right_cauchy_green(f: &Tensor2) -> Tensor2 {
    f.transpose() * f
}

/// Green-Lagrange strain E = (C − I)/2.
pub fn green_lagrange(f: &Tensor2) -> Tensor2 {
    0.5 * (right_cauchy_green(f) - Tensor2::identity())
}

pub fn invariants(f: &Tensor2) -> Result<Invariants> {
    let det = det3(f);
    if !(det > 0.0) {
        return Err(Error::NonPositiveJacobian { det, element: None });
    }
    let c = right_cauchy_green(f);
    let i1 = c.trace();
    let i2 = 0.5 * (i1 * i1 - (c * c).trace());
    // J = sqrt(det C) = det F for det F > 0.
    Ok(Invariants { i1, i2, j: det })
}

/// Stretch λ = √(N·CN) along the reference direction `n`.
pub fn stretch_along(c: &Tensor2, n: &Vector3<f64>) -> Result<f64> {
    let q = n.dot(&(c * n));
    if !(q > 0.0) {
        return Err(Error::NegativeStretch { stretch: q, element: None });
    }
    Ok(q.sqrt())
}

/// Diagonal deformation gradient diag(a, b, c).
pub fn diag(a: f64, b: f64, c: f64) -> Tensor2 {
    Tensor2::from_diagonal(&Vector3::new(a, b, c))
}
