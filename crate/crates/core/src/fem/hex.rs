//! Trilinear hexahedron with 2×2×2 Gauss quadrature.

use crate::error::{Error, Result};
use crate::kinematics::{det3, inverse3, Tensor2};

/// Reference coordinates of the eight corners, bottom face first,
/// counter-clockwise when viewed from +ζ.
pub const CORNERS: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

pub const GAUSS_1D: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];

pub fn shape(xi: [f64; 3]) -> [f64; 8] {
    let mut n = [0.0; 8];
    for (a, c) in CORNERS.iter().enumerate() {
        n[a] = 0.125 * (1.0 + c[0] * xi[0]) * (1.0 + c[1] * xi[1]) * (1.0 + c[2] * xi[2]);
    }
    n
}

pub fn shape_derivatives(xi: [f64; 3]) -> [[f64; 3]; 8] {
    let mut d = [[0.0; 3]; 8];
    for (a, c) in CORNERS.iter().enumerate() {
        let f = [1.0 + c[0] * xi[0], 1.0 + c[1] * xi[1], 1.0 + c[2] * xi[2]];
        d[a] = [
            0.125 * c[0] * f[1] * f[2],
            0.125 * f[0] * c[1] * f[2],
            0.125 * f[0] * f[1] * c[2],
        ];
    }
    d
}

pub fn gauss_points() -> impl Iterator<Item = [f64; 3]> {
    GAUSS_1D.into_iter().flat_map(|z| {
        GAUSS_1D.into_iter().flat_map(move |y| GAUSS_1D.into_iter().map(move |x| [x, y, z]))
    })
}

/// Reference-configuration data at one Gauss point.
#[derive(Debug, Clone)]
pub struct HexGaussPoint {
    /// ∇_X N_a for each corner.
    pub grad: [[f64; 3]; 8],
    /// Quadrature weight times det(∂X/∂ξ).
    pub weight: f64,
    pub position: [f64; 3],
}

pub fn reference_gauss_points(coords: &[[f64; 3]; 8], element: usize) -> Result<Vec<HexGaussPoint>> {
    gauss_points()
        .map(|xi| {
            let dn = shape_derivatives(xi);
            let n = shape(xi);
            let mut jac = Tensor2::zeros();
            let mut position = [0.0; 3];
            for a in 0..8 {
                for i in 0..3 {
                    position[i] += n[a] * coords[a][i];
                    for j in 0..3 {
                        jac[(i, j)] += coords[a][i] * dn[a][j];
                    }
                }
            }
            let det = det3(&jac);
            if !(det > 0.0) {
                return Err(Error::InvalidProblem(format!(
                    "element {element} has non-positive reference Jacobian {det:e}"
                )));
            }
            let jinv = inverse3(&jac).expect("non-singular reference Jacobian");
            let mut grad = [[0.0; 3]; 8];
            for a in 0..8 {
                for j in 0..3 {
                    grad[a][j] = (0..3).map(|k| dn[a][k] * jinv[(k, j)]).sum();
                }
            }
            Ok(HexGaussPoint { grad, weight: det, position })
        })
        .collect()
}

/// Consistent nodal forces of a surface load on a bilinear quadrilateral
/// face with corners in cyclic order. `traction(area_vector)` returns the
/// force per unit (η, ζ) parameter area given the area vector t₁ × t₂.
pub fn face_forces(corners: &[[f64; 3]; 4], traction: impl Fn([f64; 3]) -> [f64; 3]) -> [[f64; 3]; 4] {
    const SIGNS: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
    let mut out = [[0.0; 3]; 4];
    for s in GAUSS_1D {
        for t in GAUSS_1D {
            let mut n = [0.0; 4];
            let mut t1 = [0.0; 3];
            let mut t2 = [0.0; 3];
            for a in 0..4 {
                let (sa, ta) = (SIGNS[a][0], SIGNS[a][1]);
                n[a] = 0.25 * (1.0 + sa * s) * (1.0 + ta * t);
                let ds = 0.25 * sa * (1.0 + ta * t);
                let dt = 0.25 * (1.0 + sa * s) * ta;
                for i in 0..3 {
                    t1[i] += ds * corners[a][i];
                    t2[i] += dt * corners[a][i];
                }
            }
            let area = [
                t1[1] * t2[2] - t1[2] * t2[1],
                t1[2] * t2[0] - t1[0] * t2[2],
                t1[0] * t2[1] - t1[1] * t2[0],
            ];
            let f = traction(area);
            for a in 0..4 {
                for i in 0..3 {
                    out[a][i] += n[a] * f[i];
                }
            }
        }
    }
    out
}
