//! Builders for the benchmark problem families.

use std::f64::consts::PI;

use nalgebra::Vector3;

use super::{hex, Family, LoadAxis, Problem};
use crate::error::{Error, Result};
use crate::materials::{Material, MrParams, VwParams};

pub const TUBE_INNER_RADIUS: f64 = 0.7;
pub const TUBE_OUTER_RADIUS: f64 = 1.0;
pub const TUBE_LENGTH: f64 = 5.0;
/// Edge length of the indentation block (10 cm in mm, with stresses in MPa
/// and forces in N).
pub const INDENTATION_EDGE: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadDirection {
    Tension,
    Compression,
}

impl LoadDirection {
    pub fn sign(self) -> f64 {
        match self {
            LoadDirection::Tension => 1.0,
            LoadDirection::Compression => -1.0,
        }
    }
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidProblem(msg()))
    }
}

fn line_mesh(n_elements: usize) -> (Vec<[f64; 3]>, Vec<Vec<usize>>) {
    let nodes = (0..=n_elements).map(|i| [i as f64 / n_elements as f64, 0.0, 0.0]).collect();
    let elements = (0..n_elements).map(|e| vec![e, e + 1]).collect();
    (nodes, elements)
}

/// Unit-length incompressible bar of linear springs with unit cross-section;
/// left end fixed, unit axial force at the right end.
pub fn build_bar_1d(n_elements: usize, material: Material) -> Result<Problem> {
    require(n_elements >= 1, || "bar needs at least one element".into())?;
    let (nodes, elements) = line_mesh(n_elements);
    Problem::new(
        Family::Bar1DIncompressible,
        "bar1d",
        nodes,
        elements,
        material,
        vec![0],
        vec![(n_elements, 1.0)],
        LoadAxis::Fixed(Vector3::x()),
    )
}

/// Unit-length rod of unit radius and unit reference cross-section. DOFs per
/// node: axial displacement and lateral displacement (λ₂ = 1 + w). Left end
/// axially fixed, unit axial force at the right end.
pub fn build_axisymmetric_rod(n_elements: usize, material: Material) -> Result<Problem> {
    require(n_elements >= 1, || "rod needs at least one element".into())?;
    let (nodes, elements) = line_mesh(n_elements);
    Problem::new(
        Family::AxisymmetricRod,
        "axisymmetric",
        nodes,
        elements,
        material,
        vec![0],
        vec![(2 * n_elements, 1.0)],
        LoadAxis::Fixed(Vector3::x()),
    )
}

struct Grid {
    nx: usize,
    ny: usize,
}

impl Grid {
    fn id(&self, i: usize, j: usize, k: usize) -> usize {
        (k * (self.ny + 1) + j) * (self.nx + 1) + i
    }
}

fn brick_mesh(n: usize, edge: f64) -> (Grid, Vec<[f64; 3]>, Vec<Vec<usize>>) {
    let grid = Grid { nx: n, ny: n };
    let h = edge / n as f64;
    let mut nodes = Vec::with_capacity((n + 1).pow(3));
    for k in 0..=n {
        for j in 0..=n {
            for i in 0..=n {
                nodes.push([i as f64 * h, j as f64 * h, k as f64 * h]);
            }
        }
    }
    let mut elements = Vec::with_capacity(n.pow(3));
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                elements.push(
                    hex::CORNERS
                        .iter()
                        .map(|c| {
                            let o = |s: f64| usize::from(s > 0.0);
                            grid.id(i + o(c[0]), j + o(c[1]), k + o(c[2]))
                        })
                        .collect(),
                );
            }
        }
    }
    (grid, nodes, elements)
}

/// Unit cube of n³ hexahedra. Bottom face fixed in z, the x = 0 face fixed
/// in x and the y = 0 face fixed in y. Unit pressure on the top face along
/// ±z, as consistent nodal forces on the reference configuration.
pub fn build_hex_cube(n_per_edge: usize, material: Material, direction: LoadDirection) -> Result<Problem> {
    require(n_per_edge >= 1, || "cube needs at least one element per edge".into())?;
    let n = n_per_edge;
    let (grid, nodes, elements) = brick_mesh(n, 1.0);
    let mut dirichlet = Vec::new();
    for k in 0..=n {
        for j in 0..=n {
            for i in 0..=n {
                let id = grid.id(i, j, k);
                if k == 0 {
                    dirichlet.push(3 * id + 2);
                }
                if i == 0 {
                    dirichlet.push(3 * id);
                }
                if j == 0 {
                    dirichlet.push(3 * id + 1);
                }
            }
        }
    }
    let mut load = vec![0.0; nodes.len()];
    let sign = direction.sign();
    for j in 0..n {
        for i in 0..n {
            let face = [grid.id(i, j, n), grid.id(i + 1, j, n), grid.id(i + 1, j + 1, n), grid.id(i, j + 1, n)];
            let corners = face.map(|id| nodes[id]);
            let f = hex::face_forces(&corners, |a| [0.0, 0.0, sign * norm(a)]);
            for (id, fa) in face.iter().zip(f) {
                load[*id] += fa[2];
            }
        }
    }
    let traction = (0..nodes.len()).filter(|&id| load[id] != 0.0).map(|id| (3 * id + 2, load[id])).collect();
    Problem::new(
        Family::Hex3D,
        "hex_cube",
        nodes,
        elements,
        material,
        dirichlet,
        traction,
        LoadAxis::Fixed(Vector3::z()),
    )
}

fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// Thick-walled tube (inner radius 0.7, outer radius 1, length 5) meshed
/// with `nr × nc × na` hexahedra along radius, circumference and axis. All
/// DOFs fixed at z = 0; unit pressure on the inner surface as consistent
/// nodal forces on the reference configuration.
pub fn build_tube(material: VwParams, nr: usize, nc: usize, na: usize) -> Result<Problem> {
    require(nr >= 1 && nc >= 3 && na >= 1, || format!("tube mesh ({nr}, {nc}, {na}) too coarse"))?;
    let id = |r: usize, c: usize, z: usize| (z * nc + (c % nc)) * (nr + 1) + r;
    let mut nodes = Vec::with_capacity((nr + 1) * nc * (na + 1));
    for z in 0..=na {
        for c in 0..nc {
            let theta = 2.0 * PI * c as f64 / nc as f64;
            for r in 0..=nr {
                let radius = TUBE_INNER_RADIUS + (TUBE_OUTER_RADIUS - TUBE_INNER_RADIUS) * r as f64 / nr as f64;
                nodes.push([radius * theta.cos(), radius * theta.sin(), TUBE_LENGTH * z as f64 / na as f64]);
            }
        }
    }
    let mut elements = Vec::with_capacity(nr * nc * na);
    for z in 0..na {
        for c in 0..nc {
            for r in 0..nr {
                elements.push(
                    hex::CORNERS
                        .iter()
                        .map(|k| {
                            let o = |s: f64| usize::from(s > 0.0);
                            id(r + o(k[0]), c + o(k[1]), z + o(k[2]))
                        })
                        .collect(),
                );
            }
        }
    }
    let dirichlet: Vec<usize> = (0..nc)
        .flat_map(|c| (0..=nr).map(move |r| (r, c)))
        .flat_map(|(r, c)| {
            let n = id(r, c, 0);
            [3 * n, 3 * n + 1, 3 * n + 2]
        })
        .collect();
    let mut load = vec![[0.0; 3]; nodes.len()];
    for z in 0..na {
        for c in 0..nc {
            let face = [id(0, c, z), id(0, c + 1, z), id(0, c + 1, z + 1), id(0, c, z + 1)];
            let corners = face.map(|n| nodes[n]);
            let centre: [f64; 3] = std::array::from_fn(|i| corners.iter().map(|p| p[i]).sum::<f64>() / 4.0);
            let f = hex::face_forces(&corners, |a| {
                // Orient the area vector away from the axis.
                let s = if a[0] * centre[0] + a[1] * centre[1] >= 0.0 { 1.0 } else { -1.0 };
                // Faces run parallel to the axis, so the z part is round-off.
                [s * a[0], s * a[1], 0.0]
            });
            for (n, fa) in face.iter().zip(f) {
                for i in 0..3 {
                    load[*n][i] += fa[i];
                }
            }
        }
    }
    let mut fixed = vec![false; 3 * nodes.len()];
    for &d in &dirichlet {
        fixed[d] = true;
    }
    let traction = (0..nodes.len())
        .flat_map(|n| (0..3).map(move |i| (n, i)))
        .filter(|&(n, i)| load[n][i] != 0.0 && !fixed[3 * n + i])
        .map(|(n, i)| (3 * n + i, load[n][i]))
        .collect();
    Problem::new(
        Family::Hex3D,
        "tube",
        nodes,
        elements,
        Material::VerondaWestmann(material),
        dirichlet,
        traction,
        LoadAxis::Radial,
    )
}

/// Cube of edge [`INDENTATION_EDGE`] with `n_per_edge³` hexahedra, bottom
/// face fully fixed. Downward load on the top-face elements whose centres
/// lie in the centred square covering `patch_fraction` of the face; the
/// pattern sums to a unit total force.
pub fn build_indentation(material: MrParams, n_per_edge: usize, patch_fraction: f64) -> Result<Problem> {
    require(n_per_edge >= 3, || "indentation needs at least 3 elements per edge".into())?;
    require(patch_fraction > 0.0 && patch_fraction < 1.0, || format!("patch fraction {patch_fraction} outside (0, 1)"))?;
    let n = n_per_edge;
    let (grid, nodes, elements) = brick_mesh(n, INDENTATION_EDGE);
    let h = INDENTATION_EDGE / n as f64;
    let half = 0.5 * patch_fraction.sqrt() * INDENTATION_EDGE;
    let mid = 0.5 * INDENTATION_EDGE;
    let mut dirichlet = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            let id = grid.id(i, j, 0);
            dirichlet.extend([3 * id, 3 * id + 1, 3 * id + 2]);
        }
    }
    let mut load = vec![0.0; nodes.len()];
    for j in 0..n {
        for i in 0..n {
            let (cx, cy) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            if (cx - mid).abs() >= half || (cy - mid).abs() >= half {
                continue;
            }
            let face = [grid.id(i, j, n), grid.id(i + 1, j, n), grid.id(i + 1, j + 1, n), grid.id(i, j + 1, n)];
            let corners = face.map(|id| nodes[id]);
            let f = hex::face_forces(&corners, |a| [0.0, 0.0, -norm(a)]);
            for (id, fa) in face.iter().zip(f) {
                load[*id] += fa[2];
            }
        }
    }
    let total: f64 = load.iter().sum::<f64>().abs();
    require(total > 0.0, || format!("patch fraction {patch_fraction} covers no element face"))?;
    let traction = (0..nodes.len()).filter(|&id| load[id] != 0.0).map(|id| (3 * id + 2, load[id] / total)).collect();
    Problem::new(
        Family::Hex3D,
        "indentation",
        nodes,
        elements,
        Material::MooneyRivlin(material),
        dirichlet,
        traction,
        LoadAxis::Fixed(Vector3::z()),
    )
}

/// Area of the loaded patch actually covered by element faces.
pub fn indentation_patch_area(n_per_edge: usize, patch_fraction: f64) -> f64 {
    let h = INDENTATION_EDGE / n_per_edge as f64;
    let half = 0.5 * patch_fraction.sqrt() * INDENTATION_EDGE;
    let mid = 0.5 * INDENTATION_EDGE;
    let inside = (0..n_per_edge).filter(|&i| ((i as f64 + 0.5) * h - mid).abs() < half).count();
    (inside as f64 * h).powi(2)
}
