//! Total Lagrangian finite-element problems: mesh, DOF map, boundary
//! conditions, and assembly of internal force and tangent stiffness.
//!
//! External loads act on the reference configuration (no follower terms),
//! so Kᵉˣᵗ = 0 and only the internal stiffness is assembled.

mod builders;
pub mod hex;

use std::fmt::Write as _;

use nalgebra::Vector3;
use rayon::prelude::*;

pub use builders::{
    build_axisymmetric_rod, build_bar_1d, build_hex_cube, build_indentation, build_tube, indentation_patch_area,
    LoadDirection,
    INDENTATION_EDGE, TUBE_INNER_RADIUS, TUBE_LENGTH, TUBE_OUTER_RADIUS,
};

use crate::error::{Error, Result};
use crate::kinematics::{diag, right_cauchy_green, stretch_along, Tensor2};
use crate::materials::Material;
use crate::sparse::{CsrMatrix, SkylineLayout};
use hex::HexGaussPoint;

/// Two-point Gauss abscissae on (0, 1) for linear elements.
const LINE_GAUSS: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Incompressible springs, one axial DOF per node, P(λ) in closed form.
    Bar1DIncompressible,
    /// Axial displacement and lateral displacement per node, F = diag(λ₁, λ₂, λ₂).
    AxisymmetricRod,
    /// Trilinear hexahedra, three displacement DOFs per node.
    Hex3D,
}

/// Direction along which Gauss-point stretches are recorded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoadAxis {
    Fixed(Vector3<f64>),
    /// Radial direction about the z axis at the Gauss point's reference position.
    Radial,
}

#[derive(Debug, Clone)]
enum ElementGeometry {
    Line { length: f64 },
    Hex(Vec<HexGaussPoint>),
}

/// An immutable boundary-value problem.
#[derive(Debug, Clone)]
pub struct Problem {
    family: Family,
    name: String,
    nodes: Vec<[f64; 3]>,
    elements: Vec<Vec<usize>>,
    material: Material,
    dofs_per_node: usize,
    dirichlet: Vec<usize>,
    traction: Vec<(usize, f64)>,
    load_axis: LoadAxis,
    free_index: Vec<Option<usize>>,
    free_dofs: Vec<usize>,
    traction_free: Vec<usize>,
    traction_nodes: Vec<usize>,
    node_elements: Vec<Vec<usize>>,
    geometry: Vec<ElementGeometry>,
    pattern: CsrMatrix,
    scatter: Vec<Vec<u32>>,
    layout: SkylineLayout,
}

/// Tangent stiffness, forces and recorded stretches at one state.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub k: CsrMatrix,
    pub f_int: Vec<f64>,
    pub f_ext: Vec<f64>,
    /// Load-axis stretch at every Gauss point, per element.
    pub gauss_stretches: Vec<Vec<f64>>,
}

impl AssembledSystem {
    /// fᵉˣᵗ − fⁱⁿᵗ on the free DOFs.
    pub fn residual(&self) -> Vec<f64> {
        self.f_ext.iter().zip(&self.f_int).map(|(e, i)| e - i).collect()
    }
}

struct ElementResponse {
    force: Vec<f64>,
    stiffness: Vec<f64>,
    stretches: Vec<f64>,
}

const NONE: u32 = u32::MAX;

impl Problem {
    /// Validates and indexes a problem definition. Dirichlet DOFs are fixed
    /// at zero; `traction` pairs a global DOF with its unit load pattern.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        family: Family,
        name: impl Into<String>,
        nodes: Vec<[f64; 3]>,
        elements: Vec<Vec<usize>>,
        material: Material,
        dirichlet: Vec<usize>,
        traction: Vec<(usize, f64)>,
        load_axis: LoadAxis,
    ) -> Result<Self> {
        let (dofs_per_node, nodes_per_element) = match family {
            Family::Bar1DIncompressible => (1, 2),
            Family::AxisymmetricRod => (2, 2),
            Family::Hex3D => (3, 8),
        };
        let n_dofs = nodes.len() * dofs_per_node;
        for (e, conn) in elements.iter().enumerate() {
            if conn.len() != nodes_per_element || conn.iter().any(|&n| n >= nodes.len()) {
                return Err(Error::InvalidProblem(format!("element {e} has invalid connectivity {conn:?}")));
            }
        }
        let mut fixed = vec![false; n_dofs];
        for &d in &dirichlet {
            if d >= n_dofs {
                return Err(Error::InvalidProblem(format!("Dirichlet DOF {d} out of range")));
            }
            fixed[d] = true;
        }
        let mut dirichlet: Vec<usize> = dirichlet;
        dirichlet.sort_unstable();
        dirichlet.dedup();
        for &(d, _) in &traction {
            if d >= n_dofs || fixed[d] {
                return Err(Error::InvalidProblem(format!("traction DOF {d} is fixed or out of range")));
            }
        }

        let mut free_index = vec![None; n_dofs];
        let mut free_dofs = Vec::new();
        for d in 0..n_dofs {
            if !fixed[d] {
                free_index[d] = Some(free_dofs.len());
                free_dofs.push(d);
            }
        }
        let traction_free: Vec<usize> = traction.iter().map(|&(d, _)| free_index[d].unwrap()).collect();
        let mut traction_nodes: Vec<usize> = traction.iter().map(|&(d, _)| d / dofs_per_node).collect();
        traction_nodes.sort_unstable();
        traction_nodes.dedup();

        let mut node_elements = vec![Vec::new(); nodes.len()];
        for (e, conn) in elements.iter().enumerate() {
            for &n in conn {
                node_elements[n].push(e);
            }
        }

        let geometry = elements
            .iter()
            .enumerate()
            .map(|(e, conn)| match family {
                Family::Hex3D => {
                    let coords: [[f64; 3]; 8] = std::array::from_fn(|a| nodes[conn[a]]);
                    hex::reference_gauss_points(&coords, e).map(ElementGeometry::Hex)
                }
                _ => {
                    let (a, b) = (nodes[conn[0]], nodes[conn[1]]);
                    let length = b[0] - a[0];
                    if length > 0.0 {
                        Ok(ElementGeometry::Line { length })
                    } else {
                        Err(Error::InvalidProblem(format!("element {e} has non-positive length {length}")))
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;

        let local_dofs = |conn: &[usize]| -> Vec<Option<usize>> {
            conn.iter()
                .flat_map(|&n| (0..dofs_per_node).map(move |c| n * dofs_per_node + c))
                .map(|d| free_index[d])
                .collect()
        };
        let mut rows = vec![Vec::new(); free_dofs.len()];
        for conn in &elements {
            let loc: Vec<usize> = local_dofs(conn).into_iter().flatten().collect();
            for &i in &loc {
                rows[i].extend_from_slice(&loc);
            }
        }
        let pattern = CsrMatrix::from_pattern(free_dofs.len(), rows);
        let scatter = elements
            .iter()
            .map(|conn| {
                let loc = local_dofs(conn);
                let mut s = Vec::with_capacity(loc.len() * loc.len());
                for i in &loc {
                    for j in &loc {
                        s.push(match (i, j) {
                            (Some(i), Some(j)) => pattern.position(*i, *j).unwrap() as u32,
                            _ => NONE,
                        });
                    }
                }
                s
            })
            .collect();
        let layout = SkylineLayout::new(&pattern);

        Ok(Self {
            family,
            name: name.into(),
            nodes,
            elements,
            material,
            dofs_per_node,
            dirichlet,
            traction,
            load_axis,
            free_index,
            free_dofs,
            traction_free,
            traction_nodes,
            node_elements,
            geometry,
            pattern,
            scatter,
            layout,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }

    pub fn elements(&self) -> &[Vec<usize>] {
        &self.elements
    }

    pub fn material(&self) -> &Material {
        &self.material
    }

    pub fn dofs_per_node(&self) -> usize {
        self.dofs_per_node
    }

    pub fn n_free(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn dirichlet(&self) -> &[usize] {
        &self.dirichlet
    }

    /// (global DOF, unit load pattern) pairs.
    pub fn traction(&self) -> &[(usize, f64)] {
        &self.traction
    }

    /// Free-vector index of each traction DOF, in `traction()` order.
    pub fn traction_free_dofs(&self) -> &[usize] {
        &self.traction_free
    }

    pub fn traction_nodes(&self) -> &[usize] {
        &self.traction_nodes
    }

    pub fn free_index(&self, global_dof: usize) -> Option<usize> {
        self.free_index[global_dof]
    }

    /// Global DOF of each free index.
    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    pub fn node_elements(&self, node: usize) -> &[usize] {
        &self.node_elements[node]
    }

    pub fn layout(&self) -> &SkylineLayout {
        &self.layout
    }

    /// Free indices of every DOF of the given nodes, sorted.
    pub fn node_subset_dofs(&self, nodes: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = nodes
            .iter()
            .flat_map(|&n| (0..self.dofs_per_node).map(move |c| n * self.dofs_per_node + c))
            .filter_map(|d| self.free_index[d])
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Full nodal displacement vector with zeros at Dirichlet DOFs.
    pub fn expand(&self, u_free: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.nodes.len() * self.dofs_per_node];
        for (i, &d) in self.free_dofs.iter().enumerate() {
            full[d] = u_free[i];
        }
        full
    }

    /// Displacement of `node` as a 3-vector (1D and axisymmetric DOFs map to
    /// axial and lateral components).
    pub fn node_displacement(&self, u_free: &[f64], node: usize) -> [f64; 3] {
        let get = |c: usize| self.free_index[node * self.dofs_per_node + c].map_or(0.0, |i| u_free[i]);
        match self.dofs_per_node {
            1 => [get(0), 0.0, 0.0],
            2 => [get(0), get(1), 0.0],
            _ => [get(0), get(1), get(2)],
        }
    }

    /// Unit load pattern on the free DOFs.
    pub fn load_pattern(&self) -> Vec<f64> {
        let mut f = vec![0.0; self.n_free()];
        for (&(_, p), &i) in self.traction.iter().zip(&self.traction_free) {
            f[i] += p;
        }
        f
    }

    /// Plain-text node and element listing.
    pub fn mesh_listing(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {} ({:?}) nodes={} elements={}", self.name, self.family, self.nodes.len(), self.elements.len());
        for (i, p) in self.nodes.iter().enumerate() {
            let _ = writeln!(s, "node {i} {} {} {}", p[0], p[1], p[2]);
        }
        for (e, conn) in self.elements.iter().enumerate() {
            let ids: Vec<String> = conn.iter().map(|n| n.to_string()).collect();
            let _ = writeln!(s, "element {e} {}", ids.join(" "));
        }
        s
    }

    fn element_dofs(&self, e: usize) -> impl Iterator<Item = Option<usize>> + '_ {
        self.elements[e]
            .iter()
            .flat_map(move |&n| (0..self.dofs_per_node).map(move |c| n * self.dofs_per_node + c))
            .map(|d| self.free_index[d])
    }

    fn element_response(&self, e: usize, u_full: &[f64]) -> Result<ElementResponse> {
        let conn = &self.elements[e];
        let tag = |err: Error| match err {
            Error::NonPositiveJacobian { det, .. } => Error::NonPositiveJacobian { det, element: Some(e) },
            Error::NegativeStretch { stretch, .. } => Error::NegativeStretch { stretch, element: Some(e) },
            other => other,
        };
        match (&self.geometry[e], self.family) {
            (ElementGeometry::Line { length }, Family::Bar1DIncompressible) => {
                let stretch = 1.0 + (u_full[conn[1]] - u_full[conn[0]]) / length;
                let p = self.material.uniaxial_pk1(stretch).map_err(tag)?;
                let k = self.material.uniaxial_pk1_slope(stretch).map_err(tag)? / length;
                // P is constant over the element, so the two-point rule is exact.
                Ok(ElementResponse {
                    force: vec![-p, p],
                    stiffness: vec![k, -k, -k, k],
                    stretches: vec![stretch; LINE_GAUSS.len()],
                })
            }
            (ElementGeometry::Line { length }, Family::AxisymmetricRod) => {
                let l = *length;
                let (ua, wa, ub, wb) = (u_full[2 * conn[0]], u_full[2 * conn[0] + 1], u_full[2 * conn[1]], u_full[2 * conn[1] + 1]);
                let axial = 1.0 + (ub - ua) / l;
                if !(axial > 0.0) {
                    return Err(Error::NegativeStretch { stretch: axial, element: Some(e) });
                }
                let mut force = vec![0.0; 4];
                let mut stiffness = vec![0.0; 16];
                let mut stretches = Vec::with_capacity(2);
                for s in LINE_GAUSS {
                    let (na, nb) = (1.0 - s, s);
                    let lateral = 1.0 + na * wa + nb * wb;
                    if !(lateral > 0.0) {
                        return Err(Error::NegativeStretch { stretch: lateral, element: Some(e) });
                    }
                    let (p, a) = self.material.stress_and_tangent(&diag(axial, lateral, lateral)).map_err(tag)?;
                    let w = 0.5 * l;
                    let b1 = [-1.0 / l, 0.0, 1.0 / l, 0.0];
                    let b2 = [0.0, na, 0.0, nb];
                    // W(λ₁, λ₂): ∂W/∂λ₂ = P₂₂ + P₃₃.
                    let s1 = p[(0, 0)];
                    let s2 = p[(1, 1)] + p[(2, 2)];
                    let k11 = a[(0, 0)];
                    let k12 = a[(0, 4)] + a[(0, 8)];
                    let k22 = a[(4, 4)] + a[(4, 8)] + a[(8, 4)] + a[(8, 8)];
                    for i in 0..4 {
                        force[i] += w * (s1 * b1[i] + s2 * b2[i]);
                        for j in 0..4 {
                            stiffness[4 * i + j] += w
                                * (k11 * b1[i] * b1[j]
                                    + k12 * (b1[i] * b2[j] + b2[i] * b1[j])
                                    + k22 * b2[i] * b2[j]);
                        }
                    }
                    stretches.push(axial);
                }
                Ok(ElementResponse { force, stiffness, stretches })
            }
            (ElementGeometry::Hex(gps), _) => {
                let mut force = vec![0.0; 24];
                let mut stiffness = vec![0.0; 576];
                let mut stretches = Vec::with_capacity(gps.len());
                for gp in gps {
                    let mut f = Tensor2::identity();
                    for (a, &n) in conn.iter().enumerate() {
                        for i in 0..3 {
                            for j in 0..3 {
                                f[(i, j)] += u_full[3 * n + i] * gp.grad[a][j];
                            }
                        }
                    }
                    let (p, at) = self.material.stress_and_tangent(&f).map_err(tag)?;
                    let axis = match self.load_axis {
                        LoadAxis::Fixed(v) => v,
                        LoadAxis::Radial => Vector3::new(gp.position[0], gp.position[1], 0.0).normalize(),
                    };
                    stretches.push(stretch_along(&right_cauchy_green(&f), &axis).map_err(tag)?);
                    let w = gp.weight;
                    for a in 0..8 {
                        let ga = gp.grad[a];
                        // m[i][k][l] = Σ_J ∇N_a,J A_iJkL
                        let mut m = [[[0.0; 3]; 3]; 3];
                        for i in 0..3 {
                            force[3 * a + i] += w * (p[(i, 0)] * ga[0] + p[(i, 1)] * ga[1] + p[(i, 2)] * ga[2]);
                            for k in 0..3 {
                                for l in 0..3 {
                                    let c = 3 * k + l;
                                    m[i][k][l] = ga[0] * at[(3 * i, c)] + ga[1] * at[(3 * i + 1, c)] + ga[2] * at[(3 * i + 2, c)];
                                }
                            }
                        }
                        for b in 0..8 {
                            let gb = gp.grad[b];
                            for i in 0..3 {
                                let row = (3 * a + i) * 24 + 3 * b;
                                for k in 0..3 {
                                    let mk = m[i][k];
                                    stiffness[row + k] += w * (mk[0] * gb[0] + mk[1] * gb[1] + mk[2] * gb[2]);
                                }
                            }
                        }
                    }
                }
                Ok(ElementResponse { force, stiffness, stretches })
            }
            (ElementGeometry::Line { .. }, Family::Hex3D) => unreachable!("line geometry in hex problem"),
        }
    }
}

/// Assembles K, fⁱⁿᵗ and fᵉˣᵗ = load · pattern at the free displacement `u`.
pub fn assemble(problem: &Problem, u: &[f64], load: f64) -> Result<AssembledSystem> {
    if u.len() != problem.n_free() {
        return Err(Error::InvalidProblem(format!("displacement has {} entries, expected {}", u.len(), problem.n_free())));
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidProblem("non-finite displacement".into()));
    }
    let u_full = problem.expand(u);
    let responses: Vec<Result<ElementResponse>> = (0..problem.elements.len())
        .into_par_iter()
        .map(|e| problem.element_response(e, &u_full))
        .collect();

    let mut k = problem.pattern.clone();
    let mut f_int = vec![0.0; problem.n_free()];
    let mut gauss_stretches = Vec::with_capacity(responses.len());
    // Serial reduction in element order keeps the result independent of the
    // thread count.
    for (e, r) in responses.into_iter().enumerate() {
        let r = r?;
        let dofs: Vec<Option<usize>> = problem.element_dofs(e).collect();
        for (i, d) in dofs.iter().enumerate() {
            if let Some(d) = d {
                f_int[*d] += r.force[i];
            }
        }
        let values = k.values_mut();
        for (pos, v) in problem.scatter[e].iter().zip(&r.stiffness) {
            if *pos != NONE {
                values[*pos as usize] += v;
            }
        }
        gauss_stretches.push(r.stretches);
    }
    let f_ext = problem.load_pattern().into_iter().map(|p| p * load).collect();
    Ok(AssembledSystem { k, f_int, f_ext, gauss_stretches })
}
