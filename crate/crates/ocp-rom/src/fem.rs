//! Finite element spaces and assembly on the reference mesh.
//!
//! Scalar P1, scalar P2 and vector P2 spaces on triangles, with
//! parameter-independent mass, stiffness (with a constant per-subdomain
//! metric carrying the geometric trace-back), advection, divergence and
//! boundary mass operators, plus Dirichlet lifting.
//!
//! Vector dofs are blocked component-major: dof = component * n_scalar + node.

use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, Mesh};
use crate::sparse::SparseOperator;
use std::collections::HashMap;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementOrder {
    P1,
    P2,
}

/// Triangle quadrature rule on the reference element (weights sum to 1/2).
#[derive(Debug, Clone, Copy)]
struct TriRule {
    points: &'static [([f64; 2], f64)],
}

/// Edge-midpoint rule, exact for degree 2.
const TRI_DEG2: TriRule = TriRule {
    points: &[
        ([0.5, 0.0], 1.0 / 6.0),
        ([0.0, 0.5], 1.0 / 6.0),
        ([0.5, 0.5], 1.0 / 6.0),
    ],
};

/// Six-point rule, exact for degree 4.
const TRI_DEG4: TriRule = TriRule {
    points: &[
        ([0.445948490915965, 0.445948490915965], 0.223381589678011 / 2.0),
        ([0.108103018168070, 0.445948490915965], 0.223381589678011 / 2.0),
        ([0.445948490915965, 0.108103018168070], 0.223381589678011 / 2.0),
        ([0.091576213509771, 0.091576213509771], 0.109951743655322 / 2.0),
        ([0.816847572980459, 0.091576213509771], 0.109951743655322 / 2.0),
        ([0.091576213509771, 0.816847572980459], 0.109951743655322 / 2.0),
    ],
};

/// Gauss points on [0, 1] as (point, weight).
const EDGE_G2: [(f64, f64); 2] = [
    (0.5 - 0.288675134594812_9, 0.5),
    (0.5 + 0.288675134594812_9, 0.5),
];
const EDGE_G3: [(f64, f64); 3] = [
    (0.5 - 0.387298334620741_7, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.5 + 0.387298334620741_7, 5.0 / 18.0),
];

/// Values and reference gradients of the local scalar basis at (xi, eta).
fn shape_functions(order: ElementOrder, xi: f64, eta: f64, val: &mut [f64; 6], grad: &mut [[f64; 2]; 6]) -> usize {
    let l0 = 1.0 - xi - eta;
    match order {
        ElementOrder::P1 => {
            val[..3].copy_from_slice(&[l0, xi, eta]);
            grad[..3].copy_from_slice(&[[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]);
            3
        }
        ElementOrder::P2 => {
            let (l1, l2) = (xi, eta);
            *val = [
                l0 * (2.0 * l0 - 1.0),
                l1 * (2.0 * l1 - 1.0),
                l2 * (2.0 * l2 - 1.0),
                4.0 * l0 * l1,
                4.0 * l1 * l2,
                4.0 * l2 * l0,
            ];
            let (g0, g1, g2) = ([-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]);
            let d = |a: [f64; 2], s: f64| [a[0] * s, a[1] * s];
            let add = |a: [f64; 2], b: [f64; 2]| [a[0] + b[0], a[1] + b[1]];
            *grad = [
                d(g0, 4.0 * l0 - 1.0),
                d(g1, 4.0 * l1 - 1.0),
                d(g2, 4.0 * l2 - 1.0),
                add(d(g0, 4.0 * l1), d(g1, 4.0 * l0)),
                add(d(g1, 4.0 * l2), d(g2, 4.0 * l1)),
                add(d(g2, 4.0 * l0), d(g0, 4.0 * l2)),
            ];
            6
        }
    }
}

/// A finalized finite element space.
#[derive(Debug, Clone)]
pub struct FunctionSpace {
    pub mesh: Arc<Mesh>,
    pub order: ElementOrder,
    pub components: usize,
    /// Scalar dof count (vertices for P1, vertices + edge midpoints for P2).
    pub n_scalar: usize,
    /// Scalar node ids per triangle (3 or 6, local P2 order: vertices then
    /// midpoints of edges (0,1), (1,2), (2,0)).
    pub cell_dofs: Vec<Vec<usize>>,
    /// Coordinates of every scalar dof.
    pub node_coords: Vec<[f64; 2]>,
    /// For P2: scalar node id of each mesh edge keyed by sorted vertex pair.
    edge_nodes: HashMap<(usize, usize), usize>,
}

impl FunctionSpace {
    pub fn new(mesh: Arc<Mesh>, order: ElementOrder, components: usize) -> Self {
        assert!(components == 1 || components == 2);
        let nv = mesh.n_vertices();
        let mut edge_nodes = HashMap::new();
        let mut node_coords = mesh.vertices.clone();
        let mut cell_dofs = Vec::with_capacity(mesh.n_triangles());
        match order {
            ElementOrder::P1 => {
                for tri in &mesh.triangles {
                    cell_dofs.push(tri.to_vec());
                }
            }
            ElementOrder::P2 => {
                for tri in &mesh.triangles {
                    let mut dofs = tri.to_vec();
                    for (a, b) in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])] {
                        let key = (a.min(b), a.max(b));
                        let next = nv + edge_nodes.len();
                        let id = *edge_nodes.entry(key).or_insert_with(|| {
                            let va = mesh.vertices[a];
                            let vb = mesh.vertices[b];
                            node_coords.push([(va[0] + vb[0]) / 2.0, (va[1] + vb[1]) / 2.0]);
                            next
                        });
                        dofs.push(id);
                    }
                    cell_dofs.push(dofs);
                }
            }
        }
        let n_scalar = node_coords.len();
        Self { mesh, order, components, n_scalar, cell_dofs, node_coords, edge_nodes }
    }

    pub fn n_dofs(&self) -> usize {
        self.components * self.n_scalar
    }

    pub fn dof(&self, component: usize, node: usize) -> usize {
        component * self.n_scalar + node
    }

    /// Scalar nodes lying on a boundary facet (vertex endpoints, plus the
    /// midpoint for P2).
    pub fn facet_nodes(&self, a: usize, b: usize) -> Vec<usize> {
        match self.order {
            ElementOrder::P1 => vec![a, b],
            ElementOrder::P2 => {
                let mid = self.edge_nodes[&(a.min(b), a.max(b))];
                vec![a, b, mid]
            }
        }
    }

    /// Sorted scalar node ids on all facets with the given tag.
    pub fn boundary_nodes(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut nodes: Vec<usize> = self
            .mesh
            .boundary_facets
            .iter()
            .filter(|(_, _, t)| *t == tag)
            .flat_map(|&(a, b, _)| self.facet_nodes(a, b))
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }

    /// Nodal interpolation of `f(x, component)`.
    pub fn interpolate(&self, f: &dyn Fn([f64; 2], usize) -> f64) -> Vec<f64> {
        let mut v = vec![0.0; self.n_dofs()];
        for comp in 0..self.components {
            for (node, &x) in self.node_coords.iter().enumerate() {
                v[self.dof(comp, node)] = f(x, comp);
            }
        }
        v
    }

    fn rule(&self) -> TriRule {
        match self.order {
            ElementOrder::P1 => TRI_DEG2,
            ElementOrder::P2 => TRI_DEG4,
        }
    }

    fn cells_in(&self, subdomain: Option<u32>) -> Result<Vec<usize>> {
        match subdomain {
            None => Ok((0..self.mesh.n_triangles()).collect()),
            Some(id) => {
                if !self.mesh.subdomain_ids().contains(&id) {
                    return Err(Error::UnknownSubdomain(id));
                }
                Ok((0..self.mesh.n_triangles())
                    .filter(|&t| self.mesh.subdomain_tags[t] == id)
                    .collect())
            }
        }
    }
}

struct CellGeometry {
    det: f64, // twice the area
    jinv_t: [[f64; 2]; 2],
}

fn cell_geometry(mesh: &Mesh, t: usize) -> CellGeometry {
    let [a, b, c] = mesh.triangles[t].map(|v| mesh.vertices[v]);
    let j = [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let jinv = [[j[1][1] / det, -j[0][1] / det], [-j[1][0] / det, j[0][0] / det]];
    CellGeometry { det, jinv_t: [[jinv[0][0], jinv[1][0]], [jinv[0][1], jinv[1][1]]] }
}

fn physical_point(mesh: &Mesh, t: usize, xi: f64, eta: f64) -> [f64; 2] {
    let [a, b, c] = mesh.triangles[t].map(|v| mesh.vertices[v]);
    [
        a[0] + (b[0] - a[0]) * xi + (c[0] - a[0]) * eta,
        a[1] + (b[1] - a[1]) * xi + (c[1] - a[1]) * eta,
    ]
}

fn push_forward(g: &CellGeometry, grad_ref: [f64; 2]) -> [f64; 2] {
    [
        g.jinv_t[0][0] * grad_ref[0] + g.jinv_t[0][1] * grad_ref[1],
        g.jinv_t[1][0] * grad_ref[0] + g.jinv_t[1][1] * grad_ref[1],
    ]
}

/// Mass matrix over the given subdomain (all subdomains when `None`).
/// Block diagonal over components for vector spaces.
pub fn assemble_mass(space: &FunctionSpace, subdomain: Option<u32>) -> Result<SparseOperator> {
    let rule = space.rule();
    let mut trips = Vec::new();
    let mut val = [0.0; 6];
    let mut grad = [[0.0; 2]; 6];
    for t in space.cells_in(subdomain)? {
        let g = cell_geometry(&space.mesh, t);
        let dofs = &space.cell_dofs[t];
        let n = dofs.len();
        let mut local = [[0.0; 6]; 6];
        for &([xi, eta], w) in rule.points {
            shape_functions(space.order, xi, eta, &mut val, &mut grad);
            for i in 0..n {
                for j in 0..n {
                    local[i][j] += w * g.det * val[i] * val[j];
                }
            }
        }
        for comp in 0..space.components {
            for i in 0..n {
                for j in 0..n {
                    trips.push((space.dof(comp, dofs[i]), space.dof(comp, dofs[j]), local[i][j]));
                }
            }
        }
    }
    Ok(SparseOperator::from_triplets(space.n_dofs(), space.n_dofs(), &trips))
}

fn check_metric(metric: [[f64; 2]; 2]) -> Result<()> {
    if (metric[0][1] - metric[1][0]).abs() > 1e-12 {
        return Err(Error::NonSpdMetric);
    }
    // symmetric 2x2: eigenvalues nonnegative iff trace >= 0 and det >= 0
    let tr = metric[0][0] + metric[1][1];
    let det = metric[0][0] * metric[1][1] - metric[0][1] * metric[1][0];
    if tr < -1e-14 || det < -1e-14 {
        return Err(Error::NonSpdMetric);
    }
    Ok(())
}

/// Stiffness matrix `K_ij = ∫ (metric ∇φ_j) · ∇φ_i` over the subdomain.
///
/// The metric carries the pulled-back diffusion tensor
/// `det(J) J⁻¹ J⁻ᵀ` of the subdomain map; it must be symmetric positive
/// semidefinite (semidefinite metrics arise from the per-axis affine split).
pub fn assemble_stiffness(
    space: &FunctionSpace,
    subdomain: Option<u32>,
    metric: [[f64; 2]; 2],
) -> Result<SparseOperator> {
    check_metric(metric)?;
    let rule = space.rule();
    let mut trips = Vec::new();
    let mut val = [0.0; 6];
    let mut grad = [[0.0; 2]; 6];
    for t in space.cells_in(subdomain)? {
        let g = cell_geometry(&space.mesh, t);
        let dofs = &space.cell_dofs[t];
        let n = dofs.len();
        let mut local = [[0.0; 6]; 6];
        for &([xi, eta], w) in rule.points {
            shape_functions(space.order, xi, eta, &mut val, &mut grad);
            let gp: Vec<[f64; 2]> = (0..n).map(|i| push_forward(&g, grad[i])).collect();
            for i in 0..n {
                for j in 0..n {
                    let mg = [
                        metric[0][0] * gp[j][0] + metric[0][1] * gp[j][1],
                        metric[1][0] * gp[j][0] + metric[1][1] * gp[j][1],
                    ];
                    local[i][j] += w * g.det * (mg[0] * gp[i][0] + mg[1] * gp[i][1]);
                }
            }
        }
        for comp in 0..space.components {
            for i in 0..n {
                for j in 0..n {
                    trips.push((space.dof(comp, dofs[i]), space.dof(comp, dofs[j]), local[i][j]));
                }
            }
        }
    }
    Ok(SparseOperator::from_triplets(space.n_dofs(), space.n_dofs(), &trips))
}

/// Advection matrix `A_ij = ∫ (velocity · ∇φ_j) φ_i` for scalar spaces.
/// Uses the degree-4 rule so that a quadratic velocity profile against P1
/// products is integrated exactly.
pub fn assemble_advection(
    space: &FunctionSpace,
    velocity: &dyn Fn([f64; 2]) -> [f64; 2],
    subdomain: Option<u32>,
) -> Result<SparseOperator> {
    assert_eq!(space.components, 1, "advection assembly is scalar");
    let rule = TRI_DEG4;
    let mut trips = Vec::new();
    let mut val = [0.0; 6];
    let mut grad = [[0.0; 2]; 6];
    for t in space.cells_in(subdomain)? {
        let g = cell_geometry(&space.mesh, t);
        let dofs = &space.cell_dofs[t];
        let n = dofs.len();
        let mut local = [[0.0; 6]; 6];
        for &([xi, eta], w) in rule.points {
            shape_functions(space.order, xi, eta, &mut val, &mut grad);
            let v = velocity(physical_point(&space.mesh, t, xi, eta));
            let gp: Vec<[f64; 2]> = (0..n).map(|i| push_forward(&g, grad[i])).collect();
            for i in 0..n {
                for j in 0..n {
                    local[i][j] += w * g.det * (v[0] * gp[j][0] + v[1] * gp[j][1]) * val[i];
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                trips.push((dofs[i], dofs[j], local[i][j]));
            }
        }
    }
    Ok(SparseOperator::from_triplets(space.n_dofs(), space.n_dofs(), &trips))
}

/// One component of the divergence coupling:
/// `D_ij = -∫ ψ_i ∂Φ_j/∂x_comp` over the velocity dofs of that component.
/// Shape is (pressure dofs × velocity dofs); columns of the other component
/// are zero.
pub fn assemble_divergence_component(
    velocity_space: &FunctionSpace,
    pressure_space: &FunctionSpace,
    comp: usize,
) -> Result<SparseOperator> {
    if !Arc::ptr_eq(&velocity_space.mesh, &pressure_space.mesh) {
        return Err(Error::ShapeMismatch("velocity and pressure spaces on different meshes".into()));
    }
    assert_eq!(velocity_space.components, 2);
    assert_eq!(pressure_space.components, 1);
    let rule = TRI_DEG4;
    let mut trips = Vec::new();
    let (mut vval, mut vgrad) = ([0.0; 6], [[0.0; 2]; 6]);
    let (mut pval, mut pgrad) = ([0.0; 6], [[0.0; 2]; 6]);
    for t in 0..velocity_space.mesh.n_triangles() {
        let g = cell_geometry(&velocity_space.mesh, t);
        let vdofs = &velocity_space.cell_dofs[t];
        let pdofs = &pressure_space.cell_dofs[t];
        let mut local = [[0.0; 6]; 6];
        for &([xi, eta], w) in rule.points {
            let nv = shape_functions(velocity_space.order, xi, eta, &mut vval, &mut vgrad);
            let np = shape_functions(pressure_space.order, xi, eta, &mut pval, &mut pgrad);
            for i in 0..np {
                for j in 0..nv {
                    let dj = push_forward(&g, vgrad[j]);
                    local[i][j] -= w * g.det * pval[i] * dj[comp];
                }
            }
        }
        for (i, &pi) in pdofs.iter().enumerate() {
            for (j, &vj) in vdofs.iter().enumerate() {
                trips.push((pi, velocity_space.dof(comp, vj), local[i][j]));
            }
        }
    }
    Ok(SparseOperator::from_triplets(
        pressure_space.n_dofs(),
        velocity_space.n_dofs(),
        &trips,
    ))
}

/// Full divergence coupling `D_ij = -∫ ψ_i div(Φ_j)`.
pub fn assemble_divergence(
    velocity_space: &FunctionSpace,
    pressure_space: &FunctionSpace,
) -> Result<SparseOperator> {
    let dx = assemble_divergence_component(velocity_space, pressure_space, 0)?;
    let dy = assemble_divergence_component(velocity_space, pressure_space, 1)?;
    SparseOperator::linear_combination(&[(1.0, &dx), (1.0, &dy)])
}

/// Boundary mass `(M_Γ)_ij = ∫_Γ φ_i φ_j` over facets with the given tag.
pub fn assemble_boundary_mass(space: &FunctionSpace, tag: BoundaryTag) -> Result<SparseOperator> {
    let facets: Vec<_> = space
        .mesh
        .boundary_facets
        .iter()
        .filter(|(_, _, t)| *t == tag)
        .cloned()
        .collect();
    let mut trips = Vec::new();
    for (a, b, _) in facets {
        let nodes = space.facet_nodes(a, b);
        let (pa, pb) = (space.mesh.vertices[a], space.mesh.vertices[b]);
        let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
        let shape = |s: f64| -> Vec<f64> {
            match space.order {
                ElementOrder::P1 => vec![1.0 - s, s],
                ElementOrder::P2 => {
                    vec![(1.0 - s) * (1.0 - 2.0 * s), s * (2.0 * s - 1.0), 4.0 * s * (1.0 - s)]
                }
            }
        };
        let rule: &[(f64, f64)] = match space.order {
            ElementOrder::P1 => &EDGE_G2,
            ElementOrder::P2 => &EDGE_G3,
        };
        let n = nodes.len();
        let mut local = vec![vec![0.0; n]; n];
        for &(s, w) in rule {
            let v = shape(s);
            for i in 0..n {
                for j in 0..n {
                    local[i][j] += w * len * v[i] * v[j];
                }
            }
        }
        for comp in 0..space.components {
            for i in 0..n {
                for j in 0..n {
                    trips.push((space.dof(comp, nodes[i]), space.dof(comp, nodes[j]), local[i][j]));
                }
            }
        }
    }
    Ok(SparseOperator::from_triplets(space.n_dofs(), space.n_dofs(), &trips))
}

/// Linear functional `b_i = ∫ f φ_i` over the subdomain.
pub fn assemble_functional(
    space: &FunctionSpace,
    subdomain: Option<u32>,
    f: &dyn Fn([f64; 2], usize) -> f64,
) -> Result<Vec<f64>> {
    let rule = space.rule();
    let mut out = vec![0.0; space.n_dofs()];
    let mut val = [0.0; 6];
    let mut grad = [[0.0; 2]; 6];
    for t in space.cells_in(subdomain)? {
        let g = cell_geometry(&space.mesh, t);
        let dofs = &space.cell_dofs[t];
        let n = dofs.len();
        for &([xi, eta], w) in rule.points {
            shape_functions(space.order, xi, eta, &mut val, &mut grad);
            let x = physical_point(&space.mesh, t, xi, eta);
            for comp in 0..space.components {
                let fx = f(x, comp);
                for i in 0..n {
                    out[space.dof(comp, dofs[i])] += w * g.det * fx * val[i];
                }
            }
        }
    }
    Ok(out)
}

/// Boundary data for a lifting: tags in priority order (first wins at shared
/// corner dofs) with their value functions `f(x, component)`.
pub type BoundaryValues<'a> = [(BoundaryTag, &'a dyn Fn([f64; 2], usize) -> f64)];

/// Interpolate Dirichlet data into a lift vector and return the free dofs.
///
/// The lift is zero at free dofs; `free_dofs` is the sorted complement of
/// all constrained dofs. With `ordered = false`, a dof claimed by two tags
/// with different values is an error instead of being resolved by priority.
pub fn dirichlet_lifting(
    space: &FunctionSpace,
    values: &BoundaryValues,
    ordered: bool,
) -> Result<(Vec<f64>, Vec<usize>)> {
    let mut lift = vec![0.0; space.n_dofs()];
    let mut owner: Vec<Option<usize>> = vec![None; space.n_dofs()];
    for (pri, (tag, f)) in values.iter().enumerate() {
        for node in space.boundary_nodes(*tag) {
            for comp in 0..space.components {
                let dof = space.dof(comp, node);
                let v = f(space.node_coords[node], comp);
                match owner[dof] {
                    None => {
                        owner[dof] = Some(pri);
                        lift[dof] = v;
                    }
                    Some(prev) if prev != pri => {
                        if !ordered && (lift[dof] - v).abs() > 1e-14 {
                            return Err(Error::ConflictingDirichlet {
                                dof,
                                a: values[prev].0.name().into(),
                                b: tag.name().into(),
                            });
                        }
                        // priority order: the earlier tag keeps the dof
                    }
                    _ => {}
                }
            }
        }
    }
    let free_dofs: Vec<usize> =
        (0..space.n_dofs()).filter(|&d| owner[d].is_none()).collect();
    Ok((lift, free_dofs))
}
