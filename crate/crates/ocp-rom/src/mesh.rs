//! Structured triangulations of the two reference domains and the affine
//! subdomain maps realizing the geometric parametrization.
//!
//! Both benchmark geometries are meshed on their reference configuration
//! (criss-cross split of a structured rectangle grid). Geometry parameters
//! never deform the stored mesh; they only change the per-subdomain affine
//! maps, so assembly always happens on the reference triangulation with
//! transformed coefficients.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Benchmark geometry selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseId {
    Graetz,
    StokesCavity,
}

impl CaseId {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "graetz" => Ok(CaseId::Graetz),
            "stokes_cavity" => Ok(CaseId::StokesCavity),
            other => Err(Error::UnknownCase(other.into())),
        }
    }

    /// Admissible parameter box, one (lo, hi) pair per component.
    pub fn parameter_box(self) -> Vec<(f64, f64)> {
        match self {
            // (diffusivity, desired profile, horizontal stretch)
            CaseId::Graetz => vec![(1.0 / 20.0, 1.0 / 6.0), (1.0, 3.0), (0.5, 3.0)],
            // (diffusivity, horizontal stretch)
            CaseId::StokesCavity => vec![(1e-3, 1e-1), (0.5, 2.5)],
        }
    }

    pub fn contains(self, mu: &[f64]) -> bool {
        let b = self.parameter_box();
        mu.len() == b.len() && mu.iter().zip(&b).all(|(m, (lo, hi))| *m >= *lo && *m <= *hi)
    }

    pub fn check_parameter(self, mu: &[f64]) -> Result<()> {
        if self.contains(mu) {
            Ok(())
        } else {
            Err(Error::ParameterOutsideBox(mu.to_vec()))
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CaseId::Graetz => "graetz",
            CaseId::StokesCavity => "stokes_cavity",
        }
    }
}

/// Boundary portions of the two reference domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryTag {
    /// Dirichlet portion (Graetz inlet and first-block walls; Stokes walls).
    GammaD,
    /// Graetz control boundary: bottom and top of the stretched block.
    GammaC,
    /// Graetz outflow (right edge, homogeneous Neumann).
    GammaN,
    /// Stokes lid inlet, the top edge.
    GammaIn,
}

impl BoundaryTag {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryTag::GammaD => "gamma_d",
            BoundaryTag::GammaC => "gamma_c",
            BoundaryTag::GammaN => "gamma_n",
            BoundaryTag::GammaIn => "gamma_in",
        }
    }
}

/// Triangulation with boundary and subdomain tags. Immutable after
/// construction.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    /// Boundary edges as (vertex, vertex, tag); vertex pairs are oriented
    /// along the boundary but treated as unordered.
    pub boundary_facets: Vec<(usize, usize, BoundaryTag)>,
    /// Subdomain id per triangle (1-based).
    pub subdomain_tags: Vec<u32>,
}

pub fn triangle_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_vertices(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn area(&self) -> f64 {
        (0..self.n_triangles())
            .map(|t| {
                let [a, b, c] = self.triangle_vertices(t);
                triangle_area(a, b, c)
            })
            .sum()
    }

    /// Reference area of one subdomain.
    pub fn subdomain_area(&self, id: u32) -> f64 {
        (0..self.n_triangles())
            .filter(|&t| self.subdomain_tags[t] == id)
            .map(|t| {
                let [a, b, c] = self.triangle_vertices(t);
                triangle_area(a, b, c)
            })
            .sum()
    }

    pub fn subdomain_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.subdomain_tags.clone();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    fn validate(&self) -> Result<()> {
        for t in 0..self.n_triangles() {
            let [a, b, c] = self.triangle_vertices(t);
            if triangle_area(a, b, c) <= 0.0 {
                return Err(Error::Numerical(format!("triangle {t} has non-positive area")));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for &(a, b, _) in &self.boundary_facets {
            let key = (a.min(b), a.max(b));
            if !seen.insert(key) {
                return Err(Error::Numerical(format!("boundary edge {key:?} tagged twice")));
            }
        }
        if self.subdomain_tags.len() != self.n_triangles() {
            return Err(Error::Numerical("subdomain tags do not cover all triangles".into()));
        }
        Ok(())
    }

    /// Copy of the mesh with vertices moved by the per-subdomain maps.
    /// Only used by oracles and plotting; assembly stays on the reference
    /// mesh.
    pub fn deformed(&self, maps: &[GeometricMap]) -> Mesh {
        let mut vertex_sub = vec![0u32; self.n_vertices()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                vertex_sub[v] = self.subdomain_tags[t];
            }
        }
        let vertices = self
            .vertices
            .iter()
            .zip(&vertex_sub)
            .map(|(&v, &sub)| {
                let map = maps
                    .iter()
                    .find(|m| m.subdomain_id == sub)
                    .expect("map for every subdomain");
                map.apply(v)
            })
            .collect();
        Mesh { vertices, ..self.clone() }
    }

    /// Plain-text export: `v x y`, `t a b c subdomain`, `b a b tag` records.
    pub fn export_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# vertices {} triangles {}", self.n_vertices(), self.n_triangles())?;
        for v in &self.vertices {
            writeln!(w, "v {:.17e} {:.17e}", v[0], v[1])?;
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            writeln!(w, "t {} {} {} {}", tri[0], tri[1], tri[2], self.subdomain_tags[t])?;
        }
        for &(a, b, tag) in &self.boundary_facets {
            writeln!(w, "b {} {} {}", a, b, tag.name())?;
        }
        Ok(())
    }
}

/// Affine map of one subdomain from the reference configuration to the
/// deformed one: `x -> linear_part * x + offset`.
#[derive(Debug, Clone, Copy)]
pub struct GeometricMap {
    pub subdomain_id: u32,
    pub linear_part: [[f64; 2]; 2],
    pub offset: [f64; 2],
    pub jacobian_det: f64,
}

impl GeometricMap {
    fn new(subdomain_id: u32, linear_part: [[f64; 2]; 2], offset: [f64; 2]) -> Self {
        let det = linear_part[0][0] * linear_part[1][1] - linear_part[0][1] * linear_part[1][0];
        assert!(det > 0.0, "geometric map must be orientation preserving");
        Self { subdomain_id, linear_part, offset, jacobian_det: det }
    }

    fn identity(subdomain_id: u32) -> Self {
        Self::new(subdomain_id, [[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0])
    }

    pub fn apply(&self, x: [f64; 2]) -> [f64; 2] {
        [
            self.linear_part[0][0] * x[0] + self.linear_part[0][1] * x[1] + self.offset[0],
            self.linear_part[1][0] * x[0] + self.linear_part[1][1] * x[1] + self.offset[1],
        ]
    }

    pub fn apply_inverse(&self, y: [f64; 2]) -> [f64; 2] {
        let d = self.jacobian_det;
        let rhs = [y[0] - self.offset[0], y[1] - self.offset[1]];
        [
            (self.linear_part[1][1] * rhs[0] - self.linear_part[0][1] * rhs[1]) / d,
            (-self.linear_part[1][0] * rhs[0] + self.linear_part[0][0] * rhs[1]) / d,
        ]
    }
}

fn check_gridline(value: f64, cells: usize, length: f64, axis: char, nx: usize, ny: usize) -> Result<()> {
    let steps = value * cells as f64 / length;
    if (steps - steps.round()).abs() > 1e-12 {
        Err(Error::InterfaceMisaligned { nx, ny, axis, coord: value })
    } else {
        Ok(())
    }
}

/// Structured criss-cross triangulation of either reference domain.
///
/// `nx`, `ny` are the cell counts of the underlying rectangle grid; for the
/// Graetz case `nx` spans both blocks `[0,1]` and `[1,2]`. Subdomain
/// interfaces must land on grid lines, otherwise the call is rejected.
pub fn build_structured_mesh(case_id: CaseId, nx: usize, ny: usize) -> Result<Mesh> {
    if nx < 2 || ny < 2 {
        return Err(Error::Config(format!("mesh resolution too small: ({nx}, {ny})")));
    }
    let (lx, ly) = match case_id {
        CaseId::Graetz => (2.0, 1.0),
        CaseId::StokesCavity => (1.0, 1.0),
    };
    if case_id == CaseId::Graetz {
        check_gridline(1.0, nx, lx, 'x', nx, ny)?;
        check_gridline(0.2, ny, ly, 'y', nx, ny)?;
        check_gridline(0.8, ny, ly, 'y', nx, ny)?;
    }

    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([lx * i as f64 / nx as f64, ly * j as f64 / ny as f64]);
        }
    }

    let mut triangles = Vec::with_capacity(2 * nx * ny);
    let mut subdomain_tags = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10) = (vid(i, j), vid(i + 1, j));
            let (v01, v11) = (vid(i, j + 1), vid(i + 1, j + 1));
            // criss-cross split along the cell diagonal
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
            let cx = lx * (i as f64 + 0.5) / nx as f64;
            let cy = ly * (j as f64 + 0.5) / ny as f64;
            let tag = match case_id {
                CaseId::StokesCavity => 1,
                CaseId::Graetz => {
                    if cx < 1.0 {
                        1
                    } else if cy > 0.2 && cy < 0.8 {
                        2
                    } else {
                        3
                    }
                }
            };
            subdomain_tags.push(tag);
            subdomain_tags.push(tag);
        }
    }

    let mut boundary_facets = Vec::new();
    let mid = |a: [f64; 2], b: [f64; 2]| [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
    let tag_of = |m: [f64; 2]| -> BoundaryTag {
        match case_id {
            CaseId::StokesCavity => {
                if m[1] >= 1.0 - 1e-12 {
                    BoundaryTag::GammaIn
                } else {
                    BoundaryTag::GammaD
                }
            }
            CaseId::Graetz => {
                if m[0] <= 1e-12 {
                    BoundaryTag::GammaD // inlet
                } else if m[0] >= 2.0 - 1e-12 {
                    BoundaryTag::GammaN // outflow
                } else if m[0] < 1.0 {
                    BoundaryTag::GammaD // first-block walls
                } else {
                    BoundaryTag::GammaC // control walls of the stretched block
                }
            }
        }
    };
    for i in 0..nx {
        let (a, b) = (vid(i, 0), vid(i + 1, 0));
        boundary_facets.push((a, b, tag_of(mid(vertices[a], vertices[b]))));
        let (a, b) = (vid(i, ny), vid(i + 1, ny));
        boundary_facets.push((a, b, tag_of(mid(vertices[a], vertices[b]))));
    }
    for j in 0..ny {
        let (a, b) = (vid(0, j), vid(0, j + 1));
        boundary_facets.push((a, b, tag_of(mid(vertices[a], vertices[b]))));
        let (a, b) = (vid(nx, j), vid(nx, j + 1));
        boundary_facets.push((a, b, tag_of(mid(vertices[a], vertices[b]))));
    }

    let mesh = Mesh { vertices, triangles, boundary_facets, subdomain_tags };
    mesh.validate()?;
    Ok(mesh)
}

/// Per-subdomain affine maps at the given parameter point.
///
/// Graetz: identity on the first block, horizontal stretch
/// `x -> 1 + mu3 (x - 1)` on the other two. Stokes: horizontal stretch of
/// the unit square by `mu2`.
pub fn subdomain_maps(case_id: CaseId, mu: &[f64]) -> Result<Vec<GeometricMap>> {
    case_id.check_parameter(mu)?;
    Ok(match case_id {
        CaseId::Graetz => {
            let mu3 = mu[2];
            let stretch =
                |id| GeometricMap::new(id, [[mu3, 0.0], [0.0, 1.0]], [1.0 - mu3, 0.0]);
            vec![GeometricMap::identity(1), stretch(2), stretch(3)]
        }
        CaseId::StokesCavity => {
            let mu2 = mu[1];
            vec![GeometricMap::new(1, [[mu2, 0.0], [0.0, 1.0]], [0.0, 0.0])]
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn smallest_stokes_grid() {
        let mesh = build_structured_mesh(CaseId::StokesCavity, 2, 2).unwrap();
        assert_eq!(mesh.n_triangles(), 8);
        assert_eq!(mesh.n_vertices(), 9);
        let inlet: Vec<_> = mesh
            .boundary_facets
            .iter()
            .filter(|(_, _, t)| *t == BoundaryTag::GammaIn)
            .collect();
        assert_eq!(inlet.len(), 2);
        for (a, b, _) in inlet {
            assert!(mesh.vertices[*a][1] == 1.0 && mesh.vertices[*b][1] == 1.0);
        }
    }

    #[test]
    fn graetz_subdomains_partition() {
        let mesh = build_structured_mesh(CaseId::Graetz, 20, 10).unwrap();
        assert_eq!(mesh.n_triangles(), 2 * 20 * 10);
        assert_eq!(mesh.subdomain_ids(), vec![1, 2, 3]);
        assert_relative_eq!(mesh.subdomain_area(1), 1.0, epsilon = 1e-12);
        assert_relative_eq!(mesh.subdomain_area(2), 0.6, epsilon = 1e-12);
        assert_relative_eq!(mesh.subdomain_area(3), 0.4, epsilon = 1e-12);
    }

    #[test]
    fn graetz_rejects_misaligned_interfaces() {
        // ny = 4 cannot place y = 0.2 on a grid line
        let err = build_structured_mesh(CaseId::Graetz, 10, 4).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("0.2"), "message should name the interface: {msg}");
        // odd nx cannot place x = 1
        assert!(build_structured_mesh(CaseId::Graetz, 9, 5).is_err());
    }

    #[test]
    fn maps_identity_at_reference() {
        let maps = subdomain_maps(CaseId::Graetz, &[0.1, 2.0, 1.0]).unwrap();
        for m in &maps {
            assert_eq!(m.linear_part, [[1.0, 0.0], [0.0, 1.0]]);
            assert_eq!(m.offset, [0.0, 0.0]);
            assert_eq!(m.jacobian_det, 1.0);
        }
    }

    #[test]
    fn graetz_stretch_jacobians() {
        let maps = subdomain_maps(CaseId::Graetz, &[1.0 / 12.0, 2.0, 2.5]).unwrap();
        assert_eq!(maps[0].jacobian_det, 1.0);
        assert_eq!(maps[1].jacobian_det, 2.5);
        assert_eq!(maps[2].jacobian_det, 2.5);
        // interface x = 1 is fixed
        assert_eq!(maps[1].apply([1.0, 0.3]), [1.0, 0.3]);
        assert_eq!(maps[1].apply([2.0, 0.3]), [3.5, 0.3]);
    }

    #[test]
    fn map_inverse_roundtrip() {
        let maps = subdomain_maps(CaseId::StokesCavity, &[0.01, 1.5]).unwrap();
        let p = [0.3, 0.7];
        let q = maps[0].apply_inverse(maps[0].apply(p));
        assert_relative_eq!(q[0], p[0], epsilon = 1e-12);
        assert_relative_eq!(q[1], p[1], epsilon = 1e-12);
    }

    #[test]
    fn deformed_area_matches_jacobians() {
        let mesh = build_structured_mesh(CaseId::StokesCavity, 4, 4).unwrap();
        let maps = subdomain_maps(CaseId::StokesCavity, &[0.01, 0.5]).unwrap();
        let deformed = mesh.deformed(&maps);
        assert_relative_eq!(deformed.area(), 0.5, epsilon = 1e-12);
        let maps = subdomain_maps(CaseId::Graetz, &[0.1, 2.0, 3.0]).unwrap();
        let mesh = build_structured_mesh(CaseId::Graetz, 10, 5).unwrap();
        let total: f64 = maps
            .iter()
            .map(|m| m.jacobian_det * mesh.subdomain_area(m.subdomain_id))
            .sum();
        assert_relative_eq!(mesh.deformed(&maps).area(), total, epsilon = 1e-12);
    }

    #[test]
    fn out_of_box_parameter_rejected() {
        assert!(subdomain_maps(CaseId::Graetz, &[0.3, 2.0, 1.0]).is_err());
        assert!(subdomain_maps(CaseId::StokesCavity, &[0.01]).is_err());
    }
}
