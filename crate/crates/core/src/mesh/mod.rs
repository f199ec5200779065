//! Triangle meshes, geometric precomputation and periodic boundary pairing.

mod generate;
mod obj;
mod periodic;

pub use generate::{cylinder_strip, grid, tube};
pub use obj::{load_obj, parse_obj, write_obj};
pub use periodic::{build_periodic_map, PeriodicAxis, PeriodicMap, PeriodicPair};

use crate::error::{Error, Result};
use crate::Vec3;

/// Smallest admissible triangle area in m².
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

/// An undirected edge with `v[0] < v[1]` and up to two incident triangles.
///
/// `opposite[k]` is the vertex of `faces[k]` not on the edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub v: [usize; 2],
    pub faces: [Option<usize>; 2],
    pub opposite: [Option<usize>; 2],
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.faces[1].is_none()
    }
}

/// Immutable triangle surface with edge and adjacency tables.
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    vertex_edges: Vec<Vec<usize>>,
    boundary: Vec<bool>,
}

impl TriMesh {
    /// Builds and validates a mesh.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            for &i in tri {
                if i >= n {
                    return Err(Error::IndexOutOfRange { triangle: t, index: i as i64 });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::DegenerateTriangle { triangle: t, area: 0.0 });
            }
            let area = triangle_area(&vertices, tri);
            if !(area > MIN_TRIANGLE_AREA) {
                return Err(Error::DegenerateTriangle { triangle: t, area });
            }
        }

        let mut keyed: Vec<((usize, usize), usize, usize)> = Vec::with_capacity(3 * triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                let opp = tri[(k + 2) % 3];
                keyed.push(((a.min(b), a.max(b)), t, opp));
            }
        }
        keyed.sort_unstable();

        let mut edges: Vec<Edge> = Vec::new();
        for (key, t, opp) in keyed {
            match edges.last_mut() {
                Some(e) if e.v == [key.0, key.1] => {
                    if e.faces[1].is_some() {
                        return Err(Error::NonManifoldEdge(key.0, key.1));
                    }
                    e.faces[1] = Some(t);
                    e.opposite[1] = Some(opp);
                }
                _ => edges.push(Edge {
                    v: [key.0, key.1],
                    faces: [Some(t), None],
                    opposite: [Some(opp), None],
                }),
            }
        }

        let mut vertex_edges = vec![Vec::new(); n];
        let mut boundary = vec![false; n];
        for (ei, e) in edges.iter().enumerate() {
            vertex_edges[e.v[0]].push(ei);
            vertex_edges[e.v[1]].push(ei);
            if e.is_boundary() {
                boundary[e.v[0]] = true;
                boundary[e.v[1]] = true;
            }
        }

        Ok(Self { vertices, triangles, edges, vertex_edges, boundary })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Vec3 {
        self.vertices[i]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Indices into [`edges`](Self::edges) incident to vertex `i`, in edge-table order.
    pub fn vertex_edges(&self, i: usize) -> &[usize] {
        &self.vertex_edges[i]
    }

    pub fn is_boundary_vertex(&self, i: usize) -> bool {
        self.boundary[i]
    }

    pub fn boundary_vertices(&self) -> Vec<usize> {
        (0..self.num_vertices()).filter(|&i| self.boundary[i]).collect()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        triangle_area(&self.vertices, &self.triangles[t])
    }

    /// Unit normal of triangle `t` following its vertex winding.
    pub fn triangle_normal(&self, t: usize) -> Vec3 {
        self.area_vector(t).normalize()
    }

    /// Cross product of two triangle edges (twice the area times the normal).
    fn area_vector(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.triangles[t];
        let p = &self.vertices;
        (p[b] - p[a]).cross(&(p[c] - p[a]))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn mean_edge_length(&self) -> f64 {
        let sum: f64 = self
            .edges
            .iter()
            .map(|e| (self.vertices[e.v[1]] - self.vertices[e.v[0]]).norm())
            .sum();
        sum / self.edges.len().max(1) as f64
    }

    /// Area-weighted vertex normals.
    pub fn vertex_normals(&self) -> Result<Vec<Vec3>> {
        let mut acc = vec![Vec3::zeros(); self.num_vertices()];
        for (t, tri) in self.triangles.iter().enumerate() {
            let n = self.area_vector(t);
            for &i in tri {
                acc[i] += n;
            }
        }
        acc.into_iter()
            .enumerate()
            .map(|(i, n)| {
                let len = n.norm();
                if len <= f64::EPSILON * self.local_scale(i) {
                    Err(Error::ZeroNormal(i))
                } else {
                    Ok(n / len)
                }
            })
            .collect()
    }

    fn local_scale(&self, i: usize) -> f64 {
        self.vertex_edges[i]
            .iter()
            .map(|&e| {
                let e = &self.edges[e];
                (self.vertices[e.v[1]] - self.vertices[e.v[0]]).norm_squared()
            })
            .fold(0.0, f64::max)
    }

    /// Per-edge cotangent weights `½ Σ cot(opposite angle)`, clamped below at 0.
    pub fn cotan_edge_weights(&self) -> Vec<f64> {
        self.edges
            .iter()
            .map(|e| {
                let [i, j] = e.v;
                let sum: f64 = e
                    .opposite
                    .iter()
                    .flatten()
                    .map(|&k| {
                        let a = self.vertices[i] - self.vertices[k];
                        let b = self.vertices[j] - self.vertices[k];
                        a.dot(&b) / a.cross(&b).norm()
                    })
                    .sum();
                (0.5 * sum).max(0.0)
            })
            .collect()
    }

    /// One-third of the summed incident triangle areas per vertex.
    pub fn lumped_vertex_areas(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.num_vertices()];
        for (t, tri) in self.triangles.iter().enumerate() {
            let a = self.triangle_area(t) / 3.0;
            for &i in tri {
                m[i] += a;
            }
        }
        m
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for p in &self.vertices {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo, hi)
    }
}

fn triangle_area(p: &[Vec3], tri: &[usize; 3]) -> f64 {
    0.5 * (p[tri[1]] - p[tri[0]]).cross(&(p[tri[2]] - p[tri[0]])).norm()
}
