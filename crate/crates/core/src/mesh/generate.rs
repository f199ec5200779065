//! Structured test and benchmark meshes.

use super::TriMesh;
use crate::error::{Error, Result};
use crate::Vec3;

fn quads(nu: usize, nv: usize, wrap_u: bool) -> Vec<[usize; 3]> {
    let cols = if wrap_u { nu } else { nu + 1 };
    let id = |i: usize, j: usize| (i % cols) + j * cols;
    let mut t = Vec::with_capacity(2 * nu * nv);
    for j in 0..nv {
        for i in 0..nu {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            t.push([a, b, c]);
            t.push([a, c, d]);
        }
    }
    t
}

/// `nx × ny` rectangle grid on `[0, lx] × [0, ly]` in the z = 0 plane,
/// each cell split along its (0,0)–(1,1) diagonal. Vertex `(i, j)` has
/// index `i + j·(nx+1)`.
pub fn grid(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<TriMesh> {
    if nx == 0 || ny == 0 || !(lx > 0.0) || !(ly > 0.0) {
        return Err(Error::InvalidInput("grid needs positive size and resolution".into()));
    }
    let mut v = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            v.push(Vec3::new(lx * i as f64 / nx as f64, ly * j as f64 / ny as f64, 0.0));
        }
    }
    TriMesh::new(v, quads(nx, ny, false))
}

/// Partial cylinder of radius `r` around the y-axis: angle `φ ∈ [−arc/2, arc/2]`
/// maps to `(r sin φ, y, r cos φ)`, `y ∈ [0, width]`. Normals point outward.
pub fn cylinder_strip(r: f64, arc: f64, n_arc: usize, width: f64, n_width: usize) -> Result<TriMesh> {
    if n_arc == 0 || n_width == 0 || !(r > 0.0) || !(arc > 0.0) || !(width > 0.0) {
        return Err(Error::InvalidInput("cylinder strip needs positive size and resolution".into()));
    }
    let mut v = Vec::with_capacity((n_arc + 1) * (n_width + 1));
    for j in 0..=n_width {
        for i in 0..=n_arc {
            let phi = -0.5 * arc + arc * i as f64 / n_arc as f64;
            v.push(Vec3::new(r * phi.sin(), width * j as f64 / n_width as f64, r * phi.cos()));
        }
    }
    TriMesh::new(v, quads(n_arc, n_width, false))
}

/// Closed tube (open at both ends) of radius `r` around the y-axis.
pub fn tube(r: f64, height: f64, n_around: usize, n_height: usize) -> Result<TriMesh> {
    if n_around < 3 || n_height == 0 || !(r > 0.0) || !(height > 0.0) {
        return Err(Error::InvalidInput("tube needs radius, height and at least 3 segments".into()));
    }
    let mut v = Vec::with_capacity(n_around * (n_height + 1));
    for j in 0..=n_height {
        for i in 0..n_around {
            let phi = std::f64::consts::TAU * i as f64 / n_around as f64;
            v.push(Vec3::new(r * phi.sin(), height * j as f64 / n_height as f64, r * phi.cos()));
        }
    }
    TriMesh::new(v, quads(n_around, n_height, true))
}
