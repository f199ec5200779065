use crate::error::{Error, Result};
use crate::mesh::{PeriodicMap, TriMesh};
use crate::Vec3;

/// Orthonormal tangent frame `(t1, t2, n)` at a vertex, `t2 = n × t1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub n: Vec3,
    pub t1: Vec3,
    pub t2: Vec3,
}

impl Frame {
    /// Unit tangent direction at angle `p` in this frame.
    pub fn direction(&self, p: f64) -> Vec3 {
        self.t1 * p.cos() + self.t2 * p.sin()
    }

    /// Angle of the tangential part of `d` in this frame.
    pub fn angle_of(&self, d: &Vec3) -> f64 {
        d.dot(&self.t2).atan2(d.dot(&self.t1))
    }
}

/// Per-vertex frames: `t1` is the first incident edge (in edge-table order)
/// projected to the tangent plane. With a periodic map, paired vertices copy
/// the frame of their representative so that design angles agree across the
/// cell boundary.
pub fn tangent_frames(mesh: &TriMesh, normals: &[Vec3], periodic: Option<&PeriodicMap>) -> Result<Vec<Frame>> {
    let mut frames = Vec::with_capacity(mesh.num_vertices());
    for (i, n) in normals.iter().enumerate() {
        let x = mesh.vertex(i);
        let t1 = mesh
            .vertex_edges(i)
            .iter()
            .map(|&e| {
                let e = &mesh.edges()[e];
                let other = if e.v[0] == i { e.v[1] } else { e.v[0] };
                let d = mesh.vertex(other) - x;
                d - n * n.dot(&d)
            })
            .find(|t| t.norm() > 1e-12 * (1.0 + x.norm()))
            .ok_or_else(|| Error::InvalidInput(format!("no tangent edge at vertex {i}")))?
            .normalize();
        frames.push(Frame { n: *n, t1, t2: n.cross(&t1) });
    }
    if let Some(map) = periodic {
        for v in 0..frames.len() {
            let r = map.rep(v);
            if r != v {
                frames[v] = frames[r];
            }
        }
    }
    Ok(frames)
}
