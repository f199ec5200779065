//! Translation-periodic pairing of opposite boundary vertices.
//!
//! The plus side of each lattice axis is the side with the larger lattice
//! coordinate. Every plus vertex is mapped to a minus-side representative;
//! corners are reduced along both axes to the single minimal corner.

use serde::Serialize;

use super::TriMesh;
use crate::error::{Error, Result};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PeriodicAxis {
    First,
    Second,
    Both,
}

/// `x(plus) = x(minus) + shift[0]·L₁ + shift[1]·L₂` in the rest configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PeriodicPair {
    pub plus: usize,
    pub minus: usize,
    pub axis: PeriodicAxis,
    pub shift: [i32; 2],
}

/// Reduction from full per-vertex values to values on representatives.
#[derive(Debug, Clone, Serialize)]
pub struct PeriodicMap {
    pub pairs: Vec<PeriodicPair>,
    /// Lattice translation vectors.
    pub axes: Vec<[f64; 3]>,
    #[serde(skip)]
    rep: Vec<usize>,
    #[serde(skip)]
    shift: Vec<[i32; 2]>,
    #[serde(skip)]
    index: Vec<usize>,
    #[serde(skip)]
    reps: Vec<usize>,
}

impl PeriodicMap {
    /// Trivial map on `n` vertices with no pairing.
    pub fn identity(n: usize) -> Self {
        Self::from_pairs(n, Vec::new(), Vec::new()).expect("identity map is acyclic")
    }

    /// Builds the reduction from explicit pairs. Chains are resolved to their
    /// final representative with accumulated shifts.
    pub fn from_pairs(n: usize, pairs: Vec<PeriodicPair>, axes: Vec<Vec3>) -> Result<Self> {
        let mut direct: Vec<Option<(usize, [i32; 2])>> = vec![None; n];
        for p in &pairs {
            if p.plus >= n || p.minus >= n || p.plus == p.minus {
                return Err(Error::InvalidInput(format!("invalid periodic pair {p:?}")));
            }
            if direct[p.plus].replace((p.minus, p.shift)).is_some() {
                return Err(Error::InvalidInput(format!("vertex {} paired twice", p.plus)));
            }
        }
        let mut rep = vec![0; n];
        let mut shift = vec![[0, 0]; n];
        for v in 0..n {
            let (mut r, mut s, mut hops) = (v, [0, 0], 0);
            while let Some((m, d)) = direct[r] {
                r = m;
                s = [s[0] + d[0], s[1] + d[1]];
                hops += 1;
                if hops > n {
                    return Err(Error::InvalidInput("cyclic periodic pairing".into()));
                }
            }
            rep[v] = r;
            shift[v] = s;
        }
        let reps: Vec<usize> = (0..n).filter(|&v| rep[v] == v).collect();
        let mut index = vec![usize::MAX; n];
        for (k, &r) in reps.iter().enumerate() {
            index[r] = k;
        }
        let index = (0..n).map(|v| index[rep[v]]).collect();
        Ok(Self {
            pairs,
            axes: axes.iter().map(|a| [a.x, a.y, a.z]).collect(),
            rep,
            shift,
            index,
            reps,
        })
    }

    pub fn num_full(&self) -> usize {
        self.rep.len()
    }

    pub fn num_reduced(&self) -> usize {
        self.reps.len()
    }

    /// Representative vertex of `v` (itself for unpaired vertices).
    pub fn rep(&self, v: usize) -> usize {
        self.rep[v]
    }

    /// Integer lattice shift from `rep(v)` to `v`.
    pub fn shift(&self, v: usize) -> [i32; 2] {
        self.shift[v]
    }

    /// Rest-space translation from `rep(v)` to `v`.
    pub fn translation(&self, v: usize) -> Vec3 {
        let s = self.shift[v];
        self.axes
            .iter()
            .zip(s)
            .map(|(a, k)| Vec3::new(a[0], a[1], a[2]) * k as f64)
            .sum()
    }

    /// Index of `v`'s representative among the reduced unknowns.
    pub fn reduced_index(&self, v: usize) -> usize {
        self.index[v]
    }

    pub fn representatives(&self) -> &[usize] {
        &self.reps
    }

    pub fn is_representative(&self, v: usize) -> bool {
        self.rep[v] == v
    }

    /// Copies representative values (blocks of `block` scalars) to every vertex.
    pub fn expand(&self, reduced: &[f64], block: usize) -> Vec<f64> {
        assert_eq!(reduced.len(), block * self.num_reduced());
        let mut full = vec![0.0; block * self.num_full()];
        for v in 0..self.num_full() {
            let r = self.index[v];
            full[block * v..block * (v + 1)].copy_from_slice(&reduced[block * r..block * (r + 1)]);
        }
        full
    }

    /// Restricts full per-vertex values to representatives.
    pub fn reduce(&self, full: &[f64], block: usize) -> Vec<f64> {
        assert_eq!(full.len(), block * self.num_full());
        let mut out = Vec::with_capacity(block * self.num_reduced());
        for &r in &self.reps {
            out.extend_from_slice(&full[block * r..block * (r + 1)]);
        }
        out
    }

    /// Sums full per-vertex values into representatives (the transpose of
    /// [`expand`](Self::expand)).
    pub fn accumulate(&self, full: &[f64], block: usize) -> Vec<f64> {
        assert_eq!(full.len(), block * self.num_full());
        let mut out = vec![0.0; block * self.num_reduced()];
        for v in 0..self.num_full() {
            let r = self.index[v];
            for c in 0..block {
                out[block * r + c] += full[block * v + c];
            }
        }
        out
    }
}

/// Pairs opposite boundary vertices of a unit cell under one or two lattice
/// translations, matching positions within `tol`.
pub fn build_periodic_map(mesh: &TriMesh, lattice: &[Vec3], tol: f64) -> Result<PeriodicMap> {
    if lattice.is_empty() || lattice.len() > 2 {
        return Err(Error::InvalidInput("lattice needs one or two translation vectors".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("periodic matching tolerance must be positive".into()));
    }
    let boundary = mesh.boundary_vertices();
    let pos = mesh.vertices();

    let shifts: &[([i32; 2], PeriodicAxis)] = if lattice.len() == 2 {
        &[
            ([1, 1], PeriodicAxis::Both),
            ([1, 0], PeriodicAxis::First),
            ([0, 1], PeriodicAxis::Second),
        ]
    } else {
        &[([1, 0], PeriodicAxis::First)]
    };
    let offset = |s: [i32; 2]| -> Vec3 {
        lattice.iter().zip(s).map(|(l, k)| l * k as f64).sum()
    };

    let mut pairs = Vec::new();
    let mut is_minus = vec![false; mesh.num_vertices()];
    let mut is_plus = vec![false; mesh.num_vertices()];
    for &v in &boundary {
        for &(s, axis) in shifts {
            let target = pos[v] - offset(s);
            let cand: Vec<usize> = boundary
                .iter()
                .copied()
                .filter(|&w| w != v && (pos[w] - target).norm() <= tol)
                .collect();
            match cand.len() {
                0 => continue,
                1 => {
                    pairs.push(PeriodicPair { plus: v, minus: cand[0], axis, shift: s });
                    is_plus[v] = true;
                    is_minus[cand[0]] = true;
                }
                _ => return Err(Error::AmbiguousMatch { vertex: v, candidates: cand }),
            }
            break;
        }
    }

    // every boundary vertex lying on a periodic side must take part in a pair
    let side_tol = tol.max(0.25 * mesh.mean_edge_length());
    let coords: Vec<Vec<f64>> = pos.iter().map(|p| lattice_coords(lattice, p)).collect();
    let mut unmatched = Vec::new();
    for a in 0..lattice.len() {
        let len = lattice[a].norm();
        let lo = coords.iter().map(|c| c[a]).fold(f64::INFINITY, f64::min);
        let hi = coords.iter().map(|c| c[a]).fold(f64::NEG_INFINITY, f64::max);
        for &v in &boundary {
            let c = coords[v][a];
            let on_side = (c - lo) * len <= side_tol || (hi - c) * len <= side_tol;
            if on_side && !is_plus[v] && !is_minus[v] {
                unmatched.push(v);
            }
        }
    }
    if !unmatched.is_empty() {
        unmatched.sort_unstable();
        unmatched.dedup();
        return Err(Error::UnmatchedBoundary(unmatched));
    }
    PeriodicMap::from_pairs(mesh.num_vertices(), pairs, lattice.to_vec())
}

/// Coordinates of `p` along the lattice vectors (least squares in their span).
fn lattice_coords(lattice: &[Vec3], p: &Vec3) -> Vec<f64> {
    match lattice {
        [a] => vec![a.dot(p) / a.norm_squared()],
        [a, b] => {
            let g = nalgebra::Matrix2::new(a.dot(a), a.dot(b), a.dot(b), b.dot(b));
            let r = nalgebra::Vector2::new(a.dot(p), b.dot(p));
            let c = g.lu().solve(&r).unwrap_or_else(nalgebra::Vector2::zeros);
            vec![c[0], c[1]]
        }
        _ => unreachable!(),
    }
}
