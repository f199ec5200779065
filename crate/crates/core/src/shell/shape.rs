//! Six-node prism basis and quadrature rules.
//!
//! Generic coordinates `q = (u, v, t)`: `(u, v)` barycentric on the
//! mid-surface triangle, `t ∈ [−1, 1]` through the thickness. Nodes 0–2 sit
//! on the bottom face (`t = −1`), nodes 3–5 on the top face.

use serde::{Deserialize, Serialize};

use super::kernel::Real;

/// Basis values and their generic-coordinate gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrismShape<T = f64> {
    pub n: [T; 6],
    pub dn: [[T; 3]; 6],
}

/// In-plane barycentric values `L = (1 − u − v, u, v)`.
pub fn barycentric<T: Real>(u: T, v: T) -> [T; 3] {
    [-u - v + 1.0, u, v]
}

/// `∂L_a/∂(u, v)`.
pub const BARY_GRAD: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

pub fn prism_shape<T: Real>(q: [T; 3]) -> PrismShape<T> {
    let l = barycentric(q[0], q[1]);
    let t = q[2];
    let zero = T::from(0.0);
    let mut n = [zero; 6];
    let mut dn = [[zero; 3]; 6];
    for a in 0..3 {
        for (layer, sign) in [(0usize, -1.0), (1, 1.0)] {
            let k = a + 3 * layer;
            let s = (t * sign + 1.0) * 0.5;
            n[k] = l[a] * s;
            dn[k] = [s * BARY_GRAD[a][0], s * BARY_GRAD[a][1], l[a] * (0.5 * sign)];
        }
    }
    PrismShape { n, dn }
}

/// Generic coordinates of node `k`.
pub fn node_coords(k: usize) -> [f64; 3] {
    let uv = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]][k % 3];
    [uv[0], uv[1], if k < 3 { -1.0 } else { 1.0 }]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TriangleRule {
    /// Degree 2, three interior points.
    #[default]
    Three,
    /// Degree 4.
    Six,
    /// Degree 5.
    Seven,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LineRule {
    #[default]
    Two,
    Three,
}

impl TriangleRule {
    /// Points `(u, v)` and weights on the reference triangle (weights sum to ½).
    pub fn points(self) -> Vec<([f64; 2], f64)> {
        match self {
            TriangleRule::Three => {
                let w = 1.0 / 6.0;
                vec![([1.0 / 6.0, 1.0 / 6.0], w), ([2.0 / 3.0, 1.0 / 6.0], w), ([1.0 / 6.0, 2.0 / 3.0], w)]
            }
            TriangleRule::Six => {
                let (a, wa) = (0.445_948_490_915_965, 0.111_690_794_839_005_5);
                let (b, wb) = (0.091_576_213_509_771, 0.054_975_871_827_661);
                vec![
                    ([a, a], wa),
                    ([1.0 - 2.0 * a, a], wa),
                    ([a, 1.0 - 2.0 * a], wa),
                    ([b, b], wb),
                    ([1.0 - 2.0 * b, b], wb),
                    ([b, 1.0 - 2.0 * b], wb),
                ]
            }
            TriangleRule::Seven => {
                let r = 15f64.sqrt();
                let (a, wa) = ((6.0 - r) / 21.0, (155.0 - r) / 2400.0);
                let (b, wb) = ((6.0 + r) / 21.0, (155.0 + r) / 2400.0);
                vec![
                    ([1.0 / 3.0, 1.0 / 3.0], 9.0 / 80.0),
                    ([a, a], wa),
                    ([1.0 - 2.0 * a, a], wa),
                    ([a, 1.0 - 2.0 * a], wa),
                    ([b, b], wb),
                    ([1.0 - 2.0 * b, b], wb),
                    ([b, 1.0 - 2.0 * b], wb),
                ]
            }
        }
    }
}

impl LineRule {
    /// Gauss points and weights on `[−1, 1]`.
    pub fn points(self) -> Vec<(f64, f64)> {
        match self {
            LineRule::Two => {
                let g = 1.0 / 3f64.sqrt();
                vec![(-g, 1.0), (g, 1.0)]
            }
            LineRule::Three => {
                let g = 0.6f64.sqrt();
                vec![(-g, 5.0 / 9.0), (0.0, 8.0 / 9.0), (g, 5.0 / 9.0)]
            }
        }
    }
}

/// Tensor-product quadrature on the reference prism; weights sum to 1
/// (½ in-plane area × 2 thickness span).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct QuadraturePlan {
    pub triangle: TriangleRule,
    pub line: LineRule,
}

impl QuadraturePlan {
    /// Default per-sub-prism plan of cut elements. The enriched basis is
    /// quadratic in-plane, so small-strain energies are quartic and need the
    /// degree-4 rule.
    pub const CUT_DEFAULT: QuadraturePlan = QuadraturePlan { triangle: TriangleRule::Six, line: LineRule::Two };

    pub fn new(triangle: TriangleRule, line: LineRule) -> Self {
        Self { triangle, line }
    }

    /// Points `(u, v, t)` with weights.
    pub fn points(&self) -> Vec<([f64; 3], f64)> {
        let tri = self.triangle.points();
        let line = self.line.points();
        let mut out = Vec::with_capacity(tri.len() * line.len());
        for &(t, wt) in &line {
            for &(uv, w) in &tri {
                out.push(([uv[0], uv[1], t], w * wt));
            }
        }
        out
    }
}
