//! Affine reduction `q = P q_c + o` from free unknowns to the full shell
//! state (positions, then enrichment coordinates, three components each).

use crate::error::{Error, Result};
use crate::shell::{Interface, ShellModel, ShellState};
use crate::{Mat3, Vec3};

/// Node `n` follows its representative: `x_n = R x_rep + o + τ m` and
/// `x̂_n = R x̂_rep`, where `τ` is the optional macro unknown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeImage {
    pub rep: usize,
    pub rot: Mat3,
    pub offset: Vec3,
    pub macro_dir: Vec3,
}

/// Sparse rows of `P` plus the constant part `o`.
#[derive(Debug, Clone)]
pub struct DofMap {
    num_nodes: usize,
    num_free: usize,
    ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    offset: Vec<f64>,
    /// Full index each free unknown is read from when restricting a state.
    source: Vec<Option<usize>>,
    macro_col: Option<usize>,
    enriched: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct DofMapBuilder {
    num_nodes: usize,
    images: Vec<Option<NodeImage>>,
    pinned: Vec<[Option<f64>; 3]>,
    enriched: Vec<bool>,
    has_macro: bool,
}

impl DofMapBuilder {
    /// All nodes free, no enrichment.
    pub fn new(num_nodes: usize) -> Self {
        Self {
            num_nodes,
            images: vec![None; num_nodes],
            pinned: vec![[None; 3]; num_nodes],
            enriched: vec![false; num_nodes],
            has_macro: false,
        }
    }

    /// Starts from a model and its interface (enrichment on cut elements).
    pub fn for_model(model: &ShellModel, iface: &Interface) -> Self {
        let mut b = Self::new(model.num_nodes());
        b.enriched.clone_from(&iface.enriched);
        b
    }

    pub fn image(&mut self, node: usize, image: NodeImage) -> &mut Self {
        self.images[node] = Some(image);
        self
    }

    pub fn pin(&mut self, node: usize, comp: usize, value: f64) -> &mut Self {
        self.pinned[node][comp] = Some(value);
        self
    }

    pub fn pin_node(&mut self, node: usize, value: Vec3) -> &mut Self {
        for c in 0..3 {
            self.pin(node, c, value[c]);
        }
        self
    }

    pub fn fix_node(&mut self, node: usize, value: Vec3) -> &mut Self {
        self.pin_node(node, value)
    }

    /// Gives `node` enrichment unknowns.
    pub fn enrich(&mut self, node: usize) -> &mut Self {
        self.enriched[node] = true;
        self
    }

    /// Appends one scalar macro unknown `τ`.
    pub fn with_macro(&mut self) -> &mut Self {
        self.has_macro = true;
        self
    }

    pub fn build(&self) -> Result<DofMap> {
        let n = self.num_nodes;
        for (i, im) in self.images.iter().enumerate() {
            if let Some(im) = im {
                if im.rep >= n || self.images[im.rep].is_some() || im.rep == i {
                    return Err(Error::InvalidInput(format!("node {i} maps to invalid representative {}", im.rep)));
                }
                if self.pinned[i].iter().any(Option::is_some) {
                    return Err(Error::InvalidInput(format!("node {i} is both an image and pinned")));
                }
            }
        }
        let mut enriched = self.enriched.clone();
        for (i, im) in self.images.iter().enumerate() {
            if let Some(im) = im {
                if self.enriched[i] {
                    enriched[im.rep] = true;
                }
            }
        }
        for (i, im) in self.images.iter().enumerate() {
            if let Some(im) = im {
                enriched[i] = enriched[im.rep];
            }
        }

        // rows of representatives: (col or constant)
        let mut col = 0;
        let mut source = Vec::new();
        let mut rep_rows: Vec<Option<Result<usize, f64>>> = vec![None; 6 * n];
        for i in (0..n).filter(|&i| self.images[i].is_none()) {
            for c in 0..3 {
                rep_rows[3 * i + c] = Some(match self.pinned[i][c] {
                    Some(v) => Err(v),
                    None => {
                        source.push(Some(3 * i + c));
                        col += 1;
                        Ok(col - 1)
                    }
                });
            }
        }
        for i in (0..n).filter(|&i| self.images[i].is_none() && enriched[i]) {
            for c in 0..3 {
                let r = 3 * (n + i) + c;
                source.push(Some(r));
                rep_rows[r] = Some(Ok(col));
                col += 1;
            }
        }
        let macro_col = self.has_macro.then(|| {
            source.push(None);
            col += 1;
            col - 1
        });

        let mut ptr = vec![0];
        let (mut cols, mut vals, mut offset) = (Vec::new(), Vec::new(), vec![0.0; 6 * n]);
        let push_rep = |r: usize, scale: f64, cols: &mut Vec<usize>, vals: &mut Vec<f64>, off: &mut f64| match rep_rows[r] {
            Some(Ok(c)) => {
                cols.push(c);
                vals.push(scale);
            }
            Some(Err(v)) => *off += scale * v,
            None => {}
        };
        for r in 0..6 * n {
            let hat = r >= 3 * n;
            let node = if hat { (r - 3 * n) / 3 } else { r / 3 };
            let comp = r % 3;
            match self.images[node] {
                None => push_rep(r, 1.0, &mut cols, &mut vals, &mut offset[r]),
                Some(im) => {
                    let base = if hat { 3 * (n + im.rep) } else { 3 * im.rep };
                    for j in 0..3 {
                        let a = im.rot[(comp, j)];
                        if a != 0.0 {
                            push_rep(base + j, a, &mut cols, &mut vals, &mut offset[r]);
                        }
                    }
                    if !hat {
                        offset[r] += im.offset[comp];
                        if let (Some(mc), true) = (macro_col, im.macro_dir[comp] != 0.0) {
                            cols.push(mc);
                            vals.push(im.macro_dir[comp]);
                        }
                    }
                }
            }
            ptr.push(cols.len());
        }
        Ok(DofMap { num_nodes: n, num_free: col, ptr, cols, vals, offset, source, macro_col, enriched })
    }
}

impl DofMap {
    pub fn num_free(&self) -> usize {
        self.num_free
    }

    pub fn num_full(&self) -> usize {
        6 * self.num_nodes
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn macro_col(&self) -> Option<usize> {
        self.macro_col
    }

    /// Nodes carrying enrichment after periodic closure.
    pub fn enriched(&self) -> &[bool] {
        &self.enriched
    }

    pub fn x_index(node: usize, comp: usize) -> usize {
        3 * node + comp
    }

    pub fn xhat_index(&self, node: usize, comp: usize) -> usize {
        3 * (self.num_nodes + node) + comp
    }

    /// Sparse row `r` of `P`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.ptr[r], self.ptr[r + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn offset(&self, r: usize) -> f64 {
        self.offset[r]
    }

    pub fn expand_full(&self, free: &[f64]) -> Vec<f64> {
        assert_eq!(free.len(), self.num_free, "free vector length");
        (0..self.num_full())
            .map(|r| {
                let (c, v) = self.row(r);
                self.offset[r] + c.iter().zip(v).map(|(&c, &v)| v * free[c]).sum::<f64>()
            })
            .collect()
    }

    pub fn expand(&self, free: &[f64]) -> ShellState {
        let full = self.expand_full(free);
        let n = self.num_nodes;
        let v = |k: usize| Vec3::new(full[3 * k], full[3 * k + 1], full[3 * k + 2]);
        ShellState { x: (0..n).map(v).collect(), xhat: (n..2 * n).map(v).collect() }
    }

    /// `Pᵀ g`.
    pub fn reduce(&self, full: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_free];
        for (r, g) in full.iter().enumerate() {
            let (c, v) = self.row(r);
            for (&c, &v) in c.iter().zip(v) {
                out[c] += v * g;
            }
        }
        out
    }

    /// Reads free unknowns from a full state; enrichment of nodes not
    /// enriched in this layout is dropped, new ones start from the state
    /// (zero where previously absent).
    pub fn restrict(&self, state: &ShellState, macro_value: f64) -> Vec<f64> {
        let n = self.num_nodes;
        self.source
            .iter()
            .map(|s| match s {
                Some(r) if *r < 3 * n => state.x[r / 3][r % 3],
                Some(r) => state.xhat[(r - 3 * n) / 3][r % 3],
                None => macro_value,
            })
            .collect()
    }
}
