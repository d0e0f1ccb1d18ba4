//! Systematic encoding `z = x P` for a Tanner graph.
//!
//! `P` is never formed explicitly for sampled graphs. Encoding solves
//! `H_p z = H_s x` directly: parity columns of weight one or two that form a
//! forest over the checks are peeled leaf by leaf, and the remaining columns
//! are fixed first by a small dense solve in the quotient space of forest
//! components. The dense solve matrix is inverted once at construction.

use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, BitVec};
use crate::graph::{forest_components, quotient_image, Forest, TannerGraph};

/// Maps `k` source bits to `m` parity bits.
#[derive(Debug, Clone)]
pub struct SystematicEncoder {
    k: usize,
    m: usize,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    Dense(BitMatrix),
    Structured(Box<Solver>),
}

#[derive(Debug, Clone)]
struct Solver {
    /// Source variables of each check (the rows of `H_s`).
    source_rows: Vec<Vec<u32>>,
    /// Forest component index of each check, `usize::MAX` for the ground tree.
    component_of: Vec<usize>,
    /// Parity indices of the non-forest columns and their checks.
    heavy: Vec<(usize, Vec<u32>)>,
    /// Inverse of the quotient images of the heavy columns.
    heavy_inverse: BitMatrix,
    /// Forest edges leaf-first: (parity index, child check, parent check or
    /// `None` for the ground node).
    peel: Vec<(usize, usize, Option<usize>)>,
}

impl SystematicEncoder {
    /// Wraps an explicit `k × m` generator part `P`.
    pub fn from_dense(p: BitMatrix) -> Self {
        Self {
            k: p.nrows(),
            m: p.ncols(),
            kind: Kind::Dense(p),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Parity column order used by the encoder. Sampled graphs are built with
    /// an invertible `H_p`, so this is always the identity.
    pub fn column_permutation(&self) -> Vec<usize> {
        (0..self.m).collect()
    }

    /// Parity bits `x P`.
    pub fn encode(&self, x: &[u8]) -> Result<Vec<u8>> {
        if x.len() != self.k {
            return Err(Error::LengthMismatch {
                expected: self.k,
                got: x.len(),
            });
        }
        Ok(match &self.kind {
            Kind::Dense(p) => p.left_mul(&BitVec::from_bits(x)).to_bits(),
            Kind::Structured(s) => s.solve(x, self.m),
        })
    }

    /// Materializes `P` row by row. Costs `k` encodings.
    pub fn to_dense(&self) -> BitMatrix {
        if let Kind::Dense(p) = &self.kind {
            return p.clone();
        }
        let mut x = vec![0u8; self.k];
        let rows = (0..self.k)
            .map(|i| {
                x[i] = 1;
                let z = self.encode(&x).expect("length checked");
                x[i] = 0;
                BitVec::from_bits(&z)
            })
            .collect();
        BitMatrix::from_rows(rows, self.m)
    }
}

impl Solver {
    fn solve(&self, x: &[u8], m: usize) -> Vec<u8> {
        let mut s: Vec<u8> = self
            .source_rows
            .iter()
            .map(|row| row.iter().fold(0u8, |a, &v| a ^ (x[v as usize] & 1)))
            .collect();
        let mut z = vec![0u8; m];

        let mut parities = BitVec::zeros(self.heavy.len());
        for (c, &comp) in self.component_of.iter().enumerate() {
            if comp != usize::MAX && s[c] == 1 {
                parities.flip(comp);
            }
        }
        let heavy_bits = self.heavy_inverse.right_mul(&parities);
        for (t, (j, checks)) in self.heavy.iter().enumerate() {
            if heavy_bits.get(t) {
                z[*j] = 1;
                for &c in checks {
                    s[c as usize] ^= 1;
                }
            }
        }
        for &(j, child, parent) in &self.peel {
            let bit = s[child];
            z[j] = bit;
            s[child] = 0;
            if let Some(p) = parent {
                s[p] ^= bit;
            }
        }
        z
    }
}

/// Prepares the encoder of `g`.
///
/// Fails with [`Error::RankDeficient`] when `H_p` is singular.
pub fn build_encoder(g: &TannerGraph) -> Result<SystematicEncoder> {
    let (k, m) = (g.k(), g.m());
    let mut parity_cols: Vec<Vec<u32>> = vec![Vec::new(); m];
    let mut source_rows: Vec<Vec<u32>> = vec![Vec::new(); m];
    for (c, vars) in g.checks().iter().enumerate() {
        for &v in vars {
            let v = v as usize;
            if v < k {
                source_rows[c].push(v as u32);
            } else {
                parity_cols[v - k].push(c as u32);
            }
        }
    }

    let ground = m;
    let mut forest = Forest::new(m + 1);
    let mut tree_edges: Vec<(usize, usize, usize)> = Vec::new();
    let mut heavy = Vec::new();
    for (j, cs) in parity_cols.iter().enumerate() {
        let ends = match cs.len() {
            1 => Some((cs[0] as usize, ground)),
            2 => Some((cs[0] as usize, cs[1] as usize)),
            _ => None,
        };
        match ends {
            Some((a, b)) if forest.union(a, b) => tree_edges.push((j, a, b)),
            _ => heavy.push((j, cs.clone())),
        }
    }
    let component_of = forest_components(&mut forest, m);
    let n_comp = component_of
        .iter()
        .filter(|&&c| c != usize::MAX)
        .max()
        .map_or(0, |&c| c + 1);
    debug_assert_eq!(n_comp, heavy.len());

    let mut images = BitMatrix::zeros(n_comp, heavy.len());
    for (t, (_, cs)) in heavy.iter().enumerate() {
        let img = quotient_image(cs, &component_of, n_comp);
        for r in 0..n_comp {
            if img.get(r) {
                images.set(r, t, true);
            }
        }
    }
    let heavy_inverse = images.inverse().map_err(|rank| Error::RankDeficient {
        deficit: n_comp - rank,
    })?;

    Ok(SystematicEncoder {
        k,
        m,
        kind: Kind::Structured(Box::new(Solver {
            source_rows,
            component_of,
            heavy,
            heavy_inverse,
            peel: peel_order(&tree_edges, m),
        })),
    })
}

/// Orders forest edges so that each is resolved at a leaf. Trees touching the
/// ground node are rooted there; others at an arbitrary check.
fn peel_order(edges: &[(usize, usize, usize)], m: usize) -> Vec<(usize, usize, Option<usize>)> {
    let ground = m;
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m + 1];
    for &(j, a, b) in edges {
        adj[a].push((b, j));
        adj[b].push((a, j));
    }
    let mut visited = vec![false; m + 1];
    let mut order = Vec::with_capacity(edges.len());
    let mut queue = std::collections::VecDeque::new();
    for root in std::iter::once(ground).chain(0..m) {
        if visited[root] {
            continue;
        }
        visited[root] = true;
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            for &(w, j) in &adj[u] {
                if !visited[w] {
                    visited[w] = true;
                    order.push((j, w, (u != ground).then_some(u)));
                    queue.push_back(w);
                }
            }
        }
    }
    order.reverse();
    order
}

/// Free-function form of [`SystematicEncoder::encode`].
pub fn encode(enc: &SystematicEncoder, x: &[u8]) -> Result<Vec<u8>> {
    enc.encode(x)
}
