//! Finite Tanner graphs drawn from a split ensemble.
//!
//! Variable nodes `0..k` are source bits, `k..k+m` parity bits; there are `m`
//! check nodes. The parity part `H_p` of the check matrix is made invertible
//! during sampling: parity columns of weight one or two are laid out as a
//! forest over the checks (weight-one columns attach to a virtual ground
//! node), and every heavier parity column is redrawn until it is linearly
//! independent of the columns already placed. Source columns are then matched
//! to the remaining check sockets at random.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::ensemble::{DegreePolynomial, EnsembleSpec};
use crate::error::{Error, Result};
use crate::gf2::BitVec;
use crate::rng::rng_from_seed;

/// Bipartite graph stored as per-check variable lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TannerGraph {
    k: usize,
    m: usize,
    checks: Vec<Vec<u32>>,
}

/// Optional post-processing of a sampled graph.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GraphOptions {
    /// Rewire source edges until no length-4 cycle passes through a source node
    /// (bounded number of passes).
    pub remove_four_cycles: bool,
}

/// Edge-perspective degree distributions of the three node classes.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeHistograms {
    pub source: DegreePolynomial,
    pub parity: DegreePolynomial,
    pub check: DegreePolynomial,
}

/// L1 distance of each realized class histogram from its target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramDistance {
    pub source: f64,
    pub parity: f64,
    pub check: f64,
}

impl HistogramDistance {
    pub fn max(&self) -> f64 {
        self.source.max(self.parity).max(self.check)
    }
}

impl TannerGraph {
    /// Builds a graph from per-check adjacency, rejecting out-of-range indices
    /// and repeated edges.
    pub fn from_checks(k: usize, m: usize, mut checks: Vec<Vec<u32>>) -> Result<Self> {
        if checks.len() != m {
            return Err(Error::LengthMismatch {
                expected: m,
                got: checks.len(),
            });
        }
        let n = k + m;
        for (c, vars) in checks.iter_mut().enumerate() {
            vars.sort_unstable();
            if let Some(&v) = vars.iter().find(|&&v| v as usize >= n) {
                return Err(Error::InvalidParameter(format!(
                    "check {c} references variable {v} but n = {n}"
                )));
            }
            if vars.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidParameter(format!(
                    "check {c} has a repeated edge"
                )));
            }
        }
        Ok(Self { k, m, checks })
    }

    /// Builds a graph from a dense `m × (k+m)` 0/1 matrix given row by row.
    pub fn from_dense_rows(k: usize, rows: &[Vec<u8>]) -> Result<Self> {
        let m = rows.len();
        let checks = rows
            .iter()
            .map(|r| {
                if r.len() != k + m {
                    return Err(Error::LengthMismatch {
                        expected: k + m,
                        got: r.len(),
                    });
                }
                Ok(r.iter()
                    .enumerate()
                    .filter(|(_, &b)| b != 0)
                    .map(|(j, _)| j as u32)
                    .collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_checks(k, m, checks)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.k + self.m
    }

    pub fn num_edges(&self) -> usize {
        self.checks.iter().map(Vec::len).sum()
    }

    pub fn checks(&self) -> &[Vec<u32>] {
        &self.checks
    }

    pub fn check(&self, c: usize) -> &[u32] {
        &self.checks[c]
    }

    /// Per-variable check lists, each sorted.
    pub fn variable_adjacency(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.n()];
        for (c, vars) in self.checks.iter().enumerate() {
            for &v in vars {
                adj[v as usize].push(c as u32);
            }
        }
        adj
    }

    pub fn variable_degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.n()];
        for vars in &self.checks {
            for &v in vars {
                deg[v as usize] += 1;
            }
        }
        deg
    }

    pub fn check_degrees(&self) -> Vec<u32> {
        self.checks.iter().map(|c| c.len() as u32).collect()
    }

    /// Syndrome `H c^T` of a full codeword laid out as `(x, z)`.
    pub fn syndrome(&self, codeword: &[u8]) -> Result<Vec<u8>> {
        if codeword.len() != self.n() {
            return Err(Error::LengthMismatch {
                expected: self.n(),
                got: codeword.len(),
            });
        }
        Ok(self
            .checks
            .iter()
            .map(|vars| vars.iter().fold(0u8, |acc, &v| acc ^ (codeword[v as usize] & 1)))
            .collect())
    }

    /// True when `(x, z)` satisfies every check.
    pub fn is_codeword(&self, x: &[u8], z: &[u8]) -> bool {
        if x.len() != self.k || z.len() != self.m {
            return false;
        }
        self.checks.iter().all(|vars| {
            vars.iter().fold(0u8, |acc, &v| {
                let v = v as usize;
                acc ^ if v < self.k { x[v] } else { z[v - self.k] } & 1
            }) == 0
        })
    }

    /// Edge-perspective histograms of the realized graph.
    pub fn degree_histograms(&self) -> DegreeHistograms {
        let deg = self.variable_degrees();
        let hist = |degs: &mut dyn Iterator<Item = u32>| {
            let mut edges: BTreeMap<u32, f64> = BTreeMap::new();
            let mut total = 0.0;
            for d in degs.filter(|&d| d > 0) {
                *edges.entry(d).or_default() += d as f64;
                total += d as f64;
            }
            DegreePolynomial::from_pairs(edges.into_iter().map(|(d, e)| (d, e / total)))
                .unwrap_or_default()
        };
        DegreeHistograms {
            source: hist(&mut deg[..self.k].iter().copied()),
            parity: hist(&mut deg[self.k..].iter().copied()),
            check: hist(&mut self.check_degrees().into_iter()),
        }
    }

    /// L1 distance between each class histogram and the class-normalized
    /// target polynomial of `spec`.
    pub fn histogram_distance(&self, spec: &EnsembleSpec) -> HistogramDistance {
        let h = self.degree_histograms();
        HistogramDistance {
            source: l1(&h.source, &spec.lambda_s.normalized()),
            parity: l1(&h.parity, &spec.lambda_p.normalized()),
            check: l1(&h.check, &spec.rho.normalized()),
        }
    }

    /// Writes the text format: a header line `k m n_edges`, then one
    /// `check_id var_id` pair per line ordered by check, then variable.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        let mut s = String::new();
        writeln!(s, "{} {} {}", self.k, self.m, self.num_edges()).unwrap();
        for (c, vars) in self.checks.iter().enumerate() {
            for v in vars {
                writeln!(s, "{c} {v}").unwrap();
            }
        }
        w.write_all(s.as_bytes())?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_text(std::io::BufWriter::new(f))
    }

    /// Parses the format produced by [`TannerGraph::write_text`].
    pub fn read_text<R: Read>(r: R, source_name: &Path) -> Result<Self> {
        let parse_err = |reason: String| Error::Parse {
            path: source_name.to_path_buf(),
            reason,
        };
        let mut lines = BufReader::new(r).lines();
        let header = lines
            .next()
            .ok_or_else(|| parse_err("empty file".into()))??;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(format!("header: {e}")))?;
        let [k, m, n_edges] = nums[..] else {
            return Err(parse_err("header must be `k m n_edges`".into()));
        };
        let mut checks = vec![Vec::new(); m];
        let mut count = 0;
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            let (Some(Ok(c)), Some(Ok(v)), None) = (it.next(), it.next(), it.next()) else {
                return Err(parse_err(format!("line {}: expected `check var`", lineno + 2)));
            };
            if c >= m {
                return Err(parse_err(format!("line {}: check {c} out of range", lineno + 2)));
            }
            checks[c].push(v as u32);
            count += 1;
        }
        if count != n_edges {
            return Err(parse_err(format!("header says {n_edges} edges, found {count}")));
        }
        Self::from_checks(k, m, checks).map_err(|e| parse_err(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_text(f, path)
    }
}

fn l1(a: &DegreePolynomial, b: &DegreePolynomial) -> f64 {
    let degrees: HashSet<u32> = a.degrees().into_iter().chain(b.degrees()).collect();
    degrees.into_iter().map(|d| (a.coeff(d) - b.coeff(d)).abs()).sum()
}

/// Union-find over the checks plus one ground node at index `m`.
pub(crate) struct Forest {
    parent: Vec<usize>,
}

impl Forest {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Joins the sets of `a` and `b`; false if already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// Incrementally built GF(2) basis with distinct pivots.
pub(crate) struct IncrementalBasis {
    by_pivot: Vec<Option<BitVec>>,
}

impl IncrementalBasis {
    pub(crate) fn new(dim: usize) -> Self {
        Self {
            by_pivot: vec![None; dim],
        }
    }

    /// Adds `v` if it is independent of the basis; returns whether it was.
    pub(crate) fn insert(&mut self, mut v: BitVec) -> bool {
        while let Some(p) = v.first_one() {
            match &self.by_pivot[p] {
                Some(b) => v.xor_assign(b),
                None => {
                    self.by_pivot[p] = Some(v);
                    return true;
                }
            }
        }
        false
    }
}

/// Orthogonal complement of a partial basis, shrunk as vectors are added.
pub(crate) struct DualSpace {
    vecs: Vec<BitVec>,
}

impl DualSpace {
    /// Complement of the span of `basis`, via its reduced echelon form.
    pub(crate) fn of(basis: &IncrementalBasis) -> Self {
        let dim = basis.by_pivot.len();
        let mut rows = basis.by_pivot.clone();
        for p in (0..dim).rev() {
            let Some(bp) = rows[p].clone() else { continue };
            for row in rows[..p].iter_mut().flatten() {
                if row.get(p) {
                    row.xor_assign(&bp);
                }
            }
        }
        let vecs = (0..dim)
            .filter(|&f| rows[f].is_none())
            .map(|f| {
                let mut y = BitVec::zeros(dim);
                y.set(f, true);
                for (p, r) in rows.iter().enumerate() {
                    if r.as_ref().is_some_and(|r| r.get(f)) {
                        y.set(p, true);
                    }
                }
                y
            })
            .collect();
        Self { vecs }
    }

    pub(crate) fn dim(&self) -> usize {
        self.vecs.len()
    }

    /// Adds `v` to the primal span if independent; returns whether it was.
    pub(crate) fn absorb(&mut self, v: &BitVec) -> bool {
        let Some(i) = self.vecs.iter().position(|y| y.dot(v)) else {
            return false;
        };
        let yi = self.vecs.swap_remove(i);
        for y in &mut self.vecs {
            if y.dot(v) {
                y.xor_assign(&yi);
            }
        }
        true
    }
}

/// Remaining check sockets, removable by position.
struct SocketPool {
    sockets: Vec<u32>,
}

impl SocketPool {
    /// Draws `d` sockets on distinct checks, starting from position `first`
    /// when given, accepted by `accept`, and removes them. Returns `None`
    /// after `tries` rejected draws.
    fn draw<R: rand::Rng>(
        &mut self,
        d: usize,
        rng: &mut R,
        tries: usize,
        first: Option<usize>,
        mut accept: impl FnMut(&[u32]) -> bool,
    ) -> Option<Vec<u32>> {
        if d == 0 {
            return Some(Vec::new());
        }
        if self.sockets.is_empty() {
            return None;
        }
        let mut pos = Vec::with_capacity(d);
        let mut picked = Vec::with_capacity(d);
        for _ in 0..tries {
            pos.clear();
            picked.clear();
            if let Some(f) = first {
                pos.push(f);
                picked.push(self.sockets[f]);
            }
            let mut guard = 0;
            while picked.len() < d && guard < 64 * d {
                guard += 1;
                let p = rng.gen_range(0..self.sockets.len());
                let c = self.sockets[p];
                if !picked.contains(&c) {
                    pos.push(p);
                    picked.push(c);
                }
            }
            if picked.len() == d && accept(&picked) {
                pos.sort_unstable_by(|a, b| b.cmp(a));
                for &p in &pos {
                    self.sockets.swap_remove(p);
                }
                return Some(picked.clone());
            }
        }
        None
    }
}

/// Samples a graph with default options.
pub fn sample_graph(spec: &EnsembleSpec, k: usize, rng_seed: u64) -> Result<TannerGraph> {
    sample_graph_with(spec, k, rng_seed, GraphOptions::default())
}

/// Makes an invertible `H_p` possible when every parity column has even
/// weight: then the sum of all checks annihilates `H_p`. One parity node of
/// the largest degree and one check of the largest degree each lose an edge.
fn break_even_parity(parity: &mut [u32], check: &mut [u32]) {
    if parity.iter().any(|&d| d % 2 == 1) {
        return;
    }
    let Some(j) = (0..parity.len()).filter(|&j| parity[j] >= 4).max_by_key(|&j| parity[j]) else {
        return;
    };
    let Some(c) = (0..check.len()).max_by_key(|&c| check[c]) else {
        return;
    };
    if check[c] > 2 {
        parity[j] -= 1;
        check[c] -= 1;
    }
}

pub fn sample_graph_with(
    spec: &EnsembleSpec,
    k: usize,
    rng_seed: u64,
    options: GraphOptions,
) -> Result<TannerGraph> {
    let mut seqs = spec.node_degree_sequences(k)?;
    let m = seqs.m;
    break_even_parity(&mut seqs.parity, &mut seqs.check);
    let fail = |reason: String| Error::Construction {
        seed: rng_seed,
        reason,
    };
    let mut rng = rng_from_seed(rng_seed);

    let mut check_degrees = seqs.check.clone();
    check_degrees.shuffle(&mut rng);
    let mut pool = SocketPool {
        sockets: check_degrees
            .iter()
            .enumerate()
            .flat_map(|(c, &d)| std::iter::repeat(c as u32).take(d as usize))
            .collect(),
    };
    pool.sockets.shuffle(&mut rng);

    let mut parity_order: Vec<usize> = (0..m).collect();
    parity_order.shuffle(&mut rng);
    let (light, heavy): (Vec<usize>, Vec<usize>) =
        parity_order.into_iter().partition(|&j| seqs.parity[j] <= 2);

    let mut columns: Vec<Vec<u32>> = vec![Vec::new(); k + m];
    const TRIES: usize = 10_000;
    const RANDOM_TRIES: usize = 200;

    let ground = m;
    let mut forest = Forest::new(m + 1);
    for &j in &light {
        let d = seqs.parity[j] as usize;
        let cols = pool
            .draw(d, &mut rng, TRIES, None, |cs| {
                let a = forest.find(cs[0] as usize);
                let b = forest.find(if d == 2 { cs[1] as usize } else { ground });
                a != b
            })
            .ok_or_else(|| fail(format!("no acyclic placement for parity column {j}")))?;
        forest.union(cols[0] as usize, if d == 2 { cols[1] as usize } else { ground });
        columns[k + j] = cols;
    }

    // Heavy columns live in the quotient by the forest: one coordinate per
    // forest component that does not contain the ground node.
    let component_of = forest_components(&mut forest, m);
    let n_comp = component_of
        .iter()
        .filter(|&&c| c != usize::MAX)
        .max()
        .map_or(0, |&c| c + 1);
    if n_comp != heavy.len() {
        return Err(fail(format!(
            "{} heavy parity columns for {n_comp} forest components",
            heavy.len()
        )));
    }
    // Plain rejection first; once it stalls, switch to the complement of the
    // span and aim one edge at a component that can raise the rank.
    let mut basis = IncrementalBasis::new(n_comp);
    let mut dual: Option<DualSpace> = None;
    for &j in &heavy {
        let d = seqs.parity[j] as usize;
        let mut placed = None;
        if dual.is_none() {
            placed = pool.draw(d, &mut rng, RANDOM_TRIES, None, |cs| {
                basis.insert(quotient_image(cs, &component_of, n_comp))
            });
            if placed.is_none() {
                dual = Some(DualSpace::of(&basis));
            }
        }
        if placed.is_none() {
            let ys = dual.as_mut().expect("dual space initialized");
            for _ in 0..TRIES {
                if ys.dim() == 0 {
                    break;
                }
                let y = ys.vecs[rng.gen_range(0..ys.dim())].clone();
                let targets: Vec<usize> = pool
                    .sockets
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| {
                        let comp = component_of[c as usize];
                        comp != usize::MAX && y.get(comp)
                    })
                    .map(|(p, _)| p)
                    .collect();
                if targets.is_empty() {
                    continue;
                }
                let f = targets[rng.gen_range(0..targets.len())];
                placed = pool.draw(d, &mut rng, 1, Some(f), |cs| {
                    ys.absorb(&quotient_image(cs, &component_of, n_comp))
                });
                if placed.is_some() {
                    break;
                }
            }
        }
        columns[k + j] =
            placed.ok_or_else(|| fail(format!("no independent placement for parity column {j}")))?;
    }

    // Source columns take the remaining sockets in random order.
    let mut source_order: Vec<usize> = (0..k).collect();
    source_order.shuffle(&mut rng);
    let total_source: usize = seqs.source.iter().map(|&d| d as usize).sum();
    if total_source != pool.sockets.len() {
        return Err(fail(format!(
            "{} source edges for {} free sockets",
            total_source,
            pool.sockets.len()
        )));
    }
    let mut slots: Vec<(usize, u32)> = Vec::with_capacity(total_source);
    for &i in &source_order {
        for _ in 0..seqs.source[i] {
            slots.push((i, 0));
        }
    }
    pool.sockets.shuffle(&mut rng);
    for (slot, c) in slots.iter_mut().zip(pool.sockets.drain(..)) {
        slot.1 = c;
    }
    rematch_duplicates(&mut slots, &mut rng, 100);
    for &(i, c) in &slots {
        if !columns[i].contains(&c) {
            columns[i].push(c);
        }
    }

    if options.remove_four_cycles {
        remove_source_four_cycles(&mut columns, k, m, &mut rng, 50);
    }

    let mut checks = vec![Vec::new(); m];
    for (v, cs) in columns.iter().enumerate() {
        for &c in cs {
            checks[c as usize].push(v as u32);
        }
    }
    TannerGraph::from_checks(k, m, checks)
}

/// Numbers the forest components of checks `0..m` that do not contain the
/// ground node `m`; checks in the ground component map to `usize::MAX`.
pub(crate) fn forest_components(forest: &mut Forest, m: usize) -> Vec<usize> {
    let ground_root = forest.find(m);
    let mut index = vec![usize::MAX; m + 1];
    let mut next = 0;
    (0..m)
        .map(|c| {
            let r = forest.find(c);
            if r == ground_root {
                return usize::MAX;
            }
            if index[r] == usize::MAX {
                index[r] = next;
                next += 1;
            }
            index[r]
        })
        .collect()
}

pub(crate) fn quotient_image(cs: &[u32], component_of: &[usize], dim: usize) -> BitVec {
    let mut v = BitVec::zeros(dim);
    for &c in cs {
        let comp = component_of[c as usize];
        if comp != usize::MAX {
            v.flip(comp);
        }
    }
    v
}

/// Swaps the check of duplicate (variable, check) slots with random other
/// slots until no duplicate remains or `rounds` passes are spent.
fn rematch_duplicates<R: rand::Rng>(slots: &mut [(usize, u32)], rng: &mut R, rounds: usize) {
    if slots.len() < 2 {
        return;
    }
    let mut edges: HashSet<(usize, u32)> = HashSet::with_capacity(slots.len());
    for _ in 0..rounds {
        edges.clear();
        let mut dups = Vec::new();
        for (s, &e) in slots.iter().enumerate() {
            if !edges.insert(e) {
                dups.push(s);
            }
        }
        if dups.is_empty() {
            return;
        }
        for s in dups {
            let t = rng.gen_range(0..slots.len());
            let (vs, cs) = slots[s];
            let (vt, ct) = slots[t];
            if vs == vt || cs == ct {
                continue;
            }
            if edges.contains(&(vs, ct)) || edges.contains(&(vt, cs)) {
                continue;
            }
            edges.remove(&(vt, ct));
            edges.insert((vs, ct));
            edges.insert((vt, cs));
            slots[s].1 = ct;
            slots[t].1 = cs;
        }
    }
}

fn remove_source_four_cycles<R: rand::Rng>(
    columns: &mut [Vec<u32>],
    k: usize,
    m: usize,
    rng: &mut R,
    passes: usize,
) {
    let total_source: usize = columns[..k].iter().map(Vec::len).sum();
    if total_source == 0 {
        return;
    }
    for _ in 0..passes {
        let mut check_vars = vec![Vec::new(); m];
        for (v, cs) in columns.iter().enumerate() {
            for &c in cs {
                check_vars[c as usize].push(v);
            }
        }
        let mut seen = vec![usize::MAX; columns.len()];
        let mut found = false;
        for v in 0..k {
            let mut hit = None;
            'scan: for &c in &columns[v] {
                for &w in &check_vars[c as usize] {
                    if w == v {
                        continue;
                    }
                    if seen[w] == v {
                        hit = Some(c);
                        break 'scan;
                    }
                    seen[w] = v;
                }
            }
            // `seen` is keyed by `v`, so stale marks from earlier nodes never match.
            let Some(c) = hit else { continue };
            found = true;
            // Swap the edge (v, c) with a random source edge (u, c2).
            for _ in 0..32 {
                let u = rng.gen_range(0..k);
                if u == v || columns[u].is_empty() {
                    continue;
                }
                let c2 = columns[u][rng.gen_range(0..columns[u].len())];
                if c2 == c || columns[v].contains(&c2) || columns[u].contains(&c) {
                    continue;
                }
                let iv = columns[v].iter().position(|&x| x == c).unwrap();
                let iu = columns[u].iter().position(|&x| x == c2).unwrap();
                columns[v][iv] = c2;
                columns[u][iu] = c;
                break;
            }
        }
        if !found {
            return;
        }
    }
}

/// Counts length-4 cycles through at least one source node.
pub fn count_source_four_cycles(g: &TannerGraph) -> usize {
    let adj = g.variable_adjacency();
    let mut count = 0;
    let mut seen = vec![usize::MAX; g.n()];
    for v in 0..g.k() {
        for &c in &adj[v] {
            for &w in g.check(c as usize) {
                let w = w as usize;
                if w == v {
                    continue;
                }
                if seen[w] == v {
                    count += 1;
                }
                seen[w] = v;
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{c1, DegreePolynomial};

    fn regular(k_deg: u32, p_deg: u32, c_deg: u32, rate: f64) -> EnsembleSpec {
        // Edge fractions for regular classes with m = rate · k.
        let es = k_deg as f64;
        let ep = rate * p_deg as f64;
        let a_s = es / (es + ep);
        EnsembleSpec::new(
            DegreePolynomial::from_pairs([(k_deg, a_s)]).unwrap(),
            DegreePolynomial::from_pairs([(p_deg, 1.0 - a_s)]).unwrap(),
            DegreePolynomial::from_pairs([(c_deg, 1.0)]).unwrap(),
        )
    }

    #[test]
    fn regular_toy_degrees_exact() {
        // All-degree-2 parity columns cannot give an invertible H_p, so the
        // toy uses degree-1 parity columns (a permuted identity).
        let spec = regular(3, 1, 4, 1.0);
        let g = sample_graph(&spec, 12, 5).unwrap();
        let deg = g.variable_degrees();
        assert!(deg[..12].iter().all(|&d| d == 3));
        assert!(deg[12..].iter().all(|&d| d == 1));
        assert!(g.check_degrees().iter().all(|&d| d == 4));
    }

    #[test]
    fn same_seed_same_graph() {
        let a = sample_graph(&c1(), 2000, 9).unwrap();
        let b = sample_graph(&c1(), 2000, 9).unwrap();
        let c = sample_graph(&c1(), 2000, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn text_round_trip() {
        let g = sample_graph(&c1(), 500, 1).unwrap();
        let mut buf = Vec::new();
        g.write_text(&mut buf).unwrap();
        let h = TannerGraph::read_text(&buf[..], Path::new("mem")).unwrap();
        assert_eq!(g, h);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(&format!("500 {} {}\n", g.m(), g.num_edges())));
    }

    #[test]
    fn malformed_text_rejected() {
        for bad in ["", "1 1", "1 1 1\n0 5\n", "1 1 2\n0 0\n", "1 1 1\n0 x\n"] {
            assert!(TannerGraph::read_text(bad.as_bytes(), Path::new("mem")).is_err());
        }
    }

    #[test]
    fn four_cycle_pass_reduces_cycles() {
        let spec = c1();
        let plain = sample_graph(&spec, 3000, 2).unwrap();
        let opts = GraphOptions {
            remove_four_cycles: true,
        };
        let clean = sample_graph_with(&spec, 3000, 2, opts).unwrap();
        assert!(count_source_four_cycles(&clean) < count_source_four_cycles(&plain));
        assert_eq!(clean.variable_degrees()[3000..], plain.variable_degrees()[3000..]);
    }
}
