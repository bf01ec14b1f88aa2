//! Exact-mode dynamic programs over the NC-spectrum graph: the M and N
//! frontier tables, their linear lce/dia encoding, solution extraction
//! and enumeration, and path-to-sequence expansion.
//!
//! Only plain edges participate here; water-typed edges belong to the
//! scored search.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use crate::masskit::{decompose_gap, MassUnit, ResidueTable};
use crate::ncgraph::{EdgeKind, NCSpectrumGraph, NodeId};

/// M(i,j) = 1 iff there are paths L: x0 -> x_i and R: y_j -> y_0 using
/// exactly one of x_p, y_p for every pair p <= max(i,j).
#[derive(Debug, Clone)]
pub struct MTable {
    k: usize,
    bits: Vec<bool>,
}

impl MTable {
    fn new(k: usize) -> Self {
        MTable { k, bits: vec![false; (k + 1) * (k + 1)] }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * (self.k + 1) + j]
    }

    fn set(&mut self, i: usize, j: usize) {
        self.bits[i * (self.k + 1) + j] = true;
    }
}

/// N(i,j) = 1 iff there is a path from x_i to y_j using exactly one of
/// x_p, y_p for every pair p >= min(i,j).
#[derive(Debug, Clone)]
pub struct NTable {
    k: usize,
    bits: Vec<bool>,
}

impl NTable {
    fn new(k: usize) -> Self {
        NTable { k, bits: vec![false; (k + 1) * (k + 1)] }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * (self.k + 1) + j]
    }

    fn set(&mut self, i: usize, j: usize) {
        self.bits[i * (self.k + 1) + j] = true;
    }
}

/// The four-rule frontier recurrence, exactly as printed, plus the
/// step-2 bases M(1,0) = E(x0,x1) and M(0,1) = E(y1,y0).
pub fn compute_m(g: &NCSpectrumGraph) -> MTable {
    let k = g.k();
    let mut m = MTable::new(k);
    m.set(0, 0);
    if k >= 1 {
        if g.e_xx(0, 1) {
            m.set(1, 0);
        }
        if g.e_yy(1, 0) {
            m.set(0, 1);
        }
    }
    for j in 2..=k {
        for i in 0..=j - 2 {
            if m.get(i, j - 1) {
                if g.e_xx(i, j) {
                    m.set(j, j - 1);
                }
                if g.e_yy(j, j - 1) {
                    m.set(i, j);
                }
            }
            if m.get(j - 1, i) {
                if g.e_xx(j - 1, j) {
                    m.set(j, i);
                }
                if g.e_yy(j, i) {
                    m.set(j - 1, j);
                }
            }
        }
    }
    m
}

/// Mirror recurrence run from the right end. Rule (d) uses the edge
/// (y_i, y_j) — the mirror image of Compute-M's rule (d) — since the new
/// endpoint y_j attaches to the old endpoint y_i.
pub fn compute_n(g: &NCSpectrumGraph) -> NTable {
    let k = g.k();
    let mut n = NTable::new(k);
    if k == 0 {
        if g.e_xy(0, 0) {
            n.set(0, 0);
        }
        return n;
    }
    // Bases: every path that touches level k through its cross edge and
    // covers the pairs in between with one consecutive run. Besides the
    // bare crosses N(k,k-1) and N(k-1,k), these are x_a -> y_k followed
    // by the run y_k .. y_{a+1}, and the run x_{a+1} .. x_k followed by
    // x_k -> y_a; no growth rule can introduce a cross edge later.
    let mut y_run = true;
    let mut x_run = true;
    for a in (0..k).rev() {
        if y_run && g.e_xy(a, k) {
            n.set(a, a + 1);
        }
        if x_run && g.e_xy(k, a) {
            n.set(a + 1, a);
        }
        y_run = y_run && g.e_yy(a + 1, a);
        x_run = x_run && g.e_xx(a, a + 1);
    }
    for j in (0..=k.saturating_sub(2)).rev() {
        for i in (j + 2..=k).rev() {
            if n.get(i, j + 1) {
                if g.e_xx(j, i) {
                    n.set(j, j + 1);
                }
                if g.e_yy(j + 1, j) {
                    n.set(i, j);
                }
            }
            if n.get(j + 1, i) {
                if g.e_xx(j, j + 1) {
                    n.set(j, i);
                }
                if g.e_yy(i, j) {
                    n.set(j + 1, j);
                }
            }
        }
    }
    n
}

/// The linear encoding of M: per-node longest consecutive inside-edge
/// runs plus the two diagonals.
#[derive(Debug, Clone)]
pub struct LceDia {
    /// lce_x[i]: length of the run E(x_i,x_{i+1}), E(x_{i+1},x_{i+2}), ...
    pub lce_x: Vec<usize>,
    /// lce_y[j]: length of the run E(y_j,y_{j-1}), E(y_{j-1},y_{j-2}), ...
    pub lce_y: Vec<usize>,
    /// dia_x[j] = M(j, j-1); dia_x[0] = 1.
    pub dia_x: Vec<bool>,
    /// dia_y[j] = M(j-1, j); dia_y[0] = 1.
    pub dia_y: Vec<bool>,
}

impl LceDia {
    pub fn k(&self) -> usize {
        self.dia_x.len() - 1
    }

    /// O(1) reconstruction of any M entry (Lemma 3 rule and its mirror).
    pub fn m_entry(&self, i: usize, j: usize) -> bool {
        let k = self.k();
        assert!(i <= k && j <= k, "m_entry index out of range");
        if i == j {
            return i == 0;
        }
        if i < j {
            if i + 1 == j {
                self.dia_y[j]
            } else {
                self.dia_y[i + 1] && self.lce_y[j] >= j - i - 1
            }
        } else if j + 1 == i {
            self.dia_x[i]
        } else {
            self.dia_x[j + 1] && self.lce_x[j + 1] >= i - j - 1
        }
    }
}

/// Linear-time computation of lce and dia: the run sweep, then an
/// incoming-inside-edge scan with O(1) M reconstruction.
pub fn compute_lce_dia(g: &NCSpectrumGraph) -> LceDia {
    let k = g.k();
    let mut lce_x = vec![0usize; k + 1];
    let mut lce_y = vec![0usize; k + 1];
    for i in (0..k).rev() {
        if g.e_xx(i, i + 1) {
            lce_x[i] = lce_x[i + 1] + 1;
        }
    }
    for j in 1..=k {
        if g.e_yy(j, j - 1) {
            lce_y[j] = lce_y[j - 1] + 1;
        }
    }
    let mut ld = LceDia { lce_x, lce_y, dia_x: vec![false; k + 1], dia_y: vec![false; k + 1] };
    ld.dia_x[0] = true;
    ld.dia_y[0] = true;
    for j in 1..=k {
        // dia_x[j] = M(j, j-1): some M(p, j-1)=1 with an edge (x_p, x_j).
        ld.dia_x[j] = g.x_in(j).iter().any(|&p| ld.m_entry(p, j - 1));
        // dia_y[j] = M(j-1, j): some M(j-1, p)=1 with an edge (y_j, y_p).
        ld.dia_y[j] = g.y_out(j).iter().any(|&p| ld.m_entry(j - 1, p));
    }
    ld
}

/// Either representation of M, behind one lookup.
#[derive(Debug, Clone, Copy)]
pub enum MAccess<'a> {
    Table(&'a MTable),
    Compact(&'a LceDia),
}

impl MAccess<'_> {
    pub fn k(&self) -> usize {
        match self {
            MAccess::Table(m) => m.k(),
            MAccess::Compact(ld) => ld.k(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        match self {
            MAccess::Table(m) => m.get(i, j),
            MAccess::Compact(ld) => ld.m_entry(i, j),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub kind: EdgeKind,
    pub gap: MassUnit,
}

/// A directed path from x0 to y0 with its typed edges.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPath {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<PathEdge>,
}

impl SolutionPath {
    /// Structural feasibility: strictly increasing coordinates, exactly
    /// one node per pair, exactly one cross edge, every edge in g.
    pub fn is_feasible(&self, g: &NCSpectrumGraph) -> bool {
        let k = g.k();
        if self.nodes.first() != Some(&NodeId::x(0)) || self.nodes.last() != Some(&NodeId::y(0)) {
            return false;
        }
        let mut seen = vec![0usize; k + 1];
        for node in &self.nodes {
            seen[node.pair] += 1;
        }
        // Pair 0 contributes both endpoints; every other pair exactly
        // one node.
        if seen[0] != 2 || seen[1..].iter().any(|&c| c != 1) {
            return false;
        }
        let mut crosses = 0;
        for (idx, e) in self.edges.iter().enumerate() {
            if self.nodes[idx] != e.from || self.nodes[idx + 1] != e.to {
                return false;
            }
            if g.gap(e.from, e.to) <= 0 || g.edge(e.from, e.to).is_none() {
                return false;
            }
            if e.from.side != e.to.side {
                crosses += 1;
            }
        }
        crosses == 1 && self.edges.len() + 1 == self.nodes.len()
    }
}

fn make_edge(g: &NCSpectrumGraph, from: NodeId, to: NodeId) -> PathEdge {
    PathEdge { from, to, kind: g.edge(from, to).unwrap_or(EdgeKind::Plain), gap: g.gap(from, to) }
}

/// Terminal states in deterministic order: last row (k, j) by ascending
/// j, then last column (i, k) by ascending i.
fn terminals(g: &NCSpectrumGraph, m: &MAccess) -> Vec<(usize, usize)> {
    let k = g.k();
    let mut out = Vec::new();
    if k == 0 {
        if m.get(0, 0) && g.e_xy(0, 0) {
            out.push((0, 0));
        }
        return out;
    }
    for j in 0..k {
        if m.get(k, j) && g.e_xy(k, j) {
            out.push((k, j));
        }
    }
    for i in 0..k {
        if m.get(i, k) && g.e_xy(i, k) {
            out.push((i, k));
        }
    }
    out
}

/// Backtrack one state step. Returns the candidate predecessor states in
/// greedy (largest predecessor index first) order together with the path
/// edge the step consumes.
fn predecessors(
    g: &NCSpectrumGraph,
    m: &MAccess,
    i: usize,
    j: usize,
) -> Vec<((usize, usize), PathEdge)> {
    let mut out = Vec::new();
    if i > j {
        if i > j + 1 {
            // Consecutive x-run: the predecessor is forced.
            if g.e_xx(i - 1, i) && m.get(i - 1, j) {
                out.push(((i - 1, j), make_edge(g, NodeId::x(i - 1), NodeId::x(i))));
            }
        } else {
            for p in (0..=j).rev() {
                if g.e_xx(p, i) && m.get(p, j) {
                    out.push(((p, j), make_edge(g, NodeId::x(p), NodeId::x(i))));
                }
            }
        }
    } else if j > i {
        if j > i + 1 {
            if g.e_yy(j, j - 1) && m.get(i, j - 1) {
                out.push(((i, j - 1), make_edge(g, NodeId::y(j), NodeId::y(j - 1))));
            }
        } else {
            for p in (0..=i).rev() {
                if g.e_yy(j, p) && m.get(i, p) {
                    out.push(((i, p), make_edge(g, NodeId::y(j), NodeId::y(p))));
                }
            }
        }
    }
    out
}

fn assemble(
    g: &NCSpectrumGraph,
    terminal: (usize, usize),
    steps: &[((usize, usize), PathEdge)],
) -> SolutionPath {
    // Steps were collected while walking from the terminal back to (0,0).
    let mut l_edges: Vec<PathEdge> = Vec::new();
    let mut r_edges: Vec<PathEdge> = Vec::new();
    for &(_, edge) in steps {
        match edge.from.side {
            crate::ncgraph::Side::X => l_edges.push(edge),
            crate::ncgraph::Side::Y => r_edges.push(edge),
        }
    }
    l_edges.reverse(); // collected last-first
    let cross = make_edge(g, NodeId::x(terminal.0), NodeId::y(terminal.1));
    let mut edges = l_edges;
    edges.push(cross);
    edges.extend(r_edges);
    let mut nodes = vec![NodeId::x(0)];
    for e in &edges {
        nodes.push(e.to);
    }
    SolutionPath { nodes, edges }
}

/// One feasible solution, if any: scan the last row/column of M for a
/// state with a cross edge, then backtrack greedily.
pub fn extract_solution(g: &NCSpectrumGraph, m: &MAccess) -> Option<SolutionPath> {
    for terminal in terminals(g, m) {
        let mut steps = Vec::new();
        let (mut i, mut j) = terminal;
        let mut dead = false;
        while (i, j) != (0, 0) {
            match predecessors(g, m, i, j).into_iter().next() {
                Some((state, edge)) => {
                    steps.push((state, edge));
                    (i, j) = state;
                }
                None => {
                    dead = true;
                    break;
                }
            }
        }
        if !dead {
            return Some(assemble(g, terminal, &steps));
        }
    }
    None
}

/// All distinct feasible solutions by exhaustive backtracking, truncated
/// at `limit`. With `limit` = 1 this yields exactly extract_solution's
/// path.
pub fn enumerate_solutions(g: &NCSpectrumGraph, m: &MAccess, limit: usize) -> Vec<SolutionPath> {
    let mut out = Vec::new();
    if limit == 0 {
        return out;
    }
    for terminal in terminals(g, m) {
        let mut steps = Vec::new();
        dfs_paths(g, m, terminal, terminal, &mut steps, &mut out, limit);
        if out.len() >= limit {
            break;
        }
    }
    out
}

fn dfs_paths(
    g: &NCSpectrumGraph,
    m: &MAccess,
    terminal: (usize, usize),
    state: (usize, usize),
    steps: &mut Vec<((usize, usize), PathEdge)>,
    out: &mut Vec<SolutionPath>,
    limit: usize,
) {
    if out.len() >= limit {
        return;
    }
    if state == (0, 0) {
        out.push(assemble(g, terminal, steps));
        return;
    }
    for (pred, edge) in predecessors(g, m, state.0, state.1) {
        steps.push((pred, edge));
        dfs_paths(g, m, terminal, pred, steps, out, limit);
        steps.pop();
        if out.len() >= limit {
            return;
        }
    }
}

fn distinct_permutations(multiset: &[char]) -> Vec<String> {
    let mut chars = multiset.to_vec();
    chars.sort_unstable();
    let mut out = Vec::new();
    let mut current = String::with_capacity(chars.len());
    let mut used = vec![false; chars.len()];
    permute(&chars, &mut used, &mut current, &mut out);
    out
}

fn permute(chars: &[char], used: &mut [bool], current: &mut String, out: &mut Vec<String>) {
    if current.len() == chars.len() {
        out.push(current.clone());
        return;
    }
    for idx in 0..chars.len() {
        if used[idx] || (idx > 0 && chars[idx] == chars[idx - 1] && !used[idx - 1]) {
            continue;
        }
        used[idx] = true;
        current.push(chars[idx]);
        permute(chars, used, current, out);
        current.pop();
        used[idx] = false;
    }
}

/// Cartesian expansion of per-edge residue decompositions into peptide
/// strings, fewest total residues first, lexicographic within a count,
/// truncated at `limit`.
pub fn expand_sequences(
    path: &SolutionPath,
    rt: &ResidueTable,
    tol: MassUnit,
    limit: usize,
) -> Vec<String> {
    if limit == 0 {
        return Vec::new();
    }
    let mut per_edge: Vec<Vec<String>> = Vec::with_capacity(path.edges.len());
    for e in &path.edges {
        let effective = e.gap - MassUnit::from(e.kind.water_delta()) * rt.water();
        let mut labels: Vec<String> = Vec::new();
        if effective.abs() <= tol {
            // Pure-water edge: contributes no residues.
            labels.push(String::new());
        }
        for multiset in decompose_gap(rt, effective, tol, limit) {
            labels.extend(distinct_permutations(&multiset));
        }
        labels.sort_by(|a, b| (a.len(), a.as_str()).cmp(&(b.len(), b.as_str())));
        labels.dedup();
        if labels.is_empty() {
            return Vec::new();
        }
        per_edge.push(labels);
    }
    if per_edge.is_empty() {
        return Vec::new();
    }

    // k-smallest-products walk over the per-edge label lists.
    let key = |idx: &[usize]| -> (usize, String) {
        let seq: String =
            idx.iter().enumerate().map(|(e, &i)| per_edge[e][i].as_str()).collect();
        (seq.chars().count(), seq)
    };
    let start = vec![0usize; per_edge.len()];
    let mut heap = BinaryHeap::new();
    let mut seen = HashSet::new();
    seen.insert(start.clone());
    heap.push(Reverse((key(&start), start)));
    let mut out = Vec::new();
    while let Some(Reverse(((_, seq), idx))) = heap.pop() {
        if out.last() != Some(&seq) {
            out.push(seq);
        }
        if out.len() >= limit {
            break;
        }
        for pos in 0..idx.len() {
            if idx[pos] + 1 < per_edge[pos].len() {
                let mut next = idx.clone();
                next[pos] += 1;
                if seen.insert(next.clone()) {
                    heap.push(Reverse((key(&next), next)));
                }
            }
        }
    }
    out.dedup();
    out.truncate(limit);
    out
}
