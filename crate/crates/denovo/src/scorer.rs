//! Scored sequencing: the Q dynamic program that finds a maximum-score
//! antisymmetric path, with an optional three-layer variant balancing
//! water-typed edges.
//!
//! Reachability is tracked as a flag beside the value rather than the
//! sentinel "+1" trick, so zero and negative edge scores are handled
//! without ambiguity.

use crate::dpsolver::{PathEdge, SolutionPath};
use crate::ncgraph::{EdgeKind, NCSpectrumGraph, NodeId, Side};

/// Water penalty applied by the default score for each water-typed edge.
const WATER_PENALTY: f64 = 0.5;
/// Reward floor for auxiliary nodes (pair 0) and intensity-free pairs.
const REWARD_FLOOR: f64 = 0.1;

/// An edge score s(u, v); accumulated over the edges of a path.
#[derive(Debug, Clone)]
pub struct ScoreFunction {
    /// Reward collected when a path enters either node of pair p.
    rewards: Vec<f64>,
    water_penalty: f64,
}

impl ScoreFunction {
    /// Intensity-driven rewards: each pair's source-peak intensity
    /// normalized to (0, 1], floored at 0.1; water edges cost 0.5.
    pub fn default_score(g: &NCSpectrumGraph) -> Self {
        let max = g
            .pairs()
            .iter()
            .skip(1)
            .filter_map(|p| p.intensity)
            .fold(0.0f64, f64::max);
        let rewards = g
            .pairs()
            .iter()
            .enumerate()
            .map(|(idx, p)| match p.intensity {
                Some(i) if idx > 0 && max > 0.0 => (i / max).max(REWARD_FLOOR),
                _ => REWARD_FLOOR,
            })
            .collect();
        ScoreFunction { rewards, water_penalty: WATER_PENALTY }
    }

    /// Reward 1 per edge regardless of intensities; path score = length.
    pub fn uniform(g: &NCSpectrumGraph) -> Self {
        ScoreFunction { rewards: vec![1.0; g.k() + 1], water_penalty: 0.0 }
    }

    pub fn score(&self, _from: NodeId, to: NodeId, kind: EdgeKind) -> f64 {
        let penalty = if kind == EdgeKind::Plain { 0.0 } else { self.water_penalty };
        self.rewards[to.pair] - penalty
    }
}

/// One backtracking step of the Q tables.
#[derive(Debug, Clone, Copy)]
struct Parent {
    state: (usize, usize, i32),
    edge: (NodeId, NodeId, EdgeKind),
}

/// Scored reachability tables over states (i, j, c) where c is the
/// running net water count in [-1, 1]; plain mode only uses c = 0.
pub struct QTable {
    k: usize,
    reach: Vec<bool>,
    value: Vec<f64>,
    parent: Vec<Option<Parent>>,
}

impl QTable {
    fn new(k: usize) -> Self {
        let size = (k + 1) * (k + 1) * 3;
        QTable { k, reach: vec![false; size], value: vec![f64::NEG_INFINITY; size], parent: vec![None; size] }
    }

    fn idx(&self, i: usize, j: usize, c: i32) -> usize {
        debug_assert!((-1..=1).contains(&c));
        (i * (self.k + 1) + j) * 3 + (c + 1) as usize
    }

    pub fn reachable(&self, i: usize, j: usize, c: i32) -> bool {
        self.reach[self.idx(i, j, c)]
    }

    pub fn value(&self, i: usize, j: usize, c: i32) -> f64 {
        self.value[self.idx(i, j, c)]
    }

    fn relax(&mut self, to: (usize, usize, i32), val: f64, parent: Option<Parent>) {
        let idx = self.idx(to.0, to.1, to.2);
        if !self.reach[idx] || val > self.value[idx] {
            self.reach[idx] = true;
            self.value[idx] = val;
            self.parent[idx] = parent;
        }
    }
}

/// Edges usable by a table: plain only, or all typed edges.
fn inside_x(g: &NCSpectrumGraph, i: usize, j: usize, water: bool) -> Option<EdgeKind> {
    match g.edge(NodeId::x(i), NodeId::x(j)) {
        Some(EdgeKind::Plain) => Some(EdgeKind::Plain),
        Some(kind) if water => Some(kind),
        _ => None,
    }
}

fn inside_y(g: &NCSpectrumGraph, q: usize, p: usize, water: bool) -> Option<EdgeKind> {
    match g.edge(NodeId::y(q), NodeId::y(p)) {
        Some(EdgeKind::Plain) => Some(EdgeKind::Plain),
        Some(kind) if water => Some(kind),
        _ => None,
    }
}

fn cross(g: &NCSpectrumGraph, i: usize, j: usize, water: bool) -> Option<EdgeKind> {
    match g.edge(NodeId::x(i), NodeId::y(j)) {
        Some(EdgeKind::Plain) => Some(EdgeKind::Plain),
        Some(kind) if water => Some(kind),
        _ => None,
    }
}

fn step(c: i32, kind: EdgeKind) -> Option<i32> {
    let nc = c + kind.water_delta();
    (-1..=1).contains(&nc).then_some(nc)
}

/// The scored frontier recurrence. With `water` false only plain edges
/// and the c = 0 layer are used; with `water` true, typed edges move
/// between layers and the net must return to 0 at the final cross edge.
fn compute_q_inner(g: &NCSpectrumGraph, sf: &ScoreFunction, water: bool) -> QTable {
    let k = g.k();
    let mut q = QTable::new(k);
    q.relax((0, 0, 0), 0.0, None);
    let cs: &[i32] = if water { &[-1, 0, 1] } else { &[0] };
    if k >= 1 {
        if let Some(kind) = inside_x(g, 0, 1, water) {
            if let Some(nc) = step(0, kind) {
                let edge = (NodeId::x(0), NodeId::x(1), kind);
                q.relax((1, 0, nc), sf.score(edge.0, edge.1, kind), Some(Parent { state: (0, 0, 0), edge }));
            }
        }
        if let Some(kind) = inside_y(g, 1, 0, water) {
            if let Some(nc) = step(0, kind) {
                let edge = (NodeId::y(1), NodeId::y(0), kind);
                q.relax((0, 1, nc), sf.score(edge.0, edge.1, kind), Some(Parent { state: (0, 0, 0), edge }));
            }
        }
    }
    for j in 2..=k {
        for i in 0..=j - 2 {
            for &c in cs {
                if q.reachable(i, j - 1, c) {
                    let base = q.value(i, j - 1, c);
                    if let Some(kind) = inside_x(g, i, j, water) {
                        if let Some(nc) = step(c, kind) {
                            let edge = (NodeId::x(i), NodeId::x(j), kind);
                            q.relax((j, j - 1, nc), base + sf.score(edge.0, edge.1, kind), Some(Parent { state: (i, j - 1, c), edge }));
                        }
                    }
                    if let Some(kind) = inside_y(g, j, j - 1, water) {
                        if let Some(nc) = step(c, kind) {
                            let edge = (NodeId::y(j), NodeId::y(j - 1), kind);
                            q.relax((i, j, nc), base + sf.score(edge.0, edge.1, kind), Some(Parent { state: (i, j - 1, c), edge }));
                        }
                    }
                }
                if q.reachable(j - 1, i, c) {
                    let base = q.value(j - 1, i, c);
                    if let Some(kind) = inside_x(g, j - 1, j, water) {
                        if let Some(nc) = step(c, kind) {
                            let edge = (NodeId::x(j - 1), NodeId::x(j), kind);
                            q.relax((j, i, nc), base + sf.score(edge.0, edge.1, kind), Some(Parent { state: (j - 1, i, c), edge }));
                        }
                    }
                    if let Some(kind) = inside_y(g, j, i, water) {
                        if let Some(nc) = step(c, kind) {
                            let edge = (NodeId::y(j), NodeId::y(i), kind);
                            q.relax((j - 1, j, nc), base + sf.score(edge.0, edge.1, kind), Some(Parent { state: (j - 1, i, c), edge }));
                        }
                    }
                }
            }
        }
    }
    q
}

pub fn compute_q(g: &NCSpectrumGraph, sf: &ScoreFunction) -> QTable {
    compute_q_inner(g, sf, false)
}

pub fn compute_q_water(g: &NCSpectrumGraph, sf: &ScoreFunction) -> QTable {
    compute_q_inner(g, sf, true)
}

/// A maximum-score path with its total score.
#[derive(Debug, Clone)]
pub struct ScoredPath {
    pub score: f64,
    pub path: SolutionPath,
}

fn reconstruct(g: &NCSpectrumGraph, q: &QTable, terminal: (usize, usize, i32), cross_edge: (NodeId, NodeId, EdgeKind)) -> SolutionPath {
    let mut l_edges: Vec<PathEdge> = Vec::new();
    let mut r_edges: Vec<PathEdge> = Vec::new();
    let mut state = terminal;
    while let Some(p) = q.parent[q.idx(state.0, state.1, state.2)] {
        let (from, to, kind) = p.edge;
        let edge = PathEdge { from, to, kind, gap: g.gap(from, to) };
        match from.side {
            Side::X => l_edges.push(edge),
            Side::Y => r_edges.push(edge),
        }
        state = p.state;
    }
    l_edges.reverse();
    let (cf, ct, ck) = cross_edge;
    let mut edges = l_edges;
    edges.push(PathEdge { from: cf, to: ct, kind: ck, gap: g.gap(cf, ct) });
    edges.extend(r_edges);
    let mut nodes = vec![NodeId::x(0)];
    for e in &edges {
        nodes.push(e.to);
    }
    SolutionPath { nodes, edges }
}

fn best_path_inner(g: &NCSpectrumGraph, sf: &ScoreFunction, water: bool) -> Option<ScoredPath> {
    let q = compute_q_inner(g, sf, water);
    let k = g.k();
    let cs: &[i32] = if water { &[-1, 0, 1] } else { &[0] };
    // Best (score, terminal DP state, closing cross edge) seen so far.
    #[allow(clippy::type_complexity)]
    let mut best: Option<(f64, (usize, usize, i32), (NodeId, NodeId, EdgeKind))> = None;
    let mut consider = |i: usize, j: usize| {
        for &c in cs {
            if !q.reachable(i, j, c) {
                continue;
            }
            if let Some(kind) = cross(g, i, j, water) {
                // The cross edge must return the net water count to 0.
                if c + kind.water_delta() != 0 {
                    continue;
                }
                let edge = (NodeId::x(i), NodeId::y(j), kind);
                let total = q.value(i, j, c) + sf.score(edge.0, edge.1, kind);
                if best.as_ref().is_none_or(|&(b, _, _)| total > b) {
                    best = Some((total, (i, j, c), edge));
                }
            }
        }
    };
    if k == 0 {
        consider(0, 0);
    } else {
        for j in 0..k {
            consider(k, j);
        }
        for i in 0..k {
            consider(i, k);
        }
    }
    best.map(|(score, state, edge)| ScoredPath { score, path: reconstruct(g, &q, state, edge) })
}

/// Maximum-score path over plain edges.
pub fn best_scored_path(g: &NCSpectrumGraph, sf: &ScoreFunction) -> Option<ScoredPath> {
    best_path_inner(g, sf, false)
}

/// Maximum-score path over typed edges with net water 0.
pub fn best_scored_path_water(g: &NCSpectrumGraph, sf: &ScoreFunction) -> Option<ScoredPath> {
    best_path_inner(g, sf, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::masskit::{MassArray, ResidueTable};
    use crate::spectrum_io::Spectrum;
    use crate::testkit;

    const EPS: f64 = 1e-9;

    #[test]
    fn t1_uniform_score() {
        let g = testkit::t1_graph();
        let sf = ScoreFunction::uniform(&g);
        let best = best_scored_path(&g, &sf).unwrap();
        assert!((best.score - 2.0).abs() < EPS);
        assert_eq!(best.path.nodes, vec![NodeId::x(0), NodeId::x(1), NodeId::y(0)]);
        assert!(best.path.is_feasible(&g));
    }

    #[test]
    fn t2_has_no_scored_path() {
        let g = testkit::t2_graph();
        let sf = ScoreFunction::uniform(&g);
        assert!(best_scored_path(&g, &sf).is_none());
    }

    #[test]
    fn default_score_prefers_intense_peaks() {
        let g = testkit::t1_graph();
        let sf = ScoreFunction::default_score(&g);
        // Path x0 -> x1 -> y0: reward(x1) = 1.0 (only real pair),
        // reward(y0) = 0.1 floor.
        let best = best_scored_path(&g, &sf).unwrap();
        assert!((best.score - 1.1).abs() < EPS);
    }

    #[test]
    fn edgeless_graph_has_no_path() {
        let mut g = testkit::t1_graph();
        let edges: Vec<_> = g.edges().map(|(u, v, _)| (u, v)).collect();
        for (u, v) in edges {
            g.remove_edge(u, v);
        }
        let sf = ScoreFunction::uniform(&g);
        assert!(best_scored_path(&g, &sf).is_none());
    }

    #[test]
    fn water_path_balances_to_zero() {
        // W = 260 over {G, A}: peaks 76 (Ser-like, not decomposable) and
        // 94 = 76 + 18 give a plus-water edge; the path must compensate.
        let rt = ResidueTable::toy(&[('G', 57.0), ('A', 71.0)]);
        let a = MassArray::build(&rt, 400).unwrap();
        let peaks = [(76.0, 50.0), (94.0, 80.0)];
        let s = Spectrum {
            parent_mass: 260.0,
            peaks: peaks.iter().map(|&(m, i)| crate::spectrum_io::Peak { mass: m, intensity: i }).collect(),
            title: None,
        };
        let g = NCSpectrumGraph::build(&s, &rt, &a, 0, true).unwrap();
        let sf = ScoreFunction::uniform(&g);
        if let Some(best) = best_scored_path_water(&g, &sf) {
            let net: i32 = best.path.edges.iter().map(|e| e.kind.water_delta()).sum();
            assert_eq!(net, 0);
        }
        // Exhaustive check below regardless.
        let closure = |u: NodeId, v: NodeId| sf.score(u, v, g.edge(u, v).unwrap());
        let oracle = testkit::oracle_best_score_water(&g, &closure);
        match (best_scored_path_water(&g, &sf), oracle) {
            (Some(got), Some((want, _))) => assert!((got.score - want).abs() < EPS),
            (None, None) => {}
            (got, want) => panic!("mismatch: {:?} vs {:?}", got.map(|p| p.score), want.map(|w| w.0)),
        }
    }

    #[test]
    fn oracle_equivalence_plain() {
        let rt = ResidueTable::toy(&[('G', 57.0), ('A', 71.0), ('S', 87.0)]);
        for seed in 0..40u64 {
            let g = testkit::random_dropped_graph(&rt, 7, 0.3, seed);
            let sf = ScoreFunction::default_score(&g);
            let closure = |u: NodeId, v: NodeId| sf.score(u, v, g.edge(u, v).unwrap());
            let got = best_scored_path(&g, &sf);
            let want = testkit::oracle_best_score(&g, &closure);
            match (got, want) {
                (Some(got), Some((want, _))) => {
                    assert!((got.score - want).abs() < EPS, "seed {seed}");
                    assert!(got.path.is_feasible(&g), "seed {seed}");
                    let rescored: f64 = got
                        .path
                        .edges
                        .iter()
                        .map(|e| sf.score(e.from, e.to, e.kind))
                        .sum();
                    assert!((rescored - got.score).abs() < EPS, "seed {seed}");
                }
                (None, None) => {}
                (got, want) => {
                    panic!("seed {seed}: {:?} vs {:?}", got.map(|p| p.score), want.map(|w| w.0))
                }
            }
        }
    }

    #[test]
    fn oracle_equivalence_water() {
        let rt = ResidueTable::toy(&[('G', 57.0), ('A', 71.0), ('S', 87.0)]);
        for seed in 100..140u64 {
            let g = testkit::random_water_graph(&rt, 6, seed);
            let sf = ScoreFunction::default_score(&g);
            let closure = |u: NodeId, v: NodeId| sf.score(u, v, g.edge(u, v).unwrap());
            let got = best_path_inner(&g, &sf, true);
            let want = testkit::oracle_best_score_water(&g, &closure);
            match (got, want) {
                (Some(got), Some((want, _))) => {
                    assert!((got.score - want).abs() < EPS, "seed {seed}");
                    let net: i32 =
                        got.path.edges.iter().map(|e| e.kind.water_delta()).sum();
                    assert_eq!(net, 0, "seed {seed}");
                }
                (None, None) => {}
                (got, want) => {
                    panic!("seed {seed}: {:?} vs {:?}", got.map(|p| p.score), want.map(|w| w.0))
                }
            }
        }
    }
}
