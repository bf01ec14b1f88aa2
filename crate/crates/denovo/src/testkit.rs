//! Synthetic spectrum generation and brute-force oracles.
//!
//! The oracles implement the table and path *definitions* by exhaustive
//! enumeration; they deliberately share no code with the dynamic
//! programs they verify, and are bounded at k <= 10.

use std::collections::HashSet;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::dpsolver::{PathEdge, SolutionPath};
use crate::masskit::{MassArray, MassError, MassUnit, ResidueTable};
use crate::ncgraph::{EdgeKind, NCSpectrumGraph, NodeId, Side};
use crate::spectrum_io::{Peak, Spectrum};

/// Largest pair count the exhaustive oracles accept.
pub const ORACLE_MAX_K: usize = 10;

/// Mass added per extra neutron, for synthetic isotope envelopes.
const NEUTRON_DA: f64 = 1.00335;

/// Knobs for the spectrum synthesizer. `drop_indices` are positions in
/// the canonical ion list b1..b_{n-1}, y1..y_{n-1} (0-based).
#[derive(Debug, Clone, Default)]
pub struct SynthOpts {
    pub drop_indices: Vec<usize>,
    pub noise_peaks: usize,
    pub isotope_envelope: bool,
    pub water_losses: bool,
    /// (residue position, mass delta in daltons) applied before ion
    /// masses are computed.
    pub modification: Option<(usize, f64)>,
    pub seed: u64,
}

/// Complete b/y ladder of a peptide with the requested corruptions.
/// b_i = first i residues + proton; y_j = last j residues + water;
/// parent mass W = all residues + water. Deterministic for a fixed seed.
pub fn synthesize_spectrum(
    peptide: &str,
    rt: &ResidueTable,
    opts: &SynthOpts,
) -> Result<Spectrum, MassError> {
    if peptide.is_empty() {
        return Err(MassError::EmptyTable);
    }
    let mut masses: Vec<f64> = peptide
        .chars()
        .map(|c| rt.get(c).map(|r| r.mass_da).ok_or(MassError::UnknownResidue(c)))
        .collect::<Result<_, _>>()?;
    if let Some((pos, delta)) = opts.modification {
        assert!(pos < masses.len(), "modification position out of range");
        masses[pos] += delta;
    }
    let n = masses.len();
    let total: f64 = masses.iter().sum();
    let parent = total + rt.water_da();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut ions: Vec<f64> = Vec::with_capacity(2 * (n - 1));
    let mut prefix = 0.0;
    for &m in &masses[..n - 1] {
        prefix += m;
        ions.push(prefix + rt.proton_da());
    }
    let mut suffix = 0.0;
    for &m in masses[1..].iter().rev() {
        suffix += m;
        ions.push(suffix + rt.water_da());
    }

    let dropped: HashSet<usize> = opts.drop_indices.iter().copied().collect();
    let mut peaks: Vec<Peak> = Vec::new();
    for (idx, &mass) in ions.iter().enumerate() {
        if dropped.contains(&idx) {
            continue;
        }
        let intensity = rng.gen_range(50.0..100.0);
        peaks.push(Peak { mass, intensity });
        if opts.isotope_envelope {
            peaks.push(Peak { mass: mass + NEUTRON_DA, intensity: intensity * 0.4 });
        }
        if opts.water_losses {
            peaks.push(Peak { mass: mass - rt.water_da(), intensity: intensity * 0.3 });
        }
    }
    let lo = rt.water_da() + rt.proton_da() + 1.0;
    let hi = parent - rt.water_da() + rt.proton_da() - 1.0;
    for _ in 0..opts.noise_peaks {
        peaks.push(Peak { mass: rng.gen_range(lo..hi), intensity: rng.gen_range(5.0..30.0) });
    }
    peaks.sort_by(|a, b| a.mass.total_cmp(&b.mass));
    Ok(Spectrum { parent_mass: parent, peaks, title: Some(peptide.to_string()) })
}

/// The two-node toy instance: peptide AG over the nominal {G, A}
/// alphabet with only the b1 peak (mass 72) observed.
pub fn t1_graph() -> NCSpectrumGraph {
    let rt = ResidueTable::toy(&[('G', 57.0), ('A', 71.0)]);
    let a = MassArray::build(&rt, 400).unwrap();
    let s = synthesize_spectrum("AG", &rt, &SynthOpts { drop_indices: vec![1], ..Default::default() })
        .unwrap();
    NCSpectrumGraph::build(&s, &rt, &a, 0, false).unwrap()
}

/// The modified toy instance: peptide AG with the A carrying +14, only
/// the b1 peak (mass 86) observed. W = 160; no feasible exact path.
pub fn t2_graph() -> NCSpectrumGraph {
    let rt = ResidueTable::toy(&[('G', 57.0), ('A', 71.0)]);
    let a = MassArray::build(&rt, 400).unwrap();
    let opts =
        SynthOpts { drop_indices: vec![1], modification: Some((0, 14.0)), ..Default::default() };
    let s = synthesize_spectrum("AG", &rt, &opts).unwrap();
    NCSpectrumGraph::build(&s, &rt, &a, 0, false).unwrap()
}

/// Graph of a peptide's complete b/y spectrum. Tolerance is 0 for
/// nominal (delta = 1) tables and 0.5 Da otherwise, to absorb rounding
/// of complementary coordinates.
pub fn full_ion_graph(
    peptide: &str,
    rt: &ResidueTable,
    h: MassUnit,
) -> (NCSpectrumGraph, Spectrum) {
    let a = MassArray::build(rt, h).unwrap();
    let s = synthesize_spectrum(peptide, rt, &SynthOpts::default()).unwrap();
    let tol = if rt.delta() >= 1.0 {
        0
    } else {
        crate::masskit::discretize(crate::masskit::DEFAULT_TOLERANCE, rt.delta()).unwrap()
    };
    let g = NCSpectrumGraph::build(&s, rt, &a, tol, false).unwrap();
    (g, s)
}

/// Random peptide over rt's alphabet.
pub fn random_peptide(rt: &ResidueTable, len: usize, rng: &mut impl Rng) -> String {
    (0..len).map(|_| rt.residues().choose(rng).unwrap().symbol).collect()
}

/// A small random graph: random peptide of length <= max_k + 1, full
/// ladder, then peaks and edges dropped independently. k <= max_k.
pub fn random_dropped_graph(
    rt: &ResidueTable,
    max_k: usize,
    drop_prob: f64,
    seed: u64,
) -> NCSpectrumGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = rng.gen_range(2..=max_k + 1);
    let peptide = random_peptide(rt, len, &mut rng);
    let ion_count = 2 * (len - 1);
    let drop_indices: Vec<usize> =
        (0..ion_count).filter(|_| rng.gen_bool(drop_prob)).collect();
    let opts = SynthOpts { drop_indices, seed: rng.gen(), ..Default::default() };
    let s = synthesize_spectrum(&peptide, rt, &opts).unwrap();
    let a = MassArray::build(rt, 400).unwrap();
    let mut g = NCSpectrumGraph::build(&s, rt, &a, 0, false).unwrap();
    let edges: Vec<(NodeId, NodeId)> = g.edges().map(|(u, v, _)| (u, v)).collect();
    for (u, v) in edges {
        if rng.gen_bool(drop_prob / 2.0) {
            g.remove_edge(u, v);
        }
    }
    g
}

/// A random dropped graph with extra randomly typed water edges, for
/// exercising the three-layer scored search.
pub fn random_water_graph(rt: &ResidueTable, max_k: usize, seed: u64) -> NCSpectrumGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sub_seed = rng.gen();
    let mut g = random_dropped_graph(rt, max_k, 0.4, sub_seed);
    let nodes = g.sorted_nodes();
    for (ai, &u) in nodes.iter().enumerate() {
        for &v in &nodes[ai + 1..] {
            if u.pair == v.pair || g.coord(v) <= g.coord(u) {
                continue;
            }
            if g.edge(u, v).is_none() && rng.gen_bool(0.25) {
                let kind = if rng.gen_bool(0.5) {
                    EdgeKind::PlusWater
                } else {
                    EdgeKind::MinusWater
                };
                g.insert_edge(u, v, kind);
            }
        }
    }
    g
}

/// Boolean table produced by the oracles.
#[derive(Debug, Clone)]
pub struct OracleTable {
    k: usize,
    bits: Vec<bool>,
}

impl OracleTable {
    fn new(k: usize) -> Self {
        OracleTable { k, bits: vec![false; (k + 1) * (k + 1)] }
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * (self.k + 1) + j]
    }

    fn set(&mut self, i: usize, j: usize) {
        self.bits[i * (self.k + 1) + j] = true;
    }
}

/// Pair masks (bits 1..=k) of every plain x-path x0 -> x_i, per i.
fn l_masks(g: &NCSpectrumGraph) -> Vec<HashSet<u64>> {
    let k = g.k();
    let mut out: Vec<HashSet<u64>> = vec![HashSet::new(); k + 1];
    // DFS over inside x-edges; masks exclude pair 0.
    fn dfs(g: &NCSpectrumGraph, i: usize, mask: u64, out: &mut Vec<HashSet<u64>>) {
        out[i].insert(mask);
        for j in i + 1..=g.k() {
            if g.e_xx(i, j) {
                dfs(g, j, mask | (1 << j), out);
            }
        }
    }
    dfs(g, 0, 0, &mut out);
    out
}

/// Pair masks of every plain y-path y_j -> y_0, per j.
fn r_masks(g: &NCSpectrumGraph) -> Vec<HashSet<u64>> {
    let k = g.k();
    let mut out: Vec<HashSet<u64>> = vec![HashSet::new(); k + 1];
    // Walk backwards: which y_q reach y_p directly, starting from y_0.
    fn dfs(g: &NCSpectrumGraph, j: usize, mask: u64, out: &mut Vec<HashSet<u64>>) {
        out[j].insert(mask);
        for q in j + 1..=g.k() {
            if g.e_yy(q, j) {
                dfs(g, q, mask | (1 << q), out);
            }
        }
    }
    dfs(g, 0, 0, &mut out);
    out
}

fn full_mask(hi: usize) -> u64 {
    // bits 1..=hi set
    if hi == 0 {
        0
    } else {
        ((1u64 << (hi + 1)) - 1) & !1
    }
}

/// Exhaustive M and N from their definitions. Panics if k > ORACLE_MAX_K.
pub fn oracle_tables(g: &NCSpectrumGraph) -> (OracleTable, OracleTable) {
    let k = g.k();
    assert!(k <= ORACLE_MAX_K, "oracle bound exceeded: k = {k}");
    let lm = l_masks(g);
    let rm = r_masks(g);
    let mut m = OracleTable::new(k);
    #[allow(clippy::needless_range_loop)]
    for i in 0..=k {
        for j in 0..=k {
            let target = full_mask(i.max(j));
            let hit = lm[i].iter().any(|&a| {
                rm[j].iter().any(|&b| a & b == 0 && a | b == target)
            });
            if hit {
                m.set(i, j);
            }
        }
    }

    let mut n = OracleTable::new(k);
    if k == 0 {
        if g.e_xy(0, 0) {
            n.set(0, 0);
        }
        return (m, n);
    }
    for i in 0..=k {
        for j in 0..=k {
            if oracle_n_entry(g, i, j) {
                n.set(i, j);
            }
        }
    }
    (m, n)
}

/// Is there a plain path x_i -> y_j using exactly one of x_p, y_p for
/// every pair p >= min(i,j) and nothing below?
fn oracle_n_entry(g: &NCSpectrumGraph, i: usize, j: usize) -> bool {
    let lo = i.min(j);
    let want = {
        let mut mask = 0u64;
        for p in lo..=g.k() {
            mask |= 1 << p;
        }
        mask
    };
    fn dfs(
        g: &NCSpectrumGraph,
        node: NodeId,
        target: NodeId,
        lo: usize,
        mask: u64,
        want: u64,
    ) -> bool {
        if node == target {
            return mask == want;
        }
        match node.side {
            Side::X => {
                for b in node.pair + 1..=g.k() {
                    if b >= lo
                        && mask & (1 << b) == 0
                        && g.e_xx(node.pair, b)
                        && dfs(g, NodeId::x(b), target, lo, mask | (1 << b), want)
                    {
                        return true;
                    }
                }
                for &b in g.x_cross(node.pair) {
                    if b >= lo
                        && mask & (1 << b) == 0
                        && dfs(g, NodeId::y(b), target, lo, mask | (1 << b), want)
                    {
                        return true;
                    }
                }
                false
            }
            Side::Y => {
                for &p in g.y_out(node.pair) {
                    if p >= lo
                        && mask & (1 << p) == 0
                        && dfs(g, NodeId::y(p), target, lo, mask | (1 << p), want)
                    {
                        return true;
                    }
                }
                false
            }
        }
    }
    dfs(g, NodeId::x(i), NodeId::y(j), lo, 1 << i, want)
}

fn path_from_nodes(g: &NCSpectrumGraph, nodes: &[NodeId]) -> SolutionPath {
    let edges = nodes
        .windows(2)
        .map(|w| PathEdge {
            from: w[0],
            to: w[1],
            kind: g.edge(w[0], w[1]).unwrap(),
            gap: g.gap(w[0], w[1]),
        })
        .collect();
    SolutionPath { nodes: nodes.to_vec(), edges }
}

/// All feasible plain-edge solution paths x0 -> y0, by exhaustive DFS.
pub fn oracle_paths(g: &NCSpectrumGraph) -> Vec<SolutionPath> {
    let k = g.k();
    assert!(k <= ORACLE_MAX_K, "oracle bound exceeded: k = {k}");
    let mut out = Vec::new();
    let mut nodes = vec![NodeId::x(0)];
    dfs_feasible(g, &mut nodes, 1, &mut |nodes| out.push(path_from_nodes(g, nodes)));
    out.sort_by(|a, b| a.nodes.cmp(&b.nodes));
    out
}

/// DFS over plain edges from the last node of `nodes`, enforcing the
/// one-node-per-pair rule via a visited mask; calls `emit` on complete
/// paths that reach y0 covering every pair.
fn dfs_feasible(g: &NCSpectrumGraph, nodes: &mut Vec<NodeId>, mask: u64, emit: &mut impl FnMut(&[NodeId])) {
    let k = g.k();
    let node = *nodes.last().unwrap();
    if node == NodeId::y(0) {
        if mask == (1u64 << (k + 1)) - 1 {
            emit(nodes);
        }
        return;
    }
    match node.side {
        Side::X => {
            for b in node.pair + 1..=k {
                if mask & (1 << b) == 0 && g.e_xx(node.pair, b) {
                    nodes.push(NodeId::x(b));
                    dfs_feasible(g, nodes, mask | (1 << b), emit);
                    nodes.pop();
                }
            }
            for &b in g.x_cross(node.pair) {
                let bit = if b == 0 { 0 } else { 1 << b };
                if b == 0 || mask & bit == 0 {
                    nodes.push(NodeId::y(b));
                    dfs_feasible(g, nodes, mask | bit, emit);
                    nodes.pop();
                }
            }
        }
        Side::Y => {
            for &p in g.y_out(node.pair) {
                let bit = if p == 0 { 0 } else { 1 << p };
                if p == 0 || mask & bit == 0 {
                    nodes.push(NodeId::y(p));
                    dfs_feasible(g, nodes, mask | bit, emit);
                    nodes.pop();
                }
            }
        }
    }
}

/// All typed-edge solution paths (water edges allowed), exhaustive.
fn oracle_paths_typed(g: &NCSpectrumGraph) -> Vec<SolutionPath> {
    let k = g.k();
    assert!(k <= ORACLE_MAX_K, "oracle bound exceeded: k = {k}");
    let mut out = Vec::new();
    let mut nodes = vec![NodeId::x(0)];
    dfs_typed(g, &mut nodes, 1, &mut |nodes| out.push(path_from_nodes(g, nodes)));
    out
}

fn dfs_typed(g: &NCSpectrumGraph, nodes: &mut Vec<NodeId>, mask: u64, emit: &mut impl FnMut(&[NodeId])) {
    let k = g.k();
    let node = *nodes.last().unwrap();
    if node == NodeId::y(0) {
        if mask == (1u64 << (k + 1)) - 1 {
            emit(nodes);
        }
        return;
    }
    match node.side {
        Side::X => {
            for b in node.pair + 1..=k {
                if mask & (1 << b) == 0 && g.edge(NodeId::x(node.pair), NodeId::x(b)).is_some() {
                    nodes.push(NodeId::x(b));
                    dfs_typed(g, nodes, mask | (1 << b), emit);
                    nodes.pop();
                }
            }
            for &(b, _) in g.x_cross_all(node.pair) {
                let bit = if b == 0 { 0 } else { 1 << b };
                if b == 0 || mask & bit == 0 {
                    nodes.push(NodeId::y(b));
                    dfs_typed(g, nodes, mask | bit, emit);
                    nodes.pop();
                }
            }
        }
        Side::Y => {
            for &(p, _) in g.y_out_all(node.pair) {
                let bit = if p == 0 { 0 } else { 1 << p };
                if p == 0 || mask & bit == 0 {
                    nodes.push(NodeId::y(p));
                    dfs_typed(g, nodes, mask | bit, emit);
                    nodes.pop();
                }
            }
        }
    }
}

fn path_score(p: &SolutionPath, sf: &dyn Fn(NodeId, NodeId) -> f64) -> f64 {
    p.edges.iter().map(|e| sf(e.from, e.to)).sum()
}

/// Exhaustive maximum-score plain path; ties broken by node sequence.
pub fn oracle_best_score(
    g: &NCSpectrumGraph,
    sf: &dyn Fn(NodeId, NodeId) -> f64,
) -> Option<(f64, SolutionPath)> {
    oracle_paths(g)
        .into_iter()
        .map(|p| (path_score(&p, sf), p))
        .max_by(|a, b| a.0.total_cmp(&b.0).then_with(|| b.1.nodes.cmp(&a.1.nodes)))
}

/// Exhaustive maximum-score typed path under the water-balance rule:
/// net water delta 0 overall, realizable with every intermediate net in
/// [-1, 1] for some interleaved growth of the two path arms.
pub fn oracle_best_score_water(
    g: &NCSpectrumGraph,
    sf: &dyn Fn(NodeId, NodeId) -> f64,
) -> Option<(f64, SolutionPath)> {
    oracle_paths_typed(g)
        .into_iter()
        .filter(water_balanced)
        .map(|p| (path_score(&p, sf), p))
        .max_by(|a, b| a.0.total_cmp(&b.0).then_with(|| b.1.nodes.cmp(&a.1.nodes)))
}

/// Check the DP's water semantics on a concrete path. The recurrence
/// admits pairs in increasing index order, so each non-cross edge is
/// charged at the pair index of the node it introduces (its target on
/// the left arm, its source on the right arm); every prefix net must
/// stay in [-1, 1] and the cross edge, applied last, must return it to
/// exactly 0.
fn water_balanced(p: &SolutionPath) -> bool {
    let cross_idx = p
        .edges
        .iter()
        .position(|e| e.from.side != e.to.side)
        .expect("solution path has a cross edge");
    let mut charged: Vec<(usize, i32)> = Vec::new();
    for e in &p.edges[..cross_idx] {
        charged.push((e.to.pair, e.kind.water_delta()));
    }
    for e in &p.edges[cross_idx + 1..] {
        charged.push((e.from.pair, e.kind.water_delta()));
    }
    charged.sort_unstable();
    let mut net = 0;
    for &(_, d) in &charged {
        net += d;
        if net.abs() > 1 {
            return false;
        }
    }
    net + p.edges[cross_idx].kind.water_delta() == 0
}
