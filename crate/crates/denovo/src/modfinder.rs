//! Post-translational modification search: when the exact solver finds
//! no path, locate every missing link (u, v) such that adding the single
//! edge (u, v) would complete a feasible path, and propose per-residue
//! mass deltas explaining its gap.
//!
//! Each missing-edge family is characterized by a glue condition over
//! the M and N tables of the *unmodified* graph; the conditions are
//! exact (sound and complete) and are verified against re-solving the
//! edge-augmented graph.

use std::collections::HashSet;

use crate::dpsolver::{compute_m, compute_n, extract_solution, MAccess, MTable, NTable};
use crate::masskit::{MassUnit, ResidueTable};
use crate::ncgraph::{NCSpectrumGraph, NodeId};

/// One explanation of a gap: `residue` carrying an extra `delta_da`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModCandidate {
    pub residue: char,
    pub delta_da: f64,
}

/// A missing link whose insertion completes a feasible path.
#[derive(Debug, Clone, PartialEq)]
pub struct ModificationReport {
    pub left: NodeId,
    pub right: NodeId,
    pub gap: MassUnit,
    pub gap_da: f64,
    /// Residue explanations sorted by |delta|, then symbol.
    pub candidates: Vec<ModCandidate>,
    /// True when the graph already has an exact (unmodified) solution.
    pub low_priority: bool,
}

/// Would a solution exist through a hypothetical x-edge (x_i, x_j)?
fn glue_xx(g: &NCSpectrumGraph, m: &MTable, n: &NTable, i: usize, j: usize) -> bool {
    let k = g.k();
    if j > i + 1 {
        return m.get(i, i + 1) && n.get(j, i + 1);
    }
    // j = i + 1: the boundary between pairs <= i and >= j is crossed by
    // either an existing y-edge (y_q, y_p) with q > j, p <= i, or by the
    // final cross edge after a consecutive x-run to x_k.
    for q in j + 1..=k {
        for p in 0..=i {
            if g.e_yy(q, p) && m.get(i, p) && n.get(j, q) {
                return true;
            }
        }
    }
    if (j..k).all(|t| g.e_xx(t, t + 1)) {
        for p in 0..=i {
            if g.e_xy(k, p) && m.get(i, p) {
                return true;
            }
        }
    }
    false
}

/// Would a solution exist through a hypothetical y-edge (y_q, y_p)?
fn glue_yy(g: &NCSpectrumGraph, m: &MTable, n: &NTable, q: usize, p: usize) -> bool {
    let k = g.k();
    if q > p + 1 {
        return m.get(p + 1, p) && n.get(p + 1, q);
    }
    // q = p + 1: mirror of the adjacent x case.
    for b in q + 1..=k {
        for a in 0..=p {
            if g.e_xx(a, b) && m.get(a, p) && n.get(b, q) {
                return true;
            }
        }
    }
    if (q..k).all(|t| g.e_yy(t + 1, t)) {
        for s in 0..=p {
            if g.e_xy(s, k) && m.get(s, p) {
                return true;
            }
        }
    }
    false
}

fn candidates(rt: &ResidueTable, gap_da: f64) -> Vec<ModCandidate> {
    let mut out: Vec<ModCandidate> = rt
        .residues()
        .iter()
        .map(|r| ModCandidate { residue: r.symbol, delta_da: gap_da - r.mass_da })
        .collect();
    out.sort_by(|a, b| {
        a.delta_da
            .abs()
            .total_cmp(&b.delta_da.abs())
            .then(a.residue.cmp(&b.residue))
    });
    out
}

/// All missing links that would complete a feasible path, with residue
/// delta explanations, ordered by coordinates. Reports are flagged
/// low-priority when an exact solution already exists.
pub fn find_modifications(g: &NCSpectrumGraph, rt: &ResidueTable) -> Vec<ModificationReport> {
    let k = g.k();
    let m = compute_m(g);
    let n = compute_n(g);
    let low_priority = extract_solution(g, &MAccess::Table(&m)).is_some();
    let mut seen: HashSet<(MassUnit, MassUnit)> = HashSet::new();
    let mut out: Vec<ModificationReport> = Vec::new();
    let mut push = |left: NodeId, right: NodeId, out: &mut Vec<ModificationReport>| {
        let gap = g.gap(left, right);
        if gap <= 0 || !seen.insert((g.coord(left), g.coord(right))) {
            return;
        }
        let gap_da = gap as f64 * rt.delta();
        out.push(ModificationReport {
            left,
            right,
            gap,
            gap_da,
            candidates: candidates(rt, gap_da),
            low_priority,
        });
    };

    for i in 0..k {
        for j in i + 1..=k {
            if !g.e_xx(i, j) && glue_xx(g, &m, &n, i, j) {
                push(NodeId::x(i), NodeId::x(j), &mut out);
            }
        }
    }
    for p in 0..k {
        for q in p + 1..=k {
            if !g.e_yy(q, p) && glue_yy(g, &m, &n, q, p) {
                push(NodeId::y(q), NodeId::y(p), &mut out);
            }
        }
    }
    if k == 0 {
        if !g.e_xy(0, 0) && m.get(0, 0) {
            push(NodeId::x(0), NodeId::y(0), &mut out);
        }
    } else {
        for j in 0..k {
            if !g.e_xy(k, j) && m.get(k, j) {
                push(NodeId::x(k), NodeId::y(j), &mut out);
            }
        }
        for i in 0..k {
            if !g.e_xy(i, k) && m.get(i, k) {
                push(NodeId::x(i), NodeId::y(k), &mut out);
            }
        }
    }
    out.sort_by_key(|r| (g.coord(r.left), g.coord(r.right), r.left, r.right));
    out
}
