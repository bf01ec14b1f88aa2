//! End-to-end wiring: preprocessing, graph construction, solving, and
//! report assembly, shared by the CLI and the integration tests.

use thiserror::Error;

use crate::dpsolver::{
    compute_m, enumerate_solutions, expand_sequences, MAccess, SolutionPath,
};
use crate::masskit::{decompose_gap, discretize, MassError, MassUnit, ResidueTable};
use crate::modfinder::find_modifications;
use crate::ncgraph::{GraphError, NCSpectrumGraph};
use crate::scorer::{best_scored_path, best_scored_path_water, ScoreFunction};
use crate::spectrum_io::{
    filter_intensity, merge_isotopes, Candidate, MergeStrategy, Report, ReportEdge,
    ReportModCandidate, ReportModification, Spectrum,
};

/// Isotope envelopes are spaced one neutron apart; peaks closer than
/// this (in daltons) are treated as one envelope.
const ISOTOPE_WINDOW: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Scored,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Mass(#[from] MassError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{0}")]
    Config(String),
}

/// Solver configuration; the defaults mirror the CLI defaults.
#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub mode: Mode,
    pub max_gap: f64,
    pub tol: f64,
    pub min_rel_intensity: f64,
    pub merge_isotopes: bool,
    pub water_edges: bool,
    pub all_solutions: bool,
    pub limit: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            mode: Mode::Scored,
            max_gap: crate::masskit::DEFAULT_MAX_GAP,
            tol: crate::masskit::DEFAULT_TOLERANCE,
            min_rel_intensity: 5.0,
            merge_isotopes: true,
            water_edges: true,
            all_solutions: false,
            limit: 100,
        }
    }
}

impl PipelineOptions {
    pub fn exact() -> Self {
        PipelineOptions { mode: Mode::Exact, water_edges: false, ..Default::default() }
    }

    fn validate(&self) -> Result<(), PipelineError> {
        if self.mode == Mode::Exact && self.water_edges {
            return Err(PipelineError::Config(
                "water edges require scored mode".to_string(),
            ));
        }
        Ok(())
    }
}

/// One spectrum's outcome.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub report: Report,
    pub warnings: Vec<String>,
    /// True when at least one candidate was produced.
    pub found: bool,
}

fn preprocess(s: &Spectrum, opts: &PipelineOptions) -> Spectrum {
    let filtered = filter_intensity(s, opts.min_rel_intensity);
    if opts.merge_isotopes {
        merge_isotopes(&filtered, ISOTOPE_WINDOW, MergeStrategy::KeepLowestMass)
    } else {
        filtered
    }
}

fn build_graph(
    s: &Spectrum,
    rt: &ResidueTable,
    opts: &PipelineOptions,
    water_edges: bool,
) -> Result<(NCSpectrumGraph, MassUnit), PipelineError> {
    let h = discretize(opts.max_gap, rt.delta())?;
    let a = crate::masskit::MassArray::build(rt, h)?;
    let tol = discretize(opts.tol, rt.delta())?;
    let cleaned = preprocess(s, opts);
    let g = NCSpectrumGraph::build(&cleaned, rt, &a, tol, water_edges)?;
    Ok((g, tol))
}

fn path_candidate(
    g: &NCSpectrumGraph,
    rt: &ResidueTable,
    tol: MassUnit,
    rank: usize,
    score: Option<f64>,
    path: &SolutionPath,
    limit: usize,
) -> Candidate {
    let delta = rt.delta();
    let coords: Vec<f64> = path.nodes.iter().map(|&n| g.coord(n) as f64 * delta).collect();
    let edges = path
        .edges
        .iter()
        .map(|e| {
            let effective = e.gap - MassUnit::from(e.kind.water_delta()) * rt.water();
            let decompositions = decompose_gap(rt, effective, tol, limit)
                .into_iter()
                .map(|ms| ms.into_iter().collect::<String>())
                .collect();
            ReportEdge { gap: e.gap as f64 * delta, decompositions }
        })
        .collect();
    Candidate {
        rank,
        score,
        path: coords,
        edges,
        sequences: expand_sequences(path, rt, tol, limit),
    }
}

/// De novo sequencing of one spectrum under the configured mode.
pub fn process_spectrum(
    s: &Spectrum,
    rt: &ResidueTable,
    opts: &PipelineOptions,
) -> Result<SpectrumResult, PipelineError> {
    opts.validate()?;
    let (g, tol) = build_graph(s, rt, opts, opts.water_edges)?;
    let mut report = Report::default();
    match opts.mode {
        Mode::Exact => {
            let m = compute_m(&g);
            let access = MAccess::Table(&m);
            let cap = if opts.all_solutions { opts.limit } else { 1 };
            for (idx, path) in enumerate_solutions(&g, &access, cap).iter().enumerate() {
                report.candidates.push(path_candidate(&g, rt, tol, idx + 1, None, path, opts.limit));
            }
        }
        Mode::Scored => {
            let sf = ScoreFunction::default_score(&g);
            let best = if opts.water_edges {
                best_scored_path_water(&g, &sf)
            } else {
                best_scored_path(&g, &sf)
            };
            if let Some(scored) = best {
                report.candidates.push(path_candidate(
                    &g,
                    rt,
                    tol,
                    1,
                    Some(scored.score),
                    &scored.path,
                    opts.limit,
                ));
            }
        }
    }
    let found = !report.candidates.is_empty();
    Ok(SpectrumResult { report, warnings: g.warnings().to_vec(), found })
}

/// Modification search for one spectrum: exact candidates (if any) plus
/// every missing link that would complete a feasible path.
pub fn process_modsearch(
    s: &Spectrum,
    rt: &ResidueTable,
    opts: &PipelineOptions,
) -> Result<SpectrumResult, PipelineError> {
    let plain = PipelineOptions { mode: Mode::Exact, water_edges: false, ..opts.clone() };
    let (g, tol) = build_graph(s, rt, &plain, false)?;
    let mut report = Report::default();
    let m = compute_m(&g);
    for (idx, path) in enumerate_solutions(&g, &MAccess::Table(&m), plain.limit).iter().enumerate()
    {
        report.candidates.push(path_candidate(&g, rt, tol, idx + 1, None, path, plain.limit));
    }
    let delta = rt.delta();
    for r in find_modifications(&g, rt) {
        report.modifications.push(ReportModification {
            left: g.coord(r.left) as f64 * delta,
            right: g.coord(r.right) as f64 * delta,
            gap: r.gap_da,
            candidates: r
                .candidates
                .iter()
                .map(|c| ReportModCandidate { residue: c.residue.to_string(), delta: c.delta_da })
                .collect(),
        });
    }
    let found = !report.candidates.is_empty() || !report.modifications.is_empty();
    Ok(SpectrumResult { report, warnings: g.warnings().to_vec(), found })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum_io::Peak;
    use crate::testkit::{synthesize_spectrum, SynthOpts};

    fn ga() -> ResidueTable {
        ResidueTable::toy(&[('G', 57.0), ('A', 71.0)])
    }

    fn t1_spectrum() -> Spectrum {
        synthesize_spectrum("AG", &ga(), &SynthOpts { drop_indices: vec![1], ..Default::default() })
            .unwrap()
    }

    #[test]
    fn exact_mode_on_t1() {
        let opts = PipelineOptions { tol: 0.0, ..PipelineOptions::exact() };
        let res = process_spectrum(&t1_spectrum(), &ga(), &opts).unwrap();
        assert!(res.found);
        assert_eq!(res.report.candidates.len(), 1);
        assert_eq!(res.report.candidates[0].sequences, vec!["AG".to_string()]);
        assert_eq!(res.report.candidates[0].score, None);
    }

    #[test]
    fn scored_mode_on_t1() {
        let opts = PipelineOptions { tol: 0.0, ..PipelineOptions::default() };
        let res = process_spectrum(&t1_spectrum(), &ga(), &opts).unwrap();
        assert!(res.found);
        let c = &res.report.candidates[0];
        assert!(c.score.is_some());
        assert_eq!(c.sequences, vec!["AG".to_string()]);
    }

    #[test]
    fn exact_mode_rejects_water_edges() {
        let opts =
            PipelineOptions { mode: Mode::Exact, water_edges: true, ..PipelineOptions::default() };
        assert!(matches!(
            process_spectrum(&t1_spectrum(), &ga(), &opts),
            Err(PipelineError::Config(_))
        ));
    }

    #[test]
    fn modsearch_on_t2() {
        let opts = PipelineOptions { tol: 0.0, ..PipelineOptions::exact() };
        let s = synthesize_spectrum(
            "AG",
            &ga(),
            &SynthOpts { drop_indices: vec![1], modification: Some((0, 14.0)), ..Default::default() },
        )
        .unwrap();
        let res = process_modsearch(&s, &ga(), &opts).unwrap();
        assert!(res.report.candidates.is_empty());
        assert_eq!(res.report.modifications.len(), 1);
        let m = &res.report.modifications[0];
        assert_eq!(m.gap, 85.0);
        assert_eq!(m.candidates[0].residue, "A");
        assert_eq!(m.candidates[0].delta, 14.0);
    }

    #[test]
    fn preprocessing_drops_weak_and_merges_isotopes() {
        let rt = ResidueTable::standard(0.01);
        let mut s = synthesize_spectrum("GASP", &rt, &SynthOpts::default()).unwrap();
        // Add an isotope satellite and a sub-threshold peak.
        let main = s.peaks[0];
        s.peaks.push(Peak { mass: main.mass + 1.003, intensity: main.intensity * 0.4 });
        s.peaks.push(Peak { mass: 200.0, intensity: 0.01 });
        s.peaks.sort_by(|a, b| a.mass.total_cmp(&b.mass));
        let cleaned = preprocess(&s, &PipelineOptions::default());
        assert_eq!(cleaned.peaks.len(), 6);
        assert!(cleaned.peaks.iter().any(|p| (p.mass - main.mass).abs() < 1e-9));
    }

    #[test]
    fn roundtrip_standard_table() {
        let rt = ResidueTable::standard(0.01);
        let s = synthesize_spectrum("PEPTIDE", &rt, &SynthOpts::default()).unwrap();
        let opts = PipelineOptions { all_solutions: true, ..PipelineOptions::exact() };
        let res = process_spectrum(&s, &rt, &opts).unwrap();
        assert!(res.found);
        assert!(res
            .report
            .candidates
            .iter()
            .any(|c| c.sequences.iter().any(|q| q == "PEPTIDE")));
    }
}
