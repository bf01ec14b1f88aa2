//! Peak-list ingestion (an MGF subset), spectrum preprocessing, and
//! report serialization.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MgfError {
    #[error("line {0}: BEGIN IONS inside an open block")]
    NestedBlock(usize),
    #[error("line {0}: END IONS without BEGIN IONS")]
    UnmatchedEnd(usize),
    #[error("line {line}: unsupported charge {charge:?} (only 1+ is supported)")]
    UnsupportedCharge { line: usize, charge: String },
    #[error("line {line}: malformed peak line {text:?}")]
    BadPeakLine { line: usize, text: String },
    #[error("line {line}: malformed header line {text:?}")]
    BadHeader { line: usize, text: String },
    #[error("block ending at line {0}: missing PEPMASS")]
    MissingPepmass(usize),
    #[error("unterminated BEGIN IONS block")]
    UnterminatedBlock,
}

/// One singly-charged peak: ion mass and relative intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub mass: f64,
    pub intensity: f64,
}

/// A parent mass plus its fragment peak list.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub parent_mass: f64,
    pub peaks: Vec<Peak>,
    pub title: Option<String>,
}

/// Parse the MGF subset: BEGIN IONS / TITLE= / PEPMASS= / CHARGE=1+ /
/// peak lines / END IONS. `#` lines are ignored.
pub fn parse_mgf(source: &str) -> Result<Vec<Spectrum>, MgfError> {
    let mut spectra = Vec::new();
    let mut block: Option<(Option<f64>, Vec<Peak>, Option<String>)> = None;
    for (idx, raw) in source.lines().enumerate() {
        let line = idx + 1;
        let text = raw.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        if text.eq_ignore_ascii_case("BEGIN IONS") {
            if block.is_some() {
                return Err(MgfError::NestedBlock(line));
            }
            block = Some((None, Vec::new(), None));
            continue;
        }
        if text.eq_ignore_ascii_case("END IONS") {
            let (pepmass, peaks, title) = block.take().ok_or(MgfError::UnmatchedEnd(line))?;
            let parent_mass = pepmass.ok_or(MgfError::MissingPepmass(line))?;
            spectra.push(Spectrum { parent_mass, peaks, title });
            continue;
        }
        let Some((pepmass, peaks, title)) = block.as_mut() else {
            // Text outside any block is ignored.
            continue;
        };
        if let Some(rest) = strip_key(text, "TITLE=") {
            *title = Some(rest.to_string());
        } else if let Some(rest) = strip_key(text, "PEPMASS=") {
            let value = rest.split_whitespace().next().unwrap_or("");
            *pepmass = Some(
                value
                    .parse()
                    .map_err(|_| MgfError::BadHeader { line, text: text.to_string() })?,
            );
        } else if let Some(rest) = strip_key(text, "CHARGE=") {
            let charge = rest.trim();
            if charge != "1+" && charge != "+1" && charge != "1" {
                return Err(MgfError::UnsupportedCharge { line, charge: charge.to_string() });
            }
        } else if text.contains('=') {
            // Other headers are tolerated and skipped.
        } else {
            let mut parts = text.split_whitespace();
            let (m, i) = match (parts.next(), parts.next()) {
                (Some(m), Some(i)) => (m, i),
                _ => return Err(MgfError::BadPeakLine { line, text: text.to_string() }),
            };
            let mass: f64 =
                m.parse().map_err(|_| MgfError::BadPeakLine { line, text: text.to_string() })?;
            let intensity: f64 =
                i.parse().map_err(|_| MgfError::BadPeakLine { line, text: text.to_string() })?;
            peaks.push(Peak { mass, intensity });
        }
    }
    if block.is_some() {
        return Err(MgfError::UnterminatedBlock);
    }
    Ok(spectra)
}

/// Serialize spectra back into the MGF subset (used by `simulate`).
pub fn write_mgf(spectra: &[Spectrum]) -> String {
    let mut out = String::new();
    for s in spectra {
        out.push_str("BEGIN IONS\n");
        if let Some(title) = &s.title {
            out.push_str(&format!("TITLE={title}\n"));
        }
        out.push_str(&format!("PEPMASS={:.5}\n", s.parent_mass));
        out.push_str("CHARGE=1+\n");
        for p in &s.peaks {
            out.push_str(&format!("{:.5} {:.3}\n", p.mass, p.intensity));
        }
        out.push_str("END IONS\n");
    }
    out
}

fn strip_key<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    if text.len() >= key.len() && text[..key.len()].eq_ignore_ascii_case(key) {
        Some(&text[key.len()..])
    } else {
        None
    }
}

fn normalized(s: &Spectrum, peaks: Vec<Peak>) -> Spectrum {
    let mut peaks = peaks;
    peaks.sort_by(|a, b| a.mass.total_cmp(&b.mass).then(a.intensity.total_cmp(&b.intensity)));
    peaks.dedup_by(|a, b| {
        if a.mass == b.mass {
            b.intensity = b.intensity.max(a.intensity);
            true
        } else {
            false
        }
    });
    Spectrum { parent_mass: s.parent_mass, peaks, title: s.title.clone() }
}

/// Keep peaks whose intensity is at least `min_rel` percent of the
/// maximum intensity.
pub fn filter_intensity(s: &Spectrum, min_rel: f64) -> Spectrum {
    let max = s.peaks.iter().map(|p| p.intensity).fold(0.0_f64, f64::max);
    let keep: Vec<Peak> = if max <= 0.0 || min_rel <= 0.0 {
        s.peaks.clone()
    } else {
        s.peaks.iter().copied().filter(|p| p.intensity >= min_rel / 100.0 * max).collect()
    };
    normalized(s, keep)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergeStrategy {
    /// Keep the lowest mass of the group (the monoisotopic peak).
    KeepLowestMass,
    /// Keep the mass of the most intense peak in the group.
    KeepHighestIntensity,
}

/// Ascending scan that groups maximal chains of peaks with successive
/// gaps <= `window` and replaces each group by one peak whose intensity
/// is the group sum.
pub fn merge_isotopes(s: &Spectrum, window: f64, strategy: MergeStrategy) -> Spectrum {
    let sorted = normalized(s, s.peaks.clone());
    let mut merged: Vec<Peak> = Vec::new();
    let mut group: Vec<Peak> = Vec::new();
    let flush = |group: &mut Vec<Peak>, merged: &mut Vec<Peak>| {
        if group.is_empty() {
            return;
        }
        let intensity: f64 = group.iter().map(|p| p.intensity).sum();
        let mass = match strategy {
            MergeStrategy::KeepLowestMass => group[0].mass,
            MergeStrategy::KeepHighestIntensity => {
                group.iter().max_by(|a, b| a.intensity.total_cmp(&b.intensity)).unwrap().mass
            }
        };
        merged.push(Peak { mass, intensity });
        group.clear();
    };
    for p in sorted.peaks {
        if let Some(last) = group.last() {
            if p.mass - last.mass > window {
                flush(&mut group, &mut merged);
            }
        }
        group.push(p);
    }
    flush(&mut group, &mut merged);
    normalized(s, merged)
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportEdge {
    pub gap: f64,
    pub decompositions: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Candidate {
    pub rank: usize,
    pub score: Option<f64>,
    pub path: Vec<f64>,
    pub edges: Vec<ReportEdge>,
    pub sequences: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportModCandidate {
    pub residue: String,
    pub delta: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportModification {
    pub left: f64,
    pub right: f64,
    pub gap: f64,
    pub candidates: Vec<ReportModCandidate>,
}

/// The full per-spectrum result set.
#[derive(Debug, Clone, Serialize, Default)]
pub struct Report {
    pub candidates: Vec<Candidate>,
    pub modifications: Vec<ReportModification>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
}

/// Deterministic serialization of a report.
pub fn emit_report(report: &Report, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => serde_json::to_string(report).expect("report serializes"),
        ReportFormat::Text => {
            let mut out = String::new();
            for c in &report.candidates {
                let score = c.score.map_or_else(|| "-".to_string(), |s| format!("{s:.4}"));
                let seq = c.sequences.first().map(String::as_str).unwrap_or("-");
                out.push_str(&format!("{}\t{}\t{}\n", c.rank, score, seq));
            }
            for m in &report.modifications {
                let cands: Vec<String> = m
                    .candidates
                    .iter()
                    .map(|c| format!("{}{:+.4}", c.residue, c.delta))
                    .collect();
                out.push_str(&format!(
                    "mod\t{:.4}\t{:.4}\t{:.4}\t{}\n",
                    m.left,
                    m.right,
                    m.gap,
                    cands.join(",")
                ));
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_single_block() {
        let src = "BEGIN IONS\nTITLE=t1\nPEPMASS=146.0\nCHARGE=1+\n72.0 100.0\nEND IONS\n";
        let spectra = parse_mgf(src).unwrap();
        assert_eq!(spectra.len(), 1);
        let s = &spectra[0];
        assert_eq!(s.parent_mass, 146.0);
        assert_eq!(s.peaks.len(), 1);
        assert_eq!(s.peaks[0].mass, 72.0);
        assert_eq!(s.title.as_deref(), Some("t1"));
    }

    #[test]
    fn parse_empty_stream() {
        assert!(parse_mgf("").unwrap().is_empty());
        assert!(parse_mgf("# just a comment\n").unwrap().is_empty());
    }

    #[test]
    fn parse_rejects_charge_2() {
        let src = "BEGIN IONS\nPEPMASS=146.0\nCHARGE=2+\nEND IONS\n";
        assert!(matches!(parse_mgf(src), Err(MgfError::UnsupportedCharge { .. })));
    }

    #[test]
    fn parse_rejects_missing_pepmass() {
        let src = "BEGIN IONS\n72.0 100.0\nEND IONS\n";
        assert!(matches!(parse_mgf(src), Err(MgfError::MissingPepmass(_))));
    }

    #[test]
    fn parse_reports_bad_peak_line() {
        let src = "BEGIN IONS\nPEPMASS=146.0\n72.0 abc\nEND IONS\n";
        assert!(matches!(parse_mgf(src), Err(MgfError::BadPeakLine { line: 3, .. })));
    }

    #[test]
    fn mgf_round_trip() {
        let s = Spectrum {
            parent_mass: 146.0,
            peaks: vec![Peak { mass: 72.0, intensity: 100.0 }],
            title: Some("t1".into()),
        };
        let parsed = parse_mgf(&write_mgf(std::slice::from_ref(&s))).unwrap();
        assert_eq!(parsed.len(), 1);
        assert_eq!(parsed[0].parent_mass, s.parent_mass);
        assert_eq!(parsed[0].peaks.len(), 1);
    }

    fn spectrum(peaks: &[(f64, f64)]) -> Spectrum {
        Spectrum {
            parent_mass: 1000.0,
            peaks: peaks.iter().map(|&(mass, intensity)| Peak { mass, intensity }).collect(),
            title: None,
        }
    }

    #[test]
    fn filter_intensity_examples() {
        // 2/10 = 20% >= 5% so both survive.
        let s = spectrum(&[(100.0, 10.0), (100.5, 2.0)]);
        assert_eq!(filter_intensity(&s, 5.0).peaks.len(), 2);
        // 0.4/10 = 4% < 5% so the second is dropped.
        let s = spectrum(&[(100.0, 10.0), (100.5, 0.4)]);
        let f = filter_intensity(&s, 5.0);
        assert_eq!(f.peaks.len(), 1);
        assert_eq!(f.peaks[0].mass, 100.0);
        // min_rel = 0 is the identity.
        let s = spectrum(&[(100.0, 10.0), (100.5, 0.4)]);
        assert_eq!(filter_intensity(&s, 0.0).peaks.len(), 2);
        // A single peak is its own maximum.
        let s = spectrum(&[(100.0, 0.001)]);
        assert_eq!(filter_intensity(&s, 100.0).peaks.len(), 1);
    }

    #[test]
    fn merge_isotopes_examples() {
        let s = spectrum(&[(500.0, 80.0), (501.0, 40.0), (502.0, 10.0)]);
        let m = merge_isotopes(&s, 1.5, MergeStrategy::KeepLowestMass);
        assert_eq!(m.peaks.len(), 1);
        assert_eq!(m.peaks[0].mass, 500.0);
        assert_eq!(m.peaks[0].intensity, 130.0);

        let m = merge_isotopes(&s, 1.5, MergeStrategy::KeepHighestIntensity);
        assert_eq!(m.peaks[0].mass, 500.0);

        let s = spectrum(&[(500.0, 80.0), (503.0, 40.0)]);
        let m = merge_isotopes(&s, 1.5, MergeStrategy::KeepLowestMass);
        assert_eq!(m.peaks.len(), 2);

        let s = spectrum(&[]);
        assert!(merge_isotopes(&s, 1.5, MergeStrategy::KeepLowestMass).peaks.is_empty());
    }

    #[test]
    fn emit_report_examples() {
        let empty = Report::default();
        assert_eq!(
            emit_report(&empty, ReportFormat::Json),
            r#"{"candidates":[],"modifications":[]}"#
        );
        let report = Report {
            candidates: vec![Candidate {
                rank: 1,
                score: None,
                path: vec![0.0, 71.0, 128.0],
                edges: vec![],
                sequences: vec!["AG".into()],
            }],
            modifications: vec![],
        };
        let json = emit_report(&report, ReportFormat::Json);
        assert!(json.contains(r#""sequence"#));
        assert!(json.contains("AG"));
        let text = emit_report(&report, ReportFormat::Text);
        assert_eq!(text, "1\t-\tAG\n");
    }

    proptest! {
        /// Preprocessing is insensitive to input peak order and never
        /// increases k or changes the parent mass.
        #[test]
        fn preprocessing_order_insensitive(
            mut peaks in proptest::collection::vec((1.0f64..2000.0, 0.0f64..100.0), 0..20),
            min_rel in 0.0f64..50.0,
            window in 0.5f64..3.0,
        ) {
            let s1 = spectrum(&peaks);
            peaks.reverse();
            let s2 = spectrum(&peaks);
            let f1 = filter_intensity(&s1, min_rel);
            let f2 = filter_intensity(&s2, min_rel);
            prop_assert_eq!(&f1, &f2);
            prop_assert!(f1.peaks.len() <= s1.peaks.len());
            prop_assert_eq!(f1.parent_mass, s1.parent_mass);
            let m1 = merge_isotopes(&f1, window, MergeStrategy::KeepLowestMass);
            let m2 = merge_isotopes(&f2, window, MergeStrategy::KeepLowestMass);
            prop_assert_eq!(&m1, &m2);
            prop_assert!(m1.peaks.len() <= f1.peaks.len());
            // Idempotent once all gaps exceed the window.
            let again = merge_isotopes(&m1, window, MergeStrategy::KeepLowestMass);
            prop_assert_eq!(again.peaks.len(), m1.peaks.len());
        }
    }
}
