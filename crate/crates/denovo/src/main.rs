//! Command-line front end: `sequence`, `modsearch`, and `simulate`.
//!
//! Exit codes: 0 success, 1 input or configuration error, 2 no
//! candidate found.

use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use denovo::masskit::{self, ResidueTable};
use denovo::pipeline::{process_modsearch, process_spectrum, Mode, PipelineOptions};
use denovo::spectrum_io::{emit_report, parse_mgf, write_mgf, ReportFormat};
use denovo::testkit::{synthesize_spectrum, SynthOpts};

#[derive(Parser)]
#[command(name = "denovo", version, about = "De novo peptide sequencing from tandem-MS peak lists")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exact,
    Scored,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

#[derive(Args)]
struct CommonOpts {
    /// Mass precision in daltons per unit.
    #[arg(long, default_value_t = masskit::DEFAULT_DELTA)]
    delta: f64,
    /// Maximum edge mass in daltons.
    #[arg(long, default_value_t = masskit::DEFAULT_MAX_GAP)]
    max_gap: f64,
    /// Match tolerance in daltons.
    #[arg(long, default_value_t = masskit::DEFAULT_TOLERANCE)]
    tol: f64,
    /// Drop peaks below this percentage of the most intense peak.
    #[arg(long, default_value_t = 5.0)]
    min_rel_intensity: f64,
    /// Collapse isotope envelopes onto the monoisotopic peak.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    merge_isotopes: bool,
    /// Residue table file (symbol<TAB>mass lines); bundled table if omitted.
    #[arg(long)]
    residues: Option<String>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
}

#[derive(Subcommand)]
enum Command {
    /// Sequence spectra from an MGF peak-list file.
    Sequence {
        /// Input MGF file.
        input: String,
        #[arg(long, value_enum, default_value_t = ModeArg::Scored)]
        mode: ModeArg,
        /// Allow water-typed edges (scored mode only; defaults to the
        /// mode's natural setting).
        #[arg(long, action = clap::ArgAction::Set)]
        water_edges: Option<bool>,
        /// Enumerate every exact solution instead of one.
        #[arg(long)]
        all_solutions: bool,
        /// Cap on reported solutions and per-edge decompositions.
        #[arg(long, default_value_t = 100)]
        limit: usize,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Report modification sites for spectra that have no exact path.
    Modsearch {
        /// Input MGF file.
        input: String,
        #[arg(long, default_value_t = 100)]
        limit: usize,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Synthesize a peptide's b/y spectrum and write it as MGF.
    Simulate {
        /// Peptide sequence.
        peptide: String,
        /// Ion indices to drop (positions in b1..b_{n-1}, y1..y_{n-1}).
        #[arg(long, value_delimiter = ',')]
        drop: Vec<usize>,
        /// Number of uniform random noise peaks.
        #[arg(long, default_value_t = 0)]
        noise: usize,
        /// Add isotope satellite peaks.
        #[arg(long)]
        isotopes: bool,
        /// Add water-loss satellite peaks.
        #[arg(long)]
        water_losses: bool,
        /// Single modification as POSITION:DELTA (0-based residue).
        #[arg(long)]
        modification: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write to this file instead of stdout.
        #[arg(long)]
        output: Option<String>,
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn load_table(common: &CommonOpts) -> Result<ResidueTable, String> {
    match &common.residues {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| format!("cannot read residue table {path}: {e}"))?;
            ResidueTable::parse(&text, common.delta).map_err(|e| e.to_string())
        }
        None => Ok(ResidueTable::standard(common.delta)),
    }
}

fn report_format(common: &CommonOpts) -> ReportFormat {
    match common.format {
        FormatArg::Text => ReportFormat::Text,
        FormatArg::Json => ReportFormat::Json,
    }
}

fn run() -> Result<bool, String> {
    match Cli::parse().command {
        Command::Sequence { input, mode, water_edges, all_solutions, limit, common } => {
            let rt = load_table(&common)?;
            let mode = match mode {
                ModeArg::Exact => Mode::Exact,
                ModeArg::Scored => Mode::Scored,
            };
            let opts = PipelineOptions {
                mode,
                max_gap: common.max_gap,
                tol: common.tol,
                min_rel_intensity: common.min_rel_intensity,
                merge_isotopes: common.merge_isotopes,
                water_edges: water_edges.unwrap_or(mode == Mode::Scored),
                all_solutions,
                limit,
            };
            let text = fs::read_to_string(&input)
                .map_err(|e| format!("cannot read {input}: {e}"))?;
            let spectra = parse_mgf(&text).map_err(|e| e.to_string())?;
            let mut all_found = true;
            for s in &spectra {
                let res = process_spectrum(s, &rt, &opts).map_err(|e| e.to_string())?;
                for w in &res.warnings {
                    eprintln!("warning: {w}");
                }
                print!("{}", with_newline(emit_report(&res.report, report_format(&common))));
                all_found &= res.found;
            }
            Ok(all_found)
        }
        Command::Modsearch { input, limit, common } => {
            let rt = load_table(&common)?;
            let opts = PipelineOptions {
                mode: Mode::Exact,
                max_gap: common.max_gap,
                tol: common.tol,
                min_rel_intensity: common.min_rel_intensity,
                merge_isotopes: common.merge_isotopes,
                water_edges: false,
                all_solutions: true,
                limit,
            };
            let text = fs::read_to_string(&input)
                .map_err(|e| format!("cannot read {input}: {e}"))?;
            let spectra = parse_mgf(&text).map_err(|e| e.to_string())?;
            for s in &spectra {
                let res = process_modsearch(s, &rt, &opts).map_err(|e| e.to_string())?;
                for w in &res.warnings {
                    eprintln!("warning: {w}");
                }
                print!("{}", with_newline(emit_report(&res.report, report_format(&common))));
            }
            Ok(true)
        }
        Command::Simulate {
            peptide,
            drop,
            noise,
            isotopes,
            water_losses,
            modification,
            seed,
            output,
            common,
        } => {
            let rt = load_table(&common)?;
            let modification = modification
                .map(|spec| -> Result<(usize, f64), String> {
                    let (pos, delta) = spec
                        .split_once(':')
                        .ok_or_else(|| format!("bad modification spec {spec:?}, want POS:DELTA"))?;
                    Ok((
                        pos.parse().map_err(|e| format!("bad position: {e}"))?,
                        delta.parse().map_err(|e| format!("bad delta: {e}"))?,
                    ))
                })
                .transpose()?;
            let opts = SynthOpts {
                drop_indices: drop,
                noise_peaks: noise,
                isotope_envelope: isotopes,
                water_losses,
                modification,
                seed,
            };
            let s = synthesize_spectrum(&peptide, &rt, &opts).map_err(|e| e.to_string())?;
            let mgf = write_mgf(&[s]);
            match output {
                Some(path) => fs::write(&path, mgf)
                    .map_err(|e| format!("cannot write {path}: {e}"))?,
                None => print!("{mgf}"),
            }
            Ok(true)
        }
    }
}

fn with_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
