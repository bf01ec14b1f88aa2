//! De novo peptide sequencing from tandem-MS peak lists.
//!
//! The pipeline: parse a peak list ([`spectrum_io`]), discretize masses
//! over a residue alphabet ([`masskit`]), build the NC-spectrum graph
//! ([`ncgraph`]), then either enumerate exact antisymmetric paths
//! ([`dpsolver`]), find the best-scoring path ([`scorer`]), or localize
//! a modification when no exact path exists ([`modfinder`]).
//! [`testkit`] holds the spectrum synthesizer and the brute-force
//! oracles the solvers are verified against; [`pipeline`] wires the
//! stages together for the CLI and integration tests.

pub mod dpsolver;
pub mod masskit;
pub mod modfinder;
pub mod ncgraph;
pub mod pipeline;
pub mod scorer;
pub mod spectrum_io;
pub mod testkit;
