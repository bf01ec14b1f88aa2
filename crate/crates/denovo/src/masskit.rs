//! Residue mass alphabet, mass discretization, and the decomposability
//! array used by every edge test.
//!
//! All masses are converted once into integer units of `delta` daltons;
//! everything downstream (graph coordinates, gap tests, DP tables) is
//! integer arithmetic.

use std::collections::BTreeMap;

use thiserror::Error;

/// A mass in integer units of `delta` daltons.
pub type MassUnit = i64;

/// Default measurement precision (daltons per unit).
pub const DEFAULT_DELTA: f64 = 0.01;
/// Default maximum edge mass in daltons.
pub const DEFAULT_MAX_GAP: f64 = 400.0;
/// Default match tolerance in daltons.
pub const DEFAULT_TOLERANCE: f64 = 0.5;
/// Monoisotopic mass of water.
pub const WATER_MONO: f64 = 18.0106;
/// Monoisotopic mass of a proton.
pub const PROTON_MONO: f64 = 1.00728;

const BUNDLED_TABLE: &str = include_str!("../data/residues.tsv");

#[derive(Debug, Error)]
pub enum MassError {
    #[error("empty residue table")]
    EmptyTable,
    #[error("line {line}: duplicate residue symbol '{symbol}'")]
    DuplicateSymbol { line: usize, symbol: char },
    #[error("line {line}: non-positive mass {mass}")]
    NonPositiveMass { line: usize, mass: f64 },
    #[error("line {line}: unparseable residue line: {text:?}")]
    BadLine { line: usize, text: String },
    #[error("negative mass {0}")]
    NegativeMass(f64),
    #[error("mass precision must be positive, got {0}")]
    BadDelta(f64),
    #[error("maximum mass must be positive, got {0}")]
    BadLimit(MassUnit),
    #[error("unknown residue symbol '{0}'")]
    UnknownResidue(char),
}

/// One entry of the residue alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Residue {
    pub symbol: char,
    /// Residue mass in daltons as given in the source table.
    pub mass_da: f64,
    /// Residue mass in `delta` units.
    pub mass: MassUnit,
}

/// Residue alphabet plus the water/proton constants, discretized at a
/// fixed precision.
#[derive(Debug, Clone)]
pub struct ResidueTable {
    residues: Vec<Residue>,
    delta: f64,
    water_da: f64,
    proton_da: f64,
    water: MassUnit,
    proton: MassUnit,
}

/// Round-half-up conversion of a mass in daltons to integer units.
pub fn discretize(mass_da: f64, delta: f64) -> Result<MassUnit, MassError> {
    if delta <= 0.0 {
        return Err(MassError::BadDelta(delta));
    }
    if mass_da < 0.0 {
        return Err(MassError::NegativeMass(mass_da));
    }
    Ok((mass_da / delta + 0.5).floor() as MassUnit)
}

impl ResidueTable {
    /// Build a table from (symbol, mass in daltons) entries with explicit
    /// water/proton constants. Masses are discretized at `delta`.
    pub fn new(
        entries: &[(char, f64)],
        water_da: f64,
        proton_da: f64,
        delta: f64,
    ) -> Result<Self, MassError> {
        if entries.is_empty() {
            return Err(MassError::EmptyTable);
        }
        let mut seen = BTreeMap::new();
        let mut residues = Vec::with_capacity(entries.len());
        for (line, &(symbol, mass_da)) in entries.iter().enumerate() {
            if mass_da <= 0.0 {
                return Err(MassError::NonPositiveMass { line: line + 1, mass: mass_da });
            }
            if seen.insert(symbol, ()).is_some() {
                return Err(MassError::DuplicateSymbol { line: line + 1, symbol });
            }
            residues.push(Residue { symbol, mass_da, mass: discretize(mass_da, delta)? });
        }
        residues.sort_by_key(|r| r.symbol);
        Ok(ResidueTable {
            residues,
            delta,
            water_da,
            proton_da,
            water: discretize(water_da, delta)?,
            proton: discretize(proton_da, delta)?,
        })
    }

    /// Parse the tab/whitespace-separated text format. Lines starting with
    /// `#` and blank lines are ignored.
    pub fn parse(source: &str, delta: f64) -> Result<Self, MassError> {
        let mut entries = Vec::new();
        for (idx, raw) in source.lines().enumerate() {
            let line = idx + 1;
            let text = raw.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            let mut parts = text.split_whitespace();
            let (sym, mass) = match (parts.next(), parts.next(), parts.next()) {
                (Some(s), Some(m), None) if s.chars().count() == 1 => (s, m),
                _ => return Err(MassError::BadLine { line, text: text.to_string() }),
            };
            let symbol = sym.chars().next().unwrap();
            let mass_da: f64 = mass
                .parse()
                .map_err(|_| MassError::BadLine { line, text: text.to_string() })?;
            if mass_da <= 0.0 {
                return Err(MassError::NonPositiveMass { line, mass: mass_da });
            }
            if entries.iter().any(|&(s, _)| s == symbol) {
                return Err(MassError::DuplicateSymbol { line, symbol });
            }
            entries.push((symbol, mass_da));
        }
        Self::new(&entries, WATER_MONO, PROTON_MONO, delta)
    }

    /// The bundled table of the 20 standard monoisotopic residues.
    pub fn standard(delta: f64) -> Self {
        Self::parse(BUNDLED_TABLE, delta).expect("bundled residue table is valid")
    }

    /// Toy table with nominal integer masses and water=18, proton=1.
    /// Handy for hand-traceable instances at delta=1.
    pub fn toy(entries: &[(char, f64)]) -> Self {
        Self::new(entries, 18.0, 1.0, 1.0).expect("toy table is valid")
    }

    pub fn residues(&self) -> &[Residue] {
        &self.residues
    }

    pub fn get(&self, symbol: char) -> Option<&Residue> {
        self.residues.iter().find(|r| r.symbol == symbol)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn water(&self) -> MassUnit {
        self.water
    }

    pub fn proton(&self) -> MassUnit {
        self.proton
    }

    pub fn water_da(&self) -> f64 {
        self.water_da
    }

    pub fn proton_da(&self) -> f64 {
        self.proton_da
    }

    pub fn min_residue_mass(&self) -> MassUnit {
        self.residues.iter().map(|r| r.mass).min().unwrap_or(0)
    }

    pub fn max_residue_mass(&self) -> MassUnit {
        self.residues.iter().map(|r| r.mass).max().unwrap_or(0)
    }

    /// Total residue mass of a peptide string, in units.
    pub fn peptide_mass(&self, peptide: &str) -> Result<MassUnit, MassError> {
        let mut sum = 0;
        for c in peptide.chars() {
            sum += self.get(c).ok_or(MassError::UnknownResidue(c))?.mass;
        }
        Ok(sum)
    }

    /// Total residue mass of a peptide string, in daltons.
    pub fn peptide_mass_da(&self, peptide: &str) -> Result<f64, MassError> {
        let mut sum = 0.0;
        for c in peptide.chars() {
            sum += self.get(c).ok_or(MassError::UnknownResidue(c))?.mass_da;
        }
        Ok(sum)
    }

    /// Canonical symbol for each residue's mass-equivalence class at the
    /// configured precision (e.g. I and L collapse at any delta; K and Q
    /// collapse at delta=1 but not at delta=0.01).
    pub fn canonical_symbol(&self, symbol: char) -> Option<char> {
        let mass = self.get(symbol)?.mass;
        self.residues.iter().find(|r| r.mass == mass).map(|r| r.symbol)
    }

    /// Map a sequence onto canonical class symbols for equivalence checks.
    pub fn canonicalize(&self, sequence: &str) -> Option<String> {
        sequence.chars().map(|c| self.canonical_symbol(c)).collect()
    }
}

/// Boolean array over masses 0..=h: `bits[m]` is true iff `m` is a sum of
/// one or more residue masses.
#[derive(Debug, Clone)]
pub struct MassArray {
    bits: Vec<bool>,
    limit: MassUnit,
}

impl MassArray {
    /// One ascending pass: `bits[m]` is set iff `m` equals a residue mass
    /// or `m - r` is set for some residue mass `r < m`.
    pub fn build(rt: &ResidueTable, h: MassUnit) -> Result<Self, MassError> {
        if h <= 0 {
            return Err(MassError::BadLimit(h));
        }
        let len = h as usize + 1;
        let mut bits = vec![false; len];
        for m in 1..len {
            for r in rt.residues() {
                let r = r.mass as usize;
                if r == m || (r < m && bits[m - r]) {
                    bits[m] = true;
                    break;
                }
            }
        }
        Ok(MassArray { bits, limit: h })
    }

    pub fn limit(&self) -> MassUnit {
        self.limit
    }

    pub fn get(&self, m: MassUnit) -> bool {
        m >= 0 && (m as usize) < self.bits.len() && self.bits[m as usize]
    }

    /// True iff some mass in `[gap - tol, gap + tol]` is a residue sum.
    /// Out-of-range masses are simply false.
    pub fn is_residue_sum(&self, gap: MassUnit, tol: MassUnit) -> bool {
        let lo = (gap - tol).max(1);
        let hi = (gap + tol).min(self.limit);
        (lo..=hi).any(|m| self.bits[m as usize])
    }
}

/// All multisets of residues whose total mass lies within `tol` of `gap`,
/// fewest residues first, ties broken by symbol order, truncated at
/// `limit`. Each multiset is returned with symbols in sorted order.
pub fn decompose_gap(
    rt: &ResidueTable,
    gap: MassUnit,
    tol: MassUnit,
    limit: usize,
) -> Vec<Vec<char>> {
    let mut out = Vec::new();
    if limit == 0 || gap <= 0 {
        return out;
    }
    let min_res = rt.min_residue_mass();
    if min_res <= 0 {
        return out;
    }
    let max_depth = ((gap + tol) / min_res) as usize;
    let lo = gap - tol;
    let hi = gap + tol;
    // Iterative deepening by residue count yields fewest-first order with
    // lexicographic ties for free.
    for depth in 1..=max_depth {
        let mut current = Vec::with_capacity(depth);
        dfs(rt, 0, 0, depth, lo, hi, &mut current, &mut out, limit);
        if out.len() >= limit {
            break;
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    rt: &ResidueTable,
    start: usize,
    sum: MassUnit,
    remaining: usize,
    lo: MassUnit,
    hi: MassUnit,
    current: &mut Vec<char>,
    out: &mut Vec<Vec<char>>,
    limit: usize,
) {
    if out.len() >= limit {
        return;
    }
    if remaining == 0 {
        if sum >= lo && sum <= hi {
            out.push(current.clone());
        }
        return;
    }
    let min_res = rt.min_residue_mass();
    for (idx, r) in rt.residues().iter().enumerate().skip(start) {
        let next = sum + r.mass;
        if next + (remaining as MassUnit - 1) * min_res > hi {
            continue;
        }
        current.push(r.symbol);
        dfs(rt, idx, next, remaining - 1, lo, hi, current, out, limit);
        current.pop();
        if out.len() >= limit {
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Brute-force oracle: enumerate every residue multiset with total
    /// mass <= h and mark the sums.
    fn oracle_sums(masses: &[MassUnit], h: MassUnit) -> Vec<bool> {
        let mut reach = vec![false; h as usize + 1];
        fn go(masses: &[MassUnit], from: usize, sum: MassUnit, h: MassUnit, reach: &mut [bool]) {
            for (i, &m) in masses.iter().enumerate().skip(from) {
                if sum + m <= h {
                    reach[(sum + m) as usize] = true;
                    go(masses, i, sum + m, h, reach);
                }
            }
        }
        go(masses, 0, 0, h, &mut reach);
        reach
    }

    fn ga_table() -> ResidueTable {
        ResidueTable::toy(&[('G', 57.0), ('A', 71.0)])
    }

    #[test]
    fn parse_two_residues() {
        let rt = ResidueTable::parse("G\t57.02146\nA\t71.03711\n", 0.01).unwrap();
        assert_eq!(rt.residues().len(), 2);
        assert_eq!(rt.get('G').unwrap().mass, 5702);
        assert_eq!(rt.get('A').unwrap().mass, 7104);
    }

    #[test]
    fn parse_rejects_empty() {
        assert!(matches!(ResidueTable::parse("# nothing\n", 1.0), Err(MassError::EmptyTable)));
    }

    #[test]
    fn parse_rejects_duplicate_symbol() {
        let err = ResidueTable::parse("G 57.0\nG 58.0", 1.0).unwrap_err();
        assert!(matches!(err, MassError::DuplicateSymbol { line: 2, symbol: 'G' }));
    }

    #[test]
    fn parse_reports_bad_line_number() {
        let err = ResidueTable::parse("G 57.0\nA oops", 1.0).unwrap_err();
        assert!(matches!(err, MassError::BadLine { line: 2, .. }));
    }

    #[test]
    fn parse_rejects_nonpositive_mass() {
        let err = ResidueTable::parse("G -5.0", 1.0).unwrap_err();
        assert!(matches!(err, MassError::NonPositiveMass { line: 1, .. }));
    }

    #[test]
    fn discretize_examples() {
        assert_eq!(discretize(57.02146, 0.01).unwrap(), 5702);
        assert_eq!(discretize(0.0, 0.01).unwrap(), 0);
        assert_eq!(discretize(146.0, 1.0).unwrap(), 146);
        assert!(discretize(-1.0, 0.01).is_err());
    }

    #[test]
    fn bundled_table_matches_reference_masses() {
        // Cross-checked against the ExPASy and Unimod monoisotopic residue
        // mass listings.
        let rt = ResidueTable::standard(0.01);
        assert_eq!(rt.residues().len(), 20);
        assert!((rt.get('G').unwrap().mass_da - 57.02146).abs() < 1e-5);
        assert!((rt.get('W').unwrap().mass_da - 186.07931).abs() < 1e-5);
        assert!((rt.get('R').unwrap().mass_da - 156.10111).abs() < 1e-5);
        // I/L share a mass at any precision; K/Q split at 0.01 but not 1.0.
        assert_eq!(rt.canonical_symbol('L'), rt.canonical_symbol('I'));
        assert_ne!(rt.get('K').unwrap().mass, rt.get('Q').unwrap().mass);
        let coarse = ResidueTable::standard(1.0);
        assert_eq!(coarse.get('K').unwrap().mass, coarse.get('Q').unwrap().mass);
    }

    #[test]
    fn mass_array_matches_oracle_on_toy_alphabet() {
        let rt = ga_table();
        let a = MassArray::build(&rt, 200).unwrap();
        let oracle = oracle_sums(&[57, 71], 200);
        for m in 0..=200 {
            assert_eq!(a.get(m), oracle[m as usize], "mismatch at {m}");
        }
        assert!(a.get(57));
        assert!(a.get(71));
        assert!(a.get(128));
        assert!(a.get(142));
        assert!(!a.get(1));
        assert!(!a.get(85));
        assert!(!a.get(0));
    }

    #[test]
    fn mass_array_rejects_nonpositive_limit() {
        assert!(MassArray::build(&ga_table(), 0).is_err());
    }

    #[test]
    fn is_residue_sum_examples() {
        let rt = ga_table();
        let a = MassArray::build(&rt, 200).unwrap();
        assert!(a.is_residue_sum(128, 0));
        assert!(!a.is_residue_sum(85, 0));
        assert!(!a.is_residue_sum(a.limit() + 5, 0));
        // Tolerance window around A = 71.
        assert!(a.is_residue_sum(70, 1));
        assert!(!a.is_residue_sum(70, 0));
    }

    #[test]
    fn decompose_gap_examples() {
        let rt = ga_table();
        assert_eq!(decompose_gap(&rt, 128, 0, 10), vec![vec!['A', 'G']]);
        assert_eq!(decompose_gap(&rt, 57, 0, 10), vec![vec!['G']]);
        assert!(decompose_gap(&rt, 85, 0, 10).is_empty());
        // Fewest residues first: 114 = GG only; 142 = AA only.
        assert_eq!(decompose_gap(&rt, 114, 0, 10), vec![vec!['G', 'G']]);
        // Wide tolerance orders by count then symbol.
        let d = decompose_gap(&rt, 64, 10, 10);
        assert_eq!(d, vec![vec!['A'], vec!['G']]);
    }

    proptest! {
        /// A[m]=1 iff decompose_gap finds something, on random small
        /// alphabets.
        #[test]
        fn array_agrees_with_decomposition(
            masses in proptest::collection::btree_set(3i64..40, 2..=5),
            h in 50i64..300,
        ) {
            let symbols = ['a', 'b', 'c', 'd', 'e'];
            let entries: Vec<(char, f64)> = masses
                .iter()
                .enumerate()
                .map(|(i, &m)| (symbols[i], m as f64))
                .collect();
            let rt = ResidueTable::toy(&entries);
            let a = MassArray::build(&rt, h).unwrap();
            for m in 0..=h {
                let decomposable = !decompose_gap(&rt, m, 0, 1).is_empty();
                prop_assert_eq!(a.get(m), decomposable, "m={}", m);
            }
        }

        /// The array is independent of residue order in the table.
        #[test]
        fn array_is_order_independent(
            masses in proptest::collection::vec(3i64..40, 2..=5),
        ) {
            let symbols = ['a', 'b', 'c', 'd', 'e'];
            let mut entries: Vec<(char, f64)> = masses
                .iter()
                .enumerate()
                .map(|(i, &m)| (symbols[i], m as f64))
                .collect();
            let rt1 = ResidueTable::toy(&entries);
            entries.reverse();
            // Reversed entries may duplicate masses but symbols stay unique.
            let rt2 = ResidueTable::toy(&entries);
            let a1 = MassArray::build(&rt1, 150).unwrap();
            let a2 = MassArray::build(&rt2, 150).unwrap();
            for m in 0..=150 {
                prop_assert_eq!(a1.get(m), a2.get(m));
            }
        }

        /// Decompositions stay inside the tolerance window and are unique.
        #[test]
        fn decompositions_respect_tolerance(
            gap in 1i64..250,
            tol in 0i64..5,
        ) {
            let rt = ResidueTable::toy(&[('G', 57.0), ('A', 71.0), ('S', 87.0)]);
            let ds = decompose_gap(&rt, gap, tol, 500);
            let mut seen = std::collections::HashSet::new();
            for d in &ds {
                let sum: MassUnit = d.iter().map(|&c| rt.get(c).unwrap().mass).sum();
                prop_assert!((sum - gap).abs() <= tol);
                prop_assert!(seen.insert(d.clone()), "duplicate multiset {:?}", d);
            }
        }
    }
}
