//! Construction-A sublattices of `Z^8`, coset labelling and closest-point search.
//!
//! Binary words of length 8 are stored as `u8` masks with bit `i` holding
//! coordinate `i`. A sublattice `C + 2Z^8` is labelled modulo 2 through the
//! parity checks of `C`, which makes the coset label a group homomorphism
//! `Z^8 -> GF(2)^b`.

mod sphere;

use std::fmt;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::golden::{det_units, for_each_in_box, Point8};

pub use sphere::{brute_force_closest, closest_point, oracle_box_radius, SphereDecoder};

/// Coordinates scanned by the determinant floor searches.
pub const FLOOR_SCAN_BOUND: i64 = 2;

fn parity(w: u8) -> u32 {
    w.count_ones() & 1
}

/// Reduces `rows` to row echelon form; returns the reduced rows and pivot columns.
fn echelon(rows: &[u8]) -> (Vec<u8>, Vec<usize>) {
    let mut rows = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..8 {
        let bit = 1u8 << col;
        let Some(p) = (r..rows.len()).find(|&i| rows[i] & bit != 0) else {
            continue;
        };
        rows.swap(r, p);
        for i in 0..rows.len() {
            if i != r && rows[i] & bit != 0 {
                rows[i] ^= rows[r];
            }
        }
        pivots.push(col);
        r += 1;
    }
    rows.truncate(r);
    (rows, pivots)
}

fn rank(rows: &[u8]) -> usize {
    echelon(rows).0.len()
}

/// Binary linear code of length 8.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryLinearCode {
    rows: Vec<u8>,
}

impl BinaryLinearCode {
    pub fn new(rows: Vec<u8>) -> Result<Self> {
        if rank(&rows) != rows.len() {
            return Err(Error::DependentRows);
        }
        Ok(Self { rows })
    }

    /// Parses rows written as eight `0`/`1` characters, coordinate 0 first.
    pub fn from_strings<S: AsRef<str>>(rows: &[S]) -> Result<Self> {
        let rows = rows
            .iter()
            .map(|s| parse_word(s.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }

    pub fn full() -> Self {
        Self {
            rows: (0..8).map(|i| 1u8 << i).collect(),
        }
    }

    pub fn zero() -> Self {
        Self { rows: Vec::new() }
    }

    pub fn rows(&self) -> &[u8] {
        &self.rows
    }

    pub fn dimension(&self) -> usize {
        self.rows.len()
    }

    pub fn codewords(&self) -> Vec<u8> {
        let k = self.rows.len();
        (0..1u32 << k)
            .map(|m| {
                self.rows
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| m >> i & 1 == 1)
                    .fold(0u8, |acc, (_, r)| acc ^ r)
            })
            .collect()
    }

    pub fn membership(&self) -> [bool; 256] {
        let mut table = [false; 256];
        for w in self.codewords() {
            table[w as usize] = true;
        }
        table
    }

    pub fn contains(&self, w: u8) -> bool {
        rank(&[self.rows.as_slice(), &[w]].concat()) == self.rows.len()
    }

    pub fn is_subcode_of(&self, other: &BinaryLinearCode) -> bool {
        self.rows.iter().all(|&r| other.contains(r))
    }

    pub fn min_weight(&self) -> u32 {
        self.codewords()
            .into_iter()
            .filter(|&w| w != 0)
            .map(|w| w.count_ones())
            .min()
            .unwrap_or(0)
    }

    /// A basis of the dual code.
    pub fn dual_rows(&self) -> Vec<u8> {
        let mut basis: Vec<u8> = Vec::new();
        for w in 1..=255u8 {
            if self.rows.iter().all(|&r| parity(r & w) == 0) && rank(&[basis.as_slice(), &[w]].concat()) > basis.len() {
                basis.push(w);
            }
        }
        basis
    }
}

impl fmt::Display for BinaryLinearCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let words: Vec<String> = self.rows.iter().map(|&r| format_word(r)).collect();
        write!(f, "[{}]", words.join(" "))
    }
}

pub fn parse_word(s: &str) -> Result<u8> {
    if s.len() != 8 || !s.bytes().all(|b| b == b'0' || b == b'1') {
        return Err(Error::invalid(format!("'{s}' is not an 8-bit binary word")));
    }
    Ok(s.bytes()
        .enumerate()
        .fold(0u8, |acc, (i, b)| acc | (((b - b'0') as u8) << i)))
}

pub fn format_word(w: u8) -> String {
    (0..8).map(|i| if w >> i & 1 == 1 { '1' } else { '0' }).collect()
}

/// Residue of an integer point modulo 2, as a word mask.
pub fn residue(x: &Point8) -> u8 {
    x.iter()
        .enumerate()
        .fold(0u8, |acc, (i, &c)| acc | (((c & 1) as u8) << i))
}

/// `C + 2Z^8` for a binary code `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sublattice {
    code: BinaryLinearCode,
    basis: [Point8; 8],
    index: u32,
    min_det_floor: u64,
}

impl Sublattice {
    pub fn code(&self) -> &BinaryLinearCode {
        &self.code
    }

    /// Basis vectors; lattice points are integer combinations of these.
    pub fn basis(&self) -> &[Point8; 8] {
        &self.basis
    }

    pub fn index(&self) -> u32 {
        self.index
    }

    /// Minimum `|det X|^2 / delta` over nonzero lattice points with coordinates in `[-2, 2]`.
    pub fn min_det_floor(&self) -> u64 {
        self.min_det_floor
    }

    pub fn contains(&self, x: &Point8) -> bool {
        self.code.contains(residue(x))
    }

    pub fn point(&self, coords: &Point8) -> Point8 {
        let mut x = [0i64; 8];
        for (j, &u) in coords.iter().enumerate() {
            for i in 0..8 {
                x[i] += u * self.basis[j][i];
            }
        }
        x
    }
}

pub fn construction_a(code: &BinaryLinearCode) -> Sublattice {
    let (rows, pivots) = echelon(code.rows());
    let mut basis = [[0i64; 8]; 8];
    let mut n = 0;
    for &r in &rows {
        basis[n] = std::array::from_fn(|i| (r >> i & 1) as i64);
        n += 1;
    }
    for col in (0..8).filter(|c| !pivots.contains(c)) {
        basis[n][col] = 2;
        n += 1;
    }
    let member = code.membership();
    let mut floor = u64::MAX;
    for_each_in_box(-FLOOR_SCAN_BOUND, FLOOR_SCAN_BOUND, |x| {
        if member[residue(x) as usize] && x.iter().any(|&c| c != 0) {
            floor = floor.min(det_units(x));
        }
    });
    Sublattice {
        code: code.clone(),
        basis,
        index: 1 << (8 - code.dimension()),
        min_det_floor: floor,
    }
}

/// Lower bound on `|det X|^2 / delta` for nonzero points with residue `r` mod 2.
///
/// The Gaussian integer `g` with `5|det X|^2 = |g|^2` is determined modulo 2 by
/// the residue: `g = 0 mod 2` forces `|g|^2 >= 4`, `g = 1+i mod 2` forces
/// `|g|^2 >= 2`, anything else is odd.
pub fn residue_det_bound(r: u8) -> u64 {
    let bit = |i: usize| (r >> i & 1) as i64;
    let a = Complex::new(bit(0), bit(1));
    let b = Complex::new(bit(2), bit(3));
    let c = Complex::new(bit(4), bit(5));
    let d = Complex::new(bit(6), bit(7));
    let g = (a * a + a * b - b * b) - Complex::new(0, 1) * (c * c + c * d - d * d);
    match (g.re.rem_euclid(2), g.im.rem_euclid(2)) {
        (0, 0) => 4,
        (1, 1) => 2,
        _ => 1,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainLevel {
    pub lattice: Sublattice,
    /// Declared floor in delta units.
    pub declared_floor: u64,
}

/// Nested partition `Z^8 > L1 > L2 > ...` with binary coset labels.
///
/// Labels concatenate the syndromes of successive levels, coarsest level in
/// the most significant bits.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionChain {
    name: String,
    levels: Vec<ChainLevel>,
    checks: Vec<u8>,
    label_of_residue: Vec<u32>,
    coset_reps: Vec<Point8>,
    coset_min: Vec<u64>,
    coset_bound: Vec<u64>,
}

impl PartitionChain {
    /// `levels` lists each level's code and declared floor, coarsest first.
    pub fn new(name: impl Into<String>, levels: Vec<(BinaryLinearCode, u64)>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::invalid("partition chain needs at least one level"));
        }
        for pair in levels.windows(2) {
            if !pair[1].0.is_subcode_of(&pair[0].0) {
                return Err(Error::invalid(format!(
                    "level code {} is not a subcode of {}",
                    pair[1].0, pair[0].0
                )));
            }
        }
        let mut checks: Vec<u8> = Vec::new();
        for (code, _) in &levels {
            for w in code.dual_rows() {
                if rank(&[checks.as_slice(), &[w]].concat()) > checks.len() {
                    checks.push(w);
                }
            }
        }
        let b = checks.len();
        let label_of_residue: Vec<u32> = (0..=255u8)
            .map(|r| {
                checks
                    .iter()
                    .enumerate()
                    .fold(0u32, |acc, (j, &h)| acc | (parity(h & r) << (b - 1 - j)))
            })
            .collect();

        let n_labels = 1usize << b;
        let mut order: Vec<u8> = (0..=255u8).collect();
        order.sort_by_key(|&w| (w.count_ones(), w));
        let mut coset_reps: Vec<Option<Point8>> = vec![None; n_labels];
        for w in order {
            let l = label_of_residue[w as usize] as usize;
            if coset_reps[l].is_none() {
                coset_reps[l] = Some(std::array::from_fn(|i| (w >> i & 1) as i64));
            }
        }
        let coset_reps: Vec<Point8> = coset_reps.into_iter().map(|r| r.expect("syndrome map is onto")).collect();

        let mut coset_min = vec![u64::MAX; n_labels];
        for_each_in_box(-FLOOR_SCAN_BOUND, FLOOR_SCAN_BOUND, |x| {
            if x.iter().any(|&c| c != 0) {
                let l = label_of_residue[residue(x) as usize] as usize;
                coset_min[l] = coset_min[l].min(det_units(x));
            }
        });
        let mut coset_bound = vec![u64::MAX; n_labels];
        for r in 0..=255u8 {
            let l = label_of_residue[r as usize] as usize;
            coset_bound[l] = coset_bound[l].min(residue_det_bound(r));
        }

        let levels = levels
            .into_iter()
            .map(|(code, declared_floor)| ChainLevel {
                lattice: construction_a(&code),
                declared_floor,
            })
            .collect();
        Ok(Self {
            name: name.into(),
            levels,
            checks,
            label_of_residue,
            coset_reps,
            coset_min,
            coset_bound,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn levels(&self) -> &[ChainLevel] {
        &self.levels
    }

    /// The deepest sublattice, whose cosets the labels name.
    pub fn deepest(&self) -> &Sublattice {
        &self.levels.last().expect("non-empty chain").lattice
    }

    pub fn label_bits(&self) -> u32 {
        self.checks.len() as u32
    }

    pub fn num_labels(&self) -> usize {
        1 << self.checks.len()
    }

    pub fn parity_checks(&self) -> &[u8] {
        &self.checks
    }

    pub fn coset_label(&self, x: &Point8) -> u32 {
        self.label_of_residue[residue(x) as usize]
    }

    pub fn label_of_residue(&self, r: u8) -> u32 {
        self.label_of_residue[r as usize]
    }

    pub fn coset_rep(&self, label: u32) -> &Point8 {
        &self.coset_reps[label as usize]
    }

    pub fn coset_reps(&self) -> &[Point8] {
        &self.coset_reps
    }

    /// Minimum `|det X|^2 / delta` over nonzero points of the coset `label`
    /// with coordinates in `[-2, 2]`.
    pub fn coset_min_det(&self, label: u32) -> u64 {
        self.coset_min[label as usize]
    }

    /// Algebraic lower bound on the same minimum over the whole coset.
    pub fn coset_det_bound(&self, label: u32) -> u64 {
        self.coset_bound[label as usize]
    }
}

/// `coset_label` as a free function.
pub fn coset_label(point: &Point8, chain: &PartitionChain) -> u32 {
    chain.coset_label(point)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelReport {
    pub name: String,
    pub index: u32,
    pub declared_floor: u64,
    pub measured_floor: u64,
}

impl LevelReport {
    pub fn ok(&self) -> bool {
        self.declared_floor == self.measured_floor
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionReport {
    pub chain: String,
    pub levels: Vec<LevelReport>,
}

impl PartitionReport {
    pub fn ok(&self) -> bool {
        self.levels.iter().all(LevelReport::ok)
    }
}

impl fmt::Display for PartitionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.levels {
            writeln!(
                f,
                "{} {:<6} index {:>3}  declared {}δ  measured {}δ  {}",
                self.chain,
                l.name,
                l.index,
                l.declared_floor,
                l.measured_floor,
                if l.ok() { "ok" } else { "MISMATCH" }
            )?;
        }
        Ok(())
    }
}

/// Measures the determinant floor of `Z^8` and of every level of the chain.
pub fn validate_partition(chain: &PartitionChain) -> PartitionReport {
    let mut z8_floor = u64::MAX;
    for_each_in_box(-FLOOR_SCAN_BOUND, FLOOR_SCAN_BOUND, |x| {
        if x.iter().any(|&c| c != 0) {
            z8_floor = z8_floor.min(det_units(x));
        }
    });
    let mut levels = vec![LevelReport {
        name: "Z8".into(),
        index: 1,
        declared_floor: 1,
        measured_floor: z8_floor,
    }];
    for (i, level) in chain.levels().iter().enumerate() {
        levels.push(LevelReport {
            name: format!("level{}", i + 1),
            index: level.lattice.index(),
            declared_floor: level.declared_floor,
            measured_floor: level.lattice.min_det_floor(),
        });
    }
    PartitionReport {
        chain: chain.name().to_string(),
        levels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hamming() -> BinaryLinearCode {
        BinaryLinearCode::from_strings(&["11111111", "11110000", "11001100", "10101010"]).unwrap()
    }

    #[test]
    fn word_format_roundtrip() {
        assert_eq!(parse_word("10000000").unwrap(), 1);
        assert_eq!(format_word(0b1000_0001), "10000001");
        assert!(parse_word("1000000").is_err());
        assert!(parse_word("1000000x").is_err());
    }

    #[test]
    fn dependent_rows_rejected() {
        let err = BinaryLinearCode::from_strings(&["11110000", "00001111", "11111111"]).unwrap_err();
        assert_eq!(err, Error::DependentRows);
    }

    #[test]
    fn hamming_code_parameters() {
        let h = hamming();
        assert_eq!(h.dimension(), 4);
        assert_eq!(h.min_weight(), 4);
        assert_eq!(h.codewords().len(), 16);
        assert_eq!(h.dual_rows().len(), 4);
    }

    #[test]
    fn construction_a_indices() {
        let full = construction_a(&BinaryLinearCode::full());
        assert_eq!(full.index(), 1);
        assert_eq!(full.min_det_floor(), 1);
        let e8 = construction_a(&hamming());
        assert_eq!(e8.index(), 16);
        let two_z8 = construction_a(&BinaryLinearCode::zero());
        assert_eq!(two_z8.index(), 256);
        assert_eq!(two_z8.min_det_floor(), 16);
    }

    #[test]
    fn construction_a_basis_generates_lattice() {
        let lat = construction_a(&hamming());
        let m = nalgebra::SMatrix::<f64, 8, 8>::from_fn(|i, j| lat.basis()[j][i] as f64);
        assert!((m.determinant().abs() - 16.0).abs() < 1e-9);
        for v in lat.basis() {
            assert!(lat.contains(v));
        }
    }

    #[test]
    fn hamming_cosets_enumerate_to_sixteen() {
        let chain = PartitionChain::new("h", vec![(hamming(), 2)]).unwrap();
        assert_eq!(chain.num_labels(), 16);
        let mut seen = std::collections::HashSet::new();
        for r in 0..=255u8 {
            seen.insert(chain.label_of_residue(r));
        }
        assert_eq!(seen.len(), 16);
        for l in 0..16 {
            assert_eq!(chain.coset_label(chain.coset_rep(l)), l);
        }
    }

    #[test]
    fn non_nested_chain_rejected() {
        let c2 = BinaryLinearCode::from_strings(&["11000000"]).unwrap();
        assert!(PartitionChain::new("bad", vec![(hamming(), 2), (c2, 4)]).is_err());
    }

    #[test]
    fn residue_bound_examples() {
        assert_eq!(residue_det_bound(0b0000_0001), 1);
        assert_eq!(residue_det_bound(0b0000_0011), 4);
        assert_eq!(residue_det_bound(0), 4);
    }
}
