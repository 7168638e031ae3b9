//! Error-event counting over the fading block structure, block determinant
//! metrics, a Chernoff-style PEP and the two-term truncated union bound.
//!
//! Determinant values are carried as integer multiples of powers of
//! `delta = 1/5` so that table comparisons are exact.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::golden::DELTA;

/// Receive antennas.
pub const N_R: u32 = 2;

/// Polynomial in `delta` with nonnegative integer coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeltaPoly {
    /// `(coefficient, power)`, highest power first, no zero coefficients.
    terms: Vec<(u64, u32)>,
}

impl DeltaPoly {
    pub fn monomial(coef: u64, power: u32) -> Self {
        Self::from_terms(vec![(coef, power)])
    }

    pub fn from_terms(mut terms: Vec<(u64, u32)>) -> Self {
        terms.sort_by(|a, b| b.1.cmp(&a.1));
        let mut merged: Vec<(u64, u32)> = Vec::new();
        for (c, p) in terms {
            match merged.last_mut() {
                Some(last) if last.1 == p => last.0 += c,
                _ => merged.push((c, p)),
            }
        }
        merged.retain(|t| t.0 != 0);
        Self { terms: merged }
    }

    pub fn terms(&self) -> &[(u64, u32)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn value(&self) -> f64 {
        self.terms.iter().map(|&(c, p)| c as f64 * DELTA.powi(p as i32)).sum()
    }

    /// Rendering with the Greek letter and superscripts.
    pub fn pretty(&self) -> String {
        const SUP: [char; 10] = ['⁰', '¹', '²', '³', '⁴', '⁵', '⁶', '⁷', '⁸', '⁹'];
        self.render(|p| {
            let mut s = String::from("δ");
            if p > 1 {
                s.extend(p.to_string().chars().map(|d| SUP[d.to_digit(10).unwrap() as usize]));
            }
            s
        })
    }

    fn render(&self, power: impl Fn(u32) -> String) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        self.terms
            .iter()
            .map(|&(c, p)| match (c, p) {
                (c, 0) => c.to_string(),
                (1, p) => power(p),
                (c, p) => format!("{c}{}", power(p)),
            })
            .collect::<Vec<_>>()
            .join("+")
    }
}

impl fmt::Display for DeltaPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.render(|p| if p == 1 { "d".into() } else { format!("d^{p}") });
        f.write_str(&s)
    }
}

impl FromStr for DeltaPoly {
    type Err = Error;

    /// Accepts `3d`, `2d^2+2d`, `2δ²`, `d`, `7`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("cannot parse delta polynomial '{s}'"));
        let mut terms = Vec::new();
        for raw in s.split('+') {
            let t: String = raw.chars().filter(|c| !c.is_whitespace()).collect();
            if t.is_empty() {
                return Err(bad());
            }
            let split = t.find(['d', 'δ']);
            let (coef, rest) = match split {
                Some(i) => (&t[..i], &t[i..]),
                None => (t.as_str(), ""),
            };
            let coef: u64 = if coef.is_empty() { 1 } else { coef.parse().map_err(|_| bad())? };
            let power = if rest.is_empty() {
                0
            } else {
                let rest = rest.trim_start_matches(['d', 'δ']);
                if rest.is_empty() {
                    1
                } else if let Some(p) = rest.strip_prefix('^') {
                    p.parse().map_err(|_| bad())?
                } else {
                    let digits: String = rest
                        .chars()
                        .map(|c| "⁰¹²³⁴⁵⁶⁷⁸⁹".chars().position(|x| x == c).map(|d| char::from(b'0' + d as u8)))
                        .collect::<Option<String>>()
                        .ok_or_else(bad)?;
                    digits.parse().map_err(|_| bad())?
                }
            };
            terms.push((coef, power));
        }
        Ok(Self::from_terms(terms))
    }
}

/// A published table cell: `-` (empty) or one or more alternative values.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PublishedValue(pub Vec<DeltaPoly>);

impl PublishedValue {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "-" || s == "−" {
            return Ok(Self(Vec::new()));
        }
        s.split(',').map(str::parse).collect::<Result<_>>().map(Self)
    }

    /// Exact match: a single published value equal to the computed one, or
    /// both absent.
    pub fn matches(&self, computed: Option<&DeltaPoly>) -> bool {
        match computed {
            None => self.0.is_empty(),
            Some(c) => self.0.len() == 1 && self.0[0] == *c,
        }
    }

    pub fn pretty(&self) -> String {
        if self.0.is_empty() {
            "−".into()
        } else {
            self.0.iter().map(DeltaPoly::pretty).collect::<Vec<_>>().join(", ")
        }
    }
}

impl fmt::Display for PublishedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            f.write_str("-")
        } else {
            let parts: Vec<String> = self.0.iter().map(DeltaPoly::to_string).collect();
            f.write_str(&parts.join(", "))
        }
    }
}

/// Counts of shortest error events by the number of fading blocks spanned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ErrorEventStats {
    pub l: usize,
    pub s: usize,
    pub n: usize,
    pub b: usize,
    pub b_prime: usize,
    pub ell: usize,
    pub n1: usize,
    pub n2: usize,
    pub ns: usize,
    pub ns1: usize,
    pub ns2: usize,
}

fn check_counts(l: usize, s: usize, n: usize) -> Result<()> {
    if s < 2 || s > l {
        return Err(Error::invalid(format!("need 2 <= S <= L, got S={s}, L={l}")));
    }
    if n == 0 || l % n != 0 {
        return Err(Error::invalid(format!("N={n} does not divide L={l}")));
    }
    Ok(())
}

pub fn count_events(l: usize, s: usize, n: usize) -> Result<ErrorEventStats> {
    check_counts(l, s, n)?;
    let b = l / n;
    let n1 = s.div_ceil(n);
    let ell = n1 * n - s + 1;
    let b_prime = b - n1 + 1;
    let ns = l - s + 1;
    let ns1 = b_prime * ell;
    Ok(ErrorEventStats {
        l,
        s,
        n,
        b,
        b_prime,
        ell,
        n1,
        n2: n1 + 1,
        ns,
        ns1,
        ns2: ns - ns1,
    })
}

/// Blocks touched by an event of length `s` starting at 1-based position `p`.
pub fn blocks_touched(p: usize, s: usize, n: usize) -> usize {
    (p + s - 2) / n - (p - 1) / n + 1
}

/// Tally over every start position; the oracle for [`count_events`].
pub fn brute_force_count(l: usize, s: usize, n: usize) -> Result<ErrorEventStats> {
    check_counts(l, s, n)?;
    let n1 = s.div_ceil(n);
    let (mut ns1, mut ns2) = (0, 0);
    for p in 1..=l - s + 1 {
        match blocks_touched(p, s, n) {
            m if m == n1 => ns1 += 1,
            m if m == n1 + 1 => ns2 += 1,
            m => {
                return Err(Error::invalid(format!(
                    "event at position {p} spans {m} blocks, expected {n1} or {}",
                    n1 + 1
                )))
            }
        }
    }
    let b = l / n;
    Ok(ErrorEventStats {
        l,
        s,
        n,
        b,
        b_prime: b - n1 + 1,
        ell: n1 * n - s + 1,
        n1,
        n2: n1 + 1,
        ns: l - s + 1,
        ns1,
        ns2,
    })
}

/// Per-block sums of an event placed `offset` sections into a block; blocks
/// with zero sum are dropped.
pub fn block_sums(seq: &[u64], offset: usize, n: usize) -> Vec<u64> {
    let mut sums: Vec<u64> = Vec::new();
    let mut current = None;
    for (t, &d) in seq.iter().enumerate() {
        let block = (offset + t) / n;
        if current != Some(block) {
            sums.push(0);
            current = Some(block);
        }
        *sums.last_mut().expect("pushed above") += d;
    }
    sums.retain(|&a| a != 0);
    sums
}

fn validate_sequence(seq: &[u64]) -> Result<()> {
    if seq.is_empty() || seq.contains(&0) {
        return Err(Error::invalid(format!("determinant sequence {seq:?} must be nonempty and positive")));
    }
    Ok(())
}

/// Minimising alignment for events spanning exactly `m` blocks: the product
/// `Δ` in delta units and the block sums realising it.
pub fn delta_case_alignment(seq: &[u64], n: usize, m: usize) -> Result<(DeltaPoly, Vec<u64>)> {
    validate_sequence(seq)?;
    if n == 0 {
        return Err(Error::invalid("block length must be positive"));
    }
    let mut best: Option<(u64, Vec<u64>)> = None;
    for offset in 0..n {
        if (offset + seq.len() - 1) / n + 1 != m {
            continue;
        }
        let sums = block_sums(seq, offset, n);
        let prod = sums.iter().product::<u64>();
        if best.as_ref().is_none_or(|(b, _)| prod < *b) {
            best = Some((prod, sums));
        }
    }
    let (prod, sums) = best.ok_or(Error::Unrealizable {
        len: seq.len(),
        blocks: m,
        block_len: n,
    })?;
    Ok((DeltaPoly::monomial(prod, m as u32), sums))
}

pub fn delta_case(seq: &[u64], n: usize, m: usize) -> Result<DeltaPoly> {
    delta_case_alignment(seq, n, m).map(|r| r.0)
}

/// Product over nonzero blocks of the per-block determinant sums of a whole
/// frame difference; `None` when every block sum is zero.
pub fn delta_min_block(steps: &[u64], n: usize) -> Option<DeltaPoly> {
    if n == 0 {
        return None;
    }
    let sums: Vec<u64> = steps.chunks(n).map(|c| c.iter().sum()).filter(|&a| a != 0).collect();
    if sums.is_empty() {
        return None;
    }
    Some(DeltaPoly::monomial(sums.iter().product(), sums.len() as u32))
}

/// `prod_l (1 + c^2 a_l)^(-n_R)` over absolute block sums `a_l`.
pub fn pep_product(a: &[f64], c: f64) -> Result<f64> {
    if !(c > 0.0) || a.is_empty() || a.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::invalid("PEP needs c > 0 and positive block sums"));
    }
    Ok(a.iter().map(|&x| (1.0 + c * c * x).powi(-(N_R as i32))).product())
}

/// PEP surrogate at `c = 1/(4 N0)`: the product form over `a_list` when
/// given, else `(1 + c^2 delta^(1/m))^(-n_R m)`.
pub fn pep_term(delta: f64, m: u32, a_list: Option<&[f64]>, c: f64) -> Result<f64> {
    if !(delta > 0.0) || m == 0 || !(c > 0.0) {
        return Err(Error::invalid(format!(
            "pep_term needs delta > 0, m >= 1, c > 0 (got {delta}, {m}, {c})"
        )));
    }
    match a_list {
        Some(a) => pep_product(a, c),
        None => Ok((1.0 + c * c * delta.powf(1.0 / m as f64)).powf(-((N_R * m) as f64))),
    }
}

pub fn c_of_n0(n0: f64) -> f64 {
    1.0 / (4.0 * n0)
}

/// `N_s1 P_1 + N_s2 P_2`, taking each case at its minimising sequence and
/// alignment.
pub fn truncated_ub(stats: &ErrorEventStats, seqs: &[Vec<u64>], c: f64) -> Result<f64> {
    if seqs.is_empty() || seqs.iter().any(|s| s.len() != stats.s) {
        return Err(Error::invalid(format!("sequences must have length S={}", stats.s)));
    }
    let term = |m: usize| -> Result<f64> {
        let mut best: Option<(u64, Vec<u64>)> = None;
        for seq in seqs {
            let (d, sums) = delta_case_alignment(seq, stats.n, m)?;
            let v = d.terms()[0].0;
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, sums));
            }
        }
        let (v, sums) = best.expect("nonempty sequences");
        let a: Vec<f64> = sums.iter().map(|&x| x as f64 * DELTA).collect();
        pep_term(v as f64 * DELTA.powi(m as i32), m as u32, Some(&a), c)
    };
    let mut ub = stats.ns1 as f64 * term(stats.n1)?;
    if stats.ns2 > 0 {
        ub += stats.ns2 as f64 * term(stats.n2)?;
    }
    Ok(ub)
}

/// Published counterparts of one report row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublishedRow {
    pub ns1: Option<usize>,
    pub ns2: Option<usize>,
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    pub delta1: PublishedValue,
    pub delta2: PublishedValue,
}

/// One `(code, N)` cell of the analysis grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseSpec {
    pub states: usize,
    pub partition: String,
    pub sequences: Vec<Vec<u64>>,
    pub frame_len: usize,
    pub n: usize,
    pub published: Option<PublishedRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisRow {
    pub states: usize,
    pub partition: String,
    pub stats: ErrorEventStats,
    pub delta1: DeltaPoly,
    pub delta2: Option<DeltaPoly>,
    pub published: Option<PublishedRow>,
}

fn opt(v: Option<usize>) -> String {
    v.map_or("-".into(), |x| x.to_string())
}

impl AnalysisRow {
    pub fn ns2(&self) -> Option<usize> {
        (self.stats.ns2 > 0).then_some(self.stats.ns2)
    }

    pub fn n2(&self) -> Option<usize> {
        (self.stats.ns2 > 0).then_some(self.stats.n2)
    }

    /// Disagreements with the published row, one message per column.
    pub fn mismatches(&self) -> Vec<String> {
        let Some(p) = &self.published else {
            return Vec::new();
        };
        let mut out = Vec::new();
        let mut count = |name: &str, got: Option<usize>, want: Option<usize>| {
            if got != want {
                out.push(format!("{name}: computed {} published {}", opt(got), opt(want)));
            }
        };
        count("Ns1", Some(self.stats.ns1), p.ns1);
        count("Ns2", self.ns2(), p.ns2);
        count("n1", Some(self.stats.n1), p.n1);
        count("n2", self.n2(), p.n2);
        if !p.delta1.matches(Some(&self.delta1)) {
            out.push(format!("delta1: computed {} published {}", self.delta1, p.delta1));
        }
        if !p.delta2.matches(self.delta2.as_ref()) {
            let got = self.delta2.as_ref().map_or("-".into(), DeltaPoly::to_string);
            out.push(format!("delta2: computed {got} published {}", p.delta2));
        }
        out
    }

    pub fn matches_reference(&self) -> Option<bool> {
        self.published.as_ref().map(|_| self.mismatches().is_empty())
    }

    /// Multiplicity columns only.
    pub fn counts_match(&self) -> Option<bool> {
        self.published.as_ref().map(|p| {
            p.ns1 == Some(self.stats.ns1) && p.ns2 == self.ns2() && p.n1 == Some(self.stats.n1) && p.n2 == self.n2()
        })
    }
}

pub fn report_tables(cases: &[CaseSpec]) -> Result<Vec<AnalysisRow>> {
    cases
        .iter()
        .map(|case| {
            let s = case.sequences.first().map(Vec::len).unwrap_or(0);
            if case.sequences.iter().any(|q| q.len() != s) {
                return Err(Error::invalid("determinant sequences of one code differ in length"));
            }
            let stats = count_events(case.frame_len, s, case.n)?;
            let min_case = |m: usize| -> Result<DeltaPoly> {
                let mut best: Option<DeltaPoly> = None;
                for q in &case.sequences {
                    let d = delta_case(q, case.n, m)?;
                    if best.as_ref().is_none_or(|b| d.value() < b.value()) {
                        best = Some(d);
                    }
                }
                Ok(best.expect("nonempty"))
            };
            let delta1 = min_case(stats.n1)?;
            let delta2 = if stats.ns2 > 0 { Some(min_case(stats.n2)?) } else { None };
            Ok(AnalysisRow {
                states: case.states,
                partition: case.partition.clone(),
                stats,
                delta1,
                delta2,
                published: case.published.clone(),
            })
        })
        .collect()
}

pub const CSV_HEADER: &str = "states,partition,S,N,n1,n2,Ns1,Ns2,delta1_delta_units,delta2_delta_units,matches_paper";

pub fn to_csv(rows: &[AnalysisRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let matches = match r.matches_reference() {
            Some(true) => "yes",
            Some(false) => "no",
            None => "",
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.states,
            r.partition,
            r.stats.s,
            r.stats.n,
            r.stats.n1,
            opt(r.n2()),
            r.stats.ns1,
            opt(r.ns2()),
            r.delta1,
            r.delta2.as_ref().map_or("-".into(), DeltaPoly::to_string),
            matches
        ));
    }
    out
}

/// Aligned table with published values beside every disagreeing row.
pub fn to_text(rows: &[AnalysisRow]) -> String {
    let header = ["St.", "Part.", "S", "N", "Ns1", "Ns2", "n1", "n2", "Δ1", "Δ2", "ref"];
    let mut cells: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    let mut notes = Vec::new();
    for r in rows {
        let reference = match r.matches_reference() {
            Some(true) => "match".to_string(),
            Some(false) => {
                notes.push(format!(
                    "{}-state {} N={}: {}",
                    r.states,
                    r.partition,
                    r.stats.n,
                    r.mismatches().join("; ")
                ));
                format!("DIFFERS [{}]", notes.len())
            }
            None => String::new(),
        };
        cells.push(vec![
            r.states.to_string(),
            r.partition.clone(),
            r.stats.s.to_string(),
            r.stats.n.to_string(),
            r.stats.ns1.to_string(),
            r.ns2().map_or("−".into(), |v| v.to_string()),
            r.stats.n1.to_string(),
            r.n2().map_or("−".into(), |v| v.to_string()),
            r.delta1.pretty(),
            r.delta2.as_ref().map_or("−".into(), DeltaPoly::pretty),
            reference,
        ]);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|j| cells.iter().map(|row| row[j].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &cells {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    for (i, n) in notes.iter().enumerate() {
        out.push_str(&format!("[{}] {n}\n", i + 1));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> DeltaPoly {
        s.parse().unwrap()
    }

    #[test]
    fn poly_parse_and_display() {
        assert_eq!(d("3d"), DeltaPoly::monomial(3, 1));
        assert_eq!(d("2δ²+2δ"), DeltaPoly::from_terms(vec![(2, 2), (2, 1)]));
        assert_eq!(d("2d^2 + 2d"), d("2δ²+2δ"));
        assert_eq!(d("d").to_string(), "d");
        assert_eq!(d("32d^4").pretty(), "32δ⁴");
        assert_eq!(d("2d^2+2d").to_string(), "2d^2+2d");
        assert!("2x".parse::<DeltaPoly>().is_err());
        assert!("".parse::<DeltaPoly>().is_err());
    }

    #[test]
    fn published_cells() {
        let p = PublishedValue::parse("28d^2, 40d^2").unwrap();
        assert_eq!(p.0.len(), 2);
        assert!(!p.matches(Some(&d("28d^2"))));
        assert!(PublishedValue::parse("-").unwrap().matches(None));
        assert!(PublishedValue::parse("3d").unwrap().matches(Some(&d("3d"))));
    }

    #[test]
    fn counting_examples() {
        let s = count_events(16, 2, 4).unwrap();
        assert_eq!((s.ns1, s.ns2), (12, 3));
        let s = count_events(120, 2, 3).unwrap();
        assert_eq!((s.ns1, s.ns2), (80, 39));
        let s = count_events(120, 4, 5).unwrap();
        assert_eq!((s.ns1, s.ns2), (48, 69));
        assert!(count_events(120, 1, 3).is_err());
        assert!(count_events(120, 4, 7).is_err());
        assert!(count_events(3, 4, 1).is_err());
    }

    #[test]
    fn brute_force_agrees_everywhere() {
        for l in 2..=200 {
            for s in 2..=6.min(l) {
                for n in (1..=l).filter(|n| l % n == 0) {
                    assert_eq!(count_events(l, s, n).unwrap(), brute_force_count(l, s, n).unwrap(), "L={l} S={s} N={n}");
                }
            }
        }
    }

    #[test]
    fn slow_fading_has_one_block_events() {
        let s = brute_force_count(120, 3, 120).unwrap();
        assert_eq!((s.ns1, s.ns2, s.n1), (118, 0, 1));
    }

    #[test]
    fn block_sum_examples() {
        assert_eq!(block_sums(&[1, 2], 0, 3), vec![3]);
        assert_eq!(block_sums(&[1, 2], 2, 3), vec![1, 2]);
        assert_eq!(block_sums(&[4, 1, 2, 4], 4, 5), vec![4, 7]);
    }

    #[test]
    fn delta_case_examples() {
        assert_eq!(delta_case(&[1, 2], 3, 1).unwrap(), d("3d"));
        assert_eq!(delta_case(&[1, 2], 3, 2).unwrap(), d("2d^2"));
        assert_eq!(delta_case(&[4, 1, 2, 4], 5, 2).unwrap(), d("28d^2"));
        assert_eq!(delta_case(&[4, 1, 2, 4], 1, 4).unwrap(), d("32d^4"));
        assert!(matches!(delta_case(&[4, 1, 2, 4], 3, 3), Err(Error::Unrealizable { .. })));
        assert!(delta_case(&[1, 0], 3, 1).is_err());
    }

    #[test]
    fn delta_case_reductions() {
        let seqs: [&[u64]; 4] = [&[1, 2], &[2, 1, 2], &[4, 1, 2], &[4, 1, 2, 4]];
        for seq in seqs {
            let s = seq.len();
            for n in s..=10 {
                assert_eq!(delta_case(seq, n, 1).unwrap(), DeltaPoly::monomial(seq.iter().sum(), 1));
            }
            assert_eq!(delta_case(seq, 1, s).unwrap(), DeltaPoly::monomial(seq.iter().product(), s as u32));
        }
    }

    #[test]
    fn delta_min_block_forms() {
        assert_eq!(delta_min_block(&[0; 12], 4), None);
        let mut steps = vec![0u64; 12];
        steps[6..9].copy_from_slice(&[2, 1, 2]);
        assert_eq!(delta_min_block(&steps, 12), Some(d("5d")));
        assert_eq!(delta_min_block(&steps, 1), Some(d("4d^3")));
        assert_eq!(delta_min_block(&steps, 4), Some(d("6d^2")));
        assert_eq!(delta_min_block(&steps, 3), Some(d("5d")));
    }

    #[test]
    fn pep_limits_and_slope() {
        let p = |c: f64| pep_term(0.6, 1, None, c).unwrap();
        assert!(p(1e6) < 1e-20);
        let slope = (p(1e5).log10() - p(1e4).log10()) / 2.0;
        assert!((slope + 2.0).abs() < 1e-3, "slope {slope}");
        // doubling delta at m = 1 divides the bound by 2^n_R
        let ratio = pep_term(1.2, 1, None, 1e4).unwrap() / p(1e4);
        assert!((ratio - 0.25).abs() < 1e-6);
        assert!(pep_term(0.0, 1, None, 1.0).is_err());
        assert!(pep_term(1.0, 1, None, 0.0).is_err());
    }

    #[test]
    fn pep_surrogate_matches_product_for_equal_blocks() {
        let a = [0.3, 0.3];
        let prod = pep_term(0.09, 2, Some(&a), 5.0).unwrap();
        let sur = pep_term(0.09, 2, None, 5.0).unwrap();
        assert!((prod / sur - 1.0).abs() < 1e-12);
    }

    #[test]
    fn truncated_ub_decreases() {
        let stats = count_events(120, 2, 3).unwrap();
        let seqs = vec![vec![1, 2]];
        let mut last = f64::INFINITY;
        for k in 0..40 {
            let c = 10f64.powf(-1.0 + k as f64 * 0.1);
            let v = truncated_ub(&stats, &seqs, c).unwrap();
            assert!(v < last);
            last = v;
        }
        let slow = count_events(120, 2, 120).unwrap();
        let one = truncated_ub(&slow, &seqs, 3.0).unwrap();
        assert!((one - 119.0 * pep_term(0.6, 1, None, 3.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn truncated_ub_slope_follows_dominant_term() {
        // N = 3: the one-block term dominates, slope 2 m n_R per decade of c
        let stats = count_events(120, 2, 3).unwrap();
        let seqs = vec![vec![1, 2]];
        let f = |c: f64| truncated_ub(&stats, &seqs, c).unwrap().log10();
        let slope = f(1e5) - f(1e4);
        assert!((slope + 4.0).abs() < 1e-3, "slope {slope}");
    }

    #[test]
    fn report_flags_disagreements() {
        let published = PublishedRow {
            ns1: Some(40),
            ns2: Some(78),
            n1: Some(1),
            n2: Some(2),
            delta1: PublishedValue::parse("5d").unwrap(),
            delta2: PublishedValue::parse("2d^2+2d").unwrap(),
        };
        let rows = report_tables(&[CaseSpec {
            states: 16,
            partition: "E8".into(),
            sequences: vec![vec![2, 1, 2]],
            frame_len: 120,
            n: 3,
            published: Some(published),
        }])
        .unwrap();
        let r = &rows[0];
        assert_eq!(r.delta2, Some(d("6d^2")));
        assert_eq!(r.counts_match(), Some(true));
        assert_eq!(r.matches_reference(), Some(false));
        assert_eq!(r.mismatches(), vec!["delta2: computed 6d^2 published 2d^2+2d".to_string()]);
        let csv = to_csv(&rows);
        assert!(csv.starts_with(CSV_HEADER));
        assert!(csv.contains("16,E8,3,3,1,2,40,78,5d,6d^2,no"));
        assert!(to_text(&rows).contains("published 2d^2+2d"));
    }
}
