//! Line-oriented configuration format.
//!
//! ```text
//! # comment
//! include partitions.cfg          # path relative to the including file
//!
//! [code e8_4]                     # section: kind and optional name
//! partition = E8                  # key = value
//! det_sequence = 1 2
//! begin trellis                   # table block: kind and optional arguments
//!   0/0 1/8 2/10 3/2              # one row per line, verbatim
//! end
//! ```
//!
//! Sections recognised by [`Library`]:
//!
//! * `[partition NAME]` with one `begin level FLOOR` block per chain level,
//!   coarsest first, holding the generator rows of the binary code.
//! * `[code NAME]` with keys `partition`, `states`, `input_bits`,
//!   `declared_s`, `rate`, `constellation`, `det_sequence` (one or more,
//!   `;`-separated, in delta units) and `boundary_aware`, and an optional
//!   `begin trellis` block of `next/label` pairs, one row per state.
//! * `[analysis]` with key `L` and a `begin table` block of rows
//!   `code N Ns1 Ns2 n1 n2 delta1 delta2` of published values; `-` marks an
//!   empty cell and alternatives are comma-separated without spaces.
//! * `[plan]` (see [`SimulationPlan`]).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use crate::analysis::{CaseSpec, PublishedRow, PublishedValue};
use crate::error::{Error, Result};
use crate::golden::QamConstellation;
use crate::lattice::{BinaryLinearCode, PartitionChain};
use crate::trellis::{GsttcmConfig, TrellisCode};

const MAX_INCLUDE_DEPTH: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub file: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub kind: String,
    pub args: Vec<String>,
    pub file: String,
    pub line: usize,
    pub rows: Vec<(usize, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub kind: String,
    pub name: Option<String>,
    pub file: String,
    pub line: usize,
    pub entries: Vec<Entry>,
    pub blocks: Vec<Block>,
}

impl Section {
    fn err(&self, field: &str, msg: impl Into<String>) -> Error {
        Error::config(&self.file, self.line, field, msg)
    }

    pub fn entry(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entry(key) {
            None => Ok(None),
            Some(e) => e.value.parse().map(Some).map_err(|_| {
                Error::config(&e.file, e.line, key, format!("cannot parse '{}'", e.value))
            }),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?.ok_or_else(|| self.err(key, "missing required key"))
    }

    /// Whitespace-separated list value.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.entry(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .split_whitespace()
                .map(|v| {
                    v.parse()
                        .map_err(|_| Error::config(&e.file, e.line, key, format!("cannot parse '{v}'")))
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    pub fn blocks_of<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a Block> {
        self.blocks.iter().filter(move |b| b.kind == kind)
    }

    fn title(&self) -> String {
        match &self.name {
            Some(n) => format!("{} {n}", self.kind),
            None => self.kind.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Document {
    pub sections: Vec<Section>,
}

impl Document {
    pub fn load(path: &Path) -> Result<Self> {
        let mut doc = Document::default();
        doc.load_into(path, 0)?;
        Ok(doc)
    }

    /// Parses text; `include` lines resolve against `base`.
    pub fn parse(text: &str, file: &str, base: &Path) -> Result<Self> {
        let mut doc = Document::default();
        doc.parse_into(text, file, base, 0)?;
        Ok(doc)
    }

    fn load_into(&mut self, path: &Path, depth: usize) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        self.parse_into(&text, &path.display().to_string(), &base, depth)
    }

    fn parse_into(&mut self, text: &str, file: &str, base: &Path, depth: usize) -> Result<()> {
        let mut block: Option<Block> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(b) = block.as_mut() {
                if content == "end" {
                    let b = block.take().expect("inside block");
                    self.sections.last_mut().expect("block opened inside a section").blocks.push(b);
                } else {
                    b.rows.push((line, content.to_string()));
                }
                continue;
            }
            let mut words = content.split_whitespace();
            let head = words.next().expect("nonempty line");
            if head == "include" {
                let rel: String = words.collect::<Vec<_>>().join(" ");
                if rel.is_empty() {
                    return Err(Error::config(file, line, "include", "missing path"));
                }
                if depth >= MAX_INCLUDE_DEPTH {
                    return Err(Error::config(file, line, "include", "includes nested too deeply"));
                }
                let path: PathBuf = base.join(rel);
                self.load_into(&path, depth + 1)
                    .map_err(|e| match e {
                        Error::Io(msg) => Error::config(file, line, "include", msg),
                        other => other,
                    })?;
            } else if head.starts_with('[') {
                let inner = content
                    .strip_prefix('[')
                    .and_then(|c| c.strip_suffix(']'))
                    .ok_or_else(|| Error::config(file, line, "section", "unterminated section header"))?;
                let mut parts = inner.split_whitespace();
                let kind = parts
                    .next()
                    .ok_or_else(|| Error::config(file, line, "section", "empty section header"))?;
                let name = parts.next().map(str::to_string);
                if parts.next().is_some() {
                    return Err(Error::config(file, line, "section", "expected [kind] or [kind name]"));
                }
                self.sections.push(Section {
                    kind: kind.to_string(),
                    name,
                    file: file.to_string(),
                    line,
                    entries: Vec::new(),
                    blocks: Vec::new(),
                });
            } else if head == "begin" {
                if self.sections.is_empty() {
                    return Err(Error::config(file, line, "begin", "block outside any section"));
                }
                let kind = words
                    .next()
                    .ok_or_else(|| Error::config(file, line, "begin", "missing block kind"))?;
                block = Some(Block {
                    kind: kind.to_string(),
                    args: words.map(str::to_string).collect(),
                    file: file.to_string(),
                    line,
                    rows: Vec::new(),
                });
            } else if let Some((key, value)) = content.split_once('=') {
                let key = key.trim();
                if key.is_empty() || key.contains(char::is_whitespace) {
                    return Err(Error::config(file, line, key, "malformed key"));
                }
                let section = self
                    .sections
                    .last_mut()
                    .ok_or_else(|| Error::config(file, line, key, "key outside any section"))?;
                if section.entries.iter().any(|e| e.key == key) {
                    return Err(Error::config(file, line, key, "duplicate key"));
                }
                section.entries.push(Entry {
                    key: key.to_string(),
                    value: value.trim().to_string(),
                    file: file.to_string(),
                    line,
                });
            } else {
                return Err(Error::config(file, line, head, "expected 'key = value', a section header or a block"));
            }
        }
        if let Some(b) = block {
            return Err(Error::config(file, b.line, &b.kind, "block not closed with 'end'"));
        }
        Ok(())
    }

    pub fn sections_of<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a Section> {
        self.sections.iter().filter(move |s| s.kind == kind)
    }
}

/// A code entry; trellis tables are optional for analysis-only use.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeSpec {
    pub name: String,
    pub partition: String,
    pub states: usize,
    pub input_bits: u32,
    pub declared_s: usize,
    pub rate: Option<f64>,
    pub constellation: u32,
    pub det_sequences: Vec<Vec<u64>>,
    pub boundary_aware: bool,
    pub trellis: Option<TrellisCode>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisRowSpec {
    pub code: String,
    pub n: usize,
    pub published: Option<PublishedRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSpec {
    pub frame_len: usize,
    pub rows: Vec<AnalysisRowSpec>,
}

/// Partitions, codes and the analysis grid of a configuration file.
#[derive(Debug, Clone, Default)]
pub struct Library {
    pub partitions: BTreeMap<String, Arc<PartitionChain>>,
    pub codes: BTreeMap<String, CodeSpec>,
    pub analysis: Option<AnalysisSpec>,
}

fn row_err(block: &Block, line: usize, msg: impl Into<String>) -> Error {
    Error::config(&block.file, line, &block.kind, msg)
}

fn parse_partition(section: &Section) -> Result<PartitionChain> {
    let name = section.name.clone().ok_or_else(|| section.err("partition", "missing name"))?;
    let mut levels = Vec::new();
    for block in section.blocks_of("level") {
        let floor: u64 = block
            .args
            .first()
            .and_then(|a| a.parse().ok())
            .ok_or_else(|| row_err(block, block.line, "expected 'begin level FLOOR'"))?;
        let rows: Vec<&str> = block.rows.iter().map(|(_, r)| r.as_str()).collect();
        let code = BinaryLinearCode::from_strings(&rows)
            .map_err(|e| row_err(block, block.line, e.to_string()))?;
        levels.push((code, floor));
    }
    if levels.is_empty() {
        return Err(section.err("level", "partition needs at least one level block"));
    }
    PartitionChain::new(name, levels).map_err(|e| section.err("level", e.to_string()))
}

fn parse_trellis(block: &Block, states: usize, input_bits: u32, label_bits: u32, declared_s: usize) -> Result<TrellisCode> {
    let inputs = 1usize << input_bits;
    if block.rows.len() != states {
        return Err(row_err(block, block.line, format!("expected {states} rows, found {}", block.rows.len())));
    }
    let mut next = Vec::with_capacity(states * inputs);
    let mut label = Vec::with_capacity(states * inputs);
    for (line, row) in &block.rows {
        let pairs: Vec<&str> = row.split_whitespace().collect();
        if pairs.len() != inputs {
            return Err(row_err(block, *line, format!("expected {inputs} next/label pairs")));
        }
        for p in pairs {
            let (n, l) = p
                .split_once('/')
                .and_then(|(n, l)| Some((n.parse::<u32>().ok()?, l.parse::<u32>().ok()?)))
                .ok_or_else(|| row_err(block, *line, format!("malformed pair '{p}'")))?;
            next.push(n);
            label.push(l);
        }
    }
    TrellisCode::from_tables(states, input_bits, label_bits, next, label, declared_s)
        .map_err(|e| row_err(block, block.line, e.to_string()))
}

fn parse_sequences(section: &Section) -> Result<Vec<Vec<u64>>> {
    let Some(e) = section.entry("det_sequence") else {
        return Ok(Vec::new());
    };
    let bad = |msg: &str| Error::config(&e.file, e.line, "det_sequence", msg);
    let seqs = e
        .value
        .split(';')
        .map(|part| {
            part.split_whitespace()
                .map(|v| v.parse::<u64>().map_err(|_| bad("expected integers in delta units")))
                .collect::<Result<Vec<u64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    if seqs.iter().any(|s| s.is_empty() || s.contains(&0)) {
        return Err(bad("sequences must be nonempty and positive"));
    }
    if seqs.iter().any(|s| s.len() != seqs[0].len()) {
        return Err(bad("all sequences of one code must have the same length"));
    }
    Ok(seqs)
}

fn parse_code(section: &Section, partitions: &BTreeMap<String, Arc<PartitionChain>>) -> Result<CodeSpec> {
    let name = section.name.clone().ok_or_else(|| section.err("code", "missing name"))?;
    let partition: String = section.require("partition")?;
    let chain = partitions
        .get(&partition)
        .ok_or_else(|| section.err("partition", format!("unknown partition '{partition}'")))?;
    let states: usize = section.require("states")?;
    let input_bits: u32 = section.get("input_bits")?.unwrap_or(2);
    let det_sequences = parse_sequences(section)?;
    let declared_s: usize = match section.get("declared_s")? {
        Some(s) => s,
        None => det_sequences
            .first()
            .map(Vec::len)
            .ok_or_else(|| section.err("declared_s", "missing and no det_sequence to infer it from"))?,
    };
    if det_sequences.first().is_some_and(|s| s.len() != declared_s) {
        return Err(section.err("det_sequence", format!("length differs from declared_s = {declared_s}")));
    }
    let constellation: u32 = section.get("constellation")?.unwrap_or(16);
    QamConstellation::square(constellation).map_err(|e| section.err("constellation", e.to_string()))?;
    let mut trellis_blocks = section.blocks_of("trellis");
    let trellis = match trellis_blocks.next() {
        Some(b) => Some(parse_trellis(b, states, input_bits, chain.label_bits(), declared_s)?),
        None => None,
    };
    if trellis_blocks.next().is_some() {
        return Err(section.err("trellis", "more than one trellis block"));
    }
    Ok(CodeSpec {
        name,
        partition,
        states,
        input_bits,
        declared_s,
        rate: section.get("rate")?,
        constellation,
        det_sequences,
        boundary_aware: section.get("boundary_aware")?.unwrap_or(false),
        trellis,
    })
}

fn parse_count(block: &Block, line: usize, v: &str) -> Result<Option<usize>> {
    if v == "-" {
        return Ok(None);
    }
    v.parse()
        .map(Some)
        .map_err(|_| row_err(block, line, format!("expected an integer or '-', found '{v}'")))
}

fn parse_analysis(section: &Section, codes: &BTreeMap<String, CodeSpec>) -> Result<AnalysisSpec> {
    let frame_len: usize = section.require("L")?;
    let mut rows = Vec::new();
    for block in section.blocks_of("table") {
        for (line, row) in &block.rows {
            let cols: Vec<&str> = row.split_whitespace().collect();
            if cols.len() != 2 && cols.len() != 8 {
                return Err(row_err(
                    block,
                    *line,
                    "expected 'code N' or 'code N Ns1 Ns2 n1 n2 delta1 delta2'",
                ));
            }
            let code = cols[0].to_string();
            let spec = codes
                .get(&code)
                .ok_or_else(|| row_err(block, *line, format!("unknown code '{code}'")))?;
            if spec.det_sequences.is_empty() {
                return Err(row_err(block, *line, format!("code '{code}' has no det_sequence")));
            }
            let n: usize = cols[1]
                .parse()
                .map_err(|_| row_err(block, *line, format!("bad N '{}'", cols[1])))?;
            if n == 0 || frame_len % n != 0 {
                return Err(row_err(block, *line, format!("N={n} does not divide L={frame_len}")));
            }
            let published = if cols.len() == 8 {
                let cell = |v: &str| {
                    PublishedValue::parse(v)
                        .map_err(|e| row_err(block, *line, e.to_string()))
                };
                Some(PublishedRow {
                    ns1: parse_count(block, *line, cols[2])?,
                    ns2: parse_count(block, *line, cols[3])?,
                    n1: parse_count(block, *line, cols[4])?,
                    n2: parse_count(block, *line, cols[5])?,
                    delta1: cell(cols[6])?,
                    delta2: cell(cols[7])?,
                })
            } else {
                None
            };
            rows.push(AnalysisRowSpec { code, n, published });
        }
    }
    Ok(AnalysisSpec { frame_len, rows })
}

impl Library {
    pub fn load(path: &Path) -> Result<Self> {
        Self::from_document(&Document::load(path)?)
    }

    pub fn from_document(doc: &Document) -> Result<Self> {
        let mut lib = Library::default();
        for s in doc.sections_of("partition") {
            let chain = parse_partition(s)?;
            if lib.partitions.insert(chain.name().to_string(), Arc::new(chain)).is_some() {
                return Err(s.err("partition", format!("duplicate section [{}]", s.title())));
            }
        }
        for s in doc.sections_of("code") {
            let code = parse_code(s, &lib.partitions)?;
            if lib.codes.insert(code.name.clone(), code).is_some() {
                return Err(s.err("code", format!("duplicate section [{}]", s.title())));
            }
        }
        let mut analyses = doc.sections_of("analysis");
        if let Some(s) = analyses.next() {
            lib.analysis = Some(parse_analysis(s, &lib.codes)?);
            if let Some(extra) = analyses.next() {
                return Err(extra.err("analysis", "more than one [analysis] section"));
            }
        }
        for s in &doc.sections {
            if !matches!(s.kind.as_str(), "partition" | "code" | "analysis" | "plan") {
                return Err(s.err("section", format!("unknown section kind '{}'", s.kind)));
            }
        }
        Ok(lib)
    }

    pub fn code(&self, name: &str) -> Result<&CodeSpec> {
        self.codes
            .get(name)
            .ok_or_else(|| Error::invalid(format!("unknown code '{name}'")))
    }

    /// Runnable configuration for a code with trellis tables.
    pub fn gsttcm(&self, name: &str, frame_len: usize) -> Result<GsttcmConfig> {
        let spec = self.code(name)?;
        let trellis = spec
            .trellis
            .clone()
            .ok_or_else(|| Error::invalid(format!("code '{name}' has no trellis block")))?;
        let chain = self.partitions[&spec.partition].clone();
        let mut cfg = GsttcmConfig::new(
            name,
            trellis,
            chain,
            QamConstellation::square(spec.constellation)?,
            frame_len,
        )?;
        cfg.boundary_aware = spec.boundary_aware;
        Ok(cfg)
    }

    /// Analysis grid with det sequences taken from the code entries.
    pub fn analysis_cases(&self) -> Result<Vec<CaseSpec>> {
        let spec = self
            .analysis
            .as_ref()
            .ok_or_else(|| Error::invalid("configuration has no [analysis] section"))?;
        spec.rows
            .iter()
            .map(|row| {
                let code = self.code(&row.code)?;
                Ok(CaseSpec {
                    states: code.states,
                    partition: code.partition.clone(),
                    sequences: code.det_sequences.clone(),
                    frame_len: spec.frame_len,
                    n: row.n,
                    published: row.published.clone(),
                })
            })
            .collect()
    }
}

/// Monte Carlo campaign over fading block lengths and SNR values.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationPlan {
    pub code: String,
    pub frame_len: usize,
    pub block_lens: Vec<usize>,
    pub snr_b_db: Vec<f64>,
    pub seed: u64,
    pub min_errors: u64,
    pub max_frames: u64,
    /// Multiplies the noise variance; 0 gives a noiseless debugging run.
    pub noise_scale: f64,
    pub output: Option<String>,
}

impl SimulationPlan {
    pub fn load(path: &Path) -> Result<Self> {
        Self::from_document(&Document::load(path)?)
    }

    pub fn from_document(doc: &Document) -> Result<Self> {
        let mut plans = doc.sections_of("plan");
        let s = plans
            .next()
            .ok_or_else(|| Error::config("<plan>", 0, "plan", "no [plan] section"))?;
        if let Some(extra) = plans.next() {
            return Err(extra.err("plan", "more than one [plan] section"));
        }
        let frame_len: usize = s.get("L")?.unwrap_or(120);
        let block_lens: Vec<usize> = s.list("N")?.ok_or_else(|| s.err("N", "missing required key"))?;
        let snr_b_db: Vec<f64> = s
            .list("snr_b_db")?
            .ok_or_else(|| s.err("snr_b_db", "missing required key"))?;
        let plan = SimulationPlan {
            code: s.require("code")?,
            frame_len,
            block_lens,
            snr_b_db,
            seed: s.get("seed")?.unwrap_or(1),
            min_errors: s.get("min_errors")?.unwrap_or(100),
            max_frames: s.get("max_frames")?.unwrap_or(200_000),
            noise_scale: s.get("noise_scale")?.unwrap_or(1.0),
            output: s.get("output")?,
        };
        if plan.block_lens.is_empty() || plan.block_lens.iter().any(|&n| n == 0 || frame_len % n != 0) {
            return Err(s.err("N", format!("every N must divide L = {frame_len}")));
        }
        if plan.snr_b_db.is_empty() || plan.snr_b_db.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(s.err("snr_b_db", "SNR grid must be nonempty and strictly increasing"));
        }
        if plan.min_errors == 0 {
            return Err(s.err("min_errors", "must be at least 1"));
        }
        if plan.max_frames == 0 {
            return Err(s.err("max_frames", "must be at least 1"));
        }
        if !(plan.noise_scale >= 0.0) {
            return Err(s.err("noise_scale", "must be nonnegative"));
        }
        Ok(plan)
    }
}
