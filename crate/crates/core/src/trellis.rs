//! GST-TCM outer trellis code: encoding, Viterbi decoding with per-coset
//! closest-point branch metrics, and simple error event enumeration.
//!
//! Each trellis section consumes `input_bits` bits that drive the state
//! machine and emit a coset label of the partition chain, then a further
//! `uncoded_bits` bits that pick one point of that coset inside the QAM
//! shaping region (lexicographic order of the integer points). The last
//! `tail_len` sections carry no trellis input: they follow the termination
//! inputs back to state 0.

use std::sync::Arc;

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::golden::{encode_real, generator_matrix, GoldenCodeword, Matrix8, Point8, QamConstellation, Vector8, C64};
use crate::lattice::{PartitionChain, SphereDecoder};

/// Finite-state machine emitting coset labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TrellisCode {
    num_states: usize,
    input_bits: u32,
    label_bits: u32,
    next: Vec<u32>,
    label: Vec<u32>,
    declared_s: usize,
    tail_input: Vec<u32>,
    tail_len: usize,
}

impl TrellisCode {
    /// Builds a code from `(state, input)`-indexed tables, row-major by state.
    pub fn from_tables(
        num_states: usize,
        input_bits: u32,
        label_bits: u32,
        next: Vec<u32>,
        label: Vec<u32>,
        declared_s: usize,
    ) -> Result<Self> {
        if num_states < 2 || !num_states.is_power_of_two() {
            return Err(Error::invalid(format!("state count {num_states} is not a power of two >= 2")));
        }
        if input_bits == 0 || input_bits > 8 {
            return Err(Error::invalid(format!("unsupported input width {input_bits}")));
        }
        if label_bits == 0 || label_bits > 8 {
            return Err(Error::invalid(format!("unsupported label width {label_bits}")));
        }
        let inputs = 1usize << input_bits;
        let size = num_states * inputs;
        if next.len() != size || label.len() != size {
            return Err(Error::invalid(format!(
                "trellis tables need {size} entries, got {} next / {} label",
                next.len(),
                label.len()
            )));
        }
        if let Some(s) = next.iter().find(|&&s| s as usize >= num_states) {
            return Err(Error::invalid(format!("next state {s} out of range")));
        }
        if let Some(l) = label.iter().find(|&&l| l >> label_bits != 0) {
            return Err(Error::invalid(format!("label {l} does not fit in {label_bits} bits")));
        }
        if declared_s == 0 {
            return Err(Error::invalid("declared shortest event length must be positive"));
        }
        let log_states = num_states.trailing_zeros() as usize;
        let tail_len = log_states.div_ceil(input_bits as usize);

        // distance to state 0 by backward BFS
        let mut dist = vec![usize::MAX; num_states];
        let mut tail_input = vec![u32::MAX; num_states];
        dist[0] = 0;
        if let Some(u) = (0..inputs).find(|&u| next[u] == 0) {
            tail_input[0] = u as u32;
        }
        let mut frontier = vec![0usize];
        let mut depth = 0;
        while !frontier.is_empty() {
            depth += 1;
            let mut grown = Vec::new();
            for s in 0..num_states {
                if dist[s] != usize::MAX {
                    continue;
                }
                if let Some(u) = (0..inputs).find(|&u| frontier.contains(&(next[s * inputs + u] as usize))) {
                    dist[s] = depth;
                    tail_input[s] = u as u32;
                    grown.push(s);
                }
            }
            frontier = grown;
        }
        if tail_input[0] == u32::MAX {
            return Err(Error::invalid("state 0 has no self-loop for termination"));
        }
        if let Some(s) = (0..num_states).find(|&s| dist[s] > tail_len) {
            return Err(Error::invalid(format!(
                "state {s} cannot return to state 0 within {tail_len} sections"
            )));
        }
        Ok(Self {
            num_states,
            input_bits,
            label_bits,
            next,
            label,
            declared_s,
            tail_input,
            tail_len,
        })
    }

    /// Feedforward code with memory `taps.len() - 1`.
    ///
    /// `taps[j][i]` is the label contribution of input bit `i` delayed by `j`
    /// sections (bit 0 is the least significant input bit). The state packs
    /// the previous inputs, most recent in the low bits.
    pub fn feedforward(input_bits: u32, label_bits: u32, taps: &[Vec<u32>]) -> Result<Self> {
        if taps.len() < 2 || taps.iter().any(|t| t.len() != input_bits as usize) {
            return Err(Error::invalid("feedforward code needs memory >= 1 and one tap per input bit"));
        }
        let memory = taps.len() - 1;
        let k = input_bits as usize;
        let state_bits = k * memory;
        let num_states = 1usize << state_bits;
        let inputs = 1usize << k;
        let mask = num_states - 1;
        let apply = |tap: &[u32], u: usize| {
            (0..k).filter(|i| u >> i & 1 == 1).fold(0u32, |acc, i| acc ^ tap[i])
        };
        let mut next = Vec::with_capacity(num_states * inputs);
        let mut label = Vec::with_capacity(num_states * inputs);
        for s in 0..num_states {
            for u in 0..inputs {
                next.push((((s << k) | u) & mask) as u32);
                let mut l = apply(&taps[0], u);
                for j in 1..=memory {
                    l ^= apply(&taps[j], (s >> (k * (j - 1))) & (inputs - 1));
                }
                label.push(l);
            }
        }
        Self::from_tables(num_states, input_bits, label_bits, next, label, memory + 1)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn input_bits(&self) -> u32 {
        self.input_bits
    }

    pub fn num_inputs(&self) -> usize {
        1 << self.input_bits
    }

    pub fn label_bits(&self) -> u32 {
        self.label_bits
    }

    pub fn declared_s(&self) -> usize {
        self.declared_s
    }

    pub fn tail_len(&self) -> usize {
        self.tail_len
    }

    pub fn tail_input(&self, state: usize) -> u32 {
        self.tail_input[state]
    }

    #[inline]
    pub fn next(&self, state: usize, input: u32) -> usize {
        self.next[state * self.num_inputs() + input as usize] as usize
    }

    #[inline]
    pub fn label(&self, state: usize, input: u32) -> u32 {
        self.label[state * self.num_inputs() + input as usize]
    }

    pub fn next_table(&self) -> &[u32] {
        &self.next
    }

    pub fn label_table(&self) -> &[u32] {
        &self.label
    }

    pub fn all_states_reachable(&self) -> bool {
        let mut seen = vec![false; self.num_states];
        seen[0] = true;
        let mut stack = vec![0usize];
        while let Some(s) = stack.pop() {
            for u in 0..self.num_inputs() as u32 {
                let n = self.next(s, u);
                if !seen[n] {
                    seen[n] = true;
                    stack.push(n);
                }
            }
        }
        seen.into_iter().all(|x| x)
    }

    /// Whether next-state and label maps are GF(2)-linear in `(state, input)`.
    pub fn is_linear(&self) -> bool {
        let inputs = self.num_inputs();
        if self.next(0, 0) != 0 || self.label(0, 0) != 0 {
            return false;
        }
        for s1 in 0..self.num_states {
            for u1 in 0..inputs as u32 {
                for s2 in 0..self.num_states {
                    for u2 in 0..inputs as u32 {
                        let s = s1 ^ s2;
                        let u = u1 ^ u2;
                        if self.next(s, u) != self.next(s1, u1) ^ self.next(s2, u2)
                            || self.label(s, u) != self.label(s1, u1) ^ self.label(s2, u2)
                        {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

/// Per-coset lists of shaping-region points and the inverse index.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapingMap {
    side: i64,
    lo: i64,
    coset_points: Vec<Vec<Point8>>,
    index_of: Vec<u32>,
    label_of_residue: Vec<u32>,
    /// `compat[k][r >> k]`: labels whose cosets contain a residue with the
    /// given bits `k..8`.
    compat: Vec<Vec<u64>>,
}

impl ShapingMap {
    pub fn new(chain: &PartitionChain, constellation: &QamConstellation) -> Result<Self> {
        let (lo, hi) = constellation.integer_range();
        let side = hi - lo + 1;
        let total = (side as usize).pow(8);
        if total > 1 << 20 {
            return Err(Error::invalid(format!(
                "{}-QAM shaping region is too large for table-based point indexing",
                constellation.order()
            )));
        }
        let mut coset_points = vec![Vec::new(); chain.num_labels()];
        let mut index_of = vec![0u32; total];
        for code in 0..total {
            let mut x = [0i64; 8];
            let mut c = code;
            for i in (0..8).rev() {
                x[i] = lo + (c % side as usize) as i64;
                c /= side as usize;
            }
            let l = chain.coset_label(&x) as usize;
            index_of[code] = coset_points[l].len() as u32;
            coset_points[l].push(x);
        }
        let size = coset_points[0].len();
        if coset_points.iter().any(|c| c.len() != size) || !size.is_power_of_two() {
            return Err(Error::invalid("shaping region does not split evenly into cosets"));
        }
        if chain.num_labels() > 64 {
            return Err(Error::invalid("at most 64 coset labels are supported"));
        }
        let label_of_residue: Vec<u32> = (0..=255u8).map(|r| chain.label_of_residue(r)).collect();
        let mut compat: Vec<Vec<u64>> = (0..=8).map(|k| vec![0u64; 1 << (8 - k)]).collect();
        for (r, &l) in label_of_residue.iter().enumerate() {
            for (k, table) in compat.iter_mut().enumerate() {
                table[r >> k] |= 1 << l;
            }
        }
        Ok(Self {
            side,
            lo,
            coset_points,
            index_of,
            label_of_residue,
            compat,
        })
    }

    pub fn coset_size(&self) -> usize {
        self.coset_points[0].len()
    }

    pub fn points(&self, label: u32) -> &[Point8] {
        &self.coset_points[label as usize]
    }

    pub fn point(&self, label: u32, index: usize) -> Point8 {
        self.coset_points[label as usize][index]
    }

    pub fn contains(&self, x: &Point8) -> bool {
        x.iter().all(|&c| c >= self.lo && c < self.lo + self.side)
    }

    /// Position of `x` in its coset list, or `None` outside the region.
    pub fn index(&self, x: &Point8) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let code = x
            .iter()
            .fold(0usize, |acc, &c| acc * self.side as usize + (c - self.lo) as usize);
        Some(self.index_of[code] as usize)
    }
}

/// A complete GST-TCM configuration.
#[derive(Debug, Clone)]
pub struct GsttcmConfig {
    pub name: String,
    pub trellis: TrellisCode,
    pub chain: Arc<PartitionChain>,
    pub constellation: QamConstellation,
    pub frame_len: usize,
    /// Restrict branch metrics to points inside the shaping region.
    pub boundary_aware: bool,
    shaping: Arc<ShapingMap>,
}

impl GsttcmConfig {
    pub fn new(
        name: impl Into<String>,
        trellis: TrellisCode,
        chain: Arc<PartitionChain>,
        constellation: QamConstellation,
        frame_len: usize,
    ) -> Result<Self> {
        if trellis.label_bits() != chain.label_bits() {
            return Err(Error::invalid(format!(
                "trellis emits {}-bit labels but the partition has {} label bits",
                trellis.label_bits(),
                chain.label_bits()
            )));
        }
        if frame_len <= trellis.tail_len() {
            return Err(Error::invalid(format!(
                "frame length {frame_len} does not exceed the {}-section tail",
                trellis.tail_len()
            )));
        }
        let shaping = Arc::new(ShapingMap::new(&chain, &constellation)?);
        Ok(Self {
            name: name.into(),
            trellis,
            chain,
            constellation,
            frame_len,
            boundary_aware: false,
            shaping,
        })
    }

    pub fn shaping(&self) -> &ShapingMap {
        &self.shaping
    }

    /// Bits selecting a point inside a coset.
    pub fn uncoded_bits(&self) -> u32 {
        4 * self.constellation.bits_per_symbol() - self.chain.label_bits()
    }

    /// Nominal bits per channel use, ignoring the termination tail.
    pub fn rate(&self) -> f64 {
        (self.trellis.input_bits() + self.uncoded_bits()) as f64 / 2.0
    }

    pub fn info_bits(&self) -> usize {
        let l = self.frame_len;
        l * self.uncoded_bits() as usize + (l - self.trellis.tail_len()) * self.trellis.input_bits() as usize
    }

    /// Label of the branch taken from `state` on `input`.
    fn section_input(&self, t: usize, state: usize, bits: &mut impl Iterator<Item = u8>) -> u32 {
        if t < self.frame_len - self.trellis.tail_len() {
            take_bits(bits, self.trellis.input_bits())
        } else {
            self.trellis.tail_input(state)
        }
    }
}

fn take_bits(bits: &mut impl Iterator<Item = u8>, n: u32) -> u32 {
    (0..n).fold(0u32, |acc, _| (acc << 1) | bits.next().unwrap_or(0) as u32)
}

fn push_bits(out: &mut Vec<u8>, value: u32, n: u32) {
    for i in (0..n).rev() {
        out.push((value >> i & 1) as u8);
    }
}

/// Transmitted frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CodewordSequence {
    pub points: Vec<Point8>,
    pub labels: Vec<u32>,
    pub codewords: Vec<GoldenCodeword>,
    pub terminated: bool,
}

impl CodewordSequence {
    pub fn matrices(&self) -> Vec<Matrix2<C64>> {
        self.codewords.iter().map(|c| c.matrix).collect()
    }
}

pub fn symbols_of(x: &Point8) -> [f64; 8] {
    x.map(|c| c as f64 + 0.5)
}

pub fn encode_gsttcm(bits: &[u8], cfg: &GsttcmConfig) -> Result<CodewordSequence> {
    if bits.len() != cfg.info_bits() {
        return Err(Error::LengthMismatch {
            expected: cfg.info_bits(),
            got: bits.len(),
        });
    }
    let mut it = bits.iter().copied();
    let mut state = 0usize;
    let mut seq = CodewordSequence {
        points: Vec::with_capacity(cfg.frame_len),
        labels: Vec::with_capacity(cfg.frame_len),
        codewords: Vec::with_capacity(cfg.frame_len),
        terminated: false,
    };
    for t in 0..cfg.frame_len {
        let u = cfg.section_input(t, state, &mut it);
        let label = cfg.trellis.label(state, u);
        state = cfg.trellis.next(state, u);
        let index = take_bits(&mut it, cfg.uncoded_bits()) as usize;
        let x = cfg.shaping.point(label, index);
        seq.points.push(x);
        seq.labels.push(label);
        seq.codewords.push(encode_real(&symbols_of(&x)));
    }
    seq.terminated = state == 0;
    Ok(seq)
}

/// Real 8x8 map `vec(H X) = M s` for the real symbol vector `s`.
pub fn channel_map(h: &Matrix2<C64>) -> Matrix8 {
    let mut hr = nalgebra::Matrix4::<f64>::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let z = h[(i, j)];
            hr[(2 * i, 2 * j)] = z.re;
            hr[(2 * i, 2 * j + 1)] = -z.im;
            hr[(2 * i + 1, 2 * j)] = z.im;
            hr[(2 * i + 1, 2 * j + 1)] = z.re;
        }
    }
    let mut block = Matrix8::zeros();
    block.fixed_view_mut::<4, 4>(0, 0).copy_from(&hr);
    block.fixed_view_mut::<4, 4>(4, 4).copy_from(&hr);
    block * generator_matrix().matrix
}

fn vec_of(y: &Matrix2<C64>) -> Vector8 {
    crate::golden::vectorize(y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchMetric {
    pub metric: f64,
    pub point: Point8,
}

/// Closest shaping-region point of every coset in one depth-first search.
///
/// Schnorr-Euchner enumeration over the integer box of the region in the
/// triangular coordinates of the channel map. A node is pruned once its
/// partial distance exceeds the current best of every label still reachable
/// from its residue bits.
fn region_search(r: &[[f64; 8]; 8], z: &[f64; 8], shaping: &ShapingMap, best: &mut [BranchMetric]) {
    struct Ctx<'a> {
        r: &'a [[f64; 8]; 8],
        z: &'a [f64; 8],
        shaping: &'a ShapingMap,
        x: [i64; 8],
        full: u64,
        /// Largest best metric over all labels.
        global: f64,
    }
    fn worst(ctx: &Ctx<'_>, best: &[BranchMetric], mask: u64) -> f64 {
        if mask == ctx.full {
            return ctx.global;
        }
        let mut m = 0.0f64;
        let mut bits = mask;
        while bits != 0 {
            let l = bits.trailing_zeros() as usize;
            m = m.max(best[l].metric);
            bits &= bits - 1;
        }
        m
    }
    fn rec(ctx: &mut Ctx<'_>, k: usize, partial: f64, res: usize, best: &mut [BranchMetric]) {
        let r = ctx.r;
        let mut s = ctx.z[k];
        for j in k + 1..8 {
            s -= r[k][j] * (ctx.x[j] as f64 + 0.5);
        }
        let c = s / r[k][k] - 0.5;
        let lo = ctx.shaping.lo;
        let n = ctx.shaping.side as usize;
        let mut cand: [i64; 8] = [0; 8];
        for (i, slot) in cand[..n].iter_mut().enumerate() {
            *slot = lo + i as i64;
        }
        cand[..n].sort_unstable_by(|a, b| (*a as f64 - c).abs().total_cmp(&(*b as f64 - c).abs()));
        let all = ctx.shaping.compat[k + 1][res >> (k + 1)];
        let mut bound = worst(ctx, best, all);
        for &v in &cand[..n] {
            let e = r[k][k] * (c - v as f64);
            let d = partial + e * e;
            if d >= bound {
                break;
            }
            let res = res | (((v & 1) as usize) << k);
            ctx.x[k] = v;
            if k == 0 {
                let l = ctx.shaping.label_of_residue[res] as usize;
                if d < best[l].metric {
                    best[l] = BranchMetric { metric: d, point: ctx.x };
                    ctx.global = best.iter().fold(0.0, |m, b| m.max(b.metric));
                    bound = worst(ctx, best, all);
                }
            } else if d < worst(ctx, best, ctx.shaping.compat[k][res >> k]) {
                rec(ctx, k - 1, d, res, best);
                bound = worst(ctx, best, all);
            }
        }
    }
    for b in best.iter_mut() {
        b.metric = f64::INFINITY;
    }
    let full = shaping.compat[8][0];
    let mut ctx = Ctx {
        r,
        z,
        shaping,
        x: [0; 8],
        full,
        global: f64::INFINITY,
    };
    rec(&mut ctx, 7, 0.0, 0, best);
}

/// Per-channel-matrix state shared by all sections of a fading block.
enum BlockMetrics {
    /// Unconstrained closest point in each coset of the deepest lattice;
    /// `shifts` holds `Q^T M (rep + 1/2)` per label.
    Lattice { dec: SphereDecoder, shifts: Vec<[f64; 8]> },
    /// Box-constrained search of the shaping region.
    Region { dec: SphereDecoder },
    /// `M (x + 1/2)` for every shaping point, per label.
    Exhaustive { images: Vec<Vec<Vector8>> },
}

impl BlockMetrics {
    fn new(h: &Matrix2<C64>, cfg: &GsttcmConfig, lattice_basis: &Matrix8) -> Self {
        let map = channel_map(h);
        if cfg.boundary_aware {
            if let Ok(dec) = SphereDecoder::new(&map) {
                return Self::Region { dec };
            }
        } else if let Ok(dec) = SphereDecoder::new(&(map * lattice_basis)) {
            let shifts = (0..cfg.chain.num_labels() as u32)
                .map(|l| {
                    let rep = Vector8::from_fn(|i, _| cfg.chain.coset_rep(l)[i] as f64 + 0.5);
                    dec.rotate(&(map * rep))
                })
                .collect();
            return Self::Lattice { dec, shifts };
        }
        let images = (0..cfg.chain.num_labels() as u32)
            .map(|l| {
                cfg.shaping
                    .points(l)
                    .iter()
                    .map(|x| map * Vector8::from_fn(|i, _| x[i] as f64 + 0.5))
                    .collect()
            })
            .collect();
        Self::Exhaustive { images }
    }

    fn metrics(&self, y: &Vector8, cfg: &GsttcmConfig, out: &mut [BranchMetric]) {
        match self {
            Self::Lattice { dec, shifts } => {
                let zy = dec.rotate(y);
                let basis = cfg.chain.deepest().basis();
                for (l, slot) in out.iter_mut().enumerate() {
                    let shift = &shifts[l];
                    let z: [f64; 8] = std::array::from_fn(|i| zy[i] - shift[i]);
                    let (u, d) = dec.search(&z);
                    let mut x = *cfg.chain.coset_rep(l as u32);
                    for (j, &c) in u.iter().enumerate() {
                        if c != 0 {
                            for i in 0..8 {
                                x[i] += c * basis[j][i];
                            }
                        }
                    }
                    *slot = BranchMetric { metric: d, point: x };
                }
            }
            Self::Region { dec } => region_search(dec.r(), &dec.rotate(y), &cfg.shaping, out),
            Self::Exhaustive { images } => {
                for (l, slot) in out.iter_mut().enumerate() {
                    let pts = cfg.shaping.points(l as u32);
                    let mut best = (f64::INFINITY, 0usize);
                    for (k, img) in images[l].iter().enumerate() {
                        let d = (y - img).norm_squared();
                        if d < best.0 {
                            best = (d, k);
                        }
                    }
                    *slot = BranchMetric {
                        metric: best.0,
                        point: pts[best.1],
                    };
                }
            }
        }
    }
}

fn lattice_basis(chain: &PartitionChain) -> Matrix8 {
    let b = chain.deepest().basis();
    Matrix8::from_fn(|i, j| b[j][i] as f64)
}

/// `min |Y - H X(x)|_F^2` over points `x` of the coset `label`.
pub fn branch_metric(
    y: &Matrix2<C64>,
    h: &Matrix2<C64>,
    label: u32,
    cfg: &GsttcmConfig,
) -> Result<BranchMetric> {
    if !h.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::invalid("channel matrix is not finite"));
    }
    if label as usize >= cfg.chain.num_labels() {
        return Err(Error::invalid(format!("label {label} out of range")));
    }
    let block = BlockMetrics::new(h, cfg, &lattice_basis(&cfg.chain));
    let mut out = vec![
        BranchMetric {
            metric: 0.0,
            point: [0; 8]
        };
        cfg.chain.num_labels()
    ];
    block.metrics(&vec_of(y), cfg, &mut out);
    Ok(out[label as usize])
}

/// Viterbi decoder with per-frame scratch buffers.
pub struct Decoder<'a> {
    cfg: &'a GsttcmConfig,
    basis: Matrix8,
    metrics: Vec<BranchMetric>,
    survivors: Vec<(u32, u32)>,
}

impl<'a> Decoder<'a> {
    pub fn new(cfg: &'a GsttcmConfig) -> Self {
        Self {
            cfg,
            basis: lattice_basis(&cfg.chain),
            metrics: Vec::new(),
            survivors: Vec::new(),
        }
    }

    /// Recovers the information bits of one frame.
    pub fn decode(&mut self, ys: &[Matrix2<C64>], hs: &[Matrix2<C64>]) -> Result<Vec<u8>> {
        let cfg = self.cfg;
        let l = cfg.frame_len;
        if ys.len() != l {
            return Err(Error::LengthMismatch { expected: l, got: ys.len() });
        }
        if hs.len() != l {
            return Err(Error::LengthMismatch { expected: l, got: hs.len() });
        }
        let labels = cfg.chain.num_labels();
        self.metrics.clear();
        self.metrics.resize(
            l * labels,
            BranchMetric {
                metric: 0.0,
                point: [0; 8],
            },
        );
        let mut block: Option<(Matrix2<C64>, BlockMetrics)> = None;
        for t in 0..l {
            if !hs[t].iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::invalid("channel matrix is not finite"));
            }
            if block.as_ref().is_none_or(|(h, _)| *h != hs[t]) {
                block = Some((hs[t], BlockMetrics::new(&hs[t], cfg, &self.basis)));
            }
            let (_, bm) = block.as_ref().expect("block set above");
            bm.metrics(&vec_of(&ys[t]), cfg, &mut self.metrics[t * labels..(t + 1) * labels]);
        }

        let trellis = &cfg.trellis;
        let states = trellis.num_states();
        let inputs = trellis.num_inputs() as u32;
        let free = l - trellis.tail_len();
        let mut pm = vec![f64::INFINITY; states];
        let mut next_pm = vec![f64::INFINITY; states];
        pm[0] = 0.0;
        self.survivors.clear();
        self.survivors.resize(l * states, (u32::MAX, 0));
        for t in 0..l {
            next_pm.fill(f64::INFINITY);
            let row = &self.metrics[t * labels..(t + 1) * labels];
            let surv = &mut self.survivors[t * states..(t + 1) * states];
            for s in 0..states {
                if !pm[s].is_finite() {
                    continue;
                }
                let mut visit = |u: u32| {
                    let n = trellis.next(s, u);
                    let m = pm[s] + row[trellis.label(s, u) as usize].metric;
                    if m < next_pm[n] {
                        next_pm[n] = m;
                        surv[n] = (s as u32, u);
                    }
                };
                if t < free {
                    (0..inputs).for_each(&mut visit);
                } else {
                    visit(trellis.tail_input(s));
                }
            }
            std::mem::swap(&mut pm, &mut next_pm);
        }
        if !pm[0].is_finite() {
            return Err(Error::invalid("no surviving path ends in state 0"));
        }

        let mut path = vec![(0u32, 0u32); l];
        let mut state = 0usize;
        for t in (0..l).rev() {
            let (prev, u) = self.survivors[t * states + state];
            path[t] = (prev, u);
            state = prev as usize;
        }
        let mut bits = Vec::with_capacity(cfg.info_bits());
        let shaping = cfg.shaping();
        for (t, &(prev, u)) in path.iter().enumerate() {
            if t < free {
                push_bits(&mut bits, u, trellis.input_bits());
            }
            let label = trellis.label(prev as usize, u);
            let point = self.metrics[t * labels + label as usize].point;
            let index = shaping.index(&point).unwrap_or(0);
            push_bits(&mut bits, index as u32, cfg.uncoded_bits());
        }
        Ok(bits)
    }
}

pub fn viterbi_decode(ys: &[Matrix2<C64>], hs: &[Matrix2<C64>], cfg: &GsttcmConfig) -> Result<Vec<u8>> {
    Decoder::new(cfg).decode(ys, hs)
}

/// A path leaving state 0 and returning to it for the first time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorEvent {
    pub inputs: Vec<u32>,
    pub labels: Vec<u32>,
    /// Per-step minimum `det(X_t X_t^H)` in delta units; 0 where the label
    /// difference vanishes and the codewords may coincide.
    pub det_steps: Vec<u64>,
}

impl ErrorEvent {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Simple error events against the all-zero path, up to `max_length` sections.
pub fn enumerate_events(trellis: &TrellisCode, chain: &PartitionChain, max_length: usize) -> Vec<ErrorEvent> {
    let mut events = Vec::new();
    let mut inputs = Vec::new();
    let mut labels = Vec::new();
    fn dfs(
        trellis: &TrellisCode,
        chain: &PartitionChain,
        state: usize,
        max_length: usize,
        inputs: &mut Vec<u32>,
        labels: &mut Vec<u32>,
        events: &mut Vec<ErrorEvent>,
    ) {
        let first = inputs.is_empty();
        for u in 0..trellis.num_inputs() as u32 {
            if first && u == 0 {
                continue;
            }
            let n = trellis.next(state, u);
            inputs.push(u);
            labels.push(trellis.label(state, u));
            if n == 0 {
                events.push(ErrorEvent {
                    inputs: inputs.clone(),
                    labels: labels.clone(),
                    det_steps: labels
                        .iter()
                        .map(|&l| if l == 0 { 0 } else { chain.coset_min_det(l) })
                        .collect(),
                });
            } else if inputs.len() < max_length {
                dfs(trellis, chain, n, max_length, inputs, labels, events);
            }
            inputs.pop();
            labels.pop();
        }
    }
    dfs(trellis, chain, 0, max_length, &mut inputs, &mut labels, &mut events);
    events
}

pub fn enumerate_simple_error_events(cfg: &GsttcmConfig, max_length: usize) -> Result<Vec<ErrorEvent>> {
    if max_length < cfg.trellis.declared_s() {
        return Err(Error::invalid(format!(
            "max_length {max_length} is below the declared shortest event length {}",
            cfg.trellis.declared_s()
        )));
    }
    Ok(enumerate_events(&cfg.trellis, &cfg.chain, max_length))
}

/// Shortest events and their componentwise minimum determinant profile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShortestEvents {
    pub length: usize,
    pub count: usize,
    pub profile: Vec<u64>,
    /// Some shortest event attains the profile at every step.
    pub realized: bool,
    /// Distinct step sequences, sorted.
    pub sequences: Vec<Vec<u64>>,
}

pub fn shortest_events(events: &[ErrorEvent]) -> Option<ShortestEvents> {
    let length = events.iter().map(ErrorEvent::len).min()?;
    let shortest: Vec<&ErrorEvent> = events.iter().filter(|e| e.len() == length).collect();
    let profile: Vec<u64> = (0..length)
        .map(|t| shortest.iter().map(|e| e.det_steps[t]).min().expect("non-empty"))
        .collect();
    let realized = shortest.iter().any(|e| e.det_steps == profile);
    let mut sequences: Vec<Vec<u64>> = shortest.iter().map(|e| e.det_steps.clone()).collect();
    sequences.sort();
    sequences.dedup();
    Some(ShortestEvents {
        length,
        count: shortest.len(),
        profile,
        realized,
        sequences,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodeReport {
    pub code: String,
    pub checks: Vec<Check>,
    pub shortest: Option<ShortestEvents>,
}

impl CodeReport {
    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Structural checks of a configuration. `expected_profile` and
/// `expected_rate` are compared when given.
pub fn validate_code(cfg: &GsttcmConfig, expected_profile: Option<&[u64]>, expected_rate: Option<f64>) -> CodeReport {
    let trellis = &cfg.trellis;
    let mut checks = vec![
        Check::new("reachability", trellis.all_states_reachable(), "every state reachable from state 0"),
        Check::new("linearity", trellis.is_linear(), "label sequences closed under GF(2) addition"),
    ];
    let events = enumerate_events(trellis, &cfg.chain, trellis.declared_s() + 1);
    let shortest = shortest_events(&events);
    match &shortest {
        Some(se) => {
            checks.push(Check::new(
                "shortest event length",
                se.length == trellis.declared_s(),
                format!("measured S={} declared S={}", se.length, trellis.declared_s()),
            ));
            checks.push(Check::new(
                "profile realized",
                se.realized && se.profile.iter().all(|&d| d > 0),
                format!("profile {:?} over {} shortest events", se.profile, se.count),
            ));
            if let Some(expect) = expected_profile {
                checks.push(Check::new(
                    "determinant sequence",
                    se.profile == expect,
                    format!("measured {:?} expected {:?}", se.profile, expect),
                ));
            }
        }
        None => checks.push(Check::new(
            "shortest event length",
            false,
            format!("no simple error event within {} sections", trellis.declared_s() + 1),
        )),
    }
    if let Some(rate) = expected_rate {
        checks.push(Check::new(
            "rate",
            (cfg.rate() - rate).abs() < 1e-12,
            format!("{} bpcu, expected {rate}", cfg.rate()),
        ));
    }
    CodeReport {
        code: cfg.name.clone(),
        checks,
        shortest,
    }
}
