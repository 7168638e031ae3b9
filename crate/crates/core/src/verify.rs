//! Invariant suite run by `gsttcm verify`.

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::analysis::{brute_force_count, count_events, delta_case, DeltaPoly};
use crate::channel::{sample_channel, FadingProfile};
use crate::config::Library;
use crate::error::Result;
use crate::golden::{generator_matrix, min_det_search, vectorize, Matrix8, Vector8, C64, DELTA};
use crate::lattice::{brute_force_closest, closest_point, oracle_box_radius, validate_partition};
use crate::montecarlo::{fer_montecarlo, with_workers, StoppingRule};
use crate::trellis::{
    branch_metric, channel_map, encode_gsttcm, enumerate_simple_error_events, validate_code, Check, Decoder, GsttcmConfig,
};

/// Sizes of the randomised checks.
#[derive(Debug, Clone, Copy)]
pub struct Effort {
    pub min_det_bound: u32,
    pub closest_instances: usize,
    pub roundtrip_frames: usize,
    pub metric_instances: usize,
    pub moment_samples: usize,
}

impl Effort {
    pub fn full() -> Self {
        Self {
            min_det_bound: 2,
            closest_instances: 10_000,
            roundtrip_frames: 100,
            metric_instances: 200,
            moment_samples: 100_000,
        }
    }

    pub fn quick() -> Self {
        Self {
            min_det_bound: 1,
            closest_instances: 500,
            roundtrip_frames: 5,
            metric_instances: 20,
            moment_samples: 10_000,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    fn push(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check::new(name, pass, detail));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!("{} {}: {}\n", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail));
        }
        let failed = self.failures().count();
        out.push_str(&format!("{} checks, {} failed\n", self.checks.len(), failed));
        out
    }
}

fn golden_checks(report: &mut VerifyReport, effort: Effort) {
    let g = generator_matrix().matrix;
    let err = (g.transpose() * g - Matrix8::identity()).abs().max();
    report.push("golden: generator orthogonal", err < 1e-12, format!("max |G^T G - I| = {err:.2e}"));
    match min_det_search(effort.min_det_bound) {
        Ok(d) => report.push(
            "golden: minimum determinant",
            (d - DELTA).abs() < 1e-9,
            format!("bound {}: {d:.12}", effort.min_det_bound),
        ),
        Err(e) => report.push("golden: minimum determinant", false, e.to_string()),
    }
}

fn lattice_checks(report: &mut VerifyReport, lib: &Library, effort: Effort) {
    for chain in lib.partitions.values() {
        let r = validate_partition(chain);
        let detail = r
            .levels
            .iter()
            .map(|l| format!("{} declared {} measured {}", l.name, l.declared_floor, l.measured_floor))
            .collect::<Vec<_>>()
            .join(", ");
        report.push(format!("partition {}: floors", chain.name()), r.ok(), detail);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut mismatches = 0;
    for _ in 0..effort.closest_instances {
        let b = Matrix8::identity() + Matrix8::from_fn(|_, _| 0.15 * rng.sample::<f64, _>(StandardNormal));
        let t = Vector8::from_fn(|_, _| rng.random_range(-4.0..4.0));
        let o = Vector8::from_fn(|_, _| rng.random_range(-0.5..0.5));
        let ok = oracle_box_radius(&b, &t, &o)
            .and_then(|(_, radius)| brute_force_closest(&b, &t, &o, &radius))
            .and_then(|slow| closest_point(&b, &t, &o).map(|fast| fast == slow))
            .unwrap_or(false);
        mismatches += !ok as usize;
    }
    report.push(
        "lattice: closest point vs brute force",
        mismatches == 0,
        format!("{mismatches} mismatches in {} instances", effort.closest_instances),
    );
}

fn random_h(rng: &mut ChaCha8Rng) -> Matrix2<C64> {
    sample_channel(&FadingProfile::new(1, 1).expect("valid"), rng).matrices[0]
}

fn trellis_checks(report: &mut VerifyReport, lib: &Library, effort: Effort) {
    for (name, spec) in &lib.codes {
        if spec.trellis.is_none() {
            continue;
        }
        let cfg = match lib.gsttcm(name, 120) {
            Ok(c) => c,
            Err(e) => {
                report.push(format!("code {name}: build"), false, e.to_string());
                continue;
            }
        };
        let code = validate_code(&cfg, spec.det_sequences.first().map(Vec::as_slice), spec.rate);
        for c in &code.checks {
            report.push(format!("code {name}: {}", c.name), c.pass, c.detail.clone());
        }
        if let Ok(events) = enumerate_simple_error_events(&cfg, cfg.trellis.declared_s() + 2) {
            let s = cfg.trellis.declared_s();
            let short = events.iter().filter(|e| e.len() < s).count();
            let exact = events.iter().filter(|e| e.len() == s).count();
            report.push(
                format!("code {name}: no event shorter than S"),
                short == 0 && exact > 0,
                format!("{} events up to length {}, {exact} of length S", events.len(), s + 2),
            );
        }

        let mut rng = ChaCha8Rng::seed_from_u64(0x7e11);
        let mut dec = Decoder::new(&cfg);
        let mut failures = 0;
        for _ in 0..effort.roundtrip_frames {
            let bits: Vec<u8> = (0..cfg.info_bits()).map(|_| rng.random::<bool>() as u8).collect();
            let h = sample_channel(&FadingProfile::new(120, 1).expect("valid"), &mut rng);
            let ok = encode_gsttcm(&bits, &cfg)
                .map(|seq| {
                    let ys: Vec<_> = seq.matrices().iter().zip(&h.matrices).map(|(x, h)| h * x).collect();
                    dec.decode(&ys, &h.matrices).map(|out| out == bits).unwrap_or(false)
                })
                .unwrap_or(false);
            failures += !ok as usize;
        }
        report.push(
            format!("code {name}: noiseless roundtrip"),
            failures == 0,
            format!("{failures} of {} frames failed", effort.roundtrip_frames),
        );

        let (mut worse, mut compared) = (0, 0);
        while compared < effort.metric_instances {
            let h = random_h(&mut rng);
            let y = Matrix2::from_fn(|_, _| C64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)));
            let label = rng.random_range(0..cfg.chain.num_labels() as u32);
            let oracle = if cfg.boundary_aware {
                Ok(Some(region_brute_force(&y, &h, label, &cfg)))
            } else {
                coset_brute_force(&y, &h, label, &cfg)
            };
            match (branch_metric(&y, &h, label, &cfg), oracle) {
                (Ok(fast), Ok(Some(slow))) => worse += ((fast.metric - slow).abs() > 1e-9) as usize,
                (_, Ok(None)) => continue,
                _ => worse += 1,
            }
            compared += 1;
        }
        report.push(
            format!("code {name}: branch metric vs brute force"),
            worse == 0,
            format!("{worse} disagreements in {compared} instances"),
        );
    }
}

fn analysis_checks(report: &mut VerifyReport, effort: Effort) {
    let mut bad = 0;
    let mut identity = 0;
    for l in 2..=200 {
        for s in 2..=6.min(l) {
            for n in (1..=l).filter(|n| l % n == 0) {
                match (count_events(l, s, n), brute_force_count(l, s, n)) {
                    (Ok(a), Ok(b)) => {
                        bad += (a != b) as usize;
                        identity += (a.ns1 + a.ns2 != l - s + 1) as usize;
                    }
                    _ => bad += 1,
                }
            }
        }
    }
    report.push("analysis: closed-form counts vs brute force", bad == 0, format!("{bad} disagreements, L <= 200, S <= 6"));
    report.push("analysis: Ns1 + Ns2 = L - S + 1", identity == 0, format!("{identity} violations"));

    let seqs: [&[u64]; 4] = [&[1, 2], &[2, 1, 2], &[4, 1, 2], &[4, 1, 2, 4]];
    let reductions = seqs.iter().all(|seq| {
        let s = seq.len();
        delta_case(seq, s, 1).ok() == Some(DeltaPoly::monomial(seq.iter().sum(), 1))
            && delta_case(seq, 1, s).ok() == Some(DeltaPoly::monomial(seq.iter().product(), s as u32))
    });
    report.push("analysis: delta_case reductions", reductions, "sum at N >= S, product at N = 1");

    let mut rng = ChaCha8Rng::seed_from_u64(0xde7);
    let mut violations = 0;
    let samples = effort.moment_samples / 10;
    for _ in 0..samples {
        let k = rng.random_range(2..=5);
        let ds: Vec<Matrix2<C64>> = (0..k).map(|_| random_h(&mut rng)).collect();
        let f: Matrix2<C64> = ds.iter().map(|d| d * d.adjoint()).sum();
        let lhs = f.determinant().re;
        let rhs: f64 = ds.iter().map(|d| (d * d.adjoint()).determinant().re).sum();
        violations += (lhs < rhs - 1e-10) as usize;
    }
    report.push(
        "analysis: det of block sum >= sum of dets",
        violations == 0,
        format!("{violations} violations in {samples} instances"),
    );
}

fn channel_checks(report: &mut VerifyReport, effort: Effort) {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc4a);
    let p = FadingProfile::new(2, 1).expect("valid");
    let (mut var, mut cross) = (0.0, C64::new(0.0, 0.0));
    let n = effort.moment_samples;
    for _ in 0..n {
        let h = sample_channel(&p, &mut rng);
        var += h.matrices[0][(0, 0)].norm_sqr();
        cross += h.matrices[0][(0, 0)] * h.matrices[1][(0, 0)].conj();
    }
    let var = var / n as f64;
    let corr = cross.norm() / n as f64;
    // 0.02 at the full sample size, five standard errors below it
    let tol = (5.0 / (n as f64).sqrt()).max(0.02);
    report.push("channel: entry variance", (var - 1.0).abs() < tol, format!("{var:.4} (tolerance {tol:.3})"));
    report.push("channel: adjacent blocks uncorrelated", corr < 0.02, format!("|corr| = {corr:.4}"));
}

fn montecarlo_checks(report: &mut VerifyReport, lib: &Library) {
    let Some(name) = lib.codes.iter().find(|(_, c)| c.trellis.is_some()).map(|(n, _)| n.clone()) else {
        return;
    };
    let Ok(cfg) = lib.gsttcm(&name, 120) else {
        return;
    };
    let rule = StoppingRule {
        min_errors: 5,
        max_frames: 64,
    };
    let silent = fer_montecarlo(&cfg, 120, 10.0, rule, 1, 0.0);
    report.push(
        format!("montecarlo {name}: noiseless FER"),
        silent.as_ref().is_ok_and(|p| p.frame_errors == 0),
        format!("{silent:?}"),
    );
    let run = |w| with_workers(w, || fer_montecarlo(&cfg, 3, 8.0, rule, 7, 1.0));
    let same = match (run(1), run(3)) {
        (Ok(Ok(a)), Ok(Ok(b))) => a == b,
        _ => false,
    };
    report.push(format!("montecarlo {name}: worker-count determinism"), same, "1 vs 3 workers");
}

/// Largest integer box [`coset_brute_force`] will enumerate.
pub const MAX_BOX_POINTS: f64 = 4e6;

/// Exhaustive coset minimum over a box certified to contain the closest
/// point of the distorted coset; `None` when that box is too large.
pub fn coset_brute_force(y: &Matrix2<C64>, h: &Matrix2<C64>, label: u32, cfg: &GsttcmConfig) -> Result<Option<f64>> {
    let b = cfg.chain.deepest().basis();
    let basis = Matrix8::from_fn(|i, j| b[j][i] as f64);
    let m = channel_map(h) * basis;
    let rep = Vector8::from_fn(|i, _| cfg.chain.coset_rep(label)[i] as f64 + 0.5);
    let offset = basis
        .try_inverse()
        .ok_or_else(|| crate::Error::invalid("singular lattice basis"))?
        * rep;
    let target = vectorize(y);
    let (_, radius) = oracle_box_radius(&m, &target, &offset)?;
    if radius.iter().map(|r| 2.0 * r + 1.0).product::<f64>() > MAX_BOX_POINTS {
        return Ok(None);
    }
    let u = brute_force_closest(&m, &target, &offset, &radius)?;
    let u = Vector8::from_fn(|i, _| u[i] as f64);
    Ok(Some((target - m * (u + offset)).norm_squared()))
}

/// Minimum over every shaping-region point of the coset.
pub fn region_brute_force(y: &Matrix2<C64>, h: &Matrix2<C64>, label: u32, cfg: &GsttcmConfig) -> f64 {
    let map = channel_map(h);
    let target = vectorize(y);
    cfg.shaping()
        .points(label)
        .iter()
        .map(|x| (target - map * Vector8::from_fn(|i, _| x[i] as f64 + 0.5)).norm_squared())
        .fold(f64::INFINITY, f64::min)
}

/// Runs every check against the partitions and codes of `lib`.
pub fn run_suite(lib: &Library, effort: Effort) -> VerifyReport {
    let mut report = VerifyReport::default();
    golden_checks(&mut report, effort);
    lattice_checks(&mut report, lib, effort);
    trellis_checks(&mut report, lib, effort);
    analysis_checks(&mut report, effort);
    channel_checks(&mut report, effort);
    montecarlo_checks(&mut report, lib);
    report
}
