//! Monte Carlo frame error rate estimation.
//!
//! Frames run in fixed-size batches; within a batch they may be decoded in
//! parallel, and the stopping rule is applied by scanning outcomes in frame
//! order. Every frame draws its data, channel and noise from streams keyed
//! by `(seed, N, frame)`, so a cell's result is independent of the worker
//! count, and cells with the same `N` share channel and noise draws across
//! SNR values.

use rand::Rng;
use rayon::prelude::*;

use crate::channel::{apply, sample_channel, snr_to_n0, FadingProfile};
use crate::config::{Library, SimulationPlan};
use crate::error::{Error, Result};
use crate::rng::{stream, Role};
use crate::trellis::{encode_gsttcm, Decoder, GsttcmConfig};

const BATCH: u64 = 64;
const Z95: f64 = 1.959_963_984_540_054;
/// Transmit antennas.
pub const N_T: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule {
    pub min_errors: u64,
    pub max_frames: u64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            min_errors: 100,
            max_frames: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FerPoint {
    pub block_len: usize,
    pub snr_b_db: f64,
    pub frames: u64,
    pub frame_errors: u64,
    pub fer: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Stopped at `max_frames` before reaching `min_errors`.
    pub censored: bool,
}

/// Wilson score interval at 95%.
pub fn wilson_interval(errors: u64, frames: u64) -> (f64, f64) {
    if frames == 0 {
        return (0.0, 1.0);
    }
    let n = frames as f64;
    let p = errors as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let low = if errors == 0 { 0.0 } else { (centre - half).max(0.0) };
    let high = if errors == frames { 1.0 } else { (centre + half).min(1.0) };
    (low, high)
}

/// Noise variance at a per-bit SNR for the configuration's rate and
/// constellation energy.
pub fn noise_variance(cfg: &GsttcmConfig, snr_b_db: f64) -> Result<f64> {
    snr_to_n0(snr_b_db, cfg.rate(), cfg.constellation.avg_energy(), N_T)
}

/// One frame through encoder, channel and decoder; `true` on a frame error.
pub fn simulate_frame(
    cfg: &GsttcmConfig,
    decoder: &mut Decoder<'_>,
    profile: &FadingProfile,
    n0: f64,
    seed: u64,
    frame: u64,
) -> Result<bool> {
    let cell = profile.block_len() as u64;
    let mut data = stream(seed, cell, frame, Role::Data);
    let bits: Vec<u8> = (0..cfg.info_bits()).map(|_| data.random::<bool>() as u8).collect();
    let xs = encode_gsttcm(&bits, cfg)?.matrices();
    let h = sample_channel(profile, &mut stream(seed, cell, frame, Role::Channel));
    let ys = apply(&xs, &h.matrices, n0, &mut stream(seed, cell, frame, Role::Noise))?;
    Ok(decoder.decode(&ys, &h.matrices)? != bits)
}

/// FER of one `(N, SNR)` cell. `noise_scale` multiplies the noise variance.
pub fn fer_montecarlo(
    cfg: &GsttcmConfig,
    block_len: usize,
    snr_b_db: f64,
    rule: StoppingRule,
    seed: u64,
    noise_scale: f64,
) -> Result<FerPoint> {
    if rule.min_errors == 0 || rule.max_frames == 0 {
        return Err(Error::invalid("stopping rule needs min_errors >= 1 and max_frames >= 1"));
    }
    let profile = FadingProfile::new(cfg.frame_len, block_len)?;
    let n0 = noise_variance(cfg, snr_b_db)? * noise_scale;
    let mut frames = 0u64;
    let mut errors = 0u64;
    'run: while frames < rule.max_frames {
        let end = (frames + BATCH).min(rule.max_frames);
        let outcomes: Vec<Result<bool>> = (frames..end)
            .into_par_iter()
            .map_init(
                || Decoder::new(cfg),
                |dec, f| simulate_frame(cfg, dec, &profile, n0, seed, f),
            )
            .collect();
        for outcome in outcomes {
            frames += 1;
            errors += outcome? as u64;
            if errors >= rule.min_errors {
                break 'run;
            }
        }
    }
    let (ci_low, ci_high) = wilson_interval(errors, frames);
    Ok(FerPoint {
        block_len,
        snr_b_db,
        frames,
        frame_errors: errors,
        fer: errors as f64 / frames as f64,
        ci_low,
        ci_high,
        censored: errors < rule.min_errors,
    })
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Result of a campaign: the configuration it ran and one point per cell.
#[derive(Debug, Clone)]
pub struct Campaign {
    pub cfg: GsttcmConfig,
    pub plan: SimulationPlan,
    pub points: Vec<FerPoint>,
}

pub const FER_CSV_HEADER: &str = "scheme,states,partition,L,N,snr_b_db,frames,frame_errors,fer,ci_low,ci_high,seed";
pub const CELLS_CSV_HEADER: &str = "N,snr_b_db,status";

pub fn run_campaign(lib: &Library, plan: &SimulationPlan, workers: usize) -> Result<Campaign> {
    let cfg = lib.gsttcm(&plan.code, plan.frame_len)?;
    let rule = StoppingRule {
        min_errors: plan.min_errors,
        max_frames: plan.max_frames,
    };
    let points = with_workers(workers, || {
        let mut points = Vec::new();
        for &n in &plan.block_lens {
            for &snr in &plan.snr_b_db {
                points.push(fer_montecarlo(&cfg, n, snr, rule, plan.seed, plan.noise_scale)?);
            }
        }
        Ok::<_, Error>(points)
    })??;
    Ok(Campaign {
        cfg,
        plan: plan.clone(),
        points,
    })
}

impl Campaign {
    pub fn fer_csv(&self) -> String {
        let mut out = format!("{FER_CSV_HEADER}\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{:.6e},{:.6e},{:.6e},{}\n",
                self.cfg.name,
                self.cfg.trellis.num_states(),
                self.cfg.chain.name(),
                self.cfg.frame_len,
                p.block_len,
                p.snr_b_db,
                p.frames,
                p.frame_errors,
                p.fer,
                p.ci_low,
                p.ci_high,
                self.plan.seed
            ));
        }
        out
    }

    /// Per-cell status, `ok` or `censored`.
    pub fn cells_csv(&self) -> String {
        let mut out = format!("{CELLS_CSV_HEADER}\n");
        for p in &self.points {
            let status = if p.censored { "censored" } else { "ok" };
            out.push_str(&format!("{},{},{status}\n", p.block_len, p.snr_b_db));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_examples() {
        let (lo, hi) = wilson_interval(100, 10_000);
        assert!((lo - 0.0082).abs() < 1e-4 && (hi - 0.0121).abs() < 1e-4, "{lo} {hi}");
        let (lo, hi) = wilson_interval(0, 1000);
        assert_eq!(lo, 0.0);
        assert!((hi - 3.84 / 1003.84).abs() < 1e-4);
        let (lo, hi) = wilson_interval(50, 50);
        assert!(lo > 0.9 && hi == 1.0);
    }

    #[test]
    fn interval_contains_estimate() {
        for frames in [1u64, 7, 100, 12345] {
            for errors in [0, frames / 3, frames] {
                let (lo, hi) = wilson_interval(errors, frames);
                let p = errors as f64 / frames as f64;
                assert!(lo <= p && p <= hi);
            }
        }
    }
}
