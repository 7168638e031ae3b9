//! 2x2 block fading MIMO channel with additive white Gaussian noise.

use nalgebra::Matrix2;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::golden::C64;

/// Frame of `frame_len` codewords split into fading blocks of `block_len`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FadingProfile {
    frame_len: usize,
    block_len: usize,
}

impl FadingProfile {
    pub fn new(frame_len: usize, block_len: usize) -> Result<Self> {
        if frame_len == 0 || block_len == 0 || frame_len % block_len != 0 {
            return Err(Error::invalid(format!(
                "block length {block_len} must divide frame length {frame_len}"
            )));
        }
        Ok(Self { frame_len, block_len })
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn blocks(&self) -> usize {
        self.frame_len / self.block_len
    }
}

/// Per-section channel matrices `H_1..H_L`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub profile: FadingProfile,
    pub matrices: Vec<Matrix2<C64>>,
}

/// Circularly symmetric complex Gaussian with variance `var`.
fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

pub fn sample_channel<R: Rng + ?Sized>(profile: &FadingProfile, rng: &mut R) -> ChannelRealization {
    let mut matrices = Vec::with_capacity(profile.frame_len);
    for _ in 0..profile.blocks() {
        let h = Matrix2::from_fn(|_, _| complex_normal(rng, 1.0));
        matrices.extend(std::iter::repeat_n(h, profile.block_len));
    }
    ChannelRealization {
        profile: *profile,
        matrices,
    }
}

/// `Y_t = H_t X_t + Z_t` with noise entries of variance `n0`.
pub fn apply<R: Rng + ?Sized>(
    xs: &[Matrix2<C64>],
    hs: &[Matrix2<C64>],
    n0: f64,
    rng: &mut R,
) -> Result<Vec<Matrix2<C64>>> {
    if xs.len() != hs.len() {
        return Err(Error::LengthMismatch {
            expected: hs.len(),
            got: xs.len(),
        });
    }
    if !(n0 >= 0.0) {
        return Err(Error::invalid(format!("noise variance {n0} is negative")));
    }
    Ok(xs
        .iter()
        .zip(hs)
        .map(|(x, h)| {
            let y = h * x;
            if n0 == 0.0 {
                y
            } else {
                y + Matrix2::from_fn(|_, _| complex_normal(rng, n0))
            }
        })
        .collect())
}

/// Noise variance for a per-bit SNR: `N0 = n_T (Es / q) / 10^(snr_b_db / 10)`.
pub fn snr_to_n0(snr_b_db: f64, q: f64, es: f64, n_t: usize) -> Result<f64> {
    if !(q > 0.0) || !(es > 0.0) || n_t == 0 {
        return Err(Error::invalid(format!(
            "snr_to_n0 needs positive q, Es and n_T (got q={q}, Es={es}, n_T={n_t})"
        )));
    }
    if !snr_b_db.is_finite() {
        return Err(Error::invalid("SNR is not finite"));
    }
    Ok(n_t as f64 * (es / q) / 10f64.powf(snr_b_db / 10.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn profile_requires_divisibility() {
        assert!(FadingProfile::new(120, 7).is_err());
        assert!(FadingProfile::new(120, 0).is_err());
        assert_eq!(FadingProfile::new(120, 40).unwrap().blocks(), 3);
    }

    #[test]
    fn slow_fading_repeats_one_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = FadingProfile::new(120, 120).unwrap();
        let h = sample_channel(&p, &mut rng);
        assert_eq!(h.matrices.len(), 120);
        assert!(h.matrices.iter().all(|m| *m == h.matrices[0]));
    }

    #[test]
    fn fast_fading_is_all_distinct() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = FadingProfile::new(120, 1).unwrap();
        let h = sample_channel(&p, &mut rng);
        for i in 0..120 {
            for j in i + 1..120 {
                assert_ne!(h.matrices[i], h.matrices[j]);
            }
        }
    }

    #[test]
    fn block_structure_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = FadingProfile::new(120, 5).unwrap();
        let h = sample_channel(&p, &mut rng);
        for (t, m) in h.matrices.iter().enumerate() {
            assert_eq!(*m, h.matrices[t - t % 5]);
        }
        assert_ne!(h.matrices[0], h.matrices[5]);
    }

    #[test]
    fn entry_variance_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = FadingProfile::new(1, 1).unwrap();
        let n = 100_000;
        let mut acc = 0.0;
        for _ in 0..n {
            acc += sample_channel(&p, &mut rng).matrices[0][(0, 1)].norm_sqr();
        }
        let var = acc / n as f64;
        assert!((var - 1.0).abs() < 0.02, "variance {var}");
    }

    #[test]
    fn noiseless_apply_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = FadingProfile::new(4, 2).unwrap();
        let h = sample_channel(&p, &mut rng);
        let xs: Vec<_> = (0..4)
            .map(|k| Matrix2::from_fn(|i, j| C64::new((i + k) as f64, j as f64 - 0.5)))
            .collect();
        let ys = apply(&xs, &h.matrices, 0.0, &mut rng).unwrap();
        for t in 0..4 {
            assert_eq!(ys[t], h.matrices[t] * xs[t]);
        }
    }

    #[test]
    fn noise_variance_matches_n0() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n0 = 0.37;
        let n = 25_000;
        let xs = vec![Matrix2::zeros(); n];
        let hs = vec![Matrix2::identity(); n];
        let ys = apply(&xs, &hs, n0, &mut rng).unwrap();
        let var = ys.iter().map(|y| y.norm_squared()).sum::<f64>() / (4 * n) as f64;
        assert!((var / n0 - 1.0).abs() < 0.02, "variance {var}");
    }

    #[test]
    fn apply_rejects_length_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let xs = vec![Matrix2::zeros(); 3];
        let hs = vec![Matrix2::identity(); 2];
        assert!(matches!(
            apply(&xs, &hs, 0.1, &mut rng),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn n0_formula() {
        let n0 = snr_to_n0(0.0, 7.0, 2.5, 2).unwrap();
        assert!((n0 - 5.0 / 7.0).abs() < 1e-12);
        let n10 = snr_to_n0(10.0, 7.0, 2.5, 2).unwrap();
        assert!((n0 / n10 - 10.0).abs() < 1e-12);
        let r = snr_to_n0(3.0, 6.0, 2.5, 2).unwrap() / snr_to_n0(3.0, 7.0, 2.5, 2).unwrap();
        assert!((r - 7.0 / 6.0).abs() < 1e-12);
        assert!(snr_to_n0(0.0, 0.0, 2.5, 2).is_err());
        assert!(snr_to_n0(0.0, 7.0, -1.0, 2).is_err());
    }
}
