//! Schnorr-Euchner closest-point search in dimension 8.

use crate::error::{Error, Result};
use crate::golden::{Matrix8, Point8, Vector8};

const N: usize = 8;

/// Default ceiling on the ratio of extreme diagonal entries of `R`.
pub const DEFAULT_MAX_CONDITION: f64 = 1e8;

fn sgn(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Closest-point searcher for the lattice spanned by the columns of a basis.
///
/// The basis is factored once (`B = QR`); each query rotates the target by
/// `Q^T` and runs a depth-first Schnorr-Euchner enumeration seeded with the
/// Babai nearest-plane point.
#[derive(Debug, Clone)]
pub struct SphereDecoder {
    q_t: Matrix8,
    r: [[f64; N]; N],
}

impl SphereDecoder {
    pub fn new(basis: &Matrix8) -> Result<Self> {
        Self::with_ceiling(basis, DEFAULT_MAX_CONDITION)
    }

    pub fn with_ceiling(basis: &Matrix8, ceiling: f64) -> Result<Self> {
        if !basis.iter().all(|v| v.is_finite()) {
            return Err(Error::IllConditioned {
                ratio: f64::INFINITY,
                ceiling,
            });
        }
        let qr = basis.qr();
        let mut q = qr.q();
        let mut rm = qr.r();
        for k in 0..N {
            if rm[(k, k)] < 0.0 {
                for j in 0..N {
                    rm[(k, j)] = -rm[(k, j)];
                    q[(j, k)] = -q[(j, k)];
                }
            }
        }
        let diag: Vec<f64> = (0..N).map(|k| rm[(k, k)]).collect();
        let max = diag.iter().cloned().fold(0.0, f64::max);
        let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        let ratio = if min > 0.0 { max / min } else { f64::INFINITY };
        if !(ratio <= ceiling) {
            return Err(Error::IllConditioned { ratio, ceiling });
        }
        let r = std::array::from_fn(|i| std::array::from_fn(|j| rm[(i, j)]));
        Ok(Self { q_t: q.transpose(), r })
    }

    /// Upper-triangular factor with positive diagonal.
    pub fn r(&self) -> &[[f64; N]; N] {
        &self.r
    }

    /// Target expressed in the triangular coordinates (`Q^T t`).
    pub fn rotate(&self, target: &Vector8) -> [f64; N] {
        let z = self.q_t * target;
        std::array::from_fn(|i| z[i])
    }

    /// Closest point to `target`: integer coordinates and squared distance.
    pub fn closest(&self, target: &Vector8) -> (Point8, f64) {
        self.search(&self.rotate(target))
    }

    /// Closest point for an already rotated target.
    pub fn search(&self, z: &[f64; N]) -> (Point8, f64) {
        let r = &self.r;
        let mut u = [0f64; N];
        let mut best = 0.0;
        for k in (0..N).rev() {
            let mut s = z[k];
            for j in k + 1..N {
                s -= r[k][j] * u[j];
            }
            let c = s / r[k][k];
            u[k] = c.round();
            let e = r[k][k] * (c - u[k]);
            best += e * e;
        }
        let mut best_u = u;

        let mut c = [0f64; N];
        let mut step = [0f64; N];
        let mut partial = [0f64; N + 1];
        let mut k = N - 1;
        c[k] = z[k] / r[k][k];
        u[k] = c[k].round();
        step[k] = sgn(c[k] - u[k]);
        loop {
            let e = r[k][k] * (c[k] - u[k]);
            let d = partial[k + 1] + e * e;
            if d < best {
                if k == 0 {
                    best = d;
                    best_u = u;
                    k = 1;
                    u[k] += step[k];
                    step[k] = -step[k] - sgn(step[k]);
                } else {
                    partial[k] = d;
                    k -= 1;
                    let mut s = z[k];
                    for j in k + 1..N {
                        s -= r[k][j] * u[j];
                    }
                    c[k] = s / r[k][k];
                    u[k] = c[k].round();
                    step[k] = sgn(c[k] - u[k]);
                }
            } else {
                if k == N - 1 {
                    break;
                }
                k += 1;
                u[k] += step[k];
                step[k] = -step[k] - sgn(step[k]);
            }
        }
        (best_u.map(|v| v as i64), best)
    }
}

fn shifted_target(basis: &Matrix8, target: &Vector8, offset: &Vector8) -> Vector8 {
    target - basis * offset
}

/// Integer `u` minimising `|target - basis (u + offset)|`.
pub fn closest_point(basis: &Matrix8, target: &Vector8, offset: &Vector8) -> Result<Point8> {
    let dec = SphereDecoder::new(basis)?;
    Ok(dec.closest(&shifted_target(basis, target, offset)).0)
}

/// Box centre and per-coordinate half-widths that provably contain the
/// closest point: every `u` no farther than the Babai rounding point lies
/// within `rho * |row_i(B^-1)|` of `B^-1 t`.
pub fn oracle_box_radius(
    basis: &Matrix8,
    target: &Vector8,
    offset: &Vector8,
) -> Result<([f64; N], [f64; N])> {
    let inv = basis
        .try_inverse()
        .ok_or_else(|| Error::invalid("singular basis"))?;
    let t = shifted_target(basis, target, offset);
    let center = inv * t;
    let rounded = center.map(f64::round);
    let rho = (t - basis * rounded).norm();
    let radius = std::array::from_fn(|i| rho * inv.row(i).norm() * (1.0 + 1e-9) + 1e-9);
    Ok((std::array::from_fn(|i| center[i]), radius))
}

/// Exhaustive closest point over the integer box `|u_i - c_i| <= box_radius[i]`.
///
/// Test oracle only; fails when the box is empty or smaller than the region
/// certified by [`oracle_box_radius`].
pub fn brute_force_closest(
    basis: &Matrix8,
    target: &Vector8,
    offset: &Vector8,
    box_radius: &[f64; N],
) -> Result<Point8> {
    let (center, needed) = oracle_box_radius(basis, target, offset)?;
    let mut lo = [0i64; N];
    let mut hi = [0i64; N];
    for i in 0..N {
        lo[i] = (center[i] - box_radius[i]).ceil() as i64;
        hi[i] = (center[i] + box_radius[i]).floor() as i64;
        if !(box_radius[i] >= 0.0) || lo[i] > hi[i] {
            return Err(Error::invalid("empty search box"));
        }
        if box_radius[i] < needed[i] {
            return Err(Error::invalid(format!(
                "box half-width {:.3} on coordinate {i} is below the certified {:.3}",
                box_radius[i], needed[i]
            )));
        }
    }
    let t = shifted_target(basis, target, offset);
    let cols: Vec<Vector8> = (0..N).map(|j| basis.column(j).into_owned()).collect();
    let mut best = (f64::INFINITY, [0i64; N]);
    let mut u = [0i64; N];
    fn rec(
        level: usize,
        acc: Vector8,
        u: &mut Point8,
        lo: &Point8,
        hi: &Point8,
        cols: &[Vector8],
        t: &Vector8,
        best: &mut (f64, Point8),
    ) {
        if level == N {
            let d = (t - acc).norm_squared();
            if d < best.0 {
                *best = (d, *u);
            }
            return;
        }
        for v in lo[level]..=hi[level] {
            u[level] = v;
            rec(level + 1, acc + cols[level] * v as f64, u, lo, hi, cols, t, best);
        }
    }
    rec(0, Vector8::zeros(), &mut u, &lo, &hi, &cols, &t, &mut best);
    Ok(best.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_basis(rng: &mut ChaCha8Rng, spread: f64) -> Matrix8 {
        Matrix8::identity() + Matrix8::from_fn(|_, _| spread * rng.sample::<f64, _>(StandardNormal))
    }

    fn random_target(rng: &mut ChaCha8Rng) -> Vector8 {
        Vector8::from_fn(|_, _| rng.random_range(-4.0..4.0))
    }

    #[test]
    fn lattice_point_maps_to_itself() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = random_basis(&mut rng, 0.3);
        let u = Vector8::from_column_slice(&[1.0, -2.0, 0.0, 3.0, 1.0, 1.0, -1.0, 0.0]);
        let dec = SphereDecoder::new(&b).unwrap();
        let (p, d) = dec.closest(&(b * u));
        assert_eq!(p, [1, -2, 0, 3, 1, 1, -1, 0]);
        assert!(d < 1e-20);
    }

    #[test]
    fn identity_basis_rounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let dec = SphereDecoder::new(&Matrix8::identity()).unwrap();
        for _ in 0..10_000 {
            let t = random_target(&mut rng);
            let (p, _) = dec.closest(&t);
            let expect: Point8 = std::array::from_fn(|i| t[i].round() as i64);
            assert_eq!(p, expect);
        }
    }

    #[test]
    fn offset_translates_the_lattice() {
        let b = Matrix8::identity();
        let t = Vector8::from_element(0.45);
        let o = Vector8::from_element(0.5);
        // 0.45 - 0.5 = -0.05 rounds to 0
        assert_eq!(closest_point(&b, &t, &o).unwrap(), [0; 8]);
        let t = Vector8::from_element(-0.1);
        assert_eq!(closest_point(&b, &t, &o).unwrap(), [-1; 8]);
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let b = random_basis(&mut rng, 0.15);
            let t = random_target(&mut rng);
            let o = Vector8::from_fn(|_, _| rng.random_range(-0.5..0.5));
            let (_, radius) = oracle_box_radius(&b, &t, &o).unwrap();
            let fast = closest_point(&b, &t, &o).unwrap();
            let slow = brute_force_closest(&b, &t, &o, &radius).unwrap();
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn translation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..500 {
            let b = random_basis(&mut rng, 0.4);
            let t = random_target(&mut rng);
            let v: Point8 = std::array::from_fn(|_| rng.random_range(-6..=6));
            let vf = Vector8::from_fn(|i, _| v[i] as f64);
            let o = Vector8::zeros();
            let base = closest_point(&b, &t, &o).unwrap();
            let moved = closest_point(&b, &(t + b * vf), &o).unwrap();
            let expect: Point8 = std::array::from_fn(|i| base[i] + v[i]);
            assert_eq!(moved, expect);
        }
    }

    #[test]
    fn singular_basis_rejected() {
        let mut b = Matrix8::identity();
        b[(7, 7)] = 0.0;
        assert!(matches!(SphereDecoder::new(&b), Err(Error::IllConditioned { .. })));
        b[(7, 7)] = 1e-12;
        assert!(SphereDecoder::new(&b).is_err());
        b[(7, 7)] = f64::NAN;
        assert!(SphereDecoder::new(&b).is_err());
    }

    #[test]
    fn brute_force_rejects_small_or_empty_boxes() {
        let b = Matrix8::identity() * 3.0;
        let t = Vector8::from_element(0.2);
        let o = Vector8::zeros();
        assert!(brute_force_closest(&b, &t, &o, &[-1.0; 8]).is_err());
        assert!(brute_force_closest(&b, &t, &o, &[0.0; 8]).is_err());
        assert_eq!(brute_force_closest(&b, &t, &o, &[1.0; 8]).unwrap(), [0; 8]);
    }
}
