//! The 2x2 Golden code and its embedding as a rotated copy of Z^8.
//!
//! A codeword carries four QAM symbols `(a, b, c, d)`:
//!
//! ```text
//! X = 1/sqrt(5) [ alpha (a + b theta)        alpha (c + d theta)     ]
//!               [ i alphab (c + d thetab)    alphab (a + b thetab)    ]
//! ```
//!
//! with `theta = (1 + sqrt 5) / 2`, `thetab = 1 - theta`, `alpha = 1 + i thetab`
//! and `alphab = 1 + i theta`. The map from the eight real symbol coordinates
//! to the eight real codeword coordinates is orthogonal, so the codebook is a
//! rotated `Z^8` (after the `(1+i)/2` QAM translation).
//!
//! Real coordinate conventions, shared by the lattice and trellis modules:
//!
//! * symbol vector: `(Re a, Im a, Re b, Im b, Re c, Im c, Re d, Im d)`
//! * codeword vector: `(Re X11, Im X11, Re X21, Im X21, Re X12, Im X12, Re X22, Im X22)`,
//!   i.e. column 1 then column 2, real and imaginary parts interleaved.

use std::sync::OnceLock;

use nalgebra::{Matrix2, SMatrix, SVector};
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type Matrix8 = SMatrix<f64, 8, 8>;
pub type Vector8 = SVector<f64, 8>;
/// Integer point of `Z^8` in symbol coordinates.
pub type Point8 = [i64; 8];

/// Minimum determinant of the Golden code, `|det(X)|^2` for the unit difference.
pub const DELTA: f64 = 0.2;

/// Algebraic constants of the code, computed from `sqrt(5)`.
#[derive(Debug, Clone, Copy)]
pub struct GoldenConstants {
    pub theta: f64,
    pub theta_bar: f64,
    pub alpha: C64,
    pub alpha_bar: C64,
    pub scale: f64,
}

pub fn constants() -> &'static GoldenConstants {
    static CONSTANTS: OnceLock<GoldenConstants> = OnceLock::new();
    CONSTANTS.get_or_init(|| {
        let sqrt5 = 5f64.sqrt();
        let theta = (1.0 + sqrt5) / 2.0;
        let theta_bar = 1.0 - theta;
        GoldenConstants {
            theta,
            theta_bar,
            alpha: C64::new(1.0, theta_bar),
            alpha_bar: C64::new(1.0, theta),
            scale: 1.0 / sqrt5,
        }
    })
}

/// Square QAM on the translated grid `Z[i] + (1+i)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct QamConstellation {
    order: u32,
    side: u32,
    points: Vec<C64>,
    avg_energy: f64,
}

impl QamConstellation {
    /// Builds the `order`-point square constellation; `order` must be an even power of two.
    pub fn square(order: u32) -> Result<Self> {
        if order < 4 || !order.is_power_of_two() || order.trailing_zeros() % 2 != 0 {
            return Err(Error::invalid(format!(
                "QAM order {order} is not an even power of two"
            )));
        }
        let side = 1u32 << (order.trailing_zeros() / 2);
        let levels: Vec<f64> = (0..side)
            .map(|k| k as f64 - (side as f64 - 1.0) / 2.0)
            .collect();
        let points: Vec<C64> = levels
            .iter()
            .flat_map(|&re| levels.iter().map(move |&im| C64::new(re, im)))
            .collect();
        let avg_energy = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len() as f64;
        Ok(Self {
            order,
            side,
            points,
            avg_energy,
        })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Number of levels per real dimension.
    pub fn side(&self) -> u32 {
        self.side
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.order.trailing_zeros()
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    /// Mean of `|p|^2` over the constellation.
    pub fn avg_energy(&self) -> f64 {
        self.avg_energy
    }

    /// Integer range `lo..=hi` of a real coordinate after removing the 1/2 offset.
    pub fn integer_range(&self) -> (i64, i64) {
        let half = (self.side / 2) as i64;
        (-half, half - 1)
    }

    pub fn contains(&self, p: C64) -> bool {
        let (lo, hi) = self.integer_range();
        let ok = |v: f64| {
            let x = v - 0.5;
            x.fract() == 0.0 && x >= lo as f64 && x <= hi as f64
        };
        ok(p.re) && ok(p.im)
    }
}

/// A Golden codeword together with the symbols that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenCodeword {
    pub symbols: [C64; 4],
    pub matrix: Matrix2<C64>,
}

impl GoldenCodeword {
    pub fn zero() -> Self {
        encode(C64::default(), C64::default(), C64::default(), C64::default())
    }

    pub fn energy(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }
}

pub fn encode(a: C64, b: C64, c: C64, d: C64) -> GoldenCodeword {
    let k = constants();
    let i = C64::i();
    let s = k.scale;
    let matrix = Matrix2::new(
        k.alpha * (a + b * k.theta) * s,
        k.alpha * (c + d * k.theta) * s,
        i * k.alpha_bar * (c + d * k.theta_bar) * s,
        k.alpha_bar * (a + b * k.theta_bar) * s,
    );
    GoldenCodeword {
        symbols: [a, b, c, d],
        matrix,
    }
}

/// Encodes a real symbol vector `(Re a, Im a, ..., Im d)`.
pub fn encode_real(s: &[f64; 8]) -> GoldenCodeword {
    encode(
        C64::new(s[0], s[1]),
        C64::new(s[2], s[3]),
        C64::new(s[4], s[5]),
        C64::new(s[6], s[7]),
    )
}

/// `det((X - Y)(X - Y)^H)`.
pub fn det_distance(x: &GoldenCodeword, y: &GoldenCodeword) -> f64 {
    let diff = x.matrix - y.matrix;
    let a = diff * diff.adjoint();
    (a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)]).re
}

/// `|det(X - Y)|^2`, equal to [`det_distance`] for 2x2 matrices.
pub fn det_distance_direct(x: &GoldenCodeword, y: &GoldenCodeword) -> f64 {
    let diff = x.matrix - y.matrix;
    diff.determinant().norm_sqr()
}

pub fn vectorize(m: &Matrix2<C64>) -> Vector8 {
    Vector8::from_column_slice(&[
        m[(0, 0)].re,
        m[(0, 0)].im,
        m[(1, 0)].re,
        m[(1, 0)].im,
        m[(0, 1)].re,
        m[(0, 1)].im,
        m[(1, 1)].re,
        m[(1, 1)].im,
    ])
}

pub fn devectorize(v: &Vector8) -> Matrix2<C64> {
    Matrix2::new(
        C64::new(v[0], v[1]),
        C64::new(v[4], v[5]),
        C64::new(v[2], v[3]),
        C64::new(v[6], v[7]),
    )
}

/// Real 8x8 generator: `vec(X) = G * s` for the real symbol vector `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenGenerator {
    pub matrix: Matrix8,
}

impl GoldenGenerator {
    pub fn apply(&self, s: &Vector8) -> Vector8 {
        self.matrix * s
    }
}

pub fn generator_matrix() -> &'static GoldenGenerator {
    static GENERATOR: OnceLock<GoldenGenerator> = OnceLock::new();
    GENERATOR.get_or_init(|| {
        let mut matrix = Matrix8::zeros();
        for j in 0..8 {
            let mut e = [0.0; 8];
            e[j] = 1.0;
            let col = vectorize(&encode_real(&e).matrix);
            matrix.set_column(j, &col);
        }
        GoldenGenerator { matrix }
    })
}

/// Exact `|det X|^2 / delta` for an integer symbol-difference vector.
///
/// `5 |det X|^2 = |(a^2 + ab - b^2) - i (c^2 + cd - d^2)|^2` with `a..d` Gaussian
/// integers, so the result is the norm of a Gaussian integer.
pub fn det_units(x: &Point8) -> u64 {
    let a = Complex::new(x[0], x[1]);
    let b = Complex::new(x[2], x[3]);
    let c = Complex::new(x[4], x[5]);
    let d = Complex::new(x[6], x[7]);
    let n1 = a * a + a * b - b * b;
    let n2 = c * c + c * d - d * d;
    let g = n1 - Complex::new(0, 1) * n2;
    g.norm_sqr() as u64
}

/// Exhaustive minimum of `|det X(v)|^2` over nonzero `v` with coordinates in
/// `[-bound, bound]`, evaluated through [`encode`].
pub fn min_det_search(bound: u32) -> Result<f64> {
    if bound == 0 {
        return Err(Error::invalid("min_det_search bound must be at least 1"));
    }
    let b = bound as i64;
    let zero = GoldenCodeword::zero();
    let mut best = f64::INFINITY;
    for_each_in_box(-b, b, |v| {
        if v.iter().all(|&c| c == 0) {
            return;
        }
        let s = v.map(|c| c as f64);
        let d = det_distance_direct(&encode_real(&s), &zero);
        if d < best {
            best = d;
        }
    });
    Ok(best)
}

/// Calls `f` for every point of `[lo, hi]^8`, first coordinate varying slowest.
pub fn for_each_in_box(lo: i64, hi: i64, mut f: impl FnMut(&Point8)) {
    if lo > hi {
        return;
    }
    let mut v = [lo; 8];
    loop {
        f(&v);
        let mut k = 7;
        loop {
            if v[k] < hi {
                v[k] += 1;
                break;
            }
            v[k] = lo;
            if k == 0 {
                return;
            }
            k -= 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn constants_satisfy_golden_identities() {
        let k = constants();
        assert!((k.theta + k.theta_bar - 1.0).abs() < 1e-14);
        assert!((k.theta * k.theta_bar + 1.0).abs() < 1e-14);
        let prod = k.alpha * k.alpha_bar;
        assert!((prod - c(2.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn qam16_grid_and_energy() {
        let q = QamConstellation::square(16).unwrap();
        assert_eq!(q.points().len(), 16);
        assert_eq!(q.side(), 4);
        assert!((q.avg_energy() - 2.5).abs() < 1e-15);
        for p in q.points() {
            let off = *p - c(0.5, 0.5);
            assert_eq!(off.re.fract(), 0.0);
            assert_eq!(off.im.fract(), 0.0);
            assert!(q.contains(*p));
        }
        assert!(!q.contains(c(2.5, 0.5)));
        assert_eq!(q.integer_range(), (-2, 1));
        assert!(QamConstellation::square(8).is_err());
        assert!(QamConstellation::square(2).is_err());
    }

    #[test]
    fn zero_symbols_give_zero_matrix() {
        assert_eq!(GoldenCodeword::zero().matrix, Matrix2::zeros());
    }

    #[test]
    fn unit_symbol_codeword() {
        let k = constants();
        let x = encode(c(1.0, 0.0), C64::default(), C64::default(), C64::default());
        let s = k.scale;
        assert!((x.matrix[(0, 0)] - k.alpha * s).norm() < 1e-15);
        assert!((x.matrix[(1, 1)] - k.alpha_bar * s).norm() < 1e-15);
        assert_eq!(x.matrix[(0, 1)], C64::default());
        assert_eq!(x.matrix[(1, 0)], C64::default());
        assert!((x.matrix.determinant().norm_sqr() - 0.2).abs() < 1e-14);
    }

    #[test]
    fn det_distance_examples() {
        let zero = GoldenCodeword::zero();
        assert_eq!(det_distance(&zero, &zero), 0.0);
        let e1 = encode(c(1.0, 0.0), C64::default(), C64::default(), C64::default());
        assert!((det_distance(&e1, &zero) - 0.2).abs() < 1e-14);
        // det is quadratic in the symbols: scaling a by (1+i) scales |det|^2 by |1+i|^4
        let e2 = encode(c(1.0, 1.0), C64::default(), C64::default(), C64::default());
        assert!((det_distance(&e2, &zero) - 0.8).abs() < 1e-14);
        let e3 = encode(c(1.0, 0.0), C64::default(), C64::default(), c(1.0, 0.0));
        assert!((det_distance(&e3, &zero) - 0.4).abs() < 1e-14);
        assert_eq!(det_units(&[1, 0, 0, 0, 0, 0, 0, 0]), 1);
        assert_eq!(det_units(&[1, 1, 0, 0, 0, 0, 0, 0]), 4);
        assert_eq!(det_units(&[1, 0, 0, 0, 0, 0, 1, 0]), 2);
    }

    #[test]
    fn det_identity_and_energy_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let q = QamConstellation::square(16).unwrap();
        let pick = |rng: &mut ChaCha8Rng| q.points()[rng.random_range(0..16)];
        for _ in 0..10_000 {
            let x = encode(pick(&mut rng), pick(&mut rng), pick(&mut rng), pick(&mut rng));
            let y = encode(pick(&mut rng), pick(&mut rng), pick(&mut rng), pick(&mut rng));
            assert!((det_distance(&x, &y) - det_distance_direct(&x, &y)).abs() < 1e-12);
            let sym: f64 = x.symbols.iter().map(|s| s.norm_sqr()).sum();
            assert!((x.energy() - sym).abs() < 1e-10);
        }
    }

    #[test]
    fn integer_det_matches_float_det() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let zero = GoldenCodeword::zero();
        for _ in 0..2000 {
            let v: Point8 = std::array::from_fn(|_| rng.random_range(-3..=3));
            let x = encode_real(&v.map(|c| c as f64));
            let exact = det_units(&v) as f64 * DELTA;
            assert!((det_distance(&x, &zero) - exact).abs() < 1e-9 * exact.max(1.0));
        }
    }

    #[test]
    fn generator_is_orthogonal() {
        let g = generator_matrix().matrix;
        let gram = g.transpose() * g;
        assert!((gram - Matrix8::identity()).abs().max() < 1e-12);
        assert!((g.determinant().abs() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn generator_columns_are_unit_codewords() {
        let g = generator_matrix();
        let mut e = [0.0; 8];
        e[0] = 1.0;
        let direct = vectorize(&encode_real(&e).matrix);
        let via = g.apply(&Vector8::from_column_slice(&e));
        assert!((direct - via).norm() < 1e-15);
        assert_eq!(devectorize(&direct), encode_real(&e).matrix);
    }

    #[test]
    fn generator_preserves_integer_norms() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = generator_matrix();
        for _ in 0..100 {
            let u = Vector8::from_fn(|_, _| rng.random_range(-5..=5) as f64);
            assert!((g.apply(&u).norm() - u.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn min_det_search_small_bounds() {
        assert!(min_det_search(0).is_err());
        assert!((min_det_search(1).unwrap() - 0.2).abs() < 1e-9);
    }

    #[test]
    fn box_iteration_visits_every_point() {
        let mut n = 0;
        for_each_in_box(-1, 1, |_| n += 1);
        assert_eq!(n, 6561);
    }
}
