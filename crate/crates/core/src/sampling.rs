//! Seeded random points on a curve.

use crate::curve::{CurveSpec, DivisorPoint, Sheet, C64};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Mix a base seed with a stream label into an independent 64-bit seed.
pub fn derive_seed(base: u64, label: &[u64]) -> u64 {
    let mut z = base ^ 0x9E37_79B9_7F4A_7C15;
    for &l in label {
        z = z.wrapping_add(l.wrapping_mul(0xBF58_476D_1CE4_E5B9)).wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

/// Points with `x` in the annulus `1.2 M < |x| < 3 M` (`M` the largest branch
/// point modulus) on a random sheet.
pub struct PointSampler<'a> {
    curve: &'a CurveSpec,
    rng: ChaCha8Rng,
    inner: f64,
    outer: f64,
}

impl<'a> PointSampler<'a> {
    pub fn new(curve: &'a CurveSpec, seed: u64) -> PointSampler<'a> {
        let m = curve.max_branch_modulus().max(1e-3);
        PointSampler {
            curve,
            rng: ChaCha8Rng::seed_from_u64(seed),
            inner: 1.2 * m,
            outer: 3.0 * m,
        }
    }

    pub fn point(&mut self) -> DivisorPoint {
        let r = self.rng.gen_range(self.inner..self.outer);
        let phi = self.rng.gen_range(0.0..2.0 * PI);
        let sheet = if self.rng.gen_bool(0.5) { Sheet::Plus } else { Sheet::Minus };
        self.curve.point(C64::from_polar(r, phi), sheet)
    }

    /// `k` points whose `x` coordinates are pairwise separated.
    pub fn points(&mut self, k: usize) -> Vec<DivisorPoint> {
        let sep = 0.05 * self.inner;
        let mut out: Vec<DivisorPoint> = Vec::with_capacity(k);
        while out.len() < k {
            let p = self.point();
            if out.iter().all(|q| (q.x - p.x).norm() > sep) {
                out.push(p);
            }
        }
        out
    }

    pub fn unit(&mut self) -> f64 {
        self.rng.gen_range(-1.0..1.0)
    }

    pub fn vector(&mut self, g: usize, scale: f64) -> Vec<C64> {
        (0..g)
            .map(|_| C64::new(self.unit() * scale, self.unit() * scale))
            .collect()
    }
}
