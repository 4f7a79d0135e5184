//! Deterministic sampling. ChaCha8 keyed from a 64-bit seed gives the same
//! stream on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::types::Point;

#[derive(Clone, Debug)]
pub struct SeededSampler {
    rng: ChaCha8Rng,
}

impl SeededSampler {
    pub fn new(seed: u64) -> Self {
        SeededSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream `stream` under the same seed.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        SeededSampler { rng }
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `lo..=hi`.
    pub fn integer(&mut self, lo: i64, hi: i64) -> i64 {
        self.rng.gen_range(lo..=hi)
    }

    pub fn coin(&mut self) -> bool {
        self.rng.gen::<bool>()
    }

    /// Uniform point in the axis-aligned box `bounds[j] = (lo_j, hi_j)`.
    pub fn point_in_box(&mut self, bounds: &[(f64, f64)]) -> Point {
        Point::from_vec(bounds.iter().map(|&(lo, hi)| self.uniform_in(lo, hi)).collect())
    }

    /// Uniform direction on the unit sphere of `R^dim` (rejection from the cube).
    pub fn unit_vector(&mut self, dim: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..dim).map(|_| self.uniform_in(-1.0, 1.0)).collect();
            let n = crate::types::norm2(&v);
            if n > 1e-3 && n <= 1.0 {
                return v.into_iter().map(|c| c / n).collect();
            }
        }
    }
}
