//! Seeded random sampling used by self-checks and verification sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{c, CMatrix, CVector};

/// Seed used by assembly-time self-checks.
pub const SELF_CHECK_SEED: u64 = 0x5eed_f0e5;

#[derive(Debug, Clone)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    pub fn index(&mut self, upper: usize) -> usize {
        self.rng.gen_range(0..upper)
    }

    /// Entries uniform on the square [−1, 1] × [−1, 1].
    pub fn complex_vector(&mut self, n: usize) -> CVector {
        CVector::from_fn(n, |_, _| {
            c(self.rng.gen_range(-1.0..1.0), self.rng.gen_range(-1.0..1.0))
        })
    }

    pub fn real_vector(&mut self, n: usize) -> CVector {
        CVector::from_fn(n, |_, _| c(self.rng.gen_range(-1.0..1.0), 0.0))
    }

    pub fn complex_matrix(&mut self, rows: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| {
            c(self.rng.gen_range(-1.0..1.0), self.rng.gen_range(-1.0..1.0))
        })
    }

    pub fn real_matrix(&mut self, rows: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| c(self.rng.gen_range(-1.0..1.0), 0.0))
    }

    /// Random Hermitian positive definite matrix `B B† + shift·I`.
    pub fn hpd_matrix(&mut self, n: usize, shift: f64) -> CMatrix {
        let b = self.complex_matrix(n, n);
        &b * b.adjoint() + CMatrix::identity(n, n) * c(shift, 0.0)
    }
}
