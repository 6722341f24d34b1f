//! Deterministic pseudo-random generator for seeded sampling and tests.
//!
//! SplitMix64 is tiny, has no external state, and produces the same stream
//! on every platform, which keeps sampled reports and test fixtures
//! reproducible.

use crate::matrix::{C64, ComplexMatrix};

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in `0..bound`.
    pub fn next_index(&mut self, bound: usize) -> usize {
        (self.next_f64() * bound as f64) as usize % bound.max(1)
    }

    /// Standard normal via Box–Muller.
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = self.next_f64().max(1e-300);
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn complex_gaussian(&mut self) -> C64 {
        C64::new(self.next_gaussian(), self.next_gaussian())
    }

    /// Dense matrix with i.i.d. complex Gaussian entries.
    pub fn complex_matrix(&mut self, rows: usize, cols: usize) -> ComplexMatrix {
        let entries = (0..rows * cols).map(|_| self.complex_gaussian()).collect();
        ComplexMatrix::new(rows, cols, entries).expect("shape by construction")
    }

    /// Random Hermitian matrix `(G + G†)/2`.
    pub fn hermitian(&mut self, n: usize) -> ComplexMatrix {
        let g = self.complex_matrix(n, n);
        g.add(&g.dagger())
            .expect("same shape")
            .scale(C64::new(0.5, 0.0))
    }

    /// Random unit vector.
    pub fn unit_vector(&mut self, dim: usize) -> Vec<C64> {
        loop {
            let v: Vec<C64> = (0..dim).map(|_| self.complex_gaussian()).collect();
            let norm = v.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-6 {
                return v.iter().map(|e| e / C64::new(norm, 0.0)).collect();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_is_reproducible() {
        let mut a = SplitMix64::new(123);
        let mut b = SplitMix64::new(123);
        for _ in 0..32 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn unit_vector_is_normalized() {
        let mut rng = SplitMix64::new(9);
        let v = rng.unit_vector(5);
        let norm: f64 = v.iter().map(|e| e.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }
}
