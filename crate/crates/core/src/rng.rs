//! Seedable, portable pseudo-randomness for sampling and tests.
//!
//! Everything random in this crate flows through [`Rng`], a xoshiro256**
//! generator seeded through SplitMix64. Both algorithms are fixed by their
//! published reference implementations, so a `(seed, stream)` pair produces
//! the same byte sequence on every platform and toolchain. That is what makes
//! the verification suite reproducible: test corpora are regenerated from
//! seeds, never stored.
//!
//! Streams: `Rng::new(seed, stream)` mixes the stream index into the seed
//! before state expansion, giving independent sequences for independent
//! purposes (state sampling, channel sampling, shuffling, ...) without
//! coordinating offsets. Stream constants used by the library are defined
//! where they are used and documented there.

use num_complex::Complex64;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 step: advances `state` and returns the next output.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// xoshiro256** generator with Box-Muller Gaussian sampling.
#[derive(Clone, Debug)]
pub struct Rng {
    s: [u64; 4],
    spare_gauss: Option<f64>,
}

impl Rng {
    /// Creates a generator for `(seed, stream)`. Distinct streams from the
    /// same seed are statistically independent.
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut sm = seed ^ stream.wrapping_mul(GOLDEN).rotate_left(17);
        let mut s = [0u64; 4];
        for w in &mut s {
            *w = splitmix64(&mut sm);
        }
        // The all-zero state is the one invalid xoshiro state.
        if s == [0, 0, 0, 0] {
            s[0] = GOLDEN;
        }
        Rng { s, spare_gauss: None }
    }

    /// Next raw 64-bit output.
    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform double in `(0, 1]` with 53 random bits. The open lower end
    /// keeps `ln(u)` finite for exponential and Box-Muller sampling.
    pub fn u01(&mut self) -> f64 {
        let bits = self.next_u64() >> 11;
        (bits as f64 + 1.0) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform integer in `0..n`. Rejection sampling keeps it exactly uniform.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0) is meaningless");
        let n64 = n as u64;
        let zone = u64::MAX - (u64::MAX % n64);
        loop {
            let v = self.next_u64();
            if v < zone {
                return (v % n64) as usize;
            }
        }
    }

    /// Standard normal via Box-Muller; pairs are computed together and the
    /// spare is cached.
    pub fn gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare_gauss.take() {
            return z;
        }
        let u1 = self.u01();
        let u2 = self.u01();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare_gauss = Some(r * s);
        r * c
    }

    /// Standard complex normal: independent N(0, 1/2) real and imaginary
    /// parts, so `E|z|^2 = 1`.
    pub fn complex_gaussian(&mut self) -> Complex64 {
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        Complex64::new(self.gaussian() * scale, self.gaussian() * scale)
    }

    /// Exponential(1) sample.
    pub fn exponential(&mut self) -> f64 {
        -self.u01().ln()
    }

    /// Flat Dirichlet sample of length `n`: normalized exponentials.
    pub fn dirichlet(&mut self, n: usize) -> Vec<f64> {
        let mut w: Vec<f64> = (0..n).map(|_| self.exponential()).collect();
        let total: f64 = w.iter().sum();
        for x in &mut w {
            *x /= total;
        }
        w
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i + 1);
            xs.swap(i, j);
        }
    }

    /// Uniformly random permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        self.shuffle(&mut p);
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_across_instances() {
        let mut a = Rng::new(42, 7);
        let mut b = Rng::new(42, 7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn streams_differ() {
        let mut a = Rng::new(42, 0);
        let mut b = Rng::new(42, 1);
        let same = (0..64).filter(|_| a.next_u64() == b.next_u64()).count();
        assert!(same < 4, "streams should decorrelate, {same} collisions");
    }

    #[test]
    fn u01_in_range_and_gaussian_moments() {
        let mut r = Rng::new(3, 0);
        let n = 20_000;
        let mut mean = 0.0;
        let mut var = 0.0;
        for _ in 0..n {
            let u = r.u01();
            assert!(u > 0.0 && u <= 1.0);
            let z = r.gaussian();
            mean += z;
            var += z * z;
        }
        mean /= n as f64;
        var /= n as f64;
        assert!(mean.abs() < 0.03, "gaussian mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "gaussian variance {var}");
    }

    #[test]
    fn dirichlet_normalizes() {
        let mut r = Rng::new(11, 2);
        let w = r.dirichlet(5);
        let s: f64 = w.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!(w.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn below_is_in_range() {
        let mut r = Rng::new(5, 9);
        for _ in 0..1000 {
            assert!(r.below(7) < 7);
        }
    }
}
