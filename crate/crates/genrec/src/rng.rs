//! Deterministic, platform-independent randomness.
//!
//! The generator is xoshiro256** seeded through splitmix64, with normal
//! deviates from the Box-Muller transform. The exact algorithms are fixed so
//! that golden values recorded in tests stay valid on every platform.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Seeded pseudo-random generator (xoshiro256**).
#[derive(Debug, Clone)]
pub struct SeededRng {
    state: [u64; 4],
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        // splitmix64 expansion of the seed into the four state words.
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = s;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^ (z >> 31)
        };
        SeededRng {
            state: [next(), next(), next(), next()],
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.state[1]
            .wrapping_mul(5)
            .rotate_left(7)
            .wrapping_mul(9);
        let t = self.state[1] << 17;
        self.state[2] ^= self.state[0];
        self.state[3] ^= self.state[1];
        self.state[1] ^= self.state[2];
        self.state[0] ^= self.state[3];
        self.state[2] ^= t;
        self.state[3] = self.state[3].rotate_left(45);
        result
    }

    /// Uniform in [0, 1), 53-bit resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, bound) by rejection, free of modulo bias.
    pub fn next_index(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "next_index bound must be positive");
        let bound = bound as u64;
        let zone = u64::MAX - (u64::MAX % bound);
        loop {
            let x = self.next_u64();
            if x < zone {
                return (x % bound) as usize;
            }
        }
    }

    /// Standard normal deviate via Box-Muller. Each call consumes exactly two
    /// uniform draws.
    pub fn next_normal(&mut self) -> f64 {
        // u1 in (0, 1] so the log is finite.
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// `count` indices sampled uniformly without replacement from [0, n),
    /// returned sorted ascending. Partial Fisher-Yates.
    pub fn sample_without_replacement(&mut self, n: usize, count: usize) -> Vec<usize> {
        assert!(count <= n, "cannot sample {count} of {n}");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..count {
            let j = i + self.next_index(n - i);
            pool.swap(i, j);
        }
        let mut picked = pool[..count].to_vec();
        picked.sort_unstable();
        picked
    }
}

/// Tensor of i.i.d. normal samples with the given standard deviation.
pub fn gaussian(rng: &mut SeededRng, shape: &[usize], stddev: f64) -> Result<Tensor> {
    if stddev <= 0.0 || !stddev.is_finite() {
        return Err(Error::invalid(format!("stddev must be positive, got {stddev}")));
    }
    let len: usize = shape.iter().product();
    let data: Vec<f64> = (0..len).map(|_| stddev * rng.next_normal()).collect();
    Tensor::new(shape.to_vec(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_seed_identical_stream() {
        let mut a = SeededRng::new(7);
        let mut b = SeededRng::new(7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn different_seeds_differ() {
        let mut a = SeededRng::new(1);
        let mut b = SeededRng::new(2);
        assert_ne!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn seed_42_golden_first_ten() {
        // Frozen from the first run of this generator; guards the algorithm
        // (and its portability) against accidental change.
        let mut rng = SeededRng::new(42);
        let got: Vec<u64> = (0..10).map(|_| rng.next_u64()).collect();
        let want: [u64; 10] = [
            1546998764402558742,
            6990951692964543102,
            12544586762248559009,
            17057574109182124193,
            18295552978065317476,
            14199186830065750584,
            13267978908934200754,
            15679888225317814407,
            14044878350692344958,
            10760895422300929085,
        ];
        assert_eq!(got, want);
    }

    #[test]
    fn sample_mean_within_lln_bound() {
        let mut rng = SeededRng::new(3);
        let stddev = 0.5;
        let n = 1_000_000;
        let mean: f64 = (0..n).map(|_| stddev * rng.next_normal()).sum::<f64>() / n as f64;
        // 4 sigma of the sample mean: 4 * stddev / sqrt(n) = 4*stddev/1e3.
        assert!(mean.abs() < 4.0 * stddev / 1.0e3, "mean {mean}");
    }

    #[test]
    fn gaussian_stddev_for_200_measurements() {
        // Dense operators with 200 rows draw entries at stddev sqrt(1/200).
        let stddev = (1.0f64 / 200.0).sqrt();
        assert!((stddev - 0.0707).abs() < 1e-4);
        let mut rng = SeededRng::new(11);
        let t = gaussian(&mut rng, &[200, 50], stddev).unwrap();
        let var: f64 =
            t.as_slice().iter().map(|x| x * x).sum::<f64>() / t.len() as f64;
        assert!((var - 1.0 / 200.0).abs() < 0.1 / 200.0, "var {var}");
    }

    #[test]
    fn gaussian_rejects_bad_stddev() {
        let mut rng = SeededRng::new(0);
        assert!(gaussian(&mut rng, &[2], 0.0).is_err());
        assert!(gaussian(&mut rng, &[2], -1.0).is_err());
    }

    #[test]
    fn sample_without_replacement_is_sorted_unique() {
        let mut rng = SeededRng::new(5);
        let picked = rng.sample_without_replacement(100, 30);
        assert_eq!(picked.len(), 30);
        assert!(picked.windows(2).all(|w| w[0] < w[1]));
        assert!(picked.iter().all(|&i| i < 100));
    }
}
