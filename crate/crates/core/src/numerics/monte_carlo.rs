//! Seeded Monte Carlo integration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{invalid, Result};

/// Deterministic random stream. Identical seeds give bit-identical samples
/// on every platform.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        RandomSource {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream `k` derived from the same seed, for handing to
    /// worker threads without sharing state.
    pub fn substream(&self, k: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(k + 1);
        RandomSource {
            seed: self.seed,
            rng,
        }
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform point on the unit sphere `S^{d-1}`.
    pub fn unit_vector(&mut self, out: &mut [f64]) {
        loop {
            let mut norm2 = 0.0;
            for x in out.iter_mut() {
                *x = self.normal();
                norm2 += *x * *x;
            }
            if norm2 > 1e-20 {
                let inv = norm2.sqrt().recip();
                out.iter_mut().for_each(|x| *x *= inv);
                return;
            }
        }
    }
}

/// A region that can be sampled uniformly and whose volume is known.
pub trait RegionSampler {
    fn dim(&self) -> usize;
    fn volume(&self) -> f64;
    fn sample_into(&self, rng: &mut RandomSource, out: &mut [f64]);
}

/// Mean-times-volume estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Welford accumulator for sample mean and variance.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningMean {
    n: usize,
    mean: f64,
    m2: f64,
}

impl RunningMean {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
    }
}

pub fn mc_integrate<F, S>(
    mut f: F,
    sampler: &S,
    n_samples: usize,
    rng: &mut RandomSource,
) -> Result<McEstimate>
where
    F: FnMut(&[f64]) -> f64,
    S: RegionSampler + ?Sized,
{
    if n_samples == 0 {
        return Err(invalid("Monte Carlo needs at least one sample"));
    }
    let vol = sampler.volume();
    let mut point = vec![0.0; sampler.dim()];
    let mut acc = RunningMean::default();
    for _ in 0..n_samples {
        sampler.sample_into(rng, &mut point);
        acc.push(f(&point));
    }
    Ok(McEstimate {
        value: vol * acc.mean(),
        std_error: vol * acc.std_error(),
        samples: n_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct UnitSquare;
    impl RegionSampler for UnitSquare {
        fn dim(&self) -> usize {
            2
        }
        fn volume(&self) -> f64 {
            1.0
        }
        fn sample_into(&self, rng: &mut RandomSource, out: &mut [f64]) {
            out[0] = rng.uniform();
            out[1] = rng.uniform();
        }
    }

    #[test]
    fn zero_samples_rejected() {
        let mut rng = RandomSource::new(1);
        assert!(mc_integrate(|_| 1.0, &UnitSquare, 0, &mut rng).is_err());
    }

    #[test]
    fn identical_seeds_identical_bits() {
        let run = || {
            let mut rng = RandomSource::new(99);
            mc_integrate(|p| p[0] * p[1], &UnitSquare, 1000, &mut rng).unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    }

    #[test]
    fn substreams_differ() {
        let base = RandomSource::new(5);
        let mut a = base.substream(0);
        let mut b = base.substream(1);
        assert_ne!(a.uniform().to_bits(), b.uniform().to_bits());
    }

    #[test]
    fn product_mean() {
        let mut rng = RandomSource::new(3);
        let est = mc_integrate(|p| p[0] * p[1], &UnitSquare, 100_000, &mut rng).unwrap();
        assert!((est.value - 0.25).abs() < 3.0 * est.std_error);
    }
}
