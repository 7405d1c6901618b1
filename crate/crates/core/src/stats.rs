//! Monte Carlo bookkeeping: seeded streams, running moments and a
//! deterministic batch-parallel driver.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Replicates per RNG stream.
pub const BATCH: usize = 4096;

/// Default master seed ("LEVY").
pub const DEFAULT_SEED: u64 = 0x4C45_5659;

pub type SimRng = ChaCha12Rng;

/// Derivation of independent random streams from a master seed.
///
/// The key of a stream is `(master, label)` and its stream number is the
/// replicate batch, so the sample drawn for replicate `i` never depends on
/// which worker runs it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPolicy {
    pub master: u64,
    #[serde(default)]
    pub label: u64,
}

impl Default for SeedPolicy {
    fn default() -> Self {
        SeedPolicy::new(DEFAULT_SEED)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeedPolicy {
    pub fn new(master: u64) -> Self {
        SeedPolicy { master, label: 0 }
    }

    /// Independent sub-policy, e.g. one per t-point or per state.
    pub fn child(&self, key: u64) -> Self {
        SeedPolicy {
            master: self.master,
            label: splitmix(self.label ^ splitmix(key)),
        }
    }

    pub fn rng(&self, batch: u64) -> SimRng {
        let mut seed = [0u8; 32];
        seed[..8].copy_from_slice(&self.master.to_le_bytes());
        seed[8..16].copy_from_slice(&self.label.to_le_bytes());
        let mut rng = SimRng::from_seed(seed);
        rng.set_stream(batch);
        rng
    }
}

/// Running mean and sum of squared deviations.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Welford {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Chan et al. pairwise combination.
    pub fn merge(self, other: Welford) -> Welford {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let (na, nb) = (self.n as f64, other.n as f64);
        Welford {
            n,
            mean: self.mean + delta * nb / n as f64,
            m2: self.m2 + other.m2 + delta * delta * na * nb / n as f64,
        }
    }

    pub fn estimate(&self) -> MCEstimate {
        let var = if self.n > 1 { self.m2 / (self.n - 1) as f64 } else { 0.0 };
        MCEstimate {
            mean: self.mean,
            stderr: (var.max(0.0) / self.n.max(1) as f64).sqrt(),
            n: self.n,
        }
    }
}

/// Sample mean with `stderr = sd / √N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
}

impl MCEstimate {
    pub fn scale(self, s: f64) -> MCEstimate {
        MCEstimate {
            mean: self.mean * s,
            stderr: self.stderr * s.abs(),
            n: self.n,
        }
    }

    pub fn shift(self, c: f64) -> MCEstimate {
        MCEstimate {
            mean: self.mean + c,
            ..self
        }
    }
}

/// Runs `n` replicates of `sample`, which writes `k` statistics per
/// replicate. Batches run in parallel and are reduced in batch order.
pub fn monte_carlo_multi<F>(n: usize, k: usize, seeds: &SeedPolicy, sample: F) -> Vec<MCEstimate>
where
    F: Fn(&mut SimRng, &mut [f64]) + Sync,
{
    let batches = n.div_ceil(BATCH);
    let parts: Vec<Vec<Welford>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = seeds.rng(b as u64);
            let len = BATCH.min(n - b * BATCH);
            let mut acc = vec![Welford::default(); k];
            let mut buf = vec![0.0; k];
            for _ in 0..len {
                sample(&mut rng, &mut buf);
                for (w, v) in acc.iter_mut().zip(&buf) {
                    w.push(*v);
                }
            }
            acc
        })
        .collect();
    let mut total = vec![Welford::default(); k];
    for part in parts {
        for (t, p) in total.iter_mut().zip(part) {
            *t = t.merge(p);
        }
    }
    total.iter().map(Welford::estimate).collect()
}

pub fn monte_carlo<F>(n: usize, seeds: &SeedPolicy, sample: F) -> MCEstimate
where
    F: Fn(&mut SimRng) -> f64 + Sync,
{
    monte_carlo_multi(n, 1, seeds, |rng, out| out[0] = sample(rng))[0]
}

/// Draws `n` values in replicate order.
pub fn draw<T, F>(n: usize, seeds: &SeedPolicy, sample: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut SimRng) -> T + Sync,
{
    let batches = n.div_ceil(BATCH);
    (0..batches)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = seeds.rng(b as u64);
            let len = BATCH.min(n - b * BATCH);
            (0..len).map(|_| sample(&mut rng)).collect::<Vec<_>>()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let mut one = Welford::default();
        xs.iter().for_each(|x| one.push(*x));
        let mut a = Welford::default();
        let mut b = Welford::default();
        xs[..313].iter().for_each(|x| a.push(*x));
        xs[313..].iter().for_each(|x| b.push(*x));
        let two = a.merge(b);
        assert_eq!(one.n, two.n);
        assert!((one.mean - two.mean).abs() < 1e-12);
        assert!((one.m2 - two.m2).abs() < 1e-9 * one.m2);
    }

    #[test]
    fn constant_samples_have_zero_stderr() {
        let e = monte_carlo(10_000, &SeedPolicy::default(), |_| 0.25);
        assert_eq!(e.mean, 0.25);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let seeds = SeedPolicy::new(7).child(3);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| monte_carlo(50_000, &seeds, |r| r.random::<f64>()))
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn children_are_distinct() {
        let s = SeedPolicy::new(1);
        let a: f64 = s.child(1).rng(0).random();
        let b: f64 = s.child(2).rng(0).random();
        let c: f64 = s.child(1).rng(1).random();
        assert!(a != b && a != c);
    }
}
