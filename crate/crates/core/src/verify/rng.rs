//! Seeded, splittable normal streams.
//!
//! A stream is identified by `(seed, stream)`. It is cut into fixed-size chunks
//! and chunk `c` is drawn from a ChaCha8 generator keyed by `(seed, stream)` at
//! stream position `c`, so any chunk can be regenerated independently and the
//! result never depends on how chunks are scheduled across threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::kernels::std_normal_quantile;
use crate::linalg::Covariance;

/// Samples per chunk.
pub const CHUNK_SIZE: u64 = 1 << 14;

/// Everything needed to regenerate a Monte Carlo sample stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub stream: u64,
    pub chunk_size: u64,
}

impl SeedRecord {
    pub fn new(seed: u64, stream: u64) -> Self {
        SeedRecord {
            seed,
            stream,
            chunk_size: CHUNK_SIZE,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Standard normal variates for one chunk, by inversion of uniforms.
pub struct NormalSource {
    rng: ChaCha8Rng,
}

impl NormalSource {
    pub fn for_chunk(record: SeedRecord, chunk: u64) -> Self {
        let key = splitmix64(record.seed ^ splitmix64(record.stream));
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.set_stream(chunk);
        NormalSource { rng }
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        std_normal_quantile(self.uniform())
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for x in out {
            *x = self.normal();
        }
    }
}

/// Draws `count` vectors `X = L Z ~ N(0, Σ)` chunk by chunk, folds each chunk
/// with `visit` into a fresh `init()` accumulator, and merges the chunk
/// accumulators in chunk order.
pub(crate) fn fold_samples<A, I, V, M>(
    sigma: &Covariance,
    count: u64,
    record: SeedRecord,
    init: I,
    visit: V,
    merge: M,
) -> A
where
    A: Send,
    I: Fn() -> A + Sync,
    V: Fn(&mut A, &[f64]) + Sync,
    M: Fn(A, A) -> A,
{
    let n = sigma.dim();
    let chunk_size = record.chunk_size;
    let chunks = count.div_ceil(chunk_size);
    let identity = sigma.is_identity();
    let l = sigma.cholesky();
    let partials: Vec<A> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            let mut src = NormalSource::for_chunk(record, c);
            let len = chunk_size.min(count - c * chunk_size);
            let mut z = vec![0.0; n];
            let mut x = vec![0.0; n];
            for _ in 0..len {
                src.fill_normal(&mut z);
                if identity {
                    visit(&mut acc, &z);
                } else {
                    for (i, xi) in x.iter_mut().enumerate() {
                        *xi = l.row(i)[..=i].iter().zip(&z).map(|(a, b)| a * b).sum();
                    }
                    visit(&mut acc, &x);
                }
            }
            acc
        })
        .collect();
    partials
        .into_iter()
        .reduce(merge)
        .unwrap_or_else(init)
}

/// A flat batch of samples, one row per draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    dim: usize,
    data: Vec<f64>,
}

impl Samples {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }
}

/// Materializes `count` draws of `N(0, Σ)` from stream `(seed, 0)`.
pub fn sample_gaussian(sigma: &Covariance, count: u64, seed: u64) -> Samples {
    let data = fold_samples(
        sigma,
        count,
        SeedRecord::new(seed, 0),
        Vec::new,
        |buf: &mut Vec<f64>, x| buf.extend_from_slice(x),
        |mut a, b| {
            a.extend(b);
            a
        },
    );
    Samples {
        dim: sigma.dim(),
        data,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunks_are_reproducible_and_distinct() {
        let rec = SeedRecord::new(7, 0);
        let a: Vec<f64> = {
            let mut s = NormalSource::for_chunk(rec, 3);
            (0..5).map(|_| s.normal()).collect()
        };
        let b: Vec<f64> = {
            let mut s = NormalSource::for_chunk(rec, 3);
            (0..5).map(|_| s.normal()).collect()
        };
        let c: Vec<f64> = {
            let mut s = NormalSource::for_chunk(rec, 4);
            (0..5).map(|_| s.normal()).collect()
        };
        let d: Vec<f64> = {
            let mut s = NormalSource::for_chunk(SeedRecord::new(7, 1), 3);
            (0..5).map(|_| s.normal()).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn uniform_is_open_interval() {
        let mut s = NormalSource::for_chunk(SeedRecord::new(1, 1), 0);
        for _ in 0..10_000 {
            let u = s.uniform();
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn identity_moments() {
        let n = 1_000_000u64;
        let s = sample_gaussian(&Covariance::identity(2), n, 2024);
        assert_eq!(s.len(), n as usize);
        let mut mean = [0.0; 2];
        let mut cov = [[0.0; 2]; 2];
        for x in s.iter() {
            for i in 0..2 {
                mean[i] += x[i];
                for j in 0..2 {
                    cov[i][j] += x[i] * x[j];
                }
            }
        }
        for i in 0..2 {
            mean[i] /= n as f64;
            assert!(mean[i].abs() < 4.0 / (n as f64).sqrt());
            for (j, c) in cov[i].iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((c / n as f64 - want).abs() < 5e-3);
            }
        }
    }

    #[test]
    fn diagonal_variances() {
        let n = 400_000u64;
        let sigma = Covariance::diagonal(&[4.0, 9.0]).unwrap();
        let s = sample_gaussian(&sigma, n, 5);
        for (i, want) in [4.0, 9.0].into_iter().enumerate() {
            let var = s.iter().map(|x| x[i] * x[i]).sum::<f64>() / n as f64;
            // Var of the sample variance of N(0, s²) is 2 s⁴ / n.
            let se = (2.0 * want * want / n as f64).sqrt();
            assert!((var - want).abs() < 4.0 * se, "coordinate {i}: {var}");
        }
    }

    #[test]
    fn partial_final_chunk() {
        let sigma = Covariance::identity(3);
        let count = CHUNK_SIZE + 17;
        let s = sample_gaussian(&sigma, count, 9);
        assert_eq!(s.len() as u64, count);
        let again = sample_gaussian(&sigma, count, 9);
        assert_eq!(s, again);
    }
}
