//! Uniform sampling in the m-ball with reproducible, independently keyed
//! random streams.
//!
//! # Stream derivation
//!
//! A [`StreamSpec`] `(seed, worker, chunk)` keys a ChaCha8 generator with the
//! 32-byte seed
//!
//! ```text
//! seed.to_le_bytes() || worker.to_le_bytes() || chunk.to_le_bytes() || STREAM_DOMAIN.to_le_bytes()
//! ```
//!
//! so the mapping is injective and independent of platform, thread count and
//! scheduling. The Monte Carlo engine keys chunk streams on the global chunk
//! index with `worker = 0`; the worker slot is free for independent replicas.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

/// Fixed tag in the last eight key bytes of every stream.
pub const STREAM_DOMAIN: u64 = 0x7365_7070_726f_6231; // "sepprob1"

/// Smallest positive value of the 53-bit uniform draw; replaces an exact 0.
const MIN_UNIFORM: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamSpec {
    pub seed: u64,
    pub worker: u64,
    pub chunk: u64,
}

pub fn derive_stream(seed: u64, worker: u64, chunk: u64) -> StreamSpec {
    StreamSpec { seed, worker, chunk }
}

impl StreamSpec {
    pub fn key(&self) -> [u8; 32] {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.worker.to_le_bytes());
        key[16..24].copy_from_slice(&self.chunk.to_le_bytes());
        key[24..32].copy_from_slice(&STREAM_DOMAIN.to_le_bytes());
        key
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(self.key())
    }
}

/// Draws points uniformly from the closed ball of `radius` in `dim`
/// dimensions: a Gaussian direction scaled by `radius * U^(1/dim)`.
#[derive(Clone, Debug)]
pub struct BallSampler {
    dim: usize,
    radius: f64,
    rng: ChaCha8Rng,
}

impl BallSampler {
    pub fn new(dim: usize, radius: f64, stream: StreamSpec) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("ball dimension must be at least 1".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "ball radius must be positive and finite, got {radius}"
            )));
        }
        Ok(BallSampler {
            dim,
            radius,
            rng: stream.rng(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Overwrites `out` (of length `dim`) with the next point.
    pub fn fill(&mut self, out: &mut [f64]) {
        assert_eq!(out.len(), self.dim);
        let norm_sqr = loop {
            let mut s = 0.0;
            for x in out.iter_mut() {
                *x = self.rng.sample(StandardNormal);
                s += *x * *x;
            }
            if s > 0.0 {
                break s;
            }
        };
        let mut u: f64 = self.rng.random();
        if u == 0.0 {
            u = MIN_UNIFORM;
        }
        let scale = self.radius * u.powf(1.0 / self.dim as f64) / norm_sqr.sqrt();
        for x in out.iter_mut() {
            *x *= scale;
        }
        // Round-off can push a point a few ulps past the boundary.
        let r2 = self.radius * self.radius;
        while out.iter().map(|x| x * x).sum::<f64>() > r2 {
            for x in out.iter_mut() {
                *x *= 1.0 - f64::EPSILON;
            }
        }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        self.fill(&mut v);
        v
    }
}

/// `count` independent uniform points in the `dim`-ball of `radius`.
pub fn sample_ball(dim: usize, radius: f64, stream: StreamSpec, count: usize) -> Result<Vec<Vec<f64>>> {
    let mut sampler = BallSampler::new(dim, radius, stream)?;
    Ok((0..count).map(|_| sampler.next_point()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argument_checks() {
        let s = derive_stream(1, 0, 0);
        assert!(sample_ball(0, 1.0, s, 1).is_err());
        assert!(sample_ball(3, 0.0, s, 1).is_err());
        assert!(sample_ball(3, -1.0, s, 1).is_err());
        assert!(sample_ball(3, f64::NAN, s, 1).is_err());
        assert!(sample_ball(3, 1.0, s, 0).unwrap().is_empty());
    }

    #[test]
    fn points_stay_in_ball() {
        for (dim, radius) in [(1, 0.5), (9, 0.75f64.sqrt()), (15, 0.75f64.sqrt()), (27, 0.875f64.sqrt())] {
            let pts = sample_ball(dim, radius, derive_stream(7, 0, dim as u64), 20_000).unwrap();
            for p in &pts {
                assert_eq!(p.len(), dim);
                assert!(p.iter().map(|x| x * x).sum::<f64>() <= radius * radius);
            }
        }
    }

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let a = sample_ball(15, 1.0, derive_stream(42, 0, 0), 10_000).unwrap();
        let b = sample_ball(15, 1.0, derive_stream(42, 0, 0), 10_000).unwrap();
        let c = sample_ball(15, 1.0, derive_stream(42, 0, 1), 1).unwrap();
        let d = sample_ball(15, 1.0, derive_stream(42, 1, 0), 1).unwrap();
        let bits = |v: &Vec<Vec<f64>>| -> Vec<u64> { v.iter().flatten().map(|x| x.to_bits()).collect() };
        assert_eq!(bits(&a), bits(&b));
        assert_ne!(a[0], c[0]);
        assert_ne!(a[0], d[0]);
    }

    #[test]
    fn keys_are_injective() {
        let specs = [
            derive_stream(0, 0, 1),
            derive_stream(0, 1, 0),
            derive_stream(1, 0, 0),
            derive_stream(1 << 32, 0, 0),
        ];
        for (i, a) in specs.iter().enumerate() {
            for b in &specs[i + 1..] {
                assert_ne!(a.key(), b.key());
            }
        }
    }

    #[test]
    fn value_stability() {
        // Pins the stream derivation and the sampling recipe across releases.
        let p = sample_ball(3, 1.0, derive_stream(0, 0, 0), 2).unwrap();
        assert_eq!(
            p,
            [
                [0.009666246757333637, -0.1576534409815454, 0.9274241105009398],
                [-0.21474130341068154, -0.6704882775684475, 0.3415777561198839],
            ]
        );
    }
}
