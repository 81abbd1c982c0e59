//! The Monte Carlo estimator.
//!
//! A run of `samples` draws is cut into chunks of `chunk_size` (the last one
//! possibly shorter). Chunk `i` draws from the stream `(seed, 0, i)`, so a
//! chunk's tally is a pure function of `(case, seed, i, chunk_size)` and the
//! merged tally does not depend on how chunks are spread over workers.

mod checkpoint;

use std::ops::Range;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;

use crate::algebra::{is_psd, CMatrix};
use crate::sampler::{derive_stream, BallSampler, StreamSpec};
use crate::states::{CoeffVector, StateCase, POSITIVITY_TOL};
use crate::{Error, Result};

pub use checkpoint::{checkpoint_load, checkpoint_save, Checkpoint, CheckpointError, CHECKPOINT_VERSION};

pub const DEFAULT_CHUNK_SIZE: u64 = 1_000_000;

/// Draw counts of a run: all draws, draws that are density matrices, and
/// density matrices with a positive partial transpose.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct TallyCounts {
    pub n_total: u64,
    pub n_positive: u64,
    pub n_sep: u64,
}

impl TallyCounts {
    pub const ZERO: TallyCounts = TallyCounts {
        n_total: 0,
        n_positive: 0,
        n_sep: 0,
    };

    pub fn is_ordered(&self) -> bool {
        self.n_sep <= self.n_positive && self.n_positive <= self.n_total
    }

    /// Component-wise sum; overflow is an error, never a wrap.
    pub fn merge(self, other: TallyCounts) -> Result<TallyCounts> {
        let add = |a: u64, b: u64, field| a.checked_add(b).ok_or(Error::CounterOverflow { field });
        Ok(TallyCounts {
            n_total: add(self.n_total, other.n_total, "n_total")?,
            n_positive: add(self.n_positive, other.n_positive, "n_positive")?,
            n_sep: add(self.n_sep, other.n_sep, "n_sep")?,
        })
    }

    /// `n_sep / n_positive`.
    pub fn p_hat(&self) -> Option<f64> {
        (self.n_positive > 0).then(|| self.n_sep as f64 / self.n_positive as f64)
    }

    /// Binomial standard error of [`TallyCounts::p_hat`].
    pub fn std_err(&self) -> Option<f64> {
        self.p_hat()
            .map(|p| (p * (1.0 - p) / self.n_positive as f64).sqrt())
    }
}

pub fn merge(a: TallyCounts, b: TallyCounts) -> Result<TallyCounts> {
    a.merge(b)
}

/// Draws `chunk_size` points from the case's outsphere ball and tallies
/// positivity and PPT.
pub fn run_chunk(case: StateCase, stream: StreamSpec, chunk_size: u64) -> TallyCounts {
    let mut sampler =
        BallSampler::new(case.coeff_dim(), case.radius(), stream).expect("case dimensions are valid");
    let mut v = CoeffVector::zeros(case);
    let mut rho = CMatrix::zeros(case.dim());
    let mut tally = TallyCounts::ZERO;
    for _ in 0..chunk_size {
        sampler.fill(v.as_mut_slice());
        tally.n_total += 1;
        v.write_density(&mut rho);
        if !is_psd(&rho, POSITIVITY_TOL) {
            continue;
        }
        tally.n_positive += 1;
        v.partial_transpose_in_place();
        v.write_density(&mut rho);
        if is_psd(&rho, POSITIVITY_TOL) {
            tally.n_sep += 1;
        }
    }
    tally
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateResult {
    pub case: StateCase,
    pub tally: TallyCounts,
    pub p_hat: f64,
    pub std_err: f64,
    pub seed: u64,
    pub elapsed_secs: f64,
}

impl EstimateResult {
    pub fn from_tally(case: StateCase, seed: u64, tally: TallyCounts, elapsed_secs: f64) -> Result<Self> {
        match (tally.p_hat(), tally.std_err()) {
            (Some(p_hat), Some(std_err)) => Ok(EstimateResult {
                case,
                tally,
                p_hat,
                std_err,
                seed,
                elapsed_secs,
            }),
            _ => Err(Error::NoPositiveSamples {
                n_total: tally.n_total,
            }),
        }
    }
}

/// The chunk layout of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunPlan {
    pub case: StateCase,
    pub seed: u64,
    pub samples: u64,
    pub chunk_size: u64,
}

impl RunPlan {
    pub fn new(case: StateCase, seed: u64, samples: u64, chunk_size: u64) -> Result<Self> {
        if samples == 0 {
            return Err(Error::InvalidArgument("sample count must be at least 1".into()));
        }
        if chunk_size == 0 {
            return Err(Error::InvalidArgument("chunk size must be at least 1".into()));
        }
        Ok(RunPlan {
            case,
            seed,
            samples,
            chunk_size,
        })
    }

    pub fn n_chunks(&self) -> u64 {
        self.samples.div_ceil(self.chunk_size)
    }

    pub fn chunk_len(&self, chunk: u64) -> u64 {
        let start = chunk * self.chunk_size;
        self.chunk_size.min(self.samples.saturating_sub(start))
    }

    /// Number of draws in chunks `0..chunks`.
    pub fn draws_before(&self, chunks: u64) -> u64 {
        chunks
            .checked_mul(self.chunk_size)
            .map_or(self.samples, |n| n.min(self.samples))
    }

    pub fn stream(&self, chunk: u64) -> StreamSpec {
        derive_stream(self.seed, 0, chunk)
    }

    pub fn run_chunk(&self, chunk: u64) -> TallyCounts {
        run_chunk(self.case, self.stream(chunk), self.chunk_len(chunk))
    }

    /// Tallies the given chunks on the current rayon pool.
    pub fn run_chunks(&self, chunks: Range<u64>) -> Result<TallyCounts> {
        chunks
            .into_par_iter()
            .map(|i| Ok(self.run_chunk(i)))
            .try_reduce(|| TallyCounts::ZERO, merge)
    }

    fn check_resume(&self, c: &Checkpoint) -> std::result::Result<(), CheckpointError> {
        let mismatch = |what: String| Err(CheckpointError::Mismatch(what));
        if c.case != self.case {
            return mismatch(format!("case {} != {}", c.case, self.case));
        }
        if c.seed != self.seed {
            return mismatch(format!("seed {} != {}", c.seed, self.seed));
        }
        if c.chunk_size != self.chunk_size {
            return mismatch(format!("chunk_size {} != {}", c.chunk_size, self.chunk_size));
        }
        if c.chunks_done > self.n_chunks() {
            return mismatch(format!(
                "chunks_done {} exceeds the {} chunks of this run",
                c.chunks_done,
                self.n_chunks()
            ));
        }
        if c.tally.n_total != self.draws_before(c.chunks_done) {
            return mismatch(format!(
                "n_total {} != {} draws in {} chunks",
                c.tally.n_total,
                self.draws_before(c.chunks_done),
                c.chunks_done
            ));
        }
        Ok(())
    }
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(Error::InvalidArgument("worker count must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {workers} workers: {e}")))
}

/// Runs `n_total` draws in one go and reports `n_sep / n_positive`.
pub fn estimate(case: StateCase, seed: u64, n_total: u64, workers: usize, chunk_size: u64) -> Result<EstimateResult> {
    let plan = RunPlan::new(case, seed, n_total, chunk_size)?;
    let start = Instant::now();
    let tally = thread_pool(workers)?.install(|| plan.run_chunks(0..plan.n_chunks()))?;
    EstimateResult::from_tally(case, seed, tally, start.elapsed().as_secs_f64())
}

#[derive(Clone, Debug)]
pub struct CheckpointPolicy {
    pub path: PathBuf,
    /// Chunks between saves.
    pub every: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RunOutcome {
    Complete(EstimateResult),
    /// Stopped at the chunk limit; the checkpoint holds the progress so far.
    Suspended(Checkpoint),
}

/// A resumable run. With a checkpoint policy, an existing checkpoint file is
/// picked up and progress is saved after every `every` chunks.
#[derive(Clone, Debug)]
pub struct Runner {
    pub plan: RunPlan,
    pub workers: usize,
    pub checkpoint: Option<CheckpointPolicy>,
}

impl Runner {
    pub fn new(plan: RunPlan, workers: usize) -> Self {
        Runner {
            plan,
            workers,
            checkpoint: None,
        }
    }

    pub fn with_checkpoint(mut self, path: impl Into<PathBuf>, every: u64) -> Self {
        self.checkpoint = Some(CheckpointPolicy {
            path: path.into(),
            every: every.max(1),
        });
        self
    }

    /// Runs to completion, or until `max_chunks` chunks have been processed
    /// by this call.
    pub fn run(&self, max_chunks: Option<u64>) -> Result<RunOutcome> {
        let plan = &self.plan;
        let pool = thread_pool(self.workers)?;
        let start = Instant::now();

        let mut state = Checkpoint {
            case: plan.case,
            seed: plan.seed,
            chunk_size: plan.chunk_size,
            chunks_done: 0,
            tally: TallyCounts::ZERO,
        };
        if let Some(policy) = &self.checkpoint {
            if policy.path.exists() {
                let loaded = Checkpoint::load(&policy.path)?;
                plan.check_resume(&loaded)?;
                state = loaded;
            }
        }

        let total = plan.n_chunks();
        let stop = max_chunks.map_or(total, |m| total.min(state.chunks_done.saturating_add(m)));
        let batch = self.checkpoint.as_ref().map_or(total.max(1), |p| p.every);
        while state.chunks_done < stop {
            let end = stop.min(state.chunks_done.saturating_add(batch));
            let part = pool.install(|| plan.run_chunks(state.chunks_done..end))?;
            state.tally = state.tally.merge(part)?;
            state.chunks_done = end;
            if let Some(policy) = &self.checkpoint {
                state.save(&policy.path)?;
            }
        }

        if state.chunks_done < total {
            return Ok(RunOutcome::Suspended(state));
        }
        EstimateResult::from_tally(plan.case, plan.seed, state.tally, start.elapsed().as_secs_f64())
            .map(RunOutcome::Complete)
    }
}
