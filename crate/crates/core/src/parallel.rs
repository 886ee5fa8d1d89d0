//! Parallel batch verification.
//!
//! Runs of consecutive epochs are handed out to a pool of scoped worker
//! threads through a shared counter. Each worker derives the leaf seeds of
//! its run from the stack and sums each epoch's ephemeral keys; the
//! coordinator adds the per-epoch sums in epoch order and performs the single
//! group check.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::coarse::{self, EpochSignature, PublicKey};
use crate::error::{Error, Result};
use crate::group::{GroupElement, Scalar};
use crate::params::Suite;
use crate::seed::{self, SeedStack};
use crate::{epoch_challenge, EpochBatch};

/// Message bytes buffered by [`ChunkedChallenge`] before a parallel pass.
pub const CHUNK_BYTES: usize = 64 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpochKeyAggregate {
    pub epoch: u32,
    pub e: Scalar,
}

/// Epochs handed to a worker at a time; consecutive epochs share seed
/// derivations.
const EPOCHS_PER_TASK: usize = 64;

fn epoch_keys(suite: Suite, batches: &[EpochBatch<'_>], ds: &SeedStack) -> Vec<Result<Scalar>> {
    let epochs: Vec<u32> = batches.iter().map(|b| b.epoch).collect();
    batches
        .iter()
        .zip(seed::sr_many(suite, ds, &epochs))
        .map(|(b, leaf)| epoch_challenge(suite, &leaf?, &b.entries))
        .collect()
}

/// Per-epoch sums of ephemeral keys, in the order of `batches`.
///
/// The result does not depend on `workers`. When several epochs fail, the
/// error of the first one in `batches` is returned.
pub fn agg_ekeys(
    suite: Suite,
    batches: &[EpochBatch<'_>],
    ds: &SeedStack,
    workers: usize,
) -> Result<Vec<EpochKeyAggregate>> {
    if workers == 0 {
        return Err(Error::Workers);
    }
    let tasks: Vec<&[EpochBatch<'_>]> = batches.chunks(EPOCHS_PER_TASK).collect();
    let threads = workers.min(tasks.len());
    let results: Vec<Result<Scalar>> = if threads <= 1 {
        epoch_keys(suite, batches, ds)
    } else {
        let next = AtomicUsize::new(0);
        let slots = Mutex::new(vec![Vec::new(); tasks.len()]);
        std::thread::scope(|scope| {
            for _ in 0..threads {
                scope.spawn(|| {
                    let mut local = Vec::new();
                    loop {
                        let k = next.fetch_add(1, Ordering::Relaxed);
                        let Some(task) = tasks.get(k) else { break };
                        local.push((k, epoch_keys(suite, task, ds)));
                    }
                    let mut slots = slots.lock().unwrap();
                    for (k, r) in local {
                        slots[k] = r;
                    }
                });
            }
        });
        slots.into_inner().unwrap().into_iter().flatten().collect()
    };
    batches
        .iter()
        .zip(results)
        .map(|(b, e)| {
            e.map(|e| EpochKeyAggregate {
                epoch: b.epoch,
                e,
            })
        })
        .collect()
}

/// Parallel form of [`crate::aggregate_challenge`].
pub fn aggregate_challenge_parallel(
    suite: Suite,
    batches: &[EpochBatch<'_>],
    ds: &SeedStack,
    workers: usize,
) -> Result<Scalar> {
    Ok(agg_ekeys(suite, batches, ds, workers)?
        .iter()
        .map(|k| k.e)
        .sum())
}

/// Checks an aggregate tag `(s, commitment)` over arbitrary entry batches
/// with one double exponentiation.
pub fn verify_tag(
    suite: Suite,
    y: &GroupElement,
    commitment: &GroupElement,
    s: &Scalar,
    batches: &[EpochBatch<'_>],
    ds: &SeedStack,
    workers: usize,
) -> Result<bool> {
    let e = aggregate_challenge_parallel(suite, batches, ds, workers)?;
    Ok(coarse::check_tag(y, commitment, &e, s))
}

/// Parallel counterpart of [`coarse::aver`]; the decision is identical.
pub fn paver(pk: &PublicKey, batches: &[EpochBatch<'_>], sig: &EpochSignature, workers: usize) -> Result<bool> {
    if workers == 0 {
        return Err(Error::Workers);
    }
    let cfg = pk.config();
    coarse::check_full_batches(cfg, batches)?;
    let commitment = coarse::resolve_commitment(pk, batches, sig)?;
    verify_tag(cfg.suite, pk.y(), &commitment, &sig.s, batches, &sig.ds, workers)
}

/// Streaming challenge computation for logs larger than memory.
///
/// Whole epochs are buffered until about [`CHUNK_BYTES`] of messages are
/// held, then reduced in parallel; only the running sum survives a chunk.
#[derive(Debug)]
pub struct ChunkedChallenge<'a> {
    suite: Suite,
    ds: &'a SeedStack,
    workers: usize,
    chunk_bytes: usize,
    pending: Vec<(u32, Vec<Vec<u8>>)>,
    pending_bytes: usize,
    e: Scalar,
}

impl<'a> ChunkedChallenge<'a> {
    pub fn new(suite: Suite, ds: &'a SeedStack, workers: usize) -> Result<Self> {
        Self::with_chunk_size(suite, ds, workers, CHUNK_BYTES)
    }

    pub fn with_chunk_size(suite: Suite, ds: &'a SeedStack, workers: usize, chunk_bytes: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::Workers);
        }
        Ok(ChunkedChallenge {
            suite,
            ds,
            workers,
            chunk_bytes,
            pending: Vec::new(),
            pending_bytes: 0,
            e: Scalar::ZERO,
        })
    }

    /// Adds one epoch's entries, indexed `0..msgs.len()`.
    pub fn push_epoch(&mut self, epoch: u32, msgs: Vec<Vec<u8>>) -> Result<()> {
        self.pending_bytes += msgs.iter().map(Vec::len).sum::<usize>();
        self.pending.push((epoch, msgs));
        if self.pending_bytes >= self.chunk_bytes {
            self.flush()?;
        }
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        let batches: Vec<_> = self
            .pending
            .iter()
            .map(|(epoch, msgs)| EpochBatch::full(*epoch, msgs))
            .collect();
        self.e += aggregate_challenge_parallel(self.suite, &batches, self.ds, self.workers)?;
        self.pending.clear();
        self.pending_bytes = 0;
        Ok(())
    }

    pub fn finish(mut self) -> Result<Scalar> {
        self.flush()?;
        Ok(self.e)
    }
}
