//! Single-signer aggregate signatures for secure logging.
//!
//! A logger signs epochs of `n2` entries without any group exponentiation
//! ([`coarse`]), or signs each entry with a precomputed commitment
//! ([`fine`]). Per-entry one-time seeds come from a binary seed tree whose
//! released part is carried in a logarithmic-size stack ([`seed`]). An edge
//! verifier distills signature streams into constant-size cold data
//! ([`distill`]), which an archive checks in batch, optionally across worker
//! threads ([`parallel`]).

pub mod coarse;
pub mod distill;
pub mod error;
pub mod fine;
pub mod group;
pub mod params;
pub mod parallel;
pub mod primitives;
pub mod seed;
mod wire;

pub use error::{Error, Result};
pub use group::{GroupElement, OpCounts, Scalar};
pub use params::{Suite, SuiteConfig};
pub use primitives::Seed;
pub use seed::{SeedNode, SeedStack};

/// Verifier-side view of an epoch's messages: the epoch index and the
/// `(entry index, payload)` pairs to check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochBatch<'a> {
    pub epoch: u32,
    pub entries: Vec<(u32, &'a [u8])>,
}

impl<'a> EpochBatch<'a> {
    /// A batch holding every entry `0..msgs.len()` of the epoch.
    pub fn full<M: AsRef<[u8]>>(epoch: u32, msgs: &'a [M]) -> Self {
        EpochBatch {
            epoch,
            entries: msgs
                .iter()
                .enumerate()
                .map(|(j, m)| (j as u32, m.as_ref()))
                .collect(),
        }
    }
}

/// `sum_j H(m_j || x_i^j)` over one epoch, given its leaf seed.
pub fn epoch_challenge(suite: Suite, leaf: &Seed, entries: &[(u32, &[u8])]) -> Result<Scalar> {
    let mut acc = Scalar::ZERO;
    for &(j, m) in entries {
        let x = primitives::onetime_seed(suite, leaf, j);
        acc += primitives::hash_to_scalar(suite, m, &x)?;
    }
    Ok(acc)
}

/// Sequential aggregate challenge over several epochs, seeds taken from `ds`.
pub fn aggregate_challenge(suite: Suite, batches: &[EpochBatch<'_>], ds: &SeedStack) -> Result<Scalar> {
    let epochs: Vec<u32> = batches.iter().map(|b| b.epoch).collect();
    let mut acc = Scalar::ZERO;
    for (b, leaf) in batches.iter().zip(seed::sr_many(suite, ds, &epochs)) {
        acc += epoch_challenge(suite, &leaf?, &b.entries)?;
    }
    Ok(acc)
}
