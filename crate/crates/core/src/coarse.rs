//! Coarse-grained, signer-optimal scheme.
//!
//! Key generation precomputes one aggregate commitment `R_i = alpha^(sum_j r_i^j)`
//! per epoch, so signing an epoch costs hashes, PRF calls and scalar
//! arithmetic only. The signature for epoch `i` is the scalar
//! `s_i = sum_j (r_i^j - e_i^j * y)` together with the disclosed-seed stack,
//! from which a verifier recovers every one-time seed `x_i^j`.

use std::collections::BTreeMap;

use rand::{CryptoRng, RngCore};

use crate::error::{Error, Result};
use crate::group::{GroupElement, Scalar};
use crate::params::SuiteConfig;
use crate::primitives::{self, Seed, SEED_BYTES};
use crate::seed::{self, SeedNode, SeedStack};
use crate::wire::Reader;
use crate::{aggregate_challenge, EpochBatch};

pub const SK_MAGIC: &[u8; 4] = b"PSKC";
pub const PK_MAGIC: &[u8; 4] = b"PPKC";
pub const SIG_MAGIC: &[u8; 4] = b"PSC1";

/// Values that aggregate under a keyless, associative and commutative
/// combination: scalars add mod `q`, group elements combine.
pub trait Aggregate: Sized {
    fn neutral() -> Self;
    fn join(&self, other: &Self) -> Self;
}

impl Aggregate for Scalar {
    fn neutral() -> Self {
        Scalar::ZERO
    }
    fn join(&self, other: &Self) -> Self {
        *self + *other
    }
}

impl Aggregate for GroupElement {
    fn neutral() -> Self {
        GroupElement::identity()
    }
    fn join(&self, other: &Self) -> Self {
        self.combine(other)
    }
}

/// Folds signature components; the empty fold yields the neutral element.
pub fn agg<'a, T: Aggregate + 'a>(parts: impl IntoIterator<Item = &'a T>) -> T {
    parts
        .into_iter()
        .fold(T::neutral(), |acc, p| acc.join(p))
}

#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey {
    cfg: SuiteConfig,
    y: Scalar,
    nonce_seed: Seed,
    root: Seed,
    next_epoch: u32,
    ds: SeedStack,
}

impl std::fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SecretKey")
            .field("cfg", &self.cfg)
            .field("next_epoch", &self.next_epoch)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicKey {
    cfg: SuiteConfig,
    y: GroupElement,
    commitments: BTreeMap<u32, GroupElement>,
}

/// Aggregate signature over one or more epochs.
///
/// A freshly signed epoch carries only `s` and the stack; aggregates
/// produced after distillation also carry their commitment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochSignature {
    pub s: Scalar,
    pub commitment: Option<GroupElement>,
    pub ds: SeedStack,
}

/// Epoch commitment aggregate `alpha^(sum_j r_i^j)`.
pub fn epoch_nonce(cfg: &SuiteConfig, nonce_seed: &Seed, epoch: u32) -> Scalar {
    (0..cfg.n2)
        .map(|j| primitives::nonce_to_scalar(cfg.suite, nonce_seed, epoch, j))
        .sum()
}

pub fn keygen<R: RngCore + CryptoRng>(cfg: SuiteConfig, rng: &mut R) -> Result<(SecretKey, PublicKey)> {
    cfg.validate()?;
    let y = Scalar::random_nonzero(rng);
    let nonce_seed = Seed::random(rng)?;
    let root = Seed::random(rng)?;
    let commitments = (0..cfg.n1)
        .map(|i| (i, GroupElement::exp_base(&epoch_nonce(&cfg, &nonce_seed, i))))
        .collect();
    let sk = SecretKey {
        cfg,
        y,
        nonce_seed,
        root,
        next_epoch: 0,
        ds: SeedStack::new(),
    };
    let pk = PublicKey {
        cfg,
        y: GroupElement::exp_base(&y),
        commitments,
    };
    Ok((sk, pk))
}

impl SecretKey {
    pub fn config(&self) -> &SuiteConfig {
        &self.cfg
    }

    /// Index of the next epoch to be signed.
    pub fn next_epoch(&self) -> u32 {
        self.next_epoch
    }

    pub fn disclosed(&self) -> &SeedStack {
        &self.ds
    }

    pub fn root_node(&self) -> SeedNode {
        SeedNode::root(self.cfg.depth(), self.root)
    }

    pub fn nonce_seed(&self) -> &Seed {
        &self.nonce_seed
    }

    pub fn secret_scalar(&self) -> &Scalar {
        &self.y
    }

    /// Signs the next epoch. `msgs` must hold exactly `n2` entries.
    ///
    /// State advances only on success. A caller that persists the key must
    /// do so before releasing the signature: re-signing an epoch index with
    /// different messages reveals `y`.
    pub fn sign_epoch<M: AsRef<[u8]>>(&mut self, msgs: &[M]) -> Result<EpochSignature> {
        let cfg = self.cfg;
        let epoch = self.next_epoch;
        if epoch >= cfg.n1 {
            return Err(Error::Exhausted {
                epoch: epoch as u64,
                capacity: cfg.n1 as u64,
            });
        }
        if msgs.len() != cfg.n2 as usize {
            return Err(Error::BatchSize {
                epoch,
                expected: cfg.n2 as usize,
                actual: msgs.len(),
            });
        }
        if let Some(max) = cfg.suite.max_entry_len() {
            if let Some(m) = msgs.iter().find(|m| m.as_ref().len() >= max) {
                return Err(Error::Unsupported {
                    len: m.as_ref().len(),
                });
            }
        }
        let (ds, leaf) = seed::so(cfg.suite, &self.ds, &self.root_node(), epoch)?;
        let mut r_sum = Scalar::ZERO;
        let mut e_sum = Scalar::ZERO;
        for (j, m) in msgs.iter().enumerate() {
            let j = j as u32;
            let x = primitives::onetime_seed(cfg.suite, &leaf, j);
            e_sum += primitives::hash_to_scalar(cfg.suite, m.as_ref(), &x)?;
            r_sum += primitives::nonce_to_scalar(cfg.suite, &self.nonce_seed, epoch, j);
        }
        // sum_j (r_j - e_j * y) = sum_j r_j - y * sum_j e_j
        let s = r_sum - e_sum * self.y;
        self.ds = ds.clone();
        self.next_epoch += 1;
        Ok(EpochSignature {
            s,
            commitment: None,
            ds,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(96 + self.ds.encoded_len());
        out.extend_from_slice(SK_MAGIC);
        self.cfg.write(&mut out);
        out.extend_from_slice(&self.y.to_bytes());
        out.extend_from_slice(&self.nonce_seed.0);
        out.extend_from_slice(&self.root.0);
        out.extend_from_slice(&self.next_epoch.to_be_bytes());
        self.ds.write(&mut out);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        r.magic(SK_MAGIC)?;
        let cfg = SuiteConfig::read(&mut r)?;
        let y = r.scalar()?;
        let nonce_seed = Seed::from_slice(r.take(SEED_BYTES)?)?;
        let root = Seed::from_slice(r.take(SEED_BYTES)?)?;
        let next_epoch = r.u32()?;
        let ds = SeedStack::read(&mut r)?;
        r.finish()?;
        if y.is_zero() {
            return Err(Error::Encoding("zero secret scalar"));
        }
        if next_epoch > cfg.n1 || ds.coverage() != next_epoch as u64 {
            return Err(Error::State("signer state does not match its seed stack"));
        }
        Ok(SecretKey {
            cfg,
            y,
            nonce_seed,
            root,
            next_epoch,
            ds,
        })
    }
}

impl PublicKey {
    pub fn config(&self) -> &SuiteConfig {
        &self.cfg
    }

    pub fn y(&self) -> &GroupElement {
        &self.y
    }

    pub fn commitment(&self, epoch: u32) -> Option<&GroupElement> {
        self.commitments.get(&epoch)
    }

    pub fn commitments(&self) -> &BTreeMap<u32, GroupElement> {
        &self.commitments
    }

    /// Removes an epoch's commitment once it has been folded into cold data.
    pub fn take_commitment(&mut self, epoch: u32) -> Option<GroupElement> {
        self.commitments.remove(&epoch)
    }

    /// Aggregate commitment for the given epochs.
    pub fn aggregate_commitment(&self, epochs: impl IntoIterator<Item = u32>) -> Result<GroupElement> {
        let mut acc = GroupElement::identity();
        for i in epochs {
            let r = self.commitments.get(&i).ok_or(Error::MissingCommitment(i))?;
            acc = acc.combine(r);
        }
        Ok(acc)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(53 + 36 * self.commitments.len());
        out.extend_from_slice(PK_MAGIC);
        self.cfg.write(&mut out);
        out.extend_from_slice(&self.y.to_bytes());
        out.extend_from_slice(&(self.commitments.len() as u32).to_be_bytes());
        for (i, r) in &self.commitments {
            out.extend_from_slice(&i.to_be_bytes());
            out.extend_from_slice(&r.to_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        r.magic(PK_MAGIC)?;
        let cfg = SuiteConfig::read(&mut r)?;
        let y = r.element()?;
        let count = r.u32()?;
        if count > cfg.n1 {
            return Err(Error::Encoding("more commitments than epochs"));
        }
        let mut commitments = BTreeMap::new();
        let mut last = None;
        for _ in 0..count {
            let i = r.u32()?;
            if i >= cfg.n1 || last.is_some_and(|l| i <= l) {
                return Err(Error::Encoding("commitment indices must increase"));
            }
            last = Some(i);
            commitments.insert(i, r.element()?);
        }
        r.finish()?;
        Ok(PublicKey {
            cfg,
            y,
            commitments,
        })
    }
}

impl EpochSignature {
    /// The last epoch disclosed by the attached stack, which for a freshly
    /// produced signature is the epoch it signs.
    pub fn epoch(&self) -> Option<u32> {
        self.ds.coverage().checked_sub(1).map(|e| e as u32)
    }

    pub fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(SIG_MAGIC);
        out.extend_from_slice(&self.s.to_bytes());
        match &self.commitment {
            Some(r) => {
                out.push(1);
                out.extend_from_slice(&r.to_bytes());
            }
            None => out.push(0),
        }
        self.ds.write(out);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write(&mut out);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let sig = Self::read(&mut r)?;
        r.finish()?;
        Ok(sig)
    }

    /// Reads one signature from the front of `bytes`, returning it and the
    /// number of bytes consumed.
    pub fn read_prefix(bytes: &[u8]) -> Result<(Self, usize)> {
        let mut r = Reader::new(bytes);
        let sig = Self::read(&mut r)?;
        Ok((sig, r.position()))
    }

    pub(crate) fn read(r: &mut Reader<'_>) -> Result<Self> {
        r.magic(SIG_MAGIC)?;
        let s = r.scalar()?;
        let commitment = if r.flag()? { Some(r.element()?) } else { None };
        let ds = SeedStack::read(r)?;
        Ok(EpochSignature { s, commitment, ds })
    }
}

/// Checks `R == Y^e * alpha^s`.
pub fn check_tag(y: &GroupElement, commitment: &GroupElement, e: &Scalar, s: &Scalar) -> bool {
    GroupElement::commit_check(y, e, s) == *commitment
}

pub(crate) fn check_full_batches(cfg: &SuiteConfig, batches: &[EpochBatch<'_>]) -> Result<()> {
    for b in batches {
        let complete = b.entries.len() == cfg.n2 as usize
            && b.entries.iter().enumerate().all(|(k, (j, _))| *j == k as u32);
        if !complete {
            return Err(Error::BatchSize {
                epoch: b.epoch,
                expected: cfg.n2 as usize,
                actual: b.entries.len(),
            });
        }
    }
    Ok(())
}

/// Commitment to check against: the one carried by `sig`, else the
/// aggregate of the public key's per-epoch commitments.
pub(crate) fn resolve_commitment(
    pk: &PublicKey,
    batches: &[EpochBatch<'_>],
    sig: &EpochSignature,
) -> Result<GroupElement> {
    match sig.commitment {
        Some(r) => Ok(r),
        None => pk.aggregate_commitment(batches.iter().map(|b| b.epoch)),
    }
}

/// Batch verification of the epochs in `batches` against one aggregate
/// signature.
///
/// Returns `Ok(false)` for an invalid signature; an epoch the stack has not
/// disclosed yet, a missing commitment or an incomplete batch are errors.
pub fn aver(pk: &PublicKey, batches: &[EpochBatch<'_>], sig: &EpochSignature) -> Result<bool> {
    check_full_batches(&pk.cfg, batches)?;
    let commitment = resolve_commitment(pk, batches, sig)?;
    let e = aggregate_challenge(pk.cfg.suite, batches, &sig.ds)?;
    Ok(check_tag(&pk.y, &commitment, &e, &sig.s))
}

/// Combines per-epoch signatures into one. The stack of the latest
/// signature is kept; it covers every earlier epoch.
pub fn aggregate_signatures(sigs: &[EpochSignature]) -> Option<EpochSignature> {
    let latest = sigs.iter().max_by_key(|s| s.ds.coverage())?;
    let s = agg(sigs.iter().map(|s| &s.s));
    let commitment = if sigs.iter().all(|s| s.commitment.is_some()) {
        Some(agg(sigs.iter().filter_map(|s| s.commitment.as_ref())))
    } else {
        None
    };
    Some(EpochSignature {
        s,
        commitment,
        ds: latest.ds.clone(),
    })
}
