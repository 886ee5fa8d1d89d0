//! Fine-grained scheme with a constant-size public key.
//!
//! Each entry gets its own signature `(s, R, tail)`. The commitment `R` comes
//! from a BPV table: a random `k`-subset sum of `v` precomputed pairs
//! `(r_i, alpha^r_i)`, costing `k` group combinations instead of an
//! exponentiation. Entries before the last of an epoch carry their one-time
//! seed; the last carries the disclosed-seed stack.

use rand::{CryptoRng, RngCore};

use crate::error::{Error, Result};
use crate::group::{GroupElement, Scalar};
use crate::params::SuiteConfig;
use crate::primitives::{self, Seed, SEED_BYTES};
use crate::seed::{self, SeedNode, SeedStack};
use crate::wire::Reader;
use crate::{aggregate_challenge, coarse, EpochBatch};

pub const SK_MAGIC: &[u8; 4] = b"PSKF";
pub const PK_MAGIC: &[u8; 4] = b"PPKF";
pub const SIG_MAGIC: &[u8; 4] = b"PSF1";

pub const DEFAULT_BPV_V: u32 = 1024;
pub const DEFAULT_BPV_K: u32 = 16;

#[derive(Clone, PartialEq, Eq)]
pub struct BpvTable {
    k: u32,
    pairs: Vec<(Scalar, GroupElement)>,
}

impl std::fmt::Debug for BpvTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BpvTable")
            .field("v", &self.pairs.len())
            .field("k", &self.k)
            .finish()
    }
}

impl BpvTable {
    /// Precomputes `v` pairs `(r_i, alpha^r_i)`.
    pub fn offline<R: RngCore + CryptoRng>(k: u32, v: u32, rng: &mut R) -> Result<Self> {
        if k == 0 || k > v {
            return Err(Error::Params("BPV parameters need 1 <= k <= v".into()));
        }
        let pairs = (0..v)
            .map(|_| {
                let r = Scalar::random_nonzero(rng);
                (r, GroupElement::exp_base(&r))
            })
            .collect();
        Ok(BpvTable { k, pairs })
    }

    pub fn v(&self) -> u32 {
        self.pairs.len() as u32
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn pairs(&self) -> &[(Scalar, GroupElement)] {
        &self.pairs
    }

    /// One-time commitment pair from a random `k`-subset of distinct entries.
    pub fn online<R: RngCore + CryptoRng>(&self, rng: &mut R) -> (Scalar, GroupElement) {
        let picks = rand::seq::index::sample(rng, self.pairs.len(), self.k as usize);
        self.combine(picks.iter())
    }

    /// Sum of the chosen pairs.
    pub fn combine(&self, picks: impl IntoIterator<Item = usize>) -> (Scalar, GroupElement) {
        picks.into_iter().fold(
            (Scalar::ZERO, GroupElement::identity()),
            |(r, big_r), i| {
                let (ri, rr) = &self.pairs[i];
                (r + *ri, big_r.combine(rr))
            },
        )
    }

    pub fn encoded_len(&self) -> usize {
        8 + self.pairs.len() * 64
    }

    fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.v().to_be_bytes());
        out.extend_from_slice(&self.k.to_be_bytes());
        for (r, big_r) in &self.pairs {
            out.extend_from_slice(&r.to_bytes());
            out.extend_from_slice(&big_r.to_bytes());
        }
    }

    fn read(r: &mut Reader<'_>) -> Result<Self> {
        let v = r.u32()?;
        let k = r.u32()?;
        if k == 0 || k > v {
            return Err(Error::Encoding("BPV parameters out of range"));
        }
        let mut pairs = Vec::with_capacity(v as usize);
        for _ in 0..v {
            pairs.push((r.scalar()?, r.element()?));
        }
        Ok(BpvTable { k, pairs })
    }
}

/// How the signer obtains per-entry commitments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CommitmentSource {
    Bpv(BpvTable),
    /// `r_t` from the nonce seed and `R_t = alpha^r_t`: one exponentiation
    /// per entry, no table.
    Direct,
}

#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey {
    cfg: SuiteConfig,
    y: Scalar,
    nonce_seed: Seed,
    root: Seed,
    counter: u64,
    ds: SeedStack,
    leaf: Option<Seed>,
    source: CommitmentSource,
}

impl std::fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SecretKey")
            .field("cfg", &self.cfg)
            .field("counter", &self.counter)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicKey {
    cfg: SuiteConfig,
    y: GroupElement,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tail {
    Seed(Seed),
    Stack(SeedStack),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FineSignature {
    pub s: Scalar,
    pub commitment: GroupElement,
    pub tail: Tail,
}

/// Aggregate of several fine signatures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FineAggregate {
    pub s: Scalar,
    pub commitment: GroupElement,
}

/// `(epoch, index within epoch)` of global entry counter `t`.
pub fn locate(cfg: &SuiteConfig, t: u64) -> (u32, u32) {
    ((t / cfg.n2 as u64) as u32, (t % cfg.n2 as u64) as u32)
}

pub fn keygen<R: RngCore + CryptoRng>(
    cfg: SuiteConfig,
    bpv: Option<(u32, u32)>,
    rng: &mut R,
) -> Result<(SecretKey, PublicKey)> {
    cfg.validate()?;
    let y = Scalar::random_nonzero(rng);
    let nonce_seed = Seed::random(rng)?;
    let root = Seed::random(rng)?;
    let source = match bpv {
        Some((v, k)) => CommitmentSource::Bpv(BpvTable::offline(k, v, rng)?),
        None => CommitmentSource::Direct,
    };
    let sk = SecretKey {
        cfg,
        y,
        nonce_seed,
        root,
        counter: 0,
        ds: SeedStack::new(),
        leaf: None,
        source,
    };
    let pk = PublicKey {
        cfg,
        y: GroupElement::exp_base(&y),
    };
    Ok((sk, pk))
}

impl SecretKey {
    pub fn config(&self) -> &SuiteConfig {
        &self.cfg
    }

    /// Global index of the next entry to sign.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn disclosed(&self) -> &SeedStack {
        &self.ds
    }

    pub fn commitment_source(&self) -> &CommitmentSource {
        &self.source
    }

    pub fn root_node(&self) -> SeedNode {
        SeedNode::root(self.cfg.depth(), self.root)
    }

    /// Signs the next entry. `rng` drives BPV subset selection and is unused
    /// in direct mode.
    pub fn sign<R: RngCore + CryptoRng>(&mut self, m: &[u8], rng: &mut R) -> Result<FineSignature> {
        let cfg = self.cfg;
        let t = self.counter;
        if t >= cfg.capacity() {
            return Err(Error::Exhausted {
                epoch: t,
                capacity: cfg.capacity(),
            });
        }
        if let Some(max) = cfg.suite.max_entry_len() {
            if m.len() >= max {
                return Err(Error::Unsupported { len: m.len() });
            }
        }
        let (epoch, j) = locate(&cfg, t);
        let (ds, leaf) = match self.leaf {
            _ if j == 0 => {
                let (ds, leaf) = seed::so(cfg.suite, &self.ds, &self.root_node(), epoch)?;
                (Some(ds), leaf)
            }
            Some(leaf) => (None, leaf),
            None => (None, seed::sr(cfg.suite, &self.ds, epoch)?),
        };
        let x = primitives::onetime_seed(cfg.suite, &leaf, j);
        let e = primitives::hash_to_scalar(cfg.suite, m, &x)?;
        let (r, commitment) = match &self.source {
            CommitmentSource::Bpv(table) => table.online(rng),
            CommitmentSource::Direct => {
                let r = primitives::nonce_to_scalar(cfg.suite, &self.nonce_seed, epoch, j);
                (r, GroupElement::exp_base(&r))
            }
        };
        let s = r - e * self.y;
        let last = j == cfg.n2 - 1;
        self.counter += 1;
        self.leaf = if last { None } else { Some(leaf) };
        if let Some(ds) = ds {
            self.ds = ds;
        }
        let tail = if last {
            Tail::Stack(self.ds.clone())
        } else {
            Tail::Seed(x)
        };
        Ok(FineSignature { s, commitment, tail })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(SK_MAGIC);
        self.cfg.write(&mut out);
        out.extend_from_slice(&self.y.to_bytes());
        out.extend_from_slice(&self.nonce_seed.0);
        out.extend_from_slice(&self.root.0);
        out.extend_from_slice(&self.counter.to_be_bytes());
        match &self.source {
            CommitmentSource::Bpv(table) => {
                out.push(1);
                table.write(&mut out);
            }
            CommitmentSource::Direct => out.push(0),
        }
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
        let counter = r.u64()?;
        let source = if r.flag()? {
            CommitmentSource::Bpv(BpvTable::read(&mut r)?)
        } else {
            CommitmentSource::Direct
        };
        let ds = SeedStack::read(&mut r)?;
        r.finish()?;
        if y.is_zero() {
            return Err(Error::Encoding("zero secret scalar"));
        }
        if counter > cfg.capacity() || ds.coverage() != counter.div_ceil(cfg.n2 as u64) {
            return Err(Error::State("signer state does not match its seed stack"));
        }
        Ok(SecretKey {
            cfg,
            y,
            nonce_seed,
            root,
            counter,
            ds,
            leaf: None,
            source,
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

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(49);
        out.extend_from_slice(PK_MAGIC);
        self.cfg.write(&mut out);
        out.extend_from_slice(&self.y.to_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        r.magic(PK_MAGIC)?;
        let cfg = SuiteConfig::read(&mut r)?;
        let y = r.element()?;
        r.finish()?;
        Ok(PublicKey { cfg, y })
    }
}

impl FineSignature {
    pub fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(SIG_MAGIC);
        out.extend_from_slice(&self.s.to_bytes());
        out.extend_from_slice(&self.commitment.to_bytes());
        match &self.tail {
            Tail::Seed(x) => {
                out.push(0);
                out.extend_from_slice(&x.0);
            }
            Tail::Stack(ds) => {
                out.push(1);
                ds.write(out);
            }
        }
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

    pub fn read_prefix(bytes: &[u8]) -> Result<(Self, usize)> {
        let mut r = Reader::new(bytes);
        let sig = Self::read(&mut r)?;
        Ok((sig, r.position()))
    }

    pub(crate) fn read(r: &mut Reader<'_>) -> Result<Self> {
        r.magic(SIG_MAGIC)?;
        let s = r.scalar()?;
        let commitment = r.element()?;
        let tail = match r.u8()? {
            0 => Tail::Seed(Seed::from_slice(r.take(SEED_BYTES)?)?),
            1 => Tail::Stack(SeedStack::read(r)?),
            _ => return Err(Error::Encoding("bad tail tag")),
        };
        Ok(FineSignature {
            s,
            commitment,
            tail,
        })
    }

    pub fn stack(&self) -> Option<&SeedStack> {
        match &self.tail {
            Tail::Stack(ds) => Some(ds),
            Tail::Seed(_) => None,
        }
    }
}

/// Verifies one entry using the one-time seed attached to its signature.
pub fn aver_single(pk: &PublicKey, m: &[u8], sig: &FineSignature) -> Result<bool> {
    let Tail::Seed(x) = &sig.tail else {
        return Err(Error::Encoding("signature carries no one-time seed"));
    };
    let e = primitives::hash_to_scalar(pk.cfg.suite, m, x)?;
    Ok(coarse::check_tag(&pk.y, &sig.commitment, &e, &sig.s))
}

/// Verifies entry `t` individually, taking its one-time seed from `ds`.
pub fn aver_entry(pk: &PublicKey, t: u64, m: &[u8], sig: &FineSignature, ds: &SeedStack) -> Result<bool> {
    let (epoch, j) = locate(&pk.cfg, t);
    let leaf = seed::sr(pk.cfg.suite, ds, epoch)?;
    let x = primitives::onetime_seed(pk.cfg.suite, &leaf, j);
    let e = primitives::hash_to_scalar(pk.cfg.suite, m, &x)?;
    Ok(coarse::check_tag(&pk.y, &sig.commitment, &e, &sig.s))
}

pub fn aggregate<'a>(sigs: impl IntoIterator<Item = &'a FineSignature>) -> FineAggregate {
    sigs.into_iter().fold(
        FineAggregate {
            s: Scalar::ZERO,
            commitment: GroupElement::identity(),
        },
        |acc, sig| FineAggregate {
            s: acc.s + sig.s,
            commitment: acc.commitment.combine(&sig.commitment),
        },
    )
}

/// Batch verification of any set of entries whose epochs `ds` discloses.
pub fn aver_batch(pk: &PublicKey, batches: &[EpochBatch<'_>], agg: &FineAggregate, ds: &SeedStack) -> Result<bool> {
    for b in batches {
        if let Some(&(j, _)) = b.entries.iter().find(|(j, _)| *j >= pk.cfg.n2) {
            return Err(Error::Params(format!("entry index {j} beyond epoch size")));
        }
    }
    let e = aggregate_challenge(pk.cfg.suite, batches, ds)?;
    Ok(coarse::check_tag(&pk.y, &agg.commitment, &e, &agg.s))
}
