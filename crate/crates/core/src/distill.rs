//! Edge-side distillation into cold cryptographic data, and selective batch
//! verification of the result.
//!
//! A [`Distiller`] consumes a signature stream epoch by epoch. Valid parts
//! are folded into one running aggregate and into the current umbrella;
//! invalid parts are kept individually. [`sebver`] later checks the archive
//! as a whole (mode V), per umbrella (mode U) or per invalid record (mode I).

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::coarse::{self, EpochSignature};
use crate::error::{Error, Result};
use crate::fine::{self, FineSignature, Tail};
use crate::group::{GroupElement, Scalar};
use crate::params::SuiteConfig;
use crate::seed::{self, SeedStack};
use crate::wire::Reader;
use crate::{epoch_challenge, parallel, primitives, EpochBatch};

const CCD_MAGIC: &[u8; 4] = b"PCCD";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Coarse,
    Fine,
}

impl Scheme {
    pub fn id(self) -> u8 {
        match self {
            Scheme::Coarse => 0,
            Scheme::Fine => 1,
        }
    }

    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            0 => Ok(Scheme::Coarse),
            1 => Ok(Scheme::Fine),
            _ => Err(Error::Encoding("unknown scheme")),
        }
    }
}

/// An aggregatable `(s, R)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tag {
    pub s: Scalar,
    pub commitment: GroupElement,
}

impl Tag {
    pub fn neutral() -> Self {
        Tag {
            s: Scalar::ZERO,
            commitment: GroupElement::identity(),
        }
    }

    pub fn join(&self, other: &Tag) -> Tag {
        Tag {
            s: self.s + other.s,
            commitment: self.commitment.combine(&other.commitment),
        }
    }

    pub fn is_neutral(&self) -> bool {
        self.s.is_zero() && self.commitment.is_identity()
    }

    fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.s.to_bytes());
        out.extend_from_slice(&self.commitment.to_bytes());
    }

    fn read(r: &mut Reader<'_>) -> Result<Self> {
        Ok(Tag {
            s: r.scalar()?,
            commitment: r.element()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Umbrella {
    pub index: u32,
    pub tag: Tag,
}

/// A part that failed verification during distillation. `index` is the epoch
/// for the coarse scheme and the global entry index for the fine one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InvalidRecord {
    pub index: u64,
    pub tag: Tag,
}

/// Cold cryptographic data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ccd {
    pub scheme: Scheme,
    pub cfg: SuiteConfig,
    /// Number of epochs distilled.
    pub epochs: u32,
    pub valid: Option<Tag>,
    pub umbrellas: Vec<Umbrella>,
    pub invalid: Vec<InvalidRecord>,
    pub ds: SeedStack,
}

impl Ccd {
    pub fn new(scheme: Scheme, cfg: SuiteConfig) -> Self {
        Ccd {
            scheme,
            cfg,
            epochs: 0,
            valid: None,
            umbrellas: Vec::new(),
            invalid: Vec::new(),
            ds: SeedStack::new(),
        }
    }

    /// Epoch range `[start, end)` of umbrella `index`, clipped to the
    /// distilled epochs.
    pub fn umbrella_range(&self, index: u32) -> (u32, u32) {
        let w = self.cfg.umbrella_width();
        let start = index * w;
        (start.min(self.epochs), (start + w).min(self.epochs))
    }

    pub fn invalid_indices(&self) -> BTreeSet<u64> {
        self.invalid.iter().map(|r| r.index).collect()
    }

    /// Recomputes the valid aggregate from the umbrellas.
    pub fn umbrella_total(&self) -> Tag {
        self.umbrellas
            .iter()
            .fold(Tag::neutral(), |acc, u| acc.join(&u.tag))
    }

    pub fn encoded_len(&self) -> usize {
        4 + 1 + 13 + 4 + 65 + 4 + self.umbrellas.len() * 68 + 4 + self.invalid.len() * 72 + self.ds.encoded_len() + 4
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(CCD_MAGIC);
        out.push(self.scheme.id());
        self.cfg.write(&mut out);
        out.extend_from_slice(&self.epochs.to_be_bytes());
        out.push(self.valid.is_some() as u8);
        self.valid.unwrap_or_else(Tag::neutral).write(&mut out);
        out.extend_from_slice(&(self.umbrellas.len() as u32).to_be_bytes());
        for u in &self.umbrellas {
            out.extend_from_slice(&u.index.to_be_bytes());
            u.tag.write(&mut out);
        }
        out.extend_from_slice(&(self.invalid.len() as u32).to_be_bytes());
        for rec in &self.invalid {
            out.extend_from_slice(&rec.index.to_be_bytes());
            rec.tag.write(&mut out);
        }
        self.ds.write(&mut out);
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_be_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let body_len = bytes
            .len()
            .checked_sub(4)
            .ok_or(Error::Encoding("truncated CCD"))?;
        let (body, crc) = bytes.split_at(body_len);
        if crc32fast::hash(body).to_be_bytes() != crc {
            return Err(Error::Encoding("CCD checksum mismatch"));
        }
        let mut r = Reader::new(body);
        r.magic(CCD_MAGIC)?;
        let scheme = Scheme::from_id(r.u8()?)?;
        let cfg = SuiteConfig::read(&mut r)?;
        let epochs = r.u32()?;
        let has_valid = r.flag()?;
        let valid = Tag::read(&mut r)?;
        if !has_valid && !valid.is_neutral() {
            return Err(Error::Encoding("absent valid block must be zero"));
        }
        let count = r.u32()?;
        let mut umbrellas = Vec::new();
        for _ in 0..count {
            let index = r.u32()?;
            umbrellas.push(Umbrella {
                index,
                tag: Tag::read(&mut r)?,
            });
        }
        let count = r.u32()?;
        let mut invalid = Vec::new();
        for _ in 0..count {
            let index = r.u64()?;
            invalid.push(InvalidRecord {
                index,
                tag: Tag::read(&mut r)?,
            });
        }
        let ds = SeedStack::read(&mut r)?;
        r.finish()?;
        let ccd = Ccd {
            scheme,
            cfg,
            epochs,
            valid: has_valid.then_some(valid),
            umbrellas,
            invalid,
            ds,
        };
        ccd.check_layout()?;
        Ok(ccd)
    }

    fn check_layout(&self) -> Result<()> {
        if self.epochs > self.cfg.n1 {
            return Err(Error::Encoding("more epochs than the key allows"));
        }
        let index_bound = match self.scheme {
            Scheme::Coarse => self.epochs as u64,
            Scheme::Fine => self.epochs as u64 * self.cfg.n2 as u64,
        };
        if !self.invalid.windows(2).all(|w| w[0].index < w[1].index)
            || self.invalid.last().is_some_and(|r| r.index >= index_bound)
        {
            return Err(Error::Encoding("invalid records out of order"));
        }
        if !self.umbrellas.windows(2).all(|w| w[0].index < w[1].index)
            || self.umbrellas.last().is_some_and(|u| u.index >= self.cfg.n_u)
        {
            return Err(Error::Encoding("umbrella records out of order"));
        }
        Ok(())
    }
}

/// True when every leaf disclosed by `old` is disclosed by `new` with the
/// same seed.
pub fn stack_extends(cfg: &SuiteConfig, old: &SeedStack, new: &SeedStack) -> bool {
    if new.coverage() < old.coverage() {
        return false;
    }
    old.nodes().iter().all(|node| {
        new.nodes()
            .iter()
            .find(|n| n.covers_leaf(node.first_leaf()))
            .and_then(|n| seed::sc(cfg.suite, n, node.depth, node.index).ok())
            .is_some_and(|derived| derived == *node)
    })
}

/// Stream-level distillation state.
#[derive(Debug, Clone)]
pub struct Distiller {
    ccd: Ccd,
    umbrella: Tag,
}

impl Distiller {
    pub fn new(scheme: Scheme, cfg: SuiteConfig) -> Self {
        Distiller {
            ccd: Ccd::new(scheme, cfg),
            umbrella: Tag::neutral(),
        }
    }

    pub fn ccd(&self) -> &Ccd {
        &self.ccd
    }

    pub fn next_epoch(&self) -> u32 {
        self.ccd.epochs
    }

    fn begin(&self, scheme: Scheme, cfg: &SuiteConfig, msgs: usize) -> Result<u32> {
        if self.ccd.scheme != scheme {
            return Err(Error::State("distiller was created for the other scheme"));
        }
        if *cfg != self.ccd.cfg {
            return Err(Error::Params("public key parameters differ from the distiller's".into()));
        }
        let epoch = self.ccd.epochs;
        if epoch >= cfg.n1 {
            return Err(Error::Exhausted {
                epoch: epoch as u64,
                capacity: cfg.n1 as u64,
            });
        }
        if msgs != cfg.n2 as usize {
            return Err(Error::BatchSize {
                epoch,
                expected: cfg.n2 as usize,
                actual: msgs,
            });
        }
        Ok(epoch)
    }

    fn fold_valid(&mut self, tag: &Tag) {
        self.ccd.valid = Some(self.ccd.valid.unwrap_or_else(Tag::neutral).join(tag));
        self.umbrella = self.umbrella.join(tag);
    }

    fn end_epoch(&mut self, epoch: u32) {
        self.ccd.epochs += 1;
        let w = self.ccd.cfg.umbrella_width();
        if (epoch + 1).is_multiple_of(w) {
            self.emit_umbrella(epoch / w);
        }
    }

    fn emit_umbrella(&mut self, index: u32) {
        self.ccd.umbrellas.push(Umbrella {
            index,
            tag: std::mem::replace(&mut self.umbrella, Tag::neutral()),
        });
    }

    /// Distills the next coarse epoch and drops its commitment from `pk`.
    /// Returns whether the epoch verified.
    pub fn distill_coarse<M: AsRef<[u8]>>(
        &mut self,
        pk: &mut coarse::PublicKey,
        msgs: &[M],
        sig: &EpochSignature,
    ) -> Result<bool> {
        let cfg = *pk.config();
        let epoch = self.begin(Scheme::Coarse, &cfg, msgs.len())?;
        if sig.epoch() != Some(epoch) {
            return Err(Error::Sequence {
                expected: epoch as u64,
                actual: sig.ds.coverage().saturating_sub(1),
            });
        }
        let commitment = *pk.commitment(epoch).ok_or(Error::MissingCommitment(epoch))?;
        let ok = stack_extends(&cfg, &self.ccd.ds, &sig.ds) && {
            let leaf = seed::sr(cfg.suite, &sig.ds, epoch)?;
            let entries: Vec<(u32, &[u8])> = msgs
                .iter()
                .enumerate()
                .map(|(j, m)| (j as u32, m.as_ref()))
                .collect();
            let e = epoch_challenge(cfg.suite, &leaf, &entries)?;
            coarse::check_tag(pk.y(), &commitment, &e, &sig.s)
        };
        let tag = Tag {
            s: sig.s,
            commitment,
        };
        if ok {
            self.fold_valid(&tag);
            self.ccd.ds = sig.ds.clone();
        } else {
            self.ccd.invalid.push(InvalidRecord {
                index: epoch as u64,
                tag,
            });
        }
        pk.take_commitment(epoch);
        self.end_epoch(epoch);
        Ok(ok)
    }

    /// Distills the next fine epoch, verifying every entry against seeds
    /// derived from the epoch's closing stack. Returns the number of invalid
    /// entries.
    pub fn distill_fine<M: AsRef<[u8]>>(
        &mut self,
        pk: &fine::PublicKey,
        msgs: &[M],
        sigs: &[FineSignature],
    ) -> Result<u32> {
        let cfg = *pk.config();
        let epoch = self.begin(Scheme::Fine, &cfg, msgs.len())?;
        if sigs.len() != msgs.len() {
            return Err(Error::BatchSize {
                epoch,
                expected: msgs.len(),
                actual: sigs.len(),
            });
        }
        let closing = sigs.last().and_then(FineSignature::stack);
        if let Some(ds) = closing {
            if ds.coverage() != epoch as u64 + 1 {
                return Err(Error::Sequence {
                    expected: epoch as u64,
                    actual: ds.coverage().saturating_sub(1),
                });
            }
        }
        let leaf = match closing {
            Some(ds) if stack_extends(&cfg, &self.ccd.ds, ds) => Some(seed::sr(cfg.suite, ds, epoch)?),
            _ => None,
        };
        let first = epoch as u64 * cfg.n2 as u64;
        let last = cfg.n2 - 1;
        let mut invalid = 0;
        for (j, (m, sig)) in msgs.iter().zip(sigs).enumerate() {
            let j = j as u32;
            let ok = match leaf {
                Some(leaf) => {
                    let x = primitives::onetime_seed(cfg.suite, &leaf, j);
                    let tail_ok = match &sig.tail {
                        Tail::Seed(attached) => j != last && *attached == x,
                        Tail::Stack(_) => j == last,
                    };
                    tail_ok && {
                        let e = primitives::hash_to_scalar(cfg.suite, m.as_ref(), &x)?;
                        coarse::check_tag(pk.y(), &sig.commitment, &e, &sig.s)
                    }
                }
                None => false,
            };
            let tag = Tag {
                s: sig.s,
                commitment: sig.commitment,
            };
            if ok {
                self.fold_valid(&tag);
            } else {
                invalid += 1;
                self.ccd.invalid.push(InvalidRecord {
                    index: first + j as u64,
                    tag,
                });
            }
        }
        if let (Some(ds), true) = (closing, leaf.is_some() && invalid < cfg.n2) {
            self.ccd.ds = ds.clone();
        }
        self.end_epoch(epoch);
        Ok(invalid)
    }

    /// Closes a partially filled umbrella and returns the archive.
    pub fn finish(mut self) -> Ccd {
        let w = self.ccd.cfg.umbrella_width();
        if !self.ccd.epochs.is_multiple_of(w) {
            self.emit_umbrella(self.ccd.epochs / w);
        }
        self.ccd
    }
}

/// Verification granularity of [`sebver`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// One bit for the aggregate of all valid data.
    Valid,
    /// One bit per umbrella.
    Umbrella,
    /// One bit per invalid record.
    Invalid,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "V" | "v" => Ok(Mode::Valid),
            "U" | "u" => Ok(Mode::Umbrella),
            "I" | "i" => Ok(Mode::Invalid),
            _ => Err(Error::Params(format!("unknown mode {s:?}"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Valid => "V",
            Mode::Umbrella => "U",
            Mode::Invalid => "I",
        })
    }
}

fn epoch_entries<'a, M: AsRef<[u8]>>(cfg: &SuiteConfig, log: &'a [M], epoch: u32) -> Result<&'a [M]> {
    let n2 = cfg.n2 as usize;
    let start = epoch as usize * n2;
    log.get(start..start + n2)
        .ok_or(Error::MissingMessages(epoch))
}

/// Batches for the epochs in `range`, leaving out invalid parts.
fn valid_batches<'a, M: AsRef<[u8]>>(
    ccd: &Ccd,
    log: &'a [M],
    range: std::ops::Range<u32>,
    invalid: &BTreeSet<u64>,
) -> Result<Vec<EpochBatch<'a>>> {
    let n2 = ccd.cfg.n2 as u64;
    let mut batches = Vec::new();
    for epoch in range {
        if ccd.scheme == Scheme::Coarse && invalid.contains(&(epoch as u64)) {
            continue;
        }
        let msgs = epoch_entries(&ccd.cfg, log, epoch)?;
        let entries = msgs
            .iter()
            .enumerate()
            .filter(|(j, _)| {
                ccd.scheme == Scheme::Coarse || !invalid.contains(&(epoch as u64 * n2 + *j as u64))
            })
            .map(|(j, m)| (j as u32, m.as_ref()))
            .collect();
        batches.push(EpochBatch { epoch, entries });
    }
    Ok(batches)
}

/// Selective batch verification of an archive against the full log.
///
/// `log` holds every entry of the distilled epochs in order. Mode I reports
/// 0 for records whose epoch the archived stack does not disclose.
pub fn sebver<M: AsRef<[u8]> + Sync>(
    y: &GroupElement,
    ccd: &Ccd,
    log: &[M],
    mode: Mode,
    workers: usize,
) -> Result<Vec<bool>> {
    let suite = ccd.cfg.suite;
    let invalid = ccd.invalid_indices();
    match mode {
        Mode::Valid => {
            let valid = ccd
                .valid
                .ok_or(Error::State("archive holds no valid aggregate"))?;
            let batches = valid_batches(ccd, log, 0..ccd.epochs, &invalid)?;
            let ok = parallel::verify_tag(suite, y, &valid.commitment, &valid.s, &batches, &ccd.ds, workers)?;
            Ok(vec![ok])
        }
        Mode::Umbrella => ccd
            .umbrellas
            .iter()
            .map(|u| {
                let (start, end) = ccd.umbrella_range(u.index);
                let batches = valid_batches(ccd, log, start..end, &invalid)?;
                parallel::verify_tag(suite, y, &u.tag.commitment, &u.tag.s, &batches, &ccd.ds, workers)
            })
            .collect(),
        Mode::Invalid => ccd
            .invalid
            .iter()
            .map(|rec| {
                let (epoch, entries) = match ccd.scheme {
                    Scheme::Coarse => {
                        let epoch = rec.index as u32;
                        let msgs = epoch_entries(&ccd.cfg, log, epoch)?;
                        let entries: Vec<(u32, &[u8])> = msgs
                            .iter()
                            .enumerate()
                            .map(|(j, m)| (j as u32, m.as_ref()))
                            .collect();
                        (epoch, entries)
                    }
                    Scheme::Fine => {
                        let (epoch, j) = fine::locate(&ccd.cfg, rec.index);
                        let msgs = epoch_entries(&ccd.cfg, log, epoch)?;
                        (epoch, vec![(j, msgs[j as usize].as_ref())])
                    }
                };
                let leaf = match seed::sr(suite, &ccd.ds, epoch) {
                    Ok(leaf) => leaf,
                    Err(Error::Undisclosed(_)) => return Ok(false),
                    Err(e) => return Err(e),
                };
                let e = epoch_challenge(suite, &leaf, &entries)?;
                Ok(coarse::check_tag(y, &rec.tag.commitment, &e, &rec.tag.s))
            })
            .collect(),
    }
}
