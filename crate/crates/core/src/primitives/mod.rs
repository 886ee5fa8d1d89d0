//! PRFs and message hashes for the three primitive suites.
//!
//! `PRF_j(x) = F(x || j)` truncated to 128 bits, with `F` either SHA-256 or
//! MMO-AES-128 and `j` encoded as a single byte. Message hashes map
//! `m || x` into `Z_q` via 64-byte wide reduction, except for the
//! modular-addition suite which computes `(int(m) + int(x)) mod q`.

pub mod mmo;

use std::cell::Cell;
use std::fmt;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::group::Scalar;
use crate::params::Suite;

pub use mmo::{mdc2_hash, mmo_hash, Mdc2, Mmo};

/// Seed length in bytes (kappa = 128).
pub const SEED_BYTES: usize = 16;

/// Entries must be strictly shorter than this under the modular-addition hash.
pub const ADD_Q_MAX_ENTRY: usize = 32;

/// A kappa-bit seed: tree nodes, one-time seeds and the nonce master seed.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Seed(pub [u8; SEED_BYTES]);

impl Seed {
    pub fn from_slice(bytes: &[u8]) -> Result<Self> {
        bytes
            .try_into()
            .map(Seed)
            .map_err(|_| Error::Length {
                expected: SEED_BYTES,
                actual: bytes.len(),
            })
    }

    pub fn random<R: rand::RngCore + rand::CryptoRng>(rng: &mut R) -> Result<Self> {
        let mut s = [0u8; SEED_BYTES];
        rng.try_fill_bytes(&mut s).map_err(|_| Error::Entropy)?;
        Ok(Seed(s))
    }

    pub fn as_bytes(&self) -> &[u8; SEED_BYTES] {
        &self.0
    }
}

impl fmt::Debug for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Seed(")?;
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        write!(f, ")")
    }
}

/// Per-thread counts of PRF invocations and block-cipher calls.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PrimitiveCounts {
    pub prf_calls: u64,
    pub aes_calls: u64,
}

impl PrimitiveCounts {
    pub fn current() -> Self {
        PRIM_COUNTS.with(Cell::get)
    }

    pub fn measure<T>(f: impl FnOnce() -> T) -> (T, PrimitiveCounts) {
        let before = Self::current();
        let out = f();
        let after = Self::current();
        (
            out,
            PrimitiveCounts {
                prf_calls: after.prf_calls - before.prf_calls,
                aes_calls: after.aes_calls - before.aes_calls,
            },
        )
    }
}

thread_local! {
    static PRIM_COUNTS: Cell<PrimitiveCounts> =
        const { Cell::new(PrimitiveCounts { prf_calls: 0, aes_calls: 0 }) };
}

pub(crate) fn bump(f: impl FnOnce(&mut PrimitiveCounts)) {
    PRIM_COUNTS.with(|c| {
        let mut v = c.get();
        f(&mut v);
        c.set(v);
    });
}

/// `F(parts[0] || parts[1] || ... || j)` at the full native width of `F`
/// (32 bytes for SHA-256, 16 for MMO).
fn prf_full(suite: Suite, bit: u8, parts: &[&[u8]]) -> Vec<u8> {
    bump(|c| c.prf_calls += 1);
    match suite {
        Suite::Sha256 => {
            let mut h = Sha256::new();
            for p in parts {
                h.update(p);
            }
            h.update([bit]);
            h.finalize().to_vec()
        }
        Suite::MmoMdc2 | Suite::MmoAddQ => {
            let mut h = Mmo::new();
            for p in parts {
                h.update(p);
            }
            h.update(&[bit]);
            h.finalize().to_vec()
        }
    }
}

fn prf_parts(suite: Suite, bit: u8, parts: &[&[u8]]) -> Seed {
    let full = prf_full(suite, bit, parts);
    Seed(full[..SEED_BYTES].try_into().unwrap())
}

/// `PRF_bit(x)`: the tree step. `bit` selects the left (0) or right (1) child.
pub fn prf(suite: Suite, bit: u8, x: &Seed) -> Seed {
    debug_assert!(bit <= 1);
    prf_parts(suite, bit, &[&x.0])
}

/// Byte-slice form of [`prf`] that checks the seed length.
pub fn prf_bytes(suite: Suite, bit: u8, x: &[u8]) -> Result<Seed> {
    if bit > 1 {
        return Err(Error::Params("prf selector must be 0 or 1".into()));
    }
    Ok(prf(suite, bit, &Seed::from_slice(x)?))
}

/// One-time seed `x_i^j = PRF_0(x_0[i] || enc32(j))`.
pub fn onetime_seed(suite: Suite, leaf: &Seed, j: u32) -> Seed {
    prf_parts(suite, 0, &[&leaf.0, &j.to_be_bytes()])
}

/// Per-entry nonce `r_i^j`, derived from the nonce master seed.
///
/// PRF outputs over `r || enc32(i) || enc32(j) || ctr || block` are
/// concatenated until 64 bytes are available and then wide-reduced. A zero
/// result is re-derived with the next counter value.
pub fn nonce_to_scalar(suite: Suite, r: &Seed, i: u32, j: u32) -> Scalar {
    let (ib, jb) = (i.to_be_bytes(), j.to_be_bytes());
    for ctr in 0u8..=u8::MAX {
        let mut wide = Vec::with_capacity(64);
        let mut block = 0u8;
        while wide.len() < 64 {
            wide.extend(prf_full(suite, 0, &[&r.0, &ib, &jb, &[ctr], &[block]]));
            block += 1;
        }
        let s = Scalar::reduce_wide(&wide[..64]).expect("64 bytes");
        if !s.is_zero() {
            return s;
        }
    }
    unreachable!("256 consecutive zero nonces")
}

/// Ephemeral key `e = H(m || x) mod q`.
pub fn hash_to_scalar(suite: Suite, m: &[u8], x: &Seed) -> Result<Scalar> {
    match suite {
        Suite::Sha256 => {
            let mut wide = [0u8; 64];
            let lo = Sha256::new().chain_update(m).chain_update(x.0).finalize();
            let hi = Sha256::new()
                .chain_update([0x01])
                .chain_update(m)
                .chain_update(x.0)
                .finalize();
            wide[..32].copy_from_slice(&lo);
            wide[32..].copy_from_slice(&hi);
            Scalar::reduce_wide(&wide)
        }
        Suite::MmoMdc2 => {
            let mut wide = [0u8; 64];
            let mut h = Mdc2::new();
            h.update(m).update(&x.0);
            wide[..32].copy_from_slice(&h.finalize());
            let mut h = Mdc2::new();
            h.update(&[0x01]).update(m).update(&x.0);
            wide[32..].copy_from_slice(&h.finalize());
            Scalar::reduce_wide(&wide)
        }
        Suite::MmoAddQ => {
            if m.len() >= ADD_Q_MAX_ENTRY {
                return Err(Error::Unsupported { len: m.len() });
            }
            Ok(Scalar::reduce_be(m)? + Scalar::reduce_be(&x.0)?)
        }
    }
}
