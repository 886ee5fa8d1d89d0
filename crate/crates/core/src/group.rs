//! Scalar field and prime-order group.
//!
//! The group is ristretto255: prime order `q = 2^252 + 27742317777372353535851937790883648493`,
//! 32-byte canonical encodings that are validated on decode. Scalars are
//! encoded as 32-byte big-endian integers in `[0, q)`.
//!
//! Every group operation bumps a per-thread counter (see [`OpCounts`]) so the
//! cost profile of signing and verification can be asserted directly.

use std::cell::Cell;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use curve25519_dalek::constants::{RISTRETTO_BASEPOINT_POINT, RISTRETTO_BASEPOINT_TABLE};
use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoPoint};
use curve25519_dalek::scalar::Scalar as DalekScalar;
use curve25519_dalek::traits::{Identity, IsIdentity, VartimeMultiscalarMul};
use rand::{CryptoRng, RngCore};

use crate::error::{Error, Result};

/// Big-endian encoding of the group order.
pub const ORDER_BE: [u8; 32] = [
    0x10, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
    0x00, 0x14, 0xde, 0xf9, 0xde, 0xa2, 0xf7, 0x9c, 0xd6, 0x58, 0x12, 0x63, 0x1a, 0x5c, 0xf5,
    0xd3, 0xed,
];

pub const SCALAR_BYTES: usize = 32;
pub const ELEMENT_BYTES: usize = 32;

/// Element of `Z_q`, always held in canonical reduced form.
#[derive(Clone, Copy, PartialEq, Eq, Default)]
pub struct Scalar(DalekScalar);

impl Scalar {
    pub const ZERO: Scalar = Scalar(DalekScalar::ZERO);
    pub const ONE: Scalar = Scalar(DalekScalar::ONE);

    pub fn from_u64(v: u64) -> Self {
        Scalar(DalekScalar::from(v))
    }

    /// Uniform element of `Z_q^*`.
    pub fn random_nonzero<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        loop {
            let s = Scalar(DalekScalar::random(rng));
            if s != Self::ZERO {
                return s;
            }
        }
    }

    /// Interprets 64 bytes as a big-endian integer and reduces it mod `q`.
    pub fn reduce_wide(bytes: &[u8]) -> Result<Self> {
        let wide: &[u8; 64] = bytes.try_into().map_err(|_| Error::Length {
            expected: 64,
            actual: bytes.len(),
        })?;
        let mut le = *wide;
        le.reverse();
        Ok(Scalar(DalekScalar::from_bytes_mod_order_wide(&le)))
    }

    /// Reduces a big-endian integer of at most 64 bytes mod `q`.
    pub fn reduce_be(bytes: &[u8]) -> Result<Self> {
        if bytes.len() > 64 {
            return Err(Error::Length {
                expected: 64,
                actual: bytes.len(),
            });
        }
        let mut wide = [0u8; 64];
        wide[64 - bytes.len()..].copy_from_slice(bytes);
        Self::reduce_wide(&wide)
    }

    /// Strict decode: rejects values `>= q`.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let be: &[u8; 32] = bytes.try_into().map_err(|_| Error::Length {
            expected: SCALAR_BYTES,
            actual: bytes.len(),
        })?;
        let mut le = *be;
        le.reverse();
        Option::from(DalekScalar::from_canonical_bytes(le))
            .map(Scalar)
            .ok_or(Error::Encoding("non-canonical scalar"))
    }

    pub fn to_bytes(&self) -> [u8; 32] {
        let mut be = self.0.to_bytes();
        be.reverse();
        be
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::ZERO
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scalar(")?;
        for b in self.to_bytes() {
            write!(f, "{b:02x}")?;
        }
        write!(f, ")")
    }
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 + rhs.0)
    }
}

impl AddAssign for Scalar {
    fn add_assign(&mut self, rhs: Scalar) {
        self.0 += rhs.0;
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    fn sub(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 - rhs.0)
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 * rhs.0)
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar(-self.0)
    }
}

impl Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a Scalar> for Scalar {
    fn sum<I: Iterator<Item = &'a Scalar>>(iter: I) -> Scalar {
        iter.copied().sum()
    }
}

/// Element of the prime-order group generated by `alpha`.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct GroupElement(RistrettoPoint);

impl GroupElement {
    pub fn identity() -> Self {
        GroupElement(RistrettoPoint::identity())
    }

    pub fn generator() -> Self {
        GroupElement(RISTRETTO_BASEPOINT_POINT)
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_identity()
    }

    /// `alpha^s`.
    pub fn exp_base(s: &Scalar) -> Self {
        bump(|c| c.exp_base += 1);
        GroupElement(RISTRETTO_BASEPOINT_TABLE * &s.0)
    }

    /// `self^s` for an arbitrary base.
    pub fn exp(&self, s: &Scalar) -> Self {
        bump(|c| c.exp_var += 1);
        GroupElement(self.0 * s.0)
    }

    /// `y^e * alpha^s` as one double-scalar multiplication.
    pub fn commit_check(y: &GroupElement, e: &Scalar, s: &Scalar) -> Self {
        bump(|c| c.double_exp += 1);
        GroupElement(RistrettoPoint::vartime_double_scalar_mul_basepoint(
            &e.0, &y.0, &s.0,
        ))
    }

    /// `prod_i bases[i]^scalars[i]`; a single multi-exponentiation.
    pub fn multi_exp(scalars: &[Scalar], bases: &[GroupElement]) -> Self {
        bump(|c| c.multi_exp += 1);
        GroupElement(RistrettoPoint::vartime_multiscalar_mul(
            scalars.iter().map(|s| s.0),
            bases.iter().map(|b| b.0),
        ))
    }

    /// The group operation.
    pub fn combine(&self, other: &GroupElement) -> Self {
        bump(|c| c.combine += 1);
        GroupElement(self.0 + other.0)
    }

    pub fn to_bytes(&self) -> [u8; 32] {
        self.0.compress().to_bytes()
    }

    /// Decodes and validates a canonical encoding.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let compressed = CompressedRistretto::from_slice(bytes).map_err(|_| Error::Length {
            expected: ELEMENT_BYTES,
            actual: bytes.len(),
        })?;
        compressed
            .decompress()
            .map(GroupElement)
            .ok_or(Error::Encoding("invalid group element"))
    }
}

impl Default for GroupElement {
    fn default() -> Self {
        Self::identity()
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupElement(")?;
        for b in self.to_bytes() {
            write!(f, "{b:02x}")?;
        }
        write!(f, ")")
    }
}

/// Counts of group operations performed on the current thread.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounts {
    /// Fixed-base exponentiations `alpha^s`.
    pub exp_base: u64,
    /// Variable-base exponentiations.
    pub exp_var: u64,
    /// Double exponentiations `y^e * alpha^s`.
    pub double_exp: u64,
    pub multi_exp: u64,
    /// Group combinations.
    pub combine: u64,
}

impl OpCounts {
    /// Exponentiations of any kind, a double exponentiation counting once.
    pub fn exponentiations(&self) -> u64 {
        self.exp_base + self.exp_var + self.double_exp + self.multi_exp
    }

    /// Counter delta since `earlier`.
    pub fn since(&self, earlier: &OpCounts) -> OpCounts {
        OpCounts {
            exp_base: self.exp_base - earlier.exp_base,
            exp_var: self.exp_var - earlier.exp_var,
            double_exp: self.double_exp - earlier.double_exp,
            multi_exp: self.multi_exp - earlier.multi_exp,
            combine: self.combine - earlier.combine,
        }
    }

    /// Snapshot of this thread's counters.
    pub fn current() -> OpCounts {
        COUNTS.with(Cell::get)
    }

    /// Runs `f` and returns its result along with the operations it performed
    /// on the calling thread.
    pub fn measure<T>(f: impl FnOnce() -> T) -> (T, OpCounts) {
        let before = Self::current();
        let out = f();
        (out, Self::current().since(&before))
    }
}

thread_local! {
    static COUNTS: Cell<OpCounts> = const { Cell::new(OpCounts {
        exp_base: 0,
        exp_var: 0,
        double_exp: 0,
        multi_exp: 0,
        combine: 0,
    }) };
}

fn bump(f: impl FnOnce(&mut OpCounts)) {
    COUNTS.with(|c| {
        let mut v = c.get();
        f(&mut v);
        c.set(v);
    });
}
