use crate::error::{Error, Result};

/// Primitive suite: which PRF and message hash instantiate the scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    /// SHA-256 for both the PRF and the message hash.
    Sha256 = 0x01,
    /// MMO-AES-128 PRF, MDC-2-AES-128 message hash.
    MmoMdc2 = 0x02,
    /// MMO-AES-128 PRF, modular addition as the message hash.
    MmoAddQ = 0x03,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::Sha256, Suite::MmoMdc2, Suite::MmoAddQ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            0x01 => Ok(Suite::Sha256),
            0x02 => Ok(Suite::MmoMdc2),
            0x03 => Ok(Suite::MmoAddQ),
            _ => Err(Error::Encoding("unknown suite id")),
        }
    }

    /// Longest entry (exclusive) the message hash accepts, if bounded.
    pub fn max_entry_len(self) -> Option<usize> {
        match self {
            Suite::MmoAddQ => Some(crate::primitives::ADD_Q_MAX_ENTRY),
            _ => None,
        }
    }
}

/// Scheme parameters shared by signer and verifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SuiteConfig {
    pub suite: Suite,
    /// Number of epochs; a power of two `>= 2`.
    pub n1: u32,
    /// Entries per epoch.
    pub n2: u32,
    /// Number of umbrella aggregates kept after distillation; divides `n1`.
    pub n_u: u32,
}

impl SuiteConfig {
    pub fn new(suite: Suite, n1: u32, n2: u32, n_u: u32) -> Result<Self> {
        let cfg = SuiteConfig { suite, n1, n2, n_u };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 < 2 || !self.n1.is_power_of_two() {
            return Err(Error::Params("n1 must be a power of two".into()));
        }
        if self.n2 == 0 {
            return Err(Error::Params("n2 must be positive".into()));
        }
        if self.n_u == 0 || !self.n1.is_multiple_of(self.n_u) {
            return Err(Error::Params("umbrella count must divide n1".into()));
        }
        Ok(())
    }

    /// Tree depth `D = log2(n1)`.
    pub fn depth(&self) -> u8 {
        self.n1.trailing_zeros() as u8
    }

    /// Total number of signable entries.
    pub fn capacity(&self) -> u64 {
        self.n1 as u64 * self.n2 as u64
    }

    /// Epochs per umbrella.
    pub fn umbrella_width(&self) -> u32 {
        self.n1 / self.n_u
    }

    pub(crate) fn write(&self, out: &mut Vec<u8>) {
        out.push(self.suite.id());
        out.extend_from_slice(&self.n1.to_be_bytes());
        out.extend_from_slice(&self.n2.to_be_bytes());
        out.extend_from_slice(&self.n_u.to_be_bytes());
    }

    pub(crate) fn read(r: &mut crate::wire::Reader<'_>) -> Result<Self> {
        let suite = Suite::from_id(r.u8()?)?;
        let n1 = r.u32()?;
        let n2 = r.u32()?;
        let n_u = r.u32()?;
        SuiteConfig::new(suite, n1, n2, n_u)
    }
}
