//! On-disk formats owned by the command-line tool: length-prefixed log files,
//! signature files, and atomic replacement of key files.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use poslo::coarse::{self, EpochSignature};
use poslo::distill::Scheme;
use poslo::fine::{self, FineSignature};

use crate::CliError;

/// Reads records of a log file: a 4-byte little-endian length, then that
/// many payload bytes.
pub struct LogReader<R> {
    inner: R,
    records: u64,
}

impl LogReader<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self, CliError> {
        Ok(LogReader::new(BufReader::new(File::open(path)?)))
    }
}

impl<R: BufRead> LogReader<R> {
    pub fn new(inner: R) -> Self {
        LogReader { inner, records: 0 }
    }

    pub fn next_record(&mut self) -> Result<Option<Vec<u8>>, CliError> {
        if self.inner.fill_buf()?.is_empty() {
            return Ok(None);
        }
        let mut len = [0u8; 4];
        self.inner
            .read_exact(&mut len)
            .map_err(|_| CliError::Format(format!("log record {} has a truncated length", self.records)))?;
        let len = u32::from_le_bytes(len) as usize;
        if len == 0 {
            return Err(CliError::Format(format!("log record {} is empty", self.records)));
        }
        let mut payload = vec![0u8; len];
        self.inner
            .read_exact(&mut payload)
            .map_err(|_| CliError::Format(format!("log record {} is truncated", self.records)))?;
        self.records += 1;
        Ok(Some(payload))
    }

    /// Up to `n` records; fewer only at the end of the file.
    pub fn take(&mut self, n: usize) -> Result<Vec<Vec<u8>>, CliError> {
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            match self.next_record()? {
                Some(r) => out.push(r),
                None => break,
            }
        }
        Ok(out)
    }

    pub fn read_all(mut self) -> Result<Vec<Vec<u8>>, CliError> {
        let mut out = Vec::new();
        while let Some(r) = self.next_record()? {
            out.push(r);
        }
        Ok(out)
    }
}

#[cfg(test)]
fn write_record(out: &mut impl Write, payload: &[u8]) -> io::Result<()> {
    let len = u32::try_from(payload.len()).map_err(|_| io::Error::other("record too long"))?;
    out.write_all(&len.to_le_bytes())?;
    out.write_all(payload)
}

pub const SIG_FILE_MAGIC: &[u8; 4] = b"PSGS";
pub const SIG_HEADER_BYTES: usize = 13;

/// Header of a signature file: scheme and the index (epoch or entry) of the
/// first signature it holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SigHeader {
    pub scheme: Scheme,
    pub start: u64,
}

impl SigHeader {
    pub fn to_bytes(self) -> [u8; SIG_HEADER_BYTES] {
        let mut out = [0u8; SIG_HEADER_BYTES];
        out[..4].copy_from_slice(SIG_FILE_MAGIC);
        out[4] = self.scheme.id();
        out[5..].copy_from_slice(&self.start.to_be_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CliError> {
        if bytes.len() < SIG_HEADER_BYTES || &bytes[..4] != SIG_FILE_MAGIC {
            return Err(CliError::Format("not a signature file".into()));
        }
        Ok(SigHeader {
            scheme: Scheme::from_id(bytes[4])?,
            start: u64::from_be_bytes(bytes[5..13].try_into().unwrap()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnySignature {
    Coarse(EpochSignature),
    Fine(FineSignature),
}

/// Streams signatures out of a signature file.
pub struct SigReader<R> {
    inner: R,
    pub header: SigHeader,
    buf: Vec<u8>,
    pos: usize,
    eof: bool,
}

const READ_CHUNK: usize = 64 << 10;

impl SigReader<File> {
    pub fn open(path: &Path) -> Result<Self, CliError> {
        SigReader::new(File::open(path)?)
    }
}

impl<R: Read> SigReader<R> {
    pub fn new(mut inner: R) -> Result<Self, CliError> {
        let mut head = [0u8; SIG_HEADER_BYTES];
        inner
            .read_exact(&mut head)
            .map_err(|_| CliError::Format("not a signature file".into()))?;
        Ok(SigReader {
            inner,
            header: SigHeader::from_bytes(&head)?,
            buf: Vec::new(),
            pos: 0,
            eof: false,
        })
    }

    fn refill(&mut self) -> io::Result<()> {
        self.buf.drain(..self.pos);
        self.pos = 0;
        let have = self.buf.len();
        self.buf.resize(have + READ_CHUNK, 0);
        let n = self.inner.read(&mut self.buf[have..])?;
        self.buf.truncate(have + n);
        self.eof = n == 0;
        Ok(())
    }

    pub fn next_signature(&mut self) -> Result<Option<AnySignature>, CliError> {
        loop {
            let rest = &self.buf[self.pos..];
            if !rest.is_empty() {
                let parsed = match self.header.scheme {
                    Scheme::Coarse => EpochSignature::read_prefix(rest).map(|(s, n)| (AnySignature::Coarse(s), n)),
                    Scheme::Fine => FineSignature::read_prefix(rest).map(|(s, n)| (AnySignature::Fine(s), n)),
                };
                match parsed {
                    Ok((sig, n)) => {
                        self.pos += n;
                        return Ok(Some(sig));
                    }
                    Err(e) if self.eof => return Err(e.into()),
                    Err(_) => {}
                }
            } else if self.eof {
                return Ok(None);
            }
            self.refill()?;
        }
    }

    pub fn read_all(mut self) -> Result<Vec<AnySignature>, CliError> {
        let mut out = Vec::new();
        while let Some(sig) = self.next_signature()? {
            out.push(sig);
        }
        Ok(out)
    }
}

/// Opens a signature file for appending signatures that start at `next`.
/// A new file is created with a header; an existing one must continue
/// exactly where it ends.
pub fn open_sig_output(path: &Path, scheme: Scheme, next: u64) -> Result<BufWriter<File>, CliError> {
    if path.exists() {
        let reader = SigReader::open(path)?;
        let header = reader.header;
        let count = reader.read_all()?.len() as u64;
        if header.scheme != scheme {
            return Err(CliError::Format("signature file holds the other scheme".into()));
        }
        if header.start + count != next {
            return Err(CliError::State(format!(
                "signature file ends at index {}, key is at {next}",
                header.start + count
            )));
        }
        Ok(BufWriter::new(OpenOptions::new().append(true).open(path)?))
    } else {
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(&SigHeader { scheme, start: next }.to_bytes())?;
        Ok(out)
    }
}

fn temp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}

/// Replaces `path` with `bytes` through a synced temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = temp_path(path);
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

pub enum AnySecretKey {
    Coarse(coarse::SecretKey),
    Fine(fine::SecretKey),
}

pub enum AnyPublicKey {
    Coarse(coarse::PublicKey),
    Fine(fine::PublicKey),
}

fn magic(bytes: &[u8]) -> &[u8] {
    &bytes[..bytes.len().min(4)]
}

impl AnySecretKey {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let bytes = fs::read(path)?;
        match magic(&bytes) {
            m if m == coarse::SK_MAGIC => Ok(AnySecretKey::Coarse(coarse::SecretKey::from_bytes(&bytes)?)),
            m if m == fine::SK_MAGIC => Ok(AnySecretKey::Fine(fine::SecretKey::from_bytes(&bytes)?)),
            _ => Err(CliError::Format(format!("{} is not a secret key", path.display()))),
        }
    }
}

impl AnyPublicKey {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let bytes = fs::read(path)?;
        match magic(&bytes) {
            m if m == coarse::PK_MAGIC => Ok(AnyPublicKey::Coarse(coarse::PublicKey::from_bytes(&bytes)?)),
            m if m == fine::PK_MAGIC => Ok(AnyPublicKey::Fine(fine::PublicKey::from_bytes(&bytes)?)),
            _ => Err(CliError::Format(format!("{} is not a public key", path.display()))),
        }
    }

    pub fn scheme(&self) -> Scheme {
        match self {
            AnyPublicKey::Coarse(_) => Scheme::Coarse,
            AnyPublicKey::Fine(_) => Scheme::Fine,
        }
    }

    pub fn config(&self) -> &poslo::SuiteConfig {
        match self {
            AnyPublicKey::Coarse(pk) => pk.config(),
            AnyPublicKey::Fine(pk) => pk.config(),
        }
    }

    pub fn y(&self) -> &poslo::GroupElement {
        match self {
            AnyPublicKey::Coarse(pk) => pk.y(),
            AnyPublicKey::Fine(pk) => pk.y(),
        }
    }
}
