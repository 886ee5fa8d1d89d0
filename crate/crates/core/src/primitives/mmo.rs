//! Block-cipher hashes over AES-128: Matyas-Meyer-Oseas (single length) and
//! MDC-2 (double length).
//!
//! Messages are padded with a `0x80` byte followed by zeros up to the next
//! 16-byte boundary; a message that already ends on a boundary gains a full
//! padding block.

use aes::cipher::{BlockEncrypt, KeyInit};
use aes::Aes128Enc;

pub const BLOCK: usize = 16;

/// MMO initial chaining value; also the first MDC-2 chain.
pub const IV: [u8; BLOCK] = [0x52; BLOCK];
/// Second MDC-2 chain.
pub const IV_PRIME: [u8; BLOCK] = [0x25; BLOCK];

type Block = [u8; BLOCK];

/// `E_key(m) xor m`.
#[inline]
fn compress(key: &Block, m: &Block) -> Block {
    super::bump(|c| c.aes_calls += 1);
    let cipher = Aes128Enc::new(key.into());
    let mut out = aes::Block::clone_from_slice(m);
    cipher.encrypt_block(&mut out);
    let mut h = [0u8; BLOCK];
    for (o, (c, p)) in h.iter_mut().zip(out.iter().zip(m)) {
        *o = c ^ p;
    }
    h
}

/// Buffers input and feeds complete blocks to a compression callback.
#[derive(Clone)]
struct Blocks {
    buf: Block,
    len: usize,
}

impl Blocks {
    fn new() -> Self {
        Blocks {
            buf: [0; BLOCK],
            len: 0,
        }
    }

    fn update(&mut self, mut data: &[u8], mut f: impl FnMut(&Block)) {
        if self.len > 0 {
            let n = (BLOCK - self.len).min(data.len());
            self.buf[self.len..self.len + n].copy_from_slice(&data[..n]);
            self.len += n;
            data = &data[n..];
            if self.len < BLOCK {
                return;
            }
            f(&self.buf);
            self.len = 0;
        }
        let mut chunks = data.chunks_exact(BLOCK);
        for chunk in &mut chunks {
            f(chunk.try_into().unwrap());
        }
        let rest = chunks.remainder();
        self.buf[..rest.len()].copy_from_slice(rest);
        self.len = rest.len();
    }

    fn finish(mut self, mut f: impl FnMut(&Block)) {
        self.buf[self.len] = 0x80;
        self.buf[self.len + 1..].fill(0);
        f(&self.buf);
    }
}

/// Incremental MMO hasher producing a 16-byte digest.
#[derive(Clone)]
pub struct Mmo {
    h: Block,
    blocks: Blocks,
}

impl Default for Mmo {
    fn default() -> Self {
        Self::new()
    }
}

impl Mmo {
    pub fn new() -> Self {
        Mmo {
            h: IV,
            blocks: Blocks::new(),
        }
    }

    pub fn update(&mut self, data: &[u8]) -> &mut Self {
        let h = &mut self.h;
        self.blocks.update(data, |m| *h = compress(h, m));
        self
    }

    pub fn finalize(self) -> [u8; BLOCK] {
        let mut h = self.h;
        self.blocks.finish(|m| h = compress(&h, m));
        h
    }
}

/// Incremental MDC-2 hasher producing a 32-byte digest.
#[derive(Clone)]
pub struct Mdc2 {
    h: Block,
    h_prime: Block,
    blocks: Blocks,
}

impl Default for Mdc2 {
    fn default() -> Self {
        Self::new()
    }
}

impl Mdc2 {
    pub fn new() -> Self {
        Mdc2 {
            h: IV,
            h_prime: IV_PRIME,
            blocks: Blocks::new(),
        }
    }

    fn step(h: &mut Block, h_prime: &mut Block, m: &Block) {
        let mut a = compress(h, m);
        let mut b = compress(h_prime, m);
        // swap right halves between the two chains
        a[BLOCK / 2..].swap_with_slice(&mut b[BLOCK / 2..]);
        *h = a;
        *h_prime = b;
    }

    pub fn update(&mut self, data: &[u8]) -> &mut Self {
        let (h, hp) = (&mut self.h, &mut self.h_prime);
        self.blocks.update(data, |m| Self::step(h, hp, m));
        self
    }

    pub fn finalize(self) -> [u8; 2 * BLOCK] {
        let (mut h, mut hp) = (self.h, self.h_prime);
        self.blocks.finish(|m| Self::step(&mut h, &mut hp, m));
        let mut out = [0u8; 2 * BLOCK];
        out[..BLOCK].copy_from_slice(&h);
        out[BLOCK..].copy_from_slice(&hp);
        out
    }
}

pub fn mmo_hash(m: &[u8]) -> [u8; BLOCK] {
    let mut h = Mmo::new();
    h.update(m);
    h.finalize()
}

pub fn mdc2_hash(m: &[u8]) -> [u8; 2 * BLOCK] {
    let mut h = Mdc2::new();
    h.update(m);
    h.finalize()
}
