//! Seed tree and the disclosed-seed stack.
//!
//! Leaves `x_0[i]` are the per-epoch seeds. A node at depth `d` and index `i`
//! has children `x_{d-1}[2i] = PRF_0(x_d[i])` and `x_{d-1}[2i+1] = PRF_1(x_d[i])`;
//! the root sits at depth `D` with index 0.
//!
//! The disclosed-seed stack holds the fewest nodes whose subtrees cover
//! exactly the leaves released so far: after epoch `i` it has `popcount(i+1)`
//! entries with strictly decreasing depths from bottom to top.

use crate::error::{Error, Result};
use crate::params::Suite;
use crate::primitives::{prf, Seed, SEED_BYTES};
use crate::wire::Reader;

/// Encoded size of one stack record.
pub const NODE_BYTES: usize = 1 + 4 + SEED_BYTES;

/// Deepest tree supported; leaf indices must fit in `u32`.
pub const MAX_DEPTH: u8 = 31;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedNode {
    pub depth: u8,
    pub index: u32,
    pub value: Seed,
}

impl SeedNode {
    pub fn root(depth: u8, value: Seed) -> Self {
        SeedNode {
            depth,
            index: 0,
            value,
        }
    }

    /// First leaf covered by this node.
    pub fn first_leaf(&self) -> u64 {
        (self.index as u64) << self.depth
    }

    /// One past the last leaf covered by this node.
    pub fn leaf_end(&self) -> u64 {
        (self.index as u64 + 1) << self.depth
    }

    pub fn covers_leaf(&self, leaf: u64) -> bool {
        (self.first_leaf()..self.leaf_end()).contains(&leaf)
    }
}

/// Derives node `(depth, index)` from `source` by walking down its subtree.
pub fn sc(suite: Suite, source: &SeedNode, depth: u8, index: u32) -> Result<SeedNode> {
    let outside = Error::OutsideSubtree { depth, index };
    if depth > source.depth {
        return Err(outside);
    }
    let steps = source.depth - depth;
    if (index as u64) >> steps != source.index as u64 {
        return Err(outside);
    }
    let mut value = source.value;
    for level in (0..steps).rev() {
        let bit = ((index >> level) & 1) as u8;
        value = prf(suite, bit, &value);
    }
    Ok(SeedNode {
        depth,
        index,
        value,
    })
}

/// The disclosed-seed stack, bottom first.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SeedStack {
    nodes: Vec<SeedNode>,
}

impl SeedStack {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a stack from nodes listed bottom to top, checking the layout.
    pub fn from_nodes(nodes: Vec<SeedNode>) -> Result<Self> {
        let stack = SeedStack { nodes };
        stack.check_layout()?;
        Ok(stack)
    }

    pub fn nodes(&self) -> &[SeedNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn top(&self) -> Option<&SeedNode> {
        self.nodes.last()
    }

    /// Number of leaves disclosed: every epoch below this is retrievable.
    pub fn coverage(&self) -> u64 {
        self.top().map_or(0, SeedNode::leaf_end)
    }

    /// Mutable access to a node's seed bytes.
    #[doc(hidden)]
    pub fn node_mut(&mut self, k: usize) -> &mut SeedNode {
        &mut self.nodes[k]
    }

    fn check_layout(&self) -> Result<()> {
        let mut next_leaf = 0u64;
        let mut prev_depth: Option<u8> = None;
        for node in &self.nodes {
            if node.depth > MAX_DEPTH {
                return Err(Error::Encoding("node depth out of range"));
            }
            if prev_depth.is_some_and(|d| node.depth >= d) {
                return Err(Error::Encoding("stack depths must strictly decrease"));
            }
            if node.first_leaf() != next_leaf {
                return Err(Error::Encoding("stack nodes must cover contiguous leaves"));
            }
            next_leaf = node.leaf_end();
            prev_depth = Some(node.depth);
        }
        Ok(())
    }

    pub fn encoded_len(&self) -> usize {
        1 + self.nodes.len() * NODE_BYTES
    }

    pub fn write(&self, out: &mut Vec<u8>) {
        out.push(self.nodes.len() as u8);
        for n in &self.nodes {
            out.push(n.depth);
            out.extend_from_slice(&n.index.to_be_bytes());
            out.extend_from_slice(&n.value.0);
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        self.write(&mut out);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let stack = Self::read(&mut r)?;
        r.finish()?;
        Ok(stack)
    }

    pub(crate) fn read(r: &mut Reader<'_>) -> Result<Self> {
        let count = r.u8()? as usize;
        let mut nodes = Vec::with_capacity(count);
        for _ in 0..count {
            let depth = r.u8()?;
            let index = r.u32()?;
            let value = Seed::from_slice(r.take(SEED_BYTES)?)?;
            nodes.push(SeedNode {
                depth,
                index,
                value,
            });
        }
        Self::from_nodes(nodes)
    }
}

/// Advances the stack to cover epoch `epoch` and returns the leaf seed.
///
/// `prev` must be the stack after epoch `epoch - 1` (empty for epoch 0).
/// Completed sibling subtrees are merged into their parent, derived afresh
/// from `root`.
pub fn so(suite: Suite, prev: &SeedStack, root: &SeedNode, epoch: u32) -> Result<(SeedStack, Seed)> {
    let capacity = 1u64 << root.depth;
    if epoch as u64 >= capacity {
        return Err(Error::Exhausted {
            epoch: epoch as u64,
            capacity,
        });
    }
    if prev.coverage() != epoch as u64 {
        return Err(Error::Sequence {
            expected: prev.coverage(),
            actual: epoch as u64,
        });
    }
    let mut nodes = prev.nodes.clone();
    let (mut depth, mut index) = (0u8, epoch);
    while nodes.last().is_some_and(|top| top.depth == depth) {
        nodes.pop();
        depth += 1;
        index >>= 1;
    }
    let node = sc(suite, root, depth, index)?;
    nodes.push(node);
    let leaf = sc(suite, &node, 0, epoch)?.value;
    Ok((SeedStack { nodes }, leaf))
}

/// Retrieves leaf seed `epoch` from a stack without modifying it.
pub fn sr(suite: Suite, ds: &SeedStack, epoch: u32) -> Result<Seed> {
    let leaf = epoch as u64;
    if leaf >= ds.coverage() {
        return Err(Error::Undisclosed(epoch));
    }
    let node = ds
        .nodes
        .iter()
        .rev()
        .find(|n| n.first_leaf() <= leaf)
        .expect("contiguous stack covers every leaf below its coverage");
    Ok(sc(suite, node, 0, epoch)?.value)
}

/// Leaf seeds for several epochs at once, in the order given.
///
/// Epochs sharing a covering stack node share the PRF calls on their common
/// path, so a run of consecutive epochs costs about two calls per leaf.
pub fn sr_many(suite: Suite, ds: &SeedStack, epochs: &[u32]) -> Vec<Result<Seed>> {
    let mut out: Vec<Result<Seed>> = epochs.iter().map(|&e| Err(Error::Undisclosed(e))).collect();
    let mut wanted: Vec<(u32, usize)> = epochs
        .iter()
        .enumerate()
        .filter(|(_, &e)| (e as u64) < ds.coverage())
        .map(|(k, &e)| (e, k))
        .collect();
    wanted.sort_unstable();
    let mut rest = wanted.as_slice();
    for node in &ds.nodes {
        let split = rest.partition_point(|(e, _)| (*e as u64) < node.leaf_end());
        let (here, tail) = rest.split_at(split);
        expand(suite, node, here, &mut out);
        rest = tail;
    }
    out
}

fn expand(suite: Suite, node: &SeedNode, targets: &[(u32, usize)], out: &mut [Result<Seed>]) {
    if targets.is_empty() {
        return;
    }
    if node.depth == 0 {
        for &(_, k) in targets {
            out[k] = Ok(node.value);
        }
        return;
    }
    let mid = ((2 * node.index as u64 + 1) << (node.depth - 1)) as u32;
    let split = targets.partition_point(|(e, _)| *e < mid);
    for (bit, part) in [(0u8, &targets[..split]), (1, &targets[split..])] {
        if !part.is_empty() {
            let child = SeedNode {
                depth: node.depth - 1,
                index: 2 * node.index + bit as u32,
                value: prf(suite, bit, &node.value),
            };
            expand(suite, &child, part, out);
        }
    }
}
