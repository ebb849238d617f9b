use std::collections::HashMap;

use crate::error::{Error, Result};

/// A partition of state indices `0..n`.
///
/// Always canonical: members ascending within a block, blocks ordered by
/// least member. Two partitions describing the same relation compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

impl Partition {
    /// Build from a block label per state; labels are arbitrary.
    pub fn from_labels<L: Eq + std::hash::Hash>(labels: &[L]) -> Partition {
        let mut ids: HashMap<&L, usize> = HashMap::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut block_of = Vec::with_capacity(labels.len());
        for (state, label) in labels.iter().enumerate() {
            let id = *ids.entry(label).or_insert_with(|| {
                blocks.push(Vec::new());
                blocks.len() - 1
            });
            blocks[id].push(state);
            block_of.push(id);
        }
        // first-occurrence numbering already orders blocks by least member
        Partition { blocks, block_of }
    }

    pub fn from_blocks(states: usize, blocks: &[Vec<usize>]) -> Result<Partition> {
        let mut labels = vec![usize::MAX; states];
        for (id, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            for &s in block {
                if s >= states {
                    return Err(Error::InvalidPartition(format!("state {s} out of range")));
                }
                if labels[s] != usize::MAX {
                    return Err(Error::InvalidPartition(format!("state {s} in two blocks")));
                }
                labels[s] = id;
            }
        }
        if let Some(s) = labels.iter().position(|&l| l == usize::MAX) {
            return Err(Error::InvalidPartition(format!("state {s} is not covered")));
        }
        Ok(Partition::from_labels(&labels))
    }

    pub fn single_block(states: usize) -> Partition {
        Partition::from_labels(&vec![0; states])
    }

    pub fn discrete(states: usize) -> Partition {
        Partition::from_labels(&(0..states).collect::<Vec<_>>())
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block(&self, id: usize) -> &[usize] {
        &self.blocks[id]
    }

    pub fn block_of(&self, state: usize) -> usize {
        self.block_of[state]
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn num_states(&self) -> usize {
        self.block_of.len()
    }

    pub fn same_block(&self, a: usize, b: usize) -> bool {
        self.block_of[a] == self.block_of[b]
    }

    /// Every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.num_states() == coarser.num_states()
            && self.blocks.iter().all(|b| b.iter().all(|&s| coarser.same_block(s, b[0])))
    }

    /// Finest partition coarser than both: the transitive closure of the union
    /// of the two relations.
    pub fn join(&self, other: &Partition) -> Partition {
        let mut uf = UnionFind::new(self.num_states());
        for blocks in [&self.blocks, &other.blocks] {
            for block in blocks.iter() {
                for &s in &block[1..] {
                    uf.union(block[0], s);
                }
            }
        }
        uf.into_partition()
    }

    /// Restrict to the states of `range`, renumbered from zero.
    pub fn restrict(&self, range: std::ops::Range<usize>) -> Partition {
        let labels: Vec<usize> = range.map(|s| self.block_of[s]).collect();
        Partition::from_labels(&labels)
    }
}

/// Disjoint sets over `0..n`.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> UnionFind {
        UnionFind { parent: (0..n).collect() }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }

    pub fn into_partition(mut self) -> Partition {
        let labels: Vec<usize> = (0..self.parent.len()).map(|s| self.find(s)).collect();
        Partition::from_labels(&labels)
    }
}
