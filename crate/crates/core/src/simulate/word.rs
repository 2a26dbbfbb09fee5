use serde::{Deserialize, Serialize};

/// A state inside one factor: an index for finite factors, a lattice point
/// for Z and Z^2 (Z uses the first coordinate only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Site {
    Finite(usize),
    Lattice(i64, i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Block {
    pub factor: usize,
    pub site: Site,
}

/// What a single step did to the word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Push,
    Replace,
    Pop,
}

/// Element of the free product: a stack of non-root blocks, no two adjacent
/// blocks from the same factor. The empty word is the root.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Word {
    blocks: Vec<Block>,
}

impl Word {
    pub fn new() -> Self {
        Word::default()
    }

    pub fn from_blocks(blocks: Vec<Block>) -> Self {
        Word { blocks }
    }

    /// Block length l(x).
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn top(&self) -> Option<&Block> {
        self.blocks.last()
    }

    /// Type of the word: factor of the terminal block.
    pub fn word_type(&self) -> Option<usize> {
        self.top().map(|b| b.factor)
    }

    /// Number of blocks from each of `r` factors.
    pub fn partial_lengths(&self, r: usize) -> Vec<usize> {
        let mut out = vec![0; r];
        for b in &self.blocks {
            out[b.factor] += 1;
        }
        out
    }

    /// Move factor `factor` to `site`. The factor's current site is the top
    /// block if it belongs to `factor`, the factor root otherwise; arriving
    /// at the root removes the block.
    pub fn apply(&mut self, factor: usize, site: Site, is_root: bool) -> Move {
        match self.blocks.last_mut() {
            Some(top) if top.factor == factor => {
                if is_root {
                    self.blocks.pop();
                    Move::Pop
                } else {
                    top.site = site;
                    Move::Replace
                }
            }
            _ => {
                debug_assert!(!is_root, "a step from the root cannot stay at the root");
                self.blocks.push(Block { factor, site });
                Move::Push
            }
        }
    }

    /// No two adjacent blocks share a factor and no block sits at a root.
    pub fn is_reduced(&self, is_root: impl Fn(&Block) -> bool) -> bool {
        self.blocks.iter().all(|b| !is_root(b))
            && self.blocks.windows(2).all(|w| w[0].factor != w[1].factor)
    }

    /// Length of the longest common prefix with `other`.
    pub fn common_prefix(&self, other: &Word) -> usize {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .take_while(|(a, b)| a == b)
            .count()
    }
}
