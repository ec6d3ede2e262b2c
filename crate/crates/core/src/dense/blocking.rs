//! Block partitions of `0..n`.
//!
//! Externally a blocking is described by the 1-based list of block starts
//! terminated by the past-the-end marker `n + 1`, e.g. `[1, 3, 5]` for two
//! blocks of size 2 on a 4×4 matrix. Internally offsets are 0-based.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Blocking {
    /// 0-based block starts followed by `n`.
    offsets: Vec<usize>,
}

impl Blocking {
    /// Blocks of size `nb`; the last block takes the remainder.
    pub fn uniform(n: usize, nb: usize) -> Result<Self> {
        if n == 0 || nb == 0 {
            return Err(Error::invalid("uniform blocking needs n > 0 and nb > 0"));
        }
        let mut offsets: Vec<usize> = (0..n).step_by(nb).collect();
        offsets.push(n);
        Ok(Self { offsets })
    }

    /// One block covering everything.
    pub fn single(n: usize) -> Result<Self> {
        Self::uniform(n, n.max(1))
    }

    /// Blocks of size one (pointwise elimination).
    pub fn pointwise(n: usize) -> Result<Self> {
        Self::uniform(n, 1)
    }

    /// From the 1-based start list `[1, …, n+1]`.
    pub fn from_starts(starts: &[usize]) -> Result<Self> {
        if starts.first() != Some(&1) {
            return Err(Error::invalid("blocking must start at index 1"));
        }
        Self::from_offsets(starts.iter().map(|s| s - 1).collect())
    }

    /// From 0-based offsets `[0, …, n]`.
    pub fn from_offsets(offsets: Vec<usize>) -> Result<Self> {
        if offsets.len() < 2 || offsets[0] != 0 {
            return Err(Error::invalid(
                "blocking needs at least one block and must start at the first row",
            ));
        }
        if offsets.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!(
                "blocking starts must be strictly increasing: {offsets:?}"
            )));
        }
        Ok(Self { offsets })
    }

    /// 1-based starts including the `n + 1` terminator.
    pub fn starts(&self) -> Vec<usize> {
        self.offsets.iter().map(|o| o + 1).collect()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Matrix dimension covered.
    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn num_blocks(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Row/column range of block `k` (0-based).
    pub fn range(&self, k: usize) -> Range<usize> {
        self.offsets[k]..self.offsets[k + 1]
    }

    /// Index range covering blocks `first..last` (0-based, half-open).
    pub fn span(&self, blocks: Range<usize>) -> Range<usize> {
        self.offsets[blocks.start]..self.offsets[blocks.end]
    }

    pub fn block_size(&self, k: usize) -> usize {
        self.offsets[k + 1] - self.offsets[k]
    }

    pub fn max_block_size(&self) -> usize {
        (0..self.num_blocks())
            .map(|k| self.block_size(k))
            .max()
            .unwrap()
    }

    /// The blocking of the trailing matrix that starts at block `k`.
    pub fn trailing(&self, k: usize) -> Blocking {
        let base = self.offsets[k];
        Blocking {
            offsets: self.offsets[k..].iter().map(|o| o - base).collect(),
        }
    }

    /// The blocking of the leading submatrix made of the first `k` blocks.
    pub fn leading(&self, k: usize) -> Blocking {
        Blocking {
            offsets: self.offsets[..=k].to_vec(),
        }
    }

    /// Block containing index `i`.
    pub fn block_of(&self, i: usize) -> usize {
        self.offsets.partition_point(|&o| o <= i) - 1
    }

    /// True when every block boundary of `self` is also a boundary of `finer`.
    pub fn is_coarsening_of(&self, finer: &Blocking) -> bool {
        self.dim() == finer.dim() && self.offsets.iter().all(|o| finer.offsets.contains(o))
    }

    /// Appends one more block of `extra` rows (used for zero padding).
    pub fn extended(&self, extra: usize) -> Blocking {
        let mut offsets = self.offsets.clone();
        if extra > 0 {
            offsets.push(self.dim() + extra);
        }
        Blocking { offsets }
    }

    pub(crate) fn check_dim(&self, n: usize, what: &str) -> Result<()> {
        if self.dim() != n {
            return Err(Error::invalid(format!(
                "{what}: blocking covers {} indices but matrix dimension is {n}",
                self.dim()
            )));
        }
        Ok(())
    }

    /// Short label such as `nb=4` or `starts=[1,3,7,9]`.
    pub fn label(&self) -> String {
        let nb = self.block_size(0);
        let uniform = (0..self.num_blocks() - 1).all(|k| self.block_size(k) == nb)
            && self.block_size(self.num_blocks() - 1) <= nb;
        if uniform {
            format!("nb={nb}")
        } else {
            let s: Vec<String> = self.starts().iter().map(|s| s.to_string()).collect();
            format!("starts=[{}]", s.join(","))
        }
    }
}

impl TryFrom<Vec<usize>> for Blocking {
    type Error = Error;

    fn try_from(starts: Vec<usize>) -> Result<Self> {
        Blocking::from_starts(&starts)
    }
}

impl From<Blocking> for Vec<usize> {
    fn from(b: Blocking) -> Self {
        b.starts()
    }
}
