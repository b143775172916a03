use std::fmt;

use serde::{Serialize, Serializer};

/// Set partition of path indices `0..k`, stored as canonical block labels
/// (labels appear in first-occurrence order, starting at 0).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Partition(Vec<u8>);

impl Partition {
    pub fn from_labels(labels: &[u8]) -> Self {
        let mut map = [u8::MAX; 256];
        let mut next = 0u8;
        let canon = labels
            .iter()
            .map(|&l| {
                if map[l as usize] == u8::MAX {
                    map[l as usize] = next;
                    next += 1;
                }
                map[l as usize]
            })
            .collect();
        Partition(canon)
    }

    pub fn singletons(k: usize) -> Self {
        Partition((0..k as u8).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self) -> &[u8] {
        &self.0
    }

    pub fn block_count(&self) -> usize {
        self.0.iter().map(|&l| l as usize + 1).max().unwrap_or(0)
    }

    pub fn same_block(&self, i: usize, j: usize) -> bool {
        self.0[i] == self.0[j]
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); self.block_count()];
        for (i, &l) in self.0.iter().enumerate() {
            blocks[l as usize].push(i);
        }
        blocks
    }

    /// Every partition of `0..k` (restricted growth strings in lexicographic order).
    pub fn enumerate(k: usize) -> Vec<Partition> {
        fn grow(prefix: &mut Vec<u8>, max: u8, k: usize, out: &mut Vec<Partition>) {
            if prefix.len() == k {
                out.push(Partition(prefix.clone()));
                return;
            }
            for l in 0..=max.saturating_add(1) {
                if prefix.is_empty() && l > 0 {
                    break;
                }
                prefix.push(l);
                grow(prefix, max.max(l), k, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        if k == 0 {
            return vec![Partition(Vec::new())];
        }
        grow(&mut Vec::with_capacity(k), 0, k, &mut out);
        out
    }

    /// Probability that independent fair coins, one per block, all agree.
    pub fn agreement_weight(&self) -> f64 {
        0.5f64.powi(self.block_count() as i32 - 1)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for block in self.blocks() {
            let items: Vec<String> = block.iter().map(usize::to_string).collect();
            write!(f, "{{{}}}", items.join(","))?;
        }
        Ok(())
    }
}

impl Serialize for Partition {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
