//! The partition lattice Π(n): enumeration, refinement, the Möbius function,
//! incidence-algebra tables, and the 2-refinement / 2-coarsening relations.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::subsets::{check_n, mask, Subset};

/// Largest `n` for which partitions are enumerated.
pub const MAX_PARTITION_N: usize = 12;
/// Largest `n` for which dense incidence tables are built.
pub const MAX_TABLE_N: usize = 5;

/// A set partition of `{1, …, n}`, blocks ordered by least element.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SetPartition {
    n: u8,
    blocks: Vec<Subset>,
}

impl SetPartition {
    pub fn new(n: usize, mut blocks: Vec<Subset>) -> Result<Self> {
        check_n(n)?;
        let mut seen = 0u16;
        for b in &blocks {
            if b.n() != n {
                return Err(Error::Partition(format!("block {b} is over a different ground set")));
            }
            if b.is_empty() {
                return Err(Error::Partition("empty block".into()));
            }
            if seen & b.bits() != 0 {
                return Err(Error::Partition(format!("block {b} overlaps another block")));
            }
            seen |= b.bits();
        }
        if seen != mask(n) {
            return Err(Error::Partition("blocks do not cover the ground set".into()));
        }
        blocks.sort_by_key(|b| b.bits().trailing_zeros());
        Ok(SetPartition { n: n as u8, blocks })
    }

    /// From 1-indexed element lists.
    pub fn from_lists(n: usize, blocks: &[&[usize]]) -> Result<Self> {
        let blocks = blocks.iter().map(|b| Subset::from_elements(n, b)).collect::<Result<_>>()?;
        SetPartition::new(n, blocks)
    }

    /// From a restricted growth string: `rgs[i]` is the block index of element `i + 1`.
    pub fn from_rgs(rgs: &[u8]) -> Result<Self> {
        let n = rgs.len();
        check_n(n)?;
        let mut blocks: Vec<u16> = Vec::new();
        for (i, &r) in rgs.iter().enumerate() {
            let r = r as usize;
            if r > blocks.len() {
                return Err(Error::Partition("not a restricted growth string".into()));
            }
            if r == blocks.len() {
                blocks.push(0);
            }
            blocks[r] |= 1 << i;
        }
        Ok(SetPartition {
            n: n as u8,
            blocks: blocks.into_iter().map(|b| Subset::from_raw(n, b)).collect(),
        })
    }

    /// All singletons, written O̲.
    pub fn finest(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(SetPartition {
            n: n as u8,
            blocks: (0..n).map(|i| Subset::from_raw(n, 1 << i)).collect(),
        })
    }

    /// One block, written N̲.
    pub fn coarsest(n: usize) -> Result<Self> {
        Ok(SetPartition { n: n as u8, blocks: vec![Subset::full(n)?] })
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn blocks(&self) -> &[Subset] {
        &self.blocks
    }

    /// Number of blocks ν.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Index of the block containing `element` (1-indexed element).
    pub fn block_of(&self, element: usize) -> usize {
        self.blocks.iter().position(|b| b.contains(element)).expect("element outside ground set")
    }

    /// `self ⪯ other`: every block of `self` lies inside some block of `other`.
    pub fn refines(&self, other: &SetPartition) -> bool {
        assert_eq!(self.n, other.n, "refinement across ground sets");
        self.blocks.iter().all(|f| other.blocks.iter().any(|g| f.is_subset_of(*g)))
    }

    /// For `self ⪯ coarser`, how many blocks of `self` make up each block of `coarser`.
    fn block_counts(&self, coarser: &SetPartition) -> Vec<usize> {
        coarser
            .blocks
            .iter()
            .map(|g| self.blocks.iter().filter(|f| f.is_subset_of(*g)).count())
            .collect()
    }

    /// Every 2-refinement of `self`: each block is kept or split into two
    /// nonempty parts. Includes `self`.
    pub fn two_refinements(&self) -> impl Iterator<Item = SetPartition> + '_ {
        let n = self.n();
        // each block of size s contributes s − 1 choice bits (the elements other than its minimum)
        let rest: Vec<u16> = self.blocks.iter().map(|b| b.bits() & (b.bits() - 1)).collect();
        let free_bits: u32 = rest.iter().map(|r| r.count_ones()).sum();
        (0u32..1 << free_bits).map(move |code| {
            let mut code = code;
            let mut blocks = Vec::with_capacity(2 * rest.len());
            for (b, r) in self.blocks.iter().zip(&rest) {
                let mut moved = 0u16;
                let mut it = *r;
                while it != 0 {
                    let low = it & it.wrapping_neg();
                    if code & 1 == 1 {
                        moved |= low;
                    }
                    code >>= 1;
                    it ^= low;
                }
                blocks.push(Subset::from_raw(n, b.bits() & !moved));
                if moved != 0 {
                    blocks.push(Subset::from_raw(n, moved));
                }
            }
            blocks.sort_by_key(|b| b.bits().trailing_zeros());
            SetPartition { n: n as u8, blocks }
        })
    }

    /// Every partition 2-coarser than `self`: an even subset of blocks paired
    /// up and merged. Includes `self`. The least unpaired block is always
    /// paired first, so each coarsening appears once.
    pub fn two_coarsenings(&self) -> impl Iterator<Item = SetPartition> {
        fn go(blocks: &[u16], i: usize, used: u32, merged: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
            if i == blocks.len() {
                out.push(merged.clone());
                return;
            }
            if used & (1 << i) != 0 {
                go(blocks, i + 1, used, merged, out);
                return;
            }
            merged.push(blocks[i]);
            go(blocks, i + 1, used | 1 << i, merged, out);
            merged.pop();
            for j in i + 1..blocks.len() {
                if used & (1 << j) == 0 {
                    merged.push(blocks[i] | blocks[j]);
                    go(blocks, i + 1, used | 1 << i | 1 << j, merged, out);
                    merged.pop();
                }
            }
        }
        let n = self.n();
        let bits: Vec<u16> = self.blocks.iter().map(|b| b.bits()).collect();
        let mut out = Vec::new();
        go(&bits, 0, 0, &mut Vec::new(), &mut out);
        out.into_iter().map(move |mut bs| {
            bs.sort_by_key(|b| b.trailing_zeros());
            SetPartition { n: n as u8, blocks: bs.into_iter().map(|b| Subset::from_raw(n, b)).collect() }
        })
    }
}

impl fmt::Display for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{b}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Restricted-growth-string enumeration of Π(n).
pub struct Partitions {
    rgs: Vec<u8>,
    // max of rgs[..=i]
    prefix_max: Vec<u8>,
    done: bool,
}

impl Iterator for Partitions {
    type Item = SetPartition;

    fn next(&mut self) -> Option<SetPartition> {
        if self.done {
            return None;
        }
        let out = SetPartition::from_rgs(&self.rgs).expect("valid growth string");
        let n = self.rgs.len();
        // increment the rightmost position that can grow, reset the tail
        let mut i = n;
        loop {
            if i <= 1 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.rgs[i] <= self.prefix_max[i - 1] {
                self.rgs[i] += 1;
                self.prefix_max[i] = self.prefix_max[i - 1].max(self.rgs[i]);
                for j in i + 1..n {
                    self.rgs[j] = 0;
                    self.prefix_max[j] = self.prefix_max[i];
                }
                break;
            }
        }
        Some(out)
    }
}

pub fn enumerate_partitions(n: usize) -> Result<Partitions> {
    if !(1..=MAX_PARTITION_N).contains(&n) {
        return Err(Error::Capability { what: "partition enumeration", n, max: MAX_PARTITION_N });
    }
    Ok(Partitions { rgs: vec![0; n], prefix_max: vec![0; n], done: false })
}

/// Bell numbers by the triangle recurrence.
pub fn bell(n: usize) -> u64 {
    let mut row = vec![1u64];
    for _ in 0..n {
        let mut next = vec![*row.last().unwrap()];
        for &x in &row {
            let v = next.last().unwrap() + x;
            next.push(v);
        }
        row = next;
    }
    row[0]
}

pub fn factorial(k: usize) -> i64 {
    (1..=k as i64).product()
}

/// μ(F, G) = (−1)^{ν(F)−ν(G)} ∏ (b_i − 1)!, and 0 unless F ⪯ G.
pub fn mobius(f: &SetPartition, g: &SetPartition) -> i64 {
    if !f.refines(g) {
        return 0;
    }
    let sign = if (f.len() - g.len()).is_multiple_of(2) { 1 } else { -1 };
    sign * f.block_counts(g).into_iter().map(|b| factorial(b - 1)).product::<i64>()
}

/// The elements of Π(n) with an index, for dense incidence tables.
pub struct PartitionLattice {
    n: usize,
    elements: Vec<SetPartition>,
    index: HashMap<SetPartition, usize>,
    leq: Vec<bool>,
}

impl PartitionLattice {
    pub fn new(n: usize) -> Result<Self> {
        if !(1..=MAX_TABLE_N).contains(&n) {
            return Err(Error::Capability { what: "incidence tables", n, max: MAX_TABLE_N });
        }
        let elements: Vec<_> = enumerate_partitions(n)?.collect();
        let index = elements.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        let m = elements.len();
        let mut leq = vec![false; m * m];
        for (i, x) in elements.iter().enumerate() {
            for (j, y) in elements.iter().enumerate() {
                leq[i * m + j] = x.refines(y);
            }
        }
        Ok(PartitionLattice { n, elements, index, leq })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[SetPartition] {
        &self.elements
    }

    pub fn index_of(&self, p: &SetPartition) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.leq[i * self.len() + j]
    }

    /// Builds a table from `f(x, y)`, forcing zero off the order relation.
    pub fn table(&self, mut f: impl FnMut(&SetPartition, &SetPartition) -> i64) -> Incidence {
        let m = self.len();
        let mut values = vec![0; m * m];
        for i in 0..m {
            for j in 0..m {
                if self.leq(i, j) {
                    values[i * m + j] = f(&self.elements[i], &self.elements[j]);
                }
            }
        }
        Incidence { size: m, values }
    }

    pub fn zeta(&self) -> Incidence {
        self.table(|_, _| 1)
    }

    pub fn delta(&self) -> Incidence {
        self.table(|x, y| (x == y) as i64)
    }

    /// μ from the closed form.
    pub fn mobius(&self) -> Incidence {
        self.table(mobius)
    }

    /// μ from the defining recursion `Σ_{z∈[x,y]} μ(x,z) = δ(x,y)`.
    pub fn mobius_recursive(&self) -> Incidence {
        let m = self.len();
        // interval sizes order the recursion: process y in order of |[x,y]|
        let mut values = vec![0i64; m * m];
        for x in 0..m {
            let mut above: Vec<usize> = (0..m).filter(|&y| self.leq(x, y)).collect();
            above.sort_by_key(|&y| (0..m).filter(|&z| self.leq(x, z) && self.leq(z, y)).count());
            for &y in &above {
                values[x * m + y] = if x == y {
                    1
                } else {
                    -(0..m)
                        .filter(|&z| z != y && self.leq(x, z) && self.leq(z, y))
                        .map(|z| values[x * m + z])
                        .sum::<i64>()
                };
            }
        }
        Incidence { size: m, values }
    }

    /// `(f ∗ g)(x, y) = Σ_{z∈[x,y]} f(x,z) g(z,y)`.
    pub fn convolve(&self, f: &Incidence, g: &Incidence) -> Incidence {
        let m = self.len();
        assert!(f.size == m && g.size == m, "incidence tables over a different lattice");
        let mut values = vec![0; m * m];
        for x in 0..m {
            for y in 0..m {
                if !self.leq(x, y) {
                    continue;
                }
                values[x * m + y] = (0..m)
                    .filter(|&z| self.leq(x, z) && self.leq(z, y))
                    .map(|z| f.get(x, z) * g.get(z, y))
                    .sum();
            }
        }
        Incidence { size: m, values }
    }

    /// Left action on functions: `(f ∗ g)(x) = Σ_{y⪰x} f(x,y) g(y)`.
    pub fn act(&self, f: &Incidence, g: &[i64]) -> Vec<i64> {
        let m = self.len();
        assert_eq!(g.len(), m);
        (0..m).map(|x| (0..m).filter(|&y| self.leq(x, y)).map(|y| f.get(x, y) * g[y]).sum()).collect()
    }
}

/// A dense function on pairs of a [`PartitionLattice`], indexed by position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Incidence {
    size: usize,
    values: Vec<i64>,
}

impl Incidence {
    pub fn get(&self, x: usize, y: usize) -> i64 {
        self.values[x * self.size + y]
    }
}
