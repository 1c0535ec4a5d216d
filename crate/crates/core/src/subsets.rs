//! Subsets of `{1, …, n}` as bit vectors, strictly ascending chains of
//! subsets, and signed sums over chain families.

use std::fmt;

use crate::error::{Error, Result};

/// Largest supported ground set; a subset fits in one `u16`.
pub const MAX_N: usize = 16;

/// A subset of `{1, …, n}`. Bit `i − 1` is set iff element `i` is a member.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subset {
    bits: u16,
    n: u8,
}

#[inline]
pub(crate) fn mask(n: usize) -> u16 {
    if n >= 16 {
        u16::MAX
    } else {
        (1u16 << n) - 1
    }
}

pub(crate) fn check_n(n: usize) -> Result<()> {
    if (1..=MAX_N).contains(&n) {
        Ok(())
    } else {
        Err(Error::GroundSet(n))
    }
}

impl Subset {
    pub fn new(n: usize, bits: u32) -> Result<Self> {
        check_n(n)?;
        if bits & !(mask(n) as u32) != 0 {
            return Err(Error::SubsetBits { bits, n });
        }
        Ok(Subset { bits: bits as u16, n: n as u8 })
    }

    /// Builds a subset from 1-indexed elements.
    pub fn from_elements(n: usize, elements: &[usize]) -> Result<Self> {
        check_n(n)?;
        let mut bits = 0u16;
        for &e in elements {
            if e == 0 || e > n {
                return Err(Error::Element { element: e, n });
            }
            bits |= 1 << (e - 1);
        }
        Ok(Subset { bits, n: n as u8 })
    }

    /// Unchecked constructor for internal hot paths; `bits` must fit in `n`.
    #[inline]
    pub(crate) fn from_raw(n: usize, bits: u16) -> Self {
        debug_assert!(bits & !mask(n) == 0);
        Subset { bits, n: n as u8 }
    }

    pub fn empty(n: usize) -> Result<Self> {
        Subset::new(n, 0)
    }

    pub fn full(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(Subset { bits: mask(n), n: n as u8 })
    }

    pub fn singleton(n: usize, element: usize) -> Result<Self> {
        Subset::from_elements(n, &[element])
    }

    #[inline]
    pub fn bits(self) -> u16 {
        self.bits
    }

    #[inline]
    pub fn n(self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn len(self) -> usize {
        self.bits.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.bits == 0
    }

    pub fn is_full(self) -> bool {
        self.bits == mask(self.n())
    }

    #[inline]
    pub fn contains(self, element: usize) -> bool {
        element >= 1 && element <= self.n() && self.bits & (1 << (element - 1)) != 0
    }

    #[inline]
    pub fn is_subset_of(self, other: Subset) -> bool {
        self.bits & !other.bits == 0
    }

    #[inline]
    pub fn is_proper_subset_of(self, other: Subset) -> bool {
        self.is_subset_of(other) && self.bits != other.bits
    }

    #[inline]
    pub fn complement(self) -> Subset {
        Subset { bits: !self.bits & mask(self.n()), n: self.n }
    }

    /// Symmetric difference. Panics if the ground sets differ.
    #[inline]
    pub fn sym_diff(self, other: Subset) -> Subset {
        assert_eq!(self.n, other.n, "symmetric difference across ground sets");
        Subset { bits: self.bits ^ other.bits, n: self.n }
    }

    pub fn union(self, other: Subset) -> Subset {
        assert_eq!(self.n, other.n, "union across ground sets");
        Subset { bits: self.bits | other.bits, n: self.n }
    }

    pub fn intersection(self, other: Subset) -> Subset {
        assert_eq!(self.n, other.n, "intersection across ground sets");
        Subset { bits: self.bits & other.bits, n: self.n }
    }

    pub fn difference(self, other: Subset) -> Subset {
        assert_eq!(self.n, other.n, "difference across ground sets");
        Subset { bits: self.bits & !other.bits, n: self.n }
    }

    /// Least element, if any.
    pub fn min_element(self) -> Option<usize> {
        (self.bits != 0).then(|| self.bits.trailing_zeros() as usize + 1)
    }

    /// Members in increasing order (1-indexed).
    pub fn elements(self) -> impl Iterator<Item = usize> {
        let bits = self.bits;
        (0..16).filter(move |i| bits & (1 << i) != 0).map(|i| i + 1)
    }

    /// All subsets of `{1, …, n}` in increasing bit order.
    pub fn all(n: usize) -> Result<impl Iterator<Item = Subset>> {
        check_n(n)?;
        Ok((0..=mask(n) as u32).map(move |b| Subset::from_raw(n, b as u16)))
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, e) in self.elements().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{e}")?;
        }
        f.write_str("}")
    }
}

/// A strictly ascending chain `A_1 ⊊ A_2 ⊊ … ⊊ A_k` with `k ≥ 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Chain {
    sets: Vec<Subset>,
}

impl Chain {
    pub fn new(sets: Vec<Subset>) -> Result<Self> {
        let Some(first) = sets.first() else {
            return Err(Error::Chain("a chain needs at least one set".into()));
        };
        let n = first.n();
        for w in sets.windows(2) {
            if w[1].n() != n {
                return Err(Error::Chain("sets over different ground sets".into()));
            }
            if !w[0].is_proper_subset_of(w[1]) {
                return Err(Error::Chain(format!("{} is not a proper subset of {}", w[0], w[1])));
            }
        }
        Ok(Chain { sets })
    }

    pub fn sets(&self) -> &[Subset] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn n(&self) -> usize {
        self.sets[0].n()
    }

    pub fn first(&self) -> Subset {
        self.sets[0]
    }

    pub fn last(&self) -> Subset {
        *self.sets.last().unwrap()
    }

    /// True if every set of `sub` appears in this chain.
    pub fn contains_subchain(&self, sub: &Chain) -> bool {
        let mut it = self.sets.iter();
        sub.sets.iter().all(|b| it.any(|a| a == b))
    }
}

impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, s) in self.sets.iter().enumerate() {
            if i > 0 {
                f.write_str(" ⊂ ")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str(")")
    }
}

/// Next nonzero submask of `free` after `cur` in increasing order, or 0 once
/// the submasks are exhausted.
#[inline]
pub(crate) fn next_submask(cur: u16, free: u16) -> u16 {
    (cur | !free).wrapping_add(1) & free
}

#[inline]
pub(crate) fn first_submask(free: u16) -> u16 {
    free & free.wrapping_neg()
}

struct Frame {
    set: u16,
    free: u16,
    next: u16,
}

/// Lazy enumeration of strictly ascending chains, in lexicographic order of
/// their bit-vector sequences. See [`enumerate_chains`].
pub struct Chains {
    n: usize,
    limit: u16,
    last: Option<u16>,
    first: Option<u16>,
    stack: Vec<Frame>,
}

impl Chains {
    fn push(&mut self, set: u16) {
        let free = self.limit & !set;
        self.stack.push(Frame { set, free, next: first_submask(free) });
    }

    fn current(&self) -> Chain {
        Chain {
            sets: self.stack.iter().map(|f| Subset::from_raw(self.n, f.set)).collect(),
        }
    }

    fn accepts(&self, set: u16) -> bool {
        self.last.is_none_or(|l| l == set)
    }
}

impl Iterator for Chains {
    type Item = Chain;

    fn next(&mut self) -> Option<Chain> {
        if let Some(first) = self.first.take() {
            if first & !self.limit == 0 {
                self.push(first);
                if self.accepts(first) {
                    return Some(self.current());
                }
            }
        }
        loop {
            let top = self.stack.last_mut()?;
            if top.next == 0 {
                self.stack.pop();
                continue;
            }
            let child = top.set | top.next;
            top.next = next_submask(top.next, top.free);
            self.push(child);
            if self.accepts(child) {
                return Some(self.current());
            }
        }
    }
}

/// Every strictly ascending chain starting at `first` and, when `last` is
/// given, ending at `last`. Chains are streamed in lexicographic order.
pub fn enumerate_chains(n: usize, first: Subset, last: Option<Subset>) -> Result<Chains> {
    check_n(n)?;
    if first.n() != n || last.is_some_and(|l| l.n() != n) {
        return Err(Error::Chain(format!("chain endpoints are not subsets of {{1..{n}}}")));
    }
    Ok(Chains {
        n,
        limit: last.map_or(mask(n), |l| l.bits),
        last: last.map(|l| l.bits),
        first: Some(first.bits),
        stack: Vec::with_capacity(n + 1),
    })
}

/// The three chain families whose signed counts have closed forms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChainFamily {
    /// `1 ∈ A_1` and `A_k = {1, …, n}`.
    FirstContains1LastFull,
    /// `A_1 = ∅` and `A_k = {1, …, n}`.
    FirstEmptyLastFull,
    /// Chains of the first family that contain the given chain as a subchain.
    ContainsSubchain(Chain),
}

fn sign(len: usize) -> i64 {
    if len.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// `Σ (−1)^{|𝒜|}` over the chain family, by explicit enumeration.
pub fn chain_sign_sum(n: usize, family: &ChainFamily) -> Result<i64> {
    let full = Subset::full(n)?;
    match family {
        ChainFamily::FirstContains1LastFull => {
            let mut total = 0;
            for first in Subset::all(n)?.filter(|s| s.contains(1)) {
                total += enumerate_chains(n, first, Some(full))?.map(|c| sign(c.len())).sum::<i64>();
            }
            Ok(total)
        }
        ChainFamily::FirstEmptyLastFull => {
            Ok(enumerate_chains(n, Subset::empty(n)?, Some(full))?.map(|c| sign(c.len())).sum())
        }
        ChainFamily::ContainsSubchain(b) => {
            check_subchain(n, b)?;
            let mut total = 0;
            for first in Subset::all(n)?.filter(|s| s.contains(1) && s.is_subset_of(b.first())) {
                total += enumerate_chains(n, first, Some(full))?
                    .filter(|c| c.contains_subchain(b))
                    .map(|c| sign(c.len()))
                    .sum::<i64>();
            }
            Ok(total)
        }
    }
}

/// Closed forms of [`chain_sign_sum`].
pub fn chain_sign_sum_closed(n: usize, family: &ChainFamily) -> Result<i64> {
    check_n(n)?;
    Ok(match family {
        ChainFamily::FirstContains1LastFull => {
            if n == 1 {
                -1
            } else {
                0
            }
        }
        ChainFamily::FirstEmptyLastFull => sign(n - 1),
        ChainFamily::ContainsSubchain(b) => {
            check_subchain(n, b)?;
            if b.first().bits() == 1 {
                sign(n)
            } else {
                0
            }
        }
    })
}

fn check_subchain(n: usize, b: &Chain) -> Result<()> {
    if b.n() != n {
        return Err(Error::Chain("subchain over a different ground set".into()));
    }
    if !b.first().contains(1) {
        return Err(Error::Chain("subchain must have 1 in its first set".into()));
    }
    Ok(())
}
