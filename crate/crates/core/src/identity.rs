//! Both sides of the identity as formal sums.
//!
//! * right side: `Σ_{I ⊆ [n]} (−1)^{|I|+1} χ̃_I`
//! * left side, chain form: `Σ_{J ⊆ {2..n}} Σ_{𝒜 : A_1 = {1}} (−1)^{n−|𝒜|}
//!   ∏_i (χ̃_{A_i△J} + χ̃_{A_i^c△J})`
//! * left side, partition form: `Σ_{F ∈ Π(n)} ½ Σ_{J ⊆ [n]} (μ(F,N̲) +
//!   (−1)^{ν(F)} χ*(F)△J)`, with each `χ = 1 − χ̃(u) − χ̃(−u)` expanded.
//!
//! The chain form is the production path. It is expanded depth-first along
//! chains so that every prefix product is shared by all of its extensions,
//! and with zero elimination a prefix whose monomials all vanish cuts off its
//! whole subtree (vanishing products form an ideal).

use std::time::Instant;

use log::info;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::algebra::{FormalSum, Sets, Term};
use crate::error::{Error, Result};
use crate::partitions::{enumerate_partitions, mobius, SetPartition};
use crate::subsets::{check_n, enumerate_chains, first_submask, mask, next_submask, Subset};
use crate::zero::ZeroCache;

/// Largest `n` for the chain-form builder.
pub const MAX_CANONICAL_N: usize = 8;
/// Largest `n` for the partition-form builder.
pub const MAX_DIRECT_N: usize = 6;

fn parity_sign(k: usize) -> i64 {
    if k.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

pub fn build_rhs(n: usize) -> Result<FormalSum> {
    let mut out = FormalSum::zero(n)?;
    for i in Subset::all(n)? {
        out.add_term(Term::generator(i), BigInt::from(-parity_sign(i.len())));
    }
    Ok(out)
}

/// `χ*` for the given blocks, which must partition `{1, …, n}`: the sum over
/// orderings of the blocks that keep the first block first, of
/// `∏_i (1 − χ̃_{B_i} − χ̃_{B_i^c})` where `B_i` is the union of the first `i`
/// blocks of the ordering.
pub fn chi_star(blocks: &[Subset]) -> Result<FormalSum> {
    let Some(first) = blocks.first() else {
        return Err(Error::Partition("χ* needs at least one block".into()));
    };
    chi_star_shifted(blocks, Subset::empty(first.n())?)
}

/// `χ*` with every generator `χ̃_A` replaced by `χ̃_{A△J}` before the factors
/// are multiplied. Shifting does not preserve containment, so it has to act on
/// the factors rather than on the absorbed product.
pub fn chi_star_shifted(blocks: &[Subset], j: Subset) -> Result<FormalSum> {
    let Some(first) = blocks.first() else {
        return Err(Error::Partition("χ* needs at least one block".into()));
    };
    let n = first.n();
    if j.n() != n {
        return Err(Error::SubsetBits { bits: j.bits() as u32, n });
    }
    let partition = SetPartition::new(n, blocks.to_vec())?;
    if partition.blocks()[0] != *first {
        return Err(Error::Partition("the first block must contain the least element".into()));
    }
    let one = FormalSum::one(n)?;
    let factor = |b: Subset| {
        one.sub(&FormalSum::generator(b.sym_diff(j))).sub(&FormalSum::generator(b.complement().sym_diff(j)))
    };
    let mut total = FormalSum::zero(n)?;
    let mut order: Vec<usize> = (1..blocks.len()).collect();
    permutations(&mut order, 0, &mut |perm| {
        let mut union = *first;
        let mut prod = factor(union);
        for &b in perm {
            union = union.union(blocks[b]);
            prod = prod.multiply(&factor(union));
        }
        total.add_assign(&prod);
    });
    Ok(total)
}

fn permutations(items: &mut Vec<usize>, at: usize, visit: &mut impl FnMut(&[usize])) {
    if at >= items.len() {
        visit(items);
        return;
    }
    for i in at..items.len() {
        items.swap(at, i);
        permutations(items, at + 1, visit);
        items.swap(at, i);
    }
}

/// Left side in partition form. Accumulates twice the sum with integer
/// coefficients and halves at the end; an odd coefficient is an error.
pub fn build_lhs_direct(n: usize) -> Result<FormalSum> {
    if !(1..=MAX_DIRECT_N).contains(&n) {
        return Err(Error::Capability { what: "partition-form expansion", n, max: MAX_DIRECT_N });
    }
    let top = SetPartition::coarsest(n)?;
    let one = FormalSum::one(n)?;
    let mut doubled = FormalSum::zero(n)?;
    for f in enumerate_partitions(n)? {
        let sign = BigInt::from(parity_sign(f.len()));
        let mu = BigInt::from(mobius(&f, &top));
        for j in Subset::all(n)? {
            doubled.add_assign(&one.scale(&mu));
            doubled.add_assign(&chi_star_shifted(f.blocks(), j)?.scale(&sign));
        }
    }
    let mut out = FormalSum::zero(n)?;
    for (t, c) in doubled.sorted() {
        let (q, r) = c.div_rem(&BigInt::from(2));
        if !r.is_zero() {
            return Err(Error::NonIntegral { term: t.to_string(), numer: c.to_string() });
        }
        out.add_term(t.clone(), q);
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ExpansionStats {
    /// Monomials before absorption: `Σ_J Σ_𝒜 2^{|𝒜|}`.
    pub raw_monomials: u128,
    /// Chain prefixes visited by the expansion.
    pub chain_nodes: u64,
    /// Monomials dropped by the zero test.
    pub eliminated: u64,
    /// Terms in the resulting sum.
    pub terms: usize,
}

impl ExpansionStats {
    fn merge(&mut self, other: &ExpansionStats) {
        self.raw_monomials += other.raw_monomials;
        self.chain_nodes += other.chain_nodes;
        self.eliminated += other.eliminated;
    }
}

#[derive(Clone, Debug)]
pub struct Expansion {
    pub sum: FormalSum,
    pub stats: ExpansionStats,
}

/// Adds generator `g` to canonical `sets`. Returns `None` when `g` is absorbed.
#[inline]
fn with_generator(sets: &Sets, g: u16) -> Option<Sets> {
    if sets.iter().any(|&s| s & !g == 0) {
        return None;
    }
    let mut out = Sets::new();
    let mut placed = false;
    for &s in sets.iter() {
        if g & !s == 0 {
            // s ⊇ g is absorbed by g
            continue;
        }
        if !placed && g < s {
            out.push(g);
            placed = true;
        }
        out.push(s);
    }
    if !placed {
        out.push(g);
    }
    Some(out)
}

struct ChainExpander<'a> {
    n: usize,
    full: u16,
    j: u16,
    cache: Option<&'a ZeroCache>,
    acc: FxHashMap<Term, i64>,
    chain_nodes: u64,
    eliminated: u64,
}

impl ChainExpander<'_> {
    fn visit(&mut self, set: u16, depth: usize, prefix: &[(Term, i64)]) {
        self.chain_nodes += 1;
        let sign = parity_sign(self.n - depth);
        for (t, c) in prefix {
            let e = self.acc.entry(t.clone()).or_insert(0);
            *e = e.checked_add(sign * c).expect("coefficient overflow");
        }
        let free = self.full & !set;
        let mut sub = first_submask(free);
        while sub != 0 {
            let child = set | sub;
            sub = next_submask(sub, free);
            let gens = [child ^ self.j, (!child & self.full) ^ self.j];
            let mut next: FxHashMap<Term, i64> = FxHashMap::default();
            for (t, c) in prefix {
                for &g in &gens {
                    let term = match with_generator(&Sets::from_slice(t.bits()), g) {
                        None => t.clone(),
                        Some(sets) => {
                            let term = Term::from_canonical(self.n, sets);
                            if let Some(cache) = self.cache {
                                if cache.is_zero(&term) {
                                    self.eliminated += 1;
                                    continue;
                                }
                            }
                            term
                        }
                    };
                    *next.entry(term).or_insert(0) += c;
                }
            }
            let mut next: Vec<(Term, i64)> = next.into_iter().filter(|(_, c)| *c != 0).collect();
            if next.is_empty() {
                continue;
            }
            next.sort_unstable();
            self.visit(child, depth + 1, &next);
        }
    }
}

fn check_j(n: usize, j: Subset) -> Result<()> {
    if j.n() != n {
        return Err(Error::SubsetBits { bits: j.bits() as u32, n });
    }
    if j.contains(1) {
        return Err(Error::Chain("the shift set J must not contain 1".into()));
    }
    Ok(())
}

/// Number of chains starting at `{1}` weighted by `2^{|𝒜|}`, by streaming
/// chain enumeration.
fn weighted_chain_count(n: usize) -> Result<u128> {
    Ok(enumerate_chains(n, Subset::singleton(n, 1)?, None)?.map(|c| 1u128 << c.len()).sum())
}

/// The inner chain sum for one shift set `J` (with `1 ∉ J`). With a cache,
/// vanishing monomials are dropped as soon as they are formed.
pub fn inner_chain_sum(n: usize, j: Subset, cache: Option<&ZeroCache>) -> Result<Expansion> {
    if !(1..=MAX_CANONICAL_N).contains(&n) {
        return Err(Error::Capability { what: "chain-form expansion", n, max: MAX_CANONICAL_N });
    }
    check_j(n, j)?;
    let mut ex = ChainExpander {
        n,
        full: mask(n),
        j: j.bits(),
        cache,
        acc: FxHashMap::default(),
        chain_nodes: 0,
        eliminated: 0,
    };
    let first = 1u16;
    let gens = [first ^ j.bits(), (!first & mask(n)) ^ j.bits()];
    let mut start: FxHashMap<Term, i64> = FxHashMap::default();
    for g in gens {
        let term = Term::from_canonical(n, Sets::from_slice(&[g]));
        if let Some(cache) = cache {
            if cache.is_zero(&term) {
                ex.eliminated += 1;
                continue;
            }
        }
        *start.entry(term).or_insert(0) += 1;
    }
    let mut start: Vec<_> = start.into_iter().collect();
    start.sort_unstable();
    if !start.is_empty() {
        ex.visit(first, 1, &start);
    }
    let mut sum = FormalSum::zero(n)?;
    for (t, c) in ex.acc {
        sum.add_term(t, BigInt::from(c));
    }
    let stats = ExpansionStats {
        raw_monomials: weighted_chain_count(n)?,
        chain_nodes: ex.chain_nodes,
        eliminated: ex.eliminated,
        terms: sum.len(),
    };
    Ok(Expansion { sum, stats })
}

/// Every shift set `J ⊆ {2, …, n}` in increasing bit order.
pub fn shift_sets(n: usize) -> Result<Vec<Subset>> {
    Ok(Subset::all(n)?.filter(|j| !j.contains(1)).collect())
}

/// Left side in chain form. Shards over `J` run on the current rayon pool.
pub fn build_lhs_canonical(n: usize, zero_elim: bool, cache: &ZeroCache) -> Result<Expansion> {
    if !(1..=MAX_CANONICAL_N).contains(&n) {
        return Err(Error::Capability { what: "chain-form expansion", n, max: MAX_CANONICAL_N });
    }
    let started = Instant::now();
    let shards = shift_sets(n)?;
    let total = shards.len();
    let done = std::sync::atomic::AtomicUsize::new(0);
    let parts: Vec<Expansion> = shards
        .par_iter()
        .map(|&j| {
            let ex = inner_chain_sum(n, j, zero_elim.then_some(cache))?;
            let finished = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
            info!(
                "n={n}: shard J={j} done ({finished}/{total}), {} terms, {:.1}s elapsed",
                ex.sum.len(),
                started.elapsed().as_secs_f64()
            );
            Ok(ex)
        })
        .collect::<Result<_>>()?;
    let mut sum = FormalSum::zero(n)?;
    let mut stats = ExpansionStats::default();
    for p in &parts {
        sum.add_assign(&p.sum);
        stats.merge(&p.stats);
    }
    stats.terms = sum.len();
    Ok(Expansion { sum, stats })
}

/// Pre-absorption monomial count of the chain-form left side.
pub fn raw_monomial_count(n: usize) -> Result<u128> {
    check_n(n)?;
    Ok((1u128 << (n - 1)) * weighted_chain_count(n)?)
}

fn signed_generator(a: Subset, sign: i64) -> FormalSum {
    FormalSum::from_term(Term::generator(a), BigInt::from(sign))
}

/// `simp₁(J; n) = (Σ_{A⊆J} (−1)^{|A|} χ̃_{A∪{1}}) · (Σ_{J⊆B⊆{2..n}} (−1)^{|B|−|J|−1} χ̃_B)`.
pub fn simp1(n: usize, j: Subset) -> Result<FormalSum> {
    check_j(n, j)?;
    let one = Subset::singleton(n, 1)?;
    let mut left = FormalSum::zero(n)?;
    let mut right = FormalSum::zero(n)?;
    for s in Subset::all(n)? {
        if s.is_subset_of(j) {
            left.add_assign(&signed_generator(s.union(one), parity_sign(s.len())));
        }
        if j.is_subset_of(s) && !s.contains(1) {
            right.add_assign(&signed_generator(s, -parity_sign(s.len() - j.len())));
        }
    }
    Ok(left.multiply(&right))
}

/// `simp₂(n) = Σ_{A⊆{2..n}} (−1)^{|A|} χ̃_{A∪{1}}`.
pub fn simp2(n: usize) -> Result<FormalSum> {
    let one = Subset::singleton(n, 1)?;
    let mut out = FormalSum::zero(n)?;
    for a in Subset::all(n)?.filter(|a| !a.contains(1)) {
        out.add_assign(&signed_generator(a.union(one), parity_sign(a.len())));
    }
    Ok(out)
}

/// The conjectured closed form of the inner chain sum at `J`.
pub fn build_simp_forms(n: usize, j: Subset) -> Result<FormalSum> {
    let mut out = simp1(n, j)?;
    let rest = Subset::full(n)?.difference(Subset::singleton(n, 1)?);
    if j == rest {
        out.add_assign(&simp2(n)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(n: usize, e: &[usize]) -> Subset {
        Subset::from_elements(n, e).unwrap()
    }

    fn x(n: usize, e: &[usize]) -> FormalSum {
        FormalSum::generator(s(n, e))
    }

    #[test]
    fn rhs_examples() {
        assert_eq!(build_rhs(1).unwrap(), x(1, &[1]).sub(&x(1, &[])));
        let two = x(2, &[1]).add(&x(2, &[2])).sub(&x(2, &[])).sub(&x(2, &[1, 2]));
        assert_eq!(build_rhs(2).unwrap(), two);
        for n in 1..=6 {
            let rhs = build_rhs(n).unwrap();
            assert_eq!(rhs.len(), 1 << n);
            let top = Term::generator(Subset::full(n).unwrap());
            assert_eq!(rhs.coeff(&top), BigInt::from(parity_sign(n + 1)));
        }
    }

    #[test]
    fn canonical_n1() {
        let cache = ZeroCache::in_memory();
        let raw = build_lhs_canonical(1, false, &cache).unwrap().sum;
        assert_eq!(raw, x(1, &[1]).add(&x(1, &[])));
        let elim = build_lhs_canonical(1, true, &cache).unwrap().sum;
        assert_eq!(elim, x(1, &[1]));
        let mut rhs = build_rhs(1).unwrap();
        rhs.retain(|t| !cache.is_zero(t));
        assert_eq!(elim, rhs);
    }

    #[test]
    fn raw_count_n2() {
        assert_eq!(raw_monomial_count(2).unwrap(), 12);
        let cache = ZeroCache::in_memory();
        assert_eq!(build_lhs_canonical(2, false, &cache).unwrap().stats.raw_monomials, 12);
    }

    #[test]
    fn direct_small_cases() {
        assert_eq!(build_lhs_direct(1).unwrap(), x(1, &[1]).add(&x(1, &[])));
        let cache = ZeroCache::in_memory();
        assert_eq!(build_lhs_direct(2).unwrap(), build_lhs_canonical(2, false, &cache).unwrap().sum);
        assert!(build_lhs_direct(7).is_err());
    }

    #[test]
    fn chi_star_examples() {
        let one = FormalSum::one(1).unwrap();
        let cs = chi_star(&[s(1, &[1])]).unwrap();
        assert_eq!(cs, one.sub(&x(1, &[1])).sub(&x(1, &[])));
        // k = 2: one ordering, two factors (1 − χ̃{1} − χ̃{2})(1 − χ̃{12} − χ̃∅)
        let cs2 = chi_star(&[s(2, &[1]), s(2, &[2])]).unwrap();
        let one2 = FormalSum::one(2).unwrap();
        let f1 = one2.sub(&x(2, &[1])).sub(&x(2, &[2]));
        let f2 = one2.sub(&x(2, &[1, 2])).sub(&x(2, &[]));
        assert_eq!(cs2, f1.multiply(&f2));
        // k = 3: the constant term counts the orderings
        let cs3 = chi_star(&[s(3, &[1]), s(3, &[2]), s(3, &[3])]).unwrap();
        assert_eq!(cs3.coeff(&Term::one(3).unwrap()), BigInt::from(2));
        assert!(chi_star(&[s(2, &[2]), s(2, &[1])]).is_err());
        assert!(chi_star(&[s(2, &[1])]).is_err());
    }

    #[test]
    fn simp_examples() {
        let n = 3;
        let j = s(n, &[]);
        let mut expected = FormalSum::zero(n).unwrap();
        for b in Subset::all(n).unwrap().filter(|b| !b.contains(1)) {
            expected.add_assign(&signed_generator(b, -parity_sign(b.len())));
        }
        assert_eq!(simp1(n, j).unwrap(), x(n, &[1]).multiply(&expected));
        assert_eq!(build_simp_forms(n, j).unwrap(), simp1(n, j).unwrap());

        assert_eq!(simp2(2).unwrap(), x(2, &[1]).sub(&x(2, &[1, 2])));
        let with_simp2 = build_simp_forms(2, s(2, &[2])).unwrap();
        assert_eq!(with_simp2, simp1(2, s(2, &[2])).unwrap().add(&simp2(2).unwrap()));
        for n in 1..=6 {
            assert_eq!(simp2(n).unwrap().len(), 1 << (n - 1));
        }
        assert!(simp1(3, s(3, &[1])).is_err());
    }

    #[test]
    fn with_generator_matches_make_term() {
        let n = 4;
        for a in 0u16..16 {
            for b in 0u16..16 {
                let base = Term::from_bits(n, &[a as u32, b as u32]).unwrap();
                for g in 0u16..16 {
                    let expected = Term::from_bits(n, &[a as u32, b as u32, g as u32]).unwrap();
                    let got = match with_generator(&Sets::from_slice(base.bits()), g) {
                        None => base.clone(),
                        Some(sets) => Term::from_canonical(n, sets),
                    };
                    assert_eq!(got, expected);
                }
            }
        }
    }
}
