//! The formal ring generated by the indicators `χ̃_A`.
//!
//! A [`Term`] is a product `χ̃_{A_1}···χ̃_{A_k}` kept in antichain form: since
//! `χ̃_A χ̃_B = χ̃_A` whenever `A ⊆ B`, only the containment-minimal sets of a
//! product matter. A [`FormalSum`] is an integer combination of terms.
//! Canonicalization here is absorption only; deciding which products vanish on
//! the simplex is the job of [`crate::zero`].

use std::collections::hash_map::Entry;
use std::fmt;
use std::io::{BufRead, Write};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::subsets::{check_n, mask, Subset};

pub(crate) type Sets = SmallVec<[u16; 8]>;

/// A product of generators in canonical antichain form. The empty product is
/// the constant 1.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term {
    n: u8,
    sets: Sets,
}

/// Reduces `sets` in place to its containment-minimal members, sorted by bit value.
pub(crate) fn minimize(sets: &mut Sets) {
    if sets.len() <= 1 {
        return;
    }
    sets.sort_unstable_by_key(|s| (s.count_ones(), *s));
    let mut kept = 0;
    for i in 0..sets.len() {
        let s = sets[i];
        if !sets[..kept].iter().any(|&k| k & !s == 0) {
            sets[kept] = s;
            kept += 1;
        }
    }
    sets.truncate(kept);
    sets.sort_unstable();
}

impl Term {
    /// The constant 1.
    pub fn one(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(Term { n: n as u8, sets: Sets::new() })
    }

    /// The single generator `χ̃_A`.
    pub fn generator(a: Subset) -> Self {
        Term { n: a.n() as u8, sets: smallvec::smallvec![a.bits()] }
    }

    /// Canonical product of the given generators: containment-minimal sets
    /// only, deduplicated and sorted.
    pub fn new(n: usize, raw: impl IntoIterator<Item = Subset>) -> Result<Self> {
        check_n(n)?;
        let mut sets = Sets::new();
        for s in raw {
            if s.n() != n {
                return Err(Error::SubsetBits { bits: s.bits() as u32, n });
            }
            sets.push(s.bits());
        }
        minimize(&mut sets);
        Ok(Term { n: n as u8, sets })
    }

    /// Builds from raw bit vectors, canonicalizing.
    pub fn from_bits(n: usize, bits: &[u32]) -> Result<Self> {
        check_n(n)?;
        let mut sets = Sets::new();
        for &b in bits {
            if b & !(mask(n) as u32) != 0 {
                return Err(Error::SubsetBits { bits: b, n });
            }
            sets.push(b as u16);
        }
        minimize(&mut sets);
        Ok(Term { n: n as u8, sets })
    }

    #[inline]
    pub(crate) fn from_canonical(n: usize, sets: Sets) -> Self {
        Term { n: n as u8, sets }
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    /// Number of generators k.
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn bits(&self) -> &[u16] {
        &self.sets
    }

    pub fn sets(&self) -> impl Iterator<Item = Subset> + '_ {
        let n = self.n();
        self.sets.iter().map(move |&b| Subset::from_raw(n, b))
    }

    pub fn product(&self, other: &Term) -> Term {
        assert_eq!(self.n, other.n, "product across ground sets");
        if self.is_one() {
            return other.clone();
        }
        if other.is_one() {
            return self.clone();
        }
        let mut sets: Sets = self.sets.iter().chain(other.sets.iter()).copied().collect();
        minimize(&mut sets);
        Term { n: self.n, sets }
    }

    /// Replaces every generator `χ̃_A` by `χ̃_{A△J}` and re-canonicalizes.
    pub fn sym_diff(&self, j: Subset) -> Term {
        assert_eq!(self.n(), j.n(), "symmetric difference across ground sets");
        let mut sets: Sets = self.sets.iter().map(|&s| s ^ j.bits()).collect();
        minimize(&mut sets);
        Term { n: self.n, sets }
    }

    /// Value of the product at a point: every generator must fire.
    pub fn eval_at(&self, u: &[BigRational]) -> bool {
        assert_eq!(u.len(), self.n());
        self.sets.iter().all(|&s| indicator_at(s, u))
    }
}

/// `χ̃_A(u) = [Σ_{i∈A} u_i − Σ_{i∉A} u_i > 1]`.
pub fn indicator_at(a: u16, u: &[BigRational]) -> bool {
    let mut total = BigRational::zero();
    for (i, x) in u.iter().enumerate() {
        if a & (1 << i) != 0 {
            total += x;
        } else {
            total -= x;
        }
    }
    total > BigRational::one()
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return f.write_str("1");
        }
        for s in self.sets() {
            write!(f, "χ̃{s}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// An integer combination of canonical terms over one ground set.
#[derive(Clone, PartialEq, Eq)]
pub struct FormalSum {
    n: u8,
    terms: FxHashMap<Term, BigInt>,
}

impl FormalSum {
    pub fn zero(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(FormalSum { n: n as u8, terms: FxHashMap::default() })
    }

    pub fn one(n: usize) -> Result<Self> {
        let mut s = FormalSum::zero(n)?;
        s.add_term(Term::one(n)?, BigInt::one());
        Ok(s)
    }

    pub fn generator(a: Subset) -> Self {
        FormalSum::from_term(Term::generator(a), BigInt::one())
    }

    pub fn from_term(t: Term, coeff: BigInt) -> Self {
        let mut s = FormalSum { n: t.n, terms: FxHashMap::default() };
        s.add_term(t, coeff);
        s
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    /// Number of terms with nonzero coefficient.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, t: &Term) -> BigInt {
        self.terms.get(t).cloned().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Term, &BigInt)> {
        self.terms.iter()
    }

    /// Terms in canonical order, for deterministic output.
    pub fn sorted(&self) -> Vec<(&Term, &BigInt)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    }

    pub fn add_term(&mut self, t: Term, coeff: BigInt) {
        assert_eq!(t.n, self.n, "term over a different ground set");
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(t) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += coeff;
                if e.get().is_zero() {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                e.insert(coeff);
            }
        }
    }

    pub fn add_assign(&mut self, other: &FormalSum) {
        assert_eq!(self.n, other.n, "sum across ground sets");
        for (t, c) in &other.terms {
            self.add_term(t.clone(), c.clone());
        }
    }

    pub fn add(&self, other: &FormalSum) -> FormalSum {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn sub(&self, other: &FormalSum) -> FormalSum {
        let mut out = self.clone();
        for (t, c) in &other.terms {
            out.add_term(t.clone(), -c);
        }
        out
    }

    pub fn scale(&self, c: &BigInt) -> FormalSum {
        let mut out = FormalSum { n: self.n, terms: FxHashMap::default() };
        if c.is_zero() {
            return out;
        }
        out.terms = self.terms.iter().map(|(t, v)| (t.clone(), v * c)).collect();
        out
    }

    /// Distributes, canonicalizing each product by absorption.
    pub fn multiply(&self, other: &FormalSum) -> FormalSum {
        assert_eq!(self.n, other.n, "product across ground sets");
        let mut out = FormalSum { n: self.n, terms: FxHashMap::default() };
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.add_term(a.product(b), ca * cb);
            }
        }
        out
    }

    /// Shifts every generator of the stored (absorbed) terms by `J`. Shifting
    /// does not preserve containment, so a product must be shifted factor by
    /// factor before absorption when its raw form matters.
    pub fn apply_sym_diff(&self, j: Subset) -> FormalSum {
        let mut out = FormalSum { n: self.n, terms: FxHashMap::default() };
        for (t, c) in &self.terms {
            out.add_term(t.sym_diff(j), c.clone());
        }
        out
    }

    /// Keeps only the terms for which `keep` holds.
    pub fn retain(&mut self, mut keep: impl FnMut(&Term) -> bool) {
        self.terms.retain(|t, _| keep(t));
    }

    /// Value at a point, with `χ̃` the indicator of `(1, ∞)`.
    pub fn eval_at(&self, u: &[BigRational]) -> BigInt {
        self.terms.iter().filter(|(t, _)| t.eval_at(u)).map(|(_, c)| c.clone()).sum()
    }

    /// Writes one JSON object per term, in canonical order.
    pub fn write_jsonl(&self, mut w: impl Write) -> Result<()> {
        for (t, c) in self.sorted() {
            let rec = TermRecord {
                coeff: c.to_string(),
                sets: t.sets.iter().map(|&b| b as u32).collect(),
                n: self.n(),
            };
            serde_json::to_writer(&mut w, &rec).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl(n: usize, r: impl BufRead) -> Result<FormalSum> {
        let mut out = FormalSum::zero(n)?;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |msg: String| Error::TermDump { line: i + 1, msg };
            let rec: TermRecord = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
            if rec.n != n {
                return Err(bad(format!("term over n = {}, expected {n}", rec.n)));
            }
            let coeff: BigInt = rec.coeff.parse().map_err(|_| bad(format!("bad coefficient {:?}", rec.coeff)))?;
            let term = Term::from_bits(n, &rec.sets).map_err(|e| bad(e.to_string()))?;
            out.add_term(term, coeff);
        }
        Ok(out)
    }
}

/// One line of the term dump format.
#[derive(Debug, Serialize, Deserialize)]
pub struct TermRecord {
    pub coeff: String,
    pub sets: Vec<u32>,
    pub n: usize,
}

impl fmt::Display for FormalSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("0");
        }
        for (i, (t, c)) in self.sorted().into_iter().enumerate() {
            let sign = if c.is_negative() { "-" } else if i > 0 { "+" } else { "" };
            if i > 0 {
                f.write_str(" ")?;
            }
            let mag = c.abs();
            if mag.is_one() {
                write!(f, "{sign}{t}")?;
            } else {
                write!(f, "{sign}{mag}·{t}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for FormalSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
