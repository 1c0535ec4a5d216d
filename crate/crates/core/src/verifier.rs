//! Deciding `LHS = RHS` in the indicator ring.
//!
//! Cancellation subtracts the two sides and drops every term that vanishes on
//! the simplex. An empty residual proves equality; a nonempty one proves
//! nothing, since the zero terms need not span every linear relation.
//!
//! Valuations are complete. A point of the simplex fires an up-set of the
//! `χ̃_A`, determined by its antichain `W` of minimal sets, and every sum takes
//! the value at the point that the map `χ̃_A ↦ [A ⊇ some W_i]` gives it. Two
//! sums agree as functions iff they agree at every antichain whose product is
//! nonzero.

use std::collections::HashSet;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{FormalSum, Sets, Term};
use crate::error::{Error, Result};
use crate::identity::{build_lhs_canonical, build_rhs, inner_chain_sum};
use crate::subsets::{check_n, mask, Subset};
use crate::zero::{lp_zero_test, ZeroCache};

/// Largest `n` decided by exhaustive valuation enumeration.
pub const MAX_EXHAUSTIVE_N: usize = 5;
/// Largest `n` accepted by the valuation method at all (sampled above the
/// exhaustive bound).
pub const MAX_VALUATION_N: usize = 6;
/// Random points drawn in sampled mode.
pub const DEFAULT_SAMPLES: usize = 20_000;
pub const DEFAULT_SEED: u64 = 0x05ee_dc41;

/// An antichain `W` of subsets, read as the valuation `χ̃_A ↦ [A ⊇ some W_i]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AntichainValuation {
    n: u8,
    sets: Vec<u16>,
}

impl AntichainValuation {
    pub fn new(n: usize, sets: impl IntoIterator<Item = Subset>) -> Result<Self> {
        check_n(n)?;
        let mut bits = Vec::new();
        for s in sets {
            if s.n() != n {
                return Err(Error::SubsetBits { bits: s.bits() as u32, n });
            }
            bits.push(s.bits());
        }
        bits.sort_unstable();
        bits.dedup();
        for (i, &a) in bits.iter().enumerate() {
            if bits.iter().enumerate().any(|(j, &b)| i != j && a & !b == 0) {
                return Err(Error::Chain(format!("{} is contained in another member", Subset::from_raw(n, a))));
            }
        }
        Ok(AntichainValuation { n: n as u8, sets: bits })
    }

    fn from_sorted(n: usize, sets: Vec<u16>) -> Self {
        AntichainValuation { n: n as u8, sets }
    }

    /// The minimal antichain of the sets fired at `u`, where `u` lies in the
    /// open simplex.
    pub fn from_point(u: &[BigRational]) -> Result<Self> {
        let n = u.len();
        check_n(n)?;
        let fired: Vec<u16> = (0..=mask(n)).filter(|&a| crate::algebra::indicator_at(a, u)).collect();
        let minimal: Vec<u16> = fired.iter().copied().filter(|&a| !fired.iter().any(|&b| b != a && b & !a == 0)).collect();
        Ok(AntichainValuation::from_sorted(n, minimal))
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn sets(&self) -> impl Iterator<Item = Subset> + '_ {
        self.sets.iter().map(|&b| Subset::from_raw(self.n(), b))
    }

    /// Whether `χ̃_A` evaluates to 1.
    pub fn fires(&self, a: Subset) -> bool {
        self.sets.iter().any(|&w| w & !a.bits() == 0)
    }

    /// The product `χ̃_{W_1}···χ̃_{W_k}` whose feasibility decides whether
    /// the valuation is realized.
    pub fn term(&self) -> Term {
        Term::from_canonical(self.n(), Sets::from_slice(&self.sets))
    }

    pub fn to_lists(&self) -> Vec<Vec<usize>> {
        self.sets().map(|s| s.elements().collect()).collect()
    }

    fn up_set(&self) -> UpSet {
        UpSet::new(self.n(), &self.sets)
    }
}

impl std::fmt::Display for AntichainValuation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (i, s) in self.sets().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "}}")
    }
}

struct UpSet {
    words: Vec<u64>,
}

impl UpSet {
    fn new(n: usize, minimal: &[u16]) -> Self {
        let size = 1usize << n;
        let mut words = vec![0u64; size.div_ceil(64)];
        for a in 0..size {
            if minimal.iter().any(|&w| (w as usize) & !a == 0) {
                words[a / 64] |= 1 << (a % 64);
            }
        }
        UpSet { words }
    }

    #[inline]
    fn contains(&self, a: u16) -> bool {
        let a = a as usize;
        self.words[a / 64] & (1 << (a % 64)) != 0
    }

    #[inline]
    fn fires(&self, t: &[u16]) -> bool {
        t.iter().all(|&s| self.contains(s))
    }
}

/// Every antichain of subsets of `{1, …, n}`, including the empty antichain
/// and `{∅}`. Their number is the Dedekind number.
pub fn enumerate_antichains(n: usize) -> Result<Vec<AntichainValuation>> {
    if n > MAX_EXHAUSTIVE_N {
        return Err(Error::Capability { what: "antichain enumeration", n, max: MAX_EXHAUSTIVE_N });
    }
    let order = decreasing_size_order(n, true);
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    antichain_dfs(&order, 0, &mut chosen, &mut |w| {
        out.push(AntichainValuation::from_sorted(n, sorted(w)));
        true
    });
    Ok(out)
}

fn sorted(w: &[u16]) -> Vec<u16> {
    let mut v = w.to_vec();
    v.sort_unstable();
    v
}

fn decreasing_size_order(n: usize, with_empty: bool) -> Vec<u16> {
    let mut order: Vec<u16> = (0..=mask(n)).filter(|&a| with_empty || a != 0).collect();
    order.sort_by_key(|&a| (std::cmp::Reverse(a.count_ones()), a));
    order
}

/// Visits every antichain built from `order[from..]` on top of `chosen`.
/// `accept` returns whether to extend the antichain further.
fn antichain_dfs(order: &[u16], from: usize, chosen: &mut Vec<u16>, accept: &mut impl FnMut(&[u16]) -> bool) {
    if !accept(chosen) {
        return;
    }
    for i in from..order.len() {
        let s = order[i];
        // later sets are no larger, so only containment in a chosen set matters
        if chosen.iter().any(|&c| s & !c == 0) {
            continue;
        }
        chosen.push(s);
        antichain_dfs(order, i + 1, chosen, accept);
        chosen.pop();
    }
}

/// Antichains of nonempty sets whose product is nonzero, found depth-first in
/// decreasing set size. A zero antichain stays zero under extension, so its
/// subtree is skipped.
pub fn enumerate_feasible_valuations(n: usize, cache: &ZeroCache) -> Result<Vec<AntichainValuation>> {
    if n > MAX_VALUATION_N {
        return Err(Error::Capability { what: "valuation enumeration", n, max: MAX_VALUATION_N });
    }
    check_n(n)?;
    let order = decreasing_size_order(n, false);
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    antichain_dfs(&order, 0, &mut chosen, &mut |w| {
        let v = AntichainValuation::from_sorted(n, sorted(w));
        if cache.is_zero(&v.term()) {
            return false;
        }
        out.push(v);
        true
    });
    Ok(out)
}

/// The value of `sum` under the valuation.
pub fn evaluate(sum: &FormalSum, v: &AntichainValuation) -> BigInt {
    let up = v.up_set();
    sum.iter().filter(|(t, _)| up.fires(t.bits())).map(|(_, c)| c.clone()).fold(BigInt::zero(), |a, b| a + b)
}

/// A sum flattened for repeated evaluation.
struct Compiled {
    small: Option<Vec<(Sets, i128)>>,
    sum: FormalSum,
}

impl Compiled {
    fn new(sum: &FormalSum) -> Self {
        let small = sum
            .sorted()
            .into_iter()
            .map(|(t, c)| c.to_i128().map(|c| (Sets::from_slice(t.bits()), c)))
            .collect::<Option<Vec<_>>>();
        Compiled { small, sum: sum.clone() }
    }

    fn eval(&self, v: &AntichainValuation) -> BigInt {
        match &self.small {
            Some(terms) => {
                let up = v.up_set();
                let total: i128 = terms.iter().filter(|(t, _)| up.fires(t)).map(|(_, c)| *c).sum();
                BigInt::from(total)
            }
            None => evaluate(&self.sum, v),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum VerdictKind {
    ProvedEqual,
    NotEqual,
    Inconclusive,
}

impl VerdictKind {
    /// Process exit code: 0 equal, 1 not equal, 2 inconclusive.
    pub fn exit_code(self) -> i32 {
        match self {
            VerdictKind::ProvedEqual => 0,
            VerdictKind::NotEqual => 1,
            VerdictKind::Inconclusive => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cancel,
    Valuations,
}

/// A valuation at which the two sides differ, with a point of the simplex at
/// which every `χ̃_{W_i}` fires.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub valuation: Vec<Vec<usize>>,
    pub point: Vec<String>,
    pub lhs_value: String,
    pub rhs_value: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct VerdictStats {
    pub lhs_terms: usize,
    pub rhs_terms: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_monomials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain_nodes: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eliminated_in_build: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eliminated_in_residual: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub valuations_checked: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub n: usize,
    pub method: Method,
    pub verdict: VerdictKind,
    pub residual_terms: usize,
    pub witness: Option<Witness>,
    pub elapsed_ms: u64,
    pub exhaustive: bool,
    pub stats: VerdictStats,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub residual: Vec<String>,
}

impl Verdict {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("verdict serializes")
    }
}

fn same_n(lhs: &FormalSum, rhs: &FormalSum) -> Result<usize> {
    if lhs.n() != rhs.n() {
        return Err(Error::GroundSet(rhs.n()));
    }
    Ok(lhs.n())
}

/// Subtracts and drops every vanishing term. Never returns `NotEqual`.
pub fn verify_by_cancellation(lhs: &FormalSum, rhs: &FormalSum, cache: &ZeroCache) -> Result<Verdict> {
    let started = Instant::now();
    let n = same_n(lhs, rhs)?;
    let diff = lhs.sub(rhs);
    let terms: Vec<(&Term, &BigInt)> = diff.sorted();
    let zero: Vec<bool> = terms.par_iter().map(|(t, _)| cache.is_zero(t)).collect();
    let residual: Vec<String> = terms
        .iter()
        .zip(&zero)
        .filter(|(_, &z)| !z)
        .map(|((t, c), _)| format!("{c}·{t}"))
        .collect();
    let eliminated = zero.iter().filter(|&&z| z).count() as u64;
    Ok(Verdict {
        n,
        method: Method::Cancel,
        verdict: if residual.is_empty() { VerdictKind::ProvedEqual } else { VerdictKind::Inconclusive },
        residual_terms: residual.len(),
        witness: None,
        elapsed_ms: started.elapsed().as_millis() as u64,
        exhaustive: true,
        stats: VerdictStats {
            lhs_terms: lhs.len(),
            rhs_terms: rhs.len(),
            eliminated_in_residual: Some(eliminated),
            ..Default::default()
        },
        residual,
    })
}

/// Builds both sides with zero elimination and cancels. Returns the verdict
/// and the built left side.
pub fn verify_identity_by_cancellation(n: usize, cache: &ZeroCache) -> Result<(Verdict, FormalSum)> {
    let started = Instant::now();
    let ex = build_lhs_canonical(n, true, cache)?;
    let rhs = build_rhs(n)?;
    let mut verdict = verify_by_cancellation(&ex.sum, &rhs, cache)?;
    verdict.stats.raw_monomials = ex.stats.raw_monomials.to_u64();
    verdict.stats.chain_nodes = Some(ex.stats.chain_nodes);
    verdict.stats.eliminated_in_build = Some(ex.stats.eliminated);
    verdict.elapsed_ms = started.elapsed().as_millis() as u64;
    Ok((verdict, ex.sum))
}

fn witness_for(v: &AntichainValuation, lhs: BigInt, rhs: BigInt) -> Witness {
    let lp = lp_zero_test(&v.term());
    let point = lp.witness.expect("feasible valuation has a witness point");
    Witness {
        valuation: v.to_lists(),
        point: point.iter().map(|x| x.to_string()).collect(),
        lhs_value: lhs.to_string(),
        rhs_value: rhs.to_string(),
    }
}

/// First valuation (in the given order) where the two sides differ.
fn first_disagreement(
    lhs: &FormalSum,
    rhs: &FormalSum,
    valuations: &[AntichainValuation],
) -> Option<(usize, BigInt, BigInt)> {
    let l = Compiled::new(lhs);
    let r = Compiled::new(rhs);
    valuations.par_iter().enumerate().find_map_first(|(i, v)| {
        let (a, b) = (l.eval(v), r.eval(v));
        (a != b).then_some((i, a, b))
    })
}

/// Compares two sums at every feasible valuation (`n ≤ 5`).
pub fn verify_sums_by_valuations(lhs: &FormalSum, rhs: &FormalSum, cache: &ZeroCache) -> Result<Verdict> {
    let started = Instant::now();
    let n = same_n(lhs, rhs)?;
    if n > MAX_EXHAUSTIVE_N {
        return Err(Error::Capability { what: "exhaustive valuation check", n, max: MAX_EXHAUSTIVE_N });
    }
    let valuations = enumerate_feasible_valuations(n, cache)?;
    let mismatch = first_disagreement(lhs, rhs, &valuations);
    let (verdict, witness) = match mismatch {
        None => (VerdictKind::ProvedEqual, None),
        Some((i, a, b)) => (VerdictKind::NotEqual, Some(witness_for(&valuations[i], a, b))),
    };
    Ok(Verdict {
        n,
        method: Method::Valuations,
        verdict,
        residual_terms: 0,
        witness,
        elapsed_ms: started.elapsed().as_millis() as u64,
        exhaustive: true,
        stats: VerdictStats {
            lhs_terms: lhs.len(),
            rhs_terms: rhs.len(),
            valuations_checked: Some(valuations.len() as u64),
            ..Default::default()
        },
        residual: Vec::new(),
    })
}

/// A random point of the open simplex with exact rational coordinates,
/// `u_i = 2a_i / Σ_{j=0}^{n} a_j`, together with its integer numerators and
/// denominator.
fn random_point(n: usize, rng: &mut impl Rng) -> (Vec<i64>, i64) {
    let a: Vec<i64> = (0..=n).map(|_| rng.gen_range(1..=1_000_000)).collect();
    let total: i64 = a.iter().sum();
    (a[..n].to_vec(), total)
}

fn valuation_of_integer_point(a: &[i64], total: i64) -> AntichainValuation {
    let n = a.len();
    let fires = |s: u16| -> bool {
        let signed: i64 = (0..n).map(|i| if s & (1 << i) != 0 { a[i] } else { -a[i] }).sum();
        2 * signed > total
    };
    let fired: Vec<u16> = (0..=mask(n)).filter(|&s| fires(s)).collect();
    let minimal = fired.iter().copied().filter(|&s| !fired.iter().any(|&b| b != s && b & !s == 0)).collect();
    AntichainValuation::from_sorted(n, minimal)
}

/// Compares two sums at the valuations of random points. Agreement proves
/// nothing, so the best outcome is `Inconclusive`; any disagreement is a
/// genuine counterexample and carries the sampled point.
pub fn verify_sums_by_sampling(lhs: &FormalSum, rhs: &FormalSum, samples: usize, seed: u64) -> Result<Verdict> {
    let started = Instant::now();
    let n = same_n(lhs, rhs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut valuations = Vec::new();
    let mut points = Vec::new();
    for _ in 0..samples {
        let (a, total) = random_point(n, &mut rng);
        let v = valuation_of_integer_point(&a, total);
        if seen.insert(v.clone()) {
            valuations.push(v);
            points.push((a, total));
        }
    }
    let mismatch = first_disagreement(lhs, rhs, &valuations);
    let (verdict, witness) = match mismatch {
        None => (VerdictKind::Inconclusive, None),
        Some((i, l, r)) => {
            let (a, total) = &points[i];
            let point = a.iter().map(|&x| BigRational::new(BigInt::from(2 * x), BigInt::from(*total)).to_string());
            let w = Witness {
                valuation: valuations[i].to_lists(),
                point: point.collect(),
                lhs_value: l.to_string(),
                rhs_value: r.to_string(),
            };
            (VerdictKind::NotEqual, Some(w))
        }
    };
    Ok(Verdict {
        n,
        method: Method::Valuations,
        verdict,
        residual_terms: 0,
        witness,
        elapsed_ms: started.elapsed().as_millis() as u64,
        exhaustive: false,
        stats: VerdictStats {
            lhs_terms: lhs.len(),
            rhs_terms: rhs.len(),
            valuations_checked: Some(valuations.len() as u64),
            samples: Some(samples as u64),
            ..Default::default()
        },
        residual: Vec::new(),
    })
}

/// The valuation method on the identity itself: exhaustive for `n ≤ 5`,
/// sampled (and labeled non-exhaustive) at `n = 6`, refused above. The
/// exhaustive path builds the left side without zero elimination so that it
/// shares nothing with the cancellation method beyond the LP.
pub fn verify_by_valuations(n: usize, cache: &ZeroCache) -> Result<(Verdict, FormalSum)> {
    let started = Instant::now();
    if !(1..=MAX_VALUATION_N).contains(&n) {
        return Err(Error::Capability { what: "valuation method", n, max: MAX_VALUATION_N });
    }
    let rhs = build_rhs(n)?;
    let (mut verdict, ex) = if n <= MAX_EXHAUSTIVE_N {
        let ex = build_lhs_canonical(n, false, cache)?;
        (verify_sums_by_valuations(&ex.sum, &rhs, cache)?, ex)
    } else {
        let ex = build_lhs_canonical(n, true, cache)?;
        (verify_sums_by_sampling(&ex.sum, &rhs, DEFAULT_SAMPLES, DEFAULT_SEED)?, ex)
    };
    verdict.stats.raw_monomials = ex.stats.raw_monomials.to_u64();
    verdict.stats.chain_nodes = Some(ex.stats.chain_nodes);
    if n > MAX_EXHAUSTIVE_N {
        verdict.stats.eliminated_in_build = Some(ex.stats.eliminated);
    }
    verdict.elapsed_ms = started.elapsed().as_millis() as u64;
    Ok((verdict, ex.sum))
}

/// `Σ_{A ∈ S} (−1)^{|A|}` for `S = ⋃_i [∅, W_i^c]`, by inclusion–exclusion over
/// the members of `W`: the face sum of `[∅, C]` is `[C = ∅]`.
fn euler_by_inclusion_exclusion(n: usize, w: &[u16]) -> i64 {
    let full = mask(n);
    let k = w.len();
    let mut total = 0i64;
    for pick in 1u32..(1u32 << k) {
        let meet = (0..k).filter(|&i| pick & (1 << i) != 0).fold(full, |acc, i| acc & !w[i] & full);
        if meet == 0 {
            total += if pick.count_ones() % 2 == 1 { 1 } else { -1 };
        }
    }
    total
}

fn euler_by_faces(n: usize, w: &[u16]) -> i64 {
    let full = mask(n);
    (0..=full)
        .filter(|&a| w.iter().any(|&wi| a & wi == 0))
        .map(|a| if a.count_ones() % 2 == 0 { 1 } else { -1 })
        .sum()
}

fn parity(k: usize) -> i64 {
    if k.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// `(−1)^{n−1}·χ(S)` with `S = ⋃_i [∅, W_i^c]`, checked against the direct
/// evaluation of the right side.
pub fn euler_rhs_check(v: &AntichainValuation) -> Result<i64> {
    let n = v.n();
    let chi = if v.len() <= 20 { euler_by_inclusion_exclusion(n, &v.sets) } else { euler_by_faces(n, &v.sets) };
    let euler = parity(n - 1) * chi;
    let direct = evaluate(&build_rhs(n)?, v);
    if BigInt::from(euler) != direct {
        return Err(Error::EulerMismatch { euler: euler.to_string(), direct: direct.to_string() });
    }
    Ok(euler)
}

/// The two segments `[W∖J, W^c ∪ (W∖J)]` and `[W∩J, W^c ∪ (W∩J)]` as
/// (bottom, top) pairs.
pub fn segments(n: usize, j: u16, w: u16) -> [(u16, u16); 2] {
    let wc = !w & mask(n);
    let lo1 = w & !j;
    let lo2 = w & j;
    [(lo1, wc | lo1), (lo2, wc | lo2)]
}

fn in_segment(a: u16, (lo, hi): (u16, u16)) -> bool {
    lo & !a == 0 && a & !hi == 0
}

/// The inner chain sum at `(J, W)` as an order-complex Euler characteristic:
/// `0` if `{1} ∉ U`, else `(−1)^n Σ_{chains 𝒜' ⊆ Û} (−1)^{|𝒜'|−1}` with the
/// empty chain included, where `Û = U ∩ ({1}, [n]]`. Checked against direct
/// evaluation of the expanded inner sum.
pub fn euler_lhs_inner_check(j: Subset, v: &AntichainValuation) -> Result<i64> {
    let n = v.n();
    if j.contains(1) || j.n() != n {
        return Err(Error::Chain("the shift set J must be a subset of {2..n}".into()));
    }
    let segs: Vec<(u16, u16)> = v.sets.iter().flat_map(|&w| segments(n, j.bits(), w)).collect();
    let in_u = |a: u16| segs.iter().any(|&s| in_segment(a, s));
    let euler = if !in_u(1) {
        0
    } else {
        // above[A] = Σ over chains in Û ending at A of (−1)^{len−1}
        let mut members: Vec<u16> = (0..=mask(n)).filter(|&a| a & 1 != 0 && a != 1 && in_u(a)).collect();
        members.sort_by_key(|a| a.count_ones());
        let mut ending = vec![0i64; members.len()];
        for i in 0..members.len() {
            let below: i64 = (0..i).filter(|&k| members[k] != members[i] && members[k] & !members[i] == 0).map(|k| ending[k]).sum();
            ending[i] = 1 - below;
        }
        parity(n) * (ending.iter().sum::<i64>() - 1)
    };
    let direct = evaluate(&inner_chain_sum(n, j, None)?.sum, v);
    if BigInt::from(euler) != direct {
        return Err(Error::EulerMismatch { euler: euler.to_string(), direct: direct.to_string() });
    }
    Ok(euler)
}
