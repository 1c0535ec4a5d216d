//! Deciding whether a product `χ̃_{A_1}···χ̃_{A_k}` vanishes identically on the
//! open simplex `{u_i > 0, Σ u_i < 2}`.
//!
//! Two tests: the counting rule (if every coordinate lies in at most three
//! quarters of the `A_j`, summing the constraints forces `Σ u_i > 2`) and the
//! exact covering LP, which is complete. Verdicts of the LP are memoized in a
//! [`ZeroCache`] that can be persisted as text, one line per term:
//!
//! ```text
//! n;A_1,A_2,…;v
//! ```
//!
//! where the `A_j` are decimal bit vectors of the canonical term and `v` is
//! `1` when the product is identically zero and `0` otherwise.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use dashmap::DashMap;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rustc_hash::FxBuildHasher;
use serde::Serialize;

use crate::algebra::Term;
use crate::error::{Error, Result};
use crate::lp::{solve_cover, CoverOutcome};

pub const CACHE_FILE: &str = "zero_cache.txt";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuickVerdict {
    Zero,
    Unknown,
}

/// The three-quarters rule: for `k ≥ 2`, zero if `4·e_i ≤ 3·k` for every
/// coordinate `i`, where `e_i` counts the sets containing `i`.
pub fn quick_zero_test(t: &Term) -> QuickVerdict {
    let k = t.len();
    if k < 2 {
        return QuickVerdict::Unknown;
    }
    let all_small = (0..t.n()).all(|i| {
        let e = t.bits().iter().filter(|&&s| s & (1 << i) != 0).count();
        4 * e <= 3 * k
    });
    if all_small {
        QuickVerdict::Zero
    } else {
        QuickVerdict::Unknown
    }
}

/// The ±1 constraint matrix of a term: row `j` is `+1` exactly on `A_j`.
pub fn lp_matrix(t: &Term) -> Vec<Vec<i8>> {
    t.bits()
        .iter()
        .map(|&s| (0..t.n()).map(|i| if s & (1 << i) != 0 { 1 } else { -1 }).collect())
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ZeroKind {
    Zero,
    Nonzero,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpVerdict {
    pub kind: ZeroKind,
    /// Optimum of `min Σ x_i`; `None` when the program is infeasible.
    pub optimum: Option<BigRational>,
    /// A point of the open simplex where every generator fires. Present iff nonzero.
    pub witness: Option<Vec<BigRational>>,
}

/// Decides a term exactly. Zero iff the covering LP is infeasible or its
/// optimum is at least 2. For a nonzero term with optimal point `x*` and
/// optimum `c* < 2`, the witness is `(1+ε)x* + η·1` with
/// `ε = (2−c*)/(4·max(c*,1))` and `η = ε/(2n)`, which satisfies every
/// constraint strictly, has positive coordinates and sums to less than 2.
pub fn lp_zero_test(t: &Term) -> LpVerdict {
    let n = t.n();
    let two = BigRational::from_integer(2.into());
    if t.is_one() {
        let w = vec![BigRational::new(BigInt::one(), BigInt::from(4 * n)); n];
        return LpVerdict { kind: ZeroKind::Nonzero, optimum: Some(BigRational::zero()), witness: Some(w) };
    }
    match solve_cover(&lp_matrix(t), n) {
        CoverOutcome::Infeasible => LpVerdict { kind: ZeroKind::Zero, optimum: None, witness: None },
        CoverOutcome::Optimal { value, x } => {
            if value >= two {
                return LpVerdict { kind: ZeroKind::Zero, optimum: Some(value), witness: None };
            }
            let one = BigRational::one();
            let scale_base = if value > one { value.clone() } else { one.clone() };
            let eps = (&two - &value) / (BigRational::from_integer(4.into()) * scale_base);
            let eta = &eps / BigRational::from_integer(BigInt::from(2 * n));
            let factor = &one + &eps;
            let w: Vec<BigRational> = x.iter().map(|xi| xi * &factor + &eta).collect();
            debug_assert!(witness_is_valid(t, &w));
            LpVerdict { kind: ZeroKind::Nonzero, optimum: Some(value), witness: Some(w) }
        }
    }
}

/// Exact check that `w` lies in the open simplex and fires every generator of `t`.
pub fn witness_is_valid(t: &Term, w: &[BigRational]) -> bool {
    if w.len() != t.n() {
        return false;
    }
    let total = w.iter().fold(BigRational::zero(), |a, b| a + b);
    w.iter().all(|x| *x > BigRational::zero())
        && total < BigRational::from_integer(2.into())
        && t.eval_at(w)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CacheStats {
    pub quick_zero: u64,
    pub hits: u64,
    pub lp_runs: u64,
}

/// Memoized LP verdicts, safe to share across worker threads.
pub struct ZeroCache {
    entries: DashMap<Term, bool, FxBuildHasher>,
    path: Option<PathBuf>,
    fresh: Mutex<Vec<(Term, bool)>>,
    quick_zero: AtomicU64,
    hits: AtomicU64,
    lp_runs: AtomicU64,
}

impl Default for ZeroCache {
    fn default() -> Self {
        ZeroCache::in_memory()
    }
}

impl ZeroCache {
    pub fn in_memory() -> Self {
        ZeroCache {
            entries: DashMap::with_hasher(FxBuildHasher),
            path: None,
            fresh: Mutex::new(Vec::new()),
            quick_zero: AtomicU64::new(0),
            hits: AtomicU64::new(0),
            lp_runs: AtomicU64::new(0),
        }
    }

    /// Opens (creating if needed) the cache in `dir` and loads every entry.
    pub fn open(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let path = dir.join(CACHE_FILE);
        let mut cache = ZeroCache::in_memory();
        if path.exists() {
            for (term, zero) in read_cache_file(&path)? {
                cache.entries.insert(term, zero);
            }
        }
        cache.path = Some(path);
        Ok(cache)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, t: &Term) -> Option<bool> {
        self.entries.get(t).map(|v| *v)
    }

    pub fn insert(&self, t: Term, zero: bool) {
        if self.entries.insert(t.clone(), zero).is_none() {
            self.fresh.lock().unwrap().push((t, zero));
        }
    }

    /// Every entry, in canonical term order.
    pub fn entries(&self) -> Vec<(Term, bool)> {
        let mut v: Vec<_> = self.entries.iter().map(|e| (e.key().clone(), *e.value())).collect();
        v.sort();
        v
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            quick_zero: self.quick_zero.load(Ordering::Relaxed),
            hits: self.hits.load(Ordering::Relaxed),
            lp_runs: self.lp_runs.load(Ordering::Relaxed),
        }
    }

    /// Appends entries added since the last flush to the backing file.
    pub fn flush(&self) -> Result<usize> {
        let Some(path) = &self.path else {
            return Ok(0);
        };
        let mut fresh = self.fresh.lock().unwrap();
        if fresh.is_empty() {
            return Ok(0);
        }
        fresh.sort();
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let mut w = BufWriter::new(file);
        for (t, zero) in fresh.iter() {
            writeln!(w, "{}", format_line(t, *zero))?;
        }
        w.flush()?;
        let count = fresh.len();
        fresh.clear();
        Ok(count)
    }

    /// Quick rule first, then the memo, then the LP (recording its verdict).
    pub fn is_zero(&self, t: &Term) -> bool {
        if quick_zero_test(t) == QuickVerdict::Zero {
            self.quick_zero.fetch_add(1, Ordering::Relaxed);
            return true;
        }
        if let Some(v) = self.entries.get(t) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return *v;
        }
        self.lp_runs.fetch_add(1, Ordering::Relaxed);
        let zero = lp_zero_test(t).kind == ZeroKind::Zero;
        self.insert(t.clone(), zero);
        zero
    }
}

/// Free-function form of [`ZeroCache::is_zero`].
pub fn is_zero(t: &Term, cache: &ZeroCache) -> bool {
    cache.is_zero(t)
}

pub fn format_line(t: &Term, zero: bool) -> String {
    let sets: Vec<String> = t.bits().iter().map(|b| b.to_string()).collect();
    format!("{};{};{}", t.n(), sets.join(","), zero as u8)
}

pub fn parse_line(line: &str) -> std::result::Result<(Term, bool), String> {
    let mut parts = line.split(';');
    let (Some(n), Some(sets), Some(v), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
        return Err("expected three ';'-separated fields".into());
    };
    let n: usize = n.trim().parse().map_err(|_| format!("bad ground-set size {n:?}"))?;
    let bits = if sets.trim().is_empty() {
        Vec::new()
    } else {
        sets.split(',')
            .map(|s| s.trim().parse::<u32>().map_err(|_| format!("bad set {s:?}")))
            .collect::<std::result::Result<Vec<_>, _>>()?
    };
    let term = Term::from_bits(n, &bits).map_err(|e| e.to_string())?;
    if term.bits().iter().map(|&b| b as u32).collect::<Vec<_>>() != bits {
        return Err("term is not in canonical antichain form".into());
    }
    let zero = match v.trim() {
        "0" => false,
        "1" => true,
        other => return Err(format!("bad verdict {other:?}")),
    };
    Ok((term, zero))
}

pub fn read_cache_file(path: &Path) -> Result<Vec<(Term, bool)>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry = parse_line(&line).map_err(|msg| Error::CacheCorrupt {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        })?;
        out.push(entry);
    }
    Ok(out)
}
