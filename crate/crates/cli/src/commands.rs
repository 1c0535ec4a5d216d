use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use chi_verify::identity::{build_lhs_canonical, build_rhs, build_simp_forms, inner_chain_sum, shift_sets};
use chi_verify::numeric::{check, TestFunctionSpec};
use chi_verify::verifier::{
    verify_by_valuations, verify_identity_by_cancellation, verify_sums_by_valuations, Verdict, VerdictKind,
    MAX_EXHAUSTIVE_N, MAX_VALUATION_N,
};
use chi_verify::zero::{lp_zero_test, ZeroKind};
use chi_verify::{Error, FormalSum, Result, Subset, ZeroCache};
use log::{info, warn};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::{CacheAction, MethodArg, EXIT_DATA, EXIT_USAGE};

/// Entries re-checked by `verify-integrity`: 1% of the cache, but never fewer
/// than 256 (or the whole cache when it is smaller).
const INTEGRITY_MIN_SAMPLE: usize = 256;

pub fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Capability { .. }
        | Error::GroundSet(_)
        | Error::SubsetBits { .. }
        | Error::Element { .. }
        | Error::Numeric(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn open_cache(dir: Option<&Path>) -> Result<ZeroCache> {
    match dir {
        Some(d) => {
            let cache = ZeroCache::open(d)?;
            info!("loaded {} cached verdicts from {}", cache.len(), d.display());
            Ok(cache)
        }
        None => Ok(ZeroCache::in_memory()),
    }
}

fn finish_cache(cache: &ZeroCache) -> Result<()> {
    let written = cache.flush()?;
    let s = cache.stats();
    info!(
        "zero tests: {} by the counting rule, {} cache hits, {} LP runs; {} new entries persisted",
        s.quick_zero, s.hits, s.lp_runs, written
    );
    Ok(())
}

fn write_terms(path: &Path, sum: &FormalSum) -> Result<()> {
    let w = BufWriter::new(File::create(path)?);
    sum.write_jsonl(w)?;
    info!("wrote {} terms to {}", sum.len(), path.display());
    Ok(())
}

/// Exit status for the verdicts of one run: any disagreement wins, then any
/// proof.
fn combined_exit(verdicts: &[Verdict]) -> u8 {
    let kinds: Vec<VerdictKind> = verdicts.iter().map(|v| v.verdict).collect();
    if kinds.contains(&VerdictKind::NotEqual) {
        VerdictKind::NotEqual.exit_code() as u8
    } else if kinds.contains(&VerdictKind::ProvedEqual) {
        VerdictKind::ProvedEqual.exit_code() as u8
    } else {
        VerdictKind::Inconclusive.exit_code() as u8
    }
}

pub fn verify(n: usize, method: MethodArg, cache_dir: Option<&Path>, emit: Option<&Path>) -> Result<u8> {
    if method != MethodArg::Cancel && n > MAX_VALUATION_N {
        return Err(Error::Capability { what: "valuation method", n, max: MAX_VALUATION_N });
    }
    let cache = open_cache(cache_dir)?;
    let mut verdicts = Vec::new();
    let mut emitted = false;
    let mut run = |result: Result<(Verdict, FormalSum)>| -> Result<()> {
        let (verdict, lhs) = result?;
        println!("{}", verdict.to_json());
        if let (Some(path), false) = (emit, emitted) {
            write_terms(path, &lhs)?;
            emitted = true;
        }
        verdicts.push(verdict);
        Ok(())
    };
    if matches!(method, MethodArg::Cancel | MethodArg::Both) {
        info!("n={n}: expanding the chain form with zero elimination");
        run(verify_identity_by_cancellation(n, &cache))?;
    }
    if matches!(method, MethodArg::Valuations | MethodArg::Both) {
        info!("n={n}: evaluating at antichain valuations");
        run(verify_by_valuations(n, &cache))?;
    }
    finish_cache(&cache)?;
    let kinds: Vec<VerdictKind> = verdicts.iter().map(|v| v.verdict).collect();
    if kinds.contains(&VerdictKind::NotEqual) && kinds.contains(&VerdictKind::ProvedEqual) {
        warn!("methods disagree: {kinds:?}");
    }
    Ok(combined_exit(&verdicts))
}

fn describe(j: Subset) -> &'static str {
    let n = j.n();
    let rest = (2..=n).collect::<Vec<_>>();
    if j.is_empty() && j.elements().eq(rest.iter().copied()) {
        "J=∅={2..n}"
    } else if j.is_empty() {
        "J=∅"
    } else if j.elements().eq(rest.iter().copied()) {
        "J={2..n}"
    } else if j.len() == 1 && j.contains(2) {
        "J={2}"
    } else {
        ""
    }
}

pub fn conjecture(n: usize, cache_dir: Option<&Path>) -> Result<u8> {
    if n > MAX_EXHAUSTIVE_N {
        return Err(Error::Capability { what: "conjecture check", n, max: MAX_EXHAUSTIVE_N });
    }
    let cache = open_cache(cache_dir)?;
    println!("{:<14} {:<6} {:>11} {:>10} {:>11}  case", "J", "result", "inner_terms", "simp_terms", "valuations");
    let mut failures = 0;
    for j in shift_sets(n)? {
        let inner = inner_chain_sum(n, j, None)?.sum;
        let simp = build_simp_forms(n, j)?;
        let v = verify_sums_by_valuations(&inner, &simp, &cache)?;
        let pass = v.verdict == VerdictKind::ProvedEqual;
        if !pass {
            failures += 1;
        }
        println!(
            "{:<14} {:<6} {:>11} {:>10} {:>11}  {}",
            j.to_string(),
            if pass { "pass" } else { "FAIL" },
            inner.len(),
            simp.len(),
            v.stats.valuations_checked.unwrap_or(0),
            describe(j)
        );
    }
    let total = 1usize << (n - 1);
    println!("n={n}: {} of {total} shift sets match the conjectured form", total - failures);
    finish_cache(&cache)?;
    Ok(if failures == 0 { 0 } else { 1 })
}

pub fn cache(cache_dir: Option<&Path>, action: CacheAction) -> Result<u8> {
    let Some(dir) = cache_dir else {
        eprintln!("error: cache commands need --cache-dir or CHI_VERIFY_CACHE_DIR");
        return Ok(EXIT_USAGE);
    };
    let cache = ZeroCache::open(dir)?;
    match action {
        CacheAction::Stats => {
            let entries = cache.entries();
            let zero = entries.iter().filter(|(_, z)| *z).count();
            let out = json!({
                "path": cache.path().map(|p| p.display().to_string()),
                "entries": entries.len(),
                "zero": zero,
                "nonzero": entries.len() - zero,
            });
            println!("{out}");
            Ok(0)
        }
        CacheAction::Warm { n } => {
            let n = n as usize;
            let before = cache.len();
            let ex = build_lhs_canonical(n, true, &cache)?;
            for (t, _) in build_rhs(n)?.iter() {
                cache.is_zero(t);
            }
            for (t, _) in ex.sum.iter() {
                cache.is_zero(t);
            }
            finish_cache(&cache)?;
            println!("{}", json!({ "n": n, "entries_before": before, "entries": cache.len() }));
            Ok(0)
        }
        CacheAction::VerifyIntegrity { seed } => {
            let entries = cache.entries();
            let wanted = (entries.len().div_ceil(100)).max(INTEGRITY_MIN_SAMPLE.min(entries.len()));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut bad = 0usize;
            for i in sample(&mut rng, entries.len(), wanted).into_iter() {
                let (t, zero) = &entries[i];
                let actual = lp_zero_test(t).kind == ZeroKind::Zero;
                if actual != *zero {
                    bad += 1;
                    eprintln!("mismatch: {t} cached as {} but the LP says {}", verdict_word(*zero), verdict_word(actual));
                }
            }
            println!("{}", json!({ "entries": entries.len(), "checked": wanted, "mismatches": bad }));
            Ok(if bad == 0 { 0 } else { 1 })
        }
    }
}

fn verdict_word(zero: bool) -> &'static str {
    if zero {
        "zero"
    } else {
        "nonzero"
    }
}

pub fn numeric_check(n: usize, supports: Vec<f64>, grid: usize, tol: f64) -> Result<u8> {
    if supports.len() != n {
        return Err(Error::Numeric(format!("expected {n} supports, got {}", supports.len())));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::Numeric("tolerance must be positive".into()));
    }
    let spec = TestFunctionSpec::new(supports, grid)?;
    let report = check(&spec)?;
    let allowed = tol * spec.scale();
    let within = report.gap.abs() <= allowed;
    let mut out = serde_json::to_value(&report).expect("report serializes");
    out["tol"] = json!(tol);
    out["allowed_gap"] = json!(allowed);
    out["within_tol"] = json!(within);
    println!("{out}");
    Ok(if within { 0 } else { 1 })
}
