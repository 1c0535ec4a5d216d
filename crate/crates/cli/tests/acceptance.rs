//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::io::{BufRead, BufReader};
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use chi_verify::identity::{build_lhs_canonical, build_lhs_direct, build_rhs, raw_monomial_count, shift_sets};
use chi_verify::numeric::{check, integral_e, sum_c, TestFunctionSpec};
use chi_verify::partitions::PartitionLattice;
use chi_verify::subsets::{chain_sign_sum, chain_sign_sum_closed, enumerate_chains, ChainFamily};
use chi_verify::verifier::{
    enumerate_antichains, enumerate_feasible_valuations, euler_lhs_inner_check, euler_rhs_check, evaluate,
    verify_by_cancellation, verify_sums_by_valuations, AntichainValuation, VerdictKind,
};
use chi_verify::zero::{lp_zero_test, quick_zero_test, witness_is_valid, QuickVerdict, ZeroKind};
use chi_verify::{Chain, FormalSum, Subset, Term, ZeroCache};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const VALUATIONS_SMALL_BUDGET: Duration = Duration::from_secs(1);
const VALUATIONS_N5_BUDGET: Duration = Duration::from_secs(30);
const CANCEL_UP_TO_6_BUDGET: Duration = Duration::from_secs(300);
const CANCEL_N7_BUDGET: Duration = Duration::from_secs(4 * 3600);
const N8_PROGRESS_WAIT: Duration = Duration::from_secs(600);
const CHAIN_SUITE_BUDGET: Duration = Duration::from_secs(10);
const PLANTED_DEFECTS: usize = 20;
const INVERSION_ROUNDS: usize = 50;
const CLOSED_FORM_TOL: f64 = 1e-6;
const SEED: u64 = 0xacce97;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn cli(args: &[&str]) -> Result<(Option<i32>, String, Duration), String> {
    let started = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_chi-verify"))
        .args(args)
        .env_remove("CHI_VERIFY_CACHE_DIR")
        .env("RUST_LOG", "warn")
        .output()
        .map_err(err)?;
    Ok((out.status.code(), String::from_utf8_lossy(&out.stdout).into_owned(), started.elapsed()))
}

fn verify_cli(n: usize, method: &str) -> Result<(Value, Duration), String> {
    let (code, stdout, elapsed) = cli(&["verify", "--n", &n.to_string(), "--method", method])?;
    let line = stdout.lines().next().ok_or("no output")?;
    let v: Value = serde_json::from_str(line).map_err(err)?;
    ensure(v["verdict"] == "ProvedEqual" && code == Some(0), || format!("n={n}: {} exit {code:?}", v["verdict"]))?;
    Ok((v, elapsed))
}

fn valuations_prove_identity() -> Outcome {
    let mut times = Vec::new();
    for n in 1..=5 {
        let (v, elapsed) = verify_cli(n, "valuations")?;
        ensure(v["exhaustive"] == true, || format!("n={n}: not exhaustive"))?;
        let budget = if n <= 4 { VALUATIONS_SMALL_BUDGET } else { VALUATIONS_N5_BUDGET };
        ensure(elapsed < budget, || format!("n={n}: {elapsed:?} over {budget:?}"))?;
        times.push(format!("{:.2}s", elapsed.as_secs_f64()));
    }
    Ok(format!("ProvedEqual for n=1..5 ({})", times.join(", ")))
}

/// Runs the n = 8 expansion until the first shard reports, then stops it.
fn n8_reports_progress() -> Result<String, String> {
    let mut child = Command::new(env!("CARGO_BIN_EXE_chi-verify"))
        .args(["verify", "--n", "8", "--method", "cancel"])
        .env_remove("CHI_VERIFY_CACHE_DIR")
        .env("RUST_LOG", "info")
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(err)?;
    let stderr = child.stderr.take().unwrap();
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        for line in BufReader::new(stderr).lines().map_while(|l| l.ok()) {
            if line.contains("shard") && tx.send(line).is_err() {
                break;
            }
        }
    });
    let first = rx.recv_timeout(N8_PROGRESS_WAIT);
    let _ = child.kill();
    let _ = child.wait();
    let line = first.map_err(|_| format!("n=8: no progress within {N8_PROGRESS_WAIT:?}"))?;
    let tail = line.split("n=8: ").nth(1).unwrap_or(&line).to_string();
    Ok(tail)
}

fn cancellation_proves_identity() -> Outcome {
    let started = Instant::now();
    for n in 1..=6 {
        verify_cli(n, "cancel")?;
    }
    let up_to_6 = started.elapsed();
    ensure(up_to_6 < CANCEL_UP_TO_6_BUDGET, || format!("n=1..6 took {up_to_6:?}"))?;
    let (v7, t7) = verify_cli(7, "cancel")?;
    ensure(t7 < CANCEL_N7_BUDGET, || format!("n=7 took {t7:?}"))?;
    let progress = n8_reports_progress()?;
    Ok(format!(
        "n=1..6 in {:.1}s, n=7 in {:.1}s ({} raw monomials), n=8 progress: {progress}",
        up_to_6.as_secs_f64(),
        t7.as_secs_f64(),
        v7["stats"]["raw_monomials"]
    ))
}

fn plant(lhs: &FormalSum, rng: &mut impl Rng) -> FormalSum {
    let n = lhs.n();
    let mut out = lhs.clone();
    let terms: Vec<Term> = lhs.sorted().into_iter().map(|(t, _)| t.clone()).collect();
    let t = terms[rng.gen_range(0..terms.len())].clone();
    match rng.gen_range(0..3) {
        0 => out.add_term(t, BigInt::from([-2, -1, 1, 2][rng.gen_range(0..4)])),
        1 => {
            let c = lhs.coeff(&t);
            out.add_term(t, -c);
        }
        _ => {
            let all = enumerate_antichains(n).unwrap();
            out.add_term(all[rng.gen_range(0..all.len())].term(), BigInt::from(rng.gen_range(1..=3)));
        }
    }
    out
}

fn methods_agree() -> Outcome {
    let cache = ZeroCache::in_memory();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut detected = 0;
    let mut total = 0;
    for n in 1..=5 {
        let lhs = build_lhs_canonical(n, false, &cache).map_err(err)?.sum;
        let rhs = build_rhs(n).map_err(err)?;
        let mut cases = vec![lhs.clone()];
        cases.extend((0..PLANTED_DEFECTS).map(|_| plant(&lhs, &mut rng)));
        for (i, case) in cases.iter().enumerate() {
            let c = verify_by_cancellation(case, &rhs, &cache).map_err(err)?;
            let v = verify_sums_by_valuations(case, &rhs, &cache).map_err(err)?;
            total += 1;
            if i == 0 {
                ensure(c.verdict == VerdictKind::ProvedEqual && v.verdict == VerdictKind::ProvedEqual, || {
                    format!("n={n}: identity not proved by both methods")
                })?;
                continue;
            }
            match v.verdict {
                VerdictKind::NotEqual => {
                    detected += 1;
                    ensure(c.verdict != VerdictKind::ProvedEqual, || format!("n={n} case {i}: cancellation claims proof"))?;
                    let w = v.witness.as_ref().ok_or("NotEqual without witness")?;
                    let point: Vec<BigRational> = w.point.iter().map(|p| p.parse().unwrap()).collect();
                    let wv = AntichainValuation::new(n, w.valuation.iter().map(|e| Subset::from_elements(n, e).unwrap()))
                        .map_err(err)?;
                    ensure(witness_is_valid(&wv.term(), &point), || format!("n={n} case {i}: bad witness point"))?;
                    ensure(evaluate(case, &wv) != evaluate(&rhs, &wv), || format!("n={n} case {i}: witness agrees"))?;
                }
                VerdictKind::ProvedEqual => {
                    ensure(c.verdict == VerdictKind::ProvedEqual, || format!("n={n} case {i}: planted zero term kept"))?
                }
                VerdictKind::Inconclusive => return Err(format!("n={n} case {i}: exhaustive run inconclusive")),
            }
            ensure(c.verdict != VerdictKind::NotEqual, || format!("n={n} case {i}: cancellation said NotEqual"))?;
        }
    }
    Ok(format!("{total} cases over n=1..5, {detected} defects detected by both"))
}

fn subchains(n: usize, max_len: usize) -> Vec<Chain> {
    fn extend(n: usize, cur: &mut Vec<Subset>, max_len: usize, out: &mut Vec<Chain>) {
        out.push(Chain::new(cur.clone()).unwrap());
        if cur.len() == max_len {
            return;
        }
        let last = *cur.last().unwrap();
        for s in Subset::all(n).unwrap().filter(|s| last.is_proper_subset_of(*s)) {
            cur.push(s);
            extend(n, cur, max_len, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for first in Subset::all(n).unwrap().filter(|s| s.contains(1)) {
        extend(n, &mut vec![first], max_len, &mut out);
    }
    out
}

fn chain_sums() -> Outcome {
    let started = Instant::now();
    let mut checked = 0;
    let mut compare = |n: usize, fam: ChainFamily| -> Result<(), String> {
        let brute = chain_sign_sum(n, &fam).map_err(err)?;
        let closed = chain_sign_sum_closed(n, &fam).map_err(err)?;
        checked += 1;
        ensure(brute == closed, || format!("n={n} {fam:?}: {brute} vs {closed}"))
    };
    for n in 1..=6 {
        compare(n, ChainFamily::FirstContains1LastFull)?;
        compare(n, ChainFamily::FirstEmptyLastFull)?;
    }
    for n in 1..=5 {
        for b in subchains(n, 3) {
            compare(n, ChainFamily::ContainsSubchain(b))?;
        }
    }
    let elapsed = started.elapsed();
    ensure(elapsed < CHAIN_SUITE_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("{checked} families equal in {:.2}s", elapsed.as_secs_f64()))
}

fn mobius_suite() -> Outcome {
    for n in 1..=5 {
        let lat = PartitionLattice::new(n).map_err(err)?;
        ensure(lat.mobius() == lat.mobius_recursive(), || format!("n={n}: closed vs recursive"))?;
        ensure(lat.convolve(&lat.mobius(), &lat.zeta()) == lat.delta(), || format!("n={n}: μ∗ζ ≠ δ"))?;
        ensure(lat.convolve(&lat.zeta(), &lat.mobius()) == lat.delta(), || format!("n={n}: ζ∗μ ≠ δ"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for round in 0..INVERSION_ROUNDS {
        let lat = PartitionLattice::new(rng.gen_range(1..=5)).map_err(err)?;
        let g: Vec<i64> = (0..lat.len()).map(|_| rng.gen_range(-1000..=1000)).collect();
        let f = lat.act(&lat.zeta(), &g);
        ensure(lat.act(&lat.mobius(), &f) == g, || format!("round {round}: inversion failed"))?;
    }
    Ok(format!("n=1..5 exhaustive, {INVERSION_ROUNDS} inversion round trips"))
}

fn zero_oracle() -> Outcome {
    let mut witnesses = 0;
    for n in 1..=4 {
        for v in enumerate_antichains(n).map_err(err)? {
            let t = v.term();
            let lp = lp_zero_test(&t);
            if quick_zero_test(&t) == QuickVerdict::Zero {
                ensure(lp.kind == ZeroKind::Zero, || format!("quick rule unsound on {t}"))?;
            }
            if lp.kind == ZeroKind::Nonzero {
                let w = lp.witness.as_ref().ok_or_else(|| format!("{t}: no witness"))?;
                ensure(witness_is_valid(&t, w), || format!("{t}: witness fails"))?;
                witnesses += 1;
            }
        }
    }
    let missed = (1..=5)
        .flat_map(|n| enumerate_antichains(n).unwrap())
        .map(|v| v.term())
        .find(|t| t.len() >= 2 && quick_zero_test(t) == QuickVerdict::Unknown && lp_zero_test(t).kind == ZeroKind::Zero)
        .ok_or("no LP-only zero term found for n ≤ 5")?;
    Ok(format!("inclusion holds for n ≤ 4, {witnesses} witnesses checked, LP-only zero: {missed}"))
}

fn direct_equals_canonical() -> Outcome {
    let cache = ZeroCache::in_memory();
    let mut sizes = Vec::new();
    for n in 1..=4 {
        let direct = build_lhs_direct(n).map_err(err)?;
        let canonical = build_lhs_canonical(n, false, &cache).map_err(err)?.sum;
        ensure(direct == canonical, || format!("n={n}: forms differ"))?;
        sizes.push(direct.len().to_string());
    }
    Ok(format!("equal for n=1..4 (terms {})", sizes.join(", ")))
}

/// `2^{n−1} Σ_{chains from {1}} 2^{|chain|}`, with chains listed one by one.
fn brute_raw_count(n: usize) -> u128 {
    let per_j: u128 = enumerate_chains(n, Subset::singleton(n, 1).unwrap(), None)
        .unwrap()
        .map(|c| 1u128 << c.len())
        .sum();
    (1u128 << (n - 1)) * per_j
}

fn raw_count() -> Outcome {
    let mut counts = Vec::new();
    for n in 1..=7 {
        let built = raw_monomial_count(n).map_err(err)?;
        let brute = brute_raw_count(n);
        ensure(built == brute, || format!("n={n}: {built} vs {brute}"))?;
        counts.push(built.to_string());
    }
    let cache = ZeroCache::in_memory();
    for n in 1..=5 {
        let measured = build_lhs_canonical(n, false, &cache).map_err(err)?.stats.raw_monomials;
        ensure(measured == brute_raw_count(n), || format!("n={n}: expansion produced {measured}"))?;
    }
    Ok(format!("counts {}", counts.join(", ")))
}

fn euler_checks() -> Outcome {
    let cache = ZeroCache::in_memory();
    let mut checks = 0;
    for n in 1..=4 {
        for v in enumerate_feasible_valuations(n, &cache).map_err(err)? {
            euler_rhs_check(&v).map_err(|e| format!("n={n} {v}: {e}"))?;
            checks += 1;
            for j in shift_sets(n).map_err(err)? {
                euler_lhs_inner_check(j, &v).map_err(|e| format!("n={n} J={j} {v}: {e}"))?;
                checks += 1;
            }
        }
    }
    Ok(format!("{checks} exact comparisons"))
}

fn numeric_cross_check() -> Outcome {
    let vectors: [(usize, usize, Vec<Vec<f64>>); 3] = [
        (1, 64, vec![vec![0.3], vec![0.7], vec![0.95], vec![1.25], vec![1.5], vec![1.9]]),
        (2, 64, vec![vec![0.2, 0.3], vec![0.45, 0.5], vec![0.6, 0.9], vec![0.5, 1.2], vec![0.8, 0.8]]),
        (3, 32, vec![vec![0.2, 0.3, 0.4], vec![0.1, 0.2, 0.6], vec![0.5, 0.6, 0.7], vec![0.3, 0.5, 0.9], vec![0.2, 0.8, 0.8]]),
    ];
    let mut worst = 0f64;
    for (n, grid, list) in &vectors {
        ensure(list.len() >= 5, || format!("n={n}: too few vectors"))?;
        ensure(list.iter().any(|d| d.iter().sum::<f64>() < 1.0), || format!("n={n}: no Σδ<1"))?;
        ensure(list.iter().any(|d| (1.0..2.0).contains(&d.iter().sum::<f64>())), || format!("n={n}: no 1<Σδ<2"))?;
        for d in list {
            let r = check(&TestFunctionSpec::new(d.clone(), *grid).map_err(err)?).map_err(err)?;
            ensure(r.within_calibrated, || format!("{d:?}: gap {} over {}", r.gap, r.calibrated_tol))?;
            worst = worst.max(r.gap.abs());
        }
    }
    for (delta, want) in [(0.5, 0.0), (0.9, 0.0), (1.5, 1.0 / 12.0)] {
        let s = TestFunctionSpec::new(vec![delta], 64).map_err(err)?;
        let (c, e) = (sum_c(&s).map_err(err)?, integral_e(&s).map_err(err)?);
        ensure((c - want).abs() < CLOSED_FORM_TOL && (e - want).abs() < CLOSED_FORM_TOL, || {
            format!("δ={delta}: C={c} E={e}, want {want}")
        })?;
    }
    Ok(format!("16 vectors within calibrated tolerance (max |gap| {worst:.2e}), n=1 closed forms to {CLOSED_FORM_TOL:e}"))
}

fn conjecture_report() -> Outcome {
    for n in 1..=5 {
        let (code, stdout, _) = cli(&["conjecture", "--n", &n.to_string()])?;
        ensure(code == Some(0), || format!("n={n}: exit {code:?}"))?;
        let rows: Vec<&str> = stdout.lines().filter(|l| l.starts_with('{')).collect();
        ensure(rows.len() == 1 << (n - 1), || format!("n={n}: {} rows", rows.len()))?;
        ensure(rows.iter().all(|r| r.split_whitespace().nth(1) == Some("pass")), || format!("n={n}: a row fails"))?;
        let top = format!("{{{}}}", (2..=n).map(|i| i.to_string()).collect::<Vec<_>>().join(","));
        let mut wanted = vec!["{}".to_string(), top];
        if n >= 2 {
            wanted.push("{2}".into());
        }
        for j in wanted {
            let row = rows.iter().find(|r| r.split_whitespace().next() == Some(j.as_str()));
            ensure(row.is_some_and(|r| r.contains("J=")), || format!("n={n}: case J={j} not reported"))?;
        }
    }
    Ok("all J pass for n=1..5, including J=∅, J={2}, J={2..n}".into())
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("identity by valuations, n ≤ 5", valuations_prove_identity),
        ("identity by cancellation, n ≤ 7", cancellation_proves_identity),
        ("method agreement with planted defects", methods_agree),
        ("chain-sum closed forms", chain_sums),
        ("Möbius suite", mobius_suite),
        ("zero-oracle suite", zero_oracle),
        ("direct form equals canonical form", direct_equals_canonical),
        ("raw monomial count", raw_count),
        ("Euler-characteristic cross-checks", euler_checks),
        ("numeric cross-check", numeric_cross_check),
        ("conjecture report", conjecture_report),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
