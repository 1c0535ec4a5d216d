//! Exact rational simplex for the covering program
//!
//! ```text
//! minimize Σ x_i  subject to  M x ≥ 1,  x ≥ 0
//! ```
//!
//! with `M` a ±1 matrix. The dual `maximize Σ y_j  s.t.  Mᵀ y ≤ 1, y ≥ 0` has
//! the origin as a feasible basis, so a single phase with Bland's rule
//! suffices: an unbounded dual means the primal is infeasible, and at a dual
//! optimum the primal solution is read off the slack reduced costs.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoverOutcome {
    Infeasible,
    Optimal { value: BigRational, x: Vec<BigRational> },
}

/// Solves the covering program for the rows of `m` (each row has length `n`,
/// entries ±1). Every optimal point is checked against the constraints before
/// it is returned.
pub fn solve_cover(m: &[Vec<i8>], n: usize) -> CoverOutcome {
    let k = m.len();
    if k == 0 {
        return CoverOutcome::Optimal { value: BigRational::zero(), x: vec![BigRational::zero(); n] };
    }
    let cols = k + n;
    // rows: one per primal variable x_i (dual constraint), then the objective row
    let mut tab: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            let mut row = Vec::with_capacity(cols + 1);
            row.extend((0..k).map(|j| BigRational::from_integer(m[j][i].into())));
            row.extend((0..n).map(|s| if s == i { BigRational::one() } else { BigRational::zero() }));
            row.push(BigRational::one());
            row
        })
        .collect();
    let mut obj: Vec<BigRational> = (0..cols + 1)
        .map(|c| if c < k { -BigRational::one() } else { BigRational::zero() })
        .collect();
    let mut basis: Vec<usize> = (k..k + n).collect();

    while let Some(enter) = (0..cols).find(|&c| obj[c].is_negative()) {
        let mut leave: Option<(usize, BigRational)> = None;
        for (r, row) in tab.iter().enumerate() {
            if !row[enter].is_positive() {
                continue;
            }
            let ratio = &row[cols] / &row[enter];
            let better = match &leave {
                None => true,
                Some((lr, best)) => ratio < *best || (ratio == *best && basis[r] < basis[*lr]),
            };
            if better {
                leave = Some((r, ratio));
            }
        }
        let Some((pr, _)) = leave else {
            return CoverOutcome::Infeasible;
        };
        let piv = tab[pr][enter].clone();
        for v in tab[pr].iter_mut() {
            *v /= &piv;
        }
        let pivot_row = tab[pr].clone();
        for (r, row) in tab.iter_mut().enumerate() {
            if r == pr || row[enter].is_zero() {
                continue;
            }
            let f = row[enter].clone();
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= &f * p;
                }
            }
        }
        let f = obj[enter].clone();
        for (v, p) in obj.iter_mut().zip(&pivot_row) {
            if !p.is_zero() {
                *v -= &f * p;
            }
        }
        basis[pr] = enter;
    }

    let value = obj[cols].clone();
    let x: Vec<BigRational> = (0..n).map(|i| obj[k + i].clone()).collect();
    assert!(x.iter().all(|v| !v.is_negative()), "simplex returned a negative primal value");
    assert_eq!(x.iter().fold(BigRational::zero(), |a, b| a + b), value, "primal and dual objectives differ");
    for row in m {
        let lhs = row
            .iter()
            .zip(&x)
            .fold(BigRational::zero(), |acc, (&a, v)| if a > 0 { acc + v } else { acc - v });
        assert!(lhs >= BigRational::one(), "simplex returned a primal point violating a constraint");
    }
    CoverOutcome::Optimal { value, x }
}
