//! Quadrature check of the identity in integral form,
//! `Σ_{F ∈ Π(n)} C(F) = E(O)`, for triangular test functions
//! `f̂_i(u) = max(0, 1 − |u|/δ_i)` and `n ≤ 3`.
//!
//! All integrals use the tensor trapezoid rule on the grid `hℤ^ν` with
//! `h = 1/grid`, so the breakpoints `±1` of the indicators are grid points.
//! Indicator arguments are computed in integer grid units and an indicator
//! sitting exactly on its breakpoint counts one half, which is what the
//! trapezoid rule assigns to a jump.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::partitions::{enumerate_partitions, mobius, SetPartition};
use crate::subsets::Subset;

/// Largest `n` (and integration dimension) supported.
pub const MAX_NUMERIC_N: usize = 3;
/// Multiplier applied to the grid-doubling error estimate.
pub const SAFETY: f64 = 4.0;
/// Floor of the calibrated tolerance, covering rounding when both grids agree.
pub const TOL_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestFunctionSpec {
    n: usize,
    supports: Vec<f64>,
    grid: usize,
}

impl TestFunctionSpec {
    pub fn new(supports: Vec<f64>, grid: usize) -> Result<Self> {
        let n = supports.len();
        if !(1..=MAX_NUMERIC_N).contains(&n) {
            return Err(Error::Capability { what: "quadrature", n, max: MAX_NUMERIC_N });
        }
        if supports.iter().any(|&d| !(d.is_finite() && d > 0.0)) {
            return Err(Error::Numeric("supports must be positive".into()));
        }
        if supports.iter().sum::<f64>() >= 2.0 {
            return Err(Error::Numeric("supports must sum to less than 2".into()));
        }
        if grid < 2 || !grid.is_power_of_two() {
            return Err(Error::Numeric(format!("grid {grid} is not a power of two ≥ 2")));
        }
        Ok(TestFunctionSpec { n, supports, grid })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn supports(&self) -> &[f64] {
        &self.supports
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn h(&self) -> f64 {
        1.0 / self.grid as f64
    }

    pub fn refined(&self) -> Self {
        TestFunctionSpec { grid: self.grid * 2, ..self.clone() }
    }

    /// `Π δ_i`, the natural size of every integral here.
    pub fn scale(&self) -> f64 {
        self.supports.iter().product()
    }
}

/// An even function sampled at `kh` for `k ∈ [−half, half]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sampled {
    pub h: f64,
    pub half: usize,
    pub values: Vec<f64>,
}

impl Sampled {
    pub fn at(&self, k: i64) -> f64 {
        let i = k + self.half as i64;
        if i < 0 || i as usize >= self.values.len() {
            0.0
        } else {
            self.values[i as usize]
        }
    }

    /// Trapezoid integral over ℝ; the samples vanish at both ends.
    pub fn integral(&self) -> f64 {
        self.h * self.values.iter().sum::<f64>()
    }

    fn convolve(&self, other: &Sampled) -> Sampled {
        let mut values = vec![0.0; self.values.len() + other.values.len() - 1];
        for (i, a) in self.values.iter().enumerate() {
            for (j, b) in other.values.iter().enumerate() {
                values[i + j] += self.h * a * b;
            }
        }
        Sampled { h: self.h, half: self.half + other.half, values }
    }
}

/// The triangle `f̂_i` sampled on the grid (`i` is 1-based).
pub fn sampled_hat(i: usize, spec: &TestFunctionSpec) -> Result<Sampled> {
    let Some(&delta) = spec.supports.get(i.wrapping_sub(1)) else {
        return Err(Error::Element { element: i, n: spec.n });
    };
    let h = spec.h();
    let half = (delta / h).floor() as usize;
    let values = (-(half as i64)..=half as i64).map(|k| (1.0 - (k as f64 * h).abs() / delta).max(0.0)).collect();
    Ok(Sampled { h, half, values })
}

/// The transform of `Π_{i∈block} f_i`: the convolution of the member
/// triangles.
pub fn block_hat(block: Subset, spec: &TestFunctionSpec) -> Result<Sampled> {
    if block.n() != spec.n {
        return Err(Error::SubsetBits { bits: block.bits() as u32, n: spec.n });
    }
    let mut members = block.elements();
    let Some(first) = members.next() else {
        return Err(Error::Numeric("empty block".into()));
    };
    let mut acc = sampled_hat(first, spec)?;
    for i in members {
        acc = acc.convolve(&sampled_hat(i, spec)?);
    }
    Ok(acc)
}

/// `χ = 1_{[−1,1]}` at `s` grid units.
#[inline]
fn chi(s: i64, g: i64) -> f64 {
    match s.abs().cmp(&g) {
        std::cmp::Ordering::Less => 1.0,
        std::cmp::Ordering::Equal => 0.5,
        std::cmp::Ordering::Greater => 0.0,
    }
}

/// `χ̃ = 1_{(1,∞)}` at `s` grid units.
#[inline]
fn chi_tilde(s: i64, g: i64) -> f64 {
    match s.cmp(&g) {
        std::cmp::Ordering::Greater => 1.0,
        std::cmp::Ordering::Equal => 0.5,
        std::cmp::Ordering::Less => 0.0,
    }
}

fn orderings_fixing_first(k: usize) -> Vec<Vec<usize>> {
    fn go(rest: &mut Vec<usize>, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..rest.len() {
            let x = rest.remove(i);
            prefix.push(x);
            go(rest, prefix, out);
            prefix.pop();
            rest.insert(i, x);
        }
    }
    let mut out = Vec::new();
    go(&mut (1..k).collect(), &mut vec![0], &mut out);
    out
}

/// `χ*_ν` at grid point `k`: `Σ_π Π_i χ(u_{π(1)}+…+u_{π(i)} − u_{π(i+1)} − … − u_{π(ν)})`.
fn chi_star_at(k: &[i64], orders: &[Vec<usize>], g: i64) -> f64 {
    let total: i64 = k.iter().sum();
    orders
        .iter()
        .map(|pi| {
            let mut plus = 0i64;
            let mut prod = 1.0;
            for &p in pi {
                plus += k[p];
                prod *= chi(2 * plus - total, g);
                if prod == 0.0 {
                    break;
                }
            }
            prod
        })
        .sum()
}

/// Visits every multi-index in the box `lo[d] ..= hi[d]`.
fn for_each_index(lo: &[i64], hi: &[i64], mut visit: impl FnMut(&[i64])) {
    let mut k = lo.to_vec();
    if lo.iter().zip(hi).any(|(a, b)| a > b) {
        return;
    }
    loop {
        visit(&k);
        let mut d = 0;
        loop {
            if d == k.len() {
                return;
            }
            if k[d] < hi[d] {
                k[d] += 1;
                break;
            }
            k[d] = lo[d];
            d += 1;
        }
    }
}

/// `C(F) = ½ ∫_{ℝ^ν} (μ(F,N) + (−1)^ν χ*_ν(u)) Π_l F̂_l(u_l) du`.
pub fn integral_c(f: &SetPartition, spec: &TestFunctionSpec) -> Result<f64> {
    let nu = f.len();
    if nu > MAX_NUMERIC_N {
        return Err(Error::Capability { what: "quadrature dimension", n: nu, max: MAX_NUMERIC_N });
    }
    if f.n() != spec.n {
        return Err(Error::GroundSet(f.n()));
    }
    let hats: Vec<Sampled> = f.blocks().iter().map(|&b| block_hat(b, spec)).collect::<Result<_>>()?;
    let mu = mobius(f, &SetPartition::coarsest(spec.n)?) as f64;
    let sign = if nu.is_multiple_of(2) { 1.0 } else { -1.0 };
    let orders = orderings_fixing_first(nu);
    let g = spec.grid as i64;
    let hi: Vec<i64> = hats.iter().map(|s| s.half as i64).collect();
    let lo: Vec<i64> = hi.iter().map(|&x| -x).collect();
    let mut acc = 0.0;
    for_each_index(&lo, &hi, |k| {
        let w: f64 = k.iter().zip(&hats).map(|(&ki, s)| s.at(ki)).product();
        if w != 0.0 {
            acc += w * (mu + sign * chi_star_at(k, &orders, g));
        }
    });
    Ok(0.5 * acc * spec.h().powi(nu as i32))
}

/// `E(O) = ∫_{ℝ^n_{≥0}} Σ_I (−1)^{|I|+1} χ̃(Σ_I u − Σ_{I^c} u) Π f̂_i(u_i) du`.
pub fn integral_e(spec: &TestFunctionSpec) -> Result<f64> {
    let n = spec.n;
    let hats: Vec<Sampled> = (1..=n).map(|i| sampled_hat(i, spec)).collect::<Result<_>>()?;
    let g = spec.grid as i64;
    let hi: Vec<i64> = hats.iter().map(|s| s.half as i64).collect();
    let lo = vec![0i64; n];
    let mut acc = 0.0;
    for_each_index(&lo, &hi, |k| {
        let w: f64 = k
            .iter()
            .zip(&hats)
            .map(|(&ki, s)| if ki == 0 { 0.5 * s.at(0) } else { s.at(ki) })
            .product();
        if w == 0.0 {
            return;
        }
        let mut v = 0.0;
        for i in 0u32..(1 << n) {
            let s: i64 = (0..n).map(|d| if i & (1 << d) != 0 { k[d] } else { -k[d] }).sum();
            let sign = if i.count_ones() % 2 == 1 { 1.0 } else { -1.0 };
            v += sign * chi_tilde(s, g);
        }
        acc += w * v;
    });
    Ok(acc * spec.h().powi(n as i32))
}

/// `Σ_{F ∈ Π(n)} C(F)`, one partition per task.
pub fn sum_c(spec: &TestFunctionSpec) -> Result<f64> {
    let parts: Vec<SetPartition> = enumerate_partitions(spec.n)?.collect();
    let values: Vec<f64> = parts.par_iter().map(|f| integral_c(f, spec)).collect::<Result<_>>()?;
    Ok(values.iter().sum())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NumericReport {
    pub n: usize,
    pub supports: Vec<f64>,
    pub grid: usize,
    /// `Σ_F C(F)` at the requested grid.
    pub lhs: f64,
    /// `E(O)` at the requested grid.
    pub rhs: f64,
    pub gap: f64,
    /// Both sides again on the grid twice as fine.
    pub lhs_fine: f64,
    pub rhs_fine: f64,
    /// `SAFETY·(|Δlhs| + |Δrhs|) + TOL_FLOOR` from grid doubling.
    pub calibrated_tol: f64,
    pub within_calibrated: bool,
}

/// Evaluates both sides at the requested grid and at twice its resolution.
/// The change between the two bounds the discretization error of each side.
pub fn check(spec: &TestFunctionSpec) -> Result<NumericReport> {
    let fine = spec.refined();
    let (lhs, rhs) = (sum_c(spec)?, integral_e(spec)?);
    let (lhs_fine, rhs_fine) = (sum_c(&fine)?, integral_e(&fine)?);
    let gap = lhs - rhs;
    let calibrated_tol = SAFETY * ((lhs - lhs_fine).abs() + (rhs - rhs_fine).abs()) + TOL_FLOOR;
    Ok(NumericReport {
        n: spec.n,
        supports: spec.supports.clone(),
        grid: spec.grid,
        lhs,
        rhs,
        gap,
        lhs_fine,
        rhs_fine,
        calibrated_tol,
        within_calibrated: gap.abs() <= calibrated_tol,
    })
}
