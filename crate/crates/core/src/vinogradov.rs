//! Vinogradov mean-value counts, prime phase sums, and the power-mean
//! expansion identity.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::arith::SieveTable;
use crate::error::{param, Error, Result};
use crate::numeric::{e, frac_mul, ComplexSum};

/// Work limit for the enumerations in this module.
pub const VMV_BUDGET: u128 = 100_000_000;
pub const MAX_POWERS: usize = 8;
pub const MAX_DIAGONAL_T: u32 = 8;

/// Solution counts for `Σ_{i≤t} j_i^m = Σ_{i>t} j_i^m`, `1 ≤ m ≤ s`, over
/// `J ∈ [k]^{2t}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VmvCount {
    pub k: u64,
    pub s: u32,
    pub t: u32,
    pub total: u128,
    pub diagonal: u128,
}

impl VmvCount {
    /// `total / k^t`.
    pub fn ratio(&self) -> f64 {
        self.total as f64 / (self.k as f64).powi(self.t as i32)
    }
}

fn check_budget(k: u64, exp: u32) -> Result<u128> {
    let needed = (k as u128).checked_pow(exp).unwrap_or(u128::MAX);
    if needed > VMV_BUDGET {
        return Err(Error::Budget {
            needed,
            budget: VMV_BUDGET,
        });
    }
    Ok(needed)
}

fn factorial(n: u32) -> u128 {
    (1..=n as u128).product()
}

type PowerKey = [u128; MAX_POWERS];

/// Visit nondecreasing `t`-tuples from `[lo, k]`, passing the power sums
/// of the tuple and its number of distinct orderings.
fn visit_multisets(
    k: u64,
    s: usize,
    t: u32,
    first: u64,
    out: &mut HashMap<PowerKey, u128>,
) {
    fn rec(
        k: u64,
        s: usize,
        left: u32,
        min: u64,
        key: PowerKey,
        denom: u128,
        run: (u64, u32),
        t_fact: u128,
        out: &mut HashMap<PowerKey, u128>,
    ) {
        if left == 0 {
            *out.entry(key).or_insert(0) += t_fact / denom;
            return;
        }
        for j in min..=k {
            let mut next = key;
            let mut pw = 1u128;
            for slot in next.iter_mut().take(s) {
                pw *= j as u128;
                *slot += pw;
            }
            let (run_j, run_len) = run;
            let len = if run_j == j { run_len + 1 } else { 1 };
            rec(k, s, left - 1, j, next, denom * len as u128, (j, len), t_fact, out);
        }
    }
    let mut key = [0u128; MAX_POWERS];
    let mut pw = 1u128;
    for slot in key.iter_mut().take(s) {
        pw *= first as u128;
        *slot = pw;
    }
    rec(k, s, t - 1, first, key, 1, (first, 1), factorial(t), out);
}

/// Exact total and diagonal counts. Half-tuples are grouped by their vector
/// of power sums; the total is the sum of squared group sizes.
pub fn count_vmv(k: u64, s: u32, t: u32) -> Result<VmvCount> {
    if k == 0 {
        return Err(param("k", "must be positive"));
    }
    if s == 0 || s as usize > MAX_POWERS {
        return Err(param("s", format!("{s} not in 1..={MAX_POWERS}")));
    }
    if t == 0 || t > MAX_DIAGONAL_T {
        return Err(param("t", format!("{t} not in 1..={MAX_DIAGONAL_T}")));
    }
    check_budget(k, t)?;
    // Largest power sum t·k^s must fit.
    (k as u128)
        .checked_pow(s)
        .and_then(|x| x.checked_mul(t as u128))
        .ok_or_else(|| param("s", "power sums overflow 128 bits"))?;

    let partial: Vec<HashMap<PowerKey, u128>> = (1..=k)
        .into_par_iter()
        .map(|first| {
            let mut m = HashMap::new();
            visit_multisets(k, s as usize, t, first, &mut m);
            m
        })
        .collect();
    let mut merged: HashMap<PowerKey, u128> = HashMap::new();
    for m in partial {
        for (key, c) in m {
            *merged.entry(key).or_insert(0) += c;
        }
    }
    let total = merged.values().map(|&c| c * c).sum();
    Ok(VmvCount {
        k,
        s,
        t,
        total,
        diagonal: count_diagonal(k, t)?,
    })
}

fn partitions(n: u32, max: u32, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if n == 0 {
        out.push(current.clone());
        return;
    }
    for part in (1..=n.min(max)).rev() {
        current.push(part);
        partitions(n - part, part, current, out);
        current.pop();
    }
}

/// Number of `J ∈ [k]^{2t}` whose halves are equal as multisets:
/// `Σ_M (orderings of M)²` over multisets `M` of size `t`.
pub fn count_diagonal(k: u64, t: u32) -> Result<u128> {
    if t > MAX_DIAGONAL_T {
        return Err(param("t", format!("{t} exceeds {MAX_DIAGONAL_T}")));
    }
    let mut parts = Vec::new();
    partitions(t, t, &mut Vec::new(), &mut parts);
    let t_fact = factorial(t);
    let mut total = 0u128;
    for shape in parts {
        // shape = multiplicities of the distinct values, in decreasing order.
        let r = shape.len() as u64;
        if r > k {
            continue;
        }
        let falling: u128 = (0..r).map(|i| (k - i) as u128).product();
        let mut same_size = HashMap::new();
        for &m in &shape {
            *same_size.entry(m).or_insert(0u32) += 1;
        }
        let sym: u128 = same_size.values().map(|&c| factorial(c)).product();
        let orderings = t_fact / shape.iter().map(|&m| factorial(m)).product::<u128>();
        total += falling / sym * orderings * orderings;
    }
    Ok(total)
}

fn primes_for(p_max: u64, table: &SieveTable) -> Result<Vec<u64>> {
    if p_max < 3 {
        return Err(param("P", format!("{p_max} < 3")));
    }
    if p_max > table.limit() {
        return Err(Error::TooShort {
            len: table.limit(),
            needed: p_max,
        });
    }
    let primes = table.primes_in(p_max / 2, p_max);
    if primes.is_empty() {
        return Err(Error::Empty("no primes in (P/2, P]"));
    }
    Ok(primes)
}

fn mean_over<F>(primes: &[u64], f: F) -> Complex64
where
    F: Fn(u64) -> Complex64 + Sync,
{
    let parts: Vec<ComplexSum> = primes
        .par_chunks(1 << 14)
        .map(|c| {
            let mut s = ComplexSum::default();
            for &p in c {
                s.add(f(p));
            }
            s
        })
        .collect();
    let mut total = ComplexSum::default();
    for p in &parts {
        total.merge(p);
    }
    total.value() / primes.len() as f64
}

#[inline]
fn phase(alpha: f64, beta: f64, p: u64, d1: i64, d2: i64) -> Complex64 {
    let p = p as i128;
    e(frac_mul(alpha, p * p * d2 as i128) + frac_mul(beta, p * d1 as i128))
}

/// `𝔼_{P/2<p≤P} e(α p² d₂ + β p d₁)` with exact reduction of each phase.
pub fn prime_phase_sum(
    alpha: f64,
    beta: f64,
    d1: i64,
    d2: i64,
    p_max: u64,
    table: &SieveTable,
) -> Result<Complex64> {
    let primes = primes_for(p_max, table)?;
    Ok(mean_over(&primes, |p| phase(alpha, beta, p, d1, d2)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionCheck {
    pub direct: f64,
    pub expanded: f64,
}

impl ExpansionCheck {
    pub fn difference(&self) -> f64 {
        (self.direct - self.expanded).abs()
    }
}

/// Evaluates `𝔼_p |𝔼_{h≤k} e(α(ph)² + βph) ε_h|^{2t}` directly and through
/// the expansion `𝔼_{J∈[k]^{2t}} ε_{j₁}⋯ε_{j_t} ε̄_{j_{t+1}}⋯ε̄_{j_{2t}} ·
/// 𝔼_p e(α p² d₂(J) + β p d₁(J))`, where `d_m(J) = Σ_{i≤t} j_i^m − Σ_{i>t} j_i^m`.
pub fn power_mean_expansion_check(
    eps: &[Complex64],
    alpha: f64,
    beta: f64,
    p_max: u64,
    t: u32,
    table: &SieveTable,
) -> Result<ExpansionCheck> {
    let k = eps.len() as u64;
    if k == 0 {
        return Err(param("eps", "empty word"));
    }
    if t == 0 {
        return Err(param("t", "must be positive"));
    }
    check_budget(k, 2 * t)?;
    let primes = primes_for(p_max, table)?;

    let direct = mean_over(&primes, |p| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, &x) in eps.iter().enumerate() {
            acc += phase(alpha, beta, p, (i + 1) as i64, ((i + 1) * (i + 1)) as i64) * x;
        }
        let m = (acc / k as f64).norm_sqr();
        Complex64::new(m.powi(t as i32), 0.0)
    })
    .re;

    // Half-tuple weights grouped by (Σj, Σj²).
    let mut half: HashMap<(i64, i64), Complex64> = HashMap::new();
    let mut idx = vec![0usize; t as usize];
    loop {
        let (mut s1, mut s2) = (0i64, 0i64);
        let mut w = Complex64::new(1.0, 0.0);
        for &i in &idx {
            let j = i as i64 + 1;
            s1 += j;
            s2 += j * j;
            w *= eps[i];
        }
        *half.entry((s1, s2)).or_insert(Complex64::new(0.0, 0.0)) += w;
        let mut pos = 0;
        while pos < idx.len() {
            idx[pos] += 1;
            if idx[pos] < k as usize {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
        if pos == idx.len() {
            break;
        }
    }
    let mut halves: Vec<((i64, i64), Complex64)> = half.into_iter().collect();
    halves.sort_by_key(|&(key, _)| key);
    let mut coeff: HashMap<(i64, i64), Complex64> = HashMap::new();
    for &((a1, a2), wa) in &halves {
        for &((b1, b2), wb) in &halves {
            *coeff.entry((a1 - b1, a2 - b2)).or_insert(Complex64::new(0.0, 0.0)) += wa * wb.conj();
        }
    }
    let mut keys: Vec<(i64, i64)> = coeff.keys().copied().collect();
    keys.sort_unstable();
    let mut expanded = ComplexSum::default();
    for key in keys {
        let (d1, d2) = key;
        let ps = mean_over(&primes, |p| phase(alpha, beta, p, d1, d2));
        expanded.add(coeff[&key] * ps);
    }
    let expanded = expanded.value() / (k as f64).powi(2 * t as i32);
    Ok(ExpansionCheck {
        direct,
        expanded: expanded.re,
    })
}
