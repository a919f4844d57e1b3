//! Logarithmic averages `𝔼^log_{n≤N} φ(n) = (Σ φ(n)/n) / (Σ 1/n)` and
//! finite-scale proxies for upper logarithmic density.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{param, Error, Result};
use crate::models::SymbolicSequence;
use crate::numeric::{ComplexSum, CompensatedSum};

/// Fixed chunk length for parallel reductions; partial sums are always
/// combined in chunk order, so results do not depend on the thread count.
pub const CHUNK: u64 = 1 << 18;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogAverage {
    pub n: u64,
    pub value: Complex64,
    /// `Σ_{n≤N} 1/n`.
    pub weight_total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub scales: Vec<u64>,
    pub per_scale: Vec<f64>,
    pub upper: f64,
}

/// Log-weighted sum of `f(n)` over `n ∈ [lo, hi]`, chunked deterministically.
/// Returns `(Σ f(n)/n, Σ 1/n)`.
pub fn log_weighted_sum<F>(lo: u64, hi: u64, f: F) -> (Complex64, f64)
where
    F: Fn(u64) -> Complex64 + Sync,
{
    if lo > hi {
        return (Complex64::new(0.0, 0.0), 0.0);
    }
    let chunks: Vec<(u64, u64)> = chunk_ranges(lo, hi);
    let partials: Vec<(ComplexSum, CompensatedSum)> = chunks
        .par_iter()
        .map(|&(a, b)| {
            let mut s = ComplexSum::default();
            let mut w = CompensatedSum::new();
            for n in a..=b {
                let inv = 1.0 / n as f64;
                s.add(f(n) * inv);
                w.add(inv);
            }
            (s, w)
        })
        .collect();
    let mut total = ComplexSum::default();
    let mut weight = CompensatedSum::new();
    for (s, w) in &partials {
        total.merge(s);
        weight.merge(w);
    }
    (total.value(), weight.value())
}

/// Real-valued variant of [`log_weighted_sum`].
pub fn log_weighted_sum_real<F>(lo: u64, hi: u64, f: F) -> (f64, f64)
where
    F: Fn(u64) -> f64 + Sync,
{
    if lo > hi {
        return (0.0, 0.0);
    }
    let partials: Vec<(CompensatedSum, CompensatedSum)> = chunk_ranges(lo, hi)
        .par_iter()
        .map(|&(a, b)| {
            let mut s = CompensatedSum::new();
            let mut w = CompensatedSum::new();
            for n in a..=b {
                let inv = 1.0 / n as f64;
                s.add(f(n) * inv);
                w.add(inv);
            }
            (s, w)
        })
        .collect();
    let mut total = CompensatedSum::new();
    let mut weight = CompensatedSum::new();
    for (s, w) in &partials {
        total.merge(s);
        weight.merge(w);
    }
    (total.value(), weight.value())
}

pub(crate) fn chunk_ranges(lo: u64, hi: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let mut a = lo;
    while a <= hi {
        let b = (a + CHUNK - 1).min(hi);
        out.push((a, b));
        a = b + 1;
    }
    out
}

/// Logarithmic average of `seq` over `[1, n]`.
pub fn log_average(seq: &SymbolicSequence, n: u64) -> Result<LogAverage> {
    if n == 0 {
        return Err(param("n", "log average over an empty range"));
    }
    seq.require_len(n)?;
    let (sum, weight) = log_weighted_sum(1, n, |m| seq.value(m));
    Ok(LogAverage {
        n,
        value: sum / weight,
        weight_total: weight,
    })
}

/// Geometric scales `n0, 2·n0, 4·n0, …` up to `n_max`, always ending at `n_max`.
pub fn geometric_scales(n0: u64, n_max: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut s = n0.max(1);
    while s < n_max {
        out.push(s);
        s = s.saturating_mul(2);
    }
    out.push(n_max);
    out
}

/// Default scale grid for a run up to `n`: five doublings ending at `n`.
pub fn default_scales(n: u64) -> Vec<u64> {
    geometric_scales((n / 16).max(1), n)
}

/// Per-scale log-averages of a 0/1 indicator and their maximum.
pub fn upper_log_density(indicator: &SymbolicSequence, scales: &[u64]) -> Result<DensityEstimate> {
    if scales.is_empty() {
        return Err(Error::Empty("empty scale list"));
    }
    if scales.windows(2).any(|w| w[0] >= w[1]) || scales[0] == 0 {
        return Err(param("scales", "scales must be positive and increasing"));
    }
    let top = *scales.last().unwrap();
    indicator.require_len(top)?;
    let mut per_scale = Vec::with_capacity(scales.len());
    let mut sum = ComplexSum::default();
    let mut weight = CompensatedSum::new();
    let mut prev = 0u64;
    for &s in scales {
        let (ds, dw) = log_weighted_sum(prev + 1, s, |m| {
            let v = indicator.value(m);
            if v.re != 0.0 && v.re != 1.0 || v.im != 0.0 {
                Complex64::new(f64::NAN, 0.0)
            } else {
                v
            }
        });
        sum.add(ds);
        weight.add(dw);
        let value = sum.value().re / weight.value();
        if value.is_nan() {
            return Err(param("indicator", "values must be 0 or 1"));
        }
        per_scale.push(value);
        prev = s;
    }
    let upper = per_scale.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(DensityEstimate {
        scales: scales.to_vec(),
        per_scale,
        upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_periodic, Alphabet};

    fn indicator<F: Fn(u64) -> bool + Send + Sync + 'static>(len: u64, f: F) -> SymbolicSequence {
        SymbolicSequence::from_fn(len, Alphabet::binary_indicator(), move |n| {
            Complex64::new(if f(n) { 1.0 } else { 0.0 }, 0.0)
        })
    }

    #[test]
    fn constant_average_is_one() {
        let one = make_periodic(&[Complex64::new(1.0, 0.0)], 1000).unwrap();
        let avg = log_average(&one, 1000).unwrap();
        assert!((avg.value.re - 1.0).abs() < 1e-15);
        assert!(log_average(&one, 0).is_err());
        assert!(log_average(&one, 1001).is_err());
    }

    #[test]
    fn alternating_average_is_small() {
        let n = 1_000_000;
        let alt = SymbolicSequence::from_fn(n, Alphabet::signs(), |m| {
            Complex64::new(if m % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
        });
        let avg = log_average(&alt, n).unwrap();
        // Telescoping: |Σ (−1)^n / n| ≤ 1, so |avg| ≤ 1 / Σ 1/n.
        let bound = 1.0 / avg.weight_total;
        assert!(avg.value.norm() <= bound);
        assert!(bound < 2.0 / (n as f64).ln());
        // Σ_{n≤N} (−1)^n/n → −log 2
        assert!((avg.value.re * avg.weight_total + 2f64.ln()).abs() < 1e-5);
    }

    #[test]
    fn density_of_residue_class() {
        let n = 1_000_000;
        let ind = indicator(n, |m| m % 3 == 0);
        let d = upper_log_density(&ind, &[10_000, 100_000, 1_000_000]).unwrap();
        // Σ_{3|m≤N} 1/m = H(N/3)/3, so the exact value sits log(3)/(3·H(N))
        // below 1/3 at the largest scale.
        let h = crate::numeric::harmonic_range(1, n);
        let oracle = crate::numeric::harmonic_range(1, n / 3) / (3.0 * h);
        assert!((d.per_scale[2] - oracle).abs() < 1e-12);
        assert!((d.upper - 1.0 / 3.0).abs() < 3f64.ln() / (3.0 * h) + 1e-9);
        assert!((d.upper - 1.0 / 3.0).abs() < 0.03);
        assert_eq!(d.upper, d.per_scale.iter().cloned().fold(0.0, f64::max));
    }

    #[test]
    fn density_of_initial_segment() {
        let n = 1_000_000;
        let ind = indicator(n, |m| m <= 1000);
        let d = upper_log_density(&ind, &[n]).unwrap();
        // H(√N)/H(N) with harmonic sums; close to 1/2.
        let oracle = crate::numeric::harmonic_range(1, 1000) / crate::numeric::harmonic_range(1, n);
        assert!((d.upper - oracle).abs() < 1e-12);
        assert!((d.upper - 0.5).abs() < 0.05);
    }

    #[test]
    fn density_errors() {
        let ind = indicator(100, |_| true);
        assert!(upper_log_density(&ind, &[]).is_err());
        assert!(upper_log_density(&ind, &[50, 10]).is_err());
        let full = upper_log_density(&ind, &[10, 100]).unwrap();
        assert!((full.upper - 1.0).abs() < 1e-15);
        let bad = SymbolicSequence::from_fn(10, Alphabet::signs(), |_| Complex64::new(-1.0, 0.0));
        assert!(upper_log_density(&bad, &[10]).is_err());
    }

    #[test]
    fn geometric_grid() {
        assert_eq!(geometric_scales(100, 1000), vec![100, 200, 400, 800, 1000]);
        assert_eq!(default_scales(1600), vec![100, 200, 400, 800, 1600]);
    }
}
