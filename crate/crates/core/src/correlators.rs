//! Correlation statistics: log correlations, multipoint Chowla products,
//! local Fourier and local periodic suprema, and the dilation defect.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::arith::SieveTable;
use crate::error::{param, Error, Result};
use crate::logstats::{chunk_ranges, log_weighted_sum, log_weighted_sum_real};
use crate::models::{FrequencySet, SymbolicSequence};
use crate::numeric::{e, frac_mul, harmonic_range, CompensatedSum};

/// Largest window length accepted by the windowed statistics.
pub const MAX_WINDOW: u64 = 1 << 14;
/// Candidate frequencies per unit length, as a multiple of `H`.
pub const GRID_PER_H: f64 = 16.0;
/// Sliding sums are recomputed from scratch this often to bound drift.
const REANCHOR: u64 = 4096;

/// `𝔼^log_{n≤N} a(n)·b(n)`.
pub fn log_correlation(a: &SymbolicSequence, b: &SymbolicSequence, n: u64) -> Result<Complex64> {
    if n == 0 {
        return Err(param("n", "empty range"));
    }
    a.require_len(n)?;
    b.require_len(n)?;
    let (s, w) = log_weighted_sum(1, n, |m| a.value(m) * b.value(m));
    Ok(s / w)
}

/// `𝔼^log_{n≤N} λ(n + h₁)⋯λ(n + h_t)` for distinct shifts.
pub fn chowla_correlation(shifts: &[u64], n: u64, table: &SieveTable) -> Result<f64> {
    if shifts.is_empty() || shifts.len() > 6 {
        return Err(param("shifts", format!("{} shifts, need 1..=6", shifts.len())));
    }
    let mut sorted = shifts.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(param("shifts", "shifts must be distinct"));
    }
    let max_shift = *sorted.last().unwrap();
    if max_shift > 64 {
        return Err(param("shifts", format!("shift {max_shift} exceeds 64")));
    }
    if n == 0 {
        return Err(param("n", "empty range"));
    }
    if table.limit() < n + max_shift {
        return Err(Error::TooShort {
            len: table.limit(),
            needed: n + max_shift,
        });
    }
    let (s, w) = log_weighted_sum_real(1, n, |m| {
        let odd = sorted
            .iter()
            .fold(false, |acc, &h| acc ^ table.liouville_bit(m + h));
        if odd {
            -1.0
        } else {
            1.0
        }
    });
    Ok(s / w)
}

/// A windowed statistic with its guaranteed additive error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowStat {
    pub value: f64,
    pub error_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub h: u64,
    pub value: f64,
    pub error_bound: f64,
}

/// A statistic evaluated at several window lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationCurve {
    pub n: u64,
    pub entries: Vec<CurvePoint>,
    pub set_descriptor: String,
    pub sequence: String,
}

fn check_window(seq: &SymbolicSequence, h: u64, n: u64) -> Result<()> {
    if h == 0 || h > MAX_WINDOW {
        return Err(param("h", format!("{h} not in 1..={MAX_WINDOW}")));
    }
    if n == 0 {
        return Err(param("n", "empty range"));
    }
    seq.require_len(n + h)
}

struct Candidates {
    freqs: Vec<f64>,
    /// Closed refinement window around each candidate; `None` for finite sets.
    windows: Option<Vec<(f64, f64)>>,
    error_bound: f64,
}

fn candidates(set: &FrequencySet, h: u64) -> Result<Candidates> {
    if set.is_empty() {
        return Err(Error::Empty("empty frequency set"));
    }
    match set {
        FrequencySet::Grid(r) => Ok(Candidates {
            freqs: (0..*r).map(|j| j as f64 / *r as f64).collect(),
            windows: None,
            error_bound: 0.0,
        }),
        FrequencySet::List(l) => Ok(Candidates {
            freqs: l.clone(),
            windows: None,
            error_bound: 0.0,
        }),
        FrequencySet::Cover(intervals) => {
            let step = 1.0 / (GRID_PER_H * h as f64);
            let mut freqs = Vec::new();
            let mut windows = Vec::new();
            let mut max_spacing: f64 = 0.0;
            for &(lo, hi) in intervals {
                let len = hi - lo;
                let points = ((len / step).ceil() as usize).max(1) + 1;
                let spacing = len / (points - 1) as f64;
                max_spacing = max_spacing.max(spacing);
                for i in 0..points {
                    let x = if i + 1 == points { hi } else { lo + i as f64 * spacing };
                    freqs.push(x);
                    windows.push(((x - spacing).max(lo), (x + spacing).min(hi)));
                }
            }
            Ok(Candidates {
                freqs,
                windows: Some(windows),
                error_bound: grid_error_bound(h, max_spacing),
            })
        }
    }
}

/// Worst-case loss of sampling `α ↦ |H⁻¹ Σ_{h≤H} a_h e(hα)|` on a grid of
/// the given spacing: at the maximizer the derivative vanishes and the
/// second derivative is at most `(2π)² (H+1)(2H+1)/6`, while the nearest grid
/// point is within half a spacing.
pub fn grid_error_bound(h: u64, spacing: f64) -> f64 {
    let h = h as f64;
    let curvature = (2.0 * std::f64::consts::PI).powi(2) * (h + 1.0) * (2.0 * h + 1.0) / 6.0;
    0.5 * curvature * (spacing / 2.0).powi(2)
}

#[inline]
fn window_sum_abs(vals: &[Complex64], alpha: f64) -> f64 {
    let z = e(alpha);
    let mut w = z;
    let mut acc = Complex64::new(0.0, 0.0);
    for &v in vals {
        acc += v * w;
        w *= z;
    }
    acc.norm()
}

/// `𝔼^log_{n≤N} sup_{α∈C} |𝔼_{h≤H} a(n+h) e(hα)|`.
///
/// Finite sets are maximized exactly. Interval covers are sampled at spacing
/// at most `1/(16H)` including interval endpoints, and the best sample is
/// refined by ternary search to width `1/(64H²)`; the returned error bound is
/// [`grid_error_bound`] for the coarsest spacing used.
pub fn local_fourier_stat(
    seq: &SymbolicSequence,
    h: u64,
    n: u64,
    set: &FrequencySet,
) -> Result<WindowStat> {
    check_window(seq, h, n)?;
    let cand = candidates(set, h)?;
    let hf = h as f64;
    let m = cand.freqs.len();
    let e1: Vec<Complex64> = cand.freqs.iter().map(|&a| e(frac_mul(a, 1))).collect();
    let einv: Vec<Complex64> = e1.iter().map(|z| z.conj()).collect();
    let eh1: Vec<Complex64> = cand
        .freqs
        .iter()
        .map(|&a| e(frac_mul(a, h as i128 + 1)))
        .collect();
    let refine_width = 1.0 / (64.0 * hf * hf);

    let partials: Vec<CompensatedSum> = chunk_ranges(1, n)
        .par_iter()
        .map(|&(lo, hi)| {
            // vals[i] = a(lo + 1 + i)
            let mut vals = vec![Complex64::new(0.0, 0.0); (hi - lo + h) as usize];
            seq.fill_values(lo + 1, &mut vals);
            let mut sums = vec![Complex64::new(0.0, 0.0); m];
            let anchor = |sums: &mut [Complex64], offset: usize| {
                let window = &vals[offset..offset + h as usize];
                for (j, s) in sums.iter_mut().enumerate() {
                    let z = e1[j];
                    let mut w = z;
                    let mut acc = Complex64::new(0.0, 0.0);
                    for &v in window {
                        acc += v * w;
                        w *= z;
                    }
                    *s = acc;
                }
            };
            let mut acc = CompensatedSum::new();
            for nn in lo..=hi {
                let offset = (nn - lo) as usize;
                if (nn - lo) % REANCHOR == 0 {
                    anchor(&mut sums, offset);
                }
                let (best_j, best) = sums
                    .iter()
                    .enumerate()
                    .map(|(j, s)| (j, s.norm_sqr()))
                    .fold((0, -1.0), |a, b| if b.1 > a.1 { b } else { a });
                let mut value = best.sqrt() / hf;
                if let Some(windows) = &cand.windows {
                    let window = &vals[offset..offset + h as usize];
                    let (mut a, mut b) = windows[best_j];
                    while b - a > refine_width {
                        let m1 = a + (b - a) / 3.0;
                        let m2 = b - (b - a) / 3.0;
                        if window_sum_abs(window, m1) < window_sum_abs(window, m2) {
                            a = m1;
                        } else {
                            b = m2;
                        }
                    }
                    value = value.max(window_sum_abs(window, 0.5 * (a + b)) / hf);
                }
                debug_assert!(value <= 1.0 + 1e-9);
                acc.add(value.min(1.0) / nn as f64);
                if nn == hi {
                    break;
                }
                // Slide to nn + 1.
                let out = vals[offset];
                let inc = vals[offset + h as usize];
                for j in 0..m {
                    sums[j] = einv[j] * (sums[j] - out * e1[j] + inc * eh1[j]);
                }
            }
            acc
        })
        .collect();
    let mut total = CompensatedSum::new();
    for p in &partials {
        total.merge(p);
    }
    Ok(WindowStat {
        value: total.value() / harmonic_range(1, n),
        error_bound: cand.error_bound,
    })
}

/// `𝔼^log_{n≤N} max_{q≤d} H⁻¹ Σ_{r mod q} |Σ_{h≤H, h≡r} a(n+h)|`, the exact
/// supremum of `|𝔼_{h≤H} a(n+h) θ(h)|` over 1-bounded θ of period at most `d`.
pub fn local_periodic_stat(seq: &SymbolicSequence, h: u64, n: u64, d: u64) -> Result<f64> {
    if d == 0 || d > 30 {
        return Err(param("d", format!("{d} not in 1..=30")));
    }
    check_window(seq, h, n)?;
    let hf = h as f64;
    let qs = d as usize;
    let partials: Vec<CompensatedSum> = chunk_ranges(1, n)
        .par_iter()
        .map(|&(lo, hi)| {
            let mut vals = vec![Complex64::new(0.0, 0.0); (hi - lo + h) as usize];
            seq.fill_values(lo + 1, &mut vals);
            // classes[q-1][c]: sum of a(m) over m in (nn, nn+H] with m ≡ c (mod q)
            let mut classes: Vec<Vec<Complex64>> =
                (1..=qs).map(|q| vec![Complex64::new(0.0, 0.0); q]).collect();
            let mut abs_sums = vec![0.0f64; qs];
            let anchor = |classes: &mut Vec<Vec<Complex64>>, abs_sums: &mut Vec<f64>, nn: u64| {
                for (qi, cls) in classes.iter_mut().enumerate() {
                    let q = qi as u64 + 1;
                    cls.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
                    for m in nn + 1..=nn + h {
                        cls[(m % q) as usize] += vals[(m - lo - 1) as usize];
                    }
                    abs_sums[qi] = cls.iter().map(|c| c.norm()).sum();
                }
            };
            let mut acc = CompensatedSum::new();
            for nn in lo..=hi {
                if (nn - lo) % REANCHOR == 0 {
                    anchor(&mut classes, &mut abs_sums, nn);
                }
                let best = abs_sums.iter().cloned().fold(0.0, f64::max) / hf;
                acc.add(best.min(1.0) / nn as f64);
                if nn == hi {
                    break;
                }
                let out_m = nn + 1;
                let in_m = nn + h + 1;
                let out_v = vals[(out_m - lo - 1) as usize];
                let in_v = vals[(in_m - lo - 1) as usize];
                for (qi, cls) in classes.iter_mut().enumerate() {
                    let q = qi as u64 + 1;
                    let co = (out_m % q) as usize;
                    let ci = (in_m % q) as usize;
                    if co == ci {
                        let before = cls[co].norm();
                        cls[co] += in_v - out_v;
                        abs_sums[qi] += cls[co].norm() - before;
                    } else {
                        let b1 = cls[co].norm();
                        let b2 = cls[ci].norm();
                        cls[co] -= out_v;
                        cls[ci] += in_v;
                        abs_sums[qi] += cls[co].norm() - b1 + cls[ci].norm() - b2;
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = CompensatedSum::new();
    for p in &partials {
        total.merge(p);
    }
    Ok(total.value() / harmonic_range(1, n))
}

/// [`local_fourier_stat`] at each window length.
pub fn fourier_curve(
    seq: &SymbolicSequence,
    hs: &[u64],
    n: u64,
    set: &FrequencySet,
) -> Result<CorrelationCurve> {
    let entries = hs
        .iter()
        .map(|&h| {
            local_fourier_stat(seq, h, n, set).map(|s| CurvePoint {
                h,
                value: s.value,
                error_bound: s.error_bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelationCurve {
        n,
        entries,
        set_descriptor: set.describe(),
        sequence: seq.label().to_string(),
    })
}

/// [`local_periodic_stat`] at each window length.
pub fn periodic_curve(seq: &SymbolicSequence, hs: &[u64], n: u64, d: u64) -> Result<CorrelationCurve> {
    let entries = hs
        .iter()
        .map(|&h| {
            local_periodic_stat(seq, h, n, d).map(|value| CurvePoint {
                h,
                value,
                error_bound: 0.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelationCurve {
        n,
        entries,
        set_descriptor: format!("periods<={d}"),
        sequence: seq.label().to_string(),
    })
}

/// `|D₁ − D₂|` with `D₁ = 𝔼^log 1{λ(n+h) = ε_h ∀h}` and
/// `D₂ = 𝔼^log p·1{p|n}·1{λ(n+ph) = −ε_h ∀h}`, both over `n ≤ N`.
pub fn dilation_defect(table: &SieveTable, pattern: &[i8], p: u64, n: u64) -> Result<f64> {
    if pattern.iter().any(|&x| x != 1 && x != -1) {
        return Err(param("pattern", "entries must be ±1"));
    }
    if pattern.len() > 8 {
        return Err(param("pattern", "at most 8 entries"));
    }
    if !(2..=13).contains(&p) || !table.is_prime(p) {
        return Err(param("p", format!("{p} is not a prime ≤ 13")));
    }
    if n == 0 {
        return Err(param("n", "empty range"));
    }
    if pattern.is_empty() {
        return Ok(0.0);
    }
    let k = pattern.len() as u64;
    if table.limit() < n + p * k {
        return Err(Error::TooShort {
            len: table.limit(),
            needed: n + p * k,
        });
    }
    // Bit set ⇔ λ = −1; target bits for D₁ and the flipped ones for D₂.
    let want: Vec<bool> = pattern.iter().map(|&x| x == -1).collect();
    let (d1, w) = log_weighted_sum_real(1, n, |m| {
        let hit = want
            .iter()
            .enumerate()
            .all(|(i, &b)| table.liouville_bit(m + i as u64 + 1) == b);
        hit as u8 as f64
    });
    // With n = p·m the weight p/n is 1/m.
    let (d2, _) = log_weighted_sum_real(1, n / p, |m| {
        let base = p * m;
        let hit = want
            .iter()
            .enumerate()
            .all(|(i, &b)| table.liouville_bit(base + p * (i as u64 + 1)) != b);
        hit as u8 as f64
    });
    Ok(((d1 - d2) / w).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::build_sieve;
    use crate::models::*;
    use std::sync::Arc;

    fn brute_fourier(seq: &SymbolicSequence, h: u64, n: u64, freqs: &[f64]) -> f64 {
        let mut s = 0.0;
        for m in 1..=n {
            let vals: Vec<Complex64> = (1..=h).map(|j| seq.value(m + j)).collect();
            let best = freqs
                .iter()
                .map(|&a| window_sum_abs(&vals, a) / h as f64)
                .fold(0.0, f64::max);
            s += best / m as f64;
        }
        s / harmonic_range(1, n)
    }

    #[test]
    fn correlation_basics() {
        let t = Arc::new(build_sieve(200_000).unwrap());
        let lam = make_liouville(t.clone());
        let one = make_periodic(&[Complex64::new(1.0, 0.0)], 200_000).unwrap();
        assert!((log_correlation(&one, &one, 1000).unwrap() - 1.0).norm() < 1e-14);
        assert!((log_correlation(&lam, &lam, 100_000).unwrap() - 1.0).norm() < 1e-14);
        let tm = make_thue_morse(200_000);
        let direct: f64 = (1..=200_000u64).map(|m| lam.value(m).re * tm.value(m).re / m as f64).sum();
        let c = log_correlation(&lam, &tm, 200_000).unwrap();
        assert!((c.re - direct / harmonic_range(1, 200_000)).abs() < 1e-12);
    }

    #[test]
    fn chowla_matches_direct_sum() {
        let t = build_sieve(100_100).unwrap();
        let mean = chowla_correlation(&[0], 100_000, &t).unwrap();
        let direct: f64 = (1..=100_000u64).map(|m| t.liouville(m) as f64 / m as f64).sum::<f64>()
            / harmonic_range(1, 100_000);
        assert!((mean - direct).abs() < 1e-12);
        let two = chowla_correlation(&[1, 0], 100_000, &t).unwrap();
        let direct: f64 = (1..=100_000u64)
            .map(|m| (t.liouville(m) * t.liouville(m + 1)) as f64 / m as f64)
            .sum::<f64>()
            / harmonic_range(1, 100_000);
        assert!((two - direct).abs() < 1e-12);
        assert!(chowla_correlation(&[0, 0], 1000, &t).is_err());
        assert!(chowla_correlation(&[0, 65], 1000, &t).is_err());
        assert!(chowla_correlation(&[0, 1, 2, 3, 4, 5, 6], 1000, &t).is_err());
        assert!(chowla_correlation(&[0, 1], 100_100, &t).is_err());
    }

    #[test]
    fn fourier_perfect_alignment() {
        let beta = 0.3;
        let seq = make_quadratic_phase(0.0, beta, 5000);
        // a(n+h) e(h(1−β)) has constant phase.
        let set = FrequencySet::List(vec![0.1, 1.0 - beta, 0.9]);
        let s = local_fourier_stat(&seq, 16, 4000, &set).unwrap();
        assert!((s.value - 1.0).abs() < 1e-9);
        let cover = FrequencySet::cover(vec![(0.65, 0.75)]).unwrap();
        let s = local_fourier_stat(&seq, 16, 4000, &cover).unwrap();
        assert!((s.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fourier_sliding_matches_brute_force() {
        let t = Arc::new(build_sieve(10_000).unwrap());
        let lam = make_liouville(t);
        let freqs: Vec<f64> = (0..37).map(|j| j as f64 / 37.0).collect();
        for h in [1u64, 5, 16] {
            let fast = local_fourier_stat(&lam, h, 5000, &FrequencySet::Grid(37)).unwrap();
            let slow = brute_fourier(&lam, h, 5000, &freqs);
            assert!((fast.value - slow).abs() < 1e-10, "h={h}");
            assert_eq!(fast.error_bound, 0.0);
        }
    }

    #[test]
    fn window_stats_read_only_up_to_n_plus_h() {
        let (h, n) = (8u64, 1000u64);
        let seq = make_random_signs(n + h, 11);
        let freqs: Vec<f64> = (0..9).map(|j| j as f64 / 9.0).collect();
        let fast = local_fourier_stat(&seq, h, n, &FrequencySet::Grid(9)).unwrap();
        assert!((fast.value - brute_fourier(&seq, h, n, &freqs)).abs() < 1e-10);
        assert!(local_periodic_stat(&seq, h, n, 4).is_ok());
        assert!(local_periodic_stat(&seq, h + 1, n, 4).is_err());
    }

    #[test]
    fn fourier_cover_within_error_bound_of_fine_grid() {
        let t = Arc::new(build_sieve(10_000).unwrap());
        let lam = make_liouville(t);
        let h = 12;
        let cover = local_fourier_stat(&lam, h, 3000, &FrequencySet::full_circle()).unwrap();
        let fine: Vec<f64> = (0..4096).map(|j| j as f64 / 4096.0).collect();
        let oracle = brute_fourier(&lam, h, 3000, &fine);
        assert!(cover.error_bound <= 0.01);
        // The fine grid is itself within its own bound of the true sup.
        let fine_err = grid_error_bound(h, 1.0 / 4096.0);
        assert!(cover.value >= oracle - fine_err - 1e-12);
        assert!(cover.value <= oracle + fine_err + cover.error_bound);
    }

    #[test]
    fn fourier_grid_doubling_changes_little() {
        let t = Arc::new(build_sieve(50_000).unwrap());
        let lam = make_liouville(t);
        for h in [8u64, 64, 256] {
            let a = local_fourier_stat(&lam, h, 2_000, &FrequencySet::full_circle()).unwrap();
            let fine = FrequencySet::Grid((32 * h) as usize);
            let b = local_fourier_stat(&lam, h, 2_000, &fine).unwrap();
            assert!((a.value - b.value).abs() <= 0.01, "h={h}: {} vs {}", a.value, b.value);
            assert!(a.value >= b.value - a.error_bound);
        }
    }

    #[test]
    fn fourier_monotone_in_set() {
        let t = Arc::new(build_sieve(20_000).unwrap());
        let lam = make_liouville(t);
        let small = CantorSpec::MiddleThirds.stage(3).unwrap();
        let big = CantorSpec::MiddleThirds.stage(2).unwrap();
        let a = local_fourier_stat(&lam, 16, 10_000, &small).unwrap();
        let b = local_fourier_stat(&lam, 16, 10_000, &big).unwrap();
        assert!(a.value <= b.value + b.error_bound);
    }

    #[test]
    fn fourier_decreases_for_liouville() {
        let t = Arc::new(build_sieve(300_000).unwrap());
        let lam = make_liouville(t);
        let c = fourier_curve(&lam, &[4, 16, 64], 200_000, &FrequencySet::full_circle()).unwrap();
        let v: Vec<f64> = c.entries.iter().map(|p| p.value).collect();
        assert!(v[0] > v[1] && v[1] > v[2], "{v:?}");
        assert!(local_fourier_stat(&lam, 0, 10, &FrequencySet::full_circle()).is_err());
        assert!(local_fourier_stat(&lam, 4, 10, &FrequencySet::List(vec![])).is_err());
    }

    #[test]
    fn sawin_long_blocks_reach_square_wave_mass() {
        // With windows inside one block the best frequency picks up the
        // fundamental of a square wave, of amplitude 2/π.
        let rule = BlockRule::Custom(Arc::new(|_| 512));
        let seq = make_sawin_model(1, &rule, 3, 1 << 18).unwrap();
        let s = local_fourier_stat(&seq, 32, 250_000, &FrequencySet::full_circle()).unwrap();
        assert!(s.value >= 0.55, "{s:?}");
    }

    #[test]
    fn periodic_stat_cases() {
        let pattern: Vec<Complex64> = [1.0, -1.0, -1.0, 1.0, 1.0]
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect();
        let p = make_periodic(&pattern, 20_000).unwrap();
        let v = local_periodic_stat(&p, 32, 10_000, 6).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert!(local_periodic_stat(&p, 32, 100, 0).is_err());

        let noise = make_random_signs(300_000, 11);
        let v = local_periodic_stat(&noise, 128, 200_000, 6).unwrap();
        assert!(v <= 0.25, "{v}");

        // d = 1 is the log-average of |window mean|.
        let t = Arc::new(build_sieve(20_000).unwrap());
        let lam = make_liouville(t);
        let v = local_periodic_stat(&lam, 10, 10_000, 1).unwrap();
        let direct: f64 = (1..=10_000u64)
            .map(|m| {
                let s: f64 = (1..=10).map(|h| lam.value(m + h).re).sum();
                (s / 10.0).abs() / m as f64
            })
            .sum::<f64>()
            / harmonic_range(1, 10_000);
        assert!((v - direct).abs() < 1e-12);
    }

    #[test]
    fn periodic_stat_matches_brute_force() {
        let t = Arc::new(build_sieve(20_000).unwrap());
        let lam = make_liouville(t);
        let (h, n, d) = (20u64, 9_000u64, 7u64);
        let fast = local_periodic_stat(&lam, h, n, d).unwrap();
        let mut s = 0.0;
        for m in 1..=n {
            let mut best: f64 = 0.0;
            for q in 1..=d {
                let mut tot = 0.0;
                for r in 0..q {
                    let c: f64 = (1..=h).filter(|j| j % q == r).map(|j| lam.value(m + j).re).sum();
                    tot += c.abs();
                }
                best = best.max(tot / h as f64);
            }
            s += best / m as f64;
        }
        let slow = s / harmonic_range(1, n);
        assert!((fast - slow).abs() < 1e-12);
    }

    #[test]
    fn periodic_decreases_for_liouville() {
        let t = Arc::new(build_sieve(400_000).unwrap());
        let lam = make_liouville(t);
        let c = periodic_curve(&lam, &[8, 32, 128], 300_000, 6).unwrap();
        let v: Vec<f64> = c.entries.iter().map(|p| p.value).collect();
        assert!(v[0] > v[1] && v[1] > v[2], "{v:?}");
    }

    #[test]
    fn dilation_defect_cases() {
        let t = build_sieve(2_000_100).unwrap();
        assert_eq!(dilation_defect(&t, &[], 2, 1000).unwrap(), 0.0);
        assert!(dilation_defect(&t, &[1, 0], 2, 1000).is_err());
        assert!(dilation_defect(&t, &[1], 4, 1000).is_err());
        assert!(dilation_defect(&t, &[1], 17, 1000).is_err());
        // Direct oracle for both sides at small N.
        let n = 30_000u64;
        for (pattern, p) in [(vec![1i8], 2u64), (vec![1, -1], 3), (vec![-1, -1], 5)] {
            let mut d1 = 0.0;
            let mut d2 = 0.0;
            for m in 1..=n {
                let hit1 = (0..pattern.len()).all(|i| t.liouville(m + i as u64 + 1) == pattern[i]);
                let hit2 = m % p == 0
                    && (0..pattern.len())
                        .all(|i| t.liouville(m + p * (i as u64 + 1)) == -pattern[i]);
                d1 += hit1 as u8 as f64 / m as f64;
                d2 += p as f64 * (hit2 as u8 as f64) / m as f64;
            }
            let oracle = (d1 - d2).abs() / harmonic_range(1, n);
            let got = dilation_defect(&t, &pattern, p, n).unwrap();
            assert!((got - oracle).abs() < 1e-12);
        }
        // The second side only sees n ≤ N/p, which leaves an offset of about
        // 2^-k · log p / log N at finite N.
        let n = 2_000_000;
        let d = dilation_defect(&t, &[1], 2, n).unwrap();
        let offset = 0.5 * (1.0 - harmonic_range(1, n / 2) / harmonic_range(1, n));
        assert!((d - offset).abs() < 5e-3, "{d} vs {offset}");
    }
}
