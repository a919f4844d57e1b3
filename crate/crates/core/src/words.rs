//! Window extraction and word counting.
//!
//! The window at position `n` is `(b(n+1), …, b(n+k))` and carries weight
//! `1/n`; a run up to `N` scans `1 ≤ n ≤ N − k`. Words over finite alphabets
//! are packed into a [`WordKey`] with `code_width` bits per symbol, first
//! symbol most significant.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{param, Error, Result};
use crate::logstats::chunk_ranges;
use crate::models::SymbolicSequence;
use crate::numeric::{harmonic_range, least_squares, CompensatedSum};

pub type WordKey = u128;

/// Default normalized log-mass threshold for "positive density".
pub const DEFAULT_TAU: f64 = 1e-3;

/// Dense tables are used while `code_width · k` stays at or below this.
const DENSE_BITS: u32 = 16;
/// Chunks reduced in parallel before folding into the running total.
const BATCH: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WordEntry {
    pub count: u64,
    pub log_mass: f64,
}

/// Per-word counts and log-masses for windows of length `k` up to `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct WordStats {
    pub k: usize,
    pub n: u64,
    pub code_width: u32,
    pub entries: BTreeMap<WordKey, WordEntry>,
    /// `Σ_{m ≤ n−k} 1/m`.
    pub total_log_mass: f64,
}

impl WordStats {
    pub fn distinct(&self) -> usize {
        self.entries.len()
    }

    /// Log-mass of a word divided by the total.
    pub fn normalized(&self, key: WordKey) -> f64 {
        self.entries
            .get(&key)
            .map_or(0.0, |e| e.log_mass / self.total_log_mass)
    }
}

/// Word log-masses at several nested scales `N_0 < N_1 < …`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiScaleWords {
    pub k: usize,
    pub scales: Vec<u64>,
    pub code_width: u32,
    /// Per word: window count at the top scale and log-mass at each scale.
    pub words: BTreeMap<WordKey, (u64, Vec<f64>)>,
    /// `Σ_{m ≤ N_j − k} 1/m` per scale.
    pub totals: Vec<f64>,
}

impl MultiScaleWords {
    /// Largest normalized log-mass of `key` over the scales.
    pub fn max_normalized(&self, key: WordKey) -> f64 {
        self.words.get(&key).map_or(0.0, |(_, m)| {
            m.iter()
                .zip(&self.totals)
                .map(|(a, t)| a / t)
                .fold(0.0, f64::max)
        })
    }

    /// Words whose largest normalized log-mass reaches `tau`.
    pub fn positive_density(&self, tau: f64) -> Vec<WordKey> {
        self.words
            .keys()
            .copied()
            .filter(|&w| self.max_normalized(w) >= tau)
            .collect()
    }

    /// Statistics at the top scale.
    pub fn top(&self) -> WordStats {
        let last = self.scales.len() - 1;
        WordStats {
            k: self.k,
            n: self.scales[last],
            code_width: self.code_width,
            entries: self
                .words
                .iter()
                .map(|(&w, (c, m))| {
                    (
                        w,
                        WordEntry {
                            count: *c,
                            log_mass: m[last],
                        },
                    )
                })
                .collect(),
            total_log_mass: self.totals[last],
        }
    }
}

/// Packs symbol codes into a key, first symbol most significant.
pub fn encode_word(codes: &[u8], code_width: u32) -> WordKey {
    codes
        .iter()
        .fold(0u128, |acc, &c| (acc << code_width) | c as u128)
}

pub fn decode_word(key: WordKey, k: usize, code_width: u32) -> Vec<u8> {
    let mask = (1u128 << code_width) - 1;
    (0..k)
        .rev()
        .map(|i| ((key >> (code_width as usize * i)) & mask) as u8)
        .collect()
}

// Per-segment accumulation: segment j holds windows with
// N_{j-1} − k < n ≤ N_j − k.
trait Accum: Send {
    fn add(&mut self, key: WordKey, segment: usize, weight: f64);
    fn merge_into(self, global: &mut HashMap<WordKey, (u64, Vec<CompensatedSum>)>, segments: usize);
}

struct DenseAccum {
    segments: usize,
    counts: Vec<u64>,
    mass: Vec<CompensatedSum>,
}

impl Accum for DenseAccum {
    #[inline]
    fn add(&mut self, key: WordKey, segment: usize, weight: f64) {
        let i = key as usize;
        self.counts[i] += 1;
        self.mass[i * self.segments + segment].add(weight);
    }

    fn merge_into(self, global: &mut HashMap<WordKey, (u64, Vec<CompensatedSum>)>, segments: usize) {
        for (i, &c) in self.counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let entry = global
                .entry(i as WordKey)
                .or_insert_with(|| (0, vec![CompensatedSum::new(); segments]));
            entry.0 += c;
            for s in 0..segments {
                entry.1[s].merge(&self.mass[i * segments + s]);
            }
        }
    }
}

struct HashAccum {
    segments: usize,
    map: HashMap<WordKey, (u64, Vec<CompensatedSum>)>,
}

impl Accum for HashAccum {
    #[inline]
    fn add(&mut self, key: WordKey, segment: usize, weight: f64) {
        let segments = self.segments;
        let e = self
            .map
            .entry(key)
            .or_insert_with(|| (0, vec![CompensatedSum::new(); segments]));
        e.0 += 1;
        e.1[segment].add(weight);
    }

    fn merge_into(self, global: &mut HashMap<WordKey, (u64, Vec<CompensatedSum>)>, segments: usize) {
        // Sorted merge keeps the floating-point combination order fixed.
        let mut items: Vec<_> = self.map.into_iter().collect();
        items.sort_unstable_by_key(|(k, _)| *k);
        for (key, (c, masses)) in items {
            let entry = global
                .entry(key)
                .or_insert_with(|| (0, vec![CompensatedSum::new(); segments]));
            entry.0 += c;
            for s in 0..segments {
                entry.1[s].merge(&masses[s]);
            }
        }
    }
}

fn check_word_params(seq: &SymbolicSequence, k: usize) -> Result<u32> {
    if k == 0 {
        return Err(param("k", "word length must be positive"));
    }
    let width = seq.alphabet().code_width().ok_or(Error::ContinuousAlphabet)?;
    if width as usize * k > 128 {
        return Err(param(
            "k",
            format!("{k} symbols of {width} bits do not fit a 128-bit key"),
        ));
    }
    Ok(width)
}

/// Scans every window up to the last scale and records per-scale log-masses.
pub fn count_words_multiscale(
    seq: &SymbolicSequence,
    k: usize,
    scales: &[u64],
) -> Result<MultiScaleWords> {
    let width = check_word_params(seq, k)?;
    if scales.is_empty() {
        return Err(Error::Empty("empty scale list"));
    }
    if scales.windows(2).any(|w| w[0] >= w[1]) {
        return Err(param("scales", "scales must be increasing"));
    }
    if scales[0] <= k as u64 {
        return Err(param("scales", format!("smallest scale must exceed k = {k}")));
    }
    let top = *scales.last().unwrap();
    seq.require_len(top)?;
    let k64 = k as u64;
    let last_n = top - k64;
    // boundaries[j] = N_j − k
    let boundaries: Vec<u64> = scales.iter().map(|s| s - k64).collect();
    let segments = scales.len();
    let bits = width * k as u32;
    let mask: u128 = if bits == 128 { u128::MAX } else { (1u128 << bits) - 1 };
    let dense = bits <= DENSE_BITS;

    let scan = |lo: u64, hi: u64, acc: &mut dyn Accum| {
        let mut codes = vec![0u8; (hi - lo + k64) as usize];
        seq.fill_codes(lo + 1, &mut codes);
        let mut key: u128 = 0;
        for &c in &codes[..k - 1] {
            key = (key << width) | c as u128;
        }
        let mut segment = boundaries.partition_point(|&b| b < lo);
        for (i, n) in (lo..=hi).enumerate() {
            key = ((key << width) | codes[i + k - 1] as u128) & mask;
            while n > boundaries[segment] {
                segment += 1;
            }
            acc.add(key, segment, 1.0 / n as f64);
        }
    };

    let chunks = chunk_ranges(1, last_n);
    let mut global: HashMap<WordKey, (u64, Vec<CompensatedSum>)> = HashMap::new();
    for batch in chunks.chunks(BATCH) {
        if dense {
            let parts: Vec<DenseAccum> = batch
                .par_iter()
                .map(|&(lo, hi)| {
                    let mut acc = DenseAccum {
                        segments,
                        counts: vec![0; 1 << bits],
                        mass: vec![CompensatedSum::new(); (1 << bits) * segments],
                    };
                    scan(lo, hi, &mut acc);
                    acc
                })
                .collect();
            for p in parts {
                p.merge_into(&mut global, segments);
            }
        } else {
            let parts: Vec<HashAccum> = batch
                .par_iter()
                .map(|&(lo, hi)| {
                    let mut acc = HashAccum {
                        segments,
                        map: HashMap::new(),
                    };
                    scan(lo, hi, &mut acc);
                    acc
                })
                .collect();
            for p in parts {
                p.merge_into(&mut global, segments);
            }
        }
    }

    let words = global
        .into_iter()
        .map(|(key, (c, segs))| {
            let mut running = CompensatedSum::new();
            let masses = segs
                .iter()
                .map(|s| {
                    running.merge(s);
                    running.value()
                })
                .collect();
            (key, (c, masses))
        })
        .collect();
    let totals = boundaries.iter().map(|&b| harmonic_range(1, b)).collect();
    Ok(MultiScaleWords {
        k,
        scales: scales.to_vec(),
        code_width: width,
        words,
        totals,
    })
}

/// Every length-`k` window on `[1, n − k]` with its count and `1/n` mass.
pub fn count_words(seq: &SymbolicSequence, k: usize, n: u64) -> Result<WordStats> {
    Ok(count_words_multiscale(seq, k, &[n])?.top())
}

/// Number of words whose normalized log-mass reaches `tau` at some scale.
pub fn count_positive_density_words(
    seq: &SymbolicSequence,
    k: usize,
    scales: &[u64],
    tau: f64,
) -> Result<usize> {
    if !(tau > 0.0) {
        return Err(param("tau", format!("{tau} must be positive")));
    }
    Ok(count_words_multiscale(seq, k, scales)?
        .positive_density(tau)
        .len())
}

/// Greedy sup-metric cover of the length-`k` windows on `[1, n − k]`: a
/// window starts a new representative when no existing one lies within `eps`
/// in every coordinate.
///
/// Greedy representatives are pairwise more than `eps` apart, so the result
/// is at most the minimal number of `eps/2`-balls needed; it is an upper
/// bound for the minimal `eps`-cover.
pub fn count_words_eps_rounded(seq: &SymbolicSequence, k: usize, eps: f64, n: u64) -> Result<usize> {
    Ok(eps_cover(seq, k, eps, n)?.len() / k.max(1))
}

/// Representatives of the greedy cover, flattened `k` values per word.
pub fn eps_cover(seq: &SymbolicSequence, k: usize, eps: f64, n: u64) -> Result<Vec<Complex64>> {
    if k == 0 {
        return Err(param("k", "word length must be positive"));
    }
    if !(eps > 0.0) {
        return Err(param("eps", format!("{eps} must be positive")));
    }
    seq.require_len(n)?;
    if n <= k as u64 {
        return Err(param("n", format!("no windows of length {k} below {n}")));
    }
    let values: Vec<Complex64> = (1..=n).map(|m| seq.value(m)).collect();
    let eps2 = eps * eps;
    let mut reps: Vec<Complex64> = Vec::new();
    for start in 1..=(n as usize - k) {
        let w = &values[start..start + k];
        let covered = reps
            .chunks_exact(k)
            .any(|r| r.iter().zip(w).all(|(a, b)| (a - b).norm_sqr() <= eps2));
        if !covered {
            reps.extend_from_slice(w);
        }
    }
    Ok(reps)
}

/// Least-squares growth fit of `log s(k)` against `log k`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub ks: Vec<usize>,
    pub counts: Vec<f64>,
    pub fitted_exponent: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
    /// `s(k) < k²` per k.
    pub subquadratic: Vec<bool>,
    /// `s(k) ≤ k^{t−ε}` per k, when `(t, ε)` was supplied.
    pub below_power: Option<Vec<bool>>,
}

pub fn fit_growth(ks: &[usize], counts: &[f64], power: Option<(f64, f64)>) -> Result<GrowthReport> {
    if ks.len() != counts.len() {
        return Err(param("counts", "one count per k required"));
    }
    let mut distinct = ks.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(param("ks", "need at least two distinct k"));
    }
    if ks.contains(&0) || counts.iter().any(|&c| !(c > 0.0)) {
        return Err(param("counts", "k and s(k) must be positive for a log-log fit"));
    }
    let x: Vec<f64> = ks.iter().map(|&k| (k as f64).ln()).collect();
    let y: Vec<f64> = counts.iter().map(|c| c.ln()).collect();
    let (slope, intercept) = least_squares(&x, &y);
    let residuals = x
        .iter()
        .zip(&y)
        .map(|(a, b)| b - (slope * a + intercept))
        .collect();
    let subquadratic = ks
        .iter()
        .zip(counts)
        .map(|(&k, &c)| c < (k * k) as f64)
        .collect();
    let below_power = power.map(|(t, eps)| {
        ks.iter()
            .zip(counts)
            .map(|(&k, &c)| c <= (k as f64).powf(t - eps))
            .collect()
    });
    Ok(GrowthReport {
        ks: ks.to_vec(),
        counts: counts.to_vec(),
        fitted_exponent: slope,
        intercept,
        residuals,
        subquadratic,
        below_power,
    })
}

/// One row of a word-growth sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthRow {
    pub k: usize,
    pub raw: usize,
    pub positive_density: usize,
    pub eps_rounded: Option<usize>,
}

/// Counts for each `k` in `ks` (increasing). The raw distinct-word count can
/// fall by at most the drop in the number of windows, `k' − k`, and this is
/// asserted on every sweep.
pub fn growth_sweep(
    seq: &SymbolicSequence,
    ks: &[usize],
    scales: &[u64],
    tau: f64,
    eps: Option<f64>,
) -> Result<Vec<GrowthRow>> {
    if ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(param("ks", "word lengths must be increasing"));
    }
    let top = *scales.last().ok_or(Error::Empty("empty scale list"))?;
    let mut rows: Vec<GrowthRow> = Vec::new();
    for &k in ks {
        let ms = count_words_multiscale(seq, k, scales)?;
        let raw = ms.words.len();
        if let Some(prev) = rows.last() {
            assert!(
                raw + (k - prev.k) >= prev.raw,
                "raw word count fell from {} (k={}) to {raw} (k={k})",
                prev.raw,
                prev.k
            );
        }
        let eps_rounded = match eps {
            Some(e) => Some(count_words_eps_rounded(seq, k, e, top)?),
            None => None,
        };
        rows.push(GrowthRow {
            k,
            raw,
            positive_density: ms.positive_density(tau).len(),
            eps_rounded,
        });
    }
    Ok(rows)
}
