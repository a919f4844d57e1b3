//! Entropy and mutual information estimators, and numerical checks of the
//! concentration inequalities used by the entropy decrement argument.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{param, Error, Result};
use crate::logstats::CHUNK;
use crate::models::SymbolicSequence;
use crate::numeric::CompensatedSum;

/// Shannon entropy in nats of the normalized weights.
pub fn shannon_entropy(weights: &[f64]) -> Result<f64> {
    if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
        return Err(param("weights", "must be finite and nonnegative"));
    }
    let total: CompensatedSum = weights.iter().copied().collect();
    let total = total.value();
    if total == 0.0 {
        return Err(Error::Empty("all weights are zero"));
    }
    let h: CompensatedSum = weights
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| {
            let q = w / total;
            -q * q.ln()
        })
        .collect();
    Ok(h.value().max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    Uniform,
    /// Sample `n` carries weight `1/n`.
    Logarithmic,
}

/// Weighted counts over pairs `(x, y)` with `x < x_states`, `y < y_states`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointHistogram {
    x_states: usize,
    y_states: usize,
    weights: Vec<f64>,
    samples: u64,
    pub weighting: Weighting,
}

impl JointHistogram {
    pub fn new(x_states: usize, y_states: usize, weighting: Weighting) -> Result<Self> {
        if x_states == 0 || y_states == 0 {
            return Err(param("states", "both sides need at least one state"));
        }
        Ok(JointHistogram {
            x_states,
            y_states,
            weights: vec![0.0; x_states * y_states],
            samples: 0,
            weighting,
        })
    }

    #[inline]
    pub fn add(&mut self, x: usize, y: usize, w: f64) {
        self.weights[x * self.y_states + y] += w;
        self.samples += 1;
    }

    pub fn merge(&mut self, other: &JointHistogram) {
        assert_eq!(self.weights.len(), other.weights.len());
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        self.samples += other.samples;
    }

    /// Histogram of `(window code of b(n+1..n+m), n mod p)` over `1 ≤ n ≤ N`.
    pub fn from_windows(
        seq: &SymbolicSequence,
        m: usize,
        p: u64,
        n: u64,
        weighting: Weighting,
    ) -> Result<Self> {
        let width = seq.alphabet().code_width().ok_or(Error::ContinuousAlphabet)?;
        if m == 0 || width as usize * m > 16 {
            return Err(param("m", format!("window of {m} symbols exceeds 16 bits")));
        }
        if p == 0 {
            return Err(param("p", "modulus must be positive"));
        }
        if n == 0 {
            return Err(param("n", "empty range"));
        }
        seq.require_len(n + m as u64)?;
        let x_states = 1usize << (width as usize * m);
        let mask = (x_states - 1) as u64;
        // Fixed-size blocks keep the floating-point merge order independent
        // of the thread count.
        let block = CHUNK * 16;
        let blocks: Vec<(u64, u64)> = (0..n.div_ceil(block))
            .map(|i| (i * block + 1, ((i + 1) * block).min(n)))
            .collect();
        let parts: Vec<Result<JointHistogram>> = blocks
            .par_iter()
            .map(|&(lo, hi)| {
                let mut h = JointHistogram::new(x_states, p as usize, weighting)?;
                let mut codes = vec![0u8; (hi - lo) as usize + m];
                seq.fill_codes(lo + 1, &mut codes);
                let mut key = 0u64;
                for &c in &codes[..m - 1] {
                    key = (key << width) | c as u64;
                }
                for nn in lo..=hi {
                    let c = codes[(nn - lo) as usize + m - 1];
                    key = ((key << width) | c as u64) & mask;
                    let w = match weighting {
                        Weighting::Uniform => 1.0,
                        Weighting::Logarithmic => 1.0 / nn as f64,
                    };
                    h.add(key as usize, (nn % p) as usize, w);
                }
                Ok(h)
            })
            .collect();
        let mut total = JointHistogram::new(x_states, p as usize, weighting)?;
        for part in parts {
            total.merge(&part?);
        }
        Ok(total)
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn weight(&self, x: usize, y: usize) -> f64 {
        self.weights[x * self.y_states + y]
    }

    pub fn x_marginal(&self) -> Vec<f64> {
        self.weights
            .chunks(self.y_states)
            .map(|row| row.iter().sum())
            .collect()
    }

    pub fn y_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.y_states];
        for row in self.weights.chunks(self.y_states) {
            for (o, w) in out.iter_mut().zip(row) {
                *o += w;
            }
        }
        out
    }

    pub fn entropy_x(&self) -> Result<f64> {
        shannon_entropy(&self.x_marginal())
    }

    pub fn entropy_y(&self) -> Result<f64> {
        shannon_entropy(&self.y_marginal())
    }

    pub fn entropy_joint(&self) -> Result<f64> {
        shannon_entropy(&self.weights)
    }
}

/// Plug-in `H(X) + H(Y) − H(X,Y)` of the empirical distribution. No bias
/// correction is applied; the plug-in estimate overshoots by roughly
/// `(|X|−1)(|Y|−1) / (2·samples)` for independent data.
pub fn mutual_information(joint: &JointHistogram) -> Result<f64> {
    let i = joint.entropy_x()? + joint.entropy_y()? - joint.entropy_joint()?;
    Ok(i.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoeffdingResult {
    pub n_vars: u64,
    pub t: f64,
    pub trials: u64,
    pub empirical_tail: f64,
    pub bound: f64,
    /// Three standard deviations of a Bernoulli(bound) frequency.
    pub slack: f64,
}

impl HoeffdingResult {
    pub fn holds(&self) -> bool {
        self.empirical_tail <= self.bound + self.slack
    }
}

/// Frequency of `|(Z₁+⋯+Z_n)/n| > t` for i.i.d. `Z_i = ±2` against
/// `exp(−n t²/16)`. Deviations are measured on the scale of the mean.
pub fn hoeffding_check(n_vars: u64, t: f64, trials: u64, seed: u64) -> Result<HoeffdingResult> {
    if trials == 0 {
        return Err(param("trials", "must be positive"));
    }
    if n_vars == 0 {
        return Err(param("n_vars", "must be positive"));
    }
    if !(t >= 0.0) {
        return Err(param("t", "must be nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let threshold = t * n_vars as f64;
    let mut exceed = 0u64;
    for _ in 0..trials {
        let mut ones = 0u64;
        let mut left = n_vars;
        while left >= 64 {
            ones += rng.gen::<u64>().count_ones() as u64;
            left -= 64;
        }
        if left > 0 {
            ones += (rng.gen::<u64>() & ((1u64 << left) - 1)).count_ones() as u64;
        }
        let sum = 2.0 * (2.0 * ones as f64 - n_vars as f64);
        if sum.abs() > threshold {
            exceed += 1;
        }
    }
    let bound = (-(n_vars as f64) * t * t / 16.0).exp();
    Ok(HoeffdingResult {
        n_vars,
        t,
        trials,
        empirical_tail: exceed as f64 / trials as f64,
        bound,
        slack: 3.0 * (bound * (1.0 - bound) / trials as f64).sqrt(),
    })
}

/// Default grid for [`hoeffding_check`]: `n ∈ {100, 1000}` and mean-scale
/// deviations from 0.05 to 0.8.
pub fn hoeffding_default_grid() -> Vec<(u64, f64)> {
    let ts = [0.05, 0.1, 0.2, 0.3, 0.4, 0.6, 0.8];
    [100u64, 1000]
        .iter()
        .flat_map(|&n| ts.iter().map(move |&t| (n, t)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinskerCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl PinskerCheck {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + 1e-12
    }
}

/// `ℙ(Y ∈ E)` against `−(H(W) − H(Y) + log 2) / log ℙ(W ∈ E)` with `W`
/// uniform on the support of `y`.
pub fn pinsker_bound_check(y: &[f64], event: &[bool]) -> Result<PinskerCheck> {
    if y.len() != event.len() {
        return Err(param("event", "length must match the distribution"));
    }
    let h_y = shannon_entropy(y)?;
    let size = event.iter().filter(|&&b| b).count();
    if size == 0 || size == y.len() {
        return Err(param("event", "ℙ(W ∈ E) must lie strictly between 0 and 1"));
    }
    let total: f64 = y.iter().sum();
    let lhs = y
        .iter()
        .zip(event)
        .filter(|(_, &b)| b)
        .map(|(w, _)| w)
        .sum::<f64>()
        / total;
    let h_w = (y.len() as f64).ln();
    let p_w = size as f64 / y.len() as f64;
    let rhs = -(h_w - h_y + std::f64::consts::LN_2) / p_w.ln();
    Ok(PinskerCheck { lhs, rhs })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecrementRow {
    pub p: u64,
    pub m: usize,
    pub n: u64,
    pub mutual_information: f64,
    pub window_entropy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecrementReport {
    pub rows: Vec<DecrementRow>,
    pub threshold: f64,
    /// True when every estimate is at most `threshold`.
    pub all_below: bool,
}

impl DecrementReport {
    pub fn max_information(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.mutual_information)
            .fold(0.0, f64::max)
    }
}

/// Log-weighted mutual information between the length-`m` window starting
/// after `n` and `n mod p`, for each prime.
pub fn entropy_decrement_demo(
    seq: &SymbolicSequence,
    m: usize,
    primes: &[u64],
    n: u64,
    threshold: f64,
) -> Result<DecrementReport> {
    if m > 16 {
        return Err(param("m", format!("{m} exceeds 16")));
    }
    if let Some(&p) = primes.iter().find(|&&p| !(2..=101).contains(&p)) {
        return Err(param("primes", format!("{p} not in 2..=101")));
    }
    let mut rows = Vec::with_capacity(primes.len());
    for &p in primes {
        let h = JointHistogram::from_windows(seq, m, p, n, Weighting::Logarithmic)?;
        rows.push(DecrementRow {
            p,
            m,
            n,
            mutual_information: mutual_information(&h)?,
            window_entropy: h.entropy_x()?,
        });
    }
    let all_below = rows.iter().all(|r| r.mutual_information <= threshold);
    Ok(DecrementReport {
        rows,
        threshold,
        all_below,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::build_sieve;
    use crate::models::*;
    use num_complex::Complex64;
    use std::sync::Arc;

    #[test]
    fn entropy_basics() {
        assert_eq!(shannon_entropy(&[0.0, 3.0, 0.0]).unwrap(), 0.0);
        assert!((shannon_entropy(&[1.0; 4]).unwrap() - 4f64.ln()).abs() < 1e-15);
        assert!(shannon_entropy(&[0.0, 0.0]).is_err());
        assert!(shannon_entropy(&[1.0, -1.0]).is_err());
        let a = shannon_entropy(&[0.1, 0.2, 0.7]).unwrap();
        let b = shannon_entropy(&[0.7, 0.1, 0.2]).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn mutual_information_cases() {
        // Y a function of X.
        let mut h = JointHistogram::new(6, 3, Weighting::Uniform).unwrap();
        for x in 0..6 {
            h.add(x, x % 3, 1.0);
        }
        let i = mutual_information(&h).unwrap();
        assert!((i - h.entropy_y().unwrap()).abs() < 1e-12);

        // Independent pair.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut h = JointHistogram::new(4, 3, Weighting::Uniform).unwrap();
        for _ in 0..1_000_000 {
            h.add(rng.gen_range(0..4), rng.gen_range(0..3), 1.0);
        }
        assert_eq!(h.samples(), 1_000_000);
        assert!(mutual_information(&h).unwrap() <= 0.01);
    }

    #[test]
    fn window_histogram_matches_direct_count() {
        let t = Arc::new(build_sieve(20_000).unwrap());
        let lam = make_liouville(t);
        let (m, p, n) = (5usize, 7u64, 10_000u64);
        let h = JointHistogram::from_windows(&lam, m, p, n, Weighting::Uniform).unwrap();
        let mut direct = vec![0.0; (1 << m) * p as usize];
        for nn in 1..=n {
            let mut key = 0usize;
            for j in 1..=m as u64 {
                key = (key << 1) | lam.code(nn + j) as usize;
            }
            direct[key * p as usize + (nn % p) as usize] += 1.0;
        }
        for x in 0..1 << m {
            for y in 0..p as usize {
                assert_eq!(h.weight(x, y), direct[x * p as usize + y]);
            }
        }
        assert_eq!(h.total_weight(), n as f64);
        let ym = h.y_marginal();
        assert!(ym.iter().all(|&c| (c - n as f64 / p as f64).abs() <= 2.0 * n as f64 / p as f64));
    }

    #[test]
    fn hoeffding_examples() {
        let r = hoeffding_check(100, 10.0, 1000, 1).unwrap();
        assert_eq!(r.empirical_tail, 0.0);
        assert!(r.bound < 1e-100 && r.holds());
        let r = hoeffding_check(1000, 4.0 / 1000f64.sqrt(), 20_000, 2).unwrap();
        assert!(r.holds(), "{r:?}");
        // Sum of ±2 over 1000 variables has standard deviation 2·√1000;
        // the event is |S| > 2σ, about 4.55%.
        assert!((r.empirical_tail - 0.0455).abs() < 0.01);
        assert!(hoeffding_check(10, 0.1, 0, 1).is_err());
    }

    #[test]
    fn pinsker_examples() {
        let mut y = vec![0.0; 256];
        y[3] = 1.0;
        let mut e = vec![false; 256];
        e[3] = true;
        let c = pinsker_bound_check(&y, &e).unwrap();
        assert_eq!(c.lhs, 1.0);
        assert!((c.rhs - 9.0 / 8.0).abs() < 1e-12);
        assert!(c.holds());

        let y = vec![1.0; 10];
        let e: Vec<bool> = (0..10).map(|i| i < 3).collect();
        let c = pinsker_bound_check(&y, &e).unwrap();
        assert!((c.lhs - 0.3).abs() < 1e-15);
        assert!((c.rhs + std::f64::consts::LN_2 / 0.3f64.ln()).abs() < 1e-12);
        assert!(pinsker_bound_check(&y, &[true; 10]).is_err());
        assert!(pinsker_bound_check(&y, &[false; 10]).is_err());
    }

    #[test]
    fn decrement_detects_constructed_dependence() {
        let p = 5u64;
        let seq = SymbolicSequence::from_fn(100_000, Alphabet::signs(), move |n| {
            Complex64::new(if (n % p) % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
        });
        let r = entropy_decrement_demo(&seq, 4, &[p], 50_000, 0.02).unwrap();
        assert!(!r.all_below);
        assert!(r.max_information() > 1.0);
        assert!(entropy_decrement_demo(&seq, 17, &[3], 100, 0.02).is_err());
        assert!(entropy_decrement_demo(&seq, 4, &[103], 100, 0.02).is_err());
    }
}
