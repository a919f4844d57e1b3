//! Small numeric helpers shared by every statistic: compensated summation and
//! exact reduction of `alpha * n` modulo one.

use num_complex::Complex64;
use std::f64::consts::TAU;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub const fn new() -> Self {
        Self { sum: 0.0, comp: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated complex sum (componentwise).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ComplexSum {
    pub re: CompensatedSum,
    pub im: CompensatedSum,
}

impl ComplexSum {
    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn merge(&mut self, other: &ComplexSum) {
        self.re.merge(&other.re);
        self.im.merge(&other.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// `Σ_{n=lo}^{hi} 1/n`, compensated. Empty ranges give 0.
pub fn harmonic_range(lo: u64, hi: u64) -> f64 {
    if lo > hi {
        return 0.0;
    }
    let lo = lo.max(1);
    (lo..=hi).rev().map(|n| 1.0 / n as f64).collect::<CompensatedSum>().value()
}

/// Fractional part of `alpha * n`, with `alpha` treated as the exact dyadic
/// rational its `f64` bits encode. The product is formed in integer
/// arithmetic, so the result does not lose precision as `n` grows.
pub fn frac_mul(alpha: f64, n: i128) -> f64 {
    if alpha == 0.0 || n == 0 || !alpha.is_finite() {
        return 0.0;
    }
    let bits = alpha.to_bits();
    let negative = (bits >> 63) == 1;
    let exp_bits = ((bits >> 52) & 0x7ff) as i32;
    let frac_bits = bits & ((1u64 << 52) - 1);
    let (mantissa, exponent) = if exp_bits == 0 {
        (frac_bits, -1074)
    } else {
        (frac_bits | (1u64 << 52), exp_bits - 1075)
    };
    // alpha = ±mantissa * 2^exponent
    if exponent >= 0 {
        return 0.0;
    }
    let sign_negative = negative ^ (n < 0);
    let magnitude = n.unsigned_abs();
    let shift = (-exponent) as u32;
    if shift >= 128 {
        // Product stays far below 2^shift unless n is huge; reduce in f64.
        let x = mantissa as f64 * magnitude as f64 * 2f64.powi(exponent);
        let r = x - x.floor();
        let r = if sign_negative && r != 0.0 { 1.0 - r } else { r };
        return if r >= 1.0 { 0.0 } else { r };
    }
    let modulus = 1u128 << shift;
    let prod = (mantissa as u128).checked_mul(magnitude).unwrap_or_else(|| {
        // Split to avoid overflow: (m * n) mod 2^shift.
        mul_mod_pow2(mantissa as u128, magnitude, shift)
    });
    let mut low = prod & (modulus - 1);
    if sign_negative && low != 0 {
        low = modulus - low;
    }
    let r = low as f64 / 2f64.powi(shift as i32);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

// Only the low `shift < 128` bits are kept, and those survive wrapping.
fn mul_mod_pow2(a: u128, b: u128, shift: u32) -> u128 {
    a.wrapping_mul(b) & ((1u128 << shift) - 1)
}

/// `e(x) = exp(2πi x)` for a phase already reduced to [0, 1).
#[inline]
pub fn e(x: f64) -> Complex64 {
    let (s, c) = (TAU * x).sin_cos();
    Complex64::new(c, s)
}

/// `e(alpha * n)` evaluated through [`frac_mul`].
#[inline]
pub fn e_mul(alpha: f64, n: i128) -> Complex64 {
    e(frac_mul(alpha, n))
}

/// Ordinary least-squares slope and intercept of `y` against `x`.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_beats_naive() {
        let mut acc = CompensatedSum::new();
        acc.add(1.0);
        for _ in 0..10_000 {
            acc.add(1e-16);
        }
        assert!((acc.value() - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn frac_mul_matches_small_cases() {
        assert_eq!(frac_mul(0.5, 3), 0.5);
        assert_eq!(frac_mul(0.25, -1), 0.75);
        assert_eq!(frac_mul(3.0, 7), 0.0);
        assert_eq!(frac_mul(0.5, -2), 0.0);
        let a = std::f64::consts::SQRT_2;
        let direct = (a * 12345.0).fract();
        assert!((frac_mul(a, 12345) - direct).abs() < 1e-9);
    }

    #[test]
    fn frac_mul_is_exact_for_large_arguments() {
        // alpha = 2^-40 * odd; alpha * 2^40 is that odd integer.
        let alpha = 3.0 * 2f64.powi(-40) + 0.5;
        let n: i128 = 1 << 40;
        assert_eq!(frac_mul(alpha, n), 0.0);
        assert_eq!(frac_mul(alpha, n + 1), frac_mul(alpha, 1));
    }

    #[test]
    fn frac_mul_is_additive_mod_one() {
        let a = 0.6180339887498949;
        for (m, n) in [(10_i128, 1_000_000_000_000_i128), (-7, 99), (123456789, 987654321)] {
            let lhs = frac_mul(a, m + n);
            let rhs = (frac_mul(a, m) + frac_mul(a, n)).fract();
            let d = (lhs - rhs).abs();
            assert!(d < 1e-12 || (1.0 - d) < 1e-12, "{m} {n}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn least_squares_recovers_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let (s, c) = least_squares(&x, &y);
        assert!((s - 2.0).abs() < 1e-12 && (c - 1.0).abs() < 1e-12);
    }
}
