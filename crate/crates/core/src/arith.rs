//! Sieved arithmetic functions and the decomposition of a multiplicative
//! function into a completely multiplicative part convolved with a part
//! supported on higher prime powers.

use std::collections::HashMap;
use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{param, Error, Result};

/// Largest supported sieve limit. The smallest-prime-factor table alone takes
/// four bytes per integer, so this keeps a full table near 1 GiB.
pub const MAX_SIEVE_LIMIT: u64 = 250_000_000;

const CACHE_MAGIC: &[u8; 8] = b"SLSIEVE\0";
const CACHE_VERSION: u32 = 1;
/// Header: magic, version, limit, three layout bytes, zero padding.
const CACHE_HEADER_LEN: usize = 32;

/// Liouville, Möbius and smallest-prime-factor values on `[1, limit]`.
///
/// λ is packed one bit per integer (bit set means −1); μ uses two bits
/// (0 → 0, 1 → +1, 2 → −1). Tables are immutable after construction.
#[derive(Clone, PartialEq, Eq)]
pub struct SieveTable {
    limit: u64,
    liouville_bits: Vec<u64>,
    mobius_bits: Vec<u64>,
    spf: Vec<u32>,
}

impl std::fmt::Debug for SieveTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SieveTable").field("limit", &self.limit).finish()
    }
}

/// Builds λ, μ and the smallest-prime-factor table with a linear sieve.
pub fn build_sieve(limit: u64) -> Result<SieveTable> {
    if limit == 0 || limit > MAX_SIEVE_LIMIT {
        return Err(Error::Size {
            requested: limit,
            min: 1,
            max: MAX_SIEVE_LIMIT,
        });
    }
    let n = limit as usize;
    let mut spf = vec![0u32; n + 1];
    let mut lambda = vec![0u64; n / 64 + 1];
    let mut mobius = vec![0u64; n / 32 + 1];
    let mut primes: Vec<u32> = Vec::new();

    set_mobius(&mut mobius, 1, 1);
    if n >= 1 {
        spf[1] = 1;
    }
    for i in 2..=n {
        if spf[i] == 0 {
            spf[i] = i as u32;
            primes.push(i as u32);
            lambda[i >> 6] |= 1 << (i & 63);
            set_mobius(&mut mobius, i, -1);
        }
        let li = (lambda[i >> 6] >> (i & 63)) & 1;
        let mi = get_mobius(&mobius, i);
        let si = spf[i];
        for &p in &primes {
            let m = i * p as usize;
            if p > si || m > n {
                break;
            }
            spf[m] = p;
            if li == 0 {
                lambda[m >> 6] |= 1 << (m & 63);
            }
            if p != si {
                set_mobius(&mut mobius, m, -mi);
            }
        }
    }
    Ok(SieveTable {
        limit,
        liouville_bits: lambda,
        mobius_bits: mobius,
        spf,
    })
}

#[inline]
fn set_mobius(bits: &mut [u64], n: usize, value: i8) {
    let code: u64 = match value {
        0 => 0,
        1 => 1,
        _ => 2,
    };
    let shift = 2 * (n & 31);
    bits[n >> 5] = (bits[n >> 5] & !(3 << shift)) | (code << shift);
}

#[inline]
fn get_mobius(bits: &[u64], n: usize) -> i8 {
    match (bits[n >> 5] >> (2 * (n & 31))) & 3 {
        0 => 0,
        1 => 1,
        _ => -1,
    }
}

impl SieveTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    #[inline]
    pub fn liouville(&self, n: u64) -> i8 {
        debug_assert!(n >= 1 && n <= self.limit);
        let n = n as usize;
        if (self.liouville_bits[n >> 6] >> (n & 63)) & 1 == 1 {
            -1
        } else {
            1
        }
    }

    /// Raw λ bit for `n`: `true` when λ(n) = −1.
    #[inline]
    pub fn liouville_bit(&self, n: u64) -> bool {
        let n = n as usize;
        (self.liouville_bits[n >> 6] >> (n & 63)) & 1 == 1
    }

    #[inline]
    pub fn mobius(&self, n: u64) -> i8 {
        debug_assert!(n >= 1 && n <= self.limit);
        get_mobius(&self.mobius_bits, n as usize)
    }

    /// Smallest prime factor; `spf(1) = 1`.
    #[inline]
    pub fn spf(&self, n: u64) -> u64 {
        self.spf[n as usize] as u64
    }

    pub fn is_prime(&self, n: u64) -> bool {
        n >= 2 && self.spf(n) == n
    }

    /// Total number of prime factors with multiplicity.
    pub fn big_omega(&self, mut n: u64) -> u32 {
        let mut count = 0;
        while n > 1 {
            n /= self.spf(n);
            count += 1;
        }
        count
    }

    /// Prime factorization as `(p, exponent)` pairs in increasing `p`.
    pub fn factorize(&self, mut n: u64) -> Vec<(u64, u32)> {
        let mut out: Vec<(u64, u32)> = Vec::new();
        while n > 1 {
            let p = self.spf(n);
            n /= p;
            match out.last_mut() {
                Some((q, e)) if *q == p => *e += 1,
                _ => out.push((p, 1)),
            }
        }
        out
    }

    /// Primes in the half-open range `(lo, hi]`, clipped to the table.
    pub fn primes_in(&self, lo: u64, hi: u64) -> Vec<u64> {
        let hi = hi.min(self.limit);
        (lo.saturating_add(1).max(2)..=hi)
            .filter(|&n| self.is_prime(n))
            .collect()
    }

    /// Writes the versioned little-endian cache format.
    pub fn write_cache<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut header = [0u8; CACHE_HEADER_LEN];
        header[..8].copy_from_slice(CACHE_MAGIC);
        header[8..12].copy_from_slice(&CACHE_VERSION.to_le_bytes());
        header[12..20].copy_from_slice(&self.limit.to_le_bytes());
        header[20] = 1; // λ bits per integer
        header[21] = 2; // μ bits per integer
        header[22] = 4; // spf bytes per integer
        w.write_all(&header)?;
        for word in &self.liouville_bits {
            w.write_all(&word.to_le_bytes())?;
        }
        for word in &self.mobius_bits {
            w.write_all(&word.to_le_bytes())?;
        }
        for v in &self.spf {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_cache<R: Read>(mut r: R) -> Result<SieveTable> {
        let io = |e: std::io::Error| Error::Cache(e.to_string());
        let mut header = [0u8; CACHE_HEADER_LEN];
        r.read_exact(&mut header).map_err(io)?;
        if &header[..8] != CACHE_MAGIC {
            return Err(Error::Cache("bad magic".into()));
        }
        let version = u32::from_le_bytes(header[8..12].try_into().unwrap());
        if version != CACHE_VERSION {
            return Err(Error::Cache(format!("unsupported version {version}")));
        }
        let limit = u64::from_le_bytes(header[12..20].try_into().unwrap());
        if header[20..23] != [1, 2, 4] {
            return Err(Error::Cache("unknown bit layout".into()));
        }
        if limit == 0 || limit > MAX_SIEVE_LIMIT {
            return Err(Error::Cache(format!("limit {limit} out of range")));
        }
        let n = limit as usize;
        let read_u64s = |r: &mut R, len: usize| -> Result<Vec<u64>> {
            let mut buf = vec![0u8; len * 8];
            r.read_exact(&mut buf).map_err(io)?;
            Ok(buf
                .chunks_exact(8)
                .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
                .collect())
        };
        let liouville_bits = read_u64s(&mut r, n / 64 + 1)?;
        let mobius_bits = read_u64s(&mut r, n / 32 + 1)?;
        let mut buf = vec![0u8; (n + 1) * 4];
        r.read_exact(&mut buf).map_err(io)?;
        let spf = buf
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(SieveTable {
            limit,
            liouville_bits,
            mobius_bits,
            spf,
        })
    }
}

/// A multiplicative function given by its values on prime powers.
///
/// Values are stored for every prime power `p^k ≤ limit`, `k ≥ 1`; the value
/// at `p^0` is always 1. When `completely_multiplicative` is set, the stored
/// `(p, k)` values must equal `a(p)^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicativeSpec {
    limit: u64,
    values: HashMap<(u64, u32), Complex64>,
    completely_multiplicative: bool,
}

const CONSISTENCY_TOL: f64 = 1e-12;

impl MultiplicativeSpec {
    /// Tabulates `f(p, k)` on every prime power up to `limit`.
    pub fn from_prime_powers<F>(limit: u64, completely_multiplicative: bool, f: F) -> Result<Self>
    where
        F: Fn(u64, u32) -> Complex64,
    {
        let mut values = HashMap::new();
        for p in small_primes(limit) {
            let mut q = p;
            let mut k = 1u32;
            loop {
                let v = if completely_multiplicative && k > 1 {
                    values[&(p, 1)] * powi(values[&(p, 1)], k - 1)
                } else {
                    f(p, k)
                };
                values.insert((p, k), v);
                match q.checked_mul(p) {
                    Some(next) if next <= limit => {
                        q = next;
                        k += 1;
                    }
                    _ => break,
                }
            }
        }
        Self::from_table(limit, completely_multiplicative, values)
    }

    /// Completely multiplicative function with the given values at primes.
    pub fn completely<F: Fn(u64) -> Complex64>(limit: u64, at_prime: F) -> Result<Self> {
        Self::from_prime_powers(limit, true, |p, _| at_prime(p))
    }

    /// Builds a spec from an explicit table, validating it.
    pub fn from_table(
        limit: u64,
        completely_multiplicative: bool,
        values: HashMap<(u64, u32), Complex64>,
    ) -> Result<Self> {
        let spec = MultiplicativeSpec {
            limit,
            values,
            completely_multiplicative,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn liouville(limit: u64) -> Result<Self> {
        Self::completely(limit, |_| Complex64::new(-1.0, 0.0))
    }

    pub fn mobius(limit: u64) -> Result<Self> {
        Self::from_prime_powers(limit, false, |_, k| {
            Complex64::new(if k == 1 { -1.0 } else { 0.0 }, 0.0)
        })
    }

    /// The convolution identity δ₁: 1 at n = 1, 0 elsewhere.
    pub fn delta(limit: u64) -> Result<Self> {
        Self::from_prime_powers(limit, false, |_, _| Complex64::new(0.0, 0.0))
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn is_completely_multiplicative(&self) -> bool {
        self.completely_multiplicative
    }

    pub fn at_prime_power(&self, p: u64, k: u32) -> Option<Complex64> {
        if k == 0 {
            return Some(Complex64::new(1.0, 0.0));
        }
        self.values.get(&(p, k)).copied()
    }

    /// Whether every stored value lies in the closed unit disk.
    pub fn is_unit_bounded(&self) -> bool {
        self.values.values().all(|v| v.norm() <= 1.0 + CONSISTENCY_TOL)
    }

    fn validate(&self) -> Result<()> {
        for (&(p, k), &v) in &self.values {
            if k == 0 || !is_prime_trial(p) {
                return Err(Error::Validation(format!("({p}, {k}) is not a prime power key")));
            }
            match p.checked_pow(k) {
                Some(q) if q <= self.limit => {}
                _ => {
                    return Err(Error::Validation(format!(
                        "{p}^{k} exceeds the declared limit {}",
                        self.limit
                    )))
                }
            }
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::Validation(format!("non-finite value at {p}^{k}")));
            }
            if self.completely_multiplicative && k > 1 {
                let base = self
                    .values
                    .get(&(p, 1))
                    .ok_or_else(|| Error::Validation(format!("missing value at prime {p}")))?;
                if (powi(*base, k) - v).norm() > CONSISTENCY_TOL {
                    return Err(Error::Validation(format!(
                        "value at {p}^{k} differs from a({p})^{k}"
                    )));
                }
            }
        }
        for p in small_primes(self.limit) {
            let mut q = p;
            let mut k = 1u32;
            loop {
                if !self.values.contains_key(&(p, k)) {
                    return Err(Error::Validation(format!("missing value at {p}^{k}")));
                }
                match q.checked_mul(p) {
                    Some(next) if next <= self.limit => {
                        q = next;
                        k += 1;
                    }
                    _ => break,
                }
            }
        }
        Ok(())
    }

    /// Values `a(1), …, a(n_max)` by multiplicativity (index 0 unused).
    pub fn tabulate(&self, table: &SieveTable, n_max: u64) -> Result<Vec<Complex64>> {
        if n_max > self.limit {
            return Err(param(
                "n_max",
                format!("{n_max} exceeds the spec limit {}", self.limit),
            ));
        }
        if n_max > table.limit() {
            return Err(Error::TooShort {
                len: table.limit(),
                needed: n_max,
            });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); n_max as usize + 1];
        if n_max >= 1 {
            out[1] = Complex64::new(1.0, 0.0);
        }
        // a(n) = a(p^k) · a(n / p^k) with p = spf(n).
        for n in 2..=n_max {
            let p = table.spf(n);
            let mut m = n;
            let mut k = 0u32;
            while m % p == 0 {
                m /= p;
                k += 1;
            }
            let v = self.values[&(p, k)];
            out[n as usize] = v * out[m as usize];
        }
        Ok(out)
    }
}

fn powi(z: Complex64, k: u32) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for _ in 0..k {
        acc *= z;
    }
    acc
}

fn is_prime_trial(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn small_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Splits `a` into `a1 * a2` on prime powers up to `prime_power_ceiling`:
/// `a1` is completely multiplicative with `a1(p) = a(p)`, and `a2` vanishes at
/// primes and is fixed on higher powers by
/// `a2(p^k) = a(p^k) − Σ_{0≤i<k} a(p)^{k−i} a2(p^i)`.
pub fn decompose(
    a: &MultiplicativeSpec,
    prime_power_ceiling: u64,
) -> Result<(MultiplicativeSpec, MultiplicativeSpec)> {
    if prime_power_ceiling > a.limit {
        return Err(param(
            "prime_power_ceiling",
            format!("{prime_power_ceiling} exceeds the spec limit {}", a.limit),
        ));
    }
    for p in small_primes(prime_power_ceiling) {
        let ap = a.values[&(p, 1)];
        if (ap.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "|a({p})| = {} is not on the unit circle",
                ap.norm()
            )));
        }
    }
    let a1 = MultiplicativeSpec::completely(prime_power_ceiling, |p| a.values[&(p, 1)])?;
    let mut a2_values = HashMap::new();
    for p in small_primes(prime_power_ceiling) {
        let ap = a.values[&(p, 1)];
        // history[i] = a2(p^i)
        let mut history = vec![Complex64::new(1.0, 0.0)];
        let mut q = p;
        let mut k = 1u32;
        loop {
            let mut acc = a.values[&(p, k)];
            for (i, &prev) in history.iter().enumerate() {
                acc -= powi(ap, k - i as u32) * prev;
            }
            a2_values.insert((p, k), acc);
            history.push(acc);
            match q.checked_mul(p) {
                Some(next) if next <= prime_power_ceiling => {
                    q = next;
                    k += 1;
                }
                _ => break,
            }
        }
    }
    let a2 = MultiplicativeSpec::from_table(prime_power_ceiling, false, a2_values)?;
    Ok((a1, a2))
}

/// `max_{n ≤ n_max} |a(n) − (a1 * a2)(n)|` with `(a1 * a2)(n) = Σ_{ℓ|n} a1(n/ℓ) a2(ℓ)`.
pub fn convolve_check(
    a: &MultiplicativeSpec,
    a1: &MultiplicativeSpec,
    a2: &MultiplicativeSpec,
    n_max: u64,
) -> Result<f64> {
    if n_max == 0 {
        return Ok(0.0);
    }
    let table = build_sieve(n_max)?;
    let va = a.tabulate(&table, n_max)?;
    let v1 = a1.tabulate(&table, n_max)?;
    let v2 = a2.tabulate(&table, n_max)?;
    let conv = dirichlet_convolution(&v1, &v2);
    Ok((1..=n_max as usize)
        .map(|n| (va[n] - conv[n]).norm())
        .fold(0.0, f64::max))
}

/// Dirichlet convolution of two arrays indexed from 1 (index 0 ignored).
pub fn dirichlet_convolution(f: &[Complex64], g: &[Complex64]) -> Vec<Complex64> {
    let n = f.len().min(g.len()) - 1;
    let mut out = vec![Complex64::new(0.0, 0.0); n + 1];
    for l in 1..=n {
        let gl = g[l];
        if gl == Complex64::new(0.0, 0.0) {
            continue;
        }
        let mut m = 1;
        while l * m <= n {
            out[l * m] += f[m] * gl;
            m += 1;
        }
    }
    out
}
