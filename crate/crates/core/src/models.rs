//! Sequence generators and frequency-set constructions.
//!
//! Every sequence is 1-indexed: `value(n)` is defined for `1 ≤ n ≤ len`.
//! Randomized models draw from `ChaCha8Rng::seed_from_u64(seed)`, so a given
//! `(model, parameters, seed)` triple reproduces the same values on every
//! platform.
//!
//! Real parameters such as irrational rotation numbers are taken as `f64`
//! approximations. Phases `alpha * n` are reduced modulo one exactly for the
//! dyadic rational the `f64` encodes (see [`crate::numeric::frac_mul`]); all
//! statistics computed here are continuous in these parameters at the
//! tolerances used, so the approximation is harmless.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arith::SieveTable;
use crate::error::{param, Error, Result};
use crate::numeric::{e, frac_mul};

/// Value set of a sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum Alphabet {
    /// Finite set; symbol codes index into this list.
    Finite(Vec<Complex64>),
    UnitCircle,
    UnitDisk,
}

impl Alphabet {
    pub fn signs() -> Self {
        Alphabet::Finite(vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)])
    }

    /// `{+1, −1, 0}` in that code order.
    pub fn ternary() -> Self {
        Alphabet::Finite(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ])
    }

    pub fn binary_indicator() -> Self {
        Alphabet::Finite(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Alphabet::Finite(_))
    }

    pub fn symbols(&self) -> Option<&[Complex64]> {
        match self {
            Alphabet::Finite(s) => Some(s),
            _ => None,
        }
    }

    /// Bits per symbol in packed word keys: 1 for two symbols, 2 for up to
    /// four, 8 for up to 256. `None` for continuous alphabets.
    pub fn code_width(&self) -> Option<u32> {
        match self {
            Alphabet::Finite(s) if s.len() <= 2 => Some(1),
            Alphabet::Finite(s) if s.len() <= 4 => Some(2),
            Alphabet::Finite(s) if s.len() <= 256 => Some(8),
            _ => None,
        }
    }

    /// Whether every symbol is one of −1, 0, +1.
    pub fn is_signed_unit(&self) -> bool {
        match self {
            Alphabet::Finite(s) => s
                .iter()
                .all(|z| z.im == 0.0 && (z.re == 1.0 || z.re == -1.0 || z.re == 0.0)),
            _ => false,
        }
    }

    fn code_of(&self, z: Complex64) -> u8 {
        match self {
            Alphabet::Finite(s) => {
                let mut best = 0;
                let mut best_d = f64::INFINITY;
                for (i, v) in s.iter().enumerate() {
                    let d = (v - z).norm_sqr();
                    if d < best_d {
                        best_d = d;
                        best = i;
                    }
                }
                best as u8
            }
            _ => 0,
        }
    }
}

/// Rule assigning a length to the block starting at position `s`.
#[derive(Clone, Default)]
pub enum BlockRule {
    /// `max(2, ⌊log₂ s⌋)`.
    #[default]
    Log2,
    /// `max(2, ⌊s^exponent⌋)`, exponent in (0, 1/2].
    Power(f64),
    Custom(Arc<dyn Fn(u64) -> u64 + Send + Sync>),
}

impl std::fmt::Debug for BlockRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BlockRule::Log2 => write!(f, "Log2"),
            BlockRule::Power(e) => write!(f, "Power({e})"),
            BlockRule::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl BlockRule {
    pub fn length_at(&self, s: u64) -> u64 {
        match self {
            BlockRule::Log2 => (63 - s.max(1).leading_zeros() as u64).max(2),
            BlockRule::Power(e) => ((s as f64).powf(*e).floor() as u64).max(2),
            BlockRule::Custom(f) => f(s),
        }
    }
}

/// Separated template windows placed at growing scales.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TickerTapeSchedule {
    pub scales: Vec<TickerScale>,
    /// Template sequences; `library[t][h - 1]` is the value at offset `h`.
    pub library: Vec<Vec<Complex64>>,
}

/// One scale `(N_i, H_i)` of a ticker tape with its window starts.
#[derive(Debug, Clone, PartialEq)]
pub struct TickerScale {
    /// Upper end `N_i` of the range holding this scale's windows.
    pub range_end: u64,
    /// Window length `H_i`.
    pub window: u64,
    /// `(n, template index)`: the window covers `n+1 ..= n+H_i`.
    pub windows: Vec<(u64, usize)>,
}

impl TickerTapeSchedule {
    fn validate(&self) -> Result<()> {
        let mut prev_end = 0u64;
        for (i, scale) in self.scales.iter().enumerate() {
            if scale.window == 0 {
                return Err(param("schedule", format!("scale {i} has zero window")));
            }
            let mut last: Option<u64> = None;
            for &(start, template) in &scale.windows {
                let t = self.library.get(template).ok_or_else(|| {
                    param("schedule", format!("template {template} not in library"))
                })?;
                if (t.len() as u64) < scale.window {
                    return Err(param(
                        "schedule",
                        format!("template {template} shorter than window {}", scale.window),
                    ));
                }
                if t.iter().any(|z| z.norm() > 1.0 + 1e-12) {
                    return Err(param("schedule", format!("template {template} not 1-bounded")));
                }
                if let Some(l) = last {
                    if start < l + scale.window {
                        return Err(param(
                            "schedule",
                            format!("windows at {l} and {start} overlap in scale {i}"),
                        ));
                    }
                }
                if start < prev_end || start + scale.window > scale.range_end {
                    return Err(param(
                        "schedule",
                        format!("window at {start} leaves scale {i} range"),
                    ));
                }
                last = Some(start);
            }
            prev_end = scale.range_end;
        }
        Ok(())
    }
}

struct TickerData {
    /// Flattened `(first covered index, window length, template)` sorted by start.
    windows: Vec<(u64, u64, usize)>,
    library: Vec<Vec<Complex64>>,
}

struct SawinData {
    degree: u32,
    starts: Vec<u64>,
    /// `degree + 1` coefficients per block, constant term first.
    coeffs: Vec<f64>,
}

#[derive(Clone)]
enum Model {
    Liouville(Arc<SieveTable>),
    Periodic(Arc<Vec<Complex64>>),
    Sturmian(f64),
    QuadraticPhase(f64, f64),
    Sawin(Arc<SawinData>),
    TickerTape(Arc<TickerData>),
    ThueMorse,
    RandomSigns(Arc<Vec<u64>>),
    Custom(Arc<dyn Fn(u64) -> Complex64 + Send + Sync>),
}

/// A 1-bounded sequence on `[1, len]`.
#[derive(Clone)]
pub struct SymbolicSequence {
    len: u64,
    seed: u64,
    alphabet: Alphabet,
    label: String,
    model: Model,
}

impl std::fmt::Debug for SymbolicSequence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SymbolicSequence")
            .field("label", &self.label)
            .field("len", &self.len)
            .field("seed", &self.seed)
            .field("alphabet", &self.alphabet)
            .finish()
    }
}

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const MINUS_ONE: Complex64 = Complex64::new(-1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[inline]
fn sign(negative: bool) -> Complex64 {
    if negative {
        MINUS_ONE
    } else {
        ONE
    }
}

impl SymbolicSequence {
    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Same sequence restricted to `[1, len]`.
    pub fn truncated(&self, len: u64) -> Self {
        let mut s = self.clone();
        s.len = s.len.min(len);
        s
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Arbitrary sequence from a closure. Values must stay in the unit disk
    /// and, for a finite alphabet, within the alphabet.
    pub fn from_fn<F>(len: u64, alphabet: Alphabet, f: F) -> Self
    where
        F: Fn(u64) -> Complex64 + Send + Sync + 'static,
    {
        SymbolicSequence {
            len,
            seed: 0,
            alphabet,
            label: "custom".into(),
            model: Model::Custom(Arc::new(f)),
        }
    }

    /// Value at `n` (1-based).
    #[inline]
    pub fn value(&self, n: u64) -> Complex64 {
        debug_assert!(n >= 1 && n <= self.len, "index {n} outside [1, {}]", self.len);
        match &self.model {
            Model::Liouville(t) => sign(t.liouville_bit(n)),
            Model::Periodic(p) => p[((n - 1) % p.len() as u64) as usize],
            Model::Sturmian(alpha) => {
                let cut = frac_mul(*alpha, n as i128 + 1) < frac_mul(*alpha, n as i128);
                sign(!cut)
            }
            Model::QuadraticPhase(alpha, beta) => {
                let n = n as i128;
                e((frac_mul(*alpha, n * n) + frac_mul(*beta, n)).fract())
            }
            Model::Sawin(d) => sawin_value(d, n),
            Model::TickerTape(d) => ticker_value(d, n),
            Model::ThueMorse => sign(n.count_ones() % 2 == 1),
            Model::RandomSigns(bits) => sign((bits[(n >> 6) as usize] >> (n & 63)) & 1 == 1),
            Model::Custom(f) => f(n),
        }
    }

    /// Symbol code of `value(n)` for finite alphabets.
    #[inline]
    pub fn code(&self, n: u64) -> u8 {
        match &self.model {
            Model::Liouville(t) => t.liouville_bit(n) as u8,
            Model::ThueMorse => (n.count_ones() % 2) as u8,
            Model::RandomSigns(bits) => ((bits[(n >> 6) as usize] >> (n & 63)) & 1) as u8,
            _ => self.alphabet.code_of(self.value(n)),
        }
    }

    /// Fills `out[i]` with `value(start + i)`.
    pub fn fill_values(&self, start: u64, out: &mut [Complex64]) {
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.value(start + i as u64);
        }
    }

    /// Fills `out[i]` with `code(start + i)`.
    pub fn fill_codes(&self, start: u64, out: &mut [u8]) {
        match &self.model {
            Model::Periodic(p) => {
                let q = p.len() as u64;
                let codes: Vec<u8> = p.iter().map(|&z| self.alphabet.code_of(z)).collect();
                for (i, slot) in out.iter_mut().enumerate() {
                    *slot = codes[((start + i as u64 - 1) % q) as usize];
                }
            }
            _ => {
                for (i, slot) in out.iter_mut().enumerate() {
                    *slot = self.code(start + i as u64);
                }
            }
        }
    }

    pub fn require_len(&self, needed: u64) -> Result<()> {
        if needed > self.len {
            Err(Error::TooShort {
                len: self.len,
                needed,
            })
        } else {
            Ok(())
        }
    }
}

fn sawin_value(d: &SawinData, n: u64) -> Complex64 {
    let block = d.starts.partition_point(|&s| s <= n) - 1;
    let offset = (n - d.starts[block]) as i128;
    let c = &d.coeffs[block * (d.degree as usize + 1)..(block + 1) * (d.degree as usize + 1)];
    let mut phase = 0.0;
    let mut power: i128 = 1;
    for &coef in c {
        phase += frac_mul(coef, power);
        power *= offset;
    }
    let phase = phase.fract();
    sign((std::f64::consts::TAU * phase).cos() <= 0.0)
}

fn ticker_value(d: &TickerData, n: u64) -> Complex64 {
    let idx = d.windows.partition_point(|&(first, _, _)| first <= n);
    if idx == 0 {
        return ZERO;
    }
    let (first, len, template) = d.windows[idx - 1];
    if n < first + len {
        d.library[template][(n - first) as usize]
    } else {
        ZERO
    }
}

/// `b(n) = λ(n)` on the sieve range.
pub fn make_liouville(table: Arc<SieveTable>) -> SymbolicSequence {
    SymbolicSequence {
        len: table.limit(),
        seed: 0,
        alphabet: Alphabet::signs(),
        label: "liouville".into(),
        model: Model::Liouville(table),
    }
}

/// `b(n) = pattern[(n − 1) mod q]`.
pub fn make_periodic(pattern: &[Complex64], len: u64) -> Result<SymbolicSequence> {
    if pattern.is_empty() {
        return Err(param("pattern", "empty periodic pattern"));
    }
    if pattern.iter().any(|z| z.norm() > 1.0 + 1e-12) {
        return Err(param("pattern", "entries must have modulus at most 1"));
    }
    let mut symbols: Vec<Complex64> = Vec::new();
    for &z in pattern {
        if !symbols.contains(&z) {
            symbols.push(z);
        }
    }
    let alphabet = if is_sign_set(&symbols) {
        Alphabet::signs()
    } else {
        Alphabet::Finite(symbols)
    };
    Ok(SymbolicSequence {
        len,
        seed: 0,
        alphabet,
        label: format!("periodic-{}", pattern.len()),
        model: Model::Periodic(Arc::new(pattern.to_vec())),
    })
}

fn is_sign_set(symbols: &[Complex64]) -> bool {
    symbols.iter().all(|&z| z == ONE || z == MINUS_ONE)
}

/// Rotation coding `b(n) = 2(⌊(n+1)α⌋ − ⌊nα⌋) − 1`.
pub fn make_sturmian(alpha: f64, len: u64) -> Result<SymbolicSequence> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(param("alpha", format!("{alpha} not in (0, 1)")));
    }
    Ok(SymbolicSequence {
        len,
        seed: 0,
        alphabet: Alphabet::signs(),
        label: format!("sturmian-{alpha}"),
        model: Model::Sturmian(alpha),
    })
}

/// `b(n) = e(αn² + βn)`.
pub fn make_quadratic_phase(alpha: f64, beta: f64, len: u64) -> SymbolicSequence {
    SymbolicSequence {
        len,
        seed: 0,
        alphabet: Alphabet::UnitCircle,
        label: format!("quadratic-{alpha}-{beta}"),
        model: Model::QuadraticPhase(alpha, beta),
    }
}

/// `b(n) = (−1)^{s₂(n)}` with `s₂` the binary digit sum.
pub fn make_thue_morse(len: u64) -> SymbolicSequence {
    SymbolicSequence {
        len,
        seed: 0,
        alphabet: Alphabet::signs(),
        label: "thue-morse".into(),
        model: Model::ThueMorse,
    }
}

/// Independent uniform ±1 values.
pub fn make_random_signs(len: u64, seed: u64) -> SymbolicSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words = (len as usize >> 6) + 1;
    let bits: Vec<u64> = (0..words).map(|_| rng.gen()).collect();
    SymbolicSequence {
        len,
        seed,
        alphabet: Alphabet::signs(),
        label: "random-signs".into(),
        model: Model::RandomSigns(Arc::new(bits)),
    }
}

/// Block-random polynomial phase model.
///
/// `[1, len]` is cut into consecutive blocks, the block starting at `s` having
/// length `rule.length_at(s)`. Each block draws coefficients
/// `c₀, …, c_degree` uniformly from `[0, 1)`, and the output at offset `u`
/// from the block start is `+1` if `cos(2π Σ c_j u^j) > 0` and `−1` otherwise.
pub fn make_sawin_model(
    degree: u32,
    rule: &BlockRule,
    seed: u64,
    len: u64,
) -> Result<SymbolicSequence> {
    if !(1..=4).contains(&degree) {
        return Err(param("degree", format!("{degree} not in 1..=4")));
    }
    if len == 0 {
        return Err(param("len", "empty sequence"));
    }
    let root = (len as f64).sqrt().floor().max(2.0) as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = Vec::new();
    let mut coeffs = Vec::new();
    let mut s = 1u64;
    let mut prev_len = 0u64;
    while s <= len {
        let l = rule.length_at(s);
        if l == 0 {
            return Err(param("block_rule", format!("zero-length block at {s}")));
        }
        if l < prev_len {
            return Err(param("block_rule", format!("block lengths decrease at {s}")));
        }
        if l > root {
            return Err(param(
                "block_rule",
                format!("block length {l} at {s} exceeds sqrt(len) = {root}"),
            ));
        }
        starts.push(s);
        for _ in 0..=degree {
            coeffs.push(rng.gen::<f64>());
        }
        prev_len = l;
        s += l;
    }
    Ok(SymbolicSequence {
        len,
        seed,
        alphabet: Alphabet::signs(),
        label: format!("sawin-{degree}"),
        model: Model::Sawin(Arc::new(SawinData {
            degree,
            starts,
            coeffs,
        })),
    })
}

/// Ticker tape: `ψ(n + h) = template(h)` on each scheduled window, 0 elsewhere.
pub fn make_ticker_tape(schedule: &TickerTapeSchedule, len: u64) -> Result<SymbolicSequence> {
    schedule.validate()?;
    let mut windows: Vec<(u64, u64, usize)> = schedule
        .scales
        .iter()
        .flat_map(|sc| sc.windows.iter().map(move |&(n, t)| (n + 1, sc.window, t)))
        .collect();
    windows.sort_unstable();
    let mut symbols = vec![ZERO];
    for t in &schedule.library {
        for &z in t {
            if !symbols.contains(&z) {
                symbols.push(z);
            }
        }
    }
    let alphabet = if symbols.iter().all(|&z| z == ZERO || z == ONE || z == MINUS_ONE) {
        Alphabet::ternary()
    } else if symbols.len() <= 256 {
        Alphabet::Finite(symbols)
    } else {
        Alphabet::UnitDisk
    };
    Ok(SymbolicSequence {
        len,
        seed: 0,
        alphabet,
        label: "ticker-tape".into(),
        model: Model::TickerTape(Arc::new(TickerData {
            windows,
            library: schedule.library.clone(),
        })),
    })
}

/// Writes `n,value_re,value_im` rows for `n = 1..=len`.
pub fn write_csv<W: Write>(seq: &SymbolicSequence, len: u64, mut w: W) -> Result<()> {
    seq.require_len(len)?;
    let io = |e: std::io::Error| param("output", e.to_string());
    writeln!(w, "n,value_re,value_im").map_err(io)?;
    for n in 1..=len {
        let z = seq.value(n);
        writeln!(w, "{n},{},{}", z.re, z.im).map_err(io)?;
    }
    Ok(())
}

/// One signed byte per term (`+1 → 0x01`, `−1 → 0xff`, `0 → 0x00`) for
/// sequences over a subset of `{−1, 0, 1}`.
pub fn write_signed_bytes<W: Write>(seq: &SymbolicSequence, len: u64, mut w: W) -> Result<()> {
    seq.require_len(len)?;
    if !seq.alphabet().is_signed_unit() {
        return Err(param("format", "signed-byte export needs a ±1/0 alphabet"));
    }
    let bytes: Vec<u8> = (1..=len).map(|n| seq.value(n).re as i8 as u8).collect();
    w.write_all(&bytes).map_err(|e| param("output", e.to_string()))
}

/// A subset of the circle `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub enum FrequencySet {
    /// The points `j / resolution`, `0 ≤ j < resolution`.
    Grid(usize),
    /// Sorted disjoint half-open intervals inside `[0, 1)`.
    Cover(Vec<(f64, f64)>),
    List(Vec<f64>),
}

impl FrequencySet {
    /// The whole circle as a one-interval cover.
    pub fn full_circle() -> Self {
        FrequencySet::Cover(vec![(0.0, 1.0)])
    }

    pub fn cover(mut intervals: Vec<(f64, f64)>) -> Result<Self> {
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (i, &(lo, hi)) in intervals.iter().enumerate() {
            if !(0.0..1.0).contains(&lo) || hi > 1.0 || hi < lo {
                return Err(param("cover", format!("interval [{lo}, {hi}) not in [0, 1)")));
            }
            if i > 0 && intervals[i - 1].1 > lo {
                return Err(param("cover", "intervals overlap"));
            }
        }
        Ok(FrequencySet::Cover(intervals))
    }

    pub fn grid(resolution: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(param("resolution", "grid resolution must be positive"));
        }
        Ok(FrequencySet::Grid(resolution))
    }

    pub fn is_empty(&self) -> bool {
        match self {
            FrequencySet::Grid(r) => *r == 0,
            FrequencySet::Cover(c) => c.is_empty(),
            FrequencySet::List(l) => l.is_empty(),
        }
    }

    pub fn intervals(&self) -> Option<&[(f64, f64)]> {
        match self {
            FrequencySet::Cover(c) => Some(c),
            _ => None,
        }
    }

    /// Total length of a cover; 0 for finite sets.
    pub fn measure(&self) -> f64 {
        match self {
            FrequencySet::Cover(c) => c.iter().map(|(a, b)| b - a).sum(),
            _ => 0.0,
        }
    }

    pub fn contains(&self, alpha: f64) -> bool {
        match self {
            FrequencySet::Grid(r) => {
                let x = alpha * *r as f64;
                (x - x.round()).abs() < 1e-12
            }
            FrequencySet::Cover(c) => c.iter().any(|&(a, b)| a <= alpha && alpha < b),
            FrequencySet::List(l) => l.contains(&alpha),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            FrequencySet::Grid(r) => format!("grid-{r}"),
            FrequencySet::Cover(c) => format!("cover-{}", c.len()),
            FrequencySet::List(l) => format!("list-{}", l.len()),
        }
    }
}

/// Self-similar Cantor set to be covered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CantorSpec {
    MiddleThirds,
    /// Keep the outer `ratio` fraction at both ends of every interval.
    Ratio(f64),
    /// A single point.
    Point(f64),
}

/// Upper bound factor in `#intervals ≤ COVER_CONSTANT · (k/ε′)^d`.
pub const CANTOR_COVER_CONSTANT: f64 = 2.0;

impl CantorSpec {
    fn ratio(&self) -> Result<f64> {
        match *self {
            CantorSpec::MiddleThirds => Ok(1.0 / 3.0),
            CantorSpec::Ratio(r) if r > 0.0 && r < 0.5 => Ok(r),
            CantorSpec::Ratio(r) => Err(param("ratio", format!("{r} not in (0, 1/2)"))),
            CantorSpec::Point(_) => Ok(0.0),
        }
    }

    /// Box dimension `log 2 / log(1/r)`; 0 for a point.
    pub fn dimension(&self) -> Result<f64> {
        match self {
            CantorSpec::Point(_) => Ok(0.0),
            _ => Ok(2f64.ln() / (1.0 / self.ratio()?).ln()),
        }
    }

    /// The `2^depth` intervals of the `depth`-th construction stage.
    pub fn stage(&self, depth: u32) -> Result<FrequencySet> {
        if let CantorSpec::Point(x) = *self {
            return point_cover(x, 0.0);
        }
        let r = self.ratio()?;
        if *self == CantorSpec::MiddleThirds {
            // Integer numerators over 3^depth keep endpoints exact to rounding.
            let denom = 3u64.pow(depth) as f64;
            let mut lefts: Vec<u64> = vec![0];
            for level in 0..depth {
                let step = 2 * 3u64.pow(depth - level - 1);
                lefts = lefts.iter().flat_map(|&a| [a, a + step]).collect();
            }
            return Ok(FrequencySet::Cover(
                lefts
                    .into_iter()
                    .map(|a| (a as f64 / denom, (a + 1) as f64 / denom))
                    .collect(),
            ));
        }
        let mut intervals = vec![(0.0f64, 1.0f64)];
        for _ in 0..depth {
            intervals = intervals
                .iter()
                .flat_map(|&(a, b)| {
                    let l = (b - a) * r;
                    [(a, a + l), (b - l, b)]
                })
                .collect();
        }
        Ok(FrequencySet::Cover(intervals))
    }
}

fn point_cover(x: f64, width: f64) -> Result<FrequencySet> {
    if !(0.0..1.0).contains(&x) {
        return Err(param("point", format!("{x} not in [0, 1)")));
    }
    let hi = (x + width.max(f64::EPSILON)).min(1.0);
    Ok(FrequencySet::Cover(vec![(x, hi)]))
}

/// Cover of a Cantor set by intervals of length at most `eps_prime / k`: the
/// first construction stage whose intervals are that short.
pub fn make_cantor_cover(spec: CantorSpec, k: u64, eps_prime: f64) -> Result<FrequencySet> {
    if !(eps_prime > 0.0 && eps_prime < 1.0 + f64::EPSILON) {
        return Err(param("eps_prime", format!("{eps_prime} not in (0, 1]")));
    }
    if k == 0 {
        return Err(param("k", "k must be positive"));
    }
    let target = eps_prime / k as f64;
    if let CantorSpec::Point(x) = spec {
        return point_cover(x, target);
    }
    let r = spec.ratio()?;
    let mut depth = 0u32;
    let mut length = 1.0f64;
    // Small relative slack so exact powers such as 3^-3 = 1/27 are accepted.
    while length > target * (1.0 + 1e-12) {
        length *= r;
        depth += 1;
    }
    spec.stage(depth)
}

/// Applies `D_n` `repetitions` times: each interval of length `L` loses a
/// centered ball of diameter `L/n`, leaving two intervals of length
/// `L(n−1)/(2n)`.
pub fn apply_dn(cover: &FrequencySet, n: u64, repetitions: u32) -> Result<FrequencySet> {
    if n < 2 {
        return Err(param("n", format!("{n} < 2")));
    }
    let mut intervals = cover
        .intervals()
        .ok_or_else(|| param("cover", "D_n needs an interval cover"))?
        .to_vec();
    let keep = (n as f64 - 1.0) / (2.0 * n as f64);
    for _ in 0..repetitions {
        intervals = intervals
            .iter()
            .flat_map(|&(a, b)| {
                let l = (b - a) * keep;
                [(a, a + l), (b - l, b)]
            })
            .collect();
    }
    Ok(FrequencySet::Cover(intervals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::build_sieve;
    use std::collections::HashSet;

    fn distinct_words(seq: &SymbolicSequence, k: u64, n: u64) -> usize {
        (1..=n - k)
            .map(|i| (1..=k).map(|h| seq.code(i + h)).collect::<Vec<_>>())
            .collect::<HashSet<_>>()
            .len()
    }

    #[test]
    fn liouville_values() {
        let t = Arc::new(build_sieve(100).unwrap());
        let s = make_liouville(t);
        assert_eq!(s.value(2), MINUS_ONE);
        assert_eq!(s.value(9), ONE);
        assert_eq!(s.value(30), MINUS_ONE);
    }

    #[test]
    fn periodic_values_and_errors() {
        let s = make_periodic(&[ONE], 10).unwrap();
        assert!((1..=10).all(|n| s.value(n) == ONE));
        let s = make_periodic(&[ONE, MINUS_ONE], 10).unwrap();
        assert_eq!(s.value(3), ONE);
        assert!(make_periodic(&[], 10).is_err());
        assert!(make_periodic(&[Complex64::new(2.0, 0.0)], 10).is_err());
    }

    #[test]
    fn periodic_word_count_equals_period() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        // A primitive word of length 6 (not a power of a shorter word).
        let pattern: Vec<Complex64> = loop {
            let p: Vec<Complex64> = (0..6).map(|_| sign(rng.gen::<bool>())).collect();
            let primitive = [1usize, 2, 3]
                .iter()
                .all(|&d| (0..6).any(|i| p[i] != p[(i + d) % 6]));
            if primitive {
                break p;
            }
        };
        let s = make_periodic(&pattern, 1000).unwrap();
        assert_eq!(distinct_words(&s, 10, 1000), 6);
    }

    #[test]
    fn sturmian_complexity() {
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let s = make_sturmian(phi, 100_000).unwrap();
        assert_eq!(distinct_words(&s, 1, 100_000), 2);
        assert_eq!(distinct_words(&s, 5, 100_000), 6);
        let half = make_sturmian(0.5, 1000).unwrap();
        assert_eq!(distinct_words(&half, 4, 1000), 2);
        assert!(make_sturmian(1.5, 10).is_err());
    }

    #[test]
    fn quadratic_phase_special_cases() {
        let c = make_quadratic_phase(0.0, 0.0, 50);
        assert!((1..=50).all(|n| (c.value(n) - ONE).norm() < 1e-15));
        let alt = make_quadratic_phase(0.0, 0.5, 50);
        for n in 1..=50u64 {
            let expect = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((alt.value(n).re - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn thue_morse_prefix() {
        let s = make_thue_morse(8);
        let v: Vec<i32> = (1..=8).map(|n| s.value(n).re as i32).collect();
        assert_eq!(v, vec![-1, -1, 1, -1, 1, 1, -1, -1]);
    }

    #[test]
    fn sawin_is_deterministic_and_signed() {
        let a = make_sawin_model(1, &BlockRule::Log2, 42, 20_000).unwrap();
        let b = make_sawin_model(1, &BlockRule::Log2, 42, 20_000).unwrap();
        let c = make_sawin_model(1, &BlockRule::Log2, 43, 20_000).unwrap();
        assert!((1..=20_000).all(|n| a.value(n) == b.value(n)));
        assert!((1..=20_000).any(|n| a.value(n) != c.value(n)));
        assert!((1..=20_000).all(|n| a.value(n) == ONE || a.value(n) == MINUS_ONE));
    }

    #[test]
    fn sawin_block_start_with_zero_phase_is_positive() {
        let data = SawinData {
            degree: 1,
            starts: vec![1, 5],
            coeffs: vec![0.0, 0.3, 0.0, 0.9],
        };
        assert_eq!(sawin_value(&data, 1), ONE);
        assert_eq!(sawin_value(&data, 5), ONE);
        // offset 1 in the first block: cos(2π·0.3) < 0
        assert_eq!(sawin_value(&data, 2), MINUS_ONE);
    }

    #[test]
    fn sawin_rejects_bad_rules() {
        let zero = BlockRule::Custom(Arc::new(|_| 0));
        assert!(make_sawin_model(1, &zero, 1, 100).is_err());
        let huge = BlockRule::Custom(Arc::new(|_| 50));
        assert!(make_sawin_model(1, &huge, 1, 100).is_err());
        assert!(make_sawin_model(5, &BlockRule::Log2, 1, 100).is_err());
    }

    #[test]
    fn ticker_tape_windows() {
        let empty = make_ticker_tape(&TickerTapeSchedule::default(), 100).unwrap();
        assert!((1..=100).all(|n| empty.value(n) == ZERO));

        let schedule = TickerTapeSchedule {
            scales: vec![TickerScale {
                range_end: 100,
                window: 4,
                windows: vec![(10, 0)],
            }],
            library: vec![vec![ONE; 4]],
        };
        let s = make_ticker_tape(&schedule, 100).unwrap();
        let support: Vec<u64> = (1..=100).filter(|&n| s.value(n) != ZERO).collect();
        assert_eq!(support, vec![11, 12, 13, 14]);

        let overlapping = TickerTapeSchedule {
            scales: vec![TickerScale {
                range_end: 100,
                window: 4,
                windows: vec![(10, 0), (12, 0)],
            }],
            library: vec![vec![ONE; 4]],
        };
        assert!(make_ticker_tape(&overlapping, 100).is_err());
    }

    #[test]
    fn export_formats() {
        let s = make_periodic(&[ONE, MINUS_ONE, ZERO], 6).unwrap();
        let mut bytes = Vec::new();
        write_signed_bytes(&s, 6, &mut bytes).unwrap();
        assert_eq!(bytes, vec![1, 0xff, 0, 1, 0xff, 0]);
        let mut csv = Vec::new();
        write_csv(&s, 2, &mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap(), "n,value_re,value_im\n1,1,0\n2,-1,0\n");
        let q = make_quadratic_phase(0.1, 0.2, 5);
        assert!(write_signed_bytes(&q, 5, &mut Vec::new()).is_err());
    }

    #[test]
    fn cantor_cover_counts() {
        for m in 0..8 {
            let c = CantorSpec::MiddleThirds.stage(m).unwrap();
            let iv = c.intervals().unwrap();
            assert_eq!(iv.len(), 1 << m);
            let len = 3f64.powi(-(m as i32));
            assert!(iv.iter().all(|(a, b)| ((b - a) - len).abs() <= 1e-15));
        }
        let c = make_cantor_cover(CantorSpec::MiddleThirds, 27, 1.0).unwrap();
        assert_eq!(c.intervals().unwrap().len(), 8);
        let p = make_cantor_cover(CantorSpec::Point(0.25), 10, 0.5).unwrap();
        assert_eq!(p.intervals().unwrap().len(), 1);
        assert!(make_cantor_cover(CantorSpec::Ratio(0.6), 10, 0.5).is_err());
    }

    #[test]
    fn cantor_cover_respects_dimension_bound() {
        for spec in [CantorSpec::MiddleThirds, CantorSpec::Ratio(0.2), CantorSpec::Ratio(0.45)] {
            let d = spec.dimension().unwrap();
            for k in [3u64, 10, 50, 200] {
                for eps in [0.1, 0.5, 1.0] {
                    let cover = make_cantor_cover(spec, k, eps).unwrap();
                    let iv = cover.intervals().unwrap();
                    assert!(iv.iter().all(|(a, b)| b - a <= eps / k as f64 * (1.0 + 1e-9)));
                    let bound = (CANTOR_COVER_CONSTANT * (k as f64 / eps).powf(d)).ceil();
                    assert!(iv.len() as f64 <= bound, "{spec:?} {k} {eps}: {} > {bound}", iv.len());
                }
            }
        }
    }

    #[test]
    fn dn_lengths() {
        let unit = FrequencySet::full_circle();
        let d2 = apply_dn(&unit, 2, 1).unwrap();
        assert_eq!(d2.intervals().unwrap(), &[(0.0, 0.25), (0.75, 1.0)]);
        let d3 = apply_dn(&unit, 3, 1).unwrap();
        let iv = d3.intervals().unwrap();
        assert!(iv.iter().all(|(a, b)| ((b - a) - 1.0 / 3.0).abs() < 1e-15));
        let d4 = apply_dn(&unit, 4, 5).unwrap();
        let iv = d4.intervals().unwrap();
        assert_eq!(iv.len(), 32);
        let expect = (3.0f64 / 8.0).powi(5);
        assert!(iv.iter().all(|(a, b)| ((b - a) - expect).abs() < 1e-15));
        assert!(FrequencySet::cover(iv.to_vec()).is_ok());
        assert!(apply_dn(&unit, 1, 1).is_err());
        assert!(apply_dn(&FrequencySet::Grid(4), 3, 1).is_err());
    }

    #[test]
    fn frequency_set_validation() {
        assert!(FrequencySet::grid(0).is_err());
        assert!(FrequencySet::cover(vec![(0.2, 0.5), (0.4, 0.6)]).is_err());
        assert!(FrequencySet::cover(vec![(0.5, 1.2)]).is_err());
        let c = FrequencySet::cover(vec![(0.5, 0.6), (0.1, 0.2)]).unwrap();
        assert_eq!(c.intervals().unwrap()[0], (0.1, 0.2));
    }
}
