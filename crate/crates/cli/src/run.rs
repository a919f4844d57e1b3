use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use sha2::{Digest, Sha256};

use signlab_core::arith::{build_sieve, SieveTable};
use signlab_core::correlators::{dilation_defect, local_fourier_stat, local_periodic_stat};
use signlab_core::info::{entropy_decrement_demo, mutual_information, JointHistogram, Weighting};
use signlab_core::logstats::default_scales;
use signlab_core::models::{self, BlockRule, CantorSpec, FrequencySet, SymbolicSequence};
use signlab_core::vinogradov::{count_vmv, prime_phase_sum};
use signlab_core::words::growth_sweep;
use signlab_core::Complex64;

use crate::config::*;
use crate::report::{Cell, Table};

/// Runs one config and writes its report (and config echo) to the
/// configured destination. Batch members run through here too.
pub fn run(config: &RunConfig) -> Result<Vec<u8>> {
    let bytes = render(config)?;
    emit(config, &bytes)?;
    Ok(bytes)
}

fn emit(config: &RunConfig, bytes: &[u8]) -> Result<()> {
    match &config.command.output().output {
        Some(path) => {
            fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
            let echo = echo_path(path);
            let mut text = serde_json::to_string_pretty(config)?;
            text.push('\n');
            fs::write(&echo, text).with_context(|| format!("cannot write {}", echo.display()))?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
        }
    }
    Ok(())
}

pub fn echo_path(report: &Path) -> PathBuf {
    let mut s = report.as_os_str().to_owned();
    s.push(".config.json");
    PathBuf::from(s)
}

fn render(config: &RunConfig) -> Result<Vec<u8>> {
    let format = config.command.output().format;
    let table = match &config.command {
        Command::Sieve(a) => sieve(a)?,
        Command::Words(a) => words(a)?,
        Command::Chowla(a) => chowla(a)?,
        Command::Fourier(a) => fourier(a)?,
        Command::Periodic(a) => periodic(a)?,
        Command::Vmv(a) => vmv(a)?,
        Command::PhaseSum(a) => phase_sum(a)?,
        Command::Entropy(a) => entropy(a)?,
        Command::Dilation(a) => dilation(a)?,
        Command::ModelExport(a) => return model_export(a),
        Command::Batch(a) => batch(a, config.threads)?,
    };
    Ok(table.render(format, config))
}

/// Loads the sieve from `cache` when it covers `limit`, otherwise builds it
/// (and refreshes the cache file if one was named).
fn load_sieve(limit: u64, cache: Option<&Path>) -> Result<Arc<SieveTable>> {
    if let Some(path) = cache {
        if path.exists() {
            let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
            let table = SieveTable::read_cache(BufReader::new(f))?;
            if table.limit() >= limit {
                return Ok(Arc::new(table));
            }
        }
    }
    let table = build_sieve(limit)?;
    if let Some(path) = cache {
        let f = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
        table.write_cache(BufWriter::new(f))?;
    }
    Ok(Arc::new(table))
}

fn signs(pattern: &str) -> Result<Vec<Complex64>> {
    pattern
        .chars()
        .map(|c| match c {
            '+' => Ok(Complex64::new(1.0, 0.0)),
            '-' => Ok(Complex64::new(-1.0, 0.0)),
            '0' => Ok(Complex64::new(0.0, 0.0)),
            _ => Err(anyhow!("pattern symbol {c:?} is not one of + - 0")),
        })
        .collect()
}

fn block_rule(spec: &str) -> Result<BlockRule> {
    if spec == "log2" {
        return Ok(BlockRule::Log2);
    }
    if let Some(e) = spec.strip_prefix("power:") {
        let e: f64 = e.parse().with_context(|| format!("bad exponent in {spec}"))?;
        if !(e > 0.0 && e <= 0.5) {
            bail!("block exponent {e} not in (0, 1/2]");
        }
        return Ok(BlockRule::Power(e));
    }
    bail!("unknown block rule {spec:?}; use log2 or power:EXP")
}

fn need<T>(v: Option<T>, flag: &str, model: &str) -> Result<T> {
    v.ok_or_else(|| anyhow!("model {model} needs --{flag}"))
}

fn build_model(m: &ModelArgs, len: u64) -> Result<SymbolicSequence> {
    Ok(match m.model {
        ModelId::Liouville => models::make_liouville(load_sieve(len, m.sieve_cache.as_deref())?),
        ModelId::Periodic => {
            models::make_periodic(&signs(need(m.pattern.as_deref(), "pattern", "periodic")?)?, len)?
        }
        ModelId::Sturmian => models::make_sturmian(need(m.alpha, "alpha", "sturmian")?, len)?,
        ModelId::Quadratic => models::make_quadratic_phase(
            need(m.alpha, "alpha", "quadratic")?,
            need(m.beta, "beta", "quadratic")?,
            len,
        ),
        ModelId::ThueMorse => models::make_thue_morse(len),
        ModelId::Random => models::make_random_signs(len, m.seed),
        ModelId::Sawin => models::make_sawin_model(m.degree, &block_rule(&m.block)?, m.seed, len)?,
    })
}

fn frequency_set(spec: &str) -> Result<FrequencySet> {
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let floats = |s: &str| -> Result<Vec<f64>> {
        s.split(',')
            .map(|x| x.trim().parse::<f64>().with_context(|| format!("bad number {x:?}")))
            .collect()
    };
    Ok(match kind {
        "full" => FrequencySet::full_circle(),
        "grid" => FrequencySet::grid(rest.parse().with_context(|| format!("bad grid size {rest:?}"))?)?,
        "cantor" => CantorSpec::MiddleThirds.stage(rest.parse().with_context(|| format!("bad depth {rest:?}"))?)?,
        "list" => FrequencySet::List(floats(rest)?),
        "intervals" => {
            let mut v = Vec::new();
            for part in rest.split(',') {
                let (a, b) = part
                    .split_once('-')
                    .ok_or_else(|| anyhow!("interval {part:?} is not a-b"))?;
                v.push((a.trim().parse()?, b.trim().parse()?));
            }
            FrequencySet::cover(v)?
        }
        _ => bail!("unknown frequency set {spec:?}"),
    })
}

fn max_of(list: &IntList) -> u64 {
    list.0.iter().copied().max().unwrap_or(0)
}

fn sieve(a: &SieveArgs) -> Result<Table> {
    let table = build_sieve(a.limit)?;
    if let Some(path) = &a.cache {
        let f = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
        let mut w = BufWriter::new(f);
        table.write_cache(&mut w)?;
        w.flush()?;
    }
    let mut primes = 0u64;
    let mut lambda_sum = 0i64;
    let mut mertens = 0i64;
    for n in 1..=a.limit {
        primes += table.is_prime(n) as u64;
        lambda_sum += table.liouville(n) as i64;
        mertens += table.mobius(n) as i64;
    }
    let mut t = Table::new(&["limit", "prime_count", "liouville_sum", "mertens"]);
    t.push(vec![a.limit.into(), primes.into(), lambda_sum.into(), mertens.into()]);
    Ok(t)
}

fn words(a: &WordsArgs) -> Result<Table> {
    let ks: Vec<usize> = a.k.0.iter().map(|&k| k as usize).collect();
    let seq = build_model(&a.model, a.n)?;
    let rows = growth_sweep(&seq, &ks, &default_scales(a.n), a.tau, a.eps)?;
    let mut t = Table::new(&["k", "raw_count", "positive_density_count", "eps_rounded_count", "tau", "eps"]);
    for r in rows {
        t.push(vec![
            r.k.into(),
            r.raw.into(),
            r.positive_density.into(),
            r.eps_rounded.into(),
            a.tau.into(),
            a.eps.into(),
        ]);
    }
    Ok(t)
}

fn chowla(a: &ChowlaArgs) -> Result<Table> {
    let table = load_sieve(a.n + max_of(&a.shifts), a.sieve_cache.as_deref())?;
    let v = signlab_core::correlators::chowla_correlation(&a.shifts.0, a.n, &table)?;
    let shifts: Vec<String> = a.shifts.0.iter().map(u64::to_string).collect();
    let mut t = Table::new(&["shifts", "N", "value"]);
    t.push(vec![shifts.join(";").into(), a.n.into(), v.into()]);
    Ok(t)
}

fn fourier(a: &FourierArgs) -> Result<Table> {
    let set = frequency_set(&a.set)?;
    let seq = build_model(&a.model, a.n + max_of(&a.h))?;
    let mut t = Table::new(&["H", "statistic", "error_bound", "N", "set_id"]);
    for &h in &a.h.0 {
        let s = local_fourier_stat(&seq, h, a.n, &set)?;
        t.push(vec![h.into(), s.value.into(), s.error_bound.into(), a.n.into(), set.describe().into()]);
    }
    Ok(t)
}

fn periodic(a: &PeriodicArgs) -> Result<Table> {
    let seq = build_model(&a.model, a.n + max_of(&a.h))?;
    let mut t = Table::new(&["H", "statistic", "error_bound", "N", "set_id"]);
    for &h in &a.h.0 {
        let v = local_periodic_stat(&seq, h, a.n, a.d)?;
        t.push(vec![h.into(), v.into(), 0.0.into(), a.n.into(), format!("periods<={}", a.d).into()]);
    }
    Ok(t)
}

fn vmv(a: &VmvArgs) -> Result<Table> {
    let mut t = Table::new(&["k", "s", "t", "total", "diagonal", "ratio_total_over_k_pow_t"]);
    for &k in &a.k.0 {
        let c = count_vmv(k, a.s, a.t)?;
        t.push(vec![
            k.into(),
            (a.s as u64).into(),
            (a.t as u64).into(),
            c.total.into(),
            c.diagonal.into(),
            c.ratio().into(),
        ]);
    }
    Ok(t)
}

fn phase_sum(a: &PhaseSumArgs) -> Result<Table> {
    let table = load_sieve(a.p, a.sieve_cache.as_deref())?;
    let s = prime_phase_sum(a.alpha, a.beta, a.d1, a.d2, a.p, &table)?;
    let mut t = Table::new(&["alpha", "beta", "d1", "d2", "P", "re", "im", "abs"]);
    t.push(vec![
        a.alpha.into(),
        a.beta.into(),
        a.d1.into(),
        a.d2.into(),
        a.p.into(),
        s.re.into(),
        s.im.into(),
        s.norm().into(),
    ]);
    Ok(t)
}

fn entropy(a: &EntropyArgs) -> Result<Table> {
    let table = load_sieve(a.n + a.m as u64, a.sieve_cache.as_deref())?;
    let lam = models::make_liouville(table);
    let demo = entropy_decrement_demo(&lam, a.m, &a.primes.0, a.n, f64::INFINITY)?;
    let mut t = Table::new(&["p", "m", "N", "I_nats", "H_window_nats"]);
    for row in demo.rows {
        let (i, h) = match a.weighting {
            WeightingArg::Log => (row.mutual_information, row.window_entropy),
            WeightingArg::Uniform => {
                let hist = JointHistogram::from_windows(&lam, a.m, row.p, a.n, Weighting::Uniform)?;
                (mutual_information(&hist)?, hist.entropy_x()?)
            }
        };
        t.push(vec![row.p.into(), row.m.into(), a.n.into(), i.into(), h.into()]);
    }
    Ok(t)
}

fn parse_sign_pattern(s: &str) -> Result<Vec<i8>> {
    s.chars()
        .map(|c| match c {
            '+' => Ok(1),
            '-' => Ok(-1),
            '0' => Ok(0),
            _ => Err(anyhow!("pattern symbol {c:?} is not + or -")),
        })
        .collect()
}

fn dilation(a: &DilationArgs) -> Result<Table> {
    let patterns: Vec<&str> = a.patterns.split(',').map(str::trim).collect();
    let longest = patterns.iter().map(|p| p.len() as u64).max().unwrap_or(0);
    let table = load_sieve(a.n + max_of(&a.p) * longest, a.sieve_cache.as_deref())?;
    let mut t = Table::new(&["pattern", "p", "N", "defect"]);
    for &p in &a.p.0 {
        for pat in &patterns {
            let d = dilation_defect(&table, &parse_sign_pattern(pat)?, p, a.n)?;
            t.push(vec![(*pat).into(), p.into(), a.n.into(), d.into()]);
        }
    }
    Ok(t)
}

fn model_export(a: &ModelExportArgs) -> Result<Vec<u8>> {
    let seq = build_model(&a.model, a.n)?;
    let mut buf = Vec::new();
    match a.encoding {
        Encoding::Csv => models::write_csv(&seq, a.n, &mut buf)?,
        Encoding::Bytes => {
            if a.out.output.is_none() {
                bail!("--encoding bytes needs --output");
            }
            models::write_signed_bytes(&seq, a.n, &mut buf)?
        }
    }
    Ok(buf)
}

fn batch(a: &BatchArgs, threads: Option<usize>) -> Result<Table> {
    let text = fs::read_to_string(&a.list)
        .with_context(|| format!("cannot read {}", a.list.display()))?;
    let configs: Vec<RunConfig> = serde_json::from_str(&text)
        .with_context(|| format!("{} is not a list of run configs", a.list.display()))?;
    let mut t = Table::new(&["index", "subcommand", "status", "message", "sha256"]);
    let mut failures = 0usize;
    for (i, mut cfg) in configs.into_iter().enumerate() {
        cfg.threads = cfg.threads.or(threads);
        let result = if matches!(cfg.command, Command::Batch(_)) {
            Err(anyhow!("nested batch runs are not supported"))
        } else if cfg.command.output().output.is_none() {
            // Members without an output path are summarized, not printed.
            render(&cfg)
        } else {
            run(&cfg)
        };
        let name = cfg.command.name();
        match result {
            Ok(bytes) => {
                let digest: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
                t.push(vec![(i as u64).into(), name.into(), "ok".into(), "".into(), digest.into()]);
            }
            Err(e) => {
                failures += 1;
                t.push(vec![
                    (i as u64).into(),
                    name.into(),
                    "failed".into(),
                    format!("{e:#}").into(),
                    Cell::Empty,
                ]);
            }
        }
    }
    if failures > 0 {
        return Err(BatchFailed { table: t, failures }.into());
    }
    Ok(t)
}

/// A batch whose summary is complete but some members failed.
#[derive(Debug)]
pub struct BatchFailed {
    pub table: Table,
    pub failures: usize,
}

impl std::fmt::Display for BatchFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} batch member(s) failed", self.failures)
    }
}

impl std::error::Error for BatchFailed {}

/// Writes a failed batch's summary before the error is reported.
pub fn emit_failed_batch(config: &RunConfig, failed: &BatchFailed) -> Result<()> {
    let bytes = failed.table.render(config.command.output().format, config);
    emit(config, &bytes)
}
