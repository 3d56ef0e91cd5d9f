//! Realization sweeps, aggregation and result files.
//!
//! Each `(N, realization)` pair owns one encoder drawn from its own ChaCha
//! stream, reused for every alpha on the grid. Realizations run on a rayon
//! pool but are collected in index order, and every mean is a pairwise sum in
//! that order, so output does not depend on the thread count.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clifford::CliffordTableau;
use crate::decoder::{resolve_target, sample_born, DecodedState, Decoder, ErrorModel, SolutionSet};
use crate::error::{Error, Result};
use crate::haar::{simulate_dense, DenseEncoder};
use crate::metrics::{magic_bound, participation_entropy, sre_many, MAX_SRE_QUBITS};
use crate::scaling::{adjacent_crossings, fit_collapse, level_crossing, CollapseFit, Curve};
use crate::theory::Ensemble;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Protocol {
    Forced { syndrome: u64 },
    /// One random syndrome of class `ell` per realization.
    Class { ell: usize },
    /// `draws = 0` sums over every syndrome exactly.
    Born { draws: usize },
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Protocol::Forced { syndrome } => write!(f, "forced:{syndrome}"),
            Protocol::Class { ell } => write!(f, "class:{ell}"),
            Protocol::Born { draws } => write!(f, "born:{draws}"),
        }
    }
}

impl FromStr for Protocol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = s.split_once(':').unwrap_or((s, ""));
        let num = |d: u64| -> Result<u64> {
            if arg.is_empty() {
                Ok(d)
            } else {
                arg.parse().map_err(|_| Error::Config(format!("bad protocol argument in `{s}`")))
            }
        };
        Ok(match name {
            "forced" => Protocol::Forced { syndrome: num(0)? },
            "class" => Protocol::Class { ell: num(1)? as usize },
            "born" => Protocol::Born { draws: num(0)? as usize },
            _ => return Err(Error::Config(format!("unknown protocol `{s}`"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    Fidelity,
    /// Unnormalized overlap `p F`.
    Numerator,
    BornProb,
    /// Relative variance of the numerator across realizations.
    NumeratorRelVar,
    /// Relative variance of the Born probability across realizations.
    BornRelVar,
    /// `E[m^2] / E[m]^2` of the numerator.
    NumeratorMomentRatio,
    Sre(u32),
    Pe(u32),
    /// Violations of the fidelity bound on `M_2`, over states with `F > 1/2`.
    BoundViolations,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Fidelity => f.write_str("fidelity"),
            Metric::Numerator => f.write_str("numerator"),
            Metric::BornProb => f.write_str("born_prob"),
            Metric::NumeratorRelVar => f.write_str("dm2"),
            Metric::BornRelVar => f.write_str("dp2"),
            Metric::NumeratorMomentRatio => f.write_str("m_ratio"),
            Metric::Sre(q) => write!(f, "sre{q}"),
            Metric::Pe(q) => write!(f, "pe{q}"),
            Metric::BoundViolations => f.write_str("bound_violations"),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fidelity" => Metric::Fidelity,
            "numerator" => Metric::Numerator,
            "born_prob" => Metric::BornProb,
            "dm2" => Metric::NumeratorRelVar,
            "dp2" => Metric::BornRelVar,
            "m_ratio" => Metric::NumeratorMomentRatio,
            "sre2" => Metric::Sre(2),
            "sre3" => Metric::Sre(3),
            "pe2" => Metric::Pe(2),
            "pe3" => Metric::Pe(3),
            "bound_violations" => Metric::BoundViolations,
            _ => return Err(Error::Config(format!("unknown metric `{s}`"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub ensemble: Ensemble,
    pub protocol: Protocol,
    pub n_list: Vec<usize>,
    pub rate: f64,
    pub alpha_grid: Vec<f64>,
    pub realizations: usize,
    pub seed: u64,
    pub metrics: Vec<Metric>,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::Config(format!("bad value `{s}` for {key}"))))
        .collect()
}

/// `a,b,c` or `lin:start:stop:count`.
pub fn parse_grid(v: &str) -> Result<Vec<f64>> {
    if let Some(rest) = v.strip_prefix("lin:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let bad = || Error::Config(format!("bad grid `{v}`"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let a: f64 = parts[0].parse().map_err(|_| bad())?;
        let b: f64 = parts[1].parse().map_err(|_| bad())?;
        let m: usize = parts[2].parse().map_err(|_| bad())?;
        if m < 2 {
            return Ok(vec![a]);
        }
        return Ok((0..m).map(|i| a + (b - a) * i as f64 / (m - 1) as f64).collect());
    }
    parse_list("alpha_grid", v)
}

impl ExperimentConfig {
    pub fn k_for(&self, n: usize) -> usize {
        (self.rate * n as f64).round() as usize
    }

    /// Parses a flat `key = value` file; `#` starts a comment.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut ensemble = None;
        let mut protocol = Protocol::Forced { syndrome: 0 };
        let mut n_list = None;
        let mut rate = 0.5;
        let mut alpha_grid = None;
        let mut realizations = 100;
        let mut seed = None;
        let mut metrics = vec![Metric::Fidelity];
        let mut output = None;
        let mut threads = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, val) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, val) = (key.trim(), val.trim());
            let bad = || Error::Config(format!("bad value `{val}` for {key}"));
            match key {
                "ensemble" => ensemble = Some(val.parse().map_err(|_| bad())?),
                "protocol" => protocol = val.parse()?,
                "n_list" => n_list = Some(parse_list(key, val)?),
                "rate" => rate = val.parse().map_err(|_| bad())?,
                "alpha_grid" => alpha_grid = Some(parse_grid(val)?),
                "realizations" => realizations = val.parse().map_err(|_| bad())?,
                "seed" => seed = Some(val.parse().map_err(|_| bad())?),
                "metrics" => metrics = parse_list(key, val)?,
                "output" => output = Some(PathBuf::from(val)),
                "threads" => threads = Some(val.parse().map_err(|_| bad())?),
                _ => return Err(Error::Config(format!("unknown key `{key}`"))),
            }
        }
        let cfg = ExperimentConfig {
            ensemble: ensemble.ok_or_else(|| Error::Config("missing ensemble".into()))?,
            protocol,
            n_list: n_list.ok_or_else(|| Error::Config("missing n_list".into()))?,
            rate,
            alpha_grid: alpha_grid.ok_or_else(|| Error::Config("missing alpha_grid".into()))?,
            realizations,
            seed: seed.ok_or_else(|| Error::Config("missing seed".into()))?,
            metrics,
            output,
            threads,
        };
        Ok(cfg)
    }

    pub fn to_kv(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        let mut s = format!(
            "ensemble = {}\nprotocol = {}\nn_list = {}\nrate = {}\nalpha_grid = {}\nrealizations = {}\nseed = {}\nmetrics = {}\n",
            self.ensemble,
            self.protocol,
            join(self.n_list.iter().map(|n| n.to_string()).collect()),
            self.rate,
            join(self.alpha_grid.iter().map(|a| a.to_string()).collect()),
            self.realizations,
            self.seed,
            join(self.metrics.iter().map(|m| m.to_string()).collect()),
        );
        if let Some(o) = &self.output {
            s += &format!("output = {}\n", o.display());
        }
        if let Some(t) = self.threads {
            s += &format!("threads = {t}\n");
        }
        s
    }

    fn needs_sre(&self) -> bool {
        self.metrics.iter().any(|m| matches!(m, Metric::Sre(_) | Metric::BoundViolations))
    }

    /// Configuration and budget checks, run before any sampling.
    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() || self.alpha_grid.is_empty() || self.metrics.is_empty() {
            return Err(Error::Config("n_list, alpha_grid and metrics must be nonempty".into()));
        }
        if self.realizations == 0 {
            return Err(Error::Config("realizations must be positive".into()));
        }
        if let Some(a) = self.alpha_grid.iter().find(|a| !(0.0..=std::f64::consts::PI).contains(*a)) {
            return Err(Error::Config(format!("alpha {a} outside [0, pi]")));
        }
        if self.realizations >= 1 << 24 || self.alpha_grid.len() >= 1 << 16 {
            return Err(Error::Budget("at most 2^24 realizations and 2^16 alpha points".into()));
        }
        for m in &self.metrics {
            if let Metric::Sre(q) | Metric::Pe(q) = m {
                if !(2..=3).contains(q) {
                    return Err(Error::Config(format!("metric {m} not supported")));
                }
            }
        }
        for &n in &self.n_list {
            let k = self.k_for(n);
            if k == 0 || k >= n {
                return Err(Error::Config(format!("rate {} gives k = {k} for N = {n}; need 0 < k < N", self.rate)));
            }
            if n > 64 {
                return Err(Error::Budget(format!("N = {n} exceeds 64")));
            }
            if self.needs_sre() && k > MAX_SRE_QUBITS {
                return Err(Error::Budget(format!("SRE needs k <= {MAX_SRE_QUBITS}, N = {n} gives k = {k}")));
            }
            if let Protocol::Forced { syndrome } = self.protocol {
                if n - k < 64 && syndrome >> (n - k) != 0 {
                    return Err(Error::Config(format!("syndrome {syndrome} has more than N - k = {} bits", n - k)));
                }
            }
            match (self.ensemble, self.protocol) {
                (Ensemble::Haar, Protocol::Forced { .. }) if n > 20 => {
                    return Err(Error::Budget(format!("Haar encoders need N <= 20, got {n}")));
                }
                (Ensemble::Haar, Protocol::Class { .. } | Protocol::Born { .. }) => {
                    return Err(Error::Config("Haar encoders support the forced protocol only".into()));
                }
                (Ensemble::Clifford, Protocol::Born { draws: 0 }) => {
                    if n > 30 {
                        return Err(Error::Budget(format!("exhaustive Born sums need N <= 30, got {n}")));
                    }
                    if self.metrics.iter().any(|m| *m != Metric::Fidelity) {
                        return Err(Error::Config("exhaustive Born sums report fidelity only".into()));
                    }
                }
                (Ensemble::Clifford, Protocol::Born { .. }) if n > 30 => {
                    return Err(Error::Budget(format!("Born sampling needs N <= 30, got {n}")));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub ensemble: String,
    pub protocol: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub k: usize,
    pub alpha: f64,
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
    pub seed: u64,
}

const DOMAIN_ENCODER: u64 = 1;
const DOMAIN_CLASS: u64 = 2;
const DOMAIN_BORN: u64 = 3;

/// Independent stream for `(domain, N, aux, realization)` under the master seed.
pub fn stream_rng(seed: u64, domain: u64, n: usize, aux: u64, realization: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(domain << 56 | (n as u64) << 48 | aux << 24 | realization as u64);
    rng
}

/// Values of one realization at one alpha.
#[derive(Clone, Copy, Debug, Default)]
struct Sample {
    present: bool,
    fid: Option<f64>,
    num: f64,
    p: f64,
    sre: [Option<f64>; 2],
    pe: [Option<f64>; 2],
    violations: u32,
    applicable: u32,
}

struct StateMetrics {
    sre: bool,
    pe: bool,
}

fn measure(st: &DecodedState, target: usize, want: &StateMetrics) -> Result<Sample> {
    let mut s = Sample { present: true, num: st.numerator(target), p: st.born_prob, fid: st.fidelity(target), ..Default::default() };
    if st.is_zero_branch() {
        return Ok(s);
    }
    let amps = &st.amplitudes;
    if want.sre {
        let m = sre_many(amps, &[2, 3])?;
        s.sre = [Some(m[0]), Some(m[1])];
        if let Some(b) = s.fid.and_then(magic_bound) {
            s.applicable = 1;
            s.violations = u32::from(m[0] > b + 1e-9);
        }
    }
    if want.pe {
        s.pe = [Some(participation_entropy(amps, 2)), Some(participation_entropy(amps, 3))];
    }
    Ok(s)
}

fn average(samples: &[Sample]) -> Sample {
    let n = samples.len() as f64;
    let mean_opt = |f: &dyn Fn(&Sample) -> Option<f64>| -> Option<f64> {
        let v: Vec<f64> = samples.iter().filter_map(f).collect();
        (!v.is_empty()).then(|| pairwise_sum(&v) / v.len() as f64)
    };
    Sample {
        present: true,
        fid: mean_opt(&|s| s.fid),
        num: pairwise_sum(&samples.iter().map(|s| s.num).collect::<Vec<_>>()) / n,
        p: pairwise_sum(&samples.iter().map(|s| s.p).collect::<Vec<_>>()) / n,
        sre: [mean_opt(&|s| s.sre[0]), mean_opt(&|s| s.sre[1])],
        pe: [mean_opt(&|s| s.pe[0]), mean_opt(&|s| s.pe[1])],
        violations: samples.iter().map(|s| s.violations).sum(),
        applicable: samples.iter().map(|s| s.applicable).sum(),
    }
}

fn forced_target(set: &SolutionSet, st: &DecodedState) -> usize {
    if set.syndrome() == 0 {
        return 0;
    }
    let (_, cands) = set.min_weight_targets();
    resolve_target(&st.amplitudes, &cands) as usize
}

/// Stream that draws the encoder of realization `r` at size `n`.
pub fn encoder_rng(seed: u64, n: usize, r: usize) -> ChaCha8Rng {
    stream_rng(seed, DOMAIN_ENCODER, n, 0, r)
}

fn clifford_realization(cfg: &ExperimentConfig, n: usize, r: usize, want: &StateMetrics) -> Result<Vec<Sample>> {
    let k = cfg.k_for(n);
    let mut rng = encoder_rng(cfg.seed, n, r);
    let tab = CliffordTableau::sample(n, &mut rng);
    let dec = Decoder::new(&tab, k)?;
    let ems: Vec<ErrorModel> = cfg.alpha_grid.iter().map(|&a| ErrorModel::new(a)).collect();
    match cfg.protocol {
        Protocol::Forced { syndrome } => match dec.solutions(syndrome)? {
            None => Ok(ems.iter().map(|_| Sample { present: true, ..Default::default() }).collect()),
            Some(set) => ems
                .iter()
                .map(|em| {
                    let st = set.state(em);
                    measure(&st, forced_target(&set, &st), want)
                })
                .collect(),
        },
        Protocol::Class { ell } => {
            let list = dec.class_syndrome_list(ell);
            if list.is_empty() {
                return Ok(vec![Sample::default(); ems.len()]);
            }
            let mut pick = stream_rng(cfg.seed, DOMAIN_CLASS, n, 0, r);
            let (s, cands) = &list[pick.random_range(0..list.len())];
            let set = dec.solutions(*s)?.expect("class syndromes are reachable");
            ems.iter()
                .map(|em| {
                    let st = set.state(em);
                    measure(&st, resolve_target(&st.amplitudes, cands) as usize, want)
                })
                .collect()
        }
        Protocol::Born { draws: 0 } => {
            let sweep = dec.born_sweep()?;
            Ok(ems.iter().map(|em| Sample { present: true, fid: Some(sweep.fidelity(em)), ..Default::default() }).collect())
        }
        Protocol::Born { draws } => ems
            .iter()
            .enumerate()
            .map(|(ai, em)| {
                let probs = dec.born_probabilities(em)?;
                let mut drng = stream_rng(cfg.seed, DOMAIN_BORN, n, ai as u64, r);
                let picks = sample_born(&probs, draws, &mut drng)?;
                let per: Vec<Sample> = picks
                    .iter()
                    .map(|&s| {
                        let set = dec.solutions(s)?.expect("sampled syndromes are reachable");
                        let st = set.state(em);
                        let t = if s == 0 { 0 } else { resolve_target(&st.amplitudes, &set.min_weight_targets().1) as usize };
                        measure(&st, t, want)
                    })
                    .collect::<Result<_>>()?;
                Ok(average(&per))
            })
            .collect(),
    }
}

fn haar_realization(cfg: &ExperimentConfig, n: usize, r: usize, want: &StateMetrics) -> Result<Vec<Sample>> {
    let k = cfg.k_for(n);
    let Protocol::Forced { syndrome } = cfg.protocol else {
        return Err(Error::Config("Haar encoders support the forced protocol only".into()));
    };
    let mut rng = encoder_rng(cfg.seed, n, r);
    let enc = DenseEncoder::haar_columns(n, k, &[syndrome], &mut rng)?;
    cfg.alpha_grid
        .iter()
        .map(|&a| {
            let st = simulate_dense(&enc, k, syndrome, &ErrorModel::new(a))?;
            measure(&st, 0, want)
        })
        .collect()
}

/// Pairwise summation in slice order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Mean and standard error of the mean.
pub fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let m = pairwise_sum(v) / n as f64;
    if n < 2 {
        return (m, f64::NAN);
    }
    let var = pairwise_sum(&v.iter().map(|x| (x - m).powi(2)).collect::<Vec<_>>()) / (n - 1) as f64;
    (m, (var / n as f64).sqrt())
}

/// `Var(u) / E[u]^2` with a delta-method standard error.
pub fn relative_variance(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mu = pairwise_sum(v) / n;
    let dev: Vec<f64> = v.iter().map(|x| (x - mu).powi(2)).collect();
    let s2 = pairwise_sum(&dev) / (n - 1.0);
    let infl: Vec<f64> = v.iter().map(|x| ((x - mu).powi(2) - s2) / (mu * mu) - 2.0 * s2 * (x - mu) / mu.powi(3)).collect();
    (s2 / (mu * mu), mean_stderr(&infl).1)
}

/// `E[u^2] / E[u]^2` with a delta-method standard error.
pub fn moment_ratio(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mu = pairwise_sum(v) / n;
    let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
    let m2 = pairwise_sum(&sq) / n;
    let infl: Vec<f64> = v.iter().map(|x| (x * x - m2) / (mu * mu) - 2.0 * m2 * (x - mu) / mu.powi(3)).collect();
    (m2 / (mu * mu), mean_stderr(&infl).1)
}

/// Runs every `(N, alpha)` point of the configuration.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let want = StateMetrics {
        sre: cfg.needs_sre(),
        pe: cfg.metrics.iter().any(|m| matches!(m, Metric::Pe(_))),
    };
    let mut out = Vec::new();
    for &n in &cfg.n_list {
        let k = cfg.k_for(n);
        let per: Vec<Vec<Sample>> = pool.install(|| {
            (0..cfg.realizations)
                .into_par_iter()
                .map(|r| match cfg.ensemble {
                    Ensemble::Clifford => clifford_realization(cfg, n, r, &want),
                    Ensemble::Haar => haar_realization(cfg, n, r, &want),
                })
                .collect::<Result<Vec<_>>>()
        })?;
        for (ai, &alpha) in cfg.alpha_grid.iter().enumerate() {
            let col: Vec<Sample> = per.iter().map(|s| s[ai]).filter(|s| s.present).collect();
            for &m in &cfg.metrics {
                let vals = |f: &dyn Fn(&Sample) -> Option<f64>| col.iter().filter_map(f).collect::<Vec<f64>>();
                let (mean, stderr, count) = match m {
                    Metric::Fidelity => stats(&vals(&|s| s.fid)),
                    Metric::Numerator => stats(&vals(&|s| Some(s.num))),
                    Metric::BornProb => stats(&vals(&|s| Some(s.p))),
                    Metric::NumeratorRelVar => with_count(relative_variance, &vals(&|s| Some(s.num))),
                    Metric::BornRelVar => with_count(relative_variance, &vals(&|s| Some(s.p))),
                    Metric::NumeratorMomentRatio => with_count(moment_ratio, &vals(&|s| Some(s.num))),
                    Metric::Sre(q) => stats(&vals(&|s| s.sre[q as usize - 2])),
                    Metric::Pe(q) => stats(&vals(&|s| s.pe[q as usize - 2])),
                    Metric::BoundViolations => {
                        let v: u32 = col.iter().map(|s| s.violations).sum();
                        let a: u32 = col.iter().map(|s| s.applicable).sum();
                        (v as f64, 0.0, a as usize)
                    }
                };
                out.push(ResultRecord {
                    ensemble: cfg.ensemble.to_string(),
                    protocol: cfg.protocol.to_string(),
                    n,
                    k,
                    alpha,
                    metric: m.to_string(),
                    mean,
                    stderr,
                    count,
                    seed: cfg.seed,
                });
            }
        }
    }
    Ok(out)
}

fn stats(v: &[f64]) -> (f64, f64, usize) {
    let (m, e) = mean_stderr(v);
    (m, e, v.len())
}

fn with_count(f: fn(&[f64]) -> (f64, f64), v: &[f64]) -> (f64, f64, usize) {
    if v.len() < 2 {
        return (f64::NAN, f64::NAN, v.len());
    }
    let (m, e) = f(v);
    (m, e, v.len())
}

pub fn write_csv<W: Write>(records: &[ResultRecord], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in records {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

#[derive(Serialize)]
struct Sidecar<'a> {
    provenance: String,
    config: &'a str,
    records: usize,
}

/// Writes `records` to `path` and the configuration to `path` with a `.json` extension.
pub fn write_outputs(cfg: &ExperimentConfig, records: &[ResultRecord], path: &Path) -> Result<()> {
    write_csv(records, std::fs::File::create(path)?)?;
    let kv = cfg.to_kv();
    let side = Sidecar { provenance: format!("encdec {}", env!("CARGO_PKG_VERSION")), config: &kv, records: records.len() };
    std::fs::write(path.with_extension("json"), serde_json::to_string_pretty(&side)?)?;
    Ok(())
}

/// Curves of one metric, one per `N`, sorted by alpha.
pub fn curves_for(records: &[ResultRecord], metric: &str) -> Vec<Curve> {
    let mut ns: Vec<usize> = records.iter().filter(|r| r.metric == metric).map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    ns.into_iter()
        .filter_map(|n| {
            let mut pts: Vec<&ResultRecord> =
                records.iter().filter(|r| r.metric == metric && r.n == n && r.mean.is_finite()).collect();
            pts.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
            let err = pts.iter().map(|r| if r.stderr.is_finite() { r.stderr } else { 0.0 }).collect();
            Curve::new(n, pts.iter().map(|r| r.alpha).collect(), pts.iter().map(|r| r.mean).collect(), err).ok()
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisReport {
    pub metric: String,
    /// `(N_1, N_2, alpha_x)` for consecutive sizes.
    pub crossings: Vec<(usize, usize, Option<f64>)>,
    /// Where each curve passes `level`, if a level was given.
    pub level_crossings: Vec<(usize, Option<f64>)>,
    pub fit: CollapseFit,
}

/// Scaling ansatz: search ranges for the critical point and exponent.
#[derive(Clone, Copy, Debug)]
pub struct Ansatz {
    pub alpha_c: (f64, f64),
    pub nu: (f64, f64),
    pub bins: usize,
    pub level: Option<f64>,
}

pub fn analyze(records: &[ResultRecord], metric: &str, ansatz: &Ansatz) -> Result<AnalysisReport> {
    let curves = curves_for(records, metric);
    if curves.len() < 2 {
        return Err(Error::InvalidArgument(format!("metric `{metric}` has {} sizes; need at least 2", curves.len())));
    }
    let fit = fit_collapse(&curves, ansatz.alpha_c, ansatz.nu, ansatz.bins)?;
    Ok(AnalysisReport {
        metric: metric.into(),
        crossings: adjacent_crossings(&curves),
        level_crossings: ansatz.level.map_or(vec![], |l| curves.iter().map(|c| (c.n, level_crossing(c, l))).collect()),
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ExperimentConfig {
        ExperimentConfig::from_kv(
            "ensemble = clifford\nprotocol = forced\nn_list = 6, 8\nrate = 0.5\nalpha_grid = lin:0.2:1.8:5\nrealizations = 24\nseed = 7\nmetrics = fidelity,sre2,pe2,dm2,bound_violations\n",
        )
        .unwrap()
    }

    #[test]
    fn kv_roundtrip_and_errors() {
        let c = cfg();
        assert_eq!(ExperimentConfig::from_kv(&c.to_kv()).unwrap(), c);
        assert!(matches!(ExperimentConfig::from_kv("ensemble = clifford"), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::from_kv("bogus = 1"), Err(Error::Config(_))));
        let mut bad = c.clone();
        bad.rate = 0.01;
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let mut big = c.clone();
        big.n_list = vec![40];
        assert!(matches!(big.validate(), Err(Error::Budget(_))));
        let mut haar = c;
        haar.ensemble = Ensemble::Haar;
        haar.protocol = Protocol::Class { ell: 1 };
        assert!(matches!(haar.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn deterministic_across_threads() {
        let mut a = cfg();
        a.threads = Some(1);
        let mut b = cfg();
        b.threads = Some(3);
        let (ra, rb) = (run(&a).unwrap(), run(&b).unwrap());
        let (mut ca, mut cb) = (Vec::new(), Vec::new());
        write_csv(&ra, &mut ca).unwrap();
        write_csv(&rb, &mut cb).unwrap();
        assert_eq!(ca, cb);
        assert_eq!(ra.len(), 2 * 5 * 5);
    }

    #[test]
    fn relative_variance_of_known_sample() {
        let v = [1.0, 2.0, 3.0, 4.0];
        let (r, e) = relative_variance(&v);
        assert!((r - (5.0 / 3.0) / 6.25).abs() < 1e-15 && e > 0.0);
        let (m, _) = moment_ratio(&v);
        assert!((m - 7.5 / 6.25).abs() < 1e-15);
        assert_eq!(pairwise_sum(&(1..=100).map(f64::from).collect::<Vec<_>>()), 5050.0);
    }

    #[test]
    fn protocol_and_metric_names_roundtrip() {
        for p in ["forced:0", "forced:3", "class:2", "born:0", "born:16"] {
            assert_eq!(p.parse::<Protocol>().unwrap().to_string(), p);
        }
        for m in ["fidelity", "numerator", "born_prob", "dm2", "dp2", "m_ratio", "sre2", "sre3", "pe2", "pe3", "bound_violations"] {
            assert_eq!(m.parse::<Metric>().unwrap().to_string(), m);
        }
    }
}
