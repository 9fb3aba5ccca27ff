//! Seeded Monte-Carlo harness: configuration, scaling runs with exponent fits,
//! accuracy and equivalence runs, and the exhaustive verification suites.

use crate::det_sampling::{ds_build_classical, ds_build_quantum, ds_verify, periodicity_exact, periodicity_q, DeterministicSample};
use crate::error::{Error, Result};
use crate::lmsr_quantum::{basic_lmsr, exclusion_scan, improved_lmsr, proposition_scan, LemmaTally, LmsrPath};
use crate::oracle_model::{GuardStats, RngStream, Session};
use crate::pattern_match::{kmp_first, match_first_q, match_with_pattern, PatternInfo, Text};
use crate::q_subroutines::{q_minimum, q_search, CostModelConfig, SortedKeys};
use crate::sensitivity_lab::{bs_rotation_counterexamples, construct_raw, flipset_bound, lmsr0_raw, reduction_holds};
use crate::strings_core::{lmsr_booth, lmsr_bruteforce_raw, linear_period, sensitivity_of, CircularString, Sensitivity};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Emulated,
    Reference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: usize,
    pub n_grid: Vec<usize>,
    pub alpha: usize,
    pub c: f64,
    pub p_search: f64,
    pub flip_prob: f64,
    pub repetitions: usize,
    pub mode: Mode,
    pub output: Option<PathBuf>,
    pub workers: usize,
    /// Wall-clock seconds in outputs; off by default so reruns are byte-identical.
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let cm = CostModelConfig::default();
        Self {
            seed: 0,
            trials: 100,
            n_grid: vec![256, 1024, 4096],
            alpha: 2,
            c: cm.c,
            p_search: cm.p_search,
            flip_prob: cm.flip_prob,
            repetitions: cm.repetitions,
            mode: Mode::Emulated,
            output: None,
            workers: 1,
            timing: false,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    v.trim().parse::<T>().map_err(|e| Error::Parse(format!("{key}={v}: {e}")))
}

/// Accepts a comma list (`256,1024`) or a power-of-two range (`2^8..2^16:2`).
pub fn parse_grid(v: &str) -> Result<Vec<usize>> {
    let v = v.trim();
    if let Some((lo, rest)) = v.split_once("..") {
        let (hi, step) = rest.split_once(':').unwrap_or((rest, "1"));
        let exp = |t: &str| -> Result<u32> {
            let t = t.trim();
            let e = t.strip_prefix("2^").ok_or_else(|| Error::Parse(format!("range bound {t:?} must look like 2^k")))?;
            parse_num("n_grid", e)
        };
        let (lo, hi, step) = (exp(lo)?, exp(hi)?, parse_num::<u32>("n_grid", step)?);
        if step == 0 || lo > hi || hi > 40 {
            return Err(Error::Parse(format!("bad grid range {v:?}")));
        }
        return Ok((lo..=hi).step_by(step as usize).map(|e| 1usize << e).collect());
    }
    v.split(',').map(|t| parse_num("n_grid", t)).collect()
}

impl ExperimentConfig {
    /// Flat `key = value` lines with `#` comments, applied over the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse(format!("line {}: expected key=value", no + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse_num(key, v)?,
            "trials" => self.trials = parse_num(key, v)?,
            "n_grid" | "grid" => self.n_grid = parse_grid(v)?,
            "alpha" => self.alpha = parse_num(key, v)?,
            "c" | "C" => self.c = parse_num(key, v)?,
            "p_search" => self.p_search = parse_num(key, v)?,
            "flip_prob" => self.flip_prob = parse_num(key, v)?,
            "repetitions" => self.repetitions = parse_num(key, v)?,
            "mode" => {
                self.mode = match v {
                    "emulated" => Mode::Emulated,
                    "reference" => Mode::Reference,
                    _ => return Err(Error::Parse(format!("mode={v}: expected emulated|reference"))),
                }
            }
            "output" => self.output = Some(PathBuf::from(v)),
            "workers" => self.workers = parse_num(key, v)?,
            "timing" => self.timing = parse_num(key, v)?,
            _ => return Err(Error::Parse(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::OutOfRange("trials must be >= 1".into()));
        }
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::OutOfRange("n_grid must be nonempty and strictly ascending".into()));
        }
        if self.alpha < 2 {
            return Err(Error::AlphabetTooSmall(self.alpha));
        }
        self.cost_model().validate()
    }

    pub fn cost_model(&self) -> CostModelConfig {
        match self.mode {
            Mode::Reference => CostModelConfig { c: self.c, ..CostModelConfig::reference() },
            Mode::Emulated => CostModelConfig {
                c: self.c,
                p_search: self.p_search,
                reference_mode: false,
                flip_prob: self.flip_prob,
                repetitions: self.repetitions,
            },
        }
    }
}

/// Runs `f(0..k)` on `workers` threads; output is in index order regardless of the worker count.
pub fn run_indexed<T: Send>(workers: usize, k: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    if workers > 1 {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            return pool.install(|| crate::par_map(k, f));
        }
    }
    let _ = workers;
    (0..k).map(f).collect()
}

/// Input stream and algorithm stream of one trial.
fn trial_streams(seed: u64, grid_index: usize, trial: usize) -> (ChaCha8Rng, RngStream) {
    let id = ((grid_index as u64) << 40) | ((trial as u64) << 1);
    (RngStream::new(seed, id).rng(), RngStream::new(seed, id | 1))
}

fn random_string(rng: &mut ChaCha8Rng, n: usize, alpha: usize) -> Vec<u32> {
    (0..n).map(|_| rng.gen_range(0..alpha as u32)).collect()
}

/// Periodic string with a short random period dividing `n`; odd trials get one flipped position.
pub fn adversarial_string(rng: &mut ChaCha8Rng, n: usize, alpha: usize, perturb: bool) -> Vec<u32> {
    let cap = ((n as f64).sqrt() as usize).clamp(1, 8);
    let divisors: Vec<usize> = (1..=cap).filter(|d| n % d == 0).collect();
    let d = *divisors.choose(rng).expect("1 divides n");
    let base = random_string(rng, d, alpha);
    let mut s: Vec<u32> = (0..n).map(|i| base[i % d]).collect();
    if perturb && n > 1 {
        let i = rng.gen_range(0..n);
        s[i] = (s[i] + 1 + rng.gen_range(0..alpha as u32 - 1)) % alpha as u32;
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    LmsrWorst,
    LmsrAverage,
    PatternMatch,
    DetSampling,
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lmsr_worst" => Ok(Target::LmsrWorst),
            "lmsr_average" => Ok(Target::LmsrAverage),
            "pattern_match" => Ok(Target::PatternMatch),
            "det_sampling" => Ok(Target::DetSampling),
            _ => Err(Error::Parse(format!("unknown target {s:?} (lmsr_worst|lmsr_average|pattern_match|det_sampling)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRecord {
    pub n: usize,
    pub mean_q: f64,
    pub std_q: f64,
    pub success: f64,
    pub path_fast_frac: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub target: Target,
    pub records: Vec<ScalingRecord>,
    /// Least-squares slope of `ln mean_q` against `ln n`.
    pub exponent: f64,
    pub guards: GuardStats,
    pub config: ExperimentConfig,
}

pub const SCALING_CSV_HEADER: &str = "n,mean_q,std_q,success,path_fast_frac,seconds";

impl ScalingReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SCALING_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!("{},{},{},{},{},{}\n", r.n, r.mean_q, r.std_q, r.success, r.path_fast_frac, r.seconds));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Writes `path` (CSV) and `path` with a `.json` extension.
    pub fn write(&self, path: &Path) -> std::io::Result<PathBuf> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(SCALING_CSV_HEADER.split(','))?;
        for r in &self.records {
            w.write_record(&[
                r.n.to_string(),
                r.mean_q.to_string(),
                r.std_q.to_string(),
                r.success.to_string(),
                r.path_fast_frac.to_string(),
                r.seconds.to_string(),
            ])?;
        }
        w.flush()?;
        let side = path.with_extension("json");
        std::fs::write(&side, self.to_json())?;
        Ok(side)
    }
}

/// Least-squares slope of `y` on `x`.
pub fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let k = points.len() as f64;
    if points.len() < 2 {
        return f64::NAN;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

struct Trial {
    charged: u64,
    success: bool,
    fast: bool,
    guards: GuardStats,
}

fn scaling_trial(target: Target, cfg: &ExperimentConfig, gi: usize, n: usize, t: usize) -> Result<Trial> {
    let (mut rng, stream) = trial_streams(cfg.seed, gi, t);
    let mut sess = Session::new(stream, cfg.cost_model());
    let alpha = cfg.alpha;
    let (success, fast) = match target {
        Target::LmsrWorst | Target::LmsrAverage => {
            let s = if target == Target::LmsrWorst {
                adversarial_string(&mut rng, n, alpha, t % 2 == 1)
            } else {
                random_string(&mut rng, n, alpha)
            };
            let cs = CircularString::new(crate::strings_core::Alphabet::new(alpha)?, s)?;
            let run = if target == Target::LmsrWorst { basic_lmsr(&mut sess, &cs)? } else { improved_lmsr(&mut sess, &cs)? };
            (run.offset == lmsr_booth(cs.chars()), run.path == LmsrPath::Fast)
        }
        Target::PatternMatch => {
            let text = random_string(&mut rng, n, alpha);
            let m = ((n as f64).sqrt() as usize).clamp(4, n);
            let p = if t % 2 == 0 {
                let j = rng.gen_range(0..=n - m);
                text[j..j + m].to_vec()
            } else {
                random_string(&mut rng, m, alpha)
            };
            let r = match_first_q(&mut sess, &text, &p, "match")?;
            (r.first_occurrence == kmp_first(&text, &p), false)
        }
        Target::DetSampling => {
            let s = if t % 2 == 0 { random_string(&mut rng, n, alpha) } else { adversarial_string(&mut rng, n, alpha, true) };
            let b = ds_build_quantum(&mut sess, &s, "ds")?;
            (ds_verify(&s, &b.sample), false)
        }
    };
    Ok(Trial { charged: sess.charged_total(), success, fast, guards: sess.guards })
}

/// Mean charged cost per grid point and the fitted exponent.
pub fn run_scaling(cfg: &ExperimentConfig, target: Target) -> Result<ScalingReport> {
    cfg.validate()?;
    let mut records = Vec::with_capacity(cfg.n_grid.len());
    let mut guards = GuardStats::default();
    for (gi, &n) in cfg.n_grid.iter().enumerate() {
        if n < 4 {
            return Err(Error::OutOfRange(format!("grid point {n} below 4")));
        }
        let start = Instant::now();
        let trials = run_indexed(cfg.workers, cfg.trials, |t| scaling_trial(target, cfg, gi, n, t));
        let trials = trials.into_iter().collect::<Result<Vec<_>>>()?;
        let k = trials.len() as f64;
        let mean = trials.iter().map(|t| t.charged as f64).sum::<f64>() / k;
        let var = trials.iter().map(|t| (t.charged as f64 - mean).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
        for t in &trials {
            guards.merge(&t.guards);
        }
        records.push(ScalingRecord {
            n,
            mean_q: mean,
            std_q: var.sqrt(),
            success: trials.iter().filter(|t| t.success).count() as f64 / k,
            path_fast_frac: trials.iter().filter(|t| t.fast).count() as f64 / k,
            seconds: if cfg.timing { start.elapsed().as_secs_f64() } else { 0.0 },
        });
    }
    let pts: Vec<(f64, f64)> =
        records.iter().filter(|r| r.mean_q > 0.0).map(|r| ((r.n as f64).ln(), r.mean_q.ln())).collect();
    Ok(ScalingReport { target, exponent: fit_slope(&pts), records, guards, config: cfg.clone() })
}

/// Emulated algorithms whose success rate is measured by [`run_accuracy`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algo {
    Search,
    Minimum,
    DetSampling,
    Periodicity,
    Match,
    Basic,
    Improved,
}

impl Algo {
    pub const ALL: [Algo; 7] =
        [Algo::Search, Algo::Minimum, Algo::DetSampling, Algo::Periodicity, Algo::Match, Algo::Basic, Algo::Improved];
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_string(self).expect("serializes");
        f.write_str(s.trim_matches('"'))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRecord {
    pub algo: Algo,
    pub n: usize,
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    pub sigma: f64,
    pub guards: GuardStats,
}

impl AccuracyRecord {
    /// Rate at least `target - 3 sigma`, with sigma taken at the target rate.
    pub fn meets(&self, target: f64) -> bool {
        let sigma = (target * (1.0 - target) / self.trials as f64).sqrt();
        self.rate >= target - 3.0 * sigma
    }
}

fn accuracy_trial(algo: Algo, cfg: &CostModelConfig, seed: u64, n: usize, t: usize) -> Result<(bool, GuardStats)> {
    let (mut rng, stream) = trial_streams(seed, n, t);
    let mut sess = Session::new(stream, *cfg);
    let ok = match algo {
        Algo::Search => {
            let sols = rng.gen_range(1..=(n / 8).max(1));
            let mut marks = vec![false; n];
            for i in rand::seq::index::sample(&mut rng, n, sols) {
                marks[i] = true;
            }
            let r = q_search(&mut sess, n, |i| marks[i], 1, "search");
            r.found().is_some_and(|i| marks[i])
        }
        Algo::Minimum => {
            let keys: Vec<u64> = (0..n).map(|_| rng.gen_range(0..(4 * n) as u64)).collect();
            let sk = SortedKeys::new(keys);
            let j = q_minimum(&mut sess, &sk, 1, "min")?;
            sk.is_min(j)
        }
        Algo::DetSampling => {
            let s = if t % 2 == 0 { random_string(&mut rng, n, 2) } else { adversarial_string(&mut rng, n, 2, true) };
            ds_verify(&s, &ds_build_quantum(&mut sess, &s, "ds")?.sample)
        }
        Algo::Periodicity => {
            let s = if t % 2 == 0 { random_string(&mut rng, n, 2) } else { adversarial_string(&mut rng, n, 2, t % 4 == 3) };
            let ds = ds_build_classical(&s);
            periodicity_q(&mut sess, &s, &ds, "period")? == periodicity_exact(&s)
        }
        Algo::Match => {
            let text = random_string(&mut rng, n, 2);
            let m = 8.min(n);
            let p = if t % 2 == 0 {
                let j = rng.gen_range(0..=n - m);
                text[j..j + m].to_vec()
            } else {
                random_string(&mut rng, m, 2)
            };
            match_first_q(&mut sess, &text, &p, "match")?.first_occurrence == kmp_first(&text, &p)
        }
        Algo::Basic | Algo::Improved => {
            let s = if t % 2 == 0 { random_string(&mut rng, n, 2) } else { adversarial_string(&mut rng, n, 2, t % 4 == 3) };
            let cs = CircularString::binary(&s)?;
            let run = if algo == Algo::Basic { basic_lmsr(&mut sess, &cs)? } else { improved_lmsr(&mut sess, &cs)? };
            run.offset == lmsr_booth(&s)
        }
    };
    Ok((ok, sess.guards))
}

/// Success rate of one emulated algorithm over seeded trials.
pub fn run_accuracy(algo: Algo, cfg: &CostModelConfig, n: usize, trials: usize, seed: u64, workers: usize) -> Result<AccuracyRecord> {
    cfg.validate()?;
    let out = run_indexed(workers, trials, |t| accuracy_trial(algo, cfg, seed, n, t));
    let out = out.into_iter().collect::<Result<Vec<_>>>()?;
    let successes = out.iter().filter(|o| o.0).count();
    let mut guards = GuardStats::default();
    out.iter().for_each(|o| guards.merge(&o.1));
    let rate = successes as f64 / trials as f64;
    Ok(AccuracyRecord { algo, n, trials, successes, rate, sigma: (rate * (1.0 - rate) / trials as f64).sqrt(), guards })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceRecord {
    pub algo: Algo,
    pub instances: u64,
    pub mismatches: u64,
    pub first_mismatch: Option<String>,
    pub guards: GuardStats,
}

impl EquivalenceRecord {
    fn new(algo: Algo) -> Self {
        Self { algo, instances: 0, mismatches: 0, first_mismatch: None, guards: GuardStats::default() }
    }

    fn tally(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.instances += 1;
        if !ok {
            self.mismatches += 1;
            if self.first_mismatch.is_none() {
                self.first_mismatch = Some(what());
            }
        }
    }
}

fn bits(w: u64, n: usize) -> Vec<u32> {
    (0..n).map(|i| ((w >> i) & 1) as u32).collect()
}

/// Reference-mode agreement with the classical oracles: every binary string up to
/// `n_max` (every text/pattern pair for matching), plus `random` strings per size in `sizes`.
pub fn run_equivalence(n_max: usize, sizes: &[usize], random: usize, seed: u64) -> Result<Vec<EquivalenceRecord>> {
    let cfg = CostModelConfig::reference();
    let mut sess = Session::new(RngStream::new(seed, u64::MAX), cfg);
    let mut recs: Vec<EquivalenceRecord> =
        [Algo::Basic, Algo::Improved, Algo::Match, Algo::Periodicity, Algo::DetSampling].map(EquivalenceRecord::new).into();
    let check_string = |sess: &mut Session, recs: &mut [EquivalenceRecord], s: &[u32]| -> Result<()> {
        let truth = lmsr_bruteforce_raw(s);
        let cs = CircularString::binary(s)?;
        let b = basic_lmsr(sess, &cs)?.offset;
        recs[0].tally(b == truth, || format!("basic {s:?}: {b} vs {truth}"));
        let i = improved_lmsr(sess, &cs)?.offset;
        recs[1].tally(i == truth, || format!("improved {s:?}: {i} vs {truth}"));
        let ds = ds_build_quantum(sess, s, "ds")?.sample;
        recs[4].tally(ds_verify(s, &ds), || format!("sample {s:?}"));
        let d = periodicity_q(sess, s, &ds, "period")?;
        recs[3].tally(d == periodicity_exact(s), || format!("period {s:?}: {d:?}"));
        Ok(())
    };
    for n in 1..=n_max {
        for w in 0..1u64 << n {
            check_string(&mut sess, &mut recs, &bits(w, n))?;
        }
    }
    // exhaustive text/pattern pairs, the pattern's sample and period built once
    for m in 1..=n_max {
        for pw in 0..1u64 << m {
            let p = bits(pw, m);
            let info = if m >= 4 {
                let ds = ds_build_quantum(&mut sess, &p, "match/sample")?.sample;
                let period = periodicity_q(&mut sess, &p, &ds, "match/period")?;
                Some(PatternInfo { p: &p, ds, period })
            } else {
                None
            };
            for n in m..=n_max {
                for tw in 0..1u64 << n {
                    let t = bits(tw, n);
                    let got = match &info {
                        Some(pi) => match_with_pattern(&mut sess, &Text::linear(&t), pi, "match")?.first_occurrence,
                        None => match_first_q(&mut sess, &t, &p, "match")?.first_occurrence,
                    };
                    let want = kmp_first(&t, &p);
                    recs[2].tally(got == want, || format!("match t={t:?} p={p:?}: {got} vs {want}"));
                }
            }
        }
    }
    for &n in sizes {
        let mut rng = RngStream::new(seed, n as u64).rng();
        for k in 0..random {
            let s = if k % 2 == 0 { random_string(&mut rng, n, 2) } else { adversarial_string(&mut rng, n, 2, k % 4 == 3) };
            check_string(&mut sess, &mut recs, &s)?;
            let m = [4, 8, 16][k % 3].min(n);
            let p = if k % 2 == 0 {
                let j = rng.gen_range(0..=n - m);
                s[j..j + m].to_vec()
            } else {
                random_string(&mut rng, m, 2)
            };
            let got = match_first_q(&mut sess, &s, &p, "match")?.first_occurrence;
            let want = kmp_first(&s, &p);
            recs[2].tally(got == want, || format!("match n={n} p={p:?}: {got} vs {want}"));
        }
    }
    for r in recs.iter_mut() {
        r.guards = sess.guards;
    }
    Ok(recs)
}

/// Exhaustive lemma suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Exclusion,
    Proposition,
    Ricochet,
    Flipsets,
    BsRotation,
    Ds,
    Reduction,
}

impl Suite {
    pub const ALL: [Suite; 7] =
        [Suite::Exclusion, Suite::Proposition, Suite::Ricochet, Suite::Flipsets, Suite::BsRotation, Suite::Ds, Suite::Reduction];

    /// Default size bound, as used by the acceptance suite.
    pub fn default_n(self) -> usize {
        match self {
            Suite::Exclusion => 14,
            Suite::Proposition | Suite::Ricochet | Suite::Flipsets | Suite::Ds => 12,
            Suite::BsRotation => 8,
            Suite::Reduction => 16,
        }
    }

    /// Largest accepted size bound.
    pub fn cap(self) -> usize {
        match self {
            Suite::Exclusion => 16,
            Suite::Proposition => 16,
            Suite::Ricochet => 12,
            Suite::Flipsets => 14,
            Suite::BsRotation => 10,
            Suite::Ds => 14,
            Suite::Reduction => 22,
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_str(&format!("\"{s}\"")).map_err(|_| {
            Error::Parse(format!("unknown suite {s:?} (exclusion|proposition|ricochet|flipsets|bs_rotation|ds|reduction)"))
        })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_string(self).expect("serializes");
        f.write_str(s.trim_matches('"'))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: Suite,
    pub max_n: usize,
    pub checked: u64,
    pub vacuous: u64,
    pub violations: u64,
    /// Up to ten counterexamples.
    pub counterexamples: Vec<String>,
    pub passed: bool,
}

const MAX_EXAMPLES: usize = 10;

struct Collector {
    tally: LemmaTally,
    examples: Vec<String>,
}

impl Collector {
    fn new() -> Self {
        Self { tally: LemmaTally::default(), examples: vec![] }
    }

    fn add(&mut self, t: LemmaTally, what: impl FnOnce() -> String) {
        if t.violations > 0 && self.examples.len() < MAX_EXAMPLES {
            self.examples.push(what());
        }
        self.tally.merge(&t);
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        let t = LemmaTally { checked: 1, vacuous: 0, violations: u64::from(!ok) };
        self.add(t, what);
    }
}

/// Ricochet conclusion for every consistent `j` of `t` (bit words, linear text).
fn ricochet_text(tw: u64, n: usize, pw: u64, m: usize, ds: &DeterministicSample, d: Option<usize>) -> LemmaTally {
    let mut t = LemmaTally::default();
    let mask = (1u64 << m) - 1;
    let last = n - m;
    let occ = |j: usize| (tw >> j) & mask == pw;
    let delta = ds.delta;
    for j in 0..=last {
        let consistent = ds
            .checkpoints
            .iter()
            .zip(&ds.ref_chars)
            .all(|(&i, &c)| j + i - delta < n && ((tw >> (j + i - delta)) & 1) as u32 == c);
        if !consistent {
            continue;
        }
        t.checked += 1;
        let lo = j.saturating_sub(delta);
        let hi = (j + m / 2).saturating_sub(delta).min(last + 1);
        let bad = (lo..hi).any(|jp| {
            let exempt = match d {
                Some(d) => jp.abs_diff(j) % d == 0,
                None => jp == j,
            };
            !exempt && occ(jp)
        });
        t.violations += u64::from(bad);
    }
    t
}

/// Validity, flipping, zero skips and the count bound for one string.
fn flipset_case(col: &mut Collector, x: &[u32]) {
    let n = x.len();
    let c = sensitivity_of(x);
    if c == Sensitivity::Infinite {
        col.tally.vacuous += 1;
        return;
    }
    // zero whenever C(x) > n/5, which covers every binary string below n = 20
    let bound = flipset_bound(n, c);
    let fam = construct_raw(x);
    let f0 = lmsr0_raw(x);
    let flips = fam.sets.iter().all(|s| {
        let mut z = x.to_vec();
        s.iter().for_each(|&j| z[j] ^= 1);
        lmsr0_raw(&z) != f0
    });
    let ok = fam.is_valid() && flips && fam.skipped == 0 && fam.len() >= bound;
    col.check(ok, || format!("{x:?}: family {} (skipped {}) bound {bound}", fam.len(), fam.skipped));
}

/// Flip-set checks on `samples` uniform binary strings with `n` drawn from `sizes`,
/// where the count bound is nonzero for most strings.
pub fn flipsets_sampled(samples: usize, sizes: std::ops::RangeInclusive<usize>, seed: u64) -> VerificationReport {
    let mut col = Collector::new();
    let mut rng = RngStream::new(seed, 0x_f11b).rng();
    let max_n = *sizes.end();
    for _ in 0..samples {
        let n = rng.gen_range(sizes.clone());
        flipset_case(&mut col, &random_string(&mut rng, n, 2));
    }
    VerificationReport {
        suite: Suite::Flipsets,
        max_n,
        checked: col.tally.checked,
        vacuous: col.tally.vacuous,
        violations: col.tally.violations,
        counterexamples: col.examples,
        passed: col.tally.violations == 0,
    }
}

/// Runs one exhaustive suite over binary strings up to `max_n`.
pub fn run_verification(suite: Suite, max_n: usize) -> Result<VerificationReport> {
    if max_n > suite.cap() {
        return Err(Error::CapExceeded { n: max_n, cap: suite.cap() });
    }
    let mut col = Collector::new();
    match suite {
        Suite::Exclusion | Suite::Proposition | Suite::Reduction => {
            for n in 1..=max_n {
                for w in 0..1u64 << n {
                    let s = bits(w, n);
                    match suite {
                        Suite::Exclusion => col.add(exclusion_scan(&s), || format!("{s:?}")),
                        Suite::Proposition => col.add(proposition_scan(&s), || format!("{s:?}")),
                        _ => col.check(reduction_holds(&s), || format!("{s:?}")),
                    }
                }
            }
        }
        Suite::Ricochet => {
            for m in 2..=max_n {
                for pw in 0..1u64 << m {
                    let p = bits(pw, m);
                    let ds = ds_build_classical(&p);
                    let d = linear_period(&p);
                    let d = (2 * d <= m).then_some(d);
                    for n in m..=max_n {
                        for tw in 0..1u64 << n {
                            col.add(ricochet_text(tw, n, pw, m, &ds, d), || format!("t={:?} p={p:?}", bits(tw, n)));
                        }
                    }
                }
            }
        }
        Suite::Flipsets => {
            for n in 1..=max_n {
                for w in 0..1u64 << n {
                    flipset_case(&mut col, &bits(w, n));
                }
            }
        }
        Suite::BsRotation => {
            for n in 1..=max_n {
                let bad = bs_rotation_counterexamples(n);
                col.tally.checked += 1u64 << n;
                col.tally.violations += bad.len() as u64;
                for (x, r, a, b) in bad.into_iter().take(MAX_EXAMPLES.saturating_sub(col.examples.len())) {
                    col.examples.push(format!("{x:?}: bs {a}, rotation by {r} has bs {b}"));
                }
            }
        }
        Suite::Ds => {
            let mut sess = Session::new(RngStream::new(0, 0), CostModelConfig::reference());
            for n in 1..=max_n {
                let lbound = (usize::BITS - 1 - n.leading_zeros()) as usize;
                for w in 0..1u64 << n {
                    let s = bits(w, n);
                    let c = ds_build_classical(&s);
                    col.check(ds_verify(&s, &c) && c.len() <= lbound, || format!("classical {s:?}"));
                    let q = ds_build_quantum(&mut sess, &s, "ds")?.sample;
                    col.check(ds_verify(&s, &q), || format!("emulated {s:?}"));
                }
            }
        }
    }
    Ok(VerificationReport {
        suite,
        max_n,
        checked: col.tally.checked,
        vacuous: col.tally.vacuous,
        violations: col.tally.violations,
        counterexamples: col.examples,
        passed: col.tally.violations == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern_match::ricochet_check;

    #[test]
    fn config_parsing() {
        let cfg = ExperimentConfig::parse("seed = 7\n# comment\ntrials=3 # trailing\nn_grid=2^8..2^12:2\nmode=reference\n").unwrap();
        assert_eq!((cfg.seed, cfg.trials, cfg.mode), (7, 3, Mode::Reference));
        assert_eq!(cfg.n_grid, vec![256, 1024, 4096]);
        assert!(ExperimentConfig::parse("bogus=1").is_err());
        assert!(ExperimentConfig::parse("trials").is_err());
        let mut bad = ExperimentConfig::default();
        bad.n_grid = vec![64, 32];
        assert!(bad.validate().is_err());
        bad.n_grid = vec![];
        assert!(bad.validate().is_err());
        assert_eq!(parse_grid("16, 32").unwrap(), vec![16, 32]);
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [16.0f64, 64.0, 256.0].iter().map(|&n| (n.ln(), (5.0 * n.powf(0.75)).ln())).collect();
        assert!((fit_slope(&pts) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn reference_scaling_always_succeeds() {
        let mut cfg = ExperimentConfig { trials: 6, n_grid: vec![16, 64], mode: Mode::Reference, ..Default::default() };
        for target in [Target::LmsrWorst, Target::LmsrAverage, Target::PatternMatch, Target::DetSampling] {
            let r = run_scaling(&cfg, target).unwrap();
            assert!(r.records.iter().all(|x| x.success == 1.0), "{target:?}");
        }
        cfg.workers = 3;
        let a = run_scaling(&cfg, Target::LmsrWorst).unwrap();
        cfg.workers = 1;
        let b = run_scaling(&cfg, Target::LmsrWorst).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let cfg = ExperimentConfig { trials: 20, n_grid: vec![64, 256], ..Default::default() };
        let one = run_scaling(&cfg, Target::LmsrAverage).unwrap();
        let four = run_scaling(&ExperimentConfig { workers: 4, ..cfg.clone() }, Target::LmsrAverage).unwrap();
        assert_eq!(one.to_csv(), four.to_csv());
        assert_eq!(one.records, four.records);
    }

    #[test]
    fn adversarial_inputs_are_periodic_or_near() {
        let mut rng = RngStream::new(1, 1).rng();
        for n in [16usize, 64, 100] {
            let s = adversarial_string(&mut rng, n, 2, false);
            assert_eq!(sensitivity_of(&s), crate::strings_core::Sensitivity::Infinite);
        }
    }

    #[test]
    fn fast_ricochet_matches_direct_check() {
        for m in 2..=5usize {
            for pw in 0..1u64 << m {
                let p = bits(pw, m);
                let ds = ds_build_classical(&p);
                let d = linear_period(&p);
                let d = (2 * d <= m).then_some(d);
                for n in m..=8 {
                    for tw in 0..1u64 << n {
                        let t = bits(tw, n);
                        let fast = ricochet_text(tw, n, pw, m, &ds, d).violations == 0;
                        let slow = (0..=n - m).all(|j| ricochet_check(&t, &p, &ds, j));
                        assert_eq!(fast, slow);
                    }
                }
            }
        }
    }

    #[test]
    fn small_suites_pass() {
        for s in [Suite::Exclusion, Suite::Proposition, Suite::Ricochet, Suite::Flipsets, Suite::Ds, Suite::Reduction] {
            let r = run_verification(s, 8).unwrap();
            assert!(r.passed, "{s}: {:?}", r.counterexamples);
            assert!(r.checked > 0, "{s}: {r:?}");
        }
        assert!(run_verification(Suite::Ricochet, 13).is_err());
        assert_eq!("bs_rotation".parse::<Suite>().unwrap(), Suite::BsRotation);
    }

    #[test]
    fn sampled_flipsets_are_nonvacuous() {
        let r = flipsets_sampled(60, 25..=100, 3);
        assert!(r.passed, "{:?}", r.counterexamples);
        assert!(r.checked > 50);
    }

    #[test]
    fn bs_rotation_suite_reports_counterexamples() {
        let r = run_verification(Suite::BsRotation, 4).unwrap();
        assert!(!r.passed);
        assert!(!r.counterexamples.is_empty());
    }
}
