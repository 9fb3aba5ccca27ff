use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lmsr_core::apps::{bec_canonical, cycles_distinct, BecString, CycleSet, Engine};
use lmsr_core::det_sampling::{ds_build_classical, ds_build_quantum, ds_verify};
use lmsr_core::experiments::{run_scaling, run_verification, ExperimentConfig, Suite, Target};
use lmsr_core::lmsr_quantum::{basic_lmsr, improved_lmsr, LmsrRun};
use lmsr_core::oracle_model::{RngStream, Session};
use lmsr_core::pattern_match::{kmp_first, match_first_q};
use lmsr_core::sensitivity_lab::{sensitivity_distribution, SensitivityReport};
use lmsr_core::strings_core::{lmsr_booth, CircularString};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Emulated quantum LMSR, pattern matching and sensitivity experiments.
#[derive(Parser)]
#[command(name = "lmsr", version)]
struct Cli {
    /// Flat key=value config file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

/// Overrides shared by every command that runs emulated subroutines.
#[derive(Args, Clone, Default)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    /// emulated or reference
    #[arg(long)]
    mode: Option<String>,
    /// Query-cost constant C.
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    p_search: Option<f64>,
    #[arg(long)]
    flip_prob: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Minimal rotation of each input line.
    Solve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = SolveEngine::Improved)]
        engine: SolveEngine,
        #[command(flatten)]
        common: Common,
    },
    #[command(subcommand)]
    Experiment(Experiment),
    /// Exhaustive lemma suite over binary strings.
    Verify {
        #[arg(long)]
        suite: String,
        /// Largest length checked (suite default when omitted).
        #[arg(long)]
        max_n: Option<usize>,
    },
    /// First occurrence of a pattern in a text.
    Match {
        #[arg(long)]
        text: PathBuf,
        #[arg(long)]
        pattern: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Deterministic sample of each input line.
    Ds {
        #[arg(long)]
        input: PathBuf,
        /// Check each sample against its definition.
        #[arg(long)]
        verify: bool,
        /// Use the classical builder instead of the emulated one.
        #[arg(long)]
        classical: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Canonical boundary-edges code of each line (digits 1..6).
    Bec {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "classical")]
        engine: String,
        #[command(flatten)]
        common: Common,
    },
    /// Finds two cycles equal up to rotation.
    Automata {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "classical")]
        engine: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum Experiment {
    /// Charged-query scaling over an n grid, with a fitted exponent.
    Scaling {
        #[arg(long)]
        target: Option<String>,
        /// Comma list or 2^a..2^b[:step].
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        alpha: Option<usize>,
        #[arg(long)]
        workers: Option<usize>,
        /// CSV path; a JSON sidecar is written next to it. Stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Record wall-clock seconds (makes output run-dependent).
        #[arg(long)]
        timing: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Fraction of uniform strings with sensitivity at most a threshold.
    Sensitivity {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        alpha: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Threshold B; defaults to ceil(3 log2 n).
        #[arg(long)]
        threshold: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveEngine {
    Basic,
    Improved,
    Classical,
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            ExperimentConfig::parse(&text).with_context(|| format!("parsing config {}", p.display()))
        }
    }
}

fn apply(cfg: &mut ExperimentConfig, common: &Common) -> Result<()> {
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(m) = &common.mode {
        cfg.set("mode", m)?;
    }
    if let Some(c) = common.c {
        cfg.c = c;
    }
    if let Some(p) = common.p_search {
        cfg.p_search = p;
    }
    if let Some(f) = common.flip_prob {
        cfg.flip_prob = f;
    }
    cfg.cost_model().validate()?;
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Nonempty lines with their 1-based line numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).map(|(i, l)| (i + 1, l.trim()))
}

fn session(cfg: &ExperimentConfig, stream: u64) -> Session {
    Session::new(RngStream::new(cfg.seed, stream), cfg.cost_model())
}

fn run_json(run: &LmsrRun) -> Value {
    json!({
        "offset": run.offset,
        "path": run.path,
        "charged": run.charged,
        "ledger": run.ledger,
        "guards": run.guards,
    })
}

fn solve(input: &Path, engine: SolveEngine, cfg: &ExperimentConfig) -> Result<Value> {
    let text = read(input)?;
    let mut out = vec![];
    for (k, (no, line)) in lines(&text).enumerate() {
        let s = CircularString::parse_line(line, None).with_context(|| format!("{}:{no}", input.display()))?;
        let truth = lmsr_booth(&s.ranked());
        let mut sess = session(cfg, k as u64);
        let mut v = match engine {
            SolveEngine::Classical => json!({ "offset": truth, "path": "classical", "charged": s.len() }),
            SolveEngine::Basic => run_json(&basic_lmsr(&mut sess, &s)?),
            SolveEngine::Improved => run_json(&improved_lmsr(&mut sess, &s)?),
        };
        let offset = v["offset"].as_u64().expect("offset") as usize;
        v["line"] = json!(no);
        v["n"] = json!(s.len());
        v["rotation"] = json!(s.rotation(offset).chars());
        v["correct"] = json!(offset == truth);
        out.push(v);
    }
    Ok(Value::Array(out))
}

fn parse_engine(s: &str) -> Result<Engine> {
    Ok(s.parse::<Engine>()?)
}

fn print(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializes"));
}

fn run(cli: Cli) -> Result<ExitCode> {
    let mut cfg = load_config(cli.config.as_deref())?;
    match cli.cmd {
        Cmd::Solve { input, engine, common } => {
            apply(&mut cfg, &common)?;
            print(&solve(&input, engine, &cfg)?);
        }
        Cmd::Experiment(Experiment::Scaling { target, grid, trials, alpha, workers, output, timing, common }) => {
            apply(&mut cfg, &common)?;
            if let Some(g) = grid {
                cfg.set("n_grid", &g)?;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(a) = alpha {
                cfg.alpha = a;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            if let Some(o) = output {
                cfg.output = Some(o);
            }
            cfg.timing |= timing;
            let target: Target = target.as_deref().unwrap_or("lmsr_worst").parse()?;
            let report = run_scaling(&cfg, target)?;
            match &cfg.output {
                Some(p) => {
                    let side = report.write(p).with_context(|| format!("writing {}", p.display()))?;
                    eprintln!("wrote {} and {} (exponent {:.4})", p.display(), side.display(), report.exponent);
                }
                None => print!("{}", report.to_csv()),
            }
        }
        Cmd::Experiment(Experiment::Sensitivity { n, alpha, samples, threshold, seed }) => {
            let b = threshold.unwrap_or_else(|| (3.0 * (n.max(2) as f64).log2()).ceil() as usize);
            let r = sensitivity_distribution(n, alpha, b, samples, seed.unwrap_or(cfg.seed))?;
            println!("{}\n{}", SensitivityReport::CSV_HEADER, r.csv_row());
        }
        Cmd::Verify { suite, max_n } => {
            let suite: Suite = suite.parse()?;
            let r = run_verification(suite, max_n.unwrap_or_else(|| suite.default_n()))?;
            print(&serde_json::to_value(&r)?);
            if !r.passed {
                return Ok(ExitCode::from(2));
            }
        }
        Cmd::Match { text, pattern, common } => {
            apply(&mut cfg, &common)?;
            let t = CircularString::parse_line(&read(&text)?, None).with_context(|| format!("parsing {}", text.display()))?;
            let p = CircularString::parse_line(&read(&pattern)?, None)
                .with_context(|| format!("parsing {}", pattern.display()))?;
            let (t, p) = (t.chars().to_vec(), p.chars().to_vec());
            let mut sess = session(&cfg, 0);
            let r = match_first_q(&mut sess, &t, &p, "match")?;
            let mut v = serde_json::to_value(&r)?;
            v["expected"] = json!(kmp_first(&t, &p));
            v["guards"] = serde_json::to_value(sess.guards)?;
            print(&v);
        }
        Cmd::Ds { input, verify, classical, common } => {
            apply(&mut cfg, &common)?;
            let text = read(&input)?;
            let mut out = vec![];
            for (k, (no, line)) in lines(&text).enumerate() {
                let s = CircularString::parse_line(line, None).with_context(|| format!("{}:{no}", input.display()))?;
                let s = s.chars().to_vec();
                let mut v = if classical {
                    json!({ "sample": ds_build_classical(&s) })
                } else {
                    let mut sess = session(&cfg, k as u64);
                    let b = ds_build_quantum(&mut sess, &s, "ds")?;
                    json!({ "sample": b.sample, "rounds": b.rounds, "converged": b.converged, "charged": sess.charged_total() })
                };
                if verify {
                    let ds = serde_json::from_value(v["sample"].clone())?;
                    v["valid"] = json!(ds_verify(&s, &ds));
                }
                v["line"] = json!(no);
                out.push(v);
            }
            print(&Value::Array(out));
        }
        Cmd::Bec { input, engine, common } => {
            apply(&mut cfg, &common)?;
            let engine = parse_engine(&engine)?;
            let text = read(&input)?;
            let mut out = vec![];
            for (k, (no, line)) in lines(&text).enumerate() {
                let b = BecString::parse(line).with_context(|| format!("{}:{no}", input.display()))?;
                let mut sess = session(&cfg, k as u64);
                let mut v = serde_json::to_value(bec_canonical(&b, engine, &mut sess)?)?;
                v["line"] = json!(no);
                out.push(v);
            }
            print(&Value::Array(out));
        }
        Cmd::Automata { input, engine, common } => {
            apply(&mut cfg, &common)?;
            let engine = parse_engine(&engine)?;
            let cs = CycleSet::parse(&read(&input)?).with_context(|| format!("parsing {}", input.display()))?;
            print(&serde_json::to_value(cycles_distinct(&cs, engine, cfg.cost_model(), cfg.seed)?)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
