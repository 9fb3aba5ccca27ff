//! Acceptance suite: one PASS/FAIL line per criterion at the pinned tolerances.
//!
//! Set `LMSR_ACCEPTANCE_OUT` to keep the emitted CSV/JSON files; otherwise a
//! temporary directory is used.

use lmsr_core::experiments::{
    flipsets_sampled, run_accuracy, run_equivalence, run_scaling, run_verification, Algo, ExperimentConfig, Suite, Target,
};
use lmsr_core::oracle_model::{vote_on, vote_size, GuardStats, RngStream, Session};
use lmsr_core::q_subroutines::CostModelConfig;
use lmsr_core::sensitivity_lab::{sensitivity_distribution, SensitivityReport};
use std::path::{Path, PathBuf};
use std::time::Instant;

const SEED: u64 = 20240917;

struct Line {
    id: usize,
    pass: bool,
    /// Failure documented as unattainable; reported but not counted in the exit code.
    known: bool,
}

struct Suite9 {
    lines: Vec<Line>,
    guards: GuardStats,
    out: PathBuf,
    /// Reruns for the determinism check print nothing.
    quiet: bool,
}

impl Suite9 {
    fn report(&mut self, id: usize, pass: bool, known: bool, started: Instant, text: String) {
        if self.quiet {
            return;
        }
        let verdict = if pass { "PASS" } else if known { "FAIL (known)" } else { "FAIL" };
        println!("criterion {id}: {verdict} [{:.1}s] {text}", started.elapsed().as_secs_f64());
        self.lines.push(Line { id, pass, known });
    }
}

fn sigma(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Writes `name` under the output directory and returns its bytes.
fn emit(dir: &Path, name: &str, body: &str) -> Vec<u8> {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap_or_else(|e| panic!("writing {}: {e}", p.display()));
    std::fs::read(&p).expect("just written")
}

fn equivalence(s: &mut Suite9) -> String {
    let t = Instant::now();
    let recs = run_equivalence(12, &[64, 256], 1000, SEED).expect("equivalence run");
    let pass = recs.iter().all(|r| r.mismatches == 0);
    s.guards.merge(&recs[0].guards);
    let detail: Vec<String> =
        recs.iter().map(|r| format!("{}: {}/{} agree", r.algo, r.instances - r.mismatches, r.instances)).collect();
    let bad: Vec<String> = recs.iter().filter_map(|r| r.first_mismatch.clone()).collect();
    s.report(1, pass, false, t, format!("reference mode vs classical oracles; {}{}", detail.join(", "), if bad.is_empty() { String::new() } else { format!("; first mismatches {bad:?}") }));
    serde_json::to_string_pretty(&recs).expect("serializes")
}

fn bounded_error(s: &mut Suite9) -> String {
    let t = Instant::now();
    let cfg = CostModelConfig::stress();
    let trials = 10_000;
    let target = 2.0 / 3.0;
    let mut worst = (f64::INFINITY, String::new());
    let mut pass = true;
    let mut recs = vec![];
    for algo in Algo::ALL {
        for n in [64usize, 256] {
            let r = run_accuracy(algo, &cfg, n, trials, SEED, 1).expect("accuracy run");
            s.guards.merge(&r.guards);
            pass &= r.meets(target);
            if r.rate < worst.0 {
                worst = (r.rate, format!("{algo}@{n}"));
            }
            recs.push(r);
        }
    }
    let thr = target - 3.0 * sigma(target, trials);
    s.report(2, pass, false, t, format!("flip 1/3, p_search 2/3, {trials} trials: lowest rate {:.4} ({}) vs threshold {thr:.4}", worst.0, worst.1));
    serde_json::to_string_pretty(&recs).expect("serializes")
}

fn scaling_cfg(trials: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig { seed: SEED, trials, ..Default::default() };
    cfg.n_grid = vec![1 << 8, 1 << 10, 1 << 12, 1 << 14, 1 << 16];
    cfg
}

fn worst_case(s: &mut Suite9, trials: usize, id: Option<usize>) -> String {
    let t = Instant::now();
    let r = run_scaling(&scaling_cfg(trials), Target::LmsrWorst).expect("worst-case scaling");
    if let Some(id) = id {
        s.guards.merge(&r.guards);
        let ok = r.records.iter().all(|x| x.success >= 2.0 / 3.0);
        let pass = (0.70..=0.85).contains(&r.exponent) && ok;
        let succ: Vec<String> = r.records.iter().map(|x| format!("{:.3}", x.success)).collect();
        s.report(id, pass, false, t, format!("forced basic path, {trials} trials per n: exponent {:.4} in [0.70, 0.85]; success {}", r.exponent, succ.join("/")));
    }
    format!("{}{}", r.to_csv(), r.to_json())
}

fn average_case(s: &mut Suite9, trials: usize, id: Option<usize>) -> String {
    let t = Instant::now();
    let r = run_scaling(&scaling_cfg(trials), Target::LmsrAverage).expect("average-case scaling");
    if let Some(id) = id {
        s.guards.merge(&r.guards);
        let ratios: Vec<f64> = r.records.iter().map(|x| x.mean_q / ((x.n as f64).sqrt() * (x.n as f64).log2())).collect();
        let spread = ratios.iter().cloned().fold(f64::MIN, f64::max) / ratios.iter().cloned().fold(f64::MAX, f64::min);
        let fast_ok = r.records.iter().all(|x| {
            let p = 1.0 - 1.0 / x.n as f64;
            x.path_fast_frac >= p - 3.0 * sigma(p, trials)
        });
        let fr: Vec<String> = r.records.iter().map(|x| format!("{:.3}", x.path_fast_frac)).collect();
        s.report(
            id,
            spread < 2.0 && fast_ok,
            false,
            t,
            format!("uniform strings, {trials} trials per n: cost/(sqrt(n) log2 n) spread x{spread:.3} (< 2); fast-path fractions {}", fr.join("/")),
        );
    }
    format!("{}{}", r.to_csv(), r.to_json())
}

fn voting(s: &mut Suite9) -> String {
    let t = Instant::now();
    let trials = 100_000;
    let mut pass = true;
    let mut parts = vec![];
    for (k, m) in [12usize, 32, 128].into_iter().enumerate() {
        let q = vote_size(m);
        let mut sess = Session::new(RngStream::new(SEED, 5_000 + k as u64), CostModelConfig::stress());
        let errors = (0..trials).filter(|i| vote_on(&mut sess, i % 2 == 0, 1.0 / 3.0, q, "vote") != (i % 2 == 0)).count();
        let bound = 1.0 / (m * m) as f64;
        let thr = bound + 3.0 * sigma(bound, trials);
        let rate = errors as f64 / trials as f64;
        pass &= rate <= thr;
        parts.push(format!("m={m} q={q} error {rate:.2e} <= {thr:.2e}"));
    }
    let text = parts.join("; ");
    s.report(5, pass, false, t, text.clone());
    text
}

fn lemma_suites(s: &mut Suite9) -> String {
    let t = Instant::now();
    let mut pass = true;
    let mut known_only = true;
    let mut parts = vec![];
    let mut reports = vec![];
    for suite in Suite::ALL {
        let r = run_verification(suite, suite.default_n()).expect("verification suite");
        if !r.passed {
            pass = false;
            known_only &= suite == Suite::BsRotation;
        }
        parts.push(format!(
            "{suite}(n<={}): {} checked, {} vacuous, {} violations",
            r.max_n, r.checked, r.vacuous, r.violations
        ));
        if let Some(ex) = r.counterexamples.first() {
            parts.push(format!("{suite} counterexample {ex}"));
        }
        reports.push(r);
    }
    // the exhaustive flip-set range has no string with a nonzero count bound
    let r = flipsets_sampled(400, 25..=100, SEED);
    if !r.passed {
        pass = false;
        known_only = false;
    }
    parts.push(format!("flipsets(400 random, n in 25..=100): {} checked, {} violations", r.checked, r.violations));
    reports.push(r);
    let note = if !pass && known_only {
        "; block sensitivity is not rotation invariant (bs(01)=1, bs(10)=2), see the decisions ledger"
    } else {
        ""
    };
    s.report(6, pass, !pass && known_only, t, format!("{}{note}", parts.join("; ")));
    serde_json::to_string_pretty(&reports).expect("serializes")
}

fn sensitivity(s: &mut Suite9) -> String {
    let t = Instant::now();
    let samples = 10_000;
    let mut pass = true;
    let mut out = String::from(SensitivityReport::CSV_HEADER);
    out.push('\n');
    let mut parts = vec![];
    for n in [64usize, 256, 1024] {
        let b = (3.0 * (n as f64).log2()).ceil() as usize;
        let r = sensitivity_distribution(n, 2, b, samples, SEED).expect("sensitivity run");
        let p = 1.0 - 1.0 / n as f64;
        let thr = p - 3.0 * sigma(p, samples);
        pass &= r.empirical_prob >= thr;
        parts.push(format!("n={n} B={b} Pr={:.4} >= {thr:.4}", r.empirical_prob));
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    s.report(7, pass, false, t, parts.join("; "));
    out
}

fn main() {
    let keep = std::env::var_os("LMSR_ACCEPTANCE_OUT").map(PathBuf::from);
    let out = keep.clone().unwrap_or_else(|| std::env::temp_dir().join(format!("lmsr-acceptance-{}", std::process::id())));
    std::fs::create_dir_all(&out).expect("output directory");
    let mut s = Suite9 { lines: vec![], guards: GuardStats::default(), out: out.clone(), quiet: false };
    let scale_trials = 200;

    let mut first: Vec<(&str, Vec<u8>)> = vec![];
    let body = equivalence(&mut s);
    first.push(("c1_equivalence.json", emit(&out, "c1_equivalence.json", &body)));
    let body = bounded_error(&mut s);
    first.push(("c2_bounded_error.json", emit(&out, "c2_bounded_error.json", &body)));
    let body = worst_case(&mut s, scale_trials, Some(3));
    first.push(("c3_worst_case.csv", emit(&out, "c3_worst_case.csv", &body)));
    let body = average_case(&mut s, scale_trials, Some(4));
    first.push(("c4_average_case.csv", emit(&out, "c4_average_case.csv", &body)));
    let body = voting(&mut s);
    first.push(("c5_voting.txt", emit(&out, "c5_voting.txt", &body)));
    let body = lemma_suites(&mut s);
    first.push(("c6_lemmas.json", emit(&out, "c6_lemmas.json", &body)));
    let body = sensitivity(&mut s);
    first.push(("c7_sensitivity.csv", emit(&out, "c7_sensitivity.csv", &body)));

    let t = Instant::now();
    let g = s.guards;
    s.report(
        8,
        g.violations() == 0,
        false,
        t,
        format!(
            "criteria 1-4: minimum budget violations {}, sampling round-cap hits {} (amplified-minimum cap hits {}, informational)",
            g.min_budget_violations, g.ds_round_cap_hits, g.amp_round_cap_hits
        ),
    );

    // Rerun every criterion into a fresh directory and compare bytes.
    let t = Instant::now();
    let again = s.out.join("rerun");
    std::fs::create_dir_all(&again).expect("rerun directory");
    let mut scratch = Suite9 { lines: vec![], guards: GuardStats::default(), out: again.clone(), quiet: true };
    let second: Vec<Vec<u8>> = vec![
        emit(&again, "c1_equivalence.json", &equivalence(&mut scratch)),
        emit(&again, "c2_bounded_error.json", &bounded_error(&mut scratch)),
        emit(&again, "c3_worst_case.csv", &worst_case(&mut scratch, scale_trials, None)),
        emit(&again, "c4_average_case.csv", &average_case(&mut scratch, scale_trials, None)),
        emit(&again, "c5_voting.txt", &voting(&mut scratch)),
        emit(&again, "c6_lemmas.json", &lemma_suites(&mut scratch)),
        emit(&again, "c7_sensitivity.csv", &sensitivity(&mut scratch)),
    ];
    let differing: Vec<&str> = first.iter().zip(&second).filter(|(a, b)| a.1 != **b).map(|(a, _)| a.0).collect();
    let pass = differing.is_empty();
    s.report(
        9,
        pass,
        false,
        t,
        if pass {
            format!("{} output files byte-identical across two runs", first.len())
        } else {
            format!("differing outputs: {differing:?}")
        },
    );

    let unexpected: Vec<usize> = s.lines.iter().filter(|l| !l.pass && !l.known).map(|l| l.id).collect();
    let known: Vec<usize> = s.lines.iter().filter(|l| !l.pass && l.known).map(|l| l.id).collect();
    println!(
        "summary: {} passed, {} known failures {:?}, {} unexpected failures {:?}",
        s.lines.iter().filter(|l| l.pass).count(),
        known.len(),
        known,
        unexpected.len(),
        unexpected
    );
    if keep.is_none() {
        let _ = std::fs::remove_dir_all(&out);
    }
    if !unexpected.is_empty() {
        std::process::exit(1);
    }
}
