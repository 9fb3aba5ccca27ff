//! Seeded Monte-Carlo checks of the bounded-error and cost contracts.

use lmsr_core::apps::{cycles_distinct, CycleSet, Engine};
use lmsr_core::det_sampling::{ds_build_quantum, ds_verify};
use lmsr_core::lmsr_quantum::{basic_lmsr, improved_lmsr};
use lmsr_core::oracle_model::{vote_on, RngStream, Session};
use lmsr_core::pattern_match::{kmp_first, match_first_q};
use lmsr_core::q_subroutines::{q_search, CostModelConfig};
use lmsr_core::sensitivity_lab::bs_raw;
use lmsr_core::strings_core::{lmsr_bruteforce_raw, CircularString};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const TWO_THIRDS: f64 = 2.0 / 3.0;

fn floor_at(p: f64, trials: usize) -> f64 {
    p - 3.0 * (p * (1.0 - p) / trials as f64).sqrt()
}

fn rng(stream: u64) -> ChaCha8Rng {
    RngStream::new(77, stream).rng()
}

fn bits(r: &mut ChaCha8Rng, n: usize) -> Vec<u32> {
    (0..n).map(|_| r.gen_range(0..2)).collect()
}

#[test]
fn search_returns_uniform_solutions() {
    let (n, marked) = (64usize, [3usize, 10, 17, 29, 40, 41, 55, 63]);
    let mut sess = Session::new(RngStream::new(5, 0), CostModelConfig::default());
    let mut counts = [0u64; 8];
    for _ in 0..100_000 {
        // failed searches return a uniform junk index, which may miss the marked set
        let hit = q_search(&mut sess, n, |i| marked.contains(&i), 1, "s").found();
        if let Some(k) = hit.and_then(|i| marked.iter().position(|&m| m == i)) {
            counts[k] += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    let e = total as f64 / 8.0;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    let p = 1.0 - ChiSquared::new(7.0).unwrap().cdf(stat);
    assert!(p > 0.001, "chi-square {stat} p={p} counts {counts:?}");
}

#[test]
fn vote_error_within_bound() {
    let mut sess = Session::new(RngStream::new(6, 0), CostModelConfig::stress());
    let trials = 10_000;
    let errors = (0..trials).filter(|_| !vote_on(&mut sess, true, 1.0 / 3.0, 90, "v")).count();
    let bound = 1.0 / 144.0;
    assert!(errors as f64 / trials as f64 <= bound + 3.0 * (bound * (1.0 - bound) / trials as f64).sqrt());
}

#[test]
fn sampling_succeeds_on_every_input_class() {
    let trials = 1000;
    let n = 96;
    let mut r = rng(1);
    let classes: [(&str, Box<dyn Fn(&mut ChaCha8Rng) -> Vec<u32>>); 4] = [
        ("constant", Box::new(|_| vec![1; n])),
        ("periodic", Box::new(|r| {
            let base = bits(r, 6);
            (0..n).map(|i| base[i % 6]).collect()
        })),
        ("aperiodic", Box::new(|r| {
            let mut s = vec![0; n];
            s[r.gen_range(0..n)] = 1;
            s
        })),
        ("random", Box::new(|r| bits(r, n))),
    ];
    for (k, (name, gen)) in classes.iter().enumerate() {
        let mut ok = 0;
        for t in 0..trials {
            let s = gen(&mut r);
            let mut sess = Session::new(RngStream::new(11, (k * trials + t) as u64), CostModelConfig::stress());
            ok += usize::from(ds_verify(&s, &ds_build_quantum(&mut sess, &s, "ds").unwrap().sample));
        }
        let rate = ok as f64 / trials as f64;
        assert!(rate >= floor_at(TWO_THIRDS, trials), "{name}: {rate}");
    }
}

#[test]
fn emulated_matching_rate_on_small_instances() {
    let trials = 4000;
    let mut r = rng(2);
    let mut ok = 0;
    for t in 0..trials {
        let n = r.gen_range(4..=12);
        let m = r.gen_range(4..=n);
        let text = bits(&mut r, n);
        let p = if t % 2 == 0 {
            let j = r.gen_range(0..=n - m);
            text[j..j + m].to_vec()
        } else {
            bits(&mut r, m)
        };
        let mut sess = Session::new(RngStream::new(12, t as u64), CostModelConfig::stress());
        ok += usize::from(match_first_q(&mut sess, &text, &p, "m").unwrap().first_occurrence == kmp_first(&text, &p));
    }
    let rate = ok as f64 / trials as f64;
    assert!(rate >= floor_at(TWO_THIRDS, trials), "{rate}");
}

#[test]
fn end_to_end_rates_under_stress() {
    let (strings, seeds) = (200, 50);
    for n in [16usize, 32, 64, 128] {
        let mut r = rng(100 + n as u64);
        let (mut basic, mut improved) = (0, 0);
        for k in 0..strings {
            let s = bits(&mut r, n);
            let truth = lmsr_bruteforce_raw(&s);
            let x = CircularString::binary(&s).unwrap();
            for seed in 0..seeds {
                let mut sess = Session::new(RngStream::new(seed, (n * strings + k) as u64), CostModelConfig::stress());
                basic += usize::from(basic_lmsr(&mut sess, &x).unwrap().offset == truth);
                improved += usize::from(improved_lmsr(&mut sess, &x).unwrap().offset == truth);
            }
        }
        let trials = strings * seeds as usize;
        let floor = floor_at(TWO_THIRDS, trials);
        assert!(basic as f64 / trials as f64 >= floor, "basic n={n}: {basic}/{trials}");
        assert!(improved as f64 / trials as f64 >= floor, "improved n={n}: {improved}/{trials}");
    }
}

#[test]
fn quantum_cycle_detection_agrees_with_classical() {
    let trials = 500usize;
    let mut r = rng(3);
    let mut agree = 0;
    for t in 0..trials {
        let m = r.gen_range(2..8);
        let len = r.gen_range(8..24);
        let base = bits(&mut r, len);
        let lines: Vec<String> = (0..m)
            .map(|_| {
                // half the cycles are rotations of one base word
                let c = if r.gen_bool(0.5) {
                    let k = r.gen_range(0..len);
                    (0..len).map(|i| base[(i + k) % len]).collect()
                } else {
                    bits(&mut r, len)
                };
                c.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",")
            })
            .collect();
        let set = CycleSet::parse(&lines.join("\n")).unwrap();
        let q = cycles_distinct(&set, Engine::Quantum, CostModelConfig::stress(), t as u64).unwrap();
        let c = cycles_distinct(&set, Engine::Classical, CostModelConfig::stress(), t as u64).unwrap();
        agree += usize::from(q.pair == c.pair);
    }
    assert!(agree as f64 / trials as f64 >= floor_at(TWO_THIRDS, trials), "{agree}/{trials}");
}

#[test]
fn mean_block_sensitivity_grows_with_n() {
    let samples = 200;
    let mut r = rng(4);
    let means: Vec<f64> = [8usize, 10, 12]
        .iter()
        .map(|&n| (0..samples).map(|_| bs_raw(&bits(&mut r, n)) as f64).sum::<f64>() / samples as f64)
        .collect();
    assert!(means.windows(2).all(|w| w[0] <= w[1]), "{means:?}");
}

#[test]
fn sampling_cost_tracks_its_envelope() {
    let trials = 20;
    let ratios: Vec<f64> = (6..=14)
        .step_by(2)
        .map(|e| {
            let n = 1usize << e;
            let mut r = rng(200 + e as u64);
            let mean = (0..trials)
                .map(|t| {
                    let s = bits(&mut r, n);
                    let mut sess = Session::new(RngStream::new(13, (e * 100 + t) as u64), CostModelConfig::default());
                    ds_build_quantum(&mut sess, &s, "ds").unwrap();
                    sess.charged_total() as f64
                })
                .sum::<f64>()
                / trials as f64;
            let nf = n as f64;
            mean / (nf * nf.log2().powi(3) * nf.log2().log2()).sqrt()
        })
        .collect();
    let spread = ratios.iter().cloned().fold(f64::MIN, f64::max) / ratios.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread < 2.0, "ratios {ratios:?}");
}
