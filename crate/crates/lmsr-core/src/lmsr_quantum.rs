//! The composed LMSR algorithms: a block/candidate algorithm for the worst case
//! and a short-prefix fast path for typical inputs, plus exclusion-rule checkers.

use crate::det_sampling::{cost_lex, ds_build_quantum, ds_verify, lex_compare_q, periodicity_q, DeterministicSample};
use crate::error::{Error, Result};
use crate::oracle_model::{vote_on, vote_size, GuardStats, LedgerSnapshot, Session};
use crate::pattern_match::{block_candidate, candidate_table, PatternInfo, Text};
use crate::q_subroutines::{q_minimum, q_minimum_amplified, SortedKeys};
use crate::strings_core::{lmsr_booth, CircularString, CyclicRanks};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LmsrPath {
    Fast,
    Basic,
    #[serde(rename = "classical_smalln")]
    ClassicalSmallN,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmsrRun {
    pub offset: usize,
    pub path: LmsrPath,
    pub ledger: LedgerSnapshot,
    pub charged: u64,
    pub guards: GuardStats,
    /// Filled in by callers that know the true answer.
    pub succeeded: Option<bool>,
}

impl LmsrRun {
    fn finish(sess: &Session, offset: usize, path: LmsrPath) -> Self {
        LmsrRun {
            offset,
            path,
            ledger: sess.ledger.snapshot(),
            charged: sess.charged_total(),
            guards: sess.guards,
            succeeded: None,
        }
    }

    pub fn with_truth(mut self, truth: usize) -> Self {
        self.succeeded = Some(self.offset == truth);
        self
    }
}

/// `1` iff the cyclic length-`b` substring at `i` is strictly smaller than the one at `j`.
pub fn cmp_b(sess: &mut Session, s: &[u32], i: usize, j: usize, b: usize, label: &str) -> Result<bool> {
    let n = s.len();
    if n == 0 {
        return Err(Error::EmptyString);
    }
    let ord = lex_compare_q(sess, |x| s[(i + x) % n], |x| s[(j + x) % n], b, label)?;
    Ok(ord == Ordering::Less)
}

/// Comparator with index `k` excluded: `k` never wins, everything beats `k`.
pub fn cmp_b_excluding(
    sess: &mut Session,
    s: &[u32],
    i: usize,
    j: usize,
    b: usize,
    k: usize,
    label: &str,
) -> Result<bool> {
    if i == k {
        Ok(false)
    } else if j == k {
        Ok(true)
    } else {
        cmp_b(sess, s, i, j, b, label)
    }
}

fn classical(sess: &mut Session, s: &[u32]) -> LmsrRun {
    sess.charge("classical", s.len() as u64);
    let k = lmsr_booth(s);
    LmsrRun::finish(sess, k, LmsrPath::ClassicalSmallN)
}

fn reps(sess: &Session) -> usize {
    if sess.cfg.reference_mode {
        1
    } else {
        sess.cfg.repetitions.max(1)
    }
}

/// Picks the best of several minimum-finding outputs by pairwise bounded-error comparisons.
fn tournament(sess: &mut Session, cands: &[usize], keys: &[u64], unit: u64, label: &str) -> usize {
    let q = vote_size(cands.len().max(3));
    let flip = sess.cfg.flip_prob;
    let mut champ = cands[0];
    for &c in &cands[1..] {
        if c == champ {
            continue;
        }
        sess.charge(label, unit);
        if vote_on(sess, keys[c] < keys[champ], flip, q, label) {
            champ = c;
        }
    }
    champ
}

fn plurality(values: &[Option<usize>]) -> Option<usize> {
    let mut best = values[0];
    let mut best_count = 0;
    for v in values {
        let count = values.iter().filter(|w| *w == v).count();
        if count > best_count {
            best = *v;
            best_count = count;
        }
    }
    best
}

/// Block/candidate algorithm. Inputs of length at most 15 are solved classically.
pub fn basic_lmsr(sess: &mut Session, s: &CircularString) -> Result<LmsrRun> {
    let r = s.ranked();
    basic_on(sess, &r)
}

fn basic_on(sess: &mut Session, s: &[u32]) -> Result<LmsrRun> {
    let n = s.len();
    if n == 0 {
        return Err(Error::EmptyString);
    }
    if n <= 15 {
        return Ok(classical(sess, s));
    }
    let c = sess.cfg.c;
    let reps = reps(sess);
    let b = (n as f64).sqrt().floor() as usize;
    let ranks = CyclicRanks::new(s);

    // stage 1: an index whose length-b substring is minimal
    let unit_b = cost_lex(c, b);
    let keys_b: Vec<u64> = ranks.rank_array(b).into_iter().map(u64::from).collect();
    let sk = SortedKeys::new(keys_b.clone());
    let mut cands = Vec::with_capacity(reps);
    for _ in 0..reps {
        cands.push(q_minimum(sess, &sk, unit_b, "basic/prefix")?);
    }
    let i_star = tournament(sess, &cands, &keys_b, unit_b, "basic/prefix/select");
    let p: Vec<u32> = (0..b).map(|x| s[(i_star + x) % n]).collect();

    // stage 2: deterministic sample of p, first run that passes a direct check
    let mut ds: Option<DeterministicSample> = None;
    let mut last = None;
    for _ in 0..reps {
        let built = ds_build_quantum(sess, &p, "basic/sample")?.sample;
        sess.charge("basic/sample/verify", b as u64);
        if ds_verify(&p, &built) {
            ds = Some(built);
            break;
        }
        last = Some(built);
    }
    let ds = ds.or(last).expect("at least one sample run");

    // stage 3: periodicity of p
    let mut votes = Vec::with_capacity(reps);
    for _ in 0..reps {
        votes.push(periodicity_q(sess, &p, &ds, "basic/period")?);
    }
    let period = plurality(&votes);

    // stage 4: minimum over block candidates
    let pat = PatternInfo { p: &p, ds, period };
    let text = Text::cyclic(s);
    let table = candidate_table(&text, &pat);
    let rot = ranks.rank_array(n);
    let nn = n as u64;
    let keys_h: Vec<u64> = table
        .entries
        .iter()
        .map(|&h| if h < n { u64::from(rot[h]) * (nn + 1) + h as u64 } else { nn * (nn + 1) + nn })
        .collect();
    let unit_h = 2 * pat.candidate_cost(c) + 2 * cost_lex(c, n);
    let skh = SortedKeys::new(keys_h.clone());
    let mut blocks = Vec::with_capacity(reps);
    for _ in 0..reps {
        blocks.push(q_minimum(sess, &skh, unit_h, "basic/blocks")?);
    }
    let blk = tournament(sess, &blocks, &keys_h, unit_h, "basic/blocks/select");

    // final: recompute the winning block's candidate and confirm it with direct reads
    let mut found: Vec<usize> = Vec::with_capacity(reps);
    for _ in 0..reps {
        let h = block_candidate(sess, &text, &pat, blk, "basic/final")?;
        if h < n {
            found.push(h);
        }
    }
    found.sort_unstable();
    found.dedup();
    let mut offset = i_star;
    for h in found {
        sess.charge("basic/final/verify", b as u64);
        if (0..b).all(|x| s[(h + x) % n] == p[x]) {
            offset = h;
            break;
        }
    }
    Ok(LmsrRun::finish(sess, offset, LmsrPath::Basic))
}

/// Prefix length `ceil(3 log_alpha n)` used by the fast path.
pub fn fast_prefix_len(n: usize, alpha: usize) -> usize {
    // smallest B with alpha^B >= n^3, in integers to avoid rounding at exact powers
    let target = (n as u128).pow(3);
    let alpha = alpha.max(2) as u128;
    let (mut b, mut pow) = (0usize, 1u128);
    while pow < target {
        pow *= alpha;
        b += 1;
    }
    b
}

/// Fast path on the two smallest short substrings, falling back to [`basic_lmsr`].
pub fn improved_lmsr(sess: &mut Session, s: &CircularString) -> Result<LmsrRun> {
    let r = s.ranked();
    let n = r.len();
    if n == 0 {
        return Err(Error::EmptyString);
    }
    if n <= 3 {
        return Ok(classical(sess, &r));
    }
    let b = fast_prefix_len(n, s.alphabet().size());
    let eps = 1.0 / (2.0 * n as f64);
    let unit = cost_lex(sess.cfg.c, b);
    let ranks = CyclicRanks::new(&r);
    let mut keys: Vec<u64> = ranks.rank_array(b).into_iter().map(u64::from).collect();
    let k = q_minimum_amplified(sess, &SortedKeys::new(keys.clone()), eps, unit, "improved/min")?;
    keys[k] = u64::MAX;
    let k2 = q_minimum_amplified(sess, &SortedKeys::new(keys), eps, unit, "improved/second")?;
    let w = b.min(n);
    sess.charge("improved/check", 2 * w as u64);
    let rr = &r;
    let prefix = |i: usize| (0..w).map(move |x| rr[(i + x) % n]);
    if k != k2 && prefix(k).lt(prefix(k2)) {
        return Ok(LmsrRun::finish(sess, k, LmsrPath::Fast));
    }
    basic_on(sess, &r)
}

/// Outcome of one exclusion-rule instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionOutcome {
    Holds,
    Vacuous,
    Violated,
}

impl ExclusionOutcome {
    pub fn respected(self) -> bool {
        self != ExclusionOutcome::Violated
    }
}

/// Checks "two overlapping copies of the minimal length-`b` prefix: the later one is not the answer".
pub fn exclusion_check(s: &[u32], i: usize, j: usize, b: usize) -> Result<ExclusionOutcome> {
    let n = s.len();
    if b == 0 || 2 * b > n {
        return Err(Error::OutOfRange(format!("B={b} outside [1, n/2] for n={n}")));
    }
    if !(i < j && j < i + b && j < n) {
        return Err(Error::OutOfRange(format!("need i < j < i+B within [n], got i={i}, j={j}, B={b}")));
    }
    let k = lmsr_booth(s);
    Ok(exclusion_with(s, k, i, j, b))
}

fn exclusion_with(s: &[u32], k: usize, i: usize, j: usize, b: usize) -> ExclusionOutcome {
    let n = s.len();
    let eq = |x: usize| (0..b).all(|t| s[(x + t) % n] == s[(k + t) % n]);
    if !(eq(i) && eq(j)) {
        ExclusionOutcome::Vacuous
    } else if k == j {
        ExclusionOutcome::Violated
    } else {
        ExclusionOutcome::Holds
    }
}

/// Tallies of an exhaustive scan.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaTally {
    pub checked: u64,
    pub vacuous: u64,
    pub violations: u64,
}

impl LemmaTally {
    pub fn merge(&mut self, o: &LemmaTally) {
        self.checked += o.checked;
        self.vacuous += o.vacuous;
        self.violations += o.violations;
    }
}

/// Every valid `(i, j, B)` of one string.
pub fn exclusion_scan(s: &[u32]) -> LemmaTally {
    let n = s.len();
    let k = lmsr_booth(s);
    let mut t = LemmaTally::default();
    for b in 1..=n / 2 {
        for i in 0..n {
            for j in i + 1..(i + b).min(n) {
                match exclusion_with(s, k, i, j, b) {
                    ExclusionOutcome::Holds => t.checked += 1,
                    ExclusionOutcome::Vacuous => t.vacuous += 1,
                    ExclusionOutcome::Violated => {
                        t.checked += 1;
                        t.violations += 1
                    }
                }
            }
        }
    }
    t
}

/// Checks the supporting proposition of the exclusion rule for one string: whenever the
/// minimal length-`B` prefix splits as `a b a` and `s[i..]` starts with `b a`, the rotation
/// at `i` is at most the rotation at `i + |b| + |a|`. Comparing full rotations covers every `m`.
pub fn proposition_scan(s: &[u32]) -> LemmaTally {
    let n = s.len();
    let mut t = LemmaTally::default();
    if n == 0 {
        return t;
    }
    let k = lmsr_booth(s);
    let ranks = CyclicRanks::new(s);
    let pre: Vec<u32> = (0..n).map(|x| s[(k + x) % n]).collect();
    for b in 2..=n / 2 {
        for a in 1..=b / 2 {
            if pre[..a] != pre[b - a..b] {
                t.vacuous += 1;
                continue;
            }
            let ba = &pre[a..b];
            let w = ba.len();
            for i in 0..n {
                if (0..w).any(|x| s[(i + x) % n] != ba[x]) {
                    continue;
                }
                t.checked += 1;
                if ranks.cmp_sub(i, (i + w) % n, n) == Ordering::Greater {
                    t.violations += 1;
                }
            }
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::q_subroutines::CostModelConfig;
    use crate::strings_core::lmsr_bruteforce_raw;

    fn bits(x: u32, n: usize) -> Vec<u32> {
        (0..n).map(|i| (x >> i) & 1).collect()
    }

    #[test]
    fn cmp_b_examples() {
        let mut sess = Session::seeded(1, CostModelConfig::reference());
        let s = CircularString::from_text("abab").unwrap();
        let r = s.ranked();
        assert!(!cmp_b(&mut sess, &r, 2, 2, 3, "c").unwrap());
        assert!(cmp_b(&mut sess, &r[..2], 0, 1, 1, "c").unwrap());
        assert!(cmp_b(&mut sess, &r, 0, 1, 2, "c").unwrap());
        assert!(!cmp_b_excluding(&mut sess, &r, 0, 1, 2, 0, "c").unwrap());
        assert!(cmp_b_excluding(&mut sess, &r, 1, 0, 2, 0, "c").unwrap());
        assert!(cmp_b_excluding(&mut sess, &r, 0, 1, 2, 3, "c").unwrap());
    }

    #[test]
    fn prefix_len_exact_powers() {
        assert_eq!(fast_prefix_len(8, 2), 9);
        assert_eq!(fast_prefix_len(1024, 2), 30);
        assert_eq!(fast_prefix_len(9, 3), 6);
        assert_eq!(fast_prefix_len(5, 2), 7);
    }

    #[test]
    fn exclusion_examples() {
        let s = CircularString::from_text("aaaab").unwrap().ranked();
        assert_eq!(exclusion_check(&s, 0, 1, 2).unwrap(), ExclusionOutcome::Holds);
        assert_eq!(exclusion_check(&s, 3, 4, 2).unwrap(), ExclusionOutcome::Vacuous);
        assert!(exclusion_check(&s, 1, 0, 2).is_err());
        assert!(exclusion_check(&s, 0, 1, 3).is_err());
    }

    #[test]
    fn exclusion_exhaustive_small() {
        for n in 2..=10 {
            for x in 0..1u32 << n {
                assert_eq!(exclusion_scan(&bits(x, n)).violations, 0, "n={n} x={x:b}");
            }
        }
    }

    #[test]
    fn proposition_exhaustive_small() {
        for n in 1..=10 {
            for x in 0..1u32 << n {
                assert_eq!(proposition_scan(&bits(x, n)).violations, 0);
            }
        }
    }

    #[test]
    fn reference_mode_is_exact() {
        let mut rng = 0x1234_5678u64;
        for n in [16usize, 17, 25, 40, 64, 100] {
            for _ in 0..60 {
                let s: Vec<u32> = (0..n)
                    .map(|_| {
                        rng ^= rng << 13;
                        rng ^= rng >> 7;
                        rng ^= rng << 17;
                        (rng % 2) as u32
                    })
                    .collect();
                let cs = CircularString::binary(&s).unwrap();
                let truth = lmsr_bruteforce_raw(&s);
                let mut sess = Session::seeded(3, CostModelConfig::reference());
                assert_eq!(basic_lmsr(&mut sess, &cs).unwrap().offset, truth, "basic {s:?}");
                let mut sess = Session::seeded(3, CostModelConfig::reference());
                assert_eq!(improved_lmsr(&mut sess, &cs).unwrap().offset, truth, "improved {s:?}");
            }
        }
    }

    #[test]
    fn reference_exhaustive_n16() {
        let mut sess = Session::seeded(0, CostModelConfig::reference());
        for x in 0..1u32 << 16 {
            let s = bits(x, 16);
            let truth = lmsr_bruteforce_raw(&s);
            assert_eq!(basic_on(&mut sess, &s).unwrap().offset, truth, "{s:?}");
        }
    }

    #[test]
    fn small_and_periodic_inputs() {
        let mut sess = Session::seeded(1, CostModelConfig::default());
        let s = CircularString::from_text("aaaab").unwrap();
        let run = basic_lmsr(&mut sess, &s).unwrap();
        assert_eq!((run.offset, run.path), (0, LmsrPath::ClassicalSmallN));
        let s = CircularString::from_letters(&"ab".repeat(32), 2).unwrap();
        let run = improved_lmsr(&mut sess, &s).unwrap();
        assert_eq!(run.path, LmsrPath::Basic);
        let s = CircularString::from_letters(&"a".repeat(64), 2).unwrap();
        let run = basic_lmsr(&mut sess, &s).unwrap();
        assert_eq!(run.offset, 0);
        let s = CircularString::from_text("bca").unwrap();
        let run = improved_lmsr(&mut sess, &s).unwrap();
        assert_eq!((run.offset, run.path), (2, LmsrPath::ClassicalSmallN));
        let json = serde_json::to_string(&run).unwrap();
        assert!(json.contains("classical_smalln"));
    }
}
