//! Distribution-level emulation of quantum search and minimum finding with cost charging.
//!
//! Outcomes are sampled from the ground-truth solution set; costs follow the
//! `C·sqrt(n/t)` family of formulas and are charged in leaf-query units
//! (`unit` = nominal cost of one query to the searched oracle).

use crate::error::{Error, Result};
use crate::oracle_model::{vote_on, vote_size, NoisyOracle, Session};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModelConfig {
    /// Queries-per-search constant.
    pub c: f64,
    /// Success probability of one emulated search run.
    pub p_search: f64,
    /// Exact linear scans instead of emulated subroutines.
    pub reference_mode: bool,
    /// Corruption probability of derived bounded-error oracles.
    pub flip_prob: f64,
    /// Repetitions per stage in the composed LMSR algorithms.
    pub repetitions: usize,
}

impl Default for CostModelConfig {
    fn default() -> Self {
        Self { c: 3.0, p_search: 0.9, reference_mode: false, flip_prob: 1.0 / 3.0, repetitions: 5 }
    }
}

impl CostModelConfig {
    pub fn reference() -> Self {
        Self { reference_mode: true, flip_prob: 0.0, ..Self::default() }
    }

    /// Boundary regime: search succeeds with exactly 2/3, oracles err with exactly 1/3.
    pub fn stress() -> Self {
        Self { p_search: 2.0 / 3.0, flip_prob: 1.0 / 3.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::InvalidCostModel(format!("C must be positive, got {}", self.c)));
        }
        if !(2.0 / 3.0 - 1e-12..=1.0).contains(&self.p_search) {
            return Err(Error::InvalidCostModel(format!("p_search {} outside [2/3, 1]", self.p_search)));
        }
        crate::oracle_model::check_flip_prob(self.flip_prob)?;
        if self.repetitions == 0 {
            return Err(Error::InvalidCostModel("repetitions must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchOutcome {
    /// `-1` means not found.
    pub index: i64,
    pub charged: u64,
}

impl SearchOutcome {
    pub fn found(&self) -> Option<usize> {
        (self.index >= 0).then_some(self.index as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    First,
    Last,
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidEpsilon(eps));
    }
    Ok(())
}

// Nominal costs, used both for charging and as unit costs of nested levels.

pub fn cost_search(c: f64, n: usize) -> u64 {
    (c * (n.max(1) as f64).sqrt()).ceil() as u64
}

pub fn cost_search_t(c: f64, n: usize, t: usize) -> u64 {
    (c * (n.max(1) as f64 / t.max(1) as f64).sqrt()).ceil() as u64
}

pub fn cost_search_amp(c: f64, n: usize, eps: f64) -> u64 {
    (c * (n.max(1) as f64 * (1.0 / eps).ln()).sqrt()).ceil() as u64
}

/// Comparator calls of one minimum-finding run (loop budget plus one overshooting search).
pub fn cost_minimum(c: f64, n: usize) -> u64 {
    (30.0 * c * (n.max(1) as f64).sqrt()).ceil() as u64 + cost_search(c, n)
}

pub fn cost_minimum_amp(c: f64, n: usize, eps: f64) -> u64 {
    cost_minimum(c, n) + cost_search_amp(c, n, eps)
}

/// Indicator reads of one first/last-solution search.
pub fn cost_extreme(c: f64, n: usize, eps: Option<f64>) -> u64 {
    let per = match eps {
        Some(e) => cost_minimum_amp(c, n, e),
        None => cost_minimum(c, n),
    };
    2 * per + 1
}

/// `C^d · sqrt(prod n_k)`, times `sqrt(ln 1/eps)` when `eps` is given.
pub fn nested_cost(levels: &[usize], eps: Option<f64>, c: f64) -> Result<f64> {
    if levels.len() < 2 {
        return Err(Error::TooFewLevels(levels.len()));
    }
    if levels.iter().any(|&n| n == 0) {
        return Err(Error::EmptyDomain);
    }
    let prod: f64 = levels.iter().map(|&n| n as f64).product();
    let mut v = c.powi(levels.len() as i32) * prod.sqrt();
    if let Some(e) = eps {
        check_eps(e)?;
        v *= (1.0 / e).ln().sqrt();
    }
    Ok(v)
}

fn join(label: &str, leaf: &str) -> String {
    let mut s = String::with_capacity(label.len() + leaf.len() + 1);
    s.push_str(label);
    s.push('/');
    s.push_str(leaf);
    s
}

/// Samples one emulated search outcome given the number of true solutions.
fn sample_outcome(
    sess: &mut Session,
    n: usize,
    t: usize,
    success: f64,
    mut pick: impl FnMut(&mut Session, usize) -> usize,
) -> i64 {
    let ok = success >= 1.0 || sess.coin(success);
    if ok {
        if t == 0 {
            -1
        } else {
            let k = sess.uniform(t);
            pick(sess, k) as i64
        }
    } else {
        sess.uniform(n) as i64
    }
}

/// Emulated search over `[n]` for an index with `truth(i)`.
pub fn q_search(sess: &mut Session, n: usize, truth: impl Fn(usize) -> bool, unit: u64, label: &str) -> SearchOutcome {
    if n == 0 {
        return SearchOutcome { index: -1, charged: 0 };
    }
    if sess.cfg.reference_mode {
        let charged = n as u64 * unit;
        sess.charge(label, charged);
        let index = (0..n).find(|&i| truth(i)).map_or(-1, |i| i as i64);
        return SearchOutcome { index, charged };
    }
    let sols: Vec<usize> = (0..n).filter(|&i| truth(i)).collect();
    let charged = cost_search_t(sess.cfg.c, n, sols.len()) * unit;
    sess.charge(label, charged);
    let p = sess.cfg.p_search;
    let index = sample_outcome(sess, n, sols.len(), p, |_, k| sols[k]);
    SearchOutcome { index, charged }
}

/// `q_search` over the ground truth of a noisy Boolean oracle (one unit per query).
pub fn q_search_oracle<F: Fn(usize) -> bool>(sess: &mut Session, oracle: &NoisyOracle<F>, n: usize) -> SearchOutcome {
    let label = oracle.label().to_string();
    q_search(sess, n, |i| oracle.truth(i), 1, &label)
}

/// Search with success probability `1 - eps`.
pub fn q_search_amplified(
    sess: &mut Session,
    n: usize,
    truth: impl Fn(usize) -> bool,
    eps: f64,
    unit: u64,
    label: &str,
) -> Result<SearchOutcome> {
    check_eps(eps)?;
    if n == 0 {
        return Ok(SearchOutcome { index: -1, charged: 0 });
    }
    if sess.cfg.reference_mode {
        return Ok(q_search(sess, n, truth, unit, label));
    }
    let sols: Vec<usize> = (0..n).filter(|&i| truth(i)).collect();
    let charged = cost_search_amp(sess.cfg.c, n, eps) * unit;
    sess.charge(label, charged);
    let index = sample_outcome(sess, n, sols.len(), 1.0 - eps, |_, k| sols[k]);
    Ok(SearchOutcome { index, charged })
}

/// Keys sorted once so that "all indices strictly below `j`" is a prefix.
#[derive(Debug, Clone)]
pub struct SortedKeys {
    keys: Vec<u64>,
    order: Vec<u32>,
    less: Vec<u32>,
}

impl SortedKeys {
    pub fn new(keys: Vec<u64>) -> Self {
        let n = keys.len();
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.sort_unstable_by_key(|&i| (keys[i as usize], i));
        let mut less = vec![0u32; n];
        let mut start = 0usize;
        for pos in 0..n {
            if pos > 0 && keys[order[pos] as usize] != keys[order[pos - 1] as usize] {
                start = pos;
            }
            less[order[pos] as usize] = start as u32;
        }
        Self { keys, order, less }
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[u64] {
        &self.keys
    }

    /// Number of indices with a strictly smaller key.
    #[inline]
    pub fn below(&self, j: usize) -> usize {
        self.less[j] as usize
    }

    /// Smallest index among the minimal keys.
    pub fn argmin(&self) -> usize {
        self.order[0] as usize
    }

    #[inline]
    pub fn is_min(&self, j: usize) -> bool {
        self.less[j] == 0
    }
}

/// Minimum finding on a bounded-error comparator `cmp(i,j) = key_i < key_j`.
///
/// `unit` is the leaf cost of one comparator query. Real comparator calls
/// (majority votes) are flipped with `cfg.flip_prob` and logged as actual calls.
pub fn q_minimum(sess: &mut Session, keys: &SortedKeys, unit: u64, label: &str) -> Result<usize> {
    let n = keys.len();
    if n == 0 {
        return Err(Error::EmptyDomain);
    }
    if n == 1 {
        return Ok(0);
    }
    if sess.cfg.reference_mode {
        sess.charge(label, n as u64 * unit);
        return Ok(keys.argmin());
    }
    let c = sess.cfg.c;
    let p = sess.cfg.p_search;
    let flip = sess.cfg.flip_prob;
    let m = (12.0 * (n as f64).ln()).ceil() as usize;
    let q = vote_size(m);
    let sqrt_n = (n as f64).sqrt();
    let budget = 30.0 * c * sqrt_n + (m * q) as f64;
    let search_label = join(label, "search");
    let vote_label = join(label, "vote");

    let mut j = sess.uniform(n);
    let mut calls = 0u64;
    let mut charged_calls = 0u64;
    for _ in 0..m {
        if calls as f64 > budget {
            break;
        }
        let t = keys.below(j);
        let cost = cost_search_t(c, n, t);
        charged_calls += cost;
        calls += cost;
        sess.charge(&search_label, cost * unit);
        let i = sample_outcome(sess, n, t, p, |_, k| keys.order[k] as usize);
        let b = if i < 0 {
            false
        } else {
            let i = i as usize;
            calls += q as u64;
            vote_on(sess, keys.keys[i] < keys.keys[j], flip, q, &vote_label)
        };
        if b {
            j = i as usize;
        }
    }
    if charged_calls as f64 > budget + cost_search(c, n) as f64 {
        sess.guards.min_budget_violations += 1;
    }
    Ok(j)
}

/// Minimum finding amplified to error at most `eps`.
pub fn q_minimum_amplified(sess: &mut Session, keys: &SortedKeys, eps: f64, unit: u64, label: &str) -> Result<usize> {
    check_eps(eps)?;
    let n = keys.len();
    if n == 0 {
        return Err(Error::EmptyDomain);
    }
    if sess.cfg.reference_mode {
        sess.charge(label, n as u64 * unit);
        return Ok(keys.argmin());
    }
    const MAX_ROUNDS: usize = 64;
    let witness_label = join(label, "witness");
    let mut j = 0;
    for _ in 0..MAX_ROUNDS {
        j = q_minimum(sess, keys, unit, label)?;
        let t = keys.below(j);
        let cost = cost_search_amp(sess.cfg.c, n, eps);
        sess.charge(&witness_label, cost * unit);
        let w = sample_outcome(sess, n, t, 1.0 - eps, |_, k| keys.order[k] as usize);
        if w == -1 {
            return Ok(j);
        }
    }
    sess.guards.amp_round_cap_hits += 1;
    Ok(j)
}

/// First (or last) index with `truth(i)`, via minimum finding on the
/// comparator `x_i = 1 ∧ x_j = 0`, ties broken by index.
pub fn q_search_extreme(
    sess: &mut Session,
    n: usize,
    truth: impl Fn(usize) -> bool,
    dir: Direction,
    eps: Option<f64>,
    unit: u64,
    label: &str,
) -> Result<SearchOutcome> {
    if let Some(e) = eps {
        check_eps(e)?;
    }
    let before = sess.charged_total();
    if n == 0 {
        return Ok(SearchOutcome { index: -1, charged: 0 });
    }
    if sess.cfg.reference_mode {
        sess.charge(label, n as u64 * unit);
        let index = match dir {
            Direction::First => (0..n).find(|&i| truth(i)),
            Direction::Last => (0..n).rev().find(|&i| truth(i)),
        };
        return Ok(SearchOutcome { index: index.map_or(-1, |i| i as i64), charged: sess.charged_total() - before });
    }
    let nn = n as u64;
    let keys: Vec<u64> = (0..n)
        .map(|i| {
            let miss = if truth(i) { 0 } else { 1 };
            let pos = match dir {
                Direction::First => i as u64,
                Direction::Last => (n - 1 - i) as u64,
            };
            miss * nn + pos
        })
        .collect();
    let sk = SortedKeys::new(keys);
    let j = match eps {
        None => q_minimum(sess, &sk, 2 * unit, label)?,
        Some(e) => q_minimum_amplified(sess, &sk, e, 2 * unit, label)?,
    };
    sess.charge(label, unit);
    let index = if truth(j) { j as i64 } else { -1 };
    Ok(SearchOutcome { index, charged: sess.charged_total() - before })
}
