//! Bounded-error oracles, seeded RNG streams and hierarchical query accounting.

use crate::error::{Error, Result};
use crate::q_subroutines::CostModelConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// `(seed, stream_id)` pair naming an independent ChaCha8 stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Counter families kept by the ledger.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CallKind {
    /// Really executed oracle calls.
    Actual,
    /// Cost-model charges of emulated subroutines, in leaf-query units.
    Charged,
}

/// Hierarchical counters; `a/b/c` also rolls up into `a/b` and `a`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLedger {
    actual: BTreeMap<String, u64>,
    charged: BTreeMap<String, u64>,
    total_actual: u64,
    total_charged: u64,
}

/// Flat JSON view of a ledger.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerSnapshot {
    pub actual: BTreeMap<String, u64>,
    pub charged: BTreeMap<String, u64>,
    pub total_actual: u64,
    pub total_charged: u64,
    pub total: u64,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, kind: CallKind, label: &str, count: u64) {
        if count == 0 {
            return;
        }
        let (map, total) = match kind {
            CallKind::Actual => (&mut self.actual, &mut self.total_actual),
            CallKind::Charged => (&mut self.charged, &mut self.total_charged),
        };
        *total += count;
        let mut end = 0;
        loop {
            let next = label[end..].find('/').map(|p| end + p);
            let prefix = &label[..next.unwrap_or(label.len())];
            match map.get_mut(prefix) {
                Some(v) => *v += count,
                None => {
                    map.insert(prefix.to_string(), count);
                }
            }
            match next {
                Some(p) => end = p + 1,
                None => break,
            }
        }
    }

    pub fn get(&self, kind: CallKind, label: &str) -> u64 {
        let map = match kind {
            CallKind::Actual => &self.actual,
            CallKind::Charged => &self.charged,
        };
        map.get(label).copied().unwrap_or(0)
    }

    pub fn total(&self, kind: CallKind) -> u64 {
        match kind {
            CallKind::Actual => self.total_actual,
            CallKind::Charged => self.total_charged,
        }
    }

    /// Adds every counter of `other` into `self`.
    pub fn merge(&mut self, other: &QueryLedger) {
        for (k, v) in &other.actual {
            *self.actual.entry(k.clone()).or_insert(0) += v;
        }
        for (k, v) in &other.charged {
            *self.charged.entry(k.clone()).or_insert(0) += v;
        }
        self.total_actual += other.total_actual;
        self.total_charged += other.total_charged;
    }

    pub fn snapshot(&self) -> LedgerSnapshot {
        LedgerSnapshot {
            actual: self.actual.clone(),
            charged: self.charged.clone(),
            total_actual: self.total_actual,
            total_charged: self.total_charged,
            total: self.total_actual + self.total_charged,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.snapshot()).expect("ledger serializes")
    }
}

/// Counts of budget-guard events, inspected by the acceptance suite.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuardStats {
    /// Minimum-finding runs whose charged cost exceeded the loop budget plus one search.
    pub min_budget_violations: u64,
    /// Deterministic-sampling runs that exhausted the round cap without converging.
    pub ds_round_cap_hits: u64,
    /// Amplified minimum runs stopped by the outer safety cap.
    pub amp_round_cap_hits: u64,
}

impl GuardStats {
    pub fn merge(&mut self, o: &GuardStats) {
        self.min_budget_violations += o.min_budget_violations;
        self.ds_round_cap_hits += o.ds_round_cap_hits;
        self.amp_round_cap_hits += o.amp_round_cap_hits;
    }

    pub fn violations(&self) -> u64 {
        self.min_budget_violations + self.ds_round_cap_hits
    }
}

/// Single-owner group: RNG, ledger and cost model of one run.
#[derive(Debug, Clone)]
pub struct Session {
    pub rng: ChaCha8Rng,
    pub ledger: QueryLedger,
    pub cfg: CostModelConfig,
    pub guards: GuardStats,
}

impl Session {
    pub fn new(stream: RngStream, cfg: CostModelConfig) -> Self {
        Self { rng: stream.rng(), ledger: QueryLedger::new(), cfg, guards: GuardStats::default() }
    }

    pub fn seeded(seed: u64, cfg: CostModelConfig) -> Self {
        Self::new(RngStream::new(seed, 0), cfg)
    }

    #[inline]
    pub fn charge(&mut self, label: &str, count: u64) {
        self.ledger.record(CallKind::Charged, label, count);
    }

    #[inline]
    pub fn actual(&mut self, label: &str, count: u64) {
        self.ledger.record(CallKind::Actual, label, count);
    }

    pub fn charged_total(&self) -> u64 {
        self.ledger.total(CallKind::Charged)
    }

    pub fn actual_total(&self) -> u64 {
        self.ledger.total(CallKind::Actual)
    }

    /// One Bernoulli(`p`) draw.
    #[inline]
    pub fn coin(&mut self, p: f64) -> bool {
        p > 0.0 && self.rng.gen::<f64>() < p
    }

    #[inline]
    pub fn uniform(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }
}

pub fn check_flip_prob(flip_prob: f64) -> Result<()> {
    if !(0.0..=1.0 / 3.0 + 1e-12).contains(&flip_prob) || flip_prob.is_nan() {
        return Err(Error::InvalidFlipProb(flip_prob));
    }
    Ok(())
}

/// Boolean oracle whose every call is independently flipped with probability `flip_prob`.
pub struct NoisyOracle<F> {
    truth: F,
    flip_prob: f64,
    label: String,
}

/// Wraps a truth function as a bounded-error oracle.
pub fn make_noisy<Q, F: Fn(Q) -> bool>(truth: F, flip_prob: f64, label: &str) -> Result<NoisyOracle<F>> {
    check_flip_prob(flip_prob)?;
    Ok(NoisyOracle { truth, flip_prob, label: label.to_string() })
}

impl<F> NoisyOracle<F> {
    pub fn flip_prob(&self) -> f64 {
        self.flip_prob
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// One real call: logs one actual query.
    pub fn call<Q>(&self, sess: &mut Session, query: Q) -> bool
    where
        F: Fn(Q) -> bool,
    {
        sess.actual(&self.label, 1);
        let v = (self.truth)(query);
        if sess.coin(self.flip_prob) {
            !v
        } else {
            v
        }
    }

    /// Ground truth, used by emulated subroutines to sample outcome distributions.
    pub fn truth<Q>(&self, query: Q) -> bool
    where
        F: Fn(Q) -> bool,
    {
        (self.truth)(query)
    }
}

/// Value oracle that returns `junk` instead of the true value on corruption.
pub struct NoisyValueOracle<F, V> {
    truth: F,
    flip_prob: f64,
    junk: V,
    label: String,
}

pub fn make_noisy_value<Q, V: Clone, F: Fn(Q) -> V>(
    truth: F,
    flip_prob: f64,
    junk: V,
    label: &str,
) -> Result<NoisyValueOracle<F, V>> {
    check_flip_prob(flip_prob)?;
    Ok(NoisyValueOracle { truth, flip_prob, junk, label: label.to_string() })
}

impl<F, V: Clone> NoisyValueOracle<F, V> {
    pub fn call<Q>(&self, sess: &mut Session, query: Q) -> V
    where
        F: Fn(Q) -> V,
    {
        sess.actual(&self.label, 1);
        if sess.coin(self.flip_prob) {
            self.junk.clone()
        } else {
            (self.truth)(query)
        }
    }
}

/// `q` real calls; true iff strictly more than half returned true.
pub fn majority_vote<Q: Copy, F: Fn(Q) -> bool>(
    sess: &mut Session,
    oracle: &NoisyOracle<F>,
    query: Q,
    q: usize,
) -> bool {
    let truth = oracle.truth(query);
    vote_on(sess, truth, oracle.flip_prob, q, &oracle.label)
}

/// Majority of `q` independent noisy copies of `truth`; logs `q` actual calls under `label`.
pub fn vote_on(sess: &mut Session, truth: bool, flip_prob: f64, q: usize, label: &str) -> bool {
    assert!(q >= 1, "majority vote needs q >= 1");
    sess.actual(label, q as u64);
    let mut yes = 0usize;
    for _ in 0..q {
        let flipped = sess.coin(flip_prob);
        if truth != flipped {
            yes += 1;
        }
    }
    2 * yes > q
}

/// Vote size `ceil(36 ln m)`, at least 1.
pub fn vote_size(m: usize) -> usize {
    ((36.0 * (m.max(1) as f64).ln()).ceil() as usize).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sess(seed: u64) -> Session {
        Session::seeded(seed, CostModelConfig::default())
    }

    #[test]
    fn exact_oracle_is_exact() {
        let o = make_noisy(|_: usize| true, 0.0, "x").unwrap();
        let mut s = sess(1);
        assert!((0..1000).all(|i| o.call(&mut s, i)));
        assert_eq!(s.ledger.get(CallKind::Actual, "x"), 1000);
    }

    #[test]
    fn flip_prob_above_third_rejected() {
        assert!(matches!(make_noisy(|_: usize| true, 0.34, "x"), Err(Error::InvalidFlipProb(_))));
        assert!(make_noisy(|_: usize| true, 1.0 / 3.0, "x").is_ok());
    }

    #[test]
    fn noisy_rate_within_three_sigma() {
        let o = make_noisy(|_: usize| true, 1.0 / 3.0, "x").unwrap();
        let mut s = sess(7);
        let trials = 100_000;
        let ok = (0..trials).filter(|&i| o.call(&mut s, i)).count() as f64 / trials as f64;
        let sigma = (2.0 / 9.0 / trials as f64).sqrt();
        assert!((ok - 2.0 / 3.0).abs() <= 3.0 * sigma, "rate {ok}");
    }

    #[test]
    fn same_seed_same_sequence() {
        let o = make_noisy(|i: usize| i % 2 == 0, 0.3, "x").unwrap();
        let mut a = sess(42);
        let mut b = sess(42);
        let va: Vec<bool> = (0..500).map(|i| o.call(&mut a, i)).collect();
        let vb: Vec<bool> = (0..500).map(|i| o.call(&mut b, i)).collect();
        assert_eq!(va, vb);
    }

    #[test]
    fn streams_differ() {
        let mut a = RngStream::new(5, 0).rng();
        let mut b = RngStream::new(5, 1).rng();
        let xa: Vec<u64> = (0..8).map(|_| a.gen()).collect();
        let xb: Vec<u64> = (0..8).map(|_| b.gen()).collect();
        assert_ne!(xa, xb);
    }

    #[test]
    fn vote_size_formula() {
        assert_eq!(vote_size(12), 90);
    }

    #[test]
    fn majority_counts_exactly_q() {
        let o = make_noisy(|_: ()| true, 0.0, "v").unwrap();
        let mut s = sess(3);
        assert!(majority_vote(&mut s, &o, (), 1));
        assert!(majority_vote(&mut s, &o, (), 9));
        assert_eq!(s.ledger.get(CallKind::Actual, "v"), 10);
    }

    #[test]
    fn even_tie_is_false() {
        // with flip probability 0 and truth false, zero yes votes
        let mut s = sess(3);
        assert!(!vote_on(&mut s, false, 0.0, 4, "v"));
    }

    #[test]
    fn ledger_rolls_up() {
        let mut l = QueryLedger::new();
        l.record(CallKind::Charged, "lmsr/stage1/search", 5);
        l.record(CallKind::Charged, "lmsr/stage2", 3);
        l.record(CallKind::Actual, "lmsr/stage1/vote", 2);
        assert_eq!(l.get(CallKind::Charged, "lmsr"), 8);
        assert_eq!(l.get(CallKind::Charged, "lmsr/stage1"), 5);
        assert_eq!(l.total(CallKind::Charged), 8);
        assert_eq!(l.total(CallKind::Actual), 2);
        let snap: serde_json::Value = serde_json::from_str(&l.to_json()).unwrap();
        assert_eq!(snap["total"], 10);
    }

    #[test]
    fn value_oracle_returns_junk_on_corruption() {
        let o = make_noisy_value(|i: usize| i as i64, 1.0 / 3.0, -1i64, "val").unwrap();
        let mut s = sess(9);
        let vals: Vec<i64> = (0..3000).map(|_| o.call(&mut s, 5)).collect();
        assert!(vals.iter().all(|&v| v == 5 || v == -1));
        assert!(vals.iter().any(|&v| v == -1));
    }
}
