//! Deterministic samples for periodic and aperiodic strings, the oracle-based
//! lexicographic comparator and the periodicity test.

use crate::error::Result;
use crate::oracle_model::Session;
use crate::q_subroutines::{cost_minimum, cost_search, q_search_amplified, q_search_extreme, Direction};
use crate::strings_core::{failure_function, linear_period};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// Offset `delta` plus checkpoints `i_k` with reference characters `c_k = s[i_k - delta]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterministicSample {
    pub delta: usize,
    pub checkpoints: Vec<usize>,
    pub ref_chars: Vec<u32>,
}

impl DeterministicSample {
    pub fn len(&self) -> usize {
        self.checkpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.checkpoints.is_empty()
    }

    /// Offset `j` agrees with every checkpoint that falls inside `s` shifted by `j`.
    pub fn consistent(&self, s: &[u32], j: usize) -> bool {
        let n = s.len();
        self.checkpoints
            .iter()
            .zip(&self.ref_chars)
            .all(|(&i, &c)| !(j <= i && i < j + n) || s[i - j] == c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("sample serializes")
    }
}

/// Brute-force check of both sample conditions over all offsets below `floor(n/2)`.
pub fn ds_verify(s: &[u32], ds: &DeterministicSample) -> bool {
    let n = s.len();
    if n == 0 || ds.checkpoints.len() != ds.ref_chars.len() {
        return false;
    }
    let h = n / 2;
    if ds.delta >= h.max(1) {
        return false;
    }
    for (&i, &c) in ds.checkpoints.iter().zip(&ds.ref_chars) {
        if i < ds.delta || i - ds.delta >= n || s[i - ds.delta] != c {
            return false;
        }
    }
    let d = linear_period(s);
    (0..h).all(|j| {
        (j as i64 - ds.delta as i64).rem_euclid(d as i64) == 0
            || ds
                .checkpoints
                .iter()
                .zip(&ds.ref_chars)
                .any(|(&i, &c)| j <= i && i < j + n && s[i - j] != c)
    })
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Candidate bookkeeping shared by the classical and emulated builders.
struct Candidates<'a> {
    s: &'a [u32],
    ds: DeterministicSample,
    cons: Vec<bool>,
    /// Exclusion modulus for the periodic fallback, anchored at `anchor`.
    g: usize,
    anchor: usize,
}

impl<'a> Candidates<'a> {
    fn new(s: &'a [u32]) -> Self {
        let h = s.len() / 2;
        Self {
            s,
            ds: DeterministicSample { delta: 0, checkpoints: vec![], ref_chars: vec![] },
            cons: vec![true; h],
            g: 0,
            anchor: usize::MAX,
        }
    }

    fn h(&self) -> usize {
        self.cons.len()
    }

    fn set_anchor(&mut self, p: usize) {
        if p != self.anchor {
            self.g = 0;
            self.anchor = p;
        }
    }

    fn alive(&self, j: usize) -> bool {
        self.cons[j] && !(self.g > 0 && j != self.anchor && j.abs_diff(self.anchor) % self.g == 0)
    }

    fn covering_with(&self, il: usize, c: u32) -> usize {
        let n = self.s.len();
        (0..self.h()).filter(|&j| self.cons[j] && j <= il && il < j + n && self.s[il - j] == c).count()
    }

    fn add(&mut self, il: usize, c: u32) {
        let n = self.s.len();
        self.ds.checkpoints.push(il);
        self.ds.ref_chars.push(c);
        for j in 0..self.h() {
            if self.cons[j] && j <= il && il < j + n && self.s[il - j] != c {
                self.cons[j] = false;
            }
        }
    }

    fn mismatch(&self, p: usize, q: usize, j: usize) -> bool {
        self.s[j - p] != self.s[j - q]
    }
}

/// Classical halving construction with `l <= floor(log2 n)`.
pub fn ds_build_classical(s: &[u32]) -> DeterministicSample {
    let n = s.len();
    if n <= 1 {
        return DeterministicSample { delta: 0, checkpoints: vec![], ref_chars: vec![] };
    }
    let mut st = Candidates::new(s);
    let h = st.h();
    loop {
        let p = (0..h).find(|&j| st.cons[j]).expect("delta survives");
        st.set_anchor(p);
        let q = (0..h).rev().find(|&j| st.alive(j)).expect("anchor alive");
        if p == q {
            break;
        }
        let qc = (0..h).rev().find(|&j| st.cons[j]).expect("consistent");
        let lo = q.max(qc);
        match (lo..p + n).find(|&j| st.mismatch(p, q, j)) {
            None => st.g = gcd(st.g, q - p),
            Some(il) => {
                let mut chars: Vec<u32> = (0..h)
                    .filter(|&j| st.cons[j] && j <= il && il < j + n)
                    .map(|j| s[il - j])
                    .collect();
                chars.sort_unstable();
                chars.dedup();
                let c = chars
                    .into_iter()
                    .min_by_key(|&c| (st.covering_with(il, c), c))
                    .expect("covering candidates");
                st.add(il, c);
            }
        }
    }
    st.ds.delta = (0..h).find(|&j| st.cons[j]).expect("delta survives");
    st.ds
}

/// Result of an emulated deterministic-sampling run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DsBuild {
    pub sample: DeterministicSample,
    pub rounds: usize,
    pub round_cap: usize,
    /// Rounds in which the disagreement search found nothing (periodic fallback).
    pub fallback_rounds: usize,
    pub converged: bool,
}

/// Leaf cost of evaluating one offset's consistency against `l` checkpoints.
pub fn consistency_unit(c: f64, l: usize) -> u64 {
    cost_search(c, l.max(1))
}

/// Emulated deterministic sampling: `m = ceil(8 log2 n)` rounds, amplified
/// first/last searches at `eps = 1/(6 m^2)`, random choice of reference character.
pub fn ds_build_quantum(sess: &mut Session, s: &[u32], label: &str) -> Result<DsBuild> {
    let n = s.len();
    if n <= 1 {
        return Ok(DsBuild {
            sample: DeterministicSample { delta: 0, checkpoints: vec![], ref_chars: vec![] },
            rounds: 0,
            round_cap: 0,
            fallback_rounds: 0,
            converged: true,
        });
    }
    let m = (8.0 * (n as f64).log2()).ceil() as usize;
    let eps = 1.0 / (6.0 * (m * m) as f64);
    let c = sess.cfg.c;
    let reference = sess.cfg.reference_mode;
    let first_label = format!("{label}/first");
    let last_label = format!("{label}/last");
    let y_label = format!("{label}/disagree");

    let mut st = Candidates::new(s);
    let h = st.h();
    let mut rounds = 0;
    let mut fallback_rounds = 0;
    let mut converged = false;
    while rounds < m {
        rounds += 1;
        let ux = consistency_unit(c, st.ds.len());
        let p = q_search_extreme(sess, h, |j| st.cons[j], Direction::First, Some(eps), ux, &first_label)?;
        let Some(p) = p.found() else { break };
        st.set_anchor(p);
        let q = q_search_extreme(sess, h, |j| st.alive(j), Direction::Last, Some(eps), ux, &last_label)?;
        let Some(q) = q.found() else { break };
        if p == q {
            converged = true;
            break;
        }
        if q < p {
            // garbage from a failed search; spend the round
            continue;
        }
        let qc = if st.g == 0 {
            q
        } else {
            let r = q_search_extreme(sess, h, |j| st.cons[j], Direction::Last, Some(eps), ux, &last_label)?;
            r.found().unwrap_or(q)
        };
        let lo = q.max(qc);
        let y = |j: usize| j >= lo && j < p + n && st.mismatch(p, q, j);
        let found = q_search_amplified(sess, p + n, y, eps, 2, &y_label)?;
        let Some(il) = found.found() else {
            fallback_rounds += 1;
            st.g = gcd(st.g, q - p);
            continue;
        };
        // check the returned index with one evaluation of the indicator
        sess.charge(&y_label, 2);
        if !y(il) {
            continue;
        }
        let (a, b) = (s[il - p], s[il - q]);
        let ch = if reference {
            if st.covering_with(il, a) <= st.covering_with(il, b) {
                a
            } else {
                b
            }
        } else if sess.coin(0.5) {
            a
        } else {
            b
        };
        st.add(il, ch);
    }
    if rounds > m {
        sess.guards.ds_round_cap_hits += 1;
    }
    let ux = consistency_unit(c, st.ds.len());
    let delta = q_search_extreme(sess, h, |j| st.cons[j], Direction::First, Some(eps), ux, &first_label)?;
    st.ds.delta = delta.found().unwrap_or(0);
    Ok(DsBuild { sample: st.ds, rounds, round_cap: m, fallback_rounds, converged })
}

/// Leaf cost of one oracle-based comparison of two length-`len` strings.
pub fn cost_lex(c: f64, len: usize) -> u64 {
    4 * cost_minimum(c, len.max(1)) + 2
}

/// Compares two strings of length `n` given by read oracles, via a first-disagreement search.
pub fn lex_compare_q(
    sess: &mut Session,
    u: impl Fn(usize) -> u32,
    v: impl Fn(usize) -> u32,
    n: usize,
    label: &str,
) -> Result<Ordering> {
    let k = q_search_extreme(sess, n, |i| u(i) != v(i), Direction::First, None, 2, label)?;
    match k.found() {
        None => Ok(Ordering::Equal),
        Some(k) => {
            sess.charge(label, 2);
            Ok(u(k).cmp(&v(k)))
        }
    }
}

/// Periodicity via the two smallest sample-consistent offsets, with a second
/// stage over candidate periods when only one offset lies below `floor(n/2)`.
/// Returns the period when `s` is periodic (`d <= n/2`), `None` otherwise.
pub fn periodicity_q(sess: &mut Session, s: &[u32], ds: &DeterministicSample, label: &str) -> Result<Option<usize>> {
    let n = s.len();
    let h = n / 2;
    if h == 0 {
        return Ok(None);
    }
    let c = sess.cfg.c;
    let ux = consistency_unit(c, ds.len());
    let cons: Vec<bool> = (0..h).map(|j| ds.consistent(s, j)).collect();
    let j1 = q_search_extreme(sess, h, |j| cons[j], Direction::First, None, ux, label)?;
    let Some(j1) = j1.found() else { return Ok(None) };
    let j2 = q_search_extreme(sess, h, |j| j > j1 && cons[j], Direction::First, None, ux, label)?;
    if let Some(j2) = j2.found() {
        return Ok(Some(j2 - j1));
    }
    let lo = (h - j1).max(1);
    if lo > h {
        return Ok(None);
    }
    let periods = period_table(s);
    let unit = 2 * cost_search(c, n);
    let d = q_search_extreme(sess, h - lo + 1, |k| periods[lo + k], Direction::First, None, unit, label)?;
    Ok(d.found().map(|k| lo + k))
}

/// `table[d]` is true iff `d` is a (linear) period of `s`, for `0 <= d <= n`.
pub fn period_table(s: &[u32]) -> Vec<bool> {
    let n = s.len();
    let mut t = vec![false; n + 1];
    t[n] = true;
    if n == 0 {
        return t;
    }
    let f = failure_function(s);
    let mut b = f[n - 1];
    while b > 0 {
        t[n - b] = true;
        b = f[b - 1];
    }
    t
}

/// Exact classification matching [`periodicity_q`]'s contract.
pub fn periodicity_exact(s: &[u32]) -> Option<usize> {
    let d = linear_period(s);
    (2 * d <= s.len()).then_some(d)
}
