//! Block-candidate pattern matching driven by deterministic samples, plus a KMP baseline.

use crate::det_sampling::{consistency_unit, ds_build_quantum, periodicity_q, DeterministicSample};
use crate::error::{Error, Result};
use crate::oracle_model::Session;
use crate::q_subroutines::{cost_extreme, cost_search, q_search, q_search_extreme, Direction};
use crate::strings_core::failure_function;
use serde::{Deserialize, Serialize};

/// Text read either linearly (positions past the end do not exist) or cyclically.
#[derive(Debug, Clone, Copy)]
pub struct Text<'a> {
    pub chars: &'a [u32],
    pub cyclic: bool,
}

impl<'a> Text<'a> {
    pub fn linear(chars: &'a [u32]) -> Self {
        Self { chars, cyclic: false }
    }

    pub fn cyclic(chars: &'a [u32]) -> Self {
        Self { chars, cyclic: true }
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> Option<u32> {
        if i < self.chars.len() {
            Some(self.chars[i])
        } else if self.cyclic {
            Some(self.chars[i % self.chars.len()])
        } else {
            None
        }
    }

    /// Number of start positions that may hold an occurrence of a length-`m` pattern.
    pub fn positions(&self, m: usize) -> usize {
        if self.cyclic {
            self.chars.len()
        } else {
            (self.chars.len() + 1).saturating_sub(m)
        }
    }
}

/// Pattern with its sample and periodicity class.
#[derive(Debug, Clone)]
pub struct PatternInfo<'a> {
    pub p: &'a [u32],
    pub ds: DeterministicSample,
    /// `Some(d)` when periodic with period `d <= m/2`.
    pub period: Option<usize>,
}

impl PatternInfo<'_> {
    pub fn m(&self) -> usize {
        self.p.len()
    }

    pub fn block_len(&self) -> usize {
        (self.p.len() / 4).max(1)
    }

    /// The extreme consistent position of a block is its only possible occurrence:
    /// leftmost when `delta <= L-2`, rightmost otherwise.
    pub fn direction(&self) -> Direction {
        if self.ds.delta + 2 <= self.block_len() {
            Direction::First
        } else {
            Direction::Last
        }
    }

    #[inline]
    fn consistent_at(&self, t: &Text<'_>, j: usize) -> bool {
        let delta = self.ds.delta;
        self.ds.checkpoints.iter().zip(&self.ds.ref_chars).all(|(&i, &c)| t.get(j + i - delta) == Some(c))
    }

    #[inline]
    fn matches_at(&self, t: &Text<'_>, j: usize) -> bool {
        (self.cyclic_ok(t, j)) && self.p.iter().enumerate().all(|(x, &c)| t.get(j + x) == Some(c))
    }

    fn cyclic_ok(&self, t: &Text<'_>, j: usize) -> bool {
        t.cyclic || j + self.m() <= t.len()
    }

    /// Nominal leaf cost of one block-candidate evaluation.
    pub fn candidate_cost(&self, c: f64) -> u64 {
        let m = self.m();
        let ux = consistency_unit(c, self.ds.len());
        let mut cost = cost_extreme(c, self.block_len(), None) * ux + 2 * cost_search(c, m) + 2;
        if self.period.is_some() {
            cost += 2 * cost_extreme(c, m, None);
        }
        cost
    }
}

/// Per-block leftmost candidates; `n` encodes "no candidate".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateTable {
    pub block_len: usize,
    pub entries: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchReport {
    pub first_occurrence: i64,
    pub candidates: CandidateTable,
    pub charged: u64,
}

/// Exact first occurrence (Knuth–Morris–Pratt), `-1` if none.
pub fn kmp_first(t: &[u32], p: &[u32]) -> i64 {
    let m = p.len();
    if m == 0 {
        return 0;
    }
    let f = failure_function(p);
    let mut k = 0;
    for (i, &c) in t.iter().enumerate() {
        while k > 0 && c != p[k] {
            k = f[k - 1];
        }
        if c == p[k] {
            k += 1;
        }
        if k == m {
            return (i + 1 - m) as i64;
        }
    }
    -1
}

fn block_bounds(t: &Text<'_>, pat: &PatternInfo<'_>, i: usize) -> (usize, usize) {
    let l = pat.block_len();
    let start = i * l;
    let end = (start + l).min(t.positions(pat.m()));
    (start, end)
}

/// Exact block procedure: the unique possible occurrence in block `i`, or `n`.
pub fn block_candidate_exact(t: &Text<'_>, pat: &PatternInfo<'_>, i: usize) -> usize {
    let n = t.len();
    let (start, end) = block_bounds(t, pat, i);
    if start >= end {
        return n;
    }
    let r = match pat.direction() {
        Direction::First => (start..end).find(|&j| pat.consistent_at(t, j)),
        Direction::Last => (start..end).rev().find(|&j| pat.consistent_at(t, j)),
    };
    let Some(r) = r else { return n };
    let cand = match pat.period {
        None => r,
        Some(d) => {
            let hi = start + pat.m() - 1;
            let hi = if t.cyclic { hi } else { hi.min(n - 1) };
            let q = (start..=hi)
                .rev()
                .find(|&x| t.get(x) != Some(pat.p[(x + d * n - r) % d]))
                .map_or(start, |x| x + 1);
            align_up(q, r, d)
        }
    };
    if cand < end && pat.matches_at(t, cand) {
        cand
    } else {
        n
    }
}

/// Smallest `j >= q` with `j ≡ r (mod d)`.
fn align_up(q: usize, r: usize, d: usize) -> usize {
    q + (r % d + d - q % d) % d
}

/// Emulated block procedure; search failures surface as a wrong value or `n`.
pub fn block_candidate(sess: &mut Session, t: &Text<'_>, pat: &PatternInfo<'_>, i: usize, label: &str) -> Result<usize> {
    let m = pat.m();
    if m < 4 {
        return Err(Error::PatternTooShort(m));
    }
    let n = t.len();
    let (start, end) = block_bounds(t, pat, i);
    if start >= end {
        return Ok(n);
    }
    let c = sess.cfg.c;
    let ux = consistency_unit(c, pat.ds.len());
    let r = q_search_extreme(sess, end - start, |k| pat.consistent_at(t, start + k), pat.direction(), None, ux, label)?;
    let Some(r) = r.found().map(|k| start + k) else { return Ok(n) };
    let cand = match pat.period {
        None => r,
        Some(d) => {
            let hi = start + m - 1;
            let hi = if t.cyclic { hi } else { hi.min(n - 1) };
            let span = hi + 1 - start;
            let miss = |k: usize| {
                let x = start + k;
                t.get(x) != Some(pat.p[(x + d * n - r) % d])
            };
            let q = q_search_extreme(sess, span, miss, Direction::Last, None, 2, label)?;
            let q = q.found().map_or(start, |k| start + k + 1);
            align_up(q, r, d)
        }
    };
    if cand >= end || !pat.cyclic_ok(t, cand) {
        return Ok(n);
    }
    let mismatch = q_search(sess, m, |x| t.get(cand + x) != Some(pat.p[x]), 2, label);
    let ok = match mismatch.found() {
        None => true,
        Some(x) => {
            // a returned index is checked before it rejects the candidate
            sess.charge(label, 2);
            t.get(cand + x) == Some(pat.p[x])
        }
    };
    Ok(if ok { cand } else { n })
}

/// Candidate table for every block, computed exactly.
pub fn candidate_table(t: &Text<'_>, pat: &PatternInfo<'_>) -> CandidateTable {
    let l = pat.block_len();
    let blocks = t.positions(pat.m()).div_ceil(l);
    CandidateTable { block_len: l, entries: (0..blocks).map(|i| block_candidate_exact(t, pat, i)).collect() }
}

/// First occurrence of `p` in `t` (linear), with the sample and periodicity built by the emulated routines.
pub fn match_first_q(sess: &mut Session, t: &[u32], p: &[u32], label: &str) -> Result<MatchReport> {
    let m = p.len();
    if m == 0 {
        return Err(Error::EmptyString);
    }
    let before = sess.charged_total();
    let n = t.len();
    if m > n {
        return Ok(MatchReport {
            first_occurrence: -1,
            candidates: CandidateTable { block_len: 0, entries: vec![] },
            charged: 0,
        });
    }
    if m < 4 {
        let unit = 2 * cost_search(sess.cfg.c, m);
        let full = |j: usize| t[j..j + m] == *p;
        let r = q_search_extreme(sess, n - m + 1, full, Direction::First, None, unit, label)?;
        return Ok(MatchReport {
            first_occurrence: r.index,
            candidates: CandidateTable { block_len: 0, entries: vec![] },
            charged: sess.charged_total() - before,
        });
    }
    let ds = ds_build_quantum(sess, p, &format!("{label}/sample"))?.sample;
    let period = periodicity_q(sess, p, &ds, &format!("{label}/period"))?;
    let pat = PatternInfo { p, ds, period };
    let mut report = match_with_pattern(sess, &Text::linear(t), &pat, label)?;
    report.charged = sess.charged_total() - before;
    Ok(report)
}

/// Matching phase for a pattern whose sample and periodicity are already known.
pub fn match_with_pattern(sess: &mut Session, t: &Text<'_>, pat: &PatternInfo<'_>, label: &str) -> Result<MatchReport> {
    let before = sess.charged_total();
    let n = t.len();
    let table = candidate_table(t, pat);
    let unit = pat.candidate_cost(sess.cfg.c);
    let blocks = table.entries.len();
    let b = q_search_extreme(sess, blocks, |i| table.entries[i] < n, Direction::First, None, unit, label)?;
    let first = match b.found() {
        None => -1,
        Some(i) => {
            let h = block_candidate(sess, t, pat, i, label)?;
            if h < n {
                h as i64
            } else {
                -1
            }
        }
    };
    Ok(MatchReport { first_occurrence: first, candidates: table, charged: sess.charged_total() - before })
}

/// Exhaustive check of the Ricochet conclusion for a consistent position `j`.
///
/// Every `j'` in `[j-delta, j-delta+floor(m/2))` other than `j` (or, for a
/// periodic pattern, every such `j'` not congruent to `j` mod `d`) must not be
/// an occurrence. Returns `true` when no violation exists or `j` is not consistent.
pub fn ricochet_check(t: &[u32], p: &[u32], ds: &DeterministicSample, j: usize) -> bool {
    let n = t.len();
    let m = p.len();
    if m == 0 || m > n || j + m > n {
        return true;
    }
    let text = Text::linear(t);
    let pat = PatternInfo { p, ds: ds.clone(), period: None };
    if !pat.consistent_at(&text, j) {
        return true;
    }
    let d = crate::strings_core::linear_period(p);
    let periodic = 2 * d <= m;
    let lo = j.saturating_sub(ds.delta);
    let hi = (j + m / 2).saturating_sub(ds.delta);
    (lo..hi.min(n - m + 1)).all(|jp| {
        let exempt = if periodic { jp.abs_diff(j) % d == 0 } else { jp == j };
        exempt || t[jp..jp + m] != *p
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::det_sampling::{ds_build_classical, periodicity_exact};
    use crate::oracle_model::RngStream;
    use crate::q_subroutines::CostModelConfig;

    fn letters(t: &str) -> Vec<u32> {
        t.bytes().map(|b| (b - b'a') as u32).collect()
    }

    fn naive_first(t: &[u32], p: &[u32]) -> i64 {
        if p.len() > t.len() {
            return -1;
        }
        (0..=t.len() - p.len()).find(|&j| t[j..j + p.len()] == *p).map_or(-1, |j| j as i64)
    }

    fn info(p: &[u32]) -> PatternInfo<'_> {
        PatternInfo { p, ds: ds_build_classical(p), period: periodicity_exact(p) }
    }

    #[test]
    fn kmp_examples() {
        assert_eq!(kmp_first(&letters("aaaa"), &letters("aa")), 0);
        assert_eq!(kmp_first(&letters("abcabc"), &letters("cab")), 2);
        assert_eq!(kmp_first(&letters("aaa"), &letters("b")), -1);
    }

    #[test]
    fn block_examples() {
        let t = letters("aaaaaaaa");
        let p = letters("aaaa");
        let pi = info(&p);
        assert_eq!(block_candidate_exact(&Text::linear(&t), &pi, 0), 0);
        let t2 = letters("bbbbbbbb");
        for i in 0..5 {
            assert_eq!(block_candidate_exact(&Text::linear(&t2), &pi, i), 8);
        }
        let mut s = Session::new(RngStream::new(0, 0), CostModelConfig::reference());
        assert!(matches!(
            block_candidate(&mut s, &Text::linear(&t), &info(&p[..3]), 0, "b"),
            Err(Error::PatternTooShort(3))
        ));
    }

    #[test]
    fn exact_blocks_match_bruteforce() {
        for n in 4..=11usize {
            for tb in 0..1u32 << n {
                let t: Vec<u32> = (0..n).map(|i| (tb >> i) & 1).collect();
                for m in 4..=n.min(7) {
                    for pb in 0..1u32 << m {
                        let p: Vec<u32> = (0..m).map(|i| (pb >> i) & 1).collect();
                        let pi = info(&p);
                        let l = pi.block_len();
                        let text = Text::linear(&t);
                        for (i, &h) in candidate_table(&text, &pi).entries.iter().enumerate() {
                            let start = i * l;
                            let end = (start + l).min(n - m + 1);
                            let truth = (start..end).find(|&j| t[j..j + m] == *p).unwrap_or(n);
                            assert_eq!(h, truth, "t={t:?} p={p:?} block {i}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn cyclic_blocks_match_bruteforce() {
        for n in 4..=10usize {
            for tb in 0..1u32 << n {
                let t: Vec<u32> = (0..n).map(|i| (tb >> i) & 1).collect();
                for m in 4..=n {
                    let p: Vec<u32> = (0..m).map(|x| t[(3 + x) % n]).collect();
                    let pi = info(&p);
                    let l = pi.block_len();
                    let text = Text::cyclic(&t);
                    for (i, &h) in candidate_table(&text, &pi).entries.iter().enumerate() {
                        let start = i * l;
                        let end = (start + l).min(n);
                        let truth = (start..end).find(|&j| (0..m).all(|x| t[(j + x) % n] == p[x])).unwrap_or(n);
                        assert_eq!(h, truth, "t={t:?} p={p:?} block {i}");
                    }
                }
            }
        }
    }

    #[test]
    fn reference_match_equals_kmp() {
        let mut s = Session::new(RngStream::new(0, 0), CostModelConfig::reference());
        for n in 1..=9usize {
            for tb in 0..1u32 << n {
                let t: Vec<u32> = (0..n).map(|i| (tb >> i) & 1).collect();
                for m in 1..=n {
                    for pb in (0..1u32 << m).step_by(3) {
                        let p: Vec<u32> = (0..m).map(|i| (pb >> i) & 1).collect();
                        let r = match_first_q(&mut s, &t, &p, "m").unwrap();
                        assert_eq!(r.first_occurrence, kmp_first(&t, &p), "t={t:?} p={p:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn match_examples() {
        let mut s = Session::new(RngStream::new(0, 0), CostModelConfig::reference());
        let a = letters("aaaa");
        assert_eq!(match_first_q(&mut s, &a, &a, "m").unwrap().first_occurrence, 0);
        let t = letters("abababab");
        assert_eq!(match_first_q(&mut s, &t, &letters("bbbb"), "m").unwrap().first_occurrence, -1);
        assert_eq!(naive_first(&t, &letters("baba")), 1);
        assert_eq!(match_first_q(&mut s, &t, &letters("baba"), "m").unwrap().first_occurrence, 1);
    }

    #[test]
    fn ricochet_examples() {
        let p = letters("ab");
        let t = letters("abab");
        assert!(ricochet_check(&t, &p, &ds_build_classical(&p), 0));
        let p = letters("aaaa");
        let t = letters("aaaaaa");
        assert!(ricochet_check(&t, &p, &ds_build_classical(&p), 1));
    }

    #[test]
    fn ricochet_exhaustive_small() {
        for n in 2..=9usize {
            for tb in 0..1u32 << n {
                let t: Vec<u32> = (0..n).map(|i| (tb >> i) & 1).collect();
                for m in 2..=n {
                    for pb in 0..1u32 << m {
                        let p: Vec<u32> = (0..m).map(|i| (pb >> i) & 1).collect();
                        let ds = ds_build_classical(&p);
                        for j in 0..=n - m {
                            assert!(ricochet_check(&t, &p, &ds, j), "t={t:?} p={p:?} j={j}");
                        }
                    }
                }
            }
        }
    }
}
