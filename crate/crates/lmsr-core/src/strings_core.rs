//! Cyclic strings, lexicographic order and exact classical LMSR machinery.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

/// Default cap for the quadratic brute-force oracle.
pub const BRUTEFORCE_CAP: usize = 1 << 14;

/// Alphabet `[size]` with a total order given as a rank permutation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    size: usize,
    /// `order[c]` is the rank of character `c`; smaller rank sorts first.
    order: Vec<u32>,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::AlphabetTooSmall(size));
        }
        Ok(Self { size, order: (0..size as u32).collect() })
    }

    pub fn binary() -> Self {
        Self::new(2).expect("binary alphabet")
    }

    pub fn with_order(size: usize, order: Vec<u32>) -> Result<Self> {
        if size < 2 {
            return Err(Error::AlphabetTooSmall(size));
        }
        let mut seen = vec![false; size];
        if order.len() != size {
            return Err(Error::InvalidOrder(size));
        }
        for &r in &order {
            let r = r as usize;
            if r >= size || seen[r] {
                return Err(Error::InvalidOrder(size));
            }
            seen[r] = true;
        }
        Ok(Self { size, order })
    }

    /// Same characters, order reversed.
    pub fn reversed(&self) -> Self {
        let top = self.size as u32 - 1;
        Self { size: self.size, order: self.order.iter().map(|r| top - r).collect() }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn order(&self) -> &[u32] {
        &self.order
    }

    #[inline]
    pub fn rank(&self, c: u32) -> u32 {
        self.order[c as usize]
    }

    pub fn is_identity(&self) -> bool {
        self.order.iter().enumerate().all(|(i, &r)| i as u32 == r)
    }
}

/// A non-empty string over `[α]`, indexed cyclically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircularString {
    alphabet: Alphabet,
    chars: Vec<u32>,
}

impl CircularString {
    pub fn new(alphabet: Alphabet, chars: Vec<u32>) -> Result<Self> {
        if chars.is_empty() {
            return Err(Error::EmptyString);
        }
        for (pos, &ch) in chars.iter().enumerate() {
            if ch as usize >= alphabet.size() {
                return Err(Error::CharOutOfRange { ch, pos, size: alphabet.size() });
            }
        }
        Ok(Self { alphabet, chars })
    }

    /// Binary string from a slice of 0/1 values.
    pub fn binary(bits: &[u32]) -> Result<Self> {
        Self::new(Alphabet::binary(), bits.to_vec())
    }

    /// Maps 'a'→0, 'b'→1, ... over the given alphabet size.
    pub fn from_letters(text: &str, alpha: usize) -> Result<Self> {
        let chars = letters_to_chars(text)?;
        Self::new(Alphabet::new(alpha)?, chars)
    }

    /// Letters with the alphabet sized to fit (at least 2).
    pub fn from_text(text: &str) -> Result<Self> {
        let chars = letters_to_chars(text)?;
        let alpha = chars.iter().copied().max().map_or(2, |m| (m as usize + 1).max(2));
        Self::new(Alphabet::new(alpha)?, chars)
    }

    /// Parses one input line: comma-separated integers, or letters starting at 'a'.
    pub fn parse_line(line: &str, alpha: Option<usize>) -> Result<Self> {
        let line = line.trim();
        if line.is_empty() {
            return Err(Error::EmptyString);
        }
        let chars: Vec<u32> = if line.contains(',') || line.chars().all(|c| c.is_ascii_digit()) {
            if line.contains(',') {
                line.split(',')
                    .map(|t| t.trim().parse::<u32>().map_err(|e| Error::Parse(format!("{t:?}: {e}"))))
                    .collect::<Result<_>>()?
            } else {
                line.bytes().map(|b| (b - b'0') as u32).collect()
            }
        } else {
            letters_to_chars(line)?
        };
        let alpha = match alpha {
            Some(a) => a,
            None => chars.iter().copied().max().map_or(2, |m| (m as usize + 1).max(2)),
        };
        Self::new(Alphabet::new(alpha)?, chars)
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn chars(&self) -> &[u32] {
        &self.chars
    }

    /// `s[i mod n]` for any integer `i`.
    #[inline]
    pub fn at(&self, i: i64) -> u32 {
        let n = self.chars.len() as i64;
        self.chars[i.rem_euclid(n) as usize]
    }

    pub fn rotation(&self, k: usize) -> CircularString {
        let n = self.len();
        let chars = (0..n).map(|i| self.chars[(i + k) % n]).collect();
        Self { alphabet: self.alphabet.clone(), chars }
    }

    pub fn reversed(&self) -> CircularString {
        let mut chars = self.chars.clone();
        chars.reverse();
        Self { alphabet: self.alphabet.clone(), chars }
    }

    pub fn with_alphabet(&self, alphabet: Alphabet) -> Result<CircularString> {
        Self::new(alphabet, self.chars.clone())
    }

    /// Characters replaced by their order ranks; natural integer order then applies.
    pub fn ranked(&self) -> Vec<u32> {
        if self.alphabet.is_identity() {
            self.chars.clone()
        } else {
            self.chars.iter().map(|&c| self.alphabet.rank(c)).collect()
        }
    }

    pub fn view(&self, start: usize, len: usize) -> View<'_> {
        View { s: self, start, len }
    }

    pub fn to_letters(&self) -> String {
        if self.alphabet.size() <= 26 {
            self.chars.iter().map(|&c| (b'a' + c as u8) as char).collect()
        } else {
            self.chars.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
        }
    }
}

impl fmt::Display for CircularString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_letters())
    }
}

fn letters_to_chars(text: &str) -> Result<Vec<u32>> {
    text.trim()
        .chars()
        .map(|c| {
            if c.is_ascii_lowercase() {
                Ok(c as u32 - 'a' as u32)
            } else {
                Err(Error::Parse(format!("unexpected character {c:?}")))
            }
        })
        .collect()
}

/// A length-`len` cyclic window starting at `start`.
#[derive(Debug, Clone, Copy)]
pub struct View<'a> {
    pub s: &'a CircularString,
    pub start: usize,
    pub len: usize,
}

impl View<'_> {
    #[inline]
    fn rank_at(&self, k: usize) -> u32 {
        self.s.alphabet.rank(self.s.at((self.start + k) as i64))
    }
}

/// Lexicographic comparison of two cyclic views, proper prefixes first.
pub fn lex_compare(a: View<'_>, b: View<'_>) -> Result<Ordering> {
    if a.s.alphabet != b.s.alphabet {
        return Err(Error::AlphabetMismatch);
    }
    for k in 0..a.len.min(b.len) {
        match a.rank_at(k).cmp(&b.rank_at(k)) {
            Ordering::Equal => {}
            o => return Ok(o),
        }
    }
    Ok(a.len.cmp(&b.len))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LmsrAnswer {
    pub offset: usize,
    pub scr_prefix_len: Option<usize>,
}

/// Smallest `p | n` with `s^{(p)} = s`.
pub fn rotational_period(s: &[u32]) -> usize {
    let n = s.len();
    let p = n - failure_function(s).last().copied().unwrap_or(0);
    if n % p == 0 {
        p
    } else {
        n
    }
}

/// KMP failure function: `f[i]` is the longest proper border of `s[..=i]`.
pub fn failure_function(s: &[u32]) -> Vec<usize> {
    let mut f = vec![0usize; s.len()];
    let mut k = 0;
    for i in 1..s.len() {
        while k > 0 && s[i] != s[k] {
            k = f[k - 1];
        }
        if s[i] == s[k] {
            k += 1;
        }
        f[i] = k;
    }
    f
}

/// Booth's least-rotation algorithm on ranked characters, normalized to the minimal offset.
pub fn lmsr_booth(s: &[u32]) -> usize {
    let n = s.len();
    if n <= 1 {
        return 0;
    }
    let at = |i: usize| s[i % n];
    let mut f = vec![-1i64; 2 * n];
    let mut k = 0usize;
    for j in 1..2 * n {
        let sj = at(j);
        let mut i = f[j - k - 1];
        while i != -1 && sj != at(k + i as usize + 1) {
            if sj < at(k + i as usize + 1) {
                k = j - i as usize - 1;
            }
            i = f[i as usize];
        }
        if i == -1 && sj != at(k + i.wrapping_add(1) as usize) {
            if sj < at(k) {
                k = j;
            }
            f[j - k] = -1;
        } else {
            f[j - k] = i + 1;
        }
    }
    k % rotational_period(s)
}

/// Least rotation via Lyndon factorization of `ss` (Duval), normalized to the minimal offset.
pub fn lmsr_duval(s: &[u32]) -> usize {
    let n = s.len();
    if n <= 1 {
        return 0;
    }
    let at = |i: usize| s[i % n];
    let mut i = 0usize;
    let mut ans = 0usize;
    while i < n {
        ans = i;
        let mut j = i + 1;
        let mut k = i;
        while j < 2 * n && at(k) <= at(j) {
            if at(k) < at(j) {
                k = i;
            } else {
                k += 1;
            }
            j += 1;
        }
        while i <= k {
            i += j - k;
        }
    }
    ans % rotational_period(s)
}

/// Linear-time LMSR (Booth).
pub fn lmsr_linear(s: &CircularString) -> LmsrAnswer {
    LmsrAnswer { offset: lmsr_booth(&s.ranked()), scr_prefix_len: None }
}

/// Quadratic pairwise-rotation scan; the ground truth oracle.
pub fn lmsr_bruteforce(s: &CircularString) -> Result<LmsrAnswer> {
    lmsr_bruteforce_capped(s, BRUTEFORCE_CAP)
}

pub fn lmsr_bruteforce_capped(s: &CircularString, cap: usize) -> Result<LmsrAnswer> {
    let n = s.len();
    if n > cap {
        return Err(Error::CapExceeded { n, cap });
    }
    let r = s.ranked();
    Ok(LmsrAnswer { offset: lmsr_bruteforce_raw(&r), scr_prefix_len: None })
}

/// Brute-force minimal offset on ranked characters.
pub fn lmsr_bruteforce_raw(r: &[u32]) -> usize {
    let n = r.len();
    let mut best = 0usize;
    for k in 1..n {
        for t in 0..n {
            let a = r[(k + t) % n];
            let b = r[(best + t) % n];
            if a != b {
                if a < b {
                    best = k;
                }
                break;
            }
        }
    }
    best
}

/// The minimal rotation itself.
pub fn scr(s: &CircularString) -> CircularString {
    s.rotation(lmsr_linear(s).offset)
}

/// Minimal period. Linear reading: minimal `d ≥ 1` with `s[i] = s[i+d]` for `i < n-d`.
/// Cyclic reading: the rotational period.
pub fn period(s: &CircularString, as_linear: bool) -> usize {
    if as_linear {
        linear_period(s.chars())
    } else {
        rotational_period(s.chars())
    }
}

pub fn linear_period(s: &[u32]) -> usize {
    let n = s.len();
    if n == 0 {
        return 0;
    }
    n - failure_function(s)[n - 1]
}

pub fn is_periodic(s: &[u32]) -> bool {
    2 * linear_period(s) <= s.len()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sensitivity {
    Finite(usize),
    Infinite,
}

impl Sensitivity {
    pub fn at_most(&self, b: usize) -> bool {
        matches!(self, Sensitivity::Finite(c) if *c <= b)
    }

    pub fn finite(&self) -> Option<usize> {
        match self {
            Sensitivity::Finite(c) => Some(*c),
            Sensitivity::Infinite => None,
        }
    }
}

impl fmt::Display for Sensitivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sensitivity::Finite(c) => write!(f, "{c}"),
            Sensitivity::Infinite => f.write_str("inf"),
        }
    }
}

/// Smallest `l` with all `n` cyclic length-`l` substrings pairwise distinct.
pub fn string_sensitivity(s: &CircularString) -> Sensitivity {
    sensitivity_of(&s.ranked())
}

pub fn sensitivity_of(s: &[u32]) -> Sensitivity {
    let n = s.len();
    if n == 1 {
        return Sensitivity::Finite(1);
    }
    if rotational_period(s) < n {
        return Sensitivity::Infinite;
    }
    let ranks = CyclicRanks::new(s);
    let rot = ranks.rank_array(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by_key(|&i| rot[i]);
    let mut best = 0;
    for w in order.windows(2) {
        best = best.max(ranks.lcp(w[0], w[1], n));
    }
    Sensitivity::Finite(best + 1)
}

/// Prefix-doubling rank tables for cyclic substrings of a fixed string.
///
/// Level `k` ranks every cyclic substring of length `2^k`; any length up to `n`
/// is compared in O(1) with two overlapping windows.
#[derive(Debug, Clone)]
pub struct CyclicRanks {
    n: usize,
    levels: Vec<Vec<u32>>,
}

impl CyclicRanks {
    pub fn new(s: &[u32]) -> Self {
        let n = s.len();
        assert!(n > 0, "empty string");
        let mut levels = vec![dense(s.iter().map(|&c| c as u64).collect::<Vec<_>>().as_slice())];
        let mut len = 1usize;
        while len < n {
            let prev = levels.last().expect("level");
            let keys: Vec<u64> =
                (0..n).map(|i| ((prev[i] as u64) << 32) | prev[(i + len) % n] as u64).collect();
            levels.push(dense(&keys));
            len *= 2;
        }
        Self { n, levels }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    fn key(&self, i: usize, len: usize) -> (u32, u32) {
        let k = (usize::BITS - 1 - len.leading_zeros()) as usize;
        let lvl = &self.levels[k];
        (lvl[i % self.n], lvl[(i + len - (1 << k)) % self.n])
    }

    /// Compares cyclic substrings of length `len` (clamped to `n`) at `i` and `j`.
    #[inline]
    pub fn cmp_sub(&self, i: usize, j: usize, len: usize) -> Ordering {
        let len = len.min(self.n);
        if len == 0 {
            return Ordering::Equal;
        }
        self.key(i, len).cmp(&self.key(j, len))
    }

    /// Dense ranks of all cyclic substrings of length `len` (clamped to `n`).
    pub fn rank_array(&self, len: usize) -> Vec<u32> {
        let len = len.min(self.n).max(1);
        let keys: Vec<u64> = (0..self.n)
            .map(|i| {
                let (a, b) = self.key(i, len);
                ((a as u64) << 32) | b as u64
            })
            .collect();
        dense(&keys)
    }

    /// Longest common prefix of the cyclic strings at `i` and `j`, capped at `cap`.
    pub fn lcp(&self, mut i: usize, mut j: usize, cap: usize) -> usize {
        let mut acc = 0usize;
        for k in (0..self.levels.len()).rev() {
            let step = 1usize << k;
            if acc + step <= cap && self.levels[k][i] == self.levels[k][j] {
                acc += step;
                i = (i + step) % self.n;
                j = (j + step) % self.n;
            }
        }
        acc
    }
}

fn dense(keys: &[u64]) -> Vec<u32> {
    let mut sorted: Vec<u64> = keys.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    keys.iter().map(|k| sorted.binary_search(k).expect("key present") as u32).collect()
}
