//! Parity-of-answer function, block sensitivity, constructive flip-set
//! families and the string-sensitivity distribution experiment.

use crate::error::{Error, Result};
use crate::oracle_model::RngStream;
use crate::strings_core::{lmsr_booth, sensitivity_of, CircularString, Sensitivity};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Largest length accepted by [`block_sensitivity_bruteforce`].
pub const BS_MAX_N: usize = 12;

/// Number of RNG shards used by [`sensitivity_distribution`]; fixed so results
/// do not depend on the worker count.
pub const SHARDS: usize = 16;

fn check_binary(x: &CircularString) -> Result<()> {
    if x.alphabet().size() != 2 || !x.alphabet().is_identity() {
        return Err(Error::NotBinary);
    }
    Ok(())
}

/// Parity of the minimal-rotation offset.
pub fn lmsr0(x: &CircularString) -> Result<u32> {
    check_binary(x)?;
    Ok(lmsr0_raw(x.chars()))
}

#[inline]
pub fn lmsr0_raw(x: &[u32]) -> u32 {
    (lmsr_booth(x) % 2) as u32
}

/// `x` with every position in `set` negated.
pub fn flip(x: &CircularString, set: &[usize]) -> Result<CircularString> {
    check_binary(x)?;
    let n = x.len();
    let mut y = x.chars().to_vec();
    for &i in set {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        y[i] ^= 1;
    }
    CircularString::binary(&y)
}

/// Exact block sensitivity of [`lmsr0`] at `x`, for `n <= 12`.
pub fn block_sensitivity_bruteforce(x: &CircularString) -> Result<usize> {
    check_binary(x)?;
    if x.len() > BS_MAX_N {
        return Err(Error::CapExceeded { n: x.len(), cap: BS_MAX_N });
    }
    Ok(bs_raw(x.chars()))
}

/// Packs disjoint minimal sensitive sets; any sensitive family can be shrunk to minimal members.
pub fn bs_raw(x: &[u32]) -> usize {
    let n = x.len();
    if n <= 1 {
        return 0;
    }
    let full = 1usize << n;
    let word: u32 = x.iter().enumerate().map(|(i, &c)| c << i).sum();
    let f0 = lmsr0_raw(x);
    let mut y = vec![0u32; n];
    let sens: Vec<bool> = (0..full)
        .map(|s| {
            let w = word ^ s as u32;
            for (i, v) in y.iter_mut().enumerate() {
                *v = (w >> i) & 1;
            }
            lmsr0_raw(&y) != f0
        })
        .collect();
    // has[s]: some subset of s (including s) is sensitive
    let mut has = sens.clone();
    let mut by_low: Vec<Vec<u32>> = vec![Vec::new(); n];
    for s in 1..full {
        let mut sub = false;
        let mut bits = s;
        while bits != 0 {
            let b = bits & bits.wrapping_neg();
            sub |= has[s ^ b];
            bits ^= b;
        }
        if sens[s] && !sub {
            by_low[s.trailing_zeros() as usize].push(s as u32);
        }
        has[s] = sens[s] || sub;
    }
    let mut memo = vec![u8::MAX; full];
    pack((full - 1) as u32, &by_low, &mut memo) as usize
}

fn pack(avail: u32, by_low: &[Vec<u32>], memo: &mut [u8]) -> u8 {
    if avail == 0 {
        return 0;
    }
    if memo[avail as usize] != u8::MAX {
        return memo[avail as usize];
    }
    let low = avail.trailing_zeros() as usize;
    let mut best = pack(avail & !(1 << low), by_low, memo);
    for &s in &by_low[low] {
        if s & avail == s {
            best = best.max(1 + pack(avail & !s, by_low, memo));
        }
    }
    memo[avail as usize] = best;
    best
}

/// Pairwise-disjoint flip sets, each changing [`lmsr0`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlipSetFamily {
    pub n: usize,
    pub sets: Vec<Vec<usize>>,
    /// Constructed sets dropped because they failed verification.
    pub skipped: usize,
}

impl FlipSetFamily {
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Disjoint, in range and nonempty.
    pub fn is_valid(&self) -> bool {
        let mut seen = vec![false; self.n];
        for s in &self.sets {
            if s.is_empty() {
                return false;
            }
            for &i in s {
                if i >= self.n || seen[i] {
                    return false;
                }
                seen[i] = true;
            }
        }
        true
    }
}

/// The lower bound `floor(n/(4C) - 1/4)`, zero when `C > n/5` or infinite.
pub fn flipset_bound(n: usize, c: Sensitivity) -> usize {
    match c {
        Sensitivity::Finite(b) if 5 * b <= n => (n / b - 1) / 4,
        _ => 0,
    }
}

/// Builds flip sets by planting `1 0^{2B}` windows in every fourth length-`B` block
/// of the minimal rotation; each set is verified before it is kept.
pub fn construct_flipsets(x: &CircularString) -> Result<FlipSetFamily> {
    check_binary(x)?;
    Ok(construct_raw(x.chars()))
}

pub fn construct_raw(x: &[u32]) -> FlipSetFamily {
    let n = x.len();
    let mut fam = FlipSetFamily { n, sets: vec![], skipped: 0 };
    let Sensitivity::Finite(b) = sensitivity_of(x) else { return fam };
    if n == 0 || 5 * b > n {
        return fam;
    }
    let r = lmsr_booth(x);
    let f0 = (r % 2) as u32;
    let y: Vec<u32> = (0..n).map(|i| x[(i + r) % n]).collect();
    let k = n / b;
    let m = (k - 1) / 4;
    let mut used = vec![false; n];
    for i in 1..=m {
        let l = (4 * i - 3) * b;
        // the planted run starts at a+1 in rotated coordinates, i.e. at (a+1+r) mod n in x
        let Some(a) = (l..=l + 2).find(|&a| ((a + 1 + r) % n) % 2 != r % 2) else {
            fam.skipped += 1;
            continue;
        };
        let set: Vec<usize> = (a..=a + 2 * b)
            .filter(|&j| y[j % n] != u32::from(j == a))
            .map(|j| (j % n + r) % n)
            .collect();
        let mut z = x.to_vec();
        for &j in &set {
            z[j] ^= 1;
        }
        if set.is_empty() || set.iter().any(|&j| used[j]) || lmsr0_raw(&z) == f0 {
            fam.skipped += 1;
            continue;
        }
        for &j in &set {
            used[j] = true;
        }
        fam.sets.push(set);
    }
    fam
}

/// Result of the string-sensitivity distribution experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub n: usize,
    pub alpha: usize,
    pub samples: usize,
    pub threshold: usize,
    pub hits: usize,
    pub empirical_prob: f64,
    pub paper_bound: f64,
    /// Binomial standard error of `empirical_prob`.
    pub sigma: f64,
}

impl SensitivityReport {
    pub const CSV_HEADER: &'static str = "n,alpha,samples,threshold,hits,empirical_prob,paper_bound,sigma";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.n, self.alpha, self.samples, self.threshold, self.hits, self.empirical_prob, self.paper_bound, self.sigma
        )
    }
}

/// `1 - n(n-1) alpha^{-B} / 2`.
pub fn paper_bound(n: usize, alpha: usize, b: usize) -> f64 {
    1.0 - 0.5 * (n as f64) * (n as f64 - 1.0) * (alpha as f64).powi(-(b as i32))
}

/// Fraction of uniform strings with sensitivity at most `b`.
pub fn sensitivity_distribution(n: usize, alpha: usize, b: usize, samples: usize, seed: u64) -> Result<SensitivityReport> {
    if b == 0 || 2 * b > n {
        return Err(Error::OutOfRange(format!("threshold B={b} outside [1, n/2] for n={n}")));
    }
    if alpha < 2 {
        return Err(Error::AlphabetTooSmall(alpha));
    }
    if samples == 0 {
        return Err(Error::TooFew { need: 1, got: 0 });
    }
    let shard = |k: usize| -> usize {
        let count = samples / SHARDS + usize::from(k < samples % SHARDS);
        let mut rng = RngStream::new(seed, k as u64).rng();
        let mut s = vec![0u32; n];
        (0..count)
            .filter(|_| {
                for c in s.iter_mut() {
                    *c = rng.gen_range(0..alpha as u32);
                }
                sensitivity_of(&s).at_most(b)
            })
            .count()
    };
    let hits: usize = crate::par_map(SHARDS, shard).into_iter().sum();
    let p = hits as f64 / samples as f64;
    Ok(SensitivityReport {
        n,
        alpha,
        samples,
        threshold: b,
        hits,
        empirical_prob: p,
        paper_bound: paper_bound(n, alpha, b),
        sigma: (p * (1.0 - p) / samples as f64).sqrt(),
    })
}

/// Search reduces to the minimal rotation: a binary string contains a zero iff its minimal rotation starts with one.
pub fn reduction_holds(x: &[u32]) -> bool {
    if x.is_empty() {
        return true;
    }
    x.contains(&0) == (x[lmsr_booth(x)] == 0)
}

/// Strings of length `n` whose block sensitivity differs from that of some rotation.
pub fn bs_rotation_counterexamples(n: usize) -> Vec<(Vec<u32>, usize, usize, usize)> {
    let mut out = vec![];
    if n == 0 || n > BS_MAX_N {
        return out;
    }
    let bits = |w: usize| (0..n).map(|i| ((w >> i) & 1) as u32).collect::<Vec<u32>>();
    let table: Vec<usize> = (0..1usize << n).map(|w| bs_raw(&bits(w))).collect();
    for w in 0..1usize << n {
        for r in 1..n {
            let rot = ((w >> r) | (w << (n - r))) & ((1 << n) - 1);
            if table[rot] != table[w] {
                out.push((bits(w), r, table[w], table[rot]));
                break;
            }
        }
    }
    out
}
