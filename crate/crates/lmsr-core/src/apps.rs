//! Canonical boundary-edges codes and rotation-equality detection among cycles.

use crate::error::{Error, Result};
use crate::lmsr_quantum::improved_lmsr;
use crate::det_sampling::lex_compare_q;
use crate::oracle_model::{RngStream, Session};
use crate::q_subroutines::CostModelConfig;
use crate::strings_core::{lmsr_booth, Alphabet, CircularString};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Classical,
    Quantum,
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classical" => Ok(Engine::Classical),
            "quantum" => Ok(Engine::Quantum),
            other => Err(Error::Parse(format!("unknown engine {other:?} (classical|quantum)"))),
        }
    }
}

/// Boundary-edges code over digits 1..=6, ordered `6 < 5 < ... < 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BecString {
    pub code: CircularString,
}

impl BecString {
    pub fn alphabet() -> Alphabet {
        Alphabet::with_order(6, vec![5, 4, 3, 2, 1, 0]).expect("valid order")
    }

    pub fn new(digits: &[u32]) -> Result<Self> {
        if digits.is_empty() {
            return Err(Error::EmptyString);
        }
        let chars = digits
            .iter()
            .enumerate()
            .map(|(pos, &d)| {
                if (1..=6).contains(&d) {
                    Ok(d - 1)
                } else {
                    Err(Error::CharOutOfRange { ch: d, pos, size: 6 })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { code: CircularString::new(Self::alphabet(), chars)? })
    }

    /// Digits written contiguously ("5616") or comma-separated.
    pub fn parse(line: &str) -> Result<Self> {
        let line = line.trim();
        let digits: Vec<u32> = if line.contains(',') {
            line.split(',')
                .map(|t| t.trim().parse::<u32>().map_err(|e| Error::Parse(format!("{t:?}: {e}"))))
                .collect::<Result<_>>()?
        } else {
            line.chars()
                .map(|c| c.to_digit(10).ok_or_else(|| Error::Parse(format!("unexpected character {c:?}"))))
                .collect::<Result<_>>()?
        };
        Self::new(&digits)
    }

    pub fn digits(&self) -> Vec<u32> {
        self.code.chars().iter().map(|c| c + 1).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BecCanonical {
    /// Canonical code as digits 1..=6.
    pub code: Vec<u32>,
    /// Rotation offset within the chosen orientation.
    pub offset: usize,
    /// True when the reversed code gave the canonical form.
    pub reversed: bool,
    pub charged: u64,
}

fn lmsr_with(engine: Engine, sess: &mut Session, s: &CircularString) -> Result<usize> {
    match engine {
        Engine::Classical => Ok(lmsr_booth(&s.ranked())),
        Engine::Quantum => Ok(improved_lmsr(sess, s)?.offset),
    }
}

/// Smallest rotation of the code or of its reverse under the custom order; ties keep the forward code.
pub fn bec_canonical(b: &BecString, engine: Engine, sess: &mut Session) -> Result<BecCanonical> {
    let before = sess.charged_total();
    let fwd = &b.code;
    let rev = fwd.reversed();
    let i = lmsr_with(engine, sess, fwd)?;
    let ir = lmsr_with(engine, sess, &rev)?;
    let (rf, rr) = (fwd.ranked(), rev.ranked());
    let n = rf.len();
    let ord = match engine {
        Engine::Classical => (0..n).map(|k| rf[(i + k) % n]).cmp((0..n).map(|k| rr[(ir + k) % n])),
        Engine::Quantum => lex_compare_q(sess, |k| rf[(i + k) % n], |k| rr[(ir + k) % n], n, "bec/compare")?,
    };
    let (src, offset, reversed) = if ord == Ordering::Greater { (&rev, ir, true) } else { (fwd, i, false) };
    let rot = src.rotation(offset);
    Ok(BecCanonical {
        code: rot.chars().iter().map(|c| c + 1).collect(),
        offset,
        reversed,
        charged: sess.charged_total() - before,
    })
}

/// Cycles of one common length.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleSet {
    pub cycles: Vec<CircularString>,
}

impl CycleSet {
    pub fn new(cycles: Vec<CircularString>) -> Result<Self> {
        if let Some(first) = cycles.first() {
            for c in &cycles[1..] {
                if c.len() != first.len() {
                    return Err(Error::UnequalLengths(first.len(), c.len()));
                }
            }
        }
        Ok(Self { cycles })
    }

    /// One cycle per nonempty line; a shared alphabet sized to the largest character.
    pub fn parse(text: &str) -> Result<Self> {
        let raw: Vec<CircularString> =
            text.lines().filter(|l| !l.trim().is_empty()).map(|l| CircularString::parse_line(l, None)).collect::<Result<_>>()?;
        let alpha = raw.iter().map(|c| c.alphabet().size()).max().unwrap_or(2);
        let cycles = raw.into_iter().map(|c| c.with_alphabet(Alphabet::new(alpha)?)).collect::<Result<_>>()?;
        Self::new(cycles)
    }

    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CyclesReport {
    /// Smallest `(i, j)`, `i < j`, with equal canonical rotations.
    pub pair: Option<(usize, usize)>,
    pub canonical_offsets: Vec<usize>,
    pub charged: u64,
    /// `m^(2/3)` comparator queries a quantum element-distinctness step would need; not executed.
    pub distinctness_queries_hypothetical: f64,
}

/// Canonicalizes every cycle (one RNG stream each) and finds a duplicate by sorting.
pub fn cycles_distinct(cs: &CycleSet, engine: Engine, cfg: CostModelConfig, seed: u64) -> Result<CyclesReport> {
    let m = cs.len();
    if m < 2 {
        return Err(Error::TooFew { need: 2, got: m });
    }
    let mut charged = 0;
    let mut offsets = Vec::with_capacity(m);
    for (i, c) in cs.cycles.iter().enumerate() {
        let mut sess = Session::new(RngStream::new(seed, i as u64), cfg);
        offsets.push(lmsr_with(engine, &mut sess, c)?);
        charged += sess.charged_total();
    }
    let forms: Vec<Vec<u32>> = cs.cycles.iter().zip(&offsets).map(|(c, &k)| c.rotation(k).ranked()).collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| forms[a].cmp(&forms[b]).then(a.cmp(&b)));
    let mut pair: Option<(usize, usize)> = None;
    for w in order.windows(2) {
        if forms[w[0]] == forms[w[1]] {
            // the first window of a group pairs its two smallest indices
            let cand = (w[0], w[1]);
            if pair.is_none_or(|p| cand < p) {
                pair = Some(cand);
            }
        }
    }
    Ok(CyclesReport {
        pair,
        canonical_offsets: offsets,
        charged,
        distinctness_queries_hypothetical: (m as f64).powf(2.0 / 3.0),
    })
}
