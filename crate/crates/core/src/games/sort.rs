//! Sorting `n` numbers of `r` bits: a two-round game.
//!
//! The solution is an index sequence `f(1..n)` that should be a permutation
//! listing `A` in non-decreasing order. Bits are numbered `1..=r` from the
//! most significant end, so the first differing position of an out-of-order
//! pair is where the larger value holds a 1.

use rand::{Rng, RngCore};

use super::text::{join, TaskFormatError, TextReader};
use super::{InstanceError, Judgement, VerificationGame};
use crate::codec::{DecodeError, Decoder, Encoder};
use crate::referee::CostMeter;
use crate::types::{log2_ceil, GameKind, GameSpec, Move, Party, Reason};

pub const SORT_BUDGET: u64 = 6;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SortTask {
    pub r: u32,
    pub a: Vec<u64>,
}

impl SortTask {
    pub fn new(r: u32, a: Vec<u64>) -> Result<Self, InstanceError> {
        if !(1..=64).contains(&r) {
            return Err(InstanceError::invalid("element width must be 1..=64 bits"));
        }
        if a.is_empty() {
            return Err(InstanceError::invalid("nothing to sort"));
        }
        if r < 64 && a.iter().any(|&x| x >> r != 0) {
            return Err(InstanceError::invalid("element wider than r bits"));
        }
        Ok(Self { r, a })
    }

    /// A stable sorting permutation, 1-based.
    pub fn solve(&self) -> Vec<u64> {
        let mut idx: Vec<u64> = (1..=self.a.len() as u64).collect();
        idx.sort_by_key(|&i| self.a[i as usize - 1]);
        idx
    }

    /// Bit `b` (1-based, most significant first) of `x`.
    pub fn bit(&self, x: u64, b: u32) -> u64 {
        (x >> (self.r - b)) & 1
    }

    /// First (most significant) position where `x` and `y` differ.
    pub fn first_difference(&self, x: u64, y: u64) -> Option<u32> {
        (1..=self.r).find(|&b| self.bit(x, b) != self.bit(y, b))
    }

    pub fn to_text(&self) -> String {
        format!("game sort\nr {}\na {}\n", self.r, join(&self.a))
    }

    pub(crate) fn from_reader(r: &mut TextReader<'_>) -> Result<Self, TaskFormatError> {
        let bits = r.value("r")?;
        let a = r.values("a")?;
        Self::new(bits, a).map_err(|e| r.error(e.to_string()))
    }

    pub(crate) fn encode_into(&self, e: &mut Encoder) {
        e.u32(self.r).u64s(&self.a);
    }

    pub(crate) fn decode_from(d: &mut Decoder<'_>) -> Result<Self, InstanceError> {
        let r = d.u32()?;
        let a = d.u64s()?;
        Self::new(r, a)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SortInstance {
    pub task: SortTask,
    pub claimed: Vec<u64>,
}

/// Round-1 challenge cases, 1-based positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SortChallenge {
    /// (i) `f(j)` lies outside `1..=n`.
    Range { j: u32 },
    /// (ii) `f(i) = f(j)` with `i != j`.
    Duplicate { i: u32, j: u32 },
    /// (iii) `A[f(j)] > A[f(j+1)]`, first differing at bit `b`.
    Order { j: u32, b: u32 },
}

impl SortChallenge {
    pub fn encode(&self) -> Vec<u8> {
        match *self {
            Self::Range { j } => Encoder::new().u8(0).u32(j).finish(),
            Self::Duplicate { i, j } => Encoder::new().u8(1).u32(i).u32(j).finish(),
            Self::Order { j, b } => Encoder::new().u8(2).u32(j).u32(b).finish(),
        }
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut d = Decoder::new(bytes);
        let out = match d.u8()? {
            0 => Self::Range { j: d.u32()? },
            1 => Self::Duplicate {
                i: d.u32()?,
                j: d.u32()?,
            },
            2 => Self::Order {
                j: d.u32()?,
                b: d.u32()?,
            },
            t => return Err(DecodeError::Tag(t)),
        };
        d.finish()?;
        Ok(out)
    }
}

pub fn encode_defense(b_prime: u32) -> Vec<u8> {
    Encoder::new().u32(b_prime).finish()
}

pub fn decode_defense(bytes: &[u8]) -> Result<u32, DecodeError> {
    let mut d = Decoder::new(bytes);
    let b = d.u32()?;
    d.finish()?;
    Ok(b)
}

impl SortInstance {
    pub fn new(task: SortTask, claimed: Vec<u64>) -> Result<Self, InstanceError> {
        if claimed.len() != task.a.len() {
            return Err(InstanceError::invalid("solution length differs from input length"));
        }
        Ok(Self { task, claimed })
    }

    fn n(&self) -> usize {
        self.task.a.len()
    }

    /// `f(pos)` for 1-based `pos`, when `pos` is in range.
    fn f(&self, pos: u32) -> Option<u64> {
        (pos as usize)
            .checked_sub(1)
            .and_then(|p| self.claimed.get(p).copied())
    }

    /// `A[idx]` for a 1-based index value, when in range.
    fn value(&self, idx: u64) -> Option<u64> {
        (idx as usize)
            .checked_sub(1)
            .and_then(|i| self.task.a.get(i).copied())
    }

    fn least_challenge(&self) -> Option<SortChallenge> {
        let n = self.n() as u64;
        if let Some(j) = self.claimed.iter().position(|&f| f < 1 || f > n) {
            return Some(SortChallenge::Range { j: j as u32 + 1 });
        }
        for i in 0..self.n() {
            for j in i + 1..self.n() {
                if self.claimed[i] == self.claimed[j] {
                    return Some(SortChallenge::Duplicate {
                        i: i as u32 + 1,
                        j: j as u32 + 1,
                    });
                }
            }
        }
        (1..self.n() as u32).find_map(|j| {
            let x = self.value(self.f(j)?)?;
            let y = self.value(self.f(j + 1)?)?;
            (x > y).then(|| SortChallenge::Order {
                j,
                b: self.task.first_difference(x, y).expect("x > y differ"),
            })
        })
    }
}

impl VerificationGame for SortInstance {
    fn kind(&self) -> GameKind {
        GameKind::Sort
    }

    fn spec(&self) -> GameSpec {
        let n = self.n() as u64;
        GameSpec::new(GameKind::Sort, n, 2, 9, SORT_BUDGET * log2_ceil(n))
            .expect("positive bounds")
    }

    fn judge(&self, moves: &[Move], meter: &mut CostMeter) -> Judgement {
        let n = self.n() as u32;
        let challenge = match SortChallenge::decode(&moves[0].payload) {
            Ok(c) => c,
            Err(_) => return Judgement::malformed(Party::Challenger),
        };
        let in_range = |x: u32| (1..=n).contains(&x);
        match moves.len() {
            1 => match challenge {
                SortChallenge::Range { j } => {
                    meter.charge(3);
                    match self.f(j) {
                        Some(f) if f < 1 || f > n as u64 => {
                            Judgement::win(Party::Challenger, Reason::ChallengeUpheld)
                        }
                        _ => Judgement::win(Party::Prover, Reason::InvalidChallenge),
                    }
                }
                SortChallenge::Duplicate { i, j } => {
                    meter.charge(6);
                    if in_range(i) && in_range(j) && i != j && self.f(i) == self.f(j) {
                        Judgement::win(Party::Challenger, Reason::ChallengeUpheld)
                    } else {
                        Judgement::win(Party::Prover, Reason::InvalidChallenge)
                    }
                }
                SortChallenge::Order { j, b } => {
                    meter.charge(4);
                    if !(1..n).contains(&j) || !(1..=self.task.r).contains(&b) {
                        return Judgement::win(Party::Prover, Reason::InvalidChallenge);
                    }
                    meter.charge(4);
                    let (Some(x), Some(y)) = (
                        self.f(j).and_then(|f| self.value(f)),
                        self.f(j + 1).and_then(|f| self.value(f)),
                    ) else {
                        return Judgement::win(Party::Challenger, Reason::Range);
                    };
                    meter.charge(2);
                    if self.task.bit(x, b) == 1 && self.task.bit(y, b) == 0 {
                        Judgement::proceed()
                    } else {
                        Judgement::win(Party::Prover, Reason::InvalidChallenge)
                    }
                }
            },
            2 => {
                let SortChallenge::Order { j, b } = challenge else {
                    return Judgement::malformed(Party::Prover);
                };
                let b_prime = match decode_defense(&moves[1].payload) {
                    Ok(bp) => bp,
                    Err(_) => return Judgement::malformed(Party::Prover),
                };
                meter.charge(2);
                if !(1..b).contains(&b_prime) {
                    return Judgement::win(Party::Challenger, Reason::DefenseFailed);
                }
                // round 1 established both values are in range
                meter.charge(4);
                let x = self.value(self.f(j).expect("checked")).expect("checked");
                let y = self.value(self.f(j + 1).expect("checked")).expect("checked");
                if self.task.bit(x, b_prime) != self.task.bit(y, b_prime) {
                    Judgement::win(Party::Prover, Reason::DefenseUpheld)
                } else {
                    Judgement::win(Party::Challenger, Reason::DefenseFailed)
                }
            }
            _ => Judgement::malformed(moves.last().expect("non-empty").author),
        }
    }

    fn honest_move(&self, moves: &[Move], role: Party) -> Option<Vec<u8>> {
        match (moves.len(), role) {
            (0, Party::Challenger) => self.least_challenge().map(|c| c.encode()),
            (1, Party::Prover) => {
                let SortChallenge::Order { j, b } = SortChallenge::decode(&moves[0].payload).ok()?
                else {
                    return None;
                };
                let x = self.value(self.f(j)?)?;
                let y = self.value(self.f(j + 1)?)?;
                let first = self.task.first_difference(x, y)?;
                (first < b).then(|| encode_defense(first))
            }
            _ => None,
        }
    }

    fn greedy_move(&self, moves: &[Move], role: Party) -> Option<Vec<u8>> {
        self.honest_move(moves, role).or(match (moves.len(), role) {
            (1, Party::Prover) => Some(encode_defense(1)),
            _ => None,
        })
    }

    fn fabricated_challenge(&self, rng: &mut dyn RngCore) -> Vec<u8> {
        // order claims that pass the round-1 bit test, if the input has any
        let candidates: Vec<SortChallenge> = (1..self.n() as u32)
            .flat_map(|j| (1..=self.task.r).map(move |b| (j, b)))
            .filter(|&(j, b)| {
                let x = self.f(j).and_then(|f| self.value(f));
                let y = self.f(j + 1).and_then(|f| self.value(f));
                matches!((x, y), (Some(x), Some(y)) if self.task.bit(x, b) == 1 && self.task.bit(y, b) == 0)
            })
            .map(|(j, b)| SortChallenge::Order { j, b })
            .collect();
        let ch = if !candidates.is_empty() && rng.gen_bool(0.5) {
            candidates[rng.gen_range(0..candidates.len())]
        } else {
            let i = rng.gen_range(1..=self.n() as u32);
            SortChallenge::Duplicate { i, j: i }
        };
        ch.encode()
    }

    fn is_valid(&self) -> bool {
        let n = self.n();
        let mut seen = vec![false; n];
        for &f in &self.claimed {
            match (f as usize).checked_sub(1) {
                Some(i) if i < n && !seen[i] => seen[i] = true,
                _ => return false,
            }
        }
        self.claimed
            .windows(2)
            .all(|w| self.task.a[w[0] as usize - 1] <= self.task.a[w[1] as usize - 1])
    }
}
