//! Set intersection of two arrays: a two-round game.
//!
//! Round 1, the challenger claims either (i) `A(i_a) = B(i_b)` is missing
//! from `C`, or (ii) `C(j_c)` is not in `A ∩ B`. Round 2, the prover answers
//! with `i_c` such that `C(i_c) = A(i_a)` or with `(j_a, j_b)` such that
//! `C(j_c) = A(j_a) = B(j_b)`. Element equality is metered as a full-width
//! comparison of `r`-bit values.

use std::collections::BTreeSet;

use rand::{Rng, RngCore};

use super::text::{join, TaskFormatError, TextReader};
use super::{InstanceError, Judgement, VerificationGame};
use crate::codec::{DecodeError, Decoder, Encoder};
use crate::referee::CostMeter;
use crate::types::{log2_ceil, GameKind, GameSpec, Move, Party, Reason};

pub const INTERSECT_BUDGET: u64 = 6;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntersectTask {
    pub r: u32,
    pub a: Vec<u64>,
    pub b: Vec<u64>,
}

fn fits(r: u32, xs: &[u64]) -> bool {
    r >= 64 || xs.iter().all(|&x| x >> r == 0)
}

impl IntersectTask {
    pub fn new(r: u32, a: Vec<u64>, b: Vec<u64>) -> Result<Self, InstanceError> {
        if !(1..=64).contains(&r) {
            return Err(InstanceError::invalid("element width must be 1..=64 bits"));
        }
        if !fits(r, &a) || !fits(r, &b) {
            return Err(InstanceError::invalid("element wider than r bits"));
        }
        Ok(Self { r, a, b })
    }

    /// Distinct elements of `A ∩ B` in ascending order.
    pub fn solve(&self) -> Vec<u64> {
        let b: BTreeSet<u64> = self.b.iter().copied().collect();
        self.a
            .iter()
            .copied()
            .filter(|x| b.contains(x))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn size(&self) -> usize {
        self.a.len().max(self.b.len()).max(1)
    }

    pub fn to_text(&self) -> String {
        format!(
            "game intersect\nr {}\na {}\nb {}\n",
            self.r,
            join(&self.a),
            join(&self.b)
        )
    }

    pub(crate) fn from_reader(r: &mut TextReader<'_>) -> Result<Self, TaskFormatError> {
        let bits = r.value("r")?;
        let a = r.values("a")?;
        let b = r.values("b")?;
        Self::new(bits, a, b).map_err(|e| r.error(e.to_string()))
    }

    pub(crate) fn encode_into(&self, e: &mut Encoder) {
        e.u32(self.r).u64s(&self.a).u64s(&self.b);
    }

    pub(crate) fn decode_from(d: &mut Decoder<'_>) -> Result<Self, InstanceError> {
        let r = d.u32()?;
        let a = d.u64s()?;
        let b = d.u64s()?;
        Self::new(r, a, b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntersectInstance {
    pub task: IntersectTask,
    pub claimed: Vec<u64>,
}

/// Round-1 counterexample, 1-based indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntersectChallenge {
    /// `A(i_a) = B(i_b)` but the element is missing from `C`.
    Missing { i_a: u32, i_b: u32 },
    /// `C(j_c)` is not in `A ∩ B`.
    Alien { j_c: u32 },
}

impl IntersectChallenge {
    pub fn encode(&self) -> Vec<u8> {
        match *self {
            Self::Missing { i_a, i_b } => Encoder::new().u8(0).u32(i_a).u32(i_b).finish(),
            Self::Alien { j_c } => Encoder::new().u8(1).u32(j_c).finish(),
        }
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut d = Decoder::new(bytes);
        let out = match d.u8()? {
            0 => Self::Missing {
                i_a: d.u32()?,
                i_b: d.u32()?,
            },
            1 => Self::Alien { j_c: d.u32()? },
            t => return Err(DecodeError::Tag(t)),
        };
        d.finish()?;
        Ok(out)
    }
}

/// Round-2 answer; its shape follows the challenge case.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntersectDefense {
    Present { i_c: u32 },
    Witness { j_a: u32, j_b: u32 },
}

impl IntersectDefense {
    pub fn encode(&self) -> Vec<u8> {
        match *self {
            Self::Present { i_c } => Encoder::new().u32(i_c).finish(),
            Self::Witness { j_a, j_b } => Encoder::new().u32(j_a).u32(j_b).finish(),
        }
    }

    pub fn decode(bytes: &[u8], challenge: &IntersectChallenge) -> Result<Self, DecodeError> {
        let mut d = Decoder::new(bytes);
        let out = match challenge {
            IntersectChallenge::Missing { .. } => Self::Present { i_c: d.u32()? },
            IntersectChallenge::Alien { .. } => Self::Witness {
                j_a: d.u32()?,
                j_b: d.u32()?,
            },
        };
        d.finish()?;
        Ok(out)
    }
}

/// 1-based lookup; `None` when the index is out of range.
fn at(xs: &[u64], i: u32) -> Option<u64> {
    (i as usize).checked_sub(1).and_then(|i| xs.get(i).copied())
}

impl IntersectInstance {
    pub fn new(task: IntersectTask, claimed: Vec<u64>) -> Result<Self, InstanceError> {
        if !fits(task.r, &claimed) {
            return Err(InstanceError::invalid("claimed element wider than r bits"));
        }
        Ok(Self { task, claimed })
    }

    fn word_cost(&self) -> u64 {
        (self.task.r as u64).div_ceil(64)
    }

    fn least_challenge(&self) -> Option<IntersectChallenge> {
        let c: BTreeSet<u64> = self.claimed.iter().copied().collect();
        for (ia, x) in self.task.a.iter().enumerate() {
            if c.contains(x) {
                continue;
            }
            if let Some(ib) = self.task.b.iter().position(|y| y == x) {
                return Some(IntersectChallenge::Missing {
                    i_a: ia as u32 + 1,
                    i_b: ib as u32 + 1,
                });
            }
        }
        let truth: BTreeSet<u64> = self.task.solve().into_iter().collect();
        self.claimed
            .iter()
            .position(|x| !truth.contains(x))
            .map(|jc| IntersectChallenge::Alien { j_c: jc as u32 + 1 })
    }

    fn least_defense(&self, ch: &IntersectChallenge) -> Option<IntersectDefense> {
        match *ch {
            IntersectChallenge::Missing { i_a, .. } => {
                let x = at(&self.task.a, i_a)?;
                let ic = self.claimed.iter().position(|&y| y == x)?;
                Some(IntersectDefense::Present { i_c: ic as u32 + 1 })
            }
            IntersectChallenge::Alien { j_c } => {
                let x = at(&self.claimed, j_c)?;
                let ja = self.task.a.iter().position(|&y| y == x)?;
                let jb = self.task.b.iter().position(|&y| y == x)?;
                Some(IntersectDefense::Witness {
                    j_a: ja as u32 + 1,
                    j_b: jb as u32 + 1,
                })
            }
        }
    }
}

impl VerificationGame for IntersectInstance {
    fn kind(&self) -> GameKind {
        GameKind::Intersect
    }

    fn spec(&self) -> GameSpec {
        let n = self
            .task
            .a
            .len()
            .max(self.task.b.len())
            .max(self.claimed.len())
            .max(1) as u64;
        GameSpec::new(
            GameKind::Intersect,
            n,
            2,
            9,
            INTERSECT_BUDGET * log2_ceil(n) + 2 * self.word_cost(),
        )
        .expect("positive bounds")
    }

    fn judge(&self, moves: &[Move], meter: &mut CostMeter) -> Judgement {
        let (a, b, c) = (&self.task.a, &self.task.b, &self.claimed);
        let challenge = match IntersectChallenge::decode(&moves[0].payload) {
            Ok(ch) => ch,
            Err(_) => return Judgement::malformed(Party::Challenger),
        };
        let words = self.word_cost();
        match moves.len() {
            1 => match challenge {
                IntersectChallenge::Missing { i_a, i_b } => {
                    meter.charge(2);
                    match (at(a, i_a), at(b, i_b)) {
                        (Some(x), Some(y)) => {
                            meter.charge(words);
                            if x == y {
                                Judgement::proceed()
                            } else {
                                Judgement::win(Party::Prover, Reason::InvalidChallenge)
                            }
                        }
                        _ => Judgement::win(Party::Prover, Reason::InvalidChallenge),
                    }
                }
                IntersectChallenge::Alien { j_c } => {
                    meter.charge(1);
                    if at(c, j_c).is_some() {
                        Judgement::proceed()
                    } else {
                        Judgement::win(Party::Prover, Reason::InvalidChallenge)
                    }
                }
            },
            2 => {
                let defense = match IntersectDefense::decode(&moves[1].payload, &challenge) {
                    Ok(d) => d,
                    Err(_) => return Judgement::malformed(Party::Prover),
                };
                let upheld = match (challenge, defense) {
                    (IntersectChallenge::Missing { i_a, .. }, IntersectDefense::Present { i_c }) => {
                        meter.charge(1);
                        match (at(c, i_c), at(a, i_a)) {
                            (Some(x), Some(y)) => {
                                meter.charge(words);
                                x == y
                            }
                            _ => false,
                        }
                    }
                    (IntersectChallenge::Alien { j_c }, IntersectDefense::Witness { j_a, j_b }) => {
                        meter.charge(2);
                        match (at(c, j_c), at(a, j_a), at(b, j_b)) {
                            (Some(x), Some(y), Some(z)) => {
                                meter.charge(2 * words);
                                x == y && y == z
                            }
                            _ => false,
                        }
                    }
                    _ => unreachable!("defense shape follows the challenge"),
                };
                if upheld {
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
                let ch = IntersectChallenge::decode(&moves[0].payload).ok()?;
                self.least_defense(&ch).map(|d| d.encode())
            }
            _ => None,
        }
    }

    fn greedy_move(&self, moves: &[Move], role: Party) -> Option<Vec<u8>> {
        self.honest_move(moves, role).or_else(|| match (moves.len(), role) {
            (1, Party::Prover) => {
                let ch = IntersectChallenge::decode(&moves[0].payload).ok()?;
                Some(
                    match ch {
                        IntersectChallenge::Missing { .. } => IntersectDefense::Present { i_c: 1 },
                        IntersectChallenge::Alien { .. } => {
                            IntersectDefense::Witness { j_a: 1, j_b: 1 }
                        }
                    }
                    .encode(),
                )
            }
            _ => None,
        })
    }

    fn fabricated_challenge(&self, rng: &mut dyn RngCore) -> Vec<u8> {
        let ch = if !self.claimed.is_empty() && rng.gen_bool(0.5) {
            IntersectChallenge::Alien {
                j_c: rng.gen_range(1..=self.claimed.len() as u32),
            }
        } else {
            let pairs: Vec<(usize, usize)> = (0..self.task.a.len())
                .flat_map(|i| (0..self.task.b.len()).map(move |j| (i, j)))
                .filter(|&(i, j)| self.task.a[i] == self.task.b[j])
                .collect();
            match pairs.as_slice() {
                [] => IntersectChallenge::Alien {
                    j_c: self.claimed.len() as u32 + 1,
                },
                ps => {
                    let (i, j) = ps[rng.gen_range(0..ps.len())];
                    IntersectChallenge::Missing {
                        i_a: i as u32 + 1,
                        i_b: j as u32 + 1,
                    }
                }
            }
        };
        ch.encode()
    }

    fn is_valid(&self) -> bool {
        let truth: BTreeSet<u64> = self.task.solve().into_iter().collect();
        let claimed: BTreeSet<u64> = self.claimed.iter().copied().collect();
        truth == claimed
    }
}
