//! Domain types shared by the game engine, the referee and the protocols.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifier of a participant (task giver, prover, challenger, fee sink).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PartyId(String);

impl PartyId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<String> for PartyId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

impl From<&str> for PartyId {
    fn from(s: &str) -> Self {
        Self::new(s)
    }
}

/// The two sides of a verification game.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Party {
    Prover,
    Challenger,
}

impl Party {
    pub fn other(self) -> Party {
        match self {
            Party::Prover => Party::Challenger,
            Party::Challenger => Party::Prover,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Party::Prover => "prover",
            Party::Challenger => "challenger",
        }
    }

    /// The party that authors move `round` (1-based). The challenger opens.
    pub fn author_of(round: u32) -> Party {
        if round % 2 == 1 {
            Party::Challenger
        } else {
            Party::Prover
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {what}: {value:?}")]
pub struct ParseEnumError {
    pub what: &'static str,
    pub value: String,
}

impl FromStr for Party {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "prover" => Ok(Party::Prover),
            "challenger" => Ok(Party::Challenger),
            _ => Err(ParseEnumError {
                what: "party",
                value: s.to_string(),
            }),
        }
    }
}

/// The registered game kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameKind {
    Matmul,
    Intersect,
    Sort,
    Gcd,
    Tm,
    Opt,
}

impl GameKind {
    pub const ALL: [GameKind; 6] = [
        GameKind::Matmul,
        GameKind::Intersect,
        GameKind::Sort,
        GameKind::Gcd,
        GameKind::Tm,
        GameKind::Opt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GameKind::Matmul => "matmul",
            GameKind::Intersect => "intersect",
            GameKind::Sort => "sort",
            GameKind::Gcd => "gcd",
            GameKind::Tm => "tm",
            GameKind::Opt => "opt",
        }
    }
}

impl fmt::Display for GameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GameKind {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GameKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ParseEnumError {
                what: "game kind",
                value: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("game spec bound {0} must be at least 1")]
pub struct SpecError(pub &'static str);

/// Round bound `f`, per-message byte bound `g` and per-step referee budget
/// `h` of one game instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameSpec {
    pub game: GameKind,
    pub input_size_n: u64,
    pub round_bound_f: u32,
    pub message_bound_g: usize,
    pub referee_budget_h: u64,
}

impl GameSpec {
    pub fn new(
        game: GameKind,
        input_size_n: u64,
        round_bound_f: u32,
        message_bound_g: usize,
        referee_budget_h: u64,
    ) -> Result<Self, SpecError> {
        if input_size_n == 0 {
            return Err(SpecError("input_size_n"));
        }
        if round_bound_f == 0 {
            return Err(SpecError("round_bound_f"));
        }
        if message_bound_g == 0 {
            return Err(SpecError("message_bound_g"));
        }
        if referee_budget_h == 0 {
            return Err(SpecError("referee_budget_h"));
        }
        Ok(Self {
            game,
            input_size_n,
            round_bound_f,
            message_bound_g,
            referee_budget_h,
        })
    }
}

/// Number of bits needed to write `n` (at least 1). Used as the `log n`
/// factor of budget curves.
pub fn log2_ceil(n: u64) -> u64 {
    (64 - n.leading_zeros() as u64).max(1)
}

/// One posted message of a game.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Move {
    pub author: Party,
    pub round: u32,
    pub payload: Vec<u8>,
}

impl Move {
    pub fn new(author: Party, round: u32, payload: Vec<u8>) -> Self {
        Self {
            author,
            round,
            payload,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Continue,
    ProverWins,
    ChallengerWins,
}

impl Outcome {
    pub fn wins(party: Party) -> Outcome {
        match party {
            Party::Prover => Outcome::ProverWins,
            Party::Challenger => Outcome::ChallengerWins,
        }
    }

    pub fn winner(self) -> Option<Party> {
        match self {
            Outcome::Continue => None,
            Outcome::ProverWins => Some(Party::Prover),
            Outcome::ChallengerWins => Some(Party::Challenger),
        }
    }
}

/// Verdict codes written into transcripts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    /// The game goes on.
    Continue,
    /// The challenger declined to open a game.
    NoChallenge,
    /// The challenger's opening claim failed the referee's check.
    InvalidChallenge,
    /// A challenger claim was verified directly.
    ChallengeUpheld,
    /// The prover's defense or complaint was verified.
    DefenseUpheld,
    /// The prover's defense or complaint was refuted.
    DefenseFailed,
    /// A pointer led outside the solution (sorting case (iii)).
    Range,
    /// A party failed to move.
    Timeout,
    /// A payload was oversize or failed canonical decoding.
    Malformed,
}

impl Reason {
    pub const ALL: [Reason; 9] = [
        Reason::Continue,
        Reason::NoChallenge,
        Reason::InvalidChallenge,
        Reason::ChallengeUpheld,
        Reason::DefenseUpheld,
        Reason::DefenseFailed,
        Reason::Range,
        Reason::Timeout,
        Reason::Malformed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Reason::Continue => "continue",
            Reason::NoChallenge => "no_challenge",
            Reason::InvalidChallenge => "invalid_challenge",
            Reason::ChallengeUpheld => "challenge_upheld",
            Reason::DefenseUpheld => "defense_upheld",
            Reason::DefenseFailed => "defense_failed",
            Reason::Range => "range",
            Reason::Timeout => "timeout",
            Reason::Malformed => "malformed",
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Reason {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Reason::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| ParseEnumError {
                what: "verdict reason",
                value: s.to_string(),
            })
    }
}

/// The referee's decision for one step, with the metered cost of reaching it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepVerdict {
    pub outcome: Outcome,
    pub metered_cost: u64,
    pub reason: Reason,
}

/// A submitted solution `(S, q, d)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Solution {
    pub task_ref: String,
    pub payload: Vec<u8>,
    pub quality_q: Option<u64>,
    pub deposit_d: u64,
}
