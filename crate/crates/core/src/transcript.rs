//! Append-only record of one verification game.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{GameSpec, Move, Party, Reason};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Open,
    Decided { winner: Party, reason: Reason },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranscriptError {
    #[error("transcript already decided")]
    Closed,
    #[error("out_of_turn: {got} moved where {expected} was due")]
    OutOfTurn { expected: Party, got: Party },
    #[error("move round {got} does not follow round {last}")]
    RoundGap { last: u32, got: u32 },
    #[error("oversize: payload of {len} bytes exceeds bound {bound}")]
    Oversize { len: usize, bound: usize },
    #[error("round {round} exceeds the round bound {bound}")]
    RoundBound { round: u32, bound: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    spec: GameSpec,
    solution_ref: String,
    moves: Vec<Move>,
    status: Status,
    /// Metered referee cost of each verified round, parallel to `moves`.
    step_costs: Vec<u64>,
}

impl Transcript {
    pub fn new(spec: GameSpec, solution_ref: impl Into<String>) -> Self {
        Self {
            spec,
            solution_ref: solution_ref.into(),
            moves: Vec::new(),
            status: Status::Open,
            step_costs: Vec::new(),
        }
    }

    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    pub fn solution_ref(&self) -> &str {
        &self.solution_ref
    }

    pub fn moves(&self) -> &[Move] {
        &self.moves
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn step_costs(&self) -> &[u64] {
        &self.step_costs
    }

    pub fn winner(&self) -> Option<Party> {
        match self.status {
            Status::Open => None,
            Status::Decided { winner, .. } => Some(winner),
        }
    }

    /// Party expected to author the next move.
    pub fn next_author(&self) -> Party {
        Party::author_of(self.moves.len() as u32 + 1)
    }

    pub fn next_round(&self) -> u32 {
        self.moves.len() as u32 + 1
    }

    /// Appends `m` after checking turn order, round contiguity and size.
    pub fn append(&mut self, m: Move) -> Result<(), TranscriptError> {
        if self.status != Status::Open {
            return Err(TranscriptError::Closed);
        }
        let expected = self.next_author();
        if m.author != expected {
            return Err(TranscriptError::OutOfTurn {
                expected,
                got: m.author,
            });
        }
        if m.round != self.next_round() {
            return Err(TranscriptError::RoundGap {
                last: self.moves.len() as u32,
                got: m.round,
            });
        }
        if m.round > self.spec.round_bound_f {
            return Err(TranscriptError::RoundBound {
                round: m.round,
                bound: self.spec.round_bound_f,
            });
        }
        if m.payload.len() > self.spec.message_bound_g {
            return Err(TranscriptError::Oversize {
                len: m.payload.len(),
                bound: self.spec.message_bound_g,
            });
        }
        self.moves.push(m);
        Ok(())
    }

    pub(crate) fn record_cost(&mut self, cost: u64) {
        self.step_costs.push(cost);
    }

    pub fn decide(&mut self, winner: Party, reason: Reason) -> Result<(), TranscriptError> {
        if self.status != Status::Open {
            return Err(TranscriptError::Closed);
        }
        self.status = Status::Decided { winner, reason };
        Ok(())
    }
}
