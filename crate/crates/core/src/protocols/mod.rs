//! The three economic protocols around the verification games: the
//! competition, the contract and the subcommittee incentive round.

pub mod commit;
pub mod competition;
pub mod contract;
pub mod incentive;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use commit::{commit_digest, derive_nonce, Commitment, CommitError};
pub use competition::{order_solutions, run_competition, CompetitionResult, SolutionEntry};
pub use contract::{run_contract, ContractAttempt, ContractResult};
pub use incentive::{run_incentive_round, select_subcommittee, Candidate, IncentiveParams, IncentiveResult, Subcommittee};

use crate::agents::{AgentError, AgentStrategy, CostModel, Opening};
use crate::audit;
use crate::games::{Instance, Task};
use crate::ledger::{Ledger, LedgerError, Money};
use crate::play::play_game;
use crate::simnet::{Board, BoardError, PostKind};
use crate::transcript::{Status, Transcript};
use crate::types::{Party, PartyId, Reason};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("invalid task: {0}")]
    Invalid(String),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Board(#[from] BoardError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Commit(#[from] CommitError),
}

/// Phase lengths in board rounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Deadlines {
    pub reveal: u64,
    pub challenge: u64,
    pub step: u64,
}

impl Default for Deadlines {
    fn default() -> Self {
        Self {
            reveal: 1,
            challenge: 1,
            step: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskSpec {
    pub task: Task,
    pub prize: Money,
    pub min_deposit_prover: Money,
    pub min_deposit_challenger: Money,
    pub min_quality: Option<u64>,
    /// Network fee per submission or challenge.
    pub fee: Money,
    pub deadlines: Deadlines,
}

impl TaskSpec {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        let bad = |m: &str| Err(ProtocolError::Invalid(m.to_string()));
        if self.prize == 0 {
            return bad("prize must be positive");
        }
        if self.min_deposit_prover == 0 || self.min_deposit_challenger == 0 {
            return bad("minimum deposits must be positive");
        }
        let d = self.deadlines;
        if d.reveal == 0 || d.challenge == 0 || d.step == 0 {
            return bad("deadlines must be at least one round");
        }
        Ok(())
    }
}

/// Prize at `multiplier` times what solving and submitting costs.
pub fn default_prize(cost: &CostModel, fee: Money, multiplier: Money) -> Money {
    multiplier * (cost.solve + fee)
}

/// Local computation for one challenger playing a whole game.
pub fn expected_game_cost(cost: &CostModel, round_bound: u32) -> Money {
    cost.check + round_bound as Money * cost.per_move
}

/// Four times the larger of the fee and the expected game cost.
pub fn default_deposit(cost: &CostModel, fee: Money, round_bound: u32) -> Money {
    4 * fee.max(expected_game_cost(cost, round_bound))
}

/// A prover or challenger with its strategy and stake.
#[derive(Clone, Debug)]
pub struct Participant {
    pub id: PartyId,
    pub agent: AgentStrategy,
    pub deposit: Money,
    /// Extra stake a prover adds to rank its challenges earlier.
    pub top_up: Money,
    /// False models a prover that commits and never reveals.
    pub reveals: bool,
}

impl Participant {
    pub fn new(id: impl Into<PartyId>, agent: AgentStrategy, deposit: Money) -> Self {
        Self {
            id: id.into(),
            agent,
            deposit,
            top_up: 0,
            reveals: true,
        }
    }
}

pub struct Env<'a> {
    pub ledger: &'a mut Ledger,
    pub board: &'a mut Board,
    pub task_giver: PartyId,
}

#[derive(Clone, Debug)]
pub struct GameRecord {
    pub solution_ref: String,
    pub prover: PartyId,
    pub challenger: PartyId,
    pub instance: Instance,
    pub transcript: Transcript,
}

impl GameRecord {
    pub fn winner(&self) -> Party {
        self.transcript.winner().expect("recorded games are decided")
    }

    pub fn winner_id(&self) -> &PartyId {
        match self.winner() {
            Party::Prover => &self.prover,
            Party::Challenger => &self.challenger,
        }
    }

    pub fn loser_id(&self) -> &PartyId {
        match self.winner() {
            Party::Prover => &self.challenger,
            Party::Challenger => &self.prover,
        }
    }

    pub fn export(&self) -> String {
        audit::export(&self.transcript, &self.instance)
    }
}

pub(crate) fn two_mut<T>(v: &mut [T], i: usize, j: usize) -> (&mut T, &mut T) {
    assert_ne!(i, j, "a party cannot play itself");
    if i < j {
        let (a, b) = v.split_at_mut(j);
        (&mut a[i], &mut b[0])
    } else {
        let (a, b) = v.split_at_mut(i);
        (&mut b[0], &mut a[j])
    }
}

/// Plays one game and mirrors its moves and verdict on the board.
pub(crate) fn play_pair(
    env: &mut Env<'_>,
    spec: &TaskSpec,
    instance: &Instance,
    solution_ref: String,
    prover: &mut Participant,
    challenger: &mut Participant,
    opening: Opening,
) -> Result<GameRecord, ProtocolError> {
    let tag = format!("{solution_ref}/{}", challenger.id);
    let t = play_game(
        instance,
        &tag,
        &mut prover.agent.in_game(None),
        &mut challenger.agent.in_game(Some(opening)),
    );
    for m in t.moves() {
        let who = match m.author {
            Party::Prover => &prover.id,
            Party::Challenger => &challenger.id,
        };
        env.board.post(who, PostKind::Move, &tag, m.payload.clone(), None)?;
        env.board.advance_round();
    }
    let Status::Decided { winner, reason } = t.status() else {
        unreachable!("play_game always decides");
    };
    if reason == Reason::Timeout {
        for _ in 0..spec.deadlines.step {
            env.board.advance_round();
        }
    }
    let verdict = format!("{winner}|{reason}").into_bytes();
    env.board
        .post(&env.task_giver.clone(), PostKind::Verdict, &tag, verdict, None)?;
    Ok(GameRecord {
        solution_ref,
        prover: prover.id.clone(),
        challenger: challenger.id.clone(),
        instance: instance.clone(),
        transcript: t,
    })
}
