//! Prover and challenger behaviour, error injection and payoff bookkeeping.

pub mod error_model;
pub mod payoff;
pub mod sampler;

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use error_model::ErrorModel;
pub use payoff::{bootstrap_mean_ci, payoff_summary, summary_text, PayoffRecord, PayoffRow};

use crate::codec::DecodeError;
use crate::games::{Instance, InstanceError, Task, VerificationGame};
use crate::ledger::Money;
use crate::play::Strategy;
use crate::types::{GameKind, Move, Party};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Prover,
    Challenger,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Prover => "prover",
            Role::Challenger => "challenger",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Policy {
    Honest,
    Corrupt(ErrorModel),
    /// Takes part with this probability.
    Lazy(f64),
    /// Fabricates a challenge with this probability, otherwise checks honestly.
    FalseAlarm(f64),
    /// Number of random probes.
    Sampler(u32),
}

impl Policy {
    pub fn label(&self) -> &'static str {
        match self {
            Policy::Honest => "honest",
            Policy::Corrupt(_) => "corrupt",
            Policy::Lazy(_) => "lazy",
            Policy::FalseAlarm(_) => "false_alarm",
            Policy::Sampler(_) => "sampler",
        }
    }
}

/// Computation costs in money units.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostModel {
    pub solve: Money,
    pub check: Money,
    pub per_move: Money,
    #[serde(default)]
    pub per_sample: Money,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            solve: 10,
            check: 10,
            per_move: 1,
            per_sample: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("error model {model} does not apply to {game} games")]
    Incompatible { model: ErrorModel, game: GameKind },
    #[error("error model {model} found nothing to corrupt in this {game} solution")]
    NotApplicable { model: ErrorModel, game: GameKind },
    #[error("{0} games have no sampling rule")]
    NoSamplingRule(GameKind),
    #[error("policy {policy} is not available to a {role}")]
    RolePolicy { role: Role, policy: &'static str },
    #[error("probability {0} outside [0, 1]")]
    Probability(f64),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

#[derive(Clone, Debug)]
pub struct AgentStrategy {
    pub role: Role,
    pub policy: Policy,
    pub cost: CostModel,
    rng: ChaCha8Rng,
    spent: Money,
    moves: u32,
    knows_truth: bool,
}

fn check_probability(p: f64) -> Result<(), AgentError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(AgentError::Probability(p))
    }
}

pub fn make_prover(policy: Policy, game: GameKind, cost: CostModel, seed: u64) -> Result<AgentStrategy, AgentError> {
    match policy {
        Policy::Honest => {}
        Policy::Corrupt(m) if m.supports(game) => {}
        Policy::Corrupt(model) => return Err(AgentError::Incompatible { model, game }),
        Policy::Lazy(p) => check_probability(p)?,
        Policy::FalseAlarm(_) | Policy::Sampler(_) => {
            return Err(AgentError::RolePolicy {
                role: Role::Prover,
                policy: policy.label(),
            })
        }
    }
    Ok(AgentStrategy::new(Role::Prover, policy, cost, seed))
}

pub fn make_challenger(
    policy: Policy,
    game: GameKind,
    cost: CostModel,
    seed: u64,
) -> Result<AgentStrategy, AgentError> {
    match policy {
        Policy::Honest => {}
        Policy::Lazy(p) | Policy::FalseAlarm(p) => check_probability(p)?,
        Policy::Sampler(_) if sampler::has_sampling_rule(game) => {}
        Policy::Sampler(_) => return Err(AgentError::NoSamplingRule(game)),
        Policy::Corrupt(_) => {
            return Err(AgentError::RolePolicy {
                role: Role::Challenger,
                policy: policy.label(),
            })
        }
    }
    Ok(AgentStrategy::new(Role::Challenger, policy, cost, seed))
}

impl AgentStrategy {
    fn new(role: Role, policy: Policy, cost: CostModel, seed: u64) -> Self {
        Self {
            role,
            policy,
            cost,
            rng: ChaCha8Rng::seed_from_u64(seed),
            spent: 0,
            moves: 0,
            knows_truth: false,
        }
    }

    /// Computation spent so far.
    pub fn spent(&self) -> Money {
        self.spent
    }

    pub fn moves(&self) -> u32 {
        self.moves
    }

    /// Lazy agents sit out with the configured probability.
    pub fn participates(&mut self) -> bool {
        match self.policy {
            Policy::Lazy(p) => self.rng.gen_bool(p),
            _ => true,
        }
    }

    /// The payload this prover submits.
    pub fn solution(&mut self, task: &Task) -> Result<Vec<u8>, AgentError> {
        self.spent += self.cost.solve;
        let oracle = task.solve();
        match self.policy {
            Policy::Corrupt(m) => m.apply(task, &oracle, &mut self.rng),
            _ => {
                self.knows_truth = true;
                Ok(oracle)
            }
        }
    }

    /// Whether this agent challenges `instance`, and with which opening move.
    pub fn inspect(&mut self, instance: &Instance) -> Option<Opening> {
        match self.policy {
            Policy::Corrupt(_) => None,
            Policy::FalseAlarm(rate) if self.rng.gen_bool(rate) => Some(Opening {
                payload: instance.fabricated_challenge(&mut self.rng),
                fabricated: true,
            }),
            Policy::Sampler(k) => {
                self.spent += self.cost.per_sample * k as Money;
                if sampler::spot_check(instance, k, &mut self.rng)? {
                    self.honest_opening(instance)
                } else {
                    None
                }
            }
            _ => self.honest_opening(instance),
        }
    }

    fn honest_opening(&mut self, instance: &Instance) -> Option<Opening> {
        // one recomputation serves every solution of the same task
        if !self.knows_truth {
            self.spent += self.cost.check;
            self.knows_truth = true;
        }
        instance.honest_move(&[], Party::Challenger).map(|payload| Opening {
            payload,
            fabricated: false,
        })
    }

    /// Binds this agent to one game; `opening` is the challenger's first move.
    pub fn in_game(&mut self, opening: Option<Opening>) -> InGame<'_> {
        let fabricated = opening.as_ref().is_some_and(|o| o.fabricated);
        InGame {
            agent: self,
            opening: opening.map(|o| o.payload),
            fabricated,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Opening {
    pub payload: Vec<u8>,
    pub fabricated: bool,
}

/// An agent playing one verification game.
pub struct InGame<'a> {
    agent: &'a mut AgentStrategy,
    opening: Option<Vec<u8>>,
    fabricated: bool,
}

impl Strategy for InGame<'_> {
    fn next_move(&mut self, game: &dyn VerificationGame, moves: &[Move], role: Party) -> Option<Vec<u8>> {
        let m = if moves.is_empty() && role == Party::Challenger {
            self.opening.take()
        } else {
            let greedy = match role {
                Party::Prover => matches!(self.agent.policy, Policy::Corrupt(_)),
                Party::Challenger => self.fabricated,
            };
            if greedy {
                game.greedy_move(moves, role)
            } else {
                game.honest_move(moves, role)
            }
        };
        if m.is_some() {
            self.agent.moves += 1;
            self.agent.spent += self.agent.cost.per_move;
        }
        m
    }
}
