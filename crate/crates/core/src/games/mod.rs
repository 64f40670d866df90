//! The six concrete verification games and the common trait the referee and
//! the agents drive them through.

pub mod gcd;
pub mod intersect;
pub mod matmul;
pub mod opt;
pub mod sort;
mod text;
pub mod tm;

use rand::RngCore;
use thiserror::Error;

use crate::codec::{DecodeError, Decoder, Encoder};
use crate::referee::CostMeter;
use crate::types::{GameKind, GameSpec, Move, Outcome, Party, Reason};

pub use text::TaskFormatError;
use text::TextReader;

use gcd::{Bezout, GcdInstance, GcdTask};
use intersect::{IntersectInstance, IntersectTask};
use matmul::{Matrix, MatmulInstance, MatmulTask};
use opt::{OptInstance, OptSolution, OptTask};
use sort::{SortInstance, SortTask};
use tm::{TmInstance, TmTask};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("undecodable instance: {0}")]
    Decode(#[from] DecodeError),
    #[error("task file: {0}")]
    Format(#[from] TaskFormatError),
}

impl InstanceError {
    pub fn invalid(msg: &str) -> Self {
        InstanceError::Invalid(msg.to_string())
    }
}

/// A referee decision on the latest move, before metering is attached.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Judgement {
    pub outcome: Outcome,
    pub reason: Reason,
}

impl Judgement {
    pub fn proceed() -> Self {
        Self {
            outcome: Outcome::Continue,
            reason: Reason::Continue,
        }
    }

    pub fn win(party: Party, reason: Reason) -> Self {
        Self {
            outcome: Outcome::wins(party),
            reason,
        }
    }

    /// The author of an undecodable or out-of-shape move loses.
    pub fn malformed(author: Party) -> Self {
        Self::win(author.other(), Reason::Malformed)
    }
}

/// Rules and oracle strategies of one game instance (task plus claimed
/// solution).
pub trait VerificationGame: Send + Sync {
    fn kind(&self) -> GameKind;

    fn spec(&self) -> GameSpec;

    /// Judges the last of `moves` (non-empty, already turn-checked).
    fn judge(&self, moves: &[Move], meter: &mut CostMeter) -> Judgement;

    /// The move an honest party makes, or `None` to abstain.
    fn honest_move(&self, moves: &[Move], role: Party) -> Option<Vec<u8>>;

    /// The honest move if there is one, else a move that keeps the game
    /// going as long as possible.
    fn greedy_move(&self, moves: &[Move], role: Party) -> Option<Vec<u8>>;

    /// An opening challenge that is not backed by an actual error.
    fn fabricated_challenge(&self, rng: &mut dyn RngCore) -> Vec<u8>;

    /// Whether the claimed solution is correct (valid, for optimization).
    fn is_valid(&self) -> bool;
}

/// A task without a claimed solution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Task {
    Matmul(MatmulTask),
    Intersect(IntersectTask),
    Sort(SortTask),
    Gcd(GcdTask),
    Tm(TmTask),
    Opt(OptTask),
}

fn u64s_payload(v: &[u64]) -> Vec<u8> {
    Encoder::new().u64s(v).finish()
}

fn decode_u64s(bytes: &[u8]) -> Result<Vec<u64>, DecodeError> {
    let mut d = Decoder::new(bytes);
    let v = d.u64s()?;
    d.finish()?;
    Ok(v)
}

fn decode_tape(bytes: &[u8]) -> Result<Vec<u8>, DecodeError> {
    let mut d = Decoder::new(bytes);
    let v = d.bytes()?;
    d.finish()?;
    Ok(v)
}

impl Task {
    pub fn kind(&self) -> GameKind {
        match self {
            Task::Matmul(_) => GameKind::Matmul,
            Task::Intersect(_) => GameKind::Intersect,
            Task::Sort(_) => GameKind::Sort,
            Task::Gcd(_) => GameKind::Gcd,
            Task::Tm(_) => GameKind::Tm,
            Task::Opt(_) => GameKind::Opt,
        }
    }

    /// The oracle solution as a canonical payload.
    pub fn solve(&self) -> Vec<u8> {
        match self {
            Task::Matmul(t) => t.solve().encode(),
            Task::Intersect(t) => u64s_payload(&t.solve()),
            Task::Sort(t) => u64s_payload(&t.solve()),
            Task::Gcd(t) => t.solve().encode(),
            Task::Tm(t) => Encoder::new().bytes(&t.solve()).finish(),
            Task::Opt(t) => t.solve().encode(),
        }
    }

    /// Pairs the task with a claimed solution payload.
    pub fn instance(&self, payload: &[u8]) -> Result<Instance, InstanceError> {
        Ok(match self {
            Task::Matmul(t) => Instance::Matmul(MatmulInstance::new(t.clone(), Matrix::decode(payload)?)?),
            Task::Intersect(t) => {
                Instance::Intersect(IntersectInstance::new(t.clone(), decode_u64s(payload)?)?)
            }
            Task::Sort(t) => Instance::Sort(SortInstance::new(t.clone(), decode_u64s(payload)?)?),
            Task::Gcd(t) => Instance::Gcd(GcdInstance::new(*t, Bezout::decode(payload)?)?),
            Task::Tm(t) => Instance::Tm(TmInstance::new(t.clone(), decode_tape(payload)?)?),
            Task::Opt(t) => Instance::Opt(OptInstance::new(t.clone(), OptSolution::decode(payload)?)?),
        })
    }

    /// Claimed quality carried by an optimization payload.
    pub fn quality(&self, payload: &[u8]) -> Option<u64> {
        match self {
            Task::Opt(_) => OptSolution::decode(payload).ok().map(|s| s.quality()),
            _ => None,
        }
    }

    /// Parses the line-oriented task format; the first line is `game <kind>`.
    pub fn parse(text: &str) -> Result<Self, TaskFormatError> {
        let mut r = TextReader::new(text);
        let kind: String = r.value("game")?;
        let kind: GameKind = kind.parse().map_err(|e: crate::types::ParseEnumError| r.error(e.to_string()))?;
        let task = match kind {
            GameKind::Matmul => Task::Matmul(MatmulTask::from_reader(&mut r)?),
            GameKind::Intersect => Task::Intersect(IntersectTask::from_reader(&mut r)?),
            GameKind::Sort => Task::Sort(SortTask::from_reader(&mut r)?),
            GameKind::Gcd => Task::Gcd(GcdTask::from_reader(&mut r)?),
            GameKind::Tm => Task::Tm(TmTask::from_reader(&mut r)?),
            GameKind::Opt => Task::Opt(OptTask::from_reader(&mut r)?),
        };
        r.finish()?;
        Ok(task)
    }

    pub fn to_text(&self) -> String {
        match self {
            Task::Matmul(t) => t.to_text(),
            Task::Intersect(t) => t.to_text(),
            Task::Sort(t) => t.to_text(),
            Task::Gcd(t) => t.to_text(),
            Task::Tm(t) => t.to_text(),
            Task::Opt(t) => t.to_text(),
        }
    }

    fn tag(kind: GameKind) -> u8 {
        GameKind::ALL.iter().position(|&k| k == kind).expect("listed") as u8
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        e.u8(Self::tag(self.kind()));
        match self {
            Task::Matmul(t) => t.encode_into(&mut e),
            Task::Intersect(t) => t.encode_into(&mut e),
            Task::Sort(t) => t.encode_into(&mut e),
            Task::Gcd(t) => t.encode_into(&mut e),
            Task::Tm(t) => t.encode_into(&mut e),
            Task::Opt(t) => t.encode_into(&mut e),
        }
        e.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, InstanceError> {
        let mut d = Decoder::new(bytes);
        let task = Self::decode_from(&mut d)?;
        d.finish()?;
        Ok(task)
    }

    fn decode_from(d: &mut Decoder<'_>) -> Result<Self, InstanceError> {
        let tag = d.u8()?;
        Ok(match GameKind::ALL.get(tag as usize).ok_or(DecodeError::Tag(tag))? {
            GameKind::Matmul => Task::Matmul(MatmulTask::decode_from(d)?),
            GameKind::Intersect => Task::Intersect(IntersectTask::decode_from(d)?),
            GameKind::Sort => Task::Sort(SortTask::decode_from(d)?),
            GameKind::Gcd => Task::Gcd(GcdTask::decode_from(d)?),
            GameKind::Tm => Task::Tm(TmTask::decode_from(d)?),
            GameKind::Opt => Task::Opt(OptTask::decode_from(d)?),
        })
    }
}

/// A task together with a claimed solution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Instance {
    Matmul(MatmulInstance),
    Intersect(IntersectInstance),
    Sort(SortInstance),
    Gcd(GcdInstance),
    Tm(TmInstance),
    Opt(OptInstance),
}

impl Instance {
    pub fn game(&self) -> &dyn VerificationGame {
        match self {
            Instance::Matmul(i) => i,
            Instance::Intersect(i) => i,
            Instance::Sort(i) => i,
            Instance::Gcd(i) => i,
            Instance::Tm(i) => i,
            Instance::Opt(i) => i,
        }
    }

    pub fn task(&self) -> Task {
        match self {
            Instance::Matmul(i) => Task::Matmul(i.task.clone()),
            Instance::Intersect(i) => Task::Intersect(i.task.clone()),
            Instance::Sort(i) => Task::Sort(i.task.clone()),
            Instance::Gcd(i) => Task::Gcd(i.task),
            Instance::Tm(i) => Task::Tm(i.task.clone()),
            Instance::Opt(i) => Task::Opt(i.task.clone()),
        }
    }

    /// The claimed solution as a canonical payload.
    pub fn claimed_payload(&self) -> Vec<u8> {
        match self {
            Instance::Matmul(i) => i.claimed.encode(),
            Instance::Intersect(i) => u64s_payload(&i.claimed),
            Instance::Sort(i) => u64s_payload(&i.claimed),
            Instance::Gcd(i) => i.claimed.encode(),
            Instance::Tm(i) => Encoder::new().bytes(&i.claimed).finish(),
            Instance::Opt(i) => i.claimed.encode(),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        e.raw(&self.task().encode());
        e.bytes(&self.claimed_payload());
        e.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, InstanceError> {
        let mut d = Decoder::new(bytes);
        let task = Task::decode_from(&mut d)?;
        let payload = d.bytes()?;
        d.finish()?;
        task.instance(&payload)
    }
}

impl VerificationGame for Instance {
    fn kind(&self) -> GameKind {
        self.game().kind()
    }

    fn spec(&self) -> GameSpec {
        self.game().spec()
    }

    fn judge(&self, moves: &[Move], meter: &mut CostMeter) -> Judgement {
        self.game().judge(moves, meter)
    }

    fn honest_move(&self, moves: &[Move], role: Party) -> Option<Vec<u8>> {
        self.game().honest_move(moves, role)
    }

    fn greedy_move(&self, moves: &[Move], role: Party) -> Option<Vec<u8>> {
        self.game().greedy_move(moves, role)
    }

    fn fabricated_challenge(&self, rng: &mut dyn RngCore) -> Vec<u8> {
        self.game().fabricated_challenge(rng)
    }

    fn is_valid(&self) -> bool {
        self.game().is_valid()
    }
}
