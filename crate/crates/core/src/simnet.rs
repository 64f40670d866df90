//! The public board standing in for the chain, its round clock, and
//! seeded fixture generation.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::games::gcd::GcdTask;
use crate::games::intersect::IntersectTask;
use crate::games::matmul::{Matrix, MatmulTask};
use crate::games::opt::{OptTask, Sample};
use crate::games::sort::SortTask;
use crate::games::tm::{Machine, TmTask};
use crate::games::{InstanceError, Task};
use crate::types::{GameKind, PartyId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PostKind {
    Task,
    Commit,
    Reveal,
    Withdrawal,
    Challenge,
    Move,
    Verdict,
    Response,
    Settlement,
}

impl PostKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PostKind::Task => "task",
            PostKind::Commit => "commit",
            PostKind::Reveal => "reveal",
            PostKind::Withdrawal => "withdrawal",
            PostKind::Challenge => "challenge",
            PostKind::Move => "move",
            PostKind::Verdict => "verdict",
            PostKind::Response => "response",
            PostKind::Settlement => "settlement",
        }
    }
}

impl fmt::Display for PostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Post {
    pub id: usize,
    pub round: u64,
    pub party: PartyId,
    pub kind: PostKind,
    /// Groups posts, e.g. the game a move belongs to.
    pub tag: String,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoardError {
    #[error("{kind} post of {bytes} bytes exceeds the {limit}-byte bound")]
    Oversize { kind: PostKind, bytes: usize, limit: usize },
}

#[derive(Clone, Debug, Default)]
pub struct Board {
    posts: Vec<Post>,
    links: Vec<[u8; 32]>,
    round: u64,
}

fn link(prev: &[u8; 32], p: &Post) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(prev);
    h.update(p.round.to_be_bytes());
    for field in [p.party.as_str().as_bytes(), p.kind.as_str().as_bytes(), p.tag.as_bytes()] {
        h.update((field.len() as u64).to_be_bytes());
        h.update(field);
    }
    h.update(&p.payload);
    h.finalize().into()
}

impl Board {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    /// Appends a post. `limit` is the size bound for this kind, if any.
    pub fn post(
        &mut self,
        party: &PartyId,
        kind: PostKind,
        tag: impl Into<String>,
        payload: Vec<u8>,
        limit: Option<usize>,
    ) -> Result<usize, BoardError> {
        if let Some(limit) = limit {
            if payload.len() > limit {
                return Err(BoardError::Oversize {
                    kind,
                    bytes: payload.len(),
                    limit,
                });
            }
        }
        let p = Post {
            id: self.posts.len(),
            round: self.round,
            party: party.clone(),
            kind,
            tag: tag.into(),
            payload,
        };
        self.links.push(link(&self.head(), &p));
        self.posts.push(p);
        Ok(self.posts.len() - 1)
    }

    pub fn advance_round(&mut self) -> u64 {
        self.round += 1;
        self.round
    }

    /// Digest of the whole post list so far.
    pub fn head(&self) -> [u8; 32] {
        self.links.last().copied().unwrap_or([0; 32])
    }

    /// Recomputes the chain; false if any post was altered after the fact.
    pub fn verify_chain(&self) -> bool {
        let mut h = [0; 32];
        let mut last_round = 0;
        for (p, l) in self.posts.iter().zip(&self.links) {
            h = link(&h, p);
            if h != *l || p.round < last_round {
                return false;
            }
            last_round = p.round;
        }
        self.posts.len() == self.links.len()
    }

    pub fn bytes_by_kind(&self) -> BTreeMap<PostKind, usize> {
        let mut out = BTreeMap::new();
        for p in &self.posts {
            *out.entry(p.kind).or_insert(0) += p.payload.len();
        }
        out
    }

    /// Move bytes per game tag.
    pub fn game_bytes(&self) -> BTreeMap<&str, usize> {
        let mut out = BTreeMap::new();
        for p in self.posts.iter().filter(|p| p.kind == PostKind::Move) {
            *out.entry(p.tag.as_str()).or_insert(0) += p.payload.len();
        }
        out
    }

    /// `post|round|party|kind|bytes` lines followed by exported transcripts.
    pub fn dump(&self, transcripts: &[String]) -> String {
        let mut out = String::new();
        for p in &self.posts {
            let _ = writeln!(out, "post|{}|{}|{}|{}", p.round, p.party, p.kind, p.payload.len());
        }
        for t in transcripts {
            out.push_str(t);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fixture {
    pub task: Task,
    /// The oracle solution payload.
    pub oracle: Vec<u8>,
}

pub const FIXTURE_MODULUS: u64 = 97;
pub const FIXTURE_WIDTH: u32 = 8;

/// A seeded instance of `game`; `size` is the dimension, list length,
/// decimal digits, input length or sample count depending on the game.
pub fn gen_fixture(game: GameKind, size: usize, seed: u64) -> Result<Fixture, InstanceError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (game as u64) << 56);
    let size = size.max(1);
    let task = match game {
        GameKind::Matmul => {
            let mut m = || {
                Matrix::from_rows(
                    (0..size)
                        .map(|_| (0..size).map(|_| rng.gen_range(0..FIXTURE_MODULUS)).collect())
                        .collect(),
                )
            };
            let a = m()?;
            let b = m()?;
            Task::Matmul(MatmulTask::new(FIXTURE_MODULUS, a, b)?)
        }
        GameKind::Intersect => {
            let universe: Vec<u64> = (0..1u64 << FIXTURE_WIDTH).collect();
            let pick: Vec<u64> = universe.choose_multiple(&mut rng, 2 * size).copied().collect();
            let a: Vec<u64> = pick[..size].to_vec();
            // about half of B is drawn from A
            let mut b: Vec<u64> = (0..size)
                .map(|j| if rng.gen_bool(0.5) { a[rng.gen_range(0..size)] } else { pick[size + j] })
                .collect();
            b.sort_unstable();
            b.dedup();
            b.shuffle(&mut rng);
            Task::Intersect(IntersectTask::new(FIXTURE_WIDTH, a, b)?)
        }
        GameKind::Sort => {
            let a = (0..size).map(|_| rng.gen_range(0..1 << FIXTURE_WIDTH)).collect();
            Task::Sort(SortTask::new(FIXTURE_WIDTH, a)?)
        }
        GameKind::Gcd => {
            let hi = 10u64.pow(size.min(17) as u32);
            Task::Gcd(GcdTask::new(rng.gen_range(1..hi), rng.gen_range(1..hi))?)
        }
        GameKind::Tm => Task::Tm(tm_fixture(size, &mut rng)?),
        GameKind::Opt if seed.is_multiple_of(2) => {
            let w: Vec<i64> = (0..2).map(|_| rng.gen_range(-3..=3)).collect();
            let samples = (0..size)
                .map(|_| {
                    let x: Vec<i64> = (0..2).map(|_| rng.gen_range(-8..=8)).collect();
                    let above = w[0] * x[0] + w[1] * x[1] >= 0;
                    Sample {
                        c: above != rng.gen_bool(0.1),
                        x,
                    }
                })
                .collect();
            Task::Opt(OptTask::classifier(2, samples)?)
        }
        GameKind::Opt => {
            let bits = size.clamp(2, 40) as u32;
            Task::Opt(OptTask::factorization(rng.gen_range(2..=1u64 << bits))?)
        }
    };
    Ok(Fixture {
        oracle: task.solve(),
        task,
    })
}

/// Doubler on `1^size` for even draws, a random three-state machine
/// otherwise. Space is the least power of two holding the output; time is
/// the least power of two in which the doubler halts.
fn tm_fixture(size: usize, rng: &mut ChaCha8Rng) -> Result<TmTask, InstanceError> {
    let h = (usize::BITS - (2 * size + 1).leading_zeros()).max(2);
    if rng.gen_bool(0.5) {
        let m = Machine::doubler();
        let input = vec![m.symbol('1').expect("in alphabet"); size];
        let mut last = None;
        for k in h..=24 - h {
            let t = TmTask::new(m.clone(), input.clone(), 2, k, h, (1, 2))?;
            let end = t.trace().pop().expect("non-empty");
            let halted = m.lookup(end.state, end.tape[end.head as usize]).is_none();
            last = Some(t);
            if halted {
                break;
            }
        }
        Ok(last.expect("at least one bound tried"))
    } else {
        let m = Machine::random(rng, 3, 3);
        let input = (0..size).map(|_| rng.gen_range(0..3)).collect();
        TmTask::new(m, input, 2, h + 3, h, (1, 2))
    }
}
