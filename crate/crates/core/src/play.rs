//! The generic game loop.

use std::collections::VecDeque;

use crate::games::VerificationGame;
use crate::referee::verify_step;
use crate::transcript::{Transcript, TranscriptError};
use crate::types::{Move, Party, Reason};

/// A move policy for one side of a game. `None` means abstain.
pub trait Strategy {
    fn next_move(&mut self, game: &dyn VerificationGame, moves: &[Move], role: Party) -> Option<Vec<u8>>;
}

/// Plays the game's honest oracle.
#[derive(Clone, Copy, Debug, Default)]
pub struct Honest;

impl Strategy for Honest {
    fn next_move(&mut self, game: &dyn VerificationGame, moves: &[Move], role: Party) -> Option<Vec<u8>> {
        game.honest_move(moves, role)
    }
}

/// Honest when possible, otherwise whatever keeps the game alive.
#[derive(Clone, Copy, Debug, Default)]
pub struct Greedy;

impl Strategy for Greedy {
    fn next_move(&mut self, game: &dyn VerificationGame, moves: &[Move], role: Party) -> Option<Vec<u8>> {
        game.greedy_move(moves, role)
    }
}

/// Never moves.
#[derive(Clone, Copy, Debug, Default)]
pub struct Abstain;

impl Strategy for Abstain {
    fn next_move(&mut self, _: &dyn VerificationGame, _: &[Move], _: Party) -> Option<Vec<u8>> {
        None
    }
}

/// Replays a fixed list of payloads, then abstains.
#[derive(Clone, Debug, Default)]
pub struct Scripted(VecDeque<Vec<u8>>);

impl Scripted {
    pub fn new(moves: impl IntoIterator<Item = Vec<u8>>) -> Self {
        Self(moves.into_iter().collect())
    }
}

impl Strategy for Scripted {
    fn next_move(&mut self, _: &dyn VerificationGame, _: &[Move], _: Party) -> Option<Vec<u8>> {
        self.0.pop_front()
    }
}

/// Runs a game to a decision. The challenger opens; an abstaining party
/// loses (`no_challenge` in round 1, `timeout` later) and an oversize move
/// loses as `malformed`.
pub fn play_game(
    game: &dyn VerificationGame,
    solution_ref: &str,
    prover: &mut dyn Strategy,
    challenger: &mut dyn Strategy,
) -> Transcript {
    let mut t = Transcript::new(game.spec(), solution_ref);
    loop {
        let author = t.next_author();
        let round = t.next_round();
        let strategy: &mut dyn Strategy = match author {
            Party::Prover => &mut *prover,
            Party::Challenger => &mut *challenger,
        };
        let (winner, reason) = match strategy.next_move(game, t.moves(), author) {
            None if round == 1 => (Party::Prover, Reason::NoChallenge),
            None => (author.other(), Reason::Timeout),
            Some(payload) => match t.append(Move::new(author, round, payload)) {
                Ok(()) => {
                    let v = verify_step(game, &t);
                    t.record_cost(v.metered_cost);
                    match v.outcome.winner() {
                        Some(w) => (w, v.reason),
                        None => continue,
                    }
                }
                Err(TranscriptError::Oversize { .. }) => (author.other(), Reason::Malformed),
                // the round bound leaves no legal move
                Err(_) => (author.other(), Reason::Timeout),
            },
        };
        t.decide(winner, reason).expect("open until here");
        return t;
    }
}
