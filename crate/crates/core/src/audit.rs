//! Transcript export, parsing and offline replay.
//!
//! Export layout, one record per line:
//!
//! ```text
//! transcript|<solution ref>
//! spec|<game>|<n>|<f>|<g>|<h>
//! instance|<hex>
//! chain|<sha256 hex>
//! <round>|<author>|<hex payload>
//! ...
//! verdict|<winner>|<reason>
//! ```
//!
//! The `chain` line is optional. It is the last link of a sha256 chain over
//! the instance and every move, so an edit the referee's checks cannot see
//! is still noticed.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::games::{Instance, VerificationGame};
use crate::referee::verify_step;
use crate::transcript::{Status, Transcript};
use crate::types::{GameKind, GameSpec, Move, Party, Reason};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct AuditFormatError {
    pub line: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExportedTranscript {
    pub solution_ref: String,
    pub spec: GameSpec,
    pub instance: Instance,
    pub chain: Option<[u8; 32]>,
    pub moves: Vec<Move>,
    pub winner: Party,
    pub reason: Reason,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AuditOutcome {
    /// The referee's replay reaches the recorded verdict and the chain (if
    /// present) matches.
    Confirmed,
    /// The replay disagrees with the record.
    Refuted { round: u32, detail: String },
    /// The replay agrees but the chain does not: the edited bytes never
    /// changed a referee decision.
    Unaudited,
}

pub fn chain_digest(instance: &[u8], moves: &[Move]) -> [u8; 32] {
    let mut h: [u8; 32] = Sha256::digest(instance).into();
    for m in moves {
        let mut s = Sha256::new();
        s.update(h);
        s.update(m.round.to_be_bytes());
        s.update([(m.author == Party::Challenger) as u8]);
        s.update(&m.payload);
        h = s.finalize().into();
    }
    h
}

/// Writes a decided transcript with its instance.
///
/// # Panics
/// If the transcript is still open.
pub fn export(t: &Transcript, instance: &Instance) -> String {
    let Status::Decided { winner, reason } = t.status() else {
        panic!("only decided transcripts are exported");
    };
    let s = t.spec();
    let inst = instance.encode();
    let mut out = String::new();
    let _ = writeln!(out, "transcript|{}", t.solution_ref());
    let _ = writeln!(
        out,
        "spec|{}|{}|{}|{}|{}",
        s.game, s.input_size_n, s.round_bound_f, s.message_bound_g, s.referee_budget_h
    );
    let _ = writeln!(out, "instance|{}", hex::encode(&inst));
    let _ = writeln!(out, "chain|{}", hex::encode(chain_digest(&inst, t.moves())));
    for m in t.moves() {
        let _ = writeln!(out, "{}|{}|{}", m.round, m.author, hex::encode(&m.payload));
    }
    let _ = writeln!(out, "verdict|{winner}|{reason}");
    out
}

pub fn parse(text: &str) -> Result<ExportedTranscript, AuditFormatError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    let err = |line: usize, message: &str| AuditFormatError {
        line,
        message: message.to_string(),
    };
    let last_line = lines.last().map(|l| l.0).unwrap_or(0);
    let mut it = lines.iter().copied().peekable();
    let mut field = |key: &str| -> Result<(usize, Vec<&str>), AuditFormatError> {
        let (n, l) = it.next().ok_or_else(|| err(last_line, "unexpected end of file"))?;
        let parts: Vec<&str> = l.split('|').collect();
        if parts[0] != key {
            return Err(err(n, &format!("expected `{key}` record")));
        }
        Ok((n, parts[1..].to_vec()))
    };

    let (n, v) = field("transcript")?;
    let [solution_ref] = v[..] else {
        return Err(err(n, "transcript record takes one field"));
    };
    let (n, v) = field("spec")?;
    let spec = parse_spec(&v).ok_or_else(|| err(n, "bad spec record"))?;
    let (n, v) = field("instance")?;
    let bytes = match v[..] {
        [h] => hex::decode(h).map_err(|_| err(n, "instance is not hex"))?,
        _ => return Err(err(n, "instance record takes one field")),
    };
    let instance = Instance::decode(&bytes).map_err(|e| err(n, &e.to_string()))?;
    if instance.spec() != spec {
        return Err(err(n, "spec record does not match the instance"));
    }

    let mut chain = None;
    let mut moves = Vec::new();
    loop {
        let (n, l) = it.next().ok_or_else(|| err(last_line, "missing verdict record"))?;
        let parts: Vec<&str> = l.split('|').collect();
        match parts[..] {
            ["chain", h] if moves.is_empty() && chain.is_none() => {
                let d = hex::decode(h).map_err(|_| err(n, "chain is not hex"))?;
                chain = Some(d.try_into().map_err(|_| err(n, "chain must be 32 bytes"))?);
            }
            ["verdict", w, r] => {
                let winner = w.parse().map_err(|_| err(n, "unknown winner"))?;
                let reason: Reason = r.parse().map_err(|_| err(n, "unknown reason"))?;
                if reason == Reason::Continue {
                    return Err(err(n, "a verdict cannot be `continue`"));
                }
                if let Some((n, _)) = it.next() {
                    return Err(err(n, "content after the verdict"));
                }
                return Ok(ExportedTranscript {
                    solution_ref: solution_ref.to_string(),
                    spec,
                    instance,
                    chain,
                    moves,
                    winner,
                    reason,
                });
            }
            [round, author, payload] => {
                let round: u32 = round.parse().map_err(|_| err(n, "bad round number"))?;
                let author = author.parse().map_err(|_| err(n, "unknown author"))?;
                let payload = hex::decode(payload).map_err(|_| err(n, "payload is not hex"))?;
                moves.push(Move::new(author, round, payload));
            }
            _ => return Err(err(n, "unrecognized record")),
        }
    }
}

fn parse_spec(v: &[&str]) -> Option<GameSpec> {
    let [game, n, f, g, h] = v[..] else {
        return None;
    };
    GameSpec::new(
        game.parse::<GameKind>().ok()?,
        n.parse().ok()?,
        f.parse().ok()?,
        g.parse().ok()?,
        h.parse().ok()?,
    )
    .ok()
}

/// Re-runs the referee over the recorded moves and compares verdicts.
pub fn replay(x: &ExportedTranscript) -> AuditOutcome {
    let refuted = |round: u32, detail: String| AuditOutcome::Refuted { round, detail };
    let game: &dyn VerificationGame = &x.instance;
    let mut t = Transcript::new(x.spec, x.solution_ref.clone());
    let mut decided: Option<(Party, Reason)> = None;
    for m in &x.moves {
        if decided.is_some() {
            return refuted(m.round, "move recorded after the game was decided".into());
        }
        match t.append(m.clone()) {
            Ok(()) => {}
            Err(crate::transcript::TranscriptError::Oversize { .. }) => {
                decided = Some((m.author.other(), Reason::Malformed));
                continue;
            }
            Err(e) => return refuted(m.round, e.to_string()),
        }
        let v = verify_step(game, &t);
        if let Some(w) = v.outcome.winner() {
            decided = Some((w, v.reason));
        }
    }
    let expected = match decided {
        Some(d) => d,
        // an oversize post never reaches the board
        None if x.reason == Reason::Malformed => (t.next_author().other(), Reason::Malformed),
        // nobody moved again: the party due to move lost
        None if t.next_round() == 1 => (Party::Prover, Reason::NoChallenge),
        None => (t.next_author().other(), Reason::Timeout),
    };
    let round = x.moves.last().map(|m| m.round).unwrap_or(0);
    if expected != (x.winner, x.reason) {
        return refuted(
            round,
            format!(
                "referee decides {}|{}, record says {}|{}",
                expected.0, expected.1, x.winner, x.reason
            ),
        );
    }
    match x.chain {
        Some(c) if c != chain_digest(&x.instance.encode(), &x.moves) => AuditOutcome::Unaudited,
        _ => AuditOutcome::Confirmed,
    }
}

/// Parses and replays an exported transcript.
pub fn verify_text(text: &str) -> Result<AuditOutcome, AuditFormatError> {
    Ok(replay(&parse(text)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::Task;
    use crate::play::{play_game, Greedy, Honest};

    fn sort_instance(claimed: &[u64]) -> Instance {
        let task = Task::parse("game sort\nr 2\na 3 1 2\n").unwrap();
        let payload = crate::codec::Encoder::new().u64s(claimed).finish();
        task.instance(&payload).unwrap()
    }

    #[test]
    fn export_parse_replay_round_trip() {
        let inst = sort_instance(&[1, 3, 2]);
        let t = play_game(&inst, "s1", &mut Greedy, &mut Honest);
        let text = export(&t, &inst);
        assert!(text.ends_with("verdict|challenger|defense_failed\n"), "{text}");
        let x = parse(&text).unwrap();
        assert_eq!(x.moves, t.moves());
        assert_eq!(replay(&x), AuditOutcome::Confirmed);
    }

    #[test]
    fn flipped_verdict_is_refuted() {
        let inst = sort_instance(&[2, 3, 1]);
        let t = play_game(&inst, "s1", &mut Honest, &mut Honest);
        let text = export(&t, &inst).replace("verdict|prover|no_challenge", "verdict|challenger|no_challenge");
        assert!(matches!(verify_text(&text), Ok(AuditOutcome::Refuted { .. })));
    }

    #[test]
    fn truncated_file_is_a_format_error() {
        let inst = sort_instance(&[2, 3, 1]);
        let t = play_game(&inst, "s1", &mut Honest, &mut Honest);
        let text = export(&t, &inst);
        let cut = &text[..text.find("verdict").unwrap()];
        assert!(parse(cut).is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn chain_is_optional() {
        let inst = sort_instance(&[1, 3, 2]);
        let t = play_game(&inst, "s1", &mut Greedy, &mut Honest);
        let text: String = export(&t, &inst)
            .lines()
            .filter(|l| !l.starts_with("chain|"))
            .map(|l| format!("{l}\n"))
            .collect();
        assert_eq!(verify_text(&text), Ok(AuditOutcome::Confirmed));
    }
}
