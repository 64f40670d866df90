//! The consensus competition: sealed submissions, ordering, challenges
//! processed pair by pair, settlement.

use std::collections::{BTreeMap, BTreeSet};

use super::{derive_nonce, play_pair, two_mut, Commitment, Env, GameRecord, Participant, ProtocolError, TaskSpec};
use crate::agents::{Opening, Policy, Role};
use crate::codec::Encoder;
use crate::games::Instance;
use crate::ledger::{EscrowId, EscrowStatus, Money, Purpose};
use crate::simnet::PostKind;
use crate::types::PartyId;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolutionEntry {
    pub party: PartyId,
    pub digest: [u8; 32],
    /// Claimed quality; zero for tasks without one.
    pub quality: u64,
    pub deposit: Money,
    pub payload: Vec<u8>,
}

/// Quality descending, then deposit descending, then digest ascending.
pub fn order_solutions(mut entries: Vec<SolutionEntry>) -> Vec<SolutionEntry> {
    entries.sort_by(|a, b| {
        b.quality
            .cmp(&a.quality)
            .then(b.deposit.cmp(&a.deposit))
            .then(a.digest.cmp(&b.digest))
    });
    entries
}

#[derive(Clone, Debug, Default)]
pub struct CompetitionResult {
    /// `S_1..S_m` after elimination.
    pub ordered: Vec<SolutionEntry>,
    /// Index into `ordered` of the accepted solution.
    pub winner: Option<usize>,
    pub games: Vec<GameRecord>,
    pub disqualified: BTreeSet<PartyId>,
    /// Committed but never revealed.
    pub withdrawn: Vec<PartyId>,
    /// Below the minimum deposit or quality, or not a well-formed solution.
    pub eliminated: Vec<PartyId>,
    /// Could not pay fees and deposits.
    pub excluded: Vec<PartyId>,
    pub prize_refunded: bool,
}

impl CompetitionResult {
    pub fn accepted(&self) -> Option<&SolutionEntry> {
        self.winner.map(|i| &self.ordered[i])
    }
}

struct Sealed {
    owner: usize,
    commitment: Commitment,
    message: Vec<u8>,
    entry: SolutionEntry,
}

struct Live {
    owner: usize,
    entry: SolutionEntry,
    instance: Instance,
}

struct Enrolled {
    solution: usize,
    challenger: usize,
    priority: Money,
    opening: Opening,
}

pub fn run_competition(
    spec: &TaskSpec,
    participants: &mut [Participant],
    env: &mut Env<'_>,
    seed: u64,
) -> Result<CompetitionResult, ProtocolError> {
    spec.validate()?;
    let giver = env.task_giver.clone();
    let mut out = CompetitionResult::default();
    let mut stakes: BTreeMap<PartyId, Vec<EscrowId>> = BTreeMap::new();

    // (a) the task and its prize
    env.ledger.pay_fee(&giver, spec.fee)?;
    let prize = env.ledger.open_escrow(&giver, Purpose::Prize, spec.prize)?;
    env.board.post(&giver, PostKind::Task, "task", spec.task.encode(), None)?;
    env.board.advance_round();

    // (b) sealed submissions, deposits held from here on
    let mut sealed = Vec::new();
    for (owner, p) in participants.iter_mut().enumerate() {
        if p.agent.role != Role::Prover || !p.agent.participates() {
            continue;
        }
        if p.deposit == 0 || env.ledger.balance(&p.id) < spec.fee + p.deposit {
            out.excluded.push(p.id.clone());
            continue;
        }
        let payload = p.agent.solution(&spec.task)?;
        let quality = spec.task.quality(&payload).unwrap_or(0);
        let message = Encoder::new().bytes(&payload).u64(quality).u64(p.deposit).finish();
        let nonce = derive_nonce(seed, &p.id);
        let commitment = Commitment::seal(p.id.clone(), &message, &nonce);
        env.ledger.pay_fee(&p.id, spec.fee)?;
        let escrow = env.ledger.open_escrow(&p.id, Purpose::ProverDeposit, p.deposit)?;
        stakes.entry(p.id.clone()).or_default().push(escrow);
        env.board.post(&p.id, PostKind::Commit, "", commitment.digest.to_vec(), None)?;
        sealed.push(Sealed {
            owner,
            entry: SolutionEntry {
                party: p.id.clone(),
                digest: commitment.digest,
                quality,
                deposit: p.deposit,
                payload,
            },
            commitment,
            message,
        });
    }
    env.board.advance_round();

    // (c) reveal, eliminate, order
    let mut revealed = Vec::new();
    for mut s in sealed {
        let p = &participants[s.owner];
        if !p.reveals {
            out.withdrawn.push(p.id.clone());
            continue;
        }
        let nonce = derive_nonce(seed, &p.id);
        let mut post = s.message.clone();
        post.extend_from_slice(&nonce);
        env.board.post(&p.id, PostKind::Reveal, "", post, None)?;
        s.commitment.reveal(std::mem::take(&mut s.message), nonce)?;
        revealed.push(s);
    }
    for _ in 0..spec.deadlines.reveal {
        env.board.advance_round();
    }
    for id in &out.withdrawn {
        for e in stakes.remove(id).unwrap_or_default() {
            env.ledger.slash_to(e, &giver)?;
        }
        env.board.post(id, PostKind::Withdrawal, "", Vec::new(), None)?;
    }
    let mut kept = Vec::new();
    let mut owners = BTreeMap::new();
    for s in revealed {
        let e = &s.entry;
        let instance = spec.task.instance(&e.payload);
        let short = e.deposit < spec.min_deposit_prover || spec.min_quality.is_some_and(|q| e.quality < q);
        match instance {
            Ok(instance) if !short => {
                owners.insert(e.party.clone(), (s.owner, instance));
                kept.push(s.entry);
            }
            Ok(_) => {
                for id in stakes.remove(&e.party).unwrap_or_default() {
                    env.ledger.refund(id)?;
                }
                out.eliminated.push(e.party.clone());
            }
            Err(_) => {
                for id in stakes.remove(&e.party).unwrap_or_default() {
                    env.ledger.slash_to(id, &giver)?;
                }
                out.eliminated.push(e.party.clone());
            }
        }
    }
    let live: Vec<Live> = order_solutions(kept)
        .into_iter()
        .map(|entry| {
            let (owner, instance) = owners.remove(&entry.party).expect("kept entries have owners");
            Live { owner, entry, instance }
        })
        .collect();
    out.ordered = live.iter().map(|l| l.entry.clone()).collect();

    // (d) challenges; one stake covers all of a party's challenges
    let mut pairs = Vec::new();
    for (c, p) in participants.iter_mut().enumerate() {
        let own_rank = live.iter().position(|l| l.owner == c);
        let eligible = match p.agent.role {
            Role::Challenger => p.agent.participates(),
            Role::Prover => own_rank.is_some() && !matches!(p.agent.policy, Policy::Corrupt(_)),
        };
        if !eligible {
            continue;
        }
        // a prover only contests solutions ranked ahead of its own
        let targets = own_rank.unwrap_or(live.len());
        let openings: Vec<(usize, Opening)> = (0..targets)
            .filter_map(|i| p.agent.inspect(&live[i].instance).map(|o| (i, o)))
            .collect();
        if openings.is_empty() {
            continue;
        }
        let fees = spec.fee * openings.len() as Money;
        let extra = match p.agent.role {
            Role::Challenger => p.deposit.max(spec.min_deposit_challenger),
            Role::Prover => p.top_up,
        };
        if env.ledger.balance(&p.id) < fees + extra {
            out.excluded.push(p.id.clone());
            continue;
        }
        if extra > 0 {
            let purpose = match p.agent.role {
                Role::Challenger => Purpose::ChallengerDeposit,
                Role::Prover => Purpose::ProverDeposit,
            };
            let e = env.ledger.open_escrow(&p.id, purpose, extra)?;
            stakes.entry(p.id.clone()).or_default().push(e);
        }
        let priority: Money = stakes[&p.id]
            .iter()
            .map(|&e| env.ledger.escrow(e).map(|e| e.amount).unwrap_or(0))
            .sum();
        for (i, opening) in openings {
            env.ledger.pay_fee(&p.id, spec.fee)?;
            env.board
                .post(&p.id, PostKind::Challenge, format!("s{}", i + 1), Vec::new(), None)?;
            pairs.push(Enrolled {
                solution: i,
                challenger: c,
                priority,
                opening,
            });
        }
    }
    for _ in 0..spec.deadlines.challenge {
        env.board.advance_round();
    }

    // (e) lexicographic pairs; a loser is slashed and thrown out
    pairs.sort_by(|a, b| {
        a.solution
            .cmp(&b.solution)
            .then(b.priority.cmp(&a.priority))
            .then(participants[a.challenger].id.cmp(&participants[b.challenger].id))
    });
    for pair in pairs {
        let l = &live[pair.solution];
        let challenger_id = participants[pair.challenger].id.clone();
        if out.disqualified.contains(&l.entry.party) || out.disqualified.contains(&challenger_id) {
            continue;
        }
        let (prover, challenger) = two_mut(participants, l.owner, pair.challenger);
        let solution_ref = format!("s{}", pair.solution + 1);
        let rec = play_pair(env, spec, &l.instance, solution_ref, prover, challenger, pair.opening)?;
        let (winner, loser) = (rec.winner_id().clone(), rec.loser_id().clone());
        for e in stakes.remove(&loser).unwrap_or_default() {
            env.ledger.slash_and_split(e, &winner, &giver)?;
        }
        out.disqualified.insert(loser);
        out.games.push(rec);
    }

    // (f) settlement
    out.winner = live.iter().position(|l| !out.disqualified.contains(&l.entry.party));
    match out.winner {
        Some(i) => {
            env.ledger.pay_prize(prize, &live[i].entry.party)?;
        }
        None => {
            env.ledger.refund(prize)?;
            out.prize_refunded = true;
        }
    }
    for e in stakes.into_values().flatten() {
        if env.ledger.escrow(e)?.status == EscrowStatus::Held {
            env.ledger.refund(e)?;
        }
    }
    let verdict = match out.accepted() {
        Some(e) => e.party.as_str().as_bytes().to_vec(),
        None => b"refund".to_vec(),
    };
    env.board.post(&giver, PostKind::Settlement, "", verdict, None)?;
    Ok(out)
}
