//! The incentive round: a lottery-drawn subcommittee checks one solution,
//! alarms are settled by games, responders share a nominal reward.

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use super::{derive_nonce, play_pair, two_mut, Commitment, Env, GameRecord, Participant, ProtocolError, TaskSpec};
use crate::agents::Role;
use crate::ledger::{EscrowId, EscrowStatus, Money, Purpose};
use crate::simnet::PostKind;
use crate::types::{Party, PartyId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub id: PartyId,
    /// The candidate escrow; required to be drawn.
    pub escrow: Option<EscrowId>,
    /// Stands in for a proof-of-work token.
    pub token: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subcommittee {
    pub members: Vec<PartyId>,
    pub undersize: bool,
}

fn ticket(seed: u64, id: &PartyId) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"lottery");
    h.update(seed.to_be_bytes());
    h.update(id.as_str().as_bytes());
    h.finalize().into()
}

/// Eligible candidates ranked by lottery ticket; the `size` lowest win.
pub fn select_subcommittee(candidates: &[Candidate], size: usize, seed: u64) -> Subcommittee {
    let mut eligible: Vec<&Candidate> = candidates.iter().filter(|c| c.escrow.is_some() && c.token).collect();
    eligible.sort_by_key(|c| (ticket(seed, &c.id), c.id.clone()));
    eligible.dedup_by(|a, b| a.id == b.id);
    Subcommittee {
        undersize: eligible.len() < size,
        members: eligible.into_iter().take(size).map(|c| c.id.clone()).collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IncentiveParams {
    /// Paid to each responding member once the quorum is met.
    pub nominal_reward: Money,
    /// Responses needed before anyone is paid; `None` means every member.
    pub quorum: Option<usize>,
}

#[derive(Clone, Debug, Default)]
pub struct IncentiveResult {
    pub accepted: bool,
    pub rejected_by: Option<PartyId>,
    pub false_alarms: Vec<PartyId>,
    pub responders: Vec<PartyId>,
    /// Too few members answered to decide anything.
    pub unresolved: bool,
    pub games: Vec<GameRecord>,
}

/// `participants` holds the prover and the subcommittee members, the
/// members in response order. `member_escrows` are their candidate escrows;
/// those still held at the end are refunded.
pub fn run_incentive_round(
    spec: &TaskSpec,
    participants: &mut [Participant],
    member_escrows: &BTreeMap<PartyId, EscrowId>,
    params: IncentiveParams,
    env: &mut Env<'_>,
    seed: u64,
) -> Result<IncentiveResult, ProtocolError> {
    spec.validate()?;
    let giver = env.task_giver.clone();
    let mut out = IncentiveResult::default();
    let prover = participants
        .iter()
        .position(|p| p.agent.role == Role::Prover)
        .ok_or_else(|| ProtocolError::Invalid("the round needs a prover".into()))?;
    let members: Vec<usize> = (0..participants.len())
        .filter(|&i| participants[i].agent.role == Role::Challenger)
        .collect();

    env.ledger.pay_fee(&giver, spec.fee)?;
    let prize = env.ledger.open_escrow(&giver, Purpose::Prize, spec.prize)?;
    let mut rewards = BTreeMap::new();
    if params.nominal_reward > 0 {
        for &m in &members {
            let e = env.ledger.open_escrow(&giver, Purpose::Fee, params.nominal_reward)?;
            rewards.insert(participants[m].id.clone(), e);
        }
    }
    env.board.post(&giver, PostKind::Task, "task", spec.task.encode(), None)?;
    env.board.advance_round();

    // Step 2: commit, then reveal
    let p = &mut participants[prover];
    let deposit = p.deposit.max(spec.min_deposit_prover);
    let payload = p.agent.solution(&spec.task)?;
    let nonce = derive_nonce(seed, &p.id);
    let mut commitment = Commitment::seal(p.id.clone(), &payload, &nonce);
    env.ledger.pay_fee(&p.id, spec.fee)?;
    let stake = env.ledger.open_escrow(&p.id, Purpose::ProverDeposit, deposit)?;
    env.board.post(&p.id, PostKind::Commit, "", commitment.digest.to_vec(), None)?;
    env.board.advance_round();
    let instance = if p.reveals {
        let mut post = payload.clone();
        post.extend_from_slice(&nonce);
        env.board.post(&p.id, PostKind::Reveal, "", post, None)?;
        commitment.reveal(payload.clone(), nonce)?;
        spec.task.instance(&payload).ok()
    } else {
        None
    };
    for _ in 0..spec.deadlines.reveal {
        env.board.advance_round();
    }
    let prover_id = participants[prover].id.clone();
    let Some(instance) = instance else {
        env.ledger.slash_to(stake, &giver)?;
        env.board.post(&prover_id, PostKind::Withdrawal, "", Vec::new(), None)?;
        return settle(env, prize, rewards, member_escrows, out, &giver);
    };

    // Step 3, repeated after each false alarm
    for &m in &members {
        let c = &mut participants[m];
        if !c.agent.participates() {
            continue;
        }
        out.responders.push(c.id.clone());
        let Some(opening) = c.agent.inspect(&instance) else {
            env.board.post(&c.id, PostKind::Response, "", b"ok".to_vec(), None)?;
            continue;
        };
        env.board.post(&c.id, PostKind::Response, "", b"alarm".to_vec(), None)?;
        let (pr, ch) = two_mut(participants, prover, m);
        let rec = play_pair(env, spec, &instance, "s1".into(), pr, ch, opening)?;
        let cid = rec.challenger.clone();
        let winner = rec.winner();
        out.games.push(rec);
        if winner == Party::Challenger {
            env.ledger.slash_to(stake, &cid)?;
            out.rejected_by = Some(cid);
            break;
        }
        let escrow = member_escrows
            .get(&cid)
            .ok_or_else(|| ProtocolError::Invalid(format!("{cid} has no candidate escrow")))?;
        env.ledger.slash_to(*escrow, &prover_id)?;
        out.false_alarms.push(cid);
    }

    let quorum = params.quorum.unwrap_or(members.len()).min(members.len());
    let responded = out.responders.len();
    if out.rejected_by.is_none() {
        if responded >= quorum && responded > 0 {
            env.ledger.refund(stake)?;
            env.ledger.pay_prize(prize, &prover_id)?;
            out.accepted = true;
        } else {
            env.ledger.refund(stake)?;
            out.unresolved = true;
        }
    }
    // withheld rewards go out only once enough members answered
    if responded >= quorum && responded > 0 {
        for id in &out.responders {
            if out.false_alarms.contains(id) {
                continue;
            }
            if let Some(e) = rewards.remove(id) {
                env.ledger.pay_out(e, id)?;
            }
        }
    }
    settle(env, prize, rewards, member_escrows, out, &giver)
}

fn settle(
    env: &mut Env<'_>,
    prize: EscrowId,
    rewards: BTreeMap<PartyId, EscrowId>,
    member_escrows: &BTreeMap<PartyId, EscrowId>,
    out: IncentiveResult,
    giver: &PartyId,
) -> Result<IncentiveResult, ProtocolError> {
    let held = |env: &Env<'_>, e: EscrowId| env.ledger.escrow(e).map(|x| x.status == EscrowStatus::Held);
    for e in [prize].into_iter().chain(rewards.into_values()).chain(member_escrows.values().copied()) {
        if held(env, e)? {
            env.ledger.refund(e)?;
        }
    }
    let verdict: &[u8] = if out.accepted {
        b"accept"
    } else if out.unresolved {
        b"unresolved"
    } else {
        b"reject"
    };
    env.board.post(giver, PostKind::Settlement, "", verdict.to_vec(), None)?;
    Ok(out)
}
