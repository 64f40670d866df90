//! The consensus contract: one designated prover at a time, a challenge
//! window, and a prize that passes to the next contractor on a successful
//! challenge.

use super::{play_pair, Env, GameRecord, Participant, ProtocolError, TaskSpec};
use crate::agents::Role;
use crate::ledger::Purpose;
use crate::simnet::PostKind;
use crate::types::{Party, PartyId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContractAttempt {
    pub contractor: PartyId,
    /// The challenger whose game rejected the solution.
    pub rejected_by: Option<PartyId>,
}

#[derive(Clone, Debug, Default)]
pub struct ContractResult {
    pub accepted: Option<PartyId>,
    pub attempts: Vec<ContractAttempt>,
    pub games: Vec<GameRecord>,
    pub excluded: Vec<PartyId>,
    pub prize_refunded: bool,
}

/// Contractors are taken in slice order until one survives its window.
pub fn run_contract(
    spec: &TaskSpec,
    participants: &mut [Participant],
    env: &mut Env<'_>,
    _seed: u64,
) -> Result<ContractResult, ProtocolError> {
    spec.validate()?;
    let giver = env.task_giver.clone();
    let mut out = ContractResult::default();
    env.ledger.pay_fee(&giver, spec.fee)?;
    let prize = env.ledger.open_escrow(&giver, Purpose::Prize, spec.prize)?;
    env.board.post(&giver, PostKind::Task, "task", spec.task.encode(), None)?;
    env.board.advance_round();

    let contractors: Vec<usize> = (0..participants.len())
        .filter(|&i| participants[i].agent.role == Role::Prover)
        .collect();
    let challengers: Vec<usize> = (0..participants.len())
        .filter(|&i| participants[i].agent.role == Role::Challenger)
        .collect();

    for (attempt, &s) in contractors.iter().enumerate() {
        let p = &mut participants[s];
        if !p.agent.participates() {
            continue;
        }
        let deposit = p.deposit.max(spec.min_deposit_prover);
        if env.ledger.balance(&p.id) < spec.fee + deposit {
            out.excluded.push(p.id.clone());
            continue;
        }
        let payload = p.agent.solution(&spec.task)?;
        let Ok(instance) = spec.task.instance(&payload) else {
            continue;
        };
        env.ledger.pay_fee(&p.id, spec.fee)?;
        let stake = env.ledger.open_escrow(&p.id, Purpose::ProverDeposit, deposit)?;
        env.board.post(&p.id, PostKind::Reveal, "", payload, None)?;
        env.board.advance_round();

        // challenge window
        let mut enrolled = Vec::new();
        for &c in &challengers {
            let ch = &mut participants[c];
            if !ch.agent.participates() {
                continue;
            }
            let Some(opening) = ch.agent.inspect(&instance) else {
                continue;
            };
            let d = ch.deposit.max(spec.min_deposit_challenger);
            if env.ledger.balance(&ch.id) < spec.fee + d {
                out.excluded.push(ch.id.clone());
                continue;
            }
            env.ledger.pay_fee(&ch.id, spec.fee)?;
            let e = env.ledger.open_escrow(&ch.id, Purpose::ChallengerDeposit, d)?;
            env.board.post(&ch.id, PostKind::Challenge, "", Vec::new(), None)?;
            enrolled.push((c, e, d, opening));
        }
        for _ in 0..spec.deadlines.challenge {
            env.board.advance_round();
        }
        enrolled.sort_by(|a, b| {
            b.2.cmp(&a.2)
                .then(participants[a.0].id.cmp(&participants[b.0].id))
        });

        let solution_ref = format!("c{}", attempt + 1);
        let mut rejected_by = None;
        let mut pending = enrolled.into_iter();
        for (c, e, _, opening) in pending.by_ref() {
            let (prover, challenger) = super::two_mut(participants, s, c);
            let rec = play_pair(env, spec, &instance, solution_ref.clone(), prover, challenger, opening)?;
            let (pid, cid) = (rec.prover.clone(), rec.challenger.clone());
            out.games.push(rec);
            if out.games.last().map(|r| r.winner()) == Some(Party::Challenger) {
                env.ledger.slash_and_split(stake, &cid, &giver)?;
                env.ledger.refund(e)?;
                rejected_by = Some(cid);
                break;
            }
            env.ledger.slash_and_split(e, &pid, &giver)?;
        }
        for (_, e, _, _) in pending {
            env.ledger.refund(e)?;
        }
        let contractor = participants[s].id.clone();
        out.attempts.push(ContractAttempt {
            contractor: contractor.clone(),
            rejected_by: rejected_by.clone(),
        });
        if rejected_by.is_none() {
            env.ledger.refund(stake)?;
            env.ledger.pay_prize(prize, &contractor)?;
            env.board
                .post(&giver, PostKind::Settlement, "", contractor.as_str().as_bytes().to_vec(), None)?;
            out.accepted = Some(contractor);
            return Ok(out);
        }
        // the prize stays in escrow for the next contractor
    }
    env.ledger.refund(prize)?;
    out.prize_refunded = true;
    env.board.post(&giver, PostKind::Settlement, "", b"refund".to_vec(), None)?;
    Ok(out)
}
