//! Accounts, escrows and the money movements of the protocols.
//!
//! Money is integer units. Every movement is a transfer between accounts
//! and held escrows, so balances + held escrows (fee sink included) never
//! change after the accounts are endowed.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::PartyId;

pub type Money = u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EscrowId(pub usize);

impl fmt::Display for EscrowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    Prize,
    ProverDeposit,
    ChallengerDeposit,
    Fee,
}

impl Purpose {
    pub fn as_str(self) -> &'static str {
        match self {
            Purpose::Prize => "prize",
            Purpose::ProverDeposit => "prover_deposit",
            Purpose::ChallengerDeposit => "challenger_deposit",
            Purpose::Fee => "fee",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EscrowStatus {
    Held,
    Released,
    Slashed,
}

impl EscrowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            EscrowStatus::Held => "held",
            EscrowStatus::Released => "released",
            EscrowStatus::Slashed => "slashed",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Escrow {
    pub id: EscrowId,
    pub purpose: Purpose,
    pub owner: PartyId,
    pub amount: Money,
    pub status: EscrowStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("{party} holds {balance}, needs {amount}")]
    InsufficientFunds {
        party: PartyId,
        balance: Money,
        amount: Money,
    },
    #[error("escrow amount must be positive")]
    ZeroAmount,
    #[error("no escrow {0}")]
    UnknownEscrow(EscrowId),
    #[error("escrow {id} is already {}", status.as_str())]
    NotHeld { id: EscrowId, status: EscrowStatus },
    #[error("escrow {0} cannot be slashed to its own owner")]
    SelfSlash(EscrowId),
    #[error("escrow {id} is a {} escrow, not a prize", purpose.as_str())]
    NotPrize { id: EscrowId, purpose: Purpose },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ledger {
    balances: BTreeMap<PartyId, Money>,
    escrows: Vec<Escrow>,
    fee_sink: PartyId,
    endowed: Money,
    fees_paid: BTreeMap<PartyId, Money>,
}

impl Ledger {
    pub fn new(fee_sink: PartyId) -> Self {
        let mut balances = BTreeMap::new();
        balances.insert(fee_sink.clone(), 0);
        Self {
            balances,
            escrows: Vec::new(),
            fee_sink,
            endowed: 0,
            fees_paid: BTreeMap::new(),
        }
    }

    /// Gives `party` starting money. This is the only way money enters.
    pub fn endow(&mut self, party: &PartyId, amount: Money) {
        *self.balances.entry(party.clone()).or_insert(0) += amount;
        self.endowed += amount;
    }

    pub fn fee_sink(&self) -> &PartyId {
        &self.fee_sink
    }

    pub fn balance(&self, party: &PartyId) -> Money {
        self.balances.get(party).copied().unwrap_or(0)
    }

    pub fn balances(&self) -> impl Iterator<Item = (&PartyId, Money)> {
        self.balances.iter().map(|(p, &b)| (p, b))
    }

    pub fn escrow(&self, id: EscrowId) -> Result<&Escrow, LedgerError> {
        self.escrows.get(id.0).ok_or(LedgerError::UnknownEscrow(id))
    }

    pub fn escrows(&self) -> &[Escrow] {
        &self.escrows
    }

    fn debit(&mut self, party: &PartyId, amount: Money) -> Result<(), LedgerError> {
        let balance = self.balance(party);
        if balance < amount {
            return Err(LedgerError::InsufficientFunds {
                party: party.clone(),
                balance,
                amount,
            });
        }
        self.balances.insert(party.clone(), balance - amount);
        Ok(())
    }

    fn credit(&mut self, party: &PartyId, amount: Money) {
        *self.balances.entry(party.clone()).or_insert(0) += amount;
    }

    pub fn transfer(&mut self, from: &PartyId, to: &PartyId, amount: Money) -> Result<(), LedgerError> {
        self.debit(from, amount)?;
        self.credit(to, amount);
        Ok(())
    }

    /// Flat network fee, paid into the fee sink.
    pub fn pay_fee(&mut self, party: &PartyId, amount: Money) -> Result<(), LedgerError> {
        let sink = self.fee_sink.clone();
        self.transfer(party, &sink, amount)?;
        *self.fees_paid.entry(party.clone()).or_insert(0) += amount;
        Ok(())
    }

    pub fn fees_paid(&self, party: &PartyId) -> Money {
        self.fees_paid.get(party).copied().unwrap_or(0)
    }

    /// Total of `party`'s escrows that were slashed.
    pub fn slashed(&self, party: &PartyId) -> Money {
        self.escrows
            .iter()
            .filter(|e| &e.owner == party && e.status == EscrowStatus::Slashed)
            .map(|e| e.amount)
            .sum()
    }

    pub fn open_escrow(
        &mut self,
        party: &PartyId,
        purpose: Purpose,
        amount: Money,
    ) -> Result<EscrowId, LedgerError> {
        if amount == 0 {
            return Err(LedgerError::ZeroAmount);
        }
        self.debit(party, amount)?;
        let id = EscrowId(self.escrows.len());
        self.escrows.push(Escrow {
            id,
            purpose,
            owner: party.clone(),
            amount,
            status: EscrowStatus::Held,
        });
        Ok(id)
    }

    /// Marks a held escrow terminal and returns its amount and owner.
    fn close(&mut self, id: EscrowId, status: EscrowStatus) -> Result<(Money, PartyId), LedgerError> {
        let e = self.escrows.get_mut(id.0).ok_or(LedgerError::UnknownEscrow(id))?;
        if e.status != EscrowStatus::Held {
            return Err(LedgerError::NotHeld { id, status: e.status });
        }
        e.status = status;
        Ok((e.amount, e.owner.clone()))
    }

    fn check_held(&self, id: EscrowId) -> Result<&Escrow, LedgerError> {
        let e = self.escrow(id)?;
        if e.status != EscrowStatus::Held {
            return Err(LedgerError::NotHeld { id, status: e.status });
        }
        Ok(e)
    }

    /// Half (rounded down) to the winner, the rest to the task giver.
    /// Returns `(to_winner, to_task_giver)`.
    pub fn slash_and_split(
        &mut self,
        id: EscrowId,
        winner: &PartyId,
        task_giver: &PartyId,
    ) -> Result<(Money, Money), LedgerError> {
        if &self.check_held(id)?.owner == winner {
            return Err(LedgerError::SelfSlash(id));
        }
        let (amount, _) = self.close(id, EscrowStatus::Slashed)?;
        let half = amount / 2;
        self.credit(winner, half);
        self.credit(task_giver, amount - half);
        Ok((half, amount - half))
    }

    /// The whole escrow to one recipient other than its owner.
    pub fn slash_to(&mut self, id: EscrowId, recipient: &PartyId) -> Result<Money, LedgerError> {
        if &self.check_held(id)?.owner == recipient {
            return Err(LedgerError::SelfSlash(id));
        }
        let (amount, _) = self.close(id, EscrowStatus::Slashed)?;
        self.credit(recipient, amount);
        Ok(amount)
    }

    pub fn refund(&mut self, id: EscrowId) -> Result<Money, LedgerError> {
        let (amount, owner) = self.close(id, EscrowStatus::Released)?;
        self.credit(&owner, amount);
        Ok(amount)
    }

    /// Releases a held escrow to `recipient` (prize money, withheld rewards).
    pub fn pay_out(&mut self, id: EscrowId, recipient: &PartyId) -> Result<Money, LedgerError> {
        let (amount, _) = self.close(id, EscrowStatus::Released)?;
        self.credit(recipient, amount);
        Ok(amount)
    }

    pub fn pay_prize(&mut self, id: EscrowId, winner: &PartyId) -> Result<Money, LedgerError> {
        let purpose = self.check_held(id)?.purpose;
        if purpose != Purpose::Prize {
            return Err(LedgerError::NotPrize { id, purpose });
        }
        self.pay_out(id, winner)
    }

    pub fn held_total(&self) -> Money {
        self.escrows
            .iter()
            .filter(|e| e.status == EscrowStatus::Held)
            .map(|e| e.amount)
            .sum()
    }

    /// Balances (fee sink included) plus held escrows.
    pub fn grand_total(&self) -> Money {
        self.balances.values().sum::<Money>() + self.held_total()
    }

    pub fn endowed(&self) -> Money {
        self.endowed
    }

    pub fn conservation_check(&self) -> bool {
        self.grand_total() == self.endowed
    }

    /// `party|balance` rows, then `escrow|purpose|owner|amount|status` rows.
    pub fn snapshot_text(&self) -> String {
        let mut out = String::new();
        for (p, b) in &self.balances {
            let _ = writeln!(out, "{p}|{b}");
        }
        for e in &self.escrows {
            let _ = writeln!(
                out,
                "{}|{}|{}|{}|{}",
                e.id,
                e.purpose.as_str(),
                e.owner,
                e.amount,
                e.status.as_str()
            );
        }
        out
    }
}
