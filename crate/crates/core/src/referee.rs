//! The simulated network's per-step check: dispatch to the game, meter the
//! work, report the verdict.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::games::VerificationGame;
use crate::transcript::Transcript;
use crate::types::{GameKind, StepVerdict};

/// Counts primitive referee operations (word comparisons, field operations,
/// table lookups) within one step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CostMeter {
    ops: u64,
}

impl CostMeter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn charge(&mut self, ops: u64) {
        self.ops += ops;
    }

    pub fn ops(&self) -> u64 {
        self.ops
    }
}

/// Judges the latest move of `transcript` with a fresh meter.
///
/// # Panics
/// If the transcript has no moves.
pub fn verify_step(game: &dyn VerificationGame, transcript: &Transcript) -> StepVerdict {
    assert!(!transcript.moves().is_empty(), "nothing to verify");
    let mut meter = CostMeter::new();
    let j = game.judge(transcript.moves(), &mut meter);
    StepVerdict {
        outcome: j.outcome,
        metered_cost: meter.ops(),
        reason: j.reason,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetRow {
    pub game: GameKind,
    pub instances: usize,
    pub max_cost: u64,
    /// Budget of the transcript where `max_cost` was seen.
    pub budget: u64,
    /// Steps whose cost exceeded their own transcript's budget.
    pub over_budget: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub rows: Vec<BudgetRow>,
}

impl BudgetReport {
    pub fn is_within_budget(&self) -> bool {
        self.rows.iter().all(|r| r.over_budget == 0)
    }

    /// `game|instances|max_cost|budget`, one row per game kind.
    pub fn to_text(&self) -> String {
        let mut out = String::from("game|instances|max_cost|budget\n");
        for r in &self.rows {
            let _ = writeln!(out, "{}|{}|{}|{}", r.game, r.instances, r.max_cost, r.budget);
        }
        out
    }
}

pub fn budget_report<'a>(transcripts: impl IntoIterator<Item = &'a Transcript>) -> BudgetReport {
    let mut rows: BTreeMap<GameKind, BudgetRow> = BTreeMap::new();
    for t in transcripts {
        let spec = t.spec();
        let row = rows.entry(spec.game).or_insert(BudgetRow {
            game: spec.game,
            instances: 0,
            max_cost: 0,
            budget: spec.referee_budget_h,
            over_budget: 0,
        });
        row.instances += 1;
        for &c in t.step_costs() {
            if c > spec.referee_budget_h {
                row.over_budget += 1;
            }
            if c > row.max_cost {
                row.max_cost = c;
                row.budget = spec.referee_budget_h;
            }
        }
    }
    BudgetReport {
        rows: rows.into_values().collect(),
    }
}
