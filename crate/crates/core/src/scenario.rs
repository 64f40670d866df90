//! Scenario files: a task, a cast of agents and a protocol, run end to end
//! on a fresh ledger and board.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::agents::{make_challenger, make_prover, CostModel, ErrorModel, PayoffRecord, Policy, Role};
use crate::games::{Task, TaskFormatError, VerificationGame};
use crate::ledger::{Ledger, Money, Purpose};
use crate::protocols::{
    run_competition, run_contract, run_incentive_round, select_subcommittee, default_deposit, default_prize,
    Candidate, Deadlines, Env, GameRecord, IncentiveParams, Participant, ProtocolError, TaskSpec,
};
use crate::referee::{budget_report, BudgetReport};
use crate::simnet::{gen_fixture, Board};
use crate::types::{GameKind, PartyId};

pub const TASK_GIVER: &str = "task_giver";
pub const FEE_SINK: &str = "network";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub id: String,
    pub seed: u64,
    #[serde(default)]
    pub fees: Money,
    #[serde(default)]
    pub costs: CostModel,
    pub task: TaskConfig,
    pub agents: Vec<AgentConfig>,
    pub protocol: ProtocolConfig,
    /// Defaults to exactly what the task giver has to put up.
    #[serde(default)]
    pub task_giver_funds: Option<Money>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub game: GameKind,
    /// Task text, relative to the fixture directory.
    #[serde(default)]
    pub instance_file: Option<String>,
    /// Seeded instance when no file is given.
    #[serde(default)]
    pub generate: Option<GenerateConfig>,
    /// Defaults to the prize multiplier times solving cost plus fee.
    #[serde(default)]
    pub prize: Option<Money>,
    #[serde(default)]
    pub min_deposits: Option<MinDeposits>,
    #[serde(default)]
    pub min_quality: Option<u64>,
    #[serde(default)]
    pub deadlines: Deadlines,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    pub size: usize,
    /// Defaults to the scenario seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinDeposits {
    pub prover: Money,
    pub challenger: Money,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Honest,
    Corrupt,
    Lazy,
    FalseAlarm,
    Sampler,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub id: String,
    pub role: Role,
    pub strategy: StrategyKind,
    pub funds: Money,
    #[serde(default)]
    pub error_model: Option<ErrorModel>,
    #[serde(default)]
    pub participation: Option<f64>,
    #[serde(default)]
    pub rate: Option<f64>,
    #[serde(default)]
    pub samples: Option<u32>,
    /// Defaults to the task's minimum deposit for the role.
    #[serde(default)]
    pub deposit: Option<Money>,
    #[serde(default)]
    pub top_up: Money,
    #[serde(default = "yes")]
    pub reveals: bool,
    /// Several ids may share one principal (a Sybil setup).
    #[serde(default)]
    pub principal: Option<String>,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Competition,
    Contract,
    Incentive,
}

impl ProtocolKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolKind::Competition => "competition",
            ProtocolKind::Contract => "contract",
            ProtocolKind::Incentive => "incentive",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub kind: ProtocolKind,
    #[serde(default)]
    pub subcommittee_size: Option<usize>,
    #[serde(default)]
    pub nominal_reward: Money,
    #[serde(default)]
    pub quorum: Option<usize>,
    #[serde(default = "two")]
    pub prize_multiplier: Money,
}

fn two() -> Money {
    2
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error("{field}: cannot read {path}: {source}")]
    Io {
        field: String,
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{field}: {source}")]
    TaskFormat { field: String, source: TaskFormatError },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

fn field_err(field: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Field {
        field: field.into(),
        message: message.into(),
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.id.is_empty() {
            return Err(field_err("id", "must not be empty"));
        }
        match (&self.task.instance_file, &self.task.generate) {
            (Some(_), Some(_)) => {
                return Err(field_err("task.instance_file", "give either instance_file or generate, not both"))
            }
            (None, None) => return Err(field_err("task.instance_file", "missing; or give task.generate")),
            _ => {}
        }
        if self.task.prize == Some(0) {
            return Err(field_err("task.prize", "must be positive"));
        }
        if let Some(d) = self.task.min_deposits {
            if d.prover == 0 || d.challenger == 0 {
                return Err(field_err("task.min_deposits", "must be positive"));
            }
        }
        let dl = self.task.deadlines;
        if dl.reveal == 0 || dl.challenge == 0 || dl.step == 0 {
            return Err(field_err("task.deadlines", "each deadline must be at least 1"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for (i, a) in self.agents.iter().enumerate() {
            let f = |name: &str| format!("agents[{i}].{name}");
            if a.id.is_empty() || [TASK_GIVER, FEE_SINK].contains(&a.id.as_str()) {
                return Err(field_err(f("id"), format!("`{}` is empty or reserved", a.id)));
            }
            if !seen.insert(&a.id) {
                return Err(field_err(f("id"), format!("duplicate id `{}`", a.id)));
            }
            if a.deposit == Some(0) {
                return Err(field_err(f("deposit"), "must be positive"));
            }
            self.policy(i).map_err(|(name, m)| field_err(f(name), m))?;
        }
        if !self.agents.iter().any(|a| a.role == Role::Prover) {
            return Err(field_err("agents", "at least one prover is required"));
        }
        if self.protocol.kind == ProtocolKind::Incentive {
            if self.agents.iter().filter(|a| a.role == Role::Prover).count() != 1 {
                return Err(field_err("agents", "the incentive protocol takes exactly one prover"));
            }
            match self.protocol.subcommittee_size {
                Some(0) | None => return Err(field_err("protocol.subcommittee_size", "required and positive")),
                _ => {}
            }
        }
        if self.protocol.prize_multiplier == 0 {
            return Err(field_err("protocol.prize_multiplier", "must be positive"));
        }
        Ok(())
    }

    /// The policy of agent `i`, or the offending field and why.
    fn policy(&self, i: usize) -> Result<Policy, (&'static str, String)> {
        let a = &self.agents[i];
        let prob = |v: Option<f64>, name: &'static str| match v {
            Some(p) if (0.0..=1.0).contains(&p) => Ok(p),
            Some(p) => Err((name, format!("{p} is not a probability"))),
            None => Err((name, format!("required for strategy {:?}", a.strategy))),
        };
        let policy = match a.strategy {
            StrategyKind::Honest => Policy::Honest,
            StrategyKind::Corrupt => {
                Policy::Corrupt(a.error_model.ok_or(("error_model", "required for a corrupt agent".to_string()))?)
            }
            StrategyKind::Lazy => Policy::Lazy(prob(a.participation, "participation")?),
            StrategyKind::FalseAlarm => Policy::FalseAlarm(prob(a.rate, "rate")?),
            StrategyKind::Sampler => Policy::Sampler(a.samples.ok_or(("samples", "required for a sampler".to_string()))?),
        };
        let made = match a.role {
            Role::Prover => make_prover(policy, self.task.game, self.costs, 0),
            Role::Challenger => make_challenger(policy, self.task.game, self.costs, 0),
        };
        made.map(|_| policy).map_err(|e| ("strategy", e.to_string()))
    }

    /// Loads or generates the task; files resolve against `fixtures`.
    pub fn resolve_task(&self, fixtures: &Path) -> Result<Task, ScenarioError> {
        if let Some(file) = &self.task.instance_file {
            let path = fixtures.join(file);
            let text = std::fs::read_to_string(&path).map_err(|source| ScenarioError::Io {
                field: "task.instance_file".into(),
                path: path.clone(),
                source,
            })?;
            let task = Task::parse(&text).map_err(|source| ScenarioError::TaskFormat {
                field: "task.instance_file".into(),
                source,
            })?;
            if task.kind() != self.task.game {
                return Err(field_err(
                    "task.game",
                    format!("says {} but the instance file holds a {} task", self.task.game, task.kind()),
                ));
            }
            Ok(task)
        } else {
            let g = self.task.generate.expect("validated");
            gen_fixture(self.task.game, g.size, g.seed.unwrap_or(self.seed))
                .map(|f| f.task)
                .map_err(|e| field_err("task.generate", e.to_string()))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    pub protocol: String,
    pub game: GameKind,
    /// Party id of the accepted solution's author.
    pub accepted: Option<String>,
    pub outcome: String,
    pub unresolved: bool,
    pub payoffs: Vec<PayoffRecord>,
    pub balances: BTreeMap<String, Money>,
    /// Net payoff per principal, for agents that name one.
    pub principals: BTreeMap<String, i64>,
    pub budget: BudgetReport,
    pub board_bytes: BTreeMap<String, usize>,
    pub game_bytes: BTreeMap<String, usize>,
    pub transcripts: Vec<String>,
    pub conserved: bool,
}

impl RunReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario|{}", self.scenario);
        let _ = writeln!(out, "seed|{}", self.seed);
        let _ = writeln!(out, "protocol|{}|{}", self.protocol, self.game);
        let _ = writeln!(out, "accepted|{}", self.accepted.as_deref().unwrap_or("none"));
        let _ = writeln!(out, "outcome|{}", self.outcome);
        let _ = writeln!(out, "conserved|{}", self.conserved);
        for p in &self.payoffs {
            let _ = writeln!(
                out,
                "payoff|{}|{}|{}|{}|{}|{}|{}|{}",
                p.party, p.role, p.policy, p.rewards, p.slashes, p.fees, p.costs, p.net
            );
        }
        for (p, b) in &self.balances {
            let _ = writeln!(out, "balance|{p}|{b}");
        }
        for (p, n) in &self.principals {
            let _ = writeln!(out, "principal|{p}|{n}");
        }
        for r in &self.budget.rows {
            let _ = writeln!(out, "budget|{}|{}|{}|{}", r.game, r.instances, r.max_cost, r.budget);
        }
        for (k, b) in &self.board_bytes {
            let _ = writeln!(out, "board|{k}|{b}");
        }
        for (k, b) in &self.game_bytes {
            let _ = writeln!(out, "game_bytes|{k}|{b}");
        }
        for t in &self.transcripts {
            let _ = writeln!(out, "transcript|{t}");
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct ScenarioRun {
    pub report: RunReport,
    pub games: Vec<GameRecord>,
    pub board: Board,
    pub ledger: Ledger,
}

impl ScenarioRun {
    /// `(file name, exported transcript)` per game.
    pub fn transcript_files(&self) -> Vec<(String, String)> {
        self.report
            .transcripts
            .iter()
            .cloned()
            .zip(self.games.iter().map(GameRecord::export))
            .collect()
    }

    pub fn board_dump(&self) -> String {
        let exports: Vec<String> = self.games.iter().map(GameRecord::export).collect();
        self.board.dump(&exports)
    }
}

fn agent_seed(seed: u64, id: &str) -> u64 {
    let d = Sha256::new().chain_update(seed.to_be_bytes()).chain_update(id.as_bytes()).finalize();
    u64::from_be_bytes(d[..8].try_into().expect("8 bytes"))
}

/// Runs `config` with its own seed or `seed` when given.
pub fn run_scenario(config: &ScenarioConfig, seed: Option<u64>, fixtures: &Path) -> Result<ScenarioRun, ScenarioError> {
    config.validate()?;
    let seed = seed.unwrap_or(config.seed);
    let task = config.resolve_task(fixtures)?;
    run_with_task(config, task, seed)
}

/// Like [`run_scenario`] with the task already in hand.
pub fn run_with_task(config: &ScenarioConfig, task: Task, seed: u64) -> Result<ScenarioRun, ScenarioError> {
    config.validate()?;
    let fee = config.fees;
    let costs = config.costs;
    let rounds = task.instance(&task.solve()).map(|i| i.spec().round_bound_f).unwrap_or(1);
    let deposit = default_deposit(&costs, fee, rounds);
    let min = config.task.min_deposits.unwrap_or(MinDeposits {
        prover: deposit,
        challenger: deposit,
    });
    let spec = TaskSpec {
        task,
        prize: config
            .task
            .prize
            .unwrap_or_else(|| default_prize(&costs, fee, config.protocol.prize_multiplier)),
        min_deposit_prover: min.prover,
        min_deposit_challenger: min.challenger,
        min_quality: config.task.min_quality,
        fee,
        deadlines: config.task.deadlines,
    };

    let giver = PartyId::new(TASK_GIVER);
    let mut ledger = Ledger::new(PartyId::new(FEE_SINK));
    let size = config.protocol.subcommittee_size.unwrap_or(0) as Money;
    let need = spec.prize + fee + config.protocol.nominal_reward * size;
    ledger.endow(&giver, config.task_giver_funds.unwrap_or(need));
    let mut participants = Vec::new();
    for (i, a) in config.agents.iter().enumerate() {
        let policy = config.policy(i).map_err(|(f, m)| field_err(format!("agents[{i}].{f}"), m))?;
        let s = agent_seed(seed, &a.id);
        let agent = match a.role {
            Role::Prover => make_prover(policy, spec.task.kind(), costs, s),
            Role::Challenger => make_challenger(policy, spec.task.kind(), costs, s),
        }
        .map_err(|e| field_err(format!("agents[{i}].strategy"), e.to_string()))?;
        let id = PartyId::new(a.id.clone());
        ledger.endow(&id, a.funds);
        let default = match a.role {
            Role::Prover => spec.min_deposit_prover,
            Role::Challenger => spec.min_deposit_challenger,
        };
        let mut p = Participant::new(id, agent, a.deposit.unwrap_or(default));
        p.top_up = a.top_up;
        p.reveals = a.reveals;
        participants.push(p);
    }

    let mut board = Board::new();
    let (accepted, outcome, unresolved, games) = {
        let mut env = Env {
            ledger: &mut ledger,
            board: &mut board,
            task_giver: giver.clone(),
        };
        match config.protocol.kind {
            ProtocolKind::Competition => {
                let r = run_competition(&spec, &mut participants, &mut env, seed)?;
                let acc = r.accepted().map(|e| e.party.to_string());
                let outcome = if r.prize_refunded { "refunded" } else { "accepted" };
                (acc, outcome, false, r.games)
            }
            ProtocolKind::Contract => {
                let r = run_contract(&spec, &mut participants, &mut env, seed)?;
                let outcome = if r.prize_refunded { "refunded" } else { "accepted" };
                (r.accepted.map(|p| p.to_string()), outcome, false, r.games)
            }
            ProtocolKind::Incentive => incentive(config, &spec, &mut participants, &mut env, seed)?,
        }
    };

    let mut payoffs = Vec::new();
    let mut principals = BTreeMap::new();
    for (a, p) in config.agents.iter().zip(&participants) {
        let delta = ledger.balance(&p.id) as i64 - a.funds as i64;
        let slashes = ledger.slashed(&p.id) as i64;
        let fees = ledger.fees_paid(&p.id) as i64;
        let rec = PayoffRecord::new(
            a.id.clone(),
            a.role,
            p.agent.policy.label(),
            delta + slashes + fees,
            slashes,
            fees,
            p.agent.spent() as i64,
        );
        if let Some(pr) = &a.principal {
            *principals.entry(pr.clone()).or_insert(0) += rec.net;
        }
        payoffs.push(rec);
    }
    let transcripts = games
        .iter()
        .map(|g| format!("{}.txt", g.transcript.solution_ref().replace('/', "_")))
        .collect();
    let report = RunReport {
        scenario: config.id.clone(),
        seed,
        protocol: config.protocol.kind.as_str().to_string(),
        game: spec.task.kind(),
        accepted,
        outcome: outcome.to_string(),
        unresolved,
        payoffs,
        balances: ledger.balances().map(|(p, b)| (p.to_string(), b)).collect(),
        principals,
        budget: budget_report(games.iter().map(|g| &g.transcript)),
        board_bytes: board.bytes_by_kind().into_iter().map(|(k, b)| (k.to_string(), b)).collect(),
        game_bytes: board.game_bytes().into_iter().map(|(k, b)| (k.to_string(), b)).collect(),
        transcripts,
        conserved: ledger.conservation_check(),
    };
    Ok(ScenarioRun {
        report,
        games,
        board,
        ledger,
    })
}

type Settled = (Option<String>, &'static str, bool, Vec<GameRecord>);

fn incentive(
    config: &ScenarioConfig,
    spec: &TaskSpec,
    participants: &mut Vec<Participant>,
    env: &mut Env<'_>,
    seed: u64,
) -> Result<Settled, ScenarioError> {
    // every funded challenger stands as a candidate
    let mut candidates = Vec::new();
    let mut escrows = BTreeMap::new();
    for p in participants.iter().filter(|p| p.agent.role == Role::Challenger) {
        let d = p.deposit.max(spec.min_deposit_challenger);
        let escrow = if env.ledger.balance(&p.id) >= d {
            let e = env.ledger.open_escrow(&p.id, Purpose::ChallengerDeposit, d).map_err(ProtocolError::from)?;
            escrows.insert(p.id.clone(), e);
            Some(e)
        } else {
            None
        };
        candidates.push(Candidate {
            id: p.id.clone(),
            escrow,
            token: true,
        });
    }
    let committee = select_subcommittee(&candidates, config.protocol.subcommittee_size.expect("validated"), seed);
    // the round sees the prover and the members in lottery order
    let order: Vec<usize> = std::iter::once(
        participants.iter().position(|p| p.agent.role == Role::Prover).expect("validated"),
    )
    .chain(committee.members.iter().map(|m| participants.iter().position(|p| &p.id == m).expect("a candidate")))
    .collect();
    let mut taken: Vec<Option<Participant>> = std::mem::take(participants).into_iter().map(Some).collect();
    let mut round: Vec<Participant> = order.iter().map(|&i| taken[i].take().expect("distinct")).collect();
    let member_escrows: BTreeMap<PartyId, _> = escrows
        .iter()
        .filter(|(id, _)| committee.members.contains(id))
        .map(|(id, e)| (id.clone(), *e))
        .collect();
    let params = IncentiveParams {
        nominal_reward: config.protocol.nominal_reward,
        quorum: config.protocol.quorum,
    };
    let r = run_incentive_round(spec, &mut round, &member_escrows, params, env, seed);
    // put everyone back in config order before reporting
    let mut back = round.into_iter();
    for &i in &order {
        taken[i] = back.next();
    }
    *participants = taken.into_iter().map(|p| p.expect("all returned")).collect();
    let r = r?;
    for (id, e) in escrows {
        if !member_escrows.contains_key(&id) {
            env.ledger.refund(e).map_err(ProtocolError::from)?;
        }
    }
    let outcome = if r.accepted {
        "accepted"
    } else if r.unresolved {
        "unresolved"
    } else {
        "rejected"
    };
    let accepted = r.accepted.then(|| participants[order[0]].id.to_string());
    Ok((accepted, outcome, r.unresolved, r.games))
}
