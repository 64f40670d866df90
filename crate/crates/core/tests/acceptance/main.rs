//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits nonzero if any fails.

mod audit;
mod completeness;
mod economics;
mod soundness;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use refgame_core::games::{Instance, VerificationGame};
use refgame_core::{GameKind, GameSpec, Transcript};

pub struct Verdict {
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// Budget constant and extra-term label per game, from the fixture file.
fn budget_table() -> BTreeMap<GameKind, (u64, String)> {
    let text = std::fs::read_to_string(fixtures().join("budgets.txt")).expect("budgets fixture");
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            let f: Vec<&str> = l.split('|').collect();
            (f[0].parse().expect("game"), (f[1].parse().expect("constant"), f[2].to_string()))
        })
        .collect()
}

fn bit_length(n: u64) -> u64 {
    u64::from(u64::BITS - n.leading_zeros()).max(1)
}

/// The extra term named in the budget fixture, recomputed from the instance.
fn extra_term(inst: &Instance, label: &str) -> Option<u64> {
    use refgame_core::games::opt::{Classifier, OptSolution};
    match (inst, label) {
        (_, "0") => Some(0),
        (Instance::Intersect(i), "2 * word cost") => Some(2 * u64::from(i.task.r).div_ceil(64)),
        (Instance::Opt(i), "2 * classifier evaluation bound") => Some(match &i.claimed {
            OptSolution::Classifier { sigma, .. } => match sigma {
                Classifier::Hyperplane { weights, .. } => 2 * (weights.len() as u64 + 1),
                Classifier::DecisionTree { nodes } => 2 * nodes.len() as u64,
            },
            OptSolution::Factorization { .. } => 0,
        }),
        _ => None,
    }
}

#[derive(Default, Clone, Copy)]
pub struct GameTally {
    pub instances: u64,
    pub steps: u64,
    pub max_cost: u64,
    pub over_budget: u64,
    pub formula_mismatch: u64,
    pub max_rounds_bound: u32,
    pub max_moves: usize,
    pub over_rounds: u64,
}

/// Everything the engine produced, for the budget, round and replay checks.
pub struct Pool {
    table: BTreeMap<GameKind, (u64, String)>,
    pub tally: BTreeMap<GameKind, GameTally>,
    pub transcripts: Vec<(Instance, Transcript)>,
    pub tm_levels: Vec<(u32, u32, u32, u32)>,
    pub opt_bounds: BTreeMap<&'static str, std::collections::BTreeSet<u32>>,
    pub ledgers: u64,
    pub unbalanced: u64,
}

impl Pool {
    fn new() -> Self {
        Self {
            table: budget_table(),
            tally: BTreeMap::new(),
            transcripts: Vec::new(),
            tm_levels: Vec::new(),
            opt_bounds: BTreeMap::new(),
            ledgers: 0,
            unbalanced: 0,
        }
    }

    /// Registers an instance: its budget must follow the fixture formula.
    pub fn instance(&mut self, inst: &Instance) {
        let spec = inst.spec();
        let (c, label) = &self.table[&spec.game];
        let expected = extra_term(inst, label).map(|x| c * bit_length(spec.input_size_n) + x);
        let t = self.tally.entry(spec.game).or_default();
        t.instances += 1;
        if expected != Some(spec.referee_budget_h) {
            t.formula_mismatch += 1;
        }
        t.max_rounds_bound = t.max_rounds_bound.max(spec.round_bound_f);
        match inst {
            Instance::Tm(i) => {
                self.tm_levels.push((i.task.levels(), i.task.k, i.task.eps_num, i.task.eps_den));
            }
            Instance::Opt(i) => {
                let kind = match i.task {
                    refgame_core::games::opt::OptTask::Classifier(_) => "classifier",
                    refgame_core::games::opt::OptTask::Factorization(_) => "factorization",
                };
                self.opt_bounds.entry(kind).or_default().insert(spec.round_bound_f);
            }
            _ => {}
        }
    }

    pub fn ledger(&mut self, ledger: &refgame_core::ledger::Ledger) {
        self.ledgers += 1;
        if !ledger.conservation_check() || ledger.grand_total() != ledger.endowed() {
            self.unbalanced += 1;
        }
    }

    pub fn step(&mut self, spec: &GameSpec, cost: u64) {
        let t = self.tally.entry(spec.game).or_default();
        t.steps += 1;
        t.max_cost = t.max_cost.max(cost);
        if cost > spec.referee_budget_h {
            t.over_budget += 1;
        }
    }

    pub fn finished(&mut self, spec: &GameSpec, moves: usize) {
        let t = self.tally.entry(spec.game).or_default();
        t.max_moves = t.max_moves.max(moves);
        if moves > spec.round_bound_f as usize {
            t.over_rounds += 1;
        }
    }

    /// Records a decided engine transcript (costs, rounds, replay).
    pub fn transcript(&mut self, inst: &Instance, t: &Transcript) {
        self.instance(inst);
        for &c in t.step_costs() {
            self.step(t.spec(), c);
        }
        self.finished(t.spec(), t.moves().len());
        self.transcripts.push((inst.clone(), t.clone()));
    }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Verdict) -> Verdict {
    let start = Instant::now();
    let mut v = f();
    let took = start.elapsed();
    v.detail = format!("{} [{:.1}s]", v.detail, took.as_secs_f64());
    if let Some(limit) = limit {
        if took > limit {
            v.pass = false;
            v.detail = format!("{} over the {}s limit", v.detail, limit.as_secs());
        }
    }
    v
}

fn rounds_verdict(pool: &Pool) -> Verdict {
    let limits = [
        (GameKind::Matmul, 2),
        (GameKind::Intersect, 2),
        (GameKind::Sort, 2),
        (GameKind::Gcd, 3),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (g, limit) in limits {
        let t = pool.tally.get(&g).copied().unwrap_or_default();
        ok &= t.instances > 0 && t.max_rounds_bound <= limit && t.over_rounds == 0;
        parts.push(format!("{g} f={} moves<={}", t.max_rounds_bound, t.max_moves));
    }
    // levels <= ceil(k / eps) + 2
    let tm_bad = pool
        .tm_levels
        .iter()
        .filter(|&&(levels, k, num, den)| levels > (k * den).div_ceil(num) + 2)
        .count();
    let tm = pool.tally.get(&GameKind::Tm).copied().unwrap_or_default();
    ok &= !pool.tm_levels.is_empty() && tm_bad == 0 && tm.over_rounds == 0;
    parts.push(format!("tm {} instances, {tm_bad} over the level bound", pool.tm_levels.len()));
    let opt = pool.tally.get(&GameKind::Opt).copied().unwrap_or_default();
    let constant = pool.opt_bounds.len() == 2 && pool.opt_bounds.values().all(|s| s.len() == 1);
    ok &= constant && opt.over_rounds == 0;
    let shown: Vec<String> = pool.opt_bounds.iter().map(|(k, s)| format!("{k} f={s:?}")).collect();
    parts.push(format!("opt {}", shown.join(" ")));
    Verdict::new(ok, parts.join("; "))
}

fn budget_verdict(pool: &Pool, tm_pointer: Verdict) -> Verdict {
    let mut ok = tm_pointer.pass;
    let mut parts = Vec::new();
    for g in GameKind::ALL {
        let t = pool.tally.get(&g).copied().unwrap_or_default();
        ok &= t.steps > 0 && t.over_budget == 0 && t.formula_mismatch == 0;
        parts.push(format!(
            "{g}: {} steps, max {} , {} over, {} off-formula",
            t.steps, t.max_cost, t.over_budget, t.formula_mismatch
        ));
    }
    parts.push(tm_pointer.detail);
    Verdict::new(ok, parts.join("; "))
}

fn main() {
    let mut pool = Pool::new();
    let mut results: BTreeMap<u32, (&str, Verdict)> = BTreeMap::new();

    let v = timed(Some(Duration::from_secs(30)), || soundness::run(&mut pool));
    results.insert(1, ("soundness", v));
    let v = timed(Some(Duration::from_secs(60)), || completeness::run(&mut pool));
    results.insert(2, ("completeness", v));
    let tm_pointer = soundness::tm_pointer_costs();
    let v = timed(Some(Duration::from_secs(300)), || economics::incentives(&mut pool));
    results.insert(7, ("incentives", v));
    let v = timed(None, || economics::competition(&mut pool));
    results.insert(6, ("competition", v));
    let v = timed(None, || economics::conservation(&mut pool));
    results.insert(5, ("conservation", v));
    results.insert(8, ("freivalds", timed(None, audit::freivalds)));
    let v = timed(None, || audit::replay(&pool));
    results.insert(9, ("replay", v));
    results.insert(3, ("budget", budget_verdict(&pool, tm_pointer)));
    results.insert(4, ("rounds", rounds_verdict(&pool)));

    let mut failed = 0;
    for (n, (name, v)) in &results {
        let mark = if v.pass { "PASS" } else { "FAIL" };
        println!("{mark} criterion {n} ({name}): {}", v.detail);
        failed += usize::from(!v.pass);
    }
    println!("acceptance: {} of {} criteria pass", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
