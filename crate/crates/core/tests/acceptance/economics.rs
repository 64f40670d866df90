use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use refgame_core::agents::{bootstrap_mean_ci, make_challenger, make_prover, CostModel, ErrorModel, Policy};
use refgame_core::games::{Task, VerificationGame};
use refgame_core::ledger::{EscrowId, EscrowStatus, Ledger, Money, Purpose};
use refgame_core::protocols::{run_competition, default_deposit, default_prize, Deadlines, Env, Participant, TaskSpec};
use refgame_core::scenario::{run_scenario, run_with_task, ScenarioConfig};
use refgame_core::simnet::{gen_fixture, Board, Fixture};
use refgame_core::{GameKind, PartyId};

use crate::{fixtures, Pool, Verdict};

const FEE: Money = 1;

fn small_size(game: GameKind) -> usize {
    match game {
        GameKind::Matmul => 3,
        GameKind::Intersect => 6,
        GameKind::Sort => 6,
        GameKind::Gcd => 3,
        GameKind::Tm => 2,
        GameKind::Opt => 6,
    }
}

/// Error models that can actually corrupt this task's oracle.
fn usable_models(task: &Task, oracle: &[u8], seed: u64) -> Vec<ErrorModel> {
    ErrorModel::for_game(task.kind())
        .into_iter()
        .filter(|m| m.apply(task, oracle, &mut ChaCha8Rng::seed_from_u64(seed)).is_ok())
        .collect()
}

/// The first generated fixture from `seed` on that some error model can corrupt.
fn corruptible(game: GameKind, seed: u64) -> (Fixture, Vec<ErrorModel>) {
    (seed..)
        .step_by(7919)
        .find_map(|s| {
            let fx = gen_fixture(game, small_size(game), s).unwrap();
            let models = usable_models(&fx.task, &fx.oracle, s);
            (!models.is_empty()).then_some((fx, models))
        })
        .unwrap()
}

pub fn conservation(pool: &mut Pool) -> Verdict {
    let party = |i: usize| PartyId::new(format!("u{i}"));
    let purposes = [Purpose::Prize, Purpose::ProverDeposit, Purpose::ChallengerDeposit, Purpose::Fee];
    let mut broken = 0;
    let mut ops_run = 0;
    for seq in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seq);
        let mut l = Ledger::new(PartyId::new("sink"));
        let mut endowed: Money = 0;
        for _ in 0..rng.gen_range(1..80) {
            let before = l.snapshot_text();
            let (a, b) = (party(rng.gen_range(0..5)), party(rng.gen_range(0..5)));
            let e = EscrowId(rng.gen_range(0..16));
            let x: Money = rng.gen_range(0..300);
            let ok = match rng.gen_range(0..9) {
                0 => {
                    l.endow(&a, x);
                    endowed += x;
                    true
                }
                1 => l.transfer(&a, &b, x).is_ok(),
                2 => l.pay_fee(&a, x % 20).is_ok(),
                3 => l.open_escrow(&a, purposes[rng.gen_range(0..4)], x).is_ok(),
                4 => l.slash_and_split(e, &a, &b).is_ok(),
                5 => l.slash_to(e, &a).is_ok(),
                6 => l.refund(e).is_ok(),
                7 => l.pay_out(e, &a).is_ok(),
                _ => l.pay_prize(e, &a).is_ok(),
            };
            ops_run += 1;
            let held: Money = l
                .escrows()
                .iter()
                .filter(|e| e.status == EscrowStatus::Held)
                .map(|e| e.amount)
                .sum();
            let balances: Money = l.balances().map(|(_, b)| b).sum();
            if balances + held != endowed || !l.conservation_check() || (!ok && l.snapshot_text() != before) {
                broken += 1;
                break;
            }
        }
    }
    // every bundled scenario under several seeds
    for entry in std::fs::read_dir(fixtures()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let config = ScenarioConfig::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
            for seed in 0..10 {
                let run = run_scenario(&config, Some(seed), &fixtures()).unwrap();
                pool.ledger(&run.ledger);
            }
        }
    }
    Verdict::new(
        broken == 0 && pool.unbalanced == 0,
        format!(
            "1000 random sequences ({ops_run} operations), {broken} broken; {} protocol runs, {} unbalanced",
            pool.ledgers, pool.unbalanced
        ),
    )
}

struct Outcome {
    refunded: bool,
    ok: bool,
}

fn one_competition(pool: &mut Pool, seed: u64, zero_correct: bool) -> Outcome {
    let costs = CostModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc0ffee);
    let game = GameKind::ALL[(seed % 6) as usize];
    let (fx, models) = corruptible(game, seed);
    let rounds = fx.task.instance(&fx.oracle).unwrap().spec().round_bound_f;
    let dep = default_deposit(&costs, FEE, rounds);
    let spec = TaskSpec {
        task: fx.task.clone(),
        prize: default_prize(&costs, FEE, 2),
        min_deposit_prover: dep,
        min_deposit_challenger: dep,
        min_quality: None,
        fee: FEE,
        deadlines: Deadlines::default(),
    };
    let provers = rng.gen_range(1..=4);
    let honest_at = (!zero_correct).then(|| rng.gen_range(0..provers));
    let mut parts = Vec::new();
    for k in 0..provers {
        let honest = Some(k) == honest_at || (!zero_correct && rng.gen_bool(0.3));
        let policy = if honest {
            Policy::Honest
        } else {
            Policy::Corrupt(models[rng.gen_range(0..models.len())])
        };
        let agent = make_prover(policy, game, costs, rng.gen()).unwrap();
        parts.push(Participant::new(format!("p{k}"), agent, dep + rng.gen_range(0..=dep)));
    }
    parts.push(Participant::new(
        "c0",
        make_challenger(Policy::Honest, game, costs, rng.gen()).unwrap(),
        dep,
    ));
    if rng.gen_bool(0.5) {
        let agent = make_challenger(Policy::FalseAlarm(0.5), game, costs, rng.gen()).unwrap();
        parts.push(Participant::new("c1", agent, dep + rng.gen_range(0..=dep)));
    }
    if rng.gen_bool(0.5) {
        let agent = make_challenger(Policy::Honest, game, costs, rng.gen()).unwrap();
        parts.push(Participant::new("c2", agent, 2 * dep));
    }
    let giver = PartyId::new("T");
    let mut ledger = Ledger::new(PartyId::new("net"));
    ledger.endow(&giver, spec.prize + FEE);
    for p in &parts {
        ledger.endow(&p.id, 1000);
    }
    let mut board = Board::new();
    let result = {
        let mut env = Env {
            ledger: &mut ledger,
            board: &mut board,
            task_giver: giver.clone(),
        };
        run_competition(&spec, &mut parts, &mut env, seed).unwrap()
    };
    for g in &result.games {
        pool.transcript(&g.instance, &g.transcript);
    }
    pool.ledger(&ledger);

    // the least-index entry carrying the oracle answer must win
    let expected = result.ordered.iter().position(|e| e.payload == fx.oracle);
    let ok = if zero_correct {
        expected.is_none()
            && result.winner.is_none()
            && result.prize_refunded
            && ledger.balance(&giver) >= spec.prize
    } else {
        expected.is_some()
            && result.winner == expected
            && result.accepted().is_some_and(|e| e.payload == fx.oracle)
            && !result.prize_refunded
    };
    Outcome {
        refunded: result.prize_refunded,
        ok,
    }
}

pub fn competition(pool: &mut Pool) -> Verdict {
    let mut wrong = Vec::new();
    for seed in 0..100 {
        if !one_competition(pool, seed, false).ok {
            wrong.push(seed);
        }
    }
    let mut refunds = 0;
    let mut wrong_zero = Vec::new();
    for seed in 100..150 {
        let o = one_competition(pool, seed, true);
        refunds += u32::from(o.refunded);
        if !o.ok {
            wrong_zero.push(seed);
        }
    }
    Verdict::new(
        wrong.is_empty() && wrong_zero.is_empty(),
        format!(
            "100 scenarios with an honest prover: {} accepted the oracle answer as least-index survivor; \
             50 with none correct: {refunds} refunded{}",
            100 - wrong.len(),
            if wrong.is_empty() && wrong_zero.is_empty() {
                String::new()
            } else {
                format!("; failing seeds {wrong:?} {wrong_zero:?}")
            }
        ),
    )
}

const MC_RUNS: u64 = 600;

pub fn incentives(pool: &mut Pool) -> Verdict {
    let costs = CostModel::default();
    let mut nets: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for seed in 0..MC_RUNS {
        let game = GameKind::ALL[(seed % 6) as usize];
        let (fx, models) = corruptible(game, 1000 + seed);
        let model = models[(seed / 6) as usize % models.len()];
        let json = format!(
            r#"{{
              "id": "mc", "seed": {seed}, "fees": {FEE},
              "costs": {{ "solve": {}, "check": {}, "per_move": {} }},
              "task": {{ "game": "{game}", "generate": {{ "size": 1 }}, "prize": {} }},
              "agents": [
                {{ "id": "hp", "role": "prover", "strategy": "honest", "funds": 1000 }},
                {{ "id": "cp", "role": "prover", "strategy": "corrupt", "error_model": "{model}", "funds": 1000 }},
                {{ "id": "hc", "role": "challenger", "strategy": "honest", "funds": 1000 }},
                {{ "id": "fa", "role": "challenger", "strategy": "false_alarm", "rate": 1.0, "funds": 1000 }}
              ],
              "protocol": {{ "kind": "competition" }}
            }}"#,
            costs.solve,
            costs.check,
            costs.per_move,
            2 * costs.solve,
        );
        let config = ScenarioConfig::from_json(&json).unwrap();
        let run = run_with_task(&config, fx.task, seed).unwrap();
        // deposits follow 4 * max(fee, expected game cost) by default
        let f = run.games.first().map(|g| g.transcript.spec().round_bound_f);
        if let Some(f) = f {
            let expected = 4 * FEE.max(costs.check + Money::from(f) * costs.per_move);
            assert_eq!(default_deposit(&costs, FEE, f), expected);
        }
        for g in &run.games {
            pool.transcript(&g.instance, &g.transcript);
        }
        pool.ledger(&run.ledger);
        for p in &run.report.payoffs {
            let key = match p.party.as_str() {
                "hp" => "honest prover",
                "cp" => "corrupt prover",
                "hc" => "honest challenger",
                _ => "false-alarm challenger",
            };
            nets.entry(key).or_default().push(p.net as f64);
        }
    }
    let want: [(&str, bool); 4] = [
        ("honest prover", true),
        ("corrupt prover", false),
        ("false-alarm challenger", false),
        ("honest challenger", true),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, (key, positive)) in want.iter().enumerate() {
        let v = &nets[key];
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let (lo, hi) = bootstrap_mean_ci(v, 2000, 0.95, 77 + i as u64);
        let good = if *positive { lo > 0.0 } else { hi < 0.0 };
        ok &= good;
        parts.push(format!("{key} mean {mean:.2} CI [{lo:.2}, {hi:.2}]"));
    }
    Verdict::new(
        ok,
        format!(
            "{MC_RUNS} runs, prize {} = 2 x solve, deposit 4 x max(fee, game cost): {}",
            2 * costs.solve,
            parts.join("; ")
        ),
    )
}
