use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use refgame_core::agents::ErrorModel;
use refgame_core::games::tm::{Complaint, Field, Machine, TmInstance, TmTask};
use refgame_core::games::{Instance, Task, VerificationGame};
use refgame_core::play::{play_game, Abstain, Greedy, Honest, Strategy};
use refgame_core::referee::CostMeter;
use refgame_core::simnet::gen_fixture;
use refgame_core::{GameKind, Move, Party};

use crate::{Pool, Verdict};

const PER_GAME: usize = 50;

fn tm_task(i: usize, rng: &mut ChaCha8Rng) -> TmTask {
    let h = 2 + (i % 4) as u32;
    let k = 4 + (i % 5) as u32;
    let s = 1usize << h;
    if i.is_multiple_of(3) {
        let m = Machine::doubler();
        let one = m.symbol('1').unwrap();
        let input = vec![one; (s / 2 - 1).min(4)];
        TmTask::new(m, input, 2, k, h, (1, 2)).unwrap()
    } else {
        let m = Machine::random(rng, 3, 3);
        let len = rng.gen_range(0..=s / 2);
        let input = (0..len).map(|_| rng.gen_range(0..3)).collect();
        TmTask::new(m, input, 2, k, h, (1, 2)).unwrap()
    }
}

fn task_for(game: GameKind, i: usize, rng: &mut ChaCha8Rng) -> Task {
    let seed = i as u64;
    let fixture = |size| gen_fixture(game, size, seed).unwrap().task;
    match game {
        GameKind::Matmul => fixture(1 + i % 8),
        GameKind::Intersect => fixture(1 + i % 16),
        GameKind::Sort => fixture(2 + i % 15),
        GameKind::Gcd => fixture(1 + i % 6),
        GameKind::Tm => Task::Tm(tm_task(i, rng)),
        GameKind::Opt => fixture(1 + i % 16),
    }
}

fn within_limits(task: &Task) -> bool {
    match task {
        Task::Matmul(t) => t.n() <= 8 && t.modulus == 97,
        Task::Intersect(t) => t.a.len() <= 16 && t.b.len() <= 16 && t.r <= 8,
        Task::Sort(t) => t.a.len() <= 16 && t.r <= 8,
        Task::Gcd(t) => t.a <= 1_000_000 && t.b <= 1_000_000,
        Task::Tm(t) => t.time_bound() <= 256 && t.space_bound() <= 32,
        Task::Opt(t) => match t {
            refgame_core::games::opt::OptTask::Classifier(c) => c.samples.len() <= 16,
            refgame_core::games::opt::OptTask::Factorization(f) => f.a < 1 << 16,
        },
    }
}

/// `PER_GAME` corrupted instances of `game`, each within the size limits.
fn corrupted(game: GameKind) -> Vec<Instance> {
    let models = ErrorModel::for_game(game);
    let mut out = Vec::new();
    let mut i = 0usize;
    while out.len() < PER_GAME {
        let mut rng = ChaCha8Rng::seed_from_u64(0xacce_5500 + i as u64);
        let task = task_for(game, i, &mut rng);
        assert!(within_limits(&task), "{game} fixture {i} is too large");
        let oracle = task.solve();
        for k in 0..models.len() {
            let model = models[(i + k) % models.len()];
            if let Ok(bad) = model.apply(&task, &oracle, &mut rng) {
                assert_ne!(bad, oracle);
                out.push(task.instance(&bad).unwrap());
                break;
            }
        }
        i += 1;
    }
    out
}

pub fn run(pool: &mut Pool) -> Verdict {
    let mut games = 0;
    let mut lost = Vec::new();
    for game in GameKind::ALL {
        for (i, inst) in corrupted(game).iter().enumerate() {
            let provers: [&mut dyn Strategy; 3] = [&mut Greedy, &mut Honest, &mut Abstain];
            for prover in provers {
                let t = play_game(inst, &format!("{game}{i}"), prover, &mut Honest);
                games += 1;
                if t.winner() != Some(Party::Challenger) {
                    lost.push(format!("{game}#{i}"));
                }
                pool.transcript(inst, &t);
            }
        }
    }
    Verdict::new(
        lost.is_empty(),
        format!(
            "{} corrupted instances x 3 prover strategies, challenger won {}/{games}{}",
            6 * PER_GAME,
            games - lost.len(),
            if lost.is_empty() { String::new() } else { format!(", lost {lost:?}") }
        ),
    )
}

/// Judge cost of each prover complaint kind at space bounds 8, 16 and 32;
/// every kind must cost the same everywhere, whatever cell it points at.
pub fn tm_pointer_costs() -> Verdict {
    let mut costs: BTreeMap<String, BTreeSet<u64>> = BTreeMap::new();
    for h in [3u32, 4, 5] {
        let s = 1u32 << h;
        let mut rng = ChaCha8Rng::seed_from_u64(h as u64);
        let m = Machine::random(&mut rng, 3, 3);
        let input = (0..3).map(|_| rng.gen_range(0..3)).collect();
        let task = TmTask::new(m, input, 2, 5, h, (1, 2)).unwrap();
        let mut claimed = task.solve();
        claimed[0] = (claimed[0] + 1) % 3;
        let inst = TmInstance::new(task, claimed).unwrap();
        let t = play_game(&inst, "ptr", &mut Greedy, &mut Honest);
        let moves = t.moves();
        let ladders = moves.len().div_ceil(2);
        assert!(ladders >= 3, "game too short to reach the bottom level");
        let bottom = 2 * (ladders - 1);
        let cells = [0, s / 2, s - 1];
        let mut probe = |upto: usize, label: &str, c: Complaint| {
            let mut ms: Vec<Move> = moves[..=upto].to_vec();
            ms.push(Move::new(Party::Prover, upto as u32 + 2, c.encode()));
            let mut meter = CostMeter::new();
            inst.judge(&ms, &mut meter);
            costs.entry(label.to_string()).or_default().insert(meter.ops());
        };
        for &c in &cells {
            probe(0, "input(cell)", Complaint::Input(Field::Cell(c)));
            probe(2, "copy_first(cell)", Complaint::CopyFirst(Field::Cell(c)));
            probe(2, "copy_last(cell)", Complaint::CopyLast(Field::Cell(c)));
            probe(bottom, "step(cell)", Complaint::Step(1, Field::Cell(c)));
        }
        probe(0, "input(state)", Complaint::Input(Field::State));
        probe(0, "output", Complaint::Output);
        probe(0, "segment", Complaint::Segment(1));
        probe(bottom, "step(head)", Complaint::Step(1, Field::Head));
        probe(bottom, "step(state)", Complaint::Step(1, Field::State));
    }
    let varying: Vec<&String> = costs.iter().filter(|(_, v)| v.len() != 1).map(|(k, _)| k).collect();
    let shown: Vec<String> = costs
        .iter()
        .map(|(k, v)| format!("{k}={}", v.iter().map(u64::to_string).collect::<Vec<_>>().join("/")))
        .collect();
    Verdict::new(
        varying.is_empty(),
        format!("tm complaint costs over S=8,16,32: {}", shown.join(" ")),
    )
}
