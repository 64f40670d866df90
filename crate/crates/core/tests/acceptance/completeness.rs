//! Correct solutions against every challenger move drawn from a structured
//! move space, with the prover playing the honest oracle.
//!
//! Move spaces per game:
//! - matmul, intersect, sort: every index in and just outside range, every
//!   partial-sum vector over the field plus one out-of-field value;
//! - gcd: every modulus below the bound that is prime, plus several
//!   composite and out-of-range ones, with the true residues, each single
//!   residue shifted, all shifted, or one out of range; then every pinpoint;
//! - tm: the true ladder and every single-field change of it (any state,
//!   head or symbol at any configuration), at every disputed cell;
//! - opt: every challenge kind and index, and every running-product list
//!   over the true products and the values around 0, 1 and `a`.
//!
//! Each also gets an empty and a junk payload.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use refgame_core::games::gcd::{Bezout, GcdChallenge, GcdInstance, GcdTask};
use refgame_core::games::intersect::{IntersectChallenge, IntersectInstance, IntersectTask};
use refgame_core::games::matmul::{Matrix, MatmulChallenge, MatmulInstance, MatmulTask};
use refgame_core::games::opt::{Classifier, OptChallenge, OptInstance, OptSolution, OptTask, Sample};
use refgame_core::games::sort::{SortChallenge, SortInstance, SortTask};
use refgame_core::games::tm::{schedule, Complaint, Config, Ladder, Machine, TmInstance, TmTask};
use refgame_core::games::{Instance, VerificationGame};
use refgame_core::play::{play_game, Honest, Scripted};
use refgame_core::referee::{verify_step, CostMeter};
use refgame_core::{Move, Party, Transcript};

use crate::{Pool, Verdict};

type Moves<'a> = &'a dyn Fn(&[Move]) -> Vec<Vec<u8>>;

struct Explorer<'p> {
    pool: &'p mut Pool,
    instances: u64,
    leaves: u64,
    lost: u64,
    losses: Vec<String>,
    /// Challenger scripts kept for an engine replay: every 997th leaf.
    samples: Vec<(Instance, Vec<Vec<u8>>, Party)>,
}

impl Explorer<'_> {
    fn instance(&mut self, name: &str, inst: Instance, moves: Moves<'_>) {
        self.instances += 1;
        self.pool.instance(&inst);
        let t = Transcript::new(inst.spec(), name);
        // a challenger that never opens
        self.leaf(&inst, &t, Party::Prover, Vec::new());
        self.walk(&inst, t, Vec::new(), moves);
    }

    fn walk(&mut self, inst: &Instance, t: Transcript, script: Vec<Vec<u8>>, moves: Moves<'_>) {
        for payload in moves(t.moves()) {
            let mut t2 = t.clone();
            let mut s2 = script.clone();
            s2.push(payload.clone());
            let mut decided = self.push(inst, &mut t2, Party::Challenger, Some(payload));
            if decided.is_none() {
                let reply = inst.honest_move(t2.moves(), Party::Prover);
                decided = self.push(inst, &mut t2, Party::Prover, reply);
            }
            match decided {
                Some(w) => self.leaf(inst, &t2, w, s2),
                None => {
                    // the challenger may also stop here
                    self.leaf(inst, &t2, Party::Prover, s2.clone());
                    self.walk(inst, t2, s2, moves);
                }
            }
        }
    }

    /// One move under the engine's rules; `Some(winner)` once decided.
    fn push(&mut self, inst: &Instance, t: &mut Transcript, author: Party, payload: Option<Vec<u8>>) -> Option<Party> {
        let round = t.next_round();
        let Some(payload) = payload else {
            return Some(if round == 1 { Party::Prover } else { author.other() });
        };
        match t.append(Move::new(author, round, payload)) {
            Ok(()) => {
                let v = verify_step(inst, t);
                self.pool.step(t.spec(), v.metered_cost);
                v.outcome.winner()
            }
            Err(_) => Some(author.other()),
        }
    }

    fn leaf(&mut self, inst: &Instance, t: &Transcript, winner: Party, script: Vec<Vec<u8>>) {
        self.leaves += 1;
        self.pool.finished(t.spec(), t.moves().len());
        if winner != Party::Prover {
            self.lost += 1;
            if self.losses.len() < 5 {
                self.losses.push(format!("{} after {} moves", t.solution_ref(), t.moves().len()));
            }
        }
        if self.leaves.is_multiple_of(997) {
            self.samples.push((inst.clone(), script, winner));
        }
    }
}

fn matmul(ex: &mut Explorer<'_>) {
    let moves = |ms: &[Move]| -> Vec<Vec<u8>> {
        if !ms.is_empty() {
            return Vec::new();
        }
        let mut out = vec![Vec::new(), vec![0xff]];
        for i in 0..=3 {
            for j in 0..=3 {
                for code in 0..27u32 {
                    let d = (0..3).map(|k| u64::from(code / 3u32.pow(k) % 3)).collect();
                    out.push(MatmulChallenge { i, j, d }.encode());
                }
            }
        }
        out.push(MatmulChallenge { i: 1, j: 1, d: vec![0, 1] }.encode());
        out
    };
    for bits in 0..256u32 {
        let cell = |k: u32| u64::from((bits >> k) & 1);
        let a = [[cell(0), cell(1)], [cell(2), cell(3)]];
        let b = [[cell(4), cell(5)], [cell(6), cell(7)]];
        let c: Vec<Vec<u64>> = (0..2)
            .map(|i| (0..2).map(|j| (a[i][0] * b[0][j] + a[i][1] * b[1][j]) % 2).collect())
            .collect();
        let rows = |m: [[u64; 2]; 2]| Matrix::from_rows(m.iter().map(|r| r.to_vec()).collect()).unwrap();
        let task = MatmulTask::new(2, rows(a), rows(b)).unwrap();
        let inst = MatmulInstance::new(task, Matrix::from_rows(c).unwrap()).unwrap();
        ex.instance("matmul", Instance::Matmul(inst), &moves);
    }
}

/// All lists of length `0..=max_len` over `0..universe`.
fn lists(max_len: usize, universe: u64) -> Vec<Vec<u64>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for l in &frontier {
            for x in 0..universe {
                let mut l2: Vec<u64> = l.clone();
                l2.push(x);
                next.push(l2);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn intersect(ex: &mut Explorer<'_>) {
    let moves = |ms: &[Move]| -> Vec<Vec<u8>> {
        if !ms.is_empty() {
            return Vec::new();
        }
        let mut out = vec![Vec::new(), vec![7]];
        for i_a in 0..=4 {
            for i_b in 0..=4 {
                out.push(IntersectChallenge::Missing { i_a, i_b }.encode());
            }
        }
        for j_c in 0..=4 {
            out.push(IntersectChallenge::Alien { j_c }.encode());
        }
        out
    };
    let all = lists(3, 4);
    for a in &all {
        for b in &all {
            let mut c: Vec<u64> = a.iter().copied().filter(|x| b.contains(x)).collect();
            c.sort_unstable();
            c.dedup();
            let task = IntersectTask::new(2, a.clone(), b.clone()).unwrap();
            let inst = IntersectInstance::new(task, c).unwrap();
            ex.instance("intersect", Instance::Intersect(inst), &moves);
        }
    }
}

fn sort(ex: &mut Explorer<'_>) {
    let moves = |ms: &[Move]| -> Vec<Vec<u8>> {
        if !ms.is_empty() {
            return Vec::new();
        }
        let mut out = vec![Vec::new(), vec![3]];
        for j in 0..=4 {
            out.push(SortChallenge::Range { j }.encode());
            for i in 0..=4 {
                out.push(SortChallenge::Duplicate { i, j }.encode());
            }
            for b in 0..=3 {
                out.push(SortChallenge::Order { j, b }.encode());
            }
        }
        out
    };
    let perms: [[u64; 3]; 6] = [[1, 2, 3], [1, 3, 2], [2, 1, 3], [2, 3, 1], [3, 1, 2], [3, 2, 1]];
    for a in lists(3, 4).into_iter().filter(|l| l.len() == 3) {
        for f in perms {
            let sorted = f.windows(2).all(|w| a[w[0] as usize - 1] <= a[w[1] as usize - 1]);
            if !sorted {
                continue;
            }
            let inst = SortInstance::new(SortTask::new(2, a.clone()).unwrap(), f.to_vec()).unwrap();
            ex.instance("sort", Instance::Sort(inst), &moves);
        }
    }
}

fn is_prime(p: u64) -> bool {
    p >= 2 && (2..p).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

fn gcd(ex: &mut Explorer<'_>) {
    for a in 1..=30u64 {
        for b in 1..=30u64 {
            let task = GcdTask::new(a, b).unwrap();
            let claimed = task.solve();
            let Bezout { c, d, e, d2, e2 } = claimed;
            let (ai, bi) = (a as i64, b as i64);
            let mut g = (a, b);
            while g.1 != 0 {
                g = (g.1, g.0 % g.1);
            }
            assert!(c == g.0 as i64 && c == d * ai + e * bi && ai == d2 * c && bi == e2 * c);
            let numbers = [ai, bi, c, d, e, d2, e2];
            let bound = task.modulus_bound();
            let width = task.width() as u32;
            let moduli: Vec<u64> = (0..=bound + 1)
                .filter(|&p| p < 2 || is_prime(p) || [4, 9, bound - 1, bound, bound + 1].contains(&p))
                .collect();
            let moves = |ms: &[Move]| -> Vec<Vec<u8>> {
                match ms.len() {
                    0 => {
                        let mut out = vec![Vec::new(), vec![1, 2, 3]];
                        for &p in &moduli {
                            let truth = numbers.map(|x| if p == 0 { 0 } else { x.rem_euclid(p as i64) as u64 });
                            let shift = |r: u64| if p < 2 { 1 } else { (r + 1) % p };
                            let mut variants = vec![truth, truth.map(shift)];
                            for k in 0..7 {
                                let mut v = truth;
                                v[k] = shift(v[k]);
                                variants.push(v);
                            }
                            let mut wide = truth;
                            wide[0] = p;
                            variants.push(wide);
                            for residues in variants {
                                out.push(GcdChallenge { p, residues }.encode());
                            }
                        }
                        out
                    }
                    2 => {
                        let mut out = vec![Vec::new(), vec![5]];
                        for m in 0..=width {
                            out.push(refgame_core::games::gcd::encode_pinpoint(m));
                        }
                        out
                    }
                    _ => Vec::new(),
                }
            };
            let inst = GcdInstance::new(task, claimed).unwrap();
            ex.instance("gcd", Instance::Gcd(inst), &moves);
        }
    }
}

fn tm_moves(inst: &TmInstance, ms: &[Move]) -> Vec<Vec<u8>> {
    let task = &inst.task;
    let trace = inst.trace();
    let spread = task.spread();
    let mut times = schedule(0, task.time_bound(), spread);
    let mut parent: Option<(Config, Config)> = None;
    for (level, pair) in ms.chunks(2).enumerate() {
        let [l, c] = pair else {
            return Vec::new();
        };
        let Ok(ladder) = Ladder::decode(&l.payload, level == 0, times.len(), task) else {
            return Vec::new();
        };
        let Ok(Complaint::Segment(j)) = Complaint::decode(&c.payload) else {
            return Vec::new();
        };
        let j = j as usize;
        parent = Some((ladder.configs[j - 1].clone(), ladder.configs[j].clone()));
        times = schedule(times[j - 1], times[j], spread);
    }
    let mut base: Vec<Config> = times.iter().map(|&t| trace[t as usize].clone()).collect();
    if let Some((first, last)) = parent {
        let n = base.len();
        base[0] = first;
        base[n - 1] = last;
    }
    let s = task.space_bound();
    let mut variants = vec![base.clone()];
    for i in 0..base.len() {
        let mut with = |f: &dyn Fn(&mut Config)| {
            let mut v = base.clone();
            f(&mut v[i]);
            variants.push(v);
        };
        for q in (0..task.machine.states()).filter(|&q| q != base[i].state) {
            with(&|c| c.state = q);
        }
        for h in (0..s as u32).filter(|&h| h != base[i].head) {
            with(&|c| c.head = h);
        }
        for cell in 0..s {
            for sym in (0..task.machine.symbols() as u8).filter(|&x| x != base[i].tape[cell]) {
                with(&|c| c.tape[cell] = sym);
            }
        }
    }
    let diffs: Vec<Option<u32>> = if ms.is_empty() {
        (0..s as u32).map(Some).collect()
    } else {
        vec![None]
    };
    let mut out = vec![Vec::new(), vec![0; 3]];
    for v in &variants {
        for &diff_cell in &diffs {
            out.push(
                Ladder {
                    diff_cell,
                    configs: v.clone(),
                }
                .encode(),
            );
        }
    }
    out
}

fn tm(ex: &mut Explorer<'_>) {
    let mut tasks = Vec::new();
    let doubler = Machine::doubler();
    let one = doubler.symbol('1').unwrap();
    for len in 0..=2 {
        tasks.push(TmTask::new(doubler.clone(), vec![one; len], 2, 4, 2, (1, 2)).unwrap());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for i in 0..12u32 {
        let m = Machine::random(&mut rng, 3, 3);
        let len = rng.gen_range(0..=3);
        let input = (0..len).map(|_| rng.gen_range(0..3)).collect();
        tasks.push(TmTask::new(m, input, 2, 1 + i % 4, 2, (1, 2)).unwrap());
    }
    for task in tasks {
        assert!(task.time_bound() <= 16);
        let claimed = task.solve();
        let inst = TmInstance::new(task, claimed).unwrap();
        let moves = |ms: &[Move]| tm_moves(&inst, ms);
        ex.instance("tm", Instance::Tm(inst.clone()), &moves);
    }
}

fn opt_moves(inst: &OptInstance, ms: &[Move]) -> Vec<Vec<u8>> {
    if !ms.is_empty() {
        return Vec::new();
    }
    let n = inst.size() as u32;
    let mut out = vec![Vec::new(), vec![9]];
    for ch in [OptChallenge::Base, OptChallenge::Quality, OptChallenge::Length] {
        out.push(ch.encode(None));
    }
    for i in 0..=n + 1 {
        out.push(OptChallenge::Update(i).encode(None));
        out.push(OptChallenge::Order(i).encode(None));
    }
    match (&inst.task, &inst.claimed) {
        (OptTask::Factorization(t), OptSolution::Factorization { factors, .. }) => {
            let a = t.a;
            let mut truth = vec![1u64];
            for f in factors {
                truth.push(truth.last().unwrap() * f);
            }
            let mut values: Vec<u64> = vec![0, 1, 2, a - 1, a, a + 1];
            values.extend(&truth);
            values.sort_unstable();
            values.dedup();
            let len = factors.len() + 1;
            let total = values.len().pow(len as u32);
            for code in 0..total {
                let list: Vec<u64> = (0..len)
                    .map(|k| values[code / values.len().pow(k as u32) % values.len()])
                    .collect();
                out.push(OptChallenge::Product.encode(Some(&list)));
            }
            out.push(OptChallenge::Product.encode(Some(&truth[..len - 1])));
            let mut long = truth.clone();
            long.push(a);
            out.push(OptChallenge::Product.encode(Some(&long)));
        }
        _ => out.push(OptChallenge::Product.encode(Some(&[1, 2]))),
    }
    out
}

fn opt(ex: &mut Explorer<'_>) {
    let mut samples = Vec::new();
    for x in -1..=1 {
        for c in [false, true] {
            samples.push(Sample { x: vec![x], c });
        }
    }
    let mut tasks = Vec::new();
    for n in 1..=3u32 {
        for code in 0..6usize.pow(n) {
            let s: Vec<Sample> = (0..n).map(|k| samples[code / 6usize.pow(k) % 6].clone()).collect();
            tasks.push(OptTask::classifier(1, s).unwrap());
        }
    }
    let mut instances = Vec::new();
    for task in &tasks {
        let OptTask::Classifier(ct) = task else { unreachable!() };
        let mut sigmas = vec![match task.solve() {
            OptSolution::Classifier { sigma, .. } => sigma,
            _ => unreachable!(),
        }];
        sigmas.push(Classifier::Hyperplane { weights: vec![1], bias: 0 });
        sigmas.push(Classifier::Hyperplane { weights: vec![-1], bias: 1 });
        for sigma in sigmas {
            let mut counters = vec![0u64];
            for s in &ct.samples {
                let hit = sigma.eval(&s.x, &mut CostMeter::new()) == s.c;
                counters.push(counters.last().unwrap() + u64::from(hit));
            }
            let q = *counters.last().unwrap();
            let claimed = OptSolution::Classifier { sigma, counters, q };
            instances.push(OptInstance::new(task.clone(), claimed).unwrap());
        }
    }
    for a in 2..=30u64 {
        let mut factors = Vec::new();
        let mut r = a;
        let mut p = 2;
        while r > 1 {
            while r % p == 0 {
                factors.push(p);
                r /= p;
            }
            p += 1;
        }
        if factors.len() > 3 {
            continue;
        }
        let m = factors.len() as u64;
        let claimed = OptSolution::Factorization { m, factors, q: m };
        instances.push(OptInstance::new(OptTask::factorization(a).unwrap(), claimed).unwrap());
    }
    for inst in instances {
        let moves = |ms: &[Move]| opt_moves(&inst, ms);
        ex.instance("opt", Instance::Opt(inst.clone()), &moves);
    }
}

pub fn run(pool: &mut Pool) -> Verdict {
    let mut ex = Explorer {
        pool,
        instances: 0,
        leaves: 0,
        lost: 0,
        losses: Vec::new(),
        samples: Vec::new(),
    };
    let mut parts = Vec::new();
    type Stage = fn(&mut Explorer<'_>);
    let stages: [(&str, Stage); 6] = [
        ("matmul", matmul),
        ("intersect", intersect),
        ("sort", sort),
        ("gcd", gcd),
        ("tm", tm),
        ("opt", opt),
    ];
    for (name, stage) in stages {
        let (i0, l0) = (ex.instances, ex.leaves);
        stage(&mut ex);
        parts.push(format!("{name} {}/{}", ex.instances - i0, ex.leaves - l0));
    }
    // the engine's own game loop must agree on the sampled lines of play
    let mut disagreements = 0;
    let samples = std::mem::take(&mut ex.samples);
    for (inst, script, winner) in &samples {
        let t = play_game(inst, "sample", &mut Honest, &mut Scripted::new(script.clone()));
        if t.winner() != Some(*winner) {
            disagreements += 1;
        }
        ex.pool.transcript(inst, &t);
    }
    let ok = ex.lost == 0 && disagreements == 0;
    Verdict::new(
        ok,
        format!(
            "instances/lines of play: {}; prover won {}/{}; {} sampled lines replayed, {disagreements} disagree{}",
            parts.join(", "),
            ex.leaves - ex.lost,
            ex.leaves,
            samples.len(),
            if ex.losses.is_empty() { String::new() } else { format!("; losses {:?}", ex.losses) }
        ),
    )
}
