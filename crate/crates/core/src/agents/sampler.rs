//! Randomized checks for sampling challengers.

use std::collections::HashSet;

use rand::{Rng, RngCore};

use crate::codec::Decoder;
use crate::games::matmul::Matrix;
use crate::games::opt::{OptSolution, OptTask};
use crate::games::{Instance, Task, VerificationGame};
use crate::referee::CostMeter;
use crate::types::GameKind;

pub fn has_sampling_rule(game: GameKind) -> bool {
    !matches!(game, GameKind::Gcd | GameKind::Tm)
}

fn u64s(bytes: &[u8]) -> Vec<u64> {
    Decoder::new(bytes).u64s().unwrap_or_default()
}

/// Freivalds: is `A(Br) != Cr` for one of `trials` random 0/1 vectors `r`?
pub fn freivalds(a: &Matrix, b: &Matrix, c: &Matrix, p: u64, trials: u32, rng: &mut dyn RngCore) -> bool {
    let n = a.dim();
    let apply = |m: &Matrix, v: &[u64]| -> Vec<u64> {
        (0..n)
            .map(|i| (0..n).fold(0u64, |s, k| ((s as u128 + m.get(i, k) as u128 * v[k] as u128) % p as u128) as u64))
            .collect()
    };
    (0..trials).any(|_| {
        let r: Vec<u64> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        apply(a, &apply(b, &r)) != apply(c, &r)
    })
}

/// Runs `k` random probes against the claimed solution and reports whether
/// one exposed an error. `None` for games without a sampling rule.
pub fn spot_check(instance: &Instance, k: u32, rng: &mut dyn RngCore) -> Option<bool> {
    let payload = instance.claimed_payload();
    Some(match instance.task() {
        Task::Matmul(t) => {
            let c = Matrix::decode(&payload).ok()?;
            freivalds(&t.a, &t.b, &c, t.modulus, k, rng)
        }
        Task::Sort(t) => {
            let f = u64s(&payload);
            let n = f.len() as u64;
            let key = |x: u64| t.a[x as usize - 1];
            (0..k).any(|_| {
                let j = rng.gen_range(0..f.len());
                let i = rng.gen_range(0..f.len());
                let bad = |x: u64| x == 0 || x > n;
                if bad(f[j]) || bad(f[i]) {
                    return true;
                }
                if i != j && f[i] == f[j] {
                    return true;
                }
                j + 1 < f.len() && !bad(f[j + 1]) && key(f[j]) > key(f[j + 1])
            })
        }
        Task::Intersect(t) => {
            let c: HashSet<u64> = u64s(&payload).into_iter().collect();
            let a: HashSet<u64> = t.a.iter().copied().collect();
            let b: HashSet<u64> = t.b.iter().copied().collect();
            let claimed: Vec<u64> = c.iter().copied().collect();
            (0..k).any(|_| {
                if !claimed.is_empty() && rng.gen_bool(0.5) {
                    let x = claimed[rng.gen_range(0..claimed.len())];
                    !(a.contains(&x) && b.contains(&x))
                } else if !t.a.is_empty() {
                    let x = t.a[rng.gen_range(0..t.a.len())];
                    b.contains(&x) && !c.contains(&x)
                } else {
                    false
                }
            })
        }
        Task::Opt(OptTask::Classifier(t)) => {
            let Ok(OptSolution::Classifier { sigma, counters, q }) = OptSolution::decode(&payload) else {
                return Some(true);
            };
            if counters[0] != 0 || counters.last() != Some(&q) {
                return Some(true);
            }
            let mut meter = CostMeter::new();
            (0..k).any(|_| {
                let m = rng.gen_range(0..t.samples.len());
                let s = &t.samples[m];
                let hit = (sigma.eval(&s.x, &mut meter) == s.c) as u64;
                counters[m + 1].wrapping_sub(counters[m]) != hit
            })
        }
        // short certificates are checked in full
        Task::Opt(OptTask::Factorization(_)) => !instance.is_valid(),
        Task::Gcd(_) | Task::Tm(_) => return None,
    })
}
