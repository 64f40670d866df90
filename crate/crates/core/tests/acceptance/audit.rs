use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use refgame_core::agents::sampler::freivalds as freivalds_check;
use refgame_core::audit::{export, verify_text, AuditOutcome};
use refgame_core::games::matmul::Matrix;
use refgame_core::play::{play_game, Scripted};
use refgame_core::{Party, Status};

use crate::{Pool, Verdict};

const P: u64 = 97;

fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_rows((0..n).map(|_| (0..n).map(|_| rng.gen_range(0..P)).collect()).collect()).unwrap()
}

/// Plain triple loop, kept apart from the library's product.
fn product(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.dim();
    let mut c = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let s: u64 = (0..n).map(|k| a.get(i, k) * b.get(k, j)).sum();
            c.set(i, j, s % P);
        }
    }
    c
}

pub fn freivalds() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for t in [4u32, 8] {
        let mut rng = ChaCha8Rng::seed_from_u64(0xf7e1 + u64::from(t));
        let trials = 1000;
        let mut caught = 0;
        for _ in 0..trials {
            let n = rng.gen_range(2..=8);
            let a = random_matrix(n, &mut rng);
            let b = random_matrix(n, &mut rng);
            let mut c = product(&a, &b);
            let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
            c.set(i, j, (c.get(i, j) + rng.gen_range(1..P)) % P);
            caught += u32::from(freivalds_check(&a, &b, &c, P, t, &mut rng));
        }
        let rate = f64::from(caught) / f64::from(trials);
        let floor = 1.0 - 0.5f64.powi(t as i32) - 0.03;
        ok &= rate >= floor;
        parts.push(format!("t={t}: {caught}/{trials} detected (floor {floor:.4})"));
    }
    Verdict::new(ok, parts.join("; "))
}

/// What an honest auditor must say about `text` once one of its move
/// payloads is replaced by `tampered`, worked out by replaying the moves
/// through the game loop.
fn expected_after_tamper(inst: &refgame_core::Instance, text_moves: &[(Party, Vec<u8>)], record: (Party, String)) -> bool {
    let of = |p: Party| text_moves.iter().filter(|m| m.0 == p).map(|m| m.1.clone()).collect::<Vec<_>>();
    let mut prover = Scripted::new(of(Party::Prover));
    let mut challenger = Scripted::new(of(Party::Challenger));
    let t = play_game(inst, "oracle", &mut prover, &mut challenger);
    let Status::Decided { winner, reason } = t.status() else {
        unreachable!()
    };
    // oversize moves never get recorded, so count them as played
    let played = t.moves().len() + usize::from(reason.to_string() == "malformed");
    // true means the tamper must be refuted
    (winner, reason.to_string()) != record || played < text_moves.len()
}

pub fn replay(pool: &Pool) -> Verdict {
    let mut confirmed = 0;
    let mut not_confirmed = Vec::new();
    let mut tampers = 0;
    let mut refuted_ok = 0;
    let mut unaudited_ok = 0;
    let mut wrong = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x7a3e);
    for (idx, (inst, t)) in pool.transcripts.iter().enumerate() {
        let text = export(t, inst);
        match verify_text(&text) {
            Ok(AuditOutcome::Confirmed) => confirmed += 1,
            other => not_confirmed.push(format!("#{idx} {other:?}")),
        }
        let Status::Decided { winner, reason } = t.status() else {
            unreachable!()
        };

        // the verdict line itself
        let flipped = text.replace(&format!("verdict|{winner}|"), &format!("verdict|{}|", winner.other()));
        tampers += 1;
        match verify_text(&flipped) {
            Ok(AuditOutcome::Refuted { .. }) => refuted_ok += 1,
            other => wrong.push(format!("#{idx} verdict flip gave {other:?}")),
        }

        // one byte of one move payload
        let moves: Vec<(Party, Vec<u8>)> = t.moves().iter().map(|m| (m.author, m.payload.clone())).collect();
        let candidates: Vec<usize> = (0..moves.len()).filter(|&i| !moves[i].1.is_empty()).collect();
        if candidates.is_empty() {
            continue;
        }
        let mi = candidates[rng.gen_range(0..candidates.len())];
        let bi = rng.gen_range(0..moves[mi].1.len());
        let mut tampered = moves.clone();
        tampered[mi].1[bi] ^= 1 << rng.gen_range(0..8);
        let old_line = format!("{}|{}|{}", t.moves()[mi].round, moves[mi].0, hex::encode(&moves[mi].1));
        let new_line = format!("{}|{}|{}", t.moves()[mi].round, moves[mi].0, hex::encode(&tampered[mi].1));
        let edited = text.replacen(&old_line, &new_line, 1);
        assert_ne!(edited, text);
        let must_refute = expected_after_tamper(inst, &tampered, (winner, reason.to_string()));
        tampers += 1;
        match (verify_text(&edited), must_refute) {
            (Ok(AuditOutcome::Refuted { .. }), true) => refuted_ok += 1,
            (Ok(AuditOutcome::Unaudited), false) => unaudited_ok += 1,
            (other, _) => {
                if wrong.len() < 5 {
                    wrong.push(format!("#{idx} move {mi} byte {bi}: {other:?}, expected refuted={must_refute}"));
                } else {
                    wrong.push(String::new());
                }
            }
        }
    }
    let total = pool.transcripts.len();
    let shown: Vec<&String> = not_confirmed.iter().chain(wrong.iter()).filter(|s| !s.is_empty()).take(5).collect();
    Verdict::new(
        confirmed == total && not_confirmed.is_empty() && wrong.is_empty() && total > 0,
        format!(
            "{confirmed}/{total} engine transcripts confirmed; {tampers} single-byte tampers: \
             {refuted_ok} refuted, {unaudited_ok} unaudited (unread bytes), {} misjudged{}",
            wrong.len(),
            if shown.is_empty() { String::new() } else { format!(" {shown:?}") }
        ),
    )
}
