//! Error injection for corrupt provers.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::AgentError;
use crate::codec::Encoder;
use crate::games::matmul::Matrix;
use crate::games::gcd::Bezout;
use crate::games::opt::OptSolution;
use crate::games::{Task, VerificationGame};
use crate::types::{GameKind, ParseEnumError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorModel {
    FlipEntry,
    DropElement,
    SwapAdjacent,
    CorruptOutputCell,
    InflateQuality,
}

impl ErrorModel {
    pub const ALL: [ErrorModel; 5] = [
        ErrorModel::FlipEntry,
        ErrorModel::DropElement,
        ErrorModel::SwapAdjacent,
        ErrorModel::CorruptOutputCell,
        ErrorModel::InflateQuality,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorModel::FlipEntry => "flip_entry",
            ErrorModel::DropElement => "drop_element",
            ErrorModel::SwapAdjacent => "swap_adjacent",
            ErrorModel::CorruptOutputCell => "corrupt_output_cell",
            ErrorModel::InflateQuality => "inflate_quality",
        }
    }

    pub fn supports(self, game: GameKind) -> bool {
        use ErrorModel::*;
        matches!(
            (game, self),
            (GameKind::Matmul, FlipEntry)
                | (GameKind::Intersect, FlipEntry | DropElement)
                | (GameKind::Sort, FlipEntry | SwapAdjacent)
                | (GameKind::Gcd, FlipEntry)
                | (GameKind::Tm, FlipEntry | CorruptOutputCell)
                | (GameKind::Opt, FlipEntry | DropElement | InflateQuality)
        )
    }

    /// Models usable against `game`, in declaration order.
    pub fn for_game(game: GameKind) -> Vec<ErrorModel> {
        Self::ALL.into_iter().filter(|m| m.supports(game)).collect()
    }

    /// Corrupts the oracle payload `correct` into a well-formed but invalid
    /// solution.
    pub fn apply(self, task: &Task, correct: &[u8], rng: &mut dyn RngCore) -> Result<Vec<u8>, AgentError> {
        if !self.supports(task.kind()) {
            return Err(AgentError::Incompatible {
                model: self,
                game: task.kind(),
            });
        }
        for _ in 0..64 {
            let Some(out) = self.mutate(task, correct, rng)? else {
                break;
            };
            if out != correct && task.instance(&out).is_ok_and(|i| !i.is_valid()) {
                return Ok(out);
            }
        }
        Err(AgentError::NotApplicable {
            model: self,
            game: task.kind(),
        })
    }

    fn mutate(self, task: &Task, correct: &[u8], rng: &mut dyn RngCore) -> Result<Option<Vec<u8>>, AgentError> {
        use ErrorModel::*;
        let u64s = |v: &[u64]| Encoder::new().u64s(v).finish();
        Ok(match (task, self) {
            (Task::Matmul(t), _) => {
                let mut c = Matrix::decode(correct)?;
                let n = c.dim();
                let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
                let v = c.get(i, j);
                c.set(i, j, (v + rng.gen_range(1..t.modulus)) % t.modulus);
                Some(c.encode())
            }
            (Task::Intersect(t), FlipEntry) => {
                let mut c = decode_u64s(correct)?;
                if c.is_empty() || (t.r < 64 && c.len() as u64 >= 1 << t.r) {
                    return Ok(None);
                }
                let j = rng.gen_range(0..c.len());
                let max = if t.r >= 64 { u64::MAX } else { (1 << t.r) - 1 };
                let mut v = rng.gen_range(0..=max);
                while c.contains(&v) {
                    v = if v == max { 0 } else { v + 1 };
                }
                c[j] = v;
                Some(u64s(&c))
            }
            (Task::Intersect(_), _) => {
                let mut c = decode_u64s(correct)?;
                if c.is_empty() {
                    return Ok(None);
                }
                c.remove(rng.gen_range(0..c.len()));
                Some(u64s(&c))
            }
            (Task::Sort(_), FlipEntry) => {
                let mut f = decode_u64s(correct)?;
                let n = f.len() as u64;
                let j = rng.gen_range(0..f.len());
                let old = f[j];
                let mut v = rng.gen_range(1..=n);
                if v == old {
                    v = n + 1;
                }
                f[j] = v;
                Some(u64s(&f))
            }
            (Task::Sort(t), _) => {
                let mut f = decode_u64s(correct)?;
                let key = |x: u64| t.a[x as usize - 1];
                let spots: Vec<usize> = (0..f.len().saturating_sub(1))
                    .filter(|&j| key(f[j]) != key(f[j + 1]))
                    .collect();
                let Some(&j) = spots.choose(rng) else {
                    return Ok(None);
                };
                f.swap(j, j + 1);
                Some(u64s(&f))
            }
            (Task::Gcd(_), _) => {
                let mut v = Bezout::decode(correct)?.to_array();
                let j = rng.gen_range(0..v.len());
                v[j] += if rng.gen_bool(0.5) { 1 } else { -1 };
                Bezout::from_slice(&v).map(|b| b.encode())
            }
            (Task::Tm(t), _) => {
                let mut tape = decode_tape(correct)?;
                let j = rng.gen_range(0..tape.len());
                let k = t.machine.symbols() as u8;
                tape[j] = (tape[j] + rng.gen_range(1..k)) % k;
                Some(Encoder::new().bytes(&tape).finish())
            }
            (Task::Opt(_), _) => {
                let mut s = OptSolution::decode(correct)?;
                match (&mut s, self) {
                    (OptSolution::Classifier { q, .. } | OptSolution::Factorization { q, .. }, InflateQuality) => {
                        *q += rng.gen_range(1..=3);
                    }
                    (OptSolution::Classifier { counters, .. }, FlipEntry) => {
                        let m = rng.gen_range(1..counters.len());
                        counters[m] += 1;
                    }
                    (OptSolution::Factorization { factors, .. }, FlipEntry) => {
                        if factors.is_empty() {
                            return Ok(None);
                        }
                        let j = rng.gen_range(0..factors.len());
                        factors[j] += 1;
                    }
                    (OptSolution::Factorization { factors, .. }, DropElement) => {
                        if factors.is_empty() {
                            return Ok(None);
                        }
                        factors.remove(rng.gen_range(0..factors.len()));
                    }
                    _ => return Ok(None),
                }
                Some(s.encode())
            }
        })
    }
}

fn decode_u64s(bytes: &[u8]) -> Result<Vec<u64>, crate::codec::DecodeError> {
    let mut d = crate::codec::Decoder::new(bytes);
    let v = d.u64s()?;
    d.finish()?;
    Ok(v)
}

fn decode_tape(bytes: &[u8]) -> Result<Vec<u8>, crate::codec::DecodeError> {
    let mut d = crate::codec::Decoder::new(bytes);
    let v = d.bytes()?;
    d.finish()?;
    Ok(v)
}

impl fmt::Display for ErrorModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ErrorModel {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| ParseEnumError {
                what: "error model",
                value: s.to_string(),
            })
    }
}
