//! Matrix product over a prime field: a two-round game.
//!
//! Round 1, the challenger names a coordinate `(i, j)` and posts the partial
//! sums `d_0..d_n` of row `i` times column `j`. The referee checks the
//! coordinate, `d_0 = 0` and `d_n != c_ij`. Round 2, the prover names an
//! index `k` where `d_k != d_{k-1} + a_ik * b_kj`.

use rand::{Rng, RngCore};

use super::text::{join, TaskFormatError, TextReader};
use super::{InstanceError, Judgement, VerificationGame};
use crate::codec::{DecodeError, Decoder, Encoder};
use crate::referee::CostMeter;
use crate::types::{log2_ceil, GameKind, GameSpec, Move, Party, Reason};

/// Budget constant: `h(n) = MATMUL_BUDGET * log n`.
pub const MATMUL_BUDGET: u64 = 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    n: usize,
    entries: Vec<u64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: vec![0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<u64>>) -> Result<Self, InstanceError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(InstanceError::invalid("matrix is not square"));
        }
        Ok(Self {
            n,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Entry at 0-based `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        self.entries[i * self.n + j] = v;
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u64]> {
        self.entries.chunks(self.n.max(1)).take(self.n)
    }

    pub fn mul_mod(&self, other: &Matrix, p: u64) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0u64;
                for k in 0..n {
                    acc = (acc + mul_mod(self.get(i, k), other.get(k, j), p)) % p;
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    fn encode_into(&self, e: &mut Encoder) {
        e.u32(self.n as u32).u64s(&self.entries);
    }

    fn decode_from(d: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        let n = d.u32()? as usize;
        let entries = d.u64s()?;
        if entries.len() != n * n {
            return Err(DecodeError::Invalid("matrix entry count"));
        }
        Ok(Self { n, entries })
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        self.encode_into(&mut e);
        e.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut d = Decoder::new(bytes);
        let m = Self::decode_from(&mut d)?;
        d.finish()?;
        Ok(m)
    }

    fn all_below(&self, p: u64) -> bool {
        self.entries.iter().all(|&x| x < p)
    }
}

pub(crate) fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatmulTask {
    pub modulus: u64,
    pub a: Matrix,
    pub b: Matrix,
}

impl MatmulTask {
    pub fn new(modulus: u64, a: Matrix, b: Matrix) -> Result<Self, InstanceError> {
        if modulus < 2 {
            return Err(InstanceError::invalid("field modulus must be at least 2"));
        }
        if a.dim() == 0 || a.dim() != b.dim() {
            return Err(InstanceError::invalid("A and B must be non-empty and of equal size"));
        }
        if !a.all_below(modulus) || !b.all_below(modulus) {
            return Err(InstanceError::invalid("matrix entry outside the field"));
        }
        Ok(Self { modulus, a, b })
    }

    pub fn n(&self) -> usize {
        self.a.dim()
    }

    pub fn solve(&self) -> Matrix {
        self.a.mul_mod(&self.b, self.modulus)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("game matmul\nmodulus {}\nn {}\na\n", self.modulus, self.n());
        for row in self.a.rows() {
            out.push_str(&join(row));
            out.push('\n');
        }
        out.push_str("b\n");
        for row in self.b.rows() {
            out.push_str(&join(row));
            out.push('\n');
        }
        out
    }

    pub(crate) fn from_reader(r: &mut TextReader<'_>) -> Result<Self, TaskFormatError> {
        let modulus: u64 = r.value("modulus")?;
        let n: usize = r.value("n")?;
        let read_matrix = |r: &mut TextReader<'_>, key: &str| {
            r.keyed(key)?;
            let rows = (0..n).map(|_| r.row::<u64>()).collect::<Result<Vec<_>, _>>()?;
            Matrix::from_rows(rows).map_err(|e| r.error(e.to_string()))
        };
        let a = read_matrix(r, "a")?;
        let b = read_matrix(r, "b")?;
        Self::new(modulus, a, b).map_err(|e| r.error(e.to_string()))
    }

    pub(crate) fn encode_into(&self, e: &mut Encoder) {
        e.u64(self.modulus);
        self.a.encode_into(e);
        self.b.encode_into(e);
    }

    pub(crate) fn decode_from(d: &mut Decoder<'_>) -> Result<Self, InstanceError> {
        let modulus = d.u64()?;
        let a = Matrix::decode_from(d)?;
        let b = Matrix::decode_from(d)?;
        Self::new(modulus, a, b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatmulInstance {
    pub task: MatmulTask,
    pub claimed: Matrix,
}

impl MatmulInstance {
    pub fn new(task: MatmulTask, claimed: Matrix) -> Result<Self, InstanceError> {
        if claimed.dim() != task.n() {
            return Err(InstanceError::invalid("claimed product has the wrong size"));
        }
        if !claimed.all_below(task.modulus) {
            return Err(InstanceError::invalid("claimed entry outside the field"));
        }
        Ok(Self { task, claimed })
    }

    fn n(&self) -> usize {
        self.task.n()
    }

    fn p(&self) -> u64 {
        self.task.modulus
    }

    /// True partial sums `d_0..d_n` for 0-based `(i, j)`.
    pub fn partial_sums(&self, i: usize, j: usize) -> Vec<u64> {
        let p = self.p();
        let mut d = vec![0u64];
        for k in 0..self.n() {
            let prev = *d.last().expect("non-empty");
            d.push((prev + mul_mod(self.task.a.get(i, k), self.task.b.get(k, j), p)) % p);
        }
        d
    }

    /// Whether `d_k` (1-based `k`) follows from `d_{k-1}` in the field.
    fn step_consistent(&self, ch: &MatmulChallenge, k: usize) -> bool {
        let p = self.p();
        let (i, j) = (ch.i as usize - 1, ch.j as usize - 1);
        let (prev, cur) = (ch.d[k - 1], ch.d[k]);
        prev < p
            && cur < p
            && cur == (prev + mul_mod(self.task.a.get(i, k - 1), self.task.b.get(k - 1, j), p)) % p
    }

    fn least_wrong_entry(&self) -> Option<(usize, usize)> {
        let truth = self.task.solve();
        (0..self.n())
            .flat_map(|i| (0..self.n()).map(move |j| (i, j)))
            .find(|&(i, j)| truth.get(i, j) != self.claimed.get(i, j))
    }
}

/// Round-1 challenge: 1-based coordinates and partial sums.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatmulChallenge {
    pub i: u32,
    pub j: u32,
    pub d: Vec<u64>,
}

impl MatmulChallenge {
    pub fn encode(&self) -> Vec<u8> {
        Encoder::new().u32(self.i).u32(self.j).u64s(&self.d).finish()
    }

    /// Decodes a challenge for dimension `n`; the sequence must hold `n + 1`
    /// values.
    pub fn decode(bytes: &[u8], n: usize) -> Result<Self, DecodeError> {
        let mut dec = Decoder::new(bytes);
        let i = dec.u32()?;
        let j = dec.u32()?;
        let d = dec.u64s()?;
        dec.finish()?;
        if d.len() != n + 1 {
            return Err(DecodeError::Invalid("partial sum count"));
        }
        Ok(Self { i, j, d })
    }
}

/// Round-2 defense: the 1-based index `k` of an inconsistent partial sum.
pub fn encode_defense(k: u32) -> Vec<u8> {
    Encoder::new().u32(k).finish()
}

pub fn decode_defense(bytes: &[u8]) -> Result<u32, DecodeError> {
    let mut d = Decoder::new(bytes);
    let k = d.u32()?;
    d.finish()?;
    Ok(k)
}

impl VerificationGame for MatmulInstance {
    fn kind(&self) -> GameKind {
        GameKind::Matmul
    }

    fn spec(&self) -> GameSpec {
        let n = self.n() as u64;
        GameSpec::new(
            GameKind::Matmul,
            n,
            2,
            8 * (self.n() + 1) + 12,
            MATMUL_BUDGET * log2_ceil(n),
        )
        .expect("positive bounds")
    }

    fn judge(&self, moves: &[Move], meter: &mut CostMeter) -> Judgement {
        let n = self.n();
        let challenge = match MatmulChallenge::decode(&moves[0].payload, n) {
            Ok(c) => c,
            Err(_) => return Judgement::malformed(Party::Challenger),
        };
        match moves.len() {
            1 => {
                meter.charge(4);
                let in_range = |x: u32| (1..=n as u32).contains(&x);
                if !in_range(challenge.i) || !in_range(challenge.j) {
                    return Judgement::win(Party::Prover, Reason::InvalidChallenge);
                }
                meter.charge(1);
                if challenge.d[0] != 0 {
                    return Judgement::win(Party::Prover, Reason::InvalidChallenge);
                }
                meter.charge(2);
                let c = self
                    .claimed
                    .get(challenge.i as usize - 1, challenge.j as usize - 1);
                if challenge.d[n] == c {
                    return Judgement::win(Party::Prover, Reason::InvalidChallenge);
                }
                Judgement::proceed()
            }
            2 => {
                let k = match decode_defense(&moves[1].payload) {
                    Ok(k) => k as usize,
                    Err(_) => return Judgement::malformed(Party::Prover),
                };
                meter.charge(2);
                if !(1..=n).contains(&k) {
                    return Judgement::win(Party::Challenger, Reason::DefenseFailed);
                }
                // two reads, one product, one sum, one reduction, one comparison
                meter.charge(6);
                if self.step_consistent(&challenge, k) {
                    Judgement::win(Party::Challenger, Reason::DefenseFailed)
                } else {
                    Judgement::win(Party::Prover, Reason::DefenseUpheld)
                }
            }
            _ => Judgement::malformed(moves.last().expect("non-empty").author),
        }
    }

    fn honest_move(&self, moves: &[Move], role: Party) -> Option<Vec<u8>> {
        match (moves.len(), role) {
            (0, Party::Challenger) => {
                let (i, j) = self.least_wrong_entry()?;
                Some(
                    MatmulChallenge {
                        i: i as u32 + 1,
                        j: j as u32 + 1,
                        d: self.partial_sums(i, j),
                    }
                    .encode(),
                )
            }
            (1, Party::Prover) => {
                let ch = MatmulChallenge::decode(&moves[0].payload, self.n()).ok()?;
                if !(1..=self.n() as u32).contains(&ch.i) || !(1..=self.n() as u32).contains(&ch.j)
                {
                    return None;
                }
                (1..=self.n())
                    .find(|&k| !self.step_consistent(&ch, k))
                    .map(|k| encode_defense(k as u32))
            }
            _ => None,
        }
    }

    fn greedy_move(&self, moves: &[Move], role: Party) -> Option<Vec<u8>> {
        self.honest_move(moves, role).or(match (moves.len(), role) {
            (1, Party::Prover) => Some(encode_defense(1)),
            _ => None,
        })
    }

    fn fabricated_challenge(&self, rng: &mut dyn RngCore) -> Vec<u8> {
        let i = rng.gen_range(0..self.n());
        let j = rng.gen_range(0..self.n());
        let mut d = self.partial_sums(i, j);
        d[self.n()] = (self.claimed.get(i, j) + 1) % self.p();
        MatmulChallenge {
            i: i as u32 + 1,
            j: j as u32 + 1,
            d,
        }
        .encode()
    }

    fn is_valid(&self) -> bool {
        self.task.solve() == self.claimed
    }
}
