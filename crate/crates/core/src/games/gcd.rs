//! Bezout certificate for the greatest common divisor: a three-round game.
//!
//! The claim is a tuple `(c, d, e, d', e')` with `c = d*a + e*b`, `a = d'*c`
//! and `b = e'*c`. Round 1, the challenger posts a small modulus `p` and the
//! residues of all seven numbers, such that some equation fails modulo `p`.
//! Round 2, the prover picks one residue it says is wrong and posts the binary
//! digits of that number together with the running remainders. Round 3, the
//! challenger points at one position where the list is inconsistent.

use rand::{Rng, RngCore};

use super::text::{TaskFormatError, TextReader};
use super::{InstanceError, Judgement, VerificationGame};
use crate::codec::{DecodeError, Decoder, Encoder};
use crate::referee::CostMeter;
use crate::types::{log2_ceil, GameKind, GameSpec, Move, Party, Reason};

pub const GCD_BUDGET: u64 = 32;

/// Names of the seven numbers in residue order.
pub const NUMBER_NAMES: [&str; 7] = ["a", "b", "c", "d", "e", "d'", "e'"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GcdTask {
    pub a: u64,
    pub b: u64,
}

/// `(c, d, e, d', e')`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bezout {
    pub c: i64,
    pub d: i64,
    pub e: i64,
    pub d2: i64,
    pub e2: i64,
}

impl Bezout {
    pub fn to_array(self) -> [i64; 5] {
        [self.c, self.d, self.e, self.d2, self.e2]
    }

    pub fn from_slice(v: &[i64]) -> Option<Self> {
        match *v {
            [c, d, e, d2, e2] => Some(Self { c, d, e, d2, e2 }),
            _ => None,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        Encoder::new().i64s(&self.to_array()).finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut d = Decoder::new(bytes);
        let v = d.i64s()?;
        d.finish()?;
        Self::from_slice(&v).ok_or(DecodeError::Invalid("bezout tuple needs five values"))
    }
}

pub fn decimal_digits(x: u64) -> u32 {
    x.checked_ilog10().map_or(1, |l| l + 1)
}

impl GcdTask {
    pub fn new(a: u64, b: u64) -> Result<Self, InstanceError> {
        if a == 0 || b == 0 {
            return Err(InstanceError::invalid("a and b must be positive"));
        }
        if a.max(b) >= 10u64.pow(18) {
            return Err(InstanceError::invalid("a and b must have at most 18 digits"));
        }
        Ok(Self { a, b })
    }

    /// Number of decimal digits of the larger input.
    pub fn digits(&self) -> u32 {
        decimal_digits(self.a.max(self.b))
    }

    /// Exclusive magnitude bound `10^n` on every claimed number.
    pub fn magnitude_bound(&self) -> u64 {
        10u64.pow(self.digits())
    }

    /// Width of the binary digit lists in a defense.
    pub fn width(&self) -> usize {
        (64 - (self.magnitude_bound() - 1).leading_zeros()) as usize
    }

    /// Exclusive bound on the challenger's modulus: `p` has at most
    /// `floor(2 log10 n) + 2` digits.
    pub fn modulus_bound(&self) -> u64 {
        let n = self.digits() as u64;
        10u64.pow(decimal_digits(n * n) + 1)
    }

    /// Extended Euclid.
    pub fn solve(&self) -> Bezout {
        let (a, b) = (self.a as i64, self.b as i64);
        let (mut r0, mut r1) = (a, b);
        let (mut s0, mut s1) = (1i64, 0i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (s0, s1) = (s1, s0 - q * s1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        Bezout {
            c: r0,
            d: s0,
            e: t0,
            d2: a / r0,
            e2: b / r0,
        }
    }

    pub fn to_text(&self) -> String {
        format!("game gcd\na {}\nb {}\n", self.a, self.b)
    }

    pub(crate) fn from_reader(r: &mut TextReader<'_>) -> Result<Self, TaskFormatError> {
        let a = r.value("a")?;
        let b = r.value("b")?;
        Self::new(a, b).map_err(|e| r.error(e.to_string()))
    }

    pub(crate) fn encode_into(&self, e: &mut Encoder) {
        e.u64(self.a).u64(self.b);
    }

    pub(crate) fn decode_from(d: &mut Decoder<'_>) -> Result<Self, InstanceError> {
        let a = d.u64()?;
        let b = d.u64()?;
        Self::new(a, b)
    }
}

/// Remainder in `0..p`, also for negative `x`.
pub fn residue(x: i128, p: u64) -> u64 {
    x.rem_euclid(p as i128) as u64
}

fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GcdInstance {
    pub task: GcdTask,
    pub claimed: Bezout,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GcdChallenge {
    pub p: u64,
    /// Residues of `a, b, c, d, e, d', e'`.
    pub residues: [u64; 7],
}

impl GcdChallenge {
    pub fn encode(&self) -> Vec<u8> {
        Encoder::new().u64(self.p).u64s(&self.residues).finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut d = Decoder::new(bytes);
        let p = d.u64()?;
        let v = d.u64s()?;
        d.finish()?;
        let residues = v
            .try_into()
            .map_err(|_| DecodeError::Invalid("seven residues expected"))?;
        Ok(Self { p, residues })
    }

    /// Whether one of the three equations fails on these residues.
    fn some_equation_fails(&self) -> bool {
        let p = self.p as u128;
        let [a, b, c, d, e, d2, e2] = self.residues.map(|x| x as u128);
        (d * a + e * b) % p != c || (d2 * c) % p != a || (e2 * c) % p != b
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GcdDefense {
    /// Index into `a, b, c, d, e, d', e'`.
    pub k_choice: u8,
    /// 1 when the number is negative.
    pub sign: u8,
    /// Binary digits of the magnitude, most significant first.
    pub bits: Vec<u64>,
    /// Running remainders: `tilde[m] = (2 tilde[m-1] + bits[m]) % p`.
    pub tilde: Vec<u64>,
}

impl GcdDefense {
    pub fn encode(&self) -> Vec<u8> {
        Encoder::new()
            .u8(self.k_choice)
            .u8(self.sign)
            .u64s(&self.bits)
            .u64s(&self.tilde)
            .finish()
    }

    pub fn decode(bytes: &[u8], width: usize) -> Result<Self, DecodeError> {
        let mut d = Decoder::new(bytes);
        let k_choice = d.u8()?;
        let sign = d.u8()?;
        let bits = d.u64s()?;
        let tilde = d.u64s()?;
        d.finish()?;
        if bits.len() != width || tilde.len() != width {
            return Err(DecodeError::Invalid("digit list width"));
        }
        Ok(Self {
            k_choice,
            sign,
            bits,
            tilde,
        })
    }

    /// The residue this defense asserts, sign applied.
    fn final_residue(&self, p: u64) -> u64 {
        let last = *self.tilde.last().expect("width >= 1");
        if self.sign == 1 {
            (p - last % p) % p
        } else {
            last
        }
    }
}

pub fn encode_pinpoint(m: u32) -> Vec<u8> {
    Encoder::new().u32(m).finish()
}

pub fn decode_pinpoint(bytes: &[u8]) -> Result<u32, DecodeError> {
    let mut d = Decoder::new(bytes);
    let m = d.u32()?;
    d.finish()?;
    Ok(m)
}

impl GcdInstance {
    pub fn new(task: GcdTask, claimed: Bezout) -> Result<Self, InstanceError> {
        let bound = task.magnitude_bound();
        if claimed.to_array().iter().any(|x| x.unsigned_abs() >= bound) {
            return Err(InstanceError::invalid("claimed value exceeds the digit bound"));
        }
        Ok(Self { task, claimed })
    }

    /// The seven public numbers in residue order.
    pub fn numbers(&self) -> [i128; 7] {
        let Bezout { c, d, e, d2, e2 } = self.claimed;
        [
            self.task.a as i128,
            self.task.b as i128,
            c as i128,
            d as i128,
            e as i128,
            d2 as i128,
            e2 as i128,
        ]
    }

    pub fn true_residues(&self, p: u64) -> [u64; 7] {
        self.numbers().map(|x| residue(x, p))
    }

    fn width(&self) -> usize {
        self.task.width()
    }

    /// Bit `m` (0-based from the most significant end) of `|x|` at width `W`.
    fn magnitude_bit(&self, x: i128, m: usize) -> u64 {
        ((x.unsigned_abs() >> (self.width() - 1 - m)) & 1) as u64
    }

    /// Honest digit list and remainders for number `k`.
    pub fn true_defense(&self, k: usize, p: u64) -> GcdDefense {
        let x = self.numbers()[k];
        let bits: Vec<u64> = (0..self.width()).map(|m| self.magnitude_bit(x, m)).collect();
        let mut tilde = Vec::with_capacity(bits.len());
        let mut acc = 0u64;
        for &bit in &bits {
            acc = ((2 * acc as u128 + bit as u128) % p as u128) as u64;
            tilde.push(acc);
        }
        GcdDefense {
            k_choice: k as u8,
            sign: (x < 0) as u8,
            bits,
            tilde,
        }
    }

    /// Whether a round-3 complaint at position `m` is justified.
    fn complaint_holds(&self, p: u64, def: &GcdDefense, m: usize, meter: &mut CostMeter) -> bool {
        let x = self.numbers()[def.k_choice as usize];
        meter.charge(3);
        let bit = def.bits[m];
        if bit > 1 || bit != self.magnitude_bit(x, m) {
            return true;
        }
        meter.charge(1);
        if def.tilde[m] >= p {
            return true;
        }
        meter.charge(4);
        let expected = if m == 0 {
            bit % p
        } else {
            ((2 * def.tilde[m - 1] as u128 + bit as u128) % p as u128) as u64
        };
        def.tilde[m] != expected
    }

    fn least_exposing_prime(&self) -> Option<GcdChallenge> {
        (2..self.task.modulus_bound())
            .filter(|&p| is_prime(p))
            .map(|p| GcdChallenge {
                p,
                residues: self.true_residues(p),
            })
            .find(|ch| ch.some_equation_fails())
    }
}

impl VerificationGame for GcdInstance {
    fn kind(&self) -> GameKind {
        GameKind::Gcd
    }

    fn spec(&self) -> GameSpec {
        let n = self.task.digits() as u64;
        GameSpec::new(
            GameKind::Gcd,
            n,
            3,
            16 * self.width() + 64,
            GCD_BUDGET * log2_ceil(n),
        )
        .expect("positive bounds")
    }

    fn judge(&self, moves: &[Move], meter: &mut CostMeter) -> Judgement {
        let ch = match GcdChallenge::decode(&moves[0].payload) {
            Ok(c) => c,
            Err(_) => return Judgement::malformed(Party::Challenger),
        };
        if moves.len() == 1 {
            meter.charge(2);
            if !(2..self.task.modulus_bound()).contains(&ch.p) {
                return Judgement::win(Party::Prover, Reason::InvalidChallenge);
            }
            meter.charge(7);
            if ch.residues.iter().any(|&r| r >= ch.p) {
                return Judgement::win(Party::Prover, Reason::InvalidChallenge);
            }
            meter.charge(12);
            return if ch.some_equation_fails() {
                Judgement::proceed()
            } else {
                Judgement::win(Party::Prover, Reason::InvalidChallenge)
            };
        }
        let def = match GcdDefense::decode(&moves[1].payload, self.width()) {
            Ok(d) => d,
            Err(_) => return Judgement::malformed(Party::Prover),
        };
        if moves.len() == 2 {
            meter.charge(2);
            let k = def.k_choice as usize;
            if k >= 7 || def.sign > 1 {
                return Judgement::win(Party::Challenger, Reason::DefenseFailed);
            }
            meter.charge(2);
            if def.sign != (self.numbers()[k] < 0) as u8 {
                return Judgement::win(Party::Challenger, Reason::DefenseFailed);
            }
            meter.charge(4);
            if *def.tilde.last().expect("width >= 1") >= ch.p
                || def.final_residue(ch.p) == ch.residues[k]
            {
                return Judgement::win(Party::Challenger, Reason::DefenseFailed);
            }
            return Judgement::proceed();
        }
        if moves.len() != 3 {
            return Judgement::malformed(moves.last().expect("non-empty").author);
        }
        let m = match decode_pinpoint(&moves[2].payload) {
            Ok(m) => m as usize,
            Err(_) => return Judgement::malformed(Party::Challenger),
        };
        meter.charge(1);
        if m >= self.width() {
            return Judgement::win(Party::Prover, Reason::InvalidChallenge);
        }
        if self.complaint_holds(ch.p, &def, m, meter) {
            Judgement::win(Party::Challenger, Reason::ChallengeUpheld)
        } else {
            Judgement::win(Party::Prover, Reason::InvalidChallenge)
        }
    }

    fn honest_move(&self, moves: &[Move], role: Party) -> Option<Vec<u8>> {
        match (moves.len(), role) {
            (0, Party::Challenger) => self.least_exposing_prime().map(|c| c.encode()),
            (1, Party::Prover) => {
                let ch = GcdChallenge::decode(&moves[0].payload).ok()?;
                if ch.p < 2 {
                    return None;
                }
                let truth = self.true_residues(ch.p);
                let k = (0..7).find(|&k| truth[k] != ch.residues[k])?;
                Some(self.true_defense(k, ch.p).encode())
            }
            (2, Party::Challenger) => {
                let ch = GcdChallenge::decode(&moves[0].payload).ok()?;
                let def = GcdDefense::decode(&moves[1].payload, self.width()).ok()?;
                if def.k_choice >= 7 {
                    return None;
                }
                let mut scratch = CostMeter::new();
                (0..self.width())
                    .find(|&m| self.complaint_holds(ch.p, &def, m, &mut scratch))
                    .map(|m| encode_pinpoint(m as u32))
            }
            _ => None,
        }
    }

    fn greedy_move(&self, moves: &[Move], role: Party) -> Option<Vec<u8>> {
        if let Some(m) = self.honest_move(moves, role) {
            return Some(m);
        }
        match (moves.len(), role) {
            (1, Party::Prover) => {
                // the challenger told the truth: forge the last remainder so
                // the asserted residue differs, and hope it goes unnoticed
                let ch = GcdChallenge::decode(&moves[0].payload).ok()?;
                let p = ch.p;
                let mut def = self.true_defense(2, p);
                let last = def.tilde.last_mut().expect("width >= 1");
                *last = (*last + 1) % p;
                Some(def.encode())
            }
            (2, Party::Challenger) => Some(encode_pinpoint(0)),
            _ => None,
        }
    }

    fn fabricated_challenge(&self, rng: &mut dyn RngCore) -> Vec<u8> {
        let p = loop {
            let p = rng.gen_range(2..self.task.modulus_bound());
            if is_prime(p) {
                break p;
            }
        };
        let mut residues = self.true_residues(p);
        let k = rng.gen_range(2..7);
        residues[k] = (residues[k] + 1) % p;
        GcdChallenge { p, residues }.encode()
    }

    fn is_valid(&self) -> bool {
        let [a, b, c, d, e, d2, e2] = self.numbers();
        c == d * a + e * b && a == d2 * c && b == e2 * c
    }
}
