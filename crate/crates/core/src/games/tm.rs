//! Generic bisection game over a deterministic single-tape Turing machine.
//!
//! The machine runs for exactly `T = n^k` steps on a tape of `S = n^h`
//! cells; a missing transition halts it and the configuration stays put from
//! then on, and the head is clamped at both tape ends. The claimed output is
//! the full final tape.
//!
//! Each level the challenger posts configurations at evenly spaced times of
//! the disputed interval (`i` segments). The prover either points at a
//! single field that breaks a copy rule, or names the segment it disputes;
//! the next level bisects that segment. Once segments are one step long the
//! prover names a field of a single step and the referee replays that one
//! transition.

use std::sync::OnceLock;

use rand::{Rng, RngCore};

use super::text::{TaskFormatError, TextReader};
use super::{InstanceError, Judgement, VerificationGame};
use crate::codec::{DecodeError, Decoder, Encoder};
use crate::referee::CostMeter;
use crate::types::{log2_ceil, GameKind, GameSpec, Move, Party, Reason};

pub const TM_BUDGET: u64 = 16;

/// Cap on `T * S` so traces stay desk-sized.
const MAX_TRACE_CELLS: u64 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shift {
    Left,
    Right,
    Stay,
}

impl Shift {
    fn code(self) -> char {
        match self {
            Shift::Left => 'L',
            Shift::Right => 'R',
            Shift::Stay => 'S',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Transition {
    pub next: u32,
    pub write: u8,
    pub shift: Shift,
}

/// Symbol 0 is the blank.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Machine {
    states: u32,
    alphabet: Vec<char>,
    start: u32,
    table: Vec<Option<Transition>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Config {
    pub state: u32,
    pub head: u32,
    pub tape: Vec<u8>,
}

impl Machine {
    pub fn new(states: u32, alphabet: Vec<char>, start: u32) -> Result<Self, InstanceError> {
        if states == 0 || start >= states {
            return Err(InstanceError::invalid("start state out of range"));
        }
        if alphabet.is_empty() || alphabet.len() > 256 {
            return Err(InstanceError::invalid("alphabet must have 1..=256 symbols"));
        }
        let mut seen = alphabet.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != alphabet.len() || alphabet.iter().any(|c| c.is_whitespace()) {
            return Err(InstanceError::invalid("alphabet symbols must be distinct and visible"));
        }
        let table = vec![None; states as usize * alphabet.len()];
        Ok(Self {
            states,
            alphabet,
            start,
            table,
        })
    }

    pub fn set(&mut self, state: u32, read: u8, t: Transition) -> Result<(), InstanceError> {
        if state >= self.states || t.next >= self.states {
            return Err(InstanceError::invalid("transition state out of range"));
        }
        if read as usize >= self.alphabet.len() || t.write as usize >= self.alphabet.len() {
            return Err(InstanceError::invalid("transition symbol out of range"));
        }
        let idx = self.index(state, read);
        if self.table[idx].is_some() {
            return Err(InstanceError::invalid("transition defined twice"));
        }
        self.table[idx] = Some(t);
        Ok(())
    }

    fn index(&self, state: u32, read: u8) -> usize {
        state as usize * self.alphabet.len() + read as usize
    }

    pub fn states(&self) -> u32 {
        self.states
    }

    pub fn symbols(&self) -> usize {
        self.alphabet.len()
    }

    pub fn start(&self) -> u32 {
        self.start
    }

    pub fn lookup(&self, state: u32, read: u8) -> Option<Transition> {
        self.table[self.index(state, read)]
    }

    pub fn symbol(&self, c: char) -> Option<u8> {
        self.alphabet.iter().position(|&a| a == c).map(|i| i as u8)
    }

    pub fn render(&self, tape: &[u8]) -> String {
        let end = tape.iter().rposition(|&s| s != 0).map_or(0, |i| i + 1);
        tape[..end].iter().map(|&s| self.alphabet[s as usize]).collect()
    }

    pub fn parse_tape(&self, s: &str) -> Option<Vec<u8>> {
        s.chars().map(|c| self.symbol(c)).collect()
    }

    pub fn step(&self, c: &Config) -> Config {
        let Some(t) = self.lookup(c.state, c.tape[c.head as usize]) else {
            return c.clone();
        };
        let mut tape = c.tape.clone();
        tape[c.head as usize] = t.write;
        Config {
            state: t.next,
            head: shifted(c.head, t.shift, tape.len()),
            tape,
        }
    }

    /// Unary doubler over `_1XY`: `1^m` becomes `1^(2m)`.
    pub fn doubler() -> Self {
        let mut m = Self::new(6, "_1XY".chars().collect(), 0).expect("valid alphabet");
        let rules = [
            (0, '1', 1, 'X', Shift::Right),
            (0, 'Y', 3, '1', Shift::Right),
            (1, '1', 1, '1', Shift::Right),
            (1, 'Y', 1, 'Y', Shift::Right),
            (1, '_', 2, 'Y', Shift::Left),
            (2, '1', 2, '1', Shift::Left),
            (2, 'Y', 2, 'Y', Shift::Left),
            (2, 'X', 0, 'X', Shift::Right),
            (3, 'Y', 3, '1', Shift::Right),
            (3, '_', 5, '_', Shift::Left),
            (5, '1', 5, '1', Shift::Left),
            (5, 'X', 4, '1', Shift::Left),
            (4, 'X', 4, '1', Shift::Left),
        ];
        for (q, read, next, write, shift) in rules {
            let read = m.symbol(read).expect("in alphabet");
            let write = m.symbol(write).expect("in alphabet");
            m.set(q, read, Transition { next, write, shift }).expect("valid rule");
        }
        m
    }

    /// A machine with a random partial transition table.
    pub fn random(rng: &mut dyn RngCore, states: u32, symbols: usize) -> Self {
        let alphabet: Vec<char> = "_abcdefghijklmnop".chars().take(symbols.max(2)).collect();
        let mut m = Self::new(states.max(1), alphabet, 0).expect("valid alphabet");
        for q in 0..m.states {
            for s in 0..m.symbols() as u8 {
                if rng.gen_bool(0.85) {
                    let t = Transition {
                        next: rng.gen_range(0..m.states),
                        write: rng.gen_range(0..m.symbols() as u8),
                        shift: [Shift::Left, Shift::Right, Shift::Stay][rng.gen_range(0..3)],
                    };
                    m.set(q, s, t).expect("in range");
                }
            }
        }
        m
    }

    fn encode_into(&self, e: &mut Encoder) {
        let alphabet: String = self.alphabet.iter().collect();
        e.u32(self.states).bytes(alphabet.as_bytes()).u32(self.start);
        for t in &self.table {
            match t {
                None => e.u8(0),
                Some(t) => e.u8(1).u32(t.next).u8(t.write).u8(match t.shift {
                    Shift::Left => 0,
                    Shift::Right => 1,
                    Shift::Stay => 2,
                }),
            };
        }
    }

    fn decode_from(d: &mut Decoder<'_>) -> Result<Self, InstanceError> {
        let states = d.u32()?;
        let alphabet = String::from_utf8(d.bytes()?)
            .map_err(|_| InstanceError::invalid("alphabet is not utf-8"))?;
        let start = d.u32()?;
        let mut m = Self::new(states, alphabet.chars().collect(), start)?;
        for q in 0..states {
            for s in 0..m.symbols() as u8 {
                if d.bool()? {
                    let next = d.u32()?;
                    let write = d.u8()?;
                    let shift = match d.u8()? {
                        0 => Shift::Left,
                        1 => Shift::Right,
                        2 => Shift::Stay,
                        t => return Err(DecodeError::Tag(t).into()),
                    };
                    m.set(q, s, Transition { next, write, shift })?;
                }
            }
        }
        Ok(m)
    }
}

fn shifted(head: u32, shift: Shift, cells: usize) -> u32 {
    match shift {
        Shift::Left => head.saturating_sub(1),
        Shift::Right => (head + 1).min(cells as u32 - 1),
        Shift::Stay => head,
    }
}

/// Smallest `x` with `x^den >= n^num`, i.e. `ceil(n^(num/den))`.
fn ceil_root_power(n: u64, num: u32, den: u32) -> u64 {
    let target = (n as u128).pow(num);
    let mut x = 1u64;
    while (x as u128).pow(den) < target {
        x += 1;
    }
    x
}

/// Configuration times of one level on `[t0, t1]`: `t0`, then steps of
/// `ceil((t1 - t0) / i)`, ending at `t1`.
pub fn schedule(t0: u64, t1: u64, i: u64) -> Vec<u64> {
    let len = (t1 - t0).div_ceil(i).max(1);
    let mut times: Vec<u64> = (t0..t1).step_by(len as usize).collect();
    times.push(t1);
    times
}

/// Number of ladders needed until every segment is a single step.
pub fn level_count(t: u64, i: u64) -> u32 {
    let mut span = t;
    let mut levels = 1;
    while span.div_ceil(i) > 1 {
        span = span.div_ceil(i);
        levels += 1;
    }
    levels
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TmTask {
    pub machine: Machine,
    pub input: Vec<u8>,
    pub n: u64,
    pub k: u32,
    pub h: u32,
    pub eps_num: u32,
    pub eps_den: u32,
}

impl TmTask {
    pub fn new(
        machine: Machine,
        input: Vec<u8>,
        n: u64,
        k: u32,
        h: u32,
        (eps_num, eps_den): (u32, u32),
    ) -> Result<Self, InstanceError> {
        if n < 2 || k == 0 || h == 0 || eps_num == 0 || eps_den == 0 {
            return Err(InstanceError::invalid("n >= 2 and k, h, epsilon must be positive"));
        }
        let t = n.checked_pow(k);
        let s = n.checked_pow(h);
        match (t, s) {
            (Some(t), Some(s)) if t.saturating_mul(s) <= MAX_TRACE_CELLS => {}
            _ => return Err(InstanceError::invalid("time and space bounds too large")),
        }
        if input.len() as u64 > n.pow(h) {
            return Err(InstanceError::invalid("input longer than the space bound"));
        }
        if input.iter().any(|&s| s as usize >= machine.symbols()) {
            return Err(InstanceError::invalid("input symbol outside the alphabet"));
        }
        if (n as u128).checked_pow(eps_num).is_none() || eps_num > 64 * eps_den {
            return Err(InstanceError::invalid("epsilon too large"));
        }
        Ok(Self {
            machine,
            input,
            n,
            k,
            h,
            eps_num,
            eps_den,
        })
    }

    pub fn time_bound(&self) -> u64 {
        self.n.pow(self.k)
    }

    pub fn space_bound(&self) -> usize {
        self.n.pow(self.h) as usize
    }

    /// Segments per level: `max(2, ceil(n^epsilon))`.
    pub fn spread(&self) -> u64 {
        ceil_root_power(self.n, self.eps_num, self.eps_den).max(2)
    }

    pub fn levels(&self) -> u32 {
        level_count(self.time_bound(), self.spread())
    }

    pub fn initial(&self) -> Config {
        let mut tape = self.input.clone();
        tape.resize(self.space_bound(), 0);
        Config {
            state: self.machine.start(),
            head: 0,
            tape,
        }
    }

    /// All configurations at times `0..=T`.
    pub fn trace(&self) -> Vec<Config> {
        let mut out = Vec::with_capacity(self.time_bound() as usize + 1);
        out.push(self.initial());
        for _ in 0..self.time_bound() {
            let next = self.machine.step(out.last().expect("non-empty"));
            out.push(next);
        }
        out
    }

    /// The final tape.
    pub fn solve(&self) -> Vec<u8> {
        self.trace().pop().expect("non-empty").tape
    }

    pub fn to_text(&self) -> String {
        let m = &self.machine;
        let mut out = format!(
            "game tm\nalphabet {}\nstates {}\nstart {}\nn {}\nk {}\nh {}\nepsilon {} {}\ninput {}\n",
            m.alphabet.iter().collect::<String>(),
            m.states,
            m.start,
            self.n,
            self.k,
            self.h,
            self.eps_num,
            self.eps_den,
            m.render(&self.input),
        );
        for q in 0..m.states {
            for s in 0..m.symbols() as u8 {
                if let Some(t) = m.lookup(q, s) {
                    out.push_str(&format!(
                        "rule {q} {} {} {} {}\n",
                        m.alphabet[s as usize],
                        t.next,
                        m.alphabet[t.write as usize],
                        t.shift.code()
                    ));
                }
            }
        }
        out
    }

    pub(crate) fn from_reader(r: &mut TextReader<'_>) -> Result<Self, TaskFormatError> {
        let alphabet: String = r.value("alphabet")?;
        let states = r.value("states")?;
        let start = r.value("start")?;
        let mut machine =
            Machine::new(states, alphabet.chars().collect(), start).map_err(|e| r.error(e.to_string()))?;
        let n = r.value("n")?;
        let k = r.value("k")?;
        let h = r.value("h")?;
        let eps: Vec<u32> = r.values("epsilon")?;
        let [eps_num, eps_den] = eps[..] else {
            return Err(r.error("`epsilon` takes a numerator and a denominator"));
        };
        let input_tokens = r.keyed("input")?;
        let input = match input_tokens[..] {
            [] => Vec::new(),
            [s] => machine
                .parse_tape(s)
                .ok_or_else(|| r.error("input symbol outside the alphabet"))?,
            _ => return Err(r.error("`input` takes one tape string")),
        };
        while r.peek_key() == Some("rule") {
            let tokens = r.keyed("rule")?;
            let [q, read, next, write, shift] = tokens[..] else {
                return Err(r.error("rule needs: state read next write shift"));
            };
            let sym = |s: &str| {
                let mut cs = s.chars();
                match (cs.next(), cs.next()) {
                    (Some(c), None) => machine.symbol(c),
                    _ => None,
                }
            };
            let read = sym(read).ok_or_else(|| r.error("unknown read symbol"))?;
            let write = sym(write).ok_or_else(|| r.error("unknown write symbol"))?;
            let q: u32 = q.parse().map_err(|_| r.error("bad state"))?;
            let next: u32 = next.parse().map_err(|_| r.error("bad next state"))?;
            let shift = match shift {
                "L" => Shift::Left,
                "R" => Shift::Right,
                "S" => Shift::Stay,
                _ => return Err(r.error("shift must be L, R or S")),
            };
            machine
                .set(q, read, Transition { next, write, shift })
                .map_err(|e| r.error(e.to_string()))?;
        }
        Self::new(machine, input, n, k, h, (eps_num, eps_den)).map_err(|e| r.error(e.to_string()))
    }

    pub(crate) fn encode_into(&self, e: &mut Encoder) {
        self.machine.encode_into(e);
        e.bytes(&self.input)
            .u64(self.n)
            .u32(self.k)
            .u32(self.h)
            .u32(self.eps_num)
            .u32(self.eps_den);
    }

    pub(crate) fn decode_from(d: &mut Decoder<'_>) -> Result<Self, InstanceError> {
        let machine = Machine::decode_from(d)?;
        let input = d.bytes()?;
        let n = d.u64()?;
        let k = d.u32()?;
        let h = d.u32()?;
        let eps_num = d.u32()?;
        let eps_den = d.u32()?;
        Self::new(machine, input, n, k, h, (eps_num, eps_den))
    }
}

/// One addressable field of a configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    State,
    Head,
    Cell(u32),
}

impl Field {
    fn encode_into(self, e: &mut Encoder) {
        match self {
            Field::State => e.u8(0).u32(0),
            Field::Head => e.u8(1).u32(0),
            Field::Cell(c) => e.u8(2).u32(c),
        };
    }

    fn decode_from(d: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        let kind = d.u8()?;
        let idx = d.u32()?;
        match (kind, idx) {
            (0, 0) => Ok(Field::State),
            (1, 0) => Ok(Field::Head),
            (2, c) => Ok(Field::Cell(c)),
            (0 | 1, _) => Err(DecodeError::Invalid("field index must be zero")),
            (t, _) => Err(DecodeError::Tag(t)),
        }
    }

    /// The field's value, or `None` for a cell outside the tape.
    fn read(self, c: &Config) -> Option<u32> {
        match self {
            Field::State => Some(c.state),
            Field::Head => Some(c.head),
            Field::Cell(i) => c.tape.get(i as usize).map(|&s| s as u32),
        }
    }
}

/// Fields in scan order: state, head, then cells.
fn first_difference(x: &Config, y: &Config) -> Option<Field> {
    if x.state != y.state {
        return Some(Field::State);
    }
    if x.head != y.head {
        return Some(Field::Head);
    }
    x.tape
        .iter()
        .zip(&y.tape)
        .position(|(a, b)| a != b)
        .map(|i| Field::Cell(i as u32))
}

/// Prover complaints; segment indices are 1-based (`j` names the segment
/// between configurations `j-1` and `j`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Complaint {
    /// (i) the first configuration does not encode the input.
    Input(Field),
    /// (ii) the final configuration agrees with the claimed output at the
    /// challenger's cell.
    Output,
    /// (iii) the run is disputed within segment `j`.
    Segment(u32),
    /// The first configuration differs from the parent segment's start.
    CopyFirst(Field),
    /// The last configuration differs from the parent segment's end.
    CopyLast(Field),
    /// Configuration `j` is not one machine step after `j-1`.
    Step(u32, Field),
}

impl Complaint {
    pub fn encode(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        match *self {
            Complaint::Input(f) => {
                e.u8(0);
                f.encode_into(&mut e);
            }
            Complaint::Output => {
                e.u8(1);
            }
            Complaint::Segment(j) => {
                e.u8(2).u32(j);
            }
            Complaint::CopyFirst(f) => {
                e.u8(3);
                f.encode_into(&mut e);
            }
            Complaint::CopyLast(f) => {
                e.u8(4);
                f.encode_into(&mut e);
            }
            Complaint::Step(j, f) => {
                e.u8(5).u32(j);
                f.encode_into(&mut e);
            }
        }
        e.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut d = Decoder::new(bytes);
        let out = match d.u8()? {
            0 => Complaint::Input(Field::decode_from(&mut d)?),
            1 => Complaint::Output,
            2 => Complaint::Segment(d.u32()?),
            3 => Complaint::CopyFirst(Field::decode_from(&mut d)?),
            4 => Complaint::CopyLast(Field::decode_from(&mut d)?),
            5 => {
                let j = d.u32()?;
                Complaint::Step(j, Field::decode_from(&mut d)?)
            }
            t => return Err(DecodeError::Tag(t)),
        };
        d.finish()?;
        Ok(out)
    }
}

/// A challenger's configuration list. `diff_cell` is only present at the
/// top level: the cell where the final tape contradicts the claim.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ladder {
    pub diff_cell: Option<u32>,
    pub configs: Vec<Config>,
}

impl Ladder {
    pub fn encode(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        if let Some(c) = self.diff_cell {
            e.u32(c);
        }
        e.len(self.configs.len());
        for c in &self.configs {
            e.u32(c.state).u32(c.head).bytes(&c.tape);
        }
        e.finish()
    }

    /// Decodes and checks shape: `count` configurations, each well-formed
    /// for `task`.
    pub fn decode(bytes: &[u8], top: bool, count: usize, task: &TmTask) -> Result<Self, DecodeError> {
        let mut d = Decoder::new(bytes);
        let diff_cell = if top { Some(d.u32()?) } else { None };
        let s = task.space_bound();
        if diff_cell.is_some_and(|c| c as usize >= s) {
            return Err(DecodeError::Invalid("diff cell outside the tape"));
        }
        if d.len(8)? != count {
            return Err(DecodeError::Invalid("configuration count"));
        }
        let mut configs = Vec::with_capacity(count);
        for _ in 0..count {
            let state = d.u32()?;
            let head = d.u32()?;
            let tape = d.bytes()?;
            if state >= task.machine.states()
                || head as usize >= s
                || tape.len() != s
                || tape.iter().any(|&x| x as usize >= task.machine.symbols())
            {
                return Err(DecodeError::Invalid("configuration out of range"));
            }
            configs.push(Config { state, head, tape });
        }
        d.finish()?;
        Ok(Self { diff_cell, configs })
    }
}

#[derive(Debug)]
pub struct TmInstance {
    pub task: TmTask,
    /// Final tape claimed by the prover, exactly `S` cells.
    pub claimed: Vec<u8>,
    trace: OnceLock<Vec<Config>>,
}

impl Clone for TmInstance {
    fn clone(&self) -> Self {
        Self {
            task: self.task.clone(),
            claimed: self.claimed.clone(),
            trace: self.trace.clone(),
        }
    }
}

impl PartialEq for TmInstance {
    fn eq(&self, other: &Self) -> bool {
        self.task == other.task && self.claimed == other.claimed
    }
}

impl Eq for TmInstance {}

/// Where the game stands after replaying the moves so far.
struct Position {
    level: u32,
    times: Vec<u64>,
    /// Endpoints the current ladder must copy (below the top level).
    parent: Option<(Config, Config)>,
    ladder: Option<Ladder>,
    diff_cell: u32,
    complaint: Option<Complaint>,
}

impl TmInstance {
    pub fn new(task: TmTask, claimed: Vec<u8>) -> Result<Self, InstanceError> {
        if claimed.len() != task.space_bound() {
            return Err(InstanceError::invalid("claimed tape must span the space bound"));
        }
        if claimed.iter().any(|&s| s as usize >= task.machine.symbols()) {
            return Err(InstanceError::invalid("claimed symbol outside the alphabet"));
        }
        Ok(Self {
            task,
            claimed,
            trace: OnceLock::new(),
        })
    }

    pub fn trace(&self) -> &[Config] {
        self.trace.get_or_init(|| self.task.trace())
    }

    fn true_ladder(&self, times: &[u64], diff_cell: Option<u32>) -> Ladder {
        let trace = self.trace();
        Ladder {
            diff_cell,
            configs: times.iter().map(|&t| trace[t as usize].clone()).collect(),
        }
    }

    /// Replays all moves. `Err` names the author of an unreadable move.
    fn position(&self, moves: &[Move]) -> Result<Position, Party> {
        let mut pos = Position {
            level: 0,
            times: schedule(0, self.task.time_bound(), self.task.spread()),
            parent: None,
            ladder: None,
            diff_cell: 0,
            complaint: None,
        };
        for (idx, mv) in moves.iter().enumerate() {
            if idx % 2 == 0 {
                let ladder = Ladder::decode(&mv.payload, pos.level == 0, pos.times.len(), &self.task)
                    .map_err(|_| Party::Challenger)?;
                if let Some(c) = ladder.diff_cell {
                    pos.diff_cell = c;
                }
                pos.ladder = Some(ladder);
            } else {
                let complaint = Complaint::decode(&mv.payload).map_err(|_| Party::Prover)?;
                if idx + 1 == moves.len() {
                    pos.complaint = Some(complaint);
                    break;
                }
                // only a segment choice keeps the game going
                let Complaint::Segment(j) = complaint else {
                    return Err(Party::Prover);
                };
                self.descend(&mut pos, j)?;
            }
        }
        Ok(pos)
    }

    /// Moves `pos` into segment `j` of its current ladder.
    fn descend(&self, pos: &mut Position, j: u32) -> Result<(), Party> {
        let ladder = pos.ladder.take().expect("ladder precedes complaint");
        let j = j as usize;
        if j == 0 || j >= pos.times.len() {
            return Err(Party::Prover);
        }
        pos.parent = Some((ladder.configs[j - 1].clone(), ladder.configs[j].clone()));
        pos.times = schedule(pos.times[j - 1], pos.times[j], self.task.spread());
        pos.level += 1;
        pos.complaint = None;
        Ok(())
    }

    fn settle(&self, pos: &Position, meter: &mut CostMeter) -> Judgement {
        let ladder = &pos.ladder.as_ref().expect("ladder precedes complaint").configs;
        let prover_if = |upheld: bool| {
            if upheld {
                Judgement::win(Party::Prover, Reason::DefenseUpheld)
            } else {
                Judgement::win(Party::Challenger, Reason::DefenseFailed)
            }
        };
        let span = |j: u32| {
            let j = j as usize;
            (j >= 1 && j < pos.times.len()).then(|| pos.times[j] - pos.times[j - 1])
        };
        let differs = |f: Field, x: &Config, y: &Config| match (f.read(x), f.read(y)) {
            (Some(a), Some(b)) => a != b,
            _ => false,
        };
        match pos.complaint.expect("complaint present") {
            Complaint::Input(f) if pos.level == 0 => {
                meter.charge(3);
                prover_if(differs(f, &ladder[0], &self.task.initial()))
            }
            Complaint::Output if pos.level == 0 => {
                meter.charge(3);
                let c = pos.diff_cell as usize;
                prover_if(ladder[ladder.len() - 1].tape[c] == self.claimed[c])
            }
            Complaint::CopyFirst(f) if pos.level > 0 => {
                meter.charge(3);
                let (first, _) = pos.parent.as_ref().expect("below top level");
                prover_if(differs(f, &ladder[0], first))
            }
            Complaint::CopyLast(f) if pos.level > 0 => {
                meter.charge(3);
                let (_, last) = pos.parent.as_ref().expect("below top level");
                prover_if(differs(f, &ladder[ladder.len() - 1], last))
            }
            Complaint::Segment(j) => {
                meter.charge(3);
                match span(j) {
                    Some(s) if s > 1 => Judgement::proceed(),
                    _ => Judgement::win(Party::Challenger, Reason::DefenseFailed),
                }
            }
            Complaint::Step(j, f) => {
                meter.charge(3);
                if span(j) != Some(1) {
                    return Judgement::win(Party::Challenger, Reason::DefenseFailed);
                }
                let (prev, cur) = (&ladder[j as usize - 1], &ladder[j as usize]);
                // state, head and the scanned symbol, then one table lookup
                meter.charge(4);
                let read = prev.tape[prev.head as usize];
                let t = self.task.machine.lookup(prev.state, read);
                let s = self.task.space_bound();
                meter.charge(3);
                let expected = match (f, t) {
                    (Field::State, Some(t)) => Some(t.next),
                    (Field::Head, Some(t)) => Some(shifted(prev.head, t.shift, s)),
                    (Field::Cell(c), Some(t)) if c == prev.head => Some(t.write as u32),
                    (f, _) => f.read(prev),
                };
                match (expected, f.read(cur)) {
                    (Some(e), Some(got)) => prover_if(e != got),
                    _ => Judgement::win(Party::Challenger, Reason::DefenseFailed),
                }
            }
            _ => Judgement::win(Party::Challenger, Reason::DefenseFailed),
        }
    }
}

impl VerificationGame for TmInstance {
    fn kind(&self) -> GameKind {
        GameKind::Tm
    }

    fn spec(&self) -> GameSpec {
        let configs = self.task.spread() as usize + 1;
        let s = self.task.space_bound();
        GameSpec::new(
            GameKind::Tm,
            self.task.n,
            2 * self.task.levels(),
            configs * (12 + s) + 8,
            TM_BUDGET * log2_ceil(self.task.n),
        )
        .expect("positive bounds")
    }

    fn judge(&self, moves: &[Move], meter: &mut CostMeter) -> Judgement {
        let pos = match self.position(moves) {
            Ok(p) => p,
            Err(author) => return Judgement::malformed(author),
        };
        if moves.len() % 2 == 1 {
            // ladders are only checked when the prover points into them
            meter.charge(1);
            return Judgement::proceed();
        }
        self.settle(&pos, meter)
    }

    fn honest_move(&self, moves: &[Move], role: Party) -> Option<Vec<u8>> {
        let pos = self.position(moves).ok()?;
        match role {
            Party::Challenger if moves.is_empty() => {
                let truth = &self.trace()[self.task.time_bound() as usize].tape;
                let c = truth.iter().zip(&self.claimed).position(|(a, b)| a != b)?;
                Some(self.true_ladder(&pos.times, Some(c as u32)).encode())
            }
            Party::Challenger if moves.len().is_multiple_of(2) => {
                let mut pos = pos;
                if let Some(Complaint::Segment(j)) = pos.complaint {
                    self.descend(&mut pos, j).ok()?;
                }
                // true interior, endpoints copied from the chosen segment
                let mut ladder = self.true_ladder(&pos.times, None);
                if let Some((first, end)) = pos.parent {
                    let last = ladder.configs.len() - 1;
                    ladder.configs[0] = first;
                    ladder.configs[last] = end;
                }
                Some(ladder.encode())
            }
            Party::Prover if moves.len() % 2 == 1 => {
                let ladder = &pos.ladder.as_ref()?.configs;
                let last = &ladder[ladder.len() - 1];
                match &pos.parent {
                    None => {
                        if let Some(f) = first_difference(&ladder[0], &self.task.initial()) {
                            return Some(Complaint::Input(f).encode());
                        }
                        let c = pos.diff_cell as usize;
                        if last.tape[c] == self.claimed[c] {
                            return Some(Complaint::Output.encode());
                        }
                    }
                    Some((first, end)) => {
                        if let Some(f) = first_difference(&ladder[0], first) {
                            return Some(Complaint::CopyFirst(f).encode());
                        }
                        if let Some(f) = first_difference(last, end) {
                            return Some(Complaint::CopyLast(f).encode());
                        }
                    }
                }
                let trace = self.trace();
                let j = (1..ladder.len()).find(|&j| ladder[j] != trace[pos.times[j] as usize])?;
                if pos.times[j] - pos.times[j - 1] > 1 {
                    return Some(Complaint::Segment(j as u32).encode());
                }
                let expected = self.task.machine.step(&ladder[j - 1]);
                let f = first_difference(&ladder[j], &expected)?;
                Some(Complaint::Step(j as u32, f).encode())
            }
            _ => None,
        }
    }

    fn greedy_move(&self, moves: &[Move], role: Party) -> Option<Vec<u8>> {
        if let Some(m) = self.honest_move(moves, role) {
            return Some(m);
        }
        if role != Party::Prover || moves.len().is_multiple_of(2) {
            return None;
        }
        let pos = self.position(moves).ok()?;
        let c = if pos.times[1] - pos.times[0] > 1 {
            Complaint::Segment(1)
        } else {
            Complaint::Step(1, Field::State)
        };
        Some(c.encode())
    }

    fn fabricated_challenge(&self, rng: &mut dyn RngCore) -> Vec<u8> {
        let times = schedule(0, self.task.time_bound(), self.task.spread());
        let s = self.task.space_bound();
        let c = rng.gen_range(0..s);
        let mut ladder = self.true_ladder(&times, Some(c as u32));
        let symbols = self.task.machine.symbols() as u8;
        let last = ladder.configs.last_mut().expect("at least two configurations");
        // any symbol other than the claimed one at that cell
        let claimed = self.claimed[c];
        let mut fake = rng.gen_range(0..symbols);
        if fake == claimed {
            fake = (fake + 1) % symbols;
        }
        last.tape[c] = fake;
        ladder.encode()
    }

    fn is_valid(&self) -> bool {
        self.trace()[self.task.time_bound() as usize].tape == self.claimed
    }
}
