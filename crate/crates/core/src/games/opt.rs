//! Optimization tasks: a solution carries a claimed quality, and any rule
//! violation can be pointed at directly.
//!
//! Classifier: samples `(x_m, c_m)`, a classifier `f` and running counters
//! `k_0..k_n` with `k_m = k_{m-1} + [f(x_m) = c_m]`; the quality is `k_n`.
//! One round: the challenger names the broken counter (or the quality).
//!
//! Factorization: a target `a` and a list `(m; b_1..b_k)` with `m = k`,
//! `2 <= b_1 <= ... <= b_k` and `a = b_1 ... b_k`; the quality is `m`. The
//! product rule needs a second round: the challenger posts running products
//! capped at `a + 1`, the prover names a wrong step.

use rand::{Rng, RngCore};

use super::text::{join, TaskFormatError, TextReader};
use super::{InstanceError, Judgement, VerificationGame};
use crate::codec::{DecodeError, Decoder, Encoder};
use crate::referee::CostMeter;
use crate::types::{log2_ceil, GameKind, GameSpec, Move, Party, Reason};

pub const OPT_BUDGET: u64 = 8;

const MAX_TREE_NODES: usize = 1 << 12;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sample {
    pub x: Vec<i64>,
    pub c: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeNode {
    Leaf(bool),
    /// Go left when `x[feature] <= threshold`. Children have larger indices.
    Split {
        feature: u32,
        threshold: i64,
        left: u32,
        right: u32,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Classifier {
    /// `f(x) = 1` iff `w . x + bias >= 0`.
    Hyperplane { weights: Vec<i64>, bias: i64 },
    DecisionTree { nodes: Vec<TreeNode> },
}

impl Classifier {
    fn check(&self, dim: usize) -> Result<(), InstanceError> {
        match self {
            Classifier::Hyperplane { weights, .. } if weights.len() != dim => {
                Err(InstanceError::invalid("hyperplane dimension differs from samples"))
            }
            Classifier::Hyperplane { .. } => Ok(()),
            Classifier::DecisionTree { nodes } => {
                if nodes.is_empty() || nodes.len() > MAX_TREE_NODES {
                    return Err(InstanceError::invalid("tree needs 1..=4096 nodes"));
                }
                for (i, n) in nodes.iter().enumerate() {
                    if let TreeNode::Split {
                        feature,
                        left,
                        right,
                        ..
                    } = *n
                    {
                        let child_ok = |c: u32| (c as usize) > i && (c as usize) < nodes.len();
                        if feature as usize >= dim || !child_ok(left) || !child_ok(right) {
                            return Err(InstanceError::invalid("malformed tree node"));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// Evaluation with one meter unit per weight or per visited node.
    pub fn eval(&self, x: &[i64], meter: &mut CostMeter) -> bool {
        match self {
            Classifier::Hyperplane { weights, bias } => {
                meter.charge(weights.len() as u64 + 1);
                let s: i128 = weights
                    .iter()
                    .zip(x)
                    .map(|(&w, &v)| w as i128 * v as i128)
                    .sum::<i128>()
                    + *bias as i128;
                s >= 0
            }
            Classifier::DecisionTree { nodes } => {
                let mut i = 0usize;
                loop {
                    meter.charge(1);
                    match nodes[i] {
                        TreeNode::Leaf(c) => return c,
                        TreeNode::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        } => {
                            i = if x[feature as usize] <= threshold {
                                left as usize
                            } else {
                                right as usize
                            };
                        }
                    }
                }
            }
        }
    }

    /// Upper bound on one evaluation's metered cost.
    fn eval_bound(&self) -> u64 {
        match self {
            Classifier::Hyperplane { weights, .. } => weights.len() as u64 + 1,
            Classifier::DecisionTree { nodes } => nodes.len() as u64,
        }
    }

    fn encode_into(&self, e: &mut Encoder) {
        match self {
            Classifier::Hyperplane { weights, bias } => {
                e.u8(0).i64s(weights).i64(*bias);
            }
            Classifier::DecisionTree { nodes } => {
                e.u8(1).len(nodes.len());
                for n in nodes {
                    match *n {
                        TreeNode::Leaf(c) => e.u8(0).bool(c),
                        TreeNode::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        } => e.u8(1).u32(feature).i64(threshold).u32(left).u32(right),
                    };
                }
            }
        }
    }

    fn decode_from(d: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        match d.u8()? {
            0 => {
                let weights = d.i64s()?;
                let bias = d.i64()?;
                Ok(Classifier::Hyperplane { weights, bias })
            }
            1 => {
                let count = d.len(2)?;
                let nodes = (0..count)
                    .map(|_| match d.u8()? {
                        0 => Ok(TreeNode::Leaf(d.bool()?)),
                        1 => Ok(TreeNode::Split {
                            feature: d.u32()?,
                            threshold: d.i64()?,
                            left: d.u32()?,
                            right: d.u32()?,
                        }),
                        t => Err(DecodeError::Tag(t)),
                    })
                    .collect::<Result<_, _>>()?;
                Ok(Classifier::DecisionTree { nodes })
            }
            t => Err(DecodeError::Tag(t)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassifierTask {
    pub dim: usize,
    pub samples: Vec<Sample>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FactorTask {
    pub a: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OptTask {
    Classifier(ClassifierTask),
    Factorization(FactorTask),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OptSolution {
    Classifier {
        sigma: Classifier,
        counters: Vec<u64>,
        q: u64,
    },
    Factorization {
        m: u64,
        factors: Vec<u64>,
        q: u64,
    },
}

impl OptSolution {
    pub fn quality(&self) -> u64 {
        match self {
            OptSolution::Classifier { q, .. } | OptSolution::Factorization { q, .. } => *q,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        match self {
            OptSolution::Classifier { sigma, counters, q } => {
                e.u8(0);
                sigma.encode_into(&mut e);
                e.u64s(counters).u64(*q);
            }
            OptSolution::Factorization { m, factors, q } => {
                e.u8(1).u64(*m).u64s(factors).u64(*q);
            }
        }
        e.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut d = Decoder::new(bytes);
        let out = match d.u8()? {
            0 => {
                let sigma = Classifier::decode_from(&mut d)?;
                let counters = d.u64s()?;
                let q = d.u64()?;
                OptSolution::Classifier { sigma, counters, q }
            }
            1 => {
                let m = d.u64()?;
                let factors = d.u64s()?;
                let q = d.u64()?;
                OptSolution::Factorization { m, factors, q }
            }
            t => return Err(DecodeError::Tag(t)),
        };
        d.finish()?;
        Ok(out)
    }
}

fn running_counters(sigma: &Classifier, samples: &[Sample]) -> Vec<u64> {
    let mut meter = CostMeter::new();
    let mut k = vec![0u64];
    for s in samples {
        let hit = sigma.eval(&s.x, &mut meter) == s.c;
        k.push(k.last().expect("non-empty") + hit as u64);
    }
    k
}

/// Integer perceptron, a bounded number of passes.
fn perceptron(task: &ClassifierTask) -> Classifier {
    let mut weights = vec![0i64; task.dim];
    let mut bias = 0i64;
    for _ in 0..32 {
        let mut clean = true;
        for s in &task.samples {
            let h = Classifier::Hyperplane {
                weights: weights.clone(),
                bias,
            };
            if h.eval(&s.x, &mut CostMeter::new()) != s.c {
                clean = false;
                let sign = if s.c { 1 } else { -1 };
                for (w, &v) in weights.iter_mut().zip(&s.x) {
                    *w = w.saturating_add(sign * v);
                }
                bias = bias.saturating_add(sign);
            }
        }
        if clean {
            break;
        }
    }
    Classifier::Hyperplane { weights, bias }
}

fn prime_factors(mut a: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p.saturating_mul(p) <= a {
        while a.is_multiple_of(p) {
            out.push(p);
            a /= p;
        }
        p += 1;
    }
    if a > 1 {
        out.push(a);
    }
    out
}

impl OptTask {
    pub fn classifier(dim: usize, samples: Vec<Sample>) -> Result<Self, InstanceError> {
        if dim == 0 || samples.is_empty() {
            return Err(InstanceError::invalid("classifier task needs samples of positive dimension"));
        }
        if samples.iter().any(|s| s.x.len() != dim) {
            return Err(InstanceError::invalid("sample dimension mismatch"));
        }
        Ok(OptTask::Classifier(ClassifierTask { dim, samples }))
    }

    pub fn factorization(a: u64) -> Result<Self, InstanceError> {
        if a < 2 {
            return Err(InstanceError::invalid("factorization target must be at least 2"));
        }
        Ok(OptTask::Factorization(FactorTask { a }))
    }

    pub fn solve(&self) -> OptSolution {
        match self {
            OptTask::Classifier(t) => {
                let sigma = perceptron(t);
                let counters = running_counters(&sigma, &t.samples);
                let q = *counters.last().expect("non-empty");
                OptSolution::Classifier { sigma, counters, q }
            }
            OptTask::Factorization(t) => {
                let factors = prime_factors(t.a);
                let m = factors.len() as u64;
                OptSolution::Factorization { m, factors, q: m }
            }
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            OptTask::Classifier(t) => {
                let mut out = format!("game opt\nkind classifier\ndim {}\n", t.dim);
                for s in &t.samples {
                    out.push_str(&format!("sample {} {}\n", join(&s.x), s.c as u8));
                }
                out
            }
            OptTask::Factorization(t) => format!("game opt\nkind factorization\na {}\n", t.a),
        }
    }

    pub(crate) fn from_reader(r: &mut TextReader<'_>) -> Result<Self, TaskFormatError> {
        let kind: String = r.value("kind")?;
        let out = match kind.as_str() {
            "classifier" => {
                let dim: usize = r.value("dim")?;
                let mut samples = Vec::new();
                while r.peek_key() == Some("sample") {
                    let mut v: Vec<i64> = r.values("sample")?;
                    let c = match v.pop() {
                        Some(0) => false,
                        Some(1) => true,
                        _ => return Err(r.error("sample label must be 0 or 1")),
                    };
                    samples.push(Sample { x: v, c });
                }
                Self::classifier(dim, samples)
            }
            "factorization" => Self::factorization(r.value("a")?),
            other => return Err(r.error(format!("unknown optimization kind {other:?}"))),
        };
        out.map_err(|e| r.error(e.to_string()))
    }

    pub(crate) fn encode_into(&self, e: &mut Encoder) {
        match self {
            OptTask::Classifier(t) => {
                e.u8(0).len(t.dim).len(t.samples.len());
                for s in &t.samples {
                    e.i64s(&s.x).bool(s.c);
                }
            }
            OptTask::Factorization(t) => {
                e.u8(1).u64(t.a);
            }
        }
    }

    pub(crate) fn decode_from(d: &mut Decoder<'_>) -> Result<Self, InstanceError> {
        match d.u8()? {
            0 => {
                let dim = d.u32()? as usize;
                let count = d.len(5)?;
                let samples = (0..count)
                    .map(|_| {
                        Ok(Sample {
                            x: d.i64s()?,
                            c: d.bool()?,
                        })
                    })
                    .collect::<Result<_, DecodeError>>()?;
                Self::classifier(dim, samples)
            }
            1 => Self::factorization(d.u64()?),
            t => Err(DecodeError::Tag(t).into()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptChallenge {
    /// `k_0 != 0`.
    Base,
    /// `k_{m+1}` is wrongly updated from `k_m` (0-based `m`).
    Update(u32),
    /// The claimed quality differs from `k_n` (or from `m`).
    Quality,
    /// `m != k`.
    Length,
    /// Position `idx` (1-based) breaks `2 <= b_1 <= ... <= b_k`.
    Order(u32),
    /// `a != b_1 ... b_k`, backed by a running-product list.
    Product,
}

impl OptChallenge {
    pub fn encode(&self, products: Option<&[u64]>) -> Vec<u8> {
        let mut e = Encoder::new();
        match *self {
            OptChallenge::Base => e.u8(0),
            OptChallenge::Update(m) => e.u8(1).u32(m),
            OptChallenge::Quality => e.u8(2),
            OptChallenge::Length => e.u8(3),
            OptChallenge::Order(i) => e.u8(4).u32(i),
            OptChallenge::Product => e.u8(5).u64s(products.unwrap_or(&[])),
        };
        e.finish()
    }

    /// The challenge and, for a product claim, its running products.
    pub fn decode(bytes: &[u8]) -> Result<(Self, Vec<u64>), DecodeError> {
        let mut d = Decoder::new(bytes);
        let mut products = Vec::new();
        let ch = match d.u8()? {
            0 => OptChallenge::Base,
            1 => OptChallenge::Update(d.u32()?),
            2 => OptChallenge::Quality,
            3 => OptChallenge::Length,
            4 => OptChallenge::Order(d.u32()?),
            5 => {
                products = d.u64s()?;
                OptChallenge::Product
            }
            t => return Err(DecodeError::Tag(t)),
        };
        d.finish()?;
        Ok((ch, products))
    }
}

pub fn encode_step(t: u32) -> Vec<u8> {
    Encoder::new().u32(t).finish()
}

pub fn decode_step(bytes: &[u8]) -> Result<u32, DecodeError> {
    let mut d = Decoder::new(bytes);
    let t = d.u32()?;
    d.finish()?;
    Ok(t)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OptInstance {
    pub task: OptTask,
    pub claimed: OptSolution,
}

impl OptInstance {
    pub fn new(task: OptTask, claimed: OptSolution) -> Result<Self, InstanceError> {
        match (&task, &claimed) {
            (OptTask::Classifier(t), OptSolution::Classifier { sigma, counters, .. }) => {
                sigma.check(t.dim)?;
                if counters.len() != t.samples.len() + 1 {
                    return Err(InstanceError::invalid("counter list must have n + 1 entries"));
                }
            }
            (OptTask::Factorization(_), OptSolution::Factorization { .. }) => {}
            _ => return Err(InstanceError::invalid("solution kind differs from task kind")),
        }
        Ok(Self { task, claimed })
    }

    /// Sample count (classifier) or list length (factorization), at least 1.
    pub fn size(&self) -> u64 {
        match &self.claimed {
            OptSolution::Classifier { counters, .. } => counters.len() as u64 - 1,
            OptSolution::Factorization { factors, .. } => factors.len() as u64,
        }
        .max(1)
    }

    fn target(&self) -> u64 {
        match &self.task {
            OptTask::Factorization(t) => t.a,
            OptTask::Classifier(_) => 0,
        }
    }

    fn true_products(&self, factors: &[u64]) -> Vec<u64> {
        let cap = self.target().saturating_add(1);
        let mut p = vec![1u64];
        for &b in factors {
            let prev = *p.last().expect("non-empty");
            p.push(prev.saturating_mul(b).min(cap));
        }
        p
    }

    fn update_holds(&self, m: usize, meter: &mut CostMeter) -> bool {
        let (OptTask::Classifier(t), OptSolution::Classifier { sigma, counters, .. }) =
            (&self.task, &self.claimed)
        else {
            unreachable!("checked at construction")
        };
        meter.charge(3);
        let s = &t.samples[m];
        let hit = sigma.eval(&s.x, meter) == s.c;
        counters[m + 1].checked_sub(counters[m]) == Some(hit as u64)
    }

    fn least_challenge(&self) -> Option<(OptChallenge, Option<Vec<u64>>)> {
        match &self.claimed {
            OptSolution::Classifier { counters, q, .. } => {
                if counters[0] != 0 {
                    return Some((OptChallenge::Base, None));
                }
                let mut scratch = CostMeter::new();
                if let Some(m) = (0..counters.len() - 1).find(|&m| !self.update_holds(m, &mut scratch)) {
                    return Some((OptChallenge::Update(m as u32), None));
                }
                (*q != counters[counters.len() - 1]).then_some((OptChallenge::Quality, None))
            }
            OptSolution::Factorization { m, factors, q } => {
                if *m != factors.len() as u64 {
                    return Some((OptChallenge::Length, None));
                }
                let bad_order = (0..factors.len())
                    .find(|&i| if i == 0 { factors[0] < 2 } else { factors[i] < factors[i - 1] });
                if let Some(i) = bad_order {
                    return Some((OptChallenge::Order(i as u32 + 1), None));
                }
                let products = self.true_products(factors);
                if products[factors.len()] != self.target() {
                    return Some((OptChallenge::Product, Some(products)));
                }
                (*q != *m).then_some((OptChallenge::Quality, None))
            }
        }
    }
}

impl VerificationGame for OptInstance {
    fn kind(&self) -> GameKind {
        GameKind::Opt
    }

    fn spec(&self) -> GameSpec {
        let n = self.size();
        let (rounds, g, extra) = match &self.claimed {
            OptSolution::Classifier { sigma, .. } => (1, 8, 2 * sigma.eval_bound()),
            OptSolution::Factorization { factors, .. } => (2, 8 * (factors.len() + 1) + 8, 0),
        };
        GameSpec::new(GameKind::Opt, n, rounds, g, OPT_BUDGET * log2_ceil(n) + extra)
            .expect("positive bounds")
    }

    fn judge(&self, moves: &[Move], meter: &mut CostMeter) -> Judgement {
        let Ok((ch, products)) = OptChallenge::decode(&moves[0].payload) else {
            return Judgement::malformed(Party::Challenger);
        };
        let upheld = |ok: bool| {
            if ok {
                Judgement::win(Party::Challenger, Reason::ChallengeUpheld)
            } else {
                Judgement::win(Party::Prover, Reason::InvalidChallenge)
            }
        };
        match (&self.claimed, moves.len()) {
            (OptSolution::Classifier { counters, q, .. }, 1) => {
                meter.charge(1);
                if counters[0] != 0 {
                    return Judgement::win(Party::Challenger, Reason::ChallengeUpheld);
                }
                match ch {
                    OptChallenge::Base => upheld(false),
                    OptChallenge::Update(m) => {
                        meter.charge(1);
                        if m as usize >= counters.len() - 1 {
                            return Judgement::malformed(Party::Challenger);
                        }
                        upheld(!self.update_holds(m as usize, meter))
                    }
                    OptChallenge::Quality => {
                        meter.charge(2);
                        upheld(*q != counters[counters.len() - 1])
                    }
                    _ => Judgement::malformed(Party::Challenger),
                }
            }
            (OptSolution::Factorization { m, factors, q }, 1) => match ch {
                OptChallenge::Length => {
                    meter.charge(2);
                    upheld(*m != factors.len() as u64)
                }
                OptChallenge::Order(i) => {
                    meter.charge(2);
                    let i = i as usize;
                    if i == 0 || i > factors.len() {
                        return Judgement::malformed(Party::Challenger);
                    }
                    meter.charge(2);
                    upheld(if i == 1 {
                        factors[0] < 2
                    } else {
                        factors[i - 1] < factors[i - 2]
                    })
                }
                OptChallenge::Quality => {
                    meter.charge(2);
                    upheld(*q != *m)
                }
                OptChallenge::Product => {
                    meter.charge(3);
                    if products.len() != factors.len() + 1 {
                        return Judgement::malformed(Party::Challenger);
                    }
                    if products[0] == 1 && products[factors.len()] != self.target() {
                        Judgement::proceed()
                    } else {
                        upheld(false)
                    }
                }
                _ => Judgement::malformed(Party::Challenger),
            },
            (OptSolution::Factorization { factors, .. }, 2) => {
                let Ok(t) = decode_step(&moves[1].payload) else {
                    return Judgement::malformed(Party::Prover);
                };
                let t = t as usize;
                meter.charge(2);
                if t == 0 || t > factors.len() {
                    return Judgement::win(Party::Challenger, Reason::DefenseFailed);
                }
                // two reads, one saturating product, one comparison
                meter.charge(5);
                let cap = self.target().saturating_add(1);
                let expected = products[t - 1].saturating_mul(factors[t - 1]).min(cap);
                if products[t] != expected {
                    Judgement::win(Party::Prover, Reason::DefenseUpheld)
                } else {
                    Judgement::win(Party::Challenger, Reason::DefenseFailed)
                }
            }
            _ => Judgement::malformed(moves.last().expect("non-empty").author),
        }
    }

    fn honest_move(&self, moves: &[Move], role: Party) -> Option<Vec<u8>> {
        match (moves.len(), role) {
            (0, Party::Challenger) => self
                .least_challenge()
                .map(|(c, p)| c.encode(p.as_deref())),
            (1, Party::Prover) => {
                let OptSolution::Factorization { factors, .. } = &self.claimed else {
                    return None;
                };
                let (OptChallenge::Product, products) = OptChallenge::decode(&moves[0].payload).ok()?
                else {
                    return None;
                };
                if products.len() != factors.len() + 1 {
                    return None;
                }
                let cap = self.target().saturating_add(1);
                (1..products.len())
                    .find(|&t| products[t] != products[t - 1].saturating_mul(factors[t - 1]).min(cap))
                    .map(|t| encode_step(t as u32))
            }
            _ => None,
        }
    }

    fn greedy_move(&self, moves: &[Move], role: Party) -> Option<Vec<u8>> {
        self.honest_move(moves, role).or(match (moves.len(), role) {
            (1, Party::Prover) if matches!(self.claimed, OptSolution::Factorization { .. }) => {
                Some(encode_step(1))
            }
            _ => None,
        })
    }

    fn fabricated_challenge(&self, rng: &mut dyn RngCore) -> Vec<u8> {
        match &self.claimed {
            OptSolution::Classifier { counters, .. } => {
                let m = rng.gen_range(0..counters.len() - 1) as u32;
                OptChallenge::Update(m).encode(None)
            }
            OptSolution::Factorization { factors, .. } => {
                if rng.gen_bool(0.5) || factors.is_empty() {
                    OptChallenge::Quality.encode(None)
                } else {
                    // a product list that drifts at a random step
                    let mut p = self.true_products(factors);
                    let t = rng.gen_range(1..p.len());
                    for x in &mut p[t..] {
                        *x = x.wrapping_add(1);
                    }
                    OptChallenge::Product.encode(Some(&p))
                }
            }
        }
    }

    fn is_valid(&self) -> bool {
        self.least_challenge().is_none()
    }
}
