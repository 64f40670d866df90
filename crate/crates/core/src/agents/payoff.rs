//! Net payoffs per party and their aggregation.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Role;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayoffRecord {
    pub party: String,
    pub role: Role,
    pub policy: String,
    /// Everything received from other parties: prizes, slash shares, rewards.
    pub rewards: i64,
    /// Deposits lost.
    pub slashes: i64,
    pub fees: i64,
    pub costs: i64,
    pub net: i64,
}

impl PayoffRecord {
    pub fn new(
        party: impl Into<String>,
        role: Role,
        policy: impl Into<String>,
        rewards: i64,
        slashes: i64,
        fees: i64,
        costs: i64,
    ) -> Self {
        Self {
            party: party.into(),
            role,
            policy: policy.into(),
            rewards,
            slashes,
            fees,
            costs,
            net: rewards - slashes - fees - costs,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.net == self.rewards - self.slashes - self.fees - self.costs
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayoffRow {
    pub role: Role,
    pub policy: String,
    pub runs: usize,
    pub mean_net: f64,
    /// Sample variance; zero for a single run.
    pub var_net: f64,
}

/// Mean and variance of net payoff per `(role, policy)`.
pub fn payoff_summary<'a>(records: impl IntoIterator<Item = &'a PayoffRecord>) -> Vec<PayoffRow> {
    let mut groups: BTreeMap<(Role, &str), Vec<f64>> = BTreeMap::new();
    for r in records {
        groups.entry((r.role, &r.policy)).or_default().push(r.net as f64);
    }
    groups
        .into_iter()
        .map(|((role, policy), v)| {
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let var = if v.len() > 1 {
                v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            PayoffRow {
                role,
                policy: policy.to_string(),
                runs: v.len(),
                mean_net: mean,
                var_net: var,
            }
        })
        .collect()
}

pub fn summary_text(rows: &[PayoffRow]) -> String {
    let mut out = String::from("role|policy|runs|mean_net|var_net\n");
    for r in rows {
        let _ = writeln!(out, "{}|{}|{}|{:.4}|{:.4}", r.role, r.policy, r.runs, r.mean_net, r.var_net);
    }
    out
}

/// Percentile bootstrap interval for the mean.
///
/// # Panics
/// On an empty sample.
pub fn bootstrap_mean_ci(values: &[f64], resamples: usize, confidence: f64, seed: u64) -> (f64, f64) {
    assert!(!values.is_empty(), "bootstrap of an empty sample");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = values.len();
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| values[rng.gen_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - confidence) / 2.0;
    let at = |q: f64| means[((q * (resamples - 1) as f64).round() as usize).min(resamples - 1)];
    (at(tail), at(1.0 - tail))
}
