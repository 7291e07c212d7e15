//! Mann-Whitney U test with midrank ties.

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Pooled sizes up to this use the exact permutation distribution.
pub const EXACT_MAX_N: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    /// Values in `a` tend to be smaller than in `b`.
    ALess,
    /// Values in `a` tend to be larger than in `b`.
    AGreater,
    TwoSided,
}

impl Alternative {
    pub fn mirrored(self) -> Self {
        match self {
            Alternative::ALess => Alternative::AGreater,
            Alternative::AGreater => Alternative::ALess,
            Alternative::TwoSided => Alternative::TwoSided,
        }
    }
}

impl FromStr for Alternative {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a_less" | "less" => Ok(Alternative::ALess),
            "a_greater" | "greater" => Ok(Alternative::AGreater),
            "two_sided" => Ok(Alternative::TwoSided),
            other => Err(Error::Usage(format!("unknown alternative {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U statistic of sample `a`.
    pub u: f64,
    pub p: f64,
    pub exact: bool,
}

/// Midranks (1-based) of the pooled sample.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[order[k]] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn combine(p_less: f64, p_greater: f64, alt: Alternative) -> f64 {
    match alt {
        Alternative::ALess => p_less,
        Alternative::AGreater => p_greater,
        Alternative::TwoSided => (2.0 * p_less.min(p_greater)).min(1.0),
    }
}

pub fn mann_whitney_u(a: &[f64], b: &[f64], alt: Alternative) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("Mann-Whitney U needs two nonempty samples".into()));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::Domain("Mann-Whitney U samples must not contain NaN".into()));
    }
    let (na, nb) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let rank_sum_a: f64 = ranks[..na].iter().sum();
    let u = rank_sum_a - (na * (na + 1)) as f64 / 2.0;

    if na + nb <= EXACT_MAX_N {
        let (p_less, p_greater) = exact_tails(&ranks, na);
        return Ok(MannWhitney { u, p: combine(p_less, p_greater, alt), exact: true });
    }

    let n = (na + nb) as f64;
    let mean = (na * nb) as f64 / 2.0;
    let mut tie_term = 0.0;
    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = (na * nb) as f64 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if !(var > 0.0) {
        return Ok(MannWhitney { u, p: 1.0, exact: false });
    }
    let sd = var.sqrt();
    let normal = Normal::standard();
    let p_less = normal.cdf((u - mean + 0.5) / sd);
    let p_greater = 1.0 - normal.cdf((u - mean - 0.5) / sd);
    Ok(MannWhitney { u, p: combine(p_less, p_greater, alt), exact: false })
}

/// P(R_a ≤ observed) and P(R_a ≥ observed) over all equally likely ways of
/// assigning `na` of the pooled midranks to sample `a`.
fn exact_tails(ranks: &[f64], na: usize) -> (f64, f64) {
    // midranks are multiples of 1/2, so doubled ranks are integers
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let observed: usize = doubled[..na].iter().sum();
    let max_sum: usize = doubled.iter().sum();
    // ways[k][s]: subsets of size k with doubled rank sum s
    let mut ways = vec![vec![0u64; max_sum + 1]; na + 1];
    ways[0][0] = 1;
    for &d in &doubled {
        for k in (1..=na).rev() {
            for s in (d..=max_sum).rev() {
                ways[k][s] += ways[k - 1][s - d];
            }
        }
    }
    let total: u64 = ways[na].iter().sum();
    let le: u64 = ways[na][..=observed].iter().sum();
    let ge: u64 = ways[na][observed..].iter().sum();
    (le as f64 / total as f64, ge as f64 / total as f64)
}
