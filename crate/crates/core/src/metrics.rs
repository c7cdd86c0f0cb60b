//! Behavioral diagnostics and detector evaluation.

use crate::energy::{Label, Labeling};
use crate::error::{Error, Result};
use crate::graph::{nearest_rank, SocialGraph};

/// Retweets per distinct target, split by the target's class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetweetsPerTarget {
    pub node: usize,
    pub to_humans: Option<f64>,
    pub to_bots: Option<f64>,
}

impl RetweetsPerTarget {
    pub fn to_class(&self, class: Label) -> Option<f64> {
        match class {
            Label::Human => self.to_humans,
            Label::Bot => self.to_bots,
        }
    }
}

/// Total retweets given to each class divided by the number of distinct
/// accounts of that class retweeted. Accounts without out-edges are omitted.
pub fn retweets_per_target(graph: &SocialGraph, labels: &Labeling) -> Result<Vec<RetweetsPerTarget>> {
    if labels.len() != graph.node_count() {
        return Err(Error::SizeMismatch {
            expected: graph.node_count(),
            actual: labels.len(),
        });
    }
    let mut rows = Vec::new();
    for node in 0..graph.node_count() {
        if graph.out_degree(node) == 0 {
            continue;
        }
        let mut total = [0.0f64; 2];
        let mut distinct = [0usize; 2];
        for (t, w) in graph.out_edges(node) {
            let c = labels.get(t).index();
            total[c] += w;
            distinct[c] += 1;
        }
        let ratio = |c: usize| (distinct[c] > 0).then(|| total[c] / distinct[c] as f64);
        rows.push(RetweetsPerTarget {
            node,
            to_humans: ratio(0),
            to_bots: ratio(1),
        });
    }
    Ok(rows)
}

/// Two-sample Kolmogorov–Smirnov result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
}

/// Two-sample KS statistic `D = sup |F̂₁ − F̂₂|` with the asymptotic p-value.
pub fn ks_two_sample(sample1: &[f64], sample2: &[f64]) -> Result<KsResult> {
    if sample1.is_empty() || sample2.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut a = sample1.to_vec();
    let mut b = sample2.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n1, n2) = (a.len(), b.len());

    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < n1 && j < n2 {
        // Step past every copy of the smallest remaining value in both samples.
        let x = a[i].min(b[j]);
        while i < n1 && a[i] <= x {
            i += 1;
        }
        while j < n2 && b[j] <= x {
            j += 1;
        }
        let diff = (i as f64 / n1 as f64 - j as f64 / n2 as f64).abs();
        d = d.max(diff);
    }

    let ne = (n1 * n2) as f64 / (n1 + n2) as f64;
    let sq = ne.sqrt();
    let lambda = (sq + 0.12 + 0.11 / sq) * d;
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_tail(lambda),
        n1,
        n2,
    })
}

/// `Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} e^{−2k²λ²}`, clamped to `[0, 1]`.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    // The series is numerically 1 below this point and converges slowly.
    if lambda < 0.2 {
        return 1.0;
    }
    let a = -2.0 * lambda * lambda;
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=1000 {
        let kf = k as f64;
        let term = (a * kf * kf).exp();
        sum += sign * term;
        if term < 1e-12 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One ROC operating point, obtained by calling every score `≥ threshold` a bot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// Starts at `(0, 0)` (threshold `+∞`) and ends at `(1, 1)`.
    pub points: Vec<RocPoint>,
    pub auc: f64,
    pub positives: usize,
    pub negatives: usize,
}

/// ROC curve of `(score, is_positive)` pairs. Tied scores share one threshold.
pub fn roc_curve(samples: &[(f64, bool)]) -> Result<RocCurve> {
    let positives = samples.iter().filter(|s| s.1).count();
    let negatives = samples.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass);
    }
    if samples.iter().any(|s| s.0.is_nan()) {
        return Err(Error::InvalidParameter("NaN score".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|x, y| y.0.total_cmp(&x.0));

    let (p, n) = (positives as f64, negatives as f64);
    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut k = 0;
    while k < sorted.len() {
        let threshold = sorted[k].0;
        while k < sorted.len() && sorted[k].0 == threshold {
            if sorted[k].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        let prev = *points.last().unwrap();
        let pt = RocPoint {
            threshold,
            fpr: fp as f64 / n,
            tpr: tp as f64 / p,
        };
        auc += (pt.fpr - prev.fpr) * (pt.tpr + prev.tpr) / 2.0;
        points.push(pt);
    }
    Ok(RocCurve {
        points,
        auc,
        positives,
        negatives,
    })
}

/// ROC of per-node scores against a labeled subset of nodes.
pub fn roc_auc(scores: &[f64], truth: &[(usize, Label)]) -> Result<RocCurve> {
    let samples: Vec<(f64, bool)> = truth
        .iter()
        .map(|&(node, label)| {
            scores
                .get(node)
                .map(|&s| (s, label.is_bot()))
                .ok_or_else(|| Error::MissingScore(node.to_string()))
        })
        .collect::<Result<_>>()?;
    roc_curve(&samples)
}

/// Nearest-rank 5th, 50th and 95th percentiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PercentileSummary {
    pub count: usize,
    pub p5: f64,
    pub p50: f64,
    pub p95: f64,
}

pub fn percentile_summary(values: &[f64]) -> Result<PercentileSummary> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(PercentileSummary {
        count: values.len(),
        p5: nearest_rank(values, 5.0)?,
        p50: nearest_rank(values, 50.0)?,
        p95: nearest_rank(values, 95.0)?,
    })
}

/// Compares one quantity (posting rate, follower count, ...) between two
/// groups of accounts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupComparison {
    pub low: Option<PercentileSummary>,
    pub high: Option<PercentileSummary>,
    pub ks: Option<KsResult>,
}

pub fn compare_groups(low: &[f64], high: &[f64]) -> GroupComparison {
    GroupComparison {
        low: percentile_summary(low).ok(),
        high: percentile_summary(high).ok(),
        ks: ks_two_sample(low, high).ok(),
    }
}
