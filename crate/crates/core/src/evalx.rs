//! Evaluation metrics and reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::SampleId;
use crate::error::{Error, Result};

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Shape {
            expected: a,
            actual: b,
        });
    }
    if a == 0 {
        return Err(Error::Domain("metric over an empty list".into()));
    }
    Ok(())
}

/// Recall of every class occurring in `y_true`.
pub fn per_class_recall<T: AsRef<str>, P: AsRef<str>>(
    y_true: &[T],
    y_pred: &[P],
) -> Result<BTreeMap<String, f64>> {
    check_lengths(y_true.len(), y_pred.len())?;
    let mut hits: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (t, p) in y_true.iter().zip(y_pred) {
        let slot = hits.entry(t.as_ref()).or_default();
        slot.1 += 1;
        if t.as_ref() == p.as_ref() {
            slot.0 += 1;
        }
    }
    Ok(hits
        .into_iter()
        .map(|(c, (hit, total))| (c.to_string(), hit as f64 / total as f64))
        .collect())
}

/// Unweighted mean of per-class recall.
pub fn balanced_accuracy<T: AsRef<str>, P: AsRef<str>>(y_true: &[T], y_pred: &[P]) -> Result<f64> {
    let recalls = per_class_recall(y_true, y_pred)?;
    Ok(recalls.values().sum::<f64>() / recalls.len() as f64)
}

pub fn accuracy<T: AsRef<str>, P: AsRef<str>>(y_true: &[T], y_pred: &[P]) -> Result<f64> {
    check_lengths(y_true.len(), y_pred.len())?;
    let hits = y_true
        .iter()
        .zip(y_pred)
        .filter(|(t, p)| t.as_ref() == p.as_ref())
        .count();
    Ok(hits as f64 / y_true.len() as f64)
}

/// AP@K: sum of precision@i over relevant positions `i <= k`, divided by
/// `min(k, R)` where `R` counts relevant items in the whole list. Zero when
/// nothing is relevant.
pub fn average_precision_at_k(ranked_relevance: &[bool], k: usize) -> Result<f64> {
    if k == 0 || k > ranked_relevance.len() {
        return Err(Error::Cutoff {
            k,
            len: ranked_relevance.len(),
        });
    }
    let total_relevant = ranked_relevance.iter().filter(|r| **r).count();
    if total_relevant == 0 {
        return Ok(0.0);
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, _) in ranked_relevance[..k]
        .iter()
        .enumerate()
        .filter(|(_, r)| **r)
    {
        hits += 1;
        sum += hits as f64 / (i + 1) as f64;
    }
    Ok(sum / k.min(total_relevant) as f64)
}

/// Mean of AP@K over `cutoffs`.
pub fn mean_ap(ranked_relevance: &[bool], cutoffs: &[usize]) -> Result<f64> {
    if cutoffs.is_empty() {
        return Err(Error::Domain("mAP needs at least one cutoff".into()));
    }
    let total = cutoffs
        .iter()
        .map(|&k| average_precision_at_k(ranked_relevance, k))
        .sum::<Result<f64>>()?;
    Ok(total / cutoffs.len() as f64)
}

/// Orders samples by descending score (ties by id) and returns the
/// relevance flags in that order.
pub fn relevance_by_score<F>(scored: &[(SampleId, f64)], is_relevant: F) -> Vec<bool>
where
    F: Fn(&SampleId) -> bool,
{
    let mut order: Vec<&(SampleId, f64)> = scored.iter().collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    order.into_iter().map(|(id, _)| is_relevant(id)).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metrics: BTreeMap<String, f64>,
    pub per_class_recall: BTreeMap<String, f64>,
    pub cutoffs: Vec<usize>,
    pub notes: Vec<String>,
}

/// Positive-class scores, the relevant ids and the AP@K cutoffs.
pub type Ranking<'a> = (&'a [(SampleId, f64)], &'a BTreeSet<SampleId>, &'a [usize]);

impl MetricReport {
    /// Classification metrics plus, when `ranking` is given as
    /// `(scores for the positive class, positive class, cutoffs)`, AP@K per
    /// usable cutoff and their mean.
    pub fn evaluate<T: AsRef<str>, P: AsRef<str>>(
        y_true: &[T],
        y_pred: &[P],
        ranking: Option<Ranking<'_>>,
    ) -> Result<Self> {
        let mut report = MetricReport {
            per_class_recall: per_class_recall(y_true, y_pred)?,
            ..MetricReport::default()
        };
        report.metrics.insert(
            "balanced_accuracy".into(),
            balanced_accuracy(y_true, y_pred)?,
        );
        report
            .metrics
            .insert("accuracy".into(), accuracy(y_true, y_pred)?);
        if let Some((scores, relevant, cutoffs)) = ranking {
            let rel = relevance_by_score(scores, |id| relevant.contains(id));
            for &k in cutoffs {
                if k > rel.len() || k == 0 {
                    report
                        .notes
                        .push(format!("AP@{k} skipped: only {} ranked samples", rel.len()));
                    continue;
                }
                report
                    .metrics
                    .insert(format!("ap@{k}"), average_precision_at_k(&rel, k)?);
                report.cutoffs.push(k);
            }
            if !report.cutoffs.is_empty() {
                report
                    .metrics
                    .insert("map".into(), mean_ap(&rel, &report.cutoffs)?);
            }
            report
                .notes
                .push("AP@K divides by min(K, total relevant)".into());
        }
        Ok(report)
    }

    pub fn get(&self, metric: &str) -> Option<f64> {
        self.metrics.get(metric).copied()
    }

    /// Flat `metric,value` table; per-class recalls appear as
    /// `recall[<class>]`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        for (k, v) in &self.metrics {
            let _ = writeln!(out, "{k},{v}");
        }
        for (c, v) in &self.per_class_recall {
            let _ = writeln!(out, "recall[{c}],{v}");
        }
        out
    }

    /// Writes `<stem>.json` and `<stem>.csv` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json = dir.join(format!("{stem}.json"));
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))?;
        fs::write(&json, text + "\n").map_err(|e| Error::io(&json, e))?;
        let csv = dir.join(format!("{stem}.csv"));
        fs::write(&csv, self.to_csv()).map_err(|e| Error::io(&csv, e))
    }
}
