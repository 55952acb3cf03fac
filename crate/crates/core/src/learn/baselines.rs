use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dataset::{FeatureTable, SampleId};
use crate::error::{Error, Result};

/// Per-attribute min-max statistics fitted on the train split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// Samples whose rows produced the statistics.
    pub fitted_on: Vec<SampleId>,
}

impl MinMaxScaler {
    pub fn fit(table: &FeatureTable, ids: &[SampleId]) -> Result<Self> {
        let dim = table.dim();
        let mut min = vec![f64::INFINITY; dim];
        let mut max = vec![f64::NEG_INFINITY; dim];
        for id in ids {
            for (k, &v) in table.require_row(id)?.iter().enumerate() {
                min[k] = min[k].min(v);
                max[k] = max[k].max(v);
            }
        }
        if ids.is_empty() {
            min.fill(0.0);
            max.fill(0.0);
        }
        Ok(MinMaxScaler {
            min,
            max,
            fitted_on: ids.to_vec(),
        })
    }

    /// Rescales into `[0, 1]`, clipping values outside the fitted range.
    /// Constant attributes map to 0.
    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(k, &v)| {
                let span = self.max[k] - self.min[k];
                if span > 0.0 {
                    ((v - self.min[k]) / span).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Early fusion: min-max normalizes each table with train-split statistics
/// and concatenates the rows side by side.
pub fn concat_features(
    tables: &[&FeatureTable],
    train_ids: &[SampleId],
) -> Result<(FeatureTable, Vec<MinMaxScaler>)> {
    let first = tables
        .first()
        .ok_or_else(|| Error::Alignment("no tables to concatenate".into()))?;
    let ids: BTreeSet<&SampleId> = first.ids().iter().collect();
    for t in &tables[1..] {
        let other: BTreeSet<&SampleId> = t.ids().iter().collect();
        if let Some(id) = ids.symmetric_difference(&other).next() {
            return Err(Error::Alignment(format!(
                "sample `{id}` is not present in both `{}` and `{}`",
                first.descriptor_name(),
                t.descriptor_name()
            )));
        }
    }
    let scalers = tables
        .iter()
        .map(|t| MinMaxScaler::fit(t, train_ids))
        .collect::<Result<Vec<_>>>()?;
    let name = tables
        .iter()
        .map(|t| t.descriptor_name())
        .collect::<Vec<_>>()
        .join("+");
    let dim = tables.iter().map(|t| t.dim()).sum();
    let rows = first.ids().iter().map(|id| {
        let row: Vec<f64> = tables
            .iter()
            .zip(&scalers)
            .flat_map(|(t, s)| s.transform(t.row(id).expect("aligned")))
            .collect();
        (id.clone(), row)
    });
    Ok((FeatureTable::from_rows(name, dim, rows)?, scalers))
}

/// Late fusion: per-sample modal label over an odd number of predictors.
/// When several labels share the top count, the earliest predictor voting
/// for one of them wins.
pub fn majority_vote(predictions: &[Vec<String>]) -> Result<Vec<String>> {
    if predictions.len().is_multiple_of(2) {
        return Err(Error::Arity(format!(
            "majority vote needs an odd number of predictors, got {}",
            predictions.len()
        )));
    }
    let len = predictions[0].len();
    if let Some(p) = predictions.iter().find(|p| p.len() != len) {
        return Err(Error::Shape {
            expected: len,
            actual: p.len(),
        });
    }
    Ok((0..len)
        .map(|i| {
            let votes: Vec<&String> = predictions.iter().map(|p| &p[i]).collect();
            let count = |l: &String| votes.iter().filter(|v| **v == l).count();
            let top = votes.iter().map(|l| count(l)).max().unwrap_or(0);
            votes
                .iter()
                .find(|l| count(l) == top)
                .map(|l| (*l).clone())
                .unwrap_or_default()
        })
        .collect())
}
