use std::collections::BTreeMap;
use std::fs;

use serde::{Deserialize, Serialize};

use super::{make_split, score_predictions, split_digest, Inputs, PipelineConfig, Prediction};
use crate::dataset::{FeatureTable, SampleId, SplitSpec};
use crate::error::{Error, Result};
use crate::evalx::MetricReport;
use crate::learn::{
    concat_features, majority_vote, predict_label, predict_proba, train_classifier, MinMaxScaler,
};
use crate::sparse::SparseVector;

/// Scores of the single-descriptor, early-fusion and late-fusion
/// baselines on one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub split_digest: String,
    pub methods: BTreeMap<String, MetricReport>,
    pub notes: Vec<String>,
    /// Scalers fitted for each method, kept for leakage audits.
    #[serde(skip)]
    pub scalers: Vec<(String, MinMaxScaler)>,
}

struct Fitted {
    predictions: Vec<Prediction>,
    classes: Vec<String>,
}

fn fit_predict(
    cfg: &PipelineConfig,
    inputs: &Inputs,
    table: &FeatureTable,
    scalers: &[MinMaxScaler],
    train: &[SampleId],
    test: &[SampleId],
) -> Result<Fitted> {
    let vector = |id: &SampleId| -> Result<SparseVector> {
        let row = table.require_row(id)?;
        match scalers {
            [s] => SparseVector::from_dense(&s.transform(row)),
            _ => SparseVector::from_dense(row),
        }
    };
    let x = train.iter().map(vector).collect::<Result<Vec<_>>>()?;
    let y = inputs.labels_of(train)?;
    let estimator = train_classifier(&x, &y, &cfg.train_config())?;
    let predictions = test
        .iter()
        .map(|id| {
            let v = vector(id)?;
            Ok(Prediction {
                id: id.clone(),
                label: predict_label(&estimator, &v)?.to_string(),
                probabilities: predict_proba(&estimator, &v)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Fitted {
        predictions,
        classes: estimator.classes,
    })
}

/// Trains every baseline on `split.train` and scores it on `split.test`.
///
/// Single-descriptor models see min-max normalized rows. Early fusion
/// concatenates the normalized distinct descriptors. Late fusion takes a
/// majority vote over one single-descriptor model per ranker and is only
/// defined for an odd number of rankers.
pub fn baselines_on_split(
    cfg: &PipelineConfig,
    inputs: &Inputs,
    split: &SplitSpec,
) -> Result<BaselineReport> {
    let train: Vec<SampleId> = split.train.iter().cloned().collect();
    let test: Vec<SampleId> = split.test.iter().cloned().collect();
    let mut report = BaselineReport {
        split_digest: split_digest(split)?,
        methods: BTreeMap::new(),
        notes: Vec::new(),
        scalers: Vec::new(),
    };
    if test.is_empty() {
        report
            .notes
            .push("empty test split: nothing to score".into());
        return Ok(report);
    }

    let mut distinct: Vec<&str> = Vec::new();
    for r in &cfg.rankers {
        if !distinct.contains(&r.descriptor.as_str()) {
            distinct.push(&r.descriptor);
        }
    }
    let mut single: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for name in &distinct {
        let table = inputs
            .tables
            .get(*name)
            .ok_or_else(|| Error::Config(format!("no table loaded for descriptor `{name}`")))?;
        let scaler = MinMaxScaler::fit(table, &train)?;
        let fitted = fit_predict(
            cfg,
            inputs,
            table,
            std::slice::from_ref(&scaler),
            &train,
            &test,
        )?;
        report.scalers.push((format!("single:{name}"), scaler));
        if let Some(r) =
            score_predictions(cfg, &inputs.labels, &fitted.classes, &fitted.predictions)?
        {
            report.methods.insert(format!("single:{name}"), r);
        }
        single.insert(
            name,
            fitted.predictions.into_iter().map(|p| p.label).collect(),
        );
    }

    if distinct.len() > 1 {
        let tables: Vec<&FeatureTable> = distinct.iter().map(|n| &inputs.tables[*n]).collect();
        let (joined, scalers) = concat_features(&tables, &train)?;
        let fitted = fit_predict(cfg, inputs, &joined, &[], &train, &test)?;
        for s in scalers {
            report.scalers.push(("concat".into(), s));
        }
        if let Some(r) =
            score_predictions(cfg, &inputs.labels, &fitted.classes, &fitted.predictions)?
        {
            report.methods.insert("concat".into(), r);
        }
    } else {
        report
            .notes
            .push("concat skipped: only one distinct descriptor".into());
    }

    if cfg.rankers.len() % 2 == 1 {
        let per_ranker: Vec<Vec<String>> = cfg
            .rankers
            .iter()
            .map(|r| single[r.descriptor.as_str()].clone())
            .collect();
        let voted = majority_vote(&per_ranker)?;
        if test.iter().all(|id| inputs.labels.get(id).is_some()) {
            let y = inputs.labels_of(&test)?;
            report.methods.insert(
                "majority_vote".into(),
                MetricReport::evaluate(&y, &voted, None)?,
            );
        }
    } else {
        report.notes.push(format!(
            "majority_vote skipped: needs an odd number of rankers, got {}",
            cfg.rankers.len()
        ));
    }
    for note in &report.notes {
        log::info!("{note}");
    }
    Ok(report)
}

/// Runs the baselines on the configured split and writes
/// `baselines.json`.
pub fn run_baselines(cfg: &PipelineConfig) -> Result<BaselineReport> {
    let inputs = Inputs::load(cfg)?;
    let split = make_split(cfg, &inputs)?;
    let report = baselines_on_split(cfg, &inputs, &split).map_err(Error::in_stage("baselines"))?;
    let dir = cfg.out_dir();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let path = dir.join("baselines.json");
    let text = serde_json::to_string_pretty(&report).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(report)
}
