use std::collections::BTreeSet;

use super::{read_single, LabeledVector, PipelineConfig, TrainedModel};
use crate::dataset::{read_artifact, SampleId, SplitSpec};
use crate::embedding::{Codebook, EmbeddingKind, VocabularyV};
use crate::error::Result;
use crate::fusion_graph::FusionGraph;
use crate::ranker::Rank;

/// Places where a test sample leaked into something learned from the
/// training split.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HygieneReport {
    pub violations: Vec<String>,
}

impl HygieneReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    fn check<'a>(
        &mut self,
        test: &BTreeSet<SampleId>,
        what: &str,
        ids: impl IntoIterator<Item = &'a SampleId>,
    ) {
        for id in ids {
            if test.contains(id) {
                self.violations
                    .push(format!("test sample `{id}` found in {what}"));
            }
        }
    }
}

fn audit_parts<'a>(
    test: &BTreeSet<SampleId>,
    ranks: impl IntoIterator<Item = &'a Rank>,
    graphs: &[FusionGraph],
    vocab: &VocabularyV,
    codebook: Option<&Codebook>,
    vectors: &[LabeledVector],
) -> HygieneReport {
    let mut report = HygieneReport::default();
    for r in ranks {
        report.check(test, "rank queries", [&r.query]);
        report.check(
            test,
            "rank responses",
            r.entries.iter().map(|e| &e.response),
        );
    }
    for g in graphs {
        report.check(test, "training graph queries", [g.query()]);
        report.check(
            test,
            "training graph vertices",
            g.vertices().iter().map(|v| &v.0),
        );
    }
    report.check(test, "the vocabulary", vocab.ids());
    if let Some(c) = codebook {
        for w in &c.words {
            report.check(test, "codebook words", w.vertices().iter().map(|v| &v.0));
        }
    }
    report.check(test, "training vectors", vectors.iter().map(|v| &v.id));
    report
}

/// Checks that no test sample reached the store, training graphs,
/// vocabulary, codebook or training vectors of an in-memory model.
pub fn audit_model(model: &TrainedModel, test: &BTreeSet<SampleId>) -> HygieneReport {
    audit_parts(
        test,
        model.store.iter(),
        &model.graphs,
        &model.embedder.vocab,
        model.embedder.codebook.as_ref(),
        &model.vectors,
    )
}

/// Same audit over the artifacts in the output directory, against the
/// test ids of the stored split.
pub fn audit_output(cfg: &PipelineConfig) -> Result<HygieneReport> {
    let dir = cfg.out_dir();
    let split: SplitSpec = read_single(&dir, "split.jsonl")?;
    let ranks: Vec<Rank> = read_artifact(dir.join("ranks.jsonl"))?;
    let graphs: Vec<FusionGraph> = read_artifact(dir.join("graphs.jsonl"))?;
    let vocab: VocabularyV = read_single(&dir, "vocabulary.jsonl")?;
    let codebook: Option<Codebook> = match cfg.embedding.kind {
        EmbeddingKind::K => Some(read_single(&dir, "codebook.jsonl")?),
        _ => None,
    };
    let vectors: Vec<LabeledVector> = read_artifact(dir.join("vectors.jsonl"))?;
    Ok(audit_parts(
        &split.test,
        &ranks,
        &graphs,
        &vocab,
        codebook.as_ref(),
        &vectors,
    ))
}
