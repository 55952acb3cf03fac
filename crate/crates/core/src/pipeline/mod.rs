//! Config-driven experiment runner.
//!
//! Training runs in four stages (`ranks`, `graphs`, `embed`, `train`). Each
//! stage writes artifact files into the output directory and records their
//! digests in `manifest.json`, together with a digest of the configuration
//! and input files. Later stages and inference refuse to run against a
//! manifest produced from different settings.

mod audit;
mod baselines;
mod config;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use audit::{audit_model, audit_output, HygieneReport};
pub use baselines::{baselines_on_split, run_baselines, BaselineReport};
pub use config::{DescriptorSource, EmbeddingConfig, PipelineConfig, SplitConfig};

use crate::dataset::{
    digest_bytes, digest_file, load_features, load_id_list, load_labels, persist, read_artifact,
    stratified_split, write_artifact, Artifact, FeatureTable, LabelTable, SampleId, SplitSpec,
};
use crate::embedding::{
    build_codebook, embed_h, embed_k, embed_v, extract_gois, Codebook, EmbeddingKind, FusionVector,
    Goi, VocabularyV,
};
use crate::error::{Error, Result};
use crate::evalx::MetricReport;
use crate::fusion_graph::{extract_fusion_graph, FusionGraph};
use crate::learn::{predict_label, predict_proba, train_classifier, Estimator};
use crate::ranker::{build_rank_store, rank_query, response_tables, Rank, RankStore};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const PREDICTIONS_FILE: &str = "predictions.csv";

/// A training sample's embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledVector {
    pub id: SampleId,
    pub vector: FusionVector,
}

impl Artifact for LabeledVector {
    const KIND: &'static str = "labeled_vector";
}

/// Loaded descriptor tables and labels, plus digests of the files they
/// came from.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub tables: BTreeMap<String, FeatureTable>,
    pub labels: LabelTable,
    pub digests: BTreeMap<String, String>,
    /// Explicit split lists, when the config names them.
    pub explicit_split: Option<(Vec<SampleId>, Vec<SampleId>)>,
}

impl Inputs {
    pub fn load(cfg: &PipelineConfig) -> Result<Self> {
        let mut tables = BTreeMap::new();
        let mut digests = BTreeMap::new();
        for d in &cfg.descriptors {
            let path = cfg.resolve(&d.path);
            tables.insert(d.name.clone(), load_features(&path, &d.name)?);
            digests.insert(format!("descriptor:{}", d.name), digest_file(&path)?);
        }
        let label_path = cfg.resolve(&cfg.labels);
        let labels = load_labels(&label_path)?;
        digests.insert("labels".into(), digest_file(&label_path)?);
        let explicit_split = match &cfg.split {
            SplitConfig::Stratified { .. } => None,
            SplitConfig::Explicit {
                train_ids,
                test_ids,
            } => {
                let (train, test) = (cfg.resolve(train_ids), cfg.resolve(test_ids));
                digests.insert("split:train".into(), digest_file(&train)?);
                digests.insert("split:test".into(), digest_file(&test)?);
                Some((load_id_list(&train)?, load_id_list(&test)?))
            }
        };
        Ok(Inputs {
            tables,
            labels,
            digests,
            explicit_split,
        })
    }

    /// In-memory inputs; digests are empty.
    pub fn from_parts(tables: Vec<FeatureTable>, labels: LabelTable) -> Self {
        Inputs {
            tables: tables
                .into_iter()
                .map(|t| (t.descriptor_name().to_string(), t))
                .collect(),
            labels,
            digests: BTreeMap::new(),
            explicit_split: None,
        }
    }

    /// The table behind each ranker, in ranker order.
    pub fn ranker_tables(&self, cfg: &PipelineConfig) -> Result<Vec<&FeatureTable>> {
        cfg.rankers
            .iter()
            .map(|r| {
                self.tables.get(&r.descriptor).ok_or_else(|| {
                    Error::Config(format!("no table loaded for descriptor `{}`", r.descriptor))
                })
            })
            .collect()
    }

    fn labels_of(&self, ids: &[SampleId]) -> Result<Vec<String>> {
        ids.iter()
            .map(|id| self.labels.require(id).map(str::to_string))
            .collect()
    }
}

/// Train/test partition from the config: stratified over all labeled
/// samples, or the explicit lists.
pub fn make_split(cfg: &PipelineConfig, inputs: &Inputs) -> Result<SplitSpec> {
    match (&cfg.split, &inputs.explicit_split) {
        (SplitConfig::Stratified { train_fraction }, _) => {
            stratified_split(&inputs.labels, *train_fraction, cfg.seed)
        }
        (SplitConfig::Explicit { .. }, Some((train, test))) => {
            let train: BTreeSet<SampleId> = train.iter().cloned().collect();
            for id in &train {
                inputs.labels.require(id)?;
            }
            SplitSpec::new(train, test.iter().cloned().collect(), cfg.seed)
        }
        (SplitConfig::Explicit { .. }, None) => Err(Error::Config(
            "explicit split configured but no id lists were loaded".into(),
        )),
    }
}

/// Digest identifying everything that shapes the trained model: settings
/// and input file contents. Output location, sweep values and evaluation
/// cut-offs are excluded.
pub fn config_digest(cfg: &PipelineConfig, inputs: &Inputs) -> Result<String> {
    #[derive(Serialize)]
    struct Fingerprint<'a> {
        rankers: &'a [crate::ranker::Ranker],
        cutoff: usize,
        include_self: bool,
        embedding: &'a EmbeddingConfig,
        train: crate::learn::TrainConfig,
        split: &'a SplitConfig,
        seed: u64,
        inputs: &'a BTreeMap<String, String>,
    }
    let fp = Fingerprint {
        rankers: &cfg.rankers,
        cutoff: cfg.cutoff,
        include_self: cfg.include_self,
        embedding: &cfg.embedding,
        train: cfg.train_config(),
        split: &cfg.split,
        seed: cfg.seed,
        inputs: &inputs.digests,
    };
    let bytes = serde_json::to_vec(&fp).map_err(|e| Error::Format(e.to_string()))?;
    Ok(digest_bytes(&bytes))
}

/// Digest of a split, as stored in `split.jsonl`.
pub fn split_digest(split: &SplitSpec) -> Result<String> {
    Ok(digest_bytes(
        persist(std::slice::from_ref(split))?.as_bytes(),
    ))
}

/// Ranks of every train sample against the train set.
pub fn build_store(
    cfg: &PipelineConfig,
    inputs: &Inputs,
    train_ids: &[SampleId],
) -> Result<RankStore> {
    let tables = inputs.ranker_tables(cfg)?;
    build_rank_store(
        &tables,
        &cfg.rankers,
        train_ids,
        cfg.cutoff,
        cfg.include_self,
    )
}

/// One fusion graph per stored query, in id order.
pub fn build_graphs(store: &RankStore) -> Result<Vec<FusionGraph>> {
    let ids: Vec<&SampleId> = store.ids().collect();
    ids.par_iter()
        .map(|id| {
            let ranks = store
                .ranks_of(id)
                .ok_or_else(|| Error::IncompleteStore(format!("no ranks for `{id}`")))?;
            extract_fusion_graph(ranks, store)
        })
        .collect()
}

/// Turns fusion graphs into fusion vectors of the configured kind.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedder {
    pub kind: EmbeddingKind,
    pub vocab: VocabularyV,
    pub codebook: Option<Codebook>,
}

impl Embedder {
    /// Fits the vocabulary (and the codebook for FV-K) on training graphs.
    pub fn fit(
        cfg: &EmbeddingConfig,
        train_ids: Vec<SampleId>,
        graphs: &[FusionGraph],
        seed: u64,
    ) -> Result<Self> {
        let vocab = VocabularyV::new(train_ids)?;
        let codebook = match cfg.kind {
            EmbeddingKind::K => {
                let gois: Vec<Goi> = graphs
                    .iter()
                    .flat_map(|g| extract_gois(g, cfg.codebook.neighborhood))
                    .collect();
                Some(build_codebook(&gois, &cfg.codebook, seed)?)
            }
            _ => None,
        };
        Ok(Embedder {
            kind: cfg.kind,
            vocab,
            codebook,
        })
    }

    pub fn dim(&self) -> usize {
        match (self.kind, &self.codebook) {
            (EmbeddingKind::V, _) => self.vocab.len(),
            (EmbeddingKind::H, _) => self.vocab.hybrid_dim(),
            (EmbeddingKind::K, Some(c)) => c.dim(),
            (EmbeddingKind::K, None) => 0,
        }
    }

    pub fn embed(&self, g: &FusionGraph) -> Result<FusionVector> {
        match self.kind {
            EmbeddingKind::V => embed_v(g, &self.vocab),
            EmbeddingKind::H => embed_h(g, &self.vocab),
            EmbeddingKind::K => {
                let codebook = self.codebook.as_ref().ok_or_else(|| {
                    Error::Compatibility("FV-K embedder without a codebook".into())
                })?;
                embed_k(g, codebook)
            }
        }
    }

    pub fn embed_all(&self, graphs: &[FusionGraph]) -> Result<Vec<LabeledVector>> {
        graphs
            .par_iter()
            .map(|g| {
                Ok(LabeledVector {
                    id: g.query().clone(),
                    vector: self.embed(g)?,
                })
            })
            .collect()
    }
}

/// Grid-searched estimator over labeled training vectors.
pub fn fit_on_vectors(
    cfg: &PipelineConfig,
    inputs: &Inputs,
    vectors: &[LabeledVector],
) -> Result<Estimator> {
    let ids: Vec<SampleId> = vectors.iter().map(|v| v.id.clone()).collect();
    let y = inputs.labels_of(&ids)?;
    let x: Vec<&FusionVector> = vectors.iter().map(|v| &v.vector).collect();
    train_classifier(&x, &y, &cfg.train_config())
}

/// Everything learned from the training split.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub split: SplitSpec,
    pub store: RankStore,
    pub graphs: Vec<FusionGraph>,
    pub embedder: Embedder,
    pub vectors: Vec<LabeledVector>,
    pub estimator: Estimator,
}

impl TrainedModel {
    pub fn train_ids(&self) -> Vec<SampleId> {
        self.split.train.iter().cloned().collect()
    }
}

/// Runs all training stages in memory.
pub fn train_model(
    cfg: &PipelineConfig,
    inputs: &Inputs,
    split: &SplitSpec,
) -> Result<TrainedModel> {
    let train_ids: Vec<SampleId> = split.train.iter().cloned().collect();
    let store = build_store(cfg, inputs, &train_ids).map_err(Error::in_stage("ranks"))?;
    let graphs = build_graphs(&store).map_err(Error::in_stage("graphs"))?;
    let embedder = Embedder::fit(&cfg.embedding, train_ids, &graphs, cfg.seed)
        .map_err(Error::in_stage("embed"))?;
    let vectors = embedder
        .embed_all(&graphs)
        .map_err(Error::in_stage("embed"))?;
    let estimator = fit_on_vectors(cfg, inputs, &vectors).map_err(Error::in_stage("train"))?;
    Ok(TrainedModel {
        split: split.clone(),
        store,
        graphs,
        embedder,
        vectors,
        estimator,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub id: SampleId,
    pub label: String,
    /// In estimator class order.
    pub probabilities: Vec<f64>,
}

/// Ranks each query against the stored responses, builds and embeds its
/// fusion graph, and classifies it.
pub fn predict(
    cfg: &PipelineConfig,
    inputs: &Inputs,
    store: &RankStore,
    embedder: &Embedder,
    estimator: &Estimator,
    ids: &[SampleId],
) -> Result<Vec<Prediction>> {
    let tables = inputs.ranker_tables(cfg)?;
    let response_ids: Vec<SampleId> = store.ids().cloned().collect();
    let responses = response_tables(&tables, &cfg.rankers, &response_ids)?;
    ids.par_iter()
        .map(|id| {
            let vecs: Vec<&[f64]> = tables
                .iter()
                .map(|t| t.require_row(id))
                .collect::<Result<_>>()?;
            let exclude = (!cfg.include_self).then_some(id);
            let ranks = rank_query(id, &vecs, &responses, &cfg.rankers, store.cutoff(), exclude)?;
            let graph = extract_fusion_graph(&ranks, store)?;
            let vector = embedder.embed(&graph)?;
            let probabilities = predict_proba(estimator, vector.as_sparse())?;
            Ok(Prediction {
                id: id.clone(),
                label: predict_label(estimator, vector.as_sparse())?.to_string(),
                probabilities,
            })
        })
        .collect()
}

/// Metrics for predictions whose samples all carry labels. `None` when
/// there is nothing to score.
pub fn score_predictions(
    cfg: &PipelineConfig,
    labels: &LabelTable,
    classes: &[String],
    predictions: &[Prediction],
) -> Result<Option<MetricReport>> {
    if predictions.is_empty() || predictions.iter().any(|p| labels.get(&p.id).is_none()) {
        return Ok(None);
    }
    let y_true: Vec<&str> = predictions
        .iter()
        .map(|p| labels.require(&p.id))
        .collect::<Result<_>>()?;
    let y_pred: Vec<&str> = predictions.iter().map(|p| p.label.as_str()).collect();
    let positive = match &cfg.positive_class {
        Some(c) => Some(c.clone()),
        None if classes.len() == 2 => Some(classes[1].clone()),
        None => None,
    };
    let ranking = match positive {
        Some(c) if !cfg.cutoffs.is_empty() => {
            let col = classes.iter().position(|k| *k == c).ok_or_else(|| {
                Error::Config(format!("positive class `{c}` is not a known class"))
            })?;
            let scores: Vec<(SampleId, f64)> = predictions
                .iter()
                .map(|p| (p.id.clone(), p.probabilities[col]))
                .collect();
            let relevant: BTreeSet<SampleId> = predictions
                .iter()
                .filter(|p| labels.get(&p.id) == Some(c.as_str()))
                .map(|p| p.id.clone())
                .collect();
            Some((scores, relevant))
        }
        _ => None,
    };
    let report = MetricReport::evaluate(
        &y_true,
        &y_pred,
        ranking
            .as_ref()
            .map(|(s, r)| (s.as_slice(), r, cfg.cutoffs.as_slice())),
    )?;
    Ok(Some(report))
}

/// Trains on `split.train`, predicts `split.test`, and scores the result.
pub fn evaluate_split(
    cfg: &PipelineConfig,
    inputs: &Inputs,
    split: &SplitSpec,
) -> Result<(TrainedModel, Vec<Prediction>, Option<MetricReport>)> {
    let model = train_model(cfg, inputs, split)?;
    let test: Vec<SampleId> = split.test.iter().cloned().collect();
    let preds = predict(
        cfg,
        inputs,
        &model.store,
        &model.embedder,
        &model.estimator,
        &test,
    )
    .map_err(Error::in_stage("infer"))?;
    let report = score_predictions(cfg, &inputs.labels, &model.estimator.classes, &preds)?;
    Ok((model, preds, report))
}

/// Artifact digests of one output directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_digest: String,
    pub split_digest: String,
    /// File name to sha256.
    pub artifacts: BTreeMap<String, String>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }

    /// Checks the config digest and that every listed artifact still has
    /// its recorded digest.
    fn verify(&self, dir: &Path, expected_config: &str) -> Result<()> {
        if self.config_digest != expected_config {
            return Err(Error::Compatibility(format!(
                "{} was produced with a different configuration or inputs",
                dir.display()
            )));
        }
        for (name, digest) in &self.artifacts {
            if digest_file(dir.join(name))? != *digest {
                return Err(Error::Compatibility(format!(
                    "artifact {name} changed since it was written"
                )));
            }
        }
        Ok(())
    }

    fn require(&self, name: &str) -> Result<()> {
        if self.artifacts.contains_key(name) {
            Ok(())
        } else {
            Err(Error::Compatibility(format!(
                "artifact {name} is missing; run the earlier stages first"
            )))
        }
    }

    fn record<T: Artifact>(&mut self, dir: &Path, name: &str, records: &[T]) -> Result<()> {
        let digest = write_artifact(dir.join(name), records)?;
        self.artifacts.insert(name.to_string(), digest);
        Ok(())
    }

    fn drop_after(&mut self, stage: Stage) {
        let keep: &[&str] = match stage {
            Stage::Ranks => &["split.jsonl", "ranks.jsonl"],
            Stage::Graphs => &["split.jsonl", "ranks.jsonl", "graphs.jsonl"],
            Stage::Embed => &[
                "split.jsonl",
                "ranks.jsonl",
                "graphs.jsonl",
                "vocabulary.jsonl",
                "codebook.jsonl",
                "vectors.jsonl",
            ],
            Stage::Train => return,
        };
        self.artifacts.retain(|k, _| keep.contains(&k.as_str()));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ranks,
    Graphs,
    Embed,
    Train,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Ranks, Stage::Graphs, Stage::Embed, Stage::Train];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ranks => "ranks",
            Stage::Graphs => "graphs",
            Stage::Embed => "embed",
            Stage::Train => "train",
        }
    }
}

fn read_single<T: Artifact>(dir: &Path, name: &str) -> Result<T> {
    let mut records: Vec<T> = read_artifact(dir.join(name))?;
    if records.len() != 1 {
        return Err(Error::Format(format!(
            "{name} must hold exactly one record, found {}",
            records.len()
        )));
    }
    Ok(records.remove(0))
}

fn read_store(cfg: &PipelineConfig, dir: &Path) -> Result<RankStore> {
    let ranks: Vec<Rank> = read_artifact(dir.join("ranks.jsonl"))?;
    RankStore::from_ranks(cfg.rankers.len(), cfg.cutoff, ranks)
}

fn read_embedder(cfg: &PipelineConfig, dir: &Path, manifest: &Manifest) -> Result<Embedder> {
    manifest.require("vocabulary.jsonl")?;
    let vocab: VocabularyV = read_single(dir, "vocabulary.jsonl")?;
    let codebook = match cfg.embedding.kind {
        EmbeddingKind::K => {
            manifest.require("codebook.jsonl")?;
            Some(read_single(dir, "codebook.jsonl")?)
        }
        _ => None,
    };
    Ok(Embedder {
        kind: cfg.embedding.kind,
        vocab,
        codebook,
    })
}

fn open_manifest(cfg: &PipelineConfig, inputs: &Inputs) -> Result<(PathBuf, Manifest)> {
    let dir = cfg.out_dir();
    let manifest = Manifest::load(&dir)?;
    manifest.verify(&dir, &config_digest(cfg, inputs)?)?;
    Ok((dir, manifest))
}

fn stage_body(cfg: &PipelineConfig, inputs: &Inputs, stage: Stage) -> Result<Manifest> {
    if stage == Stage::Ranks {
        let dir = cfg.out_dir();
        let split = make_split(cfg, inputs)?;
        let train_ids: Vec<SampleId> = split.train.iter().cloned().collect();
        let store = build_store(cfg, inputs, &train_ids)?;
        let mut manifest = Manifest {
            config_digest: config_digest(cfg, inputs)?,
            split_digest: split_digest(&split)?,
            artifacts: BTreeMap::new(),
        };
        manifest.record(&dir, "split.jsonl", &[split])?;
        let ranks: Vec<Rank> = store.iter().cloned().collect();
        manifest.record(&dir, "ranks.jsonl", &ranks)?;
        return Ok(manifest);
    }
    let (dir, mut manifest) = open_manifest(cfg, inputs)?;
    manifest.drop_after(stage);
    match stage {
        Stage::Ranks => unreachable!(),
        Stage::Graphs => {
            manifest.require("ranks.jsonl")?;
            let graphs = build_graphs(&read_store(cfg, &dir)?)?;
            manifest.record(&dir, "graphs.jsonl", &graphs)?;
        }
        Stage::Embed => {
            manifest.require("graphs.jsonl")?;
            let split: SplitSpec = read_single(&dir, "split.jsonl")?;
            let graphs: Vec<FusionGraph> = read_artifact(dir.join("graphs.jsonl"))?;
            let embedder = Embedder::fit(
                &cfg.embedding,
                split.train.iter().cloned().collect(),
                &graphs,
                cfg.seed,
            )?;
            let vectors = embedder.embed_all(&graphs)?;
            manifest.record(&dir, "vocabulary.jsonl", &[embedder.vocab])?;
            if let Some(c) = embedder.codebook {
                manifest.record(&dir, "codebook.jsonl", &[c])?;
            }
            manifest.record(&dir, "vectors.jsonl", &vectors)?;
        }
        Stage::Train => {
            manifest.require("vectors.jsonl")?;
            let vectors: Vec<LabeledVector> = read_artifact(dir.join("vectors.jsonl"))?;
            let estimator = fit_on_vectors(cfg, inputs, &vectors)?;
            manifest.record(&dir, "estimator.jsonl", &[estimator])?;
        }
    }
    Ok(manifest)
}

/// Runs one training stage against the output directory.
pub fn run_stage(cfg: &PipelineConfig, stage: Stage) -> Result<Manifest> {
    let inputs = Inputs::load(cfg)?;
    run_stage_with(cfg, &inputs, stage)
}

fn run_stage_with(cfg: &PipelineConfig, inputs: &Inputs, stage: Stage) -> Result<Manifest> {
    log::info!("stage {}", stage.name());
    let manifest = stage_body(cfg, inputs, stage).map_err(Error::in_stage(stage.name()))?;
    manifest.save(&cfg.out_dir())?;
    Ok(manifest)
}

/// Runs every training stage in order.
pub fn run_training(cfg: &PipelineConfig) -> Result<Manifest> {
    let inputs = Inputs::load(cfg)?;
    let mut manifest = Manifest::default();
    for stage in Stage::ALL {
        manifest = run_stage_with(cfg, &inputs, stage)?;
    }
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceOutcome {
    pub classes: Vec<String>,
    pub predictions: Vec<Prediction>,
    pub report: Option<MetricReport>,
}

/// Predicts `ids` (default: the test split) with the trained artifacts,
/// writes `predictions.csv`, and `report.json`/`report.csv` when every
/// predicted sample is labeled.
pub fn run_inference(cfg: &PipelineConfig, ids: Option<Vec<SampleId>>) -> Result<InferenceOutcome> {
    let inputs = Inputs::load(cfg)?;
    let body = || -> Result<InferenceOutcome> {
        let (dir, manifest) = open_manifest(cfg, &inputs)?;
        manifest.require("estimator.jsonl")?;
        let split: SplitSpec = read_single(&dir, "split.jsonl")?;
        let store = read_store(cfg, &dir)?;
        let embedder = read_embedder(cfg, &dir, &manifest)?;
        let estimator: Estimator = read_single(&dir, "estimator.jsonl")?;
        let ids = ids.unwrap_or_else(|| split.test.iter().cloned().collect());
        let predictions = predict(cfg, &inputs, &store, &embedder, &estimator, &ids)?;
        write_predictions(
            &dir.join(PREDICTIONS_FILE),
            &estimator.classes,
            &predictions,
        )?;
        let report = score_predictions(cfg, &inputs.labels, &estimator.classes, &predictions)?;
        if let Some(r) = &report {
            r.write(&dir, "report")?;
        }
        Ok(InferenceOutcome {
            classes: estimator.classes,
            predictions,
            report,
        })
    };
    body().map_err(Error::in_stage("infer"))
}

/// `id,predicted,p[<class>]...`, one row per prediction. An empty list
/// still gets the header.
pub fn write_predictions(
    path: &Path,
    classes: &[String],
    predictions: &[Prediction],
) -> Result<()> {
    let mut out = String::from("id,predicted");
    for c in classes {
        let _ = write!(out, ",p[{c}]");
    }
    out.push('\n');
    for p in predictions {
        let _ = write!(out, "{},{}", p.id, p.label);
        for v in &p.probabilities {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Inverse of [`write_predictions`]: classes and predictions.
pub fn read_predictions(path: &Path) -> Result<(Vec<String>, Vec<Prediction>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing header".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 2 || cols[0] != "id" || cols[1] != "predicted" {
        return Err(parse_err(1, format!("unexpected header `{header}`")));
    }
    let classes = cols[2..]
        .iter()
        .map(|c| {
            c.strip_prefix("p[")
                .and_then(|c| c.strip_suffix(']'))
                .map(str::to_string)
                .ok_or_else(|| parse_err(1, format!("bad probability column `{c}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut predictions = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(parse_err(i + 2, format!("expected {} fields", cols.len())));
        }
        let probabilities = fields[2..]
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| parse_err(i + 2, e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        predictions.push(Prediction {
            id: SampleId::new(fields[0]),
            label: fields[1].to_string(),
            probabilities,
        });
    }
    Ok((classes, predictions))
}

/// Scores an existing `predictions.csv` against the labels.
pub fn run_evaluate(cfg: &PipelineConfig) -> Result<Option<MetricReport>> {
    let labels = load_labels(cfg.resolve(&cfg.labels))?;
    let dir = cfg.out_dir();
    let (classes, predictions) = read_predictions(&dir.join(PREDICTIONS_FILE))?;
    let report = score_predictions(cfg, &labels, &classes, &predictions)?;
    match &report {
        Some(r) => r.write(&dir, "report")?,
        None => log::warn!("nothing to evaluate: predictions are empty or unlabeled"),
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub cutoff: usize,
    pub report: Option<MetricReport>,
}

/// Retrains and evaluates the pipeline for every L in `cfg.sweep_l` on a
/// shared split, writing `sweep_l.csv`.
pub fn run_sweep(cfg: &PipelineConfig) -> Result<Vec<SweepPoint>> {
    let inputs = Inputs::load(cfg)?;
    let split = make_split(cfg, &inputs)?;
    let points = sweep_on_split(cfg, &inputs, &split)?;
    let names: BTreeSet<&String> = points
        .iter()
        .filter_map(|p| p.report.as_ref())
        .flat_map(|r| r.metrics.keys())
        .collect();
    let mut out = String::from("L");
    for n in &names {
        let _ = write!(out, ",{n}");
    }
    out.push('\n');
    for p in &points {
        let _ = write!(out, "{}", p.cutoff);
        for n in &names {
            let v = p.report.as_ref().and_then(|r| r.get(n));
            let _ = write!(out, ",{}", v.map(|v| v.to_string()).unwrap_or_default());
        }
        out.push('\n');
    }
    let dir = cfg.out_dir();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let path = dir.join("sweep_l.csv");
    fs::write(&path, out).map_err(|e| Error::io(&path, e))?;
    Ok(points)
}

/// In-memory L sweep.
pub fn sweep_on_split(
    cfg: &PipelineConfig,
    inputs: &Inputs,
    split: &SplitSpec,
) -> Result<Vec<SweepPoint>> {
    cfg.sweep_l
        .iter()
        .map(|&l| {
            log::info!("sweep: L = {l}");
            let cfg = PipelineConfig {
                cutoff: l,
                ..cfg.clone()
            };
            let (_, _, report) = evaluate_split(&cfg, inputs, split)?;
            Ok(SweepPoint { cutoff: l, report })
        })
        .collect()
}
