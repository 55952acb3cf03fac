mod common;

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use common::{id, write_toy};
use fusegraph::dataset::{read_artifact, SampleId, SplitSpec};
use fusegraph::embedding::{FusionVector, VocabularyV};
use fusegraph::fusion_graph::{extract_fusion_graph, FusionGraph};
use fusegraph::learn::Estimator;
use fusegraph::pipeline::{
    audit_model, audit_output, baselines_on_split, evaluate_split, make_split, read_predictions,
    run_baselines, run_evaluate, run_inference, run_stage, run_sweep, run_training, train_model,
    Inputs, LabeledVector, Manifest, PipelineConfig, Stage,
};
use fusegraph::ranker::{rank_query, response_tables, Rank};
use fusegraph::Error;

fn config(dir: &Path) -> PipelineConfig {
    PipelineConfig::load(dir.join("config.toml")).unwrap()
}

fn toy(n: usize, classes: usize, extra: &str) -> (tempfile::TempDir, PipelineConfig) {
    let dir = tempfile::tempdir().unwrap();
    write_toy(dir.path(), n, classes, extra);
    let cfg = config(dir.path());
    (dir, cfg)
}

fn assert_clean(cfg: &PipelineConfig) {
    let report = audit_output(cfg).unwrap();
    assert!(report.is_clean(), "{:?}", report.violations);
}

#[test]
fn toy_run_writes_valid_artifacts() {
    let (_dir, cfg) = toy(12, 2, "");
    let manifest = run_training(&cfg).unwrap();
    let out = cfg.out_dir();
    for name in [
        "split.jsonl",
        "ranks.jsonl",
        "graphs.jsonl",
        "vocabulary.jsonl",
        "vectors.jsonl",
        "estimator.jsonl",
    ] {
        assert!(manifest.artifacts.contains_key(name), "{name}");
    }
    assert!(!manifest.artifacts.contains_key("codebook.jsonl"));

    let split: Vec<SplitSpec> = read_artifact(out.join("split.jsonl")).unwrap();
    let train = &split[0].train;
    let ranks: Vec<Rank> = read_artifact(out.join("ranks.jsonl")).unwrap();
    assert_eq!(ranks.len(), train.len() * 2);
    assert!(ranks.iter().all(|r| r.entries.len() == 3 && r.normalized));
    let graphs: Vec<FusionGraph> = read_artifact(out.join("graphs.jsonl")).unwrap();
    assert_eq!(graphs.len(), train.len());
    let vocab: Vec<VocabularyV> = read_artifact(out.join("vocabulary.jsonl")).unwrap();
    assert_eq!(vocab[0].len(), train.len());
    let vectors: Vec<LabeledVector> = read_artifact(out.join("vectors.jsonl")).unwrap();
    assert!(vectors.iter().all(|v| v.vector.dim() == train.len()));
    let est: Vec<Estimator> = read_artifact(out.join("estimator.jsonl")).unwrap();
    assert_eq!(est[0].classes, ["c0", "c1"]);

    let outcome = run_inference(&cfg, None).unwrap();
    assert_eq!(outcome.predictions.len(), split[0].test.len());
    assert!(outcome.report.is_some());
    assert!(out.join("report.json").exists() && out.join("report.csv").exists());
    let (classes, preds) = read_predictions(&out.join("predictions.csv")).unwrap();
    assert_eq!(classes, outcome.classes);
    assert_eq!(preds.len(), outcome.predictions.len());
    for (a, b) in preds.iter().zip(&outcome.predictions) {
        assert_eq!((&a.id, &a.label), (&b.id, &b.label));
        for (p, q) in a.probabilities.iter().zip(&b.probabilities) {
            assert_eq!(p, q);
        }
    }
    assert_eq!(run_evaluate(&cfg).unwrap(), outcome.report);
    assert_clean(&cfg);
}

#[test]
fn rerun_reproduces_digests() {
    for kind in ["V", "H", "K"] {
        let (_dir, cfg) = toy(15, 3, &format!("[embedding]\nkind = \"{kind}\"\n"));
        let first = run_training(&cfg).unwrap();
        let second = run_training(&cfg).unwrap();
        assert_eq!(first, second, "{kind}");
        assert_eq!(first.artifacts.contains_key("codebook.jsonl"), kind == "K");
        assert_clean(&cfg);

        let (_other, cfg2) = toy(15, 3, &format!("[embedding]\nkind = \"{kind}\"\n"));
        assert_eq!(
            run_training(&cfg2).unwrap(),
            first,
            "{kind} in a fresh directory"
        );
    }
}

#[test]
fn staged_runs_match_full_training() {
    let (_a, staged) = toy(12, 2, "");
    let mut last = Manifest::default();
    for stage in Stage::ALL {
        last = run_stage(&staged, stage).unwrap();
    }
    let (_b, full) = toy(12, 2, "");
    assert_eq!(last, run_training(&full).unwrap());
    assert_eq!(Manifest::load(&staged.out_dir()).unwrap(), last);
}

#[test]
fn stage_without_predecessor_is_rejected() {
    let (_dir, cfg) = toy(12, 2, "");
    let err = run_stage(&cfg, Stage::Graphs).unwrap_err();
    assert!(matches!(err.root(), Error::Io { .. }), "{err}");
    run_stage(&cfg, Stage::Ranks).unwrap();
    let err = run_stage(&cfg, Stage::Embed).unwrap_err();
    assert!(matches!(err.root(), Error::Compatibility(_)), "{err}");
}

#[test]
fn unknown_descriptor_fails_before_compute() {
    let dir = tempfile::tempdir().unwrap();
    write_toy(
        dir.path(),
        12,
        2,
        "[[rankers]]\ndescriptor = \"z\"\ncomparator = \"euclidean\"\n",
    );
    let err = PipelineConfig::load(dir.path().join("config.toml")).unwrap_err();
    assert!(matches!(err, Error::Config(_)), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn twin_of_a_training_sample_peaks_at_its_twin() {
    let dir = tempfile::tempdir().unwrap();
    write_toy(
        dir.path(),
        12,
        2,
        "[split]\ntrain_ids = \"train.txt\"\ntest_ids = \"test.txt\"\n",
    );
    for file in ["x.csv", "y.csv"] {
        let path = dir.path().join(file);
        let text = fs::read_to_string(&path).unwrap();
        let row = text.lines().next().unwrap().replacen("s00", "twin", 1);
        fs::write(&path, format!("{text}{row}\n")).unwrap();
    }
    let labels = dir.path().join("labels.csv");
    fs::write(&labels, fs::read_to_string(&labels).unwrap() + "twin,c0\n").unwrap();
    let train: String = (0..12).map(|i| format!("{}\n", id(i))).collect();
    fs::write(dir.path().join("train.txt"), train).unwrap();
    fs::write(dir.path().join("test.txt"), "twin\n").unwrap();

    let cfg = config(dir.path());
    assert!(!cfg.include_self);
    let inputs = Inputs::load(&cfg).unwrap();
    let split = make_split(&cfg, &inputs).unwrap();
    let model = train_model(&cfg, &inputs, &split).unwrap();

    let twin = SampleId::new("twin");
    let tables = inputs.ranker_tables(&cfg).unwrap();
    let responses = response_tables(&tables, &cfg.rankers, &model.train_ids()).unwrap();
    let vecs: Vec<&[f64]> = tables.iter().map(|t| t.row(&twin).unwrap()).collect();
    let ranks = rank_query(
        &twin,
        &vecs,
        &responses,
        &cfg.rankers,
        cfg.cutoff,
        Some(&twin),
    )
    .unwrap();
    let g = extract_fusion_graph(&ranks, &model.store).unwrap();
    let v: FusionVector = model.embedder.embed(&g).unwrap();
    let at = model.embedder.vocab.index_of(&id(0)).unwrap();
    let coord = |i: usize| v.entries().iter().find(|e| e.0 == i).map_or(0.0, |e| e.1);
    assert_eq!(coord(at), 2.0);
    assert!(v.entries().iter().all(|e| e.1 <= coord(at)));

    let outcome = run_training(&cfg)
        .and_then(|_| run_inference(&cfg, None))
        .unwrap();
    assert_eq!(outcome.predictions.len(), 1);
    assert_clean(&cfg);
}

#[test]
fn training_queries_never_see_themselves() {
    let (_dir, cfg) = toy(12, 2, "");
    let inputs = Inputs::load(&cfg).unwrap();
    let split = make_split(&cfg, &inputs).unwrap();
    let model = train_model(&cfg, &inputs, &split).unwrap();
    for g in &model.graphs {
        assert!(g.vertex_weight(g.query()).is_none(), "{}", g.query());
    }
    assert!(audit_model(&model, &split.test).is_clean());

    let leaky: BTreeSet<SampleId> = split.train.iter().take(1).cloned().collect();
    assert!(!audit_model(&model, &leaky).is_clean());
}

#[test]
fn missing_modality_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    write_toy(dir.path(), 12, 2, "");
    let path = dir.path().join("y.csv");
    let text = fs::read_to_string(&path).unwrap();
    let kept: String = text
        .lines()
        .filter(|l| !l.starts_with("s03,"))
        .map(|l| format!("{l}\n"))
        .collect();
    fs::write(&path, kept).unwrap();
    let cfg = config(dir.path());
    let err = run_training(&cfg)
        .and_then(|_| run_inference(&cfg, None))
        .unwrap_err();
    assert!(
        matches!(err.root(), Error::IncompleteModality { id, descriptor } if id == "s03" && descriptor == "y"),
        "{err}"
    );
}

#[test]
fn empty_test_set_gives_header_only_predictions() {
    let dir = tempfile::tempdir().unwrap();
    write_toy(
        dir.path(),
        12,
        2,
        "[split]\ntrain_ids = \"train.txt\"\ntest_ids = \"test.txt\"\n",
    );
    let train: String = (0..12).map(|i| format!("{}\n", id(i))).collect();
    fs::write(dir.path().join("train.txt"), train).unwrap();
    fs::write(dir.path().join("test.txt"), "").unwrap();
    let cfg = config(dir.path());
    run_training(&cfg).unwrap();
    let outcome = run_inference(&cfg, None).unwrap();
    assert!(outcome.predictions.is_empty());
    assert!(outcome.report.is_none());
    let text = fs::read_to_string(cfg.out_dir().join("predictions.csv")).unwrap();
    assert_eq!(text, "id,predicted,p[c0],p[c1]\n");
    assert!(!cfg.out_dir().join("report.json").exists());
    assert_eq!(run_evaluate(&cfg).unwrap(), None);

    let base = run_baselines(&cfg).unwrap();
    assert!(base.methods.is_empty());
    assert_eq!(base.notes.len(), 1);
    assert_clean(&cfg);
}

#[test]
fn baselines_follow_ranker_parity() {
    let (_dir, odd) = toy(
        18,
        3,
        "[[rankers]]\ndescriptor = \"x\"\ncomparator = \"cosine_dissimilarity\"\n",
    );
    assert_eq!(odd.rankers.len(), 3);
    let report = run_baselines(&odd).unwrap();
    let names: Vec<&str> = report.methods.keys().map(String::as_str).collect();
    assert_eq!(names, ["concat", "majority_vote", "single:x", "single:y"]);
    assert!(report.notes.is_empty());
    assert!(report.scalers.iter().any(|(n, _)| n == "concat"));
    let stored: BaselineJson =
        serde_json::from_str(&fs::read_to_string(odd.out_dir().join("baselines.json")).unwrap())
            .unwrap();
    assert_eq!(stored.split_digest, report.split_digest);

    let manifest = run_training(&odd).unwrap();
    assert_eq!(manifest.split_digest, report.split_digest);

    let (_dir2, even) = toy(18, 3, "");
    let inputs = Inputs::load(&even).unwrap();
    let split = make_split(&even, &inputs).unwrap();
    let report = baselines_on_split(&even, &inputs, &split).unwrap();
    assert!(!report.methods.contains_key("majority_vote"));
    assert!(report.notes.iter().any(|n| n.contains("majority_vote")));
    assert!(report.methods.contains_key("concat"));
    for (_, scaler) in &report.scalers {
        let fitted: BTreeSet<&SampleId> = scaler.fitted_on.iter().collect();
        assert!(split.test.iter().all(|id| !fitted.contains(id)));
    }
}

#[derive(serde::Deserialize)]
struct BaselineJson {
    split_digest: String,
}

#[test]
fn changed_artifacts_are_incompatible() {
    let (_dir, cfg) = toy(12, 2, "");
    run_training(&cfg).unwrap();
    let path = cfg.out_dir().join("graphs.jsonl");
    fs::write(&path, fs::read_to_string(&path).unwrap() + "\n").unwrap();
    let err = run_inference(&cfg, None).unwrap_err();
    assert!(matches!(err.root(), Error::Compatibility(_)), "{err}");

    let (_dir, cfg) = toy(12, 2, "");
    run_training(&cfg).unwrap();
    let labels = cfg.resolve(&cfg.labels);
    fs::write(
        &labels,
        fs::read_to_string(&labels)
            .unwrap()
            .replacen(",c0", ",c1", 1),
    )
    .unwrap();
    let err = run_inference(&cfg, None).unwrap_err();
    assert!(matches!(err.root(), Error::Compatibility(_)), "{err}");
}

#[test]
fn sweep_table_is_written() {
    let (_dir, cfg) = toy(15, 3, "");
    let points = run_sweep(&cfg).unwrap();
    assert_eq!(
        points.iter().map(|p| p.cutoff).collect::<Vec<_>>(),
        [1, 3, 5, 10]
    );
    let text = fs::read_to_string(cfg.out_dir().join("sweep_l.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("L,") && lines[0].contains("balanced_accuracy"));
    assert!(lines[1].starts_with("1,"));

    let inputs = Inputs::load(&cfg).unwrap();
    let split = make_split(&cfg, &inputs).unwrap();
    let (_, _, report) = evaluate_split(
        &PipelineConfig {
            cutoff: 5,
            ..cfg.clone()
        },
        &inputs,
        &split,
    )
    .unwrap();
    assert_eq!(points[2].report, report);
}

#[test]
fn inference_on_listed_ids() {
    let (_dir, cfg) = toy(12, 2, "");
    run_training(&cfg).unwrap();
    let split: Vec<SplitSpec> = read_artifact(cfg.out_dir().join("split.jsonl")).unwrap();
    let one: Vec<SampleId> = split[0].train.iter().take(2).cloned().collect();
    let outcome = run_inference(&cfg, Some(one.clone())).unwrap();
    assert_eq!(
        outcome
            .predictions
            .iter()
            .map(|p| p.id.clone())
            .collect::<Vec<_>>(),
        one
    );
    for p in &outcome.predictions {
        assert!((p.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
    let err = run_inference(&cfg, Some(vec![SampleId::new("nobody")])).unwrap_err();
    assert!(
        matches!(err.root(), Error::IncompleteModality { .. }),
        "{err}"
    );
}
