//! Linear one-vs-rest estimators over sparse vectors, plus the early-fusion
//! (concatenation) and late-fusion (majority vote) baselines.

mod baselines;
mod linear;

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Artifact;
use crate::embedding::FusionVector;
use crate::error::{Error, Result};
use crate::evalx::balanced_accuracy;
use crate::sparse::SparseVector;

pub use baselines::{concat_features, majority_vote, MinMaxScaler};
pub use linear::{fit_binary, LinearFit};

impl AsRef<SparseVector> for SparseVector {
    fn as_ref(&self) -> &SparseVector {
        self
    }
}

impl AsRef<SparseVector> for FusionVector {
    fn as_ref(&self) -> &SparseVector {
        self.as_sparse()
    }
}

/// Per-sample loss of the linear model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Logistic loss `log(1 + exp(-y f(x)))`.
    #[default]
    Logistic,
    /// Squared hinge loss `max(0, 1 - y f(x))^2` (L2-loss SVM).
    Hinge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// L2 penalty strengths searched by cross-validation.
    pub reg_grid: Vec<f64>,
    pub folds: usize,
    pub max_epochs: usize,
    /// Stop once an epoch improves the loss by less than this (relative).
    pub tolerance: f64,
    pub objective: Objective,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            reg_grid: vec![1e-4, 1e-3, 1e-2, 1e-1],
            folds: 5,
            max_epochs: 300,
            tolerance: 1e-7,
            objective: Objective::Logistic,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reg_grid.is_empty() {
            return Err(Error::Config("reg_grid must not be empty".into()));
        }
        if let Some(r) = self.reg_grid.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return Err(Error::Config(format!("regularization {r} is not positive")));
        }
        if self.folds < 2 {
            return Err(Error::Config("folds must be at least 2".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be positive".into()));
        }
        Ok(())
    }
}

/// Linear one-vs-rest model. Binary problems keep a single weight vector
/// whose positive side is `classes[1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimator {
    pub classes: Vec<String>,
    pub dim: usize,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub reg: f64,
    pub objective: Objective,
    pub seed: u64,
    /// Mean cross-validated balanced accuracy per grid value.
    pub grid_scores: Vec<(f64, f64)>,
}

impl Artifact for Estimator {
    const KIND: &'static str = "estimator";
}

impl Estimator {
    /// Assembles an estimator from explicit parameters: one vector per
    /// class, or a single vector for two classes.
    pub fn from_parts(
        classes: Vec<String>,
        weights: Vec<Vec<f64>>,
        biases: Vec<f64>,
    ) -> Result<Self> {
        let dim = weights.first().map_or(0, Vec::len);
        let binary = classes.len() == 2 && weights.len() == 1;
        if !(binary || weights.len() == classes.len()) || biases.len() != weights.len() {
            return Err(Error::Shape {
                expected: classes.len(),
                actual: weights.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| w.len() != dim) {
            return Err(Error::Shape {
                expected: dim,
                actual: w.len(),
            });
        }
        Ok(Estimator {
            classes,
            dim,
            weights,
            biases,
            reg: 0.0,
            objective: Objective::Logistic,
            seed: 0,
            grid_scores: Vec::new(),
        })
    }

    fn is_binary(&self) -> bool {
        self.weights.len() == 1
    }

    fn check_dim(&self, x: &SparseVector) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::Shape {
                expected: self.dim,
                actual: x.dim(),
            });
        }
        Ok(())
    }

    /// One score per class. A binary model with margin `f` scores
    /// `[-f, f]`.
    pub fn decision_scores(&self, x: &SparseVector) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let raw: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| x.dot_dense(w) + b)
            .collect();
        Ok(if self.is_binary() {
            vec![-raw[0], raw[0]]
        } else {
            raw
        })
    }
}

pub(crate) fn argmax_first(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

/// Class with the largest score; ties go to the earliest class.
pub fn predict_label<'a>(e: &'a Estimator, x: &SparseVector) -> Result<&'a str> {
    let scores = e.decision_scores(x)?;
    Ok(&e.classes[argmax_first(&scores)])
}

/// Class probabilities in `e.classes` order: logistic of the margin for a
/// binary model, softmax of the class scores otherwise.
pub fn predict_proba(e: &Estimator, x: &SparseVector) -> Result<Vec<f64>> {
    e.check_dim(x)?;
    if e.is_binary() {
        let margin = x.dot_dense(&e.weights[0]) + e.biases[0];
        let p = sigmoid(margin);
        return Ok(vec![1.0 - p, p]);
    }
    Ok(softmax(&e.decision_scores(x)?))
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - top).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn check_inputs<V: AsRef<SparseVector>>(x: &[V], y: &[String]) -> Result<(usize, Vec<String>)> {
    if x.len() != y.len() {
        return Err(Error::Shape {
            expected: x.len(),
            actual: y.len(),
        });
    }
    let dim = x
        .first()
        .map(|v| v.as_ref().dim())
        .ok_or_else(|| Error::DegenerateLabels("no training samples".into()))?;
    if let Some(v) = x.iter().find(|v| v.as_ref().dim() != dim) {
        return Err(Error::Shape {
            expected: dim,
            actual: v.as_ref().dim(),
        });
    }
    let classes: Vec<String> = y
        .iter()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if classes.len() < 2 {
        return Err(Error::DegenerateLabels(format!(
            "need at least 2 classes, found {}",
            classes.len()
        )));
    }
    Ok((dim, classes))
}

/// Fits the one-vs-rest model at a fixed regularization strength.
pub fn fit_estimator<V: AsRef<SparseVector> + Sync>(
    x: &[V],
    y: &[String],
    classes: &[String],
    reg: f64,
    cfg: &TrainConfig,
) -> Result<Estimator> {
    let dim = x.first().map_or(0, |v| v.as_ref().dim());
    let rows: Vec<&SparseVector> = x.iter().map(AsRef::as_ref).collect();
    let positives: Vec<&String> = if classes.len() == 2 {
        vec![&classes[1]]
    } else {
        classes.iter().collect()
    };
    let fits: Vec<LinearFit> = positives
        .par_iter()
        .map(|c| {
            let targets: Vec<bool> = y.iter().map(|l| l == *c).collect();
            fit_binary(&rows, &targets, dim, reg, cfg)
        })
        .collect();
    let mut e = Estimator::from_parts(
        classes.to_vec(),
        fits.iter().map(|f| f.weights.clone()).collect(),
        fits.iter().map(|f| f.bias).collect(),
    )?;
    e.dim = dim;
    e.reg = reg;
    e.objective = cfg.objective;
    e.seed = cfg.seed;
    Ok(e)
}

/// Stratified fold index per sample: each class's members are shuffled
/// (seeded) and dealt round-robin, continuing across classes.
pub fn stratified_folds(y: &[String], classes: &[String], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; y.len()];
    let mut next = 0;
    for c in classes {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| &y[i] == c).collect();
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    assignment
}

/// Grid search with stratified k-fold cross-validated balanced accuracy,
/// then a refit on all samples at the selected strength. Ties pick the
/// smaller strength.
pub fn train_classifier<V: AsRef<SparseVector> + Sync>(
    x: &[V],
    y: &[String],
    cfg: &TrainConfig,
) -> Result<Estimator> {
    cfg.validate()?;
    let (_, classes) = check_inputs(x, y)?;
    if x.len() < cfg.folds {
        return Err(Error::DegenerateLabels(format!(
            "{} samples cannot fill {} folds",
            x.len(),
            cfg.folds
        )));
    }
    let fold_of = stratified_folds(y, &classes, cfg.folds, cfg.seed);

    let jobs: Vec<(usize, usize)> = (0..cfg.reg_grid.len())
        .flat_map(|g| (0..cfg.folds).map(move |f| (g, f)))
        .collect();
    let fold_scores: Vec<f64> = jobs
        .par_iter()
        .map(|&(g, f)| {
            let (mut tx, mut ty, mut vx, mut vy) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for (i, &fold) in fold_of.iter().enumerate() {
                if fold == f {
                    vx.push(x[i].as_ref());
                    vy.push(y[i].clone());
                } else {
                    tx.push(x[i].as_ref());
                    ty.push(y[i].clone());
                }
            }
            let model = fit_estimator(&tx, &ty, &classes, cfg.reg_grid[g], cfg)?;
            let pred = vx
                .iter()
                .map(|v| predict_label(&model, v).map(str::to_string))
                .collect::<Result<Vec<_>>>()?;
            balanced_accuracy(&vy, &pred)
        })
        .collect::<Result<_>>()?;

    let grid_scores: Vec<(f64, f64)> = cfg
        .reg_grid
        .iter()
        .enumerate()
        .map(|(g, &reg)| {
            let s = &fold_scores[g * cfg.folds..(g + 1) * cfg.folds];
            (reg, s.iter().sum::<f64>() / s.len() as f64)
        })
        .collect();
    let best = grid_scores
        .iter()
        .copied()
        .reduce(|a, b| {
            if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                b
            } else {
                a
            }
        })
        .expect("grid is non-empty");
    log::debug!("grid scores {grid_scores:?}, selected reg {}", best.0);

    let mut e = fit_estimator(x, y, &classes, best.0, cfg)?;
    e.grid_scores = grid_scores;
    Ok(e)
}
