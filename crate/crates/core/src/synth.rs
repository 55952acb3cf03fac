//! Synthetic two-modality dataset with complementary views.
//!
//! Modality `a` identifies class `c0` and only weakly separates the other
//! two; modality `b` does the same for `c1`. The identifying class of each
//! view is split over two clusters on either side of the shared cluster,
//! so no single linear cut isolates it. Neither view alone resolves all
//! three classes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{FeatureTable, LabelTable, SampleId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub samples: usize,
    /// Standard deviation of the per-coordinate Gaussian noise.
    pub noise: f64,
    /// Offset separating the two non-identified classes inside the shared
    /// cluster.
    pub shift: f64,
    /// Probability that an identified sample sits in the far cluster.
    pub far_fraction: f64,
    /// Extra pure-noise coordinates per modality.
    pub nuisance_dims: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            samples: 300,
            noise: 0.6,
            shift: 0.55,
            far_fraction: 0.22,
            nuisance_dims: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub a: FeatureTable,
    pub b: FeatureTable,
    pub labels: LabelTable,
}

pub const CLASSES: [&str; 3] = ["c0", "c1", "c2"];

fn view(
    rng: &mut ChaCha8Rng,
    noise: &Normal<f64>,
    cfg: &SynthConfig,
    class: usize,
    identified: usize,
    upper: usize,
) -> Vec<f64> {
    let (x, y) = if class == identified {
        let far = rng.gen_bool(cfg.far_fraction);
        (if far { 4.0 } else { 0.0 }, 0.0)
    } else if class == upper {
        (2.0, cfg.shift)
    } else {
        (2.0, -cfg.shift)
    };
    let mut row = vec![x + noise.sample(rng), y + noise.sample(rng)];
    row.extend((0..cfg.nuisance_dims).map(|_| noise.sample(rng)));
    row
}

/// Balanced classes, ids `s000`, `s001`, ... with class `i % 3`.
pub fn generate(cfg: &SynthConfig) -> Result<SynthData> {
    let noise = Normal::new(0.0, cfg.noise).map_err(|e| Error::Domain(format!("noise: {e}")))?;
    if !(0.0..=1.0).contains(&cfg.far_fraction) {
        return Err(Error::Domain("far_fraction outside [0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let width = cfg.samples.saturating_sub(1).to_string().len().max(3);
    let mut a = Vec::with_capacity(cfg.samples);
    let mut b = Vec::with_capacity(cfg.samples);
    let mut labels = Vec::with_capacity(cfg.samples);
    for i in 0..cfg.samples {
        let id = SampleId::new(format!("s{i:0width$}"));
        let class = i % 3;
        a.push((id.clone(), view(&mut rng, &noise, cfg, class, 0, 1)));
        b.push((id.clone(), view(&mut rng, &noise, cfg, class, 1, 0)));
        labels.push((id.to_string(), CLASSES[class].to_string()));
    }
    let dim = 2 + cfg.nuisance_dims;
    Ok(SynthData {
        a: FeatureTable::from_rows("a", dim, a)?,
        b: FeatureTable::from_rows("b", dim, b)?,
        labels: LabelTable::from_pairs(labels)?,
    })
}

fn table_csv(t: &FeatureTable) -> String {
    let mut out = String::new();
    for (id, row) in t.rows() {
        let _ = write!(out, "{id}");
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Writes `a.csv`, `b.csv`, `labels.csv` and a ready-to-run
/// `config.toml` into `dir`.
pub fn write_dataset(dir: &Path, data: &SynthData, seed: u64) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut labels = String::new();
    for (id, l) in data.labels.iter() {
        let _ = writeln!(labels, "{id},{l}");
    }
    let config = format!(
        r#"# Synthetic two-modality experiment.
seed = {seed}
L = 10
labels = "labels.csv"
output_dir = "out"
cutoffs = [5, 10]
positive_class = "c2"

[[descriptors]]
name = "a"
path = "a.csv"

[[descriptors]]
name = "b"
path = "b.csv"

[[rankers]]
descriptor = "a"
comparator = "euclidean"

[[rankers]]
descriptor = "b"
comparator = "euclidean"

[embedding]
kind = "V"
# used when kind = "K"
bandwidth = 0.9

[split]
train_fraction = 0.8
"#
    );
    for (name, text) in [
        ("a.csv", table_csv(&data.a)),
        ("b.csv", table_csv(&data.b)),
        ("labels.csv", labels),
        ("config.toml", config),
    ] {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
