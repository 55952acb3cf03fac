//! Bag-of-graphs codebook: medoid-shift clustering of GoIs over the MCS
//! distance matrix, Gaussian soft assignment, and average pooling.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::goi::{extract_gois, mcs_distance_with, Goi, McsSize, Neighborhood};
use super::{EmbeddingKind, FusionVector};
use crate::dataset::Artifact;
use crate::error::{Error, Result};
use crate::fusion_graph::FusionGraph;
use crate::sparse::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CodebookConfig {
    /// Medoid-shift window. `None` picks the median pairwise distance.
    pub bandwidth: Option<f64>,
    /// Soft-assignment smoothing. `None` uses half the bandwidth.
    pub sigma: Option<f64>,
    pub max_training_gois: usize,
    pub neighborhood: Neighborhood,
    pub mcs_size: McsSize,
}

impl Default for CodebookConfig {
    fn default() -> Self {
        CodebookConfig {
            bandwidth: None,
            sigma: None,
            max_training_gois: 500,
            neighborhood: Neighborhood::Out,
            mcs_size: McsSize::Vertices,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub words: Vec<Goi>,
    pub sigma: f64,
    pub bandwidth: f64,
    pub neighborhood: Neighborhood,
    pub mcs_size: McsSize,
}

impl Codebook {
    pub fn dim(&self) -> usize {
        self.words.len()
    }
}

impl Artifact for Codebook {
    const KIND: &'static str = "codebook";
}

fn distance_matrix(gois: &[&Goi], size: McsSize) -> Result<Vec<Vec<f64>>> {
    let n = gois.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .map(|j| mcs_distance_with(gois[i], gois[j], size))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut d = vec![vec![0.0; n]; n];
    for (i, row) in upper.into_iter().enumerate() {
        for (k, v) in row.into_iter().enumerate() {
            let j = i + 1 + k;
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    Ok(d)
}

fn median_off_diagonal(d: &[Vec<f64>]) -> Option<f64> {
    let mut values: Vec<f64> = d
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row[i + 1..].iter().copied())
        .collect();
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    let median = if values.len().is_multiple_of(2) {
        (values[mid - 1] + values[mid]) / 2.0
    } else {
        values[mid]
    };
    if median > 0.0 {
        return Some(median);
    }
    values.into_iter().find(|&v| v > 0.0)
}

/// One medoid-shift step from every point: the candidate within `bandwidth`
/// of `p` minimizing the kernel-weighted sum of squared distances to the
/// points within `bandwidth` of `p`. Ties go to the smallest index.
fn medoid_shift_targets(d: &[Vec<f64>], bandwidth: f64) -> Vec<usize> {
    let two_h2 = 2.0 * bandwidth * bandwidth;
    (0..d.len())
        .into_par_iter()
        .map(|p| {
            let window: Vec<(usize, f64)> = d[p]
                .iter()
                .enumerate()
                .filter(|(_, &dist)| dist <= bandwidth)
                .map(|(j, &dist)| (j, (-dist * dist / two_h2).exp()))
                .collect();
            let mut best = (p, f64::INFINITY);
            for &(c, _) in &window {
                let cost: f64 = window.iter().map(|&(j, w)| w * d[c][j] * d[c][j]).sum();
                if cost < best.1 || (cost == best.1 && c < best.0) {
                    best = (c, cost);
                }
            }
            best.0
        })
        .collect()
}

/// Follows the shift pointers to a fixed point. A pointer cycle resolves to
/// its smallest member.
fn resolve_modes(next: &[usize]) -> Vec<usize> {
    let n = next.len();
    let mut mode = vec![usize::MAX; n];
    for start in 0..n {
        let mut path = Vec::new();
        let mut on_path = std::collections::HashMap::new();
        let mut p = start;
        let found = loop {
            if mode[p] != usize::MAX {
                break mode[p];
            }
            if let Some(&pos) = on_path.get(&p) {
                let cycle: &[usize] = &path[pos..];
                break *cycle.iter().min().unwrap();
            }
            on_path.insert(p, path.len());
            path.push(p);
            if next[p] == p {
                break p;
            }
            p = next[p];
        };
        for q in path {
            mode[q] = found;
        }
    }
    mode
}

/// Learns a codebook from training GoIs. At most `max_training_gois` are
/// drawn uniformly (seeded); each distinct medoid-shift mode contributes
/// one word.
pub fn build_codebook(gois: &[Goi], cfg: &CodebookConfig, seed: u64) -> Result<Codebook> {
    if gois.is_empty() {
        return Err(Error::Domain("codebook needs at least one GoI".into()));
    }
    if cfg.max_training_gois == 0 {
        return Err(Error::Domain("max_training_gois must be positive".into()));
    }
    if let Some(b) = cfg.bandwidth.filter(|b| !(*b > 0.0 && b.is_finite())) {
        return Err(Error::Domain(format!(
            "bandwidth must be positive, got {b}"
        )));
    }
    if let Some(s) = cfg.sigma.filter(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(Error::Domain(format!("sigma must be positive, got {s}")));
    }

    let mut picked: Vec<usize> = (0..gois.len()).collect();
    if gois.len() > cfg.max_training_gois {
        picked.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        picked.truncate(cfg.max_training_gois);
        picked.sort_unstable();
    }
    let sample: Vec<&Goi> = picked.iter().map(|&i| &gois[i]).collect();
    let d = distance_matrix(&sample, cfg.mcs_size)?;
    let bandwidth = cfg
        .bandwidth
        .or_else(|| median_off_diagonal(&d))
        .unwrap_or(1.0);
    let sigma = cfg.sigma.unwrap_or(bandwidth / 2.0);

    let modes = resolve_modes(&medoid_shift_targets(&d, bandwidth));
    let mut medoids: Vec<usize> = modes;
    medoids.sort_unstable();
    medoids.dedup();
    let mut words: Vec<Goi> = Vec::with_capacity(medoids.len());
    for m in medoids {
        if !words.iter().any(|w| w.same_structure(sample[m])) {
            words.push(sample[m].clone());
        }
    }
    log::debug!(
        "codebook: {} words from {} GoIs (bandwidth {bandwidth:.4}, sigma {sigma:.4})",
        words.len(),
        sample.len()
    );
    Ok(Codebook {
        words,
        sigma,
        bandwidth,
        neighborhood: cfg.neighborhood,
        mcs_size: cfg.mcs_size,
    })
}

/// Normalized Gaussian affinities of `s` to every codeword.
///
/// The Gaussian normalizing constant cancels, and the exponents are shifted
/// by the smallest distance so the row never underflows to all zeros.
pub fn soft_assign(s: &Goi, codebook: &Codebook) -> Result<Vec<f64>> {
    if codebook.words.is_empty() {
        return Err(Error::Domain("empty codebook".into()));
    }
    let dists = codebook
        .words
        .iter()
        .map(|w| mcs_distance_with(s, w, codebook.mcs_size))
        .collect::<Result<Vec<f64>>>()?;
    let d_min = dists.iter().copied().fold(f64::INFINITY, f64::min);
    let two_s2 = 2.0 * codebook.sigma * codebook.sigma;
    let mut row: Vec<f64> = dists
        .iter()
        .map(|d| (-(d * d - d_min * d_min) / two_s2).exp())
        .collect();
    let total: f64 = row.iter().sum();
    row.iter_mut().for_each(|a| *a /= total);
    Ok(row)
}

/// Average-pooled soft assignments of the GoIs of `g`.
pub fn embed_k(g: &FusionGraph, codebook: &Codebook) -> Result<FusionVector> {
    if g.is_empty() {
        return Err(Error::Domain(format!(
            "fusion graph of `{}` has no vertices to pool",
            g.query()
        )));
    }
    let gois = extract_gois(g, codebook.neighborhood);
    let mut pooled = vec![0.0; codebook.dim()];
    for s in &gois {
        for (acc, a) in pooled.iter_mut().zip(soft_assign(s, codebook)?) {
            *acc += a;
        }
    }
    let count = gois.len() as f64;
    pooled.iter_mut().for_each(|v| *v /= count);
    FusionVector::new(EmbeddingKind::K, SparseVector::from_dense(&pooled)?)
}
