//! Comparators, cut-off ranks, rank normalization, and the rank store.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Artifact, FeatureTable, SampleId};
use crate::error::{Error, Result};

/// Dissimilarity functions between two feature vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparator {
    Euclidean,
    CosineDissimilarity,
    WeightedJaccard,
    PearsonDistance,
}

impl Comparator {
    pub fn distance(self, u: &[f64], v: &[f64]) -> Result<f64> {
        if u.len() != v.len() {
            return Err(Error::Shape {
                expected: u.len(),
                actual: v.len(),
            });
        }
        match self {
            Comparator::Euclidean => Ok(euclidean_distance(u, v)),
            Comparator::CosineDissimilarity => cosine_dissimilarity(u, v),
            Comparator::WeightedJaccard => weighted_jaccard_distance(u, v),
            Comparator::PearsonDistance => pearson_distance(u, v),
        }
    }
}

pub fn euclidean_distance(u: &[f64], v: &[f64]) -> f64 {
    u.iter()
        .zip(v)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// `1 - cos(u, v)`, in `[0, 2]`.
pub fn cosine_dissimilarity(u: &[f64], v: &[f64]) -> Result<f64> {
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::DegenerateInput(
            "cosine dissimilarity of a zero vector".into(),
        ));
    }
    Ok((1.0 - dot / (nu.sqrt() * nv.sqrt())).clamp(0.0, 2.0))
}

/// One minus the Ruzicka similarity `sum(min) / sum(max)` of two
/// non-negative vectors. Two all-zero vectors are at distance 0.
pub fn weighted_jaccard_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Shape {
            expected: u.len(),
            actual: v.len(),
        });
    }
    let (mut lo, mut hi) = (0.0, 0.0);
    for (&a, &b) in u.iter().zip(v) {
        if a < 0.0 || b < 0.0 {
            return Err(Error::Domain(format!(
                "weighted Jaccard needs non-negative components, got {}",
                a.min(b)
            )));
        }
        lo += a.min(b);
        hi += a.max(b);
    }
    if hi == 0.0 {
        return Ok(0.0);
    }
    Ok((1.0 - lo / hi).clamp(0.0, 1.0))
}

/// `1 - rho(u, v)` with `rho` the Pearson correlation, in `[0, 2]`.
pub fn pearson_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Shape {
            expected: u.len(),
            actual: v.len(),
        });
    }
    if u.len() < 2 {
        return Err(Error::DegenerateInput(
            "Pearson distance needs at least 2 components".into(),
        ));
    }
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        let (a, b) = (a - mu, b - mv);
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::DegenerateInput(
            "Pearson distance of a constant vector".into(),
        ));
    }
    Ok((1.0 - dot / (nu.sqrt() * nv.sqrt())).clamp(0.0, 2.0))
}

/// A descriptor paired with the comparator used to rank by it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ranker {
    pub descriptor: String,
    pub comparator: Comparator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankEntry {
    pub response: SampleId,
    pub raw: f64,
    pub similarity: f64,
    /// 1-based.
    pub position: usize,
}

/// Top-`L` responses for one query under one ranker, by ascending raw
/// dissimilarity. `similarity` is only meaningful once `normalized` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct Rank {
    pub query: SampleId,
    pub ranker_index: usize,
    pub normalized: bool,
    pub entries: Vec<RankEntry>,
}

impl Rank {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn find(&self, id: &SampleId) -> Option<&RankEntry> {
        self.entries.iter().find(|e| &e.response == id)
    }
}

fn by_score_then_id(a: &(f64, &SampleId), b: &(f64, &SampleId)) -> Ordering {
    a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1))
}

/// Exhaustive scan of `responses`, keeping the `cutoff` least dissimilar
/// samples. Ties are broken by ascending id; `exclude` never appears.
pub fn compute_rank(
    query: &SampleId,
    ranker_index: usize,
    query_vec: &[f64],
    responses: &FeatureTable,
    comparator: Comparator,
    cutoff: usize,
    exclude: Option<&SampleId>,
) -> Result<Rank> {
    if cutoff == 0 {
        return Err(Error::Domain("rank cut-off must be at least 1".into()));
    }
    if query_vec.len() != responses.dim() {
        return Err(Error::Shape {
            expected: responses.dim(),
            actual: query_vec.len(),
        });
    }
    let mut scored = Vec::with_capacity(responses.len());
    for (id, row) in responses.rows() {
        if Some(id) == exclude {
            continue;
        }
        let d = comparator
            .distance(query_vec, row)
            .map_err(|e| Error::Comparator {
                response: id.to_string(),
                source: Box::new(e),
            })?;
        scored.push((d, id));
    }
    if scored.len() > cutoff {
        scored.select_nth_unstable_by(cutoff - 1, by_score_then_id);
        scored.truncate(cutoff);
    }
    scored.sort_unstable_by(by_score_then_id);
    Ok(Rank {
        query: query.clone(),
        ranker_index,
        normalized: false,
        entries: scored
            .into_iter()
            .enumerate()
            .map(|(i, (raw, id))| RankEntry {
                response: id.clone(),
                raw,
                similarity: 0.0,
                position: i + 1,
            })
            .collect(),
    })
}

/// Per-rank min-max rescaling of raw dissimilarities into similarities in
/// `[0, 1]`, with the top entry at 1. A constant rank maps to all ones.
pub fn normalize_rank(mut rank: Rank) -> Rank {
    let (lo, hi) = rank
        .entries
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
            (lo.min(e.raw), hi.max(e.raw))
        });
    let span = hi - lo;
    for e in &mut rank.entries {
        e.similarity = if span > 0.0 {
            (1.0 - (e.raw - lo) / span).clamp(0.0, 1.0)
        } else {
            1.0
        };
    }
    rank.normalized = true;
    rank
}

/// Computes the `m` normalized ranks of one query, one per ranker.
/// `query_vecs[i]` and `responses[i]` belong to ranker `i`.
pub fn rank_query(
    query: &SampleId,
    query_vecs: &[&[f64]],
    responses: &[FeatureTable],
    rankers: &[Ranker],
    cutoff: usize,
    exclude: Option<&SampleId>,
) -> Result<Vec<Rank>> {
    rankers
        .iter()
        .enumerate()
        .map(|(i, r)| {
            compute_rank(
                query,
                i,
                query_vecs[i],
                &responses[i],
                r.comparator,
                cutoff,
                exclude,
            )
            .map(normalize_rank)
        })
        .collect()
}

/// Restricts each ranker's table to the response ids, in ranker order.
pub fn response_tables(
    tables: &[&FeatureTable],
    rankers: &[Ranker],
    response_ids: &[SampleId],
) -> Result<Vec<FeatureTable>> {
    if tables.len() != rankers.len() {
        return Err(Error::Shape {
            expected: rankers.len(),
            actual: tables.len(),
        });
    }
    tables
        .iter()
        .zip(rankers)
        .map(|(t, r)| {
            if t.descriptor_name() != r.descriptor {
                return Err(Error::Config(format!(
                    "ranker uses descriptor `{}` but was given table `{}`",
                    r.descriptor,
                    t.descriptor_name()
                )));
            }
            t.subset(response_ids)
        })
        .collect()
}

/// Normalized ranks for every response sample under every ranker, computed
/// against the response set itself.
#[derive(Debug, Clone, PartialEq)]
pub struct RankStore {
    m: usize,
    cutoff: usize,
    ranks: BTreeMap<SampleId, Vec<Rank>>,
}

impl RankStore {
    /// Assembles a store, checking each sample has exactly ranks `0..m`.
    pub fn from_ranks(
        m: usize,
        cutoff: usize,
        ranks: impl IntoIterator<Item = Rank>,
    ) -> Result<Self> {
        let mut by_id: BTreeMap<SampleId, Vec<Rank>> = BTreeMap::new();
        for r in ranks {
            if !r.normalized {
                return Err(Error::Format(format!(
                    "rank of `{}` is not normalized",
                    r.query
                )));
            }
            by_id.entry(r.query.clone()).or_default().push(r);
        }
        for (id, ranks) in &mut by_id {
            ranks.sort_by_key(|r| r.ranker_index);
            let ok = ranks.len() == m && ranks.iter().enumerate().all(|(i, r)| r.ranker_index == i);
            if !ok {
                return Err(Error::Format(format!(
                    "sample `{id}` needs exactly one rank per ranker 0..{m}"
                )));
            }
        }
        Ok(RankStore {
            m,
            cutoff,
            ranks: by_id,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn ranks_of(&self, id: &SampleId) -> Option<&[Rank]> {
        self.ranks.get(id).map(Vec::as_slice)
    }

    pub fn ids(&self) -> impl Iterator<Item = &SampleId> {
        self.ranks.keys()
    }

    /// All ranks ordered by (query, ranker index).
    pub fn iter(&self) -> impl Iterator<Item = &Rank> {
        self.ranks.values().flatten()
    }
}

/// Ranks every response sample against the response set. With
/// `include_self == false` a sample never appears in its own ranks.
pub fn build_rank_store(
    tables: &[&FeatureTable],
    rankers: &[Ranker],
    response_ids: &[SampleId],
    cutoff: usize,
    include_self: bool,
) -> Result<RankStore> {
    if rankers.is_empty() {
        return Err(Error::Config("at least one ranker is required".into()));
    }
    let responses = response_tables(tables, rankers, response_ids)?;
    let ranks: Vec<Vec<Rank>> = response_ids
        .par_iter()
        .map(|id| {
            let vecs: Vec<&[f64]> = responses
                .iter()
                .map(|t| t.require_row(id))
                .collect::<Result<_>>()?;
            let exclude = (!include_self).then_some(id);
            rank_query(id, &vecs, &responses, rankers, cutoff, exclude)
        })
        .collect::<Result<_>>()?;
    RankStore::from_ranks(rankers.len(), cutoff, ranks.into_iter().flatten())
}

#[derive(Serialize, Deserialize)]
pub(crate) struct RankRecord {
    query_id: SampleId,
    ranker_index: usize,
    normalized: bool,
    entries: Vec<(SampleId, f64, f64, usize)>,
}

impl From<&Rank> for RankRecord {
    fn from(r: &Rank) -> Self {
        RankRecord {
            query_id: r.query.clone(),
            ranker_index: r.ranker_index,
            normalized: r.normalized,
            entries: r
                .entries
                .iter()
                .map(|e| (e.response.clone(), e.raw, e.similarity, e.position))
                .collect(),
        }
    }
}

impl From<RankRecord> for Rank {
    fn from(r: RankRecord) -> Self {
        Rank {
            query: r.query_id,
            ranker_index: r.ranker_index,
            normalized: r.normalized,
            entries: r
                .entries
                .into_iter()
                .map(|(response, raw, similarity, position)| RankEntry {
                    response,
                    raw,
                    similarity,
                    position,
                })
                .collect(),
        }
    }
}

impl Serialize for Rank {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RankRecord::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Rank {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        RankRecord::deserialize(d).map(Rank::from)
    }
}

impl Artifact for Rank {
    const KIND: &'static str = "rank";
}
