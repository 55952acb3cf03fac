//! Fusion-graph embeddings.
//!
//! * `V`: one coordinate per response sample holding its vertex weight.
//! * `H`: the `V` block followed by one coordinate per unordered pair of
//!   response samples holding the sum of both directed edge weights.
//! * `K`: bag-of-graphs histogram over a codebook of graphs of interest
//!   (see [`codebook`]).

mod codebook;
mod goi;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{Artifact, SampleId};
use crate::error::{Error, Result};
use crate::fusion_graph::FusionGraph;
use crate::sparse::SparseVector;

pub use codebook::{build_codebook, embed_k, soft_assign, Codebook, CodebookConfig};
pub use goi::{extract_gois, mcs_distance, mcs_distance_with, Goi, McsSize, Neighborhood};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EmbeddingKind {
    V,
    H,
    K,
}

impl std::fmt::Display for EmbeddingKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            EmbeddingKind::V => "FV-V",
            EmbeddingKind::H => "FV-H",
            EmbeddingKind::K => "FV-K",
        };
        f.write_str(s)
    }
}

/// Sparse non-negative embedding of one fusion graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FusionVectorRecord", into = "FusionVectorRecord")]
pub struct FusionVector {
    kind: EmbeddingKind,
    vector: SparseVector,
}

#[derive(Serialize, Deserialize)]
struct FusionVectorRecord {
    kind: EmbeddingKind,
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl TryFrom<FusionVectorRecord> for FusionVector {
    type Error = Error;

    fn try_from(r: FusionVectorRecord) -> Result<Self> {
        FusionVector::new(r.kind, SparseVector::new(r.dim, r.entries)?)
    }
}

impl From<FusionVector> for FusionVectorRecord {
    fn from(v: FusionVector) -> Self {
        FusionVectorRecord {
            kind: v.kind,
            dim: v.vector.dim(),
            entries: v.vector.entries().to_vec(),
        }
    }
}

impl FusionVector {
    pub fn new(kind: EmbeddingKind, vector: SparseVector) -> Result<Self> {
        if let Some(&(i, v)) = vector.entries().iter().find(|e| e.1 < 0.0) {
            return Err(Error::Domain(format!(
                "fusion vector value {v} at index {i} is negative"
            )));
        }
        Ok(FusionVector { kind, vector })
    }

    pub fn kind(&self) -> EmbeddingKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.vector.dim()
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        self.vector.entries()
    }

    pub fn as_sparse(&self) -> &SparseVector {
        &self.vector
    }

    pub fn into_sparse(self) -> SparseVector {
        self.vector
    }
}

impl Artifact for FusionVector {
    const KIND: &'static str = "fusion_vector";
}

/// Index <-> response-sample correspondence for the `V` and `H` spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct VocabularyV {
    ids: Vec<SampleId>,
    index: HashMap<SampleId, usize>,
}

impl VocabularyV {
    pub fn new(ids: Vec<SampleId>) -> Result<Self> {
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateId {
                    id: id.to_string(),
                    context: "vocabulary".into(),
                });
            }
        }
        Ok(VocabularyV { ids, index })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[SampleId] {
        &self.ids
    }

    pub fn index_of(&self, id: &SampleId) -> Option<usize> {
        self.index.get(id).copied()
    }

    fn require(&self, id: &SampleId) -> Result<usize> {
        self.index_of(id)
            .ok_or_else(|| Error::UnknownSample(format!("{id} is not in the vocabulary")))
    }

    /// Dimension of the `H` space: `n + n(n-1)/2`.
    pub fn hybrid_dim(&self) -> usize {
        let n = self.len();
        n + n * n.saturating_sub(1) / 2
    }

    /// Coordinate of the unordered pair `{i, j}` (`i != j`) in the `H` space,
    /// pairs ordered lexicographically after the `n` vertex coordinates.
    pub fn pair_index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        let n = self.len();
        n + i * (2 * n - i - 1) / 2 + (j - i - 1)
    }
}

impl Serialize for VocabularyV {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.ids.serialize(s)
    }
}

impl<'de> Deserialize<'de> for VocabularyV {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        VocabularyV::new(Vec::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

impl Artifact for VocabularyV {
    const KIND: &'static str = "vocabulary";
}

fn vertex_entries(g: &FusionGraph, vocab: &VocabularyV) -> Result<Vec<(usize, f64)>> {
    g.vertices()
        .iter()
        .map(|(id, w)| Ok((vocab.require(id)?, *w)))
        .collect()
}

/// Vertex embedding: coordinate `index(v)` holds the weight of vertex `v`.
pub fn embed_v(g: &FusionGraph, vocab: &VocabularyV) -> Result<FusionVector> {
    let entries = vertex_entries(g, vocab)?;
    FusionVector::new(
        EmbeddingKind::V,
        SparseVector::from_unsorted(vocab.len(), entries)?,
    )
}

/// Hybrid embedding: vertex weights, then symmetric pair weights
/// `w(i -> j) + w(j -> i)`.
pub fn embed_h(g: &FusionGraph, vocab: &VocabularyV) -> Result<FusionVector> {
    let mut entries = vertex_entries(g, vocab)?;
    let global: Vec<usize> = entries.iter().map(|e| e.0).collect();
    for e in g.edges() {
        let (i, j) = (global[e.from], global[e.to]);
        if i == j {
            // self-loops have no pair coordinate
            continue;
        }
        entries.push((vocab.pair_index(i, j), e.weight));
    }
    FusionVector::new(
        EmbeddingKind::H,
        SparseVector::from_unsorted(vocab.hybrid_dim(), entries)?,
    )
}
