//! Rank-fusion graphs.
//!
//! For a query `q` with normalized ranks `τ_1..τ_m`:
//!
//! * every response appearing in some `τ_i` becomes a vertex `A`, weighted
//!   by the sum of its similarities across the ranks of `q`;
//! * an edge `A -> B` exists when both are vertices and `B` appears in some
//!   rank of `A` (taken from the [`RankStore`]); its weight is
//!   `sum_i sum_j sim_{τ'_j}(A, B) / pos_{τ_i}(A)` over the ranks `τ_i` of `q`
//!   containing `A` and the ranks `τ'_j` of `A` containing `B`.
//!
//! The double sum factorizes as `(sum_i 1/pos_i(A)) * (sum_j sim_j(A, B))`,
//! which is what [`extract_fusion_graph`] evaluates.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::dataset::{Artifact, SampleId};
use crate::error::{Error, Result};
use crate::ranker::{Rank, RankStore};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    /// Index into [`FusionGraph::vertices`].
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

/// Weighted directed graph over uniquely labeled response samples.
///
/// Vertices are kept sorted by id and edges by `(from, to)`, so two graphs
/// are equal exactly when their serialized forms are byte-identical.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionGraph {
    query: SampleId,
    m: usize,
    cutoff: usize,
    vertices: Vec<(SampleId, f64)>,
    edges: Vec<Edge>,
}

impl FusionGraph {
    /// Builds a graph from explicit vertex and edge maps. Edge endpoints must
    /// be vertices; zero-weight edges are dropped.
    pub fn new(
        query: SampleId,
        m: usize,
        cutoff: usize,
        vertices: BTreeMap<SampleId, f64>,
        edges: BTreeMap<(SampleId, SampleId), f64>,
    ) -> Result<Self> {
        let vertices: Vec<(SampleId, f64)> = vertices.into_iter().collect();
        for (id, w) in &vertices {
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::Domain(format!("vertex `{id}` has weight {w}")));
            }
        }
        let index = |id: &SampleId| {
            vertices
                .binary_search_by(|(v, _)| v.cmp(id))
                .map_err(|_| Error::UnknownSample(format!("edge endpoint {id} is not a vertex")))
        };
        let mut out = Vec::with_capacity(edges.len());
        for ((a, b), w) in edges {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Domain(format!("edge ({a}, {b}) has weight {w}")));
            }
            let (from, to) = (index(&a)?, index(&b)?);
            if w > 0.0 {
                out.push(Edge {
                    from,
                    to,
                    weight: w,
                });
            }
        }
        Ok(FusionGraph {
            query,
            m,
            cutoff,
            vertices,
            edges: out,
        })
    }

    pub fn query(&self) -> &SampleId {
        &self.query
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[(SampleId, f64)] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex_id(&self, index: usize) -> &SampleId {
        &self.vertices[index].0
    }

    pub fn vertex_index(&self, id: &SampleId) -> Option<usize> {
        self.vertices.binary_search_by(|(v, _)| v.cmp(id)).ok()
    }

    pub fn vertex_weight(&self, id: &SampleId) -> Option<f64> {
        self.vertex_index(id).map(|i| self.vertices[i].1)
    }

    pub fn edge_weight(&self, from: &SampleId, to: &SampleId) -> Option<f64> {
        let (f, t) = (self.vertex_index(from)?, self.vertex_index(to)?);
        self.out_edges(f)
            .binary_search_by_key(&t, |e| e.to)
            .ok()
            .map(|i| self.out_edges(f)[i].weight)
    }

    /// Edges leaving vertex `index`, sorted by target.
    pub fn out_edges(&self, index: usize) -> &[Edge] {
        let lo = self.edges.partition_point(|e| e.from < index);
        let hi = self.edges.partition_point(|e| e.from <= index);
        &self.edges[lo..hi]
    }

    /// Edges as `(from id, to id, weight)`, lexicographically ordered.
    pub fn labeled_edges(&self) -> impl Iterator<Item = (&SampleId, &SampleId, f64)> {
        self.edges
            .iter()
            .map(|e| (&self.vertices[e.from].0, &self.vertices[e.to].0, e.weight))
    }
}

/// Builds the fusion graph of one query from its `m` normalized ranks and the
/// ranks of every response sample.
pub fn extract_fusion_graph(query_ranks: &[Rank], store: &RankStore) -> Result<FusionGraph> {
    let query = match query_ranks.first() {
        Some(r) => r.query.clone(),
        None => {
            return Err(Error::Domain(
                "a fusion graph needs at least one rank".into(),
            ))
        }
    };
    for r in query_ranks {
        if r.query != query {
            return Err(Error::Domain(format!(
                "ranks of `{}` mixed with ranks of `{query}`",
                r.query
            )));
        }
        if !r.normalized {
            return Err(Error::Domain(format!(
                "rank {} of `{query}` is not normalized",
                r.ranker_index
            )));
        }
    }

    // accumulate in ranker order so input order cannot change the sums
    let mut ordered: Vec<&Rank> = query_ranks.iter().collect();
    ordered.sort_by_key(|r| r.ranker_index);
    // vertex id -> (sum of similarities, sum of 1/position)
    let mut acc: HashMap<&SampleId, (f64, f64)> = HashMap::new();
    for rank in ordered {
        for e in &rank.entries {
            let slot = acc.entry(&e.response).or_insert((0.0, 0.0));
            slot.0 += e.similarity;
            slot.1 += 1.0 / e.position as f64;
        }
    }
    let mut ids: Vec<&SampleId> = acc.keys().copied().collect();
    ids.sort_unstable();
    let index: HashMap<&SampleId, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();

    let mut edges = Vec::new();
    let mut row: Vec<(usize, f64)> = Vec::new();
    for (a, &id) in ids.iter().enumerate() {
        let inv_pos = acc[id].1;
        let ranks = store
            .ranks_of(id)
            .ok_or_else(|| Error::IncompleteStore(id.to_string()))?;
        row.clear();
        for rank in ranks {
            for e in &rank.entries {
                if let Some(&b) = index.get(&e.response) {
                    row.push((b, e.similarity));
                }
            }
        }
        row.sort_by_key(|&(b, _)| b);
        let mut k = 0;
        while k < row.len() {
            let b = row[k].0;
            let mut sim = 0.0;
            while k < row.len() && row[k].0 == b {
                sim += row[k].1;
                k += 1;
            }
            let weight = inv_pos * sim;
            if weight > 0.0 {
                edges.push(Edge {
                    from: a,
                    to: b,
                    weight,
                });
            }
        }
    }

    Ok(FusionGraph {
        query,
        m: query_ranks.len(),
        cutoff: store.cutoff(),
        vertices: ids.iter().map(|&id| (id.clone(), acc[id].0)).collect(),
        edges,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphStats {
    pub vertex_count: usize,
    pub edge_count: usize,
    pub vertex_weight_range: Option<(f64, f64)>,
    pub edge_weight_range: Option<(f64, f64)>,
}

fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values.fold(None, |acc, w| match acc {
        None => Some((w, w)),
        Some((lo, hi)) => Some((f64::min(lo, w), f64::max(hi, w))),
    })
}

pub fn graph_stats(g: &FusionGraph) -> GraphStats {
    GraphStats {
        vertex_count: g.vertex_count(),
        edge_count: g.edge_count(),
        vertex_weight_range: range(g.vertices.iter().map(|v| v.1)),
        edge_weight_range: range(g.edges.iter().map(|e| e.weight)),
    }
}

#[derive(Serialize, Deserialize)]
struct GraphRecord {
    query_id: SampleId,
    m: usize,
    #[serde(rename = "L")]
    cutoff: usize,
    vertices: Vec<(SampleId, f64)>,
    edges: Vec<(SampleId, SampleId, f64)>,
}

impl Serialize for FusionGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GraphRecord {
            query_id: self.query.clone(),
            m: self.m,
            cutoff: self.cutoff,
            vertices: self.vertices.clone(),
            edges: self
                .labeled_edges()
                .map(|(a, b, w)| (a.clone(), b.clone(), w))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FusionGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = GraphRecord::deserialize(d)?;
        let n_vertices = r.vertices.len();
        let vertices: BTreeMap<_, _> = r.vertices.into_iter().collect();
        if vertices.len() != n_vertices {
            return Err(serde::de::Error::custom("duplicate vertex label"));
        }
        let edges = r.edges.into_iter().map(|(a, b, w)| ((a, b), w)).collect();
        FusionGraph::new(r.query_id, r.m, r.cutoff, vertices, edges)
            .map_err(serde::de::Error::custom)
    }
}

impl Artifact for FusionGraph {
    const KIND: &'static str = "fusion_graph";
}
