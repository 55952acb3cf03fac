use serde::{Deserialize, Serialize};

use crate::dataset::SampleId;
use crate::error::{Error, Result};
use crate::fusion_graph::FusionGraph;

/// Which neighbors of a vertex join its graph of interest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Neighborhood {
    /// Targets of edges leaving the vertex.
    #[default]
    Out,
    /// Both targets and sources of incident edges.
    Both,
}

/// How the size of a graph (and of a common subgraph) is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McsSize {
    #[default]
    Vertices,
    VerticesAndEdges,
}

/// Graph of interest: a vertex, its neighbors, and the undirected edges
/// among them. Vertex weights and (direction-summed) edge weights are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct Goi {
    center: SampleId,
    /// Sorted by id.
    vertices: Vec<(SampleId, f64)>,
    /// `(i, j, weight)` with `i < j` indexing `vertices`, sorted.
    edges: Vec<(usize, usize, f64)>,
}

impl Goi {
    /// Builds a GoI from labeled parts. Edges are undirected; duplicates in
    /// either orientation are summed.
    pub fn new(
        center: SampleId,
        vertices: Vec<(SampleId, f64)>,
        edges: Vec<(SampleId, SampleId, f64)>,
    ) -> Result<Self> {
        let mut vertices = vertices;
        vertices.sort_by(|a, b| a.0.cmp(&b.0));
        if vertices.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Domain("GoI vertex labels must be unique".into()));
        }
        let find = |id: &SampleId| {
            vertices
                .binary_search_by(|(v, _)| v.cmp(id))
                .map_err(|_| Error::UnknownSample(format!("GoI edge endpoint {id}")))
        };
        find(&center)?;
        let mut indexed = Vec::with_capacity(edges.len());
        for (a, b, w) in &edges {
            let (i, j) = (find(a)?, find(b)?);
            indexed.push((i.min(j), i.max(j), *w));
        }
        Ok(Goi {
            center,
            vertices,
            edges: merge_edges(indexed),
        })
    }

    pub fn center(&self) -> &SampleId {
        &self.center
    }

    pub fn vertices(&self) -> &[(SampleId, f64)] {
        &self.vertices
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn labeled_edges(&self) -> impl Iterator<Item = (&SampleId, &SampleId, f64)> {
        self.edges
            .iter()
            .map(|&(i, j, w)| (&self.vertices[i].0, &self.vertices[j].0, w))
    }

    /// Same vertex labels and same undirected edge endpoints.
    pub fn same_structure(&self, other: &Goi) -> bool {
        self.vertices.len() == other.vertices.len()
            && self.edges.len() == other.edges.len()
            && self
                .vertices
                .iter()
                .zip(&other.vertices)
                .all(|(a, b)| a.0 == b.0)
            && self
                .edges
                .iter()
                .zip(&other.edges)
                .all(|(a, b)| (a.0, a.1) == (b.0, b.1))
    }
}

fn merge_edges(mut edges: Vec<(usize, usize, f64)>) -> Vec<(usize, usize, f64)> {
    edges.sort_by_key(|&(i, j, _)| (i, j));
    let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(edges.len());
    for (i, j, w) in edges {
        match out.last_mut() {
            Some(last) if (last.0, last.1) == (i, j) => last.2 += w,
            _ => out.push((i, j, w)),
        }
    }
    out
}

/// One GoI per vertex of `g`, in vertex order.
pub fn extract_gois(g: &FusionGraph, neighborhood: Neighborhood) -> Vec<Goi> {
    let n = g.vertex_count();
    let mut incoming: Vec<Vec<usize>> = Vec::new();
    if neighborhood == Neighborhood::Both {
        incoming = vec![Vec::new(); n];
        for e in g.edges() {
            incoming[e.to].push(e.from);
        }
    }
    (0..n)
        .map(|v| {
            let mut members: Vec<usize> = std::iter::once(v)
                .chain(g.out_edges(v).iter().map(|e| e.to))
                .chain(incoming.get(v).into_iter().flatten().copied())
                .collect();
            members.sort_unstable();
            members.dedup();
            let local = |global: usize| members.binary_search(&global).ok();
            let mut edges = Vec::new();
            for (li, &u) in members.iter().enumerate() {
                for e in g.out_edges(u) {
                    if let Some(lj) = local(e.to) {
                        edges.push((li.min(lj), li.max(lj), e.weight));
                    }
                }
            }
            Goi {
                center: g.vertex_id(v).clone(),
                vertices: members.iter().map(|&u| g.vertices()[u].clone()).collect(),
                edges: merge_edges(edges),
            }
        })
        .collect()
}

fn common_vertices(a: &Goi, b: &Goi) -> Vec<(usize, usize)> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.vertices.len() && j < b.vertices.len() {
        match a.vertices[i].0.cmp(&b.vertices[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push((i, j));
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Maximum-common-subgraph distance `1 - |mcs(a, b)| / max(|a|, |b|)`
/// counting vertices. With unique labels the common subgraph is the label
/// intersection, so this runs in linear time.
pub fn mcs_distance(a: &Goi, b: &Goi) -> Result<f64> {
    mcs_distance_with(a, b, McsSize::Vertices)
}

pub fn mcs_distance_with(a: &Goi, b: &Goi, size: McsSize) -> Result<f64> {
    if a.vertices.is_empty() || b.vertices.is_empty() {
        return Err(Error::Domain("MCS distance of an empty graph".into()));
    }
    let common = common_vertices(a, b);
    let (common_size, size_a, size_b) = match size {
        McsSize::Vertices => (common.len(), a.vertices.len(), b.vertices.len()),
        McsSize::VerticesAndEdges => {
            let mut map_ab = vec![usize::MAX; a.vertices.len()];
            for &(i, j) in &common {
                map_ab[i] = j;
            }
            let shared_edges = a
                .edges
                .iter()
                .filter(|&&(i, j, _)| {
                    let (bi, bj) = (map_ab[i], map_ab[j]);
                    bi != usize::MAX
                        && bj != usize::MAX
                        && b.edges
                            .binary_search_by_key(&(bi.min(bj), bi.max(bj)), |e| (e.0, e.1))
                            .is_ok()
                })
                .count();
            (
                common.len() + shared_edges,
                a.vertices.len() + a.edges.len(),
                b.vertices.len() + b.edges.len(),
            )
        }
    };
    Ok(1.0 - common_size as f64 / size_a.max(size_b) as f64)
}

#[derive(Serialize, Deserialize)]
pub(super) struct GoiRecord {
    center: SampleId,
    vertices: Vec<(SampleId, f64)>,
    edges: Vec<(SampleId, SampleId, f64)>,
}

impl From<&Goi> for GoiRecord {
    fn from(g: &Goi) -> Self {
        GoiRecord {
            center: g.center.clone(),
            vertices: g.vertices.clone(),
            edges: g
                .labeled_edges()
                .map(|(a, b, w)| (a.clone(), b.clone(), w))
                .collect(),
        }
    }
}

impl TryFrom<GoiRecord> for Goi {
    type Error = Error;

    fn try_from(r: GoiRecord) -> Result<Self> {
        Goi::new(r.center, r.vertices, r.edges)
    }
}

impl Serialize for Goi {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GoiRecord::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Goi {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Goi::try_from(GoiRecord::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;

    fn graph(vertices: &[&str], edges: &[(&str, &str, f64)]) -> FusionGraph {
        let v: BTreeMap<_, _> = vertices.iter().map(|&i| (SampleId::new(i), 1.0)).collect();
        let e: BTreeMap<_, _> = edges
            .iter()
            .map(|&(a, b, w)| ((SampleId::new(a), SampleId::new(b)), w))
            .collect();
        FusionGraph::new("q".into(), 1, 5, v, e).unwrap()
    }

    fn labels(g: &Goi) -> Vec<&str> {
        g.vertices().iter().map(|v| v.0.as_str()).collect()
    }

    fn goi(labels: &[&str]) -> Goi {
        Goi::new(
            SampleId::new(labels[0]),
            labels.iter().map(|&l| (SampleId::new(l), 1.0)).collect(),
            Vec::new(),
        )
        .unwrap()
    }

    #[test]
    fn isolated_vertex() {
        let gois = extract_gois(&graph(&["v"], &[]), Neighborhood::Out);
        assert_eq!(gois.len(), 1);
        assert_eq!(labels(&gois[0]), ["v"]);
        assert!(gois[0].edges().is_empty());
    }

    #[test]
    fn out_neighbors_and_their_edges() {
        let g = graph(
            &["a", "b", "v", "x"],
            &[
                ("v", "a", 1.0),
                ("v", "b", 2.0),
                ("a", "b", 0.5),
                ("b", "a", 0.25),
                ("x", "v", 9.0),
            ],
        );
        let gois = extract_gois(&g, Neighborhood::Out);
        assert_eq!(gois.len(), 4);
        let gv = gois.iter().find(|g| g.center().as_str() == "v").unwrap();
        assert_eq!(labels(gv), ["a", "b", "v"]);
        let edges: Vec<(&str, &str, f64)> = gv
            .labeled_edges()
            .map(|(a, b, w)| (a.as_str(), b.as_str(), w))
            .collect();
        assert_eq!(edges, [("a", "b", 0.75), ("a", "v", 1.0), ("b", "v", 2.0)]);

        let both = extract_gois(&g, Neighborhood::Both);
        let gv = both.iter().find(|g| g.center().as_str() == "v").unwrap();
        assert_eq!(labels(gv), ["a", "b", "v", "x"]);
    }

    #[test]
    fn mcs_examples() {
        assert_eq!(
            mcs_distance(&goi(&["a", "b"]), &goi(&["b", "a"])).unwrap(),
            0.0
        );
        assert_eq!(mcs_distance(&goi(&["a", "b"]), &goi(&["c"])).unwrap(), 1.0);
        let d = mcs_distance(&goi(&["a", "b", "c"]), &goi(&["b", "c", "d"])).unwrap();
        assert!((d - 1.0 / 3.0).abs() < 1e-15);
        let empty = Goi {
            center: "x".into(),
            vertices: Vec::new(),
            edges: Vec::new(),
        };
        assert!(matches!(
            mcs_distance(&empty, &goi(&["a"])),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn edge_aware_size() {
        let a = Goi::new(
            "a".into(),
            vec![("a".into(), 1.0), ("b".into(), 1.0)],
            vec![("a".into(), "b".into(), 1.0)],
        )
        .unwrap();
        let b = goi(&["a", "b"]);
        assert_eq!(mcs_distance(&a, &b).unwrap(), 0.0);
        // common: 2 vertices, 0 edges; sizes 3 and 2
        let d = mcs_distance_with(&a, &b, McsSize::VerticesAndEdges).unwrap();
        assert!((d - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            mcs_distance_with(&a, &a, McsSize::VerticesAndEdges).unwrap(),
            0.0
        );
    }
}
