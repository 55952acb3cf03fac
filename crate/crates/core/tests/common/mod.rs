#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use fusegraph::dataset::SampleId;
use fusegraph::embedding::Goi;
use fusegraph::fusion_graph::FusionGraph;
use fusegraph::ranker::{Rank, RankEntry, RankStore};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn id(i: usize) -> SampleId {
    SampleId::new(format!("s{i:02}"))
}

/// Builds a normalized rank straight from a row of raw dissimilarities:
/// sort by (raw, id), keep `cutoff`, min-max to similarities.
pub fn rank_from_row(
    query: &SampleId,
    ranker: usize,
    row: &[(SampleId, f64)],
    cutoff: usize,
) -> Rank {
    let mut sorted = row.to_vec();
    sorted.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    sorted.truncate(cutoff);
    let lo = sorted.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
    let hi = sorted.iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max);
    let entries = sorted
        .into_iter()
        .enumerate()
        .map(|(p, (response, raw))| RankEntry {
            response,
            raw,
            similarity: if hi > lo {
                1.0 - (raw - lo) / (hi - lo)
            } else {
                1.0
            },
            position: p + 1,
        })
        .collect();
    Rank {
        query: query.clone(),
        ranker_index: ranker,
        normalized: true,
        entries,
    }
}

/// A random fusion instance: `n` responses, `m` rankers with random
/// dissimilarity matrices (coarsely quantized so ties occur), a store of
/// self-excluded response ranks and the ranks of an outside query `q`.
pub struct Instance {
    pub n: usize,
    pub m: usize,
    pub cutoff: usize,
    /// `dis[r][i][j]`: dissimilarity of response `j` to sample `i` under
    /// ranker `r`; row `n` is the query.
    pub dis: Vec<Vec<Vec<f64>>>,
}

impl Instance {
    pub fn random(seed: u64, max_n: usize, max_m: usize, max_l: usize) -> Instance {
        let mut r = rng(seed);
        let n = r.gen_range(1..=max_n);
        let m = r.gen_range(1..=max_m);
        let cutoff = r.gen_range(1..=max_l);
        let dis = (0..m)
            .map(|_| {
                (0..=n)
                    .map(|_| (0..n).map(|_| (r.gen_range(0..20) as f64) / 20.0).collect())
                    .collect()
            })
            .collect();
        Instance { n, m, cutoff, dis }
    }

    pub fn with_cutoff(&self, cutoff: usize) -> Instance {
        Instance {
            cutoff,
            dis: self.dis.clone(),
            ..*self
        }
    }

    pub fn query() -> SampleId {
        SampleId::new("q")
    }

    fn row(&self, r: usize, i: usize, exclude: Option<usize>) -> Vec<(SampleId, f64)> {
        (0..self.n)
            .filter(|&j| Some(j) != exclude)
            .map(|j| (id(j), self.dis[r][i][j]))
            .collect()
    }

    pub fn store_ranks(&self) -> Vec<Rank> {
        (0..self.n)
            .flat_map(|i| (0..self.m).map(move |r| (i, r)))
            .map(|(i, r)| rank_from_row(&id(i), r, &self.row(r, i, Some(i)), self.cutoff))
            .collect()
    }

    pub fn store(&self) -> RankStore {
        RankStore::from_ranks(self.m, self.cutoff, self.store_ranks()).unwrap()
    }

    pub fn query_ranks(&self) -> Vec<Rank> {
        (0..self.m)
            .map(|r| rank_from_row(&Self::query(), r, &self.row(r, self.n, None), self.cutoff))
            .collect()
    }
}

pub type NaiveGraph = (BTreeMap<SampleId, f64>, BTreeMap<(SampleId, SampleId), f64>);

/// Direct transcription of the vertex and edge weight definitions as
/// nested loops over ranks and entries.
pub fn naive_graph(query_ranks: &[Rank], store_ranks: &[Rank]) -> NaiveGraph {
    let mut vertices: BTreeMap<SampleId, f64> = BTreeMap::new();
    for rank in query_ranks {
        for e in &rank.entries {
            *vertices.entry(e.response.clone()).or_insert(0.0) += e.similarity;
        }
    }
    let mut edges: BTreeMap<(SampleId, SampleId), f64> = BTreeMap::new();
    for tau_i in query_ranks {
        for a in &tau_i.entries {
            for tau_j in store_ranks.iter().filter(|r| r.query == a.response) {
                for b in &tau_j.entries {
                    if vertices.contains_key(&b.response) {
                        *edges
                            .entry((a.response.clone(), b.response.clone()))
                            .or_insert(0.0) += b.similarity / a.position as f64;
                    }
                }
            }
        }
    }
    edges.retain(|_, w| *w != 0.0);
    (vertices, edges)
}

/// Largest error between a graph and a naive transcription, or `None`
/// when their vertex or edge sets differ.
pub fn graph_error(g: &FusionGraph, naive: &NaiveGraph) -> Option<f64> {
    let (v, e) = naive;
    let gv: BTreeSet<&SampleId> = g.vertices().iter().map(|x| &x.0).collect();
    let nv: BTreeSet<&SampleId> = v.keys().collect();
    if gv != nv || g.edge_count() != e.len() {
        return None;
    }
    let mut worst: f64 = 0.0;
    for (vid, w) in v {
        worst = worst.max((g.vertex_weight(vid)? - w).abs());
    }
    for ((a, b), w) in e {
        worst = worst.max((g.edge_weight(a, b)? - w).abs());
    }
    Some(worst)
}

/// Random uniquely-labeled graph over labels drawn from `pool`.
pub fn random_goi(r: &mut ChaCha8Rng, pool: usize, max_vertices: usize) -> Goi {
    let k = r.gen_range(1..=max_vertices.min(pool));
    let mut labels: Vec<usize> = (0..pool).collect();
    rand::seq::SliceRandom::shuffle(labels.as_mut_slice(), r);
    labels.truncate(k);
    let vertices: Vec<(SampleId, f64)> = labels
        .iter()
        .map(|&l| (id(l), r.gen_range(0.1..2.0)))
        .collect();
    let mut edges = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            if r.gen_bool(0.4) {
                edges.push((id(labels[i]), id(labels[j]), r.gen_range(0.1..2.0)));
            }
        }
    }
    Goi::new(id(labels[0]), vertices, edges).unwrap()
}

/// Writes a small labeled two-modality collection plus config into `dir`:
/// `n` samples of `classes` interleaved classes, descriptor `x` and `y`.
pub fn write_toy(dir: &Path, n: usize, classes: usize, extra_config: &str) {
    let mut r = rng(11);
    let mut x = String::new();
    let mut y = String::new();
    let mut labels = String::new();
    for i in 0..n {
        let c = i % classes;
        let _ = writeln!(
            x,
            "{},{},{}",
            id(i),
            c as f64 + r.gen_range(-0.3..0.3),
            r.gen_range(0.0..1.0)
        );
        let _ = writeln!(
            y,
            "{},{},{}",
            id(i),
            r.gen_range(0.0..1.0),
            (c * 2) as f64 + r.gen_range(-0.5..0.5)
        );
        let _ = writeln!(labels, "{},c{c}", id(i));
    }
    fs::write(dir.join("x.csv"), x).unwrap();
    fs::write(dir.join("y.csv"), y).unwrap();
    fs::write(dir.join("labels.csv"), labels).unwrap();
    let config = format!(
        r#"
seed = 5
L = 3
labels = "labels.csv"
cutoffs = [2]

[[descriptors]]
name = "x"
path = "x.csv"

[[descriptors]]
name = "y"
path = "y.csv"

[[rankers]]
descriptor = "x"
comparator = "euclidean"

[[rankers]]
descriptor = "y"
comparator = "euclidean"

[train]
reg_grid = [0.001, 0.1]
folds = 2

{extra_config}
"#
    );
    fs::write(dir.join("config.toml"), config).unwrap();
}

pub fn labels_of(g: &Goi) -> Vec<String> {
    g.vertices().iter().map(|v| v.0.to_string()).collect()
}

/// Largest common subgraph by exhaustive search: every vertex subset of
/// `a` against every equal-size subset of `b`, accepting a pair when some
/// bijection between them preserves labels.
pub fn exhaustive_mcs(a: &Goi, b: &Goi) -> usize {
    let la = labels_of(a);
    let lb = labels_of(b);
    let mut best = 0;
    for ma in 0u32..(1 << la.len()) {
        let sa: Vec<&String> = (0..la.len())
            .filter(|i| ma >> i & 1 == 1)
            .map(|i| &la[i])
            .collect();
        if sa.len() <= best {
            continue;
        }
        for mb in 0u32..(1 << lb.len()) {
            if mb.count_ones() as usize != sa.len() {
                continue;
            }
            let sb: Vec<&String> = (0..lb.len())
                .filter(|i| mb >> i & 1 == 1)
                .map(|i| &lb[i])
                .collect();
            if permutations(sb.len())
                .iter()
                .any(|p| p.iter().enumerate().all(|(i, &j)| sa[i] == sb[j]))
            {
                best = sa.len();
                break;
            }
        }
    }
    best
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// AP@K recounting precision from scratch at every relevant position.
pub fn brute_ap(rel: &[bool], k: usize) -> f64 {
    let total = rel.iter().filter(|r| **r).count();
    if total == 0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 1..=k {
        if rel[i - 1] {
            let hits = rel[..i].iter().filter(|r| **r).count();
            sum += hits as f64 / i as f64;
        }
    }
    sum / k.min(total) as f64
}
