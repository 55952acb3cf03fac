//! Sample ids, feature and label tables, stratified splits, and the on-disk
//! artifact format shared by every pipeline stage.

mod persist;
mod split;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) use persist::digest_bytes;
pub use persist::{
    digest_file, persist, read_artifact, read_artifact_from, restore, write_artifact,
    write_artifact_to, Artifact, FORMAT_VERSION,
};
pub use split::{stratified_split, SplitSpec};

/// Opaque sample identifier. Cheap to clone; ordered lexicographically.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SampleId(Arc<str>);

impl SampleId {
    pub fn new(id: impl AsRef<str>) -> Self {
        SampleId(Arc::from(id.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for SampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl fmt::Display for SampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SampleId {
    fn from(s: &str) -> Self {
        SampleId::new(s)
    }
}

impl std::borrow::Borrow<str> for SampleId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

/// Dense per-descriptor feature vectors, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    descriptor_name: String,
    dim: usize,
    ids: Vec<SampleId>,
    values: Vec<f64>,
    index: HashMap<SampleId, usize>,
}

impl FeatureTable {
    /// Builds a table from `(id, row)` pairs, validating arity, finiteness,
    /// and id uniqueness.
    pub fn from_rows<I>(descriptor_name: impl Into<String>, dim: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (SampleId, Vec<f64>)>,
    {
        let descriptor_name = descriptor_name.into();
        if dim == 0 {
            return Err(Error::Domain(format!(
                "descriptor `{descriptor_name}` must have positive dimension"
            )));
        }
        let mut table = FeatureTable {
            descriptor_name,
            dim,
            ids: Vec::new(),
            values: Vec::new(),
            index: HashMap::new(),
        };
        for (id, row) in rows {
            table.push(id, &row)?;
        }
        Ok(table)
    }

    fn push(&mut self, id: SampleId, row: &[f64]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::Shape {
                expected: self.dim,
                actual: row.len(),
            });
        }
        if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite value {bad} for sample `{id}`"
            )));
        }
        if self.index.contains_key(&id) {
            return Err(Error::DuplicateId {
                id: id.to_string(),
                context: format!("descriptor `{}`", self.descriptor_name),
            });
        }
        self.index.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.values.extend_from_slice(row);
        Ok(())
    }

    pub fn descriptor_name(&self) -> &str {
        &self.descriptor_name
    }

    pub fn dim(&self) -> usize {
        self.dim
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

    pub fn contains(&self, id: &SampleId) -> bool {
        self.index.contains_key(id)
    }

    pub fn row(&self, id: &SampleId) -> Option<&[f64]> {
        self.index
            .get(id)
            .map(|&i| &self.values[i * self.dim..(i + 1) * self.dim])
    }

    /// Same as [`row`](Self::row) but reports which modality is missing.
    pub fn require_row(&self, id: &SampleId) -> Result<&[f64]> {
        self.row(id).ok_or_else(|| Error::IncompleteModality {
            id: id.to_string(),
            descriptor: self.descriptor_name.clone(),
        })
    }

    pub fn rows(&self) -> impl Iterator<Item = (&SampleId, &[f64])> {
        self.ids.iter().zip(self.values.chunks_exact(self.dim))
    }

    /// Restricts the table to `ids`, keeping them in the given order.
    pub fn subset<'a, I>(&self, ids: I) -> Result<FeatureTable>
    where
        I: IntoIterator<Item = &'a SampleId>,
    {
        let mut out = FeatureTable {
            descriptor_name: self.descriptor_name.clone(),
            dim: self.dim,
            ids: Vec::new(),
            values: Vec::new(),
            index: HashMap::new(),
        };
        for id in ids {
            let row = self.require_row(id)?;
            out.push(id.clone(), row)?;
        }
        Ok(out)
    }
}

/// Reads a feature table from `id,v1,...,vd` lines (no header).
pub fn load_features(path: impl AsRef<Path>, descriptor_name: &str) -> Result<FeatureTable> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_features(&text, path, descriptor_name)
}

pub(crate) fn parse_features(
    text: &str,
    path: &Path,
    descriptor_name: &str,
) -> Result<FeatureTable> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut dim = None;
    let mut rows = Vec::new();
    let mut seen = BTreeSet::new();
    for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let id = fields.next().unwrap_or_default();
        if id.is_empty() {
            return Err(parse_err(lineno, "empty sample id".into()));
        }
        let row = fields
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(lineno, format!("`{f}` is not a finite number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.is_empty() {
            return Err(parse_err(lineno, "row has no values".into()));
        }
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(parse_err(
                    lineno,
                    format!("expected {d} values, found {}", row.len()),
                ))
            }
            Some(_) => {}
        }
        if !seen.insert(id.to_string()) {
            return Err(Error::DuplicateId {
                id: id.to_string(),
                context: format!("{}:{lineno}", path.display()),
            });
        }
        rows.push((SampleId::new(id), row));
    }
    let dim = dim.ok_or_else(|| parse_err(0, "no feature rows".into()))?;
    FeatureTable::from_rows(descriptor_name, dim, rows)
}

/// Class labels per sample plus the sorted list of distinct classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelTable {
    rows: BTreeMap<SampleId, String>,
    classes: Vec<String>,
}

impl LabelTable {
    pub fn new(rows: BTreeMap<SampleId, String>) -> Self {
        let classes = rows
            .values()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        LabelTable { rows, classes }
    }

    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S)>,
        S: AsRef<str>,
    {
        let mut rows = BTreeMap::new();
        for (id, label) in pairs {
            let id = SampleId::new(id);
            if rows
                .insert(id.clone(), label.as_ref().to_string())
                .is_some()
            {
                return Err(Error::DuplicateId {
                    id: id.to_string(),
                    context: "label table".into(),
                });
            }
        }
        Ok(LabelTable::new(rows))
    }

    pub fn get(&self, id: &SampleId) -> Option<&str> {
        self.rows.get(id).map(String::as_str)
    }

    pub fn require(&self, id: &SampleId) -> Result<&str> {
        self.get(id)
            .ok_or_else(|| Error::UnknownSample(format!("{id} (no label)")))
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn ids(&self) -> impl Iterator<Item = &SampleId> {
        self.rows.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SampleId, &str)> {
        self.rows.iter().map(|(k, v)| (k, v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Checks that every labeled sample has a row in at least one table.
    pub fn validate_against(&self, tables: &[FeatureTable]) -> Result<()> {
        for id in self.rows.keys() {
            if !tables.iter().any(|t| t.contains(id)) {
                return Err(Error::UnknownSample(format!(
                    "{id} is labeled but has no features"
                )));
            }
        }
        Ok(())
    }
}

/// Reads `id,label` lines (no header).
pub fn load_labels(path: impl AsRef<Path>) -> Result<LabelTable> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, label) = line
            .split_once(',')
            .map(|(a, b)| (a.trim(), b.trim()))
            .filter(|(a, b)| !a.is_empty() && !b.is_empty() && !b.contains(','))
            .ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                message: "expected `id,label`".into(),
            })?;
        pairs.push((id.to_string(), label.to_string()));
    }
    LabelTable::from_pairs(pairs)
}

/// Reads a list of sample ids, one per line.
pub fn load_id_list(path: impl AsRef<Path>) -> Result<Vec<SampleId>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(SampleId::new)
        .collect())
}
