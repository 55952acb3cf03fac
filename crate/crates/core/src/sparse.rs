use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparse real vector: strictly increasing indices, no stored zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSparse", into = "RawSparse")]
pub struct SparseVector {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

#[derive(Serialize, Deserialize)]
struct RawSparse {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl TryFrom<RawSparse> for SparseVector {
    type Error = Error;

    fn try_from(r: RawSparse) -> Result<Self> {
        SparseVector::new(r.dim, r.entries)
    }
}

impl From<SparseVector> for RawSparse {
    fn from(v: SparseVector) -> Self {
        RawSparse {
            dim: v.dim,
            entries: v.entries,
        }
    }
}

impl SparseVector {
    /// Validates sorted, in-range, finite, nonzero entries.
    pub fn new(dim: usize, entries: Vec<(usize, f64)>) -> Result<Self> {
        for w in entries.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::Format(format!(
                    "sparse indices not strictly increasing at {}",
                    w[1].0
                )));
            }
        }
        if let Some(&(i, _)) = entries.last() {
            if i >= dim {
                return Err(Error::Shape {
                    expected: dim,
                    actual: i + 1,
                });
            }
        }
        if let Some(&(i, v)) = entries.iter().find(|(_, v)| !v.is_finite() || *v == 0.0) {
            return Err(Error::Format(format!(
                "invalid stored value {v} at index {i}"
            )));
        }
        Ok(SparseVector { dim, entries })
    }

    /// Sorts, merges duplicate indices by summing, and drops zeros.
    pub fn from_unsorted(dim: usize, mut entries: Vec<(usize, f64)>) -> Result<Self> {
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => merged.push((i, v)),
            }
        }
        merged.retain(|e| e.1 != 0.0);
        SparseVector::new(dim, merged)
    }

    pub fn from_dense(values: &[f64]) -> Result<Self> {
        let entries = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i, *v))
            .collect();
        SparseVector::new(values.len(), entries)
    }

    pub fn zeros(dim: usize) -> Self {
        SparseVector {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |e| e.0)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * dense[i]).sum()
    }

    pub fn l1_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.1.abs()).sum()
    }

    pub fn squared_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.1 * e.1).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }
}
