use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Artifact, LabelTable, SampleId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: BTreeSet<SampleId>,
    pub test: BTreeSet<SampleId>,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: BTreeSet<SampleId>, test: BTreeSet<SampleId>, seed: u64) -> Result<Self> {
        if let Some(id) = train.intersection(&test).next() {
            return Err(Error::Config(format!(
                "sample `{id}` is in both train and test"
            )));
        }
        Ok(SplitSpec { train, test, seed })
    }
}

impl Artifact for SplitSpec {
    const KIND: &'static str = "split";
}

/// Per-class quotas: floor of `fraction * size`, then the remaining
/// `round(fraction * n) - sum(floors)` slots go to the largest fractional
/// parts (ties by class order). Every class keeps at least one sample on
/// each side.
fn class_quotas(sizes: &[usize], fraction: f64) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    let target = (fraction * total as f64).round() as usize;
    let exact: Vec<f64> = sizes.iter().map(|&s| fraction * s as f64).collect();
    let mut quotas: Vec<usize> = exact.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    // stable sort keeps class order among equal remainders
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra)
    });
    for q in quotas.iter_mut() {
        *q = (*q).max(1);
    }
    let assigned: usize = quotas.iter().sum();
    let mut missing = target.saturating_sub(assigned);
    for &c in &order {
        if missing == 0 {
            break;
        }
        if quotas[c] + 1 < sizes[c] {
            quotas[c] += 1;
            missing -= 1;
        }
    }
    for (q, &s) in quotas.iter_mut().zip(sizes) {
        *q = (*q).min(s - 1);
    }
    quotas
}

/// Splits the labeled ids into train/test with per-class proportions
/// preserved. Deterministic in `seed`.
pub fn stratified_split(labels: &LabelTable, train_fraction: f64, seed: u64) -> Result<SplitSpec> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Stratification(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let mut by_class: BTreeMap<&str, Vec<SampleId>> = BTreeMap::new();
    for (id, label) in labels.iter() {
        by_class.entry(label).or_default().push(id.clone());
    }
    let classes: Vec<&str> = labels.classes().iter().map(String::as_str).collect();
    let members: Vec<Vec<SampleId>> = classes
        .iter()
        .map(|c| by_class.remove(c).unwrap_or_default())
        .collect();
    if let Some((c, m)) = classes.iter().zip(&members).find(|(_, m)| m.len() < 2) {
        return Err(Error::Stratification(format!(
            "class `{c}` has {} member(s); at least 2 are required",
            m.len()
        )));
    }
    let sizes: Vec<usize> = members.iter().map(Vec::len).collect();
    let quotas = class_quotas(&sizes, train_fraction);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = BTreeSet::new();
    let mut test = BTreeSet::new();
    for (mut ids, quota) in members.into_iter().zip(quotas) {
        // ids arrive sorted from the BTreeMap, so shuffling is reproducible
        ids.shuffle(&mut rng);
        let rest = ids.split_off(quota);
        train.extend(ids);
        test.extend(rest);
    }
    SplitSpec::new(train, test, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(counts: &[(&str, usize)]) -> LabelTable {
        let mut pairs = Vec::new();
        for (class, count) in counts {
            for i in 0..*count {
                pairs.push((format!("{class}{i:03}"), class.to_string()));
            }
        }
        LabelTable::from_pairs(pairs).unwrap()
    }

    fn count_class(split: &BTreeSet<SampleId>, labels: &LabelTable, class: &str) -> usize {
        split
            .iter()
            .filter(|id| labels.get(id) == Some(class))
            .count()
    }

    #[test]
    fn balanced_eighty_twenty() {
        let l = labels(&[("a", 5), ("b", 5)]);
        let s = stratified_split(&l, 0.8, 7).unwrap();
        assert_eq!(s.train.len(), 8);
        assert_eq!(s.test.len(), 2);
        for c in ["a", "b"] {
            assert_eq!(count_class(&s.train, &l, c), 4);
            assert_eq!(count_class(&s.test, &l, c), 1);
        }
    }

    #[test]
    fn half_of_one_class() {
        let l = labels(&[("a", 4)]);
        let s = stratified_split(&l, 0.5, 1).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (2, 2));
    }

    #[test]
    fn deterministic_in_seed() {
        let l = labels(&[("a", 13), ("b", 7), ("c", 9)]);
        assert_eq!(
            stratified_split(&l, 0.8, 42).unwrap(),
            stratified_split(&l, 0.8, 42).unwrap()
        );
        assert_ne!(
            stratified_split(&l, 0.8, 42).unwrap().train,
            stratified_split(&l, 0.8, 43).unwrap().train
        );
    }

    #[test]
    fn singleton_class_is_an_error() {
        let l = labels(&[("a", 4), ("b", 1)]);
        assert!(matches!(
            stratified_split(&l, 0.8, 0),
            Err(Error::Stratification(_))
        ));
    }

    #[test]
    fn largest_remainder_fills_total() {
        // 0.7 * 5 = 3.5 per class, total round(10.5) = 11: two extra slots go
        // to the first two classes in class order
        assert_eq!(class_quotas(&[5, 5, 5], 0.7), vec![4, 4, 3]);
        // a slot that would empty a class's test side is skipped
        assert_eq!(class_quotas(&[3, 3, 4], 0.8), vec![2, 2, 3]);
    }
}
