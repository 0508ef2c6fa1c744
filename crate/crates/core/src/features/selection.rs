use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::{FeatureFamily, FeatureVector};
use crate::error::{Error, Result};

/// Chi-square statistic of a 2×2 table `[[a, b], [c, d]]`.
///
/// Zero cells are replaced by 0.5 before the statistic is computed.
pub fn chi_square_2x2(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let fix = |x: f64| if x == 0.0 { 0.5 } else { x };
    let (a, b, c, d) = (fix(a), fix(b), fix(c), fix(d));
    let n = a + b + c + d;
    let num = n * (a * d - b * c).powi(2);
    let den = (a + b) * (c + d) * (a + c) * (b + d);
    num / den
}

/// Survival function of the chi-square distribution with one degree of freedom.
pub fn chi_square_sf(statistic: f64) -> f64 {
    if statistic <= 0.0 {
        return 1.0;
    }
    erfc((statistic / 2.0).sqrt())
}

/// The ordered set of features a linear model is indexed by.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct FeatureSpace {
    /// Lexicographically sorted.
    selected: Vec<String>,
    doc_frequency: BTreeMap<String, usize>,
    selection_alpha: Option<f64>,
}

impl FeatureSpace {
    /// Every feature seen in `vectors`, with document frequencies.
    pub fn fit(vectors: &[FeatureVector]) -> Self {
        let mut doc_frequency: BTreeMap<String, usize> = BTreeMap::new();
        for v in vectors {
            for name in v.names() {
                *doc_frequency.entry(name.to_string()).or_default() += 1;
            }
        }
        let selected = doc_frequency.keys().cloned().collect();
        FeatureSpace {
            selected,
            doc_frequency,
            selection_alpha: None,
        }
    }

    /// Builds a space over the given names (sorted and deduplicated).
    pub fn from_names<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut selected: Vec<String> = names.into_iter().map(Into::into).collect();
        selected.sort();
        selected.dedup();
        FeatureSpace {
            selected,
            doc_frequency: BTreeMap::new(),
            selection_alpha: None,
        }
    }

    pub fn selected(&self) -> &[String] {
        &self.selected
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn doc_frequency(&self, name: &str) -> usize {
        self.doc_frequency.get(name).copied().unwrap_or(0)
    }

    pub fn selection_alpha(&self) -> Option<f64> {
        self.selection_alpha
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.selected
            .binary_search_by(|s| s.as_str().cmp(name))
            .ok()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index_of(name).is_some()
    }

    /// Drops features of `family` seen in fewer than `min_doc_count` documents.
    /// Returns how many were removed.
    pub fn filter_low_frequency(&mut self, family: FeatureFamily, min_doc_count: usize) -> usize {
        let before = self.selected.len();
        let prefix = family.prefix();
        let df = &self.doc_frequency;
        self.selected.retain(|name| {
            !name.starts_with(prefix) || df.get(name).copied().unwrap_or(0) >= min_doc_count
        });
        before - self.selected.len()
    }

    /// Keeps features whose chi-square p-value against the labels passes the
    /// Bonferroni family-wise threshold `alpha / n_candidates`.
    pub fn select_univariate(&self, x: &[FeatureVector], y: &[bool], alpha: f64) -> Result<FeatureSpace> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: y.len(),
            });
        }
        if x.len() < 2 {
            return Err(Error::InvalidParameter(
                "feature selection needs at least two documents".into(),
            ));
        }
        let n_pos = y.iter().filter(|&&l| l).count();
        let n_neg = y.len() - n_pos;
        if n_pos == 0 || n_neg == 0 {
            return Err(Error::SingleClass);
        }
        if !(alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }

        let candidates: HashMap<&str, usize> = self
            .selected
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let mut in_pos = vec![0usize; self.selected.len()];
        let mut in_neg = vec![0usize; self.selected.len()];
        for (v, &label) in x.iter().zip(y) {
            for name in v.names() {
                if let Some(&i) = candidates.get(name) {
                    if label {
                        in_pos[i] += 1;
                    } else {
                        in_neg[i] += 1;
                    }
                }
            }
        }

        let threshold = alpha / self.selected.len().max(1) as f64;
        let mut selected = Vec::new();
        let mut doc_frequency = BTreeMap::new();
        for (i, name) in self.selected.iter().enumerate() {
            let a = in_pos[i] as f64;
            let b = in_neg[i] as f64;
            let c = (n_pos - in_pos[i]) as f64;
            let d = (n_neg - in_neg[i]) as f64;
            let p = chi_square_sf(chi_square_2x2(a, b, c, d));
            if p <= threshold {
                selected.push(name.clone());
                doc_frequency.insert(name.clone(), in_pos[i] + in_neg[i]);
            }
        }
        Ok(FeatureSpace {
            selected,
            doc_frequency,
            selection_alpha: Some(alpha),
        })
    }

    /// Sparse `(index, value)` view of `fv`; names outside the space are dropped.
    pub fn project(&self, fv: &FeatureVector) -> Vec<(usize, f64)> {
        fv.iter()
            .filter_map(|(name, v)| self.index_of(name).map(|i| (i, v)))
            .collect()
    }

    /// Restricts an arbitrary vector to the space.
    pub fn restrict(&self, fv: &FeatureVector) -> FeatureVector {
        fv.iter()
            .filter(|(name, _)| self.contains(name))
            .map(|(n, v)| (n.to_string(), v))
            .collect()
    }
}

/// Selection over every feature present in `x`.
pub fn select_features_univariate(x: &[FeatureVector], y: &[bool], alpha: f64) -> Result<FeatureSpace> {
    FeatureSpace::fit(x).select_univariate(x, y, alpha)
}
