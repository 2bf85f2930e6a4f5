//! The secret mapping dictionary from object labels to scrambling factors.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::detection::{select_optimal_object, DetectionRecord, FilterThresholds};
use crate::error::{Error, Result};

pub const DICTIONARY_VERSION: u32 = 1;

/// Seed of one scrambling permutation; dense ordinal within a dictionary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScramblingFactor(u64);

impl ScramblingFactor {
    pub const fn new(value: u64) -> Self {
        Self(value)
    }

    pub const fn value(self) -> u64 {
        self.0
    }
}

impl fmt::Display for ScramblingFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorOrder {
    #[default]
    Ascending,
    Descending,
}

impl std::str::FromStr for FactorOrder {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "ascending" => Ok(Self::Ascending),
            "descending" => Ok(Self::Descending),
            other => Err(format!("unknown order {other:?}; expected ascending or descending")),
        }
    }
}

/// Label → factor table, labels in byte-wise ascending order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingDictionary {
    version: u32,
    order: FactorOrder,
    entries: Vec<(String, ScramblingFactor)>,
}

impl MappingDictionary {
    /// Assigns factors to an arbitrary label set. Duplicates collapse.
    pub fn from_labels<I, S>(labels: I, order: FactorOrder) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        // String's Ord is byte-wise on UTF-8
        let sorted: BTreeSet<String> = labels.into_iter().map(Into::into).collect();
        if sorted.is_empty() {
            return Err(Error::EmptyDictionary);
        }
        let n = sorted.len() as u64;
        let entries = sorted
            .into_iter()
            .enumerate()
            .map(|(i, label)| {
                let i = i as u64;
                let factor = match order {
                    FactorOrder::Ascending => i,
                    FactorOrder::Descending => n - 1 - i,
                };
                (label, ScramblingFactor(factor))
            })
            .collect();
        Ok(Self {
            version: DICTIONARY_VERSION,
            order,
            entries,
        })
    }

    pub fn entries(&self) -> &[(String, ScramblingFactor)] {
        &self.entries
    }

    pub fn order(&self) -> FactorOrder {
        self.order
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, label: &str) -> Result<ScramblingFactor> {
        self.entries
            .binary_search_by(|(l, _)| l.as_str().cmp(label))
            .map(|i| self.entries[i].1)
            .map_err(|_| Error::NotInDictionary(label.to_owned()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let dict: Self = serde_json::from_slice(bytes).map_err(|e| Error::parse("dictionary", e))?;
        dict.validate()?;
        Ok(dict)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Format(format!("dictionary: {m}")));
        if self.version != DICTIONARY_VERSION {
            return bad(&format!("unsupported version {}", self.version));
        }
        if self.entries.is_empty() {
            return bad("no entries");
        }
        if !self.entries.windows(2).all(|w| w[0].0 < w[1].0) {
            return bad("labels are not strictly ascending");
        }
        let n = self.entries.len() as u64;
        let mut seen = vec![false; self.entries.len()];
        for (label, f) in &self.entries {
            if label.is_empty() {
                return bad("empty label");
            }
            if f.0 >= n || std::mem::replace(&mut seen[f.0 as usize], true) {
                return bad("factors are not a permutation of 0..n");
            }
        }
        Ok(())
    }
}

/// Builds the dictionary from the optimal-object labels of a corpus.
///
/// Images without an optimal object contribute nothing.
pub fn build_dictionary(
    records: &[DetectionRecord],
    thresholds: &FilterThresholds,
    order: FactorOrder,
) -> Result<MappingDictionary> {
    let labels = records
        .iter()
        .filter_map(|r| select_optimal_object(r, thresholds))
        .map(|ob| ob.label.as_str());
    MappingDictionary::from_labels(labels, order)
}
