//! The four-level image database (key → factors → scrambled sequences →
//! image lists) and longest-prefix search over it.
//!
//! Each scrambled sequence gets its own suffix automaton. Walking the
//! automaton along the message answers "longest prefix that occurs anywhere
//! in this sequence" in time linear in the match length, and the state
//! reached records where that prefix first ends, which gives the leftmost
//! start directly.

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::detection::{select_optimal_object, DetectionRecord, FilterThresholds};
use crate::dictionary::{MappingDictionary, ScramblingFactor};
use crate::error::{Error, Result};
use crate::keying::{scramble, EnginePrng, ScrambledSequence, SequenceKey};

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct State {
    next: [u32; 2],
    link: u32,
    len: u32,
    /// End position (inclusive) of the first occurrence of this state's strings.
    first_end: u32,
}

/// Suffix automaton over a binary string.
#[derive(Debug, Clone)]
pub struct SuffixAutomaton {
    states: Vec<State>,
}

impl SuffixAutomaton {
    pub fn build(bits: &[bool]) -> Self {
        let mut states = Vec::with_capacity(2 * bits.len().max(1));
        states.push(State {
            next: [NONE; 2],
            link: NONE,
            len: 0,
            first_end: NONE,
        });
        let mut last = 0u32;
        for (pos, &bit) in bits.iter().enumerate() {
            let c = usize::from(bit);
            let cur = states.len() as u32;
            states.push(State {
                next: [NONE; 2],
                link: 0,
                len: states[last as usize].len + 1,
                first_end: pos as u32,
            });
            let mut p = last;
            while p != NONE && states[p as usize].next[c] == NONE {
                states[p as usize].next[c] = cur;
                p = states[p as usize].link;
            }
            if p != NONE {
                let q = states[p as usize].next[c];
                if states[p as usize].len + 1 == states[q as usize].len {
                    states[cur as usize].link = q;
                } else {
                    let clone = states.len() as u32;
                    let mut cloned = states[q as usize];
                    cloned.len = states[p as usize].len + 1;
                    states.push(cloned);
                    while p != NONE && states[p as usize].next[c] == q {
                        states[p as usize].next[c] = clone;
                        p = states[p as usize].link;
                    }
                    states[q as usize].link = clone;
                    states[cur as usize].link = clone;
                }
            }
            last = cur;
        }
        Self { states }
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    /// Length and leftmost start of the longest prefix of `pattern` that
    /// occurs in the indexed string. `(0, 0)` when not even one bit matches.
    pub fn longest_prefix(&self, pattern: &[bool]) -> (usize, usize) {
        let mut state = 0usize;
        let mut matched = 0usize;
        for &bit in pattern {
            let next = self.states[state].next[usize::from(bit)];
            if next == NONE {
                break;
            }
            state = next as usize;
            matched += 1;
        }
        if matched == 0 {
            return (0, 0);
        }
        let end = self.states[state].first_end as usize;
        (matched, end + 1 - matched)
    }
}

/// All `(start, length)` substrings of a length-`t` sequence, `t(t+1)/2` of them.
pub fn enumerate_substrings(t: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..t).flat_map(move |start| (1..=t - start).map(move |len| (start, len)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchResult {
    pub factor: ScramblingFactor,
    pub start: usize,
    pub length: usize,
}

/// One level-2..4 branch: a factor, its scrambled sequence and its images.
#[derive(Debug, Clone)]
pub struct IndexEntry {
    factor: ScramblingFactor,
    sequence: ScrambledSequence,
    images: Vec<String>,
    automaton: SuffixAutomaton,
}

impl IndexEntry {
    pub fn factor(&self) -> ScramblingFactor {
        self.factor
    }

    pub fn sequence(&self) -> &ScrambledSequence {
        &self.sequence
    }

    pub fn images(&self) -> &[String] {
        &self.images
    }
}

/// Source of image choices within a factor's list.
pub enum ImageSelector {
    Seeded(EnginePrng),
    Entropy(StdRng),
}

impl ImageSelector {
    pub fn new(seed: Option<u64>) -> Self {
        match seed {
            Some(s) => Self::Seeded(EnginePrng::new(s)),
            None => Self::Entropy(StdRng::from_entropy()),
        }
    }

    fn choose(&mut self, len: usize) -> usize {
        match self {
            Self::Seeded(prng) => prng.next_below(len as u64) as usize,
            Self::Entropy(rng) => rng.gen_range(0..len),
        }
    }
}

/// Per-receiver image database with a search index over all scrambled sequences.
#[derive(Debug, Clone)]
pub struct StegoIndex {
    key: SequenceKey,
    /// Sorted by factor.
    entries: Vec<IndexEntry>,
}

impl StegoIndex {
    /// Builds the index from explicit factor → image-list groups. Empty lists are skipped.
    pub fn from_groups(key: SequenceKey, groups: BTreeMap<ScramblingFactor, Vec<String>>) -> Result<Self> {
        let entries: Vec<IndexEntry> = groups
            .into_iter()
            .filter(|(_, images)| !images.is_empty())
            .map(|(factor, images)| {
                let sequence = scramble(&key, factor);
                let automaton = SuffixAutomaton::build(sequence.bits());
                IndexEntry {
                    factor,
                    sequence,
                    images,
                    automaton,
                }
            })
            .collect();
        if entries.is_empty() {
            return Err(Error::EmptyIndex);
        }
        Ok(Self { key, entries })
    }

    /// Index over factors `0..factor_count`, one placeholder image each.
    pub fn synthetic(key: SequenceKey, factor_count: u64) -> Result<Self> {
        let groups = (0..factor_count)
            .map(|f| (ScramblingFactor::new(f), vec![format!("synthetic-{f}")]))
            .collect();
        Self::from_groups(key, groups)
    }

    pub fn key(&self) -> &SequenceKey {
        &self.key
    }

    pub fn t(&self) -> usize {
        self.key.len()
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn factor_count(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, factor: ScramblingFactor) -> Option<&IndexEntry> {
        self.entries
            .binary_search_by_key(&factor, |e| e.factor)
            .ok()
            .map(|i| &self.entries[i])
    }

    /// Copy of this index without one factor's entry.
    pub fn without(&self, factor: ScramblingFactor) -> Result<Self> {
        let entries: Vec<IndexEntry> = self.entries.iter().filter(|e| e.factor != factor).cloned().collect();
        if entries.is_empty() {
            return Err(Error::EmptyIndex);
        }
        Ok(Self {
            key: self.key.clone(),
            entries,
        })
    }

    /// Longest `n <= n_max` such that `message[..n]` occurs in some sequence.
    ///
    /// Ties go to the lowest factor, then the leftmost start. `n_max` is
    /// clamped to `min(t, message.len())`.
    pub fn longest_match(&self, message: &[bool], n_max: usize) -> Option<MatchResult> {
        let n_max = n_max.min(self.t()).min(message.len());
        let pattern = &message[..n_max];
        let mut best: Option<MatchResult> = None;
        for entry in &self.entries {
            let (length, start) = entry.automaton.longest_prefix(pattern);
            if length > best.map_or(0, |b| b.length) {
                best = Some(MatchResult {
                    factor: entry.factor,
                    start,
                    length,
                });
                if length == n_max {
                    break;
                }
            }
        }
        best
    }

    /// Picks one image for `factor`: uniformly at random, or deterministically under a seed.
    pub fn pick_image(&self, factor: ScramblingFactor, selector_seed: Option<u64>) -> Result<&str> {
        self.choose_image(factor, &mut ImageSelector::new(selector_seed))
    }

    pub fn choose_image(&self, factor: ScramblingFactor, selector: &mut ImageSelector) -> Result<&str> {
        let entry = self.entry(factor).ok_or(Error::UnknownFactor(factor.value()))?;
        Ok(&entry.images[selector.choose(entry.images.len())])
    }
}

/// Groups usable images by the factor of their optimal object.
///
/// Images without an optimal object, or whose label the dictionary does not
/// know, are left out.
pub fn build_index(
    records: &[DetectionRecord],
    dict: &MappingDictionary,
    key: &SequenceKey,
    thresholds: &FilterThresholds,
) -> Result<StegoIndex> {
    let mut groups: BTreeMap<ScramblingFactor, Vec<String>> = BTreeMap::new();
    for record in records {
        let Some(ob) = select_optimal_object(record, thresholds) else {
            continue;
        };
        if let Ok(factor) = dict.lookup(&ob.label) {
            groups.entry(factor).or_default().push(record.image_id.clone());
        }
    }
    StegoIndex::from_groups(key.clone(), groups)
}
