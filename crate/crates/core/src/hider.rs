//! Sender side: greedy segmentation of the message against the index.

use serde::{Deserialize, Serialize};

use crate::dictionary::ScramblingFactor;
use crate::error::{Error, Result};
use crate::extractor::text_to_bits;
use crate::index::{ImageSelector, StegoIndex};
use crate::keying::{sub_seed, EnginePrng};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecretMessage {
    bits: Vec<bool>,
    byte_length: Option<usize>,
}

impl SecretMessage {
    pub fn from_bytes(bytes: &[u8]) -> Self {
        Self {
            bits: text_to_bits(bytes),
            byte_length: Some(bytes.len()),
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self {
            bits,
            byte_length: None,
        }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Byte count of the original text, when the message was built from bytes.
    pub fn byte_length(&self) -> Option<usize> {
        self.byte_length
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Location of one hidden segment inside its scrambled sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PositionKey {
    pub start: u32,
    pub length: u32,
}

impl PositionKey {
    pub fn new(start: u32, length: u32) -> Self {
        Self { start, length }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub factor: ScramblingFactor,
    pub start: usize,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HideResult {
    pub stego_images: Vec<String>,
    pub position_keys: Vec<PositionKey>,
    pub segments: Vec<Segment>,
}

impl HideResult {
    pub fn image_count(&self) -> usize {
        self.stego_images.len()
    }

    pub fn message_bits(&self) -> usize {
        self.segments.iter().map(|s| s.length).sum()
    }

    pub fn bits_per_image(&self) -> f64 {
        self.message_bits() as f64 / self.image_count() as f64
    }

    pub fn manifest(&self) -> StegoManifest {
        StegoManifest {
            images: self.stego_images.clone(),
        }
    }
}

/// Transmission-order list of stego images. Not secret.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StegoManifest {
    pub images: Vec<String>,
}

impl StegoManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        serde_json::from_slice(bytes).map_err(|e| Error::parse("stego manifest", e))
    }
}

/// Chooses stego images covering `message`, one per greedily matched segment.
///
/// With a selector seed, image choices come from one seeded stream shared by
/// all segments; otherwise they are drawn from OS entropy.
pub fn hide(message: &SecretMessage, index: &StegoIndex, selector_seed: Option<u64>) -> Result<HideResult> {
    if message.is_empty() {
        return Err(Error::EmptyMessage);
    }
    let t = index.t();
    let bits = message.bits();
    let mut selector = ImageSelector::new(selector_seed);
    let mut result = HideResult {
        stego_images: Vec::new(),
        position_keys: Vec::new(),
        segments: Vec::new(),
    };
    let mut offset = 0;
    while offset < bits.len() {
        let rest = &bits[offset..];
        let n_first = t.min(rest.len());
        let found = index
            .longest_match(rest, n_first)
            .ok_or(Error::UnmatchableBit { offset })?;
        let image = index.choose_image(found.factor, &mut selector)?;
        result.stego_images.push(image.to_owned());
        // t fits in u32 by SequenceKey's invariant
        result
            .position_keys
            .push(PositionKey::new(found.start as u32, found.length as u32));
        result.segments.push(Segment {
            factor: found.factor,
            start: found.start,
            length: found.length,
        });
        offset += found.length;
    }
    Ok(result)
}

/// Concatenates the sequence slices named by `segments`.
pub fn reconstruct(index: &StegoIndex, segments: &[Segment]) -> Result<Vec<bool>> {
    let mut out = Vec::new();
    for seg in segments {
        let entry = index.entry(seg.factor).ok_or(Error::UnknownFactor(seg.factor.value()))?;
        let slice = entry.sequence().slice(seg.start, seg.length).ok_or(Error::IndexOutOfRange {
            index: seg.start + seg.length,
            len: index.t(),
        })?;
        out.extend_from_slice(slice);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityEstimate {
    pub mean: f64,
    pub stddev: f64,
    pub trials: usize,
}

pub(crate) fn mean_and_stddev(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Mean bits per stego image over `trials` seeded random messages.
pub fn estimate_capacity(
    index: &StegoIndex,
    trials: usize,
    message_bits: usize,
    seed: u64,
) -> Result<CapacityEstimate> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let samples = (0..trials as u64)
        .map(|trial| {
            let bits = EnginePrng::new(sub_seed(seed, trial)).next_bits(message_bits);
            hide(&SecretMessage::from_bits(bits), index, Some(seed)).map(|r| r.bits_per_image())
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, stddev) = mean_and_stddev(&samples);
    Ok(CapacityEstimate { mean, stddev, trials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::MatchResult;
    use crate::keying::{derive_sequence_key, scramble_permutation, SequenceKey};
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn bits(s: &str) -> Vec<bool> {
        s.bytes().map(|b| b == b'1').collect()
    }

    fn f(v: u64) -> ScramblingFactor {
        ScramblingFactor::new(v)
    }

    fn single_entry(seq: &str) -> StegoIndex {
        let target = bits(seq);
        let map = scramble_permutation(f(0), target.len());
        let mut raw = vec![false; target.len()];
        for (i, &src) in map.iter().enumerate() {
            raw[src] = target[i];
        }
        let key = SequenceKey::from_bits(raw).unwrap();
        StegoIndex::from_groups(key, BTreeMap::from([(f(0), vec!["only".to_owned()])])).unwrap()
    }

    #[test]
    fn worked_example_two_segments() {
        let idx = single_entry("10110100");
        let msg = SecretMessage::from_bits(bits("110111"));
        let r = hide(&msg, &idx, Some(1)).unwrap();
        assert_eq!(r.position_keys, [PositionKey::new(2, 4), PositionKey::new(2, 2)]);
        assert_eq!(r.stego_images, ["only", "only"]);
        assert_eq!(reconstruct(&idx, &r.segments).unwrap(), msg.bits());
    }

    #[test]
    fn whole_sequence_is_one_segment() {
        let key = derive_sequence_key(8, 200).unwrap();
        let idx = StegoIndex::synthetic(key, 5).unwrap();
        let seq = idx.entry(f(3)).unwrap().sequence().bits().to_vec();
        let r = hide(&SecretMessage::from_bits(seq), &idx, None).unwrap();
        assert_eq!(r.position_keys, [PositionKey::new(0, 200)]);
    }

    #[test]
    fn errors() {
        let idx = single_entry("0000");
        assert!(matches!(hide(&SecretMessage::from_bits(vec![]), &idx, None), Err(Error::EmptyMessage)));
        assert!(matches!(
            hide(&SecretMessage::from_bits(bits("001")), &idx, None),
            Err(Error::UnmatchableBit { offset: 2 })
        ));
        assert!(estimate_capacity(&idx, 0, 8, 0).is_err());
    }

    #[test]
    fn manifest_json() {
        let m = StegoManifest { images: vec!["a".into(), "b".into()] };
        let v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(v, serde_json::json!({"images": ["a", "b"]}));
        assert_eq!(StegoManifest::from_json(m.to_json().as_bytes()).unwrap(), m);
    }

    #[test]
    fn small_capacity_tracks_log2() {
        let key = derive_sequence_key(1, 1000).unwrap();
        let idx = StegoIndex::synthetic(key, 16).unwrap();
        let est = estimate_capacity(&idx, 5, 4000, 3).unwrap();
        let target = (16.0f64 * 1000.0).log2();
        assert!((est.mean - target).abs() < 1.5, "mean {} vs {target}", est.mean);
        assert_eq!(est, estimate_capacity(&idx, 5, 4000, 3).unwrap());
    }

    fn naive(idx: &StegoIndex, message: &[bool], n_max: usize) -> Option<MatchResult> {
        for n in (1..=n_max).rev() {
            for e in idx.entries() {
                let seq = e.sequence().bits();
                if let Some(start) = (0..=seq.len().saturating_sub(n)).find(|&s| seq[s..].starts_with(&message[..n])) {
                    return Some(MatchResult { factor: e.factor(), start, length: n });
                }
            }
        }
        None
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn segments_reconstruct_and_are_maximal(
            id in any::<u64>(),
            t in 2usize..=64,
            factors in 1u64..=4,
            msg in proptest::collection::vec(any::<bool>(), 1..=128),
        ) {
            let idx = StegoIndex::synthetic(derive_sequence_key(id, t).unwrap(), factors).unwrap();
            let r = match hide(&SecretMessage::from_bits(msg.clone()), &idx, Some(id)) {
                Ok(r) => r,
                Err(Error::UnmatchableBit { .. }) => return Ok(()),
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            };
            prop_assert_eq!(reconstruct(&idx, &r.segments).unwrap(), msg.clone());
            prop_assert_eq!(r.image_count(), r.position_keys.len());
            prop_assert_eq!(r.message_bits(), msg.len());
            let mut offset = 0;
            for seg in &r.segments {
                prop_assert!(seg.start + seg.length <= t);
                let rest = &msg[offset..];
                let cap = t.min(rest.len());
                if seg.length < cap {
                    let longer = naive(&idx, rest, seg.length + 1);
                    prop_assert_eq!(longer.map(|m| m.length), Some(seg.length));
                }
                offset += seg.length;
            }
        }
    }
}
