//! Receiver side: recover the message from stego detections and position keys.
//!
//! The receiver holds only the dictionary, its own sequence key and the
//! position keys; it never sees the sender's image database.

use std::collections::HashMap;

use crate::detection::{select_optimal_object, DetectionRecord, FilterThresholds};
use crate::dictionary::{MappingDictionary, ScramblingFactor};
use crate::error::{Error, Result};
use crate::hider::PositionKey;
use crate::keying::{scramble, ScrambledSequence, SequenceKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentStatus {
    Recovered,
    /// Filled with zeros: image lost, no optimal object, or label unknown.
    Padded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractionReport {
    pub bits: Vec<bool>,
    pub segment_status: Vec<SegmentStatus>,
    pub padded_bits: usize,
}

impl ExtractionReport {
    /// The recovered bytes, when the bit count is byte aligned.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        bits_to_text(&self.bits)
    }

    pub fn padded_segments(&self) -> usize {
        self.segment_status.iter().filter(|s| **s == SegmentStatus::Padded).count()
    }
}

fn factor_for(
    record: Option<&DetectionRecord>,
    dict: &MappingDictionary,
    thresholds: &FilterThresholds,
) -> Option<ScramblingFactor> {
    let ob = select_optimal_object(record?, thresholds)?;
    dict.lookup(&ob.label).ok()
}

pub fn extract(
    stego_records: &[Option<DetectionRecord>],
    keys: &[PositionKey],
    dict: &MappingDictionary,
    key: &SequenceKey,
    thresholds: &FilterThresholds,
) -> Result<ExtractionReport> {
    if stego_records.len() != keys.len() {
        return Err(Error::Protocol(format!(
            "{} stego images but {} position keys",
            stego_records.len(),
            keys.len()
        )));
    }
    let t = key.len();
    for (j, pk) in keys.iter().enumerate() {
        let end = u64::from(pk.start) + u64::from(pk.length);
        if pk.length == 0 || end > t as u64 {
            return Err(Error::Protocol(format!(
                "position key {j} ({}, {}) out of range for t = {t}",
                pk.start, pk.length
            )));
        }
    }

    let mut sequences: HashMap<ScramblingFactor, ScrambledSequence> = HashMap::new();
    let mut report = ExtractionReport {
        bits: Vec::with_capacity(keys.iter().map(|k| k.length as usize).sum()),
        segment_status: Vec::with_capacity(keys.len()),
        padded_bits: 0,
    };
    for (record, pk) in stego_records.iter().zip(keys) {
        let (start, length) = (pk.start as usize, pk.length as usize);
        match factor_for(record.as_ref(), dict, thresholds) {
            Some(factor) => {
                let seq = sequences.entry(factor).or_insert_with(|| scramble(key, factor));
                report.bits.extend_from_slice(&seq.bits()[start..start + length]);
                report.segment_status.push(SegmentStatus::Recovered);
            }
            None => {
                report.bits.extend(std::iter::repeat(false).take(length));
                report.segment_status.push(SegmentStatus::Padded);
                report.padded_bits += length;
            }
        }
    }
    Ok(report)
}

/// MSB-first expansion of bytes into bits.
pub fn text_to_bits(bytes: &[u8]) -> Vec<bool> {
    bytes
        .iter()
        .flat_map(|&b| (0..8).rev().map(move |k| (b >> k) & 1 == 1))
        .collect()
}

/// Packs bits MSB-first into bytes. The length must be a multiple of 8.
pub fn bits_to_text(bits: &[bool]) -> Result<Vec<u8>> {
    if bits.len() % 8 != 0 {
        return Err(Error::Framing(bits.len()));
    }
    Ok(bits
        .chunks(8)
        .map(|c| c.iter().fold(0u8, |acc, &b| (acc << 1) | u8::from(b)))
        .collect())
}

/// Renders bits as ASCII `0`/`1`.
pub fn bits_to_ascii(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Parses ASCII `0`/`1`, ignoring whitespace.
pub fn ascii_to_bits(text: &str) -> Result<Vec<bool>> {
    text.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::parse("bit string", format!("unexpected character {other:?}"))),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::{BoundingBox, DetectedObject};
    use crate::dictionary::FactorOrder;
    use crate::keying::scramble_permutation;
    use proptest::prelude::*;

    fn bits(s: &str) -> Vec<bool> {
        s.bytes().map(|b| b == b'1').collect()
    }

    /// Dictionary {cat: 0} and a key whose factor-0 scramble is 10110100.
    fn worked_setup() -> (MappingDictionary, SequenceKey, DetectionRecord) {
        let dict = MappingDictionary::from_labels(["cat"], FactorOrder::Ascending).unwrap();
        let target = bits("10110100");
        let map = scramble_permutation(ScramblingFactor::new(0), 8);
        let mut raw = vec![false; 8];
        for (i, &src) in map.iter().enumerate() {
            raw[src] = target[i];
        }
        let record = DetectionRecord {
            image_id: "cat.jpg".into(),
            image_w: 100,
            image_h: 100,
            objects: vec![DetectedObject::new("cat", 0.9, BoundingBox::new(0.0, 0.0, 90.0, 90.0))],
        };
        (dict, SequenceKey::from_bits(raw).unwrap(), record)
    }

    #[test]
    fn worked_example_and_loss() {
        let (dict, key, cat) = worked_setup();
        let keys = [PositionKey::new(2, 4), PositionKey::new(2, 2)];
        let th = FilterThresholds::default();

        let full = extract(&[Some(cat.clone()), Some(cat.clone())], &keys, &dict, &key, &th).unwrap();
        assert_eq!(full.bits, bits("110111"));
        assert_eq!(full.padded_bits, 0);

        let lost = extract(&[Some(cat.clone()), None], &keys, &dict, &key, &th).unwrap();
        assert_eq!(lost.bits, bits("110100"));
        assert_eq!(lost.padded_bits, 2);
        assert_eq!(lost.segment_status, [SegmentStatus::Recovered, SegmentStatus::Padded]);

        let none = extract(&[None, None], &[PositionKey::new(0, 4), PositionKey::new(2, 2)], &dict, &key, &th).unwrap();
        assert_eq!(none.bits, bits("000000"));
        assert_eq!(none.padded_bits, 6);

        let mut dog = cat.clone();
        dog.objects[0].label = "dog".into();
        let unknown = extract(&[Some(dog), Some(cat)], &keys, &dict, &key, &th).unwrap();
        assert_eq!(unknown.bits, bits("000011"));
    }

    #[test]
    fn protocol_errors() {
        let (dict, key, cat) = worked_setup();
        let th = FilterThresholds::default();
        assert!(matches!(
            extract(&[Some(cat.clone())], &[], &dict, &key, &th),
            Err(Error::Protocol(_))
        ));
        assert!(matches!(
            extract(&[Some(cat)], &[PositionKey::new(6, 3)], &dict, &key, &th),
            Err(Error::Protocol(_))
        ));
    }

    #[test]
    fn byte_conversions() {
        assert_eq!(bits_to_text(&bits("01000001")).unwrap(), b"A");
        assert!(text_to_bits(&[]).is_empty());
        assert_eq!(text_to_bits(&[0xFF]), bits("11111111"));
        assert_eq!(text_to_bits(&[0x41]), bits("01000001"));
        assert!(matches!(bits_to_text(&bits("0100000")), Err(Error::Framing(7))));
        assert_eq!(ascii_to_bits("01 1\n0").unwrap(), bits("0110"));
        assert!(ascii_to_bits("012").is_err());
        assert_eq!(bits_to_ascii(&bits("1001")), "1001");
    }

    proptest! {
        #[test]
        fn text_bits_round_trip(bytes in proptest::collection::vec(any::<u8>(), 0..256)) {
            let b = text_to_bits(&bytes);
            prop_assert_eq!(b.len(), 8 * bytes.len());
            prop_assert_eq!(bits_to_text(&b).unwrap(), bytes);
        }
    }
}
