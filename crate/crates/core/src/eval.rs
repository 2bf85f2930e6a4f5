//! Attack simulation, recovery rate and capacity sweeps.
//!
//! Attacks act on detection records rather than pixels: losing the optimal
//! object, pushing confidences under the threshold, or flipping the label
//! are the three ways a real image attack can break extraction.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::detection::{label_pool, optimal_object_index, synthetic_detector, DetectionRecord, FilterThresholds};
use crate::dictionary::{build_dictionary, FactorOrder};
use crate::error::{Error, Result};
use crate::extractor::extract;
use crate::hider::{estimate_capacity, hide, mean_and_stddev, SecretMessage};
use crate::index::{build_index, StegoIndex};
use crate::keying::{derive_sequence_key, sub_seed, EnginePrng};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AttackModel {
    /// Probability that the optimal object disappears.
    pub drop_probability: f64,
    /// Multiplier applied to every confidence. `0.0` disables decay.
    pub confidence_decay: f64,
    /// Probability that the optimal object's label is replaced by a random pool label.
    pub label_flip_probability: f64,
}

impl AttackModel {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(drop_probability: f64, confidence_decay: f64, label_flip_probability: f64) -> Result<Self> {
        let model = Self {
            drop_probability,
            confidence_decay,
            label_flip_probability,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("drop probability", self.drop_probability),
            ("confidence decay", self.confidence_decay),
            ("flip probability", self.label_flip_probability),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("{name} {v} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Applies `model` to each record. Deterministic under `seed`.
///
/// The flip pool is the sorted set of labels present anywhere in `records`.
pub fn perturb(
    records: &[DetectionRecord],
    model: &AttackModel,
    thresholds: &FilterThresholds,
    seed: u64,
) -> Vec<DetectionRecord> {
    let pool: Vec<String> = records
        .iter()
        .flat_map(|r| r.objects.iter().map(|o| o.label.clone()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut prng = EnginePrng::new(seed);
    records
        .iter()
        .map(|record| {
            let drop_draw = prng.next_f64();
            let flip_draw = prng.next_f64();
            let flip_pick = prng.next_u64();
            let mut out = record.clone();
            if let Some(opt) = optimal_object_index(record, thresholds) {
                if drop_draw < model.drop_probability {
                    out.objects.remove(opt);
                } else if flip_draw < model.label_flip_probability {
                    out.objects[opt].label = pool[(flip_pick % pool.len() as u64) as usize].clone();
                }
            }
            if model.confidence_decay > 0.0 {
                for ob in &mut out.objects {
                    ob.confidence *= model.confidence_decay;
                }
            }
            out
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessResult {
    pub recovery_rate: f64,
    pub segments_lost: usize,
    pub bits_total: usize,
}

/// Fraction of bit positions where `recovered` agrees with `original`.
///
/// `segments_lost` is left at zero; pipeline runs fill it in.
pub fn recovery_rate(original: &[bool], recovered: &[bool]) -> Result<RobustnessResult> {
    if original.len() != recovered.len() {
        return Err(Error::Protocol(format!(
            "original has {} bits, recovered has {}",
            original.len(),
            recovered.len()
        )));
    }
    if original.is_empty() {
        return Err(Error::InvalidArgument("cannot score an empty message".into()));
    }
    let correct = original.iter().zip(recovered).filter(|(a, b)| a == b).count();
    Ok(RobustnessResult {
        recovery_rate: correct as f64 / original.len() as f64,
        segments_lost: 0,
        bits_total: original.len(),
    })
}

/// Shape of the synthetic corpus used by each robustness trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusParams {
    pub images: usize,
    pub labels: usize,
    pub key_length: usize,
    pub message_bits: usize,
}

impl Default for CorpusParams {
    fn default() -> Self {
        Self {
            images: 200,
            labels: 50,
            key_length: 10_000,
            message_bits: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessSummary {
    pub mean: f64,
    pub stddev: f64,
    pub trials: Vec<RobustnessResult>,
}

/// One full hide → attack → extract round on a fresh synthetic corpus.
pub fn robustness_trial(
    corpus: &CorpusParams,
    model: &AttackModel,
    thresholds: &FilterThresholds,
    seed: u64,
) -> Result<RobustnessResult> {
    let records = synthetic_detector(sub_seed(seed, 0), corpus.images, &label_pool(corpus.labels));
    let dict = build_dictionary(&records, thresholds, FactorOrder::Ascending)?;
    let key = derive_sequence_key(sub_seed(seed, 1), corpus.key_length)?;
    let index = build_index(&records, &dict, &key, thresholds)?;
    let message = SecretMessage::from_bits(EnginePrng::new(sub_seed(seed, 2)).next_bits(corpus.message_bits));
    let hidden = hide(&message, &index, Some(sub_seed(seed, 3)))?;

    let by_id: HashMap<&str, &DetectionRecord> = records.iter().map(|r| (r.image_id.as_str(), r)).collect();
    let sent: Vec<DetectionRecord> = hidden.stego_images.iter().map(|id| by_id[id.as_str()].clone()).collect();
    let received: Vec<Option<DetectionRecord>> = perturb(&sent, model, thresholds, sub_seed(seed, 4))
        .into_iter()
        .map(Some)
        .collect();
    let report = extract(&received, &hidden.position_keys, &dict, &key, thresholds)?;
    let mut result = recovery_rate(message.bits(), &report.bits)?;
    result.segments_lost = report.padded_segments();
    Ok(result)
}

pub fn run_robustness(corpus: &CorpusParams, model: &AttackModel, trials: usize, seed: u64) -> Result<RobustnessSummary> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    model.validate()?;
    let thresholds = FilterThresholds::default();
    let results = (0..trials as u64)
        .map(|i| robustness_trial(corpus, model, &thresholds, sub_seed(seed, i)))
        .collect::<Result<Vec<_>>>()?;
    let rates: Vec<f64> = results.iter().map(|r| r.recovery_rate).collect();
    let (mean, stddev) = mean_and_stddev(&rates);
    Ok(RobustnessSummary {
        mean,
        stddev,
        trials: results,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityCell {
    pub t: usize,
    pub factors: u64,
    pub mean_bits_per_image: f64,
    pub stddev: f64,
    pub trials: usize,
}

/// Default message length for capacity sweeps.
pub const SWEEP_MESSAGE_BITS: usize = 10_000;

/// Capacity over a `t × F` grid, rows ordered by `t` then `F` as given.
pub fn capacity_sweep(
    t_values: &[usize],
    factor_counts: &[u64],
    trials: usize,
    message_bits: usize,
    seed: u64,
) -> Result<Vec<CapacityCell>> {
    if t_values.is_empty() || factor_counts.is_empty() {
        return Err(Error::InvalidArgument("empty sweep grid".into()));
    }
    if let Some(t) = t_values.iter().find(|&&t| t < 2) {
        return Err(Error::InvalidArgument(format!("key length {t} below 2")));
    }
    if factor_counts.contains(&0) {
        return Err(Error::InvalidArgument("factor count must be at least 1".into()));
    }
    if message_bits == 0 {
        return Err(Error::InvalidArgument("message length must be positive".into()));
    }
    let mut cells = Vec::with_capacity(t_values.len() * factor_counts.len());
    for &t in t_values {
        let key = derive_sequence_key(sub_seed(seed, t as u64), t)?;
        for &factors in factor_counts {
            let index = StegoIndex::synthetic(key.clone(), factors)?;
            let est = estimate_capacity(&index, trials, message_bits, seed)?;
            cells.push(CapacityCell {
                t,
                factors,
                mean_bits_per_image: est.mean,
                stddev: est.stddev,
                trials,
            });
        }
    }
    Ok(cells)
}

pub fn capacity_csv(cells: &[CapacityCell]) -> String {
    let mut out = String::from("t,factors,mean_bits_per_image,stddev,trials\n");
    for c in cells {
        writeln!(out, "{},{},{:.3},{:.3},{}", c.t, c.factors, c.mean_bits_per_image, c.stddev, c.trials).unwrap();
    }
    out
}

pub fn robustness_csv(corpus: &CorpusParams, model: &AttackModel, summary: &RobustnessSummary) -> String {
    format!(
        "t,images,labels,message_bits,drop_prob,conf_decay,flip_prob,mean_recovery_rate,stddev,trials\n\
         {},{},{},{},{:.3},{:.3},{:.3},{:.3},{:.3},{}\n",
        corpus.key_length,
        corpus.images,
        corpus.labels,
        corpus.message_bits,
        model.drop_probability,
        model.confidence_decay,
        model.label_flip_probability,
        summary.mean,
        summary.stddev,
        summary.trials.len()
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::{select_optimal_object, BoundingBox, DetectedObject};
    use proptest::prelude::*;

    fn bits(s: &str) -> Vec<bool> {
        s.bytes().map(|b| b == b'1').collect()
    }

    #[test]
    fn zero_model_is_identity() {
        let recs = synthetic_detector(1, 50, &label_pool(10));
        assert_eq!(perturb(&recs, &AttackModel::none(), &FilterThresholds::default(), 9), recs);
    }

    #[test]
    fn full_drop_removes_every_optimal_object() {
        let th = FilterThresholds::default();
        let recs = synthetic_detector(2, 100, &label_pool(10));
        let model = AttackModel::new(1.0, 0.0, 0.0).unwrap();
        let out = perturb(&recs, &model, &th, 3);
        assert_eq!(out.len(), recs.len());
        for (before, after) in recs.iter().zip(&out) {
            let opt = select_optimal_object(before, &th).unwrap();
            assert_eq!(after.objects.len(), before.objects.len() - 1);
            assert!(!after.objects.iter().any(|o| o == opt));
        }
    }

    #[test]
    fn decay_against_threshold() {
        let th = FilterThresholds::default();
        let rec = |c: f64| DetectionRecord {
            image_id: "x".into(),
            image_w: 10,
            image_h: 10,
            objects: vec![DetectedObject::new("cat", c, BoundingBox::new(0.0, 0.0, 8.0, 8.0))],
        };
        let model = AttackModel::new(0.0, 0.6, 0.0).unwrap();
        let out = perturb(&[rec(0.9), rec(0.8)], &model, &th, 0);
        assert!((out[0].objects[0].confidence - 0.54).abs() < 1e-12);
        assert!((out[1].objects[0].confidence - 0.48).abs() < 1e-12);
        assert!(select_optimal_object(&out[0], &th).is_some());
        assert!(select_optimal_object(&out[1], &th).is_none());
    }

    #[test]
    fn flips_draw_from_pool() {
        let th = FilterThresholds::default();
        let recs = synthetic_detector(4, 100, &label_pool(20));
        let model = AttackModel::new(0.0, 0.0, 1.0).unwrap();
        let out = perturb(&recs, &model, &th, 5);
        assert_eq!(out, perturb(&recs, &model, &th, 5));
        let pool = label_pool(20);
        let changed = recs
            .iter()
            .zip(&out)
            .filter(|(a, b)| select_optimal_object(a, &th).unwrap().label != b.objects[optimal_object_index(a, &th).unwrap()].label)
            .count();
        assert!(changed > 80, "{changed}");
        assert!(out.iter().flat_map(|r| &r.objects).all(|o| pool.contains(&o.label)));
    }

    #[test]
    fn model_validation() {
        assert!(AttackModel::new(1.1, 0.0, 0.0).is_err());
        assert!(AttackModel::new(0.0, -0.1, 0.0).is_err());
    }

    #[test]
    fn recovery_rate_examples() {
        let a = bits("110111");
        assert_eq!(recovery_rate(&a, &a).unwrap().recovery_rate, 1.0);
        let comp: Vec<bool> = a.iter().map(|b| !b).collect();
        assert_eq!(recovery_rate(&a, &comp).unwrap().recovery_rate, 0.0);
        assert_eq!(recovery_rate(&a, &bits("000011")).unwrap().recovery_rate, 0.5);
        assert!(matches!(recovery_rate(&a, &bits("0")), Err(Error::Protocol(_))));
    }

    proptest! {
        #[test]
        fn recovery_rate_symmetry(pairs in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..200)) {
            let (a, b): (Vec<bool>, Vec<bool>) = pairs.into_iter().unzip();
            let r = recovery_rate(&a, &b).unwrap().recovery_rate;
            prop_assert_eq!(r, recovery_rate(&b, &a).unwrap().recovery_rate);
            let na: Vec<bool> = a.iter().map(|x| !x).collect();
            let nb: Vec<bool> = b.iter().map(|x| !x).collect();
            prop_assert_eq!(r, recovery_rate(&na, &nb).unwrap().recovery_rate);
            prop_assert!((0.0..=1.0).contains(&r));
        }
    }

    #[test]
    fn zero_attack_small_corpus_recovers_exactly() {
        let corpus = CorpusParams {
            images: 40,
            labels: 10,
            key_length: 500,
            message_bits: 800,
        };
        for seed in 0..5 {
            let s = run_robustness(&corpus, &AttackModel::none(), 2, seed).unwrap();
            assert_eq!(s.mean, 1.0);
            assert!(s.trials.iter().all(|t| t.segments_lost == 0));
        }
    }

    #[test]
    fn drop_lower_bound() {
        let corpus = CorpusParams {
            images: 100,
            labels: 30,
            key_length: 2000,
            message_bits: 4000,
        };
        for p in [0.1, 0.3] {
            let model = AttackModel::new(p, 0.0, 0.0).unwrap();
            let s = run_robustness(&corpus, &model, 8, 11).unwrap();
            assert!(s.mean >= 1.0 - p * 0.55, "p={p}: R={}", s.mean);
        }
    }

    #[test]
    fn sweep_grid_and_csv() {
        let cells = capacity_sweep(&[100, 400], &[4, 8], 2, 1000, 1).unwrap();
        assert_eq!(cells.len(), 4);
        assert_eq!((cells[1].t, cells[1].factors), (100, 8));
        let csv = capacity_csv(&cells);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,factors,mean_bits_per_image,stddev,trials"));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 5);
        assert_eq!(row[2].split('.').nth(1).unwrap().len(), 3);
        assert_eq!(csv, capacity_csv(&capacity_sweep(&[100, 400], &[4, 8], 2, 1000, 1).unwrap()));

        assert!(capacity_sweep(&[], &[4], 1, 10, 0).is_err());
        assert!(capacity_sweep(&[1], &[4], 1, 10, 0).is_err());
        assert!(capacity_sweep(&[10], &[0], 1, 10, 0).is_err());
    }

    #[test]
    fn capacity_tracks_log2_of_search_space() {
        let cells = capacity_sweep(&[100, 1000, 4000], &[8, 32], 3, 4000, 21).unwrap();
        assert!(cells.len() >= 6);
        for c in &cells {
            let target = (c.factors as f64 * c.t as f64).log2();
            assert!(
                (c.mean_bits_per_image - target).abs() <= 1.5,
                "t={} F={}: {} vs {target}",
                c.t,
                c.factors,
                c.mean_bits_per_image
            );
        }
    }
}
