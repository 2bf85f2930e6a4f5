//! Detection records and the optimal-object filter.
//!
//! A [`DetectionRecord`] is the only thing the engine knows about an image.
//! Any detector that writes the interchange JSON can feed the pipeline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keying::EnginePrng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl From<[f64; 4]> for BoundingBox {
    fn from([x, y, w, h]: [f64; 4]) -> Self {
        Self { x, y, w, h }
    }
}

impl From<BoundingBox> for [f64; 4] {
    fn from(b: BoundingBox) -> Self {
        [b.x, b.y, b.w, b.h]
    }
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedObject {
    pub label: String,
    pub confidence: f64,
    #[serde(rename = "bbox")]
    pub bbox: BoundingBox,
}

impl DetectedObject {
    pub fn new(label: impl Into<String>, confidence: f64, bbox: BoundingBox) -> Self {
        Self {
            label: label.into(),
            confidence,
            bbox,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub image_id: String,
    #[serde(rename = "width")]
    pub image_w: u32,
    #[serde(rename = "height")]
    pub image_h: u32,
    pub objects: Vec<DetectedObject>,
}

impl DetectionRecord {
    pub fn pixel_count(&self) -> f64 {
        f64::from(self.image_w) * f64::from(self.image_h)
    }

    pub fn validate(&self) -> Result<()> {
        let id = &self.image_id;
        if self.image_w == 0 || self.image_h == 0 {
            return Err(Error::validation(id, "image dimensions must be positive"));
        }
        let (iw, ih) = (f64::from(self.image_w), f64::from(self.image_h));
        for (i, ob) in self.objects.iter().enumerate() {
            if ob.label.is_empty() {
                return Err(Error::validation(id, format!("object {i} has an empty label")));
            }
            if !(0.0..=1.0).contains(&ob.confidence) {
                return Err(Error::validation(
                    id,
                    format!("object {i} confidence {} outside [0, 1]", ob.confidence),
                ));
            }
            let b = ob.bbox;
            let finite = [b.x, b.y, b.w, b.h].iter().all(|v| v.is_finite());
            if !finite || b.w <= 0.0 || b.h <= 0.0 || b.x < 0.0 || b.y < 0.0 {
                return Err(Error::validation(id, format!("object {i} has a malformed box")));
            }
            if b.x + b.w > iw || b.y + b.h > ih {
                return Err(Error::validation(
                    id,
                    format!("object {i} box exceeds the {}x{} image", self.image_w, self.image_h),
                ));
            }
        }
        Ok(())
    }
}

/// Area and confidence gates. Both comparisons are strict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterThresholds {
    pub min_area_fraction: f64,
    pub min_confidence: f64,
}

impl Default for FilterThresholds {
    fn default() -> Self {
        Self {
            min_area_fraction: 0.15,
            min_confidence: 0.5,
        }
    }
}

impl FilterThresholds {
    pub fn new(min_area_fraction: f64, min_confidence: f64) -> Result<Self> {
        let open = |v: f64| v > 0.0 && v < 1.0;
        if !open(min_area_fraction) || !open(min_confidence) {
            return Err(Error::InvalidThresholds(format!(
                "min_area={min_area_fraction}, min_conf={min_confidence}; both must lie in (0, 1)"
            )));
        }
        Ok(Self {
            min_area_fraction,
            min_confidence,
        })
    }

    fn passes(&self, record: &DetectionRecord, ob: &DetectedObject) -> bool {
        ob.bbox.area() > self.min_area_fraction * record.pixel_count()
            && ob.confidence > self.min_confidence
    }
}

/// Position of the optimal object in `record.objects`, if any object qualifies.
pub fn optimal_object_index(record: &DetectionRecord, thresholds: &FilterThresholds) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, ob) in record.objects.iter().enumerate() {
        if !thresholds.passes(record, ob) {
            continue;
        }
        best = match best {
            None => Some(i),
            Some(b) => {
                let cur = &record.objects[b];
                // strictly better only; equal candidates keep the earlier index
                let better = ob.confidence > cur.confidence
                    || (ob.confidence == cur.confidence && ob.bbox.area() > cur.bbox.area());
                Some(if better { i } else { b })
            }
        };
    }
    best
}

/// The highest-confidence object among those exceeding both thresholds.
///
/// Ties break by larger box area, then by earlier position.
pub fn select_optimal_object<'a>(
    record: &'a DetectionRecord,
    thresholds: &FilterThresholds,
) -> Option<&'a DetectedObject> {
    optimal_object_index(record, thresholds).map(|i| &record.objects[i])
}

#[derive(Deserialize)]
struct DetectionFile<T> {
    images: Vec<T>,
}

#[derive(Serialize)]
struct DetectionFileRef<'a, T> {
    images: &'a [T],
}

fn json_error(err: &serde_json::Error, bytes: &[u8]) -> Error {
    let context = locate_record(bytes, err.line(), err.column())
        .map(|i| format!("record {i}"))
        .unwrap_or_else(|| "detection file".to_owned());
    Error::parse(context, err)
}

/// Best-effort index of the `images` entry that contains a given line/column.
fn locate_record(bytes: &[u8], line: usize, column: usize) -> Option<usize> {
    let text = std::str::from_utf8(bytes).ok()?;
    let mut offset = 0;
    for (n, l) in text.split_inclusive('\n').enumerate() {
        if n + 1 == line {
            offset += column.saturating_sub(1);
            break;
        }
        offset += l.len();
    }
    let start = text.find("\"images\"")?;
    if offset <= start {
        return None;
    }
    let (mut depth, mut index, mut in_str, mut esc) = (0i32, 0usize, false, false);
    let mut seen_array = false;
    for &c in &text.as_bytes()[start + 8..offset.min(text.len())] {
        if in_str {
            match c {
                _ if esc => esc = false,
                b'\\' => esc = true,
                b'"' => in_str = false,
                _ => {}
            }
            continue;
        }
        match c {
            b'"' => in_str = true,
            b'[' | b'{' => {
                if c == b'[' && !seen_array {
                    seen_array = true;
                }
                depth += 1;
            }
            b']' | b'}' => depth -= 1,
            b',' if depth == 1 => index += 1,
            _ => {}
        }
    }
    seen_array.then_some(index)
}

/// Parses and validates a detection interchange document.
pub fn parse_detection_file(bytes: &[u8]) -> Result<Vec<DetectionRecord>> {
    let file: DetectionFile<DetectionRecord> =
        serde_json::from_slice(bytes).map_err(|e| json_error(&e, bytes))?;
    for record in &file.images {
        record.validate()?;
    }
    Ok(file.images)
}

/// Like [`parse_detection_file`] but `null` entries stand for lost images.
pub fn parse_stego_detection_file(bytes: &[u8]) -> Result<Vec<Option<DetectionRecord>>> {
    let file: DetectionFile<Option<DetectionRecord>> =
        serde_json::from_slice(bytes).map_err(|e| json_error(&e, bytes))?;
    for record in file.images.iter().flatten() {
        record.validate()?;
    }
    Ok(file.images)
}

pub fn detection_file_json(records: &[DetectionRecord]) -> String {
    serde_json::to_string_pretty(&DetectionFileRef { images: records }).expect("serializable")
}

pub fn stego_detection_file_json(records: &[Option<DetectionRecord>]) -> String {
    serde_json::to_string_pretty(&DetectionFileRef { images: records }).expect("serializable")
}

const SYNTH_WIDTH: u32 = 640;
const SYNTH_HEIGHT: u32 = 480;

/// Deterministic stand-in for a real detector.
///
/// Every record carries one dominant object that clears the default
/// thresholds, plus up to three distractors that may or may not.
pub fn synthetic_detector(seed: u64, image_count: usize, label_pool: &[String]) -> Vec<DetectionRecord> {
    assert!(!label_pool.is_empty(), "label pool must be nonempty");
    let mut prng = EnginePrng::new(seed);
    let (w, h) = (f64::from(SYNTH_WIDTH), f64::from(SYNTH_HEIGHT));
    let pick_label = |prng: &mut EnginePrng| {
        label_pool[prng.next_below(label_pool.len() as u64) as usize].clone()
    };
    let random_box = |prng: &mut EnginePrng, min_frac: f64, max_frac: f64| {
        let bw = (w * (min_frac + (max_frac - min_frac) * prng.next_f64())).round().max(1.0);
        let bh = (h * (min_frac + (max_frac - min_frac) * prng.next_f64())).round().max(1.0);
        let x = ((w - bw) * prng.next_f64()).floor();
        let y = ((h - bh) * prng.next_f64()).floor();
        BoundingBox::new(x, y, bw, bh)
    };

    (0..image_count)
        .map(|i| {
            // dominant box spans 50..90% per side, i.e. at least 25% of the pixels
            let mut objects = vec![DetectedObject::new(
                pick_label(&mut prng),
                0.80 + 0.19 * prng.next_f64(),
                random_box(&mut prng, 0.5, 0.9),
            )];
            let distractors = prng.next_below(4);
            for _ in 0..distractors {
                let confidence = 0.05 + 0.70 * prng.next_f64();
                let bbox = random_box(&mut prng, 0.1, 0.6);
                objects.push(DetectedObject::new(pick_label(&mut prng), confidence, bbox));
            }
            // detectors do not sort by class; shuffle the dominant object into place
            let slot = prng.next_below(objects.len() as u64) as usize;
            objects.swap(0, slot);
            DetectionRecord {
                image_id: format!("img{seed:016x}-{i:05}"),
                image_w: SYNTH_WIDTH,
                image_h: SYNTH_HEIGHT,
                objects,
            }
        })
        .collect()
}

/// Generated label names `label000, label001, ...`.
pub fn label_pool(count: usize) -> Vec<String> {
    (0..count).map(|i| format!("label{i:03}")).collect()
}
