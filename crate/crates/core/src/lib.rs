//! Coverless image steganography by dynamic sequence matching.
//!
//! No pixel is ever touched. Each image contributes the label of its dominant
//! detected object; a secret dictionary maps that label to a scrambling
//! factor, and the factor permutes the receiver's sequence key. A message is
//! hidden by greedily matching its prefixes against substrings of those
//! scrambled sequences and sending one image per matched segment, together
//! with an encrypted list of `(start, length)` position keys.
//!
//! Sender: [`build_dictionary`] → [`derive_sequence_key`] → [`build_index`]
//! → [`hide`] → [`seal_keys`].
//! Receiver: [`open_keys`] → [`extract`].

pub mod detection;
pub mod dictionary;
pub mod error;
pub mod eval;
pub mod extractor;
pub mod hider;
pub mod index;
pub mod keying;
pub mod transport;

pub use detection::{
    parse_detection_file, parse_stego_detection_file, select_optimal_object, synthetic_detector, BoundingBox,
    DetectedObject, DetectionRecord, FilterThresholds,
};
pub use dictionary::{build_dictionary, FactorOrder, MappingDictionary, ScramblingFactor};
pub use error::{Error, Result};
pub use eval::{capacity_sweep, perturb, recovery_rate, run_robustness, AttackModel, CorpusParams};
pub use extractor::{bits_to_text, extract, text_to_bits, ExtractionReport, SegmentStatus};
pub use hider::{estimate_capacity, hide, HideResult, PositionKey, SecretMessage, StegoManifest};
pub use index::{build_index, MatchResult, StegoIndex};
pub use keying::{derive_sequence_key, scramble, unscramble_position, EnginePrng, ScrambledSequence, SequenceKey};
pub use transport::{open_keys, seal_keys, TransportSecret};
