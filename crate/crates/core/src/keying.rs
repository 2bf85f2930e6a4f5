//! Deterministic randomness, per-receiver sequence keys and the factor-keyed
//! scrambling permutation.
//!
//! Everything here is bit-exact across implementations: the engine is
//! SplitMix64, keys take generator output least-significant bit first, and
//! scrambling is a Fisher–Yates shuffle drawing `next() % (i + 1)`.

use std::io::Write;

use crate::dictionary::ScramblingFactor;
use crate::error::{Error, Result};

/// Default sequence key length in bits.
pub const DEFAULT_KEY_LENGTH: usize = 10_000;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

const KEY_MAGIC: &[u8; 4] = b"CSSK";
const KEY_VERSION: u8 = 0x01;

/// SplitMix64 generator. Single-threaded by contract.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnginePrng {
    state: u64,
}

impl EnginePrng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut r = self.state;
        r = (r ^ (r >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        r = (r ^ (r >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        r ^ (r >> 31)
    }

    /// Uniform draw in `[0, 1)` built from the top 53 bits of one output.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// `next_u64() % bound`. Panics if `bound == 0`.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        self.next_u64() % bound
    }

    pub fn next_bits(&mut self, count: usize) -> Vec<bool> {
        let mut bits = Vec::with_capacity(count);
        while bits.len() < count {
            let word = self.next_u64();
            let take = (count - bits.len()).min(64);
            bits.extend((0..take).map(|k| (word >> k) & 1 == 1));
        }
        bits
    }
}

/// Derives an independent seed from a base seed and a stream index.
pub(crate) fn sub_seed(base: u64, stream: u64) -> u64 {
    EnginePrng::new(base ^ stream.wrapping_mul(GOLDEN_GAMMA)).next_u64()
}

/// A receiver's secret bit sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceKey {
    bits: Vec<bool>,
    receiver_id: Option<u64>,
}

impl SequenceKey {
    /// Wraps raw bits. `receiver_id` is unknown for keys not derived from an id.
    pub fn from_bits(bits: Vec<bool>) -> Result<Self> {
        if bits.len() < 2 {
            return Err(Error::InvalidLength(bits.len()));
        }
        if bits.len() > u32::MAX as usize {
            return Err(Error::InvalidLength(bits.len()));
        }
        Ok(Self {
            bits,
            receiver_id: None,
        })
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn receiver_id(&self) -> Option<u64> {
        self.receiver_id
    }

    /// Serializes to the `CSSK` key file layout.
    pub fn to_file_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(9 + self.bits.len().div_ceil(8));
        out.extend_from_slice(KEY_MAGIC);
        out.push(KEY_VERSION);
        out.extend_from_slice(&(self.bits.len() as u32).to_le_bytes());
        out.extend(self.bits.chunks(8).map(|chunk| {
            chunk
                .iter()
                .enumerate()
                .fold(0u8, |byte, (k, &b)| byte | (u8::from(b) << k))
        }));
        out
    }

    pub fn from_file_bytes(data: &[u8]) -> Result<Self> {
        if data.len() < 9 {
            return Err(Error::Format("sequence key file truncated".into()));
        }
        if &data[..4] != KEY_MAGIC {
            return Err(Error::Format("bad sequence key magic".into()));
        }
        if data[4] != KEY_VERSION {
            return Err(Error::Format(format!(
                "unsupported sequence key version {}",
                data[4]
            )));
        }
        let t = u32::from_le_bytes(data[5..9].try_into().unwrap()) as usize;
        let packed = &data[9..];
        if packed.len() != t.div_ceil(8) {
            return Err(Error::Format(format!(
                "sequence key body is {} bytes, expected {}",
                packed.len(),
                t.div_ceil(8)
            )));
        }
        let bits: Vec<bool> = (0..t).map(|i| (packed[i / 8] >> (i % 8)) & 1 == 1).collect();
        if t % 8 != 0 && packed[t / 8] >> (t % 8) != 0 {
            return Err(Error::Format("nonzero padding bits in sequence key".into()));
        }
        Self::from_bits(bits)
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(&self.to_file_bytes())?;
        Ok(())
    }
}

/// Seeds the engine with `receiver_id` and collects `t` bits LSB-first.
pub fn derive_sequence_key(receiver_id: u64, t: usize) -> Result<SequenceKey> {
    if t < 2 || t > u32::MAX as usize {
        return Err(Error::InvalidLength(t));
    }
    let bits = EnginePrng::new(receiver_id).next_bits(t);
    Ok(SequenceKey {
        bits,
        receiver_id: Some(receiver_id),
    })
}

/// A sequence key permuted under one scrambling factor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScrambledSequence {
    bits: Vec<bool>,
    factor: ScramblingFactor,
}

impl ScrambledSequence {
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn factor(&self) -> ScramblingFactor {
        self.factor
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Half-open slice `[start, start + length)`.
    pub fn slice(&self, start: usize, length: usize) -> Option<&[bool]> {
        let end = start.checked_add(length)?;
        self.bits.get(start..end)
    }
}

fn fisher_yates<T>(items: &mut [T], factor: ScramblingFactor) {
    let mut prng = EnginePrng::new(factor.value());
    for i in (1..items.len()).rev() {
        let j = prng.next_below(i as u64 + 1) as usize;
        items.swap(i, j);
    }
}

pub fn scramble(key: &SequenceKey, factor: ScramblingFactor) -> ScrambledSequence {
    let mut bits = key.bits.clone();
    fisher_yates(&mut bits, factor);
    ScrambledSequence { bits, factor }
}

/// Source position map of the scrambling permutation: `scrambled[i] == key[map[i]]`.
pub fn scramble_permutation(factor: ScramblingFactor, t: usize) -> Vec<usize> {
    let mut positions: Vec<usize> = (0..t).collect();
    fisher_yates(&mut positions, factor);
    positions
}

/// Position in the sequence key that ended up at `scrambled_index` after scrambling.
///
/// Recomputes the whole permutation; callers mapping many positions should use
/// [`scramble_permutation`] once instead.
pub fn unscramble_position(
    scrambled_index: usize,
    factor: ScramblingFactor,
    t: usize,
) -> Result<usize> {
    if scrambled_index >= t {
        return Err(Error::IndexOutOfRange {
            index: scrambled_index,
            len: t,
        });
    }
    Ok(scramble_permutation(factor, t)[scrambled_index])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(v: u64) -> ScramblingFactor {
        ScramblingFactor::new(v)
    }

    #[test]
    fn splitmix_reference_vectors() {
        let mut prng = EnginePrng::new(0);
        assert_eq!(prng.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(prng.next_u64(), 0x6E78_9E6A_A1B9_65F4);

        // rosettacode reference stream for seed 1234567
        let mut prng = EnginePrng::new(1_234_567);
        assert_eq!(prng.next_u64(), 6_457_827_717_110_365_317);
        assert_eq!(prng.next_u64(), 3_203_168_211_198_807_973);
        assert_eq!(prng.next_u64(), 9_817_491_932_198_370_423);
    }

    #[test]
    fn same_seed_same_stream() {
        let a: Vec<u64> = {
            let mut p = EnginePrng::new(99);
            (0..16).map(|_| p.next_u64()).collect()
        };
        let mut p = EnginePrng::new(99);
        let b: Vec<u64> = (0..16).map(|_| p.next_u64()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn key_bits_lsb_first() {
        let key = derive_sequence_key(0, 8).unwrap();
        let expected = [true, true, true, true, false, true, false, true];
        assert_eq!(key.bits(), &expected);
        assert_eq!(key.receiver_id(), Some(0));
    }

    #[test]
    fn key_is_deterministic_and_receiver_specific() {
        let a = derive_sequence_key(5, 64).unwrap();
        assert_eq!(a, derive_sequence_key(5, 64).unwrap());
        let b = derive_sequence_key(6, 64).unwrap();
        let distance = a.bits().iter().zip(b.bits()).filter(|(x, y)| x != y).count();
        // frozen from an independent SplitMix64 evaluation
        assert_eq!(distance, 35);
        assert!((12..=52).contains(&distance));
    }

    #[test]
    fn key_length_validation() {
        assert!(matches!(derive_sequence_key(1, 1), Err(Error::InvalidLength(1))));
        assert!(matches!(derive_sequence_key(1, 0), Err(Error::InvalidLength(0))));
        assert!(derive_sequence_key(1, 2).is_ok());
        assert!(SequenceKey::from_bits(vec![true]).is_err());
    }

    #[test]
    fn two_bit_reversal() {
        // factor 2: first draw is even, so i=1 swaps with j=0
        assert_eq!(EnginePrng::new(2).next_u64() % 2, 0);
        let key = SequenceKey::from_bits(vec![true, false]).unwrap();
        assert_eq!(scramble(&key, f(2)).bits(), &[false, true]);
        assert_eq!(unscramble_position(0, f(2), 2).unwrap(), 1);
        assert_eq!(unscramble_position(1, f(2), 2).unwrap(), 0);
        // factor 0 draws odd: identity
        assert_eq!(scramble(&key, f(0)).bits(), &[true, false]);
    }

    #[test]
    fn unscramble_out_of_range() {
        assert!(matches!(
            unscramble_position(8, f(1), 8),
            Err(Error::IndexOutOfRange { index: 8, len: 8 })
        ));
    }

    #[test]
    fn permutation_inverts_scramble() {
        let key = derive_sequence_key(42, 1000).unwrap();
        for factor in 0..10 {
            let scrambled = scramble(&key, f(factor));
            let map = scramble_permutation(f(factor), key.len());
            let mut restored = vec![false; key.len()];
            for (i, &src) in map.iter().enumerate() {
                assert_eq!(scrambled.bits()[i], key.bits()[src]);
                restored[src] = scrambled.bits()[i];
            }
            assert_eq!(restored, key.bits());
        }
    }

    #[test]
    fn distinct_factors_decorrelate() {
        let key = derive_sequence_key(2024, DEFAULT_KEY_LENGTH).unwrap();
        for pair in 0..100u64 {
            let a = scramble(&key, f(2 * pair));
            let b = scramble(&key, f(2 * pair + 1));
            let diff = a.bits().iter().zip(b.bits()).filter(|(x, y)| x != y).count();
            assert!(diff >= 4000, "pair {pair}: only {diff} differing positions");
        }
    }

    #[test]
    fn key_file_round_trip_and_errors() {
        for t in [2usize, 7, 8, 9, 64, 1001] {
            let key = derive_sequence_key(t as u64, t).unwrap();
            let bytes = key.to_file_bytes();
            assert_eq!(&bytes[..5], b"CSSK\x01");
            assert_eq!(bytes.len(), 9 + t.div_ceil(8));
            let back = SequenceKey::from_file_bytes(&bytes).unwrap();
            assert_eq!(back.bits(), key.bits());
            assert_eq!(back.receiver_id(), None);
        }
        let key = derive_sequence_key(0, 8).unwrap();
        // 11110101 LSB-first packs to 0xAF
        assert_eq!(key.to_file_bytes(), b"CSSK\x01\x08\x00\x00\x00\xAF");

        let mut bad = derive_sequence_key(3, 9).unwrap().to_file_bytes();
        *bad.last_mut().unwrap() |= 0x80;
        assert!(matches!(SequenceKey::from_file_bytes(&bad), Err(Error::Format(_))));
        assert!(SequenceKey::from_file_bytes(b"CSSK").is_err());
        assert!(SequenceKey::from_file_bytes(b"XXXX\x01\x02\x00\x00\x00\x01").is_err());
    }
}
