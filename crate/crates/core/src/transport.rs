//! Encrypted position-key file.
//!
//! Layout (little-endian):
//!
//! ```text
//! "CSPK" | 0x01 | nonce[12] | AES-256-GCM(payload) | tag[16]
//! payload = m:u32 | m × (start:u32, length:u32)
//! ```
//!
//! The associated data is the five header bytes.

use aes_gcm::aead::{Aead, KeyInit, Payload};
use aes_gcm::{Aes256Gcm, Key, Nonce};
use rand::{CryptoRng, RngCore};

use crate::error::{Error, Result};
use crate::hider::PositionKey;

const MAGIC: &[u8; 4] = b"CSPK";
const VERSION: u8 = 0x01;
const HEADER_LEN: usize = 5;
const NONCE_LEN: usize = 12;
const TAG_LEN: usize = 16;

/// 32-byte pre-shared secret for sealing position keys.
#[derive(Clone, PartialEq, Eq)]
pub struct TransportSecret([u8; 32]);

impl TransportSecret {
    pub fn new(bytes: [u8; 32]) -> Self {
        Self(bytes)
    }

    /// Accepts exactly 32 raw bytes.
    pub fn from_slice(bytes: &[u8]) -> Result<Self> {
        let arr: [u8; 32] = bytes
            .try_into()
            .map_err(|_| Error::Format(format!("pre-shared key must be 32 bytes, got {}", bytes.len())))?;
        Ok(Self(arr))
    }

    pub fn generate(rng: &mut (impl RngCore + CryptoRng)) -> Self {
        let mut bytes = [0u8; 32];
        rng.fill_bytes(&mut bytes);
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    fn cipher(&self) -> Aes256Gcm {
        Aes256Gcm::new(Key::<Aes256Gcm>::from_slice(&self.0))
    }
}

impl std::fmt::Debug for TransportSecret {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("TransportSecret(..)")
    }
}

fn encode_payload(keys: &[PositionKey]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + 8 * keys.len());
    out.extend_from_slice(&(keys.len() as u32).to_le_bytes());
    for k in keys {
        out.extend_from_slice(&k.start.to_le_bytes());
        out.extend_from_slice(&k.length.to_le_bytes());
    }
    out
}

fn decode_payload(payload: &[u8]) -> Result<Vec<PositionKey>> {
    let word = |i: usize| u32::from_le_bytes(payload[i..i + 4].try_into().unwrap());
    if payload.len() < 4 {
        return Err(Error::Format("position key payload truncated".into()));
    }
    let m = word(0) as usize;
    if payload.len() != 4 + 8 * m {
        return Err(Error::Format(format!(
            "position key payload holds {} bytes for {m} records",
            payload.len()
        )));
    }
    Ok((0..m).map(|r| PositionKey::new(word(4 + 8 * r), word(8 + 8 * r))).collect())
}

/// Seals `keys` under a fresh random nonce.
pub fn seal_keys(keys: &[PositionKey], secret: &TransportSecret, rng: &mut (impl RngCore + CryptoRng)) -> Vec<u8> {
    let mut nonce = [0u8; NONCE_LEN];
    rng.fill_bytes(&mut nonce);
    seal_with_nonce(keys, secret, nonce)
}

fn seal_with_nonce(keys: &[PositionKey], secret: &TransportSecret, nonce: [u8; NONCE_LEN]) -> Vec<u8> {
    assert!(keys.len() <= u32::MAX as usize, "too many position keys");
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(MAGIC);
    header.push(VERSION);
    let sealed = secret
        .cipher()
        .encrypt(
            Nonce::from_slice(&nonce),
            Payload {
                msg: &encode_payload(keys),
                aad: &header,
            },
        )
        .expect("AES-GCM encryption of an in-memory buffer");
    let mut out = header;
    out.extend_from_slice(&nonce);
    out.extend_from_slice(&sealed);
    out
}

/// Verifies and decrypts a position-key file. Nothing is returned unless the tag verifies.
pub fn open_keys(file: &[u8], secret: &TransportSecret) -> Result<Vec<PositionKey>> {
    if file.len() < HEADER_LEN + NONCE_LEN + TAG_LEN {
        return Err(Error::Format("position key file truncated".into()));
    }
    if &file[..4] != MAGIC {
        return Err(Error::Format("bad position key magic".into()));
    }
    if file[4] != VERSION {
        return Err(Error::Format(format!("unsupported position key version {}", file[4])));
    }
    let (header, rest) = file.split_at(HEADER_LEN);
    let (nonce, sealed) = rest.split_at(NONCE_LEN);
    let payload = secret
        .cipher()
        .decrypt(Nonce::from_slice(nonce), Payload { msg: sealed, aad: header })
        .map_err(|_| Error::Authentication)?;
    decode_payload(&payload)
}
