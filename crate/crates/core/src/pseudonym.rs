//! Pseudonym sealing and tracing.
//!
//! A pseudonym is a deterministic authenticated encryption of
//! `ID_i || x_ij` under the authority's tracing key `k0`: only the
//! authority can map a pseudonym back to the vehicle, and a forged or
//! tampered pseudonym fails authentication instead of decrypting to
//! garbage. Determinism is fine here because every sealed plaintext is
//! unique (`x_ij` is fresh per pseudonym).
//!
//! Construction: SIV-style encrypt-then-MAC from SHA-256. The tag is an
//! HMAC over the plaintext and doubles as the keystream nonce, so equal
//! plaintexts give equal pseudonyms and any bit flip invalidates the tag.

use sha2::{Digest, Sha256};
use thiserror::Error;

/// Authentication tag length in bytes.
const TAG_LEN: usize = 16;
const MAC_LABEL: &[u8] = b"pptm/pid/mac";
const ENC_LABEL: &[u8] = b"pptm/pid/enc";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PseudonymError {
    #[error("pseudonym failed authentication")]
    BadTag,
    #[error("pseudonym is too short to carry a payload")]
    Truncated,
    #[error("sealed payload is malformed")]
    BadPayload,
}

/// The authority's symmetric tracing key `k0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceKey([u8; 32]);

impl TraceKey {
    pub fn from_bytes(bytes: [u8; 32]) -> Self {
        TraceKey(bytes)
    }

    fn subkey(&self, label: &[u8]) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(label);
        h.update(self.0);
        h.finalize().into()
    }
}

fn hmac_sha256(key: &[u8; 32], data: &[u8]) -> [u8; 32] {
    let mut ipad = [0x36u8; 64];
    let mut opad = [0x5cu8; 64];
    for (i, b) in key.iter().enumerate() {
        ipad[i] ^= b;
        opad[i] ^= b;
    }
    let inner: [u8; 32] = {
        let mut h = Sha256::new();
        h.update(ipad);
        h.update(data);
        h.finalize().into()
    };
    let mut h = Sha256::new();
    h.update(opad);
    h.update(inner);
    h.finalize().into()
}

fn keystream(key: &[u8; 32], tag: &[u8], len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(len);
    let mut counter = 0u32;
    while out.len() < len {
        let mut h = Sha256::new();
        h.update(key);
        h.update(tag);
        h.update(counter.to_be_bytes());
        out.extend_from_slice(&h.finalize());
        counter += 1;
    }
    out.truncate(len);
    out
}

/// Seal `ID || x` into a pseudonym.
pub fn seal(k0: &TraceKey, id: &[u8], x_bytes: &[u8]) -> Vec<u8> {
    let mut plaintext = Vec::with_capacity(2 + id.len() + x_bytes.len());
    plaintext.extend_from_slice(&(id.len() as u16).to_be_bytes());
    plaintext.extend_from_slice(id);
    plaintext.extend_from_slice(x_bytes);

    let tag_full = hmac_sha256(&k0.subkey(MAC_LABEL), &plaintext);
    let tag = &tag_full[..TAG_LEN];
    let ks = keystream(&k0.subkey(ENC_LABEL), tag, plaintext.len());

    let mut out = Vec::with_capacity(TAG_LEN + plaintext.len());
    out.extend_from_slice(tag);
    out.extend(plaintext.iter().zip(&ks).map(|(p, k)| p ^ k));
    out
}

/// Open a pseudonym back into `(ID, x)`. Fails on any tamper.
pub fn open(k0: &TraceKey, pseudonym: &[u8]) -> Result<(Vec<u8>, Vec<u8>), PseudonymError> {
    if pseudonym.len() < TAG_LEN + 2 {
        return Err(PseudonymError::Truncated);
    }
    let (tag, body) = pseudonym.split_at(TAG_LEN);
    let ks = keystream(&k0.subkey(ENC_LABEL), tag, body.len());
    let plaintext: Vec<u8> = body.iter().zip(&ks).map(|(c, k)| c ^ k).collect();

    let expected = hmac_sha256(&k0.subkey(MAC_LABEL), &plaintext);
    if expected[..TAG_LEN] != *tag {
        return Err(PseudonymError::BadTag);
    }

    let id_len = u16::from_be_bytes([plaintext[0], plaintext[1]]) as usize;
    if plaintext.len() < 2 + id_len {
        return Err(PseudonymError::BadPayload);
    }
    let id = plaintext[2..2 + id_len].to_vec();
    let x = plaintext[2 + id_len..].to_vec();
    Ok((id, x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key() -> TraceKey {
        TraceKey::from_bytes([7u8; 32])
    }

    #[test]
    fn seal_open_roundtrip() {
        let pid = seal(&key(), b"plate-XYZ-123", &[9u8; 20]);
        let (id, x) = open(&key(), &pid).unwrap();
        assert_eq!(id, b"plate-XYZ-123");
        assert_eq!(x, vec![9u8; 20]);
    }

    #[test]
    fn sealing_is_deterministic_and_input_sensitive() {
        let a = seal(&key(), b"id", &[1u8; 20]);
        let b = seal(&key(), b"id", &[1u8; 20]);
        let c = seal(&key(), b"id", &[2u8; 20]);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn pseudonym_leaks_no_plaintext_bytes() {
        let id = b"AB-1234-CD";
        let x = [0x5au8; 20];
        let pid = seal(&key(), id, &x);
        assert!(!pid.windows(id.len()).any(|w| w == id));
        assert!(!pid.windows(x.len()).any(|w| w == x));
    }

    #[test]
    fn any_byte_flip_fails_authentication() {
        let pid = seal(&key(), b"victim", &[3u8; 20]);
        for i in 0..pid.len() {
            let mut bad = pid.clone();
            bad[i] ^= 0x01;
            assert!(open(&key(), &bad).is_err(), "byte {i} accepted");
        }
    }

    #[test]
    fn wrong_key_fails() {
        let pid = seal(&key(), b"victim", &[3u8; 20]);
        let other = TraceKey::from_bytes([8u8; 32]);
        assert_eq!(open(&other, &pid).unwrap_err(), PseudonymError::BadTag);
    }

    #[test]
    fn truncated_input_is_rejected() {
        assert_eq!(
            open(&key(), &[0u8; 10]).unwrap_err(),
            PseudonymError::Truncated
        );
    }
}
