//! Canonical wire encodings and the bandwidth cost model.
//!
//! Every message is a tag byte followed by length-prefixed fields in the
//! exact order its signature covers (then any unsigned framing fields,
//! then the signature). The byte string a signature is computed over is
//! the plain concatenation of the covered fields' serializations, so a
//! verifier never depends on how a message was framed in transit.
//!
//! Field serializations: byte strings raw, timestamps 8-byte big-endian,
//! group elements fixed-width big-endian (`ceil(kappa/8)` bytes), big
//! integers minimal big-endian. Each field is preceded by a 4-byte
//! big-endian length.
//!
//! Separately from the concrete framing, [`FieldWidths`] carries the
//! protocol's nominal field bit-widths and each message computes its
//! `nominal_bits`: the bandwidth accounting used for cost comparisons,
//! where a ciphertext is `2·|n|` bits, a group element `|G|` bits, and
//! pseudonym/identity/timestamp widths are deployment parameters.

use std::ops::Range;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bilinear::{BilinearError, G1, GroupParams, Signature, VerifyKey};
use crate::paillier::Ciphertext;

pub const TAG_SPEED_REQUEST: u8 = 0x01;
pub const TAG_SPEED_REPORT: u8 = 0x02;
pub const TAG_AGGREGATED_REPORT: u8 = 0x03;
pub const TAG_BULLETIN: u8 = 0x04;
pub const TAG_BASELINE_REPORT: u8 = 0x05;
pub const TAG_BASELINE_AGGREGATE: u8 = 0x06;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WireError {
    #[error("message is truncated")]
    Truncated,
    #[error("unexpected message tag {0:#04x}")]
    BadTag(u8),
    #[error("field length overflows the buffer")]
    BadLength,
    #[error("group element: {0}")]
    Element(#[from] BilinearError),
    #[error("trailing bytes after message")]
    TrailingBytes,
}

/// Names for the byte ranges of an encoded message, used to aim
/// tampering at a specific field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    RsuId,
    Pid,
    VerifyKey,
    Cipher(usize),
    CipherCount,
    Ts,
    Tr,
    ReportCount,
    Sigma,
}

/// An encoded message plus the byte range each field occupies.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub bytes: Vec<u8>,
    pub fields: Vec<(Field, Range<usize>)>,
}

impl Encoded {
    pub fn range_of(&self, field: Field) -> Option<Range<usize>> {
        self.fields
            .iter()
            .find(|(f, _)| *f == field)
            .map(|(_, r)| r.clone())
    }
}

struct FieldWriter {
    bytes: Vec<u8>,
    fields: Vec<(Field, Range<usize>)>,
}

impl FieldWriter {
    fn new(tag: u8) -> Self {
        FieldWriter {
            bytes: vec![tag],
            fields: Vec::new(),
        }
    }

    fn put(&mut self, name: Field, payload: &[u8]) {
        self.bytes
            .extend_from_slice(&(payload.len() as u32).to_be_bytes());
        let start = self.bytes.len();
        self.bytes.extend_from_slice(payload);
        self.fields.push((name, start..self.bytes.len()));
    }

    fn finish(self) -> Encoded {
        Encoded {
            bytes: self.bytes,
            fields: self.fields,
        }
    }
}

struct FieldReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> FieldReader<'a> {
    fn new(bytes: &'a [u8], expected_tag: u8) -> Result<Self, WireError> {
        if bytes.is_empty() {
            return Err(WireError::Truncated);
        }
        if bytes[0] != expected_tag {
            return Err(WireError::BadTag(bytes[0]));
        }
        Ok(FieldReader { bytes, pos: 1 })
    }

    fn take(&mut self) -> Result<&'a [u8], WireError> {
        if self.pos + 4 > self.bytes.len() {
            return Err(WireError::Truncated);
        }
        let len = u32::from_be_bytes(self.bytes[self.pos..self.pos + 4].try_into().unwrap()) as usize;
        self.pos += 4;
        if self.pos + len > self.bytes.len() {
            return Err(WireError::BadLength);
        }
        let out = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }

    fn take_u64(&mut self) -> Result<u64, WireError> {
        let raw = self.take()?;
        let arr: [u8; 8] = raw.try_into().map_err(|_| WireError::BadLength)?;
        Ok(u64::from_be_bytes(arr))
    }

    fn take_u32(&mut self) -> Result<u32, WireError> {
        let raw = self.take()?;
        let arr: [u8; 4] = raw.try_into().map_err(|_| WireError::BadLength)?;
        Ok(u32::from_be_bytes(arr))
    }

    fn finish(self) -> Result<(), WireError> {
        if self.pos == self.bytes.len() {
            Ok(())
        } else {
            Err(WireError::TrailingBytes)
        }
    }
}

/// One length-prefixed field, as used inside signed byte strings.
fn framed(payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + payload.len());
    out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    out.extend_from_slice(payload);
    out
}

fn biguint_bytes(v: &BigUint) -> Vec<u8> {
    v.to_bytes_be()
}

// ---------------------------------------------------------------------------
// Messages
// ---------------------------------------------------------------------------

/// RSU broadcast asking vehicles for their recent speeds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpeedRequest {
    pub rsu_id: Vec<u8>,
    /// Request timestamp (simulated-clock milliseconds).
    pub ts: u64,
    /// Time range the report should cover, same units as `ts`.
    pub tr: u64,
    pub sigma: Signature,
}

impl SpeedRequest {
    /// The byte string the request signature covers: `ID_r || TS || TR`.
    pub fn signed_bytes(rsu_id: &[u8], ts: u64, tr: u64) -> Vec<u8> {
        let mut out = framed(rsu_id);
        out.extend(framed(&ts.to_be_bytes()));
        out.extend(framed(&tr.to_be_bytes()));
        out
    }

    pub fn encode(&self, params: &GroupParams) -> Encoded {
        let mut w = FieldWriter::new(TAG_SPEED_REQUEST);
        w.put(Field::RsuId, &self.rsu_id);
        w.put(Field::Ts, &self.ts.to_be_bytes());
        w.put(Field::Tr, &self.tr.to_be_bytes());
        w.put(Field::Sigma, &self.sigma.0.to_bytes(params));
        w.finish()
    }

    pub fn decode(params: &GroupParams, bytes: &[u8]) -> Result<Self, WireError> {
        let mut r = FieldReader::new(bytes, TAG_SPEED_REQUEST)?;
        let rsu_id = r.take()?.to_vec();
        let ts = r.take_u64()?;
        let tr = r.take_u64()?;
        let sigma = Signature(G1::from_bytes(params, r.take()?)?);
        r.finish()?;
        Ok(SpeedRequest {
            rsu_id,
            ts,
            tr,
            sigma,
        })
    }
}

/// A vehicle's encrypted per-segment report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpeedReport {
    pub pid: Vec<u8>,
    pub y: VerifyKey,
    /// Packed presence flags, encrypted.
    pub c1: Ciphertext,
    /// Packed speeds, encrypted.
    pub c2: Ciphertext,
    /// Echo of the request timestamp.
    pub ts: u64,
    pub sigma: Signature,
}

impl SpeedReport {
    /// `PID || Y || C1 || C2 || TS`.
    pub fn signed_bytes(
        params: &GroupParams,
        pid: &[u8],
        y: &VerifyKey,
        c1: &Ciphertext,
        c2: &Ciphertext,
        ts: u64,
    ) -> Vec<u8> {
        let mut out = framed(pid);
        out.extend(framed(&y.0.to_bytes(params)));
        out.extend(framed(&biguint_bytes(c1.value())));
        out.extend(framed(&biguint_bytes(c2.value())));
        out.extend(framed(&ts.to_be_bytes()));
        out
    }

    pub fn resigned_bytes(&self, params: &GroupParams) -> Vec<u8> {
        Self::signed_bytes(params, &self.pid, &self.y, &self.c1, &self.c2, self.ts)
    }

    pub fn encode(&self, params: &GroupParams) -> Encoded {
        let mut w = FieldWriter::new(TAG_SPEED_REPORT);
        w.put(Field::Pid, &self.pid);
        w.put(Field::VerifyKey, &self.y.0.to_bytes(params));
        w.put(Field::Cipher(0), &biguint_bytes(self.c1.value()));
        w.put(Field::Cipher(1), &biguint_bytes(self.c2.value()));
        w.put(Field::Ts, &self.ts.to_be_bytes());
        w.put(Field::Sigma, &self.sigma.0.to_bytes(params));
        w.finish()
    }

    pub fn decode(params: &GroupParams, bytes: &[u8]) -> Result<Self, WireError> {
        let mut r = FieldReader::new(bytes, TAG_SPEED_REPORT)?;
        let pid = r.take()?.to_vec();
        let y = VerifyKey(G1::from_bytes(params, r.take()?)?);
        let c1 = Ciphertext::from_value(BigUint::from_bytes_be(r.take()?));
        let c2 = Ciphertext::from_value(BigUint::from_bytes_be(r.take()?));
        let ts = r.take_u64()?;
        let sigma = Signature(G1::from_bytes(params, r.take()?)?);
        r.finish()?;
        Ok(SpeedReport {
            pid,
            y,
            c1,
            c2,
            ts,
            sigma,
        })
    }

    /// Cost-model size: `|PID| + |G| + 2·2|n| + |TS| + |G|`.
    pub fn nominal_bits(&self, w: &FieldWidths) -> u64 {
        w.pid_bits + w.element_bits + 2 * w.ciphertext_bits + w.ts_bits + w.element_bits
    }
}

/// The RSU's signed product of all accepted reports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregatedReport {
    pub rsu_id: Vec<u8>,
    pub c1: Ciphertext,
    pub c2: Ciphertext,
    pub ts: u64,
    /// How many reports the product covers. Carried for averaging
    /// context only; not part of the signed bytes.
    pub report_count: u64,
    pub sigma: Signature,
}

impl AggregatedReport {
    /// `ID_r || C1 || C2 || TS`.
    pub fn signed_bytes(rsu_id: &[u8], c1: &Ciphertext, c2: &Ciphertext, ts: u64) -> Vec<u8> {
        let mut out = framed(rsu_id);
        out.extend(framed(&biguint_bytes(c1.value())));
        out.extend(framed(&biguint_bytes(c2.value())));
        out.extend(framed(&ts.to_be_bytes()));
        out
    }

    pub fn resigned_bytes(&self) -> Vec<u8> {
        Self::signed_bytes(&self.rsu_id, &self.c1, &self.c2, self.ts)
    }

    pub fn encode(&self, params: &GroupParams) -> Encoded {
        let mut w = FieldWriter::new(TAG_AGGREGATED_REPORT);
        w.put(Field::RsuId, &self.rsu_id);
        w.put(Field::Cipher(0), &biguint_bytes(self.c1.value()));
        w.put(Field::Cipher(1), &biguint_bytes(self.c2.value()));
        w.put(Field::Ts, &self.ts.to_be_bytes());
        w.put(Field::ReportCount, &self.report_count.to_be_bytes());
        w.put(Field::Sigma, &self.sigma.0.to_bytes(params));
        w.finish()
    }

    pub fn decode(params: &GroupParams, bytes: &[u8]) -> Result<Self, WireError> {
        let mut r = FieldReader::new(bytes, TAG_AGGREGATED_REPORT)?;
        let rsu_id = r.take()?.to_vec();
        let c1 = Ciphertext::from_value(BigUint::from_bytes_be(r.take()?));
        let c2 = Ciphertext::from_value(BigUint::from_bytes_be(r.take()?));
        let ts = r.take_u64()?;
        let report_count = r.take_u64()?;
        let sigma = Signature(G1::from_bytes(params, r.take()?)?);
        r.finish()?;
        Ok(AggregatedReport {
            rsu_id,
            c1,
            c2,
            ts,
            report_count,
            sigma,
        })
    }

    /// Cost-model size: `|ID_r| + 2·2|n| + |TS| + |G|`.
    pub fn nominal_bits(&self, w: &FieldWidths) -> u64 {
        w.id_bits + 2 * w.ciphertext_bits + w.ts_bits + w.element_bits
    }
}

/// Baseline-scheme report: one ciphertext per road segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaselineReport {
    pub pid: Vec<u8>,
    pub y: VerifyKey,
    pub cts: Vec<Ciphertext>,
    pub ts: u64,
    pub sigma: Signature,
}

impl BaselineReport {
    /// `PID || Y || C_1 || … || C_M || TS`.
    pub fn signed_bytes(
        params: &GroupParams,
        pid: &[u8],
        y: &VerifyKey,
        cts: &[Ciphertext],
        ts: u64,
    ) -> Vec<u8> {
        let mut out = framed(pid);
        out.extend(framed(&y.0.to_bytes(params)));
        for c in cts {
            out.extend(framed(&biguint_bytes(c.value())));
        }
        out.extend(framed(&ts.to_be_bytes()));
        out
    }

    pub fn resigned_bytes(&self, params: &GroupParams) -> Vec<u8> {
        Self::signed_bytes(params, &self.pid, &self.y, &self.cts, self.ts)
    }

    pub fn encode(&self, params: &GroupParams) -> Encoded {
        let mut w = FieldWriter::new(TAG_BASELINE_REPORT);
        w.put(Field::Pid, &self.pid);
        w.put(Field::VerifyKey, &self.y.0.to_bytes(params));
        w.put(Field::CipherCount, &(self.cts.len() as u32).to_be_bytes());
        for (i, c) in self.cts.iter().enumerate() {
            w.put(Field::Cipher(i), &biguint_bytes(c.value()));
        }
        w.put(Field::Ts, &self.ts.to_be_bytes());
        w.put(Field::Sigma, &self.sigma.0.to_bytes(params));
        w.finish()
    }

    pub fn decode(params: &GroupParams, bytes: &[u8]) -> Result<Self, WireError> {
        let mut r = FieldReader::new(bytes, TAG_BASELINE_REPORT)?;
        let pid = r.take()?.to_vec();
        let y = VerifyKey(G1::from_bytes(params, r.take()?)?);
        let count = r.take_u32()?;
        let cts = (0..count)
            .map(|_| Ok(Ciphertext::from_value(BigUint::from_bytes_be(r.take()?))))
            .collect::<Result<_, WireError>>()?;
        let ts = r.take_u64()?;
        let sigma = Signature(G1::from_bytes(params, r.take()?)?);
        r.finish()?;
        Ok(BaselineReport {
            pid,
            y,
            cts,
            ts,
            sigma,
        })
    }

    /// Cost-model size: `|PID| + |G| + M·2|n| + |TS| + |G|`.
    pub fn nominal_bits(&self, w: &FieldWidths) -> u64 {
        w.pid_bits
            + w.element_bits
            + self.cts.len() as u64 * w.ciphertext_bits
            + w.ts_bits
            + w.element_bits
    }
}

/// Baseline-scheme aggregate: one product ciphertext per segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaselineAggregate {
    pub rsu_id: Vec<u8>,
    pub cts: Vec<Ciphertext>,
    pub ts: u64,
    pub report_count: u64,
    pub sigma: Signature,
}

impl BaselineAggregate {
    pub fn signed_bytes(rsu_id: &[u8], cts: &[Ciphertext], ts: u64) -> Vec<u8> {
        let mut out = framed(rsu_id);
        for c in cts {
            out.extend(framed(&biguint_bytes(c.value())));
        }
        out.extend(framed(&ts.to_be_bytes()));
        out
    }

    pub fn resigned_bytes(&self) -> Vec<u8> {
        Self::signed_bytes(&self.rsu_id, &self.cts, self.ts)
    }

    pub fn encode(&self, params: &GroupParams) -> Encoded {
        let mut w = FieldWriter::new(TAG_BASELINE_AGGREGATE);
        w.put(Field::RsuId, &self.rsu_id);
        w.put(Field::CipherCount, &(self.cts.len() as u32).to_be_bytes());
        for (i, c) in self.cts.iter().enumerate() {
            w.put(Field::Cipher(i), &biguint_bytes(c.value()));
        }
        w.put(Field::Ts, &self.ts.to_be_bytes());
        w.put(Field::ReportCount, &self.report_count.to_be_bytes());
        w.put(Field::Sigma, &self.sigma.0.to_bytes(params));
        w.finish()
    }

    pub fn decode(params: &GroupParams, bytes: &[u8]) -> Result<Self, WireError> {
        let mut r = FieldReader::new(bytes, TAG_BASELINE_AGGREGATE)?;
        let rsu_id = r.take()?.to_vec();
        let count = r.take_u32()?;
        let cts = (0..count)
            .map(|_| Ok(Ciphertext::from_value(BigUint::from_bytes_be(r.take()?))))
            .collect::<Result<_, WireError>>()?;
        let ts = r.take_u64()?;
        let report_count = r.take_u64()?;
        let sigma = Signature(G1::from_bytes(params, r.take()?)?);
        r.finish()?;
        Ok(BaselineAggregate {
            rsu_id,
            cts,
            ts,
            report_count,
            sigma,
        })
    }

    /// Cost-model size: `|ID_r| + M·2|n| + |TS| + |G|`.
    pub fn nominal_bits(&self, w: &FieldWidths) -> u64 {
        w.id_bits + self.cts.len() as u64 * w.ciphertext_bits + w.ts_bits + w.element_bits
    }
}

/// Published per-segment traffic conditions. Carries no per-vehicle
/// fields by construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrafficBulletin {
    pub ts: u64,
    pub entries: Vec<BulletinEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BulletinEntry {
    pub segment: u32,
    pub vehicle_count: u64,
    /// Average speed in scaled units; `None` when the segment had no
    /// vehicles (never zero, which would read as a standstill).
    pub avg_speed: Option<u64>,
}

/// Nominal field widths in bits: the deployment parameters the
/// bandwidth model is evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldWidths {
    pub pid_bits: u64,
    pub id_bits: u64,
    pub ts_bits: u64,
    /// Width of a signature-group element (`|G|`).
    pub element_bits: u64,
    /// Width of one Paillier ciphertext (`2·|n|`).
    pub ciphertext_bits: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bilinear;
    use crate::metrics::Meter;
    use num_traits::One;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn setup() -> (GroupParams, bilinear::SigningKey, VerifyKey) {
        let params = bilinear::setup(128, &mut ChaCha20Rng::seed_from_u64(1)).unwrap();
        let (sk, vk) = bilinear::keygen(&params, &mut ChaCha20Rng::seed_from_u64(2));
        (params, sk, vk)
    }

    fn sample_ciphertext(tag: u64) -> Ciphertext {
        Ciphertext::from_value(BigUint::from(tag) * BigUint::from(7919u64) + BigUint::one())
    }

    #[test]
    fn request_roundtrip_and_signature_stability() {
        let (params, sk, vk) = setup();
        let mut meter = Meter::new();
        let signed = SpeedRequest::signed_bytes(b"rsu-7", 12345, 480_000);
        let req = SpeedRequest {
            rsu_id: b"rsu-7".to_vec(),
            ts: 12345,
            tr: 480_000,
            sigma: bilinear::sign(&params, &sk, &signed, &mut meter),
        };
        let enc = req.encode(&params);
        let back = SpeedRequest::decode(&params, &enc.bytes).unwrap();
        assert_eq!(back, req);
        // The decoded message re-derives the identical signed byte string.
        let re_signed = SpeedRequest::signed_bytes(&back.rsu_id, back.ts, back.tr);
        assert!(bilinear::verify(&params, &vk, &re_signed, &back.sigma, &mut meter));
    }

    #[test]
    fn report_roundtrip_preserves_all_fields() {
        let (params, sk, vk) = setup();
        let mut meter = Meter::new();
        let (c1, c2) = (sample_ciphertext(3), sample_ciphertext(4));
        let signed = SpeedReport::signed_bytes(&params, b"pid-x", &vk, &c1, &c2, 999);
        let report = SpeedReport {
            pid: b"pid-x".to_vec(),
            y: vk.clone(),
            c1,
            c2,
            ts: 999,
            sigma: bilinear::sign(&params, &sk, &signed, &mut meter),
        };
        let enc = report.encode(&params);
        let back = SpeedReport::decode(&params, &enc.bytes).unwrap();
        assert_eq!(back, report);
        assert!(bilinear::verify(
            &params,
            &back.y,
            &back.resigned_bytes(&params),
            &back.sigma,
            &mut meter
        ));
    }

    #[test]
    fn baseline_messages_roundtrip() {
        let (params, sk, vk) = setup();
        let mut meter = Meter::new();
        let cts: Vec<Ciphertext> = (1..=3).map(sample_ciphertext).collect();
        let signed = BaselineReport::signed_bytes(&params, b"pid-b", &vk, &cts, 55);
        let report = BaselineReport {
            pid: b"pid-b".to_vec(),
            y: vk,
            cts: cts.clone(),
            ts: 55,
            sigma: bilinear::sign(&params, &sk, &signed, &mut meter),
        };
        let back = BaselineReport::decode(&params, &report.encode(&params).bytes).unwrap();
        assert_eq!(back, report);

        let signed = BaselineAggregate::signed_bytes(b"rsu-7", &cts, 56);
        let agg = BaselineAggregate {
            rsu_id: b"rsu-7".to_vec(),
            cts,
            ts: 56,
            report_count: 9,
            sigma: bilinear::sign(&params, &sk, &signed, &mut meter),
        };
        let back = BaselineAggregate::decode(&params, &agg.encode(&params).bytes).unwrap();
        assert_eq!(back, agg);
    }

    #[test]
    fn aggregate_roundtrip() {
        let (params, sk, _) = setup();
        let mut meter = Meter::new();
        let (c1, c2) = (sample_ciphertext(5), sample_ciphertext(6));
        let signed = AggregatedReport::signed_bytes(b"rsu-7", &c1, &c2, 31);
        let agg = AggregatedReport {
            rsu_id: b"rsu-7".to_vec(),
            c1,
            c2,
            ts: 31,
            report_count: 4,
            sigma: bilinear::sign(&params, &sk, &signed, &mut meter),
        };
        let back = AggregatedReport::decode(&params, &agg.encode(&params).bytes).unwrap();
        assert_eq!(back, agg);
    }

    #[test]
    fn decode_rejects_malformed_inputs() {
        let (params, sk, vk) = setup();
        let mut meter = Meter::new();
        let signed = SpeedRequest::signed_bytes(b"r", 1, 2);
        let req = SpeedRequest {
            rsu_id: b"r".to_vec(),
            ts: 1,
            tr: 2,
            sigma: bilinear::sign(&params, &sk, &signed, &mut meter),
        };
        let enc = req.encode(&params);

        assert_eq!(
            SpeedRequest::decode(&params, &[]).unwrap_err(),
            WireError::Truncated
        );
        assert_eq!(
            SpeedRequest::decode(&params, &enc.bytes[..enc.bytes.len() - 3]).unwrap_err(),
            WireError::BadLength
        );
        let mut wrong_tag = enc.bytes.clone();
        wrong_tag[0] = TAG_BULLETIN;
        assert!(matches!(
            SpeedRequest::decode(&params, &wrong_tag).unwrap_err(),
            WireError::BadTag(_)
        ));

        // An out-of-range group element is a decode error, not "false".
        let mut oversized = enc.bytes.clone();
        let sigma_range = enc.range_of(Field::Sigma).unwrap();
        for b in &mut oversized[sigma_range] {
            *b = 0xff;
        }
        assert!(matches!(
            SpeedRequest::decode(&params, &oversized).unwrap_err(),
            WireError::Element(BilinearError::MalformedElement)
        ));
        let _ = vk;
    }

    #[test]
    fn field_ranges_cover_disjoint_spans() {
        let (params, sk, vk) = setup();
        let mut meter = Meter::new();
        let (c1, c2) = (sample_ciphertext(1), sample_ciphertext(2));
        let signed = SpeedReport::signed_bytes(&params, b"p", &vk, &c1, &c2, 7);
        let report = SpeedReport {
            pid: b"p".to_vec(),
            y: vk,
            c1,
            c2,
            ts: 7,
            sigma: bilinear::sign(&params, &sk, &signed, &mut meter),
        };
        let enc = report.encode(&params);
        let mut last_end = 0;
        for (_, range) in &enc.fields {
            assert!(range.start >= last_end);
            last_end = range.end;
        }
        assert_eq!(last_end, enc.bytes.len());
    }

    #[test]
    fn nominal_bits_match_closed_forms() {
        let w = FieldWidths {
            pid_bits: 100,
            id_bits: 100,
            ts_bits: 100,
            element_bits: 160,
            ciphertext_bits: 2048,
        };
        let (params, sk, vk) = setup();
        let mut meter = Meter::new();
        let mk = |n| sample_ciphertext(n);
        let report = SpeedReport {
            pid: vec![0; 13],
            y: vk.clone(),
            c1: mk(1),
            c2: mk(2),
            ts: 0,
            sigma: bilinear::sign(&params, &sk, b"x", &mut meter),
        };
        assert_eq!(report.nominal_bits(&w), 4616);

        for m in [1usize, 2, 30] {
            let baseline = BaselineReport {
                pid: vec![0; 13],
                y: vk.clone(),
                cts: (0..m as u64).map(mk).collect(),
                ts: 0,
                sigma: bilinear::sign(&params, &sk, b"x", &mut meter),
            };
            assert_eq!(
                baseline.nominal_bits(&w),
                100 + 160 + 2048 * m as u64 + 100 + 160
            );
        }
        // At M = 2 the two formulas coincide.
        let two = BaselineReport {
            pid: vec![0; 13],
            y: vk,
            cts: vec![mk(1), mk(2)],
            ts: 0,
            sigma: bilinear::sign(&params, &sk, b"x", &mut meter),
        };
        assert_eq!(two.nominal_bits(&w), report.nominal_bits(&w));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

        /// Any well-formed report survives encode → decode unchanged and
        /// re-derives the identical signed byte string.
        #[test]
        fn report_encoding_roundtrips(
            pid in proptest::collection::vec(proptest::prelude::any::<u8>(), 1..64),
            c1 in 1u64..,
            c2 in 1u64..,
            ts in proptest::prelude::any::<u64>(),
            x in 1u64..,
        ) {
            let params = bilinear::setup(128, &mut ChaCha20Rng::seed_from_u64(99)).unwrap();
            let mut meter = Meter::new();
            let sk = bilinear::SigningKey::from_scalar(BigUint::from(x));
            let vk = bilinear::verify_key_for(&params, &sk);
            let (c1, c2) = (
                Ciphertext::from_value(BigUint::from(c1)),
                Ciphertext::from_value(BigUint::from(c2)),
            );
            let signed = SpeedReport::signed_bytes(&params, &pid, &vk, &c1, &c2, ts);
            let report = SpeedReport {
                pid,
                y: vk,
                c1,
                c2,
                ts,
                sigma: bilinear::sign(&params, &sk, &signed, &mut meter),
            };
            let back = SpeedReport::decode(&params, &report.encode(&params).bytes).unwrap();
            proptest::prop_assert_eq!(&back, &report);
            proptest::prop_assert_eq!(back.resigned_bytes(&params), signed);
        }
    }

    #[test]
    fn bulletin_serializes_missing_averages_as_null() {
        let bulletin = TrafficBulletin {
            ts: 5,
            entries: vec![
                BulletinEntry {
                    segment: 0,
                    vehicle_count: 3,
                    avg_speed: Some(60),
                },
                BulletinEntry {
                    segment: 1,
                    vehicle_count: 0,
                    avg_speed: None,
                },
            ],
        };
        let json = serde_json::to_string(&bulletin).unwrap();
        assert!(json.contains("\"avg_speed\":null"));
        let back: TrafficBulletin = serde_json::from_str(&json).unwrap();
        assert_eq!(back, bulletin);
    }
}
