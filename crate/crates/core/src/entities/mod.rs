//! The four protocol roles as message-driven state machines.
//!
//! The trust authority ([`ta::TaState`]) initializes keys, pseudonyms and
//! the packing sequence and hands each role exactly the material it is
//! entitled to. Vehicles ([`vehicle::VehicleState`]) answer speed
//! requests with encrypted, signed reports. The roadside unit
//! ([`rsu::RsuState`]) batch-verifies and multiplies ciphertexts without
//! being able to read them, and the service provider ([`sp::SpState`])
//! decrypts only per-segment sums. Distribution is audited structurally:
//! every material bundle enumerates what it carries via
//! [`MaterialInventory`], and tests pin the absences that the trust model
//! depends on (the RSU never holds the Paillier secret, nobody but the
//! authority holds the tracing key, and so on).

pub mod rsu;
pub mod sp;
pub mod ta;
pub mod vehicle;

use std::collections::BTreeSet;

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bilinear::{GroupParams, SigningKey, VerifyKey};
use crate::paillier::{PaillierPublicKey, PaillierSecretKey};
use crate::seqcode::SuperIncreasingSeq;
use crate::wire::FieldWidths;

pub use rsu::{DropReason, DroppedReport, RsuError, RsuState};
pub use sp::{SegmentStats, SpError, SpState};
pub use ta::{TaError, TaState, TraceResult};
pub use vehicle::{TrajectoryEntry, VehicleError, VehicleState};

/// Deployment-wide public parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Bit length of the signature group order.
    pub kappa: u32,
    /// Bit length of each Paillier prime; the modulus has twice this.
    pub kappa1: u32,
    /// Number of road segments per coverage area (M).
    pub segments: usize,
    /// Cap on vehicles reporting any one segment per round (Q).
    pub max_vehicles_per_segment: u64,
    /// Cap on a scaled speed value (V).
    pub max_scaled_speed: u64,
    /// Scaled speed units per km/h (1 = whole km/h, 10 = 0.1 km/h).
    pub speed_scale: u32,
    /// How far a message timestamp may lag the receiver's clock, ms.
    pub freshness_window_ms: u64,
    /// Pseudonyms issued per vehicle registration.
    pub pseudonyms_per_vehicle: usize,
    /// Nominal pseudonym width for the bandwidth model, bits.
    pub pid_bits: u64,
    /// Nominal entity-identity width for the bandwidth model, bits.
    pub id_bits: u64,
    /// Nominal timestamp width for the bandwidth model, bits.
    pub ts_bits: u64,
}

impl Default for SystemConfig {
    /// Reference parameters: 160-bit group order, 512-bit Paillier primes
    /// (1024-bit modulus, 2048-bit ciphertexts) and 100-bit nominal
    /// pseudonym/identity/timestamp widths.
    fn default() -> Self {
        SystemConfig {
            kappa: 160,
            kappa1: 512,
            segments: 4,
            max_vehicles_per_segment: 50,
            max_scaled_speed: 200,
            speed_scale: 1,
            freshness_window_ms: 5_000,
            pseudonyms_per_vehicle: 8,
            pid_bits: 100,
            id_bits: 100,
            ts_bits: 100,
        }
    }
}

impl SystemConfig {
    /// Small parameters for tests and simulation sweeps: the protocol
    /// logic and operation counts are identical, only the integers are
    /// shorter.
    pub fn test_scale() -> Self {
        SystemConfig {
            kappa: 128,
            kappa1: 64,
            segments: 4,
            max_vehicles_per_segment: 20,
            max_scaled_speed: 200,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.segments == 0 || self.max_vehicles_per_segment == 0 || self.max_scaled_speed == 0 {
            return Err("segments, vehicle cap and speed cap must all be at least 1".into());
        }
        if self.freshness_window_ms == 0 {
            return Err("freshness window must be positive".into());
        }
        if self.pseudonyms_per_vehicle == 0 {
            return Err("at least one pseudonym per vehicle is required".into());
        }
        Ok(())
    }

    /// The bandwidth model's field widths for this deployment.
    pub fn field_widths(&self, group: &GroupParams, pk: &PaillierPublicKey) -> FieldWidths {
        FieldWidths {
            pid_bits: self.pid_bits,
            id_bits: self.id_bits,
            ts_bits: self.ts_bits,
            element_bits: group.element_bits(),
            ciphertext_bits: 2 * pk.n_bits(),
        }
    }
}

/// Derive an independent RNG stream from a master seed and a label.
pub fn derive_rng(master_seed: u64, label: &[u8]) -> ChaCha20Rng {
    let mut h = Sha256::new();
    h.update(master_seed.to_be_bytes());
    h.update(label);
    ChaCha20Rng::from_seed(h.finalize().into())
}

/// What a distributed material bundle contains, for structural audits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MaterialKind {
    GroupParams,
    PaillierPublic,
    PaillierSecret,
    TraceKey,
    Pseudonyms,
    VehicleSigningKeys,
    RsuSigningKey,
    RsuVerifyKey,
    PackingSequence,
}

pub trait MaterialInventory {
    fn inventory(&self) -> BTreeSet<MaterialKind>;
}

/// One pseudonym with its per-pseudonym key pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pseudonym {
    #[serde(with = "crate::serdes::bytes_hex")]
    pub pid: Vec<u8>,
    pub signing: SigningKey,
    pub verify: VerifyKey,
}

/// Everything a registered vehicle receives from the authority.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VehicleMaterial {
    pub config: SystemConfig,
    pub group: GroupParams,
    pub paillier_pk: PaillierPublicKey,
    #[serde(with = "crate::serdes::bytes_hex")]
    pub rsu_id: Vec<u8>,
    pub rsu_verify: VerifyKey,
    pub seq: SuperIncreasingSeq,
    pub pseudonyms: Vec<Pseudonym>,
}

impl MaterialInventory for VehicleMaterial {
    fn inventory(&self) -> BTreeSet<MaterialKind> {
        [
            MaterialKind::GroupParams,
            MaterialKind::PaillierPublic,
            MaterialKind::RsuVerifyKey,
            MaterialKind::PackingSequence,
            MaterialKind::Pseudonyms,
            MaterialKind::VehicleSigningKeys,
        ]
        .into()
    }
}

/// Everything the roadside unit receives: public encryption parameters
/// and its own signature keys. No decryption capability, no packing
/// sequence, no tracing key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RsuMaterial {
    pub config: SystemConfig,
    pub group: GroupParams,
    pub paillier_pk: PaillierPublicKey,
    #[serde(with = "crate::serdes::bytes_hex")]
    pub rsu_id: Vec<u8>,
    pub signing: SigningKey,
    pub verify: VerifyKey,
}

impl MaterialInventory for RsuMaterial {
    fn inventory(&self) -> BTreeSet<MaterialKind> {
        [
            MaterialKind::GroupParams,
            MaterialKind::PaillierPublic,
            MaterialKind::RsuSigningKey,
            MaterialKind::RsuVerifyKey,
        ]
        .into()
    }
}

/// Everything the service provider receives: the Paillier secret, the
/// packing sequence, and the RSU's verification key. No vehicle keys and
/// no tracing key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpMaterial {
    pub config: SystemConfig,
    pub group: GroupParams,
    pub paillier_pk: PaillierPublicKey,
    pub paillier_sk: PaillierSecretKey,
    #[serde(with = "crate::serdes::bytes_hex")]
    pub rsu_id: Vec<u8>,
    pub rsu_verify: VerifyKey,
    pub seq: SuperIncreasingSeq,
}

impl MaterialInventory for SpMaterial {
    fn inventory(&self) -> BTreeSet<MaterialKind> {
        [
            MaterialKind::GroupParams,
            MaterialKind::PaillierPublic,
            MaterialKind::PaillierSecret,
            MaterialKind::RsuVerifyKey,
            MaterialKind::PackingSequence,
        ]
        .into()
    }
}

/// Serialize a scalar for embedding in a pseudonym: fixed width so the
/// sealed layout is unambiguous.
pub(crate) fn scalar_bytes(group: &GroupParams, x: &BigUint) -> Vec<u8> {
    let width = group.element_bytes();
    let raw = x.to_bytes_be();
    let mut out = vec![0u8; width - raw.len()];
    out.extend_from_slice(&raw);
    out
}
