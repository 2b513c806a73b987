//! Trust authority: system initialization, registration, and tracing.

use std::collections::BTreeMap;

use num_bigint::{BigUint, RandBigInt};
use num_traits::One;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::bilinear::{self, GroupParams, SigningKey, VerifyKey};
use crate::paillier::{self, PaillierPublicKey, PaillierSecretKey};
use crate::pseudonym::{self, TraceKey};
use crate::seqcode::{self, SeqError, SuperIncreasingSeq};

use super::{
    derive_rng, scalar_bytes, Pseudonym, RsuMaterial, SpMaterial, SystemConfig, VehicleMaterial,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TaError {
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Bilinear(#[from] bilinear::BilinearError),
    #[error(transparent)]
    Paillier(#[from] paillier::PaillierError),
    #[error("packing sequence does not fit under the modulus: {0}")]
    Capacity(SeqError),
    #[error("unknown RSU id")]
    UnknownRsu,
    #[error("vehicle identity must be nonempty")]
    EmptyIdentity,
    #[error("pseudonym is unknown or was not issued by this authority")]
    UnknownPseudonym,
}

/// Result of tracing a pseudonym back to its owner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceResult {
    pub vehicle_id: String,
    /// Position of the pseudonym within the issued batch.
    pub pseudonym_index: usize,
}

struct RsuRecord {
    signing: SigningKey,
    verify: VerifyKey,
    seq: SuperIncreasingSeq,
}

/// The fully trusted initializer. It is the only holder of the tracing
/// key and the only entity that ever sees a vehicle identity next to a
/// pseudonym.
pub struct TaState {
    config: SystemConfig,
    group: GroupParams,
    paillier_pk: PaillierPublicKey,
    paillier_sk: PaillierSecretKey,
    trace_key: TraceKey,
    rsus: BTreeMap<Vec<u8>, RsuRecord>,
    issued: BTreeMap<Vec<u8>, (String, usize)>,
    rng: ChaCha20Rng,
}

impl TaState {
    /// Initialize the deployment: group parameters, the Paillier keypair
    /// and the tracing key, all derived from `seed`. The same seed
    /// reproduces byte-identical material.
    pub fn init(config: SystemConfig, seed: u64) -> Result<Self, TaError> {
        config.validate().map_err(TaError::BadConfig)?;
        let group = bilinear::setup(config.kappa, &mut derive_rng(seed, b"group-setup"))?;
        let (paillier_pk, paillier_sk) =
            paillier::keygen(config.kappa1, &mut derive_rng(seed, b"paillier-keygen"))?;
        let mut k0 = [0u8; 32];
        use rand::RngCore;
        derive_rng(seed, b"trace-key").fill_bytes(&mut k0);
        Ok(TaState {
            config,
            group,
            paillier_pk,
            paillier_sk,
            trace_key: TraceKey::from_bytes(k0),
            rsus: BTreeMap::new(),
            issued: BTreeMap::new(),
            rng: derive_rng(seed, b"registrations"),
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn group(&self) -> &GroupParams {
        &self.group
    }

    pub fn paillier_pk(&self) -> &PaillierPublicKey {
        &self.paillier_pk
    }

    /// Register an RSU: signature keys plus the packing sequence for its
    /// coverage area. The sequence capacity is checked against the
    /// Paillier modulus here; `Err(Capacity)` means the configured
    /// M·Q·V does not fit and either the key size must grow or the
    /// coverage must shrink.
    pub fn register_rsu(&mut self, rsu_id: &[u8]) -> Result<RsuMaterial, TaError> {
        let (signing, verify) = bilinear::keygen(&self.group, &mut self.rng);
        let seq = seqcode::gen_sequence(
            self.config.segments,
            self.config.max_vehicles_per_segment,
            self.config.max_scaled_speed,
            self.paillier_pk.n(),
            &mut self.rng,
        )
        .map_err(TaError::Capacity)?;
        let material = RsuMaterial {
            config: self.config.clone(),
            group: self.group.clone(),
            paillier_pk: self.paillier_pk.clone(),
            rsu_id: rsu_id.to_vec(),
            signing: signing.clone(),
            verify: verify.clone(),
        };
        self.rsus.insert(
            rsu_id.to_vec(),
            RsuRecord {
                signing,
                verify,
                seq,
            },
        );
        Ok(material)
    }

    /// Issue a fresh pseudonym batch for a vehicle operating under
    /// `rsu_id`. Re-registration at intervals simply issues a new batch.
    pub fn register_vehicle(
        &mut self,
        vehicle_id: &str,
        rsu_id: &[u8],
    ) -> Result<VehicleMaterial, TaError> {
        if vehicle_id.is_empty() {
            return Err(TaError::EmptyIdentity);
        }
        let rsu = self.rsus.get(rsu_id).ok_or(TaError::UnknownRsu)?;
        let mut pseudonyms = Vec::with_capacity(self.config.pseudonyms_per_vehicle);
        for index in 0..self.config.pseudonyms_per_vehicle {
            let x = self
                .rng
                .gen_biguint_range(&BigUint::one(), self.group.order());
            let signing = SigningKey::from_scalar(x.clone());
            let verify = bilinear::verify_key_for(&self.group, &signing);
            let pid = pseudonym::seal(
                &self.trace_key,
                vehicle_id.as_bytes(),
                &scalar_bytes(&self.group, &x),
            );
            self.issued
                .insert(pid.clone(), (vehicle_id.to_string(), index));
            pseudonyms.push(Pseudonym {
                pid,
                signing,
                verify,
            });
        }
        Ok(VehicleMaterial {
            config: self.config.clone(),
            group: self.group.clone(),
            paillier_pk: self.paillier_pk.clone(),
            rsu_id: rsu_id.to_vec(),
            rsu_verify: rsu.verify.clone(),
            seq: rsu.seq.clone(),
            pseudonyms,
        })
    }

    /// The service provider's bundle: decryption key, packing sequence,
    /// and the RSU's verification key.
    pub fn sp_material(&self, rsu_id: &[u8]) -> Result<SpMaterial, TaError> {
        let rsu = self.rsus.get(rsu_id).ok_or(TaError::UnknownRsu)?;
        Ok(SpMaterial {
            config: self.config.clone(),
            group: self.group.clone(),
            paillier_pk: self.paillier_pk.clone(),
            paillier_sk: self.paillier_sk.clone(),
            rsu_id: rsu_id.to_vec(),
            rsu_verify: rsu.verify.clone(),
            seq: rsu.seq.clone(),
        })
    }

    /// Recover the real identity behind a pseudonym. Only the authority
    /// can do this; everyone else sees opaque bytes.
    pub fn trace(&self, pid: &[u8]) -> Result<TraceResult, TaError> {
        // Authenticated decryption rejects anything this key never sealed.
        pseudonym::open(&self.trace_key, pid).map_err(|_| TaError::UnknownPseudonym)?;
        let (vehicle_id, pseudonym_index) = self
            .issued
            .get(pid)
            .cloned()
            .ok_or(TaError::UnknownPseudonym)?;
        Ok(TraceResult {
            vehicle_id,
            pseudonym_index,
        })
    }

    /// Signing key accessor for simulation harnesses that need to stand
    /// up an RSU directly from the authority's records.
    pub fn rsu_signing_key(&self, rsu_id: &[u8]) -> Option<&SigningKey> {
        self.rsus.get(rsu_id).map(|r| &r.signing)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entities::MaterialInventory;
    use crate::entities::MaterialKind;

    fn ta() -> TaState {
        let mut config = SystemConfig::test_scale();
        config.pseudonyms_per_vehicle = 4;
        TaState::init(config, 77).unwrap()
    }

    #[test]
    fn same_seed_reproduces_identical_materials() {
        let build = || {
            let mut ta = ta();
            let rsu = ta.register_rsu(b"rsu-1").unwrap();
            let veh = ta.register_vehicle("car-A", b"rsu-1").unwrap();
            let sp = ta.sp_material(b"rsu-1").unwrap();
            (
                serde_json::to_vec(&rsu).unwrap(),
                serde_json::to_vec(&veh).unwrap(),
                serde_json::to_vec(&sp).unwrap(),
            )
        };
        assert_eq!(build(), build());
    }

    #[test]
    fn material_separation_audit() {
        let mut ta = ta();
        let rsu = ta.register_rsu(b"rsu-1").unwrap();
        let veh = ta.register_vehicle("car-A", b"rsu-1").unwrap();
        let sp = ta.sp_material(b"rsu-1").unwrap();

        let rsu_inv = rsu.inventory();
        assert!(!rsu_inv.contains(&MaterialKind::PaillierSecret));
        assert!(!rsu_inv.contains(&MaterialKind::TraceKey));
        assert!(!rsu_inv.contains(&MaterialKind::PackingSequence));

        let sp_inv = sp.inventory();
        assert!(sp_inv.contains(&MaterialKind::PaillierSecret));
        assert!(sp_inv.contains(&MaterialKind::PackingSequence));
        assert!(!sp_inv.contains(&MaterialKind::VehicleSigningKeys));
        assert!(!sp_inv.contains(&MaterialKind::TraceKey));

        let veh_inv = veh.inventory();
        assert!(!veh_inv.contains(&MaterialKind::PaillierSecret));
        assert!(!veh_inv.contains(&MaterialKind::TraceKey));
    }

    #[test]
    fn trace_inverts_every_issued_pseudonym() {
        let mut ta = ta();
        ta.register_rsu(b"rsu-1").unwrap();
        let veh = ta.register_vehicle("car-A", b"rsu-1").unwrap();
        for (i, p) in veh.pseudonyms.iter().enumerate() {
            let traced = ta.trace(&p.pid).unwrap();
            assert_eq!(traced.vehicle_id, "car-A");
            assert_eq!(traced.pseudonym_index, i);
        }
    }

    #[test]
    fn pseudonym_sets_of_distinct_vehicles_are_disjoint() {
        let mut ta = ta();
        ta.register_rsu(b"rsu-1").unwrap();
        let a = ta.register_vehicle("car-A", b"rsu-1").unwrap();
        let b = ta.register_vehicle("car-B", b"rsu-1").unwrap();
        for pa in &a.pseudonyms {
            for pb in &b.pseudonyms {
                assert_ne!(pa.pid, pb.pid);
            }
        }
    }

    #[test]
    fn reregistration_issues_a_fresh_batch_and_old_pids_still_trace() {
        let mut ta = ta();
        ta.register_rsu(b"rsu-1").unwrap();
        let first = ta.register_vehicle("car-A", b"rsu-1").unwrap();
        let second = ta.register_vehicle("car-A", b"rsu-1").unwrap();
        assert_ne!(first.pseudonyms[0].pid, second.pseudonyms[0].pid);
        assert_eq!(ta.trace(&first.pseudonyms[0].pid).unwrap().vehicle_id, "car-A");
        assert_eq!(ta.trace(&second.pseudonyms[0].pid).unwrap().vehicle_id, "car-A");
    }

    #[test]
    fn tampered_pseudonym_is_unknown() {
        let mut ta = ta();
        ta.register_rsu(b"rsu-1").unwrap();
        let veh = ta.register_vehicle("car-A", b"rsu-1").unwrap();
        let mut pid = veh.pseudonyms[0].pid.clone();
        pid[5] ^= 0x10;
        assert_eq!(ta.trace(&pid).unwrap_err(), TaError::UnknownPseudonym);
    }

    #[test]
    fn pseudonyms_do_not_embed_identity_or_keys_in_the_clear() {
        let mut ta = ta();
        ta.register_rsu(b"rsu-1").unwrap();
        let veh = ta.register_vehicle("car-ABCDEFGH", b"rsu-1").unwrap();
        for p in &veh.pseudonyms {
            let id = b"car-ABCDEFGH";
            assert!(!p.pid.windows(id.len()).any(|w| w == id));
        }
    }

    #[test]
    fn capacity_error_surfaces_from_registration() {
        let mut config = SystemConfig::test_scale();
        // 64-bit primes (128-bit n) cannot hold 20 segments at this Q·V.
        config.segments = 20;
        config.max_vehicles_per_segment = 1000;
        config.max_scaled_speed = 1000;
        let mut ta = TaState::init(config, 1).unwrap();
        assert!(matches!(
            ta.register_rsu(b"rsu-1").unwrap_err(),
            TaError::Capacity(_)
        ));
    }

    #[test]
    fn vehicle_keys_satisfy_y_equals_x_p() {
        let mut ta = ta();
        ta.register_rsu(b"rsu-1").unwrap();
        let veh = ta.register_vehicle("car-A", b"rsu-1").unwrap();
        for p in &veh.pseudonyms {
            assert_eq!(
                bilinear::verify_key_for(&veh.group, &p.signing),
                p.verify
            );
        }
    }
}
