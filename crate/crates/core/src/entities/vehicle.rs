//! Vehicle role: local trajectory log, request verification, and report
//! construction.

use rand::RngCore;
use thiserror::Error;

use crate::bilinear;
use crate::metrics::Meter;
use crate::paillier::{self, PaillierError};
use crate::seqcode::{self, SegmentVector, SeqError, ValueRole};
use crate::wire::{SpeedReport, SpeedRequest};

use super::VehicleMaterial;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VehicleError {
    #[error("segment {0} is outside the coverage area")]
    UnknownSegment(usize),
    #[error("scaled speed {0} exceeds the configured cap")]
    SpeedOutOfRange(u64),
    #[error("segment exit time precedes entry time")]
    NegativeDwell,
    #[error(transparent)]
    Packing(#[from] SeqError),
    #[error(transparent)]
    Encryption(#[from] PaillierError),
}

/// One completed segment traversal, kept vehicle-local. Dwell times are
/// never transmitted; they only drive the time-range filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrajectoryEntry {
    pub segment: usize,
    pub entry_ms: u64,
    pub exit_ms: u64,
    /// Average speed over the traversal, in scaled units.
    pub speed: u64,
}

impl TrajectoryEntry {
    pub fn dwell_ms(&self) -> u64 {
        self.exit_ms - self.entry_ms
    }
}

/// A vehicle driving one pseudonym batch.
pub struct VehicleState {
    material: VehicleMaterial,
    next_pseudonym: usize,
    log: Vec<TrajectoryEntry>,
    /// Costs of building reports (the role's cost-model phase).
    pub report_meter: Meter,
    /// Costs of verifying incoming requests (kept apart so the report
    /// meter stays comparable to the cost model).
    pub verify_meter: Meter,
}

impl VehicleState {
    pub fn new(material: VehicleMaterial) -> Self {
        VehicleState {
            material,
            next_pseudonym: 0,
            log: Vec::new(),
            report_meter: Meter::new(),
            verify_meter: Meter::new(),
        }
    }

    pub fn material(&self) -> &VehicleMaterial {
        &self.material
    }

    /// The pseudonym the next report will be signed under.
    pub fn current_pid(&self) -> &[u8] {
        &self.material.pseudonyms[self.next_pseudonym % self.material.pseudonyms.len()].pid
    }

    /// Record a completed traversal.
    pub fn observe(&mut self, entry: TrajectoryEntry) -> Result<(), VehicleError> {
        if entry.segment >= self.material.config.segments {
            return Err(VehicleError::UnknownSegment(entry.segment));
        }
        if entry.speed > self.material.config.max_scaled_speed {
            return Err(VehicleError::SpeedOutOfRange(entry.speed));
        }
        if entry.exit_ms < entry.entry_ms {
            return Err(VehicleError::NegativeDwell);
        }
        self.log.push(entry);
        Ok(())
    }

    /// Accept a request iff its signature verifies under the known RSU
    /// key and its timestamp is within the freshness window. A stale
    /// replay or a forged RSU identity both fail here.
    pub fn verify_request(&mut self, req: &SpeedRequest, now_ms: u64) -> bool {
        if req.rsu_id != self.material.rsu_id {
            return false;
        }
        if now_ms.abs_diff(req.ts) > self.material.config.freshness_window_ms {
            return false;
        }
        let signed = SpeedRequest::signed_bytes(&req.rsu_id, req.ts, req.tr);
        bilinear::verify(
            &self.material.group,
            &self.material.rsu_verify,
            &signed,
            &req.sigma,
            &mut self.verify_meter,
        )
    }

    /// The entries a report for this request covers: most recent
    /// traversals first, stopping before cumulative dwell time exceeds
    /// the requested range.
    fn covered_entries(&self, req: &SpeedRequest) -> Vec<TrajectoryEntry> {
        let mut past: Vec<TrajectoryEntry> = self
            .log
            .iter()
            .filter(|e| e.exit_ms <= req.ts)
            .copied()
            .collect();
        past.sort_by_key(|e| std::cmp::Reverse(e.exit_ms));
        let mut covered = Vec::new();
        let mut budget = req.tr;
        for entry in past {
            let dwell = entry.dwell_ms();
            if dwell > budget {
                break;
            }
            budget -= dwell;
            covered.push(entry);
        }
        covered
    }

    /// The flag and speed vectors a report for this request carries.
    pub fn report_vectors(&self, req: &SpeedRequest) -> (SegmentVector, SegmentVector) {
        let m = self.material.config.segments;
        let mut flags = SegmentVector::zeros(m);
        let mut speeds = SegmentVector::zeros(m);
        for entry in self.covered_entries(req) {
            // Most recent traversal of a segment wins.
            if flags.0[entry.segment] == 0 {
                flags.0[entry.segment] = 1;
                speeds.0[entry.segment] = entry.speed;
            }
        }
        (flags, speeds)
    }

    /// Hand out the current pseudonym and rotate to the next one.
    pub fn take_pseudonym(&mut self) -> super::Pseudonym {
        let p = self.material.pseudonyms[self.next_pseudonym % self.material.pseudonyms.len()]
            .clone();
        self.next_pseudonym += 1;
        p
    }

    /// Build, encrypt and sign the report for a verified request, then
    /// rotate to the next pseudonym. An empty coverage window still
    /// produces a (zero-vector) report so the round's report count stays
    /// meaningful and absence is not observable.
    pub fn build_report<R: RngCore>(
        &mut self,
        req: &SpeedRequest,
        rng: &mut R,
    ) -> Result<SpeedReport, VehicleError> {
        let (flags, speeds) = self.report_vectors(req);
        let packed_flags = seqcode::encode(&self.material.seq, &flags, ValueRole::Flag)?;
        let packed_speeds = seqcode::encode(&self.material.seq, &speeds, ValueRole::Speed)?;
        let c1 = paillier::encrypt(
            &self.material.paillier_pk,
            &packed_flags,
            rng,
            &mut self.report_meter,
        )?;
        let c2 = paillier::encrypt(
            &self.material.paillier_pk,
            &packed_speeds,
            rng,
            &mut self.report_meter,
        )?;

        let pseudonym = self.take_pseudonym();

        let signed = SpeedReport::signed_bytes(
            &self.material.group,
            &pseudonym.pid,
            &pseudonym.verify,
            &c1,
            &c2,
            req.ts,
        );
        let sigma = bilinear::sign(
            &self.material.group,
            &pseudonym.signing,
            &signed,
            &mut self.report_meter,
        );
        Ok(SpeedReport {
            pid: pseudonym.pid,
            y: pseudonym.verify,
            c1,
            c2,
            ts: req.ts,
            sigma,
        })
    }

    /// Verify-then-report in one step; `None` means the request was
    /// rejected.
    pub fn respond<R: RngCore>(
        &mut self,
        req: &SpeedRequest,
        now_ms: u64,
        rng: &mut R,
    ) -> Result<Option<SpeedReport>, VehicleError> {
        if !self.verify_request(req, now_ms) {
            return Ok(None);
        }
        self.build_report(req, rng).map(Some)
    }
}
