//! Roadside unit: request broadcast, batch verification, ciphertext
//! aggregation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bilinear::{self, Signature, VerifyKey};
use crate::metrics::Meter;
use crate::paillier::{add_ciphertexts, Ciphertext};
use crate::wire::{AggregatedReport, SpeedReport, SpeedRequest};

use super::RsuMaterial;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RsuError {
    #[error("no valid reports survived verification; nothing to aggregate")]
    NothingToAggregate,
}

/// Why a report was dropped. The pseudonym is kept so the authority can
/// spot-check and trace offenders later.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DropReason {
    /// Timestamp does not match the round or is outside the window.
    Stale,
    /// Same pseudonym already accepted this round.
    Duplicate,
    /// Signature verification failed.
    BadSignature,
    /// Structure does not match the deployment (wrong segment count).
    Malformed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedReport {
    #[serde(with = "crate::serdes::bytes_hex")]
    pub pid: Vec<u8>,
    pub reason: DropReason,
}

/// The honest-but-curious aggregator. Holds no decryption or tracing
/// capability; its entire view of a report is the ciphertext pair and the
/// signature it checks.
pub struct RsuState {
    material: RsuMaterial,
    /// Costs of signing requests (outside the per-round cost model).
    pub request_meter: Meter,
    /// Costs of one round of verification + aggregation.
    pub aggregate_meter: Meter,
    /// Dropped reports, retained for authority audits.
    pub audit_log: Vec<DroppedReport>,
}

impl RsuState {
    pub fn new(material: RsuMaterial) -> Self {
        RsuState {
            material,
            request_meter: Meter::new(),
            aggregate_meter: Meter::new(),
            audit_log: Vec::new(),
        }
    }

    pub fn material(&self) -> &RsuMaterial {
        &self.material
    }

    pub fn verify_key(&self) -> &VerifyKey {
        &self.material.verify
    }

    /// Broadcast a signed speed request covering the last `tr_ms`.
    pub fn make_request(&mut self, now_ms: u64, tr_ms: u64) -> SpeedRequest {
        let signed = SpeedRequest::signed_bytes(&self.material.rsu_id, now_ms, tr_ms);
        let sigma = bilinear::sign(
            &self.material.group,
            &self.material.signing,
            &signed,
            &mut self.request_meter,
        );
        SpeedRequest {
            rsu_id: self.material.rsu_id.clone(),
            ts: now_ms,
            tr: tr_ms,
            sigma,
        }
    }

    /// One aggregation round: freshness filter, batch verification with
    /// individual fallback, ciphertext products, and the aggregate
    /// signature. Invalid reports are dropped and logged, never fatal;
    /// only an empty survivor set is an error.
    pub fn verify_and_aggregate(
        &mut self,
        reports: &[SpeedReport],
        round_ts: u64,
        now_ms: u64,
    ) -> Result<AggregatedReport, RsuError> {
        let window = self.material.config.freshness_window_ms;
        let mut fresh: Vec<&SpeedReport> = Vec::with_capacity(reports.len());
        for report in reports {
            if report.ts != round_ts || now_ms.abs_diff(report.ts) > window {
                self.drop_report(report, DropReason::Stale);
            } else if fresh.iter().any(|r| r.pid == report.pid) {
                self.drop_report(report, DropReason::Duplicate);
            } else {
                fresh.push(report);
            }
        }
        if fresh.is_empty() {
            return Err(RsuError::NothingToAggregate);
        }

        let params = &self.material.group;
        let signed_bytes: Vec<Vec<u8>> = fresh.iter().map(|r| r.resigned_bytes(params)).collect();
        let items: Vec<(&VerifyKey, &[u8], &Signature)> = fresh
            .iter()
            .zip(&signed_bytes)
            .map(|(r, m)| (&r.y, m.as_slice(), &r.sigma))
            .collect();

        let accepted: Vec<&SpeedReport> =
            match bilinear::batch_verify(params, &items, &mut self.aggregate_meter) {
                Ok(true) => fresh,
                // Batch failed (or degenerate): fall back to item-by-item
                // verification and keep only what passes.
                _ => {
                    let mut accepted = Vec::new();
                    for (report, signed) in fresh.iter().zip(&signed_bytes) {
                        if bilinear::verify(
                            params,
                            &report.y,
                            signed,
                            &report.sigma,
                            &mut self.aggregate_meter,
                        ) {
                            accepted.push(*report);
                        } else {
                            self.audit_log.push(DroppedReport {
                                pid: report.pid.clone(),
                                reason: DropReason::BadSignature,
                            });
                        }
                    }
                    accepted
                }
            };
        if accepted.is_empty() {
            return Err(RsuError::NothingToAggregate);
        }

        let pk = &self.material.paillier_pk;
        let c1 = product(pk, &mut self.aggregate_meter, accepted.iter().map(|r| &r.c1));
        let c2 = product(pk, &mut self.aggregate_meter, accepted.iter().map(|r| &r.c2));

        let signed = AggregatedReport::signed_bytes(&self.material.rsu_id, &c1, &c2, round_ts);
        let sigma = bilinear::sign(
            params,
            &self.material.signing,
            &signed,
            &mut self.aggregate_meter,
        );
        Ok(AggregatedReport {
            rsu_id: self.material.rsu_id.clone(),
            c1,
            c2,
            ts: round_ts,
            report_count: accepted.len() as u64,
            sigma,
        })
    }

    fn drop_report(&mut self, report: &SpeedReport, reason: DropReason) {
        self.audit_log.push(DroppedReport {
            pid: report.pid.clone(),
            reason,
        });
    }
}

/// Fold a nonempty ciphertext set into its product.
pub(crate) fn product<'a>(
    pk: &crate::paillier::PaillierPublicKey,
    meter: &mut Meter,
    mut cts: impl Iterator<Item = &'a Ciphertext>,
) -> Ciphertext {
    let first = cts.next().expect("product of a nonempty set").clone();
    cts.fold(first, |acc, c| add_ciphertexts(pk, &acc, c, meter))
}
