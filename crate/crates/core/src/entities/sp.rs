//! Service provider: aggregate decryption, unpacking, and publication.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bilinear;
use crate::metrics::Meter;
use crate::paillier::{self, PaillierError};
use crate::seqcode::{self, SeqError, ValueRole};
use crate::wire::{AggregatedReport, BulletinEntry, TrafficBulletin};

use super::SpMaterial;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpError {
    #[error("aggregate signature did not verify")]
    BadSignature,
    #[error("aggregate came from an unknown RSU")]
    UnknownRsu,
    #[error(transparent)]
    Decryption(#[from] PaillierError),
    #[error(transparent)]
    Unpacking(#[from] SeqError),
    #[error("segment {segment}: speed sum {speed_sum} exceeds count {count} × V")]
    InconsistentSums {
        segment: usize,
        count: u64,
        speed_sum: u64,
    },
}

/// Recovered per-segment statistics for one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentStats {
    /// Vehicles that reported each segment (L).
    pub counts: Vec<u64>,
    /// Sum of reported scaled speeds per segment (LS).
    pub speed_sums: Vec<u64>,
    /// Average scaled speed per segment (AS), `None` where no vehicle
    /// reported. Division rounds half to even.
    pub avg_speeds: Vec<Option<u64>>,
}

impl SegmentStats {
    pub fn from_sums(counts: Vec<u64>, speed_sums: Vec<u64>) -> Self {
        let avg_speeds = counts
            .iter()
            .zip(&speed_sums)
            .map(|(&l, &ls)| (l > 0).then(|| div_round_half_even(ls, l)))
            .collect();
        SegmentStats {
            counts,
            speed_sums,
            avg_speeds,
        }
    }
}

/// Integer division rounding halves to the nearest even quotient.
pub fn div_round_half_even(numerator: u64, denominator: u64) -> u64 {
    let q = numerator / denominator;
    let r = numerator % denominator;
    match (2 * r).cmp(&denominator) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => {
            if q.is_multiple_of(2) {
                q
            } else {
                q + 1
            }
        }
    }
}

/// The honest-but-curious decryptor. Sees one ciphertext pair per round
/// and recovers only per-segment sums; individual reports never reach it.
pub struct SpState {
    material: SpMaterial,
    pub meter: Meter,
}

impl SpState {
    pub fn new(material: SpMaterial) -> Self {
        SpState {
            material,
            meter: Meter::new(),
        }
    }

    pub fn material(&self) -> &SpMaterial {
        &self.material
    }

    /// Verify, decrypt and unpack one aggregated report.
    pub fn read(&mut self, agg: &AggregatedReport) -> Result<SegmentStats, SpError> {
        if agg.rsu_id != self.material.rsu_id {
            return Err(SpError::UnknownRsu);
        }
        let signed = agg.resigned_bytes();
        if !bilinear::verify(
            &self.material.group,
            &self.material.rsu_verify,
            &signed,
            &agg.sigma,
            &mut self.meter,
        ) {
            return Err(SpError::BadSignature);
        }

        let m1 = paillier::decrypt(
            &self.material.paillier_sk,
            &self.material.paillier_pk,
            &agg.c1,
            &mut self.meter,
        )?;
        let m2 = paillier::decrypt(
            &self.material.paillier_sk,
            &self.material.paillier_pk,
            &agg.c2,
            &mut self.meter,
        )?;

        let counts = seqcode::decode(&self.material.seq, &m1, ValueRole::Flag)?.0;
        let speed_sums = seqcode::decode(&self.material.seq, &m2, ValueRole::Speed)?.0;
        let v = self.material.config.max_scaled_speed;
        for (segment, (&l, &ls)) in counts.iter().zip(&speed_sums).enumerate() {
            if ls > l * v {
                return Err(SpError::InconsistentSums {
                    segment,
                    count: l,
                    speed_sum: ls,
                });
            }
        }
        Ok(SegmentStats::from_sums(counts, speed_sums))
    }

    /// Build the public bulletin. Vehicle-free by type: entries carry
    /// only segment, count and average.
    pub fn publish(&self, stats: &SegmentStats, ts: u64) -> TrafficBulletin {
        TrafficBulletin {
            ts,
            entries: stats
                .counts
                .iter()
                .zip(&stats.avg_speeds)
                .enumerate()
                .map(|(segment, (&vehicle_count, &avg_speed))| BulletinEntry {
                    segment: segment as u32,
                    vehicle_count,
                    avg_speed,
                })
                .collect(),
        }
    }
}
