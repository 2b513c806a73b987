//! TRPM baseline: the comparison scheme that encrypts every road
//! segment separately.
//!
//! A TRPM report carries one ciphertext per segment instead of two for
//! the whole area. Each per-segment plaintext packs the presence flag
//! above the speed (`flag·B + speed` with `B = Q·V + 1`), so summed
//! ciphertexts still split exactly into a count and a speed sum and the
//! baseline recovers the same statistics the main scheme does. What
//! changes is the cost: M exponentiations per vehicle instead of 2, and
//! M ciphertexts on both links instead of 2.

use num_bigint::BigUint;
use rand::{Rng, RngCore};

use crate::bilinear::{self, GroupParams, Signature, VerifyKey};
use crate::entities::rsu::product;
use crate::entities::vehicle::TrajectoryEntry;
use crate::entities::{
    derive_rng, DropReason, DroppedReport, RsuMaterial, SegmentStats, SpMaterial, TaState,
    VehicleState,
};
use crate::metrics::Meter;
use crate::paillier::{self, PaillierPublicKey};
use crate::wire::{BaselineAggregate, BaselineReport, SpeedRequest};

use super::runner::{RoleTotals, RoundOutcome, ScenarioResult, TrafficTotals, RSU_ID};
use super::scenario::{Scenario, ScenarioError, COLLECT_DELAY_MS};

/// The per-segment packing shift: flags live above `B = Q·V + 1`.
fn flag_shift(q_cap: u64, v_cap: u64) -> BigUint {
    BigUint::from(q_cap) * BigUint::from(v_cap) + 1u32
}

/// A vehicle running the baseline scheme; reuses the standard trajectory
/// log, request verification and pseudonym rotation.
pub struct TrpmVehicle {
    pub inner: VehicleState,
    group: GroupParams,
    paillier_pk: PaillierPublicKey,
    shift: BigUint,
}

impl TrpmVehicle {
    pub fn new(inner: VehicleState) -> Self {
        let material = inner.material();
        let group = material.group.clone();
        let paillier_pk = material.paillier_pk.clone();
        let shift = flag_shift(
            material.config.max_vehicles_per_segment,
            material.config.max_scaled_speed,
        );
        TrpmVehicle {
            inner,
            group,
            paillier_pk,
            shift,
        }
    }

    /// One ciphertext per segment: `Enc(A_i·B + S_i)`.
    pub fn build_report<R: RngCore>(
        &mut self,
        req: &SpeedRequest,
        rng: &mut R,
    ) -> Result<BaselineReport, crate::entities::VehicleError> {
        let (flags, speeds) = self.inner.report_vectors(req);
        let mut cts = Vec::with_capacity(flags.0.len());
        for (flag, speed) in flags.0.iter().zip(&speeds.0) {
            let m = BigUint::from(*flag) * &self.shift + BigUint::from(*speed);
            cts.push(paillier::encrypt(
                &self.paillier_pk,
                &m,
                rng,
                &mut self.inner.report_meter,
            )?);
        }
        let pseudonym = self.inner.take_pseudonym();
        let signed = BaselineReport::signed_bytes(
            &self.group,
            &pseudonym.pid,
            &pseudonym.verify,
            &cts,
            req.ts,
        );
        let sigma = bilinear::sign(
            &self.group,
            &pseudonym.signing,
            &signed,
            &mut self.inner.report_meter,
        );
        Ok(BaselineReport {
            pid: pseudonym.pid,
            y: pseudonym.verify,
            cts,
            ts: req.ts,
            sigma,
        })
    }

    pub fn respond<R: RngCore>(
        &mut self,
        req: &SpeedRequest,
        now_ms: u64,
        rng: &mut R,
    ) -> Result<Option<BaselineReport>, crate::entities::VehicleError> {
        if !self.inner.verify_request(req, now_ms) {
            return Ok(None);
        }
        self.build_report(req, rng).map(Some)
    }
}

/// Baseline aggregator: identical verification, per-segment products.
pub struct TrpmRsu {
    material: RsuMaterial,
    pub request_meter: Meter,
    pub aggregate_meter: Meter,
    pub audit_log: Vec<DroppedReport>,
}

impl TrpmRsu {
    pub fn new(material: RsuMaterial) -> Self {
        TrpmRsu {
            material,
            request_meter: Meter::new(),
            aggregate_meter: Meter::new(),
            audit_log: Vec::new(),
        }
    }

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

    pub fn verify_and_aggregate(
        &mut self,
        reports: &[BaselineReport],
        round_ts: u64,
        now_ms: u64,
    ) -> Result<BaselineAggregate, crate::entities::RsuError> {
        let window = self.material.config.freshness_window_ms;
        let segments = self.material.config.segments;
        let mut fresh: Vec<&BaselineReport> = Vec::new();
        for report in reports {
            if report.cts.len() != segments {
                self.audit_log.push(DroppedReport {
                    pid: report.pid.clone(),
                    reason: DropReason::Malformed,
                });
            } else if report.ts != round_ts || now_ms.abs_diff(report.ts) > window {
                self.audit_log.push(DroppedReport {
                    pid: report.pid.clone(),
                    reason: DropReason::Stale,
                });
            } else if fresh.iter().any(|r| r.pid == report.pid) {
                self.audit_log.push(DroppedReport {
                    pid: report.pid.clone(),
                    reason: DropReason::Duplicate,
                });
            } else {
                fresh.push(report);
            }
        }
        if fresh.is_empty() {
            return Err(crate::entities::RsuError::NothingToAggregate);
        }

        let params = &self.material.group;
        let signed_bytes: Vec<Vec<u8>> = fresh.iter().map(|r| r.resigned_bytes(params)).collect();
        let items: Vec<(&VerifyKey, &[u8], &Signature)> = fresh
            .iter()
            .zip(&signed_bytes)
            .map(|(r, m)| (&r.y, m.as_slice(), &r.sigma))
            .collect();
        let accepted: Vec<&BaselineReport> =
            match bilinear::batch_verify(params, &items, &mut self.aggregate_meter) {
                Ok(true) => fresh,
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
            return Err(crate::entities::RsuError::NothingToAggregate);
        }

        let pk = &self.material.paillier_pk;
        let cts: Vec<_> = (0..segments)
            .map(|i| {
                product(
                    pk,
                    &mut self.aggregate_meter,
                    accepted.iter().map(|r| &r.cts[i]),
                )
            })
            .collect();

        let signed = BaselineAggregate::signed_bytes(&self.material.rsu_id, &cts, round_ts);
        let sigma = bilinear::sign(
            params,
            &self.material.signing,
            &signed,
            &mut self.aggregate_meter,
        );
        Ok(BaselineAggregate {
            rsu_id: self.material.rsu_id.clone(),
            cts,
            ts: round_ts,
            report_count: accepted.len() as u64,
            sigma,
        })
    }
}

/// Baseline reader: one decryption per segment.
pub struct TrpmSp {
    material: SpMaterial,
    pub meter: Meter,
}

impl TrpmSp {
    pub fn new(material: SpMaterial) -> Self {
        TrpmSp {
            material,
            meter: Meter::new(),
        }
    }

    pub fn read(
        &mut self,
        agg: &BaselineAggregate,
    ) -> Result<SegmentStats, crate::entities::SpError> {
        if agg.rsu_id != self.material.rsu_id {
            return Err(crate::entities::SpError::UnknownRsu);
        }
        let signed = agg.resigned_bytes();
        if !bilinear::verify(
            &self.material.group,
            &self.material.rsu_verify,
            &signed,
            &agg.sigma,
            &mut self.meter,
        ) {
            return Err(crate::entities::SpError::BadSignature);
        }
        let shift = flag_shift(
            self.material.config.max_vehicles_per_segment,
            self.material.config.max_scaled_speed,
        );
        let mut counts = Vec::with_capacity(agg.cts.len());
        let mut sums = Vec::with_capacity(agg.cts.len());
        for ct in &agg.cts {
            let m = paillier::decrypt(
                &self.material.paillier_sk,
                &self.material.paillier_pk,
                ct,
                &mut self.meter,
            )?;
            let count = &m / &shift;
            let sum = &m % &shift;
            counts.push(count.try_into().unwrap_or(u64::MAX));
            sums.push(sum.try_into().unwrap_or(u64::MAX));
        }
        Ok(SegmentStats::from_sums(counts, sums))
    }
}

/// Run a scenario under the baseline scheme. Mirrors the main runner's
/// schedule and RNG streams so statistics are directly comparable;
/// adversary scripts are not simulated here (the baseline exists for
/// cost and correctness comparison).
pub fn trpm_run_scenario(scenario: &Scenario) -> Result<ScenarioResult, ScenarioError> {
    scenario.validate()?;
    if !scenario.adversary.is_empty() {
        return Err(ScenarioError::Config(
            "the baseline runner does not script adversaries; clear the adversary list".into(),
        ));
    }

    let mut ta = TaState::init(scenario.config.clone(), scenario.seed)?;
    let rsu_material = ta.register_rsu(RSU_ID)?;
    let mut vehicles = Vec::with_capacity(scenario.vehicles.len());
    for trace in &scenario.vehicles {
        let mut vehicle = VehicleState::new(ta.register_vehicle(&trace.id, RSU_ID)?);
        for leg in &trace.legs {
            vehicle
                .observe(TrajectoryEntry {
                    segment: leg.segment,
                    entry_ms: leg.entry_ms,
                    exit_ms: leg.exit_ms,
                    speed: leg.speed,
                })
                .map_err(|e| ScenarioError::Protocol(e.to_string()))?;
        }
        vehicles.push(TrpmVehicle::new(vehicle));
    }
    let mut rsu = TrpmRsu::new(rsu_material);
    let mut sp = TrpmSp::new(ta.sp_material(RSU_ID)?);

    let params = sp.material.group.clone();
    let widths = scenario
        .config
        .field_widths(&params, &sp.material.paillier_pk);

    let mut jitter_rng = derive_rng(scenario.seed, b"sim/jitter");
    let mut crypto_rng = derive_rng(scenario.seed, b"sim/vehicle-randomizers");

    let mut rounds = Vec::with_capacity(scenario.requests.len());
    let mut traffic = TrafficTotals::default();
    let mut event_log = Vec::new();

    for (round, spec) in scenario.requests.iter().enumerate() {
        let t_req = spec.at_ms;
        let req = rsu.make_request(t_req, spec.tr_ms);
        event_log.push(format!(
            "t={t_req}ms round={round} rsu broadcasts request tr={}ms",
            spec.tr_ms
        ));

        let mut deliveries: Vec<(u64, BaselineReport)> = Vec::new();
        let mut vehicle_report_meter = Meter::new();
        let mut responders = 0u64;
        for vehicle in vehicles.iter_mut() {
            let jitter_us = jitter_rng.gen_range(0..=scenario.response_jitter_ms * 1000);
            let now_ms = t_req + jitter_us / 1000;
            let before = vehicle.inner.report_meter;
            let Some(report) = vehicle
                .respond(&req, now_ms, &mut crypto_rng)
                .map_err(|e| ScenarioError::Protocol(e.to_string()))?
            else {
                continue;
            };
            responders += 1;
            vehicle_report_meter.absorb(&vehicle.inner.report_meter.delta_since(&before));
            traffic.vehicle_to_rsu_messages += 1;
            traffic.vehicle_to_rsu_nominal_bits += report.nominal_bits(&widths);
            traffic.vehicle_to_rsu_wire_bytes += report.encode(&params).bytes.len() as u64;
            deliveries.push((t_req * 1000 + jitter_us, report));
        }
        deliveries.sort_by(|a, b| (a.0, &a.1.pid).cmp(&(b.0, &b.1.pid)));

        let now_agg = t_req + scenario.response_jitter_ms + COLLECT_DELAY_MS;
        let delivered: Vec<BaselineReport> =
            deliveries.into_iter().map(|(_, r)| r).collect();
        let audit_mark = rsu.audit_log.len();
        let rsu_before = rsu.aggregate_meter;
        let aggregate = if delivered.is_empty() {
            None
        } else {
            rsu.verify_and_aggregate(&delivered, req.ts, now_agg).ok()
        };
        let rsu_meter = rsu.aggregate_meter.delta_since(&rsu_before);

        let m = scenario.config.segments;
        let (stats, sp_meter, accepted) = match &aggregate {
            Some(agg) => {
                traffic.rsu_to_sp_messages += 1;
                traffic.rsu_to_sp_nominal_bits += agg.nominal_bits(&widths);
                traffic.rsu_to_sp_wire_bytes += agg.encode(&params).bytes.len() as u64;
                traffic.sp_ciphertexts_per_round.push(agg.cts.len() as u64);
                let sp_before = sp.meter;
                let stats = sp
                    .read(agg)
                    .map_err(|e| ScenarioError::Protocol(e.to_string()))?;
                (stats, sp.meter.delta_since(&sp_before), agg.report_count)
            }
            None => {
                traffic.sp_ciphertexts_per_round.push(0);
                (
                    SegmentStats::from_sums(vec![0; m], vec![0; m]),
                    Meter::new(),
                    0,
                )
            }
        };

        let all: Vec<usize> = (0..scenario.vehicles.len()).collect();
        let ground_truth = scenario.reference_round_stats(round, &all);
        let matches_ground_truth = stats == ground_truth && accepted == responders;

        event_log.push(format!(
            "t={now_agg}ms round={round} rsu accepted {accepted}/{responders} reports, sp recovered stats (match={matches_ground_truth})"
        ));

        rounds.push(RoundOutcome {
            round,
            request_ts: req.ts,
            responders,
            delivered: responders,
            accepted,
            undecodable: 0,
            dropped: rsu.audit_log[audit_mark..].to_vec(),
            stats,
            ground_truth,
            matches_ground_truth,
            vehicle_report_meter,
            rsu_meter,
            sp_meter,
        });
    }

    let totals = RoleTotals {
        vehicle_report: vehicles.iter().fold(Meter::new(), |mut acc, v| {
            acc.absorb(&v.inner.report_meter);
            acc
        }),
        vehicle_verify: vehicles.iter().fold(Meter::new(), |mut acc, v| {
            acc.absorb(&v.inner.verify_meter);
            acc
        }),
        rsu_request: rsu.request_meter,
        rsu_aggregate: rsu.aggregate_meter,
        sp: sp.meter,
    };

    Ok(ScenarioResult {
        scheme: "trpm".into(),
        name: scenario.name.clone(),
        seed: scenario.seed,
        rounds,
        adversary_outcomes: Vec::new(),
        totals,
        traffic,
        event_log,
    })
}
