//! Deterministic execution of a scenario against the real protocol
//! entities, with scripted adversary interference and a plaintext
//! reference pipeline checked against every round.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use crate::entities::vehicle::TrajectoryEntry;
use crate::entities::{
    derive_rng, DroppedReport, RsuState, SegmentStats, SpState, TaState, VehicleState,
};
use crate::metrics::Meter;
use crate::wire::{Field, FieldWidths, SpeedReport, SpeedRequest};

use super::scenario::{
    AdversaryAction, Scenario, ScenarioError, TamperField, COLLECT_DELAY_MS,
};

pub const RSU_ID: &[u8] = b"rsu-1";

/// Outcome of one request/aggregate/read round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundOutcome {
    pub round: usize,
    pub request_ts: u64,
    /// Honest reports built by vehicles.
    pub responders: u64,
    /// Messages that reached the RSU (tampered and replayed included).
    pub delivered: u64,
    /// Reports surviving freshness and signature checks (N).
    pub accepted: u64,
    /// Tampered messages that no longer even decode.
    pub undecodable: u64,
    pub dropped: Vec<DroppedReport>,
    pub stats: SegmentStats,
    pub ground_truth: SegmentStats,
    pub matches_ground_truth: bool,
    /// Summed report-building costs of this round's responders.
    pub vehicle_report_meter: Meter,
    pub rsu_meter: Meter,
    pub sp_meter: Meter,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversaryOutcome {
    Tamper {
        round: usize,
        vehicle: usize,
        field: TamperField,
        rejected: bool,
    },
    ReplayRequest {
        source_round: usize,
        delay_ms: u64,
        vehicles_rejecting: u64,
        vehicles_accepting: u64,
    },
    ReplayReport {
        source_round: usize,
        vehicle: usize,
        into_round: usize,
        rejected: bool,
    },
}

/// Cumulative per-role operation counters.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RoleTotals {
    pub vehicle_report: Meter,
    pub vehicle_verify: Meter,
    pub rsu_request: Meter,
    pub rsu_aggregate: Meter,
    pub sp: Meter,
}

/// Bytes and message counts per link, both as the cost model counts them
/// (nominal bits) and as actually framed on the wire.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TrafficTotals {
    pub vehicle_to_rsu_messages: u64,
    pub vehicle_to_rsu_nominal_bits: u64,
    pub vehicle_to_rsu_wire_bytes: u64,
    pub rsu_to_sp_messages: u64,
    pub rsu_to_sp_nominal_bits: u64,
    pub rsu_to_sp_wire_bytes: u64,
    /// Ciphertexts the provider received each round; the provider's view
    /// never grows with the number of vehicles.
    pub sp_ciphertexts_per_round: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioResult {
    pub scheme: String,
    pub name: String,
    pub seed: u64,
    pub rounds: Vec<RoundOutcome>,
    pub adversary_outcomes: Vec<AdversaryOutcome>,
    pub totals: RoleTotals,
    pub traffic: TrafficTotals,
    pub event_log: Vec<String>,
}

impl ScenarioResult {
    /// Canonical byte rendering; identical seeds must reproduce this
    /// byte for byte.
    pub fn to_canonical_bytes(&self) -> Vec<u8> {
        serde_json::to_vec_pretty(self).expect("result serializes")
    }

    pub fn all_rounds_match_ground_truth(&self) -> bool {
        self.rounds.iter().all(|r| r.matches_ground_truth)
    }
}

/// Flip one random bit inside the named field of an in-flight report.
/// `Err` means the mutation broke the encoding itself and the message
/// will not even parse at the receiver.
fn tamper_report<R: Rng>(
    params: &crate::bilinear::GroupParams,
    report: &SpeedReport,
    field: TamperField,
    rng: &mut R,
) -> Result<SpeedReport, crate::wire::WireError> {
    let encoded = report.encode(params);
    let target = match field {
        TamperField::Pid => Field::Pid,
        TamperField::VerifyKey => Field::VerifyKey,
        TamperField::Cipher1 => Field::Cipher(0),
        TamperField::Cipher2 => Field::Cipher(1),
        TamperField::Timestamp => Field::Ts,
        TamperField::Signature => Field::Sigma,
    };
    let range = encoded.range_of(target).expect("field present");
    let mut bytes = encoded.bytes.clone();
    let byte = rng.gen_range(range.clone());
    let bit = rng.gen_range(0..8u8);
    bytes[byte] ^= 1 << bit;
    SpeedReport::decode(params, &bytes)
}

struct Delivery {
    at_us: u64,
    /// Index of the honest sender; `None` for adversary-injected copies.
    source_vehicle: Option<usize>,
    report: SpeedReport,
    tampered: bool,
    replayed: bool,
}

/// Run the scenario against the full protocol. Deterministic for a fixed
/// scenario (including its seed).
pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioResult, ScenarioError> {
    scenario.validate()?;

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
        vehicles.push(vehicle);
    }
    let mut rsu = RsuState::new(rsu_material);
    let mut sp = SpState::new(ta.sp_material(RSU_ID)?);

    let params = sp.material().group.clone();
    let widths: FieldWidths = scenario
        .config
        .field_widths(&params, &sp.material().paillier_pk);

    let mut jitter_rng = derive_rng(scenario.seed, b"sim/jitter");
    let mut crypto_rng = derive_rng(scenario.seed, b"sim/vehicle-randomizers");
    let mut tamper_rng = derive_rng(scenario.seed, b"sim/tamper");

    let mut rounds = Vec::with_capacity(scenario.requests.len());
    let mut adversary_outcomes = Vec::new();
    let mut traffic = TrafficTotals::default();
    let mut event_log = Vec::new();

    let mut captured_requests: Vec<SpeedRequest> = Vec::new();
    let mut captured_reports: BTreeMap<(usize, usize), SpeedReport> = BTreeMap::new();

    for (round, spec) in scenario.requests.iter().enumerate() {
        let t_req = spec.at_ms;
        let req = rsu.make_request(t_req, spec.tr_ms);
        captured_requests.push(req.clone());
        event_log.push(format!(
            "t={t_req}ms round={round} rsu broadcasts request tr={}ms",
            spec.tr_ms
        ));

        // Vehicles answer after independent per-round jitter.
        let mut deliveries: Vec<Delivery> = Vec::new();
        let mut vehicle_report_meter = Meter::new();
        let mut responders = 0u64;
        for (vi, vehicle) in vehicles.iter_mut().enumerate() {
            let jitter_us = jitter_rng.gen_range(0..=scenario.response_jitter_ms * 1000);
            let now_ms = t_req + jitter_us / 1000;
            let before = vehicle.report_meter;
            let report = vehicle
                .respond(&req, now_ms, &mut crypto_rng)
                .map_err(|e| ScenarioError::Protocol(e.to_string()))?;
            let Some(report) = report else {
                event_log.push(format!("t={now_ms}ms round={round} vehicle {vi} rejected request"));
                continue;
            };
            responders += 1;
            vehicle_report_meter.absorb(&vehicle.report_meter.delta_since(&before));
            traffic.vehicle_to_rsu_messages += 1;
            traffic.vehicle_to_rsu_nominal_bits += report.nominal_bits(&widths);
            traffic.vehicle_to_rsu_wire_bytes += report.encode(&params).bytes.len() as u64;
            captured_reports.insert((round, vi), report.clone());
            deliveries.push(Delivery {
                at_us: t_req * 1000 + jitter_us,
                source_vehicle: Some(vi),
                report,
                tampered: false,
                replayed: false,
            });
        }

        // In-flight tampering scripted for this round.
        let mut undecodable = 0u64;
        let mut tamper_records: Vec<(usize, TamperField, Vec<u8>, bool)> = Vec::new();
        let mut destroyed: Vec<usize> = Vec::new();
        for action in &scenario.adversary {
            let AdversaryAction::TamperReport {
                round: r,
                vehicle,
                field,
            } = *action
            else {
                continue;
            };
            if r != round {
                continue;
            }
            let Some(idx) = deliveries
                .iter()
                .position(|d| d.source_vehicle == Some(vehicle))
            else {
                continue;
            };
            deliveries[idx].tampered = true;
            match tamper_report(&params, &deliveries[idx].report, field, &mut tamper_rng) {
                Ok(mutated) => {
                    tamper_records.push((vehicle, field, mutated.pid.clone(), false));
                    deliveries[idx].report = mutated;
                }
                Err(_) => {
                    // The bytes no longer parse; the receiver never sees
                    // a message at all.
                    undecodable += 1;
                    tamper_records.push((vehicle, field, Vec::new(), true));
                    destroyed.push(idx);
                    event_log.push(format!(
                        "t={t_req}ms round={round} tampered report of vehicle {vehicle} no longer decodes"
                    ));
                }
            }
        }
        destroyed.sort_unstable();
        for idx in destroyed.into_iter().rev() {
            deliveries.remove(idx);
        }

        // Replays of earlier reports injected into this round.
        for action in &scenario.adversary {
            let AdversaryAction::ReplayReport {
                round: source_round,
                vehicle,
                into_round,
            } = *action
            else {
                continue;
            };
            if into_round != round {
                continue;
            }
            if let Some(report) = captured_reports.get(&(source_round, vehicle)) {
                traffic.vehicle_to_rsu_messages += 1;
                traffic.vehicle_to_rsu_nominal_bits += report.nominal_bits(&widths);
                traffic.vehicle_to_rsu_wire_bytes += report.encode(&params).bytes.len() as u64;
                deliveries.push(Delivery {
                    at_us: (t_req + scenario.response_jitter_ms) * 1000 + 999,
                    source_vehicle: None,
                    report: report.clone(),
                    tampered: false,
                    replayed: true,
                });
            }
        }

        // Wire ordering: arrival time, ties broken by pseudonym bytes so
        // the order itself carries no vehicle identity.
        deliveries.sort_by(|a, b| (a.at_us, &a.report.pid).cmp(&(b.at_us, &b.report.pid)));

        let now_agg = t_req + scenario.response_jitter_ms + COLLECT_DELAY_MS;
        let delivered: Vec<SpeedReport> = deliveries.iter().map(|d| d.report.clone()).collect();
        let audit_mark = rsu.audit_log.len();
        let rsu_before = rsu.aggregate_meter;
        let aggregate = if delivered.is_empty() {
            None
        } else {
            rsu.verify_and_aggregate(&delivered, req.ts, now_agg).ok()
        };
        let rsu_meter = rsu.aggregate_meter.delta_since(&rsu_before);
        let dropped: Vec<DroppedReport> = rsu.audit_log[audit_mark..].to_vec();

        let m = scenario.config.segments;
        let (stats, sp_meter, accepted) = match &aggregate {
            Some(agg) => {
                traffic.rsu_to_sp_messages += 1;
                traffic.rsu_to_sp_nominal_bits += agg.nominal_bits(&widths);
                traffic.rsu_to_sp_wire_bytes += agg.encode(&params).bytes.len() as u64;
                traffic.sp_ciphertexts_per_round.push(2);
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

        // Reference pipeline over the reports the protocol should accept:
        // honest, untampered, unreplayed.
        let expected_vehicles: Vec<usize> = deliveries
            .iter()
            .filter(|d| !d.tampered && !d.replayed)
            .filter_map(|d| d.source_vehicle)
            .collect();
        let ground_truth = scenario.reference_round_stats(round, &expected_vehicles);
        let matches_ground_truth =
            stats == ground_truth && accepted == expected_vehicles.len() as u64;

        // Settle tamper outcomes now that the RSU has ruled.
        for (vehicle, field, pid, was_undecodable) in tamper_records {
            let rejected = was_undecodable || dropped.iter().any(|d| d.pid == pid);
            adversary_outcomes.push(AdversaryOutcome::Tamper {
                round,
                vehicle,
                field,
                rejected,
            });
        }
        for action in &scenario.adversary {
            let AdversaryAction::ReplayReport {
                round: source_round,
                vehicle,
                into_round,
            } = *action
            else {
                continue;
            };
            if into_round != round {
                continue;
            }
            let Some(report) = captured_reports.get(&(source_round, vehicle)) else {
                continue;
            };
            let rejected = dropped.iter().any(|d| d.pid == report.pid);
            adversary_outcomes.push(AdversaryOutcome::ReplayReport {
                source_round,
                vehicle,
                into_round,
                rejected,
            });
        }

        event_log.push(format!(
            "t={now_agg}ms round={round} rsu accepted {accepted}/{} deliveries, sp recovered stats (match={matches_ground_truth})",
            deliveries.len()
        ));

        rounds.push(RoundOutcome {
            round,
            request_ts: req.ts,
            responders,
            delivered: deliveries.len() as u64,
            accepted,
            undecodable,
            dropped,
            stats,
            ground_truth,
            matches_ground_truth,
            vehicle_report_meter,
            rsu_meter,
            sp_meter,
        });
    }

    // Replayed requests are verified by every vehicle at the delayed
    // delivery time; acceptance is possible only inside the freshness
    // window, and any response would find no open collection round.
    for action in &scenario.adversary {
        let AdversaryAction::ReplayRequest { round, delay_ms } = *action else {
            continue;
        };
        let req = &captured_requests[round];
        let now_ms = req.ts + delay_ms;
        let mut rejecting = 0u64;
        let mut accepting = 0u64;
        for vehicle in vehicles.iter_mut() {
            if vehicle.verify_request(req, now_ms) {
                accepting += 1;
            } else {
                rejecting += 1;
            }
        }
        event_log.push(format!(
            "t={now_ms}ms adversary replayed round {round} request: {rejecting} rejected, {accepting} accepted"
        ));
        adversary_outcomes.push(AdversaryOutcome::ReplayRequest {
            source_round: round,
            delay_ms,
            vehicles_rejecting: rejecting,
            vehicles_accepting: accepting,
        });
    }

    let totals = RoleTotals {
        vehicle_report: vehicles.iter().fold(Meter::new(), |mut acc, v| {
            acc.absorb(&v.report_meter);
            acc
        }),
        vehicle_verify: vehicles.iter().fold(Meter::new(), |mut acc, v| {
            acc.absorb(&v.verify_meter);
            acc
        }),
        rsu_request: rsu.request_meter,
        rsu_aggregate: rsu.aggregate_meter,
        sp: sp.meter,
    };

    Ok(ScenarioResult {
        scheme: "pptm".into(),
        name: scenario.name.clone(),
        seed: scenario.seed,
        rounds,
        adversary_outcomes,
        totals,
        traffic,
        event_log,
    })
}

/// Report-tampering outcome summary: every scripted tamper must have
/// been rejected, and every round's recovered statistics must equal the
/// reference pipeline over the untampered reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TamperTestReport {
    pub tamper_actions: usize,
    pub all_tampered_rejected: bool,
    pub all_rounds_match_ground_truth: bool,
    pub outcomes: Vec<AdversaryOutcome>,
}

pub fn adversary_tamper_test(scenario: &Scenario) -> Result<TamperTestReport, ScenarioError> {
    let result = run_scenario(scenario)?;
    let tampers: Vec<&AdversaryOutcome> = result
        .adversary_outcomes
        .iter()
        .filter(|o| matches!(o, AdversaryOutcome::Tamper { .. }))
        .collect();
    let all_tampered_rejected = tampers.iter().all(|o| match o {
        AdversaryOutcome::Tamper { rejected, .. } => *rejected,
        _ => true,
    });
    Ok(TamperTestReport {
        tamper_actions: tampers.len(),
        all_tampered_rejected,
        all_rounds_match_ground_truth: result.all_rounds_match_ground_truth(),
        outcomes: result.adversary_outcomes,
    })
}
