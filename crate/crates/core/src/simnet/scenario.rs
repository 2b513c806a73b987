//! Scenario description, validation, and the no-crypto reference
//! pipeline.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entities::{SegmentStats, SystemConfig, TaError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("vehicle {vehicle} trace invalid: {detail}")]
    Trace { vehicle: usize, detail: String },
    #[error("round {round} segment {segment} would carry {count} vehicles, above the cap {cap}")]
    CapacityExceeded {
        round: usize,
        segment: usize,
        count: u64,
        cap: u64,
    },
    #[error("adversary action out of range: {0}")]
    BadAdversaryRef(String),
    #[error("system initialization failed: {0}")]
    Init(#[from] TaError),
    #[error("protocol failure during simulation: {0}")]
    Protocol(String),
}

/// One completed segment traversal in a vehicle's scripted trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leg {
    pub segment: usize,
    pub entry_ms: u64,
    pub exit_ms: u64,
    /// Average speed over the leg, scaled units.
    pub speed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VehicleTrace {
    pub id: String,
    pub legs: Vec<Leg>,
}

/// A scheduled speed request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestSpec {
    pub at_ms: u64,
    pub tr_ms: u64,
}

/// Message fields the adversary can flip a bit in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TamperField {
    Pid,
    VerifyKey,
    Cipher1,
    Cipher2,
    Timestamp,
    Signature,
}

/// Scripted adversary behavior. The adversary always eavesdrops on every
/// link; these are its active moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversaryAction {
    /// Flip a bit in one field of one vehicle's in-flight report.
    TamperReport {
        round: usize,
        vehicle: usize,
        field: TamperField,
    },
    /// Re-broadcast a captured request `delay_ms` after its timestamp.
    ReplayRequest { round: usize, delay_ms: u64 },
    /// Re-deliver a captured report into a later round.
    ReplayReport {
        round: usize,
        vehicle: usize,
        into_round: usize,
    },
}

fn default_jitter() -> u64 {
    50
}

/// A complete, deterministic simulation input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    #[serde(default)]
    pub config: SystemConfig,
    /// Vehicles answer a request after a uniform random delay in
    /// `[0, response_jitter_ms]`, fresh each round.
    #[serde(default = "default_jitter")]
    pub response_jitter_ms: u64,
    #[serde(default)]
    pub vehicles: Vec<VehicleTrace>,
    pub requests: Vec<RequestSpec>,
    #[serde(default)]
    pub adversary: Vec<AdversaryAction>,
}

impl Scenario {
    /// Reject anything that cannot run: bad config, out-of-range traces,
    /// per-round capacity violations, dangling adversary references.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.config.validate().map_err(ScenarioError::Config)?;
        if self.response_jitter_ms + COLLECT_DELAY_MS > self.config.freshness_window_ms {
            return Err(ScenarioError::Config(format!(
                "response jitter {} + collection delay {} exceeds the freshness window {}",
                self.response_jitter_ms, COLLECT_DELAY_MS, self.config.freshness_window_ms
            )));
        }
        if self.requests.is_empty() {
            return Err(ScenarioError::Config("at least one request is required".into()));
        }
        for pair in self.requests.windows(2) {
            if pair[1].at_ms <= pair[0].at_ms {
                return Err(ScenarioError::Config(
                    "requests must be strictly increasing in time".into(),
                ));
            }
        }
        for (vi, trace) in self.vehicles.iter().enumerate() {
            for leg in &trace.legs {
                if leg.segment >= self.config.segments {
                    return Err(ScenarioError::Trace {
                        vehicle: vi,
                        detail: format!("segment {} out of range", leg.segment),
                    });
                }
                if leg.speed > self.config.max_scaled_speed {
                    return Err(ScenarioError::Trace {
                        vehicle: vi,
                        detail: format!("speed {} above cap", leg.speed),
                    });
                }
                if leg.exit_ms < leg.entry_ms {
                    return Err(ScenarioError::Trace {
                        vehicle: vi,
                        detail: "exit before entry".into(),
                    });
                }
            }
        }
        // Per-round capacity: with every vehicle honest, no segment may
        // exceed Q reporters.
        for (round, _) in self.requests.iter().enumerate() {
            let all: Vec<usize> = (0..self.vehicles.len()).collect();
            let stats = self.reference_round_stats(round, &all);
            for (segment, &count) in stats.counts.iter().enumerate() {
                if count > self.config.max_vehicles_per_segment {
                    return Err(ScenarioError::CapacityExceeded {
                        round,
                        segment,
                        count,
                        cap: self.config.max_vehicles_per_segment,
                    });
                }
            }
        }
        for action in &self.adversary {
            let ok = match *action {
                AdversaryAction::TamperReport { round, vehicle, .. } => {
                    round < self.requests.len() && vehicle < self.vehicles.len()
                }
                AdversaryAction::ReplayRequest { round, .. } => round < self.requests.len(),
                AdversaryAction::ReplayReport {
                    round,
                    vehicle,
                    into_round,
                } => {
                    round < self.requests.len()
                        && into_round < self.requests.len()
                        && vehicle < self.vehicles.len()
                }
            };
            if !ok {
                return Err(ScenarioError::BadAdversaryRef(format!("{action:?}")));
            }
        }
        Ok(())
    }

    /// The vectors vehicle `vi` would report for round `round`, computed
    /// directly from the scripted trace with no cryptography. This is
    /// the reference the encrypted pipeline is checked against.
    pub fn reference_vectors(&self, round: usize, vi: usize) -> (Vec<u64>, Vec<u64>) {
        let req = &self.requests[round];
        let m = self.config.segments;
        let mut legs: Vec<&Leg> = self.vehicles[vi]
            .legs
            .iter()
            .filter(|l| l.exit_ms <= req.at_ms)
            .collect();
        legs.sort_by_key(|l| std::cmp::Reverse(l.exit_ms));

        let mut flags = vec![0u64; m];
        let mut speeds = vec![0u64; m];
        let mut budget = req.tr_ms;
        for leg in legs {
            let dwell = leg.exit_ms - leg.entry_ms;
            if dwell > budget {
                break;
            }
            budget -= dwell;
            if flags[leg.segment] == 0 {
                flags[leg.segment] = 1;
                speeds[leg.segment] = leg.speed;
            }
        }
        (flags, speeds)
    }

    /// Reference per-segment statistics for one round over a set of
    /// vehicles, zero cryptographic calls involved.
    pub fn reference_round_stats(&self, round: usize, vehicles: &[usize]) -> SegmentStats {
        let m = self.config.segments;
        let mut counts = vec![0u64; m];
        let mut sums = vec![0u64; m];
        for &vi in vehicles {
            let (flags, speeds) = self.reference_vectors(round, vi);
            for i in 0..m {
                counts[i] += flags[i];
                sums[i] += speeds[i];
            }
        }
        let avgs = counts
            .iter()
            .zip(&sums)
            .map(|(&l, &ls)| (l > 0).then(|| reference_half_even(ls, l)))
            .collect();
        SegmentStats {
            counts,
            speed_sums: sums,
            avg_speeds: avgs,
        }
    }
}

/// Gap between a request and the RSU closing its collection window.
pub const COLLECT_DELAY_MS: u64 = 1;

/// Round-half-to-even division, written separately from the provider's
/// implementation so the reference cross-checks it.
fn reference_half_even(numerator: u64, denominator: u64) -> u64 {
    let (quotient, remainder) = (numerator / denominator, numerator % denominator);
    let doubled = 2 * remainder;
    if doubled > denominator || (doubled == denominator && quotient % 2 == 1) {
        quotient + 1
    } else {
        quotient
    }
}
