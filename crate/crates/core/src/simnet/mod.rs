//! Deterministic discrete-event simulation of the protocol.
//!
//! A [`Scenario`] scripts vehicle mobility, the request schedule and an
//! optional adversary; [`run_scenario`] executes it against the real
//! entities and checks every round against a plaintext reference
//! pipeline computed with zero cryptographic calls. The same scenario
//! can be run under the [`trpm`] baseline for cost comparison, and
//! [`link_attack_test`] mounts the passing-time linking attack against
//! both a plaintext strawman and the encrypted protocol.
//!
//! Everything is driven by the scenario seed: identical inputs produce
//! byte-identical [`ScenarioResult`] artifacts.

mod link;
mod runner;
mod scenario;
pub mod trpm;

pub use link::{link_attack_test, LinkOutcome, LinkScenario};
pub use runner::{
    adversary_tamper_test, run_scenario, AdversaryOutcome, RoleTotals, RoundOutcome,
    ScenarioResult, TamperTestReport, TrafficTotals, RSU_ID,
};
pub use scenario::{
    AdversaryAction, Leg, RequestSpec, Scenario, ScenarioError, TamperField, VehicleTrace,
    COLLECT_DELAY_MS,
};
pub use trpm::trpm_run_scenario;

/// A four-vehicle, four-segment demonstration scenario: every vehicle
/// covers two segments, leaving two reporters per segment. Doubles as
/// the shipped example input.
pub fn demo_scenario(seed: u64) -> Scenario {
    use crate::entities::SystemConfig;
    let min = 60_000u64;
    let legs = [
        [(0usize, 40u64), (1, 55)],
        [(1, 65), (2, 70)],
        [(2, 50), (3, 80)],
        [(0, 60), (3, 90)],
    ];
    let vehicles = legs
        .iter()
        .enumerate()
        .map(|(vi, pair)| VehicleTrace {
            id: format!("car-{vi}"),
            legs: pair
                .iter()
                .enumerate()
                .map(|(li, &(segment, speed))| Leg {
                    segment,
                    entry_ms: li as u64 * 2 * min,
                    exit_ms: (li as u64 + 1) * 2 * min,
                    speed,
                })
                .collect(),
        })
        .collect();
    Scenario {
        name: "demo".into(),
        seed,
        config: SystemConfig::test_scale(),
        response_jitter_ms: 50,
        vehicles,
        requests: vec![
            RequestSpec {
                at_ms: 5 * min,
                tr_ms: 30 * min,
            },
            RequestSpec {
                at_ms: 10 * min,
                tr_ms: 30 * min,
            },
        ],
        adversary: vec![],
    }
}
