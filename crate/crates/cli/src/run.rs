//! `pptm run`: execute a scenario file, print per-round statistics and
//! adversary outcomes, and fail loudly if the encrypted pipeline ever
//! disagrees with the plaintext reference.

use std::path::PathBuf;

use clap::Args;
use pptm::simnet::{self, AdversaryOutcome, Scenario, ScenarioError, ScenarioResult};

use crate::CliError;

#[derive(Args)]
pub struct RunArgs {
    /// Scenario file (TOML).
    pub scenario: PathBuf,

    /// Which scheme to run.
    #[arg(long, default_value = "pptm", value_parser = ["pptm", "trpm"])]
    pub scheme: String,

    /// Write the full result artifact (JSON) here.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Write per-round per-segment statistics (CSV) here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

pub fn run(args: &RunArgs, seed_override: Option<u64>) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.scenario).map_err(|e| {
        CliError::input(format!("cannot read {}: {e}", args.scenario.display()))
    })?;
    // TOML parse errors carry line/column spans.
    let mut scenario: Scenario = toml::from_str(&text)
        .map_err(|e| CliError::input(format!("{}: {e}", args.scenario.display())))?;
    if let Some(seed) = seed_override {
        scenario.seed = seed;
    }

    let result = match args.scheme.as_str() {
        "pptm" => simnet::run_scenario(&scenario),
        _ => simnet::trpm_run_scenario(&scenario),
    }
    .map_err(|e| match e {
        ScenarioError::Protocol(msg) => CliError::invariant(msg),
        other => CliError::input(other.to_string()),
    })?;

    print_report(&result);

    if let Some(path) = &args.out {
        std::fs::write(path, result.to_canonical_bytes())?;
        println!("result artifact written to {}", path.display());
    }
    if let Some(path) = &args.csv {
        std::fs::write(path, stats_csv(&result))?;
        println!("per-segment statistics written to {}", path.display());
    }

    let adversary_ok = result.adversary_outcomes.iter().all(|o| match o {
        AdversaryOutcome::Tamper { rejected, .. } => *rejected,
        AdversaryOutcome::ReplayReport { rejected, .. } => *rejected,
        AdversaryOutcome::ReplayRequest {
            vehicles_accepting, ..
        } => *vehicles_accepting == 0,
    });
    if !result.all_rounds_match_ground_truth() {
        return Err(CliError::invariant(
            "recovered statistics diverged from the reference pipeline",
        ));
    }
    if !adversary_ok {
        return Err(CliError::invariant(
            "an adversary action was accepted by a verifier",
        ));
    }
    println!("oracle equivalence: OK ({} rounds)", result.rounds.len());
    Ok(())
}

fn print_report(result: &ScenarioResult) {
    println!(
        "scenario '{}' (scheme {}, seed {})",
        result.name, result.scheme, result.seed
    );
    for round in &result.rounds {
        println!(
            "round {} @ t={}ms: {} responders, {} accepted, {} dropped{}",
            round.round,
            round.request_ts,
            round.responders,
            round.accepted,
            round.dropped.len(),
            if round.matches_ground_truth {
                ""
            } else {
                "  << MISMATCH"
            }
        );
        for (segment, ((count, sum), avg)) in round
            .stats
            .counts
            .iter()
            .zip(&round.stats.speed_sums)
            .zip(&round.stats.avg_speeds)
            .enumerate()
        {
            match avg {
                Some(avg) => println!(
                    "  segment {segment}: {count} vehicle(s), speed sum {sum}, average {avg}"
                ),
                None => println!("  segment {segment}: no vehicles"),
            }
        }
    }
    for outcome in &result.adversary_outcomes {
        match outcome {
            AdversaryOutcome::Tamper {
                round,
                vehicle,
                field,
                rejected,
            } => println!(
                "adversary: tampered {field:?} of vehicle {vehicle} in round {round}: {}",
                verdict(*rejected)
            ),
            AdversaryOutcome::ReplayRequest {
                source_round,
                delay_ms,
                vehicles_rejecting,
                vehicles_accepting,
            } => println!(
                "adversary: replayed request of round {source_round} after {delay_ms}ms: {vehicles_rejecting} rejected, {vehicles_accepting} accepted"
            ),
            AdversaryOutcome::ReplayReport {
                source_round,
                vehicle,
                into_round,
                rejected,
            } => println!(
                "adversary: replayed vehicle {vehicle}'s round-{source_round} report into round {into_round}: {}",
                verdict(*rejected)
            ),
        }
    }
    println!(
        "traffic: {} reports ({} bits nominal) vehicle->RSU, {} messages ({} bits nominal) RSU->SP",
        result.traffic.vehicle_to_rsu_messages,
        result.traffic.vehicle_to_rsu_nominal_bits,
        result.traffic.rsu_to_sp_messages,
        result.traffic.rsu_to_sp_nominal_bits,
    );
}

fn verdict(rejected: bool) -> &'static str {
    if rejected {
        "rejected"
    } else {
        "ACCEPTED (invariant violation)"
    }
}

fn stats_csv(result: &ScenarioResult) -> String {
    let mut out = String::from(
        "# schema: pptm-stats-v1\nround,segment,vehicle_count,speed_sum,avg_speed,gt_vehicle_count,gt_speed_sum,match\n",
    );
    for round in &result.rounds {
        for segment in 0..round.stats.counts.len() {
            let avg = round.stats.avg_speeds[segment]
                .map(|a| a.to_string())
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                round.round,
                segment,
                round.stats.counts[segment],
                round.stats.speed_sums[segment],
                avg,
                round.ground_truth.counts[segment],
                round.ground_truth.speed_sums[segment],
                round.matches_ground_truth,
            ));
        }
    }
    out
}
