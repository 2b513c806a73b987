//! `pptm bench`: sweep segment count M and vehicle count N, run one
//! counted round per grid point for each scheme, and emit plot-ready
//! cost rows.
//!
//! Counter columns are measured by instrumentation and are independent
//! of key sizes and hardware; `--counters-only` therefore produces a
//! byte-stable CSV suitable for CI. Wall-clock mode additionally times
//! each role (median of `--reps` repetitions) and prints a prediction
//! from the symbolic cost model evaluated at measured unit costs.
//!
//! Row semantics: the vehicle row counts one vehicle's report; the RSU
//! and SP rows count one full round at the given N. The bytes column is
//! the role's transmitted message size under the bandwidth model
//! (nominal bits / 8).
//!
//! The sweep drives synthetic single-leg rounds, so a supplied --config
//! contributes its key sizes and nominal field widths; the per-sweep
//! mobility parameters (segment count, vehicle cap, speed cap, pseudonym
//! batch size) are set by the grid itself.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use num_bigint::BigUint;
use pptm::entities::{RsuState, SpState, SystemConfig, TaState, VehicleState};
use pptm::entities::vehicle::TrajectoryEntry;
use pptm::metrics::Meter;
use pptm::simnet::trpm::{TrpmRsu, TrpmSp, TrpmVehicle};

use crate::CliError;

pub const COSTS_SCHEMA: &str = "pptm-costs-v1";

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 1)]
    pub m_min: usize,
    #[arg(long, default_value_t = 30)]
    pub m_max: usize,
    #[arg(long, default_value_t = 1)]
    pub n_min: usize,
    #[arg(long, default_value_t = 50)]
    pub n_max: usize,

    /// Repetitions per timed measurement (wall-clock mode).
    #[arg(long, default_value_t = 5)]
    pub reps: usize,

    /// Skip wall-clock timing; counter and byte columns only.
    #[arg(long)]
    pub counters_only: bool,

    /// Output CSV path.
    #[arg(long, default_value = "costs.csv")]
    pub out: PathBuf,
}

struct CostRow {
    scheme: &'static str,
    role: &'static str,
    m: usize,
    n: usize,
    meter: Meter,
    predicted_ms: Option<f64>,
    measured_ms: Option<f64>,
    bits: u64,
}

/// Time-per-operation at the bench's parameter sizes, for the symbolic
/// prediction column.
struct UnitCosts {
    exp_n2_ms: f64,
    pairing_ms: f64,
    mul_g_ms: f64,
}

impl UnitCosts {
    fn predict(&self, meter: &Meter) -> f64 {
        meter.exp_n2 as f64 * self.exp_n2_ms
            + meter.pairings as f64 * self.pairing_ms
            + meter.mul_g as f64 * self.mul_g_ms
    }
}

pub fn run(args: &BenchArgs, seed: Option<u64>, config: Option<&Path>) -> Result<(), CliError> {
    if args.m_min < 1 || args.m_max < args.m_min || args.n_min < 1 || args.n_max < args.n_min {
        return Err(CliError::input("empty sweep range"));
    }
    if !args.counters_only && args.reps < 3 {
        return Err(CliError::input(
            "wall-clock mode needs at least 3 repetitions for a median",
        ));
    }
    let seed = seed.unwrap_or(0);
    let base_config = match config {
        Some(_) => crate::load_config(config)?,
        // Bench defaults favor sweep speed; counters are identical at
        // any key size.
        None => SystemConfig {
            kappa: 128,
            kappa1: 128,
            ..SystemConfig::default()
        },
    };

    let mut rows: Vec<CostRow> = Vec::new();
    let mut units: Option<UnitCosts> = None;

    for m in args.m_min..=args.m_max {
        let mut cfg = base_config.clone();
        cfg.segments = m;
        cfg.max_vehicles_per_segment = args.n_max as u64 + 14;
        cfg.max_scaled_speed = 2;
        cfg.pseudonyms_per_vehicle = 2;

        let mut ta = TaState::init(cfg.clone(), seed.wrapping_add(m as u64))
            .map_err(|e| CliError::input(format!("M={m}: {e}")))?;
        let rsu_material = ta
            .register_rsu(b"rsu-1")
            .map_err(|e| CliError::input(format!("M={m}: {e}")))?;
        let materials: Vec<_> = (0..args.n_max)
            .map(|vi| ta.register_vehicle(&format!("bench-{vi}"), b"rsu-1"))
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::input(format!("M={m}: {e}")))?;
        let sp_material = ta
            .sp_material(b"rsu-1")
            .map_err(|e| CliError::input(format!("M={m}: {e}")))?;
        let widths = cfg.field_widths(&sp_material.group, &sp_material.paillier_pk);

        if units.is_none() && !args.counters_only {
            units = Some(measure_units(&sp_material));
        }

        let mut vehicles: Vec<VehicleState> =
            materials.iter().cloned().map(VehicleState::new).collect();
        let mut trpm_vehicles: Vec<TrpmVehicle> = materials
            .iter()
            .cloned()
            .map(|mat| TrpmVehicle::new(VehicleState::new(mat)))
            .collect();
        for (vi, v) in vehicles.iter_mut().enumerate() {
            v.observe(bench_leg(vi, m)).expect("bench leg in range");
        }
        for (vi, v) in trpm_vehicles.iter_mut().enumerate() {
            v.inner.observe(bench_leg(vi, m)).expect("bench leg in range");
        }
        let mut rsu = RsuState::new(rsu_material.clone());
        let mut trpm_rsu = TrpmRsu::new(rsu_material);
        let mut sp = SpState::new(sp_material.clone());
        let mut trpm_sp = TrpmSp::new(sp_material);
        let mut rng = pptm::entities::derive_rng(seed, format!("bench/m{m}").as_bytes());

        for n in args.n_min..=args.n_max {
            let ts = 1_000_000 + n as u64 * 20_000;

            // --- main scheme ---
            let req = rsu.make_request(ts, 900_000);
            let mut reports = Vec::with_capacity(n);
            let mut vehicle_meter = Meter::new();
            let mut vehicle_times = Vec::new();
            for v in vehicles[..n].iter_mut() {
                let before = v.report_meter;
                let started = Instant::now();
                let report = v
                    .respond(&req, ts, &mut rng)
                    .expect("bench vehicle")
                    .expect("fresh request");
                vehicle_times.push(started.elapsed().as_secs_f64() * 1e3);
                vehicle_meter.absorb(&v.report_meter.delta_since(&before));
                reports.push(report);
            }
            // Per-vehicle counters: every report costs the same.
            let per_vehicle = Meter {
                exp_n2: vehicle_meter.exp_n2 / n as u64,
                mul_n2: vehicle_meter.mul_n2 / n as u64,
                pairings: vehicle_meter.pairings / n as u64,
                mul_g: vehicle_meter.mul_g / n as u64,
            };

            let rsu_before = rsu.aggregate_meter;
            let started = Instant::now();
            let agg = rsu
                .verify_and_aggregate(&reports, ts, ts)
                .expect("bench aggregate");
            let mut rsu_time = started.elapsed().as_secs_f64() * 1e3;
            let rsu_meter = rsu.aggregate_meter.delta_since(&rsu_before);

            let sp_before = sp.meter;
            let started = Instant::now();
            sp.read(&agg).expect("bench read");
            let mut sp_time = started.elapsed().as_secs_f64() * 1e3;
            let sp_meter = sp.meter.delta_since(&sp_before);

            let mut vehicle_time = vehicle_times[0];
            if let Some(units) = &units {
                // Medians over the requested repetitions.
                for _ in 1..args.reps {
                    let started = Instant::now();
                    let _ = vehicles[0].respond(&req, ts, &mut rng);
                    vehicle_times.push(started.elapsed().as_secs_f64() * 1e3);
                }
                vehicle_time = median(&mut vehicle_times);
                let mut rsu_times = vec![rsu_time];
                let mut sp_times = vec![sp_time];
                for _ in 1..args.reps {
                    let started = Instant::now();
                    let _ = rsu.verify_and_aggregate(&reports, ts, ts);
                    rsu_times.push(started.elapsed().as_secs_f64() * 1e3);
                    let started = Instant::now();
                    let _ = sp.read(&agg);
                    sp_times.push(started.elapsed().as_secs_f64() * 1e3);
                }
                rsu_time = median(&mut rsu_times);
                sp_time = median(&mut sp_times);
                let _ = units;
            }

            push_scheme_rows(
                &mut rows,
                "pptm",
                m,
                n,
                per_vehicle,
                rsu_meter,
                sp_meter,
                [vehicle_time, rsu_time, sp_time],
                [
                    reports[0].nominal_bits(&widths),
                    agg.nominal_bits(&widths),
                    0,
                ],
                units.as_ref(),
                args.counters_only,
            );

            // --- baseline ---
            let ts = ts + 10_000;
            let req = trpm_rsu.make_request(ts, 900_000);
            let mut reports = Vec::with_capacity(n);
            let mut vehicle_meter = Meter::new();
            let mut vehicle_times = Vec::new();
            for v in trpm_vehicles[..n].iter_mut() {
                let before = v.inner.report_meter;
                let started = Instant::now();
                let report = v
                    .respond(&req, ts, &mut rng)
                    .expect("bench vehicle")
                    .expect("fresh request");
                vehicle_times.push(started.elapsed().as_secs_f64() * 1e3);
                vehicle_meter.absorb(&v.inner.report_meter.delta_since(&before));
                reports.push(report);
            }
            let per_vehicle = Meter {
                exp_n2: vehicle_meter.exp_n2 / n as u64,
                mul_n2: vehicle_meter.mul_n2 / n as u64,
                pairings: vehicle_meter.pairings / n as u64,
                mul_g: vehicle_meter.mul_g / n as u64,
            };

            let rsu_before = trpm_rsu.aggregate_meter;
            let started = Instant::now();
            let agg = trpm_rsu
                .verify_and_aggregate(&reports, ts, ts)
                .expect("bench aggregate");
            let mut rsu_time = started.elapsed().as_secs_f64() * 1e3;
            let rsu_meter = trpm_rsu.aggregate_meter.delta_since(&rsu_before);

            let sp_before = trpm_sp.meter;
            let started = Instant::now();
            trpm_sp.read(&agg).expect("bench read");
            let mut sp_time = started.elapsed().as_secs_f64() * 1e3;
            let sp_meter = trpm_sp.meter.delta_since(&sp_before);

            let mut vehicle_time = vehicle_times[0];
            if units.is_some() {
                for _ in 1..args.reps {
                    let started = Instant::now();
                    let _ = trpm_vehicles[0].respond(&req, ts, &mut rng);
                    vehicle_times.push(started.elapsed().as_secs_f64() * 1e3);
                }
                vehicle_time = median(&mut vehicle_times);
                let mut rsu_times = vec![rsu_time];
                let mut sp_times = vec![sp_time];
                for _ in 1..args.reps {
                    let started = Instant::now();
                    let _ = trpm_rsu.verify_and_aggregate(&reports, ts, ts);
                    rsu_times.push(started.elapsed().as_secs_f64() * 1e3);
                    let started = Instant::now();
                    let _ = trpm_sp.read(&agg);
                    sp_times.push(started.elapsed().as_secs_f64() * 1e3);
                }
                rsu_time = median(&mut rsu_times);
                sp_time = median(&mut sp_times);
            }

            push_scheme_rows(
                &mut rows,
                "trpm",
                m,
                n,
                per_vehicle,
                rsu_meter,
                sp_meter,
                [vehicle_time, rsu_time, sp_time],
                [
                    reports[0].nominal_bits(&widths),
                    agg.nominal_bits(&widths),
                    0,
                ],
                units.as_ref(),
                args.counters_only,
            );
        }
    }

    let csv = render_csv(&rows, args.counters_only, args.reps);
    std::fs::write(&args.out, csv)?;
    println!(
        "wrote {} cost rows ({} grid points x 2 schemes x 3 roles) to {}",
        rows.len(),
        (args.m_max - args.m_min + 1) * (args.n_max - args.n_min + 1),
        args.out.display()
    );
    Ok(())
}

fn bench_leg(vi: usize, m: usize) -> TrajectoryEntry {
    TrajectoryEntry {
        segment: vi % m,
        entry_ms: 0,
        exit_ms: 30_000,
        speed: (vi % 3) as u64,
    }
}

#[allow(clippy::too_many_arguments)]
fn push_scheme_rows(
    rows: &mut Vec<CostRow>,
    scheme: &'static str,
    m: usize,
    n: usize,
    vehicle: Meter,
    rsu: Meter,
    sp: Meter,
    times_ms: [f64; 3],
    bits: [u64; 3],
    units: Option<&UnitCosts>,
    counters_only: bool,
) {
    let roles = [("vehicle", vehicle), ("rsu", rsu), ("sp", sp)];
    for (i, (role, meter)) in roles.into_iter().enumerate() {
        rows.push(CostRow {
            scheme,
            role,
            m,
            n,
            meter,
            predicted_ms: units.map(|u| u.predict(&meter)),
            measured_ms: (!counters_only).then_some(times_ms[i]),
            bits: bits[i],
        });
    }
}

/// Median wall-clock times for one exponentiation mod n², one pairing,
/// and one group multiplication at the bench's parameter sizes.
fn measure_units(sp_material: &pptm::entities::SpMaterial) -> UnitCosts {
    let pk = &sp_material.paillier_pk;
    let group = &sp_material.group;
    let mut meter = Meter::new();

    let base = pk.n() - 17u32;
    let mut times: Vec<f64> = (0..9)
        .map(|i| {
            let started = Instant::now();
            let _ = base.modpow(&(pk.n() - BigUint::from(i + 1u32)), pk.n_squared());
            started.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    let exp_n2_ms = median(&mut times);

    let h = pptm::bilinear::hash_to_group(group, b"unit-cost-probe");
    let mut times: Vec<f64> = (0..9)
        .map(|_| {
            let started = Instant::now();
            let _ = group.pair(group.generator(), &h, &mut meter);
            started.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    let pairing_ms = median(&mut times);

    let k = BigUint::from(0x5DEECE66Du64);
    let mut times: Vec<f64> = (0..9)
        .map(|_| {
            let started = Instant::now();
            let _ = group.scalar_mul(&k, &h, &mut meter);
            started.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    let mul_g_ms = median(&mut times);

    UnitCosts {
        exp_n2_ms,
        pairing_ms,
        mul_g_ms,
    }
}

fn median(samples: &mut [f64]) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    samples[samples.len() / 2]
}

fn format_bytes(bits: u64) -> String {
    if bits.is_multiple_of(8) {
        (bits / 8).to_string()
    } else {
        format!("{:.3}", bits as f64 / 8.0)
    }
}

fn render_csv(rows: &[CostRow], counters_only: bool, reps: usize) -> String {
    let mut out = format!(
        "# schema: {COSTS_SCHEMA}; mode: {}\n",
        if counters_only {
            "counters-only".to_string()
        } else {
            format!("wall-clock, median of {reps}")
        }
    );
    out.push_str("scheme,role,m,n,count_exp_n2,count_pairing,count_mul_g,predicted_ms,measured_ms,bytes\n");
    for row in rows {
        let predicted = row
            .predicted_ms
            .map(|v| format!("{v:.3}"))
            .unwrap_or_default();
        let measured = row
            .measured_ms
            .map(|v| format!("{v:.3}"))
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            row.scheme,
            row.role,
            row.m,
            row.n,
            row.meter.exp_n2,
            row.meter.pairings,
            row.meter.mul_g,
            predicted,
            measured,
            format_bytes(row.bits),
        ));
    }
    out
}
