//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the criterion number (run with `--nocapture` to see
//! them). Tolerances are pinned in the assertions themselves.

use num_bigint::{BigUint, RandBigInt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use pptm::bilinear::{self, Signature, VerifyKey};
use pptm::entities::vehicle::TrajectoryEntry;
use pptm::entities::{
    MaterialInventory, MaterialKind, RsuState, SpState, SystemConfig, TaState, VehicleState,
};
use pptm::metrics::Meter;
use pptm::paillier;
use pptm::seqcode::{self, SegmentVector, ValueRole};
use pptm::simnet::{
    self, demo_scenario, link_attack_test, run_scenario, trpm_run_scenario, AdversaryAction,
    AdversaryOutcome, Leg, LinkScenario, RequestSpec, Scenario, VehicleTrace,
};
use pptm::wire::{AggregatedReport, Field, SpeedReport, SpeedRequest};

// ---------------------------------------------------------------------
// 1. Paillier property suite
// ---------------------------------------------------------------------

#[test]
fn acceptance_1_paillier_property_suite() {
    let mut rng = ChaCha20Rng::seed_from_u64(0xACC1);
    let mut meter = Meter::new();
    let mut roundtrips = 0u32;

    for kappa1 in [64u32, 256] {
        for _ in 0..10 {
            let (pk, sk) = paillier::keygen(kappa1, &mut rng).unwrap();
            assert_eq!(pk.n_bits(), 2 * kappa1 as u64);
            for _ in 0..50 {
                let m = rng.gen_biguint_below(pk.n());
                let c = paillier::encrypt(&pk, &m, &mut rng, &mut meter).unwrap();
                assert_eq!(paillier::decrypt(&sk, &pk, &c, &mut meter).unwrap(), m);
                roundtrips += 1;
            }
            // Homomorphic laws, exact.
            let m1 = rng.gen_biguint_below(pk.n());
            let m2 = rng.gen_biguint_below(pk.n());
            let a = rng.gen_biguint_below(pk.n());
            let c1 = paillier::encrypt(&pk, &m1, &mut rng, &mut meter).unwrap();
            let c2 = paillier::encrypt(&pk, &m2, &mut rng, &mut meter).unwrap();
            let sum = paillier::add_ciphertexts(&pk, &c1, &c2, &mut meter);
            assert_eq!(
                paillier::decrypt(&sk, &pk, &sum, &mut meter).unwrap(),
                (&m1 + &m2) % pk.n()
            );
            let scaled = paillier::scalar_mul(&pk, &c1, &a, &mut meter).unwrap();
            assert_eq!(
                paillier::decrypt(&sk, &pk, &scaled, &mut meter).unwrap(),
                (&a * &m1) % pk.n()
            );
        }
    }
    assert_eq!(roundtrips, 1000);

    // Full-scale smoke test.
    let (pk, sk) = paillier::keygen(1024, &mut rng).unwrap();
    assert_eq!(pk.n_bits(), 2048);
    let m = rng.gen_biguint_below(pk.n());
    let c = paillier::encrypt(&pk, &m, &mut rng, &mut meter).unwrap();
    assert_eq!(paillier::decrypt(&sk, &pk, &c, &mut meter).unwrap(), m);

    println!("ACCEPTANCE 1 (paillier property suite): PASS");
}

// ---------------------------------------------------------------------
// 2. Packing/unpacking oracle equivalence
// ---------------------------------------------------------------------

#[test]
fn acceptance_2_unpacking_oracle_equivalence() {
    let mut rng = ChaCha20Rng::seed_from_u64(0xACC2);
    let bound = BigUint::from(1u8) << 256;

    for trial in 0..500 {
        let m = rng.gen_range(1..=12usize);
        let q = rng.gen_range(1..=10u64);
        let n = rng.gen_range(1..=q);
        let v = rng.gen_range(1..=100u64);
        let seq = seqcode::gen_sequence(m, q, v, &bound, &mut rng).unwrap();

        let vectors: Vec<SegmentVector> = (0..n)
            .map(|_| SegmentVector((0..m).map(|_| rng.gen_range(0..=v)).collect()))
            .collect();
        // Independent oracle: elementwise integer sums.
        let mut oracle = vec![0u64; m];
        for vec in &vectors {
            for (acc, &x) in oracle.iter_mut().zip(&vec.0) {
                *acc += x;
            }
        }
        let packed: BigUint = vectors
            .iter()
            .map(|vec| seqcode::encode(&seq, vec, ValueRole::Speed).unwrap())
            .sum();
        let decoded = seqcode::decode(&seq, &packed, ValueRole::Speed).unwrap();
        assert_eq!(decoded.0, oracle, "trial {trial}");
    }

    // Capacity sharpness: exactly Q top-speed vectors per segment still
    // decode; one more trips the bound check.
    let (m, q, v) = (5usize, 7u64, 31u64);
    let seq = seqcode::gen_sequence(m, q, v, &bound, &mut rng).unwrap();
    let full = SegmentVector(vec![v; m]);
    let at_cap: BigUint = (0..q)
        .map(|_| seqcode::encode(&seq, &full, ValueRole::Speed).unwrap())
        .sum();
    assert_eq!(
        seqcode::decode(&seq, &at_cap, ValueRole::Speed).unwrap().0,
        vec![q * v; m]
    );
    let over_cap: BigUint = (0..=q)
        .map(|_| seqcode::encode(&seq, &full, ValueRole::Speed).unwrap())
        .sum();
    assert!(seqcode::decode(&seq, &over_cap, ValueRole::Speed).is_err());

    println!("ACCEPTANCE 2 (unpacking oracle equivalence, 500 scenarios): PASS");
}

// ---------------------------------------------------------------------
// 3. End-to-end pipeline equivalence
// ---------------------------------------------------------------------

fn random_pipeline_scenario(seed: u64) -> Scenario {
    let mut rng = ChaCha20Rng::seed_from_u64(seed.wrapping_mul(0x9E3779B9).wrapping_add(7));
    let mut config = SystemConfig::test_scale();
    // Room for the packing sequence at the largest M·Q·V this generator
    // can draw.
    config.kappa1 = 96;
    config.segments = rng.gen_range(1..=10);
    config.max_vehicles_per_segment = 20;
    config.max_scaled_speed = rng.gen_range(50..=200);
    let n_vehicles = rng.gen_range(1..=20usize);
    let vehicles = (0..n_vehicles)
        .map(|vi| {
            let mut t = rng.gen_range(0..60_000u64);
            let legs = (0..rng.gen_range(1..=5))
                .map(|_| {
                    let dwell = rng.gen_range(10_000..=200_000);
                    let leg = Leg {
                        segment: rng.gen_range(0..config.segments),
                        entry_ms: t,
                        exit_ms: t + dwell,
                        speed: rng.gen_range(0..=config.max_scaled_speed),
                    };
                    t += dwell + rng.gen_range(0..30_000);
                    leg
                })
                .collect();
            VehicleTrace {
                id: format!("car-{vi}"),
                legs,
            }
        })
        .collect();
    Scenario {
        name: format!("pipeline-{seed}"),
        seed,
        config,
        response_jitter_ms: 50,
        vehicles,
        requests: vec![
            RequestSpec {
                at_ms: 500_000,
                tr_ms: rng.gen_range(60_000..=500_000),
            },
            RequestSpec {
                at_ms: 1_200_000,
                tr_ms: rng.gen_range(60_000..=500_000),
            },
        ],
        adversary: vec![],
    }
}

#[test]
fn acceptance_3_end_to_end_pipeline_equivalence() {
    for seed in 0..100u64 {
        let scenario = random_pipeline_scenario(seed);
        let result = run_scenario(&scenario).unwrap();
        for round in &result.rounds {
            // SegmentStats equality covers exact counts, exact speed
            // sums, and fixed-point averages of the oracle values.
            assert_eq!(
                round.stats, round.ground_truth,
                "scenario {seed} round {} diverged from the reference pipeline",
                round.round
            );
            assert!(round.matches_ground_truth);
        }
    }
    println!("ACCEPTANCE 3 (end-to-end equivalence, 100 scenarios): PASS");
}

// ---------------------------------------------------------------------
// 4. Signature suite
// ---------------------------------------------------------------------

struct SignedFixtures {
    params: bilinear::GroupParams,
    report: SpeedReport,
    request: SpeedRequest,
    aggregate: AggregatedReport,
    report_vk: VerifyKey,
    rsu_vk: VerifyKey,
}

fn signed_fixtures(seed: u64) -> SignedFixtures {
    let config = SystemConfig::test_scale();
    let mut ta = TaState::init(config, seed).unwrap();
    let rsu_material = ta.register_rsu(b"rsu-1").unwrap();
    let mut vehicle = VehicleState::new(ta.register_vehicle("car-0", b"rsu-1").unwrap());
    vehicle
        .observe(TrajectoryEntry {
            segment: 1,
            entry_ms: 0,
            exit_ms: 60_000,
            speed: 42,
        })
        .unwrap();
    let mut rsu = RsuState::new(rsu_material);
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0xF00D);
    let request = rsu.make_request(60_000, 300_000);
    let report = vehicle.respond(&request, 60_000, &mut rng).unwrap().unwrap();
    let aggregate = rsu
        .verify_and_aggregate(std::slice::from_ref(&report), request.ts, 60_000)
        .unwrap();
    SignedFixtures {
        params: rsu.material().group.clone(),
        report_vk: report.y.clone(),
        rsu_vk: rsu.verify_key().clone(),
        report,
        request,
        aggregate,
    }
}

#[test]
fn acceptance_4_signature_suite() {
    let f = signed_fixtures(0xACC4);
    let mut meter = Meter::new();
    let params = &f.params;

    // Honest verification always passes.
    assert!(bilinear::verify(
        params,
        &f.report_vk,
        &f.report.resigned_bytes(params),
        &f.report.sigma,
        &mut meter
    ));
    assert!(bilinear::verify(
        params,
        &f.rsu_vk,
        &SpeedRequest::signed_bytes(&f.request.rsu_id, f.request.ts, f.request.tr),
        &f.request.sigma,
        &mut meter
    ));
    assert!(bilinear::verify(
        params,
        &f.rsu_vk,
        &f.aggregate.resigned_bytes(),
        &f.aggregate.sigma,
        &mut meter
    ));

    // 1,000 single-bit tampers across all signed fields, all rejected.
    let mut rng = ChaCha20Rng::seed_from_u64(0xACC4 + 1);
    let mut trials = 0u32;

    let report_fields = [
        Field::Pid,
        Field::VerifyKey,
        Field::Cipher(0),
        Field::Cipher(1),
        Field::Ts,
        Field::Sigma,
    ];
    let report_encoded = f.report.encode(params);
    for i in 0..600 {
        let field = report_fields[i % report_fields.len()];
        let range = report_encoded.range_of(field).unwrap();
        let mut bytes = report_encoded.bytes.clone();
        let byte = rng.gen_range(range);
        bytes[byte] ^= 1 << rng.gen_range(0..8u8);
        let rejected = match SpeedReport::decode(params, &bytes) {
            Err(_) => true,
            Ok(t) => !bilinear::verify(params, &t.y, &t.resigned_bytes(params), &t.sigma, &mut meter),
        };
        assert!(rejected, "report tamper {i} in {field:?} accepted");
        trials += 1;
    }

    let request_fields = [Field::RsuId, Field::Ts, Field::Tr, Field::Sigma];
    let request_encoded = f.request.encode(params);
    for i in 0..200 {
        let field = request_fields[i % request_fields.len()];
        let range = request_encoded.range_of(field).unwrap();
        let mut bytes = request_encoded.bytes.clone();
        let byte = rng.gen_range(range);
        bytes[byte] ^= 1 << rng.gen_range(0..8u8);
        let rejected = match SpeedRequest::decode(params, &bytes) {
            Err(_) => true,
            Ok(t) => !bilinear::verify(
                params,
                &f.rsu_vk,
                &SpeedRequest::signed_bytes(&t.rsu_id, t.ts, t.tr),
                &t.sigma,
                &mut meter,
            ),
        };
        assert!(rejected, "request tamper {i} in {field:?} accepted");
        trials += 1;
    }

    let aggregate_fields = [Field::RsuId, Field::Cipher(0), Field::Cipher(1), Field::Ts, Field::Sigma];
    let aggregate_encoded = f.aggregate.encode(params);
    for i in 0..200 {
        let field = aggregate_fields[i % aggregate_fields.len()];
        let range = aggregate_encoded.range_of(field).unwrap();
        let mut bytes = aggregate_encoded.bytes.clone();
        let byte = rng.gen_range(range);
        bytes[byte] ^= 1 << rng.gen_range(0..8u8);
        let rejected = match AggregatedReport::decode(params, &bytes) {
            Err(_) => true,
            Ok(t) => !bilinear::verify(params, &f.rsu_vk, &t.resigned_bytes(), &t.sigma, &mut meter),
        };
        assert!(rejected, "aggregate tamper {i} in {field:?} accepted");
        trials += 1;
    }
    assert_eq!(trials, 1000);

    // Batch/individual agreement for honest batches, N ∈ [1, 50], with
    // the batch costing exactly N+1 pairings and each individual check 2.
    let params = bilinear::setup(128, &mut ChaCha20Rng::seed_from_u64(4)).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(0xACC4 + 2);
    for n in 1..=50usize {
        let mut keys = Vec::new();
        let mut msgs = Vec::new();
        let mut sigs = Vec::new();
        for i in 0..n {
            let (sk, vk) = bilinear::keygen(&params, &mut rng);
            let msg = format!("batch {n} item {i}").into_bytes();
            sigs.push(bilinear::sign(&params, &sk, &msg, &mut meter));
            keys.push(vk);
            msgs.push(msg);
        }
        let items: Vec<(&VerifyKey, &[u8], &Signature)> = (0..n)
            .map(|i| (&keys[i], msgs[i].as_slice(), &sigs[i]))
            .collect();
        let mut batch_meter = Meter::new();
        assert!(bilinear::batch_verify(&params, &items, &mut batch_meter).unwrap());
        assert_eq!(batch_meter.pairings, n as u64 + 1);
        for (vk, msg, sig) in &items {
            let mut single = Meter::new();
            assert!(bilinear::verify(&params, vk, msg, sig, &mut single));
            assert_eq!(single.pairings, 2);
        }
    }

    println!("ACCEPTANCE 4 (signature suite, 1000 tamper trials): PASS");
}

// ---------------------------------------------------------------------
// 5. Cost-model counter reproduction
// ---------------------------------------------------------------------

/// Drive one synthetic round of each scheme for every (M, N) and check
/// measured counters against the symbolic cost model.
#[test]
fn acceptance_5_cost_model_counters() {
    const M_MAX: usize = 30;
    const N_MAX: usize = 50;

    for m in 1..=M_MAX {
        // One deployment per M; both schemes share materials. Counter
        // values are key-size independent, so test-scale keys suffice:
        // the main scheme needs capacity for the packing sequence, the
        // baseline does not.
        let mut config = SystemConfig::test_scale();
        config.kappa1 = 128;
        config.segments = m;
        config.max_vehicles_per_segment = N_MAX as u64 + 14;
        config.max_scaled_speed = 2;
        config.pseudonyms_per_vehicle = 2;
        let mut ta = TaState::init(config, 0xACC5 + m as u64).unwrap();
        let rsu_material = ta.register_rsu(b"rsu-1").unwrap();
        let materials: Vec<_> = (0..N_MAX)
            .map(|vi| ta.register_vehicle(&format!("car-{vi}"), b"rsu-1").unwrap())
            .collect();
        let sp_material = ta.sp_material(b"rsu-1").unwrap();

        let mut vehicles: Vec<VehicleState> =
            materials.iter().cloned().map(VehicleState::new).collect();
        let mut trpm_vehicles: Vec<simnet::trpm::TrpmVehicle> = materials
            .iter()
            .cloned()
            .map(|mat| simnet::trpm::TrpmVehicle::new(VehicleState::new(mat)))
            .collect();
        for (vi, vehicle) in vehicles.iter_mut().enumerate() {
            vehicle
                .observe(TrajectoryEntry {
                    segment: vi % m,
                    entry_ms: 0,
                    exit_ms: 30_000,
                    speed: (vi % 3) as u64,
                })
                .unwrap();
        }
        for (vi, vehicle) in trpm_vehicles.iter_mut().enumerate() {
            vehicle
                .inner
                .observe(TrajectoryEntry {
                    segment: vi % m,
                    entry_ms: 0,
                    exit_ms: 30_000,
                    speed: (vi % 3) as u64,
                })
                .unwrap();
        }
        let mut rsu = RsuState::new(rsu_material.clone());
        let mut trpm_rsu = simnet::trpm::TrpmRsu::new(rsu_material);
        let mut sp = SpState::new(sp_material.clone());
        let mut trpm_sp = simnet::trpm::TrpmSp::new(sp_material);
        let mut rng = ChaCha20Rng::seed_from_u64(0xACC5 ^ m as u64);

        for n in 1..=N_MAX {
            let ts = 40_000 + n as u64 * 10_000;

            // --- main scheme round
            let req = rsu.make_request(ts, 35_000);
            let mut vehicle_meter = Meter::new();
            let reports: Vec<SpeedReport> = vehicles[..n]
                .iter_mut()
                .map(|v| {
                    let before = v.report_meter;
                    let r = v.respond(&req, ts, &mut rng).unwrap().unwrap();
                    vehicle_meter.absorb(&v.report_meter.delta_since(&before));
                    r
                })
                .collect();
            let rsu_before = rsu.aggregate_meter;
            let agg = rsu.verify_and_aggregate(&reports, ts, ts).unwrap();
            let rsu_meter = rsu.aggregate_meter.delta_since(&rsu_before);
            let sp_before = sp.meter;
            sp.read(&agg).unwrap();
            let sp_meter = sp.meter.delta_since(&sp_before);

            // Vehicle: 2·C_n + C_m per report, independent of M.
            assert_eq!(vehicle_meter.exp_n2, 2 * n as u64, "pptm vehicle M={m} N={n}");
            assert_eq!(vehicle_meter.mul_g, n as u64);
            // RSU: (N+1)·C_e + C_m.
            assert_eq!(rsu_meter.pairings, n as u64 + 1, "pptm rsu M={m} N={n}");
            assert_eq!(rsu_meter.mul_g, 1);
            // SP: 2·C_n, and its one verification costs 2 pairings.
            assert_eq!(sp_meter.exp_n2, 2, "pptm sp M={m} N={n}");
            assert_eq!(sp_meter.pairings, 2);

            // --- baseline round
            let req = trpm_rsu.make_request(ts + 5_000, 35_000);
            let mut vehicle_meter = Meter::new();
            let reports: Vec<_> = trpm_vehicles[..n]
                .iter_mut()
                .map(|v| {
                    let before = v.inner.report_meter;
                    let r = v.respond(&req, ts + 5_000, &mut rng).unwrap().unwrap();
                    vehicle_meter.absorb(&v.inner.report_meter.delta_since(&before));
                    r
                })
                .collect();
            let rsu_before = trpm_rsu.aggregate_meter;
            let agg = trpm_rsu
                .verify_and_aggregate(&reports, ts + 5_000, ts + 5_000)
                .unwrap();
            let rsu_meter = trpm_rsu.aggregate_meter.delta_since(&rsu_before);
            let sp_before = trpm_sp.meter;
            trpm_sp.read(&agg).unwrap();
            let sp_meter = trpm_sp.meter.delta_since(&sp_before);

            // Vehicle: M·C_n + C_m per report, linear in M.
            assert_eq!(
                vehicle_meter.exp_n2,
                (m * n) as u64,
                "trpm vehicle M={m} N={n}"
            );
            assert_eq!(vehicle_meter.mul_g, n as u64);
            assert_eq!(rsu_meter.pairings, n as u64 + 1, "trpm rsu M={m} N={n}");
            assert_eq!(rsu_meter.mul_g, 1);
            // SP: M·C_n.
            assert_eq!(sp_meter.exp_n2, m as u64, "trpm sp M={m} N={n}");
            assert_eq!(sp_meter.pairings, 2);
        }
    }

    println!("ACCEPTANCE 5 (cost-model counters, M 1..=30 × N 1..=50 × 2 schemes): PASS");
}

// ---------------------------------------------------------------------
// 6. Bandwidth formulas
// ---------------------------------------------------------------------

#[test]
fn acceptance_6_bandwidth_formulas() {
    // Reference parameters: 512-bit primes (1024-bit modulus, 2048-bit
    // ciphertexts), 160-bit group elements, 100-bit nominal pseudonym,
    // identity and timestamp widths.
    let config = SystemConfig {
        segments: 30,
        max_vehicles_per_segment: 4,
        max_scaled_speed: 120,
        ..SystemConfig::default()
    };
    assert_eq!(config.kappa1, 512);
    assert_eq!(config.kappa, 160);

    let mut ta = TaState::init(config.clone(), 0xACC6).unwrap();
    let rsu_material = ta.register_rsu(b"rsu-1").unwrap();
    let vehicle_material = ta.register_vehicle("car-0", b"rsu-1").unwrap();
    let sp_material = ta.sp_material(b"rsu-1").unwrap();
    assert_eq!(sp_material.paillier_pk.n_bits(), 1024);
    assert_eq!(sp_material.group.element_bits(), 160);

    let widths = config.field_widths(&sp_material.group, &sp_material.paillier_pk);
    let mut rng = ChaCha20Rng::seed_from_u64(0xACC6 + 1);

    // The main scheme's report and aggregate sizes are constant in M.
    let mut vehicle = VehicleState::new(vehicle_material.clone());
    vehicle
        .observe(TrajectoryEntry {
            segment: 3,
            entry_ms: 0,
            exit_ms: 60_000,
            speed: 80,
        })
        .unwrap();
    let mut rsu = RsuState::new(rsu_material.clone());
    let req = rsu.make_request(60_000, 300_000);
    let report = vehicle.respond(&req, 60_000, &mut rng).unwrap().unwrap();
    assert_eq!(
        report.nominal_bits(&widths),
        100 + 160 + 2 * 2048 + 100 + 160
    );
    assert_eq!(report.nominal_bits(&widths), 4616);
    let agg = rsu
        .verify_and_aggregate(std::slice::from_ref(&report), req.ts, 60_000)
        .unwrap();
    assert_eq!(agg.nominal_bits(&widths), 100 + 2 * 2048 + 100 + 160);
    // Reference-scale capstone: the provider decrypts the round exactly.
    let mut sp = SpState::new(sp_material.clone());
    let stats = sp.read(&agg).unwrap();
    assert_eq!(stats.counts[3], 1);
    assert_eq!(stats.speed_sums[3], 80);
    assert_eq!(stats.avg_speeds[3], Some(80));

    // The baseline grows linearly in M on both links. A per-M report is
    // built against the same deployment (key sizes are what matter, and
    // the baseline needs no packing sequence): M fresh ciphertexts,
    // signed under a real pseudonym, verifiable end to end.
    let pseudonym = &vehicle_material.pseudonyms[0];
    let group = &vehicle_material.group;
    let pk = &vehicle_material.paillier_pk;
    let mut meter = Meter::new();
    for m in 1..=30usize {
        let ts = 100_000 + m as u64 * 10_000;
        let cts: Vec<_> = (0..m)
            .map(|i| {
                paillier::encrypt(pk, &BigUint::from(i as u64), &mut rng, &mut meter).unwrap()
            })
            .collect();
        let signed =
            pptm::wire::BaselineReport::signed_bytes(group, &pseudonym.pid, &pseudonym.verify, &cts, ts);
        let report = pptm::wire::BaselineReport {
            pid: pseudonym.pid.clone(),
            y: pseudonym.verify.clone(),
            cts,
            ts,
            sigma: bilinear::sign(group, &pseudonym.signing, &signed, &mut meter),
        };
        assert!(bilinear::verify(
            group,
            &report.y,
            &report.resigned_bytes(group),
            &report.sigma,
            &mut meter
        ));
        assert_eq!(
            report.nominal_bits(&widths),
            100 + 160 + 2048 * m as u64 + 100 + 160,
            "baseline report M={m}"
        );
        if m == 2 {
            // At M = 2 the two schemes' report sizes coincide.
            assert_eq!(report.nominal_bits(&widths), 4616);
        }

        let agg_signed =
            pptm::wire::BaselineAggregate::signed_bytes(&rsu_material.rsu_id, &report.cts, ts);
        let baseline_agg = pptm::wire::BaselineAggregate {
            rsu_id: rsu_material.rsu_id.clone(),
            cts: report.cts.clone(),
            ts,
            report_count: 1,
            sigma: bilinear::sign(group, &rsu_material.signing, &agg_signed, &mut meter),
        };
        assert_eq!(
            baseline_agg.nominal_bits(&widths),
            100 + 2048 * m as u64 + 100 + 160,
            "baseline aggregate M={m}"
        );
    }

    println!("ACCEPTANCE 6 (bandwidth formulas, M 1..=30): PASS");
}

// ---------------------------------------------------------------------
// 7. Security behavior suite
// ---------------------------------------------------------------------

#[test]
fn acceptance_7_security_behaviors() {
    // (a) Replayed stale requests and reports: 100 trials, 100% rejected.
    let mut replay_trials = 0u32;
    for seed in 0..25u64 {
        let mut scenario = demo_scenario(seed);
        let window = scenario.config.freshness_window_ms;
        scenario.adversary = vec![
            AdversaryAction::ReplayRequest {
                round: 0,
                delay_ms: window + 1 + seed,
            },
            AdversaryAction::ReplayRequest {
                round: 1,
                delay_ms: window * 2 + seed,
            },
            AdversaryAction::ReplayReport {
                round: 0,
                vehicle: (seed % 4) as usize,
                into_round: 1,
            },
            AdversaryAction::ReplayReport {
                round: 0,
                vehicle: ((seed + 1) % 4) as usize,
                into_round: 1,
            },
        ];
        let result = run_scenario(&scenario).unwrap();
        for outcome in &result.adversary_outcomes {
            match outcome {
                AdversaryOutcome::ReplayRequest {
                    vehicles_rejecting,
                    vehicles_accepting,
                    ..
                } => {
                    assert_eq!(*vehicles_accepting, 0, "seed {seed}: stale request accepted");
                    assert_eq!(*vehicles_rejecting, 4);
                    replay_trials += 1;
                }
                AdversaryOutcome::ReplayReport { rejected, .. } => {
                    assert!(rejected, "seed {seed}: replayed report accepted");
                    replay_trials += 1;
                }
                _ => {}
            }
        }
        assert!(result.all_rounds_match_ground_truth());
    }
    assert_eq!(replay_trials, 100);

    // (b) The aggregator's material structurally lacks decryption and
    // tracing capability.
    let mut ta = TaState::init(SystemConfig::test_scale(), 0xACC7).unwrap();
    let rsu_material = ta.register_rsu(b"rsu-1").unwrap();
    let inventory = rsu_material.inventory();
    assert!(!inventory.contains(&MaterialKind::PaillierSecret));
    assert!(!inventory.contains(&MaterialKind::TraceKey));
    assert!(!inventory.contains(&MaterialKind::PackingSequence));
    let sp_inventory = ta.sp_material(b"rsu-1").unwrap().inventory();
    assert!(sp_inventory.contains(&MaterialKind::PaillierSecret));
    assert!(!sp_inventory.contains(&MaterialKind::VehicleSigningKeys));
    assert!(!sp_inventory.contains(&MaterialKind::TraceKey));

    // (c) The provider sees exactly one ciphertext pair per round, no
    // matter how many vehicles reported.
    for n_vehicles in [1usize, 5, 20] {
        let mut scenario = demo_scenario(500 + n_vehicles as u64);
        scenario.config.max_vehicles_per_segment = 32;
        scenario.vehicles = (0..n_vehicles)
            .map(|vi| VehicleTrace {
                id: format!("car-{vi}"),
                legs: vec![Leg {
                    segment: vi % scenario.config.segments,
                    entry_ms: 0,
                    exit_ms: 60_000,
                    speed: 50 + vi as u64,
                }],
            })
            .collect();
        let result = run_scenario(&scenario).unwrap();
        assert_eq!(
            result.traffic.rsu_to_sp_messages,
            scenario.requests.len() as u64
        );
        assert!(result
            .traffic
            .sp_ciphertexts_per_round
            .iter()
            .all(|&c| c == 2));
    }

    // (d) Passing-time linking: total against the plaintext strawman,
    // chance-level against the encrypted protocol. 200 seeded
    // 20-vehicle scenarios; mean accuracy bounded by 1.5/N.
    let mut pptm_accuracy_sum = 0.0;
    for seed in 0..200u64 {
        let outcome = link_attack_test(&LinkScenario::new(seed, 20)).unwrap();
        assert_eq!(
            outcome.strawman_accuracy, 1.0,
            "seed {seed}: strawman attack should link everything"
        );
        assert_eq!(outcome.pptm_plaintext_fields, 0);
        assert!(outcome.pptm_distinct_ts_per_round.iter().all(|&n| n == 1));
        pptm_accuracy_sum += outcome.pptm_accuracy;
    }
    let mean_accuracy = pptm_accuracy_sum / 200.0;
    assert!(
        mean_accuracy <= 1.5 / 20.0,
        "mean linking accuracy {mean_accuracy} exceeds 1.5/N"
    );

    println!(
        "ACCEPTANCE 7 (security behaviors; mean linking accuracy {mean_accuracy:.4} ≤ {:.4}): PASS",
        1.5 / 20.0
    );
}

// ---------------------------------------------------------------------
// 8. Determinism
// ---------------------------------------------------------------------

#[test]
fn acceptance_8_determinism() {
    for scenario in [demo_scenario(0xACC8), random_pipeline_scenario(0xACC8)] {
        let a = run_scenario(&scenario).unwrap().to_canonical_bytes();
        let b = run_scenario(&scenario).unwrap().to_canonical_bytes();
        assert_eq!(a, b, "same seed must reproduce the artifact byte for byte");
    }
    let base = trpm_run_scenario(&demo_scenario(0xACC8)).unwrap().to_canonical_bytes();
    let again = trpm_run_scenario(&demo_scenario(0xACC8)).unwrap().to_canonical_bytes();
    assert_eq!(base, again);

    println!("ACCEPTANCE 8 (determinism): PASS");
}
