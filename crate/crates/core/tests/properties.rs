use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};
use proptest::prelude::*;

use sector_congest::curve_filter::{reject_outliers, DailyCurve, MinuteWindow};
use sector_congest::gbm::{
    encode_features, fold_assignment, score_scc, train_boosted, BoostConfig, FeatureSchema, FeatureVector, TreeParams,
};
use sector_congest::message::{
    parse_message, serialize_message, ArrivalPayload, DeparturePayload, Milestone, MsgType, Payload, Qualifier,
    RawMessage, SectorsPayload, TrackPayload,
};
use sector_congest::occupancy::PiStore;
use sector_congest::prep::{run_preparation, PrepConfig};
use sector_congest::raw_store::{IndexField, RawStore};
use sector_congest::serving::PredictionRequest;
use sector_congest::synth::{airborne_minutes_on, generate_scenario, oracle_sector_counts, AnomalyRates, ScenarioSpec};
use sector_congest::time::day_range;

fn time() -> impl Strategy<Value = DateTime<Utc>> {
    (0i64..3 * 86_400).prop_map(|s| Utc.with_ymd_and_hms(2018, 3, 13, 0, 0, 0).unwrap() + Duration::seconds(s))
}

fn qualifier() -> impl Strategy<Value = Qualifier> {
    prop_oneof![Just(Qualifier::Actual), Just(Qualifier::Estimated)]
}

fn payload() -> impl Strategy<Value = Payload> {
    prop_oneof![
        (time(), qualifier()).prop_map(|(t, q)| Payload::Departure(DeparturePayload {
            departure_time: t,
            qualifier: q,
        })),
        (time(), qualifier(), proptest::option::of((time(), qualifier()))).prop_map(|(t, q, d)| {
            Payload::Arrival(ArrivalPayload {
                arrival_time: t,
                arrival_qualifier: q,
                departure: d,
            })
        }),
        (-90.0f64..=90.0, -180.0f64..=180.0, 0.0f64..45_000.0, 0.0f64..700.0, 0.0f64..360.0).prop_map(
            |(latitude, longitude, altitude, ground_speed, heading)| Payload::Track(TrackPayload {
                latitude,
                longitude,
                altitude,
                ground_speed,
                heading,
            })
        ),
        proptest::collection::btree_map(0u32..600, "[A-Z]{1,3}[0-9/]{0,3}", 1..6).prop_map(|m| {
            Payload::Sectors(SectorsPayload {
                milestones: m
                    .into_iter()
                    .map(|(entry_offset_minutes, sector)| Milestone {
                        sector,
                        entry_offset_minutes,
                    })
                    .collect(),
            })
        }),
    ]
}

fn message() -> impl Strategy<Value = RawMessage> {
    ("[A-Z0-9]{1,8}(-[0-9]{8})?", time(), 0u64..1_000_000, payload()).prop_map(|(flight_ref, msg_time, seq, payload)| {
        RawMessage {
            flight_ref,
            msg_time,
            seq,
            payload,
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn messages_round_trip(m in message()) {
        let line = serialize_message(&m);
        prop_assert_eq!(parse_message(&line).unwrap(), m);
    }

    #[test]
    fn score_lies_in_unit_interval(
        pairs in proptest::collection::vec((0.0f64..50.0, -20.0f64..80.0), 1..60)
    ) {
        let (y, f): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let s = score_scc(&y, &f).unwrap();
        prop_assert!(s > 0.0 && s <= 1.0);
        prop_assert_eq!(score_scc(&y, &y).unwrap(), 1.0);
    }

    #[test]
    fn folds_partition_the_samples(n in 2usize..300, k in 2usize..8, seed in any::<u64>()) {
        prop_assume!(k <= n);
        let folds = fold_assignment(n, k, seed);
        prop_assert_eq!(folds.len(), k);
        let all: BTreeSet<usize> = folds.iter().flatten().copied().collect();
        prop_assert_eq!(all.len(), n);
        prop_assert_eq!(folds.iter().map(Vec::len).sum::<usize>(), n);
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        prop_assert_eq!(fold_assignment(n, k, seed), folds);
    }

    #[test]
    fn prediction_buckets_are_step_aligned(start in 0i64..5000, len in 0i64..600, step in 1u32..90) {
        let t0 = Utc.with_ymd_and_hms(2018, 3, 14, 0, 0, 0).unwrap() + Duration::minutes(start);
        let req = PredictionRequest {
            sector: "S".into(),
            start_time: t0,
            end_time: t0 + Duration::minutes(len),
            step_minutes: step,
            weather: None,
        };
        let times = req.bucket_times();
        prop_assert_eq!(times.len() as i64, (len + step as i64 - 1) / step as i64);
        for t in times {
            prop_assert!(t >= req.start_time && t < req.end_time);
            prop_assert_eq!((t - t0).num_minutes() % step as i64, 0);
        }
    }
}

fn dataset(targets: &[f64]) -> Vec<(FeatureVector, f64)> {
    let t0 = Utc.with_ymd_and_hms(2018, 3, 12, 0, 0, 0).unwrap();
    targets
        .iter()
        .enumerate()
        .map(|(i, y)| (encode_features(t0 + Duration::minutes(i as i64 * 97), None), *y))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn training_error_never_rises(
        y in proptest::collection::vec(0.0f64..20.0, 2..80),
        depth in 1usize..5,
        min_leaf in 1usize..6,
        line_search in any::<bool>(),
    ) {
        let cfg = BoostConfig {
            n_learners: 60,
            tree: TreeParams { max_depth: depth, min_leaf },
            line_search,
            ..BoostConfig::default()
        };
        let m = train_boosted(&dataset(&y), FeatureSchema::default(), &cfg, "S").unwrap();
        prop_assert_eq!(m.train_mse.len(), 61);
        for w in m.train_mse.windows(2) {
            prop_assert!(w[1] <= w[0], "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn shifting_targets_shifts_predictions(
        y in proptest::collection::vec(0.0f64..20.0, 2..60),
        c in -50.0f64..50.0,
    ) {
        let cfg = BoostConfig { n_learners: 30, ..BoostConfig::default() };
        let base = dataset(&y);
        let shifted: Vec<f64> = y.iter().map(|v| v + c).collect();
        let a = train_boosted(&base, FeatureSchema::default(), &cfg, "S").unwrap();
        let b = train_boosted(&dataset(&shifted), FeatureSchema::default(), &cfg, "S").unwrap();
        for (x, _) in &base {
            prop_assert!((b.raw(&x.values) - a.raw(&x.values) - c).abs() < 1e-9);
        }
    }

    #[test]
    fn rejection_is_permutation_invariant(
        levels in proptest::collection::vec(0u32..40, 3..12),
        rotate in 0usize..12,
    ) {
        let first = NaiveDate::from_ymd_opt(2018, 1, 1).unwrap();
        let curves: Vec<DailyCurve> = levels
            .iter()
            .enumerate()
            .map(|(i, l)| DailyCurve {
                sector: "S".into(),
                day: first + Duration::weeks(i as i64),
                values: (0..1440).map(|m| l + (m % 4) as u32).collect(),
            })
            .collect();
        let r = reject_outliers(&curves, &MinuteWindow::default()).unwrap();
        let mut permuted = curves.clone();
        permuted.rotate_left(rotate % curves.len());
        let p = reject_outliers(&permuted, &MinuteWindow::default()).unwrap();
        let days = |cs: &[DailyCurve], ids: &BTreeSet<usize>| ids.iter().map(|i| cs[*i].day).collect::<BTreeSet<_>>();
        prop_assert_eq!(days(&curves, &r.rejected), days(&permuted, &p.rejected));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn index_and_scan_agree(seed in any::<u64>(), flights in 5usize..40) {
        let day = NaiveDate::from_ymd_opt(2018, 3, 14).unwrap();
        let spec = ScenarioSpec { seed, from: day, to: day, flights_per_day: flights, ..ScenarioSpec::default() };
        let scenario = generate_scenario(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let store = RawStore::open(dir.path()).unwrap();
        store.ingest_day(scenario.lines_for_day(day), day).unwrap();
        let refs = store.scan_flight_refs(day).unwrap();
        let kinds: Vec<&str> = MsgType::ALL.iter().map(|k| k.as_str()).collect();
        let scan_refs: Vec<_> = refs.iter().map(|r| store.query(day, IndexField::FlightRef, r).unwrap()).collect();
        let scan_kinds: Vec<_> = kinds.iter().map(|k| store.query(day, IndexField::MsgType, k).unwrap()).collect();
        store.ensure_indices(day, &[IndexField::FlightRef, IndexField::MsgType]).unwrap();
        let idx_refs: Vec<_> = refs.iter().map(|r| store.query(day, IndexField::FlightRef, r).unwrap()).collect();
        let idx_kinds: Vec<_> = kinds.iter().map(|k| store.query(day, IndexField::MsgType, k).unwrap()).collect();
        prop_assert_eq!(scan_refs, idx_refs);
        prop_assert_eq!(scan_kinds, idx_kinds);
        let missing = store.query(day, IndexField::FlightRef, "nope").unwrap();
        prop_assert!(missing.is_empty());
    }

    #[test]
    fn random_scenarios_match_the_oracle(
        seed in any::<u64>(),
        flights in 20usize..150,
        case1 in 0.0f64..0.2,
        case3 in 0.0f64..0.2,
        case4 in 0.0f64..0.2,
    ) {
        let from = NaiveDate::from_ymd_opt(2018, 3, 13).unwrap();
        let to = from + Duration::days(1);
        let spec = ScenarioSpec {
            seed,
            from,
            to,
            flights_per_day: flights,
            anomaly_rates: AnomalyRates { case1, case2: 0.0, case3, case4 },
            ..ScenarioSpec::default()
        };
        let scenario = generate_scenario(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let store = RawStore::open(dir.path()).unwrap();
        for d in scenario.message_days() {
            store.ingest_day(scenario.lines_for_day(d), d).unwrap();
        }
        let pi = PiStore::open(dir.path());
        for d in day_range(from, to) {
            run_preparation(dir.path(), d, &PrepConfig::default()).unwrap();
            let got: BTreeMap<String, Vec<u32>> =
                pi.read_dms_b(d).unwrap().into_iter().map(|(k, v)| (k, v.counts())).collect();
            let want: BTreeMap<String, Vec<u32>> =
                oracle_sector_counts(&scenario.truth, d).into_iter().map(|(k, v)| (k, v.counts())).collect();
            prop_assert_eq!(&got, &want);
            let total: u64 = got.values().flatten().map(|c| *c as u64).sum();
            prop_assert_eq!(total, airborne_minutes_on(&scenario.truth, d));
        }
    }
}
