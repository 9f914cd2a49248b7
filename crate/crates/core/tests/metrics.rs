mod common;

use common::tables;
use gitract_core::metrics::{self, render_report, ConfusionMatrix, ReferenceAccuracy};
use proptest::prelude::*;

#[test]
fn published_matrix_recomputes() {
    let cm = tables::published_confusion();
    assert_eq!(cm.trace(), 1531);
    assert_eq!(cm.total(), 1595);
    let row = metrics::micro_metrics(&cm).unwrap();
    assert!((row.rec - 0.9599).abs() < 1e-4);
    assert!((row.spec - 0.99733).abs() < 1e-5);
    assert!((metrics::macro_specificity(&cm) - 0.9973).abs() < 5e-4);
    assert!((row.mcc - tables::brute_force_rk(&cm)).abs() < 1e-9);
}

#[test]
fn published_rows_follow_from_recall() {
    for (rec, acc, spec) in tables::PUBLISHED_ROWS {
        let trace = (rec * 10_000.0_f64).round() as u64;
        let mut counts = vec![vec![0u64; 16]; 16];
        counts[0][0] = trace;
        counts[1][2] = 10_000 - trace;
        let row = metrics::micro_metrics(&ConfusionMatrix::from_counts(counts).unwrap()).unwrap();
        assert!((row.acc_perclass - acc).abs() <= 5e-4, "{rec}: {}", row.acc_perclass);
        assert!((row.spec - spec).abs() <= 5e-4, "{rec}: {}", row.spec);
    }
}

#[test]
fn report_flags_the_reference_gap() {
    let cm = tables::published_confusion();
    let dir = tempfile::tempdir().unwrap();
    let row = metrics::micro_metrics(&cm).unwrap().named("Method 5");
    let reference = ReferenceAccuracy {
        label: "published".into(),
        accuracy: tables::PUBLISHED_ACCURACY,
    };
    let report = render_report(vec![row], &cm, Some(reference), dir.path()).unwrap();
    assert!((report.reference_gap.unwrap() - (1531.0 / 1595.0 - 0.9580)).abs() < 1e-12);
    let md = std::fs::read_to_string(dir.path().join("report.md")).unwrap();
    assert!(md.contains("0.9599"));
    assert!(md.contains("by 0.0019"));
    let csv = std::fs::read(dir.path().join("confusion.csv")).unwrap();
    assert_eq!(ConfusionMatrix::read_csv(csv.as_slice()).unwrap(), cm);
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["trace"], 1531);
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn mcc_matches_brute_force(cells in proptest::collection::vec(0u64..20, 16)) {
        let counts: Vec<Vec<u64>> = cells.chunks(4).map(|r| r.to_vec()).collect();
        prop_assume!(cells.iter().sum::<u64>() > 0);
        let cm = ConfusionMatrix::from_counts(counts).unwrap();
        let brute = tables::brute_force_rk(&cm);
        let fast = metrics::mcc(&cm);
        if brute.is_finite() {
            prop_assert!((fast - brute).abs() < 1e-9, "{fast} vs {brute}");
        } else {
            prop_assert_eq!(fast, 0.0);
        }
        prop_assert!((-1.0..=1.0).contains(&fast));
    }

    #[test]
    fn derived_rates_stay_in_range(cells in proptest::collection::vec(0u64..50, 256)) {
        prop_assume!(cells.iter().sum::<u64>() > 0);
        let counts: Vec<Vec<u64>> = cells.chunks(16).map(|r| r.to_vec()).collect();
        let row = metrics::micro_metrics(&ConfusionMatrix::from_counts(counts).unwrap()).unwrap();
        for v in [row.rec, row.spec, row.acc_perclass] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(row.acc_perclass >= row.rec);
    }
}
