use compactknap_bench::config::ModelKind;
use compactknap_bench::emit::{
    emit_all, fractionality_rows, gap_curve_rows, gap_curve_svg, performance_profile_rows, tradeoff_rows, GapPairing,
};
use compactknap_bench::record::{attach_gaps, read_csv, write_csv};
use compactknap_bench::{RunRecord, RunStatus};
use proptest::prelude::*;

fn record(id: &str, kind: ModelKind, lambda: Option<f64>, bound: f64, frac: f64, time: f64) -> RunRecord {
    let mut model = kind.name().to_string();
    if let Some(l) = lambda {
        model = format!("{model}@{l:e}");
    }
    RunRecord {
        instance_id: id.into(),
        model,
        kind,
        lambda,
        misc_rounds: 0,
        status: RunStatus::Optimal,
        objective: Some(bound),
        bound: (!kind.is_penalized()).then_some(bound),
        gap_percent: None,
        imp: Some(0.5),
        comp: Some(0.1),
        frac: Some(frac),
        frac_initial: None,
        cuts_added: 0,
        cut_lp_value: None,
        cut_dp_value: None,
        cut_size: None,
        iterations: 1,
        wall_time_s: time,
        message: None,
    }
}

fn arb_records() -> impl Strategy<Value = Vec<RunRecord>> {
    prop::collection::vec((0usize..6, 0usize..4, 1.0f64..50.0, 0.0f64..=1.0, 0.001f64..10.0, any::<bool>()), 0..40).prop_map(|rows| {
        let kinds = [ModelKind::Lp, ModelKind::Mip, ModelKind::Sdp, ModelKind::SdpPlus];
        let mut seen = std::collections::HashSet::new();
        rows.into_iter()
            .filter(|(i, k, ..)| seen.insert((*i, *k)))
            .map(|(i, k, b, f, t, ok)| {
                let mut r = record(&format!("i{i}"), kinds[k], None, b, f, t);
                if !ok {
                    r.status = RunStatus::TimeLimit;
                }
                r
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn profiles_are_monotone_fractions(records in arb_records()) {
        let rows = performance_profile_rows(&records);
        for w in rows.windows(2) {
            if w[0].model == w[1].model {
                prop_assert!(w[0].tau < w[1].tau);
                prop_assert!(w[0].fraction <= w[1].fraction);
            }
        }
        prop_assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.fraction) && r.tau >= 1.0));
    }

    #[test]
    fn gap_rows_are_sorted_and_ranked(records in arb_records()) {
        let rows = gap_curve_rows(&records, &GapPairing::default());
        for (k, r) in rows.iter().enumerate() {
            prop_assert_eq!(r.instance_rank, k + 1);
        }
        let key = |g: Option<f64>| g.unwrap_or(f64::INFINITY);
        prop_assert!(rows.windows(2).all(|w| key(w[0].gap_lp) <= key(w[1].gap_lp)));
    }

    #[test]
    fn csv_round_trip(mut records in arb_records()) {
        attach_gaps(&mut records);
        let mut buf = Vec::new();
        write_csv(&mut buf, &records).unwrap();
        prop_assert_eq!(read_csv(buf.as_slice()).unwrap(), records);
    }
}

#[test]
fn single_record_table_is_that_record() {
    let r = record("a", ModelKind::SdpPlus, None, 3.0, 0.37, 1.0);
    let rows = fractionality_rows(std::slice::from_ref(&r));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].mean_frac, 0.37);
    assert_eq!(rows[0].runs, 1);
}

#[test]
fn single_instance_gap_curve() {
    let recs = vec![
        record("a", ModelKind::Mip, None, 10.0, 0.0, 1.0),
        record("a", ModelKind::Lp, None, 8.0, 0.3, 0.1),
        record("a", ModelKind::SdpPlus, None, 10.0, 0.0, 2.0),
    ];
    let rows = gap_curve_rows(&recs, &GapPairing::default());
    assert_eq!(rows.len(), 1);
    assert!((rows[0].gap_lp.unwrap() - 20.0).abs() < 1e-12);
    assert_eq!(rows[0].gap_sdp_plus, Some(0.0));
    assert_eq!(rows[0].gap_sdp, None);
    let tmp = tempfile::tempdir().unwrap();
    let out = emit_all(&recs, &[], tmp.path()).unwrap();
    let csv = std::fs::read_to_string(&out[0].csv).unwrap();
    assert_eq!(csv.lines().count(), 2);
    let svg = std::fs::read_to_string(out[0].svg.as_ref().unwrap()).unwrap();
    assert_eq!(svg, gap_curve_svg(&csv).unwrap());
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));
}

#[test]
fn missing_optimum_skips_instance() {
    let recs = vec![record("a", ModelKind::Lp, None, 8.0, 0.3, 0.1)];
    assert!(gap_curve_rows(&recs, &GapPairing::default()).is_empty());
}

#[test]
fn tradeoff_filters_lambdas() {
    let recs = vec![
        record("a", ModelKind::PenPlus, Some(1e-1), 1.0, 0.0, 1.0),
        record("a", ModelKind::PenPlus, Some(1e-6), 1.0, 0.0, 1.0),
        record("a", ModelKind::Mip, None, 1.0, 0.0, 1.0),
        record("a", ModelKind::Lp, None, 1.0, 0.0, 1.0),
    ];
    assert_eq!(tradeoff_rows(&recs, &[]).len(), 3);
    let one = tradeoff_rows(&recs, &[1e-1]);
    assert_eq!(one.iter().map(|r| r.model.as_str()).collect::<Vec<_>>(), ["pen+@1e-1", "mip"]);
}
