mod common;

use har_core::evaluation::{fit_base_models, prepare_split};
use har_core::partition::{activity_descriptors, cohesion, descriptor_points, optimize_partition};
use har_core::report::report_json;
use har_core::{
    generate, grid_search, run_experiment, temporal_split, ActivityLabel, BaseMethod, DaySegment, FeatureConfig, Grids,
    PipelineOptions, Scaling, SelectionMetric, SplitRatios,
};

fn grids(k: &[usize], window: &[usize]) -> Grids {
    Grids {
        k: k.to_vec(),
        window: window.to_vec(),
    }
}

#[test]
fn single_configuration_grid() {
    let stream = generate(&common::three_pinned_spec(6)).unwrap();
    let (tr, va, _) = temporal_split(&stream, SplitRatios::default()).unwrap();
    let cfg = FeatureConfig::new(BaseMethod::Swmi);
    let g = grid_search(&tr, &va, &grids(&[1], &[5]), &cfg, SelectionMetric::Accuracy, &PipelineOptions::default()).unwrap();
    assert_eq!(g.entries.len(), 1);
    assert_eq!((g.chosen_window, g.chosen_k), (Some(5), 1));
}

#[test]
fn hour_determined_stream_is_separable_with_cyclic_features() {
    let stream = generate(&common::hour_determined_spec(28)).unwrap();
    assert_eq!(stream.sensor_count(), 1);
    let (tr, va, _) = temporal_split(&stream, SplitRatios::default()).unwrap();
    let cfg = FeatureConfig::new(BaseMethod::Sw).with_cyclic(true);
    let opts = PipelineOptions::default();
    let g = grid_search(&tr, &va, &grids(&[1, 3], &[5, 10]), &cfg, SelectionMetric::Accuracy, &opts).unwrap();
    assert_eq!(g.chosen_score, 1.0);
    // every configuration reaches 1.0, so the tie-break picks the smallest pair
    assert!(g.entries.iter().all(|e| e.accuracy == Some(1.0)), "{:?}", g.entries);
    assert_eq!((g.chosen_window, g.chosen_k), (Some(5), 1));

    // exhaustive check: each validation trigger's nearest training trigger by
    // time of day carries the same label
    let hour = |t: &har_core::Timestamp| har_core::partition::fractional_hour(t);
    for v in &va.events {
        let nearest = tr
            .events
            .iter()
            .min_by(|a, b| {
                let da = (hour(&a.timestamp) - hour(&v.timestamp)).abs();
                let db = (hour(&b.timestamp) - hour(&v.timestamp)).abs();
                da.total_cmp(&db)
            })
            .unwrap();
        assert_eq!(nearest.label, v.label);
    }
}

#[test]
fn cyclic_beats_plain_counts_when_time_decides() {
    let stream = generate(&common::hour_determined_spec(28)).unwrap();
    let opts = PipelineOptions::default();
    let g = grids(&[1, 3, 5], &[5, 10]);
    let run = |cfg: FeatureConfig| {
        run_experiment(&stream, &cfg, &g, SplitRatios::default(), SelectionMetric::Accuracy, &opts).unwrap()
    };
    let plain = run(FeatureConfig::new(BaseMethod::Sw));
    let cyclic = run(FeatureConfig::new(BaseMethod::Sw).with_cyclic(true));
    assert!(
        cyclic.report.with_other.accuracy > plain.report.with_other.accuracy,
        "{} vs {}",
        cyclic.report.with_other.accuracy,
        plain.report.with_other.accuracy
    );
}

#[test]
fn weighted_f1_selection_and_failed_entries() {
    let stream = generate(&common::three_pinned_spec(6)).unwrap();
    let (tr, va, _) = temporal_split(&stream, SplitRatios::default()).unwrap();
    let cfg = FeatureConfig::new(BaseMethod::Sw);
    let huge = tr.len() + 1;
    let g = grid_search(&tr, &va, &grids(&[1, huge], &[5]), &cfg, SelectionMetric::WeightedF1, &PipelineOptions::default())
        .unwrap();
    assert_eq!(g.entries.len(), 2);
    assert!(g.entries[1].error.is_some());
    assert_eq!(g.chosen_k, 1);
    assert_eq!(Some(g.chosen_score), g.entries[0].weighted_f1);

    let err = grid_search(&tr, &va, &grids(&[huge], &[5]), &cfg, SelectionMetric::Accuracy, &PipelineOptions::default());
    assert!(err.is_err());
}

#[test]
fn evaluation_labels_never_reach_models_or_features() {
    let stream = generate(&common::three_pinned_spec(10)).unwrap();
    let n = stream.len();
    let a = n * 7 / 10;
    let m = stream.sensor_count();
    let opts = PipelineOptions::default();
    let mut scrambled = stream.events.clone();
    for e in &mut scrambled[a..] {
        e.label = ActivityLabel::ALL[(e.label.index() + 5) % ActivityLabel::COUNT];
    }
    for base in BaseMethod::ALL {
        let mut cfg = FeatureConfig::new(base).with_cyclic(true).with_location(true);
        cfg.scaling = Scaling::MinMax;
        let window = (base != BaseMethod::Dw).then_some(10);
        let fit = |events: &[har_core::SensorEvent]| {
            let models = fit_base_models(&events[..a], m, &cfg, &opts).unwrap();
            let split = prepare_split(events, m, 0..a, a..n, &cfg, window, &models, &opts).unwrap();
            (models, split)
        };
        let (m1, s1) = fit(&stream.events);
        let (m2, s2) = fit(&scrambled);
        assert_eq!(m1, m2, "{base}");
        assert_eq!(s1.models, s2.models, "{base}");
        assert_eq!(s1.train_x, s2.train_x, "{base}");
        assert_eq!(s1.eval_x, s2.eval_x, "{base}");
        assert_ne!(s1.eval_y, s2.eval_y);
    }
}

#[test]
fn every_method_runs_and_repeats_exactly() {
    let stream = generate(&common::three_pinned_spec(12)).unwrap();
    let g = grids(&[1, 5], &[5, 15]);
    let opts = PipelineOptions::default();
    for base in BaseMethod::ALL {
        let cfg = FeatureConfig::new(base).with_cyclic(true).with_location(true);
        let run = || run_experiment(&stream, &cfg, &g, SplitRatios::default(), SelectionMetric::Accuracy, &opts).unwrap();
        let (x, y) = (run(), run());
        assert_eq!(report_json("d", &x.report).unwrap(), report_json("d", &y.report).unwrap(), "{base}");
        assert_eq!(x.predictions, y.predictions);
        assert!(x.report.with_other.accuracy > 0.5, "{base}: {}", x.report.with_other.accuracy);
        assert_eq!(x.predictions.len(), x.report.split.test);
        if base == BaseMethod::Dw {
            assert_eq!(x.report.chosen_window, None);
            assert_eq!(x.report.grid.entries.len(), 2);
        }
    }
}

#[test]
fn generated_descriptors_separate_pinned_hours() {
    let stream = generate(&common::three_pinned_spec(20)).unwrap();
    let opts = PipelineOptions::default();
    let descriptors = activity_descriptors(&stream.events, false);
    let points = descriptor_points(&descriptors, opts.descriptors);
    let p = optimize_partition(&points, &opts.partition_grid).unwrap();

    let oracle = common::integer_triples()
        .into_iter()
        .map(|q| cohesion(&q, &points))
        .fold(f64::INFINITY, f64::min);
    assert_eq!(cohesion(&p, &points), oracle);

    let segment = |label: ActivityLabel| {
        let segs: Vec<DaySegment> = descriptors
            .iter()
            .filter(|d| d.activity == label)
            .map(|d| p.segment_of(d.start_hour))
            .collect();
        assert!(segs.windows(2).all(|w| w[0] == w[1]), "{label} split across segments by {p:?}");
        segs[0]
    };
    let (cook, work, sleep) = (segment(ActivityLabel::Cook), segment(ActivityLabel::Work), segment(ActivityLabel::Sleep));
    assert!(cook != work && work != sleep && cook != sleep, "{p:?}");
}
