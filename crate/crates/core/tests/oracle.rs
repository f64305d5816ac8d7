mod common;

use chrono::NaiveDate;
use common::{as_days, brute_force, random_history, rng};
use loadshape::domain::{DistanceKind, DistanceSpec, TemperatureSegment};
use loadshape::ingestion::{annotate_calendar, Holidays};
use loadshape::predictor::{
    compute_weights, predict_day, predict_shape, KernelKind, KernelSpec, PredictorConfig,
};
use loadshape::SspError;
use proptest::prelude::*;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

const DIVISOR_POINTS: [usize; 12] = [4, 6, 8, 12, 16, 24, 32, 36, 48, 60, 72, 96];

#[test]
fn pipeline_matches_brute_force() {
    let mut r = rng(99);
    let start = NaiveDate::from_ymd_opt(2010, 2, 1).unwrap();
    for _ in 0..60 {
        let days = r.random_range(5..=30);
        let points = *DIVISOR_POINTS.choose(&mut r).unwrap();
        let history = random_history(&mut r, days + 1, points, start);
        let target = history.records()[days].date();
        let prior = history.prefix(days);

        let mut mask: Vec<usize> = (0..points).filter(|_| r.random_bool(0.3)).collect();
        if mask.is_empty() {
            mask.push(r.random_range(0..points));
        }
        let fvals: Vec<f64> = (0..points).map(|_| r.random_range(-5.0..35.0)).collect();
        let forecast = TemperatureSegment::new(
            prior.records()[0].load.grid().clone(),
            fvals.clone(),
            mask.clone(),
        )
        .unwrap();
        let n_l = r.random_range(7..=days.max(7));
        let h = r.random_range(0.1..1.0) * (points as f64).sqrt();
        let cfg = PredictorConfig {
            reference: loadshape::reference::ReferenceConfig::default().with_uniform_window(n_l),
            ..PredictorConfig::default()
        }
        .with_bandwidth(h);

        let meta = annotate_calendar(target, &Holidays::new());
        let got = predict_day(&prior, &meta, &forecast, None, &cfg);
        let Some(want) = brute_force(&as_days(&prior), target, &fvals, &mask, n_l, h) else {
            assert!(matches!(got, Err(SspError::NoCandidates { .. })));
            continue;
        };
        let got = got.unwrap();
        for (g, w) in got.shape.values().iter().zip(&want) {
            assert!((g - w).abs() <= 1e-12, "{g} vs {w}");
        }
    }
}

#[test]
fn next_day_max_scales_the_shape() {
    let mut r = rng(5);
    let start = NaiveDate::from_ymd_opt(2011, 6, 6).unwrap();
    let history = random_history(&mut r, 20, 96, start);
    let grid = history.records()[0].load.grid().clone();
    let forecast = TemperatureSegment::new(grid, vec![20.0; 96], vec![32, 48, 64, 80]).unwrap();
    let target = annotate_calendar(start + chrono::Duration::days(20), &Holidays::new());
    let p = predict_day(
        &history,
        &target,
        &forecast,
        Some(600.0),
        &PredictorConfig::default(),
    )
    .unwrap();
    let scaled = p.scaled.unwrap();
    for (s, v) in scaled.values().iter().zip(p.shape.values()) {
        assert_eq!(*s, v * 600.0);
    }
}

fn rows_strategy() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (1usize..12, 2usize..10).prop_flat_map(|(l, p)| {
        (
            prop::collection::vec(prop::collection::vec(0.01f64..1.0, p), l),
            prop::collection::vec(0.01f64..1.0, p),
        )
    })
}

proptest! {
    #[test]
    fn permutation_equivariance((rows, reference) in rows_strategy(), h in 0.05f64..2.0, seed in any::<u64>()) {
        let k = KernelSpec::gaussian(h).unwrap();
        let d = DistanceSpec::default();
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let w = compute_weights(&refs, &reference, &k, &d).unwrap();
        let pred = predict_shape(&refs, &w).unwrap();

        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.shuffle(&mut rng(seed));
        let permuted: Vec<&[f64]> = order.iter().map(|&i| rows[i].as_slice()).collect();
        let wp = compute_weights(&permuted, &reference, &k, &d).unwrap();
        let pred_p = predict_shape(&permuted, &wp).unwrap();
        for (j, &i) in order.iter().enumerate() {
            prop_assert!((wp.as_slice()[j] - w.as_slice()[i]).abs() <= 1e-14);
        }
        for (a, b) in pred.iter().zip(&pred_p) {
            prop_assert!((a - b).abs() <= 1e-14);
        }
    }

    #[test]
    fn scale_equivariance((rows, reference) in rows_strategy(), h in 0.05f64..2.0, c in 0.1f64..10.0) {
        let d = DistanceSpec::new(DistanceKind::Euclidean);
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let w = compute_weights(&refs, &reference, &KernelSpec::gaussian(h).unwrap(), &d).unwrap();
        let pred = predict_shape(&refs, &w).unwrap();

        let scaled: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| v * c).collect()).collect();
        let sref: Vec<&[f64]> = scaled.iter().map(Vec::as_slice).collect();
        let reference_c: Vec<f64> = reference.iter().map(|v| v * c).collect();
        let wc = compute_weights(&sref, &reference_c, &KernelSpec::gaussian(h * c).unwrap(), &d).unwrap();
        let pred_c = predict_shape(&sref, &wc).unwrap();
        for (a, b) in w.as_slice().iter().zip(wc.as_slice()) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
        for (a, b) in pred.iter().zip(&pred_c) {
            prop_assert!((a * c - b).abs() <= 1e-9 * c);
        }
    }

    #[test]
    fn narrow_bandwidth_picks_unique_nearest((rows, reference) in rows_strategy()) {
        let d = DistanceSpec::default();
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let dist: Vec<f64> = refs.iter().map(|r| loadshape::domain::distance(r, &reference, &d).unwrap()).collect();
        let min = dist.iter().cloned().fold(f64::INFINITY, f64::min);
        let second = dist.iter().cloned().filter(|&x| x > min).fold(f64::INFINITY, f64::min);
        prop_assume!(dist.iter().filter(|&&x| x == min).count() == 1 && second - min > 1e-3);
        let w = compute_weights(&refs, &reference, &KernelSpec::new(KernelKind::Gaussian, 1e-5).unwrap(), &d).unwrap();
        let i = dist.iter().position(|&x| x == min).unwrap();
        prop_assert_eq!(w.as_slice()[i], 1.0);
    }
}
