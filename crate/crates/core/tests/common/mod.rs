//! Random inputs and independent reference implementations for the
//! integration and acceptance tests.

#![allow(dead_code)]

use std::collections::HashMap;

use chrono::{Duration, NaiveDate};
use rand::Rng;

use har_core::partition::DescriptorPoint;
use har_core::synth::ActivitySpec;
use har_core::{ActivityLabel, DayPartition, RoutineSpec, SensorEvent, SensorId, SensorState, Timestamp};

pub fn t0() -> Timestamp {
    NaiveDate::from_ymd_opt(2023, 3, 1).unwrap().and_hms_opt(0, 0, 0).unwrap()
}

/// Increasing timestamps with microsecond resolution, random sensors,
/// states and labels.
pub fn random_events<R: Rng>(rng: &mut R, n: usize, m: usize) -> Vec<SensorEvent> {
    let mut ts = t0() + Duration::seconds(rng.gen_range(0..86_400));
    (0..n)
        .map(|_| {
            ts += Duration::microseconds(rng.gen_range(1..600_000_000));
            SensorEvent {
                timestamp: ts,
                sensor: SensorId(rng.gen_range(0..m)),
                state: if rng.gen_bool(0.5) { SensorState::On } else { SensorState::Off },
                label: ActivityLabel::ALL[rng.gen_range(0..ActivityLabel::COUNT)],
            }
        })
        .collect()
}

/// Consecutive-pair frequencies counted with a hash map.
pub fn mi_oracle(events: &[SensorEvent], m: usize) -> Vec<Vec<f64>> {
    let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
    for pair in events.windows(2) {
        *counts.entry((pair[0].sensor.0, pair[1].sensor.0)).or_default() += 1;
    }
    let n = events.len() as f64;
    (0..m)
        .map(|i| (0..m).map(|j| counts.get(&(i, j)).copied().unwrap_or(0) as f64 / n).collect())
        .collect()
}

/// Label of the majority among the `k` closest points after a full stable sort.
pub fn knn_oracle(train: &[Vec<f64>], labels: &[ActivityLabel], x: &[f64], k: usize) -> ActivityLabel {
    let mut order: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, p)| (p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(), i))
        .collect();
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let top = &order[..k];
    let mut best: Option<(usize, f64, usize)> = None;
    for label in ActivityLabel::ALL {
        let hits: Vec<f64> = top.iter().filter(|(_, i)| labels[*i] == label).map(|(d, _)| *d).collect();
        if hits.is_empty() {
            continue;
        }
        let candidate = (hits.len(), hits[0], label.index());
        best = match best {
            None => Some(candidate),
            Some(b) if candidate.0 > b.0 || (candidate.0 == b.0 && candidate.1 < b.1) => Some(candidate),
            keep => keep,
        };
    }
    ActivityLabel::ALL[best.unwrap().2]
}

/// Within-group spread computed from pairwise distances,
/// `(1 / 2n²) Σ_i Σ_j |x_i − x_j|²`, then averaged over non-empty groups.
pub fn cohesion_pairwise(p: &DayPartition, points: &[DescriptorPoint]) -> f64 {
    let mut groups: Vec<Vec<&[f64]>> = vec![Vec::new(); 3];
    for pt in points {
        let h = pt.hour;
        let g = if h >= p.mu && h < p.alpha {
            0
        } else if h >= p.alpha && h < p.nu {
            1
        } else {
            2
        };
        groups[g].push(&pt.coords);
    }
    let spreads: Vec<f64> = groups
        .iter()
        .filter(|g| !g.is_empty())
        .map(|g| {
            let n = g.len() as f64;
            let mut s = 0.0;
            for a in g {
                for b in g {
                    s += a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
                }
            }
            s / (2.0 * n * n)
        })
        .collect();
    if spreads.is_empty() {
        0.0
    } else {
        spreads.iter().sum::<f64>() / spreads.len() as f64
    }
}

/// Every `mu < alpha < nu` over integer hours, by three nested loops.
pub fn integer_triples() -> Vec<DayPartition> {
    let mut out = Vec::new();
    for mu in 0..24 {
        for alpha in mu + 1..24 {
            for nu in alpha + 1..24 {
                out.push(DayPartition::new(mu as f64, alpha as f64, nu as f64).unwrap());
            }
        }
    }
    out
}

pub fn random_points<R: Rng>(rng: &mut R, n: usize, dim: usize) -> Vec<DescriptorPoint> {
    (0..n)
        .map(|_| DescriptorPoint {
            hour: rng.gen_range(0.0..24.0),
            coords: (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect(),
        })
        .collect()
}

/// Accuracy and support-weighted F1 from label strings.
pub fn metrics_oracle(pairs: &[(String, String)]) -> (f64, f64) {
    let n = pairs.len() as f64;
    let correct = pairs.iter().filter(|(t, p)| t == p).count() as f64;
    let mut classes: Vec<&String> = pairs.iter().map(|(t, _)| t).collect();
    classes.sort();
    classes.dedup();
    let mut weighted = 0.0;
    for c in classes {
        let tp = pairs.iter().filter(|(t, p)| t == c && p == c).count() as f64;
        let support = pairs.iter().filter(|(t, _)| t == c).count() as f64;
        let predicted = pairs.iter().filter(|(_, p)| p == c).count() as f64;
        let precision = if predicted > 0.0 { tp / predicted } else { 0.0 };
        let recall = tp / support;
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        weighted += support * f1;
    }
    (correct / n, weighted / n)
}

fn activity(label: &str, hour: f64, sensors: &[&str]) -> ActivitySpec {
    ActivitySpec {
        label: label.into(),
        start_hour: [hour, hour + 0.25],
        duration_minutes: [30.0, 45.0],
        sensors: sensors.iter().map(|s| s.to_string()).collect(),
        events_per_hour: 30.0,
        probability: 1.0,
    }
}

/// Three activities on one shared sensor at 08:00, 14:00 and 20:00; nothing
/// but the time of day tells them apart.
pub fn hour_determined_spec(days: u32) -> RoutineSpec {
    RoutineSpec {
        seed: 11,
        days,
        start_date: NaiveDate::from_ymd_opt(2024, 2, 5).unwrap(),
        sensors: vec!["M1".into()],
        activities: vec![
            activity("Cook", 8.0, &["M1"]),
            activity("Work", 14.0, &["M1"]),
            activity("Relax", 20.0, &["M1"]),
        ],
        jitter_minutes: 5.0,
        other_fraction: 0.0,
    }
}

/// Three activities at 08:00, 14:00 and 22:00 on separate sensors.
pub fn three_pinned_spec(days: u32) -> RoutineSpec {
    RoutineSpec {
        seed: 5,
        days,
        start_date: NaiveDate::from_ymd_opt(2024, 2, 5).unwrap(),
        sensors: vec!["K".into(), "D".into(), "B".into()],
        activities: vec![
            activity("Cook", 8.0, &["K"]),
            activity("Work", 14.0, &["D"]),
            activity("Sleep", 22.0, &["B"]),
        ],
        jitter_minutes: 10.0,
        other_fraction: 0.1,
    }
}
