//! Learning the morning / afternoon / night split of the day.
//!
//! Each activity instance (a maximal run of same-label events) becomes a
//! descriptor: one-hot activity class, start hour and event count. A partition
//! `(mu, alpha, nu)` groups descriptors by start hour, and the partition that
//! minimizes the mean within-group squared distance to the group centroid is
//! selected by exhaustive search over a grid of candidate hours.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HarError, Result};
use crate::events::{SensorEvent, Timestamp};
use crate::label::ActivityLabel;
use crate::windowing::label_runs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DaySegment {
    Morning,
    Afternoon,
    Night,
}

impl DaySegment {
    pub const ALL: [DaySegment; 3] = [DaySegment::Morning, DaySegment::Afternoon, DaySegment::Night];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Thresholds in hours with `0 <= mu < alpha < nu < 24`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DayPartition {
    pub mu: f64,
    pub alpha: f64,
    pub nu: f64,
}

impl DayPartition {
    pub fn new(mu: f64, alpha: f64, nu: f64) -> Result<Self> {
        if !(0.0 <= mu && mu < alpha && alpha < nu && nu < 24.0) {
            return Err(HarError::InvalidInput(format!(
                "day partition needs 0 <= mu < alpha < nu < 24, got ({mu}, {alpha}, {nu})"
            )));
        }
        Ok(DayPartition { mu, alpha, nu })
    }

    /// Morning is `[mu, alpha)`, afternoon `[alpha, nu)`, night wraps around
    /// midnight: `[nu, 24) ∪ [0, mu)`.
    pub fn segment_of(&self, hour: f64) -> DaySegment {
        if hour >= self.mu && hour < self.alpha {
            DaySegment::Morning
        } else if hour >= self.alpha && hour < self.nu {
            DaySegment::Afternoon
        } else {
            DaySegment::Night
        }
    }

    pub fn segment_of_timestamp(&self, ts: &Timestamp) -> DaySegment {
        self.segment_of(fractional_hour(ts))
    }
}

pub fn segment_of(hour: f64, p: &DayPartition) -> DaySegment {
    p.segment_of(hour)
}

/// Hour of day including minutes, seconds and sub-second part, in `[0, 24)`.
pub fn fractional_hour(ts: &Timestamp) -> f64 {
    use chrono::Timelike;
    let secs = f64::from(ts.num_seconds_from_midnight()) + f64::from(ts.nanosecond().min(999_999_999)) * 1e-9;
    secs / 3600.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivityDescriptor {
    pub activity: ActivityLabel,
    pub start_hour: f64,
    pub event_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptorOptions {
    /// Whether Other-labeled runs produce descriptors.
    pub include_other: bool,
    /// Z-score the start hour and event count before computing distances.
    pub standardize: bool,
}

impl Default for DescriptorOptions {
    fn default() -> Self {
        DescriptorOptions {
            include_other: false,
            standardize: true,
        }
    }
}

/// One descriptor per maximal same-label run, in stream order.
pub fn activity_descriptors(events: &[SensorEvent], include_other: bool) -> Vec<ActivityDescriptor> {
    label_runs(events)
        .into_iter()
        .filter(|r| include_other || !events[r.start].label.is_other())
        .map(|r| ActivityDescriptor {
            activity: events[r.start].label,
            start_hour: fractional_hour(&events[r.start].timestamp),
            event_count: r.len(),
        })
        .collect()
}

/// A descriptor laid out for distance computation: its start hour (used for
/// grouping) and its coordinate vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorPoint {
    pub hour: f64,
    pub coords: Vec<f64>,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    (mean, if std > 0.0 { std } else { 1.0 })
}

/// Builds coordinate vectors `[one-hot class | hour | count]`. The one-hot block
/// has 12 entries, or 13 when Other is included.
pub fn descriptor_points(descriptors: &[ActivityDescriptor], opts: DescriptorOptions) -> Vec<DescriptorPoint> {
    if descriptors.is_empty() {
        return Vec::new();
    }
    let classes = if opts.include_other {
        ActivityLabel::COUNT
    } else {
        ActivityLabel::COUNT - 1
    };
    let (h_mean, h_std, c_mean, c_std) = if opts.standardize {
        let (hm, hs) = mean_std(descriptors.iter().map(|d| d.start_hour));
        let (cm, cs) = mean_std(descriptors.iter().map(|d| d.event_count as f64));
        (hm, hs, cm, cs)
    } else {
        (0.0, 1.0, 0.0, 1.0)
    };
    descriptors
        .iter()
        .map(|d| {
            let mut coords = vec![0.0; classes + 2];
            // Other is the last class, so it falls outside the block when excluded
            if d.activity.index() < classes {
                coords[d.activity.index()] = 1.0;
            }
            coords[classes] = (d.start_hour - h_mean) / h_std;
            coords[classes + 1] = (d.event_count as f64 - c_mean) / c_std;
            DescriptorPoint {
                hour: d.start_hour,
                coords,
            }
        })
        .collect()
}

/// Mean over non-empty day segments of the average squared Euclidean distance
/// to the segment centroid. Empty segments are left out of the mean.
pub fn cohesion(p: &DayPartition, points: &[DescriptorPoint]) -> f64 {
    let mut groups: [Vec<&DescriptorPoint>; 3] = Default::default();
    for pt in points {
        groups[p.segment_of(pt.hour).index()].push(pt);
    }
    let mut total = 0.0;
    let mut non_empty = 0usize;
    for group in &groups {
        if group.is_empty() {
            continue;
        }
        let dim = group[0].coords.len();
        let n = group.len() as f64;
        let mut centroid = vec![0.0; dim];
        for pt in group {
            for (c, x) in centroid.iter_mut().zip(&pt.coords) {
                *c += x;
            }
        }
        for c in &mut centroid {
            *c /= n;
        }
        let mut spread = 0.0;
        for pt in group {
            let mut d2 = 0.0;
            for (x, c) in pt.coords.iter().zip(&centroid) {
                d2 += (x - c) * (x - c);
            }
            spread += d2;
        }
        total += spread / n;
        non_empty += 1;
    }
    if non_empty == 0 {
        0.0
    } else {
        total / non_empty as f64
    }
}

/// Integer hours `0..=23`.
pub fn default_hour_grid() -> Vec<f64> {
    (0..24).map(f64::from).collect()
}

/// Candidate `(mu, alpha, nu)` triples in lexicographic order.
pub fn candidate_triples(grid: &[f64]) -> Result<Vec<DayPartition>> {
    let mut hours: Vec<f64> = grid.to_vec();
    if hours.iter().any(|h| !(0.0..24.0).contains(h)) {
        return Err(HarError::InvalidInput(format!("threshold grid values must lie in [0, 24), got {grid:?}")));
    }
    hours.sort_by(f64::total_cmp);
    hours.dedup();
    if hours.len() < 3 {
        return Err(HarError::InvalidInput("threshold grid needs at least 3 distinct hours".into()));
    }
    let mut out = Vec::new();
    for (i, &mu) in hours.iter().enumerate() {
        for (j, &alpha) in hours.iter().enumerate().skip(i + 1) {
            for &nu in &hours[j + 1..] {
                out.push(DayPartition { mu, alpha, nu });
            }
        }
    }
    Ok(out)
}

/// Exhaustive argmin of [`cohesion`] over grid triples; ties go to the
/// lexicographically smallest triple.
pub fn optimize_partition(points: &[DescriptorPoint], grid: &[f64]) -> Result<DayPartition> {
    if points.is_empty() {
        return Err(HarError::InvalidInput("no activity descriptors to cluster".into()));
    }
    let triples = candidate_triples(grid)?;
    let scores: Vec<f64> = triples.par_iter().map(|p| cohesion(p, points)).collect();
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s < scores[best] {
            best = i;
        }
    }
    Ok(triples[best])
}

/// Descriptors, layout and search in one step.
pub fn learn_partition(events: &[SensorEvent], opts: DescriptorOptions, grid: &[f64]) -> Result<DayPartition> {
    let descriptors = activity_descriptors(events, opts.include_other);
    optimize_partition(&descriptor_points(&descriptors, opts), grid)
}
