//! Sensor-pair weighting matrices.
//!
//! "Mutual information" here is the empirical probability that sensor `i`
//! fires immediately before sensor `j`: `MI(i, j) = #{t : s_t = i, s_t+1 = j} / n`.
//! Variants restrict which events feed the count: a day segment, a
//! non-Other activity run, or co-membership in a window.

use serde::{Deserialize, Serialize};

use crate::error::{HarError, Result};
use crate::events::{SensorEvent, SensorRegistry, Timestamp};
use crate::partition::{DayPartition, DaySegment};
use crate::windowing::{label_runs, LabeledWindow};

/// Dense `m × m` row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MiMatrix {
    m: usize,
    values: Vec<f64>,
    source_event_count: usize,
}

impl MiMatrix {
    pub fn zeros(m: usize) -> Self {
        MiMatrix {
            m,
            values: vec![0.0; m * m],
            source_event_count: 0,
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, source_event_count: usize) -> Result<Self> {
        let m = rows.len();
        let mut values = Vec::with_capacity(m * m);
        for row in rows {
            if row.len() != m {
                return Err(HarError::DimensionMismatch {
                    expected: m,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(HarError::InvalidInput("matrix entries must be finite and non-negative".into()));
            }
            values.extend(row);
        }
        Ok(MiMatrix {
            m,
            values,
            source_event_count,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn source_event_count(&self) -> usize {
        self.source_event_count
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.m + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.m..(i + 1) * self.m]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.m).map(|i| self.get(i, j)).collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.m.max(1)).take(self.m).map(<[f64]>::to_vec).collect()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.m).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn to_json(&self, registry: &SensorRegistry) -> Result<String> {
        if registry.len() != self.m {
            return Err(HarError::DimensionMismatch {
                expected: self.m,
                got: registry.len(),
            });
        }
        let doc = MatrixDoc {
            m: self.m,
            labels: registry.names().to_vec(),
            rows: self.rows(),
            source_event_count: self.source_event_count,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Parses `{m, labels, rows}`; returns the matrix and the sensor labels.
    pub fn from_json(text: &str) -> Result<(Self, Vec<String>)> {
        let doc: MatrixDoc = serde_json::from_str(text)?;
        if doc.labels.len() != doc.m {
            return Err(HarError::DimensionMismatch {
                expected: doc.m,
                got: doc.labels.len(),
            });
        }
        if doc.rows.len() != doc.m {
            return Err(HarError::DimensionMismatch {
                expected: doc.m,
                got: doc.rows.len(),
            });
        }
        Ok((Self::from_rows(doc.rows, doc.source_event_count)?, doc.labels))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixDoc {
    m: usize,
    labels: Vec<String>,
    rows: Vec<Vec<f64>>,
    #[serde(default)]
    source_event_count: usize,
}

fn check_sensor(e: &SensorEvent, m: usize) -> Result<usize> {
    let i = e.sensor.index();
    if i >= m {
        return Err(HarError::SensorOutOfRange { index: i, m });
    }
    Ok(i)
}

/// Counts consecutive pairs inside each group of `groups` and divides by the
/// total number of events across the groups.
fn pair_matrix<'a, G, I>(groups: G, m: usize) -> Result<MiMatrix>
where
    G: IntoIterator<Item = I>,
    I: IntoIterator<Item = &'a SensorEvent>,
{
    let mut counts = vec![0u64; m * m];
    let mut n = 0usize;
    for group in groups {
        let mut prev: Option<usize> = None;
        for e in group {
            let cur = check_sensor(e, m)?;
            if let Some(p) = prev {
                counts[p * m + cur] += 1;
            }
            prev = Some(cur);
            n += 1;
        }
    }
    let values = if n == 0 {
        vec![0.0; m * m]
    } else {
        counts.into_iter().map(|c| c as f64 / n as f64).collect()
    };
    Ok(MiMatrix {
        m,
        values,
        source_event_count: n,
    })
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        return Err(HarError::InvalidInput("sensor count must be at least 1".into()));
    }
    Ok(())
}

/// Consecutive-firing matrix over the whole sequence.
pub fn mi_global(events: &[SensorEvent], m: usize) -> Result<MiMatrix> {
    check_m(m)?;
    pair_matrix(std::iter::once(events), m)
}

/// How pairs are formed inside a day segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentPairing {
    /// Concatenate the segment's events in order and count consecutive pairs
    /// of that subsequence.
    #[default]
    Subsequence,
    /// Count only pairs adjacent in the original stream whose events both
    /// belong to the segment.
    AdjacentOnly,
}

/// One matrix per day segment.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalMi {
    pub morning: MiMatrix,
    pub afternoon: MiMatrix,
    pub night: MiMatrix,
    pub partition: DayPartition,
}

impl TemporalMi {
    pub fn matrix(&self, segment: DaySegment) -> &MiMatrix {
        match segment {
            DaySegment::Morning => &self.morning,
            DaySegment::Afternoon => &self.afternoon,
            DaySegment::Night => &self.night,
        }
    }

    pub fn for_timestamp(&self, ts: &Timestamp) -> &MiMatrix {
        self.matrix(self.partition.segment_of_timestamp(ts))
    }
}

/// Events go to the segment of their own timestamp; each segment matrix is
/// normalized by that segment's event count.
pub fn mi_temporal(events: &[SensorEvent], m: usize, partition: DayPartition, pairing: SegmentPairing) -> Result<TemporalMi> {
    check_m(m)?;
    let segments: Vec<DaySegment> = events.iter().map(|e| partition.segment_of_timestamp(&e.timestamp)).collect();
    let build = |seg: DaySegment| -> Result<MiMatrix> {
        match pairing {
            SegmentPairing::Subsequence => pair_matrix(
                std::iter::once(events.iter().zip(&segments).filter(|(_, s)| **s == seg).map(|(e, _)| e)),
                m,
            ),
            SegmentPairing::AdjacentOnly => {
                // maximal runs of consecutive same-segment events
                let mut runs = Vec::new();
                let mut start = None;
                for (i, s) in segments.iter().enumerate() {
                    match (start, *s == seg) {
                        (None, true) => start = Some(i),
                        (Some(b), false) => {
                            runs.push(&events[b..i]);
                            start = None;
                        }
                        _ => {}
                    }
                }
                if let Some(b) = start {
                    runs.push(&events[b..]);
                }
                pair_matrix(runs, m)
            }
        }
    };
    Ok(TemporalMi {
        morning: build(DaySegment::Morning)?,
        afternoon: build(DaySegment::Afternoon)?,
        night: build(DaySegment::Night)?,
        partition,
    })
}

/// Fraction of windows containing both sensors (at least one event each).
pub fn mi_cooccurrence(windows: &[LabeledWindow<'_>], m: usize) -> Result<MiMatrix> {
    check_m(m)?;
    if windows.is_empty() {
        return Err(HarError::InvalidInput("co-occurrence matrix needs at least one window".into()));
    }
    let mut counts = vec![0u64; m * m];
    let mut present = Vec::with_capacity(m);
    let mut seen = vec![false; m];
    for w in windows {
        present.clear();
        for e in w.events() {
            let i = check_sensor(e, m)?;
            if !seen[i] {
                seen[i] = true;
                present.push(i);
            }
        }
        for &i in &present {
            for &j in &present {
                counts[i * m + j] += 1;
            }
        }
        for &i in &present {
            seen[i] = false;
        }
    }
    let w = windows.len() as f64;
    Ok(MiMatrix {
        m,
        values: counts.into_iter().map(|c| c as f64 / w).collect(),
        source_event_count: windows.len(),
    })
}

/// Consecutive pairs counted only within maximal non-Other label runs,
/// normalized by the number of events in those runs.
pub fn mi_activity(events: &[SensorEvent], m: usize) -> Result<MiMatrix> {
    check_m(m)?;
    let runs = label_runs(events).into_iter().filter(|r| !events[r.start].label.is_other()).map(|r| &events[r]);
    pair_matrix(runs, m)
}
