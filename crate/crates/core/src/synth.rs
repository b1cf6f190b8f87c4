//! Seeded generator of labeled daily routines in CASAS form.
//!
//! Randomness comes from a ChaCha8 stream (`rand_chacha::ChaCha8Rng`) seeded
//! with `RoutineSpec::seed`, so a spec always produces the same stream.

use std::path::Path;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HarError, Result};
use crate::events::{EventStream, SensorEvent, SensorId, SensorRegistry, SensorState};
use crate::label::{ActivityLabel, LabelMap};

fn default_probability() -> f64 {
    1.0
}

fn default_other_fraction() -> f64 {
    0.1
}

fn default_start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2024, 1, 1).expect("valid date")
}

/// One recurring activity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivitySpec {
    /// Canonical class name, e.g. `"Sleep"` or `"Bed_to_Toilet"`.
    pub label: String,
    /// Start is drawn uniformly from `[lo, hi]` hours.
    pub start_hour: [f64; 2],
    /// Duration drawn uniformly from `[lo, hi]` minutes.
    pub duration_minutes: [f64; 2],
    /// Sensors fired during the activity, chosen uniformly per firing.
    pub sensors: Vec<String>,
    /// Mean sensor firings per hour; each firing is an ON followed by an OFF.
    pub events_per_hour: f64,
    /// Chance that the activity happens on a given day.
    #[serde(default = "default_probability")]
    pub probability: f64,
}

/// JSON routine description.
///
/// ```json
/// {
///   "seed": 7, "days": 30, "start_date": "2024-01-01",
///   "sensors": ["Bed", "Kitchen"],
///   "jitter_minutes": 10, "other_fraction": 0.1,
///   "activities": [
///     {"label": "Sleep", "start_hour": [22.5, 23.0], "duration_minutes": [420, 480],
///      "sensors": ["Bed"], "events_per_hour": 4}
///   ]
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoutineSpec {
    pub seed: u64,
    pub days: u32,
    #[serde(default = "default_start_date")]
    pub start_date: NaiveDate,
    pub sensors: Vec<String>,
    pub activities: Vec<ActivitySpec>,
    /// Uniform start-time noise in `[-jitter, +jitter]` minutes.
    #[serde(default)]
    pub jitter_minutes: f64,
    /// Target share of Other-labeled noise events among all events.
    #[serde(default = "default_other_fraction")]
    pub other_fraction: f64,
}

struct Resolved {
    label: ActivityLabel,
    pool: Vec<SensorId>,
}

impl RoutineSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: RoutineSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| HarError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.resolve().map(|_| ())
    }

    fn resolve(&self) -> Result<(SensorRegistry, Vec<Resolved>)> {
        let bad = |msg: String| Err(HarError::InvalidInput(msg));
        if self.days == 0 {
            return bad("days must be at least 1".into());
        }
        if self.sensors.is_empty() {
            return bad("at least one sensor is required".into());
        }
        if !(self.jitter_minutes >= 0.0 && self.jitter_minutes.is_finite()) {
            return bad(format!("jitter_minutes must be >= 0, got {}", self.jitter_minutes));
        }
        if !(0.0..1.0).contains(&self.other_fraction) {
            return bad(format!("other_fraction must lie in [0, 1), got {}", self.other_fraction));
        }
        let registry = SensorRegistry::from_names(self.sensors.iter().cloned())?;
        let mut resolved = Vec::new();
        let mut busiest_minutes = 0.0;
        for a in &self.activities {
            let label: ActivityLabel = a.label.parse()?;
            if label.is_other() {
                return bad("Other is produced by noise events, not declared as an activity".into());
            }
            let [lo, hi] = a.start_hour;
            if !(0.0 <= lo && lo <= hi && hi < 24.0) {
                return bad(format!("{}: start_hour must satisfy 0 <= lo <= hi < 24", a.label));
            }
            let [dlo, dhi] = a.duration_minutes;
            if !(dlo > 0.0 && dlo <= dhi && dhi.is_finite()) {
                return bad(format!("{}: duration range must be positive and ordered", a.label));
            }
            if !(a.events_per_hour > 0.0 && a.events_per_hour.is_finite()) {
                return bad(format!("{}: events_per_hour must be positive", a.label));
            }
            if !(0.0..=1.0).contains(&a.probability) {
                return bad(format!("{}: probability must lie in [0, 1]", a.label));
            }
            if a.sensors.is_empty() {
                return bad(format!("{}: sensor pool is empty", a.label));
            }
            let pool = a
                .sensors
                .iter()
                .map(|s| registry.get(s).ok_or_else(|| HarError::InvalidInput(format!("{}: unknown sensor `{s}`", a.label))))
                .collect::<Result<Vec<_>>>()?;
            busiest_minutes += dhi;
            resolved.push(Resolved { label, pool });
        }
        if resolved.is_empty() {
            return bad("at least one activity is required".into());
        }
        if busiest_minutes > 24.0 * 60.0 {
            return bad(format!(
                "activities need up to {busiest_minutes} minutes per day and cannot be scheduled without overlap"
            ));
        }
        Ok((registry, resolved))
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

fn offset(base: NaiveDateTime, seconds: f64) -> NaiveDateTime {
    base + Duration::microseconds((seconds * 1e6).round() as i64)
}

/// Generates the labeled stream described by `spec`.
///
/// Activities are scheduled per day in start order; an instance that would
/// overlap the previous one is pushed back to start a minute after it ends.
/// Other-labeled noise events are scattered in the gaps between instances.
pub fn generate(spec: &RoutineSpec) -> Result<EventStream> {
    let (registry, activities) = spec.resolve()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let midnight = spec.start_date.and_hms_opt(0, 0, 0).expect("valid time");

    // (start, end, activity index), seconds from the first midnight
    let mut schedule: Vec<(f64, f64, usize)> = Vec::new();
    for day in 0..spec.days {
        let day_start = f64::from(day) * 86_400.0;
        let mut today = Vec::new();
        for (idx, a) in spec.activities.iter().enumerate() {
            let happens = rng.gen::<f64>() < a.probability;
            let start_h = uniform(&mut rng, a.start_hour[0], a.start_hour[1]);
            let jitter = uniform(&mut rng, -spec.jitter_minutes, spec.jitter_minutes);
            let minutes = uniform(&mut rng, a.duration_minutes[0], a.duration_minutes[1]);
            if happens {
                let start = day_start + start_h * 3600.0 + jitter * 60.0;
                today.push((start.max(0.0), minutes * 60.0, idx));
            }
        }
        today.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
        for (start, len, idx) in today {
            let start = match schedule.last() {
                Some(&(_, prev_end, _)) if start < prev_end + 60.0 => prev_end + 60.0,
                _ => start,
            };
            schedule.push((start, start + len, idx));
        }
    }

    let mut events = Vec::new();
    for &(start, end, idx) in &schedule {
        let a = &spec.activities[idx];
        let r = &activities[idx];
        let mean_gap = 3600.0 / a.events_per_hour;
        let mut t = start;
        while t + 5.0 <= end {
            let sensor = r.pool[rng.gen_range(0..r.pool.len())];
            let hold = uniform(&mut rng, 1.0, 5.0);
            for (at, state) in [(t, SensorState::On), (t + hold, SensorState::Off)] {
                events.push(SensorEvent {
                    timestamp: offset(midnight, at),
                    sensor,
                    state,
                    label: r.label,
                });
            }
            t += uniform(&mut rng, 0.5 * mean_gap, 1.5 * mean_gap);
        }
    }

    let gaps: Vec<(f64, f64)> = schedule
        .windows(2)
        .map(|w| (w[0].1 + 5.0, w[1].0 - 5.0))
        .filter(|(a, b)| b > a)
        .collect();
    let gap_total: f64 = gaps.iter().map(|(a, b)| b - a).sum();
    let f = spec.other_fraction;
    let noise = ((f / (1.0 - f)) * events.len() as f64).round() as usize;
    if gap_total > 0.0 {
        for _ in 0..noise {
            let mut pick = uniform(&mut rng, 0.0, gap_total);
            let mut at = gaps[gaps.len() - 1].1;
            for &(a, b) in &gaps {
                if pick < b - a {
                    at = a + pick;
                    break;
                }
                pick -= b - a;
            }
            let sensor = SensorId(rng.gen_range(0..registry.len()));
            let state = if rng.gen::<bool>() { SensorState::On } else { SensorState::Off };
            events.push(SensorEvent {
                timestamp: offset(midnight, at),
                sensor,
                state,
                label: ActivityLabel::Other,
            });
        }
    }
    events.sort_by_key(|e| e.timestamp);

    Ok(EventStream {
        events,
        registry,
        label_map: LabelMap::casas_default(),
    })
}
