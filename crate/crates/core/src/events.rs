//! CASAS event logs: parsing, interval labeling, serialization and
//! chronological splitting.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use chrono::{Duration, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{HarError, Result};
use crate::label::{ActivityLabel, LabelMap};

pub type Timestamp = NaiveDateTime;

const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S%.f";
const TIMESTAMP_OUTPUT_FORMAT: &str = "%Y-%m-%d %H:%M:%S%.6f";

/// Index into a [`SensorRegistry`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SensorId(pub usize);

impl SensorId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SensorState {
    On,
    Off,
}

impl SensorState {
    /// `+1` for ON, `-1` for OFF.
    pub fn sign(self) -> f64 {
        match self {
            SensorState::On => 1.0,
            SensorState::Off => -1.0,
        }
    }

    fn token(self) -> &'static str {
        match self {
            SensorState::On => "ON",
            SensorState::Off => "OFF",
        }
    }

    /// Decodes a raw CASAS value. Analog readings (anything numeric) count as an
    /// activation.
    pub fn from_value(value: &str) -> Option<Self> {
        match value.to_ascii_uppercase().as_str() {
            "ON" | "OPEN" | "PRESENT" => Some(SensorState::On),
            "OFF" | "CLOSE" | "ABSENT" => Some(SensorState::Off),
            _ => value.parse::<f64>().ok().map(|_| SensorState::On),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorEvent {
    pub timestamp: Timestamp,
    pub sensor: SensorId,
    pub state: SensorState,
    pub label: ActivityLabel,
}

/// Sensor names in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SensorRegistry {
    names: Vec<String>,
    index: HashMap<String, SensorId>,
}

impl SensorRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_names<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut reg = SensorRegistry::new();
        for name in names {
            let name = name.into();
            if reg.get(&name).is_some() {
                return Err(HarError::InvalidInput(format!("duplicate sensor name `{name}`")));
            }
            reg.register(&name);
        }
        Ok(reg)
    }

    pub fn register(&mut self, name: &str) -> SensorId {
        if let Some(id) = self.index.get(name) {
            return *id;
        }
        let id = SensorId(self.names.len());
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<SensorId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: SensorId) -> &str {
        &self.names[id.0]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marker {
    Begin,
    End,
    /// A bare label on the line: annotates this event only.
    Point,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub activity: String,
    pub marker: Marker,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedLine {
    pub timestamp: Timestamp,
    pub sensor: SensorId,
    pub state: SensorState,
    pub annotation: Option<Annotation>,
}

/// Decodes one `date time sensor value [activity [begin|end]]` line.
///
/// Unseen sensor names are added to `registry` only when the line is valid.
pub fn parse_casas_line(line: &str, line_no: usize, registry: &mut SensorRegistry) -> Result<ParsedLine> {
    let err = |message: String| HarError::Parse { line: line_no, message };
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() < 4 {
        return Err(err(format!("expected at least 4 fields, found {}", fields.len())));
    }
    if fields.len() > 6 {
        return Err(err(format!("expected at most 6 fields, found {}", fields.len())));
    }
    let stamp = format!("{} {}", fields[0], fields[1]);
    let timestamp = NaiveDateTime::parse_from_str(&stamp, TIMESTAMP_FORMAT)
        .map_err(|e| err(format!("bad timestamp `{stamp}`: {e}")))?;
    let state = SensorState::from_value(fields[3]).ok_or_else(|| err(format!("unrecognized sensor value `{}`", fields[3])))?;
    let annotation = match &fields[4..] {
        [] => None,
        [activity] => Some(Annotation {
            activity: (*activity).to_owned(),
            marker: Marker::Point,
        }),
        [activity, marker] => {
            let marker = match marker.to_ascii_lowercase().as_str() {
                "begin" => Marker::Begin,
                "end" => Marker::End,
                other => return Err(err(format!("expected `begin` or `end`, found `{other}`"))),
            };
            Some(Annotation {
                activity: (*activity).to_owned(),
                marker,
            })
        }
        _ => unreachable!("field count checked above"),
    };
    let sensor = registry.register(fields[2]);
    Ok(ParsedLine {
        timestamp,
        sensor,
        state,
        annotation,
    })
}

/// A labeled, time-ordered event sequence together with its sensor registry.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    pub events: Vec<SensorEvent>,
    pub registry: SensorRegistry,
    pub label_map: LabelMap,
}

/// Non-fatal problems encountered while loading.
#[derive(Debug, Default)]
pub struct LoadDiagnostics {
    pub parse_errors: Vec<HarError>,
    pub warnings: Vec<String>,
}

impl LoadDiagnostics {
    pub fn error_count(&self) -> usize {
        self.parse_errors.len()
    }
}

#[derive(Debug)]
pub struct Loaded {
    pub stream: EventStream,
    pub diagnostics: LoadDiagnostics,
}

/// Parses a whole log and assigns interval labels.
///
/// Events between an activity's `begin` and `end` markers (both inclusive)
/// carry its canonical label; when intervals nest or overlap the most recently
/// opened one wins. Out-of-order lines are stably sorted by timestamp first.
pub fn parse_dataset(text: &str, label_map: &LabelMap) -> Loaded {
    let mut registry = SensorRegistry::new();
    let mut diagnostics = LoadDiagnostics::default();
    let mut lines = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_casas_line(line, i + 1, &mut registry) {
            Ok(parsed) => lines.push((i + 1, parsed)),
            Err(e) => diagnostics.parse_errors.push(e),
        }
    }

    if lines.windows(2).any(|w| w[1].1.timestamp < w[0].1.timestamp) {
        diagnostics
            .warnings
            .push("lines out of chronological order; stably sorted by timestamp".into());
        lines.sort_by_key(|(_, p)| p.timestamp);
    }

    let mut open: Vec<String> = Vec::new();
    let mut events = Vec::with_capacity(lines.len());
    for (line_no, parsed) in lines {
        let mut closing = None;
        let mut point = None;
        match &parsed.annotation {
            Some(Annotation { activity, marker: Marker::Begin }) => open.push(activity.clone()),
            Some(Annotation { activity, marker: Marker::End }) => match open.iter().rposition(|a| a == activity) {
                Some(pos) => closing = Some(pos),
                None => diagnostics
                    .warnings
                    .push(format!("line {line_no}: `{activity} end` without matching begin; ignored")),
            },
            Some(Annotation { activity, marker: Marker::Point }) => point = Some(activity.as_str()),
            None => {}
        }
        let label = match point.or(open.last().map(String::as_str)) {
            Some(raw) => label_map.resolve(raw),
            None => ActivityLabel::Other,
        };
        if let Some(pos) = closing {
            open.remove(pos);
        }
        events.push(SensorEvent {
            timestamp: parsed.timestamp,
            sensor: parsed.sensor,
            state: parsed.state,
            label,
        });
    }
    for activity in open {
        diagnostics
            .warnings
            .push(format!("`{activity} begin` never closed; interval runs to end of file"));
    }
    if !diagnostics.parse_errors.is_empty() {
        log::warn!("{} unparseable lines skipped", diagnostics.parse_errors.len());
    }
    for w in &diagnostics.warnings {
        log::warn!("{w}");
    }

    Loaded {
        stream: EventStream {
            events,
            registry,
            label_map: label_map.clone(),
        },
        diagnostics,
    }
}

pub fn load_dataset(path: impl AsRef<Path>, label_map: &LabelMap) -> Result<Loaded> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| HarError::io(path, e))?;
    Ok(parse_dataset(&text, label_map))
}

impl EventStream {
    pub fn new(registry: SensorRegistry) -> Self {
        EventStream {
            events: Vec::new(),
            registry,
            label_map: LabelMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn sensor_count(&self) -> usize {
        self.registry.len()
    }

    /// Same registry and label map, different events.
    pub fn with_events(&self, events: Vec<SensorEvent>) -> Self {
        EventStream {
            events,
            registry: self.registry.clone(),
            label_map: self.label_map.clone(),
        }
    }

    pub fn other_fraction(&self) -> f64 {
        if self.events.is_empty() {
            return 0.0;
        }
        let other = self.events.iter().filter(|e| e.label.is_other()).count();
        other as f64 / self.events.len() as f64
    }

    /// Keeps the events that fall within `days` days of the first event.
    pub fn first_days(&self, days: u32) -> Self {
        let Some(first) = self.events.first() else {
            return self.clone();
        };
        let cutoff = first.timestamp + Duration::days(i64::from(days));
        let events = self.events.iter().take_while(|e| e.timestamp < cutoff).copied().collect();
        self.with_events(events)
    }

    /// Writes the stream in CASAS text form. Each maximal run of a non-Other
    /// label is bracketed with `begin`/`end` markers; single-event runs carry a
    /// bare label.
    pub fn to_casas_string(&self) -> String {
        let mut out = String::with_capacity(self.events.len() * 48);
        let n = self.events.len();
        for (i, e) in self.events.iter().enumerate() {
            let _ = write!(
                out,
                "{} {} {}",
                e.timestamp.format(TIMESTAMP_OUTPUT_FORMAT),
                self.registry.name(e.sensor),
                e.state.token()
            );
            if !e.label.is_other() {
                let starts = i == 0 || self.events[i - 1].label != e.label;
                let ends = i + 1 == n || self.events[i + 1].label != e.label;
                match (starts, ends) {
                    (true, true) => {
                        let _ = write!(out, " {}", e.label);
                    }
                    (true, false) => {
                        let _ = write!(out, " {} begin", e.label);
                    }
                    (false, true) => {
                        let _ = write!(out, " {} end", e.label);
                    }
                    (false, false) => {}
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn write_casas(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_casas_string()).map_err(|e| HarError::io(path, e))
    }
}

/// Fractions for the chronological train/validation/test split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.7,
            validation: 0.15,
            test: 0.15,
        }
    }
}

impl SplitRatios {
    pub fn new(train: f64, validation: f64, test: f64) -> Result<Self> {
        let r = SplitRatios { train, validation, test };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err(HarError::InvalidInput(format!("split ratios must be positive, got {parts:?}")));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(HarError::InvalidInput(format!("split ratios must sum to 1, got {sum}")));
        }
        Ok(())
    }

    /// Event counts `(train, validation, test)` for a stream of `n` events.
    ///
    /// `train = round(r1·n)`, `validation = round(r2·n)`, test takes the rest;
    /// each part is clamped so that all three stay non-empty.
    pub fn sizes(&self, n: usize) -> Result<(usize, usize, usize)> {
        self.validate()?;
        if n < 3 {
            return Err(HarError::InvalidInput(format!(
                "cannot split {n} events into three non-empty parts"
            )));
        }
        let train = ((self.train * n as f64).round() as usize).clamp(1, n - 2);
        let validation = ((self.validation * n as f64).round() as usize).clamp(1, n - train - 1);
        Ok((train, validation, n - train - validation))
    }
}

/// Splits at event boundaries, preserving order.
pub fn temporal_split(stream: &EventStream, ratios: SplitRatios) -> Result<(EventStream, EventStream, EventStream)> {
    let (a, b, _) = ratios.sizes(stream.len())?;
    let ev = &stream.events;
    Ok((
        stream.with_events(ev[..a].to_vec()),
        stream.with_events(ev[a..a + b].to_vec()),
        stream.with_events(ev[a + b..].to_vec()),
    ))
}
