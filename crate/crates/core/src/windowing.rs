//! Event-count sliding windows, one per trigger event, and the dynamic
//! window-size model (DW).

use std::io::Write;
use std::ops::Range;

use serde::Serialize;

use crate::error::{HarError, Result};
use crate::events::{SensorEvent, SensorId, SensorRegistry, Timestamp};
use crate::label::ActivityLabel;

/// Candidate sizes used for DW and for the window-size grid search.
pub const DEFAULT_WINDOW_GRID: [usize; 6] = [5, 10, 15, 20, 25, 30];

/// A contiguous run of events ending at its trigger (last) event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledWindow<'a> {
    events: &'a [SensorEvent],
}

impl<'a> LabeledWindow<'a> {
    /// Panics on an empty slice; every window holds at least its trigger.
    pub fn new(events: &'a [SensorEvent]) -> Self {
        assert!(!events.is_empty(), "a window holds at least its trigger event");
        LabeledWindow { events }
    }

    pub fn events(&self) -> &'a [SensorEvent] {
        self.events
    }

    pub fn trigger(&self) -> &'a SensorEvent {
        self.events.last().expect("non-empty window")
    }

    pub fn label(&self) -> ActivityLabel {
        self.trigger().label
    }

    pub fn trigger_timestamp(&self) -> Timestamp {
        self.trigger().timestamp
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 {
        return Err(HarError::InvalidInput("window size must be at least 1".into()));
    }
    Ok(())
}

/// One window per event: window `k` spans events `max(0, k-n+1)..=k`.
/// Windows near the start of the stream are shorter than `n`.
pub fn event_windows(events: &[SensorEvent], n: usize) -> Result<Vec<LabeledWindow<'_>>> {
    windows_in(events, n, 0..events.len(), false)
}

/// Windows for the triggers in `triggers`, drawing history from all of
/// `events` (so a window may reach back before `triggers.start`).
///
/// With `skip_truncated`, triggers with fewer than `n` events of history are
/// dropped.
pub fn windows_in(
    events: &[SensorEvent],
    n: usize,
    triggers: Range<usize>,
    skip_truncated: bool,
) -> Result<Vec<LabeledWindow<'_>>> {
    check_size(n)?;
    if triggers.end > events.len() {
        return Err(HarError::InvalidInput(format!(
            "trigger range {triggers:?} exceeds {} events",
            events.len()
        )));
    }
    Ok(triggers
        .filter(|&k| !skip_truncated || k + 1 >= n)
        .map(|k| LabeledWindow::new(&events[(k + 1).saturating_sub(n)..=k]))
        .collect())
}

/// Per-sensor histograms of activity lengths (in events), snapped to a grid of
/// candidate window sizes.
///
/// Every training event votes, under its own sensor, for the grid size that
/// covers the length of the same-label run it belongs to: the smallest grid
/// value at least as long as the run, or the largest grid value for longer runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DwModel {
    grid: Vec<usize>,
    per_sensor: Vec<Vec<usize>>,
    global: Vec<usize>,
}

fn snap(grid: &[usize], len: usize) -> usize {
    grid.iter().position(|&g| g >= len).unwrap_or(grid.len() - 1)
}

fn argmax_smallest(hist: &[usize]) -> usize {
    // strict `>` keeps the first (smallest) size on ties
    let mut best = 0;
    for (i, &c) in hist.iter().enumerate() {
        if c > hist[best] {
            best = i;
        }
    }
    best
}

/// Lengths of maximal same-label runs, in order.
pub(crate) fn label_runs(events: &[SensorEvent]) -> Vec<Range<usize>> {
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..=events.len() {
        if i == events.len() || events[i].label != events[start].label {
            if i > start {
                runs.push(start..i);
            }
            start = i;
        }
    }
    runs
}

pub fn fit_dw(train: &[SensorEvent], m: usize, grid: &[usize]) -> Result<DwModel> {
    if train.is_empty() {
        return Err(HarError::InvalidInput("DW needs a non-empty training stream".into()));
    }
    if grid.is_empty() || grid.contains(&0) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HarError::InvalidInput(format!(
            "DW grid must be non-empty, positive and strictly ascending, got {grid:?}"
        )));
    }
    let mut per_sensor = vec![vec![0usize; grid.len()]; m];
    let mut global = vec![0usize; grid.len()];
    for run in label_runs(train) {
        let bin = snap(grid, run.len());
        for e in &train[run] {
            let hist = per_sensor
                .get_mut(e.sensor.index())
                .ok_or(HarError::SensorOutOfRange { index: e.sensor.index(), m })?;
            hist[bin] += 1;
            global[bin] += 1;
        }
    }
    Ok(DwModel {
        grid: grid.to_vec(),
        per_sensor,
        global,
    })
}

impl DwModel {
    pub fn grid(&self) -> &[usize] {
        &self.grid
    }

    pub fn histogram(&self, sensor: SensorId) -> Option<&[usize]> {
        self.per_sensor.get(sensor.index()).map(Vec::as_slice)
    }

    pub fn global_histogram(&self) -> &[usize] {
        &self.global
    }

    /// Most frequent grid size for `sensor` (ties go to the smaller size);
    /// sensors without training mass use the global histogram.
    pub fn window_size(&self, sensor: SensorId) -> usize {
        let hist = match self.per_sensor.get(sensor.index()) {
            Some(h) if h.iter().any(|&c| c > 0) => h,
            _ => &self.global,
        };
        self.grid[argmax_smallest(hist)]
    }

    /// Dynamic-size windows for `triggers`, sized by each trigger's sensor.
    pub fn windows_in<'a>(&self, events: &'a [SensorEvent], triggers: Range<usize>) -> Result<Vec<LabeledWindow<'a>>> {
        if triggers.end > events.len() {
            return Err(HarError::InvalidInput(format!(
                "trigger range {triggers:?} exceeds {} events",
                events.len()
            )));
        }
        Ok(triggers
            .map(|k| {
                let n = self.window_size(events[k].sensor);
                LabeledWindow::new(&events[(k + 1).saturating_sub(n)..=k])
            })
            .collect())
    }
}

pub fn dw_window_size(model: &DwModel, sensor: SensorId) -> usize {
    model.window_size(sensor)
}

#[derive(Serialize)]
struct WindowRecord<'a> {
    trigger: String,
    label: &'static str,
    sensors: Vec<&'a str>,
    states: Vec<&'static str>,
}

/// Writes one JSON object per line:
/// `{"trigger": "<timestamp>", "label": "<class>", "sensors": [...], "states": ["ON"|"OFF", ...]}`.
pub fn write_window_dump<W: Write>(mut out: W, windows: &[LabeledWindow<'_>], registry: &SensorRegistry) -> std::io::Result<()> {
    for w in windows {
        let record = WindowRecord {
            trigger: w.trigger_timestamp().format("%Y-%m-%d %H:%M:%S%.6f").to_string(),
            label: w.label().name(),
            sensors: w.events().iter().map(|e| registry.name(e.sensor)).collect(),
            states: w
                .events()
                .iter()
                .map(|e| match e.state {
                    crate::events::SensorState::On => "ON",
                    crate::events::SensorState::Off => "OFF",
                })
                .collect(),
        };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
