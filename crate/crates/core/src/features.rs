//! Per-window feature vectors.
//!
//! A vector is a base block of one entry per sensor, optionally followed by
//! the four cyclic time encodings and the location-change flag.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use crate::error::{HarError, Result};
use crate::events::{SensorRegistry, Timestamp};
use crate::label::ActivityLabel;
use crate::mutual_info::{MiMatrix, TemporalMi};
use crate::partition::fractional_hour;
use crate::windowing::LabeledWindow;

/// The base representation of a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaseMethod {
    /// Sensor counts.
    #[serde(rename = "SW")]
    Sw,
    /// Counts weighted by consecutive-firing probability to the trigger sensor.
    #[serde(rename = "SWMI")]
    Swmi,
    /// SWMI with a separate matrix per day segment.
    #[serde(rename = "SWMI-Temp")]
    SwmiTemp,
    /// SWMI with a window co-occurrence matrix.
    #[serde(rename = "SWMIex")]
    SwmiEx,
    /// SWMI with a matrix built from non-Other activity runs only.
    #[serde(rename = "SWMI-Act")]
    SwmiAct,
    /// Last state per sensor.
    #[serde(rename = "BSS")]
    Bss,
    /// Last state per sensor (kept separate for result parity).
    #[serde(rename = "SWLS")]
    Swls,
    /// SWMI with an exponential decay on elapsed time to the trigger.
    #[serde(rename = "SWTW")]
    Swtw,
    /// Sensor counts over windows sized by the DW model.
    #[serde(rename = "DW")]
    Dw,
}

impl BaseMethod {
    pub const ALL: [BaseMethod; 9] = [
        BaseMethod::Sw,
        BaseMethod::Swmi,
        BaseMethod::SwmiTemp,
        BaseMethod::SwmiEx,
        BaseMethod::SwmiAct,
        BaseMethod::Bss,
        BaseMethod::Swls,
        BaseMethod::Swtw,
        BaseMethod::Dw,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaseMethod::Sw => "SW",
            BaseMethod::Swmi => "SWMI",
            BaseMethod::SwmiTemp => "SWMI-Temp",
            BaseMethod::SwmiEx => "SWMIex",
            BaseMethod::SwmiAct => "SWMI-Act",
            BaseMethod::Bss => "BSS",
            BaseMethod::Swls => "SWLS",
            BaseMethod::Swtw => "SWTW",
            BaseMethod::Dw => "DW",
        }
    }
}

impl fmt::Display for BaseMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn squash(s: &str) -> String {
    s.chars().filter(|c| c.is_ascii_alphanumeric()).map(|c| c.to_ascii_lowercase()).collect()
}

impl FromStr for BaseMethod {
    type Err = HarError;

    fn from_str(s: &str) -> Result<Self> {
        let key = squash(s);
        BaseMethod::ALL
            .into_iter()
            .find(|b| squash(b.name()) == key)
            .ok_or_else(|| HarError::Config(format!("unknown base method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    #[default]
    None,
    MinMax,
}

/// Default SWTW decay: a 60 second half-life.
pub const DEFAULT_SWTW_LAMBDA: f64 = LN_2 / 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub base: BaseMethod,
    pub cyclic: bool,
    pub location_change: bool,
    /// Per-second decay rate, SWTW only.
    pub swtw_lambda: f64,
    pub scaling: Scaling,
}

impl FeatureConfig {
    pub fn new(base: BaseMethod) -> Self {
        FeatureConfig {
            base,
            cyclic: false,
            location_change: false,
            swtw_lambda: DEFAULT_SWTW_LAMBDA,
            scaling: Scaling::None,
        }
    }

    pub fn with_cyclic(mut self, on: bool) -> Self {
        self.cyclic = on;
        self
    }

    pub fn with_location(mut self, on: bool) -> Self {
        self.location_change = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.swtw_lambda >= 0.0 && self.swtw_lambda.is_finite()) {
            return Err(HarError::Config(format!("swtw_lambda must be >= 0, got {}", self.swtw_lambda)));
        }
        Ok(())
    }

    /// Variant name such as `SWMI+cyclic+location`.
    pub fn variant_name(&self) -> String {
        let mut s = self.base.name().to_owned();
        if self.cyclic {
            s.push_str("+cyclic");
        }
        if self.location_change {
            s.push_str("+location");
        }
        s
    }

    /// Parses `BASE[+cyclic][+location]`. `Combined` is shorthand for
    /// `SWMI-Temp+cyclic+location`.
    pub fn parse_variant(s: &str) -> Result<Self> {
        if squash(s) == "combined" {
            return Ok(FeatureConfig::new(BaseMethod::SwmiTemp).with_cyclic(true).with_location(true));
        }
        let mut parts = s.split('+').map(str::trim);
        let base: BaseMethod = parts.next().unwrap_or("").parse()?;
        let mut cfg = FeatureConfig::new(base);
        for part in parts {
            match squash(part).as_str() {
                "cyclic" => cfg.cyclic = true,
                "location" | "locationchange" => cfg.location_change = true,
                _ => return Err(HarError::Config(format!("unknown feature suffix `{part}` in `{s}`"))),
            }
        }
        Ok(cfg)
    }

    pub fn dim(&self, m: usize) -> usize {
        m + if self.cyclic { 4 } else { 0 } + usize::from(self.location_change)
    }
}

/// Named column blocks of a feature vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Layout {
    pub blocks: Vec<(String, usize)>,
}

impl Layout {
    pub fn for_config(cfg: &FeatureConfig, m: usize) -> Self {
        let mut blocks = vec![(cfg.base.name().to_owned(), m)];
        if cfg.cyclic {
            blocks.push(("cyclic".into(), 4));
        }
        if cfg.location_change {
            blocks.push(("location".into(), 1));
        }
        Layout { blocks }
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|(_, d)| d).sum()
    }

    /// One name per dimension: sensor names, then `sin_hour`, `cos_hour`,
    /// `sin_day`, `cos_day`, then `location_change`.
    pub fn column_names(&self, registry: &SensorRegistry) -> Vec<String> {
        let mut cols = Vec::with_capacity(self.dim());
        for (name, d) in &self.blocks {
            match name.as_str() {
                "cyclic" => cols.extend(["sin_hour", "cos_hour", "sin_day", "cos_day"].map(String::from)),
                "location" => cols.push("location_change".into()),
                base => cols.extend((0..*d).map(|i| match registry.names().get(i) {
                    Some(s) => format!("{base}:{s}"),
                    None => format!("{base}:{i}"),
                })),
            }
        }
        cols
    }
}

/// Number of events per sensor.
pub fn count_vector(w: &LabeledWindow<'_>, m: usize) -> Vec<f64> {
    let mut v = vec![0.0; m];
    for e in w.events() {
        v[e.sensor.index()] += 1.0;
    }
    v
}

/// Each event adds `mi(its sensor, trigger sensor)` to its sensor's entry.
pub fn swmi_vector(w: &LabeledWindow<'_>, mi: &MiMatrix) -> Vec<f64> {
    let last = w.trigger().sensor.index();
    let mut v = vec![0.0; mi.m()];
    for e in w.events() {
        let i = e.sensor.index();
        v[i] += mi.get(i, last);
    }
    v
}

/// SWMI using the matrix of the trigger event's day segment.
pub fn swmi_temp_vector(w: &LabeledWindow<'_>, tmi: &TemporalMi) -> Vec<f64> {
    swmi_vector(w, tmi.for_timestamp(&w.trigger_timestamp()))
}

/// `+1` / `-1` for the last seen ON / OFF state of each sensor, 0 if absent.
pub fn bss_vector(w: &LabeledWindow<'_>, m: usize) -> Vec<f64> {
    let mut v = vec![0.0; m];
    for e in w.events() {
        v[e.sensor.index()] = e.state.sign();
    }
    v
}

/// Same rule as [`bss_vector`].
pub fn swls_vector(w: &LabeledWindow<'_>, m: usize) -> Vec<f64> {
    bss_vector(w, m)
}

/// SWMI with each event's contribution scaled by `exp(-lambda * dt)`, `dt`
/// being the seconds from the event to the trigger.
pub fn swtw_vector(w: &LabeledWindow<'_>, mi: &MiMatrix, lambda: f64) -> Vec<f64> {
    let trigger = w.trigger();
    let last = trigger.sensor.index();
    let mut v = vec![0.0; mi.m()];
    for e in w.events() {
        let i = e.sensor.index();
        let dt = seconds_between(&e.timestamp, &trigger.timestamp);
        let weight = (-lambda * dt).exp();
        v[i] += weight * mi.get(i, last);
    }
    v
}

fn seconds_between(earlier: &Timestamp, later: &Timestamp) -> f64 {
    let d = *later - *earlier;
    d.num_microseconds().map(|us| us as f64 * 1e-6).unwrap_or_else(|| d.num_seconds() as f64)
}

/// `(sin_h, cos_h, sin_d, cos_d)` of the fractional hour and the weekday
/// (Monday = 0).
pub fn cyclic_features(ts: &Timestamp) -> [f64; 4] {
    let h = fractional_hour(ts);
    let d = f64::from(ts.weekday().num_days_from_monday());
    cyclic_from_parts(h, d)
}

pub fn cyclic_from_parts(hour: f64, day: f64) -> [f64; 4] {
    let ha = 2.0 * PI * hour / 24.0;
    let da = 2.0 * PI * day / 7.0;
    [ha.sin(), ha.cos(), da.sin(), da.cos()]
}

/// 1 when the last two events come from different sensors.
pub fn location_change(w: &LabeledWindow<'_>) -> f64 {
    match w.events() {
        [.., a, b] if a.sensor != b.sensor => 1.0,
        _ => 0.0,
    }
}

/// Per-dimension min-max scaling fitted on training vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinMaxScaler {
    min: Vec<f64>,
    max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| HarError::InvalidInput("cannot fit a scaler on zero rows".into()))?;
        let mut min = first.clone();
        let mut max = first.clone();
        for r in rows {
            if r.len() != min.len() {
                return Err(HarError::DimensionMismatch {
                    expected: min.len(),
                    got: r.len(),
                });
            }
            for (j, &x) in r.iter().enumerate() {
                min[j] = min[j].min(x);
                max[j] = max[j].max(x);
            }
        }
        Ok(MinMaxScaler { min, max })
    }

    /// `(x - min) / (max - min)`; constant training dimensions map to 0.
    pub fn transform(&self, v: &mut [f64]) -> Result<()> {
        if v.len() != self.min.len() {
            return Err(HarError::DimensionMismatch {
                expected: self.min.len(),
                got: v.len(),
            });
        }
        for ((x, lo), hi) in v.iter_mut().zip(&self.min).zip(&self.max) {
            let range = hi - lo;
            *x = if range > 0.0 { (*x - lo) / range } else { 0.0 };
        }
        Ok(())
    }
}

/// Fitted weighting models a [`FeatureConfig`] may need.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureModels {
    pub mi: Option<MiMatrix>,
    pub temporal: Option<TemporalMi>,
    pub cooccurrence: Option<MiMatrix>,
    pub activity: Option<MiMatrix>,
    pub scaler: Option<MinMaxScaler>,
}

fn require<'a, T>(model: &'a Option<T>, what: &str, cfg: &FeatureConfig) -> Result<&'a T> {
    model
        .as_ref()
        .ok_or_else(|| HarError::Config(format!("{} needs a fitted {what}", cfg.base)))
}

/// Unscaled feature vector of `w`.
pub fn assemble_raw(w: &LabeledWindow<'_>, cfg: &FeatureConfig, m: usize, models: &FeatureModels) -> Result<Vec<f64>> {
    let mut v = match cfg.base {
        BaseMethod::Sw | BaseMethod::Dw => count_vector(w, m),
        BaseMethod::Swmi => swmi_vector(w, require(&models.mi, "mutual information matrix", cfg)?),
        BaseMethod::SwmiTemp => swmi_temp_vector(w, require(&models.temporal, "temporal matrix set", cfg)?),
        BaseMethod::SwmiEx => swmi_vector(w, require(&models.cooccurrence, "co-occurrence matrix", cfg)?),
        BaseMethod::SwmiAct => swmi_vector(w, require(&models.activity, "activity matrix", cfg)?),
        BaseMethod::Bss => bss_vector(w, m),
        BaseMethod::Swls => swls_vector(w, m),
        BaseMethod::Swtw => swtw_vector(w, require(&models.mi, "mutual information matrix", cfg)?, cfg.swtw_lambda),
    };
    if v.len() != m {
        return Err(HarError::DimensionMismatch { expected: m, got: v.len() });
    }
    if cfg.cyclic {
        v.extend(cyclic_features(&w.trigger_timestamp()));
    }
    if cfg.location_change {
        v.push(location_change(w));
    }
    Ok(v)
}

/// Feature vector of `w`, scaled when the config asks for it.
pub fn assemble(w: &LabeledWindow<'_>, cfg: &FeatureConfig, m: usize, models: &FeatureModels) -> Result<Vec<f64>> {
    let mut v = assemble_raw(w, cfg, m, models)?;
    if cfg.scaling == Scaling::MinMax {
        require(&models.scaler, "min-max scaler", cfg)?.transform(&mut v)?;
    }
    Ok(v)
}

/// CSV with a header naming every dimension, one row per window, and the
/// trigger timestamp and true label as trailing columns.
pub fn write_feature_csv<W: Write>(
    mut out: W,
    columns: &[String],
    rows: &[Vec<f64>],
    triggers: &[(Timestamp, ActivityLabel)],
) -> std::io::Result<()> {
    writeln!(out, "{},trigger_timestamp,label", columns.join(","))?;
    for (row, (ts, label)) in rows.iter().zip(triggers) {
        let cells: Vec<String> = row.iter().map(f64::to_string).collect();
        writeln!(out, "{},{},{}", cells.join(","), ts.format("%Y-%m-%d %H:%M:%S%.6f"), label)?;
    }
    Ok(())
}
