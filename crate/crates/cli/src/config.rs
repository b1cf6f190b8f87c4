//! TOML experiment configuration. Every table rejects unknown keys.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use har_core::evaluation::DEFAULT_K_GRID;
use har_core::features::DEFAULT_SWTW_LAMBDA;
use har_core::partition::default_hour_grid;
use har_core::windowing::DEFAULT_WINDOW_GRID;
use har_core::{
    BaseMethod, DescriptorOptions, FeatureConfig, Grids, PipelineOptions, Scaling, SegmentPairing, SelectionMetric,
    SplitRatios,
};

/// Key reference printed by `--help`.
pub const SCHEMA: &str = "\
CONFIG FILE (TOML, unknown keys are rejected)
  dataset            path to a CASAS-format event log (required)
  label_map          optional label aggregation table; built-in table if absent
  output_dir         directory for artifacts [default: out]
  first_days         keep only the first N days of the log [default: all]
  methods            variant list for `compare`, e.g. [\"SW\", \"SWMI+cyclic+location\"]

  [features]
  base               SW | SWMI | SWMI-Temp | SWMIex | SWMI-Act | BSS | SWLS | SWTW | DW [default: SWMI]
  cyclic             append sin/cos hour and weekday [default: false]
  location_change    append the last-two-sensors-differ flag [default: false]
  swtw_lambda        SWTW decay per second [default: ln 2 / 60]
  scaling            none | min_max, fitted on training vectors [default: none]

  [grids]
  k                  neighbour counts [default: 1,3,5,7,9,11,15,21,25]
  window             window sizes in events [default: 5,10,15,20,25,30]
  metric             accuracy | weighted_f1 [default: accuracy]

  [split]
  train, validation, test   chronological ratios summing to 1 [default: 0.7, 0.15, 0.15]

  [options]
  skip_truncated     drop windows shorter than N at the stream start [default: false]
  standardize        z-score descriptor hour and count [default: true]
  include_other      Other runs contribute partition descriptors [default: false]
  segment_pairing    subsequence | adjacent_only [default: subsequence]
  partition_grid     candidate boundary hours [default: 0..23]
  dw_grid            DW window sizes [default: 5,10,15,20,25,30]";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: Option<PathBuf>,
    pub label_map: Option<PathBuf>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub first_days: Option<u32>,
    #[serde(default)]
    pub methods: Vec<String>,
    #[serde(default)]
    pub features: FeaturesSection,
    #[serde(default)]
    pub grids: GridsSection,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub options: OptionsSection,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: None,
            label_map: None,
            output_dir: default_output_dir(),
            first_days: None,
            methods: Vec::new(),
            features: FeaturesSection::default(),
            grids: GridsSection::default(),
            split: SplitSection::default(),
            options: OptionsSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeaturesSection {
    pub base: BaseMethod,
    pub cyclic: bool,
    pub location_change: bool,
    pub swtw_lambda: f64,
    pub scaling: Scaling,
}

impl Default for FeaturesSection {
    fn default() -> Self {
        FeaturesSection {
            base: BaseMethod::Swmi,
            cyclic: false,
            location_change: false,
            swtw_lambda: DEFAULT_SWTW_LAMBDA,
            scaling: Scaling::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridsSection {
    pub k: Vec<usize>,
    pub window: Vec<usize>,
    pub metric: SelectionMetric,
}

impl Default for GridsSection {
    fn default() -> Self {
        GridsSection {
            k: DEFAULT_K_GRID.to_vec(),
            window: DEFAULT_WINDOW_GRID.to_vec(),
            metric: SelectionMetric::Accuracy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSection {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        let r = SplitRatios::default();
        SplitSection {
            train: r.train,
            validation: r.validation,
            test: r.test,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptionsSection {
    pub skip_truncated: bool,
    pub standardize: bool,
    pub include_other: bool,
    pub segment_pairing: SegmentPairing,
    pub partition_grid: Vec<f64>,
    pub dw_grid: Vec<usize>,
}

impl Default for OptionsSection {
    fn default() -> Self {
        let d = DescriptorOptions::default();
        OptionsSection {
            skip_truncated: false,
            standardize: d.standardize,
            include_other: d.include_other,
            segment_pairing: SegmentPairing::Subsequence,
            partition_grid: default_hour_grid(),
            dw_grid: DEFAULT_WINDOW_GRID.to_vec(),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }

    pub fn feature_config(&self) -> FeatureConfig {
        let f = &self.features;
        FeatureConfig {
            base: f.base,
            cyclic: f.cyclic,
            location_change: f.location_change,
            swtw_lambda: f.swtw_lambda,
            scaling: f.scaling,
        }
    }

    /// Applies a `BASE[+cyclic][+location]` string over the feature table,
    /// keeping its lambda and scaling.
    pub fn set_variant(&mut self, variant: &str) -> Result<(), String> {
        let v = FeatureConfig::parse_variant(variant).map_err(|e| e.to_string())?;
        self.features.base = v.base;
        self.features.cyclic = v.cyclic;
        self.features.location_change = v.location_change;
        Ok(())
    }

    /// The feature config for one `methods` entry.
    pub fn variant_config(&self, variant: &str) -> Result<FeatureConfig, String> {
        let mut c = self.clone();
        c.set_variant(variant)?;
        Ok(c.feature_config())
    }

    pub fn grids(&self) -> Grids {
        Grids {
            k: self.grids.k.clone(),
            window: self.grids.window.clone(),
        }
    }

    pub fn ratios(&self) -> Result<SplitRatios, String> {
        SplitRatios::new(self.split.train, self.split.validation, self.split.test).map_err(|e| e.to_string())
    }

    pub fn pipeline_options(&self) -> PipelineOptions {
        let o = &self.options;
        PipelineOptions {
            skip_truncated: o.skip_truncated,
            descriptors: DescriptorOptions {
                include_other: o.include_other,
                standardize: o.standardize,
            },
            partition_grid: o.partition_grid.clone(),
            segment_pairing: o.segment_pairing,
            dw_grid: o.dw_grid.clone(),
        }
    }

    /// Checks everything that can be checked without touching the dataset.
    pub fn validate(&self) -> Result<(), String> {
        if self.dataset.is_none() {
            return Err("no dataset given (set `dataset` or pass --dataset)".into());
        }
        self.feature_config().validate().map_err(|e| e.to_string())?;
        self.grids().validate().map_err(|e| e.to_string())?;
        self.ratios()?;
        for m in &self.methods {
            self.variant_config(m)?;
        }
        if self.options.partition_grid.iter().any(|h| !(0.0..24.0).contains(h)) {
            return Err("partition_grid hours must lie in [0, 24)".into());
        }
        if self.options.dw_grid.is_empty() || self.options.dw_grid.contains(&0) {
            return Err("dw_grid must hold positive sizes".into());
        }
        if self.first_days == Some(0) {
            return Err("first_days must be positive".into());
        }
        Ok(())
    }
}
