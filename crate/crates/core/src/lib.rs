//! Streaming activity recognition for smart homes instrumented with binary
//! ambient sensors.
//!
//! The pipeline turns a CASAS event log into one labeled window per event,
//! describes each window with a sensor-weighted feature vector (optionally
//! extended with cyclic time-of-day / day-of-week encodings and a
//! location-change flag) and classifies it with K-nearest neighbours.
//! Sensor weights can be split by a learned morning / afternoon / night
//! partition of the day.

pub mod error;
pub mod evaluation;
pub mod events;
pub mod features;
pub mod knn;
pub mod label;
pub mod mutual_info;
pub mod partition;
pub mod report;
pub mod synth;
pub mod windowing;

pub use error::{HarError, Result};
pub use evaluation::{
    grid_search, metrics, run_experiment, EvalReport, Experiment, ExperimentReport, GridResult, Grids, PipelineOptions,
    SelectionMetric,
};
pub use events::{
    load_dataset, parse_casas_line, parse_dataset, temporal_split, EventStream, SensorEvent, SensorId, SensorRegistry,
    SensorState, SplitRatios, Timestamp,
};
pub use features::{BaseMethod, FeatureConfig, FeatureModels, Scaling};
pub use knn::KnnModel;
pub use label::{ActivityLabel, LabelMap};
pub use mutual_info::{MiMatrix, SegmentPairing, TemporalMi};
pub use partition::{DayPartition, DaySegment, DescriptorOptions};
pub use synth::{generate, RoutineSpec};
pub use windowing::{event_windows, DwModel, LabeledWindow};
