//! Metrics, grid search over `(window size, k)` and the end-to-end
//! train / validate / retrain / test protocol.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HarError, Result};
use crate::events::{temporal_split, EventStream, SensorEvent, SplitRatios, Timestamp};
use crate::features::{assemble_raw, BaseMethod, FeatureConfig, FeatureModels, MinMaxScaler, Scaling};
use crate::knn::KnnModel;
use crate::label::ActivityLabel;
use crate::mutual_info::{mi_activity, mi_cooccurrence, mi_global, mi_temporal, SegmentPairing};
use crate::partition::{default_hour_grid, learn_partition, DayPartition, DescriptorOptions};
use crate::windowing::{fit_dw, windows_in, DwModel, LabeledWindow, DEFAULT_WINDOW_GRID};

/// Default neighbour counts searched.
pub const DEFAULT_K_GRID: [usize; 9] = [1, 3, 5, 7, 9, 11, 15, 21, 25];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub label: ActivityLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub weighted_f1: f64,
    pub samples: usize,
    pub excluded_label: Option<ActivityLabel>,
    /// Classes that occur as truth or prediction, in canonical order.
    pub per_class: Vec<ClassMetrics>,
    /// `confusion[true][predicted]` over all canonical classes.
    pub confusion: Vec<Vec<usize>>,
    /// Row-normalized confusion; rows without support stay zero.
    pub confusion_normalized: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Accuracy, per-class precision/recall/F1 and the support-weighted F1.
///
/// With `exclude`, pairs whose true label is excluded are dropped first;
/// predictions of the excluded class on the remaining pairs are errors.
pub fn metrics(truth: &[ActivityLabel], predicted: &[ActivityLabel], exclude: Option<ActivityLabel>) -> Result<EvalReport> {
    if truth.len() != predicted.len() {
        return Err(HarError::InvalidInput(format!(
            "{} true labels but {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    const C: usize = ActivityLabel::COUNT;
    let mut confusion = vec![vec![0usize; C]; C];
    let mut samples = 0usize;
    for (t, p) in truth.iter().zip(predicted) {
        if Some(*t) == exclude {
            continue;
        }
        confusion[t.index()][p.index()] += 1;
        samples += 1;
    }
    if samples == 0 {
        return Err(HarError::InvalidInput("no samples left to evaluate".into()));
    }

    let correct: usize = (0..C).map(|c| confusion[c][c]).sum();
    let mut per_class = Vec::new();
    let mut warnings = Vec::new();
    let mut weighted = 0.0;
    for (c, row) in confusion.iter().enumerate() {
        let support: usize = row.iter().sum();
        let predicted_count: usize = confusion.iter().map(|r| r[c]).sum();
        if support == 0 && predicted_count == 0 {
            continue;
        }
        let label = ActivityLabel::ALL[c];
        let tp = row[c] as f64;
        let precision = if predicted_count == 0 {
            warnings.push(format!("{label}: no predictions, precision set to 0"));
            0.0
        } else {
            tp / predicted_count as f64
        };
        let recall = if support == 0 { 0.0 } else { tp / support as f64 };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        weighted += support as f64 * f1;
        per_class.push(ClassMetrics {
            label,
            precision,
            recall,
            f1,
            support,
        });
    }
    let confusion_normalized = confusion
        .iter()
        .map(|row| {
            let s: usize = row.iter().sum();
            row.iter().map(|&v| if s == 0 { 0.0 } else { v as f64 / s as f64 }).collect()
        })
        .collect();

    Ok(EvalReport {
        accuracy: correct as f64 / samples as f64,
        weighted_f1: weighted / samples as f64,
        samples,
        excluded_label: exclude,
        per_class,
        confusion,
        confusion_normalized,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMetric {
    #[default]
    Accuracy,
    WeightedF1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grids {
    pub k: Vec<usize>,
    pub window: Vec<usize>,
}

impl Default for Grids {
    fn default() -> Self {
        Grids {
            k: DEFAULT_K_GRID.to_vec(),
            window: DEFAULT_WINDOW_GRID.to_vec(),
        }
    }
}

impl Grids {
    pub fn validate(&self) -> Result<()> {
        if self.k.is_empty() || self.window.is_empty() {
            return Err(HarError::InvalidInput("k and window grids must be non-empty".into()));
        }
        if self.k.contains(&0) || self.window.contains(&0) {
            return Err(HarError::InvalidInput("grid values must be positive".into()));
        }
        Ok(())
    }

    fn sorted(&self) -> (Vec<usize>, Vec<usize>) {
        let mut k = self.k.clone();
        k.sort_unstable();
        k.dedup();
        let mut w = self.window.clone();
        w.sort_unstable();
        w.dedup();
        (k, w)
    }
}

/// Knobs shared by every stage of the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub skip_truncated: bool,
    pub descriptors: DescriptorOptions,
    pub partition_grid: Vec<f64>,
    pub segment_pairing: SegmentPairing,
    pub dw_grid: Vec<usize>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            skip_truncated: false,
            descriptors: DescriptorOptions::default(),
            partition_grid: default_hour_grid(),
            segment_pairing: SegmentPairing::Subsequence,
            dw_grid: DEFAULT_WINDOW_GRID.to_vec(),
        }
    }
}

/// Models that depend only on the training events, not the window size.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseModels {
    pub features: FeatureModels,
    pub partition: Option<DayPartition>,
    pub dw: Option<DwModel>,
}

/// Fits everything the configuration needs from `train` alone.
pub fn fit_base_models(train: &[SensorEvent], m: usize, cfg: &FeatureConfig, opts: &PipelineOptions) -> Result<BaseModels> {
    let partition = match learn_partition(train, opts.descriptors, &opts.partition_grid) {
        Ok(p) => Some(p),
        Err(e) if cfg.base == BaseMethod::SwmiTemp => return Err(e),
        Err(_) => None,
    };
    let mut features = FeatureModels::default();
    match cfg.base {
        BaseMethod::Swmi | BaseMethod::Swtw => features.mi = Some(mi_global(train, m)?),
        BaseMethod::SwmiAct => features.activity = Some(mi_activity(train, m)?),
        BaseMethod::SwmiTemp => {
            let p = partition.expect("checked above");
            features.temporal = Some(mi_temporal(train, m, p, opts.segment_pairing)?);
        }
        _ => {}
    }
    let dw = if cfg.base == BaseMethod::Dw {
        Some(fit_dw(train, m, &opts.dw_grid)?)
    } else {
        None
    };
    Ok(BaseModels { features, partition, dw })
}

/// Feature matrices for one window size, ready for KNN.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSplit {
    pub models: FeatureModels,
    pub train_x: Vec<Vec<f64>>,
    pub train_y: Vec<ActivityLabel>,
    pub train_triggers: Vec<Timestamp>,
    pub eval_x: Vec<Vec<f64>>,
    pub eval_y: Vec<ActivityLabel>,
    pub eval_triggers: Vec<Timestamp>,
}

fn make_windows<'a>(
    events: &'a [SensorEvent],
    range: Range<usize>,
    window: Option<usize>,
    base: &BaseModels,
    opts: &PipelineOptions,
) -> Result<Vec<LabeledWindow<'a>>> {
    match (&base.dw, window) {
        (Some(dw), _) => dw.windows_in(events, range),
        (None, Some(n)) => windows_in(events, n, range, opts.skip_truncated),
        (None, None) => Err(HarError::InvalidInput("fixed windows need a size".into())),
    }
}

/// Builds training features from `events[train]` and evaluation features for
/// the triggers in `eval`. Evaluation windows may reach back into earlier
/// events for history; no model sees evaluation labels.
#[allow(clippy::too_many_arguments)]
pub fn prepare_split(
    events: &[SensorEvent],
    m: usize,
    train: Range<usize>,
    eval: Range<usize>,
    cfg: &FeatureConfig,
    window: Option<usize>,
    base: &BaseModels,
    opts: &PipelineOptions,
) -> Result<PreparedSplit> {
    let train_events = &events[train.clone()];
    let train_windows = make_windows(train_events, 0..train_events.len(), window, base, opts)?;
    let eval_windows = make_windows(events, eval, window, base, opts)?;
    if train_windows.is_empty() || eval_windows.is_empty() {
        return Err(HarError::InvalidInput("no windows to train or evaluate on".into()));
    }

    let mut models = base.features.clone();
    if cfg.base == BaseMethod::SwmiEx {
        models.cooccurrence = Some(mi_cooccurrence(&train_windows, m)?);
    }
    let extract = |ws: &[LabeledWindow<'_>], models: &FeatureModels| -> Result<Vec<Vec<f64>>> {
        ws.par_iter().map(|w| assemble_raw(w, cfg, m, models)).collect()
    };
    let mut train_x = extract(&train_windows, &models)?;
    let mut eval_x = extract(&eval_windows, &models)?;
    if cfg.scaling == Scaling::MinMax {
        let scaler = MinMaxScaler::fit(&train_x)?;
        for v in train_x.iter_mut().chain(eval_x.iter_mut()) {
            scaler.transform(v)?;
        }
        models.scaler = Some(scaler);
    }
    Ok(PreparedSplit {
        models,
        train_y: train_windows.iter().map(LabeledWindow::label).collect(),
        train_triggers: train_windows.iter().map(LabeledWindow::trigger_timestamp).collect(),
        eval_y: eval_windows.iter().map(LabeledWindow::label).collect(),
        eval_triggers: eval_windows.iter().map(LabeledWindow::trigger_timestamp).collect(),
        train_x,
        eval_x,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridEntry {
    /// `None` for DW, whose window sizes come from the DW model.
    pub window: Option<usize>,
    pub k: usize,
    pub accuracy: Option<f64>,
    pub weighted_f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    pub metric: SelectionMetric,
    pub entries: Vec<GridEntry>,
    pub chosen_window: Option<usize>,
    pub chosen_k: usize,
    pub chosen_score: f64,
}

#[allow(clippy::too_many_arguments)]
fn evaluate_window(
    events: &[SensorEvent],
    m: usize,
    train: Range<usize>,
    eval: Range<usize>,
    cfg: &FeatureConfig,
    window: Option<usize>,
    ks: &[usize],
    base: &BaseModels,
    opts: &PipelineOptions,
) -> Vec<GridEntry> {
    let failed = |k: usize, msg: String| GridEntry {
        window,
        k,
        accuracy: None,
        weighted_f1: None,
        error: Some(msg),
    };
    let split = match prepare_split(events, m, train, eval, cfg, window, base, opts) {
        Ok(s) => s,
        Err(e) => return ks.iter().map(|&k| failed(k, e.to_string())).collect(),
    };
    let n_train = split.train_x.len();
    let usable: Vec<usize> = ks.iter().copied().filter(|&k| k <= n_train).collect();
    let predictions: Result<Vec<Vec<ActivityLabel>>> = if usable.is_empty() {
        Ok(Vec::new())
    } else {
        KnnModel::fit(&split.train_x, &split.train_y, 1)
            .and_then(|knn| split.eval_x.par_iter().map(|x| knn.predict_for_ks(x, &usable)).collect())
    };
    let predictions = match predictions {
        Ok(p) => p,
        Err(e) => return ks.iter().map(|&k| failed(k, e.to_string())).collect(),
    };
    ks.iter()
        .map(|&k| match usable.iter().position(|&u| u == k) {
            None => failed(k, format!("k = {k} exceeds {n_train} training windows")),
            Some(col) => {
                let pred: Vec<ActivityLabel> = predictions.iter().map(|row| row[col]).collect();
                match metrics(&split.eval_y, &pred, None) {
                    Ok(r) => GridEntry {
                        window,
                        k,
                        accuracy: Some(r.accuracy),
                        weighted_f1: Some(r.weighted_f1),
                        error: None,
                    },
                    Err(e) => failed(k, e.to_string()),
                }
            }
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn grid_over(
    events: &[SensorEvent],
    m: usize,
    train: Range<usize>,
    eval: Range<usize>,
    grids: &Grids,
    cfg: &FeatureConfig,
    metric: SelectionMetric,
    opts: &PipelineOptions,
) -> Result<GridResult> {
    grids.validate()?;
    cfg.validate()?;
    let base = fit_base_models(&events[train.clone()], m, cfg, opts)?;
    let (ks, ws) = grids.sorted();
    let windows: Vec<Option<usize>> = if cfg.base == BaseMethod::Dw {
        vec![None]
    } else {
        ws.into_iter().map(Some).collect()
    };
    let entries: Vec<GridEntry> = windows
        .par_iter()
        .map(|&w| evaluate_window(events, m, train.clone(), eval.clone(), cfg, w, &ks, &base, opts))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();

    // entries are ordered by (window, k), so the first maximum wins ties
    let mut best: Option<(&GridEntry, f64)> = None;
    for e in &entries {
        let score = match metric {
            SelectionMetric::Accuracy => e.accuracy,
            SelectionMetric::WeightedF1 => e.weighted_f1,
        };
        if let Some(s) = score {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((e, s));
            }
        }
    }
    let Some((chosen, score)) = best else {
        let first = entries.iter().find_map(|e| e.error.clone()).unwrap_or_default();
        return Err(HarError::InvalidInput(format!("every grid configuration failed; first error: {first}")));
    };
    Ok(GridResult {
        metric,
        chosen_window: chosen.window,
        chosen_k: chosen.k,
        chosen_score: score,
        entries,
    })
}

/// Tunes `(window, k)` on `val` with every model fitted on `train` only.
/// Validation windows draw their history from the end of `train`.
pub fn grid_search(
    train: &EventStream,
    val: &EventStream,
    grids: &Grids,
    cfg: &FeatureConfig,
    metric: SelectionMetric,
    opts: &PipelineOptions,
) -> Result<GridResult> {
    let mut events = train.events.clone();
    events.extend_from_slice(&val.events);
    let m = train.sensor_count().max(val.sensor_count());
    grid_over(&events, m, 0..train.len(), train.len()..events.len(), grids, cfg, metric, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitSizes {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub variant: String,
    pub config: FeatureConfig,
    pub events: usize,
    pub sensors: usize,
    pub other_fraction: f64,
    pub split: SplitSizes,
    /// Partition learned on train + validation.
    pub partition: Option<DayPartition>,
    pub chosen_window: Option<usize>,
    pub chosen_k: usize,
    pub with_other: EvalReport,
    pub without_other: Option<EvalReport>,
    pub grid: GridResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub trigger: Timestamp,
    pub truth: ActivityLabel,
    pub predicted: ActivityLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub report: ExperimentReport,
    pub predictions: Vec<Prediction>,
}

/// Split, tune on validation, refit on train + validation, evaluate on test
/// with and without the Other class.
pub fn run_experiment(
    dataset: &EventStream,
    cfg: &FeatureConfig,
    grids: &Grids,
    ratios: SplitRatios,
    metric: SelectionMetric,
    opts: &PipelineOptions,
) -> Result<Experiment> {
    let (a, b, c) = ratios.sizes(dataset.len())?;
    let events = &dataset.events;
    let m = dataset.sensor_count();
    let grid = grid_over(&events[..a + b], m, 0..a, a..a + b, grids, cfg, metric, opts)?;

    let base = fit_base_models(&events[..a + b], m, cfg, opts)?;
    let split = prepare_split(events, m, 0..a + b, a + b..a + b + c, cfg, grid.chosen_window, &base, opts)?;
    let k = grid.chosen_k.min(split.train_x.len());
    let knn = KnnModel::fit(&split.train_x, &split.train_y, k)?;
    let predicted = knn.predict_batch(&split.eval_x)?;

    let with_other = metrics(&split.eval_y, &predicted, None)?;
    let without_other = match metrics(&split.eval_y, &predicted, Some(ActivityLabel::Other)) {
        Ok(r) => Some(r),
        Err(e) => {
            log::warn!("no evaluation without Other: {e}");
            None
        }
    };
    let predictions = split
        .eval_triggers
        .iter()
        .zip(&split.eval_y)
        .zip(&predicted)
        .map(|((t, y), p)| Prediction {
            trigger: *t,
            truth: *y,
            predicted: *p,
        })
        .collect();

    Ok(Experiment {
        report: ExperimentReport {
            variant: cfg.variant_name(),
            config: *cfg,
            events: dataset.len(),
            sensors: m,
            other_fraction: dataset.other_fraction(),
            split: SplitSizes {
                train: a,
                validation: b,
                test: c,
            },
            partition: base.partition,
            chosen_window: grid.chosen_window,
            chosen_k: k,
            with_other,
            without_other,
            grid,
        },
        predictions,
    })
}

/// Splits the stream and returns the train split, for stages that only fit.
pub fn training_split(dataset: &EventStream, ratios: SplitRatios) -> Result<EventStream> {
    Ok(temporal_split(dataset, ratios)?.0)
}
