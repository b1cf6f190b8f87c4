//! Output artifacts: report JSON, metrics CSV, prediction CSV and the
//! confusion-matrix heatmap.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::Result;
use crate::evaluation::{EvalReport, Experiment, ExperimentReport};
use crate::label::ActivityLabel;

#[derive(Serialize)]
struct ReportDoc<'a> {
    dataset: &'a str,
    #[serde(flatten)]
    report: &'a ExperimentReport,
}

pub fn report_json(dataset: &str, report: &ExperimentReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&ReportDoc { dataset, report })?;
    s.push('\n');
    Ok(s)
}

pub const METRICS_HEADER: &str = "dataset,method,acc,f1,acc_no_other,f1_no_other,window,k,status";

/// One metrics row; failed variants keep empty metric cells.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub dataset: String,
    pub method: String,
    pub outcome: std::result::Result<ExperimentReport, String>,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for row in rows {
        let _ = write!(out, "{},{},", csv_field(&row.dataset), csv_field(&row.method));
        match &row.outcome {
            Ok(r) => {
                let (a2, f2) = r
                    .without_other
                    .as_ref()
                    .map(|w| (format!("{:.6}", w.accuracy), format!("{:.6}", w.weighted_f1)))
                    .unwrap_or_default();
                let window = r.chosen_window.map(|w| w.to_string()).unwrap_or_else(|| "dynamic".into());
                let _ = writeln!(
                    out,
                    "{:.6},{:.6},{a2},{f2},{window},{},ok",
                    r.with_other.accuracy, r.with_other.weighted_f1, r.chosen_k
                );
            }
            Err(e) => {
                let _ = writeln!(out, ",,,,,,{}", csv_field(&format!("failed: {e}")));
            }
        }
    }
    out
}

pub fn predictions_csv(experiment: &Experiment) -> String {
    let mut out = String::from("trigger_timestamp,true_label,predicted_label\n");
    for p in &experiment.predictions {
        let _ = writeln!(out, "{},{},{}", p.trigger.format("%Y-%m-%d %H:%M:%S%.6f"), p.truth, p.predicted);
    }
    out
}

/// Row-normalized confusion heatmap over all canonical classes.
pub fn confusion_svg(report: &EvalReport, title: &str) -> String {
    const CELL: usize = 44;
    const LEFT: usize = 150;
    const TOP: usize = 60;
    let n = ActivityLabel::COUNT;
    let width = LEFT + n * CELL + 20;
    let height = TOP + n * CELL + 130;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{LEFT}" y="24" font-size="14">{}</text>"#, xml_escape(title));
    let _ = writeln!(
        s,
        r#"<text x="{LEFT}" y="44">rows: true label, columns: predicted (row-normalized)</text>"#
    );
    for (i, label) in ActivityLabel::ALL.iter().enumerate() {
        let y = TOP + i * CELL + CELL / 2 + 4;
        let _ = writeln!(s, r#"<text x="{}" y="{y}" text-anchor="end">{i}) {label}</text>"#, LEFT - 6);
        let x = LEFT + i * CELL + CELL / 2;
        let ly = TOP + n * CELL + 12;
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{ly}" text-anchor="end" transform="rotate(-60 {x} {ly})">{i}) {label}</text>"#
        );
    }
    for (i, row) in report.confusion_normalized.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let shade = (255.0 - v.clamp(0.0, 1.0) * 200.0).round() as u8;
            let x = LEFT + j * CELL;
            let y = TOP + i * CELL;
            let _ = writeln!(
                s,
                r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="rgb({shade},{shade},255)" stroke="rgb(204,204,204)"/>"#
            );
            if *v > 0.0 {
                let color = if *v > 0.6 { "white" } else { "black" };
                let _ = writeln!(
                    s,
                    r#"<text x="{}" y="{}" text-anchor="middle" fill="{color}">{v:.2}</text>"#,
                    x + CELL / 2,
                    y + CELL / 2 + 4
                );
            }
        }
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
