//! Per-question run reports: building them, and writing them as JSON or CSV.

use std::path::Path;
use std::time::Duration;

use anyhow::Result;
use serde::Serialize;

use qnnv::encoder::{build_verification_model, Norm};
use qnnv::ilp::Deadline;
use qnnv::qnn::QuantizedNetwork;
use qnnv::verify::{verify_robustness, VerdictStatus};

use crate::inputs::{region, resolve_property, PropertyKind};

/// One robustness question: a model, a region around a dataset sample, and a
/// property, under a time budget.
pub struct Task<'a> {
    pub id: usize,
    pub model_path: &'a Path,
    pub net: &'a QuantizedNetwork,
    pub input_id: usize,
    pub center: &'a [i64],
    pub radius: i64,
    pub norm: Norm,
    pub kind: PropertyKind,
    pub target: Option<usize>,
    pub use_ia: bool,
    pub timeout: Duration,
}

/// What one question cost and what it decided.
#[derive(Clone, Serialize)]
pub struct RunReport {
    pub task: usize,
    pub model: String,
    pub input: usize,
    pub radius: i64,
    pub norm: String,
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Vec<i64>>,
    pub encode_seconds: f64,
    pub solve_seconds: f64,
    pub booleans: usize,
    /// Fraction of booleans removed by interval analysis, against the same
    /// encoding built without it. Zero when interval analysis is off.
    pub ia_reduction: f64,
}

pub fn verdict_name(status: &VerdictStatus) -> &'static str {
    match status {
        VerdictStatus::Robust => "robust",
        VerdictStatus::NonRobust { .. } => "non-robust",
        VerdictStatus::Timeout => "timeout",
    }
}

/// Grid point rendered as space-separated coordinates.
pub fn point_string(point: &[i64]) -> String {
    point
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Answers one question and packages the outcome.
pub fn answer(task: &Task) -> Result<(RunReport, VerdictStatus)> {
    let region = region(task.center, task.radius, task.norm);
    let property = resolve_property(task.kind, task.target, task.net, task.center)?;
    let deadline = Deadline::after(task.timeout);
    let verdict = verify_robustness(task.net, &region, &property, task.use_ia, &deadline)?;
    let booleans = verdict.stats.counts.total_booleans();
    let ia_reduction = if task.use_ia {
        let plain = build_verification_model(task.net, &region, &property, false)?;
        let without = plain.counts.total_booleans();
        if without == 0 {
            0.0
        } else {
            (without - booleans) as f64 / without as f64
        }
    } else {
        0.0
    };
    let counterexample = match &verdict.status {
        VerdictStatus::NonRobust { counterexample } => Some(counterexample.clone()),
        _ => None,
    };
    let report = RunReport {
        task: task.id,
        model: task.model_path.display().to_string(),
        input: task.input_id,
        radius: task.radius,
        norm: task.norm.to_string(),
        verdict: verdict_name(&verdict.status).to_string(),
        counterexample,
        encode_seconds: verdict.stats.encode_elapsed.as_secs_f64(),
        solve_seconds: verdict.stats.solve_elapsed.as_secs_f64(),
        booleans,
        ia_reduction,
    };
    Ok((report, verdict.status))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub const CSV_HEADER: &str =
    "task,model,input,radius,norm,verdict,counterexample,encode_seconds,solve_seconds,booleans,ia_reduction";

pub fn csv_row(r: &RunReport) -> String {
    let cex = r
        .counterexample
        .as_deref()
        .map(point_string)
        .unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{},{:.6},{:.6},{},{:.4}",
        r.task,
        r.model,
        r.input,
        r.radius,
        r.norm,
        r.verdict,
        cex,
        r.encode_seconds,
        r.solve_seconds,
        r.booleans,
        r.ia_reduction
    )
}

/// Summary line for a batch: how many questions were decided in time and how
/// long the decided ones took to solve.
pub fn csv_summary(reports: &[RunReport]) -> String {
    let total = reports.len();
    let solved = reports.iter().filter(|r| r.verdict != "timeout").count();
    let rate = if total == 0 {
        100.0
    } else {
        100.0 * solved as f64 / total as f64
    };
    // fold, not sum: an empty f64 sum is -0.0, which would print as -0.000000.
    let solve_seconds = reports
        .iter()
        .filter(|r| r.verdict != "timeout")
        .map(|r| r.solve_seconds)
        .fold(0.0, |acc, s| acc + s);
    format!("summary,tasks={total},solved={solved},success_rate={rate:.1}%,solve_seconds={solve_seconds:.6}")
}

/// Radius search outcome for one sample.
#[derive(Clone, Serialize)]
pub struct MrrReport {
    pub input: usize,
    /// Largest radius proven robust; absent when the property is violated at
    /// the sample itself or the search timed out.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mrr: Option<i64>,
    /// The proven radius already reaches the covering radius, so every grid
    /// point lies inside the region.
    pub capped: bool,
    pub covering_radius: i64,
    pub timed_out: bool,
    pub seconds: f64,
    /// Radii probed with an exact verdict, in probe order.
    pub probes: Vec<(i64, bool)>,
}

/// A whole radius-search run: per-sample outcomes plus the mean over the
/// samples whose radius is defined.
#[derive(Serialize)]
pub struct MrrRun {
    pub samples: Vec<MrrReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_mrr: Option<f64>,
}

/// Mean of the defined radii to one decimal, or `"undefined"` when no sample
/// has one.
pub fn mean_mrr(radii: &[i64]) -> String {
    if radii.is_empty() {
        return "undefined".into();
    }
    let mean = radii.iter().sum::<i64>() as f64 / radii.len() as f64;
    format!("{mean:.1}")
}

/// Counts of defined radii in buckets of ten, rendered one bucket per line
/// and skipping empty buckets.
pub fn mrr_histogram(radii: &[i64]) -> Vec<String> {
    let mut buckets: std::collections::BTreeMap<i64, usize> = std::collections::BTreeMap::new();
    for &r in radii {
        *buckets.entry(r.div_euclid(10)).or_default() += 1;
    }
    buckets
        .into_iter()
        .map(|(b, n)| format!("  [{},{}]: {n}", 10 * b, 10 * b + 9))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rows_hold_counterexamples_and_empty_cells() {
        let r = RunReport {
            task: 3,
            model: "m.json".into(),
            input: 1,
            radius: 2,
            norm: "linf".into(),
            verdict: "non-robust".into(),
            counterexample: Some(vec![10, 3]),
            encode_seconds: 0.25,
            solve_seconds: 0.5,
            booleans: 13,
            ia_reduction: 0.5,
        };
        assert_eq!(
            csv_row(&r),
            "3,m.json,1,2,linf,non-robust,10 3,0.250000,0.500000,13,0.5000"
        );
        let empty = RunReport {
            counterexample: None,
            verdict: "robust".into(),
            ..r
        };
        assert!(csv_row(&empty).contains(",robust,,"));
    }

    #[test]
    fn summaries_count_only_decided_tasks() {
        let base = RunReport {
            task: 0,
            model: "m".into(),
            input: 0,
            radius: 1,
            norm: "l1".into(),
            verdict: "robust".into(),
            counterexample: None,
            encode_seconds: 0.0,
            solve_seconds: 1.0,
            booleans: 0,
            ia_reduction: 0.0,
        };
        let timeout = RunReport {
            verdict: "timeout".into(),
            solve_seconds: 9.0,
            ..base.clone()
        };
        let rows = vec![base.clone(), base, timeout];
        assert_eq!(
            csv_summary(&rows),
            "summary,tasks=3,solved=2,success_rate=66.7%,solve_seconds=2.000000"
        );
    }

    #[test]
    fn mrr_summaries_round_and_bucket() {
        assert_eq!(mean_mrr(&[]), "undefined");
        assert_eq!(mean_mrr(&[0, 1, 10]), "3.7");
        let lines = mrr_histogram(&[0, 3, 9, 10, 47]);
        assert_eq!(lines, vec!["  [0,9]: 3", "  [10,19]: 1", "  [40,49]: 1"]);
    }
}
