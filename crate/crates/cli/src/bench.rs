//! Batch execution of a CSV task list across worker threads.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use anyhow::{bail, Context, Result};

use qnnv::encoder::Norm;
use qnnv::qnn::{parse_dataset, parse_dataset_raw, quantize_value, QuantizedNetwork, RawSample, Sample};
use qnnv::verify::VerdictStatus;

use crate::inputs::{load_quantized, PropertyKind};
use crate::report::{answer, RunReport, Task};

type TaskResult = Result<(RunReport, VerdictStatus)>;

/// One line of the task file.
#[derive(Debug)]
pub struct BenchTask {
    pub model: PathBuf,
    pub sample: usize,
    pub radius: i64,
    pub norm: Norm,
}

/// Flags shared by every task in a batch.
pub struct BenchRun {
    pub tasks_file: PathBuf,
    pub samples_file: PathBuf,
    pub raw: bool,
    pub kind: PropertyKind,
    pub target: Option<usize>,
    pub use_ia: bool,
    pub timeout: Duration,
    pub threads: usize,
}

/// Parses `model,sample,radius,norm` lines. Blank lines and `#` comments are
/// skipped; relative model paths are resolved against the task file's
/// directory.
pub fn parse_tasks(path: &Path) -> Result<Vec<BenchTask>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading task list {}", path.display()))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tasks = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let place = || format!("{}:{}", path.display(), idx + 1);
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [model, sample, radius, norm] = fields[..] else {
            bail!("{}: expected model,sample,radius,norm", place());
        };
        let model = {
            let p = Path::new(model);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        let sample: usize = sample
            .parse()
            .with_context(|| format!("{}: bad sample index {sample:?}", place()))?;
        let radius: i64 = radius
            .parse()
            .with_context(|| format!("{}: bad radius {radius:?}", place()))?;
        if radius < 0 {
            bail!("{}: radius must be nonnegative, got {radius}", place());
        }
        let norm: Norm = norm
            .parse()
            .map_err(anyhow::Error::msg)
            .with_context(place)?;
        tasks.push(BenchTask {
            model,
            sample,
            radius,
            norm,
        });
    }
    if tasks.is_empty() {
        bail!("no tasks in {}", path.display());
    }
    Ok(tasks)
}

/// The dataset tasks index into. Raw values are quantized against each
/// task's own model, so they stay unparsed until a model is known.
enum Dataset {
    Grid(Vec<Sample>),
    Raw(Vec<RawSample>),
}

impl Dataset {
    fn len(&self) -> usize {
        match self {
            Dataset::Grid(v) => v.len(),
            Dataset::Raw(v) => v.len(),
        }
    }

    fn center(&self, idx: usize, net: &QuantizedNetwork) -> Result<Vec<i64>> {
        if idx >= self.len() {
            bail!("no sample {idx}; the dataset has {}", self.len());
        }
        let values: Vec<i64> = match self {
            Dataset::Grid(v) => v[idx].values.clone(),
            Dataset::Raw(v) => v[idx]
                .values
                .iter()
                .map(|u| quantize_value(u, net.cfg_in()))
                .collect(),
        };
        if values.len() != net.input_dim() {
            bail!(
                "sample {idx} has {} values but the model takes {}",
                values.len(),
                net.input_dim()
            );
        }
        if matches!(self, Dataset::Grid(_)) {
            if let Some(&v) = values.iter().find(|v| !net.cfg_in().contains(**v)) {
                bail!("sample {idx} value {v} is outside the model's input grid");
            }
        }
        Ok(values)
    }
}

/// Runs every task and returns the reports in task order plus whether any
/// task timed out. Workers claim task indices from a shared counter, so a
/// slow task never blocks the rest of the queue.
pub fn run(cfg: &BenchRun) -> Result<(Vec<RunReport>, bool)> {
    let tasks = parse_tasks(&cfg.tasks_file)?;
    let text = std::fs::read_to_string(&cfg.samples_file)
        .with_context(|| format!("reading dataset {}", cfg.samples_file.display()))?;
    let dataset = if cfg.raw {
        Dataset::Raw(parse_dataset_raw(&text)?)
    } else {
        Dataset::Grid(parse_dataset(&text)?)
    };
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<TaskResult>>> = Mutex::new((0..tasks.len()).map(|_| None).collect());
    let workers = cfg.threads.min(tasks.len()).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| {
                let mut models: HashMap<PathBuf, QuantizedNetwork> = HashMap::new();
                loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= tasks.len() {
                        break;
                    }
                    let out = run_one(&tasks[i], i, &dataset, cfg, &mut models);
                    slots.lock().unwrap()[i] = Some(out);
                }
            });
        }
    });
    let mut reports = Vec::with_capacity(tasks.len());
    let mut any_timeout = false;
    for (i, slot) in slots.into_inner().unwrap().into_iter().enumerate() {
        let (report, status) = slot
            .expect("every task index is claimed by a worker")
            .with_context(|| format!("task {i}"))?;
        any_timeout |= matches!(status, VerdictStatus::Timeout);
        reports.push(report);
    }
    Ok((reports, any_timeout))
}

fn run_one(
    task: &BenchTask,
    id: usize,
    dataset: &Dataset,
    cfg: &BenchRun,
    models: &mut HashMap<PathBuf, QuantizedNetwork>,
) -> TaskResult {
    let net = match models.entry(task.model.clone()) {
        Entry::Occupied(e) => e.into_mut(),
        Entry::Vacant(v) => v.insert(load_quantized(&task.model)?),
    };
    let center = dataset.center(task.sample, net)?;
    answer(&Task {
        id,
        model_path: &task.model,
        net,
        input_id: task.sample,
        center: &center,
        radius: task.radius,
        norm: task.norm,
        kind: cfg.kind,
        target: cfg.target,
        use_ia: cfg.use_ia,
        timeout: cfg.timeout,
    })
}
