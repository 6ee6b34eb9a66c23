//! `qnnv`: exact robustness verification for quantized feed-forward ReLU
//! networks from the command line.
//!
//! Exit codes: 0 when every question was decided, 2 when any question timed
//! out, 1 on usage or input errors.

mod bench;
mod inputs;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use qnnv::encoder::{build_verification_model, Norm};
use qnnv::ilp::{export_lp, Deadline};
use qnnv::qnn::{
    classify, load_model_file, qnn_forward, quantize_network, save_quantized, QuantConfig, Sign,
};
use qnnv::verify::{compute_mrr, RadiusSearch, VerdictStatus};

use bench::BenchRun;
use inputs::{load_quantized, load_samples, parse_cfg, pick, region, resolve_property, PropertyKind};
use report::{
    answer, csv_row, csv_summary, mean_mrr, mrr_histogram, point_string, verdict_name, write_json,
    MrrReport, MrrRun, Task, CSV_HEADER,
};

#[derive(Parser)]
#[command(
    name = "qnnv",
    version,
    about = "Exact robustness verification for quantized feed-forward ReLU networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide robustness of each sample within a fixed radius.
    Verify(VerifyArgs),
    /// Search for the maximum robustness radius of each sample.
    Mrr(MrrArgs),
    /// Write one robustness question as an LP file.
    Encode(EncodeArgs),
    /// Quantize a real-valued model onto fixed-point grids.
    Quantize(QuantizeArgs),
    /// Report classification accuracy over a dataset.
    Eval(EvalArgs),
    /// Run a CSV task list and write per-task reports.
    Bench(BenchArgs),
}

/// Where the model and its inputs come from.
#[derive(Args)]
struct Source {
    /// Quantized model JSON file.
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// Dataset CSV file, one `label,v_1,...,v_n` line per sample.
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Treat dataset values as real numbers and quantize them onto the
    /// model's input grid.
    #[arg(long)]
    raw: bool,
}

/// Which property to verify and how to encode it.
#[derive(Args)]
struct Question {
    /// Property to verify: a class change or any output change.
    #[arg(long, value_enum, default_value_t = PropertyKind::Class)]
    property: PropertyKind,
    /// Target class for `--property class`; defaults to the model's own
    /// class at each sample.
    #[arg(long)]
    target: Option<usize>,
    /// Build encodings without interval-analysis simplification.
    #[arg(long)]
    no_ia: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    source: Source,
    /// Sample index to verify; every sample when absent.
    #[arg(long)]
    sample: Option<usize>,
    /// Region radius.
    #[arg(long)]
    radius: i64,
    /// Region norm: l0, l1, l2 or linf.
    #[arg(long, default_value = "linf")]
    norm: Norm,
    #[command(flatten)]
    question: Question,
    /// Time budget per sample, in seconds.
    #[arg(long, default_value_t = 7200)]
    timeout: u64,
    /// Write per-sample run reports to this JSON file.
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct MrrArgs {
    #[command(flatten)]
    source: Source,
    /// Sample index to search; every sample when absent.
    #[arg(long)]
    sample: Option<usize>,
    /// Region norm: l0, l1, l2 or linf.
    #[arg(long, default_value = "linf")]
    norm: Norm,
    #[command(flatten)]
    question: Question,
    /// First upper probe of the bracketing phase.
    #[arg(long, default_value_t = 10)]
    start_r: i64,
    /// Increment added while the upper probe stays robust.
    #[arg(long, default_value_t = 10)]
    step: i64,
    /// Time budget per sample, in seconds.
    #[arg(long, default_value_t = 7200)]
    timeout: u64,
    /// Write per-sample search reports to this JSON file.
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct EncodeArgs {
    #[command(flatten)]
    source: Source,
    /// Sample index the region is centered on.
    #[arg(long, default_value_t = 0)]
    sample: usize,
    /// Region radius.
    #[arg(long)]
    radius: i64,
    /// Region norm: l0, l1, l2 or linf.
    #[arg(long, default_value = "linf")]
    norm: Norm,
    #[command(flatten)]
    question: Question,
    /// Write the LP here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QuantizeArgs {
    /// Real-valued model JSON file.
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// Where to write the quantized model.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Bit-width preset Q in {4, 6, 8, 10}: inputs on +,8,8, weights on
    /// +-,Q,Q-1, biases on +-,Q,Q-2, outputs on +,Q,Q-2.
    #[arg(
        long,
        conflicts_with_all = ["cfg_in", "cfg_w", "cfg_b", "cfg_out_hidden", "cfg_out_last"]
    )]
    preset: Option<u32>,
    /// Input grid, as sign,bits,frac (sign + or +-), e.g. +,6,4.
    #[arg(long, value_name = "CFG", value_parser = parse_cfg)]
    cfg_in: Option<QuantConfig>,
    /// Weight grid, as sign,bits,frac.
    #[arg(long, value_name = "CFG", value_parser = parse_cfg)]
    cfg_w: Option<QuantConfig>,
    /// Bias grid, as sign,bits,frac.
    #[arg(long, value_name = "CFG", value_parser = parse_cfg)]
    cfg_b: Option<QuantConfig>,
    /// Hidden-layer output grid, as sign,bits,frac.
    #[arg(long, value_name = "CFG", value_parser = parse_cfg)]
    cfg_out_hidden: Option<QuantConfig>,
    /// Last-layer output grid, as sign,bits,frac.
    #[arg(long, value_name = "CFG", value_parser = parse_cfg)]
    cfg_out_last: Option<QuantConfig>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    source: Source,
}

#[derive(Args)]
struct BenchArgs {
    /// Task list CSV, one `model,sample,radius,norm` line per task; model
    /// paths are resolved relative to this file.
    #[arg(long, value_name = "FILE")]
    tasks: PathBuf,
    /// Dataset CSV the task sample indices refer into.
    #[arg(long, value_name = "FILE")]
    samples: PathBuf,
    /// Treat dataset values as real numbers and quantize them per model.
    #[arg(long)]
    raw: bool,
    #[command(flatten)]
    question: Question,
    /// Time budget per task, in seconds.
    #[arg(long, default_value_t = 7200)]
    timeout: u64,
    /// Worker threads; defaults to the QNNV_THREADS environment variable,
    /// then to 1.
    #[arg(long)]
    threads: Option<usize>,
    /// Write the CSV report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests succeed; everything else is a usage
            // error.
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// Dispatches one parsed command; the flag says whether any question timed
/// out.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Verify(args) => cmd_verify(args),
        Command::Mrr(args) => cmd_mrr(args),
        Command::Encode(args) => cmd_encode(args),
        Command::Quantize(args) => cmd_quantize(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Bench(args) => cmd_bench(args),
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<bool> {
    if args.radius < 0 {
        bail!("--radius must be nonnegative, got {}", args.radius);
    }
    let net = load_quantized(&args.source.model)?;
    let samples = load_samples(&args.source.input, args.source.raw, &net)?;
    let mut reports = Vec::new();
    let mut any_timeout = false;
    for (task_id, (input_id, sample)) in pick(samples, args.sample)?.into_iter().enumerate() {
        let (report, status) = answer(&Task {
            id: task_id,
            model_path: &args.source.model,
            net: &net,
            input_id,
            center: &sample.values,
            radius: args.radius,
            norm: args.norm,
            kind: args.question.property,
            target: args.question.target,
            use_ia: !args.question.no_ia,
            timeout: Duration::from_secs(args.timeout),
        })?;
        match &status {
            VerdictStatus::NonRobust { counterexample } => println!(
                "sample {input_id}: non-robust (counterexample {})",
                point_string(counterexample)
            ),
            s => println!("sample {input_id}: {}", verdict_name(s)),
        }
        any_timeout |= matches!(status, VerdictStatus::Timeout);
        reports.push(report);
    }
    if let Some(path) = &args.json {
        write_json(path, &reports)?;
    }
    Ok(any_timeout)
}

fn cmd_mrr(args: MrrArgs) -> Result<bool> {
    let net = load_quantized(&args.source.model)?;
    let samples = load_samples(&args.source.input, args.source.raw, &net)?;
    let search = RadiusSearch {
        start_r: args.start_r,
        step: args.step,
    };
    let mut rows = Vec::new();
    let mut defined = Vec::new();
    let mut any_timeout = false;
    for (input_id, sample) in pick(samples, args.sample)? {
        let property = resolve_property(
            args.question.property,
            args.question.target,
            &net,
            &sample.values,
        )?;
        let deadline = Deadline::after(Duration::from_secs(args.timeout));
        let out = compute_mrr(
            &net,
            &sample.values,
            args.norm,
            &property,
            !args.question.no_ia,
            search,
            &deadline,
        )?;
        match out.mrr {
            Some(r) if out.capped => {
                println!("sample {input_id}: mrr {r} (the region covers the whole input grid)")
            }
            Some(r) => println!("sample {input_id}: mrr {r}"),
            None if out.timed_out => {
                println!("sample {input_id}: timeout");
                any_timeout = true;
            }
            None => println!("sample {input_id}: mrr undefined (violated at the sample itself)"),
        }
        defined.extend(out.mrr);
        rows.push(MrrReport {
            input: input_id,
            mrr: out.mrr,
            capped: out.capped,
            covering_radius: out.covering_radius,
            timed_out: out.timed_out,
            seconds: out.elapsed.as_secs_f64(),
            probes: out.probes.iter().map(|p| (p.radius, p.robust)).collect(),
        });
    }
    println!(
        "mean mrr {} over {} samples",
        mean_mrr(&defined),
        defined.len()
    );
    let hist = mrr_histogram(&defined);
    if !hist.is_empty() {
        println!("histogram:");
        for line in hist {
            println!("{line}");
        }
    }
    if let Some(path) = &args.json {
        let mean = (!defined.is_empty())
            .then(|| defined.iter().sum::<i64>() as f64 / defined.len() as f64);
        write_json(
            path,
            &MrrRun {
                samples: rows,
                mean_mrr: mean,
            },
        )?;
    }
    Ok(any_timeout)
}

fn cmd_encode(args: EncodeArgs) -> Result<bool> {
    if args.radius < 0 {
        bail!("--radius must be nonnegative, got {}", args.radius);
    }
    let net = load_quantized(&args.source.model)?;
    let samples = load_samples(&args.source.input, args.source.raw, &net)?;
    let picked = pick(samples, Some(args.sample))?;
    let (_, sample) = &picked[0];
    let property = resolve_property(
        args.question.property,
        args.question.target,
        &net,
        &sample.values,
    )?;
    let region = region(&sample.values, args.radius, args.norm);
    let mut enc = build_verification_model(&net, &region, &property, !args.question.no_ia)?;
    enc.model.normalize();
    let lp = export_lp(&enc.model)?;
    match &args.out {
        Some(path) => {
            std::fs::write(path, &lp).with_context(|| format!("writing {}", path.display()))?;
            println!(
                "wrote {} ({} rows, {} booleans)",
                path.display(),
                enc.model.constraints().len(),
                enc.counts.total_booleans()
            );
        }
        None => print!("{lp}"),
    }
    Ok(false)
}

/// Fixed-point grids for a total bit width Q: inputs keep 8 fraction bits,
/// weights carry one integer bit, biases and outputs carry two.
fn preset_cfgs(q: u32) -> Result<[QuantConfig; 5]> {
    if ![4, 6, 8, 10].contains(&q) {
        bail!("--preset must be 4, 6, 8 or 10, got {q}");
    }
    Ok([
        QuantConfig::new(Sign::Unsigned, 8, 8)?,
        QuantConfig::new(Sign::Signed, q, q - 1)?,
        QuantConfig::new(Sign::Signed, q, q - 2)?,
        QuantConfig::new(Sign::Unsigned, q, q - 2)?,
        QuantConfig::new(Sign::Unsigned, q, q - 2)?,
    ])
}

fn cmd_quantize(args: QuantizeArgs) -> Result<bool> {
    let file = load_model_file(&args.model)
        .with_context(|| format!("reading model {}", args.model.display()))?;
    let real = file
        .to_real()
        .with_context(|| format!("loading model {}", args.model.display()))?;
    let cfgs = match args.preset {
        Some(q) => preset_cfgs(q)?,
        None => match (
            args.cfg_in,
            args.cfg_w,
            args.cfg_b,
            args.cfg_out_hidden,
            args.cfg_out_last,
        ) {
            (Some(a), Some(b), Some(c), Some(d), Some(e)) => [a, b, c, d, e],
            _ => bail!("give --preset or all five --cfg-* grids"),
        },
    };
    let [cfg_in, cfg_w, cfg_b, cfg_out_hidden, cfg_out_last] = cfgs;
    let net = quantize_network(&real, cfg_in, cfg_w, cfg_b, cfg_out_hidden, cfg_out_last)?;
    save_quantized(&args.out, &net)
        .with_context(|| format!("writing {}", args.out.display()))?;
    let widths: Vec<String> = net.widths().iter().map(|w| w.to_string()).collect();
    println!("wrote {} (widths {})", args.out.display(), widths.join("x"));
    Ok(false)
}

fn cmd_eval(args: EvalArgs) -> Result<bool> {
    let net = load_quantized(&args.source.model)?;
    let samples = load_samples(&args.source.input, args.source.raw, &net)?;
    let total = samples.len();
    let mut correct = 0usize;
    for s in &samples {
        let class = classify(&qnn_forward(&net, &s.values)?)?;
        if class as i64 == s.label {
            correct += 1;
        }
    }
    println!(
        "accuracy {:.1}% ({correct}/{total})",
        100.0 * correct as f64 / total as f64
    );
    Ok(false)
}

fn cmd_bench(args: BenchArgs) -> Result<bool> {
    let threads = match args.threads {
        Some(t) => t,
        None => match std::env::var("QNNV_THREADS") {
            Ok(v) => v
                .trim()
                .parse()
                .with_context(|| format!("QNNV_THREADS must be a thread count, got {v:?}"))?,
            Err(_) => 1,
        },
    };
    if threads == 0 {
        bail!("--threads must be at least 1");
    }
    let run = BenchRun {
        tasks_file: args.tasks,
        samples_file: args.samples,
        raw: args.raw,
        kind: args.question.property,
        target: args.question.target,
        use_ia: !args.question.no_ia,
        timeout: Duration::from_secs(args.timeout),
        threads,
    };
    let (reports, any_timeout) = bench::run(&run)?;
    let mut text = String::from(CSV_HEADER);
    text.push('\n');
    for r in &reports {
        text.push_str(&csv_row(r));
        text.push('\n');
    }
    text.push_str(&csv_summary(&reports));
    text.push('\n');
    match &args.out {
        Some(path) => {
            std::fs::write(path, &text)
                .with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {} ({} tasks)", path.display(), reports.len());
        }
        None => print!("{text}"),
    }
    Ok(any_timeout)
}
