//! End-to-end gate for the crate. Ten checks cover the worked example, the
//! staircase and network encodings against exhaustive oracles, verdict and
//! radius-search correctness against brute force, interval soundness, and
//! the exported LP artifact. Each check prints one PASS/FAIL line (run with
//! `--nocapture` to see them on success); the test fails if any check fails
//! or runs over its time budget.
//!
//! Randomized checks use fixed seeds, so every run sees the same instances.
//! Golden files are refreshed by running with `QNNV_BLESS=1` after a change
//! that intentionally alters the export.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand_chacha::ChaCha8Rng;
use rand::{Rng, SeedableRng};

use qnnv::encoder::{
    build_forward_model, build_verification_model, encode_piecewise_constant, Breakpoint,
    InputRegionSpec, NeuronRef, Norm, PiecewiseConstant, PropertySpec,
};
use qnnv::ilp::{export_lp, solve, Deadline, IlpModel, LinExpr, Rat, SolveStatus};
use qnnv::interval::{input_intervals, propagate};
use qnnv::qnn::{
    classify, load_model_file, parse_decimal, qnn_forward, qnn_forward_layers, quantize_value,
    QuantConfig, QuantizedLayer, QuantizedNetwork, Sign,
};
use qnnv::verify::{
    brute_force_verify, compute_mrr, region_contains, validate_counterexample, verify_robustness,
    RadiusSearch, VerdictStatus,
};

const BRUTE_CAP: u128 = 1_000_000;

fn fixture_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn packaged_qnn() -> QuantizedNetwork {
    load_model_file(&fixture_path("running-qnn.json"))
        .expect("packaged model loads")
        .to_quantized()
        .expect("packaged model is quantized")
}

/// One random network: up to 3 inputs, one hidden layer of up to 4 neurons,
/// 3- or 4-bit quantization throughout.
fn random_qnn(rng: &mut ChaCha8Rng, min_outputs: usize) -> QuantizedNetwork {
    let q = if rng.random_bool(0.5) { 3 } else { 4 };
    let n_in = rng.random_range(1..=3);
    let n_hidden = rng.random_range(1..=4);
    let n_out = rng.random_range(min_outputs..=3);

    let cfg_in = QuantConfig::new(Sign::Unsigned, q, q - 1).unwrap();
    let cfg_w = QuantConfig::new(Sign::Signed, q, q - 1).unwrap();
    let cfg_b = QuantConfig::new(Sign::Signed, q, q - 2).unwrap();
    let cfg_out_hidden = QuantConfig::new(Sign::Unsigned, q, q - 2).unwrap();
    let cfg_out_last = QuantConfig::new(Sign::Signed, q, q - 2).unwrap();

    let layer = |rows: usize, cols: usize, rng: &mut ChaCha8Rng| QuantizedLayer {
        weights: (0..rows)
            .map(|_| {
                (0..cols)
                    .map(|_| rng.random_range(cfg_w.lb()..=cfg_w.ub()))
                    .collect()
            })
            .collect(),
        bias: (0..rows)
            .map(|_| rng.random_range(cfg_b.lb()..=cfg_b.ub()))
            .collect(),
    };
    let layers = vec![layer(n_hidden, n_in, rng), layer(n_out, n_hidden, rng)];
    QuantizedNetwork::new(layers, cfg_in, cfg_w, cfg_b, cfg_out_hidden, cfg_out_last).unwrap()
}

fn random_grid_point(rng: &mut ChaCha8Rng, net: &QuantizedNetwork) -> Vec<i64> {
    let cfg = net.cfg_in();
    (0..net.input_dim())
        .map(|_| rng.random_range(cfg.lb()..=cfg.ub()))
        .collect()
}

/// A point inside the region, by rejection from its bounding box; falls back
/// to the center if the box is too sparse.
fn random_region_point(rng: &mut ChaCha8Rng, net: &QuantizedNetwork, region: &InputRegionSpec) -> Vec<i64> {
    let bounds = input_intervals(region, net.cfg_in());
    for _ in 0..500 {
        let p: Vec<i64> = bounds
            .iter()
            .map(|b| rng.random_range(b.lo..=b.hi))
            .collect();
        if region_contains(region, &p) {
            return p;
        }
    }
    region.center.clone()
}

/// Network size facts a built encoding is checked against.
struct SizeRecord {
    network_rows: usize,
    network_vars: usize,
    non_input_neurons: usize,
    neuron_count: usize,
    max_span: usize,
}

impl SizeRecord {
    fn new(net: &QuantizedNetwork, counts: &qnnv::encoder::EncodingCounts) -> SizeRecord {
        let max_span = (0..net.layers().len())
            .map(|t| {
                let (lo, hi) = net.layer_range(t);
                (hi - lo) as usize
            })
            .max()
            .unwrap();
        SizeRecord {
            network_rows: counts.network_rows,
            network_vars: counts.network_vars,
            non_input_neurons: net.neuron_count() - net.input_dim(),
            neuron_count: net.neuron_count(),
            max_span,
        }
    }

    fn within_bounds(&self) -> bool {
        self.network_rows <= 4 * self.non_input_neurons
            && self.network_vars <= (self.max_span + 2) * self.neuron_count
    }
}

/// Everything one verdict-equivalence instance leaves behind for the
/// size-bound and interval-effectiveness checks.
struct InstanceRecord {
    radius: i64,
    booleans_with_ia: usize,
    booleans_without_ia: usize,
    verdicts_agree: bool,
}

struct Failure {
    index: usize,
    name: &'static str,
    reason: String,
}

fn run_check(
    index: usize,
    name: &'static str,
    budget: Duration,
    failures: &mut Vec<Failure>,
    body: impl FnOnce() -> Result<String, String>,
) {
    let start = Instant::now();
    let outcome = body();
    let elapsed = start.elapsed();
    let outcome = match outcome {
        Ok(_) if elapsed > budget => Err(format!(
            "over budget: {elapsed:.2?} > {budget:.2?}"
        )),
        other => other,
    };
    match outcome {
        Ok(detail) => {
            println!("acceptance {index:>2}/10 PASS ({elapsed:>8.2?}) {name}: {detail}");
        }
        Err(reason) => {
            println!("acceptance {index:>2}/10 FAIL ({elapsed:>8.2?}) {name}: {reason}");
            failures.push(Failure {
                index,
                name,
                reason,
            });
        }
    }
}

#[test]
fn acceptance() {
    let mut failures = Vec::new();
    let mut sizes: Vec<SizeRecord> = Vec::new();
    let mut instances: Vec<InstanceRecord> = Vec::new();

    run_check(1, "worked example", Duration::from_secs(1), &mut failures, || {
        check_worked_example()
    });
    run_check(2, "region projection", Duration::from_secs(1), &mut failures, || {
        check_region_projection()
    });
    run_check(3, "staircase exactness", Duration::from_secs(60), &mut failures, || {
        check_staircase_exactness()
    });
    run_check(4, "network forward consistency", Duration::from_secs(300), &mut failures, || {
        check_forward_consistency(&mut sizes)
    });
    run_check(5, "verdict oracle equivalence", Duration::from_secs(900), &mut failures, || {
        check_verdict_equivalence(&mut sizes, &mut instances)
    });
    run_check(6, "encoding size bounds", Duration::from_secs(60), &mut failures, || {
        check_size_bounds(&sizes)
    });
    run_check(7, "interval-analysis effectiveness", Duration::from_secs(60), &mut failures, || {
        check_ia_effectiveness(&instances)
    });
    run_check(8, "radius search certification", Duration::from_secs(600), &mut failures, || {
        check_mrr_certification()
    });
    run_check(9, "interval soundness", Duration::from_secs(120), &mut failures, || {
        check_interval_soundness()
    });
    run_check(10, "lp export golden file", Duration::from_secs(60), &mut failures, || {
        check_lp_golden()
    });

    if !failures.is_empty() {
        let lines: Vec<String> = failures
            .iter()
            .map(|f| format!("  {}/10 {}: {}", f.index, f.name, f.reason))
            .collect();
        panic!("{} acceptance check(s) failed:\n{}", lines.len(), lines.join("\n"));
    }
}

/// Check 1: quantization of a single value, the packaged model's forward
/// pass layer by layer, and its classification.
fn check_worked_example() -> Result<String, String> {
    let cfg = QuantConfig::new(Sign::Signed, 4, 2).map_err(|e| e.to_string())?;
    let u = parse_decimal("1.2345").map_err(|e| e.to_string())?;
    let got = quantize_value(&u, &cfg);
    if got != 5 {
        return Err(format!("quantize_value(1.2345) = {got}, want 5"));
    }

    let net = packaged_qnn();
    let layers = qnn_forward_layers(&net, &[10, 2]).map_err(|e| e.to_string())?;
    if layers != vec![vec![3, 17], vec![8, 10]] {
        return Err(format!("forward layers {layers:?}, want [[3, 17], [8, 10]]"));
    }
    let class = classify(&layers[1]).map_err(|e| e.to_string())?;
    if class != 2 {
        return Err(format!("classify = {class}, want 2"));
    }
    Ok("quantize 1.2345 -> 5; (10,2) -> (3,17) -> (8,10), class 2".into())
}

/// Check 2: the max-norm ball of radius 4 around (10, 2) projects to the
/// box [6,14] x [0,6] on the unsigned 6.4 input grid.
fn check_region_projection() -> Result<String, String> {
    let net = packaged_qnn();
    let region = InputRegionSpec {
        center: vec![10, 2],
        radius: 4,
        norm: Norm::LInf,
    };
    let bounds = input_intervals(&region, net.cfg_in());
    let got: Vec<(i64, i64)> = bounds.iter().map(|b| (b.lo, b.hi)).collect();
    if got != vec![(6, 14), (0, 6)] {
        return Err(format!("projection {got:?}, want [(6, 14), (0, 6)]"));
    }
    Ok("max-norm r=4 around (10,2) -> [6,14] x [0,6]".into())
}

/// Check 3: for 1,000 random piecewise-constant functions (up to 6 pieces,
/// integer cuts in [-20, 20]), fixing x at every integer in the domain
/// forces y = f(x) and excludes every other y; the two integers just
/// outside the domain are infeasible.
fn check_staircase_exactness() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3001);
    let mut points = 0usize;
    for case in 0..1000 {
        let k = rng.random_range(1..=6);
        // k + 1 distinct sorted integer cuts in [-20, 20].
        let mut cuts: Vec<i64> = Vec::new();
        while cuts.len() < k + 1 {
            let c = rng.random_range(-20..=20);
            if !cuts.contains(&c) {
                cuts.push(c);
            }
        }
        cuts.sort_unstable();
        let values: Vec<i64> = (0..k).map(|_| rng.random_range(-20..=20)).collect();
        let f = PiecewiseConstant::new(
            cuts.iter().copied().map(Rat::from_int).map(Breakpoint::Finite).collect(),
            values,
        )
        .map_err(|e| format!("case {case}: {e}"))?;

        let mut model = IlpModel::new();
        let x = model
            .add_int("x", cuts[0] - 1, cuts[k])
            .map_err(|e| e.to_string())?;
        let vars = encode_piecewise_constant(&mut model, &f, &LinExpr::from_var(x), "y", "v");
        let (y_lo, y_hi) = f.value_range();

        let status = |m: &IlpModel| solve(m, &Deadline::none()).status;
        for v in cuts[0] - 1..=cuts[k] {
            points += 1;
            model.set_bounds(x, v, v);
            model.set_bounds(vars.output, y_lo, y_hi);
            let expect = f.eval(&Rat::from_int(v));
            match (expect, status(&model)) {
                (Some(want), SolveStatus::Feasible(sol)) => {
                    let got = sol[vars.output.index()];
                    if got != want {
                        return Err(format!("case {case}: f({v}) encoded as {got}, want {want}"));
                    }
                    // Every other y in the value range must be excluded.
                    if want > y_lo {
                        model.set_bounds(vars.output, y_lo, want - 1);
                        if !matches!(status(&model), SolveStatus::Infeasible) {
                            return Err(format!("case {case}: x={v} admits y < f(x)"));
                        }
                    }
                    if want < y_hi {
                        model.set_bounds(vars.output, want + 1, y_hi);
                        if !matches!(status(&model), SolveStatus::Infeasible) {
                            return Err(format!("case {case}: x={v} admits y > f(x)"));
                        }
                    }
                }
                (None, SolveStatus::Infeasible) => {}
                (Some(_), other) => {
                    return Err(format!("case {case}: x={v} in domain but solver said {other:?}"));
                }
                (None, _) => {
                    return Err(format!("case {case}: x={v} outside domain but model feasible"));
                }
            }
        }
    }
    Ok(format!("1000 functions, {points} pinned points, all exact"))
}

/// Check 4: on 200 random networks and 20 random inputs each, with and
/// without interval bounds, the encoded output variables equal the forward
/// pass exactly.
fn check_forward_consistency(sizes: &mut Vec<SizeRecord>) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3002);
    let mut checked = 0usize;
    for case in 0..200 {
        let net = random_qnn(&mut rng, 1);
        for _ in 0..20 {
            let point = random_grid_point(&mut rng, &net);
            let want = qnn_forward(&net, &point).map_err(|e| e.to_string())?;
            let region = InputRegionSpec {
                center: point.clone(),
                radius: 0,
                norm: Norm::LInf,
            };
            for use_ia in [true, false] {
                let enc = build_forward_model(&net, &region, use_ia)
                    .map_err(|e| format!("case {case}: {e}"))?;
                sizes.push(SizeRecord::new(&net, &enc.counts));
                let sol = match solve(&enc.model, &Deadline::none()).status {
                    SolveStatus::Feasible(sol) => sol,
                    other => {
                        return Err(format!(
                            "case {case}: point model at {point:?} (ia={use_ia}) was {other:?}"
                        ))
                    }
                };
                let got: Vec<i64> = enc
                    .outputs
                    .iter()
                    .map(|o| match o {
                        NeuronRef::Const(c) => *c,
                        NeuronRef::Var(v) => sol[v.index()],
                    })
                    .collect();
                if got != want {
                    return Err(format!(
                        "case {case}: encoded outputs {got:?} at {point:?} (ia={use_ia}), forward says {want:?}"
                    ));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("200 networks x 20 inputs x 2 modes = {checked} exact matches"))
}

/// Check 5: on 300 random instances spanning all four norms, radii up to 3
/// and both property kinds, the solver verdict equals exhaustive
/// enumeration, and every counterexample validates against the network
/// semantics.
fn check_verdict_equivalence(
    sizes: &mut Vec<SizeRecord>,
    instances: &mut Vec<InstanceRecord>,
) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3003);
    let norms = [Norm::L0, Norm::L1, Norm::L2, Norm::LInf];
    let mut non_robust = 0usize;
    for case in 0..300 {
        let net = random_qnn(&mut rng, 2);
        let center = random_grid_point(&mut rng, &net);
        let region = InputRegionSpec {
            center: center.clone(),
            radius: rng.random_range(0..=3),
            norm: norms[case % norms.len()],
        };
        let out = qnn_forward(&net, &center).map_err(|e| e.to_string())?;
        let property = if case % 2 == 0 {
            PropertySpec::OutputDifference
        } else {
            PropertySpec::Misclassification {
                target: classify(&out).map_err(|e| e.to_string())?,
            }
        };

        let with_ia = verify_robustness(&net, &region, &property, true, &Deadline::none())
            .map_err(|e| format!("case {case}: {e}"))?;
        let without_ia = verify_robustness(&net, &region, &property, false, &Deadline::none())
            .map_err(|e| format!("case {case}: {e}"))?;
        sizes.push(SizeRecord::new(&net, &with_ia.stats.counts));
        sizes.push(SizeRecord::new(&net, &without_ia.stats.counts));

        let brute = brute_force_verify(&net, &region, &property, BRUTE_CAP)
            .map_err(|e| format!("case {case}: {e}"))?;
        let agree = match (&with_ia.status, &brute) {
            (VerdictStatus::Robust, None) => true,
            (VerdictStatus::NonRobust { counterexample }, Some(_)) => {
                validate_counterexample(&net, &region, &property, counterexample)
                    .map_err(|e| format!("case {case}: {e}"))?;
                non_robust += 1;
                true
            }
            _ => false,
        };
        if !agree {
            return Err(format!(
                "case {case}: solver said {:?}, brute force said {brute:?}",
                with_ia.status
            ));
        }

        instances.push(InstanceRecord {
            radius: region.radius,
            booleans_with_ia: with_ia.stats.counts.total_booleans(),
            booleans_without_ia: without_ia.stats.counts.total_booleans(),
            verdicts_agree: matches!(
                (&with_ia.status, &without_ia.status),
                (VerdictStatus::Robust, VerdictStatus::Robust)
                    | (VerdictStatus::NonRobust { .. }, VerdictStatus::NonRobust { .. })
            ),
        });
    }
    Ok(format!("300 instances agree with enumeration ({non_robust} non-robust, all validated)"))
}

/// Check 6: every encoding built in checks 4 and 5 observes the size
/// guarantees: at most 4 rows per non-input neuron and at most
/// (clamp span + 2) variables per neuron.
fn check_size_bounds(sizes: &[SizeRecord]) -> Result<String, String> {
    if sizes.is_empty() {
        return Err("no encodings were recorded".into());
    }
    let violations = sizes.iter().filter(|s| !s.within_bounds()).count();
    if violations > 0 {
        return Err(format!("{violations} of {} encodings exceed the bounds", sizes.len()));
    }
    Ok(format!("{} encodings within both bounds", sizes.len()))
}

/// Check 7: interval bounds never increase the boolean count, shrink it
/// strictly on at least half of the small-radius instances, and never
/// change the verdict.
fn check_ia_effectiveness(instances: &[InstanceRecord]) -> Result<String, String> {
    if instances.is_empty() {
        return Err("no instances were recorded".into());
    }
    let grew = instances
        .iter()
        .filter(|i| i.booleans_with_ia > i.booleans_without_ia)
        .count();
    if grew > 0 {
        return Err(format!("{grew} instances had more booleans with interval bounds"));
    }
    let disagree = instances.iter().filter(|i| !i.verdicts_agree).count();
    if disagree > 0 {
        return Err(format!("{disagree} instances changed verdict"));
    }
    let small: Vec<_> = instances.iter().filter(|i| i.radius <= 2).collect();
    let strict = small
        .iter()
        .filter(|i| i.booleans_with_ia < i.booleans_without_ia)
        .count();
    if strict * 2 < small.len() {
        return Err(format!(
            "strict reduction on only {strict} of {} small-radius instances",
            small.len()
        ));
    }
    Ok(format!(
        "{} instances: no growth, same verdicts, strict reduction on {strict}/{} at r <= 2",
        instances.len(),
        small.len()
    ))
}

/// Check 8: on 50 random instances the radius search's answer is certified
/// by brute force: robust at the returned radius and non-robust one step
/// out (or capped with the region already covering the grid).
fn check_mrr_certification() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3004);
    let norms = [Norm::L0, Norm::L1, Norm::L2, Norm::LInf];
    let mut capped_count = 0usize;
    for case in 0..50 {
        let net = random_qnn(&mut rng, 2);
        let center = random_grid_point(&mut rng, &net);
        let norm = norms[case % norms.len()];
        let out = qnn_forward(&net, &center).map_err(|e| e.to_string())?;
        let property = if case % 2 == 0 {
            PropertySpec::OutputDifference
        } else {
            PropertySpec::Misclassification {
                target: classify(&out).map_err(|e| e.to_string())?,
            }
        };

        let search = RadiusSearch {
            start_r: 10,
            step: 10,
        };
        let result = compute_mrr(&net, &center, norm, &property, true, search, &Deadline::none())
            .map_err(|e| format!("case {case}: {e}"))?;
        let r = result
            .mrr
            .ok_or_else(|| format!("case {case}: no radius returned"))?;

        let brute = |radius: i64| {
            let region = InputRegionSpec {
                center: center.clone(),
                radius,
                norm,
            };
            brute_force_verify(&net, &region, &property, BRUTE_CAP)
                .map_err(|e| format!("case {case}: {e}"))
        };
        if brute(r)?.is_some() {
            return Err(format!("case {case}: claimed radius {r} is not robust"));
        }
        if result.capped {
            // The radius-r region already covers the whole grid; larger radii
            // ask the same question, so there is no step to refute.
            if r != result.covering_radius {
                return Err(format!(
                    "case {case}: capped at {r}, covering radius {}",
                    result.covering_radius
                ));
            }
            capped_count += 1;
        } else if brute(r + 1)?.is_none() {
            return Err(format!("case {case}: radius {} is still robust", r + 1));
        }
    }
    Ok(format!("50 instances certified ({capped_count} capped at the covering radius)"))
}

/// Check 9: across 10,000 sampled (network, region, member point) triples,
/// every true activation lies inside the propagated bounds.
fn check_interval_soundness() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3005);
    let norms = [Norm::L0, Norm::L1, Norm::L2, Norm::LInf];
    let mut nets = Vec::new();
    for _ in 0..100 {
        nets.push(random_qnn(&mut rng, 1));
    }
    for case in 0..10_000 {
        let net = &nets[case % nets.len()];
        let region = InputRegionSpec {
            center: random_grid_point(&mut rng, net),
            radius: rng.random_range(0..=6),
            norm: norms[case % norms.len()],
        };
        let bounds = input_intervals(&region, net.cfg_in());
        let ia = propagate(net, &bounds).map_err(|e| e.to_string())?;
        let point = random_region_point(&mut rng, net, &region);
        for (i, (&v, b)) in point.iter().zip(&ia.input).enumerate() {
            if !b.contains(v) {
                return Err(format!("case {case}: input {i} = {v} outside [{}, {}]", b.lo, b.hi));
            }
        }
        let layers = qnn_forward_layers(net, &point).map_err(|e| e.to_string())?;
        for (t, layer) in layers.iter().enumerate() {
            for (j, &v) in layer.iter().enumerate() {
                let b = ia.layers[t][j].post;
                if !b.contains(v) {
                    return Err(format!(
                        "case {case}: neuron ({t}, {j}) = {v} outside [{}, {}]",
                        b.lo, b.hi
                    ));
                }
            }
        }
    }
    Ok("10000 triples, every activation within bounds".into())
}

/// Check 10: the packaged model's verification encoding exports to LP format
/// byte-identically to the committed golden file, the export carries the
/// 9-step staircase of the bounded first hidden neuron, and an external LP
/// solver (when one is installed) reproduces the built-in verdict.
fn check_lp_golden() -> Result<String, String> {
    let net = packaged_qnn();
    let region = InputRegionSpec {
        center: vec![10, 2],
        radius: 4,
        norm: Norm::LInf,
    };
    let property = PropertySpec::Misclassification { target: 2 };

    let export = || -> Result<(String, SolveStatus), String> {
        let mut enc = build_verification_model(&net, &region, &property, true)
            .map_err(|e| e.to_string())?;
        let status = solve(&enc.model, &Deadline::none()).status;
        enc.model.normalize();
        let lp = export_lp(&enc.model).map_err(|e| e.to_string())?;
        Ok((lp, status))
    };
    let (lp, status) = export()?;
    let (lp2, _) = export()?;
    if lp != lp2 {
        return Err("two exports of the same model differ".into());
    }

    if !lp.contains("v2_1_9") || lp.contains("v2_1_10") {
        return Err("first hidden neuron is not a 9-step staircase".into());
    }

    let path = golden_path("running-linf4-misclass2.lp");
    if std::env::var_os("QNNV_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).map_err(|e| e.to_string())?;
        std::fs::write(&path, &lp).map_err(|e| e.to_string())?;
        return Ok(format!("golden file rewritten ({} bytes)", lp.len()));
    }
    let golden = std::fs::read_to_string(&path)
        .map_err(|e| format!("golden file {}: {e}", path.display()))?;
    if lp != golden {
        return Err("export differs from the golden file (QNNV_BLESS=1 to refresh)".into());
    }

    let external = check_external_solver(&path, &status)?;
    Ok(format!("byte-stable, 9-step staircase present, {external}"))
}

/// Feeds the exported file to the first LP-format solver found on PATH and
/// compares its feasibility answer with the built-in one.
fn check_external_solver(path: &Path, status: &SolveStatus) -> Result<String, String> {
    let want_feasible = match status {
        SolveStatus::Feasible(_) => true,
        SolveStatus::Infeasible => false,
        SolveStatus::Timeout => return Err("built-in solve timed out".into()),
    };
    let attempts: [(&str, Vec<&str>); 2] = [
        ("glpsol", vec!["--lp", path.to_str().unwrap()]),
        ("cbc", vec![path.to_str().unwrap(), "solve"]),
    ];
    for (bin, args) in attempts {
        let output = match Command::new(bin).args(&args).output() {
            Ok(out) => out,
            Err(_) => continue,
        };
        let text = format!(
            "{}{}",
            String::from_utf8_lossy(&output.stdout),
            String::from_utf8_lossy(&output.stderr)
        );
        let got_feasible = if text.contains("INTEGER OPTIMAL SOLUTION FOUND")
            || text.contains("Optimal solution found")
        {
            true
        } else if text.contains("NO INTEGER FEASIBLE SOLUTION")
            || text.contains("infeasible")
            || text.contains("Infeasible")
        {
            false
        } else {
            return Err(format!("{bin} output not understood:\n{text}"));
        };
        if got_feasible != want_feasible {
            return Err(format!(
                "{bin} says feasible={got_feasible}, built-in says feasible={want_feasible}"
            ));
        }
        return Ok(format!("{bin} agrees (feasible={got_feasible})"));
    }
    Ok("external solver: skipped (none on PATH)".into())
}
