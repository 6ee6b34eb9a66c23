//! Robustness verdicts and the maximum robust radius.
//!
//! A verification question is one feasibility model: robust means
//! infeasible, and any satisfying point decodes to a concrete adversarial
//! input. Every counterexample coming back from the solver is re-validated
//! against the network semantics before it is reported, so an encoding or
//! solver defect can never surface as a silently wrong verdict.
//!
//! The maximum robustness radius is found by bracketing: grow the radius
//! by a fixed step until a non-robust one appears (or the region covers the
//! whole grid), then binary-search the gap. Verdicts are monotone in the
//! radius, which makes the bracket sound; probes are memoized so the search
//! never repeats a radius.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::encoder::{
    build_verification_model, EncodeError, EncodingCounts, InputRegionSpec, Norm, PropertySpec,
};
use crate::ilp::{solve, Deadline, SolveStatus};
use crate::interval;
use crate::qnn::{classify, qnn_forward, ModelError, QuantConfig, QuantizedNetwork};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("solver returned an invalid counterexample {point:?}: {reason}")]
    BadWitness { point: Vec<i64>, reason: String },
    #[error("brute force over {points} region points exceeds the cap of {cap}")]
    BruteForceTooLarge { points: u128, cap: u128 },
    #[error("radius search needs start_r >= 1 and step >= 1, got start_r={start_r}, step={step}")]
    BadSearchParams { start_r: i64, step: i64 },
}

/// Outcome of one robustness question.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum VerdictStatus {
    Robust,
    NonRobust { counterexample: Vec<i64> },
    Timeout,
}

/// Work done answering one robustness question.
#[derive(Clone, Copy, Default, Debug)]
pub struct VerifyStats {
    pub counts: EncodingCounts,
    /// Total linear rows in the model.
    pub rows: usize,
    /// Total variables in the model.
    pub vars: usize,
    /// Branch-and-bound nodes processed.
    pub nodes: u64,
    /// LP relaxations solved.
    pub lp_calls: u64,
    /// Time spent building the model.
    pub encode_elapsed: Duration,
    /// Time spent deciding it.
    pub solve_elapsed: Duration,
    pub elapsed: Duration,
}

#[derive(Clone, Debug)]
pub struct Verdict {
    pub status: VerdictStatus,
    pub stats: VerifyStats,
}

/// Whether `point` lies in the region. Exact in integer arithmetic.
pub fn region_contains(region: &InputRegionSpec, point: &[i64]) -> bool {
    debug_assert_eq!(point.len(), region.center.len());
    let r = region.radius;
    let diffs = point.iter().zip(&region.center).map(|(a, b)| a - b);
    match region.norm {
        Norm::L0 => diffs.filter(|&d| d != 0).count() as i64 <= r,
        Norm::L1 => diffs.map(|d| i128::from(d.abs())).sum::<i128>() <= i128::from(r),
        Norm::L2 => {
            diffs.map(|d| i128::from(d) * i128::from(d)).sum::<i128>()
                <= i128::from(r) * i128::from(r)
        }
        Norm::LInf => diffs.map(i64::abs).max().unwrap_or(0) <= r,
    }
}

/// Whether the outputs at `point` violate the property. `baseline` is the
/// output vector at the region center.
pub fn property_violated_at(
    net: &QuantizedNetwork,
    property: &PropertySpec,
    baseline: &[i64],
    point: &[i64],
) -> Result<bool, ModelError> {
    let out = qnn_forward(net, point)?;
    Ok(match *property {
        PropertySpec::OutputDifference => out != baseline,
        PropertySpec::Misclassification { target } => classify(&out)? != target,
    })
}

/// Checks a claimed counterexample against the network semantics: on the
/// input grid, inside the region, and actually violating the property.
pub fn validate_counterexample(
    net: &QuantizedNetwork,
    region: &InputRegionSpec,
    property: &PropertySpec,
    point: &[i64],
) -> Result<(), VerifyError> {
    let fail = |reason: String| VerifyError::BadWitness {
        point: point.to_vec(),
        reason,
    };
    if point.len() != net.input_dim() {
        return Err(fail(format!(
            "has {} coordinates, the network takes {}",
            point.len(),
            net.input_dim()
        )));
    }
    let cfg = net.cfg_in();
    for (i, &v) in point.iter().enumerate() {
        if !cfg.contains(v) {
            return Err(fail(format!("coordinate {i} is {v}, off the input grid")));
        }
    }
    if !region_contains(region, point) {
        return Err(fail("outside the region".into()));
    }
    let baseline = qnn_forward(net, &region.center)?;
    if !property_violated_at(net, property, &baseline, point)? {
        return Err(fail("does not violate the property".into()));
    }
    Ok(())
}

/// Decides whether the network is robust over the region: no region point's
/// outputs violate the property.
pub fn verify_robustness(
    net: &QuantizedNetwork,
    region: &InputRegionSpec,
    property: &PropertySpec,
    use_ia: bool,
    deadline: &Deadline,
) -> Result<Verdict, VerifyError> {
    let start = Instant::now();
    let enc = build_verification_model(net, region, property, use_ia)?;
    let encode_elapsed = start.elapsed();
    let solve_start = Instant::now();
    let result = solve(&enc.model, deadline);
    let solve_elapsed = solve_start.elapsed();
    let status = match result.status {
        SolveStatus::Feasible(sol) => {
            let point: Vec<i64> = enc.inputs.iter().map(|v| sol[v.index()]).collect();
            validate_counterexample(net, region, property, &point)?;
            VerdictStatus::NonRobust {
                counterexample: point,
            }
        }
        SolveStatus::Infeasible => VerdictStatus::Robust,
        SolveStatus::Timeout => VerdictStatus::Timeout,
    };
    Ok(Verdict {
        status,
        stats: VerifyStats {
            counts: enc.counts,
            rows: enc.model.constraints().len(),
            vars: enc.model.num_vars(),
            nodes: result.nodes,
            lp_calls: result.lp_calls,
            encode_elapsed,
            solve_elapsed,
            elapsed: start.elapsed(),
        },
    })
}

/// Exhaustive reference verifier. Enumerates every region point and runs the
/// forward pass; refuses regions larger than `cap` points.
pub fn brute_force_verify(
    net: &QuantizedNetwork,
    region: &InputRegionSpec,
    property: &PropertySpec,
    cap: u128,
) -> Result<Option<Vec<i64>>, VerifyError> {
    crate::encoder::validate_region(net, region)?;
    let bounds = interval::input_intervals(region, net.cfg_in());
    let points: u128 = bounds
        .iter()
        .map(|b| b.width() as u128 + 1)
        .product();
    if points > cap {
        return Err(VerifyError::BruteForceTooLarge { points, cap });
    }
    let baseline = qnn_forward(net, &region.center)?;
    let mut point: Vec<i64> = bounds.iter().map(|b| b.lo).collect();
    loop {
        if region_contains(region, &point)
            && property_violated_at(net, property, &baseline, &point)?
        {
            return Ok(Some(point));
        }
        // Odometer step over the box.
        let mut i = point.len();
        loop {
            if i == 0 {
                return Ok(None);
            }
            i -= 1;
            if point[i] < bounds[i].hi {
                point[i] += 1;
                break;
            }
            point[i] = bounds[i].lo;
        }
    }
}

/// Largest distance from `center` to any grid point; regions with this
/// radius cover the whole grid, so larger radii ask the same question.
pub fn covering_radius(cfg_in: &QuantConfig, center: &[i64], norm: Norm) -> i64 {
    let devs = center
        .iter()
        .map(|&c| (c - cfg_in.lb()).max(cfg_in.ub() - c));
    match norm {
        Norm::L0 => center.len() as i64,
        Norm::L1 => devs.sum(),
        Norm::L2 => {
            let sq: i128 = devs.map(|d| i128::from(d) * i128::from(d)).sum();
            let root = sq.isqrt();
            (root + i128::from(root * root < sq)) as i64
        }
        Norm::LInf => devs.max().unwrap_or(0),
    }
}

/// One radius probed during the search, in probe order.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct MrrProbe {
    pub radius: i64,
    pub robust: bool,
}

/// Bracketing parameters for the radius search.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct RadiusSearch {
    /// First upper probe.
    pub start_r: i64,
    /// Increment applied while the upper probe stays robust.
    pub step: i64,
}

impl Default for RadiusSearch {
    fn default() -> RadiusSearch {
        RadiusSearch {
            start_r: 10,
            step: 10,
        }
    }
}

/// Result of the maximum-robustness-radius search.
#[derive(Clone, Debug)]
pub struct MrrOutcome {
    /// Largest radius proven robust. `None` when the property is violated at
    /// the center itself, or when the search timed out.
    pub mrr: Option<i64>,
    /// The network is robust all the way to the covering radius.
    pub capped: bool,
    pub covering_radius: i64,
    pub probes: Vec<MrrProbe>,
    pub timed_out: bool,
    pub nodes: u64,
    pub lp_calls: u64,
    pub elapsed: Duration,
}

struct MrrSearch<'a> {
    net: &'a QuantizedNetwork,
    center: &'a [i64],
    norm: Norm,
    property: &'a PropertySpec,
    use_ia: bool,
    deadline: &'a Deadline,
    memo: BTreeMap<i64, bool>,
    probes: Vec<MrrProbe>,
    nodes: u64,
    lp_calls: u64,
}

enum Probe {
    Robust,
    NonRobust,
    TimedOut,
}

impl MrrSearch<'_> {
    fn probe(&mut self, radius: i64) -> Result<Probe, VerifyError> {
        if let Some(&robust) = self.memo.get(&radius) {
            return Ok(if robust { Probe::Robust } else { Probe::NonRobust });
        }
        let region = InputRegionSpec {
            center: self.center.to_vec(),
            radius,
            norm: self.norm,
        };
        let v = verify_robustness(self.net, &region, self.property, self.use_ia, self.deadline)?;
        self.nodes += v.stats.nodes;
        self.lp_calls += v.stats.lp_calls;
        let robust = match v.status {
            VerdictStatus::Robust => true,
            VerdictStatus::NonRobust { .. } => false,
            VerdictStatus::Timeout => return Ok(Probe::TimedOut),
        };
        self.memo.insert(radius, robust);
        self.probes.push(MrrProbe { radius, robust });
        Ok(if robust { Probe::Robust } else { Probe::NonRobust })
    }

    fn finish(
        self,
        cap: i64,
        start: Instant,
        mrr: Option<i64>,
        capped: bool,
        timed_out: bool,
    ) -> MrrOutcome {
        MrrOutcome {
            mrr,
            capped,
            covering_radius: cap,
            probes: self.probes,
            timed_out,
            nodes: self.nodes,
            lp_calls: self.lp_calls,
            elapsed: start.elapsed(),
        }
    }
}

/// Finds the largest radius at which the network is robust around `center`.
/// The first non-robust probe is bracketed by growing the upper radius from
/// `search.start_r` in increments of `search.step`, then the gap is
/// binary-searched. Robustness is antitone in the radius (regions are
/// nested), so the bracket invariant holds throughout. Expansion stops at
/// the covering radius, past which every region asks the same question.
pub fn compute_mrr(
    net: &QuantizedNetwork,
    center: &[i64],
    norm: Norm,
    property: &PropertySpec,
    use_ia: bool,
    search: RadiusSearch,
    deadline: &Deadline,
) -> Result<MrrOutcome, VerifyError> {
    let RadiusSearch { start_r, step } = search;
    if start_r < 1 || step < 1 {
        return Err(VerifyError::BadSearchParams { start_r, step });
    }
    let start = Instant::now();
    let cap = covering_radius(net.cfg_in(), center, norm);
    let mut s = MrrSearch {
        net,
        center,
        norm,
        property,
        use_ia,
        deadline,
        memo: BTreeMap::new(),
        probes: Vec::new(),
        nodes: 0,
        lp_calls: 0,
    };

    // The center itself: a violation here means no radius is robust.
    match s.probe(0)? {
        Probe::NonRobust => return Ok(s.finish(cap, start, None, false, false)),
        Probe::TimedOut => return Ok(s.finish(cap, start, None, false, true)),
        Probe::Robust => {}
    }
    match s.probe(1.min(cap))? {
        Probe::NonRobust => return Ok(s.finish(cap, start, Some(0), false, false)),
        Probe::TimedOut => return Ok(s.finish(cap, start, None, false, true)),
        Probe::Robust => {}
    }

    // Grow the upper probe by `step` until non-robust or the region covers
    // the grid.
    let mut lo = 1.min(cap);
    let mut hi = start_r.min(cap);
    let bracket = loop {
        if lo >= cap {
            return Ok(s.finish(cap, start, Some(cap), true, false));
        }
        match s.probe(hi)? {
            Probe::Robust => {
                lo = hi;
                hi = hi.saturating_add(step).min(cap);
            }
            Probe::NonRobust => break hi,
            Probe::TimedOut => return Ok(s.finish(cap, start, None, false, true)),
        }
    };

    let mut hi = bracket;
    while hi > lo + 1 {
        let mid = lo + (hi - lo) / 2;
        match s.probe(mid)? {
            Probe::Robust => lo = mid,
            Probe::NonRobust => hi = mid,
            Probe::TimedOut => return Ok(s.finish(cap, start, None, false, true)),
        }
    }
    Ok(s.finish(cap, start, Some(lo), false, false))
}
