//! Adversarial property encodings.
//!
//! The verifier always asks for a counterexample, so a property here is the
//! *violation* of robustness: some region point whose outputs differ from the
//! baseline, or one that the argmax rule classifies away from the target.
//! Each disjunct gets a selector boolean whose activation sharpens a big-M
//! row into the actual inequality; at least one selector must fire.
//!
//! Outputs folded to constants are resolved here at encode time. A constant
//! disjunct that already holds makes the property true at every region
//! point, so no rows are needed at all; one that fails is dropped.

use crate::ilp::{IlpModel, LinExpr, Rat, Relation};

use super::network::NeuronRef;
use super::staircase::constrain_next;

/// What counts as a robustness violation at a region point.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PropertySpec {
    /// The output vector differs from the center's output vector.
    OutputDifference,
    /// The argmax class (ties to the lowest index) differs from `target`.
    /// `target` is 1-based, matching the classification rule.
    Misclassification { target: usize },
}

/// Sizes added by a property encoding.
#[derive(Clone, Copy, Default, Debug)]
pub(crate) struct PropertyEncoding {
    pub rows: usize,
    pub booleans: usize,
    /// The property holds at every region point; no rows were added.
    pub trivial: bool,
}

fn add_ref(expr: &mut LinExpr, r: NeuronRef, sign: i64) {
    match r {
        NeuronRef::Var(v) => {
            expr.add_term(v, Rat::from_int(sign));
        }
        NeuronRef::Const(c) => {
            expr.add_constant(Rat::from_int(sign * c));
        }
    }
}

/// Encodes "the outputs differ from `baseline` somewhere".
pub(crate) fn encode_output_difference(
    model: &mut IlpModel,
    outputs: &[NeuronRef],
    baseline: &[i64],
) -> PropertyEncoding {
    assert_eq!(outputs.len(), baseline.len(), "baseline arity");
    let mut enc = PropertyEncoding::default();
    let mut fired = LinExpr::new();
    let mut selectors = 0usize;

    for (i, (&out, &base)) in outputs.iter().zip(baseline).enumerate() {
        let y = match out {
            NeuronRef::Const(c) => {
                if c != base {
                    // This output always differs: the property is a ground
                    // truth and needs no structure at all.
                    enc.trivial = true;
                }
                continue;
            }
            NeuronRef::Var(v) => v,
        };
        let (y_lo, y_hi) = {
            let var = model.var(y);
            (var.lo, var.hi)
        };
        if y_lo > base || y_hi < base {
            // The baseline value is outside the output's range, so this
            // output always differs.
            enc.trivial = true;
            continue;
        }
        if y_lo == y_hi {
            // Equal to the baseline everywhere; never a witness.
            continue;
        }

        // below = 1 forces y <= base - 1; vacuous otherwise.
        let m_below = Rat::from_int((y_hi - base + 1).max(1));
        let below = model.add_bool(format!("u{}_0", i + 1));
        let mut row = LinExpr::from_var(y);
        row.add_term(below, m_below.clone());
        constrain_next(model, &row, Relation::Le, Rat::from_int(base - 1) + m_below);

        // above = 1 forces y >= base + 1; vacuous otherwise.
        let m_above = Rat::from_int((base - y_lo + 1).max(1));
        let above = model.add_bool(format!("u{}_1", i + 1));
        let mut row = LinExpr::from_var(y);
        row.add_term(above, -&m_above);
        constrain_next(model, &row, Relation::Ge, Rat::from_int(base + 1) - m_above);

        // The two directions exclude each other.
        let mut pair = LinExpr::from_var(below);
        pair.add_term(above, Rat::one());
        constrain_next(model, &pair, Relation::Le, Rat::one());

        enc.rows += 3;
        enc.booleans += 2;
        selectors += 2;
        fired.add_term(below, Rat::one());
        fired.add_term(above, Rat::one());
    }

    if !enc.trivial {
        if selectors == 0 {
            // Every output is pinned to its baseline value: the property can
            // never hold. One ground contradiction says so.
            constrain_next(model, &LinExpr::new(), Relation::Ge, Rat::one());
        } else {
            constrain_next(model, &fired, Relation::Ge, Rat::one());
        }
        enc.rows += 1;
    }
    enc
}

/// Encodes "some class `i != target` wins the argmax". With ties resolved to
/// the lowest index, class `i` beats `target` when `y_i >= y_target` for
/// `i < target` and `y_i >= y_target + 1` for `i > target`.
pub(crate) fn encode_misclassification(
    model: &mut IlpModel,
    outputs: &[NeuronRef],
    target: usize,
) -> PropertyEncoding {
    assert!(
        target >= 1 && target <= outputs.len(),
        "target class out of range"
    );
    let mut enc = PropertyEncoding::default();
    let mut fired = LinExpr::new();
    let mut selectors = 0usize;
    let y_target = outputs[target - 1];

    for (i, &out) in outputs.iter().enumerate() {
        if i + 1 == target {
            continue;
        }
        let margin = if i + 1 < target { 0 } else { 1 };
        let mut diff = LinExpr::new();
        add_ref(&mut diff, out, 1);
        add_ref(&mut diff, y_target, -1);

        let (d_lo, d_hi) = model.expr_range(&diff);
        let need = Rat::from_int(margin);
        if d_lo >= need {
            // This challenger always wins; the property is a ground truth.
            enc.trivial = true;
            continue;
        }
        if d_hi < need {
            // This challenger can never win.
            continue;
        }

        // u = 1 forces y_i - y_target >= margin; vacuous otherwise.
        let big_m = (&need - &d_lo).max(Rat::one());
        let u = model.add_bool(format!("u{}", i + 1));
        diff.add_term(u, -&big_m);
        constrain_next(model, &diff, Relation::Ge, &need - &big_m);
        enc.rows += 1;
        enc.booleans += 1;
        selectors += 1;
        fired.add_term(u, Rat::one());
    }

    if !enc.trivial {
        if selectors == 0 {
            constrain_next(model, &LinExpr::new(), Relation::Ge, Rat::one());
        } else {
            constrain_next(model, &fired, Relation::Ge, Rat::one());
        }
        enc.rows += 1;
    }
    enc
}
