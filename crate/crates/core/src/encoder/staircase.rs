//! Staircase functions and their boolean encodings.
//!
//! A quantized neuron is, as a function of its real-valued affine input, a
//! step function: rescale and round land the value on a grid, the clamp caps
//! it at both ends. [`PiecewiseConstant`] represents such functions
//! explicitly; [`encode_piecewise_constant`] turns `y = f(x)` into linear
//! rows with one selector boolean per piece, applied directly to the affine
//! expression so no intermediate variable is ever created.

use num::{BigInt, BigRational};
use thiserror::Error;

use crate::ilp::{IlpModel, LinExpr, Rat, Relation, VarId};

/// A cut position on the extended rational line.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Breakpoint {
    NegInf,
    Finite(Rat),
    PosInf,
}

/// A total piecewise-constant function. Piece `i` takes `values[i]` on the
/// half-open interval `[cuts[i], cuts[i+1])`; the first cut is typically
/// `NegInf` and the last `PosInf`, making the function total.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PiecewiseConstant {
    cuts: Vec<Breakpoint>,
    values: Vec<i64>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StaircaseError {
    #[error("need cuts = pieces + 1, got {cuts} cuts for {pieces} values")]
    ArityMismatch { cuts: usize, pieces: usize },
    #[error("cuts must be strictly increasing")]
    CutsNotIncreasing,
    #[error("a staircase needs at least one piece")]
    Empty,
}

impl PiecewiseConstant {
    pub fn new(cuts: Vec<Breakpoint>, values: Vec<i64>) -> Result<PiecewiseConstant, StaircaseError> {
        if values.is_empty() {
            return Err(StaircaseError::Empty);
        }
        if cuts.len() != values.len() + 1 {
            return Err(StaircaseError::ArityMismatch {
                cuts: cuts.len(),
                pieces: values.len(),
            });
        }
        if cuts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(StaircaseError::CutsNotIncreasing);
        }
        Ok(PiecewiseConstant { cuts, values })
    }

    pub fn num_pieces(&self) -> usize {
        self.values.len()
    }

    pub fn cuts(&self) -> &[Breakpoint] {
        &self.cuts
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    /// The function's value at `x`. `None` when `x` lies outside every piece
    /// (possible only when the outer cuts are finite).
    pub fn eval(&self, x: &Rat) -> Option<i64> {
        let above = |cut: &Breakpoint| match cut {
            Breakpoint::NegInf => true,
            Breakpoint::Finite(a) => x >= a,
            Breakpoint::PosInf => false,
        };
        (0..self.values.len())
            .find(|&i| above(&self.cuts[i]) && !above(&self.cuts[i + 1]))
            .map(|i| self.values[i])
    }

    pub fn value_range(&self) -> (i64, i64) {
        let lo = *self.values.iter().min().expect("non-empty");
        let hi = *self.values.iter().max().expect("non-empty");
        (lo, hi)
    }
}

/// The rounding-and-clamp staircase of a neuron whose activation ranges over
/// `lo..=hi`: value `v` is taken exactly on `[v - 1/2, v + 1/2)`, with the
/// outer pieces extended to infinity by the clamp.
pub fn neuron_pcf(lo: i64, hi: i64) -> PiecewiseConstant {
    assert!(lo <= hi, "inverted activation range");
    let mut cuts = Vec::with_capacity((hi - lo + 2) as usize);
    cuts.push(Breakpoint::NegInf);
    for v in lo..hi {
        // v + 1/2, exactly.
        cuts.push(Breakpoint::Finite(Rat::new(2 * v + 1, 2)));
    }
    cuts.push(Breakpoint::PosInf);
    PiecewiseConstant::new(cuts, (lo..=hi).collect()).expect("constructed increasing")
}

/// Variables created by one staircase instance.
pub struct StaircaseVars {
    pub output: VarId,
    pub booleans: Vec<VarId>,
}

/// Encodes `y = f(x)` where `x` is an affine expression over existing
/// variables. Creates the output variable `y` (named `y_name`) and one
/// selector boolean per piece (named `{bool_prefix}_1` onward), then ties
/// them together with four rows:
///
/// 1. exactly one piece is selected;
/// 2. `y` equals the selected piece's value;
/// 3. `x` lies strictly below the selected piece's right cut;
/// 4. `x` lies at or above the selected piece's left cut.
///
/// Infinite cuts in rows 3 and 4 are replaced by `M = 1 + ceil(max |x|)`,
/// which the bounds on `x`'s variables make unreachable.
pub fn encode_piecewise_constant(
    model: &mut IlpModel,
    f: &PiecewiseConstant,
    x: &LinExpr,
    y_name: &str,
    bool_prefix: &str,
) -> StaircaseVars {
    let k = f.num_pieces();
    let (v_lo, v_hi) = f.value_range();
    let y = model
        .add_int(y_name, v_lo, v_hi)
        .expect("staircase value range is ordered");
    let booleans: Vec<VarId> = (1..=k)
        .map(|i| model.add_bool(format!("{bool_prefix}_{i}")))
        .collect();

    // M = 1 + ceil(max |x|), computed from the variable bounds. Row 3 must
    // stay strictly satisfiable when the last piece is selected, hence the +1
    // over the ceiling.
    let (x_lo, x_hi) = model.expr_range(x);
    let reach = x_lo.abs().max(x_hi.abs());
    let extra = BigInt::from(if reach.is_integer() { 1 } else { 2 });
    let big_m = Rat::from_big(BigRational::from_integer(reach.floor_big() + extra));

    // Row 1: the booleans partition.
    let mut ones = LinExpr::new();
    for &b in &booleans {
        ones.add_term(b, Rat::one());
    }
    constrain_next(model, &ones, Relation::Eq, Rat::one());

    // Row 2: y equals the selected value.
    let mut val = LinExpr::from_var(y);
    for (&b, &t) in booleans.iter().zip(f.values()) {
        val.add_term(b, Rat::from_int(-t));
    }
    constrain_next(model, &val, Relation::Eq, Rat::zero());

    // Row 3: x < right cut of the selected piece.
    let mut below = x.clone();
    for (&b, cut) in booleans.iter().zip(&f.cuts()[1..]) {
        let a = match cut {
            Breakpoint::Finite(a) => a.clone(),
            Breakpoint::PosInf => big_m.clone(),
            Breakpoint::NegInf => unreachable!("cuts are increasing"),
        };
        below.add_term(b, -a);
    }
    constrain_next(model, &below, Relation::Lt, Rat::zero());

    // Row 4: x >= left cut of the selected piece.
    let mut at_or_above = x.clone();
    for (&b, cut) in booleans.iter().zip(&f.cuts()[..k]) {
        let a = match cut {
            Breakpoint::Finite(a) => a.clone(),
            Breakpoint::NegInf => -&big_m,
            Breakpoint::PosInf => unreachable!("cuts are increasing"),
        };
        at_or_above.add_term(b, -a);
    }
    constrain_next(model, &at_or_above, Relation::Ge, Rat::zero());

    StaircaseVars { output: y, booleans }
}

/// Adds a row with the model-wide sequential label `c{index}`.
pub(crate) fn constrain_next(model: &mut IlpModel, expr: &LinExpr, rel: Relation, rhs: Rat) {
    let label = format!("c{}", model.constraints().len());
    model.constrain(label, expr, rel, rhs);
}
