//! Input region encodings.
//!
//! A region is a norm ball of integer radius around a grid point. The
//! per-coordinate projection always lands in the input variable bounds; the
//! rows added here are only the couplings the projection cannot express:
//! a deviation budget for L1, change indicators for L0, and a quadratic ball
//! for L2. An Linf ball is its own bounding box, and a radius of zero pins
//! the center outright, so neither adds anything.

use std::fmt;
use std::str::FromStr;

use crate::ilp::{IlpModel, LinExpr, Rat, Relation, VarId};

use super::staircase::{
    constrain_next, encode_piecewise_constant, Breakpoint, PiecewiseConstant,
};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Norm {
    L0,
    L1,
    L2,
    LInf,
}

impl Norm {
    pub const ALL: [Norm; 4] = [Norm::L0, Norm::L1, Norm::L2, Norm::LInf];
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::L0 => "l0",
            Norm::L1 => "l1",
            Norm::L2 => "l2",
            Norm::LInf => "linf",
        })
    }
}

impl FromStr for Norm {
    type Err = String;

    fn from_str(s: &str) -> Result<Norm, String> {
        match s.to_ascii_lowercase().as_str() {
            "l0" | "0" => Ok(Norm::L0),
            "l1" | "1" => Ok(Norm::L1),
            "l2" | "2" => Ok(Norm::L2),
            "linf" | "inf" | "max" => Ok(Norm::LInf),
            other => Err(format!("unknown norm {other:?}; use l0, l1, l2 or linf")),
        }
    }
}

/// A ball `{ x : ||x - center||_norm <= radius }` on the input grid.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct InputRegionSpec {
    pub center: Vec<i64>,
    pub radius: i64,
    pub norm: Norm,
}

/// Sizes added by [`encode_input_region`].
#[derive(Clone, Copy, Default, Debug)]
pub(crate) struct RegionEncoding {
    pub rows: usize,
    /// Auxiliary variables: deviation budgets or change indicators.
    pub vars: usize,
    /// Piece-selector booleans behind the L0 indicators.
    pub booleans: usize,
    pub quadratics: usize,
}

/// Adds the coupling rows for a region over already-bounded input variables.
///
/// The caller must have created `inputs` with the per-coordinate projection
/// of the region as bounds; this function only adds what the box misses.
pub(crate) fn encode_input_region(
    model: &mut IlpModel,
    region: &InputRegionSpec,
    inputs: &[VarId],
) -> RegionEncoding {
    assert_eq!(inputs.len(), region.center.len(), "region arity");
    let mut enc = RegionEncoding::default();
    let r = region.radius;
    if r == 0 || region.norm == Norm::LInf {
        return enc;
    }

    match region.norm {
        Norm::LInf => unreachable!("handled above"),
        Norm::L1 => {
            // d_i >= |x_i - c_i|, sum d_i <= r.
            let mut budget = LinExpr::new();
            for (i, (&x, &c)) in inputs.iter().zip(&region.center).enumerate() {
                let d = model
                    .add_int(format!("d{}", i + 1), 0, r)
                    .expect("radius is positive");
                enc.vars += 1;
                let mut above = LinExpr::from_var(x);
                above.add_term(d, Rat::from_int(-1));
                constrain_next(model, &above, Relation::Le, Rat::from_int(c));
                let mut below = LinExpr::from_var(x);
                below.add_term(d, Rat::one());
                constrain_next(model, &below, Relation::Ge, Rat::from_int(c));
                enc.rows += 2;
                budget.add_term(d, Rat::one());
            }
            constrain_next(model, &budget, Relation::Le, Rat::from_int(r));
            enc.rows += 1;
        }
        Norm::L0 => {
            // d_i = [x_i != c_i] via a staircase over x_i, sum d_i <= r.
            let mut budget = LinExpr::new();
            for (i, (&x, &c)) in inputs.iter().zip(&region.center).enumerate() {
                let (lo, hi) = {
                    let v = model.var(x);
                    (v.lo, v.hi)
                };
                let mut cuts = vec![Breakpoint::NegInf];
                let mut values = Vec::new();
                if lo < c {
                    values.push(1);
                    cuts.push(Breakpoint::Finite(Rat::from_int(c)));
                }
                values.push(0);
                if c < hi {
                    cuts.push(Breakpoint::Finite(Rat::from_int(c + 1)));
                    values.push(1);
                }
                cuts.push(Breakpoint::PosInf);
                let pcf = PiecewiseConstant::new(cuts, values).expect("cuts are increasing");
                let name = format!("d{}", i + 1);
                let sv = encode_piecewise_constant(model, &pcf, &LinExpr::from_var(x), &name, &name);
                enc.rows += 4;
                enc.vars += 1;
                enc.booleans += sv.booleans.len();
                budget.add_term(sv.output, Rat::one());
            }
            constrain_next(model, &budget, Relation::Le, Rat::from_int(r));
            enc.rows += 1;
        }
        Norm::L2 => {
            // One ball row; vacuous when it already contains the whole box.
            let r_sq = i128::from(r) * i128::from(r);
            let mut max_sq: i128 = 0;
            for (&x, &c) in inputs.iter().zip(&region.center) {
                let v = model.var(x);
                let worst = (v.lo - c).abs().max((v.hi - c).abs());
                max_sq += i128::from(worst) * i128::from(worst);
            }
            if r_sq < max_sq {
                // Region validation caps l2 radii so the square fits i64.
                let bound = i64::try_from(r_sq).expect("validated radius");
                let terms: Vec<(VarId, i64)> =
                    inputs.iter().copied().zip(region.center.iter().copied()).collect();
                let label = format!("qc{}", model.quadratics().len());
                model.add_quadratic(label, terms, bound);
                enc.quadratics += 1;
            }
        }
    }
    enc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ilp::{solve, Deadline, SolveStatus};
    use crate::interval::{input_intervals, IntervalBound};
    use crate::qnn::{QuantConfig, Sign};

    fn cfg() -> QuantConfig {
        QuantConfig::new(Sign::Unsigned, 4, 2).unwrap()
    }

    fn norm_holds(point: &[i64], center: &[i64], radius: i64, norm: Norm) -> bool {
        match norm {
            Norm::L0 => point.iter().zip(center).filter(|(a, b)| a != b).count() as i64 <= radius,
            Norm::L1 => point
                .iter()
                .zip(center)
                .map(|(a, b)| (a - b).abs())
                .sum::<i64>()
                <= radius,
            Norm::L2 => {
                point
                    .iter()
                    .zip(center)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<i64>()
                    <= radius * radius
            }
            Norm::LInf => point
                .iter()
                .zip(center)
                .map(|(a, b)| (a - b).abs())
                .max()
                .unwrap_or(0)
                <= radius,
        }
    }

    /// Encodes a bare region (no network) and compares its feasible set
    /// against the norm definition, point by point over the whole grid.
    fn assert_exact(center: &[i64], radius: i64, norm: Norm) {
        let region = InputRegionSpec {
            center: center.to_vec(),
            radius,
            norm,
        };
        let bounds = input_intervals(&region, &cfg());
        let mut m = IlpModel::new();
        let inputs: Vec<VarId> = bounds
            .iter()
            .enumerate()
            .map(|(i, b)| m.add_int(format!("x{}", i + 1), b.lo, b.hi).unwrap())
            .collect();
        encode_input_region(&mut m, &region, &inputs);

        let (lb, ub) = (cfg().lb(), cfg().ub());
        for a in lb..=ub {
            for b in lb..=ub {
                let mut probe = m.clone();
                probe.set_bounds(inputs[0], a, a);
                probe.set_bounds(inputs[1], b, b);
                // Pinning may invert the projected bounds; widen first.
                let in_box = bounds[0].contains(a) && bounds[1].contains(b);
                let feasible = in_box
                    && matches!(
                        solve(&probe, &Deadline::none()).status,
                        SolveStatus::Feasible(_)
                    );
                assert_eq!(
                    feasible,
                    norm_holds(&[a, b], center, radius, norm),
                    "point ({a},{b}) center {center:?} r={radius} {norm}"
                );
            }
        }
    }

    #[test]
    fn l1_ball_is_exact() {
        assert_exact(&[7, 3], 2, Norm::L1);
        assert_exact(&[0, 15], 3, Norm::L1);
    }

    #[test]
    fn l0_ball_is_exact() {
        assert_exact(&[7, 3], 1, Norm::L0);
        // Corner center: the indicator staircases lose their empty pieces.
        assert_exact(&[0, 15], 1, Norm::L0);
        assert_exact(&[5, 5], 2, Norm::L0);
    }

    #[test]
    fn l2_ball_is_exact() {
        assert_exact(&[7, 3], 2, Norm::L2);
        assert_exact(&[7, 3], 3, Norm::L2);
        assert_exact(&[15, 0], 2, Norm::L2);
    }

    #[test]
    fn linf_and_point_regions_add_nothing() {
        for (radius, norm) in [(2, Norm::LInf), (0, Norm::L1), (0, Norm::L0)] {
            let region = InputRegionSpec {
                center: vec![7, 3],
                radius,
                norm,
            };
            let bounds = input_intervals(&region, &cfg());
            let mut m = IlpModel::new();
            let inputs: Vec<VarId> = bounds
                .iter()
                .enumerate()
                .map(|(i, b)| m.add_int(format!("x{}", i + 1), b.lo, b.hi).unwrap())
                .collect();
            let enc = encode_input_region(&mut m, &region, &inputs);
            assert_eq!(m.constraints().len(), 0);
            assert_eq!(m.quadratics().len(), 0);
            assert_eq!(enc.rows + enc.vars + enc.booleans + enc.quadratics, 0);
        }
    }

    #[test]
    fn wide_l2_ball_skips_the_quadratic_row() {
        // Radius covers the whole projected box, so the row is vacuous.
        let region = InputRegionSpec {
            center: vec![7, 3],
            radius: 40,
            norm: Norm::L2,
        };
        let bounds = input_intervals(&region, &cfg());
        assert_eq!(bounds[0], IntervalBound { lo: 0, hi: 15 });
        let mut m = IlpModel::new();
        let inputs: Vec<VarId> = bounds
            .iter()
            .enumerate()
            .map(|(i, b)| m.add_int(format!("x{}", i + 1), b.lo, b.hi).unwrap())
            .collect();
        let enc = encode_input_region(&mut m, &region, &inputs);
        assert_eq!(m.quadratics().len(), 0);
        assert_eq!(enc.quadratics, 0);
    }

    #[test]
    fn norm_names_round_trip() {
        for norm in Norm::ALL {
            assert_eq!(norm.to_string().parse::<Norm>(), Ok(norm));
        }
        assert_eq!("INF".parse::<Norm>(), Ok(Norm::LInf));
        assert!("l3".parse::<Norm>().is_err());
    }
}
