//! Integer bounds propagation.
//!
//! Given variable domains, each row `sum a_i x_i <= b` yields per-variable
//! bounds: with everything else at its cheapest value, `a_i x_i` may use at
//! most `b` minus the rest's minimum. Iterating to a fixpoint shrinks domains
//! before (and instead of) LP relaxation work, and detects many infeasible
//! subproblems outright. Quadratic ball rows tighten the same way via an
//! integer square root on the per-coordinate allowance.
//!
//! All arithmetic is checked i128; a row whose coefficients or partial sums
//! do not fit is simply not used for propagation, which is always sound.

use num::ToPrimitive;

use super::model::{IlpModel, Relation};

/// One `sum a_i x_i <= b` row over variable indices.
struct PropRow {
    terms: Vec<(usize, i128)>,
    rhs: i128,
}

pub(crate) struct PropSystem {
    rows: Vec<PropRow>,
    quads: Vec<(Vec<(usize, i64)>, i64)>,
    /// A row with no variables demanded `0 <= rhs` with `rhs < 0`.
    ground_infeasible: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) enum PropOutcome {
    Infeasible,
    Stable,
}

impl PropSystem {
    /// Compiles the linear rows of a normalized model into i128 form.
    /// Equalities become a pair of opposing inequalities.
    pub(crate) fn compile(model: &IlpModel) -> PropSystem {
        assert!(model.is_normalized(), "propagation needs a normalized model");
        let mut rows = Vec::new();
        let mut ground_infeasible = false;
        for c in model.constraints() {
            let coefs: Option<Vec<(usize, i128)>> = c
                .terms
                .iter()
                .map(|(v, coef)| {
                    debug_assert!(coef.is_integer());
                    coef.to_big().to_integer().to_i128().map(|n| (v.index(), n))
                })
                .collect();
            let rhs: Option<i128> = c.rhs.to_big().to_integer().to_i128();
            let (Some(coefs), Some(rhs)) = (coefs, rhs) else {
                continue; // out of i128 range; skip for propagation
            };
            if coefs.is_empty() {
                let violated = match c.rel {
                    Relation::Le => rhs < 0,
                    Relation::Eq => rhs != 0,
                    Relation::Lt | Relation::Ge => unreachable!("normalized"),
                };
                if violated {
                    ground_infeasible = true;
                }
                continue;
            }
            match c.rel {
                Relation::Le => rows.push(PropRow {
                    terms: coefs,
                    rhs,
                }),
                Relation::Eq => {
                    rows.push(PropRow {
                        terms: coefs.clone(),
                        rhs,
                    });
                    rows.push(PropRow {
                        terms: coefs.iter().map(|&(v, a)| (v, -a)).collect(),
                        rhs: -rhs,
                    });
                }
                Relation::Lt | Relation::Ge => unreachable!("normalized"),
            }
        }
        let quads = model
            .quadratics()
            .iter()
            .map(|q| {
                (
                    q.terms.iter().map(|(v, c)| (v.index(), *c)).collect(),
                    q.bound,
                )
            })
            .collect();
        PropSystem {
            rows,
            quads,
            ground_infeasible,
        }
    }

    /// Shrinks `dom` in place to a propagation fixpoint.
    pub(crate) fn propagate(&self, dom: &mut [(i64, i64)]) -> PropOutcome {
        if self.ground_infeasible {
            return PropOutcome::Infeasible;
        }
        // Domains only shrink, so this terminates without the cap; the cap
        // bounds worst-case time on adversarial long chains.
        for _ in 0..64 {
            let mut changed = false;
            for row in &self.rows {
                match tighten_linear(row, dom) {
                    Some(c) => changed |= c,
                    None => return PropOutcome::Infeasible,
                }
            }
            for (terms, bound) in &self.quads {
                match tighten_quadratic(terms, *bound, dom) {
                    Some(c) => changed |= c,
                    None => return PropOutcome::Infeasible,
                }
            }
            if !changed {
                break;
            }
        }
        PropOutcome::Stable
    }
}

/// `None` means the row is unsatisfiable over `dom`; `Some(changed)` reports
/// whether any bound moved. Arithmetic overflow makes a term (or the whole
/// row) unusable for tightening, never unsound: it is reported as no change.
fn tighten_linear(row: &PropRow, dom: &mut [(i64, i64)]) -> Option<bool> {
    // Minimum of each term over its domain.
    let mut term_min = Vec::with_capacity(row.terms.len());
    let mut row_min: i128 = 0;
    for &(v, a) in &row.terms {
        let (lo, hi) = dom[v];
        let m = if a >= 0 {
            a.checked_mul(i128::from(lo))
        } else {
            a.checked_mul(i128::from(hi))
        };
        let Some(m) = m else {
            return Some(false);
        };
        let Some(sum) = row_min.checked_add(m) else {
            return Some(false);
        };
        row_min = sum;
        term_min.push(m);
    }
    if row_min > row.rhs {
        return None;
    }
    let mut changed = false;
    for (k, &(v, a)) in row.terms.iter().enumerate() {
        let Some(allowance) = row
            .rhs
            .checked_sub(row_min - term_min[k])
        else {
            continue;
        };
        if a > 0 {
            let new_hi = clamp_i64(div_floor(allowance, a));
            if new_hi < dom[v].1 {
                dom[v].1 = new_hi;
                changed = true;
            }
        } else {
            let new_lo = clamp_i64(div_ceil(allowance, a));
            if new_lo > dom[v].0 {
                dom[v].0 = new_lo;
                changed = true;
            }
        }
        if dom[v].0 > dom[v].1 {
            return None;
        }
    }
    Some(changed)
}

fn tighten_quadratic(terms: &[(usize, i64)], bound: i64, dom: &mut [(i64, i64)]) -> Option<bool> {
    let bound = i128::from(bound);
    if bound < 0 {
        return None;
    }
    let mut term_min = Vec::with_capacity(terms.len());
    let mut total_min: i128 = 0;
    for &(v, c) in terms {
        let (lo, hi) = dom[v];
        // Squares of i64 differences fit i128 with room for the sum.
        let m = if lo <= c && c <= hi {
            0
        } else {
            let a = sq(i128::from(lo) - i128::from(c));
            let b = sq(i128::from(hi) - i128::from(c));
            a.min(b)
        };
        let Some(sum) = total_min.checked_add(m) else {
            return Some(false);
        };
        total_min = sum;
        term_min.push(m);
    }
    if total_min > bound {
        return None;
    }
    let mut changed = false;
    for (k, &(v, c)) in terms.iter().enumerate() {
        let allowance = bound - (total_min - term_min[k]);
        debug_assert!(allowance >= 0);
        let s = allowance.isqrt();
        let new_lo = clamp_i64(i128::from(c) - s);
        let new_hi = clamp_i64(i128::from(c) + s);
        if new_lo > dom[v].0 {
            dom[v].0 = new_lo;
            changed = true;
        }
        if new_hi < dom[v].1 {
            dom[v].1 = new_hi;
            changed = true;
        }
        if dom[v].0 > dom[v].1 {
            return None;
        }
    }
    Some(changed)
}

fn sq(v: i128) -> i128 {
    v * v
}

fn div_floor(p: i128, q: i128) -> i128 {
    if q > 0 {
        p.div_euclid(q)
    } else {
        (-p).div_euclid(-q)
    }
}

fn div_ceil(p: i128, q: i128) -> i128 {
    -div_floor(-p, q)
}

fn clamp_i64(v: i128) -> i64 {
    v.clamp(i128::from(i64::MIN), i128::from(i64::MAX)) as i64
}
