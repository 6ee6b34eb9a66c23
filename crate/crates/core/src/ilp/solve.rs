//! Feasibility search: depth-first branch and bound.
//!
//! Each node is a box of integer domains. The node is first shrunk by bounds
//! propagation, then its LP relaxation is solved exactly; infeasibility at
//! either stage prunes the subtree. A fractional relaxation point picks the
//! branching variable (most fractional coordinate); an integral point is
//! checked against the quadratic rows, and a violated ball splits the node
//! three ways around the offending coordinate. Every verdict this module
//! returns is backed by exact arithmetic end to end.

use std::time::{Duration, Instant};

use super::model::{IlpModel, Relation, Violation};
use super::propagate::{PropOutcome, PropSystem};
use super::rat::Rat;
use super::simplex::{feasible_point, LpOutcome, LpRow};

/// Wall-clock budget carried through the search. `none` never expires.
#[derive(Clone, Copy, Debug)]
pub struct Deadline(Option<Instant>);

impl Deadline {
    pub fn none() -> Deadline {
        Deadline(None)
    }

    pub fn after(budget: Duration) -> Deadline {
        Deadline(Some(Instant::now() + budget))
    }

    pub fn expired(&self) -> bool {
        self.0.is_some_and(|t| Instant::now() >= t)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    /// A satisfying integer assignment, indexed by variable id.
    Feasible(Vec<i64>),
    Infeasible,
    Timeout,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Branch-and-bound nodes processed.
    pub nodes: u64,
    /// LP relaxations solved.
    pub lp_calls: u64,
}

/// Decides feasibility of `model` within the deadline.
pub fn solve(model: &IlpModel, deadline: &Deadline) -> SolveResult {
    let mut norm;
    let norm_ref = if model.is_normalized() {
        model
    } else {
        norm = model.clone();
        norm.normalize();
        &norm
    };
    let prop = PropSystem::compile(norm_ref);
    let lp_rows: Vec<LpRow> = norm_ref
        .constraints()
        .iter()
        .filter(|c| !c.terms.is_empty())
        .map(|c| LpRow {
            terms: c.terms.iter().map(|(v, a)| (v.index(), a.clone())).collect(),
            rhs: c.rhs.clone(),
            eq: c.rel == Relation::Eq,
        })
        .collect();

    let root: Vec<(i64, i64)> = norm_ref.vars().iter().map(|v| (v.lo, v.hi)).collect();
    let mut stack = vec![root];
    let mut nodes = 0u64;
    let mut lp_calls = 0u64;

    while let Some(mut dom) = stack.pop() {
        nodes += 1;
        if deadline.expired() {
            return SolveResult {
                status: SolveStatus::Timeout,
                nodes,
                lp_calls,
            };
        }
        if prop.propagate(&mut dom) == PropOutcome::Infeasible {
            continue;
        }

        if dom.iter().all(|&(lo, hi)| lo == hi) {
            let candidate: Vec<i64> = dom.iter().map(|&(lo, _)| lo).collect();
            // Propagation alone nearly proves this point; the full exact
            // check also covers rows propagation had to skip.
            if norm_ref.check_assignment(&candidate).expect("arity") == Ok(()) {
                return SolveResult {
                    status: SolveStatus::Feasible(candidate),
                    nodes,
                    lp_calls,
                };
            }
            continue;
        }

        lp_calls += 1;
        let point = match feasible_point(&lp_rows, &dom, deadline) {
            LpOutcome::Infeasible => continue,
            LpOutcome::Aborted => {
                return SolveResult {
                    status: SolveStatus::Timeout,
                    nodes,
                    lp_calls,
                }
            }
            LpOutcome::Feasible(p) => p,
        };

        // Most fractional coordinate, ties to the lowest id.
        let mut branch: Option<(usize, i64)> = None;
        let mut best_score = None;
        for (j, x) in point.iter().enumerate() {
            if x.is_integer() {
                continue;
            }
            let f = x.frac();
            let score = f.clone().min(&Rat::one() - &f);
            if best_score.as_ref().is_none_or(|b| score > *b) {
                best_score = Some(score);
                branch = Some((j, x.floor_i64().expect("domain bounds fit i64")));
            }
        }

        match branch {
            Some((j, fl)) => {
                let (lo, hi) = dom[j];
                debug_assert!(lo <= fl && fl < hi);
                let mut down = dom.clone();
                down[j] = (lo, fl);
                let mut up = dom;
                up[j] = (fl + 1, hi);
                // Explore the nearer integer first: stack order is reversed.
                if point[j].frac() <= Rat::new(1, 2) {
                    stack.push(up);
                    stack.push(down);
                } else {
                    stack.push(down);
                    stack.push(up);
                }
            }
            None => {
                // Integral relaxation point. The linear rows hold by
                // construction; quadratic rows may not.
                let candidate: Vec<i64> = point
                    .iter()
                    .map(|x| x.as_i64().expect("integral LP point fits i64"))
                    .collect();
                match norm_ref.check_assignment(&candidate).expect("arity") {
                    Ok(()) => {
                        return SolveResult {
                            status: SolveStatus::Feasible(candidate),
                            nodes,
                            lp_calls,
                        }
                    }
                    Err(Violation::Quadratic { index }) => {
                        let q = &norm_ref.quadratics()[index];
                        // Split on the unfixed coordinate farthest from the
                        // ball's center. One always exists: were every
                        // deviating coordinate fixed, propagation would have
                        // pruned this node.
                        let (var, center) = q
                            .terms
                            .iter()
                            .copied()
                            .filter(|&(v, c)| {
                                let (lo, hi) = dom[v.index()];
                                lo < hi && candidate[v.index()] != c
                            })
                            .max_by_key(|&(v, c)| {
                                ((candidate[v.index()] - c).abs(), std::cmp::Reverse(v))
                            })
                            .expect("violated ball with every deviating coordinate fixed");
                        let j = var.index();
                        let v = candidate[j];
                        let (lo, hi) = dom[j];
                        let mut mid = dom.clone();
                        mid[j] = (v, v);
                        let near_is_down = center < v;
                        // Push far side first, then the pinned value, then
                        // the side containing the center (explored first).
                        let mut near = None;
                        for is_down in [false, true] {
                            let side = if is_down {
                                (v > lo).then(|| {
                                    let mut d = dom.clone();
                                    d[j] = (lo, v - 1);
                                    d
                                })
                            } else {
                                (v < hi).then(|| {
                                    let mut d = dom.clone();
                                    d[j] = (v + 1, hi);
                                    d
                                })
                            };
                            let Some(d) = side else { continue };
                            if is_down == near_is_down {
                                near = Some(d);
                            } else {
                                stack.push(d);
                            }
                        }
                        stack.push(mid);
                        if let Some(d) = near {
                            stack.push(d);
                        }
                    }
                    Err(v) => unreachable!("exact LP returned an invalid point: {v:?}"),
                }
            }
        }
    }

    SolveResult {
        status: SolveStatus::Infeasible,
        nodes,
        lp_calls,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ilp::model::{LinExpr, VarId};

    type RowSpec = (Vec<(usize, i64)>, Relation, i64);

    fn model_with(bounds: &[(i64, i64)], rows: &[RowSpec]) -> IlpModel {
        let mut m = IlpModel::new();
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            m.add_int(format!("x{i}"), lo, hi).unwrap();
        }
        for (terms, rel, rhs) in rows {
            let mut e = LinExpr::new();
            for &(v, c) in terms {
                e.add_term(VarId(v as u32), Rat::from_int(c));
            }
            m.constrain("r", &e, *rel, Rat::from_int(*rhs));
        }
        m
    }

    fn status_of(m: &IlpModel) -> SolveStatus {
        solve(m, &Deadline::none()).status
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let m = model_with(
            &[(0, 5)],
            &[
                (vec![(0, 1)], Relation::Ge, 3),
                (vec![(0, 1)], Relation::Le, 2),
            ],
        );
        assert_eq!(status_of(&m), SolveStatus::Infeasible);
    }

    #[test]
    fn simple_equality_is_solved() {
        let m = model_with(&[(0, 10)], &[(vec![(0, 2)], Relation::Eq, 4)]);
        assert_eq!(status_of(&m), SolveStatus::Feasible(vec![2]));
    }

    #[test]
    fn odd_equality_has_no_integer_solution() {
        let m = model_with(&[(0, 2)], &[(vec![(0, 2)], Relation::Eq, 3)]);
        assert_eq!(status_of(&m), SolveStatus::Infeasible);
    }

    #[test]
    fn two_variable_diophantine_row() {
        let m = model_with(&[(0, 10), (0, 10)], &[(vec![(0, 3), (1, 5)], Relation::Eq, 22)]);
        match status_of(&m) {
            SolveStatus::Feasible(a) => {
                assert_eq!(3 * a[0] + 5 * a[1], 22);
            }
            other => panic!("expected feasible, got {other:?}"),
        }
    }

    #[test]
    fn quadratic_ball_prunes_linear_relaxation() {
        // |x| <= 3 by ball, x >= 4 by row: the relaxation is happy, integers
        // are not.
        let mut m = model_with(&[(-5, 5)], &[(vec![(0, 1)], Relation::Ge, 4)]);
        m.add_quadratic("q", vec![(VarId(0), 0)], 9);
        assert_eq!(status_of(&m), SolveStatus::Infeasible);

        let mut m = model_with(&[(-5, 5)], &[(vec![(0, 1)], Relation::Ge, 2)]);
        m.add_quadratic("q", vec![(VarId(0), 0)], 9);
        match status_of(&m) {
            SolveStatus::Feasible(a) => assert!(a[0] >= 2 && a[0] <= 3),
            other => panic!("expected feasible, got {other:?}"),
        }
    }

    #[test]
    fn two_dimensional_ball_with_halfspace() {
        let ball = |r2: i64| {
            let mut m = model_with(
                &[(-10, 10), (-10, 10)],
                &[(vec![(0, 1), (1, 1)], Relation::Ge, 3)],
            );
            m.add_quadratic("q", vec![(VarId(0), 1), (VarId(1), 1)], r2);
            m
        };
        match status_of(&ball(2)) {
            SolveStatus::Feasible(a) => {
                assert!(a[0] + a[1] >= 3);
                assert!((a[0] - 1).pow(2) + (a[1] - 1).pow(2) <= 2);
            }
            other => panic!("expected feasible, got {other:?}"),
        }
        // Radius zero pins (1, 1), whose coordinate sum is 2.
        assert_eq!(status_of(&ball(0)), SolveStatus::Infeasible);
    }

    #[test]
    fn timeout_is_reported() {
        let m = model_with(
            &[(0, 1000), (0, 1000), (0, 1000)],
            &[
                (vec![(0, 3), (1, 5), (2, 7)], Relation::Eq, 1502),
                (vec![(0, 1), (1, 1), (2, 1)], Relation::Ge, 10),
            ],
        );
        let r = solve(&m, &Deadline::after(Duration::ZERO));
        assert_eq!(r.status, SolveStatus::Timeout);
    }

    #[test]
    fn agrees_with_enumeration_on_random_models() {
        let mut seed = 0x853c_49e6_748f_ea9bu64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            seed
        };
        for case in 0..300 {
            let n = (next() % 3 + 1) as usize;
            let mut bounds = Vec::new();
            for _ in 0..n {
                let lo = (next() % 9) as i64 - 4;
                bounds.push((lo, lo + (next() % 7) as i64));
            }
            let mut m = IlpModel::new();
            for (i, &(lo, hi)) in bounds.iter().enumerate() {
                m.add_int(format!("x{i}"), lo, hi).unwrap();
            }
            let n_rows = next() % 4 + 1;
            for _ in 0..n_rows {
                let mut e = LinExpr::new();
                let mut any = false;
                for v in 0..n {
                    let c = (next() % 9) as i64 - 4;
                    if c != 0 {
                        e.add_term(VarId(v as u32), Rat::from_int(c));
                        any = true;
                    }
                }
                if !any {
                    continue;
                }
                let rel = match next() % 4 {
                    0 => Relation::Le,
                    1 => Relation::Lt,
                    2 => Relation::Ge,
                    _ => Relation::Eq,
                };
                let rhs = (next() % 21) as i64 - 10;
                m.constrain("r", &e, rel, Rat::from_int(rhs));
            }
            if next() % 2 == 0 {
                let terms: Vec<(VarId, i64)> = (0..n)
                    .map(|v| (VarId(v as u32), bounds[v].0 + (next() % 3) as i64))
                    .collect();
                m.add_quadratic("q", terms, (next() % 12) as i64);
            }

            // Ground truth by full enumeration of the box.
            let mut found = None;
            let mut point = bounds.iter().map(|&(lo, _)| lo).collect::<Vec<i64>>();
            'enumerate: loop {
                if m.check_assignment(&point).unwrap() == Ok(()) {
                    found = Some(point.clone());
                    break;
                }
                for d in 0..n {
                    if point[d] < bounds[d].1 {
                        point[d] += 1;
                        for (i, p) in point.iter_mut().enumerate().take(d) {
                            *p = bounds[i].0;
                        }
                        continue 'enumerate;
                    }
                }
                break;
            }

            match (status_of(&m), found) {
                (SolveStatus::Feasible(a), Some(_)) => {
                    assert_eq!(m.check_assignment(&a).unwrap(), Ok(()), "case {case}");
                }
                (SolveStatus::Infeasible, None) => {}
                (got, want) => panic!("case {case}: solver {got:?}, enumeration {want:?}"),
            }
        }
    }
}
