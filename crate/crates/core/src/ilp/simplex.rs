//! Exact phase-1 simplex over bounded variables.
//!
//! Answers one question: does a system of linear rows admit any rational
//! point inside a box? No objective, no floats. Artificial variables absorb
//! the initial residual of each row; driving their sum to zero by simplex
//! pivots either exhibits a feasible point or proves there is none.
//!
//! Pivoting rule is steepest reduced cost (Dantzig) with a switch to Bland's
//! rule after a run of degenerate pivots, which makes termination
//! unconditional. All tableau arithmetic is exact rational, so "infeasible"
//! is a proof, not a numeric judgement.

use super::rat::Rat;
use super::solve::Deadline;

/// `sum terms <= rhs` (or `= rhs` when `eq`) over structural columns.
pub(crate) struct LpRow {
    pub terms: Vec<(usize, Rat)>,
    pub rhs: Rat,
    pub eq: bool,
}

#[derive(Debug)]
pub(crate) enum LpOutcome {
    /// A rational point inside the box satisfying every row.
    Feasible(Vec<Rat>),
    Infeasible,
    /// Deadline expired mid-solve.
    Aborted,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Status {
    Basic(usize),
    AtLo,
    AtUp,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Structural,
    Slack,
    Artificial,
}

struct Col {
    lo: Rat,
    /// `None` is plus infinity (artificials only).
    hi: Option<Rat>,
    kind: Kind,
    /// An artificial that has left the basis is done for good.
    retired: bool,
}

impl Col {
    fn bound_value(&self, status: Status) -> Rat {
        match status {
            Status::AtLo => self.lo.clone(),
            Status::AtUp => self.hi.clone().expect("AtUp on unbounded column"),
            Status::Basic(_) => unreachable!("bound value of a basic column"),
        }
    }
}

/// Searches for a rational point of `rows` inside the per-variable box `dom`.
pub(crate) fn feasible_point(rows: &[LpRow], dom: &[(i64, i64)], deadline: &Deadline) -> LpOutcome {
    let n = dom.len();
    let mut cols: Vec<Col> = dom
        .iter()
        .map(|&(lo, hi)| {
            debug_assert!(lo <= hi);
            Col {
                lo: Rat::from_int(lo),
                hi: Some(Rat::from_int(hi)),
                kind: Kind::Structural,
                retired: false,
            }
        })
        .collect();
    let mut status: Vec<Status> = vec![Status::AtLo; n];

    // Tableau rows, one per usable input row, with the basic variable's
    // column scaled to +1. The starting point sits at all lower bounds.
    let mut tab: Vec<Vec<Rat>> = Vec::new();
    let mut basis: Vec<usize> = Vec::new();
    let mut xb: Vec<Rat> = Vec::new();

    struct Pending {
        coefs: Vec<Rat>,
        slack: Option<usize>,
        residual: Rat,
    }
    let mut pending: Vec<Pending> = Vec::new();

    for row in rows {
        if row.terms.is_empty() {
            let violated = if row.eq {
                !row.rhs.is_zero()
            } else {
                row.rhs.is_negative()
            };
            if violated {
                return LpOutcome::Infeasible;
            }
            continue;
        }
        let mut coefs = vec![Rat::zero(); n];
        let mut dot = Rat::zero();
        let mut row_min = Rat::zero();
        for (v, a) in &row.terms {
            debug_assert!(coefs[*v].is_zero(), "duplicate term");
            coefs[*v] = a.clone();
            dot = &dot + &(a * &cols[*v].lo);
            let at_lo = a * &cols[*v].lo;
            let at_hi = a * cols[*v].hi.as_ref().expect("structural bounds are finite");
            row_min = &row_min + &at_lo.clone().min(at_hi);
        }
        let slack = if row.eq {
            None
        } else {
            let span = &row.rhs - &row_min;
            if span.is_negative() {
                // Even the row's minimum over the box exceeds rhs.
                return LpOutcome::Infeasible;
            }
            cols.push(Col {
                lo: Rat::zero(),
                hi: Some(span),
                kind: Kind::Slack,
                retired: false,
            });
            status.push(Status::AtLo);
            Some(cols.len() - 1)
        };
        pending.push(Pending {
            coefs,
            slack,
            residual: &row.rhs - &dot,
        });
    }

    for p in pending {
        let Pending {
            mut coefs,
            slack,
            mut residual,
        } = p;
        coefs.resize(cols.len(), Rat::zero());
        if let Some(s) = slack {
            if !residual.is_negative() {
                // Slack itself can be basic; no artificial needed. Its upper
                // bound rhs - row_min dominates the residual at lower bounds.
                coefs[s] = Rat::one();
                tab.push(coefs);
                basis.push(s);
                status[s] = Status::Basic(tab.len() - 1);
                xb.push(residual);
                continue;
            }
            coefs[s] = Rat::one();
        }
        // Scale the row so the artificial enters with +1 and a nonnegative
        // value.
        if residual.is_negative() {
            for c in &mut coefs {
                if !c.is_zero() {
                    *c = -&*c;
                }
            }
            residual = -residual;
        }
        coefs.push(Rat::one());
        cols.push(Col {
            lo: Rat::zero(),
            hi: None,
            kind: Kind::Artificial,
            retired: false,
        });
        status.push(Status::Basic(tab.len()));
        basis.push(cols.len() - 1);
        // Rows created earlier have no entry in the new artificial column.
        for row in &mut tab {
            row.resize(cols.len(), Rat::zero());
        }
        tab.push(coefs);
        xb.push(residual);
    }
    let total_cols = cols.len();
    for row in &mut tab {
        row.resize(total_cols, Rat::zero());
    }
    let m = tab.len();

    // Phase-1 cost: minimize the sum of artificials. Price out the initial
    // basis so reduced costs start consistent.
    let mut cost = vec![Rat::zero(); total_cols];
    for c in 0..total_cols {
        if cols[c].kind == Kind::Artificial {
            cost[c] = Rat::one();
        }
    }
    let mut z = Rat::zero();
    for r in 0..m {
        if cols[basis[r]].kind == Kind::Artificial {
            for j in 0..total_cols {
                if !tab[r][j].is_zero() {
                    cost[j] = &cost[j] - &tab[r][j];
                }
            }
            z = &z + &xb[r];
        }
    }

    let mut bland = false;
    let mut degenerate_streak = 0u32;
    let mut iter = 0u64;
    loop {
        if z.is_zero() {
            return LpOutcome::Feasible(extract(n, &cols, &status, &xb));
        }
        iter += 1;
        if iter.is_multiple_of(128) && deadline.expired() {
            return LpOutcome::Aborted;
        }

        // Entering column: a nonbasic column whose movement lowers z.
        let mut enter: Option<(usize, i8, Rat)> = None; // (col, direction, |d|)
        for j in 0..total_cols {
            if cols[j].retired {
                continue;
            }
            let dir = match status[j] {
                Status::Basic(_) => continue,
                Status::AtLo => {
                    if !cost[j].is_negative() {
                        continue;
                    }
                    1i8
                }
                Status::AtUp => {
                    if !cost[j].is_positive() {
                        continue;
                    }
                    -1i8
                }
            };
            if cols[j].hi.as_ref() == Some(&cols[j].lo) {
                continue; // fixed column, cannot move
            }
            if bland {
                enter = Some((j, dir, cost[j].abs()));
                break;
            }
            let mag = cost[j].abs();
            match &enter {
                Some((_, _, best)) if *best >= mag => {}
                _ => enter = Some((j, dir, mag)),
            }
        }
        let Some((j, dir, _)) = enter else {
            // Optimal with z > 0: some artificial is stuck positive.
            return LpOutcome::Infeasible;
        };

        // Ratio test: how far can column j move before a basic variable (or
        // j's own opposite bound) blocks.
        let span: Option<Rat> = cols[j]
            .hi
            .as_ref()
            .map(|h| h - &cols[j].lo);
        let mut best: Option<Rat> = span; // None is unbounded
        let mut leave: Option<(usize, bool)> = None; // (row, leaves at upper)
        for i in 0..m {
            let a = &tab[i][j];
            if a.is_zero() {
                continue;
            }
            // Basic i moves by -dir * a per unit of j.
            let rate = if dir > 0 { a.clone() } else { -a };
            let b = basis[i];
            let (limit, to_upper) = if rate.is_positive() {
                ((&xb[i] - &cols[b].lo) / &rate, false)
            } else {
                match &cols[b].hi {
                    Some(h) => ((h - &xb[i]) / &-rate, true),
                    None => continue, // unbounded above, never blocks
                }
            };
            debug_assert!(!limit.is_negative(), "basic variable outside bounds");
            let better = match &best {
                None => true,
                Some(cur) => {
                    limit < *cur
                        || (limit == *cur
                            && leave.as_ref().is_some_and(|(r, _)| b < basis[*r]))
                }
            };
            if better {
                best = Some(limit);
                leave = Some((i, to_upper));
            }
        }
        let Some(delta) = best else {
            unreachable!("phase-1 objective is bounded below by zero");
        };

        // Apply the movement to every basic value and to z.
        let d_move = if dir > 0 { delta.clone() } else { -&delta };
        if !delta.is_zero() {
            for i in 0..m {
                if !tab[i][j].is_zero() {
                    xb[i] = &xb[i] - &(&tab[i][j] * &d_move);
                }
            }
            z = &z + &(&cost[j] * &d_move);
            degenerate_streak = 0;
            bland = false;
        } else {
            degenerate_streak += 1;
            if degenerate_streak >= 12 {
                bland = true;
            }
        }

        match leave {
            None => {
                // Bound flip: j travels its whole span to the other bound.
                status[j] = match status[j] {
                    Status::AtLo => Status::AtUp,
                    Status::AtUp => Status::AtLo,
                    Status::Basic(_) => unreachable!(),
                };
            }
            Some((r, to_upper)) => {
                let entering_val = &cols[j].bound_value(status[j]) + &d_move;
                let leaving = basis[r];
                debug_assert_eq!(
                    xb[r],
                    if to_upper {
                        cols[leaving].hi.clone().unwrap()
                    } else {
                        cols[leaving].lo.clone()
                    },
                    "leaving variable must land exactly on its bound"
                );
                status[leaving] = if to_upper { Status::AtUp } else { Status::AtLo };
                if cols[leaving].kind == Kind::Artificial {
                    // Artificials are unbounded above so they always leave at
                    // zero; they never need to come back.
                    debug_assert!(!to_upper);
                    cols[leaving].retired = true;
                }

                // Gauss-Jordan pivot on (r, j).
                let piv = tab[r][j].clone();
                debug_assert!(!piv.is_zero());
                if piv != Rat::one() {
                    for t in &mut tab[r] {
                        if !t.is_zero() {
                            *t = &*t / &piv;
                        }
                    }
                }
                let pivot_row = tab[r].clone();
                for (i, row) in tab.iter_mut().enumerate() {
                    if i == r || row[j].is_zero() {
                        continue;
                    }
                    let f = row[j].clone();
                    for (t, p) in row.iter_mut().zip(&pivot_row) {
                        if !p.is_zero() {
                            *t = &*t - &(&f * p);
                        }
                    }
                }
                if !cost[j].is_zero() {
                    let f = cost[j].clone();
                    for (t, p) in cost.iter_mut().zip(&pivot_row) {
                        if !p.is_zero() {
                            *t = &*t - &(&f * p);
                        }
                    }
                }
                basis[r] = j;
                status[j] = Status::Basic(r);
                xb[r] = entering_val;
            }
        }
    }
}

fn extract(n: usize, cols: &[Col], status: &[Status], xb: &[Rat]) -> Vec<Rat> {
    (0..n)
        .map(|j| match status[j] {
            Status::Basic(r) => xb[r].clone(),
            s => cols[j].bound_value(s),
        })
        .collect()
}
