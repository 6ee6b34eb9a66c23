//! Integer linear model representation.
//!
//! A model is a set of bounded integer variables, linear constraints over
//! them, and optional quadratic ball constraints of the form
//! `sum_i (x_i - c_i)^2 <= bound`. There is no objective: every question the
//! verifier asks is a pure feasibility question.
//!
//! Constraints may be written with rational coefficients and strict
//! inequalities; [`IlpModel::normalize`] rewrites each row into an equivalent
//! integer non-strict form (`<=` or `=`), which is what the solver and the
//! default file exporter consume. Normalization preserves the integer
//! solution set exactly: strict `<` over integers is `<=` with the right-hand
//! side reduced by one, and dividing a `<=` row by the coefficient gcd may
//! round the right-hand side down for free.

use std::collections::BTreeMap;
use std::fmt;

use num::{BigInt, BigRational, Integer, One, Zero};
use thiserror::Error;

use super::rat::Rat;

/// Index of a variable in its model. Only meaningful for the model that
/// created it.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct VarId(pub(crate) u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum VarKind {
    Int,
    Bool,
}

#[derive(Clone, Debug)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lo: i64,
    pub hi: i64,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Relation {
    Le,
    Lt,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Lt => "<",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

/// Linear form `sum coef * var + constant`, used to build constraints.
#[derive(Clone, Debug, Default)]
pub struct LinExpr {
    terms: BTreeMap<VarId, Rat>,
    constant: Rat,
}

impl LinExpr {
    pub fn new() -> LinExpr {
        LinExpr {
            terms: BTreeMap::new(),
            constant: Rat::zero(),
        }
    }

    pub fn from_var(v: VarId) -> LinExpr {
        let mut e = LinExpr::new();
        e.add_term(v, Rat::one());
        e
    }

    pub fn constant(c: Rat) -> LinExpr {
        LinExpr {
            terms: BTreeMap::new(),
            constant: c,
        }
    }

    /// Adds `coef * var`, accumulating with any existing term for `var`.
    pub fn add_term(&mut self, var: VarId, coef: Rat) -> &mut Self {
        let slot = self.terms.entry(var).or_insert_with(Rat::zero);
        *slot = &*slot + &coef;
        self
    }

    pub fn add_constant(&mut self, c: Rat) -> &mut Self {
        self.constant = &self.constant + &c;
        self
    }

    pub fn constant_part(&self) -> &Rat {
        &self.constant
    }

    pub fn iter_terms(&self) -> impl Iterator<Item = (VarId, &Rat)> {
        self.terms.iter().map(|(v, c)| (*v, c))
    }

    pub fn is_constant(&self) -> bool {
        self.terms.values().all(Rat::is_zero)
    }

    /// Evaluates at an assignment indexed by variable id.
    pub fn eval(&self, assignment: &[i64]) -> Rat {
        let mut acc = self.constant.clone();
        for (v, c) in &self.terms {
            acc = &acc + &(c * &Rat::from_int(assignment[v.index()]));
        }
        acc
    }
}

/// `sum terms <= / < / = / >= rhs`. Terms are sorted by variable id and have
/// nonzero coefficients.
#[derive(Clone, Debug)]
pub struct LinearConstraint {
    pub label: String,
    pub terms: Vec<(VarId, Rat)>,
    pub rel: Relation,
    pub rhs: Rat,
}

/// `sum (x_i - center_i)^2 <= bound`. Kept separate from the linear rows; the
/// solver enforces it lazily and the exporter writes it as a quadratic row.
#[derive(Clone, Debug)]
pub struct QuadraticConstraint {
    pub label: String,
    pub terms: Vec<(VarId, i64)>,
    pub bound: i64,
}

/// First failed requirement found by [`IlpModel::check_assignment`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    OutOfBounds { var: usize, value: i64 },
    Linear { index: usize },
    Quadratic { index: usize },
}

#[derive(Debug, Error)]
pub enum ModelBuildError {
    #[error("variable {name:?} has inverted bounds [{lo}, {hi}]")]
    InvertedBounds { name: String, lo: i64, hi: i64 },
    #[error("assignment has {got} values but the model has {expected} variables")]
    AssignmentArity { expected: usize, got: usize },
}

#[derive(Clone, Debug, Default)]
pub struct IlpModel {
    vars: Vec<Variable>,
    constraints: Vec<LinearConstraint>,
    quadratics: Vec<QuadraticConstraint>,
    normalized: bool,
}

impl IlpModel {
    pub fn new() -> IlpModel {
        IlpModel::default()
    }

    pub fn add_int(
        &mut self,
        name: impl Into<String>,
        lo: i64,
        hi: i64,
    ) -> Result<VarId, ModelBuildError> {
        let name = name.into();
        if lo > hi {
            return Err(ModelBuildError::InvertedBounds { name, lo, hi });
        }
        self.vars.push(Variable {
            name,
            kind: VarKind::Int,
            lo,
            hi,
        });
        Ok(VarId((self.vars.len() - 1) as u32))
    }

    pub fn add_bool(&mut self, name: impl Into<String>) -> VarId {
        self.vars.push(Variable {
            name: name.into(),
            kind: VarKind::Bool,
            lo: 0,
            hi: 1,
        });
        VarId((self.vars.len() - 1) as u32)
    }

    /// Replaces the bounds of an existing variable. Panics on inversion;
    /// bounds tightening never widens, so an inversion is a caller bug.
    pub fn set_bounds(&mut self, var: VarId, lo: i64, hi: i64) {
        assert!(lo <= hi, "inverted bounds for {}", self.vars[var.index()].name);
        let v = &mut self.vars[var.index()];
        v.lo = lo;
        v.hi = hi;
    }

    /// Adds `expr rel rhs`. The expression's constant moves to the right-hand
    /// side; zero-coefficient terms are dropped. A constraint with no terms
    /// is kept and treated as a ground truth or ground contradiction.
    pub fn constrain(&mut self, label: impl Into<String>, expr: &LinExpr, rel: Relation, rhs: Rat) {
        let terms: Vec<(VarId, Rat)> = expr
            .iter_terms()
            .filter(|(_, c)| !c.is_zero())
            .map(|(v, c)| (v, c.clone()))
            .collect();
        self.constraints.push(LinearConstraint {
            label: label.into(),
            terms,
            rel,
            rhs: &rhs - expr.constant_part(),
        });
        self.normalized = false;
    }

    pub fn add_quadratic(&mut self, label: impl Into<String>, terms: Vec<(VarId, i64)>, bound: i64) {
        self.quadratics.push(QuadraticConstraint {
            label: label.into(),
            terms,
            bound,
        });
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.index()]
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    pub fn quadratics(&self) -> &[QuadraticConstraint] {
        &self.quadratics
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Interval of values `expr` can take over the variable bounds.
    pub fn expr_range(&self, expr: &LinExpr) -> (Rat, Rat) {
        let mut lo = expr.constant_part().clone();
        let mut hi = lo.clone();
        for (v, c) in expr.iter_terms() {
            if c.is_zero() {
                continue;
            }
            let var = self.var(v);
            let (a, b) = (
                c * &Rat::from_int(var.lo),
                c * &Rat::from_int(var.hi),
            );
            if c.is_positive() {
                lo = &lo + &a;
                hi = &hi + &b;
            } else {
                lo = &lo + &b;
                hi = &hi + &a;
            }
        }
        (lo, hi)
    }

    /// Exact satisfaction check. Returns the first violated requirement in
    /// order: variable bounds, then linear rows, then quadratic rows.
    pub fn check_assignment(&self, assignment: &[i64]) -> Result<Result<(), Violation>, ModelBuildError> {
        if assignment.len() != self.vars.len() {
            return Err(ModelBuildError::AssignmentArity {
                expected: self.vars.len(),
                got: assignment.len(),
            });
        }
        for (i, v) in self.vars.iter().enumerate() {
            let x = assignment[i];
            if x < v.lo || x > v.hi {
                return Ok(Err(Violation::OutOfBounds { var: i, value: x }));
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            let mut lhs = Rat::zero();
            for (v, coef) in &c.terms {
                lhs = &lhs + &(coef * &Rat::from_int(assignment[v.index()]));
            }
            let ok = match c.rel {
                Relation::Le => lhs <= c.rhs,
                Relation::Lt => lhs < c.rhs,
                Relation::Eq => lhs == c.rhs,
                Relation::Ge => lhs >= c.rhs,
            };
            if !ok {
                return Ok(Err(Violation::Linear { index: i }));
            }
        }
        for (i, q) in self.quadratics.iter().enumerate() {
            let mut acc: i128 = 0;
            for (v, center) in &q.terms {
                let d = i128::from(assignment[v.index()]) - i128::from(*center);
                acc += d * d;
            }
            if acc > i128::from(q.bound) {
                return Ok(Err(Violation::Quadratic { index: i }));
            }
        }
        Ok(Ok(()))
    }

    /// Rewrites every linear row into integer coefficients with relation `<=`
    /// or `=`, preserving the set of integer solutions:
    ///
    /// 1. `>=` rows are negated into `<=`.
    /// 2. Coefficients are scaled by the least common multiple of their
    ///    denominators (including the right-hand side's).
    /// 3. Strict `<` becomes `<=` with the right-hand side lowered by one.
    /// 4. Each row is divided by the gcd of its coefficients; for `<=` the
    ///    right-hand side floors, for `=` a non-divisible right-hand side
    ///    marks the row as a ground contradiction.
    pub fn normalize(&mut self) {
        for c in &mut self.constraints {
            normalize_row(c);
        }
        self.normalized = true;
    }

    /// Relaxes strict rows by `epsilon` instead of normalizing:
    /// `lhs < rhs` becomes `lhs <= rhs - epsilon`, everything else is kept
    /// verbatim, rational coefficients included. Intended for exporting
    /// models to solvers that accept rational input but not strict rows.
    pub fn epsilon_relax(&mut self, epsilon: &Rat) {
        assert!(epsilon.is_positive(), "epsilon must be positive");
        for c in &mut self.constraints {
            match c.rel {
                Relation::Lt => {
                    c.rhs = &c.rhs - epsilon;
                    c.rel = Relation::Le;
                }
                Relation::Ge | Relation::Le | Relation::Eq => {}
            }
        }
    }

    /// Half the minimum nonzero gap between expressible left-hand-side values
    /// and the right-hand sides of strict rows; a safe `epsilon` for
    /// [`IlpModel::epsilon_relax`]. `None` when the model has no strict rows.
    pub fn strict_gap_epsilon(&self) -> Option<Rat> {
        let mut denom_lcm = BigInt::one();
        let mut any = false;
        for c in &self.constraints {
            if c.rel != Relation::Lt {
                continue;
            }
            any = true;
            for (_, coef) in &c.terms {
                denom_lcm = denom_lcm.lcm(&coef.into_parts().1);
            }
            denom_lcm = denom_lcm.lcm(&c.rhs.into_parts().1);
        }
        if !any {
            return None;
        }
        // Left-hand sides live on the grid (1/lcm) Z, so any strict violation
        // is at least 1/lcm wide; half of that cannot cut off solutions.
        Some(Rat::from_big(BigRational::new(
            BigInt::one(),
            denom_lcm * BigInt::from(2),
        )))
    }
}

fn normalize_row(c: &mut LinearConstraint) {
    if c.rel == Relation::Ge {
        for (_, coef) in &mut c.terms {
            *coef = -&*coef;
        }
        c.rhs = -&c.rhs;
        c.rel = Relation::Le;
    }

    // Scale by the lcm of all denominators to reach integers.
    let mut denom_lcm = BigInt::one();
    for (_, coef) in &c.terms {
        denom_lcm = denom_lcm.lcm(&coef.into_parts().1);
    }
    denom_lcm = denom_lcm.lcm(&c.rhs.into_parts().1);
    let scale = Rat::from_big(BigRational::from_integer(denom_lcm));
    if scale != Rat::one() {
        for (_, coef) in &mut c.terms {
            *coef = &*coef * &scale;
        }
        c.rhs = &c.rhs * &scale;
    }

    if c.rel == Relation::Lt {
        // Integer left-hand side strictly below an integer bound.
        c.rhs = &c.rhs - &Rat::one();
        c.rel = Relation::Le;
    }

    // Divide out the coefficient gcd.
    let mut g = BigInt::zero();
    for (_, coef) in &c.terms {
        g = g.gcd(&coef.into_parts().0);
    }
    if g > BigInt::one() {
        let rhs = c.rhs.into_parts().0;
        match c.rel {
            Relation::Le => {
                let dg = Rat::from_big(BigRational::from_integer(g.clone()));
                for (_, coef) in &mut c.terms {
                    *coef = &*coef / &dg;
                }
                c.rhs = Rat::from_big(BigRational::from_integer(rhs.div_floor(&g)));
            }
            Relation::Eq => {
                if rhs.is_multiple_of(&g) {
                    let dg = Rat::from_big(BigRational::from_integer(g.clone()));
                    for (_, coef) in &mut c.terms {
                        *coef = &*coef / &dg;
                    }
                    c.rhs = Rat::from_big(BigRational::from_integer(rhs / g));
                } else {
                    // gcd does not divide the right-hand side: no integer
                    // point satisfies the row. Ground contradiction.
                    c.terms.clear();
                    c.rel = Relation::Le;
                    c.rhs = -Rat::one();
                }
            }
            Relation::Lt | Relation::Ge => unreachable!("rewritten above"),
        }
    }
}
