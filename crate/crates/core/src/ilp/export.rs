//! LP-format model writer.
//!
//! Produces the CPLEX LP dialect understood by every mainstream solver:
//! a zero objective (feasibility problems have nothing to optimize), linear
//! rows, quadratic ball rows in expanded bracket form, explicit bounds, and
//! integrality sections. Output is deterministic: variables appear in
//! creation order, rows in insertion order, so files diff cleanly.
//!
//! Strict inequalities cannot be written in this format; normalize the model
//! (exact over integers) or epsilon-relax it first. Coefficients must be
//! integers or dyadic rationals, which print as exact finite decimals.

use std::collections::HashSet;
use std::fmt::Write as _;

use thiserror::Error;

use super::model::{IlpModel, Relation, VarKind};
use super::rat::{dyadic_decimal, Rat};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("row {label:?} is strict; normalize or epsilon-relax the model first")]
    StrictRow { label: String },
    #[error("row {label:?} has a coefficient {value} that is not an exact decimal")]
    NonDecimalCoefficient { label: String, value: String },
    #[error("name {name:?} is not a valid LP identifier")]
    BadName { name: String },
    #[error("name {name:?} is used twice")]
    DuplicateName { name: String },
    #[error("a model with no variables cannot carry its ground contradiction row")]
    NoVariables,
}

/// Renders the model as an LP-format string.
pub fn export_lp(model: &IlpModel) -> Result<String, ExportError> {
    let mut seen = HashSet::new();
    for v in model.vars() {
        check_name(&v.name)?;
        if !seen.insert(v.name.as_str()) {
            return Err(ExportError::DuplicateName {
                name: v.name.clone(),
            });
        }
    }

    let mut out = String::new();
    out.push_str("Minimize\n obj: 0\nSubject To\n");

    for c in model.constraints() {
        let rel = match c.rel {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
            Relation::Lt => {
                return Err(ExportError::StrictRow {
                    label: c.label.clone(),
                })
            }
        };
        write!(out, " {}:", c.label).unwrap();
        if c.terms.is_empty() {
            // A ground row. The format needs at least one term; a zero
            // coefficient on any variable is faithful.
            let v = model.vars().first().ok_or(ExportError::NoVariables)?;
            write!(out, " 0 {}", v.name).unwrap();
        } else {
            for (k, (v, coef)) in c.terms.iter().enumerate() {
                push_term(&mut out, model.var(*v).name.as_str(), coef, k == 0, &c.label)?;
            }
        }
        writeln!(out, " {} {}", rel, decimal(&c.rhs, &c.label)?).unwrap();
    }

    for q in model.quadratics() {
        // sum (x - c)^2 <= B expands to sum x^2 - 2c x <= B - sum c^2.
        write!(out, " {}:", q.label).unwrap();
        let mut first = true;
        let mut center_sq: i128 = 0;
        for (v, center) in &q.terms {
            center_sq += i128::from(*center) * i128::from(*center);
            if *center != 0 {
                let coef = Rat::from_int(-2 * center);
                push_term(&mut out, model.var(*v).name.as_str(), &coef, first, &q.label)?;
                first = false;
            }
        }
        if first {
            out.push_str(" [");
        } else {
            out.push_str(" + [");
        }
        for (k, (v, _)) in q.terms.iter().enumerate() {
            if k > 0 {
                out.push_str(" +");
            }
            write!(out, " {} ^ 2", model.var(*v).name).unwrap();
        }
        writeln!(out, " ] <= {}", i128::from(q.bound) - center_sq).unwrap();
    }

    out.push_str("Bounds\n");
    for v in model.vars() {
        if v.kind == VarKind::Bool {
            continue;
        }
        if v.lo == v.hi {
            writeln!(out, " {} = {}", v.name, v.lo).unwrap();
        } else {
            writeln!(out, " {} <= {} <= {}", v.lo, v.name, v.hi).unwrap();
        }
    }

    let ints: Vec<&str> = section_names(model, VarKind::Int);
    if !ints.is_empty() {
        out.push_str("Generals\n");
        push_names(&mut out, &ints);
    }
    let bools: Vec<&str> = section_names(model, VarKind::Bool);
    if !bools.is_empty() {
        out.push_str("Binaries\n");
        push_names(&mut out, &bools);
    }
    out.push_str("End\n");
    Ok(out)
}

fn section_names(model: &IlpModel, kind: VarKind) -> Vec<&str> {
    model
        .vars()
        .iter()
        .filter(|v| v.kind == kind)
        .map(|v| v.name.as_str())
        .collect()
}

fn push_names(out: &mut String, names: &[&str]) {
    let mut col = 0;
    for (k, name) in names.iter().enumerate() {
        if col > 0 && col + name.len() + 1 > 72 {
            out.push('\n');
            col = 0;
        }
        out.push(' ');
        out.push_str(name);
        col += name.len() + 1;
        if k == names.len() - 1 {
            out.push('\n');
        }
    }
}

fn push_term(
    out: &mut String,
    name: &str,
    coef: &Rat,
    first: bool,
    label: &str,
) -> Result<(), ExportError> {
    let mag = decimal(&coef.abs(), label)?;
    let sign = if coef.is_negative() {
        " -"
    } else if first {
        ""
    } else {
        " +"
    };
    if mag == "1" {
        write!(out, "{sign} {name}").unwrap();
    } else {
        write!(out, "{sign} {mag} {name}").unwrap();
    }
    Ok(())
}

fn decimal(value: &Rat, label: &str) -> Result<String, ExportError> {
    dyadic_decimal(value).ok_or_else(|| ExportError::NonDecimalCoefficient {
        label: label.to_string(),
        value: value.to_string(),
    })
}

fn check_name(name: &str) -> Result<(), ExportError> {
    let mut chars = name.chars();
    let ok = match chars.next() {
        Some(c) => {
            (c.is_ascii_alphabetic() || c == '_')
                && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
        }
        None => false,
    };
    if ok {
        Ok(())
    } else {
        Err(ExportError::BadName {
            name: name.to_string(),
        })
    }
}
