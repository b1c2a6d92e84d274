use std::fmt;

use super::{Assignment, Domain, MilpError, MilpModel, Relation, VarKind, VarRef};
use crate::layout::{LayoutError, MenuLayout};

/// Cost variables are derived from the structural ones in this order.
const COST_ORDER: [VarKind; 8] = [
    VarKind::T,
    VarKind::Alpha,
    VarKind::Sigma,
    VarKind::Delta,
    VarKind::Omega,
    VarKind::Pi,
    VarKind::Xi,
    VarKind::Phi,
];

pub(crate) fn is_cost_kind(kind: VarKind) -> bool {
    COST_ORDER.contains(&kind)
}

/// A constraint or variable domain that an assignment breaks.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibilityIssue {
    Constraint { name: String, family: &'static str, lhs: f64, relation: Relation, rhs: f64 },
    Domain { name: String, value: f64 },
    Size { expected: usize, got: usize },
}

impl FeasibilityIssue {
    pub fn family(&self) -> Option<&'static str> {
        match self {
            FeasibilityIssue::Constraint { family, .. } => Some(family),
            _ => None,
        }
    }
}

impl fmt::Display for FeasibilityIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeasibilityIssue::Constraint { name, lhs, relation, rhs, .. } => {
                write!(f, "{name}: {lhs} {} {rhs} does not hold", relation.symbol())
            }
            FeasibilityIssue::Domain { name, value } => write!(f, "{name} = {value} is outside its domain"),
            FeasibilityIssue::Size { expected, got } => write!(f, "expected {expected} values, got {got}"),
        }
    }
}

fn tolerance(rhs: f64) -> f64 {
    1e-9 * rhs.abs().max(1.0)
}

/// Canonical assignment of a layout: groups numbered in reading order,
/// unused groups last with `P = 1`, and every cost variable set to the
/// smallest value its rows allow.
pub fn encode_layout(layout: &MenuLayout, model: &MilpModel) -> Result<Assignment, MilpError> {
    let n = model.n;
    layout.ensure_valid(n, model.loner)?;
    if layout.num_tabs() > model.max_tabs {
        return Err(LayoutError::ExceedsLimits(format!("{} tabs > {}", layout.num_tabs(), model.max_tabs)).into());
    }
    if layout.num_groups() > model.max_groups {
        return Err(LayoutError::ExceedsLimits(format!("{} groups > {}", layout.num_groups(), model.max_groups)).into());
    }

    let mut values = vec![0.0; model.variables.len()];
    let mut set = |v: VarRef, x: f64| {
        if let Some(k) = model.var_index(v) {
            values[k] = x;
        }
    };

    let mut tab_of = vec![0; n];
    let mut row_of = vec![0; n];
    let mut group_of = vec![0; n];
    let mut c = 0;
    for (t0, tab) in layout.tabs.iter().enumerate() {
        let t = t0 + 1;
        set(VarRef::one(VarKind::TabUsed, t), 1.0);
        let mut row = 0;
        let first_group = c + 1;
        for (g, members) in tab.groups.iter().enumerate() {
            c += 1;
            set(VarRef::one(VarKind::GroupUsed, c), 1.0);
            set(VarRef::new(VarKind::Q, c, t), 1.0);
            set(VarRef::one(VarKind::P, c), (row + 1) as f64);
            if g == 0 {
                set(VarRef::one(VarKind::Start, c), 1.0);
            } else {
                set(VarRef::new(VarKind::S, c - 1, c), 1.0);
            }
            for earlier in first_group..c {
                set(VarRef::new(VarKind::Theta, earlier, c), 1.0);
            }
            set(VarRef::new(VarKind::U, members[0], c), 1.0);
            for &id in members {
                row += 1;
                if row > model.max_rows {
                    return Err(LayoutError::ExceedsLimits(format!("tab {t} has more than {} rows", model.max_rows)).into());
                }
                tab_of[id] = t;
                row_of[id] = row;
                group_of[id] = c;
                set(VarRef::new(VarKind::X, id, c), 1.0);
                set(VarRef::new(VarKind::Y, id, t), 1.0);
                set(VarRef::new(VarKind::R, id, row), 1.0);
            }
        }
    }
    for unused in (c + 1)..=model.max_groups {
        set(VarRef::one(VarKind::P, unused), 1.0);
    }
    for i in 0..n {
        for j in 0..n {
            if group_of[i] == group_of[j] {
                set(VarRef::new(VarKind::Z, i, j), 1.0);
            }
            if tab_of[i] == tab_of[j] {
                set(VarRef::new(VarKind::W, i, j), 1.0);
            }
        }
    }

    let mut assignment = Assignment { values };
    for kind in COST_ORDER {
        for (k, var) in model.variables.iter().enumerate() {
            if var.var.kind != kind {
                continue;
            }
            let mut best = match var.domain {
                Domain::Continuous { lower } => lower,
                _ => 0.0,
            };
            for &row in &model.defining_rows[k] {
                let con = &model.constraints[row];
                let mut own = 0.0;
                let mut others = 0.0;
                for &(v, coef) in &con.terms {
                    if v == k {
                        own = coef;
                    } else {
                        others += coef * assignment.values[v];
                    }
                }
                let needed = (con.rhs - others) / own;
                if con.relation == Relation::Eq {
                    best = needed;
                    break;
                }
                best = best.max(needed);
            }
            assignment.values[k] = best;
        }
    }
    Ok(assignment)
}

/// Every violated constraint and domain, each within a tolerance of
/// `1e-9 * max(1, |rhs|)`.
pub fn check_feasible(model: &MilpModel, assignment: &Assignment) -> Vec<FeasibilityIssue> {
    let values = &assignment.values;
    if values.len() != model.variables.len() {
        return vec![FeasibilityIssue::Size { expected: model.variables.len(), got: values.len() }];
    }
    let mut out = Vec::new();
    for (var, &x) in model.variables.iter().zip(values) {
        let ok = match var.domain {
            Domain::Binary => (x - x.round()).abs() <= 1e-9 && (x.round() == 0.0 || x.round() == 1.0),
            Domain::Integer { lower, upper } => {
                (x - x.round()).abs() <= 1e-9 && x >= lower - 1e-9 && x <= upper + 1e-9
            }
            Domain::Continuous { lower } => x >= lower - 1e-9 && x.is_finite(),
        };
        if !ok {
            out.push(FeasibilityIssue::Domain { name: var.name.clone(), value: x });
        }
    }
    for con in &model.constraints {
        let lhs: f64 = con.terms.iter().map(|&(k, c)| c * values[k]).sum();
        let tol = tolerance(con.rhs);
        let ok = match con.relation {
            Relation::Le => lhs <= con.rhs + tol,
            Relation::Ge => lhs >= con.rhs - tol,
            Relation::Eq => (lhs - con.rhs).abs() <= tol,
        };
        if !ok {
            out.push(FeasibilityIssue::Constraint {
                name: con.name.clone(),
                family: con.family,
                lhs,
                relation: con.relation,
                rhs: con.rhs,
            });
        }
    }
    out
}

fn one_hot(model: &MilpModel, a: &Assignment, kind: VarKind, i: usize, range: std::ops::RangeInclusive<usize>) -> Option<usize> {
    range.into_iter().find(|&k| model.value(a, VarRef::new(kind, i, k)).is_some_and(|v| v > 0.5))
}

/// Reads a layout back from an integral, feasible assignment: tabs from
/// `Y`, rows from `R`, groups from `X` ordered by their first row.
pub fn decode(assignment: &Assignment, model: &MilpModel) -> Result<MenuLayout, MilpError> {
    if assignment.values.len() != model.variables.len() {
        return Err(MilpError::AssignmentSize { expected: model.variables.len(), got: assignment.values.len() });
    }
    for (var, &x) in model.variables.iter().zip(&assignment.values) {
        if !matches!(var.domain, Domain::Continuous { .. }) && (x - x.round()).abs() > 1e-9 {
            return Err(MilpError::NotIntegral(var.name.clone()));
        }
    }
    let issues = check_feasible(model, assignment);
    if !issues.is_empty() {
        let shown: Vec<String> = issues.iter().take(3).map(|i| i.to_string()).collect();
        let more = if issues.len() > 3 { format!(" and {} more", issues.len() - 3) } else { String::new() };
        return Err(MilpError::Infeasible(format!("{}{more}", shown.join("; "))));
    }

    let n = model.n;
    // (tab, group first row, group, row, id)
    let mut cells = Vec::with_capacity(n);
    for i in 0..n {
        let missing = |what: &str| MilpError::Infeasible(format!("command {i} has no {what}"));
        let tab = one_hot(model, assignment, VarKind::Y, i, 1..=model.max_tabs).ok_or_else(|| missing("tab"))?;
        let row = one_hot(model, assignment, VarKind::R, i, 1..=model.max_rows).ok_or_else(|| missing("row"))?;
        let group = one_hot(model, assignment, VarKind::X, i, 1..=model.max_groups).ok_or_else(|| missing("group"))?;
        let start = model.value(assignment, VarRef::one(VarKind::P, group)).unwrap_or(1.0).round() as usize;
        cells.push((tab, start, group, row, i));
    }
    cells.sort_unstable();

    let mut nested: Vec<Vec<Vec<usize>>> = Vec::new();
    let mut last: Option<(usize, usize)> = None;
    for &(tab, _, group, _, id) in &cells {
        match last {
            Some((t, g)) if t == tab && g == group => nested.last_mut().unwrap().last_mut().unwrap().push(id),
            Some((t, _)) if t == tab => nested.last_mut().unwrap().push(vec![id]),
            _ => nested.push(vec![vec![id]]),
        }
        last = Some((tab, group));
    }
    let layout = MenuLayout::from_nested(nested);
    layout.ensure_valid(n, model.loner)?;
    Ok(layout)
}

#[cfg(test)]
mod tests {
    use super::super::{build_model, build_model_with, ModelOptions};
    use super::*;
    use crate::evaluator::{eval_ift, eval_twofold, ObjectiveKind};
    use crate::instance::{compute_expectations, AssociationMatrix, Command, FittsParams, TaskInstance};
    use crate::layout::enumerate_layouts;

    fn inst(freqs: &[f64], pairs: &[(usize, usize, f64)]) -> TaskInstance {
        let commands = freqs
            .iter()
            .enumerate()
            .map(|(id, &frequency)| Command { id, name: format!("c{id}"), frequency, preferred_tab: None })
            .collect();
        let mut a = AssociationMatrix::new(freqs.len());
        for &(i, j, s) in pairs {
            a.set(i, j, s);
        }
        TaskInstance::new(commands, a, FittsParams::default()).unwrap()
    }

    fn val(m: &MilpModel, a: &Assignment, kind: VarKind, i: usize, j: usize) -> f64 {
        m.value(a, VarRef::new(kind, i, j)).unwrap()
    }

    #[test]
    fn encode_single_group() {
        let i = inst(&[1.0, 1.0], &[(0, 1, 50.0)]);
        let m = build_model(&i, ObjectiveKind::Ift, None).unwrap();
        let a = encode_layout(&MenuLayout::from_nested(vec![vec![vec![0, 1]]]), &m).unwrap();
        assert_eq!(val(&m, &a, VarKind::X, 0, 1), 1.0);
        assert_eq!(val(&m, &a, VarKind::X, 1, 1), 1.0);
        assert_eq!(val(&m, &a, VarKind::Z, 0, 1), 1.0);
        assert_eq!(val(&m, &a, VarKind::W, 0, 1), 1.0);
        assert_eq!(val(&m, &a, VarKind::R, 0, 1), 1.0);
        assert_eq!(val(&m, &a, VarKind::R, 1, 2), 1.0);
        assert_eq!(m.value(&a, VarRef::one(VarKind::Start, 1)), Some(1.0));
        assert_eq!(m.value(&a, VarRef::one(VarKind::P, 1)), Some(1.0));
        assert!(check_feasible(&m, &a).is_empty());
    }

    #[test]
    fn encode_two_tabs_and_leads() {
        let i = inst(&[1.0; 6], &[]);
        let m = build_model(&i, ObjectiveKind::Ift, None).unwrap();
        let a = encode_layout(&MenuLayout::from_nested(vec![vec![vec![0]], vec![vec![1]], vec![vec![5, 2, 3, 4]]]), &m).unwrap();
        assert_eq!(val(&m, &a, VarKind::W, 0, 1), 0.0);
        assert_eq!(m.value(&a, VarRef::one(VarKind::TabUsed, 1)), Some(1.0));
        assert_eq!(m.value(&a, VarRef::one(VarKind::TabUsed, 2)), Some(1.0));
        assert_eq!(val(&m, &a, VarKind::U, 5, 3), 1.0);
        for c in [1, 2] {
            assert_eq!(val(&m, &a, VarKind::U, 5, c), 0.0);
        }
        assert_eq!(val(&m, &a, VarKind::U, 2, 3), 0.0);
        assert!(check_feasible(&m, &a).is_empty());
    }

    #[test]
    fn exhaustive_agreement_n3() {
        let i = inst(&[0.5, 0.3, 0.2], &[(0, 1, 90.0), (1, 2, 40.0)]);
        let e = compute_expectations(&i);
        let twofold = build_model(&i, ObjectiveKind::TwoFold, None).unwrap();
        for layout in enumerate_layouts(3, &i.limits).unwrap() {
            let a = encode_layout(&layout, &twofold).unwrap();
            assert!(check_feasible(&twofold, &a).is_empty(), "{layout:?}");
            assert_eq!(decode(&a, &twofold).unwrap(), layout);
            let v = eval_twofold(&layout, &i).unwrap();
            assert!((twofold.objective_value(&a) - v).abs() <= 1e-9 * v.abs().max(1.0));

            let opts = ModelOptions { adapt: None, delta_groups: Some(layout.num_groups() as f64) };
            let ift = build_model_with(&i, ObjectiveKind::Ift, &opts).unwrap();
            let a = encode_layout(&layout, &ift).unwrap();
            assert!(check_feasible(&ift, &a).is_empty(), "{layout:?}: {:?}", check_feasible(&ift, &a));
            let (v, _) = eval_ift(&layout, &i, &e).unwrap();
            assert!((ift.objective_value(&a) - v).abs() <= 1e-9 * v.abs().max(1.0), "{layout:?}");
        }
    }

    #[test]
    fn detects_shared_row_and_hole() {
        let i = inst(&[1.0, 1.0, 1.0], &[]);
        let m = build_model(&i, ObjectiveKind::TwoFold, None).unwrap();
        let a = encode_layout(&MenuLayout::from_nested(vec![vec![vec![0, 1, 2]]]), &m).unwrap();

        let mut shared = a.clone();
        let r = |id, row| m.var_index(VarRef::new(VarKind::R, id, row)).unwrap();
        shared.values[r(1, 2)] = 0.0;
        shared.values[r(1, 1)] = 1.0;
        let issues = check_feasible(&m, &shared);
        assert!(issues.iter().any(|v| v.family() == Some("k")));

        let split = encode_layout(&MenuLayout::from_nested(vec![vec![vec![0, 1]], vec![vec![2]]]), &m).unwrap();
        let mut hole = split.clone();
        hole.values[r(1, 2)] = 0.0;
        hole.values[r(1, 3)] = 1.0;
        let issues = check_feasible(&m, &hole);
        assert!(issues.iter().any(|v| v.family() == Some("h")), "{issues:?}");
    }

    #[test]
    fn decode_rejects_fractional_and_round_trips_single() {
        let i = inst(&[1.0], &[]);
        let m = build_model(&i, ObjectiveKind::Ift, None).unwrap();
        let single = MenuLayout::from_nested(vec![vec![vec![0]]]);
        let a = encode_layout(&single, &m).unwrap();
        assert_eq!(decode(&a, &m).unwrap(), single);
        let mut frac = a.clone();
        frac.values[m.var_index(VarRef::new(VarKind::X, 0, 1)).unwrap()] = 0.5;
        assert!(matches!(decode(&frac, &m), Err(MilpError::NotIntegral(_))));
    }

    #[test]
    fn encode_rejects_oversized_layout() {
        let mut i = inst(&[1.0; 3], &[]);
        i.limits.max_tabs = 2;
        i.limits.max_groups = 2;
        let m = build_model(&i, ObjectiveKind::TwoFold, None).unwrap();
        let l = MenuLayout::from_nested(vec![vec![vec![0]], vec![vec![1]], vec![vec![2]]]);
        assert!(matches!(encode_layout(&l, &m), Err(MilpError::Layout(LayoutError::ExceedsLimits(_)))));
    }
}
