//! Mixed-integer linear program for the layout problem.
//!
//! Commands are indexed from 0; groups, tabs and rows from 1. Every
//! variable has a deterministic name such as `X_3_2` (command 3 in group 2)
//! so models can be exported to LP files and read back.

mod encode;
mod lp;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;

use crate::evaluator::ObjectiveKind;
use crate::instance::{compute_expectations, ExpectationMatrix, TaskInstance};
use crate::layout::{LayoutError, MenuLayout};

pub use encode::{check_feasible, decode, encode_layout, FeasibilityIssue};
pub use lp::{export_lp, metadata_json, parse_lp, structural_diff, LpConstraint, LpModel};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum MilpError {
    #[error("limits cannot host {n} commands: {reason}")]
    LimitsTooSmall { n: usize, reason: String },
    #[error("adaptation weight {0} is outside [0, 1]")]
    InvalidWeight(f64),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("assignment has {got} values, model has {expected} variables")]
    AssignmentSize { expected: usize, got: usize },
    #[error("assignment is not integral at {0}")]
    NotIntegral(String),
    #[error("assignment is infeasible: {0}")]
    Infeasible(String),
    #[error("lp parse error on line {line}: {message}")]
    LpParse { line: usize, message: String },
}

/// Variable families. Names in the exported file use the given prefixes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum VarKind {
    /// Command in group.
    X,
    /// Command on tab.
    Y,
    /// Group on tab.
    Q,
    /// Two commands share a group.
    Z,
    /// Two commands share a tab.
    W,
    /// Command on row.
    R,
    /// Group immediately precedes another.
    S,
    /// Group is the topmost on its tab.
    Start,
    /// Group in use.
    GroupUsed,
    /// Tab in use.
    TabUsed,
    /// Group is somewhere above another on the same tab.
    Theta,
    /// First row of a group.
    P,
    /// Access time of a command.
    T,
    /// Command leads a group.
    U,
    Phi,
    Alpha,
    Sigma,
    Delta,
    /// Preferred-tab penalty.
    Omega,
    /// Tab shift from the baseline.
    Pi,
    /// Row shift from the baseline.
    Xi,
}

impl VarKind {
    pub fn prefix(self) -> &'static str {
        match self {
            VarKind::X => "X",
            VarKind::Y => "Y",
            VarKind::Q => "Q",
            VarKind::Z => "Z",
            VarKind::W => "W",
            VarKind::R => "R",
            VarKind::S => "S",
            VarKind::Start => "SS",
            VarKind::GroupUsed => "xi",
            VarKind::TabUsed => "beta",
            VarKind::Theta => "Theta",
            VarKind::P => "P",
            VarKind::T => "t",
            VarKind::U => "U",
            VarKind::Phi => "Phi",
            VarKind::Alpha => "alpha",
            VarKind::Sigma => "sigma",
            VarKind::Delta => "delta",
            VarKind::Omega => "Omega",
            VarKind::Pi => "Pi",
            VarKind::Xi => "Xi",
        }
    }

    fn arity(self) -> usize {
        match self {
            VarKind::Start
            | VarKind::GroupUsed
            | VarKind::TabUsed
            | VarKind::P
            | VarKind::T
            | VarKind::Pi
            | VarKind::Xi => 1,
            _ => 2,
        }
    }
}

/// A variable identity: family plus indices (`b` is 0 for one-index kinds).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct VarRef {
    pub kind: VarKind,
    pub a: usize,
    pub b: usize,
}

impl VarRef {
    pub fn new(kind: VarKind, a: usize, b: usize) -> Self {
        VarRef { kind, a, b }
    }

    pub fn one(kind: VarKind, a: usize) -> Self {
        VarRef { kind, a, b: 0 }
    }
}

impl fmt::Display for VarRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.kind.arity() == 1 {
            write!(f, "{}_{}", self.kind.prefix(), self.a)
        } else {
            write!(f, "{}_{}_{}", self.kind.prefix(), self.a, self.b)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Domain {
    Binary,
    Integer { lower: f64, upper: f64 },
    Continuous { lower: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Variable {
    pub var: VarRef,
    pub name: String,
    pub domain: Domain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

/// `Σ coef·var  rel  rhs`, with terms sorted by variable index.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    /// Constraint family label such as `"d"` or `"sigma"`.
    pub family: &'static str,
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub sense: Sense,
    pub terms: Vec<(usize, f64)>,
}

/// Baseline positions for the adaptation terms.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptTerms {
    pub baseline: MenuLayout,
    pub w: f64,
}

/// Build switches beyond the instance itself.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelOptions {
    pub adapt: Option<AdaptTerms>,
    /// Group count used in the false-negative rows; `max_groups` when unset.
    pub delta_groups: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Objective,
    pub kind: ObjectiveKind,
    pub digest: String,
    pub n: usize,
    pub max_groups: usize,
    pub max_tabs: usize,
    pub max_rows: usize,
    pub loner: Option<usize>,
    pub has_leads: bool,
    pub adapt_w: Option<f64>,
    pub(crate) index: HashMap<VarRef, usize>,
    pub(crate) expectations: ExpectationMatrix,
    /// For each variable, the rows that bound it from below (cost variables only).
    pub(crate) defining_rows: Vec<Vec<usize>>,
}

/// Values for every model variable, by variable index.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub values: Vec<f64>,
}

impl MilpModel {
    pub fn var_index(&self, v: VarRef) -> Option<usize> {
        self.index.get(&v).copied()
    }

    pub fn value(&self, a: &Assignment, v: VarRef) -> Option<f64> {
        self.var_index(v).map(|k| a.values[k])
    }

    pub fn count_kind(&self, kind: VarKind) -> usize {
        self.variables.iter().filter(|v| v.var.kind == kind).count()
    }

    pub fn family_counts(&self) -> BTreeMap<&'static str, usize> {
        let mut out = BTreeMap::new();
        for c in &self.constraints {
            *out.entry(c.family).or_insert(0) += 1;
        }
        out
    }

    pub fn constraints_in(&self, family: &str) -> impl Iterator<Item = &Constraint> + '_ {
        let family = family.to_string();
        self.constraints.iter().filter(move |c| c.family == family)
    }

    /// Objective value of an assignment.
    pub fn objective_value(&self, a: &Assignment) -> f64 {
        self.objective.terms.iter().map(|&(k, c)| c * a.values[k]).sum()
    }
}

struct Builder {
    variables: Vec<Variable>,
    index: HashMap<VarRef, usize>,
    constraints: Vec<Constraint>,
    counters: BTreeMap<&'static str, usize>,
}

/// Linear expression under construction.
#[derive(Default)]
struct Expr {
    terms: BTreeMap<usize, f64>,
    constant: f64,
}

impl Expr {
    fn new() -> Self {
        Expr::default()
    }

    fn add(mut self, var: usize, coef: f64) -> Self {
        *self.terms.entry(var).or_insert(0.0) += coef;
        self
    }

    fn constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }
}

impl Builder {
    fn var(&mut self, v: VarRef, domain: Domain) -> usize {
        let k = self.variables.len();
        self.variables.push(Variable { var: v, name: v.to_string(), domain });
        self.index.insert(v, k);
        k
    }

    fn get(&self, v: VarRef) -> usize {
        self.index[&v]
    }

    /// Adds `expr rel 0` with the expression's constant moved to the right.
    fn add(&mut self, family: &'static str, expr: Expr, relation: Relation) {
        let terms: Vec<(usize, f64)> = expr.terms.into_iter().filter(|&(_, c)| c != 0.0).collect();
        if terms.is_empty() {
            return;
        }
        let counter = self.counters.entry(family).or_insert(0);
        let name = format!("{family}_{counter}");
        *counter += 1;
        self.constraints.push(Constraint { name, family, terms, relation, rhs: -expr.constant });
    }
}

/// Builds the model with default options.
pub fn build_model(
    inst: &TaskInstance,
    kind: ObjectiveKind,
    adapt: Option<(&MenuLayout, f64)>,
) -> Result<MilpModel, MilpError> {
    let options = ModelOptions {
        adapt: adapt.map(|(baseline, w)| AdaptTerms { baseline: baseline.clone(), w }),
        delta_groups: None,
    };
    build_model_with(inst, kind, &options)
}

/// Builds the full model: layout structure, access times, the chosen
/// objective's auxiliary rows and optional adaptation terms.
pub fn build_model_with(inst: &TaskInstance, kind: ObjectiveKind, options: &ModelOptions) -> Result<MilpModel, MilpError> {
    let n = inst.n();
    let lim = inst.limits;
    let (cmax, tmax, rmax) = (lim.max_groups, lim.max_tabs, lim.max_rows);
    if tmax * rmax < n {
        return Err(MilpError::LimitsTooSmall {
            n,
            reason: format!("{tmax} tabs of {rmax} rows"),
        });
    }
    if cmax < tmax.min(n) {
        return Err(MilpError::LimitsTooSmall { n, reason: format!("{cmax} groups for {tmax} tabs") });
    }
    let adapt = match &options.adapt {
        Some(a) => {
            if !(0.0..=1.0).contains(&a.w) {
                return Err(MilpError::InvalidWeight(a.w));
            }
            a.baseline.ensure_valid(n, inst.loner_id)?;
            Some(a)
        }
        None => None,
    };
    let em = compute_expectations(inst);
    let has_leads = kind == ObjectiveKind::Ift || inst.loner_id.is_some();
    let big_n = n as f64;

    let mut b = Builder { variables: Vec::new(), index: HashMap::new(), constraints: Vec::new(), counters: BTreeMap::new() };
    use VarKind::*;
    let bin = Domain::Binary;
    let cont = Domain::Continuous { lower: 0.0 };

    // Variables.
    for i in 0..n {
        for c in 1..=cmax {
            b.var(VarRef::new(X, i, c), bin);
        }
    }
    for i in 0..n {
        for t in 1..=tmax {
            b.var(VarRef::new(Y, i, t), bin);
        }
    }
    for c in 1..=cmax {
        for t in 1..=tmax {
            b.var(VarRef::new(Q, c, t), bin);
        }
    }
    for i in 0..n {
        for j in 0..n {
            b.var(VarRef::new(Z, i, j), bin);
        }
    }
    for i in 0..n {
        for j in 0..n {
            b.var(VarRef::new(W, i, j), bin);
        }
    }
    for i in 0..n {
        for r in 1..=rmax {
            b.var(VarRef::new(R, i, r), bin);
        }
    }
    for c in 1..=cmax {
        for cb in 1..=cmax {
            if c != cb {
                b.var(VarRef::new(S, c, cb), bin);
            }
        }
    }
    for c in 1..=cmax {
        b.var(VarRef::one(Start, c), bin);
    }
    for c in 1..=cmax {
        b.var(VarRef::one(GroupUsed, c), bin);
    }
    for t in 1..=tmax {
        b.var(VarRef::one(TabUsed, t), bin);
    }
    for c in 1..=cmax {
        for cb in 1..=cmax {
            if c != cb {
                b.var(VarRef::new(Theta, c, cb), bin);
            }
        }
    }
    for c in 1..=cmax {
        b.var(VarRef::one(P, c), Domain::Integer { lower: 1.0, upper: rmax as f64 });
    }
    for i in 0..n {
        b.var(VarRef::one(T, i), cont);
    }
    if has_leads {
        for i in 0..n {
            for c in 1..=cmax {
                b.var(VarRef::new(U, i, c), bin);
            }
        }
    }
    let preferred: Vec<Option<usize>> = inst
        .commands
        .iter()
        .map(|c| c.preferred_tab.map(|p| p + 1).filter(|&t| t <= tmax && !inst.is_loner(c.id)))
        .collect();
    if kind == ObjectiveKind::Ift {
        for fam in [Phi, Alpha, Sigma, Delta] {
            for i in 0..n {
                for c in 1..=cmax {
                    b.var(VarRef::new(fam, i, c), cont);
                }
            }
        }
        for (i, p) in preferred.iter().enumerate() {
            if let Some(t) = p {
                b.var(VarRef::new(Omega, i, *t), cont);
            }
        }
    }
    if adapt.is_some() {
        for i in 0..n {
            b.var(VarRef::one(Pi, i), cont);
        }
        for i in 0..n {
            b.var(VarRef::one(Xi, i), cont);
        }
    }

    let x = |b: &Builder, i, c| b.get(VarRef::new(X, i, c));
    let y = |b: &Builder, i, t| b.get(VarRef::new(Y, i, t));
    let q = |b: &Builder, c, t| b.get(VarRef::new(Q, c, t));
    let r_ = |b: &Builder, i, r| b.get(VarRef::new(R, i, r));
    let p_ = |b: &Builder, c| b.get(VarRef::one(P, c));
    let xi = |b: &Builder, c| b.get(VarRef::one(GroupUsed, c));
    let beta = |b: &Builder, t| b.get(VarRef::one(TabUsed, t));
    let s_ = |b: &Builder, c, cb| b.get(VarRef::new(S, c, cb));
    let th = |b: &Builder, c, cb| b.get(VarRef::new(Theta, c, cb));
    let u_ = |b: &Builder, i, c| b.get(VarRef::new(U, i, c));
    let row_expr = |b: &Builder, i: usize, scale: f64, e: Expr| {
        (1..=rmax).fold(e, |e, r| e.add(r_(b, i, r), scale * r as f64))
    };

    // (a) access time, exact over the one-hot rows and tabs.
    for i in 0..n {
        let mut e = Expr::new().add(b.get(VarRef::one(T, i)), 1.0);
        for r in 1..=rmax {
            e = e.add(r_(&b, i, r), -inst.fitts.axis_time(r));
        }
        for t in 1..=tmax {
            e = e.add(y(&b, i, t), -inst.fitts.axis_time(t));
        }
        b.add("a", e, Relation::Eq);
    }

    // (b) use marking.
    for c in 1..=cmax {
        let mut e = Expr::new().add(xi(&b, c), big_n);
        for i in 0..n {
            e = e.add(x(&b, i, c), -1.0);
        }
        b.add("b", e, Relation::Ge);
        let mut e = Expr::new().add(xi(&b, c), -1.0);
        for i in 0..n {
            e = e.add(x(&b, i, c), 1.0);
        }
        b.add("b", e, Relation::Ge);
    }
    for t in 1..=tmax {
        let mut e = Expr::new().add(beta(&b, t), big_n);
        for i in 0..n {
            e = e.add(y(&b, i, t), -1.0);
        }
        b.add("b", e, Relation::Ge);
        let mut e = Expr::new().add(beta(&b, t), -1.0);
        for i in 0..n {
            e = e.add(y(&b, i, t), 1.0);
        }
        b.add("b", e, Relation::Ge);
    }

    // (c) a shared group implies a shared tab.
    for i in 0..n {
        for j in 0..n {
            let e = Expr::new().add(b.get(VarRef::new(W, i, j)), 1.0).add(b.get(VarRef::new(Z, i, j)), -1.0);
            b.add("c", e, Relation::Ge);
        }
    }

    // (d) partitions.
    for c in 1..=cmax {
        let mut e = Expr::new().add(xi(&b, c), -1.0);
        for t in 1..=tmax {
            e = e.add(q(&b, c, t), 1.0);
        }
        b.add("d", e, Relation::Eq);
    }
    for i in 0..n {
        let mut e = Expr::new().constant(-1.0);
        for t in 1..=tmax {
            e = e.add(y(&b, i, t), 1.0);
        }
        b.add("d", e, Relation::Eq);
    }
    for i in 0..n {
        let mut e = Expr::new().constant(-1.0);
        for c in 1..=cmax {
            e = e.add(x(&b, i, c), 1.0);
        }
        b.add("d", e, Relation::Eq);
    }

    // (e) a tab hosting a group is in use.
    for c in 1..=cmax {
        for t in 1..=tmax {
            let e = Expr::new().add(beta(&b, t), 1.0).add(q(&b, c, t), -1.0);
            b.add("e", e, Relation::Ge);
        }
    }

    // (f) exactly one row.
    for i in 0..n {
        let mut e = Expr::new().constant(-1.0);
        for r in 1..=rmax {
            e = e.add(r_(&b, i, r), 1.0);
        }
        b.add("f", e, Relation::Eq);
    }

    // (g) immediate neighbours share a tab.
    for c in 1..=cmax {
        for cb in 1..=cmax {
            if c == cb {
                continue;
            }
            for t in 1..=tmax {
                let e = Expr::new()
                    .add(q(&b, cb, t), 1.0)
                    .add(q(&b, c, t), -1.0)
                    .add(s_(&b, c, cb), -1.0)
                    .add(s_(&b, cb, c), -1.0)
                    .constant(1.0);
                b.add("g", e, Relation::Ge);
            }
        }
    }

    // (h) no holes in row occupancy.
    for r in 1..=rmax {
        let mut e = Expr::new();
        for i in 0..n {
            e = e.add(r_(&b, i, r), 1.0);
        }
        for t in 1..=tmax {
            e = e.add(beta(&b, t), -1.0);
        }
        b.add("h", e, Relation::Le);
        if r >= 2 {
            let mut e = Expr::new();
            for i in 0..n {
                e = e.add(r_(&b, i, r), 1.0).add(r_(&b, i, r - 1), -1.0);
            }
            b.add("h", e, Relation::Le);
        }
    }

    // (i) one starting group per used tab.
    {
        let mut e = Expr::new();
        for t in 1..=tmax {
            e = e.add(beta(&b, t), 1.0);
        }
        for c in 1..=cmax {
            e = e.add(b.get(VarRef::one(Start, c)), -1.0);
        }
        b.add("i", e, Relation::Eq);
    }

    // (j) a used group starts its tab or has a predecessor.
    for c in 1..=cmax {
        let mut e = Expr::new().add(xi(&b, c), 1.0).add(b.get(VarRef::one(Start, c)), -1.0);
        for cb in 1..=cmax {
            if cb != c {
                e = e.add(s_(&b, cb, c), -1.0);
            }
        }
        b.add("j", e, Relation::Eq);
    }

    // (k) no two commands of a tab on one row.
    for i in 0..n {
        for j in (i + 1)..n {
            for r in 1..=rmax {
                let e = Expr::new()
                    .add(r_(&b, i, r), 1.0)
                    .add(r_(&b, j, r), 1.0)
                    .add(b.get(VarRef::new(W, i, j)), 1.0)
                    .constant(-2.0);
                b.add("k", e, Relation::Le);
            }
        }
    }

    // (l) rows within the group's span.
    for i in 0..n {
        for c in 1..=cmax {
            let mut e = row_expr(&b, i, 1.0, Expr::new()).add(p_(&b, c), -1.0).add(x(&b, i, c), big_n).constant(-big_n);
            for j in 0..n {
                e = e.add(x(&b, j, c), -1.0);
            }
            b.add("l", e, Relation::Le);
            let e = row_expr(&b, i, 1.0, Expr::new()).add(p_(&b, c), -1.0).add(x(&b, i, c), -big_n).constant(big_n);
            b.add("l", e, Relation::Ge);
        }
    }

    // (m) ordered groups of a tab do not overlap.
    for c in 1..=cmax {
        for cb in 1..=cmax {
            if c == cb {
                continue;
            }
            let mut e = Expr::new().add(p_(&b, cb), 1.0).add(p_(&b, c), -1.0).add(th(&b, c, cb), -big_n).constant(big_n);
            for i in 0..n {
                e = e.add(x(&b, i, c), -1.0);
            }
            b.add("m", e, Relation::Ge);
        }
    }

    // (n) group and tab co-membership.
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            for c in 1..=cmax {
                let e = Expr::new()
                    .add(x(&b, i, c), 1.0)
                    .add(x(&b, j, c), -1.0)
                    .add(b.get(VarRef::new(Z, i, j)), -1.0)
                    .constant(1.0);
                b.add("n", e, Relation::Ge);
            }
            for t in 1..=tmax {
                let e = Expr::new()
                    .add(y(&b, i, t), 1.0)
                    .add(y(&b, j, t), -1.0)
                    .add(b.get(VarRef::new(W, i, j)), -1.0)
                    .constant(1.0);
                b.add("n", e, Relation::Ge);
            }
        }
    }

    // Linking rows that make the structure consistent.
    for i in 0..n {
        for c in 1..=cmax {
            for t in 1..=tmax {
                let e = Expr::new().add(y(&b, i, t), 1.0).add(x(&b, i, c), -1.0).add(q(&b, c, t), -1.0).constant(1.0);
                b.add("link", e, Relation::Ge);
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for c in 1..=cmax {
                let e = Expr::new()
                    .add(b.get(VarRef::new(Z, i, j)), 1.0)
                    .add(x(&b, i, c), -1.0)
                    .add(x(&b, j, c), -1.0)
                    .constant(1.0);
                b.add("link", e, Relation::Ge);
            }
            for t in 1..=tmax {
                let e = Expr::new()
                    .add(b.get(VarRef::new(W, i, j)), 1.0)
                    .add(y(&b, i, t), -1.0)
                    .add(y(&b, j, t), -1.0)
                    .constant(1.0);
                b.add("link", e, Relation::Ge);
            }
        }
    }
    for c in 1..=cmax {
        for cb in (c + 1)..=cmax {
            let e = Expr::new().add(th(&b, c, cb), 1.0).add(th(&b, cb, c), 1.0).constant(-1.0);
            b.add("link", e, Relation::Le);
            for t in 1..=tmax {
                let e = Expr::new()
                    .add(th(&b, c, cb), 1.0)
                    .add(th(&b, cb, c), 1.0)
                    .add(q(&b, c, t), -1.0)
                    .add(q(&b, cb, t), -1.0)
                    .constant(1.0);
                b.add("link", e, Relation::Ge);
            }
        }
    }
    for c in 1..=cmax {
        for cb in 1..=cmax {
            if c == cb {
                continue;
            }
            let e = Expr::new().add(th(&b, c, cb), 1.0).add(s_(&b, c, cb), -1.0);
            b.add("link", e, Relation::Ge);
            let e = Expr::new().add(xi(&b, c), 1.0).add(s_(&b, c, cb), -1.0);
            b.add("link", e, Relation::Ge);
            // An immediate successor starts right below its predecessor.
            let big_r = rmax as f64;
            let mut e = Expr::new().add(p_(&b, cb), 1.0).add(p_(&b, c), -1.0).add(s_(&b, c, cb), big_r).constant(-big_r);
            for i in 0..n {
                e = e.add(x(&b, i, c), -1.0);
            }
            b.add("link", e, Relation::Le);
        }
    }
    for c in 1..=cmax {
        // The topmost group starts on row 1.
        let e = Expr::new()
            .add(p_(&b, c), 1.0)
            .add(b.get(VarRef::one(Start, c)), rmax as f64 - 1.0)
            .constant(-(rmax as f64));
        b.add("link", e, Relation::Le);
        // Members sit strictly inside the span.
        for i in 0..n {
            let mut e = row_expr(&b, i, 1.0, Expr::new()).add(p_(&b, c), -1.0).add(x(&b, i, c), big_n).constant(1.0 - big_n);
            for j in 0..n {
                e = e.add(x(&b, j, c), -1.0);
            }
            b.add("link", e, Relation::Le);
        }
    }
    for c in 1..cmax {
        let e = Expr::new().add(xi(&b, c), 1.0).add(xi(&b, c + 1), -1.0);
        b.add("sym", e, Relation::Ge);
    }
    for t in 1..tmax {
        let e = Expr::new().add(beta(&b, t), 1.0).add(beta(&b, t + 1), -1.0);
        b.add("sym", e, Relation::Ge);
    }

    // Leads.
    if has_leads {
        for c in 1..=cmax {
            let mut e = Expr::new().add(xi(&b, c), -1.0);
            for i in 0..n {
                let xe = Expr::new().add(x(&b, i, c), 1.0).add(u_(&b, i, c), -1.0);
                b.add("lead", xe, Relation::Ge);
                e = e.add(u_(&b, i, c), 1.0);
            }
            b.add("lead", e, Relation::Eq);
            for i in 0..n {
                let e = row_expr(&b, i, 1.0, Expr::new()).add(p_(&b, c), -1.0).add(u_(&b, i, c), big_n).constant(-big_n);
                b.add("lead", e, Relation::Le);
                let e = row_expr(&b, i, 1.0, Expr::new()).add(p_(&b, c), -1.0).add(u_(&b, i, c), -big_n).constant(big_n);
                b.add("lead", e, Relation::Ge);
            }
        }
        if let Some(k) = inst.loner_id {
            let mut e = Expr::new().constant(-1.0);
            for c in 1..=cmax {
                e = e.add(u_(&b, k, c), 1.0);
            }
            b.add("loner", e, Relation::Eq);
        }
    }

    // Foraging cost rows.
    if kind == ObjectiveKind::Ift {
        let l = &inst.lambdas;
        let t_max = inst.fitts.axis_time(rmax) + inst.fitts.axis_time(tmax);
        let groups_const = options.delta_groups.unwrap_or(cmax as f64);
        let big_alpha = big_n.max(rmax as f64);
        for i in 0..n {
            let ti = b.get(VarRef::one(T, i));
            for c in 1..=cmax {
                let phi = b.get(VarRef::new(Phi, i, c));
                let alpha = b.get(VarRef::new(Alpha, i, c));
                let sigma = b.get(VarRef::new(Sigma, i, c));
                let delta = b.get(VarRef::new(Delta, i, c));
                let search = |e: Expr| e.add(alpha, -l.lambda_1).add(sigma, -l.lambda_2).add(delta, -l.lambda_3);
                let e = search(Expr::new().add(phi, 1.0).add(ti, -l.lambda_0).add(x(&b, i, c), -l.lambda_0 * t_max))
                    .constant(l.lambda_0 * t_max);
                b.add("phi", e, Relation::Ge);
                b.add("phi", search(Expr::new().add(phi, 1.0)), Relation::Ge);

                for j in 0..n {
                    let ej = em.get(i, j);
                    let uj = u_(&b, j, c);
                    if ej > 0.0 && j != i {
                        // sigma >= E·Σ_k X_k^c − N(1 + X_i^c − U_j^c)
                        let mut se = Expr::new().add(sigma, 1.0).add(x(&b, i, c), big_n).add(uj, -big_n).constant(big_n);
                        for k in 0..n {
                            se = se.add(x(&b, k, c), -ej);
                        }
                        b.add("sigma", se, Relation::Ge);
                    }
                    if ej < 1.0 {
                        // delta >= (1−E)·G − ∇(2 − U_j^c − X_i^c), ∇ = (1−E)·G
                        let big = (1.0 - ej) * groups_const;
                        let de = Expr::new().add(delta, 1.0).add(uj, -big).add(x(&b, i, c), -big).constant(big);
                        b.add("delta", de, Relation::Ge);
                    }
                    if ej > 0.0 {
                        // alpha >= E·(row − P + 1) − ∇(2 − U_j^c − X_i^c)
                        let ae = row_expr(&b, i, -ej, Expr::new().add(alpha, 1.0))
                            .add(p_(&b, c), ej)
                            .add(uj, -big_alpha)
                            .add(x(&b, i, c), -big_alpha)
                            .constant(2.0 * big_alpha - ej);
                        b.add("alpha", ae, Relation::Ge);
                    }
                }
            }
            if let Some(t) = preferred[i] {
                let e = Expr::new()
                    .add(b.get(VarRef::new(Omega, i, t)), 1.0)
                    .add(y(&b, i, t), inst.lambdas.lambda_4)
                    .constant(-inst.lambdas.lambda_4);
                b.add("omega", e, Relation::Ge);
            }
        }
    }

    // Adaptation rows.
    if let Some(a) = adapt {
        let pos = a.baseline.positions(n);
        for i in 0..n {
            let p = pos[i].expect("baseline validated");
            let xi_i = b.get(VarRef::one(Xi, i));
            let e = row_expr(&b, i, -1.0, Expr::new().add(xi_i, 1.0)).constant(p.row as f64);
            b.add("adapt", e, Relation::Ge);
            let e = row_expr(&b, i, 1.0, Expr::new().add(xi_i, 1.0)).constant(-(p.row as f64));
            b.add("adapt", e, Relation::Ge);
            let pi_i = b.get(VarRef::one(Pi, i));
            let mut e = Expr::new().add(pi_i, 1.0).constant(p.tab as f64);
            for t in 1..=tmax {
                e = e.add(y(&b, i, t), -(t as f64));
            }
            b.add("adapt", e, Relation::Ge);
            let mut e = Expr::new().add(pi_i, 1.0).constant(-(p.tab as f64));
            for t in 1..=tmax {
                e = e.add(y(&b, i, t), t as f64);
            }
            b.add("adapt", e, Relation::Ge);
        }
    }

    // Objective.
    let mut obj: BTreeMap<usize, f64> = BTreeMap::new();
    let mut add_obj = |k: usize, c: f64| *obj.entry(k).or_insert(0.0) += c;
    let perf_scale = match adapt {
        Some(a) => 1.0 - a.w,
        None => 1.0,
    };
    match kind {
        ObjectiveKind::TwoFold => {
            // Natural sense is maximize; flipped when blended into a minimization.
            let sign = if adapt.is_some() { -perf_scale } else { 1.0 };
            let l = &inst.lambdas;
            for i in 0..n {
                for j in 0..n {
                    let s = inst.associations.get(i, j);
                    if i == j || s == 0.0 {
                        continue;
                    }
                    add_obj(b.get(VarRef::new(Z, i, j)), sign * s * l.lambda_c);
                    add_obj(b.get(VarRef::new(W, i, j)), sign * s * l.lambda_m);
                }
            }
            for i in 0..n {
                if inst.is_loner(i) {
                    continue;
                }
                add_obj(b.get(VarRef::one(T, i)), -sign * l.lambda_f * inst.commands[i].frequency);
            }
        }
        ObjectiveKind::Ift => {
            for i in 0..n {
                if inst.is_loner(i) {
                    continue;
                }
                let f = perf_scale * inst.commands[i].frequency;
                for c in 1..=cmax {
                    add_obj(b.get(VarRef::new(Phi, i, c)), f);
                }
                if let Some(t) = preferred[i] {
                    add_obj(b.get(VarRef::new(Omega, i, t)), f);
                }
            }
        }
    }
    if let Some(a) = adapt {
        for i in 0..n {
            add_obj(b.get(VarRef::one(Pi, i)), a.w);
            add_obj(b.get(VarRef::one(Xi, i)), a.w);
        }
    }
    let sense = if kind == ObjectiveKind::TwoFold && adapt.is_none() { Sense::Maximize } else { Sense::Minimize };
    let objective = Objective { sense, terms: obj.into_iter().filter(|&(_, c)| c != 0.0).collect() };

    let mut defining_rows = vec![Vec::new(); b.variables.len()];
    for (k, con) in b.constraints.iter().enumerate() {
        for &(v, coef) in &con.terms {
            let lower = match con.relation {
                Relation::Eq => true,
                Relation::Ge => coef > 0.0,
                Relation::Le => coef < 0.0,
            };
            if lower && encode::is_cost_kind(b.variables[v].var.kind) {
                defining_rows[v].push(k);
            }
        }
    }

    Ok(MilpModel {
        variables: b.variables,
        constraints: b.constraints,
        objective,
        kind,
        digest: inst.digest(),
        n,
        max_groups: cmax,
        max_tabs: tmax,
        max_rows: rmax,
        loner: inst.loner_id,
        has_leads,
        adapt_w: adapt.map(|a| a.w),
        index: b.index,
        expectations: em,
        defining_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{AssociationMatrix, Command, FittsParams, StructuralLimits};

    fn inst(n: usize) -> TaskInstance {
        let commands = (0..n)
            .map(|id| Command { id, name: format!("c{id}"), frequency: 1.0, preferred_tab: None })
            .collect();
        let mut a = AssociationMatrix::new(n);
        if n > 1 {
            a.set(0, 1, 90.0);
        }
        TaskInstance::new(commands, a, FittsParams::default()).unwrap()
    }

    #[test]
    fn variable_counts_for_two_commands() {
        let i = inst(2).with_limits(StructuralLimits { max_tabs: 2, max_groups: 2, max_rows: 2, ..StructuralLimits::unbounded(2) });
        let m = build_model(&i, ObjectiveKind::TwoFold, None).unwrap();
        for (kind, count) in [(VarKind::X, 4), (VarKind::Y, 4), (VarKind::Q, 4), (VarKind::Z, 4), (VarKind::W, 4), (VarKind::R, 4)] {
            assert_eq!(m.count_kind(kind), count, "{kind:?}");
        }
        assert_eq!(m.count_kind(VarKind::S), 2);
        assert_eq!(m.count_kind(VarKind::Theta), 2);
        assert_eq!(m.count_kind(VarKind::U), 0);
        assert_eq!(m.objective.sense, Sense::Maximize);
    }

    #[test]
    fn names_and_families() {
        let m = build_model(&inst(3), ObjectiveKind::Ift, None).unwrap();
        assert_eq!(m.variables[0].name, "X_0_1");
        assert!(m.var_index(VarRef::one(VarKind::GroupUsed, 1)).is_some());
        let fam = m.family_counts();
        for f in ["a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k", "l", "m", "n", "lead", "phi", "delta"] {
            assert!(fam.contains_key(f), "missing family {f}");
        }
        assert!(!fam.contains_key("loner"));
        assert_eq!(m.objective.sense, Sense::Minimize);
        assert!(m.constraints.iter().all(|c| !c.terms.is_empty()));
    }

    #[test]
    fn loner_row_present() {
        let aug = crate::instance::augment_with_loner(&inst(3)).unwrap();
        let m = build_model(&aug, ObjectiveKind::Ift, None).unwrap();
        let rows: Vec<_> = m.constraints_in("loner").collect();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].relation, Relation::Eq);
        assert_eq!(rows[0].rhs, 1.0);
        assert_eq!(rows[0].terms.len(), m.max_groups);
    }

    #[test]
    fn rejects_small_limits_and_bad_weight() {
        let i = inst(4).with_limits(StructuralLimits { max_tabs: 1, max_groups: 1, max_rows: 2, ..StructuralLimits::unbounded(4) });
        assert!(matches!(build_model(&i, ObjectiveKind::Ift, None), Err(MilpError::LimitsTooSmall { .. })));
        let base = MenuLayout::from_nested(vec![vec![vec![0, 1]]]);
        assert_eq!(
            build_model(&inst(2), ObjectiveKind::Ift, Some((&base, 2.0))),
            Err(MilpError::InvalidWeight(2.0))
        );
    }
}
