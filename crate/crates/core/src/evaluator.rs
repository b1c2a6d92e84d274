//! Direct evaluation of concrete layouts under both objectives.
//!
//! These closed forms are the reference every solver and the MILP encoding
//! are checked against. The loner magnet carries no objective weight of its
//! own and is left out of group sizes when counting false-positive effort.

use serde::{Deserialize, Serialize};

use crate::instance::{ExpectationMatrix, FittsParams, TaskInstance};
use crate::layout::{layout_distance, LayoutError, LayoutView, MenuLayout};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum EvalError {
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("expectation matrix has dimension {got}, instance has {expected} commands")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("adaptation weight {0} is outside [0, 1]")]
    InvalidWeight(f64),
}

/// Which performance objective to optimize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    /// Association reward minus frequency-weighted access time (maximized).
    TwoFold,
    /// Expected foraging cost (minimized).
    Ift,
}

impl ObjectiveKind {
    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::TwoFold => "twofold",
            ObjectiveKind::Ift => "ift",
        }
    }

    /// Converts a natural objective value into minimization sense.
    pub fn to_cost(self, value: f64) -> f64 {
        match self {
            ObjectiveKind::TwoFold => -value,
            ObjectiveKind::Ift => value,
        }
    }

    /// Inverse of [`ObjectiveKind::to_cost`].
    pub fn from_cost(self, cost: f64) -> f64 {
        self.to_cost(cost)
    }
}

impl std::str::FromStr for ObjectiveKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "twofold" | "two-fold" => Ok(ObjectiveKind::TwoFold),
            "ift" => Ok(ObjectiveKind::Ift),
            other => Err(format!("unknown objective {other:?} (expected twofold or ift)")),
        }
    }
}

/// `(a + b log2(row + 1)) + (a + b log2(tab + 1))` for 1-based `row`, `tab`.
pub fn fitts_time(row: usize, tab: usize, p: &FittsParams) -> f64 {
    p.axis_time(row) + p.axis_time(tab)
}

/// Per-command, per-group cost terms of the foraging objective.
///
/// Matrices are row-major `n x groups` with groups in reading order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IftBreakdown {
    pub commands: usize,
    pub groups: usize,
    pub access_time: Vec<f64>,
    pub alpha: Vec<f64>,
    pub sigma: Vec<f64>,
    pub delta: Vec<f64>,
    pub phi: Vec<f64>,
    /// Tab preference penalty per command.
    pub omega: Vec<f64>,
    pub total: f64,
}

impl IftBreakdown {
    fn new(n: usize, groups: usize) -> Self {
        IftBreakdown {
            commands: n,
            groups,
            access_time: vec![0.0; n],
            alpha: vec![0.0; n * groups],
            sigma: vec![0.0; n * groups],
            delta: vec![0.0; n * groups],
            phi: vec![0.0; n * groups],
            omega: vec![0.0; n],
            total: 0.0,
        }
    }

    pub fn at(&self, values: &[f64], i: usize, c: usize) -> f64 {
        values[i * self.groups + c]
    }
}

/// Two-fold value over a prepared view (maximize).
pub(crate) fn twofold_on_view(view: &LayoutView, inst: &TaskInstance) -> f64 {
    let n = inst.n();
    let l = &inst.lambdas;
    let a = &inst.associations;
    let mut reward = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let s = a.get(i, j);
            if s == 0.0 {
                continue;
            }
            let same_group = if view.group_of[i] == view.group_of[j] { l.lambda_c } else { 0.0 };
            let same_tab = if view.tab_of[i] == view.tab_of[j] { l.lambda_m } else { 0.0 };
            reward += s * (same_group + same_tab);
        }
    }
    let mut access = 0.0;
    for (i, c) in inst.commands.iter().enumerate() {
        if inst.is_loner(i) {
            continue;
        }
        access += c.frequency * fitts_time(view.row_of[i], view.tab_of[i], &inst.fitts);
    }
    reward - l.lambda_f * access
}

/// Foraging cost over a prepared view (minimize), optionally filling a
/// breakdown.
pub(crate) fn ift_on_view(
    view: &LayoutView,
    inst: &TaskInstance,
    e: &ExpectationMatrix,
    mut breakdown: Option<&mut IftBreakdown>,
) -> f64 {
    let n = inst.n();
    let l = &inst.lambdas;
    let used_groups = view.groups.len() as f64;
    let mut total = 0.0;
    for i in 0..n {
        if inst.is_loner(i) {
            continue;
        }
        let t = fitts_time(view.row_of[i], view.tab_of[i], &inst.fitts);
        let own = view.group_of[i];
        let mut inner = 0.0;
        for (c, g) in view.groups.iter().enumerate() {
            let scent = e.get(i, g.lead);
            let (access, alpha, sigma, delta) = if c == own {
                let depth = (view.row_of[i] - g.start + 1) as f64;
                (t, scent * depth, 0.0, (1.0 - scent) * used_groups)
            } else {
                (0.0, 0.0, scent * g.visible_len as f64, 0.0)
            };
            let phi = l.lambda_0 * access + l.lambda_1 * alpha + l.lambda_2 * sigma + l.lambda_3 * delta;
            inner += phi;
            if let Some(b) = breakdown.as_deref_mut() {
                let k = i * b.groups + c;
                b.alpha[k] = alpha;
                b.sigma[k] = sigma;
                b.delta[k] = delta;
                b.phi[k] = phi;
            }
        }
        let omega = match inst.commands[i].preferred_tab {
            Some(p) if view.tab_of[i] != p + 1 => l.lambda_4,
            _ => 0.0,
        };
        inner += omega;
        if let Some(b) = breakdown.as_deref_mut() {
            b.access_time[i] = t;
            b.omega[i] = omega;
        }
        total += inst.commands[i].frequency * inner;
    }
    if let Some(b) = breakdown {
        b.total = total;
    }
    total
}

fn view_of(layout: &MenuLayout, inst: &TaskInstance) -> Result<LayoutView, EvalError> {
    layout.ensure_valid(inst.n(), inst.loner_id)?;
    Ok(LayoutView::from_layout(layout, inst.n(), inst.loner_id))
}

/// Two-fold value: ordered-pair association reward for shared groups and
/// tabs minus weighted access time. Larger is better.
pub fn eval_twofold(layout: &MenuLayout, inst: &TaskInstance) -> Result<f64, EvalError> {
    let view = view_of(layout, inst)?;
    Ok(twofold_on_view(&view, inst))
}

/// Expected foraging cost and its breakdown. Smaller is better.
pub fn eval_ift(
    layout: &MenuLayout,
    inst: &TaskInstance,
    e: &ExpectationMatrix,
) -> Result<(f64, IftBreakdown), EvalError> {
    if e.dim() != inst.n() {
        return Err(EvalError::DimensionMismatch { expected: inst.n(), got: e.dim() });
    }
    let view = view_of(layout, inst)?;
    let mut breakdown = IftBreakdown::new(inst.n(), view.groups.len());
    let total = ift_on_view(&view, inst, e, Some(&mut breakdown));
    Ok((total, breakdown))
}

/// Performance of a layout in minimization sense.
pub fn eval_cost(
    layout: &MenuLayout,
    inst: &TaskInstance,
    kind: ObjectiveKind,
    e: &ExpectationMatrix,
) -> Result<f64, EvalError> {
    match kind {
        ObjectiveKind::TwoFold => Ok(-eval_twofold(layout, inst)?),
        ObjectiveKind::Ift => Ok(eval_ift(layout, inst, e)?.0),
    }
}

/// `w * distance + (1 - w) * performance`, with performance in
/// minimization sense.
pub fn eval_adapted(
    layout: &MenuLayout,
    baseline: &MenuLayout,
    inst: &TaskInstance,
    w: f64,
    kind: ObjectiveKind,
    e: &ExpectationMatrix,
) -> Result<f64, EvalError> {
    if !(0.0..=1.0).contains(&w) {
        return Err(EvalError::InvalidWeight(w));
    }
    baseline.ensure_valid(inst.n(), inst.loner_id)?;
    let perf = eval_cost(layout, inst, kind, e)?;
    let distance = layout_distance(layout, baseline)?.total() as f64;
    Ok(blend(w, distance, perf))
}

#[inline]
pub(crate) fn blend(w: f64, distance: f64, performance: f64) -> f64 {
    w * distance + (1.0 - w) * performance
}
