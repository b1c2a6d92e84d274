//! Exact and heuristic layout search.
//!
//! Every solver minimizes a single cost: the foraging cost, the negated
//! two-fold value, or a blend with the distance to a baseline layout.
//! Layouts within `1e-12 * max(1, |cost|)` of the best cost are ranked by a
//! tie key (distance to the baseline, then boundary changes, then the
//! lexicographic order of nested id lists), so brute force and branch and
//! bound return the very same layout.

mod anneal;
mod bnb;
mod brute;
mod front;

use serde::{Deserialize, Serialize};

use crate::evaluator::{blend, ift_on_view, twofold_on_view, ObjectiveKind};
use crate::instance::{compute_expectations, ExpectationMatrix, InstanceError, TaskInstance};
use crate::layout::{Boundary, LayoutError, LayoutView, MenuLayout};

pub use anneal::{solve_anneal, solve_anneal_problem, AnnealConfig};
pub use bnb::{bnb_bound, solve_bnb, solve_bnb_problem};
pub use brute::{solve_brute, solve_brute_problem};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("brute force is limited to {max} commands, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("adaptation weight {0} is outside [0, 1]")]
    InvalidWeight(f64),
    #[error("invalid annealing configuration: {0}")]
    InvalidConfig(String),
    #[error("no layout satisfies the structural limits")]
    NoFeasibleLayout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Brute,
    Bnb,
    Anneal,
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "brute" => Ok(Method::Brute),
            "bnb" => Ok(Method::Bnb),
            "anneal" => Ok(Method::Anneal),
            other => Err(format!("unknown solver {other:?} (expected bnb, anneal or brute)")),
        }
    }
}

/// A solver and its settings.
#[derive(Debug, Clone, PartialEq)]
pub enum SolverChoice {
    Brute,
    Bnb { time_limit: Option<std::time::Duration> },
    Anneal(AnnealConfig),
}

impl SolverChoice {
    pub fn method(&self) -> Method {
        match self {
            SolverChoice::Brute => Method::Brute,
            SolverChoice::Bnb { .. } => Method::Bnb,
            SolverChoice::Anneal(_) => Method::Anneal,
        }
    }

    /// Runs the solver; `start` warm-starts branch and bound and seeds
    /// the annealing chain.
    pub fn solve(&self, problem: &Problem, start: Option<&MenuLayout>) -> Result<SolveReport, SolveError> {
        match self {
            SolverChoice::Brute => solve_brute_problem(problem),
            SolverChoice::Bnb { time_limit } => solve_bnb_problem(problem, *time_limit, start),
            SolverChoice::Anneal(cfg) => solve_anneal_problem(problem, cfg, start),
        }
    }
}

/// Outcome of a solver run.
///
/// `objective` and `best_bound` are in the objective's natural sense
/// (maximized two-fold value, minimized foraging cost, minimized blend when
/// adapting). Annealing leaves the bound and gap empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub layout: MenuLayout,
    pub objective: f64,
    pub best_bound: Option<f64>,
    pub gap: Option<f64>,
    pub nodes_explored: u64,
    pub evaluations: u64,
    pub incumbent_updates: u64,
    pub wall_time: f64,
    pub method: Method,
    pub seed: Option<u64>,
    pub objective_kind: ObjectiveKind,
    /// Adaptation weight, when optimizing a blend.
    pub adapt_w: Option<f64>,
    /// Distance to the baseline, when optimizing a blend.
    pub distance: Option<usize>,
    /// Performance term in minimization sense, when optimizing a blend.
    pub performance: Option<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct AdaptTarget {
    pub w: f64,
    pub tab: Vec<usize>,
    pub row: Vec<usize>,
    pub lead: Vec<bool>,
}

/// An instance, an objective and optionally a baseline to stay close to.
#[derive(Debug, Clone)]
pub struct Problem {
    pub(crate) inst: TaskInstance,
    pub(crate) kind: ObjectiveKind,
    pub(crate) e: ExpectationMatrix,
    pub(crate) adapt: Option<AdaptTarget>,
    /// Commands by descending frequency, ties by id.
    pub(crate) branch_order: Vec<usize>,
}

/// Costs this close to the best are ties: `1e-12 * max(1, |v|)`.
pub(crate) fn tolerance(v: f64) -> f64 {
    1e-12 * v.abs().max(1.0)
}

/// Slack added to the best cost before pruning on a bound.
pub(crate) fn prune_slack(v: f64) -> f64 {
    1e-9 * v.abs().max(1.0)
}

impl Problem {
    pub fn new(inst: &TaskInstance, kind: ObjectiveKind) -> Result<Self, SolveError> {
        inst.validate()?;
        let mut branch_order: Vec<usize> = (0..inst.n()).collect();
        branch_order.sort_by(|&a, &b| {
            inst.commands[b].frequency.total_cmp(&inst.commands[a].frequency).then(a.cmp(&b))
        });
        Ok(Problem { inst: inst.clone(), kind, e: compute_expectations(inst), adapt: None, branch_order })
    }

    /// Minimizes `w * distance + (1 - w) * performance` against `baseline`.
    pub fn adapted(inst: &TaskInstance, kind: ObjectiveKind, baseline: &MenuLayout, w: f64) -> Result<Self, SolveError> {
        if !(0.0..=1.0).contains(&w) {
            return Err(SolveError::InvalidWeight(w));
        }
        baseline.ensure_valid(inst.n(), inst.loner_id)?;
        let mut p = Problem::new(inst, kind)?;
        let view = LayoutView::from_layout(baseline, inst.n(), inst.loner_id);
        let lead = (0..inst.n()).map(|i| view.groups[view.group_of[i]].lead == i).collect();
        p.adapt = Some(AdaptTarget { w, tab: view.tab_of, row: view.row_of, lead });
        Ok(p)
    }

    pub fn instance(&self) -> &TaskInstance {
        &self.inst
    }

    pub fn kind(&self) -> ObjectiveKind {
        self.kind
    }

    pub fn adapt_weight(&self) -> Option<f64> {
        self.adapt.as_ref().map(|a| a.w)
    }

    pub(crate) fn n(&self) -> usize {
        self.inst.n()
    }

    pub(crate) fn performance(&self, view: &LayoutView) -> f64 {
        match self.kind {
            ObjectiveKind::TwoFold => -twofold_on_view(view, &self.inst),
            ObjectiveKind::Ift => ift_on_view(view, &self.inst, &self.e, None),
        }
    }

    pub(crate) fn distance(&self, view: &LayoutView) -> usize {
        match &self.adapt {
            Some(a) => (0..self.n()).map(|i| view.tab_of[i].abs_diff(a.tab[i]) + view.row_of[i].abs_diff(a.row[i])).sum(),
            None => 0,
        }
    }

    /// The minimized cost of a complete layout view.
    pub(crate) fn cost(&self, view: &LayoutView) -> f64 {
        let perf = self.performance(view);
        match &self.adapt {
            Some(a) => blend(a.w, self.distance(view) as f64, perf),
            None => perf,
        }
    }

    /// First two components of the tie key.
    pub(crate) fn tie(&self, view: &LayoutView) -> (usize, usize) {
        match &self.adapt {
            Some(a) => {
                let changes =
                    (0..self.n()).filter(|&i| (view.groups[view.group_of[i]].lead == i) != a.lead[i]).count();
                (self.distance(view), changes)
            }
            None => (0, 0),
        }
    }

    /// Checks that a layout is a candidate of this problem: valid, within
    /// limits, with the loner leading its group.
    pub fn check_candidate(&self, layout: &MenuLayout) -> Result<(), SolveError> {
        layout.ensure_valid(self.n(), self.inst.loner_id)?;
        layout.check_limits(&self.inst.limits)?;
        Ok(())
    }

    /// Cost of a layout in minimization sense.
    pub fn cost_of(&self, layout: &MenuLayout) -> Result<f64, SolveError> {
        layout.ensure_valid(self.n(), self.inst.loner_id)?;
        Ok(self.cost(&LayoutView::from_layout(layout, self.n(), self.inst.loner_id)))
    }

    /// Converts a cost back to the natural sense used in reports.
    pub fn natural(&self, cost: f64) -> f64 {
        if self.adapt.is_some() {
            cost
        } else {
            self.kind.from_cost(cost)
        }
    }

    pub(crate) fn loner_leads(&self, order: &[usize], gaps: &[Boundary]) -> bool {
        match self.inst.loner_id {
            Some(k) => order.iter().position(|&id| id == k).is_none_or(|p| p == 0 || gaps[p] != Boundary::Continue),
            None => true,
        }
    }

    pub(crate) fn report(
        &self,
        layout: MenuLayout,
        cost: f64,
        bound: Option<f64>,
        method: Method,
        stats: Stats,
    ) -> SolveReport {
        let view = LayoutView::from_layout(&layout, self.n(), self.inst.loner_id);
        let gap = bound.map(|b| (cost - b).abs() / cost.abs().max(1.0));
        let (distance, performance) = match &self.adapt {
            Some(_) => (Some(self.distance(&view)), Some(self.performance(&view))),
            None => (None, None),
        };
        SolveReport {
            layout,
            objective: self.natural(cost),
            best_bound: bound.map(|b| self.natural(b)),
            gap,
            nodes_explored: stats.nodes,
            evaluations: stats.evaluations,
            incumbent_updates: stats.updates,
            wall_time: stats.started.elapsed().as_secs_f64(),
            method,
            seed: stats.seed,
            objective_kind: self.kind,
            adapt_w: self.adapt_weight(),
            distance,
            performance,
        }
    }
}

pub(crate) struct Stats {
    pub nodes: u64,
    pub evaluations: u64,
    pub updates: u64,
    pub seed: Option<u64>,
    pub started: std::time::Instant,
}

impl Stats {
    pub fn start(seed: Option<u64>) -> Self {
        Stats { nodes: 0, evaluations: 0, updates: 0, seed, started: std::time::Instant::now() }
    }
}
